use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use super::builtin;
use super::external::{describe_external, ExternalAction};
use super::{
    ActionDescriptor, ActionError, ActionHandler, ActionInput, ActionKind, ActionOutcome,
    InvocationContext,
};
use crate::clock::{self, Span};

#[derive(Debug, Clone)]
pub struct RegistryEntry {
    pub descriptor: ActionDescriptor,
    pub handler: Arc<dyn ActionHandler>,
}

impl RegistryEntry {
    pub fn new(descriptor: ActionDescriptor, handler: Arc<dyn ActionHandler>) -> Self {
        Self {
            descriptor,
            handler,
        }
    }

    pub fn id(&self) -> &str {
        &self.descriptor.action_id
    }

    pub fn kind(&self) -> ActionKind {
        self.descriptor.kind
    }

    /// Runs the action after checking the input variant against its kind.
    /// Deployers without teardown support answer `Teardown` with a no-op success.
    pub fn invoke(
        &self,
        ctx: &InvocationContext<'_>,
        input: &ActionInput,
    ) -> Result<ActionOutcome, ActionError> {
        let want = input.required_kind();
        if want != self.kind() {
            return Err(ActionError::KindMismatch {
                action_id: self.id().to_string(),
                expected: want,
                found: self.kind(),
            });
        }
        if matches!(input, ActionInput::Teardown { .. }) && !self.descriptor.teardown {
            return Ok(ActionOutcome::success(super::OutcomePayload::TeardownResult));
        }
        self.handler.invoke(ctx, input)
    }
}

/// The action pool available to the planner, in manifest order.
#[derive(Debug, Clone, Default)]
pub struct ActionRegistry {
    entries: Vec<RegistryEntry>,
    load_span: Option<Span>,
}

impl ActionRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_entries(entries: Vec<RegistryEntry>) -> Result<Self, ActionError> {
        let mut reg = Self::new();
        for e in entries {
            reg.push(e)?;
        }
        Ok(reg)
    }

    pub fn push(&mut self, entry: RegistryEntry) -> Result<(), ActionError> {
        if self.get(entry.id()).is_some() {
            return Err(ActionError::DuplicateId(entry.id().to_string()));
        }
        self.entries.push(entry);
        Ok(())
    }

    /// Registry of built-in actions by name, in the given order.
    pub fn builtin(names: &[&str]) -> Result<Self, ActionError> {
        let start = clock::now_ms();
        let mut reg = Self::new();
        for name in names {
            reg.push(builtin::builtin_entry(name)?)?;
        }
        reg.load_span = Some(Span::new(start, clock::now_ms()));
        Ok(reg)
    }

    /// The seven-action case-study pool.
    pub fn case_study() -> Self {
        Self::builtin(builtin::CASE_STUDY_POOL).expect("built-in pool is consistent")
    }

    /// A copy without the named action.
    pub fn without(&self, action_id: &str) -> Self {
        Self {
            entries: self
                .entries
                .iter()
                .filter(|e| e.id() != action_id)
                .cloned()
                .collect(),
            load_span: self.load_span,
        }
    }

    pub fn entries(&self) -> &[RegistryEntry] {
        &self.entries
    }

    pub fn get(&self, action_id: &str) -> Option<&RegistryEntry> {
        self.entries.iter().find(|e| e.id() == action_id)
    }

    pub fn of_kind(&self, kind: ActionKind) -> impl Iterator<Item = &RegistryEntry> {
        self.entries.iter().filter(move |e| e.kind() == kind)
    }

    pub fn verifiers(&self) -> impl Iterator<Item = &RegistryEntry> {
        self.of_kind(ActionKind::Verifier)
    }

    pub fn deployers(&self) -> impl Iterator<Item = &RegistryEntry> {
        self.of_kind(ActionKind::Deployer)
    }

    pub fn evaluators(&self) -> impl Iterator<Item = &RegistryEntry> {
        self.of_kind(ActionKind::Evaluator)
    }

    pub fn descriptors(&self) -> Vec<&ActionDescriptor> {
        self.entries.iter().map(|e| &e.descriptor).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Wall-clock interval spent loading the registry (LOAD-MODULES).
    pub fn load_span(&self) -> Option<Span> {
        self.load_span
    }
}

/// Loads a registry manifest: one `builtin:<name>` or `exec:<path>` per
/// line, `#` starts a comment. Relative exec paths resolve against the
/// manifest's directory.
pub fn load_registry(path: &Path, timeout: Duration) -> Result<ActionRegistry, ActionError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ActionError::Manifest(format!("{}: {e}", path.display())))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    load_registry_str(&text, &base, timeout)
}

pub fn load_registry_str(
    manifest: &str,
    base_dir: &Path,
    timeout: Duration,
) -> Result<ActionRegistry, ActionError> {
    let start = clock::now_ms();
    let mut reg = ActionRegistry::new();
    let mut seen = HashSet::new();
    for (lineno, raw) in manifest.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (scheme, target) = line.split_once(':').ok_or_else(|| {
            ActionError::Manifest(format!(
                "line {}: expected `builtin:<name>` or `exec:<path>`, got `{line}`",
                lineno + 1
            ))
        })?;
        let target = target.trim();
        let entry = match scheme.trim() {
            "builtin" => builtin::builtin_entry(target)?,
            "exec" => {
                let mut exe = PathBuf::from(target);
                if exe.is_relative() {
                    exe = base_dir.join(exe);
                }
                let descriptor = describe_external(&exe, timeout)?;
                let handler = ExternalAction::new(&descriptor.action_id, exe);
                RegistryEntry::new(descriptor, Arc::new(handler))
            }
            other => {
                return Err(ActionError::Manifest(format!(
                    "line {}: unknown scheme `{other}`",
                    lineno + 1
                )))
            }
        };
        if !seen.insert(entry.id().to_string()) {
            return Err(ActionError::DuplicateId(entry.id().to_string()));
        }
        reg.entries.push(entry);
    }
    reg.load_span = Some(Span::new(start, clock::now_ms()));
    Ok(reg)
}
