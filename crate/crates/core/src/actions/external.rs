//! Actions shipped as standalone executables.
//!
//! Protocol: `<exe> describe` prints the descriptor JSON. `<exe> <verb>` for
//! `verify|deploy|evaluate|teardown` reads one request JSON object on stdin
//! and prints one response JSON object on stdout. Exit status 0 means
//! success; anything else is a failure whose stderr becomes the diagnostics.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitStatus, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use serde_json::{json, Value};

use super::{
    ActionDescriptor, ActionError, ActionHandler, ActionInput, ActionOutcome, InvocationContext,
    OutcomePayload,
};
use crate::bnd::VerificationReport;

#[derive(Debug, Clone)]
pub struct ExternalAction {
    action_id: String,
    path: PathBuf,
}

struct Captured {
    status: ExitStatus,
    stdout: String,
    stderr: String,
}

impl ExternalAction {
    pub fn new(action_id: &str, path: impl Into<PathBuf>) -> Self {
        Self {
            action_id: action_id.to_string(),
            path: path.into(),
        }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    fn request_body(ctx: &InvocationContext<'_>, input: &ActionInput) -> Value {
        let mut body = match input {
            ActionInput::Verify { request } => json!({ "request": request }),
            ActionInput::Deploy { fragment } => {
                json!({ "channel_fragment": fragment.to_model().to_json_value() })
            }
            ActionInput::Evaluate {
                fragment,
                metric_group,
                endpoints,
            } => json!({
                "channel_fragment": fragment.to_model().to_json_value(),
                "metric_group": metric_group,
                "endpoints": endpoints,
                "dataset_dir": ctx.dataset_dir,
            }),
            ActionInput::Teardown {
                channel_id,
                endpoints,
            } => json!({ "channel_id": channel_id, "endpoints": endpoints }),
        };
        body["input_kind"] = json!(input.verb());
        body["experiment_id"] = json!(ctx.experiment_id);
        body
    }

    fn protocol(&self, reason: impl Into<String>) -> ActionError {
        ActionError::Protocol {
            action_id: self.action_id.clone(),
            reason: reason.into(),
        }
    }

    fn parse_response(&self, input: &ActionInput, stdout: &str) -> Result<ActionOutcome, ActionError> {
        let value: Value = serde_json::from_str(stdout.trim())
            .map_err(|e| self.protocol(format!("response is not JSON: {e}")))?;
        let obj = value
            .as_object()
            .ok_or_else(|| self.protocol("response must be a JSON object"))?;
        match obj.get("status").and_then(Value::as_str) {
            Some("failure") => {
                let diag = obj
                    .get("diagnostics")
                    .and_then(Value::as_str)
                    .unwrap_or_default();
                return Ok(ActionOutcome::failure(diag));
            }
            Some("success") | None => {}
            Some(other) => return Err(self.protocol(format!("unknown status `{other}`"))),
        }
        let strings = |key: &str| -> Result<Vec<String>, ActionError> {
            serde_json::from_value(obj.get(key).cloned().unwrap_or(Value::Array(vec![])))
                .map_err(|e| self.protocol(format!("`{key}` must be a list of strings: {e}")))
        };
        let payload = match input {
            ActionInput::Verify { .. } => {
                let report: VerificationReport = serde_json::from_value(value.clone())
                    .map_err(|e| self.protocol(format!("invalid verification report: {e}")))?;
                OutcomePayload::VerifyReport(report)
            }
            ActionInput::Deploy { fragment } => OutcomePayload::DeployResult {
                channel_id: fragment.channel_id().to_string(),
                endpoints: strings("endpoints")?,
            },
            ActionInput::Evaluate { .. } => OutcomePayload::EvalResult {
                datasets: strings("datasets")?,
            },
            ActionInput::Teardown { .. } => OutcomePayload::TeardownResult,
        };
        Ok(ActionOutcome::success(payload))
    }
}

impl ActionHandler for ExternalAction {
    fn invoke(
        &self,
        ctx: &InvocationContext<'_>,
        input: &ActionInput,
    ) -> Result<ActionOutcome, ActionError> {
        let body = Self::request_body(ctx, input).to_string();
        let out = run(&self.path, input.verb(), Some(&body), ctx.timeout).map_err(|e| match e {
            RunError::Timeout => ActionError::Timeout {
                action_id: self.action_id.clone(),
                timeout: ctx.timeout,
            },
            RunError::Io(e) => ActionError::Io(e),
        })?;
        if !out.status.success() {
            let code = out
                .status
                .code()
                .map_or_else(|| "a signal".to_string(), |c| format!("status {c}"));
            let mut diag = format!("`{}` exited with {code}", self.action_id);
            if !out.stderr.trim().is_empty() {
                diag.push_str(": ");
                diag.push_str(out.stderr.trim());
            }
            return Ok(ActionOutcome::failure(diag));
        }
        self.parse_response(input, &out.stdout)
    }
}

/// Runs `<exe> describe` and validates the descriptor it prints.
pub fn describe_external(path: &Path, timeout: Duration) -> Result<ActionDescriptor, ActionError> {
    let fail = |reason: String| ActionError::Describe {
        path: path.display().to_string(),
        reason,
    };
    let out = run(path, "describe", None, timeout).map_err(|e| match e {
        RunError::Timeout => fail(format!("timed out after {timeout:?}")),
        RunError::Io(e) => fail(e.to_string()),
    })?;
    if !out.status.success() {
        return Err(fail(format!("exited with {}: {}", out.status, out.stderr.trim())));
    }
    let desc: ActionDescriptor =
        serde_json::from_str(out.stdout.trim()).map_err(|e| fail(format!("invalid descriptor JSON: {e}")))?;
    desc.normalized().map_err(|e| fail(e.to_string()))
}

enum RunError {
    Timeout,
    Io(std::io::Error),
}

fn run(path: &Path, verb: &str, stdin: Option<&str>, timeout: Duration) -> Result<Captured, RunError> {
    let mut child = Command::new(path)
        .arg(verb)
        .stdin(if stdin.is_some() { Stdio::piped() } else { Stdio::null() })
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(RunError::Io)?;

    let mut stdout = child.stdout.take().expect("piped");
    let mut stderr = child.stderr.take().expect("piped");
    let out_reader = thread::spawn(move || {
        let mut s = String::new();
        stdout.read_to_string(&mut s).map(|_| s)
    });
    let err_reader = thread::spawn(move || {
        let mut s = String::new();
        stderr.read_to_string(&mut s).map(|_| s)
    });
    if let (Some(body), Some(mut pipe)) = (stdin, child.stdin.take()) {
        // A child that exits without reading its input closes the pipe early.
        let _ = pipe.write_all(body.as_bytes());
    }

    let deadline = Instant::now() + timeout;
    let status = loop {
        if let Some(status) = child.try_wait().map_err(RunError::Io)? {
            break status;
        }
        if Instant::now() >= deadline {
            let _ = child.kill();
            let _ = child.wait();
            return Err(RunError::Timeout);
        }
        thread::sleep(Duration::from_millis(2));
    };
    let stdout = out_reader
        .join()
        .unwrap_or_else(|_| Ok(String::new()))
        .map_err(RunError::Io)?;
    let stderr = err_reader.join().unwrap_or_else(|_| Ok(String::new())).unwrap_or_default();
    Ok(Captured {
        status,
        stdout,
        stderr,
    })
}
