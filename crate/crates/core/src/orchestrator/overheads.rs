use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Activity, ActivityLogEntry};

/// Statistics of one activity over experiments, in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ActivityStats {
    pub samples: usize,
    pub mean_ms: f64,
    pub max_ms: f64,
    /// Population standard deviation.
    pub stddev_ms: f64,
}

impl ActivityStats {
    fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self::default();
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Self {
            samples: values.len(),
            mean_ms: mean,
            max_ms: values.iter().copied().fold(f64::MIN, f64::max),
            stddev_ms: var.sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct OverheadReport {
    pub activities: BTreeMap<Activity, ActivityStats>,
    /// Sum of the mean durations of the overhead activities.
    pub total_overhead_mean: f64,
    /// Sum of the mean durations of VERIFY, DEPLOY and EVALUATION.
    pub actual_work_mean: f64,
}

impl OverheadReport {
    pub fn mean(&self, activity: Activity) -> f64 {
        self.activities.get(&activity).map_or(0.0, |s| s.mean_ms)
    }

    /// Overhead share of overhead plus work, in [0, 1].
    pub fn overhead_ratio(&self) -> f64 {
        let total = self.total_overhead_mean + self.actual_work_mean;
        if total == 0.0 {
            0.0
        } else {
            self.total_overhead_mean / total
        }
    }
}

/// Per-activity statistics over a log.
///
/// Durations are first summed per (experiment, activity), so an activity
/// logged several times in one experiment (orchestration gaps, one DEPLOY
/// per channel) contributes one per-experiment sample.
pub fn compute_overheads(entries: &[ActivityLogEntry]) -> OverheadReport {
    compute_overheads_from_durations(
        entries
            .iter()
            .map(|e| (e.experiment_id.as_str(), e.activity, e.duration_ms() as f64)),
    )
}

/// Same as [`compute_overheads`] over raw `(experiment, activity, ms)` samples.
pub fn compute_overheads_from_durations<'a, I>(samples: I) -> OverheadReport
where
    I: IntoIterator<Item = (&'a str, Activity, f64)>,
{
    let mut per_experiment: BTreeMap<(Activity, &'a str), f64> = BTreeMap::new();
    for (exp, activity, ms) in samples {
        *per_experiment.entry((activity, exp)).or_insert(0.0) += ms;
    }
    let mut grouped: BTreeMap<Activity, Vec<f64>> = BTreeMap::new();
    for ((activity, _), total) in per_experiment {
        grouped.entry(activity).or_default().push(total);
    }
    let activities: BTreeMap<Activity, ActivityStats> = grouped
        .into_iter()
        .map(|(a, v)| (a, ActivityStats::of(&v)))
        .collect();
    let sum = |set: &[Activity]| -> f64 {
        set.iter()
            .map(|a| activities.get(a).map_or(0.0, |s| s.mean_ms))
            .sum()
    };
    OverheadReport {
        total_overhead_mean: sum(&Activity::OVERHEAD),
        actual_work_mean: sum(&Activity::WORK),
        activities,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn published_means_sum_to_overhead() {
        let r = compute_overheads_from_durations([
            ("e", Activity::StoreExpRecord, 0.48),
            ("e", Activity::OrchestrationOverheads, 5.66),
            ("e", Activity::CreateExpRecord, 42.0),
            ("e", Activity::PlanningOverheads, 47.37),
        ]);
        assert!((r.total_overhead_mean - 95.51).abs() < 1e-9);
        assert_eq!(r.actual_work_mean, 0.0);
    }

    #[test]
    fn empty_log_is_all_zero() {
        let r = compute_overheads(&[]);
        assert!(r.activities.is_empty());
        assert_eq!(r.total_overhead_mean, 0.0);
        assert_eq!(r.actual_work_mean, 0.0);
        assert_eq!(r.overhead_ratio(), 0.0);
    }

    #[test]
    fn single_deploy_is_work() {
        let e = ActivityLogEntry {
            experiment_id: "x".into(),
            activity: Activity::Deploy,
            start: 1000,
            end: 41_377,
            detail: String::new(),
        };
        let r = compute_overheads(&[e]);
        assert_eq!(r.actual_work_mean, 40_377.0);
        assert_eq!(r.activities[&Activity::Deploy].max_ms, 40_377.0);
        assert_eq!(r.activities[&Activity::Deploy].stddev_ms, 0.0);
    }

    #[test]
    fn repeated_entries_sum_per_experiment() {
        let r = compute_overheads_from_durations([
            ("a", Activity::OrchestrationOverheads, 1.0),
            ("a", Activity::OrchestrationOverheads, 3.0),
            ("b", Activity::OrchestrationOverheads, 2.0),
        ]);
        let s = r.activities[&Activity::OrchestrationOverheads];
        assert_eq!(s.samples, 2);
        assert_eq!(s.mean_ms, 3.0);
        assert_eq!(s.max_ms, 4.0);
        assert_eq!(s.stddev_ms, 1.0);
    }
}
