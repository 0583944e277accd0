use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{dataset_file, SimChannelInstance, SimError};

pub const PERFORMANCE_COLUMNS: &[&str] = &["timestamp_ms", "tx_latency_ms", "throughput_tps"];
pub const RESOURCE_COLUMNS: &[&str] = &["timestamp_ms", "host", "cpu_pct", "mem_mb"];

/// Shape of one synthetic dataset. The same spec on the same channel always
/// produces the same bytes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntheticDatasetSpec {
    pub metric_group: String,
    pub columns: Vec<String>,
    pub rows: usize,
    pub seed: u64,
}

impl SyntheticDatasetSpec {
    pub fn new(metric_group: &str, rows: usize, seed: u64) -> Self {
        let columns = match metric_group {
            "resource-consumption" => RESOURCE_COLUMNS,
            _ => PERFORMANCE_COLUMNS,
        };
        Self {
            metric_group: metric_group.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows,
            seed,
        }
    }
}

fn fnv1a(parts: &[&str]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for p in parts {
        for b in p.bytes().chain(std::iter::once(0xff)) {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

/// Writes `<dir>/<channel>-<metric_group>.csv` and returns its path.
pub fn generate_dataset(
    instance: &SimChannelInstance,
    spec: &SyntheticDatasetSpec,
    dir: &Path,
) -> Result<PathBuf, SimError> {
    let mut rng = ChaCha8Rng::seed_from_u64(
        spec.seed ^ fnv1a(&[&instance.channel_id, &spec.metric_group, &instance.platform]),
    );
    let mut csv = spec.columns.join(",");
    csv.push('\n');
    if spec.metric_group == "resource-consumption" {
        let fallback = ["testbed".to_string()];
        let hosts: &[String] = if instance.hosts.is_empty() {
            &fallback
        } else {
            &instance.hosts
        };
        for i in 0..spec.rows {
            let host = &hosts[i % hosts.len()];
            let ts = (i / hosts.len()) as u64 * 1000;
            let cpu: f64 = rng.gen_range(2.0..95.0);
            let mem: f64 = rng.gen_range(120.0..3800.0);
            let _ = writeln!(csv, "{ts},{host},{cpu:.2},{mem:.1}");
        }
    } else {
        // Rough scale per consensus family; no fidelity is implied.
        let (latency, tps) = if instance.platform.starts_with("ethereum-pow") {
            (1800.0, 14.0)
        } else if instance.platform.starts_with("ethereum-poa") {
            (450.0, 55.0)
        } else {
            (50.0, 100.0)
        };
        for i in 0..spec.rows {
            let ts = i as u64 * 1000;
            let l: f64 = latency * rng.gen_range(0.6..1.6);
            let t: f64 = tps * rng.gen_range(0.7..1.3);
            let _ = writeln!(csv, "{ts},{l:.2},{t:.2}");
        }
    }
    std::fs::create_dir_all(dir)?;
    let path = dataset_file(dir, &instance.channel_id, &spec.metric_group);
    std::fs::write(&path, csv)?;
    Ok(path)
}
