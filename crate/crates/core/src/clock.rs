//! Millisecond wall-clock timestamps on a monotonic base.
//!
//! All timestamps in a process derive from one anchor, so back-to-back
//! intervals that share a boundary instant telescope exactly.

use std::sync::OnceLock;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

fn anchor() -> &'static (Instant, u64) {
    static ANCHOR: OnceLock<(Instant, u64)> = OnceLock::new();
    ANCHOR.get_or_init(|| {
        let wall = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_millis() as u64)
            .unwrap_or(0);
        (Instant::now(), wall)
    })
}

/// Epoch milliseconds of an instant.
pub fn epoch_ms(at: Instant) -> u64 {
    let (base, wall) = *anchor();
    wall + at.saturating_duration_since(base).as_millis() as u64
}

pub fn now_ms() -> u64 {
    epoch_ms(Instant::now())
}

/// A closed interval of epoch milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub start: u64,
    pub end: u64,
}

impl Span {
    pub fn new(start: u64, end: u64) -> Self {
        Self {
            start,
            end: end.max(start),
        }
    }

    pub fn duration_ms(&self) -> u64 {
        self.end - self.start
    }
}
