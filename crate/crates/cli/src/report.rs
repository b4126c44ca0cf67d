use std::time::Instant;

use riccati_core::{Mat, ModelTriple};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub command: &'static str,
    /// SHA-256 of the canonical model JSON; for multi-model runs, of the
    /// concatenated canonical documents in case order.
    pub model_fingerprint: Option<String>,
    pub seed: Option<u64>,
    pub outputs: Value,
    pub checks: CheckSummary,
    pub timings: Vec<Timing>,
}

#[derive(Debug, Default, Clone, Copy, Serialize)]
pub struct CheckSummary {
    pub passed: usize,
    pub failed: usize,
}

impl CheckSummary {
    pub fn from_flags(flags: impl IntoIterator<Item = bool>) -> Self {
        flags.into_iter().fold(Self::default(), |mut s, ok| {
            if ok {
                s.passed += 1;
            } else {
                s.failed += 1;
            }
            s
        })
    }

    pub fn add(&mut self, other: CheckSummary) {
        self.passed += other.passed;
        self.failed += other.failed;
    }

    pub fn ok(&self) -> bool {
        self.failed == 0
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Timing {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Default)]
pub struct Stopwatch {
    timings: Vec<Timing>,
}

impl Stopwatch {
    pub fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.timings.push(Timing {
            stage: stage.to_string(),
            seconds: start.elapsed().as_secs_f64(),
        });
        out
    }

    pub fn into_timings(self) -> Vec<Timing> {
        self.timings
    }
}

/// Row-major nested arrays, the layout model files use.
pub fn rows(m: &Mat) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub fn canonical_json(model: &ModelTriple, q: Option<&Mat>) -> String {
    model.to_json(q)
}

pub fn fingerprint<'a>(docs: impl IntoIterator<Item = &'a str>) -> String {
    let mut h = Sha256::new();
    for d in docs {
        h.update(d.as_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}
