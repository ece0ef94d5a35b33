//! Latency comparison between offline linking and a simulated API-backed
//! linker that runs the same logic behind injected per-stage delays.

use std::thread::sleep;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::linker::{LinkError, LinkRequest, LinkResult, Linker};

const SECONDS_PER_DAY: f64 = 86_400.0;

/// Injected delays for the simulated online backend.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OnlineLatency {
    pub candidate_stage: Duration,
    pub type_stage: Duration,
}

impl OnlineLatency {
    /// Delays given in seconds, multiplied by `scale`.
    pub fn from_seconds(candidate_s: f64, type_s: f64, scale: f64) -> Self {
        OnlineLatency {
            candidate_stage: Duration::from_secs_f64((candidate_s * scale).max(0.0)),
            type_stage: Duration::from_secs_f64((type_s * scale).max(0.0)),
        }
    }
}

impl Default for OnlineLatency {
    /// 12 s candidate retrieval + 18 s type retrieval per mention.
    fn default() -> Self {
        Self::from_seconds(12.0, 18.0, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Backend {
    Offline,
    SimulatedOnline(OnlineLatency),
}

impl Backend {
    fn name(&self) -> &'static str {
        match self {
            Backend::Offline => "offline",
            Backend::SimulatedOnline(_) => "simulated_online",
        }
    }
}

/// Per-mention times in milliseconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct StageTimes {
    pub candidate_ms: f64,
    pub type_ms: f64,
    pub total_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BackendReport {
    pub backend: String,
    pub mentions: usize,
    pub errors: usize,
    pub median: StageTimes,
    pub mean_total_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorpusProjection {
    pub tables: u64,
    pub cells_per_table: u64,
    pub offline_days: f64,
    pub online_days: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatencyReport {
    pub offline: BackendReport,
    pub online: BackendReport,
    pub online_latency: OnlineLatency,
    /// Median online total over median offline total.
    pub speedup: f64,
    pub projection: CorpusProjection,
    /// Mentions whose results differ between the two backends; always 0
    /// unless something is broken.
    pub answer_mismatches: usize,
}

/// Days needed to link `tables * cells_per_table` mentions at the given
/// per-mention time.
pub fn project_corpus_days(tables: u64, cells_per_table: u64, seconds_per_mention: f64) -> f64 {
    tables as f64 * cells_per_table as f64 * seconds_per_mention / SECONDS_PER_DAY
}

pub fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    if values.len().is_multiple_of(2) {
        (values[mid - 1] + values[mid]) / 2.0
    } else {
        values[mid]
    }
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1000.0
}

/// Links every mention sequentially on one backend, timing each stage.
pub fn run_backend(
    linker: &Linker,
    backend: Backend,
    mentions: &[LinkRequest],
) -> (BackendReport, Vec<Result<LinkResult, LinkError>>) {
    let mut candidate = Vec::with_capacity(mentions.len());
    let mut types = Vec::with_capacity(mentions.len());
    let mut totals = Vec::with_capacity(mentions.len());
    let mut results = Vec::with_capacity(mentions.len());

    for req in mentions {
        let start = Instant::now();
        if let Backend::SimulatedOnline(lat) = backend {
            sleep(lat.candidate_stage);
        }
        let retrieved = linker.retrieve(&req.mention);
        let after_candidates = Instant::now();
        let result = retrieved.map(|raw| {
            if let Backend::SimulatedOnline(lat) = backend {
                sleep(lat.type_stage);
            }
            linker.rank(req, raw)
        });
        let end = Instant::now();
        candidate.push(ms(after_candidates - start));
        types.push(ms(end - after_candidates));
        totals.push(ms(end - start));
        results.push(result);
    }

    let errors = results.iter().filter(|r| r.is_err()).count();
    let mean_total_ms = if totals.is_empty() { 0.0 } else { totals.iter().sum::<f64>() / totals.len() as f64 };
    let report = BackendReport {
        backend: backend.name().to_owned(),
        mentions: mentions.len(),
        errors,
        median: StageTimes {
            candidate_ms: median(&mut candidate),
            type_ms: median(&mut types),
            total_ms: median(&mut totals),
        },
        mean_total_ms,
    };
    (report, results)
}

/// Runs both backends over the same mentions and compares them.
pub fn bench(
    linker: &Linker,
    latency: OnlineLatency,
    mentions: &[LinkRequest],
    tables: u64,
    cells_per_table: u64,
) -> LatencyReport {
    let (offline, offline_results) = run_backend(linker, Backend::Offline, mentions);
    let (online, online_results) = run_backend(linker, Backend::SimulatedOnline(latency), mentions);
    let answer_mismatches = offline_results.iter().zip(&online_results).filter(|(a, b)| a != b).count();
    let speedup = if offline.median.total_ms > 0.0 {
        online.median.total_ms / offline.median.total_ms
    } else {
        f64::INFINITY
    };
    let projection = CorpusProjection {
        tables,
        cells_per_table,
        offline_days: project_corpus_days(tables, cells_per_table, offline.median.total_ms / 1000.0),
        online_days: project_corpus_days(tables, cells_per_table, online.median.total_ms / 1000.0),
    };
    LatencyReport { offline, online, online_latency: latency, speedup, projection, answer_mismatches }
}
