//! Report schema shared by every subcommand, plus per-run metrics. The
//! JSON layout is pinned by `schemas/report.schema.json` and validated in
//! the integration tests.

use crate::backtrack::LoopLog;
use crate::detect::{Status, Verdict};
use crate::eval::Fact;
use crate::index::CacheStats;
use crate::sbc::model::AppModel;
use serde::Serialize;
use std::collections::BTreeMap;

#[derive(Debug, Clone, Serialize)]
pub struct VerdictReport {
    pub spec_id: String,
    pub severity: String,
    pub status: Status,
    /// Analysis-form signature of the sink's containing method.
    pub method: String,
    pub file: String,
    pub line: u32,
    pub matched: Vec<String>,
    pub facts: BTreeMap<String, Fact>,
    pub witness: Vec<String>,
    pub unpaired: bool,
    /// True when the sink-method cache answered without re-analysis.
    pub cached: bool,
}

impl VerdictReport {
    pub fn from_verdict(v: &Verdict, model: &AppModel, cached: bool) -> VerdictReport {
        VerdictReport {
            spec_id: v.spec_id.clone(),
            severity: v.severity.clone(),
            status: v.status,
            method: v.method.render_analysis(),
            file: model
                .files
                .get(v.file as usize)
                .map(|f| f.name.clone())
                .unwrap_or_default(),
            line: v.line,
            matched: v.matched.clone(),
            facts: v.facts.clone(),
            witness: v.witness.clone(),
            unpaired: v.unpaired,
            cached,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MetricsReport {
    pub wall_ms: f64,
    /// Analysis time per sink call site, in processing order.
    pub per_sink_ms: Vec<f64>,
    /// Underlying index scans actually executed (cache misses).
    pub searches_issued: u64,
    pub cache: CacheStats,
    pub cache_rate: f64,
    pub loops: LoopLog,
    pub visited_methods: usize,
    pub methods_total: usize,
    pub sink_count: usize,
    pub sink_cache_hits: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AppReport {
    pub app: String,
    pub analyzer: String,
    pub verdicts: Vec<VerdictReport>,
    pub metrics: MetricsReport,
    pub warnings: Vec<String>,
    pub timed_out: bool,
}

impl AppReport {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("report serializes")
    }

    /// One CSV row of the metrics block; `csv_header` gives the columns.
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{:.3},{},{},{},{:.4},{},{},{}",
            self.app,
            self.analyzer,
            self.metrics.wall_ms,
            self.metrics.sink_count,
            self.metrics.searches_issued,
            self.metrics.cache.hits,
            self.metrics.cache_rate,
            self.metrics.visited_methods,
            self.metrics.methods_total,
            self.metrics.loops.total(),
        )
    }

    pub fn csv_header() -> &'static str {
        "app,analyzer,wall_ms,sinks,searches,cache_hits,cache_rate,visited_methods,methods_total,loops"
    }
}

/// One row of the scaling benchmark table.
#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub methods_total: usize,
    pub sink_count: usize,
    pub targetvet_wall_ms: f64,
    pub targetvet_per_sink_ms: f64,
    pub targetvet_visited: usize,
    pub oracle_wall_ms: f64,
    pub oracle_visited: usize,
}
