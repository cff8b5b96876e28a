//! Pipeline driver: parse, index, per-sink backtrack/SSG/evaluate/judge,
//! batch mode with per-app isolation, and the scaling benchmark.

use crate::backtrack::Backtracker;
use crate::config::AnalysisConfig;
use crate::corpusgen::{self, GenSpec};
use crate::detect::{judge_site, SinkSpec, SpecError, Status, Verdict};
use crate::eval;
use crate::index::{SearchIndex, SearchSession};
use crate::oracle;
use crate::report::{AppReport, BenchRow, MetricsReport, VerdictReport};
use crate::sbc::hierarchy::ClassHierarchy;
use crate::sbc::model::AppModel;
use crate::sbc::parser::{self, SbcError};
use crate::ssg::{generate_ssg, Ssg};
use rayon::prelude::*;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Sbc(#[from] SbcError),
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Gen(#[from] corpusgen::GenError),
    #[error("analysis timed out after {0:?}")]
    Timeout(Duration),
    #[error("io error on {0}: {1}")]
    Io(String, #[source] std::io::Error),
}

#[derive(Clone)]
pub struct VetOptions {
    pub config: AnalysisConfig,
    pub specs: Vec<SinkSpec>,
    pub emit_ssg: bool,
    /// Safety harness only: the analyzer is expected to terminate by
    /// construction (loop detection plus bounded advanced search).
    pub timeout: Option<Duration>,
}

impl VetOptions {
    pub fn new(specs: Vec<SinkSpec>) -> VetOptions {
        VetOptions {
            config: AnalysisConfig::default(),
            specs,
            emit_ssg: false,
            timeout: None,
        }
    }
}

pub struct AppAnalysis {
    pub report: AppReport,
    /// Per-sink SSGs when `emit_ssg` was requested: (sink key, graph).
    pub ssgs: Vec<(String, Ssg)>,
    pub verdicts: Vec<Verdict>,
}

/// Analyze one parsed app with the targeted pipeline.
pub fn analyze_model(
    app_name: &str,
    model: Arc<AppModel>,
    opts: &VetOptions,
) -> Result<AppAnalysis, PipelineError> {
    let t0 = Instant::now();
    for s in &opts.specs {
        s.validate()?;
    }
    let hierarchy = ClassHierarchy::build(&model)?;
    let index = Arc::new(SearchIndex::build(model.clone()));
    let mut tracker = Backtracker::new(
        model.clone(),
        &hierarchy,
        &opts.config,
        SearchSession::new(index),
    );

    let mut verdicts: Vec<Verdict> = Vec::new();
    let mut verdict_reports: Vec<VerdictReport> = Vec::new();
    let mut ssgs: Vec<(String, Ssg)> = Vec::new();
    let mut per_sink_ms: Vec<f64> = Vec::new();
    let mut sink_count = 0usize;

    // Initial sink search, per spec, through the cached session.
    for spec in &opts.specs {
        let sig = spec.parse_signature()?;
        let sites = tracker.session.invocations(&sig.render_search());
        let tracked = spec.tracked_keys();
        for site in sites {
            sink_count += 1;
            let ts = Instant::now();
            let sink_key = format!(
                "{}-{}-{}",
                spec.id,
                site.loc.file.0,
                site.loc.line
            );

            // Sink-method cache: a second sink in a method already judged
            // unreachable is skipped without analysis.
            if let Some(false) = tracker.sink_cache_lookup(&site.containing) {
                let v = Verdict {
                    spec_id: spec.id.clone(),
                    severity: spec.severity.clone(),
                    method: site.containing.clone(),
                    file: site.loc.file.0,
                    line: site.loc.line,
                    status: Status::Unreachable,
                    matched: Vec::new(),
                    facts: Default::default(),
                    witness: Vec::new(),
                    unpaired: false,
                };
                verdict_reports.push(VerdictReport::from_verdict(&v, &model, true));
                verdicts.push(v);
                per_sink_ms.push(ts.elapsed().as_secs_f64() * 1e3);
                continue;
            }

            let ssg = generate_ssg(&mut tracker, &site, &spec.id, &tracked);
            tracker.sink_cache_store(&site.containing, ssg.reachable);
            let results = eval::evaluate(&ssg);
            if let Some(v) = judge_site(&results, spec) {
                verdict_reports.push(VerdictReport::from_verdict(&v, &model, false));
                verdicts.push(v);
            }
            if opts.emit_ssg {
                ssgs.push((sink_key, ssg));
            }
            per_sink_ms.push(ts.elapsed().as_secs_f64() * 1e3);
        }
    }

    let stats = tracker.session.stats();
    let metrics = MetricsReport {
        wall_ms: t0.elapsed().as_secs_f64() * 1e3,
        per_sink_ms,
        searches_issued: tracker.session.scans(),
        cache: stats,
        cache_rate: stats.rate(),
        loops: tracker.loops,
        visited_methods: tracker.visited.len(),
        methods_total: model.method_count(),
        sink_count,
        sink_cache_hits: tracker.sink_cache_hits,
    };
    let report = AppReport {
        app: app_name.to_string(),
        analyzer: "targetvet".to_string(),
        verdicts: verdict_reports,
        metrics,
        warnings: tracker.diagnostics.clone(),
        timed_out: false,
    };
    Ok(AppAnalysis {
        report,
        ssgs,
        verdicts,
    })
}

/// Analyze one app directory.
pub fn vet_dir(dir: &Path, opts: &VetOptions) -> Result<AppAnalysis, PipelineError> {
    let model = Arc::new(parser::parse_app_with_prefixes(
        dir,
        &opts.config.framework_prefixes,
    )?);
    let name = dir.display().to_string();
    match opts.timeout {
        None => analyze_model(&name, model, opts),
        Some(limit) => run_with_timeout(&name, model, opts, limit),
    }
}

/// Run the analysis under the safety-harness timeout. The worker thread is
/// detached on expiry; its result is discarded.
fn run_with_timeout(
    name: &str,
    model: Arc<AppModel>,
    opts: &VetOptions,
    limit: Duration,
) -> Result<AppAnalysis, PipelineError> {
    let (tx, rx) = std::sync::mpsc::channel();
    let name = name.to_string();
    let opts = opts.clone();
    std::thread::spawn(move || {
        let r = analyze_model(&name, model, &opts);
        let _ = tx.send(r);
    });
    match rx.recv_timeout(limit) {
        Ok(r) => r,
        Err(_) => Err(PipelineError::Timeout(limit)),
    }
}

/// Whole-app baseline over one app directory, reported in the same schema.
pub fn oracle_dir(dir: &Path, opts: &VetOptions) -> Result<AppAnalysis, PipelineError> {
    let model = Arc::new(parser::parse_app_with_prefixes(
        dir,
        &opts.config.framework_prefixes,
    )?);
    oracle_model(&dir.display().to_string(), model, opts)
}

pub fn oracle_model(
    app_name: &str,
    model: Arc<AppModel>,
    opts: &VetOptions,
) -> Result<AppAnalysis, PipelineError> {
    let hierarchy = ClassHierarchy::build(&model)?;
    let out = oracle::whole_app_analyze(model.clone(), &hierarchy, &opts.config, &opts.specs);
    let verdict_reports = out
        .verdicts
        .iter()
        .map(|v| VerdictReport::from_verdict(v, &model, false))
        .collect();
    let metrics = MetricsReport {
        wall_ms: out.metrics.wall_ms,
        per_sink_ms: Vec::new(),
        searches_issued: 0,
        cache: Default::default(),
        cache_rate: 0.0,
        loops: Default::default(),
        visited_methods: out.metrics.visited_methods,
        methods_total: out.metrics.methods_total,
        sink_count: out.verdicts.len(),
        sink_cache_hits: 0,
    };
    Ok(AppAnalysis {
        report: AppReport {
            app: app_name.to_string(),
            analyzer: "oracle".to_string(),
            verdicts: verdict_reports,
            metrics,
            warnings: Vec::new(),
            timed_out: false,
        },
        ssgs: Vec::new(),
        verdicts: out.verdicts,
    })
}

pub struct BatchItem {
    pub app: String,
    pub outcome: Result<AppAnalysis, PipelineError>,
}

/// Analyze a batch of app directories in parallel. One app's failure never
/// aborts the batch.
pub fn vet_batch(dirs: &[PathBuf], opts: &VetOptions, jobs: usize) -> Vec<BatchItem> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .expect("thread pool");
    pool.install(|| {
        dirs.par_iter()
            .map(|d| BatchItem {
                app: d.display().to_string(),
                outcome: vet_dir(d, opts),
            })
            .collect()
    })
}

/// Scaling benchmark: generated apps with a fixed sink count and swept
/// method totals, analyzed by both the targeted pipeline and the oracle.
pub fn bench(
    seed: u64,
    method_totals: &[usize],
    sinks: usize,
    opts: &VetOptions,
) -> Result<Vec<BenchRow>, PipelineError> {
    let mut rows = Vec::new();
    for &total in method_totals {
        let spec = GenSpec {
            seed,
            classes: 0,
            methods_per_class: 10,
            linkage_mix: vec![
                corpusgen::LinkageKind::Static,
                corpusgen::LinkageKind::Private,
                corpusgen::LinkageKind::Interface,
            ],
            sinks,
            unreachable_fraction: 0.0,
            flows: vec![
                corpusgen::FlowKind::Arith,
                corpusgen::FlowKind::Builder,
                corpusgen::FlowKind::StaticRouted,
            ],
            total_methods: Some(total),
        };
        let app = corpusgen::generate(&spec)?;
        let model = Arc::new(parser::parse_app_from_sources(
            &app.files,
            &app.manifest,
            &opts.config.framework_prefixes,
        )?);

        // Three repetitions, keeping the fastest, to steady the clock.
        let mut tv_best: Option<(f64, usize, usize)> = None;
        for _ in 0..3 {
            let a = analyze_model(&format!("bench-{total}"), model.clone(), opts)?;
            let m = &a.report.metrics;
            let cand = (m.wall_ms, m.visited_methods, m.sink_count);
            tv_best = Some(match tv_best {
                Some(prev) if prev.0 <= cand.0 => prev,
                _ => cand,
            });
        }
        let (tv_wall, tv_visited, tv_sinks) = tv_best.unwrap();

        let mut or_best: Option<(f64, usize)> = None;
        for _ in 0..3 {
            let o = oracle_model(&format!("bench-{total}"), model.clone(), opts)?;
            let cand = (o.report.metrics.wall_ms, o.report.metrics.visited_methods);
            or_best = Some(match or_best {
                Some(prev) if prev.0 <= cand.0 => prev,
                _ => cand,
            });
        }
        let (or_wall, or_visited) = or_best.unwrap();

        rows.push(BenchRow {
            methods_total: total,
            sink_count: tv_sinks,
            targetvet_wall_ms: tv_wall,
            targetvet_per_sink_ms: tv_wall / (tv_sinks.max(1) as f64),
            targetvet_visited: tv_visited,
            oracle_wall_ms: or_wall,
            oracle_visited: or_visited,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpusgen::gen_sink_specs;
    use crate::detect::Status;

    fn analyze_generated(seed: u64) -> (AppAnalysis, AppAnalysis, crate::corpusgen::GroundTruth) {
        let app = corpusgen::generate(&GenSpec::basic(seed)).unwrap();
        let opts = VetOptions::new(gen_sink_specs());
        let model = Arc::new(
            parser::parse_app_from_sources(
                &app.files,
                &app.manifest,
                &opts.config.framework_prefixes,
            )
            .unwrap(),
        );
        let tv = analyze_model("gen", model.clone(), &opts).unwrap();
        let or = oracle_model("gen", model, &opts).unwrap();
        (tv, or, app.truth)
    }

    #[test]
    fn generated_app_verdicts_match_truth_and_oracle() {
        for seed in [1u64, 2, 3, 4, 5] {
            let (tv, or, truth) = analyze_generated(seed);
            assert_eq!(
                tv.verdicts.len(),
                truth.sinks.len(),
                "seed {seed}: verdict count"
            );
            for st in &truth.sinks {
                let tv_v = tv
                    .verdicts
                    .iter()
                    .find(|v| v.method.render_analysis() == st.sink_method)
                    .unwrap_or_else(|| panic!("seed {seed}: no targetvet verdict for {}", st.sink_method));
                assert_eq!(
                    format!("{:?}", tv_v.status),
                    st.expected_status,
                    "seed {seed} sink {} ({:?}/{:?}): {:#?}",
                    st.id,
                    st.linkage,
                    st.flow,
                    tv_v
                );
                let or_v = or
                    .verdicts
                    .iter()
                    .find(|v| v.method.render_analysis() == st.sink_method)
                    .unwrap_or_else(|| panic!("seed {seed}: no oracle verdict for {}", st.sink_method));
                assert_eq!(
                    or_v.status, tv_v.status,
                    "seed {seed} sink {} ({:?}/{:?}) oracle disagrees",
                    st.id, st.linkage, st.flow
                );
            }
        }
    }

    #[test]
    fn second_sink_in_unreachable_method_is_cached() {
        let text = "\
.class public Lcom/x/Dead;
.method public static never()V
  v0 = const \"AES/ECB/PKCS5Padding\"
  v1 = invoke Ljavax/crypto/Cipher;.getInstance:(Ljava/lang/String;)Ljavax/crypto/Cipher; v0
  v2 = const \"AES/GCM/NoPadding\"
  v3 = invoke Ljavax/crypto/Cipher;.getInstance:(Ljava/lang/String;)Ljavax/crypto/Cipher; v2
  return-void
.end method
";
        let model = Arc::new(
            parser::parse_app_from_sources(
                &[("app.sbc".to_string(), text.to_string())],
                "activity Lcom/x/Main;\n",
                &["java/".into(), "javax/".into(), "android/".into()],
            )
            .unwrap(),
        );
        let opts = VetOptions::new(gen_sink_specs());
        let a = analyze_model("cache-test", model, &opts).unwrap();
        assert_eq!(a.report.metrics.sink_count, 2);
        assert_eq!(a.report.metrics.sink_cache_hits, 1);
        assert!(a
            .report
            .verdicts
            .iter()
            .all(|v| v.status == Status::Unreachable));
        assert!(a.report.verdicts.iter().any(|v| v.cached));
    }

    #[test]
    fn zero_sink_app_exits_fast_and_empty() {
        let model = Arc::new(
            parser::parse_app_from_sources(
                &[(
                    "app.sbc".to_string(),
                    ".class Lcom/x/A;\n.method static m()V\n  return-void\n.end method\n"
                        .to_string(),
                )],
                "",
                &["java/".into()],
            )
            .unwrap(),
        );
        let a = analyze_model("empty", model, &VetOptions::new(gen_sink_specs())).unwrap();
        assert!(a.report.verdicts.is_empty());
        assert_eq!(a.report.metrics.sink_count, 0);
        assert_eq!(a.report.metrics.visited_methods, 0);
    }
}
