//! Checked-in fixture apps replaying the worked examples the analyzer is
//! built around, embedded so `replay-fixtures` works from any directory.
//! Each fixture carries its own sink specification file and a set of
//! assertions over the analyzer's output.

use crate::corpusgen::GenError;
use crate::detect::{SinkSpec, Status};
use crate::driver::{analyze_model, AppAnalysis, VetOptions};
use crate::sbc::parser::parse_app_from_sources;
use crate::ssg::{EdgeKind, Track};
use std::path::Path;
use std::sync::Arc;

pub struct Fixture {
    pub name: &'static str,
    pub files: Vec<(String, String)>,
    pub manifest: &'static str,
    pub sinks_json: &'static str,
}

impl Fixture {
    pub fn sinks(&self) -> Vec<SinkSpec> {
        serde_json::from_str(self.sinks_json).expect("fixture sinks parse")
    }

    /// Materialize the fixture as an app directory.
    pub fn write_to_dir(&self, dir: &Path) -> Result<(), GenError> {
        let io = |p: &Path, e: std::io::Error| GenError::Io(p.display().to_string(), e);
        std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
        for (name, text) in &self.files {
            let p = dir.join(name);
            std::fs::write(&p, text).map_err(|e| io(&p, e))?;
        }
        let m = dir.join("manifest.txt");
        std::fs::write(&m, self.manifest).map_err(|e| io(&m, e))?;
        let s = dir.join("sinks.json");
        std::fs::write(&s, self.sinks_json).map_err(|e| io(&s, e))?;
        Ok(())
    }

    pub fn analyze(&self) -> Result<AppAnalysis, String> {
        let model = parse_app_from_sources(
            &self.files,
            self.manifest,
            &crate::config::AnalysisConfig::default().framework_prefixes,
        )
        .map_err(|e| format!("{}: parse failed: {e}", self.name))?;
        let mut opts = VetOptions::new(self.sinks());
        opts.emit_ssg = true;
        analyze_model(self.name, Arc::new(model), &opts)
            .map_err(|e| format!("{}: analysis failed: {e}", self.name))
    }
}

macro_rules! fixture {
    ($name:literal) => {
        Fixture {
            name: $name,
            files: vec![(
                "app.sbc".to_string(),
                include_str!(concat!("../fixtures/", $name, "/app.sbc")).to_string(),
            )],
            manifest: include_str!(concat!("../fixtures/", $name, "/manifest.txt")),
            sinks_json: include_str!(concat!("../fixtures/", $name, "/sinks.json")),
        }
    };
}

pub fn all() -> Vec<Fixture> {
    vec![
        fixture!("fig34"),
        fixture!("fig6"),
        fixture!("heyzap"),
        fixture!("icc"),
        fixture!("unregistered"),
        fixture!("loops"),
        fixture!("cacheshare"),
    ]
}

pub fn by_name(name: &str) -> Option<Fixture> {
    all().into_iter().find(|f| f.name == name)
}

/// Replay one fixture and check the documented expectations. Returns the
/// confirmation lines, or the first failed expectation.
pub fn replay(fixture: &Fixture) -> Result<Vec<String>, String> {
    let analysis = fixture.analyze()?;
    let mut log = Vec::new();
    let fail = |msg: String| Err::<Vec<String>, String>(format!("{}: {msg}", fixture.name));

    match fixture.name {
        "fig34" => {
            let v = match analysis.report.verdicts.as_slice() {
                [v] => v,
                other => return fail(format!("expected 1 verdict, got {}", other.len())),
            };
            if v.status != Status::Vulnerable {
                return fail(format!("expected Vulnerable, got {:?}", v.status));
            }
            let chain = [
                "<com.connectsdk.service.NetcastTVService: void connect()>",
                "<com.connectsdk.core.Util: void runInBackground(java.lang.Runnable)>",
                "<com.connectsdk.core.Util: void runInBackground(java.lang.Runnable,boolean)>",
            ];
            let pos: Vec<Option<usize>> = chain
                .iter()
                .map(|c| v.witness.iter().position(|w| w == c))
                .collect();
            if pos.iter().any(Option::is_none) {
                return fail(format!("advanced chain missing from witness {:?}", v.witness));
            }
            let idx: Vec<usize> = pos.into_iter().flatten().collect();
            if !(idx[0] < idx[1] && idx[1] < idx[2]) {
                return fail(format!("chain out of order in witness {:?}", v.witness));
            }
            if !v
                .witness
                .iter()
                .any(|w| w.contains("NetcastTVService$1: void run()"))
            {
                return fail(format!("run() missing from witness {:?}", v.witness));
            }
            log.push(format!(
                "fig34: Vulnerable via {}",
                v.witness.join(" -> ")
            ));
        }
        "fig6" => {
            let v = match analysis.report.verdicts.as_slice() {
                [v] => v,
                other => return fail(format!("expected 1 verdict, got {}", other.len())),
            };
            if v.status != Status::Vulnerable || !v.matched.contains(&"8091".to_string()) {
                return fail(format!("expected Vulnerable(8091), got {v:?}"));
            }
            let (_, ssg) = &analysis.ssgs[0];
            let statics = ssg
                .units
                .iter()
                .filter(|u| u.track == Track::StaticInit)
                .count();
            if statics == 0 {
                return fail("no StaticInit track units".to_string());
            }
            let contained = ssg
                .edges
                .iter()
                .any(|e| e.kind == EdgeKind::ContainedCall)
                && ssg.edges.iter().any(|e| e.kind == EdgeKind::ContainedReturn);
            if !contained {
                return fail("constructor call/return edges missing".to_string());
            }
            if !v.witness[0].contains("onStartCommand") {
                return fail(format!("entry is not the service handler: {:?}", v.witness));
            }
            log.push(format!(
                "fig6: Vulnerable(8091), {} static-track unit(s), contained ctor edges present",
                statics
            ));
        }
        "heyzap" => {
            let v = match analysis.report.verdicts.as_slice() {
                [v] => v,
                other => return fail(format!("expected 1 verdict, got {}", other.len())),
            };
            if v.status != Status::Vulnerable {
                return fail(format!("expected Vulnerable, got {:?}", v.status));
            }
            let (_, ssg) = &analysis.ssgs[0];
            let Some(witness) = &ssg.clinit_witness else {
                return fail("no clinit witness".to_string());
            };
            let chain: Vec<&str> = witness.iter().map(|c| c.slashed()).collect();
            let want = [
                "com/heyzap/internal/APIClient",
                "com/heyzap/house/model/AdModel",
                "com/heyzap/sdk/ads/HeyzapInterstitialActivity",
            ];
            if chain != want {
                return fail(format!("clinit witness {chain:?}, expected {want:?}"));
            }
            log.push(format!("heyzap: Vulnerable, clinit witness {}", chain.join(" <- ")));
        }
        "icc" => {
            let v = match analysis.report.verdicts.as_slice() {
                [v] => v,
                other => return fail(format!("expected 1 verdict, got {}", other.len())),
            };
            if v.status != Status::Vulnerable || !v.matched.contains(&"8443".to_string()) {
                return fail(format!("expected Vulnerable(8443), got {v:?}"));
            }
            if !v.witness.iter().any(|w| w.contains("MainActivity: void onCreate()")) {
                return fail(format!("sender frame missing from witness {:?}", v.witness));
            }
            // The two-time search must produce exactly one full-confidence
            // edge: the method holding only the class constant (`lonely`)
            // contributes nothing.
            let (_, ssg) = &analysis.ssgs[0];
            let icc_edges: Vec<_> = ssg
                .edges
                .iter()
                .filter(|e| {
                    e.meta
                        .as_ref()
                        .is_some_and(|m| m.kind == crate::ssg::LinkKind::Icc)
                })
                .collect();
            if icc_edges.len() != 1 {
                return fail(format!("expected 1 ICC edge, got {}", icc_edges.len()));
            }
            if icc_edges[0].meta.as_ref().unwrap().low_confidence {
                return fail("ICC edge unexpectedly low-confidence".to_string());
            }
            log.push("icc: Vulnerable(8443) through one full-confidence ICC edge".to_string());
        }
        "unregistered" => {
            let v = match analysis.report.verdicts.as_slice() {
                [v] => v,
                other => return fail(format!("expected 1 verdict, got {}", other.len())),
            };
            if v.status != Status::Unreachable {
                return fail(format!("expected Unreachable, got {:?}", v.status));
            }
            log.push("unregistered: Unreachable (deactivated component)".to_string());
        }
        "loops" => {
            let loops = &analysis.report.metrics.loops;
            if loops.cross_backward < 1 {
                return fail(format!("no cross-backward loop detected: {loops:?}"));
            }
            if loops.inner_backward < 1 {
                return fail(format!("no inner-backward loop detected: {loops:?}"));
            }
            if loops.cross_forward < 1 {
                return fail(format!("no cross-forward loop detected: {loops:?}"));
            }
            if loops.inner_forward < 1 {
                return fail(format!("no inner-forward loop detected: {loops:?}"));
            }
            log.push(format!(
                "loops: completed with detections {loops:?}"
            ));
        }
        "cacheshare" => {
            let m = &analysis.report.metrics;
            if m.cache.hits == 0 {
                return fail("no cache hit across the shared path".to_string());
            }
            let statuses: Vec<Status> =
                analysis.report.verdicts.iter().map(|v| v.status).collect();
            if !statuses.contains(&Status::Vulnerable) || !statuses.contains(&Status::Safe) {
                return fail(format!("unexpected statuses {statuses:?}"));
            }
            log.push(format!(
                "cacheshare: cache rate {:.2}% over {} lookups",
                m.cache_rate * 100.0,
                m.cache.lookups
            ));
        }
        other => return fail(format!("unknown fixture {other}")),
    }
    Ok(log)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_fixture_replays() {
        for f in all() {
            match replay(&f) {
                Ok(lines) => {
                    for l in lines {
                        println!("{l}");
                    }
                }
                Err(e) => panic!("{e}"),
            }
        }
    }
}
