//! Security detectors: sink specifications and verdicts over evaluated
//! dataflow facts. Reachability gates every verdict — a matching insecure
//! value in a flow that never reaches an entry point is Unreachable, not
//! Vulnerable.

use crate::eval::{Fact, SinkFactResult, Value};
use crate::sbc::types::MethodSig;
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("sink spec {id}: tracked parameter {index} out of range for {sig} ({arity} parameters)")]
    ArityMismatch {
        id: String,
        index: usize,
        sig: String,
        arity: usize,
    },
    #[error("bad sink signature {0}: {1}")]
    BadSignature(String, String),
    #[error("io error on {0}: {1}")]
    Io(String, #[source] std::io::Error),
    #[error("bad sinks file {0}: {1}")]
    Format(String, #[source] serde_json::Error),
}

/// Insecure-parameter predicate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Predicate {
    /// Cipher transformation whose mode segment (between the first and
    /// second '/') is ECB, or a bare algorithm with no mode, which the
    /// platform defaults to ECB.
    EcbMode,
    /// Any string value containing the token.
    Contains { token: String },
    /// A named framework constant with this field name.
    EqualsConst { name: String },
    IntEquals { value: i64 },
}

impl Predicate {
    pub fn matches(&self, v: &Value) -> bool {
        match (self, v) {
            (Predicate::EcbMode, Value::Str(s)) => {
                let mut parts = s.split('/');
                let _algo = parts.next();
                match parts.next() {
                    Some(mode) => mode == "ECB",
                    None => true, // bare algorithm: platform-default ECB
                }
            }
            (Predicate::Contains { token }, Value::Str(s)) => s.contains(token.as_str()),
            (Predicate::EqualsConst { name }, Value::Named(f)) => &f.name == name,
            (Predicate::IntEquals { value }, Value::Int(i)) => i == value,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SinkSpec {
    pub id: String,
    /// Search-form signature of the sink API.
    pub signature: String,
    #[serde(default)]
    pub track_params: Vec<usize>,
    #[serde(default)]
    pub track_receiver: bool,
    pub predicate: Predicate,
    #[serde(default = "default_severity")]
    pub severity: String,
}

fn default_severity() -> String {
    "high".to_string()
}

impl SinkSpec {
    pub fn parse_signature(&self) -> Result<MethodSig, SpecError> {
        MethodSig::parse_search(&self.signature)
            .map_err(|e| SpecError::BadSignature(self.signature.clone(), e.to_string()))
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        let sig = self.parse_signature()?;
        for &i in &self.track_params {
            if i >= sig.params.len() {
                return Err(SpecError::ArityMismatch {
                    id: self.id.clone(),
                    index: i,
                    sig: self.signature.clone(),
                    arity: sig.params.len(),
                });
            }
        }
        Ok(())
    }

    pub fn tracked_keys(&self) -> Vec<crate::ssg::ParamKey> {
        let mut keys: Vec<crate::ssg::ParamKey> = self
            .track_params
            .iter()
            .map(|&i| crate::ssg::ParamKey::Arg(i))
            .collect();
        if self.track_receiver {
            keys.push(crate::ssg::ParamKey::Receiver);
        }
        keys
    }
}

/// The three target sink APIs shipped by default: cipher instantiation and
/// the two hostname-verifier setters.
pub fn default_sink_specs() -> Vec<SinkSpec> {
    vec![
        SinkSpec {
            id: "crypto-ecb".to_string(),
            signature: "Ljavax/crypto/Cipher;.getInstance:(Ljava/lang/String;)Ljavax/crypto/Cipher;"
                .to_string(),
            track_params: vec![0],
            track_receiver: false,
            predicate: Predicate::EcbMode,
            severity: "high".to_string(),
        },
        SinkSpec {
            id: "ssl-allow-all-verifier".to_string(),
            signature:
                "Lorg/apache/http/conn/ssl/SSLSocketFactory;.setHostnameVerifier:(Lorg/apache/http/conn/ssl/X509HostnameVerifier;)V"
                    .to_string(),
            track_params: vec![0],
            track_receiver: false,
            predicate: Predicate::EqualsConst {
                name: "ALLOW_ALL_HOSTNAME_VERIFIER".to_string(),
            },
            severity: "high".to_string(),
        },
        SinkSpec {
            id: "https-allow-all-verifier".to_string(),
            signature:
                "Ljavax/net/ssl/HttpsURLConnection;.setHostnameVerifier:(Ljavax/net/ssl/HostnameVerifier;)V"
                    .to_string(),
            track_params: vec![0],
            track_receiver: false,
            predicate: Predicate::EqualsConst {
                name: "ALLOW_ALL_HOSTNAME_VERIFIER".to_string(),
            },
            severity: "high".to_string(),
        },
    ]
}

pub fn load_sink_specs(path: &Path) -> Result<Vec<SinkSpec>, SpecError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| SpecError::Io(path.display().to_string(), e))?;
    let specs: Vec<SinkSpec> = serde_json::from_str(&text)
        .map_err(|e| SpecError::Format(path.display().to_string(), e))?;
    for s in &specs {
        s.validate()?;
    }
    Ok(specs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Status {
    Vulnerable,
    LowConfidence,
    Safe,
    Unreachable,
    Unknown,
}

#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    pub spec_id: String,
    pub severity: String,
    pub method: MethodSig,
    pub file: u32,
    pub line: u32,
    pub status: Status,
    /// Values that satisfied the predicate, rendered.
    pub matched: Vec<String>,
    /// Per-parameter facts of the decisive flow.
    pub facts: std::collections::BTreeMap<String, Fact>,
    /// Entry-to-sink witness chain of the decisive flow.
    pub witness: Vec<String>,
    pub unpaired: bool,
}

/// Judge the evaluated flows of one sink call site against its spec.
///
/// Status rules: Unreachable when no flow reaches an entry point;
/// Vulnerable when any reachable flow carries a matching constant (demoted
/// to LowConfidence when every matching flow crossed a low-confidence ICC
/// edge); Safe when all facts are constant sets with no match; Unknown
/// otherwise.
pub fn judge_site(results: &[SinkFactResult], spec: &SinkSpec) -> Option<Verdict> {
    let first = results.first()?;
    let mk = |status: Status, r: &SinkFactResult, matched: Vec<String>| Verdict {
        spec_id: spec.id.clone(),
        severity: spec.severity.clone(),
        method: r.method.clone(),
        file: r.loc.file.0,
        line: r.loc.line,
        status,
        matched,
        facts: r.facts.clone(),
        witness: r.witness.clone(),
        unpaired: r.unpaired,
    };

    if first.unreachable {
        return Some(mk(Status::Unreachable, first, Vec::new()));
    }

    let matches_of = |r: &SinkFactResult| -> Vec<String> {
        let mut m = Vec::new();
        for fact in r.facts.values() {
            if let Fact::Consts(vs) = fact {
                for v in vs {
                    if spec.predicate.matches(v) {
                        m.push(v.render());
                    }
                }
            }
        }
        m
    };

    // Any full-confidence matching flow wins; then low-confidence matches.
    let mut low_conf_hit: Option<Verdict> = None;
    for r in results {
        let m = matches_of(r);
        if m.is_empty() {
            continue;
        }
        if r.low_confidence {
            low_conf_hit.get_or_insert_with(|| mk(Status::LowConfidence, r, m.clone()));
        } else {
            return Some(mk(Status::Vulnerable, r, m));
        }
    }
    if let Some(v) = low_conf_hit {
        return Some(v);
    }

    // No match: Safe only if every tracked fact is a constant set.
    let all_const = results.iter().all(|r| {
        !r.facts.is_empty() && r.facts.values().all(|f| matches!(f, Fact::Consts(_)))
    });
    if all_const {
        return Some(mk(Status::Safe, first, Vec::new()));
    }
    Some(mk(Status::Unknown, first, Vec::new()))
}

/// Judge all sites: results are grouped by (method, line) and each group
/// yields exactly one verdict.
pub fn judge(results: &[SinkFactResult], specs: &[SinkSpec]) -> Vec<Verdict> {
    let mut by_site: std::collections::BTreeMap<(String, u32, u32, String), Vec<SinkFactResult>> =
        std::collections::BTreeMap::new();
    for r in results {
        by_site
            .entry((
                r.method.render_search(),
                r.loc.file.0,
                r.loc.line,
                r.spec_id.clone(),
            ))
            .or_default()
            .push(r.clone());
    }
    let mut out = Vec::new();
    for ((_, _, _, spec_id), rs) in by_site {
        if let Some(spec) = specs.iter().find(|s| s.id == spec_id) {
            if let Some(v) = judge_site(&rs, spec) {
                out.push(v);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sbc::model::{FileId, LineRef};
    use crate::sbc::types::FieldRef;
    use std::collections::BTreeMap;

    fn result(facts: BTreeMap<String, Fact>, unreachable: bool, low: bool) -> SinkFactResult {
        SinkFactResult {
            method: MethodSig::parse_search("Lcom/x/A;.m:()V").unwrap(),
            loc: LineRef {
                file: FileId(0),
                line: 10,
            },
            callee: MethodSig::parse_search(
                "Ljavax/crypto/Cipher;.getInstance:(Ljava/lang/String;)Ljavax/crypto/Cipher;",
            )
            .unwrap(),
            spec_id: "crypto-ecb".to_string(),
            facts,
            witness: vec!["<com.x.Main: void onCreate()>".to_string()],
            unreachable,
            low_confidence: low,
            unpaired: false,
        }
    }

    fn str_fact(vals: &[&str]) -> Fact {
        Fact::Consts(vals.iter().map(|s| Value::Str(s.to_string())).collect())
    }

    fn spec() -> SinkSpec {
        default_sink_specs()[0].clone()
    }

    #[test]
    fn ecb_transformation_is_vulnerable() {
        let mut facts = BTreeMap::new();
        facts.insert("arg0".to_string(), str_fact(&["AES/ECB/PKCS5Padding"]));
        let v = judge_site(&[result(facts, false, false)], &spec()).unwrap();
        assert_eq!(v.status, Status::Vulnerable);
        assert_eq!(v.matched, vec!["\"AES/ECB/PKCS5Padding\""]);
    }

    #[test]
    fn gcm_transformation_is_safe() {
        let mut facts = BTreeMap::new();
        facts.insert("arg0".to_string(), str_fact(&["AES/GCM/NoPadding"]));
        let v = judge_site(&[result(facts, false, false)], &spec()).unwrap();
        assert_eq!(v.status, Status::Safe);
    }

    #[test]
    fn bare_algorithm_defaults_to_ecb() {
        assert!(Predicate::EcbMode.matches(&Value::Str("DES".to_string())));
        assert!(!Predicate::EcbMode.matches(&Value::Str("AES/CBC/PKCS5Padding".to_string())));
        assert!(!Predicate::EcbMode.matches(&Value::Str("AES/NOTECB/X".to_string())));
    }

    #[test]
    fn unreachable_beats_matching_value() {
        // The paper's false-positive diagnosis: an insecure constant whose
        // only flow starts in an unregistered component is Unreachable.
        let mut facts = BTreeMap::new();
        facts.insert("arg0".to_string(), str_fact(&["AES/ECB/PKCS5Padding"]));
        let v = judge_site(&[result(facts, true, false)], &spec()).unwrap();
        assert_eq!(v.status, Status::Unreachable);
    }

    #[test]
    fn named_constant_matches_allow_all() {
        let ssl = default_sink_specs()[1].clone();
        let named = Value::Named(
            FieldRef::parse_search(
                "Lorg/apache/http/conn/ssl/SSLSocketFactory;.ALLOW_ALL_HOSTNAME_VERIFIER:Lorg/apache/http/conn/ssl/X509HostnameVerifier;",
            )
            .unwrap(),
        );
        assert!(ssl.predicate.matches(&named));
        let other = Value::Named(
            FieldRef::parse_search(
                "Lorg/apache/http/conn/ssl/SSLSocketFactory;.BROWSER_COMPATIBLE_HOSTNAME_VERIFIER:Lorg/apache/http/conn/ssl/X509HostnameVerifier;",
            )
            .unwrap(),
        );
        assert!(!ssl.predicate.matches(&other));
    }

    #[test]
    fn unknown_fact_yields_unknown() {
        let mut facts = BTreeMap::new();
        facts.insert("arg0".to_string(), Fact::Unknown);
        let v = judge_site(&[result(facts, false, false)], &spec()).unwrap();
        assert_eq!(v.status, Status::Unknown);
    }

    #[test]
    fn low_confidence_flow_demotes_verdict() {
        let mut facts = BTreeMap::new();
        facts.insert("arg0".to_string(), str_fact(&["AES/ECB/PKCS5Padding"]));
        let v = judge_site(&[result(facts, false, true)], &spec()).unwrap();
        assert_eq!(v.status, Status::LowConfidence);
    }

    #[test]
    fn adding_matching_value_moves_safe_to_vulnerable_only() {
        // Monotone evidence: a Safe set that gains a matching value becomes
        // Vulnerable; a Vulnerable set never becomes Safe by adding values.
        let mut facts = BTreeMap::new();
        facts.insert("arg0".to_string(), str_fact(&["AES/CBC/PKCS5Padding"]));
        let v = judge_site(&[result(facts.clone(), false, false)], &spec()).unwrap();
        assert_eq!(v.status, Status::Safe);

        facts.insert(
            "arg0".to_string(),
            str_fact(&["AES/CBC/PKCS5Padding", "AES/ECB/PKCS5Padding"]),
        );
        let v = judge_site(&[result(facts, false, false)], &spec()).unwrap();
        assert_eq!(v.status, Status::Vulnerable);
    }

    #[test]
    fn arity_validation_rejects_out_of_range() {
        let mut s = spec();
        s.track_params = vec![3];
        assert!(matches!(s.validate(), Err(SpecError::ArityMismatch { .. })));
    }

    #[test]
    fn default_specs_round_trip_json() {
        let specs = default_sink_specs();
        let text = serde_json::to_string_pretty(&specs).unwrap();
        let back: Vec<SinkSpec> = serde_json::from_str(&text).unwrap();
        assert_eq!(back.len(), 3);
        for s in &back {
            s.validate().unwrap();
        }
    }
}
