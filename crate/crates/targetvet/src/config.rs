//! Analysis configuration: ICC API set, callback/async registration pairs,
//! framework prefixes, lifecycle handler tables, and search bounds. The
//! defaults ship the domain knowledge the analyzer relies on; a JSON config
//! file can extend or replace them.

use crate::sbc::model::ComponentKind;
use crate::sbc::types::ClassName;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

/// A callback or asynchronous-flow registration pair: invoking the
/// registration API on (or with) an object of the handler's class makes the
/// framework later call the handler. `handler_subsig` is in search-subsig
/// form, e.g. `run:()V`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallbackPair {
    pub api_class: ClassName,
    pub api_name: String,
    pub handler_subsig: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LifecycleTable {
    /// Handler method names per component kind, in lifecycle order.
    pub handlers: BTreeMap<ComponentKind, Vec<String>>,
    /// Predecessor handlers per handler name, per component kind. A handler
    /// with no entry (or an empty list) is an initial handler.
    pub predecessors: BTreeMap<ComponentKind, BTreeMap<String, Vec<String>>>,
}

impl Default for LifecycleTable {
    fn default() -> Self {
        let mut handlers = BTreeMap::new();
        handlers.insert(
            ComponentKind::Activity,
            vec![
                "onCreate", "onStart", "onResume", "onPause", "onStop", "onRestart", "onDestroy",
            ]
            .into_iter()
            .map(String::from)
            .collect(),
        );
        handlers.insert(
            ComponentKind::Service,
            vec!["onCreate", "onStartCommand", "onBind", "onDestroy"]
                .into_iter()
                .map(String::from)
                .collect(),
        );
        handlers.insert(ComponentKind::Receiver, vec!["onReceive".to_string()]);
        handlers.insert(ComponentKind::Provider, vec!["onCreate".to_string()]);

        let mut predecessors = BTreeMap::new();
        let mut activity: BTreeMap<String, Vec<String>> = BTreeMap::new();
        activity.insert("onStart".into(), vec!["onCreate".into(), "onRestart".into()]);
        activity.insert("onResume".into(), vec!["onStart".into(), "onPause".into()]);
        activity.insert("onRestart".into(), vec!["onStop".into()]);
        predecessors.insert(ComponentKind::Activity, activity);
        let mut service: BTreeMap<String, Vec<String>> = BTreeMap::new();
        service.insert("onStartCommand".into(), vec!["onCreate".into()]);
        service.insert("onBind".into(), vec!["onCreate".into()]);
        predecessors.insert(ComponentKind::Service, service);
        predecessors.insert(ComponentKind::Receiver, BTreeMap::new());
        predecessors.insert(ComponentKind::Provider, BTreeMap::new());

        LifecycleTable {
            handlers,
            predecessors,
        }
    }
}

impl LifecycleTable {
    pub fn handlers(&self, kind: ComponentKind) -> &[String] {
        self.handlers.get(&kind).map(|v| v.as_slice()).unwrap_or(&[])
    }

    pub fn is_handler(&self, kind: ComponentKind, name: &str) -> bool {
        self.handlers(kind).iter().any(|h| h == name)
    }

    pub fn predecessors_of(&self, kind: ComponentKind, name: &str) -> &[String] {
        self.predecessors
            .get(&kind)
            .and_then(|m| m.get(name))
            .map(|v| v.as_slice())
            .unwrap_or(&[])
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisConfig {
    /// Class-name prefixes reserved for the framework; SBC may not define
    /// bodies under them.
    pub framework_prefixes: Vec<String>,
    /// ICC call API names searched by the two-time ICC search.
    pub icc_api_names: Vec<String>,
    pub callback_pairs: Vec<CallbackPair>,
    pub lifecycle: LifecycleTable,
    /// Maximum methods entered by one advanced-search forward taint flow.
    pub max_advanced_depth: usize,
    /// Field hops allowed when a tainted object is stored into a field and
    /// re-introduced at a field read during advanced search.
    pub max_field_hops: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        let pair = |api_class: &str, api_name: &str, handler: &str| CallbackPair {
            api_class: ClassName::from_slashed(api_class),
            api_name: api_name.to_string(),
            handler_subsig: handler.to_string(),
        };
        AnalysisConfig {
            framework_prefixes: vec!["java/".into(), "javax/".into(), "android/".into()],
            icc_api_names: vec![
                "startActivity".into(),
                "startService".into(),
                "bindService".into(),
                "sendBroadcast".into(),
            ],
            callback_pairs: vec![
                pair("java/lang/Thread", "start", "run:()V"),
                pair("java/util/concurrent/Executor", "execute", "run:()V"),
                pair("android/os/AsyncTask", "execute", "doInBackground:()V"),
                pair(
                    "android/view/View",
                    "setOnClickListener",
                    "onClick:(Landroid/view/View;)V",
                ),
            ],
            lifecycle: LifecycleTable::default(),
            max_advanced_depth: 64,
            max_field_hops: 1,
        }
    }
}

impl AnalysisConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Pairs whose handler sub-signature matches, i.e. the callee could be a
    /// registered callback/async handler.
    pub fn pairs_for_handler(&self, subsig: &str) -> Vec<&CallbackPair> {
        self.callback_pairs
            .iter()
            .filter(|p| p.handler_subsig == subsig)
            .collect()
    }

    pub fn is_icc_api(&self, name: &str) -> bool {
        self.icc_api_names.iter().any(|n| n == name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_lifecycle_edges() {
        let t = LifecycleTable::default();
        assert_eq!(
            t.predecessors_of(ComponentKind::Activity, "onResume"),
            &["onStart".to_string(), "onPause".to_string()]
        );
        assert!(t.predecessors_of(ComponentKind::Activity, "onCreate").is_empty());
        assert!(t.is_handler(ComponentKind::Receiver, "onReceive"));
        assert!(!t.is_handler(ComponentKind::Receiver, "onCreate"));
    }

    #[test]
    fn config_round_trips_json() {
        let c = AnalysisConfig::default();
        let s = serde_json::to_string_pretty(&c).unwrap();
        let back: AnalysisConfig = serde_json::from_str(&s).unwrap();
        assert_eq!(back.callback_pairs, c.callback_pairs);
        assert_eq!(back.max_advanced_depth, 64);
        assert_eq!(back.max_field_hops, 1);
    }

    #[test]
    fn partial_config_uses_defaults() {
        let c: AnalysisConfig = serde_json::from_str(r#"{"max_advanced_depth": 8}"#).unwrap();
        assert_eq!(c.max_advanced_depth, 8);
        assert!(!c.callback_pairs.is_empty());
    }
}
