//! On-the-fly caller resolution. Given a callee method, dispatches among:
//!
//! * basic signature search (static, private, constructor methods, plus
//!   child-class-qualified signatures for non-overloaded virtual methods);
//! * advanced search for super-class/interface/callback/async callees:
//!   locate the callee class's constructors by signature search, then
//!   forward-taint the constructed object until an ending method hands it
//!   to the framework;
//! * recursive class-reference search for `<clinit>` reachability;
//! * two-time ICC search (ICC call sites intersected with intent-parameter
//!   constants);
//! * lifecycle predecessor tables for component handlers.
//!
//! Method loops in either direction are detected, counted, and pruned.

use crate::config::{AnalysisConfig, CallbackPair};
use crate::index::{CallHit, FieldMode, SearchSession};
use crate::sbc::hierarchy::ClassHierarchy;
use crate::sbc::model::*;
use crate::sbc::types::*;
use serde::Serialize;
use std::collections::{BTreeSet, HashSet};
use std::sync::Arc;

/// How a caller edge was discovered.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Via {
    Direct,
    ChildClassSig,
    AdvancedChain,
    Icc {
        low_confidence: bool,
        /// Index of the intent argument at the ICC call site.
        intent_arg: usize,
    },
    Lifecycle,
    ClinitImplicit,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CallerEdge {
    pub caller: MethodSig,
    pub callee: MethodSig,
    pub via: Via,
    /// The call-site instruction; absent for lifecycle-table edges, which
    /// have no bytecode call site.
    pub site: Option<(LineRef, Instruction)>,
}

/// Constructor call site that roots an advanced-search chain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CtorSite {
    pub method: MethodSig,
    pub loc: LineRef,
    pub obj: Reg,
    pub ctor: MethodSig,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EndingSite {
    pub method: MethodSig,
    pub loc: LineRef,
    pub api: MethodSig,
}

/// Result of one advanced search: the chain from the constructor-containing
/// method to the ending method. `links` is empty when the constructor and
/// the ending invocation share a method.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CallChain {
    pub ctor_site: CtorSite,
    pub links: Vec<CallerEdge>,
    pub ending: EndingSite,
}

impl CallChain {
    /// Methods along the chain, constructor-containing method first.
    pub fn methods(&self) -> Vec<MethodSig> {
        let mut out = vec![self.ctor_site.method.clone()];
        for l in &self.links {
            out.push(l.callee.clone());
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum ResolvedCaller {
    Edge(CallerEdge),
    Chain(CallChain),
}

/// Counters for the four method-loop kinds detected while backtracking and
/// while forward-tainting.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct LoopLog {
    pub cross_backward: u64,
    pub inner_backward: u64,
    pub cross_forward: u64,
    pub inner_forward: u64,
}

impl LoopLog {
    pub fn total(&self) -> u64 {
        self.cross_backward + self.inner_backward + self.cross_forward + self.inner_forward
    }
}

/// Outcome of caller dispatch for one callee.
#[derive(Debug, Clone)]
pub enum CallersOutcome {
    /// Ordinary callers (possibly empty: the callee then has no discovered
    /// caller and paths above it are dead).
    Callers(Vec<ResolvedCaller>),
    /// The callee is a lifecycle handler of a registered component, i.e. an
    /// entry point. `extra` carries predecessor-handler and ICC-sender
    /// frames that can still contribute dataflow.
    Entry { extra: Vec<ResolvedCaller> },
    /// The callee is a `<clinit>`: only control-flow reachability is
    /// determined, by recursive class-reference search.
    ClinitGate {
        reachable: bool,
        witness: Vec<ClassName>,
    },
}

/// Per-analysis caller resolver. One instance per app analysis; the shared
/// index is read-only, all mutable state (cache, counters) is local.
pub struct Backtracker<'a> {
    pub model: Arc<AppModel>,
    pub hierarchy: &'a ClassHierarchy,
    pub config: &'a AnalysisConfig,
    pub session: SearchSession,
    pub loops: LoopLog,
    pub diagnostics: Vec<String>,
    /// Methods whose bodies the analysis actually examined.
    pub visited: HashSet<MethodSig>,
    sink_cache: std::collections::HashMap<MethodSig, bool>,
    pub sink_cache_hits: u64,
}

impl<'a> Backtracker<'a> {
    pub fn new(
        model: Arc<AppModel>,
        hierarchy: &'a ClassHierarchy,
        config: &'a AnalysisConfig,
        session: SearchSession,
    ) -> Self {
        Backtracker {
            model,
            hierarchy,
            config,
            session,
            loops: LoopLog::default(),
            diagnostics: Vec::new(),
            visited: HashSet::new(),
            sink_cache: std::collections::HashMap::new(),
            sink_cache_hits: 0,
        }
    }

    pub fn mark_visited(&mut self, m: &MethodSig) {
        self.visited.insert(m.clone());
    }

    /// Cached reachability of a sink-containing method, from an earlier sink
    /// analysis in the same app.
    pub fn sink_cache_lookup(&mut self, m: &MethodSig) -> Option<bool> {
        let hit = self.sink_cache.get(m).copied();
        if hit.is_some() {
            self.sink_cache_hits += 1;
        }
        hit
    }

    pub fn sink_cache_store(&mut self, m: &MethodSig, reachable: bool) {
        self.sink_cache.insert(m.clone(), reachable);
    }

    /// Resolve callers of `callee`. `taint_resolved` describes the tracking
    /// state at the callee's entry: when true, a lifecycle handler needs no
    /// further frames.
    pub fn find_callers(&mut self, callee: &MethodSig, taint_resolved: bool) -> CallersOutcome {
        if callee.is_clinit() {
            let (reachable, witness) = self.clinit_reachable(&callee.class);
            return CallersOutcome::ClinitGate { reachable, witness };
        }

        if let Some(components) = self.matching_components(callee) {
            // Entry lifecycle handler of one or more registered components.
            let mut extra = Vec::new();
            if !taint_resolved {
                match self.lifecycle_predecessors(callee, taint_resolved) {
                    LifecycleResolution::Predecessors(preds) => {
                        for p in preds {
                            extra.push(ResolvedCaller::Edge(CallerEdge {
                                caller: p,
                                callee: callee.clone(),
                                via: Via::Lifecycle,
                                site: None,
                            }));
                        }
                    }
                    LifecycleResolution::EntryReached | LifecycleResolution::NotComponent => {}
                }
                if self.handler_intent_param(callee).is_some() {
                    for comp in &components {
                        for e in self.icc_callers(callee, comp) {
                            extra.push(ResolvedCaller::Edge(e));
                        }
                    }
                }
            }
            return CallersOutcome::Entry {
                extra: dedup_callers(extra),
            };
        }

        let Some(method) = self.model.method(callee).cloned() else {
            self.diagnostics
                .push(format!("UnresolvedCallee: {} has no app body", callee));
            return CallersOutcome::Callers(Vec::new());
        };

        let mut out: Vec<ResolvedCaller> = self
            .basic_search(callee)
            .into_iter()
            .map(ResolvedCaller::Edge)
            .collect();

        if !method.is_signature_method() {
            let rules = self.advanced_rules(callee);
            if !rules.is_empty() {
                for chain in self.advanced_search_rules(callee, &rules) {
                    out.push(ResolvedCaller::Chain(chain));
                }
            }
        }

        let out = dedup_callers(out);
        if out.is_empty() {
            self.diagnostics
                .push(format!("UnresolvedCallee: no caller found for {}", callee));
        }
        CallersOutcome::Callers(out)
    }

    /// Registered components whose lifecycle-handler resolution for the
    /// callee's name lands on this exact method.
    fn matching_components(&self, callee: &MethodSig) -> Option<Vec<Component>> {
        let mut matched = Vec::new();
        for comp in &self.model.manifest.components {
            if !self.config.lifecycle.is_handler(comp.kind, &callee.name) {
                continue;
            }
            if let Some(m) = self
                .hierarchy
                .resolve_by_name(&self.model, &comp.class, &callee.name)
            {
                if &m.sig == callee {
                    matched.push(comp.clone());
                }
            }
        }
        (!matched.is_empty()).then_some(matched)
    }

    /// Index of the handler's Intent-typed parameter, if it has one.
    /// Counted over declared parameters (receiver excluded).
    pub fn handler_intent_param(&self, handler: &MethodSig) -> Option<usize> {
        let intent = ClassName::from_slashed("android/content/Intent");
        handler
            .params
            .iter()
            .position(|p| p.base_class() == Some(&intent))
    }

    /// Basic signature-based search. Searches the callee's own signature;
    /// for every transitive child class that does not overload the callee's
    /// sub-signature, additionally searches the child-qualified signature.
    /// A child that overloads it owns those hits, so its subtree is skipped.
    pub fn basic_search(&mut self, callee: &MethodSig) -> Vec<CallerEdge> {
        let mut edges = Vec::new();
        for hit in self.session.invocations(&callee.render_search()) {
            edges.push(CallerEdge {
                caller: hit.containing.clone(),
                callee: callee.clone(),
                via: Via::Direct,
                site: Some((hit.loc, hit.instr)),
            });
        }

        let method = self.model.method(callee);
        let child_searchable = method
            .map(|m| !m.flags.is_private && !m.sig.is_init() && !m.sig.is_clinit())
            .unwrap_or(false);
        if child_searchable {
            let subsig = callee.subsig();
            let mut stack: Vec<ClassName> = self.hierarchy.children_of(&callee.class).to_vec();
            while let Some(child) = stack.pop() {
                let overloaded = self
                    .model
                    .class(&child)
                    .map(|c| c.method_by_subsig(&subsig).is_some())
                    .unwrap_or(false);
                if overloaded {
                    // Child-qualified call sites bind to the overload.
                    continue;
                }
                let child_sig = callee.with_class(child.clone());
                for hit in self.session.invocations(&child_sig.render_search()) {
                    edges.push(CallerEdge {
                        caller: hit.containing.clone(),
                        callee: callee.clone(),
                        via: Via::ChildClassSig,
                        site: Some((hit.loc, hit.instr)),
                    });
                }
                stack.extend(self.hierarchy.children_of(&child).iter().cloned());
            }
        }
        edges
    }

    /// Ending rules applicable to a virtual callee, derived from its class
    /// relations and the callback/async pair table.
    fn advanced_rules(&self, callee: &MethodSig) -> Vec<EndingRule> {
        let subsig = callee.subsig();
        let mut rules = Vec::new();

        // Super-class case: an app ancestor defines the same sub-signature,
        // so call sites may be qualified with the ancestor's class.
        let mut cur = self.hierarchy.super_of(&callee.class).cloned();
        while let Some(sup) = cur {
            if let Some(cls) = self.model.class(&sup) {
                if cls.method_by_subsig(&subsig).is_some() {
                    rules.push(EndingRule::RecvSubsig {
                        declared_class: sup.clone(),
                    });
                }
            }
            cur = self.hierarchy.super_of(&sup).cloned();
        }

        let pairs = self.config.pairs_for_handler(&subsig);

        for iface in self.hierarchy.all_interfaces(&callee.class) {
            let app_defined = self
                .model
                .class(&iface)
                .map(|c| c.method_by_subsig(&subsig).is_some())
                .unwrap_or(false);
            // For opaque interfaces the method list is unknowable; treat the
            // interface type as the ending indicator only when the pair
            // table says this sub-signature is a framework handler.
            if app_defined || !pairs.is_empty() {
                rules.push(EndingRule::ArgOfType {
                    iface: iface.clone(),
                });
            }
        }

        for p in pairs {
            rules.push(EndingRule::Pair(p.clone()));
        }
        rules.dedup();
        rules
    }

    /// Advanced search for a callee known to relate to `iface_or_super`:
    /// constructor-site search plus forward object taint analysis.
    pub fn advanced_search(
        &mut self,
        callee: &MethodSig,
        iface_or_super: &ClassName,
    ) -> Vec<CallChain> {
        let mut rules = vec![
            EndingRule::ArgOfType {
                iface: iface_or_super.clone(),
            },
            EndingRule::RecvSubsig {
                declared_class: iface_or_super.clone(),
            },
        ];
        for p in self.config.pairs_for_handler(&callee.subsig()) {
            rules.push(EndingRule::Pair(p.clone()));
        }
        self.advanced_search_rules(callee, &rules)
    }

    fn advanced_search_rules(
        &mut self,
        callee: &MethodSig,
        rules: &[EndingRule],
    ) -> Vec<CallChain> {
        let Some(class) = self.model.class(&callee.class) else {
            return Vec::new();
        };
        let ctors: Vec<MethodSig> = class.constructors().map(|m| m.sig.clone()).collect();
        if ctors.is_empty() {
            self.diagnostics.push(format!(
                "NoConstructorFound: {} has no constructor",
                callee.class.descriptor()
            ));
            return Vec::new();
        }

        let mut chains = Vec::new();
        for ctor in ctors {
            for hit in self.session.invocations(&ctor.render_search()) {
                let Some(obj) = hit.instr.kind.invoke_expr().and_then(|iv| iv.recv) else {
                    continue;
                };
                let site = CtorSite {
                    method: hit.containing.clone(),
                    loc: hit.loc,
                    obj,
                    ctor: ctor.clone(),
                };
                let mut fw = ForwardTaint::new(self, callee, rules);
                let found = fw.run(&site);
                if found.is_empty() {
                    self.diagnostics.push(format!(
                        "NoEndingMethod: object of {} constructed in {} never reaches an ending method",
                        callee.class.descriptor(),
                        site.method
                    ));
                }
                chains.extend(found);
            }
        }
        chains
    }

    /// Control-flow reachability of a static initializer, by breadth-first
    /// recursive search over class references. Returns the witness chain
    /// from the initializer's class to the registered entry class.
    pub fn clinit_reachable(&mut self, si_class: &ClassName) -> (bool, Vec<ClassName>) {
        if self.model.manifest.is_registered(si_class) {
            return (true, vec![si_class.clone()]);
        }
        let mut visited: BTreeSet<ClassName> = BTreeSet::new();
        let mut parent: std::collections::HashMap<ClassName, ClassName> =
            std::collections::HashMap::new();
        let mut frontier = std::collections::VecDeque::new();
        visited.insert(si_class.clone());
        frontier.push_back(si_class.clone());
        while let Some(c) = frontier.pop_front() {
            for referrer in self.session.class_references(&c) {
                if !visited.insert(referrer.clone()) {
                    continue;
                }
                parent.insert(referrer.clone(), c.clone());
                if self.model.manifest.is_registered(&referrer) {
                    let mut chain = vec![referrer.clone()];
                    let mut cur = referrer;
                    while let Some(p) = parent.get(&cur) {
                        chain.push(p.clone());
                        cur = p.clone();
                    }
                    chain.reverse();
                    return (true, chain);
                }
                frontier.push_back(referrer);
            }
        }
        (false, Vec::new())
    }

    /// Two-time ICC search: intersect ICC-API call sites with methods
    /// holding the component's class constant (explicit) or one of its
    /// intent-filter action strings (implicit), then attempt an
    /// intra-procedural const-to-intent-to-call trace. When the trace is
    /// inconclusive the method-level join stands, marked low-confidence.
    pub fn icc_callers(&mut self, handler: &MethodSig, component: &Component) -> Vec<CallerEdge> {
        let mut b_methods: BTreeSet<MethodSig> = BTreeSet::new();
        let mut const_regs: std::collections::HashMap<MethodSig, Vec<Reg>> =
            std::collections::HashMap::new();
        for hit in self.session.const_class_sites(&component.class) {
            b_methods.insert(hit.containing.clone());
            const_regs.entry(hit.containing).or_default().push(hit.lhs);
        }
        for action in component.actions.clone() {
            for hit in self.session.const_string_sites(&action) {
                b_methods.insert(hit.containing.clone());
                const_regs.entry(hit.containing).or_default().push(hit.lhs);
            }
        }
        if b_methods.is_empty() {
            return Vec::new();
        }

        let mut edges = Vec::new();
        for api in self.config.icc_api_names.clone() {
            for site in self.session.invocations_named(&api) {
                if !b_methods.contains(&site.containing) {
                    continue;
                }
                let Some(iv) = site.instr.kind.invoke_expr().cloned() else {
                    continue;
                };
                if !self.model.is_opaque(&iv.callee.class) || iv.args.is_empty() {
                    continue;
                }
                let intent = ClassName::from_slashed("android/content/Intent");
                let intent_arg = iv
                    .callee
                    .params
                    .iter()
                    .position(|p| p.base_class() == Some(&intent))
                    .unwrap_or(iv.args.len() - 1);
                let consts = const_regs.get(&site.containing).cloned().unwrap_or_default();
                let linked = self.trace_intent(&site, iv.args[intent_arg], &consts);
                edges.push(CallerEdge {
                    caller: site.containing.clone(),
                    callee: handler.clone(),
                    via: Via::Icc {
                        low_confidence: !linked,
                        intent_arg,
                    },
                    site: Some((site.loc, site.instr.clone())),
                });
            }
        }
        dedup_edges(edges)
    }

    /// Intra-procedural trace: does one of the const registers flow into
    /// the intent object passed at the ICC call? The intent must be
    /// constructed in this method and receive the const through one of its
    /// own invocations (setClass/setAction/putExtra style).
    fn trace_intent(&mut self, site: &CallHit, intent_reg: Reg, const_regs: &[Reg]) -> bool {
        let Some(method) = self.model.method(&site.containing).cloned() else {
            return false;
        };
        self.mark_visited(&site.containing);
        // Alias set for the intent register, following casts backward.
        let mut aliases: BTreeSet<Reg> = BTreeSet::new();
        let mut cur = intent_reg;
        let mut constructed = false;
        loop {
            aliases.insert(cur);
            let def = method.body.iter().find_map(|i| match &i.kind {
                InstrKind::Def { lhs, expr } if *lhs == cur => Some(expr.clone()),
                _ => None,
            });
            match def {
                Some(Expr::Cast { src, .. }) => cur = src,
                Some(Expr::New(_)) => {
                    constructed = true;
                    break;
                }
                _ => break,
            }
        }
        if !constructed {
            return false;
        }
        method.body.iter().any(|i| {
            i.kind.invoke_expr().is_some_and(|iv| {
                iv.recv.is_some_and(|r| aliases.contains(&r))
                    && iv.args.iter().any(|a| const_regs.contains(a))
            })
        })
    }

    /// Lifecycle dispatch for a handler method: entry when tracking is
    /// complete, otherwise the component class's predecessor handlers.
    pub fn lifecycle_predecessors(
        &mut self,
        handler: &MethodSig,
        taint_resolved: bool,
    ) -> LifecycleResolution {
        let Some(components) = self.matching_components(handler) else {
            return LifecycleResolution::NotComponent;
        };
        if taint_resolved {
            return LifecycleResolution::EntryReached;
        }
        let mut preds: Vec<MethodSig> = Vec::new();
        for comp in components {
            for pred_name in self
                .config
                .lifecycle
                .predecessors_of(comp.kind, &handler.name)
                .to_vec()
            {
                if let Some(m) = self
                    .hierarchy
                    .resolve_by_name(&self.model, &comp.class, &pred_name)
                {
                    if !preds.contains(&m.sig) {
                        preds.push(m.sig.clone());
                    }
                }
            }
        }
        LifecycleResolution::Predecessors(preds)
    }

    fn resolve_app_target(&self, callee: &MethodSig) -> Option<Method> {
        if let Some(m) = self.model.method(callee) {
            return Some(m.clone());
        }
        // Child-qualified or inherited call: resolve along the hierarchy.
        let def_class = self
            .hierarchy
            .resolve_subsig(&callee.class, &callee.subsig())?;
        self.model
            .method(&callee.with_class(def_class.clone()))
            .cloned()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LifecycleResolution {
    EntryReached,
    Predecessors(Vec<MethodSig>),
    NotComponent,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum EndingRule {
    /// Super-class case: a tainted-receiver invocation whose declared class
    /// is the super and whose sub-signature equals the callee's.
    RecvSubsig { declared_class: ClassName },
    /// Interface case: a framework invocation taking the tainted object at
    /// a parameter declared of the interface type.
    ArgOfType { iface: ClassName },
    /// Known callback/async registration API whose handler sub-signature
    /// matches the callee's.
    Pair(CallbackPair),
}

/// Forward object taint walk used by the advanced search. Tracks the
/// constructed object through definitions, invokes (into app callees whose
/// arguments carry it) and returns, and stops at the first ending method.
struct ForwardTaint<'t, 'a> {
    tracker: &'t mut Backtracker<'a>,
    callee_subsig: String,
    rules: &'t [EndingRule],
    chains: Vec<CallChain>,
    /// (method, tainted-binding) stack for loop detection.
    stack: Vec<(MethodSig, Vec<usize>)>,
    chain: Vec<CallerEdge>,
    ctor_site: Option<CtorSite>,
    field_hops: usize,
}

impl<'t, 'a> ForwardTaint<'t, 'a> {
    fn new(tracker: &'t mut Backtracker<'a>, callee: &MethodSig, rules: &'t [EndingRule]) -> Self {
        ForwardTaint {
            tracker,
            callee_subsig: callee.subsig(),
            rules,
            chains: Vec::new(),
            stack: Vec::new(),
            chain: Vec::new(),
            ctor_site: None,
            field_hops: 0,
        }
    }

    fn run(&mut self, site: &CtorSite) -> Vec<CallChain> {
        self.ctor_site = Some(site.clone());
        let Some(method) = self.tracker.model.method(&site.method).cloned() else {
            return Vec::new();
        };
        let mut tainted = HashSet::new();
        tainted.insert(site.obj);
        self.stack.push((site.method.clone(), vec![]));
        // The walk starts right after the constructor invocation.
        self.walk(&method, Some(site.loc.line), tainted);
        self.stack.pop();
        std::mem::take(&mut self.chains)
    }

    /// Walk a method body forward from (exclusive) `after_line`, returning
    /// whether a tainted value is returned to the caller.
    fn walk(
        &mut self,
        method: &Method,
        after_line: Option<u32>,
        mut tainted: HashSet<Reg>,
    ) -> bool {
        self.tracker.mark_visited(&method.sig);
        let mut returns_tainted = false;
        for instr in &method.body {
            if let Some(after) = after_line {
                if instr.line <= after {
                    continue;
                }
            }
            if self.ended() {
                break;
            }
            match &instr.kind {
                InstrKind::Def { lhs, expr } => match expr {
                    Expr::Cast { src, .. } if tainted.contains(src) => {
                        tainted.insert(*lhs);
                    }
                    Expr::Phi(rs) if rs.iter().any(|r| tainted.contains(r)) => {
                        tainted.insert(*lhs);
                    }
                    Expr::Invoke(iv) => {
                        if self.handle_invoke(method, instr, iv, &tainted) {
                            tainted.insert(*lhs);
                        }
                    }
                    _ => {}
                },
                InstrKind::Invoke(iv) => {
                    self.handle_invoke(method, instr, iv, &tainted);
                }
                InstrKind::FieldPut { value, field, .. } if tainted.contains(value) => {
                    self.field_hop(field);
                }
                InstrKind::StaticPut { value, field } if tainted.contains(value) => {
                    self.field_hop(field);
                }
                InstrKind::Return(Some(r)) if tainted.contains(r) => {
                    returns_tainted = true;
                }
                _ => {}
            }
        }
        returns_tainted
    }

    fn ended(&self) -> bool {
        !self.chains.is_empty()
    }

    /// Returns true when the invocation's result is tainted (a tainted
    /// value returned from an app callee we entered).
    fn handle_invoke(
        &mut self,
        cur: &Method,
        instr: &Instruction,
        iv: &InvokeExpr,
        tainted: &HashSet<Reg>,
    ) -> bool {
        let recv_tainted = iv.recv.is_some_and(|r| tainted.contains(&r));
        let tainted_args: Vec<usize> = iv
            .args
            .iter()
            .enumerate()
            .filter(|(_, r)| tainted.contains(r))
            .map(|(i, _)| i)
            .collect();
        if !recv_tainted && tainted_args.is_empty() {
            return false;
        }

        let loc = LineRef {
            file: cur.file,
            line: instr.line,
        };

        // Super-class ending: a tainted-receiver call with the callee's own
        // sub-signature, declared against the related super class. This can
        // hit whether or not the super has an app body.
        if recv_tainted && iv.callee.subsig() == self.callee_subsig {
            let super_hit = self.rules.iter().any(|r| match r {
                EndingRule::RecvSubsig { declared_class } => &iv.callee.class == declared_class,
                _ => false,
            });
            if super_hit {
                self.emit_chain(cur, loc, &iv.callee);
                return false;
            }
        }

        if let Some(target) = self.tracker.resolve_app_target(&iv.callee) {
            // Enter the app callee with the tainted binding.
            let mut binding: Vec<usize> = tainted_args.iter().map(|i| i + 1).collect();
            if recv_tainted {
                binding.insert(0, 0);
            }
            if self
                .stack
                .iter()
                .any(|(m, b)| m == &target.sig && b == &binding)
            {
                self.tracker.loops.cross_forward += 1;
                return false;
            }
            if self.stack.iter().any(|(m, _)| m == &target.sig) {
                self.tracker.loops.inner_forward += 1;
                return false;
            }
            if self.stack.len() >= self.tracker.config.max_advanced_depth {
                self.tracker
                    .diagnostics
                    .push(format!("advanced search depth limit at {}", target.sig));
                return false;
            }

            let mut callee_taint = HashSet::new();
            let is_static = target.flags.is_static;
            if recv_tainted && !is_static {
                if let Some(r) = target.param_reg(0) {
                    callee_taint.insert(r);
                }
            }
            for i in &tainted_args {
                let k = if is_static { *i } else { *i + 1 };
                if let Some(r) = target.param_reg(k) {
                    callee_taint.insert(r);
                }
            }
            self.chain.push(CallerEdge {
                caller: cur.sig.clone(),
                callee: target.sig.clone(),
                via: Via::AdvancedChain,
                site: Some((loc, instr.clone())),
            });
            self.stack.push((target.sig.clone(), binding));
            let ret_tainted = self.walk(&target, None, callee_taint);
            self.stack.pop();
            if !self.ended() {
                self.chain.pop();
            }
            return ret_tainted;
        }

        // Opaque callee: ending-method checks.
        for rule in self.rules {
            let matched = match rule {
                EndingRule::RecvSubsig { .. } => false, // handled above
                EndingRule::ArgOfType { iface } => tainted_args
                    .iter()
                    .any(|&i| iv.callee.params.get(i).and_then(|p| p.base_class()) == Some(iface)),
                EndingRule::Pair(p) => {
                    iv.callee.class == p.api_class
                        && iv.callee.name == p.api_name
                        && (recv_tainted || !tainted_args.is_empty())
                }
            };
            if matched {
                self.emit_chain(cur, loc, &iv.callee);
                return false;
            }
        }
        false
    }

    fn emit_chain(&mut self, cur: &Method, loc: LineRef, api: &MethodSig) {
        self.chains.push(CallChain {
            ctor_site: self.ctor_site.clone().expect("run sets the ctor site"),
            links: self.chain.clone(),
            ending: EndingSite {
                method: cur.sig.clone(),
                loc,
                api: api.clone(),
            },
        });
    }

    /// A tainted object stored into a field re-introduces taint at every
    /// read of that field, bounded to `max_field_hops`.
    fn field_hop(&mut self, field: &FieldRef) {
        if self.field_hops >= self.tracker.config.max_field_hops {
            return;
        }
        self.field_hops += 1;
        let readers = self.tracker.session.field_access(field, FieldMode::Get);
        for reader in readers {
            if self.ended() {
                break;
            }
            let Some(method) = self.tracker.model.method(&reader).cloned() else {
                continue;
            };
            if self.stack.iter().any(|(m, _)| m == &reader) {
                self.tracker.loops.inner_forward += 1;
                continue;
            }
            // Taint every register loaded from the field.
            let mut tainted = HashSet::new();
            for i in &method.body {
                if let InstrKind::Def { lhs, expr } = &i.kind {
                    match expr {
                        Expr::FieldGet { field: f, .. } | Expr::StaticGet(f) if f == field => {
                            tainted.insert(*lhs);
                        }
                        _ => {}
                    }
                }
            }
            if tainted.is_empty() {
                continue;
            }
            self.chain.push(CallerEdge {
                caller: self
                    .stack
                    .last()
                    .map(|(m, _)| m.clone())
                    .unwrap_or_else(|| method.sig.clone()),
                callee: reader.clone(),
                via: Via::AdvancedChain,
                site: None,
            });
            self.stack.push((reader.clone(), vec![usize::MAX]));
            self.walk(&method, None, tainted);
            self.stack.pop();
            if !self.ended() {
                self.chain.pop();
            }
        }
        self.field_hops -= 1;
    }
}

fn dedup_edges(edges: Vec<CallerEdge>) -> Vec<CallerEdge> {
    let mut seen = HashSet::new();
    edges
        .into_iter()
        .filter(|e| {
            seen.insert((
                e.caller.render_search(),
                e.site.as_ref().map(|(l, _)| *l),
                std::mem::discriminant(&e.via),
            ))
        })
        .collect()
}

fn dedup_callers(callers: Vec<ResolvedCaller>) -> Vec<ResolvedCaller> {
    let mut seen = HashSet::new();
    callers
        .into_iter()
        .filter(|c| {
            let key = match c {
                ResolvedCaller::Edge(e) => format!(
                    "E:{}:{:?}:{:?}",
                    e.caller.render_search(),
                    e.site.as_ref().map(|(l, _)| *l),
                    std::mem::discriminant(&e.via)
                ),
                ResolvedCaller::Chain(ch) => format!(
                    "C:{}:{:?}:{:?}",
                    ch.ctor_site.method.render_search(),
                    ch.ctor_site.loc,
                    ch.ending.loc
                ),
            };
            seen.insert(key)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::AnalysisConfig;
    use crate::index::SearchIndex;
    use crate::sbc::parser::parse_app_from_sources;

    fn setup(text: &str, manifest: &str) -> (Arc<AppModel>, ClassHierarchy, AnalysisConfig) {
        let model = Arc::new(
            parse_app_from_sources(
                &[("app.sbc".to_string(), text.to_string())],
                manifest,
                &["java/".into(), "javax/".into(), "android/".into()],
            )
            .unwrap(),
        );
        let hierarchy = ClassHierarchy::build(&model).unwrap();
        (model, hierarchy, AnalysisConfig::default())
    }

    fn tracker<'a>(
        model: &Arc<AppModel>,
        hierarchy: &'a ClassHierarchy,
        config: &'a AnalysisConfig,
    ) -> Backtracker<'a> {
        let index = Arc::new(SearchIndex::build(model.clone()));
        Backtracker::new(model.clone(), hierarchy, config, SearchSession::new(index))
    }

    fn sig(s: &str) -> MethodSig {
        MethodSig::parse_search(s).unwrap()
    }

    const FIG34: &str = "\
.class public Lcom/connectsdk/service/netcast/NetcastHttpServer;
.method public constructor <init>()V
  return-void
.end method
.method private start()V
  return-void
.end method
.class public Lcom/connectsdk/service/NetcastTVService$1;
.implements Ljava/lang/Runnable;
.method public constructor <init>(Lcom/connectsdk/service/NetcastTVService;)V
  return-void
.end method
.method public run()V
  v0 = param 0
  v1 = new Lcom/connectsdk/service/netcast/NetcastHttpServer;
  invoke v1 Lcom/connectsdk/service/netcast/NetcastHttpServer;.<init>:()V
  invoke v1 Lcom/connectsdk/service/netcast/NetcastHttpServer;.start:()V
  return-void
.end method
.class public Lcom/connectsdk/service/NetcastTVService;
.method public connect()V
  v0 = param 0
  v1 = new Lcom/connectsdk/service/NetcastTVService$1;
  invoke v1 Lcom/connectsdk/service/NetcastTVService$1;.<init>:(Lcom/connectsdk/service/NetcastTVService;)V v0
  invoke Lcom/connectsdk/core/Util;.runInBackground:(Ljava/lang/Runnable;)V v1
  return-void
.end method
.class public Lcom/connectsdk/core/Util;
.method public static runInBackground(Ljava/lang/Runnable;)V
  v0 = param 0
  v1 = const 0
  invoke Lcom/connectsdk/core/Util;.runInBackground:(Ljava/lang/Runnable;Z)V v0 v1
  return-void
.end method
.method public static runInBackground(Ljava/lang/Runnable;Z)V
  v0 = param 0
  v1 = param 1
  v2 = invoke Ljava/util/concurrent/Executors;.newSingleThreadExecutor:()Ljava/util/concurrent/Executor;
  invoke v2 Ljava/util/concurrent/Executor;.execute:(Ljava/lang/Runnable;)V v0
  return-void
.end method
";

    #[test]
    fn private_method_resolved_by_direct_signature_search() {
        let (model, hierarchy, config) = setup(FIG34, "");
        let mut t = tracker(&model, &hierarchy, &config);
        let callee = sig("Lcom/connectsdk/service/netcast/NetcastHttpServer;.start:()V");
        match t.find_callers(&callee, true) {
            CallersOutcome::Callers(cs) => {
                assert_eq!(cs.len(), 1);
                match &cs[0] {
                    ResolvedCaller::Edge(e) => {
                        assert_eq!(
                            e.caller.render_search(),
                            "Lcom/connectsdk/service/NetcastTVService$1;.run:()V"
                        );
                        assert_eq!(e.via, Via::Direct);
                    }
                    other => panic!("unexpected {other:?}"),
                }
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn interface_method_resolved_by_advanced_chain() {
        let (model, hierarchy, config) = setup(FIG34, "");
        let mut t = tracker(&model, &hierarchy, &config);
        let callee = sig("Lcom/connectsdk/service/NetcastTVService$1;.run:()V");
        let CallersOutcome::Callers(cs) = t.find_callers(&callee, true) else {
            panic!("expected callers");
        };
        let chains: Vec<&CallChain> = cs
            .iter()
            .filter_map(|c| match c {
                ResolvedCaller::Chain(ch) => Some(ch),
                _ => None,
            })
            .collect();
        assert_eq!(chains.len(), 1);
        let methods: Vec<String> = chains[0]
            .methods()
            .iter()
            .map(|m| m.render_analysis())
            .collect();
        assert_eq!(
            methods,
            vec![
                "<com.connectsdk.service.NetcastTVService: void connect()>",
                "<com.connectsdk.core.Util: void runInBackground(java.lang.Runnable)>",
                "<com.connectsdk.core.Util: void runInBackground(java.lang.Runnable,boolean)>",
            ]
        );
        assert_eq!(
            chains[0].ending.api.render_search(),
            "Ljava/util/concurrent/Executor;.execute:(Ljava/lang/Runnable;)V"
        );
    }

    #[test]
    fn zero_caller_method_yields_empty() {
        let (model, hierarchy, config) = setup(FIG34, "");
        let mut t = tracker(&model, &hierarchy, &config);
        let callee = sig("Lcom/connectsdk/service/NetcastTVService;.connect:()V");
        let CallersOutcome::Callers(cs) = t.find_callers(&callee, true) else {
            panic!("expected callers");
        };
        assert!(cs.is_empty());
        assert!(t.diagnostics.iter().any(|d| d.contains("UnresolvedCallee")));
    }

    const CHILD: &str = "\
.class public Lcom/x/Base;
.method public constructor <init>()V
  return-void
.end method
.method public m()V
  return-void
.end method
.class public Lcom/x/Child;
.super Lcom/x/Base;
.method public constructor <init>()V
  return-void
.end method
.class public Lcom/x/Over;
.super Lcom/x/Base;
.method public constructor <init>()V
  return-void
.end method
.method public m()V
  return-void
.end method
.class public Lcom/x/Use;
.method public static go()V
  v0 = new Lcom/x/Child;
  invoke v0 Lcom/x/Child;.<init>:()V
  invoke v0 Lcom/x/Child;.m:()V
  v1 = new Lcom/x/Over;
  invoke v1 Lcom/x/Over;.<init>:()V
  invoke v1 Lcom/x/Over;.m:()V
  return-void
.end method
";

    #[test]
    fn child_class_search_respects_overloads() {
        let (model, hierarchy, config) = setup(CHILD, "");
        let mut t = tracker(&model, &hierarchy, &config);
        let base_m = sig("Lcom/x/Base;.m:()V");
        let edges = t.basic_search(&base_m);
        // The Child-qualified call is found; the Over-qualified call belongs
        // to the overload and is not attributed to Base.m.
        assert_eq!(edges.len(), 1);
        assert_eq!(edges[0].via, Via::ChildClassSig);
        assert!(edges[0]
            .site
            .as_ref()
            .unwrap()
            .1
            .kind
            .render()
            .contains("Lcom/x/Child;.m:()V"));

        // Brute-force dispatch enumeration oracle: resolve every invoke in
        // the app by hierarchy and compare the caller set for Base.m.
        let mut brute: Vec<MethodSig> = Vec::new();
        for m in model.methods() {
            for i in &m.body {
                if let Some(iv) = i.kind.invoke_expr() {
                    if iv.callee.name != "m" {
                        continue;
                    }
                    if let Some(def) = hierarchy.resolve_subsig(&iv.callee.class, "m:()V") {
                        if def == &base_m.class {
                            brute.push(m.sig.clone());
                        }
                    }
                }
            }
        }
        assert_eq!(
            brute,
            edges.iter().map(|e| e.caller.clone()).collect::<Vec<_>>()
        );

        let over_m = sig("Lcom/x/Over;.m:()V");
        let edges = t.basic_search(&over_m);
        assert_eq!(edges.len(), 1);
        assert_eq!(edges[0].via, Via::Direct);
    }

    const SUPER_CASE: &str = "\
.class public Lcom/x/SuperServer;
.method public constructor <init>()V
  return-void
.end method
.method public start()V
  return-void
.end method
.class public Lcom/x/NetcastHttpServer;
.super Lcom/x/SuperServer;
.method public constructor <init>()V
  return-void
.end method
.method public start()V
  return-void
.end method
.class public Lcom/x/Use;
.method public static go()V
  v0 = new Lcom/x/NetcastHttpServer;
  invoke v0 Lcom/x/NetcastHttpServer;.<init>:()V
  v1 = cast Lcom/x/SuperServer; v0
  invoke v1 Lcom/x/SuperServer;.start:()V
  return-void
.end method
";

    #[test]
    fn super_typed_call_found_by_advanced_search() {
        let (model, hierarchy, config) = setup(SUPER_CASE, "");
        let mut t = tracker(&model, &hierarchy, &config);
        let callee = sig("Lcom/x/NetcastHttpServer;.start:()V");
        let chains = t.advanced_search(&callee, &ClassName::from_slashed("com/x/SuperServer"));
        assert_eq!(chains.len(), 1);
        assert!(chains[0].links.is_empty());
        assert_eq!(chains[0].ending.method.render_search(), "Lcom/x/Use;.go:()V");
        assert_eq!(
            chains[0].ending.api.render_search(),
            "Lcom/x/SuperServer;.start:()V"
        );
    }

    #[test]
    fn ctor_without_ending_yields_no_chain() {
        let text = "\
.class public Lcom/x/W;
.implements Ljava/lang/Runnable;
.method public constructor <init>()V
  return-void
.end method
.method public run()V
  return-void
.end method
.class public Lcom/x/Use;
.method public static go()V
  v0 = new Lcom/x/W;
  invoke v0 Lcom/x/W;.<init>:()V
  return-void
.end method
";
        let (model, hierarchy, config) = setup(text, "");
        let mut t = tracker(&model, &hierarchy, &config);
        let chains = t.advanced_search(
            &sig("Lcom/x/W;.run:()V"),
            &ClassName::from_slashed("java/lang/Runnable"),
        );
        assert!(chains.is_empty());
        assert!(t.diagnostics.iter().any(|d| d.contains("NoEndingMethod")));
    }

    const HEYZAP: &str = "\
.class public Lcom/heyzap/internal/APIClient;
.method static constructor <clinit>()V
  v0 = const 1
  sput v0 Lcom/heyzap/internal/APIClient;.READY:I
  return-void
.end method
.field static READY:I
.class public Lcom/heyzap/house/model/AdModel;
.method public fetch()V
  v0 = sget Lcom/heyzap/internal/APIClient;.READY:I
  return-void
.end method
.class public Lcom/heyzap/sdk/ads/HeyzapInterstitialActivity;
.super Landroid/app/Activity;
.method public onCreate()V
  v0 = param 0
  v1 = new Lcom/heyzap/house/model/AdModel;
  invoke v1 Lcom/heyzap/house/model/AdModel;.<init>:()V
  return-void
.end method
";

    #[test]
    fn clinit_reachability_via_recursive_class_search() {
        let (model, hierarchy, config) = setup(
            HEYZAP,
            "activity Lcom/heyzap/sdk/ads/HeyzapInterstitialActivity; exported\n",
        );
        let mut t = tracker(&model, &hierarchy, &config);
        let (ok, witness) =
            t.clinit_reachable(&ClassName::from_slashed("com/heyzap/internal/APIClient"));
        assert!(ok);
        let names: Vec<&str> = witness.iter().map(|c| c.slashed()).collect();
        assert_eq!(
            names,
            vec![
                "com/heyzap/internal/APIClient",
                "com/heyzap/house/model/AdModel",
                "com/heyzap/sdk/ads/HeyzapInterstitialActivity"
            ]
        );

        let (ok, witness) = t.clinit_reachable(&ClassName::from_slashed("com/x/Orphan"));
        assert!(!ok);
        assert!(witness.is_empty());
    }

    const ICC: &str = "\
.class public Lcom/lge/app1/MainActivity;
.super Landroid/app/Activity;
.method public onCreate()V
  v0 = param 0
  v1 = new Landroid/content/Intent;
  invoke v1 Landroid/content/Intent;.<init>:()V
  v2 = const class Lcom/lge/app1/fota/HttpServerService;
  invoke v1 Landroid/content/Intent;.setClass:(Ljava/lang/Class;)V v2
  invoke v0 Landroid/app/Activity;.startService:(Landroid/content/Intent;)V v1
  return-void
.end method
.method public lonely()V
  v0 = const class Lcom/lge/app1/fota/HttpServerService;
  return-void
.end method
.class public Lcom/lge/app1/fota/HttpServerService;
.super Landroid/app/Service;
.method public onStartCommand(Landroid/content/Intent;)I
  v0 = param 0
  v1 = param 1
  v2 = const 0
  return v2
.end method
";

    #[test]
    fn explicit_icc_edge_requires_both_searches() {
        let manifest = "activity Lcom/lge/app1/MainActivity; exported\nservice Lcom/lge/app1/fota/HttpServerService;\n";
        let (model, hierarchy, config) = setup(ICC, manifest);
        let mut t = tracker(&model, &hierarchy, &config);
        let handler =
            sig("Lcom/lge/app1/fota/HttpServerService;.onStartCommand:(Landroid/content/Intent;)I");
        let comp = model.manifest.components[1].clone();
        let edges = t.icc_callers(&handler, &comp);
        // `lonely()` holds the const-class token but no ICC call; only
        // onCreate satisfies both searches.
        assert_eq!(edges.len(), 1);
        assert_eq!(
            edges[0].caller.render_search(),
            "Lcom/lge/app1/MainActivity;.onCreate:()V"
        );
        match &edges[0].via {
            Via::Icc {
                low_confidence,
                intent_arg,
            } => {
                assert!(!low_confidence);
                assert_eq!(*intent_arg, 0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn action_without_icc_call_yields_nothing() {
        let text = "\
.class public Lcom/x/A;
.method public static note()V
  v0 = const \"com.x.ACTION_GO\"
  return-void
.end method
.class public Lcom/x/Svc;
.super Landroid/app/Service;
.method public onStartCommand(Landroid/content/Intent;)I
  v0 = const 0
  return v0
.end method
";
        let (model, hierarchy, config) =
            setup(text, "service Lcom/x/Svc; action=com.x.ACTION_GO\n");
        let mut t = tracker(&model, &hierarchy, &config);
        let handler = sig("Lcom/x/Svc;.onStartCommand:(Landroid/content/Intent;)I");
        let comp = model.manifest.components[0].clone();
        assert!(t.icc_callers(&handler, &comp).is_empty());
    }

    const LIFECYCLE: &str = "\
.class public Lcom/x/Main;
.super Landroid/app/Activity;
.method public onCreate()V
  return-void
.end method
.method public onStart()V
  return-void
.end method
.method public onResume()V
  return-void
.end method
.class public Lcom/x/Unreg;
.super Landroid/app/Activity;
.method public onResume()V
  return-void
.end method
";

    #[test]
    fn lifecycle_predecessors_follow_table() {
        let (model, hierarchy, config) = setup(LIFECYCLE, "activity Lcom/x/Main;\n");
        let mut t = tracker(&model, &hierarchy, &config);
        let on_resume = sig("Lcom/x/Main;.onResume:()V");
        assert_eq!(
            t.lifecycle_predecessors(&on_resume, true),
            LifecycleResolution::EntryReached
        );
        match t.lifecycle_predecessors(&on_resume, false) {
            LifecycleResolution::Predecessors(p) => {
                // onStart is defined; onPause is not, so only one frame.
                assert_eq!(p, vec![sig("Lcom/x/Main;.onStart:()V")]);
            }
            other => panic!("unexpected {other:?}"),
        }
        // Handler of an unregistered component: not a component entry, and
        // no caller anywhere, so paths above it die.
        let unreg = sig("Lcom/x/Unreg;.onResume:()V");
        assert_eq!(
            t.lifecycle_predecessors(&unreg, false),
            LifecycleResolution::NotComponent
        );
        let CallersOutcome::Callers(cs) = t.find_callers(&unreg, false) else {
            panic!("expected plain callers for unregistered handler");
        };
        assert!(cs.is_empty());
    }

    #[test]
    fn sink_method_cache_round_trip() {
        let (model, hierarchy, config) = setup(LIFECYCLE, "activity Lcom/x/Main;\n");
        let mut t = tracker(&model, &hierarchy, &config);
        let m = sig("Lcom/x/Unreg;.onResume:()V");
        assert_eq!(t.sink_cache_lookup(&m), None);
        t.sink_cache_store(&m, false);
        assert_eq!(t.sink_cache_lookup(&m), Some(false));
        assert_eq!(t.sink_cache_hits, 1);
    }

    const FORWARD_LOOP: &str = "\
.class public Lcom/x/W;
.implements Ljava/lang/Runnable;
.method public constructor <init>()V
  return-void
.end method
.method public run()V
  return-void
.end method
.class public Lcom/x/P;
.method public static go()V
  v0 = new Lcom/x/W;
  invoke v0 Lcom/x/W;.<init>:()V
  invoke Lcom/x/P;.ping:(Ljava/lang/Runnable;)V v0
  return-void
.end method
.method public static ping(Ljava/lang/Runnable;)V
  v0 = param 0
  invoke Lcom/x/P;.pong:(Ljava/lang/Runnable;)V v0
  return-void
.end method
.method public static pong(Ljava/lang/Runnable;)V
  v0 = param 0
  invoke Lcom/x/P;.ping:(Ljava/lang/Runnable;)V v0
  return-void
.end method
";

    #[test]
    fn forward_taint_loop_detected_and_pruned() {
        let (model, hierarchy, config) = setup(FORWARD_LOOP, "");
        let mut t = tracker(&model, &hierarchy, &config);
        let chains = t.advanced_search(
            &sig("Lcom/x/W;.run:()V"),
            &ClassName::from_slashed("java/lang/Runnable"),
        );
        assert!(chains.is_empty());
        assert!(t.loops.cross_forward >= 1);
    }
}
