//! Whole-app baseline analyzer used for differential correctness testing
//! and speed comparison: an eager CHA call graph (plus callback/async-table,
//! ICC, and implicit `<clinit>` edges), entry-point reachability for every
//! sink, and app-wide constant propagation to fixpoint. Judged with the same
//! detectors as the targeted analyzer, but the graph construction and fact
//! transfer here are written independently of the search-based pipeline.

use crate::config::AnalysisConfig;
use crate::detect::{judge, SinkSpec, Verdict};
use crate::eval::{Fact, SinkFactResult, Value};
use crate::sbc::hierarchy::{entry_points, ClassHierarchy};
use crate::sbc::model::*;
use crate::sbc::types::*;
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::sync::Arc;
use std::time::Instant;

#[derive(Debug, Clone, Serialize)]
pub struct OracleMetrics {
    pub methods_total: usize,
    /// Methods reached from entry points over the whole-app graph; the
    /// count of methods the forward analysis actually visits.
    pub visited_methods: usize,
    pub edges: usize,
    pub wall_ms: f64,
}

pub struct OracleOutcome {
    pub verdicts: Vec<Verdict>,
    pub results: Vec<SinkFactResult>,
    pub metrics: OracleMetrics,
}

/// Whole-app call graph with CHA-resolved virtual edges.
pub struct WholeAppCallGraph {
    pub edges: HashMap<MethodSig, Vec<MethodSig>>,
    pub entries: BTreeSet<MethodSig>,
    pub edge_count: usize,
}

pub fn build_call_graph(
    model: &AppModel,
    hierarchy: &ClassHierarchy,
    config: &AnalysisConfig,
) -> WholeAppCallGraph {
    let (entries, _warnings) = entry_points(model, hierarchy, &config.lifecycle);
    let mut edges: HashMap<MethodSig, Vec<MethodSig>> = HashMap::new();
    let mut edge_count = 0usize;

    // Handler methods per sub-signature, for callback/async table edges.
    let mut by_subsig: HashMap<String, Vec<MethodSig>> = HashMap::new();
    for m in model.methods() {
        by_subsig
            .entry(m.sig.subsig())
            .or_default()
            .push(m.sig.clone());
    }

    for method in model.methods() {
        let mut out: Vec<MethodSig> = Vec::new();
        let mut referenced_classes: BTreeSet<ClassName> = BTreeSet::new();
        let mut const_classes: BTreeSet<ClassName> = BTreeSet::new();
        let mut const_strings: BTreeSet<String> = BTreeSet::new();

        for instr in &method.body {
            collect_operand_classes(&instr.kind, &mut referenced_classes);
            if let InstrKind::Def { expr, .. } = &instr.kind {
                match expr {
                    Expr::Const(ConstVal::Class(c)) => {
                        const_classes.insert(c.clone());
                    }
                    Expr::Const(ConstVal::Str(s)) => {
                        const_strings.insert(s.clone());
                    }
                    _ => {}
                }
            }
            let Some(iv) = instr.kind.invoke_expr() else {
                continue;
            };
            let callee = &iv.callee;

            // Direct / hierarchy-resolved target.
            if let Some(def_class) = hierarchy.resolve_subsig(&callee.class, &callee.subsig()) {
                out.push(callee.with_class(def_class.clone()));
            }
            // CHA: overrides in every descendant of the declared class.
            for desc in hierarchy.descendants(&callee.class) {
                if let Some(cls) = model.class(&desc) {
                    if cls.method_by_subsig(&callee.subsig()).is_some() {
                        out.push(callee.with_class(desc.clone()));
                    }
                }
            }
            // Callback/async registration pairs: edge to every app method
            // with the handler sub-signature.
            for pair in &config.callback_pairs {
                if callee.class == pair.api_class && callee.name == pair.api_name {
                    if let Some(handlers) = by_subsig.get(&pair.handler_subsig) {
                        out.extend(handlers.iter().cloned());
                    }
                }
            }
            // ICC: method-granular resolution of explicit and implicit
            // intents to component lifecycle handlers.
            if config.is_icc_api(&callee.name) && model.is_opaque(&callee.class) {
                for comp in &model.manifest.components {
                    let explicit = const_classes.contains(&comp.class);
                    let implicit = comp.actions.iter().any(|a| const_strings.contains(a));
                    if explicit || implicit {
                        for handler in config.lifecycle.handlers(comp.kind) {
                            if let Some(h) = hierarchy.resolve_by_name(model, &comp.class, handler)
                            {
                                out.push(h.sig.clone());
                            }
                        }
                    }
                }
            }
        }

        // Implicit <clinit> edges: loading a referenced class runs its
        // static initializer.
        for c in referenced_classes {
            if c == method.sig.class {
                continue;
            }
            if let Some(cls) = model.class(&c) {
                if let Some(cl) = cls.clinit() {
                    out.push(cl.sig.clone());
                }
            }
        }

        out.sort();
        out.dedup();
        edge_count += out.len();
        edges.insert(method.sig.clone(), out);
    }

    WholeAppCallGraph {
        edges,
        entries,
        edge_count,
    }
}

fn collect_operand_classes(kind: &InstrKind, out: &mut BTreeSet<ClassName>) {
    let push_desc = |d: &TypeDesc, out: &mut BTreeSet<ClassName>| {
        if let Some(c) = d.base_class() {
            out.insert(c.clone());
        }
    };
    match kind {
        InstrKind::Def { expr, .. } => match expr {
            Expr::Const(ConstVal::Class(c)) => {
                out.insert(c.clone());
            }
            Expr::New(c) => {
                out.insert(c.clone());
            }
            Expr::NewArray { elem, .. } => push_desc(elem, out),
            Expr::Cast { ty, .. } => push_desc(ty, out),
            Expr::Invoke(iv) => {
                out.insert(iv.callee.class.clone());
            }
            Expr::FieldGet { field, .. } | Expr::StaticGet(field) => {
                out.insert(field.class.clone());
            }
            _ => {}
        },
        InstrKind::Invoke(iv) => {
            out.insert(iv.callee.class.clone());
        }
        InstrKind::FieldPut { field, .. } | InstrKind::StaticPut { field, .. } => {
            out.insert(field.class.clone());
        }
        _ => {}
    }
}

/// Entry-reachable methods with parent pointers for witness chains.
fn reachability(
    graph: &WholeAppCallGraph,
) -> (BTreeSet<MethodSig>, HashMap<MethodSig, MethodSig>) {
    let mut reachable: BTreeSet<MethodSig> = BTreeSet::new();
    let mut parent: HashMap<MethodSig, MethodSig> = HashMap::new();
    let mut queue: VecDeque<MethodSig> = VecDeque::new();
    for e in &graph.entries {
        if reachable.insert(e.clone()) {
            queue.push_back(e.clone());
        }
    }
    while let Some(m) = queue.pop_front() {
        if let Some(nexts) = graph.edges.get(&m) {
            for n in nexts {
                if reachable.insert(n.clone()) {
                    parent.insert(n.clone(), m.clone());
                    queue.push_back(n.clone());
                }
            }
        }
    }
    (reachable, parent)
}

/// App-wide abstract state for the oracle's constant propagation: one map
/// per storage class, instance-insensitive.
#[derive(Default)]
struct GlobalState {
    statics: BTreeMap<FieldRef, Fact>,
    fields: BTreeMap<FieldRef, Fact>,
    extras: BTreeMap<String, Fact>,
    params: BTreeMap<MethodSig, BTreeMap<usize, Fact>>,
    returns: BTreeMap<MethodSig, Fact>,
    changed: bool,
}

impl GlobalState {
    fn join_into(map: &mut BTreeMap<FieldRef, Fact>, k: &FieldRef, v: &Fact, changed: &mut bool) {
        let cur = map.get(k).cloned().unwrap_or(Fact::Unresolved);
        let next = cur.join(v);
        if next != cur {
            map.insert(k.clone(), next);
            *changed = true;
        }
    }

    fn join_param(&mut self, m: &MethodSig, k: usize, v: &Fact) {
        let entry = self.params.entry(m.clone()).or_default();
        let cur = entry.get(&k).cloned().unwrap_or(Fact::Unresolved);
        let next = cur.join(v);
        if next != cur {
            entry.insert(k, next);
            self.changed = true;
        }
    }

    fn join_return(&mut self, m: &MethodSig, v: &Fact) {
        let cur = self.returns.get(m).cloned().unwrap_or(Fact::Unresolved);
        let next = cur.join(v);
        if next != cur {
            self.returns.insert(m.clone(), next);
            self.changed = true;
        }
    }
}

/// Local object tracked within one method visit: string-builder content.
/// Intent extras live in the global per-key map.
#[derive(Debug, Clone, Default)]
struct LocalObj {
    builder: Option<Fact>,
}

struct Interp<'a> {
    model: &'a AppModel,
    hierarchy: &'a ClassHierarchy,
    graph: &'a WholeAppCallGraph,
}

impl<'a> Interp<'a> {
    /// Interpret one method body in line order, pushing argument facts into
    /// callee summaries and joining heap effects into the global state.
    fn run(&self, method: &Method, state: &mut GlobalState) {
        let mut regs: HashMap<Reg, Fact> = HashMap::new();
        let mut objs: HashMap<Reg, LocalObj> = HashMap::new();
        let incoming = state.params.get(&method.sig).cloned().unwrap_or_default();
        let is_entry = self.graph.entries.contains(&method.sig);

        let get = |regs: &HashMap<Reg, Fact>, r: Reg| -> Fact {
            regs.get(&r).cloned().unwrap_or(Fact::Unresolved)
        };

        for instr in &method.body {
            match &instr.kind {
                InstrKind::Def { lhs, expr } => {
                    let fact = match expr {
                        Expr::Const(ConstVal::Int(i)) => Fact::one(Value::Int(*i)),
                        Expr::Const(ConstVal::Str(s)) => Fact::one(Value::Str(s.clone())),
                        Expr::Const(ConstVal::Class(c)) => Fact::one(Value::Class(c.clone())),
                        Expr::Param(k) => incoming
                            .get(k)
                            .cloned()
                            .unwrap_or(if is_entry { Fact::Unknown } else { Fact::Unresolved }),
                        Expr::New(_) => {
                            objs.insert(*lhs, LocalObj::default());
                            Fact::Unknown
                        }
                        Expr::NewArray { .. } => Fact::Unknown,
                        Expr::Binop { op, a, b } => {
                            oracle_binop(*op, &get(&regs, *a), &get(&regs, *b))
                        }
                        Expr::Cast { src, .. } => {
                            if let Some(o) = objs.get(src).cloned() {
                                objs.insert(*lhs, o);
                            }
                            get(&regs, *src)
                        }
                        Expr::Phi(rs) => {
                            let mut acc = Fact::Unresolved;
                            for r in rs {
                                acc = acc.join(&get(&regs, *r));
                            }
                            acc
                        }
                        Expr::Invoke(iv) => {
                            let f = self.invoke(iv, &mut regs, &mut objs, state);
                            alias_builder_result(iv, *lhs, &mut objs);
                            f
                        }
                        Expr::FieldGet { field, .. } => state
                            .fields
                            .get(field)
                            .cloned()
                            .unwrap_or(Fact::Unresolved),
                        Expr::StaticGet(f) => {
                            if self.model.is_opaque(&f.class) {
                                Fact::one(Value::Named(f.clone()))
                            } else {
                                state.statics.get(f).cloned().unwrap_or(Fact::Unresolved)
                            }
                        }
                        Expr::ArrayGet { .. } => Fact::Unknown,
                    };
                    regs.insert(*lhs, fact);
                }
                InstrKind::Invoke(iv) => {
                    let _ = self.invoke(iv, &mut regs, &mut objs, state);
                }
                InstrKind::FieldPut { value, field, .. } => {
                    let v = get(&regs, *value);
                    let mut ch = state.changed;
                    GlobalState::join_into(&mut state.fields, field, &v, &mut ch);
                    state.changed = ch;
                }
                InstrKind::StaticPut { value, field } => {
                    let v = get(&regs, *value);
                    let mut ch = state.changed;
                    GlobalState::join_into(&mut state.statics, field, &v, &mut ch);
                    state.changed = ch;
                }
                InstrKind::ArrayPut { .. } => {}
                InstrKind::Return(Some(r)) => {
                    let v = get(&regs, *r);
                    state.join_return(&method.sig, &v);
                }
                InstrKind::Return(None)
                | InstrKind::Goto(_)
                | InstrKind::If { .. }
                | InstrKind::Label(_) => {}
            }
        }
    }

    fn invoke(
        &self,
        iv: &InvokeExpr,
        regs: &mut HashMap<Reg, Fact>,
        objs: &mut HashMap<Reg, LocalObj>,
        state: &mut GlobalState,
    ) -> Fact {
        let get = |regs: &HashMap<Reg, Fact>, r: Reg| -> Fact {
            regs.get(&r).cloned().unwrap_or(Fact::Unresolved)
        };

        // App targets per CHA: propagate argument facts into summaries.
        let mut targets: Vec<MethodSig> = Vec::new();
        if let Some(def) = self
            .hierarchy
            .resolve_subsig(&iv.callee.class, &iv.callee.subsig())
        {
            targets.push(iv.callee.with_class(def.clone()));
        }
        for desc in self.hierarchy.descendants(&iv.callee.class) {
            if let Some(cls) = self.model.class(&desc) {
                if cls.method_by_subsig(&iv.callee.subsig()).is_some() {
                    targets.push(iv.callee.with_class(desc));
                }
            }
        }
        if !targets.is_empty() {
            let mut ret = Fact::Unresolved;
            for t in targets {
                let target = self.model.method(&t);
                let is_static = target.map(|m| m.flags.is_static).unwrap_or(iv.recv.is_none());
                for (i, a) in iv.args.iter().enumerate() {
                    let k = if is_static { i } else { i + 1 };
                    state.join_param(&t, k, &get(regs, *a));
                }
                ret = ret.join(&state.returns.get(&t).cloned().unwrap_or(Fact::Unresolved));
            }
            return ret;
        }

        // Framework semantics, written independently of the targeted
        // analyzer's api models.
        let class = iv.callee.class.slashed();
        let name = iv.callee.name.as_str();
        match (class, name) {
            ("java/lang/StringBuilder", "<init>") => {
                if let Some(r) = iv.recv {
                    let init = iv
                        .args
                        .first()
                        .map(|a| get(regs, *a))
                        .unwrap_or_else(|| Fact::one(Value::Str(String::new())));
                    objs.entry(r).or_default().builder = Some(init);
                }
                Fact::Unknown
            }
            ("java/lang/StringBuilder", "append") => {
                if let Some(r) = iv.recv {
                    let add = iv.args.first().map(|a| get(regs, *a)).unwrap_or(Fact::Unknown);
                    let o = objs.entry(r).or_default();
                    let cur = o
                        .builder
                        .clone()
                        .unwrap_or_else(|| Fact::one(Value::Str(String::new())));
                    o.builder = Some(oracle_binop(BinOp::Concat, &cur, &add));
                    // Builder pattern: the receiver flows through.
                    return get(regs, r);
                }
                Fact::Unknown
            }
            ("java/lang/StringBuilder", "toString") => iv
                .recv
                .and_then(|r| objs.get(&r))
                .and_then(|o| o.builder.clone())
                .unwrap_or(Fact::Unknown),
            ("java/lang/String", "valueOf") | ("java/lang/Integer", "toString") => iv
                .args
                .first()
                .map(|a| oracle_stringify(&get(regs, *a)))
                .unwrap_or(Fact::Unknown),
            ("java/lang/String", "concat") => {
                let r = iv.recv.map(|r| get(regs, r)).unwrap_or(Fact::Unknown);
                let a = iv.args.first().map(|a| get(regs, *a)).unwrap_or(Fact::Unknown);
                oracle_binop(BinOp::Concat, &r, &a)
            }
            ("java/lang/Integer", "parseInt") => match iv.args.first().map(|a| get(regs, *a)) {
                Some(Fact::Consts(vs)) => {
                    let parsed: BTreeSet<Value> = vs
                        .iter()
                        .filter_map(|v| match v {
                            Value::Str(s) => s.trim().parse::<i64>().ok().map(Value::Int),
                            _ => None,
                        })
                        .collect();
                    if parsed.is_empty() {
                        Fact::Unknown
                    } else {
                        Fact::Consts(parsed)
                    }
                }
                Some(Fact::Unresolved) => Fact::Unresolved,
                _ => Fact::Unknown,
            },
            ("android/content/Intent", "putExtra") => {
                if let (Some(k), Some(v)) = (iv.args.first(), iv.args.get(1)) {
                    if let Fact::Consts(keys) = get(regs, *k) {
                        for key in keys {
                            if let Value::Str(ks) = key {
                                let cur = state
                                    .extras
                                    .get(&ks)
                                    .cloned()
                                    .unwrap_or(Fact::Unresolved);
                                let next = cur.join(&get(regs, *v));
                                if Some(&next) != state.extras.get(&ks) {
                                    state.extras.insert(ks, next);
                                    state.changed = true;
                                }
                            }
                        }
                    }
                }
                Fact::Unknown
            }
            ("android/content/Intent", n) if n.starts_with("get") && n.ends_with("Extra") => iv
                .args
                .first()
                .map(|k| match get(regs, *k) {
                    Fact::Consts(keys) => {
                        let mut acc = Fact::Unresolved;
                        for key in keys {
                            if let Value::Str(ks) = key {
                                acc = acc
                                    .join(&state.extras.get(&ks).cloned().unwrap_or(Fact::Unknown));
                            }
                        }
                        acc
                    }
                    _ => Fact::Unknown,
                })
                .map(|f| f.join(&Fact::Unresolved))
                .unwrap_or(Fact::Unknown),
            _ => Fact::Unknown,
        }
    }
}

/// Chain-style builder use (`v1 = v0.append(x)`) snapshots the receiver's
/// local object onto the result register.
fn alias_builder_result(iv: &InvokeExpr, lhs: Reg, objs: &mut HashMap<Reg, LocalObj>) {
    if iv.callee.class.slashed() == "java/lang/StringBuilder" && iv.callee.name == "append" {
        if let Some(r) = iv.recv {
            if let Some(o) = objs.get(&r).cloned() {
                objs.insert(lhs, o);
            }
        }
    }
}

fn oracle_stringify(f: &Fact) -> Fact {
    match f {
        Fact::Consts(vs) => {
            let out: BTreeSet<Value> = vs
                .iter()
                .filter_map(|v| match v {
                    Value::Int(i) => Some(Value::Str(i.to_string())),
                    Value::Str(s) => Some(Value::Str(s.clone())),
                    _ => None,
                })
                .collect();
            if out.is_empty() {
                Fact::Unknown
            } else {
                Fact::Consts(out)
            }
        }
        other => other.clone(),
    }
}

fn oracle_binop(op: BinOp, a: &Fact, b: &Fact) -> Fact {
    match (a, b) {
        (Fact::Unknown, _) | (_, Fact::Unknown) => Fact::Unknown,
        (Fact::Unresolved, _) | (_, Fact::Unresolved) => Fact::Unresolved,
        (Fact::Consts(xs), Fact::Consts(ys)) => {
            let mut out = BTreeSet::new();
            for x in xs {
                for y in ys {
                    match (op, x, y) {
                        (BinOp::Add, Value::Int(i), Value::Int(j)) => {
                            out.insert(Value::Int(i + j));
                        }
                        (BinOp::Sub, Value::Int(i), Value::Int(j)) => {
                            out.insert(Value::Int(i - j));
                        }
                        (BinOp::Mul, Value::Int(i), Value::Int(j)) => {
                            out.insert(Value::Int(i * j));
                        }
                        (BinOp::Div, Value::Int(i), Value::Int(j)) if *j != 0 => {
                            out.insert(Value::Int(i / j));
                        }
                        (BinOp::Concat, x, y) => {
                            let l = match x {
                                Value::Int(i) => Some(i.to_string()),
                                Value::Str(s) => Some(s.clone()),
                                _ => None,
                            };
                            let r = match y {
                                Value::Int(i) => Some(i.to_string()),
                                Value::Str(s) => Some(s.clone()),
                                _ => None,
                            };
                            if let (Some(l), Some(r)) = (l, r) {
                                out.insert(Value::Str(format!("{l}{r}")));
                            }
                        }
                        _ => {}
                    }
                }
            }
            if out.is_empty() || out.len() > crate::eval::CONST_SET_BOUND {
                Fact::Unknown
            } else {
                Fact::Consts(out)
            }
        }
        _ => Fact::Unknown,
    }
}

/// Run the whole-app analysis: eager graph, reachability for every sink,
/// app-wide constant propagation, same detectors.
pub fn whole_app_analyze(
    model: Arc<AppModel>,
    hierarchy: &ClassHierarchy,
    config: &AnalysisConfig,
    specs: &[SinkSpec],
) -> OracleOutcome {
    let t0 = Instant::now();
    let graph = build_call_graph(&model, hierarchy, config);
    let (reachable, parent) = reachability(&graph);

    let interp = Interp {
        model: &model,
        hierarchy,
        graph: &graph,
    };
    let mut state = GlobalState::default();
    // Chaotic iteration over all reachable bodies until the global maps and
    // summaries stabilize. The lattice is finite, joins are monotone.
    let reachable_methods: Vec<&Method> = model
        .methods()
        .filter(|m| reachable.contains(&m.sig))
        .collect();
    for _pass in 0..64 {
        state.changed = false;
        for m in &reachable_methods {
            interp.run(m, &mut state);
        }
        if !state.changed {
            break;
        }
    }

    // Collect sink sites over the whole model and read off their facts.
    let mut results: Vec<SinkFactResult> = Vec::new();
    for spec in specs {
        let Ok(sink_sig) = spec.parse_signature() else {
            continue;
        };
        let search_form = sink_sig.render_search();
        for method in model.methods() {
            for instr in &method.body {
                let Some(iv) = instr.kind.invoke_expr() else {
                    continue;
                };
                if iv.callee.render_search() != search_form {
                    continue;
                }
                let facts = sink_facts_at(&interp, method, instr, spec, &state, &reachable);
                let witness = witness_chain(&method.sig, &parent, &graph.entries);
                results.push(SinkFactResult {
                    method: method.sig.clone(),
                    loc: LineRef {
                        file: method.file,
                        line: instr.line,
                    },
                    callee: sink_sig.clone(),
                    spec_id: spec.id.clone(),
                    facts,
                    witness,
                    unreachable: !reachable.contains(&method.sig),
                    low_confidence: false,
                    unpaired: false,
                });
            }
        }
    }

    let verdicts = judge(&results, specs);
    let metrics = OracleMetrics {
        methods_total: model.method_count(),
        visited_methods: reachable.len(),
        edges: graph.edge_count,
        wall_ms: t0.elapsed().as_secs_f64() * 1e3,
    };
    OracleOutcome {
        verdicts,
        results,
        metrics,
    }
}

/// Re-interpret the sink's containing method against the converged global
/// state and read the tracked argument facts at the sink instruction.
fn sink_facts_at(
    interp: &Interp,
    method: &Method,
    sink: &Instruction,
    spec: &SinkSpec,
    state: &GlobalState,
    reachable: &BTreeSet<MethodSig>,
) -> BTreeMap<String, Fact> {
    // One more local pass over the body, stopping at the sink line.
    let mut shadow = GlobalState {
        statics: state.statics.clone(),
        fields: state.fields.clone(),
        extras: state.extras.clone(),
        params: state.params.clone(),
        returns: state.returns.clone(),
        changed: false,
    };
    let mut facts = BTreeMap::new();
    let iv = sink.instr_invoke();
    // Evaluate registers by running the interpreter on a truncated body.
    let mut trunc = method.clone();
    trunc.body.retain(|i| i.line < sink.line);
    interp.run(&trunc, &mut shadow);
    // Recompute the register facts with a final linear pass.
    let reg_facts = final_regs(interp, &trunc, &shadow, reachable);
    if let Some(iv) = iv {
        for &i in &spec.track_params {
            let fact = iv
                .args
                .get(i)
                .and_then(|r| reg_facts.get(r).cloned())
                .unwrap_or(Fact::Unresolved);
            facts.insert(format!("arg{i}"), fact);
        }
        if spec.track_receiver {
            let fact = iv
                .recv
                .and_then(|r| reg_facts.get(&r).cloned())
                .unwrap_or(Fact::Unresolved);
            facts.insert("recv".to_string(), fact);
        }
    }
    facts
}

impl Instruction {
    fn instr_invoke(&self) -> Option<&InvokeExpr> {
        self.kind.invoke_expr()
    }
}

/// Final register values of a body under the converged state. Mirrors
/// `Interp::run` but keeps the register map.
fn final_regs(
    interp: &Interp,
    method: &Method,
    state: &GlobalState,
    _reachable: &BTreeSet<MethodSig>,
) -> HashMap<Reg, Fact> {
    let mut shadow = GlobalState {
        statics: state.statics.clone(),
        fields: state.fields.clone(),
        extras: state.extras.clone(),
        params: state.params.clone(),
        returns: state.returns.clone(),
        changed: false,
    };
    // Run once and capture the registers by re-running the interpreter
    // logic inline; Interp::run drops its map, so reproduce the linear pass
    // here through a tiny shim method.
    let mut regs: HashMap<Reg, Fact> = HashMap::new();
    let mut objs: HashMap<Reg, LocalObj> = HashMap::new();
    let incoming = shadow.params.get(&method.sig).cloned().unwrap_or_default();
    let is_entry = interp.graph.entries.contains(&method.sig);
    for instr in &method.body {
        if let InstrKind::Def { lhs, expr } = &instr.kind {
            let fact = match expr {
                Expr::Const(ConstVal::Int(i)) => Fact::one(Value::Int(*i)),
                Expr::Const(ConstVal::Str(s)) => Fact::one(Value::Str(s.clone())),
                Expr::Const(ConstVal::Class(c)) => Fact::one(Value::Class(c.clone())),
                Expr::Param(k) => incoming
                    .get(k)
                    .cloned()
                    .unwrap_or(if is_entry { Fact::Unknown } else { Fact::Unresolved }),
                Expr::New(_) => {
                    objs.insert(*lhs, LocalObj::default());
                    Fact::Unknown
                }
                Expr::NewArray { .. } => Fact::Unknown,
                Expr::Binop { op, a, b } => oracle_binop(
                    *op,
                    regs.get(a).unwrap_or(&Fact::Unresolved),
                    regs.get(b).unwrap_or(&Fact::Unresolved),
                ),
                Expr::Cast { src, .. } => {
                    if let Some(o) = objs.get(src).cloned() {
                        objs.insert(*lhs, o);
                    }
                    regs.get(src).cloned().unwrap_or(Fact::Unresolved)
                }
                Expr::Phi(rs) => {
                    let mut acc = Fact::Unresolved;
                    for r in rs {
                        acc = acc.join(regs.get(r).unwrap_or(&Fact::Unresolved));
                    }
                    acc
                }
                Expr::Invoke(iv) => {
                    let f = interp.invoke(iv, &mut regs, &mut objs, &mut shadow);
                    alias_builder_result(iv, *lhs, &mut objs);
                    f
                }
                Expr::FieldGet { field, .. } => shadow
                    .fields
                    .get(field)
                    .cloned()
                    .unwrap_or(Fact::Unresolved),
                Expr::StaticGet(f) => {
                    if interp.model.is_opaque(&f.class) {
                        Fact::one(Value::Named(f.clone()))
                    } else {
                        shadow.statics.get(f).cloned().unwrap_or(Fact::Unresolved)
                    }
                }
                Expr::ArrayGet { .. } => Fact::Unknown,
            };
            regs.insert(*lhs, fact);
        } else if let InstrKind::Invoke(iv) = &instr.kind {
            let _ = interp.invoke(iv, &mut regs, &mut objs, &mut shadow);
        }
    }
    regs
}

fn witness_chain(
    sink_method: &MethodSig,
    parent: &HashMap<MethodSig, MethodSig>,
    entries: &BTreeSet<MethodSig>,
) -> Vec<String> {
    let mut chain = vec![sink_method.clone()];
    let mut cur = sink_method.clone();
    while !entries.contains(&cur) {
        match parent.get(&cur) {
            Some(p) => {
                chain.push(p.clone());
                cur = p.clone();
            }
            None => break,
        }
    }
    chain.reverse();
    chain.iter().map(|m| m.render_analysis()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detect::{default_sink_specs, Status};
    use crate::sbc::parser::parse_app_from_sources;

    fn analyze(text: &str, manifest: &str) -> OracleOutcome {
        let model = Arc::new(
            parse_app_from_sources(
                &[("app.sbc".to_string(), text.to_string())],
                manifest,
                &["java/".into(), "javax/".into(), "android/".into()],
            )
            .unwrap(),
        );
        let hierarchy = ClassHierarchy::build(&model).unwrap();
        let config = AnalysisConfig::default();
        whole_app_analyze(model, &hierarchy, &config, &default_sink_specs())
    }

    const APP: &str = "\
.class public Lcom/x/Main;
.super Landroid/app/Activity;
.method public onCreate()V
  v0 = param 0
  v1 = const \"AES/ECB/PKCS5Padding\"
  v2 = invoke Ljavax/crypto/Cipher;.getInstance:(Ljava/lang/String;)Ljavax/crypto/Cipher; v1
  return-void
.end method
.class public Lcom/x/Dead;
.method public static never()V
  v0 = const \"AES/ECB/PKCS5Padding\"
  v1 = invoke Ljavax/crypto/Cipher;.getInstance:(Ljava/lang/String;)Ljavax/crypto/Cipher; v0
  return-void
.end method
";

    #[test]
    fn dead_code_sink_is_unreachable() {
        let out = analyze(APP, "activity Lcom/x/Main;\n");
        assert_eq!(out.verdicts.len(), 2);
        let main = out
            .verdicts
            .iter()
            .find(|v| v.method.render_search().contains("Main"))
            .unwrap();
        assert_eq!(main.status, Status::Vulnerable);
        let dead = out
            .verdicts
            .iter()
            .find(|v| v.method.render_search().contains("Dead"))
            .unwrap();
        assert_eq!(dead.status, Status::Unreachable);
    }

    #[test]
    fn visited_equals_reachable_count() {
        let out = analyze(APP, "activity Lcom/x/Main;\n");
        // Only onCreate is reachable.
        assert_eq!(out.metrics.visited_methods, 1);
        assert_eq!(out.metrics.methods_total, 2);
    }

    const CHAIN: &str = "\
.class public Lcom/x/Main;
.super Landroid/app/Activity;
.method public onCreate()V
  v0 = param 0
  v1 = const 20
  invoke Lcom/x/Helper;.go:(I)V v1
  return-void
.end method
.class public Lcom/x/Helper;
.method public static go(I)V
  v0 = param 0
  v1 = const 3
  v2 = binop add v0 v1
  invoke Lcom/x/api/NetSocket;.open:(I)V v2
  return-void
.end method
";

    #[test]
    fn interprocedural_constants_propagate() {
        let model = Arc::new(
            parse_app_from_sources(
                &[("app.sbc".to_string(), CHAIN.to_string())],
                "activity Lcom/x/Main;\n",
                &["java/".into(), "javax/".into(), "android/".into()],
            )
            .unwrap(),
        );
        let hierarchy = ClassHierarchy::build(&model).unwrap();
        let config = AnalysisConfig::default();
        let spec = SinkSpec {
            id: "net-telnet".to_string(),
            signature: "Lcom/x/api/NetSocket;.open:(I)V".to_string(),
            track_params: vec![0],
            track_receiver: false,
            predicate: crate::detect::Predicate::IntEquals { value: 23 },
            severity: "high".to_string(),
        };
        let out = whole_app_analyze(model, &hierarchy, &config, &[spec]);
        assert_eq!(out.verdicts.len(), 1);
        assert_eq!(out.verdicts[0].status, Status::Vulnerable);
        let fact = out.results[0].facts.get("arg0").unwrap();
        assert_eq!(fact, &Fact::one(Value::Int(23)));
        // Witness reaches from the entry to the sink method.
        assert_eq!(out.results[0].witness.len(), 2);
    }
}
