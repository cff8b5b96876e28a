//! Forward constant and points-to propagation over a self-contained slicing
//! graph. The static-initializer track is evaluated first, then one flow per
//! tail node walks the main track toward the sink, interpreting statement
//! semantics and modeled framework APIs, and emits the complete dataflow
//! representation of each tracked sink parameter.
//!
//! Evaluation is a pure function of the SSG: no app model access.

use crate::sbc::model::LineRef;
use crate::sbc::types::*;
use crate::ssg::{EdgeKind, LinkKind, ParamKey, Ssg, SsgUnit, Track, UnitId};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap};

/// Upper bound on constant-set size; joins past it overflow to Unknown,
/// never truncate.
pub const CONST_SET_BOUND: usize = 8;

/// A concrete value a tracked variable may hold.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Value {
    Int(i64),
    Str(String),
    Class(ClassName),
    /// A named framework constant read from an opaque static field.
    Named(FieldRef),
}

impl Value {
    pub fn as_concat_operand(&self) -> Option<String> {
        match self {
            Value::Int(i) => Some(i.to_string()),
            Value::Str(s) => Some(s.clone()),
            Value::Class(_) | Value::Named(_) => None,
        }
    }

    pub fn render(&self) -> String {
        match self {
            Value::Int(i) => i.to_string(),
            Value::Str(s) => format!("\"{s}\""),
            Value::Class(c) => c.descriptor(),
            Value::Named(f) => f.render_search(),
        }
    }
}

pub type ObjId = usize;

/// Lattice fact: Unresolved ⊑ ConstSet ⊑ Unknown, plus points-to records
/// for allocation results.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Fact {
    Unresolved,
    Consts(BTreeSet<Value>),
    Unknown,
    Obj(ObjId),
    Arr(ObjId),
}

impl Fact {
    pub fn one(v: Value) -> Fact {
        Fact::Consts(BTreeSet::from([v]))
    }

    pub fn values(&self) -> Option<&BTreeSet<Value>> {
        match self {
            Fact::Consts(vs) => Some(vs),
            _ => None,
        }
    }

    pub fn is_resolved(&self) -> bool {
        !matches!(self, Fact::Unresolved)
    }

    /// Lattice join. Distinct points-to records join to Unknown.
    pub fn join(&self, other: &Fact) -> Fact {
        match (self, other) {
            (Fact::Unresolved, x) | (x, Fact::Unresolved) => x.clone(),
            (Fact::Unknown, _) | (_, Fact::Unknown) => Fact::Unknown,
            (Fact::Consts(a), Fact::Consts(b)) => {
                let mut u = a.clone();
                u.extend(b.iter().cloned());
                if u.len() > CONST_SET_BOUND {
                    Fact::Unknown
                } else {
                    Fact::Consts(u)
                }
            }
            (Fact::Obj(a), Fact::Obj(b)) if a == b => Fact::Obj(*a),
            (Fact::Arr(a), Fact::Arr(b)) if a == b => Fact::Arr(*a),
            _ => Fact::Unknown,
        }
    }

    fn bounded(vs: BTreeSet<Value>) -> Fact {
        if vs.is_empty() || vs.len() > CONST_SET_BOUND {
            Fact::Unknown
        } else {
            Fact::Consts(vs)
        }
    }
}

impl Serialize for Fact {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut m = s.serialize_map(None)?;
        match self {
            Fact::Unresolved => m.serialize_entry("kind", "unresolved")?,
            Fact::Unknown => m.serialize_entry("kind", "unknown")?,
            Fact::Consts(vs) => {
                m.serialize_entry("kind", "const_set")?;
                let rendered: Vec<String> = vs.iter().map(Value::render).collect();
                m.serialize_entry("values", &rendered)?;
            }
            Fact::Obj(_) => m.serialize_entry("kind", "object")?,
            Fact::Arr(_) => m.serialize_entry("kind", "array")?,
        }
        m.end()
    }
}

/// Allocation-site object: constructor class plus named members. Members
/// update only through `<init>` effects, field puts, and modeled APIs.
#[derive(Debug, Clone)]
pub struct NewObj {
    pub class: ClassName,
    pub members: BTreeMap<String, Fact>,
}

/// Allocation-site array: index-to-fact map plus length. An unknown-index
/// put degrades all elements.
#[derive(Debug, Clone)]
pub struct ArrayObj {
    pub elem: TypeDesc,
    pub elems: BTreeMap<i64, Fact>,
    pub len: Fact,
    pub degraded: bool,
}

#[derive(Debug, Clone)]
enum HeapSlot {
    Obj(NewObj),
    Arr(ArrayObj),
}

/// Per-flow heap of allocation results; facts reference slots by id so
/// aliases share state.
#[derive(Debug, Clone, Default)]
pub struct Heap {
    slots: Vec<HeapSlot>,
}

impl Heap {
    fn alloc_obj(&mut self, class: ClassName) -> ObjId {
        self.slots.push(HeapSlot::Obj(NewObj {
            class,
            members: BTreeMap::new(),
        }));
        self.slots.len() - 1
    }

    fn alloc_arr(&mut self, elem: TypeDesc, len: Fact) -> ObjId {
        self.slots.push(HeapSlot::Arr(ArrayObj {
            elem,
            elems: BTreeMap::new(),
            len,
            degraded: false,
        }));
        self.slots.len() - 1
    }

    fn obj(&mut self, id: ObjId) -> Option<&mut NewObj> {
        match self.slots.get_mut(id) {
            Some(HeapSlot::Obj(o)) => Some(o),
            _ => None,
        }
    }

    fn obj_ref(&self, id: ObjId) -> Option<&NewObj> {
        match self.slots.get(id) {
            Some(HeapSlot::Obj(o)) => Some(o),
            _ => None,
        }
    }

    fn arr(&mut self, id: ObjId) -> Option<&mut ArrayObj> {
        match self.slots.get_mut(id) {
            Some(HeapSlot::Arr(a)) => Some(a),
            _ => None,
        }
    }

    fn arr_ref(&self, id: ObjId) -> Option<&ArrayObj> {
        match self.slots.get(id) {
            Some(HeapSlot::Arr(a)) => Some(a),
            _ => None,
        }
    }
}

/// Per-flow register state and parameter bindings; one instance per frame.
#[derive(Debug, Clone, Default)]
pub struct FactMaps {
    regs: HashMap<Reg, Fact>,
    pub heap: Heap,
    bindings: BTreeMap<usize, Fact>,
}

impl FactMaps {
    pub fn reg(&self, r: Reg) -> Fact {
        self.regs.get(&r).cloned().unwrap_or(Fact::Unresolved)
    }

    fn set(&mut self, r: Reg, f: Fact) {
        self.regs.insert(r, f);
    }
}

/// The dataflow facts of one sink call site for one flow.
#[derive(Debug, Clone, Serialize)]
pub struct SinkFactResult {
    pub method: MethodSig,
    pub loc: LineRef,
    pub callee: MethodSig,
    pub spec_id: String,
    /// Keyed `arg<N>` / `recv`.
    pub facts: BTreeMap<String, Fact>,
    /// Entry-to-sink method chain in analysis form.
    pub witness: Vec<String>,
    pub unreachable: bool,
    pub low_confidence: bool,
    /// Cross-parameter pairing built from different flows.
    pub unpaired: bool,
}

pub fn param_key_name(k: &ParamKey) -> String {
    match k {
        ParamKey::Arg(i) => format!("arg{i}"),
        ParamKey::Receiver => "recv".to_string(),
    }
}

/// Evaluate an SSG: static track first, then one flow per tail node.
pub fn evaluate(ssg: &Ssg) -> Vec<SinkFactResult> {
    evaluate_with_order(ssg, true)
}

/// Evaluation with an explicit track order; `static_first = false` exists
/// only to demonstrate (in tests) that the mandatory ordering is load
/// bearing. The public pipeline always evaluates the static track first.
pub fn evaluate_with_order(ssg: &Ssg, static_first: bool) -> Vec<SinkFactResult> {
    let mut ev = Evaluator::new(ssg);
    if static_first {
        ev.eval_static_track();
    }
    let mut results = ev.eval_flows();

    // Cross-parameter pairing: when no single flow resolves every tracked
    // parameter but together they do, list the pairing, flagged UNPAIRED.
    let tracked: Vec<String> = ssg.sink.tracked.iter().map(param_key_name).collect();
    let complete = |r: &SinkFactResult| {
        tracked
            .iter()
            .all(|k| r.facts.get(k).map(|f| f.is_resolved()).unwrap_or(false))
    };
    if results.len() > 1 && !results.iter().any(complete) {
        let union_complete = tracked.iter().all(|k| {
            results
                .iter()
                .any(|r| r.facts.get(k).map(|f| f.is_resolved()).unwrap_or(false))
        });
        if union_complete {
            let mut merged = results[0].clone();
            for r in &results[1..] {
                for (k, f) in &r.facts {
                    let cur = merged.facts.get(k).cloned().unwrap_or(Fact::Unresolved);
                    let next = if cur.is_resolved() && f.is_resolved() {
                        cur.join(f)
                    } else if f.is_resolved() {
                        f.clone()
                    } else {
                        cur
                    };
                    merged.facts.insert(k.clone(), next);
                }
            }
            merged.unpaired = true;
            results.push(merged);
        }
    }

    // Deduplicate by fact value.
    let mut seen: Vec<String> = Vec::new();
    results.retain(|r| {
        let key = format!("{:?}|{}|{}", r.facts, r.unpaired, r.low_confidence);
        if seen.contains(&key) {
            false
        } else {
            seen.push(key);
            true
        }
    });
    results
}

struct Evaluator<'s> {
    ssg: &'s Ssg,
    /// Units of each method on the main track, in line order.
    method_units: BTreeMap<MethodSig, Vec<UnitId>>,
    statics: BTreeMap<FieldRef, Fact>,
    unresolvable_statics: BTreeSet<FieldRef>,
}

impl<'s> Evaluator<'s> {
    fn new(ssg: &'s Ssg) -> Self {
        let mut method_units: BTreeMap<MethodSig, Vec<UnitId>> = BTreeMap::new();
        for u in &ssg.units {
            if u.track == Track::Main {
                method_units.entry(u.method.clone()).or_default().push(u.id);
            }
        }
        for v in method_units.values_mut() {
            v.sort_by_key(|id| ssg.unit(*id).loc.line);
        }
        let mut unresolvable: BTreeSet<FieldRef> = BTreeSet::new();
        unresolvable.extend(ssg.pending_statics.iter().cloned());
        unresolvable.extend(ssg.invalid_statics.iter().cloned());
        unresolvable.extend(ssg.unresolved_statics.iter().cloned());
        Evaluator {
            ssg,
            method_units,
            statics: BTreeMap::new(),
            unresolvable_statics: unresolvable,
        }
    }

    /// Evaluate the StaticInit track into the global static map. Groups are
    /// evaluated per `<clinit>`, twice, so one level of cross-initializer
    /// reads settles (joins keep this monotone).
    fn eval_static_track(&mut self) {
        let invalid_classes: BTreeSet<&ClassName> =
            self.ssg.invalid_statics.iter().map(|f| &f.class).collect();
        let mut groups: BTreeMap<MethodSig, Vec<UnitId>> = BTreeMap::new();
        for u in &self.ssg.units {
            if u.track == Track::StaticInit {
                if invalid_classes.contains(&u.method.class) {
                    continue;
                }
                groups.entry(u.method.clone()).or_default().push(u.id);
            }
        }
        for units in groups.values_mut() {
            units.sort_by_key(|id| self.ssg.unit(*id).loc.line);
        }
        for _ in 0..2 {
            for units in groups.values() {
                let mut state = FactMaps::default();
                for id in units {
                    let unit = self.ssg.unit(*id).clone();
                    self.eval_unit(&unit, &mut state);
                }
            }
        }
    }

    /// Run one flow per tail node, in node-id order.
    fn eval_flows(&mut self) -> Vec<SinkFactResult> {
        let mut tails = self.ssg.tails.clone();
        tails.sort();
        tails.dedup();
        let mut out = Vec::new();
        for tail in tails {
            let unit = self.ssg.unit(tail);
            let state = FactMaps::default();
            let methods = vec![unit.method.clone()];
            let mut results = self.walk_frame(&unit.method.clone(), tail, state, methods, false);
            out.append(&mut results);
        }
        out
    }

    fn cross_edges_from(&self, id: UnitId) -> Vec<crate::ssg::SsgEdge> {
        self.ssg
            .edges
            .iter()
            .filter(|e| e.kind == EdgeKind::CrossMethod && e.from == id)
            .cloned()
            .collect()
    }

    fn contained_edge_from(&self, id: UnitId) -> Option<crate::ssg::SsgEdge> {
        self.ssg
            .edges
            .iter()
            .find(|e| e.kind == EdgeKind::ContainedCall && e.from == id)
            .cloned()
    }

    /// Evaluate one frame from `start` in line order, following cross-method
    /// edges toward the sink. Forks at multi-exit units.
    fn walk_frame(
        &mut self,
        method: &MethodSig,
        start: UnitId,
        mut state: FactMaps,
        flow_methods: Vec<MethodSig>,
        low_confidence: bool,
    ) -> Vec<SinkFactResult> {
        let units = match self.method_units.get(method) {
            Some(u) => u.clone(),
            None => return Vec::new(),
        };
        let start_line = self.ssg.unit(start).loc.line;
        let mut results = Vec::new();

        for id in units {
            let unit = self.ssg.unit(id).clone();
            if unit.loc.line < start_line {
                continue;
            }

            if id == self.ssg.sink.unit {
                results.push(self.correlate(&unit, &state, &flow_methods, low_confidence));
                return results;
            }

            let crosses = self.cross_edges_from(id);
            if !crosses.is_empty() {
                // The sink may still lie later in this frame on another
                // overlapping path.
                let sink_later = self.ssg.sink.method == *method
                    && self.ssg.unit(self.ssg.sink.unit).loc.line > unit.loc.line;
                for e in &crosses {
                    let Some(meta) = &e.meta else { continue };
                    let mut next = FactMaps {
                        regs: HashMap::new(),
                        heap: state.heap.clone(),
                        bindings: BTreeMap::new(),
                    };
                    next.bindings = self.bind(meta, &unit, &state);
                    let to_unit = self.ssg.unit(e.to).clone();
                    let mut fm = flow_methods.clone();
                    for m in &meta.chain {
                        if !fm.contains(m) {
                            fm.push(m.clone());
                        }
                    }
                    if !fm.contains(&to_unit.method) {
                        fm.push(to_unit.method.clone());
                    }
                    let lc = low_confidence || meta.low_confidence;
                    results.extend(self.walk_frame(&to_unit.method.clone(), e.to, next, fm, lc));
                }
                if !sink_later {
                    return results;
                }
                continue;
            }

            self.eval_unit(&unit, &mut state);
        }
        results
    }

    /// Parameter bindings for a cross-method edge, computed from the
    /// crossing unit's instruction and the caller-side state.
    fn bind(
        &self,
        meta: &crate::ssg::LinkMeta,
        unit: &SsgUnit,
        state: &FactMaps,
    ) -> BTreeMap<usize, Fact> {
        let mut b = BTreeMap::new();
        let iv = unit.stmt.kind.invoke_expr();
        match meta.kind {
            LinkKind::Call => {
                if let Some(iv) = iv {
                    match iv.recv {
                        Some(r) => {
                            b.insert(0, state.reg(r));
                            for (i, a) in iv.args.iter().enumerate() {
                                b.insert(i + 1, state.reg(*a));
                            }
                        }
                        None => {
                            for (i, a) in iv.args.iter().enumerate() {
                                b.insert(i, state.reg(*a));
                            }
                        }
                    }
                }
            }
            LinkKind::AdvancedCtor => {
                // The crossing unit is the constructor invocation; its
                // receiver is the object that becomes the handler's `this`.
                if let Some(iv) = iv {
                    if let Some(r) = iv.recv {
                        b.insert(0, state.reg(r));
                    }
                }
            }
            LinkKind::Icc => {
                if let (Some(iv), Some(arg_ix), Some(param_ix)) =
                    (iv, meta.intent_arg, meta.intent_param)
                {
                    if let Some(a) = iv.args.get(arg_ix) {
                        b.insert(param_ix, state.reg(*a));
                    }
                }
            }
            LinkKind::LifecyclePred => {
                // Same component instance: receiver binds to receiver.
                if let Some(f) = state.bindings.get(&0) {
                    b.insert(0, f.clone());
                }
            }
        }
        b
    }

    fn correlate(
        &self,
        unit: &SsgUnit,
        state: &FactMaps,
        flow_methods: &[MethodSig],
        low_confidence: bool,
    ) -> SinkFactResult {
        let iv = unit.stmt.kind.invoke_expr().expect("sink is an invocation");
        let mut facts = BTreeMap::new();
        for key in &self.ssg.sink.tracked {
            let fact = match key {
                ParamKey::Arg(i) => iv.args.get(*i).map(|r| state.reg(*r)),
                ParamKey::Receiver => iv.recv.map(|r| state.reg(r)),
            }
            .unwrap_or(Fact::Unresolved);
            facts.insert(param_key_name(key), fact);
        }
        SinkFactResult {
            method: unit.method.clone(),
            loc: unit.loc,
            callee: self.ssg.sink.callee.clone(),
            spec_id: self.ssg.sink.spec_id.clone(),
            facts,
            witness: flow_methods.iter().map(|m| m.render_analysis()).collect(),
            unreachable: !self.ssg.reachable,
            low_confidence,
            unpaired: false,
        }
    }

    /// Evaluate one unit's effects into the state.
    fn eval_unit(&mut self, unit: &SsgUnit, state: &mut FactMaps) {
        match &unit.stmt.kind {
            InstrKind::Def { lhs, expr } => {
                let fact = match expr {
                    Expr::Invoke(iv) => self.eval_invoke(unit, iv, state),
                    _ => self.eval_expr(expr, state),
                };
                state.set(*lhs, fact);
            }
            InstrKind::Invoke(iv) => {
                let _ = self.eval_invoke(unit, iv, state);
            }
            InstrKind::FieldPut { value, obj, field } => {
                let v = state.reg(*value);
                if let Fact::Obj(id) = state.reg(*obj) {
                    if let Some(o) = state.heap.obj(id) {
                        let cur = o
                            .members
                            .get(&field.name)
                            .cloned()
                            .unwrap_or(Fact::Unresolved);
                        o.members.insert(field.name.clone(), cur.join(&v));
                    }
                }
            }
            InstrKind::StaticPut { value, field } => {
                let v = state.reg(*value);
                let cur = self
                    .statics
                    .get(field)
                    .cloned()
                    .unwrap_or(Fact::Unresolved);
                self.statics.insert(field.clone(), cur.join(&v));
            }
            InstrKind::ArrayPut { value, arr, idx } => {
                let v = state.reg(*value);
                let ix = state.reg(*idx);
                if let Fact::Arr(id) = state.reg(*arr) {
                    if let Some(a) = state.heap.arr(id) {
                        match ix.values().and_then(single_int) {
                            Some(i) => {
                                let cur = a.elems.get(&i).cloned().unwrap_or(Fact::Unresolved);
                                a.elems.insert(i, cur.join(&v));
                            }
                            None => a.degraded = true,
                        }
                    }
                }
            }
            InstrKind::Return(_)
            | InstrKind::Goto(_)
            | InstrKind::If { .. }
            | InstrKind::Label(_) => {}
        }
    }

    /// Statement-expression semantics.
    pub fn eval_expr(&mut self, expr: &Expr, state: &mut FactMaps) -> Fact {
        match expr {
            Expr::Const(c) => Fact::one(match c {
                ConstVal::Int(i) => Value::Int(*i),
                ConstVal::Str(s) => Value::Str(s.clone()),
                ConstVal::Class(c) => Value::Class(c.clone()),
            }),
            Expr::Param(k) => match state.bindings.get(k) {
                Some(f) => f.clone(),
                // Framework-provided receiver at a flow start: a fresh,
                // empty object so lifecycle frames share member writes.
                None if *k == 0 => Fact::Obj(
                    state
                        .heap
                        .alloc_obj(ClassName::from_slashed("java/lang/Object")),
                ),
                None => Fact::Unknown,
            },
            Expr::New(c) => Fact::Obj(state.heap.alloc_obj(c.clone())),
            Expr::NewArray { elem, len } => {
                let l = state.reg(*len);
                Fact::Arr(state.heap.alloc_arr(elem.clone(), l))
            }
            Expr::Binop { op, a, b } => eval_binop(*op, &state.reg(*a), &state.reg(*b)),
            Expr::Cast { src, .. } => state.reg(*src),
            Expr::Phi(rs) => {
                let mut acc = Fact::Unresolved;
                for r in rs {
                    acc = acc.join(&state.reg(*r));
                }
                acc
            }
            Expr::Invoke(_) => Fact::Unknown,
            Expr::FieldGet { obj, field } => match state.reg(*obj) {
                Fact::Obj(id) => state
                    .heap
                    .obj_ref(id)
                    .and_then(|o| o.members.get(&field.name).cloned())
                    .unwrap_or(Fact::Unresolved),
                Fact::Unresolved => Fact::Unresolved,
                _ => Fact::Unknown,
            },
            Expr::StaticGet(f) => {
                if let Some(fact) = self.statics.get(f) {
                    fact.clone()
                } else if self.unresolvable_statics.contains(f) {
                    Fact::Unresolved
                } else {
                    // Never tracked as an app static: a named framework
                    // constant (e.g. a hostname-verifier field).
                    Fact::one(Value::Named(f.clone()))
                }
            }
            Expr::ArrayGet { arr, idx } => match state.reg(*arr) {
                Fact::Arr(id) => {
                    let Some(a) = state.heap.arr_ref(id) else {
                        return Fact::Unknown;
                    };
                    if a.degraded {
                        return Fact::Unknown;
                    }
                    match state.reg(*idx).values().and_then(single_int) {
                        Some(i) => a.elems.get(&i).cloned().unwrap_or(Fact::Unresolved),
                        None => Fact::Unknown,
                    }
                }
                Fact::Unresolved => Fact::Unresolved,
                _ => Fact::Unknown,
            },
        }
    }

    /// Invocation: contained app method (via the contained edges) or a
    /// modeled framework API; anything else is Unknown.
    fn eval_invoke(&mut self, unit: &SsgUnit, iv: &InvokeExpr, state: &mut FactMaps) -> Fact {
        if let Some(edge) = self.contained_edge_from(unit.id) {
            let entry = self.ssg.unit(edge.to).clone();
            let mut bindings = BTreeMap::new();
            match iv.recv {
                Some(r) => {
                    bindings.insert(0, state.reg(r));
                    for (i, a) in iv.args.iter().enumerate() {
                        bindings.insert(i + 1, state.reg(*a));
                    }
                }
                None => {
                    for (i, a) in iv.args.iter().enumerate() {
                        bindings.insert(i, state.reg(*a));
                    }
                }
            }
            return self.eval_contained(&entry.method.clone(), bindings, state);
        }

        let recv_fact = iv.recv.map(|r| state.reg(r));
        let arg_facts: Vec<Fact> = iv.args.iter().map(|a| state.reg(*a)).collect();
        api_model(&iv.callee, recv_fact, &arg_facts, &mut state.heap)
    }

    /// Evaluate a contained method's units in line order with the given
    /// parameter bindings; the result is the join over its return units.
    /// The heap is shared, so member writes through bound objects persist.
    fn eval_contained(
        &mut self,
        method: &MethodSig,
        bindings: BTreeMap<usize, Fact>,
        outer: &mut FactMaps,
    ) -> Fact {
        let units = match self.method_units.get(method) {
            Some(u) => u.clone(),
            None => return Fact::Unknown,
        };
        let mut state = FactMaps {
            regs: HashMap::new(),
            heap: std::mem::take(&mut outer.heap),
            bindings,
        };
        let mut ret = Fact::Unresolved;
        for id in units {
            let unit = self.ssg.unit(id).clone();
            if let InstrKind::Return(Some(r)) = &unit.stmt.kind {
                ret = ret.join(&state.reg(*r));
                continue;
            }
            self.eval_unit(&unit, &mut state);
        }
        outer.heap = state.heap;
        ret
    }
}

fn single_int(vs: &BTreeSet<Value>) -> Option<i64> {
    if vs.len() != 1 {
        return None;
    }
    match vs.iter().next() {
        Some(Value::Int(i)) => Some(*i),
        _ => None,
    }
}

/// Pointwise binary-operation folding over constant sets. Unknown absorbs;
/// Unresolved propagates (nothing to compute yet). Division by zero
/// excludes the offending pair; an emptied set is Unknown.
pub fn eval_binop(op: BinOp, a: &Fact, b: &Fact) -> Fact {
    match (a, b) {
        (Fact::Unknown, _) | (_, Fact::Unknown) => Fact::Unknown,
        (Fact::Unresolved, _) | (_, Fact::Unresolved) => Fact::Unresolved,
        (Fact::Consts(xs), Fact::Consts(ys)) => {
            let mut out = BTreeSet::new();
            for x in xs {
                for y in ys {
                    let v = match (op, x, y) {
                        (BinOp::Add, Value::Int(i), Value::Int(j)) => Some(Value::Int(i + j)),
                        (BinOp::Sub, Value::Int(i), Value::Int(j)) => Some(Value::Int(i - j)),
                        (BinOp::Mul, Value::Int(i), Value::Int(j)) => Some(Value::Int(i * j)),
                        (BinOp::Div, Value::Int(i), Value::Int(j)) => {
                            if *j == 0 {
                                None
                            } else {
                                Some(Value::Int(i / j))
                            }
                        }
                        (BinOp::Concat, x, y) => {
                            match (x.as_concat_operand(), y.as_concat_operand()) {
                                (Some(l), Some(r)) => Some(Value::Str(format!("{l}{r}"))),
                                _ => None,
                            }
                        }
                        _ => None,
                    };
                    if let Some(v) = v {
                        out.insert(v);
                    }
                }
            }
            Fact::bounded(out)
        }
        _ => Fact::Unknown,
    }
}

/// Framework API models: string builders, string/integer conversions, and
/// intent construction/extras. Unmodeled APIs (collections included)
/// return Unknown.
pub fn api_model(callee: &MethodSig, recv: Option<Fact>, args: &[Fact], heap: &mut Heap) -> Fact {
    let class = callee.class.slashed();
    let name = callee.name.as_str();
    match (class, name) {
        ("java/lang/StringBuilder", "<init>") => {
            if let Some(Fact::Obj(id)) = recv {
                let initial = args
                    .first()
                    .map(stringify_fact)
                    .unwrap_or_else(|| Fact::one(Value::Str(String::new())));
                if let Some(o) = heap.obj(id) {
                    o.members.insert("value".to_string(), initial);
                }
            }
            Fact::Unknown
        }
        ("java/lang/StringBuilder", "append") => {
            if let Some(Fact::Obj(id)) = recv {
                let add = args.first().map(stringify_fact).unwrap_or(Fact::Unknown);
                if let Some(o) = heap.obj(id) {
                    let cur = o
                        .members
                        .get("value")
                        .cloned()
                        .unwrap_or_else(|| Fact::one(Value::Str(String::new())));
                    let joined = eval_binop(BinOp::Concat, &cur, &add);
                    o.members.insert("value".to_string(), joined);
                }
                // The builder pattern returns the receiver.
                return Fact::Obj(id);
            }
            Fact::Unknown
        }
        ("java/lang/StringBuilder", "toString") => {
            if let Some(Fact::Obj(id)) = recv {
                if let Some(o) = heap.obj_ref(id) {
                    return o.members.get("value").cloned().unwrap_or(Fact::Unresolved);
                }
            }
            Fact::Unknown
        }
        ("java/lang/String", "valueOf") => {
            args.first().map(stringify_fact).unwrap_or(Fact::Unknown)
        }
        ("java/lang/String", "concat") => {
            let r = recv.unwrap_or(Fact::Unknown);
            let a = args.first().cloned().unwrap_or(Fact::Unknown);
            eval_binop(BinOp::Concat, &r, &a)
        }
        ("java/lang/Integer", "parseInt") => match args.first() {
            Some(Fact::Consts(vs)) => {
                let mut out = BTreeSet::new();
                for v in vs {
                    if let Value::Str(s) = v {
                        if let Ok(i) = s.trim().parse::<i64>() {
                            out.insert(Value::Int(i));
                        }
                    }
                }
                Fact::bounded(out)
            }
            Some(Fact::Unresolved) => Fact::Unresolved,
            _ => Fact::Unknown,
        },
        ("java/lang/Integer", "toString") | ("java/lang/Integer", "valueOf") => {
            args.first().map(stringify_fact).unwrap_or(Fact::Unknown)
        }
        ("android/content/Intent", "setClass") | ("android/content/Intent", "setClassName") => {
            if let (Some(Fact::Obj(id)), Some(target)) = (recv.clone(), args.last()) {
                if let Some(o) = heap.obj(id) {
                    o.members.insert("#target".to_string(), target.clone());
                }
                return Fact::Obj(id);
            }
            Fact::Unknown
        }
        ("android/content/Intent", "setAction") => {
            if let (Some(Fact::Obj(id)), Some(action)) = (recv.clone(), args.first()) {
                if let Some(o) = heap.obj(id) {
                    o.members.insert("#action".to_string(), action.clone());
                }
                return Fact::Obj(id);
            }
            Fact::Unknown
        }
        ("android/content/Intent", "putExtra") => {
            if let (Some(Fact::Obj(id)), Some(key), Some(val)) = (recv, args.first(), args.get(1))
            {
                if let Some(keys) = key.values() {
                    for k in keys {
                        if let Value::Str(ks) = k {
                            if let Some(o) = heap.obj(id) {
                                let slot = format!("extra:{ks}");
                                let cur =
                                    o.members.get(&slot).cloned().unwrap_or(Fact::Unresolved);
                                o.members.insert(slot, cur.join(val));
                            }
                        }
                    }
                } else if let Some(o) = heap.obj(id) {
                    o.members
                        .insert("#extras_unknown".to_string(), Fact::Unknown);
                }
            }
            Fact::Unknown
        }
        ("android/content/Intent", n) if n.starts_with("get") && n.ends_with("Extra") => {
            if let (Some(recv_fact), Some(key)) = (recv, args.first()) {
                match recv_fact {
                    Fact::Obj(id) => {
                        if let Some(o) = heap.obj_ref(id) {
                            if o.members.contains_key("#extras_unknown") {
                                return Fact::Unknown;
                            }
                            if let Some(keys) = key.values() {
                                let mut acc = Fact::Unresolved;
                                for k in keys {
                                    if let Value::Str(ks) = k {
                                        let slot = format!("extra:{ks}");
                                        match o.members.get(&slot) {
                                            Some(f) => acc = acc.join(f),
                                            None => acc = acc.join(&Fact::Unknown),
                                        }
                                    }
                                }
                                return acc;
                            }
                        }
                        Fact::Unknown
                    }
                    _ => Fact::Unknown,
                }
            } else {
                Fact::Unknown
            }
        }
        _ => Fact::Unknown,
    }
}

fn stringify_fact(f: &Fact) -> Fact {
    match f {
        Fact::Consts(vs) => {
            let mut out = BTreeSet::new();
            for v in vs {
                match v.as_concat_operand() {
                    Some(s) => {
                        out.insert(Value::Str(s));
                    }
                    None => return Fact::Unknown,
                }
            }
            Fact::bounded(out)
        }
        other => other.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ints(vals: &[i64]) -> Fact {
        Fact::Consts(vals.iter().map(|&i| Value::Int(i)).collect())
    }

    fn strs(vals: &[&str]) -> Fact {
        Fact::Consts(vals.iter().map(|s| Value::Str(s.to_string())).collect())
    }

    #[test]
    fn binop_constant_folding() {
        assert_eq!(
            eval_binop(BinOp::Add, &ints(&[8080]), &ints(&[1])),
            ints(&[8081])
        );
        assert_eq!(
            eval_binop(BinOp::Concat, &strs(&["AES/"]), &strs(&["ECB"])),
            strs(&["AES/ECB"])
        );
        assert_eq!(
            eval_binop(BinOp::Mul, &ints(&[2, 3]), &ints(&[10])),
            ints(&[20, 30])
        );
    }

    #[test]
    fn phi_join_unions_and_bounds() {
        let j = strs(&["ECB"]).join(&strs(&["CBC"]));
        assert_eq!(j, strs(&["ECB", "CBC"]));
        // Exceeding the bound overflows to Unknown, never truncates.
        let mut acc = Fact::Consts(BTreeSet::new());
        for i in 0..=CONST_SET_BOUND as i64 {
            acc = acc.join(&ints(&[i]));
        }
        assert_eq!(acc, Fact::Unknown);
    }

    #[test]
    fn division_by_zero_excluded_pairwise() {
        let r = eval_binop(BinOp::Div, &ints(&[10]), &ints(&[0, 2]));
        assert_eq!(r, ints(&[5]));
        // All pairs excluded: the empty set is Unknown.
        let r = eval_binop(BinOp::Div, &ints(&[10]), &ints(&[0]));
        assert_eq!(r, Fact::Unknown);
    }

    #[test]
    fn string_builder_chain_models_concat() {
        let mut heap = Heap::default();
        let id = heap.alloc_obj(ClassName::from_slashed("java/lang/StringBuilder"));
        let sb = MethodSig::parse_search("Ljava/lang/StringBuilder;.<init>:()V").unwrap();
        api_model(&sb, Some(Fact::Obj(id)), &[], &mut heap);
        let append = MethodSig::parse_search(
            "Ljava/lang/StringBuilder;.append:(Ljava/lang/String;)Ljava/lang/StringBuilder;",
        )
        .unwrap();
        let r = api_model(&append, Some(Fact::Obj(id)), &[strs(&["AES/"])], &mut heap);
        assert_eq!(r, Fact::Obj(id));
        api_model(&append, Some(Fact::Obj(id)), &[strs(&["ECB"])], &mut heap);
        let tostr =
            MethodSig::parse_search("Ljava/lang/StringBuilder;.toString:()Ljava/lang/String;")
                .unwrap();
        let out = api_model(&tostr, Some(Fact::Obj(id)), &[], &mut heap);
        assert_eq!(out, strs(&["AES/ECB"]));
    }

    #[test]
    fn conversions_are_pointwise() {
        let vo =
            MethodSig::parse_search("Ljava/lang/String;.valueOf:(I)Ljava/lang/String;").unwrap();
        let mut heap = Heap::default();
        assert_eq!(
            api_model(&vo, None, &[ints(&[7, 9])], &mut heap),
            strs(&["7", "9"])
        );
        let pi =
            MethodSig::parse_search("Ljava/lang/Integer;.parseInt:(Ljava/lang/String;)I").unwrap();
        assert_eq!(api_model(&pi, None, &[strs(&["42"])], &mut heap), ints(&[42]));
        // Unparseable values are excluded; an emptied set is Unknown.
        assert_eq!(api_model(&pi, None, &[strs(&["x"])], &mut heap), Fact::Unknown);
    }

    #[test]
    fn unmodeled_api_is_unknown() {
        let m = MethodSig::parse_search("Ljava/net/Socket;.read:()I").unwrap();
        let mut heap = Heap::default();
        assert_eq!(api_model(&m, None, &[], &mut heap), Fact::Unknown);
    }

    fn fact_strategy() -> impl Strategy<Value = Fact> {
        prop_oneof![
            Just(Fact::Unresolved),
            Just(Fact::Unknown),
            proptest::collection::btree_set((-50i64..50).prop_map(Value::Int), 1..4)
                .prop_map(Fact::Consts),
        ]
    }

    fn order_leq(a: &Fact, b: &Fact) -> bool {
        match (a, b) {
            (Fact::Unresolved, _) => true,
            (_, Fact::Unknown) => true,
            (Fact::Consts(x), Fact::Consts(y)) => x.is_subset(y),
            _ => a == b,
        }
    }

    proptest! {
        /// Raising an input in the lattice never lowers the binop output.
        #[test]
        fn binop_is_monotone(a in fact_strategy(), b in fact_strategy(), op in prop_oneof![
            Just(BinOp::Add), Just(BinOp::Sub), Just(BinOp::Mul), Just(BinOp::Div)
        ]) {
            let lo = eval_binop(op, &a, &b);
            let hi = eval_binop(op, &Fact::Unknown, &b);
            prop_assert!(order_leq(&lo, &hi) || lo == hi, "{:?} vs {:?}", lo, hi);

            // Joining more constants into an operand only grows the result.
            if let Fact::Consts(_) = &a {
                let wider = a.join(&ints(&[1]));
                if let Fact::Consts(_) = &wider {
                    let lo2 = eval_binop(op, &a, &b);
                    let hi2 = eval_binop(op, &wider, &b);
                    prop_assert!(order_leq(&lo2, &hi2), "{:?} vs {:?}", lo2, hi2);
                }
            }
        }

        #[test]
        fn join_is_commutative_and_bounded(a in fact_strategy(), b in fact_strategy()) {
            prop_assert_eq!(a.join(&b), b.join(&a));
            if let Fact::Consts(vs) = a.join(&b) {
                prop_assert!(vs.len() <= CONST_SET_BOUND);
            }
        }
    }
}
