//! Per-sink self-contained slicing graph (SSG). Built by backward slicing
//! from the sink call's tracked parameters over SSA def-use, crossing method
//! boundaries through callers the backtracker discovers, entering contained
//! methods through call/return edge pairs, and appending off-path static
//! initializers on demand. The graph wraps the raw typed statements so that
//! forward evaluation needs no access to the app model.

use crate::backtrack::{Backtracker, CallersOutcome, ResolvedCaller, Via};
use crate::index::{CallHit, FieldMode};
use crate::sbc::model::*;
use crate::sbc::types::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct UnitId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Track {
    Main,
    StaticInit,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SsgUnit {
    pub id: UnitId,
    pub method: MethodSig,
    pub loc: LineRef,
    pub stmt: Instruction,
    pub track: Track,
    /// Rendered statement text, for readable serialized graphs.
    pub text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EdgeKind {
    CrossMethod,
    ContainedCall,
    ContainedReturn,
}

/// How a cross-method edge binds facts when evaluation crosses it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LinkKind {
    /// Ordinary call site: arguments bind to parameters.
    Call,
    /// Advanced-search chain: the constructor site's object binds to the
    /// handler's receiver.
    AdvancedCtor,
    /// ICC sender: the intent argument binds to the handler's intent
    /// parameter.
    Icc,
    /// Lifecycle predecessor: same component instance, receiver to receiver.
    LifecyclePred,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinkMeta {
    pub kind: LinkKind,
    pub callee: MethodSig,
    /// Advanced-search chain methods (constructor-containing method first,
    /// ending method last); empty for other link kinds.
    pub chain: Vec<MethodSig>,
    pub low_confidence: bool,
    /// ICC: intent argument index at the sender call site.
    pub intent_arg: Option<usize>,
    /// ICC: the handler's intent parameter index (`param` numbering).
    pub intent_param: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SsgEdge {
    pub from: UnitId,
    pub to: UnitId,
    pub kind: EdgeKind,
    pub meta: Option<LinkMeta>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ParamKey {
    Arg(usize),
    Receiver,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SinkInfo {
    pub unit: UnitId,
    pub method: MethodSig,
    pub callee: MethodSig,
    pub spec_id: String,
    pub tracked: Vec<ParamKey>,
}

/// Snapshot of one method's taint set at its entry, organized as a tree
/// mirroring the backward chain (parent = the method closer to the sink).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaintNode {
    pub method: MethodSig,
    pub entries: Vec<String>,
    pub parent: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Ssg {
    pub sink: SinkInfo,
    pub units: Vec<SsgUnit>,
    pub edges: Vec<SsgEdge>,
    /// Analysis start points: first units of frames where backtracking
    /// terminated. No Main-track edge enters a tail.
    pub tails: Vec<UnitId>,
    pub taint_tree: Vec<TaintNode>,
    /// Static fields left unresolved after the main taint process (before
    /// the off-path pass).
    pub pending_statics: Vec<FieldRef>,
    /// Statics whose owning `<clinit>` was judged unreachable; their static
    /// track is present but invalid and must not be evaluated.
    pub invalid_statics: Vec<FieldRef>,
    /// Statics still unresolved after the off-path pass.
    pub unresolved_statics: Vec<FieldRef>,
    pub reachable: bool,
    /// Witness method chains, entry first, sink method last (analysis form).
    pub witnesses: Vec<Vec<String>>,
    /// For sinks reached through `<clinit>`: the class-reference witness.
    pub clinit_witness: Option<Vec<ClassName>>,
    /// Whether any witness flow depends on a low-confidence ICC edge.
    pub any_low_confidence: bool,
}

impl Ssg {
    pub fn unit(&self, id: UnitId) -> &SsgUnit {
        &self.units[id.0 as usize]
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("ssg serializes")
    }

    pub fn from_json(v: &serde_json::Value) -> serde_json::Result<Ssg> {
        serde_json::from_value(v.clone())
    }

    /// Stable node identity used in emitted files: method plus position.
    pub fn stable_unit_name(&self, id: UnitId) -> String {
        let u = self.unit(id);
        format!(
            "{}@{}:{}",
            u.method.render_search(),
            u.loc.file.0,
            u.loc.line
        )
    }
}

/// One tracked name during backward slicing. `Obj` marks a register whose
/// object state (fields, extras, builder content) matters; `Val` marks a
/// register whose value matters.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TaintKey {
    Val(Reg),
    Obj(Reg),
    Field(Reg, FieldRef),
}

impl TaintKey {
    pub fn render(&self) -> String {
        match self {
            TaintKey::Val(r) => r.to_string(),
            TaintKey::Obj(r) => format!("{r}#obj"),
            TaintKey::Field(r, f) => format!("{r}.{}", f.render_search()),
        }
    }
}

/// Local (register-scoped) taint set plus the shared static-field set.
///
/// `alloc` is the points-to trace, not part of the taint set proper: when
/// an object's last field taint is resolved the object leaves the taint
/// set, but its registers stay traced back to the allocation site so the
/// forward evaluation can rebuild the object.
#[derive(Debug, Clone, Default)]
pub struct TaintState {
    pub local: BTreeSet<TaintKey>,
    pub statics: BTreeSet<FieldRef>,
    pub alloc: BTreeSet<Reg>,
}

impl TaintState {
    pub fn val_tainted(&self, r: Reg) -> bool {
        self.local.contains(&TaintKey::Val(r))
    }

    /// An object register is tainted while it carries explicit object taint
    /// or any field taint; untainting the last field removes the object.
    pub fn obj_tainted(&self, r: Reg) -> bool {
        self.local.contains(&TaintKey::Obj(r))
            || self
                .local
                .iter()
                .any(|k| matches!(k, TaintKey::Field(or, _) if *or == r))
    }

    pub fn any_tainted(&self, r: Reg) -> bool {
        self.val_tainted(r) || self.obj_tainted(r)
    }

    fn fields_of(&self, r: Reg) -> Vec<FieldRef> {
        self.local
            .iter()
            .filter_map(|k| match k {
                TaintKey::Field(or, f) if *or == r => Some(f.clone()),
                _ => None,
            })
            .collect()
    }

    fn untaint_reg(&mut self, r: Reg) -> (bool, bool, Vec<FieldRef>) {
        let val = self.local.remove(&TaintKey::Val(r));
        let obj = self.local.remove(&TaintKey::Obj(r));
        let fields = self.fields_of(r);
        for f in &fields {
            self.local.remove(&TaintKey::Field(r, f.clone()));
        }
        (val, obj, fields)
    }

    fn taint_val(&mut self, r: Reg) {
        self.local.insert(TaintKey::Val(r));
    }

    fn taint_obj(&mut self, r: Reg) {
        self.local.insert(TaintKey::Obj(r));
    }

    pub fn render(&self) -> Vec<String> {
        let mut out: Vec<String> = self.local.iter().map(TaintKey::render).collect();
        out.extend(
            self.statics
                .iter()
                .map(|f| format!("static {}", f.render_search())),
        );
        out.extend(self.alloc.iter().map(|r| format!("{r}#alloc")));
        out
    }
}

/// Whether a statement is relevant to the current taint state and, if so,
/// the taint transfer applied when processing it in reverse order. Returns
/// true when the statement must be recorded in the slice.
///
/// Invocation statements that enter contained methods are handled by the
/// builder (it needs the app model); this transfer covers everything else,
/// including the framework-opaque invoke rules.
pub fn taint_transfer(stmt: &InstrKind, taint: &mut TaintState) -> bool {
    match stmt {
        InstrKind::Def { lhs, expr } => {
            let alloc = taint.alloc.remove(lhs);
            if !taint.any_tainted(*lhs) && !alloc {
                return false;
            }
            if alloc {
                // Trace the object identity through aliases to its
                // allocation; the allocation itself ends the trace.
                match expr {
                    Expr::Cast { src, .. } => {
                        taint.alloc.insert(*src);
                    }
                    Expr::Phi(rs) => taint.alloc.extend(rs.iter().copied()),
                    Expr::FieldGet { obj: o, .. } => {
                        taint.alloc.insert(*o);
                    }
                    _ => {}
                }
            }
            if !taint.any_tainted(*lhs) {
                return true;
            }
            let (val, obj, fields) = taint.untaint_reg(*lhs);
            match expr {
                Expr::Const(_) | Expr::New(_) => {}
                Expr::Param(_) => {
                    // Residual parameter taint; the builder parks it for the
                    // caller frame. Nothing to taint locally.
                }
                Expr::NewArray { len, .. } => taint.taint_val(*len),
                Expr::Binop { a, b, .. } => {
                    taint.taint_val(*a);
                    taint.taint_val(*b);
                }
                Expr::Cast { src, .. } => {
                    if val {
                        taint.taint_val(*src);
                    }
                    if obj {
                        taint.taint_obj(*src);
                    }
                    for f in fields {
                        taint.local.insert(TaintKey::Field(*src, f));
                    }
                }
                Expr::Phi(rs) => {
                    for r in rs {
                        if val {
                            taint.taint_val(*r);
                        }
                        if obj {
                            taint.taint_obj(*r);
                        }
                        for f in &fields {
                            taint.local.insert(TaintKey::Field(*r, f.clone()));
                        }
                    }
                }
                Expr::Invoke(iv) => {
                    // Framework call whose result is tainted: the receiver's
                    // object state and every argument value feed it.
                    if let Some(r) = iv.recv {
                        taint.taint_val(r);
                        taint.taint_obj(r);
                    }
                    for a in &iv.args {
                        taint.taint_val(*a);
                    }
                }
                Expr::FieldGet { obj: o, field } => {
                    if val {
                        taint.local.insert(TaintKey::Field(*o, field.clone()));
                    }
                    if obj || !fields.is_empty() {
                        // Nested object fields degrade to whole-object taint.
                        taint.taint_obj(*o);
                    }
                }
                Expr::StaticGet(f) => {
                    taint.statics.insert(f.clone());
                }
                Expr::ArrayGet { arr, idx } => {
                    taint.taint_obj(*arr);
                    taint.taint_val(*idx);
                }
            }
            true
        }
        InstrKind::FieldPut { value, obj, field } => {
            let direct = taint.local.contains(&TaintKey::Field(*obj, field.clone()));
            let whole = taint.local.contains(&TaintKey::Obj(*obj));
            if !direct && !whole {
                return false;
            }
            if direct {
                taint.local.remove(&TaintKey::Field(*obj, field.clone()));
                // The object may leave the taint set with its last field,
                // but its allocation stays traced.
                taint.alloc.insert(*obj);
            }
            taint.taint_val(*value);
            taint.taint_obj(*value);
            true
        }
        InstrKind::StaticPut { value, field } => {
            if !taint.statics.contains(field) {
                return false;
            }
            taint.statics.remove(field);
            taint.taint_val(*value);
            taint.taint_obj(*value);
            true
        }
        InstrKind::ArrayPut { value, arr, idx } => {
            if !taint.obj_tainted(*arr) {
                return false;
            }
            taint.taint_val(*value);
            taint.taint_val(*idx);
            true
        }
        InstrKind::Invoke(iv) => {
            // Bare framework invoke: relevant when it can mutate a tainted
            // object (tainted receiver) or hands a tainted object off
            // (tainted object argument). Its arguments' values feed the
            // object state.
            let recv_obj = iv.recv.is_some_and(|r| taint.obj_tainted(r));
            let arg_obj = iv.args.iter().any(|a| taint.obj_tainted(*a));
            if !recv_obj && !arg_obj {
                return false;
            }
            if recv_obj {
                for a in &iv.args {
                    taint.taint_val(*a);
                }
            }
            true
        }
        InstrKind::Return(_) | InstrKind::Goto(_) | InstrKind::If { .. } | InstrKind::Label(_) => {
            false
        }
    }
}

/// Residual taint on one parameter index at a method's entry. `alloc`
/// records points-to tracing only, which does not require further callers.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Residual {
    pub val: bool,
    pub obj: bool,
    pub fields: BTreeSet<FieldRef>,
    pub alloc: bool,
}

impl Residual {
    fn is_empty(&self) -> bool {
        !self.val && !self.obj && self.fields.is_empty()
    }
}

/// Methods that write a tainted static field; only those contained methods
/// on the path need to be entered.
pub fn contained_methods_for_static(
    tracker: &mut Backtracker,
    field: &FieldRef,
) -> BTreeSet<MethodSig> {
    tracker.session.field_access(field, FieldMode::Put)
}

pub struct SsgBuilder<'t, 'a> {
    tracker: &'t mut Backtracker<'a>,
    units: Vec<SsgUnit>,
    unit_ids: HashMap<LineRef, UnitId>,
    edges: Vec<SsgEdge>,
    statics: BTreeSet<FieldRef>,
    taint_tree: Vec<TaintNode>,
    tails: Vec<UnitId>,
    witnesses: Vec<Vec<String>>,
    reachable: bool,
    any_low_confidence: bool,
    clinit_witness: Option<Vec<ClassName>>,
    contained_stack: Vec<MethodSig>,
    track: Track,
}

struct FrameOutcome {
    first_unit: Option<UnitId>,
    exit_unit: Option<UnitId>,
    residuals: BTreeMap<usize, Residual>,
    taint_node: usize,
}

impl FrameOutcome {
    fn taint_node_opt(&self) -> Option<usize> {
        Some(self.taint_node)
    }
}

struct ContainedOutcome {
    span: Option<(UnitId, UnitId)>,
    residuals: BTreeMap<usize, Residual>,
}

impl<'t, 'a> SsgBuilder<'t, 'a> {
    pub fn new(tracker: &'t mut Backtracker<'a>) -> Self {
        SsgBuilder {
            tracker,
            units: Vec::new(),
            unit_ids: HashMap::new(),
            edges: Vec::new(),
            statics: BTreeSet::new(),
            taint_tree: Vec::new(),
            tails: Vec::new(),
            witnesses: Vec::new(),
            reachable: false,
            any_low_confidence: false,
            clinit_witness: None,
            contained_stack: Vec::new(),
            track: Track::Main,
        }
    }

    /// Build the SSG for one sink call site.
    pub fn generate(mut self, sink_site: &CallHit, spec_id: &str, tracked: &[ParamKey]) -> Ssg {
        let iv = sink_site
            .instr
            .kind
            .invoke_expr()
            .expect("sink site is an invocation")
            .clone();

        let sink_unit = self.record_unit(&sink_site.containing, sink_site.loc, &sink_site.instr);
        let mut taint = TaintState::default();
        for key in tracked {
            match key {
                ParamKey::Arg(i) => {
                    if let Some(r) = iv.args.get(*i) {
                        taint.taint_val(*r);
                        taint.taint_obj(*r);
                    }
                }
                ParamKey::Receiver => {
                    if let Some(r) = iv.recv {
                        taint.taint_val(r);
                        taint.taint_obj(r);
                    }
                }
            }
        }

        let sink_method = sink_site.containing.clone();
        self.explore(
            &sink_method,
            sink_site.loc.line,
            Some(sink_unit),
            taint,
            None,
            vec![sink_method.clone()],
            None,
        );

        let pending: Vec<FieldRef> = self.statics.iter().cloned().collect();
        let (invalid, unresolved) = self.add_offpath_clinit();

        Ssg {
            sink: SinkInfo {
                unit: sink_unit,
                method: sink_site.containing.clone(),
                callee: iv.callee.clone(),
                spec_id: spec_id.to_string(),
                tracked: tracked.to_vec(),
            },
            units: self.units,
            edges: self.edges,
            tails: self.tails,
            taint_tree: self.taint_tree,
            pending_statics: pending,
            invalid_statics: invalid,
            unresolved_statics: unresolved,
            reachable: self.reachable,
            witnesses: self.witnesses,
            clinit_witness: self.clinit_witness,
            any_low_confidence: self.any_low_confidence,
        }
    }

    fn record_unit(&mut self, method: &MethodSig, loc: LineRef, instr: &Instruction) -> UnitId {
        if let Some(id) = self.unit_ids.get(&loc) {
            return *id;
        }
        let id = UnitId(self.units.len() as u32);
        self.units.push(SsgUnit {
            id,
            method: method.clone(),
            loc,
            stmt: instr.clone(),
            track: self.track,
            text: instr.kind.render(),
        });
        self.unit_ids.insert(loc, id);
        id
    }

    fn edge(&mut self, from: UnitId, to: UnitId, kind: EdgeKind, meta: Option<LinkMeta>) {
        if self
            .edges
            .iter()
            .any(|e| e.from == from && e.to == to && e.kind == kind)
        {
            return;
        }
        self.edges.push(SsgEdge {
            from,
            to,
            kind,
            meta,
        });
    }

    /// Slice one frame and recurse into its callers.
    ///
    /// `start_line` is the first line sliced (inclusive, scanning upward);
    /// `preset_exit` is a unit already recorded at the crossing point (the
    /// sink unit or a call-site unit) whose line is excluded from the scan.
    /// `link_to` is the downstream frame's first unit together with the edge
    /// metadata to attach once this frame's exit unit is known.
    #[allow(clippy::too_many_arguments)]
    fn explore(
        &mut self,
        method_sig: &MethodSig,
        start_line: u32,
        preset_exit: Option<UnitId>,
        mut taint: TaintState,
        link_to: Option<(UnitId, LinkMeta)>,
        path: Vec<MethodSig>,
        parent_taint_node: Option<usize>,
    ) {
        let Some(method) = self.tracker.model.method(method_sig).cloned() else {
            return;
        };
        self.tracker.mark_visited(method_sig);
        taint.statics = std::mem::take(&mut self.statics);

        let out = self.slice_frame(&method, start_line, preset_exit, &mut taint, parent_taint_node);
        self.statics = std::mem::take(&mut taint.statics);

        if let Some((downstream_first, meta)) = link_to {
            if let Some(exit) = out.exit_unit {
                if meta.low_confidence {
                    self.any_low_confidence = true;
                }
                self.edge(exit, downstream_first, EdgeKind::CrossMethod, Some(meta));
            }
        }

        let resolved = out.residuals.values().all(Residual::is_empty);
        let outcome = self.tracker.find_callers(method_sig, resolved);
        match outcome {
            CallersOutcome::Entry { extra } => {
                self.reachable = true;
                self.push_witness(&path);
                if let Some(first) = out.first_unit {
                    self.tails.push(first);
                }
                for caller in extra {
                    self.follow_caller(caller, &out, &method, &path);
                }
            }
            CallersOutcome::ClinitGate { reachable, witness } => {
                if reachable {
                    self.reachable = true;
                    self.push_witness(&path);
                }
                if self.clinit_witness.is_none() && !witness.is_empty() {
                    self.clinit_witness = Some(witness);
                }
                if let Some(first) = out.first_unit {
                    self.tails.push(first);
                }
            }
            CallersOutcome::Callers(callers) => {
                if callers.is_empty() {
                    if let Some(first) = out.first_unit {
                        self.tails.push(first);
                    }
                    return;
                }
                for caller in callers {
                    self.follow_caller(caller, &out, &method, &path);
                }
            }
        }
    }

    fn push_witness(&mut self, path: &[MethodSig]) {
        let w: Vec<String> = path.iter().rev().map(|m| m.render_analysis()).collect();
        if !w.is_empty() && !self.witnesses.contains(&w) {
            self.witnesses.push(w);
        }
    }

    fn follow_caller(
        &mut self,
        caller: ResolvedCaller,
        out: &FrameOutcome,
        frame_method: &Method,
        path: &[MethodSig],
    ) {
        match caller {
            ResolvedCaller::Edge(edge) => {
                if path.contains(&edge.caller) {
                    self.tracker.loops.cross_backward += 1;
                    return;
                }
                let mut next_path = path.to_vec();
                next_path.push(edge.caller.clone());
                match &edge.via {
                    Via::Lifecycle => {
                        let Some(pred) = self.tracker.model.method(&edge.caller).cloned() else {
                            return;
                        };
                        // Same component instance: the handler's receiver
                        // residual transfers to the predecessor's receiver.
                        let mut taint = TaintState::default();
                        let recv_residual = out.residuals.get(&0).cloned().unwrap_or_default();
                        if let Some(r) = pred.param_reg(0) {
                            if recv_residual.obj {
                                taint.taint_obj(r);
                            }
                            for f in &recv_residual.fields {
                                taint.local.insert(TaintKey::Field(r, f.clone()));
                            }
                        }
                        let meta = LinkMeta {
                            kind: LinkKind::LifecyclePred,
                            callee: frame_method.sig.clone(),
                            chain: Vec::new(),
                            low_confidence: false,
                            intent_arg: None,
                            intent_param: None,
                        };
                        let link = out.first_unit.map(|f| (f, meta));
                        self.explore(
                            &edge.caller.clone(),
                            pred.line_end,
                            None,
                            taint,
                            link,
                            next_path,
                            out.taint_node_opt(),
                        );
                    }
                    Via::Icc {
                        low_confidence,
                        intent_arg,
                    } => {
                        let Some((loc, instr)) = &edge.site else {
                            return;
                        };
                        let Some(iv) = instr.kind.invoke_expr() else {
                            return;
                        };
                        let Some(arg) = iv.args.get(*intent_arg).copied() else {
                            return;
                        };
                        let intent_param = self
                            .tracker
                            .handler_intent_param(&frame_method.sig)
                            .map(|i| i + 1);
                        let site_unit = self.record_unit(&edge.caller, *loc, instr);
                        let mut taint = TaintState::default();
                        taint.taint_obj(arg);
                        let meta = LinkMeta {
                            kind: LinkKind::Icc,
                            callee: frame_method.sig.clone(),
                            chain: Vec::new(),
                            low_confidence: *low_confidence,
                            intent_arg: Some(*intent_arg),
                            intent_param,
                        };
                        let link = out.first_unit.map(|f| (f, meta));
                        self.explore(
                            &edge.caller.clone(),
                            loc.line.saturating_sub(1),
                            Some(site_unit),
                            taint,
                            link,
                            next_path,
                            out.taint_node_opt(),
                        );
                    }
                    _ => {
                        // Direct / child-class edge: map residual parameters
                        // to the call site's argument registers.
                        let Some((loc, instr)) = &edge.site else {
                            return;
                        };
                        let Some(iv) = instr.kind.invoke_expr() else {
                            return;
                        };
                        let is_static = iv.recv.is_none();
                        let mut taint = TaintState::default();
                        for (k, residual) in &out.residuals {
                            if residual.is_empty() {
                                continue;
                            }
                            let reg = if is_static {
                                iv.args.get(*k).copied()
                            } else if *k == 0 {
                                iv.recv
                            } else {
                                iv.args.get(*k - 1).copied()
                            };
                            let Some(reg) = reg else { continue };
                            if residual.val {
                                taint.taint_val(reg);
                            }
                            if residual.obj {
                                taint.taint_obj(reg);
                            }
                            for f in &residual.fields {
                                taint.local.insert(TaintKey::Field(reg, f.clone()));
                            }
                        }
                        let site_unit = self.record_unit(&edge.caller, *loc, instr);
                        let meta = LinkMeta {
                            kind: LinkKind::Call,
                            callee: frame_method.sig.clone(),
                            chain: Vec::new(),
                            low_confidence: false,
                            intent_arg: None,
                            intent_param: None,
                        };
                        let link = out.first_unit.map(|f| (f, meta));
                        self.explore(
                            &edge.caller.clone(),
                            loc.line.saturating_sub(1),
                            Some(site_unit),
                            taint,
                            link,
                            next_path,
                            out.taint_node_opt(),
                        );
                    }
                }
            }
            ResolvedCaller::Chain(chain) => {
                let head = chain.ctor_site.method.clone();
                if path.contains(&head) {
                    self.tracker.loops.cross_backward += 1;
                    return;
                }
                let mut next_path = path.to_vec();
                // The chain travels ending-method-first on the backward
                // path, so a witness read entry-first lists the chain from
                // the constructor-containing method to the ending method.
                let mut mids: Vec<MethodSig> = chain.methods().into_iter().skip(1).collect();
                mids.reverse();
                for m in mids {
                    if !next_path.contains(&m) {
                        next_path.push(m);
                    }
                }
                next_path.push(head.clone());

                // Receiver residual maps onto the constructed object.
                let recv_residual = out.residuals.get(&0).cloned().unwrap_or_default();
                let mut taint = TaintState::default();
                taint.taint_obj(chain.ctor_site.obj);
                for f in &recv_residual.fields {
                    taint
                        .local
                        .insert(TaintKey::Field(chain.ctor_site.obj, f.clone()));
                }
                let meta = LinkMeta {
                    kind: LinkKind::AdvancedCtor,
                    callee: frame_method.sig.clone(),
                    chain: chain.methods(),
                    low_confidence: false,
                    intent_arg: None,
                    intent_param: None,
                };
                let link = out.first_unit.map(|f| (f, meta));
                self.explore(
                    &head,
                    chain.ctor_site.loc.line,
                    None,
                    taint,
                    link,
                    next_path,
                    out.taint_node_opt(),
                );
            }
        }
    }

    /// Reverse-scan a frame from `start_line` downward to the method top,
    /// recording taint-relevant units and entering contained methods.
    fn slice_frame(
        &mut self,
        method: &Method,
        start_line: u32,
        preset_exit: Option<UnitId>,
        taint: &mut TaintState,
        parent_taint_node: Option<usize>,
    ) -> FrameOutcome {
        let mut frame_units: Vec<UnitId> = preset_exit.into_iter().collect();
        let mut residuals: BTreeMap<usize, Residual> = BTreeMap::new();
        let exit_line = preset_exit.map(|id| self.units[id.0 as usize].loc.line);

        for instr in method.body.iter().rev() {
            if instr.line > start_line || Some(instr.line) == exit_line {
                continue;
            }
            let recorded = if instr.kind.invoke_expr().is_some() {
                self.handle_invoke_backward(method, instr, taint, &mut frame_units)
            } else if let InstrKind::Def {
                lhs,
                expr: Expr::Param(k),
            } = &instr.kind
            {
                let alloc = taint.alloc.remove(lhs);
                if taint.any_tainted(*lhs) || alloc {
                    let (val, obj, fields) = taint.untaint_reg(*lhs);
                    let entry = residuals.entry(*k).or_default();
                    entry.val |= val;
                    entry.obj |= obj;
                    entry.alloc |= alloc;
                    entry.fields.extend(fields);
                    true
                } else {
                    false
                }
            } else {
                taint_transfer(&instr.kind, taint)
            };
            if recorded {
                let loc = LineRef {
                    file: method.file,
                    line: instr.line,
                };
                let id = self.record_unit(&method.sig, loc, instr);
                if !frame_units.contains(&id) {
                    frame_units.push(id);
                }
            }
        }

        let first_unit = frame_units
            .iter()
            .min_by_key(|id| self.units[id.0 as usize].loc.line)
            .copied();
        let exit_unit = preset_exit.or_else(|| {
            frame_units
                .iter()
                .max_by_key(|id| self.units[id.0 as usize].loc.line)
                .copied()
        });

        let node = TaintNode {
            method: method.sig.clone(),
            entries: {
                let mut entries: Vec<String> = residuals
                    .iter()
                    .filter(|(_, r)| !r.is_empty())
                    .map(|(k, r)| {
                        let mut kinds = Vec::new();
                        if r.val {
                            kinds.push("val".to_string());
                        }
                        if r.obj {
                            kinds.push("obj".to_string());
                        }
                        for f in &r.fields {
                            kinds.push(f.render_search());
                        }
                        format!("param{}:{}", k, kinds.join("+"))
                    })
                    .collect();
                entries.extend(taint.render());
                entries
            },
            parent: parent_taint_node,
        };
        let taint_node = self.taint_tree.len();
        self.taint_tree.push(node);

        FrameOutcome {
            first_unit,
            exit_unit,
            residuals,
            taint_node,
        }
    }

    /// Backward handling of an invocation inside a frame: decide whether a
    /// contained method must be entered (tainted result, tainted object
    /// passed, or a tainted static written by the callee), or apply the
    /// framework transfer.
    fn handle_invoke_backward(
        &mut self,
        method: &Method,
        instr: &Instruction,
        taint: &mut TaintState,
        frame_units: &mut Vec<UnitId>,
    ) -> bool {
        let iv = instr.kind.invoke_expr().unwrap().clone();
        let lhs = instr.kind.def_lhs();
        let lhs_taint = lhs.map(|r| {
            (
                taint.val_tainted(r),
                taint.local.contains(&TaintKey::Obj(r)),
                taint.fields_of(r),
            )
        });
        let lhs_rel = lhs_taint
            .as_ref()
            .is_some_and(|(v, o, fs)| *v || *o || !fs.is_empty());

        let Some(target) = self.resolve_target(&iv) else {
            return taint_transfer(&instr.kind, taint);
        };

        let recv_obj = iv.recv.is_some_and(|r| taint.obj_tainted(r));
        let tainted_obj_args: Vec<usize> = iv
            .args
            .iter()
            .enumerate()
            .filter(|(_, r)| taint.obj_tainted(**r))
            .map(|(i, _)| i)
            .collect();
        let static_rel = {
            let fields: Vec<FieldRef> = taint.statics.iter().cloned().collect();
            fields
                .iter()
                .any(|f| contained_methods_for_static(self.tracker, f).contains(&target.sig))
        };

        if !lhs_rel && !recv_obj && tainted_obj_args.is_empty() && !static_rel {
            return false;
        }

        // Contained-method loop: a repeated method in the contained descent
        // is an inner backward loop.
        if self.contained_stack.contains(&target.sig) {
            self.tracker.loops.inner_backward += 1;
            return false;
        }

        // Untaint what the contained method resolves.
        if let (Some(lhs_reg), true) = (lhs, lhs_rel) {
            taint.untaint_reg(lhs_reg);
        }

        // Seed the contained slice: map tainted objects at the site onto the
        // callee's parameter registers.
        let mut inner = TaintState {
            local: BTreeSet::new(),
            statics: std::mem::take(&mut taint.statics),
            alloc: BTreeSet::new(),
        };
        let is_static_callee = iv.recv.is_none();
        // Object registers handed across the boundary: whatever the callee
        // resolves, their allocations stay traced in this frame.
        let mut crossed_objs: Vec<Reg> = Vec::new();
        if recv_obj {
            if let (Some(recv), Some(p0)) = (iv.recv, target.param_reg(0)) {
                crossed_objs.push(recv);
                for f in taint.fields_of(recv) {
                    inner.local.insert(TaintKey::Field(p0, f.clone()));
                    taint.local.remove(&TaintKey::Field(recv, f));
                }
                if taint.local.remove(&TaintKey::Obj(recv)) {
                    inner.taint_obj(p0);
                }
            }
        }
        for i in &tainted_obj_args {
            let k = if is_static_callee { *i } else { *i + 1 };
            if let Some(pr) = target.param_reg(k) {
                let arg = iv.args[*i];
                crossed_objs.push(arg);
                for f in taint.fields_of(arg) {
                    inner.local.insert(TaintKey::Field(pr, f.clone()));
                    taint.local.remove(&TaintKey::Field(arg, f));
                }
                if taint.local.remove(&TaintKey::Obj(arg)) {
                    inner.taint_obj(pr);
                }
            }
        }

        let site_loc = LineRef {
            file: method.file,
            line: instr.line,
        };
        let site_unit = self.record_unit(&method.sig, site_loc, instr);
        frame_units.push(site_unit);

        let lhs_kinds = lhs_taint.unwrap_or((false, false, Vec::new()));
        let contained = self.contained_slice(&target, lhs_rel, &lhs_kinds, &mut inner);
        taint.statics = inner.statics;
        for r in crossed_objs {
            taint.alloc.insert(r);
        }

        if let Some((entry, exit)) = contained.span {
            self.edge(site_unit, entry, EdgeKind::ContainedCall, None);
            self.edge(exit, site_unit, EdgeKind::ContainedReturn, None);
        }

        // Residual parameters of the contained method become taints on the
        // site's argument registers, to be resolved above the site.
        for (k, residual) in contained.residuals {
            if residual.is_empty() && !residual.alloc {
                continue;
            }
            let reg = if is_static_callee {
                iv.args.get(k).copied()
            } else if k == 0 {
                iv.recv
            } else {
                iv.args.get(k - 1).copied()
            };
            let Some(reg) = reg else { continue };
            if residual.val {
                taint.taint_val(reg);
            }
            if residual.obj {
                taint.taint_obj(reg);
            }
            if residual.alloc {
                taint.alloc.insert(reg);
            }
            for f in residual.fields {
                taint.local.insert(TaintKey::Field(reg, f));
            }
        }
        true
    }

    fn resolve_target(&self, iv: &InvokeExpr) -> Option<Method> {
        if let Some(m) = self.tracker.model.method(&iv.callee) {
            return Some(m.clone());
        }
        let def = self
            .tracker
            .hierarchy
            .resolve_subsig(&iv.callee.class, &iv.callee.subsig())?;
        self.tracker
            .model
            .method(&iv.callee.with_class(def.clone()))
            .cloned()
    }

    /// Slice a contained method over its whole body. When the caller needs
    /// its return value, the taint is seeded at every return statement with
    /// the lhs kinds.
    fn contained_slice(
        &mut self,
        method: &Method,
        seed_returns: bool,
        lhs_kinds: &(bool, bool, Vec<FieldRef>),
        taint: &mut TaintState,
    ) -> ContainedOutcome {
        self.contained_stack.push(method.sig.clone());
        self.tracker.mark_visited(&method.sig);

        let mut units: Vec<UnitId> = Vec::new();
        let mut residuals: BTreeMap<usize, Residual> = BTreeMap::new();

        if seed_returns {
            for instr in &method.body {
                if let InstrKind::Return(Some(r)) = &instr.kind {
                    let (val, obj, fields) = lhs_kinds.clone();
                    if val {
                        taint.taint_val(*r);
                    }
                    if obj {
                        taint.taint_obj(*r);
                    }
                    for f in fields {
                        taint.local.insert(TaintKey::Field(*r, f));
                    }
                    let loc = LineRef {
                        file: method.file,
                        line: instr.line,
                    };
                    units.push(self.record_unit(&method.sig, loc, instr));
                }
            }
        }

        for instr in method.body.iter().rev() {
            let recorded = if instr.kind.invoke_expr().is_some() {
                let mut inner_units = Vec::new();
                let r = self.handle_invoke_backward(method, instr, taint, &mut inner_units);
                units.extend(inner_units);
                r
            } else if let InstrKind::Def {
                lhs,
                expr: Expr::Param(k),
            } = &instr.kind
            {
                let alloc = taint.alloc.remove(lhs);
                if taint.any_tainted(*lhs) || alloc {
                    let (val, obj, fields) = taint.untaint_reg(*lhs);
                    let entry = residuals.entry(*k).or_default();
                    entry.val |= val;
                    entry.obj |= obj;
                    entry.alloc |= alloc;
                    entry.fields.extend(fields);
                    true
                } else {
                    false
                }
            } else {
                taint_transfer(&instr.kind, taint)
            };
            if recorded {
                let loc = LineRef {
                    file: method.file,
                    line: instr.line,
                };
                let id = self.record_unit(&method.sig, loc, instr);
                if !units.contains(&id) {
                    units.push(id);
                }
            }
        }

        self.contained_stack.pop();

        let entry = units
            .iter()
            .min_by_key(|id| self.units[id.0 as usize].loc.line)
            .copied();
        let exit = units
            .iter()
            .max_by_key(|id| self.units[id.0 as usize].loc.line)
            .copied();
        ContainedOutcome {
            span: entry.zip(exit),
            residuals,
        }
    }

    /// After the main taint process, resolve remaining static fields by
    /// backward-slicing each owner's `<clinit>` into the StaticInit track,
    /// gated by the recursive reachability search.
    fn add_offpath_clinit(&mut self) -> (Vec<FieldRef>, Vec<FieldRef>) {
        let mut invalid: Vec<FieldRef> = Vec::new();
        let mut processed: BTreeSet<ClassName> = BTreeSet::new();

        self.track = Track::StaticInit;
        loop {
            let next = self
                .statics
                .iter()
                .find(|f| !processed.contains(&f.class))
                .cloned();
            let Some(field) = next else { break };
            processed.insert(field.class.clone());

            let clinit = self
                .tracker
                .model
                .class(&field.class)
                .and_then(|c| c.clinit())
                .cloned();
            let Some(clinit) = clinit else {
                continue;
            };

            let (valid, _witness) = self.tracker.clinit_reachable(&field.class);
            let before: BTreeSet<FieldRef> = self
                .statics
                .iter()
                .filter(|f| f.class == field.class)
                .cloned()
                .collect();

            let mut taint = TaintState {
                local: BTreeSet::new(),
                statics: std::mem::take(&mut self.statics),
                alloc: BTreeSet::new(),
            };
            let _ = self.contained_slice(&clinit, false, &(false, false, Vec::new()), &mut taint);
            self.statics = taint.statics;

            if !valid {
                for f in before {
                    if !self.statics.contains(&f) {
                        // The initializer resolves it, but the initializer
                        // itself is unreachable: the fact stays unresolved.
                        self.statics.insert(f.clone());
                        invalid.push(f);
                    }
                }
            }
        }
        self.track = Track::Main;

        let unresolved: Vec<FieldRef> = self.statics.iter().cloned().collect();
        (invalid, unresolved)
    }
}

/// Convenience entry point matching the pipeline: build one SSG per sink
/// call site.
pub fn generate_ssg(
    tracker: &mut Backtracker,
    sink_site: &CallHit,
    spec_id: &str,
    tracked: &[ParamKey],
) -> Ssg {
    SsgBuilder::new(tracker).generate(sink_site, spec_id, tracked)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::AnalysisConfig;
    use crate::index::{SearchIndex, SearchSession};
    use crate::sbc::hierarchy::ClassHierarchy;
    use crate::sbc::parser::parse_app_from_sources;
    use std::sync::Arc;

    fn setup(text: &str, manifest: &str) -> (Arc<AppModel>, ClassHierarchy, AnalysisConfig) {
        let model = Arc::new(
            parse_app_from_sources(
                &[("app.sbc".to_string(), text.to_string())],
                manifest,
                &["java/".into(), "javax/".into(), "android/".into()],
            )
            .unwrap(),
        );
        let h = ClassHierarchy::build(&model).unwrap();
        (model, h, AnalysisConfig::default())
    }

    fn reg(n: u32) -> Reg {
        Reg(n)
    }

    fn field(s: &str) -> FieldRef {
        FieldRef::parse_search(s).unwrap()
    }

    #[test]
    fn taint_transfer_iget_rule() {
        // Reverse-processing `vX = iget vO, C.f` with vX tainted gains
        // {vO.f, vO-as-object}, loses vX.
        let mut t = TaintState::default();
        t.taint_val(reg(3));
        let stmt = InstrKind::Def {
            lhs: reg(3),
            expr: Expr::FieldGet {
                obj: reg(0),
                field: field("Lcom/a/C;.f:I"),
            },
        };
        assert!(taint_transfer(&stmt, &mut t));
        assert!(!t.val_tainted(reg(3)));
        assert!(t
            .local
            .contains(&TaintKey::Field(reg(0), field("Lcom/a/C;.f:I"))));
        assert!(t.obj_tainted(reg(0)));
    }

    #[test]
    fn untainting_last_field_removes_object() {
        let mut t = TaintState::default();
        t.local
            .insert(TaintKey::Field(reg(0), field("Lcom/a/C;.f:I")));
        assert!(t.obj_tainted(reg(0)));
        let stmt = InstrKind::FieldPut {
            value: reg(5),
            obj: reg(0),
            field: field("Lcom/a/C;.f:I"),
        };
        assert!(taint_transfer(&stmt, &mut t));
        assert!(!t.obj_tainted(reg(0)));
        assert!(t.val_tainted(reg(5)));
    }

    #[test]
    fn untouched_statement_is_frame_rule() {
        let mut t = TaintState::default();
        t.taint_val(reg(9));
        let stmt = InstrKind::Def {
            lhs: reg(1),
            expr: Expr::Const(ConstVal::Int(3)),
        };
        assert!(!taint_transfer(&stmt, &mut t));
        assert_eq!(t.local.len(), 1);
    }

    #[test]
    fn sget_moves_taint_to_static_set() {
        let mut t = TaintState::default();
        t.taint_val(reg(2));
        let f = field("Lcom/a/C;.PORT:I");
        let stmt = InstrKind::Def {
            lhs: reg(2),
            expr: Expr::StaticGet(f.clone()),
        };
        assert!(taint_transfer(&stmt, &mut t));
        assert!(t.statics.contains(&f));
        let sput = InstrKind::StaticPut {
            value: reg(7),
            field: f.clone(),
        };
        assert!(taint_transfer(&sput, &mut t));
        assert!(!t.statics.contains(&f));
        assert!(t.val_tainted(reg(7)));
    }

    const SINGLE: &str = "\
.class public Lcom/x/Main;
.super Landroid/app/Activity;
.method public onCreate()V
  v0 = param 0
  v1 = const \"AES/ECB/PKCS5Padding\"
  v2 = invoke Ljavax/crypto/Cipher;.getInstance:(Ljava/lang/String;)Ljavax/crypto/Cipher; v1
  return-void
.end method
";

    fn build_ssg(
        model: &Arc<AppModel>,
        hierarchy: &ClassHierarchy,
        config: &AnalysisConfig,
        sink_sig: &str,
    ) -> (Ssg, crate::backtrack::LoopLog) {
        let index = Arc::new(SearchIndex::build(model.clone()));
        let mut tracker = Backtracker::new(
            model.clone(),
            hierarchy,
            config,
            SearchSession::new(index.clone()),
        );
        let hits = index.search_invocations(sink_sig);
        assert_eq!(hits.len(), 1, "expected one sink site");
        let ssg = generate_ssg(&mut tracker, &hits[0], "test-sink", &[ParamKey::Arg(0)]);
        (ssg, tracker.loops)
    }

    #[test]
    fn single_method_ssg_has_no_cross_edges() {
        let (model, h, c) = setup(SINGLE, "activity Lcom/x/Main;\n");
        let (ssg, _) = build_ssg(
            &model,
            &h,
            &c,
            "Ljavax/crypto/Cipher;.getInstance:(Ljava/lang/String;)Ljavax/crypto/Cipher;",
        );
        assert!(ssg.reachable);
        assert!(ssg.edges.iter().all(|e| e.kind != EdgeKind::CrossMethod));
        // Units: the sink invoke and the const definition.
        assert_eq!(ssg.units.len(), 2);
        assert_eq!(ssg.tails.len(), 1);
        assert!(ssg.unresolved_statics.is_empty());
    }

    const FIG6: &str = "\
.class public Lcom/studiosol/palcomp3/MP3Server;
.super Landroid/app/Service;
.method public onStartCommand(Landroid/content/Intent;)I
  v0 = param 0
  v1 = new Lcom/studiosol/palcomp3/MP3LocalServer;
  invoke v1 Lcom/studiosol/palcomp3/MP3LocalServer;.<init>:()V
  invoke v1 Lcom/studiosol/palcomp3/MP3LocalServer;.start:()V
  v2 = const 0
  return v2
.end method
.class Lcom/studiosol/palcomp3/MP3LocalServer;
.field static PORT:I
.field myPort:I
.method static constructor <clinit>()V
  v0 = const 8090
  sput v0 Lcom/studiosol/palcomp3/MP3LocalServer;.PORT:I
  return-void
.end method
.method public constructor <init>()V
  v0 = param 0
  v1 = sget Lcom/studiosol/palcomp3/MP3LocalServer;.PORT:I
  iput v1 v0 Lcom/studiosol/palcomp3/MP3LocalServer;.myPort:I
  return-void
.end method
.method public start()V
  v0 = param 0
  v1 = iget v0 Lcom/studiosol/palcomp3/MP3LocalServer;.myPort:I
  v2 = const 1
  v3 = binop add v1 v2
  invoke Lcom/x/api/LocalServer;.open:(I)V v3
  return-void
.end method
";

    #[test]
    fn fig6_shape_static_track_and_contained_edges() {
        let (model, h, c) = setup(FIG6, "service Lcom/studiosol/palcomp3/MP3Server;\n");
        let (ssg, _) = build_ssg(&model, &h, &c, "Lcom/x/api/LocalServer;.open:(I)V");
        assert!(ssg.reachable);

        // Contained-method call/return edges around the constructor.
        let contained_calls: Vec<&SsgEdge> = ssg
            .edges
            .iter()
            .filter(|e| e.kind == EdgeKind::ContainedCall)
            .collect();
        assert_eq!(contained_calls.len(), 1);
        let entry = ssg.unit(contained_calls[0].to);
        assert!(entry.method.render_search().contains("<init>"));
        assert!(ssg.edges.iter().any(|e| e.kind == EdgeKind::ContainedReturn));

        // The static track holds the <clinit> statements defining PORT.
        let static_units: Vec<&SsgUnit> = ssg
            .units
            .iter()
            .filter(|u| u.track == Track::StaticInit)
            .collect();
        assert!(!static_units.is_empty());
        assert!(static_units
            .iter()
            .all(|u| u.method.render_search().contains("<clinit>")));
        assert!(static_units.iter().any(|u| u.text.contains("sput")));
        assert!(ssg.unresolved_statics.is_empty());
        assert_eq!(ssg.pending_statics.len(), 1);

        // Cross edge exists between the service frame and start().
        assert!(ssg.edges.iter().any(|e| e.kind == EdgeKind::CrossMethod));

        // Witness runs from the entry handler to the sink method.
        assert_eq!(ssg.witnesses.len(), 1);
        assert!(ssg.witnesses[0][0].contains("onStartCommand"));
        assert!(ssg.witnesses[0].last().unwrap().contains("start()"));
    }

    #[test]
    fn orphan_clinit_marks_static_invalid() {
        // The static's owner chain is never referenced by a manifest class:
        // the StaticInit track is added but flagged invalid.
        let text = "\
.class public Lcom/x/Main;
.super Landroid/app/Activity;
.method public onCreate()V
  v0 = param 0
  v1 = invoke Lcom/x/Helper;.port:()I
  invoke Lcom/x/api/LocalServer;.open:(I)V v1
  return-void
.end method
.class Lcom/x/Helper;
.method public static port()I
  v0 = sget Lcom/x/Orphan;.PORT:I
  return v0
.end method
.class Lcom/x/Orphan;
.field static PORT:I
.method static constructor <clinit>()V
  v0 = const 9999
  sput v0 Lcom/x/Orphan;.PORT:I
  return-void
.end method
";
        let manifest = "activity Lcom/x/Other;\n";
        let (model, h, c) = setup(text, manifest);
        let (ssg, _) = build_ssg(&model, &h, &c, "Lcom/x/api/LocalServer;.open:(I)V");
        assert!(!ssg.reachable);
        assert_eq!(ssg.invalid_statics.len(), 1);
        assert_eq!(ssg.unresolved_statics.len(), 1);
        // The static track was still added for inspection.
        assert!(ssg.units.iter().any(|u| u.track == Track::StaticInit));
    }

    #[test]
    fn mutual_recursion_detected_as_cross_backward() {
        let text = "\
.class public Lcom/x/A;
.method public static m()V
  invoke Lcom/x/A;.k:()V
  v0 = const \"AES/ECB/PKCS5Padding\"
  v1 = invoke Ljavax/crypto/Cipher;.getInstance:(Ljava/lang/String;)Ljavax/crypto/Cipher; v0
  return-void
.end method
.method public static n()V
  invoke Lcom/x/A;.m:()V
  return-void
.end method
.method public static k()V
  invoke Lcom/x/A;.n:()V
  return-void
.end method
";
        let (model, h, c) = setup(text, "");
        let (ssg, loops) = build_ssg(
            &model,
            &h,
            &c,
            "Ljavax/crypto/Cipher;.getInstance:(Ljava/lang/String;)Ljavax/crypto/Cipher;",
        );
        assert!(!ssg.reachable);
        assert!(loops.cross_backward >= 1, "loops: {loops:?}");
    }

    #[test]
    fn ssg_serialization_round_trips() {
        let (model, h, c) = setup(FIG6, "service Lcom/studiosol/palcomp3/MP3Server;\n");
        let (ssg, _) = build_ssg(&model, &h, &c, "Lcom/x/api/LocalServer;.open:(I)V");
        let json = ssg.to_json();
        let back = Ssg::from_json(&json).unwrap();
        assert_eq!(back.units.len(), ssg.units.len());
        assert_eq!(back.edges.len(), ssg.edges.len());
        assert_eq!(back.reachable, ssg.reachable);
        assert_eq!(back.sink.unit, ssg.sink.unit);
    }

    /// Oracle slice comparison on a three-method chain: every statement the
    /// whole-app dependency closure marks as affecting the sink parameter
    /// appears in the SSG, and nothing irrelevant does.
    #[test]
    fn slice_matches_dependency_closure_oracle() {
        let text = "\
.class public Lcom/x/Main;
.super Landroid/app/Activity;
.method public onCreate()V
  v0 = param 0
  v1 = const 40
  v2 = const 2
  v3 = binop add v1 v2
  invoke Lcom/x/Mid;.pass:(I)V v3
  v9 = const 999
  return-void
.end method
.class public Lcom/x/Mid;
.method public static pass(I)V
  v0 = param 0
  v1 = const 1
  v2 = binop add v0 v1
  invoke Lcom/x/Leaf;.fire:(I)V v2
  return-void
.end method
.class public Lcom/x/Leaf;
.method public static fire(I)V
  v0 = param 0
  invoke Lcom/x/api/LocalServer;.open:(I)V v0
  return-void
.end method
";
        let (model, h, c) = setup(text, "activity Lcom/x/Main;\n");
        let (ssg, _) = build_ssg(&model, &h, &c, "Lcom/x/api/LocalServer;.open:(I)V");
        assert!(ssg.reachable);

        let want = [
            "invoke Lcom/x/api/LocalServer;.open:(I)V v0",
            "v0 = param 0",
            "v1 = const 1",
            "v2 = binop add v0 v1",
            "invoke Lcom/x/Leaf;.fire:(I)V v2",
            "v1 = const 40",
            "v2 = const 2",
            "v3 = binop add v1 v2",
            "invoke Lcom/x/Mid;.pass:(I)V v3",
        ];
        let got: BTreeSet<String> = ssg.units.iter().map(|u| u.text.clone()).collect();
        for w in want {
            assert!(got.contains(w), "missing unit: {w}\nhave: {got:#?}");
        }
        assert!(!got.iter().any(|g| g.contains("999")), "over-slice: {got:#?}");

        // Taint-map hierarchy mirrors the backward chain.
        assert_eq!(ssg.taint_tree.len(), 3);
        assert!(ssg.taint_tree[1].parent.is_some() || ssg.taint_tree[2].parent.is_some());

        // Witness is the full entry-to-sink chain.
        assert_eq!(ssg.witnesses.len(), 1);
        assert_eq!(
            ssg.witnesses[0],
            vec![
                "<com.x.Main: void onCreate()>",
                "<com.x.Mid: void pass(int)>",
                "<com.x.Leaf: void fire(int)>",
            ]
        );
    }
}
