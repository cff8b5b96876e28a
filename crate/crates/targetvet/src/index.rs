//! Immutable search index over the SBC plaintext, plus the command-level
//! cache. All searches the analyzer performs are exact-token or
//! exact-signature matches, so the index is a postings map from canonical
//! strings to line lists, built once per app; no substring engine is needed.
//!
//! Line-to-method resolution uses per-file sorted method extents with
//! binary search rather than per-line back-pointers.

use crate::sbc::model::*;
use crate::sbc::types::*;
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;
use std::time::Instant;

/// A canonical search command; equal commands are logically identical
/// queries, which is what makes them usable as cache keys.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct SearchCommand {
    pub kind: CommandKind,
    pub payload: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum CommandKind {
    /// Payload: full search-form signature, or a bare API name for the
    /// name-keyed variant used by the ICC call search.
    InvocationOf,
    /// Payload: class descriptor; result: classes whose bodies carry any
    /// token referencing it.
    TokenInClass,
    /// Payload: `get:<field sig>` or `put:<field sig>`.
    FieldAccess,
    /// Payload: class descriptor of a `const class` operand.
    ConstClass,
    /// Payload: the exact string constant.
    ConstString,
}

impl SearchCommand {
    pub fn invocation(payload: impl Into<String>) -> Self {
        SearchCommand {
            kind: CommandKind::InvocationOf,
            payload: payload.into(),
        }
    }

    pub fn token_in_class(class: &ClassName) -> Self {
        SearchCommand {
            kind: CommandKind::TokenInClass,
            payload: class.descriptor(),
        }
    }

    pub fn field_access(field: &FieldRef, mode: FieldMode) -> Self {
        SearchCommand {
            kind: CommandKind::FieldAccess,
            payload: format!("{}:{}", mode.keyword(), field.render_search()),
        }
    }

    pub fn const_class(class: &ClassName) -> Self {
        SearchCommand {
            kind: CommandKind::ConstClass,
            payload: class.descriptor(),
        }
    }

    pub fn const_string(s: &str) -> Self {
        SearchCommand {
            kind: CommandKind::ConstString,
            payload: s.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldMode {
    Get,
    Put,
}

impl FieldMode {
    fn keyword(&self) -> &'static str {
        match self {
            FieldMode::Get => "get",
            FieldMode::Put => "put",
        }
    }
}

/// One invocation hit: the containing method, the line, and the instruction
/// (an invoke or assign-from-invoke whose callee equals the searched
/// signature).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CallHit {
    pub containing: MethodSig,
    pub loc: LineRef,
    pub instr: Instruction,
}

/// A `const class` / `const "string"` hit site.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstHit {
    pub containing: MethodSig,
    pub loc: LineRef,
    pub lhs: Reg,
}

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct CacheStats {
    pub lookups: u64,
    pub hits: u64,
}

impl CacheStats {
    pub fn rate(&self) -> f64 {
        if self.lookups == 0 {
            0.0
        } else {
            self.hits as f64 / self.lookups as f64
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IndexStats {
    pub files: usize,
    pub methods: usize,
    pub instruction_lines: usize,
    pub token_count: usize,
    pub postings_entries: usize,
    pub build_ms: f64,
}

#[derive(Debug, Clone)]
struct MethodExtent {
    start: u32,
    end: u32,
    sig: MethodSig,
}

/// The immutable index. Shareable across threads; searches never mutate.
pub struct SearchIndex {
    model: Arc<AppModel>,
    invocations: HashMap<String, Vec<LineRef>>,
    invocations_by_name: HashMap<String, Vec<LineRef>>,
    class_tokens: HashMap<ClassName, Vec<LineRef>>,
    const_classes: HashMap<ClassName, Vec<LineRef>>,
    const_strings: HashMap<String, Vec<LineRef>>,
    field_gets: HashMap<String, Vec<LineRef>>,
    field_puts: HashMap<String, Vec<LineRef>>,
    extents: Vec<Vec<MethodExtent>>,
    stats: IndexStats,
}

impl SearchIndex {
    pub fn build(model: Arc<AppModel>) -> SearchIndex {
        let t0 = Instant::now();
        let mut invocations: HashMap<String, Vec<LineRef>> = HashMap::new();
        let mut invocations_by_name: HashMap<String, Vec<LineRef>> = HashMap::new();
        let mut class_tokens: HashMap<ClassName, Vec<LineRef>> = HashMap::new();
        let mut const_classes: HashMap<ClassName, Vec<LineRef>> = HashMap::new();
        let mut const_strings: HashMap<String, Vec<LineRef>> = HashMap::new();
        let mut field_gets: HashMap<String, Vec<LineRef>> = HashMap::new();
        let mut field_puts: HashMap<String, Vec<LineRef>> = HashMap::new();
        let mut extents: Vec<Vec<MethodExtent>> = vec![Vec::new(); model.files.len()];
        let mut instruction_lines = 0usize;
        let mut methods = 0usize;

        // BTreeMap iteration keeps class order deterministic; postings lists
        // are sorted afterwards by (file, line) so results do not depend on
        // declaration order.
        for class in model.classes.values() {
            for method in &class.methods {
                methods += 1;
                extents[method.file.0 as usize].push(MethodExtent {
                    start: method.line_start,
                    end: method.line_end,
                    sig: method.sig.clone(),
                });
                for instr in &method.body {
                    instruction_lines += 1;
                    let loc = LineRef {
                        file: method.file,
                        line: instr.line,
                    };
                    let mut classes: Vec<ClassName> = Vec::new();
                    match &instr.kind {
                        InstrKind::Def { expr, .. } => {
                            index_expr(expr, loc, &mut classes, &mut invocations,
                                       &mut invocations_by_name, &mut const_classes,
                                       &mut const_strings, &mut field_gets);
                        }
                        InstrKind::Invoke(iv) => {
                            index_invoke(iv, loc, &mut classes, &mut invocations,
                                         &mut invocations_by_name);
                        }
                        InstrKind::FieldPut { field, .. } | InstrKind::StaticPut { field, .. } => {
                            field_puts
                                .entry(field.render_search())
                                .or_default()
                                .push(loc);
                            classes.push(field.class.clone());
                            collect_desc_classes(&field.desc, &mut classes);
                        }
                        _ => {}
                    }
                    for c in classes {
                        let list = class_tokens.entry(c).or_default();
                        if list.last() != Some(&loc) {
                            list.push(loc);
                        }
                    }
                }
            }
        }

        for per_file in &mut extents {
            per_file.sort_by_key(|e| e.start);
        }
        for map in [&mut invocations, &mut invocations_by_name, &mut const_strings,
                    &mut field_gets, &mut field_puts] {
            for v in map.values_mut() {
                v.sort();
            }
        }
        for map in [&mut class_tokens, &mut const_classes] {
            for v in map.values_mut() {
                v.sort();
            }
        }

        let token_count = invocations.len()
            + invocations_by_name.len()
            + class_tokens.len()
            + const_classes.len()
            + const_strings.len()
            + field_gets.len()
            + field_puts.len();
        let postings_entries = invocations.values().map(Vec::len).sum::<usize>()
            + invocations_by_name.values().map(Vec::len).sum::<usize>()
            + class_tokens.values().map(Vec::len).sum::<usize>()
            + const_classes.values().map(Vec::len).sum::<usize>()
            + const_strings.values().map(Vec::len).sum::<usize>()
            + field_gets.values().map(Vec::len).sum::<usize>()
            + field_puts.values().map(Vec::len).sum::<usize>();
        let stats = IndexStats {
            files: model.files.len(),
            methods,
            instruction_lines,
            token_count,
            postings_entries,
            build_ms: t0.elapsed().as_secs_f64() * 1e3,
        };

        SearchIndex {
            model,
            invocations,
            invocations_by_name,
            class_tokens,
            const_classes,
            const_strings,
            field_gets,
            field_puts,
            extents,
            stats,
        }
    }

    pub fn model(&self) -> &Arc<AppModel> {
        &self.model
    }

    pub fn stats(&self) -> &IndexStats {
        &self.stats
    }

    /// Resolve the method containing a line, via binary search over the
    /// per-file method extents.
    pub fn method_at(&self, loc: LineRef) -> Option<&MethodSig> {
        let per_file = self.extents.get(loc.file.0 as usize)?;
        let ix = per_file.partition_point(|e| e.start <= loc.line);
        let cand = &per_file.get(ix.checked_sub(1)?)?;
        (loc.line <= cand.end).then_some(&cand.sig)
    }

    fn hit(&self, loc: LineRef) -> CallHit {
        let sig = self
            .method_at(loc)
            .expect("postings line has a containing method")
            .clone();
        let instr = self
            .model
            .method(&sig)
            .and_then(|m| m.instr_at(loc.line))
            .expect("postings line resolves to an instruction")
            .clone();
        CallHit {
            containing: sig,
            loc,
            instr,
        }
    }

    /// All invoke (or assign-from-invoke) instructions whose callee equals
    /// the search-form signature, in (file, line) order.
    pub fn search_invocations(&self, sig_search_form: &str) -> Vec<CallHit> {
        self.invocations
            .get(sig_search_form)
            .map(|lines| lines.iter().map(|&l| self.hit(l)).collect())
            .unwrap_or_default()
    }

    /// Invocations keyed by the bare callee method name; the ICC call
    /// search uses this to find e.g. every `startService` call.
    pub fn search_invocations_named(&self, name: &str) -> Vec<CallHit> {
        self.invocations_by_name
            .get(name)
            .map(|lines| lines.iter().map(|&l| self.hit(l)).collect())
            .unwrap_or_default()
    }

    /// Classes whose bodies contain any token referencing `class`, the
    /// primitive behind the static-initializer reachability search. The
    /// referencing class itself is excluded.
    pub fn search_class_references(&self, class: &ClassName) -> BTreeSet<ClassName> {
        let mut out = BTreeSet::new();
        if let Some(lines) = self.class_tokens.get(class) {
            for &l in lines {
                if let Some(m) = self.method_at(l) {
                    if &m.class != class {
                        out.insert(m.class.clone());
                    }
                }
            }
        }
        out
    }

    /// Methods containing an access of the field: `sget`/`iget` for
    /// [`FieldMode::Get`], `sput`/`iput` for [`FieldMode::Put`].
    pub fn search_field_access(&self, field: &FieldRef, mode: FieldMode) -> BTreeSet<MethodSig> {
        let map = match mode {
            FieldMode::Get => &self.field_gets,
            FieldMode::Put => &self.field_puts,
        };
        map.get(&field.render_search())
            .map(|lines| {
                lines
                    .iter()
                    .filter_map(|&l| self.method_at(l).cloned())
                    .collect()
            })
            .unwrap_or_default()
    }

    pub fn search_const_class(&self, class: &ClassName) -> Vec<ConstHit> {
        self.const_hits(self.const_classes.get(class))
    }

    pub fn search_const_string(&self, s: &str) -> Vec<ConstHit> {
        self.const_hits(self.const_strings.get(s))
    }

    fn const_hits(&self, lines: Option<&Vec<LineRef>>) -> Vec<ConstHit> {
        lines
            .map(|ls| {
                ls.iter()
                    .map(|&loc| {
                        let hit = self.hit(loc);
                        let lhs = hit.instr.kind.def_lhs().expect("const hit is a definition");
                        ConstHit {
                            containing: hit.containing,
                            loc,
                            lhs,
                        }
                    })
                    .collect()
            })
            .unwrap_or_default()
    }

    /// Postings statistics for `--dump-index`.
    pub fn dump(&self) -> serde_json::Value {
        let mut sizes: BTreeMap<&'static str, usize> = BTreeMap::new();
        sizes.insert("invocations", self.invocations.len());
        sizes.insert("invocations_by_name", self.invocations_by_name.len());
        sizes.insert("class_tokens", self.class_tokens.len());
        sizes.insert("const_classes", self.const_classes.len());
        sizes.insert("const_strings", self.const_strings.len());
        sizes.insert("field_gets", self.field_gets.len());
        sizes.insert("field_puts", self.field_puts.len());
        serde_json::json!({
            "stats": self.stats,
            "postings": sizes,
        })
    }
}

#[allow(clippy::too_many_arguments)]
fn index_expr(
    expr: &Expr,
    loc: LineRef,
    classes: &mut Vec<ClassName>,
    invocations: &mut HashMap<String, Vec<LineRef>>,
    invocations_by_name: &mut HashMap<String, Vec<LineRef>>,
    const_classes: &mut HashMap<ClassName, Vec<LineRef>>,
    const_strings: &mut HashMap<String, Vec<LineRef>>,
    field_gets: &mut HashMap<String, Vec<LineRef>>,
) {
    match expr {
        Expr::Const(ConstVal::Class(c)) => {
            const_classes.entry(c.clone()).or_default().push(loc);
            classes.push(c.clone());
        }
        Expr::Const(ConstVal::Str(s)) => {
            const_strings.entry(s.clone()).or_default().push(loc);
        }
        Expr::Const(_) | Expr::Param(_) | Expr::Phi(_) | Expr::Binop { .. } | Expr::ArrayGet { .. } => {}
        Expr::New(c) => classes.push(c.clone()),
        Expr::NewArray { elem, .. } => collect_desc_classes(elem, classes),
        Expr::Cast { ty, .. } => collect_desc_classes(ty, classes),
        Expr::Invoke(iv) => index_invoke(iv, loc, classes, invocations, invocations_by_name),
        Expr::FieldGet { field, .. } => {
            field_gets
                .entry(field.render_search())
                .or_default()
                .push(loc);
            classes.push(field.class.clone());
            collect_desc_classes(&field.desc, classes);
        }
        Expr::StaticGet(field) => {
            field_gets
                .entry(field.render_search())
                .or_default()
                .push(loc);
            classes.push(field.class.clone());
            collect_desc_classes(&field.desc, classes);
        }
    }
}

fn index_invoke(
    iv: &InvokeExpr,
    loc: LineRef,
    classes: &mut Vec<ClassName>,
    invocations: &mut HashMap<String, Vec<LineRef>>,
    invocations_by_name: &mut HashMap<String, Vec<LineRef>>,
) {
    invocations
        .entry(iv.callee.render_search())
        .or_default()
        .push(loc);
    invocations_by_name
        .entry(iv.callee.name.clone())
        .or_default()
        .push(loc);
    classes.push(iv.callee.class.clone());
    for p in &iv.callee.params {
        collect_desc_classes(p, classes);
    }
    collect_desc_classes(&iv.callee.ret, classes);
}

fn collect_desc_classes(d: &TypeDesc, out: &mut Vec<ClassName>) {
    if let Some(c) = d.base_class() {
        out.push(c.clone());
    }
}

/// Cached result of one search command.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CachedResult {
    Hits(Vec<CallHit>),
    Classes(BTreeSet<ClassName>),
    Methods(BTreeSet<MethodSig>),
    ConstHits(Vec<ConstHit>),
}

/// Command-level cache wrapped around the index; owned by one app analysis
/// and dropped afterward, so it is unbounded. Tracks lookup/hit statistics
/// and the number of underlying index scans actually executed.
pub struct SearchSession {
    index: Arc<SearchIndex>,
    cache: HashMap<SearchCommand, CachedResult>,
    stats: CacheStats,
    scans: u64,
}

impl SearchSession {
    pub fn new(index: Arc<SearchIndex>) -> Self {
        SearchSession {
            index,
            cache: HashMap::new(),
            stats: CacheStats::default(),
            scans: 0,
        }
    }

    pub fn index(&self) -> &SearchIndex {
        &self.index
    }

    pub fn stats(&self) -> CacheStats {
        self.stats
    }

    /// Underlying index scans executed so far (cache misses).
    pub fn scans(&self) -> u64 {
        self.scans
    }

    pub fn cached(&mut self, cmd: SearchCommand) -> CachedResult {
        self.stats.lookups += 1;
        if let Some(hit) = self.cache.get(&cmd) {
            self.stats.hits += 1;
            return hit.clone();
        }
        self.scans += 1;
        let result = match cmd.kind {
            CommandKind::InvocationOf => {
                if cmd.payload.starts_with('L') {
                    CachedResult::Hits(self.index.search_invocations(&cmd.payload))
                } else {
                    CachedResult::Hits(self.index.search_invocations_named(&cmd.payload))
                }
            }
            CommandKind::TokenInClass => {
                let class = ClassName::from_descriptor(&cmd.payload)
                    .expect("canonical TokenInClass payload");
                CachedResult::Classes(self.index.search_class_references(&class))
            }
            CommandKind::FieldAccess => {
                let (mode, sig) = cmd.payload.split_once(':').expect("canonical payload");
                let field = FieldRef::parse_search(sig).expect("canonical field payload");
                let mode = if mode == "get" { FieldMode::Get } else { FieldMode::Put };
                CachedResult::Methods(self.index.search_field_access(&field, mode))
            }
            CommandKind::ConstClass => {
                let class = ClassName::from_descriptor(&cmd.payload)
                    .expect("canonical ConstClass payload");
                CachedResult::ConstHits(self.index.search_const_class(&class))
            }
            CommandKind::ConstString => {
                CachedResult::ConstHits(self.index.search_const_string(&cmd.payload))
            }
        };
        self.cache.insert(cmd, result.clone());
        result
    }

    pub fn invocations(&mut self, sig_search_form: &str) -> Vec<CallHit> {
        match self.cached(SearchCommand::invocation(sig_search_form)) {
            CachedResult::Hits(h) => h,
            _ => unreachable!(),
        }
    }

    pub fn invocations_named(&mut self, name: &str) -> Vec<CallHit> {
        match self.cached(SearchCommand::invocation(name)) {
            CachedResult::Hits(h) => h,
            _ => unreachable!(),
        }
    }

    pub fn class_references(&mut self, class: &ClassName) -> BTreeSet<ClassName> {
        match self.cached(SearchCommand::token_in_class(class)) {
            CachedResult::Classes(c) => c,
            _ => unreachable!(),
        }
    }

    pub fn field_access(&mut self, field: &FieldRef, mode: FieldMode) -> BTreeSet<MethodSig> {
        match self.cached(SearchCommand::field_access(field, mode)) {
            CachedResult::Methods(m) => m,
            _ => unreachable!(),
        }
    }

    pub fn const_class_sites(&mut self, class: &ClassName) -> Vec<ConstHit> {
        match self.cached(SearchCommand::const_class(class)) {
            CachedResult::ConstHits(h) => h,
            _ => unreachable!(),
        }
    }

    pub fn const_string_sites(&mut self, s: &str) -> Vec<ConstHit> {
        match self.cached(SearchCommand::const_string(s)) {
            CachedResult::ConstHits(h) => h,
            _ => unreachable!(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sbc::parser::parse_app_from_sources;

    fn index_of(text: &str, manifest: &str) -> SearchIndex {
        let model = parse_app_from_sources(
            &[("app.sbc".to_string(), text.to_string())],
            manifest,
            &["java/".into(), "javax/".into(), "android/".into()],
        )
        .unwrap();
        SearchIndex::build(Arc::new(model))
    }

    const FIG3: &str = "\
.class public Lcom/connectsdk/service/netcast/NetcastHttpServer;
.method private start()V
  return-void
.end method
.class public Lcom/connectsdk/service/NetcastTVService$1;
.implements Ljava/lang/Runnable;
.method public run()V
  v0 = param 0
  v1 = new Lcom/connectsdk/service/netcast/NetcastHttpServer;
  invoke v1 Lcom/connectsdk/service/netcast/NetcastHttpServer;.<init>:()V
  invoke v1 Lcom/connectsdk/service/netcast/NetcastHttpServer;.start:()V
  return-void
.end method
";

    #[test]
    fn invocation_search_finds_fig3_caller() {
        let idx = index_of(FIG3, "");
        let hits =
            idx.search_invocations("Lcom/connectsdk/service/netcast/NetcastHttpServer;.start:()V");
        assert_eq!(hits.len(), 1);
        assert_eq!(
            hits[0].containing.render_search(),
            "Lcom/connectsdk/service/NetcastTVService$1;.run:()V"
        );
        // The hit's instruction, re-rendered, carries the payload as its
        // callee field.
        assert!(hits[0]
            .instr
            .kind
            .render()
            .contains("Lcom/connectsdk/service/netcast/NetcastHttpServer;.start:()V"));
        assert!(idx.search_invocations("La/B;.nothing:()V").is_empty());
    }

    #[test]
    fn every_line_resolves_to_its_method() {
        let idx = index_of(FIG3, "");
        let model = idx.model().clone();
        for method in model.methods() {
            for instr in &method.body {
                let loc = LineRef {
                    file: method.file,
                    line: instr.line,
                };
                assert_eq!(idx.method_at(loc), Some(&method.sig));
            }
        }
        // Lines outside any method resolve to nothing.
        assert_eq!(
            idx.method_at(LineRef {
                file: FileId(0),
                line: 1
            }),
            None
        );
    }

    #[test]
    fn class_reference_search_excludes_self() {
        let idx = index_of(FIG3, "");
        let refs = idx.search_class_references(&ClassName::from_dotted(
            "com.connectsdk.service.netcast.NetcastHttpServer",
        ));
        assert_eq!(
            refs.into_iter().collect::<Vec<_>>(),
            vec![ClassName::from_dotted("com.connectsdk.service.NetcastTVService$1")]
        );
        let none = idx.search_class_references(&ClassName::from_dotted("com.x.Unreferenced"));
        assert!(none.is_empty());
    }

    const FIELDS: &str = "\
.class Lcom/studiosol/palcomp3/MP3LocalServer;
.field static PORT:I
.method static constructor <clinit>()V
  v0 = const 8090
  sput v0 Lcom/studiosol/palcomp3/MP3LocalServer;.PORT:I
  return-void
.end method
.method static read()I
  v0 = sget Lcom/studiosol/palcomp3/MP3LocalServer;.PORT:I
  return v0
.end method
";

    #[test]
    fn field_access_modes() {
        let idx = index_of(FIELDS, "");
        let field = FieldRef::parse_search("Lcom/studiosol/palcomp3/MP3LocalServer;.PORT:I").unwrap();
        let puts = idx.search_field_access(&field, FieldMode::Put);
        assert_eq!(
            puts.iter().map(|m| m.render_search()).collect::<Vec<_>>(),
            vec!["Lcom/studiosol/palcomp3/MP3LocalServer;.<clinit>:()V"]
        );
        let gets = idx.search_field_access(&field, FieldMode::Get);
        assert_eq!(gets.len(), 1);
        let never = FieldRef::parse_search("Lcom/x/A;.nope:I").unwrap();
        assert!(idx.search_field_access(&never, FieldMode::Put).is_empty());
    }

    #[test]
    fn cache_identity_and_scan_counts() {
        let idx = Arc::new(index_of(FIG3, ""));
        let mut session = SearchSession::new(idx);
        let sig = "Lcom/connectsdk/service/netcast/NetcastHttpServer;.start:()V";
        let first = session.invocations(sig);
        let second = session.invocations(sig);
        assert_eq!(first, second);
        assert_eq!(session.scans(), 1);
        assert_eq!(session.stats().lookups, 2);
        assert_eq!(session.stats().hits, 1);

        // Two distinct commands: two scans, no hits.
        let mut s2 = SearchSession::new(SearchSession::new(Arc::new(index_of(FIG3, ""))).index);
        s2.invocations(sig);
        s2.invocations("La/B;.other:()V");
        assert_eq!(s2.scans(), 2);
        assert_eq!(s2.stats().hits, 0);
    }

    /// Completeness against a naive scan: every invocation hit list equals
    /// what a full walk over all instructions would produce.
    #[test]
    fn equals_brute_force_scan() {
        let idx = index_of(FIG3, "");
        let model = idx.model().clone();
        let mut sigs: BTreeSet<String> = BTreeSet::new();
        for m in model.methods() {
            for i in &m.body {
                if let Some(iv) = i.kind.invoke_expr() {
                    sigs.insert(iv.callee.render_search());
                }
            }
        }
        for sig in sigs {
            let mut brute: Vec<(FileId, u32)> = Vec::new();
            for m in model.methods() {
                for i in &m.body {
                    if let Some(iv) = i.kind.invoke_expr() {
                        if iv.callee.render_search() == sig {
                            brute.push((m.file, i.line));
                        }
                    }
                }
            }
            brute.sort();
            let got: Vec<(FileId, u32)> = idx
                .search_invocations(&sig)
                .iter()
                .map(|h| (h.loc.file, h.loc.line))
                .collect();
            assert_eq!(got, brute, "{sig}");
        }
    }
}
