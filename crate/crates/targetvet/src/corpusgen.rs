//! Deterministic generator of synthetic SBC apps with planted sinks and
//! machine-readable ground truth (reachability, caller chains, expected
//! parameter values). The same seed always produces byte-identical output.
//!
//! Each planted sink combines a linkage kind (how the sink's method is
//! reached from an entry point) with a constant-flow template (how the
//! tracked value is computed). Unreachable sinks are rooted in unregistered
//! components. Pad classes fill the class budget with entry-reachable but
//! sink-irrelevant code so whole-app analyzers have real work to do.

use crate::detect::{default_sink_specs, Predicate, SinkSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GenError {
    #[error("infeasible generator spec: {0}")]
    Infeasible(String),
    #[error("io error on {0}: {1}")]
    Io(String, #[source] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LinkageKind {
    Static,
    Private,
    Ctor,
    VirtualChild,
    Interface,
    Callback,
    Async,
    IccExplicit,
    IccImplicit,
    Clinit,
}

pub const ALL_LINKAGE_KINDS: [LinkageKind; 10] = [
    LinkageKind::Static,
    LinkageKind::Private,
    LinkageKind::Ctor,
    LinkageKind::VirtualChild,
    LinkageKind::Interface,
    LinkageKind::Callback,
    LinkageKind::Async,
    LinkageKind::IccExplicit,
    LinkageKind::IccImplicit,
    LinkageKind::Clinit,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FlowKind {
    DirectConst,
    Arith,
    TwoPathPhi,
    StaticRouted,
    Builder,
    FieldRouted,
}

pub const ALL_FLOW_KINDS: [FlowKind; 6] = [
    FlowKind::DirectConst,
    FlowKind::Arith,
    FlowKind::TwoPathPhi,
    FlowKind::StaticRouted,
    FlowKind::Builder,
    FlowKind::FieldRouted,
];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenSpec {
    pub seed: u64,
    /// Total class budget; pad classes fill whatever the sink templates do
    /// not use.
    pub classes: usize,
    /// Methods per pad class.
    pub methods_per_class: usize,
    pub linkage_mix: Vec<LinkageKind>,
    pub sinks: usize,
    pub unreachable_fraction: f64,
    pub flows: Vec<FlowKind>,
    /// When set, pad emission targets this exact app-wide method count
    /// instead of the class budget.
    #[serde(default)]
    pub total_methods: Option<usize>,
}

impl GenSpec {
    pub fn basic(seed: u64) -> GenSpec {
        GenSpec {
            seed,
            classes: 40,
            methods_per_class: 4,
            linkage_mix: ALL_LINKAGE_KINDS.to_vec(),
            sinks: 4,
            unreachable_fraction: 0.25,
            flows: ALL_FLOW_KINDS.to_vec(),
            total_methods: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SinkTruth {
    pub id: String,
    pub linkage: LinkageKind,
    pub flow: FlowKind,
    pub spec_id: String,
    /// Analysis-form signature of the sink's containing method.
    pub sink_method: String,
    pub reachable: bool,
    /// Expected constant values of the tracked parameter (rendered like the
    /// evaluator renders them).
    pub expected_values: Vec<String>,
    pub expected_status: String,
    /// Planted caller chain, entry first, sink method last (analysis form).
    pub chain: Vec<String>,
    /// For Clinit linkage: the class-reference witness chain.
    pub clinit_classes: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundTruth {
    pub seed: u64,
    pub classes: usize,
    pub methods: usize,
    pub instructions: usize,
    pub sinks: Vec<SinkTruth>,
}

#[derive(Debug, Clone)]
pub struct GeneratedApp {
    /// (file name, contents), sorted by name.
    pub files: Vec<(String, String)>,
    pub manifest: String,
    pub truth: GroundTruth,
}

impl GeneratedApp {
    pub fn write_to_dir(&self, dir: &Path) -> Result<(), GenError> {
        let io = |p: &Path, e: std::io::Error| GenError::Io(p.display().to_string(), e);
        std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
        for (name, text) in &self.files {
            let p = dir.join(name);
            std::fs::write(&p, text).map_err(|e| io(&p, e))?;
        }
        let mp = dir.join("manifest.txt");
        std::fs::write(&mp, &self.manifest).map_err(|e| io(&mp, e))?;
        let tp = dir.join("truth.json");
        let truth = serde_json::to_string_pretty(&self.truth).expect("truth serializes");
        std::fs::write(&tp, truth).map_err(|e| io(&tp, e))?;
        Ok(())
    }
}

/// Sink specs used by generated apps: the shipped crypto/SSL specs plus a
/// plain integer sink (an insecure-port style check) for integer flows.
pub fn gen_sink_specs() -> Vec<SinkSpec> {
    let mut specs = default_sink_specs();
    specs.push(SinkSpec {
        id: "net-telnet-port".to_string(),
        signature: "Lgen/api/NetSocket;.open:(I)V".to_string(),
        track_params: vec![0],
        track_receiver: false,
        predicate: Predicate::IntEquals { value: 23 },
        severity: "medium".to_string(),
    });
    specs
}

const CRYPTO_SINK: &str =
    "Ljavax/crypto/Cipher;.getInstance:(Ljava/lang/String;)Ljavax/crypto/Cipher;";
const NET_SINK: &str = "Lgen/api/NetSocket;.open:(I)V";
const SSL_SINK: &str = "Lorg/apache/http/conn/ssl/SSLSocketFactory;.setHostnameVerifier:(Lorg/apache/http/conn/ssl/X509HostnameVerifier;)V";
const ALLOW_ALL: &str = "Lorg/apache/http/conn/ssl/SSLSocketFactory;.ALLOW_ALL_HOSTNAME_VERIFIER:Lorg/apache/http/conn/ssl/X509HostnameVerifier;";
const BROWSER_OK: &str = "Lorg/apache/http/conn/ssl/SSLSocketFactory;.BROWSER_COMPATIBLE_HOSTNAME_VERIFIER:Lorg/apache/http/conn/ssl/X509HostnameVerifier;";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SinkApi {
    Crypto,
    Net,
    Ssl,
}

/// Fresh-register allocator for one method body.
struct Regs(u32);

impl Regs {
    fn next(&mut self) -> String {
        let r = format!("v{}", self.0);
        self.0 += 1;
        r
    }
}

struct MethodBuf {
    decl: String,
    body: Vec<String>,
}

struct ClassBuf {
    header: Vec<String>,
    methods: Vec<MethodBuf>,
}

impl ClassBuf {
    fn new(name: &str, mods: &str, super_class: Option<&str>, ifaces: &[&str]) -> ClassBuf {
        let mut header = Vec::new();
        if mods.is_empty() {
            header.push(format!(".class {name}"));
        } else {
            header.push(format!(".class {mods} {name}"));
        }
        if let Some(s) = super_class {
            header.push(format!(".super {s}"));
        }
        for i in ifaces {
            header.push(format!(".implements {i}"));
        }
        ClassBuf {
            header,
            methods: Vec::new(),
        }
    }

    fn field(&mut self, decl: &str) {
        self.header.push(format!(".field {decl}"));
    }

    fn method(&mut self, decl: &str, body: Vec<String>) {
        self.methods.push(MethodBuf {
            decl: decl.to_string(),
            body,
        });
    }

    fn render(&self, out: &mut String, methods: &mut usize, instrs: &mut usize) {
        for h in &self.header {
            out.push_str(h);
            out.push('\n');
        }
        for m in &self.methods {
            *methods += 1;
            let _ = writeln!(out, ".method {}", m.decl);
            for l in &m.body {
                *instrs += 1;
                let _ = writeln!(out, "  {l}");
            }
            out.push_str(".end method\n");
        }
    }
}

/// A generated constant flow: body lines computing the tracked value into
/// `out_reg`, any support classes, and the expected constant values.
struct FlowPlan {
    lines: Vec<String>,
    out_reg: String,
    support: Vec<ClassBuf>,
    expected: Vec<String>,
}

pub fn generate(spec: &GenSpec) -> Result<GeneratedApp, GenError> {
    if spec.sinks == 0 {
        return Err(GenError::Infeasible("sink count must be >= 1".into()));
    }
    if spec.linkage_mix.is_empty() {
        return Err(GenError::Infeasible("linkage mix must be non-empty".into()));
    }
    if spec.flows.is_empty() {
        return Err(GenError::Infeasible("flow template list must be non-empty".into()));
    }
    if spec
        .linkage_mix
        .iter()
        .any(|k| matches!(k, LinkageKind::IccExplicit | LinkageKind::IccImplicit))
        && spec.classes < 2
    {
        return Err(GenError::Infeasible(
            "ICC linkage needs a class budget of at least 2".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut gen = Gen {
        rng: &mut rng,
        classes: Vec::new(),
        manifest: vec!["activity Lgen/MainActivity; exported".to_string()],
        main_hooks: Vec::new(),
        main_regs: Regs(1), // v0 is the receiver
        unreg_hooks: Vec::new(),
        unreg_regs: Regs(1),
        truths: Vec::new(),
    };

    let unreachable_count =
        ((spec.sinks as f64) * spec.unreachable_fraction).round() as usize;
    for i in 0..spec.sinks {
        let linkage = spec.linkage_mix[i % spec.linkage_mix.len()];
        let flow = spec.flows[i % spec.flows.len()];
        let reachable = i >= unreachable_count;
        gen.plant_sink(i, linkage, flow, reachable);
    }

    // Assemble MainActivity and, when needed, the unregistered activity.
    let mut main = ClassBuf::new("Lgen/MainActivity;", "public", Some("Landroid/app/Activity;"), &[]);
    let mut main_body = vec!["v0 = param 0".to_string()];
    main_body.extend(gen.main_hooks.clone());

    // Pad sizing against the methods the sink templates actually emitted.
    let committed_methods: usize =
        gen.classes.iter().map(|c| c.methods.len()).sum::<usize>()
            + 1
            + usize::from(!gen.unreg_hooks.is_empty());
    let used_classes = gen.classes.len() + 1 + usize::from(!gen.unreg_hooks.is_empty());
    let mpc = spec.methods_per_class.max(1);
    let pad_methods_total = match spec.total_methods {
        Some(total) => {
            if total < committed_methods {
                return Err(GenError::Infeasible(format!(
                    "total_methods {total} below the {committed_methods} methods the sink templates emit"
                )));
            }
            total - committed_methods
        }
        None => spec.classes.saturating_sub(used_classes) * spec.methods_per_class,
    };
    if pad_methods_total > 0 {
        let pad_classes = pad_methods_total.div_ceil(mpc);
        main_body.push("invoke Lgen/pad/P0;.m0:()V".to_string());
        emit_pads(&mut gen.classes, pad_classes, pad_methods_total, mpc);
    }
    main_body.push("return-void".to_string());
    main.method("public onCreate()V", main_body);

    let mut all_classes = vec![main];
    if !gen.unreg_hooks.is_empty() {
        let mut unreg = ClassBuf::new(
            "Lgen/UnregActivity;",
            "public",
            Some("Landroid/app/Activity;"),
            &[],
        );
        let mut body = vec!["v0 = param 0".to_string()];
        body.extend(gen.unreg_hooks.clone());
        body.push("return-void".to_string());
        unreg.method("public onCreate()V", body);
        all_classes.push(unreg);
    }
    all_classes.append(&mut gen.classes);

    // Render: sink-related classes into app.sbc, pads into pads.sbc.
    let mut methods = 0usize;
    let mut instrs = 0usize;
    let mut app_text = String::new();
    let mut pad_text = String::new();
    let mut class_count = 0usize;
    for c in &all_classes {
        class_count += 1;
        let is_pad = c.header[0].contains("Lgen/pad/");
        let target = if is_pad { &mut pad_text } else { &mut app_text };
        c.render(target, &mut methods, &mut instrs);
    }

    let mut files = vec![("app.sbc".to_string(), app_text)];
    if !pad_text.is_empty() {
        files.push(("pads.sbc".to_string(), pad_text));
    }
    files.sort_by(|a, b| a.0.cmp(&b.0));

    let mut manifest = gen.manifest.join("\n");
    manifest.push('\n');

    Ok(GeneratedApp {
        files,
        manifest,
        truth: GroundTruth {
            seed: spec.seed,
            classes: class_count,
            methods,
            instructions: instrs,
            sinks: gen.truths,
        },
    })
}

fn emit_pads(classes: &mut Vec<ClassBuf>, pad_classes: usize, total_methods: usize, mpc: usize) {
    let mpc = mpc.max(1);
    let mut remaining = total_methods;
    for j in 0..pad_classes {
        let mut c = ClassBuf::new(&format!("Lgen/pad/P{j};"), "public", None, &[]);
        let here = remaining.min(mpc);
        for k in 0..here {
            let mut body = vec![
                format!("v0 = const {}", (j * 31 + k) % 97),
                format!("v1 = const {}", (j * 7 + k) % 13 + 1),
                "v2 = binop add v0 v1".to_string(),
                "v3 = binop mul v2 v1".to_string(),
            ];
            // Linear chain through all pad methods, with occasional fanout
            // so the whole-app graph has breadth.
            if k + 1 < here {
                body.push(format!("invoke Lgen/pad/P{j};.m{}:()V", k + 1));
            } else if j + 1 < pad_classes {
                body.push(format!("invoke Lgen/pad/P{};.m0:()V", j + 1));
            }
            if k % 3 == 2 && pad_classes > 1 {
                let t = (j * 13 + k * 5 + 1) % pad_classes;
                body.push(format!("invoke Lgen/pad/P{t};.m0:()V"));
            }
            body.push("return-void".to_string());
            c.method(&format!("public static m{k}()V"), body);
        }
        remaining -= here;
        classes.push(c);
        if remaining == 0 {
            break;
        }
    }
}

struct Gen<'r> {
    rng: &'r mut ChaCha8Rng,
    classes: Vec<ClassBuf>,
    manifest: Vec<String>,
    main_hooks: Vec<String>,
    main_regs: Regs,
    unreg_hooks: Vec<String>,
    unreg_regs: Regs,
    truths: Vec<SinkTruth>,
}

impl<'r> Gen<'r> {
    fn plant_sink(&mut self, i: usize, linkage: LinkageKind, flow: FlowKind, reachable: bool) {
        let ns = format!("gen/s{i}");
        let insecure = self.rng.gen_bool(0.5);
        let api = match flow {
            FlowKind::Builder | FlowKind::TwoPathPhi => {
                if self.rng.gen_bool(0.5) {
                    SinkApi::Crypto
                } else {
                    SinkApi::Net
                }
            }
            FlowKind::DirectConst => match self.rng.gen_range(0..3) {
                0 => SinkApi::Crypto,
                1 => SinkApi::Net,
                _ => SinkApi::Ssl,
            },
            _ => {
                if self.rng.gen_bool(0.5) {
                    SinkApi::Crypto
                } else {
                    SinkApi::Net
                }
            }
        };
        // ICC carries the value through intent extras; keep it to the two
        // extra-typed APIs.
        let api = if matches!(linkage, LinkageKind::IccExplicit | LinkageKind::IccImplicit)
            && api == SinkApi::Ssl
        {
            SinkApi::Crypto
        } else {
            api
        };

        let entry_class = if reachable {
            "Lgen/MainActivity;"
        } else {
            "Lgen/UnregActivity;"
        };
        let entry_method = format!(
            "<{}: void onCreate()>",
            if reachable { "gen.MainActivity" } else { "gen.UnregActivity" }
        );

        let (spec_id, expected, mut truth_chain, clinit_classes, sink_method) = match linkage {
            LinkageKind::Static => {
                let cls = format!("L{ns}/Impl;");
                let mut c = ClassBuf::new(&cls, "public", None, &[]);
                let mut regs = Regs(0);
                let plan = self.flow_plan(&ns, flow, api, insecure, &mut regs, false);
                let mut body = plan.lines;
                body.extend(self.sink_lines(api, &plan.out_reg, &mut regs));
                body.push("return-void".to_string());
                c.method(&format!("public static run{i}()V"), body);
                self.classes.push(c);
                self.classes.extend(plan.support);
                self.hook(reachable, format!("invoke {cls}.run{i}:()V"));
                (
                    spec_for(api),
                    plan.expected,
                    vec![entry_method.clone(), analysis_void(&cls, &format!("run{i}"))],
                    Vec::new(),
                    analysis_void(&cls, &format!("run{i}")),
                )
            }
            LinkageKind::Private => {
                let cls = format!("L{ns}/Impl;");
                let mut c = ClassBuf::new(&cls, "public", None, &[]);
                c.method("public constructor <init>()V", vec!["return-void".to_string()]);
                c.method(
                    "public static go()V",
                    vec![
                        format!("v0 = new {cls}"),
                        format!("invoke v0 {cls}.<init>:()V"),
                        format!("invoke v0 {cls}.work:()V"),
                        "return-void".to_string(),
                    ],
                );
                let mut regs = Regs(1);
                let plan = self.flow_plan(&ns, flow, api, insecure, &mut regs, true);
                let mut body = vec!["v0 = param 0".to_string()];
                body.extend(plan.lines);
                body.extend(self.sink_lines(api, &plan.out_reg, &mut regs));
                body.push("return-void".to_string());
                c.method("private work()V", body);
                self.classes.push(c);
                self.classes.extend(plan.support);
                self.hook(reachable, format!("invoke {cls}.go:()V"));
                (
                    spec_for(api),
                    plan.expected,
                    vec![
                        entry_method.clone(),
                        analysis_void(&cls, "go"),
                        analysis_void(&cls, "work"),
                    ],
                    Vec::new(),
                    analysis_void(&cls, "work"),
                )
            }
            LinkageKind::Ctor => {
                let cls = format!("L{ns}/Impl;");
                let mut c = ClassBuf::new(&cls, "public", None, &[]);
                let mut regs = Regs(1);
                let plan = self.flow_plan(&ns, flow, api, insecure, &mut regs, true);
                let mut body = vec!["v0 = param 0".to_string()];
                body.extend(plan.lines);
                body.extend(self.sink_lines(api, &plan.out_reg, &mut regs));
                body.push("return-void".to_string());
                c.method("public constructor <init>()V", body);
                self.classes.push(c);
                self.classes.extend(plan.support);
                let (r1, hook) = self.hook_regs(reachable);
                let lines = vec![format!("{r1} = new {cls}"), format!("invoke {r1} {cls}.<init>:()V")];
                hook.extend(lines);
                (
                    spec_for(api),
                    plan.expected,
                    vec![entry_method.clone(), analysis_void(&cls, "<init>")],
                    Vec::new(),
                    analysis_void(&cls, "<init>"),
                )
            }
            LinkageKind::VirtualChild => {
                let base = format!("L{ns}/Base;");
                let child = format!("L{ns}/Child;");
                let mut b = ClassBuf::new(&base, "public", None, &[]);
                b.method("public constructor <init>()V", vec!["return-void".to_string()]);
                let mut regs = Regs(1);
                let plan = self.flow_plan(&ns, flow, api, insecure, &mut regs, true);
                let mut body = vec!["v0 = param 0".to_string()];
                body.extend(plan.lines);
                body.extend(self.sink_lines(api, &plan.out_reg, &mut regs));
                body.push("return-void".to_string());
                b.method(&format!("public m{i}()V"), body);
                self.classes.push(b);
                let mut ch = ClassBuf::new(&child, "public", Some(&base), &[]);
                // Child constructors call through to the super constructor,
                // as compiled bytecode always does.
                ch.method(
                    "public constructor <init>()V",
                    vec![
                        "v0 = param 0".to_string(),
                        format!("invoke v0 {base}.<init>:()V"),
                        "return-void".to_string(),
                    ],
                );
                self.classes.push(ch);
                self.classes.extend(plan.support);
                let (r1, hook) = self.hook_regs(reachable);
                hook.push(format!("{r1} = new {child}"));
                hook.push(format!("invoke {r1} {child}.<init>:()V"));
                hook.push(format!("invoke {r1} {child}.m{i}:()V"));
                (
                    spec_for(api),
                    plan.expected,
                    vec![entry_method.clone(), analysis_void(&base, &format!("m{i}"))],
                    Vec::new(),
                    analysis_void(&base, &format!("m{i}")),
                )
            }
            LinkageKind::Interface => {
                let w = format!("L{ns}/W;");
                let hand = format!("L{ns}/Hand;");
                let mut wc = ClassBuf::new(&w, "public", None, &["Ljava/lang/Runnable;"]);
                wc.method("public constructor <init>()V", vec!["return-void".to_string()]);
                let mut regs = Regs(1);
                let plan = self.flow_plan(&ns, flow, api, insecure, &mut regs, true);
                let mut body = vec!["v0 = param 0".to_string()];
                body.extend(plan.lines);
                body.extend(self.sink_lines(api, &plan.out_reg, &mut regs));
                body.push("return-void".to_string());
                wc.method("public run()V", body);
                self.classes.push(wc);
                let mut hc = ClassBuf::new(&hand, "public", None, &[]);
                hc.method(
                    "public static hand(Ljava/lang/Runnable;)V",
                    vec![
                        "v0 = param 0".to_string(),
                        "v1 = invoke Ljava/util/concurrent/Executors;.newSingleThreadExecutor:()Ljava/util/concurrent/Executor;".to_string(),
                        "invoke v1 Ljava/util/concurrent/Executor;.execute:(Ljava/lang/Runnable;)V v0".to_string(),
                        "return-void".to_string(),
                    ],
                );
                self.classes.push(hc);
                self.classes.extend(plan.support);
                let (r1, hook) = self.hook_regs(reachable);
                hook.push(format!("{r1} = new {w}"));
                hook.push(format!("invoke {r1} {w}.<init>:()V"));
                hook.push(format!("invoke {hand}.hand:(Ljava/lang/Runnable;)V {r1}"));
                (
                    spec_for(api),
                    plan.expected,
                    vec![
                        entry_method.clone(),
                        format!(
                            "<{}: void hand(java.lang.Runnable)>",
                            hand.trim_start_matches('L').trim_end_matches(';').replace('/', ".")
                        ),
                        analysis_void(&w, "run"),
                    ],
                    Vec::new(),
                    analysis_void(&w, "run"),
                )
            }
            LinkageKind::Callback => {
                let w = format!("L{ns}/Click;");
                let mut wc = ClassBuf::new(&w, "public", None, &["Landroid/view/View$OnClickListener;"]);
                wc.method("public constructor <init>()V", vec!["return-void".to_string()]);
                let mut regs = Regs(2);
                let plan = self.flow_plan(&ns, flow, api, insecure, &mut regs, true);
                let mut body = vec!["v0 = param 0".to_string(), "v1 = param 1".to_string()];
                body.extend(plan.lines);
                body.extend(self.sink_lines(api, &plan.out_reg, &mut regs));
                body.push("return-void".to_string());
                wc.method("public onClick(Landroid/view/View;)V", body);
                self.classes.push(wc);
                self.classes.extend(plan.support);
                let (r1, hook) = self.hook_regs(reachable);
                hook.push(format!("{r1} = new {w}"));
                hook.push(format!("invoke {r1} {w}.<init>:()V"));
                let r2 = if reachable {
                    self.main_regs.next()
                } else {
                    self.unreg_regs.next()
                };
                let hook = self.hook_vec(reachable);
                hook.push(format!("{r2} = invoke Lgen/api/Ui;.button:()Landroid/view/View;"));
                hook.push(format!(
                    "invoke {r2} Landroid/view/View;.setOnClickListener:(Landroid/view/View$OnClickListener;)V {r1}"
                ));
                (
                    spec_for(api),
                    plan.expected,
                    vec![
                        entry_method.clone(),
                        format!(
                            "<{}: void onClick(android.view.View)>",
                            w.trim_start_matches('L').trim_end_matches(';').replace('/', ".")
                        ),
                    ],
                    Vec::new(),
                    format!(
                        "<{}: void onClick(android.view.View)>",
                        w.trim_start_matches('L').trim_end_matches(';').replace('/', ".")
                    ),
                )
            }
            LinkageKind::Async => {
                let t = format!("L{ns}/Task;");
                let mut tc = ClassBuf::new(&t, "public", Some("Landroid/os/AsyncTask;"), &[]);
                tc.method("public constructor <init>()V", vec!["return-void".to_string()]);
                let mut regs = Regs(1);
                let plan = self.flow_plan(&ns, flow, api, insecure, &mut regs, true);
                let mut body = vec!["v0 = param 0".to_string()];
                body.extend(plan.lines);
                body.extend(self.sink_lines(api, &plan.out_reg, &mut regs));
                body.push("return-void".to_string());
                tc.method("public doInBackground()V", body);
                self.classes.push(tc);
                self.classes.extend(plan.support);
                let (r1, hook) = self.hook_regs(reachable);
                hook.push(format!("{r1} = new {t}"));
                hook.push(format!("invoke {r1} {t}.<init>:()V"));
                hook.push(format!("invoke {r1} Landroid/os/AsyncTask;.execute:()V"));
                (
                    spec_for(api),
                    plan.expected,
                    vec![entry_method.clone(), analysis_void(&t, "doInBackground")],
                    Vec::new(),
                    analysis_void(&t, "doInBackground"),
                )
            }
            LinkageKind::IccExplicit | LinkageKind::IccImplicit => {
                let svc = format!("L{ns}/Svc;");
                let implicit = linkage == LinkageKind::IccImplicit;
                let action = format!("gen.s{i}.GO");
                if reachable {
                    if implicit {
                        self.manifest.push(format!("service {svc} action={action}"));
                    } else {
                        self.manifest.push(format!("service {svc}"));
                    }
                }
                let key = format!("k{i}");
                let (value_lines, expected, extra_desc, get_call) = match api {
                    SinkApi::Net => {
                        let v = if insecure { 23 } else { 7000 + (i as i64) };
                        (
                            format!("const {v}"),
                            vec![v.to_string()],
                            "I",
                            "getIntExtra:(Ljava/lang/String;)I",
                        )
                    }
                    _ => {
                        let s = if insecure {
                            "AES/ECB/PKCS5Padding"
                        } else {
                            "AES/GCM/NoPadding"
                        };
                        (
                            format!("const \"{s}\""),
                            vec![format!("\"{s}\"")],
                            "Ljava/lang/String;",
                            "getStringExtra:(Ljava/lang/String;)Ljava/lang/String;",
                        )
                    }
                };

                // Receiver side: read the extra and feed the sink.
                let mut sc = ClassBuf::new(&svc, "public", Some("Landroid/app/Service;"), &[]);
                let mut regs = Regs(4);
                let mut body = vec![
                    "v0 = param 0".to_string(),
                    "v1 = param 1".to_string(),
                    format!("v2 = const \"{key}\""),
                    format!("v3 = invoke v1 Landroid/content/Intent;.{get_call} v2"),
                ];
                body.extend(self.sink_lines(api, "v3", &mut regs));
                let rr = regs.next();
                body.push(format!("{rr} = const 0"));
                body.push(format!("return {rr}"));
                sc.method("public onStartCommand(Landroid/content/Intent;)I", body);
                self.classes.push(sc);

                // Sender side, always rooted in the registered activity.
                let intent = self.main_regs.next();
                let target = self.main_regs.next();
                let kreg = self.main_regs.next();
                let vreg = self.main_regs.next();
                let hook = &mut self.main_hooks;
                hook.push(format!("{intent} = new Landroid/content/Intent;"));
                hook.push(format!("invoke {intent} Landroid/content/Intent;.<init>:()V"));
                if implicit {
                    hook.push(format!("{target} = const \"{action}\""));
                    hook.push(format!(
                        "invoke {intent} Landroid/content/Intent;.setAction:(Ljava/lang/String;)V {target}"
                    ));
                } else {
                    hook.push(format!("{target} = const class {svc}"));
                    hook.push(format!(
                        "invoke {intent} Landroid/content/Intent;.setClass:(Ljava/lang/Class;)V {target}"
                    ));
                }
                hook.push(format!("{kreg} = const \"{key}\""));
                hook.push(format!("{vreg} = {value_lines}"));
                hook.push(format!(
                    "invoke {intent} Landroid/content/Intent;.putExtra:(Ljava/lang/String;{extra_desc})V {kreg} {vreg}"
                ));
                hook.push(format!(
                    "invoke v0 Landroid/app/Activity;.startService:(Landroid/content/Intent;)V {intent}"
                ));

                let handler = format!(
                    "<{}: int onStartCommand(android.content.Intent)>",
                    svc.trim_start_matches('L').trim_end_matches(';').replace('/', ".")
                );
                (
                    spec_for(api),
                    expected,
                    vec!["<gen.MainActivity: void onCreate()>".to_string(), handler.clone()],
                    Vec::new(),
                    handler,
                )
            }
            LinkageKind::Clinit => {
                let k = format!("L{ns}/K;");
                let mut kc = ClassBuf::new(&k, "public", None, &[]);
                kc.field("static F:I");
                let mut regs = Regs(0);
                let plan = self.flow_plan(&ns, flow, api, insecure, &mut regs, false);
                let mut body = plan.lines;
                body.extend(self.sink_lines(api, &plan.out_reg, &mut regs));
                let one = regs.next();
                body.push(format!("{one} = const 1"));
                body.push(format!("sput {one} {k}.F:I"));
                body.push("return-void".to_string());
                kc.method("static constructor <clinit>()V", body);
                self.classes.push(kc);
                self.classes.extend(plan.support);

                // Reference chain: K <- R1 <- ... <- entry activity.
                let depth = 1 + (i % 2);
                let mut prev = k.clone();
                let mut chain_classes = vec![k.clone()];
                for d in 1..=depth {
                    let r = format!("L{ns}/R{d};");
                    let mut rc = ClassBuf::new(&r, "public", None, &[]);
                    let body = if d == 1 {
                        vec![
                            format!("v0 = sget {prev}.F:I"),
                            "return-void".to_string(),
                        ]
                    } else {
                        vec![
                            format!("invoke {prev}.touch:()V"),
                            "return-void".to_string(),
                        ]
                    };
                    rc.method("public static touch()V", body);
                    self.classes.push(rc);
                    chain_classes.push(r.clone());
                    prev = r;
                }
                self.hook(reachable, format!("invoke {prev}.touch:()V"));
                chain_classes.push(entry_class.to_string());

                (
                    spec_for(api),
                    plan.expected,
                    vec![analysis_void(&k, "<clinit>")],
                    chain_classes,
                    analysis_void(&k, "<clinit>"),
                )
            }
        };

        if !reachable {
            truth_chain = Vec::new();
        }
        self.truths.push(SinkTruth {
            id: format!("s{i}"),
            linkage,
            flow,
            spec_id: spec_id.to_string(),
            sink_method,
            reachable,
            expected_values: expected,
            expected_status: if !reachable {
                "Unreachable".to_string()
            } else if insecure {
                "Vulnerable".to_string()
            } else {
                "Safe".to_string()
            },
            chain: truth_chain,
            clinit_classes: clinit_classes.iter().map(|c| c.to_string()).collect(),
        });
    }

    fn hook(&mut self, reachable: bool, line: String) {
        self.hook_vec(reachable).push(line);
    }

    fn hook_vec(&mut self, reachable: bool) -> &mut Vec<String> {
        if reachable {
            &mut self.main_hooks
        } else {
            &mut self.unreg_hooks
        }
    }

    fn hook_regs(&mut self, reachable: bool) -> (String, &mut Vec<String>) {
        let r = if reachable {
            self.main_regs.next()
        } else {
            self.unreg_regs.next()
        };
        (r, self.hook_vec(reachable))
    }

    /// Sink invocation lines consuming `value_reg`.
    fn sink_lines(&mut self, api: SinkApi, value_reg: &str, regs: &mut Regs) -> Vec<String> {
        match api {
            SinkApi::Crypto => {
                let out = regs.next();
                vec![format!("{out} = invoke {CRYPTO_SINK} {value_reg}")]
            }
            SinkApi::Net => vec![format!("invoke {NET_SINK} {value_reg}")],
            SinkApi::Ssl => {
                let f = regs.next();
                vec![
                    format!(
                        "{f} = invoke Lorg/apache/http/conn/ssl/SSLSocketFactory;.getSocketFactory:()Lorg/apache/http/conn/ssl/SSLSocketFactory;"
                    ),
                    format!("invoke {f} {SSL_SINK} {value_reg}"),
                ]
            }
        }
    }

    /// Emit the flow template computing the tracked value. `instance`
    /// reports whether v0 is already bound to the receiver.
    fn flow_plan(
        &mut self,
        ns: &str,
        flow: FlowKind,
        api: SinkApi,
        insecure: bool,
        regs: &mut Regs,
        _instance: bool,
    ) -> FlowPlan {
        match api {
            SinkApi::Ssl => {
                let r = regs.next();
                let field = if insecure { ALLOW_ALL } else { BROWSER_OK };
                FlowPlan {
                    lines: vec![format!("{r} = sget {field}")],
                    out_reg: r,
                    support: Vec::new(),
                    expected: vec![field.to_string()],
                }
            }
            SinkApi::Crypto => self.string_flow(ns, flow, insecure, regs),
            SinkApi::Net => self.int_flow(ns, flow, insecure, regs),
        }
    }

    fn string_flow(&mut self, ns: &str, flow: FlowKind, insecure: bool, regs: &mut Regs) -> FlowPlan {
        let full = if insecure {
            "AES/ECB/PKCS5Padding".to_string()
        } else {
            ["AES/GCM/NoPadding", "AES/CBC/PKCS5Padding"][self.rng.gen_range(0..2)].to_string()
        };
        match flow {
            FlowKind::DirectConst => {
                let r = regs.next();
                FlowPlan {
                    lines: vec![format!("{r} = const \"{full}\"")],
                    out_reg: r,
                    support: Vec::new(),
                    expected: vec![format!("\"{full}\"")],
                }
            }
            FlowKind::Arith => {
                let cut = full.find('/').map(|p| p + 1).unwrap_or(1);
                let (a, b) = full.split_at(cut);
                let (r1, r2, r3) = (regs.next(), regs.next(), regs.next());
                FlowPlan {
                    lines: vec![
                        format!("{r1} = const \"{a}\""),
                        format!("{r2} = const \"{b}\""),
                        format!("{r3} = binop concat {r1} {r2}"),
                    ],
                    out_reg: r3,
                    support: Vec::new(),
                    expected: vec![format!("\"{full}\"")],
                }
            }
            FlowKind::TwoPathPhi => {
                let other = if insecure {
                    "AES/GCM/NoPadding".to_string()
                } else {
                    "AES/CBC/PKCS5Padding".to_string()
                };
                let (c, a, b, p) = (regs.next(), regs.next(), regs.next(), regs.next());
                let l1 = format!("B{}", self.rng.gen_range(0..1000));
                let l2 = format!("E{}", self.rng.gen_range(0..1000));
                let mut exp = vec![format!("\"{full}\""), format!("\"{other}\"")];
                exp.sort();
                FlowPlan {
                    lines: vec![
                        format!("{c} = const 1"),
                        format!("if {c} goto {l1}"),
                        format!("{a} = const \"{other}\""),
                        format!("goto {l2}"),
                        format!("label {l1}"),
                        format!("{b} = const \"{full}\""),
                        format!("label {l2}"),
                        format!("{p} = phi {a} {b}"),
                    ],
                    out_reg: p,
                    support: Vec::new(),
                    expected: exp,
                }
            }
            FlowKind::StaticRouted => {
                let cut = full.rfind('/').unwrap_or(full.len() - 1);
                let (head, tail) = full.split_at(cut);
                let holder = format!("L{ns}/Cfg;");
                let mut hc = ClassBuf::new(&holder, "public", None, &[]);
                hc.field("static MODE:Ljava/lang/String;");
                hc.method(
                    "static constructor <clinit>()V",
                    vec![
                        format!("v0 = const \"{head}\""),
                        format!("sput v0 {holder}.MODE:Ljava/lang/String;"),
                        "return-void".to_string(),
                    ],
                );
                let (r1, r2, r3) = (regs.next(), regs.next(), regs.next());
                FlowPlan {
                    lines: vec![
                        format!("{r1} = sget {holder}.MODE:Ljava/lang/String;"),
                        format!("{r2} = const \"{tail}\""),
                        format!("{r3} = binop concat {r1} {r2}"),
                    ],
                    out_reg: r3,
                    support: vec![hc],
                    expected: vec![format!("\"{full}\"")],
                }
            }
            FlowKind::Builder => {
                let cut = full.find('/').map(|p| p + 1).unwrap_or(1);
                let (a, b) = full.split_at(cut);
                let (sb, r1, r2, out) = (regs.next(), regs.next(), regs.next(), regs.next());
                FlowPlan {
                    lines: vec![
                        format!("{sb} = new Ljava/lang/StringBuilder;"),
                        format!("invoke {sb} Ljava/lang/StringBuilder;.<init>:()V"),
                        format!("{r1} = const \"{a}\""),
                        format!("invoke {sb} Ljava/lang/StringBuilder;.append:(Ljava/lang/String;)Ljava/lang/StringBuilder; {r1}"),
                        format!("{r2} = const \"{b}\""),
                        format!("invoke {sb} Ljava/lang/StringBuilder;.append:(Ljava/lang/String;)Ljava/lang/StringBuilder; {r2}"),
                        format!("{out} = invoke {sb} Ljava/lang/StringBuilder;.toString:()Ljava/lang/String;"),
                    ],
                    out_reg: out,
                    support: Vec::new(),
                    expected: vec![format!("\"{full}\"")],
                }
            }
            FlowKind::FieldRouted => {
                let holder = format!("L{ns}/Holder;");
                let mut hc = ClassBuf::new(&holder, "public", None, &[]);
                hc.field("mode:Ljava/lang/String;");
                hc.method(
                    "public constructor <init>(Ljava/lang/String;)V",
                    vec![
                        "v0 = param 0".to_string(),
                        "v1 = param 1".to_string(),
                        format!("iput v1 v0 {holder}.mode:Ljava/lang/String;"),
                        "return-void".to_string(),
                    ],
                );
                let (r1, r2, r3) = (regs.next(), regs.next(), regs.next());
                FlowPlan {
                    lines: vec![
                        format!("{r1} = const \"{full}\""),
                        format!("{r2} = new {holder}"),
                        format!("invoke {r2} {holder}.<init>:(Ljava/lang/String;)V {r1}"),
                        format!("{r3} = iget {r2} {holder}.mode:Ljava/lang/String;"),
                    ],
                    out_reg: r3,
                    support: vec![hc],
                    expected: vec![format!("\"{full}\"")],
                }
            }
        }
    }

    fn int_flow(&mut self, ns: &str, flow: FlowKind, insecure: bool, regs: &mut Regs) -> FlowPlan {
        let target: i64 = if insecure {
            23
        } else {
            1024 + self.rng.gen_range(0..8000)
        };
        match flow {
            FlowKind::DirectConst => {
                let r = regs.next();
                FlowPlan {
                    lines: vec![format!("{r} = const {target}")],
                    out_reg: r,
                    support: Vec::new(),
                    expected: vec![target.to_string()],
                }
            }
            FlowKind::Arith => {
                let d = self.rng.gen_range(1..100);
                let (r1, r2, r3) = (regs.next(), regs.next(), regs.next());
                FlowPlan {
                    lines: vec![
                        format!("{r1} = const {}", target - d),
                        format!("{r2} = const {d}"),
                        format!("{r3} = binop add {r1} {r2}"),
                    ],
                    out_reg: r3,
                    support: Vec::new(),
                    expected: vec![target.to_string()],
                }
            }
            FlowKind::TwoPathPhi => {
                let other = target + 1 + self.rng.gen_range(0..50);
                let (c, a, b, p) = (regs.next(), regs.next(), regs.next(), regs.next());
                let l1 = format!("B{}", self.rng.gen_range(0..1000));
                let l2 = format!("E{}", self.rng.gen_range(0..1000));
                let mut exp = vec![target, other];
                exp.sort_unstable();
                FlowPlan {
                    lines: vec![
                        format!("{c} = const 0"),
                        format!("if {c} goto {l1}"),
                        format!("{a} = const {target}"),
                        format!("goto {l2}"),
                        format!("label {l1}"),
                        format!("{b} = const {other}"),
                        format!("label {l2}"),
                        format!("{p} = phi {a} {b}"),
                    ],
                    out_reg: p,
                    support: Vec::new(),
                    expected: exp.iter().map(|v| v.to_string()).collect(),
                }
            }
            FlowKind::StaticRouted => {
                let d = self.rng.gen_range(1..50);
                let holder = format!("L{ns}/Port;");
                let mut hc = ClassBuf::new(&holder, "public", None, &[]);
                hc.field("static BASE:I");
                hc.method(
                    "static constructor <clinit>()V",
                    vec![
                        format!("v0 = const {}", target - d),
                        format!("sput v0 {holder}.BASE:I"),
                        "return-void".to_string(),
                    ],
                );
                let (r1, r2, r3) = (regs.next(), regs.next(), regs.next());
                FlowPlan {
                    lines: vec![
                        format!("{r1} = sget {holder}.BASE:I"),
                        format!("{r2} = const {d}"),
                        format!("{r3} = binop add {r1} {r2}"),
                    ],
                    out_reg: r3,
                    support: vec![hc],
                    expected: vec![target.to_string()],
                }
            }
            FlowKind::Builder => {
                let s = target.to_string();
                let cut = 1.min(s.len() - 1).max(1);
                let (a, b) = s.split_at(cut);
                let (sb, r1, r2, st, out) =
                    (regs.next(), regs.next(), regs.next(), regs.next(), regs.next());
                FlowPlan {
                    lines: vec![
                        format!("{sb} = new Ljava/lang/StringBuilder;"),
                        format!("invoke {sb} Ljava/lang/StringBuilder;.<init>:()V"),
                        format!("{r1} = const \"{a}\""),
                        format!("invoke {sb} Ljava/lang/StringBuilder;.append:(Ljava/lang/String;)Ljava/lang/StringBuilder; {r1}"),
                        format!("{r2} = const \"{b}\""),
                        format!("invoke {sb} Ljava/lang/StringBuilder;.append:(Ljava/lang/String;)Ljava/lang/StringBuilder; {r2}"),
                        format!("{st} = invoke {sb} Ljava/lang/StringBuilder;.toString:()Ljava/lang/String;"),
                        format!("{out} = invoke Ljava/lang/Integer;.parseInt:(Ljava/lang/String;)I {st}"),
                    ],
                    out_reg: out,
                    support: Vec::new(),
                    expected: vec![target.to_string()],
                }
            }
            FlowKind::FieldRouted => {
                let holder = format!("L{ns}/PortHolder;");
                let mut hc = ClassBuf::new(&holder, "public", None, &[]);
                hc.field("port:I");
                hc.method(
                    "public constructor <init>(I)V",
                    vec![
                        "v0 = param 0".to_string(),
                        "v1 = param 1".to_string(),
                        format!("iput v1 v0 {holder}.port:I"),
                        "return-void".to_string(),
                    ],
                );
                let (r1, r2, r3) = (regs.next(), regs.next(), regs.next());
                FlowPlan {
                    lines: vec![
                        format!("{r1} = const {target}"),
                        format!("{r2} = new {holder}"),
                        format!("invoke {r2} {holder}.<init>:(I)V {r1}"),
                        format!("{r3} = iget {r2} {holder}.port:I"),
                    ],
                    out_reg: r3,
                    support: vec![hc],
                    expected: vec![target.to_string()],
                }
            }
        }
    }
}

fn spec_for(api: SinkApi) -> &'static str {
    match api {
        SinkApi::Crypto => "crypto-ecb",
        SinkApi::Net => "net-telnet-port",
        SinkApi::Ssl => "ssl-allow-all-verifier",
    }
}

fn analysis_void(class_desc: &str, method: &str) -> String {
    let dotted = class_desc
        .trim_start_matches('L')
        .trim_end_matches(';')
        .replace('/', ".");
    format!("<{dotted}: void {method}()>")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sbc::parser::parse_app_from_sources;

    #[test]
    fn same_seed_is_byte_identical() {
        let spec = GenSpec::basic(7);
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        assert_eq!(a.files, b.files);
        assert_eq!(a.manifest, b.manifest);
        assert_eq!(
            serde_json::to_string(&a.truth).unwrap(),
            serde_json::to_string(&b.truth).unwrap()
        );
        // Different seeds differ.
        let c = generate(&GenSpec::basic(8)).unwrap();
        assert_ne!(a.files, c.files);
    }

    #[test]
    fn emitted_counts_match_parsed_model() {
        for seed in [1, 2, 3] {
            let app = generate(&GenSpec::basic(seed)).unwrap();
            let model = parse_app_from_sources(
                &app.files,
                &app.manifest,
                &["java/".into(), "javax/".into(), "android/".into()],
            )
            .unwrap();
            assert_eq!(model.classes.len(), app.truth.classes, "seed {seed}");
            assert_eq!(model.method_count(), app.truth.methods, "seed {seed}");
            assert_eq!(
                model.instruction_count(),
                app.truth.instructions,
                "seed {seed}"
            );
        }
    }

    #[test]
    fn exact_method_total_honored() {
        let mut spec = GenSpec::basic(5);
        spec.total_methods = Some(400);
        let app = generate(&spec).unwrap();
        assert_eq!(app.truth.methods, 400);
    }

    #[test]
    fn infeasible_specs_rejected() {
        let mut s = GenSpec::basic(1);
        s.sinks = 0;
        assert!(matches!(generate(&s), Err(GenError::Infeasible(_))));
        let mut s = GenSpec::basic(1);
        s.linkage_mix.clear();
        assert!(matches!(generate(&s), Err(GenError::Infeasible(_))));
        let mut s = GenSpec::basic(1);
        s.linkage_mix = vec![LinkageKind::IccExplicit];
        s.classes = 1;
        assert!(matches!(generate(&s), Err(GenError::Infeasible(_))));
    }

    #[test]
    fn all_unreachable_fraction() {
        let mut spec = GenSpec::basic(11);
        spec.unreachable_fraction = 1.0;
        let app = generate(&spec).unwrap();
        assert!(app.truth.sinks.iter().all(|s| !s.reachable));
        assert!(app
            .truth
            .sinks
            .iter()
            .all(|s| s.expected_status == "Unreachable"));
    }

    #[test]
    fn generated_apps_parse_for_many_seeds() {
        for seed in 1..=20u64 {
            let app = generate(&GenSpec::basic(seed)).unwrap();
            parse_app_from_sources(
                &app.files,
                &app.manifest,
                &["java/".into(), "javax/".into(), "android/".into()],
            )
            .unwrap_or_else(|e| panic!("seed {seed}: {e}"));
        }
    }
}
