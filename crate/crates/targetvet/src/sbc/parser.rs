//! Line-oriented parser for the SBC disassembled-bytecode format and the
//! companion `manifest.txt`. One instruction per line, registers in SSA form
//! within each method, UTF-8 with LF line endings.
//!
//! Malformed input aborts with the file and line position. Unknown
//! instruction kinds are a hard error, not a warning: the corpus generator
//! and the checked-in fixtures fully control the grammar.

use super::model::*;
use super::types::*;
use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SbcError {
    #[error("missing manifest.txt in {0}")]
    MissingManifest(String),
    #[error("no .sbc files in {0}")]
    NoSbcFiles(String),
    #[error("{file}:{line}: {reason}")]
    Parse {
        file: String,
        line: u32,
        reason: String,
    },
    #[error("duplicate class {class} (first defined in {first}, again in {again})")]
    DuplicateClass {
        class: String,
        first: String,
        again: String,
    },
    #[error("cyclic class hierarchy through {0}")]
    CyclicHierarchy(String),
    #[error("io error on {0}: {1}")]
    Io(String, #[source] std::io::Error),
}

impl SbcError {
    fn parse(file: &str, line: u32, reason: impl Into<String>) -> Self {
        SbcError::Parse {
            file: file.to_string(),
            line,
            reason: reason.into(),
        }
    }
}

/// Class-name prefixes that SBC apps may not define bodies for. Classes
/// under these prefixes are opaque API surface.
pub const DEFAULT_FRAMEWORK_PREFIXES: &[&str] = &["java/", "javax/", "android/"];

pub fn parse_app(dir: &Path) -> Result<AppModel, SbcError> {
    parse_app_with_prefixes(
        dir,
        &DEFAULT_FRAMEWORK_PREFIXES
            .iter()
            .map(|s| s.to_string())
            .collect::<Vec<_>>(),
    )
}

pub fn parse_app_with_prefixes(dir: &Path, prefixes: &[String]) -> Result<AppModel, SbcError> {
    let dir_s = dir.display().to_string();
    let manifest_path = dir.join("manifest.txt");
    if !manifest_path.is_file() {
        return Err(SbcError::MissingManifest(dir_s));
    }
    let manifest_text = std::fs::read_to_string(&manifest_path)
        .map_err(|e| SbcError::Io(manifest_path.display().to_string(), e))?;

    let mut names: Vec<String> = std::fs::read_dir(dir)
        .map_err(|e| SbcError::Io(dir_s.clone(), e))?
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".sbc"))
        .collect();
    names.sort();
    if names.is_empty() {
        return Err(SbcError::NoSbcFiles(dir_s));
    }
    let mut sources = Vec::with_capacity(names.len());
    for n in names {
        let p = dir.join(&n);
        let text =
            std::fs::read_to_string(&p).map_err(|e| SbcError::Io(p.display().to_string(), e))?;
        sources.push((n, text));
    }
    parse_app_from_sources(&sources, &manifest_text, prefixes)
}

/// Parse an app held in memory: `(file name, contents)` pairs plus the
/// manifest text. Files are indexed in the given order; callers should pass
/// them sorted by name for deterministic line references.
pub fn parse_app_from_sources(
    sources: &[(String, String)],
    manifest_text: &str,
    prefixes: &[String],
) -> Result<AppModel, SbcError> {
    let manifest = parse_manifest(manifest_text)?;
    let mut files = Vec::with_capacity(sources.len());
    let mut classes: BTreeMap<ClassName, Class> = BTreeMap::new();
    let mut class_file: HashMap<ClassName, String> = HashMap::new();

    for (ix, (name, text)) in sources.iter().enumerate() {
        let file_id = FileId(ix as u32);
        let lines: Vec<String> = text.lines().map(|l| l.to_string()).collect();
        let parsed = FileParser::new(name, file_id, &lines, prefixes).parse()?;
        for class in parsed {
            if let Some(first) = class_file.get(&class.name) {
                return Err(SbcError::DuplicateClass {
                    class: class.name.descriptor(),
                    first: first.clone(),
                    again: name.clone(),
                });
            }
            class_file.insert(class.name.clone(), name.clone());
            classes.insert(class.name.clone(), class);
        }
        files.push(SbcFile {
            name: name.clone(),
            lines,
        });
    }

    Ok(AppModel {
        files,
        classes,
        manifest,
    })
}

pub fn parse_manifest(text: &str) -> Result<Manifest, SbcError> {
    const FILE: &str = "manifest.txt";
    let mut components = Vec::new();
    let mut seen: HashSet<(ComponentKind, ClassName)> = HashSet::new();
    for (ix, raw) in text.lines().enumerate() {
        let line_no = (ix + 1) as u32;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut toks = line.split_whitespace();
        let kind_tok = toks.next().unwrap();
        let kind = ComponentKind::parse(kind_tok)
            .ok_or_else(|| SbcError::parse(FILE, line_no, format!("unknown component kind `{kind_tok}`")))?;
        let class_tok = toks
            .next()
            .ok_or_else(|| SbcError::parse(FILE, line_no, "missing component class"))?;
        let class = ClassName::from_descriptor(class_tok)
            .map_err(|e| SbcError::parse(FILE, line_no, e.to_string()))?;
        let mut exported = false;
        let mut actions = Vec::new();
        for t in toks {
            if t == "exported" {
                exported = true;
            } else if let Some(a) = t.strip_prefix("action=") {
                actions.push(a.to_string());
            } else {
                return Err(SbcError::parse(
                    FILE,
                    line_no,
                    format!("unexpected manifest token `{t}`"),
                ));
            }
        }
        if !seen.insert((kind, class.clone())) {
            return Err(SbcError::parse(
                FILE,
                line_no,
                format!("duplicate {} component {}", kind.keyword(), class.descriptor()),
            ));
        }
        components.push(Component {
            kind,
            class,
            exported,
            actions,
        });
    }
    Ok(Manifest { components })
}

struct FileParser<'a> {
    file: &'a str,
    file_id: FileId,
    lines: &'a [String],
    prefixes: &'a [String],
}

impl<'a> FileParser<'a> {
    fn new(file: &'a str, file_id: FileId, lines: &'a [String], prefixes: &'a [String]) -> Self {
        FileParser {
            file,
            file_id,
            lines,
            prefixes,
        }
    }

    fn err(&self, line: u32, reason: impl Into<String>) -> SbcError {
        SbcError::parse(self.file, line, reason)
    }

    fn parse(&self) -> Result<Vec<Class>, SbcError> {
        let mut classes: Vec<Class> = Vec::new();
        let mut cur: Option<Class> = None;
        let mut in_method: Option<MethodBuilder> = None;

        for (ix, raw) in self.lines.iter().enumerate() {
            let line_no = (ix + 1) as u32;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }

            if let Some(mb) = in_method.as_mut() {
                if line == ".end method" {
                    let method = mb.finish(line_no, self)?;
                    cur.as_mut().unwrap().methods.push(method);
                    in_method = None;
                } else {
                    let kind = self.parse_instruction(line, line_no)?;
                    mb.push(kind, line_no, self)?;
                }
                continue;
            }

            if let Some(rest) = line.strip_prefix(".class ") {
                if let Some(prev) = cur.take() {
                    classes.push(prev);
                }
                cur = Some(self.parse_class_header(rest, line_no)?);
            } else if let Some(rest) = line.strip_prefix(".super ") {
                let c = self.class_mut(&mut cur, line_no)?;
                if c.super_class.is_some() {
                    return Err(self.err(line_no, "duplicate .super"));
                }
                c.super_class = Some(
                    ClassName::from_descriptor(rest.trim())
                        .map_err(|e| self.err(line_no, e.to_string()))?,
                );
            } else if let Some(rest) = line.strip_prefix(".implements ") {
                let iface = ClassName::from_descriptor(rest.trim())
                    .map_err(|e| self.err(line_no, e.to_string()))?;
                self.class_mut(&mut cur, line_no)?.interfaces.push(iface);
            } else if let Some(rest) = line.strip_prefix(".field ") {
                let decl = self.parse_field(rest, line_no, &cur)?;
                let c = self.class_mut(&mut cur, line_no)?;
                if c.fields.iter().any(|f| f.field.name == decl.field.name) {
                    return Err(self.err(line_no, format!("duplicate field {}", decl.field.name)));
                }
                c.fields.push(decl);
            } else if let Some(rest) = line.strip_prefix(".method ") {
                let class_name = self.class_mut(&mut cur, line_no)?.name.clone();
                let mb = self.parse_method_header(rest, line_no, class_name)?;
                if cur
                    .as_ref()
                    .unwrap()
                    .methods
                    .iter()
                    .any(|m| m.sig == mb.sig)
                {
                    return Err(self.err(
                        line_no,
                        format!("duplicate method {}", mb.sig.render_search()),
                    ));
                }
                in_method = Some(mb);
            } else if line == ".end method" {
                return Err(self.err(line_no, ".end method outside a method"));
            } else {
                return Err(self.err(line_no, format!("unexpected line `{line}`")));
            }
        }

        if in_method.is_some() {
            return Err(self.err(self.lines.len() as u32, "unterminated .method"));
        }
        if let Some(prev) = cur.take() {
            classes.push(prev);
        }
        Ok(classes)
    }

    fn class_mut<'c>(
        &self,
        cur: &'c mut Option<Class>,
        line: u32,
    ) -> Result<&'c mut Class, SbcError> {
        cur.as_mut()
            .ok_or_else(|| self.err(line, "declaration outside a .class"))
    }

    fn parse_class_header(&self, rest: &str, line_no: u32) -> Result<Class, SbcError> {
        let toks: Vec<&str> = rest.split_whitespace().collect();
        let (name_tok, mods) = toks
            .split_last()
            .ok_or_else(|| self.err(line_no, "empty .class"))?;
        let mut flags = ClassFlags::default();
        for m in mods {
            match *m {
                "public" => flags.is_public = true,
                "interface" => flags.is_interface = true,
                "abstract" => flags.is_abstract = true,
                "final" => {}
                other => {
                    return Err(self.err(line_no, format!("unknown class modifier `{other}`")))
                }
            }
        }
        let name = ClassName::from_descriptor(name_tok)
            .map_err(|e| self.err(line_no, e.to_string()))?;
        if name.has_prefix(self.prefixes) {
            return Err(self.err(
                line_no,
                format!(
                    "framework-prefixed class {} cannot be defined in SBC",
                    name.descriptor()
                ),
            ));
        }
        Ok(Class {
            name,
            flags,
            super_class: None,
            interfaces: Vec::new(),
            fields: Vec::new(),
            methods: Vec::new(),
            file: self.file_id,
            line: line_no,
        })
    }

    fn parse_field(
        &self,
        rest: &str,
        line_no: u32,
        cur: &Option<Class>,
    ) -> Result<FieldDecl, SbcError> {
        let class = cur
            .as_ref()
            .ok_or_else(|| self.err(line_no, ".field outside a .class"))?
            .name
            .clone();
        let toks: Vec<&str> = rest.split_whitespace().collect();
        let (decl, mods) = toks
            .split_last()
            .ok_or_else(|| self.err(line_no, "empty .field"))?;
        let mut is_static = false;
        for m in mods {
            match *m {
                "static" => is_static = true,
                "public" | "private" | "final" => {}
                other => {
                    return Err(self.err(line_no, format!("unknown field modifier `{other}`")))
                }
            }
        }
        let (name, desc) = decl
            .split_once(':')
            .ok_or_else(|| self.err(line_no, "field declaration must be name:desc"))?;
        if name.is_empty() {
            return Err(self.err(line_no, "empty field name"));
        }
        let desc = TypeDesc::parse(desc).map_err(|e| self.err(line_no, e.to_string()))?;
        Ok(FieldDecl {
            field: FieldRef {
                class,
                name: name.to_string(),
                desc,
            },
            is_static,
            line: line_no,
        })
    }

    fn parse_method_header(
        &self,
        rest: &str,
        line_no: u32,
        class: ClassName,
    ) -> Result<MethodBuilder, SbcError> {
        let toks: Vec<&str> = rest.split_whitespace().collect();
        let (decl, mods) = toks
            .split_last()
            .ok_or_else(|| self.err(line_no, "empty .method"))?;
        let mut flags = MethodFlags::default();
        for m in mods {
            match *m {
                "public" => flags.is_public = true,
                "private" => flags.is_private = true,
                "static" => flags.is_static = true,
                "constructor" => flags.is_constructor = true,
                "final" | "abstract" | "protected" => {}
                other => {
                    return Err(self.err(line_no, format!("unknown method modifier `{other}`")))
                }
            }
        }
        let open = decl
            .find('(')
            .ok_or_else(|| self.err(line_no, "method declaration missing `(`"))?;
        let close = decl
            .rfind(')')
            .ok_or_else(|| self.err(line_no, "method declaration missing `)`"))?;
        let name = &decl[..open];
        if name.is_empty() {
            return Err(self.err(line_no, "empty method name"));
        }
        let params = TypeDesc::parse_list(&decl[open + 1..close])
            .map_err(|e| self.err(line_no, e.to_string()))?;
        let ret =
            TypeDesc::parse(&decl[close + 1..]).map_err(|e| self.err(line_no, e.to_string()))?;
        if name == "<init>" || name == "<clinit>" {
            flags.is_constructor = true;
        }
        if name == "<clinit>" {
            if !flags.is_static {
                return Err(self.err(line_no, "<clinit> must be static"));
            }
            if !params.is_empty() {
                return Err(self.err(line_no, "<clinit> takes no parameters"));
            }
        }
        let sig = MethodSig::new(class, name, params, ret);
        Ok(MethodBuilder {
            sig,
            flags,
            body: Vec::new(),
            line_start: line_no,
            file: self.file_id,
            defined: HashSet::new(),
            param_indices: HashSet::new(),
            labels: HashSet::new(),
        })
    }

    fn parse_instruction(&self, line: &str, line_no: u32) -> Result<InstrKind, SbcError> {
        // `vX = rhs` definitions, else bare statements.
        if let Some((lhs_s, rhs)) = split_assign(line) {
            let lhs = Reg::parse(lhs_s).map_err(|e| self.err(line_no, e.to_string()))?;
            let expr = self.parse_expr(rhs, line_no)?;
            return Ok(InstrKind::Def { lhs, expr });
        }

        let mut toks = line.split_whitespace();
        let head = toks.next().unwrap();
        let rest: Vec<&str> = toks.collect();
        let reg = |s: &str| Reg::parse(s).map_err(|e| self.err(line_no, e.to_string()));
        match head {
            "invoke" => Ok(InstrKind::Invoke(self.parse_invoke(&rest, line_no)?)),
            "iput" => {
                if rest.len() != 3 {
                    return Err(self.err(line_no, "iput takes `vV vO field`"));
                }
                Ok(InstrKind::FieldPut {
                    value: reg(rest[0])?,
                    obj: reg(rest[1])?,
                    field: FieldRef::parse_search(rest[2])
                        .map_err(|e| self.err(line_no, e.to_string()))?,
                })
            }
            "sput" => {
                if rest.len() != 2 {
                    return Err(self.err(line_no, "sput takes `vV field`"));
                }
                Ok(InstrKind::StaticPut {
                    value: reg(rest[0])?,
                    field: FieldRef::parse_search(rest[1])
                        .map_err(|e| self.err(line_no, e.to_string()))?,
                })
            }
            "aput" => {
                if rest.len() != 3 {
                    return Err(self.err(line_no, "aput takes `vV vArr vIdx`"));
                }
                Ok(InstrKind::ArrayPut {
                    value: reg(rest[0])?,
                    arr: reg(rest[1])?,
                    idx: reg(rest[2])?,
                })
            }
            "return" => {
                if rest.len() != 1 {
                    return Err(self.err(line_no, "return takes one register"));
                }
                Ok(InstrKind::Return(Some(reg(rest[0])?)))
            }
            "return-void" => {
                if !rest.is_empty() {
                    return Err(self.err(line_no, "return-void takes no operands"));
                }
                Ok(InstrKind::Return(None))
            }
            "goto" => {
                if rest.len() != 1 {
                    return Err(self.err(line_no, "goto takes one label"));
                }
                Ok(InstrKind::Goto(rest[0].to_string()))
            }
            "if" => {
                if rest.len() != 3 || rest[1] != "goto" {
                    return Err(self.err(line_no, "if takes `vX goto Ln`"));
                }
                Ok(InstrKind::If {
                    cond: reg(rest[0])?,
                    target: rest[2].to_string(),
                })
            }
            "label" => {
                if rest.len() != 1 {
                    return Err(self.err(line_no, "label takes one name"));
                }
                Ok(InstrKind::Label(rest[0].to_string()))
            }
            other => Err(self.err(line_no, format!("unknown instruction `{other}`"))),
        }
    }

    fn parse_expr(&self, rhs: &str, line_no: u32) -> Result<Expr, SbcError> {
        let reg = |s: &str| Reg::parse(s).map_err(|e| self.err(line_no, e.to_string()));
        if let Some(rest) = rhs.strip_prefix("const ") {
            let rest = rest.trim();
            if rest.starts_with('"') {
                let inner = rest
                    .strip_prefix('"')
                    .and_then(|s| s.strip_suffix('"'))
                    .ok_or_else(|| self.err(line_no, "unterminated string constant"))?;
                let s = unescape_str(inner)
                    .ok_or_else(|| self.err(line_no, "bad escape in string constant"))?;
                return Ok(Expr::Const(ConstVal::Str(s)));
            }
            if let Some(cls) = rest.strip_prefix("class ") {
                let c = ClassName::from_descriptor(cls.trim())
                    .map_err(|e| self.err(line_no, e.to_string()))?;
                return Ok(Expr::Const(ConstVal::Class(c)));
            }
            let i: i64 = rest
                .parse()
                .map_err(|_| self.err(line_no, format!("bad integer constant `{rest}`")))?;
            return Ok(Expr::Const(ConstVal::Int(i)));
        }

        let mut toks = rhs.split_whitespace();
        let head = toks
            .next()
            .ok_or_else(|| self.err(line_no, "empty definition"))?;
        let rest: Vec<&str> = toks.collect();
        match head {
            "param" => {
                if rest.len() != 1 {
                    return Err(self.err(line_no, "param takes one index"));
                }
                let k: usize = rest[0]
                    .parse()
                    .map_err(|_| self.err(line_no, "bad param index"))?;
                Ok(Expr::Param(k))
            }
            "new" => {
                if rest.len() != 1 {
                    return Err(self.err(line_no, "new takes one class"));
                }
                Ok(Expr::New(
                    ClassName::from_descriptor(rest[0])
                        .map_err(|e| self.err(line_no, e.to_string()))?,
                ))
            }
            "newarray" => {
                if rest.len() != 2 {
                    return Err(self.err(line_no, "newarray takes `desc vN`"));
                }
                Ok(Expr::NewArray {
                    elem: TypeDesc::parse(rest[0]).map_err(|e| self.err(line_no, e.to_string()))?,
                    len: reg(rest[1])?,
                })
            }
            "binop" => {
                if rest.len() != 3 {
                    return Err(self.err(line_no, "binop takes `op vA vB`"));
                }
                let op = BinOp::parse(rest[0])
                    .ok_or_else(|| self.err(line_no, format!("unknown binop `{}`", rest[0])))?;
                Ok(Expr::Binop {
                    op,
                    a: reg(rest[1])?,
                    b: reg(rest[2])?,
                })
            }
            "cast" => {
                if rest.len() != 2 {
                    return Err(self.err(line_no, "cast takes `desc vA`"));
                }
                Ok(Expr::Cast {
                    ty: TypeDesc::parse(rest[0]).map_err(|e| self.err(line_no, e.to_string()))?,
                    src: reg(rest[1])?,
                })
            }
            "phi" => {
                if rest.len() < 2 {
                    return Err(self.err(line_no, "phi takes at least two registers"));
                }
                Ok(Expr::Phi(
                    rest.iter().map(|s| reg(s)).collect::<Result<_, _>>()?,
                ))
            }
            "invoke" => Ok(Expr::Invoke(self.parse_invoke(&rest, line_no)?)),
            "iget" => {
                if rest.len() != 2 {
                    return Err(self.err(line_no, "iget takes `vO field`"));
                }
                Ok(Expr::FieldGet {
                    obj: reg(rest[0])?,
                    field: FieldRef::parse_search(rest[1])
                        .map_err(|e| self.err(line_no, e.to_string()))?,
                })
            }
            "sget" => {
                if rest.len() != 1 {
                    return Err(self.err(line_no, "sget takes one field"));
                }
                Ok(Expr::StaticGet(
                    FieldRef::parse_search(rest[0])
                        .map_err(|e| self.err(line_no, e.to_string()))?,
                ))
            }
            "aget" => {
                if rest.len() != 2 {
                    return Err(self.err(line_no, "aget takes `vArr vIdx`"));
                }
                Ok(Expr::ArrayGet {
                    arr: reg(rest[0])?,
                    idx: reg(rest[1])?,
                })
            }
            other => Err(self.err(line_no, format!("unknown expression `{other}`"))),
        }
    }

    fn parse_invoke(&self, toks: &[&str], line_no: u32) -> Result<InvokeExpr, SbcError> {
        if toks.is_empty() {
            return Err(self.err(line_no, "invoke missing callee"));
        }
        let (recv, sig_ix) = if toks[0].starts_with('v') {
            (
                Some(Reg::parse(toks[0]).map_err(|e| self.err(line_no, e.to_string()))?),
                1,
            )
        } else {
            (None, 0)
        };
        let sig_tok = toks
            .get(sig_ix)
            .ok_or_else(|| self.err(line_no, "invoke missing callee signature"))?;
        let callee =
            MethodSig::parse_search(sig_tok).map_err(|e| self.err(line_no, e.to_string()))?;
        let args = toks[sig_ix + 1..]
            .iter()
            .map(|s| Reg::parse(s).map_err(|e| self.err(line_no, e.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        if args.len() != callee.params.len() {
            return Err(self.err(
                line_no,
                format!(
                    "invoke of {} passes {} argument(s), signature declares {}",
                    callee.render_search(),
                    args.len(),
                    callee.params.len()
                ),
            ));
        }
        Ok(InvokeExpr { callee, recv, args })
    }
}

/// Split `vX = rhs`, being careful not to split on `=` inside operands
/// (string constants, `action=` never appears in instructions).
fn split_assign(line: &str) -> Option<(&str, &str)> {
    let eq = line.find(" = ")?;
    let lhs = &line[..eq];
    if !lhs.starts_with('v') || lhs.contains(' ') {
        return None;
    }
    Some((lhs, &line[eq + 3..]))
}

struct MethodBuilder {
    sig: MethodSig,
    flags: MethodFlags,
    body: Vec<Instruction>,
    line_start: u32,
    file: FileId,
    defined: HashSet<Reg>,
    param_indices: HashSet<usize>,
    labels: HashSet<String>,
}

impl MethodBuilder {
    fn push(&mut self, kind: InstrKind, line: u32, fp: &FileParser) -> Result<(), SbcError> {
        if let InstrKind::Def { lhs, expr } = &kind {
            if !self.defined.insert(*lhs) {
                return Err(fp.err(
                    line,
                    format!("register {lhs} reassigned; SBC bodies are in SSA form"),
                ));
            }
            if let Expr::Param(k) = expr {
                let arity = self.sig.params.len();
                let max = if self.flags.is_static {
                    arity
                } else {
                    // Receiver occupies index 0 in instance methods.
                    arity + 1
                };
                if *k >= max {
                    return Err(fp.err(
                        line,
                        format!("param index {k} out of range for {}", self.sig.render_search()),
                    ));
                }
                if !self.param_indices.insert(*k) {
                    return Err(fp.err(line, format!("param {k} bound twice")));
                }
            }
        }
        if let InstrKind::Label(l) = &kind {
            if !self.labels.insert(l.clone()) {
                return Err(fp.err(line, format!("duplicate label {l}")));
            }
        }
        self.body.push(Instruction { kind, line });
        Ok(())
    }

    fn finish(&mut self, end_line: u32, fp: &FileParser) -> Result<Method, SbcError> {
        for instr in &self.body {
            let target = match &instr.kind {
                InstrKind::Goto(t) => Some(t),
                InstrKind::If { target, .. } => Some(target),
                _ => None,
            };
            if let Some(t) = target {
                if !self.labels.contains(t) {
                    return Err(fp.err(instr.line, format!("branch to undefined label {t}")));
                }
            }
        }
        Ok(Method {
            sig: self.sig.clone(),
            flags: self.flags,
            body: std::mem::take(&mut self.body),
            line_start: self.line_start,
            line_end: end_line,
            file: self.file,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse_one(text: &str) -> Result<AppModel, SbcError> {
        parse_app_from_sources(
            &[("app.sbc".to_string(), text.to_string())],
            "activity Lcom/x/Main; exported\n",
            &["java/".into(), "javax/".into(), "android/".into()],
        )
    }

    const SMALL: &str = "\
.class public Lcom/x/Main;
.super Landroid/app/Activity;
.method public onCreate()V
  v0 = param 0
  v1 = const 8080
  v2 = const 1
  v3 = binop add v1 v2
  return-void
.end method
";

    #[test]
    fn parses_small_app() {
        let m = parse_one(SMALL).unwrap();
        assert_eq!(m.classes.len(), 1);
        let cls = m.class(&ClassName::from_dotted("com.x.Main")).unwrap();
        assert_eq!(cls.methods.len(), 1);
        assert_eq!(cls.methods[0].body.len(), 5);
        assert_eq!(cls.methods[0].body[1].line, 5);
        // Re-render matches the raw lines.
        for ins in &cls.methods[0].body {
            let raw = m.raw_line(LineRef {
                file: FileId(0),
                line: ins.line,
            });
            assert_eq!(raw.trim(), ins.kind.render());
        }
    }

    #[test]
    fn ssa_violation_is_parse_error() {
        let bad = SMALL.replace("v3 = binop add v1 v2", "v1 = binop add v1 v2");
        let err = parse_one(&bad).unwrap_err();
        assert!(matches!(err, SbcError::Parse { line: 7, .. }), "{err}");
    }

    #[test]
    fn unknown_instruction_is_hard_error() {
        let bad = SMALL.replace("return-void", "monitor-enter v0");
        assert!(parse_one(&bad).is_err());
    }

    #[test]
    fn framework_class_definition_rejected() {
        let bad = SMALL.replace("Lcom/x/Main;", "Ljava/lang/String;");
        assert!(parse_one(&bad).is_err());
    }

    #[test]
    fn clinit_must_be_static_and_nullary() {
        let bad = "\
.class Lcom/x/A;
.method public constructor <clinit>()V
  return-void
.end method
";
        assert!(parse_one(bad).is_err());
    }

    #[test]
    fn duplicate_class_across_files() {
        let err = parse_app_from_sources(
            &[
                ("a.sbc".into(), ".class Lcom/x/A;\n".into()),
                ("b.sbc".into(), ".class Lcom/x/A;\n".into()),
            ],
            "",
            &[],
        )
        .unwrap_err();
        assert!(matches!(err, SbcError::DuplicateClass { .. }));
    }

    #[test]
    fn missing_manifest_on_empty_dir() {
        let dir = tempfile::tempdir().unwrap();
        let err = parse_app(dir.path()).unwrap_err();
        assert!(matches!(err, SbcError::MissingManifest(_)));
    }

    #[test]
    fn manifest_components_parse() {
        let m = parse_manifest(
            "activity Lcom/x/Main; exported\nservice Lcom/x/Svc; action=com.x.GO action=com.x.GO2\n",
        )
        .unwrap();
        assert_eq!(m.components.len(), 2);
        assert!(m.components[0].exported);
        assert_eq!(m.components[1].actions, vec!["com.x.GO", "com.x.GO2"]);
        assert!(parse_manifest("activity Lcom/x/A;\nactivity Lcom/x/A;\n").is_err());
    }

    #[test]
    fn string_constants_with_spaces_and_escapes() {
        let text = "\
.class Lcom/x/A;
.method static m()V
  v0 = const \"hello world \\\"q\\\"\"
  return-void
.end method
";
        let m = parse_one(text).unwrap();
        let cls = m.class(&ClassName::from_dotted("com.x.A")).unwrap();
        match &cls.methods[0].body[0].kind {
            InstrKind::Def {
                expr: Expr::Const(ConstVal::Str(s)),
                ..
            } => assert_eq!(s, "hello world \"q\""),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn invoke_arity_checked() {
        let bad = "\
.class Lcom/x/A;
.method static m()V
  v0 = const 1
  invoke Lcom/x/B;.f:(II)V v0
  return-void
.end method
";
        assert!(parse_one(bad).is_err());
    }
}
