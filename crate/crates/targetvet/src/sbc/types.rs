//! Domain types for the SBC bytecode text format: class names, type
//! descriptors, method/field signatures, and typed instructions.
//!
//! Method signatures render in two mutually invertible forms:
//!
//! * analysis form: `<com.pkg.Cls: void start()>`
//! * search form:   `Lcom/pkg/Cls;.start:()V`
//!
//! The search form is what appears verbatim in SBC instruction operands, so
//! it is the form used as search payload against the disassembled text.

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SigError {
    #[error("invalid class name: {0}")]
    BadClass(String),
    #[error("invalid type descriptor: {0}")]
    BadDescriptor(String),
    #[error("invalid method signature: {0}")]
    BadMethodSig(String),
    #[error("invalid field signature: {0}")]
    BadFieldSig(String),
    #[error("invalid register: {0}")]
    BadRegister(String),
}

/// Fully-qualified class name, stored in slash form without the `L...;`
/// wrapper (e.g. `com/pkg/Cls`). Inner classes keep their `$`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClassName(String);

impl ClassName {
    pub fn from_slashed(name: &str) -> Self {
        ClassName(name.to_string())
    }

    pub fn from_dotted(name: &str) -> Self {
        ClassName(name.replace('.', "/"))
    }

    /// Parse from descriptor form `Lcom/pkg/Cls;`.
    pub fn from_descriptor(desc: &str) -> Result<Self, SigError> {
        let inner = desc
            .strip_prefix('L')
            .and_then(|s| s.strip_suffix(';'))
            .ok_or_else(|| SigError::BadClass(desc.to_string()))?;
        if inner.is_empty() || inner.contains(';') || inner.contains(' ') {
            return Err(SigError::BadClass(desc.to_string()));
        }
        Ok(ClassName(inner.to_string()))
    }

    pub fn slashed(&self) -> &str {
        &self.0
    }

    pub fn dotted(&self) -> String {
        self.0.replace('/', ".")
    }

    pub fn descriptor(&self) -> String {
        format!("L{};", self.0)
    }

    /// True when the name falls under one of the configured framework
    /// prefixes (slash form, e.g. `java/`).
    pub fn has_prefix(&self, prefixes: &[String]) -> bool {
        prefixes.iter().any(|p| self.0.starts_with(p.as_str()))
    }
}

impl fmt::Display for ClassName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.descriptor())
    }
}

impl Serialize for ClassName {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.descriptor())
    }
}

impl<'de> Deserialize<'de> for ClassName {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        ClassName::from_descriptor(&s).map_err(serde::de::Error::custom)
    }
}

/// SBC type descriptor. A deliberate subset of the JVM descriptor grammar:
/// primitives, object types, and arrays.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TypeDesc {
    Void,
    Bool,
    Byte,
    Char,
    Short,
    Int,
    Long,
    Float,
    Double,
    Object(ClassName),
    Array(Box<TypeDesc>),
}

impl TypeDesc {
    pub fn render(&self) -> String {
        match self {
            TypeDesc::Void => "V".into(),
            TypeDesc::Bool => "Z".into(),
            TypeDesc::Byte => "B".into(),
            TypeDesc::Char => "C".into(),
            TypeDesc::Short => "S".into(),
            TypeDesc::Int => "I".into(),
            TypeDesc::Long => "J".into(),
            TypeDesc::Float => "F".into(),
            TypeDesc::Double => "D".into(),
            TypeDesc::Object(c) => c.descriptor(),
            TypeDesc::Array(e) => format!("[{}", e.render()),
        }
    }

    /// Java-source spelling used by the analysis form, e.g. `int`,
    /// `java.lang.String`, `int[]`.
    pub fn java_name(&self) -> String {
        match self {
            TypeDesc::Void => "void".into(),
            TypeDesc::Bool => "boolean".into(),
            TypeDesc::Byte => "byte".into(),
            TypeDesc::Char => "char".into(),
            TypeDesc::Short => "short".into(),
            TypeDesc::Int => "int".into(),
            TypeDesc::Long => "long".into(),
            TypeDesc::Float => "float".into(),
            TypeDesc::Double => "double".into(),
            TypeDesc::Object(c) => c.dotted(),
            TypeDesc::Array(e) => format!("{}[]", e.java_name()),
        }
    }

    pub fn parse(s: &str) -> Result<Self, SigError> {
        let (d, rest) = Self::parse_prefix(s)?;
        if !rest.is_empty() {
            return Err(SigError::BadDescriptor(s.to_string()));
        }
        Ok(d)
    }

    /// Parse one descriptor off the front of `s`, returning the remainder.
    /// This is what makes the concatenated parameter list parseable.
    pub fn parse_prefix(s: &str) -> Result<(Self, &str), SigError> {
        let mut chars = s.chars();
        let c = chars
            .next()
            .ok_or_else(|| SigError::BadDescriptor(s.to_string()))?;
        match c {
            'V' => Ok((TypeDesc::Void, &s[1..])),
            'Z' => Ok((TypeDesc::Bool, &s[1..])),
            'B' => Ok((TypeDesc::Byte, &s[1..])),
            'C' => Ok((TypeDesc::Char, &s[1..])),
            'S' => Ok((TypeDesc::Short, &s[1..])),
            'I' => Ok((TypeDesc::Int, &s[1..])),
            'J' => Ok((TypeDesc::Long, &s[1..])),
            'F' => Ok((TypeDesc::Float, &s[1..])),
            'D' => Ok((TypeDesc::Double, &s[1..])),
            'L' => {
                let end = s
                    .find(';')
                    .ok_or_else(|| SigError::BadDescriptor(s.to_string()))?;
                let cls = ClassName::from_descriptor(&s[..=end])?;
                Ok((TypeDesc::Object(cls), &s[end + 1..]))
            }
            '[' => {
                let (elem, rest) = Self::parse_prefix(&s[1..])?;
                if elem == TypeDesc::Void {
                    return Err(SigError::BadDescriptor(s.to_string()));
                }
                Ok((TypeDesc::Array(Box::new(elem)), rest))
            }
            _ => Err(SigError::BadDescriptor(s.to_string())),
        }
    }

    /// Parse a concatenated descriptor list such as `I[Ljava/lang/String;D`.
    pub fn parse_list(mut s: &str) -> Result<Vec<Self>, SigError> {
        let mut out = Vec::new();
        while !s.is_empty() {
            let (d, rest) = Self::parse_prefix(s)?;
            if d == TypeDesc::Void {
                return Err(SigError::BadDescriptor(s.to_string()));
            }
            out.push(d);
            s = rest;
        }
        Ok(out)
    }

    /// Inverse of [`TypeDesc::java_name`].
    pub fn parse_java_name(s: &str) -> Result<Self, SigError> {
        if let Some(base) = s.strip_suffix("[]") {
            return Ok(TypeDesc::Array(Box::new(Self::parse_java_name(base)?)));
        }
        Ok(match s {
            "void" => TypeDesc::Void,
            "boolean" => TypeDesc::Bool,
            "byte" => TypeDesc::Byte,
            "char" => TypeDesc::Char,
            "short" => TypeDesc::Short,
            "int" => TypeDesc::Int,
            "long" => TypeDesc::Long,
            "float" => TypeDesc::Float,
            "double" => TypeDesc::Double,
            other => {
                if other.is_empty() || other.contains(' ') || other.contains('/') {
                    return Err(SigError::BadDescriptor(s.to_string()));
                }
                TypeDesc::Object(ClassName::from_dotted(other))
            }
        })
    }

    /// The class named by this descriptor, looking through arrays.
    pub fn base_class(&self) -> Option<&ClassName> {
        match self {
            TypeDesc::Object(c) => Some(c),
            TypeDesc::Array(e) => e.base_class(),
            _ => None,
        }
    }
}

impl Serialize for TypeDesc {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.render())
    }
}

impl<'de> Deserialize<'de> for TypeDesc {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        TypeDesc::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// Method identity: class, name, parameter descriptors, return descriptor.
/// Declaration modifiers live on [`crate::sbc::model::Method`], not here, so
/// signatures parsed back from either rendered form compare equal to the
/// declared ones.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MethodSig {
    pub class: ClassName,
    pub name: String,
    pub params: Vec<TypeDesc>,
    pub ret: TypeDesc,
}

impl MethodSig {
    pub fn new(class: ClassName, name: &str, params: Vec<TypeDesc>, ret: TypeDesc) -> Self {
        MethodSig {
            class,
            name: name.to_string(),
            params,
            ret,
        }
    }

    pub fn is_init(&self) -> bool {
        self.name == "<init>"
    }

    pub fn is_clinit(&self) -> bool {
        self.name == "<clinit>"
    }

    /// Sub-method signature: name + params + return, without the class.
    /// Rendered in search style, e.g. `start:()V`.
    pub fn subsig(&self) -> String {
        let params: String = self.params.iter().map(|p| p.render()).collect();
        format!("{}:({}){}", self.name, params, self.ret.render())
    }

    /// Search form: `Lcom/pkg/Cls;.start:()V`.
    pub fn render_search(&self) -> String {
        format!("{}.{}", self.class.descriptor(), self.subsig())
    }

    /// Analysis form: `<com.pkg.Cls: void start()>`.
    pub fn render_analysis(&self) -> String {
        let params: Vec<String> = self.params.iter().map(|p| p.java_name()).collect();
        format!(
            "<{}: {} {}({})>",
            self.class.dotted(),
            self.ret.java_name(),
            self.name,
            params.join(",")
        )
    }

    /// The same signature re-qualified under a different class. Used by the
    /// child-class search rule.
    pub fn with_class(&self, class: ClassName) -> MethodSig {
        MethodSig {
            class,
            ..self.clone()
        }
    }

    pub fn parse_search(s: &str) -> Result<Self, SigError> {
        // Lcls;.name:(params)ret
        let semi = s
            .find(';')
            .ok_or_else(|| SigError::BadMethodSig(s.to_string()))?;
        let class = ClassName::from_descriptor(&s[..=semi])?;
        let rest = s[semi + 1..]
            .strip_prefix('.')
            .ok_or_else(|| SigError::BadMethodSig(s.to_string()))?;
        let colon = rest
            .rfind(":(")
            .ok_or_else(|| SigError::BadMethodSig(s.to_string()))?;
        let name = &rest[..colon];
        let sig = &rest[colon + 1..];
        let close = sig
            .find(')')
            .ok_or_else(|| SigError::BadMethodSig(s.to_string()))?;
        let params = TypeDesc::parse_list(&sig[1..close])?;
        let ret = TypeDesc::parse(&sig[close + 1..])?;
        if name.is_empty() {
            return Err(SigError::BadMethodSig(s.to_string()));
        }
        Ok(MethodSig::new(class, name, params, ret))
    }

    pub fn parse_analysis(s: &str) -> Result<Self, SigError> {
        // <com.pkg.Cls: ret name(p1,p2)>
        let inner = s
            .strip_prefix('<')
            .and_then(|x| x.strip_suffix('>'))
            .ok_or_else(|| SigError::BadMethodSig(s.to_string()))?;
        let (cls, rest) = inner
            .split_once(": ")
            .ok_or_else(|| SigError::BadMethodSig(s.to_string()))?;
        let (ret_s, rest) = rest
            .split_once(' ')
            .ok_or_else(|| SigError::BadMethodSig(s.to_string()))?;
        let open = rest
            .find('(')
            .ok_or_else(|| SigError::BadMethodSig(s.to_string()))?;
        let name = &rest[..open];
        let args = rest[open + 1..]
            .strip_suffix(')')
            .ok_or_else(|| SigError::BadMethodSig(s.to_string()))?;
        let params = if args.is_empty() {
            Vec::new()
        } else {
            args.split(',')
                .map(TypeDesc::parse_java_name)
                .collect::<Result<Vec<_>, _>>()?
        };
        if name.is_empty() {
            return Err(SigError::BadMethodSig(s.to_string()));
        }
        Ok(MethodSig::new(
            ClassName::from_dotted(cls),
            name,
            params,
            TypeDesc::parse_java_name(ret_s)?,
        ))
    }
}

impl fmt::Display for MethodSig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render_analysis())
    }
}

impl Serialize for MethodSig {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.render_search())
    }
}

impl<'de> Deserialize<'de> for MethodSig {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        MethodSig::parse_search(&s).map_err(serde::de::Error::custom)
    }
}

/// Field identity in search form `Lcls;.name:desc`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FieldRef {
    pub class: ClassName,
    pub name: String,
    pub desc: TypeDesc,
}

impl FieldRef {
    pub fn render_search(&self) -> String {
        format!(
            "{}.{}:{}",
            self.class.descriptor(),
            self.name,
            self.desc.render()
        )
    }

    pub fn parse_search(s: &str) -> Result<Self, SigError> {
        let semi = s
            .find(';')
            .ok_or_else(|| SigError::BadFieldSig(s.to_string()))?;
        let class = ClassName::from_descriptor(&s[..=semi])?;
        let rest = s[semi + 1..]
            .strip_prefix('.')
            .ok_or_else(|| SigError::BadFieldSig(s.to_string()))?;
        let (name, desc) = rest
            .split_once(':')
            .ok_or_else(|| SigError::BadFieldSig(s.to_string()))?;
        if name.is_empty() {
            return Err(SigError::BadFieldSig(s.to_string()));
        }
        Ok(FieldRef {
            class,
            name: name.to_string(),
            desc: TypeDesc::parse(desc)?,
        })
    }
}

impl fmt::Display for FieldRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render_search())
    }
}

impl Serialize for FieldRef {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.render_search())
    }
}

impl<'de> Deserialize<'de> for FieldRef {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        FieldRef::parse_search(&s).map_err(serde::de::Error::custom)
    }
}

/// SSA register `v0..vN`, scoped to one method body.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Reg(pub u32);

impl Reg {
    pub fn parse(s: &str) -> Result<Self, SigError> {
        let n = s
            .strip_prefix('v')
            .and_then(|d| d.parse::<u32>().ok())
            .ok_or_else(|| SigError::BadRegister(s.to_string()))?;
        Ok(Reg(n))
    }
}

impl fmt::Display for Reg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

/// Literal operand of a `const` definition.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ConstVal {
    Int(i64),
    Str(String),
    Class(ClassName),
}

impl fmt::Display for ConstVal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstVal::Int(i) => write!(f, "{i}"),
            ConstVal::Str(s) => write!(f, "\"{}\"", escape_str(s)),
            ConstVal::Class(c) => write!(f, "class {}", c.descriptor()),
        }
    }
}

pub fn escape_str(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

pub fn unescape_str(s: &str) -> Option<String> {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            match chars.next()? {
                '\\' => out.push('\\'),
                '"' => out.push('"'),
                _ => return None,
            }
        } else {
            out.push(c);
        }
    }
    Some(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Concat,
}

impl BinOp {
    pub fn mnemonic(&self) -> &'static str {
        match self {
            BinOp::Add => "add",
            BinOp::Sub => "sub",
            BinOp::Mul => "mul",
            BinOp::Div => "div",
            BinOp::Concat => "concat",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "add" => BinOp::Add,
            "sub" => BinOp::Sub,
            "mul" => BinOp::Mul,
            "div" => BinOp::Div,
            "concat" => BinOp::Concat,
            _ => return None,
        })
    }
}

/// An invocation operand: callee signature, optional receiver (absent for
/// static invokes), argument registers.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct InvokeExpr {
    pub callee: MethodSig,
    pub recv: Option<Reg>,
    pub args: Vec<Reg>,
}

/// Right-hand side of a register definition.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Expr {
    Const(ConstVal),
    Param(usize),
    New(ClassName),
    NewArray { elem: TypeDesc, len: Reg },
    Binop { op: BinOp, a: Reg, b: Reg },
    Cast { ty: TypeDesc, src: Reg },
    Phi(Vec<Reg>),
    Invoke(InvokeExpr),
    FieldGet { obj: Reg, field: FieldRef },
    StaticGet(FieldRef),
    ArrayGet { arr: Reg, idx: Reg },
}

impl Expr {
    /// Registers read by this expression.
    pub fn uses(&self) -> Vec<Reg> {
        match self {
            Expr::Const(_) | Expr::Param(_) | Expr::New(_) | Expr::StaticGet(_) => Vec::new(),
            Expr::NewArray { len, .. } => vec![*len],
            Expr::Binop { a, b, .. } => vec![*a, *b],
            Expr::Cast { src, .. } => vec![*src],
            Expr::Phi(rs) => rs.clone(),
            Expr::Invoke(iv) => {
                let mut v: Vec<Reg> = iv.recv.into_iter().collect();
                v.extend(iv.args.iter().copied());
                v
            }
            Expr::FieldGet { obj, .. } => vec![*obj],
            Expr::ArrayGet { arr, idx } => vec![*arr, *idx],
        }
    }
}

/// One SBC instruction. Store statements (`iput`/`sput`/`aput`) are
/// definitions of non-register places and carry no `lhs` register.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum InstrKind {
    Def { lhs: Reg, expr: Expr },
    FieldPut { value: Reg, obj: Reg, field: FieldRef },
    StaticPut { value: Reg, field: FieldRef },
    ArrayPut { value: Reg, arr: Reg, idx: Reg },
    Invoke(InvokeExpr),
    Return(Option<Reg>),
    Goto(String),
    If { cond: Reg, target: String },
    Label(String),
}

/// Coarse statement taxonomy used by the slicing graph: only definitions,
/// invocations, and returns carry dataflow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StmtClass {
    Definition,
    Invoke,
    Return,
    Control,
}

impl InstrKind {
    pub fn stmt_class(&self) -> StmtClass {
        match self {
            InstrKind::Def { .. }
            | InstrKind::FieldPut { .. }
            | InstrKind::StaticPut { .. }
            | InstrKind::ArrayPut { .. } => StmtClass::Definition,
            InstrKind::Invoke(_) => StmtClass::Invoke,
            InstrKind::Return(_) => StmtClass::Return,
            InstrKind::Goto(_) | InstrKind::If { .. } | InstrKind::Label(_) => StmtClass::Control,
        }
    }

    /// The invocation operand, whether the instruction is a bare invoke or
    /// an assign-from-invoke definition.
    pub fn invoke_expr(&self) -> Option<&InvokeExpr> {
        match self {
            InstrKind::Invoke(iv) => Some(iv),
            InstrKind::Def {
                expr: Expr::Invoke(iv),
                ..
            } => Some(iv),
            _ => None,
        }
    }

    pub fn def_lhs(&self) -> Option<Reg> {
        match self {
            InstrKind::Def { lhs, .. } => Some(*lhs),
            _ => None,
        }
    }

    /// Re-render to the exact SBC text line (modulo leading whitespace).
    pub fn render(&self) -> String {
        fn invoke_text(iv: &InvokeExpr) -> String {
            let mut parts = vec!["invoke".to_string()];
            if let Some(r) = iv.recv {
                parts.push(r.to_string());
            }
            parts.push(iv.callee.render_search());
            for a in &iv.args {
                parts.push(a.to_string());
            }
            parts.join(" ")
        }
        match self {
            InstrKind::Def { lhs, expr } => {
                let rhs = match expr {
                    Expr::Const(c) => format!("const {c}"),
                    Expr::Param(k) => format!("param {k}"),
                    Expr::New(c) => format!("new {}", c.descriptor()),
                    Expr::NewArray { elem, len } => {
                        format!("newarray {} {}", elem.render(), len)
                    }
                    Expr::Binop { op, a, b } => format!("binop {} {} {}", op.mnemonic(), a, b),
                    Expr::Cast { ty, src } => format!("cast {} {}", ty.render(), src),
                    Expr::Phi(rs) => {
                        let regs: Vec<String> = rs.iter().map(|r| r.to_string()).collect();
                        format!("phi {}", regs.join(" "))
                    }
                    Expr::Invoke(iv) => invoke_text(iv),
                    Expr::FieldGet { obj, field } => {
                        format!("iget {} {}", obj, field.render_search())
                    }
                    Expr::StaticGet(field) => format!("sget {}", field.render_search()),
                    Expr::ArrayGet { arr, idx } => format!("aget {arr} {idx}"),
                };
                format!("{lhs} = {rhs}")
            }
            InstrKind::FieldPut { value, obj, field } => {
                format!("iput {} {} {}", value, obj, field.render_search())
            }
            InstrKind::StaticPut { value, field } => {
                format!("sput {} {}", value, field.render_search())
            }
            InstrKind::ArrayPut { value, arr, idx } => format!("aput {value} {arr} {idx}"),
            InstrKind::Invoke(iv) => invoke_text(iv),
            InstrKind::Return(Some(r)) => format!("return {r}"),
            InstrKind::Return(None) => "return-void".to_string(),
            InstrKind::Goto(l) => format!("goto {l}"),
            InstrKind::If { cond, target } => format!("if {cond} goto {target}"),
            InstrKind::Label(l) => format!("label {l}"),
        }
    }
}

/// A parsed instruction with its 1-based line number in the owning SBC file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instruction {
    pub kind: InstrKind,
    pub line: u32,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig(s: &str) -> MethodSig {
        MethodSig::parse_search(s).unwrap()
    }

    #[test]
    fn search_form_matches_fig3_example() {
        let s = MethodSig::new(
            ClassName::from_dotted("com.connectsdk.service.netcast.NetcastHttpServer"),
            "start",
            vec![],
            TypeDesc::Void,
        );
        assert_eq!(
            s.render_search(),
            "Lcom/connectsdk/service/netcast/NetcastHttpServer;.start:()V"
        );
        assert_eq!(
            s.render_analysis(),
            "<com.connectsdk.service.netcast.NetcastHttpServer: void start()>"
        );
    }

    #[test]
    fn round_trip_both_forms() {
        let cases = [
            "Lcom/a/B;.m:(I[Ljava/lang/String;D)V",
            "Lcom/a/B$1;.<init>:(Lcom/a/B;)V",
            "Lcom/a/B;.<clinit>:()V",
            "La/B;.run:()Ljava/lang/Object;",
        ];
        for c in cases {
            let s = sig(c);
            assert_eq!(MethodSig::parse_search(&s.render_search()).unwrap(), s);
            assert_eq!(MethodSig::parse_analysis(&s.render_analysis()).unwrap(), s);
            assert_eq!(s.render_search(), c);
        }
    }

    #[test]
    fn descriptor_list_parses_concatenated() {
        let l = TypeDesc::parse_list("I[Ljava/lang/String;D").unwrap();
        assert_eq!(l.len(), 3);
        assert_eq!(l[0], TypeDesc::Int);
        assert_eq!(l[2], TypeDesc::Double);
    }

    #[test]
    fn bad_signatures_rejected() {
        assert!(MethodSig::parse_search("Lcom/a/B;.m:(Q)V").is_err());
        assert!(MethodSig::parse_search("com/a/B.m:()V").is_err());
        assert!(TypeDesc::parse("[V").is_err());
        assert!(TypeDesc::parse_list("IV").is_err());
    }

    #[test]
    fn instruction_render_is_stable() {
        let iv = InvokeExpr {
            callee: sig("La/B;.m:(I)V"),
            recv: Some(Reg(3)),
            args: vec![Reg(1)],
        };
        assert_eq!(InstrKind::Invoke(iv).render(), "invoke v3 La/B;.m:(I)V v1");
        let k = InstrKind::Def {
            lhs: Reg(0),
            expr: Expr::Const(ConstVal::Str("a\"b".into())),
        };
        assert_eq!(k.render(), "v0 = const \"a\\\"b\"");
    }
}
