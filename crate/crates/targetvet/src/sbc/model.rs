//! Parsed application model: classes, methods, instructions, manifest.
//! Immutable after parsing and safe to share across concurrent analyses.

use super::types::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MethodFlags {
    pub is_static: bool,
    pub is_private: bool,
    pub is_public: bool,
    pub is_constructor: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ClassFlags {
    pub is_public: bool,
    pub is_interface: bool,
    pub is_abstract: bool,
}

#[derive(Debug, Clone)]
pub struct Method {
    pub sig: MethodSig,
    pub flags: MethodFlags,
    pub body: Vec<Instruction>,
    /// Line of the `.method` header.
    pub line_start: u32,
    /// Line of the matching `.end method`.
    pub line_end: u32,
    pub file: FileId,
}

impl Method {
    /// A signature method's call sites are always identified textually by
    /// its own signature: static, private, and constructor methods.
    pub fn is_signature_method(&self) -> bool {
        self.flags.is_static || self.flags.is_private || self.flags.is_constructor
    }

    /// Register defined as `param k`, if the body binds it.
    pub fn param_reg(&self, k: usize) -> Option<Reg> {
        self.body.iter().find_map(|i| match &i.kind {
            InstrKind::Def {
                lhs,
                expr: Expr::Param(p),
            } if *p == k => Some(*lhs),
            _ => None,
        })
    }

    pub fn instr_at(&self, line: u32) -> Option<&Instruction> {
        self.body
            .binary_search_by_key(&line, |i| i.line)
            .ok()
            .map(|ix| &self.body[ix])
    }
}

#[derive(Debug, Clone)]
pub struct FieldDecl {
    pub field: FieldRef,
    pub is_static: bool,
    pub line: u32,
}

#[derive(Debug, Clone)]
pub struct Class {
    pub name: ClassName,
    pub flags: ClassFlags,
    pub super_class: Option<ClassName>,
    pub interfaces: Vec<ClassName>,
    pub fields: Vec<FieldDecl>,
    pub methods: Vec<Method>,
    pub file: FileId,
    pub line: u32,
}

impl Class {
    pub fn method_by_subsig(&self, subsig: &str) -> Option<&Method> {
        self.methods.iter().find(|m| m.sig.subsig() == subsig)
    }

    pub fn constructors(&self) -> impl Iterator<Item = &Method> {
        self.methods.iter().filter(|m| m.sig.is_init())
    }

    pub fn clinit(&self) -> Option<&Method> {
        self.methods.iter().find(|m| m.sig.is_clinit())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FileId(pub u32);

/// Position of an instruction or declaration inside the app's SBC text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LineRef {
    pub file: FileId,
    pub line: u32,
}

#[derive(Debug, Clone)]
pub struct SbcFile {
    pub name: String,
    pub lines: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ComponentKind {
    Activity,
    Service,
    Receiver,
    Provider,
}

impl ComponentKind {
    pub fn keyword(&self) -> &'static str {
        match self {
            ComponentKind::Activity => "activity",
            ComponentKind::Service => "service",
            ComponentKind::Receiver => "receiver",
            ComponentKind::Provider => "provider",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "activity" => ComponentKind::Activity,
            "service" => ComponentKind::Service,
            "receiver" => ComponentKind::Receiver,
            "provider" => ComponentKind::Provider,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Component {
    pub kind: ComponentKind,
    pub class: ClassName,
    pub exported: bool,
    pub actions: Vec<String>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Manifest {
    pub components: Vec<Component>,
}

impl Manifest {
    pub fn is_registered(&self, class: &ClassName) -> bool {
        self.components.iter().any(|c| &c.class == class)
    }

    pub fn components_of(&self, class: &ClassName) -> Vec<&Component> {
        self.components.iter().filter(|c| &c.class == class).collect()
    }

    pub fn registered_classes(&self) -> impl Iterator<Item = &ClassName> {
        self.components.iter().map(|c| &c.class)
    }
}

#[derive(Debug, Clone)]
pub struct AppModel {
    pub files: Vec<SbcFile>,
    pub classes: BTreeMap<ClassName, Class>,
    pub manifest: Manifest,
}

impl AppModel {
    pub fn class(&self, name: &ClassName) -> Option<&Class> {
        self.classes.get(name)
    }

    /// A class with no body in the SBC text is an opaque framework/API
    /// class: only its signatures are visible at call sites.
    pub fn is_opaque(&self, name: &ClassName) -> bool {
        !self.classes.contains_key(name)
    }

    /// Exact-signature method lookup (no inheritance walking).
    pub fn method(&self, sig: &MethodSig) -> Option<&Method> {
        self.classes
            .get(&sig.class)?
            .methods
            .iter()
            .find(|m| &m.sig == sig)
    }

    pub fn methods(&self) -> impl Iterator<Item = &Method> {
        self.classes.values().flat_map(|c| c.methods.iter())
    }

    pub fn method_count(&self) -> usize {
        self.classes.values().map(|c| c.methods.len()).sum()
    }

    pub fn instruction_count(&self) -> usize {
        self.methods().map(|m| m.body.len()).sum()
    }

    pub fn file_name(&self, id: FileId) -> &str {
        &self.files[id.0 as usize].name
    }

    pub fn raw_line(&self, r: LineRef) -> &str {
        &self.files[r.file.0 as usize].lines[(r.line - 1) as usize]
    }
}
