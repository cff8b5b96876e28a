//! SBC bytecode text: domain types, parser, app model, class hierarchy.

pub mod hierarchy;
pub mod model;
pub mod parser;
pub mod types;

pub use hierarchy::{entry_points, ClassHierarchy};
pub use model::{
    AppModel, Class, Component, ComponentKind, FieldDecl, FileId, LineRef, Manifest, Method,
    MethodFlags, SbcFile,
};
pub use parser::{parse_app, parse_app_from_sources, parse_manifest, SbcError};
pub use types::{
    BinOp, ClassName, ConstVal, Expr, FieldRef, Instruction, InstrKind, InvokeExpr, MethodSig,
    Reg, StmtClass, TypeDesc,
};
