//! targetvet: a targeted inter-procedural static dataflow analyzer for apps
//! in the SBC disassembled-bytecode text format.
//!
//! Instead of building a whole-app call graph, the analyzer locates sink API
//! calls by text search and discovers callers backward, on the fly, with a
//! set of search mechanisms (signature search, constructor search plus
//! forward object taint, static-initializer reachability search, two-time
//! ICC search, lifecycle tables). Backward slicing along the discovered
//! callers produces a self-contained slicing graph (SSG) per sink call
//! site; forward constant and points-to propagation over the SSG yields the
//! complete dataflow representation of each tracked sink parameter, which
//! security detectors then judge.
//!
//! The `oracle` module is a conventional whole-app baseline (CHA call graph
//! plus app-wide constant propagation) used for differential testing and
//! speed comparison; `corpusgen` produces synthetic SBC apps with ground
//! truth for both.

pub mod config;
pub mod sbc;

pub mod index;

pub mod backtrack;

pub mod ssg;

pub mod eval;

pub mod detect;

pub mod oracle;

pub mod corpusgen;

pub mod report;

pub mod driver;

pub mod fixtures;
