//! Toolchain for PROLEG rule programs: parsing, evaluation under
//! rule-with-exception semantics, reasoning traces, conversion from a
//! Prolog subset, linting, and a GDPR Article 6 rule corpus.

pub mod ast;
pub mod cli;
pub mod convert;
pub mod engine;
pub mod gdpr;
mod lexer;
pub mod lint;
pub mod parser;
pub mod trace;

pub use ast::{Atom, ExceptionDecl, FactBase, PredKey, Program, Rule, SourceRef, Substitution, Term};
pub use engine::{holds_all, solve, stratify, Engine, EngineConfig, EngineError, Outcome};
pub use parser::{parse_atom, parse_facts, parse_program, serialize, ParseError};
pub use trace::{render_dot, render_json, render_text, EdgeKind, TraceNode, Via};
