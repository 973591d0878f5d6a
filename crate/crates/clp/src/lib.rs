//! Constrained level planarity: solvers, validator, and tooling.
//!
//! An instance is a level graph (every edge strictly upward) plus, per
//! level, a partial order on that level's vertices. The question is
//! whether a crossing-free y-monotone drawing exists whose left-to-right
//! order on each level extends the partial order. This crate ships:
//!
//! - an exact brute-force solver ([`oracle`]) usable as ground truth at
//!   small scale,
//! - a fixed-parameter solver parameterized by vertex cover size
//!   ([`pipeline`]), built from candidate-core enumeration ([`core_enum`]),
//!   transition insertion ([`transitions`]), and leaf/ear completion
//!   ([`step3`]),
//! - a drawing validator ([`validator`]) that checks any claimed embedding
//!   independently of how it was produced,
//! - instance/embedding JSON codecs ([`io`]), generators, and exporters
//!   behind the `clp` command-line tool.

pub mod cells;
pub mod core_enum;
pub mod cover;
pub mod edge_order;
pub mod embedding;
pub mod export;
pub mod generate;
pub mod io;
pub mod isolated;
pub mod level;
pub mod model;
pub mod oracle;
pub mod pipeline;
pub mod step3;
pub mod transitions;
pub mod validator;
