//! Min-cut solver and the binary keep-or-switch subproblem of a local
//! α-expansion.

mod maxflow;
mod subproblem;

pub use maxflow::{max_flow, FlowNetwork, Side};
pub use subproblem::{build_subproblem, solve_binary, BinarySubproblem, PairTable};
