//! Proof search for Core Logic, a constructive and relevant natural-deduction
//! system, with a heuristic baseline strategy and a linear Q-learning
//! strategy that learns action orderings from search outcomes.

pub mod cli;
pub mod features;
pub mod formula;
pub mod gen;
pub mod graph;
pub mod kernel;
pub mod par;
pub mod problems;
pub mod proof;
pub mod qlearn;
pub mod search;
pub mod syntax;

pub use formula::{Connective, Formula, Sequent, Term};
pub use kernel::{applicable_actions, apply_action, is_applicable, Action, KernelError, RuleId};
pub use proof::{check_proof, proof_length, proves, Proof, Verdict, Violation};
pub use syntax::{parse_formula, parse_sequent, ParseError};
