//! Invariant vector measures of Markov-type operators on `[0,1]`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod borel;
pub mod countable;
pub mod error;
pub mod function;
pub mod l2;
pub mod linalg;
pub mod markov;
pub mod measure;
pub mod mk;
pub mod quadrature;
pub mod scenario;
pub mod solver;
