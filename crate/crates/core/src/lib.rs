#![no_std]
// `!(x > 0.0)` is used on purpose so NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]
extern crate alloc;

pub mod acceptance;
pub mod diagnostics;
pub mod error;
pub mod gp;
pub mod hyperopt;
pub mod kernel;
pub mod ledger;
pub mod linalg;
pub mod samplers;
pub mod targets;
