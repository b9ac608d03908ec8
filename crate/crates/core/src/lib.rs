// `!(a >= b)` is used on purpose so that NaN fails a check
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod conditions;
pub mod expr;
pub mod geometry;
pub mod jump;
pub mod model;
pub mod polyhedral;
pub mod rng;
pub mod scenario;
pub mod sim;
pub mod stats;
pub mod tolerances;
