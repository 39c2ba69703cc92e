#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod change_of_measure;
pub mod cli;
pub mod distributions;
pub mod error;
pub mod expr;
pub mod model;
pub mod numerics;
pub mod output;
pub mod ruin;
pub mod scenario;
pub mod simulate;
pub mod verify;
