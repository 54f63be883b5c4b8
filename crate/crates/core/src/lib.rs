#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod fingroup;
pub mod harness;
pub mod liespace;
pub mod matcore;
pub mod morphism;
pub mod proximity;
pub mod streams;
