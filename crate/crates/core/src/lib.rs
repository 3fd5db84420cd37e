#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod busring;
pub mod calibration;
pub mod cpg;
pub mod harness;
pub mod magnetics;
pub mod plant;
pub mod vec3;

pub use vec3::Vec3;
