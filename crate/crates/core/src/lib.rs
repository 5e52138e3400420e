//! Shared model, wire protocol, script validation, project conventions and
//! usability scoring for the TFPaaS tools.
//!
//! The numeric kernels ([`stats`], [`sumscore`]) are generic over [`Real`];
//! aliases for `f64` and `f32` live here.

mod num;

pub mod conventions;
pub mod model;
pub mod protocol;
pub mod stats;
pub mod sumscore;
pub mod validator;

pub use num::Real;

pub type SumScoreF64 = sumscore::SumScore<f64>;
pub type SumScoreF32 = sumscore::SumScore<f32>;
pub type SumInputsF64 = sumscore::SumInputs<f64>;
pub type SumInputsF32 = sumscore::SumInputs<f32>;
