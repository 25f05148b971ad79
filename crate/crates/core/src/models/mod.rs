//! Application models: a delayed neural mass system with intrinsic
//! excitability and a regularized chemotaxis drift.

pub mod jansen_rit;
pub mod keller_segel;

pub use jansen_rit::{
    jansen_rit_diffusion, jansen_rit_drift, sigmoid_s, Excitability, JansenRit, JansenRitParams,
    Sigmoid, TimeFunction,
};
pub use keller_segel::{ks_b0, ks_kernel, ks_memory_drift, KellerSegel, KellerSegelParams};
