//! N-particle interpolated Euler scheme with counter-based Brownian paths.

mod brownian;
mod ensemble;
mod estimators;
mod io;
mod scheme;

pub use brownian::{replication_seed, BrownianDriver, NormalStream};
pub use ensemble::{InitialLaw, ParticleEnsemble};
pub use estimators::{
    column_moments, mean_stderr, path_modulus, path_modulus_refined, strong_error, sup_moment,
    PowerMean,
};
pub use io::{read_binary, write_binary, write_csv};
pub use scheme::{
    coupled_pair, euler_step, initialize, simulate, simulate_with, NoiseCursor, SimulationConfig,
};
