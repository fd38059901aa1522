pub mod ars;
pub mod copula;
pub mod data;
pub mod diagnostics;
pub mod dpmix;
pub mod error;
pub mod geweke;
pub mod kernel;
pub mod mcmc;
pub mod normal;
pub mod predictive;
pub mod quad;
pub mod scalar;
pub mod simulate;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Kernel = kernel::KernelParams<f64>;
pub type Copula = copula::CopulaParams<f64>;
pub type Sticks = dpmix::StickState<f64>;
pub type Allocations = dpmix::AllocationState<f64>;
pub type Data = data::Dataset<f64>;
pub type Config = mcmc::McmcConfig<f64>;
pub type PriorF64 = mcmc::Prior<f64>;
pub type UniChain = mcmc::uni::UniState<f64>;
pub type BridgeChain = mcmc::bridge::BridgeState<f64>;
pub type BivChain = mcmc::biv::BivState<f64>;
