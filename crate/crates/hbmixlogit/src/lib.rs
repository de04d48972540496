//! Hierarchical Bayes mixed logit estimation.
//!
//! This crate draws from the posterior distribution of mixed logit models —
//! discrete choice models whose coefficients vary across decision makers —
//! using an adaptive Metropolis-within-Gibbs sampler. It covers the
//! preference-space model and the willingness-to-pay (WTP) space variant in
//! which a designated price variable carries a negative log-normal
//! coefficient.
//!
//! The pieces, bottom to top:
//!
//! - [`data`]: long-format choice data ingestion, validation, indexing, and
//!   a case-format converter.
//! - [`dist`]: SPD matrices, multivariate normal, inverse Wishart, Student-t
//!   tail functions, and keyed reproducible RNG streams.
//! - [`clogit`]: conditional logit maximum likelihood, used for starting
//!   values.
//! - [`amcmc`]: adaptive random-walk Metropolis kernels (joint and
//!   one-coordinate-at-a-time) targeting a configurable acceptance rate.
//! - [`sampler`]: the Gibbs driver cycling individual coefficients,
//!   population mean, covariance, and fixed coefficients.
//! - [`results`]: draw summaries, table rendering, draw-file persistence,
//!   and the stored-results export.
//! - [`wtp`]: the WTP-space spec construction and price transform.
//! - [`sim`]: a synthetic data generator for end-to-end checks.
//!
//! A minimal run:
//!
//! ```
//! use hbmixlogit::data::{build_index, ChoiceDataset};
//! use hbmixlogit::sampler::{run_chain, ModelSpec, SamplerConfig};
//! use hbmixlogit::sim::{simulate_dataset, SimConfig};
//!
//! let sim = SimConfig::preference(40, 4, 3, vec![0.8], vec![vec![0.4]], vec![], 7);
//! let data = simulate_dataset(&sim).unwrap();
//! let spec = ModelSpec::preference("choice", "gid", "pid", &[], &["x1"]).unwrap();
//! let config = SamplerConfig {
//!     draws: 200,
//!     burn: 100,
//!     seed: 7,
//!     ..SamplerConfig::default()
//! };
//! let run = run_chain(&data, &spec, &config).unwrap();
//! assert_eq!(run.draws.rows.len(), 100);
//! ```

pub mod amcmc;
pub mod clogit;
pub mod data;
pub mod dist;
pub mod error;
pub mod results;
pub mod sampler;
pub mod sim;
pub mod wtp;

pub use error::{Error, Result};

// Callers build matrices and vectors with the same linear-algebra types the
// crate uses internally.
pub use nalgebra;

// The guide chapters double as doc-tests so their code blocks stay in sync
// with the crate.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/data.md")]
    mod data {}
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/adaptive-mcmc.md")]
    mod adaptive_mcmc {}
    #[doc = include_str!("../../../book/src/wtp.md")]
    mod wtp {}
    #[doc = include_str!("../../../book/src/outputs.md")]
    mod outputs {}
    #[doc = include_str!("../../../book/src/starting-values.md")]
    mod starting_values {}
}
