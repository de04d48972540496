//! Adaptive random-walk Metropolis kernels.
//!
//! Two proposal styles are supported. The `global` kernel proposes a change
//! to the whole vector at once from a running-covariance shaped step; `mwg`
//! ("Metropolis within Gibbs") proposes one coordinate at a time with its
//! own step size, which helps when starting values are poorly scaled.
//!
//! After every step the proposal scale moves toward a target acceptance
//! rate on a diminishing schedule `gamma_t = damper * t^(-0.6)`, and the
//! running mean/covariance of the chain absorb the new state with the same
//! weight. A damper near one adapts aggressively early on; near zero,
//! gradually.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dist::RngStream;
use crate::error::{Error, Result};

/// Exponent of the diminishing adaptation schedule.
const ADAPT_DECAY: f64 = 0.6;

/// Ridge added to the running covariance before factoring a proposal.
const PROPOSAL_RIDGE: f64 = 1e-8;

/// Proposal style for one Metropolis block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplerKind {
    /// Propose all coordinates jointly.
    Global,
    /// Metropolis within Gibbs: one coordinate per accept/reject decision.
    Mwg,
}

impl std::str::FromStr for SamplerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "global" => Ok(SamplerKind::Global),
            "mwg" => Ok(SamplerKind::Mwg),
            other => Err(Error::InvalidConfig(format!(
                "sampler must be `global` or `mwg`, got `{other}`"
            ))),
        }
    }
}

impl std::fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SamplerKind::Global => "global",
            SamplerKind::Mwg => "mwg",
        })
    }
}

/// A log unnormalized density. Implementations must return `-inf` for
/// out-of-support points, never NaN.
pub trait LogTarget {
    fn log_density(&self, x: &DVector<f64>) -> f64;
}

impl<F: Fn(&DVector<f64>) -> f64> LogTarget for F {
    fn log_density(&self, x: &DVector<f64>) -> f64 {
        self(x)
    }
}

/// State of one adaptive Metropolis block: current point, proposal scales,
/// running moments, and acceptance counters.
#[derive(Debug, Clone)]
pub struct AdaptiveKernel {
    kind: SamplerKind,
    current: DVector<f64>,
    log_target_value: f64,
    /// One entry for `global`, one per coordinate for `mwg`.
    scales: Vec<f64>,
    running_mean: DVector<f64>,
    running_cov: DMatrix<f64>,
    draw_count: u64,
    /// Aligned with `scales`.
    accept_counts: Vec<u64>,
    target_rate: f64,
    damper: f64,
}

impl AdaptiveKernel {
    /// A kernel at `start` with the default initial scales: `2.38/sqrt(dim)`
    /// for a global proposal, `2.38` per coordinate for mwg, and identity
    /// running covariance.
    pub fn new(kind: SamplerKind, start: DVector<f64>, target_rate: f64, damper: f64) -> Self {
        let dim = start.len();
        assert!(dim > 0, "kernel dimension must be positive");
        let (scales, accept_counts) = match kind {
            SamplerKind::Global => (vec![2.38 / (dim as f64).sqrt()], vec![0]),
            SamplerKind::Mwg => (vec![2.38; dim], vec![0; dim]),
        };
        Self {
            kind,
            running_mean: start.clone(),
            running_cov: DMatrix::identity(dim, dim),
            current: start,
            log_target_value: f64::NEG_INFINITY,
            scales,
            draw_count: 0,
            accept_counts,
            target_rate,
            damper,
        }
    }

    /// Replace the initial running covariance (e.g. with a supplied
    /// starting variance).
    pub fn with_initial_cov(mut self, cov: DMatrix<f64>) -> Self {
        assert_eq!(cov.nrows(), self.current.len());
        self.running_cov = cov;
        self
    }

    /// Stop adapting: scales and running moments stay frozen from here on.
    pub fn freeze_adaptation(&mut self) {
        self.damper = 0.0;
    }

    pub fn dim(&self) -> usize {
        self.current.len()
    }

    pub fn current(&self) -> &DVector<f64> {
        &self.current
    }

    pub fn log_target_value(&self) -> f64 {
        self.log_target_value
    }

    /// Total accept/reject decisions so far (per sweep for mwg).
    pub fn draw_count(&self) -> u64 {
        self.draw_count
    }

    /// Overall acceptance fraction, averaged across coordinates for mwg.
    pub fn acceptance_rate(&self) -> f64 {
        if self.draw_count == 0 {
            return 0.0;
        }
        let per: f64 = self
            .accept_counts
            .iter()
            .map(|&a| a as f64 / self.draw_count as f64)
            .sum();
        per / self.accept_counts.len() as f64
    }

    /// Acceptance fraction per scale slot.
    pub fn acceptance_rates(&self) -> Vec<f64> {
        if self.draw_count == 0 {
            return vec![0.0; self.accept_counts.len()];
        }
        self.accept_counts
            .iter()
            .map(|&a| a as f64 / self.draw_count as f64)
            .collect()
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    /// Run `steps` accept/reject passes against `target` (for mwg each pass
    /// sweeps every coordinate once). The target is re-evaluated at the
    /// current point on entry, so conditioning values may have changed since
    /// the previous call.
    pub fn run<T: LogTarget + ?Sized>(
        &mut self,
        target: &T,
        steps: usize,
        rng: &mut RngStream,
    ) -> Result<()> {
        let mut cur_val = target.log_density(&self.current);
        if cur_val.is_nan() {
            return Err(Error::NanTarget(self.current.iter().copied().collect()));
        }
        for _ in 0..steps {
            match self.kind {
                SamplerKind::Global => cur_val = self.global_step(target, cur_val, rng)?,
                SamplerKind::Mwg => cur_val = self.mwg_sweep(target, cur_val, rng)?,
            }
        }
        self.log_target_value = cur_val;
        Ok(())
    }

    /// One accept/reject pass; see [`run`](Self::run).
    pub fn step<T: LogTarget + ?Sized>(&mut self, target: &T, rng: &mut RngStream) -> Result<()> {
        self.run(target, 1, rng)
    }

    fn global_step<T: LogTarget + ?Sized>(
        &mut self,
        target: &T,
        cur_val: f64,
        rng: &mut RngStream,
    ) -> Result<f64> {
        let dim = self.dim();
        let mut shaped = self.running_cov.clone();
        for i in 0..dim {
            shaped[(i, i)] += PROPOSAL_RIDGE;
        }
        let chol = crate::dist::SpdMatrix::from_matrix(shaped)
            .and_then(|s| s.cholesky())
            .map_err(|_| Error::InvalidArgument("running covariance degenerated".into()))?;
        let z = DVector::from_fn(dim, |_, _| StandardNormal.sample(rng));
        let proposal = &self.current + self.scales[0] * (&chol * z);

        let prop_val = target.log_density(&proposal);
        if prop_val.is_nan() {
            return Err(Error::NanTarget(proposal.iter().copied().collect()));
        }
        let u: f64 = rng.random();
        let accepted = u.ln() < prop_val - cur_val;
        let new_val = if accepted {
            self.current = proposal;
            prop_val
        } else {
            cur_val
        };
        self.adapt_update(&[accepted]);
        Ok(new_val)
    }

    fn mwg_sweep<T: LogTarget + ?Sized>(
        &mut self,
        target: &T,
        cur_val: f64,
        rng: &mut RngStream,
    ) -> Result<f64> {
        let mut cur_val = cur_val;
        let mut accepted = vec![false; self.dim()];
        for j in 0..self.dim() {
            let z: f64 = StandardNormal.sample(rng);
            let mut proposal = self.current.clone();
            proposal[j] += self.scales[j] * z;
            let prop_val = target.log_density(&proposal);
            if prop_val.is_nan() {
                return Err(Error::NanTarget(proposal.iter().copied().collect()));
            }
            let u: f64 = rng.random();
            if u.ln() < prop_val - cur_val {
                self.current = proposal;
                cur_val = prop_val;
                accepted[j] = true;
            }
        }
        self.adapt_update(&accepted);
        Ok(cur_val)
    }

    /// Record accept/reject outcomes and adapt. With `t` the new decision
    /// count and `gamma_t = damper * t^(-0.6)`, each scale moves by
    /// `exp(gamma_t * (accepted - target_rate))` and the running moments
    /// absorb the current point with weight `gamma_t`.
    pub fn adapt_update(&mut self, accepted: &[bool]) {
        assert_eq!(accepted.len(), self.accept_counts.len());
        self.draw_count += 1;
        for (count, &a) in self.accept_counts.iter_mut().zip(accepted) {
            *count += u64::from(a);
        }
        let gamma = self.damper * (self.draw_count as f64).powf(-ADAPT_DECAY);
        if gamma == 0.0 {
            return;
        }
        for (scale, &a) in self.scales.iter_mut().zip(accepted) {
            let indicator = if a { 1.0 } else { 0.0 };
            *scale = (scale.ln() + gamma * (indicator - self.target_rate)).exp();
        }
        let delta = &self.current - &self.running_mean;
        self.running_mean += gamma * &delta;
        let outer = &delta * delta.transpose();
        self.running_cov = (1.0 - gamma) * &self.running_cov + gamma * outer;
    }
}
