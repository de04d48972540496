//! Model specification and run configuration.

use std::path::PathBuf;

use crate::amcmc::SamplerKind;
use crate::dist::SpdMatrix;
use crate::error::{Error, Result};

/// Which variables play which role in the model.
///
/// `rand_vars` carry coefficients that vary across decision makers;
/// `fixed_vars` carry coefficients common to everyone. In WTP mode the
/// price parameter is the first entry of the random block and is named by
/// the price variable.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub depvar: String,
    pub group_var: String,
    pub id_var: String,
    pub fixed_vars: Vec<String>,
    pub rand_vars: Vec<String>,
    pub price_var: Option<String>,
}

impl ModelSpec {
    /// Preference-space spec. At least one random-coefficient variable is
    /// required.
    pub fn preference(
        depvar: &str,
        group_var: &str,
        id_var: &str,
        fixed_vars: &[&str],
        rand_vars: &[&str],
    ) -> Result<Self> {
        let spec = Self {
            depvar: depvar.to_string(),
            group_var: group_var.to_string(),
            id_var: id_var.to_string(),
            fixed_vars: fixed_vars.iter().map(|s| s.to_string()).collect(),
            rand_vars: rand_vars.iter().map(|s| s.to_string()).collect(),
            price_var: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.rand_vars.is_empty() {
            return Err(Error::InvalidConfig(
                "at least one random-coefficient independent variable is required".into(),
            ));
        }
        let mut seen = std::collections::HashSet::new();
        for v in self.rand_vars.iter().chain(self.fixed_vars.iter()) {
            if !seen.insert(v.as_str()) {
                return Err(Error::InvalidConfig(format!(
                    "variable `{v}` appears more than once in the model"
                )));
            }
        }
        if let Some(p) = &self.price_var {
            // The price variable sits at the head of the random block; it
            // must not be listed again anywhere.
            if self.rand_vars.iter().skip(1).any(|v| v == p)
                || self.fixed_vars.iter().any(|v| v == p)
            {
                return Err(Error::InvalidConfig(format!(
                    "price variable `{p}` must not appear in rand() or the fixed list"
                )));
            }
            if self.rand_vars.first().map(String::as_str) != Some(p.as_str()) {
                return Err(Error::InvalidConfig(
                    "WTP specs must carry the price parameter first in the random block".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn is_wtp(&self) -> bool {
        self.price_var.is_some()
    }

    pub fn k_rand(&self) -> usize {
        self.rand_vars.len()
    }

    pub fn k_fixed(&self) -> usize {
        self.fixed_vars.len()
    }

    /// Data columns the model reads, in covariate-storage order: the random
    /// block first (in WTP mode its head is the price column), then the
    /// fixed block.
    pub fn data_vars(&self) -> Vec<String> {
        self.rand_vars
            .iter()
            .chain(self.fixed_vars.iter())
            .cloned()
            .collect()
    }
}

/// Everything that shapes one sampling run.
#[derive(Debug, Clone)]
pub struct SamplerConfig {
    /// Total posterior draws to take.
    pub draws: usize,
    /// Draws discarded from the front before retention.
    pub burn: usize,
    /// Keep every `thin`-th post-burn draw.
    pub thin: usize,
    /// Randomly permute retained draws.
    pub jumble: bool,
    /// Metropolis steps per individual coefficient set per pass.
    pub draws_random: usize,
    /// Metropolis steps for the fixed block per pass.
    pub draws_fixed: usize,
    /// Target acceptance rate for individual coefficients.
    pub arate_random: f64,
    /// Target acceptance rate for fixed coefficients.
    pub arate_fixed: f64,
    pub sampler_random: SamplerKind,
    pub sampler_fixed: SamplerKind,
    /// Adaptation damping for individual coefficients, in (0, 1].
    pub damp_random: f64,
    /// Adaptation damping for fixed coefficients, in (0, 1].
    pub damp_fixed: f64,
    /// Starting values: random means first, then fixed coefficients.
    /// Defaults to a pooled conditional logit fit.
    pub from: Option<Vec<f64>>,
    /// Starting covariance for the random coefficients; identity if absent.
    pub from_variance: Option<SpdMatrix>,
    pub seed: u64,
    /// Emit a progress dot per pass and a joint log posterior choice
    /// probability line every 50 passes.
    pub noisy: bool,
    /// Draw-file destination; the file holds only retained draws.
    pub saving: Option<PathBuf>,
    pub replace: bool,
    pub append: bool,
    /// Individual-level draw destination.
    pub indsave: Option<PathBuf>,
    /// Keep only the last `indkeep` retained draws of individual parameters.
    pub indkeep: Option<usize>,
    /// Save individual draws one row per person instead of panel form.
    pub indwide: bool,
    pub replace_ind: bool,
    pub append_ind: bool,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            draws: 1000,
            burn: 0,
            thin: 1,
            jumble: false,
            draws_random: 1,
            draws_fixed: 1,
            arate_random: 0.234,
            arate_fixed: 0.234,
            sampler_random: SamplerKind::Global,
            sampler_fixed: SamplerKind::Global,
            damp_random: 1.0,
            damp_fixed: 1.0,
            from: None,
            from_variance: None,
            seed: 1,
            noisy: false,
            saving: None,
            replace: false,
            append: false,
            indsave: None,
            indkeep: None,
            indwide: false,
            replace_ind: false,
            append_ind: false,
        }
    }
}

impl SamplerConfig {
    /// Retained draw count `floor((draws - burn) / thin)`.
    pub fn retained(&self) -> usize {
        (self.draws - self.burn) / self.thin
    }

    pub fn validate(&self, spec: &ModelSpec) -> Result<()> {
        if self.draws == 0 {
            return Err(Error::InvalidConfig("draws must be positive".into()));
        }
        if self.burn >= self.draws {
            return Err(Error::InvalidConfig(format!(
                "burn ({}) must be smaller than draws ({})",
                self.burn, self.draws
            )));
        }
        if self.thin == 0 {
            return Err(Error::InvalidConfig("thin must be at least 1".into()));
        }
        if self.retained() == 0 {
            return Err(Error::InvalidConfig(
                "no draws would be retained after burn-in and thinning".into(),
            ));
        }
        if self.draws_random == 0 || self.draws_fixed == 0 {
            return Err(Error::InvalidConfig(
                "drawsrandom and drawsfixed must be at least 1".into(),
            ));
        }
        for (name, rate) in [
            ("araterandom", self.arate_random),
            ("aratefixed", self.arate_fixed),
        ] {
            if !(rate > 0.0 && rate < 1.0) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must lie strictly between 0 and 1, got {rate}"
                )));
            }
        }
        for (name, damp) in [
            ("dampparmrandom", self.damp_random),
            ("dampparmfixed", self.damp_fixed),
        ] {
            if !(damp > 0.0 && damp <= 1.0) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must lie in (0, 1], got {damp}"
                )));
            }
        }
        if let Some(from) = &self.from {
            let want = spec.k_rand() + spec.k_fixed();
            if from.len() != want {
                return Err(Error::InvalidConfig(format!(
                    "from() has {} entries, expected {} (random means then fixed coefficients)",
                    from.len(),
                    want
                )));
            }
            if from.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidConfig(
                    "from() contains non-finite values".into(),
                ));
            }
        }
        if let Some(v) = &self.from_variance {
            if v.dim() != spec.k_rand() {
                return Err(Error::InvalidConfig(format!(
                    "fromvariance is {}x{}, expected {}x{}",
                    v.dim(),
                    v.dim(),
                    spec.k_rand(),
                    spec.k_rand()
                )));
            }
        }
        if self.replace && self.append {
            return Err(Error::InvalidConfig(
                "replace and append cannot both be set".into(),
            ));
        }
        if self.replace_ind && self.append_ind {
            return Err(Error::InvalidConfig(
                "replaceind and appendind cannot both be set".into(),
            ));
        }
        if let Some(k) = self.indkeep {
            if k == 0 {
                return Err(Error::InvalidConfig("indkeep must be at least 1".into()));
            }
            if self.indsave.is_none() {
                return Err(Error::InvalidConfig("indkeep requires indsave()".into()));
            }
        }
        Ok(())
    }
}
