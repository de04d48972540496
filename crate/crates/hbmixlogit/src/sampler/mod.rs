//! The hierarchical Bayes Gibbs driver.
//!
//! Individual coefficient sets follow a normal population distribution,
//! `beta_n ~ N(b, W)`, with a diffuse prior on `b` and an identity-scale
//! inverse Wishart prior on `W`. Each pass updates, in order:
//!
//! 1. every `beta_n` by adaptive Metropolis against its choice likelihood
//!    times the population density (layers independent across persons given
//!    `(b, W, alpha)`, so they run in parallel on keyed streams),
//! 2. `b` from its conjugate normal `N(mean(beta), W/N)`,
//! 3. `W` from its conjugate inverse Wishart,
//! 4. the fixed coefficients `alpha` by adaptive Metropolis against the
//!    pooled likelihood under a flat prior.
//!
//! Burn-in, thinning, and an optional jumble permutation are applied to the
//! recorded draws after the loop.

mod config;
mod likelihood;

pub use config::{ModelSpec, SamplerConfig};
pub use likelihood::occasion_choice_logprob;

use std::collections::VecDeque;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;

use crate::amcmc::{AdaptiveKernel, LogTarget};
use crate::clogit::clogit_fit;
use crate::data::{build_index, ChoiceDataset};
use crate::dist::{invwishart_sample, MvnDensity, Purpose, RngStream, SpdMatrix, StreamKey};
use crate::error::{Error, Result};
use crate::results::{cov_column_names, DrawStore};

use likelihood::{person_loglik, prepare_persons, PersonData};

/// Chain state after a run: population parameters plus the kernels holding
/// each person's coefficients and adaptation history.
#[derive(Debug, Clone)]
pub struct ChainState {
    /// Population means of the random coefficients.
    pub b: DVector<f64>,
    /// Population covariance of the random coefficients.
    pub w: SpdMatrix,
    /// Fixed coefficients (empty when the model has none).
    pub alpha: DVector<f64>,
    /// One adaptive kernel per decision maker, in identifier order.
    pub person_kernels: Vec<AdaptiveKernel>,
    /// Kernel for the fixed block, when there is one.
    pub alpha_kernel: Option<AdaptiveKernel>,
    /// Completed passes.
    pub iteration: usize,
}

impl ChainState {
    /// Individual coefficients of person `n`.
    pub fn beta(&self, n: usize) -> &DVector<f64> {
        self.person_kernels[n].current()
    }

    pub fn n_persons(&self) -> usize {
        self.person_kernels.len()
    }
}

/// Header statistics and acceptance summary for a completed run.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub observations: usize,
    /// Decision makers (the displayed "Groups" count).
    pub groups: usize,
    /// Choice occasions.
    pub choices: usize,
    pub total_draws: usize,
    pub burn: usize,
    pub thin: usize,
    /// Cumulative acceptance rate of the fixed block; `None` without fixed
    /// coefficients.
    pub arate_fixed: Option<f64>,
    pub arate_random_ave: f64,
    pub arate_random_min: f64,
    pub arate_random_max: f64,
    /// Joint log posterior choice probability at the end of every pass.
    pub ln_fc: Vec<f64>,
}

/// Retained draws of the individual-level coefficients.
#[derive(Debug, Clone)]
pub struct IndividualDraws {
    pub person_ids: Vec<i64>,
    pub rand_names: Vec<String>,
    /// `(retained draw index, person x coefficient values)`, oldest first.
    pub draws: Vec<(usize, Vec<Vec<f64>>)>,
}

/// Starting point of a run, kept for the stored-results export.
#[derive(Debug, Clone)]
pub struct StartingValues {
    pub b: Vec<f64>,
    pub alpha: Vec<f64>,
    pub w: SpdMatrix,
    /// Whether the values came from a conditional logit fit (as opposed to
    /// an explicit `from` vector).
    pub from_clogit: bool,
}

/// Everything a run produces.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub draws: DrawStore,
    pub report: RunReport,
    pub state: ChainState,
    pub individual: Option<IndividualDraws>,
    pub start: StartingValues,
    /// Decision-maker identifiers, in the order the kernels are stored.
    pub person_ids: Vec<i64>,
}

/// Conjugate update of the population mean under the flat prior:
/// `b ~ N(mean of beta rows, W/N)`.
pub fn gibbs_layer_b(
    betas: &[DVector<f64>],
    w: &SpdMatrix,
    rng: &mut RngStream,
) -> Result<DVector<f64>> {
    let n = betas.len();
    if n == 0 {
        return Err(Error::InvalidArgument("no coefficient sets".into()));
    }
    let dim = w.dim();
    let mut mean = DVector::zeros(dim);
    for beta in betas {
        mean += beta;
    }
    mean /= n as f64;
    MvnDensity::new(mean, &w.scale(1.0 / n as f64)?).map(|d| d.sample(rng))
}

/// Conjugate update of the population covariance under the identity-scale
/// inverse Wishart prior with `dim` prior degrees of freedom:
/// `W ~ IW(dim + N, I + sum (beta_n - b)(beta_n - b)')`.
pub fn gibbs_layer_w(
    betas: &[DVector<f64>],
    b: &DVector<f64>,
    rng: &mut RngStream,
) -> Result<SpdMatrix> {
    let n = betas.len();
    if n == 0 {
        return Err(Error::InvalidArgument("no coefficient sets".into()));
    }
    let dim = b.len();
    let mut scale = DMatrix::identity(dim, dim);
    for beta in betas {
        let d = beta - b;
        scale += &d * d.transpose();
    }
    invwishart_sample((dim + n) as f64, &SpdMatrix::from_matrix(scale)?, rng)
}

/// Log target of one person's coefficients: choice log likelihood plus the
/// population log density.
struct PersonTarget<'a> {
    person: &'a PersonData,
    alpha: &'a DVector<f64>,
    prior: &'a MvnDensity,
    wtp: bool,
}

impl LogTarget for PersonTarget<'_> {
    fn log_density(&self, beta: &DVector<f64>) -> f64 {
        let ll = person_loglik(self.person, beta, self.alpha, self.wtp);
        if ll == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        ll + self.prior.logpdf(beta)
    }
}

/// Log target of the fixed block under a flat prior: the pooled choice log
/// likelihood at the current individual coefficients.
struct AlphaTarget<'a> {
    persons: &'a [PersonData],
    betas: &'a [DVector<f64>],
    wtp: bool,
}

impl LogTarget for AlphaTarget<'_> {
    fn log_density(&self, alpha: &DVector<f64>) -> f64 {
        pooled_loglik(self.persons, self.betas, alpha, self.wtp)
    }
}

/// Sum of person log likelihoods, evaluated in parallel and reduced in
/// person order so results do not depend on the thread count.
fn pooled_loglik(
    persons: &[PersonData],
    betas: &[DVector<f64>],
    alpha: &DVector<f64>,
    wtp: bool,
) -> f64 {
    let parts: Vec<f64> = persons
        .par_iter()
        .zip(betas.par_iter())
        .map(|(p, beta)| person_loglik(p, beta, alpha, wtp))
        .collect();
    parts.iter().sum()
}

fn starting_values(
    data: &ChoiceDataset,
    spec: &ModelSpec,
    config: &SamplerConfig,
) -> Result<StartingValues> {
    let k_rand = spec.k_rand();
    let w = config
        .from_variance
        .clone()
        .unwrap_or_else(|| SpdMatrix::identity(k_rand));

    if let Some(from) = &config.from {
        return Ok(StartingValues {
            b: from[..k_rand].to_vec(),
            alpha: from[k_rand..].to_vec(),
            w,
            from_clogit: false,
        });
    }

    let vars = spec.data_vars();
    let fit = clogit_fit(data, &vars)?;
    if !fit.converged {
        eprintln!(
            "warning: conditional logit for starting values did not converge \
             (gradient norm {:.3e}); starting from its last iterate",
            fit.gradient_norm
        );
    }
    let coefs = fit.coefficients.as_slice();
    let (b, alpha) = if spec.is_wtp() {
        // The pooled fit estimates the price column's coefficient directly;
        // the chain parameterizes it as -exp(b). Start b at the log of its
        // magnitude and put every other coefficient in price units.
        let price_coef = coefs[0].abs().max(0.01);
        let mut b = vec![price_coef.ln()];
        b.extend(coefs[1..k_rand].iter().map(|c| c / price_coef));
        let alpha = coefs[k_rand..].iter().map(|c| c / price_coef).collect();
        (b, alpha)
    } else {
        (coefs[..k_rand].to_vec(), coefs[k_rand..].to_vec())
    };
    Ok(StartingValues {
        b,
        alpha,
        w,
        from_clogit: true,
    })
}

/// Whether 1-based pass `t` survives burn-in and thinning.
fn is_retained(t: usize, burn: usize, thin: usize) -> bool {
    t > burn && (t - burn).is_multiple_of(thin)
}

/// Run the chain and return retained draws, the run report, the final
/// state, and (when requested) the individual-level draw history.
pub fn run_chain(
    data: &ChoiceDataset,
    spec: &ModelSpec,
    config: &SamplerConfig,
) -> Result<RunOutput> {
    spec.validate()?;
    config.validate(spec)?;
    let expected_vars = spec.data_vars();
    if data.variable_names != expected_vars {
        return Err(Error::InvalidConfig(format!(
            "dataset columns {:?} do not match the model layout {:?}",
            data.variable_names, expected_vars
        )));
    }

    let index = build_index(data);
    let persons = prepare_persons(data, &index, spec);
    let k_rand = spec.k_rand();
    let k_fixed = spec.k_fixed();
    let wtp = spec.is_wtp();
    let seed = config.seed;

    let start = starting_values(data, spec, config)?;
    let b0 = DVector::from_vec(start.b.clone());
    let mut b = b0.clone();
    let mut w = start.w.clone();
    let mut alpha = DVector::from_vec(start.alpha.clone());

    let mut person_kernels: Vec<AdaptiveKernel> = persons
        .iter()
        .map(|_| {
            AdaptiveKernel::new(
                config.sampler_random,
                b0.clone(),
                config.arate_random,
                config.damp_random,
            )
            .with_initial_cov(start.w.matrix().clone())
        })
        .collect();
    let mut alpha_kernel = (k_fixed > 0).then(|| {
        AdaptiveKernel::new(
            config.sampler_fixed,
            alpha.clone(),
            config.arate_fixed,
            config.damp_fixed,
        )
    });

    let retained = config.retained();
    let ind_keep = config
        .indsave
        .as_ref()
        .map(|_| config.indkeep.unwrap_or(retained).min(retained));
    let mut ind_history: VecDeque<(usize, Vec<Vec<f64>>)> =
        VecDeque::with_capacity(ind_keep.unwrap_or(0));

    let value_columns = k_rand + k_rand * (k_rand + 1) / 2 + k_fixed;
    let mut retained_rows: Vec<Vec<f64>> = Vec::with_capacity(retained);
    let mut ln_fc = Vec::with_capacity(config.draws);

    for t in 1..=config.draws {
        // Individual coefficients, in parallel on person-keyed streams.
        let prior = MvnDensity::new(b.clone(), &w)?;
        person_kernels
            .par_iter_mut()
            .zip(persons.par_iter())
            .try_for_each(|(kernel, person)| {
                let mut rng =
                    RngStream::for_person(seed, Purpose::BetaLayer, t as u64, person.person_id);
                kernel.run(
                    &PersonTarget {
                        person,
                        alpha: &alpha,
                        prior: &prior,
                        wtp,
                    },
                    config.draws_random,
                    &mut rng,
                )
            })?;
        let betas: Vec<DVector<f64>> = person_kernels.iter().map(|k| k.current().clone()).collect();

        // Population mean and covariance.
        let mut rng_b = RngStream::new(seed, StreamKey::new(Purpose::MeanLayer, t as u64, 0));
        b = gibbs_layer_b(&betas, &w, &mut rng_b)?;
        let mut rng_w = RngStream::new(seed, StreamKey::new(Purpose::CovLayer, t as u64, 0));
        w = gibbs_layer_w(&betas, &b, &mut rng_w)?;

        // Fixed coefficients.
        if let Some(kernel) = alpha_kernel.as_mut() {
            let mut rng = RngStream::new(seed, StreamKey::new(Purpose::AlphaLayer, t as u64, 0));
            kernel.run(
                &AlphaTarget {
                    persons: &persons,
                    betas: &betas,
                    wtp,
                },
                config.draws_fixed,
                &mut rng,
            )?;
            alpha = kernel.current().clone();
        }

        let fun_val = pooled_loglik(&persons, &betas, &alpha, wtp);
        ln_fc.push(fun_val);

        if is_retained(t, config.burn, config.thin) {
            let mut row = Vec::with_capacity(value_columns + 2);
            row.extend(b.iter());
            for i in 0..k_rand {
                for j in i..k_rand {
                    row.push(w.matrix()[(i, j)]);
                }
            }
            row.extend(alpha.iter());
            row.push(fun_val);
            row.push(0.0); // retained index assigned below
            retained_rows.push(row);

            if let Some(keep) = ind_keep {
                if ind_history.len() == keep {
                    ind_history.pop_front();
                }
                ind_history.push_back((
                    retained_rows.len(),
                    betas.iter().map(|v| v.as_slice().to_vec()).collect(),
                ));
            }
        }

        if config.noisy {
            let mut err = std::io::stderr().lock();
            let _ = write!(err, ".");
            if t.is_multiple_of(50) {
                let _ = writeln!(err, "\nln_fc(p) = {fun_val:.6}");
            }
            let _ = err.flush();
        }
    }
    if config.noisy {
        let _ = writeln!(std::io::stderr().lock());
    }

    debug_assert_eq!(retained_rows.len(), retained);
    let t_col = value_columns + 1;
    for (i, row) in retained_rows.iter_mut().enumerate() {
        row[t_col] = (i + 1) as f64;
    }
    if config.jumble {
        let mut rng = RngStream::new(seed, StreamKey::new(Purpose::Jumble, 0, 0));
        for i in (1..retained_rows.len()).rev() {
            let j = rng.random_range(0..=i);
            retained_rows.swap(i, j);
        }
    }

    let mut column_names = spec.rand_vars.clone();
    column_names.extend(cov_column_names(&spec.rand_vars));
    column_names.extend(spec.fixed_vars.iter().cloned());
    column_names.push("fun_val".into());
    column_names.push("t".into());
    let draws = DrawStore {
        column_names,
        rows: retained_rows,
    };

    let person_rates: Vec<f64> = person_kernels.iter().map(|k| k.acceptance_rate()).collect();
    let report = RunReport {
        observations: index.n_observations,
        groups: index.n_persons,
        choices: index.n_choices,
        total_draws: config.draws,
        burn: config.burn,
        thin: config.thin,
        arate_fixed: alpha_kernel.as_ref().map(|k| k.acceptance_rate()),
        arate_random_ave: person_rates.iter().sum::<f64>() / person_rates.len() as f64,
        arate_random_min: person_rates.iter().cloned().fold(f64::INFINITY, f64::min),
        arate_random_max: person_rates
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max),
        ln_fc,
    };

    let person_ids: Vec<i64> = persons.iter().map(|p| p.person_id).collect();
    let individual = ind_keep.map(|_| IndividualDraws {
        person_ids: person_ids.clone(),
        rand_names: spec.rand_vars.clone(),
        draws: ind_history.into_iter().collect(),
    });

    Ok(RunOutput {
        draws,
        report,
        state: ChainState {
            b,
            w,
            alpha,
            person_kernels,
            alpha_kernel,
            iteration: config.draws,
        },
        individual,
        start,
        person_ids,
    })
}
