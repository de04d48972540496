//! Synthetic choice data with known parameters, for end-to-end checks.
//!
//! Covariates are i.i.d. standard normal, individual coefficients are drawn
//! from the population normal, and choices follow the exact logit
//! probabilities under the preference- or WTP-space utility. The true
//! parameters ride along so a fit can be checked against them.

use std::path::Path;

use nalgebra::DVector;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{ChoiceDataset, ChoiceRow};
use crate::dist::{MvnDensity, Purpose, RngStream, SpdMatrix};
use crate::error::{Error, Result};
use crate::sampler::ModelSpec;

/// Shape and truth of a simulated dataset.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub n_persons: usize,
    pub n_occasions: usize,
    pub n_alts: usize,
    /// Population means. In WTP mode the first entry is the price
    /// parameter (the price coefficient is `-exp` of it).
    pub b: Vec<f64>,
    /// Population covariance, row by row.
    pub w: Vec<Vec<f64>>,
    /// Fixed coefficients; may be empty.
    pub alpha: Vec<f64>,
    pub wtp: bool,
    pub seed: u64,
}

impl SimConfig {
    pub fn preference(
        n_persons: usize,
        n_occasions: usize,
        n_alts: usize,
        b: Vec<f64>,
        w: Vec<Vec<f64>>,
        alpha: Vec<f64>,
        seed: u64,
    ) -> Self {
        Self {
            n_persons,
            n_occasions,
            n_alts,
            b,
            w,
            alpha,
            wtp: false,
            seed,
        }
    }

    /// Variable names in dataset order: random covariates `x1..`, fixed
    /// covariates `z1..`, with the price column first in WTP mode.
    pub fn variable_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        let k_covs = if self.wtp {
            names.push("price".to_string());
            self.b.len() - 1
        } else {
            self.b.len()
        };
        names.extend((1..=k_covs).map(|i| format!("x{i}")));
        names.extend((1..=self.alpha.len()).map(|i| format!("z{i}")));
        names
    }

    /// The model spec matching this dataset's layout.
    pub fn model_spec(&self) -> Result<ModelSpec> {
        let names = self.variable_names();
        let k_rand = self.b.len();
        let spec = ModelSpec {
            depvar: "choice".into(),
            group_var: "gid".into(),
            id_var: "pid".into(),
            rand_vars: names[..k_rand].to_vec(),
            fixed_vars: names[k_rand..].to_vec(),
            price_var: self.wtp.then(|| "price".to_string()),
        };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        if self.n_alts < 2 {
            return Err(Error::InvalidArgument(
                "need at least 2 alternatives per occasion".into(),
            ));
        }
        if self.n_persons == 0 || self.n_occasions == 0 {
            return Err(Error::InvalidArgument(
                "persons and occasions must be positive".into(),
            ));
        }
        if self.b.is_empty() {
            return Err(Error::InvalidArgument(
                "at least one random coefficient is required".into(),
            ));
        }
        if self.w.len() != self.b.len() || self.w.iter().any(|r| r.len() != self.b.len()) {
            return Err(Error::InvalidArgument(
                "covariance shape must match the random coefficient count".into(),
            ));
        }
        if self.wtp && self.b.is_empty() {
            return Err(Error::InvalidArgument(
                "WTP simulation needs the price parameter in b".into(),
            ));
        }
        Ok(())
    }

    fn w_matrix(&self) -> Result<SpdMatrix> {
        let k = self.b.len();
        let m = nalgebra::DMatrix::from_fn(k, k, |i, j| self.w[i][j]);
        SpdMatrix::from_matrix(m)
    }
}

/// True parameters written alongside a simulated file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimTruth {
    pub b: Vec<f64>,
    pub w: Vec<Vec<f64>>,
    pub alpha: Vec<f64>,
    pub wtp: bool,
    pub seed: u64,
    pub n_persons: usize,
    pub n_occasions: usize,
    pub n_alts: usize,
    pub depvar: String,
    pub group_var: String,
    pub id_var: String,
    pub rand_vars: Vec<String>,
    pub fixed_vars: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub price_var: Option<String>,
}

/// Generate a dataset in memory.
pub fn simulate_dataset(config: &SimConfig) -> Result<ChoiceDataset> {
    config.validate()?;
    let k_rand = config.b.len();
    let k_fixed = config.alpha.len();
    let n_covs = if config.wtp { k_rand - 1 } else { k_rand };
    let population = MvnDensity::new(DVector::from_vec(config.b.clone()), &config.w_matrix()?)?;

    let mut rows = Vec::with_capacity(config.n_persons * config.n_occasions * config.n_alts);
    for person in 1..=config.n_persons {
        let mut rng = RngStream::for_person(config.seed, Purpose::Simulate, 0, person as i64);
        let beta = population.sample(&mut rng);
        for occasion in 1..=config.n_occasions {
            let gid = ((person - 1) * config.n_occasions + occasion) as i64;
            // Covariates for every alternative, then utilities.
            let mut covs: Vec<Vec<f64>> = Vec::with_capacity(config.n_alts);
            let mut utilities = Vec::with_capacity(config.n_alts);
            for _ in 0..config.n_alts {
                let mut row_covs = Vec::with_capacity(n_covs + k_fixed + usize::from(config.wtp));
                if config.wtp {
                    row_covs.push(StandardNormal.sample(&mut rng));
                }
                for _ in 0..n_covs {
                    row_covs.push(StandardNormal.sample(&mut rng));
                }
                for _ in 0..k_fixed {
                    row_covs.push(StandardNormal.sample(&mut rng));
                }
                let u = if config.wtp {
                    let price = row_covs[0];
                    let wtp_value: f64 = row_covs[1..=n_covs]
                        .iter()
                        .zip(&beta.as_slice()[1..])
                        .map(|(x, c)| x * c)
                        .sum::<f64>()
                        + row_covs[n_covs + 1..]
                            .iter()
                            .zip(&config.alpha)
                            .map(|(z, a)| z * a)
                            .sum::<f64>()
                        - price;
                    beta[0].exp() * wtp_value
                } else {
                    row_covs[..n_covs]
                        .iter()
                        .zip(beta.as_slice())
                        .map(|(x, c)| x * c)
                        .sum::<f64>()
                        + row_covs[n_covs..]
                            .iter()
                            .zip(&config.alpha)
                            .map(|(z, a)| z * a)
                            .sum::<f64>()
                };
                covs.push(row_covs);
                utilities.push(u);
            }
            // Exact logit choice.
            let max_u = utilities.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let weights: Vec<f64> = utilities.iter().map(|u| (u - max_u).exp()).collect();
            let total: f64 = weights.iter().sum();
            let mut pick = rng.random::<f64>() * total;
            let mut chosen = config.n_alts - 1;
            for (j, w) in weights.iter().enumerate() {
                if pick < *w {
                    chosen = j;
                    break;
                }
                pick -= w;
            }
            for (j, row_covs) in covs.into_iter().enumerate() {
                rows.push(ChoiceRow {
                    group_id: gid,
                    person_id: person as i64,
                    chosen: j == chosen,
                    covariates: row_covs,
                });
            }
        }
    }
    ChoiceDataset::from_rows(config.variable_names(), rows)
}

/// Simulate and write the dataset as CSV, with the true parameters in a
/// `<name>.truth.json` sidecar. Returns the truth bundle.
pub fn simulate_to_csv(config: &SimConfig, path: &Path) -> Result<SimTruth> {
    let data = simulate_dataset(config)?;
    let spec = config.model_spec()?;

    let mut writer = csv::Writer::from_path(path)?;
    let mut header = vec!["pid".to_string(), "gid".to_string(), "choice".to_string()];
    header.extend(data.variable_names.iter().cloned());
    writer.write_record(&header)?;
    for row in &data.rows {
        let mut record = vec![
            row.person_id.to_string(),
            row.group_id.to_string(),
            if row.chosen { "1" } else { "0" }.to_string(),
        ];
        record.extend(row.covariates.iter().map(|&v| crate::results::fmt_sig9(v)));
        writer.write_record(&record)?;
    }
    writer.flush()?;

    let truth = SimTruth {
        b: config.b.clone(),
        w: config.w.clone(),
        alpha: config.alpha.clone(),
        wtp: config.wtp,
        seed: config.seed,
        n_persons: config.n_persons,
        n_occasions: config.n_occasions,
        n_alts: config.n_alts,
        depvar: spec.depvar.clone(),
        group_var: spec.group_var.clone(),
        id_var: spec.id_var.clone(),
        rand_vars: spec.rand_vars.clone(),
        fixed_vars: spec.fixed_vars.clone(),
        price_var: spec.price_var.clone(),
    };
    let sidecar = path.with_extension("truth.json");
    let file = std::fs::File::create(&sidecar)?;
    serde_json::to_writer_pretty(std::io::BufWriter::new(file), &truth)
        .map_err(|e| Error::InvalidArgument(format!("truth serialization: {e}")))?;
    Ok(truth)
}
