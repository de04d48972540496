//! Choice-probability kernels and the per-person data layout used by the
//! Gibbs layers.

use nalgebra::DVector;

use crate::data::{ChoiceDataset, ChoiceIndex};
use crate::sampler::ModelSpec;

/// Log probability of the chosen alternative under a logit with the given
/// utilities: `u_chosen - logsumexp(u)`, overflow-safe.
pub fn occasion_choice_logprob(utilities: &[f64], chosen: usize) -> f64 {
    debug_assert!(utilities.len() >= 2);
    let max_u = utilities.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = utilities.iter().map(|u| (u - max_u).exp()).sum();
    utilities[chosen] - max_u - sum.ln()
}

/// One alternative, with covariates split by coefficient block.
#[derive(Debug, Clone)]
pub(crate) struct AltRow {
    /// Random-block covariates. In WTP mode these are the non-price
    /// variables (the price parameter has no covariate of its own).
    pub rand: Vec<f64>,
    /// Fixed-block covariates.
    pub fixed: Vec<f64>,
    /// Price value; 0 and unused in preference space.
    pub price: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct OccasionData {
    pub alternatives: Vec<AltRow>,
    /// Position of the chosen alternative within `alternatives`.
    pub chosen: usize,
}

/// All occasions of one decision maker, laid out for repeated likelihood
/// evaluation.
#[derive(Debug, Clone)]
pub(crate) struct PersonData {
    pub person_id: i64,
    pub occasions: Vec<OccasionData>,
}

/// Split the dataset into per-person blocks following the model layout.
pub(crate) fn prepare_persons(
    data: &ChoiceDataset,
    index: &ChoiceIndex,
    spec: &ModelSpec,
) -> Vec<PersonData> {
    let k_rand = spec.k_rand();
    let k_fixed = spec.k_fixed();
    let wtp = spec.is_wtp();
    // Covariate storage order is the random block then the fixed block; in
    // WTP mode slot 0 of the random block holds the price column.
    let rand_range = if wtp { 1..k_rand } else { 0..k_rand };
    let fixed_range = k_rand..(k_rand + k_fixed);

    index
        .persons
        .iter()
        .map(|person| PersonData {
            person_id: person.person_id,
            occasions: person
                .occasions
                .iter()
                .map(|occ| OccasionData {
                    chosen: occ.chosen_row - occ.rows.start,
                    alternatives: data.rows[occ.rows.clone()]
                        .iter()
                        .map(|row| AltRow {
                            rand: row.covariates[rand_range.clone()].to_vec(),
                            fixed: row.covariates[fixed_range.clone()].to_vec(),
                            price: if wtp { row.covariates[0] } else { 0.0 },
                        })
                        .collect(),
                })
                .collect(),
        })
        .collect()
}

fn dot(xs: &[f64], coefs: &[f64]) -> f64 {
    xs.iter().zip(coefs).map(|(x, c)| x * c).sum()
}

/// Joint log choice probability of one person's occasions at individual
/// coefficients `beta` and fixed coefficients `alpha`.
///
/// Preference space: the utility of an alternative is
/// `x_rand . beta + x_fixed . alpha`. WTP space: the first coordinate of
/// `beta` is the price parameter `b`, and the utility is
/// `exp(b) * (x_rand . beta[1..] + x_fixed . alpha - price)`, i.e. the
/// price column carries coefficient `-exp(b)` and every other coefficient
/// is measured in price units.
///
/// Returns `-inf` when a utility overflows, so Metropolis steps treat such
/// points as out of support.
pub(crate) fn person_loglik(
    person: &PersonData,
    beta: &DVector<f64>,
    alpha: &DVector<f64>,
    wtp: bool,
) -> f64 {
    let mut total = 0.0;
    let mut utilities: Vec<f64> = Vec::new();
    let beta_slice = beta.as_slice();
    let alpha_slice = alpha.as_slice();
    for occ in &person.occasions {
        utilities.clear();
        if wtp {
            let scale = beta_slice[0].exp();
            for alt in &occ.alternatives {
                let wtp_value =
                    dot(&alt.rand, &beta_slice[1..]) + dot(&alt.fixed, alpha_slice) - alt.price;
                utilities.push(scale * wtp_value);
            }
        } else {
            for alt in &occ.alternatives {
                utilities.push(dot(&alt.rand, beta_slice) + dot(&alt.fixed, alpha_slice));
            }
        }
        if utilities.iter().any(|u| !u.is_finite()) {
            return f64::NEG_INFINITY;
        }
        total += occasion_choice_logprob(&utilities, occ.chosen);
    }
    total
}
