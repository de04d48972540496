//! Conditional logit maximum likelihood.
//!
//! Used to produce starting values for the chain: one pooled fit over all
//! model variables, whose coefficients seed the random-coefficient means
//! and the fixed coefficients.

use nalgebra::{DMatrix, DVector};

use crate::data::ChoiceDataset;
use crate::dist::SpdMatrix;
use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 200;
const GRADIENT_TOL: f64 = 1e-6;

/// Result of a conditional logit fit.
#[derive(Debug, Clone)]
pub struct ClogitFit {
    pub names: Vec<String>,
    pub coefficients: DVector<f64>,
    pub loglik: f64,
    pub gradient_norm: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl ClogitFit {
    /// Coefficient on a named variable.
    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.coefficients[i])
    }
}

/// Log likelihood, gradient, and Hessian of the conditional logit at
/// `coefs`, over the given covariate columns.
///
/// Per occasion the contribution is `x_chosen . b - logsumexp(x_j . b)`;
/// utilities are max-subtracted before exponentiation.
pub fn clogit_loglik(
    data: &ChoiceDataset,
    var_cols: &[usize],
    coefs: &DVector<f64>,
) -> (f64, DVector<f64>, DMatrix<f64>) {
    let k = var_cols.len();
    assert_eq!(coefs.len(), k);
    let mut value = 0.0;
    let mut gradient = DVector::zeros(k);
    let mut hessian = DMatrix::zeros(k, k);

    let mut utilities: Vec<f64> = Vec::new();
    for range in data.occasion_ranges() {
        let rows = &data.rows[range];
        utilities.clear();
        utilities.extend(rows.iter().map(|r| {
            var_cols
                .iter()
                .enumerate()
                .map(|(i, &c)| r.covariates[c] * coefs[i])
                .sum::<f64>()
        }));
        let max_u = utilities.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut denom = 0.0;
        for u in utilities.iter_mut() {
            *u = (*u - max_u).exp();
            denom += *u;
        }

        let mut mean_x = DVector::zeros(k);
        let mut second = DMatrix::zeros(k, k);
        for (row, &expu) in rows.iter().zip(utilities.iter()) {
            let p = expu / denom;
            if row.chosen {
                value += (expu / denom).ln();
            }
            let x = DVector::from_iterator(k, var_cols.iter().map(|&c| row.covariates[c]));
            if row.chosen {
                gradient += &x;
            }
            mean_x += p * &x;
            second += p * &x * x.transpose();
        }
        gradient -= &mean_x;
        hessian -= second - &mean_x * mean_x.transpose();
    }
    (value, gradient, hessian)
}

/// Newton-Raphson fit from zero with step-halving.
///
/// Stops when the gradient norm falls below `1e-6 * (1 + |loglik|)` or
/// after 200 iterations. On separation or a singular Hessian the last
/// iterate is returned with `converged = false`; the chain may still start
/// there.
pub fn clogit_fit(data: &ChoiceDataset, vars: &[String]) -> Result<ClogitFit> {
    if vars.is_empty() {
        return Err(Error::InvalidArgument(
            "clogit needs at least one variable".into(),
        ));
    }
    let var_cols = vars
        .iter()
        .map(|v| {
            data.var_index(v)
                .ok_or_else(|| Error::MissingColumn(v.clone()))
        })
        .collect::<Result<Vec<_>>>()?;

    let k = vars.len();
    let mut beta = DVector::zeros(k);
    let (mut value, mut gradient, mut hessian) = clogit_loglik(data, &var_cols, &beta);
    let mut converged = false;
    let mut iterations = 0;

    for iter in 1..=MAX_ITERATIONS {
        iterations = iter;
        if gradient.norm() < GRADIENT_TOL * (1.0 + value.abs()) {
            converged = true;
            iterations = iter - 1;
            break;
        }
        // Solve (-H) d = g; -H is positive semidefinite by concavity.
        let neg_h = -&hessian;
        let direction = match SpdMatrix::from_matrix(neg_h)
            .and_then(|s| s.cholesky())
            .map(|l| solve_with_cholesky(&l, &gradient))
        {
            Ok(d) => d,
            Err(_) => break, // singular information: flat direction / separation
        };

        let mut step = 1.0;
        let mut advanced = false;
        for _ in 0..40 {
            let candidate = &beta + step * &direction;
            let (v, g, h) = clogit_loglik(data, &var_cols, &candidate);
            if v.is_finite() && v > value {
                beta = candidate;
                value = v;
                gradient = g;
                hessian = h;
                advanced = true;
                break;
            }
            step *= 0.5;
        }
        if !advanced {
            break;
        }
    }

    let gradient_norm = gradient.norm();
    if converged {
        debug_assert!(gradient_norm < GRADIENT_TOL * (1.0 + value.abs()));
    }
    Ok(ClogitFit {
        names: vars.to_vec(),
        coefficients: beta,
        loglik: value,
        gradient_norm,
        converged,
        iterations,
    })
}

fn solve_with_cholesky(l: &DMatrix<f64>, rhs: &DVector<f64>) -> DVector<f64> {
    let n = l.nrows();
    let mut y = DVector::zeros(n);
    for i in 0..n {
        let mut s = rhs[i];
        for j in 0..i {
            s -= l[(i, j)] * y[j];
        }
        y[i] = s / l[(i, i)];
    }
    let mut x = DVector::zeros(n);
    for i in (0..n).rev() {
        let mut s = y[i];
        for j in (i + 1)..n {
            s -= l[(j, i)] * x[j];
        }
        x[i] = s / l[(i, i)];
    }
    x
}
