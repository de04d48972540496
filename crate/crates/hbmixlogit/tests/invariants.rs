//! Property tests over the pure building blocks.

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use hbmixlogit::data::{case_to_alternatives, CaseTable};
use hbmixlogit::dist::SpdMatrix;
use hbmixlogit::results::{cov_column_names, summarize_draws, DrawStore};
use hbmixlogit::sampler::occasion_choice_logprob;

proptest! {
    /// L L' reconstructs random SPD matrices built as M'M + I.
    #[test]
    fn cholesky_reconstructs_random_spd(
        dim in 1usize..8,
        seed in proptest::collection::vec(-1.0f64..1.0, 64),
    ) {
        let m = DMatrix::from_fn(dim, dim, |i, j| seed[(i * dim + j) % seed.len()]);
        let a = m.transpose() * &m + DMatrix::identity(dim, dim);
        let spd = SpdMatrix::from_matrix(a.clone()).unwrap();
        let l = spd.cholesky().unwrap();
        let back = &l * l.transpose();
        let scale = a.amax();
        for (x, y) in back.iter().zip(a.iter()) {
            prop_assert!((x - y).abs() <= 1e-10 * scale);
        }
    }

    /// Softmax probabilities derived from the occasion log probability sum
    /// to one, and shifting all utilities leaves each one unchanged.
    #[test]
    fn occasion_logprob_is_a_distribution(
        utilities in proptest::collection::vec(-30.0f64..30.0, 2..7),
        shift in -100.0f64..100.0,
    ) {
        let total: f64 = (0..utilities.len())
            .map(|j| occasion_choice_logprob(&utilities, j).exp())
            .sum();
        prop_assert!((total - 1.0).abs() < 1e-10, "total {total}");

        let shifted: Vec<f64> = utilities.iter().map(|u| u + shift).collect();
        for j in 0..utilities.len() {
            let a = occasion_choice_logprob(&utilities, j);
            let b = occasion_choice_logprob(&shifted, j);
            prop_assert!((a - b).abs() < 1e-9 * (1.0 + a.abs()));
        }
    }

    /// Retained-count arithmetic: the kept-pass rule yields exactly
    /// floor((draws - burn) / thin) indexes.
    #[test]
    fn retention_rule_matches_floor_formula(
        draws in 1usize..5000,
        burn_frac in 0.0f64..1.0,
        thin in 1usize..20,
    ) {
        let burn = ((draws as f64) * burn_frac) as usize;
        prop_assume!(burn < draws);
        let kept = (1..=draws)
            .filter(|t| *t > burn && (*t - burn).is_multiple_of(thin))
            .count();
        prop_assert_eq!(kept, (draws - burn) / thin);
    }

    /// Covariance names: K(K+1)/2 of them, variances on the block
    /// diagonal positions.
    #[test]
    fn cov_names_count_and_prefixes(k in 1usize..10) {
        let names: Vec<String> = (0..k).map(|i| format!("v{i}")).collect();
        let cov = cov_column_names(&names);
        prop_assert_eq!(cov.len(), k * (k + 1) / 2);
        let mut at = 0;
        for i in 0..k {
            prop_assert!(cov[at].starts_with("var_"));
            at += k - i;
        }
    }

    /// The summary table is invariant to row order, so a jumbled draw file
    /// summarizes identically at display precision.
    #[test]
    fn summaries_ignore_row_order(
        values in proptest::collection::vec(-5.0f64..5.0, 4..60),
        rotate in 0usize..50,
    ) {
        let store = |vals: &[f64]| DrawStore {
            column_names: vec!["x".into(), "fun_val".into(), "t".into()],
            rows: vals
                .iter()
                .enumerate()
                .map(|(i, &v)| vec![v, 0.0, (i + 1) as f64])
                .collect(),
        };
        let mut rotated = values.clone();
        rotated.rotate_left(rotate % values.len());
        let a = &summarize_draws(&store(&values)).unwrap()[0];
        let b = &summarize_draws(&store(&rotated)).unwrap()[0];
        prop_assert!((a.mean - b.mean).abs() <= 1e-10 * (1.0 + a.mean.abs()));
        prop_assert!((a.sd - b.sd).abs() <= 1e-10 * (1.0 + a.sd));
    }

    /// Case expansion always yields (K-1)(1 + #casevars) generated columns
    /// and K rows per case, whatever the level labels.
    #[test]
    fn case_expansion_counts(
        n_levels in 2usize..5,
        n_vars in 0usize..4,
        n_cases in 1usize..12,
        pick in proptest::collection::vec(0usize..5, 12),
    ) {
        let levels: Vec<String> = (0..n_levels).map(|i| format!("L{i}")).collect();
        let var_names: Vec<String> = (0..n_vars).map(|i| format!("cv{i}")).collect();
        let mut column_names = vec!["choice".to_string()];
        column_names.extend(var_names.clone());
        let rows: Vec<Vec<String>> = (0..n_cases)
            .map(|i| {
                let mut row = vec![levels[pick[i % pick.len()] % n_levels].clone()];
                row.extend((0..n_vars).map(|v| format!("{}", (i + v) as f64 * 0.5)));
                row
            })
            .collect();
        // Every level must occur at least once for the level set to be
        // complete; seed the first rows accordingly.
        let mut rows = rows;
        for (i, level) in levels.iter().enumerate() {
            if i < rows.len() {
                rows[i][0] = level.clone();
            } else {
                let mut row = vec![level.clone()];
                row.extend((0..n_vars).map(|v| format!("{}", v as f64)));
                rows.push(row);
            }
        }
        let table = CaseTable { column_names, rows };
        let converted =
            case_to_alternatives(&table, "choice", &var_names, "picked", None).unwrap();
        prop_assert_eq!(converted.generated.len(), (n_levels - 1) * (1 + n_vars));
        prop_assert_eq!(converted.table.rows.len(), table.rows.len() * n_levels);
    }

    /// Population-density evaluation agrees with the dense-inverse formula
    /// on random 2x2 covariances.
    #[test]
    fn mvn_matches_dense_inverse(
        v1 in 0.1f64..4.0,
        v2 in 0.1f64..4.0,
        rho in -0.9f64..0.9,
        x1 in -3.0f64..3.0,
        x2 in -3.0f64..3.0,
    ) {
        let cov_m = nalgebra::dmatrix![
            v1, rho * (v1 * v2).sqrt();
            rho * (v1 * v2).sqrt(), v2
        ];
        let cov = SpdMatrix::from_matrix(cov_m.clone()).unwrap();
        let x = DVector::from_vec(vec![x1, x2]);
        let mean = DVector::zeros(2);
        let got = hbmixlogit::dist::mvn_logpdf(&x, &mean, &cov).unwrap();
        let inv = cov_m.clone().try_inverse().unwrap();
        let quad = (x.transpose() * inv * &x)[(0, 0)];
        let want = -0.5
            * (2.0 * (2.0 * std::f64::consts::PI).ln() + cov_m.determinant().ln() + quad);
        prop_assert!((got - want).abs() < 1e-10, "{got} vs {want}");
    }
}
