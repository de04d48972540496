//! Draw summaries, persistence, and the stored-results export.
//!
//! Draw files are plain CSV: a header row, then one row per retained draw
//! with values written to 9 significant digits (reading a file back and
//! rewriting it reproduces it byte for byte). The stored-results bundle is
//! a flat JSON document keyed by the conventional result names.

mod table;

pub use table::{render_summary_body, render_table};

use std::fs::OpenOptions;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::dist::{student_t_quantile, student_t_tail};
use crate::error::{Error, Result};
use crate::sampler::{IndividualDraws, ModelSpec, RunOutput, SamplerConfig};

/// Retained posterior draws with named columns.
///
/// Column order: the random-coefficient means (price first in WTP mode),
/// the covariance upper triangle row by row (`var_x`, `cov_xy`, ...), the
/// fixed coefficients, `fun_val`, and the 1-based retained index `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct DrawStore {
    pub column_names: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl DrawStore {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.column_names.iter().position(|c| c == name)
    }

    /// Names of the parameter columns (everything except `fun_val`, `t`).
    pub fn value_column_names(&self) -> &[String] {
        &self.column_names[..self.column_names.len() - 2]
    }

    pub fn column(&self, idx: usize) -> impl Iterator<Item = f64> + '_ {
        self.rows.iter().map(move |r| r[idx])
    }
}

/// Covariance column names for a random block: for each variable in order,
/// its variance, then its covariance with every later variable.
pub fn cov_column_names(rand_names: &[String]) -> Vec<String> {
    let mut out = Vec::with_capacity(rand_names.len() * (rand_names.len() + 1) / 2);
    for (i, a) in rand_names.iter().enumerate() {
        out.push(format!("var_{a}"));
        for b in rand_names.iter().skip(i + 1) {
            out.push(format!("cov_{a}{b}"));
        }
    }
    out
}

/// One line of the summary table.
#[derive(Debug, Clone)]
pub struct SummaryRow {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    /// `mean / sd`; `None` when the column is constant.
    pub t_stat: Option<f64>,
    pub p_value: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
}

/// Per-column mean, spread, and t-based interval of the retained draws.
///
/// The standard deviation uses the `R - 1` divisor; the p-value and the 95%
/// interval use a Student-t with degrees of freedom equal to the retained
/// draw count. These are summary statistics of draws, not coefficient
/// estimates.
pub fn summarize_draws(store: &DrawStore) -> Result<Vec<SummaryRow>> {
    let r = store.rows.len();
    if r < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 retained draws to summarize, have {r}"
        )));
    }
    let df = r as u64;
    let q975 = student_t_quantile(0.975, df)?;
    let mut out = Vec::new();
    for (idx, name) in store.value_column_names().iter().enumerate() {
        let mean = store.column(idx).sum::<f64>() / r as f64;
        let ss: f64 = store.column(idx).map(|v| (v - mean) * (v - mean)).sum();
        let sd = (ss / (r as f64 - 1.0)).sqrt();
        let row = if sd > 0.0 {
            let t = mean / sd;
            SummaryRow {
                name: name.clone(),
                mean,
                sd,
                t_stat: Some(t),
                p_value: Some(student_t_tail(t, df)?),
                ci_low: Some(mean - q975 * sd),
                ci_high: Some(mean + q975 * sd),
            }
        } else {
            SummaryRow {
                name: name.clone(),
                mean,
                sd,
                t_stat: None,
                p_value: None,
                ci_low: None,
                ci_high: None,
            }
        };
        out.push(row);
    }
    Ok(out)
}

/// Format a value with 9 significant digits, compactly.
pub(crate) fn fmt_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let mag = x.abs().log10().floor() as i32;
    if !(-5..=14).contains(&mag) {
        return format!("{x:.8e}");
    }
    let decimals = (8 - mag).max(0) as usize;
    let s = format!("{x:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn write_rows<W: std::io::Write>(writer: &mut csv::Writer<W>, store: &DrawStore) -> Result<()> {
    for row in &store.rows {
        writer.write_record(row.iter().map(|&v| fmt_sig9(v)))?;
    }
    writer.flush()?;
    Ok(())
}

/// Persist a draw store as CSV.
///
/// An existing file is an error unless `replace` (overwrite) or `append`
/// (add rows; the header must match exactly) is set. Appending to a path
/// that does not exist yet creates it.
pub fn write_draw_file(store: &DrawStore, path: &Path, replace: bool, append: bool) -> Result<()> {
    write_named_csv(path, &store.column_names, store, replace, append)
}

fn write_named_csv(
    path: &Path,
    header: &[String],
    store: &DrawStore,
    replace: bool,
    append: bool,
) -> Result<()> {
    let exists = path.exists();
    if exists && !replace && !append {
        return Err(Error::FileExists(path.to_path_buf()));
    }
    if append && exists {
        let mut reader = csv::Reader::from_path(path)?;
        let found = reader.headers()?.iter().collect::<Vec<_>>().join(",");
        let expected = header.join(",");
        if found != expected {
            return Err(Error::AppendHeaderMismatch {
                path: path.to_path_buf(),
                expected,
                found,
            });
        }
        let file = OpenOptions::new().append(true).open(path)?;
        let mut writer = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(file);
        write_rows(&mut writer, store)?;
    } else {
        let mut writer = csv::Writer::from_path(path)?;
        writer.write_record(header)?;
        write_rows(&mut writer, store)?;
    }
    Ok(())
}

/// Read a draw file back into memory.
pub fn read_draw_file(path: &Path) -> Result<DrawStore> {
    let mut reader = csv::Reader::from_path(path)?;
    let column_names: Vec<String> = reader.headers()?.iter().map(|h| h.to_string()).collect();
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let row = record
            .iter()
            .enumerate()
            .map(|(c, cell)| {
                cell.trim().parse::<f64>().map_err(|_| Error::NonNumeric {
                    column: column_names.get(c).cloned().unwrap_or_default(),
                    record: i + 2,
                    value: cell.to_string(),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(DrawStore { column_names, rows })
}

/// How the columns of a draw file split into blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct DrawSchema {
    pub rand_names: Vec<String>,
    pub cov_names: Vec<String>,
    pub fixed_names: Vec<String>,
}

/// Validate that a store follows the draw-file schema and split its
/// columns: random means, covariance entries, fixed coefficients, then
/// `fun_val` and `t`.
pub fn split_draw_columns(store: &DrawStore) -> Result<DrawSchema> {
    let bad = |why: &str| Error::BadDrawSchema(PathBuf::new(), why.to_string());
    let names = &store.column_names;
    if names.len() < 4 {
        return Err(bad("too few columns"));
    }
    if names[names.len() - 2] != "fun_val" || names[names.len() - 1] != "t" {
        return Err(bad("last two columns must be fun_val and t"));
    }
    let value_names = &names[..names.len() - 2];
    let k_rand = value_names
        .iter()
        .position(|n| n.starts_with("var_"))
        .ok_or_else(|| bad("no var_* column found"))?;
    if k_rand == 0 {
        return Err(bad("no random-mean columns before the covariance block"));
    }
    let rand_names = value_names[..k_rand].to_vec();
    let want_cov = cov_column_names(&rand_names);
    let cov_end = k_rand + want_cov.len();
    if value_names.len() < cov_end || value_names[k_rand..cov_end] != want_cov[..] {
        return Err(bad("covariance columns do not match the random block"));
    }
    Ok(DrawSchema {
        rand_names,
        cov_names: want_cov,
        fixed_names: value_names[cov_end..].to_vec(),
    })
}

/// Write individual-level coefficient draws.
///
/// Long format (default): columns `id`, `t`, then one column per random
/// coefficient; one row per kept draw per person, grouped by person. Wide
/// format: one row per person, the identifier first, then every kept draw
/// of each coefficient (`<name>_1`, `<name>_2`, ...).
pub fn write_individual_draws(
    ind: &IndividualDraws,
    path: &Path,
    wide: bool,
    replace: bool,
    append: bool,
) -> Result<()> {
    let kept = ind.draws.len();
    let (header, rows): (Vec<String>, Vec<Vec<f64>>) = if wide {
        let mut header = vec!["id".to_string()];
        for name in &ind.rand_names {
            for k in 1..=kept {
                header.push(format!("{name}_{k}"));
            }
        }
        let rows = ind
            .person_ids
            .iter()
            .enumerate()
            .map(|(n, &id)| {
                let mut row = Vec::with_capacity(1 + kept * ind.rand_names.len());
                row.push(id as f64);
                for coef in 0..ind.rand_names.len() {
                    for (_, betas) in &ind.draws {
                        row.push(betas[n][coef]);
                    }
                }
                row
            })
            .collect();
        (header, rows)
    } else {
        let mut header = vec!["id".to_string(), "t".to_string()];
        header.extend(ind.rand_names.iter().cloned());
        let mut rows = Vec::with_capacity(kept * ind.person_ids.len());
        for (n, &id) in ind.person_ids.iter().enumerate() {
            for (t, betas) in &ind.draws {
                let mut row = Vec::with_capacity(2 + ind.rand_names.len());
                row.push(id as f64);
                row.push(*t as f64);
                row.extend(betas[n].iter().copied());
                rows.push(row);
            }
        }
        (header, rows)
    };
    let store = DrawStore {
        column_names: header.clone(),
        rows,
    };
    write_named_csv(path, &header, &store, replace, append)
}

/// Acceptance rates of the random coefficients: one value per person for a
/// global sampler, one row per person for mwg.
#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum RateMatrix {
    Vector(Vec<f64>),
    Matrix(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, Serialize)]
pub struct SampleInfo {
    pub count: usize,
    pub ids: Vec<i64>,
}

/// The stored-results bundle: scalars, macros, and matrices under their
/// conventional names, serialized as one flat JSON document.
#[derive(Debug, Clone, Serialize)]
pub struct StoredResults {
    // Scalars.
    #[serde(rename = "N")]
    pub n: usize,
    pub df_r: usize,
    pub krnd: usize,
    pub kfix: usize,
    pub draws: usize,
    pub burn: usize,
    pub thin: usize,
    pub random_draws: usize,
    pub fixed_draws: usize,
    pub damper_fixed: f64,
    pub damper_random: f64,
    pub opt_arate_fixed: f64,
    pub opt_arate_random: f64,
    #[serde(rename = "N_groups")]
    pub n_groups: usize,
    #[serde(rename = "N_choices")]
    pub n_choices: usize,
    pub arates_fa: Option<f64>,
    pub arates_ra: f64,
    pub arates_rmax: f64,
    pub arates_rmin: f64,
    pub inddraws: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub price_coef: Option<f64>,

    // Macros.
    pub cmd: String,
    pub depvar: String,
    pub indepvars: String,
    pub title: String,
    pub properties: String,
    pub saving: String,
    pub fixed_sampler: String,
    pub random_sampler: String,
    pub random: String,
    pub fixed: String,
    pub identifier: String,
    pub group: String,
    pub indsave: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pricevar: Option<String>,

    // Matrices.
    pub b: Vec<f64>,
    #[serde(rename = "V")]
    pub v: Vec<Vec<f64>>,
    #[serde(rename = "V_init")]
    pub v_init: Vec<Vec<f64>>,
    pub b_init: Vec<f64>,
    pub arates_fixed: Vec<f64>,
    pub arates_rand: RateMatrix,

    /// Stand-in for the estimation-sample marker: the decision makers used.
    pub sample: SampleInfo,
}

/// Assemble the stored results of a completed run.
pub fn export_stored_results(
    output: &RunOutput,
    spec: &ModelSpec,
    config: &SamplerConfig,
) -> Result<StoredResults> {
    let store = &output.draws;
    let report = &output.report;
    let r = store.rows.len();
    let p = store.value_column_names().len();

    let means: Vec<f64> = (0..p)
        .map(|idx| store.column(idx).sum::<f64>() / r as f64)
        .collect();
    let mut v = vec![vec![0.0; p]; p];
    if r >= 2 {
        for row in &store.rows {
            for i in 0..p {
                for j in 0..p {
                    v[i][j] += (row[i] - means[i]) * (row[j] - means[j]);
                }
            }
        }
        for line in v.iter_mut() {
            for entry in line.iter_mut() {
                *entry /= r as f64 - 1.0;
            }
        }
    }

    let w0 = output.start.w.matrix();
    let k_rand = spec.k_rand();
    let v_init = (0..k_rand)
        .map(|i| (0..k_rand).map(|j| w0[(i, j)]).collect())
        .collect();

    let person_rates: Vec<Vec<f64>> = output
        .state
        .person_kernels
        .iter()
        .map(|k| k.acceptance_rates())
        .collect();
    let arates_rand = if person_rates.first().is_some_and(|r| r.len() > 1) {
        RateMatrix::Matrix(person_rates)
    } else {
        RateMatrix::Vector(person_rates.into_iter().map(|r| r[0]).collect())
    };
    let arates_fixed = output
        .state
        .alpha_kernel
        .as_ref()
        .map(|k| k.acceptance_rates())
        .unwrap_or_default();

    let price_coef = spec.is_wtp().then(|| -means[0].exp());
    let title = if spec.is_wtp() {
        "Bayesian Mixed Logit Model - WTP Form"
    } else {
        "Bayesian Mixed Logit Model"
    };
    let path_str = |p: &Option<std::path::PathBuf>| {
        p.as_ref()
            .map(|p| p.display().to_string())
            .unwrap_or_default()
    };

    Ok(StoredResults {
        n: report.observations,
        df_r: r,
        krnd: k_rand,
        kfix: spec.k_fixed(),
        draws: config.draws,
        burn: config.burn,
        thin: config.thin,
        random_draws: config.draws_random,
        fixed_draws: config.draws_fixed,
        damper_fixed: config.damp_fixed,
        damper_random: config.damp_random,
        opt_arate_fixed: config.arate_fixed,
        opt_arate_random: config.arate_random,
        n_groups: report.groups,
        n_choices: report.choices,
        arates_fa: report.arate_fixed,
        arates_ra: report.arate_random_ave,
        arates_rmax: report.arate_random_max,
        arates_rmin: report.arate_random_min,
        inddraws: output.individual.as_ref().map_or(0, |i| i.draws.len()),
        price_coef,
        cmd: if spec.is_wtp() { "fitwtp" } else { "fit" }.to_string(),
        depvar: spec.depvar.clone(),
        indepvars: spec.data_vars().join(" "),
        title: title.to_string(),
        properties: "b V".to_string(),
        saving: path_str(&config.saving),
        fixed_sampler: config.sampler_fixed.to_string(),
        random_sampler: config.sampler_random.to_string(),
        random: spec.rand_vars.join(" "),
        fixed: spec.fixed_vars.join(" "),
        identifier: spec.id_var.clone(),
        group: spec.group_var.clone(),
        indsave: path_str(&config.indsave),
        pricevar: spec.price_var.clone(),
        b: means,
        v,
        v_init,
        b_init: output.start.b.clone(),
        arates_fixed,
        arates_rand,
        sample: SampleInfo {
            count: output.person_ids.len(),
            ids: output.person_ids.clone(),
        },
    })
}

/// Write stored results as pretty-printed JSON.
pub fn write_stored_results(results: &StoredResults, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(std::io::BufWriter::new(file), results)
        .map_err(|e| Error::InvalidArgument(format!("stored-results serialization: {e}")))?;
    Ok(())
}
