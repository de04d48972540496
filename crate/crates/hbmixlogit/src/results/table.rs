//! Fixed-width rendering of the run header and summary table.

use crate::sampler::{ModelSpec, RunReport, SamplerConfig};

use super::SummaryRow;

/// Width of the left column of the header block.
const HEADER_LEFT: usize = 51;
/// The value-column header to the right of the name column.
const VALUE_HEADER: &str = "      Coef.   Std. Err.      t    P>|t|     [95% Conf. Interval]";

/// General numeric display: up to seven digit positions in fixed notation,
/// trailing zeros trimmed, no leading zero before the decimal point.
fn g7(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return ".".to_string();
    }
    let a = x.abs();
    let int_digits = if a < 1.0 {
        0
    } else {
        a.log10().floor() as i32 + 1
    };
    if int_digits > 8 || a < 1e-7 {
        return format!("{x:.1e}");
    }
    let decimals = (7 - int_digits).max(0) as usize;
    let mut s = format!("{x:.decimals$}");
    if s.contains('.') {
        s = s.trim_end_matches('0').trim_end_matches('.').to_string();
    }
    if let Some(rest) = s.strip_prefix("0.") {
        s = format!(".{rest}");
    } else if let Some(rest) = s.strip_prefix("-0.") {
        s = format!("-.{rest}");
    }
    if s == "-" || s.is_empty() {
        s = "0".to_string();
    }
    s
}

/// Shorten a name to `width` characters, keeping the head and the final
/// character: `cov_yesXurbanyesXage` -> `cov_yesXurb~e`.
fn abbrev(name: &str, width: usize) -> String {
    let chars: Vec<char> = name.chars().collect();
    if chars.len() <= width {
        return name.to_string();
    }
    let head: String = chars[..width - 2].iter().collect();
    format!("{head}~{}", chars[chars.len() - 1])
}

fn two_columns(left: &str, right: &str) -> String {
    format!("{left:<HEADER_LEFT$}{right}")
}

fn degenerate_or<F: FnOnce(f64) -> String>(v: Option<f64>, f: F) -> String {
    v.map_or_else(|| ".".to_string(), f)
}

fn data_row(name: &str, row: &SummaryRow, width: usize) -> String {
    format!(
        "{:>width$} |{:>11}{:>11}{:>9}{:>8}{:>13}{:>12}",
        name,
        g7(row.mean),
        g7(row.sd),
        degenerate_or(row.t_stat, |t| format!("{t:.2}")),
        degenerate_or(row.p_value, |p| format!("{p:.3}")),
        degenerate_or(row.ci_low, g7),
        degenerate_or(row.ci_high, g7),
    )
}

fn section_line(label: &str, width: usize) -> String {
    format!("{:<w$}|", label, w = width + 1)
}

/// Render the coefficient table (sections Fixed, Random, Cov_Random) plus
/// the closing caution block. `summary` must follow draw-store column
/// order: random means, covariance entries, fixed coefficients.
pub fn render_summary_body(
    summary: &[SummaryRow],
    depvar: &str,
    k_rand: usize,
    footers: &[String],
) -> String {
    let n_cov = k_rand * (k_rand + 1) / 2;
    let (rand_rows, rest) = summary.split_at(k_rand);
    let (cov_rows, fixed_rows) = rest.split_at(n_cov);

    let longest = summary
        .iter()
        .map(|r| r.name.chars().count())
        .chain(std::iter::once(depvar.chars().count()))
        .max()
        .unwrap_or(0);
    let width = longest.clamp(12, 13);

    let full = "-".repeat(width + 2 + VALUE_HEADER.len());
    let mid = format!(
        "{}+{}",
        "-".repeat(width + 1),
        "-".repeat(VALUE_HEADER.len())
    );

    let mut out = String::new();
    out.push_str(&full);
    out.push('\n');
    out.push_str(&format!(
        "{:>width$} |{VALUE_HEADER}\n",
        abbrev(depvar, width)
    ));
    out.push_str(&mid);
    out.push('\n');

    let section = |label: &str, rows: &[SummaryRow], out: &mut String| {
        if rows.is_empty() {
            return;
        }
        out.push_str(&section_line(label, width));
        out.push('\n');
        for row in rows {
            out.push_str(&data_row(&abbrev(&row.name, width), row, width));
            out.push('\n');
        }
        out.push_str(&mid);
        out.push('\n');
    };
    section("Fixed", fixed_rows, &mut out);
    section("Random", rand_rows, &mut out);
    if !cov_rows.is_empty() {
        out.push_str(&section_line("Cov_Random", width));
        out.push('\n');
        for row in cov_rows {
            out.push_str(&data_row(&abbrev(&row.name, width), row, width));
            out.push('\n');
        }
    }
    // The midline before Cov_Random was already written; close with the full rule.
    out.push_str(&full);
    out.push('\n');

    for footer in footers {
        out.push_str(footer);
        out.push('\n');
    }

    out.push_str("\n\n   Attention!\n");
    out.push_str("   *Results are presented to conform with Stata covention, but\n");
    out.push_str("    are summary statistics of draws, not coefficient estimates.\n");
    out
}

/// Render the full output of a run: header block, coefficient table, and
/// the saved-file and price-transform footers.
pub fn render_table(
    summary: &[SummaryRow],
    report: &RunReport,
    spec: &ModelSpec,
    config: &SamplerConfig,
) -> String {
    let title = if spec.is_wtp() {
        "Bayesian Mixed Logit Model - WTP Form"
    } else {
        "Bayesian Mixed Logit Model"
    };
    let fixed_slot = report
        .arate_fixed
        .map_or(String::new(), |r| format!(" {r:.3}"));
    let random_slot = format!(
        " {:.3}, {:.3}, {:.3}",
        report.arate_random_ave, report.arate_random_min, report.arate_random_max
    );

    let mut out = String::new();
    out.push_str(&two_columns(
        title,
        &format!("Observations    = {:>9}", report.observations),
    ));
    out.push('\n');
    out.push_str(&two_columns(
        "",
        &format!("Groups          = {:>9}", report.groups),
    ));
    out.push('\n');
    out.push_str(&two_columns(
        "Acceptance rates:",
        &format!("Choices         = {:>9}", report.choices),
    ));
    out.push('\n');
    out.push_str(&two_columns(
        &format!(" Fixed coefs              ={fixed_slot}"),
        &format!("Total draws     = {:>9}", report.total_draws),
    ));
    out.push('\n');
    out.push_str(&two_columns(
        &format!(" Random coefs(ave,min,max)={random_slot}"),
        &format!("Burn-in draws   = {:>9}", report.burn),
    ));
    out.push('\n');
    if report.thin > 1 {
        out.push_str(&two_columns(
            "",
            &format!("*One of every {} draws kept", report.thin),
        ));
        out.push('\n');
    }

    let mut footers = Vec::new();
    if let Some(path) = &config.saving {
        footers.push(format!("   Draws saved in {}", path.display()));
    }
    if let Some(path) = &config.indsave {
        let kept = config
            .indkeep
            .unwrap_or(config.retained())
            .min(config.retained());
        footers.push(format!(
            "   {kept} value(s) of individual-level random parameters saved in {}",
            path.display()
        ));
    }
    if let Some(price) = &spec.price_var {
        let mean = summary
            .iter()
            .find(|r| &r.name == price)
            .map(|r| r.mean)
            .unwrap_or(f64::NAN);
        footers.push(format!(
            "The price variable is {price} with transformed coef (-exp(b)): {:.3}",
            -mean.exp()
        ));
    }

    out.push_str(&render_summary_body(
        summary,
        &spec.depvar,
        spec.k_rand(),
        &footers,
    ));
    out
}
