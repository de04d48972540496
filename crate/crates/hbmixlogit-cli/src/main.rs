//! Command-line front end: `fit`, `fitwtp`, `simulate`, `summarize`, and
//! `convert` subcommands over the estimation library.
//!
//! Exit codes: 0 on success, 2 for validation problems, 3 for i/o
//! failures, 4 for numerical failures.

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use hbmixlogit::amcmc::SamplerKind;
use hbmixlogit::data::{case_to_alternatives, load_long_csv, CaseTable};
use hbmixlogit::dist::SpdMatrix;
use hbmixlogit::error::Error;
use hbmixlogit::results::{
    export_stored_results, read_draw_file, render_summary_body, render_table, split_draw_columns,
    summarize_draws, write_draw_file, write_individual_draws, write_stored_results,
};
use hbmixlogit::sampler::{run_chain, ModelSpec, SamplerConfig};
use hbmixlogit::sim::{simulate_to_csv, SimConfig};
use hbmixlogit::wtp::make_wtp_spec;

#[derive(Parser)]
#[command(
    name = "hbmixlogit",
    about = "Hierarchical Bayes mixed logit estimation",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a mixed logit model in preference space.
    Fit(FitArgs),
    /// Fit a mixed logit model in willingness-to-pay space.
    Fitwtp(FitWtpArgs),
    /// Generate synthetic choice data with known parameters.
    Simulate(SimulateArgs),
    /// Re-render the summary table from a saved draw file.
    Summarize(SummarizeArgs),
    /// Expand one-row-per-case data into one row per alternative.
    Convert(ConvertArgs),
}

#[derive(Args)]
struct FitArgs {
    /// Long-format CSV with a header row.
    data: PathBuf,
    /// Dependent variable (0/1 chosen indicator).
    depvar: String,
    /// Variables with fixed coefficients.
    #[arg(long, num_args = 1..)]
    fixed: Vec<String>,
    #[command(flatten)]
    common: CommonFitArgs,
}

#[derive(Args)]
struct FitWtpArgs {
    data: PathBuf,
    depvar: String,
    /// Variables with fixed coefficients.
    #[arg(long, num_args = 1..)]
    fixed: Vec<String>,
    /// Price variable; its coefficient is -exp(b) with b random.
    #[arg(long, required = true)]
    price: String,
    #[command(flatten)]
    common: CommonFitArgs,
}

#[derive(Args)]
struct CommonFitArgs {
    /// Variables with random coefficients.
    #[arg(long, num_args = 1.., required = true)]
    rand: Vec<String>,
    /// Choice-occasion identifier variable.
    #[arg(long, required = true)]
    group: String,
    /// Coefficient-set (decision maker) identifier variable.
    #[arg(long, required = true)]
    id: String,
    /// Posterior draws to take.
    #[arg(long, default_value_t = 1000)]
    draws: usize,
    /// Leading draws to discard.
    #[arg(long, default_value_t = 0)]
    burn: usize,
    /// Keep every n-th post-burn draw.
    #[arg(long, default_value_t = 1)]
    thin: usize,
    /// Randomly permute the retained draws.
    #[arg(long)]
    jumble: bool,
    /// Metropolis steps per coefficient set per pass.
    #[arg(long = "draws-random", default_value_t = 1)]
    draws_random: usize,
    /// Metropolis steps for the fixed block per pass.
    #[arg(long = "draws-fixed", default_value_t = 1)]
    draws_fixed: usize,
    /// Target acceptance rate for random coefficients.
    #[arg(long = "arate-random", default_value_t = 0.234)]
    arate_random: f64,
    /// Target acceptance rate for fixed coefficients.
    #[arg(long = "arate-fixed", default_value_t = 0.234)]
    arate_fixed: f64,
    /// Proposal style for random coefficients: global or mwg.
    #[arg(long = "sampler-random", default_value = "global")]
    sampler_random: String,
    /// Proposal style for fixed coefficients: global or mwg.
    #[arg(long = "sampler-fixed", default_value = "global")]
    sampler_fixed: String,
    /// Adaptation damping for random coefficients, in (0, 1].
    #[arg(long = "damp-random", default_value_t = 1.0)]
    damp_random: f64,
    /// Adaptation damping for fixed coefficients, in (0, 1].
    #[arg(long = "damp-fixed", default_value_t = 1.0)]
    damp_fixed: f64,
    /// Starting values: comma-separated random means then fixed
    /// coefficients. Defaults to a conditional logit fit.
    #[arg(long, allow_hyphen_values = true)]
    from: Option<String>,
    /// CSV file (no header) with the starting covariance of the random
    /// coefficients.
    #[arg(long = "from-variance")]
    from_variance: Option<PathBuf>,
    /// RNG seed.
    #[arg(long, env = "HBMIXLOGIT_SEED", default_value_t = 1)]
    seed: u64,
    /// Progress dots and a joint log probability line every 50 passes.
    #[arg(long)]
    noisy: bool,
    /// Write retained draws to this CSV file.
    #[arg(long)]
    saving: Option<PathBuf>,
    /// Overwrite an existing draw file.
    #[arg(long)]
    replace: bool,
    /// Append to an existing draw file.
    #[arg(long)]
    append: bool,
    /// Write individual-level coefficient draws to this CSV file.
    #[arg(long)]
    indsave: Option<PathBuf>,
    /// Keep only the last n retained draws of individual parameters.
    #[arg(long)]
    indkeep: Option<usize>,
    /// Save individual draws one row per person.
    #[arg(long)]
    indwide: bool,
    /// Overwrite an existing individual-draw file.
    #[arg(long = "replace-ind")]
    replace_ind: bool,
    /// Append to an existing individual-draw file.
    #[arg(long = "append-ind")]
    append_ind: bool,
    /// Write the stored-results bundle to this JSON file.
    #[arg(long)]
    results: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Output CSV path; true parameters go to `<out>.truth.json`.
    #[arg(long, required = true)]
    out: PathBuf,
    #[arg(long, default_value_t = 100)]
    persons: usize,
    #[arg(long, default_value_t = 4)]
    occasions: usize,
    #[arg(long, default_value_t = 3)]
    alts: usize,
    /// Population means of the random coefficients, comma separated. In
    /// WTP mode the first entry is the price parameter.
    #[arg(long, required = true, allow_hyphen_values = true)]
    b: String,
    /// Population covariance rows separated by `;`, entries by `,`.
    #[arg(long, required = true, allow_hyphen_values = true)]
    w: String,
    /// Fixed coefficients, comma separated.
    #[arg(long, default_value = "", allow_hyphen_values = true)]
    alpha: String,
    /// Simulate in willingness-to-pay space.
    #[arg(long)]
    wtp: bool,
    #[arg(long, env = "HBMIXLOGIT_SEED", default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct SummarizeArgs {
    /// Draw file written by fit or fitwtp.
    drawfile: PathBuf,
    /// Treat this random column as the price parameter and print its
    /// transform footer.
    #[arg(long)]
    price: Option<String>,
}

#[derive(Args)]
struct ConvertArgs {
    /// One-row-per-case CSV.
    input: PathBuf,
    /// Output CSV, one row per alternative.
    output: PathBuf,
    /// Column holding the chosen alternative.
    #[arg(long, required = true)]
    choice: String,
    /// Case-constant covariates to interact with the alternatives.
    #[arg(long, num_args = 0..)]
    casevars: Vec<String>,
    /// Name of the generated 0/1 chosen indicator.
    #[arg(long, default_value = "choice")]
    gen: String,
    /// Column to use as the case identifier (defaults to the case number).
    #[arg(long)]
    case: Option<String>,
    /// Overwrite the output file if it exists.
    #[arg(long)]
    replace: bool,
}

fn parse_vector(text: &str) -> Result<Vec<f64>, Error> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    text.split(',')
        .map(|c| {
            c.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidConfig(format!("cannot parse `{c}` as a number")))
        })
        .collect()
}

fn parse_matrix(text: &str) -> Result<Vec<Vec<f64>>, Error> {
    text.split(';').map(parse_vector).collect()
}

fn read_matrix_csv(path: &std::path::Path) -> Result<SpdMatrix, Error> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        rows.push(
            record
                .iter()
                .map(|c| {
                    c.parse::<f64>().map_err(|_| Error::NonNumeric {
                        column: "fromvariance".into(),
                        record: i + 1,
                        value: c.to_string(),
                    })
                })
                .collect::<Result<Vec<f64>, Error>>()?,
        );
    }
    let dim = rows.len();
    let m = nalgebra_matrix(dim, &rows)?;
    SpdMatrix::from_matrix(m)
}

fn nalgebra_matrix(
    dim: usize,
    rows: &[Vec<f64>],
) -> Result<hbmixlogit::nalgebra::DMatrix<f64>, Error> {
    if rows.iter().any(|r| r.len() != dim) {
        return Err(Error::InvalidConfig(
            "starting covariance must be square".into(),
        ));
    }
    Ok(hbmixlogit::nalgebra::DMatrix::from_fn(dim, dim, |i, j| {
        rows[i][j]
    }))
}

fn sampler_config(args: &CommonFitArgs) -> Result<SamplerConfig, Error> {
    Ok(SamplerConfig {
        draws: args.draws,
        burn: args.burn,
        thin: args.thin,
        jumble: args.jumble,
        draws_random: args.draws_random,
        draws_fixed: args.draws_fixed,
        arate_random: args.arate_random,
        arate_fixed: args.arate_fixed,
        sampler_random: SamplerKind::from_str(&args.sampler_random)?,
        sampler_fixed: SamplerKind::from_str(&args.sampler_fixed)?,
        damp_random: args.damp_random,
        damp_fixed: args.damp_fixed,
        from: args.from.as_deref().map(parse_vector).transpose()?,
        from_variance: args
            .from_variance
            .as_deref()
            .map(read_matrix_csv)
            .transpose()?,
        seed: args.seed,
        noisy: args.noisy,
        saving: args.saving.clone(),
        replace: args.replace,
        append: args.append,
        indsave: args.indsave.clone(),
        indkeep: args.indkeep,
        indwide: args.indwide,
        replace_ind: args.replace_ind,
        append_ind: args.append_ind,
    })
}

fn run_fit(
    data_path: &std::path::Path,
    spec: &ModelSpec,
    args: &CommonFitArgs,
) -> Result<(), Error> {
    let config = sampler_config(args)?;
    let data = load_long_csv(data_path, spec)?;
    let output = run_chain(&data, spec, &config)?;

    if let Some(path) = &config.saving {
        write_draw_file(&output.draws, path, config.replace, config.append)?;
    }
    if let Some(path) = &config.indsave {
        let ind = output
            .individual
            .as_ref()
            .expect("individual draws tracked when indsave is set");
        write_individual_draws(
            ind,
            path,
            config.indwide,
            config.replace_ind,
            config.append_ind,
        )?;
    }
    if let Some(path) = &args.results {
        let stored = export_stored_results(&output, spec, &config)?;
        write_stored_results(&stored, path)?;
    }

    let summary = summarize_draws(&output.draws)?;
    print!("{}", render_table(&summary, &output.report, spec, &config));
    Ok(())
}

fn run_summarize(args: &SummarizeArgs) -> Result<(), Error> {
    let store = read_draw_file(&args.drawfile)?;
    let schema = split_draw_columns(&store).map_err(|e| match e {
        Error::BadDrawSchema(_, why) => Error::BadDrawSchema(args.drawfile.clone(), why),
        other => other,
    })?;
    let summary = summarize_draws(&store)?;
    let mut footers = Vec::new();
    if let Some(price) = &args.price {
        if !schema.rand_names.first().is_some_and(|n| n == price) {
            return Err(Error::InvalidConfig(format!(
                "price column `{price}` is not the leading random column of the file"
            )));
        }
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
    print!(
        "{}",
        render_summary_body(&summary, "draws", schema.rand_names.len(), &footers)
    );
    Ok(())
}

fn run_simulate(args: &SimulateArgs) -> Result<(), Error> {
    let config = SimConfig {
        n_persons: args.persons,
        n_occasions: args.occasions,
        n_alts: args.alts,
        b: parse_vector(&args.b)?,
        w: parse_matrix(&args.w)?,
        alpha: parse_vector(&args.alpha)?,
        wtp: args.wtp,
        seed: args.seed,
    };
    let truth = simulate_to_csv(&config, &args.out)?;
    println!(
        "wrote {} persons x {} occasions x {} alternatives to {}",
        truth.n_persons,
        truth.n_occasions,
        truth.n_alts,
        args.out.display()
    );
    println!(
        "true parameters in {}",
        args.out.with_extension("truth.json").display()
    );
    Ok(())
}

fn run_convert(args: &ConvertArgs) -> Result<(), Error> {
    if args.output.exists() && !args.replace {
        return Err(Error::FileExists(args.output.clone()));
    }
    let cases = CaseTable::read_csv(&args.input)?;
    let converted = case_to_alternatives(
        &cases,
        &args.choice,
        &args.casevars,
        &args.gen,
        args.case.as_deref(),
    )?;
    converted.table.write_csv(&args.output)?;
    println!("choice indicated by: {}", converted.depvar);
    println!("generated columns: {}", converted.generated.join(" "));
    println!(
        "wrote {} rows to {}",
        converted.table.rows.len(),
        args.output.display()
    );
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io(_) | Error::FileExists(_) | Error::AppendHeaderMismatch { .. } => 3,
        Error::Csv(inner) => match inner.kind() {
            csv::ErrorKind::Io(_) => 3,
            _ => 2,
        },
        Error::NotPositiveDefinite | Error::NanTarget(_) => 4,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Fit(args) => ModelSpec::preference(
            &args.depvar,
            &args.common.group,
            &args.common.id,
            &args.fixed.iter().map(String::as_str).collect::<Vec<_>>(),
            &args
                .common
                .rand
                .iter()
                .map(String::as_str)
                .collect::<Vec<_>>(),
        )
        .and_then(|spec| run_fit(&args.data, &spec, &args.common)),
        Command::Fitwtp(args) => ModelSpec::preference(
            &args.depvar,
            &args.common.group,
            &args.common.id,
            &args.fixed.iter().map(String::as_str).collect::<Vec<_>>(),
            &args
                .common
                .rand
                .iter()
                .map(String::as_str)
                .collect::<Vec<_>>(),
        )
        .and_then(|base| make_wtp_spec(&base, &args.price))
        .and_then(|spec| run_fit(&args.data, &spec, &args.common)),
        Command::Simulate(args) => run_simulate(args),
        Command::Summarize(args) => run_summarize(args),
        Command::Convert(args) => run_convert(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
