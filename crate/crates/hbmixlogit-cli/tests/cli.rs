//! End-to-end checks of the command-line surface.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hbmixlogit"))
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin()
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn simulate(dir: &Path) {
    let out = run_in(
        dir,
        &[
            "simulate",
            "--out",
            "sim.csv",
            "--persons",
            "25",
            "--occasions",
            "3",
            "--alts",
            "2",
            "--b",
            "0.8,-0.4",
            "--w",
            "0.4,0.0;0.0,0.3",
            "--alpha",
            "0.5",
            "--seed",
            "11",
        ],
    );
    assert!(out.status.success(), "{out:?}");
}

#[test]
fn fit_saves_draws_results_and_summarize_matches() {
    let dir = tempfile::tempdir().unwrap();
    simulate(dir.path());

    let fit = run_in(
        dir.path(),
        &[
            "fit",
            "sim.csv",
            "choice",
            "--fixed",
            "z1",
            "--rand",
            "x1",
            "x2",
            "--group",
            "gid",
            "--id",
            "pid",
            "--draws",
            "300",
            "--burn",
            "100",
            "--thin",
            "2",
            "--seed",
            "3",
            "--saving",
            "draws.csv",
            "--replace",
            "--results",
            "results.json",
        ],
    );
    assert!(fit.status.success(), "{fit:?}");
    let fit_text = stdout(&fit);
    assert!(fit_text.contains("Observations    =       150"));
    assert!(fit_text.contains("Groups          =        25"));
    assert!(fit_text.contains("Draws saved in draws.csv"));
    assert!(dir.path().join("draws.csv").exists());

    let results: serde_json::Value = {
        let text = std::fs::read_to_string(dir.path().join("results.json")).unwrap();
        serde_json::from_str(&text).unwrap()
    };
    assert_eq!(results["df_r"], 100);
    assert_eq!(results["krnd"], 2);
    assert_eq!(results["kfix"], 1);
    assert_eq!(results["cmd"], "fit");
    assert_eq!(results["random"], "x1 x2");
    assert_eq!(results["opt_arate_random"], 0.234);
    assert_eq!(results["thin"], 2);
    assert!(results["b"].as_array().unwrap().len() == 2 + 3 + 1);

    // The summary table re-rendered from the file matches the fit's table
    // body row for row.
    let sum = run_in(dir.path(), &["summarize", "draws.csv"]);
    assert!(sum.status.success());
    let body = |text: &str| -> Vec<String> {
        text.lines()
            .skip_while(|l| !l.starts_with("Fixed"))
            .take_while(|l| !l.starts_with("   Draws saved"))
            .filter(|l| l.contains('|'))
            .map(|l| l.to_string())
            .collect()
    };
    let fit_rows = body(&fit_text);
    let sum_rows = body(&stdout(&sum));
    assert!(!fit_rows.is_empty());
    assert_eq!(fit_rows, sum_rows);
}

#[test]
fn identical_runs_write_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    simulate(dir.path());
    for name in ["a.csv", "b.csv"] {
        let out = run_in(
            dir.path(),
            &[
                "fit", "sim.csv", "choice", "--fixed", "z1", "--rand", "x1", "x2", "--group",
                "gid", "--id", "pid", "--draws", "120", "--seed", "9", "--saving", name,
            ],
        );
        assert!(out.status.success());
    }
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn append_accumulates_rows() {
    let dir = tempfile::tempdir().unwrap();
    simulate(dir.path());
    for _ in 0..2 {
        let out = run_in(
            dir.path(),
            &[
                "fit", "sim.csv", "choice", "--rand", "x1", "x2", "--group", "gid", "--id", "pid",
                "--draws", "60", "--seed", "4", "--saving", "acc.csv", "--append",
            ],
        );
        assert!(out.status.success(), "{out:?}");
    }
    let text = std::fs::read_to_string(dir.path().join("acc.csv")).unwrap();
    assert_eq!(text.lines().count(), 1 + 120);

    // Summarizing the combined file uses all rows: df = 120.
    let sum = run_in(dir.path(), &["summarize", "acc.csv"]);
    assert!(sum.status.success());
}

#[test]
fn existing_draw_file_without_replace_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    simulate(dir.path());
    let args = [
        "fit", "sim.csv", "choice", "--rand", "x1", "x2", "--group", "gid", "--id", "pid",
        "--draws", "40", "--seed", "2", "--saving", "once.csv",
    ];
    assert!(run_in(dir.path(), &args).status.success());
    let again = run_in(dir.path(), &args);
    assert_eq!(again.status.code(), Some(3), "{again:?}");
}

#[test]
fn validation_and_io_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    simulate(dir.path());

    // Unknown flag / missing required option: clap's exit code 2.
    let out = run_in(dir.path(), &["fit", "sim.csv", "choice"]);
    assert_eq!(out.status.code(), Some(2));

    // Missing data file: i/o, 3.
    let out = run_in(
        dir.path(),
        &[
            "fit", "gone.csv", "choice", "--rand", "x1", "--group", "gid", "--id", "pid",
        ],
    );
    assert_eq!(out.status.code(), Some(3));

    // Missing column: validation, 2.
    let out = run_in(
        dir.path(),
        &[
            "fit", "sim.csv", "choice", "--rand", "nosuch", "--group", "gid", "--id", "pid",
        ],
    );
    assert_eq!(out.status.code(), Some(2), "{out:?}");

    // burn >= draws: validation, 2.
    let out = run_in(
        dir.path(),
        &[
            "fit", "sim.csv", "choice", "--rand", "x1", "--group", "gid", "--id", "pid", "--draws",
            "50", "--burn", "50",
        ],
    );
    assert_eq!(out.status.code(), Some(2), "{out:?}");
}

#[test]
fn fitwtp_prints_price_footer_and_saves_price_column_untransformed() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &[
            "simulate",
            "--out",
            "simw.csv",
            "--persons",
            "25",
            "--occasions",
            "3",
            "--alts",
            "2",
            "--b",
            "-0.4,0.9",
            "--w",
            "0.3,0.0;0.0,0.2",
            "--wtp",
            "--seed",
            "13",
        ],
    );
    assert!(out.status.success(), "{out:?}");
    let fit = run_in(
        dir.path(),
        &[
            "fitwtp",
            "simw.csv",
            "choice",
            "--rand",
            "x1",
            "--price",
            "price",
            "--group",
            "gid",
            "--id",
            "pid",
            "--draws",
            "200",
            "--burn",
            "50",
            "--seed",
            "5",
            "--saving",
            "draws.csv",
            "--results",
            "results.json",
        ],
    );
    assert!(fit.status.success(), "{fit:?}");
    let text = stdout(&fit);
    assert!(text.contains("Bayesian Mixed Logit Model - WTP Form"));
    assert!(text.contains("The price variable is price with transformed coef (-exp(b)):"));

    let header = std::fs::read_to_string(dir.path().join("draws.csv"))
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_string();
    assert!(header.starts_with("price,x1,var_price,cov_pricex1,var_x1"));

    // Stored results: pricevar present, price_coef = -exp(mean of the
    // price column), cmd reflects the WTP entry point.
    let results: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("results.json")).unwrap())
            .unwrap();
    assert_eq!(results["pricevar"], "price");
    assert_eq!(results["cmd"], "fitwtp");
    let mean_b = results["b"].as_array().unwrap()[0].as_f64().unwrap();
    let price_coef = results["price_coef"].as_f64().unwrap();
    assert!((price_coef - (-mean_b.exp())).abs() < 1e-12);
    assert!(price_coef < 0.0);
}

#[test]
fn noisy_emits_progress_and_ln_fc() {
    let dir = tempfile::tempdir().unwrap();
    simulate(dir.path());
    let out = run_in(
        dir.path(),
        &[
            "fit", "sim.csv", "choice", "--rand", "x1", "--group", "gid", "--id", "pid", "--draws",
            "60", "--seed", "2", "--noisy",
        ],
    );
    assert!(out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("....."), "no progress dots in {err:?}");
    assert!(err.contains("ln_fc(p) = "), "no ln_fc line in {err:?}");
}

#[test]
fn env_var_supplies_default_seed() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "simulate",
        "--out",
        "env.csv",
        "--persons",
        "5",
        "--occasions",
        "2",
        "--alts",
        "2",
        "--b",
        "0.5",
        "--w",
        "0.2",
    ];
    let with_env = bin()
        .current_dir(dir.path())
        .args(args)
        .env("HBMIXLOGIT_SEED", "99")
        .output()
        .unwrap();
    assert!(with_env.status.success());
    let env_bytes = std::fs::read(dir.path().join("env.csv")).unwrap();

    let explicit = run_in(
        dir.path(),
        &[
            "simulate",
            "--out",
            "flag.csv",
            "--persons",
            "5",
            "--occasions",
            "2",
            "--alts",
            "2",
            "--b",
            "0.5",
            "--w",
            "0.2",
            "--seed",
            "99",
        ],
    );
    assert!(explicit.status.success());
    assert_eq!(
        env_bytes,
        std::fs::read(dir.path().join("flag.csv")).unwrap()
    );
}

#[test]
fn convert_expands_cases_for_fitting() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("cases.csv"),
        "district,c_use,urban,age\n\
         1,no,1,30\n1,yes,0,25\n1,no,1,41\n\
         2,yes,1,22\n2,no,0,35\n2,yes,0,28\n",
    )
    .unwrap();
    let out = run_in(
        dir.path(),
        &[
            "convert",
            "cases.csv",
            "alts.csv",
            "--choice",
            "c_use",
            "--casevars",
            "urban",
            "age",
            "--gen",
            "choice",
        ],
    );
    assert!(out.status.success(), "{out:?}");
    let text = stdout(&out);
    assert!(text.contains("generated columns: yesXurban yesXage yes"));
    let alts = std::fs::read_to_string(dir.path().join("alts.csv")).unwrap();
    assert_eq!(alts.lines().count(), 1 + 12);

    // The converted file fits directly, with the case-level district as
    // the identifier.
    let fit = run_in(
        dir.path(),
        &[
            "fit",
            "alts.csv",
            "choice",
            "--rand",
            "yesXurban",
            "yesXage",
            "yes",
            "--group",
            "_id",
            "--id",
            "district",
            "--draws",
            "50",
            "--seed",
            "1",
        ],
    );
    assert!(fit.status.success(), "{fit:?}");
    let text = stdout(&fit);
    assert!(text.contains("Groups          =         2"));
    assert!(text.contains("Choices         =         6"));
}
