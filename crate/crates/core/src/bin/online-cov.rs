use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Arg, ArgAction, ArgMatches, Command};

use online_cov::harness::output::{emit, render};
use online_cov::harness::{
    self, bias_variance::BLOCK_HEADER, coverage::COVERAGE_HEADER, cv::CV_HEADER,
    iid::IID_HEADER, minimax::MINIMAX_HEADER, rates::RATES_HEADER, ExperimentConfig,
    ExperimentKind, OutputFormat,
};
use online_cov::Error;

const SUBCOMMANDS: [(&str, ExperimentKind, &str); 6] = [
    ("rates", ExperimentKind::Rates, "Operator-norm error of every estimator over the (alpha, n) grid"),
    ("bias-variance", ExperimentKind::BiasVariance, "Per-block bias and variance of batch means"),
    ("coverage", ExperimentKind::Coverage, "Coverage of confidence ellipsoids"),
    ("minimax", ExperimentKind::Minimax, "Two-point lower bound quantities"),
    ("iid-baseline", ExperimentKind::IidBaseline, "Sample covariance error for i.i.d. data"),
    ("cv-rho", ExperimentKind::CvRho, "Cross-validated burn-in fraction"),
];

fn cli() -> Command {
    let mut cmd = Command::new("online-cov")
        .about("Covariance estimation experiments for averaged SGD")
        .subcommand_required(true)
        .arg(
            Arg::new("config")
                .long("config")
                .value_name("PATH")
                .global(true)
                .value_parser(clap::value_parser!(PathBuf))
                .help("TOML file of flat key = value settings"),
        );
    for key in ExperimentConfig::keys() {
        let mut arg = Arg::new(key.clone())
            .long(key.clone())
            .global(true)
            .action(ArgAction::Set)
            .help_heading("Settings (override the config file)");
        let dashed = key.replace('_', "-");
        if dashed != key {
            arg = arg.alias(dashed);
        }
        arg = match key.as_str() {
            "out" => arg.value_name("PATH"),
            "seed" => arg.value_name("U64"),
            "workers" => arg.value_name("N"),
            "format" => arg.value_name("csv|json"),
            _ => arg.value_name("VALUE"),
        };
        cmd = cmd.arg(arg);
    }
    for (name, _, about) in SUBCOMMANDS {
        cmd = cmd.subcommand(Command::new(name).about(about));
    }
    cmd
}

fn overrides(m: &ArgMatches) -> Vec<(String, String)> {
    ExperimentConfig::keys()
        .into_iter()
        .filter_map(|k| m.get_one::<String>(&k).map(|v| (k.clone(), v.clone())))
        .collect()
}

fn run(kind: ExperimentKind, cfg: &ExperimentConfig) -> Result<(), Error> {
    let out = cfg.output_path();
    let fmt = cfg.format;
    match kind {
        ExperimentKind::Rates => {
            let rows = harness::run_rates(cfg)?;
            emit(&render(&rows, fmt, RATES_HEADER)?, out)?;
            for alpha in &cfg.alphas {
                for spec in cfg.estimator_specs()? {
                    if let Ok(fit) = harness::fit_slope(&rows, spec.label(), *alpha) {
                        log::info!(
                            "alpha = {alpha}: {} slope {:.4} (r² {:.4})",
                            spec.label(),
                            fit.slope,
                            fit.r_squared
                        );
                    }
                }
            }
            let failures = harness::numerical_failures(&rows);
            if !failures.is_empty() {
                return Err(Error::Singular(format!(
                    "every replication degenerate: {}",
                    failures.join("; ")
                )));
            }
        }
        ExperimentKind::BiasVariance => {
            let result = harness::run_bias_variance(cfg)?;
            let text = match fmt {
                OutputFormat::Csv => render(&result.rows, fmt, BLOCK_HEADER)?,
                OutputFormat::Json => serde_json::to_string_pretty(&result)? + "\n",
            };
            emit(&text, out)?;
            match result.crossover_fraction() {
                Some(f) => log::info!(
                    "crossover at m* = {} of {} blocks ({f:.3})",
                    result.crossover.unwrap_or(0),
                    result.num_blocks
                ),
                None => log::info!("no bias/variance crossover"),
            }
        }
        ExperimentKind::Coverage => {
            let rows = harness::run_coverage(cfg)?;
            emit(&render(&rows, fmt, COVERAGE_HEADER)?, out)?;
            if let Some(r) = rows.iter().find(|r| r.all_degenerate()) {
                return Err(Error::Singular(format!(
                    "every replication degenerate: {} at alpha = {}, n = {}",
                    r.estimator, r.alpha, r.n
                )));
            }
        }
        ExperimentKind::Minimax => {
            let rows = harness::run_minimax(cfg)?;
            emit(&render(&rows, fmt, MINIMAX_HEADER)?, out)?;
        }
        ExperimentKind::IidBaseline => {
            let rows = harness::run_iid_baseline(cfg)?;
            emit(&render(&rows, fmt, IID_HEADER)?, out)?;
        }
        ExperimentKind::CvRho => {
            let rows = harness::run_cv_rho(cfg)?;
            emit(&render(&rows, fmt, CV_HEADER)?, out)?;
        }
    }
    Ok(())
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_) => 2,
        Error::Io(_) | Error::Json(_) => 1,
        _ => 3,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let matches = cli().get_matches();
    let (name, sub) = matches.subcommand().expect("subcommand required");
    let kind = SUBCOMMANDS
        .iter()
        .find(|(n, _, _)| *n == name)
        .map(|(_, k, _)| *k)
        .expect("known subcommand");
    let config_path = sub
        .get_one::<PathBuf>("config")
        .or_else(|| matches.get_one::<PathBuf>("config"));
    let mut flags = overrides(&matches);
    flags.extend(overrides(sub));
    let result = ExperimentConfig::load(kind, config_path.map(PathBuf::as_path), &flags)
        .and_then(|cfg| run(kind, &cfg));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
