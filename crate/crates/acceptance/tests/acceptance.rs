//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Pass criterion numbers as arguments to run a subset.

use std::process::ExitCode;

use online_cov::batch_means::{BlockSchedule, BmState};
use online_cov::harness::output::to_csv;
use online_cov::harness::rates::RATES_HEADER;
use online_cov::harness::{
    fit_slope, run_bias_variance, run_coverage, run_iid_baseline, run_minimax, run_rates,
    summarize, ExperimentConfig, ExperimentKind, RateRow,
};
use online_cov::linalg::{operator_norm, sym_eigen, SquareMatrix, Vector};
use online_cov::regression::{RegOptions, RegState};
use online_cov::rng::RngStream;
use online_cov::sgd::{QuadraticProblem, Schedule};
use online_cov_acceptance::{selected, Outcome};

#[path = "../../core/tests/common/mod.rs"]
mod common;
use common::{offline_bm, trajectory};

fn load(kind: ExperimentKind, flags: &[(&str, &str)]) -> ExperimentConfig {
    let flags: Vec<(String, String)> = flags
        .iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect();
    ExperimentConfig::load(kind, None, &flags).expect("acceptance config")
}

fn mean_error(rows: &[RateRow], estimator: &str, n: usize) -> f64 {
    summarize(rows)
        .into_iter()
        .find(|s| s.estimator == estimator && s.n == n)
        .map(|s| s.mean)
        .unwrap_or(f64::NAN)
}

/// α = 0.55, d = 10, H equispaced 1..5, S = I, n from 10³ to 10⁶, 200 reps.
fn rates_run() -> Vec<RateRow> {
    let cfg = load(
        ExperimentKind::Rates,
        &[("alphas", "0.55"), ("reps", "200"), ("d", "10"), ("hessian", "equispaced 1..5")],
    );
    run_rates(&cfg).expect("rates run")
}

fn ordering(rows: &[RateRow]) -> Outcome {
    let n = 100_000;
    let names = ["regression", "bm_burnin", "bm_optimal", "bm_original"];
    let errs: Vec<f64> = names.iter().map(|e| mean_error(rows, e, n)).collect();
    let pass = errs.windows(2).all(|w| w[0] < w[1]);
    let detail = names
        .iter()
        .zip(&errs)
        .map(|(e, v)| format!("{e} {v:.4}"))
        .collect::<Vec<_>>()
        .join(" < ");
    Outcome::new(1, pass, format!("n = 1e5: {detail}"))
}

fn slopes(rows: &[RateRow]) -> Outcome {
    let slope = |e: &str| fit_slope(rows, e, 0.55).map(|f| f.slope).unwrap_or(f64::NAN);
    let (reg, burn, orig) = (slope("regression"), slope("bm_burnin"), slope("bm_original"));
    let pass = (reg - 0.225).abs() <= 0.08 && (burn - 0.15).abs() <= 0.08 && orig >= 0.1125 - 0.08;
    Outcome::new(
        2,
        pass,
        format!("regression {reg:.4} (0.225 ± 0.08), bm_burnin {burn:.4} (0.15 ± 0.08), bm_original {orig:.4} (≥ 0.0325)"),
    )
}

fn burn_in_benefit(rows: &[RateRow]) -> Outcome {
    let mut ns: Vec<usize> = rows.iter().map(|r| r.n).filter(|&n| n >= 10_000).collect();
    ns.dedup();
    let ratios: Vec<f64> = ns
        .iter()
        .map(|&n| mean_error(rows, "bm_burnin", n) / mean_error(rows, "bm_optimal", n))
        .collect();
    let worst = ratios.iter().cloned().fold(f64::NAN, f64::max);
    let pass = !ratios.is_empty() && ratios.iter().all(|&r| r <= 0.5);
    Outcome::new(3, pass, format!("max bm_burnin/bm_optimal over n ≥ 1e4 = {worst:.4} (≤ 0.5)"))
}

fn bias_variance() -> Outcome {
    let cfg = load(ExperimentKind::BiasVariance, &[("reps", "500"), ("ns", "100000")]);
    let res = run_bias_variance(&cfg).expect("bias-variance run");
    let first = res.rows.first().map(|r| r.bias).unwrap_or(f64::NAN);
    let last = res.rows.last().map(|r| r.bias).unwrap_or(f64::NAN);
    let pass = first > 3.0 * last && res.crossover.is_some();
    Outcome::new(
        4,
        pass,
        format!(
            "bias(1) = {first:.4e}, bias(b_n) = {last:.4e}, m* = {:?} of {}",
            res.crossover, res.num_blocks
        ),
    )
}

fn minimax_exactness() -> Outcome {
    let cfg = load(ExperimentKind::Minimax, &[("mc_reps", "2000"), ("risk_reps", "0")]);
    let rows = run_minimax(&cfg).expect("minimax run");
    let kl_dev = rows
        .iter()
        .map(|r| (r.report.kl_exact - 0.0625).abs())
        .fold(0.0, f64::max);
    let tv_dev = rows
        .iter()
        .map(|r| (r.report.tv_bound - 0.25).abs())
        .fold(0.0, f64::max);
    let mc: Vec<bool> = rows.iter().filter_map(|r| r.mc_within_4se).collect();
    let mc_ok = !mc.is_empty() && mc.iter().all(|&b| b);
    let kl_seen = rows.first().map(|r| r.report.kl_exact).unwrap_or(f64::NAN);
    let pass = kl_dev <= 1e-9 && tv_dev <= 1e-9 && mc_ok;
    Outcome::new(
        5,
        pass,
        format!(
            "{} grid points: kl_exact = {kl_seen:.12} (max |kl − 0.0625| = {kl_dev:.3e}), max |tv − 0.25| = {tv_dev:.3e}, MC within 4 SE at {}/{} points",
            rows.len(),
            mc.iter().filter(|&&b| b).count(),
            mc.len()
        ),
    )
}

fn lower_vs_upper() -> Outcome {
    let cfg = load(
        ExperimentKind::Minimax,
        &[("alphas", "0.55"), ("mc_reps", "0"), ("risk_reps", "100")],
    );
    let rows = run_minimax(&cfg).expect("minimax run");
    let mut margins = Vec::new();
    let mut pass = !rows.is_empty();
    for r in &rows {
        let (Some(h0), Some(h1)) = (r.reg_risk_h0, r.reg_risk_h1) else {
            pass = false;
            continue;
        };
        let floor = r.report.risk_floor;
        pass &= floor < h0 && floor < h1;
        margins.push(format!("n = {}: floor {floor:.3e} vs risk {:.3e}", r.report.n, h0.min(h1)));
    }
    Outcome::new(6, pass, margins.join("; "))
}

fn property_suite() -> Outcome {
    let mut failures: Vec<String> = Vec::new();

    // online vs offline batch means over a randomized grid
    let mut draw = RngStream::new(0x5eed, 0);
    let problem = QuadraticProblem::equispaced(3, 1.0, 3.0).unwrap();
    let mut worst = 0.0f64;
    for _ in 0..40 {
        let seed = (draw.uniform() * 1e6) as u64;
        let rho = [0.25, 0.5, 0.75, 1.0][(draw.uniform() * 4.0) as usize % 4];
        let beta = 1.0 + 2.0 * draw.uniform();
        let c = 1.0 + 5.0 * draw.uniform();
        let n = 50 + (draw.uniform() * 3950.0) as usize;
        let xs = trajectory(&problem, 0.6, n, seed);
        let mut st = BmState::new(3, BlockSchedule::new(c, beta).unwrap(), rho).unwrap();
        for (t, x) in xs[1..].iter().enumerate() {
            st.update(t + 1, x).unwrap();
        }
        let offline = offline_bm(&xs[1..], c, beta, rho);
        let err = operator_norm(&st.query().unwrap().sub(&offline)) / (1.0 + operator_norm(&offline));
        worst = worst.max(err);
    }
    if worst > 1e-10 {
        failures.push(format!("online/offline {worst:.2e}"));
    }

    // noiseless recovery, H = diag(1, 2), x₀ = (1, 1), 10 pairs
    let h = SquareMatrix::diag(&[1.0, 2.0]);
    let schedule = Schedule::new(0.3, 0.55).unwrap();
    let mut reg = RegState::new(2);
    let mut x = Vector::from_slice(&[1.0, 1.0]);
    for t in 0..10 {
        let eta = schedule.stepsize(t);
        let next = x.sub(&h.mul_vec(&x).scaled(eta));
        reg.update(x.as_slice(), next.as_slice(), eta).unwrap();
        x = next;
    }
    match reg.finalize(&RegOptions::default()) {
        Ok(est) => {
            if est.hessian.sub(&h).max_abs() > 1e-8 || est.noise.max_abs() > 1e-10 {
                failures.push(format!("noiseless recovery {:.2e}", est.hessian.sub(&h).max_abs()));
            }
        }
        Err(e) => failures.push(format!("noiseless recovery: {e}")),
    }

    // PSD and merge exactness
    let problem = QuadraticProblem::equispaced(4, 1.0, 4.0).unwrap();
    let schedule = Schedule::new(1.0, 0.55).unwrap();
    for seed in 0..10u64 {
        let xs = trajectory(&problem, 0.55, 3000, seed);
        let mut bm = BmState::new(4, BlockSchedule::new(5.0, 2.0).unwrap(), 0.5).unwrap();
        let (mut whole, mut a, mut b) = (RegState::new(4), RegState::new(4), RegState::new(4));
        let split = 300 * (seed as usize + 1);
        for t in 0..xs.len() - 1 {
            bm.update(t + 1, &xs[t + 1]).unwrap();
            let eta = schedule.stepsize(t);
            whole.update(xs[t].as_slice(), xs[t + 1].as_slice(), eta).unwrap();
            let part = if t < split { &mut a } else { &mut b };
            part.update(xs[t].as_slice(), xs[t + 1].as_slice(), eta).unwrap();
        }
        a.merge(&b).unwrap();
        let sigma = bm.query().unwrap();
        let est = whole.finalize(&RegOptions::default()).unwrap();
        for (name, m) in [("batch means", &sigma), ("regression", &est.covariance)] {
            if sym_eigen(m).unwrap().min() < -1e-10 * m.trace() {
                failures.push(format!("{name} not PSD at seed {seed}"));
            }
        }
        let merged = a.finalize(&RegOptions::default()).unwrap();
        let gap = operator_norm(&merged.covariance.sub(&est.covariance));
        if gap > 1e-9 * (1.0 + operator_norm(&est.covariance)) {
            failures.push(format!("merge gap {gap:.2e} at seed {seed}"));
        }
    }

    // determinism and worker independence
    let small = |workers: &str| {
        let cfg = load(
            ExperimentKind::Rates,
            &[("d", "3"), ("alphas", "0.55,0.7"), ("ns", "500,2000"), ("reps", "5"), ("workers", workers)],
        );
        to_csv(&run_rates(&cfg).unwrap(), RATES_HEADER)
    };
    let serial = small("1");
    if serial != small("1") {
        failures.push("rerun differs".to_string());
    }
    if serial != small("2") {
        failures.push("parallel differs from serial".to_string());
    }

    let detail = if failures.is_empty() {
        format!("online/offline max rel. gap {worst:.2e}; recovery, PSD, merge, determinism hold")
    } else {
        failures.join("; ")
    };
    Outcome::new(7, failures.is_empty(), detail)
}

fn coverage() -> Outcome {
    let cfg = load(
        ExperimentKind::Coverage,
        &[("ns", "100000"), ("reps", "500"), ("level", "0.95"), ("estimators", "regression,oracle")],
    );
    let rows = run_coverage(&cfg).expect("coverage run");
    let get = |e: &str| rows.iter().find(|r| r.estimator == e).map(|r| r.coverage).unwrap_or(f64::NAN);
    let (reg, oracle) = (get("regression"), get("oracle"));
    let pass = (0.90..=0.98).contains(&reg) && (0.93..=0.97).contains(&oracle);
    Outcome::new(8, pass, format!("regression {reg:.3} in [0.90, 0.98], oracle {oracle:.3} in [0.93, 0.97]"))
}

fn iid_baseline() -> Outcome {
    let cfg = load(ExperimentKind::IidBaseline, &[("d", "10"), ("ns", "1000,10000"), ("reps", "200")]);
    let rows = run_iid_baseline(&cfg).expect("iid run");
    let mut pass = true;
    let mut parts = Vec::new();
    for n in [1_000usize, 10_000] {
        let errs: Vec<f64> = rows.iter().filter(|r| r.n == n).map(|r| r.op_error).collect();
        let mean = errs.iter().sum::<f64>() / errs.len() as f64;
        let ratio = mean / (10.0 / n as f64).sqrt();
        pass &= (1.0 / 3.0..=3.0).contains(&ratio);
        parts.push(format!("n = {n}: error/√(d/n) = {ratio:.3}"));
    }
    Outcome::new(9, pass, parts.join(", "))
}

fn main() -> ExitCode {
    let wanted = selected(std::env::args().skip(1), 9);
    let rates = wanted
        .iter()
        .any(|c| (1..=3).contains(c))
        .then(rates_run);
    let mut outcomes = Vec::new();
    for c in wanted {
        let outcome = match c {
            1 => ordering(rates.as_ref().unwrap()),
            2 => slopes(rates.as_ref().unwrap()),
            3 => burn_in_benefit(rates.as_ref().unwrap()),
            4 => bias_variance(),
            5 => minimax_exactness(),
            6 => lower_vs_upper(),
            7 => property_suite(),
            8 => coverage(),
            9 => iid_baseline(),
            _ => continue,
        };
        println!("{outcome}");
        outcomes.push(outcome);
    }
    let failed = outcomes.iter().filter(|o| !o.pass).count();
    println!("acceptance: {} passed, {failed} failed", outcomes.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
