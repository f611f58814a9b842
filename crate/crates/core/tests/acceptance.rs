//! Acceptance run: one PASS/FAIL line per criterion. Exits nonzero if any
//! criterion fails.

mod common;

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use common::*;
use fptmc::baseline::{fit_distance_to_default, nojump_default_probability};
use fptmc::bridge::{crossing_density, survival_probability, IntervalEndpoints};
use fptmc::calibrate::HistoricalCurve;
use fptmc::estimate::{bandwidth_integral, default_correlation, firm_density, uniform_grid, GammaFit};
use fptmc::stochastic::{sample_correlated_uniforms, RngStream, UniformTarget};
use fptmc::unif::simulate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

type Check<'a> = Box<dyn Fn() -> Outcome + 'a>;

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn density_mass(e: &IntervalEndpoints) -> f64 {
    let g = |t: f64| {
        if t <= e.t_prev || t >= e.t_next {
            0.0
        } else {
            crossing_density(e, t).unwrap()
        }
    };
    integrate_endpoints(g, e.t_prev, e.t_next, 1e-10)
}

fn bridge_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1001);
    let worst = (0..100)
        .map(|_| {
            let e = random_endpoints(&mut rng, 0.05..5.0);
            (density_mass(&e) - (1.0 - survival_probability(&e).unwrap())).abs()
        })
        .fold(0.0, f64::max);
    outcome(
        worst < 1e-6,
        format!("max |mass - (1 - P)| = {worst:.2e} over 100 intervals (tol 1e-6)"),
    )
}

fn bridge_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1002);
    let n_paths = 100_000;
    let mut worst = 0.0f64;
    for case in 0..20 {
        let tau: f64 = rng.random_range(0.02..0.1);
        let sigma = rng.random_range(0.1..1.0);
        let scale = sigma * tau.sqrt();
        let e = IntervalEndpoints {
            t_prev: 0.0,
            t_next: tau,
            x_prev: scale * rng.random_range(0.25..2.5),
            x_next: scale * rng.random_range(0.05..2.5),
            mu: rng.random_range(-1.0..1.0),
            sigma,
            boundary: 0.0,
        };
        let p = survival_probability(&e).unwrap();
        let survived = brute_force_crossings(&e, 1e-4, n_paths, 500 + case)
            .iter()
            .filter(|c| c.is_none())
            .count();
        let frac = survived as f64 / n_paths as f64;
        let se = (p * (1.0 - p) / n_paths as f64).sqrt();
        worst = worst.max((frac - p).abs() / se);
    }
    outcome(
        worst < 3.0,
        format!("max |simulated - formula| = {worst:.2} standard errors over 20 cases (tol 3)"),
    )
}

fn bandwidth_closed_form() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1003);
    let worst = (0..50)
        .map(|_| {
            let alpha = rng.random_range(0.2..10.0);
            let beta = rng.random_range(3.0..40.0);
            let closed = bandwidth_integral(&GammaFit { alpha, beta }).unwrap();
            let quad = curvature_by_quadrature(alpha, beta);
            ((closed - quad) / quad).abs()
        })
        .fold(0.0, f64::max);
    let unit = (bandwidth_integral(&GammaFit { alpha: 1.0, beta: 3.0 }).unwrap() - 0.1875).abs();
    outcome(
        worst < 1e-6 && unit < 1e-12,
        format!("max relative error {worst:.2e} over 50 pairs (tol 1e-6); |I(1,3) - 0.1875| = {unit:.1e} (tol 1e-12)"),
    )
}

fn no_jump_agreement() -> Outcome {
    let z = 8.06;
    let p = no_jump(z);
    let set = simulate(&p, 100_000, 1).unwrap();
    let curve = firm_density(&set, 0, &uniform_grid(p.horizon, 512)).unwrap().rates();
    let worst = (1..=10)
        .map(|t| (curve.at(t as f64) - nojump_default_probability(z, t as f64)).abs())
        .fold(0.0, f64::max);
    outcome(
        worst <= 0.003,
        format!(
            "max |UNIF - closed form| = {:.3}pp at t = 1..10 (tol 0.3pp)",
            100.0 * worst
        ),
    )
}

fn fptmc(args: &[&str]) -> Result<(), String> {
    let o = Command::new(env!("CARGO_BIN_EXE_fptmc"))
        .args(args)
        .env("RUST_LOG", "off")
        .output()
        .map_err(|e| e.to_string())?;
    if o.status.success() {
        Ok(())
    } else {
        Err(String::from_utf8_lossy(&o.stderr).trim().to_string())
    }
}

fn config(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("configs")
        .join(name)
        .display()
        .to_string()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

/// Runs `fptmc compare` on the single-firm config once and shares the output
/// between the agreement and speed criteria.
fn compare_output(dir: &Path) -> Result<PathBuf, String> {
    let out = dir.join("compare");
    if !out.join("manifest.json").exists() {
        fptmc(&[
            "compare",
            "--config",
            &config("a_rated_single.toml"),
            "--out",
            out.to_str().unwrap(),
        ])?;
    }
    Ok(out)
}

fn euler_agreement(dir: &Path) -> Outcome {
    let out = match compare_output(dir) {
        Ok(o) => o,
        Err(e) => return outcome(false, e),
    };
    let rows = csv_rows(&out.join("compare.csv"));
    let series = |engine: &str| -> Vec<f64> {
        rows.iter()
            .filter(|r| r[0] == engine)
            .map(|r| r[3].parse().unwrap())
            .collect()
    };
    let (u, e) = (series("unif"), series("euler"));
    let worst = u.iter().zip(&e).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    outcome(
        worst <= 0.005 && u.len() == e.len() && !u.is_empty(),
        format!(
            "max |UNIF - Euler| = {:.3}pp over {} grid points, N = 100000, dt = 0.005 (tol 0.5pp)",
            100.0 * worst,
            u.len()
        ),
    )
}

fn speedup(dir: &Path) -> Outcome {
    let out = match compare_output(dir) {
        Ok(o) => o,
        Err(e) => return outcome(false, e),
    };
    let rows = csv_rows(&out.join("timing.csv"));
    let per_run = |engine: &str| -> f64 { rows.iter().find(|r| r[0] == engine).unwrap()[4].parse().unwrap() };
    let (eu, un) = (per_run("euler"), per_run("unif"));
    let ratio = eu / un;
    outcome(
        ratio >= 10.0,
        format!("CPU time per run: Euler {eu:.3e}s, UNIF {un:.3e}s, speedup {ratio:.1}x (tol 10x)"),
    )
}

fn pair_correlations(dir: &Path) -> Outcome {
    let out = dir.join("correlate");
    if let Err(e) = fptmc(&[
        "correlate",
        "--config",
        &config("aa_pair.toml"),
        "--seed",
        "1",
        "--runs",
        "100000",
        "--out",
        out.to_str().unwrap(),
    ]) {
        return outcome(false, e);
    }
    let rows = csv_rows(&out.join("correlations.csv"));
    let rho: Vec<f64> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
    let reference: Vec<f64> = rows.iter().map(|r| r[8].parse().unwrap()).collect();
    let shown: Vec<String> = rho.iter().map(|r| format!("{:.2}%", 100.0 * r)).collect();
    let monotone = rho.windows(2).all(|w| w[1] >= w[0]);
    // the same check over other seeds, reported but not part of the verdict
    let p = aa_pair();
    let other = (2..=40)
        .filter(|&seed| {
            let set = simulate(&p, 100_000, seed).unwrap();
            let r: Vec<f64> = [1.0, 2.0, 5.0, 10.0]
                .iter()
                .map(|&t| default_correlation(&set, 0, 1, t).unwrap().rho.unwrap_or(0.0))
                .collect();
            table_two_check(&r, &reference)
        })
        .count();
    outcome(
        rho.len() == 4 && table_two_check(&rho, &reference),
        format!(
            "seed 1: rho at 1,2,5,10y = [{}] vs [0.00%, 2.47%, 6.58%, 9.28%] (tol 2.5pp, nondecreasing: {monotone}); \
             seeds 2..40 pass {other}/39",
            shown.join(", ")
        ),
    )
}

fn table_two_check(rho: &[f64], reference: &[f64]) -> bool {
    rho.iter().zip(reference).all(|(a, b)| (a - b).abs() <= 0.025) && rho.windows(2).all(|w| w[1] >= w[0])
}

fn calibration_round_trip(dir: &Path) -> Outcome {
    let z = 8.06;
    let times: Vec<f64> = (1..=10).map(f64::from).collect();
    let rates = times.iter().map(|&t| 2.0 * phi_oracle(-z / t.sqrt())).collect();
    let fit = fit_distance_to_default(&HistoricalCurve::new(times, rates).unwrap()).unwrap();
    let out = dir.join("calibrate");
    if let Err(e) = fptmc(&[
        "calibrate",
        "--config",
        &config("a_rated_single.toml"),
        "--out",
        out.to_str().unwrap(),
    ]) {
        return outcome(false, e);
    }
    let c: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("calibration.json")).unwrap()).unwrap();
    let firm = &c["confirmation"]["firms"][0];
    let model = firm["model"][9].as_f64().unwrap();
    let target = 2.0 * phi_oracle(-z / 10f64.sqrt());
    let gap = (model - target).abs();
    outcome(
        (fit.z - z).abs() <= 0.05 && gap <= 0.005,
        format!(
            "fitted Z = {:.5} (tol 0.05); calibrated 10y rate {:.3}% vs {:.3}%, gap {:.3}pp (tol 0.5pp)",
            fit.z,
            100.0 * model,
            100.0 * target,
            100.0 * gap
        ),
    )
}

fn worker_determinism(dir: &Path) -> Outcome {
    let mut same = true;
    let mut checked = vec![];
    for (command, cfg, file) in [
        ("simulate", "a_rated_single.toml", "rates.csv"),
        ("correlate", "aa_pair.toml", "correlations.csv"),
    ] {
        let mut outputs = vec![];
        for w in ["1", "8"] {
            let out = dir.join(format!("{command}_w{w}"));
            if let Err(e) = fptmc(&[
                command,
                "--config",
                &config(cfg),
                "--runs",
                "20000",
                "--workers",
                w,
                "--out",
                out.to_str().unwrap(),
            ]) {
                return outcome(false, e);
            }
            outputs.push(out);
        }
        for f in [file, "manifest.json"] {
            let a = std::fs::read(outputs[0].join(f)).unwrap();
            let b = std::fs::read(outputs[1].join(f)).unwrap();
            same &= a == b;
            checked.push(format!("{command}/{f}"));
        }
    }
    outcome(
        same,
        format!("workers 1 vs 8 byte-identical: {same} ({})", checked.join(", ")),
    )
}

fn uniform_quality() -> Outcome {
    let n = 1_000_000;
    let crit = 1.628 / (n as f64).sqrt();
    let mut pass = true;
    let mut parts = vec![];
    for (k, target) in [0.0, 0.25, 0.5, 0.767].into_iter().enumerate() {
        let mut stream = RngStream::new(1010 + k as u64, 0);
        let (mut xs, mut ys) = (Vec::with_capacity(n), Vec::with_capacity(n));
        for _ in 0..n {
            let u = sample_correlated_uniforms(2, &UniformTarget::Equicorrelated(target), &mut stream).unwrap();
            xs.push(u[0]);
            ys.push(u[1]);
        }
        let r = pearson(&xs, &ys);
        let d = ks_uniform(&xs).max(ks_uniform(&ys));
        pass &= (r - target).abs() <= 0.02 && d < crit;
        parts.push(format!("{target}: r = {r:.4}, D = {d:.2e}"));
    }
    outcome(pass, format!("{} (tol 0.02, D < {crit:.2e})", parts.join("; ")))
}

fn main() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let criteria: Vec<(&str, Check)> = vec![
        ("bridge identity", Box::new(bridge_identity)),
        ("bridge oracle", Box::new(bridge_oracle)),
        ("bandwidth closed form", Box::new(bandwidth_closed_form)),
        ("no-jump analytic agreement", Box::new(no_jump_agreement)),
        ("UNIF vs Euler", Box::new(|| euler_agreement(d))),
        ("speedup", Box::new(|| speedup(d))),
        ("pair default correlations", Box::new(|| pair_correlations(d))),
        ("calibration round trip", Box::new(|| calibration_round_trip(d))),
        ("worker determinism", Box::new(|| worker_determinism(d))),
        ("correlated uniforms", Box::new(uniform_quality)),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = check();
        failed += !o.pass as usize;
        println!(
            "{} {:>2} {name}: {} [{:.1}s]",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
