//! Subcommand implementations. Each returns the process exit code.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Result;
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use graphopt::costs::CostField;
use graphopt::dynamics::{Mode, SimConfig, Simulation};
use graphopt::gains::{
    Validation, GENERAL_C1_INTEGRAL, GENERAL_C1_LIMIT, GENERAL_C5_SQUARE, GENERAL_RATIOS, SGD_ALPHA1_LIMIT,
    SGD_INTEGRAL, SGD_RATIO, SGD_SQUARE_INTEGRAL, TRACKING_BETA2_INIT, TRACKING_BETA3_INTEGRAL,
    TRACKING_BETA3_LIMIT, TRACKING_PRODUCT_INTEGRAL, TRACKING_RATIO1, TRACKING_RATIO2,
};
use graphopt::graphon::{algebraic_connectivity, is_connected, DiscretizedGraphon, DEFAULT_CONNECTIVITY_TOL};
use graphopt::metrics::{attach_bound12, format_number, squared_deviation_band, write_csv, MetricRow, Snapshot};
use graphopt::Error;

use crate::config::{read_config, KernelSpec, RunConfig};
use crate::sweep::{cases_from, check_coupled, check_scalar, default_cases, read_sweep, CaseVerdict};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_BLOW_UP: i32 = 2;
pub const EXIT_DISK: i32 = 3;

pub const SEED_ENV: &str = "GRAPHOPT_SEED";

/// Grid size for the minimizer of a non-quadratic cost.
pub const MINIMIZER_QUADRATURE: usize = graphopt::costs::DEFAULT_MINIMIZER_QUADRATURE;

/// Random pairs used to check the declared drift constants.
const DRIFT_SAMPLES: usize = 1000;

/// Resolves the seed: flag, then config, then `GRAPHOPT_SEED`, then 0.
pub fn resolve_seed(flag: Option<u64>, config: Option<u64>, env: Option<&str>) -> Result<u64> {
    if let Some(s) = flag.or(config) {
        return Ok(s);
    }
    match env.map(str::trim).filter(|s| !s.is_empty()) {
        Some(s) => s.parse().map_err(|e| anyhow::anyhow!("{SEED_ENV}={s:?} is not a u64: {e}")),
        None => Ok(0),
    }
}

pub fn env_seed() -> Option<String> {
    std::env::var(SEED_ENV).ok()
}

/// One named check with its outcome.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Check { name: name.into(), pass, detail: detail.into() }
    }
}

fn mode_clauses(mode: &Mode<f64>) -> Vec<&'static str> {
    match mode {
        Mode::Sgd { .. } => vec![SGD_INTEGRAL, SGD_SQUARE_INTEGRAL, SGD_RATIO, SGD_ALPHA1_LIMIT],
        Mode::Tracking { .. } => vec![
            TRACKING_BETA2_INIT,
            TRACKING_BETA3_INTEGRAL,
            TRACKING_PRODUCT_INTEGRAL,
            TRACKING_RATIO1,
            TRACKING_RATIO2,
            TRACKING_BETA3_LIMIT,
        ],
        Mode::General(_) => {
            let mut c = vec![GENERAL_C1_INTEGRAL, GENERAL_C1_LIMIT];
            c.extend(GENERAL_RATIOS);
            c.push(GENERAL_C5_SQUARE);
            c
        }
    }
}

fn clause_checks(mode: &Mode<f64>, validation: &Validation) -> Vec<Check> {
    mode_clauses(mode)
        .into_iter()
        .map(|clause| match validation.violations.iter().find(|v| v.clause == clause) {
            Some(v) => Check::new(clause, false, v.detail.clone()),
            None => Check::new(clause, true, ""),
        })
        .collect()
}

/// Every check applied to a configuration before any simulation.
pub fn validation_checks(config: &RunConfig, seed: u64) -> Vec<Check> {
    let mut checks = Vec::new();
    let sim = match config.to_sim_config(seed) {
        Ok(sim) => {
            checks.push(Check::new("configuration well formed", true, ""));
            sim
        }
        Err(e) => {
            checks.push(Check::new("configuration well formed", false, format!("{e:#}")));
            return checks;
        }
    };
    checks.push(match is_connected(&sim.kernel, sim.n_nodes, DEFAULT_CONNECTIVITY_TOL) {
        Ok(r) => Check::new(
            "graphon connected",
            r.connected,
            format!("λ₂ = {}, min degree = {} at N = {}", r.lambda2, r.min_degree, sim.n_nodes),
        ),
        Err(e) => Check::new("graphon connected", false, e.to_string()),
    });
    checks.extend(clause_checks(&sim.mode, &sim.mode.validate_gains()));
    if let Some(cost) = sim.mode.cost() {
        let c = cost.constants();
        checks.push(match c.validate() {
            Ok(()) => Check::new(
                "cost constants consistent",
                true,
                format!("κ = {}, κ₂ = {}, σ_V = {}, C_V = {}", c.kappa, c.kappa2, c.sigma_v, c.c_v),
            ),
            Err(e) => Check::new("cost constants consistent", false, e.to_string()),
        });
    }
    if let Mode::General(spec) = &sim.mode {
        checks.push(match spec.verify_constants(DRIFT_SAMPLES, seed) {
            Ok(ratio) => Check::new("drift constants hold", ratio <= 1.0, format!("worst ratio {ratio}")),
            Err(e) => Check::new("drift constants hold", false, e.to_string()),
        });
    }
    checks
}

fn print_checks(checks: &[Check]) {
    for c in checks {
        let status = if c.pass { "PASS" } else { "FAIL" };
        if c.detail.is_empty() {
            println!("{status}  {}", c.name);
        } else {
            println!("{status}  {}: {}", c.name, c.detail);
        }
    }
}

fn load(path: &str) -> std::result::Result<RunConfig, i32> {
    read_config(path).map_err(|e| {
        eprintln!("error: {e:#}");
        EXIT_FAILED
    })
}

pub fn cmd_validate(path: &str, seed_flag: Option<u64>) -> i32 {
    let config = match load(path) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let seed = match resolve_seed(seed_flag, config.seed, env_seed().as_deref()) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e:#}");
            return EXIT_FAILED;
        }
    };
    let checks = validation_checks(&config, seed);
    print_checks(&checks);
    if checks.iter().all(|c| c.pass) {
        EXIT_OK
    } else {
        EXIT_FAILED
    }
}

/// A pass/fail judgement on a run, with the exact limit applied.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub name: &'static str,
    pub pass: bool,
    pub value: f64,
    pub limit: f64,
    pub tolerance: String,
}

/// Recorded row closest to `t`, if one lies within half a step.
fn row_near(rows: &[MetricRow<f64>], t: f64, dt: f64) -> Option<&MetricRow<f64>> {
    rows.iter().find(|r| (r.t - t).abs() <= 0.5 * dt)
}

/// Five standard errors of a sample variance over `replicas` draws.
fn variance_band(v: f64, replicas: usize) -> f64 {
    5.0 * v * (2.0 / (replicas as f64 - 1.0)).sqrt()
}

fn verdicts(cfg: &SimConfig<f64>, rows: &[MetricRow<f64>], snaps: &[Snapshot<f64>]) -> Vec<Verdict> {
    let mut out = Vec::new();
    let Some(last) = rows.last() else { return out };
    if let Some(mse) = last.node_mse_sup {
        out.push(Verdict {
            name: "node_mse_sup(T) small",
            pass: mse < 0.05,
            value: mse,
            limit: 0.05,
            tolerance: "node_mse_sup(T) < 0.05".into(),
        });
    }
    match &cfg.mode {
        Mode::Sgd { .. } => {
            let at1 = row_near(rows, 1.0, cfg.dt).filter(|r| r.t < last.t);
            if let (Some(end), Some(start)) = (last.node_mse_sup, at1.and_then(|r| r.node_mse_sup)) {
                out.push(Verdict {
                    name: "node_mse_sup decreased",
                    pass: end < 0.2 * start,
                    value: end,
                    limit: 0.2 * start,
                    tolerance: "node_mse_sup(T) < 0.2·node_mse_sup(1)".into(),
                });
            }
            if rows.iter().all(|r| r.bound12.is_some()) {
                let (worst, limit) = rows
                    .iter()
                    .zip(snaps)
                    .map(|(r, s)| {
                        let bound = r.bound12.unwrap_or(f64::INFINITY);
                        let limit = 1.1 * bound + squared_deviation_band(r.consensus_l2, s.mean_band());
                        (r.consensus_l2 - limit, limit)
                    })
                    .fold((f64::NEG_INFINITY, 0.0), |a, b| if b.0 > a.0 { b } else { a });
                out.push(Verdict {
                    name: "consensus within bound",
                    pass: worst <= 0.0,
                    value: worst + limit,
                    limit,
                    tolerance: "consensus_l2(t) ≤ 1.1·bound12(t) + 4ε√consensus_l2 + 4ε², ε = 5σ̂/√R, at the worst recorded t"
                        .into(),
                });
            }
            if let (Some(end), Some(start)) = (last.variance_sup, at1.and_then(|r| r.variance_sup)) {
                let limit = 0.1 * start + variance_band(end, cfg.n_replicas);
                out.push(Verdict {
                    name: "variance decayed",
                    pass: end <= limit,
                    value: end,
                    limit,
                    tolerance: "variance_sup(T) ≤ 0.1·variance_sup(1) + 5·variance_sup(T)·√(2/(R−1))".into(),
                });
            }
            let max = rows.iter().map(|r| r.consensus_linf).fold(0.0, f64::max);
            let limit = 0.02f64.min(0.1 * max);
            out.push(Verdict {
                name: "sup-norm consensus",
                pass: last.consensus_linf <= limit,
                value: last.consensus_linf,
                limit,
                tolerance: "consensus_linf(T) ≤ min(0.02, 0.1·max_t consensus_linf(t))".into(),
            });
        }
        Mode::Tracking { .. } => {
            if let Some(trk) = last.tracking_err {
                out.push(Verdict {
                    name: "tracking_err(T) small",
                    pass: trk < 0.05,
                    value: trk,
                    limit: 0.05,
                    tolerance: "tracking_err(T) < 0.05".into(),
                });
            }
        }
        Mode::General(_) => {}
    }
    out
}

fn minimizer(cost: &CostField<f64>) -> graphopt::Result<(Vec<f64>, &'static str)> {
    if cost.is_quadratic() {
        Ok((cost.global_minimizer_exact()?, "closed form"))
    } else {
        Ok((cost.global_minimizer(MINIMIZER_QUADRATURE)?, "midpoint quadrature, Newton"))
    }
}

fn row_json(row: &MetricRow<f64>) -> serde_json::Value {
    json!({
        "t": row.t,
        "consensus_l2": row.consensus_l2,
        "consensus_linf": row.consensus_linf,
        "variance_sup": row.variance_sup,
        "L": row.minimizer_err,
        "node_mse_sup": row.node_mse_sup,
        "tracking_err": row.tracking_err,
        "bound12": row.bound12,
        "second_moment_int": row.second_moment_int,
    })
}

/// Writes one state matrix: a row per node, replica-major entries.
fn write_states(path: &Path, sim: &Simulation<f64>) -> io::Result<()> {
    let e = sim.ensemble();
    let (n, r, d) = (e.n_nodes(), e.n_replicas(), e.dim());
    let mut out = BufWriter::new(File::create(path)?);
    let header: Vec<String> =
        (0..r).flat_map(|j| (0..d).map(move |k| format!("r{j}_x{k}"))).collect();
    writeln!(out, "p,{}", header.join(","))?;
    for i in 0..n {
        let mut line = format_number(e.coords()[i]);
        for j in 0..r {
            for &v in e.state(i, j) {
                line.push(',');
                line.push_str(&format_number(v));
            }
        }
        writeln!(out, "{line}")?;
    }
    out.flush()
}

pub struct RunArgs<'a> {
    pub config: &'a str,
    pub out: Option<&'a str>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
}

pub fn cmd_run(args: &RunArgs) -> i32 {
    let mut config = match load(args.config) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let seed = match resolve_seed(args.seed, config.seed, env_seed().as_deref()) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e:#}");
            return EXIT_FAILED;
        }
    };
    let checks = validation_checks(&config, seed);
    if !checks.iter().all(|c| c.pass) {
        print_checks(&checks);
        eprintln!("error: configuration failed validation");
        return EXIT_FAILED;
    }
    config.seed = Some(seed);
    let out_dir = PathBuf::from(args.out.or(config.output.dir.as_deref()).unwrap_or("out"));
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(args.threads.unwrap_or(0)).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: thread pool: {e}");
            return EXIT_FAILED;
        }
    };
    pool.install(|| run_in(&config, &out_dir))
}

fn run_in(config: &RunConfig, out_dir: &Path) -> i32 {
    let start = Instant::now();
    let seed = config.seed.unwrap_or(0);
    let sim_config = match config.to_sim_config(seed) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return EXIT_FAILED;
        }
    };
    if let Err(e) = fs::create_dir_all(out_dir) {
        eprintln!("error: cannot create {}: {e}", out_dir.display());
        return EXIT_DISK;
    }
    let x_star = match sim_config.mode.cost().map(minimizer).transpose() {
        Ok(x) => x,
        Err(e) => {
            eprintln!("error: minimizer: {e}");
            return EXIT_FAILED;
        }
    };
    let disc = match DiscretizedGraphon::new(&sim_config.kernel, sim_config.n_nodes) {
        Ok(d) => d,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_FAILED;
        }
    };
    let lambda2 = match algebraic_connectivity(&disc) {
        Ok(l) => l,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_FAILED;
        }
    };

    let mut sim = match Simulation::new(sim_config.clone()) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_FAILED;
        }
    };
    let mut snapshots = Vec::new();
    let mut state_files = Vec::new();
    let mut disk_error: Option<(PathBuf, io::Error)> = None;
    let emit = config.output.emit_states;
    let result = sim.run_with(|s| {
        if emit {
            let path = out_dir.join(format!("states_{:05}.csv", snapshots.len()));
            if let Err(e) = write_states(&path, s) {
                disk_error = Some((path, e));
                return Err(Error::InvalidParameter("state dump failed".into()));
            }
            state_files.push(path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default());
        }
        snapshots.push(s.snapshot());
        Ok(())
    });
    if let Some((path, e)) = disk_error {
        eprintln!("error: cannot write {}: {e}", path.display());
        return EXIT_DISK;
    }
    match result {
        Ok(()) => {}
        Err(Error::BlowUp { step, time }) => {
            eprintln!("error: blow-up at step {step} (t = {time}): non-finite state");
            return EXIT_BLOW_UP;
        }
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_FAILED;
        }
    }

    let x_ref = x_star.as_ref().map(|(x, _)| x.as_slice());
    let mut rows: Vec<_> = snapshots.iter().map(|s| MetricRow::from_snapshot(s, x_ref)).collect();
    let mut bound_constants = serde_json::Value::Null;
    if let Mode::Sgd { cost, gains, .. } = &sim_config.mode {
        match attach_bound12(&mut rows, &snapshots, lambda2, gains, &cost.constants()) {
            Ok((zeta, k0)) => bound_constants = json!({ "zeta": zeta, "K0": k0 }),
            Err(e) => eprintln!("warning: bound12 unavailable: {e}"),
        }
    }

    let csv_path = out_dir.join("metrics.csv");
    if let Err(e) = File::create(&csv_path).and_then(|f| {
        let mut w = BufWriter::new(f);
        write_csv(&rows, &mut w)?;
        w.flush()
    }) {
        eprintln!("error: cannot write {}: {e}", csv_path.display());
        return EXIT_DISK;
    }

    let verdicts = verdicts(&sim_config, &rows, &snapshots);
    let echo = match serde_json::to_value(config) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_FAILED;
        }
    };
    let hash = hex::encode(Sha256::digest(echo.to_string().as_bytes()));
    let report = json!({
        "config": echo,
        "config_sha256": hash,
        "seed": seed,
        "lambda2": lambda2,
        "x_star": x_star.as_ref().map(|(x, _)| x),
        "x_star_method": x_star.as_ref().map(|(_, m)| m),
        "bound12_constants": bound_constants,
        "final": rows.last().map(row_json),
        "verdicts": verdicts,
        "n_steps": sim_config.n_steps(),
        "state_files": state_files,
        "wall_time_s": start.elapsed().as_secs_f64(),
    });
    let report_path = out_dir.join("report.json");
    let text = match serde_json::to_string_pretty(&report) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_FAILED;
        }
    };
    if let Err(e) = fs::write(&report_path, text + "\n") {
        eprintln!("error: cannot write {}: {e}", report_path.display());
        return EXIT_DISK;
    }
    for v in &verdicts {
        println!("{}  {}: {} (limit {})", if v.pass { "PASS" } else { "FAIL" }, v.name, v.value, v.limit);
    }
    println!("wrote {} and {}", csv_path.display(), report_path.display());
    EXIT_OK
}

/// Accepts either a bare kernel block or a run config holding one.
fn read_kernel(path: &str) -> Result<KernelSpec> {
    let value: serde_json::Value = read_config(path)?;
    let block = value.get("kernel").cloned().unwrap_or(value);
    serde_json::from_value(block).map_err(|e| anyhow::anyhow!("{path}: kernel block: {e}"))
}

pub fn cmd_connectivity(path: &str, n: usize) -> i32 {
    let result = (|| -> Result<serde_json::Value> {
        let kernel = read_kernel(path)?.build()?;
        let coarse = is_connected(&kernel, n, DEFAULT_CONNECTIVITY_TOL)?;
        let fine = is_connected(&kernel, 2 * n, DEFAULT_CONNECTIVITY_TOL)?;
        Ok(json!({
            "kernel": kernel.name(),
            "N": n,
            "lambda2_N": coarse.lambda2,
            "lambda2_2N": fine.lambda2,
            "difference": fine.lambda2 - coarse.lambda2,
            "min_degree_N": coarse.min_degree,
            "min_degree_2N": fine.min_degree,
            "connected": coarse.connected && fine.connected,
        }))
    })();
    match result {
        Ok(v) => {
            println!("{}", serde_json::to_string_pretty(&v).unwrap_or_default());
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_FAILED
        }
    }
}

pub fn cmd_lemmas(path: Option<&str>, seed: u64, out: Option<&str>) -> i32 {
    let (scalar, coupled) = match path {
        Some(p) => match read_sweep(p) {
            Ok(spec) => cases_from(&spec),
            Err(e) => {
                eprintln!("error: {e:#}");
                return EXIT_FAILED;
            }
        },
        None => default_cases(seed),
    };
    use rayon::prelude::*;
    let mut verdicts: Vec<CaseVerdict> = scalar.par_iter().map(check_scalar).collect();
    verdicts.extend(coupled.par_iter().map(check_coupled).collect::<Vec<_>>());
    let text = match serde_json::to_string_pretty(&verdicts) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_FAILED;
        }
    };
    println!("{text}");
    if let Some(dir) = out {
        let path = Path::new(dir).join("lemmas.json");
        if let Err(e) = fs::create_dir_all(dir).and_then(|_| fs::write(&path, text + "\n")) {
            eprintln!("error: cannot write {}: {e}", path.display());
            return EXIT_DISK;
        }
    }
    if verdicts.iter().any(CaseVerdict::failed) {
        EXIT_FAILED
    } else {
        EXIT_OK
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_precedence() {
        assert_eq!(resolve_seed(Some(3), Some(2), Some("1")).unwrap(), 3);
        assert_eq!(resolve_seed(None, Some(2), Some("1")).unwrap(), 2);
        assert_eq!(resolve_seed(None, None, Some("1")).unwrap(), 1);
        assert_eq!(resolve_seed(None, None, None).unwrap(), 0);
        assert_eq!(resolve_seed(None, None, Some(" ")).unwrap(), 0);
        assert!(resolve_seed(None, None, Some("x")).is_err());
    }
}
