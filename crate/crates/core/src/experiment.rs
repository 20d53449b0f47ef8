//! Orchestration: index tables, value tables, the Lagrangian bound and policy
//! simulations for one configuration, written as CSV files.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::config::{ExperimentConfig, PolicyKind};
use crate::csvfmt::fmt_num;
use crate::error::{LrbError, Result};
use crate::lagrange::{lagrange_bound_on, LagrangeResult, Relaxation, StopReason};
use crate::sim::{run_policy, write_trace_csv, PolicySpec, SimResult};
use crate::value::solve;
use crate::value::StageRewards;
use crate::whittle::{build_index_table, modified_whittle, IndexTable, MwiTable};

/// Runs `f` on a pool capped by `LRB_THREADS` (unset or 0 = one thread per core).
pub fn with_thread_limit<T: Send>(f: impl FnOnce() -> T + Send) -> Result<T> {
    let threads = match std::env::var("LRB_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| LrbError::invalid("LRB_THREADS", format!("`{v}` is not a thread count")))?,
        Err(_) => 0,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| LrbError::invalid("LRB_THREADS", e.to_string()))?;
    Ok(pool.install(f))
}

fn create(dir: &Path, name: &str, written: &mut Vec<PathBuf>) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    let file = File::create(&path).map_err(|e| LrbError::from(e).context(format!("creating {}", path.display())))?;
    written.push(path);
    Ok(BufWriter::new(file))
}

fn prepare_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| LrbError::from(e).context(format!("creating {}", dir.display())))
}

pub fn index_tables(cfg: &ExperimentConfig) -> Result<Vec<IndexTable>> {
    let grid = cfg.grid()?;
    cfg.decision_arms()
        .par_iter()
        .enumerate()
        .map(|(m, arm)| {
            build_index_table(arm, cfg.beta, &grid, &cfg.index).map_err(|e| e.context(format!("index table, arm {}", m + 1)))
        })
        .collect()
}

pub fn mwi_tables(cfg: &ExperimentConfig) -> Result<Vec<MwiTable>> {
    let grid = cfg.grid()?;
    cfg.decision_arms()
        .par_iter()
        .map(|arm| modified_whittle(arm, cfg.beta, &grid, cfg.mwi_horizon))
        .collect()
}

/// Writes `index_arm<m>.csv` for every arm.
pub fn write_index(cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    prepare_dir(dir)?;
    let mut written = Vec::new();
    for (m, table) in index_tables(cfg)?.iter().enumerate() {
        let mut out = create(dir, &format!("index_arm{}.csv", m + 1), &mut written)?;
        table.write_csv(&mut out)?;
        out.flush()?;
    }
    Ok(written)
}

/// Writes `value_arm<m>_eta<j>.csv` for every arm and subsidy in the config,
/// or a header-only `value_arm<m>.csv` per arm when no subsidies are given.
pub fn write_values(cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    prepare_dir(dir)?;
    let grid = cfg.grid()?;
    let arms = cfg.decision_arms();
    let mut written = Vec::new();
    if cfg.etas.is_empty() {
        for m in 0..arms.len() {
            let mut out = create(dir, &format!("value_arm{}.csv", m + 1), &mut written)?;
            writeln!(out, "pi,v_s,v_ns,v")?;
            out.flush()?;
        }
        return Ok(written);
    }
    let jobs: Vec<(usize, usize)> = (0..arms.len()).flat_map(|m| (0..cfg.etas.len()).map(move |j| (m, j))).collect();
    let grids = jobs
        .par_iter()
        .map(|&(m, j)| {
            solve(&arms[m], StageRewards::subsidy(cfg.etas[j]), cfg.beta, &grid, &cfg.gsva, None)
                .map_err(|e| e.context(format!("value table, arm {}, eta {}", m + 1, cfg.etas[j])))
        })
        .collect::<Result<Vec<_>>>()?;
    for (&(m, j), vg) in jobs.iter().zip(&grids) {
        let mut out = create(dir, &format!("value_arm{}_eta{}.csv", m + 1, j + 1), &mut written)?;
        vg.write_csv(&mut out)?;
        out.flush()?;
    }
    Ok(written)
}

/// Lagrangian bound plus the golden-section cross-check.
#[derive(Debug, Clone)]
pub struct BoundReport {
    pub result: LagrangeResult,
    pub golden_lambda: f64,
    pub golden_bound: f64,
}

pub fn compute_bound(cfg: &ExperimentConfig) -> Result<BoundReport> {
    let grid = cfg.grid()?;
    let start = cfg.sim_config().resolve_initial_beliefs()?;
    let relax = Relaxation::new(&cfg.decision_arms(), &start, cfg.beta, &grid, &cfg.lagrange.gsva)?;
    let (golden_lambda, golden_bound) = relax.golden_section(1e-6).map_err(|e| e.context("lagrangian bound"))?;
    let result = match lagrange_bound_on(&relax, &cfg.lagrange) {
        Ok(r) => r,
        Err(LrbError::LagrangeNotConverged { trace, .. }) => LagrangeResult {
            lambda_star: golden_lambda,
            bound: golden_bound,
            trace,
            stop: StopReason::GoldenFallback,
        },
        Err(e) => return Err(e.context("lagrangian bound")),
    };
    Ok(BoundReport {
        result,
        golden_lambda,
        golden_bound,
    })
}

/// Writes `bound_trace.csv` and `bound.csv`.
pub fn write_bound(cfg: &ExperimentConfig, dir: &Path) -> Result<(BoundReport, Vec<PathBuf>)> {
    prepare_dir(dir)?;
    let report = compute_bound(cfg)?;
    let mut written = Vec::new();
    let mut out = create(dir, "bound_trace.csv", &mut written)?;
    report.result.write_trace_csv(&mut out)?;
    out.flush()?;
    let mut out = create(dir, "bound.csv", &mut written)?;
    writeln!(out, "lambda_star,bound,stop,golden_lambda,golden_bound")?;
    let stop = match report.result.stop {
        StopReason::Subgradient => "subgradient",
        StopReason::Stalled => "stalled",
        StopReason::GoldenFallback => "golden_fallback",
    };
    writeln!(
        out,
        "{},{},{},{},{}",
        fmt_num(report.result.lambda_star),
        fmt_num(report.result.bound),
        stop,
        fmt_num(report.golden_lambda),
        fmt_num(report.golden_bound)
    )?;
    out.flush()?;
    Ok((report, written))
}

pub fn build_policies(cfg: &ExperimentConfig) -> Result<Vec<PolicySpec>> {
    policies_from(cfg, None)
}

/// Policy specs for the configured list, reusing `wi` when the index tables are already built.
fn policies_from(cfg: &ExperimentConfig, wi: Option<Vec<IndexTable>>) -> Result<Vec<PolicySpec>> {
    let wi = match wi {
        Some(t) => Some(t),
        None if cfg.policies.contains(&PolicyKind::Wi) => Some(index_tables(cfg)?),
        None => None,
    };
    let mwi = if cfg.policies.contains(&PolicyKind::Mwi) { Some(mwi_tables(cfg)?) } else { None };
    Ok(cfg
        .policies
        .iter()
        .map(|p| match p {
            PolicyKind::Wi => PolicySpec::Whittle(wi.clone().expect("built above")),
            PolicyKind::Mwi => PolicySpec::ModifiedWhittle(mwi.clone().expect("built above")),
            PolicyKind::Mp => PolicySpec::Myopic,
            PolicyKind::Nur => PolicySpec::NonUniformRandom,
            PolicyKind::Rr => PolicySpec::RoundRobin,
            PolicyKind::Ur => PolicySpec::UniformRandom,
        })
        .collect())
}

fn write_summary(results: &[SimResult], dir: &Path, written: &mut Vec<PathBuf>) -> Result<()> {
    let mut out = create(dir, "summary.csv", written)?;
    writeln!(out, "policy,final_value,stderr")?;
    for r in results {
        writeln!(out, "{},{},{}", r.policy, fmt_num(r.final_value()), fmt_num(r.final_stderr()))?;
    }
    out.flush()?;
    Ok(())
}

fn simulate_with(cfg: &ExperimentConfig, policies: &[PolicySpec], dir: &Path) -> Result<(Vec<SimResult>, Vec<PathBuf>)> {
    prepare_dir(dir)?;
    let sim = cfg.sim_config();
    let mut written = Vec::new();
    let mut results = Vec::new();
    for policy in policies {
        let res = run_policy(&sim, policy).map_err(|e| e.context(format!("simulating {}", policy.name())))?;
        let mut out = create(dir, &format!("sim_{}.csv", res.policy), &mut written)?;
        res.write_curve_csv(&mut out)?;
        out.flush()?;
        let mut out = create(dir, &format!("choice_{}.csv", res.policy), &mut written)?;
        res.write_choice_csv(&mut out)?;
        out.flush()?;
        if cfg.trace_runs > 0 {
            let mut out = create(dir, &format!("trace_{}.csv", res.policy), &mut written)?;
            write_trace_csv(&sim, policy, cfg.trace_runs, &mut out)?;
            out.flush()?;
        }
        results.push(res);
    }
    write_summary(&results, dir, &mut written)?;
    Ok((results, written))
}

/// Per-policy curves, choice fractions and `summary.csv`.
pub fn write_simulations(cfg: &ExperimentConfig, dir: &Path) -> Result<(Vec<SimResult>, Vec<PathBuf>)> {
    let policies = build_policies(cfg)?;
    simulate_with(cfg, &policies, dir)
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub bound: BoundReport,
    pub results: Vec<SimResult>,
    pub files: Vec<PathBuf>,
}

impl ExperimentReport {
    pub fn result(&self, policy: &str) -> Option<&SimResult> {
        self.results.iter().find(|r| r.policy == policy)
    }
}

/// Everything at once: index, MWI and value tables, the bound, and the simulations.
pub fn run_experiment(cfg: &ExperimentConfig, dir: &Path) -> Result<ExperimentReport> {
    cfg.validate()?;
    prepare_dir(dir)?;
    let mut files = Vec::new();

    let wi = index_tables(cfg)?;
    for (m, table) in wi.iter().enumerate() {
        let mut out = create(dir, &format!("index_arm{}.csv", m + 1), &mut files)?;
        table.write_csv(&mut out)?;
        out.flush()?;
    }
    files.extend(write_values(cfg, dir)?);
    let (bound, bound_files) = write_bound(cfg, dir)?;
    files.extend(bound_files);

    let policies = policies_from(cfg, Some(wi))?;
    let (results, sim_files) = simulate_with(cfg, &policies, dir)?;
    files.extend(sim_files);
    Ok(ExperimentReport { bound, results, files })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = "
        name = small
        beta = 0.9
        grid_delta = 0.05
        sessions = 30
        runs = 10
        seed = 3
        policies = WI, MWI, MP, NUR, RR, UR
        mwi_horizon = 20
        etas = 0.4
        trace_runs = 1
        [arm]
        p00 = 0.7
        p10 = 0.2
        rho0 = 0
        rho1 = 1
        r0 = 0.1
        r1 = 1
        k = 3
        [arm]
        p00 = 0.6
        p10 = 0.3
        rho0 = 0.2
        rho1 = 0.8
        r0 = 0.2
        r1 = 0.9
        k = 2
    ";

    #[test]
    fn writes_every_artifact() {
        let cfg: ExperimentConfig = SMALL.parse().unwrap();
        let dir = tempfile::tempdir().unwrap();
        let report = run_experiment(&cfg, dir.path()).unwrap();
        for name in [
            "index_arm1.csv",
            "index_arm2.csv",
            "value_arm1_eta1.csv",
            "bound.csv",
            "bound_trace.csv",
            "sim_WI.csv",
            "choice_MWI.csv",
            "trace_UR.csv",
            "summary.csv",
        ] {
            assert!(dir.path().join(name).exists(), "{name}");
        }
        let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
        assert_eq!(summary.lines().count(), 7);
        assert!(summary.starts_with("policy,final_value,stderr\nWI,"));
        assert_eq!(report.results.len(), 6);
    }

    #[test]
    fn empty_policy_list_gives_header_only_summary() {
        let cfg: ExperimentConfig = SMALL.replace("policies = WI, MWI, MP, NUR, RR, UR", "policies =").parse().unwrap();
        let dir = tempfile::tempdir().unwrap();
        let report = run_experiment(&cfg, dir.path()).unwrap();
        assert!(report.results.is_empty());
        let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
        assert_eq!(summary, "policy,final_value,stderr\n");
    }

    #[test]
    fn no_subsidies_gives_header_only_value_files() {
        let cfg: ExperimentConfig = SMALL.replace("etas = 0.4", "").parse().unwrap();
        let dir = tempfile::tempdir().unwrap();
        let files = write_values(&cfg, dir.path()).unwrap();
        assert_eq!(files.len(), 2);
        for f in files {
            assert_eq!(fs::read_to_string(f).unwrap(), "pi,v_s,v_ns,v\n");
        }
    }
}
