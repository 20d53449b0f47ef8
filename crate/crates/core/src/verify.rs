//! Named end-to-end checks, one per acceptance criterion.
//!
//! Example experiments are run at most once per [`Verifier`] and shared by
//! the checks that need them.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::arm::{ArmParams, Belief, DiscountFactor, Propagation};
use crate::config::{bundled, ExperimentConfig};
use crate::error::Result;
use crate::experiment::{run_experiment, ExperimentReport};
use crate::grid::BeliefGrid;
use crate::props::{all_suites, draw_general, SuiteSettings};
use crate::sim::evolve_state;
use crate::value::{extract_threshold, gsva, indexability_sweep, GsvaOptions};
use crate::whittle::{index_case1, index_numeric, is_case1};

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
    pub budget: Option<Duration>,
}

impl CheckOutcome {
    /// One line: `[PASS] 3 name (1.2s): detail`.
    pub fn line(&self) -> String {
        format!(
            "[{}] {:>2} {} ({:.1}s): {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.elapsed.as_secs_f64(),
            self.detail
        )
    }
}

pub const CHECKS: [(u8, &str); 10] = [
    (1, "fig5-thresholds"),
    (2, "table1-idle-belief"),
    (3, "indexability-monotone"),
    (4, "closed-form-index-agreement"),
    (5, "example1-values-and-ordering"),
    (6, "example3-values-and-ordering"),
    (7, "bound-dominance"),
    (8, "value-function-properties"),
    (9, "belief-update-oracle"),
    (10, "determinism"),
];

fn minutes(m: u64) -> Duration {
    Duration::from_secs(60 * m)
}

fn budget(id: u8) -> Option<Duration> {
    match id {
        1 => Some(Duration::from_secs(30)),
        2 => Some(Duration::from_secs(1)),
        3 | 4 => Some(minutes(10)),
        5 | 6 => Some(minutes(30)),
        8 => Some(minutes(20)),
        _ => None,
    }
}

fn parse_bundled(text: &str) -> Result<ExperimentConfig> {
    text.parse()
}

fn fig5_arm() -> ArmParams {
    ArmParams::new(0.2, 0.9, 0.3, 0.9, 0.3, 0.9, 3).expect("valid arm")
}

pub struct Verifier {
    work_dir: PathBuf,
    runs: Mutex<BTreeMap<String, Arc<ExperimentReport>>>,
}

impl Verifier {
    /// Artifacts of the example runs go under `work_dir/<example>`.
    pub fn new(work_dir: impl Into<PathBuf>) -> Self {
        Verifier {
            work_dir: work_dir.into(),
            runs: Mutex::new(BTreeMap::new()),
        }
    }

    fn example(&self, name: &str) -> Result<Arc<ExperimentReport>> {
        if let Some(r) = self.runs.lock().expect("cache lock").get(name) {
            return Ok(r.clone());
        }
        let text = bundled::EXAMPLES
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, t)| *t)
            .expect("bundled example name");
        let cfg = parse_bundled(text)?;
        let report = Arc::new(run_experiment(&cfg, &self.work_dir.join(name))?);
        self.runs
            .lock()
            .expect("cache lock")
            .insert(name.to_string(), report.clone());
        Ok(report)
    }

    pub fn run(&self, id: u8) -> CheckOutcome {
        let (_, name) = CHECKS.iter().copied().find(|(i, _)| *i == id).expect("criterion id");
        let start = Instant::now();
        let outcome = match id {
            1 => fig5_thresholds(),
            2 => table1_idle_belief(),
            3 => indexability_monotone(),
            4 => closed_form_agreement(),
            5 => self.example1(),
            6 => self.example3(),
            7 => self.bound_dominance(),
            8 => value_properties(),
            9 => belief_oracle(),
            10 => self.determinism(),
            _ => unreachable!(),
        };
        let elapsed = start.elapsed();
        let budget = budget(id);
        let (mut passed, mut detail) = match outcome {
            Ok(x) => x,
            Err(e) => (false, format!("error: {e}")),
        };
        if let Some(b) = budget {
            if elapsed > b {
                passed = false;
                detail.push_str(&format!("; over the {}s budget", b.as_secs()));
            }
        }
        CheckOutcome {
            id,
            name,
            passed,
            detail,
            elapsed,
            budget,
        }
    }

    pub fn run_all(&self) -> Vec<CheckOutcome> {
        CHECKS.iter().map(|(id, _)| self.run(*id)).collect()
    }

    fn ordering_detail(report: &ExperimentReport, slack_last: f64) -> (bool, String) {
        let v = |p: &str| report.result(p).map(|r| r.final_value()).unwrap_or(f64::NAN);
        let lb = report.bound.result.bound;
        let random_best = v("NUR").max(v("RR")).max(v("UR"));
        let ok = lb >= v("WI") && v("WI") >= v("MWI") && v("MWI") >= v("MP") && v("MP") >= random_best - slack_last;
        (
            ok,
            format!(
                "Lb {:.2} WI {:.2} MWI {:.2} MP {:.2} NUR {:.2} RR {:.2} UR {:.2}",
                lb,
                v("WI"),
                v("MWI"),
                v("MP"),
                v("NUR"),
                v("RR"),
                v("UR")
            ),
        )
    }

    fn example1(&self) -> Result<(bool, String)> {
        let r = self.example("example1")?;
        let v = |p: &str| r.result(p).map(|x| x.final_value()).unwrap_or(f64::NAN);
        let (ordered, values) = Self::ordering_detail(&r, 1.0);
        let bands = [
            ("Lb", r.bound.result.bound, 72.0, 2.0),
            ("WI", v("WI"), 65.52, 3.0),
            ("MP", v("MP"), 61.73, 3.0),
            ("UR", v("UR"), 49.91, 3.0),
        ];
        let missed: Vec<String> = bands
            .iter()
            .filter(|(_, x, c, w)| !((x - c).abs() <= *w))
            .map(|(n, x, c, w)| format!("{n} {x:.2} outside {c}±{w}"))
            .collect();
        let mut detail = values;
        if !ordered {
            detail.push_str("; ordering broken");
        }
        if !missed.is_empty() {
            detail.push_str(&format!("; {}", missed.join(", ")));
        }
        Ok((ordered && missed.is_empty(), detail))
    }

    fn example3(&self) -> Result<(bool, String)> {
        let r = self.example("example3")?;
        let wi = r.result("WI").map(|x| x.final_value()).unwrap_or(f64::NAN);
        let lb = r.bound.result.bound;
        let (ordered, mut detail) = Self::ordering_detail(&r, 0.0);
        let lb_ok = (lb - 62.49).abs() <= 2.0;
        let wi_ok = (wi - 60.48).abs() <= 0.1 * 60.48;
        if !ordered {
            detail.push_str("; ordering broken");
        }
        if !lb_ok {
            detail.push_str("; Lb outside 62.49±2");
        }
        if !wi_ok {
            detail.push_str("; WI outside 60.48±10%");
        }
        Ok((ordered && lb_ok && wi_ok, detail))
    }

    fn bound_dominance(&self) -> Result<(bool, String)> {
        let mut worst = f64::NEG_INFINITY;
        let mut worst_at = String::new();
        let mut failures = Vec::new();
        for (name, _) in bundled::EXAMPLES {
            let r = self.example(name)?;
            let lb = r.bound.result.bound;
            for res in &r.results {
                let lower = res.final_value() - 2.0 * res.final_stderr();
                if lower - lb > worst {
                    worst = lower - lb;
                    worst_at = format!("{name}/{}", res.policy);
                }
                if lower > lb {
                    failures.push(format!("{name}/{} {lower:.3} > {lb:.3}", res.policy));
                }
            }
        }
        let detail = if failures.is_empty() {
            format!("{} examples; tightest {worst_at} at {worst:.3}", bundled::EXAMPLES.len())
        } else {
            failures.join(", ")
        };
        Ok((failures.is_empty(), detail))
    }

    /// Two runs of a reduced example, parallel and on one thread, compared byte for byte.
    fn determinism(&self) -> Result<(bool, String)> {
        let mut cfg = parse_bundled(bundled::EXAMPLE2)?;
        cfg.runs = 40;
        cfg.sessions = 200;
        cfg.trace_runs = 2;
        cfg.etas = vec![0.4];
        cfg.grid_delta = 0.02;
        let a = self.work_dir.join("determinism_a");
        let b = self.work_dir.join("determinism_b");
        run_experiment(&cfg, &a)?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .map_err(|e| crate::error::LrbError::Precondition(e.to_string()))?;
        pool.install(|| run_experiment(&cfg, &b))?;
        let diffs = differing_files(&a, &b)?;
        let count = fs::read_dir(&a)?.count();
        Ok(if diffs.is_empty() {
            (true, format!("{count} files identical across thread counts"))
        } else {
            (false, format!("differing: {}", diffs.join(", ")))
        })
    }
}

fn differing_files(a: &Path, b: &Path) -> Result<Vec<String>> {
    let mut names: Vec<_> = fs::read_dir(a)?.map(|e| e.map(|e| e.file_name())).collect::<std::io::Result<_>>()?;
    names.sort();
    let mut diffs = Vec::new();
    for n in names {
        let other = b.join(&n);
        if !other.exists() || fs::read(a.join(&n))? != fs::read(&other)? {
            diffs.push(n.to_string_lossy().into_owned());
        }
    }
    if fs::read_dir(b)?.count() != fs::read_dir(a)?.count() {
        diffs.push("file sets differ".into());
    }
    Ok(diffs)
}

fn fig5_thresholds() -> Result<(bool, String)> {
    let grid = BeliefGrid::new(0.005)?;
    let beta = DiscountFactor::new(0.99)?;
    let mut ok = true;
    let mut parts = Vec::new();
    for (eta, want) in [(0.5, 0.72), (0.6, 0.58)] {
        let vg = gsva(&fig5_arm(), eta, beta, &grid, &GsvaOptions::default())?;
        let t = extract_threshold(&vg, 1e-6)?;
        let got = t.pi_t.unwrap_or(f64::NAN);
        ok &= (got - want).abs() <= 0.03;
        parts.push(format!("eta {eta}: {got:.3} (want {want}±0.03)"));
    }
    Ok((ok, parts.join(", ")))
}

fn table1_idle_belief() -> Result<(bool, String)> {
    // (p00, p10, rho0, rho1, k, idle belief, stationary belief)
    let rows = [
        (0.9, 0.4, 0.0, 0.95, 10, 0.80, 0.8),
        (0.95, 0.45, 0.0, 0.95, 10, 0.90, 0.9),
        (0.8, 0.3, 0.2, 0.95, 10, 0.60, 0.6),
        (0.8, 0.6, 0.2, 0.95, 5, 0.75, 0.75),
        (0.5, 0.3, 0.1, 0.9, 5, 0.375, 0.375),
    ];
    let mut worst: f64 = 0.0;
    for (p00, p10, rho0, rho1, k, g2, q) in rows {
        let arm = ArmParams::new(p00, p10, rho0, rho1, rho0, rho1, k)?;
        worst = worst.max((arm.stationary_q()?.value() - q).abs());
        for j in 0..=20 {
            let pi = Belief::new(j as f64 / 20.0)?;
            worst = worst.max((arm.gamma2(pi).value() - g2).abs());
        }
    }
    Ok((worst <= 0.005, format!("5 rows, 21 beliefs each; max deviation {worst:.2e}")))
}

fn indexability_monotone() -> Result<(bool, String)> {
    let etas: Vec<f64> = (1..=19).map(|j| j as f64 * 0.05).collect();
    let grid = BeliefGrid::new(0.005)?;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut cases = vec![(fig5_arm(), 0.99)];
    for _ in 0..20 {
        let d = draw_general(&mut rng);
        cases.push((d.arm, d.beta));
    }
    let reports = cases
        .iter()
        .map(|(arm, beta)| indexability_sweep(arm, DiscountFactor::new(*beta)?, &grid, &GsvaOptions::default(), &etas, 1e-6))
        .collect::<Result<Vec<_>>>()?;
    let bad: Vec<usize> = reports.iter().enumerate().filter(|(_, r)| !r.is_monotone()).map(|(i, _)| i).collect();
    let multi: usize = reports.iter().map(|r| r.structure_violations.len()).sum();
    let detail = format!(
        "{} arms x {} subsidies; nonmonotone arms {:?}; multi-crossing tables {}",
        cases.len(),
        etas.len(),
        bad,
        multi
    );
    Ok((bad.is_empty(), detail))
}

fn closed_form_agreement() -> Result<(bool, String)> {
    let cfg = parse_bundled(bundled::EXAMPLE0)?;
    let grid = BeliefGrid::new(0.01)?;
    let mut worst: f64 = 0.0;
    let mut at = (0, 0.0);
    for (m, arm) in cfg.decision_arms().iter().enumerate() {
        if !is_case1(arm) {
            return Ok((false, format!("arm {} does not meet the closed-form preconditions", m + 1)));
        }
        for &pi in grid.points() {
            let closed = index_case1(Belief::new(pi)?, arm, cfg.beta)?;
            let numeric = index_numeric(Belief::new(pi)?, arm, cfg.beta, &grid, &cfg.index)?;
            let gap = (closed - numeric).abs();
            if gap > worst {
                worst = gap;
                at = (m + 1, pi);
            }
        }
    }
    Ok((
        worst <= 0.02,
        format!("max gap {worst:.4} (arm {}, pi {:.2}); limit 0.02", at.0, at.1),
    ))
}

fn value_properties() -> Result<(bool, String)> {
    let settings = SuiteSettings {
        grid_intervals: 10_000,
        ..SuiteSettings::default()
    };
    let reports = all_suites(&settings)?;
    let failed: Vec<String> = reports
        .iter()
        .filter(|r| !r.passed())
        .map(|r| format!("{} ({} violations)", r.name, r.violations.len()))
        .collect();
    let worst = reports.iter().map(|r| r.worst_ratio).fold(0.0, f64::max);
    let draws: usize = reports.iter().map(|r| r.draws).sum();
    Ok(if failed.is_empty() {
        (
            true,
            format!("{} suites, {draws} draws, worst defect/tolerance {worst:.3}", reports.len()),
        )
    } else {
        (false, failed.join("; "))
    })
}

/// Bayes update then propagation by explicit enumeration over the two states.
pub fn brute_force_update(arm: &ArmParams, pi: f64, feedback: u8) -> Option<f64> {
    let prior = [pi, 1.0 - pi];
    let ack = [arm.rho0, arm.rho1];
    let like = |s: usize| if feedback == 1 { ack[s] } else { 1.0 - ack[s] };
    let evidence: f64 = (0..2).map(|s| prior[s] * like(s)).sum();
    if evidence <= 0.0 {
        return None;
    }
    let steps = match arm.propagation {
        Propagation::OneStep => 1,
        Propagation::KStep => arm.k,
    };
    let to_zero = (0..2).map(|s| {
        // Walk the chain one transition at a time from a point mass on `s`.
        let mut dist = [0.0, 0.0];
        dist[s] = 1.0;
        for _ in 0..steps {
            dist = [
                dist[0] * arm.p00 + dist[1] * arm.p10,
                dist[0] * (1.0 - arm.p00) + dist[1] * (1.0 - arm.p10),
            ];
        }
        dist[0]
    });
    Some(
        to_zero
            .enumerate()
            .map(|(s, z)| prior[s] * like(s) / evidence * z)
            .sum(),
    )
}

fn belief_oracle() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut worst: f64 = 0.0;
    let pairs = 10_000;
    for n in 0..pairs {
        let d = draw_general(&mut rng);
        let propagation = if n % 2 == 0 { Propagation::OneStep } else { Propagation::KStep };
        let arm = d.arm.with_propagation(propagation);
        let pi = rng.gen_range(0.0..=1.0);
        for (fb, got) in [(1, arm.gamma1(Belief::new(pi)?)), (0, arm.gamma0(Belief::new(pi)?))] {
            match (brute_force_update(&arm, pi, fb), got) {
                (Some(want), Ok(got)) => worst = worst.max((want - got.value()).abs()),
                (None, Err(_)) => {}
                _ => return Ok((false, format!("feasibility disagrees at {arm:?}, pi {pi}"))),
            }
        }
    }
    let within = worst <= 1e-12;

    // Empirical law of `evolve_state` against `P^K`.
    let samples = 200_000;
    let mut z_worst: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..10 {
        let d = draw_general(&mut rng);
        let pk = d.arm.kstep_matrix(d.arm.k);
        for start in 0..2u8 {
            let zeros = (0..samples).filter(|_| evolve_state(start, &d.arm, d.arm.k, &mut rng) == 0).count();
            let p = pk[start as usize][0];
            let sd = (p * (1.0 - p) / samples as f64).sqrt().max(1e-12);
            z_worst = z_worst.max((zeros as f64 / samples as f64 - p).abs() / sd);
        }
    }
    let law = z_worst <= 3.0;
    Ok((
        within && law,
        format!("{pairs} pairs, max update error {worst:.1e}; 20 start states x {samples} draws, max |z| {z_worst:.2}"),
    ))
}
