//! Experiment configuration: flat `key = value` lines plus one `[arm]` block per arm.
//!
//! ```text
//! beta = 0.99
//! policies = WI, MP, UR
//!
//! [arm]
//! p00 = 0.2
//! p10 = 0.9
//! rho0 = 0.3
//! rho1 = 0.9
//! r0 = 0.3
//! r1 = 0.9
//! k = 3
//! ```
//!
//! `#` starts a comment. Unknown keys are errors.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::arm::{ArmParams, DiscountFactor, Propagation};
use crate::error::{LrbError, Result};
use crate::grid::BeliefGrid;
use crate::lagrange::{LagrangeParams, StepSchedule};
use crate::sim::{InitialBeliefs, SessionDynamics, SimConfig};
use crate::value::GsvaOptions;
use crate::whittle::NumericIndexParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PolicyKind {
    Wi,
    Mwi,
    Mp,
    Nur,
    Rr,
    Ur,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 6] = [
        PolicyKind::Wi,
        PolicyKind::Mwi,
        PolicyKind::Mp,
        PolicyKind::Nur,
        PolicyKind::Rr,
        PolicyKind::Ur,
    ];
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PolicyKind::Wi => "WI",
            PolicyKind::Mwi => "MWI",
            PolicyKind::Mp => "MP",
            PolicyKind::Nur => "NUR",
            PolicyKind::Rr => "RR",
            PolicyKind::Ur => "UR",
        })
    }
}

impl FromStr for PolicyKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_uppercase().as_str() {
            "WI" => Ok(PolicyKind::Wi),
            "MWI" => Ok(PolicyKind::Mwi),
            "MP" => Ok(PolicyKind::Mp),
            "NUR" => Ok(PolicyKind::Nur),
            "RR" => Ok(PolicyKind::Rr),
            "UR" | "RANDOM" => Ok(PolicyKind::Ur),
            other => Err(format!("unknown policy `{other}`")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub name: String,
    /// True arms: they drive hidden states and feedback.
    pub arms: Vec<ArmParams>,
    /// Per-arm estimate of `k` used for decisions, if it differs from the truth.
    pub k_estimates: Vec<Option<u32>>,
    pub beta: DiscountFactor,
    pub grid_delta: f64,
    pub gsva: GsvaOptions,
    pub index: NumericIndexParams,
    pub lagrange: LagrangeParams,
    pub mwi_horizon: usize,
    pub sessions: usize,
    pub runs: usize,
    pub seed: u64,
    pub initial_beliefs: InitialBeliefs,
    pub dynamics: SessionDynamics,
    pub policies: Vec<PolicyKind>,
    /// Subsidies for the `value` subcommand.
    pub etas: Vec<f64>,
    /// Sample paths written to the per-policy trace file (0 = none).
    pub trace_runs: usize,
    pub out_dir: PathBuf,
}

const TOP_KEYS: &[&str] = &[
    "name",
    "beta",
    "grid_delta",
    "gsva_tol",
    "gsva_max_sweeps",
    "eta0",
    "alpha",
    "index_tol",
    "index_max_iters",
    "index_gsva_tol",
    "lambda0",
    "lambda_probe",
    "lambda_alpha0",
    "lambda_tau",
    "lambda_tol",
    "lambda_step_tol",
    "lambda_max_iters",
    "lambda_gsva_tol",
    "mwi_horizon",
    "sessions",
    "runs",
    "seed",
    "initial_beliefs",
    "dynamics",
    "post_feedback_propagation",
    "k_e",
    "policies",
    "etas",
    "trace_runs",
    "out_dir",
];

const ARM_KEYS: &[&str] = &["p00", "p10", "rho0", "rho1", "r0", "r1", "k", "k_e", "post_feedback_propagation"];

struct Section {
    line: usize,
    values: BTreeMap<String, (usize, String)>,
}

fn split_sections(text: &str, errors: &mut Vec<String>) -> (Section, Vec<Section>) {
    let mut top = Section { line: 0, values: BTreeMap::new() };
    let mut arms: Vec<Section> = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let n = n + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('[') {
            if line == "[arm]" {
                arms.push(Section { line: n, values: BTreeMap::new() });
            } else {
                errors.push(format!("line {n}: unknown section `{line}`"));
            }
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            errors.push(format!("line {n}: expected `key = value`"));
            continue;
        };
        let key = key.trim().to_string();
        let section = arms.last_mut().unwrap_or(&mut top);
        if section.values.insert(key.clone(), (n, value.trim().to_string())).is_some() {
            errors.push(format!("line {n}: `{key}` given twice"));
        }
    }
    (top, arms)
}

/// Pulls typed values out of one section, collecting every problem.
struct Reader<'a> {
    section: &'a Section,
    prefix: String,
    errors: &'a mut Vec<String>,
}

impl Reader<'_> {
    fn raw(&self, key: &str) -> Option<&(usize, String)> {
        self.section.values.get(key)
    }

    fn parse<T: FromStr>(&mut self, key: &str) -> Option<T>
    where
        T::Err: fmt::Display,
    {
        let (line, text) = self.raw(key)?;
        match text.parse::<T>() {
            Ok(v) => Some(v),
            Err(e) => {
                self.errors
                    .push(format!("{}{key} (line {line}): cannot parse `{text}`: {e}", self.prefix));
                None
            }
        }
    }

    fn or<T: FromStr>(&mut self, key: &str, default: T) -> T
    where
        T::Err: fmt::Display,
    {
        self.parse(key).unwrap_or(default)
    }

    fn required(&mut self, key: &str) -> Option<f64> {
        if self.raw(key).is_none() {
            self.errors.push(format!("{}{key}: missing", self.prefix));
            return None;
        }
        self.parse(key)
    }

    fn list<T: FromStr>(&mut self, key: &str) -> Option<Vec<T>>
    where
        T::Err: fmt::Display,
    {
        let (line, text) = self.raw(key)?.clone();
        let mut out = Vec::new();
        for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            match item.parse::<T>() {
                Ok(v) => out.push(v),
                Err(e) => {
                    self.errors
                        .push(format!("{}{key} (line {line}): cannot parse `{item}`: {e}", self.prefix));
                    return None;
                }
            }
        }
        Some(out)
    }

    fn unknown_keys(&mut self, allowed: &[&str]) {
        for (key, (line, _)) in &self.section.values {
            if !allowed.contains(&key.as_str()) {
                self.errors.push(format!("{}{key} (line {line}): unknown key", self.prefix));
            }
        }
    }
}

fn parse_propagation(s: &str) -> std::result::Result<Propagation, String> {
    match s {
        "one_step" => Ok(Propagation::OneStep),
        "k_step" => Ok(Propagation::KStep),
        other => Err(format!("`{other}` is not one_step or k_step")),
    }
}

struct Prop(Propagation);

impl FromStr for Prop {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        parse_propagation(s).map(Prop)
    }
}

struct Dyn(SessionDynamics);

impl FromStr for Dyn {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "all_arms_k" => Ok(Dyn(SessionDynamics::AllArmsK)),
            "played_one_step" => Ok(Dyn(SessionDynamics::PlayedOneStep)),
            other => Err(format!("`{other}` is not all_arms_k or played_one_step")),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LrbError::from(e).context(format!("reading {}", path.display())))?;
        text.parse()
    }

    /// Arms as the decision maker models them (with `k_e` where given).
    pub fn decision_arms(&self) -> Vec<ArmParams> {
        self.arms
            .iter()
            .zip(&self.k_estimates)
            .map(|(a, k)| k.map_or(*a, |k| a.with_k(k)))
            .collect()
    }

    pub fn grid(&self) -> Result<BeliefGrid> {
        BeliefGrid::new(self.grid_delta)
    }

    pub fn sim_config(&self) -> SimConfig {
        let model = self.decision_arms();
        SimConfig {
            arms: self.arms.clone(),
            model_arms: (model != self.arms).then_some(model),
            beta: self.beta,
            sessions: self.sessions,
            runs: self.runs,
            seed: self.seed,
            initial_beliefs: self.initial_beliefs.clone(),
            dynamics: self.dynamics,
        }
    }

    /// Re-checks scalars that command-line overrides may have changed.
    pub fn validate(&self) -> Result<()> {
        let mut errors = Vec::new();
        if let Err(e) = BeliefGrid::new(self.grid_delta) {
            errors.push(e.to_string());
        }
        if let Err(LrbError::Config(e)) = self.sim_config().validate() {
            errors.extend(e);
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(LrbError::Config(errors))
        }
    }
}

impl FromStr for ExperimentConfig {
    type Err = LrbError;

    fn from_str(text: &str) -> Result<Self> {
        let mut errors = Vec::new();
        let (top, arm_sections) = split_sections(text, &mut errors);
        let mut r = Reader { section: &top, prefix: String::new(), errors: &mut errors };
        r.unknown_keys(TOP_KEYS);

        let name = r.or("name", "experiment".to_string());
        let beta_raw: f64 = r.or("beta", 0.99);
        let grid_delta = r.or("grid_delta", 0.005);
        let gsva = GsvaOptions {
            tol: r.or("gsva_tol", GsvaOptions::default().tol),
            max_sweeps: r.or("gsva_max_sweeps", GsvaOptions::default().max_sweeps),
            ..GsvaOptions::default()
        };
        let idx_default = NumericIndexParams::default();
        let index = NumericIndexParams {
            eta0: r.parse("eta0"),
            alpha: r.parse("alpha"),
            tol: r.or("index_tol", idx_default.tol),
            max_iters: r.or("index_max_iters", idx_default.max_iters),
            gsva: GsvaOptions { tol: r.or("index_gsva_tol", idx_default.gsva.tol), ..idx_default.gsva },
        };
        let lg = LagrangeParams::default();
        let lagrange = LagrangeParams {
            lambda0: r.or("lambda0", lg.lambda0),
            probe: r.or("lambda_probe", lg.probe),
            steps: StepSchedule {
                alpha0: r.or("lambda_alpha0", lg.steps.alpha0),
                tau: r.or("lambda_tau", lg.steps.tau),
            },
            tol: r.or("lambda_tol", lg.tol),
            lambda_tol: r.or("lambda_step_tol", lg.lambda_tol),
            max_iters: r.or("lambda_max_iters", lg.max_iters),
            gsva: GsvaOptions { tol: r.or("lambda_gsva_tol", lg.gsva.tol), ..lg.gsva },
        };
        let mwi_horizon = r.or("mwi_horizon", 1000usize);
        let sessions = r.or("sessions", 1000usize);
        let runs = r.or("runs", 500usize);
        let seed = r.or("seed", 1u64);
        let initial_beliefs = match r.raw("initial_beliefs").map(|(_, v)| v.as_str()) {
            None | Some("stationary") => InitialBeliefs::Stationary,
            Some("uniform_random") => InitialBeliefs::UniformRandom,
            Some(_) => InitialBeliefs::Explicit(r.list("initial_beliefs").unwrap_or_default()),
        };
        let dynamics = r.parse::<Dyn>("dynamics").map_or(SessionDynamics::default(), |d| d.0);
        let propagation = r.parse::<Prop>("post_feedback_propagation").map_or(Propagation::default(), |p| p.0);
        let global_k_e: Option<u32> = r.parse("k_e");
        let policies = match r.raw("policies") {
            None => PolicyKind::ALL.to_vec(),
            Some(_) => r.list("policies").unwrap_or_default(),
        };
        let etas = r.list("etas").unwrap_or_default();
        let trace_runs = r.or("trace_runs", 0usize);
        let out_dir = PathBuf::from(r.or("out_dir", format!("out/{name}")));

        if global_k_e == Some(0) {
            r.errors.push("k_e: must be at least 1".to_string());
        }
        let beta = match DiscountFactor::new(beta_raw) {
            Ok(b) => Some(b),
            Err(e) => {
                r.errors.push(e.to_string());
                None
            }
        };
        if let Err(e) = BeliefGrid::new(grid_delta) {
            r.errors.push(e.to_string());
        }
        if arm_sections.is_empty() {
            r.errors.push("arms: at least one [arm] block is required".to_string());
        }

        let mut arms = Vec::new();
        let mut k_estimates = Vec::new();
        for (i, section) in arm_sections.iter().enumerate() {
            let mut r = Reader {
                section,
                prefix: format!("arm {} (line {}): ", i + 1, section.line),
                errors: &mut errors,
            };
            r.unknown_keys(ARM_KEYS);
            let fields = ["p00", "p10", "rho0", "rho1", "r0", "r1"].map(|k| r.required(k));
            let k: Option<u32> = if r.raw("k").is_none() {
                r.errors.push(format!("{}k: missing", r.prefix));
                None
            } else {
                r.parse("k")
            };
            let k_e: Option<u32> = r.parse("k_e").or(global_k_e);
            if k_e == Some(0) {
                r.errors.push(format!("{}k_e: must be at least 1", r.prefix));
            }
            let arm_propagation = r.parse::<Prop>("post_feedback_propagation").map_or(propagation, |p| p.0);
            // placeholders keep range checks running on the fields that did parse
            let names = ["p00", "p10", "rho0", "rho1", "r0", "r1"];
            let [p00, p10, rho0, rho1, r0, r1] = fields.map(|f| f.unwrap_or(0.5));
            let arm = ArmParams { p00, p10, rho0, rho1, r0, r1, k: k.unwrap_or(1), propagation: arm_propagation };
            let complete = fields.iter().all(Option::is_some) && k.is_some();
            let problems: Vec<String> = arm
                .validation_errors()
                .into_iter()
                .filter(|p| {
                    let field = p.split(':').next().unwrap_or("");
                    match names.iter().position(|n| *n == field) {
                        Some(j) => fields[j].is_some(),
                        None => complete || (field == "k" && k.is_some()),
                    }
                })
                .collect();
            if problems.is_empty() && complete {
                arms.push(arm);
                k_estimates.push(k_e);
            } else {
                let prefix = r.prefix.clone();
                r.errors.extend(problems.into_iter().map(|p| format!("{prefix}{p}")));
            }
        }

        if let InitialBeliefs::Explicit(b) = &initial_beliefs {
            if b.len() != arm_sections.len() {
                errors.push(format!("initial_beliefs: {} given for {} arms", b.len(), arm_sections.len()));
            }
            for (m, x) in b.iter().enumerate() {
                if !(0.0..=1.0).contains(x) {
                    errors.push(format!("initial_beliefs[{}]: {x} is outside [0, 1]", m + 1));
                }
            }
        }
        if sessions == 0 {
            errors.push("sessions: must be at least 1".to_string());
        }
        if runs == 0 {
            errors.push("runs: must be at least 1".to_string());
        }
        if mwi_horizon == 0 {
            errors.push("mwi_horizon: must be at least 1".to_string());
        }

        if !errors.is_empty() {
            return Err(LrbError::Config(errors));
        }
        Ok(ExperimentConfig {
            name,
            arms,
            k_estimates,
            beta: beta.expect("checked above"),
            grid_delta,
            gsva,
            index,
            lagrange,
            mwi_horizon,
            sessions,
            runs,
            seed,
            initial_beliefs,
            dynamics,
            policies,
            etas,
            trace_runs,
            out_dir,
        })
    }
}

/// Configurations shipped with the crate.
pub mod bundled {
    pub const FIG5: &str = include_str!("../configs/fig5.cfg");
    pub const EXAMPLE0: &str = include_str!("../configs/example0.cfg");
    pub const EXAMPLE0_K1: &str = include_str!("../configs/example0_k1.cfg");
    pub const EXAMPLE1: &str = include_str!("../configs/example1.cfg");
    pub const EXAMPLE2: &str = include_str!("../configs/example2.cfg");
    pub const EXAMPLE3: &str = include_str!("../configs/example3.cfg");
    pub const EXAMPLE4: &str = include_str!("../configs/example4.cfg");

    /// Every simulated example, by name.
    pub const EXAMPLES: &[(&str, &str)] = &[
        ("example0", EXAMPLE0),
        ("example0_k1", EXAMPLE0_K1),
        ("example1", EXAMPLE1),
        ("example2", EXAMPLE2),
        ("example3", EXAMPLE3),
        ("example4", EXAMPLE4),
    ];
}

#[cfg(test)]
mod tests {
    use super::*;

    const ONE_ARM: &str = "
        beta = 0.9
        policies = WI, mp, Random
        [arm]
        p00 = 0.2   # comment
        p10 = 0.9
        rho0 = 0.3
        rho1 = 0.9
        r0 = 0.3
        r1 = 0.9
        k = 3
    ";

    #[test]
    fn parses_minimal_config() {
        let cfg: ExperimentConfig = ONE_ARM.parse().unwrap();
        assert_eq!(cfg.arms.len(), 1);
        assert_eq!(cfg.arms[0].k, 3);
        assert_eq!(cfg.beta.value(), 0.9);
        assert_eq!(cfg.policies, vec![PolicyKind::Wi, PolicyKind::Mp, PolicyKind::Ur]);
        assert_eq!(cfg.initial_beliefs, InitialBeliefs::Stationary);
        assert!(cfg.sim_config().model_arms.is_none());
    }

    #[test]
    fn reports_every_bad_field() {
        let text = ONE_ARM.replace("p00 = 0.2", "p00 = 1.2").replace("rho1 = 0.9", "rho1 = x").replace("beta = 0.9", "beta = 1.5\nbogus = 1");
        let Err(LrbError::Config(errs)) = text.parse::<ExperimentConfig>() else {
            panic!("expected a config error");
        };
        let joined = errs.join("\n");
        assert!(joined.contains("p00"), "{joined}");
        assert!(joined.contains("rho1"), "{joined}");
        assert!(joined.contains("beta"), "{joined}");
        assert!(joined.contains("bogus"), "{joined}");
    }

    #[test]
    fn empty_policy_list_and_estimates() {
        let text = format!("policies =\nk_e = 5\ninitial_beliefs = 0.25\n{}", ONE_ARM.replace("policies = WI, mp, Random", ""));
        let cfg: ExperimentConfig = text.parse().unwrap();
        assert!(cfg.policies.is_empty());
        assert_eq!(cfg.decision_arms()[0].k, 5);
        assert_eq!(cfg.arms[0].k, 3);
        assert_eq!(cfg.initial_beliefs, InitialBeliefs::Explicit(vec![0.25]));
        assert!(cfg.sim_config().model_arms.is_some());
    }

    #[test]
    fn missing_arm_fields() {
        let Err(LrbError::Config(errs)) = "[arm]\np00 = 0.5\n".parse::<ExperimentConfig>() else {
            panic!("expected a config error");
        };
        assert_eq!(errs.len(), 6, "{errs:?}");
    }

    #[test]
    fn bundled_configs_parse() {
        for (name, text) in bundled::EXAMPLES.iter().chain([("fig5", bundled::FIG5)].iter()) {
            let cfg: ExperimentConfig = text.parse().unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(&cfg.name, name);
        }
    }
}
