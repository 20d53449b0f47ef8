//! Monte-Carlo simulation of the multi-arm problem under a selection policy.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::arm::{ArmParams, Belief, DiscountFactor};
use crate::csvfmt::fmt_num;
use crate::error::{LrbError, Result};
use crate::whittle::{IndexTable, MwiTable};

/// Selection rule plus whatever tables it needs.
#[derive(Debug, Clone)]
pub enum PolicySpec {
    Whittle(Vec<IndexTable>),
    ModifiedWhittle(Vec<MwiTable>),
    Myopic,
    UniformRandom,
    NonUniformRandom,
    RoundRobin,
}

impl PolicySpec {
    pub fn name(&self) -> &'static str {
        match self {
            PolicySpec::Whittle(_) => "WI",
            PolicySpec::ModifiedWhittle(_) => "MWI",
            PolicySpec::Myopic => "MP",
            PolicySpec::UniformRandom => "UR",
            PolicySpec::NonUniformRandom => "NUR",
            PolicySpec::RoundRobin => "RR",
        }
    }

    fn table_len(&self) -> Option<usize> {
        match self {
            PolicySpec::Whittle(t) => Some(t.len()),
            PolicySpec::ModifiedWhittle(t) => Some(t.len()),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialBeliefs {
    /// Each arm starts at its stationary probability of state 0.
    Stationary,
    Explicit(Vec<f64>),
    /// Drawn once per configuration (shared by all runs) from U[0, 1].
    UniformRandom,
}

/// How many transitions the hidden chains make per session.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SessionDynamics {
    /// Every arm makes its `k` transitions.
    #[default]
    AllArmsK,
    /// The played arm makes one transition, the others make `k`. This is the
    /// process under which the one-step feedback maps are exact posteriors.
    PlayedOneStep,
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    /// Arms that drive the hidden states and feedback.
    pub arms: Vec<ArmParams>,
    /// Arms the decision maker believes in; defaults to `arms`.
    pub model_arms: Option<Vec<ArmParams>>,
    pub beta: DiscountFactor,
    pub sessions: usize,
    pub runs: usize,
    pub seed: u64,
    pub initial_beliefs: InitialBeliefs,
    pub dynamics: SessionDynamics,
}

impl SimConfig {
    pub fn decision_arms(&self) -> &[ArmParams] {
        self.model_arms.as_deref().unwrap_or(&self.arms)
    }

    pub fn validate(&self) -> Result<()> {
        let mut errors = Vec::new();
        if self.arms.is_empty() {
            errors.push("arms: at least one arm is required".to_string());
        }
        if self.sessions == 0 {
            errors.push("sessions: must be at least 1".to_string());
        }
        if self.runs == 0 {
            errors.push("runs: must be at least 1".to_string());
        }
        if let Some(model) = &self.model_arms {
            if model.len() != self.arms.len() {
                errors.push(format!("model arms: {} given for {} arms", model.len(), self.arms.len()));
            }
        }
        if let InitialBeliefs::Explicit(b) = &self.initial_beliefs {
            if b.len() != self.arms.len() {
                errors.push(format!("initial_beliefs: {} given for {} arms", b.len(), self.arms.len()));
            }
            for (m, x) in b.iter().enumerate() {
                if !(0.0..=1.0).contains(x) {
                    errors.push(format!("initial_beliefs[{}]: {x} is outside [0, 1]", m + 1));
                }
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(LrbError::Config(errors))
        }
    }

    /// The starting belief vector, identical for every run.
    pub fn resolve_initial_beliefs(&self) -> Result<Vec<Belief>> {
        match &self.initial_beliefs {
            InitialBeliefs::Stationary => self.decision_arms().iter().map(|a| a.stationary_q()).collect(),
            InitialBeliefs::Explicit(b) => b.iter().map(|&x| Belief::new(x)).collect(),
            InitialBeliefs::UniformRandom => {
                let mut rng = stream(self.seed, u64::MAX, 0);
                Ok((0..self.arms.len()).map(|_| Belief::clamped(rng.gen::<f64>())).collect())
            }
        }
    }
}

/// Independent streams per run and purpose, so every policy sees the same
/// hidden-state paths and feedback draws.
fn stream(seed: u64, run: u64, purpose: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run.wrapping_mul(4).wrapping_add(purpose));
    rng
}

const STATES: u64 = 0;
const FEEDBACK: u64 = 1;
const POLICY: u64 = 2;

fn draw_state(p_zero: f64, u: f64) -> u8 {
    if u < p_zero {
        0
    } else {
        1
    }
}

/// State after `steps` transitions. One draw from the row of `P^steps`, which has
/// the same law as `steps` single transitions.
pub fn evolve_state<R: Rng + ?Sized>(state: u8, arm: &ArmParams, steps: u32, rng: &mut R) -> u8 {
    let pk = arm.kstep_matrix(steps);
    draw_state(pk[state as usize][0], rng.gen())
}

/// ACK (1) with probability `rho_{start_state}`.
pub fn sample_feedback<R: Rng + ?Sized>(start_state: u8, arm: &ArmParams, rng: &mut R) -> u8 {
    let rho = if start_state == 0 { arm.rho0 } else { arm.rho1 };
    u8::from(rng.gen::<f64>() < rho)
}

/// Arm to play (0-based) in 1-based session `session`.
pub fn select_arm<R: Rng + ?Sized>(
    policy: &PolicySpec,
    arms: &[ArmParams],
    beliefs: &[Belief],
    session: usize,
    rng: &mut R,
) -> usize {
    let m = beliefs.len();
    match policy {
        PolicySpec::Whittle(tables) => argmax(tables.iter().zip(beliefs).map(|(t, b)| t.lookup(b.value()))),
        PolicySpec::ModifiedWhittle(tables) => {
            argmax(tables.iter().zip(beliefs).map(|(t, b)| t.lookup(b.value())))
        }
        PolicySpec::Myopic => argmax(arms.iter().zip(beliefs).map(|(a, b)| a.expected_reward(*b))),
        PolicySpec::UniformRandom => rng.gen_range(0..m),
        PolicySpec::NonUniformRandom => {
            let weights: Vec<f64> = arms.iter().zip(beliefs).map(|(a, b)| a.expected_reward(*b).max(0.0)).collect();
            let total: f64 = weights.iter().sum();
            if total <= 0.0 {
                return rng.gen_range(0..m);
            }
            let mut u = rng.gen::<f64>() * total;
            for (i, w) in weights.iter().enumerate() {
                if u < *w {
                    return i;
                }
                u -= w;
            }
            weights.iter().rposition(|w| *w > 0.0).unwrap_or(m - 1)
        }
        PolicySpec::RoundRobin => (session - 1) % m,
    }
}

/// First index of the maximum.
fn argmax(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

/// Belief after one session. Feedback the model deems impossible leaves only
/// the passage of time to account for.
pub fn next_belief(arm: &ArmParams, pi: Belief, played: bool, feedback: u8) -> Belief {
    if !played {
        return arm.gamma2(pi);
    }
    let updated = if feedback == 1 { arm.gamma1(pi) } else { arm.gamma0(pi) };
    updated.unwrap_or_else(|_| arm.gamma2(pi))
}

/// Everything that happened in one sample path.
#[derive(Debug, Clone, PartialEq)]
pub struct RunLog {
    /// Beliefs at the start of each session.
    pub beliefs: Vec<Vec<Belief>>,
    /// Hidden states at the start of each session.
    pub states: Vec<Vec<u8>>,
    pub actions: Vec<usize>,
    pub feedback: Vec<u8>,
    /// Undiscounted reward of each session.
    pub rewards: Vec<f64>,
}

struct RunSummary {
    /// Discounted cumulative reward after each session.
    cumulative: Vec<f64>,
    plays: Vec<usize>,
    log: Option<RunLog>,
}

struct Prepared<'a> {
    truth: &'a [ArmParams],
    model: &'a [ArmParams],
    p_zero: Vec<[f64; 2]>,
    p_zero_played: Vec<[f64; 2]>,
    start: Vec<Belief>,
    beta: f64,
    sessions: usize,
    seed: u64,
}

fn prepare<'a>(cfg: &'a SimConfig, policy: &PolicySpec) -> Result<Prepared<'a>> {
    cfg.validate()?;
    if let Some(n) = policy.table_len() {
        if n != cfg.arms.len() {
            return Err(LrbError::invalid(
                "policy",
                format!("{} has {n} tables for {} arms", policy.name(), cfg.arms.len()),
            ));
        }
    }
    let p_zero: Vec<[f64; 2]> = cfg
        .arms
        .iter()
        .map(|a| {
            let pk = a.kstep_matrix(a.k);
            [pk[0][0], pk[1][0]]
        })
        .collect();
    let p_zero_played = match cfg.dynamics {
        SessionDynamics::AllArmsK => p_zero.clone(),
        SessionDynamics::PlayedOneStep => cfg.arms.iter().map(|a| [a.p00, a.p10]).collect(),
    };
    Ok(Prepared {
        truth: &cfg.arms,
        model: cfg.decision_arms(),
        p_zero,
        p_zero_played,
        start: cfg.resolve_initial_beliefs()?,
        beta: cfg.beta.value(),
        sessions: cfg.sessions,
        seed: cfg.seed,
    })
}

fn simulate(prep: &Prepared, policy: &PolicySpec, run: usize, record: bool) -> RunSummary {
    let m = prep.truth.len();
    let mut state_rng = stream(prep.seed, run as u64, STATES);
    let mut feedback_rng = stream(prep.seed, run as u64, FEEDBACK);
    let mut policy_rng = stream(prep.seed, run as u64, POLICY);

    let mut beliefs = prep.start.clone();
    let mut states: Vec<u8> = beliefs.iter().map(|b| draw_state(b.value(), state_rng.gen())).collect();
    let mut plays = vec![0; m];
    let mut cumulative = Vec::with_capacity(prep.sessions);
    let mut total = 0.0;
    let mut discount = 1.0;
    let mut log = record.then(|| RunLog {
        beliefs: Vec::with_capacity(prep.sessions),
        states: Vec::with_capacity(prep.sessions),
        actions: Vec::with_capacity(prep.sessions),
        feedback: Vec::with_capacity(prep.sessions),
        rewards: Vec::with_capacity(prep.sessions),
    });

    for session in 1..=prep.sessions {
        let chosen = select_arm(policy, prep.model, &beliefs, session, &mut policy_rng);
        let start_state = states[chosen];
        let reward = prep.truth[chosen].reward_for_state(start_state);
        // one feedback draw per session whichever arm is played
        let u: f64 = feedback_rng.gen();
        let rho = if start_state == 0 { prep.truth[chosen].rho0 } else { prep.truth[chosen].rho1 };
        let feedback = u8::from(u < rho);

        if let Some(log) = log.as_mut() {
            log.beliefs.push(beliefs.clone());
            log.states.push(states.clone());
            log.actions.push(chosen);
            log.feedback.push(feedback);
            log.rewards.push(reward);
        }

        total += discount * reward;
        discount *= prep.beta;
        cumulative.push(total);
        plays[chosen] += 1;

        for (i, s) in states.iter_mut().enumerate() {
            let row = if i == chosen { &prep.p_zero_played[i] } else { &prep.p_zero[i] };
            *s = draw_state(row[*s as usize], state_rng.gen());
        }
        for (i, b) in beliefs.iter_mut().enumerate() {
            *b = next_belief(&prep.model[i], *b, i == chosen, feedback);
        }
    }
    RunSummary { cumulative, plays, log }
}

/// Full log of one sample path, identical to what `run_policy` simulates for that run.
pub fn simulate_run(cfg: &SimConfig, policy: &PolicySpec, run: usize) -> Result<RunLog> {
    let prep = prepare(cfg, policy)?;
    Ok(simulate(&prep, policy, run, true).log.expect("recorded"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub policy: String,
    pub mean_discounted_cum_reward: Vec<f64>,
    pub stderr: Vec<f64>,
    pub choice_fraction: Vec<f64>,
}

impl SimResult {
    pub fn final_value(&self) -> f64 {
        *self.mean_discounted_cum_reward.last().expect("at least one session")
    }

    pub fn final_stderr(&self) -> f64 {
        *self.stderr.last().expect("at least one session")
    }

    /// Writes `session,mean_discounted_cum_reward,stderr`.
    pub fn write_curve_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "session,mean_discounted_cum_reward,stderr")?;
        for (s, (m, e)) in self.mean_discounted_cum_reward.iter().zip(&self.stderr).enumerate() {
            writeln!(out, "{},{},{}", s + 1, fmt_num(*m), fmt_num(*e))?;
        }
        Ok(())
    }

    /// Writes `arm,choice_fraction` with 1-based arm ids.
    pub fn write_choice_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "arm,choice_fraction")?;
        for (m, f) in self.choice_fraction.iter().enumerate() {
            writeln!(out, "{},{}", m + 1, fmt_num(*f))?;
        }
        Ok(())
    }
}

pub fn run_policy(cfg: &SimConfig, policy: &PolicySpec) -> Result<SimResult> {
    let prep = prepare(cfg, policy)?;
    let runs: Vec<RunSummary> = (0..cfg.runs)
        .into_par_iter()
        .map(|run| simulate(&prep, policy, run, false))
        .collect();

    let l = cfg.runs as f64;
    let mut mean = vec![0.0; cfg.sessions];
    let mut stderr = vec![0.0; cfg.sessions];
    for s in 0..cfg.sessions {
        let mu = runs.iter().map(|r| r.cumulative[s]).sum::<f64>() / l;
        mean[s] = mu;
        if cfg.runs > 1 {
            let var = runs.iter().map(|r| (r.cumulative[s] - mu).powi(2)).sum::<f64>() / (l - 1.0);
            stderr[s] = (var / l).sqrt();
        }
    }
    let m = cfg.arms.len();
    let mut choice_fraction = vec![0.0; m];
    for r in &runs {
        for (f, p) in choice_fraction.iter_mut().zip(&r.plays) {
            *f += *p as f64 / cfg.sessions as f64;
        }
    }
    for f in &mut choice_fraction {
        *f /= l;
    }
    Ok(SimResult {
        policy: policy.name().to_string(),
        mean_discounted_cum_reward: mean,
        stderr,
        choice_fraction,
    })
}

/// Runs every policy on the same random streams.
pub fn compare_policies(cfg: &SimConfig, policies: &[PolicySpec]) -> Result<Vec<SimResult>> {
    policies.iter().map(|p| run_policy(cfg, p)).collect()
}

/// Writes `run,session,arm,feedback,reward` for the first `runs` sample paths.
pub fn write_trace_csv<W: Write>(cfg: &SimConfig, policy: &PolicySpec, runs: usize, mut out: W) -> Result<()> {
    let prep = prepare(cfg, policy)?;
    writeln!(out, "run,session,arm,feedback,reward")?;
    for run in 0..runs.min(cfg.runs) {
        let log = simulate(&prep, policy, run, true).log.expect("recorded");
        for (s, ((a, f), r)) in log.actions.iter().zip(&log.feedback).zip(&log.rewards).enumerate() {
            writeln!(out, "{},{},{},{},{}", run + 1, s + 1, a + 1, f, fmt_num(*r))?;
        }
    }
    Ok(())
}
