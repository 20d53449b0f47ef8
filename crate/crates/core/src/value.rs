//! Grid-discretized value iteration for the subsidized single-arm problem.
//!
//! The single arm pays `R_S(pi) - penalty` when played and `eta` when left
//! idle. Beliefs are snapped to a uniform grid by nearest neighbour after
//! every update, which turns the belief MDP into a finite MDP that
//! [`gsva`] solves by Gauss-Seidel sweeps in increasing-belief order.

use std::io::Write;

use crate::arm::{ArmParams, DiscountFactor};
use crate::csvfmt::fmt_num;
use crate::error::{LrbError, Result};
use crate::grid::BeliefGrid;

/// Per-session rewards of the single-arm problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageRewards {
    /// Reward for not playing (the subsidy).
    pub idle: f64,
    /// Charge subtracted from `R_S(pi)` when playing.
    pub play_penalty: f64,
}

impl StageRewards {
    pub fn subsidy(eta: f64) -> Self {
        StageRewards { idle: eta, play_penalty: 0.0 }
    }

    /// Lagrangian penalty form: play pays `R_S - lambda`, idle pays nothing.
    pub fn penalty(lambda: f64) -> Self {
        StageRewards { idle: 0.0, play_penalty: lambda }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SweepOrder {
    /// In-sweep substitution of already-updated grid values.
    #[default]
    GaussSeidel,
    /// Synchronous updates from the previous sweep only.
    Jacobi,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GsvaOptions {
    /// Stop once the L1 change between sweeps is at most this.
    pub tol: f64,
    pub max_sweeps: usize,
    pub order: SweepOrder,
}

impl Default for GsvaOptions {
    fn default() -> Self {
        GsvaOptions {
            tol: 1e-6,
            max_sweeps: 100_000,
            order: SweepOrder::GaussSeidel,
        }
    }
}

/// Action values tabulated on a belief grid.
#[derive(Debug, Clone)]
pub struct ValueGrid {
    pub grid: BeliefGrid,
    pub rewards: StageRewards,
    pub beta: DiscountFactor,
    pub v_s: Vec<f64>,
    pub v_ns: Vec<f64>,
    pub v: Vec<f64>,
    /// Sweeps used (0 for finite-horizon tables).
    pub sweeps: usize,
}

impl ValueGrid {
    pub fn eta(&self) -> f64 {
        self.rewards.idle
    }

    /// Advantage of playing, `v_s - v_ns`, at grid index `i`.
    pub fn advantage(&self, i: usize) -> f64 {
        self.v_s[i] - self.v_ns[i]
    }

    /// Writes `pi,v_s,v_ns,v`, one row per grid point.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "pi,v_s,v_ns,v")?;
        for (i, pi) in self.grid.points().iter().enumerate() {
            writeln!(
                out,
                "{},{},{},{}",
                fmt_num(*pi),
                fmt_num(self.v_s[i]),
                fmt_num(self.v_ns[i]),
                fmt_num(self.v[i])
            )?;
        }
        Ok(())
    }
}

/// Successor grid indices and one-stage quantities for every grid point.
#[derive(Debug, Clone)]
pub(crate) struct GridModel {
    pub reward: Vec<f64>,
    pub ack_prob: Vec<f64>,
    pub on_ack: Vec<usize>,
    pub on_nack: Vec<usize>,
    pub on_idle: Vec<usize>,
}

impl GridModel {
    pub fn new(arm: &ArmParams, grid: &BeliefGrid) -> Self {
        let n = grid.len();
        let mut model = GridModel {
            reward: Vec::with_capacity(n),
            ack_prob: Vec::with_capacity(n),
            on_ack: Vec::with_capacity(n),
            on_nack: Vec::with_capacity(n),
            on_idle: Vec::with_capacity(n),
        };
        for (i, &pi) in grid.points().iter().enumerate() {
            model.reward.push(arm.expected_reward_raw(pi));
            model.ack_prob.push(arm.success_prob_raw(pi));
            // An impossible observation carries zero weight; any successor will do.
            model.on_ack.push(arm.gamma1_raw(pi).map_or(i, |x| grid.nearest_index(x)));
            model.on_nack.push(arm.gamma0_raw(pi).map_or(i, |x| grid.nearest_index(x)));
            model.on_idle.push(grid.nearest_index(arm.gamma2_raw(pi)));
        }
        model
    }

    /// One Bellman backup at grid point `i` against `v`: `(v_s, v_ns)`.
    #[inline]
    fn backup(&self, i: usize, v: &[f64], rewards: StageRewards, beta: f64) -> (f64, f64) {
        let rho = self.ack_prob[i];
        let play = self.reward[i] - rewards.play_penalty
            + beta * (rho * v[self.on_ack[i]] + (1.0 - rho) * v[self.on_nack[i]]);
        let idle = rewards.idle + beta * v[self.on_idle[i]];
        (play, idle)
    }

    /// Gauss-Seidel backup at `i` where `v` already holds this sweep's values
    /// below `i`; a successor equal to `i` itself is solved for implicitly.
    #[inline]
    fn backup_in_place(&self, i: usize, v: &[f64], rewards: StageRewards, beta: f64) -> f64 {
        let rho = self.ack_prob[i];
        let mut play_const = self.reward[i] - rewards.play_penalty;
        let mut play_self = 0.0;
        for (j, w) in [(self.on_ack[i], rho), (self.on_nack[i], 1.0 - rho)] {
            if j == i {
                play_self += beta * w;
            } else {
                play_const += beta * w * v[j];
            }
        }
        let play = play_const / (1.0 - play_self);
        let j = self.on_idle[i];
        let idle = if j == i {
            rewards.idle / (1.0 - beta)
        } else {
            rewards.idle + beta * v[j]
        };
        play.max(idle)
    }

    pub fn reward_bounds(&self, rewards: StageRewards) -> (f64, f64) {
        let (lo, hi) = self.reward.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
            (lo.min(*r), hi.max(*r))
        });
        let lo = (lo - rewards.play_penalty).min(rewards.idle);
        let hi = (hi - rewards.play_penalty).max(rewards.idle);
        (lo, hi)
    }
}

/// Fixed point of the grid Bellman operator by Gauss-Seidel sweeps.
pub fn gsva(
    arm: &ArmParams,
    eta: f64,
    beta: DiscountFactor,
    grid: &BeliefGrid,
    opts: &GsvaOptions,
) -> Result<ValueGrid> {
    solve(arm, StageRewards::subsidy(eta), beta, grid, opts, None)
}

/// General form of [`gsva`]: arbitrary stage rewards and an optional warm start.
///
/// The fixed point does not depend on the starting values; without a warm
/// start every entry begins at the uniform lower bound `min reward / (1 - beta)`.
pub fn solve(
    arm: &ArmParams,
    rewards: StageRewards,
    beta: DiscountFactor,
    grid: &BeliefGrid,
    opts: &GsvaOptions,
    warm_start: Option<&[f64]>,
) -> Result<ValueGrid> {
    let model = GridModel::new(arm, grid);
    solve_model(&model, rewards, beta, grid, opts, warm_start)
}

pub(crate) fn solve_model(
    model: &GridModel,
    rewards: StageRewards,
    beta: DiscountFactor,
    grid: &BeliefGrid,
    opts: &GsvaOptions,
    warm_start: Option<&[f64]>,
) -> Result<ValueGrid> {
    if !(opts.tol > 0.0) {
        return Err(LrbError::invalid("tol", "must be positive"));
    }
    let b = beta.value();
    let n = grid.len();
    let (lo, _) = model.reward_bounds(rewards);
    let mut v = match warm_start {
        Some(w) if w.len() == n => w.to_vec(),
        _ => vec![lo / (1.0 - b); n],
    };
    let mut prev = v.clone();
    let mut residual = f64::INFINITY;
    let mut sweeps = 0;
    while sweeps < opts.max_sweeps {
        sweeps += 1;
        residual = 0.0;
        match opts.order {
            SweepOrder::GaussSeidel => {
                for i in 0..n {
                    let new = model.backup_in_place(i, &v, rewards, b);
                    residual += (new - v[i]).abs();
                    v[i] = new;
                }
            }
            SweepOrder::Jacobi => {
                prev.copy_from_slice(&v);
                for i in 0..n {
                    let (s, ns) = model.backup(i, &prev, rewards, b);
                    v[i] = s.max(ns);
                    residual += (v[i] - prev[i]).abs();
                }
            }
        }
        if residual <= opts.tol {
            break;
        }
    }
    if residual > opts.tol {
        return Err(LrbError::NotConverged {
            routine: "gsva",
            iterations: sweeps,
            residual,
            last: v.iter().cloned().fold(f64::NAN, f64::max),
        });
    }
    Ok(tabulate(model, rewards, beta, grid, &v, sweeps))
}

/// Action values from one backup of `v`; `v` in the result is their max.
fn tabulate(
    model: &GridModel,
    rewards: StageRewards,
    beta: DiscountFactor,
    grid: &BeliefGrid,
    v: &[f64],
    sweeps: usize,
) -> ValueGrid {
    let n = grid.len();
    let mut v_s = Vec::with_capacity(n);
    let mut v_ns = Vec::with_capacity(n);
    for i in 0..n {
        let (s, ns) = model.backup(i, v, rewards, beta.value());
        v_s.push(s);
        v_ns.push(ns);
    }
    let v = v_s.iter().zip(&v_ns).map(|(s, ns)| s.max(*ns)).collect();
    ValueGrid {
        grid: grid.clone(),
        rewards,
        beta,
        v_s,
        v_ns,
        v,
        sweeps,
    }
}

/// Finite-horizon action values `t = 1..=horizon` by synchronous backups.
///
/// `V_{S,1} = R_S`, `V_{NS,1} = eta`, and each later stage backs up the
/// previous stage's `V`.
pub fn finite_horizon_values(
    arm: &ArmParams,
    eta: f64,
    beta: DiscountFactor,
    grid: &BeliefGrid,
    horizon: usize,
) -> Result<Vec<ValueGrid>> {
    if horizon == 0 {
        return Err(LrbError::invalid("horizon", "must be at least 1"));
    }
    let model = GridModel::new(arm, grid);
    let rewards = StageRewards::subsidy(eta);
    let mut out = Vec::with_capacity(horizon);
    let zeros = vec![0.0; grid.len()];
    let mut current = tabulate(&model, rewards, beta, grid, &zeros, 0);
    for _ in 1..horizon {
        let next = tabulate(&model, rewards, beta, grid, &current.v, 0);
        out.push(current);
        current = next;
    }
    out.push(current);
    Ok(out)
}

/// Last stage of [`finite_horizon_values`] without keeping the earlier ones.
pub(crate) fn finite_horizon_last(
    model: &GridModel,
    eta: f64,
    beta: DiscountFactor,
    grid: &BeliefGrid,
    horizon: usize,
) -> ValueGrid {
    let rewards = StageRewards::subsidy(eta);
    let mut current = tabulate(model, rewards, beta, grid, &vec![0.0; grid.len()], 0);
    for _ in 1..horizon {
        current = tabulate(model, rewards, beta, grid, &current.v, 0);
    }
    current
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdKind {
    Interior,
    AlwaysPlay,
    NeverPlay,
}

/// Switch point of a threshold policy: play iff `pi < pi_t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Threshold {
    pub pi_t: Option<f64>,
    pub kind: ThresholdKind,
}

impl Threshold {
    /// Position on the belief axis with always-play above 1 and never-play below 0.
    pub fn ordering_key(&self) -> f64 {
        match self.kind {
            ThresholdKind::AlwaysPlay => 2.0,
            ThresholdKind::NeverPlay => -1.0,
            ThresholdKind::Interior => self.pi_t.unwrap_or(f64::NAN),
        }
    }
}

fn first_switch(vg: &ValueGrid, tie_tol: f64) -> Option<usize> {
    (0..vg.grid.len()).find(|&i| vg.v_ns[i] >= vg.v_s[i] - tie_tol)
}

/// Threshold from the first grid point where not playing is at least as good.
///
/// Fails if playing becomes strictly better again further up the grid.
pub fn extract_threshold(vg: &ValueGrid, tie_tol: f64) -> Result<Threshold> {
    let threshold = threshold_unchecked(vg, tie_tol);
    if let Some(start) = first_switch(vg, tie_tol) {
        if let Some(j) = (start + 1..vg.grid.len()).find(|&j| vg.v_s[j] > vg.v_ns[j] + tie_tol) {
            return Err(LrbError::ThresholdStructure {
                switch: vg.grid.point(start),
                above: vg.grid.point(j),
            });
        }
    }
    Ok(threshold)
}

/// Like [`extract_threshold`] but reports the first switch point without
/// checking single crossing.
pub fn threshold_unchecked(vg: &ValueGrid, tie_tol: f64) -> Threshold {
    match first_switch(vg, tie_tol) {
        None => Threshold { pi_t: None, kind: ThresholdKind::AlwaysPlay },
        Some(0) => Threshold { pi_t: Some(0.0), kind: ThresholdKind::NeverPlay },
        Some(i) => Threshold {
            pi_t: Some(vg.grid.point(i)),
            kind: ThresholdKind::Interior,
        },
    }
}

#[derive(Debug, Clone)]
pub struct IndexabilityReport {
    pub etas: Vec<f64>,
    pub thresholds: Vec<Threshold>,
    /// Subsidies whose value tables crossed more than once.
    pub structure_violations: Vec<f64>,
    /// Consecutive subsidy pairs whose threshold moved right.
    pub monotonicity_violations: Vec<(f64, f64)>,
}

impl IndexabilityReport {
    pub fn is_monotone(&self) -> bool {
        self.monotonicity_violations.is_empty()
    }
}

/// Thresholds over an increasing subsidy list and whether they move left.
pub fn indexability_sweep(
    arm: &ArmParams,
    beta: DiscountFactor,
    grid: &BeliefGrid,
    opts: &GsvaOptions,
    etas: &[f64],
    tie_tol: f64,
) -> Result<IndexabilityReport> {
    if etas.windows(2).any(|w| w[0] >= w[1]) {
        return Err(LrbError::invalid("etas", "must be strictly increasing"));
    }
    let model = GridModel::new(arm, grid);
    let mut thresholds = Vec::with_capacity(etas.len());
    let mut structure_violations = Vec::new();
    let mut warm: Option<Vec<f64>> = None;
    for &eta in etas {
        let vg = solve_model(&model, StageRewards::subsidy(eta), beta, grid, opts, warm.as_deref())?;
        let t = match extract_threshold(&vg, tie_tol) {
            Ok(t) => t,
            Err(LrbError::ThresholdStructure { .. }) => {
                structure_violations.push(eta);
                threshold_unchecked(&vg, tie_tol)
            }
            Err(e) => return Err(e),
        };
        thresholds.push(t);
        warm = Some(vg.v);
    }
    let monotonicity_violations = etas
        .windows(2)
        .zip(thresholds.windows(2))
        .filter(|(_, t)| t[1].ordering_key() > t[0].ordering_key())
        .map(|(e, _)| (e[0], e[1]))
        .collect();
    Ok(IndexabilityReport {
        etas: etas.to_vec(),
        thresholds,
        structure_violations,
        monotonicity_violations,
    })
}
