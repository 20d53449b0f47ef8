//! Lagrangian upper bound on the optimal multi-arm value.
//!
//! Relaxing "exactly one arm per session" with a multiplier `lambda`
//! decouples the arms: each arm pays `R_S(pi) - lambda` when played and
//! nothing otherwise, and the relaxed value is
//! `lambda / (1 - beta) + sum_m V_m(pi_m)`. That value is convex in
//! `lambda` and bounds the optimal value from above for every `lambda >= 0`.

use std::io::Write;

use rayon::prelude::*;

use crate::arm::{ArmParams, Belief, DiscountFactor};
use crate::csvfmt::fmt_num;
use crate::error::{LrbError, Result};
use crate::grid::BeliefGrid;
use crate::value::{solve_model, GridModel, GsvaOptions, StageRewards};

/// Arms played per session.
const ARMS_PER_SESSION: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LagrangeStep {
    pub t: usize,
    pub lambda: f64,
    pub value: f64,
    pub subgradient: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// `|g_t| <= tol`.
    Subgradient,
    /// Successive multipliers closer than `lambda_tol`: the iterate sits on a kink.
    Stalled,
    /// The descent hit its iteration cap and the golden-section minimum was used.
    GoldenFallback,
}

#[derive(Debug, Clone)]
pub struct LagrangeResult {
    pub lambda_star: f64,
    pub bound: f64,
    pub trace: Vec<LagrangeStep>,
    pub stop: StopReason,
}

impl LagrangeResult {
    /// Writes `t,lambda,value,subgradient`.
    pub fn write_trace_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,lambda,value,subgradient")?;
        for s in &self.trace {
            writeln!(
                out,
                "{},{},{},{}",
                s.t,
                fmt_num(s.lambda),
                fmt_num(s.value),
                fmt_num(s.subgradient)
            )?;
        }
        Ok(())
    }
}

/// The decoupled relaxation for a fixed set of arms and initial beliefs.
pub struct Relaxation {
    models: Vec<GridModel>,
    start: Vec<usize>,
    beta: DiscountFactor,
    grid: BeliefGrid,
    opts: GsvaOptions,
}

impl Relaxation {
    pub fn new(
        arms: &[ArmParams],
        initial_beliefs: &[Belief],
        beta: DiscountFactor,
        grid: &BeliefGrid,
        opts: &GsvaOptions,
    ) -> Result<Self> {
        if arms.len() != initial_beliefs.len() {
            return Err(LrbError::invalid(
                "initial_beliefs",
                format!("{} beliefs for {} arms", initial_beliefs.len(), arms.len()),
            ));
        }
        if arms.is_empty() {
            return Err(LrbError::invalid("arms", "at least one arm is required"));
        }
        Ok(Relaxation {
            models: arms.iter().map(|a| GridModel::new(a, grid)).collect(),
            start: initial_beliefs.iter().map(|b| grid.nearest_index(b.value())).collect(),
            beta,
            grid: grid.clone(),
            opts: *opts,
        })
    }

    /// `N lambda / (1 - beta) + sum_m V_m^lambda(pi_m)`.
    pub fn value(&self, lambda: f64) -> Result<f64> {
        if !(lambda >= 0.0) {
            return Err(LrbError::invalid("lambda", format!("{lambda} must be >= 0")));
        }
        let per_arm: Vec<f64> = self
            .models
            .par_iter()
            .zip(&self.start)
            .map(|(model, &i)| {
                solve_model(model, StageRewards::penalty(lambda), self.beta, &self.grid, &self.opts, None)
                    .map(|vg| vg.v[i])
            })
            .collect::<Result<_>>()?;
        Ok(ARMS_PER_SESSION * lambda / (1.0 - self.beta.value()) + per_arm.iter().sum::<f64>())
    }

    /// Upper end of the useful multiplier range: beyond the largest reward no arm is worth playing.
    pub fn lambda_ceiling(&self) -> f64 {
        self.models
            .iter()
            .flat_map(|m| m.reward.iter().copied())
            .fold(0.0, f64::max)
    }

    /// Deterministic minimizer by golden-section search on `[0, lambda_ceiling]`.
    pub fn golden_section(&self, tol: f64) -> Result<(f64, f64)> {
        let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
        let (mut lo, mut hi) = (0.0, self.lambda_ceiling().max(tol));
        let mut x1 = hi - inv_phi * (hi - lo);
        let mut x2 = lo + inv_phi * (hi - lo);
        let mut f1 = self.value(x1)?;
        let mut f2 = self.value(x2)?;
        while hi - lo > tol {
            if f1 <= f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - inv_phi * (hi - lo);
                f1 = self.value(x1)?;
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + inv_phi * (hi - lo);
                f2 = self.value(x2)?;
            }
        }
        // the endpoints are candidates too: the minimum may sit at lambda = 0
        let mut best = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
        for x in [0.0, lo, hi] {
            let f = self.value(x)?;
            if f < best.1 {
                best = (x, f);
            }
        }
        Ok(best)
    }
}

/// Relaxed value at a single multiplier.
pub fn decoupled_value(
    lambda: f64,
    arms: &[ArmParams],
    initial_beliefs: &[Belief],
    beta: DiscountFactor,
    grid: &BeliefGrid,
    opts: &GsvaOptions,
) -> Result<f64> {
    Relaxation::new(arms, initial_beliefs, beta, grid, opts)?.value(lambda)
}

/// Step sizes `alpha_t = alpha0 / (1 + t / tau)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSchedule {
    pub alpha0: f64,
    pub tau: f64,
}

impl StepSchedule {
    pub fn at(&self, t: usize) -> f64 {
        self.alpha0 / (1.0 + t as f64 / self.tau)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LagrangeParams {
    pub lambda0: f64,
    /// Offset of the second multiplier used for the first finite difference.
    pub probe: f64,
    pub steps: StepSchedule,
    /// Stop once `|g_t|` is at most this.
    pub tol: f64,
    /// Stop once successive multipliers differ by less than this.
    pub lambda_tol: f64,
    pub max_iters: usize,
    pub gsva: GsvaOptions,
}

impl Default for LagrangeParams {
    fn default() -> Self {
        LagrangeParams {
            lambda0: 0.5,
            probe: 0.01,
            steps: StepSchedule { alpha0: 2e-4, tau: 25.0 },
            tol: 0.5,
            lambda_tol: 1e-6,
            max_iters: 2_000,
            gsva: GsvaOptions { tol: 1e-8, ..GsvaOptions::default() },
        }
    }
}

/// Minimizes the relaxed value over `lambda >= 0` by finite-difference
/// subgradient descent.
pub fn lagrange_bound(
    arms: &[ArmParams],
    initial_beliefs: &[Belief],
    beta: DiscountFactor,
    grid: &BeliefGrid,
    params: &LagrangeParams,
) -> Result<LagrangeResult> {
    let relax = Relaxation::new(arms, initial_beliefs, beta, grid, &params.gsva)?;
    lagrange_bound_on(&relax, params)
}

pub fn lagrange_bound_on(relax: &Relaxation, params: &LagrangeParams) -> Result<LagrangeResult> {
    if !(params.lambda0 >= 0.0) {
        return Err(LrbError::invalid("lambda0", "must be >= 0"));
    }
    if !(params.steps.alpha0 > 0.0 && params.steps.tau > 0.0) {
        return Err(LrbError::invalid("alpha", "step sizes must be positive"));
    }
    let mut prev_lambda = params.lambda0;
    let mut prev_value = relax.value(prev_lambda)?;
    let mut lambda = params.lambda0 + params.probe;
    let mut trace = Vec::new();
    let mut best = (prev_lambda, prev_value);
    for t in 1..=params.max_iters {
        let value = relax.value(lambda)?;
        let g = (value - prev_value) / (lambda - prev_lambda);
        trace.push(LagrangeStep { t, lambda, value, subgradient: g });
        if value < best.1 {
            best = (lambda, value);
        }
        if g.abs() <= params.tol {
            return Ok(LagrangeResult { lambda_star: lambda, bound: value, trace, stop: StopReason::Subgradient });
        }
        let mut next = (lambda - params.steps.at(t) * g).max(0.0);
        if (next - lambda).abs() < params.lambda_tol {
            return Ok(LagrangeResult {
                lambda_star: best.0,
                bound: best.1,
                trace,
                stop: StopReason::Stalled,
            });
        }
        if next == lambda {
            next = lambda + f64::EPSILON.sqrt() * lambda.max(1.0);
        }
        prev_lambda = lambda;
        prev_value = value;
        lambda = next;
    }
    Err(LrbError::LagrangeNotConverged {
        iterations: params.max_iters,
        trace,
    })
}
