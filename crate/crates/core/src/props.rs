//! Randomized structural checks of the single-arm value functions.
//!
//! Each suite draws arm parameters from a fixed-seed generator, solves the
//! grid problem and counts violations of one structural property. The
//! tolerances absorb the nearest-neighbour snapping of the grid model.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::arm::{ArmParams, DiscountFactor};
use crate::error::Result;
use crate::grid::BeliefGrid;
use crate::value::{gsva, GsvaOptions, ValueGrid};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteSettings {
    /// Parameter draws per suite (per condition class for the advantage suite).
    pub draws: usize,
    pub grid_intervals: usize,
    pub seed: u64,
    pub gsva_tol: f64,
    /// Relative tolerance for shape checks, as a fraction of the value range.
    pub shape_tol: f64,
}

impl Default for SuiteSettings {
    fn default() -> Self {
        SuiteSettings {
            draws: 200,
            grid_intervals: 200,
            seed: 0x5eed,
            gsva_tol: 1e-9,
            shape_tol: 1e-3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub name: &'static str,
    pub draws: usize,
    /// Largest observed defect divided by the allowed tolerance; below 1 passes.
    pub worst_ratio: f64,
    pub violations: Vec<String>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// One randomly drawn single-arm problem.
#[derive(Debug, Clone, Copy)]
pub struct Draw {
    pub arm: ArmParams,
    pub beta: f64,
    pub eta: f64,
}

fn range(xs: &[f64]) -> f64 {
    let (lo, hi) = xs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(*x), hi.max(*x)));
    (hi - lo).max(1e-12)
}

/// `b` and `c` of the derivative bounds: reward gap over ACK gap, capped at or floored by 1.
pub fn reward_ratio_bounds(arm: &ArmParams) -> (f64, f64) {
    let ratio = (arm.r1 - arm.r0) / (arm.rho1 - arm.rho0);
    (ratio.min(1.0), ratio.max(1.0))
}

fn draw_rewards<R: Rng>(rng: &mut R) -> (f64, f64, f64, f64) {
    let mut pair = || {
        let a: f64 = rng.gen_range(0.0..1.0);
        let b: f64 = rng.gen_range(0.0..1.0);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        if hi - lo < 0.05 {
            let lo = lo.min(0.9);
            (lo, lo + 0.1)
        } else {
            (lo, hi)
        }
    };
    let (rho0, rho1) = pair();
    let (r0, r1) = pair();
    (rho0, rho1, r0, r1)
}

/// A general arm with `rho0 < rho1` and `R0 < R1`.
pub fn draw_general<R: Rng>(rng: &mut R) -> Draw {
    let (rho0, rho1, r0, r1) = draw_rewards(rng);
    let arm = ArmParams::new(
        rng.gen_range(0.0..1.0),
        rng.gen_range(0.0..1.0),
        rho0,
        rho1,
        r0,
        r1,
        rng.gen_range(1..=20),
    )
    .expect("drawn parameters are valid");
    Draw {
        arm,
        beta: rng.gen_range(0.5..0.99),
        eta: rng.gen_range(r0..=r1),
    }
}

/// A general arm forced to have `p00 > p10`.
pub fn draw_positive<R: Rng>(rng: &mut R) -> Draw {
    let mut d = draw_general(rng);
    let (a, b) = (d.arm.p00, d.arm.p10);
    d.arm.p00 = a.max(b);
    d.arm.p10 = a.min(b);
    if d.arm.p00 - d.arm.p10 < 1e-3 {
        d.arm.p10 = (d.arm.p00 - 0.01).max(0.0);
        d.arm.p00 = d.arm.p10 + 0.01;
    }
    d
}

/// Parameter classes under which the advantage of playing decreases in the belief.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdvantageClass {
    /// Positive correlation with so many transitions that idling forgets the belief.
    PositiveLargeK,
    /// Positive correlation with `p00 - p10 < b/5`.
    PositiveWeakCorrelation,
    /// Positive correlation with `beta < b/5`.
    PositiveSmallBeta,
    /// Negative correlation with `p10 - p00 < b/5`.
    NegativeWeakCorrelation,
    /// Negative correlation with `beta < b/5`.
    NegativeSmallBeta,
}

impl AdvantageClass {
    pub const ALL: [AdvantageClass; 5] = [
        AdvantageClass::PositiveLargeK,
        AdvantageClass::PositiveWeakCorrelation,
        AdvantageClass::PositiveSmallBeta,
        AdvantageClass::NegativeWeakCorrelation,
        AdvantageClass::NegativeSmallBeta,
    ];

    /// Draws parameters satisfying this class's condition.
    pub fn draw<R: Rng>(self, rng: &mut R) -> Draw {
        let mut d = draw_general(rng);
        let (b, _) = reward_ratio_bounds(&d.arm);
        let gap_cap = b / 5.0;
        let set_gap = |d: &mut Draw, gap: f64, positive: bool| {
            let lo = d.arm.p00.min(d.arm.p10).min(1.0 - gap);
            let (hi, lo) = (lo + gap, lo);
            if positive {
                d.arm.p00 = hi;
                d.arm.p10 = lo;
            } else {
                d.arm.p00 = lo;
                d.arm.p10 = hi;
            }
        };
        match self {
            AdvantageClass::PositiveLargeK => {
                let gap = rng.gen_range(0.01..0.9);
                set_gap(&mut d, gap, true);
                // |d|^K below 1e-9 makes idling land on q up to rounding.
                let k = (-9.0 / gap.log10()).ceil().max(1.0);
                d.arm.k = (k as u32).max(50);
            }
            AdvantageClass::PositiveWeakCorrelation => {
                let gap = rng.gen_range(0.0..gap_cap).max(1e-4);
                set_gap(&mut d, gap, true);
            }
            AdvantageClass::PositiveSmallBeta => {
                let gap = rng.gen_range(0.001..0.99);
                set_gap(&mut d, gap, true);
                d.beta = rng.gen_range(0.0..gap_cap).max(1e-3);
            }
            AdvantageClass::NegativeWeakCorrelation => {
                let gap = rng.gen_range(0.0..gap_cap).max(1e-4);
                set_gap(&mut d, gap, false);
            }
            AdvantageClass::NegativeSmallBeta => {
                let gap = rng.gen_range(0.001..0.99);
                set_gap(&mut d, gap, false);
                d.beta = rng.gen_range(0.0..gap_cap).max(1e-3);
            }
        }
        d
    }

    pub fn holds(self, d: &Draw) -> bool {
        let (b, _) = reward_ratio_bounds(&d.arm);
        let gap = d.arm.p00 - d.arm.p10;
        match self {
            AdvantageClass::PositiveLargeK => gap > 0.0 && gap.powi(d.arm.k as i32) < 1e-9,
            AdvantageClass::PositiveWeakCorrelation => gap > 0.0 && gap < b / 5.0,
            AdvantageClass::PositiveSmallBeta => gap > 0.0 && d.beta < b / 5.0,
            AdvantageClass::NegativeWeakCorrelation => gap < 0.0 && -gap < b / 5.0,
            AdvantageClass::NegativeSmallBeta => gap < 0.0 && d.beta < b / 5.0,
        }
    }
}

fn solve_draw(d: &Draw, eta: f64, grid: &BeliefGrid, s: &SuiteSettings) -> Result<ValueGrid> {
    let opts = GsvaOptions {
        tol: s.gsva_tol,
        ..GsvaOptions::default()
    };
    gsva(&d.arm, eta, DiscountFactor::new(d.beta)?, grid, &opts)
}

/// Draws sequentially, solves in parallel, checks in draw order.
fn run_suite<G, C>(name: &'static str, s: &SuiteSettings, salt: u64, draw: G, check: C) -> Result<SuiteReport>
where
    G: Fn(&mut ChaCha8Rng) -> Draw,
    C: Fn(&Draw, &BeliefGrid) -> Result<(f64, Option<String>)> + Sync,
{
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed ^ salt);
    let draws: Vec<Draw> = (0..s.draws).map(|_| draw(&mut rng)).collect();
    let grid = BeliefGrid::with_intervals(s.grid_intervals);
    let outcomes: Vec<Result<(f64, Option<String>)>> = draws.par_iter().map(|d| check(d, &grid)).collect();
    let mut report = SuiteReport {
        name,
        draws: draws.len(),
        worst_ratio: 0.0,
        violations: Vec::new(),
    };
    for (n, outcome) in outcomes.into_iter().enumerate() {
        let (ratio, violation) = outcome?;
        report.worst_ratio = report.worst_ratio.max(ratio);
        if let Some(v) = violation {
            report.violations.push(format!("draw {n} {:?}: {v}", draws[n]));
        }
    }
    Ok(report)
}

/// Worst ratio of a defect sequence against `tol`, with the first offender.
fn worst(defects: impl Iterator<Item = (usize, f64)>, tol: f64, what: &str) -> (f64, Option<String>) {
    let mut ratio: f64 = 0.0;
    let mut first = None;
    for (i, defect) in defects {
        let r = defect / tol;
        ratio = ratio.max(r);
        if r > 1.0 && first.is_none() {
            first = Some(format!("{what} at index {i}: defect {defect:e} > {tol:e}"));
        }
    }
    (ratio, first)
}

fn merge(parts: Vec<(f64, Option<String>)>) -> (f64, Option<String>) {
    let ratio = parts.iter().map(|p| p.0).fold(0.0, f64::max);
    (ratio, parts.into_iter().find_map(|p| p.1))
}

fn convexity_defects(f: &[f64]) -> impl Iterator<Item = (usize, f64)> + '_ {
    (1..f.len() - 1).map(move |i| -(f[i - 1] + f[i + 1] - 2.0 * f[i]))
        .enumerate()
        .map(|(j, d)| (j + 1, d))
}

fn increase_defects(f: &[f64]) -> impl Iterator<Item = (usize, f64)> + '_ {
    f.windows(2).enumerate().map(|(i, w)| (i, w[1] - w[0]))
}

/// `v_s`, `v_ns` and `v` are midpoint convex in the belief.
pub fn convexity_in_belief(s: &SuiteSettings) -> Result<SuiteReport> {
    run_suite("convexity in belief", s, 1, draw_general, |d, grid| {
        let vg = solve_draw(d, d.eta, grid, s)?;
        Ok(merge(
            [("v_s", &vg.v_s), ("v_ns", &vg.v_ns), ("v", &vg.v)]
                .into_iter()
                .map(|(what, f)| worst(convexity_defects(f), s.shape_tol * range(&vg.v), what))
                .collect(),
        ))
    })
}

/// Subsidies used by the subsidy-direction suites, spanning the reward range.
fn subsidy_sweep(arm: &ArmParams) -> Vec<f64> {
    let lo = arm.r0 - 0.25 * (arm.r1 - arm.r0);
    let hi = arm.r1 + 0.25 * (arm.r1 - arm.r0);
    (0..=10).map(|j| lo + (hi - lo) * j as f64 / 10.0).collect()
}

/// At every belief, `v` is nondecreasing and convex in the subsidy, with slope at most `1/(1-beta)`.
pub fn subsidy_shape(s: &SuiteSettings) -> Result<SuiteReport> {
    run_suite("monotone, convex, bounded slope in subsidy", s, 2, draw_general, |d, grid| {
        let etas = subsidy_sweep(&d.arm);
        let tables = etas
            .iter()
            .map(|&eta| solve_draw(d, eta, grid, s))
            .collect::<Result<Vec<_>>>()?;
        let step = etas[1] - etas[0];
        let slope_cap = 1.0 / (1.0 - d.beta);
        let mut parts = Vec::new();
        for i in 0..grid.len() {
            let f: Vec<f64> = tables.iter().map(|t| t.v[i]).collect();
            let tol = s.shape_tol * range(&f);
            parts.push(worst(increase_defects(&f).map(|(j, x)| (j, -x)), tol, "decrease in subsidy"));
            parts.push(worst(convexity_defects(&f), tol, "concavity in subsidy"));
            // Exact slope bound; solver tolerance is the only slack.
            let slack = 2.0 * s.gsva_tol / step + 1e-9 * slope_cap;
            parts.push(worst(
                f.windows(2).enumerate().map(|(j, w)| (j, (w[1] - w[0]).abs() / step - slope_cap)),
                slack,
                "slope in subsidy",
            ));
        }
        Ok(merge(parts))
    })
}

/// For `p00 > p10`, `v_s`, `v_ns` and `v` are nonincreasing in the belief.
pub fn monotone_for_positive(s: &SuiteSettings) -> Result<SuiteReport> {
    run_suite("nonincreasing for positive correlation", s, 3, draw_positive, |d, grid| {
        let vg = solve_draw(d, d.eta, grid, s)?;
        Ok(merge(
            [("v_s", &vg.v_s), ("v_ns", &vg.v_ns), ("v", &vg.v)]
                .into_iter()
                .map(|(what, f)| worst(increase_defects(f), s.shape_tol * range(&vg.v), what))
                .collect(),
        ))
    })
}

/// `v_s - v_ns` is nonincreasing in the belief for draws satisfying `class`.
pub fn advantage_monotone(s: &SuiteSettings, class: AdvantageClass) -> Result<SuiteReport> {
    let salt = 10 + AdvantageClass::ALL.iter().position(|c| *c == class).unwrap_or(0) as u64;
    run_suite("advantage nonincreasing", s, salt, |r| class.draw(r), move |d, grid| {
        debug_assert!(class.holds(d));
        let vg = solve_draw(d, d.eta, grid, s)?;
        let adv: Vec<f64> = (0..grid.len()).map(|i| vg.advantage(i)).collect();
        let tol = s.shape_tol * range(&vg.v);
        Ok(worst(increase_defects(&adv), tol, "advantage increase"))
    })
}

/// Draws meeting the derivative-bound condition: `beta < (1+b)/4` or `|p00 - p10| < (1+b)/4`.
pub fn draw_lipschitz<R: Rng>(rng: &mut R) -> Draw {
    let mut d = draw_general(rng);
    let (b, _) = reward_ratio_bounds(&d.arm);
    let cap = (1.0 + b) / 4.0;
    if rng.gen_bool(0.5) {
        d.beta = rng.gen_range(0.0..cap).max(1e-3);
    } else {
        let gap = rng.gen_range(0.0..cap);
        let lo = d.arm.p00.min(d.arm.p10).min(1.0 - gap);
        if rng.gen_bool(0.5) {
            d.arm.p00 = lo + gap;
            d.arm.p10 = lo;
        } else {
            d.arm.p00 = lo;
            d.arm.p10 = lo + gap;
        }
    }
    d
}

/// Largest belief-direction slope of `v_s`, `v_ns`, `v` against `kappa * c * (rho1 - rho0)`.
///
/// Snapping a successor moves its value by at most half a cell times the
/// bound, discounted, so adjacent cells may differ by that much beyond the
/// true slope.
pub fn lipschitz_bound(s: &SuiteSettings) -> Result<SuiteReport> {
    run_suite("derivative bound in belief", s, 4, draw_lipschitz, |d, grid| {
        let vg = solve_draw(d, d.eta, grid, s)?;
        let (_, c) = reward_ratio_bounds(&d.arm);
        let kappa = 1.0 / (1.0 - d.beta * (d.arm.p00 - d.arm.p10).abs());
        let bound = kappa * c * (d.arm.rho1 - d.arm.rho0);
        let delta = grid.delta();
        let slack = d.beta * bound / (1.0 - d.beta) + 2.0 * s.gsva_tol / delta;
        Ok(merge(
            [("v_s", &vg.v_s), ("v_ns", &vg.v_ns), ("v", &vg.v)]
                .into_iter()
                .map(|(what, f)| {
                    worst(
                        f.windows(2).enumerate().map(|(i, w)| (i, (w[1] - w[0]).abs() / delta - bound)),
                        slack,
                        what,
                    )
                })
                .collect(),
        ))
    })
}

/// Every suite of the value-function property check, in a fixed order.
pub fn all_suites(s: &SuiteSettings) -> Result<Vec<SuiteReport>> {
    let mut out = vec![
        convexity_in_belief(s)?,
        subsidy_shape(s)?,
        monotone_for_positive(s)?,
    ];
    for class in AdvantageClass::ALL {
        let mut r = advantage_monotone(s, class)?;
        r.name = match class {
            AdvantageClass::PositiveLargeK => "advantage nonincreasing: positive, large K",
            AdvantageClass::PositiveWeakCorrelation => "advantage nonincreasing: positive, p00-p10 < b/5",
            AdvantageClass::PositiveSmallBeta => "advantage nonincreasing: positive, beta < b/5",
            AdvantageClass::NegativeWeakCorrelation => "advantage nonincreasing: negative, p10-p00 < b/5",
            AdvantageClass::NegativeSmallBeta => "advantage nonincreasing: negative, beta < b/5",
        };
        out.push(r);
    }
    out.push(lipschitz_bound(s)?);
    Ok(out)
}
