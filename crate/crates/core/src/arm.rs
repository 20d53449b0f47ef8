//! Two-state hidden-Markov arms and their belief dynamics.
//!
//! An arm is a Markov chain on {0, 1} that makes `k` transitions per
//! decision session. The decision maker never sees the state; it tracks the
//! belief `pi = P(state 0 at session start)` and updates it with one of three
//! maps depending on what happened in the session:
//!
//! * ACK after play: [`ArmParams::gamma1`]
//! * NACK after play: [`ArmParams::gamma0`]
//! * not played: [`ArmParams::gamma2`] (exact `k`-step propagation)

use crate::error::{LrbError, Result};

/// Probability that an arm is in state 0 at the start of a session.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Belief(f64);

impl Belief {
    pub fn new(pi: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&pi) {
            return Err(LrbError::invalid("pi", format!("{pi} is outside [0, 1]")));
        }
        Ok(Belief(pi))
    }

    /// Builds a belief, clamping rounding spill-over into [0, 1].
    pub fn clamped(pi: f64) -> Self {
        Belief(clamp_unit(pi))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl From<Belief> for f64 {
    fn from(b: Belief) -> f64 {
        b.0
    }
}

/// Discount factor, strictly inside (0, 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscountFactor(f64);

impl DiscountFactor {
    pub fn new(beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta < 1.0) {
            return Err(LrbError::invalid("beta", format!("{beta} is outside (0, 1)")));
        }
        Ok(DiscountFactor(beta))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Which transition entries the feedback updates propagate through.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Propagation {
    /// One-step entries `p00`, `p10`.
    #[default]
    OneStep,
    /// The (0,0) and (1,0) entries of `P^k`.
    KStep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Correlation {
    /// `p00 > p10`: the chain clings to its current state.
    Positive,
    /// `p00 < p10`: the chain tends to flip.
    Negative,
    /// `p00 == p10`: successive states are independent.
    Uncorrelated,
}

/// Parameters of one arm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmParams {
    pub p00: f64,
    pub p10: f64,
    /// ACK probability when the session starts in state 0.
    pub rho0: f64,
    /// ACK probability when the session starts in state 1.
    pub rho1: f64,
    /// Mean session reward when the session starts in state 0.
    pub r0: f64,
    /// Mean session reward when the session starts in state 1.
    pub r1: f64,
    /// State transitions per session.
    pub k: u32,
    pub propagation: Propagation,
}

fn clamp_unit(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

fn check_prob(errors: &mut Vec<String>, name: &str, x: f64) {
    if !(0.0..=1.0).contains(&x) {
        errors.push(format!("{name}: {x} is not a probability in [0, 1]"));
    }
}

impl ArmParams {
    /// Validates and builds an arm using one-step feedback propagation.
    pub fn new(p00: f64, p10: f64, rho0: f64, rho1: f64, r0: f64, r1: f64, k: u32) -> Result<Self> {
        let arm = ArmParams {
            p00,
            p10,
            rho0,
            rho1,
            r0,
            r1,
            k,
            propagation: Propagation::OneStep,
        };
        let errors = arm.validation_errors();
        if errors.is_empty() {
            Ok(arm)
        } else {
            Err(LrbError::Config(errors))
        }
    }

    pub fn with_propagation(mut self, propagation: Propagation) -> Self {
        self.propagation = propagation;
        self
    }

    /// Same arm, but believed to make `k` transitions per session.
    pub fn with_k(mut self, k: u32) -> Self {
        self.k = k;
        self
    }

    /// Every violated invariant, one message per offending field.
    pub fn validation_errors(&self) -> Vec<String> {
        let mut errors = Vec::new();
        check_prob(&mut errors, "p00", self.p00);
        check_prob(&mut errors, "p10", self.p10);
        check_prob(&mut errors, "rho0", self.rho0);
        check_prob(&mut errors, "rho1", self.rho1);
        for (name, r) in [("r0", self.r0), ("r1", self.r1)] {
            if !(r.is_finite() && r >= 0.0) {
                errors.push(format!("{name}: reward {r} must be finite and >= 0"));
            }
        }
        if self.k == 0 {
            errors.push("k: must be at least 1".to_string());
        }
        if errors.is_empty() {
            let reward_order = (self.r1 - self.r0).partial_cmp(&0.0);
            let ack_order = (self.rho1 - self.rho0).partial_cmp(&0.0);
            if reward_order != ack_order {
                errors.push(format!(
                    "r0/r1 vs rho0/rho1: reward ordering ({} vs {}) must match success ordering ({} vs {})",
                    self.r0, self.r1, self.rho0, self.rho1
                ));
            }
        }
        errors
    }

    pub fn correlation(&self) -> Correlation {
        if self.p00 > self.p10 {
            Correlation::Positive
        } else if self.p00 < self.p10 {
            Correlation::Negative
        } else {
            Correlation::Uncorrelated
        }
    }

    /// `P^k` for the one-step matrix `[[p00, 1-p00], [p10, 1-p10]]`, by repeated squaring.
    pub fn kstep_matrix(&self, k: u32) -> [[f64; 2]; 2] {
        let mut result = [[1.0, 0.0], [0.0, 1.0]];
        let mut base = [[self.p00, 1.0 - self.p00], [self.p10, 1.0 - self.p10]];
        let mut e = k;
        while e > 0 {
            if e & 1 == 1 {
                result = mat_mul(&result, &base);
            }
            base = mat_mul(&base, &base);
            e >>= 1;
        }
        result
    }

    /// Transition entries used after feedback: `(to-0 from 0, to-0 from 1)`.
    fn feedback_entries(&self) -> (f64, f64) {
        match self.propagation {
            Propagation::OneStep => (self.p00, self.p10),
            Propagation::KStep => {
                let m = self.kstep_matrix(self.k);
                (m[0][0], m[1][0])
            }
        }
    }

    /// Posterior-then-propagate after an ACK, `None` if an ACK is impossible.
    pub(crate) fn gamma1_raw(&self, pi: f64) -> Option<f64> {
        let (a00, a10) = self.feedback_entries();
        let den = self.rho1 * (1.0 - pi) + self.rho0 * pi;
        if den <= 0.0 {
            return None;
        }
        let num = (1.0 - pi) * self.rho1 * a10 + pi * self.rho0 * a00;
        Some(clamp_unit(num / den))
    }

    /// Posterior-then-propagate after a NACK, `None` if a NACK is impossible.
    pub(crate) fn gamma0_raw(&self, pi: f64) -> Option<f64> {
        let (a00, a10) = self.feedback_entries();
        let den = (1.0 - self.rho1) * (1.0 - pi) + (1.0 - self.rho0) * pi;
        if den <= 0.0 {
            return None;
        }
        let num = (1.0 - pi) * (1.0 - self.rho1) * a10 + pi * (1.0 - self.rho0) * a00;
        Some(clamp_unit(num / den))
    }

    pub(crate) fn gamma2_raw(&self, pi: f64) -> f64 {
        let d = self.p00 - self.p10;
        if d == 0.0 {
            return self.p10;
        }
        let dk = d.powi(self.k as i32);
        // (1 - d^k) / (1 - d), which tends to k as d -> 1.
        let series = if (1.0 - d).abs() < 1e-15 {
            self.k as f64
        } else {
            (1.0 - dk) / (1.0 - d)
        };
        clamp_unit(dk * pi + self.p10 * series)
    }

    /// Belief at the next session after playing and receiving an ACK.
    pub fn gamma1(&self, pi: Belief) -> Result<Belief> {
        self.gamma1_raw(pi.0)
            .map(Belief)
            .ok_or(LrbError::ImpossibleObservation { feedback: 1, belief: pi.0 })
    }

    /// Belief at the next session after playing and receiving a NACK.
    pub fn gamma0(&self, pi: Belief) -> Result<Belief> {
        self.gamma0_raw(pi.0)
            .map(Belief)
            .ok_or(LrbError::ImpossibleObservation { feedback: 0, belief: pi.0 })
    }

    /// Belief at the next session when the arm is left alone for `k` transitions.
    pub fn gamma2(&self, pi: Belief) -> Belief {
        Belief(self.gamma2_raw(pi.0))
    }

    /// Limit of repeated `gamma2`: the stationary probability of state 0.
    pub fn stationary_q(&self) -> Result<Belief> {
        let d = self.p00 - self.p10;
        if (1.0 - d).abs() < f64::EPSILON {
            return Err(LrbError::NoStationaryBelief);
        }
        Ok(Belief(clamp_unit(self.p10 / (1.0 - d))))
    }

    pub fn expected_reward(&self, pi: Belief) -> f64 {
        self.expected_reward_raw(pi.0)
    }

    pub fn success_prob(&self, pi: Belief) -> f64 {
        self.success_prob_raw(pi.0)
    }

    #[inline]
    pub(crate) fn expected_reward_raw(&self, pi: f64) -> f64 {
        pi * self.r0 + (1.0 - pi) * self.r1
    }

    #[inline]
    pub(crate) fn success_prob_raw(&self, pi: f64) -> f64 {
        pi * self.rho0 + (1.0 - pi) * self.rho1
    }

    pub(crate) fn reward_for_state(&self, state: u8) -> f64 {
        if state == 0 {
            self.r0
        } else {
            self.r1
        }
    }
}

fn mat_mul(a: &[[f64; 2]; 2], b: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}
