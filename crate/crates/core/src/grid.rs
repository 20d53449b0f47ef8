use crate::error::{LrbError, Result};

/// Uniform grid `{0, δ, 2δ, …, 1}` on the belief interval.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefGrid {
    intervals: usize,
    points: Vec<f64>,
}

impl BeliefGrid {
    /// `delta` must lie in (0, 0.1] and divide 1 evenly.
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta <= 0.1) {
            return Err(LrbError::invalid("grid_delta", format!("{delta} is outside (0, 0.1]")));
        }
        let n = (1.0 / delta).round();
        if ((1.0 / delta) - n).abs() > 1e-9 * n {
            return Err(LrbError::invalid(
                "grid_delta",
                format!("{delta} does not divide [0, 1] into whole steps"),
            ));
        }
        Ok(Self::with_intervals(n as usize))
    }

    pub fn with_intervals(intervals: usize) -> Self {
        assert!(intervals >= 1);
        let points = (0..=intervals).map(|i| i as f64 / intervals as f64).collect();
        BeliefGrid { intervals, points }
    }

    pub fn delta(&self) -> f64 {
        1.0 / self.intervals as f64
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn point(&self, i: usize) -> f64 {
        self.points[i]
    }

    /// Index of the grid point nearest to `x`; exact midpoints go to the lower point.
    pub fn nearest_index(&self, x: f64) -> usize {
        let scaled = x.clamp(0.0, 1.0) * self.intervals as f64;
        let idx = (scaled - 0.5).ceil();
        (idx.max(0.0) as usize).min(self.intervals)
    }

    /// Nearest-neighbour approximation of `x` onto the grid.
    pub fn snap(&self, x: f64) -> f64 {
        self.points[self.nearest_index(x)]
    }
}
