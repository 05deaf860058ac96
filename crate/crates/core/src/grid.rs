//! Tabulated functions on `[0, 1]` with piecewise-linear evaluation.
//!
//! Every function the solver manipulates (`v_n`, `V`, `u_{n,r}`, `F_r`) is a
//! [`GridFunction`]: ordinates on a shared, strictly increasing set of knots
//! that contains both endpoints.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::math;

/// Strictly increasing knots `0 = x_0 < ... < x_{n-1} = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    knots: Arc<[f64]>,
}

impl Grid {
    /// Chebyshev-extrema spacing `x_i = sin^2(pi i / (2 (n - 1)))`, which
    /// clusters knots quadratically near both endpoints.
    pub fn cosine(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidParameter {
                name: "grid_size",
                value: n as f64,
                reason: "need at least 3 knots",
            });
        }
        let last = (n - 1) as f64;
        let knots: Vec<f64> = (0..n)
            .map(|i| match i {
                0 => 0.0,
                i if i == n - 1 => 1.0,
                i => {
                    let s = math::sin(FRAC_PI_2 * i as f64 / last);
                    s * s
                }
            })
            .collect();
        Self::from_knots(knots)
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidParameter {
                name: "grid_size",
                value: n as f64,
                reason: "need at least 3 knots",
            });
        }
        let last = (n - 1) as f64;
        Self::from_knots((0..n).map(|i| i as f64 / last).collect())
    }

    pub fn from_knots(knots: Vec<f64>) -> Result<Self> {
        let ok = knots.len() >= 2
            && knots[0] == 0.0
            && knots[knots.len() - 1] == 1.0
            && knots.windows(2).all(|w| w[0] < w[1]);
        if !ok {
            return Err(Error::InvalidParameter {
                name: "knots",
                value: knots.len() as f64,
                reason: "knots must increase strictly from 0 to 1",
            });
        }
        Ok(Self {
            knots: knots.into(),
        })
    }

    #[inline]
    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.knots.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.knots.is_empty()
    }

    /// Cell index `i` and weight `t` such that
    /// `x = (1 - t) x_i + t x_{i+1}`. Arguments outside `[0, 1]` are clamped.
    #[inline]
    pub fn locate(&self, x: f64) -> (usize, f64) {
        let k = &self.knots;
        let n = k.len();
        let x = x.clamp(0.0, 1.0);
        let i = k.partition_point(|&v| v <= x).clamp(1, n - 1) - 1;
        let t = (x - k[i]) / (k[i + 1] - k[i]);
        (i, t.clamp(0.0, 1.0))
    }

    /// Spacing of the cell containing `x`.
    pub fn spacing_at(&self, x: f64) -> f64 {
        let (i, _) = self.locate(x);
        self.knots[i + 1] - self.knots[i]
    }

    pub fn tabulate(&self, f: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction::new(self.clone(), self.knots.iter().map(|&x| f(x)).collect())
    }
}

/// A function on `[0, 1]` given by its values at the knots of a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    ordinates: Vec<f64>,
    /// The producer expects the function to be concave (iterates of the
    /// dynamic-programming operator are).
    pub is_concave_expected: bool,
    /// Index of the iteration that produced this function, if any.
    pub derived_from_iteration: Option<usize>,
}

impl GridFunction {
    /// # Panics
    ///
    /// If the number of ordinates differs from the number of knots.
    pub fn new(grid: Grid, ordinates: Vec<f64>) -> Self {
        assert_eq!(grid.len(), ordinates.len(), "one ordinate per knot");
        Self {
            grid,
            ordinates,
            is_concave_expected: false,
            derived_from_iteration: None,
        }
    }

    pub fn zero(grid: &Grid) -> Self {
        grid.tabulate(|_| 0.0)
    }

    /// The terminal cost `h(pi) = 1 - pi`.
    pub fn terminal_cost(grid: &Grid) -> Self {
        let mut h = grid.tabulate(|x| 1.0 - x);
        h.is_concave_expected = true;
        h.derived_from_iteration = Some(0);
        h
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    #[inline]
    pub fn abscissae(&self) -> &[f64] {
        self.grid.knots()
    }

    #[inline]
    pub fn ordinates(&self) -> &[f64] {
        &self.ordinates
    }

    pub fn ordinates_mut(&mut self) -> &mut [f64] {
        &mut self.ordinates
    }

    pub fn into_ordinates(self) -> Vec<f64> {
        self.ordinates
    }

    /// Piecewise-linear evaluation; arguments are clamped to `[0, 1]`.
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        let (i, t) = self.grid.locate(x);
        self.interpolate(i, t)
    }

    #[inline]
    pub(crate) fn interpolate(&self, i: usize, t: f64) -> f64 {
        let y = &self.ordinates;
        if t == 0.0 {
            y[i]
        } else {
            y[i] + t * (y[i + 1] - y[i])
        }
    }

    /// `max_i |self(x_i) - other(x_i)|` over the shared knots.
    pub fn sup_distance(&self, other: &GridFunction) -> f64 {
        debug_assert_eq!(self.grid.len(), other.grid.len());
        self.ordinates
            .iter()
            .zip(&other.ordinates)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Largest amount by which an interior ordinate falls below the chord
    /// through its two neighbours. Zero or negative for concave data.
    pub fn concavity_violation(&self) -> f64 {
        let x = self.grid.knots();
        let y = &self.ordinates;
        (1..x.len() - 1)
            .map(|i| {
                let chord = ((x[i + 1] - x[i]) * y[i - 1] + (x[i] - x[i - 1]) * y[i + 1])
                    / (x[i + 1] - x[i - 1]);
                chord - y[i]
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Replaces the ordinates by the least concave majorant of the points
    /// `(x_i, y_i)`. Returns the largest upward correction.
    pub fn make_concave(&mut self) -> f64 {
        let x = self.grid.knots();
        let y = &mut self.ordinates;
        // Upper hull, monotone chain.
        let mut hull: Vec<usize> = Vec::with_capacity(x.len());
        for i in 0..x.len() {
            while hull.len() >= 2 {
                let a = hull[hull.len() - 2];
                let b = hull[hull.len() - 1];
                let cross = (x[b] - x[a]) * (y[i] - y[a]) - (y[b] - y[a]) * (x[i] - x[a]);
                if cross >= 0.0 {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(i);
        }
        let mut max_lift: f64 = 0.0;
        for seg in hull.windows(2) {
            let (a, b) = (seg[0], seg[1]);
            for i in a + 1..b {
                let t = (x[i] - x[a]) / (x[b] - x[a]);
                let lifted = y[a] + t * (y[b] - y[a]);
                max_lift = max_lift.max(lifted - y[i]);
                y[i] = lifted;
            }
        }
        max_lift
    }
}
