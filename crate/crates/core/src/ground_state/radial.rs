//! Radial shooting for the free ground state `Q'' + (2/r) Q' - Q + Q^3 = 0`,
//! `Q'(0) = 0`, `Q > 0`, `Q -> 0`.
//!
//! Bisection on `Q(0)`: a shot that crosses zero overshoots, one that turns
//! upward while still positive undershoots. The profile is tabulated up to
//! the radius where `Q` falls below `match_level` and continued by the exact
//! linear tail `C e^{-r} / r` beyond it (the cubic term is then below 1e-9).

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::ode::{Dopri, Tolerances};
use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::quadrature::{self, QuadOptions};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RadialOptions {
    pub rmax: f64,
    pub r_start: f64,
    pub bracket: [f64; 2],
    /// Absolute bisection tolerance on `Q(0)`.
    pub bisection_tol: f64,
    pub rtol: f64,
    pub atol: f64,
    pub table_step: f64,
    pub match_level: f64,
    /// Bound on both Pohozaev residuals of the radial solution.
    pub tol: f64,
}

impl Default for RadialOptions {
    fn default() -> Self {
        Self {
            rmax: 30.0,
            r_start: 1e-5,
            bracket: [2.0, 6.0],
            bisection_tol: 1e-13,
            rtol: 1e-12,
            atol: 1e-15,
            table_step: 0.005,
            match_level: 1e-3,
            tol: 1e-3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Shot {
    Overshoot,
    Undershoot,
    Unclassified,
}

type State = [f64; 5];

// (Q, Q', 4π∫Q^2 r^2, 4π∫Q'^2 r^2, 4π∫Q^4 r^2)
fn rhs(r: f64, y: &State) -> State {
    let (q, p) = (y[0], y[1]);
    let w = 4.0 * PI * r * r;
    [p, -2.0 * p / r + q - q * q * q, w * q * q, w * p * p, w * q.powi(4)]
}

fn start_state(q0: f64, r0: f64) -> State {
    let a = (q0 - q0.powi(3)) / 6.0;
    let q = q0 + a * r0 * r0;
    let vol = 4.0 * PI * r0.powi(3) / 3.0;
    [q, 2.0 * a * r0, vol * q0 * q0, 0.0, vol * q0.powi(4)]
}

fn integrator(q0: f64, opts: &RadialOptions) -> Dopri<5, fn(f64, &State) -> State> {
    Dopri::new(
        rhs as fn(f64, &State) -> State,
        opts.r_start,
        start_state(q0, opts.r_start),
        1e-3,
        Tolerances {
            rtol: opts.rtol,
            atol: opts.atol,
        },
    )
}

fn shoot(q0: f64, opts: &RadialOptions) -> Shot {
    let mut ode = integrator(q0, opts);
    while ode.t < opts.rmax {
        ode.step(opts.rmax - ode.t);
        if ode.y[0] < 0.0 {
            return Shot::Overshoot;
        }
        if ode.y[1] > 0.0 {
            return Shot::Undershoot;
        }
    }
    Shot::Unclassified
}

/// Tabulated free ground state and its radial norms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    pub q0: f64,
    pub table_step: f64,
    /// `Q(j * table_step)` for `j = 0..` up to `r_match`.
    pub values: Vec<f64>,
    pub slopes: Vec<f64>,
    pub r_match: f64,
    /// `C` in the tail `C e^{-r} / r`.
    pub tail_coefficient: f64,
    pub mass: f64,
    pub grad_sq: f64,
    pub l4_fourth: f64,
    pub bisection_steps: usize,
}

impl RadialProfile {
    pub fn solve(opts: &RadialOptions) -> Result<Self> {
        let [mut lo, mut hi] = opts.bracket;
        let (s_lo, s_hi) = (shoot(lo, opts), shoot(hi, opts));
        if s_lo != Shot::Undershoot || s_hi != Shot::Overshoot {
            return Err(Error::Bracket(format!(
                "Q(0) in [{lo}, {hi}]: low end {s_lo:?}, high end {s_hi:?}; \
                 expected undershoot below and overshoot above"
            )));
        }
        let mut steps = 0;
        while hi - lo > opts.bisection_tol {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            steps += 1;
            match shoot(mid, opts) {
                Shot::Overshoot => hi = mid,
                Shot::Undershoot => lo = mid,
                Shot::Unclassified => {
                    lo = mid;
                    hi = mid;
                }
            }
        }
        let q0 = 0.5 * (lo + hi);
        Self::tabulate(q0, steps, opts)
    }

    fn tabulate(q0: f64, steps: usize, opts: &RadialOptions) -> Result<Self> {
        let dr = opts.table_step;
        let mut ode = integrator(q0, opts);
        let mut values = vec![q0];
        let mut slopes = vec![0.0];
        let mut j = 1;
        loop {
            let r = j as f64 * dr;
            if r > opts.rmax {
                return Err(Error::Bracket(format!(
                    "Q did not fall below {} before rmax = {}",
                    opts.match_level, opts.rmax
                )));
            }
            ode.advance_to(r);
            let [q, p, ..] = ode.y;
            if q <= 0.0 || p > 0.0 {
                return Err(Error::Bracket(format!(
                    "shooting solution left the ground-state branch at r = {r:.3} before matching"
                )));
            }
            values.push(q);
            slopes.push(p);
            if q < opts.match_level {
                break;
            }
            j += 1;
        }
        let r_match = j as f64 * dr;
        let q_match = *values.last().unwrap();
        let c = q_match * r_match * r_match.exp();
        let qopts = QuadOptions {
            rel_tol: 1e-12,
            abs_tol: 1e-300,
            max_intervals: 2000,
        };
        let mass_tail = 2.0 * PI * c * c * (-2.0 * r_match).exp();
        let grad_tail = 4.0
            * PI
            * c
            * c
            * quadrature::integrate_to_infinity(
                |r| (-2.0 * r).exp() * (1.0 + 1.0 / r).powi(2),
                r_match,
                qopts,
            )?;
        let l4_tail = 4.0
            * PI
            * c.powi(4)
            * quadrature::integrate_to_infinity(|r| (-4.0 * r).exp() / (r * r), r_match, qopts)?;
        Ok(Self {
            q0,
            table_step: dr,
            values,
            slopes,
            r_match,
            tail_coefficient: c,
            mass: ode.y[2] + mass_tail,
            grad_sq: ode.y[3] + grad_tail,
            l4_fourth: ode.y[4] + l4_tail,
            bisection_steps: steps,
        })
    }

    /// `Q(r)` by cubic Hermite interpolation on the table, tail beyond it.
    pub fn value(&self, r: f64) -> f64 {
        let r = r.abs();
        if r >= self.r_match {
            return self.tail_coefficient * (-r).exp() / r;
        }
        let s = r / self.table_step;
        let j = (s.floor() as usize).min(self.values.len() - 2);
        let t = s - j as f64;
        let (y0, y1) = (self.values[j], self.values[j + 1]);
        let (m0, m1) = (self.slopes[j] * self.table_step, self.slopes[j + 1] * self.table_step);
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * m1
    }

    /// `Q(|x - center| / scale)` sampled on the grid.
    pub fn on_grid(&self, grid: &Grid, center: [f64; 3], scale: f64) -> Field {
        Field::from_fn(grid, |x| {
            let d = ((x[0] - center[0]).powi(2) + (x[1] - center[1]).powi(2) + (x[2] - center[2]).powi(2)).sqrt();
            Complex64::new(self.value(d / scale), 0.0)
        })
    }

    /// `(grad_sq / mass, l4_fourth / mass)`, both ideally `(3, 4)`.
    pub fn pohozaev_ratios(&self) -> (f64, f64) {
        (self.grad_sq / self.mass, self.l4_fourth / self.mass)
    }

    pub fn pohozaev_residuals(&self) -> (f64, f64) {
        (
            (self.grad_sq - 3.0 * self.mass).abs() / self.grad_sq,
            (self.l4_fourth - 4.0 * self.mass).abs() / self.l4_fourth,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Reference values from an independent 8th-order integration at rtol 1e-13.
    const Q0: f64 = 4.337_387_680_000_72;
    const MASS: f64 = 18.897_251_301_012_44;
    const GRAD: f64 = 56.691_753_909_302_13;
    const L4: f64 = 75.589_005_210_438_71;

    #[test]
    fn matches_reference_values() {
        let p = RadialProfile::solve(&RadialOptions::default()).unwrap();
        assert!((p.q0 - Q0).abs() < 1e-9, "{}", p.q0);
        assert!((p.mass - MASS).abs() < 1e-7 * MASS, "{}", p.mass);
        assert!((p.grad_sq - GRAD).abs() < 1e-7 * GRAD, "{}", p.grad_sq);
        assert!((p.l4_fourth - L4).abs() < 1e-7 * L4, "{}", p.l4_fourth);
        let (r1, r2) = p.pohozaev_residuals();
        assert!(r1 < 1e-6 && r2 < 1e-6);
    }

    #[test]
    fn profile_positive_and_decreasing() {
        let p = RadialProfile::solve(&RadialOptions::default()).unwrap();
        let mut prev = f64::INFINITY;
        for i in 0..4000 {
            let v = p.value(i as f64 * 0.005);
            assert!(v > 0.0 && v < prev);
            prev = v;
        }
        // tail and table agree at the seam
        let eps = 1e-9;
        let a = p.value(p.r_match - eps);
        let b = p.value(p.r_match + eps);
        assert!((a - b).abs() < 1e-6 * a);
    }

    #[test]
    fn bad_bracket_is_reported() {
        let opts = RadialOptions {
            bracket: [4.5, 6.0],
            ..RadialOptions::default()
        };
        let err = RadialProfile::solve(&opts).unwrap_err().to_string();
        assert!(err.contains("4.5"), "{err}");
    }
}
