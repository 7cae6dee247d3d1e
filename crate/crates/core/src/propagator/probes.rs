//! Post-processing of trajectories: dispersive decay fit, scattering states,
//! and a finite-window space-time norm.

use serde::{Deserialize, Serialize};

use super::{linear_flow, Trajectory};
use crate::error::{Error, Result};
use crate::forms::form_values;
use crate::grid::{Field, RealField};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// Least-squares slope of `log ||u(t)||_∞` against `log t`.
    pub exponent: f64,
    pub intercept: f64,
    pub samples: usize,
    pub window: [f64; 2],
}

/// Fits the decay exponent of the sup norm over `window`. The window must span
/// a decade and end before the wraparound limit of the run.
pub fn dispersive_decay_probe(traj: &Trajectory, window: [f64; 2]) -> Result<DecayFit> {
    let [t0, t1] = window;
    if traj.sigma != 0 {
        return Err(Error::InvalidArgument(format!(
            "dispersive decay is probed on linear runs (sigma = {})",
            traj.sigma
        )));
    }
    if !(t0 > 0.0 && t1 > t0) {
        return Err(Error::Window(format!("[{t0}, {t1}] is empty or starts at t <= 0")));
    }
    if t1 < 10.0 * t0 {
        return Err(Error::Window(format!("[{t0}, {t1}] spans less than a decade")));
    }
    if t1 > traj.wraparound_limit * (1.0 + 1e-12) {
        return Err(Error::Window(format!(
            "window end {t1} exceeds the wraparound limit {}",
            traj.wraparound_limit
        )));
    }
    let pts: Vec<(f64, f64)> = traj
        .diagnostics
        .iter()
        .filter(|d| d.t >= t0 * (1.0 - 1e-12) && d.t <= t1 * (1.0 + 1e-12) && d.linf > 0.0)
        .map(|d| (d.t.ln(), d.linf.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::Window(format!(
            "only {} saved frames fall in [{t0}, {t1}]",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let exponent = sxy / sxx;
    Ok(DecayFit {
        exponent,
        intercept: my - exponent * mx,
        samples: pts.len(),
        window,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ScatteringSeries {
    pub times: Vec<f64>,
    /// `e^{i t_n ℋ} u(t_n)`
    #[serde(skip)]
    pub psi: Vec<Field>,
    /// `||ψ(t_{n+1}) - ψ(t_n)||` in the norm `sqrt(||f||^2 + ||ℋ^{1/2} f||^2)`.
    pub cauchy_increments: Vec<f64>,
    /// `||u(t_n)||_{L^4}`
    pub l4: Vec<f64>,
}

/// Pulls every saved frame back along the linear flow with the run's step size.
pub fn scattering_extract(traj: &Trajectory, v: &RealField) -> Result<ScatteringSeries> {
    if traj.frames.len() != traj.diagnostics.len() {
        return Err(Error::InvalidArgument(
            "scattering extraction needs the saved fields (keep_frames = true)".into(),
        ));
    }
    let mut psi = Vec::with_capacity(traj.frames.len());
    for (u, d) in traj.frames.iter().zip(&traj.diagnostics) {
        psi.push(linear_flow(u, v, -d.t, d.step)?);
    }
    let mut increments = Vec::with_capacity(psi.len().saturating_sub(1));
    for w in psi.windows(2) {
        let f = form_values(&w[1].sub(&w[0]), v)?;
        increments.push((f.mass + f.h_form).max(0.0).sqrt());
    }
    Ok(ScatteringSeries {
        times: traj.times(),
        psi,
        cauchy_increments: increments,
        l4: traj.diagnostics.iter().map(|d| d.l4).collect(),
    })
}

/// Exponent pairs `(q, r)` with `2/q + 3/r = 1`.
pub const ADMISSIBLE_PAIRS: [(f64, f64); 4] = [(5.0, 5.0), (4.0, 6.0), (f64::INFINITY, 3.0), (8.0, 4.0)];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SNormProxy {
    /// `(q, r, ||u||_{L^q_t L^r_x})` per pair; `q = ∞` is written as `null` in JSON.
    pub pairs: Vec<(Option<f64>, f64, f64)>,
    pub value: f64,
    pub window: [f64; 2],
}

/// Maximum over [`ADMISSIBLE_PAIRS`] of the trapezoidal `L^q_t L^r_x` norm
/// over the saved frames in `window` (all frames if `None`).
pub fn s_norm_proxy(traj: &Trajectory, window: Option<[f64; 2]>) -> SNormProxy {
    let frames: Vec<_> = traj
        .diagnostics
        .iter()
        .filter(|d| window.is_none_or(|[a, b]| d.t >= a && d.t <= b))
        .collect();
    let window = window.unwrap_or_else(|| {
        [
            frames.first().map_or(0.0, |d| d.t),
            frames.last().map_or(0.0, |d| d.t),
        ]
    });
    let lr = |d: &super::FrameDiagnostics, r: f64| -> f64 {
        match r as u32 {
            3 => d.l3,
            4 => d.l4,
            5 => d.l5,
            _ => d.l6,
        }
    };
    let mut pairs = Vec::new();
    let mut value = 0.0f64;
    for &(q, r) in &ADMISSIBLE_PAIRS {
        let norm = if q.is_infinite() {
            frames.iter().map(|d| lr(d, r)).fold(0.0, f64::max)
        } else {
            let mut acc = 0.0;
            for w in frames.windows(2) {
                let dt = w[1].t - w[0].t;
                acc += 0.5 * dt * (lr(w[0], r).powf(q) + lr(w[1], r).powf(q));
            }
            acc.powf(1.0 / q)
        };
        value = value.max(norm);
        pairs.push((q.is_finite().then_some(q), r, norm));
    }
    SNormProxy { pairs, value, window }
}

#[cfg(test)]
mod tests {
    use super::super::{evolve, EvolutionConfig};
    use super::*;
    use crate::grid::Grid;
    use num_complex::Complex64;

    #[test]
    fn pairs_are_admissible() {
        for (q, r) in ADMISSIBLE_PAIRS {
            assert_eq!(2.0 / q + 3.0 / r, 1.0);
        }
    }

    fn linear_run(g: &Grid, keep: bool) -> Trajectory {
        let u = Field::from_fn(g, |x| {
            Complex64::new((-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / 0.5).exp(), 0.0)
        });
        let cfg = EvolutionConfig {
            dt: 0.01,
            t_end: 0.4,
            sigma: 0,
            save_stride: 4,
            keep_frames: keep,
            ..EvolutionConfig::default()
        };
        evolve(&u, &RealField::zeros(g), &cfg, &[]).unwrap()
    }

    #[test]
    fn zero_trajectory_has_zero_proxy() {
        let g = Grid::new(16, 8.0).unwrap();
        let cfg = EvolutionConfig {
            dt: 0.1,
            t_end: 1.0,
            ..EvolutionConfig::default()
        };
        let traj = evolve(&Field::zeros(&g), &RealField::zeros(&g), &cfg, &[]).unwrap();
        assert_eq!(s_norm_proxy(&traj, None).value, 0.0);
    }

    #[test]
    fn window_errors() {
        let g = Grid::new(32, 16.0).unwrap();
        let traj = linear_run(&g, false);
        assert!(matches!(dispersive_decay_probe(&traj, [0.1, 0.1]), Err(Error::Window(_))));
        assert!(matches!(dispersive_decay_probe(&traj, [0.1, 0.5]), Err(Error::Window(_))));
        assert!(matches!(dispersive_decay_probe(&traj, [0.04, 100.0]), Err(Error::Window(_))));
    }

    #[test]
    fn linear_psi_is_constant() {
        let g = Grid::new(32, 16.0).unwrap();
        let v = crate::potentials::PotentialSpec::GaussianBump {
            amplitude: 1.0,
            width: 1.0,
            center: [0.0; 3],
        }
        .evaluate(&g);
        let u = Field::from_fn(&g, |x| {
            Complex64::from_polar((-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / 2.0).exp(), 0.5 * x[2])
        });
        let cfg = EvolutionConfig {
            dt: 0.02,
            t_end: 0.4,
            sigma: 0,
            save_stride: 5,
            keep_frames: true,
            ..EvolutionConfig::default()
        };
        let traj = evolve(&u, &v, &cfg, &[]).unwrap();
        let s = scattering_extract(&traj, &v).unwrap();
        assert_eq!(s.cauchy_increments.len(), 4);
        for inc in s.cauchy_increments {
            assert!(inc < 1e-11, "{inc}");
        }
        assert!(s.psi[3].sub(&u).mass().sqrt() < 1e-11);
    }
}
