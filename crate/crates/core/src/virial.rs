//! Localized virial quantities for `z_R(t) = ∫ χ_R |u|^2`, the coercivity
//! quantity `8||∇u||^2 - 6||u||_4^4 - 4∫(x·∇V)|u|^2`, and the defocusing
//! constant `β`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, Grid, RealField};
use crate::potentials::{radial_derivative, AdmissibilityReport, PotentialSpec};

/// `q(t) = (1-t)^5 (1 + 7t + 26t^2 + 70t^3 + 155t^4)` in monomial form: the
/// unique degree-9 polynomial with `q = (1+t)^2` to fourth order at `t = 0`
/// and a fifth-order zero at `t = 1`.
fn blend_coefficients() -> [f64; 10] {
    let a = [1.0, -5.0, 10.0, -10.0, 5.0, -1.0];
    let b = [1.0, 7.0, 26.0, 70.0, 155.0];
    let mut c = [0.0; 10];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            c[i + j] += x * y;
        }
    }
    c
}

/// `(χ, χ', χ'', χ''', χ'''')` of the radial cutoff at radius `r`.
fn radial_cutoff(r: f64, radius: f64, coeffs: &[f64; 10]) -> [f64; 5] {
    if r <= radius {
        return [r * r, 2.0 * r, 2.0, 0.0, 0.0];
    }
    if r >= 2.0 * radius {
        return [0.0; 5];
    }
    let t = (r - radius) / radius;
    let mut out = [0.0; 5];
    let mut c = coeffs.to_vec();
    let mut scale = radius * radius;
    for d in out.iter_mut() {
        *d = scale * c.iter().rev().fold(0.0, |acc, x| acc * t + x);
        c = c.iter().enumerate().skip(1).map(|(k, x)| k as f64 * x).collect();
        scale /= radius;
    }
    out
}

/// `χ_R = R^2 χ(x/R)` and its derivatives sampled on a grid.
#[derive(Clone, Debug)]
pub struct CutoffProfile {
    pub radius: f64,
    pub chi: RealField,
    pub grad: [RealField; 3],
    /// `(xx, xy, xz, yy, yz, zz)`
    pub hess: [RealField; 6],
    pub lap: RealField,
    pub bilap: RealField,
    /// `χ'(r) / r`, so that `∇χ = (χ'/r) x`.
    radial_rate: RealField,
}

const HESS_PAIRS: [(usize, usize); 6] = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];

pub fn build_cutoff(grid: &Grid, radius: f64) -> Result<CutoffProfile> {
    if !(radius > 0.0) || 2.0 * radius >= 0.5 * grid.box_length() {
        return Err(Error::InvalidArgument(format!(
            "cutoff radius R = {radius}: need 0 < 2R < L/2 = {}",
            0.5 * grid.box_length()
        )));
    }
    let coeffs = blend_coefficients();
    let len = grid.len();
    let mut chi = Vec::with_capacity(len);
    let mut grad = [(); 3].map(|_| Vec::with_capacity(len));
    let mut hess = [(); 6].map(|_| Vec::with_capacity(len));
    let mut lap = Vec::with_capacity(len);
    let mut bilap = Vec::with_capacity(len);
    let mut rate = Vec::with_capacity(len);
    for x in grid.positions() {
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        let [c0, c1, c2, c3, c4] = radial_cutoff(r, radius, &coeffs);
        chi.push(c0);
        if r <= radius {
            // exact quadratic core, also covers r = 0
            for (i, g) in grad.iter_mut().enumerate() {
                g.push(2.0 * x[i]);
            }
            for (h, &(i, j)) in hess.iter_mut().zip(&HESS_PAIRS) {
                h.push(if i == j { 2.0 } else { 0.0 });
            }
            lap.push(6.0);
            bilap.push(0.0);
            rate.push(2.0);
            continue;
        }
        let n = [x[0] / r, x[1] / r, x[2] / r];
        for (i, g) in grad.iter_mut().enumerate() {
            g.push(c1 * n[i]);
        }
        for (h, &(i, j)) in hess.iter_mut().zip(&HESS_PAIRS) {
            let delta = if i == j { 1.0 } else { 0.0 };
            h.push(c2 * n[i] * n[j] + c1 / r * (delta - n[i] * n[j]));
        }
        lap.push(c2 + 2.0 * c1 / r);
        bilap.push(c4 + 4.0 * c3 / r);
        rate.push(c1 / r);
    }
    let field = |v: Vec<f64>| RealField::new(grid.clone(), v);
    let [g0, g1, g2] = grad;
    let [h0, h1, h2, h3, h4, h5] = hess;
    Ok(CutoffProfile {
        radius,
        chi: field(chi)?,
        grad: [field(g0)?, field(g1)?, field(g2)?],
        hess: [field(h0)?, field(h1)?, field(h2)?, field(h3)?, field(h4)?, field(h5)?],
        lap: field(lap)?,
        bilap: field(bilap)?,
        radial_rate: field(rate)?,
    })
}

/// `∂_t z_R = 2 Im ∫ (∇χ_R·∇u) ū`.
pub fn virial_first(u: &Field, cut: &CutoffProfile) -> Result<f64> {
    u.grid().check_same(cut.chi.grid())?;
    Ok(first_from_gradient(u, &u.gradient(), cut))
}

fn first_from_gradient(u: &Field, du: &[Field; 3], cut: &CutoffProfile) -> f64 {
    let mut acc = 0.0;
    for (axis, d) in du.iter().enumerate() {
        for ((g, dv), v) in cut.grad[axis].values().iter().zip(d.values()).zip(u.values()) {
            acc += g * (dv * v.conj()).im;
        }
    }
    2.0 * acc * u.grid().cell_volume()
}

/// Precomputed pieces for evaluating `z_R`, `z_R'`, `z_R''` and the
/// coercivity quantity along a trajectory.
#[derive(Clone, Debug)]
pub struct VirialProbe {
    pub cut: CutoffProfile,
    /// `+1` focusing, `-1` defocusing, `0` linear.
    pub sigma: f64,
    /// `∇χ_R·∇V`
    chi_dot_v: RealField,
    /// `x·∇V`
    x_dot_v: RealField,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VirialSample {
    pub z: f64,
    pub dz: f64,
    pub d2z: f64,
    /// `8||∇u||^2 - 6σ||u||_4^4 - 4∫(x·∇V)|u|^2`
    pub coercivity: f64,
}

impl VirialProbe {
    pub fn new(grid: &Grid, radius: f64, spec: &PotentialSpec, sigma: f64) -> Result<Self> {
        let cut = build_cutoff(grid, radius)?;
        let x_dot_v = radial_derivative(spec, grid)?;
        // χ_R is radial, so ∇χ_R·∇V = (χ'/r) x·∇V; this stays finite at a Yukawa center
        let chi_dot_v = RealField::new(
            grid.clone(),
            cut.radial_rate
                .values()
                .iter()
                .zip(x_dot_v.values())
                .map(|(a, b)| a * b)
                .collect(),
        )?;
        Ok(Self {
            cut,
            sigma,
            chi_dot_v,
            x_dot_v,
        })
    }

    pub fn evaluate(&self, u: &Field) -> Result<VirialSample> {
        self.evaluate_with(u, false)
    }

    /// With `masked_density`, the nonlinear term is the one generated by the
    /// dealiased flow, `i u_t = ℋu - σ P(|u|^2) u`: `2∫|u|^2 ∇χ·∇P(|u|^2)` in
    /// place of `-∫Δχ|u|^4`. The two agree when `P(|u|^2) = |u|^2`.
    pub fn evaluate_with(&self, u: &Field, masked_density: bool) -> Result<VirialSample> {
        u.grid().check_same(self.cut.chi.grid())?;
        let du = u.gradient();
        let h3 = u.grid().cell_volume();
        let mut hess_term = 0.0;
        for (h, &(i, j)) in self.cut.hess.iter().zip(&HESS_PAIRS) {
            let weight = if i == j { 1.0 } else { 2.0 };
            let s: f64 = h
                .values()
                .iter()
                .zip(du[i].values())
                .zip(du[j].values())
                .map(|((c, a), b)| c * (a * b.conj()).re)
                .sum();
            hess_term += weight * s;
        }
        let rho = u.modulus_squared();
        let mut quartic = 0.0;
        let mut bilap = 0.0;
        let mut potential = 0.0;
        for (k, r) in rho.values().iter().enumerate() {
            quartic += self.cut.lap.values()[k] * r * r;
            bilap += self.cut.bilap.values()[k] * r;
            potential += self.chi_dot_v.values()[k] * r;
        }
        if masked_density && self.sigma != 0.0 {
            quartic = masked_quartic(&rho, &self.cut);
        }
        let d2z = h3 * (4.0 * hess_term - self.sigma * quartic - bilap - 2.0 * potential);
        Ok(VirialSample {
            z: self.cut.chi.weighted_mass(u),
            dz: first_from_gradient(u, &du, &self.cut),
            d2z,
            coercivity: coercivity_probe_with(u, &self.x_dot_v, self.sigma)?,
        })
    }
}

/// `-2 Σ ρ ∇χ·∇P(ρ)` (without the cell volume), `P` the 2/3 mask.
fn masked_quartic(rho: &RealField, cut: &CutoffProfile) -> f64 {
    let mask = rho.grid().dealias_mask();
    let mut spec = rho.to_field().transform_forward();
    for (c, keep) in spec.coeffs_mut().iter_mut().zip(&mask) {
        if !keep {
            *c = Default::default();
        }
    }
    let mut acc = 0.0;
    for axis in 0..3 {
        let d = spec.derivative(axis).transform_inverse();
        acc += rho
            .values()
            .iter()
            .zip(cut.grad[axis].values())
            .zip(d.values())
            .map(|((r, g), dp)| r * g * dp.re)
            .sum::<f64>();
    }
    -2.0 * acc
}

/// `8||∇u||^2 - 6||u||_4^4 - 4∫(x·∇V)|u|^2` for the focusing equation.
pub fn coercivity_probe(u: &Field, spec: &PotentialSpec) -> Result<f64> {
    coercivity_probe_with(u, &radial_derivative(spec, u.grid())?, 1.0)
}

fn coercivity_probe_with(u: &Field, x_dot_v: &RealField, sigma: f64) -> Result<f64> {
    u.grid().check_same(x_dot_v.grid())?;
    Ok(8.0 * u.grad_norm_sq() - 6.0 * sigma * u.l4_fourth() - 4.0 * x_dot_v.weighted_mass(u))
}

/// `β = 4 (2 - ||(x·∇V)_+||_K / 4π) / (1 + ||V_+||_K / 4π)`.
pub fn defocusing_beta(report: &AdmissibilityReport) -> Result<f64> {
    let confining = report.confining_kato.ok_or_else(|| {
        Error::Unsupported("β needs ||(x·∇V)_+||_K, which is distributional for ball_indicator".into())
    })?;
    let four_pi = 4.0 * PI;
    Ok(4.0 * (2.0 - confining / four_pi) / (1.0 + report.kato_norm_positive / four_pi))
}

/// Time series of the virial quantities at saved frames.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VirialSeries {
    pub radius: f64,
    pub times: Vec<f64>,
    pub z: Vec<f64>,
    pub dz_analytic: Vec<f64>,
    pub d2z_analytic: Vec<f64>,
    /// Centered differences of `z`; endpoints are `None`.
    pub dz_fd: Vec<Option<f64>>,
    pub d2z_fd: Vec<Option<f64>>,
    pub coercivity: Vec<f64>,
}

impl VirialSeries {
    pub fn new(radius: f64) -> Self {
        Self {
            radius,
            ..Self::default()
        }
    }

    pub fn push(&mut self, t: f64, s: &VirialSample) {
        self.times.push(t);
        self.z.push(s.z);
        self.dz_analytic.push(s.dz);
        self.d2z_analytic.push(s.d2z);
        self.coercivity.push(s.coercivity);
    }

    /// Fills the centered differences over the leading run of equally spaced frames.
    pub fn finish(&mut self) {
        let n = self.times.len();
        self.dz_fd = vec![None; n];
        self.d2z_fd = vec![None; n];
        if n < 3 {
            return;
        }
        let dt = self.times[1] - self.times[0];
        let uniform = self
            .times
            .windows(2)
            .take_while(|w| ((w[1] - w[0]) - dt).abs() <= 1e-9 * dt.abs())
            .count()
            + 1;
        for i in 1..uniform.saturating_sub(1) {
            self.dz_fd[i] = Some((self.z[i + 1] - self.z[i - 1]) / (2.0 * dt));
            self.d2z_fd[i] = Some((self.z[i + 1] - 2.0 * self.z[i] + self.z[i - 1]) / (dt * dt));
        }
    }

    /// `max |fd - analytic| / max |analytic|` over interior frames, for the first and second derivative.
    pub fn fd_mismatch(&self) -> (f64, f64) {
        fn rel(fd: &[Option<f64>], an: &[f64]) -> f64 {
            let scale = an.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let err = fd
                .iter()
                .zip(an)
                .filter_map(|(f, a)| f.map(|f| (f - a).abs()))
                .fold(0.0f64, f64::max);
            if scale > 0.0 {
                err / scale
            } else {
                err
            }
        }
        (rel(&self.dz_fd, &self.dz_analytic), rel(&self.d2z_fd, &self.d2z_analytic))
    }
}

/// Coercivity statistics of one cutoff radius along a trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadiusRow {
    pub radius: f64,
    /// Minimum of the coercivity quantity over frames.
    pub c0: f64,
    /// Largest `|z_R'' - coercivity|`, the localization remainder.
    pub max_remainder: f64,
}

pub fn radius_table(series: &[VirialSeries]) -> Vec<RadiusRow> {
    series
        .iter()
        .map(|s| RadiusRow {
            radius: s.radius,
            c0: s.coercivity.iter().copied().fold(f64::INFINITY, f64::min),
            max_remainder: s
                .d2z_analytic
                .iter()
                .zip(&s.coercivity)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max),
        })
        .collect()
}
