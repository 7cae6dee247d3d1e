//! Analytic potential families, their negative/positive parts and radial
//! derivative `x·∇V`, and the global Kato norm
//! `||V||_K = sup_x ∫ |V(y)| / |x - y| dy`.
//!
//! Radial specs (every center at the origin) use the exact reduction
//! `K(s) = 4π [ s^-1 ∫_0^s |V| r^2 dr + ∫_s^∞ |V| r dr ]` maximized over `s`.
//! Everything else goes through a grid Newton-potential quadrature.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, RealField};
use crate::quadrature::{self, QuadOptions};

pub const FOUR_PI: f64 = 4.0 * PI;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    #[default]
    Zero,
    GaussianBump {
        amplitude: f64,
        width: f64,
        #[serde(default)]
        center: [f64; 3],
    },
    GaussianWell {
        amplitude: f64,
        width: f64,
        #[serde(default)]
        center: [f64; 3],
    },
    BallIndicator {
        amplitude: f64,
        radius: f64,
        #[serde(default)]
        center: [f64; 3],
    },
    Yukawa {
        amplitude: f64,
        decay: f64,
        #[serde(default)]
        center: [f64; 3],
    },
    Sum {
        members: Vec<PotentialSpec>,
    },
}


fn dist(x: [f64; 3], c: [f64; 3]) -> (f64, [f64; 3]) {
    let d = [x[0] - c[0], x[1] - c[1], x[2] - c[2]];
    ((d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt(), d)
}

impl PotentialSpec {
    /// Parameter checks; returns one message per violation.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        match self {
            PotentialSpec::Zero => {}
            PotentialSpec::GaussianBump { amplitude, width, .. } => {
                if !(*amplitude >= 0.0) {
                    out.push(format!("gaussian_bump amplitude {amplitude} must be >= 0"));
                }
                if !(*width > 0.0) {
                    out.push(format!("gaussian_bump width {width} must be > 0"));
                }
            }
            PotentialSpec::GaussianWell { amplitude, width, .. } => {
                if !(*amplitude < 0.0) {
                    out.push(format!("gaussian_well amplitude {amplitude} must be < 0"));
                }
                if !(*width > 0.0) {
                    out.push(format!("gaussian_well width {width} must be > 0"));
                }
            }
            PotentialSpec::BallIndicator { amplitude, radius, .. } => {
                if !amplitude.is_finite() {
                    out.push("ball_indicator amplitude must be finite".into());
                }
                if !(*radius > 0.0) {
                    out.push(format!("ball_indicator radius {radius} must be > 0"));
                }
            }
            PotentialSpec::Yukawa { amplitude, decay, .. } => {
                if !amplitude.is_finite() {
                    out.push("yukawa amplitude must be finite".into());
                }
                if !(*decay > 0.0) {
                    out.push(format!("yukawa decay {decay} must be > 0"));
                }
            }
            PotentialSpec::Sum { members } => {
                for m in members {
                    out.extend(m.violations());
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(v.join("; ")))
        }
    }

    /// Leaf members (a non-sum spec is its own single member).
    pub fn members(&self) -> Vec<&PotentialSpec> {
        match self {
            PotentialSpec::Sum { members } => members.iter().flat_map(|m| m.members()).collect(),
            other => vec![other],
        }
    }

    fn center(&self) -> Option<[f64; 3]> {
        match self {
            PotentialSpec::GaussianBump { center, .. }
            | PotentialSpec::GaussianWell { center, .. }
            | PotentialSpec::BallIndicator { center, .. }
            | PotentialSpec::Yukawa { center, .. } => Some(*center),
            _ => None,
        }
    }

    /// True when every member is centered at the origin.
    pub fn is_radial(&self) -> bool {
        self.members()
            .iter()
            .all(|m| m.center().is_none_or(|c| c == [0.0; 3]))
    }

    pub fn is_zero(&self) -> bool {
        self.members().iter().all(|m| match m {
            PotentialSpec::Zero => true,
            PotentialSpec::GaussianBump { amplitude, .. }
            | PotentialSpec::GaussianWell { amplitude, .. }
            | PotentialSpec::BallIndicator { amplitude, .. }
            | PotentialSpec::Yukawa { amplitude, .. } => *amplitude == 0.0,
            PotentialSpec::Sum { .. } => unreachable!(),
        })
    }

    /// Largest intrinsic length among members (1 for the zero potential).
    pub fn length_scale(&self) -> f64 {
        self.members()
            .iter()
            .filter_map(|m| match m {
                PotentialSpec::GaussianBump { width, .. }
                | PotentialSpec::GaussianWell { width, .. } => Some(*width),
                PotentialSpec::BallIndicator { radius, .. } => Some(*radius),
                PotentialSpec::Yukawa { decay, .. } => Some(1.0 / decay),
                _ => None,
            })
            .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))))
            .unwrap_or(1.0)
    }

    /// Largest `|center|` among members.
    pub fn center_extent(&self) -> f64 {
        self.members()
            .iter()
            .filter_map(|m| m.center())
            .map(|c| dist(c, [0.0; 3]).0)
            .fold(0.0, f64::max)
    }

    fn has_ball(&self) -> bool {
        self.members()
            .iter()
            .any(|m| matches!(m, PotentialSpec::BallIndicator { .. }))
    }

    /// `V(x)`; infinite at a Yukawa center.
    pub fn value_at(&self, x: [f64; 3]) -> f64 {
        match self {
            PotentialSpec::Zero => 0.0,
            PotentialSpec::GaussianBump { amplitude, width, center }
            | PotentialSpec::GaussianWell { amplitude, width, center } => {
                let (d, _) = dist(x, *center);
                amplitude * (-(d * d) / (width * width)).exp()
            }
            PotentialSpec::BallIndicator { amplitude, radius, center } => {
                if dist(x, *center).0 < *radius {
                    *amplitude
                } else {
                    0.0
                }
            }
            PotentialSpec::Yukawa { amplitude, decay, center } => {
                let (d, _) = dist(x, *center);
                if d == 0.0 {
                    amplitude.signum() * f64::INFINITY
                } else {
                    amplitude * (-decay * d).exp() / d
                }
            }
            PotentialSpec::Sum { members } => members.iter().map(|m| m.value_at(x)).sum(),
        }
    }

    /// `∇V(x)`; zero at a Yukawa center, unsupported for indicators.
    pub fn gradient_at(&self, x: [f64; 3]) -> Result<[f64; 3]> {
        let radial = |dvdr: f64, d: f64, v: [f64; 3]| {
            if d == 0.0 {
                [0.0; 3]
            } else {
                [dvdr * v[0] / d, dvdr * v[1] / d, dvdr * v[2] / d]
            }
        };
        match self {
            PotentialSpec::Zero => Ok([0.0; 3]),
            PotentialSpec::GaussianBump { amplitude, width, center }
            | PotentialSpec::GaussianWell { amplitude, width, center } => {
                let (d, v) = dist(x, *center);
                let w2 = width * width;
                let dvdr = -2.0 * d / w2 * amplitude * (-(d * d) / w2).exp();
                Ok(radial(dvdr, d, v))
            }
            PotentialSpec::BallIndicator { .. } => Err(Error::Unsupported(
                "radial derivative of ball_indicator is distributional".into(),
            )),
            PotentialSpec::Yukawa { amplitude, decay, center } => {
                let (d, v) = dist(x, *center);
                if d == 0.0 {
                    return Ok([0.0; 3]);
                }
                let dvdr = -amplitude * (-decay * d).exp() * (decay / d + 1.0 / (d * d));
                Ok(radial(dvdr, d, v))
            }
            PotentialSpec::Sum { members } => {
                let mut g = [0.0; 3];
                for m in members {
                    let gm = m.gradient_at(x)?;
                    for i in 0..3 {
                        g[i] += gm[i];
                    }
                }
                Ok(g)
            }
        }
    }

    /// `x·∇V(x)` with respect to the origin.
    pub fn x_dot_grad_at(&self, x: [f64; 3]) -> Result<f64> {
        // A Yukawa center is a genuine singularity of x·∇V.
        for m in self.members() {
            if let PotentialSpec::Yukawa { amplitude, center, .. } = m {
                if x == *center && *amplitude != 0.0 {
                    return Ok(-amplitude.signum() * f64::INFINITY);
                }
            }
        }
        let g = self.gradient_at(x)?;
        Ok(x[0] * g[0] + x[1] * g[1] + x[2] * g[2])
    }

    /// Whether `V_-` is nontrivial.
    pub fn has_negative_part(&self) -> bool {
        fn negative(m: &PotentialSpec) -> bool {
            match m {
            PotentialSpec::GaussianBump { amplitude, .. }
            | PotentialSpec::GaussianWell { amplitude, .. }
            | PotentialSpec::BallIndicator { amplitude, .. }
            | PotentialSpec::Yukawa { amplitude, .. } => *amplitude < 0.0,
            _ => false,
            }
        }
        let members = self.members();
        let n_neg = members.iter().filter(|m| negative(m)).count();
        if n_neg == 0 {
            return false;
        }
        if n_neg == members.len() {
            return true;
        }
        // mixed signs: sample near every negative member and on a lattice
        let scale = self.length_scale();
        let extent = self.center_extent() + 3.0 * scale;
        let k = 40;
        for ix in 0..=k {
            for iy in 0..=k {
                for iz in 0..=k {
                    let p = |i: usize| -extent + 2.0 * extent * i as f64 / k as f64;
                    if self.value_at([p(ix), p(iy), p(iz)]) < 0.0 {
                        return true;
                    }
                }
            }
        }
        members
            .iter()
            .filter(|m| negative(m))
            .filter_map(|m| m.center())
            .any(|c| self.value_at(c) < 0.0)
    }

    /// Samples `V` on the grid. A node sitting on a Yukawa center takes the
    /// average of that member over the ball with the cell's volume.
    pub fn evaluate(&self, grid: &Grid) -> RealField {
        let rho = cell_ball_radius(grid);
        RealField::from_fn(grid, |x| self.sample_value(x, rho))
    }

    fn sample_value(&self, x: [f64; 3], rho: f64) -> f64 {
        self.members()
            .iter()
            .map(|m| match m {
                PotentialSpec::Yukawa { amplitude, decay, center } if dist(x, *center).0 < 1e-12 * rho.max(1.0) => {
                    // (3 A / rho^3) ∫_0^rho r e^{-mu r} dr
                    let mr = decay * rho;
                    3.0 * amplitude / rho.powi(3) * (1.0 - (-mr).exp() * (1.0 + mr)) / (decay * decay)
                }
                other => other.value_at(x),
            })
            .sum()
    }

    fn sample_x_dot_grad(&self, x: [f64; 3], rho: f64) -> Result<f64> {
        let mut total = 0.0;
        for m in self.members() {
            total += match m {
                PotentialSpec::Yukawa { amplitude, decay, center } if dist(x, *center).0 < 1e-12 * rho.max(1.0) => {
                    // ball average of x·∇V = average of d V'(d): (3/rho^3) ∫_0^rho -A e^{-mu d}(mu d + 1) d dd
                    let mu = *decay;
                    let integral = quadrature::integrate(
                        |d| -amplitude * (-mu * d).exp() * (mu * d + 1.0) * d,
                        0.0,
                        rho,
                        QuadOptions::default(),
                    )?;
                    3.0 * integral / rho.powi(3)
                }
                other => other.x_dot_grad_at(x)?,
            };
        }
        Ok(total)
    }
}

/// Radius of the ball whose volume equals one grid cell.
pub fn cell_ball_radius(grid: &Grid) -> f64 {
    grid.spacing() * (3.0 / FOUR_PI).cbrt()
}

/// Pointwise `min(V, 0)`, sampled on the grid.
pub fn negative_part(spec: &PotentialSpec, grid: &Grid) -> RealField {
    spec.evaluate(grid).map(|v| v.min(0.0))
}

/// `x·∇V` sampled on the grid.
pub fn radial_derivative(spec: &PotentialSpec, grid: &Grid) -> Result<RealField> {
    if spec.has_ball() {
        return Err(Error::Unsupported(
            "radial_derivative of ball_indicator is distributional".into(),
        ));
    }
    let rho = cell_ball_radius(grid);
    let values = grid
        .positions()
        .map(|x| spec.sample_x_dot_grad(x, rho))
        .collect::<Result<Vec<_>>>()?;
    RealField::new(grid.clone(), values)
}

/// `∇V` sampled on the grid (three components).
pub fn gradient_fields(spec: &PotentialSpec, grid: &Grid) -> Result<[RealField; 3]> {
    let mut comps = [
        Vec::with_capacity(grid.len()),
        Vec::with_capacity(grid.len()),
        Vec::with_capacity(grid.len()),
    ];
    for x in grid.positions() {
        let g = spec.gradient_at(x)?;
        for i in 0..3 {
            comps[i].push(g[i]);
        }
    }
    let [a, b, c] = comps;
    Ok([
        RealField::new(grid.clone(), a)?,
        RealField::new(grid.clone(), b)?,
        RealField::new(grid.clone(), c)?,
    ])
}

/// Which function of the potential a Kato or Lebesgue norm is taken of.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Part {
    Full,
    Negative,
    Positive,
    /// `(x·∇V)_+`
    RadialDerivativePositive,
}

/// A scalar function derived from a potential spec.
#[derive(Clone, Copy, Debug)]
pub struct PotentialFn<'a> {
    pub spec: &'a PotentialSpec,
    pub part: Part,
}

impl<'a> PotentialFn<'a> {
    pub fn new(spec: &'a PotentialSpec, part: Part) -> Self {
        Self { spec, part }
    }

    pub fn value_at(&self, x: [f64; 3]) -> Result<f64> {
        Ok(match self.part {
            Part::Full => self.spec.value_at(x),
            Part::Negative => self.spec.value_at(x).min(0.0),
            Part::Positive => self.spec.value_at(x).max(0.0),
            Part::RadialDerivativePositive => self.spec.x_dot_grad_at(x)?.max(0.0),
        })
    }

    fn sample(&self, x: [f64; 3], rho: f64) -> Result<f64> {
        Ok(match self.part {
            Part::Full => self.spec.sample_value(x, rho),
            Part::Negative => self.spec.sample_value(x, rho).min(0.0),
            Part::Positive => self.spec.sample_value(x, rho).max(0.0),
            Part::RadialDerivativePositive => self.spec.sample_x_dot_grad(x, rho)?.max(0.0),
        })
    }

    /// Samples on a grid, with the same singular-cell rule as [`PotentialSpec::evaluate`].
    pub fn evaluate(&self, grid: &Grid) -> Result<RealField> {
        if self.part == Part::RadialDerivativePositive && self.spec.has_ball() {
            return Err(Error::Unsupported(
                "radial derivative of ball_indicator is distributional".into(),
            ));
        }
        let rho = cell_ball_radius(grid);
        let values = grid
            .positions()
            .map(|x| self.sample(x, rho))
            .collect::<Result<Vec<_>>>()?;
        RealField::new(grid.clone(), values)
    }

    fn radial_abs(&self, r: f64) -> Result<f64> {
        Ok(self.value_at([r, 0.0, 0.0])?.abs())
    }
}

/// Settings for Kato-norm and `L^{3/2}` evaluation.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct KatoQuadrature {
    pub rel_tol: f64,
    /// Samples of `s` before golden-section refinement (radial path).
    pub radial_samples: usize,
    /// Search interval `[0, search_factor * length_scale]` for `s`.
    pub search_factor: f64,
    /// Quadrature grid points per axis (non-radial path).
    pub grid_n: usize,
    /// Candidate lattice points per axis (non-radial path).
    pub lattice: usize,
}

impl Default for KatoQuadrature {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            radial_samples: 64,
            search_factor: 8.0,
            grid_n: 48,
            lattice: 9,
        }
    }
}

impl KatoQuadrature {
    fn quad_options(&self) -> QuadOptions {
        QuadOptions {
            rel_tol: self.rel_tol,
            abs_tol: 1e-15,
            max_intervals: 4000,
        }
    }
}

fn ball_breakpoints(spec: &PotentialSpec) -> Vec<f64> {
    let mut pts: Vec<f64> = spec
        .members()
        .iter()
        .filter_map(|m| match m {
            PotentialSpec::BallIndicator { radius, .. } => Some(*radius),
            _ => None,
        })
        .collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// `∫_a^b g` split at indicator radii, with `b = inf` allowed.
fn radial_integral(
    g: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    breaks: &[f64],
    opts: QuadOptions,
) -> Result<f64> {
    let mut pts = vec![a];
    pts.extend(breaks.iter().copied().filter(|&p| p > a && p < b));
    let mut total = 0.0;
    for w in pts.windows(2) {
        total += quadrature::integrate(g, w[0], w[1], opts)?;
    }
    let last = *pts.last().unwrap();
    total += if b.is_infinite() {
        quadrature::integrate_to_infinity(g, last, opts)?
    } else {
        quadrature::integrate(g, last, b, opts)?
    };
    Ok(total)
}

/// Newton potential of a radial `|f|` at distance `s` from the origin.
fn radial_newton(f: &PotentialFn<'_>, s: f64, breaks: &[f64], opts: QuadOptions) -> Result<f64> {
    let err = std::cell::Cell::new(None);
    let abs_f = |r: f64| match f.radial_abs(r) {
        Ok(v) => v,
        Err(e) => {
            err.set(Some(e.to_string()));
            0.0
        }
    };
    let inner = if s > 0.0 {
        radial_integral(&|r| abs_f(r) * r * r, 0.0, s, breaks, opts)? / s
    } else {
        0.0
    };
    let outer = radial_integral(&|r| abs_f(r) * r, s, f64::INFINITY, breaks, opts)?;
    if let Some(msg) = err.take() {
        return Err(Error::Unsupported(msg));
    }
    let total = FOUR_PI * (inner + outer);
    if total.is_finite() {
        Ok(total)
    } else {
        Err(Error::NonIntegrable(format!("Newton potential diverges at s = {s}")))
    }
}

fn kato_radial(f: &PotentialFn<'_>, quad: &KatoQuadrature) -> Result<f64> {
    let opts = quad.quad_options();
    let breaks = ball_breakpoints(f.spec);
    let s_max = quad.search_factor * f.spec.length_scale();
    let m = quad.radial_samples.max(4);
    let samples: Vec<(f64, f64)> = (0..=m)
        .map(|i| {
            let s = s_max * i as f64 / m as f64;
            radial_newton(f, s, &breaks, opts).map(|v| (s, v))
        })
        .collect::<Result<_>>()?;
    let (ibest, &(_, mut best)) = samples
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .unwrap();
    let lo = samples[ibest.saturating_sub(1)].0;
    let hi = samples[(ibest + 1).min(m)].0;
    if hi > lo {
        let (_, v) = quadrature::golden_section_max(
            |s| radial_newton(f, s, &breaks, opts).unwrap_or(f64::NEG_INFINITY),
            lo,
            hi,
            1e-9 * s_max,
        );
        best = best.max(v);
    }
    Ok(best)
}

/// Extent of the quadrature box for the non-radial path.
fn quadrature_grid(spec: &PotentialSpec, quad: &KatoQuadrature) -> Result<Grid> {
    let half = spec.center_extent() + 10.0 * spec.length_scale();
    let n = quad.grid_n.max(8) & !1;
    Grid::new(n, 2.0 * half)
}

fn kato_grid(f: &PotentialFn<'_>, quad: &KatoQuadrature) -> Result<f64> {
    let grid = quadrature_grid(f.spec, quad)?;
    let n = grid.n();
    let h = grid.spacing();
    let h3 = grid.cell_volume();
    let samples: Vec<f64> = f.evaluate(&grid)?.values().iter().map(|v| v.abs()).collect();
    // Singularity subtraction: f(y) - f(x) e^{-|y-x|^2/a^2} vanishes at y = x,
    // and the Gaussian's own Newton potential is 2π a^2.
    let a = 2.0 * h;
    let w = 2 * n - 1;
    let mut kernel = vec![0.0; w * w * w];
    let mut gauss_sum = 0.0;
    for dz in 0..w {
        for dy in 0..w {
            for dx in 0..w {
                let ox = dx as f64 - (n - 1) as f64;
                let oy = dy as f64 - (n - 1) as f64;
                let oz = dz as f64 - (n - 1) as f64;
                let r = h * (ox * ox + oy * oy + oz * oz).sqrt();
                if r > 0.0 {
                    kernel[dx + w * (dy + w * dz)] = h3 / r;
                    gauss_sum += (-(r * r) / (a * a)).exp() * h3 / r;
                }
            }
        }
    }
    let self_term = 2.0 * PI * a * a - gauss_sum;
    let newton = |p: [usize; 3]| -> f64 {
        let mut total = samples[grid.index(p[0], p[1], p[2])] * self_term;
        for qz in 0..n {
            let kz = qz + n - 1 - p[2];
            for qy in 0..n {
                let ky = qy + n - 1 - p[1];
                let row = &samples[grid.index(0, qy, qz)..grid.index(0, qy, qz) + n];
                let kbase = w * (ky + w * kz) + n - 1 - p[0];
                let krow = &kernel[kbase..kbase + n];
                total += row.iter().zip(krow).map(|(a, b)| a * b).sum::<f64>();
            }
        }
        total
    };

    // candidate lattice spanning the central half of the box
    let l = quad.lattice.max(2);
    let lattice_idx: Vec<usize> = (0..l)
        .map(|i| n / 4 + ((n / 2) * i) / (l - 1))
        .map(|i| i.min(n - 1))
        .collect();
    let mut best = (f64::NEG_INFINITY, [n / 2; 3]);
    for &iz in &lattice_idx {
        for &iy in &lattice_idx {
            for &ix in &lattice_idx {
                let v = newton([ix, iy, iz]);
                if v > best.0 {
                    best = (v, [ix, iy, iz]);
                }
            }
        }
    }
    // hill-climb over the 26 neighbours
    loop {
        let (val, p) = best;
        let mut improved = best;
        for dz in -1i64..=1 {
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    let q = [p[0] as i64 + dx, p[1] as i64 + dy, p[2] as i64 + dz];
                    if q.iter().any(|&c| c < 0 || c >= n as i64) || (dx, dy, dz) == (0, 0, 0) {
                        continue;
                    }
                    let q = [q[0] as usize, q[1] as usize, q[2] as usize];
                    let v = newton(q);
                    if v > improved.0 {
                        improved = (v, q);
                    }
                }
            }
        }
        if improved.0 > val {
            best = improved;
        } else {
            break;
        }
    }
    // parabolic correction for the off-node location of the maximum
    let (val, p) = best;
    let mut bump = 0.0;
    for axis in 0..3 {
        if p[axis] == 0 || p[axis] + 1 >= n {
            continue;
        }
        let mut lo = p;
        let mut hi = p;
        lo[axis] -= 1;
        hi[axis] += 1;
        let (vl, vh) = (newton(lo), newton(hi));
        let curv = 2.0 * val - vl - vh;
        if curv > 0.0 {
            bump += (vh - vl).powi(2) / (8.0 * curv);
        }
    }
    Ok(val + bump)
}

/// Global Kato norm of a derived function.
pub fn kato_norm_of(f: &PotentialFn<'_>, quad: &KatoQuadrature) -> Result<f64> {
    if f.spec.is_zero() {
        return Ok(0.0);
    }
    if f.spec.is_radial() {
        kato_radial(f, quad)
    } else {
        kato_grid(f, quad)
    }
}

pub fn kato_norm(spec: &PotentialSpec, quad: &KatoQuadrature) -> Result<f64> {
    kato_norm_of(&PotentialFn::new(spec, Part::Full), quad)
}

/// `||f||_{L^{3/2}}`.
pub fn l32_norm_of(f: &PotentialFn<'_>, quad: &KatoQuadrature) -> Result<f64> {
    if f.spec.is_zero() {
        return Ok(0.0);
    }
    if f.spec.is_radial() {
        let breaks = ball_breakpoints(f.spec);
        let integral = radial_integral(
            &|r| f.radial_abs(r).unwrap_or(0.0).powf(1.5) * r * r,
            0.0,
            f64::INFINITY,
            &breaks,
            quad.quad_options(),
        )?;
        Ok((FOUR_PI * integral).powf(2.0 / 3.0))
    } else {
        let grid = quadrature_grid(f.spec, quad)?;
        let field = f.evaluate(&grid)?;
        Ok(field.map(|v| v.abs().powf(1.5)).integral().powf(2.0 / 3.0))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub kato_norm: f64,
    pub kato_norm_negative: f64,
    pub kato_norm_positive: f64,
    pub l32_norm: f64,
    pub repulsive: bool,
    /// `||(x·∇V)_+||_K`; absent when `x·∇V` is only distributional.
    pub confining_kato: Option<f64>,
    pub passes_small_negative: bool,
    /// `||(x·∇V)_+||_K < 4π`.
    pub passes_confining_4pi: Option<bool>,
    /// `||(x·∇V)_+||_K < 8π`.
    pub passes_confining_8pi: Option<bool>,
    pub radial: bool,
}

/// Sign check `V >= 0`, `x·∇V <= 0` on sample points.
fn is_repulsive(spec: &PotentialSpec) -> bool {
    let scale = spec.length_scale();
    let extent = spec.center_extent() + 6.0 * scale;
    let k = 24;
    let mut points = Vec::new();
    for ix in 0..=k {
        for iy in 0..=k {
            for iz in 0..=k {
                let p = |i: usize| -extent + 2.0 * extent * (i as f64 + 0.37) / (k as f64 + 1.0);
                points.push([p(ix), p(iy), p(iz)]);
            }
        }
    }
    for i in 1..=400 {
        points.push([extent * i as f64 / 400.0, 0.0, 0.0]);
    }
    let balls_ok = spec.members().iter().all(|m| match m {
        // x·∇(A 1_{|x|<R}) = -A R δ(|x| - R) for an origin-centered ball
        PotentialSpec::BallIndicator { amplitude, center, .. } => {
            *amplitude >= 0.0 && *center == [0.0; 3]
        }
        _ => true,
    });
    if !balls_ok {
        return false;
    }
    let smooth: Vec<&PotentialSpec> = spec
        .members()
        .into_iter()
        .filter(|m| !matches!(m, PotentialSpec::BallIndicator { .. }))
        .collect();
    points.iter().all(|&x| {
        let v = spec.value_at(x);
        let xdv: f64 = smooth
            .iter()
            .map(|m| m.x_dot_grad_at(x).unwrap_or(0.0))
            .sum();
        v >= 0.0 && xdv <= 1e-14 * v.abs().max(1.0)
    })
}

pub fn admissibility(spec: &PotentialSpec, quad: &KatoQuadrature) -> Result<AdmissibilityReport> {
    spec.validate()?;
    let kato = kato_norm(spec, quad)?;
    let kato_neg = kato_norm_of(&PotentialFn::new(spec, Part::Negative), quad)?;
    let kato_pos = kato_norm_of(&PotentialFn::new(spec, Part::Positive), quad)?;
    let l32 = l32_norm_of(&PotentialFn::new(spec, Part::Full), quad)?;
    let confining = if spec.has_ball() {
        None
    } else {
        Some(kato_norm_of(
            &PotentialFn::new(spec, Part::RadialDerivativePositive),
            quad,
        )?)
    };
    Ok(AdmissibilityReport {
        kato_norm: kato,
        kato_norm_negative: kato_neg,
        kato_norm_positive: kato_pos,
        l32_norm: l32,
        repulsive: is_repulsive(spec),
        confining_kato: confining,
        passes_small_negative: kato_neg < FOUR_PI,
        passes_confining_4pi: confining.map(|c| c < FOUR_PI),
        passes_confining_8pi: confining.map(|c| c < 2.0 * FOUR_PI),
        radial: spec.is_radial(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad() -> KatoQuadrature {
        KatoQuadrature::default()
    }

    fn well(a: f64, s: f64) -> PotentialSpec {
        PotentialSpec::GaussianWell {
            amplitude: a,
            width: s,
            center: [0.0; 3],
        }
    }

    #[test]
    fn zero_potential() {
        let z = PotentialSpec::Zero;
        let g = Grid::new(8, 4.0).unwrap();
        assert!(z.evaluate(&g).values().iter().all(|&v| v == 0.0));
        assert!(radial_derivative(&z, &g).unwrap().values().iter().all(|&v| v == 0.0));
        assert!(negative_part(&z, &g).values().iter().all(|&v| v == 0.0));
        let r = admissibility(&z, &quad()).unwrap();
        assert_eq!(r.kato_norm, 0.0);
        assert_eq!(r.kato_norm_negative, 0.0);
        assert_eq!(r.l32_norm, 0.0);
        assert!(r.repulsive && r.passes_small_negative);
    }

    #[test]
    fn bump_peak_and_sign() {
        let bump = PotentialSpec::GaussianBump {
            amplitude: 1.0,
            width: 1.0,
            center: [0.0; 3],
        };
        assert_eq!(bump.value_at([0.0; 3]), 1.0);
        // x·∇V = -2|x|^2/σ^2 V
        let x = [0.3, -0.7, 1.1];
        let r2: f64 = x.iter().map(|c| c * c).sum();
        let expected = -2.0 * r2 * bump.value_at(x);
        assert!((bump.x_dot_grad_at(x).unwrap() - expected).abs() < 1e-15);
        assert!(admissibility(&bump, &quad()).unwrap().repulsive);
    }

    #[test]
    fn ball_kato_and_volume() {
        let ball = PotentialSpec::BallIndicator {
            amplitude: 1.0,
            radius: 1.0,
            center: [0.0; 3],
        };
        let k = kato_norm(&ball, &quad()).unwrap();
        assert!((k - 2.0 * PI).abs() < 1e-3 * 2.0 * PI, "{k}");
        let g = Grid::new(64, 4.0).unwrap();
        let vol = ball.evaluate(&g).integral();
        assert!((vol - FOUR_PI / 3.0).abs() < 0.02 * FOUR_PI / 3.0, "{vol}");
        let g = Grid::new(8, 4.0).unwrap();
        assert!(matches!(radial_derivative(&ball, &g), Err(Error::Unsupported(_))));
    }

    #[test]
    fn yukawa_kato() {
        let y = PotentialSpec::Yukawa {
            amplitude: 1.0,
            decay: 1.0,
            center: [0.0; 3],
        };
        let k = kato_norm(&y, &quad()).unwrap();
        assert!((k - FOUR_PI).abs() < 1e-3 * FOUR_PI, "{k}");
    }

    #[test]
    fn yukawa_singular_node_gets_cell_average() {
        let y = PotentialSpec::Yukawa {
            amplitude: 2.0,
            decay: 0.5,
            center: [0.0; 3],
        };
        let g = Grid::new(8, 4.0).unwrap();
        let v = y.evaluate(&g);
        assert!(v.values().iter().all(|x| x.is_finite()));
        let centre = v.values()[g.index(4, 4, 4)];
        // mean of 2 e^{-r/2}/r over a small ball is close to 3/rho for A = 2 and small mu rho
        let rho = cell_ball_radius(&g);
        assert!(centre > 2.0 && centre < 3.0 * 2.0 / (2.0 * rho) * 1.01, "{centre}");
        assert!(radial_derivative(&y, &g).unwrap().values().iter().all(|x| x.is_finite()));
    }

    #[test]
    fn gaussian_well_kato_closed_form() {
        // 4π ∫ |A| e^{-r^2/σ^2} r dr = 2π |A| σ^2, maximal at the center
        let w = well(-0.1, 1.0);
        let r = admissibility(&w, &quad()).unwrap();
        let expected = 2.0 * PI * 0.1;
        assert!((r.kato_norm_negative - expected).abs() < 1e-8);
        assert!(r.passes_small_negative);
        assert!(!r.repulsive);
        // ||V_-||_K = 5π
        let a = 5.0 * PI / (2.0 * PI);
        let deep = admissibility(&well(-a, 1.0), &quad()).unwrap();
        assert!((deep.kato_norm_negative - 5.0 * PI).abs() < 1e-6);
        assert!(!deep.passes_small_negative);
    }

    #[test]
    fn well_negative_part_is_itself() {
        let w = well(-1.0, 0.7);
        let g = Grid::new(8, 4.0).unwrap();
        assert_eq!(negative_part(&w, &g), w.evaluate(&g));
    }

    #[test]
    fn scaling_covariance_and_homogeneity() {
        // V_r = r^-2 V(x/r) keeps the Kato norm
        let base = PotentialSpec::Yukawa {
            amplitude: 0.8,
            decay: 1.3,
            center: [0.0; 3],
        };
        let k0 = kato_norm(&base, &quad()).unwrap();
        for r in [0.5, 2.0] {
            // r^-2 * A e^{-mu|x|/r}/(|x|/r) = (A/r) e^{-(mu/r)|x|}/|x|
            let scaled = PotentialSpec::Yukawa {
                amplitude: 0.8 / r,
                decay: 1.3 / r,
                center: [0.0; 3],
            };
            let k = kato_norm(&scaled, &quad()).unwrap();
            assert!((k - k0).abs() < 1e-6 * k0, "{k} vs {k0}");
        }
        let bump = |a: f64| PotentialSpec::GaussianBump {
            amplitude: a,
            width: 1.4,
            center: [0.0; 3],
        };
        let k1 = kato_norm(&bump(1.0), &quad()).unwrap();
        let k3 = kato_norm(&bump(3.5), &quad()).unwrap();
        assert!((k3 - 3.5 * k1).abs() < 1e-9 * k3);
    }

    #[test]
    fn non_radial_grid_path_matches_radial_value() {
        let shifted = PotentialSpec::GaussianBump {
            amplitude: 1.0,
            width: 1.0,
            center: [0.5, -0.25, 0.0],
        };
        let k = kato_norm(&shifted, &quad()).unwrap();
        let expected = 2.0 * PI;
        assert!((k - expected).abs() < 5e-3 * expected, "{k}");
    }

    #[test]
    fn negative_part_kato_is_smaller() {
        let mixed = PotentialSpec::Sum {
            members: vec![
                PotentialSpec::GaussianBump {
                    amplitude: 1.0,
                    width: 2.0,
                    center: [0.0; 3],
                },
                well(-1.5, 0.5),
            ],
        };
        assert!(mixed.has_negative_part());
        let k = kato_norm(&mixed, &quad()).unwrap();
        let kn = kato_norm_of(&PotentialFn::new(&mixed, Part::Negative), &quad()).unwrap();
        assert!(kn <= k);
    }

    #[test]
    fn validation_lists_every_problem() {
        let bad = PotentialSpec::Sum {
            members: vec![well(0.5, -1.0), PotentialSpec::Yukawa {
                amplitude: 1.0,
                decay: 0.0,
                center: [0.0; 3],
            }],
        };
        assert_eq!(bad.violations().len(), 3);
    }
}
