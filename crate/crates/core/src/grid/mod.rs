//! Periodic box discretization of R^3.
//!
//! Grid nodes sit at `x_j = -L/2 + j h`, `j = 0..n`, so the origin is the
//! node `j = n/2` on every axis. Fields are stored x-fastest:
//! `index = ix + n * (iy + n * iz)`.
//!
//! Spectral coefficients use the Fourier-series normalization
//! `c_k = n^-3 sum_j u_j exp(-i k.x_j)`, so a constant field `c` has
//! coefficient `c` at `k = 0` and Parseval reads
//! `sum |u_j|^2 h^3 = L^3 sum |c_k|^2`.

mod fft;
pub mod snapshot;

use std::sync::{Arc, OnceLock};

use num_complex::Complex64;

pub use fft::Fft3;

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct Grid {
    n: usize,
    box_length: f64,
    spacing: f64,
    wavenumbers: Arc<[f64]>,
    k_squared: Arc<OnceLock<Vec<f64>>>,
    fft: Arc<Fft3>,
}

impl Grid {
    pub fn new(n: usize, box_length: f64) -> Result<Self> {
        if n < 8 || !n.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!("n = {n} must be even and >= 8")));
        }
        if !(box_length.is_finite() && box_length > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "box_length = {box_length} must be positive and finite"
            )));
        }
        let spacing = box_length / n as f64;
        let wavenumbers: Vec<f64> = (0..n)
            .map(|m| {
                let m = if m < n / 2 { m as f64 } else { m as f64 - n as f64 };
                2.0 * std::f64::consts::PI * m / box_length
            })
            .collect();
        Ok(Self {
            n,
            box_length,
            spacing,
            wavenumbers: wavenumbers.into(),
            k_squared: Arc::new(OnceLock::new()),
            fft: Arc::new(Fft3::new(n)),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(3)
    }

    pub fn volume(&self) -> f64 {
        self.box_length.powi(3)
    }

    /// Total number of nodes, `n^3`.
    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Per-axis wavenumbers in FFT order (`0, 1, .., n/2-1, -n/2, .., -1` times `2 pi / L`).
    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    /// Largest resolved wavenumber `pi / h`.
    pub fn k_max(&self) -> f64 {
        std::f64::consts::PI / self.spacing
    }

    pub fn coordinate(&self, i: usize) -> f64 {
        -0.5 * self.box_length + i as f64 * self.spacing
    }

    pub fn index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        ix + self.n * (iy + self.n * iz)
    }

    pub fn unravel(&self, idx: usize) -> [usize; 3] {
        let n = self.n;
        [idx % n, (idx / n) % n, idx / (n * n)]
    }

    pub fn position(&self, idx: usize) -> [f64; 3] {
        let [ix, iy, iz] = self.unravel(idx);
        [self.coordinate(ix), self.coordinate(iy), self.coordinate(iz)]
    }

    /// Node positions in storage order.
    pub fn positions(&self) -> impl Iterator<Item = [f64; 3]> + '_ {
        (0..self.len()).map(move |idx| self.position(idx))
    }

    /// Wavevector of a coefficient index, in storage order.
    pub fn wavevector(&self, idx: usize) -> [f64; 3] {
        let [ix, iy, iz] = self.unravel(idx);
        [
            self.wavenumbers[ix],
            self.wavenumbers[iy],
            self.wavenumbers[iz],
        ]
    }

    /// `|k|^2` for every coefficient in storage order (computed once per grid).
    pub fn k_squared(&self) -> &[f64] {
        self.k_squared.get_or_init(|| {
            let k = &self.wavenumbers;
            let n = self.n;
            let mut out = Vec::with_capacity(self.len());
            for iz in 0..n {
                for iy in 0..n {
                    let kyz = k[iy] * k[iy] + k[iz] * k[iz];
                    for kx in k.iter() {
                        out.push(kx * kx + kyz);
                    }
                }
            }
            out
        })
    }

    /// Two-thirds rule: true for modes kept (|m| < n/3 on every axis).
    pub fn dealias_mask(&self) -> Vec<bool> {
        let n = self.n;
        let cut = n as f64 / 3.0;
        let keep: Vec<bool> = (0..n)
            .map(|m| {
                let m = if m < n / 2 { m as f64 } else { n as f64 - m as f64 };
                m < cut
            })
            .collect();
        let mut out = Vec::with_capacity(self.len());
        for iz in 0..n {
            for iy in 0..n {
                for ix in 0..n {
                    out.push(keep[ix] && keep[iy] && keep[iz]);
                }
            }
        }
        out
    }

    /// Same discretization (n and box length).
    pub fn same_as(&self, other: &Grid) -> bool {
        self.n == other.n && self.box_length == other.box_length
    }

    pub(crate) fn check_same(&self, other: &Grid) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch {
                expected_n: self.n,
                expected_length: self.box_length,
                actual_n: other.n,
                actual_length: other.box_length,
            })
        }
    }

    pub(crate) fn fft(&self) -> &Fft3 {
        &self.fft
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.same_as(other)
    }
}

/// Complex samples on a grid.
#[derive(Clone, Debug)]
pub struct Field {
    grid: Grid,
    values: Vec<Complex64>,
}

/// Fourier-series coefficients of a [`Field`].
#[derive(Clone, Debug)]
pub struct SpectralField {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

/// Real samples on a grid (potentials, cutoffs, derived densities).
#[derive(Clone, Debug, PartialEq)]
pub struct RealField {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::NonFinite);
        }
        Ok(Self { grid, values })
    }

    pub(crate) fn from_raw(grid: Grid, values: Vec<Complex64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self {
            values: vec![Complex64::default(); grid.len()],
            grid: grid.clone(),
        }
    }

    pub fn from_fn(grid: &Grid, mut f: impl FnMut([f64; 3]) -> Complex64) -> Self {
        let values = grid.positions().map(&mut f).collect();
        Self {
            grid: grid.clone(),
            values,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values
            .iter()
            .all(|v| v.re.is_finite() && v.im.is_finite())
    }

    pub fn scaled(&self, factor: Complex64) -> Field {
        Field::from_raw(
            self.grid.clone(),
            self.values.iter().map(|v| v * factor).collect(),
        )
    }

    pub fn scale_mut(&mut self, factor: f64) {
        for v in &mut self.values {
            *v *= factor;
        }
    }

    /// `self + a * other`.
    pub fn axpy(&self, a: f64, other: &Field) -> Field {
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| x + y * a)
            .collect();
        Field::from_raw(self.grid.clone(), values)
    }

    pub fn sub(&self, other: &Field) -> Field {
        self.axpy(-1.0, other)
    }

    pub fn transform_forward(&self) -> SpectralField {
        let mut coeffs = self.values.clone();
        self.grid.fft().forward(&mut coeffs);
        let scale = 1.0 / self.grid.len() as f64;
        for c in &mut coeffs {
            *c *= scale;
        }
        SpectralField {
            grid: self.grid.clone(),
            coeffs,
        }
    }

    /// `(sum |u|^p h^3)^(1/p)` for p in {2, 4, 6}, max modulus for p = inf.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        if p == f64::INFINITY {
            return Ok(self.sup_norm());
        }
        if p == 2.0 || p == 4.0 || p == 6.0 {
            return Ok(self.lebesgue_norm(p));
        }
        Err(Error::UnsupportedExponent(p))
    }

    /// Any finite exponent `p >= 1`; used by the space-time norm proxy.
    pub fn lebesgue_norm(&self, p: f64) -> f64 {
        let h3 = self.grid.cell_volume();
        let sum: f64 = if p == 2.0 {
            self.values.iter().map(|v| v.norm_sqr()).sum()
        } else if p == 4.0 {
            self.values.iter().map(|v| v.norm_sqr().powi(2)).sum()
        } else {
            self.values.iter().map(|v| v.norm().powf(p)).sum()
        };
        (sum * h3).powf(1.0 / p)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `||u||_{L^2}^2`.
    pub fn mass(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.cell_volume()
    }

    /// `||u||_{L^4}^4`.
    pub fn l4_fourth(&self) -> f64 {
        self.values
            .iter()
            .map(|v| v.norm_sqr().powi(2))
            .sum::<f64>()
            * self.grid.cell_volume()
    }

    /// `sum |k|^2 |c_k|^2 L^3`, the spectral value of `int |grad u|^2`.
    pub fn grad_norm_sq(&self) -> f64 {
        self.transform_forward().grad_norm_sq()
    }

    /// `int conj(self) other dx`.
    pub fn inner(&self, other: &Field) -> Complex64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            * self.grid.cell_volume()
    }

    pub fn laplacian(&self) -> Field {
        self.transform_forward().laplacian().transform_inverse()
    }

    /// Spectral gradient; the Nyquist mode is dropped from first derivatives.
    pub fn gradient(&self) -> [Field; 3] {
        let spec = self.transform_forward();
        [0, 1, 2].map(|axis| spec.derivative(axis).transform_inverse())
    }

    /// Cyclic shift by whole cells.
    pub fn translate_cells(&self, shift: [isize; 3]) -> Field {
        let n = self.grid.n as isize;
        let mut out = vec![Complex64::default(); self.values.len()];
        for (idx, v) in self.values.iter().enumerate() {
            let [ix, iy, iz] = self.grid.unravel(idx);
            let jx = (ix as isize + shift[0]).rem_euclid(n) as usize;
            let jy = (iy as isize + shift[1]).rem_euclid(n) as usize;
            let jz = (iz as isize + shift[2]).rem_euclid(n) as usize;
            out[self.grid.index(jx, jy, jz)] = *v;
        }
        Field::from_raw(self.grid.clone(), out)
    }

    pub fn modulus_squared(&self) -> RealField {
        RealField::from_raw(
            self.grid.clone(),
            self.values.iter().map(|v| v.norm_sqr()).collect(),
        )
    }

    pub fn real_part(&self) -> RealField {
        RealField::from_raw(self.grid.clone(), self.values.iter().map(|v| v.re).collect())
    }
}

impl SpectralField {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn from_coeffs(grid: &Grid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} coefficients, got {}",
                grid.len(),
                coeffs.len()
            )));
        }
        Ok(Self {
            grid: grid.clone(),
            coeffs,
        })
    }

    pub fn transform_inverse(&self) -> Field {
        let mut values = self.coeffs.clone();
        self.grid.fft().inverse(&mut values);
        Field::from_raw(self.grid.clone(), values)
    }

    /// `L^3 sum |c_k|^2`, equal to the grid mass by Parseval.
    pub fn mass(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.grid.volume()
    }

    pub fn grad_norm_sq(&self) -> f64 {
        let k2 = self.grid.k_squared();
        self.coeffs
            .iter()
            .zip(k2)
            .map(|(c, k)| c.norm_sqr() * k)
            .sum::<f64>()
            * self.grid.volume()
    }

    pub fn laplacian(&self) -> SpectralField {
        let k2 = self.grid.k_squared();
        let coeffs = self.coeffs.iter().zip(k2).map(|(c, k)| -c * k).collect();
        SpectralField {
            grid: self.grid.clone(),
            coeffs,
        }
    }

    /// `d/dx_axis`, with the Nyquist wavenumber zeroed.
    pub fn derivative(&self, axis: usize) -> SpectralField {
        let n = self.grid.n;
        let k = self.grid.wavenumbers();
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(idx, c)| {
                let m = self.grid.unravel(idx)[axis];
                if m == n / 2 {
                    Complex64::default()
                } else {
                    c * Complex64::new(0.0, k[m])
                }
            })
            .collect();
        SpectralField {
            grid: self.grid.clone(),
            coeffs,
        }
    }

    /// Fraction of the spectral mass carried by modes outside the two-thirds band.
    pub fn top_band_fraction(&self) -> f64 {
        let mask = self.grid.dealias_mask();
        let (mut top, mut total) = (0.0, 0.0);
        for (c, keep) in self.coeffs.iter().zip(&mask) {
            let e = c.norm_sqr();
            total += e;
            if !keep {
                top += e;
            }
        }
        if total > 0.0 {
            top / total
        } else {
            0.0
        }
    }
}

impl RealField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { grid, values })
    }

    pub(crate) fn from_raw(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self {
            values: vec![0.0; grid.len()],
            grid: grid.clone(),
        }
    }

    pub fn from_fn(grid: &Grid, mut f: impl FnMut([f64; 3]) -> f64) -> Self {
        let values = grid.positions().map(&mut f).collect();
        Self {
            grid: grid.clone(),
            values,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Grid quadrature `sum f h^3`.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    /// `int f |u|^2 dx`.
    pub fn weighted_mass(&self, u: &Field) -> f64 {
        self.values
            .iter()
            .zip(u.values())
            .map(|(f, v)| f * v.norm_sqr())
            .sum::<f64>()
            * self.grid.cell_volume()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> RealField {
        RealField::from_raw(self.grid.clone(), self.values.iter().map(|v| f(*v)).collect())
    }

    pub fn to_field(&self) -> Field {
        Field::from_raw(
            self.grid.clone(),
            self.values.iter().map(|v| Complex64::new(*v, 0.0)).collect(),
        )
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}
