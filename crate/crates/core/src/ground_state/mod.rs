//! Ground states: the free profile `Q` (`ΔQ - Q + Q^3 = 0`) and the
//! maximizer of `W_V` rescaled to solve `ℋ𝒬 + ω^2 𝒬 - 𝒬^3 = 0`.

mod maximize;
mod ode;
mod petviashvili;
mod radial;

pub use maximize::{maximize_wv, MaximizeOptions};
pub use ode::{Dopri, Tolerances};
pub use petviashvili::{solve_at_frequency, FrequencyOptions};
pub use radial::{RadialOptions, RadialProfile};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::{apply_hamiltonian, cubic, form_values, FormValues};
use crate::grid::{Field, Grid, RealField};
use crate::potentials::{radial_derivative, PotentialSpec};

#[derive(Clone, Debug, Serialize)]
pub struct GroundStateResult {
    #[serde(skip)]
    pub profile: Field,
    pub omega: f64,
    pub norms: FormValues,
    /// `|h_form - 3 ω^2 mass| / h_form`
    pub pohozaev_residual_1: f64,
    /// `|l4_fourth - 4 ω^2 mass| / l4_fourth`
    pub pohozaev_residual_2: f64,
    pub elliptic_residual: f64,
    pub wv_value: f64,
    /// Share of `||profile||^2` in the top third of the spectrum.
    pub top_band_fraction: f64,
    pub iterations: usize,
    /// Relative Euler–Lagrange residual per iteration (empty for the free state).
    pub residual_history: Vec<f64>,
    /// `W_V` per accepted iterate (empty for the free state).
    pub wv_history: Vec<f64>,
}

impl GroundStateResult {
    /// Norms, residuals and `W_V` of a solution candidate at frequency `omega`.
    pub fn certify(profile: Field, v: &RealField, omega: f64, iterations: usize) -> Result<Self> {
        let norms = form_values(&profile, v)?;
        let w2 = omega * omega;
        Ok(Self {
            pohozaev_residual_1: (norms.h_form - 3.0 * w2 * norms.mass).abs() / norms.h_form,
            pohozaev_residual_2: (norms.l4_fourth - 4.0 * w2 * norms.mass).abs() / norms.l4_fourth,
            elliptic_residual: elliptic_residual(&profile, v, omega)?,
            wv_value: norms.wv()?,
            top_band_fraction: profile.transform_forward().top_band_fraction(),
            omega,
            norms,
            profile,
            iterations,
            residual_history: Vec::new(),
            wv_history: Vec::new(),
        })
    }
}

/// `||ℋQ + ω^2 Q - |Q|^2 Q|| / (||ℋQ|| + ω^2 ||Q|| + |||Q|^2 Q||)`.
pub fn elliptic_residual(q: &Field, v: &RealField, omega: f64) -> Result<f64> {
    let hq = apply_hamiltonian(q, v)?;
    let q3 = cubic(q);
    let w2 = omega * omega;
    let r = hq.axpy(w2, q).axpy(-1.0, &q3);
    let scale = hq.mass().sqrt() + w2 * q.mass().sqrt() + q3.mass().sqrt();
    Ok(r.mass().sqrt() / scale)
}

/// Free ground state on a grid, centered at the origin.
pub fn solve_free_ground_state(
    grid: &Grid,
    opts: &RadialOptions,
) -> Result<(RadialProfile, GroundStateResult)> {
    let radial = RadialProfile::solve(opts)?;
    let (r1, r2) = radial.pohozaev_residuals();
    if r1.max(r2) > opts.tol {
        return Err(Error::NotConverged {
            iterations: radial.bisection_steps,
            last_residual: r1.max(r2),
            residual_history: vec![r1, r2],
        });
    }
    let q = radial.on_grid(grid, [0.0; 3], 1.0);
    let result = GroundStateResult::certify(q, &RealField::zeros(grid), 1.0, radial.bisection_steps)?;
    Ok((radial, result))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtraTerm {
    /// `∫ (4V + 2 x·∇V) |Q|^2`
    pub extra: f64,
    /// `|h_form - 3 ω^2 mass - extra| / h_form`
    pub residual_1: f64,
    /// `|l4_fourth - 4 ω^2 mass - extra| / l4_fourth`
    pub residual_2: f64,
}

/// Pohozaev identities for a solution at frequency `omega`, including the
/// potential's contribution.
pub fn pohozaev_extra_term(q: &Field, omega: f64, spec: &PotentialSpec) -> Result<ExtraTerm> {
    let grid = q.grid();
    let v = spec.evaluate(grid);
    let xdv = radial_derivative(spec, grid)?;
    let weight = RealField::new(
        grid.clone(),
        v.values().iter().zip(xdv.values()).map(|(a, b)| 4.0 * a + 2.0 * b).collect(),
    )?;
    let extra = weight.weighted_mass(q);
    let norms = form_values(q, &v)?;
    let w2 = omega * omega;
    Ok(ExtraTerm {
        extra,
        residual_1: (norms.h_form - 3.0 * w2 * norms.mass - extra).abs() / norms.h_form,
        residual_2: (norms.l4_fourth - 4.0 * w2 * norms.mass - extra).abs() / norms.l4_fourth,
    })
}
