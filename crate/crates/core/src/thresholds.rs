//! Mass-energy threshold `ME`, critical product `α` and sharp constant `c_GN`,
//! and the classification of initial data against them.
//!
//! With `M = ||Q||^2`, `H = ||ℋ^{1/2}Q||^2`, `P = ||Q||_4^4` of the generating
//! ground state: `ME = M (H/2 - P/4)`, `α = sqrt(M H)`, `c_GN = P / (M^{1/2} H^{3/2})`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::{form_values, FormValues};
use crate::grid::{Field, RealField};
use crate::ground_state::{GroundStateResult, RadialProfile};
use crate::potentials::PotentialSpec;

/// Relative slack for every threshold comparison.
pub const BOUNDARY_SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdSource {
    Free,
    Perturbed,
}

/// Which ground state generates the thresholds.
#[derive(Clone, Copy, Debug)]
pub enum GroundStateInput<'a> {
    Free(&'a RadialProfile),
    Perturbed(&'a GroundStateResult),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Consistency {
    /// `|ME - α^2/6|`
    pub me_alpha: f64,
    /// `|c_GN - 4/(3α)|`
    pub cgn_alpha: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub me: f64,
    pub alpha: f64,
    pub c_gn: f64,
    pub source: ThresholdSource,
    pub consistency: Consistency,
}

impl ThresholdReport {
    fn from_norms(mass: f64, h_form: f64, l4_fourth: f64, source: ThresholdSource) -> Result<Self> {
        if !(mass > 0.0 && h_form > 0.0 && l4_fourth > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "ground-state norms must be positive (mass {mass}, h_form {h_form}, l4 {l4_fourth})"
            )));
        }
        let me = mass * (0.5 * h_form - 0.25 * l4_fourth);
        let alpha = (mass * h_form).sqrt();
        let c_gn = l4_fourth / (mass.sqrt() * h_form.powf(1.5));
        if me <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "ground-state norms give ME = {me}; not a ground state"
            )));
        }
        Ok(Self {
            me,
            alpha,
            c_gn,
            source,
            consistency: Consistency {
                me_alpha: (me - alpha * alpha / 6.0).abs(),
                cgn_alpha: (c_gn - 4.0 / (3.0 * alpha)).abs(),
            },
        })
    }

    /// `f(x) = x^2/2 - x^3/(3α)`
    pub fn threshold_function(&self, x: f64) -> f64 {
        x * x / 2.0 - x.powi(3) / (3.0 * self.alpha)
    }
}

/// Thresholds from the free `Q` when `V_- = 0`, from `𝒬` otherwise.
pub fn compute_thresholds(spec: &PotentialSpec, input: GroundStateInput<'_>) -> Result<ThresholdReport> {
    let attractive = spec.has_negative_part();
    match input {
        GroundStateInput::Free(q) if !attractive => {
            ThresholdReport::from_norms(q.mass, q.grad_sq, q.l4_fourth, ThresholdSource::Free)
        }
        GroundStateInput::Perturbed(gs) if attractive => ThresholdReport::from_norms(
            gs.norms.mass,
            gs.norms.h_form,
            gs.norms.l4_fourth,
            ThresholdSource::Perturbed,
        ),
        GroundStateInput::Free(_) => Err(Error::MissingGroundState(
            "potential has a negative part; thresholds need the maximizer of W_V".into(),
        )),
        GroundStateInput::Perturbed(_) => Err(Error::MissingGroundState(
            "potential has no negative part; thresholds come from the free Q".into(),
        )),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    BelowGlobal,
    AboveLine,
    Indeterminate,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub mass: f64,
    /// `E_V[u0]`
    pub energy: f64,
    /// `E_0[u0]`, the energy without the potential.
    pub free_energy: f64,
    pub mass_energy: f64,
    /// `||u0|| ||ℋ^{1/2} u0||`
    pub g0: f64,
    pub verdict: Verdict,
}

fn below(a: f64, b: f64) -> bool {
    a < b - BOUNDARY_SLACK * b.abs()
}

fn above(a: f64, b: f64) -> bool {
    a > b + BOUNDARY_SLACK * b.abs()
}

/// Classification from precomputed norms of `u0`.
pub fn classify_norms(norms: &FormValues, report: &ThresholdReport) -> Classification {
    let energy = 0.5 * norms.h_form - 0.25 * norms.l4_fourth;
    let free_energy = 0.5 * norms.grad_sq - 0.25 * norms.l4_fourth;
    let mass_energy = norms.mass * energy;
    let g0 = (norms.mass * norms.h_form.max(0.0)).sqrt();
    let verdict = if !below(mass_energy, report.me) {
        Verdict::Indeterminate
    } else if below(g0, report.alpha) {
        Verdict::BelowGlobal
    } else if above(g0, report.alpha) {
        Verdict::AboveLine
    } else {
        Verdict::Indeterminate
    };
    Classification {
        mass: norms.mass,
        energy,
        free_energy,
        mass_energy,
        g0,
        verdict,
    }
}

pub fn classify(u0: &Field, v: &RealField, report: &ThresholdReport) -> Result<Classification> {
    Ok(classify_norms(&form_values(u0, v)?, report))
}

/// `2E <= h_form <= 6E`, each side with relative slack.
pub fn comparability_bounds(form: &FormValues, energy: f64) -> bool {
    let slack = BOUNDARY_SLACK * form.h_form.abs().max(energy.abs());
    2.0 * energy <= form.h_form + slack && form.h_form <= 6.0 * energy + slack
}
