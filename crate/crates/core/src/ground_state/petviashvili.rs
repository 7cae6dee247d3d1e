//! Fixed-frequency solutions of `ℋQ + ω^2 Q - Q^3 = 0` by Petviashvili
//! iteration. Unlike the maximizer, `ω` is prescribed, so the potential term
//! in the Pohozaev identities does not vanish.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::GroundStateResult;
use crate::error::{Error, Result};
use crate::forms::{apply_hamiltonian, cubic, inner_re};
use crate::grid::{Field, Grid, RealField};
use crate::potentials::PotentialSpec;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FrequencyOptions {
    pub max_iterations: usize,
    /// Relative residual `||MQ - Q^3|| / (||MQ|| + ||Q^3||)`.
    pub tol: f64,
    /// Stabilizing exponent; `3/2` for the cubic term.
    pub gamma: f64,
    pub cg_tol: f64,
    pub cg_max_iterations: usize,
}

impl Default for FrequencyOptions {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            tol: 1e-10,
            gamma: 1.5,
            cg_tol: 1e-12,
            cg_max_iterations: 500,
        }
    }
}

struct Operator<'a> {
    v: &'a RealField,
    w2: f64,
}

impl Operator<'_> {
    fn apply(&self, u: &Field) -> Result<Field> {
        Ok(apply_hamiltonian(u, self.v)?.axpy(self.w2, u))
    }

    /// `(ω^2 - Δ)^{-1}`
    fn precondition(&self, f: &Field) -> Field {
        let mut spec = f.transform_forward();
        let grid = f.grid();
        for (z, k) in spec.coeffs_mut().iter_mut().zip(grid.k_squared()) {
            *z /= self.w2 + k;
        }
        spec.transform_inverse()
    }

    /// Preconditioned conjugate gradients for `M x = b`.
    fn solve(&self, b: &Field, x0: &Field, tol: f64, max_it: usize) -> Result<Field> {
        let mut x = x0.clone();
        let mut r = b.sub(&self.apply(&x)?);
        let mut z = self.precondition(&r);
        let mut p = z.clone();
        let mut rz = inner_re(&r, &z);
        let bnorm = b.mass().sqrt();
        for _ in 0..max_it {
            if r.mass().sqrt() <= tol * bnorm {
                return Ok(x);
            }
            let mp = self.apply(&p)?;
            let pmp = inner_re(&p, &mp);
            if !(pmp > 0.0) {
                return Err(Error::NotCoercive(pmp));
            }
            let alpha = rz / pmp;
            x = x.axpy(alpha, &p);
            r = r.axpy(-alpha, &mp);
            z = self.precondition(&r);
            let rz_new = inner_re(&r, &z);
            p = z.axpy(rz_new / rz, &p);
            rz = rz_new;
        }
        if r.mass().sqrt() <= 1e3 * tol * bnorm {
            Ok(x)
        } else {
            Err(Error::NotConverged {
                iterations: max_it,
                last_residual: r.mass().sqrt() / bnorm,
                residual_history: Vec::new(),
            })
        }
    }
}

pub fn solve_at_frequency(
    spec: &PotentialSpec,
    grid: &Grid,
    omega: f64,
    init: &Field,
    opts: &FrequencyOptions,
) -> Result<GroundStateResult> {
    spec.validate()?;
    grid.check_same(init.grid())?;
    if !(omega > 0.0) {
        return Err(Error::InvalidArgument(format!("omega = {omega} must be positive")));
    }
    let v = spec.evaluate(grid);
    let op = Operator {
        v: &v,
        w2: omega * omega,
    };
    let mut q = Field::new(
        grid.clone(),
        init.values().iter().map(|z| Complex64::new(z.re, 0.0)).collect(),
    )?;
    let mut history = Vec::new();
    for it in 0..opts.max_iterations {
        let mq = op.apply(&q)?;
        let q3 = cubic(&q);
        let rel = mq.sub(&q3).mass().sqrt() / (mq.mass().sqrt() + q3.mass().sqrt());
        history.push(rel);
        if !rel.is_finite() {
            return Err(Error::NonFinite);
        }
        if rel < opts.tol {
            let mut res = GroundStateResult::certify(q, &v, omega, it)?;
            res.residual_history = history;
            return Ok(res);
        }
        let stab = inner_re(&q, &mq) / inner_re(&q, &q3);
        let next = op.solve(&q3, &q, opts.cg_tol, opts.cg_max_iterations)?;
        q = next.scaled(Complex64::new(stab.powf(opts.gamma), 0.0));
    }
    Err(Error::NotConverged {
        iterations: opts.max_iterations,
        last_residual: *history.last().unwrap_or(&f64::NAN),
        residual_history: history,
    })
}
