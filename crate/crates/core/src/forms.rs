//! Quadratic form of `ℋ = -Δ + V`, the Weinstein-type functional
//! `W_V(u) = ||u||_4^4 / (||u||_2 ||ℋ^{1/2} u||_2^3)`, and two standalone
//! inequality checks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, RealField};
use crate::potentials::FOUR_PI;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FormValues {
    pub mass: f64,
    /// `∫ |∇u|^2 + V |u|^2`
    pub h_form: f64,
    pub grad_sq: f64,
    pub l4_fourth: f64,
    pub potential_term: f64,
}

impl FormValues {
    /// `W_V` from the stored norms.
    pub fn wv(&self) -> Result<f64> {
        if self.mass <= 0.0 {
            return Err(Error::InvalidArgument("W_V of the zero field".into()));
        }
        if self.h_form <= 0.0 {
            return Err(Error::NotCoercive(self.h_form));
        }
        Ok(self.l4_fourth / (self.mass.sqrt() * self.h_form.powf(1.5)))
    }
}

pub fn form_values(u: &Field, v: &RealField) -> Result<FormValues> {
    u.grid().check_same(v.grid())?;
    let grad_sq = u.grad_norm_sq();
    let potential_term = v.weighted_mass(u);
    Ok(FormValues {
        mass: u.mass(),
        h_form: grad_sq + potential_term,
        grad_sq,
        l4_fourth: u.l4_fourth(),
        potential_term,
    })
}

pub fn wv(u: &Field, v: &RealField) -> Result<f64> {
    form_values(u, v)?.wv()
}

/// `ℋu = -Δu + V u`.
pub fn apply_hamiltonian(u: &Field, v: &RealField) -> Result<Field> {
    u.grid().check_same(v.grid())?;
    let mut out = u.laplacian();
    for ((o, x), p) in out.values_mut().iter_mut().zip(u.values()).zip(v.values()) {
        *o = -*o + x * p;
    }
    Ok(out)
}

/// Pointwise `|u|^2 u`.
pub fn cubic(u: &Field) -> Field {
    let values = u.values().iter().map(|z| z * z.norm_sqr()).collect();
    Field::new(u.grid().clone(), values).expect("finite input gives finite cube")
}

/// Real `L^2` inner product `Re ∫ conj(a) b`.
pub fn inner_re(a: &Field, b: &Field) -> f64 {
    a.inner(b).re
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// `∫|V||u|^2 <= (||V||_K / 4π) ||∇u||^2`, with relative slack 1e-9.
pub fn kato_positivity_check(u: &Field, v: &RealField, kato_v: f64) -> Result<InequalityCheck> {
    u.grid().check_same(v.grid())?;
    let lhs = v.map(f64::abs).weighted_mass(u);
    let rhs = kato_v / FOUR_PI * u.grad_norm_sq();
    Ok(InequalityCheck {
        lhs,
        rhs,
        holds: lhs <= rhs * (1.0 + 1e-9),
    })
}

/// Lower and upper bounds for `h_form` in terms of `grad_sq`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sandwich {
    pub lower: f64,
    pub upper: f64,
    pub holds: bool,
}

/// `(1 - ||V_-||_K/4π) grad_sq <= h_form <= (1 + ||V||_K/4π) grad_sq`.
pub fn sandwich(values: &FormValues, kato_negative: f64, kato: f64) -> Sandwich {
    let lower = (1.0 - kato_negative / FOUR_PI) * values.grad_sq;
    let upper = (1.0 + kato / FOUR_PI) * values.grad_sq;
    let slack = 1e-9 * values.grad_sq.max(f64::MIN_POSITIVE);
    Sandwich {
        lower,
        upper,
        holds: values.h_form >= lower - slack && values.h_form <= upper + slack,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
    pub applicable: bool,
}

/// Splitting bound for the ratio `c / (a^{1/2} b^{3/2})` over two pieces.
///
/// `lhs = (c1+c2)/((a1+a2)^{1/2} (b1+b2)^{3/2})` and
/// `rhs = (1 - eps/8) max_i c_i/(a_i^{1/2} b_i^{3/2})`; the bound is
/// claimed only when `eps < a2/a1 < 1/eps`.
pub fn split_inequality_check(
    a: [f64; 2],
    b: [f64; 2],
    c: [f64; 2],
    eps: f64,
) -> Result<SplitCheck> {
    if a.iter().chain(&b).chain(&c).any(|x| !(*x > 0.0) || !x.is_finite()) {
        return Err(Error::InvalidArgument(
            "split inequality needs six positive finite inputs".into(),
        ));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidArgument(format!("eps = {eps} must lie in (0, 1)")));
    }
    let ratio = |i: usize| c[i] / (a[i].sqrt() * b[i].powf(1.5));
    let lhs = (c[0] + c[1]) / ((a[0] + a[1]).sqrt() * (b[0] + b[1]).powf(1.5));
    let rhs = (1.0 - eps / 8.0) * ratio(0).max(ratio(1));
    let r = a[1] / a[0];
    let applicable = eps < r && r < 1.0 / eps;
    Ok(SplitCheck {
        lhs,
        rhs,
        holds: !applicable || lhs <= rhs * (1.0 + 1e-12),
        applicable,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use crate::grid::Grid;
    use crate::potentials::{kato_norm, KatoQuadrature, PotentialSpec};
    use std::f64::consts::PI;

    fn gaussian(g: &Grid, a: f64) -> Field {
        Field::from_fn(g, |x| {
            Complex64::new((-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / (a * a)).exp(), 0.0)
        })
    }

    #[test]
    fn zero_field_and_identity() {
        let g = Grid::new(16, 8.0).unwrap();
        let v = RealField::from_fn(&g, |x| x[0].cos());
        let f = form_values(&Field::zeros(&g), &v).unwrap();
        assert_eq!(f.mass, 0.0);
        assert_eq!(f.h_form, 0.0);
        assert!(f.wv().is_err());
        let u = gaussian(&g, 1.3);
        let f = form_values(&u, &v).unwrap();
        assert!((f.h_form - f.grad_sq - f.potential_term).abs() <= 1e-12 * f.h_form.abs());
    }

    #[test]
    fn plane_wave_form() {
        let g = Grid::new(16, 2.0 * PI).unwrap();
        let k0 = [2.0, -1.0, 3.0];
        let u = Field::from_fn(&g, |x| Complex64::from_polar(1.0, k0[0] * x[0] + k0[1] * x[1] + k0[2] * x[2]));
        let f = form_values(&u, &RealField::zeros(&g)).unwrap();
        let vol = g.volume();
        assert!((f.mass - vol).abs() < 1e-10 * vol);
        assert!((f.h_form - 14.0 * vol).abs() < 1e-10 * vol);
    }

    #[test]
    fn potential_term_matches_radial_integral() {
        // ∫ e^{-r^2/s^2} e^{-2 r^2/a^2} = (π / (1/s^2 + 2/a^2))^{3/2}
        let g = Grid::new(64, 16.0).unwrap();
        let (a, s) = (1.2, 0.9);
        let bump = PotentialSpec::GaussianBump {
            amplitude: 1.0,
            width: s,
            center: [0.0; 3],
        };
        let f = form_values(&gaussian(&g, a), &bump.evaluate(&g)).unwrap();
        let exact = (PI / (1.0 / (s * s) + 2.0 / (a * a))).powf(1.5);
        assert!((f.potential_term - exact).abs() < 1e-6 * exact);
    }

    #[test]
    fn wv_is_scale_invariant_and_translation_invariant() {
        let g = Grid::new(32, 12.0).unwrap();
        let v = RealField::zeros(&g);
        let u = Field::from_fn(&g, |x| {
            Complex64::new((-(x[0] * x[0] + 2.0 * x[1] * x[1] + x[2] * x[2])).exp(), 0.3 * x[0] * (-x[0] * x[0]).exp())
        });
        let w0 = wv(&u, &v).unwrap();
        let w1 = wv(&u.scaled(Complex64::new(2.7, 0.0)), &v).unwrap();
        assert!((w0 - w1).abs() < 1e-12 * w0);
        let w2 = wv(&u.translate_cells([3, -2, 5]), &v).unwrap();
        assert!((w0 - w2).abs() < 1e-12 * w0);
    }

    #[test]
    fn split_check_examples() {
        let c = split_inequality_check([1.0; 2], [1.0; 2], [1.0; 2], 0.9).unwrap();
        assert!((c.lhs - 0.5).abs() < 1e-15);
        assert!((c.rhs - 0.8875).abs() < 1e-15);
        assert!(c.holds && c.applicable);
        let c = split_inequality_check([1.0, 10.0], [1.0; 2], [1.0; 2], 0.5).unwrap();
        assert!(!c.applicable);
        assert!(split_inequality_check([0.0, 1.0], [1.0; 2], [1.0; 2], 0.5).is_err());
    }

    #[test]
    fn kato_positivity_examples() {
        let g = Grid::new(32, 16.0).unwrap();
        let u = gaussian(&g, 2.0);
        let zero = kato_positivity_check(&u, &RealField::zeros(&g), 0.0).unwrap();
        assert_eq!((zero.lhs, zero.rhs), (0.0, 0.0));
        assert!(zero.holds);
        let ball = PotentialSpec::BallIndicator {
            amplitude: 1.0,
            radius: 1.0,
            center: [0.0; 3],
        };
        let k = kato_norm(&ball, &KatoQuadrature::default()).unwrap();
        let c = kato_positivity_check(&u, &ball.evaluate(&g), k).unwrap();
        assert!(c.holds && c.lhs < c.rhs);
    }
}
