//! Projected ascent of `W_V` on the unit `L^2` sphere.
//!
//! The search direction is `-P r` where `r = ℋψ + (h/3m)ψ - (4h/3 l4)|ψ|^2 ψ`
//! is the Euler–Lagrange residual (a negative multiple of `∇W_V`) and
//! `P = (c - Δ)^{-1}`. Steps follow Barzilai–Borwein in the metric `P^{-1}`,
//! halved until `W_V` does not decrease.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::radial::{RadialOptions, RadialProfile};
use super::GroundStateResult;
use crate::error::{Error, Result};
use crate::forms::{cubic, inner_re};
use crate::grid::{Field, Grid, RealField};
use crate::potentials::{kato_norm_of, KatoQuadrature, Part, PotentialFn, PotentialSpec, FOUR_PI};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MaximizeOptions {
    pub max_iterations: usize,
    /// Target relative Euler–Lagrange residual.
    pub residual_tol: f64,
    pub pohozaev_tol: f64,
    pub precondition: bool,
    /// Dilation of the free profile used as the default start; `None` picks
    /// the dilation with the largest `W_V`.
    pub init_scale: Option<f64>,
    /// Largest accepted `||ψ_new - ψ||` on the unit sphere. On the periodic
    /// box `ℋ` is not positive on near-constant fields, so `W_V` is unbounded
    /// there; short steps keep the iteration in the localized basin.
    pub max_step: f64,
    /// Largest admissible top-band spectral share of the result. Discrete
    /// `W_V` grows for profiles concentrated at the grid scale, so an
    /// unresolved result is a lattice artifact, not a maximizer.
    pub max_top_band: f64,
}

impl Default for MaximizeOptions {
    fn default() -> Self {
        Self {
            max_iterations: 4000,
            residual_tol: 1e-8,
            pohozaev_tol: 1e-3,
            precondition: true,
            init_scale: None,
            max_step: 0.1,
            max_top_band: 1e-5,
        }
    }
}

struct Eval {
    psi: Field,
    lap: Field,
    residual: Field,
    mass: f64,
    h: f64,
    l4: f64,
    w: f64,
    rel_residual: f64,
}

fn evaluate(psi: Field, v: &RealField) -> Result<Eval> {
    let lap = psi.laplacian();
    let mut hpsi = lap.clone();
    for ((o, x), p) in hpsi.values_mut().iter_mut().zip(psi.values()).zip(v.values()) {
        *o = -*o + x * p;
    }
    let mass = psi.mass();
    let h = inner_re(&psi, &hpsi);
    let l4 = psi.l4_fourth();
    if !(h > 0.0) {
        return Err(Error::NotCoercive(h));
    }
    let psi3 = cubic(&psi);
    let a = h / (3.0 * mass);
    let b = 4.0 * h / (3.0 * l4);
    let residual = hpsi.axpy(a, &psi).axpy(-b, &psi3);
    let scale = hpsi.mass().sqrt() + a * mass.sqrt() + b * psi3.mass().sqrt();
    Ok(Eval {
        rel_residual: residual.mass().sqrt() / scale,
        w: l4 / (mass.sqrt() * h.powf(1.5)),
        psi,
        lap,
        residual,
        mass,
        h,
        l4,
    })
}

/// `(c - Δ)^{-1} f`.
fn precondition(f: &Field, c: f64) -> Field {
    let mut spec = f.transform_forward();
    let grid = f.grid();
    for (z, k) in spec.coeffs_mut().iter_mut().zip(grid.k_squared()) {
        *z /= c + k;
    }
    spec.transform_inverse()
}

fn normalized(mut f: Field) -> Field {
    let m = f.mass();
    f.scale_mut(1.0 / m.sqrt());
    f
}

fn real_only(f: &Field) -> Field {
    Field::new(
        f.grid().clone(),
        f.values().iter().map(|z| Complex64::new(z.re, 0.0)).collect(),
    )
    .expect("finite")
}

/// Default start: the free profile centered on the deepest grid node of `V`,
/// dilated by `scale` or, when absent, by the dilation maximizing `W_V`.
pub(crate) fn default_start(spec: &PotentialSpec, grid: &Grid, scale: Option<f64>) -> Result<Field> {
    let v = spec.evaluate(grid);
    let (imin, _) = v
        .values()
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty grid");
    let center = grid.position(imin);
    let radial = RadialProfile::solve(&RadialOptions::default())?;
    let scale = match scale {
        Some(s) => s,
        None => {
            // Dilations between the smallest one the grid resolves and the
            // largest one that fits the box. Finer profiles gain W_V from
            // lattice effects alone.
            let s_min = (3.5 * grid.spacing()).max(0.5);
            let s_max = (grid.box_length() / 16.0).max(s_min);
            let score = |ls: f64| {
                crate::forms::wv(&radial.on_grid(grid, center, ls.exp()), &v).unwrap_or(f64::NEG_INFINITY)
            };
            let m = 24;
            let (lo, hi) = (s_min.ln(), s_max.ln());
            let samples: Vec<(f64, f64)> = (0..=m)
                .map(|i| {
                    let ls = lo + (hi - lo) * i as f64 / m as f64;
                    (ls, score(ls))
                })
                .collect();
            let ibest = (0..=m).max_by(|&a, &b| samples[a].1.total_cmp(&samples[b].1)).unwrap();
            let a = samples[ibest.saturating_sub(1)].0;
            let b = samples[(ibest + 1).min(m)].0;
            crate::quadrature::golden_section_max(score, a, b, 1e-3).0.exp()
        }
    };
    Ok(radial.on_grid(grid, center, scale))
}

/// Maximizes `W_V` and rescales the maximizer to a ground state.
///
/// Refuses when `V_-` vanishes (no maximizer exists; the free profile is the
/// answer) and when `||V_-||_K >= 4π`.
pub fn maximize_wv(
    spec: &PotentialSpec,
    grid: &Grid,
    init: Option<Field>,
    opts: &MaximizeOptions,
) -> Result<GroundStateResult> {
    spec.validate()?;
    if !spec.has_negative_part() {
        return Err(Error::SupremumNotAttained(
            "the potential has no negative part".into(),
        ));
    }
    let kato_neg = kato_norm_of(&PotentialFn::new(spec, Part::Negative), &KatoQuadrature::default())?;
    if kato_neg >= FOUR_PI {
        return Err(Error::NotAdmissible(format!(
            "||V_-||_K = {kato_neg} is not below 4π"
        )));
    }
    let v = spec.evaluate(grid);
    let start = match init {
        Some(f) => {
            grid.check_same(f.grid())?;
            f
        }
        None => default_start(spec, grid, opts.init_scale)?,
    };
    let mut cur = evaluate(normalized(real_only(&start)), &v)?;
    let c = if opts.precondition {
        (cur.h / (3.0 * cur.mass)).max(0.1)
    } else {
        0.0
    };
    let direction = |e: &Eval| -> Field {
        let mut d = if opts.precondition {
            precondition(&e.residual, c)
        } else {
            e.residual.clone()
        };
        d.scale_mut(-1.0);
        let along = inner_re(&e.psi, &d) / e.mass;
        d.axpy(-along, &e.psi)
    };
    let mut tau: f64 = if opts.precondition { 1.0 } else { 1e-2 };
    let mut residual_history = vec![cur.rel_residual];
    let mut wv_history = vec![cur.w];
    let mut iterations = 0;
    while cur.rel_residual > opts.residual_tol {
        if iterations >= opts.max_iterations {
            return Err(Error::NotConverged {
                iterations,
                last_residual: cur.rel_residual,
                residual_history,
            });
        }
        iterations += 1;
        let d = direction(&cur);
        let mut step = tau.min(opts.max_step / d.mass().sqrt());
        let mut accepted = None;
        for _ in 0..50 {
            // on the periodic box ℋ can go negative on very flat trials; treat as a failed step
            match evaluate(normalized(cur.psi.axpy(step, &d)), &v) {
                Ok(trial) if trial.w >= cur.w - 1e-12 * cur.w.abs() => {
                    accepted = Some(trial);
                    break;
                }
                Ok(_) | Err(Error::NotCoercive(_)) => step *= 0.5,
                Err(e) => return Err(e),
            }
        }
        let Some(next) = accepted else {
            return Err(Error::NotConverged {
                iterations,
                last_residual: cur.rel_residual,
                residual_history,
            });
        };
        // Barzilai–Borwein: <s, P^{-1} s> / <s, Δr>, using the stored Laplacians
        let s = next.psi.sub(&cur.psi);
        let dr = next.residual.sub(&cur.residual);
        let ps = if opts.precondition {
            s.scaled(Complex64::new(c, 0.0)).sub(&next.lap.sub(&cur.lap))
        } else {
            s.clone()
        };
        let sy = inner_re(&s, &dr);
        let sps = inner_re(&s, &ps);
        tau = if sy > 0.0 && sps > 0.0 {
            (sps / sy).clamp(1e-4, 1e2)
        } else {
            (2.0 * step).min(1e2)
        };
        residual_history.push(next.rel_residual);
        wv_history.push(next.w);
        cur = next;
    }

    // real, nonnegative profile
    let sum: f64 = cur.psi.values().iter().map(|z| z.re).sum();
    let sign = if sum < 0.0 { -1.0 } else { 1.0 };
    let lambda = 2.0 * cur.h.sqrt() / (3f64.sqrt() * cur.l4.sqrt());
    let profile = Field::new(
        grid.clone(),
        cur.psi
            .values()
            .iter()
            .map(|z| Complex64::new(sign * z.re * lambda, 0.0))
            .collect(),
    )?;
    let h = crate::forms::form_values(&profile, &v)?;
    let omega = (h.h_form / (3.0 * h.mass)).sqrt();
    let mut result = GroundStateResult::certify(profile, &v, omega, iterations)?;
    result.residual_history = residual_history;
    result.wv_history = wv_history;
    if result.top_band_fraction > opts.max_top_band {
        return Err(Error::UnderResolved {
            top_band_fraction: result.top_band_fraction,
        });
    }
    let worst = result.pohozaev_residual_1.max(result.pohozaev_residual_2);
    if worst > opts.pohozaev_tol {
        return Err(Error::NotConverged {
            iterations,
            last_residual: worst,
            residual_history: result.residual_history,
        });
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::wv;

    fn well(a: f64) -> PotentialSpec {
        PotentialSpec::GaussianWell {
            amplitude: a,
            width: 1.0,
            center: [0.0; 3],
        }
    }

    #[test]
    fn refuses_without_negative_part() {
        let g = Grid::new(16, 16.0).unwrap();
        let bump = PotentialSpec::GaussianBump {
            amplitude: 1.0,
            width: 1.0,
            center: [0.0; 3],
        };
        for spec in [PotentialSpec::Zero, bump] {
            let err = maximize_wv(&spec, &g, None, &MaximizeOptions::default()).unwrap_err();
            assert!(err.to_string().contains("supremum not attained; use free Q"), "{err}");
        }
    }

    #[test]
    fn refuses_large_negative_part() {
        let g = Grid::new(16, 16.0).unwrap();
        // ||V_-||_K = 2π |A| for unit width
        let err = maximize_wv(&well(-2.5), &g, None, &MaximizeOptions::default()).unwrap_err();
        assert!(matches!(err, Error::NotAdmissible(_)), "{err}");
    }

    #[test]
    fn small_well_maximizer() {
        let g = Grid::new(64, 32.0).unwrap();
        let spec = well(-0.3);
        let opts = MaximizeOptions {
            residual_tol: 1e-7,
            ..MaximizeOptions::default()
        };
        let res = maximize_wv(&spec, &g, None, &opts).unwrap();
        for w in res.wv_history.windows(2) {
            assert!(w[1] >= w[0] - 1e-12 * w[0].abs());
        }
        assert!(res.elliptic_residual < 1e-6, "{}", res.elliptic_residual);
        let omega = (res.norms.h_form / (3.0 * res.norms.mass)).sqrt();
        assert!((omega - res.omega).abs() < 1e-12 * omega);
        let v = spec.evaluate(&g);
        let free = default_start(&PotentialSpec::Zero, &g, Some(1.0)).unwrap();
        assert!(res.wv_value > wv(&free, &v).unwrap());
        assert!(res.profile.values().iter().all(|z| z.re >= 0.0 && z.im == 0.0));
    }
}
