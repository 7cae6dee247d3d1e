//! Seeded samplers for the inequality checks.

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::error::Result;
use crate::forms::{form_values, kato_positivity_check, sandwich, split_inequality_check};
use crate::grid::{Field, Grid};
use crate::potentials::{admissibility, AdmissibilityReport, KatoQuadrature, PotentialSpec};

/// A sum of one to four Gaussian packets with random centers, widths, boosts
/// and complex amplitudes, with the top third of the spectrum removed.
pub fn random_localized_field<R: Rng>(g: &Grid, rng: &mut R) -> Field {
    let count = rng.random_range(1..=4);
    let packets: Vec<([f64; 3], f64, [f64; 3], Complex64)> = (0..count)
        .map(|_| {
            let c = [0, 1, 2].map(|_| rng.random_range(-2.0..2.0));
            let w = rng.random_range(0.8..2.0);
            let k = [0, 1, 2].map(|_| rng.random_range(-1.5..1.5));
            let a = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            (c, w, k, a)
        })
        .collect();
    let u = Field::from_fn(g, |x| {
        packets
            .iter()
            .map(|(c, w, k, a)| {
                let r2 = (x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2) + (x[2] - c[2]).powi(2);
                a * Complex64::from_polar((-r2 / (w * w)).exp(), k[0] * x[0] + k[1] * x[1] + k[2] * x[2])
            })
            .sum()
    });
    let mask = g.dealias_mask();
    let mut spec = u.transform_forward();
    for (c, keep) in spec.coeffs_mut().iter_mut().zip(&mask) {
        if !keep {
            *c = Complex64::default();
        }
    }
    spec.transform_inverse()
}

/// One to three centered radial members drawn from every family.
pub fn random_radial_potential<R: Rng>(rng: &mut R) -> PotentialSpec {
    let count = rng.random_range(1..=3);
    let mut members: Vec<PotentialSpec> = (0..count)
        .map(|_| {
            let amplitude: f64 = rng.random_range(-1.0..1.0);
            let scale = rng.random_range(0.5..2.0);
            let center = [0.0; 3];
            match rng.random_range(0..4) {
                0 => PotentialSpec::GaussianBump {
                    amplitude: amplitude.abs(),
                    width: scale,
                    center,
                },
                1 => PotentialSpec::GaussianWell {
                    amplitude: -amplitude.abs() - 1e-3,
                    width: scale,
                    center,
                },
                2 => PotentialSpec::BallIndicator {
                    amplitude,
                    radius: scale,
                    center,
                },
                _ => PotentialSpec::Yukawa {
                    amplitude,
                    decay: 1.0 / scale,
                    center,
                },
            }
        })
        .collect();
    if members.len() == 1 {
        members.pop().unwrap()
    } else {
        PotentialSpec::Sum { members }
    }
}

/// Random radial potential whose negative part is small enough for the
/// sandwich bound, with its admissibility report.
pub fn random_admissible_potential<R: Rng>(
    rng: &mut R,
    quad: &KatoQuadrature,
) -> Result<(PotentialSpec, AdmissibilityReport)> {
    loop {
        let spec = random_radial_potential(rng);
        let report = admissibility(&spec, quad)?;
        if report.passes_small_negative {
            return Ok((spec, report));
        }
    }
}

/// Positive `(a, b, c)` pairs spread over six decades and `eps` in `(0, 1)`,
/// with `eps < a2/a1 < 1/eps`.
pub fn random_sextuple<R: Rng>(rng: &mut R) -> ([f64; 2], [f64; 2], [f64; 2], f64) {
    let mut decade = || 10f64.powf(rng.random_range(-3.0..3.0));
    let a1 = decade();
    let b = [decade(), decade()];
    let c = [decade(), decade()];
    let eps: f64 = rng.random_range(1e-3..0.999);
    let a2 = a1 * eps.powf(rng.random_range(-0.999..0.999));
    ([a1, a2], b, c, eps)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct FuzzTally {
    pub trials: usize,
    pub positivity_violations: usize,
    pub sandwich_violations: usize,
    pub split_violations: usize,
    /// Smallest `rhs - lhs` seen in the positivity check, relative to `rhs`.
    pub positivity_min_margin: f64,
    /// Smallest `rhs - lhs` seen in the splitting check, relative to `rhs`.
    pub split_min_margin: f64,
}

impl FuzzTally {
    pub fn violations(&self) -> usize {
        self.positivity_violations + self.sandwich_violations + self.split_violations
    }
}

/// `trials` positivity and sandwich checks on random band-limited fields, and
/// `trials` splitting checks on random sextuples. With `fixed` set, every
/// field is tested against that potential; otherwise each trial draws a new
/// admissible radial potential.
pub fn run_fuzz<R: Rng>(
    grid: &Grid,
    fixed: Option<(&PotentialSpec, &AdmissibilityReport)>,
    trials: usize,
    quad: &KatoQuadrature,
    rng: &mut R,
) -> Result<FuzzTally> {
    let mut tally = FuzzTally {
        trials,
        positivity_min_margin: f64::INFINITY,
        split_min_margin: f64::INFINITY,
        ..FuzzTally::default()
    };
    let fixed_v = fixed.map(|(spec, _)| spec.evaluate(grid));
    for _ in 0..trials {
        let (v, report) = match (fixed, &fixed_v) {
            (Some((_, report)), Some(v)) => (v.clone(), report.clone()),
            _ => {
                let (spec, report) = random_admissible_potential(rng, quad)?;
                (spec.evaluate(grid), report)
            }
        };
        let u = random_localized_field(grid, rng);
        let check = kato_positivity_check(&u, &v, report.kato_norm)?;
        if !check.holds {
            tally.positivity_violations += 1;
        }
        if check.rhs > 0.0 {
            tally.positivity_min_margin = tally.positivity_min_margin.min((check.rhs - check.lhs) / check.rhs);
        }
        let f = form_values(&u, &v)?;
        if !sandwich(&f, report.kato_norm_negative, report.kato_norm).holds {
            tally.sandwich_violations += 1;
        }
    }
    for _ in 0..trials {
        let (a, b, c, eps) = random_sextuple(rng);
        let r = split_inequality_check(a, b, c, eps)?;
        if !r.applicable || !r.holds {
            tally.split_violations += 1;
        }
        tally.split_min_margin = tally.split_min_margin.min((r.rhs - r.lhs) / r.rhs);
    }
    Ok(tally)
}
