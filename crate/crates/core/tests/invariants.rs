//! Property tests of structural invariants across modules.

use nlsv_core::experiment::fuzz::{random_localized_field, random_sextuple};
use nlsv_core::forms::{form_values, sandwich, split_inequality_check, wv, FormValues};
use nlsv_core::ground_state::{RadialOptions, RadialProfile};
use nlsv_core::potentials::{admissibility, kato_norm, KatoQuadrature, PotentialSpec};
use nlsv_core::propagator::{evolve, linear_flow, strang_step, EvolutionConfig};
use nlsv_core::thresholds::{classify_norms, compute_thresholds, GroundStateInput, ThresholdReport, Verdict};
use nlsv_core::{Field, Grid, RealField};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::OnceLock;

fn grid() -> Grid {
    Grid::new(16, 10.0).unwrap()
}

fn field(seed: u64) -> Field {
    random_localized_field(&grid(), &mut ChaCha8Rng::seed_from_u64(seed))
}

fn free() -> &'static (RadialProfile, ThresholdReport) {
    static FREE: OnceLock<(RadialProfile, ThresholdReport)> = OnceLock::new();
    FREE.get_or_init(|| {
        let q = RadialProfile::solve(&RadialOptions::default()).unwrap();
        let r = compute_thresholds(&PotentialSpec::Zero, GroundStateInput::Free(&q)).unwrap();
        (q, r)
    })
}

fn radial_member() -> impl Strategy<Value = PotentialSpec> {
    prop_oneof![
        (0.01..2.0f64, 0.3..2.0f64).prop_map(|(a, w)| PotentialSpec::GaussianBump {
            amplitude: a,
            width: w,
            center: [0.0; 3]
        }),
        (0.01..2.0f64, 0.3..2.0f64).prop_map(|(a, w)| PotentialSpec::GaussianWell {
            amplitude: -a,
            width: w,
            center: [0.0; 3]
        }),
        (-2.0..2.0f64, 0.3..2.0f64).prop_map(|(a, r)| PotentialSpec::BallIndicator {
            amplitude: a,
            radius: r,
            center: [0.0; 3]
        }),
        (-2.0..2.0f64, 0.5..3.0f64).prop_map(|(a, m)| PotentialSpec::Yukawa {
            amplitude: a,
            decay: m,
            center: [0.0; 3]
        }),
    ]
}

fn scale_potential(spec: &PotentialSpec, s: f64) -> PotentialSpec {
    match spec.clone() {
        PotentialSpec::GaussianBump { amplitude, width, center } => PotentialSpec::GaussianBump {
            amplitude: amplitude * s,
            width,
            center,
        },
        PotentialSpec::GaussianWell { amplitude, width, center } => PotentialSpec::GaussianWell {
            amplitude: amplitude * s,
            width,
            center,
        },
        PotentialSpec::BallIndicator { amplitude, radius, center } => PotentialSpec::BallIndicator {
            amplitude: amplitude * s,
            radius,
            center,
        },
        PotentialSpec::Yukawa { amplitude, decay, center } => PotentialSpec::Yukawa {
            amplitude: amplitude * s,
            decay,
            center,
        },
        other => other,
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn max_diff(a: &Field, b: &Field) -> f64 {
    a.values().iter().zip(b.values()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn kato_norm_is_positively_homogeneous(spec in radial_member(), s in 0.1..5.0f64) {
        let quad = KatoQuadrature::default();
        let k = kato_norm(&spec, &quad).unwrap();
        let ks = kato_norm(&scale_potential(&spec, s), &quad).unwrap();
        prop_assert!(rel(ks, s * k) < 1e-8, "{ks} vs {}", s * k);
    }

    #[test]
    fn free_wv_ignores_amplitude_phase_and_shifts(
        seed in any::<u64>(),
        amp in 0.1..10.0f64,
        phase in 0.0..6.3f64,
        shift in prop::array::uniform3(-8isize..8),
    ) {
        let u = field(seed);
        let zero = RealField::zeros(&grid());
        let base = wv(&u, &zero).unwrap();
        let moved = u.scaled(Complex64::from_polar(amp, phase)).translate_cells(shift);
        prop_assert!(rel(wv(&moved, &zero).unwrap(), base) < 1e-10);
    }

    #[test]
    fn sandwich_holds_for_admissible_potentials(seed in any::<u64>(), spec in radial_member()) {
        let adm = admissibility(&spec, &KatoQuadrature::default()).unwrap();
        prop_assume!(adm.passes_small_negative);
        let f = form_values(&field(seed), &spec.evaluate(&grid())).unwrap();
        prop_assert!(sandwich(&f, adm.kato_norm_negative, adm.kato_norm).holds);
    }

    #[test]
    fn splitting_bound_holds(seed in any::<u64>()) {
        let (a, b, c, eps) = random_sextuple(&mut ChaCha8Rng::seed_from_u64(seed));
        let r = split_inequality_check(a, b, c, eps).unwrap();
        prop_assert!(r.applicable && r.holds, "{a:?} {b:?} {c:?} {eps}: {} > {}", r.lhs, r.rhs);
    }

    #[test]
    fn splitting_is_symmetric_in_the_pieces(seed in any::<u64>()) {
        let (a, b, c, eps) = random_sextuple(&mut ChaCha8Rng::seed_from_u64(seed));
        let r1 = split_inequality_check(a, b, c, eps).unwrap();
        let r2 = split_inequality_check([a[1], a[0]], [b[1], b[0]], [c[1], c[0]], eps).unwrap();
        prop_assert!(rel(r1.lhs, r2.lhs) < 1e-12 && rel(r1.rhs, r2.rhs) < 1e-12);
    }

    #[test]
    fn strang_step_is_gauge_covariant(seed in any::<u64>(), phase in 0.0..6.3f64, sigma in -1i32..=1) {
        let u = field(seed);
        let v = PotentialSpec::GaussianBump { amplitude: 0.5, width: 1.0, center: [0.0; 3] }.evaluate(&grid());
        let cfg = EvolutionConfig { dt: 0.01, sigma, ..EvolutionConfig::default() };
        let rot = Complex64::from_polar(1.0, phase);
        let a = strang_step(&u.scaled(rot), &v, &cfg).unwrap();
        let b = strang_step(&u, &v, &cfg).unwrap().scaled(rot);
        prop_assert!(max_diff(&a, &b) < 1e-12);
    }

    #[test]
    fn mass_is_conserved(seed in any::<u64>(), sigma in -1i32..=1, dealias in any::<bool>()) {
        let u = field(seed);
        let v = PotentialSpec::GaussianWell { amplitude: -0.3, width: 1.0, center: [0.0; 3] }.evaluate(&grid());
        let cfg = EvolutionConfig { dt: 0.005, t_end: 0.05, sigma, dealias, save_stride: 5, ..EvolutionConfig::default() };
        let traj = evolve(&u, &v, &cfg, &[]).unwrap();
        prop_assert!(traj.abort.is_none());
        prop_assert!(traj.drifts().0 < 1e-12);
    }

    #[test]
    fn linear_flow_reverses(seed in any::<u64>(), t in 0.01..0.5f64, steps in 1usize..20) {
        let u = field(seed);
        let v = PotentialSpec::Yukawa { amplitude: 0.7, decay: 1.0, center: [0.0; 3] }.evaluate(&grid());
        let forward = linear_flow(&u, &v, t, steps).unwrap();
        let back = linear_flow(&forward, &v, -t, steps).unwrap();
        prop_assert!(max_diff(&back, &u) < 1e-11);
    }

    #[test]
    fn scaled_ground_state_mass_energy(lambda in 0.05..1.6f64) {
        let (q, report) = free();
        let l2 = lambda * lambda;
        let norms = FormValues {
            mass: l2 * q.mass,
            h_form: l2 * q.grad_sq,
            grad_sq: l2 * q.grad_sq,
            l4_fourth: l2 * l2 * q.l4_fourth,
            potential_term: 0.0,
        };
        let c = classify_norms(&norms, report);
        let expected = 3.0 * lambda.powi(4) - 2.0 * lambda.powi(6);
        prop_assert!((c.mass_energy / report.me - expected).abs() < 1e-6);
        prop_assert!(rel(c.g0 / report.alpha, l2) < 1e-6);
        if (lambda - 1.0).abs() > 1e-3 {
            let expect = if lambda < 1.0 { Verdict::BelowGlobal } else { Verdict::AboveLine };
            prop_assert_eq!(c.verdict, expect);
        }
    }

    #[test]
    fn threshold_function_is_unimodal(x in 0.0..3.0f64, dx in 1e-3..0.5f64) {
        let (_, r) = free();
        let (a, b) = (x * r.alpha, (x + dx) * r.alpha);
        let (fa, fb) = (r.threshold_function(a), r.threshold_function(b));
        if b <= r.alpha {
            prop_assert!(fb > fa);
        } else if a >= r.alpha {
            prop_assert!(fb < fa);
        }
        prop_assert!(fa <= r.me * (1.0 + 1e-12));
    }
}
