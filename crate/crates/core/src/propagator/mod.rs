//! Strang split-step evolution of `i u_t + Δu - V u + σ|u|^2 u = 0` on the
//! periodic grid.
//!
//! One step is a half kinetic substep in Fourier space, an exact pointwise
//! phase rotation `u ← u e^{-i(V - σ|u|^2) dt}`, and another half kinetic
//! substep. Consecutive half substeps between saved frames are fused.

mod probes;

pub use probes::{
    dispersive_decay_probe, s_norm_proxy, scattering_extract, DecayFit, ScatteringSeries, SNormProxy,
    ADMISSIBLE_PAIRS,
};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, Grid, RealField};
use crate::virial::{VirialProbe, VirialSeries};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolutionConfig {
    pub dt: f64,
    pub t_end: f64,
    /// `+1` focusing, `-1` defocusing, `0` linear.
    pub sigma: i32,
    /// Two-thirds mask on `|u|^2` before the phase rotation.
    pub dealias: bool,
    /// Steps between saved frames.
    pub save_stride: usize,
    /// Abort once `||u||_∞` exceeds this multiple of its initial value.
    pub blowup_factor: f64,
    /// Abort once the top third of the spectrum carries this share of the mass.
    pub max_top_band: f64,
    /// Keep the field at every saved frame (needed for scattering extraction).
    pub keep_frames: bool,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_end: 1.0,
            sigma: 1,
            dealias: true,
            save_stride: 10,
            blowup_factor: 50.0,
            max_top_band: 0.1,
            keep_frames: false,
        }
    }
}

impl EvolutionConfig {
    /// Every violated constraint, each prefixed with `prefix` and the field name.
    pub fn violations(&self, prefix: &str) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            out.push(format!("{prefix}dt: must be positive and finite (got {})", self.dt));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            out.push(format!("{prefix}t_end: must be non-negative and finite (got {})", self.t_end));
        }
        if !(-1..=1).contains(&self.sigma) {
            out.push(format!("{prefix}sigma: must be -1, 0 or 1 (got {})", self.sigma));
        }
        if self.save_stride == 0 {
            out.push(format!("{prefix}save_stride: must be at least 1"));
        }
        if !(self.blowup_factor > 1.0) {
            out.push(format!("{prefix}blowup_factor: must exceed 1 (got {})", self.blowup_factor));
        }
        if !(self.max_top_band > 0.0 && self.max_top_band <= 1.0) {
            out.push(format!("{prefix}max_top_band: must lie in (0, 1] (got {})", self.max_top_band));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations("");
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(v.join("; ")))
        }
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt - 1e-9).ceil().max(0.0) as usize
    }
}

/// Raw FFT work arrays and phase factors for a fixed `dt`.
pub struct Stepper {
    grid: Grid,
    v: Vec<f64>,
    sigma: f64,
    dt: f64,
    mask: Option<Vec<bool>>,
    half: Vec<Complex64>,
    full: Vec<Complex64>,
}

/// Why a run stopped early.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbortInfo {
    pub step: usize,
    pub time: f64,
    pub reason: String,
}

impl From<AbortInfo> for Error {
    fn from(a: AbortInfo) -> Self {
        Error::Abort {
            step: a.step,
            time: a.time,
            reason: a.reason,
        }
    }
}

impl Stepper {
    /// `dt` may be negative, which runs the flow backward.
    pub fn new(v: &RealField, sigma: f64, dt: f64, dealias: bool) -> Self {
        let grid = v.grid().clone();
        let phase = |tau: f64| -> Vec<Complex64> {
            grid.k_squared()
                .iter()
                .map(|k2| Complex64::from_polar(1.0, -k2 * tau))
                .collect()
        };
        Self {
            half: phase(0.5 * dt),
            full: phase(dt),
            mask: (dealias && sigma != 0.0).then(|| grid.dealias_mask()),
            v: v.values().to_vec(),
            sigma,
            dt,
            grid,
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Potential term free of both `V` and the nonlinearity: the flow is a Fourier multiplier.
    fn is_kinetic_only(&self) -> bool {
        self.sigma == 0.0 && self.v.iter().all(|&x| x == 0.0)
    }

    /// Advances `u` by `steps` Strang steps. `sup_limit` bounds `||u||_∞`; the
    /// returned error carries the offending step (counted from this call).
    pub fn advance(&self, u: &mut Field, steps: usize, sup_limit: f64) -> std::result::Result<(), (usize, String)> {
        if steps == 0 {
            return Ok(());
        }
        let fft = self.grid.fft();
        let inv_n = 1.0 / self.grid.len() as f64;
        let data = u.values_mut();
        if self.is_kinetic_only() {
            fft.forward(data);
            let tau = steps as f64 * self.dt;
            for (z, k2) in data.iter_mut().zip(self.grid.k_squared()) {
                *z *= Complex64::from_polar(inv_n, -k2 * tau);
            }
            fft.inverse(data);
            return Ok(());
        }
        let sup_sq = sup_limit * sup_limit;
        let mut rho = vec![0.0; data.len()];
        let mut rho_spec = vec![Complex64::default(); data.len()];
        fft.forward(data);
        mul(data, &self.half);
        for step in 0..steps {
            fft.inverse(data);
            let mut peak = 0.0f64;
            for (r, z) in rho.iter_mut().zip(data.iter_mut()) {
                *z *= inv_n;
                *r = z.norm_sqr();
                peak = peak.max(*r);
            }
            if !peak.is_finite() {
                return Err((step + 1, "non-finite values".into()));
            }
            if peak > sup_sq {
                return Err((
                    step + 1,
                    format!("sup norm {:.3e} exceeded the limit {sup_limit:.3e}", peak.sqrt()),
                ));
            }
            if let Some(mask) = &self.mask {
                for (c, r) in rho_spec.iter_mut().zip(&rho) {
                    *c = Complex64::new(*r, 0.0);
                }
                fft.forward(&mut rho_spec);
                for (c, keep) in rho_spec.iter_mut().zip(mask) {
                    if *keep {
                        *c *= inv_n;
                    } else {
                        *c = Complex64::default();
                    }
                }
                fft.inverse(&mut rho_spec);
                for (r, c) in rho.iter_mut().zip(&rho_spec) {
                    *r = c.re;
                }
            }
            for ((z, r), v) in data.iter_mut().zip(&rho).zip(&self.v) {
                *z *= Complex64::from_polar(1.0, -(v - self.sigma * r) * self.dt);
            }
            fft.forward(data);
            mul(data, if step + 1 == steps { &self.half } else { &self.full });
        }
        fft.inverse(data);
        for z in data.iter_mut() {
            *z *= inv_n;
        }
        Ok(())
    }
}

fn mul(a: &mut [Complex64], b: &[Complex64]) {
    for (x, y) in a.iter_mut().zip(b) {
        *x *= y;
    }
}

/// One Strang step.
pub fn strang_step(u: &Field, v: &RealField, cfg: &EvolutionConfig) -> Result<Field> {
    cfg.validate()?;
    u.grid().check_same(v.grid())?;
    let stepper = Stepper::new(v, cfg.sigma as f64, cfg.dt, cfg.dealias);
    let mut out = u.clone();
    stepper
        .advance(&mut out, 1, f64::INFINITY)
        .map_err(|(step, reason)| Error::Abort {
            step,
            time: cfg.dt,
            reason,
        })?;
    Ok(out)
}

/// `e^{-itℋ} u` by `steps` linear Strang steps (`t` may be negative).
pub fn linear_flow(u: &Field, v: &RealField, t: f64, steps: usize) -> Result<Field> {
    u.grid().check_same(v.grid())?;
    let steps = steps.max(1);
    let stepper = Stepper::new(v, 0.0, t / steps as f64, false);
    let mut out = u.clone();
    stepper
        .advance(&mut out, steps, f64::INFINITY)
        .map_err(|(step, reason)| Error::Abort { step, time: t, reason })?;
    Ok(out)
}

/// Conserved-quantity and norm diagnostics of one saved frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameDiagnostics {
    pub step: usize,
    pub t: f64,
    pub mass: f64,
    /// `E_V`; with dealiasing, the quartic term uses the masked density so
    /// that this is the energy the scheme conserves.
    pub energy: f64,
    /// `E_0`, the same without the potential term.
    pub free_energy: f64,
    pub h_form: f64,
    /// `||u||_{L^4}`
    pub l4: f64,
    pub linf: f64,
    /// `||u0|| ||ℋ^{1/2} u(t)||`
    pub g: f64,
    pub top_band: f64,
    /// `||u||_{L^r}` for `r = 3, 5, 6`, used by the space-time norm proxy.
    pub l3: f64,
    pub l5: f64,
    pub l6: f64,
}

fn diagnostics(u: &Field, v: &RealField, sigma: f64, dealias: bool, initial_mass: f64, step: usize, t: f64) -> FrameDiagnostics {
    let spec = u.transform_forward();
    let grad_sq = spec.grad_norm_sq();
    let potential = v.weighted_mass(u);
    let rho = u.modulus_squared();
    let quartic = if dealias && sigma != 0.0 {
        let mask = u.grid().dealias_mask();
        let mut rs = rho.to_field().transform_forward();
        for (c, keep) in rs.coeffs_mut().iter_mut().zip(&mask) {
            if !keep {
                *c = Complex64::default();
            }
        }
        let smooth = rs.transform_inverse();
        rho.values()
            .iter()
            .zip(smooth.values())
            .map(|(a, b)| a * b.re)
            .sum::<f64>()
            * u.grid().cell_volume()
    } else {
        u.l4_fourth()
    };
    let h_form = grad_sq + potential;
    FrameDiagnostics {
        step,
        t,
        mass: u.mass(),
        energy: 0.5 * h_form - 0.25 * sigma * quartic,
        free_energy: 0.5 * grad_sq - 0.25 * sigma * quartic,
        h_form,
        l4: u.lebesgue_norm(4.0),
        linf: u.sup_norm(),
        g: (initial_mass * h_form.max(0.0)).sqrt(),
        top_band: spec.top_band_fraction(),
        l3: u.lebesgue_norm(3.0),
        l5: u.lebesgue_norm(5.0),
        l6: u.lebesgue_norm(6.0),
    }
}

/// Saved frames of one run.
#[derive(Clone, Debug, Serialize)]
pub struct Trajectory {
    pub n: usize,
    pub box_length: f64,
    pub dt: f64,
    pub sigma: i32,
    pub diagnostics: Vec<FrameDiagnostics>,
    #[serde(skip)]
    pub frames: Vec<Field>,
    pub virial: Vec<VirialSeries>,
    /// Field when the run stopped.
    #[serde(skip)]
    pub final_state: Field,
    /// Largest time before the initial data can wrap around the box.
    pub wraparound_limit: f64,
    pub abort: Option<AbortInfo>,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.diagnostics.iter().map(|d| d.t).collect()
    }

    /// Largest relative deviation of mass and energy from their initial values.
    pub fn drifts(&self) -> (f64, f64) {
        let Some(first) = self.diagnostics.first() else {
            return (0.0, 0.0);
        };
        let rel = |a: f64, b: f64| if b != 0.0 { (a - b).abs() / b.abs() } else { (a - b).abs() };
        self.diagnostics.iter().fold((0.0f64, 0.0f64), |(m, e), d| {
            (m.max(rel(d.mass, first.mass)), e.max(rel(d.energy, first.energy)))
        })
    }

    pub fn into_result(self) -> Result<Self> {
        match self.abort.clone() {
            Some(a) => Err(a.into()),
            None => Ok(self),
        }
    }
}

/// `0.2 L / (2 k)` with `k` the per-axis rms wavenumber of `u0`.
pub fn wraparound_limit(u0: &Field) -> f64 {
    let m = u0.mass();
    if m == 0.0 {
        return f64::INFINITY;
    }
    let k = (u0.grad_norm_sq() / (3.0 * m)).sqrt();
    if k == 0.0 {
        f64::INFINITY
    } else {
        0.2 * u0.grid().box_length() / (2.0 * k)
    }
}

/// Runs `u0` to `cfg.t_end`, saving diagnostics every `cfg.save_stride` steps
/// and at the final step. A resolution-loss abort ends the run early and is
/// recorded in [`Trajectory::abort`]; frames up to that point are kept.
pub fn evolve(u0: &Field, v: &RealField, cfg: &EvolutionConfig, virial: &[VirialProbe]) -> Result<Trajectory> {
    cfg.validate()?;
    u0.grid().check_same(v.grid())?;
    if !u0.is_finite() {
        return Err(Error::NonFinite);
    }
    let sigma = cfg.sigma as f64;
    let stepper = Stepper::new(v, sigma, cfg.dt, cfg.dealias);
    let initial_mass = u0.mass();
    let sup_limit = cfg.blowup_factor * u0.sup_norm();
    let mut traj = Trajectory {
        n: u0.grid().n(),
        box_length: u0.grid().box_length(),
        dt: cfg.dt,
        sigma: cfg.sigma,
        diagnostics: Vec::new(),
        frames: Vec::new(),
        virial: virial.iter().map(|p| VirialSeries::new(p.cut.radius)).collect(),
        final_state: Field::zeros(u0.grid()),
        wraparound_limit: wraparound_limit(u0),
        abort: None,
    };
    let mut u = u0.clone();
    let total = cfg.steps();
    let mut step = 0;
    loop {
        let t = step as f64 * cfg.dt;
        let d = diagnostics(&u, v, sigma, cfg.dealias, initial_mass, step, t);
        for (series, probe) in traj.virial.iter_mut().zip(virial) {
            series.push(t, &probe.evaluate_with(&u, cfg.dealias)?);
        }
        traj.diagnostics.push(d);
        if cfg.keep_frames {
            traj.frames.push(u.clone());
        }
        if step > 0 && d.top_band > cfg.max_top_band {
            traj.abort = Some(AbortInfo {
                step,
                time: t,
                reason: format!(
                    "top spectral band carries {:.3e} of the mass (limit {:.3e}); resolution lost",
                    d.top_band, cfg.max_top_band
                ),
            });
            break;
        }
        if step >= total {
            break;
        }
        let chunk = cfg.save_stride.min(total - step);
        if let Err((k, reason)) = stepper.advance(&mut u, chunk, sup_limit) {
            traj.abort = Some(AbortInfo {
                step: step + k,
                time: (step + k) as f64 * cfg.dt,
                reason: format!("{reason}; resolution lost"),
            });
            break;
        }
        step += chunk;
    }
    for s in &mut traj.virial {
        s.finish();
    }
    traj.final_state = u;
    Ok(traj)
}
