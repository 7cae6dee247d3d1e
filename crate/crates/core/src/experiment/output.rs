//! Report, time-series and snapshot files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::propagator::Trajectory;

/// Bumped whenever the column set changes.
pub const TIMESERIES_FORMAT: u32 = 1;

pub const BASE_COLUMNS: [&str; 10] = [
    "t", "step", "mass", "energy_v", "energy_0", "h_form", "l4", "linf", "g", "top_band",
];

/// Per-radius columns, suffixed with `@R`.
pub const VIRIAL_COLUMNS: [&str; 4] = ["z", "dz_analytic", "d2z_analytic", "coercivity"];

/// CSV text of a trajectory. The first line is a comment naming the format
/// version and the library version.
pub fn timeseries_csv(traj: &Trajectory) -> String {
    let mut out = String::new();
    let radii: Vec<String> = traj.virial.iter().map(|s| format!("{}", s.radius)).collect();
    let _ = writeln!(
        out,
        "# nlsv timeseries format {TIMESERIES_FORMAT}; nlsv-core {}; n = {}; L = {}; dt = {}; sigma = {}",
        env!("CARGO_PKG_VERSION"),
        traj.n,
        traj.box_length,
        traj.dt,
        traj.sigma
    );
    let mut header: Vec<String> = BASE_COLUMNS.iter().map(|s| s.to_string()).collect();
    for r in &radii {
        header.extend(VIRIAL_COLUMNS.iter().map(|c| format!("{c}@{r}")));
    }
    let _ = writeln!(out, "{}", header.join(","));
    for (i, d) in traj.diagnostics.iter().enumerate() {
        let mut row = vec![
            d.t.to_string(),
            d.step.to_string(),
            d.mass.to_string(),
            d.energy.to_string(),
            d.free_energy.to_string(),
            d.h_form.to_string(),
            d.l4.to_string(),
            d.linf.to_string(),
            d.g.to_string(),
            d.top_band.to_string(),
        ];
        for s in &traj.virial {
            row.push(s.z[i].to_string());
            row.push(s.dz_analytic[i].to_string());
            row.push(s.d2z_analytic[i].to_string());
            row.push(s.coercivity[i].to_string());
        }
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::InvalidArgument(format!("report serialization: {e}")))?;
    text.push('\n');
    write_text(path, &text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Field, Grid, RealField};
    use crate::propagator::{evolve, EvolutionConfig};
    use crate::virial::VirialProbe;

    #[test]
    fn csv_layout() {
        let g = Grid::new(16, 12.0).unwrap();
        let u = Field::from_fn(&g, |x| {
            num_complex::Complex64::new((-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / 4.0).exp(), 0.0)
        });
        let probe = VirialProbe::new(&g, 2.0, &crate::potentials::PotentialSpec::Zero, 1.0).unwrap();
        let cfg = EvolutionConfig {
            dt: 0.01,
            t_end: 0.05,
            save_stride: 1,
            ..EvolutionConfig::default()
        };
        let traj = evolve(&u, &RealField::zeros(&g), &cfg, &[probe]).unwrap();
        let csv = timeseries_csv(&traj);
        let lines: Vec<&str> = csv.lines().collect();
        assert!(lines[0].starts_with("# nlsv timeseries format 1"));
        assert_eq!(lines[1].split(',').count(), BASE_COLUMNS.len() + VIRIAL_COLUMNS.len());
        assert!(lines[1].ends_with("coercivity@2"));
        assert_eq!(lines.len(), 2 + traj.diagnostics.len());
        for l in &lines[2..] {
            assert_eq!(l.split(',').count(), 14);
        }
    }
}
