//! Radiation patterns, beamwidths and inter-element spacing statistics.
//!
//! Directions use the polar angle `θ` from +z (elevation in the pattern grid)
//! and the azimuth `φ` from +x. Element currents are those induced by a unit
//! BS current, `i = (Z_SS + Z_RIS)⁻¹ z_ST`; each element radiates with the
//! half-wave dipole factor `cos((π/2) cos θ)/sin θ`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::channel::RisConfig;
use crate::error::{Error, Result};
use crate::impedance::{DipoleLayout, ImpedanceSet, Vec3};

/// Sampling of the pattern, in degrees.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleGrid {
    pub azimuth_deg: Vec<f64>,
    pub elevation_deg: Vec<f64>,
}

impl AngleGrid {
    /// `[start, stop]` inclusive in steps of `step` degrees.
    fn span(start: f64, stop: f64, step: f64) -> Vec<f64> {
        let count = ((stop - start) / step + 1e-9).floor() as usize;
        (0..=count).map(|i| start + i as f64 * step).collect()
    }

    /// Azimuth `[-180, 180)` and elevation `[step, 180 - step]`, avoiding the poles.
    pub fn uniform(step_deg: f64) -> Self {
        let mut azimuth_deg = Self::span(-180.0, 180.0, step_deg);
        if azimuth_deg.last().is_some_and(|a| (a - 180.0).abs() < 1e-9) {
            azimuth_deg.pop();
        }
        Self {
            azimuth_deg,
            elevation_deg: Self::span(step_deg, 180.0 - step_deg, step_deg),
        }
    }
}

/// Normalized radiated power in dB; rows follow elevation, columns azimuth.
#[derive(Debug, Clone, PartialEq)]
pub struct Pattern {
    pub grid: AngleGrid,
    pub db: DMatrix<f64>,
}

impl Pattern {
    /// Azimuth cut at the grid elevation nearest to `elevation_deg`.
    pub fn azimuth_cut(&self, elevation_deg: f64) -> (f64, Vec<f64>) {
        let row = nearest(&self.grid.elevation_deg, elevation_deg);
        (self.grid.elevation_deg[row], self.db.row(row).iter().copied().collect())
    }
}

fn nearest(values: &[f64], x: f64) -> usize {
    values
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - x).abs().total_cmp(&(b.1 - x).abs()))
        .map_or(0, |(i, _)| i)
}

/// Unit vector for polar angle `theta` and azimuth `phi` (radians).
pub fn direction(theta: f64, phi: f64) -> Vec3 {
    Vec3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos())
}

/// Polar angle and azimuth (degrees) of `to - from`.
pub fn angles_deg(from: &Vec3, to: &Vec3) -> (f64, f64) {
    let d = to - from;
    let theta = (d.z / d.norm()).clamp(-1.0, 1.0).acos();
    (theta.to_degrees(), d.y.atan2(d.x).to_degrees())
}

/// Currents induced on the elements by a unit BS current.
pub fn induced_currents(imp: &ImpedanceSet, cfg: &RisConfig) -> Result<DVector<Complex64>> {
    let mut a = imp.z_ss.clone();
    for n in 0..cfg.len() {
        a[(n, n)] += cfg.load(n);
    }
    a.lu()
        .solve(&imp.z_st)
        .ok_or(Error::SingularMatrix { condition: f64::INFINITY })
}

/// Complex far-field amplitude of the element currents toward `(theta, phi)`.
pub fn far_field(layout: &DipoleLayout, currents: &DVector<Complex64>, theta: f64, phi: f64) -> Result<Complex64> {
    let s = theta.sin();
    if s.abs() < 1e-12 {
        return Err(Error::Pole(format!("element factor undefined at polar angle {theta}")));
    }
    let element = (0.5 * PI * theta.cos()).cos() / s;
    let k = 2.0 * PI / layout.lambda();
    let r = direction(theta, phi);
    let array: Complex64 = layout
        .positions()
        .iter()
        .zip(currents.iter())
        .map(|(q, i)| i * Complex64::from_polar(1.0, k * r.dot(q)))
        .sum();
    Ok(array * element)
}

/// Pattern of given element currents over `grid`, in dB relative to the peak.
pub fn beampattern_from_currents(layout: &DipoleLayout, currents: &DVector<Complex64>, grid: &AngleGrid) -> Result<Pattern> {
    if grid.azimuth_deg.is_empty() || grid.elevation_deg.is_empty() {
        return Err(Error::InvalidInput("empty angle grid".into()));
    }
    let rows: Vec<Vec<f64>> = grid
        .elevation_deg
        .par_iter()
        .map(|el| {
            grid.azimuth_deg
                .iter()
                .map(|az| far_field(layout, currents, el.to_radians(), az.to_radians()).map(|f| f.norm_sqr()))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let peak = rows.iter().flatten().fold(0.0f64, |m, v| m.max(*v));
    if !(peak > 0.0) {
        return Err(Error::InvalidInput("pattern is identically zero".into()));
    }
    let db = DMatrix::from_fn(rows.len(), grid.azimuth_deg.len(), |i, j| 10.0 * (rows[i][j] / peak).log10());
    Ok(Pattern { grid: grid.clone(), db })
}

/// Normalized pattern radiated by the RIS for loads `cfg`.
pub fn beampattern(layout: &DipoleLayout, cfg: &RisConfig, imp: &ImpedanceSet, grid: &AngleGrid) -> Result<Pattern> {
    beampattern_from_currents(layout, &induced_currents(imp, cfg)?, grid)
}

/// Directivity (dBi) toward `(theta, phi)`, with the total power integrated on
/// a midpoint grid of `step_deg` over the sphere.
pub fn directivity_dbi(layout: &DipoleLayout, currents: &DVector<Complex64>, theta: f64, phi: f64, step_deg: f64) -> Result<f64> {
    let step = step_deg.to_radians();
    let n_theta = (PI / step).round() as usize;
    let n_phi = (2.0 * PI / step).round() as usize;
    let (dt, dp) = (PI / n_theta as f64, 2.0 * PI / n_phi as f64);
    let rows: Vec<f64> = (0..n_theta)
        .into_par_iter()
        .map(|i| {
            let t = (i as f64 + 0.5) * dt;
            let mut s = 0.0;
            for j in 0..n_phi {
                let p = (j as f64 + 0.5) * dp;
                s += far_field(layout, currents, t, p)?.norm_sqr();
            }
            Ok(s * t.sin() * dt * dp)
        })
        .collect::<Result<_>>()?;
    let total: f64 = rows.iter().sum();
    let toward = far_field(layout, currents, theta, phi)?.norm_sqr();
    Ok(10.0 * (4.0 * PI * toward / total).log10())
}

/// Half-power beamwidth (degrees) of a cut given in dB over `angles_deg`.
///
/// Crossings of the level 3.0103 dB below the peak are located by linear
/// interpolation on both sides of the peak. A cut spanning a full turn is
/// treated as periodic.
pub fn hpbw(angles_deg: &[f64], cut_db: &[f64]) -> Result<f64> {
    let n = cut_db.len();
    if n < 2 || angles_deg.len() != n {
        return Err(Error::InvalidInput("cut needs at least two samples and matching angles".into()));
    }
    let (peak_i, peak) = cut_db
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if *v > acc.1 { (i, *v) } else { acc });
    let level = peak + 10.0 * 0.5f64.log10();
    let step = (angles_deg[n - 1] - angles_deg[0]) / (n as f64 - 1.0);
    let periodic = (angles_deg[n - 1] - angles_deg[0] + step - 360.0).abs() < 1e-6 * step.max(1.0);
    let angle = |i: isize| -> f64 {
        let wrapped = i.rem_euclid(n as isize) as usize;
        let turns = i.div_euclid(n as isize) as f64;
        angles_deg[wrapped] + 360.0 * turns
    };
    let value = |i: isize| cut_db[i.rem_euclid(n as isize) as usize];
    let crossing = |dir: isize| -> Option<f64> {
        let start = peak_i as isize;
        for step in 1..n as isize {
            let (i, j) = (start + dir * (step - 1), start + dir * step);
            if !periodic && (j < 0 || j >= n as isize) {
                return None;
            }
            let (vi, vj) = (value(i), value(j));
            if vj <= level {
                let t = (vi - level) / (vi - vj);
                return Some(angle(i) + t * (angle(j) - angle(i)));
            }
        }
        None
    };
    match (crossing(-1), crossing(1)) {
        (Some(lo), Some(hi)) => Ok(hi - lo),
        _ => Err(Error::NoCrossing),
    }
}

/// Retained `λ/d` values and their histogram.
#[derive(Debug, Clone, PartialEq)]
pub struct SpacingHistogram {
    /// `bins + 1` edges.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    /// Retained values, ascending.
    pub values: Vec<f64>,
    /// Percentile threshold on `λ/d`.
    pub threshold: f64,
}

/// Linear-interpolation percentile of sorted data (0–100).
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    let pos = (p / 100.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Histogram of `λ/d_qp` over all pairs, keeping values at or below the given percentile.
pub fn spacing_distribution(layout: &DipoleLayout, lambda: f64, pct: f64, bins: usize) -> Result<SpacingHistogram> {
    let n = layout.len();
    if n < 2 {
        return Err(Error::InvalidInput("spacing needs at least two elements".into()));
    }
    if !(0.0..=100.0).contains(&pct) || bins == 0 {
        return Err(Error::InvalidInput(format!("percentile {pct} or bin count {bins} out of range")));
    }
    let pts = layout.positions();
    let mut all = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            all.push(lambda / (pts[i] - pts[j]).norm());
        }
    }
    all.sort_by(f64::total_cmp);
    let threshold = percentile(&all, pct);
    let values: Vec<f64> = all.into_iter().filter(|v| *v <= threshold).collect();
    let lo = values[0];
    let hi = *values.last().unwrap_or(&lo);
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let edges: Vec<f64> = (0..=bins).map(|i| lo + i as f64 * width).collect();
    let mut counts = vec![0usize; bins];
    for v in &values {
        let b = (((v - lo) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    Ok(SpacingHistogram {
        edges,
        counts,
        values,
        threshold,
    })
}
