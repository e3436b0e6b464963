//! Phase-profile baseline: co-phase the cascaded BS–element–UE paths and
//! realize the phases with reactive loads.
//!
//! A load `Z_k` on an element of characteristic impedance `Z0` reflects with
//! `e^{jθ_k} = (Z_k - Z0)/(Z_k + Z0)`, so `Z_k = j Z0 cot(θ_k/2)`. Only the
//! reactance is kept; the resistance is the common `R0`.

use log::info;

use crate::channel::RisConfig;
use crate::config_opt::BoxSet;
use crate::error::{Error, Result};
use crate::impedance::ImpedanceSet;
use num_complex::Complex64;

/// Phases within this distance of 0 (mod 2π) are treated as the open-circuit limit.
pub const POLE_TOL: f64 = 1e-9;

/// `θ_k = -arg(z_SR,k z_ST,k)`.
pub fn phase_profile_config(imp: &ImpedanceSet) -> Vec<f64> {
    imp.z_sr
        .iter()
        .zip(imp.z_st.iter())
        .map(|(sr, st)| -(sr * st).arg())
        .collect()
}

/// Loads realizing the phases; returns the configuration and the number of
/// reactances clamped into `bounds`.
pub fn phases_to_loads(theta: &[f64], z0: Complex64, r0: f64, bounds: &BoxSet) -> Result<(RisConfig, usize)> {
    if !(z0.re.is_finite() && z0.im.is_finite()) || z0.re == 0.0 {
        return Err(Error::InvalidInput(format!("characteristic impedance {z0} needs a finite nonzero real part")));
    }
    let mut clamps = 0;
    let mut b = Vec::with_capacity(theta.len());
    for (k, &t) in theta.iter().enumerate() {
        if !t.is_finite() {
            return Err(Error::InvalidInput(format!("phase {k} is not finite")));
        }
        let half = 0.5 * t.rem_euclid(2.0 * std::f64::consts::PI);
        let raw = if half.sin().abs() <= POLE_TOL {
            // e^{jθ} = 1 needs |Z| -> ∞
            f64::INFINITY
        } else {
            z0.re / half.tan()
        };
        let v = bounds.clamp(raw);
        if v != raw {
            clamps += 1;
        }
        b.push(v);
    }
    if clamps > 0 {
        info!("phase-profile baseline: {clamps} of {} reactances clamped into the box", theta.len());
    }
    Ok((RisConfig::new(b, r0)?, clamps))
}

/// Reflection phase `arg((Z - Z0)/(Z + Z0))` of a load.
pub fn reflection_phase(z: Complex64, z0: Complex64) -> f64 {
    ((z - z0) / (z + z0)).arg()
}
