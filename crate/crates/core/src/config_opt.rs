//! Reactance optimization for a fixed layout.
//!
//! Maximizes `|H|²` over the box `b_min <= b_n <= b_max` in two stages.
//! Changing one reactance is a rank-1 update of `Z_SS + Z_RIS`, so `H` is a
//! Möbius function of each `b_n` and its one-dimensional maximum over the box
//! has a closed form; exact coordinate sweeps escape the poor local optima a
//! pure gradient method falls into. Projected gradient ascent (analytic
//! gradient `∂H/∂b_n = j Y0 g_SR,n g_ST,n`, Armijo backtracking,
//! Barzilai–Borwein steps) then polishes the result.

use log::debug;
use nalgebra::DVector;
use num_complex::Complex64;
use serde::Serialize;

use crate::channel::{ChannelState, RisConfig};
use crate::error::{Error, Result};

/// Box of admissible reactances (ohms).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxSet {
    pub b_min: f64,
    pub b_max: f64,
}

impl BoxSet {
    pub fn new(b_min: f64, b_max: f64) -> Result<Self> {
        if !(b_min.is_finite() && b_max.is_finite() && b_min < b_max) {
            return Err(Error::Validation(format!(
                "reactance box needs b_min < b_max, got [{b_min}, {b_max}]"
            )));
        }
        Ok(Self { b_min, b_max })
    }

    pub fn clamp(&self, b: f64) -> f64 {
        b.clamp(self.b_min, self.b_max)
    }

    pub fn contains(&self, b: f64) -> bool {
        b >= self.b_min && b <= self.b_max
    }
}

/// Step-control parameters of [`optimize_config`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConfigOptions {
    pub max_iters: usize,
    /// Stop once no reactance moves by more than this (ohms).
    pub tol: f64,
    /// Largest reactance change (ohms) of a first or fallback trial step.
    pub initial_move: f64,
    pub armijo: f64,
    pub shrink: f64,
    /// Upper bound on exact coordinate sweeps before the gradient stage.
    pub max_sweeps: usize,
}

impl Default for ConfigOptions {
    fn default() -> Self {
        Self {
            max_iters: 500,
            tol: 1e-6,
            initial_move: 10.0,
            armijo: 1e-4,
            shrink: 0.5,
            max_sweeps: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigTrace {
    /// `|H|²` at the start, after every coordinate sweep and after every accepted gradient step.
    pub objective: Vec<f64>,
    pub sweeps: usize,
    pub iterations: usize,
    pub converged: bool,
}

/// `∂|H|²/∂b_n = 2 Re(conj(H) j Y0 g_SR,n g_ST,n)`.
pub fn config_gradient(state: &ChannelState) -> DVector<f64> {
    let h = state.h();
    let jy0 = Complex64::new(0.0, 1.0) * state.y0();
    DVector::from_iterator(
        state.len(),
        state
            .g_sr()
            .iter()
            .zip(state.g_st().iter())
            .map(|(sr, st)| 2.0 * (h.conj() * jy0 * sr * st).re),
    )
}

fn max_abs(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Relative objective gain below which coordinate sweeps stop.
const SWEEP_GAIN: f64 = 1e-12;

/// Gains below this are indistinguishable from rounding in `|H|²`.
fn roundoff(f: f64) -> f64 {
    16.0 * f64::EPSILON * f
}

/// Maximizes `|H|²` over the reactances starting from `state`'s configuration
/// (clamped into the box). Returns the best state found and the objective trace.
///
/// Trial points that make the system singular count as failed line-search
/// steps, so the call never fails once `state` itself is valid.
pub fn optimize_config(state: &ChannelState, bounds: &BoxSet, opts: &ConfigOptions) -> Result<(ChannelState, ConfigTrace)> {
    let n = state.len();
    let r0 = state.config().r0;
    let start_b: Vec<f64> = state.config().b.iter().map(|b| bounds.clamp(*b)).collect();
    let mut current = if start_b == state.config().b {
        state.clone()
    } else {
        state.refresh_config(RisConfig::new(start_b, r0)?)?
    };
    let mut f = current.gain();
    let mut sweeps = 0;
    let mut sweep_objective = vec![f];
    while sweeps < opts.max_sweeps {
        let b = coordinate_sweep(&current, bounds);
        sweeps += 1;
        let Ok(next) = current.refresh_config(RisConfig { b, r0 }) else {
            break;
        };
        let f_next = next.gain();
        // sweeps only pay off while they gain noticeably; the gradient stage polishes
        if !(f_next > f * (1.0 + SWEEP_GAIN)) {
            break;
        }
        current = next;
        f = f_next;
        sweep_objective.push(f);
    }
    let mut grad = config_gradient(&current);
    let mut trace = ConfigTrace {
        objective: sweep_objective,
        sweeps,
        iterations: 0,
        converged: false,
    };
    let fallback = |g: &DVector<f64>| {
        let m = max_abs(g);
        if m > 0.0 {
            opts.initial_move / m
        } else {
            0.0
        }
    };
    let mut t = fallback(&grad);

    for _ in 0..opts.max_iters {
        if t == 0.0 {
            trace.converged = true;
            break;
        }
        let b = &current.config().b;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = (0..n).map(|i| bounds.clamp(b[i] + t * grad[i])).collect();
            let step = DVector::from_iterator(n, (0..n).map(|i| trial[i] - b[i]));
            if max_abs(&step) == 0.0 {
                break;
            }
            let predicted = grad.dot(&step);
            if let Ok(next) = current.refresh_config(RisConfig { b: trial, r0 }) {
                let f_next = next.gain();
                if f_next >= f + opts.armijo * predicted && f_next > f + roundoff(f) {
                    accepted = Some((next, f_next, step));
                    break;
                }
            }
            t *= opts.shrink;
        }
        let Some((next, f_next, step)) = accepted else {
            trace.converged = true;
            break;
        };
        let grad_next = config_gradient(&next);
        let y = &grad_next - &grad;
        let sy = step.dot(&y);
        let ss = step.dot(&step);
        trace.iterations += 1;
        trace.objective.push(f_next);
        let moved = max_abs(&step);
        current = next;
        f = f_next;
        grad = grad_next;
        if moved <= opts.tol {
            trace.converged = true;
            break;
        }
        // ascent: curvature along the step is negative near a maximum
        t = if sy < 0.0 { ss / -sy } else { fallback(&grad) };
        let cap = 10.0 * (bounds.b_max - bounds.b_min);
        if t * max_abs(&grad) > cap {
            t = cap / max_abs(&grad);
        }
    }
    debug!(
        "config optimizer: {} sweeps, {} iterations, |H|^2 {:.6e} -> {:.6e}",
        trace.sweeps,
        trace.iterations,
        trace.objective[0],
        f
    );
    Ok((current, trace))
}

/// One pass of exact coordinate maximization over all reactances.
///
/// With `t` the change of `b_n`, Sherman–Morrison gives
/// `Z_RST(t) = (Z + t u) / (1 + t v)` with `u = j(g_SR,n g_ST,n + Z G_nn)`,
/// `v = j G_nn`. `|Z_RST|²` is then a ratio of real quadratics whose stationary
/// points solve a quadratic. `G` is updated in place after every coordinate.
fn coordinate_sweep(state: &ChannelState, bounds: &BoxSet) -> Vec<f64> {
    let n = state.len();
    let j = Complex64::new(0.0, 1.0);
    let mut b = state.config().b.clone();
    let mut g = state.g().clone();
    let mut g_sr = state.g_sr().clone();
    let mut g_st = state.g_st().clone();
    let mut z = state.z_rst();
    for k in 0..n {
        let gkk = g[(k, k)];
        let c = g_sr[k] * g_st[k];
        let u = j * (c + z * gkk);
        let v = j * gkk;
        let value = |t: f64| ((z + u * t) / (1.0 + v * t)).norm_sqr();
        let (lo, hi) = (bounds.b_min - b[k], bounds.b_max - b[k]);
        let mut best_t = 0.0;
        let mut best = value(0.0);
        for t in stationary_points(z, u, v).into_iter().chain([lo, hi]) {
            if t >= lo && t <= hi {
                let f = value(t);
                if f.is_finite() && f > best {
                    best = f;
                    best_t = t;
                }
            }
        }
        if best_t == 0.0 {
            continue;
        }
        let denom = 1.0 + v * best_t;
        let scale = j * best_t / denom;
        let col = g.column(k).clone_owned();
        // G <- G - (j t / (1 + j t G_kk)) g_k g_kᵀ
        g -= &col * col.transpose() * scale;
        g_sr -= &col * (scale * g_sr[k]);
        g_st -= &col * (scale * g_st[k]);
        z = (z + u * best_t) / denom;
        b[k] = bounds.clamp(b[k] + best_t);
    }
    b
}

/// Real roots of `d/dt |z + t u|² / |1 + t v|²`.
fn stationary_points(z: Complex64, u: Complex64, v: Complex64) -> Vec<f64> {
    let (n0, n1, n2) = (z.norm_sqr(), 2.0 * (z.conj() * u).re, u.norm_sqr());
    let (d0, d1, d2) = (1.0, 2.0 * v.re, v.norm_sqr());
    let a = n2 * d1 - n1 * d2;
    let bq = 2.0 * (n2 * d0 - n0 * d2);
    let c = n1 * d0 - n0 * d1;
    let scale = a.abs().max(bq.abs()).max(c.abs());
    if scale == 0.0 {
        return Vec::new();
    }
    if a.abs() <= 1e-14 * scale {
        return if bq != 0.0 { vec![-c / bq] } else { Vec::new() };
    }
    let disc = bq * bq - 4.0 * a * c;
    if disc < 0.0 {
        return Vec::new();
    }
    let q = -0.5 * (bq + bq.signum() * disc.sqrt());
    let mut roots = vec![q / a];
    if q != 0.0 {
        roots.push(c / q);
    }
    roots
}
