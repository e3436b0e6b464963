//! Joint shape and configuration optimization.
//!
//! Each outer iteration optimizes the reactances for the current layout and
//! then sweeps the elements in index order. Element `k` moves along the
//! gradient of `|H|²` with respect to its position, evaluated from the cached
//! inverse through the first-order (Neumann) expansion at zero displacement.
//! The step length is the largest value found by halving and bisection that
//! keeps the expansion in its domain, stays feasible, and increases the exact
//! objective after a full re-solve.

use std::time::Instant;

use log::{debug, info, warn};
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{coupled_term_by_solve, neumann_norm, ChannelState, Perturbation, RisConfig};
use crate::config_opt::{optimize_config, BoxSet, ConfigOptions};
use crate::error::{Error, Port, Result};
use crate::geometry::{Axis, FeasibleSet};
use crate::impedance::{assemble, element_column, DipoleLayout, ImpedanceSet, Vec3, COLINEAR_THRESHOLD};
use crate::scenario::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverSettings {
    /// Stop once the relative improvement of the linear SNR falls to this.
    pub epsilon: f64,
    pub i_max: usize,
    /// Bound on `‖G Δ‖₂` for a position candidate.
    pub neumann_cap: f64,
    /// Relative resolution of the step-length bisection.
    pub bisection_tol: f64,
    /// First trial displacement (m); zero disables position updates.
    pub alpha_init: f64,
    pub max_halvings: usize,
    pub config: ConfigOptions,
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str, v: f64| Err(Error::Validation(format!("{what} must be > 0, got {v}")));
        if !(self.epsilon > 0.0) {
            return bad("epsilon", self.epsilon);
        }
        if self.i_max < 1 {
            return Err(Error::Validation("i_max must be >= 1".into()));
        }
        if !(self.neumann_cap > 0.0) {
            return bad("neumann_cap", self.neumann_cap);
        }
        if !(self.bisection_tol > 0.0) {
            return bad("bisection_tol", self.bisection_tol);
        }
        if !(self.alpha_init >= 0.0 && self.alpha_init.is_finite()) {
            return Err(Error::Validation(format!("alpha_init must be >= 0, got {}", self.alpha_init)));
        }
        if self.config.max_iters < 1 || !(self.config.tol > 0.0) {
            return Err(Error::Validation("config optimizer needs max_iters >= 1 and tol > 0".into()));
        }
        Ok(())
    }
}

/// One outer iteration of [`run_t3dris`]; iteration 0 is the starting point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub snr_db: f64,
    /// `|H|²` after the iteration.
    pub gain: f64,
    /// SNR after the configuration step, before the position sweep.
    pub snr_after_config: f64,
    pub config_iterations: usize,
    /// Accepted step length per element (0 when rejected).
    pub steps: Vec<f64>,
    /// Displacement norm per element.
    pub displacements: Vec<f64>,
    pub accepted: usize,
    pub neumann_rejections: usize,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct OptimizerTrace {
    pub records: Vec<IterationRecord>,
    pub converged: bool,
    /// Elements nudged off a shared dipole axis before the first iteration.
    pub colinear_fixes: usize,
}

impl OptimizerTrace {
    pub fn snr_db(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.snr_db).collect()
    }

    pub fn initial_snr_db(&self) -> f64 {
        self.records[0].snr_db
    }

    pub fn final_snr_db(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.snr_db)
    }

    /// Number of outer iterations run.
    pub fn iterations(&self) -> usize {
        self.records.len().saturating_sub(1)
    }
}

/// `∇_{q_k} |H|²` at the current layout.
///
/// Moving element `k` changes `z_SR,k`, `z_ST,k` and the off-diagonal entries
/// of row and column `k` of `Z_SS`. To first order
/// `∇h = -∇Z_kR g_ST,k - ∇Z_kT g_SR,k + Σ_{n≠k} ∇Z_nk (g_SR,n g_ST,k + g_SR,k g_ST,n)`
/// and `∇|H|² = 2 |Y0|² Re(conj(h) ∇h)`.
pub fn position_gradient(state: &ChannelState, layout: &DipoleLayout, p_bs: &Vec3, p_ue: &Vec3, k: usize) -> Result<Vec3> {
    let kernel = layout.kernel();
    let q = layout.position(k);
    let g_sr = state.g_sr();
    let g_st = state.g_st();
    let terms: Vec<[num_complex::Complex64; 3]> = (0..layout.len())
        .into_par_iter()
        .filter(|&n| n != k)
        .map(|n| {
            let grad = kernel
                .gradient(&q, &layout.position(n))
                .map_err(|e| e.with_pair(Port::Element(k), Port::Element(n)))?;
            let w = g_sr[n] * g_st[k] + g_sr[k] * g_st[n];
            Ok([grad[0] * w, grad[1] * w, grad[2] * w])
        })
        .collect::<Result<_>>()?;
    let grad_ue = kernel.gradient(&q, p_ue).map_err(|e| e.with_pair(Port::Element(k), Port::Ue))?;
    let grad_bs = kernel.gradient(&q, p_bs).map_err(|e| e.with_pair(Port::Element(k), Port::Bs))?;
    let h = state.z_rst();
    let scale = 2.0 * state.y0().norm_sqr();
    let mut out = Vec3::zeros();
    for c in 0..3 {
        let mut dh = -grad_ue[c] * g_st[k] - grad_bs[c] * g_sr[k];
        for t in &terms {
            dh += t[c];
        }
        out[c] = scale * (h.conj() * dh).re;
    }
    Ok(out)
}

/// Outcome of [`update_element`].
#[derive(Debug, Clone)]
pub struct ElementUpdate {
    pub position: Vec3,
    pub layout: DipoleLayout,
    pub state: ChannelState,
    pub accepted: bool,
    pub step: f64,
    pub neumann_rejections: usize,
}

/// Impedances with every entry involving element `k` replaced.
fn replace_element(imp: &ImpedanceSet, k: usize, col: &crate::impedance::ElementColumn) -> ImpedanceSet {
    let mut out = imp.clone();
    for i in 0..imp.len() {
        out.z_ss[(i, k)] = col.z_ss[i];
        out.z_ss[(k, i)] = col.z_ss[i];
    }
    out.z_sr[k] = col.z_sr;
    out.z_st[k] = col.z_st;
    out
}

enum Trial {
    Accept { q: Vec3, imp: ImpedanceSet },
    Reject,
}

/// Moves element `k` along its gradient, keeping the move only if the exact
/// objective strictly increases. The returned state is exactly refreshed.
pub fn update_element(
    state: &ChannelState,
    layout: &DipoleLayout,
    k: usize,
    set: &FeasibleSet,
    settings: &SolverSettings,
    p_bs: &Vec3,
    p_ue: &Vec3,
) -> Result<ElementUpdate> {
    let q = layout.position(k);
    let unchanged = |neumann_rejections| ElementUpdate {
        position: q,
        layout: layout.clone(),
        state: state.clone(),
        accepted: false,
        step: 0.0,
        neumann_rejections,
    };
    if settings.alpha_init == 0.0 {
        return Ok(unchanged(0));
    }
    let grad = position_gradient(state, layout, p_bs, p_ue, k)?;
    let imp = state.impedances();
    let f0 = state.gain();
    let self_z = imp.z_ss[(k, k)];
    let y0n = state.y0().norm_sqr();
    let threshold = COLINEAR_THRESHOLD * layout.lambda();
    let mut neumann_rejections = 0;

    let mut trial = |alpha: f64| -> Result<Trial> {
        let Some(raw) = set.ascent_candidate(&q, &grad, alpha)? else {
            return Ok(Trial::Reject);
        };
        let cand = set.project(&raw);
        if cand == q || !cand.iter().all(|v| v.is_finite()) {
            return Ok(Trial::Reject);
        }
        // the position gradient is undefined on a shared axis
        if (0..layout.len()).any(|l| l != k && transverse_offset(&cand, &layout.position(l)) < threshold) {
            return Ok(Trial::Reject);
        }
        let col = match element_column(layout, k, &cand, p_bs, p_ue, self_z) {
            Ok(c) => c,
            Err(Error::Colinear { .. } | Error::Overlap { .. }) => return Ok(Trial::Reject),
            Err(e) => return Err(e),
        };
        let mut pert = Perturbation::zero(imp.len(), k);
        for i in 0..imp.len() {
            if i != k {
                pert.delta_col[i] = col.z_ss[i] - imp.z_ss[(i, k)];
            }
        }
        pert.delta_sr = col.z_sr - imp.z_sr[k];
        pert.delta_st = col.z_st - imp.z_st[k];
        if neumann_norm(state, &pert) > settings.neumann_cap {
            neumann_rejections += 1;
            return Ok(Trial::Reject);
        }
        let moved = replace_element(imp, k, &col);
        match coupled_term_by_solve(&moved, state.config()) {
            Ok(h) if y0n * h.norm_sqr() > f0 => Ok(Trial::Accept { q: cand, imp: moved }),
            Ok(_) | Err(Error::SingularMatrix { .. }) => Ok(Trial::Reject),
            Err(e) => Err(e),
        }
    };

    let mut alpha = settings.alpha_init;
    let mut best = None;
    let mut failed_above = None;
    for _ in 0..=settings.max_halvings {
        match trial(alpha)? {
            Trial::Accept { q, imp } => {
                best = Some((alpha, q, imp));
                break;
            }
            Trial::Reject => {
                failed_above = Some(alpha);
                alpha *= 0.5;
            }
        }
    }
    let Some((mut lo, mut q_best, mut imp_best)) = best else {
        return Ok(unchanged(neumann_rejections));
    };
    if let Some(mut hi) = failed_above {
        while hi - lo > settings.bisection_tol * lo {
            let mid = 0.5 * (lo + hi);
            match trial(mid)? {
                Trial::Accept { q, imp } => {
                    lo = mid;
                    q_best = q;
                    imp_best = imp;
                }
                Trial::Reject => hi = mid,
            }
        }
    }
    let mut new_layout = layout.clone();
    new_layout.set_position(k, q_best);
    let new_state = state.refresh_impedances(imp_best)?;
    if new_state.gain() <= f0 {
        // the inverse-based value disagrees with the solve at rounding level
        return Ok(unchanged(neumann_rejections));
    }
    Ok(ElementUpdate {
        position: q_best,
        layout: new_layout,
        state: new_state,
        accepted: true,
        step: lo,
        neumann_rejections,
    })
}

fn transverse_offset(a: &Vec3, b: &Vec3) -> f64 {
    (a.x - b.x).hypot(a.y - b.y)
}

/// Projects every element into `set` and nudges elements that share a dipole
/// axis with an earlier one by the wire radius, along x or (for sets that
/// pin x) along y. Returns the number of nudges.
pub fn prepare_layout(layout: &DipoleLayout, set: &FeasibleSet) -> Result<(DipoleLayout, usize)> {
    let mut out = layout.clone();
    let a = layout.wire_radius();
    let threshold = COLINEAR_THRESHOLD * layout.lambda();
    let dir = match set.fixed_axis() {
        Some(Axis::X) => Vec3::new(0.0, 1.0, 0.0),
        _ => Vec3::new(1.0, 0.0, 0.0),
    };
    let mut fixes = 0;
    for k in 0..out.len() {
        let mut q = set.project(&out.position(k));
        if q != out.position(k) {
            debug!("element {k} projected into the feasible set");
        }
        let mut tries = 0;
        while (0..k).any(|l| transverse_offset(&q, &out.position(l)) < threshold) {
            tries += 1;
            if tries > 1000 {
                return Err(Error::Geometry(format!("could not move element {k} off a shared dipole axis")));
            }
            let nudged = set.project(&(q + dir * a));
            q = if nudged == q { set.project(&(q - dir * (a * tries as f64))) } else { nudged };
            fixes += 1;
        }
        if tries > 0 {
            warn!("element {k} shared a dipole axis; moved by {:.3e} m", (q - out.position(k)).norm());
        }
        out.set_position(k, q);
    }
    Ok((out, fixes))
}

/// Alternates configuration optimization and element position sweeps until the
/// relative SNR improvement drops to `settings.epsilon` or `settings.i_max`
/// outer iterations have run.
pub fn run_t3dris(
    scenario: &Scenario,
    layout0: &DipoleLayout,
    set: &FeasibleSet,
    bounds: &BoxSet,
    settings: &SolverSettings,
) -> Result<(DipoleLayout, RisConfig, OptimizerTrace)> {
    settings.validate()?;
    set.validate()?;
    let (mut layout, colinear_fixes) = prepare_layout(layout0, set)?;
    let imp = assemble(&layout, &scenario.p_bs, &scenario.p_ue)?;
    let mut state = ChannelState::new(imp, RisConfig::resistive(layout.len(), scenario.r0), scenario.y0)?;
    let n = layout.len();
    let snr_of = |s: &ChannelState| scenario.snr_db(s.h());
    let mut trace = OptimizerTrace {
        records: vec![IterationRecord {
            iter: 0,
            snr_db: snr_of(&state),
            gain: state.gain(),
            snr_after_config: snr_of(&state),
            config_iterations: 0,
            steps: vec![0.0; n],
            displacements: vec![0.0; n],
            accepted: 0,
            neumann_rejections: 0,
            wall_time_s: 0.0,
        }],
        converged: false,
        colinear_fixes,
    };
    let mut prev = state.gain();
    for iter in 1..=settings.i_max {
        let started = Instant::now();
        let (s, ctrace) = optimize_config(&state, bounds, &settings.config)?;
        state = s;
        let snr_after_config = snr_of(&state);
        let mut steps = vec![0.0; n];
        let mut displacements = vec![0.0; n];
        let mut accepted = 0;
        let mut neumann_rejections = 0;
        for k in 0..n {
            let before = layout.position(k);
            let up = update_element(&state, &layout, k, set, settings, &scenario.p_bs, &scenario.p_ue)?;
            neumann_rejections += up.neumann_rejections;
            if up.accepted {
                accepted += 1;
                steps[k] = up.step;
                displacements[k] = (up.position - before).norm();
                layout = up.layout;
                state = up.state;
            }
        }
        let gain = state.gain();
        trace.records.push(IterationRecord {
            iter,
            snr_db: snr_of(&state),
            gain,
            snr_after_config,
            config_iterations: ctrace.iterations + ctrace.sweeps,
            steps,
            displacements,
            accepted,
            neumann_rejections,
            wall_time_s: started.elapsed().as_secs_f64(),
        });
        debug!("iteration {iter}: SNR {:.6} dB, {accepted}/{n} moves", snr_of(&state));
        let improvement = (gain - prev) / prev;
        prev = gain;
        if improvement <= settings.epsilon {
            trace.converged = true;
            break;
        }
    }
    info!(
        "T3DRIS: {} iterations, SNR {:.4} -> {:.4} dB",
        trace.iterations(),
        trace.initial_snr_db(),
        trace.final_snr_db()
    );
    Ok((layout, state.config().clone(), trace))
}
