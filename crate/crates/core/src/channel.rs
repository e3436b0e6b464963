//! End-to-end channel, cached inverse and the rank-structured Neumann update.
//!
//! `H = Y0 [Z_RT - z_SRᵀ (Z_SS + Z_RIS)⁻¹ z_ST]` with `Z_RIS = diag(R0 + j b)`.
//! A [`ChannelState`] keeps `G = (Z_SS + Z_RIS)⁻¹` together with
//! `g_ST = G z_ST`, `g_SR = G z_SR` and `Z_RST = Z_RT - z_SRᵀ g_ST`, which is
//! everything the first-order expansion of a single-element move needs.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::impedance::ImpedanceSet;

/// Largest accepted 1-norm condition estimate of `Z_SS + Z_RIS`.
pub const MAX_CONDITION: f64 = 1e12;

/// Default bound on `‖G Δ‖₂` for the Neumann expansion.
pub const NEUMANN_CAP: f64 = 0.1;

/// Tunable reactances and the common loss resistance of the RIS loads.
#[derive(Debug, Clone, PartialEq)]
pub struct RisConfig {
    pub b: Vec<f64>,
    pub r0: f64,
}

impl RisConfig {
    pub fn new(b: Vec<f64>, r0: f64) -> Result<Self> {
        if !(r0 >= 0.0 && r0.is_finite()) {
            return Err(Error::Validation(format!("R0 must be >= 0, got {r0}")));
        }
        if let Some(i) = b.iter().position(|v| !v.is_finite()) {
            return Err(Error::Validation(format!("reactance {i} is not finite")));
        }
        Ok(Self { b, r0 })
    }

    /// All-zero reactances: purely resistive loads.
    pub fn resistive(n: usize, r0: f64) -> Self {
        Self { b: vec![0.0; n], r0 }
    }

    pub fn len(&self) -> usize {
        self.b.len()
    }

    pub fn is_empty(&self) -> bool {
        self.b.is_empty()
    }

    pub fn load(&self, n: usize) -> Complex64 {
        Complex64::new(self.r0, self.b[n])
    }
}

fn loaded_matrix(z_ss: &DMatrix<Complex64>, cfg: &RisConfig) -> DMatrix<Complex64> {
    let mut a = z_ss.clone();
    for n in 0..cfg.len() {
        a[(n, n)] += cfg.load(n);
    }
    a
}

fn check_sizes(imp: &ImpedanceSet, cfg: &RisConfig) -> Result<()> {
    let n = imp.len();
    if imp.z_st.len() != n || imp.z_ss.shape() != (n, n) || cfg.len() != n {
        return Err(Error::InvalidInput(format!(
            "size mismatch: z_SR {}, z_ST {}, Z_SS {:?}, b {}",
            n,
            imp.z_st.len(),
            imp.z_ss.shape(),
            cfg.len()
        )));
    }
    Ok(())
}

fn one_norm(m: &DMatrix<Complex64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn invert(a: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    let inv = a
        .clone()
        .lu()
        .try_inverse()
        .ok_or(Error::SingularMatrix { condition: f64::INFINITY })?;
    let condition = one_norm(a) * one_norm(&inv);
    if !condition.is_finite() || condition > MAX_CONDITION {
        return Err(Error::SingularMatrix { condition });
    }
    Ok(inv)
}

fn bilinear(u: &DVector<Complex64>, v: &DVector<Complex64>) -> Complex64 {
    u.iter().zip(v.iter()).map(|(a, b)| a * b).sum()
}

/// `H = Y0 [Z_RT - z_SRᵀ (Z_SS + Z_RIS)⁻¹ z_ST]` by a dense solve.
pub fn end_to_end_channel(imp: &ImpedanceSet, cfg: &RisConfig, y0: Complex64) -> Result<Complex64> {
    check_sizes(imp, cfg)?;
    let a = loaded_matrix(&imp.z_ss, cfg);
    let g = invert(&a)?;
    Ok(y0 * (imp.z_rt - bilinear(&imp.z_sr, &(&g * &imp.z_st))))
}

/// `Z_RT - z_SRᵀ (Z_SS + Z_RIS)⁻¹ z_ST` via one LU solve, no inverse formed.
///
/// Cheaper than [`end_to_end_channel`]; singularity is detected from the LU
/// pivots only.
pub fn coupled_term_by_solve(imp: &ImpedanceSet, cfg: &RisConfig) -> Result<Complex64> {
    check_sizes(imp, cfg)?;
    let lu = loaded_matrix(&imp.z_ss, cfg).lu();
    let x = lu
        .solve(&imp.z_st)
        .ok_or(Error::SingularMatrix { condition: f64::INFINITY })?;
    let h = imp.z_rt - bilinear(&imp.z_sr, &x);
    if !(h.re.is_finite() && h.im.is_finite()) {
        return Err(Error::SingularMatrix { condition: f64::INFINITY });
    }
    Ok(h)
}

/// SNR in dB for channel `h`, transmit power `p` and noise power `sigma2` (watts).
pub fn snr(h: Complex64, p: f64, sigma2: f64) -> f64 {
    10.0 * (p * h.norm_sqr() / sigma2).log10()
}

/// Channel, cached inverse and derived products for one (layout, configuration) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelState {
    impedances: ImpedanceSet,
    config: RisConfig,
    y0: Complex64,
    g: DMatrix<Complex64>,
    g_st: DVector<Complex64>,
    g_sr: DVector<Complex64>,
    z_rst: Complex64,
}

impl ChannelState {
    pub fn new(impedances: ImpedanceSet, config: RisConfig, y0: Complex64) -> Result<Self> {
        check_sizes(&impedances, &config)?;
        let g = invert(&loaded_matrix(&impedances.z_ss, &config))?;
        let g_st = &g * &impedances.z_st;
        let g_sr = &g * &impedances.z_sr;
        let z_rst = impedances.z_rt - bilinear(&impedances.z_sr, &g_st);
        Ok(Self {
            impedances,
            config,
            y0,
            g,
            g_st,
            g_sr,
            z_rst,
        })
    }

    /// New state for changed impedances, same configuration.
    pub fn refresh_impedances(&self, impedances: ImpedanceSet) -> Result<Self> {
        Self::new(impedances, self.config.clone(), self.y0)
    }

    /// New state for a changed configuration, same impedances.
    pub fn refresh_config(&self, config: RisConfig) -> Result<Self> {
        Self::new(self.impedances.clone(), config, self.y0)
    }

    pub fn len(&self) -> usize {
        self.config.len()
    }

    pub fn is_empty(&self) -> bool {
        self.config.is_empty()
    }

    pub fn impedances(&self) -> &ImpedanceSet {
        &self.impedances
    }

    pub fn config(&self) -> &RisConfig {
        &self.config
    }

    pub fn y0(&self) -> Complex64 {
        self.y0
    }

    pub fn g(&self) -> &DMatrix<Complex64> {
        &self.g
    }

    pub fn g_st(&self) -> &DVector<Complex64> {
        &self.g_st
    }

    pub fn g_sr(&self) -> &DVector<Complex64> {
        &self.g_sr
    }

    /// `Z_RST = Z_RT - z_SRᵀ G z_ST`, the channel without the `Y0` factor.
    pub fn z_rst(&self) -> Complex64 {
        self.z_rst
    }

    /// End-to-end channel `H = Y0 Z_RST`.
    pub fn h(&self) -> Complex64 {
        self.y0 * self.z_rst
    }

    /// `|H|²`, the quantity every optimizer in the crate maximizes.
    pub fn gain(&self) -> f64 {
        self.h().norm_sqr()
    }

    pub fn snr_db(&self, p: f64, sigma2: f64) -> f64 {
        snr(self.h(), p, sigma2)
    }

    /// `‖(Z_SS + Z_RIS) G - I‖_F`.
    pub fn inverse_residual(&self) -> f64 {
        let n = self.len();
        let a = loaded_matrix(&self.impedances.z_ss, &self.config);
        (a * &self.g - DMatrix::<Complex64>::identity(n, n)).norm()
    }
}

/// Change of row/column `k` of `Z_SS` and of the `k`-th BS/UE links caused by moving element `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Perturbation {
    pub k: usize,
    /// The only non-zero column of `Δ_SS`; entry `k` is the diagonal change.
    pub delta_col: DVector<Complex64>,
    pub delta_sr: Complex64,
    pub delta_st: Complex64,
}

impl Perturbation {
    pub fn zero(n: usize, k: usize) -> Self {
        Self {
            k,
            delta_col: DVector::zeros(n),
            delta_sr: Complex64::new(0.0, 0.0),
            delta_st: Complex64::new(0.0, 0.0),
        }
    }

    /// Dense `Δ_SS = δ e_kᵀ + e_k δᵀ - δ_kk e_k e_kᵀ`.
    pub fn delta_matrix(&self) -> DMatrix<Complex64> {
        let n = self.delta_col.len();
        let mut d = DMatrix::zeros(n, n);
        for i in 0..n {
            d[(i, self.k)] = self.delta_col[i];
            d[(self.k, i)] = self.delta_col[i];
        }
        d
    }
}

/// Spectral norm `‖G Δ_SS‖₂`, exact for the rank-2 structure of `Δ_SS`.
///
/// With `δ' = δ - δ_k e_k`, `GΔ = (Gδ) e_kᵀ + g_k δ'ᵀ`, so its squared norm is
/// the largest eigenvalue of a 2×2 Gram product.
pub fn neumann_norm(state: &ChannelState, pert: &Perturbation) -> f64 {
    let k = pert.k;
    let x = state.g() * &pert.delta_col;
    let y = state.g().column(k);
    let a11 = x.norm_squared();
    let a22 = y.norm_squared();
    let a12: Complex64 = x.iter().zip(y.iter()).map(|(u, v)| u.conj() * v).sum();
    let s: f64 = pert
        .delta_col
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != k)
        .map(|(_, v)| v.norm_sqr())
        .sum();
    let tr = a11 + a22 * s;
    let det = (s * (a11 * a22 - a12.norm_sqr())).max(0.0);
    let disc = (tr * tr - 4.0 * det).max(0.0).sqrt();
    (0.5 * (tr + disc)).sqrt()
}

/// First-order (Neumann) estimate of `Z_RST` after the perturbation, using the
/// default cap [`NEUMANN_CAP`].
pub fn neumann_perturbed_channel(state: &ChannelState, pert: &Perturbation) -> Result<Complex64> {
    neumann_perturbed_channel_capped(state, pert, NEUMANN_CAP)
}

/// First-order estimate of `Z_RST` after the perturbation:
///
/// `Z_RT - (z_SR + δ_SR e_k)ᵀ (G - G Δ G) (z_ST + δ_ST e_k)`,
///
/// evaluated in O(N) from `g_ST`, `g_SR` and column `k` of `G`.
pub fn neumann_perturbed_channel_capped(
    state: &ChannelState,
    pert: &Perturbation,
    cap: f64,
) -> Result<Complex64> {
    let n = state.len();
    let k = pert.k;
    if k >= n || pert.delta_col.len() != n {
        return Err(Error::InvalidInput(format!(
            "perturbation of element {k} with {} entries for N = {n}",
            pert.delta_col.len()
        )));
    }
    let norm = neumann_norm(state, pert);
    if norm > cap {
        return Err(Error::ApproximationDomain { norm, cap });
    }
    Ok(neumann_value(state, pert))
}

fn neumann_value(state: &ChannelState, pert: &Perturbation) -> Complex64 {
    let k = pert.k;
    let g = state.g();
    let gk = g.column(k);
    let (dsr, dst) = (pert.delta_sr, pert.delta_st);
    let g_sr = state.g_sr();
    let g_st = state.g_st();

    // a = Gᵀ(z_SR + δ_SR e_k), b = G(z_ST + δ_ST e_k); G is symmetric
    let mut a_dot_delta = Complex64::new(0.0, 0.0);
    let mut delta_dot_b = Complex64::new(0.0, 0.0);
    for i in 0..state.len() {
        let a_i = g_sr[i] + dsr * gk[i];
        a_dot_delta += a_i * pert.delta_col[i];
        if i != k {
            let b_i = g_st[i] + dst * gk[i];
            delta_dot_b += pert.delta_col[i] * b_i;
        }
    }
    let a_k = g_sr[k] + dsr * gk[k];
    let b_k = g_st[k] + dst * gk[k];

    state.z_rst() - dsr * g_st[k] - dst * g_sr[k] - dsr * dst * g[(k, k)]
        + a_dot_delta * b_k
        + a_k * delta_dot_b
}

#[cfg(test)]
#[path = "../tests/common/oracle.rs"]
mod oracle;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::impedance::{assemble, DipoleLayout, Vec3};

    fn small_scenario(n: usize) -> ImpedanceSet {
        let lambda = 0.01;
        let positions = (0..n)
            .map(|i| Vec3::new(0.0, (i as f64 - (n as f64 - 1.0) / 2.0) * lambda / 2.0, 0.0007 * i as f64))
            .collect();
        let layout = DipoleLayout::half_wave(positions, lambda, lambda / 500.0).unwrap();
        assemble(&layout, &Vec3::new(1.3, 0.0, 0.0), &Vec3::new(0.98, 0.56, -0.65)).unwrap()
    }

    #[test]
    fn no_cascade_gives_direct_path() {
        let mut imp = small_scenario(3);
        imp.z_sr = DVector::zeros(3);
        let y0 = Complex64::new(1.0, 0.0);
        let h = end_to_end_channel(&imp, &RisConfig::resistive(3, 0.2), y0).unwrap();
        assert_eq!(h, y0 * imp.z_rt);
    }

    #[test]
    fn single_element_scalar_inverse() {
        let imp = small_scenario(1);
        let cfg = RisConfig::new(vec![-40.0], 0.2).unwrap();
        let y0 = Complex64::new(0.7, 0.1);
        let h = end_to_end_channel(&imp, &cfg, y0).unwrap();
        let want = y0 * (imp.z_rt - imp.z_sr[0] * imp.z_st[0] / (imp.z_ss[(0, 0)] + Complex64::new(0.2, -40.0)));
        assert!((h - want).norm() <= 1e-14 * want.norm());
    }

    #[test]
    fn state_matches_direct_solve() {
        let imp = small_scenario(6);
        let b = vec![-30.0, 10.0, -100.0, 150.0, -4000.0, 0.0];
        let state = ChannelState::new(imp.clone(), RisConfig::new(b.clone(), 0.2).unwrap(), Complex64::new(1.0, 0.0)).unwrap();
        let direct = oracle::channel_direct(imp.z_rt, &imp.z_sr, &imp.z_st, &imp.z_ss, 0.2, &b);
        assert!((state.h() - direct).norm() <= 1e-10 * direct.norm());
        assert!(state.inverse_residual() <= 1e-8 * 6.0);
    }

    #[test]
    fn g_is_symmetric() {
        let state = ChannelState::new(small_scenario(5), RisConfig::resistive(5, 0.2), Complex64::new(1.0, 0.0)).unwrap();
        let g = state.g();
        let scale = g.norm();
        assert!((g - g.transpose()).norm() <= 1e-10 * scale);
    }

    #[test]
    fn snr_reference_values() {
        let p: f64 = 0.01;
        let sigma2 = 1e-11;
        let unit = Complex64::new((sigma2 / p).sqrt(), 0.0);
        assert!(snr(unit, p, sigma2).abs() < 1e-12);
        let h = Complex64::new(0.003, -0.002);
        assert!((snr(h, 2.0 * p, sigma2) - snr(h, p, sigma2) - 3.010_299_956_639_812).abs() < 1e-10);
        // 10 dBm and -80 dBm: SNR = 90 dB + 10 log10 |H|²
        assert!((snr(h, 1e-2, 1e-11) - (90.0 + 10.0 * h.norm_sqr().log10())).abs() < 1e-10);
        let rotated = h * Complex64::from_polar(1.0, 1.234);
        assert!((snr(rotated, p, sigma2) - snr(h, p, sigma2)).abs() < 1e-12);
    }

    #[test]
    fn singular_system_is_reported() {
        let mut imp = small_scenario(2);
        imp.z_ss = DMatrix::zeros(2, 2);
        let cfg = RisConfig::new(vec![0.0, 0.0], 0.0).unwrap();
        let r = end_to_end_channel(&imp, &cfg, Complex64::new(1.0, 0.0));
        assert!(matches!(r, Err(Error::SingularMatrix { .. })));
    }

    #[test]
    fn zero_perturbation_returns_cached_channel() {
        let state = ChannelState::new(small_scenario(4), RisConfig::resistive(4, 0.2), Complex64::new(1.0, 0.0)).unwrap();
        let h = neumann_perturbed_channel(&state, &Perturbation::zero(4, 2)).unwrap();
        assert_eq!(h, state.z_rst());
    }

    #[test]
    fn rank_two_norm_matches_svd() {
        let state = ChannelState::new(small_scenario(5), RisConfig::resistive(5, 0.2), Complex64::new(1.0, 0.0)).unwrap();
        let pert = Perturbation {
            k: 1,
            delta_col: DVector::from_vec(vec![
                Complex64::new(0.3, -0.1),
                Complex64::new(0.05, 0.02),
                Complex64::new(-0.2, 0.4),
                Complex64::new(0.0, 0.1),
                Complex64::new(1.1, -0.3),
            ]),
            delta_sr: Complex64::new(0.0, 0.0),
            delta_st: Complex64::new(0.0, 0.0),
        };
        let dense = (state.g() * pert.delta_matrix()).singular_values()[0];
        let fast = neumann_norm(&state, &pert);
        assert!((dense - fast).abs() <= 1e-12 * dense, "{dense} vs {fast}");
    }

    #[test]
    fn large_perturbation_is_rejected() {
        let state = ChannelState::new(small_scenario(3), RisConfig::resistive(3, 0.2), Complex64::new(1.0, 0.0)).unwrap();
        let mut pert = Perturbation::zero(3, 0);
        pert.delta_col[1] = Complex64::new(1.0, 0.0);
        let norm = neumann_norm(&state, &pert);
        pert.delta_col[1] *= 0.5 / norm;
        assert!(matches!(
            neumann_perturbed_channel(&state, &pert),
            Err(Error::ApproximationDomain { .. })
        ));
    }

    #[test]
    fn small_perturbation_second_order_accurate() {
        let imp = small_scenario(5);
        let cfg = RisConfig::new(vec![-40.0, -45.0, -38.0, -50.0, -42.0], 0.2).unwrap();
        let state = ChannelState::new(imp.clone(), cfg.clone(), Complex64::new(1.0, 0.0)).unwrap();
        let mut pert = Perturbation::zero(5, 2);
        for (i, v) in [0.3, -0.2, 0.0, 0.5, 0.1].iter().enumerate() {
            pert.delta_col[i] = Complex64::new(*v, 0.5 * v);
        }
        let norm = neumann_norm(&state, &pert);
        pert.delta_col *= Complex64::new(0.01 / norm, 0.0);
        pert.delta_sr = Complex64::new(1e-4, 2e-5);
        pert.delta_st = Complex64::new(-3e-5, 1e-4);
        let approx = neumann_perturbed_channel(&state, &pert).unwrap();

        let mut moved = imp.clone();
        moved.z_ss += pert.delta_matrix();
        moved.z_sr[2] += pert.delta_sr;
        moved.z_st[2] += pert.delta_st;
        let exact = oracle::channel_direct(moved.z_rt, &moved.z_sr, &moved.z_st, &moved.z_ss, cfg.r0, &cfg.b);
        assert!((approx - exact).norm() <= 3.0 * 0.01f64.powi(2) * exact.norm());
    }

    #[test]
    fn refresh_with_same_inputs_is_bitwise_identical() {
        let imp = small_scenario(5);
        let state = ChannelState::new(imp.clone(), RisConfig::new(vec![-20.0; 5], 0.2).unwrap(), Complex64::new(1.0, 0.0)).unwrap();
        let again = state.refresh_impedances(imp).unwrap();
        assert_eq!(state.h().re.to_bits(), again.h().re.to_bits());
        assert_eq!(state.h().im.to_bits(), again.h().im.to_bits());
    }

    #[test]
    fn refresh_after_move_matches_from_scratch() {
        let lambda = 0.01;
        let p_bs = Vec3::new(1.3, 0.0, 0.0);
        let p_ue = Vec3::new(0.98, 0.56, -0.65);
        let mut layout = DipoleLayout::half_wave(
            (0..4).map(|i| Vec3::new(0.0, 0.004 * i as f64, 0.001 * i as f64)).collect(),
            lambda,
            lambda / 500.0,
        )
        .unwrap();
        let cfg = RisConfig::new(vec![-30.0, 5.0, -60.0, 100.0], 0.2).unwrap();
        let y0 = Complex64::new(1.0, 0.0);
        let state = ChannelState::new(assemble(&layout, &p_bs, &p_ue).unwrap(), cfg.clone(), y0).unwrap();
        layout.set_position(2, Vec3::new(0.0012, 0.0075, 0.0021));
        let moved = assemble(&layout, &p_bs, &p_ue).unwrap();
        let refreshed = state.refresh_impedances(moved.clone()).unwrap();
        let scratch = end_to_end_channel(&moved, &cfg, y0).unwrap();
        assert!((refreshed.h() - scratch).norm() <= 1e-12 * scratch.norm());
    }

    #[test]
    fn reactance_change_keeps_impedances() {
        let imp = small_scenario(4);
        let state = ChannelState::new(imp, RisConfig::resistive(4, 0.2), Complex64::new(1.0, 0.0)).unwrap();
        let changed = state.refresh_config(RisConfig::new(vec![-50.0, 0.0, 0.0, 0.0], 0.2).unwrap()).unwrap();
        assert_eq!(changed.impedances().z_ss, state.impedances().z_ss);
        assert_ne!(changed.g(), state.g());
    }
}
