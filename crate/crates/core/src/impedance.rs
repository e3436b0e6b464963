//! Self and mutual impedances of z-oriented thin-wire half-wave dipoles.
//!
//! The closed form sums exponential integrals over the two wave directions
//! `s0 = ±1`:
//!
//! ```text
//! Z(δ) = η/(8π) Σ_{s0} e^{j k s0 δ_z} g(δ, s0)
//! g(δ, s0) = T0(δ - 2h e3, s0) + T0(δ + 2h e3, s0) - 2 T0(δ, s0)
//! T0(ζ, s0) = E1(j k (‖ζ‖ + s0 ζ_z))
//! ```
//!
//! It breaks down for co-linear dipoles, where the induced-EMF integral is
//! evaluated numerically instead.

use nalgebra::{DMatrix, DVector, Vector3};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Port, Result};
use crate::specfun::{exp_integral_e1, quad_adaptive};

pub type Vec3 = Vector3<f64>;

/// Free-space wave impedance used throughout (ohms).
pub const ETA: f64 = 377.0;

/// Pairs whose transverse offset is below `COLINEAR_THRESHOLD * λ` are co-linear.
pub const COLINEAR_THRESHOLD: f64 = 1e-6;

/// Absolute tolerance (ohms) of the co-linear quadrature.
pub const COLINEAR_QUAD_TOL: f64 = 1e-10;

const J: Complex64 = Complex64::new(0.0, 1.0);

/// Positions of the RIS elements plus the common dipole geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct DipoleLayout {
    positions: Vec<Vec3>,
    half_length: f64,
    wire_radius: f64,
}

impl DipoleLayout {
    pub fn new(positions: Vec<Vec3>, half_length: f64, wire_radius: f64) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::Validation("layout needs at least one element".into()));
        }
        if !(half_length > 0.0 && half_length.is_finite()) {
            return Err(Error::Validation(format!("half-length must be > 0, got {half_length}")));
        }
        if !(wire_radius > 0.0) {
            return Err(Error::Validation(format!("wire radius must be > 0, got {wire_radius}")));
        }
        // λ = 4h for half-wave dipoles
        if wire_radius > 4.0 * half_length / 100.0 {
            return Err(Error::Validation(format!(
                "wire radius {wire_radius} exceeds λ/100 = {}",
                4.0 * half_length / 100.0
            )));
        }
        if let Some(i) = positions.iter().position(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(Error::Validation(format!("position of element {i} is not finite")));
        }
        Ok(Self {
            positions,
            half_length,
            wire_radius,
        })
    }

    /// Half-wave dipoles (`h = λ/4`) at the given positions.
    pub fn half_wave(positions: Vec<Vec3>, lambda: f64, wire_radius: f64) -> Result<Self> {
        Self::new(positions, lambda / 4.0, wire_radius)
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[Vec3] {
        &self.positions
    }

    pub fn position(&self, k: usize) -> Vec3 {
        self.positions[k]
    }

    pub fn set_position(&mut self, k: usize, q: Vec3) {
        self.positions[k] = q;
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn wire_radius(&self) -> f64 {
        self.wire_radius
    }

    pub fn lambda(&self) -> f64 {
        4.0 * self.half_length
    }

    pub fn kernel(&self) -> DipoleKernel {
        DipoleKernel {
            lambda: self.lambda(),
            half_length: self.half_length,
            wire_radius: self.wire_radius,
        }
    }

    pub fn centroid(&self) -> Vec3 {
        let sum: Vec3 = self.positions.iter().sum();
        sum / self.len() as f64
    }
}

/// Impedances entering the end-to-end channel for one layout.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpedanceSet {
    /// Direct BS–UE impedance.
    pub z_rt: Complex64,
    /// Element–UE impedances.
    pub z_sr: DVector<Complex64>,
    /// Element–BS impedances.
    pub z_st: DVector<Complex64>,
    /// Element–element impedance matrix (complex symmetric).
    pub z_ss: DMatrix<Complex64>,
}

impl ImpedanceSet {
    pub fn len(&self) -> usize {
        self.z_sr.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z_sr.is_empty()
    }
}

/// Geometry shared by every dipole in a scenario: wavelength, half-length, wire radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DipoleKernel {
    pub lambda: f64,
    pub half_length: f64,
    pub wire_radius: f64,
}

impl DipoleKernel {
    pub fn new(lambda: f64, half_length: f64, wire_radius: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidInput(format!("wavelength must be > 0, got {lambda}")));
        }
        if (half_length - lambda / 4.0).abs() > 1e-12 * lambda {
            return Err(Error::InvalidInput(format!(
                "closed form needs half-wave dipoles: h = {half_length}, λ/4 = {}",
                lambda / 4.0
            )));
        }
        if !(wire_radius > 0.0) {
            return Err(Error::InvalidInput(format!("wire radius must be > 0, got {wire_radius}")));
        }
        Ok(Self {
            lambda,
            half_length,
            wire_radius,
        })
    }

    /// Half-wave kernel with the default wire radius `λ/500`.
    pub fn half_wave(lambda: f64) -> Self {
        Self {
            lambda,
            half_length: lambda / 4.0,
            wire_radius: lambda / 500.0,
        }
    }

    pub fn wavenumber(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.lambda
    }

    fn colinear_limit(&self) -> f64 {
        COLINEAR_THRESHOLD * self.lambda
    }

    fn check_not_colinear(&self, delta: &Vec3) -> Result<()> {
        let offset = delta.x.hypot(delta.y);
        if offset < self.colinear_limit() {
            return Err(Error::Colinear { offset, pair: None });
        }
        Ok(())
    }

    /// Closed-form mutual impedance between dipoles at `q_q` and `q_p`.
    pub fn mutual(&self, q_q: &Vec3, q_p: &Vec3) -> Result<Complex64> {
        let delta = q_q - q_p;
        self.check_not_colinear(&delta)?;
        let (canon, _) = canonical(delta);
        self.closed_form(&canon)
    }

    fn closed_form(&self, delta: &Vec3) -> Result<Complex64> {
        let k = self.wavenumber();
        let shift = Vec3::new(0.0, 0.0, 2.0 * self.half_length);
        let mut total = Complex64::new(0.0, 0.0);
        for s0 in [-1.0, 1.0] {
            let g = t0(&(delta - shift), s0, k)? + t0(&(delta + shift), s0, k)?
                - t0(delta, s0, k)? * 2.0;
            total += (J * (k * s0 * delta.z)).exp() * g;
        }
        Ok(total * (ETA / (8.0 * std::f64::consts::PI)))
    }

    /// Self impedance, evaluated at a transverse offset equal to the wire radius.
    pub fn self_impedance(&self) -> Result<Complex64> {
        if !(self.wire_radius > 0.0) {
            return Err(Error::InvalidInput("self impedance needs a > 0".into()));
        }
        self.closed_form(&Vec3::new(self.wire_radius, 0.0, 0.0))
    }

    /// Induced-EMF mutual impedance of (nearly) co-linear dipoles by adaptive quadrature.
    ///
    /// The second dipole carries the sinusoidal current `sin(k(h - |t|))` and
    /// samples the exact near field of the first.
    pub fn mutual_colinear(&self, q_q: &Vec3, q_p: &Vec3) -> Result<Complex64> {
        let delta = q_q - q_p;
        let h = self.half_length;
        let rho = delta.x.hypot(delta.y);
        let tiny = self.colinear_limit();
        if rho < tiny && delta.z.abs() < tiny {
            return self.self_impedance();
        }
        let gap = delta.z.abs() - 2.0 * h;
        if rho < tiny && gap < -1e-9 * self.lambda {
            return Err(Error::Overlap { gap, pair: None });
        }
        let k = self.wavenumber();
        let dz = delta.z;
        let rho2 = rho * rho;
        let integrand = |t: f64| {
            let current = (k * (h - t.abs())).sin();
            let r1 = (rho2 + (dz + t - h).powi(2)).sqrt();
            let r2 = (rho2 + (dz + t + h).powi(2)).sqrt();
            let field = (-J * (k * r1)).exp() / r1 + (-J * (k * r2)).exp() / r2;
            field * current
        };
        let coef = J * (ETA / (4.0 * std::f64::consts::PI));
        let half_tol = 0.5 * COLINEAR_QUAD_TOL / coef.norm();
        let left = quad_adaptive(integrand, -h, 0.0, half_tol)?;
        let right = quad_adaptive(integrand, 0.0, h, half_tol)?;
        Ok(coef * (left + right))
    }

    /// Mutual impedance routed to the closed form or the co-linear quadrature.
    pub fn pair(&self, q_q: &Vec3, q_p: &Vec3) -> Result<Complex64> {
        match self.mutual(q_q, q_p) {
            Err(Error::Colinear { .. }) => {
                let delta = q_q - q_p;
                if delta.norm() < self.colinear_limit() {
                    return Err(Error::Overlap {
                        gap: -2.0 * self.half_length,
                        pair: None,
                    });
                }
                self.mutual_colinear(q_q, q_p)
            }
            other => other,
        }
    }

    /// Gradient of `Z(q_k, q_l)` with respect to `q_k`; the gradient with
    /// respect to `q_l` is its exact negative.
    pub fn gradient(&self, q_k: &Vec3, q_l: &Vec3) -> Result<[Complex64; 3]> {
        let delta = q_k - q_l;
        self.check_not_colinear(&delta)?;
        let (canon, sign) = canonical(delta);
        let g = self.closed_form_gradient(&canon)?;
        Ok([g[0] * sign, g[1] * sign, g[2] * sign])
    }

    fn closed_form_gradient(&self, delta: &Vec3) -> Result<[Complex64; 3]> {
        let k = self.wavenumber();
        let shift = Vec3::new(0.0, 0.0, 2.0 * self.half_length);
        let zero = Complex64::new(0.0, 0.0);
        let mut out = [zero; 3];
        for s0 in [-1.0, 1.0] {
            let lo = delta - shift;
            let hi = delta + shift;
            let g = t0(&lo, s0, k)? + t0(&hi, s0, k)? - t0(delta, s0, k)? * 2.0;
            let d_lo = grad_t0(&lo, s0, k);
            let d_hi = grad_t0(&hi, s0, k);
            let d_mid = grad_t0(delta, s0, k);
            let phase = (J * (k * s0 * delta.z)).exp();
            for c in 0..3 {
                let dg = d_lo[c] + d_hi[c] - d_mid[c] * 2.0;
                out[c] += phase * dg;
            }
            out[2] += J * (k * s0) * phase * g;
        }
        let scale = ETA / (8.0 * std::f64::consts::PI);
        Ok(out.map(|c| c * scale))
    }
}

/// Maps `δ` to the representative of `{δ, -δ}` with a positive leading
/// component in (z, x, y) order. The closed form is even in `δ`; evaluating
/// it on one representative makes reciprocity hold bit for bit.
fn canonical(delta: Vec3) -> (Vec3, f64) {
    let keys = [delta.z, delta.x, delta.y];
    for v in keys {
        if v > 0.0 {
            return (delta, 1.0);
        }
        if v < 0.0 {
            return (-delta, -1.0);
        }
    }
    (delta, 1.0)
}

/// `‖ζ‖ + s0 ζ_z`, computed without cancellation.
fn axial_distance(zeta: &Vec3, s0: f64) -> (f64, f64) {
    let rho2 = zeta.x * zeta.x + zeta.y * zeta.y;
    let r = (rho2 + zeta.z * zeta.z).sqrt();
    let sz = s0 * zeta.z;
    let u = if sz >= 0.0 { r + sz } else { rho2 / (r - sz) };
    (r, u)
}

fn t0(zeta: &Vec3, s0: f64, k: f64) -> Result<Complex64> {
    let (_, u) = axial_distance(zeta, s0);
    exp_integral_e1(Complex64::new(0.0, k * u))
}

/// `∇T0(ζ, s0) = -(ζ/‖ζ‖ + s0 e3) e^{-jku} / u`; the axial component simplifies to `s0/‖ζ‖`.
fn grad_t0(zeta: &Vec3, s0: f64, k: f64) -> [Complex64; 3] {
    let (r, u) = axial_distance(zeta, s0);
    let w = -(-J * (k * u)).exp();
    [
        w * (zeta.x / (r * u)),
        w * (zeta.y / (r * u)),
        w * (s0 / r),
    ]
}

/// Closed-form mutual impedance between two half-wave dipoles.
pub fn mutual_impedance(q_q: &Vec3, q_p: &Vec3, lambda: f64, h: f64, a: f64) -> Result<Complex64> {
    DipoleKernel::new(lambda, h, a)?.mutual(q_q, q_p)
}

/// Co-linear fallback evaluated by quadrature.
pub fn mutual_impedance_colinear(
    q_q: &Vec3,
    q_p: &Vec3,
    lambda: f64,
    h: f64,
    a: f64,
) -> Result<Complex64> {
    DipoleKernel::new(lambda, h, a)?.mutual_colinear(q_q, q_p)
}

pub fn self_impedance(lambda: f64, h: f64, a: f64) -> Result<Complex64> {
    DipoleKernel::new(lambda, h, a)?.self_impedance()
}

/// `∇_{q_k} Z_kl` with `δ = q_k - q_l`.
pub fn impedance_gradient(
    q_k: &Vec3,
    q_l: &Vec3,
    lambda: f64,
    h: f64,
    a: f64,
) -> Result<[Complex64; 3]> {
    DipoleKernel::new(lambda, h, a)?.gradient(q_k, q_l)
}

/// Impedances coupling one element at position `q` to everything else.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementColumn {
    /// Row/column `k` of `Z_SS`, including the (unchanged) self term.
    pub z_ss: DVector<Complex64>,
    pub z_sr: Complex64,
    pub z_st: Complex64,
}

/// Recomputes every impedance that involves element `k` placed at `q`.
pub fn element_column(
    layout: &DipoleLayout,
    k: usize,
    q: &Vec3,
    p_bs: &Vec3,
    p_ue: &Vec3,
    self_z: Complex64,
) -> Result<ElementColumn> {
    let kernel = layout.kernel();
    let n = layout.len();
    let column: Vec<Complex64> = (0..n)
        .into_par_iter()
        .map(|l| {
            if l == k {
                Ok(self_z)
            } else {
                kernel
                    .pair(q, &layout.position(l))
                    .map_err(|e| e.with_pair(Port::Element(k), Port::Element(l)))
            }
        })
        .collect::<Result<_>>()?;
    let z_sr = kernel
        .pair(q, p_ue)
        .map_err(|e| e.with_pair(Port::Element(k), Port::Ue))?;
    let z_st = kernel
        .pair(q, p_bs)
        .map_err(|e| e.with_pair(Port::Element(k), Port::Bs))?;
    Ok(ElementColumn {
        z_ss: DVector::from_vec(column),
        z_sr,
        z_st,
    })
}

/// Assembles `Z_RT`, `z_SR`, `z_ST` and `Z_SS` for a layout.
pub fn assemble(layout: &DipoleLayout, p_bs: &Vec3, p_ue: &Vec3) -> Result<ImpedanceSet> {
    let kernel = layout.kernel();
    let n = layout.len();
    let z_self = kernel.self_impedance()?;
    let z_rt = kernel
        .pair(p_ue, p_bs)
        .map_err(|e| e.with_pair(Port::Ue, Port::Bs))?;

    let rows: Vec<Vec<Complex64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let qi = layout.position(i);
            ((i + 1)..n)
                .map(|j| {
                    kernel
                        .pair(&qi, &layout.position(j))
                        .map_err(|e| e.with_pair(Port::Element(i), Port::Element(j)))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let mut z_ss = DMatrix::from_element(n, n, z_self);
    for (i, row) in rows.into_iter().enumerate() {
        for (offset, z) in row.into_iter().enumerate() {
            let j = i + 1 + offset;
            z_ss[(i, j)] = z;
            z_ss[(j, i)] = z;
        }
    }

    let links: Vec<(Complex64, Complex64)> = layout
        .positions()
        .par_iter()
        .enumerate()
        .map(|(i, q)| {
            let sr = kernel
                .pair(q, p_ue)
                .map_err(|e| e.with_pair(Port::Element(i), Port::Ue))?;
            let st = kernel
                .pair(q, p_bs)
                .map_err(|e| e.with_pair(Port::Element(i), Port::Bs))?;
            Ok((sr, st))
        })
        .collect::<Result<_>>()?;
    let z_sr = DVector::from_iterator(n, links.iter().map(|l| l.0));
    let z_st = DVector::from_iterator(n, links.iter().map(|l| l.1));
    Ok(ImpedanceSet {
        z_rt,
        z_sr,
        z_st,
        z_ss,
    })
}

#[cfg(test)]
#[path = "../tests/common/oracle.rs"]
mod oracle;

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const LAMBDA: f64 = 0.01;

    fn kernel() -> DipoleKernel {
        DipoleKernel::half_wave(LAMBDA)
    }

    fn rel(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / b.norm()
    }

    #[test]
    fn side_by_side_matches_double_quadrature() {
        let k = kernel();
        let q = Vec3::zeros();
        let p = Vec3::new(LAMBDA / 2.0, 0.0, 0.0);
        let closed = k.mutual(&p, &q).unwrap();
        let oracle = oracle::emf_mutual_double(&p, &q, LAMBDA);
        assert!(rel(closed, oracle) < 1e-6, "{closed} vs {oracle}");
    }

    #[test]
    fn argument_exchange_is_exact() {
        let k = kernel();
        let a = Vec3::new(0.0013, -0.0021, 0.0042);
        let b = Vec3::new(-0.003, 0.0011, -0.0007);
        assert_eq!(k.mutual(&a, &b).unwrap(), k.mutual(&b, &a).unwrap());
    }

    #[test]
    fn far_pair_is_weaker() {
        let k = kernel();
        let q = Vec3::zeros();
        let near = k.mutual(&Vec3::new(LAMBDA / 2.0, 0.0, 0.0), &q).unwrap();
        let far = k.mutual(&Vec3::new(10.0 * LAMBDA, 0.0, 0.0), &q).unwrap();
        assert!(far.norm() < near.norm());
        let far_oracle = oracle::emf_mutual(&Vec3::new(10.0 * LAMBDA, 0.0, 0.0), &q, LAMBDA);
        assert!(rel(far, far_oracle) < 1e-6);
    }

    #[test]
    fn colinear_pair_is_rejected_by_closed_form() {
        let k = kernel();
        let r = k.mutual(&Vec3::new(0.0, 0.0, LAMBDA), &Vec3::zeros());
        assert!(matches!(r, Err(Error::Colinear { .. })));
        assert!(matches!(
            k.gradient(&Vec3::new(0.0, 0.0, LAMBDA), &Vec3::zeros()),
            Err(Error::Colinear { .. })
        ));
    }

    #[test]
    fn colinear_quadrature_matches_gauss_legendre() {
        let k = kernel();
        let q = Vec3::zeros();
        // axial gap λ/2 between the dipole tips
        let p = Vec3::new(0.0, 0.0, LAMBDA);
        let quad = k.mutual_colinear(&p, &q).unwrap();
        let oracle = oracle::emf_mutual(&p, &q, LAMBDA);
        assert!((quad - oracle).norm() < 1e-8, "{quad} vs {oracle}");
        let far = k.mutual_colinear(&Vec3::new(0.0, 0.0, 10.5 * LAMBDA), &q).unwrap();
        assert!(far.norm() < quad.norm());
    }

    #[test]
    fn colinear_overlap_is_rejected() {
        let k = kernel();
        let r = k.mutual_colinear(&Vec3::new(0.0, 0.0, LAMBDA / 4.0), &Vec3::zeros());
        assert!(matches!(r, Err(Error::Overlap { .. })));
    }

    #[test]
    fn touching_colinear_dipoles_are_finite() {
        let k = kernel();
        let z = k.pair(&Vec3::new(0.0, 0.0, LAMBDA / 2.0), &Vec3::zeros()).unwrap();
        assert!(z.re.is_finite() && z.im.is_finite());
    }

    #[test]
    fn self_impedance_near_classical_value() {
        let z = self_impedance(LAMBDA, LAMBDA / 4.0, LAMBDA / 500.0).unwrap();
        assert!((z.re - 73.1).abs() / 73.1 < 0.02, "{z}");
        let oracle = oracle::emf_mutual(&Vec3::new(LAMBDA / 500.0, 0.0, 0.0), &Vec3::zeros(), LAMBDA);
        assert!(rel(z, oracle) < 1e-6, "{z} vs {oracle}");
    }

    #[test]
    fn thinner_wire_raises_reactance() {
        let zs: Vec<Complex64> = [200.0, 500.0, 1000.0]
            .iter()
            .map(|d| self_impedance(LAMBDA, LAMBDA / 4.0, LAMBDA / d).unwrap())
            .collect();
        for w in zs.windows(2) {
            assert!((w[1].re - w[0].re).abs() / w[0].re < 0.005);
            assert!(w[1].im > w[0].im);
        }
    }

    #[test]
    fn zero_radius_is_rejected() {
        assert!(self_impedance(LAMBDA, LAMBDA / 4.0, 0.0).is_err());
    }

    #[test]
    fn non_half_wave_is_rejected() {
        assert!(mutual_impedance(&Vec3::new(0.01, 0.0, 0.0), &Vec3::zeros(), LAMBDA, LAMBDA / 3.0, 1e-5).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let k = kernel();
        let q_k = Vec3::new(0.0031, -0.0017, 0.0023);
        let q_l = Vec3::new(-0.0004, 0.0022, -0.0011);
        let grad = k.gradient(&q_k, &q_l).unwrap();
        let step = 1e-7;
        for c in 0..3 {
            let mut e = Vec3::zeros();
            e[c] = step;
            let fd = (k.mutual(&(q_k + e), &q_l).unwrap() - k.mutual(&(q_k - e), &q_l).unwrap()) / (2.0 * step);
            assert!(rel(grad[c], fd) < 1e-5, "component {c}: {} vs {fd}", grad[c]);
        }
    }

    #[test]
    fn gradient_is_antisymmetric() {
        let k = kernel();
        let a = Vec3::new(0.0031, -0.0017, 0.0023);
        let b = Vec3::new(-0.0004, 0.0022, -0.0011);
        let gab = k.gradient(&a, &b).unwrap();
        let gba = k.gradient(&b, &a).unwrap();
        for c in 0..3 {
            assert_eq!(gab[c], -gba[c]);
        }
    }

    #[test]
    fn gradient_decays_with_distance() {
        let k = kernel();
        let near = k.gradient(&Vec3::new(LAMBDA / 2.0, 0.0, 0.001), &Vec3::zeros()).unwrap();
        let far = k.gradient(&Vec3::new(5.0 * LAMBDA, 0.0, 0.001), &Vec3::zeros()).unwrap();
        let norm = |g: [Complex64; 3]| g.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        assert!(norm(far) < norm(near));
    }

    #[test]
    fn assemble_two_elements() {
        let layout = DipoleLayout::half_wave(
            vec![Vec3::new(0.0, -0.003, 0.0), Vec3::new(0.0, 0.003, 0.001)],
            LAMBDA,
            LAMBDA / 500.0,
        )
        .unwrap();
        let imp = assemble(&layout, &Vec3::new(1.3, 0.0, 0.0), &Vec3::new(0.98, 0.56, -0.65)).unwrap();
        assert_eq!(imp.z_ss[(0, 1)], imp.z_ss[(1, 0)]);
        assert_eq!(imp.z_ss[(0, 0)], imp.z_ss[(1, 1)]);
    }

    #[test]
    fn assemble_single_element() {
        let layout = DipoleLayout::half_wave(vec![Vec3::zeros()], LAMBDA, LAMBDA / 500.0).unwrap();
        let imp = assemble(&layout, &Vec3::new(1.3, 0.0, 0.0), &Vec3::new(0.98, 0.56, -0.65)).unwrap();
        assert_eq!(imp.z_ss.shape(), (1, 1));
        assert_eq!(imp.z_ss[(0, 0)], kernel().self_impedance().unwrap());
    }

    #[test]
    fn assemble_rejects_coincident_elements() {
        let layout =
            DipoleLayout::half_wave(vec![Vec3::zeros(), Vec3::zeros()], LAMBDA, LAMBDA / 500.0).unwrap();
        let r = assemble(&layout, &Vec3::new(1.3, 0.0, 0.0), &Vec3::new(0.98, 0.56, -0.65));
        assert!(matches!(
            r,
            Err(Error::Overlap {
                pair: Some((Port::Element(0), Port::Element(1))),
                ..
            })
        ));
    }

    #[test]
    fn far_field_phase_is_retarded() {
        // e^{-jkd} convention: the phase of Z rotates clockwise with distance
        let k = kernel();
        let d = 20.0 * LAMBDA;
        let z1 = k.mutual(&Vec3::new(d, 0.0, 0.0), &Vec3::zeros()).unwrap();
        let z2 = k.mutual(&Vec3::new(d + LAMBDA / 8.0, 0.0, 0.0), &Vec3::zeros()).unwrap();
        let dphi = (z2 / z1).arg();
        assert!((dphi + PI / 4.0).abs() < 0.05, "{dphi}");
    }

    #[test]
    fn reference_upa_assembly_is_finite_and_symmetric() {
        let lambda = 0.01;
        let layout = crate::geometry::initial_shape(crate::geometry::ShapeKind::Upa, 100, lambda, lambda / 2.0, None, lambda / 500.0).unwrap();
        let imp = assemble(&layout, &Vec3::new(1.3, 0.0, 0.0), &Vec3::new(0.98, 0.56, -0.65)).unwrap();
        assert!(imp.z_ss.iter().chain(imp.z_sr.iter()).chain(imp.z_st.iter()).all(|z| z.re.is_finite() && z.im.is_finite()));
        let asym = (&imp.z_ss - imp.z_ss.transpose()).camax();
        assert!(asym <= 1e-10 * imp.z_ss.camax(), "{asym}");
    }
}
