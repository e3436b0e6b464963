//! Independent reference evaluations used by the tests.
//!
//! Everything here uses fixed-order composite Gauss–Legendre rules on the
//! classical induced-EMF integrals with a sinusoidal current profile. None
//! of it touches the exponential-integral closed form or the adaptive
//! quadrature of the library.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, Vector3};
use num_complex::Complex64;
use std::f64::consts::PI;

const ETA: f64 = 377.0;
const J: Complex64 = Complex64::new(0.0, 1.0);

/// Gauss–Legendre nodes and weights on [-1, 1] via Newton iteration.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else { p1 };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pn1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// Composite Gauss–Legendre over `[a, b]` with `panels` equal panels.
pub fn composite<F: Fn(f64) -> Complex64>(f: F, a: f64, b: f64, panels: usize, order: usize) -> Complex64 {
    let (x, w) = gauss_legendre(order);
    let width = (b - a) / panels as f64;
    let mut total = Complex64::new(0.0, 0.0);
    for p in 0..panels {
        let lo = a + p as f64 * width;
        let mid = lo + 0.5 * width;
        let mut s = Complex64::new(0.0, 0.0);
        for (xi, wi) in x.iter().zip(&w) {
            s += f(mid + 0.5 * width * xi) * *wi;
        }
        total += s * (0.5 * width);
    }
    total
}

/// Induced-EMF mutual impedance of two z-directed half-wave dipoles: the
/// second samples the exact near field of the first.
pub fn emf_mutual(q2: &Vector3<f64>, q1: &Vector3<f64>, lambda: f64) -> Complex64 {
    let k = 2.0 * PI / lambda;
    let h = lambda / 4.0;
    let d = q2 - q1;
    let rho2 = d.x * d.x + d.y * d.y;
    let f = |t: f64| {
        let current = (k * (h - t.abs())).sin();
        let r1 = (rho2 + (d.z + t - h).powi(2)).sqrt();
        let r2 = (rho2 + (d.z + t + h).powi(2)).sqrt();
        ((-J * (k * r1)).exp() / r1 + (-J * (k * r2)).exp() / r2) * current
    };
    let integral = composite(f, -h, 0.0, 400, 16) + composite(f, 0.0, h, 400, 16);
    J * (ETA / (4.0 * PI)) * integral
}

/// Mixed-potential double integral
/// `Z = jη/(4πk) ∫∫ (k² I1 I2 - I1' I2') e^{-jkR}/R`.
pub fn emf_mutual_double(q2: &Vector3<f64>, q1: &Vector3<f64>, lambda: f64) -> Complex64 {
    let k = 2.0 * PI / lambda;
    let h = lambda / 4.0;
    let d = q2 - q1;
    let rho2 = d.x * d.x + d.y * d.y;
    let current = |z: f64| (k * (h - z.abs())).sin();
    let slope = |z: f64| -k * z.signum() * (k * (h - z.abs())).cos();
    let inner = |z2: f64| {
        let g = |z1: f64| {
            let r = (rho2 + (d.z + z2 - z1).powi(2)).sqrt();
            let kernel = (-J * (k * r)).exp() / r;
            kernel * (k * k * current(z1) * current(z2) - slope(z1) * slope(z2))
        };
        composite(g, -h, 0.0, 24, 16) + composite(g, 0.0, h, 24, 16)
    };
    let outer = composite(inner, -h, 0.0, 24, 16) + composite(inner, 0.0, h, 24, 16);
    J * (ETA / (4.0 * PI * k)) * outer
}

/// Dense complex LU solve with partial pivoting, written out independently of nalgebra's.
pub fn lu_solve(a: &DMatrix<Complex64>, b: &DVector<Complex64>) -> DVector<Complex64> {
    let n = a.nrows();
    let mut m = a.clone();
    let mut x = b.clone();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| m[(i, col)].norm().total_cmp(&m[(j, col)].norm()))
            .unwrap();
        if piv != col {
            m.swap_rows(piv, col);
            x.swap_rows(piv, col);
        }
        for row in (col + 1)..n {
            let factor = m[(row, col)] / m[(col, col)];
            for c in col..n {
                let v = m[(col, c)];
                m[(row, c)] -= factor * v;
            }
            let v = x[col];
            x[row] -= factor * v;
        }
    }
    for row in (0..n).rev() {
        let mut s = x[row];
        for c in (row + 1)..n {
            s -= m[(row, c)] * x[c];
        }
        x[row] = s / m[(row, row)];
    }
    x
}

/// `Z_RT - z_SRᵀ (Z_SS + diag(R0 + j b))⁻¹ z_ST` by a direct solve.
pub fn channel_direct(
    z_rt: Complex64,
    z_sr: &DVector<Complex64>,
    z_st: &DVector<Complex64>,
    z_ss: &DMatrix<Complex64>,
    r0: f64,
    b: &[f64],
) -> Complex64 {
    let mut a = z_ss.clone();
    for (n, bn) in b.iter().enumerate() {
        a[(n, n)] += Complex64::new(r0, *bn);
    }
    let x = lu_solve(&a, z_st);
    z_rt - z_sr.iter().zip(x.iter()).map(|(u, v)| u * v).sum::<Complex64>()
}
