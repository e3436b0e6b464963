//! Feasible sets for element positions, projections, curvilinear gradient
//! rescaling and the initial RIS shapes.
//!
//! Spherical coordinates use `θ` for the azimuth (from +x in the x–y plane)
//! and `φ` for the polar angle from +z. Cylinders share the z axis.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::impedance::{DipoleLayout, Vec3};

/// Cartesian axis held fixed by a [`FeasibleSet::PlanarBox`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    /// The two free axes, in ascending order.
    pub fn free(self) -> [usize; 2] {
        match self {
            Axis::X => [1, 2],
            Axis::Y => [0, 2],
            Axis::Z => [0, 1],
        }
    }
}

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
}

impl Range {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn clamp(&self, v: f64) -> f64 {
        v.clamp(self.lo, self.hi)
    }

    pub fn contains(&self, v: f64, tol: f64) -> bool {
        v >= self.lo - tol && v <= self.hi + tol
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    /// Range spanning `factor` times the half-width about the center, with
    /// `min_half` used as the half-width of degenerate ranges.
    pub fn scaled(&self, factor: f64, min_half: f64) -> Self {
        let half = (0.5 * self.width()).max(min_half) * factor;
        let c = self.center();
        Self::new(c - half, c + half)
    }

    fn of(values: impl Iterator<Item = f64>) -> Self {
        let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        Self::new(lo, hi)
    }
}

/// Allowed positions of a single element.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeasibleSet {
    /// Solid ball of radius `radius` centred at the origin.
    Ball3D { radius: f64 },
    /// Plane `q[axis] = value`, with the two free coordinates clamped to `ranges` (ascending axis order).
    PlanarBox { axis: Axis, value: f64, ranges: [Range; 2] },
    /// Sphere of radius `radius` restricted to azimuth `theta` and polar angle `phi` ranges.
    SphericalCap { radius: f64, theta: Range, phi: Range },
    /// Cylinder of radius `radius` about z, restricted to azimuth `theta` and height `z`.
    /// An azimuth range of width `>= 2π` is periodic.
    CylindricalBand { radius: f64, theta: Range, z: Range },
}

fn wrap_angle(t: f64) -> f64 {
    // principal value in (-π, π]
    let w = (t + PI).rem_euclid(2.0 * PI) - PI;
    if w == -PI {
        PI
    } else {
        w
    }
}

/// Angle in the copy of `range` nearest to `t` modulo 2π, then clamped.
fn clamp_angle(range: &Range, t: f64) -> f64 {
    if range.width() >= 2.0 * PI {
        return t;
    }
    let c = range.center();
    let t = c + wrap_angle(t - c);
    range.clamp(t)
}

impl FeasibleSet {
    pub fn validate(&self) -> Result<()> {
        let ordered = |r: &Range, what: &str| {
            if r.lo.is_finite() && r.hi.is_finite() && r.lo <= r.hi {
                Ok(())
            } else {
                Err(Error::Validation(format!("{what} range must be ordered, got [{}, {}]", r.lo, r.hi)))
            }
        };
        let positive = |r: f64| {
            if r > 0.0 && r.is_finite() {
                Ok(())
            } else {
                Err(Error::Validation(format!("radius must be > 0, got {r}")))
            }
        };
        match self {
            FeasibleSet::Ball3D { radius } => positive(*radius),
            FeasibleSet::PlanarBox { value, ranges, .. } => {
                if !value.is_finite() {
                    return Err(Error::Validation("plane offset must be finite".into()));
                }
                ordered(&ranges[0], "first")?;
                ordered(&ranges[1], "second")
            }
            FeasibleSet::SphericalCap { radius, theta, phi } => {
                positive(*radius)?;
                ordered(theta, "theta")?;
                ordered(phi, "phi")?;
                if phi.lo < 0.0 || phi.hi > PI {
                    return Err(Error::Validation("phi range must lie in [0, π]".into()));
                }
                if theta.width() > 2.0 * PI + 1e-12 || theta.lo < -2.0 * PI || theta.hi > 2.0 * PI {
                    return Err(Error::Validation("theta range must lie within one turn".into()));
                }
                Ok(())
            }
            FeasibleSet::CylindricalBand { radius, theta, z } => {
                positive(*radius)?;
                ordered(theta, "theta")?;
                ordered(z, "z")?;
                if theta.lo < -2.0 * PI || theta.hi > 2.0 * PI {
                    return Err(Error::Validation("theta range must lie within one turn".into()));
                }
                Ok(())
            }
        }
    }

    /// Whether the set pins one Cartesian coordinate.
    pub fn fixed_axis(&self) -> Option<Axis> {
        match self {
            FeasibleSet::PlanarBox { axis, .. } => Some(*axis),
            _ => None,
        }
    }

    /// Distance-like feasibility test with tolerance `tol` (meters).
    pub fn contains(&self, q: &Vec3, tol: f64) -> bool {
        match self {
            FeasibleSet::Ball3D { radius } => q.norm() <= radius + tol,
            FeasibleSet::PlanarBox { axis, value, ranges } => {
                let [i, j] = axis.free();
                (q[axis.index()] - value).abs() <= tol && ranges[0].contains(q[i], tol) && ranges[1].contains(q[j], tol)
            }
            FeasibleSet::SphericalCap { radius, theta, phi } => {
                let rho = q.norm();
                if (rho - radius).abs() > tol {
                    return false;
                }
                let t = q.y.atan2(q.x);
                let p = (q.z / rho).clamp(-1.0, 1.0).acos();
                let angular = tol / radius;
                let d = wrap_angle(clamp_angle(theta, t) - t).abs();
                d * p.sin() <= angular && phi.contains(p, angular)
            }
            FeasibleSet::CylindricalBand { radius, theta, z } => {
                let rho = q.x.hypot(q.y);
                if (rho - radius).abs() > tol || !z.contains(q.z, tol) {
                    return false;
                }
                let t = q.y.atan2(q.x);
                let c = clamp_angle(theta, t);
                let d = wrap_angle(c - t).abs();
                d * radius <= tol
            }
        }
    }

    /// Projection onto the set.
    ///
    /// Euclidean-nearest point for `Ball3D` and `PlanarBox`. Curved sets snap
    /// the radius first and then clamp angles and height, which is not the
    /// Euclidean projection for far-away points.
    pub fn project(&self, q: &Vec3) -> Vec3 {
        match self {
            FeasibleSet::Ball3D { radius } => {
                let norm = q.norm();
                if norm <= *radius {
                    return *q;
                }
                let mut p = q * (radius / norm);
                // rounding can leave the scaled point a few ulps outside
                while p.norm() > *radius {
                    p *= 1.0 - f64::EPSILON;
                }
                p
            }
            FeasibleSet::PlanarBox { axis, value, ranges } => {
                let mut p = *q;
                let [i, j] = axis.free();
                p[axis.index()] = *value;
                p[i] = ranges[0].clamp(q[i]);
                p[j] = ranges[1].clamp(q[j]);
                p
            }
            FeasibleSet::SphericalCap { radius, theta, phi } => {
                let rho = q.norm();
                let (t, p) = if rho == 0.0 {
                    (theta.center(), phi.center())
                } else {
                    let t = if q.x == 0.0 && q.y == 0.0 { theta.center() } else { q.y.atan2(q.x) };
                    (t, (q.z / rho).clamp(-1.0, 1.0).acos())
                };
                let t = clamp_angle(theta, t);
                let p = phi.clamp(p);
                Vec3::new(radius * p.sin() * t.cos(), radius * p.sin() * t.sin(), radius * p.cos())
            }
            FeasibleSet::CylindricalBand { radius, theta, z } => {
                let t = if q.x == 0.0 && q.y == 0.0 { theta.center() } else { q.y.atan2(q.x) };
                let t = clamp_angle(theta, t);
                Vec3::new(radius * t.cos(), radius * t.sin(), z.clamp(q.z))
            }
        }
    }

    /// Unprojected candidate after moving `alpha` meters from `q` along the
    /// ascent direction given by the Cartesian gradient `grad`.
    ///
    /// Flat sets step along the normalized in-set gradient. Curved sets step
    /// along the tangential curvilinear components, converted to coordinate
    /// increments so that `alpha` is an arc length. Returns `None` if the
    /// gradient has no component inside the set.
    pub fn ascent_candidate(&self, q: &Vec3, grad: &Vec3, alpha: f64) -> Result<Option<Vec3>> {
        match self {
            FeasibleSet::Ball3D { .. } => {
                let n = grad.norm();
                Ok((n > 0.0).then(|| q + grad * (alpha / n)))
            }
            FeasibleSet::PlanarBox { axis, .. } => {
                let mut g = *grad;
                g[axis.index()] = 0.0;
                let n = g.norm();
                Ok((n > 0.0).then(|| q + g * (alpha / n)))
            }
            FeasibleSet::SphericalCap { .. } => {
                let c = self.rescale_gradient(q, grad)?;
                let n = c.y.hypot(c.z);
                if n == 0.0 {
                    return Ok(None);
                }
                let rho = q.norm();
                let sin_p = q.x.hypot(q.y) / rho;
                let t = q.y.atan2(q.x) + alpha * c.y / (rho * sin_p * n);
                let p = (q.z / rho).clamp(-1.0, 1.0).acos() + alpha * c.z / (rho * n);
                Ok(Some(Vec3::new(rho * p.sin() * t.cos(), rho * p.sin() * t.sin(), rho * p.cos())))
            }
            FeasibleSet::CylindricalBand { .. } => {
                let c = self.rescale_gradient(q, grad)?;
                let n = c.y.hypot(c.z);
                if n == 0.0 {
                    return Ok(None);
                }
                let rho = q.x.hypot(q.y);
                let t = q.y.atan2(q.x) + alpha * c.y / (rho * n);
                Ok(Some(Vec3::new(rho * t.cos(), rho * t.sin(), q.z + alpha * c.z / n)))
            }
        }
    }

    /// Curvilinear gradient components from a Cartesian gradient.
    ///
    /// Spherical sets return `[∂f/∂ρ, (1/(ρ sinφ)) ∂f/∂θ, (1/ρ) ∂f/∂φ]`,
    /// cylindrical sets `[∂f/∂ρ, (1/ρ) ∂f/∂θ, ∂f/∂z]`; flat sets return the
    /// Cartesian gradient unchanged.
    pub fn rescale_gradient(&self, q: &Vec3, grad: &Vec3) -> Result<Vec3> {
        match self {
            FeasibleSet::Ball3D { .. } | FeasibleSet::PlanarBox { .. } => Ok(*grad),
            FeasibleSet::SphericalCap { .. } => spherical_components(q, grad),
            FeasibleSet::CylindricalBand { .. } => cylindrical_components(q, grad),
        }
    }
}

/// `[g·ρ̂, g·θ̂, g·φ̂]` in spherical coordinates (θ azimuth, φ polar).
pub fn spherical_components(q: &Vec3, grad: &Vec3) -> Result<Vec3> {
    let rho = q.norm();
    if rho == 0.0 {
        return Err(Error::Pole("spherical coordinates undefined at the origin".into()));
    }
    let rxy = q.x.hypot(q.y);
    let sin_p = rxy / rho;
    if sin_p <= 1e-12 {
        return Err(Error::Pole(format!("sin(phi) = {sin_p:.3e} on the polar axis")));
    }
    let (ct, st) = (q.x / rxy, q.y / rxy);
    let cos_p = q.z / rho;
    let r_hat = q / rho;
    let t_hat = Vec3::new(-st, ct, 0.0);
    let p_hat = Vec3::new(cos_p * ct, cos_p * st, -sin_p);
    Ok(Vec3::new(grad.dot(&r_hat), grad.dot(&t_hat), grad.dot(&p_hat)))
}

/// `[g·ρ̂, g·θ̂, g_z]` in cylindrical coordinates about z.
pub fn cylindrical_components(q: &Vec3, grad: &Vec3) -> Result<Vec3> {
    let rho = q.x.hypot(q.y);
    if rho == 0.0 {
        return Err(Error::Pole("cylindrical coordinates undefined on the axis".into()));
    }
    let (ct, st) = (q.x / rho, q.y / rho);
    Ok(Vec3::new(grad.x * ct + grad.y * st, -grad.x * st + grad.y * ct, grad.z))
}

/// Initial RIS geometries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeKind {
    Ula,
    Upa,
    Cylinder,
    Sphere,
}

impl ShapeKind {
    pub fn name(self) -> &'static str {
        match self {
            ShapeKind::Ula => "ula",
            ShapeKind::Upa => "upa",
            ShapeKind::Cylinder => "cylinder",
            ShapeKind::Sphere => "sphere",
        }
    }

    pub fn is_curved(self) -> bool {
        matches!(self, ShapeKind::Cylinder | ShapeKind::Sphere)
    }
}

/// Deterministic initial layout of `n` half-wave dipoles.
///
/// * ULA: along y, centred at the origin (side-by-side elements).
/// * UPA: `⌈√n⌉` columns along y and as many rows along z as needed, in the
///   y–z plane, centred at the origin.
/// * Cylinder: rings about z of radius `radius`; a ring holds at most
///   `⌊2πR/s⌋` elements, spread uniformly over the full turn, and rings sit
///   `s` apart in z, centred at `z = 0`. Odd rings are rotated by half a step.
/// * Sphere: latitude rings about +x on a sphere of radius `radius`, `s/R`
///   apart in angle, each holding `⌊2πR sinψ/s⌋` elements.
pub fn initial_shape(
    kind: ShapeKind,
    n: usize,
    lambda: f64,
    spacing: f64,
    radius: Option<f64>,
    wire_radius: f64,
) -> Result<DipoleLayout> {
    if n == 0 {
        return Err(Error::Geometry("need at least one element".into()));
    }
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(Error::Geometry(format!("spacing must be > 0, got {spacing}")));
    }
    if spacing < 2.0 * wire_radius {
        return Err(Error::Geometry(format!(
            "spacing {spacing} below two wire radii {}",
            2.0 * wire_radius
        )));
    }
    let radius = || -> Result<f64> {
        match radius {
            Some(r) if r > 0.0 && r.is_finite() => Ok(r),
            Some(r) => Err(Error::Geometry(format!("radius must be > 0, got {r}"))),
            None => Err(Error::Geometry(format!("{} needs a radius", kind.name()))),
        }
    };
    let positions = match kind {
        ShapeKind::Ula => {
            let c = (n as f64 - 1.0) / 2.0;
            (0..n).map(|i| Vec3::new(0.0, (i as f64 - c) * spacing, 0.0)).collect()
        }
        ShapeKind::Upa => {
            let cols = (n as f64).sqrt().ceil() as usize;
            let pts: Vec<Vec3> = (0..n)
                .map(|i| Vec3::new(0.0, (i % cols) as f64 * spacing, (i / cols) as f64 * spacing))
                .collect();
            recenter(pts)
        }
        ShapeKind::Cylinder => cylinder_positions(n, spacing, radius()?),
        ShapeKind::Sphere => sphere_positions(n, spacing, radius()?)?,
    };
    DipoleLayout::half_wave(positions, lambda, wire_radius)
}

fn recenter(mut pts: Vec<Vec3>) -> Vec<Vec3> {
    let mean = pts.iter().fold(Vec3::zeros(), |acc, p| acc + p) / pts.len() as f64;
    for p in &mut pts {
        *p -= mean;
    }
    pts
}

/// Splits `n` into `rows` counts differing by at most one, larger counts first.
fn spread(n: usize, rows: usize) -> Vec<usize> {
    (0..rows).map(|r| n / rows + usize::from(r < n % rows)).collect()
}

fn cylinder_positions(n: usize, spacing: f64, radius: f64) -> Vec<Vec3> {
    let capacity = ((2.0 * PI * radius / spacing).floor() as usize).max(1);
    let rows = n.div_ceil(capacity);
    let counts = spread(n, rows);
    let z0 = -(rows as f64 - 1.0) / 2.0 * spacing;
    let mut pts = Vec::with_capacity(n);
    for (r, &m) in counts.iter().enumerate() {
        let step = 2.0 * PI / m as f64;
        let offset = if r % 2 == 1 { 0.5 * step } else { 0.0 };
        for i in 0..m {
            let t = offset + i as f64 * step;
            pts.push(Vec3::new(radius * t.cos(), radius * t.sin(), z0 + r as f64 * spacing));
        }
    }
    pts
}

fn sphere_positions(n: usize, spacing: f64, radius: f64) -> Result<Vec<Vec3>> {
    let dpsi = spacing / radius;
    let mut rings = Vec::new();
    let mut placed = 0;
    let mut j = 0usize;
    while placed < n {
        let psi = j as f64 * dpsi;
        if psi > PI {
            return Err(Error::Geometry(format!(
                "{n} elements do not fit on a sphere of radius {radius} at spacing {spacing}"
            )));
        }
        let capacity = if j == 0 {
            1
        } else {
            ((2.0 * PI * radius * psi.sin() / spacing).floor() as usize).max(1)
        };
        let m = capacity.min(n - placed);
        rings.push((psi, m));
        placed += m;
        j += 1;
    }
    let mut pts = Vec::with_capacity(n);
    for (psi, m) in rings {
        // an offset of π/(2m) keeps mirror pairs of the ring off a common z-line
        let step = 2.0 * PI / m as f64;
        let offset = 0.5 * PI / m as f64;
        for i in 0..m {
            let beta = offset + i as f64 * step;
            pts.push(Vec3::new(
                radius * psi.cos(),
                radius * psi.sin() * beta.cos(),
                radius * psi.sin() * beta.sin(),
            ));
        }
    }
    Ok(pts)
}

/// Position constraints around an initial layout: each coordinate or angle
/// half-range is scaled by `factor` about the layout's centre. Degenerate
/// extents use `min_half` (meters, converted to radians on curved sets).
pub fn constrained_set(kind: ShapeKind, layout: &DipoleLayout, factor: f64, min_half: f64) -> FeasibleSet {
    let pts = layout.positions();
    match kind {
        ShapeKind::Ula | ShapeKind::Upa => FeasibleSet::PlanarBox {
            axis: Axis::X,
            value: 0.0,
            ranges: [
                Range::of(pts.iter().map(|p| p.y)).scaled(factor, min_half),
                Range::of(pts.iter().map(|p| p.z)).scaled(factor, min_half),
            ],
        },
        ShapeKind::Cylinder => {
            let radius = pts[0].x.hypot(pts[0].y);
            let theta = angular_range(pts.iter().map(|p| p.y.atan2(p.x)).collect());
            let theta = clip_turn(theta.scaled(factor, min_half / radius));
            FeasibleSet::CylindricalBand {
                radius,
                theta,
                z: Range::of(pts.iter().map(|p| p.z)).scaled(factor, min_half),
            }
        }
        ShapeKind::Sphere => {
            let radius = pts[0].norm();
            let theta = angular_range(pts.iter().map(|p| p.y.atan2(p.x)).collect());
            let theta = clip_turn(theta.scaled(factor, min_half / radius));
            let phi = Range::of(pts.iter().map(|p| (p.z / p.norm()).clamp(-1.0, 1.0).acos()))
                .scaled(factor, min_half / radius);
            FeasibleSet::SphericalCap {
                radius,
                theta,
                phi: Range::new(phi.lo.max(0.0), phi.hi.min(PI)),
            }
        }
    }
}

/// Smallest arc containing all angles; a full turn if the largest gap is small.
fn angular_range(mut angles: Vec<f64>) -> Range {
    angles.sort_by(f64::total_cmp);
    let n = angles.len();
    if n == 1 {
        return Range::new(angles[0], angles[0]);
    }
    let (mut gap, mut at) = (angles[0] + 2.0 * PI - angles[n - 1], 0);
    for i in 1..n {
        let g = angles[i] - angles[i - 1];
        if g > gap {
            gap = g;
            at = i;
        }
    }
    if at == 0 {
        Range::new(angles[0], angles[n - 1])
    } else {
        Range::new(angles[at], angles[at - 1] + 2.0 * PI)
    }
}

fn clip_turn(r: Range) -> Range {
    if r.width() >= 2.0 * PI {
        Range::new(-PI, PI)
    } else {
        let shift = 2.0 * PI * (r.center() / (2.0 * PI)).round();
        Range::new(r.lo - shift, r.hi - shift)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const LAMBDA: f64 = 0.01;
    const A: f64 = LAMBDA / 500.0;

    fn random_vec(rng: &mut ChaCha8Rng, scale: f64) -> Vec3 {
        Vec3::new(
            rng.gen_range(-scale..scale),
            rng.gen_range(-scale..scale),
            rng.gen_range(-scale..scale),
        )
    }

    #[test]
    fn ball_projection_examples() {
        let ball = FeasibleSet::Ball3D { radius: 0.05 };
        let inside = Vec3::new(0.03, 0.0, 0.0);
        assert_eq!(ball.project(&inside), inside);
        let outside = Vec3::new(0.0, 0.06, 0.08);
        let p = ball.project(&outside);
        assert!((p - outside * 0.5).norm() < 1e-17);
        assert!(p.norm() <= 0.05);
    }

    #[test]
    fn box_projection_example() {
        let set = FeasibleSet::PlanarBox {
            axis: Axis::X,
            value: 0.0,
            ranges: [Range::new(-1.0, 1.0), Range::new(-1.0, 1.0)],
        };
        assert_eq!(set.project(&Vec3::new(0.3, 2.0, 0.0)), Vec3::new(0.0, 1.0, 0.0));
    }

    #[test]
    fn projection_idempotent_and_optimal() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let sets = [
            FeasibleSet::Ball3D { radius: 0.05 },
            FeasibleSet::PlanarBox {
                axis: Axis::X,
                value: 0.0,
                ranges: [Range::new(-0.02, 0.03), Range::new(-0.01, 0.01)],
            },
        ];
        for set in sets {
            for _ in 0..100 {
                let q = random_vec(&mut rng, 0.1);
                let p = set.project(&q);
                assert_eq!(set.project(&p), p);
                assert!(set.contains(&p, 0.0));
                for _ in 0..100 {
                    let s = set.project(&random_vec(&mut rng, 0.1));
                    assert!((p - q).norm() <= (s - q).norm());
                }
            }
        }
    }

    #[test]
    fn curved_projection_nearly_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let sets = [
            FeasibleSet::SphericalCap {
                radius: 0.1,
                theta: Range::new(-0.4, 0.5),
                phi: Range::new(1.2, 1.9),
            },
            FeasibleSet::CylindricalBand {
                radius: 0.1,
                theta: Range::new(2.5, 3.9),
                z: Range::new(-0.01, 0.02),
            },
            FeasibleSet::CylindricalBand {
                radius: 0.1,
                theta: Range::new(-PI, PI),
                z: Range::new(-0.01, 0.02),
            },
        ];
        for set in sets {
            for _ in 0..200 {
                let p = set.project(&random_vec(&mut rng, 0.3));
                assert!(set.contains(&p, 1e-12), "{set:?} {p}");
                assert!((set.project(&p) - p).norm() <= 1e-15);
            }
        }
    }

    #[test]
    fn cylinder_projection_wraps_across_pi() {
        let set = FeasibleSet::CylindricalBand {
            radius: 1.0,
            theta: Range::new(3.0, 3.5),
            z: Range::new(0.0, 1.0),
        };
        // azimuth -3.0 is 3.283 modulo 2π, inside the range
        let q = Vec3::new((-3.0f64).cos(), (-3.0f64).sin(), 0.5);
        assert!((set.project(&q) - q).norm() < 1e-15);
    }

    #[test]
    fn radial_gradient_has_only_radial_component() {
        let q = Vec3::new(0.03, -0.04, 0.05);
        let g = q.normalize() * 2.5;
        let c = spherical_components(&q, &g).unwrap();
        assert!((c.x - 2.5).abs() < 1e-15 && c.y.abs() < 1e-15 && c.z.abs() < 1e-15);
    }

    #[test]
    fn curvilinear_components_match_finite_differences() {
        let field = |p: &Vec3| (3.0 * p.x).sin() * p.y + p.z * p.z * p.x + (p.y * p.z).exp();
        let grad = |p: &Vec3| {
            Vec3::new(
                3.0 * (3.0 * p.x).cos() * p.y + p.z * p.z,
                (3.0 * p.x).sin() + p.z * (p.y * p.z).exp(),
                2.0 * p.z * p.x + p.y * (p.y * p.z).exp(),
            )
        };
        let (r, t, f) = (0.7, 0.4, 1.1);
        let sph = |r: f64, t: f64, f: f64| Vec3::new(r * f.sin() * t.cos(), r * f.sin() * t.sin(), r * f.cos());
        let q = sph(r, t, f);
        let c = spherical_components(&q, &grad(&q)).unwrap();
        let h = 1e-6;
        let d_r = (field(&sph(r + h, t, f)) - field(&sph(r - h, t, f))) / (2.0 * h);
        let d_t = (field(&sph(r, t + h, f)) - field(&sph(r, t - h, f))) / (2.0 * h);
        let d_f = (field(&sph(r, t, f + h)) - field(&sph(r, t, f - h))) / (2.0 * h);
        let want = Vec3::new(d_r, d_t / (r * f.sin()), d_f / r);
        assert!((c - want).norm() <= 1e-6 * want.norm(), "{c} vs {want}");

        let cyl = |r: f64, t: f64, z: f64| Vec3::new(r * t.cos(), r * t.sin(), z);
        let q = cyl(r, t, f);
        let c = cylindrical_components(&q, &grad(&q)).unwrap();
        let d_r = (field(&cyl(r + h, t, f)) - field(&cyl(r - h, t, f))) / (2.0 * h);
        let d_t = (field(&cyl(r, t + h, f)) - field(&cyl(r, t - h, f))) / (2.0 * h);
        let d_z = (field(&cyl(r, t, f + h)) - field(&cyl(r, t, f - h))) / (2.0 * h);
        let want = Vec3::new(d_r, d_t / r, d_z);
        assert!((c - want).norm() <= 1e-6 * want.norm(), "{c} vs {want}");
    }

    #[test]
    fn polar_axis_is_a_pole() {
        let set = FeasibleSet::SphericalCap {
            radius: 1.0,
            theta: Range::new(-PI, PI),
            phi: Range::new(0.0, PI),
        };
        let r = set.rescale_gradient(&Vec3::new(0.0, 0.0, 1.0), &Vec3::new(1.0, 0.0, 0.0));
        assert!(matches!(r, Err(Error::Pole(_))));
    }

    #[test]
    fn ula_span_and_center() {
        let l = initial_shape(ShapeKind::Ula, 100, LAMBDA, LAMBDA / 16.0, None, A).unwrap();
        let ys: Vec<f64> = l.positions().iter().map(|p| p.y).collect();
        let span = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - ys.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!((span - 99.0 * LAMBDA / 16.0).abs() < 1e-15);
        assert!(l.centroid().norm() < 1e-12);
    }

    #[test]
    fn upa_two_by_two() {
        let l = initial_shape(ShapeKind::Upa, 4, LAMBDA, LAMBDA / 2.0, None, A).unwrap();
        let pts = l.positions();
        let mut nearest = f64::INFINITY;
        for i in 0..4 {
            assert_eq!(pts[i].x, 0.0);
            for j in (i + 1)..4 {
                nearest = nearest.min((pts[i] - pts[j]).norm());
            }
        }
        assert!((nearest - LAMBDA / 2.0).abs() < 1e-15);
        assert!(l.centroid().norm() < 1e-12);
    }

    #[test]
    fn upa_incomplete_grid_is_centered() {
        let l = initial_shape(ShapeKind::Upa, 7, LAMBDA, LAMBDA / 2.0, None, A).unwrap();
        assert!(l.centroid().norm() < 1e-12);
    }

    #[test]
    fn cylinder_radius_and_axis() {
        let l = initial_shape(ShapeKind::Cylinder, 100, LAMBDA, LAMBDA / 2.0, Some(0.1), A).unwrap();
        for p in l.positions() {
            assert!((p.x.hypot(p.y) - 0.1).abs() < 1e-15);
        }
        let c = l.centroid();
        assert!(c.x.hypot(c.y) < 1e-12);
        let big = initial_shape(ShapeKind::Cylinder, 300, LAMBDA, LAMBDA / 2.0, Some(0.1), A).unwrap();
        let c = big.centroid();
        assert!(c.norm() < 1e-12);
    }

    #[test]
    fn cylinder_spacing_at_least_requested() {
        let l = initial_shape(ShapeKind::Cylinder, 300, LAMBDA, LAMBDA / 2.0, Some(0.1), A).unwrap();
        let pts = l.positions();
        for i in 0..pts.len() {
            for j in (i + 1)..pts.len() {
                assert!((pts[i] - pts[j]).norm() >= LAMBDA / 2.0 * (1.0 - 1e-2));
            }
        }
    }

    #[test]
    fn sphere_points_on_surface_without_colinear_pairs() {
        let l = initial_shape(ShapeKind::Sphere, 100, LAMBDA, LAMBDA / 2.0, Some(0.1), A).unwrap();
        let pts = l.positions();
        for p in pts {
            assert!((p.norm() - 0.1).abs() < 1e-15);
        }
        for i in 0..pts.len() {
            for j in (i + 1)..pts.len() {
                let d = pts[i] - pts[j];
                assert!(d.x.hypot(d.y) > 1e-6 * LAMBDA);
                assert!(d.norm() >= LAMBDA / 2.0 * 0.99);
            }
        }
    }

    #[test]
    fn spacing_below_wire_diameter_rejected() {
        assert!(matches!(
            initial_shape(ShapeKind::Ula, 3, LAMBDA, A, None, A),
            Err(Error::Geometry(_))
        ));
        assert!(matches!(
            initial_shape(ShapeKind::Sphere, 3, LAMBDA, LAMBDA / 2.0, None, A),
            Err(Error::Geometry(_))
        ));
    }

    #[test]
    fn constrained_sets_contain_initial_layout() {
        for kind in [ShapeKind::Ula, ShapeKind::Upa, ShapeKind::Cylinder, ShapeKind::Sphere] {
            for n in [1, 4, 16, 130] {
                let l = initial_shape(kind, n, LAMBDA, LAMBDA / 2.0, Some(0.1), A).unwrap();
                let set = constrained_set(kind, &l, 1.5, LAMBDA / 4.0);
                set.validate().unwrap();
                for p in l.positions() {
                    assert!(set.contains(p, 1e-12), "{kind:?} {n} {p}");
                }
            }
        }
    }

    #[test]
    fn ascent_candidate_moves_alpha_along_surface() {
        let set = FeasibleSet::CylindricalBand {
            radius: 0.1,
            theta: Range::new(-PI, PI),
            z: Range::new(-1.0, 1.0),
        };
        let q = Vec3::new(0.1, 0.0, 0.0);
        let c = set.ascent_candidate(&q, &Vec3::new(5.0, 1.0, 0.0), 1e-4).unwrap().unwrap();
        assert!((c.x.hypot(c.y) - 0.1).abs() < 1e-15);
        assert!((c.y.atan2(c.x) * 0.1 - 1e-4).abs() < 1e-15);
        assert!(set.ascent_candidate(&q, &Vec3::new(3.0, 0.0, 0.0), 1e-4).unwrap().is_none());
    }
}
