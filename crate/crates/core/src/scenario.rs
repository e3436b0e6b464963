//! Resolved simulation scenario and its TOML configuration format.
//!
//! ```toml
//! [scenario]
//! p_bs = [1.3, 0.0, 0.0]        # m
//! p_ue = [0.98, 0.56, -0.65]    # m
//! lambda = 0.01                 # m
//! wire_radius = 2e-5            # m, default λ/500
//! p_dbm = 10.0
//! sigma2_dbm = -80.0
//! y0 = [1.0, 0.0]               # re, im (S)
//! r0 = 0.2                      # Ω
//! b_min = -5000.0               # Ω
//! b_max = 188.0                 # Ω
//! n = 100
//!
//! [feasible_set]
//! mode = "unconstrained"        # or "constrained"
//! radius = 0.05                 # ball radius, unconstrained mode
//! scale = 1.5                   # half-range factor, constrained mode
//!
//! [initial_shape]
//! kind = "upa"                  # ula | upa | cylinder | sphere
//! spacing = 0.005               # m, default λ/16 (ula) or λ/2
//! radius = 0.1                  # m, cylinder and sphere
//!
//! [solver]
//! epsilon = 1e-6
//! i_max = 2000
//! neumann_cap = 0.1
//! bisection_tol = 0.01
//! alpha_init = 0.001            # m, default λ/10
//! max_halvings = 30
//! config_max_iters = 500
//! config_tol = 1e-6             # Ω
//! ```
//!
//! Every key is optional; missing keys take the defaults shown above.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::config_opt::{BoxSet, ConfigOptions};
use crate::error::{Error, Result};
use crate::geometry::{constrained_set, initial_shape, FeasibleSet, ShapeKind};
use crate::impedance::{DipoleLayout, Vec3};
use crate::shape_opt::SolverSettings;

/// Converts dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    1e-3 * 10f64.powf(dbm / 10.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum FeasibleSpec {
    /// Ball of the given radius about the origin.
    Unconstrained { radius: f64 },
    /// Bounds scaled about the initial shape.
    Constrained { scale: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShapeSpec {
    pub kind: ShapeKind,
    pub spacing: f64,
    pub radius: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub p_bs: Vec3,
    pub p_ue: Vec3,
    pub lambda: f64,
    pub wire_radius: f64,
    pub p_dbm: f64,
    pub sigma2_dbm: f64,
    /// Transmit power (W).
    pub p_w: f64,
    /// Noise power (W).
    pub sigma2_w: f64,
    #[serde(serialize_with = "ser_complex")]
    pub y0: Complex64,
    pub r0: f64,
    #[serde(serialize_with = "ser_box")]
    pub b_box: BoxSet,
    pub n: usize,
    pub feasible: FeasibleSpec,
    pub shape: ShapeSpec,
    pub solver: SolverSettings,
}

fn ser_complex<S: serde::Serializer>(z: &Complex64, s: S) -> std::result::Result<S::Ok, S::Error> {
    [z.re, z.im].serialize(s)
}

fn ser_box<S: serde::Serializer>(b: &BoxSet, s: S) -> std::result::Result<S::Ok, S::Error> {
    [b.b_min, b.b_max].serialize(s)
}

impl Default for Scenario {
    fn default() -> Self {
        parse_scenario("").expect("defaults are valid")
    }
}

impl Scenario {
    /// Initial layout described by the `[initial_shape]` section.
    pub fn initial_layout(&self) -> Result<DipoleLayout> {
        initial_shape(
            self.shape.kind,
            self.n,
            self.lambda,
            self.shape.spacing,
            self.shape.radius,
            self.wire_radius,
        )
    }

    /// Position constraints for a layout built from this scenario.
    pub fn feasible_set(&self, initial: &DipoleLayout) -> FeasibleSet {
        match self.feasible {
            FeasibleSpec::Unconstrained { radius } => FeasibleSet::Ball3D { radius },
            FeasibleSpec::Constrained { scale } => constrained_set(self.shape.kind, initial, scale, 0.5 * self.shape.spacing),
        }
    }

    pub fn snr_db(&self, h: Complex64) -> f64 {
        crate::channel::snr(h, self.p_w, self.sigma2_w)
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    #[serde(default)]
    scenario: RawScenario,
    #[serde(default)]
    feasible_set: RawFeasible,
    #[serde(default)]
    initial_shape: RawShape,
    #[serde(default)]
    solver: RawSolver,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    p_bs: Option<[f64; 3]>,
    p_ue: Option<[f64; 3]>,
    lambda: Option<f64>,
    wire_radius: Option<f64>,
    p_dbm: Option<f64>,
    sigma2_dbm: Option<f64>,
    y0: Option<[f64; 2]>,
    r0: Option<f64>,
    b_min: Option<f64>,
    b_max: Option<f64>,
    n: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFeasible {
    mode: Option<Mode>,
    radius: Option<f64>,
    scale: Option<f64>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Mode {
    Unconstrained,
    Constrained,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawShape {
    kind: Option<ShapeKind>,
    spacing: Option<f64>,
    radius: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    epsilon: Option<f64>,
    i_max: Option<usize>,
    neumann_cap: Option<f64>,
    bisection_tol: Option<f64>,
    alpha_init: Option<f64>,
    max_halvings: Option<usize>,
    config_max_iters: Option<usize>,
    config_tol: Option<f64>,
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

fn parse_error(text: &str, e: &toml::de::Error) -> Error {
    let (line, column) = e.span().map_or((1, 1), |s| line_column(text, s.start));
    Error::Parse {
        line,
        column,
        message: e.message().to_string(),
    }
}

/// Parses configuration text; an empty text gives the reference scenario.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    parse_scenario_with_overrides(text, &[])
}

/// Parses configuration text after applying `section.key=value` overrides.
///
/// Values are read as TOML literals; anything that does not parse as one is
/// taken as a bare string.
pub fn parse_scenario_with_overrides(text: &str, overrides: &[String]) -> Result<Scenario> {
    let mut table: Table = text.parse::<Table>().map_err(|e| parse_error(text, &e))?;
    for ov in overrides {
        apply_override(&mut table, ov)?;
    }
    let raw: RawFile = if overrides.is_empty() {
        toml::from_str(text).map_err(|e| parse_error(text, &e))?
    } else {
        let merged = toml::to_string(&table).map_err(|e| Error::InvalidInput(e.to_string()))?;
        toml::from_str(&merged).map_err(|e| parse_error(&merged, &e))?
    };
    resolve(raw)
}

fn apply_override(table: &mut Table, ov: &str) -> Result<()> {
    let (key, value) = ov
        .split_once('=')
        .ok_or_else(|| Error::InvalidInput(format!("override `{ov}` is not key=value")))?;
    let (section, field) = key
        .trim()
        .split_once('.')
        .ok_or_else(|| Error::InvalidInput(format!("override key `{key}` must be section.key")))?;
    let value = value.trim();
    let parsed = format!("v = {value}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(value.to_string()));
    let entry = table
        .entry(section.to_string())
        .or_insert_with(|| Value::Table(Table::new()));
    match entry {
        Value::Table(t) => {
            t.insert(field.to_string(), parsed);
            Ok(())
        }
        _ => Err(Error::InvalidInput(format!("`{section}` is not a section"))),
    }
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Validation(msg()))
    }
}

fn resolve(raw: RawFile) -> Result<Scenario> {
    let s = raw.scenario;
    let lambda = s.lambda.unwrap_or(0.01);
    check(lambda > 0.0 && lambda.is_finite(), || format!("lambda must be > 0, got {lambda}"))?;
    let wire_radius = s.wire_radius.unwrap_or(lambda / 500.0);
    check(wire_radius > 0.0 && wire_radius <= lambda / 100.0, || {
        format!("wire_radius must be in (0, lambda/100], got {wire_radius}")
    })?;
    let p_bs = Vec3::from(s.p_bs.unwrap_or([1.3, 0.0, 0.0]));
    let p_ue = Vec3::from(s.p_ue.unwrap_or([0.98, 0.56, -0.65]));
    check(p_bs.iter().chain(p_ue.iter()).all(|v| v.is_finite()), || {
        "BS and UE positions must be finite".into()
    })?;
    let p_dbm = s.p_dbm.unwrap_or(10.0);
    let sigma2_dbm = s.sigma2_dbm.unwrap_or(-80.0);
    check(p_dbm.is_finite() && sigma2_dbm.is_finite(), || "powers must be finite".into())?;
    let [y_re, y_im] = s.y0.unwrap_or([1.0, 0.0]);
    let y0 = Complex64::new(y_re, y_im);
    check(y0.norm() > 0.0 && y0.norm().is_finite(), || "y0 must be finite and nonzero".into())?;
    let r0 = s.r0.unwrap_or(0.2);
    check(r0 >= 0.0 && r0.is_finite(), || format!("r0 must be >= 0, got {r0}"))?;
    let b_box = BoxSet::new(s.b_min.unwrap_or(-5000.0), s.b_max.unwrap_or(188.0))?;
    let n = s.n.unwrap_or(100);
    check(n >= 1, || "n must be >= 1".into())?;

    let f = raw.feasible_set;
    let feasible = match f.mode.unwrap_or(Mode::Unconstrained) {
        Mode::Unconstrained => {
            let radius = f.radius.unwrap_or(0.05);
            check(radius > 0.0 && radius.is_finite(), || format!("feasible_set.radius must be > 0, got {radius}"))?;
            FeasibleSpec::Unconstrained { radius }
        }
        Mode::Constrained => {
            let scale = f.scale.unwrap_or(1.5);
            check(scale > 0.0 && scale.is_finite(), || format!("feasible_set.scale must be > 0, got {scale}"))?;
            FeasibleSpec::Constrained { scale }
        }
    };

    let sh = raw.initial_shape;
    let kind = sh.kind.unwrap_or(ShapeKind::Upa);
    let spacing = sh.spacing.unwrap_or(match kind {
        ShapeKind::Ula => lambda / 16.0,
        _ => lambda / 2.0,
    });
    check(spacing > 0.0 && spacing.is_finite(), || format!("spacing must be > 0, got {spacing}"))?;
    let radius = if kind.is_curved() {
        let r = sh.radius.unwrap_or(0.1);
        check(r > 0.0 && r.is_finite(), || format!("initial_shape.radius must be > 0, got {r}"))?;
        Some(r)
    } else {
        sh.radius
    };

    let v = raw.solver;
    let defaults = ConfigOptions::default();
    let solver = SolverSettings {
        epsilon: v.epsilon.unwrap_or(1e-6),
        i_max: v.i_max.unwrap_or(2000),
        neumann_cap: v.neumann_cap.unwrap_or(crate::channel::NEUMANN_CAP),
        bisection_tol: v.bisection_tol.unwrap_or(1e-2),
        alpha_init: v.alpha_init.unwrap_or(lambda / 10.0),
        max_halvings: v.max_halvings.unwrap_or(30),
        config: ConfigOptions {
            max_iters: v.config_max_iters.unwrap_or(defaults.max_iters),
            tol: v.config_tol.unwrap_or(defaults.tol),
            ..defaults
        },
    };
    solver.validate()?;

    Ok(Scenario {
        p_bs,
        p_ue,
        lambda,
        wire_radius,
        p_dbm,
        sigma2_dbm,
        p_w: dbm_to_watts(p_dbm),
        sigma2_w: dbm_to_watts(sigma2_dbm),
        y0,
        r0,
        b_box,
        n,
        feasible,
        shape: ShapeSpec { kind, spacing, radius },
        solver,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_reference_defaults() {
        let s = parse_scenario("").unwrap();
        assert_eq!(s.p_bs, Vec3::new(1.3, 0.0, 0.0));
        assert_eq!(s.p_ue, Vec3::new(0.98, 0.56, -0.65));
        assert_eq!(s.lambda, 0.01);
        assert_eq!(s.p_dbm, 10.0);
        assert_eq!(s.sigma2_dbm, -80.0);
        assert!((s.p_w - 0.01).abs() < 1e-18);
        assert!((s.sigma2_w - 1e-11).abs() < 1e-26);
        assert_eq!(s.y0, Complex64::new(1.0, 0.0));
        assert_eq!(s.r0, 0.2);
        assert_eq!((s.b_box.b_min, s.b_box.b_max), (-5000.0, 188.0));
        assert_eq!(s.solver.i_max, 2000);
        assert_eq!(s.solver.epsilon, 1e-6);
        assert_eq!(s.feasible, FeasibleSpec::Unconstrained { radius: 0.05 });
        assert_eq!(s.n, 100);
    }

    #[test]
    fn inverted_box_is_validation_error() {
        let r = parse_scenario("[scenario]\nb_min = 10.0\nb_max = -10.0\n");
        assert!(matches!(r, Err(Error::Validation(_))));
    }

    #[test]
    fn unknown_key_is_parse_error_naming_it() {
        let r = parse_scenario("[scenario]\nlambda = 0.01\nfooo = 3\n");
        match r {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 3);
                assert!(message.contains("fooo"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn syntax_error_has_position() {
        match parse_scenario("[solver]\nepsilon = = 1\n") {
            Err(Error::Parse { line, column, .. }) => {
                assert_eq!(line, 2);
                assert!(column > 1);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn overrides_take_precedence() {
        let s = parse_scenario_with_overrides(
            "[scenario]\nn = 100\n",
            &["scenario.n=16".into(), "initial_shape.kind=cylinder".into(), "feasible_set.mode=constrained".into()],
        )
        .unwrap();
        assert_eq!(s.n, 16);
        assert_eq!(s.shape.kind, ShapeKind::Cylinder);
        assert_eq!(s.shape.radius, Some(0.1));
        assert_eq!(s.feasible, FeasibleSpec::Constrained { scale: 1.5 });
    }

    #[test]
    fn bad_override_rejected() {
        assert!(parse_scenario_with_overrides("", &["n=3".into()]).is_err());
        assert!(matches!(
            parse_scenario_with_overrides("", &["scenario.nn=3".into()]),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn ula_default_spacing_is_sixteenth_wavelength() {
        let s = parse_scenario("[initial_shape]\nkind = \"ula\"\n").unwrap();
        assert_eq!(s.shape.spacing, 0.01 / 16.0);
    }
}
