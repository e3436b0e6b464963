//! Error type shared by every module of the crate.

use std::fmt;

use thiserror::Error;

/// Identifies one radiator taking part in an impedance evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Port {
    /// RIS element with its zero-based index.
    Element(usize),
    /// Base station antenna (transmitter).
    Bs,
    /// User equipment antenna (receiver).
    Ue,
}

impl fmt::Display for Port {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Port::Element(i) => write!(f, "element {i}"),
            Port::Bs => f.write_str("BS"),
            Port::Ue => f.write_str("UE"),
        }
    }
}

fn fmt_pair(pair: &Option<(Port, Port)>) -> String {
    match pair {
        Some((a, b)) => format!(" between {a} and {b}"),
        None => String::new(),
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature did not converge: estimated error {estimate:.3e} above tolerance {tol:.3e}")]
    Convergence { estimate: f64, tol: f64 },

    #[error("co-linear dipoles{}: transverse offset {offset:.3e} m", fmt_pair(.pair))]
    Colinear {
        offset: f64,
        pair: Option<(Port, Port)>,
    },

    #[error("overlapping co-linear dipoles{}: axial gap {gap:.3e} m", fmt_pair(.pair))]
    Overlap {
        gap: f64,
        pair: Option<(Port, Port)>,
    },

    #[error("singular impedance matrix (condition estimate {condition:.3e})")]
    SingularMatrix { condition: f64 },

    #[error("Neumann expansion outside its domain: ||G*Delta|| = {norm:.4} > {cap}")]
    ApproximationDomain { norm: f64, cap: f64 },

    #[error("coordinate pole: {0}")]
    Pole(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("pattern never drops below the half-power level on both sides of the peak")]
    NoCrossing,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("config file not found: {0}")]
    ConfigNotFound(String),

    #[error("I/O error: {0}")]
    Io(String),
}

impl Error {
    /// Attaches the radiator pair to kernel-level errors that do not carry one yet.
    pub fn with_pair(self, a: Port, b: Port) -> Self {
        match self {
            Error::Colinear { offset, pair: None } => Error::Colinear {
                offset,
                pair: Some((a, b)),
            },
            Error::Overlap { gap, pair: None } => Error::Overlap {
                gap,
                pair: Some((a, b)),
            },
            other => other,
        }
    }

    /// Machine-readable kind used in CLI error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Convergence { .. } => "convergence",
            Error::Colinear { .. } => "colinear",
            Error::Overlap { .. } => "overlap",
            Error::SingularMatrix { .. } => "singular-matrix",
            Error::ApproximationDomain { .. } => "approximation-domain",
            Error::Pole(_) => "pole",
            Error::Geometry(_) => "geometry",
            Error::NoCrossing => "no-crossing",
            Error::InvalidInput(_) => "invalid-input",
            Error::Parse { .. } => "parse",
            Error::Validation(_) => "validation",
            Error::ConfigNotFound(_) => "config-not-found",
            Error::Io(_) => "io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
