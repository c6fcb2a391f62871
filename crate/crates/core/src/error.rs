use num_complex::Complex64;
use thiserror::Error;

use crate::expr::{ParseError, Span};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("series has a vanishing constant term (|c0| = {modulus:.3e}){}", span_suffix(.span))]
    ZeroConstantTerm { modulus: f64, span: Option<Span> },

    #[error("series centers differ: {left} vs {right}")]
    CenterMismatch { left: Complex64, right: Complex64 },

    #[error("non-finite coefficient produced by {op}")]
    NonFinite { op: &'static str },

    #[error("point {z} lies outside the trust radius {radius:.3e} around {center}")]
    OutsideRadius {
        z: Complex64,
        center: Complex64,
        radius: f64,
    },

    #[error("derivative vanishes at {z} (critical point)")]
    CriticalPoint { z: Complex64 },

    #[error("map vanishes at {z}")]
    Vanishing { z: Complex64 },

    #[error("dilatation |w| = {modulus} too close to or beyond the unit circle at {z}")]
    DegenerateDilatation { z: Complex64, modulus: f64 },

    #[error("rotation factor {lambda} is not unimodular")]
    NotUnimodular { lambda: Complex64 },

    #[error("power exponent must be nonzero")]
    ZeroExponent,

    #[error("partner recursion broke down at order {order}")]
    RecursionBreakdown { order: usize },

    #[error("constant c = {c} is not admissible")]
    BadConstant { c: Complex64 },

    #[error("closed-form inversion missed the branch (forward error {residual:.3e})")]
    BranchMiss { residual: f64 },

    #[error("argument vanishes")]
    ZeroArgument,

    #[error("least-squares fit is singular (smallest singular value {sigma_min:.3e})")]
    SingularFit { sigma_min: f64 },

    #[error("expression cannot be evaluated at {z}: {reason}{}", span_suffix(.span))]
    EvalDomain {
        z: Complex64,
        reason: &'static str,
        span: Option<Span>,
    },

    #[error("series order {order} outside supported range {min}..={max}")]
    InvalidOrder { order: usize, min: usize, max: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Parse(#[from] ParseError),
}

fn span_suffix(span: &Option<Span>) -> String {
    match span {
        Some(s) => format!(" (source bytes {}..{})", s.start, s.end),
        None => String::new(),
    }
}

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::ZeroConstantTerm { .. } => "ZeroConstantTerm",
            Error::CenterMismatch { .. } => "CenterMismatch",
            Error::NonFinite { .. } => "NonFinite",
            Error::OutsideRadius { .. } => "OutsideRadius",
            Error::CriticalPoint { .. } => "CriticalPoint",
            Error::Vanishing { .. } => "Vanishing",
            Error::DegenerateDilatation { .. } => "DegenerateDilatation",
            Error::NotUnimodular { .. } => "NotUnimodular",
            Error::ZeroExponent => "ZeroExponent",
            Error::RecursionBreakdown { .. } => "RecursionBreakdown",
            Error::BadConstant { .. } => "BadConstant",
            Error::BranchMiss { .. } => "BranchMiss",
            Error::ZeroArgument => "ZeroArgument",
            Error::SingularFit { .. } => "SingularFit",
            Error::EvalDomain { .. } => "EvalDomain",
            Error::InvalidOrder { .. } => "InvalidOrder",
            Error::Config(_) => "Config",
            Error::Parse(_) => "ParseError",
        }
    }

    /// Attach a source span to span-less expression errors.
    pub(crate) fn with_span(self, at: Span) -> Self {
        match self {
            Error::ZeroConstantTerm {
                modulus,
                span: None,
            } => Error::ZeroConstantTerm {
                modulus,
                span: Some(at),
            },
            Error::EvalDomain {
                z,
                reason,
                span: None,
            } => Error::EvalDomain {
                z,
                reason,
                span: Some(at),
            },
            other => other,
        }
    }
}
