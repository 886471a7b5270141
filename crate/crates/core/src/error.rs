use alloc::string::String;
use core::fmt;

use crate::multi_index::MultiIndex;

#[derive(Debug, Clone, PartialEq)]
#[non_exhaustive]
pub enum Error {
    AxisOutOfRange { axis: usize, dimension: usize },
    DimensionMismatch { expected: usize, found: usize },
    ComponentMismatch { expected: usize, found: usize },
    /// 1-based position of the first basis element in the span of its predecessors.
    DependentBasis { position: usize },
    EmptyBasis,
    InvalidDomain(String),
    GridMismatch,
    /// A parameter outside its documented range.
    OutOfRange { what: &'static str, value: i64 },
    InvalidCover(String),
    QuadratureTooCoarse { resolution: usize },
    SingularGram,
    /// A linear solve left a residual above tolerance.
    ResidualTooLarge { residual: f64, tol: f64, context: String },
    /// `(I + A(x))` lost invertibility inside a patch.
    SingularDualSystem { point: usize },
    NonConstantRank { min: usize, max: usize },
    Uncoverable { uncovered: usize },
    EmptySeeds,
    StageLimit { stages: usize },
    /// Division by a defining function that is too small on its open set.
    MarginViolation { stage: usize, point: usize, value: f64 },
    OrderTooLow { elliptic_order: u32, required_above: u32 },
    NotElliptic { min_modulus: f64 },
    ZeroReciprocal,
    KinkPoint { x: f64 },
    VanishingLeadingCoefficient { at: f64 },
    MissingTerm(MultiIndex),
    Inconclusive(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::AxisOutOfRange { axis, dimension } => {
                write!(f, "axis {} out of range for dimension {}", axis, dimension)
            }
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {}, found {}", expected, found)
            }
            Error::ComponentMismatch { expected, found } => {
                write!(f, "component count mismatch: expected {}, found {}", expected, found)
            }
            Error::DependentBasis { position } => {
                write!(f, "basis element {} depends on the preceding elements", position)
            }
            Error::EmptyBasis => write!(f, "basis is empty"),
            Error::InvalidDomain(msg) => write!(f, "invalid domain: {}", msg),
            Error::GridMismatch => write!(f, "sampled coefficients live on different grids"),
            Error::OutOfRange { what, value } => write!(f, "{} out of range: {}", what, value),
            Error::InvalidCover(msg) => write!(f, "invalid chart cover: {}", msg),
            Error::QuadratureTooCoarse { resolution } => {
                write!(f, "quadrature resolution {} is below 64", resolution)
            }
            Error::SingularGram => write!(f, "Gram matrix is singular"),
            Error::ResidualTooLarge {
                residual,
                tol,
                context,
            } => write!(f, "residual {:e} exceeds {:e} ({})", residual, tol, context),
            Error::SingularDualSystem { point } => {
                write!(f, "I + A(x) is singular at grid point {}", point)
            }
            Error::NonConstantRank { min, max } => write!(
                f,
                "rank varies between {} and {} on the grid; use the stratified construction",
                min, max
            ),
            Error::Uncoverable { uncovered } => {
                write!(f, "{} grid points are not covered by any patch", uncovered)
            }
            Error::EmptySeeds => write!(f, "no seed points supplied"),
            Error::StageLimit { stages } => {
                write!(f, "stratification did not terminate within {} stages", stages)
            }
            Error::MarginViolation { stage, point, value } => write!(
                f,
                "defining function of stage {} is {:e} at grid point {}",
                stage, value, point
            ),
            Error::OrderTooLow {
                elliptic_order,
                required_above,
            } => write!(
                f,
                "elliptic operator has order {}, needs order above {}",
                elliptic_order, required_above
            ),
            Error::NotElliptic { min_modulus } => {
                write!(f, "principal symbol modulus drops to {:e}", min_modulus)
            }
            Error::ZeroReciprocal => write!(f, "reciprocal of a jet with zero constant term"),
            Error::KinkPoint { x } => write!(f, "{} is a piece boundary of the function", x),
            Error::VanishingLeadingCoefficient { at } => {
                write!(f, "leading coefficient vanishes at {}", at)
            }
            Error::MissingTerm(i) => write!(f, "operator has no term {}", i),
            Error::Inconclusive(msg) => write!(f, "construction inconclusive: {}", msg),
        }
    }
}

impl core::error::Error for Error {}
