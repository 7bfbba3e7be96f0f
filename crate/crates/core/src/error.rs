//! Crate-wide error type.
//!
//! One enum rather than per-module errors: the pipeline operations chain
//! (solve -> Borel -> continue -> Laplace -> jump -> fit), and a single type
//! keeps the chaining free of conversion noise.

use core::fmt;

/// Everything that can go wrong across the crate's operations.
///
/// Variants carry the minimal context needed to act on the failure; messages
/// are written for the command line, where they surface verbatim.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    // -- series -----------------------------------------------------------
    /// `compose(outer, inner)` requires `inner(0) = 0`.
    ComposeConstantTerm,
    /// Jet or tail level exceeds the truncation order of the operand.
    JetBeyondOrder { k: usize, order: usize },
    /// Operands have incompatible dimensions (component counts differ).
    DimensionMismatch { left: usize, right: usize },

    // -- odesys -----------------------------------------------------------
    /// The linear part `A_0` is not invertible; no unique formal solution.
    SingularLinearPart,
    /// Deriving the tail system produced a residual not divisible by `x^k`;
    /// the supplied jet does not match a solution of the system.
    DivisibilityFailure { k: usize, offending_order: usize },

    // -- resum ------------------------------------------------------------
    /// Borel transform requires a series with zero constant term.
    NonzeroConstantTerm,
    /// Gevrey estimation needs at least 20 nonzero coefficients in its window.
    TooFewCoefficients { have: usize, need: usize },
    /// The Padé table stayed rank-deficient all the way down to `M = 0`.
    DegenerateTable,
    /// A pole of the continued Borel function sits within guard distance of
    /// the integration ray (and deformation could not clear it).
    PoleOnRay { pole_re: f64, pole_im: f64 },
    /// `Re((e^{i theta}/z)^p) <= 0`: the Laplace kernel does not decay.
    NonDecayingIntegrand,
    /// Tanh-sinh refinement exhausted its levels above the error target.
    QuadratureStall { estimated_error: f64 },

    // -- stokes -----------------------------------------------------------
    /// Sample point lies outside the overlap sector of the two sector sums.
    OutOfSector,
    /// Least-squares fit produced non-finite parameters.
    FitDiverged,
    /// Multiplier samples scatter by more than 50% around their mean.
    InconsistentSamples { dispersion: f64 },
    /// SD check requires one report per singular direction.
    MissingDirection { index: usize },

    // -- dynamics ---------------------------------------------------------
    /// Trajectory left the configured box; the solution branch is not
    /// asymptotic to the formal solution.
    BlowUp { x: f64, norm: f64 },
    /// Step size underflowed without meeting the local error target.
    StepUnderflow { x: f64 },
    /// Winding input contains a zero (or sub-noise) sample.
    ZeroSample { index: usize },
    /// Consecutive winding samples jump by more than pi  in argument.
    UndersampledArc { index: usize },

    // -- probes -----------------------------------------------------------
    /// SAT mode requires `deg P < (p+1) * val P`.
    DegreeBoundViolated { index: usize },
    /// SAT mode requires pairwise distinct polynomials.
    DuplicatePolynomials { first: usize, second: usize },
    /// Probe polynomials must have positive leading coefficient.
    NonpositiveLeading { index: usize },
    /// Formal data is truncated below what the probe needs.
    InsufficientOrder { have: usize, need: usize },
    /// A probe polynomial maps a grid point outside the trajectory range.
    RangeExceeded { x: f64, image: f64 },

    // -- coefficient modes ------------------------------------------------
    /// Exact mode cannot represent the requested quantity (for example a
    /// Gamma value at a non-integer argument).
    ExactUnrepresentable,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Error::*;
        match self {
            ComposeConstantTerm => write!(f, "compose: inner series has nonzero constant term"),
            JetBeyondOrder { k, order } => {
                write!(f, "jet/tail level {k} exceeds truncation order {order}")
            }
            DimensionMismatch { left, right } => {
                write!(f, "dimension mismatch: {left} vs {right}")
            }
            SingularLinearPart => write!(f, "linear part A_0 is singular"),
            DivisibilityFailure { k, offending_order } => write!(
                f,
                "tail system residual not divisible by x^{k} (nonzero at order {offending_order})"
            ),
            NonzeroConstantTerm => write!(f, "Borel transform requires zero constant term"),
            TooFewCoefficients { have, need } => {
                write!(f, "Gevrey fit needs {need} nonzero coefficients, found {have}")
            }
            DegenerateTable => write!(f, "Pade table degenerate at every denominator degree"),
            PoleOnRay { pole_re, pole_im } => write!(
                f,
                "pole at ({pole_re:e}, {pole_im:e}) obstructs the integration ray"
            ),
            NonDecayingIntegrand => write!(f, "Laplace kernel does not decay along the ray"),
            QuadratureStall { estimated_error } => {
                write!(f, "quadrature stalled with estimated error {estimated_error:e}")
            }
            OutOfSector => write!(f, "sample outside the overlap sector"),
            FitDiverged => write!(f, "least-squares fit diverged"),
            InconsistentSamples { dispersion } => {
                write!(f, "multiplier samples disperse by {dispersion:.1}%")
            }
            MissingDirection { index } => {
                write!(f, "no Stokes report for singular direction {index}")
            }
            BlowUp { x, norm } => write!(f, "trajectory blow-up at x = {x:e} (norm {norm:e})"),
            StepUnderflow { x } => write!(f, "integrator step underflow at x = {x:e}"),
            ZeroSample { index } => write!(f, "winding sample {index} is zero"),
            UndersampledArc { index } => {
                write!(f, "argument jump >= pi between samples {} and {index}", index - 1)
            }
            DegreeBoundViolated { index } => {
                write!(f, "polynomial {index} violates deg P < (p+1) val P")
            }
            DuplicatePolynomials { first, second } => {
                write!(f, "polynomials {first} and {second} coincide")
            }
            NonpositiveLeading { index } => {
                write!(f, "polynomial {index} has nonpositive leading coefficient")
            }
            InsufficientOrder { have, need } => {
                write!(f, "need formal data to order {need}, have {have}")
            }
            RangeExceeded { x, image } => {
                write!(f, "P({x:e}) = {image:e} falls outside the trajectory range")
            }
            ExactUnrepresentable => write!(f, "quantity not representable in exact mode"),
        }
    }
}

impl core::error::Error for Error {}
