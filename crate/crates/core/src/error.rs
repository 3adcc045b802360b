use thiserror::Error;

/// Errors surfaced by solvers, simulators, and input validation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} must be a probability in [0, 1], got {value}")]
    ProbabilityOutOfRange { what: String, value: f64 },

    #[error("{what} must be finite, got {value}")]
    NonFinite { what: String, value: f64 },

    #[error("{what} must be nonnegative, got {value}")]
    NegativeCost { what: String, value: f64 },

    #[error("horizon must contain at least one decision step")]
    EmptyHorizon,

    #[error("{what}: expected length {expected}, got {actual}")]
    LengthMismatch {
        what: String,
        expected: usize,
        actual: usize,
    },

    #[error("{what}: expected a {rows}x{cols} matrix, got {actual_rows}x{actual_cols}")]
    DimensionMismatch {
        what: String,
        rows: usize,
        cols: usize,
        actual_rows: usize,
        actual_cols: usize,
    },

    #[error("{what} must be symmetric: max |M - M'| entry is {asymmetry:e}")]
    NotSymmetric { what: String, asymmetry: f64 },

    #[error("{what} must be positive definite: smallest eigenvalue is {min_eigenvalue:e}")]
    NotPositiveDefinite { what: String, min_eigenvalue: f64 },

    #[error("state index {state} out of range for {n_states} states")]
    StateOutOfRange { state: usize, n_states: usize },

    #[error(
        "enumeration bound exceeded: horizon {horizon} (max {max_horizon}), \
         {n_states} states (max {max_states}); use the dynamic-programming solver instead"
    )]
    EnumerationBound {
        horizon: usize,
        max_horizon: usize,
        n_states: usize,
        max_states: usize,
    },

    #[error(
        "gain synthesis failed at step {step}: effort-weighted curvature is not \
         positive definite ({detail})"
    )]
    GainSynthesis { step: usize, detail: String },

    #[error(
        "no exact potential exists{}: continuation-gap residual {residual:e} exceeds \
         tolerance {tolerance:e}",
        step.map(|k| format!(" at step {k}")).unwrap_or_default()
    )]
    PotentialExistence {
        step: Option<usize>,
        residual: f64,
        tolerance: f64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

/// Validates that `value` is finite, returning it for chaining.
pub(crate) fn ensure_finite(what: &str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite {
            what: what.to_string(),
            value,
        })
    }
}

/// Validates that `value` is a finite probability in `[0, 1]`.
pub(crate) fn ensure_probability(what: &str, value: f64) -> Result<f64> {
    if value.is_finite() && (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(Error::ProbabilityOutOfRange {
            what: what.to_string(),
            value,
        })
    }
}

/// Validates that `value` is finite and nonnegative.
pub(crate) fn ensure_nonnegative(what: &str, value: f64) -> Result<f64> {
    ensure_finite(what, value)?;
    if value >= 0.0 {
        Ok(value)
    } else {
        Err(Error::NegativeCost {
            what: what.to_string(),
            value,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn probability_bounds() {
        assert!(ensure_probability("p", 0.0).is_ok());
        assert!(ensure_probability("p", 1.0).is_ok());
        assert!(ensure_probability("p", 1.0 + 1e-12).is_err());
        assert!(ensure_probability("p", -0.1).is_err());
        assert!(ensure_probability("p", f64::NAN).is_err());
    }

    #[test]
    fn nonnegative_rejects_nan_and_negative() {
        assert!(ensure_nonnegative("h", 0.0).is_ok());
        assert!(ensure_nonnegative("h", -1e-300).is_err());
        assert!(ensure_nonnegative("h", f64::INFINITY).is_err());
    }

    #[test]
    fn messages_name_the_offender() {
        let err = ensure_probability("takeover intent p[3]", 1.5).unwrap_err();
        assert!(err.to_string().contains("takeover intent p[3]"));
    }
}
