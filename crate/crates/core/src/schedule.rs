//! Horizons, per-step takeover-intent schedules, and behavioral strategies.

use crate::error::{ensure_probability, Error, Result};
use crate::takeover::Authority;

/// Number of decision steps `L >= 1`. Decision steps are indexed `0..L`;
/// terminal quantities live at index `L`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Horizon(usize);

impl Horizon {
    pub fn new(steps: usize) -> Result<Horizon> {
        if steps == 0 {
            Err(Error::EmptyHorizon)
        } else {
            Ok(Horizon(steps))
        }
    }

    pub fn steps(self) -> usize {
        self.0
    }
}

/// Per-step probability that a unilateral human takeover attempt succeeds
/// while the autonomous controller holds authority.
#[derive(Clone, Debug, PartialEq)]
pub struct IntentSchedule {
    values: Vec<f64>,
}

impl IntentSchedule {
    pub fn constant(intent: f64, horizon: Horizon) -> Result<IntentSchedule> {
        ensure_probability("takeover intent", intent)?;
        Ok(IntentSchedule {
            values: vec![intent; horizon.steps()],
        })
    }

    pub fn from_values(values: Vec<f64>) -> Result<IntentSchedule> {
        if values.is_empty() {
            return Err(Error::EmptyHorizon);
        }
        for (k, &p) in values.iter().enumerate() {
            ensure_probability(&format!("takeover intent at step {k}"), p)?;
        }
        Ok(IntentSchedule { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn at(&self, step: usize) -> f64 {
        self.values[step]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// State-independent randomized takeover policy: per step and per authority
/// state, the marginal probabilities with which each agent acts.
#[derive(Clone, Debug, PartialEq)]
pub struct BehavioralStrategy {
    // Indexed [step][authority.index()].
    human: Vec<[f64; 2]>,
    autonomous: Vec<[f64; 2]>,
}

impl BehavioralStrategy {
    /// Same marginals at every step: `human[i]` / `autonomous[i]` give the
    /// action probabilities while authority `i` (human = 0, autonomous = 1)
    /// holds the plant.
    pub fn constant(human: [f64; 2], autonomous: [f64; 2], horizon: Horizon) -> Result<Self> {
        Self::from_tables(
            vec![human; horizon.steps()],
            vec![autonomous; horizon.steps()],
        )
    }

    pub fn from_tables(human: Vec<[f64; 2]>, autonomous: Vec<[f64; 2]>) -> Result<Self> {
        if human.is_empty() {
            return Err(Error::EmptyHorizon);
        }
        if human.len() != autonomous.len() {
            return Err(Error::LengthMismatch {
                what: "behavioral strategy tables".to_string(),
                expected: human.len(),
                actual: autonomous.len(),
            });
        }
        for (k, (h, a)) in human.iter().zip(&autonomous).enumerate() {
            for (i, &p) in h.iter().enumerate() {
                ensure_probability(&format!("human action probability at step {k}, authority {i}"), p)?;
            }
            for (i, &p) in a.iter().enumerate() {
                ensure_probability(
                    &format!("autonomous action probability at step {k}, authority {i}"),
                    p,
                )?;
            }
        }
        Ok(BehavioralStrategy { human, autonomous })
    }

    pub fn len(&self) -> usize {
        self.human.len()
    }

    pub fn is_empty(&self) -> bool {
        self.human.is_empty()
    }

    /// Marginal action probabilities `(human, autonomous)` at `step` under
    /// authority `authority`.
    pub fn probabilities(&self, step: usize, authority: Authority) -> (f64, f64) {
        let i = authority.index();
        (self.human[step][i], self.autonomous[step][i])
    }
}
