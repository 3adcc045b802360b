//! Authority state, joint takeover actions, and the transition kernel.

use crate::error::{ensure_probability, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Which agent currently operates the plant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Authority {
    Human,
    Autonomous,
}

impl Authority {
    pub const BOTH: [Authority; 2] = [Authority::Human, Authority::Autonomous];

    /// Stable index used for table lookups: human = 0, autonomous = 1.
    pub fn index(self) -> usize {
        match self {
            Authority::Human => 0,
            Authority::Autonomous => 1,
        }
    }

    /// Short label used in reports and CSV output.
    pub fn label(self) -> &'static str {
        match self {
            Authority::Human => "H",
            Authority::Autonomous => "A",
        }
    }

    pub fn other(self) -> Authority {
        match self {
            Authority::Human => Authority::Autonomous,
            Authority::Autonomous => Authority::Human,
        }
    }
}

/// One step of joint binary intents. `human` is the human's takeover action
/// (a handover offer while the human holds authority); `autonomous` is the
/// autonomous side's counterpart. `true` means act, `false` means idle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ActionPair {
    pub human: bool,
    pub autonomous: bool,
}

impl ActionPair {
    /// All four joint actions in row-major order over (human, autonomous).
    pub const ALL: [ActionPair; 4] = [
        ActionPair { human: false, autonomous: false },
        ActionPair { human: false, autonomous: true },
        ActionPair { human: true, autonomous: false },
        ActionPair { human: true, autonomous: true },
    ];

    pub fn new(human: bool, autonomous: bool) -> ActionPair {
        ActionPair { human, autonomous }
    }

    pub fn idle() -> ActionPair {
        ActionPair { human: false, autonomous: false }
    }

    /// Row index into a 2x2 cost-to-go matrix (human side).
    pub fn row(self) -> usize {
        self.human as usize
    }

    /// Column index into a 2x2 cost-to-go matrix (autonomous side).
    pub fn col(self) -> usize {
        self.autonomous as usize
    }
}

/// Distribution over the next authority state. Stored as the probability of
/// the human holding authority next step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AuthorityDistribution {
    human: f64,
}

impl AuthorityDistribution {
    pub fn certain(next: Authority) -> AuthorityDistribution {
        match next {
            Authority::Human => AuthorityDistribution { human: 1.0 },
            Authority::Autonomous => AuthorityDistribution { human: 0.0 },
        }
    }

    /// Probability the human holds authority at the next step.
    pub fn human(self) -> f64 {
        self.human
    }

    /// Probability the autonomous controller holds authority at the next step.
    pub fn autonomous(self) -> f64 {
        1.0 - self.human
    }

    /// `Some(next)` when the transition is deterministic.
    pub fn certain_outcome(self) -> Option<Authority> {
        if self.human == 1.0 {
            Some(Authority::Human)
        } else if self.human == 0.0 {
            Some(Authority::Autonomous)
        } else {
            None
        }
    }

    /// Draws the next authority. Point-mass distributions never consume
    /// randomness, so deterministic branches do not perturb the stream.
    pub fn sample(self, rng: &mut impl Rng) -> Authority {
        match self.certain_outcome() {
            Some(next) => next,
            None => {
                if rng.gen_bool(self.human) {
                    Authority::Human
                } else {
                    Authority::Autonomous
                }
            }
        }
    }
}

/// Authority transition kernel.
///
/// While the human operates, authority moves to the autonomous controller
/// only when both sides act (a handover offer that is accepted); every other
/// joint action keeps the human in place. While the autonomous controller
/// operates, a joint action hands authority back to the human outright, a
/// unilateral human attempt succeeds with probability `intent`, and
/// otherwise the controller keeps authority.
pub fn transition_distribution(
    current: Authority,
    action: ActionPair,
    intent: f64,
) -> Result<AuthorityDistribution> {
    let intent = ensure_probability("takeover intent", intent)?;
    let dist = match current {
        Authority::Human => {
            if action.human && action.autonomous {
                AuthorityDistribution::certain(Authority::Autonomous)
            } else {
                AuthorityDistribution::certain(Authority::Human)
            }
        }
        Authority::Autonomous => match (action.human, action.autonomous) {
            (true, true) => AuthorityDistribution::certain(Authority::Human),
            (true, false) => AuthorityDistribution { human: intent },
            _ => AuthorityDistribution::certain(Authority::Autonomous),
        },
    };
    Ok(dist)
}

/// Independent generator for stream `stream` under `root_seed`. Streams with
/// distinct ids never share draws, which keeps parallel rollouts and other
/// consumers decoupled from scheduling order.
pub fn substream(root_seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(root_seed);
    rng.set_stream(stream);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn human_authority_transitions_are_deterministic() {
        for action in ActionPair::ALL {
            let dist = transition_distribution(Authority::Human, action, 0.37).unwrap();
            let expected = if action.human && action.autonomous {
                Authority::Autonomous
            } else {
                Authority::Human
            };
            assert_eq!(dist.certain_outcome(), Some(expected), "{action:?}");
        }
    }

    #[test]
    fn autonomous_authority_transitions() {
        let p = 0.37;
        let idle = transition_distribution(Authority::Autonomous, ActionPair::new(false, false), p)
            .unwrap();
        assert_eq!(idle.certain_outcome(), Some(Authority::Autonomous));

        let request =
            transition_distribution(Authority::Autonomous, ActionPair::new(false, true), p)
                .unwrap();
        assert_eq!(request.certain_outcome(), Some(Authority::Autonomous));

        let attempt =
            transition_distribution(Authority::Autonomous, ActionPair::new(true, false), p)
                .unwrap();
        assert_eq!(attempt.certain_outcome(), None);
        assert_eq!(attempt.human(), p);
        assert_eq!(attempt.autonomous(), 1.0 - p);

        let joint = transition_distribution(Authority::Autonomous, ActionPair::new(true, true), p)
            .unwrap();
        assert_eq!(joint.certain_outcome(), Some(Authority::Human));
    }

    #[test]
    fn attempt_degenerates_at_extreme_intent() {
        let never = transition_distribution(Authority::Autonomous, ActionPair::new(true, false), 0.0)
            .unwrap();
        assert_eq!(never.certain_outcome(), Some(Authority::Autonomous));
        let always =
            transition_distribution(Authority::Autonomous, ActionPair::new(true, false), 1.0)
                .unwrap();
        assert_eq!(always.certain_outcome(), Some(Authority::Human));
    }

    #[test]
    fn invalid_intent_rejected() {
        assert!(transition_distribution(Authority::Human, ActionPair::idle(), -0.1).is_err());
        assert!(transition_distribution(Authority::Human, ActionPair::idle(), 1.5).is_err());
        assert!(transition_distribution(Authority::Human, ActionPair::idle(), f64::NAN).is_err());
    }

    #[test]
    fn point_mass_sampling_consumes_no_randomness() {
        let mut a = substream(7, 0);
        let mut b = substream(7, 0);
        let dist = AuthorityDistribution::certain(Authority::Human);
        for _ in 0..5 {
            dist.sample(&mut a);
        }
        assert_eq!(a.gen::<u64>(), b.gen::<u64>());
    }

    #[test]
    fn substreams_are_independent_and_reproducible() {
        let mut a0 = substream(42, 0);
        let mut a0_again = substream(42, 0);
        let mut a1 = substream(42, 1);
        let x: [u64; 4] = core::array::from_fn(|_| a0.gen());
        let y: [u64; 4] = core::array::from_fn(|_| a0_again.gen());
        let z: [u64; 4] = core::array::from_fn(|_| a1.gen());
        assert_eq!(x, y);
        assert_ne!(x, z);
    }

    #[test]
    fn mixed_sampling_matches_probability() {
        let mut rng = substream(9, 0);
        let dist =
            transition_distribution(Authority::Autonomous, ActionPair::new(true, false), 0.25)
                .unwrap();
        let n = 100_000;
        let hits = (0..n)
            .filter(|_| dist.sample(&mut rng) == Authority::Human)
            .count();
        let freq = hits as f64 / n as f64;
        // 4-sigma band for a Bernoulli(0.25) mean over n draws.
        let band = 4.0 * (0.25f64 * 0.75 / n as f64).sqrt();
        assert!((freq - 0.25).abs() <= band, "freq {freq}");
    }
}
