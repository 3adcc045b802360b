//! Finite-horizon solvers for cooperative human-autonomy takeover games.
//!
//! A plant is operated at each step by exactly one of two agents: a human
//! supervisor or an autonomous controller. Either side may spend effort to
//! take over (or hand off) authority; both sides share one objective, so the
//! interaction at each step is a team matrix game over the 2x2 action grid.
//! This crate provides:
//!
//! * the authority transition kernel and seeded sampling ([`takeover`]),
//! * the per-step 2x2 cost-to-go construction and equilibrium selection
//!   ([`matrix_game`]),
//! * exact dynamic programming and a brute-force enumeration oracle for
//!   finite-state instances ([`tabular`]),
//! * coupled Riccati-style recursions for linear plants with quadratic
//!   costs, including LQR gain synthesis ([`lq`]),
//! * a potential-game variant where the two agents carry distinct cost
//!   schedules ([`potential`]),
//! * seeded Monte Carlo simulation with exact expected-cost cross-checks
//!   and the bundled benchmark scenarios ([`sim`]).
//!
//! All randomness flows through explicitly seeded ChaCha streams; every
//! solver and simulator is deterministic given its inputs.

pub mod error;
pub mod lq;
pub mod matrix_game;
pub mod potential;
pub mod schedule;
pub mod sim;
pub mod tabular;
pub mod takeover;

pub use error::{Error, Result};
pub use matrix_game::{Branch, CostToGoMatrix, StepEquilibrium};
pub use schedule::{BehavioralStrategy, Horizon, IntentSchedule};
pub use takeover::{ActionPair, Authority, AuthorityDistribution};
