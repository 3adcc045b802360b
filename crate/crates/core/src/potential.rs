//! Potential-game variant: the two agents carry distinct cost schedules.
//!
//! Here a unilateral human attempt always succeeds (the certain-attempt
//! regime), but each agent evaluates outcomes against its own stage,
//! terminal, and takeover costs, so each step is a bimatrix game instead of
//! a team game. While the autonomous side operates, deviation gains are
//! action-independent and an exact potential always exists. While the human
//! operates, one exists exactly when both agents see the same
//! authority-value gap; the recursion checks that continuation-gap identity
//! every step and either rejects or records violations.
//!
//! Branch selection coincides with the potential argmin (ties resolved as
//! in the team game), so with identical agent schedules the recursion
//! degenerates to the team recursion with certain attempts.

use crate::error::{Error, Result};
use crate::lq::{
    classify_autonomous, classify_human, pullback, quadratic_form, ClosedLoopPair,
    QuadraticCostSchedule, StepWarning,
};
use crate::matrix_game::{cost_to_go_autonomous, cost_to_go_human, Branch, CostToGoMatrix};
use crate::takeover::{ActionPair, Authority};
use nalgebra::{DMatrix, DVector};

/// A pair of values indexed by which agent's objective they belong to.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PerAgent<T> {
    pub human: T,
    pub autonomous: T,
}

impl<T> PerAgent<T> {
    pub fn new(human: T, autonomous: T) -> PerAgent<T> {
        PerAgent { human, autonomous }
    }

    pub fn get(&self, agent: Authority) -> &T {
        match agent {
            Authority::Human => &self.human,
            Authority::Autonomous => &self.autonomous,
        }
    }
}

/// Per-agent quadratic cost schedules (same shapes for both agents).
pub type AgentCostSchedules = PerAgent<QuadraticCostSchedule>;

/// One agent's view of a single step: continuation values per next
/// authority, and the takeover costs its objective charges when the human
/// (resp. autonomous) side acts.
#[derive(Clone, Copy, Debug)]
pub struct AgentStep {
    pub to_human: f64,
    pub to_autonomous: f64,
    pub human_cost: f64,
    pub autonomous_cost: f64,
}

/// The step game as seen by each agent: one cost-to-go matrix per objective
/// over the shared 2x2 action grid.
#[derive(Clone, Copy, Debug)]
pub struct BimatrixPair {
    pub human: CostToGoMatrix,
    pub autonomous: CostToGoMatrix,
}

/// Builds both agents' cost-to-go matrices for a step under `state`
/// authority, in the certain-attempt regime.
pub fn build_bimatrix(state: Authority, views: &PerAgent<AgentStep>) -> Result<BimatrixPair> {
    let build = |view: &AgentStep| -> Result<CostToGoMatrix> {
        match state {
            Authority::Human => cost_to_go_human(
                view.to_human,
                view.to_autonomous,
                view.human_cost,
                view.autonomous_cost,
            ),
            Authority::Autonomous => cost_to_go_autonomous(
                view.to_human,
                view.to_autonomous,
                view.human_cost,
                view.autonomous_cost,
                1.0,
            ),
        }
    };
    Ok(BimatrixPair {
        human: build(&views.human)?,
        autonomous: build(&views.autonomous)?,
    })
}

/// Whether the bimatrix game admits an exact potential, by the four-cycle
/// test: deviator cost changes around the action cycle
/// `(0,0) -> (1,0) -> (1,1) -> (0,1) -> (0,0)` must cancel.
pub fn check_exact_potential(pair: &BimatrixPair, tolerance: f64) -> bool {
    alternating_cycle_sum(pair).abs() <= tolerance
}

/// Signed sum of deviator cost changes around the action cycle; zero exactly
/// when an exact potential exists. Row moves are evaluated against the human
/// agent's matrix, column moves against the autonomous agent's.
pub fn alternating_cycle_sum(pair: &BimatrixPair) -> f64 {
    let h = |r: bool, c: bool| pair.human.entry(r, c);
    let a = |r: bool, c: bool| pair.autonomous.entry(r, c);
    (h(true, false) - h(false, false))
        + (a(true, true) - a(true, false))
        + (h(false, true) - h(true, true))
        + (a(false, false) - a(false, true))
}

/// Exact potential of the step game: a single 2x2 table whose differences
/// reproduce each deviator's cost changes. Any pure minimizer of the
/// potential is a Nash equilibrium of the bimatrix game.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PotentialMatrix {
    entries: [[f64; 2]; 2],
}

impl PotentialMatrix {
    pub fn entries(&self) -> [[f64; 2]; 2] {
        self.entries
    }

    pub fn at(&self, action: ActionPair) -> f64 {
        self.entries[action.row()][action.col()]
    }

    /// First minimizing joint action in row-major order.
    pub fn argmin(&self) -> ActionPair {
        let mut best = ActionPair::idle();
        let mut best_value = f64::INFINITY;
        for action in ActionPair::ALL {
            let v = self.at(action);
            if v < best_value {
                best_value = v;
                best = action;
            }
        }
        best
    }
}

const EXISTENCE_RELATIVE_TOLERANCE: f64 = 1e-9;

/// Builds the exact potential of the step game, normalized to zero at the
/// joint action. Errors while the human operates if the two agents' value
/// gaps disagree beyond a relative 1e-9 (no exact potential exists); the
/// autonomous-authority game always has one.
pub fn build_potential(state: Authority, views: &PerAgent<AgentStep>) -> Result<PotentialMatrix> {
    // Validate inputs by building the matrices.
    build_bimatrix(state, views)?;
    let h_cost = views.human.human_cost;
    let a_cost = views.autonomous.autonomous_cost;
    match state {
        Authority::Human => {
            let gap_h = views.human.to_autonomous - views.human.to_human;
            let gap_a = views.autonomous.to_autonomous - views.autonomous.to_human;
            let residual = (gap_h - gap_a).abs();
            let tolerance =
                EXISTENCE_RELATIVE_TOLERANCE * gap_h.abs().max(gap_a.abs()).max(1.0);
            if residual > tolerance {
                return Err(Error::PotentialExistence {
                    step: None,
                    residual,
                    tolerance,
                });
            }
            let lead = -gap_h - h_cost;
            Ok(PotentialMatrix {
                entries: [[lead - a_cost, lead], [-gap_a - a_cost, 0.0]],
            })
        }
        Authority::Autonomous => {
            let gap_h = views.human.to_autonomous - views.human.to_human;
            let lead = gap_h - h_cost;
            Ok(PotentialMatrix {
                entries: [[lead - a_cost, lead], [-a_cost, 0.0]],
            })
        }
    }
}

/// What the recursion does when a step has no exact potential.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExistencePolicy {
    /// Stop with a structured error naming the offending step.
    Enforce,
    /// Keep solving and record the violation.
    Record,
}

#[derive(Clone, Copy, Debug)]
pub struct PotentialOptions {
    pub policy: ExistencePolicy,
    /// Relative tolerance on the continuation-gap identity.
    pub tolerance: f64,
}

impl Default for PotentialOptions {
    fn default() -> PotentialOptions {
        PotentialOptions {
            policy: ExistencePolicy::Enforce,
            tolerance: EXISTENCE_RELATIVE_TOLERANCE,
        }
    }
}

/// A step whose human-authority game had no exact potential (recorded under
/// [`ExistencePolicy::Record`]).
#[derive(Clone, Copy, Debug)]
pub struct ExistenceRecord {
    pub step: usize,
    pub residual: f64,
}

/// Output of the per-agent value recursion: one value matrix per
/// (authority state, agent objective), the shared branch per step and
/// authority, the per-step existence residuals, and any violations or
/// indefinite-branch warnings.
#[derive(Clone, Debug)]
pub struct PotentialSolution {
    q_human_authority: PerAgent<Vec<DMatrix<f64>>>,
    q_autonomous_authority: PerAgent<Vec<DMatrix<f64>>>,
    branch_human: Vec<Branch>,
    branch_autonomous: Vec<Branch>,
    existence_residuals: Vec<f64>,
    violations: Vec<ExistenceRecord>,
    warnings: Vec<StepWarning>,
}

impl PotentialSolution {
    pub fn horizon(&self) -> usize {
        self.branch_human.len()
    }

    /// Value matrix of `agent`'s objective at `step` under `state` authority.
    pub fn q(&self, step: usize, state: Authority, agent: Authority) -> &DMatrix<f64> {
        match state {
            Authority::Human => &self.q_human_authority.get(agent)[step],
            Authority::Autonomous => &self.q_autonomous_authority.get(agent)[step],
        }
    }

    pub fn value(&self, step: usize, x: &DVector<f64>, state: Authority, agent: Authority) -> f64 {
        quadratic_form(self.q(step, state, agent), x)
    }

    pub fn branch(&self, step: usize, state: Authority) -> Branch {
        match state {
            Authority::Human => self.branch_human[step],
            Authority::Autonomous => self.branch_autonomous[step],
        }
    }

    pub fn branches(&self, state: Authority) -> &[Branch] {
        match state {
            Authority::Human => &self.branch_human,
            Authority::Autonomous => &self.branch_autonomous,
        }
    }

    /// Continuation-gap residual per step (human-authority existence test).
    pub fn existence_residuals(&self) -> &[f64] {
        &self.existence_residuals
    }

    pub fn violations(&self) -> &[ExistenceRecord] {
        &self.violations
    }

    pub fn warnings(&self) -> &[StepWarning] {
        &self.warnings
    }
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |acc, &v| acc.max(v.abs()))
}

/// Backward recursion for per-agent value matrices in the certain-attempt
/// regime. Both schedules must share the closed loops' horizon and state
/// dimension.
pub fn solve_potential_recursion(
    loops: &ClosedLoopPair,
    schedules: &AgentCostSchedules,
    options: &PotentialOptions,
) -> Result<PotentialSolution> {
    let steps = loops.horizon();
    let n = loops.state_dim();
    for (agent, schedule) in [
        ("human-agent", &schedules.human),
        ("autonomous-agent", &schedules.autonomous),
    ] {
        if schedule.horizon() != steps {
            return Err(Error::LengthMismatch {
                what: format!("{agent} cost schedule"),
                expected: steps,
                actual: schedule.horizon(),
            });
        }
        if schedule.state_dim() != n {
            return Err(Error::DimensionMismatch {
                what: format!("{agent} cost schedule"),
                rows: n,
                cols: n,
                actual_rows: schedule.state_dim(),
                actual_cols: schedule.state_dim(),
            });
        }
    }

    let mut q_h = PerAgent::new(
        vec![DMatrix::zeros(n, n); steps + 1],
        vec![DMatrix::zeros(n, n); steps + 1],
    );
    let mut q_a = PerAgent::new(
        vec![DMatrix::zeros(n, n); steps + 1],
        vec![DMatrix::zeros(n, n); steps + 1],
    );
    q_h.human[steps] = schedules.human.terminal_cost(Authority::Human).clone();
    q_h.autonomous[steps] = schedules
        .autonomous
        .terminal_cost(Authority::Human)
        .clone();
    q_a.human[steps] = schedules
        .human
        .terminal_cost(Authority::Autonomous)
        .clone();
    q_a.autonomous[steps] = schedules
        .autonomous
        .terminal_cost(Authority::Autonomous)
        .clone();

    let mut branch_human = vec![Branch::Idle; steps];
    let mut branch_autonomous = vec![Branch::Idle; steps];
    let mut existence_residuals = vec![0.0; steps];
    let mut violations = Vec::new();
    let mut warnings = Vec::new();

    for k in (0..steps).rev() {
        let stay_h = PerAgent::new(
            pullback(loops.human(k), &q_h.human[k + 1]),
            pullback(loops.human(k), &q_h.autonomous[k + 1]),
        );
        let stay_a = PerAgent::new(
            pullback(loops.autonomous(k), &q_a.human[k + 1]),
            pullback(loops.autonomous(k), &q_a.autonomous[k + 1]),
        );

        // Existence: both agents must see the same authority-value gap.
        let gap_h = &stay_a.human - &stay_h.human;
        let gap_a = &stay_a.autonomous - &stay_h.autonomous;
        let residual = max_abs(&(&gap_h - &gap_a));
        existence_residuals[k] = residual;
        let tolerance = options.tolerance * max_abs(&gap_h).max(max_abs(&gap_a)).max(1.0);
        if residual > tolerance {
            match options.policy {
                ExistencePolicy::Enforce => {
                    return Err(Error::PotentialExistence {
                        step: Some(k),
                        residual,
                        tolerance,
                    });
                }
                ExistencePolicy::Record => violations.push(ExistenceRecord { step: k, residual }),
            }
        }

        // Branch tests run on the human agent's objective with each side's
        // own acting cost, so identical agents reduce to the team game.
        let human_acting_cost = schedules.human.takeover_cost(k, Authority::Human);
        let auto_acting_cost = schedules
            .autonomous
            .takeover_cost(k, Authority::Autonomous);

        let (bh, warn_h) = classify_human(
            &stay_h.human,
            &stay_a.human,
            human_acting_cost,
            auto_acting_cost,
        );
        branch_human[k] = bh;
        if let Some(detail) = warn_h {
            warnings.push(StepWarning {
                step: k,
                authority: Authority::Human,
                detail,
            });
        }
        let (ba, warn_a) = classify_autonomous(
            &stay_h.human,
            &stay_a.human,
            human_acting_cost,
            auto_acting_cost,
            1.0,
        );
        branch_autonomous[k] = ba;
        if let Some(detail) = warn_a {
            warnings.push(StepWarning {
                step: k,
                authority: Authority::Autonomous,
                detail,
            });
        }

        for agent in Authority::BOTH {
            let schedule = schedules.get(agent);
            let g_h = schedule.state_cost(k, Authority::Human);
            let g_a = schedule.state_cost(k, Authority::Autonomous);
            let h_cost = schedule.takeover_cost(k, Authority::Human);
            let a_cost = schedule.takeover_cost(k, Authority::Autonomous);
            let stay_h_agent = stay_h.get(agent);
            let stay_a_agent = stay_a.get(agent);

            let next_q_h = match bh {
                Branch::Idle => g_h + stay_h_agent,
                Branch::JointSwitch => g_h + stay_a_agent + h_cost + a_cost,
                Branch::HumanTakeover => {
                    unreachable!("human-authority game has no attempt branch")
                }
            };
            let next_q_a = match ba {
                Branch::Idle => g_a + stay_a_agent,
                // Certain attempt: authority passes to the human and only
                // the human's acting cost is charged.
                Branch::HumanTakeover => g_a + stay_h_agent + h_cost,
                Branch::JointSwitch => {
                    unreachable!("certain attempts make the joint branch unreachable")
                }
            };
            match agent {
                Authority::Human => {
                    q_h.human[k] = next_q_h;
                    q_a.human[k] = next_q_a;
                }
                Authority::Autonomous => {
                    q_h.autonomous[k] = next_q_h;
                    q_a.autonomous[k] = next_q_a;
                }
            }
        }
    }

    Ok(PotentialSolution {
        q_human_authority: q_h,
        q_autonomous_authority: q_a,
        branch_human,
        branch_autonomous,
        existence_residuals,
        violations,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lq::ClosedLoopPair;

    fn identical_views(
        to_human: f64,
        to_autonomous: f64,
        human_cost: f64,
        autonomous_cost: f64,
    ) -> PerAgent<AgentStep> {
        let view = AgentStep {
            to_human,
            to_autonomous,
            human_cost,
            autonomous_cost,
        };
        PerAgent::new(view, view)
    }

    #[test]
    fn bimatrix_autonomous_authority_entries() {
        let pair =
            build_bimatrix(Authority::Autonomous, &identical_views(1.0, 2.0, 0.35, 0.2))
                .unwrap();
        assert_eq!(pair.human.entries(), [[2.0, 2.2], [1.35, 1.55]]);
        assert_eq!(pair.autonomous.entries(), pair.human.entries());
    }

    #[test]
    fn potential_human_authority_example() {
        let psi = build_potential(Authority::Human, &identical_views(2.0, 1.0, 0.3, 0.2))
            .unwrap();
        let expected = [[0.5, 0.7], [0.8, 0.0]];
        for (row, want) in psi.entries().iter().zip(&expected) {
            for (got, want) in row.iter().zip(want) {
                assert!((got - want).abs() < 1e-12, "{got} vs {want}");
            }
        }
        assert_eq!(psi.argmin(), ActionPair::new(true, true));
    }

    #[test]
    fn potential_autonomous_authority_example() {
        let psi =
            build_potential(Authority::Autonomous, &identical_views(1.0, 3.0, 0.35, 0.2))
                .unwrap();
        let expected = [[1.45, 1.65], [-0.2, 0.0]];
        for (row, want) in psi.entries().iter().zip(&expected) {
            for (got, want) in row.iter().zip(want) {
                assert!((got - want).abs() < 1e-12, "{got} vs {want}");
            }
        }
        assert_eq!(psi.argmin(), ActionPair::new(true, false));
    }

    #[test]
    fn misaligned_gaps_reject_human_authority_potential() {
        let views = PerAgent::new(
            AgentStep {
                to_human: 1.0,
                to_autonomous: 2.0,
                human_cost: 0.3,
                autonomous_cost: 0.2,
            },
            AgentStep {
                to_human: 1.0,
                to_autonomous: 2.5,
                human_cost: 0.3,
                autonomous_cost: 0.2,
            },
        );
        let err = build_potential(Authority::Human, &views).unwrap_err();
        match err {
            Error::PotentialExistence { residual, step, .. } => {
                assert!(step.is_none());
                assert!((residual - 0.5).abs() < 1e-12);
            }
            other => panic!("unexpected error {other:?}"),
        }
        // The same misalignment fails the cycle test...
        let pair = build_bimatrix(Authority::Human, &views).unwrap();
        assert!(!check_exact_potential(&pair, 1e-9));
        // ...but the autonomous-authority game always passes it.
        let pair = build_bimatrix(Authority::Autonomous, &views).unwrap();
        assert!(check_exact_potential(&pair, 1e-12));
        assert!(build_potential(Authority::Autonomous, &views).is_ok());
    }

    #[test]
    fn potential_differences_track_deviator_costs() {
        let views = PerAgent::new(
            AgentStep {
                to_human: 1.25,
                to_autonomous: 3.5,
                human_cost: 0.5,
                autonomous_cost: 0.75,
            },
            AgentStep {
                to_human: 0.25,
                to_autonomous: 2.5,
                human_cost: 1.5,
                autonomous_cost: 0.25,
            },
        );
        for state in Authority::BOTH {
            let pair = build_bimatrix(state, &views).unwrap();
            let psi = build_potential(state, &views).unwrap();
            for c in [false, true] {
                let dev = pair.human.entry(true, c) - pair.human.entry(false, c);
                let pot = psi.entries()[1][c as usize] - psi.entries()[0][c as usize];
                assert!((dev - pot).abs() <= 1e-12, "{state:?} human col {c}");
            }
            for r in [false, true] {
                let dev = pair.autonomous.entry(r, true) - pair.autonomous.entry(r, false);
                let pot = psi.entries()[r as usize][1] - psi.entries()[r as usize][0];
                assert!((dev - pot).abs() <= 1e-12, "{state:?} autonomous row {r}");
            }
        }
    }

    #[test]
    fn argmin_is_nash_equilibrium() {
        let views = PerAgent::new(
            AgentStep {
                to_human: 0.5,
                to_autonomous: 4.0,
                human_cost: 0.25,
                autonomous_cost: 1.0,
            },
            AgentStep {
                to_human: 1.0,
                to_autonomous: 4.5,
                human_cost: 2.0,
                autonomous_cost: 0.5,
            },
        );
        for state in Authority::BOTH {
            let pair = build_bimatrix(state, &views).unwrap();
            let psi = build_potential(state, &views).unwrap();
            let eq = psi.argmin();
            let flip_h = ActionPair::new(!eq.human, eq.autonomous);
            let flip_a = ActionPair::new(eq.human, !eq.autonomous);
            assert!(pair.human.at(flip_h) >= pair.human.at(eq) - 1e-12, "{state:?}");
            assert!(
                pair.autonomous.at(flip_a) >= pair.autonomous.at(eq) - 1e-12,
                "{state:?}"
            );
        }
    }

    fn scalar_loops(horizon: usize) -> ClosedLoopPair {
        let m = |v: f64| DMatrix::from_element(1, 1, v);
        ClosedLoopPair::from_matrices(vec![m(0.91); horizon], vec![m(0.94); horizon]).unwrap()
    }

    #[test]
    fn misaligned_schedules_enforce_or_record() {
        let loops = scalar_loops(1);
        let schedules = PerAgent::new(
            QuadraticCostSchedule::scalar_time_invariant(1.2, 1.0, 0.35, 0.2, 1.2, 1.0, 1)
                .unwrap(),
            QuadraticCostSchedule::scalar_time_invariant(1.0, 0.9, 0.35, 0.2, 1.0, 0.9, 1)
                .unwrap(),
        );
        let err =
            solve_potential_recursion(&loops, &schedules, &PotentialOptions::default())
                .unwrap_err();
        match err {
            Error::PotentialExistence { step, residual, .. } => {
                assert_eq!(step, Some(0));
                assert!(residual > 0.07 && residual < 0.08, "{residual}");
            }
            other => panic!("unexpected error {other:?}"),
        }

        let options = PotentialOptions {
            policy: ExistencePolicy::Record,
            ..PotentialOptions::default()
        };
        let solution = solve_potential_recursion(&loops, &schedules, &options).unwrap();
        assert_eq!(solution.violations().len(), 1);
        assert_eq!(solution.violations()[0].step, 0);
        assert_eq!(solution.branch(0, Authority::Human), Branch::Idle);
        assert_eq!(solution.branch(0, Authority::Autonomous), Branch::Idle);
        let q_a_h = solution.q(0, Authority::Autonomous, Authority::Human)[(0, 0)];
        let q_a_a = solution.q(0, Authority::Autonomous, Authority::Autonomous)[(0, 0)];
        assert!((q_a_h - 1.8836).abs() < 1e-12, "{q_a_h}");
        assert!((q_a_a - 1.69524).abs() < 1e-12, "{q_a_a}");
    }

    #[test]
    fn aligned_schedules_have_zero_residuals() {
        let loops = scalar_loops(6);
        let schedule =
            QuadraticCostSchedule::scalar_time_invariant(1.2, 1.0, 0.35, 0.2, 1.2, 1.0, 6)
                .unwrap();
        let schedules = PerAgent::new(schedule.clone(), schedule);
        let solution =
            solve_potential_recursion(&loops, &schedules, &PotentialOptions::default())
                .unwrap();
        assert!(solution.violations().is_empty());
        for &r in solution.existence_residuals() {
            assert_eq!(r, 0.0);
        }
        for k in 0..6 {
            assert_ne!(solution.branch(k, Authority::Autonomous), Branch::JointSwitch);
        }
    }
}
