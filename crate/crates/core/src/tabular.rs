//! Exact solvers for finite-state takeover games.
//!
//! States live on a finite grid with per-authority deterministic plant
//! successors; the only stochasticity is the authority flip on a unilateral
//! takeover attempt. [`solve_backward`] runs the closed-form per-step
//! equilibrium selection by dynamic programming; [`enumerate_oracle`]
//! recomputes values on small instances by brute-force expectation over the
//! game tree, with selection done entry-by-entry on the realized matrices.

use crate::error::{ensure_nonnegative, Error, Result};
use crate::matrix_game::{select_autonomous, select_human, Branch};
use crate::schedule::{BehavioralStrategy, Horizon, IntentSchedule};
use crate::takeover::{transition_distribution, ActionPair, Authority};

/// Stage, terminal, and takeover cost tables. Stage and takeover tables are
/// indexed `[step][state]` over `0..horizon`; terminal tables by `[state]`.
#[derive(Clone, Debug)]
pub struct StageCostTable {
    pub stage_human: Vec<Vec<f64>>,
    pub stage_autonomous: Vec<Vec<f64>>,
    pub terminal_human: Vec<f64>,
    pub terminal_autonomous: Vec<f64>,
    pub takeover_human: Vec<Vec<f64>>,
    pub takeover_autonomous: Vec<Vec<f64>>,
}

fn check_table(what: &str, table: &[Vec<f64>], steps: usize, n_states: usize) -> Result<()> {
    if table.len() != steps {
        return Err(Error::LengthMismatch {
            what: what.to_string(),
            expected: steps,
            actual: table.len(),
        });
    }
    for (k, row) in table.iter().enumerate() {
        if row.len() != n_states {
            return Err(Error::LengthMismatch {
                what: format!("{what} at step {k}"),
                expected: n_states,
                actual: row.len(),
            });
        }
        for (x, &v) in row.iter().enumerate() {
            ensure_nonnegative(&format!("{what}[{k}][{x}]"), v)?;
        }
    }
    Ok(())
}

/// A finite-state takeover game.
#[derive(Clone, Debug)]
pub struct FiniteGame {
    horizon: usize,
    n_states: usize,
    intent: IntentSchedule,
    successor_human: Vec<Vec<usize>>,
    successor_autonomous: Vec<Vec<usize>>,
    costs: StageCostTable,
}

impl FiniteGame {
    /// Validates shapes and entries. `successor_*[k][x]` is the next plant
    /// state when the *next* authority is human (resp. autonomous); the rows
    /// of every table must cover all `n_states` states.
    pub fn new(
        horizon: Horizon,
        intent: IntentSchedule,
        n_states: usize,
        successor_human: Vec<Vec<usize>>,
        successor_autonomous: Vec<Vec<usize>>,
        costs: StageCostTable,
    ) -> Result<FiniteGame> {
        let steps = horizon.steps();
        if n_states == 0 {
            return Err(Error::StateOutOfRange {
                state: 0,
                n_states: 0,
            });
        }
        if intent.len() != steps {
            return Err(Error::LengthMismatch {
                what: "intent schedule".to_string(),
                expected: steps,
                actual: intent.len(),
            });
        }
        for (what, table) in [
            ("human-successor table", &successor_human),
            ("autonomous-successor table", &successor_autonomous),
        ] {
            if table.len() != steps {
                return Err(Error::LengthMismatch {
                    what: what.to_string(),
                    expected: steps,
                    actual: table.len(),
                });
            }
            for (k, row) in table.iter().enumerate() {
                if row.len() != n_states {
                    return Err(Error::LengthMismatch {
                        what: format!("{what} at step {k}"),
                        expected: n_states,
                        actual: row.len(),
                    });
                }
                for &x in row {
                    if x >= n_states {
                        return Err(Error::StateOutOfRange { state: x, n_states });
                    }
                }
            }
        }
        check_table("human stage cost", &costs.stage_human, steps, n_states)?;
        check_table(
            "autonomous stage cost",
            &costs.stage_autonomous,
            steps,
            n_states,
        )?;
        check_table("human takeover cost", &costs.takeover_human, steps, n_states)?;
        check_table(
            "autonomous takeover cost",
            &costs.takeover_autonomous,
            steps,
            n_states,
        )?;
        for (what, table) in [
            ("human terminal cost", &costs.terminal_human),
            ("autonomous terminal cost", &costs.terminal_autonomous),
        ] {
            if table.len() != n_states {
                return Err(Error::LengthMismatch {
                    what: what.to_string(),
                    expected: n_states,
                    actual: table.len(),
                });
            }
            for (x, &v) in table.iter().enumerate() {
                ensure_nonnegative(&format!("{what}[{x}]"), v)?;
            }
        }
        Ok(FiniteGame {
            horizon: steps,
            n_states,
            intent,
            successor_human,
            successor_autonomous,
            costs,
        })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn intent(&self) -> &IntentSchedule {
        &self.intent
    }

    pub fn successor(&self, step: usize, state: usize, next_authority: Authority) -> usize {
        match next_authority {
            Authority::Human => self.successor_human[step][state],
            Authority::Autonomous => self.successor_autonomous[step][state],
        }
    }

    pub fn stage_cost(&self, step: usize, state: usize, authority: Authority) -> f64 {
        match authority {
            Authority::Human => self.costs.stage_human[step][state],
            Authority::Autonomous => self.costs.stage_autonomous[step][state],
        }
    }

    pub fn terminal_cost(&self, state: usize, authority: Authority) -> f64 {
        match authority {
            Authority::Human => self.costs.terminal_human[state],
            Authority::Autonomous => self.costs.terminal_autonomous[state],
        }
    }

    /// `(human, autonomous)` takeover action costs at `(step, state)`.
    pub fn takeover_costs(&self, step: usize, state: usize) -> (f64, f64) {
        (
            self.costs.takeover_human[step][state],
            self.costs.takeover_autonomous[step][state],
        )
    }
}

/// Equilibrium value tables indexed `[step][state]` with `step` running
/// `0..=horizon`; the last row holds terminal costs.
#[derive(Clone, Debug)]
pub struct ValueTables {
    human: Vec<Vec<f64>>,
    autonomous: Vec<Vec<f64>>,
}

impl ValueTables {
    pub fn value(&self, step: usize, state: usize, authority: Authority) -> f64 {
        match authority {
            Authority::Human => self.human[step][state],
            Authority::Autonomous => self.autonomous[step][state],
        }
    }

    pub fn horizon(&self) -> usize {
        self.human.len() - 1
    }

    pub fn n_states(&self) -> usize {
        self.human[0].len()
    }
}

/// Equilibrium policy per `(step, state, authority)`.
#[derive(Clone, Debug)]
pub struct PolicyTables {
    // Indexed [step][state][authority.index()].
    decisions: Vec<Vec<[(ActionPair, Branch); 2]>>,
}

impl PolicyTables {
    pub fn action(&self, step: usize, state: usize, authority: Authority) -> ActionPair {
        self.decisions[step][state][authority.index()].0
    }

    pub fn branch(&self, step: usize, state: usize, authority: Authority) -> Branch {
        self.decisions[step][state][authority.index()].1
    }

    pub fn horizon(&self) -> usize {
        self.decisions.len()
    }
}

/// Backward induction over the closed-form per-step equilibria.
pub fn solve_backward(game: &FiniteGame) -> (ValueTables, PolicyTables) {
    let steps = game.horizon;
    let n = game.n_states;
    let mut human = vec![vec![0.0; n]; steps + 1];
    let mut autonomous = vec![vec![0.0; n]; steps + 1];
    human[steps] = game.costs.terminal_human.clone();
    autonomous[steps] = game.costs.terminal_autonomous.clone();
    let mut decisions =
        vec![vec![[(ActionPair::idle(), Branch::Idle); 2]; n]; steps];

    for k in (0..steps).rev() {
        for x in 0..n {
            let cont_h = human[k + 1][game.successor(k, x, Authority::Human)];
            let cont_a = autonomous[k + 1][game.successor(k, x, Authority::Autonomous)];
            let (hc, ac) = game.takeover_costs(k, x);

            let eq_h = select_human(cont_h, cont_a, hc, ac)
                .expect("inputs validated at construction");
            human[k][x] = game.stage_cost(k, x, Authority::Human) + eq_h.continuation;
            decisions[k][x][Authority::Human.index()] = (eq_h.action, eq_h.branch);

            let eq_a = select_autonomous(cont_h, cont_a, hc, ac, game.intent.at(k))
                .expect("inputs validated at construction");
            autonomous[k][x] =
                game.stage_cost(k, x, Authority::Autonomous) + eq_a.continuation;
            decisions[k][x][Authority::Autonomous.index()] = (eq_a.action, eq_a.branch);
        }
    }

    (
        ValueTables { human, autonomous },
        PolicyTables { decisions },
    )
}

/// How the enumeration oracle picks a joint action at each realized matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OracleMode {
    /// Entry-by-entry equilibrium selection matching the closed forms:
    /// expected to reproduce [`solve_backward`] exactly.
    NeSelection,
    /// Plain minimum over all four joint actions. Diagnostic only: on the
    /// autonomous side the equilibrium can exceed this bound.
    UnrestrictedMin,
}

const ORACLE_MAX_HORIZON: usize = 4;
const ORACLE_MAX_STATES: usize = 8;

/// Brute-force value of the game from `(start_state, start_authority)`.
///
/// Recomputes continuation expectations per joint action from the transition
/// kernel, with no shared threshold algebra. Guarded to tiny instances;
/// larger inputs get a structured error naming the bounds.
pub fn enumerate_oracle(
    game: &FiniteGame,
    start_state: usize,
    start_authority: Authority,
    mode: OracleMode,
) -> Result<f64> {
    if game.horizon > ORACLE_MAX_HORIZON || game.n_states > ORACLE_MAX_STATES {
        return Err(Error::EnumerationBound {
            horizon: game.horizon,
            max_horizon: ORACLE_MAX_HORIZON,
            n_states: game.n_states,
            max_states: ORACLE_MAX_STATES,
        });
    }
    if start_state >= game.n_states {
        return Err(Error::StateOutOfRange {
            state: start_state,
            n_states: game.n_states,
        });
    }
    Ok(oracle_value(game, mode, 0, start_state, start_authority))
}

fn oracle_value(
    game: &FiniteGame,
    mode: OracleMode,
    step: usize,
    state: usize,
    authority: Authority,
) -> f64 {
    if step == game.horizon {
        return game.terminal_cost(state, authority);
    }
    let p = game.intent.at(step);
    let (hc, ac) = game.takeover_costs(step, state);
    let next_h = oracle_value(
        game,
        mode,
        step + 1,
        game.successor(step, state, Authority::Human),
        Authority::Human,
    );
    let next_a = oracle_value(
        game,
        mode,
        step + 1,
        game.successor(step, state, Authority::Autonomous),
        Authority::Autonomous,
    );

    let mut m = [[0.0f64; 2]; 2];
    for action in ActionPair::ALL {
        let dist = transition_distribution(authority, action, p)
            .expect("intent validated at construction");
        let action_cost = action.human as u8 as f64 * hc + action.autonomous as u8 as f64 * ac;
        m[action.row()][action.col()] =
            action_cost + dist.human() * next_h + dist.autonomous() * next_a;
    }

    let chosen = match mode {
        OracleMode::UnrestrictedMin => m
            .iter()
            .flatten()
            .fold(f64::INFINITY, |acc, &v| acc.min(v)),
        OracleMode::NeSelection => match authority {
            // Off-diagonal entries are weakly dominated; the equilibrium is
            // the cheaper diagonal entry, ties to the joint switch.
            Authority::Human => {
                if m[0][0] < m[1][1] {
                    m[0][0]
                } else {
                    m[1][1]
                }
            }
            Authority::Autonomous => {
                if p == 0.0 {
                    // An attempt can never succeed, so acting only burns
                    // cost: both sides idle.
                    m[0][0]
                } else if m[0][0] < m[1][0] {
                    m[0][0]
                } else if m[1][0] <= m[0][0] && m[1][0] <= m[1][1] {
                    m[1][0]
                } else {
                    m[1][1]
                }
            }
        },
    };
    game.stage_cost(step, state, authority) + chosen
}

/// State-independent or state-dependent randomized takeover policies that the
/// forward pass can evaluate. Implementations must return probabilities in
/// `[0, 1]` for every step below the game horizon.
pub trait StrategyProfile {
    /// Marginal probabilities `(human acts, autonomous acts)` at
    /// `(step, state, authority)`.
    fn takeover_probabilities(
        &self,
        step: usize,
        state: usize,
        authority: Authority,
    ) -> (f64, f64);
}

impl StrategyProfile for BehavioralStrategy {
    fn takeover_probabilities(
        &self,
        step: usize,
        _state: usize,
        authority: Authority,
    ) -> (f64, f64) {
        self.probabilities(step, authority)
    }
}

impl StrategyProfile for PolicyTables {
    fn takeover_probabilities(
        &self,
        step: usize,
        state: usize,
        authority: Authority,
    ) -> (f64, f64) {
        let action = self.action(step, state, authority);
        (action.human as u8 as f64, action.autonomous as u8 as f64)
    }
}

/// Exact expected cost of running `strategy` from the given start, by
/// forward propagation of the joint distribution over (state, authority).
pub fn expected_cost(
    game: &FiniteGame,
    strategy: &impl StrategyProfile,
    start_state: usize,
    start_authority: Authority,
) -> Result<f64> {
    if start_state >= game.n_states {
        return Err(Error::StateOutOfRange {
            state: start_state,
            n_states: game.n_states,
        });
    }
    let n = game.n_states;
    let mut dist = vec![[0.0f64; 2]; n];
    dist[start_state][start_authority.index()] = 1.0;
    let mut total = 0.0;

    for k in 0..game.horizon {
        let p = game.intent.at(k);
        let mut next = vec![[0.0f64; 2]; n];
        for x in 0..n {
            for authority in Authority::BOTH {
                let w = dist[x][authority.index()];
                if w == 0.0 {
                    continue;
                }
                let (bh, ba) = strategy.takeover_probabilities(k, x, authority);
                let (hc, ac) = game.takeover_costs(k, x);
                total += w * (game.stage_cost(k, x, authority) + bh * hc + ba * ac);
                let weights = [
                    (ActionPair::new(false, false), (1.0 - bh) * (1.0 - ba)),
                    (ActionPair::new(false, true), (1.0 - bh) * ba),
                    (ActionPair::new(true, false), bh * (1.0 - ba)),
                    (ActionPair::new(true, true), bh * ba),
                ];
                for (action, wa) in weights {
                    if wa == 0.0 {
                        continue;
                    }
                    let d = transition_distribution(authority, action, p)
                        .expect("intent validated at construction");
                    next[game.successor(k, x, Authority::Human)][Authority::Human.index()] +=
                        w * wa * d.human();
                    next[game.successor(k, x, Authority::Autonomous)]
                        [Authority::Autonomous.index()] += w * wa * d.autonomous();
                }
            }
        }
        dist = next;
    }

    for x in 0..n {
        for authority in Authority::BOTH {
            let w = dist[x][authority.index()];
            if w != 0.0 {
                total += w * game.terminal_cost(x, authority);
            }
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Single-state game with the bundled scalar costs.
    fn one_state_game(intent: f64, horizon: usize) -> FiniteGame {
        let h = Horizon::new(horizon).unwrap();
        FiniteGame::new(
            h,
            IntentSchedule::constant(intent, h).unwrap(),
            1,
            vec![vec![0]; horizon],
            vec![vec![0]; horizon],
            StageCostTable {
                stage_human: vec![vec![1.2]; horizon],
                stage_autonomous: vec![vec![1.0]; horizon],
                terminal_human: vec![1.2],
                terminal_autonomous: vec![1.0],
                takeover_human: vec![vec![0.35]; horizon],
                takeover_autonomous: vec![vec![0.2]; horizon],
            },
        )
        .unwrap()
    }

    fn zero_cost_game(intent: f64) -> FiniteGame {
        let h = Horizon::new(2).unwrap();
        FiniteGame::new(
            h,
            IntentSchedule::constant(intent, h).unwrap(),
            2,
            vec![vec![1, 0]; 2],
            vec![vec![0, 1]; 2],
            StageCostTable {
                stage_human: vec![vec![0.0; 2]; 2],
                stage_autonomous: vec![vec![0.0; 2]; 2],
                terminal_human: vec![0.0; 2],
                terminal_autonomous: vec![0.0; 2],
                takeover_human: vec![vec![0.0; 2]; 2],
                takeover_autonomous: vec![vec![0.0; 2]; 2],
            },
        )
        .unwrap()
    }

    #[test]
    fn single_state_one_step_values() {
        let game = one_state_game(0.4, 1);
        let (values, policy) = solve_backward(&game);
        assert_eq!(values.value(0, 0, Authority::Human), 2.4);
        assert_eq!(values.value(0, 0, Authority::Autonomous), 2.0);
        assert_eq!(policy.branch(0, 0, Authority::Human), Branch::Idle);
        assert_eq!(policy.branch(0, 0, Authority::Autonomous), Branch::Idle);
    }

    #[test]
    fn oracle_matches_single_state_example() {
        let game = one_state_game(0.4, 1);
        let v = enumerate_oracle(&game, 0, Authority::Autonomous, OracleMode::NeSelection)
            .unwrap();
        assert_eq!(v, 2.0);
        let v = enumerate_oracle(&game, 0, Authority::Human, OracleMode::NeSelection).unwrap();
        assert_eq!(v, 2.4);
    }

    #[test]
    fn zero_cost_policies() {
        // With zero intent an attempt is futile, so the autonomous-side
        // equilibrium idles; the human side ties and switches.
        let game = zero_cost_game(0.0);
        let (values, policy) = solve_backward(&game);
        for k in 0..2 {
            for x in 0..2 {
                assert_eq!(values.value(k, x, Authority::Human), 0.0);
                assert_eq!(values.value(k, x, Authority::Autonomous), 0.0);
                assert_eq!(policy.branch(k, x, Authority::Human), Branch::JointSwitch);
                assert_eq!(policy.branch(k, x, Authority::Autonomous), Branch::Idle);
            }
        }

        // With positive intent the zero-cost attempt window is [0, 0], so
        // the equilibrium picks the unilateral attempt instead; the value is
        // still zero.
        let game = zero_cost_game(0.5);
        let (values, policy) = solve_backward(&game);
        assert_eq!(values.value(0, 0, Authority::Autonomous), 0.0);
        assert_eq!(
            policy.branch(0, 0, Authority::Autonomous),
            Branch::HumanTakeover
        );
    }

    #[test]
    fn zero_cost_oracle_agrees() {
        for intent in [0.0, 0.5] {
            let game = zero_cost_game(intent);
            for x in 0..2 {
                for authority in Authority::BOTH {
                    let v =
                        enumerate_oracle(&game, x, authority, OracleMode::NeSelection).unwrap();
                    assert_eq!(v, 0.0);
                }
            }
        }
    }

    #[test]
    fn oracle_bound_guard() {
        let game = one_state_game(0.4, 5);
        let err = enumerate_oracle(&game, 0, Authority::Human, OracleMode::NeSelection)
            .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("horizon 5"), "{msg}");
        assert!(msg.contains("max 4"), "{msg}");
    }

    #[test]
    fn unrestricted_min_lower_bounds_equilibrium() {
        // On this instance the equilibrium and the committed minimum agree;
        // the diagnostic mode must never exceed the equilibrium value.
        let game = one_state_game(0.4, 3);
        let (values, _) = solve_backward(&game);
        for authority in Authority::BOTH {
            let ne = enumerate_oracle(&game, 0, authority, OracleMode::NeSelection).unwrap();
            let lo = enumerate_oracle(&game, 0, authority, OracleMode::UnrestrictedMin).unwrap();
            assert!(lo <= ne + 1e-15);
            assert_eq!(ne, values.value(0, 0, authority));
        }
    }

    #[test]
    fn expected_cost_of_dp_policy_equals_value() {
        let game = one_state_game(0.4, 3);
        let (values, policy) = solve_backward(&game);
        for authority in Authority::BOTH {
            let cost = expected_cost(&game, &policy, 0, authority).unwrap();
            let value = values.value(0, 0, authority);
            assert!(
                (cost - value).abs() <= 1e-12 * value.abs().max(1.0),
                "{cost} vs {value}"
            );
        }
    }

    #[test]
    fn expected_cost_behavioral_example() {
        // One step from autonomous authority: the human always attempts
        // (cost 0.35, succeeds w.p. 0.4), the autonomous side never acts.
        let game = one_state_game(0.4, 1);
        let strat = BehavioralStrategy::constant([1.0, 1.0], [0.0, 0.0], Horizon::new(1).unwrap())
            .unwrap();
        let cost = expected_cost(&game, &strat, 0, Authority::Autonomous).unwrap();
        let expected = 1.0 + 0.35 + 0.4 * 1.2 + 0.6 * 1.0;
        assert!((cost - expected).abs() < 1e-15, "{cost}");
    }

    #[test]
    fn suffix_consistency_under_time_invariance() {
        // For a time-invariant game, the value at step k of the long game
        // equals the start value of the short game with the same terminal.
        let long = one_state_game(0.4, 4);
        let short = one_state_game(0.4, 2);
        let (v_long, _) = solve_backward(&long);
        let (v_short, _) = solve_backward(&short);
        for authority in Authority::BOTH {
            assert_eq!(
                v_long.value(2, 0, authority),
                v_short.value(0, 0, authority)
            );
        }
    }

    #[test]
    fn construction_rejects_bad_shapes() {
        let h = Horizon::new(1).unwrap();
        let intent = IntentSchedule::constant(0.4, h).unwrap();
        let costs = StageCostTable {
            stage_human: vec![vec![0.0]],
            stage_autonomous: vec![vec![0.0]],
            terminal_human: vec![0.0],
            terminal_autonomous: vec![0.0],
            takeover_human: vec![vec![0.0]],
            takeover_autonomous: vec![vec![0.0]],
        };
        // Successor out of range.
        let err = FiniteGame::new(
            h,
            intent.clone(),
            1,
            vec![vec![1]],
            vec![vec![0]],
            costs.clone(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::StateOutOfRange { .. }));
        // Negative cost.
        let mut bad = costs.clone();
        bad.stage_human[0][0] = -1.0;
        assert!(FiniteGame::new(h, intent.clone(), 1, vec![vec![0]], vec![vec![0]], bad).is_err());
        // Wrong intent length.
        let h2 = Horizon::new(2).unwrap();
        let err = FiniteGame::new(
            h2,
            intent,
            1,
            vec![vec![0]; 2],
            vec![vec![0]; 2],
            StageCostTable {
                stage_human: vec![vec![0.0]; 2],
                stage_autonomous: vec![vec![0.0]; 2],
                terminal_human: vec![0.0],
                terminal_autonomous: vec![0.0],
                takeover_human: vec![vec![0.0]; 2],
                takeover_autonomous: vec![vec![0.0]; 2],
            },
        )
        .unwrap_err();
        assert!(matches!(err, Error::LengthMismatch { .. }));
    }
}
