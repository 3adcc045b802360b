//! Linear plants with quadratic costs: closed-loop construction, LQR gain
//! synthesis, and the coupled value-matrix recursion.
//!
//! With per-authority closed loops `x+ = Bt x` (human) and `x+ = Ct x`
//! (autonomous), values stay quadratic: `v(x) = x' P x`. The per-step matrix
//! game then reduces to definiteness tests on quadratic-form differences,
//! mirroring the scalar threshold selection entrywise. Indefinite test
//! matrices have no uniform branch over states; the recursion then falls
//! back to a trace comparison and records a warning for the step.

use crate::error::{Error, Result};
use crate::matrix_game::{select_autonomous, select_human, Branch, StepEquilibrium};
use crate::schedule::IntentSchedule;
use crate::takeover::Authority;
use nalgebra::{Cholesky, DMatrix, DVector};

/// Time-varying linear plant `x+ = E x + B u` (human input) / `x+ = E x + C u`
/// (autonomous input). Tables are indexed by step over `0..horizon`.
#[derive(Clone, Debug)]
pub struct LinearSystem {
    e: Vec<DMatrix<f64>>,
    b: Vec<DMatrix<f64>>,
    c: Vec<DMatrix<f64>>,
}

fn check_finite(what: &str, m: &DMatrix<f64>) -> Result<()> {
    for &v in m.iter() {
        if !v.is_finite() {
            return Err(Error::NonFinite {
                what: what.to_string(),
                value: v,
            });
        }
    }
    Ok(())
}

fn check_dims(what: &str, m: &DMatrix<f64>, rows: usize, cols: usize) -> Result<()> {
    if m.nrows() != rows || m.ncols() != cols {
        return Err(Error::DimensionMismatch {
            what: what.to_string(),
            rows,
            cols,
            actual_rows: m.nrows(),
            actual_cols: m.ncols(),
        });
    }
    Ok(())
}

impl LinearSystem {
    pub fn time_invariant(
        e: DMatrix<f64>,
        b: DMatrix<f64>,
        c: DMatrix<f64>,
        horizon: usize,
    ) -> Result<LinearSystem> {
        LinearSystem::time_varying(vec![e; horizon], vec![b; horizon], vec![c; horizon])
    }

    pub fn time_varying(
        e: Vec<DMatrix<f64>>,
        b: Vec<DMatrix<f64>>,
        c: Vec<DMatrix<f64>>,
    ) -> Result<LinearSystem> {
        if e.is_empty() {
            return Err(Error::EmptyHorizon);
        }
        for (what, table) in [("input matrix B", &b), ("input matrix C", &c)] {
            if table.len() != e.len() {
                return Err(Error::LengthMismatch {
                    what: what.to_string(),
                    expected: e.len(),
                    actual: table.len(),
                });
            }
        }
        let n = e[0].nrows();
        let m_h = b[0].ncols();
        let m_a = c[0].ncols();
        for (k, m) in e.iter().enumerate() {
            check_dims(&format!("state matrix E at step {k}"), m, n, n)?;
            check_finite(&format!("state matrix E at step {k}"), m)?;
        }
        for (k, m) in b.iter().enumerate() {
            check_dims(&format!("input matrix B at step {k}"), m, n, m_h)?;
            check_finite(&format!("input matrix B at step {k}"), m)?;
        }
        for (k, m) in c.iter().enumerate() {
            check_dims(&format!("input matrix C at step {k}"), m, n, m_a)?;
            check_finite(&format!("input matrix C at step {k}"), m)?;
        }
        Ok(LinearSystem { e, b, c })
    }

    pub fn horizon(&self) -> usize {
        self.e.len()
    }

    pub fn state_dim(&self) -> usize {
        self.e[0].nrows()
    }

    pub fn human_input_dim(&self) -> usize {
        self.b[0].ncols()
    }

    pub fn autonomous_input_dim(&self) -> usize {
        self.c[0].ncols()
    }

    pub fn e(&self, step: usize) -> &DMatrix<f64> {
        &self.e[step]
    }

    pub fn b(&self, step: usize) -> &DMatrix<f64> {
        &self.b[step]
    }

    pub fn c(&self, step: usize) -> &DMatrix<f64> {
        &self.c[step]
    }
}

/// Per-step state-feedback gains for both agents: `u = K x`.
#[derive(Clone, Debug)]
pub struct FeedbackGains {
    pub human: Vec<DMatrix<f64>>,
    pub autonomous: Vec<DMatrix<f64>>,
}

/// Closed-loop transition matrices for both authority states:
/// `Bt = E + B K_h` while the human operates, `Ct = E + C K_a` otherwise.
#[derive(Clone, Debug)]
pub struct ClosedLoopPair {
    human: Vec<DMatrix<f64>>,
    autonomous: Vec<DMatrix<f64>>,
}

impl ClosedLoopPair {
    pub fn from_matrices(
        human: Vec<DMatrix<f64>>,
        autonomous: Vec<DMatrix<f64>>,
    ) -> Result<ClosedLoopPair> {
        if human.is_empty() {
            return Err(Error::EmptyHorizon);
        }
        if human.len() != autonomous.len() {
            return Err(Error::LengthMismatch {
                what: "closed-loop tables".to_string(),
                expected: human.len(),
                actual: autonomous.len(),
            });
        }
        let n = human[0].nrows();
        for (k, m) in human.iter().chain(autonomous.iter()).enumerate() {
            check_dims(&format!("closed-loop matrix at entry {k}"), m, n, n)?;
            check_finite(&format!("closed-loop matrix at entry {k}"), m)?;
        }
        Ok(ClosedLoopPair { human, autonomous })
    }

    pub fn horizon(&self) -> usize {
        self.human.len()
    }

    pub fn state_dim(&self) -> usize {
        self.human[0].nrows()
    }

    pub fn human(&self, step: usize) -> &DMatrix<f64> {
        &self.human[step]
    }

    pub fn autonomous(&self, step: usize) -> &DMatrix<f64> {
        &self.autonomous[step]
    }
}

/// Substitutes both agents' feedback gains into the plant.
pub fn close_loops(system: &LinearSystem, gains: &FeedbackGains) -> Result<ClosedLoopPair> {
    let steps = system.horizon();
    for (what, table, cols) in [
        ("human gain table", &gains.human, system.human_input_dim()),
        (
            "autonomous gain table",
            &gains.autonomous,
            system.autonomous_input_dim(),
        ),
    ] {
        if table.len() != steps {
            return Err(Error::LengthMismatch {
                what: what.to_string(),
                expected: steps,
                actual: table.len(),
            });
        }
        for (k, m) in table.iter().enumerate() {
            check_dims(&format!("{what} at step {k}"), m, cols, system.state_dim())?;
            check_finite(&format!("{what} at step {k}"), m)?;
        }
    }
    let human = (0..steps)
        .map(|k| system.e(k) + system.b(k) * &gains.human[k])
        .collect();
    let autonomous = (0..steps)
        .map(|k| system.e(k) + system.c(k) * &gains.autonomous[k])
        .collect();
    ClosedLoopPair::from_matrices(human, autonomous)
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |acc, &v| acc.max(v.abs()))
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    let t = m.transpose();
    (m + t) * 0.5
}

fn eigen_range(m: &DMatrix<f64>) -> (f64, f64) {
    if m.nrows() == 1 {
        let v = m[(0, 0)];
        return (v, v);
    }
    let eigs = m.clone().symmetric_eigen().eigenvalues;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in eigs.iter() {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    (lo, hi)
}

fn validate_spd(what: &str, m: &DMatrix<f64>, n: usize) -> Result<()> {
    check_dims(what, m, n, n)?;
    check_finite(what, m)?;
    let asym = max_abs(&(m - m.transpose()));
    if asym > 1e-12 * (1.0 + max_abs(m)) {
        return Err(Error::NotSymmetric {
            what: what.to_string(),
            asymmetry: asym,
        });
    }
    let (min_eig, _) = eigen_range(&symmetrize(m.clone()));
    if min_eig <= 0.0 {
        return Err(Error::NotPositiveDefinite {
            what: what.to_string(),
            min_eigenvalue: min_eig,
        });
    }
    Ok(())
}

/// Quadratic cost schedule: per-step symmetric positive-definite state-cost
/// and takeover-cost matrices for each authority, plus terminal costs.
#[derive(Clone, Debug)]
pub struct QuadraticCostSchedule {
    state_human: Vec<DMatrix<f64>>,
    state_autonomous: Vec<DMatrix<f64>>,
    takeover_human: Vec<DMatrix<f64>>,
    takeover_autonomous: Vec<DMatrix<f64>>,
    terminal_human: DMatrix<f64>,
    terminal_autonomous: DMatrix<f64>,
}

impl QuadraticCostSchedule {
    #[allow(clippy::too_many_arguments)]
    pub fn time_invariant(
        state_human: DMatrix<f64>,
        state_autonomous: DMatrix<f64>,
        takeover_human: DMatrix<f64>,
        takeover_autonomous: DMatrix<f64>,
        terminal_human: DMatrix<f64>,
        terminal_autonomous: DMatrix<f64>,
        horizon: usize,
    ) -> Result<QuadraticCostSchedule> {
        QuadraticCostSchedule::time_varying(
            vec![state_human; horizon],
            vec![state_autonomous; horizon],
            vec![takeover_human; horizon],
            vec![takeover_autonomous; horizon],
            terminal_human,
            terminal_autonomous,
        )
    }

    pub fn time_varying(
        state_human: Vec<DMatrix<f64>>,
        state_autonomous: Vec<DMatrix<f64>>,
        takeover_human: Vec<DMatrix<f64>>,
        takeover_autonomous: Vec<DMatrix<f64>>,
        terminal_human: DMatrix<f64>,
        terminal_autonomous: DMatrix<f64>,
    ) -> Result<QuadraticCostSchedule> {
        if state_human.is_empty() {
            return Err(Error::EmptyHorizon);
        }
        let steps = state_human.len();
        let n = terminal_human.nrows();
        for (what, table) in [
            ("human state cost", &state_human),
            ("autonomous state cost", &state_autonomous),
            ("human takeover cost", &takeover_human),
            ("autonomous takeover cost", &takeover_autonomous),
        ] {
            if table.len() != steps {
                return Err(Error::LengthMismatch {
                    what: what.to_string(),
                    expected: steps,
                    actual: table.len(),
                });
            }
            for (k, m) in table.iter().enumerate() {
                validate_spd(&format!("{what} at step {k}"), m, n)?;
            }
        }
        validate_spd("human terminal cost", &terminal_human, n)?;
        validate_spd("autonomous terminal cost", &terminal_autonomous, n)?;
        Ok(QuadraticCostSchedule {
            state_human,
            state_autonomous,
            takeover_human,
            takeover_autonomous,
            terminal_human,
            terminal_autonomous,
        })
    }

    /// Convenience constructor for one-dimensional plants.
    pub fn scalar_time_invariant(
        state_human: f64,
        state_autonomous: f64,
        takeover_human: f64,
        takeover_autonomous: f64,
        terminal_human: f64,
        terminal_autonomous: f64,
        horizon: usize,
    ) -> Result<QuadraticCostSchedule> {
        let m = |v: f64| DMatrix::from_element(1, 1, v);
        QuadraticCostSchedule::time_invariant(
            m(state_human),
            m(state_autonomous),
            m(takeover_human),
            m(takeover_autonomous),
            m(terminal_human),
            m(terminal_autonomous),
            horizon,
        )
    }

    pub fn horizon(&self) -> usize {
        self.state_human.len()
    }

    pub fn state_dim(&self) -> usize {
        self.terminal_human.nrows()
    }

    pub fn state_cost(&self, step: usize, authority: Authority) -> &DMatrix<f64> {
        match authority {
            Authority::Human => &self.state_human[step],
            Authority::Autonomous => &self.state_autonomous[step],
        }
    }

    pub fn takeover_cost(&self, step: usize, agent: Authority) -> &DMatrix<f64> {
        match agent {
            Authority::Human => &self.takeover_human[step],
            Authority::Autonomous => &self.takeover_autonomous[step],
        }
    }

    pub fn terminal_cost(&self, authority: Authority) -> &DMatrix<f64> {
        match authority {
            Authority::Human => &self.terminal_human,
            Authority::Autonomous => &self.terminal_autonomous,
        }
    }
}

/// Warning attached to a recursion step whose branch test was indefinite
/// (state-dependent): the recorded branch came from the trace fallback.
#[derive(Clone, Debug)]
pub struct StepWarning {
    pub step: usize,
    pub authority: Authority,
    pub detail: String,
}

/// Output of the coupled value recursion: per-authority value matrices
/// (`0..=horizon`, last entry terminal), the branch taken at every step, and
/// warnings for steps where the branch test was state-dependent.
#[derive(Clone, Debug)]
pub struct RiccatiPair {
    p_human: Vec<DMatrix<f64>>,
    p_autonomous: Vec<DMatrix<f64>>,
    branch_human: Vec<Branch>,
    branch_autonomous: Vec<Branch>,
    warnings: Vec<StepWarning>,
}

impl RiccatiPair {
    pub fn horizon(&self) -> usize {
        self.branch_human.len()
    }

    pub fn p(&self, step: usize, authority: Authority) -> &DMatrix<f64> {
        match authority {
            Authority::Human => &self.p_human[step],
            Authority::Autonomous => &self.p_autonomous[step],
        }
    }

    pub fn p_human(&self) -> &[DMatrix<f64>] {
        &self.p_human
    }

    pub fn p_autonomous(&self) -> &[DMatrix<f64>] {
        &self.p_autonomous
    }

    pub fn branch(&self, step: usize, authority: Authority) -> Branch {
        match authority {
            Authority::Human => self.branch_human[step],
            Authority::Autonomous => self.branch_autonomous[step],
        }
    }

    pub fn branches(&self, authority: Authority) -> &[Branch] {
        match authority {
            Authority::Human => &self.branch_human,
            Authority::Autonomous => &self.branch_autonomous,
        }
    }

    pub fn warnings(&self) -> &[StepWarning] {
        &self.warnings
    }

    /// Value `x' P x` of holding `authority` at `step` in state `x`.
    pub fn value(&self, step: usize, x: &DVector<f64>, authority: Authority) -> f64 {
        quadratic_form(self.p(step, authority), x)
    }
}

pub(crate) fn quadratic_form(m: &DMatrix<f64>, x: &DVector<f64>) -> f64 {
    (x.transpose() * m * x)[(0, 0)]
}

/// Conjugates `p` by the closed loop `t`: the value matrix one step ahead
/// pulled back through `x+ = t x`.
pub(crate) fn pullback(t: &DMatrix<f64>, p: &DMatrix<f64>) -> DMatrix<f64> {
    symmetrize(t.transpose() * p * t)
}

/// Branch of the human-authority step game from quadratic-form matrices:
/// `stay` is the idle continuation, `switch` the handover continuation, and
/// `human_cost`/`auto_cost` the takeover-cost matrices.
///
/// For one-dimensional plants this defers to the scalar selection (shared
/// tie handling); otherwise idling wins when `stay` is smaller than
/// `switch + costs` as a quadratic form for every state (definiteness), and
/// an indefinite difference falls back to comparing traces, biased toward
/// idle on a zero trace, with a warning.
pub(crate) fn classify_human(
    stay: &DMatrix<f64>,
    switch: &DMatrix<f64>,
    human_cost: &DMatrix<f64>,
    auto_cost: &DMatrix<f64>,
) -> (Branch, Option<String>) {
    if stay.nrows() == 1 {
        let eq = select_human(
            stay[(0, 0)],
            switch[(0, 0)],
            human_cost[(0, 0)].max(0.0),
            auto_cost[(0, 0)].max(0.0),
        )
        .expect("finite scalar inputs");
        return (eq.branch, None);
    }
    let margin = human_cost + auto_cost + switch - stay;
    let (min_eig, max_eig) = eigen_range(&symmetrize(margin.clone()));
    if min_eig > 0.0 {
        (Branch::Idle, None)
    } else if max_eig < 0.0 {
        (Branch::JointSwitch, None)
    } else {
        let branch = if margin.trace() >= 0.0 {
            Branch::Idle
        } else {
            Branch::JointSwitch
        };
        let warning = format!(
            "human-authority branch test indefinite (eigenvalues in [{min_eig:.3e}, \
             {max_eig:.3e}]); kept {} by trace",
            branch.label()
        );
        (branch, Some(warning))
    }
}

/// Branch of the autonomous-authority step game from quadratic-form
/// matrices; `stay_human`/`stay_autonomous` are the idle continuations under
/// each authority and `intent` the attempt success probability.
///
/// The scalar thresholds `human_cost/p` and `auto_cost/(1-p)` become
/// definiteness tests on the gap `stay_autonomous - stay_human`. Gaps not
/// comparable to a threshold (indefinite difference) fall back to traces
/// with the same precedence, biased toward the earlier branch on ties, and
/// record a warning.
pub(crate) fn classify_autonomous(
    stay_human: &DMatrix<f64>,
    stay_autonomous: &DMatrix<f64>,
    human_cost: &DMatrix<f64>,
    auto_cost: &DMatrix<f64>,
    intent: f64,
) -> (Branch, Option<String>) {
    if stay_human.nrows() == 1 {
        let eq = select_autonomous(
            stay_human[(0, 0)],
            stay_autonomous[(0, 0)],
            human_cost[(0, 0)].max(0.0),
            auto_cost[(0, 0)].max(0.0),
            intent,
        )
        .expect("finite scalar inputs");
        return (eq.branch, None);
    }
    if intent == 0.0 {
        return (Branch::Idle, None);
    }
    let gap = stay_autonomous - stay_human;
    let attempt_floor = human_cost / intent;
    let below_floor = &attempt_floor - &gap;
    let (bf_min, bf_max) = eigen_range(&symmetrize(below_floor.clone()));
    if bf_min > 0.0 {
        return (Branch::Idle, None);
    }
    let joint_floor = if intent < 1.0 {
        Some(auto_cost / (1.0 - intent))
    } else {
        None
    };
    let above_floor = bf_max <= 0.0;
    let (within_ceiling, beyond_ceiling) = match &joint_floor {
        None => (true, false),
        Some(ceiling) => {
            let slack = ceiling - &gap;
            let (s_min, s_max) = eigen_range(&symmetrize(slack.clone()));
            (s_min >= 0.0, s_max < 0.0)
        }
    };
    if above_floor && within_ceiling {
        return (Branch::HumanTakeover, None);
    }
    if above_floor && beyond_ceiling {
        return (Branch::JointSwitch, None);
    }
    // State-dependent comparison: fall back to traces with the scalar
    // precedence (idle, attempt, joint switch).
    let gap_tr = gap.trace();
    let branch = if gap_tr <= attempt_floor.trace() {
        Branch::Idle
    } else if joint_floor.as_ref().map_or(true, |c| gap_tr <= c.trace()) {
        Branch::HumanTakeover
    } else {
        Branch::JointSwitch
    };
    let warning = format!(
        "autonomous-authority branch test indefinite (threshold-gap eigenvalues in \
         [{bf_min:.3e}, {bf_max:.3e}]); kept {} by trace",
        branch.label()
    );
    (branch, Some(warning))
}

/// Backward recursion for the coupled per-authority value matrices.
pub fn solve_lq_recursion(
    loops: &ClosedLoopPair,
    costs: &QuadraticCostSchedule,
    intent: &IntentSchedule,
) -> Result<RiccatiPair> {
    let steps = loops.horizon();
    if costs.horizon() != steps {
        return Err(Error::LengthMismatch {
            what: "quadratic cost schedule".to_string(),
            expected: steps,
            actual: costs.horizon(),
        });
    }
    if intent.len() != steps {
        return Err(Error::LengthMismatch {
            what: "intent schedule".to_string(),
            expected: steps,
            actual: intent.len(),
        });
    }
    let n = loops.state_dim();
    if costs.state_dim() != n {
        return Err(Error::DimensionMismatch {
            what: "quadratic cost schedule".to_string(),
            rows: n,
            cols: n,
            actual_rows: costs.state_dim(),
            actual_cols: costs.state_dim(),
        });
    }

    let mut p_human = vec![DMatrix::zeros(n, n); steps + 1];
    let mut p_autonomous = vec![DMatrix::zeros(n, n); steps + 1];
    p_human[steps] = symmetrize(costs.terminal_cost(Authority::Human).clone());
    p_autonomous[steps] = symmetrize(costs.terminal_cost(Authority::Autonomous).clone());
    let mut branch_human = vec![Branch::Idle; steps];
    let mut branch_autonomous = vec![Branch::Idle; steps];
    let mut warnings = Vec::new();

    for k in (0..steps).rev() {
        let stay_h = pullback(loops.human(k), &p_human[k + 1]);
        let stay_a = pullback(loops.autonomous(k), &p_autonomous[k + 1]);
        let h_cost = costs.takeover_cost(k, Authority::Human);
        let a_cost = costs.takeover_cost(k, Authority::Autonomous);
        let p = intent.at(k);

        let (bh, warn_h) = classify_human(&stay_h, &stay_a, h_cost, a_cost);
        branch_human[k] = bh;
        if let Some(detail) = warn_h {
            warnings.push(StepWarning {
                step: k,
                authority: Authority::Human,
                detail,
            });
        }
        let g_h = costs.state_cost(k, Authority::Human);
        p_human[k] = symmetrize(match bh {
            Branch::Idle => g_h + &stay_h,
            Branch::JointSwitch => g_h + &stay_a + h_cost + a_cost,
            Branch::HumanTakeover => unreachable!("human-authority game has no attempt branch"),
        });

        let (ba, warn_a) = classify_autonomous(&stay_h, &stay_a, h_cost, a_cost, p);
        branch_autonomous[k] = ba;
        if let Some(detail) = warn_a {
            warnings.push(StepWarning {
                step: k,
                authority: Authority::Autonomous,
                detail,
            });
        }
        let g_a = costs.state_cost(k, Authority::Autonomous);
        p_autonomous[k] = symmetrize(match ba {
            Branch::Idle => g_a + &stay_a,
            Branch::HumanTakeover => g_a + &stay_h * p + &stay_a * (1.0 - p) + h_cost,
            Branch::JointSwitch => g_a + &stay_h + h_cost + a_cost,
        });
    }

    Ok(RiccatiPair {
        p_human,
        p_autonomous,
        branch_human,
        branch_autonomous,
        warnings,
    })
}

/// Equilibrium action at a concrete state, from the solved value matrices.
/// All quadratic forms collapse to scalars at `x`, so the scalar selection
/// applies exactly; the zero state has nothing to gain from any action and
/// idles.
#[allow(clippy::too_many_arguments)]
pub fn policy_at_state(
    x: &DVector<f64>,
    step: usize,
    pair: &RiccatiPair,
    loops: &ClosedLoopPair,
    costs: &QuadraticCostSchedule,
    intent: &IntentSchedule,
    authority: Authority,
) -> Result<StepEquilibrium> {
    if x.iter().all(|&v| v == 0.0) {
        return Ok(StepEquilibrium {
            action: Branch::Idle.action(),
            branch: Branch::Idle,
            continuation: 0.0,
        });
    }
    let next_h = loops.human(step) * x;
    let next_a = loops.autonomous(step) * x;
    let v_h = quadratic_form(pair.p(step + 1, Authority::Human), &next_h);
    let v_a = quadratic_form(pair.p(step + 1, Authority::Autonomous), &next_a);
    let h = quadratic_form(costs.takeover_cost(step, Authority::Human), x).max(0.0);
    let a = quadratic_form(costs.takeover_cost(step, Authority::Autonomous), x).max(0.0);
    match authority {
        Authority::Human => select_human(v_h, v_a, h, a),
        Authority::Autonomous => select_autonomous(v_h, v_a, h, a, intent.at(step)),
    }
}

/// One-step consistency of the recursion at a concrete state: difference
/// between `x' P_k x` and the stage cost plus the equilibrium continuation
/// recomputed from the step-`k+1` matrices. Returns the residuals for the
/// human- and autonomous-authority values.
pub fn bellman_residual(
    x: &DVector<f64>,
    step: usize,
    pair: &RiccatiPair,
    loops: &ClosedLoopPair,
    costs: &QuadraticCostSchedule,
    intent: &IntentSchedule,
) -> Result<(f64, f64)> {
    let next_h = loops.human(step) * x;
    let next_a = loops.autonomous(step) * x;
    let v_h = quadratic_form(pair.p(step + 1, Authority::Human), &next_h);
    let v_a = quadratic_form(pair.p(step + 1, Authority::Autonomous), &next_a);
    let h = quadratic_form(costs.takeover_cost(step, Authority::Human), x).max(0.0);
    let a = quadratic_form(costs.takeover_cost(step, Authority::Autonomous), x).max(0.0);

    let eq_h = select_human(v_h, v_a, h, a)?;
    let lhs_h = pair.value(step, x, Authority::Human);
    let rhs_h = quadratic_form(costs.state_cost(step, Authority::Human), x) + eq_h.continuation;

    let eq_a = select_autonomous(v_h, v_a, h, a, intent.at(step))?;
    let lhs_a = pair.value(step, x, Authority::Autonomous);
    let rhs_a =
        quadratic_form(costs.state_cost(step, Authority::Autonomous), x) + eq_a.continuation;

    Ok(((lhs_h - rhs_h).abs(), (lhs_a - rhs_a).abs()))
}

/// Per-agent LQR state-feedback synthesis: independent Riccati passes, the
/// human over `(E, B)` against its state-cost schedule, the autonomous agent
/// over `(E, C)` against its own, each with the given control-effort weight.
pub fn lqr_gains(
    system: &LinearSystem,
    costs: &QuadraticCostSchedule,
    effort_human: &DMatrix<f64>,
    effort_auto: &DMatrix<f64>,
) -> Result<FeedbackGains> {
    let steps = system.horizon();
    if costs.horizon() != steps {
        return Err(Error::LengthMismatch {
            what: "quadratic cost schedule".to_string(),
            expected: steps,
            actual: costs.horizon(),
        });
    }
    validate_spd("human control-effort weight", effort_human, system.human_input_dim())?;
    validate_spd(
        "autonomous control-effort weight",
        effort_auto,
        system.autonomous_input_dim(),
    )?;

    let synthesize = |input: &dyn Fn(usize) -> DMatrix<f64>,
                      effort: &DMatrix<f64>,
                      authority: Authority|
     -> Result<Vec<DMatrix<f64>>> {
        let mut s = symmetrize(costs.terminal_cost(authority).clone());
        let mut gains = vec![DMatrix::zeros(0, 0); steps];
        for k in (0..steps).rev() {
            let b = input(k);
            let e = system.e(k);
            let curvature = symmetrize(effort + b.transpose() * &s * &b);
            let chol = Cholesky::new(curvature.clone()).ok_or_else(|| Error::GainSynthesis {
                step: k,
                detail: format!(
                    "effort + input'Su input has nonpositive curvature (trace {:.3e})",
                    curvature.trace()
                ),
            })?;
            let gain = -chol.solve(&(b.transpose() * &s * e));
            s = symmetrize(costs.state_cost(k, authority) + e.transpose() * &s * (e + &b * &gain));
            gains[k] = gain;
        }
        Ok(gains)
    };

    let human = synthesize(&|k| system.b(k).clone(), effort_human, Authority::Human)?;
    let autonomous = synthesize(&|k| system.c(k).clone(), effort_auto, Authority::Autonomous)?;
    Ok(FeedbackGains { human, autonomous })
}
