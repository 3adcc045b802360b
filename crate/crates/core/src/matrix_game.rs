//! Per-step 2x2 cost-to-go matrices and team equilibrium selection.
//!
//! Both agents minimize the same objective, so each step reduces to a 2x2
//! matrix game over the joint takeover actions. The closed forms below take
//! the continuation values `v_h` (next authority human) and `v_a` (next
//! authority autonomous) together with the per-step takeover costs and, on
//! the autonomous side, the success probability of a unilateral attempt.

use crate::error::{ensure_finite, ensure_nonnegative, ensure_probability, Result};
use crate::takeover::ActionPair;

/// 2x2 cost-to-go matrix; rows index the human action, columns the
/// autonomous action (0 = idle, 1 = act).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CostToGoMatrix {
    entries: [[f64; 2]; 2],
}

impl CostToGoMatrix {
    pub fn from_entries(entries: [[f64; 2]; 2]) -> CostToGoMatrix {
        CostToGoMatrix { entries }
    }

    pub fn entry(&self, human_acts: bool, autonomous_acts: bool) -> f64 {
        self.entries[human_acts as usize][autonomous_acts as usize]
    }

    pub fn entries(&self) -> [[f64; 2]; 2] {
        self.entries
    }

    /// Expected cost of the profile where the pair `action` is played.
    pub fn at(&self, action: ActionPair) -> f64 {
        self.entries[action.row()][action.col()]
    }
}

/// Which closed-form branch the equilibrium selection took.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Branch {
    /// Both agents idle; authority stays put.
    Idle,
    /// Unilateral human attempt while the autonomous side idles.
    HumanTakeover,
    /// Both agents act: a handover agreed by both sides.
    JointSwitch,
}

impl Branch {
    pub fn action(self) -> ActionPair {
        match self {
            Branch::Idle => ActionPair::new(false, false),
            Branch::HumanTakeover => ActionPair::new(true, false),
            Branch::JointSwitch => ActionPair::new(true, true),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Branch::Idle => "idle",
            Branch::HumanTakeover => "human-takeover",
            Branch::JointSwitch => "joint-switch",
        }
    }
}

/// Equilibrium of one step: the pure joint action, the branch it came from,
/// and the equilibrium cost-to-go (continuation value including takeover
/// costs, excluding the current stage cost).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepEquilibrium {
    pub action: ActionPair,
    pub branch: Branch,
    pub continuation: f64,
}

fn validate_inputs(v_h: f64, v_a: f64, human_cost: f64, auto_cost: f64) -> Result<()> {
    ensure_finite("continuation value v_h", v_h)?;
    ensure_finite("continuation value v_a", v_a)?;
    ensure_nonnegative("human takeover cost", human_cost)?;
    ensure_nonnegative("autonomous takeover cost", auto_cost)?;
    Ok(())
}

/// Cost-to-go matrix while the human holds authority. Authority flips only
/// on the joint action, so three entries continue at `v_h`.
pub fn cost_to_go_human(
    v_h: f64,
    v_a: f64,
    human_cost: f64,
    auto_cost: f64,
) -> Result<CostToGoMatrix> {
    validate_inputs(v_h, v_a, human_cost, auto_cost)?;
    Ok(CostToGoMatrix::from_entries([
        [v_h, v_h + auto_cost],
        [v_h + human_cost, v_a + human_cost + auto_cost],
    ]))
}

/// Cost-to-go matrix while the autonomous controller holds authority. The
/// unilateral human attempt succeeds with probability `intent`.
pub fn cost_to_go_autonomous(
    v_h: f64,
    v_a: f64,
    human_cost: f64,
    auto_cost: f64,
    intent: f64,
) -> Result<CostToGoMatrix> {
    validate_inputs(v_h, v_a, human_cost, auto_cost)?;
    let p = ensure_probability("takeover intent", intent)?;
    Ok(CostToGoMatrix::from_entries([
        [v_a, v_a + auto_cost],
        [
            p * v_h + (1.0 - p) * v_a + human_cost,
            v_h + human_cost + auto_cost,
        ],
    ]))
}

/// Smallest entry of the matrix: the cost of the best joint action if the
/// team could commit to any profile. Equilibrium selection can exceed this
/// on the autonomous side, never undercut it.
pub fn min_min_value(matrix: &CostToGoMatrix) -> f64 {
    matrix
        .entries
        .iter()
        .flatten()
        .fold(f64::INFINITY, |acc, &v| acc.min(v))
}

/// Equilibrium selection while the human holds authority: idle while keeping
/// authority is strictly cheaper than handing off and paying both takeover
/// costs; ties go to the joint switch.
pub fn select_human(
    v_h: f64,
    v_a: f64,
    human_cost: f64,
    auto_cost: f64,
) -> Result<StepEquilibrium> {
    validate_inputs(v_h, v_a, human_cost, auto_cost)?;
    let switch = v_a + human_cost + auto_cost;
    Ok(if v_h < switch {
        StepEquilibrium {
            action: Branch::Idle.action(),
            branch: Branch::Idle,
            continuation: v_h,
        }
    } else {
        StepEquilibrium {
            action: Branch::JointSwitch.action(),
            branch: Branch::JointSwitch,
            continuation: switch,
        }
    })
}

/// Equilibrium selection while the autonomous controller holds authority.
///
/// With `gap = v_a - v_h` (how much worse staying autonomous is), the branch
/// thresholds are `human_cost / intent` and `auto_cost / (1 - intent)`:
/// below the first the attempt is not worth its cost and both idle; between
/// them (inclusive) the human attempts alone; above the second the sides
/// agree on a joint switch. A zero intent makes the attempt futile, so both
/// idle regardless of the gap; an intent of one makes the joint switch
/// unreachable.
pub fn select_autonomous(
    v_h: f64,
    v_a: f64,
    human_cost: f64,
    auto_cost: f64,
    intent: f64,
) -> Result<StepEquilibrium> {
    validate_inputs(v_h, v_a, human_cost, auto_cost)?;
    let p = ensure_probability("takeover intent", intent)?;
    let idle = StepEquilibrium {
        action: Branch::Idle.action(),
        branch: Branch::Idle,
        continuation: v_a,
    };
    if p == 0.0 {
        return Ok(idle);
    }
    let gap = v_a - v_h;
    let attempt_floor = human_cost / p;
    let joint_floor = if p == 1.0 {
        f64::INFINITY
    } else {
        auto_cost / (1.0 - p)
    };
    Ok(if gap < attempt_floor {
        idle
    } else if gap <= joint_floor {
        StepEquilibrium {
            action: Branch::HumanTakeover.action(),
            branch: Branch::HumanTakeover,
            continuation: p * v_h + (1.0 - p) * v_a + human_cost,
        }
    } else {
        StepEquilibrium {
            action: Branch::JointSwitch.action(),
            branch: Branch::JointSwitch,
            continuation: v_h + human_cost + auto_cost,
        }
    })
}
