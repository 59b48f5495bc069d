//! UCB-Greedy, the brute-force clairvoyant oracle, alpha-regret and the
//! hardness construction.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::environment::{BlockState, Event, RoundDraw, RoundOutcome};
use crate::error::{CbbError, Result};
use crate::instance::Instance;
use crate::ucb_cbb::UcbState;

/// Plays the available arm with the highest index for the observed context.
pub fn ucb_greedy_step(
    inst: &Instance,
    state: &mut UcbState,
    draw: &RoundDraw,
    block: &mut BlockState,
) -> Result<RoundOutcome> {
    let j = draw.context;
    let mut best: Option<(usize, f64)> = None;
    for i in 0..inst.num_arms() {
        if !block.is_available(i) {
            continue;
        }
        let idx = state.index(i, j, draw.t);
        if best.is_none_or(|(_, b)| idx > b) {
            best = Some((i, idx));
        }
    }
    let out = match best {
        Some((i, _)) => RoundOutcome::resolve(inst, draw, block, Some(i), Event::Play)?,
        None => RoundOutcome::resolve(inst, draw, block, None, Event::Block)?,
    };
    if let Some(i) = out.action {
        state.record(i, j, out.reward);
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct UcbGreedy {
    state: UcbState,
}

impl UcbGreedy {
    pub fn new(inst: &Instance) -> Self {
        UcbGreedy { state: UcbState::new(inst.num_arms(), inst.num_contexts()) }
    }

    pub fn state(&self) -> &UcbState {
        &self.state
    }

    pub fn step(&mut self, inst: &Instance, draw: &RoundDraw, block: &mut BlockState) -> Result<RoundOutcome> {
        ucb_greedy_step(inst, &mut self.state, draw, block)
    }
}

// ---------------------------------------------------------------------------
// Clairvoyant oracle
// ---------------------------------------------------------------------------

/// Limit on `m^T * prod_i d_i` for the brute-force oracle.
pub const ORACLE_LIMIT: f64 = 1e7;

/// Blocking states in mixed radix (`remaining_i` in `0..d_i`) with their
/// transitions under each action (`k` means no play).
struct StateSpace {
    k: usize,
    size: usize,
    /// `next[s * (k + 1) + a]`, `None` when arm `a` is blocked in `s`.
    next: Vec<Option<usize>>,
}

impl StateSpace {
    fn new(inst: &Instance) -> Self {
        let k = inst.num_arms();
        let radix: Vec<usize> = inst.delays().iter().map(|&d| d as usize).collect();
        let size: usize = radix.iter().product();
        let decode = |mut s: usize| -> Vec<usize> {
            radix
                .iter()
                .map(|&r| {
                    let v = s % r;
                    s /= r;
                    v
                })
                .collect()
        };
        let encode = |v: &[usize]| -> usize { v.iter().zip(&radix).rev().fold(0, |acc, (&x, &r)| acc * r + x) };
        let mut next = vec![None; size * (k + 1)];
        for s in 0..size {
            let rem = decode(s);
            for a in 0..=k {
                if a < k && rem[a] != 0 {
                    continue;
                }
                let mut n: Vec<usize> = rem.iter().map(|&r| r.saturating_sub(1)).collect();
                if a < k {
                    n[a] = radix[a] - 1;
                }
                next[s * (k + 1) + a] = Some(encode(&n));
            }
        }
        StateSpace { k, size, next }
    }

    /// One round of the forward DP: best reward reachable in each state.
    fn advance(&self, inst: &Instance, dp: &[f64], context: usize) -> Vec<f64> {
        let mut out = vec![f64::NEG_INFINITY; self.size];
        for (s, &v) in dp.iter().enumerate() {
            if v == f64::NEG_INFINITY {
                continue;
            }
            for a in 0..=self.k {
                if let Some(n) = self.next[s * (self.k + 1) + a] {
                    let gain = if a < self.k { inst.mean(a, context) } else { 0.0 };
                    if v + gain > out[n] {
                        out[n] = v + gain;
                    }
                }
            }
        }
        out
    }

    fn start(&self) -> Vec<f64> {
        let mut dp = vec![f64::NEG_INFINITY; self.size];
        dp[0] = 0.0;
        dp
    }
}

fn best(dp: &[f64]) -> f64 {
    dp.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Best total expected reward over feasible pull sequences for a known context sequence.
pub fn clairvoyant_sequence_value(inst: &Instance, contexts: &[usize]) -> f64 {
    let space = StateSpace::new(inst);
    let mut dp = space.start();
    for &j in contexts {
        dp = space.advance(inst, &dp, j);
    }
    best(&dp)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SequenceValue {
    pub contexts: Vec<usize>,
    pub probability: f64,
    pub best_reward: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleResult {
    /// `Rew*(T)`.
    pub expected_reward: f64,
    pub per_sequence: Option<Vec<SequenceValue>>,
}

fn oracle_guard(inst: &Instance, horizon: u64) -> Result<()> {
    let states: f64 = inst.delays().iter().map(|&d| d as f64).product();
    let size = (inst.num_contexts() as f64).powf(horizon as f64) * states;
    if size > ORACLE_LIMIT {
        return Err(CbbError::TooLarge { what: "clairvoyant oracle (m^T * prod d_i)", size, limit: ORACLE_LIMIT });
    }
    Ok(())
}

/// Depth-first walk over context prefixes carrying the DP vector.
fn walk(
    inst: &Instance,
    space: &StateSpace,
    dp: &[f64],
    prefix: &mut Vec<usize>,
    prob: f64,
    horizon: usize,
    keep: &mut Option<Vec<SequenceValue>>,
) -> f64 {
    if prefix.len() == horizon {
        let b = best(dp);
        if let Some(v) = keep {
            v.push(SequenceValue { contexts: prefix.clone(), probability: prob, best_reward: b });
        }
        return prob * b;
    }
    let mut total = 0.0;
    for (j, &f) in inst.context_probs().iter().enumerate() {
        if f == 0.0 {
            continue;
        }
        let next = space.advance(inst, dp, j);
        prefix.push(j);
        total += walk(inst, space, &next, prefix, prob * f, horizon, keep);
        prefix.pop();
    }
    total
}

fn clairvoyant(inst: &Instance, horizon: u64, keep: bool) -> Result<OracleResult> {
    oracle_guard(inst, horizon)?;
    let space = StateSpace::new(inst);
    let start = space.start();
    if horizon == 0 {
        return Ok(OracleResult { expected_reward: 0.0, per_sequence: keep.then(Vec::new) });
    }
    // Split by first context; partial results are summed in context order.
    let parts: Vec<(f64, Option<Vec<SequenceValue>>)> = (0..inst.num_contexts())
        .into_par_iter()
        .filter(|&j| inst.context_probs()[j] > 0.0)
        .map(|j| {
            let dp = space.advance(inst, &start, j);
            let mut prefix = vec![j];
            let mut kept = keep.then(Vec::new);
            let v = walk(inst, &space, &dp, &mut prefix, inst.context_probs()[j], horizon as usize, &mut kept);
            (v, kept)
        })
        .collect();
    let mut expected_reward = 0.0;
    let mut per_sequence = keep.then(Vec::new);
    for (v, kept) in parts {
        expected_reward += v;
        if let (Some(all), Some(k)) = (per_sequence.as_mut(), kept) {
            all.extend(k);
        }
    }
    Ok(OracleResult { expected_reward, per_sequence })
}

/// `Rew*(T)`: expected reward of the best fixed pull sequence chosen after
/// seeing all `T` contexts. Exhaustive over context sequences.
pub fn clairvoyant_reward(inst: &Instance, horizon: u64) -> Result<OracleResult> {
    clairvoyant(inst, horizon, false)
}

/// Like [`clairvoyant_reward`], also keeping every sequence with its probability and value.
pub fn clairvoyant_reward_detailed(inst: &Instance, horizon: u64) -> Result<OracleResult> {
    clairvoyant(inst, horizon, true)
}

/// `1 - (d_max - 1) / (d_max - 1 + T)`.
pub fn lp_bound_factor(d_max: u64, horizon: u64) -> f64 {
    let d = d_max as f64 - 1.0;
    1.0 - d / (d + horizon as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpperBoundKind {
    ExactOracle,
    LpTimesT,
}

/// `alpha * UB - policy_reward` with UB either `Rew*(T)` or `T` times the LP value.
pub fn alpha_regret(
    inst: &Instance,
    policy_reward: f64,
    horizon: u64,
    alpha: f64,
    kind: UpperBoundKind,
) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(CbbError::Param(format!("alpha = {alpha} is outside (0, 1]")));
    }
    let ub = match kind {
        UpperBoundKind::ExactOracle => clairvoyant_reward(inst, horizon)?.expected_reward,
        UpperBoundKind::LpTimesT => {
            let z = crate::lp::solve_lp(inst, &crate::lp::LpObjective::means(inst));
            horizon as f64 * z.value()
        }
    };
    Ok(alpha * ub - policy_reward)
}

// ---------------------------------------------------------------------------
// Hardness construction
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HardnessRecord {
    pub f_opt: f64,
    pub q_opt: (f64, f64),
    pub clairvoyant_lb: f64,
    pub ratio_ub: f64,
}

/// `(R q1 + (1 - eps) q2) / (1 + (d - 1)(eps q1 + (1 - eps) q2))`.
pub fn hardness_objective(d: u64, eps: f64, r: f64, q1: f64, q2: f64) -> f64 {
    (r * q1 + (1.0 - eps) * q2) / (1.0 + (d as f64 - 1.0) * (eps * q1 + (1.0 - eps) * q2))
}

/// Closed-form maximizer of [`hardness_objective`] over `[0, 1]^2`.
pub fn hardness_closed_form(d: u64, eps: f64, r: f64) -> (f64, (f64, f64)) {
    if r > eps + 1.0 / (d as f64 - 1.0) {
        (r / (1.0 + (d as f64 - 1.0) * eps), (1.0, 0.0))
    } else {
        ((r + 1.0 - eps) / d as f64, (1.0, 1.0))
    }
}

/// Reward rate of the block policy that lower-bounds the clairvoyant, with
/// block length `B = d ceil(1 / sqrt(eps))`.
pub fn hardness_clairvoyant_lb(d: u64, eps: f64, r: f64) -> f64 {
    let df = d as f64;
    let b = df * (1.0 / eps.sqrt()).ceil();
    r * (1.0 - df / b) * (1.0 - eps).powf(b - 1.0) + (1.0 / df - 1.0 / b) * (1.0 - eps).powf(b)
}

pub fn hardness_analysis(d: u64, eps: f64, r: f64) -> Result<HardnessRecord> {
    if d < 2 {
        return Err(CbbError::Param(format!("d = {d}, need d >= 2")));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(CbbError::Param(format!("eps = {eps} is outside (0, 1)")));
    }
    if !(r.is_finite() && r >= 0.0) {
        return Err(CbbError::Param(format!("R = {r} must be finite and non-negative")));
    }
    const N: usize = 1000;
    let mut f_opt = f64::NEG_INFINITY;
    let mut q_opt = (0.0, 0.0);
    for a in 0..=N {
        let q1 = a as f64 / N as f64;
        for b in 0..=N {
            let q2 = b as f64 / N as f64;
            let v = hardness_objective(d, eps, r, q1, q2);
            if v > f_opt {
                f_opt = v;
                q_opt = (q1, q2);
            }
        }
    }
    let clairvoyant_lb = hardness_clairvoyant_lb(d, eps, r);
    Ok(HardnessRecord { f_opt, q_opt, clairvoyant_lb, ratio_ub: f_opt / clairvoyant_lb })
}
