//! Property checks with measured values, runnable from the CLI.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::baselines::{clairvoyant_reward, hardness_analysis, hardness_closed_form, lp_bound_factor};
use crate::environment::{stream, BlockState, Nature, Purpose};
use crate::error::Result;
use crate::fi_cbb::{build_schedule, FiCbb};
use crate::harness::{run_trace, PolicyKind};
use crate::instance::{named_instance, play_factor, Instance, RewardKind};
use crate::lp::{compute_gaps, enumerate_extreme_points, solve_lp, LpObjective, FEAS_TOL};
use crate::ucb_cbb::{critical_time, delay_m, lag_round, UcbCbb};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    Fast,
    Full,
}

impl std::str::FromStr for Level {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "fast" => Ok(Level::Fast),
            "full" => Ok(Level::Full),
            other => Err(format!("unknown level `{other}` (fast|full)")),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckEntry {
    pub name: String,
    pub passed: bool,
    pub measured: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub level: Level,
    pub entries: Vec<CheckEntry>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.entries.iter().all(|e| e.passed)
    }
}

/// Play and availability counts of the full-information policy over
/// independent runs, indexed `[arm][context][t - 1]` and `[arm][t - 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiCounts {
    pub runs: u64,
    pub plays: Vec<Vec<Vec<u64>>>,
    pub available: Vec<Vec<u64>>,
}

impl FiCounts {
    fn zero(k: usize, m: usize, horizon: usize) -> Self {
        FiCounts { runs: 0, plays: vec![vec![vec![0; horizon]; m]; k], available: vec![vec![0; horizon]; k] }
    }

    fn merge(mut self, other: FiCounts) -> Self {
        self.runs += other.runs;
        for (a, b) in self.plays.iter_mut().flatten().zip(other.plays.iter().flatten()) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        for (a, b) in self.available.iter_mut().zip(&other.available) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        self
    }
}

/// Runs the full-information policy `runs` times for `horizon` rounds; run
/// `r` uses seed `seed + r`.
pub fn fi_monte_carlo(inst: &Instance, horizon: u64, runs: u64, seed: u64) -> Result<FiCounts> {
    let k = inst.num_arms();
    let m = inst.num_contexts();
    let h = horizon as usize;
    let policy = {
        let mut p = FiCbb::new(inst);
        // grow the schedule once so clones do not
        let mut block = BlockState::new(k);
        let mut nature = Nature::new(0);
        let mut coins = stream(0, Purpose::PolicyCoins(0));
        let d = nature.draw(inst);
        p.step(inst, &d, &mut block, &mut coins)?;
        p
    };
    const CHUNK: u64 = 4096;
    let chunks: Vec<u64> = (0..runs.div_ceil(CHUNK)).collect();
    let parts = chunks
        .into_par_iter()
        .map(|c| -> Result<FiCounts> {
            let mut acc = FiCounts::zero(k, m, h);
            for r in c * CHUNK..((c + 1) * CHUNK).min(runs) {
                let s = seed.wrapping_add(r);
                let mut p = policy.clone();
                let mut nature = Nature::new(s);
                let mut block = BlockState::new(k);
                let mut coins = stream(s, Purpose::PolicyCoins(0));
                for t in 0..h {
                    for i in 0..k {
                        acc.available[i][t] += block.is_available(i) as u64;
                    }
                    let d = nature.draw(inst);
                    let o = p.step(inst, &d, &mut block, &mut coins)?;
                    if let Some(i) = o.action {
                        acc.plays[i][o.context][t] += 1;
                    }
                }
                acc.runs += 1;
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(parts.into_iter().fold(FiCounts::zero(k, m, h), FiCounts::merge))
}

/// `|hits / n - p|` in binomial standard deviations.
pub fn binomial_z(hits: u64, n: u64, p: f64) -> f64 {
    let sd = (p * (1.0 - p) / n as f64).sqrt();
    let diff = hits as f64 / n as f64 - p;
    if sd == 0.0 {
        if diff.abs() < 1e-12 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        diff.abs() / sd
    }
}

/// Largest z-score of per-round play frequencies against `(d/(2d-1)) z*_ij`.
pub fn fi_exactness_max_z(inst: &Instance, counts: &FiCounts) -> f64 {
    let z = solve_lp(inst, &LpObjective::means(inst));
    let mut worst = 0.0f64;
    for &(i, j) in z.support() {
        let p = play_factor(inst.delay(i)) * z.rate(i, j);
        for &hits in &counts.plays[i][j] {
            worst = worst.max(binomial_z(hits, counts.runs, p));
        }
    }
    worst
}

/// Largest z-score of availability frequencies against the schedule's `q_{i,t}`.
pub fn fi_availability_max_z(inst: &Instance, counts: &FiCounts) -> f64 {
    let z = solve_lp(inst, &LpObjective::means(inst));
    let horizon = counts.available[0].len() as u64;
    let s = build_schedule(inst, &z, horizon);
    let mut worst = 0.0f64;
    for i in 0..inst.num_arms() {
        for t in 1..=horizon {
            worst = worst.max(binomial_z(counts.available[i][t as usize - 1], counts.runs, s.q(i, t)));
        }
    }
    worst
}

/// The 2-arm instance used by the availability checks.
pub fn two_arm_instance() -> Instance {
    Instance::new(vec![2, 3], vec![0.6, 0.4], vec![vec![0.9, 0.2], vec![0.3, 0.8]], RewardKind::Bernoulli)
        .expect("valid instance")
}

/// Random instances with `k, m <= 2` and delays `<= 3`, small enough for the
/// brute-force oracle up to `T = 8`.
pub fn oracle_sized_instances(count: u64, seed: u64) -> Result<Vec<Instance>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let k = rng.gen_range(1..=2);
            let m = rng.gen_range(1..=2);
            Instance::random(k, m, 3, rng.gen())
        })
        .collect()
}

/// Worst slack of `T * LP >= (1 - (d-1)/(d-1+T)) Rew*(T)` for `T = 1..=8` on
/// each instance. Negative means violated.
pub fn lemma1_min_slack(instances: &[Instance]) -> Result<f64> {
    let mut worst = f64::INFINITY;
    for inst in instances {
        let lp = solve_lp(inst, &LpObjective::means(inst)).value();
        for t in 1..=8u64 {
            let rew = clairvoyant_reward(inst, t)?.expected_reward;
            worst = worst.min(t as f64 * lp - lp_bound_factor(inst.d_max(), t) * rew);
        }
    }
    Ok(worst)
}

/// Largest `|supp(Z)| - (k + m)` over solver outputs for random objectives and
/// over all enumerated vertices. Non-positive means the bound holds.
pub fn sparsity_max_excess(instances: u64, objectives: u64, seed: u64) -> Result<i64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = i64::MIN;
    for _ in 0..instances {
        let k = rng.gen_range(1..=3);
        let m = rng.gen_range(1..=3);
        let inst = Instance::random(k, m, 6, rng.gen())?;
        let bound = (k + m) as i64;
        for _ in 0..objectives {
            let w = (0..k).map(|_| (0..m).map(|_| rng.gen::<f64>()).collect()).collect();
            let z = solve_lp(&inst, &LpObjective::new(w)?);
            assert!(z.is_feasible(&inst));
            worst = worst.max(z.support().len() as i64 - bound);
        }
        for v in enumerate_extreme_points(&inst)? {
            worst = worst.max(v.support().len() as i64 - bound);
        }
    }
    Ok(worst)
}

/// Largest deviation of the grid maximizer from the closed form over random
/// triples in the regime `R > eps + 1/(d-1)`: (value error, argmax error).
pub fn hardness_grid_errors(count: u64, seed: u64) -> Result<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut value_err = 0.0f64;
    let mut arg_err = 0.0f64;
    for _ in 0..count {
        let d = rng.gen_range(2..=10u64);
        let eps = rng.gen_range(0.001..0.5);
        let lo = eps + 1.0 / (d as f64 - 1.0);
        let r = lo + rng.gen_range(0.01..1.0);
        let h = hardness_analysis(d, eps, r)?;
        let (f, (q1, q2)) = hardness_closed_form(d, eps, r);
        value_err = value_err.max((h.f_opt - f).abs());
        arg_err = arg_err.max((h.q_opt.0 - q1).abs().max((h.q_opt.1 - q2).abs()));
    }
    Ok((value_err, arg_err))
}

/// `T_c` bounds for `d_max` in `1..=100`, and lag monotonicity up to `horizon`.
pub fn lag_schedule_ok(horizon: u64) -> bool {
    (1..=100u64).all(|d| {
        let tc = critical_time(d);
        let bounds = (2 * d + 67..=3 * d + 71).contains(&tc);
        let mono = (tc + 1..=horizon).all(|t| {
            let step = lag_round(t, d) as i64 - lag_round(t - 1, d) as i64;
            let m_step = delay_m(t, d) as i64 - delay_m(t - 1, d) as i64;
            (0..=1).contains(&step) && m_step <= 1
        });
        bounds && mono
    })
}

fn entry(name: &str, f: impl FnOnce() -> Result<(bool, String)>) -> CheckEntry {
    let start = Instant::now();
    let (passed, measured) = match f() {
        Ok(v) => v,
        Err(e) => (false, format!("error: {e}")),
    };
    CheckEntry { name: name.into(), passed, measured, seconds: start.elapsed().as_secs_f64() }
}

pub fn verify_suite(level: Level) -> VerifyReport {
    let full = level == Level::Full;
    let mut entries = Vec::new();

    entries.push(entry("fi_cbb_play_probability_exact", || {
        let inst = two_arm_instance();
        let runs = if full { 200_000 } else { 20_000 };
        let c = fi_monte_carlo(&inst, 30, runs, 1)?;
        let z = fi_exactness_max_z(&inst, &c);
        Ok((z <= 5.0, format!("max z = {z:.3} over {runs} runs")))
    }));
    entries.push(entry("fi_cbb_availability_recursion", || {
        let inst = two_arm_instance();
        let runs = if full { 100_000 } else { 20_000 };
        let c = fi_monte_carlo(&inst, 30, runs, 1_000_003)?;
        let z = fi_availability_max_z(&inst, &c);
        Ok((z <= 5.0, format!("max z = {z:.3} over {runs} runs")))
    }));
    entries.push(entry("lp_upper_bound_vs_clairvoyant", || {
        let n = if full { 25 } else { 5 };
        let slack = lemma1_min_slack(&oracle_sized_instances(n, 3)?)?;
        Ok((slack >= -1e-9, format!("min slack = {slack:.3e} over {n} instances")))
    }));
    entries.push(entry("extreme_point_sparsity", || {
        let (inst, obj) = if full { (10, 10_000) } else { (4, 500) };
        let ex = sparsity_max_excess(inst, obj, 5)?;
        Ok((ex <= 0, format!("max |supp| - (k+m) = {ex}")))
    }));
    entries.push(entry("solver_matches_enumeration", || {
        let n = if full { 200 } else { 30 };
        let mut worst = 0.0f64;
        for s in 0..n {
            let inst = Instance::random(2 + (s % 2) as usize, 2 + (s % 3 == 0) as usize, 4, s)?;
            let best = enumerate_extreme_points(&inst)?.iter().map(|v| v.value()).fold(0.0, f64::max);
            worst = worst.max((solve_lp(&inst, &LpObjective::means(&inst)).value() - best).abs());
        }
        Ok((worst <= 1e-9, format!("max |value - enumerated optimum| = {worst:.3e}")))
    }));
    entries.push(entry("gap_instance_gaps", || {
        let g = compute_gaps(&named_instance("gap_instance(3, 0.9)")?)?;
        let mut worst = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 0.3 } else { 0.6 };
                worst = worst.max((g.delta_min[i][j] - want).abs());
            }
        }
        Ok((worst <= 1e-9, format!("max error = {worst:.3e}")))
    }));
    entries.push(entry("hardness_closed_form", || {
        let n = if full { 100 } else { 10 };
        let (v, a) = hardness_grid_errors(n, 9)?;
        Ok((v <= 1e-6 && a <= 1e-3, format!("value error {v:.3e}, argmax error {a:.3e}")))
    }));
    entries.push(entry("lag_schedule_facts", || {
        let h = if full { 200_000 } else { 20_000 };
        Ok((lag_schedule_ok(h), format!("d_max 1..=100, t <= {h}")))
    }));
    entries.push(entry("ucb_cbb_determinism", || {
        let inst = named_instance("integral(0.6)")?;
        let h = if full { 3000 } else { 600 };
        let a = run_trace(&inst, PolicyKind::UcbCbb, 17, h)?;
        let b = run_trace(&inst, PolicyKind::UcbCbb, 17, h)?;
        Ok((a == b, format!("{h} rounds")))
    }));
    entries.push(entry("ucb_cbb_counter_diagnostic", || {
        let inst = named_instance("integral(0.8)")?;
        let h = if full { 10_000 } else { 2000 };
        let mut p = UcbCbb::new(&inst);
        let mut nature = Nature::new(29);
        let mut block = BlockState::new(inst.num_arms());
        let mut coins = stream(29, Purpose::PolicyCoins(1));
        for _ in 0..h {
            let d = nature.draw(&inst);
            p.step(&inst, &d, &mut block, &mut coins)?;
        }
        let d = p.diagnostic();
        Ok((!d.flagged(), format!("{} eligible updates, {} undersampled", d.eligible, d.violations)))
    }));
    entries.push(entry("feasibility_of_solver_output", || {
        let mut ok = true;
        for s in 0..50 {
            let inst = Instance::random(4, 4, 8, 100 + s)?;
            let z = solve_lp(&inst, &LpObjective::means(&inst));
            ok &= z.is_feasible(&inst) && z.z().iter().flatten().all(|&v| v >= -FEAS_TOL);
        }
        Ok((ok, "50 random 4x4 instances".into()))
    }));
    VerifyReport { level, entries }
}
