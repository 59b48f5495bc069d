//! Bandit policy: UCB indices replace the unknown means in the LP, and the
//! vertex used at round `t` is the one computed from the indices of round
//! `t - M_t`. Because that lag grows like `log t`, the non-skipping
//! probabilities can be computed conditionally on the lagged history
//! ([`compq`]) without the vertex choice leaking into availability.

use std::collections::{BTreeMap, VecDeque};
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::environment::{BlockState, Event, RoundDraw, RoundOutcome};
use crate::error::{CbbError, Result};
use crate::fi_cbb::{non_skip_probability, sample_arm, Q_FLOOR};
use crate::instance::{play_factor, Instance};
use crate::lp::{solve_lp, tp_group_index, ExtremePoint, LpObjective};

/// `c1 = e^2 / (e^2 - 1)`.
pub fn c1() -> f64 {
    let e2 = std::f64::consts::E * std::f64::consts::E;
    e2 / (e2 - 1.0)
}

/// Constant of the counter diagnostic, `N >= C 2^l ln t`.
pub fn diagnostic_constant() -> f64 {
    109.0 * std::f64::consts::E
}

/// `min(1, mean + sqrt(3 ln t / (2 pulls)))`, or 1 for an unpulled pair.
pub fn ucb_index(emp_mean: f64, pulls: u64, t: u64) -> f64 {
    if pulls == 0 {
        return 1.0;
    }
    let ln_t = (t.max(1) as f64).ln();
    (emp_mean + (3.0 * ln_t / (2.0 * pulls as f64)).sqrt()).min(1.0)
}

/// `floor(2 log_c1 t) + 2 d_max + 8`, before the `t <= M` clamp.
pub fn delay_m_raw(t: u64, d_max: u64) -> u64 {
    let lg = 2.0 * (t.max(1) as f64).ln() / c1().ln();
    lg.floor() as u64 + 2 * d_max + 8
}

/// The exploitation lag `M_t`; equals `t` while `t <= M`.
pub fn delay_m(t: u64, d_max: u64) -> u64 {
    let m = delay_m_raw(t, d_max);
    if t <= m {
        t
    } else {
        m
    }
}

/// `t - M_t`: the round whose indices define the vertex used at `t` (0 means `Z(0)`).
pub fn lag_round(t: u64, d_max: u64) -> u64 {
    t - delay_m(t, d_max)
}

/// Smallest `t` with `t - M_t >= 1`.
pub fn critical_time(d_max: u64) -> u64 {
    let mut t = 1;
    while t <= delay_m_raw(t, d_max) {
        t += 1;
    }
    t
}

/// Pull counts, reward sums and triggering counters.
#[derive(Debug, Clone, PartialEq)]
pub struct UcbState {
    pulls: Vec<Vec<u64>>,
    sums: Vec<Vec<f64>>,
    counters: BTreeMap<(usize, usize, u32), u64>,
}

impl UcbState {
    pub fn new(k: usize, m: usize) -> Self {
        UcbState { pulls: vec![vec![0; m]; k], sums: vec![vec![0.0; m]; k], counters: BTreeMap::new() }
    }

    pub fn pulls(&self, arm: usize, context: usize) -> u64 {
        self.pulls[arm][context]
    }

    pub fn emp_mean(&self, arm: usize, context: usize) -> f64 {
        match self.pulls[arm][context] {
            0 => 0.0,
            n => self.sums[arm][context] / n as f64,
        }
    }

    pub fn index(&self, arm: usize, context: usize, t: u64) -> f64 {
        ucb_index(self.emp_mean(arm, context), self.pulls[arm][context], t)
    }

    pub fn index_matrix(&self, t: u64) -> Vec<Vec<f64>> {
        (0..self.pulls.len())
            .map(|i| (0..self.pulls[i].len()).map(|j| self.index(i, j, t)).collect())
            .collect()
    }

    pub fn record(&mut self, arm: usize, context: usize, reward: f64) {
        self.pulls[arm][context] += 1;
        self.sums[arm][context] += reward;
    }

    /// `N_{i,j,l}`.
    pub fn counter(&self, arm: usize, context: usize, group: u32) -> u64 {
        self.counters.get(&(arm, context, group)).copied().unwrap_or(0)
    }

    pub fn counters(&self) -> &BTreeMap<(usize, usize, u32), u64> {
        &self.counters
    }

    fn bump(&mut self, arm: usize, context: usize, group: u32) -> u64 {
        let n = self.counters.entry((arm, context, group)).or_insert(0);
        *n += 1;
        *n
    }
}

/// Vertices `Z(tau)` in the order they were computed; each written once.
#[derive(Debug, Clone, Default)]
pub struct ExtremePointLog {
    by_round: BTreeMap<u64, Arc<ExtremePoint>>,
}

impl ExtremePointLog {
    pub fn insert(&mut self, round: u64, z: ExtremePoint) -> Result<Arc<ExtremePoint>> {
        if self.by_round.contains_key(&round) {
            return Err(CbbError::Domain(format!("Z({round}) is already recorded")));
        }
        let z = Arc::new(z);
        self.by_round.insert(round, Arc::clone(&z));
        Ok(z)
    }

    pub fn get(&self, round: u64) -> Result<&Arc<ExtremePoint>> {
        self.by_round.get(&round).ok_or(CbbError::HistoryGap { round })
    }

    pub fn len(&self) -> usize {
        self.by_round.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_round.is_empty()
    }

    pub fn rounds(&self) -> impl Iterator<Item = u64> + '_ {
        self.by_round.keys().copied()
    }
}

/// Rounds at which each arm was played.
#[derive(Debug, Clone, PartialEq)]
pub struct PlayHistory {
    plays: Vec<Vec<u64>>,
}

impl PlayHistory {
    pub fn new(k: usize) -> Self {
        PlayHistory { plays: vec![Vec::new(); k] }
    }

    pub fn push(&mut self, arm: usize, t: u64) {
        debug_assert!(self.plays[arm].last().is_none_or(|&p| p < t));
        self.plays[arm].push(t);
    }

    /// Last play of `arm` strictly before round `s`.
    pub fn last_play_before(&self, arm: usize, s: u64) -> Option<u64> {
        let p = &self.plays[arm];
        let n = p.partition_point(|&x| x < s);
        n.checked_sub(1).map(|idx| p[idx])
    }
}

/// Per-round sampling rates `sum_j z_ij` of the vertex each round used.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RateLog {
    rates: Vec<Vec<f64>>,
}

impl RateLog {
    pub fn push(&mut self, t: u64, rates: Vec<f64>) {
        assert_eq!(self.rates.len() as u64 + 1, t, "rates must be logged once per round");
        self.rates.push(rates);
    }

    pub fn rate(&self, t: u64, arm: usize) -> Result<f64> {
        self.rates
            .get((t as usize).wrapping_sub(1))
            .map(|r| r[arm])
            .ok_or(CbbError::HistoryGap { round: t })
    }
}

/// Memo of `q_{i,t}(H_{t - M_t})` per arm.
#[derive(Debug, Clone, Default)]
pub struct CompQCache {
    per_arm: Vec<BTreeMap<u64, f64>>,
}

impl CompQCache {
    pub fn new(k: usize) -> Self {
        CompQCache { per_arm: vec![BTreeMap::new(); k] }
    }

    pub fn get(&self, arm: usize, t: u64) -> Option<f64> {
        self.per_arm[arm].get(&t).copied()
    }

    fn insert(&mut self, arm: usize, t: u64, q: f64) {
        self.per_arm[arm].insert(t, q);
    }

    /// Drops every entry with round below `threshold`.
    pub fn evict_below(&mut self, threshold: u64) {
        for m in &mut self.per_arm {
            *m = m.split_off(&threshold);
        }
    }

    pub fn len(&self) -> usize {
        self.per_arm.iter().map(|m| m.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn min_round(&self) -> Option<u64> {
        self.per_arm.iter().filter_map(|m| m.keys().next().copied()).min()
    }
}

/// Probability that `arm` is available at round `t` given the history
/// through round `t - M_t - 1`.
///
/// The recursion starts at the first round `t0 >= max(1, t - M_t)` at which
/// the arm is known to be available (one delay after its last known play)
/// and runs forward with the sampling rates and non-skipping probabilities
/// the policy actually used; the latter are themselves `compq` values and
/// are memoized in `cache`.
pub fn compq(
    inst: &Instance,
    plays: &PlayHistory,
    rates: &RateLog,
    cache: &mut CompQCache,
    arm: usize,
    t: u64,
) -> Result<f64> {
    let d = inst.delay(arm);
    if d == 1 {
        return Ok(1.0);
    }
    if let Some(q) = cache.get(arm, t) {
        return Ok(q);
    }
    let s = lag_round(t, inst.d_max());
    let mut t0 = s.max(1);
    if let Some(p) = plays.last_play_before(arm, s) {
        t0 = t0.max(p + d);
    }
    let q = if t0 > t {
        0.0
    } else {
        let len = (t - t0) as usize;
        let d = d as usize;
        let mut q = Vec::with_capacity(len + 1);
        let mut flow = Vec::with_capacity(len);
        q.push(1.0);
        for step in 0..len {
            let tau = t0 + step as u64;
            let beta = non_skip_probability(d as u64, compq(inst, plays, rates, cache, arm, tau)?);
            flow.push(q[step] * beta * rates.rate(tau, arm)?);
            let mut next = q[step] - flow[step];
            if step + 1 >= d {
                next += flow[step + 1 - d];
            }
            q.push(next.clamp(Q_FLOOR, 1.0));
        }
        q[len]
    };
    cache.insert(arm, t, q);
    Ok(q)
}

/// Counts for the subsampling diagnostic: rounds where
/// `N_{i,j,l} >= C 2^l ln t` and `T_{i,j} <= 2^-l N_{i,j,l} / (24 e)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize)]
pub struct CounterDiagnostic {
    /// Updates where the counter threshold was reached.
    pub eligible: u64,
    /// Eligible updates where the pair was undersampled.
    pub violations: u64,
}

impl CounterDiagnostic {
    /// Red flag when the undersampling frequency reaches `10 / t`.
    pub fn flagged(&self) -> bool {
        self.violations >= 10
    }
}

/// Checks of the lag schedule made while running.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize)]
pub struct LagChecks {
    /// Rounds past the critical time that were checked.
    pub rounds_checked: u64,
    pub max_lag_step: u64,
    pub max_m_step: i64,
}

/// The running policy.
#[derive(Debug, Clone)]
pub struct UcbCbb {
    d_max: u64,
    t_c: u64,
    state: UcbState,
    log: ExtremePointLog,
    cache: CompQCache,
    plays: PlayHistory,
    rates: RateLog,
    snapshots: VecDeque<(u64, UcbState)>,
    prev: Option<(u64, u64)>,
    warm_up: bool,
    diagnostic: CounterDiagnostic,
    lag_checks: LagChecks,
    last_m: u64,
    last_lp_value: f64,
}

impl UcbCbb {
    pub fn new(inst: &Instance) -> Self {
        let k = inst.num_arms();
        let m = inst.num_contexts();
        let mut log = ExtremePointLog::default();
        log.insert(0, solve_lp(inst, &LpObjective::ones(k, m))).expect("fresh log");
        UcbCbb {
            d_max: inst.d_max(),
            t_c: critical_time(inst.d_max()),
            state: UcbState::new(k, m),
            log,
            cache: CompQCache::new(k),
            plays: PlayHistory::new(k),
            rates: RateLog::default(),
            snapshots: VecDeque::new(),
            prev: None,
            warm_up: true,
            diagnostic: CounterDiagnostic::default(),
            lag_checks: LagChecks::default(),
            last_m: 0,
            last_lp_value: 0.0,
        }
    }

    /// Disables computing every arm's `compq` each round; results are unchanged.
    pub fn without_warm_up(mut self) -> Self {
        self.warm_up = false;
        self
    }

    pub fn state(&self) -> &UcbState {
        &self.state
    }

    pub fn log(&self) -> &ExtremePointLog {
        &self.log
    }

    pub fn cache(&self) -> &CompQCache {
        &self.cache
    }

    pub fn critical_time(&self) -> u64 {
        self.t_c
    }

    pub fn diagnostic(&self) -> CounterDiagnostic {
        self.diagnostic
    }

    pub fn lag_checks(&self) -> LagChecks {
        self.lag_checks
    }

    /// `M_t` of the last round played.
    pub fn last_m(&self) -> u64 {
        self.last_m
    }

    /// Objective value (under the indices it was built from) of the last vertex used.
    pub fn last_lp_value(&self) -> f64 {
        self.last_lp_value
    }

    /// `q_{i,t}(H_{t - M_t})` with the policy's own history.
    pub fn compq(&mut self, inst: &Instance, arm: usize, t: u64) -> Result<f64> {
        compq(inst, &self.plays, &self.rates, &mut self.cache, arm, t)
    }

    fn vertex_for(&mut self, inst: &Instance, lag: u64) -> Result<Arc<ExtremePoint>> {
        if let Ok(z) = self.log.get(lag) {
            return Ok(Arc::clone(z));
        }
        while self.snapshots.front().is_some_and(|(r, _)| *r < lag) {
            self.snapshots.pop_front();
        }
        let (round, snap) = self.snapshots.front().ok_or(CbbError::HistoryGap { round: lag })?;
        // the indices come from the start of round `lag`, before its reward
        assert_eq!(*round, lag, "index snapshot for round {lag} is missing");
        let obj = LpObjective::new(snap.index_matrix(lag))?;
        self.log.insert(lag, solve_lp(inst, &obj))
    }

    fn check_lag(&mut self, t: u64, m: u64, lag: u64) {
        if let Some((pm, plag)) = self.prev {
            if t >= self.t_c {
                assert!(lag >= plag && lag - plag <= 1, "t - M_t went from {plag} to {lag} at t = {t}");
                let dm = m as i64 - pm as i64;
                assert!(dm <= 1, "M_t jumped by {dm} at t = {t}");
                let c = &mut self.lag_checks;
                c.rounds_checked += 1;
                c.max_lag_step = c.max_lag_step.max(lag - plag);
                c.max_m_step = c.max_m_step.max(dm);
            }
        }
        self.prev = Some((m, lag));
    }

    pub fn step(
        &mut self,
        inst: &Instance,
        draw: &RoundDraw,
        block: &mut BlockState,
        coins: &mut ChaCha8Rng,
    ) -> Result<RoundOutcome> {
        let t = draw.t;
        let j = draw.context;
        let m = delay_m(t, self.d_max);
        let lag = t - m;
        self.check_lag(t, m, lag);
        self.last_m = m;

        self.cache.evict_below(lag);
        self.snapshots.push_back((t, self.state.clone_counts()));
        let z = self.vertex_for(inst, lag)?;
        self.last_lp_value = z.value();
        let k = inst.num_arms();
        self.rates.push(t, (0..k).map(|i| z.arm_rate(i)).collect());

        if self.warm_up {
            for i in 0..k {
                self.compq(inst, i, t)?;
            }
        }

        let ln_t = (t as f64).ln();
        for &(i, jj) in z.support() {
            let l = tp_group_index(z.rate(i, jj))?;
            let n = self.state.bump(i, jj, l);
            let scale = 2f64.powi(l as i32);
            // ln 1 = 0 makes the threshold vacuous at t = 1
            if t > 1 && n as f64 >= diagnostic_constant() * scale * ln_t {
                self.diagnostic.eligible += 1;
                let threshold = n as f64 / (scale * 24.0 * std::f64::consts::E);
                if self.state.pulls(i, jj) as f64 <= threshold {
                    self.diagnostic.violations += 1;
                }
            }
        }

        let f_j = inst.context_probs()[j];
        assert!(f_j > 0.0, "context {j} has zero probability");
        let u: f64 = coins.gen();
        let sampled = sample_arm(&z, f_j, j, u);
        let event = match sampled {
            None => Event::LpSkip,
            Some(i) if !block.is_available(i) => Event::Block,
            Some(i) => {
                let q = self.compq(inst, i, t)?;
                let beta = if inst.delay(i) == 1 { 1.0 } else { non_skip_probability(inst.delay(i), q) };
                assert!(beta * q <= play_factor(inst.delay(i)) + 1e-12, "beta * q exceeds d/(2d-1)");
                let v: f64 = coins.gen();
                if v < beta {
                    Event::Play
                } else {
                    Event::Skip
                }
            }
        };
        let out = RoundOutcome::resolve(inst, draw, block, sampled, event)?;
        if let Some(i) = out.action {
            self.state.record(i, j, out.reward);
            self.plays.push(i, t);
        }
        Ok(out)
    }
}

impl UcbState {
    fn clone_counts(&self) -> UcbState {
        UcbState { pulls: self.pulls.clone(), sums: self.sums.clone(), counters: BTreeMap::new() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::{stream, Nature, Purpose};
    use crate::fi_cbb::build_schedule;
    use crate::instance::{named_instance, RewardKind};

    #[test]
    fn index_examples() {
        assert_eq!(ucb_index(0.3, 0, 10), 1.0);
        // ln t = 2
        let t = (2.0f64).exp();
        let idx = (0.5 + (3.0 * 2.0 / 12.0f64).sqrt()).min(1.0);
        assert_eq!(idx, 1.0);
        assert_eq!(ucb_index(0.5, 6, t.round() as u64), 1.0);
        // ln t = 4 exactly is not an integer round; check the formula directly
        let v = 0.2 + (3.0 * 4.0 / (2.0 * 96.0f64)).sqrt();
        assert!((v - 0.45).abs() < 1e-12);
        let t = 55u64; // ln 55 ~ 4.007
        let want = 0.2 + (3.0 * (t as f64).ln() / 192.0).sqrt();
        assert!((ucb_index(0.2, 96, t) - want).abs() < 1e-15);
        assert_eq!(ucb_index(0.9, 1, 1), 0.9);
    }

    #[test]
    fn delay_schedule() {
        assert!((c1() - 1.156518).abs() < 1e-6);
        assert_eq!(delay_m_raw(1, 3), 14);
        assert_eq!(delay_m(1, 3), 1);
        assert_eq!(lag_round(1, 3), 0);
        for d in 1..=50u64 {
            let c0 = std::f64::consts::E * c1().powi(2 * d as i32);
            let lhs = (c0.ln() / c1().ln()).ceil() as u64 + 1;
            assert_eq!(lhs, 2 * d + 8, "d_max = {d}");
        }
    }

    #[test]
    fn critical_times() {
        assert_eq!(critical_time(3), 74);
        assert_eq!(critical_time(1), 69);
        assert_eq!(critical_time(10), 90);
        assert_eq!(critical_time(100), 286);
        for d in 1..=100u64 {
            let tc = critical_time(d);
            assert!((2 * d + 67..=3 * d + 71).contains(&tc), "d = {d}, T_c = {tc}");
            assert_eq!(lag_round(tc, d), 1);
            assert_eq!(lag_round(tc - 1, d), 0);
        }
    }

    #[test]
    fn log_is_append_once() {
        let inst = named_instance("gap_instance(2, 0.5)").unwrap();
        let mut log = ExtremePointLog::default();
        let z = solve_lp(&inst, &LpObjective::means(&inst));
        log.insert(3, z.clone()).unwrap();
        assert!(log.insert(3, z).is_err());
        assert!(matches!(log.get(4), Err(CbbError::HistoryGap { round: 4 })));
    }

    #[test]
    fn last_play_lookup() {
        let mut h = PlayHistory::new(1);
        h.push(0, 3);
        h.push(0, 7);
        assert_eq!(h.last_play_before(0, 3), None);
        assert_eq!(h.last_play_before(0, 4), Some(3));
        assert_eq!(h.last_play_before(0, 8), Some(7));
    }

    fn run(inst: &Instance, policy: &mut UcbCbb, seed: u64, horizon: u64) -> Vec<RoundOutcome> {
        let mut nature = Nature::new(seed);
        let mut block = BlockState::new(inst.num_arms());
        let mut coins = stream(seed, Purpose::PolicyCoins(1));
        (0..horizon)
            .map(|_| {
                let d = nature.draw(inst);
                policy.step(inst, &d, &mut block, &mut coins).unwrap()
            })
            .collect()
    }

    #[test]
    fn first_round_uses_all_ones_vertex() {
        let inst = named_instance("integral(0.4)").unwrap();
        let p = UcbCbb::new(&inst);
        assert_eq!(**p.log().get(0).unwrap(), solve_lp(&inst, &LpObjective::ones(3, 3)));
    }

    #[test]
    fn before_critical_time_compq_is_the_fixed_schedule() {
        let inst = named_instance("noninteg_3x3").unwrap();
        let mut p = UcbCbb::new(&inst);
        let tc = p.critical_time();
        run(&inst, &mut p, 5, tc - 1);
        let sched = build_schedule(&inst, p.log().get(0).unwrap(), tc);
        for i in 0..3 {
            for t in 1..tc {
                let q = p.compq(&inst, i, t).unwrap();
                assert!((q - sched.q(i, t)).abs() < 1e-12, "arm {i} t {t}: {q} vs {}", sched.q(i, t));
            }
        }
    }

    #[test]
    fn played_pair_increments_one_count() {
        let inst = named_instance("integral(0.4)").unwrap();
        let mut p = UcbCbb::new(&inst);
        let mut nature = Nature::new(1);
        let mut block = BlockState::new(3);
        let mut coins = stream(1, Purpose::PolicyCoins(1));
        for _ in 0..300 {
            let before = p.state().clone();
            let d = nature.draw(&inst);
            let out = p.step(&inst, &d, &mut block, &mut coins).unwrap();
            for i in 0..3 {
                for j in 0..3 {
                    let want = before.pulls(i, j) + u64::from(out.action == Some(i) && j == d.context);
                    assert_eq!(p.state().pulls(i, j), want);
                }
            }
        }
    }

    #[test]
    fn warm_up_does_not_change_trajectories() {
        let inst = named_instance("noninteg_3x3").unwrap();
        let mut a = UcbCbb::new(&inst);
        let mut b = UcbCbb::new(&inst).without_warm_up();
        assert_eq!(run(&inst, &mut a, 8, 400), run(&inst, &mut b, 8, 400));
    }

    #[test]
    fn runs_are_deterministic_and_cache_is_bounded() {
        let inst = named_instance("integral(0.6)").unwrap();
        let mut a = UcbCbb::new(&inst);
        let mut b = UcbCbb::new(&inst);
        let ra = run(&inst, &mut a, 3, 1500);
        assert_eq!(ra, run(&inst, &mut b, 3, 1500));
        let lag = lag_round(1500, 3);
        assert!(a.cache().min_round().unwrap() >= lag);
        assert!(a.cache().len() <= 3 * (delay_m(1500, 3) as usize + 2));
        assert!(a.lag_checks().max_lag_step <= 1);
        assert!(a.lag_checks().rounds_checked > 0);
    }

    #[test]
    fn empirical_means_are_exact_averages() {
        let inst = named_instance("integral(0.6)").unwrap();
        let mut p = UcbCbb::new(&inst);
        let outs = run(&inst, &mut p, 12, 800);
        let mut sums = vec![vec![0.0; 3]; 3];
        let mut counts = vec![vec![0u64; 3]; 3];
        for o in &outs {
            if let Some(i) = o.action {
                sums[i][o.context] += o.reward;
                counts[i][o.context] += 1;
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(p.state().pulls(i, j), counts[i][j]);
                if counts[i][j] > 0 {
                    assert_eq!(p.state().emp_mean(i, j), sums[i][j] / counts[i][j] as f64);
                }
                let idx = p.state().index(i, j, 801);
                assert!((0.0..=1.0).contains(&idx));
            }
        }
    }

    #[test]
    fn counters_track_support_every_round() {
        let inst = named_instance("gap_instance(2, 0.5)").unwrap();
        let mut p = UcbCbb::new(&inst);
        run(&inst, &mut p, 2, 50);
        let total: u64 = p.state().counters().values().sum();
        // every vertex here has two nonzero pairs of rate 1/2 (group 2)
        assert_eq!(total, 100);
        assert!(p.state().counters().keys().all(|&(_, _, l)| l == 2));
    }

    #[test]
    fn unit_delays_never_skip() {
        let inst = Instance::new(vec![1, 1], vec![0.5, 0.5], vec![vec![0.9, 0.2], vec![0.1, 0.8]], RewardKind::Bernoulli)
            .unwrap();
        let mut p = UcbCbb::new(&inst);
        for o in run(&inst, &mut p, 6, 300) {
            assert!(matches!(o.event, Event::Play | Event::LpSkip));
        }
    }

    #[test]
    fn diagnostic_ignores_the_first_round() {
        let inst = named_instance("noninteg_10x10(0)").unwrap();
        let mut p = UcbCbb::new(&inst);
        run(&inst, &mut p, 0, 1);
        assert_eq!(p.diagnostic(), CounterDiagnostic::default());
        let mut p = UcbCbb::new(&inst);
        run(&inst, &mut p, 0, 1000);
        assert!(!p.diagnostic().flagged(), "{:?}", p.diagnostic());
    }
}
