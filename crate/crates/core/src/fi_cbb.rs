//! Full-information policy: the means are known, so the optimal vertex `Z*`
//! is fixed and the a-priori availability `q_{i,t}` of every arm can be
//! computed in advance.
//!
//! Per arm, with `s = sum_j z*_ij`:
//!
//! ```text
//! q_1 = 1
//! beta_t = min(1, (d / (2d - 1)) / q_t)
//! q_{t+1} = q_t (1 - beta_t s) + [t >= d] q_{t-d+1} beta_{t-d+1} s
//! ```

use std::io::Write;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::environment::{BlockState, Event, RoundDraw, RoundOutcome};
use crate::error::Result;
use crate::instance::{play_factor, Instance};
use crate::lp::{solve_lp, ExtremePoint, LpObjective};

/// Lower clamp on availability probabilities.
pub const Q_FLOOR: f64 = 1e-15;
const BLOCK: usize = 1024;

/// `q_{i,t}` and `beta_{i,t}` for `t = 1..=horizon`, stored 0-based in `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct AvailabilitySchedule {
    q: Vec<Vec<f64>>,
    beta: Vec<Vec<f64>>,
    delays: Vec<u64>,
    rates: Vec<f64>,
}

/// `beta = min(1, (d / (2d - 1)) / q)`.
pub fn non_skip_probability(delay: u64, q: f64) -> f64 {
    (play_factor(delay) / q).min(1.0)
}

impl AvailabilitySchedule {
    fn empty(inst: &Instance, zstar: &ExtremePoint) -> Self {
        let k = inst.num_arms();
        AvailabilitySchedule {
            q: vec![Vec::new(); k],
            beta: vec![Vec::new(); k],
            delays: inst.delays().to_vec(),
            rates: (0..k).map(|i| zstar.arm_rate(i)).collect(),
        }
    }

    pub fn horizon(&self) -> u64 {
        self.q.first().map_or(0, |r| r.len() as u64)
    }

    /// Extends the recursion so that rounds up to `t` are available.
    pub fn extend_to(&mut self, t: u64) {
        let target = t as usize;
        for i in 0..self.q.len() {
            let d = self.delays[i] as usize;
            let s = self.rates[i];
            let (q, beta) = (&mut self.q[i], &mut self.beta[i]);
            while q.len() < target {
                let next = if q.is_empty() || d == 1 {
                    1.0
                } else {
                    // q.len() = t, computing q_{t+1}
                    let t = q.len();
                    let mut v = q[t - 1] * (1.0 - beta[t - 1] * s);
                    if t >= d {
                        v += q[t - d] * beta[t - d] * s;
                    }
                    v.clamp(Q_FLOOR, 1.0)
                };
                q.push(next);
                beta.push(if d == 1 { 1.0 } else { non_skip_probability(d as u64, next) });
            }
        }
    }

    pub fn q(&self, arm: usize, t: u64) -> f64 {
        self.q[arm][t as usize - 1]
    }

    pub fn beta(&self, arm: usize, t: u64) -> f64 {
        self.beta[arm][t as usize - 1]
    }

    pub fn q_row(&self, arm: usize) -> &[f64] {
        &self.q[arm]
    }

    pub fn beta_row(&self, arm: usize) -> &[f64] {
        &self.beta[arm]
    }

    /// CSV with columns `t, arm, q, beta`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "arm", "q", "beta"])?;
        for t in 1..=self.horizon() {
            for i in 0..self.q.len() {
                w.write_record([t.to_string(), i.to_string(), self.q(i, t).to_string(), self.beta(i, t).to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

pub fn build_schedule(inst: &Instance, zstar: &ExtremePoint, horizon: u64) -> AvailabilitySchedule {
    let mut s = AvailabilitySchedule::empty(inst, zstar);
    s.extend_to(horizon);
    s
}

/// Samples an arm for context `j` from the marginal `z_ij / f_j` with one
/// uniform `u`, arms taken in index order. `None` is the residual mass.
pub fn sample_arm(z: &ExtremePoint, f_j: f64, context: usize, u: f64) -> Option<usize> {
    if f_j <= 0.0 {
        return None;
    }
    let mut acc = 0.0;
    for (i, row) in z.z().iter().enumerate() {
        acc += row[context] / f_j;
        if u < acc {
            return Some(i);
        }
    }
    None
}

/// One round of the policy. Draws one coin for sampling and a second one
/// only when the sampled arm is available.
pub fn step_fi(
    inst: &Instance,
    zstar: &ExtremePoint,
    schedule: &AvailabilitySchedule,
    draw: &RoundDraw,
    block: &mut BlockState,
    coins: &mut ChaCha8Rng,
) -> Result<RoundOutcome> {
    let j = draw.context;
    let u: f64 = coins.gen();
    let sampled = sample_arm(zstar, inst.context_probs()[j], j, u);
    let event = match sampled {
        None => Event::LpSkip,
        Some(i) if !block.is_available(i) => Event::Block,
        Some(i) => {
            let v: f64 = coins.gen();
            if v < schedule.beta(i, draw.t) {
                Event::Play
            } else {
                Event::Skip
            }
        }
    };
    RoundOutcome::resolve(inst, draw, block, sampled, event)
}

/// The policy with its vertex and a lazily grown schedule.
#[derive(Debug, Clone)]
pub struct FiCbb {
    zstar: ExtremePoint,
    schedule: AvailabilitySchedule,
}

impl FiCbb {
    pub fn new(inst: &Instance) -> Self {
        let zstar = solve_lp(inst, &LpObjective::means(inst));
        Self::with_vertex(inst, zstar)
    }

    pub fn with_vertex(inst: &Instance, zstar: ExtremePoint) -> Self {
        let schedule = AvailabilitySchedule::empty(inst, &zstar);
        FiCbb { zstar, schedule }
    }

    pub fn vertex(&self) -> &ExtremePoint {
        &self.zstar
    }

    pub fn schedule(&self) -> &AvailabilitySchedule {
        &self.schedule
    }

    pub fn step(
        &mut self,
        inst: &Instance,
        draw: &RoundDraw,
        block: &mut BlockState,
        coins: &mut ChaCha8Rng,
    ) -> Result<RoundOutcome> {
        if self.schedule.horizon() < draw.t {
            let blocks = draw.t.div_ceil(BLOCK as u64);
            self.schedule.extend_to(blocks * BLOCK as u64);
        }
        step_fi(inst, &self.zstar, &self.schedule, draw, block, coins)
    }
}
