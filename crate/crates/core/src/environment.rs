//! Nature: contexts, rewards and the blocking state of the arms.
//!
//! Randomness is split by purpose. Contexts and rewards each consume exactly
//! one uniform per round from their own ChaCha stream, so the draw of round
//! `t` sits at a fixed position of the stream and every policy run on the
//! same seed faces the same contexts and reward coins.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CbbError, Result};
use crate::instance::{Instance, RewardKind};

/// Which stream of a seed a generator belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    Contexts,
    Rewards,
    /// Sampling and non-skipping coins of one policy.
    PolicyCoins(u32),
}

impl Purpose {
    fn stream_id(self) -> u64 {
        match self {
            Purpose::Contexts => 1,
            Purpose::Rewards => 2,
            Purpose::PolicyCoins(p) => 16 + p as u64,
        }
    }
}

/// Generator for `(seed, purpose)`.
pub fn stream(seed: u64, purpose: Purpose) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(purpose.stream_id());
    rng
}

/// Generator for `(seed, purpose)` positioned at the draw of round `t` (1-based)
/// of a one-uniform-per-round stream.
pub fn stream_at_round(seed: u64, purpose: Purpose, t: u64) -> ChaCha8Rng {
    let mut rng = stream(seed, purpose);
    // an f64 takes two 32-bit words
    rng.set_word_pos(2 * (t.max(1) as u128 - 1));
    rng
}

/// Index `j` such that `u` falls in the `j`-th cell of the cumulative distribution of `probs`.
pub fn context_from_uniform(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (j, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return j;
        }
    }
    // rounding left u above the last partial sum
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

pub fn sample_context<R: Rng + ?Sized>(inst: &Instance, rng: &mut R) -> usize {
    context_from_uniform(inst.context_probs(), rng.gen::<f64>())
}

pub fn reward_from_uniform(inst: &Instance, arm: usize, context: usize, u: f64) -> f64 {
    let mu = inst.mean(arm, context);
    match inst.reward_kind() {
        RewardKind::Bernoulli => {
            if u < mu {
                1.0
            } else {
                0.0
            }
        }
        RewardKind::Deterministic => mu,
    }
}

pub fn sample_reward<R: Rng + ?Sized>(inst: &Instance, arm: usize, context: usize, rng: &mut R) -> f64 {
    reward_from_uniform(inst, arm, context, rng.gen::<f64>())
}

/// What nature draws for one round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundDraw {
    pub t: u64,
    pub context: usize,
    /// Coin that decides the reward of whichever arm is played this round.
    pub reward_u: f64,
}

/// The context and reward streams of one seed.
#[derive(Debug, Clone)]
pub struct Nature {
    contexts: ChaCha8Rng,
    rewards: ChaCha8Rng,
    t: u64,
}

impl Nature {
    pub fn new(seed: u64) -> Self {
        Nature { contexts: stream(seed, Purpose::Contexts), rewards: stream(seed, Purpose::Rewards), t: 0 }
    }

    /// Nature positioned so that the next draw is round `t`.
    pub fn starting_at(seed: u64, t: u64) -> Self {
        Nature {
            contexts: stream_at_round(seed, Purpose::Contexts, t),
            rewards: stream_at_round(seed, Purpose::Rewards, t),
            t: t.max(1) - 1,
        }
    }

    pub fn draw(&mut self, inst: &Instance) -> RoundDraw {
        self.t += 1;
        let context = sample_context(inst, &mut self.contexts);
        let reward_u = self.rewards.gen::<f64>();
        RoundDraw { t: self.t, context, reward_u }
    }
}

/// Rounds until each arm is available again; 0 means available.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockState {
    remaining: Vec<u64>,
    round: u64,
}

impl BlockState {
    /// All arms available at round 1.
    pub fn new(k: usize) -> Self {
        BlockState { remaining: vec![0; k], round: 1 }
    }

    pub fn remaining(&self) -> &[u64] {
        &self.remaining
    }

    /// The round this state describes the start of.
    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn is_available(&self, arm: usize) -> bool {
        self.remaining[arm] == 0
    }

    /// Moves to the next round after `action` (an arm or nothing) was taken.
    pub fn advance(&mut self, inst: &Instance, action: Option<usize>) -> Result<()> {
        if let Some(i) = action {
            if self.remaining[i] != 0 {
                return Err(CbbError::BlockedPlay { arm: i, t: self.round });
            }
        }
        for r in &mut self.remaining {
            *r = r.saturating_sub(1);
        }
        if let Some(i) = action {
            self.remaining[i] = inst.delay(i) - 1;
        }
        self.round += 1;
        Ok(())
    }
}

pub fn apply_action(state: &BlockState, inst: &Instance, action: Option<usize>) -> Result<BlockState> {
    let mut next = state.clone();
    next.advance(inst, action)?;
    Ok(next)
}

/// How a round ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Event {
    Play,
    /// No arm was sampled from the LP marginal.
    LpSkip,
    /// An available arm was sampled but deliberately not played.
    Skip,
    /// The sampled arm was unavailable.
    Block,
}

impl Event {
    pub const ALL: [Event; 4] = [Event::Play, Event::LpSkip, Event::Skip, Event::Block];

    pub fn index(self) -> usize {
        match self {
            Event::Play => 0,
            Event::LpSkip => 1,
            Event::Skip => 2,
            Event::Block => 3,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Event::Play => "play",
            Event::LpSkip => "lp_skip",
            Event::Skip => "skip",
            Event::Block => "block",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundOutcome {
    pub t: u64,
    pub context: usize,
    pub sampled_arm: Option<usize>,
    pub action: Option<usize>,
    pub event: Event,
    pub reward: f64,
}

impl RoundOutcome {
    /// Finishes a round: plays `arm` if `play` is set, collects its reward and
    /// advances the blocking state.
    pub fn resolve(
        inst: &Instance,
        draw: &RoundDraw,
        block: &mut BlockState,
        sampled_arm: Option<usize>,
        event: Event,
    ) -> Result<Self> {
        let action = if event == Event::Play { sampled_arm } else { None };
        let reward = match action {
            Some(i) => reward_from_uniform(inst, i, draw.context, draw.reward_u),
            None => 0.0,
        };
        block.advance(inst, action)?;
        Ok(RoundOutcome { t: draw.t, context: draw.context, sampled_arm, action, event, reward })
    }
}
