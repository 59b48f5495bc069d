use cbb_core::environment::{stream, BlockState, Event, Nature, Purpose};
use cbb_core::fi_cbb::FiCbb;
use cbb_core::harness::{simulate, PolicyKind};
use cbb_core::instance::play_factor;
use cbb_core::ucb_cbb::{lag_round, UcbCbb};
use cbb_core::{named_instance, Instance, RewardKind};
use rayon::prelude::*;

/// Runs UCB-CBB on `seed` through round `t - 1`, forks at the start of round
/// `lag(t)` and checks `compq(arm, t)` against the empirical availability of
/// `arm` at `t` over `runs` independent continuations.
fn compq_matches_continuations(inst: &Instance, arm: usize, t: u64, seed: u64, runs: u64) {
    let s = lag_round(t, inst.d_max());
    assert!(s >= 2, "round {t} is before the critical time");
    let mut policy = UcbCbb::new(inst);
    let mut nature = Nature::new(seed);
    let mut block = BlockState::new(inst.num_arms());
    let mut coins = stream(seed, Purpose::PolicyCoins(1));
    for _ in 1..s {
        let draw = nature.draw(inst);
        policy.step(inst, &draw, &mut block, &mut coins).unwrap();
    }
    let frozen = (policy.clone(), block.clone());

    for _ in s..t {
        let draw = nature.draw(inst);
        policy.step(inst, &draw, &mut block, &mut coins).unwrap();
    }
    let q = policy.compq(inst, arm, t).unwrap();

    let hits: u64 = (0..runs)
        .into_par_iter()
        .map(|r| {
            let (mut p, mut b) = frozen.clone();
            let cseed = 1_000_000 + r;
            let mut nat = Nature::starting_at(cseed, s);
            let mut c = stream(cseed, Purpose::PolicyCoins(1));
            for _ in s..t {
                let draw = nat.draw(inst);
                p.step(inst, &draw, &mut b, &mut c).unwrap();
            }
            b.is_available(arm) as u64
        })
        .sum();
    let p_hat = hits as f64 / runs as f64;
    let sd = (q * (1.0 - q) / runs as f64).sqrt().max(1e-4);
    let z = (p_hat - q).abs() / sd;
    assert!(z < 5.0, "compq {q} vs empirical {p_hat} (z = {z:.2})");
}

#[test]
fn compq_single_arm_delay_two() {
    let inst = Instance::new(vec![2], vec![1.0], vec![vec![0.5]], RewardKind::Bernoulli).unwrap();
    compq_matches_continuations(&inst, 0, 150, 3, 15_000);
}

#[test]
fn compq_two_arms_with_close_means() {
    let inst = Instance::new(vec![1, 2], vec![1.0], vec![vec![0.5], vec![0.55]], RewardKind::Bernoulli).unwrap();
    compq_matches_continuations(&inst, 1, 200, 11, 15_000);
}

#[test]
fn compq_three_arms_two_contexts() {
    let inst = Instance::new(
        vec![2, 3, 1],
        vec![0.6, 0.4],
        vec![vec![0.9, 0.2], vec![0.3, 0.8], vec![0.4, 0.4]],
        RewardKind::Bernoulli,
    )
    .unwrap();
    compq_matches_continuations(&inst, 1, 180, 5, 15_000);
}

#[test]
fn fi_play_probability_is_scaled_lp_rate() {
    let inst = named_instance("noninteg_3x3").unwrap();
    let fi = FiCbb::new(&inst);
    let z = fi.vertex().clone();
    let runs = 20_000u64;
    let horizon = 40u64;
    let k = inst.num_arms();
    let m = inst.num_contexts();
    let counts: Vec<u64> = (0..runs)
        .into_par_iter()
        .map(|seed| {
            let mut c = vec![0u64; k * m];
            simulate(&inst, PolicyKind::FiCbb, seed, horizon, |o, _| {
                if o.t == horizon {
                    if let Some(i) = o.action {
                        c[i * m + o.context] += 1;
                    }
                }
            })
            .unwrap();
            c
        })
        .reduce(|| vec![0; k * m], |a, b| a.iter().zip(&b).map(|(x, y)| x + y).collect());
    for i in 0..k {
        for j in 0..m {
            let p = play_factor(inst.delay(i)) * z.rate(i, j);
            let p_hat = counts[i * m + j] as f64 / runs as f64;
            let sd = (p * (1.0 - p) / runs as f64).sqrt().max(1e-4);
            assert!((p_hat - p).abs() < 5.0 * sd, "arm {i} context {j}: {p_hat} vs {p}");
        }
    }
}

#[test]
fn greedy_does_not_block_on_integral_instances() {
    for name in ["integral(0.8)", "integral(0.6)"] {
        let inst = named_instance(name).unwrap();
        let mut blocks = 0u64;
        simulate(&inst, PolicyKind::UcbGreedy, 9, 3_000, |o, _| {
            blocks += (o.event == Event::Block) as u64;
            assert!(o.event != Event::Skip && o.event != Event::LpSkip);
        })
        .unwrap();
        assert!(blocks < 30, "{name}: {blocks} blocks");
    }
}

#[test]
fn ucb_cbb_blocking_settles_near_lp_prediction() {
    let inst = named_instance("integral(0.8)").unwrap();
    let mut blocks = 0u64;
    let horizon = 6_000;
    simulate(&inst, PolicyKind::UcbCbb, 1, horizon, |o, _| blocks += (o.event == Event::Block) as u64).unwrap();
    let rate = blocks as f64 / horizon as f64;
    assert!((0.3..0.5).contains(&rate), "block rate {rate}");
}
