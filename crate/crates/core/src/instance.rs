//! Problem instances: arms with blocking delays, a context distribution and
//! a matrix of mean rewards.
//!
//! An [`Instance`] is immutable once validated. The canonical instances used
//! by the experiments are built through [`NamedInstance`].

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CbbError, Result};

const MASS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RewardKind {
    #[default]
    Bernoulli,
    Deterministic,
}

/// Unvalidated instance data, as read from JSON.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawInstance {
    pub k: usize,
    pub m: usize,
    pub delays: Vec<u64>,
    pub context_probs: Vec<f64>,
    /// Row-major, arms x contexts.
    pub means: Vec<Vec<f64>>,
    #[serde(default)]
    pub reward_kind: RewardKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawInstance", into = "RawInstance")]
pub struct Instance {
    delays: Vec<u64>,
    context_probs: Vec<f64>,
    means: Vec<Vec<f64>>,
    reward_kind: RewardKind,
}

impl TryFrom<RawInstance> for Instance {
    type Error = CbbError;

    fn try_from(raw: RawInstance) -> Result<Self> {
        validate(raw)
    }
}

impl From<Instance> for RawInstance {
    fn from(inst: Instance) -> Self {
        RawInstance {
            k: inst.num_arms(),
            m: inst.num_contexts(),
            delays: inst.delays,
            context_probs: inst.context_probs,
            means: inst.means,
            reward_kind: inst.reward_kind,
        }
    }
}

/// Checks dimensions and every instance invariant.
pub fn validate(raw: RawInstance) -> Result<Instance> {
    let RawInstance { k, m, delays, context_probs, means, reward_kind } = raw;
    if k == 0 || m == 0 {
        return Err(CbbError::Dimension(format!("k = {k} and m = {m} must both be positive")));
    }
    if delays.len() != k {
        return Err(CbbError::Dimension(format!("{} delays for {k} arms", delays.len())));
    }
    if context_probs.len() != m {
        return Err(CbbError::Dimension(format!(
            "{} context probabilities for {m} contexts",
            context_probs.len()
        )));
    }
    if means.len() != k || means.iter().any(|row| row.len() != m) {
        return Err(CbbError::Dimension(format!("means must be a {k} x {m} matrix")));
    }
    for (arm, &delay) in delays.iter().enumerate() {
        if delay < 1 {
            return Err(CbbError::Delay { arm, delay });
        }
    }
    for (j, &f) in context_probs.iter().enumerate() {
        if !(0.0..=1.0).contains(&f) {
            return Err(CbbError::Range { what: format!("f[{j}]"), value: f });
        }
    }
    for (i, row) in means.iter().enumerate() {
        for (j, &mu) in row.iter().enumerate() {
            if !(0.0..=1.0).contains(&mu) {
                return Err(CbbError::Range { what: format!("mu[{i}][{j}]"), value: mu });
            }
        }
    }
    let sum: f64 = context_probs.iter().sum();
    if (sum - 1.0).abs() > MASS_TOL {
        return Err(CbbError::ProbabilityMass { sum });
    }
    Ok(Instance { delays, context_probs, means, reward_kind })
}

impl Instance {
    pub fn new(
        delays: Vec<u64>,
        context_probs: Vec<f64>,
        means: Vec<Vec<f64>>,
        reward_kind: RewardKind,
    ) -> Result<Self> {
        validate(RawInstance {
            k: delays.len(),
            m: context_probs.len(),
            delays,
            context_probs,
            means,
            reward_kind,
        })
    }

    pub fn num_arms(&self) -> usize {
        self.delays.len()
    }

    pub fn num_contexts(&self) -> usize {
        self.context_probs.len()
    }

    pub fn delays(&self) -> &[u64] {
        &self.delays
    }

    pub fn delay(&self, arm: usize) -> u64 {
        self.delays[arm]
    }

    pub fn d_max(&self) -> u64 {
        self.delays.iter().copied().max().unwrap_or(1)
    }

    pub fn context_probs(&self) -> &[f64] {
        &self.context_probs
    }

    pub fn means(&self) -> &[Vec<f64>] {
        &self.means
    }

    pub fn mean(&self, arm: usize, context: usize) -> f64 {
        self.means[arm][context]
    }

    pub fn reward_kind(&self) -> RewardKind {
        self.reward_kind
    }

    /// Competitive factor `d_max / (2 d_max - 1)`.
    pub fn alpha(&self) -> f64 {
        play_factor(self.d_max())
    }

    /// Copy of the instance with a different mean matrix.
    pub fn with_means(&self, means: Vec<Vec<f64>>) -> Result<Self> {
        Instance::new(self.delays.clone(), self.context_probs.clone(), means, self.reward_kind)
    }

    /// Uniformly random instance with delays in `1..=max_delay`, context
    /// probabilities drawn from the flat Dirichlet and means in `[0, 1]`.
    pub fn random(k: usize, m: usize, max_delay: u64, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let delays = (0..k).map(|_| rng.gen_range(1..=max_delay.max(1))).collect();
        let context_probs = simplex_point(m, &mut rng);
        let means = (0..k).map(|_| (0..m).map(|_| rng.gen::<f64>()).collect()).collect();
        Instance::new(delays, context_probs, means, RewardKind::Bernoulli)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// `d / (2d - 1)`: the per-arm target play rate multiplier.
pub fn play_factor(delay: u64) -> f64 {
    let d = delay as f64;
    d / (2.0 * d - 1.0)
}

/// Flat-Dirichlet draw; the last coordinate absorbs rounding so the mass is 1.
fn simplex_point(m: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let raw: Vec<f64> = (0..m).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let total: f64 = raw.iter().sum();
    let mut f: Vec<f64> = raw.iter().map(|x| x / total).collect();
    let head: f64 = f[..m - 1].iter().sum();
    f[m - 1] = (1.0 - head).max(0.0);
    f
}

/// Canonical instances from the experiments and the lower-bound constructions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NamedInstance {
    /// 3 arms of delay 3, 3 equiprobable contexts, diagonal 0.9, off-diagonal 0.9 - gap.
    Integral { gap: f64 },
    /// Delays {2, 3, 6}, equiprobable contexts, diagonal 0.9, off-diagonal 0.3.
    NonInteg3x3,
    /// All delays 6, random context law, diagonal in [0.5, 0.9], off-diagonal in [0, 0.3].
    NonInteg3x3D6 { seed: u64 },
    /// 10 arms with delays in {8, 9}, random context law, diagonal 0.9, off-diagonal in [0, 0.3].
    NonInteg10x10 { seed: u64 },
    /// k arms of delay k, k equiprobable contexts, `mu[i][i] = delta`, zero elsewhere.
    GapInstance { k: usize, delta: f64 },
    /// Single blocking arm of delay d facing a rare high-value context of
    /// probability eps, plus one zero-reward dummy arm. Rewards are constant.
    Hardness { d: u64, eps: f64, r: f64 },
}

impl NamedInstance {
    pub fn build(&self) -> Result<Instance> {
        match *self {
            NamedInstance::Integral { gap } => {
                if !(gap > 0.0 && gap <= 0.9) {
                    return Err(CbbError::Param(format!("gap = {gap} must lie in (0, 0.9]")));
                }
                let means = matrix(3, 3, |i, j| if i == j { 0.9 } else { 0.9 - gap });
                Instance::new(vec![3; 3], vec![1.0 / 3.0; 3], means, RewardKind::Bernoulli)
            }
            NamedInstance::NonInteg3x3 => {
                let means = matrix(3, 3, |i, j| if i == j { 0.9 } else { 0.3 });
                Instance::new(vec![2, 3, 6], vec![1.0 / 3.0; 3], means, RewardKind::Bernoulli)
            }
            NamedInstance::NonInteg3x3D6 { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let f = simplex_point(3, &mut rng);
                let means = matrix(3, 3, |i, j| {
                    if i == j {
                        rng.gen_range(0.5..=0.9)
                    } else {
                        rng.gen_range(0.0..=0.3)
                    }
                });
                Instance::new(vec![6; 3], f, means, RewardKind::Bernoulli)
            }
            NamedInstance::NonInteg10x10 { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let delays = (0..10).map(|_| if rng.gen::<bool>() { 8 } else { 9 }).collect();
                let f = simplex_point(10, &mut rng);
                let means = matrix(10, 10, |i, j| if i == j { 0.9 } else { rng.gen_range(0.0..=0.3) });
                Instance::new(delays, f, means, RewardKind::Bernoulli)
            }
            NamedInstance::GapInstance { k, delta } => {
                if k == 0 {
                    return Err(CbbError::Param("gap_instance needs k >= 1".into()));
                }
                if !(delta > 0.0 && delta <= 1.0) {
                    return Err(CbbError::Param(format!("delta = {delta} must lie in (0, 1]")));
                }
                let means = matrix(k, k, |i, j| if i == j { delta } else { 0.0 });
                Instance::new(vec![k as u64; k], vec![1.0 / k as f64; k], means, RewardKind::Bernoulli)
            }
            NamedInstance::Hardness { d, eps, r } => {
                if d < 2 {
                    return Err(CbbError::Param(format!("hardness needs d >= 2, got {d}")));
                }
                if !(eps > 0.0 && eps < 1.0) {
                    return Err(CbbError::Param(format!("eps = {eps} must lie in (0, 1)")));
                }
                if !(r > 0.0 && r.is_finite()) {
                    return Err(CbbError::Param(format!("R = {r} must be positive")));
                }
                let scale = 1.0 + r / eps;
                let means = vec![vec![(r / eps) / scale, 1.0 / scale], vec![0.0, 0.0]];
                Instance::new(vec![d, 1], vec![eps, 1.0 - eps], means, RewardKind::Deterministic)
            }
        }
    }

    /// Returns a copy with one numeric parameter replaced (used by sweeps).
    pub fn with_param(&self, name: &str, value: f64) -> Result<Self> {
        let as_int = |v: f64| -> Result<u64> {
            if v >= 0.0 && v.fract() == 0.0 {
                Ok(v as u64)
            } else {
                Err(CbbError::Param(format!("{name} = {v} must be a non-negative integer")))
            }
        };
        let mut out = *self;
        match (&mut out, name) {
            (NamedInstance::Integral { gap }, "gap") => *gap = value,
            (NamedInstance::NonInteg3x3D6 { seed }, "seed") => *seed = as_int(value)?,
            (NamedInstance::NonInteg10x10 { seed }, "seed") => *seed = as_int(value)?,
            (NamedInstance::GapInstance { k, .. }, "k") => *k = as_int(value)? as usize,
            (NamedInstance::GapInstance { delta, .. }, "delta") => *delta = value,
            (NamedInstance::Hardness { d, .. }, "d") => *d = as_int(value)?,
            (NamedInstance::Hardness { eps, .. }, "eps") => *eps = value,
            (NamedInstance::Hardness { r, .. }, "r" | "R") => *r = value,
            _ => return Err(CbbError::Param(format!("`{self}` has no parameter `{name}`"))),
        }
        Ok(out)
    }
}

fn matrix(k: usize, m: usize, mut entry: impl FnMut(usize, usize) -> f64) -> Vec<Vec<f64>> {
    (0..k).map(|i| (0..m).map(|j| entry(i, j)).collect()).collect()
}

impl fmt::Display for NamedInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NamedInstance::Integral { gap } => write!(f, "integral({gap})"),
            NamedInstance::NonInteg3x3 => write!(f, "noninteg_3x3"),
            NamedInstance::NonInteg3x3D6 { seed } => write!(f, "noninteg_3x3_d6({seed})"),
            NamedInstance::NonInteg10x10 { seed } => write!(f, "noninteg_10x10({seed})"),
            NamedInstance::GapInstance { k, delta } => write!(f, "gap_instance({k},{delta})"),
            NamedInstance::Hardness { d, eps, r } => write!(f, "hardness({d},{eps},{r})"),
        }
    }
}

impl FromStr for NamedInstance {
    type Err = CbbError;

    /// Parses `name` or `name(arg, ...)`, e.g. `integral(0.4)` or `gap_instance(3, 0.9)`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, args) = match s.find('(') {
            Some(open) => {
                let close = s
                    .strip_suffix(')')
                    .ok_or_else(|| CbbError::Param(format!("missing `)` in `{s}`")))?;
                let inner = &close[open + 1..];
                let args = inner
                    .split(',')
                    .map(str::trim)
                    .filter(|a| !a.is_empty())
                    .map(|a| a.parse::<f64>().map_err(|_| CbbError::Param(format!("bad argument `{a}` in `{s}`"))))
                    .collect::<Result<Vec<_>>>()?;
                (&s[..open], args)
            }
            None => (s, Vec::new()),
        };
        let want = |n: usize| -> Result<()> {
            if args.len() == n {
                Ok(())
            } else {
                Err(CbbError::Param(format!("`{name}` takes {n} argument(s), got {}", args.len())))
            }
        };
        let int = |v: f64| -> Result<u64> {
            if v >= 0.0 && v.fract() == 0.0 {
                Ok(v as u64)
            } else {
                Err(CbbError::Param(format!("`{v}` must be a non-negative integer")))
            }
        };
        match name.trim() {
            "integral" => {
                want(1)?;
                Ok(NamedInstance::Integral { gap: args[0] })
            }
            "noninteg_3x3" => {
                want(0)?;
                Ok(NamedInstance::NonInteg3x3)
            }
            "noninteg_3x3_d6" => {
                want(1)?;
                Ok(NamedInstance::NonInteg3x3D6 { seed: int(args[0])? })
            }
            "noninteg_10x10" => {
                want(1)?;
                Ok(NamedInstance::NonInteg10x10 { seed: int(args[0])? })
            }
            "gap_instance" => {
                want(2)?;
                Ok(NamedInstance::GapInstance { k: int(args[0])? as usize, delta: args[1] })
            }
            "hardness" => {
                want(3)?;
                Ok(NamedInstance::Hardness { d: int(args[0])?, eps: args[1], r: args[2] })
            }
            other => Err(CbbError::UnknownName(other.to_string())),
        }
    }
}

impl Serialize for NamedInstance {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for NamedInstance {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Builds a named instance from its textual form.
pub fn named_instance(name: &str) -> Result<Instance> {
    name.parse::<NamedInstance>()?.build()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(delays: Vec<u64>, f: Vec<f64>, means: Vec<Vec<f64>>) -> RawInstance {
        RawInstance {
            k: delays.len(),
            m: f.len(),
            delays,
            context_probs: f,
            means,
            reward_kind: RewardKind::Bernoulli,
        }
    }

    #[test]
    fn minimal_instance_is_valid() {
        let inst = validate(raw(vec![1], vec![1.0], vec![vec![0.5]])).unwrap();
        assert_eq!(inst.num_arms(), 1);
        assert_eq!(inst.d_max(), 1);
    }

    #[test]
    fn rejects_excess_mass() {
        let err = validate(raw(vec![1], vec![0.6, 0.5], vec![vec![0.5, 0.5]])).unwrap_err();
        assert!(matches!(err, CbbError::ProbabilityMass { .. }));
    }

    #[test]
    fn rejects_bad_ranges_and_delays() {
        let err = validate(raw(vec![1], vec![1.0], vec![vec![1.5]])).unwrap_err();
        assert!(matches!(err, CbbError::Range { .. }));
        let err = validate(raw(vec![0], vec![1.0], vec![vec![0.5]])).unwrap_err();
        assert!(matches!(err, CbbError::Delay { arm: 0, delay: 0 }));
        let err = validate(raw(vec![1], vec![1.2, -0.2], vec![vec![0.5, 0.5]])).unwrap_err();
        assert!(matches!(err, CbbError::Range { .. }));
        let err = validate(raw(vec![1, 2], vec![1.0], vec![vec![0.5]])).unwrap_err();
        assert!(matches!(err, CbbError::Dimension(_)));
    }

    #[test]
    fn zero_probability_contexts_are_allowed() {
        assert!(validate(raw(vec![2], vec![0.0, 1.0], vec![vec![0.1, 0.2]])).is_ok());
    }

    #[test]
    fn paper_integral_instance() {
        let inst = named_instance("integral(0.4)").unwrap();
        assert_eq!(inst.delays(), &[3, 3, 3]);
        assert!((inst.mean(0, 1) - 0.5).abs() < 1e-12);
        assert!((inst.mean(2, 2) - 0.9).abs() < 1e-12);
        assert!((inst.alpha() - 0.6).abs() < 1e-15);
        assert!(named_instance("integral(0.95)").is_err());
        assert!(named_instance("integral(0)").is_err());
    }

    #[test]
    fn gap_instance_layout() {
        let inst = named_instance("gap_instance(3, 0.9)").unwrap();
        assert_eq!(inst.delays(), &[3, 3, 3]);
        for i in 0..3 {
            assert!((inst.context_probs()[i] - 1.0 / 3.0).abs() < 1e-15);
            for j in 0..3 {
                let want = if i == j { 0.9 } else { 0.0 };
                assert_eq!(inst.mean(i, j), want);
            }
        }
    }

    #[test]
    fn hardness_rescaling() {
        let inst = named_instance("hardness(3, 0.1, 0.7)").unwrap();
        assert_eq!(inst.context_probs(), &[0.1, 0.9]);
        assert!((inst.mean(0, 0) - 0.875).abs() < 1e-12);
        assert!((inst.mean(0, 1) - 0.125).abs() < 1e-12);
        assert_eq!(inst.mean(1, 0), 0.0);
        assert_eq!(inst.reward_kind(), RewardKind::Deterministic);
        assert_eq!(inst.d_max(), 3);
    }

    #[test]
    fn random_named_instances_are_reproducible() {
        let a = named_instance("noninteg_3x3_d6(5)").unwrap();
        let b = named_instance("noninteg_3x3_d6(5)").unwrap();
        let c = named_instance("noninteg_3x3_d6(6)").unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        for i in 0..3 {
            assert!((0.5..=0.9).contains(&a.mean(i, i)));
        }
        let big = named_instance("noninteg_10x10(1)").unwrap();
        assert!(big.delays().iter().all(|&d| d == 8 || d == 9));
    }

    #[test]
    fn unknown_names_and_bad_arity() {
        assert!(matches!(named_instance("banana"), Err(CbbError::UnknownName(_))));
        assert!(matches!(named_instance("integral"), Err(CbbError::Param(_))));
        assert!(matches!(named_instance("integral(0.4"), Err(CbbError::Param(_))));
    }

    #[test]
    fn display_parses_back() {
        for name in ["integral(0.4)", "noninteg_3x3", "noninteg_3x3_d6(3)", "gap_instance(4,0.5)", "hardness(3,0.1,0.7)"] {
            let n: NamedInstance = name.parse().unwrap();
            assert_eq!(n.to_string().parse::<NamedInstance>().unwrap(), n);
        }
    }

    #[test]
    fn with_param_replaces_sweep_parameter() {
        let n: NamedInstance = "integral(0.4)".parse().unwrap();
        assert_eq!(n.with_param("gap", 0.8).unwrap(), NamedInstance::Integral { gap: 0.8 });
        assert!(n.with_param("seed", 1.0).is_err());
    }

    #[test]
    fn json_roundtrip_and_schema() {
        let inst = named_instance("noninteg_3x3").unwrap();
        let json = inst.to_json().unwrap();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        for key in ["k", "m", "delays", "context_probs", "means", "reward_kind"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert_eq!(Instance::from_json(&json).unwrap(), inst);
        let bad = json.replace("\"k\": 3", "\"k\": 4");
        assert!(Instance::from_json(&bad).is_err());
    }
}
