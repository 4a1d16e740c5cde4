//! Linear Q-value approximation, temporal-difference updates, the reward
//! function and epsilon-greedy action ordering.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt::Write as _;
use std::hash::Hash;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::features::{feature_vector, rule_priority, FeatureId, FeatureSet};
use crate::formula::{Sequent, SequentKey};
use crate::graph::LazyGraph;
use crate::kernel::Action;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RewardError {
    #[error("reward needs p >= 1 and T >= 1, got p = {p}, T = {t}")]
    Domain { p: u64, t: u64 },
}

/// `1 / (ln(1 + p) * ln(1 + T))`.
pub fn reward(p: u64, t: u64) -> Result<f64, RewardError> {
    if p < 1 || t < 1 {
        return Err(RewardError::Domain { p, t });
    }
    Ok(1.0 / ((1.0 + p as f64).ln() * (1.0 + t as f64).ln()))
}

/// Linear value function over an arbitrary feature map.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearQ {
    pub bias: f64,
    pub weights: Vec<f64>,
    pub alpha: f64,
    pub gamma: f64,
    pub learn_bias: bool,
}

impl LinearQ {
    pub fn zeros(n: usize, alpha: f64, gamma: f64) -> Self {
        LinearQ {
            bias: 0.0,
            weights: vec![0.0; n],
            alpha,
            gamma,
            learn_bias: true,
        }
    }

    pub fn value(&self, features: &[f64]) -> f64 {
        debug_assert_eq!(features.len(), self.weights.len());
        self.bias + self.weights.iter().zip(features).map(|(w, f)| w * f).sum::<f64>()
    }

    /// `r + gamma * max_a' Q(s', a')`, with the max taken as 0 when there
    /// are no successors.
    pub fn target(&self, reward: f64, next: &[Vec<f64>]) -> f64 {
        let best = next.iter().map(|f| self.value(f)).fold(f64::NEG_INFINITY, f64::max);
        if best.is_finite() {
            reward + self.gamma * best
        } else {
            reward
        }
    }

    pub fn td_error(&self, current: &[f64], reward: f64, next: &[Vec<f64>]) -> f64 {
        self.target(reward, next) - self.value(current)
    }

    /// One gradient step: `w_i += alpha * delta * f_i`.
    pub fn update(&self, current: &[f64], reward: f64, next: &[Vec<f64>]) -> LinearQ {
        let delta = self.td_error(current, reward, next);
        let mut out = self.clone();
        if delta == 0.0 {
            return out;
        }
        let step = self.alpha * delta;
        for (w, f) in out.weights.iter_mut().zip(current) {
            *w += step * f;
        }
        if self.learn_bias {
            out.bias += step;
        }
        out
    }
}

/// `(s_t, a_t, r_t, s_{t+1})`; the successor is given as its candidate
/// actions and is empty at the terminal step.
#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub state: Sequent,
    pub action: Action,
    pub reward: f64,
    pub next: Vec<(Sequent, Action)>,
}

impl Transition {
    pub fn is_terminal(&self) -> bool {
        self.next.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QModel {
    pub q: LinearQ,
    pub enabled: FeatureSet,
}

pub const DEFAULT_ALPHA: f64 = 1e-4;
pub const DEFAULT_GAMMA: f64 = 0.9;

/// Starting weight for each feature: the rule ordering and the filter start
/// as the baseline's ordering; the rest start neutral.
pub fn initial_weight(id: FeatureId) -> f64 {
    match id {
        FeatureId::RuleOrdering | FeatureId::BasicRuleFilter => 1.0,
        _ => 0.0,
    }
}

impl QModel {
    pub fn new(enabled: FeatureSet, alpha: f64, gamma: f64) -> Self {
        let weights = enabled.ids().iter().map(|&id| initial_weight(id)).collect();
        QModel {
            q: LinearQ {
                bias: 0.0,
                weights,
                alpha,
                gamma,
                learn_bias: true,
            },
            enabled,
        }
    }

    pub fn features(&self, s: &Sequent, a: &Action, g: &LazyGraph<'_>) -> Vec<f64> {
        feature_vector(s, a, &self.enabled, g)
    }

    pub fn q_value(&self, s: &Sequent, a: &Action, g: &LazyGraph<'_>) -> f64 {
        self.q.value(&self.features(s, a, g))
    }

    pub fn update(&self, t: &Transition) -> QModel {
        let current = self.features(&t.state, &t.action, &LazyGraph::new(&t.state));
        let mut graphs: Vec<LazyGraph<'_>> = Vec::new();
        let mut next = Vec::with_capacity(t.next.len());
        for (s, a) in &t.next {
            let idx = match graphs.iter().position(|g| g.sequent() == s) {
                Some(i) => i,
                None => {
                    graphs.push(LazyGraph::new(s));
                    graphs.len() - 1
                }
            };
            next.push(self.features(s, a, &graphs[idx]));
        }
        QModel {
            q: self.q.update(&current, t.reward, &next),
            enabled: self.enabled.clone(),
        }
    }

    pub fn max_abs_delta(&self, other: &QModel) -> f64 {
        let b = (self.q.bias - other.q.bias).abs();
        self.q
            .weights
            .iter()
            .zip(&other.q.weights)
            .map(|(a, b)| (a - b).abs())
            .fold(b, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.q.bias.is_finite() && self.q.weights.iter().all(|w| w.is_finite())
    }

    /// Text serialization; weights use the shortest round-trip decimal form.
    pub fn to_text(&self) -> String {
        let mut out = String::from("coreq-model v1\n");
        let _ = writeln!(out, "features: {}", self.enabled);
        let _ = writeln!(out, "alpha: {:?}", self.q.alpha);
        let _ = writeln!(out, "gamma: {:?}", self.q.gamma);
        let _ = writeln!(out, "w0: {:?}", self.q.bias);
        for (i, (id, w)) in self.enabled.ids().iter().zip(&self.q.weights).enumerate() {
            let _ = writeln!(out, "w{} {}: {:?}", i + 1, id.name(), w);
        }
        out
    }

    pub fn from_text(text: &str) -> Result<QModel, ModelFileError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let err = |line: usize, msg: &str| ModelFileError { line, msg: msg.to_string() };
        match lines.next() {
            Some((_, "coreq-model v1")) => {}
            Some((n, _)) => return Err(err(n, "expected header `coreq-model v1`")),
            None => return Err(err(0, "empty model file")),
        }
        let mut field = |name: &str| -> Result<(usize, String), ModelFileError> {
            let (n, l) = lines.next().ok_or_else(|| err(0, &format!("missing `{name}` line")))?;
            let (k, v) = l.split_once(':').ok_or_else(|| err(n, "expected `key: value`"))?;
            if k.trim() != name {
                return Err(err(n, &format!("expected `{name}`, found `{}`", k.trim())));
            }
            Ok((n, v.trim().to_string()))
        };
        let num = |(n, v): (usize, String)| -> Result<f64, ModelFileError> {
            let x: f64 = v.parse().map_err(|_| err(n, &format!("not a number: `{v}`")))?;
            if x.is_finite() {
                Ok(x)
            } else {
                Err(err(n, "value must be finite"))
            }
        };
        let (n, feats) = field("features")?;
        let enabled: FeatureSet = feats.parse().map_err(|e: String| err(n, &e))?;
        let alpha_line = field("alpha")?;
        let alpha_at = alpha_line.0;
        let alpha = num(alpha_line)?;
        if alpha <= 0.0 {
            return Err(err(alpha_at, "alpha must be positive"));
        }
        let gamma_line = field("gamma")?;
        let gamma_at = gamma_line.0;
        let gamma = num(gamma_line)?;
        if !(0.0..=1.0).contains(&gamma) {
            return Err(err(gamma_at, "gamma must lie in [0, 1]"));
        }
        let bias = num(field("w0")?)?;
        let mut weights = Vec::new();
        for (i, id) in enabled.ids().iter().enumerate() {
            weights.push(num(field(&format!("w{} {}", i + 1, id.name()))?)?);
        }
        if let Some((n, _)) = lines.next() {
            return Err(err(n, "unexpected trailing line"));
        }
        Ok(QModel {
            q: LinearQ {
                bias,
                weights,
                alpha,
                gamma,
                learn_bias: true,
            },
            enabled,
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("model file line {line}: {msg}")]
pub struct ModelFileError {
    pub line: usize,
    pub msg: String,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpsilonSchedule {
    pub epsilon: f64,
    pub decay: f64,
    pub step: u64,
}

impl EpsilonSchedule {
    pub fn new(epsilon: f64, decay: f64) -> Self {
        EpsilonSchedule { epsilon, decay, step: 0 }
    }

    pub fn greedy() -> Self {
        EpsilonSchedule::new(0.0, 1.0)
    }

    pub fn decay(self) -> Self {
        EpsilonSchedule {
            epsilon: self.epsilon * self.decay,
            decay: self.decay,
            step: self.step + 1,
        }
    }
}

/// Tie-break order over actions of one state: higher rule priority first,
/// then earlier major premise, then term name.
pub fn canonical_cmp(s: &Sequent, a: &Action, b: &Action) -> Ordering {
    let idx = |x: &Action| x.major.as_ref().and_then(|m| s.premise_index(m));
    rule_priority(b.rule)
        .cmp(&rule_priority(a.rule))
        .then_with(|| a.rule.cmp(&b.rule))
        .then_with(|| idx(a).cmp(&idx(b)))
        .then_with(|| a.term.as_ref().map(|t| t.name()).cmp(&b.term.as_ref().map(|t| t.name())))
}

/// Epsilon-greedy ordering. One coin is drawn per call whatever epsilon is,
/// so the random stream does not depend on the schedule.
pub fn order_actions(
    m: &QModel,
    s: &Sequent,
    actions: Vec<Action>,
    sched: &EpsilonSchedule,
    g: &LazyGraph<'_>,
    rng: &mut ChaCha8Rng,
) -> Vec<Action> {
    let explore = rng.gen::<f64>() < sched.epsilon;
    if explore {
        let mut out = actions;
        out.shuffle(rng);
        return out;
    }
    let mut scored: Vec<(f64, Action)> = actions.into_iter().map(|a| (m.q_value(s, &a, g), a)).collect();
    scored.sort_by(|(qa, a), (qb, b)| qb.total_cmp(qa).then_with(|| canonical_cmp(s, a, b)));
    scored.into_iter().map(|(_, a)| a).collect()
}

/// Explicit table of action values; missing entries read as 0.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct QTable<K: Eq + Hash> {
    entries: HashMap<K, f64>,
}

impl<K: Eq + Hash + Clone> QTable<K> {
    pub fn new() -> Self {
        QTable { entries: HashMap::new() }
    }

    pub fn get(&self, k: &K) -> f64 {
        self.entries.get(k).copied().unwrap_or(0.0)
    }

    pub fn set(&mut self, k: K, v: f64) {
        self.entries.insert(k, v);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&K, &f64)> {
        self.entries.iter()
    }
}

/// Key of a state-action pair for tabular learning.
pub type PairKey = (SequentKey, Action);

pub fn pair_key(s: &Sequent, a: &Action) -> PairKey {
    (s.key(), a.clone())
}

/// `Q(s,a) <- (1 - alpha) Q(s,a) + alpha (r + gamma max_a' Q(s',a'))`.
pub fn tabular_update(q: &QTable<PairKey>, t: &Transition, alpha: f64, gamma: f64) -> QTable<PairKey> {
    let best = t
        .next
        .iter()
        .map(|(s, a)| q.get(&pair_key(s, a)))
        .fold(f64::NEG_INFINITY, f64::max);
    let future = if best.is_finite() { gamma * best } else { 0.0 };
    let key = pair_key(&t.state, &t.action);
    let mut out = q.clone();
    out.set(key.clone(), (1.0 - alpha) * q.get(&key) + alpha * (t.reward + future));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{applicable_actions, RuleId};
    use crate::syntax::parse_sequent;
    use rand::SeedableRng;

    fn seq(s: &str) -> Sequent {
        parse_sequent(s).unwrap()
    }

    #[test]
    fn linear_values() {
        let m = LinearQ::zeros(3, 0.1, 0.9);
        assert_eq!(m.value(&[1.0, 2.0, 3.0]), 0.0);
        let mut m = LinearQ::zeros(1, 0.1, 0.9);
        m.weights[0] = 2.0;
        assert_eq!(m.value(&[0.5]), 1.0);
        let mut m = LinearQ::zeros(2, 0.1, 0.9);
        m.bias = 0.1;
        m.weights = vec![1.0, -1.0];
        assert!((m.value(&[0.5, 0.25]) - 0.35).abs() < 1e-15);
    }

    #[test]
    fn update_examples() {
        let mut m = LinearQ::zeros(1, 0.1, 0.9);
        m.learn_bias = false;
        let after = m.update(&[1.0], 1.0, &[]);
        assert!((after.weights[0] - 0.1).abs() < 1e-15);
        assert_eq!(after.bias, 0.0);

        // zero TD error is a fixed point
        let mut m = LinearQ::zeros(1, 0.5, 0.0);
        m.weights[0] = 2.0;
        assert_eq!(m.update(&[1.0], 2.0, &[]), m);

        let m = LinearQ::zeros(2, 0.0, 0.9);
        assert_eq!(m.update(&[1.0, 1.0], 3.0, &[vec![1.0, 0.0]]), m);
    }

    #[test]
    fn tabular_examples() {
        let s = seq("A(a) |- A(a)");
        let a = Action::intro(RuleId::Hypothesis);
        let t = |r: f64, next: Vec<(Sequent, Action)>| Transition {
            state: s.clone(),
            action: a.clone(),
            reward: r,
            next,
        };
        let q = QTable::new();
        assert_eq!(tabular_update(&q, &t(5.0, vec![]), 0.0, 0.9).get(&pair_key(&s, &a)), 0.0);
        assert_eq!(tabular_update(&q, &t(5.0, vec![]), 1.0, 0.9).get(&pair_key(&s, &a)), 5.0);

        let s2 = seq("B(a) |- B(a)");
        let mut q = QTable::new();
        q.set(pair_key(&s, &a), 1.0);
        q.set(pair_key(&s2, &a), 2.0);
        let out = tabular_update(&q, &t(1.0, vec![(s2.clone(), a.clone())]), 0.5, 0.9);
        assert!((out.get(&pair_key(&s, &a)) - 1.9).abs() < 1e-12);
    }

    #[test]
    fn reward_values() {
        let r = reward(1, 1).unwrap();
        assert!((r - 1.0 / 2f64.ln().powi(2)).abs() < 1e-12);
        assert!((r - 2.0814).abs() < 1e-4);
        assert!(reward(1, 10).unwrap() > reward(1, 20).unwrap());
        assert!(reward(0, 3).is_err());
        assert!(reward(3, 0).is_err());
    }

    #[test]
    fn epsilon_decay() {
        let s = EpsilonSchedule::new(0.5, 0.9).decay();
        assert!((s.epsilon - 0.45).abs() < 1e-15);
        assert_eq!(s.step, 1);
        assert_eq!(EpsilonSchedule::new(0.3, 1.0).decay().epsilon, 0.3);
        let mut s = EpsilonSchedule::new(0.8, 0.5);
        for _ in 0..4 {
            s = s.decay();
        }
        assert!((s.epsilon - 0.05).abs() < 1e-15);
    }

    #[test]
    fn ordering_modes() {
        let s = seq("A(a), A(a) -> B(a), A(a) & C(a) |- B(a) | A(a)");
        let g = LazyGraph::new(&s);
        let actions = applicable_actions(&s);
        let m = QModel::new(FeatureSet::primitive(), 1e-4, 0.9);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let greedy = order_actions(&m, &s, actions.clone(), &EpsilonSchedule::greedy(), &g, &mut rng);
        assert_eq!(greedy[0].rule, RuleId::AndElim);
        assert_eq!(greedy, order_actions(&m, &s, actions.clone(), &EpsilonSchedule::greedy(), &g, &mut rng));
        // equal-valued disjunction introductions keep canonical order
        let n = greedy.len();
        assert_eq!(greedy[n - 2].rule, RuleId::OrIntroL);
        assert_eq!(greedy[n - 1].rule, RuleId::OrIntroR);

        let random = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            order_actions(&m, &s, actions.clone(), &EpsilonSchedule::new(1.0, 1.0), &g, &mut rng)
        };
        assert_eq!(random(9), random(9));
        let mut sorted = random(9);
        sorted.sort();
        let mut expected = actions.clone();
        expected.sort();
        assert_eq!(sorted, expected);
    }

    #[test]
    fn model_file_round_trip() {
        let mut m = QModel::new("A,C".parse().unwrap(), 1e-4, 0.9);
        m.q.bias = -0.125;
        m.q.weights[2] = 1.0 / 3.0;
        let text = m.to_text();
        assert!(text.starts_with("coreq-model v1\nfeatures: A,C\nalpha: 0.0001\ngamma: 0.9\nw0: -0.125\n"));
        assert!(text.contains("w3 atomic_accessibility: 0.3333333333333333\n"));
        assert_eq!(QModel::from_text(&text).unwrap(), m);
        assert!(QModel::from_text("coreq-model v2\n").is_err());
        let bad = text.replace("alpha: 0.0001", "alpha: -1");
        assert_eq!(QModel::from_text(&bad).unwrap_err().line, 3);
    }

    #[test]
    fn model_update_moves_toward_reward() {
        let s = seq("A(a) |- A(a)");
        let a = Action::intro(RuleId::Hypothesis);
        let m = QModel::new(FeatureSet::primitive(), 0.1, 0.9);
        let before = m.q_value(&s, &a, &LazyGraph::new(&s));
        let t = Transition {
            state: s.clone(),
            action: a.clone(),
            reward: 10.0,
            next: vec![],
        };
        let after = m.update(&t);
        assert!(after.q_value(&s, &a, &LazyGraph::new(&s)) > before);
        assert!(after.max_abs_delta(&m) > 0.0);
    }
}
