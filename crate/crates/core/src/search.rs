//! Depth-first backward chaining with pluggable action ordering, plus the
//! training and cross-validation loops for the learning strategy.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{absurdity_accessible, accessibility_tier, basic_rule_filter, rule_priority};
use crate::formula::{Formula, Sequent, SequentKey};
use crate::graph::LazyGraph;
use crate::kernel::{applicable_actions, apply_action, branch_discharges, Action, RuleId};
use crate::par::{self, Execution};
use crate::proof::Proof;
use crate::qlearn::{canonical_cmp, order_actions, reward, EpsilonSchedule, QModel, Transition};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchLimits {
    pub max_steps: u64,
    pub max_depth: u32,
}

impl SearchLimits {
    pub fn new(max_steps: u64, max_depth: u32) -> Self {
        assert!(max_steps >= 1 && max_depth >= 1, "search limits must be positive");
        SearchLimits { max_steps, max_depth }
    }
}

impl Default for SearchLimits {
    fn default() -> Self {
        SearchLimits::new(5000, 64)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Proved,
    Refuted,
    BudgetExhausted,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Proved => "proved",
            Outcome::Refuted => "refuted",
            Outcome::BudgetExhausted => "budget-exhausted",
        }
    }

    pub fn is_decided(self) -> bool {
        self != Outcome::BudgetExhausted
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Outcome {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "proved" => Ok(Outcome::Proved),
            "refuted" => Ok(Outcome::Refuted),
            "budget-exhausted" => Ok(Outcome::BudgetExhausted),
            _ => Err(format!("unknown outcome `{s}`")),
        }
    }
}

/// `p` is the proof length and `t` the number of sub-problems generated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchStats {
    pub p: u64,
    pub t: u64,
    pub outcome: Outcome,
}

/// Decides the order in which the engine tries the actions of a state.
pub trait Strategy {
    fn name(&self) -> &'static str;

    /// Drops actions known not to lead anywhere. Must not drop an action
    /// that could complete a proof.
    fn prune(&self, _s: &Sequent, actions: Vec<Action>) -> Vec<Action> {
        actions
    }

    /// Returns a permutation of `actions`.
    fn order(&mut self, s: &Sequent, actions: Vec<Action>, g: &LazyGraph<'_>, rng: &mut ChaCha8Rng) -> Vec<Action>;

    fn learning(&self) -> bool {
        false
    }

    fn observe(&mut self, _t: Transition) {}
}

/// Drops inapplicable actions and eliminations that leave an atomic
/// sub-goal nothing can reach. A branch that may close with `bot` survives
/// while `bot` is reachable.
pub fn relevance_prune(s: &Sequent, actions: Vec<Action>) -> Vec<Action> {
    actions
        .into_iter()
        .filter(|a| basic_rule_filter(s, a) > 0.0)
        .filter(|a| {
            if !a.rule.is_elimination() {
                return true;
            }
            let Ok(children) = apply_action(s, a) else { return false };
            children.iter().enumerate().all(|(i, c)| {
                let goal = c.conclusion();
                !goal.is_atomic()
                    || accessibility_tier(c.premises(), goal).is_some()
                    || (a.rule.branch_accepts_absurdity(i) && absurdity_accessible(c.premises()))
            })
        })
        .collect()
}

fn major_complexity(a: &Action) -> u64 {
    a.major.as_ref().map_or(0, Formula::complexity)
}

/// Rule priority, then simpler majors first, then canonical order.
#[derive(Clone, Copy, Debug, Default)]
pub struct BaselineStrategy;

impl Strategy for BaselineStrategy {
    fn name(&self) -> &'static str {
        "baseline"
    }

    fn prune(&self, s: &Sequent, actions: Vec<Action>) -> Vec<Action> {
        relevance_prune(s, actions)
    }

    fn order(&mut self, s: &Sequent, mut actions: Vec<Action>, _g: &LazyGraph<'_>, _rng: &mut ChaCha8Rng) -> Vec<Action> {
        actions.sort_by(|a, b| {
            rule_priority(b.rule)
                .cmp(&rule_priority(a.rule))
                .then_with(|| major_complexity(a).cmp(&major_complexity(b)))
                .then_with(|| canonical_cmp(s, a, b))
        });
        actions
    }
}

/// Epsilon-greedy ordering by the linear model, optionally learning online.
#[derive(Clone, Debug)]
pub struct QStrategy {
    pub model: QModel,
    pub schedule: EpsilonSchedule,
    pub learning: bool,
    pub prune_relevance: bool,
    pub transitions: u64,
}

impl QStrategy {
    pub fn new(model: QModel, schedule: EpsilonSchedule, learning: bool) -> Self {
        QStrategy {
            model,
            schedule,
            learning,
            prune_relevance: true,
            transitions: 0,
        }
    }

    /// Greedy and frozen, as used for evaluation.
    pub fn frozen(model: QModel) -> Self {
        QStrategy::new(model, EpsilonSchedule::greedy(), false)
    }
}

impl Strategy for QStrategy {
    fn name(&self) -> &'static str {
        "q"
    }

    fn prune(&self, s: &Sequent, actions: Vec<Action>) -> Vec<Action> {
        if self.prune_relevance {
            relevance_prune(s, actions)
        } else {
            actions
        }
    }

    fn order(&mut self, s: &Sequent, actions: Vec<Action>, g: &LazyGraph<'_>, rng: &mut ChaCha8Rng) -> Vec<Action> {
        order_actions(&self.model, s, actions, &self.schedule, g, rng)
    }

    fn learning(&self) -> bool {
        self.learning
    }

    fn observe(&mut self, t: Transition) {
        if self.learning {
            self.model = self.model.update(&t);
            self.transitions += 1;
        }
    }
}

/// Uniformly random order with no pruning.
#[derive(Clone, Copy, Debug, Default)]
pub struct RandomStrategy;

impl Strategy for RandomStrategy {
    fn name(&self) -> &'static str {
        "random"
    }

    fn order(&mut self, _s: &Sequent, mut actions: Vec<Action>, _g: &LazyGraph<'_>, rng: &mut ChaCha8Rng) -> Vec<Action> {
        actions.shuffle(rng);
        actions
    }
}

struct OutOfBudget;

type Step = Result<Option<Proof>, OutOfBudget>;

/// Receives each proof found for a sub-problem. Returning `Ok(None)`
/// rejects the proof and resumes the search for another.
type Cont<'k, 'a> = &'k mut dyn FnMut(&mut Solver<'a>, Proof) -> Step;

struct Solver<'a> {
    strat: &'a mut dyn Strategy,
    limits: SearchLimits,
    rng: &'a mut ChaCha8Rng,
    t: u64,
    depth_cuts: u64,
    loop_cuts: u64,
    ancestors: HashSet<SequentKey>,
    /// Sequents with no proof at all, found without any cut.
    failed: HashSet<SequentKey>,
    pending: Option<(Sequent, Action)>,
}

fn node(s: &Sequent, a: &Action, discharged: Vec<Formula>, children: Vec<Proof>) -> Proof {
    Proof {
        sequent: s.clone(),
        rule: a.rule,
        major: a.major.clone(),
        term: a.term.clone(),
        discharged,
        children,
    }
}

/// Puts a sub-proof in place of an elimination whose assumption it never
/// used, restating it over the parent's premises.
fn lift(s: &Sequent, mut p: Proof) -> Proof {
    p.sequent = Sequent::new(s.premises().iter().cloned(), p.conclusion().clone());
    p
}

impl<'a> Solver<'a> {
    fn generate(&mut self, n: usize) -> Result<(), OutOfBudget> {
        self.t += n as u64;
        if self.t > self.limits.max_steps {
            Err(OutOfBudget)
        } else {
            Ok(())
        }
    }

    /// Solves `s`, or, when `absurd_ok`, derives `bot` from its premises.
    fn solve(&mut self, s: &Sequent, absurd_ok: bool, depth: u32, k: Cont<'_, 'a>) -> Step {
        if let Some(p) = self.solve_exact(s, depth, k)? {
            return Ok(Some(p));
        }
        if absurd_ok && !s.conclusion().is_falsum() {
            self.generate(1)?;
            return self.solve_exact(&s.with_conclusion(Formula::Falsum), depth + 1, k);
        }
        Ok(None)
    }

    fn solve_exact(&mut self, s: &Sequent, depth: u32, k: Cont<'_, 'a>) -> Step {
        if depth > self.limits.max_depth {
            self.depth_cuts += 1;
            return Ok(None);
        }
        let key = s.key();
        if self.failed.contains(&key) {
            return Ok(None);
        }
        if self.ancestors.contains(&key) {
            self.loop_cuts += 1;
            return Ok(None);
        }
        let candidates = self.strat.prune(s, applicable_actions(s));
        let graph = LazyGraph::new(s);
        let n = candidates.len();
        let ordered = self.strat.order(s, candidates, &graph, self.rng);
        debug_assert_eq!(ordered.len(), n, "strategy must return a permutation");
        if self.strat.learning() {
            if let Some((state, action)) = self.pending.take() {
                if !ordered.is_empty() {
                    let next = ordered.iter().map(|a| (s.clone(), a.clone())).collect();
                    self.strat.observe(Transition {
                        state,
                        action,
                        reward: 0.0,
                        next,
                    });
                }
            }
        }

        let cuts_before = self.depth_cuts + self.loop_cuts;
        let mut found = false;
        let mut result = Ok(None);
        self.ancestors.insert(key.clone());
        {
            let mut seen = |sv: &mut Solver<'a>, p: Proof| {
                found = true;
                k(sv, p)
            };
            for a in &ordered {
                match self.try_action(s, a, depth, &mut seen) {
                    Ok(None) => continue,
                    other => {
                        result = other;
                        break;
                    }
                }
            }
        }
        self.ancestors.remove(&key);
        if !found && matches!(result, Ok(None)) && self.depth_cuts + self.loop_cuts == cuts_before {
            self.failed.insert(key);
        }
        result
    }

    fn try_action(&mut self, s: &Sequent, a: &Action, depth: u32, k: Cont<'_, 'a>) -> Step {
        let Ok(children) = apply_action(s, a) else {
            return Ok(None);
        };
        self.generate(children.len())?;
        if self.strat.learning() {
            self.pending = Some((s.clone(), a.clone()));
        }
        let d = depth + 1;
        let goal = s.conclusion();
        let discharges: Vec<Formula> = branch_discharges(s, a).into_iter().flatten().collect();

        match (a.rule, a.major.as_ref()) {
            (RuleId::Hypothesis, _) => k(self, Proof::hypothesis(s.clone())),
            (RuleId::AndIntro, _) => self.solve(&children[0], false, d, &mut |sv, l| {
                sv.solve(&children[1], false, d, &mut |sv, r| k(sv, node(s, a, vec![], vec![l.clone(), r])))
            }),
            (RuleId::OrIntroL | RuleId::OrIntroR | RuleId::ForAllIntro | RuleId::ExistsIntro, _)
            | (RuleId::NegElim, _) => self.solve(&children[0], false, d, &mut |sv, c| k(sv, node(s, a, vec![], vec![c]))),
            (RuleId::ImpIntro | RuleId::NegIntro, _) => {
                let absurd_ok = a.rule.branch_accepts_absurdity(0);
                self.solve(&children[0], absurd_ok, d, &mut |sv, c| {
                    if c.uses(&discharges[0]) {
                        k(sv, node(s, a, discharges.clone(), vec![c]))
                    } else {
                        Ok(None)
                    }
                })
            }
            (RuleId::AndElim | RuleId::ForAllElim | RuleId::ExistsElim, _) => {
                self.solve(&children[0], false, d, &mut |sv, c| {
                    let open = c.open_assumptions();
                    if discharges.iter().any(|f| open.contains(f)) {
                        k(sv, node(s, a, discharges.clone(), vec![c]))
                    } else {
                        k(sv, lift(s, c))
                    }
                })
            }
            (RuleId::ImpElim, Some(Formula::Implies(_, consequent))) => self.solve(&children[0], false, d, &mut |sv, minor| {
                sv.solve(&children[1], false, d, &mut |sv, main| {
                    if main.uses(consequent) {
                        k(sv, node(s, a, discharges.clone(), vec![minor.clone(), main]))
                    } else {
                        k(sv, lift(s, main))
                    }
                })
            }),
            (RuleId::OrElim, Some(Formula::Or(left, right))) => self.solve(&children[0], true, d, &mut |sv, first| {
                if !first.uses(left) {
                    return if first.conclusion() == goal { k(sv, lift(s, first)) } else { Ok(None) };
                }
                let strict = !goal.is_falsum() && first.conclusion() != goal;
                sv.solve(&children[1], !strict, d, &mut |sv, second| {
                    if !second.uses(right) {
                        return if second.conclusion() == goal { k(sv, lift(s, second)) } else { Ok(None) };
                    }
                    k(sv, node(s, a, discharges.clone(), vec![first.clone(), second]))
                })
            }),
            _ => Ok(None),
        }
    }
}

/// Runs one proof attempt. Outcomes are `proved`, `refuted` when the
/// loop-checked space is exhausted, and `budget-exhausted` when the step
/// budget or the depth limit cut the search short.
pub fn prove(s: &Sequent, strat: &mut dyn Strategy, limits: SearchLimits, rng: &mut ChaCha8Rng) -> (Option<Proof>, SearchStats) {
    let learning = strat.learning();
    let mut solver = Solver {
        strat,
        limits,
        rng,
        t: 0,
        depth_cuts: 0,
        loop_cuts: 0,
        ancestors: HashSet::new(),
        failed: HashSet::new(),
        pending: None,
    };
    let result = solver.solve_exact(s, 0, &mut |_, p| Ok(Some(p)));
    let t = solver.t;
    match result {
        Ok(Some(proof)) => {
            let p = proof.length() as u64;
            if learning {
                if let Some((state, action)) = solver.pending.take() {
                    let r = reward(p.max(1), t.max(1)).expect("clamped arguments are in range");
                    solver.strat.observe(Transition {
                        state,
                        action,
                        reward: r,
                        next: vec![],
                    });
                }
            }
            let stats = SearchStats {
                p,
                t,
                outcome: Outcome::Proved,
            };
            (Some(proof), stats)
        }
        Ok(None) => {
            let outcome = if solver.depth_cuts > 0 {
                Outcome::BudgetExhausted
            } else {
                Outcome::Refuted
            };
            (None, SearchStats { p: 0, t, outcome })
        }
        Err(OutOfBudget) => (
            None,
            SearchStats {
                p: 0,
                t,
                outcome: Outcome::BudgetExhausted,
            },
        ),
    }
}

/// Random stream for problem `index` of a batch: one seed, one stream per
/// problem, so results do not depend on scheduling.
pub fn problem_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Which non-learning strategy to evaluate with.
#[derive(Clone, Debug)]
pub enum StrategySpec {
    Baseline,
    Random,
    Q(QModel),
}

impl StrategySpec {
    pub fn name(&self) -> &'static str {
        match self {
            StrategySpec::Baseline => "baseline",
            StrategySpec::Random => "random",
            StrategySpec::Q(_) => "q",
        }
    }

    pub fn instantiate(&self) -> Box<dyn Strategy> {
        match self {
            StrategySpec::Baseline => Box::new(BaselineStrategy),
            StrategySpec::Random => Box::new(RandomStrategy),
            StrategySpec::Q(m) => Box::new(QStrategy::frozen(m.clone())),
        }
    }
}

/// Result of one batch attempt.
#[derive(Clone, Debug)]
pub struct Evaluated {
    pub proof: Option<Proof>,
    pub stats: SearchStats,
    pub wall: Duration,
}

/// Proof attempts over a batch, one independent random stream per problem.
/// Results come back in input order whatever the execution mode.
pub fn evaluate(
    problems: &[(usize, Sequent)],
    spec: &StrategySpec,
    limits: SearchLimits,
    seed: u64,
    exec: Execution,
) -> Vec<Evaluated> {
    par::map(exec, problems, |(index, s)| {
        let start = Instant::now();
        let mut strat = spec.instantiate();
        let mut rng = problem_rng(seed, *index);
        let (proof, stats) = prove(s, strat.as_mut(), limits, &mut rng);
        Evaluated {
            proof,
            stats,
            wall: start.elapsed(),
        }
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Summary {
    pub attempted: usize,
    pub solved: usize,
    pub refuted: usize,
    /// Mean `T` over proved problems.
    pub mean_t: f64,
    /// Mean `p` over proved problems.
    pub mean_p: f64,
    /// Mean `T` over all attempts.
    pub mean_t_all: f64,
}

impl Summary {
    pub fn of<'a>(stats: impl IntoIterator<Item = &'a SearchStats>) -> Summary {
        let mut s = Summary::default();
        let (mut t_solved, mut p_solved, mut t_all) = (0u64, 0u64, 0u64);
        for st in stats {
            s.attempted += 1;
            t_all += st.t;
            match st.outcome {
                Outcome::Proved => {
                    s.solved += 1;
                    t_solved += st.t;
                    p_solved += st.p;
                }
                Outcome::Refuted => s.refuted += 1,
                Outcome::BudgetExhausted => {}
            }
        }
        let mean = |total: u64, n: usize| if n == 0 { 0.0 } else { total as f64 / n as f64 };
        s.mean_t = mean(t_solved, s.solved);
        s.mean_p = mean(p_solved, s.solved);
        s.mean_t_all = mean(t_all, s.attempted);
        s
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub summary: Summary,
    pub epsilon: f64,
    /// Largest absolute change of any weight over the epoch.
    pub max_delta: f64,
}

#[derive(Clone, Debug)]
pub struct TrainReport {
    pub model: QModel,
    pub schedule: EpsilonSchedule,
    pub epochs: Vec<EpochStats>,
    pub converged_at: Option<usize>,
}

pub const CONVERGENCE_TOLERANCE: f64 = 1e-6;

/// Online training: every problem of every epoch is attempted with the
/// learning strategy, in order, and epsilon decays once per attempt.
pub fn train(
    problems: &[Sequent],
    model: QModel,
    schedule: EpsilonSchedule,
    limits: SearchLimits,
    epochs: usize,
    rng: &mut ChaCha8Rng,
) -> TrainReport {
    let mut strat = QStrategy::new(model, schedule, true);
    let mut report_epochs = Vec::with_capacity(epochs);
    let mut converged_at = None;
    for epoch in 1..=epochs {
        let start = strat.model.clone();
        let epsilon = strat.schedule.epsilon;
        let mut stats = Vec::with_capacity(problems.len());
        for s in problems {
            let (_, st) = prove(s, &mut strat, limits, rng);
            stats.push(st);
            strat.schedule = strat.schedule.decay();
        }
        let max_delta = strat.model.max_abs_delta(&start);
        if converged_at.is_none() && max_delta < CONVERGENCE_TOLERANCE {
            converged_at = Some(epoch);
        }
        report_epochs.push(EpochStats {
            epoch,
            summary: Summary::of(&stats),
            epsilon,
            max_delta,
        });
    }
    TrainReport {
        model: strat.model,
        schedule: strat.schedule,
        epochs: report_epochs,
        converged_at,
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CvError {
    #[error("cross-validation needs at least 2 folds, got {0}")]
    TooFewFolds(usize),
    #[error("{problems} problems cannot fill {folds} folds")]
    InsufficientProblems { problems: usize, folds: usize },
}

/// Seeded shuffle into `k` folds whose sizes differ by at most one, the
/// larger folds first.
pub fn partition(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>, CvError> {
    if k < 2 {
        return Err(CvError::TooFewFolds(k));
    }
    if n < k {
        return Err(CvError::InsufficientProblems { problems: n, folds: k });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut folds = Vec::with_capacity(k);
    let mut rest = order.as_slice();
    for i in 0..k {
        let size = n / k + usize::from(i < n % k);
        let (head, tail) = rest.split_at(size);
        let mut fold = head.to_vec();
        fold.sort_unstable();
        folds.push(fold);
        rest = tail;
    }
    Ok(folds)
}

#[derive(Clone, Debug)]
pub struct CvConfig {
    pub folds: usize,
    pub epochs: usize,
    pub model: QModel,
    pub schedule: EpsilonSchedule,
    pub limits: SearchLimits,
    pub seed: u64,
    pub exec: Execution,
}

/// Per-problem record of a validation run.
#[derive(Clone, Debug, PartialEq)]
pub struct Attempt {
    pub index: usize,
    pub fold: usize,
    pub strategy: &'static str,
    pub stats: SearchStats,
}

#[derive(Clone, Debug)]
pub struct FoldReport {
    pub fold: usize,
    pub train_size: usize,
    pub test_size: usize,
    pub training: TrainReport,
    /// The learned strategy on the training problems, frozen and greedy.
    pub q_train: Summary,
    pub baseline_train: Summary,
    pub q_test: Summary,
    pub baseline_test: Summary,
}

#[derive(Clone, Debug)]
pub struct CvReport {
    pub folds: Vec<FoldReport>,
    pub attempts: Vec<Attempt>,
    pub q_test: Summary,
    pub baseline_test: Summary,
}

/// K-fold cross-validation: train on the remainder, then evaluate the frozen
/// model and the baseline on the held-out fold.
pub fn cross_validate(problems: &[Sequent], cfg: &CvConfig) -> Result<CvReport, CvError> {
    let folds = partition(problems.len(), cfg.folds, cfg.seed)?;
    let mut reports = Vec::with_capacity(folds.len());
    let mut attempts = Vec::new();
    for (f, held_out) in folds.iter().enumerate() {
        let held: HashSet<usize> = held_out.iter().copied().collect();
        let train_set: Vec<(usize, Sequent)> = (0..problems.len())
            .filter(|i| !held.contains(i))
            .map(|i| (i, problems[i].clone()))
            .collect();
        let test_set: Vec<(usize, Sequent)> = held_out.iter().map(|&i| (i, problems[i].clone())).collect();

        let train_only: Vec<Sequent> = train_set.iter().map(|(_, s)| s.clone()).collect();
        let mut rng = problem_rng(cfg.seed, usize::MAX - f);
        let training = train(&train_only, cfg.model.clone(), cfg.schedule, cfg.limits, cfg.epochs, &mut rng);

        let q = StrategySpec::Q(training.model.clone());
        let stats_of = |set: &[(usize, Sequent)], spec: &StrategySpec| -> Vec<SearchStats> {
            evaluate(set, spec, cfg.limits, cfg.seed, cfg.exec).into_iter().map(|e| e.stats).collect()
        };
        let q_train = Summary::of(&stats_of(&train_set, &q));
        let baseline_train = Summary::of(&stats_of(&train_set, &StrategySpec::Baseline));
        let q_stats = stats_of(&test_set, &q);
        let b_stats = stats_of(&test_set, &StrategySpec::Baseline);
        for ((index, _), st) in test_set.iter().zip(&q_stats) {
            attempts.push(Attempt { index: *index, fold: f, strategy: "q", stats: *st });
        }
        for ((index, _), st) in test_set.iter().zip(&b_stats) {
            attempts.push(Attempt { index: *index, fold: f, strategy: "baseline", stats: *st });
        }
        reports.push(FoldReport {
            fold: f,
            train_size: train_set.len(),
            test_size: test_set.len(),
            training,
            q_train,
            baseline_train,
            q_test: Summary::of(&q_stats),
            baseline_test: Summary::of(&b_stats),
        });
    }
    let pick = |name: &str| {
        let stats: Vec<SearchStats> = attempts.iter().filter(|a| a.strategy == name).map(|a| a.stats).collect();
        Summary::of(&stats)
    };
    Ok(CvReport {
        q_test: pick("q"),
        baseline_test: pick("baseline"),
        folds: reports,
        attempts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureSet;
    use crate::proof::proves;
    use crate::syntax::parse_sequent;

    fn seq(s: &str) -> Sequent {
        parse_sequent(s).unwrap()
    }

    fn run(s: &str, strat: &mut dyn Strategy) -> (Option<Proof>, SearchStats) {
        let s = seq(s);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let out = prove(&s, strat, SearchLimits::default(), &mut rng);
        if let Some(p) = &out.0 {
            assert!(proves(p, &s), "invalid proof of {s}:\n{p}");
        }
        out
    }

    #[test]
    fn modus_ponens() {
        let (p, st) = run("A(a), A(a) -> B(a) |- B(a)", &mut BaselineStrategy);
        assert_eq!(st.outcome, Outcome::Proved);
        assert_eq!(st.p, 1);
        assert!(st.t >= st.p);
        assert_eq!(p.unwrap().rule, RuleId::ImpElim);
    }

    #[test]
    fn figure_one() {
        let (p, st) = run("A(a), A(a) -> (B(a) | C(a)), ~C(a) |- B(a)", &mut BaselineStrategy);
        assert_eq!(st.outcome, Outcome::Proved);
        assert_eq!(st.p, 3);
        let p = p.unwrap();
        assert_eq!(p.rule, RuleId::ImpElim);
        assert_eq!(p.children[1].rule, RuleId::OrElim);
    }

    #[test]
    fn classical_principles_are_refuted() {
        for s in ["|- A(a) | ~A(a)", "~~A(a) |- A(a)", "bot |- A(a)", "A(a), ~A(a) |- B(a)"] {
            for strat in [&mut BaselineStrategy as &mut dyn Strategy, &mut RandomStrategy] {
                let (p, st) = run(s, strat);
                assert!(p.is_none());
                assert_eq!(st.outcome, Outcome::Refuted, "{s}");
            }
        }
    }

    #[test]
    fn budget_is_distinct_from_refutation() {
        let s = seq("A(a) -> B(a), B(a) -> C(a), A(a) |- C(a)");
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (p, st) = prove(&s, &mut BaselineStrategy, SearchLimits::new(1, 64), &mut rng);
        assert!(p.is_none());
        assert_eq!(st.outcome, Outcome::BudgetExhausted);
        let (_, st) = prove(&s, &mut BaselineStrategy, SearchLimits::new(1000, 1), &mut rng);
        assert_eq!(st.outcome, Outcome::BudgetExhausted);
    }

    #[test]
    fn baseline_orders_by_priority() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = seq("A(a) |- A(a)");
        let g = LazyGraph::new(&s);
        let out = BaselineStrategy.order(&s, applicable_actions(&s), &g, &mut rng);
        assert_eq!(out[0].rule, RuleId::Hypothesis);
        let s = seq("A(a), B(a) |- A(a) & B(a)");
        let out = BaselineStrategy.order(&s, applicable_actions(&s), &LazyGraph::new(&s), &mut rng);
        assert_eq!(out[0].rule, RuleId::AndIntro);
    }

    #[test]
    fn prune_keeps_reachable_branches() {
        let s = seq("A(a), A(a) -> (B(a) | C(a)), ~C(a) |- B(a)");
        let kept = relevance_prune(&s, applicable_actions(&s));
        assert!(kept.iter().any(|a| a.rule == RuleId::ImpElim));
        let s = seq("C(a) -> B(a), D(a) |- B(a)");
        assert!(relevance_prune(&s, applicable_actions(&s)).is_empty());
    }

    #[test]
    fn learning_emits_one_terminal_reward() {
        let model = QModel::new(FeatureSet::primitive(), 0.1, 0.9);
        let mut strat = QStrategy::new(model.clone(), EpsilonSchedule::greedy(), true);
        let (_, st) = run("A(a), A(a) -> (B(a) | C(a)), ~C(a) |- B(a)", &mut strat);
        assert_eq!(st.outcome, Outcome::Proved);
        assert_ne!(strat.model, model);
        assert!(strat.transitions >= 1);

        let mut frozen = QStrategy::frozen(model.clone());
        run("A(a), A(a) -> (B(a) | C(a)), ~C(a) |- B(a)", &mut frozen);
        assert_eq!(frozen.model, model);
    }

    #[test]
    fn folds_are_balanced() {
        let folds = partition(154, 3, 7).unwrap();
        let sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![52, 51, 51]);
        let mut all: Vec<usize> = folds.concat();
        all.sort_unstable();
        assert_eq!(all, (0..154).collect::<Vec<_>>());
        let loo = partition(5, 5, 1).unwrap();
        assert!(loo.iter().all(|f| f.len() == 1));
        assert!(partition(2, 3, 0).is_err());
        assert!(partition(10, 1, 0).is_err());
    }

    #[test]
    fn training_edge_cases() {
        let problems = vec![seq("A(a), A(a) -> B(a) |- B(a)"), seq("A(a) & B(a) |- B(a) & A(a)")];
        let model = QModel::new(FeatureSet::primitive(), 1e-4, 0.9);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let r = train(&problems, model.clone(), EpsilonSchedule::new(0.5, 0.9), SearchLimits::default(), 0, &mut rng);
        assert_eq!(r.model, model);

        let zero = QModel::new(FeatureSet::primitive(), 0.0, 0.9);
        let r = train(&problems, zero.clone(), EpsilonSchedule::new(0.5, 0.9), SearchLimits::default(), 3, &mut rng);
        assert_eq!(r.model, zero);
        assert_eq!(r.converged_at, Some(1));

        let go = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            train(&problems, model.clone(), EpsilonSchedule::new(0.5, 0.9), SearchLimits::default(), 2, &mut rng).model
        };
        assert_eq!(go(11), go(11));
    }
}
