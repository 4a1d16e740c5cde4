//! Random problem generation with a solvability filter.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::formula::{Connective, Formula, Sequent, Term};
use crate::par::{self, Execution};
use crate::problems::Label;
use crate::search::{prove, problem_rng, BaselineStrategy, SearchLimits};

#[derive(Clone, Debug, PartialEq)]
pub struct GenConfig {
    pub num_predicates: usize,
    pub num_individuals: usize,
    pub connectives: Vec<Connective>,
    /// Nesting bound on every sampled formula.
    pub max_depth: usize,
    pub max_premises: usize,
    pub count: usize,
    pub seed: u64,
    pub solve_budget: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            num_predicates: 3,
            num_individuals: 3,
            connectives: Connective::ALL.to_vec(),
            max_depth: 4,
            max_premises: 3,
            count: 100,
            seed: 0,
            solve_budget: 500,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GenError {
    #[error("invalid generator configuration: {0}")]
    InvalidConfig(String),
    #[error("only {found} of {wanted} problems found after {candidates} candidates")]
    SpaceExhausted { wanted: usize, found: usize, candidates: usize },
}

const PREDICATES: &str = "ABCDEFGHIJKLMNOPQRST";
const INDIVIDUALS: &str = "abcdefghijklmnopqrst";
const VARIABLES: [&str; 6] = ["x", "y", "z", "u", "v", "w"];

impl GenConfig {
    pub fn validate(&self) -> Result<(), GenError> {
        let bad = |m: &str| Err(GenError::InvalidConfig(m.to_string()));
        if !(1..=PREDICATES.len()).contains(&self.num_predicates) {
            return bad("predicates must number between 1 and 20");
        }
        if !(1..=INDIVIDUALS.len()).contains(&self.num_individuals) {
            return bad("individuals must number between 1 and 20");
        }
        if self.count == 0 {
            return bad("count must be at least 1");
        }
        if self.max_depth == 0 {
            return bad("depth must be at least 1");
        }
        if self.solve_budget == 0 {
            return bad("solve budget must be at least 1");
        }
        Ok(())
    }

    pub fn predicates(&self) -> Vec<String> {
        PREDICATES.chars().take(self.num_predicates).map(String::from).collect()
    }

    pub fn individuals(&self) -> Vec<String> {
        INDIVIDUALS.chars().take(self.num_individuals).map(String::from).collect()
    }
}

fn variable(depth: usize) -> String {
    let base = VARIABLES[depth % VARIABLES.len()];
    match depth / VARIABLES.len() {
        0 => base.to_string(),
        n => format!("{base}{n}"),
    }
}

struct Sampler<'a> {
    cfg: &'a GenConfig,
    predicates: Vec<String>,
    individuals: Vec<String>,
}

impl Sampler<'_> {
    /// Uniform over "atom" and each enabled connective, atoms only once the
    /// depth bound is reached.
    fn formula(&self, rng: &mut ChaCha8Rng, depth_left: usize, bound: &mut Vec<String>) -> Formula {
        let choices = if depth_left == 0 { 0 } else { self.cfg.connectives.len() };
        let pick = rng.gen_range(0..=choices);
        if pick == 0 {
            return self.atom(rng, bound);
        }
        let d = depth_left - 1;
        match self.cfg.connectives[pick - 1] {
            Connective::Not => Formula::not(self.formula(rng, d, bound)),
            Connective::And => Formula::and(self.formula(rng, d, bound), self.formula(rng, d, bound)),
            Connective::Or => Formula::or(self.formula(rng, d, bound), self.formula(rng, d, bound)),
            Connective::Implies => Formula::implies(self.formula(rng, d, bound), self.formula(rng, d, bound)),
            q @ (Connective::ForAll | Connective::Exists) => {
                let v = variable(bound.len());
                bound.push(v.clone());
                let body = self.formula(rng, d, bound);
                bound.pop();
                if q == Connective::ForAll {
                    Formula::forall(&v, body)
                } else {
                    Formula::exists(&v, body)
                }
            }
        }
    }

    fn atom(&self, rng: &mut ChaCha8Rng, bound: &[String]) -> Formula {
        let pred = self.predicates.choose(rng).expect("validated");
        let k = rng.gen_range(0..self.individuals.len() + bound.len());
        let arg = match k.checked_sub(self.individuals.len()) {
            None => Term::constant(&self.individuals[k]),
            Some(i) => Term::var(&bound[i]),
        };
        Formula::atom(pred, arg)
    }

    fn sequent(&self, rng: &mut ChaCha8Rng) -> Sequent {
        let n = rng.gen_range(0..=self.cfg.max_premises);
        let premises: Vec<Formula> = (0..n).map(|_| self.formula(rng, self.cfg.max_depth, &mut vec![])).collect();
        let conclusion = self.formula(rng, self.cfg.max_depth, &mut vec![]);
        Sequent::new(premises, conclusion)
    }
}

/// A random sentence over the configured alphabet.
pub fn random_formula(cfg: &GenConfig, rng: &mut ChaCha8Rng) -> Formula {
    sampler(cfg).formula(rng, cfg.max_depth, &mut vec![])
}

pub fn random_sequent(cfg: &GenConfig, rng: &mut ChaCha8Rng) -> Sequent {
    sampler(cfg).sequent(rng)
}

fn sampler(cfg: &GenConfig) -> Sampler<'_> {
    Sampler {
        cfg,
        predicates: cfg.predicates(),
        individuals: cfg.individuals(),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Generated {
    pub sequent: Sequent,
    pub label: Label,
}

/// Candidates drawn per requested problem before giving up.
const ATTEMPTS_PER_PROBLEM: usize = 200;
const MIN_BATCH: usize = 64;

/// Samples sequents, drops duplicates up to canonical form, and keeps those
/// the baseline decides within the solve budget, in sampling order.
pub fn generate_problems(cfg: &GenConfig, exec: Execution) -> Result<Vec<Generated>, GenError> {
    cfg.validate()?;
    let sampler = sampler(cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let limits = SearchLimits::new(cfg.solve_budget, SearchLimits::default().max_depth);
    let cap = cfg.count.saturating_mul(ATTEMPTS_PER_PROBLEM).max(10_000);
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(cfg.count);
    let mut drawn = 0usize;

    while out.len() < cfg.count {
        if drawn >= cap {
            return Err(GenError::SpaceExhausted {
                wanted: cfg.count,
                found: out.len(),
                candidates: drawn,
            });
        }
        let want = (2 * (cfg.count - out.len())).max(MIN_BATCH).min(cap - drawn);
        let mut batch = Vec::with_capacity(want);
        for _ in 0..want {
            let s = sampler.sequent(&mut rng);
            if seen.insert(s.key()) {
                batch.push((drawn, s));
            }
            drawn += 1;
        }
        let verdicts = par::map(exec, &batch, |(i, s)| {
            let mut r = problem_rng(cfg.seed, *i);
            prove(s, &mut BaselineStrategy, limits, &mut r).1.outcome
        });
        for ((_, s), outcome) in batch.into_iter().zip(verdicts) {
            if out.len() == cfg.count {
                break;
            }
            if let Some(label) = Label::of(outcome) {
                out.push(Generated { sequent: s, label });
            }
        }
    }
    Ok(out)
}
