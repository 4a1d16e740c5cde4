//! Hand-engineered state/action features for the linear Q model.
//!
//! Rule ordering and the basic rule filter are always present; the four
//! optional features are selected by the letters `A` to `D`.

use std::fmt;
use std::str::FromStr;

use crate::formula::{Formula, Sequent, Term};
use crate::graph::{LazyGraph, ProblemGraph};
use crate::kernel::{self, Action, RuleId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FeatureId {
    RuleOrdering,
    BasicRuleFilter,
    /// `A`
    AtomicAccessibility,
    /// `B`
    MajorComplexity,
    /// `C`
    WeightedMajorComplexity,
    /// `D`
    ShortestPathToGoal,
}

impl FeatureId {
    pub const ALL: [FeatureId; 6] = [
        FeatureId::RuleOrdering,
        FeatureId::BasicRuleFilter,
        FeatureId::AtomicAccessibility,
        FeatureId::MajorComplexity,
        FeatureId::WeightedMajorComplexity,
        FeatureId::ShortestPathToGoal,
    ];

    pub fn letter(self) -> Option<char> {
        match self {
            FeatureId::RuleOrdering | FeatureId::BasicRuleFilter => None,
            FeatureId::AtomicAccessibility => Some('A'),
            FeatureId::MajorComplexity => Some('B'),
            FeatureId::WeightedMajorComplexity => Some('C'),
            FeatureId::ShortestPathToGoal => Some('D'),
        }
    }

    pub fn from_letter(c: char) -> Option<Self> {
        FeatureId::ALL.into_iter().find(|f| f.letter() == Some(c.to_ascii_uppercase()))
    }

    pub fn name(self) -> &'static str {
        match self {
            FeatureId::RuleOrdering => "rule_ordering",
            FeatureId::BasicRuleFilter => "basic_rule_filter",
            FeatureId::AtomicAccessibility => "atomic_accessibility",
            FeatureId::MajorComplexity => "major_complexity",
            FeatureId::WeightedMajorComplexity => "weighted_major_complexity",
            FeatureId::ShortestPathToGoal => "shortest_path",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        FeatureId::ALL.into_iter().find(|f| f.name() == s)
    }

    /// Closed interval every value of the feature lies in.
    pub fn range(self) -> (f64, f64) {
        match self {
            FeatureId::BasicRuleFilter | FeatureId::AtomicAccessibility => (-1.0, 1.0),
            _ => (0.0, 1.0),
        }
    }
}

/// Enabled features in canonical order; the two primitive features are
/// always members.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FeatureSet(Vec<FeatureId>);

impl FeatureSet {
    pub fn primitive() -> Self {
        FeatureSet(vec![FeatureId::RuleOrdering, FeatureId::BasicRuleFilter])
    }

    pub fn all() -> Self {
        FeatureSet(FeatureId::ALL.to_vec())
    }

    pub fn with(mut self, f: FeatureId) -> Self {
        if !self.0.contains(&f) {
            self.0.push(f);
            self.0.sort();
        }
        self
    }

    pub fn ids(&self) -> &[FeatureId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, f: FeatureId) -> bool {
        self.0.contains(&f)
    }
}

impl Default for FeatureSet {
    fn default() -> Self {
        FeatureSet::primitive()
    }
}

impl fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let letters: Vec<String> = self.0.iter().filter_map(|id| id.letter()).map(String::from).collect();
        if letters.is_empty() {
            f.write_str("none")
        } else {
            f.write_str(&letters.join(","))
        }
    }
}

impl FromStr for FeatureSet {
    type Err = String;

    /// Parses `A,C`-style letter lists; `none` or an empty string selects
    /// only the primitive features.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut set = FeatureSet::primitive();
        let s = s.trim();
        if s.is_empty() || s.eq_ignore_ascii_case("none") {
            return Ok(set);
        }
        for part in s.split(',') {
            let part = part.trim();
            let mut chars = part.chars();
            let id = match (chars.next(), chars.next()) {
                (Some(c), None) => FeatureId::from_letter(c),
                _ => None,
            };
            set = set.with(id.ok_or_else(|| format!("unknown feature `{part}` (expected letters A-D)"))?);
        }
        Ok(set)
    }
}

/// Rank in the rule preference order; larger is preferred. Both
/// disjunction introductions share the bottom rank.
pub fn rule_priority(rule: RuleId) -> u32 {
    match rule {
        RuleId::Hypothesis => 12,
        RuleId::NegElim => 11,
        RuleId::AndElim => 10,
        RuleId::ImpElim => 9,
        RuleId::OrElim => 8,
        RuleId::AndIntro => 7,
        RuleId::NegIntro => 6,
        RuleId::ImpIntro => 5,
        RuleId::ForAllIntro => 4,
        RuleId::ExistsElim => 3,
        RuleId::ForAllElim => 2,
        RuleId::ExistsIntro => 1,
        RuleId::OrIntroL | RuleId::OrIntroR => 0,
    }
}

const TOP_PRIORITY: u32 = 12;

pub fn rule_ordering(_s: &Sequent, a: &Action) -> f64 {
    f64::from(rule_priority(a.rule)) / f64::from(TOP_PRIORITY)
}

pub fn basic_rule_filter(s: &Sequent, a: &Action) -> f64 {
    if kernel::is_applicable(s, a) {
        1.0
    } else {
        -1.0
    }
}

/// Preference tiers for an accessible atomic goal.
pub mod tier {
    pub const PREMISE: f64 = 1.0;
    pub const DIRECT: f64 = 0.8;
    pub const UNDER_DISJUNCTION: f64 = 0.5;
    pub const UNDER_QUANTIFIER: f64 = 0.25;
}

fn matches_goal(occurrence: &Formula, goal: &Formula) -> bool {
    match (occurrence, goal) {
        (Formula::Atom(p, t), Formula::Atom(q, g)) => p == q && (t == g || matches!(t, Term::Var(_))),
        _ => false,
    }
}

/// Visit the subformulas reachable from `f` by eliminations alone:
/// conjuncts, disjuncts, consequents and quantifier bodies.
fn for_each_accessible(f: &Formula, under_or: bool, under_quant: bool, visit: &mut impl FnMut(&Formula, bool, bool)) {
    visit(f, under_or, under_quant);
    match f {
        Formula::And(l, r) => {
            for_each_accessible(l, under_or, under_quant, visit);
            for_each_accessible(r, under_or, under_quant, visit);
        }
        Formula::Or(l, r) => {
            for_each_accessible(l, true, under_quant, visit);
            for_each_accessible(r, true, under_quant, visit);
        }
        Formula::Implies(_, r) => for_each_accessible(r, under_or, under_quant, visit),
        Formula::ForAll(_, b) | Formula::Exists(_, b) => for_each_accessible(b, under_or, true, visit),
        _ => {}
    }
}

/// Best tier at which atomic `goal` is accessible from `premises`, if any.
/// Bound variables match any argument.
pub fn accessibility_tier(premises: &[Formula], goal: &Formula) -> Option<f64> {
    if premises.contains(goal) {
        return Some(tier::PREMISE);
    }
    let mut best: Option<f64> = None;
    for p in premises {
        for_each_accessible(p, false, false, &mut |f, under_or, under_quant| {
            if matches_goal(f, goal) {
                let t = if under_quant {
                    tier::UNDER_QUANTIFIER
                } else if under_or {
                    tier::UNDER_DISJUNCTION
                } else {
                    tier::DIRECT
                };
                best = Some(best.map_or(t, |b: f64| b.max(t)));
            }
        });
    }
    best
}

/// Whether `bot` can be reached by eliminations: a `bot` or a negation
/// accessible in some premise.
pub fn absurdity_accessible(premises: &[Formula]) -> bool {
    let mut found = false;
    for p in premises {
        for_each_accessible(p, false, false, &mut |f, _, _| {
            found |= matches!(f, Formula::Falsum | Formula::Not(_));
        });
    }
    found
}

pub fn atomic_accessibility(s: &Sequent, _a: &Action) -> f64 {
    let goal = s.conclusion();
    if !goal.is_atomic() {
        return 0.0;
    }
    accessibility_tier(s.premises(), goal).unwrap_or(-1.0)
}

fn complexity_score(s: &Sequent, a: &Action, measure: impl Fn(&Formula) -> u64) -> f64 {
    let Some(major) = &a.major else { return 0.0 };
    let max = s.premises().iter().map(&measure).max().unwrap_or(0);
    if max == 0 {
        return 0.0;
    }
    // Clamp for majors outside the premise set (inapplicable actions).
    (1.0 - measure(major) as f64 / max as f64).clamp(0.0, 1.0)
}

pub fn major_complexity_score(s: &Sequent, a: &Action) -> f64 {
    complexity_score(s, a, Formula::complexity)
}

pub fn weighted_major_complexity_score(s: &Sequent, a: &Action) -> f64 {
    complexity_score(s, a, Formula::weighted_complexity)
}

pub fn shortest_path_score(_s: &Sequent, a: &Action, g: &ProblemGraph) -> f64 {
    let Some(major) = &a.major else { return 0.0 };
    let Some(from) = g.node_of(major) else { return 0.0 };
    match g.shortest_distance(from, g.conclusion_node()) {
        Ok(Some(d)) => 1.0 / (1.0 + f64::from(d)),
        _ => 0.0,
    }
}

pub fn feature_value(id: FeatureId, s: &Sequent, a: &Action, g: &LazyGraph<'_>) -> f64 {
    match id {
        FeatureId::RuleOrdering => rule_ordering(s, a),
        FeatureId::BasicRuleFilter => basic_rule_filter(s, a),
        FeatureId::AtomicAccessibility => atomic_accessibility(s, a),
        FeatureId::MajorComplexity => major_complexity_score(s, a),
        FeatureId::WeightedMajorComplexity => weighted_major_complexity_score(s, a),
        FeatureId::ShortestPathToGoal => shortest_path_score(s, a, g.get()),
    }
}

/// Enabled feature values in canonical order; `g` must wrap `s`.
pub fn feature_vector(s: &Sequent, a: &Action, enabled: &FeatureSet, g: &LazyGraph<'_>) -> Vec<f64> {
    enabled.ids().iter().map(|&id| feature_value(id, s, a, g)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_graph;
    use crate::syntax::{parse_formula, parse_sequent};

    fn f(s: &str) -> Formula {
        parse_formula(s).unwrap()
    }

    fn seq(s: &str) -> Sequent {
        parse_sequent(s).unwrap()
    }

    #[test]
    fn rule_ordering_extremes() {
        let s = seq("A(a) |- A(a)");
        assert_eq!(rule_ordering(&s, &Action::intro(RuleId::Hypothesis)), 1.0);
        assert_eq!(rule_ordering(&s, &Action::intro(RuleId::OrIntroL)), 0.0);
        assert_eq!(rule_ordering(&s, &Action::intro(RuleId::OrIntroR)), 0.0);
        let a = Action::elim(RuleId::AndElim, f("A(a) & B(a)"));
        let b = Action::elim(RuleId::AndElim, f("C(a) & D(a)"));
        assert_eq!(rule_ordering(&s, &a), rule_ordering(&s, &b));
    }

    #[test]
    fn basic_filter_tracks_applicability() {
        let conj = seq("|- A(a) & B(a)");
        assert_eq!(basic_rule_filter(&conj, &Action::intro(RuleId::AndIntro)), 1.0);
        let disj = seq("|- A(a) | B(a)");
        assert_eq!(basic_rule_filter(&disj, &Action::intro(RuleId::AndIntro)), -1.0);
        let absurd = seq("~A(a) |- bot");
        assert_eq!(basic_rule_filter(&absurd, &Action::elim(RuleId::NegElim, f("~A(a)"))), 1.0);
    }

    #[test]
    fn atomic_accessibility_cases() {
        let any = Action::intro(RuleId::Hypothesis);
        assert_eq!(atomic_accessibility(&seq("|- A(a) -> B(a)"), &any), 0.0);
        assert_eq!(atomic_accessibility(&seq("C(a), ~B(a) |- B(a)"), &any), -1.0);
        assert_eq!(atomic_accessibility(&seq("B(a), C(a) |- B(a)"), &any), 1.0);
        assert_eq!(atomic_accessibility(&seq("C(a) & (D(a) -> B(a)) |- B(a)"), &any), tier::DIRECT);
        assert_eq!(atomic_accessibility(&seq("C(a) | B(a) |- B(a)"), &any), tier::UNDER_DISJUNCTION);
        assert_eq!(atomic_accessibility(&seq("forall x. B(x) |- B(a)"), &any), tier::UNDER_QUANTIFIER);
        // positive only through a double inversion is not accessible
        assert_eq!(atomic_accessibility(&seq("(B(a) -> C(a)) -> C(a) |- B(a)"), &any), -1.0);
        assert_eq!(atomic_accessibility(&seq("|- bot"), &any), 0.0);
    }

    #[test]
    fn absurdity_reachability() {
        assert!(absurdity_accessible(&[f("~C(a)")]));
        assert!(absurdity_accessible(&[f("A(a) -> bot")]));
        assert!(!absurdity_accessible(&[f("~A(a) -> B(a)"), f("C(a)")]));
    }

    #[test]
    fn major_complexity_examples() {
        let s = seq("A(a), A(a) -> B(a), (A(a) -> B(a)) -> C(a) |- C(a)");
        let a = Action::elim(RuleId::ImpElim, f("A(a) -> B(a)"));
        let b = Action::elim(RuleId::ImpElim, f("(A(a) -> B(a)) -> C(a)"));
        assert_eq!(major_complexity_score(&s, &a), 0.5);
        assert_eq!(major_complexity_score(&s, &b), 0.0);
        assert_eq!(major_complexity_score(&s, &Action::intro(RuleId::Hypothesis)), 0.0);
        let atoms = seq("A(a), B(a) |- A(a)");
        assert_eq!(major_complexity_score(&atoms, &Action::intro(RuleId::Hypothesis)), 0.0);
    }

    #[test]
    fn weighted_major_complexity_examples() {
        let s = seq("A(a) & B(a), A(a) -> B(a) |- B(a)");
        for m in ["A(a) & B(a)", "A(a) -> B(a)"] {
            let rule = if m.contains('&') { RuleId::AndElim } else { RuleId::ImpElim };
            assert_eq!(weighted_major_complexity_score(&s, &Action::elim(rule, f(m))), 0.0);
        }
        let s = seq("~(A(a) & B(a)), A(a) -> B(a) |- bot");
        let a = Action::elim(RuleId::ImpElim, f("A(a) -> B(a)"));
        assert_eq!(weighted_major_complexity_score(&s, &a), 0.75);
        assert_eq!(weighted_major_complexity_score(&s, &Action::intro(RuleId::AndIntro)), 0.0);
    }

    #[test]
    fn shortest_path_examples() {
        let s = seq("A(a), A(a) -> (B(a) | C(a)), ~C(a) |- B(a)");
        let g = build_graph(&s);
        let imp = Action::elim(RuleId::ImpElim, f("A(a) -> (B(a) | C(a))"));
        assert!((shortest_path_score(&s, &imp, &g) - 1.0 / 3.0).abs() < 1e-12);
        let neg = Action::elim(RuleId::NegElim, f("~C(a)"));
        assert_eq!(shortest_path_score(&s, &neg, &g), 0.0);

        let same = seq("A(a) & B(a) |- A(a) & B(a)");
        let g = build_graph(&same);
        let a = Action::elim(RuleId::AndElim, f("A(a) & B(a)"));
        assert_eq!(shortest_path_score(&same, &a, &g), 1.0);
    }

    #[test]
    fn feature_vectors() {
        let s = seq("A(a), A(a) -> B(a) |- B(a)");
        let g = LazyGraph::new(&s);
        let a = Action::elim(RuleId::ImpElim, f("A(a) -> B(a)"));
        assert_eq!(feature_vector(&s, &a, &FeatureSet::primitive(), &g).len(), 2);
        assert!(!g.is_built());
        let all = feature_vector(&s, &a, &FeatureSet::all(), &g);
        assert_eq!(all.len(), 6);
        for (v, id) in all.iter().zip(FeatureId::ALL) {
            let (lo, hi) = id.range();
            assert!(*v >= lo && *v <= hi, "{id:?} = {v}");
        }
        assert_eq!(all, feature_vector(&s, &a, &FeatureSet::all(), &g));
    }

    #[test]
    fn feature_set_strings() {
        let set: FeatureSet = "A,C".parse().unwrap();
        assert_eq!(set.len(), 4);
        assert!(set.contains(FeatureId::RuleOrdering));
        assert_eq!(set.to_string(), "A,C");
        assert_eq!("c, a".parse::<FeatureSet>().unwrap(), set);
        assert_eq!("".parse::<FeatureSet>().unwrap().to_string(), "none");
        assert!("E".parse::<FeatureSet>().is_err());
        assert!("AB".parse::<FeatureSet>().is_err());
    }
}
