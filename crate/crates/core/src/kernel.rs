//! Core inference rules and backward sub-problem generation.
//!
//! Eliminations are in parallelized form: the major premise is taken from the
//! premise set and consumed by the rule, and its components are assumed in
//! the sub-problem for the same conclusion.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::{Formula, Sequent, Term};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RuleId {
    Hypothesis,
    AndIntro,
    AndElim,
    OrIntroL,
    OrIntroR,
    OrElim,
    ImpIntro,
    ImpElim,
    NegIntro,
    NegElim,
    ForAllIntro,
    ForAllElim,
    ExistsIntro,
    ExistsElim,
}

impl RuleId {
    pub const ALL: [RuleId; 14] = [
        RuleId::Hypothesis,
        RuleId::AndIntro,
        RuleId::AndElim,
        RuleId::OrIntroL,
        RuleId::OrIntroR,
        RuleId::OrElim,
        RuleId::ImpIntro,
        RuleId::ImpElim,
        RuleId::NegIntro,
        RuleId::NegElim,
        RuleId::ForAllIntro,
        RuleId::ForAllElim,
        RuleId::ExistsIntro,
        RuleId::ExistsElim,
    ];

    pub fn is_elimination(self) -> bool {
        matches!(
            self,
            RuleId::AndElim
                | RuleId::OrElim
                | RuleId::ImpElim
                | RuleId::NegElim
                | RuleId::ForAllElim
                | RuleId::ExistsElim
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            RuleId::Hypothesis => "Hypothesis",
            RuleId::AndIntro => "AndIntro",
            RuleId::AndElim => "AndElim",
            RuleId::OrIntroL => "OrIntroL",
            RuleId::OrIntroR => "OrIntroR",
            RuleId::OrElim => "OrElim",
            RuleId::ImpIntro => "ImpIntro",
            RuleId::ImpElim => "ImpElim",
            RuleId::NegIntro => "NegIntro",
            RuleId::NegElim => "NegElim",
            RuleId::ForAllIntro => "ForAllIntro",
            RuleId::ForAllElim => "ForAllElim",
            RuleId::ExistsIntro => "ExistsIntro",
            RuleId::ExistsElim => "ExistsElim",
        }
    }

    /// Whether sub-problem `branch` may be closed by deriving `bot` in place
    /// of its stated conclusion.
    pub fn branch_accepts_absurdity(self, branch: usize) -> bool {
        match self {
            RuleId::OrElim => branch < 2,
            RuleId::ImpIntro => branch == 0,
            _ => false,
        }
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RuleId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RuleId::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| format!("unknown rule `{s}`"))
    }
}

/// A rule together with its major premise (eliminations only) and the term
/// used by quantifier rules.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Action {
    pub rule: RuleId,
    pub major: Option<Formula>,
    pub term: Option<Term>,
}

impl Action {
    pub fn intro(rule: RuleId) -> Self {
        Action {
            rule,
            major: None,
            term: None,
        }
    }

    pub fn elim(rule: RuleId, major: Formula) -> Self {
        Action {
            rule,
            major: Some(major),
            term: None,
        }
    }

    pub fn with_term(mut self, term: Term) -> Self {
        self.term = Some(term);
        self
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.rule)?;
        if let Some(m) = &self.major {
            write!(f, "[{m}]")?;
        }
        if let Some(t) = &self.term {
            write!(f, "@{t}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum KernelError {
    #[error("action {action} is not applicable to `{sequent}`")]
    Inapplicable { action: String, sequent: String },
}

/// Terms a quantifier rule may instantiate with: the sequent's constants in
/// order, then one fresh parameter.
pub fn instantiation_terms(s: &Sequent) -> Vec<Term> {
    let mut out: Vec<Term> = s.constants().into_iter().map(Term::Const).collect();
    out.push(s.fresh_parameter());
    out
}

/// Every action that could possibly produce the sequent's conclusion.
pub fn applicable_actions(s: &Sequent) -> Vec<Action> {
    let mut out = Vec::new();
    let goal = s.conclusion();
    if s.has_premise(goal) {
        out.push(Action::intro(RuleId::Hypothesis));
    }
    match goal {
        Formula::And(..) => out.push(Action::intro(RuleId::AndIntro)),
        Formula::Or(..) => {
            out.push(Action::intro(RuleId::OrIntroL));
            out.push(Action::intro(RuleId::OrIntroR));
        }
        Formula::Implies(..) => out.push(Action::intro(RuleId::ImpIntro)),
        Formula::Not(_) => out.push(Action::intro(RuleId::NegIntro)),
        Formula::ForAll(..) => {
            out.push(Action::intro(RuleId::ForAllIntro).with_term(s.fresh_parameter()))
        }
        Formula::Exists(..) => {
            for t in instantiation_terms(s) {
                out.push(Action::intro(RuleId::ExistsIntro).with_term(t));
            }
        }
        Formula::Atom(..) | Formula::Falsum => {}
    }
    for p in s.premises() {
        match p {
            Formula::And(..) => out.push(Action::elim(RuleId::AndElim, p.clone())),
            Formula::Or(..) => out.push(Action::elim(RuleId::OrElim, p.clone())),
            Formula::Implies(..) => out.push(Action::elim(RuleId::ImpElim, p.clone())),
            Formula::Not(_) if goal.is_falsum() => out.push(Action::elim(RuleId::NegElim, p.clone())),
            Formula::ForAll(..) => {
                for t in instantiation_terms(s) {
                    out.push(Action::elim(RuleId::ForAllElim, p.clone()).with_term(t));
                }
            }
            Formula::Exists(..) => {
                out.push(Action::elim(RuleId::ExistsElim, p.clone()).with_term(s.fresh_parameter()))
            }
            _ => {}
        }
    }
    out
}

/// Membership test for [`applicable_actions`] without enumerating.
pub fn is_applicable(s: &Sequent, a: &Action) -> bool {
    let goal = s.conclusion();
    let fresh_term = |t: &Option<Term>| t.as_ref() == Some(&s.fresh_parameter());
    let instance_term = |t: &Option<Term>| match t {
        Some(Term::Const(c)) => s.mentions_constant(c) || fresh_term(t),
        _ => false,
    };
    if a.rule.is_elimination() {
        let Some(major) = &a.major else { return false };
        if !s.has_premise(major) {
            return false;
        }
        return match (a.rule, major) {
            (RuleId::AndElim, Formula::And(..))
            | (RuleId::OrElim, Formula::Or(..))
            | (RuleId::ImpElim, Formula::Implies(..)) => a.term.is_none(),
            (RuleId::NegElim, Formula::Not(_)) => a.term.is_none() && goal.is_falsum(),
            (RuleId::ForAllElim, Formula::ForAll(..)) => instance_term(&a.term),
            (RuleId::ExistsElim, Formula::Exists(..)) => fresh_term(&a.term),
            _ => false,
        };
    }
    if a.major.is_some() {
        return false;
    }
    match (a.rule, goal) {
        (RuleId::Hypothesis, _) => a.term.is_none() && s.has_premise(goal),
        (RuleId::AndIntro, Formula::And(..))
        | (RuleId::OrIntroL, Formula::Or(..))
        | (RuleId::OrIntroR, Formula::Or(..))
        | (RuleId::ImpIntro, Formula::Implies(..))
        | (RuleId::NegIntro, Formula::Not(_)) => a.term.is_none(),
        (RuleId::ForAllIntro, Formula::ForAll(..)) => fresh_term(&a.term),
        (RuleId::ExistsIntro, Formula::Exists(..)) => instance_term(&a.term),
        _ => false,
    }
}

fn instantiate(var: &str, body: &Formula, term: &Term) -> Formula {
    body.substitute(var, term)
        .expect("instantiation terms are constants and cannot be captured")
}

/// Sub-problems produced by applying `a` backwards to `s`; all must be solved.
pub fn apply_action(s: &Sequent, a: &Action) -> Result<Vec<Sequent>, KernelError> {
    if !is_applicable(s, a) {
        return Err(KernelError::Inapplicable {
            action: a.to_string(),
            sequent: s.to_string(),
        });
    }
    let goal = s.conclusion().clone();
    let term = a.term.as_ref();
    let out = match (a.rule, &goal, a.major.as_ref()) {
        (RuleId::Hypothesis, _, _) => vec![],
        (RuleId::AndIntro, Formula::And(l, r), _) => {
            vec![s.with_conclusion((**l).clone()), s.with_conclusion((**r).clone())]
        }
        (RuleId::OrIntroL, Formula::Or(l, _), _) => vec![s.with_conclusion((**l).clone())],
        (RuleId::OrIntroR, Formula::Or(_, r), _) => vec![s.with_conclusion((**r).clone())],
        (RuleId::ImpIntro, Formula::Implies(l, r), _) => {
            vec![s.rework(None, &[(**l).clone()], (**r).clone())]
        }
        (RuleId::NegIntro, Formula::Not(c), _) => {
            vec![s.rework(None, &[(**c).clone()], Formula::Falsum)]
        }
        (RuleId::ForAllIntro, Formula::ForAll(v, body), _) => {
            vec![s.with_conclusion(instantiate(v, body, term.expect("checked")))]
        }
        (RuleId::ExistsIntro, Formula::Exists(v, body), _) => {
            vec![s.with_conclusion(instantiate(v, body, term.expect("checked")))]
        }
        (RuleId::AndElim, _, Some(m @ Formula::And(l, r))) => {
            vec![s.rework(Some(m), &[(**l).clone(), (**r).clone()], goal.clone())]
        }
        (RuleId::OrElim, _, Some(m @ Formula::Or(l, r))) => vec![
            s.rework(Some(m), &[(**l).clone()], goal.clone()),
            s.rework(Some(m), &[(**r).clone()], goal.clone()),
        ],
        (RuleId::ImpElim, _, Some(m @ Formula::Implies(l, r))) => vec![
            s.rework(Some(m), &[], (**l).clone()),
            s.rework(Some(m), &[(**r).clone()], goal.clone()),
        ],
        (RuleId::NegElim, _, Some(m @ Formula::Not(c))) => {
            vec![s.rework(Some(m), &[], (**c).clone())]
        }
        (RuleId::ForAllElim, _, Some(m @ Formula::ForAll(v, body)))
        | (RuleId::ExistsElim, _, Some(m @ Formula::Exists(v, body))) => {
            let inst = instantiate(v, body, term.expect("checked"));
            vec![s.rework(Some(m), &[inst], goal.clone())]
        }
        _ => unreachable!("is_applicable admitted {a} on {s}"),
    };
    Ok(out)
}

/// Assumptions discharged on each branch of `a` applied to `s`.
pub fn branch_discharges(s: &Sequent, a: &Action) -> Vec<Vec<Formula>> {
    let term = a.term.as_ref();
    match (a.rule, s.conclusion(), a.major.as_ref()) {
        (RuleId::ImpIntro, Formula::Implies(l, _), _) | (RuleId::NegIntro, Formula::Not(l), _) => {
            vec![vec![(**l).clone()]]
        }
        (RuleId::AndElim, _, Some(Formula::And(l, r))) => vec![vec![(**l).clone(), (**r).clone()]],
        (RuleId::OrElim, _, Some(Formula::Or(l, r))) => vec![vec![(**l).clone()], vec![(**r).clone()]],
        (RuleId::ImpElim, _, Some(Formula::Implies(_, r))) => vec![vec![], vec![(**r).clone()]],
        (RuleId::ForAllElim, _, Some(Formula::ForAll(v, body)))
        | (RuleId::ExistsElim, _, Some(Formula::Exists(v, body))) => {
            vec![vec![instantiate(v, body, term.expect("quantifier elimination carries a term"))]]
        }
        (RuleId::AndIntro, ..) => vec![vec![], vec![]],
        (RuleId::Hypothesis, ..) => vec![],
        _ => vec![vec![]],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_formula, parse_sequent};

    fn f(s: &str) -> Formula {
        parse_formula(s).unwrap()
    }

    fn seq(s: &str) -> Sequent {
        parse_sequent(s).unwrap()
    }

    #[test]
    fn hypothesis_offered_for_reflexive_sequent() {
        let acts = applicable_actions(&seq("A(a) |- A(a)"));
        assert!(acts.contains(&Action::intro(RuleId::Hypothesis)));
    }

    #[test]
    fn conjunction_goal_without_premises() {
        let acts = applicable_actions(&seq("|- A(a) & B(a)"));
        assert!(acts.contains(&Action::intro(RuleId::AndIntro)));
        assert!(acts.iter().all(|a| !a.rule.is_elimination()));
    }

    #[test]
    fn modus_ponens_candidates() {
        let acts = applicable_actions(&seq("A(a) -> B(a), A(a) |- B(a)"));
        assert!(acts.contains(&Action::elim(RuleId::ImpElim, f("A(a) -> B(a)"))));
        assert!(!acts.iter().any(|a| a.rule == RuleId::AndIntro));
    }

    #[test]
    fn falsum_goal_admits_no_introduction() {
        let acts = applicable_actions(&seq("~A(a) |- bot"));
        assert_eq!(acts, vec![Action::elim(RuleId::NegElim, f("~A(a)"))]);
        assert!(applicable_actions(&seq("~A(a) |- B(a)")).is_empty());
    }

    #[test]
    fn imp_elim_branches() {
        let s = seq("A(a), A(a) -> B(a) |- B(a)");
        let kids = apply_action(&s, &Action::elim(RuleId::ImpElim, f("A(a) -> B(a)"))).unwrap();
        assert_eq!(kids, vec![seq("A(a) |- A(a)"), seq("A(a), B(a) |- B(a)")]);
    }

    #[test]
    fn imp_intro_and_neg_elim_branches() {
        let kids = apply_action(&seq("|- A(a) -> A(a)"), &Action::intro(RuleId::ImpIntro)).unwrap();
        assert_eq!(kids, vec![seq("A(a) |- A(a)")]);

        let kids = apply_action(&seq("~A(a) |- bot"), &Action::elim(RuleId::NegElim, f("~A(a)"))).unwrap();
        assert_eq!(kids, vec![seq("|- A(a)")]);
    }

    #[test]
    fn or_elim_cases_consume_the_major() {
        let s = seq("A(a) | B(a), C(a) |- D(a)");
        let kids = apply_action(&s, &Action::elim(RuleId::OrElim, f("A(a) | B(a)"))).unwrap();
        assert_eq!(kids, vec![seq("C(a), A(a) |- D(a)"), seq("C(a), B(a) |- D(a)")]);
    }

    #[test]
    fn quantifier_terms() {
        let s = seq("forall x. P(x) |- P(b)");
        let acts = applicable_actions(&s);
        let terms: Vec<_> = acts.iter().filter_map(|a| a.term.clone()).collect();
        assert_eq!(terms, vec![Term::constant("b"), Term::constant("p0")]);
        let kids = apply_action(&s, &acts[0]).unwrap();
        assert_eq!(kids, vec![seq("P(b) |- P(b)")]);

        let s = seq("exists x. P(x) |- Q(a)");
        let acts = applicable_actions(&s);
        assert_eq!(
            acts,
            vec![Action::elim(RuleId::ExistsElim, f("exists x. P(x)")).with_term(Term::constant("p0"))]
        );
        // a non-fresh witness is refused
        let bad = Action::elim(RuleId::ExistsElim, f("exists x. P(x)")).with_term(Term::constant("a"));
        assert!(apply_action(&s, &bad).is_err());
    }

    #[test]
    fn inapplicable_actions_error() {
        let s = seq("A(a) |- B(a)");
        assert!(apply_action(&s, &Action::intro(RuleId::Hypothesis)).is_err());
        assert!(apply_action(&s, &Action::intro(RuleId::AndIntro)).is_err());
        assert!(apply_action(&s, &Action::elim(RuleId::AndElim, f("A(a) & B(a)"))).is_err());
    }

    #[test]
    fn children_differ_from_parent() {
        for text in [
            "A(a) & B(a) |- A(a)",
            "A(a) | B(a) |- A(a) | B(a)",
            "|- forall x. P(x) -> P(x)",
            "A(a) |- ~A(a)",
            "forall x. P(x) |- exists x. P(x)",
        ] {
            let s = seq(text);
            for a in applicable_actions(&s) {
                for child in apply_action(&s, &a).unwrap() {
                    assert_ne!(child, s, "{a} on {s}");
                }
            }
        }
    }
}
