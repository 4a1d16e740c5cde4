//! Proof trees and an independent checker.
//!
//! The checker does not reuse the search-side rule tables: every schema is
//! restated here against the node's own conclusion, major and term. A node's
//! premise list is its available context; what a proof actually depends on
//! is its set of open assumptions, computed bottom-up.

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::formula::{Formula, Sequent, Term};
use crate::kernel::RuleId;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Proof {
    pub sequent: Sequent,
    pub rule: RuleId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub major: Option<Formula>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub term: Option<Term>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub discharged: Vec<Formula>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<Proof>,
}

impl Proof {
    pub fn hypothesis(sequent: Sequent) -> Self {
        Proof {
            sequent,
            rule: RuleId::Hypothesis,
            major: None,
            term: None,
            discharged: vec![],
            children: vec![],
        }
    }

    pub fn conclusion(&self) -> &Formula {
        self.sequent.conclusion()
    }

    /// Inference steps, i.e. nodes other than hypothesis leaves.
    pub fn length(&self) -> usize {
        let own = usize::from(self.rule != RuleId::Hypothesis);
        own + self.children.iter().map(Proof::length).sum::<usize>()
    }

    /// Assumptions the proof depends on after discharges.
    pub fn open_assumptions(&self) -> BTreeSet<Formula> {
        let mut sink = Vec::new();
        check_node(self, &mut Vec::new(), &mut sink)
    }

    pub fn uses(&self, f: &Formula) -> bool {
        self.open_assumptions().contains(f)
    }

    /// Indented one-node-per-line rendering.
    pub fn render(&self) -> String {
        let mut out = String::new();
        self.render_into(&mut out, 0);
        out
    }

    fn render_into(&self, out: &mut String, depth: usize) {
        let _ = write!(out, "{:indent$}{}: {}", "", self.rule, self.conclusion(), indent = depth * 2);
        if let Some(m) = &self.major {
            let _ = write!(out, "  [major: {m}]");
        }
        if let Some(t) = &self.term {
            let _ = write!(out, "  [term: {t}]");
        }
        out.push('\n');
        for c in &self.children {
            c.render_into(out, depth + 1);
        }
    }
}

impl fmt::Display for Proof {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ViolationKind {
    HypothesisNotAssumed(Formula),
    WrongArity { expected: usize, found: usize },
    RuleDoesNotFit(String),
    ConclusionMismatch { expected: Formula, found: Formula },
    MissingMajor,
    UnexpectedMajor,
    MajorNotStandingProud(Formula),
    VacuousDischarge(Formula),
    BadTerm(String),
    NotFresh(String),
    DischargeRecord,
    UnavailableAssumption(Formula),
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ViolationKind::HypothesisNotAssumed(a) => write!(f, "hypothesis `{a}` is not an available premise"),
            ViolationKind::WrongArity { expected, found } => {
                write!(f, "expected {expected} subproofs, found {found}")
            }
            ViolationKind::RuleDoesNotFit(msg) => write!(f, "rule does not fit: {msg}"),
            ViolationKind::ConclusionMismatch { expected, found } => {
                write!(f, "subproof concludes `{found}`, expected `{expected}`")
            }
            ViolationKind::MissingMajor => f.write_str("elimination without a major premise"),
            ViolationKind::UnexpectedMajor => f.write_str("non-elimination rule carries a major premise"),
            ViolationKind::MajorNotStandingProud(m) => write!(f, "major not standing proud: `{m}`"),
            ViolationKind::VacuousDischarge(a) => write!(f, "vacuous discharge of `{a}`"),
            ViolationKind::BadTerm(msg) => write!(f, "bad instantiation: {msg}"),
            ViolationKind::NotFresh(p) => write!(f, "parameter `{p}` is not fresh"),
            ViolationKind::DischargeRecord => f.write_str("recorded discharges do not match the rule"),
            ViolationKind::UnavailableAssumption(a) => {
                write!(f, "depends on `{a}`, which is not among the node's premises")
            }
        }
    }
}

/// A failed check, located by child indices from the root.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub path: Vec<usize>,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "at root: {}", self.kind)
        } else {
            let path: Vec<String> = self.path.iter().map(usize::to_string).collect();
            write!(f, "at {}: {}", path.join("."), self.kind)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Valid,
    Invalid(Vec<Violation>),
}

impl Verdict {
    pub fn is_valid(&self) -> bool {
        matches!(self, Verdict::Valid)
    }
}

pub fn check_proof(p: &Proof) -> Verdict {
    let mut violations = Vec::new();
    check_node(p, &mut Vec::new(), &mut violations);
    if violations.is_empty() {
        Verdict::Valid
    } else {
        Verdict::Invalid(violations)
    }
}

/// Valid, concludes the sequent's conclusion, and depends only on its premises.
pub fn proves(p: &Proof, s: &Sequent) -> bool {
    check_proof(p).is_valid()
        && p.conclusion() == s.conclusion()
        && p.open_assumptions().iter().all(|a| s.has_premise(a))
}

pub fn proof_length(p: &Proof) -> usize {
    p.length()
}

struct Ctx<'a> {
    node: &'a Proof,
    path: &'a [usize],
    out: &'a mut Vec<Violation>,
}

impl Ctx<'_> {
    fn flag(&mut self, kind: ViolationKind) {
        self.out.push(Violation {
            path: self.path.to_vec(),
            kind,
        });
    }

    fn expect_conclusion(&mut self, child: &Proof, expected: &Formula) {
        if child.conclusion() != expected {
            self.flag(ViolationKind::ConclusionMismatch {
                expected: expected.clone(),
                found: child.conclusion().clone(),
            });
        }
    }

    fn require_used(&mut self, open: &BTreeSet<Formula>, f: &Formula) {
        if !open.contains(f) {
            self.flag(ViolationKind::VacuousDischarge(f.clone()));
        }
    }

    fn misfit(&mut self, msg: &str) {
        let rule = self.node.rule;
        let concl = self.node.conclusion().clone();
        self.flag(ViolationKind::RuleDoesNotFit(format!("{rule} cannot conclude `{concl}`: {msg}")));
    }
}

fn minus(mut set: BTreeSet<Formula>, remove: &[&Formula]) -> BTreeSet<Formula> {
    for r in remove {
        set.remove(*r);
    }
    set
}

fn instance(var: &str, body: &Formula, term: &Term) -> Option<Formula> {
    body.substitute(var, term).ok()
}

/// The discharge-bookkeeping reading for conjunction elimination: both
/// conjuncts are assumed and at least one must be used.
fn and_elim_discharge_ok(open: &BTreeSet<Formula>, left: &Formula, right: &Formula) -> bool {
    open.contains(left) || open.contains(right)
}

/// Checks one node and its subtree, returning the node's open assumptions.
fn check_node(p: &Proof, path: &mut Vec<usize>, out: &mut Vec<Violation>) -> BTreeSet<Formula> {
    let mut opens: Vec<BTreeSet<Formula>> = Vec::with_capacity(p.children.len());
    for (i, c) in p.children.iter().enumerate() {
        path.push(i);
        opens.push(check_node(c, path, out));
        path.pop();
    }
    let mut ctx = Ctx { node: p, path, out };
    let concl = p.conclusion();
    let rule = p.rule;

    let expected_arity = match rule {
        RuleId::Hypothesis => 0,
        RuleId::AndIntro | RuleId::OrElim | RuleId::ImpElim => 2,
        _ => 1,
    };

    // Major-premise discipline.
    let mut kids: Vec<(&Proof, BTreeSet<Formula>)> = p.children.iter().zip(opens).collect();
    if rule.is_elimination() {
        match &p.major {
            None => ctx.flag(ViolationKind::MissingMajor),
            Some(m) => {
                let derived_major = kids.len() == expected_arity + 1 && kids[0].0.conclusion() == m;
                if derived_major {
                    ctx.flag(ViolationKind::MajorNotStandingProud(m.clone()));
                    kids.remove(0);
                } else if !p.sequent.has_premise(m) {
                    ctx.flag(ViolationKind::MajorNotStandingProud(m.clone()));
                }
            }
        }
    } else if p.major.is_some() {
        ctx.flag(ViolationKind::UnexpectedMajor);
    }

    if kids.len() != expected_arity {
        ctx.flag(ViolationKind::WrongArity {
            expected: expected_arity,
            found: kids.len(),
        });
        // Nothing more can be said about a malformed node.
        let mut open: BTreeSet<Formula> = kids.into_iter().flat_map(|(_, o)| o).collect();
        open.extend(p.major.clone());
        return open;
    }

    let mut discharged: Vec<Formula> = Vec::new();
    let open: BTreeSet<Formula> = match rule {
        RuleId::Hypothesis => {
            if !p.sequent.has_premise(concl) {
                ctx.flag(ViolationKind::HypothesisNotAssumed(concl.clone()));
            }
            BTreeSet::from([concl.clone()])
        }
        RuleId::AndIntro => {
            if let Formula::And(l, r) = concl {
                ctx.expect_conclusion(kids[0].0, l);
                ctx.expect_conclusion(kids[1].0, r);
            } else {
                ctx.misfit("not a conjunction");
            }
            kids.into_iter().flat_map(|(_, o)| o).collect()
        }
        RuleId::OrIntroL | RuleId::OrIntroR => {
            if let Formula::Or(l, r) = concl {
                let side = if rule == RuleId::OrIntroL { l } else { r };
                ctx.expect_conclusion(kids[0].0, side);
            } else {
                ctx.misfit("not a disjunction");
            }
            kids.remove(0).1
        }
        RuleId::ImpIntro => {
            let (child, open) = kids.remove(0);
            if let Formula::Implies(l, r) = concl {
                if child.conclusion() != &**r && !child.conclusion().is_falsum() {
                    ctx.expect_conclusion(child, r);
                }
                ctx.require_used(&open, l);
                discharged.push((**l).clone());
                minus(open, &[l])
            } else {
                ctx.misfit("not a conditional");
                open
            }
        }
        RuleId::NegIntro => {
            let (child, open) = kids.remove(0);
            if let Formula::Not(l) = concl {
                ctx.expect_conclusion(child, &Formula::Falsum);
                ctx.require_used(&open, l);
                discharged.push((**l).clone());
                minus(open, &[l])
            } else {
                ctx.misfit("not a negation");
                open
            }
        }
        RuleId::ForAllIntro => {
            let (child, open) = kids.remove(0);
            match (concl, &p.term) {
                (Formula::ForAll(v, body), Some(t @ Term::Const(name))) => {
                    if let Some(inst) = instance(v, body, t) {
                        ctx.expect_conclusion(child, &inst);
                    }
                    if concl.mentions_constant(name) || open.iter().any(|a| a.mentions_constant(name)) {
                        ctx.flag(ViolationKind::NotFresh(name.to_string()));
                    }
                }
                (Formula::ForAll(..), _) => ctx.flag(ViolationKind::BadTerm("missing parameter".into())),
                _ => ctx.misfit("not a universal"),
            }
            open
        }
        RuleId::ExistsIntro => {
            let (child, open) = kids.remove(0);
            match (concl, &p.term) {
                (Formula::Exists(v, body), Some(t @ Term::Const(_))) => {
                    if let Some(inst) = instance(v, body, t) {
                        ctx.expect_conclusion(child, &inst);
                    }
                }
                (Formula::Exists(..), _) => ctx.flag(ViolationKind::BadTerm("missing witness".into())),
                _ => ctx.misfit("not an existential"),
            }
            open
        }
        RuleId::AndElim
        | RuleId::OrElim
        | RuleId::ImpElim
        | RuleId::NegElim
        | RuleId::ForAllElim
        | RuleId::ExistsElim => {
            let Some(major) = p.major.clone() else {
                return kids.into_iter().flat_map(|(_, o)| o).collect();
            };
            let mut open = check_elim(&mut ctx, &major, kids, &mut discharged);
            open.insert(major);
            open
        }
    };

    let mut recorded = p.discharged.clone();
    recorded.sort();
    discharged.sort();
    if recorded != discharged {
        ctx.flag(ViolationKind::DischargeRecord);
    }
    for a in &open {
        if !p.sequent.has_premise(a) {
            ctx.flag(ViolationKind::UnavailableAssumption(a.clone()));
        }
    }
    open
}

fn check_elim(
    ctx: &mut Ctx<'_>,
    major: &Formula,
    mut kids: Vec<(&Proof, BTreeSet<Formula>)>,
    discharged: &mut Vec<Formula>,
) -> BTreeSet<Formula> {
    let p = ctx.node;
    let concl = p.conclusion();
    match (p.rule, major) {
        (RuleId::AndElim, Formula::And(l, r)) => {
            let (child, open) = kids.remove(0);
            ctx.expect_conclusion(child, concl);
            if !and_elim_discharge_ok(&open, l, r) {
                ctx.flag(ViolationKind::VacuousDischarge(major.clone()));
            }
            discharged.extend([(**l).clone(), (**r).clone()]);
            minus(open, &[l, r])
        }
        (RuleId::OrElim, Formula::Or(l, r)) => {
            let (second, open_r) = kids.remove(1);
            let (first, open_l) = kids.remove(0);
            for case in [first, second] {
                let c = case.conclusion();
                if c != concl && !c.is_falsum() {
                    ctx.expect_conclusion(case, concl);
                }
            }
            if !concl.is_falsum() && first.conclusion() != concl && second.conclusion() != concl {
                ctx.misfit("both cases end in bot, so the conclusion must be bot");
            }
            ctx.require_used(&open_l, l);
            ctx.require_used(&open_r, r);
            discharged.extend([(**l).clone(), (**r).clone()]);
            let mut open = minus(open_l, &[l]);
            open.extend(minus(open_r, &[r]));
            open
        }
        (RuleId::ImpElim, Formula::Implies(l, r)) => {
            let (main, open_main) = kids.remove(1);
            let (minor, open_minor) = kids.remove(0);
            ctx.expect_conclusion(minor, l);
            ctx.expect_conclusion(main, concl);
            ctx.require_used(&open_main, r);
            discharged.push((**r).clone());
            let mut open = open_minor;
            open.extend(minus(open_main, &[r]));
            open
        }
        (RuleId::NegElim, Formula::Not(c)) => {
            let (minor, open) = kids.remove(0);
            if !concl.is_falsum() {
                ctx.misfit("negation elimination concludes bot");
            }
            ctx.expect_conclusion(minor, c);
            open
        }
        (RuleId::ForAllElim, Formula::ForAll(v, body)) => {
            let (child, open) = kids.remove(0);
            ctx.expect_conclusion(child, concl);
            match p.term.as_ref().and_then(|t| instance(v, body, t).map(|i| (t, i))) {
                Some((Term::Const(_), inst)) => {
                    ctx.require_used(&open, &inst);
                    discharged.push(inst.clone());
                    minus(open, &[&inst])
                }
                _ => {
                    ctx.flag(ViolationKind::BadTerm("universal elimination needs a constant".into()));
                    open
                }
            }
        }
        (RuleId::ExistsElim, Formula::Exists(v, body)) => {
            let (child, open) = kids.remove(0);
            ctx.expect_conclusion(child, concl);
            match &p.term {
                Some(t @ Term::Const(name)) => {
                    let Some(inst) = instance(v, body, t) else {
                        return open;
                    };
                    ctx.require_used(&open, &inst);
                    discharged.push(inst.clone());
                    let rest = minus(open, &[&inst]);
                    if concl.mentions_constant(name)
                        || major.mentions_constant(name)
                        || rest.iter().any(|a| a.mentions_constant(name))
                    {
                        ctx.flag(ViolationKind::NotFresh(name.to_string()));
                    }
                    rest
                }
                _ => {
                    ctx.flag(ViolationKind::BadTerm("existential elimination needs a parameter".into()));
                    open
                }
            }
        }
        _ => {
            ctx.misfit(&format!("major `{major}` has the wrong shape"));
            kids.into_iter().flat_map(|(_, o)| o).collect()
        }
    }
}
