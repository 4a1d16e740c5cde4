//! Monadic first-order formulas and sequents.
//!
//! Formulas are immutable trees with shared (`Arc`) children so that
//! sub-problems can copy premise sets cheaply during search.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub type Name = Arc<str>;

/// Identifiers starting with `u`..`z` are variables, `a`..`t` are constants.
pub fn is_variable_name(name: &str) -> bool {
    matches!(name.chars().next(), Some('u'..='z'))
}

pub fn is_constant_name(name: &str) -> bool {
    matches!(name.chars().next(), Some('a'..='t'))
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Const(Name),
    Var(Name),
}

impl Term {
    pub fn constant(name: &str) -> Self {
        debug_assert!(is_constant_name(name), "not a constant name: {name}");
        Term::Const(name.into())
    }

    pub fn var(name: &str) -> Self {
        debug_assert!(is_variable_name(name), "not a variable name: {name}");
        Term::Var(name.into())
    }

    pub fn name(&self) -> &str {
        match self {
            Term::Const(n) | Term::Var(n) => n,
        }
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for Term {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Term {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let name = String::deserialize(d)?;
        if is_variable_name(&name) {
            Ok(Term::Var(name.into()))
        } else if is_constant_name(&name) {
            Ok(Term::Const(name.into()))
        } else {
            Err(serde::de::Error::custom(format!("`{name}` is not a term")))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    Atom(Name, Term),
    Falsum,
    Not(Arc<Formula>),
    And(Arc<Formula>, Arc<Formula>),
    Or(Arc<Formula>, Arc<Formula>),
    Implies(Arc<Formula>, Arc<Formula>),
    ForAll(Name, Arc<Formula>),
    Exists(Name, Arc<Formula>),
}

/// Principal connective of a compound formula.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Connective {
    Not,
    And,
    Or,
    Implies,
    ForAll,
    Exists,
}

impl Connective {
    pub const ALL: [Connective; 6] = [
        Connective::Not,
        Connective::And,
        Connective::Or,
        Connective::Implies,
        Connective::ForAll,
        Connective::Exists,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            Connective::Not => "~",
            Connective::And => "&",
            Connective::Or => "|",
            Connective::Implies => "->",
            Connective::ForAll => "forall",
            Connective::Exists => "exists",
        }
    }

    pub fn from_symbol(s: &str) -> Option<Self> {
        Connective::ALL.into_iter().find(|c| c.symbol() == s)
    }

    /// Multiplier applied to the children's weighted complexity.
    fn weight(self) -> u64 {
        match self {
            Connective::And => 1,
            Connective::Or => 2,
            Connective::Not => 3,
            Connective::Implies => 4,
            Connective::ForAll | Connective::Exists => 5,
        }
    }
}

impl Formula {
    pub fn atom(pred: &str, arg: Term) -> Self {
        Formula::Atom(pred.into(), arg)
    }

    /// Atom over a constant, the common case in tests and generated problems.
    pub fn pred(pred: &str, constant: &str) -> Self {
        Formula::atom(pred, Term::constant(constant))
    }

    pub fn not(f: Formula) -> Self {
        Formula::Not(Arc::new(f))
    }

    pub fn and(l: Formula, r: Formula) -> Self {
        Formula::And(Arc::new(l), Arc::new(r))
    }

    pub fn or(l: Formula, r: Formula) -> Self {
        Formula::Or(Arc::new(l), Arc::new(r))
    }

    pub fn implies(l: Formula, r: Formula) -> Self {
        Formula::Implies(Arc::new(l), Arc::new(r))
    }

    pub fn forall(var: &str, body: Formula) -> Self {
        Formula::ForAll(var.into(), Arc::new(body))
    }

    pub fn exists(var: &str, body: Formula) -> Self {
        Formula::Exists(var.into(), Arc::new(body))
    }

    pub fn is_atomic(&self) -> bool {
        matches!(self, Formula::Atom(..))
    }

    pub fn is_falsum(&self) -> bool {
        matches!(self, Formula::Falsum)
    }

    pub fn connective(&self) -> Option<Connective> {
        match self {
            Formula::Atom(..) | Formula::Falsum => None,
            Formula::Not(_) => Some(Connective::Not),
            Formula::And(..) => Some(Connective::And),
            Formula::Or(..) => Some(Connective::Or),
            Formula::Implies(..) => Some(Connective::Implies),
            Formula::ForAll(..) => Some(Connective::ForAll),
            Formula::Exists(..) => Some(Connective::Exists),
        }
    }

    /// Immediate subformulas in left-to-right order.
    pub fn children(&self) -> Vec<&Formula> {
        match self {
            Formula::Atom(..) | Formula::Falsum => vec![],
            Formula::Not(c) | Formula::ForAll(_, c) | Formula::Exists(_, c) => vec![c],
            Formula::And(l, r) | Formula::Or(l, r) | Formula::Implies(l, r) => vec![l, r],
        }
    }

    /// Unweighted complexity: 0 for atoms and falsum, otherwise one plus the
    /// children's complexities.
    pub fn complexity(&self) -> u64 {
        match self.connective() {
            None => 0,
            Some(_) => 1 + self.children().iter().map(|c| c.complexity()).sum::<u64>(),
        }
    }

    /// Complexity with the children's sum scaled by a per-connective weight
    /// (1 for `&`, 2 for `|`, 3 for `~`, 4 for `->`, 5 for quantifiers).
    pub fn weighted_complexity(&self) -> u64 {
        match self.connective() {
            None => 0,
            Some(c) => {
                1 + c.weight()
                    * self
                        .children()
                        .iter()
                        .map(|c| c.weighted_complexity())
                        .sum::<u64>()
            }
        }
    }

    /// Number of nodes in the syntax tree.
    pub fn size(&self) -> usize {
        1 + self.children().iter().map(|c| c.size()).sum::<usize>()
    }

    pub fn free_vars(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<Name>, out: &mut BTreeSet<Name>) {
        match self {
            Formula::Atom(_, Term::Var(v)) => {
                if !bound.contains(v) {
                    out.insert(v.clone());
                }
            }
            Formula::ForAll(v, body) | Formula::Exists(v, body) => {
                bound.push(v.clone());
                body.collect_free(bound, out);
                bound.pop();
            }
            _ => {
                for c in self.children() {
                    c.collect_free(bound, out);
                }
            }
        }
    }

    pub fn is_sentence(&self) -> bool {
        self.free_vars().is_empty()
    }

    pub fn constants(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.collect_constants(&mut out);
        out
    }

    fn collect_constants(&self, out: &mut BTreeSet<Name>) {
        if let Formula::Atom(_, Term::Const(c)) = self {
            out.insert(c.clone());
        }
        for c in self.children() {
            c.collect_constants(out);
        }
    }

    pub fn predicates(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.visit(&mut |f| {
            if let Formula::Atom(p, _) = f {
                out.insert(p.clone());
            }
        });
        out
    }

    /// Pre-order traversal.
    pub fn visit<'a>(&'a self, f: &mut impl FnMut(&'a Formula)) {
        f(self);
        for c in self.children() {
            c.visit(f);
        }
    }

    pub fn mentions_constant(&self, name: &str) -> bool {
        match self {
            Formula::Atom(_, Term::Const(c)) => &**c == name,
            _ => self.children().iter().any(|c| c.mentions_constant(name)),
        }
    }

    /// Replace every free occurrence of `var` by `term`.
    pub fn substitute(&self, var: &str, term: &Term) -> Result<Formula, SubstError> {
        match self {
            Formula::Atom(p, Term::Var(v)) if &**v == var => Ok(Formula::Atom(p.clone(), term.clone())),
            Formula::Atom(..) | Formula::Falsum => Ok(self.clone()),
            Formula::Not(c) => Ok(Formula::Not(Arc::new(c.substitute(var, term)?))),
            Formula::And(l, r) => Ok(Formula::And(
                Arc::new(l.substitute(var, term)?),
                Arc::new(r.substitute(var, term)?),
            )),
            Formula::Or(l, r) => Ok(Formula::Or(
                Arc::new(l.substitute(var, term)?),
                Arc::new(r.substitute(var, term)?),
            )),
            Formula::Implies(l, r) => Ok(Formula::Implies(
                Arc::new(l.substitute(var, term)?),
                Arc::new(r.substitute(var, term)?),
            )),
            Formula::ForAll(v, body) | Formula::Exists(v, body) => {
                if &**v == var || !body.free_vars().contains(var) {
                    return Ok(self.clone());
                }
                if let Term::Var(t) = term {
                    if t == v {
                        return Err(SubstError::Capture {
                            var: var.to_string(),
                            binder: v.to_string(),
                        });
                    }
                }
                let body = Arc::new(body.substitute(var, term)?);
                Ok(match self {
                    Formula::ForAll(..) => Formula::ForAll(v.clone(), body),
                    _ => Formula::Exists(v.clone(), body),
                })
            }
        }
    }

    /// Rename bound variables to `v0`, `v1`, ... by binder depth so that
    /// alpha-equivalent sentences become identical.
    pub fn canonicalize(&self) -> Formula {
        self.canon(&mut Vec::new())
    }

    fn canon(&self, env: &mut Vec<(Name, Name)>) -> Formula {
        match self {
            Formula::Atom(p, Term::Var(v)) => {
                let renamed = env
                    .iter()
                    .rev()
                    .find(|(orig, _)| orig == v)
                    .map(|(_, new)| new.clone())
                    .unwrap_or_else(|| v.clone());
                Formula::Atom(p.clone(), Term::Var(renamed))
            }
            Formula::Atom(..) | Formula::Falsum => self.clone(),
            Formula::Not(c) => Formula::Not(Arc::new(c.canon(env))),
            Formula::And(l, r) => Formula::And(Arc::new(l.canon(env)), Arc::new(r.canon(env))),
            Formula::Or(l, r) => Formula::Or(Arc::new(l.canon(env)), Arc::new(r.canon(env))),
            Formula::Implies(l, r) => {
                Formula::Implies(Arc::new(l.canon(env)), Arc::new(r.canon(env)))
            }
            Formula::ForAll(v, body) | Formula::Exists(v, body) => {
                let new: Name = format!("v{}", env.len()).into();
                env.push((v.clone(), new.clone()));
                let body = Arc::new(body.canon(env));
                env.pop();
                match self {
                    Formula::ForAll(..) => Formula::ForAll(new, body),
                    _ => Formula::Exists(new, body),
                }
            }
        }
    }

    fn needs_parens_as_operand(&self) -> bool {
        !matches!(self, Formula::Atom(..) | Formula::Falsum | Formula::Not(_))
    }

    fn fmt_operand(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.needs_parens_as_operand() {
            write!(f, "({self})")
        } else {
            write!(f, "{self}")
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SubstError {
    #[error("substituting for `{var}` would capture under binder `{binder}`")]
    Capture { var: String, binder: String },
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Atom(p, t) => write!(f, "{p}({t})"),
            Formula::Falsum => f.write_str("bot"),
            Formula::Not(c) => {
                f.write_str("~")?;
                c.fmt_operand(f)
            }
            Formula::And(l, r) | Formula::Or(l, r) | Formula::Implies(l, r) => {
                let op = self.connective().map(Connective::symbol).unwrap_or_default();
                l.fmt_operand(f)?;
                write!(f, " {op} ")?;
                r.fmt_operand(f)
            }
            Formula::ForAll(v, body) => write!(f, "forall {v}. {body}"),
            Formula::Exists(v, body) => write!(f, "exists {v}. {body}"),
        }
    }
}

impl Serialize for Formula {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Formula {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        crate::syntax::parse_formula(&text).map_err(serde::de::Error::custom)
    }
}

/// A problem state: premises and the sought conclusion.
///
/// Premises keep their insertion order but never repeat; a repeated
/// assumption adds nothing in this calculus.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Sequent {
    premises: Vec<Formula>,
    conclusion: Formula,
}

impl Sequent {
    pub fn new(premises: impl IntoIterator<Item = Formula>, conclusion: Formula) -> Self {
        let mut out = Vec::new();
        for p in premises {
            if !out.contains(&p) {
                out.push(p);
            }
        }
        Sequent {
            premises: out,
            conclusion,
        }
    }

    pub fn premises(&self) -> &[Formula] {
        &self.premises
    }

    pub fn conclusion(&self) -> &Formula {
        &self.conclusion
    }

    pub fn has_premise(&self, f: &Formula) -> bool {
        self.premises.contains(f)
    }

    pub fn premise_index(&self, f: &Formula) -> Option<usize> {
        self.premises.iter().position(|p| p == f)
    }

    pub fn with_conclusion(&self, conclusion: Formula) -> Sequent {
        Sequent {
            premises: self.premises.clone(),
            conclusion,
        }
    }

    /// Same conclusion, `removed` dropped and `added` appended.
    pub fn rework(&self, removed: Option<&Formula>, added: &[Formula], conclusion: Formula) -> Sequent {
        let kept = self
            .premises
            .iter()
            .filter(|p| Some(*p) != removed)
            .cloned();
        Sequent::new(kept.chain(added.iter().cloned()), conclusion)
    }

    pub fn constants(&self) -> BTreeSet<Name> {
        let mut out = self.conclusion.constants();
        for p in &self.premises {
            out.extend(p.constants());
        }
        out
    }

    pub fn mentions_constant(&self, name: &str) -> bool {
        self.conclusion.mentions_constant(name)
            || self.premises.iter().any(|p| p.mentions_constant(name))
    }

    /// First name of the form `p0`, `p1`, ... not occurring in the sequent.
    pub fn fresh_parameter(&self) -> Term {
        (0..)
            .map(|i| format!("p{i}"))
            .find(|n| !self.mentions_constant(n))
            .map(|n| Term::Const(n.into()))
            .expect("unbounded name supply")
    }

    pub fn is_closed(&self) -> bool {
        self.conclusion.is_sentence() && self.premises.iter().all(Formula::is_sentence)
    }

    /// Order-insensitive identity modulo bound-variable renaming.
    pub fn key(&self) -> SequentKey {
        let mut premises: Vec<Formula> = self.premises.iter().map(Formula::canonicalize).collect();
        premises.sort();
        premises.dedup();
        SequentKey {
            premises,
            conclusion: self.conclusion.canonicalize(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SequentKey {
    pub premises: Vec<Formula>,
    pub conclusion: Formula,
}

impl fmt::Display for Sequent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, p) in self.premises.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{p}")?;
        }
        if self.premises.is_empty() {
            write!(f, "|- {}", self.conclusion)
        } else {
            write!(f, " |- {}", self.conclusion)
        }
    }
}

impl Serialize for Sequent {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Sequent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        crate::syntax::parse_sequent(&text).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(p: &str) -> Formula {
        Formula::pred(p, "a")
    }

    #[test]
    fn complexity_cases() {
        assert_eq!(a("P").complexity(), 0);
        assert_eq!(Formula::Falsum.complexity(), 0);
        assert_eq!(Formula::implies(a("A"), a("B")).complexity(), 1);
        let f = Formula::implies(Formula::and(a("A"), a("B")), Formula::not(a("C")));
        assert_eq!(f.complexity(), 3);
    }

    #[test]
    fn weighted_complexity_cases() {
        assert_eq!(Formula::Falsum.weighted_complexity(), 0);
        assert_eq!(Formula::not(Formula::and(a("A"), a("B"))).weighted_complexity(), 4);
        let all = Formula::forall("x", Formula::atom("P", Term::var("x")));
        assert_eq!(all.weighted_complexity(), 1);
        // 1 + 4 * (1 + 2 * 0 + 0)
        let f = Formula::implies(Formula::or(a("A"), a("B")), a("C"));
        assert_eq!(f.weighted_complexity(), 5);
    }

    #[test]
    fn substitution() {
        let px = Formula::atom("P", Term::var("x"));
        assert_eq!(px.substitute("x", &Term::constant("a")).unwrap(), a("P"));

        let all = Formula::forall("x", px.clone());
        assert_eq!(all.substitute("x", &Term::constant("a")).unwrap(), all);

        let imp = Formula::implies(px.clone(), Formula::atom("Q", Term::var("x")));
        assert_eq!(
            imp.substitute("x", &Term::constant("b")).unwrap(),
            Formula::implies(Formula::pred("P", "b"), Formula::pred("Q", "b"))
        );
    }

    #[test]
    fn substitution_detects_capture() {
        // forall y. P(x) -> Q(y), substituting y for x
        let f = Formula::forall(
            "y",
            Formula::implies(
                Formula::atom("P", Term::var("x")),
                Formula::atom("Q", Term::var("y")),
            ),
        );
        assert!(matches!(
            f.substitute("x", &Term::var("y")),
            Err(SubstError::Capture { .. })
        ));
    }

    #[test]
    fn canonical_names_follow_binder_depth() {
        let py = Formula::forall("y", Formula::atom("P", Term::var("y")));
        let px = Formula::forall("x", Formula::atom("P", Term::var("x")));
        assert_eq!(py.canonicalize(), px.canonicalize());
        assert_eq!(
            px.canonicalize(),
            Formula::forall("v0", Formula::atom("P", Term::var("v0")))
        );
        assert_eq!(a("A").canonicalize(), a("A"));

        let nested = Formula::forall(
            "x",
            Formula::exists(
                "y",
                Formula::implies(
                    Formula::atom("P", Term::var("x")),
                    Formula::atom("Q", Term::var("y")),
                ),
            ),
        );
        let want = Formula::forall(
            "v0",
            Formula::exists(
                "v1",
                Formula::implies(
                    Formula::atom("P", Term::var("v0")),
                    Formula::atom("Q", Term::var("v1")),
                ),
            ),
        );
        assert_eq!(nested.canonicalize(), want);
    }

    #[test]
    fn shadowed_binder_canonicalizes_inner_occurrence() {
        // forall x. exists x. P(x): the occurrence belongs to the inner binder
        let f = Formula::forall("x", Formula::exists("x", Formula::atom("P", Term::var("x"))));
        let want = Formula::forall("v0", Formula::exists("v1", Formula::atom("P", Term::var("v1"))));
        assert_eq!(f.canonicalize(), want);
    }

    #[test]
    fn display_parenthesizes_compound_operands() {
        assert_eq!(a("A").to_string(), "A(a)");
        assert_eq!(Formula::not(a("C")).to_string(), "~C(a)");
        let f = Formula::implies(a("A"), Formula::or(a("B"), a("C")));
        assert_eq!(f.to_string(), "A(a) -> (B(a) | C(a))");
        let q = Formula::not(Formula::forall("x", Formula::atom("P", Term::var("x"))));
        assert_eq!(q.to_string(), "~(forall x. P(x))");
    }

    #[test]
    fn sequent_dedupes_and_finds_fresh_parameters() {
        let s = Sequent::new([a("A"), a("A"), Formula::pred("B", "p0")], a("C"));
        assert_eq!(s.premises().len(), 2);
        assert_eq!(s.fresh_parameter(), Term::constant("p1"));
        assert_eq!(s.to_string(), "A(a), B(p0) |- C(a)");
        assert_eq!(Sequent::new([], a("C")).to_string(), "|- C(a)");
    }
}
