//! Uncertain default rules (`a → b` with strength `1 - ε`) as mass functions,
//! and two-step recombination of conflicting evidence.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::evidence::{render_subset, CombineResult, MassFunction};
use crate::frames::{Frame, ProductFrame, Subset};
use crate::scalars::Scalar;

/// `antecedent → consequent` (or `→ ¬consequent` when `negated`), held with
/// degree of support `strength`.
#[derive(Debug, Clone)]
pub struct Rule {
    antecedent: String,
    consequent: Subset,
    negated: bool,
    strength: Scalar,
}

impl Rule {
    pub fn new(
        antecedent: impl Into<String>,
        consequent: Subset,
        negated: bool,
        strength: Scalar,
    ) -> Result<Self> {
        if consequent.is_empty() || consequent.is_full() {
            return Err(Error::InvalidRule(
                "consequent must be a non-empty proper subset".into(),
            ));
        }
        if strength.is_zero() || !strength.in_unit_interval() {
            return Err(Error::InvalidRule(format!(
                "strength {strength} is outside (0, 1]"
            )));
        }
        Ok(Rule {
            antecedent: antecedent.into(),
            consequent,
            negated,
            strength,
        })
    }

    pub fn antecedent(&self) -> &str {
        &self.antecedent
    }

    pub fn consequent(&self) -> Subset {
        self.consequent
    }

    pub fn negated(&self) -> bool {
        self.negated
    }

    pub fn strength(&self) -> &Scalar {
        &self.strength
    }

    /// The set the rule argues for: `C`, or `Cᶜ` for a negated rule.
    pub fn asserted(&self) -> Subset {
        if self.negated {
            self.consequent.complement()
        } else {
            self.consequent
        }
    }
}

/// How a rule is turned into a mass function.
#[derive(Debug, Clone)]
pub enum Strategy {
    /// Negative evidence goes on the complement: `m(Cᶜ) = s`, `m(Ω) = 1 - s`.
    NegativeComplement,
    /// Positive evidence goes on the outcome: `m(C) = s`, `m(Ω) = 1 - s`.
    PositiveDirect,
    /// Dependent-rule encoding over `V × Ω`: `m((B × Aᶜ)ᶜ) = s`,
    /// `m(V × Ω) = 1 - s`, where `B` is the antecedent set in the left factor.
    DuboisPrade { product: ProductFrame, antecedent: Subset },
    /// Reads `p → ¬C (s)` as `m(C) = 1 - s`, `m(Ω) = s`.
    SubclassPositive,
    /// Restricts the asserted set to the antecedent class:
    /// `m(asserted ∩ within) = s`, `m(Ω) = 1 - s`.
    PartialConditioning { within: Subset },
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::NegativeComplement => "NegativeComplement",
            Strategy::PositiveDirect => "PositiveDirect",
            Strategy::DuboisPrade { .. } => "DuboisPrade",
            Strategy::SubclassPositive => "SubclassPositive",
            Strategy::PartialConditioning { .. } => "PartialConditioning",
        }
    }

    fn mismatch(&self, reason: impl Into<String>) -> Error {
        Error::StrategyMismatch {
            strategy: self.name(),
            reason: reason.into(),
        }
    }
}

pub fn interpret_rule(rule: &Rule, frame: &Frame, strategy: &Strategy) -> Result<MassFunction> {
    let s = rule.strength.clone();
    let plain = matches!(
        strategy,
        Strategy::NegativeComplement | Strategy::PositiveDirect | Strategy::SubclassPositive
    );
    if plain && !frame.owns(rule.consequent) {
        return Err(strategy.mismatch("consequent is not a subset of the target frame"));
    }
    match strategy {
        Strategy::NegativeComplement => {
            if !rule.negated {
                return Err(strategy.mismatch("rule is not negative"));
            }
            MassFunction::simple_support(frame, rule.consequent.complement(), s)
        }
        Strategy::PositiveDirect => {
            if rule.negated {
                return Err(strategy.mismatch("rule is negative"));
            }
            MassFunction::simple_support(frame, rule.consequent, s)
        }
        Strategy::SubclassPositive => {
            if !rule.negated {
                return Err(strategy.mismatch("rule is not negative"));
            }
            MassFunction::simple_support(frame, rule.consequent, s.complement())
        }
        Strategy::PartialConditioning { within } => {
            frame
                .check(*within)
                .map_err(|_| strategy.mismatch("conditioning class is not in the target frame"))?;
            if !frame.owns(rule.consequent) {
                return Err(strategy.mismatch("consequent is not a subset of the target frame"));
            }
            let focus = rule.asserted().intersect(*within)?;
            if focus.is_empty() {
                return Err(strategy.mismatch("asserted set misses the conditioning class"));
            }
            MassFunction::simple_support(frame, focus, s)
        }
        Strategy::DuboisPrade {
            product,
            antecedent,
        } => {
            if product.frame() != frame {
                return Err(strategy.mismatch("target frame is not the product frame"));
            }
            if !product.right().owns(rule.consequent) {
                return Err(strategy.mismatch("consequent is not over the right factor"));
            }
            if !product.left().owns(*antecedent) {
                return Err(strategy.mismatch("antecedent is not over the left factor"));
            }
            let a = rule.asserted();
            let excluded = product.product(*antecedent, a.complement())?;
            MassFunction::simple_support(frame, excluded.complement(), s)
        }
    }
}

/// Drops every applicable rule that has a counterpart (a rule about the same
/// frame) whose antecedent is a strict subclass of its own. `facts` are the
/// classes the individual is known to belong to; `subclass` lists direct
/// `(sub, super)` pairs and is closed transitively.
pub fn most_specific<'a>(
    rules: &'a [Rule],
    facts: &[&str],
    subclass: &[(&str, &str)],
) -> Vec<&'a Rule> {
    let mut supers: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for &(sub, sup) in subclass {
        supers.entry(sub).or_default().insert(sup);
    }
    loop {
        let mut changed = false;
        let snapshot = supers.clone();
        for sups in supers.values_mut() {
            let extra: Vec<&str> = sups
                .iter()
                .flat_map(|s| snapshot.get(s).into_iter().flatten().copied())
                .collect();
            for e in extra {
                changed |= sups.insert(e);
            }
        }
        if !changed {
            break;
        }
    }
    let strictly_below = |a: &str, b: &str| a != b && supers.get(a).is_some_and(|s| s.contains(b));
    let applicable: Vec<&Rule> = rules
        .iter()
        .filter(|r| facts.contains(&r.antecedent.as_str()))
        .collect();
    applicable
        .iter()
        .filter(|r| {
            !applicable.iter().any(|other| {
                other.consequent.frame_id() == r.consequent.frame_id()
                    && strictly_below(&other.antecedent, &r.antecedent)
            })
        })
        .copied()
        .collect()
}

/// What a two-step side reads off the product-space result.
#[derive(Debug, Clone, Copy)]
pub enum Extract {
    Belief(Subset),
    Mass(Subset),
}

impl Extract {
    fn read(self, m: &MassFunction) -> Result<(Subset, Scalar)> {
        match self {
            Extract::Belief(s) => Ok((s, m.belief(s)?)),
            Extract::Mass(s) => Ok((s, m.mass(s)?)),
        }
    }
}

/// The two coarse mass functions and their combination.
#[derive(Debug, Clone)]
pub struct TwoStep {
    pub frame: Frame,
    /// `{h}` in the coarse frame `{h, ~h}`.
    pub hypothesis: Subset,
    /// `m₁(Hᶜ)`, from the opposing set.
    pub against: MassFunction,
    /// `m₂(H)`, from the supporting set.
    pub support: MassFunction,
    pub combined: CombineResult,
}

impl TwoStep {
    pub fn belief(&self) -> Result<Scalar> {
        self.combined.mass.belief(self.hypothesis)
    }

    pub fn disbelief(&self) -> Result<Scalar> {
        self.combined.mass.belief(self.hypothesis.complement())
    }

    /// Mass left on the whole coarse frame.
    pub fn residual(&self) -> Result<Scalar> {
        self.combined.mass.mass(self.frame.full())
    }
}

/// Second step of the recombination: the beliefs of the two opposing sets of
/// a product-space combination become simple support functions on a fresh
/// frame `{labels[0], labels[1]}` and are combined again.
///
/// `pro` supports `labels[0]` (e.g. `{(a₁,b)}`), `con` opposes it (e.g.
/// `{(a₂,b)}ᶜ`).
pub fn two_step_combine(
    product_mass: &MassFunction,
    pro: Subset,
    con: Subset,
    labels: [&str; 2],
) -> Result<TwoStep> {
    two_step_with(product_mass, Extract::Belief(pro), Extract::Belief(con), labels)
}

/// [`two_step_combine`] with an explicit choice of belief or bare mass for
/// each side.
pub fn two_step_with(
    product_mass: &MassFunction,
    pro: Extract,
    con: Extract,
    labels: [&str; 2],
) -> Result<TwoStep> {
    let (pro_set, pro_value) = pro.read(product_mass)?;
    let (con_set, con_value) = con.read(product_mass)?;
    for (set, value) in [(pro_set, &pro_value), (con_set, &con_value)] {
        if value.is_zero() {
            return Err(Error::MissingFocal(render_subset(product_mass.frame(), set)));
        }
    }
    let frame = Frame::new(labels)?;
    let hypothesis = frame.singleton(labels[0])?;
    let against = MassFunction::simple_support(&frame, hypothesis.complement(), con_value)?;
    let support = MassFunction::simple_support(&frame, hypothesis, pro_value)?;
    let combined = against.combine(&support)?;
    Ok(TwoStep {
        frame,
        hypothesis,
        against,
        support,
        combined,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalars::{rat, Mode, RatFunc};

    fn sym(s: &str) -> Scalar {
        Scalar::Sym(s.parse::<RatFunc>().unwrap())
    }

    fn omega() -> Frame {
        Frame::new(["fp", "nfp", "ofb", "onfb"]).unwrap()
    }

    fn penguin_rule(w: &Frame) -> Rule {
        Rule::new("penguin", w.singleton("fp").unwrap(), true, sym("1 - e1")).unwrap()
    }

    fn bird_rule(w: &Frame) -> Rule {
        Rule::new("bird", w.subset(&["fp", "ofb"]).unwrap(), false, sym("1 - e2")).unwrap()
    }

    #[test]
    fn rule_validation() {
        let w = omega();
        assert!(Rule::new("p", w.empty_set(), true, sym("1 - e1")).is_err());
        assert!(Rule::new("p", w.full(), true, sym("1 - e1")).is_err());
        let fp = w.singleton("fp").unwrap();
        assert!(Rule::new("p", fp, true, Scalar::Rational(rat(0, 1))).is_err());
        assert!(Rule::new("p", fp, true, Scalar::Rational(rat(3, 2))).is_err());
        assert!(Rule::new("p", fp, true, Scalar::Rational(rat(1, 1))).is_ok());
    }

    #[test]
    fn negative_complement() {
        let w = omega();
        let m = interpret_rule(&penguin_rule(&w), &w, &Strategy::NegativeComplement).unwrap();
        assert_eq!(m.focal_count(), 2);
        assert_eq!(m.mass(w.singleton("fp").unwrap().complement()).unwrap(), sym("1 - e1"));
        assert_eq!(m.mass(w.full()).unwrap(), sym("e1"));
        assert!(interpret_rule(&bird_rule(&w), &w, &Strategy::NegativeComplement).is_err());
    }

    #[test]
    fn positive_direct() {
        let w = omega();
        let m = interpret_rule(&bird_rule(&w), &w, &Strategy::PositiveDirect).unwrap();
        assert_eq!(m.focal_count(), 2);
        assert_eq!(m.mass(w.subset(&["fp", "ofb"]).unwrap()).unwrap(), sym("1 - e2"));
        assert_eq!(m.mass(w.full()).unwrap(), sym("e2"));
    }

    #[test]
    fn dubois_prade_penguin_rule() {
        let p = ProductFrame::new(&["p", "ob"], &["f", "nf"]).unwrap();
        // p → ¬f over V × Ω with B = penguins
        let rule = Rule::new("penguin", p.right().singleton("f").unwrap(), true, sym("1 - e1")).unwrap();
        let strategy = Strategy::DuboisPrade {
            product: p.clone(),
            antecedent: p.left().singleton("p").unwrap(),
        };
        let m = interpret_rule(&rule, p.frame(), &strategy).unwrap();
        let fp = p.pair("p", "f").unwrap();
        assert_eq!(m.mass(fp.complement()).unwrap(), sym("1 - e1"));
        assert_eq!(m.mass(p.frame().full()).unwrap(), sym("e1"));
        // minimum specificity: the non-Ω focal set is exactly (B × Aᶜ)ᶜ
        let non_full: Vec<Subset> = m.focal().map(|(s, _)| s).filter(|s| !s.is_full()).collect();
        assert_eq!(non_full, vec![fp.complement()]);
        // not usable on a plain frame
        let w = omega();
        assert!(matches!(
            interpret_rule(&penguin_rule(&w), &w, &strategy),
            Err(Error::StrategyMismatch { .. })
        ));
    }

    #[test]
    fn subclass_positive_cabbage_reading() {
        let w = omega();
        let m1 = interpret_rule(&penguin_rule(&w), &w, &Strategy::SubclassPositive).unwrap();
        assert_eq!(m1.mass(w.singleton("fp").unwrap()).unwrap(), sym("e1"));
        assert_eq!(m1.mass(w.full()).unwrap(), sym("1 - e1"));
        let m2 = interpret_rule(&bird_rule(&w), &w, &Strategy::PositiveDirect).unwrap();
        let c = m1.combine(&m2).unwrap().mass;
        assert_eq!(c.belief(w.singleton("fp").unwrap()).unwrap(), sym("e1"));
        assert_eq!(
            c.belief(w.subset(&["fp", "ofb"]).unwrap()).unwrap(),
            sym("1 - e2 + e1*e2")
        );
    }

    #[test]
    fn partial_conditioning() {
        let w = omega();
        let within = w.subset(&["fp", "nfp"]).unwrap();
        let m = interpret_rule(&penguin_rule(&w), &w, &Strategy::PartialConditioning { within }).unwrap();
        assert_eq!(m.mass(w.singleton("nfp").unwrap()).unwrap(), sym("1 - e1"));
        assert_eq!(m.mass(w.full()).unwrap(), sym("e1"));
        let bad = Strategy::PartialConditioning {
            within: w.singleton("fp").unwrap(),
        };
        assert!(interpret_rule(&penguin_rule(&w), &w, &bad).is_err());
    }

    #[test]
    fn specificity_keeps_the_penguin_rule() {
        let w = omega();
        let rules = [penguin_rule(&w), bird_rule(&w)];
        let kept = most_specific(&rules, &["penguin", "bird"], &[("penguin", "bird")]);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].antecedent(), "penguin");
        // a plain bird keeps the bird rule
        let kept = most_specific(&rules, &["bird"], &[("penguin", "bird")]);
        assert_eq!(kept[0].antecedent(), "bird");
        // transitivity
        let rules = [
            Rule::new("animal", w.singleton("fp").unwrap(), true, sym("1 - e1")).unwrap(),
            penguin_rule(&w),
        ];
        let kept = most_specific(&rules, &["animal", "penguin"], &[("penguin", "bird"), ("bird", "animal")]);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].antecedent(), "penguin");
    }

    fn product_frame_mass(e1: Scalar, e2: Scalar) -> (ProductFrame, MassFunction) {
        let p = ProductFrame::new(&["a1", "a2"], &["b", "~b"]).unwrap();
        let f = p.frame();
        let r1 = MassFunction::simple_support(f, p.pair("a1", "b").unwrap(), e1.complement()).unwrap();
        let r2 = MassFunction::simple_support(f, p.pair("a2", "b").unwrap().complement(), e2.complement()).unwrap();
        let m = r1.combine(&r2).unwrap().mass;
        (p, m)
    }

    #[test]
    fn two_step_closed_forms() {
        let (p, m) = product_frame_mass(Scalar::e1(), Scalar::e2());
        let pro = p.pair("a1", "b").unwrap();
        let con = p.pair("a2", "b").unwrap().complement();
        let out = two_step_combine(&m, pro, con, ["b", "~b"]).unwrap();
        assert_eq!(out.against.mass(out.hypothesis.complement()).unwrap(), sym("1 - e1*e2"));
        assert_eq!(out.against.mass(out.frame.full()).unwrap(), sym("e1*e2"));
        assert_eq!(out.support.mass(out.hypothesis).unwrap(), sym("1 - e1"));
        assert_eq!(out.belief().unwrap(), sym("e2*(1 - e1)/(1 + e2 - e1*e2)"));
        assert_eq!(out.disbelief().unwrap(), sym("(1 - e1*e2)/(1 + e2 - e1*e2)"));
    }

    #[test]
    fn two_step_at_a_point() {
        let q = |n, d| Scalar::Rational(rat(n, d));
        let (p, m) = product_frame_mass(q(1, 10), q(1, 5));
        let pro = p.pair("a1", "b").unwrap();
        let con = p.pair("a2", "b").unwrap().complement();
        let out = two_step_combine(&m, pro, con, ["b", "~b"]).unwrap();
        assert_eq!(out.belief().unwrap(), q(9, 59));
        assert_eq!(out.disbelief().unwrap(), q(49, 59));
        assert_eq!(out.residual().unwrap(), q(1, 59));
    }

    #[test]
    fn two_step_certain_rules_limit() {
        // ε₁ = ε₂ = 0: certain contradiction wins, Bel{b} = 0, Bel{b}ᶜ = 1.
        let (p, m) = product_frame_mass(Scalar::zero(Mode::Rational), Scalar::zero(Mode::Rational));
        let pro = p.pair("a1", "b").unwrap();
        let con = p.pair("a2", "b").unwrap().complement();
        // m₁({b}ᶜ) = 1 and m₂({b}) = 1 would conflict totally.
        assert_eq!(
            two_step_combine(&m, pro, con, ["b", "~b"]).unwrap_err(),
            Error::TotalConflict
        );
        // Approaching the limit the answer tends to (0, 1).
        let tiny = Scalar::Rational(rat(1, 1_000_000));
        let (p, m) = product_frame_mass(tiny.clone(), tiny);
        let out = two_step_combine(&m, p.pair("a1", "b").unwrap(), con_of(&p), ["b", "~b"]).unwrap();
        assert!(out.belief().unwrap().to_f64().unwrap() < 2e-6);
        assert!(out.disbelief().unwrap().to_f64().unwrap() > 1.0 - 2e-6);
    }

    fn con_of(p: &ProductFrame) -> Subset {
        p.pair("a2", "b").unwrap().complement()
    }

    #[test]
    fn two_step_missing_focal() {
        let (p, m) = product_frame_mass(Scalar::e1(), Scalar::e2());
        // Bel′{(a2,b)} = 0
        let err = two_step_combine(&m, p.pair("a2", "b").unwrap(), con_of(&p), ["b", "~b"]).unwrap_err();
        assert_eq!(err, Error::MissingFocal("{(a2,b)}".into()));
    }
}
