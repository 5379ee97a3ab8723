//! Built-in scenarios: the bird/penguin default-rule examples and the
//! conflicting-rule recombination, each run against its closed form.
//!
//! Also home to the Bayesian comparator, the ε-order estimator and the
//! `verify` harness with its coefficient-perturbation hook.

use std::cell::Cell;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::evidence::{render_subset, MassFunction, FLOAT_TOLERANCE};
use crate::frames::{Frame, ProductFrame, Refinement, Subset};
use crate::rules::{interpret_rule, most_specific, two_step_with, Extract, Rule, Strategy};
use crate::scalars::expr::parse_complete;
use crate::scalars::{parse_rational, rat, validation_grid, Mode, Rational, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub enum ParamValue {
    Sym,
    Number(Rational),
    Word(String),
}

impl FromStr for ParamValue {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "sym" {
            return Ok(ParamValue::Sym);
        }
        if s.starts_with(|c: char| c.is_ascii_digit() || matches!(c, '-' | '+' | '.')) {
            return parse_rational(s).map(ParamValue::Number);
        }
        if s.is_empty() {
            return Err(Error::ScalarParse {
                text: s.into(),
                reason: "empty parameter value".into(),
            });
        }
        Ok(ParamValue::Word(s.to_string()))
    }
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Sym => f.write_str("sym"),
            ParamValue::Number(r) => write!(f, "{r}"),
            ParamValue::Word(w) => f.write_str(w),
        }
    }
}

pub type Params = BTreeMap<String, ParamValue>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
        })
    }
}

/// One computed value together with the set and frame it refers to.
#[derive(Debug, Clone)]
pub struct Quantity {
    pub name: String,
    pub frame: String,
    pub subset: Option<String>,
    pub value: Scalar,
    pub expected: Option<Scalar>,
    pub verdict: Option<Verdict>,
}

/// A yes/no property that is not a single value, e.g. agreement of two
/// mass functions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct Report {
    pub scenario: String,
    pub mode: Mode,
    pub params: Vec<(String, String)>,
    pub quantities: Vec<Quantity>,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
}

impl Report {
    pub fn new(scenario: impl Into<String>, mode: Mode) -> Self {
        Report {
            scenario: scenario.into(),
            mode,
            params: Vec::new(),
            quantities: Vec::new(),
            checks: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.failures().is_empty()
    }

    /// Names of failing quantities and checks.
    pub fn failures(&self) -> Vec<String> {
        let q = self
            .quantities
            .iter()
            .filter(|q| q.verdict == Some(Verdict::Fail))
            .map(|q| q.name.clone());
        let c = self.checks.iter().filter(|c| !c.passed).map(|c| c.name.clone());
        q.chain(c).collect()
    }

    pub fn quantity(&self, name: &str) -> Option<&Quantity> {
        self.quantities.iter().find(|q| q.name == name)
    }

    pub fn value(&self, name: &str) -> Result<&Scalar> {
        self.quantity(name)
            .map(|q| &q.value)
            .ok_or_else(|| Error::UnknownQuantity {
                scenario: self.scenario.clone(),
                quantity: name.to_string(),
            })
    }
}

/// Exact agreement, except in float mode where values within `1e-12`
/// (relative to magnitudes above one) agree.
pub fn agrees(value: &Scalar, expected: &Scalar) -> Result<bool> {
    match (value, expected) {
        (Scalar::Float(a), Scalar::Float(b)) => {
            Ok((a - b).abs() <= FLOAT_TOLERANCE * b.abs().max(1.0))
        }
        _ => value.equals(expected),
    }
}

/// Same focal sets with agreeing masses.
pub fn masses_agree(a: &MassFunction, b: &MassFunction) -> Result<bool> {
    if a.frame() != b.frame() || a.focal_count() != b.focal_count() {
        return Ok(false);
    }
    for ((sa, va), (sb, vb)) in a.focal().zip(b.focal()) {
        if sa.mask() != sb.mask() || !agrees(va, vb)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `a < b`; symbolic values must satisfy it at every validation-grid point.
fn strictly_less(a: &Scalar, b: &Scalar) -> Result<bool> {
    let gap = b.sub(a)?;
    match &gap {
        Scalar::Sym(f) => {
            for (x, y) in validation_grid() {
                if !f.eval(&x, &y)?.is_positive() {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        _ => Ok(gap.compare(&Scalar::zero(gap.mode()))?.is_gt()),
    }
}

/// Directs `verify` to corrupt one coefficient of one expected form.
#[derive(Debug, Clone, PartialEq)]
pub struct Perturbation {
    pub scenario: String,
    pub quantity: String,
    pub in_denominator: bool,
    /// Index into the terms of the chosen polynomial, in canonical order.
    pub term: usize,
    pub delta: Rational,
}

impl FromStr for Perturbation {
    type Err = Error;

    /// `scenario:quantity:num|den:term[:delta]`, delta defaulting to 1.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |reason: &str| Error::InvalidParam {
            name: "perturb".into(),
            reason: format!("{reason} (expected scenario:quantity:num|den:term[:delta])"),
        };
        let parts: Vec<&str> = s.split(':').collect();
        if !(4..=5).contains(&parts.len()) {
            return Err(bad("wrong number of fields"));
        }
        let in_denominator = match parts[2] {
            "num" => false,
            "den" => true,
            _ => return Err(bad("third field must be num or den")),
        };
        let term = parts[3].parse().map_err(|_| bad("term must be an index"))?;
        let delta = match parts.get(4) {
            Some(d) => parse_rational(d)?,
            None => Rational::one(),
        };
        if delta.is_zero() {
            return Err(bad("delta must be non-zero"));
        }
        Ok(Perturbation {
            scenario: parts[0].into(),
            quantity: parts[1].into(),
            in_denominator,
            term,
            delta,
        })
    }
}

impl fmt::Display for Perturbation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let part = if self.in_denominator { "den" } else { "num" };
        write!(f, "{}:{}:{}:{}:{}", self.scenario, self.quantity, part, self.term, self.delta)
    }
}

pub struct ScenarioInfo {
    pub name: &'static str,
    pub params: &'static [&'static str],
    pub about: &'static str,
}

pub const SCENARIOS: &[ScenarioInfo] = &[
    ScenarioInfo {
        name: "naive_pearl",
        params: &["e1", "e2", "prior"],
        about: "both rules combined directly on {f, nf}, with the independent-evidence Bayes comparator",
    },
    ScenarioInfo {
        name: "refined_tweety",
        params: &["e1", "e2"],
        about: "bird rule lifted to the refined frame {fp, nfp, ofb, onfb} and combined with the penguin rule",
    },
    ScenarioInfo {
        name: "third_evidence",
        params: &["e1", "e2", "strength"],
        about: "refined combination followed by direct support for flying penguins",
    },
    ScenarioInfo {
        name: "product_conflict",
        params: &["e1", "e2"],
        about: "a1 -> b and a2 -> ~b combined on the product frame {a1, a2} x {b, ~b}",
    },
    ScenarioInfo {
        name: "two_step",
        params: &["e1", "e2", "prior"],
        about: "product-frame result recombined on {b, ~b}, with the Bayes update",
    },
    ScenarioInfo {
        name: "two_step_tweety",
        params: &["e1", "e2", "reading"],
        about: "two-step recombination of the refined penguin example (reading=mass|belief)",
    },
    ScenarioInfo {
        name: "cabbage",
        params: &["e1", "e2"],
        about: "penguin rule read as positive support m({fp}) = e1",
    },
    ScenarioInfo {
        name: "partial_conditioning",
        params: &["e1", "e2"],
        about: "penguin rule restricted to penguins, m({nfp}) = 1 - e1",
    },
    ScenarioInfo {
        name: "specificity",
        params: &["e1", "e2"],
        about: "only the most specific applicable rule is used",
    },
    ScenarioInfo {
        name: "downward_conditioning",
        params: &["e1", "e2"],
        about: "both rules conditioned on penguins, in either order, against the naive result",
    },
];

pub fn scenario_info(name: &str) -> Result<&'static ScenarioInfo> {
    SCENARIOS
        .iter()
        .find(|s| s.name == name)
        .ok_or_else(|| Error::UnknownScenario(name.to_string()))
}

/// Scenario state: resolved parameters and the report under construction.
struct Ctx<'a> {
    mode: Mode,
    e1: Scalar,
    e2: Scalar,
    extra: BTreeMap<&'static str, Scalar>,
    perturb: Option<&'a Perturbation>,
    applied: &'a Cell<bool>,
    report: Report,
}

impl<'a> Ctx<'a> {
    fn new(
        info: &ScenarioInfo,
        params: &Params,
        mode: Mode,
        perturb: Option<&'a Perturbation>,
        applied: &'a Cell<bool>,
    ) -> Result<Self> {
        for name in params.keys() {
            if !info.params.contains(&name.as_str()) {
                return Err(Error::InvalidParam {
                    name: name.clone(),
                    reason: format!(
                        "not a parameter of {} (takes {})",
                        info.name,
                        info.params.join(", ")
                    ),
                });
            }
        }
        let mut report = Report::new(info.name, mode);
        let e1 = epsilon(params, "e1", mode)?;
        let e2 = epsilon(params, "e2", mode)?;
        for (name, value) in [("e1", &e1), ("e2", &e2)] {
            let shown = match params.get(name) {
                Some(ParamValue::Number(r)) => r.to_string(),
                _ if mode == Mode::Symbolic => "sym".to_string(),
                _ => value.to_string(),
            };
            report.params.push((name.into(), shown));
        }
        Ok(Ctx {
            mode,
            e1,
            e2,
            extra: BTreeMap::new(),
            perturb,
            applied,
            report,
        })
    }

    fn number(&self, r: Rational) -> Scalar {
        Scalar::from_rational(r, self.mode)
    }

    fn one(&self) -> Scalar {
        Scalar::one(self.mode)
    }

    /// A named extra parameter with a value strictly inside (0, 1).
    fn unit_param(&mut self, params: &Params, name: &'static str, default: Option<Rational>) -> Result<Option<Rational>> {
        let r = match params.get(name) {
            Some(ParamValue::Number(r)) => r.clone(),
            None => match default {
                Some(d) => d,
                None => return Ok(None),
            },
            Some(other) => {
                return Err(Error::InvalidParam {
                    name: name.into(),
                    reason: format!("`{other}` is not a number"),
                })
            }
        };
        if !r.is_positive() || r >= Rational::one() {
            return Err(Error::InvalidParam {
                name: name.into(),
                reason: format!("{r} is outside (0, 1)"),
            });
        }
        self.report.params.push((name.into(), r.to_string()));
        Ok(Some(r))
    }

    fn set(&mut self, name: &'static str, value: Scalar) {
        self.extra.insert(name, value);
    }

    fn expected(&self, text: &str) -> Result<Scalar> {
        let lookup = |name: &str| match name {
            "e1" => Some(self.e1.clone()),
            "e2" => Some(self.e2.clone()),
            other => self.extra.get(other).cloned(),
        };
        parse_complete(text)?.eval(self.mode, &lookup)
    }

    fn perturbed(&self, name: &str, expected: Scalar) -> Scalar {
        let Some(p) = self.perturb else { return expected };
        let Scalar::Sym(f) = &expected else { return expected };
        if p.scenario != self.report.scenario || p.quantity != name {
            return expected;
        }
        let poly = if p.in_denominator { f.denominator() } else { f.numerator() };
        match poly.terms().get(p.term) {
            Some(&(m, _)) => {
                self.applied.set(true);
                Scalar::Sym(f.perturb(p.in_denominator, m, &p.delta))
            }
            None => expected,
        }
    }

    fn quantity(
        &mut self,
        name: impl Into<String>,
        frame: &Frame,
        subset: Option<Subset>,
        value: Scalar,
        expected: Option<&str>,
    ) -> Result<()> {
        let name = name.into();
        let expected = match expected {
            Some(text) => Some(self.perturbed(&name, self.expected(text)?)),
            None => None,
        };
        let verdict = match &expected {
            Some(e) => Some(if agrees(&value, e)? { Verdict::Pass } else { Verdict::Fail }),
            None => None,
        };
        self.report.quantities.push(Quantity {
            name,
            frame: frame.render(frame.full()),
            subset: subset.map(|s| render_subset(frame, s)),
            value,
            expected,
            verdict,
        });
        Ok(())
    }

    fn mass(&mut self, m: &MassFunction, a: Subset, expected: Option<&str>) -> Result<()> {
        let key = format!("m{}", m.frame().render(a));
        self.quantity(key, m.frame(), Some(a), m.mass(a)?, expected)
    }

    fn belief(&mut self, m: &MassFunction, a: Subset, expected: Option<&str>) -> Result<()> {
        let key = format!("bel{}", m.frame().render(a));
        self.quantity(key, m.frame(), Some(a), m.belief(a)?, expected)
    }

    fn plausibility(&mut self, m: &MassFunction, a: Subset, expected: Option<&str>) -> Result<()> {
        let key = format!("pl{}", m.frame().render(a));
        self.quantity(key, m.frame(), Some(a), m.plausibility(a)?, expected)
    }

    fn check(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.report.checks.push(Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        });
    }

    fn note(&mut self, text: impl Into<String>) {
        self.report.notes.push(text.into());
    }

    /// `(e1, e2)` as rationals when both are numeric.
    fn numeric_point(&self) -> Option<(f64, f64)> {
        match (&self.e1, &self.e2) {
            (Scalar::Sym(_), _) | (_, Scalar::Sym(_)) => None,
            (a, b) => Some((a.to_f64()?, b.to_f64()?)),
        }
    }
}

fn epsilon(params: &Params, name: &'static str, mode: Mode) -> Result<Scalar> {
    match params.get(name) {
        None | Some(ParamValue::Sym) => {
            if mode != Mode::Symbolic {
                return Err(Error::InvalidParam {
                    name: name.into(),
                    reason: format!("a symbolic value needs symbolic mode (give a value for {name})"),
                });
            }
            Ok(if name == "e1" { Scalar::e1() } else { Scalar::e2() })
        }
        Some(ParamValue::Number(r)) => {
            if !r.is_positive() || *r >= Rational::one() {
                return Err(Error::InvalidParam {
                    name: name.into(),
                    reason: format!("{r} is outside (0, 1)"),
                });
            }
            Ok(Scalar::from_rational(r.clone(), mode))
        }
        Some(ParamValue::Word(w)) => Err(Error::InvalidParam {
            name: name.into(),
            reason: format!("`{w}` is not a number or `sym`"),
        }),
    }
}

pub fn run_scenario(name: &str, params: &Params, mode: Mode) -> Result<Report> {
    let applied = Cell::new(false);
    run_inner(name, params, mode, None, &applied)
}

fn run_inner(
    name: &str,
    params: &Params,
    mode: Mode,
    perturb: Option<&Perturbation>,
    applied: &Cell<bool>,
) -> Result<Report> {
    let info = scenario_info(name)?;
    let mut ctx = Ctx::new(info, params, mode, perturb, applied)?;
    match info.name {
        "naive_pearl" => naive_pearl(&mut ctx, params)?,
        "refined_tweety" => refined_tweety(&mut ctx)?,
        "third_evidence" => third_evidence(&mut ctx, params)?,
        "product_conflict" => {
            product_conflict(&mut ctx)?;
        }
        "two_step" => two_step(&mut ctx, params)?,
        "two_step_tweety" => two_step_tweety(&mut ctx, params)?,
        "cabbage" => cabbage(&mut ctx)?,
        "partial_conditioning" => partial_conditioning(&mut ctx)?,
        "specificity" => specificity(&mut ctx)?,
        "downward_conditioning" => downward_conditioning(&mut ctx)?,
        other => unreachable!("scenario {other} is registered but has no recipe"),
    }
    Ok(ctx.report)
}

struct Naive {
    frame: Frame,
    penguin: MassFunction,
    bird: MassFunction,
}

fn naive_masses(ctx: &Ctx) -> Result<Naive> {
    let frame = Frame::new(["f", "nf"])?;
    let f = frame.singleton("f")?;
    let penguin = Rule::new("penguin", f, true, ctx.e1.complement())?;
    let bird = Rule::new("bird", f, false, ctx.e2.complement())?;
    Ok(Naive {
        penguin: interpret_rule(&penguin, &frame, &Strategy::NegativeComplement)?,
        bird: interpret_rule(&bird, &frame, &Strategy::PositiveDirect)?,
        frame,
    })
}

fn naive_pearl(ctx: &mut Ctx, params: &Params) -> Result<()> {
    let n = naive_masses(ctx)?;
    let c = n.penguin.combine(&n.bird)?;
    let (f, nf) = (n.frame.singleton("f")?, n.frame.singleton("nf")?);
    let frame = n.frame.clone();
    ctx.quantity("k", &frame, None, c.k.clone(), Some("e1 + e2 - e1*e2"))?;
    ctx.quantity("conflict", &frame, None, c.conflict.clone(), Some("1 - e1 - e2 + e1*e2"))?;
    ctx.belief(&c.mass, f, Some("(e1 - e1*e2)/(e1 + e2 - e1*e2)"))?;
    ctx.belief(&c.mass, nf, Some("(e2 - e1*e2)/(e1 + e2 - e1*e2)"))?;
    ctx.plausibility(&c.mass, f, Some("e1/(e1 + e2 - e1*e2)"))?;
    ctx.mass(&c.mass, frame.full(), Some("e1*e2/(e1 + e2 - e1*e2)"))?;

    let prior = ctx.unit_param(params, "prior", Some(rat(1, 2)))?.unwrap();
    let prior = ctx.number(prior);
    ctx.set("prior", prior.clone());
    let b = bayes_independent(&ctx.e1, &ctx.e2.complement(), &prior)?;
    ctx.quantity("bayes{f}", &frame, Some(f), b.p_h.clone(), Some("(e1 - e1*e2)/prior"))?;
    ctx.quantity("bayes{nf}", &frame, Some(nf), b.p_not_h.clone(), Some("(e2 - e1*e2)/(1 - prior)"))?;
    let norm = "(e1 - e1*e2)*(1 - prior)/((e1 - e1*e2)*(1 - prior) + (e2 - e1*e2)*prior)";
    ctx.quantity("bayes_norm{f}", &frame, Some(f), b.normalized.0.clone(), Some(norm))?;
    if b.exceeds_one {
        ctx.note("raw Bayes values exceed 1 for these inputs; the normalized pair is reported alongside");
    }

    if let Some((x, y)) = ctx.numeric_point() {
        if x == y {
            let bel = c.mass.belief(f)?;
            let closed = ctx.expected("(1 - e1)/(2 - e1)")?;
            ctx.check("equal_slack_value", agrees(&bel, &closed)?, "bel{f} = (1 - e)/(2 - e) when e1 = e2 = e");
        }
    }
    ctx.note("with e1 = e2 = e the belief in f is (1 - e)/(2 - e), about 1/2; the condition e1 = e2 = e^2 does not give that value and is read as e1 = e2 = e");
    ctx.note("Bel(empty) is kept at 0; the residual e1*e2/K sits on theta");
    Ok(())
}

struct Tweety {
    omega: Frame,
    birds: Frame,
    refinement: Refinement,
    penguin: MassFunction,
    bird_coarse: MassFunction,
    bird: MassFunction,
}

fn tweety(ctx: &Ctx) -> Result<Tweety> {
    let omega = Frame::new(["fp", "nfp", "ofb", "onfb"])?;
    let birds = Frame::new(["fb", "nfb"])?;
    let refinement = Refinement::new(
        &birds,
        &omega,
        &[("fb", vec!["fp", "ofb"]), ("nfb", vec!["nfp", "onfb"])],
    )?;
    let penguin = Rule::new("penguin", omega.singleton("fp")?, true, ctx.e1.complement())?;
    let penguin = interpret_rule(&penguin, &omega, &Strategy::NegativeComplement)?;
    let bird = Rule::new("bird", birds.singleton("fb")?, false, ctx.e2.complement())?;
    let bird_coarse = interpret_rule(&bird, &birds, &Strategy::PositiveDirect)?;
    let bird = bird_coarse.lift(&refinement)?;
    Ok(Tweety {
        omega,
        birds,
        refinement,
        penguin,
        bird_coarse,
        bird,
    })
}

/// Runs the refined combination and reports its table; returns the
/// combined mass.
fn refined_table(ctx: &mut Ctx) -> Result<(Tweety, MassFunction)> {
    let t = tweety(ctx)?;
    let c = t.penguin.combine(&t.bird)?;
    let w = &t.omega;
    let m = &c.mass;
    let fp = w.singleton("fp")?;
    let ofb = w.singleton("ofb")?;
    let fp_ofb = w.subset(&["fp", "ofb"])?;
    ctx.mass(m, fp.complement(), Some("e2 - e1*e2"))?;
    ctx.mass(m, w.full(), Some("e1*e2"))?;
    ctx.mass(m, ofb, Some("1 - e1 - e2 + e1*e2"))?;
    ctx.mass(m, fp_ofb, Some("e1 - e1*e2"))?;
    ctx.quantity("k", w, None, c.k.clone(), Some("1"))?;
    ctx.check("four_focal_sets", m.focal_count() == 4, format!("{} focal sets", m.focal_count()));
    ctx.belief(m, fp_ofb, Some("1 - e2"))?;
    ctx.belief(m, fp, Some("0"))?;
    ctx.plausibility(m, fp, Some("e1"))?;
    ctx.belief(m, ofb, Some("1 - e1 - e2 + e1*e2"))?;
    ctx.plausibility(m, ofb, Some("1"))?;
    Ok((t, c.mass))
}

fn refined_tweety(ctx: &mut Ctx) -> Result<()> {
    let (t, _) = refined_table(ctx)?;
    let mut consistent = true;
    for a in t.birds.all_subsets() {
        let coarse = t.bird_coarse.belief(a)?;
        let fine = t.bird.belief(t.refinement.refine(a)?)?;
        consistent &= agrees(&fine, &coarse)?;
    }
    ctx.check("lift_consistency", consistent, "Bel0(A) = Bel(w(A)) for every A in the bird frame");
    Ok(())
}

fn third_evidence(ctx: &mut Ctx, params: &Params) -> Result<()> {
    let s = ctx.unit_param(params, "strength", Some(rat(1, 5)))?.unwrap();
    let s = ctx.number(s);
    ctx.set("s", s.clone());
    let t = tweety(ctx)?;
    let w = t.omega.clone();
    let base = t.penguin.combine(&t.bird)?.mass;
    let fp = w.singleton("fp")?;
    let fp_ofb = w.subset(&["fp", "ofb"])?;
    let third = MassFunction::simple_support(&w, fp, s)?;
    let c = base.combine(&third)?;
    let m = &c.mass;
    ctx.quantity("k", &w, None, c.k.clone(), Some("1 - s + s*e1"))?;
    ctx.belief(m, fp, Some("s*e1/(1 - s + s*e1)"))?;
    ctx.belief(m, fp_ofb, Some("((1 - s)*(1 - e2) + s*e1)/(1 - s + s*e1)"))?;
    let birds_fly = m.belief(fp_ofb)?.sub(&m.belief(fp)?)?;
    ctx.quantity(
        "bel{fp,ofb}-bel{fp}",
        &w,
        Some(fp_ofb),
        birds_fly.clone(),
        Some("(1 - s)*(1 - e2)/(1 - s + s*e1)"),
    )?;
    let bound = ctx.e2.complement();
    let below = strictly_less(&birds_fly, &bound)?;
    ctx.check("birds_fly_below_rule_strength", below, "bel{fp,ofb} - bel{fp} < 1 - e2");
    ctx.note("bel{fp,ofb} itself exceeds 1 - e2 by s*e1*e2/K; the support for flying birds that excludes the penguin-only set is bel{fp,ofb} - bel{fp}");
    Ok(())
}

struct Product {
    frame: ProductFrame,
    mass: MassFunction,
}

fn product_conflict(ctx: &mut Ctx) -> Result<Product> {
    let p = ProductFrame::new(&["a1", "a2"], &["b", "~b"])?;
    let f = p.frame().clone();
    let a1b = p.pair("a1", "b")?;
    let a2b = p.pair("a2", "b")?;
    let r1 = Rule::new("a1", a1b, false, ctx.e1.complement())?;
    let m1 = interpret_rule(&r1, &f, &Strategy::PositiveDirect)?;
    let r2 = Rule::new("a2", p.right().singleton("b")?, true, ctx.e2.complement())?;
    let dp = Strategy::DuboisPrade {
        product: p.clone(),
        antecedent: p.left().singleton("a2")?,
    };
    let m2 = interpret_rule(&r2, &f, &dp)?;
    let specific = m2
        .focal()
        .filter(|(s, _)| !s.is_full())
        .map(|(s, _)| s.mask())
        .eq([a2b.complement().mask()]);
    ctx.check("minimum_specificity", specific, "non-theta focal set of the a2 rule is {(a2,b)}^c");

    let c = m1.combine(&m2)?;
    let m = &c.mass;
    ctx.quantity("k", &f, None, c.k.clone(), Some("1"))?;
    ctx.mass(m, a1b, Some("1 - e1"))?;
    ctx.mass(m, a2b.complement(), Some("e1 - e1*e2"))?;
    ctx.mass(m, f.full(), Some("e1*e2"))?;
    ctx.belief(m, a1b, Some("1 - e1"))?;
    ctx.plausibility(m, a1b, Some("1"))?;
    ctx.belief(m, a2b, Some("0"))?;
    ctx.plausibility(m, a2b, Some("e1*e2"))?;
    ctx.belief(m, a2b.complement(), Some("1 - e1*e2"))?;
    Ok(Product {
        frame: p,
        mass: c.mass,
    })
}

fn two_step(ctx: &mut Ctx, params: &Params) -> Result<()> {
    let prod = product_conflict(ctx)?;
    let pro = prod.frame.pair("a1", "b")?;
    let con = prod.frame.pair("a2", "b")?.complement();
    let out = two_step_with(&prod.mass, Extract::Belief(pro), Extract::Belief(con), ["b", "~b"])?;
    let f = out.frame.clone();
    let (b, nb) = (out.hypothesis, out.hypothesis.complement());
    let c = &out.combined;
    for (set, text) in [
        (nb, "e1 - e1^2*e2"),
        (f.full(), "e1^2*e2"),
        (f.empty_set(), "(1 - e1*e2)*(1 - e1)"),
        (b, "e1*e2 - e1^2*e2"),
    ] {
        ctx.quantity(format!("m'{}", f.render(set)), &f, Some(set), c.unnormalized(set)?, Some(text))?;
    }
    ctx.quantity("k", &f, None, c.k.clone(), Some("e1*(1 + e2 - e1*e2)"))?;
    ctx.belief(&c.mass, b, Some("(e2 - e1*e2)/(1 + e2 - e1*e2)"))?;
    ctx.belief(&c.mass, nb, Some("(1 - e1*e2)/(1 + e2 - e1*e2)"))?;
    ctx.mass(&c.mass, f.full(), Some("e1*e2/(1 + e2 - e1*e2)"))?;
    let total = out.belief()?.add(&out.disbelief()?)?.add(&out.residual()?)?;
    ctx.check("triple_sums_to_one", agrees(&total, &ctx.one())?, "bel{b} + bel{~b} + m(theta) = 1");

    let given = ctx.unit_param(params, "prior", None)?;
    let prior = match &given {
        Some(r) => ctx.number(r.clone()),
        None => ctx.e1.complement(),
    };
    ctx.set("prior", prior.clone());
    let bayes = bayes_independent(&ctx.e1.complement(), &ctx.e2, &prior)?;
    let (ph, pnh) = if given.is_some() {
        ("(e2 - e1*e2)/prior", "(e1 - e1*e2)/(1 - prior)")
    } else {
        ctx.note("prior P(b) = 1 - e1, taken from the first rule (updating)");
        ("e2", "1 - e2")
    };
    ctx.quantity("bayes{b}", &f, Some(b), bayes.p_h, Some(ph))?;
    ctx.quantity("bayes{~b}", &f, Some(nb), bayes.p_not_h, Some(pnh))?;

    if let Some((x, y)) = ctx.numeric_point() {
        if x == y && x <= 0.1 {
            let e = ctx.e1.clone();
            let gap = out.belief()?.sub(&e)?;
            let gap = if gap.compare(&Scalar::zero(ctx.mode))?.is_lt() { gap.neg() } else { gap };
            let bound = e.mul(&e)?.mul(&ctx.number(rat(2, 1)))?;
            let ok = !gap.compare(&bound)?.is_gt();
            ctx.check("bayes_consistency_bound", ok, "|bel{b} - e| <= 2 e^2 at e1 = e2 = e");
        }
    }
    Ok(())
}

fn two_step_tweety(ctx: &mut Ctx, params: &Params) -> Result<()> {
    let reading = match params.get("reading") {
        None => "mass".to_string(),
        Some(ParamValue::Word(w)) if w == "mass" || w == "belief" => w.clone(),
        Some(other) => {
            return Err(Error::InvalidParam {
                name: "reading".into(),
                reason: format!("`{other}` is not mass or belief"),
            })
        }
    };
    ctx.report.params.push(("reading".into(), reading.clone()));
    let t = tweety(ctx)?;
    let w = t.omega.clone();
    let m = t.penguin.combine(&t.bird)?.mass;
    let fp = w.singleton("fp")?;
    let fp_ofb = w.subset(&["fp", "ofb"])?;
    let (pro, support, k, bel, dis) = if reading == "mass" {
        ctx.note("reading `mass`: support for {fp} is the mass on {fp,ofb} alone; gives bel{fp} of order e");
        (
            Extract::Mass(fp_ofb),
            "e1 - e1*e2",
            "1 - e1*(1 - e1)*(1 - e2)",
            "e1^2*(1 - e2)/(1 - e1*(1 - e1)*(1 - e2))",
            "(1 - e1)*(1 - e1*(1 - e2))/(1 - e1*(1 - e1)*(1 - e2))",
        )
    } else {
        ctx.note("reading `belief`: support for {fp} is Bel{fp,ofb}; reproduces the naive combination");
        (
            Extract::Belief(fp_ofb),
            "1 - e2",
            "e1 + e2 - e1*e2",
            "(e1 - e1*e2)/(e1 + e2 - e1*e2)",
            "(e2 - e1*e2)/(e1 + e2 - e1*e2)",
        )
    };
    let out = two_step_with(&m, pro, Extract::Belief(fp.complement()), ["fp", "~fp"])?;
    let f = out.frame.clone();
    let (h, nh) = (out.hypothesis, out.hypothesis.complement());
    ctx.quantity("m1{~fp}", &f, Some(nh), out.against.mass(nh)?, Some("1 - e1"))?;
    ctx.quantity("m2{fp}", &f, Some(h), out.support.mass(h)?, Some(support))?;
    ctx.quantity("k", &f, None, out.combined.k.clone(), Some(k))?;
    ctx.belief(&out.combined.mass, h, Some(bel))?;
    ctx.belief(&out.combined.mass, nh, Some(dis))?;
    Ok(())
}

fn cabbage(ctx: &mut Ctx) -> Result<()> {
    let t = tweety(ctx)?;
    let w = t.omega.clone();
    let rule = Rule::new("penguin", w.singleton("fp")?, true, ctx.e1.complement())?;
    let penguin = interpret_rule(&rule, &w, &Strategy::SubclassPositive)?;
    let c = penguin.combine(&t.bird)?;
    let fp = w.singleton("fp")?;
    ctx.quantity("k", &w, None, c.k.clone(), Some("1"))?;
    ctx.mass(&penguin, fp, Some("e1"))?;
    ctx.belief(&c.mass, fp, Some("e1"))?;
    ctx.belief(&c.mass, w.subset(&["fp", "ofb"])?, Some("1 - e2 + e1*e2"))?;
    ctx.plausibility(&c.mass, fp, Some("1"))?;
    Ok(())
}

fn partial_conditioning(ctx: &mut Ctx) -> Result<()> {
    let t = tweety(ctx)?;
    let w = t.omega.clone();
    let penguins = w.subset(&["fp", "nfp"])?;
    let rule = Rule::new("penguin", w.singleton("fp")?, true, ctx.e1.complement())?;
    let strategy = Strategy::PartialConditioning { within: penguins };
    let penguin = interpret_rule(&rule, &w, &strategy)?;
    let c = penguin.combine(&t.bird)?;
    let m = &c.mass;
    let nfp = w.singleton("nfp")?;
    let fp_ofb = w.subset(&["fp", "ofb"])?;
    ctx.mass(&penguin, nfp, Some("1 - e1"))?;
    ctx.quantity("k", &w, None, c.k.clone(), Some("e1 + e2 - e1*e2"))?;
    ctx.belief(m, nfp, Some("(e2 - e1*e2)/(e1 + e2 - e1*e2)"))?;
    ctx.belief(m, w.singleton("fp")?, Some("0"))?;
    ctx.belief(m, fp_ofb, Some("(e1 - e1*e2)/(e1 + e2 - e1*e2)"))?;
    let approx_nfp = ctx.expected("e2/(e1 + e2)")?;
    let approx_fly = ctx.expected("e1/(e1 + e2)")?;
    ctx.quantity("approx{nfp}", &w, Some(nfp), approx_nfp.clone(), None)?;
    ctx.quantity("approx{fp,ofb}", &w, Some(fp_ofb), approx_fly, None)?;

    // e2/(e1 + e2) <= 1 - e2 holds exactly when e2^2 <= e1*(1 - e2).
    let lhs = ctx.e2.mul(&ctx.e2)?;
    let rhs = ctx.e1.mul(&ctx.e2.complement())?;
    let claim = ctx.e2.complement().sub(&approx_nfp)?;
    let (mut held, mut tested) = (true, 0);
    match (&lhs, &rhs, &claim) {
        (Scalar::Sym(l), Scalar::Sym(r), Scalar::Sym(c)) => {
            for (x, y) in validation_grid() {
                if l.eval(&x, &y)? <= r.eval(&x, &y)? {
                    tested += 1;
                    held &= !c.eval(&x, &y)?.is_negative();
                }
            }
        }
        _ => {
            if !lhs.compare(&rhs)?.is_gt() {
                tested = 1;
                held = !claim.compare(&Scalar::zero(ctx.mode))?.is_lt();
            }
        }
    }
    if tested > 0 {
        ctx.check(
            "approx_below_rule_strength",
            held,
            format!("e2/(e1 + e2) <= 1 - e2 where e2^2 <= e1*(1 - e2) ({tested} point(s))"),
        );
    }
    ctx.note("e2/(e1 + e2) <= 1 - e2 is not unconditional (it fails at e1 = 1/100, e2 = 1/5); it is checked only where e2^2 <= e1*(1 - e2)");
    Ok(())
}

fn specificity(ctx: &mut Ctx) -> Result<()> {
    let frame = Frame::new(["f", "nf"])?;
    let f = frame.singleton("f")?;
    let rules = [
        Rule::new("penguin", f, true, ctx.e1.complement())?,
        Rule::new("bird", f, false, ctx.e2.complement())?,
    ];
    let kept = most_specific(&rules, &["penguin", "bird"], &[("penguin", "bird")]);
    let mut m = MassFunction::vacuous(&frame, ctx.mode);
    for rule in &kept {
        let strategy = if rule.negated() {
            Strategy::NegativeComplement
        } else {
            Strategy::PositiveDirect
        };
        m = m.combine(&interpret_rule(rule, &frame, &strategy)?)?.mass;
    }
    let names: Vec<&str> = kept.iter().map(|r| r.antecedent()).collect();
    ctx.check("only_penguin_rule", names == ["penguin"], format!("rules applied: {}", names.join(", ")));
    ctx.belief(&m, f, Some("0"))?;
    ctx.plausibility(&m, f, Some("e1"))?;
    ctx.belief(&m, frame.singleton("nf")?, Some("1 - e1"))?;
    Ok(())
}

fn downward_conditioning(ctx: &mut Ctx) -> Result<()> {
    let t = tweety(ctx)?;
    let w = t.omega.clone();
    let penguins = w.subset(&["fp", "nfp"])?;
    let early = t
        .penguin
        .condition(penguins)?
        .mass
        .combine(&t.bird.condition(penguins)?.mass)?;
    let late = t.penguin.combine(&t.bird)?.mass.condition(penguins)?;
    ctx.check(
        "order_immaterial",
        masses_agree(&early.mass, &late.mass)?,
        "condition-then-combine equals combine-then-condition",
    );
    let n = naive_masses(ctx)?;
    let naive = n.penguin.combine(&n.bird)?.mass;
    let restricted = late.mass.restrict(penguins, &n.frame)?;
    ctx.check(
        "matches_naive",
        masses_agree(&restricted, &naive)?,
        "conditioned result on {fp,nfp} equals the naive combination on {f,nf}",
    );
    ctx.quantity("k", &w, None, late.k.clone(), Some("e1 + e2 - e1*e2"))?;
    ctx.belief(&late.mass, w.singleton("fp")?, Some("(e1 - e1*e2)/(e1 + e2 - e1*e2)"))?;
    ctx.belief(&late.mass, w.singleton("nfp")?, Some("(e2 - e1*e2)/(e1 + e2 - e1*e2)"))?;
    Ok(())
}

/// Independent-evidence Bayes update.
#[derive(Debug, Clone)]
pub struct BayesResult {
    /// `P(H | e1, e2) = s1 * s2 / P(H)`.
    pub p_h: Scalar,
    /// `P(~H | e1, e2) = (1 - s1)(1 - s2) / P(~H)`.
    pub p_not_h: Scalar,
    /// The pair scaled to sum to one.
    pub normalized: (Scalar, Scalar),
    /// Whether a raw value exceeds one (on the validation grid when symbolic).
    pub exceeds_one: bool,
}

/// `s1 = P(H | e1)`, `s2 = P(H | e2)`, `prior = P(H)`.
pub fn bayes_independent(s1: &Scalar, s2: &Scalar, prior: &Scalar) -> Result<BayesResult> {
    let not_prior = prior.complement();
    if prior.is_zero() || not_prior.is_zero() {
        return Err(Error::InvalidParam {
            name: "prior".into(),
            reason: "must lie strictly between 0 and 1".into(),
        });
    }
    let p_h = s1.mul(s2)?.div(prior)?;
    let p_not_h = s1.complement().mul(&s2.complement())?.div(&not_prior)?;
    let total = p_h.add(&p_not_h)?;
    let normalized = (p_h.div(&total)?, p_not_h.div(&total)?);
    let exceeds_one = above_one(&p_h)? || above_one(&p_not_h)?;
    Ok(BayesResult {
        p_h,
        p_not_h,
        normalized,
        exceeds_one,
    })
}

fn above_one(v: &Scalar) -> Result<bool> {
    match v {
        Scalar::Sym(f) => {
            for (x, y) in validation_grid() {
                if f.eval(&x, &y)? > Rational::one() {
                    return Ok(true);
                }
            }
            Ok(false)
        }
        _ => Ok(v.compare(&Scalar::one(v.mode()))?.is_gt()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum OrderClass {
    /// Tends to zero linearly.
    Epsilon,
    /// Tends to a non-zero constant.
    One,
    Other(f64),
}

impl fmt::Display for OrderClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OrderClass::Epsilon => f.write_str("O(eps)"),
            OrderClass::One => f.write_str("O(1)"),
            OrderClass::Other(s) => write!(f, "other({s:.4})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrderFit {
    pub slope: f64,
    pub intercept: f64,
    pub class: OrderClass,
}

/// Least-squares line through `(log ε, log value)`.
pub fn fit_order(points: &[(f64, f64)]) -> Result<OrderFit> {
    if points.len() < 2 {
        return Err(Error::Order("need at least two points".into()));
    }
    let mut xs = Vec::with_capacity(points.len());
    let mut ys = Vec::with_capacity(points.len());
    for &(eps, v) in points {
        if eps <= 0.0 || v <= 0.0 || !v.is_finite() {
            return Err(Error::Order(format!("value {v} at eps = {eps} is not positive")));
        }
        xs.push(eps.ln());
        ys.push(v.ln());
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::Order("grid values must differ".into()));
    }
    let slope = sxy / sxx;
    let class = if (0.9..=1.1).contains(&slope) {
        OrderClass::Epsilon
    } else if (-0.1..=0.1).contains(&slope) {
        OrderClass::One
    } else {
        OrderClass::Other(slope)
    };
    Ok(OrderFit {
        slope,
        intercept: my - slope * mx,
        class,
    })
}

/// Evaluates one quantity of a scenario at `e1 = e2 = ε` for every grid
/// value. `base` supplies the scenario's other parameters.
pub fn sweep(
    scenario: &str,
    quantity: &str,
    grid: &[Rational],
    mode: Mode,
    base: &Params,
) -> Result<Vec<(Rational, Scalar)>> {
    if mode == Mode::Symbolic {
        return Err(Error::Order("sweeps need a numeric mode".into()));
    }
    let mut params = base.clone();
    grid.iter()
        .map(|eps| {
            params.insert("e1".into(), ParamValue::Number(eps.clone()));
            params.insert("e2".into(), ParamValue::Number(eps.clone()));
            let report = run_scenario(scenario, &params, mode)?;
            Ok((eps.clone(), report.value(quantity)?.clone()))
        })
        .collect()
}

/// Slope of `log quantity` against `log ε` along `e1 = e2 = ε`.
///
/// The grid needs at least three strictly decreasing values in
/// `[1e-12, 1/10]`.
pub fn epsilon_order(scenario: &str, quantity: &str, grid: &[Rational], mode: Mode) -> Result<OrderFit> {
    if grid.len() < 3 {
        return Err(Error::Order("grid needs at least three values".into()));
    }
    let floor = Rational::new(1.into(), 1_000_000_000_000i64.into());
    for (i, g) in grid.iter().enumerate() {
        if *g > rat(1, 10) || *g < floor {
            return Err(Error::Order(format!("grid value {g} is outside [1e-12, 1/10]")));
        }
        if i > 0 && *g >= grid[i - 1] {
            return Err(Error::Order("grid must be strictly decreasing".into()));
        }
    }
    let values = sweep(scenario, quantity, grid, mode, &Params::new())?;
    let points: Vec<(f64, f64)> = values
        .iter()
        .map(|(eps, v)| (eps.to_f64().unwrap_or(f64::NAN), v.to_f64().unwrap_or(f64::NAN)))
        .collect();
    fit_order(&points)
}

/// The decade grid `1e-2, …, 1e-5`.
pub fn decade_grid() -> Vec<Rational> {
    (2..=5)
        .map(|k| Rational::new(1.into(), num_bigint::BigInt::from(10).pow(k)))
        .collect()
}

/// Bayes update with the first rule as prior, and the `2ε²` bound between
/// the recombined belief and that update.
pub fn consistency_checks() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let e1 = Scalar::e1();
    let e2 = Scalar::e2();
    let b = bayes_independent(&e1.complement(), &e2, &e1.complement())?;
    out.push(Check {
        name: "bayes_update_is_e2".into(),
        passed: b.p_h.equals(&e2)?,
        detail: format!("P(b | a1, a2) with prior 1 - e1 = {}", b.p_h),
    });
    for d in [10, 100, 1000] {
        let eps = rat(1, d);
        let mut params = Params::new();
        params.insert("e1".into(), ParamValue::Number(eps.clone()));
        params.insert("e2".into(), ParamValue::Number(eps.clone()));
        let report = run_scenario("two_step", &params, Mode::Rational)?;
        let bel = report.value("bel{b}")?.as_rational().cloned().unwrap_or_default();
        let gap = (bel.clone() - &eps).abs();
        let bound = &eps * &eps * rat(2, 1);
        out.push(Check {
            name: format!("bayes_gap_at_1/{d}"),
            passed: gap <= bound,
            detail: format!("|{bel} - {eps}| = {gap} <= {bound}"),
        });
    }
    Ok(out)
}

/// Order classification of the recombined and the naive belief on the
/// decade grid.
pub fn order_checks() -> Result<Vec<Check>> {
    let grid = decade_grid();
    let two = epsilon_order("two_step", "bel{b}", &grid, Mode::Rational)?;
    let naive = epsilon_order("naive_pearl", "bel{f}", &grid, Mode::Rational)?;
    Ok(vec![
        Check {
            name: "two_step_is_order_eps".into(),
            passed: two.class == OrderClass::Epsilon,
            detail: format!("slope {:.6}, {}", two.slope, two.class),
        },
        Check {
            name: "naive_is_order_one".into(),
            passed: naive.class == OrderClass::One,
            detail: format!("slope {:.6}, {}", naive.slope, naive.class),
        },
    ])
}

/// The symbolic runs `verify` performs: every scenario with its defaults,
/// plus the second reading of the two-step penguin variant.
pub fn verify_runs() -> Vec<(&'static str, Params)> {
    let mut runs: Vec<(&'static str, Params)> = SCENARIOS.iter().map(|s| (s.name, Params::new())).collect();
    let mut belief = Params::new();
    belief.insert("reading".into(), ParamValue::Word("belief".into()));
    runs.push(("two_step_tweety", belief));
    runs
}

#[derive(Debug, Clone)]
pub struct Verification {
    pub reports: Vec<Report>,
    pub checks: Vec<Check>,
}

impl Verification {
    pub fn passed(&self) -> bool {
        self.reports.iter().all(Report::passed) && self.checks.iter().all(|c| c.passed)
    }
}

/// Runs every scenario symbolically against its closed forms, plus the
/// consistency and order checks. With `perturb`, the named expected form is
/// corrupted first; a perturbation that matches nothing is an error.
pub fn verify(perturb: Option<&Perturbation>) -> Result<Verification> {
    let applied = Cell::new(false);
    let mut reports = Vec::new();
    for (name, params) in verify_runs() {
        reports.push(run_inner(name, &params, Mode::Symbolic, perturb, &applied)?);
    }
    if let Some(p) = perturb {
        if !applied.get() {
            return Err(Error::InvalidParam {
                name: "perturb".into(),
                reason: format!("`{p}` matches no coefficient of an expected form"),
            });
        }
    }
    let mut checks = consistency_checks()?;
    checks.extend(order_checks()?);
    Ok(Verification { reports, checks })
}

/// Every single-coefficient perturbation `verify` must catch: each
/// numerator coefficient of each expected form, and each denominator
/// coefficient when the numerator is non-zero.
pub fn perturbation_targets() -> Result<Vec<Perturbation>> {
    let mut out = Vec::new();
    for (name, params) in verify_runs() {
        let report = run_scenario(name, &params, Mode::Symbolic)?;
        for q in &report.quantities {
            let Some(Scalar::Sym(f)) = &q.expected else { continue };
            let mut push = |in_denominator: bool, term: usize| {
                let p = Perturbation {
                    scenario: report.scenario.clone(),
                    quantity: q.name.clone(),
                    in_denominator,
                    term,
                    delta: Rational::one(),
                };
                if !out.contains(&p) {
                    out.push(p);
                }
            };
            for i in 0..f.numerator().len() {
                push(false, i);
            }
            if !f.is_zero() {
                for i in 0..f.denominator().len() {
                    push(true, i);
                }
            }
        }
    }
    Ok(out)
}
