//! Acceptance harness: one PASS/FAIL line per criterion, non-zero exit if
//! any criterion fails.

use std::process::{Command, ExitCode};

use belief_core::evidence::{mass_from_belief, MassFunction};
use belief_core::frames::{Frame, Refinement};
use belief_core::scalars::{rat, Mode, RatFunc, Rational, Scalar};
use belief_core::scenarios::{
    consistency_checks, masses_agree, order_checks, perturbation_targets, run_scenario, verify, ParamValue, Params,
    Report,
};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn symbolic(name: &str) -> Result<Report, String> {
    run_scenario(name, &Params::new(), Mode::Symbolic).map_err(|e| e.to_string())
}

fn rational(name: &str, e1: Rational, e2: Rational) -> Result<Report, String> {
    let mut params = Params::new();
    params.insert("e1".into(), ParamValue::Number(e1));
    params.insert("e2".into(), ParamValue::Number(e2));
    run_scenario(name, &params, Mode::Rational).map_err(|e| e.to_string())
}

/// `quantity` of `report` equals the rational function `form` exactly.
fn identity(report: &Report, quantity: &str, form: &str) -> Result<(), String> {
    let value = report.value(quantity).map_err(|e| e.to_string())?;
    let expected: RatFunc = form.parse().map_err(|e: belief_core::Error| e.to_string())?;
    let Scalar::Sym(f) = value else {
        return Err(format!("{quantity} is not symbolic"));
    };
    if f.equals(&expected).map_err(|e| e.to_string())? {
        Ok(())
    } else {
        Err(format!("{} {quantity} = {f}, expected {expected}", report.scenario))
    }
}

fn exact(report: &Report, quantity: &str, expected: Rational) -> Result<(), String> {
    let value = report.value(quantity).map_err(|e| e.to_string())?;
    if value == &Scalar::Rational(expected.clone()) {
        Ok(())
    } else {
        Err(format!("{} {quantity} = {value}, expected {expected}", report.scenario))
    }
}

fn check_passed(report: &Report, check: &str) -> Result<(), String> {
    match report.checks.iter().find(|c| c.name == check) {
        Some(c) if c.passed => Ok(()),
        Some(c) => Err(format!("check {check} failed: {}", c.detail)),
        None => Err(format!("check {check} missing")),
    }
}

fn naive_combination() -> Outcome {
    let r = symbolic("naive_pearl")?;
    identity(&r, "bel{f}", "(e1 - e1*e2)/(e1 + e2 - e1*e2)")?;
    identity(&r, "bel{nf}", "(e2 - e1*e2)/(e1 + e2 - e1*e2)")?;
    Ok("Bel(f), Bel(nf) are exact rational-function identities".into())
}

fn refined_table() -> Outcome {
    let r = symbolic("refined_tweety")?;
    identity(&r, "m{nfp,ofb,onfb}", "e2*(1 - e1)")?;
    identity(&r, "m{fp,nfp,ofb,onfb}", "e1*e2")?;
    identity(&r, "m{ofb}", "(1 - e1)*(1 - e2)")?;
    identity(&r, "m{fp,ofb}", "e1*(1 - e2)")?;
    let masses = r.quantities.iter().filter(|q| q.name.starts_with("m{")).count();
    if masses != 4 {
        return Err(format!("{masses} focal sets reported"));
    }
    check_passed(&r, "four_focal_sets")?;
    identity(&r, "k", "1")?;
    identity(&r, "bel{fp,ofb}", "1 - e2")?;
    identity(&r, "bel{fp}", "0")?;
    identity(&r, "pl{fp}", "e1")?;
    identity(&r, "bel{ofb}", "(1 - e1)*(1 - e2)")?;
    identity(&r, "pl{ofb}", "1")?;
    Ok("four focal sets, K = 1, [0, e1] and [(1-e1)(1-e2), 1]".into())
}

fn third_evidence() -> Outcome {
    let r = symbolic("third_evidence")?;
    identity(&r, "bel{fp,ofb}-bel{fp}", "4/5*(1 - e2)/(4/5 + 1/5*e1)")?;
    identity(&r, "bel{fp}", "1/5*e1/(4/5 + 1/5*e1)")?;
    check_passed(&r, "birds_fly_below_rule_strength")?;
    Ok("birds fly 0.8(1-e2)/(0.8+0.2e1) < 1 - e2 on the grid, penguins fly 0.2e1/(0.8+0.2e1)".into())
}

fn product_intervals() -> Outcome {
    let r = symbolic("product_conflict")?;
    identity(&r, "bel{(a1,b)}", "1 - e1")?;
    identity(&r, "pl{(a1,b)}", "1")?;
    identity(&r, "bel{(a2,b)}", "0")?;
    identity(&r, "pl{(a2,b)}", "e1*e2")?;
    check_passed(&r, "minimum_specificity")?;
    Ok("[1-e1, 1] and [0, e1*e2]".into())
}

fn two_step() -> Outcome {
    let r = symbolic("two_step")?;
    identity(&r, "bel{b}", "e2*(1 - e1)/(1 + e2 - e1*e2)")?;
    identity(&r, "bel{~b}", "(1 - e1*e2)/(1 + e2 - e1*e2)")?;
    let r = rational("two_step", rat(1, 10), rat(1, 5))?;
    exact(&r, "bel{b}", rat(9, 59))?;
    exact(&r, "bel{~b}", rat(49, 59))?;
    exact(&r, "m{b,~b}", rat(1, 59))?;
    Ok("symbolic identities; (9/59, 49/59, 1/59) at (1/10, 1/5)".into())
}

fn bayes_consistency() -> Outcome {
    let checks = consistency_checks().map_err(|e| e.to_string())?;
    if let Some(c) = checks.iter().find(|c| !c.passed) {
        return Err(format!("{}: {}", c.name, c.detail));
    }
    Ok(format!("{} checks: update = e2, |Bel{{b}} - eps| <= 2eps^2 at 1/10, 1/100, 1/1000", checks.len()))
}

fn order_separation() -> Outcome {
    let checks = order_checks().map_err(|e| e.to_string())?;
    if let Some(c) = checks.iter().find(|c| !c.passed) {
        return Err(format!("{}: {}", c.name, c.detail));
    }
    let details: Vec<String> = checks.iter().map(|c| format!("{} ({})", c.name, c.detail)).collect();
    Ok(details.join("; "))
}

fn alternatives() -> Outcome {
    let r = symbolic("cabbage")?;
    identity(&r, "bel{fp}", "e1")?;
    identity(&r, "bel{fp,ofb}", "1 - e2 + e1*e2")?;
    let r = symbolic("partial_conditioning")?;
    identity(&r, "bel{nfp}", "e2*(1 - e1)/(e1 + e2 - e1*e2)")?;
    let r = rational("partial_conditioning", rat(1, 10), rat(1, 5))?;
    exact(&r, "bel{nfp}", rat(9, 14))?;
    Ok("cabbage Bel(fp) = e1, Bel({fp,ofb}) = 1 - e2 + e1e2; partial Bel{nfp} = 9/14".into())
}

#[derive(Debug, Clone)]
struct Raw(Vec<(u64, i64)>);

fn raw(n: usize) -> impl Strategy<Value = Raw> {
    prop::collection::vec((1..=(1u64 << n) - 1, 1i64..=9), 1..=4).prop_map(Raw)
}

fn build(frame: &Frame, raw: &Raw) -> MassFunction {
    let mut merged = std::collections::BTreeMap::<u64, i64>::new();
    for (m, w) in &raw.0 {
        *merged.entry(*m).or_default() += w;
    }
    let total: i64 = merged.values().sum();
    let a = merged
        .into_iter()
        .map(|(m, w)| (frame.from_mask(m).unwrap(), Scalar::Rational(rat(w, total))));
    MassFunction::new(frame, a).unwrap()
}

fn algebraic_laws() -> Outcome {
    const CASES: u32 = 1000;
    let mut runner = TestRunner::new(Config {
        cases: CASES,
        failure_persistence: None,
        ..Config::default()
    });
    let strategy = (1usize..=6).prop_flat_map(|n| (Just(n), raw(n), raw(n), raw(n)));
    let one = Scalar::Rational(rat(1, 1));
    runner
        .run(&strategy, |(n, a, b, c)| {
            let frame = Frame::new((0..n).map(|i| format!("x{i}"))).unwrap();
            let (m1, m2, m3) = (build(&frame, &a), build(&frame, &b), build(&frame, &c));
            let same = |x: &MassFunction, y: &MassFunction| masses_agree(x, y).unwrap();
            match (m1.combine(&m2), m2.combine(&m1)) {
                (Ok(x), Ok(y)) => prop_assert!(same(&x.mass, &y.mass), "commutativity"),
                (x, y) => prop_assert!(x.is_err() && y.is_err(), "commutativity of conflict"),
            }
            let left = m1.combine(&m2).and_then(|x| x.mass.combine(&m3));
            let right = m2.combine(&m3).and_then(|x| m1.combine(&x.mass));
            if let (Ok(l), Ok(r)) = (&left, &right) {
                prop_assert!(same(&l.mass, &r.mass), "associativity");
            }
            let vacuous = MassFunction::vacuous(&frame, Mode::Rational);
            prop_assert!(same(&m1.combine(&vacuous).unwrap().mass, &m1), "vacuous identity");
            for s in frame.all_subsets() {
                let bel = m1.belief(s).unwrap();
                prop_assert!(bel.compare(&m1.plausibility(s).unwrap()).unwrap().is_le(), "Bel <= Pl");
                let both = bel.add(&m1.belief(s.complement()).unwrap()).unwrap();
                prop_assert!(both.compare(&one).unwrap().is_le(), "Bel(A) + Bel(A^c) <= 1");
            }
            let back = mass_from_belief(&frame, |s| m1.belief(s).unwrap()).unwrap();
            prop_assert!(same(&back, &m1), "Mobius round trip");
            if n <= 3 {
                let fine = Frame::new((0..2 * n).map(|i| format!("y{i}"))).unwrap();
                let mapping: Vec<(String, Vec<String>)> = (0..n)
                    .map(|i| (format!("x{i}"), vec![format!("y{}", 2 * i), format!("y{}", 2 * i + 1)]))
                    .collect();
                let w = Refinement::new(&frame, &fine, &mapping).unwrap();
                let lifted = m1.lift(&w).unwrap();
                for s in frame.all_subsets() {
                    prop_assert_eq!(m1.belief(s).unwrap(), lifted.belief(w.refine(s).unwrap()).unwrap());
                }
            }
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok(format!(
        "{CASES} random cases on frames of 1..6 elements: commutativity, associativity, vacuous identity, \
         Bel <= Pl, Bel(A) + Bel(A^c) <= 1, Mobius round trip, lift consistency"
    ))
}

fn cli(args: &[&str]) -> Result<i32, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_belief"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    out.status.code().ok_or_else(|| "terminated by signal".to_string())
}

fn verify_command() -> Outcome {
    let code = cli(&["verify"])?;
    if code != 0 {
        return Err(format!("`belief verify` exited {code}"));
    }
    let targets = perturbation_targets().map_err(|e| e.to_string())?;
    let mut missed = Vec::new();
    for p in &targets {
        match verify(Some(p)) {
            Ok(v) if !v.passed() => {}
            Ok(_) => missed.push(p.to_string()),
            Err(e) => missed.push(format!("{p}: {e}")),
        }
    }
    if !missed.is_empty() {
        return Err(format!("{} perturbations not caught: {}", missed.len(), missed.join(", ")));
    }
    let picks = [0, targets.len() / 2, targets.len() - 1];
    for i in picks {
        let spec = targets[i].to_string();
        let code = cli(&["verify", "--perturb", &spec])?;
        if code != 1 {
            return Err(format!("`belief verify --perturb {spec}` exited {code}"));
        }
    }
    Ok(format!(
        "exit 0 unperturbed; all {} single-coefficient perturbations fail; CLI exits 1 on {} of them",
        targets.len(),
        picks.len()
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("naive combination", naive_combination),
        ("refined frame table", refined_table),
        ("third evidence", third_evidence),
        ("product-frame intervals", product_intervals),
        ("two-step recombination", two_step),
        ("Bayes consistency", bayes_consistency),
        ("order separation", order_separation),
        ("alternative interpretations", alternatives),
        ("algebraic laws", algebraic_laws),
        ("verify command", verify_command),
    ];
    let mut failed = 0;
    for (i, (name, criterion)) in criteria.iter().enumerate() {
        match criterion() {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(reason) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {reason}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
