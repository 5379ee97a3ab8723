use belief_core::evidence::{mass_from_belief, MassFunction};
use belief_core::frames::{Frame, Refinement, Subset};
use belief_core::scalars::{rat, Mode, Scalar};
use belief_core::scenarios::masses_agree;
use belief_core::Error;
use proptest::prelude::*;

/// Focal masks with positive integer weights; normalized into a mass
/// function over a frame of `n` elements.
#[derive(Debug, Clone)]
struct RawMass(Vec<(u64, i64)>);

fn raw_mass(n: usize) -> impl Strategy<Value = RawMass> {
    let full = (1u64 << n) - 1;
    prop::collection::vec((1..=full, 1i64..=12), 1..=4).prop_map(RawMass)
}

fn frame_of(n: usize) -> Frame {
    Frame::new((0..n).map(|i| format!("x{i}"))).unwrap()
}

fn build(frame: &Frame, raw: &RawMass) -> MassFunction {
    let mut merged: std::collections::BTreeMap<u64, i64> = Default::default();
    for (mask, w) in &raw.0 {
        *merged.entry(*mask).or_default() += w;
    }
    let total: i64 = merged.values().sum();
    let assignments = merged
        .into_iter()
        .map(|(mask, w)| (frame.from_mask(mask).unwrap(), Scalar::Rational(rat(w, total))));
    MassFunction::new(frame, assignments).unwrap()
}

fn sized<T: Strategy>(f: impl Fn(usize) -> T) -> impl Strategy<Value = (usize, T::Value)> {
    (1usize..=6).prop_flat_map(move |n| (Just(n), f(n)))
}

fn same(a: &MassFunction, b: &MassFunction) -> bool {
    masses_agree(a, b).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn combination_commutes((n, (a, b)) in sized(|n| (raw_mass(n), raw_mass(n)))) {
        let frame = frame_of(n);
        let (m1, m2) = (build(&frame, &a), build(&frame, &b));
        match (m1.combine(&m2), m2.combine(&m1)) {
            (Ok(x), Ok(y)) => {
                prop_assert!(same(&x.mass, &y.mass));
                prop_assert_eq!(x.k, y.k);
            }
            (Err(Error::TotalConflict), Err(Error::TotalConflict)) => {}
            other => prop_assert!(false, "asymmetric outcome {:?}", other),
        }
    }

    #[test]
    fn combination_associates((n, (a, b, c)) in sized(|n| (raw_mass(n), raw_mass(n), raw_mass(n)))) {
        let frame = frame_of(n);
        let (m1, m2, m3) = (build(&frame, &a), build(&frame, &b), build(&frame, &c));
        let left = m1.combine(&m2).and_then(|x| x.mass.combine(&m3));
        let right = m2.combine(&m3).and_then(|x| m1.combine(&x.mass));
        if let (Ok(l), Ok(r)) = (&left, &right) {
            prop_assert!(same(&l.mass, &r.mass));
        } else {
            prop_assert!(left.is_err() && right.is_err());
        }
    }

    #[test]
    fn vacuous_is_identity((n, a) in sized(raw_mass)) {
        let frame = frame_of(n);
        let m = build(&frame, &a);
        let v = MassFunction::vacuous(&frame, Mode::Rational);
        let c = m.combine(&v).unwrap();
        prop_assert!(same(&c.mass, &m));
        prop_assert_eq!(c.k, Scalar::Rational(rat(1, 1)));
        prop_assert!(same(&v.combine(&m).unwrap().mass, &m));
    }

    #[test]
    fn belief_bounds((n, a) in sized(raw_mass)) {
        let frame = frame_of(n);
        let m = build(&frame, &a);
        for s in frame.all_subsets() {
            let bel = m.belief(s).unwrap();
            let pl = m.plausibility(s).unwrap();
            let bel_c = m.belief(s.complement()).unwrap();
            prop_assert!(bel.compare(&pl).unwrap().is_le());
            prop_assert!(bel.add(&bel_c).unwrap().compare(&Scalar::Rational(rat(1, 1))).unwrap().is_le());
        }
    }

    #[test]
    fn mobius_inverts_belief((n, a) in sized(raw_mass)) {
        let frame = frame_of(n);
        let m = build(&frame, &a);
        let back = mass_from_belief(&frame, |s| m.belief(s).unwrap()).unwrap();
        prop_assert!(same(&back, &m));
    }

    #[test]
    fn lifting_preserves_belief((images, order, a) in refinement_and_mass()) {
        let coarse = frame_of(images.len());
        let fine_size: usize = images.iter().sum();
        let fine = Frame::new(order.iter().map(|i| format!("y{i}"))).unwrap();
        let mut next = 0;
        let mapping: Vec<(String, Vec<String>)> = images
            .iter()
            .enumerate()
            .map(|(i, &size)| {
                let block = (next..next + size).map(|j| format!("y{j}")).collect();
                next += size;
                (format!("x{i}"), block)
            })
            .collect();
        prop_assert_eq!(next, fine_size);
        let w = Refinement::new(&coarse, &fine, &mapping).unwrap();
        let m = build(&coarse, &a);
        let lifted = m.lift(&w).unwrap();
        for s in coarse.all_subsets() {
            let fine_s: Subset = w.refine(s).unwrap();
            prop_assert_eq!(m.belief(s).unwrap(), lifted.belief(fine_s).unwrap());
            prop_assert_eq!(m.plausibility(s).unwrap(), lifted.plausibility(fine_s).unwrap());
        }
    }
}

/// Image sizes per coarse label, a shuffled order of the fine labels, and
/// a mass on the coarse frame.
fn refinement_and_mass() -> impl Strategy<Value = (Vec<usize>, Vec<usize>, RawMass)> {
    prop::collection::vec(1usize..=2, 1..=3).prop_flat_map(|images| {
        let fine: usize = images.iter().sum();
        let order = Just((0..fine).collect::<Vec<_>>()).prop_shuffle();
        let c = images.len();
        (Just(images), order, raw_mass(c))
    })
}

#[test]
fn total_conflict_is_reported() {
    let frame = frame_of(2);
    let a = MassFunction::categorical(&frame, frame.singleton("x0").unwrap(), Mode::Rational).unwrap();
    let b = MassFunction::categorical(&frame, frame.singleton("x1").unwrap(), Mode::Rational).unwrap();
    assert_eq!(a.combine(&b).unwrap_err(), Error::TotalConflict);
}
