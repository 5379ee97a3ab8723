use belief_core::scalars::{parse_rational, rat, BiPoly, Monomial, RatFunc, Rational, Scalar};
use proptest::prelude::*;

fn rational() -> impl Strategy<Value = Rational> {
    (-1000i64..=1000, 1i64..=1000).prop_map(|(n, d)| rat(n, d))
}

fn poly() -> impl Strategy<Value = BiPoly> {
    prop::collection::vec(((0u32..=2, 0u32..=2), -6i64..=6), 0..=4).prop_map(|terms| {
        terms.into_iter().fold(BiPoly::zero(), |acc, ((i, j), c)| {
            acc.add(&BiPoly::term(rat(c, 1), Monomial::new(i, j)))
        })
    })
}

fn nonzero_poly() -> impl Strategy<Value = BiPoly> {
    poly().prop_filter("non-zero", |p| !p.is_zero())
}

fn ratfunc() -> impl Strategy<Value = RatFunc> {
    (poly(), nonzero_poly()).prop_map(|(n, d)| RatFunc::new(n, d).unwrap())
}

fn eq(a: &RatFunc, b: &RatFunc) -> bool {
    a.equals(b).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn rational_field_axioms(a in rational(), b in rational(), c in rational()) {
        let (a, b, c) = (Scalar::Rational(a), Scalar::Rational(b), Scalar::Rational(c));
        prop_assert_eq!(a.add(&b).unwrap(), b.add(&a).unwrap());
        prop_assert_eq!(a.mul(&b).unwrap(), b.mul(&a).unwrap());
        prop_assert_eq!(a.add(&b).unwrap().add(&c).unwrap(), a.add(&b.add(&c).unwrap()).unwrap());
        prop_assert_eq!(a.mul(&b).unwrap().mul(&c).unwrap(), a.mul(&b.mul(&c).unwrap()).unwrap());
        prop_assert_eq!(
            a.mul(&b.add(&c).unwrap()).unwrap(),
            a.mul(&b).unwrap().add(&a.mul(&c).unwrap()).unwrap()
        );
        prop_assert!(a.add(&a.neg()).unwrap().is_zero());
        if !a.is_zero() {
            prop_assert_eq!(a.div(&a).unwrap(), Scalar::Rational(rat(1, 1)));
        } else {
            prop_assert!(b.div(&a).is_err());
        }
    }

    #[test]
    fn ratfunc_field_axioms(a in ratfunc(), b in ratfunc(), c in ratfunc()) {
        prop_assert!(eq(&a.add(&b).unwrap(), &b.add(&a).unwrap()));
        prop_assert!(eq(&a.mul(&b).unwrap(), &b.mul(&a).unwrap()));
        prop_assert!(eq(&a.add(&b).unwrap().add(&c).unwrap(), &a.add(&b.add(&c).unwrap()).unwrap()));
        prop_assert!(eq(&a.mul(&b).unwrap().mul(&c).unwrap(), &a.mul(&b.mul(&c).unwrap()).unwrap()));
        prop_assert!(eq(
            &a.mul(&b.add(&c).unwrap()).unwrap(),
            &a.mul(&b).unwrap().add(&a.mul(&c).unwrap()).unwrap()
        ));
        prop_assert!(a.sub(&a).unwrap().is_zero());
        if !a.is_zero() {
            prop_assert!(eq(&a.div(&a).unwrap(), &RatFunc::one()));
            prop_assert!(eq(&a.recip().unwrap().recip().unwrap(), &a));
        } else {
            prop_assert!(a.recip().is_err());
        }
    }

    #[test]
    fn ratfunc_equality_is_an_equivalence(a in ratfunc(), p in nonzero_poly(), q in nonzero_poly(), other in ratfunc()) {
        let b = RatFunc::new(a.numerator().mul(&p).unwrap(), a.denominator().mul(&p).unwrap()).unwrap();
        let c = RatFunc::new(b.numerator().mul(&q).unwrap(), b.denominator().mul(&q).unwrap()).unwrap();
        prop_assert!(eq(&a, &a));
        prop_assert!(eq(&a, &b) && eq(&b, &a));
        prop_assert!(eq(&b, &c) && eq(&a, &c));
        prop_assert_eq!(eq(&a, &other), eq(&other, &a));
        if eq(&a, &other) && eq(&other, &c) {
            prop_assert!(eq(&a, &c));
        }
    }

    #[test]
    fn evaluation_is_a_homomorphism(a in ratfunc(), b in ratfunc(), x in rational(), y in rational()) {
        let (Ok(va), Ok(vb)) = (a.eval(&x, &y), b.eval(&x, &y)) else {
            return Ok(());
        };
        prop_assert_eq!(a.add(&b).unwrap().eval(&x, &y).unwrap(), &va + &vb);
        prop_assert_eq!(a.sub(&b).unwrap().eval(&x, &y).unwrap(), &va - &vb);
        prop_assert_eq!(a.mul(&b).unwrap().eval(&x, &y).unwrap(), &va * &vb);
    }

    #[test]
    fn fractions_round_trip(r in (any::<i64>(), 1i64..=i64::MAX).prop_map(|(n, d)| rat(n, d))) {
        prop_assert_eq!(parse_rational(&r.to_string()).unwrap(), r.clone());
        let s = Scalar::Rational(r.clone());
        prop_assert_eq!(parse_rational(&s.to_string()).unwrap(), r);
    }

    #[test]
    fn ratfunc_text_round_trips(a in ratfunc()) {
        let back: RatFunc = a.to_string().parse().unwrap();
        prop_assert!(eq(&back, &a), "{} reparsed as {}", a, back);
    }
}
