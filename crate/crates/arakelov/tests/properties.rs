//! Property tests for the algebraic invariants: group laws, exactness,
//! additivity, normal-form idempotence and confluence, printer round trips,
//! and the float-side additivity and tail-bound contracts.

use num_complex::Complex64;
use proptest::prelude::*;

use arakelov::dsl;
use arakelov::line::{rat, ratio, ConstExpr, ConstSym, CurveContext, MetrizedLineExpr};
use arakelov::pairing::{
    deligne_pair, lambda_expand, normalize, normalize_with_order, PairKey, PairingVector, RuleSet,
};
use arakelov::spectral::theta::PeriodMatrix;
use arakelov::spectral::{self, theta, MultiplicityMode, TruncationParams};

fn arb_const() -> impl Strategy<Value = ConstExpr> {
    proptest::collection::vec((0u8..5, -20i64..20, 1i64..6), 0..4).prop_map(|terms| {
        let mut acc = ConstExpr::zero();
        for (sym, num, den) in terms {
            let sym = match sym {
                0 => ConstSym::Unit,
                1 => ConstSym::ZetaPrime,
                2 => ConstSym::Log2Pi,
                3 => ConstSym::DeltaM,
                _ => ConstSym::Named("alpha".to_owned()),
            };
            acc = acc.add(&ConstExpr::term(sym, ratio(num, den)));
        }
        acc
    })
}

fn arb_line(n_marks: u32) -> impl Strategy<Value = MetrizedLineExpr> {
    (
        -4i64..=4,
        proptest::collection::vec(-4i64..=4, n_marks as usize),
        arb_const(),
    )
        .prop_map(move |(k, marks, twist)| {
            let ctx = CurveContext::new(5, n_marks);
            let mut line = MetrizedLineExpr::canonical().power(&rat(k));
            for (i, e) in marks.iter().enumerate() {
                if *e != 0 {
                    line = line.tensor(
                        &ctx.mark_line(i as u32 + 1)
                            .expect("mark in range")
                            .power(&rat(*e)),
                    );
                }
            }
            line.twisted_by(&twist)
        })
}

proptest! {
    // (tensor, trivial, dual) form an abelian group on expressions
    #[test]
    fn tensor_group_laws(a in arb_line(3), b in arb_line(3), c in arb_line(3)) {
        prop_assert!(a.tensor(&a.dual()).is_trivial());
        prop_assert_eq!(a.tensor(&MetrizedLineExpr::trivial()), a.clone());
        prop_assert_eq!(a.tensor(&b), b.tensor(&a));
        prop_assert_eq!(a.tensor(&b).tensor(&c), a.tensor(&b.tensor(&c)));
    }

    // degree is additive; euler characteristics add with a (q-1) correction
    #[test]
    fn degree_and_chi_additivity(a in arb_line(3), b in arb_line(3)) {
        let ctx = CurveContext::new(3, 3);
        let da = a.degree(&ctx).unwrap();
        let db = b.degree(&ctx).unwrap();
        prop_assert_eq!(a.tensor(&b).degree(&ctx).unwrap(), da + db);
        let chi_a = a.euler_char(&ctx).unwrap();
        let chi_b = b.euler_char(&ctx).unwrap();
        let chi_ab = a.tensor(&b).euler_char(&ctx).unwrap();
        prop_assert_eq!(chi_ab, chi_a + chi_b + (ctx.genus() as i64 - 1));
    }

    // constant arithmetic is exact
    #[test]
    fn const_expr_exactness(x in arb_const(), y in arb_const(), k in -30i64..30, d in 1i64..8) {
        prop_assert_eq!(x.add(&y).sub(&y), x.clone());
        let s = ratio(k, d);
        prop_assert_eq!(x.scale(&s).add(&y.scale(&s)), x.add(&y).scale(&s));
        prop_assert!(x.sub(&x).is_zero());
    }

    // Serre duality needs no rule: lambda(L) = lambda(K - L) identically
    #[test]
    fn serre_duality_property(l in arb_line(2)) {
        let ctx = CurveContext::new(4, 2);
        let dual = MetrizedLineExpr::canonical().tensor(&l.dual());
        prop_assert_eq!(
            lambda_expand(&l, &ctx).unwrap(),
            lambda_expand(&dual, &ctx).unwrap()
        );
    }

    // normalize is idempotent and confluent under arbitrary rewrite orders
    #[test]
    fn normalize_idempotent_and_confluent(
        pairs in proptest::collection::vec((0u8..4, 0u8..4, -9i64..9, 1i64..4), 0..10),
        shuffle in proptest::collection::vec(0usize..64, 0..24),
    ) {
        let ctx = CurveContext::new(2, 3);
        let gens = ctx.generators();
        let mut v = PairingVector::zero();
        for (a, b, num, den) in pairs {
            v.add_pair(
                gens[a as usize % gens.len()],
                gens[b as usize % gens.len()],
                ratio(num, den),
            );
        }
        let rules = RuleSet::adjunction();
        let n1 = normalize(&v, &rules);
        prop_assert_eq!(normalize(&n1, &rules), n1.clone());
        // arbitrary key order, possibly with repeats and irrelevant keys
        let mut keys: Vec<PairKey> = v.pairs().map(|(k, _)| *k).collect();
        for i in 0..ctx.n_marks() {
            keys.push(PairKey::new(arakelov::line::Gen::K, arakelov::line::Gen::Mark(i)));
        }
        let mut order = keys.clone();
        for (step, s) in shuffle.iter().enumerate() {
            if !order.is_empty() {
                let i = step % order.len();
                let j = s % order.len();
                order.swap(i, j);
            }
        }
        prop_assert_eq!(normalize_with_order(&v, &rules, &order), n1);
    }

    // pairing is symmetric and bilinear over tensor
    #[test]
    fn pairing_bilinearity(a in arb_line(2), b in arb_line(2), c in arb_line(2)) {
        let ctx = CurveContext::new(5, 2);
        let ab = deligne_pair(&a, &b, &ctx).unwrap();
        let ba = deligne_pair(&b, &a, &ctx).unwrap();
        prop_assert_eq!(&ab, &ba);
        let ac = deligne_pair(&a, &c, &ctx).unwrap();
        let a_bc = deligne_pair(&a, &b.tensor(&c), &ctx).unwrap();
        prop_assert_eq!(a_bc, ab.add(&ac));
    }

    // log Z is additive over disjoint spectra unions
    #[test]
    fn log_zeta_additive(
        l1 in proptest::collection::vec((0.5f64..4.0, 1u32..4), 1..5),
        l2 in proptest::collection::vec((0.5f64..4.0, 1u32..4), 1..5),
        sre in 1.2f64..3.0,
        sim in -1.0f64..1.0,
    ) {
        let a = spectral::LengthSpectrum::new(l1, f64::INFINITY).unwrap();
        let b = spectral::LengthSpectrum::new(l2, f64::INFINITY).unwrap();
        let u = a.union(&b).unwrap();
        let s = Complex64::new(sre, sim);
        let la = spectral::log_selberg_zeta(&a, s, 40, MultiplicityMode::Weighted).unwrap();
        let lb = spectral::log_selberg_zeta(&b, s, 40, MultiplicityMode::Weighted).unwrap();
        let lu = spectral::log_selberg_zeta(&u, s, 40, MultiplicityMode::Weighted).unwrap();
        prop_assert!((lu - (la + lb)).norm() < 1e-12);
    }

    // the reported theta tail bound dominates the effect of widening the box
    #[test]
    fn theta_tail_bound_dominates(
        tre in -0.4f64..0.4,
        tim in 0.7f64..1.6,
        zre in -0.8f64..0.8,
        zim in -0.4f64..0.4,
    ) {
        let zm = PeriodMatrix::genus1(Complex64::new(tre, tim)).unwrap();
        prop_assume!(zm.min_eigenvalue_y() >= 0.5);
        let z = [Complex64::new(zre, zim)];
        let small = theta(&zm, &z, &TruncationParams { lattice_radius: 6, tol: 1.0, ..Default::default() }).unwrap();
        let big = theta(&zm, &z, &TruncationParams { lattice_radius: 8, tol: 1.0, ..Default::default() }).unwrap();
        prop_assert!((small.value - big.value).norm() <= small.tail_bound);
    }
}

// Printer round trip on generated expression trees.
fn arb_numexpr() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![(0i64..40).prop_map(|v| v.to_string()), Just("n".to_owned()),];
    leaf.prop_recursive(3, 12, 3, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}+{b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}-{b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}*{b})")),
            (inner, 1u32..4).prop_map(|(a, k)| format!("({a}^{k})")),
        ]
    })
}

fn arb_expr() -> impl Strategy<Value = String> {
    let atom = prop_oneof![
        Just("K".to_owned()),
        Just("O".to_owned()),
        Just("D".to_owned()),
        Just("P1".to_owned()),
        Just("P2".to_owned()),
        Just("Delta0".to_owned()),
        Just("Delta1".to_owned()),
        Just("Delta2".to_owned()),
        Just("e^{a(q)}".to_owned()),
        Just("e^{2*alpha - a(q)}".to_owned()),
    ];
    atom.prop_recursive(3, 16, 3, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("{a} * ({b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("{a} / ({b})")),
            (inner.clone(), arb_numexpr()).prop_map(|(a, e)| format!("({a})^({e})")),
            inner.prop_map(|a| format!("lambda(K * ({a}) / (K * ({a})))")),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn parse_print_roundtrip(body in arb_expr()) {
        let src = format!(
            "ctx q=2 N=2 rules=adjunction;\nforall n in 1..3: check {body} == {body};\n"
        );
        let Ok(script) = dsl::parse(&src) else {
            // generated nests like lambda(lambda(..)) are rejected later, at
            // evaluation; parsing itself must succeed for this grammar
            return Err(TestCaseError::fail("generated script must parse"));
        };
        let printed = dsl::print_script(&script);
        let reparsed = dsl::parse(&printed).expect("canonical print must parse");
        prop_assert_eq!(script, reparsed);
    }
}
