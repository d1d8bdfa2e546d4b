//! Built-in verification suites: the Mumford isometry grid, randomized
//! structural checks (Serre, restriction, confluence), the boundary
//! factorization, and the Chern-form bookkeeping with its sign cross-check.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::chern::{chern_standard, delta_coordinates, sign_cross_check, FormSym};
use crate::dsl::{self, Report, RulesChoice};
use crate::line::{rat, ratio, ConstExpr, CurveContext, Gen, MetrizedLineExpr};
use crate::pairing::{
    boundary_substitute, deligne_pair, lambda_expand_ref, lambda_n, lambda_n_vector, normalize,
    normalize_with_order, restriction_line, AlphaBeta, PairKey, PairingVector, RuleSet,
};

const MUMFORD_CHK: &str = include_str!("../resources/mumford.chk");
const RESTRICTION_CHK: &str = include_str!("../resources/restriction.chk");

/// Names for the checks of `mumford.chk`, by position.
const MUMFORD_NAMES: [&str; 5] = [
    "Serre isometry lambda_n ~ lambda_{1-n}",
    "Mumford isometry lambda_n^12 ~ Delta0^(6n^2-6n+1) Delta1 Delta2^(10-12n) e^{a(q)}",
    "Mumford isometry lambda_n ~ lambda_1^(6n^2-6n+1) Delta1^(-n(n-1)/2) Delta2^((n-1)^2) e^{-n(n-1)a(q)/2}",
    "Noether isometry lambda(O)^12 ~ Delta0 Delta1 Delta2^-2 e^{a(q)}",
    "Serre isometry lambda_1 ~ lambda_0",
];

const RESTRICTION_NAMES: [&str; 4] = [
    "restriction isometry lambda(K^2) ~ lambda(K^2 - P1) <K^2,P1>",
    "restriction isometry lambda(K(P1)) ~ lambda(K) <K(P1),P1>",
    "restriction isometry lambda(O) ~ lambda(O(-P1)) <O,P1>",
    "untwisted Serre isometry lambda(K) ~ lambda(O)",
];

/// Run one `.chk` resource under an explicit context, renaming the
/// positional check labels.
fn run_resource(
    source: &str,
    names: &[&str],
    q: u32,
    n_marks: u32,
    rules: RulesChoice,
    report: &mut Report,
) {
    let tag = match rules {
        RulesChoice::Adjunction => "adjunction",
        RulesChoice::Cuspidal => "cuspidal",
    };
    let header = format!("ctx q={q} N={n_marks} rules={tag};\n");
    let script = match dsl::parse(&format!("{header}{source}")) {
        Ok(s) => s,
        Err(e) => {
            report.error(
                format!("[q={q},N={n_marks},{tag}] resource parse"),
                e.to_string(),
            );
            return;
        }
    };
    // Map each check's position to its suite name, in order.
    let mut positions: Vec<(u32, u32)> = Vec::new();
    for item in &script.items {
        if let dsl::Item::Check(c) = item {
            positions.push((c.line, c.col));
        }
    }
    let sub = dsl::run(&script, None);
    for mut entry in sub.entries {
        for (idx, (l, c)) in positions.iter().enumerate() {
            let pat = format!("check@{l}:{c}");
            if entry.label.starts_with(&pat) {
                let rest = entry.label[pat.len()..].to_owned();
                let name = names.get(idx).copied().unwrap_or("check");
                entry.label = format!("{name} [q={q},N={n_marks},{tag}]{rest}");
                break;
            }
        }
        report.entries.push(entry);
    }
    report.notes.extend(sub.notes);
}

/// Configuration for the Mumford grid.
#[derive(Clone, Debug)]
pub struct MumfordOptions {
    pub genera: Vec<u32>,
    pub marks: Vec<u32>,
    pub regimes: Vec<RulesChoice>,
}

impl Default for MumfordOptions {
    fn default() -> Self {
        Self {
            genera: (2..=5).collect(),
            marks: (0..=4).collect(),
            regimes: vec![RulesChoice::Adjunction, RulesChoice::Cuspidal],
        }
    }
}

/// The Mumford suite: Serre and both generalized Mumford isometries for
/// n = 1..6 over the (q, N) grid, under the omega-Arakelov (adjunction)
/// rules and the cuspidal rules with fully symbolic alpha/beta constants,
/// plus restriction-isometry spot checks in the adjunction regime.
pub fn mumford_suite(opts: &MumfordOptions) -> Report {
    let mut report = Report::default();
    for &q in &opts.genera {
        for &n in &opts.marks {
            for &regime in &opts.regimes {
                run_resource(MUMFORD_CHK, &MUMFORD_NAMES, q, n, regime, &mut report);
                if regime == RulesChoice::Adjunction && n >= 1 {
                    run_resource(
                        RESTRICTION_CHK,
                        &RESTRICTION_NAMES,
                        q,
                        n,
                        regime,
                        &mut report,
                    );
                }
            }
        }
    }
    report
}

fn random_line(rng: &mut ChaCha8Rng, ctx: &CurveContext) -> MetrizedLineExpr {
    let mut line = MetrizedLineExpr::canonical().power(&rat(rng.gen_range(-3..=3)));
    for i in 1..=ctx.n_marks() {
        let e = rng.gen_range(-3..=3);
        if e != 0 {
            line = line.tensor(&ctx.mark_line(i).expect("mark in range").power(&rat(e)));
        }
    }
    if rng.gen_bool(0.5) {
        let num = rng.gen_range(-6..=6);
        let den = rng.gen_range(1..=4);
        line = line.twisted_by(&ConstExpr::named("f").scale(&ratio(num, den)));
    }
    line
}

fn random_context(rng: &mut ChaCha8Rng) -> CurveContext {
    CurveContext::new(rng.gen_range(0..=5), rng.gen_range(1..=4))
}

/// Randomized structural suite: Serre duality and the restriction isometry hold
/// for randomized bundles without dedicated rewrite rules, the adjunction
/// rewrite is confluent under randomized application orders, and cuspidal
/// verdicts do not depend on the alpha/beta values.
pub fn serre_suite(cases: usize, rewrite_orders: usize) -> Report {
    let mut report = Report::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED_0001);

    // Serre duality, adjunction and cuspidal reference metrics.
    let mut serre_fail = None;
    for case in 0..cases {
        let ctx = random_context(&mut rng);
        let line = random_line(&mut rng, &ctx);
        let use_cuspidal = case % 2 == 1 && 2 * ctx.genus() + ctx.n_marks() >= 3;
        let k_ref = if use_cuspidal {
            MetrizedLineExpr::canonical().twisted_by(&ConstExpr::named("alpha"))
        } else {
            MetrizedLineExpr::canonical()
        };
        let dual_side = k_ref.tensor(&line.dual());
        let a = lambda_expand_ref(&line, &k_ref, &ctx).expect("valid context");
        let b = lambda_expand_ref(&dual_side, &k_ref, &ctx).expect("valid context");
        if a != b {
            serre_fail = Some(format!(
                "case {case}: q={}, N={}: lambda(L) != lambda(K-L)",
                ctx.genus(),
                ctx.n_marks()
            ));
            break;
        }
    }
    match serre_fail {
        None => report.pass(format!(
            "Serre duality lambda(L) ~ lambda(K-L), {cases} randomized bundles, no dedicated rule"
        )),
        Some(d) => report.fail("Serre duality randomized", d),
    }

    // restriction isometry under adjunction, stated at the x12 scale.
    let rules = RuleSet::adjunction();
    let mut f3_fail = None;
    for case in 0..cases {
        let ctx = random_context(&mut rng);
        let line = random_line(&mut rng, &ctx);
        let mark = rng.gen_range(1..=ctx.n_marks());
        let p = ctx.mark_line(mark).expect("mark in range");
        let lhs =
            lambda_expand_ref(&line, &MetrizedLineExpr::canonical(), &ctx).expect("valid context");
        let rhs = lambda_expand_ref(
            &line.tensor(&p.dual()),
            &MetrizedLineExpr::canonical(),
            &ctx,
        )
        .expect("valid context")
        .add(
            &restriction_line(&line, mark, &ctx)
                .expect("mark in range")
                .scale(&rat(12)),
        );
        if normalize(&lhs, &rules) != normalize(&rhs, &rules) {
            f3_fail = Some(format!(
                "case {case}: restriction isometry failed at q={}",
                ctx.genus()
            ));
            break;
        }
    }
    match f3_fail {
        None => report.pass(format!(
            "restriction isometry 12 lambda(L) - 12 lambda(L-P) = 12 <L,P>, {cases} randomized bundles (adjunction)"
        )),
        Some(d) => report.fail("restriction isometry randomized", d),
    }

    // Confluence: shuffled rewrite orders agree with the canonical result.
    let mut conf_fail = None;
    'conf: for case in 0..rewrite_orders {
        let ctx = CurveContext::new(rng.gen_range(2..=4), rng.gen_range(1..=4));
        let mut v = PairingVector::zero();
        for _ in 0..8 {
            let gens: Vec<Gen> = ctx.generators();
            let a = gens[rng.gen_range(0..gens.len())];
            let b = gens[rng.gen_range(0..gens.len())];
            v.add_pair(a, b, ratio(rng.gen_range(-12..=12), rng.gen_range(1..=3)));
        }
        let reference = normalize(&v, &RuleSet::adjunction());
        // random order over all candidate keys, with duplicates
        let mut keys: Vec<PairKey> = v.pairs().map(|(k, _)| *k).collect();
        for i in 0..ctx.n_marks() {
            keys.push(PairKey::new(Gen::K, Gen::Mark(i)));
        }
        for _ in 0..keys.len() {
            let i = rng.gen_range(0..keys.len());
            let j = rng.gen_range(0..keys.len());
            keys.swap(i, j);
        }
        let shuffled = normalize_with_order(&v, &RuleSet::adjunction(), &keys);
        if shuffled != reference {
            conf_fail = Some(format!("case {case}: order-dependent normal form"));
            break 'conf;
        }
    }
    match conf_fail {
        None => report.pass(format!(
            "normal-form confluence, {rewrite_orders} randomized rewrite orders"
        )),
        Some(d) => report.fail("normal-form confluence", d),
    }

    // Cuspidal verdicts are independent of the alpha/beta values.
    let mut ab_fail = None;
    for (q, n) in [(2u32, 2u32), (3, 1), (4, 3)] {
        let ctx = CurveContext::new(q, n);
        let instantiations = [
            RuleSet::cuspidal_symbolic(n),
            RuleSet::cuspidal(AlphaBeta {
                alpha: ConstExpr::zero(),
                betas: vec![ConstExpr::zero(); n as usize],
            }),
            RuleSet::cuspidal(AlphaBeta {
                alpha: ConstExpr::rational(ratio(7, 3)),
                betas: (0..n)
                    .map(|i| ConstExpr::rational(ratio(i as i64 + 1, 5)))
                    .collect(),
            }),
        ];
        for nn in 1..=6i64 {
            let mut verdicts = Vec::new();
            for rules in &instantiations {
                let lhs = lambda_n_vector(nn, &ctx, rules).expect("valid context");
                let c1 = rat(6 * nn * nn - 6 * nn + 1);
                let rhs = crate::pairing::delta_bundle(0, &ctx, rules)
                    .expect("valid context")
                    .scale(&c1)
                    .add(&crate::pairing::delta_bundle(1, &ctx, rules).expect("valid context"))
                    .add(
                        &crate::pairing::delta_bundle(2, &ctx, rules)
                            .expect("valid context")
                            .scale(&rat(10 - 12 * nn)),
                    )
                    .add(&PairingVector::constant(crate::line::deligne_constant(
                        q as i64,
                    )));
                verdicts.push(normalize(&lhs, rules) == normalize(&rhs, rules));
            }
            if !(verdicts.iter().all(|v| *v)) {
                ab_fail = Some(format!(
                    "q={q}, N={n}, n={nn}: verdict depends on alpha/beta"
                ));
            }
        }
    }
    match ab_fail {
        None => report.pass(
            "cuspidal verdicts independent of the alpha/beta instantiation (symbolic, zero, rational)",
        ),
        Some(d) => report.fail("alpha/beta independence", d),
    }

    report
}

/// True when every pair in the vector couples two distinct sections
/// (marks or nodes): the classes that relation (a) of the boundary list
/// makes algebraically trivial.
fn in_mark_orthogonal_span(v: &PairingVector) -> bool {
    v.pairs()
        .all(|(k, _)| k.0 != Gen::K && k.1 != Gen::K && k.0 != k.1)
}

/// Boundary factorization suite: the node substitutions of the Delta0
/// block, the mark pairings and the canonical-mark pairings hold exactly;
/// the determinant-line factorization holds through basis expansion up to
/// classes that the mark-orthogonality relation kills, with the residual
/// reported.
pub fn boundary_suite() -> Report {
    let mut report = Report::default();
    let rules = RuleSet::adjunction();

    for (q, n_marks) in [(2u32, 2u32), (3, 0), (3, 3), (4, 1)] {
        let ctx = CurveContext::new(q, n_marks);
        let k = MetrizedLineExpr::canonical();
        let kd = k.tensor(&ctx.cusp_divisor());

        // expected boundary context and bundles; K~(P~_1+..+P~_N+R+S) is
        // exactly the image of K tensored with the surviving marks
        let bctx = ctx.boundary_context().expect("genus >= 1");
        let bk = MetrizedLineExpr::canonical()
            .tensor(&MetrizedLineExpr::of_gen(Gen::NodeR))
            .tensor(&MetrizedLineExpr::of_gen(Gen::NodeS));
        let mut bkd = bk.clone();
        for i in 1..=n_marks {
            bkd = bkd.tensor(&bctx.mark_line(i).expect("mark in range"));
        }

        // (a) <K(D), K(D)> -> <K~(D~+R+S), K~(D~+R+S)>
        let lhs = deligne_pair(&kd, &kd, &ctx).expect("valid context");
        let (image, bctx2) = boundary_substitute(&lhs, &ctx).expect("smooth context");
        let want = deligne_pair(&bkd, &bkd, &bctx).expect("valid context");
        if image == want && bctx2 == bctx {
            report.pass(format!(
                "boundary factorization of <K(D),K(D)> [q={q},N={n_marks}]"
            ));
        } else {
            report.fail(
                format!("boundary factorization of <K(D),K(D)> [q={q},N={n_marks}]"),
                format!("diff: {}", image.sub(&want).display(&bctx)),
            );
        }

        // (b) <K(D), P_i> -> <K~(D~+R+S), P~_i>
        let mut ok_b = true;
        for i in 1..=n_marks {
            let p = ctx.mark_line(i).expect("mark in range");
            let lhs = deligne_pair(&kd, &p, &ctx).expect("valid context");
            let (image, _) = boundary_substitute(&lhs, &ctx).expect("smooth context");
            let want = deligne_pair(&bkd, &bctx.mark_line(i).expect("mark in range"), &bctx)
                .expect("valid context");
            ok_b &= image == want;
        }
        report.pass_or_fail(
            ok_b,
            format!("boundary factorization of <K(D),P_i> [q={q},N={n_marks}]"),
            "substitution image differs from the boundary pairing",
        );

        // (c) <K, P_i> -> <K~, P~_i> + <R+S, P~_i>
        let mut ok_c = true;
        for i in 1..=n_marks {
            let p = ctx.mark_line(i).expect("mark in range");
            let lhs = deligne_pair(&k, &p, &ctx).expect("valid context");
            let (image, _) = boundary_substitute(&lhs, &ctx).expect("smooth context");
            let want = deligne_pair(&bk, &bctx.mark_line(i).expect("mark in range"), &bctx)
                .expect("valid context");
            ok_c &= image == want;
        }
        report.pass_or_fail(
            ok_c,
            format!("boundary factorization of <K,P_i> [q={q},N={n_marks}]"),
            "substitution image differs from <K~,P~_i> + <R+S,P~_i>",
        );

        // degree bookkeeping of the image of K
        let kdeg = bctx.degree_of(Gen::K).expect("valid gen")
            + bctx.degree_of(Gen::NodeR).expect("valid gen")
            + bctx.degree_of(Gen::NodeS).expect("valid gen");
        report.pass_or_fail(
            kdeg == 2 * q as i64 - 2,
            format!("boundary degree bookkeeping deg(K image) = 2q-2 [q={q},N={n_marks}]"),
            "degree mismatch",
        );

        // (d'): subst(12 lambda_n) vs 12 lambda~_n + <K~, R+S>, at the level
        // of line-bundle classes, modulo mark-orthogonal pairs.
        for n in 1..=6i64 {
            let lam = lambda_expand_ref(&lambda_n(n, &ctx), &k, &ctx).expect("valid context");
            let (image, _) = boundary_substitute(&lam, &ctx).expect("smooth context");
            let blam = lambda_expand_ref(&lambda_n(n, &bctx), &k, &bctx).expect("valid context");
            let mut rhs = blam;
            for node in [Gen::NodeR, Gen::NodeS] {
                rhs = rhs.add(
                    &deligne_pair(
                        &MetrizedLineExpr::canonical(),
                        &MetrizedLineExpr::of_gen(node),
                        &bctx,
                    )
                    .expect("valid context"),
                );
            }
            let residual = normalize(&image.classes_only(), &rules)
                .sub(&normalize(&rhs.classes_only(), &rules));
            if in_mark_orthogonal_span(&residual) {
                report.pass(format!(
                    "boundary factorization of lambda_n^12 modulo mark-orthogonal classes [q={q},N={n_marks},n={n}]"
                ));
                if !residual.is_zero() {
                    report.note(format!(
                        "lambda_n^12 factorization residual [q={q},N={n_marks},n={n}]: {}; algebraically trivial by mark-orthogonality, while its metric content (stack-level boundary divisors) is out of scope",
                        residual.display(&bctx)
                    ));
                }
            } else {
                report.fail(
                    format!("boundary factorization of lambda_n^12 [q={q},N={n_marks},n={n}]"),
                    format!(
                        "residual outside the mark-orthogonal span: {}",
                        residual.display(&bctx)
                    ),
                );
            }
        }
    }

    for rel in ["(c)", "(d)", "(e)"] {
        report.flag(
            format!("universal pullback relation {rel}"),
            "unimplemented: stating it needs pullback-tagged generators across moduli levels",
        );
    }
    report
}

/// Chern bookkeeping suite: the symbolic 12 c1(lambda_n) identity, the
/// Delta0 and TZ assignments, and the flagged n=1 sign cross-check.
pub fn chern_suite() -> Report {
    let mut report = Report::default();
    let ctx = CurveContext::new(2, 2);
    let rules = RuleSet::cuspidal_symbolic(2);

    // Delta0 block carries omega_WP/pi^2
    match crate::pairing::delta_bundle(0, &ctx, &rules)
        .and_then(|d0| chern_standard(&d0, &ctx, &rules))
    {
        Ok(f)
            if f.coeff(&FormSym::WpOverPiSq) == rat(1)
                && f.coeff(&FormSym::C1Delta1).clone() == rat(0)
                && f.coeff(&FormSym::C1Delta2) == rat(0) =>
        {
            report.pass("c1(Delta0) = omega_WP/pi^2 under the standard assignment")
        }
        Ok(f) => report.fail("c1(Delta0) assignment", format!("got {f}")),
        Err(e) => report.error("c1(Delta0) assignment", e.to_string()),
    }

    // 12 c1(lambda_n) symbolically in n: the coordinates are polynomials of
    // degree <= 2 in n (lambda_n is linear in n, the pairing bilinear), so
    // three interpolation points pin them; the remaining points re-check.
    let mut sym_ok = true;
    let mut detail = String::new();
    for n in 1..=8i64 {
        match lambda_n_vector(n, &ctx, &rules).and_then(|v| delta_coordinates(&v, &ctx, &rules)) {
            Ok((c0, c1, c2)) => {
                let want = (rat(6 * n * n - 6 * n + 1), rat(1), rat(10 - 12 * n));
                if (c0, c1, c2) != want {
                    sym_ok = false;
                    detail = format!("mismatch at n={n}");
                }
            }
            Err(e) => {
                sym_ok = false;
                detail = e.to_string();
            }
        }
    }
    report.pass_or_fail(
        sym_ok,
        "12 c1(lambda_n) = (6n^2-6n+1) omega_WP/pi^2 + c1(Delta1) - (12n-10) c1(Delta2), symbolic n (degree-2 certificate over n=1..8)",
        detail,
    );

    // TZ realization: c1(Delta1 Delta2^-2) reduces to (4/3) omega_TZ.
    match crate::pairing::delta_bundle(1, &ctx, &rules).and_then(|d1| {
        let d2 = crate::pairing::delta_bundle(2, &ctx, &rules)?;
        chern_standard(&d1.add(&d2.scale(&rat(-2))), &ctx, &rules)
    }) {
        Ok(f) => {
            let red = crate::chern::tz_reduce(&f);
            report.pass_or_fail(
                red.coeff(&FormSym::OmegaTz) == ratio(4, 3)
                    && red.coeff(&FormSym::C1Delta2) == rat(0)
                    && red.coeff(&FormSym::WpOverPiSq) == rat(0),
                "(4/3) omega_TZ realized as c1(Delta1 Delta2^-2)",
                format!("got {red}"),
            );
        }
        Err(e) => report.error("TZ realization", e.to_string()),
    }

    // The printed n=1 relation carries the opposite TZ sign; emit the
    // documented flag instead of a silent pass (or a spurious failure).
    match sign_cross_check(&ctx, &rules) {
        Ok(chk) if !chk.is_consistent() => {
            report.flag(
                "sign cross-check at n=1: plus-sign TZ realization vs printed minus-sign relation",
                format!(
                    "the two printed relations disagree by {}; documented inconsistency, carried as a flag",
                    chk.difference
                ),
            );
        }
        Ok(_) => report.fail(
            "sign cross-check at n=1",
            "expected the documented inconsistency; the engine suddenly finds the signs consistent",
        ),
        Err(e) => report.error("sign cross-check at n=1", e.to_string()),
    }

    report.note(
        "Polyakov-type shift: this engine derives h0(K e^c) = h0(K) e^{(2q-2)c/6} in the squared-norm convention, a factor 2 against the printed (2q-2)c/12; whether the printed exponent is a norm or a squared norm is unstated, so the discrepancy is reported, not resolved",
    );
    report
}

/// Everything: Mumford grid, randomized structural checks, boundary
/// factorization and Chern bookkeeping, with the desk-scale scope note.
pub fn all_suites() -> Report {
    let mut report = Report::default();
    report.merge(mumford_suite(&MumfordOptions::default()));
    report.merge(serre_suite(200, 100));
    report.merge(boundary_suite());
    report.merge(chern_suite());
    report.note(
        "not reproducible at desk scale: Quillen-metric equality, Faltings delta values, \
         actual WP/TZ metric evaluation on moduli, volume constancy of the hyperbolic \
         admissible metric, and degeneration asymptotics; these enter only through the \
         property checks above",
    );
    report
}

impl Report {
    fn pass_or_fail(&mut self, ok: bool, label: impl Into<String>, detail: impl Into<String>) {
        if ok {
            self.pass(label);
        } else {
            self.fail(label, detail);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::StatusKind;

    #[test]
    fn mumford_grid_all_pass() {
        let report = mumford_suite(&MumfordOptions::default());
        assert!(report.is_success(), "{}", report.render_text());
        // 4 genera x 5 mark counts x 2 regimes x 20 checks, plus the
        // restriction block in the adjunction regime for N >= 1
        assert_eq!(report.count(StatusKind::Pass), 4 * 5 * 2 * 20 + 4 * 4 * 4);
    }

    #[test]
    fn serre_suite_passes() {
        let report = serre_suite(50, 25);
        assert!(report.is_success(), "{}", report.render_text());
    }

    #[test]
    fn boundary_suite_passes_with_reported_residual() {
        let report = boundary_suite();
        assert!(report.is_success(), "{}", report.render_text());
        assert!(report
            .notes
            .iter()
            .any(|n| n.contains("factorization residual")));
        assert_eq!(report.count(StatusKind::Flagged), 3); // deferred pullbacks
    }

    #[test]
    fn chern_suite_flags_the_sign() {
        let report = chern_suite();
        assert!(report.is_success(), "{}", report.render_text());
        assert_eq!(report.count(StatusKind::Flagged), 1);
        assert!(report
            .entries
            .iter()
            .any(|e| e.status == StatusKind::Flagged && e.label.contains("sign cross-check")));
    }
}
