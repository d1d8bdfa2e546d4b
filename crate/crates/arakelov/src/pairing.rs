//! Canonical-form engine for Deligne pairings and determinant lines.
//!
//! A [`PairingVector`] is the additive log of a tensor word in metrized
//! Deligne pairings: a rational-coefficient vector over unordered pairs of
//! primitive generators plus an exact constant ledger. Determinant lines
//! enter through the 12-fold expansion
//!
//! ```text
//! 12 lambda(L) = 6<L,L> - 6<L,K> + <K,K> + a(q)
//! ```
//!
//! and claimed isometries are decided by normal-form equality after the
//! optional adjunction rewrite `<K,P> -> -<P,P>`.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::line::{
    deligne_constant, rat, ratio, ConstExpr, CurveContext, Gen, MetrizedLineExpr, Rat,
};

/// Unordered pair of generators in canonical order.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct PairKey(pub Gen, pub Gen);

impl PairKey {
    pub fn new(a: Gen, b: Gen) -> Self {
        if a <= b {
            PairKey(a, b)
        } else {
            PairKey(b, a)
        }
    }
}

/// Rational-coefficient vector over generator pairs plus a constant ledger.
///
/// This is the canonical form in which isometry claims are compared; zero
/// coefficients are never stored.
#[derive(Clone, PartialEq, Eq, Default, Debug)]
pub struct PairingVector {
    coeffs: BTreeMap<PairKey, Rat>,
    constant: ConstExpr,
}

impl PairingVector {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: ConstExpr) -> Self {
        Self {
            coeffs: BTreeMap::new(),
            constant: c,
        }
    }

    pub fn single(a: Gen, b: Gen, coeff: Rat) -> Self {
        let mut v = Self::zero();
        v.add_pair(a, b, coeff);
        v
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty() && self.constant.is_zero()
    }

    pub fn coeff(&self, a: Gen, b: Gen) -> Rat {
        self.coeffs
            .get(&PairKey::new(a, b))
            .cloned()
            .unwrap_or_else(Rat::zero)
    }

    pub fn constant_part(&self) -> &ConstExpr {
        &self.constant
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&PairKey, &Rat)> {
        self.coeffs.iter()
    }

    pub fn add_pair(&mut self, a: Gen, b: Gen, coeff: Rat) {
        if coeff.is_zero() {
            return;
        }
        let key = PairKey::new(a, b);
        let entry = self.coeffs.entry(key).or_insert_with(Rat::zero);
        *entry += coeff;
        if entry.is_zero() {
            self.coeffs.remove(&key);
        }
    }

    pub fn add_constant(&mut self, c: &ConstExpr) {
        self.constant = self.constant.add(c);
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (k, c) in &other.coeffs {
            out.add_pair(k.0, k.1, c.clone());
        }
        out.constant = out.constant.add(&other.constant);
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&rat(-1)))
    }

    pub fn scale(&self, k: &Rat) -> Self {
        if k.is_zero() {
            return Self::zero();
        }
        Self {
            coeffs: self.coeffs.iter().map(|(key, c)| (*key, c * k)).collect(),
            constant: self.constant.scale(k),
        }
    }

    /// True when all pair coefficients and constant coefficients are integers.
    pub fn is_integral(&self) -> bool {
        self.coeffs.values().all(|c| c.is_integer()) && self.constant.is_integral()
    }

    /// True when the pair coefficients (the actual line exponents) are
    /// integers; the constant ledger is a metric scale and may stay
    /// fractional.
    pub fn has_integral_exponents(&self) -> bool {
        self.coeffs.values().all(|c| c.is_integer())
    }

    /// Drop the constant ledger, keeping only the bundle classes. Used for
    /// checks made at the level of line-bundle isomorphism rather than
    /// isometry.
    pub fn classes_only(&self) -> Self {
        Self {
            coeffs: self.coeffs.clone(),
            constant: ConstExpr::zero(),
        }
    }

    pub fn display<'a>(&'a self, ctx: &'a CurveContext) -> PairingDisplay<'a> {
        PairingDisplay { v: self, ctx }
    }
}

pub struct PairingDisplay<'a> {
    v: &'a PairingVector,
    ctx: &'a CurveContext,
}

impl fmt::Display for PairingDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.v.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (key, c) in &self.v.coeffs {
            let neg = c.is_negative();
            let mag = c.abs();
            if first {
                if neg {
                    write!(f, "-")?;
                }
                first = false;
            } else if neg {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            if !mag.is_one() {
                write!(f, "{mag}*")?;
            }
            write!(
                f,
                "<{},{}>",
                self.ctx.gen_name(key.0),
                self.ctx.gen_name(key.1)
            )?;
        }
        if !self.v.constant.is_zero() {
            if first {
                write!(f, "const[{}]", self.v.constant)?;
            } else {
                write!(f, " + const[{}]", self.v.constant)?;
            }
        }
        Ok(())
    }
}

/// Which block of Delta definitions a rule set uses.
///
/// The line-bundle Delta block and its omega-Arakelov metrization expand
/// identically in this algebra; the cuspidal block carries the alpha/beta
/// constant twists and half-integer exponents.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum DeltaDef {
    /// omega-Arakelov block: Delta1 = sum <P_k,P_k>, Delta2 = sum_{i<j} <P_i,P_j>.
    Arakelov,
    /// cuspidal block: Delta1 = <Kbar, O(sum Pbar)>^{-1}, Delta2 = <Kbar(sum Pbar), O(sum Pbar)>^{1/2}.
    Cuspidal,
}

/// Constant twists of the cuspidal regime.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct AlphaBeta {
    pub alpha: ConstExpr,
    pub betas: Vec<ConstExpr>,
}

impl AlphaBeta {
    /// Fully symbolic alpha; beta_1..beta_N.
    pub fn symbolic(n_marks: u32) -> Self {
        Self {
            alpha: ConstExpr::named("alpha"),
            betas: (1..=n_marks)
                .map(|i| ConstExpr::named(&format!("beta_{i}")))
                .collect(),
        }
    }

    /// The hyperbolic specialization of 6.2: alpha = a_Ar,hyp and every
    /// beta_i the common cusp constant c_hyp.
    pub fn hyperbolic(n_marks: u32) -> Self {
        Self {
            alpha: ConstExpr::symbol(crate::line::ConstSym::AArHyp),
            betas: vec![ConstExpr::symbol(crate::line::ConstSym::CHyp); n_marks as usize],
        }
    }

    pub fn beta_sum(&self) -> ConstExpr {
        self.betas
            .iter()
            .fold(ConstExpr::zero(), |acc, b| acc.add(b))
    }
}

/// Rewrite configuration for [`normalize`] and the Delta/lambda builders.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RuleSet {
    pub adjunction_enabled: bool,
    pub delta_definitions: DeltaDef,
    pub alpha_beta: Option<AlphaBeta>,
}

impl RuleSet {
    /// The omega-Arakelov regime: adjunction isometry in force, the
    /// untwisted Delta block and reference metric on `K`.
    pub fn adjunction() -> Self {
        Self {
            adjunction_enabled: true,
            delta_definitions: DeltaDef::Arakelov,
            alpha_beta: None,
        }
    }

    /// The cuspidal regime with the given alpha/beta constants. Adjunction
    /// is deliberately off: these identities hold without it.
    pub fn cuspidal(ab: AlphaBeta) -> Self {
        Self {
            adjunction_enabled: false,
            delta_definitions: DeltaDef::Cuspidal,
            alpha_beta: Some(ab),
        }
    }

    pub fn cuspidal_symbolic(n_marks: u32) -> Self {
        Self::cuspidal(AlphaBeta::symbolic(n_marks))
    }

    pub fn validate(&self, ctx: &CurveContext) -> Result<()> {
        match self.delta_definitions {
            DeltaDef::Cuspidal => {
                if self.adjunction_enabled {
                    return Err(Error::RuleSet(
                        "the cuspidal regime must not use the adjunction rewrite".to_owned(),
                    ));
                }
                let ab = self.alpha_beta.as_ref().ok_or_else(|| {
                    Error::RuleSet("cuspidal rules need alpha/beta constants".to_owned())
                })?;
                if ab.betas.len() != ctx.n_marks() as usize {
                    return Err(Error::RuleSet(format!(
                        "expected {} beta constants, got {}",
                        ctx.n_marks(),
                        ab.betas.len()
                    )));
                }
                // Hyperbolic-metric precondition on the signature.
                if 2 * ctx.genus() + ctx.n_marks() < 3 {
                    return Err(Error::Context(format!(
                        "signature ({}, {}) violates 2q + N >= 3",
                        ctx.genus(),
                        ctx.n_marks()
                    )));
                }
            }
            DeltaDef::Arakelov => {
                if self.alpha_beta.is_some() {
                    return Err(Error::RuleSet(
                        "alpha/beta constants belong to the cuspidal regime".to_owned(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// The reference metric on `K` that lambda expansions use in this regime.
    pub fn reference_k(&self) -> MetrizedLineExpr {
        match &self.alpha_beta {
            Some(ab) => MetrizedLineExpr::canonical().twisted_by(&ab.alpha),
            None => MetrizedLineExpr::canonical(),
        }
    }

    /// `O(Pbar_1 + .. + Pbar_N)` with this regime's beta twists.
    pub fn twisted_divisor(&self, ctx: &CurveContext) -> MetrizedLineExpr {
        match &self.alpha_beta {
            Some(ab) => ctx.cusp_divisor().twisted_by(&ab.beta_sum()),
            None => ctx.cusp_divisor(),
        }
    }
}

/// Bilinear expansion of the metrized Deligne pairing.
///
/// Constant twists pair against degrees: `<L*e^c, L'> = <L,L'> + c*deg(L')`,
/// and the pairing of two pure twists contributes nothing.
pub fn deligne_pair(
    a: &MetrizedLineExpr,
    b: &MetrizedLineExpr,
    ctx: &CurveContext,
) -> Result<PairingVector> {
    ctx.validate_line(a)?;
    ctx.validate_line(b)?;
    let mut v = PairingVector::zero();
    for (ga, ea) in a.class() {
        for (gb, eb) in b.class() {
            v.add_pair(*ga, *gb, ea * eb);
        }
    }
    v.add_constant(&a.twist().scale(&b.degree_rat(ctx)?));
    v.add_constant(&b.twist().scale(&a.degree_rat(ctx)?));
    Ok(v)
}

/// The vector of `12 lambda(L)` with the untwisted omega-Arakelov `K` as
/// the reference metric:
/// `12 lambda(L) = 6<L,L> - 6<L,K> + <K,K> + a(q)`.
pub fn lambda_expand(line: &MetrizedLineExpr, ctx: &CurveContext) -> Result<PairingVector> {
    lambda_expand_ref(line, &MetrizedLineExpr::canonical(), ctx)
}

/// The vector of `12 lambda(L)` with an arbitrary (possibly twisted)
/// reference metric on `K` substituted into the `<L,K>` and `<K,K>` slots.
/// A reference twisted by a named symbol carries the normalization
/// ambiguity of the determinant metric through the ledger as that free
/// constant.
pub fn lambda_expand_ref(
    line: &MetrizedLineExpr,
    k_ref: &MetrizedLineExpr,
    ctx: &CurveContext,
) -> Result<PairingVector> {
    let mut v = deligne_pair(line, line, ctx)?.scale(&rat(6));
    v = v.sub(&deligne_pair(line, k_ref, ctx)?.scale(&rat(6)));
    v = v.add(&deligne_pair(k_ref, k_ref, ctx)?);
    v.add_constant(&deligne_constant(ctx.genus() as i64));
    Ok(v)
}

/// The Mumford-type line bundle class: `n K + (n-1) D` for `n > 0`,
/// `O` for `n = 0`, `n (K + D)` for `n < 0`, with `D = P_1 + .. + P_N`.
pub fn lambda_n(n: i64, ctx: &CurveContext) -> MetrizedLineExpr {
    let d = ctx.cusp_divisor();
    let k = MetrizedLineExpr::canonical();
    match n {
        0 => MetrizedLineExpr::trivial(),
        n if n > 0 => k.power(&rat(n)).tensor(&d.power(&rat(n - 1))),
        n => k.tensor(&d).power(&rat(n)),
    }
}

/// The metrized Mumford bundle of the selected regime: alpha/beta twists
/// on the factors for cuspidal rules, untwisted for the omega-Arakelov
/// rules.
pub fn lambda_n_line(n: i64, ctx: &CurveContext, rules: &RuleSet) -> MetrizedLineExpr {
    match &rules.alpha_beta {
        None => lambda_n(n, ctx),
        Some(_) => {
            let kbar = rules.reference_k();
            let dbar = rules.twisted_divisor(ctx);
            match n {
                0 => MetrizedLineExpr::trivial(),
                n if n > 0 => kbar.power(&rat(n)).tensor(&dbar.power(&rat(n - 1))),
                n => kbar.tensor(&dbar).power(&rat(n)),
            }
        }
    }
}

/// `12 lambda_n` as a pairing vector under the given rules.
pub fn lambda_n_vector(n: i64, ctx: &CurveContext, rules: &RuleSet) -> Result<PairingVector> {
    lambda_expand_ref(&lambda_n_line(n, ctx, rules), &rules.reference_k(), ctx)
}

/// The Delta bundles of the selected definition block, as pairing vectors.
pub fn delta_bundle(kind: u8, ctx: &CurveContext, rules: &RuleSet) -> Result<PairingVector> {
    if kind > 2 {
        return Err(Error::DeltaKindOutOfRange(kind));
    }
    let sections = ctx.sections();
    match rules.delta_definitions {
        DeltaDef::Arakelov => {
            let k = MetrizedLineExpr::canonical();
            match kind {
                0 => {
                    let kd = k.tensor(&ctx.cusp_divisor());
                    deligne_pair(&kd, &kd, ctx)
                }
                1 => {
                    let mut v = PairingVector::zero();
                    for &g in &sections {
                        v.add_pair(g, g, Rat::one());
                    }
                    Ok(v)
                }
                _ => {
                    let mut v = PairingVector::zero();
                    for (i, &a) in sections.iter().enumerate() {
                        for &b in &sections[(i + 1)..] {
                            v.add_pair(a, b, Rat::one());
                        }
                    }
                    Ok(v)
                }
            }
        }
        DeltaDef::Cuspidal => {
            let kbar = rules.reference_k();
            let dbar = rules.twisted_divisor(ctx);
            match kind {
                0 => {
                    let kd = kbar.tensor(&dbar);
                    deligne_pair(&kd, &kd, ctx)
                }
                1 => Ok(deligne_pair(&kbar, &dbar, ctx)?.scale(&rat(-1))),
                _ => {
                    let kd = kbar.tensor(&dbar);
                    Ok(deligne_pair(&kd, &dbar, ctx)?.scale(&ratio(1, 2)))
                }
            }
        }
    }
}

/// Keys the adjunction rewrite applies to: `<K, P>` with `P` a section.
fn adjunction_keys(v: &PairingVector) -> Vec<PairKey> {
    v.pairs()
        .map(|(k, _)| *k)
        .filter(|k| k.0 == Gen::K && k.1 != Gen::K)
        .collect()
}

fn apply_adjunction_at(v: &mut PairingVector, key: PairKey) {
    let c = v.coeff(key.0, key.1);
    if c.is_zero() {
        return;
    }
    v.add_pair(key.0, key.1, -c.clone());
    v.add_pair(key.1, key.1, -c);
}

/// Canonical form of a pairing vector under the rule set.
///
/// With adjunction: every `<K,P>` is rewritten to `-<P,P>`, leaving the
/// basis `{<K,K>} + {<P_i,P_j>}`. Without adjunction the vector is already
/// canonical. Idempotent.
pub fn normalize(v: &PairingVector, rules: &RuleSet) -> PairingVector {
    let mut out = v.clone();
    if rules.adjunction_enabled {
        for key in adjunction_keys(&out) {
            apply_adjunction_at(&mut out, key);
        }
    }
    out
}

/// `normalize` applying the rewrite steps one key at a time in the given
/// order (steps for keys no longer present are skipped, and remaining keys
/// are flushed at the end). Used to test confluence.
pub fn normalize_with_order(
    v: &PairingVector,
    rules: &RuleSet,
    order: &[PairKey],
) -> PairingVector {
    let mut out = v.clone();
    if rules.adjunction_enabled {
        for key in order {
            if key.0 == Gen::K && key.1 != Gen::K {
                apply_adjunction_at(&mut out, *key);
            }
        }
        for key in adjunction_keys(&out) {
            apply_adjunction_at(&mut out, key);
        }
    }
    out
}

/// `<L, O(P)>`: the pairing realization of the restriction `L||_P`. Under
/// adjunction the restriction isometry becomes a normal-form identity:
/// `12 lambda(L) - 12 lambda(L - P) = 12 <L, P>`.
pub fn restriction_line(
    line: &MetrizedLineExpr,
    mark: u32,
    ctx: &CurveContext,
) -> Result<PairingVector> {
    let p = ctx.mark_line(mark)?;
    deligne_pair(line, &p, ctx)
}

/// Bilinear substitution `K -> K~ + R + S`, `P_i -> P~_i` into the context
/// of the normalized one-node degeneration. Returns the image vector along
/// with the boundary context (genus `q - 1`, marks plus `R`, `S`).
pub fn boundary_substitute(
    v: &PairingVector,
    ctx: &CurveContext,
) -> Result<(PairingVector, CurveContext)> {
    if ctx.is_boundary() {
        return Err(Error::AlreadyBoundary);
    }
    let bctx = ctx.boundary_context()?;
    let image = |g: Gen| -> Vec<Gen> {
        match g {
            Gen::K => vec![Gen::K, Gen::NodeR, Gen::NodeS],
            other => vec![other],
        }
    };
    let mut out = PairingVector::constant(v.constant_part().clone());
    for (key, c) in v.pairs() {
        for ga in image(key.0) {
            for gb in image(key.1) {
                out.add_pair(ga, gb, c.clone());
            }
        }
    }
    Ok((out, bctx))
}

/// Degree-compatibility predicate for a separating node: a line bundle of
/// degrees `d1`, `d2` on components of genera `q1`, `q2` admits a continuous
/// family of admissible metrics through the degeneration iff
/// `d1 (2 q2 - 1) = d2 (2 q1 - 1)`.
pub fn separating_degree_compatible(d1: i64, q1: u32, d2: i64, q2: u32) -> bool {
    d1 * (2 * q2 as i64 - 1) == d2 * (2 * q1 as i64 - 1)
}

/// Formal expression over lines, pairings, determinant lines and Delta
/// bundles; the shape both sides of an [`IdentityClaim`] take.
#[derive(Clone, Debug)]
pub enum FormalExpr {
    Line(MetrizedLineExpr),
    Lambda(Box<FormalExpr>),
    LambdaN(i64),
    Delta(u8),
    Pair(Box<FormalExpr>, Box<FormalExpr>),
    Power(Box<FormalExpr>, Rat),
    Tensor(Vec<FormalExpr>),
}

impl FormalExpr {
    pub fn line(l: MetrizedLineExpr) -> Self {
        FormalExpr::Line(l)
    }

    pub fn lambda(e: FormalExpr) -> Self {
        FormalExpr::Lambda(Box::new(e))
    }

    pub fn pair(a: FormalExpr, b: FormalExpr) -> Self {
        FormalExpr::Pair(Box::new(a), Box::new(b))
    }

    pub fn power(e: FormalExpr, k: Rat) -> Self {
        FormalExpr::Power(Box::new(e), k)
    }
}

/// An isometry claim between two formal expressions over one context and
/// one rule set.
#[derive(Clone, Debug)]
pub struct IdentityClaim {
    pub lhs: FormalExpr,
    pub rhs: FormalExpr,
}

/// Outcome of [`verify_identity`]: either both sides normalize identically
/// or the difference vector is returned.
#[derive(Clone, Debug, PartialEq)]
pub enum Verdict {
    Equal,
    Unequal { diff: PairingVector },
}

/// A formal expression evaluates either to a bare metrized line or to a
/// pairing-class vector (once lambda, a pairing or a Delta is involved).
#[derive(Clone, Debug)]
pub enum Value {
    Line(MetrizedLineExpr),
    Vector(PairingVector),
}

impl Value {
    /// Promote to a vector where that is meaningful: pure constant twists
    /// become constants; a nontrivial bare line cannot be compared against
    /// determinant-line expressions.
    fn into_vector(self) -> Result<PairingVector> {
        match self {
            Value::Vector(v) => Ok(v),
            Value::Line(l) if l.is_pure_twist() => Ok(PairingVector::constant(l.twist().clone())),
            Value::Line(_) => Err(Error::MalformedClaim(
                "cannot mix a bare line bundle with determinant-line expressions".to_owned(),
            )),
        }
    }
}

/// Evaluate a formal expression to a [`Value`]. Lambda contributes its
/// 12-expansion scaled by 1/12, so that exponents written in a claim act at
/// the natural scale; exact rational arithmetic keeps this lossless.
pub fn eval_formal(expr: &FormalExpr, ctx: &CurveContext, rules: &RuleSet) -> Result<Value> {
    match expr {
        FormalExpr::Line(l) => {
            ctx.validate_line(l)?;
            Ok(Value::Line(l.clone()))
        }
        FormalExpr::Lambda(inner) => {
            let v = match eval_formal(inner, ctx, rules)? {
                Value::Line(l) => l,
                Value::Vector(_) => {
                    return Err(Error::MalformedClaim(
                        "lambda( ) takes a line-bundle expression".to_owned(),
                    ))
                }
            };
            let twelve = lambda_expand_ref(&v, &rules.reference_k(), ctx)?;
            Ok(Value::Vector(twelve.scale(&ratio(1, 12))))
        }
        FormalExpr::LambdaN(n) => {
            let twelve = lambda_n_vector(*n, ctx, rules)?;
            Ok(Value::Vector(twelve.scale(&ratio(1, 12))))
        }
        FormalExpr::Delta(k) => Ok(Value::Vector(delta_bundle(*k, ctx, rules)?)),
        FormalExpr::Pair(a, b) => {
            let (la, lb) = match (eval_formal(a, ctx, rules)?, eval_formal(b, ctx, rules)?) {
                (Value::Line(la), Value::Line(lb)) => (la, lb),
                _ => {
                    return Err(Error::MalformedClaim(
                        "pair( , ) takes two line-bundle expressions".to_owned(),
                    ))
                }
            };
            Ok(Value::Vector(deligne_pair(&la, &lb, ctx)?))
        }
        FormalExpr::Power(e, k) => Ok(match eval_formal(e, ctx, rules)? {
            Value::Line(l) => Value::Line(l.power(k)),
            Value::Vector(v) => Value::Vector(v.scale(k)),
        }),
        FormalExpr::Tensor(parts) => {
            let mut acc: Option<Value> = None;
            for p in parts {
                let v = eval_formal(p, ctx, rules)?;
                acc = Some(match acc {
                    None => v,
                    Some(Value::Line(a)) => match v {
                        Value::Line(b) => Value::Line(a.tensor(&b)),
                        Value::Vector(b) => Value::Vector(b.add(&Value::Line(a).into_vector()?)),
                    },
                    Some(Value::Vector(a)) => Value::Vector(a.add(&v.into_vector()?)),
                });
            }
            Ok(acc.unwrap_or(Value::Line(MetrizedLineExpr::trivial())))
        }
    }
}

/// Decide a claimed isometry by normal-form comparison.
///
/// Both sides are expanded, normalized under the rule set and compared as
/// exact vectors. The x12 scale of each side must clear to integral
/// coefficients, otherwise the claim is malformed.
pub fn verify_identity(
    claim: &IdentityClaim,
    ctx: &CurveContext,
    rules: &RuleSet,
) -> Result<Verdict> {
    rules.validate(ctx)?;
    let l = eval_formal(&claim.lhs, ctx, rules)?;
    let r = eval_formal(&claim.rhs, ctx, rules)?;
    match (l, r) {
        (Value::Line(a), Value::Line(b)) => {
            if a == b {
                Ok(Verdict::Equal)
            } else {
                // Render the line difference as a diagonal vector so one
                // diff type serves both kinds of claims.
                let mut diff = PairingVector::zero();
                for (g, e) in a.tensor(&b.dual()).class() {
                    diff.add_pair(*g, *g, e.clone());
                }
                diff.add_constant(&a.twist().sub(b.twist()));
                Ok(Verdict::Unequal { diff })
            }
        }
        (l, r) => {
            let lv = l.into_vector()?;
            let rv = r.into_vector()?;
            for (side, v) in [("left", &lv), ("right", &rv)] {
                if !v.scale(&rat(12)).has_integral_exponents() {
                    return Err(Error::MalformedClaim(format!(
                        "{side} side does not clear the x12 scale to integral exponents"
                    )));
                }
            }
            let diff = normalize(&lv, rules).sub(&normalize(&rv, rules));
            if diff.is_zero() {
                Ok(Verdict::Equal)
            } else {
                Ok(Verdict::Unequal { diff })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx22() -> CurveContext {
        CurveContext::new(2, 2)
    }

    #[test]
    fn pair_is_bilinear() {
        let ctx = ctx22();
        let k = MetrizedLineExpr::canonical();
        let v = deligne_pair(&k, &k, &ctx).unwrap();
        assert_eq!(v.coeff(Gen::K, Gen::K), rat(1));
        assert!(v.constant_part().is_zero());

        let p1 = ctx.mark_line(1).unwrap();
        let kp = k.tensor(&p1);
        let v = deligne_pair(&kp, &p1, &ctx).unwrap();
        assert_eq!(v.coeff(Gen::K, Gen::Mark(0)), rat(1));
        assert_eq!(v.coeff(Gen::Mark(0), Gen::Mark(0)), rat(1));
    }

    #[test]
    fn pair_constant_rule() {
        // <(K, twist c), K> at q=2: constant 2c since deg K = 2.
        let ctx = CurveContext::new(2, 0);
        let c = ConstExpr::named("c");
        let kc = MetrizedLineExpr::canonical().twisted_by(&c);
        let v = deligne_pair(&kc, &MetrizedLineExpr::canonical(), &ctx).unwrap();
        assert_eq!(v.coeff(Gen::K, Gen::K), rat(1));
        assert_eq!(*v.constant_part(), c.scale(&rat(2)));

        // two pure twists pair to zero
        let a = MetrizedLineExpr::twist_line(ConstExpr::named("x"));
        let b = MetrizedLineExpr::twist_line(ConstExpr::named("y"));
        assert!(deligne_pair(&a, &b, &ctx).unwrap().is_zero());
    }

    #[test]
    fn lambda_expand_examples() {
        let ctx = ctx22();
        // lambda(O): {K,K}:1 plus a(q)
        let v = lambda_expand(&MetrizedLineExpr::trivial(), &ctx).unwrap();
        assert_eq!(v.coeff(Gen::K, Gen::K), rat(1));
        assert_eq!(*v.constant_part(), deligne_constant(2));
        // lambda(K) equals lambda(O) (Serre)
        let vk = lambda_expand(&MetrizedLineExpr::canonical(), &ctx).unwrap();
        assert_eq!(v, vk);
        // lambda(O(P1))
        let vp = lambda_expand(&ctx.mark_line(1).unwrap(), &ctx).unwrap();
        assert_eq!(vp.coeff(Gen::Mark(0), Gen::Mark(0)), rat(6));
        assert_eq!(vp.coeff(Gen::K, Gen::Mark(0)), rat(-6));
        assert_eq!(vp.coeff(Gen::K, Gen::K), rat(1));
        assert_eq!(*vp.constant_part(), deligne_constant(2));
    }

    #[test]
    fn delta_examples() {
        let rules = RuleSet::adjunction();
        let ctx1 = CurveContext::new(2, 1);
        let d0 = delta_bundle(0, &ctx1, &rules).unwrap();
        assert_eq!(d0.coeff(Gen::K, Gen::K), rat(1));
        assert_eq!(d0.coeff(Gen::K, Gen::Mark(0)), rat(2));
        assert_eq!(d0.coeff(Gen::Mark(0), Gen::Mark(0)), rat(1));

        let ctx = ctx22();
        let d1 = delta_bundle(1, &ctx, &rules).unwrap();
        assert_eq!(d1.coeff(Gen::Mark(0), Gen::Mark(0)), rat(1));
        assert_eq!(d1.coeff(Gen::Mark(1), Gen::Mark(1)), rat(1));
        let d2 = delta_bundle(2, &ctx, &rules).unwrap();
        assert_eq!(d2.coeff(Gen::Mark(0), Gen::Mark(1)), rat(1));
        assert!(delta_bundle(3, &ctx, &rules).is_err());
    }

    #[test]
    fn lambda_n_cases() {
        let ctx = ctx22();
        assert_eq!(lambda_n(1, &ctx), MetrizedLineExpr::canonical());
        assert_eq!(lambda_n(0, &ctx), MetrizedLineExpr::trivial());
        let lm1 = lambda_n(-1, &ctx);
        assert_eq!(lm1.exponent(Gen::K), rat(-1));
        assert_eq!(lm1.exponent(Gen::Mark(0)), rat(-1));
        assert_eq!(lm1.exponent(Gen::Mark(1)), rat(-1));
    }

    #[test]
    fn adjunction_rewrite_and_idempotence() {
        let rules = RuleSet::adjunction();
        let v = PairingVector::single(Gen::K, Gen::Mark(0), rat(1));
        let n = normalize(&v, &rules);
        assert_eq!(n.coeff(Gen::Mark(0), Gen::Mark(0)), rat(-1));
        assert!(n.coeff(Gen::K, Gen::Mark(0)).is_zero());
        assert_eq!(normalize(&n, &rules), n);

        let no_adj = RuleSet::cuspidal_symbolic(1);
        assert_eq!(normalize(&v, &no_adj), v);
    }

    #[test]
    fn restriction_adjunction_trivializes() {
        // <K(P1), O(P1)> under adjunction -> trivial (the adjunction isometry)
        let ctx = CurveContext::new(2, 1);
        let rules = RuleSet::adjunction();
        let kp = MetrizedLineExpr::canonical().tensor(&ctx.mark_line(1).unwrap());
        let v = restriction_line(&kp, 1, &ctx).unwrap();
        assert!(normalize(&v, &rules).is_zero());
        // <O, P> = 0
        let vo = restriction_line(&MetrizedLineExpr::trivial(), 1, &ctx).unwrap();
        assert!(vo.is_zero());
    }

    #[test]
    fn mumford_n2_worked_example() {
        // lambda_2^12 == Delta0^13 * Delta1 * Delta2^-14 * e^{a(q)} at q=2, N=2
        let ctx = ctx22();
        let rules = RuleSet::adjunction();
        let claim = IdentityClaim {
            lhs: FormalExpr::power(FormalExpr::LambdaN(2), rat(12)),
            rhs: FormalExpr::Tensor(vec![
                FormalExpr::power(FormalExpr::Delta(0), rat(13)),
                FormalExpr::Delta(1),
                FormalExpr::power(FormalExpr::Delta(2), rat(-14)),
                FormalExpr::line(MetrizedLineExpr::twist_line(deligne_constant(2))),
            ]),
        };
        assert_eq!(
            verify_identity(&claim, &ctx, &rules).unwrap(),
            Verdict::Equal
        );
    }

    #[test]
    fn dropped_constant_is_detected() {
        // lambda(O)^12 == <K,K> fails with diff exactly a(q)
        let ctx = ctx22();
        let rules = RuleSet::adjunction();
        let claim = IdentityClaim {
            lhs: FormalExpr::power(
                FormalExpr::lambda(FormalExpr::line(MetrizedLineExpr::trivial())),
                rat(12),
            ),
            rhs: FormalExpr::pair(
                FormalExpr::line(MetrizedLineExpr::canonical()),
                FormalExpr::line(MetrizedLineExpr::canonical()),
            ),
        };
        match verify_identity(&claim, &ctx, &rules).unwrap() {
            Verdict::Unequal { diff } => {
                assert!(diff.pairs().count() == 0);
                assert_eq!(*diff.constant_part(), deligne_constant(2));
            }
            Verdict::Equal => panic!("expected a detected constant"),
        }
    }

    #[test]
    fn serre_duality_is_free() {
        let ctx = ctx22();
        for line in [
            MetrizedLineExpr::canonical().power(&rat(3)),
            ctx.mark_line(1)
                .unwrap()
                .tensor(&ctx.mark_line(2).unwrap().power(&rat(-2))),
            MetrizedLineExpr::trivial().twisted_by(&ConstExpr::named("f")),
        ] {
            let k_minus = MetrizedLineExpr::canonical().tensor(&line.dual());
            let a = lambda_expand(&line, &ctx).unwrap();
            let b = lambda_expand(&k_minus, &ctx).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn f2_scaling_shifts_by_euler_characteristic() {
        let ctx = CurveContext::new(3, 1);
        let line = MetrizedLineExpr::canonical()
            .power(&rat(2))
            .tensor(&ctx.mark_line(1).unwrap());
        let f = ConstExpr::named("f");
        let shifted = line.twisted_by(&f);
        let base = lambda_expand(&line, &ctx).unwrap();
        let moved = lambda_expand(&shifted, &ctx).unwrap();
        let chi = line.euler_char(&ctx).unwrap();
        let expected = base.add(&PairingVector::constant(f.scale(&rat(12 * chi))));
        assert_eq!(moved, expected);
    }

    #[test]
    fn boundary_substitution_images() {
        let ctx = ctx22();
        // <K, P1> -> <K~,P~1> + <R,P~1> + <S,P~1>
        let v = PairingVector::single(Gen::K, Gen::Mark(0), rat(1));
        let (bv, bctx) = boundary_substitute(&v, &ctx).unwrap();
        assert_eq!(bctx.genus(), 1);
        assert_eq!(bv.coeff(Gen::K, Gen::Mark(0)), rat(1));
        assert_eq!(bv.coeff(Gen::Mark(0), Gen::NodeR), rat(1));
        assert_eq!(bv.coeff(Gen::Mark(0), Gen::NodeS), rat(1));
        // trivial -> trivial
        let (bz, _) = boundary_substitute(&PairingVector::zero(), &ctx).unwrap();
        assert!(bz.is_zero());
        // degree bookkeeping: image of K has boundary degree 2q-2
        let imgdeg = bctx.degree_of(Gen::K).unwrap()
            + bctx.degree_of(Gen::NodeR).unwrap()
            + bctx.degree_of(Gen::NodeS).unwrap();
        assert_eq!(imgdeg, 2 * ctx.genus() as i64 - 2);
        assert!(boundary_substitute(&bv, &bctx).is_err());
    }

    #[test]
    fn separating_degree_predicate() {
        assert!(separating_degree_compatible(3, 2, 1, 1));
        assert!(!separating_degree_compatible(1, 2, 1, 1));
    }

    #[test]
    fn malformed_fractional_scale() {
        let ctx = ctx22();
        let rules = RuleSet::adjunction();
        let claim = IdentityClaim {
            lhs: FormalExpr::power(FormalExpr::LambdaN(1), ratio(1, 5)),
            rhs: FormalExpr::LambdaN(1),
        };
        assert!(matches!(
            verify_identity(&claim, &ctx, &rules),
            Err(Error::MalformedClaim(_))
        ));
    }
}
