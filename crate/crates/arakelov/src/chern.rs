//! Symbolic first-Chern-form bookkeeping over the moduli of marked curves.
//!
//! Pairing classes push forward to named (1,1)-form symbols: the standard
//! assignment sends the Delta0 block to `omega_WP / pi^2` and keeps
//! `c1(Delta1)`, `c1(Delta2)` as symbols; the Takhtajan-Zograf reduction
//! substitutes `c1(Delta1 Delta2^-2) = (4/3) omega_TZ`. Constants map to
//! zero. The printed n=1 relation carries the opposite TZ sign from the one
//! the reduction produces; [`sign_cross_check`] surfaces that inconsistency
//! as a flagged report instead of asserting either sign.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::line::{rat, ratio, CurveContext, Rat};
use crate::pairing::{delta_bundle, normalize, PairKey, PairingVector, RuleSet};

/// Named 2-form symbols.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum FormSym {
    /// omega_WP / pi^2
    WpOverPiSq,
    /// c1(Delta1), kept symbolic
    C1Delta1,
    /// c1(Delta2), kept symbolic
    C1Delta2,
    /// omega_TZ
    OmegaTz,
    Named(String),
}

impl fmt::Display for FormSym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FormSym::WpOverPiSq => write!(f, "omega_WP/pi^2"),
            FormSym::C1Delta1 => write!(f, "c1(Delta1)"),
            FormSym::C1Delta2 => write!(f, "c1(Delta2)"),
            FormSym::OmegaTz => write!(f, "omega_TZ"),
            FormSym::Named(s) => write!(f, "{s}"),
        }
    }
}

/// Exact rational combination of 2-form symbols.
#[derive(Clone, PartialEq, Eq, Default, Debug)]
pub struct FormExpr {
    terms: BTreeMap<FormSym, Rat>,
}

impl FormExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn term(sym: FormSym, coeff: Rat) -> Self {
        let mut terms = BTreeMap::new();
        if !coeff.is_zero() {
            terms.insert(sym, coeff);
        }
        Self { terms }
    }

    pub fn coeff(&self, sym: &FormSym) -> Rat {
        self.terms.get(sym).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        for (s, c) in &other.terms {
            let e = terms.entry(s.clone()).or_insert_with(Rat::zero);
            *e += c;
            if e.is_zero() {
                terms.remove(s);
            }
        }
        Self { terms }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&rat(-1)))
    }

    pub fn scale(&self, k: &Rat) -> Self {
        if k.is_zero() {
            return Self::zero();
        }
        Self {
            terms: self.terms.iter().map(|(s, c)| (s.clone(), c * k)).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
}

impl fmt::Display for FormExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (sym, c)) in self.terms.iter().enumerate() {
            let neg = c.is_negative();
            let mag = c.abs();
            if i == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else if neg {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            if mag.is_one() {
                write!(f, "{sym}")?;
            } else {
                write!(f, "({mag})*{sym}")?;
            }
        }
        Ok(())
    }
}

/// Explicit per-pair assignment of 2-form symbols, for vectors that are not
/// mark-symmetric. Every pair with a nonzero coefficient must be covered.
#[derive(Clone, Default, Debug)]
pub struct ChernAssignment {
    map: BTreeMap<PairKey, FormExpr>,
}

impl ChernAssignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn assign(&mut self, key: PairKey, form: FormExpr) -> &mut Self {
        self.map.insert(key, form);
        self
    }
}

/// Linear push-through of a vector's coefficients onto 2-form symbols;
/// constants map to zero.
pub fn chern_form(
    v: &PairingVector,
    assignment: &ChernAssignment,
    ctx: &CurveContext,
) -> Result<FormExpr> {
    let mut out = FormExpr::zero();
    for (key, c) in v.pairs() {
        let form = assignment.map.get(key).ok_or_else(|| {
            Error::UnassignedBasisPair(format!("<{},{}>", ctx.gen_name(key.0), ctx.gen_name(key.1)))
        })?;
        out = out.add(&form.scale(c));
    }
    Ok(out)
}

/// Coordinates of a mark-symmetric normalized vector in the
/// (Delta0, Delta1, Delta2) basis, plus the untouched constant ledger.
pub fn delta_coordinates(
    v: &PairingVector,
    ctx: &CurveContext,
    rules: &RuleSet,
) -> Result<(Rat, Rat, Rat)> {
    let nv = normalize(v, rules);
    let d0 = normalize(&delta_bundle(0, ctx, rules)?, rules).classes_only();
    let d1 = normalize(&delta_bundle(1, ctx, rules)?, rules).classes_only();
    let d2 = normalize(&delta_bundle(2, ctx, rules)?, rules).classes_only();

    // Aggregate coordinates: x = <K,K>, y = sum <K,P_i>, w = sum <P_i,P_i>,
    // z2 = sum_{i<j} <P_i,P_j>. A symmetric vector is determined by these.
    let n = ctx.n_marks();
    let aggregate = |u: &PairingVector| -> Result<[Rat; 4]> {
        let mut x = Rat::zero();
        let mut y = Rat::zero();
        let mut w = Rat::zero();
        let mut z2 = Rat::zero();
        for (key, c) in u.pairs() {
            match (key.0, key.1) {
                (crate::line::Gen::K, crate::line::Gen::K) => x += c,
                (crate::line::Gen::K, crate::line::Gen::Mark(_)) => y += c,
                (crate::line::Gen::Mark(i), crate::line::Gen::Mark(j)) if i == j => w += c,
                (crate::line::Gen::Mark(_), crate::line::Gen::Mark(_)) => z2 += c,
                _ => {
                    return Err(Error::UnassignedBasisPair(format!(
                        "<{},{}>",
                        ctx.gen_name(key.0),
                        ctx.gen_name(key.1)
                    )))
                }
            }
        }
        Ok([x, y, w, z2])
    };
    // Mark symmetry check: every diagonal <P_i,P_i> coefficient equal, every
    // off-diagonal equal.
    let check_symmetric = |u: &PairingVector| -> Result<()> {
        let mut diag: Option<Rat> = None;
        let mut off: Option<Rat> = None;
        for (key, c) in u.pairs() {
            match (key.0, key.1) {
                (crate::line::Gen::Mark(i), crate::line::Gen::Mark(j)) if i == j => match &diag {
                    None => diag = Some(c.clone()),
                    Some(d) if d == c => {}
                    _ => {
                        return Err(Error::UnassignedBasisPair(format!(
                            "<{0},{0}> (not mark-symmetric)",
                            ctx.gen_name(key.0)
                        )))
                    }
                },
                (crate::line::Gen::Mark(_), crate::line::Gen::Mark(_)) => match &off {
                    None => off = Some(c.clone()),
                    Some(d) if d == c => {}
                    _ => {
                        return Err(Error::UnassignedBasisPair(format!(
                            "<{},{}> (not mark-symmetric)",
                            ctx.gen_name(key.0),
                            ctx.gen_name(key.1)
                        )))
                    }
                },
                _ => {}
            }
        }
        Ok(())
    };
    check_symmetric(&nv)?;

    let target = aggregate(&nv)?;
    let b0 = aggregate(&d0)?;
    let b1 = aggregate(&d1)?;
    let b2 = aggregate(&d2)?;

    // Solve target = c0*b0 + c1*b1 + c2*b2 over the aggregates by Gaussian
    // elimination on the 4x3 system; inconsistency means the vector is not
    // in the Delta span.
    let mut rows: Vec<[Rat; 4]> = Vec::new();
    for i in 0..4 {
        rows.push([
            b0[i].clone(),
            b1[i].clone(),
            b2[i].clone(),
            target[i].clone(),
        ]);
    }
    let mut pivots: Vec<usize> = Vec::new();
    let mut r = 0usize;
    for col in 0..3 {
        if let Some(p) = (r..rows.len()).find(|&i| !rows[i][col].is_zero()) {
            rows.swap(r, p);
            let inv = rows[r][col].clone();
            for c in col..4 {
                rows[r][c] = &rows[r][c] / &inv;
            }
            for i in 0..rows.len() {
                if i != r && !rows[i][col].is_zero() {
                    let f = rows[i][col].clone();
                    for c in col..4 {
                        rows[i][c] = &rows[i][c] - &f * &rows[r][c];
                    }
                }
            }
            pivots.push(col);
            r += 1;
        }
    }
    for row in rows.iter().skip(r) {
        if !row[3].is_zero() {
            return Err(Error::UnassignedBasisPair(
                "vector lies outside the Delta0/Delta1/Delta2 span".to_owned(),
            ));
        }
    }
    let mut coords = [Rat::zero(), Rat::zero(), Rat::zero()];
    for (i, &col) in pivots.iter().enumerate() {
        coords[col] = rows[i][3].clone();
    }
    let _ = n;
    Ok((coords[0].clone(), coords[1].clone(), coords[2].clone()))
}

/// The standard assignment: Delta0 block to `omega_WP/pi^2`, Delta1 and
/// Delta2 kept as symbolic Chern classes.
pub fn chern_standard(v: &PairingVector, ctx: &CurveContext, rules: &RuleSet) -> Result<FormExpr> {
    let (c0, c1, c2) = delta_coordinates(v, ctx, rules)?;
    Ok(FormExpr::term(FormSym::WpOverPiSq, c0)
        .add(&FormExpr::term(FormSym::C1Delta1, c1))
        .add(&FormExpr::term(FormSym::C1Delta2, c2)))
}

/// Substitute the Takhtajan-Zograf identification
/// `c1(Delta1) = (4/3) omega_TZ + 2 c1(Delta2)`.
pub fn tz_reduce(form: &FormExpr) -> FormExpr {
    let c1 = form.coeff(&FormSym::C1Delta1);
    if c1.is_zero() {
        return form.clone();
    }
    form.sub(&FormExpr::term(FormSym::C1Delta1, c1.clone()))
        .add(&FormExpr::term(FormSym::OmegaTz, &c1 * ratio(4, 3)))
        .add(&FormExpr::term(FormSym::C1Delta2, &c1 * rat(2)))
}

/// Result of the n=1 sign cross-check between the two printed relations.
#[derive(Clone, Debug)]
pub struct SignCrossCheck {
    /// 12 c1(lambda_1) via the Chern expansion plus the TZ substitution.
    pub via_reduction: FormExpr,
    /// 12 c1(lambda_1) as printed with the minus TZ sign.
    pub as_printed: FormExpr,
    /// Their difference; nonzero means the printed relations disagree.
    pub difference: FormExpr,
}

impl SignCrossCheck {
    pub fn is_consistent(&self) -> bool {
        self.difference.is_zero()
    }
}

/// Run the n=1 cross-check: expand `12 c1(lambda_1)` symbolically, reduce
/// with the plus-sign TZ identification, and compare against the printed
/// minus-sign relation `omega_WP/pi^2 - (4/3) omega_TZ`.
pub fn sign_cross_check(ctx: &CurveContext, rules: &RuleSet) -> Result<SignCrossCheck> {
    let lambda1 = crate::pairing::lambda_n_vector(1, ctx, rules)?;
    let via = tz_reduce(&chern_standard(&lambda1, ctx, rules)?);
    let printed = FormExpr::term(FormSym::WpOverPiSq, Rat::one())
        .add(&FormExpr::term(FormSym::OmegaTz, ratio(-4, 3)));
    let difference = via.sub(&printed);
    Ok(SignCrossCheck {
        via_reduction: via,
        as_printed: printed,
        difference,
    })
}
