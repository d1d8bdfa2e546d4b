//! Exact formal algebra of metrized line bundles on a marked curve.
//!
//! A curve of signature (q, N) carries the canonical bundle `K`, the point
//! bundles `O(P_i)` for each mark, and (after degeneration to a boundary
//! context) the bundles of the normalized nodal curve. Expressions are
//! integer (internally rational) combinations of these generators together
//! with a constant metric twist: `O(e^c)` denotes the trivial bundle whose
//! section `1` has squared norm `e^c`. All coefficients are exact rationals;
//! nothing in this module is floating point.

use std::collections::BTreeMap;
use std::fmt;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// Exact rational scalar used throughout the symbolic engine.
pub type Rat = BigRational;

/// Shorthand for an integer as a [`Rat`].
pub fn rat(n: i64) -> Rat {
    Rat::from_integer(n.into())
}

/// Shorthand for an exact fraction `n/d`.
pub fn ratio(n: i64, d: i64) -> Rat {
    Rat::new(n.into(), d.into())
}

/// A primitive line-bundle generator.
///
/// `Mark(i)` is `O(P_{i+1})` in a smooth context and `O(P̃_{i+1})` in a
/// boundary context; `NodeR`/`NodeS` are the two sections replacing a
/// non-separating node and exist only in boundary contexts.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Gen {
    K,
    Mark(u32),
    NodeR,
    NodeS,
}

/// Named transcendental constants appearing in metric twists.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum ConstSym {
    /// The rational number 1, so that plain rationals embed into [`ConstExpr`].
    Unit,
    /// zeta'(-1).
    ZetaPrime,
    /// log(2*pi).
    Log2Pi,
    /// The Faltings delta invariant, tracked purely formally.
    DeltaM,
    /// log of the Arakelov-Poincare volume.
    AArHyp,
    /// The common cusp constant c_hyp.
    CHyp,
    /// A user-declared symbol (e.g. symbolic alpha, beta_i).
    Named(String),
}

impl fmt::Display for ConstSym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstSym::Unit => write!(f, "1"),
            ConstSym::ZetaPrime => write!(f, "zeta'(-1)"),
            ConstSym::Log2Pi => write!(f, "log(2pi)"),
            ConstSym::DeltaM => write!(f, "delta(M)"),
            ConstSym::AArHyp => write!(f, "a_Ar,hyp"),
            ConstSym::CHyp => write!(f, "c_hyp"),
            ConstSym::Named(s) => write!(f, "{s}"),
        }
    }
}

/// Exact rational linear combination of named constants.
///
/// Zero coefficients are never stored, so structural equality is semantic
/// equality.
#[derive(Clone, PartialEq, Eq, Default, Debug)]
pub struct ConstExpr {
    terms: BTreeMap<ConstSym, Rat>,
}

impl ConstExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    /// The plain rational `c`, i.e. `c * UNIT`.
    pub fn rational(c: Rat) -> Self {
        Self::term(ConstSym::Unit, c)
    }

    pub fn symbol(sym: ConstSym) -> Self {
        Self::term(sym, Rat::one())
    }

    pub fn named(name: &str) -> Self {
        Self::symbol(ConstSym::Named(name.to_owned()))
    }

    pub fn term(sym: ConstSym, coeff: Rat) -> Self {
        let mut terms = BTreeMap::new();
        if !coeff.is_zero() {
            terms.insert(sym, coeff);
        }
        Self { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, sym: &ConstSym) -> Rat {
        self.terms.get(sym).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&ConstSym, &Rat)> {
        self.terms.iter()
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        for (sym, c) in &other.terms {
            let entry = terms.entry(sym.clone()).or_insert_with(Rat::zero);
            *entry += c;
            if entry.is_zero() {
                terms.remove(sym);
            }
        }
        Self { terms }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        Self {
            terms: self.terms.iter().map(|(s, c)| (s.clone(), -c)).collect(),
        }
    }

    pub fn scale(&self, k: &Rat) -> Self {
        if k.is_zero() {
            return Self::zero();
        }
        Self {
            terms: self.terms.iter().map(|(s, c)| (s.clone(), c * k)).collect(),
        }
    }

    /// True when every coefficient is an integer.
    pub fn is_integral(&self) -> bool {
        self.terms.values().all(|c| c.is_integer())
    }
}

impl fmt::Display for ConstExpr {
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
            if *sym == ConstSym::Unit {
                write!(f, "{mag}")?;
            } else if mag.is_one() {
                write!(f, "{sym}")?;
            } else {
                write!(f, "{mag}*{sym}")?;
            }
        }
        Ok(())
    }
}

/// Deligne constant a(q) = (1-q)(24 zeta'(-1) - 1), stored expanded.
pub fn deligne_constant(q: i64) -> ConstExpr {
    ConstExpr::term(ConstSym::ZetaPrime, rat(24) * rat(1 - q)).add(&ConstExpr::rational(rat(q - 1)))
}

/// Display names used by a boundary context.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundaryNames {
    pub canonical: String,
    pub mark_prefix: String,
    pub node_r: String,
    pub node_s: String,
}

impl Default for BoundaryNames {
    fn default() -> Self {
        Self {
            canonical: "K~".to_owned(),
            mark_prefix: "P~".to_owned(),
            node_r: "R".to_owned(),
            node_s: "S".to_owned(),
        }
    }
}

/// A marked curve of signature (q, N), possibly a boundary (one
/// non-separating node) context produced by degeneration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CurveContext {
    genus: u32,
    mark_names: Vec<String>,
    boundary: Option<BoundaryNames>,
}

impl CurveContext {
    /// Smooth context with default mark names `P1..PN`.
    pub fn new(genus: u32, n_marks: u32) -> Self {
        let mark_names = (1..=n_marks).map(|i| format!("P{i}")).collect();
        Self {
            genus,
            mark_names,
            boundary: None,
        }
    }

    /// Smooth context with explicit mark names.
    pub fn with_mark_names(genus: u32, mark_names: Vec<String>) -> Result<Self> {
        for (i, a) in mark_names.iter().enumerate() {
            if mark_names[..i].contains(a) {
                return Err(Error::Context(format!("duplicate mark name {a}")));
            }
        }
        Ok(Self {
            genus,
            mark_names,
            boundary: None,
        })
    }

    pub fn genus(&self) -> u32 {
        self.genus
    }

    pub fn n_marks(&self) -> u32 {
        self.mark_names.len() as u32
    }

    pub fn is_boundary(&self) -> bool {
        self.boundary.is_some()
    }

    /// All generators valid in this context, in canonical order.
    pub fn generators(&self) -> Vec<Gen> {
        let mut gens = vec![Gen::K];
        gens.extend((0..self.n_marks()).map(Gen::Mark));
        if self.is_boundary() {
            gens.push(Gen::NodeR);
            gens.push(Gen::NodeS);
        }
        gens
    }

    pub fn has_gen(&self, g: Gen) -> bool {
        match g {
            Gen::K => true,
            Gen::Mark(i) => i < self.n_marks(),
            Gen::NodeR | Gen::NodeS => self.is_boundary(),
        }
    }

    /// Degree of a primitive generator: `deg K = 2q - 2` (with this
    /// context's genus) and 1 for every section.
    pub fn degree_of(&self, g: Gen) -> Result<i64> {
        if !self.has_gen(g) {
            return Err(Error::UnknownGenerator(self.gen_name(g)));
        }
        Ok(match g {
            Gen::K => 2 * self.genus as i64 - 2,
            Gen::Mark(_) | Gen::NodeR | Gen::NodeS => 1,
        })
    }

    pub fn gen_name(&self, g: Gen) -> String {
        match (&self.boundary, g) {
            (None, Gen::K) => "K".to_owned(),
            (Some(b), Gen::K) => b.canonical.clone(),
            (None, Gen::Mark(i)) => self
                .mark_names
                .get(i as usize)
                .cloned()
                .unwrap_or_else(|| format!("P{}", i + 1)),
            (Some(b), Gen::Mark(i)) => format!("{}{}", b.mark_prefix, i + 1),
            (Some(b), Gen::NodeR) => b.node_r.clone(),
            (Some(b), Gen::NodeS) => b.node_s.clone(),
            (None, Gen::NodeR | Gen::NodeS) => "<node>".to_owned(),
        }
    }

    /// The context of the normalization of a one-non-separating-node
    /// degeneration: genus drops by one, the marks survive, and two new
    /// sections `R`, `S` replace the node.
    pub fn boundary_context(&self) -> Result<CurveContext> {
        if self.is_boundary() {
            return Err(Error::AlreadyBoundary);
        }
        if self.genus == 0 {
            return Err(Error::Context(
                "a genus-0 curve has no non-separating degeneration".to_owned(),
            ));
        }
        Ok(CurveContext {
            genus: self.genus - 1,
            mark_names: self.mark_names.clone(),
            boundary: Some(BoundaryNames::default()),
        })
    }

    /// The line `O(P_i)` for the 1-based mark index `i`.
    pub fn mark_line(&self, i: u32) -> Result<MetrizedLineExpr> {
        if i == 0 || i > self.n_marks() {
            return Err(Error::UnknownMark(format!("P{i}")));
        }
        Ok(MetrizedLineExpr::of_gen(Gen::Mark(i - 1)))
    }

    /// The cuspidal divisor line: `O(P_1 + ... + P_N)` on a smooth context;
    /// on a boundary context the node sections are cusps of the normalized
    /// curve, so `R` and `S` are included.
    pub fn cusp_divisor(&self) -> MetrizedLineExpr {
        let mut class = BTreeMap::new();
        for i in 0..self.n_marks() {
            class.insert(Gen::Mark(i), Rat::one());
        }
        if self.is_boundary() {
            class.insert(Gen::NodeR, Rat::one());
            class.insert(Gen::NodeS, Rat::one());
        }
        MetrizedLineExpr {
            class,
            twist: ConstExpr::zero(),
        }
    }

    /// All section generators: the marks, plus the nodes in a boundary
    /// context.
    pub fn sections(&self) -> Vec<Gen> {
        let mut out: Vec<Gen> = (0..self.n_marks()).map(Gen::Mark).collect();
        if self.is_boundary() {
            out.push(Gen::NodeR);
            out.push(Gen::NodeS);
        }
        out
    }

    pub fn validate_line(&self, line: &MetrizedLineExpr) -> Result<()> {
        for g in line.class.keys() {
            if !self.has_gen(*g) {
                return Err(Error::UnknownGenerator(self.gen_name(*g)));
            }
        }
        Ok(())
    }
}

/// Formal combination of generators with a constant metric twist.
///
/// `class` holds the exponent of each generator; `twist` is the exponent `c`
/// of the `O(e^c)` factor in the squared-norm convention. Tensor product is
/// componentwise addition, dual is negation. Exponents are rational
/// internally (the half-integer powers the cuspidal Delta block uses are
/// legal intermediate
/// values); integrality is checked where degrees or final identities need it.
#[derive(Clone, PartialEq, Eq, Default, Debug)]
pub struct MetrizedLineExpr {
    class: BTreeMap<Gen, Rat>,
    twist: ConstExpr,
}

impl MetrizedLineExpr {
    /// The trivial bundle with the flat metric.
    pub fn trivial() -> Self {
        Self::default()
    }

    pub fn of_gen(g: Gen) -> Self {
        let mut class = BTreeMap::new();
        class.insert(g, Rat::one());
        Self {
            class,
            twist: ConstExpr::zero(),
        }
    }

    /// The canonical bundle `K` with the omega-Arakelov metric.
    pub fn canonical() -> Self {
        Self::of_gen(Gen::K)
    }

    /// `O(e^c)`: the trivial bundle with `||1||^2 = e^c`.
    pub fn twist_line(c: ConstExpr) -> Self {
        Self {
            class: BTreeMap::new(),
            twist: c,
        }
    }

    pub fn is_trivial(&self) -> bool {
        self.class.is_empty() && self.twist.is_zero()
    }

    pub fn is_pure_twist(&self) -> bool {
        self.class.is_empty()
    }

    pub fn exponent(&self, g: Gen) -> Rat {
        self.class.get(&g).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn class(&self) -> impl Iterator<Item = (&Gen, &Rat)> {
        self.class.iter()
    }

    pub fn twist(&self) -> &ConstExpr {
        &self.twist
    }

    pub fn tensor(&self, other: &Self) -> Self {
        let mut class = self.class.clone();
        for (g, e) in &other.class {
            let entry = class.entry(*g).or_insert_with(Rat::zero);
            *entry += e;
            if entry.is_zero() {
                class.remove(g);
            }
        }
        Self {
            class,
            twist: self.twist.add(&other.twist),
        }
    }

    pub fn dual(&self) -> Self {
        Self {
            class: self.class.iter().map(|(g, e)| (*g, -e)).collect(),
            twist: self.twist.neg(),
        }
    }

    pub fn power(&self, k: &Rat) -> Self {
        if k.is_zero() {
            return Self::trivial();
        }
        Self {
            class: self.class.iter().map(|(g, e)| (*g, e * k)).collect(),
            twist: self.twist.scale(k),
        }
    }

    pub fn twisted_by(&self, c: &ConstExpr) -> Self {
        Self {
            class: self.class.clone(),
            twist: self.twist.add(c),
        }
    }

    /// Degree as an exact rational, defined for rational exponents.
    pub fn degree_rat(&self, ctx: &CurveContext) -> Result<Rat> {
        let mut d = Rat::zero();
        for (g, e) in &self.class {
            d += rat(ctx.degree_of(*g)?) * e;
        }
        Ok(d)
    }

    /// Degree of an integral expression; the twist contributes nothing.
    pub fn degree(&self, ctx: &CurveContext) -> Result<i64> {
        if !self.class.values().all(|e| e.is_integer()) {
            return Err(Error::NonIntegralDegree);
        }
        let d = self.degree_rat(ctx)?;
        Ok(d.to_integer()
            .try_into()
            .map_err(|_| Error::NonIntegralDegree)?)
    }

    /// Euler characteristic `chi = deg - q + 1`.
    pub fn euler_char(&self, ctx: &CurveContext) -> Result<i64> {
        Ok(self.degree(ctx)? - ctx.genus() as i64 + 1)
    }

    pub fn display<'a>(&'a self, ctx: &'a CurveContext) -> LineDisplay<'a> {
        LineDisplay { line: self, ctx }
    }
}

pub struct LineDisplay<'a> {
    line: &'a MetrizedLineExpr,
    ctx: &'a CurveContext,
}

impl fmt::Display for LineDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line.class.is_empty() && self.line.twist.is_zero() {
            return write!(f, "O");
        }
        let mut first = true;
        for (g, e) in &self.line.class {
            if !first {
                write!(f, " * ")?;
            }
            first = false;
            if e.is_one() {
                write!(f, "{}", self.ctx.gen_name(*g))?;
            } else {
                write!(f, "{}^({})", self.ctx.gen_name(*g), e)?;
            }
        }
        if !self.line.twist.is_zero() {
            if !first {
                write!(f, " * ")?;
            }
            write!(f, "e^{{{}}}", self.line.twist)?;
        }
        Ok(())
    }
}

/// The engine's own Polyakov-type shift: replacing the reference metric on
/// `K` by `K * O(e^c)` shifts the twist of `12 lambda(O)` by `2c(2q-2)`,
/// i.e. the metric on `lambda(O)` by `e^{(2q-2)c/6}` in the squared-norm
/// convention. The corresponding printed factor in the source material is
/// `e^{(2q-2)c/12}`; whether that exponent is a norm or a squared norm is
/// not stated there, so the engine records its own internally consistent
/// value and reports the discrepancy instead of resolving it.
pub fn polyakov_shift(q: i64, c: &ConstExpr) -> ConstExpr {
    c.scale(&ratio(2 * q - 2, 6))
}
