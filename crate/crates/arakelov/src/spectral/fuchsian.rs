//! Fuchsian-group utilities: classification of real Moebius transformations,
//! translation lengths, primitive length spectra from word enumeration, and
//! truncated Eisenstein coset sums.

use num_complex::Complex64;
use std::collections::BTreeSet;

use super::selberg::LengthSpectrum;
use super::TruncationParams;
use crate::error::{Error, Result};

const DET_TOL: f64 = 1e-9;
const TRACE_TOL: f64 = 1e-9;

/// A real 2x2 matrix acting on the upper half-plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat2(pub [[f64; 2]; 2]);

impl Mat2 {
    pub fn identity() -> Self {
        Mat2([[1.0, 0.0], [0.0, 1.0]])
    }

    pub fn det(&self) -> f64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn mul(&self, other: &Mat2) -> Mat2 {
        let a = &self.0;
        let b = &other.0;
        Mat2([
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ])
    }

    /// Inverse of a determinant-one matrix.
    pub fn inverse_unimodular(&self) -> Mat2 {
        let a = &self.0;
        Mat2([[a[1][1], -a[0][1]], [-a[1][0], a[0][0]]])
    }

    /// Moebius action on the upper half-plane.
    pub fn apply(&self, z: Complex64) -> Complex64 {
        let a = &self.0;
        (z * a[0][0] + a[0][1]) / (z * a[1][0] + a[1][1])
    }

    fn is_identity_projective(&self, tol: f64) -> bool {
        let a = &self.0;
        let s = if a[0][0] + a[1][1] >= 0.0 { 1.0 } else { -1.0 };
        (a[0][0] - s).abs() <= tol
            && (a[1][1] - s).abs() <= tol
            && a[0][1].abs() <= tol
            && a[1][0].abs() <= tol
    }
}

/// Classification of a unimodular real matrix by |trace|.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum MatClass {
    Hyperbolic,
    Parabolic,
    Elliptic,
    Identity,
}

/// Classify by |trace|: `> 2` hyperbolic, `= 2` (within 1e-9) parabolic or
/// identity, `< 2` elliptic. The determinant must equal 1 to 1e-9.
pub fn classify(m: &Mat2) -> Result<MatClass> {
    if (m.det() - 1.0).abs() > DET_TOL {
        return Err(Error::NotUnimodular((m.det() - 1.0).abs()));
    }
    let t = m.trace().abs();
    if (t - 2.0).abs() <= TRACE_TOL {
        if m.is_identity_projective(TRACE_TOL) {
            Ok(MatClass::Identity)
        } else {
            Ok(MatClass::Parabolic)
        }
    } else if t > 2.0 {
        Ok(MatClass::Hyperbolic)
    } else {
        Ok(MatClass::Elliptic)
    }
}

/// Translation length of a hyperbolic element: `l = 2 arccosh(|tr|/2)`.
pub fn translation_length(m: &Mat2) -> Result<f64> {
    if classify(m)? != MatClass::Hyperbolic {
        return Err(Error::NonHyperbolic);
    }
    Ok(2.0 * (m.trace().abs() / 2.0).acosh())
}

/// Finitely generated subgroup of PSL(2,R), given by unimodular generator
/// matrices (an optional signature hint is carried for file round trips).
#[derive(Clone, Debug)]
pub struct FuchsianGroup {
    generators: Vec<Mat2>,
    pub signature: Option<(u32, u32)>,
}

impl FuchsianGroup {
    pub fn new(generators: Vec<Mat2>, signature: Option<(u32, u32)>) -> Result<Self> {
        for (i, g) in generators.iter().enumerate() {
            if (g.det() - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidInput(format!(
                    "generator {i} has determinant {} (must be 1 to 1e-12)",
                    g.det()
                )));
            }
        }
        Ok(Self {
            generators,
            signature,
        })
    }

    pub fn generators(&self) -> &[Mat2] {
        &self.generators
    }

    /// The modular group PSL(2,Z), generated by S and T.
    pub fn modular() -> Self {
        Self {
            generators: vec![
                Mat2([[0.0, -1.0], [1.0, 0.0]]),
                Mat2([[1.0, 1.0], [0.0, 1.0]]),
            ],
            signature: Some((0, 1)),
        }
    }
}

/// Whether `gamma` and `gamma^{-1}` count as one unoriented geodesic
/// (the default, matching conjugacy classes of `{g, g^{-1}}`) or as two.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Orientation {
    Unoriented,
    Oriented,
}

/// Outcome of the spectrum enumeration: the spectrum plus any warnings
/// (an empty spectrum warns rather than failing).
#[derive(Clone, Debug)]
pub struct SpectrumOutput {
    pub spectrum: LengthSpectrum,
    pub warnings: Vec<String>,
}

// Letters are 1-based generator indices, negative for inverses.
type Word = Vec<i32>;

fn word_matrix(word: &[i32], gens: &[Mat2], invs: &[Mat2]) -> Mat2 {
    let mut m = Mat2::identity();
    for &l in word {
        let g = if l > 0 {
            &gens[(l - 1) as usize]
        } else {
            &invs[(-l - 1) as usize]
        };
        m = m.mul(g);
    }
    m
}

fn rotations_min(word: &[i32]) -> Word {
    let mut best = word.to_vec();
    for k in 1..word.len() {
        let mut rot = word[k..].to_vec();
        rot.extend_from_slice(&word[..k]);
        if rot < best {
            best = rot;
        }
    }
    best
}

/// Canonical representative of the cyclic word (and its inverse when
/// unoriented): the lexicographically smallest rotation.
fn canonical_cyclic(word: &[i32], orient: Orientation) -> Word {
    let fwd = rotations_min(word);
    match orient {
        Orientation::Oriented => fwd,
        Orientation::Unoriented => {
            let inv: Word = word.iter().rev().map(|&l| -l).collect();
            let bwd = rotations_min(&inv);
            fwd.min(bwd)
        }
    }
}

/// True when the cyclic word is a proper power `u^k`, `k >= 2`: some
/// rotation by a proper divisor of the length fixes it.
fn is_proper_power(word: &[i32]) -> bool {
    let n = word.len();
    for period in 1..n {
        if n % period != 0 {
            continue;
        }
        if (0..n).all(|i| word[i] == word[(i + period) % n]) {
            return true;
        }
    }
    false
}

/// Enumerate freely and cyclically reduced words up to `max_len`, reduce to
/// conjugacy-class representatives (canonical cyclic words backed by trace
/// quantization within 1e-9), keep primitive hyperbolic classes, and emit
/// the sorted spectrum.
///
/// Equal-trace non-conjugate classes merge into one entry: trace
/// quantization is a heuristic conjugacy test and collisions are accepted.
/// `cutoff_length` reports the shortest length first realized at the
/// maximal word length; classes beyond it may be missing.
pub fn length_spectrum(
    group: &FuchsianGroup,
    p: &TruncationParams,
    orient: Orientation,
) -> Result<SpectrumOutput> {
    p.validate()?;
    let mut warnings = Vec::new();
    if group.generators().is_empty() {
        warnings.push("empty generator list: empty spectrum".to_owned());
        return Ok(SpectrumOutput {
            spectrum: LengthSpectrum::empty(),
            warnings,
        });
    }
    let gens = group.generators().to_vec();
    let invs: Vec<Mat2> = gens.iter().map(|g| g.inverse_unimodular()).collect();
    let n_letters = gens.len() as i32;
    let max_len = p.word_length as usize;

    // DFS over freely reduced words; keep cyclically reduced ones.
    let mut classes: BTreeSet<Word> = BTreeSet::new();
    let mut stack: Vec<Word> = Vec::new();
    for l in (-n_letters..=n_letters).rev() {
        if l != 0 {
            stack.push(vec![l]);
        }
    }
    while let Some(word) = stack.pop() {
        let last = *word.last().unwrap();
        // cyclically reduced: first letter is not the inverse of the last
        if word[0] != -last {
            classes.insert(canonical_cyclic(&word, orient));
        }
        if word.len() < max_len {
            for l in -n_letters..=n_letters {
                if l == 0 || l == -last {
                    continue;
                }
                let mut next = word.clone();
                next.push(l);
                stack.push(next);
            }
        }
    }

    // Hyperbolic primitive classes, bucketed by quantized |trace|.
    struct Class {
        length: f64,
        word_len: usize,
    }
    let mut by_trace: Vec<(i64, Class)> = Vec::new();
    for word in &classes {
        if is_proper_power(word) {
            continue;
        }
        let m = word_matrix(word, &gens, &invs);
        if (m.det() - 1.0).abs() > DET_TOL {
            return Err(Error::NotUnimodular((m.det() - 1.0).abs()));
        }
        match classify(&m)? {
            MatClass::Hyperbolic => {
                let l = translation_length(&m)?;
                let key = (m.trace().abs() / TRACE_TOL).round() as i64;
                by_trace.push((
                    key,
                    Class {
                        length: l,
                        word_len: word.len(),
                    },
                ));
            }
            _ => continue,
        }
    }
    if by_trace.is_empty() {
        warnings.push("no hyperbolic elements found up to the word length".to_owned());
        return Ok(SpectrumOutput {
            spectrum: LengthSpectrum::empty(),
            warnings,
        });
    }
    by_trace.sort_by_key(|(k, _)| *k);
    let mut reps: Vec<Class> = Vec::new();
    let mut last_key = i64::MIN;
    for (key, c) in by_trace {
        if key == last_key {
            // same trace bucket: keep the shortest-word representative
            if let Some(prev) = reps.last_mut() {
                if c.word_len < prev.word_len {
                    *prev = c;
                }
            }
        } else {
            reps.push(c);
            last_key = key;
        }
    }

    // Secondary primitivity sweep: discard lengths that are integer
    // multiples of a shorter kept length (powers that slipped through as
    // different words).
    reps.sort_by(|a, b| a.length.total_cmp(&b.length));
    let mut kept: Vec<Class> = Vec::new();
    'outer: for c in reps {
        for k in &kept {
            let ratio = c.length / k.length;
            let near = ratio.round();
            if near >= 2.0 && (ratio - near).abs() < 1e-9 * near {
                continue 'outer;
            }
        }
        kept.push(c);
    }

    let cutoff = kept
        .iter()
        .filter(|c| c.word_len == max_len)
        .map(|c| c.length)
        .fold(f64::INFINITY, f64::min);
    let entries: Vec<(f64, u32)> = kept.iter().map(|c| (c.length, 1)).collect();
    Ok(SpectrumOutput {
        spectrum: LengthSpectrum::new(entries, cutoff)?,
        warnings,
    })
}

/// Value of a truncated Eisenstein coset sum.
#[derive(Clone, Copy, Debug)]
pub struct EisensteinValue {
    pub value: Complex64,
    /// Number of distinct cosets the truncation enumerated.
    pub cosets: usize,
    pub depth: u32,
}

fn coset_key(m: &Mat2) -> (i64, i64) {
    // Bottom row up to projective sign, quantized.
    let (mut c, mut d) = (m.0[1][0], m.0[1][1]);
    if c < -TRACE_TOL || (c.abs() <= TRACE_TOL && d < 0.0) {
        c = -c;
        d = -d;
    }
    ((c / 1e-9).round() as i64, (d / 1e-9).round() as i64)
}

/// Truncated Eisenstein series attached to the cusp whose stabilizer
/// `sigma` conjugates to the translations:
/// `E(s, z) = sum_{cosets of the stabilizer} Im(sigma^{-1} gamma z)^s`,
/// with cosets enumerated breadth-first to `coset_depth` in the word length
/// and deduplicated through the bottom row of `sigma^{-1} gamma`.
pub fn eisenstein(
    group: &FuchsianGroup,
    sigma: &Mat2,
    s: Complex64,
    z: Complex64,
    p: &TruncationParams,
) -> Result<EisensteinValue> {
    p.validate()?;
    if z.im <= 0.0 {
        return Err(Error::InvalidInput(
            "z must lie in the upper half-plane".into(),
        ));
    }
    if s.re <= 1.0 {
        return Err(Error::Domain(format!(
            "Eisenstein sum needs Re(s) > 1, got {}",
            s.re
        )));
    }
    if (sigma.det() - 1.0).abs() > DET_TOL {
        return Err(Error::NotUnimodular((sigma.det() - 1.0).abs()));
    }
    let sigma_inv = sigma.inverse_unimodular();
    // Configuration check: some generator (or inverse) must conjugate under
    // sigma into a translation z -> z + h.
    let mut has_translation = false;
    for g in group.generators() {
        for cand in [*g, g.inverse_unimodular()] {
            let t = sigma_inv.mul(&cand).mul(sigma);
            let a = &t.0;
            if a[1][0].abs() <= 1e-9
                && (a[0][0] - a[1][1]).abs() <= 1e-9
                && (a[0][0].abs() - 1.0).abs() <= 1e-9
                && a[0][1].abs() > 1e-9
            {
                has_translation = true;
            }
        }
    }
    if !has_translation {
        return Err(Error::CuspConfig(
            "no generator conjugates to a translation under sigma".to_owned(),
        ));
    }

    let mut letters: Vec<Mat2> = Vec::new();
    for g in group.generators() {
        letters.push(*g);
        letters.push(g.inverse_unimodular());
    }

    let mut seen: BTreeSet<(i64, i64)> = BTreeSet::new();
    let mut total = Complex64::new(0.0, 0.0);
    let term = |m: &Mat2| -> Complex64 {
        let w = sigma_inv.mul(m).apply(z);
        // Im(w)^s for Im(w) > 0
        (s * w.im.ln()).exp()
    };
    let id = Mat2::identity();
    seen.insert(coset_key(&sigma_inv.mul(&id)));
    total += term(&id);
    let mut frontier = vec![id];
    for _ in 0..p.coset_depth {
        let mut next = Vec::new();
        for g in &frontier {
            for l in &letters {
                let gl = g.mul(l);
                let key = coset_key(&sigma_inv.mul(&gl));
                if seen.insert(key) {
                    total += term(&gl);
                    next.push(gl);
                }
            }
        }
        frontier = next;
        if frontier.is_empty() {
            break;
        }
    }
    Ok(EisensteinValue {
        value: total,
        cosets: seen.len(),
        depth: p.coset_depth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classification_examples() {
        assert_eq!(
            classify(&Mat2([[2.0, 1.0], [1.0, 1.0]])).unwrap(),
            MatClass::Hyperbolic
        );
        assert_eq!(
            classify(&Mat2([[1.0, 1.0], [0.0, 1.0]])).unwrap(),
            MatClass::Parabolic
        );
        assert_eq!(
            classify(&Mat2([[0.0, -1.0], [1.0, 0.0]])).unwrap(),
            MatClass::Elliptic
        );
        assert_eq!(classify(&Mat2::identity()).unwrap(), MatClass::Identity);
        assert!(classify(&Mat2([[2.0, 0.0], [0.0, 1.0]])).is_err());
    }

    #[test]
    fn translation_length_examples() {
        let m = Mat2([[2.0, 1.0], [1.0, 1.0]]); // trace 3
        let l = translation_length(&m).unwrap();
        assert!((l - 2.0 * 1.5f64.acosh()).abs() < 1e-12);
        assert!((l - 1.924_847_300_238_413_79).abs() < 1e-12);
        assert!(translation_length(&Mat2([[1.0, 1.0], [0.0, 1.0]])).is_err());
        // l -> 0 monotonically as trace -> 2+
        let mut prev = f64::INFINITY;
        for eps in [1.0, 0.1, 0.01, 1e-4] {
            let t = 2.0 + eps;
            let m = Mat2([[t / 2.0, t * t / 4.0 - 1.0], [1.0, t / 2.0]]);
            let l = translation_length(&m).unwrap();
            assert!(l < prev && l > 0.0);
            prev = l;
        }
    }

    #[test]
    fn conjugation_invariance_of_length() {
        let m = Mat2([[2.0, 1.0], [1.0, 1.0]]);
        let l0 = translation_length(&m).unwrap();
        for g in [
            Mat2([[1.0, 3.0], [0.0, 1.0]]),
            Mat2([[0.0, -1.0], [1.0, 0.0]]),
            Mat2([[2.0, 1.0], [3.0, 2.0]]),
        ] {
            let conj = g.mul(&m).mul(&g.inverse_unimodular());
            assert!((translation_length(&conj).unwrap() - l0).abs() < 1e-9);
        }
    }

    #[test]
    fn cyclic_group_single_primitive_length() {
        let g = FuchsianGroup::new(vec![Mat2([[2.0, 1.0], [1.0, 1.0]])], None).unwrap();
        let p = TruncationParams {
            word_length: 5,
            ..Default::default()
        };
        let out = length_spectrum(&g, &p, Orientation::Unoriented).unwrap();
        assert_eq!(out.spectrum.entries().len(), 1);
        let (l, m) = out.spectrum.entries()[0];
        assert!((l - 2.0 * 1.5f64.acosh()).abs() < 1e-9);
        assert_eq!(m, 1);
    }

    #[test]
    fn conjugate_generators_collapse_to_one_class() {
        let a = Mat2([[2.0, 1.0], [1.0, 1.0]]);
        let c = Mat2([[1.0, 2.0], [0.0, 1.0]]);
        let b = c.mul(&a).mul(&c.inverse_unimodular());
        let g = FuchsianGroup::new(vec![a, b], None).unwrap();
        let p = TruncationParams {
            word_length: 2,
            ..Default::default()
        };
        let out = length_spectrum(&g, &p, Orientation::Unoriented).unwrap();
        // the two generators share the trace, so they land in one class;
        // longer mixed words contribute their own classes
        let l0 = 2.0 * 1.5f64.acosh();
        let hits: Vec<_> = out
            .spectrum
            .entries()
            .iter()
            .filter(|(l, _)| (l - l0).abs() < 1e-9)
            .collect();
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].1, 1);
    }

    #[test]
    fn empty_generators_warn() {
        let g = FuchsianGroup::new(vec![], None).unwrap();
        let out =
            length_spectrum(&g, &TruncationParams::default(), Orientation::Unoriented).unwrap();
        assert!(out.spectrum.is_empty());
        assert!(!out.warnings.is_empty());
    }

    #[test]
    fn generator_order_does_not_change_the_spectrum() {
        let a = Mat2([[2.0, 1.0], [1.0, 1.0]]);
        let b = Mat2([[3.0, 2.0], [4.0, 3.0]]);
        let p = TruncationParams {
            word_length: 4,
            ..Default::default()
        };
        let s1 = length_spectrum(
            &FuchsianGroup::new(vec![a, b], None).unwrap(),
            &p,
            Orientation::Unoriented,
        )
        .unwrap()
        .spectrum;
        let s2 = length_spectrum(
            &FuchsianGroup::new(vec![b, a], None).unwrap(),
            &p,
            Orientation::Unoriented,
        )
        .unwrap()
        .spectrum;
        assert_eq!(s1.entries().len(), s2.entries().len());
        for (x, y) in s1.entries().iter().zip(s2.entries()) {
            assert!((x.0 - y.0).abs() < 1e-9);
            assert_eq!(x.1, y.1);
        }
    }

    #[test]
    fn eisenstein_depth_zero_is_single_term() {
        let g = FuchsianGroup::modular();
        let p = TruncationParams {
            coset_depth: 0,
            ..Default::default()
        };
        let z = Complex64::new(0.0, 3.0);
        let v = eisenstein(&g, &Mat2::identity(), Complex64::new(2.0, 0.0), z, &p).unwrap();
        assert_eq!(v.cosets, 1);
        assert!((v.value.re - 9.0).abs() < 1e-12); // Im(z)^s alone
                                                   // monotone nondecreasing in depth for real s > 1
        let mut prev = 0.0;
        for depth in [0, 1, 2, 4, 8, 12] {
            let p = TruncationParams {
                coset_depth: depth,
                ..Default::default()
            };
            let v = eisenstein(&g, &Mat2::identity(), Complex64::new(2.0, 0.0), z, &p)
                .unwrap()
                .value
                .re;
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn eisenstein_constant_term_oracle() {
        // E(2, 3i) -> y^2 + phi(2)/y with phi(2) = sqrt(pi) Gamma(3/2) zeta(3)
        // / (Gamma(2) zeta(4)); frozen from the 30-digit oracle.
        const TARGET: f64 = 9.581_522_694_043_751_984;
        let g = FuchsianGroup::modular();
        let p = TruncationParams {
            coset_depth: 12,
            ..Default::default()
        };
        let v = eisenstein(
            &g,
            &Mat2::identity(),
            Complex64::new(2.0, 0.0),
            Complex64::new(0.0, 3.0),
            &p,
        )
        .unwrap();
        let rel = (v.value.re - TARGET).abs() / TARGET;
        assert!(rel < 0.05, "relative deviation {rel}");
        assert!(v.cosets > 100);
    }

    #[test]
    fn eisenstein_group_invariance_at_matched_depth() {
        let g = FuchsianGroup::modular();
        let p = TruncationParams {
            coset_depth: 13,
            ..Default::default()
        };
        let s = Complex64::new(2.0, 0.0);
        let z = Complex64::new(0.3, 2.0);
        let e0 = eisenstein(&g, &Mat2::identity(), s, z, &p)
            .unwrap()
            .value
            .re;
        for gamma in [
            Mat2([[1.0, 1.0], [0.0, 1.0]]),
            Mat2([[0.0, -1.0], [1.0, 0.0]]),
        ] {
            let gz = gamma.apply(z);
            let e1 = eisenstein(&g, &Mat2::identity(), s, gz, &p)
                .unwrap()
                .value
                .re;
            assert!(
                (e0 - e1).abs() / e0 < 0.02,
                "invariance violated: {e0} vs {e1}"
            );
        }
    }

    #[test]
    fn eisenstein_config_error_without_translation() {
        // a purely hyperbolic group has no parabolic stabilizer at infinity
        let g = FuchsianGroup::new(vec![Mat2([[2.0, 1.0], [1.0, 1.0]])], None).unwrap();
        let res = eisenstein(
            &g,
            &Mat2::identity(),
            Complex64::new(2.0, 0.0),
            Complex64::new(0.0, 1.0),
            &TruncationParams::default(),
        );
        assert!(matches!(res, Err(Error::CuspConfig(_))));
    }
}
