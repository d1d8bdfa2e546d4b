//! Truncated Selberg zeta products, the regularized determinant and the
//! Arakelov-Poincare volume formula.

use num_complex::Complex64;
use std::f64::consts::PI;

use super::special::n_function_pow;
use super::TruncationParams;
use crate::error::{Error, Result};

/// Multiset of primitive geodesic lengths feeding the zeta product.
///
/// Entries are sorted ascending, lengths strictly positive, duplicates
/// merged into multiplicities. `cutoff_length` marks where the spectrum is
/// known to be incomplete (`f64::INFINITY` when no bound is claimed).
#[derive(Clone, Debug, PartialEq)]
pub struct LengthSpectrum {
    entries: Vec<(f64, u32)>,
    cutoff_length: f64,
}

impl LengthSpectrum {
    pub fn new(mut raw: Vec<(f64, u32)>, cutoff_length: f64) -> Result<Self> {
        for (l, m) in &raw {
            if !(*l > 0.0) || !l.is_finite() {
                return Err(Error::InvalidInput(format!("non-positive length {l}")));
            }
            if *m == 0 {
                return Err(Error::InvalidInput("zero multiplicity entry".to_owned()));
            }
        }
        raw.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut entries: Vec<(f64, u32)> = Vec::with_capacity(raw.len());
        for (l, m) in raw {
            match entries.last_mut() {
                // merge duplicates (exact to relative 1e-12)
                Some((pl, pm)) if (l - *pl).abs() <= 1e-12 * pl.abs() => *pm += m,
                _ => entries.push((l, m)),
            }
        }
        Ok(Self {
            entries,
            cutoff_length,
        })
    }

    pub fn empty() -> Self {
        Self {
            entries: Vec::new(),
            cutoff_length: f64::INFINITY,
        }
    }

    pub fn entries(&self) -> &[(f64, u32)] {
        &self.entries
    }

    pub fn cutoff_length(&self) -> f64 {
        self.cutoff_length
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Union as multisets.
    pub fn union(&self, other: &Self) -> Result<Self> {
        let mut raw = self.entries.clone();
        raw.extend_from_slice(&other.entries);
        Self::new(raw, self.cutoff_length.min(other.cutoff_length))
    }
}

/// Whether multiplicities weight the zeta product. The product is written
/// over the set of geodesics; weighting by multiplicity is the default, the
/// switch makes the divergence explicit rather than silent.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum MultiplicityMode {
    Weighted,
    Ignored,
}

/// `log Z(s) = sum_l mult(l) sum_{m<=m_max} log(1 - e^{-(s+m) l})`.
///
/// Small factors go through a series for `log(1-w)` to keep the sum stable;
/// an exactly vanishing factor is an error, not a silent zero.
pub fn log_selberg_zeta(
    spec: &LengthSpectrum,
    s: Complex64,
    m_max: u32,
    mode: MultiplicityMode,
) -> Result<Complex64> {
    let mut acc = Complex64::new(0.0, 0.0);
    for &(l, mult) in spec.entries() {
        let weight = match mode {
            MultiplicityMode::Weighted => mult as f64,
            MultiplicityMode::Ignored => 1.0,
        };
        for m in 0..=m_max {
            let w = (-(s + m as f64) * l).exp();
            let one_minus = Complex64::new(1.0, 0.0) - w;
            if one_minus.norm() == 0.0 {
                return Err(Error::ZeroFactor(m));
            }
            let term = if w.norm() < 1e-4 {
                // log(1-w) = -(w + w^2/2 + w^3/3 + w^4/4) + O(w^5)
                -(w + w * w / 2.0 + w * w * w / 3.0 + w * w * w * w / 4.0)
            } else {
                one_minus.ln()
            };
            acc += weight * term;
        }
    }
    Ok(acc)
}

/// Truncated Selberg zeta `Z(s) = prod (1 - e^{-(s+m)l})^mult`.
pub fn selberg_zeta(
    spec: &LengthSpectrum,
    s: Complex64,
    m_max: u32,
    mode: MultiplicityMode,
) -> Result<Complex64> {
    Ok(log_selberg_zeta(spec, s, m_max, mode)?.exp())
}

/// `det(Delta_hyp + s(s-1)) = Z(s) / N(s)^(2q-2+N)`, the defining relation
/// of the factorization.
pub fn det_delta(
    spec: &LengthSpectrum,
    s: Complex64,
    q: u32,
    n_cusps: u32,
    m_max: u32,
) -> Result<Complex64> {
    let z = selberg_zeta(spec, s, m_max, MultiplicityMode::Weighted)?;
    Ok(z / n_function_pow(s, q, n_cusps)?)
}

/// Central-difference derivative with Richardson extrapolation and step
/// halving: start at `h0` and halve until successive extrapolants agree to
/// `tol` (relative). Once rounding noise makes the agreement degrade instead
/// of improve, the best extrapolant so far is returned, provided it is
/// plausible; otherwise the step has underflowed.
pub fn central_derivative(
    f: &mut dyn FnMut(f64) -> Result<f64>,
    x0: f64,
    h0: f64,
    tol: f64,
) -> Result<f64> {
    let mut h = h0;
    let diff = |f: &mut dyn FnMut(f64) -> Result<f64>, h: f64| -> Result<f64> {
        Ok((f(x0 + h)? - f(x0 - h)?) / (2.0 * h))
    };
    let mut d_prev = diff(f, h)?;
    let mut r_prev: Option<f64> = None;
    let mut best: Option<(f64, f64)> = None; // (agreement, extrapolant)
    for _ in 0..40 {
        h /= 2.0;
        if h < 1e-12 {
            break;
        }
        let d = diff(f, h)?;
        let r = (4.0 * d - d_prev) / 3.0;
        if let Some(rp) = r_prev {
            let agreement = (r - rp).abs();
            if agreement <= tol * r.abs().max(1.0) {
                return Ok(r);
            }
            match best {
                Some((b, rb)) if agreement > 2.0 * b => {
                    // noise floor reached; the previous best is the answer
                    // if it is anywhere near the requested scale
                    if b <= 1e-5 * rb.abs().max(1.0) {
                        return Ok(rb);
                    }
                }
                _ => {}
            }
            if best.map_or(true, |(b, _)| agreement < b) {
                best = Some((agreement, r));
            }
        }
        d_prev = d;
        r_prev = Some(r);
    }
    match best {
        Some((b, rb)) if b <= 1e-5 * rb.abs().max(1.0) => Ok(rb),
        _ => Err(Error::StepUnderflow),
    }
}

/// Regularized determinant: the s-derivative of `det(Delta + s(s-1))` at
/// `s = 1`, computed by central differences with step control.
pub fn det_star(spec: &LengthSpectrum, q: u32, n_cusps: u32, p: &TruncationParams) -> Result<f64> {
    p.validate()?;
    let m_max = p.m_max;
    let mut f = |s: f64| -> Result<f64> {
        Ok(det_delta(spec, Complex64::new(s, 0.0), q, n_cusps, m_max)?.re)
    };
    central_derivative(&mut f, 1.0, 1e-4, p.tol.max(1e-10))
}

/// Arakelov-Poincare volume:
/// `log A = (12/2) (1/(2q-2)) (log(det_ar / vol_ar) - log(det_hyp / (2pi(2q-2))))`.
pub fn ap_volume(det_ar: f64, vol_ar: f64, det_hyp: f64, q: u32) -> Result<f64> {
    if q < 2 {
        return Err(Error::Domain(format!("ap_volume needs q >= 2, got {q}")));
    }
    if !(det_ar > 0.0 && vol_ar > 0.0 && det_hyp > 0.0) {
        return Err(Error::Domain("ap_volume needs positive inputs".to_owned()));
    }
    let two_q_minus_2 = (2 * q - 2) as f64;
    let log_a = 6.0 / two_q_minus_2
        * ((det_ar / vol_ar).ln() - (det_hyp / (2.0 * PI * two_q_minus_2)).ln());
    Ok(log_a.exp())
}

/// The metric value on the determinant of `H^0(K)` for the hyperbolic
/// admissible metric: `det(Im tau) * 2pi(2q-2) / det*`.
pub fn lambda1_metric_value(det_im_tau: f64, det_hyp: f64, q: u32) -> Result<f64> {
    if q < 2 {
        return Err(Error::Domain(format!(
            "lambda1_metric_value needs q >= 2, got {q}"
        )));
    }
    if !(det_im_tau > 0.0 && det_hyp > 0.0) {
        return Err(Error::Domain(
            "lambda1_metric_value needs positive inputs".to_owned(),
        ));
    }
    Ok(det_im_tau * 2.0 * PI * (2 * q - 2) as f64 / det_hyp)
}
