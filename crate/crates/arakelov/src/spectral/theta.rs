//! Riemann theta lattice sums and the lattice-invariant theta norm.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::f64::consts::PI;

use super::TruncationParams;
use crate::error::{Error, Result};

/// A complex symmetric q x q matrix with positive definite imaginary part.
///
/// The Cholesky factor of `Y = Im Z` is cached for the norm computations;
/// its failure is the positivity check.
#[derive(Clone, Debug)]
pub struct PeriodMatrix {
    z: DMatrix<Complex64>,
    y: DMatrix<f64>,
    chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
    min_eig_y: f64,
}

impl PeriodMatrix {
    pub fn new(z: DMatrix<Complex64>) -> Result<Self> {
        if z.nrows() != z.ncols() || z.nrows() == 0 {
            return Err(Error::InvalidInput("period matrix must be square".into()));
        }
        let q = z.nrows();
        for i in 0..q {
            for j in 0..q {
                if (z[(i, j)] - z[(j, i)]).norm() > 1e-12 {
                    return Err(Error::InvalidInput(format!(
                        "period matrix not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        let y = z.map(|w| w.im);
        let chol = nalgebra::Cholesky::new(y.clone())
            .ok_or_else(|| Error::InvalidInput("Im Z is not positive definite".to_owned()))?;
        let min_eig_y = y
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .fold(f64::INFINITY, |a, &b| a.min(b));
        if !(min_eig_y > 0.0) {
            return Err(Error::InvalidInput(
                "Im Z is not positive definite".to_owned(),
            ));
        }
        Ok(Self {
            z,
            y,
            chol,
            min_eig_y,
        })
    }

    /// Genus-1 convenience constructor.
    pub fn genus1(tau: Complex64) -> Result<Self> {
        Self::new(DMatrix::from_element(1, 1, tau))
    }

    pub fn dim(&self) -> usize {
        self.z.nrows()
    }

    pub fn z(&self) -> &DMatrix<Complex64> {
        &self.z
    }

    pub fn y(&self) -> &DMatrix<f64> {
        &self.y
    }

    pub fn det_y(&self) -> f64 {
        self.chol.determinant()
    }

    pub fn min_eigenvalue_y(&self) -> f64 {
        self.min_eig_y
    }

    /// `Y^{-1} v` through the cached Cholesky factorization.
    pub fn y_solve(&self, v: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(v)
    }
}

/// Value of a truncated theta sum with its reported tail bound.
#[derive(Clone, Copy, Debug)]
pub struct ThetaValue {
    pub value: Complex64,
    /// Upper estimate for the absolute truncation error.
    pub tail_bound: f64,
    pub radius: u32,
}

/// `theta(Z, z) = sum_{n in Z^q} exp(pi i n^T Z n + 2 pi i n^T z)`, summed
/// over the box `|n_i| <= lattice_radius`.
///
/// The tail is bounded with the smallest eigenvalue of `Y`; if the bound
/// exceeds `p.tol` the truncation signals instead of returning silently.
pub fn theta(zm: &PeriodMatrix, z: &[Complex64], p: &TruncationParams) -> Result<ThetaValue> {
    p.validate()?;
    let q = zm.dim();
    if z.len() != q {
        return Err(Error::InvalidInput(format!(
            "theta argument has dimension {}, period matrix {}",
            z.len(),
            q
        )));
    }
    let r = p.lattice_radius as i64;
    let mut n = vec![-r; q];
    let mut sum = Complex64::new(0.0, 0.0);
    loop {
        // exponent: pi i n^T Z n + 2 pi i n^T z
        let mut quad = Complex64::new(0.0, 0.0);
        for i in 0..q {
            for j in 0..q {
                quad += zm.z[(i, j)] * (n[i] * n[j]) as f64;
            }
        }
        let mut lin = Complex64::new(0.0, 0.0);
        for i in 0..q {
            lin += z[i] * n[i] as f64;
        }
        sum += (Complex64::i() * PI * quad + Complex64::i() * 2.0 * PI * lin).exp();

        // odometer over the box
        let mut k = 0;
        loop {
            if k == q {
                break;
            }
            n[k] += 1;
            if n[k] <= r {
                break;
            }
            n[k] = -r;
            k += 1;
        }
        if k == q {
            break;
        }
    }

    let tail_bound = theta_tail_bound(zm, z, p.lattice_radius);
    if tail_bound > p.tol {
        return Err(Error::ToleranceNotMet { bound: tail_bound });
    }
    Ok(ThetaValue {
        value: sum,
        tail_bound,
        radius: p.lattice_radius,
    })
}

/// Crude but safe tail estimate: outside the box every term satisfies
/// `|term| <= exp(-pi lam |n|^2 + 2 pi |y| |n|)` with `lam` the smallest
/// eigenvalue of Y; shells of sup-norm k contribute at most
/// `2q (2k+1)^{q-1}` lattice points with `|n| >= k`.
fn theta_tail_bound(zm: &PeriodMatrix, z: &[Complex64], radius: u32) -> f64 {
    let q = zm.dim();
    let lam = zm.min_eigenvalue_y();
    let y_norm = z.iter().map(|w| w.im * w.im).sum::<f64>().sqrt();
    let mut bound = 0.0;
    for k in (radius + 1)..(radius + 80) {
        let kf = k as f64;
        let count = 2.0 * q as f64 * (2.0 * kf + 1.0).powi(q as i32 - 1);
        let t = count * (-PI * lam * kf * kf + 2.0 * PI * y_norm * (q as f64).sqrt() * kf).exp();
        bound += t;
        if t < 1e-300 {
            break;
        }
    }
    bound
}

/// The lattice-invariant squared theta norm
/// `||theta||^2 = sqrt(det Y) exp(-2 pi y^T Y^{-1} y) |theta(Z,z)|^2`
/// with `y = Im z`.
pub fn theta_norm(zm: &PeriodMatrix, z: &[Complex64], p: &TruncationParams) -> Result<ThetaValue> {
    let th = theta(zm, z, p)?;
    let y = DVector::from_iterator(z.len(), z.iter().map(|w| w.im));
    let yinv_y = zm.y_solve(&y);
    let quad = y.dot(&yinv_y);
    let scale = zm.det_y().sqrt() * (-2.0 * PI * quad).exp();
    let norm = scale * th.value.norm_sqr();
    // Error in |theta|^2 propagates with 2|theta| * scale.
    let bound = scale * 2.0 * th.value.norm() * th.tail_bound + scale * th.tail_bound.powi(2);
    Ok(ThetaValue {
        value: Complex64::new(norm, 0.0),
        tail_bound: bound,
        radius: th.radius,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    // Frozen 30-digit oracle values for Z = (i).
    const THETA_I_0: f64 = 1.086_434_811_213_308_014_6; // = pi^{1/4} / Gamma(3/4)
    const THETA_I_HALF: f64 = 0.913_579_138_156_116_821_41; // alternating sum
    const NORM_I_0: f64 = 1.180_340_599_016_096_226;

    fn params(radius: u32) -> TruncationParams {
        TruncationParams {
            lattice_radius: radius,
            tol: 1e-8,
            ..Default::default()
        }
    }

    #[test]
    fn genus_one_values() {
        let zm = PeriodMatrix::genus1(Complex64::new(0.0, 1.0)).unwrap();
        let th = theta(&zm, &[Complex64::new(0.0, 0.0)], &params(8)).unwrap();
        assert!((th.value.re - THETA_I_0).abs() < 1e-12);
        assert!(th.value.im.abs() < 1e-14);
        let th = theta(&zm, &[Complex64::new(0.5, 0.0)], &params(8)).unwrap();
        assert!((th.value.re - THETA_I_HALF).abs() < 1e-12);
        let nm = theta_norm(&zm, &[Complex64::new(0.0, 0.0)], &params(8)).unwrap();
        assert!((nm.value.re - NORM_I_0).abs() < 1e-10);
    }

    #[test]
    fn diagonal_period_matrix_factorizes() {
        let z2 = DMatrix::from_diagonal_element(2, 2, Complex64::new(0.0, 1.0));
        let zm2 = PeriodMatrix::new(z2).unwrap();
        let th2 = theta(
            &zm2,
            &[Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)],
            &params(8),
        )
        .unwrap();
        assert!((th2.value.re - THETA_I_0 * THETA_I_0).abs() < 1e-12);
    }

    #[test]
    fn tail_bound_is_honest() {
        // increasing the radius moves the value by less than the bound
        // reported at the smaller radius
        let zm = PeriodMatrix::genus1(Complex64::new(0.3, 0.9)).unwrap();
        let z = [Complex64::new(0.21, -0.37)];
        let small = theta(&zm, &z, &params(6)).unwrap();
        let big = theta(&zm, &z, &params(9)).unwrap();
        assert!((small.value - big.value).norm() <= small.tail_bound);
        // and at genus 2 with an off-diagonal period matrix
        let mut z2 = DMatrix::from_diagonal_element(2, 2, Complex64::new(0.1, 1.2));
        z2[(0, 1)] = Complex64::new(-0.2, 0.3);
        z2[(1, 0)] = z2[(0, 1)];
        let zm2 = PeriodMatrix::new(z2).unwrap();
        let w = [Complex64::new(0.4, 0.1), Complex64::new(-0.3, -0.2)];
        let small = theta(&zm2, &w, &params(6)).unwrap();
        let big = theta(&zm2, &w, &params(9)).unwrap();
        assert!((small.value - big.value).norm() <= small.tail_bound);
    }

    #[test]
    fn tolerance_not_met_signals() {
        let zm = PeriodMatrix::genus1(Complex64::new(0.0, 0.05)).unwrap();
        let p = TruncationParams {
            lattice_radius: 2,
            tol: 1e-9,
            ..Default::default()
        };
        match theta(&zm, &[Complex64::new(0.0, 0.0)], &p) {
            Err(Error::ToleranceNotMet { bound }) => assert!(bound > 1e-9),
            other => panic!("expected tolerance signal, got {other:?}"),
        }
    }

    #[test]
    fn norm_is_lattice_invariant_genus1() {
        let zm = PeriodMatrix::genus1(Complex64::new(0.25, 1.1)).unwrap();
        let p = params(14);
        let z0 = [Complex64::new(0.173, -0.212)];
        let n0 = theta_norm(&zm, &z0, &p).unwrap().value.re;
        // real shift z + 1
        let n1 = theta_norm(&zm, &[z0[0] + 1.0], &p).unwrap().value.re;
        assert!((n0 - n1).abs() < 1e-12 * n0.abs().max(1.0));
        // lattice shift z + tau
        let n2 = theta_norm(&zm, &[z0[0] + Complex64::new(0.25, 1.1)], &p)
            .unwrap()
            .value
            .re;
        assert!((n0 - n2).abs() < 1e-10 * n0.abs().max(1.0));
    }

    #[test]
    fn rejects_bad_matrices() {
        let mut z = DMatrix::from_element(2, 2, Complex64::new(0.0, 1.0));
        z[(0, 1)] = Complex64::new(0.5, 0.2);
        z[(1, 0)] = Complex64::new(0.4, 0.2);
        assert!(PeriodMatrix::new(z).is_err()); // not symmetric
        let z = DMatrix::from_element(1, 1, Complex64::new(1.0, -2.0));
        assert!(PeriodMatrix::new(z).is_err()); // Y negative
    }
}
