//! Rigorous lower bound on the smallest eigenvalue of a symmetric matrix.
//!
//! A double-precision eigendecomposition `A' ~ U D U^T` is only a hint. The
//! returned bound subtracts from `min(D)` certified upper bounds on
//!
//! * `eps1 = |A - A'|_F` (enclosure widths and midpoint rounding),
//! * `eps2 = |A' - U D U^T|_F`,
//! * `eps3`, the distance from `U D U^T` to `Ub D Ub^T` where
//!   `Ub = U (U^T U)^{-1/2}` is exactly orthogonal,
//!
//! and Weyl's inequality moves eigenvalues by at most their sum.

use nalgebra::{DMatrix, SymmetricEigen};
use rug::Integer;

use crate::error::{Error, Result};
use crate::rigor::closed::IntervalMatrix;
use crate::rigor::interval::{frobenius_hi, DirectedSum, Enclosure};

#[derive(Debug, Clone)]
pub struct EigenBoundReport {
    /// Certified lower bound on the smallest eigenvalue, or `-1.0` when
    /// positive definiteness could not be certified.
    pub lambda_min_lower: f64,
    pub eps1: Enclosure,
    pub eps2: Enclosure,
    pub eps3: Enclosure,
    pub b_orth: Enclosure,
    pub c_orth: Enclosure,
    pub dominant_ok: bool,
    /// Smallest and largest entries of the untrusted `D`.
    pub d_min: f64,
    pub d_max: f64,
}

impl EigenBoundReport {
    pub fn certified(&self) -> bool {
        self.lambda_min_lower >= 0.0
    }
}

/// Bound for a matrix of exact doubles.
pub fn eigen_lower_bound_f64(a: &DMatrix<f64>, prec: u32) -> Result<EigenBoundReport> {
    eigen_lower_bound(&IntervalMatrix::from_f64(a, prec), prec)
}

pub fn eigen_lower_bound(a: &IntervalMatrix, prec: u32) -> Result<EigenBoundReport> {
    let d = a.dim();
    let ap = a.midpoint();
    if ap.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidConfig("non-finite matrix entry".into()));
    }

    let mut e1 = DirectedSum::new(prec);
    for r in 0..d {
        for c in 0..d {
            let dev = a.get(r, c).add_f64(-ap[(r, c)]).abs();
            e1.add(&dev.sqr());
        }
    }
    let eps1 = e1.finish().sqrt_nonneg();

    let eig = SymmetricEigen::new(ap.clone());
    let u = &eig.eigenvectors;
    let diag: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    let d_min = diag.iter().copied().fold(f64::INFINITY, f64::min);
    let d_max = diag.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let d_abs = diag.iter().fold(0.0f64, |m, x| m.max(x.abs()));

    // A' - U D U^T and I - U^T U, upper triangles weighted twice off the diagonal
    let mut resid = Vec::with_capacity(d * (d + 1) / 2);
    let mut defect = Vec::with_capacity(d * (d + 1) / 2);
    let mut gram = vec![Enclosure::zero(prec); d * d];
    for r in 0..d {
        for c in r..d {
            let mut s = DirectedSum::new(prec);
            s.add_f64(ap[(r, c)]);
            for t in 0..d {
                s.add_prod(&[-u[(r, t)], diag[t], u[(c, t)]]);
            }
            let w = if r == c { 1.0 } else { 2.0 };
            resid.push((s.finish(), w));

            let mut g = DirectedSum::new(prec);
            for t in 0..d {
                g.add_prod(&[u[(t, r)], u[(t, c)]]);
            }
            let g = g.finish();
            defect.push((g.neg().add_f64(if r == c { 1.0 } else { 0.0 }), w));
            gram[r * d + c] = g.clone();
            gram[c * d + r] = g;
        }
    }
    let eps2 = frobenius_hi(prec, resid.iter().map(|(e, w)| (e, *w)));
    let c_orth = frobenius_hi(prec, defect.iter().map(|(e, w)| (e, *w)));

    let mut u_dev = Vec::with_capacity(d * d);
    for r in 0..d {
        for c in 0..d {
            let mut s = DirectedSum::new(prec);
            s.add_f64(u[(r, c)]);
            if r == c {
                s.add_f64(-1.0);
            }
            u_dev.push((s.finish(), 1.0));
        }
    }
    let b_orth = frobenius_hi(prec, u_dev.iter().map(|(e, w)| (e, *w))).add_f64(1.0);

    let dominant_ok = (0..d).all(|r| {
        let mut off = DirectedSum::new(prec);
        for c in 0..d {
            if c != r {
                off.add(&gram[r * d + c].abs());
            }
        }
        gram[r * d + r].certainly_gt(&off.finish())
    });
    if !dominant_ok {
        return Err(Error::NotDiagonallyDominant);
    }
    if c_orth.hi_f64() >= 1.0 {
        return Err(Error::CEnclosureTooLarge(c_orth.hi_f64()));
    }

    // t = 1/sqrt(1 - C) - 1, using the upper end of C throughout
    let c_hi = Enclosure::new(c_orth.hi().clone(), c_orth.hi().clone());
    let t = Enclosure::point(prec, 1.0)
        .sub(&c_hi)
        .sqrt_nonneg()
        .recip()
        .add_f64(-1.0);
    let lambda_max = eps1.add(&eps2).add_f64(d_abs);
    let eps3 = b_orth
        .sqr()
        .mul(&lambda_max.mul_f64(2.0).mul(&t).add(&t.sqr()));

    let bound = Enclosure::point(prec, d_min)
        .sub(&eps1)
        .sub(&eps2)
        .sub(&eps3);
    let lambda_min_lower = if bound.is_positive() { bound.lo_f64() } else { -1.0 };
    Ok(EigenBoundReport {
        lambda_min_lower,
        eps1,
        eps2,
        eps3,
        b_orth,
        c_orth,
        dominant_ok,
        d_min,
        d_max,
    })
}

/// Exact check of `4^{-n} sum_k C(2k,k) C(2n-2k,n-k) = 1` for all
/// `n <= n_max`.
pub fn central_binomial_identity_check(n_max: u32) -> bool {
    (0..=n_max).all(|n| {
        let mut s = Integer::new();
        for k in 0..=n {
            let a = Integer::from(Integer::binomial_u(2 * k, k));
            let b = Integer::from(Integer::binomial_u(2 * (n - k), n - k));
            s += a * b;
        }
        s == Integer::from(1) << (2 * n)
    })
}

/// Largest absolute eigenvalue of a symmetric double matrix.
pub fn spectral_norm_sym(a: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(a.clone())
        .eigenvalues
        .iter()
        .fold(0.0, |m: f64, x| m.max(x.abs()))
}

/// Eigenvalues of a symmetric double matrix in ascending order.
pub fn sorted_eigenvalues(a: &DMatrix<f64>) -> Vec<f64> {
    let mut e: Vec<f64> = SymmetricEigen::new(a.clone()).eigenvalues.iter().copied().collect();
    e.sort_by(f64::total_cmp);
    e
}
