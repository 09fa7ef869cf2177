//! Uniform bounds over a ball around a weight point: the third-order
//! constant `L_A` (Lipschitz constant of the Hessian's spectral norm) and the
//! Hessian norm bound `L_H`.

use crate::error::{Error, Result};
use crate::rigor::interval::{DirectedSum, Enclosure};
use crate::weights::{TargetBasis, WeightPoint};

/// Ball of radius `alpha` around `center` with certified neuron-norm ranges.
#[derive(Debug, Clone)]
pub struct BallSpec {
    pub center: WeightPoint,
    pub alpha: f64,
    /// Lower bound on every neuron norm over the ball.
    pub w_min: Enclosure,
    /// Upper bound on every neuron norm over the ball.
    pub w_max: Enclosure,
    pub v_max: Enclosure,
}

/// Enclosure of the Euclidean norm of a vector of doubles.
pub fn enclose_norm(x: &[f64], prec: u32) -> Enclosure {
    let mut s = DirectedSum::new(prec);
    for a in x {
        s.add_prod(&[*a, *a]);
    }
    s.finish().sqrt_nonneg()
}

/// Enclosure of the Euclidean distance between two vectors of doubles.
pub fn enclose_distance(x: &[f64], y: &[f64], prec: u32) -> Enclosure {
    let mut s = DirectedSum::new(prec);
    for (a, b) in x.iter().zip(y) {
        s.add(&Enclosure::point(prec, *a).sub(&Enclosure::point(prec, *b)).sqr());
    }
    s.finish().sqrt_nonneg()
}

impl BallSpec {
    pub fn new(center: &WeightPoint, alpha: f64, v: &TargetBasis, prec: u32) -> Result<BallSpec> {
        if !(alpha > 0.0) {
            return Err(Error::InvalidConfig("ball radius must be positive".into()));
        }
        v.check_compatible(center)?;
        let norms: Vec<Enclosure> = center.rows().map(|r| enclose_norm(r, prec)).collect();
        let a = Enclosure::point(prec, alpha);
        let w_min = norms.iter().skip(1).fold(norms[0].clone(), |m, e| m.min(e)).sub(&a);
        let w_max = norms.iter().skip(1).fold(norms[0].clone(), |m, e| m.max(e)).add(&a);
        let vn: Vec<Enclosure> = v.rows().map(|r| enclose_norm(r, prec)).collect();
        let v_max = vn.iter().skip(1).fold(vn[0].clone(), |m, e| m.max(e));
        let ball = BallSpec {
            center: center.clone(),
            alpha,
            w_min,
            w_max,
            v_max,
        };
        if !ball.w_min.is_positive() {
            return Err(Error::DegenerateBall);
        }
        Ok(ball)
    }

    /// Ball given directly by its norm ranges.
    pub fn from_norms(center: &WeightPoint, alpha: f64, w_min: f64, w_max: f64, v_max: f64, prec: u32) -> Result<BallSpec> {
        let ball = BallSpec {
            center: center.clone(),
            alpha,
            w_min: Enclosure::point(prec, w_min),
            w_max: Enclosure::point(prec, w_max),
            v_max: Enclosure::point(prec, v_max),
        };
        if !ball.w_min.is_positive() {
            return Err(Error::DegenerateBall);
        }
        Ok(ball)
    }
}

/// `L_A = n / (pi w_min^2) * (sqrt(2) (n-1) (w_max + w_min) + k v_max)`,
/// where `k` is the number of targets.
pub fn third_order_bound_la(ball: &BallSpec, k: usize, n: usize) -> Result<Enclosure> {
    if !ball.w_min.is_positive() {
        return Err(Error::DegenerateBall);
    }
    let prec = ball.w_min.precision();
    let sqrt2 = Enclosure::point(prec, 2.0).sqrt_nonneg();
    let inner = sqrt2
        .mul_f64((n - 1) as f64)
        .mul(&ball.w_max.add(&ball.w_min))
        .add(&ball.v_max.mul_f64(k as f64));
    let outer = Enclosure::point(prec, n as f64).div(&Enclosure::pi(prec).mul(&ball.w_min.sqr()));
    Ok(outer.mul(&inner))
}

/// `L_H = 1/2 + n(n-1) (w_max / (2 pi w_min) + 1/2) + n k v_max / (2 pi w_min)`.
pub fn hessian_norm_bound_lh(ball: &BallSpec, k: usize, n: usize) -> Result<Enclosure> {
    if !ball.w_min.is_positive() {
        return Err(Error::DegenerateBall);
    }
    let prec = ball.w_min.precision();
    let two_pi_wmin = Enclosure::pi(prec).mul_f64(2.0).mul(&ball.w_min);
    let nn = (n * (n - 1)) as f64;
    let pair = ball.w_max.div(&two_pi_wmin).add_f64(0.5).mul_f64(nn);
    let target = ball.v_max.mul_f64((n * k) as f64).div(&two_pi_wmin);
    Ok(pair.add(&target).add_f64(0.5))
}
