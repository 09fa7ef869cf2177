//! From near-stationary point to certificate.
//!
//! With `eps >= |grad F(W)|`, `lambda <= lambda_min(hess F(W))` and `B` a
//! bound on the third derivative over a ball of radius `alpha`, a local
//! minimum lies within
//!
//! ```text
//! r = (3 lambda - sqrt(9 lambda^2 - 25 B eps)) / (2 B)
//! ```
//!
//! of `W` whenever the discriminant is non-negative and `r < alpha`. The
//! minimum is non-global when `F` stays positive over the `r`-ball.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::closed_form::hessian_f;
use crate::error::{Error, Result};
use crate::rigor::{
    eigen_lower_bound, enclose_angle, enclose_distance, enclose_gradient_norm, enclose_hessian, enclose_norm,
    enclose_objective, sorted_eigenvalues, third_order_bound_la, BallSpec, Enclosure, DEFAULT_PRECISION,
    MAX_PRECISION,
};
use crate::search::{gd_from, GdConfig};
use crate::weights::{dot, TargetBasis, WeightPoint};

#[derive(Debug, Clone, PartialEq)]
pub struct CertifyConfig {
    pub precision: u32,
    pub max_precision: u32,
    /// Ball radius as a fraction of the largest neuron norm.
    pub alpha_fraction: f64,
    /// Factor applied to `alpha` on the single retry after the radius
    /// overshoots it.
    pub alpha_retry_factor: f64,
    /// Gradient descent applied before certifying; `None` certifies the
    /// point as given.
    pub reconverge: Option<Reconverge>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reconverge {
    pub step_size: f64,
    pub grad_tol: f64,
    pub max_iters: u64,
}

impl Default for Reconverge {
    fn default() -> Self {
        Reconverge {
            step_size: 0.1,
            grad_tol: 1e-10,
            max_iters: 200_000,
        }
    }
}

impl Default for CertifyConfig {
    fn default() -> Self {
        CertifyConfig {
            precision: DEFAULT_PRECISION,
            max_precision: MAX_PRECISION,
            alpha_fraction: 1e-3,
            alpha_retry_factor: 10.0,
            reconverge: Some(Reconverge::default()),
        }
    }
}

/// Extension of a certificate to a nearby point, typically a permuted copy
/// of the certified point found by another run.
#[derive(Debug, Clone, PartialEq)]
pub struct Transfer {
    pub point_ref: String,
    /// Upper bound on the distance from the certified point.
    pub distance: f64,
    /// `r + distance`: the minimum lies within this radius of the member.
    pub radius: f64,
    /// `lambda_min - B * distance`.
    pub lambda_min: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub point_ref: String,
    pub point: WeightPoint,
    pub epsilon: f64,
    pub lambda_min: f64,
    pub b: f64,
    pub alpha: f64,
    pub r: f64,
    pub objective_lo: f64,
    pub objective_hi: f64,
    /// Certified lower bound on `F` over the `r`-ball.
    pub margin: f64,
    pub nonglobal: bool,
    pub differentiable_ball: bool,
    pub strict: bool,
    pub precision_bits: u32,
    pub reconverge_iterations: u64,
    pub transfer_chain: Vec<Transfer>,
}

impl Certificate {
    pub fn k(&self) -> usize {
        self.point.k()
    }

    pub fn n(&self) -> usize {
        self.point.n()
    }

    /// Everything holds: a strict, non-global local minimum within `r`.
    pub fn is_complete(&self) -> bool {
        self.nonglobal && self.differentiable_ball && self.strict
    }
}

fn check_indeterminate(certain_yes: bool, certain_no: bool, prec: u32) -> Result<bool> {
    if certain_yes {
        Ok(true)
    } else if certain_no {
        Ok(false)
    } else {
        Err(Error::Indeterminate(prec))
    }
}

/// Certified upper bound on the radius, computed as
/// `25 eps / (6 lambda + 2 sqrt(9 lambda^2 - 25 B eps))`, which equals the
/// textbook form but does not cancel.
pub fn compute_radius(epsilon: f64, lambda_min: f64, b: f64, alpha: f64, prec: u32) -> Result<f64> {
    if !(epsilon >= 0.0 && b >= 0.0 && lambda_min > 0.0 && alpha > 0.0) {
        return Err(Error::InvalidConfig(
            "radius needs eps, B >= 0 and lambda, alpha > 0".into(),
        ));
    }
    let eps = Enclosure::point(prec, epsilon);
    let lam = Enclosure::point(prec, lambda_min);
    let disc = lam.sqr().mul_f64(9.0).sub(&Enclosure::point(prec, b).mul(&eps).mul_f64(25.0));
    let nonneg = check_indeterminate(disc.lo() >= &0, disc.hi() < &0, prec)?;
    if !nonneg {
        return Err(Error::DiscriminantNegative);
    }
    let den = lam.mul_f64(6.0).add(&disc.sqrt_nonneg().mul_f64(2.0));
    let r = eps.mul_f64(25.0).div(&den).hi_f64();
    if r >= alpha {
        return Err(Error::RadiusExceedsAlpha { r, alpha });
    }
    Ok(r)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonGlobal {
    pub nonglobal: bool,
    /// Certified lower bound on `F` over the ball.
    pub margin: f64,
}

/// Lower bound on `F` over the `r`-ball around `w` from a second-order
/// expansion with Hessian norm bounded on the ball:
///
/// ```text
/// F(W) - r^2 (1/2 + n(n-1) ((max|w|+r) / (2 pi (min|w|-r)) + 1/2)
///             + n k max|v| / (2 pi (min|w|-r))) - r eps
/// ```
pub fn nonglobal_check(objective: &Enclosure, r: f64, epsilon: f64, w: &WeightPoint, v: &TargetBasis) -> Result<NonGlobal> {
    let prec = objective.precision();
    let norms: Vec<Enclosure> = w.rows().map(|x| enclose_norm(x, prec)).collect();
    let w_min = norms.iter().skip(1).fold(norms[0].clone(), |m, e| m.min(e));
    let w_max = norms.iter().skip(1).fold(norms[0].clone(), |m, e| m.max(e));
    let vn: Vec<Enclosure> = v.rows().map(|x| enclose_norm(x, prec)).collect();
    let v_max = vn.iter().skip(1).fold(vn[0].clone(), |m, e| m.max(e));
    let re = Enclosure::point(prec, r);
    let inner = w_min.sub(&re);
    if !inner.is_positive() {
        return Err(Error::BallContainsOrigin {
            r,
            w_min: w_min.lo_f64(),
        });
    }
    let (n, k) = (w.n() as f64, v.count() as f64);
    let two_pi_inner = Enclosure::pi(prec).mul_f64(2.0).mul(&inner);
    let pair = w_max.add(&re).div(&two_pi_inner).add_f64(0.5).mul_f64(n * (n - 1.0));
    let target = v_max.mul_f64(n * k).div(&two_pi_inner);
    let rhs = re
        .sqr()
        .mul(&pair.add(&target).add_f64(0.5))
        .add(&re.mul_f64(epsilon));
    let margin = objective.sub(&rhs);
    let nonglobal = check_indeterminate(margin.is_positive(), margin.hi() <= &0, prec)?;
    Ok(NonGlobal {
        nonglobal,
        margin: margin.lo_f64(),
    })
}

/// Whether `F` is smooth on the `alpha`-ball: no neuron reaches the origin
/// and no pair of neurons, or neuron and target, can become parallel or
/// antiparallel. A neuron `w` moved by at most `alpha` turns by at most
/// `asin(alpha / |w|)`.
pub fn differentiable_ball(w: &WeightPoint, v: &TargetBasis, alpha: f64, prec: u32) -> Result<bool> {
    let a = Enclosure::point(prec, alpha);
    let mut turn = Vec::with_capacity(w.n());
    for x in w.rows() {
        let nx = enclose_norm(x, prec);
        if !nx.certainly_gt(&a) {
            return Ok(false);
        }
        turn.push(a.div(&nx).asin_clamped());
    }
    let pi = Enclosure::pi(prec);
    let clear = |theta: Enclosure, slack: Enclosure| theta.lo() > slack.hi() && pi.sub(&theta).lo() > slack.hi();
    for (i, wi) in w.rows().enumerate() {
        for (j, wj) in w.rows().enumerate().skip(i + 1) {
            if !clear(enclose_angle(wi, wj, prec)?, turn[i].add(&turn[j])) {
                return Ok(false);
            }
        }
        for vj in v.rows() {
            if !clear(enclose_angle(wi, vj, prec)?, turn[i].clone()) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

struct Finished {
    r: f64,
    objective: Enclosure,
    check: NonGlobal,
    differentiable: bool,
    strict: bool,
}

// Everything downstream of (eps, lambda, B, alpha); shared with revalidation
// so a stored certificate can be recomputed bit for bit.
fn finish(w: &WeightPoint, v: &TargetBasis, eps: f64, lambda: f64, b: f64, alpha: f64, prec: u32) -> Result<Finished> {
    let r = compute_radius(eps, lambda, b, alpha, prec).map_err(|e| e.at("radius"))?;
    let differentiable = differentiable_ball(w, v, alpha, prec).map_err(|e| e.at("differentiability"))?;
    let objective = enclose_objective(w, v, prec).map_err(|e| e.at("objective"))?;
    let check = nonglobal_check(&objective, r, eps, w, v).map_err(|e| e.at("non-globality"))?;
    let slack = Enclosure::point(prec, lambda).sub(&Enclosure::point(prec, b).mul_f64(r));
    let strict = check_indeterminate(slack.is_positive(), slack.hi() <= &0, prec)?;
    Ok(Finished {
        r,
        objective,
        check,
        differentiable,
        strict,
    })
}

fn is_indeterminate(e: &Error) -> bool {
    matches!(e.root(), Error::Indeterminate(_))
}

/// Runs `f` at increasing precision until its inequalities are decided.
fn with_retry<T>(start: u32, max: u32, mut f: impl FnMut(u32) -> Result<T>) -> Result<(T, u32)> {
    let mut prec = start;
    loop {
        match f(prec) {
            Err(e) if is_indeterminate(&e) && prec < max => prec = (prec * 2).min(max),
            other => return other.map(|t| (t, prec)),
        }
    }
}

/// Reconverges (if configured) and certifies `w`. Refusals are inconclusive:
/// they never show that no minimum exists nearby.
pub fn certify_point(w: &WeightPoint, v: &TargetBasis, config: &CertifyConfig) -> Result<Certificate> {
    v.check_compatible(w)?;
    let (point, iterations) = match config.reconverge {
        Some(rc) => {
            let gd = GdConfig {
                step_size: rc.step_size,
                grad_tol: rc.grad_tol,
                max_iters: rc.max_iters,
                ..GdConfig::new(w.k(), w.n(), 0)
            };
            let run = gd_from(w.clone(), &gd, v).map_err(|e| e.at("reconvergence"))?;
            (run.terminal, run.iterations)
        }
        None => (w.clone(), 0),
    };
    let max_norm = point.neuron_norms().into_iter().fold(0.0, f64::max);
    let alpha0 = config.alpha_fraction * max_norm;

    let ((eps, lambda), prec) = with_retry(config.precision, config.max_precision, |prec| {
        let eps = enclose_gradient_norm(&point, v, prec).map_err(|e| e.at("gradient"))?.hi_f64();
        let h = enclose_hessian(&point, v, prec).map_err(|e| e.at("hessian"))?;
        let report = eigen_lower_bound(&h, prec).map_err(|e| e.at("eigenvalue bound"))?;
        if !report.certified() {
            return Err(Error::NotPositiveDefinite.at("eigenvalue bound"));
        }
        Ok((eps, report.lambda_min_lower))
    })?;

    let attempt = |alpha: f64| -> Result<(f64, Finished, u32)> {
        let ball = BallSpec::new(&point, alpha, v, prec).map_err(|e| e.at("third-order bound"))?;
        let b = third_order_bound_la(&ball, v.count(), point.n())
            .map_err(|e| e.at("third-order bound"))?
            .hi_f64();
        let (fin, p) = with_retry(prec, config.max_precision, |p| finish(&point, v, eps, lambda, b, alpha, p))?;
        Ok((b, fin, p))
    };
    let (alpha, (b, fin, fprec)) = match attempt(alpha0) {
        Err(e) if matches!(e.root(), Error::RadiusExceedsAlpha { .. }) => {
            let alpha = alpha0 * config.alpha_retry_factor;
            (alpha, attempt(alpha)?)
        }
        other => (alpha0, other?),
    };

    Ok(Certificate {
        point_ref: String::new(),
        epsilon: eps,
        lambda_min: lambda,
        b,
        alpha,
        r: fin.r,
        objective_lo: fin.objective.lo_f64(),
        objective_hi: fin.objective.hi_f64(),
        margin: fin.check.margin,
        nonglobal: fin.check.nonglobal,
        differentiable_ball: fin.differentiable,
        strict: fin.strict,
        precision_bits: fprec,
        reconverge_iterations: iterations,
        transfer_chain: Vec::new(),
        point,
    })
}

/// Recomputes every invariant of a certificate that does not need the
/// eigenvalue step: `eps` and `B` must still bound their recomputed values,
/// and `r`, the margin and all flags must match exactly.
pub fn revalidate(cert: &Certificate, v: &TargetBasis) -> std::result::Result<(), String> {
    let prec = cert.precision_bits;
    let w = &cert.point;
    v.check_compatible(w).map_err(|e| e.to_string())?;
    if !(cert.alpha > 0.0) || !(cert.lambda_min > 0.0) {
        return Err("alpha and lambda_min must be positive".into());
    }
    let eps = enclose_gradient_norm(w, v, prec).map_err(|e| e.to_string())?;
    if !(cert.epsilon >= eps.hi_f64()) {
        return Err(format!("epsilon {:e} below recomputed bound {:e}", cert.epsilon, eps.hi_f64()));
    }
    let ball = BallSpec::new(w, cert.alpha, v, prec).map_err(|e| e.to_string())?;
    let b = third_order_bound_la(&ball, v.count(), w.n()).map_err(|e| e.to_string())?;
    if !(cert.b >= b.hi_f64()) {
        return Err(format!("B {:e} below recomputed bound {:e}", cert.b, b.hi_f64()));
    }
    let fin = finish(w, v, cert.epsilon, cert.lambda_min, cert.b, cert.alpha, prec).map_err(|e| e.to_string())?;
    if fin.r != cert.r {
        return Err(format!("r {:e} differs from recomputed {:e}", cert.r, fin.r));
    }
    if fin.objective.lo_f64() != cert.objective_lo || fin.objective.hi_f64() != cert.objective_hi {
        return Err("objective enclosure differs".into());
    }
    if fin.check.margin != cert.margin || fin.check.nonglobal != cert.nonglobal {
        return Err("non-globality margin differs".into());
    }
    if fin.differentiable != cert.differentiable_ball {
        return Err("differentiability flag differs".into());
    }
    if fin.strict != cert.strict {
        return Err("strictness flag differs".into());
    }
    for t in &cert.transfer_chain {
        let expect = transfer_values(cert, t.distance, prec);
        if !(t.distance <= cert.alpha) || expect != (t.radius, t.lambda_min) {
            return Err(format!("transfer from {} is inconsistent", t.point_ref));
        }
    }
    Ok(())
}

fn transfer_values(cert: &Certificate, distance: f64, prec: u32) -> (f64, f64) {
    let d = Enclosure::point(prec, distance);
    let radius = Enclosure::point(prec, cert.r).add(&d).hi_f64();
    let lambda = Enclosure::point(prec, cert.lambda_min)
        .sub(&Enclosure::point(prec, cert.b).mul(&d))
        .lo_f64();
    (radius, lambda)
}

/// Extends `cert` to `member`, a point within `alpha` of the certified one.
/// The enclosed minimum is the same, so non-globality carries over; the
/// radius grows by the distance and the eigenvalue bound shrinks by
/// `B * distance`.
pub fn transfer_certificate(cert: &Certificate, member: &WeightPoint, member_ref: &str) -> Result<Transfer> {
    if member.n() != cert.n() || member.k() != cert.k() {
        return Err(Error::DimensionMismatch("transfer between different shapes".into()));
    }
    let prec = cert.precision_bits;
    let distance = enclose_distance(member.as_slice(), cert.point.as_slice(), prec).hi_f64();
    if distance > cert.alpha {
        return Err(Error::RadiusExceedsAlpha {
            r: distance,
            alpha: cert.alpha,
        });
    }
    let (radius, lambda_min) = transfer_values(cert, distance, prec);
    Ok(Transfer {
        point_ref: member_ref.to_string(),
        distance,
        radius,
        lambda_min,
    })
}

/// Matrix whose spectrum, repeated `m` times, is what zero-padding every
/// neuron and target with `m` coordinates adds to the Hessian spectrum.
pub fn build_m(w: &WeightPoint, v: &TargetBasis) -> Result<DMatrix<f64>> {
    v.check_compatible(w)?;
    w.check_nonzero()?;
    let n = w.n();
    let norms = w.neuron_norms();
    let vnorms = v.norms();
    let angle = |a: &[f64], na: f64, b: &[f64], nb: f64| {
        (dot(a, b) / (na * nb)).clamp(-1.0, 1.0).acos()
    };
    let mut m = DMatrix::zeros(n, n);
    for (i, wi) in w.rows().enumerate() {
        let mut d = 0.5;
        for (l, wl) in w.rows().enumerate() {
            if l != i {
                let t = angle(wi, norms[i], wl, norms[l]);
                d += t.sin() * norms[l] / (2.0 * PI * norms[i]);
                m[(i, l)] = (PI - t) / (2.0 * PI);
            }
        }
        for (l, vl) in v.rows().enumerate() {
            let t = angle(wi, norms[i], vl, vnorms[l]);
            d -= t.sin() * vnorms[l] / (2.0 * PI * norms[i]);
        }
        m[(i, i)] = d;
    }
    Ok(m)
}

#[derive(Debug, Clone)]
pub struct LiftReport {
    pub m: DMatrix<f64>,
    pub spectrum_m: Vec<f64>,
    /// Certified lower bound on the smallest eigenvalue of the padded
    /// Hessian, or `-1` when not certified.
    pub lambda_min_padded: f64,
    /// Radius recomputed with the padded eigenvalue bound.
    pub r_padded: Option<f64>,
    pub lift_certified: bool,
    pub m_note: String,
}

/// Certifies the zero-padded point in one extra dimension. The gradient
/// norm, objective, neuron norms and third-order bound are all unchanged by
/// padding, and every further padded coordinate contributes another copy of
/// the spectrum of `M`, so the one-step certificate covers every `m >= 1`.
pub fn lift_certificate(cert: &Certificate, v: &TargetBasis) -> Result<LiftReport> {
    let prec = cert.precision_bits;
    let m = build_m(&cert.point, v)?;
    let spectrum_m = sorted_eigenvalues(&m);
    let wp = cert.point.padded(1);
    let vp = v.padded(1);
    let h = enclose_hessian(&wp, &vp, prec).map_err(|e| e.at("padded hessian"))?;
    let report = eigen_lower_bound(&h, prec).map_err(|e| e.at("padded eigenvalue bound"))?;
    let lambda = report.lambda_min_lower;
    let r_padded = if report.certified() {
        compute_radius(cert.epsilon, lambda, cert.b, cert.alpha, prec).ok()
    } else {
        None
    };
    let lift_certified = cert.nonglobal && cert.differentiable_ball && r_padded.is_some();
    let m_note = if lift_certified {
        "the same constants certify the zero-padded point for every m >= 1".to_string()
    } else {
        "padded point not certified".to_string()
    };
    Ok(LiftReport {
        m,
        spectrum_m,
        lambda_min_padded: lambda,
        r_padded,
        lift_certified,
        m_note,
    })
}

/// Zero-padded float Hessian, for spectrum comparisons.
pub fn padded_hessian(w: &WeightPoint, v: &TargetBasis, m: usize) -> Result<DMatrix<f64>> {
    hessian_f(&w.padded(m), &v.padded(m))
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DisjointnessReport {
    /// Certificates whose ball reaches a zero neuron.
    pub origin: Vec<usize>,
    /// `(cert, i, j)`: neurons `i` and `j` of one certificate could meet.
    pub neuron_pairs: Vec<(usize, usize, usize)>,
    /// Certificates whose balls intersect.
    pub overlapping: Vec<(usize, usize)>,
}

impl DisjointnessReport {
    pub fn pass(&self) -> bool {
        self.origin.is_empty() && self.neuron_pairs.is_empty() && self.overlapping.is_empty()
    }

    /// Whether certificate `c` passes its own checks (origin and neuron
    /// pairs), ignoring overlaps with other certificates.
    pub fn self_consistent(&self, c: usize) -> bool {
        !self.origin.contains(&c) && !self.neuron_pairs.iter().any(|(x, _, _)| *x == c)
    }
}

pub fn ball_disjointness_check(certs: &[Certificate]) -> DisjointnessReport {
    let mut rep = DisjointnessReport::default();
    for (c, cert) in certs.iter().enumerate() {
        let prec = cert.precision_bits;
        let r = Enclosure::point(prec, cert.r);
        if cert.point.rows().any(|x| !enclose_norm(x, prec).certainly_gt(&r)) {
            rep.origin.push(c);
        }
        let two_r = r.mul_f64(2.0);
        for i in 0..cert.n() {
            for j in i + 1..cert.n() {
                let d = enclose_distance(cert.point.row(i), cert.point.row(j), prec);
                if !d.certainly_gt(&two_r) {
                    rep.neuron_pairs.push((c, i, j));
                }
            }
        }
    }
    for a in 0..certs.len() {
        for b in a + 1..certs.len() {
            let (x, y) = (&certs[a], &certs[b]);
            if x.point.n() != y.point.n() || x.point.k() != y.point.k() {
                continue;
            }
            let prec = x.precision_bits.max(y.precision_bits);
            let d = enclose_distance(x.point.as_slice(), y.point.as_slice(), prec);
            let reach = Enclosure::point(prec, x.r).add(&Enclosure::point(prec, y.r));
            if !d.certainly_gt(&reach) {
                rep.overlapping.push((a, b));
            }
        }
    }
    rep
}
