//! Closed-form objective, gradient and Hessian for
//!
//! ```text
//! F(W) = E_x[ 1/2 (sum_i relu(w_i.x) - sum_j relu(v_j.x))^2 ],   x ~ N(0, I)
//! ```
//!
//! expanded through the arc-cosine kernel `f(w, v) = E[relu(w.x) relu(v.x)]`.
//! Summation order is fixed (row-major, `i` outer, `j` inner) so every result
//! is bit-reproducible on a given platform.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Operand, Result};
use crate::weights::{dot, norm, TargetBasis, WeightPoint};

/// Angle data for an ordered pair `(w, v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairGeometry {
    pub theta: f64,
    pub sin_theta: f64,
    pub cos_theta: f64,
    /// `v/|v| - cos(theta) w/|w|`
    pub n_vw: Vec<f64>,
    /// `n_vw / sin(theta)`, absent for parallel pairs.
    pub n_bar_vw: Option<Vec<f64>>,
    pub parallel: bool,
}

#[derive(Debug, Clone, Copy)]
struct Angle {
    theta: f64,
    sin: f64,
    cos: f64,
}

impl Angle {
    // sqrt(fl(a*a)) == a, so exactly proportional vectors give cos = +-1
    // and sin = 0 here rather than a rounding residue.
    fn new(nw2: f64, nv2: f64, d: f64) -> Angle {
        let cos = (d / (nw2 * nv2).sqrt()).clamp(-1.0, 1.0);
        Angle {
            theta: cos.acos(),
            sin: ((1.0 - cos) * (1.0 + cos)).sqrt(),
            cos,
        }
    }

    fn parallel(&self) -> bool {
        self.sin == 0.0
    }
}

fn nonzero(x: &[f64], who: Operand) -> Result<f64> {
    let n2 = dot(x, x);
    if n2 == 0.0 {
        Err(Error::ZeroNeuron(who))
    } else {
        Ok(n2)
    }
}

fn pair_angle(w: &[f64], v: &[f64], a: Operand, b: Operand) -> Result<(f64, f64, Angle)> {
    if w.len() != v.len() {
        return Err(Error::DimensionMismatch(format!("{} vs {}", w.len(), v.len())));
    }
    let nw2 = nonzero(w, a)?;
    let nv2 = nonzero(v, b)?;
    Ok((nw2.sqrt(), nv2.sqrt(), Angle::new(nw2, nv2, dot(w, v))))
}

pub fn pair_geometry(w: &[f64], v: &[f64]) -> Result<PairGeometry> {
    let (nw, nv, ang) = pair_angle(w, v, Operand::Neuron(0), Operand::Target(0))?;
    let n_vw: Vec<f64> = w
        .iter()
        .zip(v)
        .map(|(wa, va)| va / nv - ang.cos * wa / nw)
        .collect();
    let n_bar_vw = (!ang.parallel()).then(|| n_vw.iter().map(|x| x / ang.sin).collect());
    Ok(PairGeometry {
        theta: ang.theta,
        sin_theta: ang.sin,
        cos_theta: ang.cos,
        n_vw,
        n_bar_vw,
        parallel: ang.parallel(),
    })
}

fn f_from(nw: f64, nv: f64, a: Angle) -> f64 {
    if a.cos == 1.0 {
        return 0.5 * nw * nv;
    }
    nw * nv / (2.0 * PI) * (a.sin + (PI - a.theta) * a.cos)
}

/// `E[relu(w.x) relu(v.x)]` for standard Gaussian `x`.
pub fn kernel_f(w: &[f64], v: &[f64]) -> Result<f64> {
    let (nw, nv, a) = pair_angle(w, v, Operand::Neuron(0), Operand::Target(0))?;
    Ok(f_from(nw, nv, a))
}

// out += scale * g(w, v)
fn add_g(out: &mut [f64], scale: f64, w: &[f64], v: &[f64], nw: f64, nv: f64, a: Angle) {
    let cw = scale * nv * a.sin / (nw * 2.0 * PI);
    let cv = scale * (PI - a.theta) / (2.0 * PI);
    for ((o, wa), va) in out.iter_mut().zip(w).zip(v) {
        *o += cw * wa + cv * va;
    }
}

/// Gradient of `kernel_f` in its first argument. Parallel pairs use the
/// continuous limit, where the `sin` term vanishes.
pub fn kernel_grad_g(w: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    let (nw, nv, a) = pair_angle(w, v, Operand::Neuron(0), Operand::Target(0))?;
    let mut out = vec![0.0; w.len()];
    add_g(&mut out, 1.0, w, v, nw, nv, a);
    Ok(out)
}

// out += scale * h1(w, v); nothing when the pair is parallel
fn add_h1(out: &mut DMatrix<f64>, off: usize, scale: f64, w: &[f64], v: &[f64], nw: f64, nv: f64, a: Angle) {
    if a.parallel() {
        return;
    }
    let k = w.len();
    let c = scale * a.sin * nv / (2.0 * PI * nw);
    let wb: Vec<f64> = w.iter().map(|x| x / nw).collect();
    let nb: Vec<f64> = (0..k).map(|t| (v[t] / nv - a.cos * wb[t]) / a.sin).collect();
    for r in 0..k {
        for s in 0..k {
            let id = if r == s { 1.0 } else { 0.0 };
            out[(off + r, off + s)] += c * (id - wb[r] * wb[s] + nb[r] * nb[s]);
        }
    }
}

fn h2_into(out: &mut DMatrix<f64>, ro: usize, co: usize, w: &[f64], v: &[f64], nw: f64, nv: f64, a: Angle) {
    let k = w.len();
    let c = 1.0 / (2.0 * PI);
    let wb: Vec<f64> = w.iter().map(|x| x / nw).collect();
    let vb: Vec<f64> = v.iter().map(|x| x / nv).collect();
    let n_wv: Vec<f64> = (0..k).map(|t| (wb[t] - a.cos * vb[t]) / a.sin).collect();
    let n_vw: Vec<f64> = (0..k).map(|t| (vb[t] - a.cos * wb[t]) / a.sin).collect();
    for r in 0..k {
        for s in 0..k {
            let id = if r == s { PI - a.theta } else { 0.0 };
            out[(ro + r, co + s)] = c * (id + n_wv[r] * vb[s] + n_vw[r] * wb[s]);
        }
    }
}

/// Hessian of `kernel_f(w, v)` in `w`.
pub fn hess_block_h1(w: &[f64], v: &[f64]) -> Result<DMatrix<f64>> {
    let (nw, nv, a) = pair_angle(w, v, Operand::Neuron(0), Operand::Target(0))?;
    if a.parallel() {
        return Err(Error::SingularPair(Operand::Neuron(0), Operand::Target(0)));
    }
    let mut m = DMatrix::zeros(w.len(), w.len());
    add_h1(&mut m, 0, 1.0, w, v, nw, nv, a);
    Ok(m)
}

/// Mixed second derivative of `kernel_f(w, v)`, `d/dv d/dw`.
pub fn hess_block_h2(w: &[f64], v: &[f64]) -> Result<DMatrix<f64>> {
    let (nw, nv, a) = pair_angle(w, v, Operand::Neuron(0), Operand::Target(0))?;
    if a.parallel() {
        return Err(Error::SingularPair(Operand::Neuron(0), Operand::Target(0)));
    }
    let mut m = DMatrix::zeros(w.len(), w.len());
    h2_into(&mut m, 0, 0, w, v, nw, nv, a);
    Ok(m)
}

/// Objective and gradient evaluator with the target-only terms cached.
#[derive(Debug, Clone)]
pub struct Evaluator {
    targets: TargetBasis,
    v_norm2: Vec<f64>,
    constant: f64,
}

impl Evaluator {
    pub fn new(targets: &TargetBasis) -> Self {
        let v_norm2: Vec<f64> = targets.rows().map(|v| dot(v, v)).collect();
        let mut constant = 0.0;
        for (i, vi) in targets.rows().enumerate() {
            for (j, vj) in targets.rows().enumerate() {
                let a = Angle::new(v_norm2[i], v_norm2[j], dot(vi, vj));
                constant += 0.5 * f_from(v_norm2[i].sqrt(), v_norm2[j].sqrt(), a);
            }
        }
        Evaluator {
            targets: targets.clone(),
            v_norm2,
            constant,
        }
    }

    pub fn targets(&self) -> &TargetBasis {
        &self.targets
    }

    fn norms2(&self, w: &WeightPoint) -> Result<Vec<f64>> {
        self.targets.check_compatible(w)?;
        w.rows()
            .enumerate()
            .map(|(i, r)| nonzero(r, Operand::Neuron(i)))
            .collect()
    }

    pub fn objective(&self, w: &WeightPoint) -> Result<f64> {
        let wn2 = self.norms2(w)?;
        let mut ww = 0.0;
        for (i, wi) in w.rows().enumerate() {
            for (j, wj) in w.rows().enumerate() {
                let a = Angle::new(wn2[i], wn2[j], dot(wi, wj));
                ww += f_from(wn2[i].sqrt(), wn2[j].sqrt(), a);
            }
        }
        let mut wv = 0.0;
        for (i, wi) in w.rows().enumerate() {
            for (j, vj) in self.targets.rows().enumerate() {
                let a = Angle::new(wn2[i], self.v_norm2[j], dot(wi, vj));
                wv += f_from(wn2[i].sqrt(), self.v_norm2[j].sqrt(), a);
            }
        }
        Ok(0.5 * ww - wv + self.constant)
    }

    /// Writes the gradient into `grad` (row-major, one block per neuron)
    /// and returns the objective.
    pub fn value_and_gradient(&self, w: &WeightPoint, grad: &mut [f64]) -> Result<f64> {
        let wn2 = self.norms2(w)?;
        let k = w.k();
        let mut ww = 0.0;
        let mut wv = 0.0;
        for (i, wi) in w.rows().enumerate() {
            let gi = &mut grad[i * k..(i + 1) * k];
            let nwi = wn2[i].sqrt();
            for (x, g) in wi.iter().zip(gi.iter_mut()) {
                *g = 0.5 * x;
            }
            for (j, wj) in w.rows().enumerate() {
                if j == i {
                    ww += 0.5 * nwi * nwi;
                    continue;
                }
                let nwj = wn2[j].sqrt();
                let a = Angle::new(wn2[i], wn2[j], dot(wi, wj));
                ww += f_from(nwi, nwj, a);
                add_g(gi, 1.0, wi, wj, nwi, nwj, a);
            }
            for (j, vj) in self.targets.rows().enumerate() {
                let nvj = self.v_norm2[j].sqrt();
                let a = Angle::new(wn2[i], self.v_norm2[j], dot(wi, vj));
                wv += f_from(nwi, nvj, a);
                add_g(gi, -1.0, wi, vj, nwi, nvj, a);
            }
        }
        Ok(0.5 * ww - wv + self.constant)
    }

    pub fn gradient(&self, w: &WeightPoint) -> Result<Vec<f64>> {
        let mut g = vec![0.0; w.n() * w.k()];
        self.value_and_gradient(w, &mut g)?;
        Ok(g)
    }

    pub fn hessian(&self, w: &WeightPoint) -> Result<DMatrix<f64>> {
        let wn2 = self.norms2(w)?;
        let (n, k) = (w.n(), w.k());
        let mut h = DMatrix::zeros(n * k, n * k);
        for (i, wi) in w.rows().enumerate() {
            let o = i * k;
            let nwi = wn2[i].sqrt();
            for t in 0..k {
                h[(o + t, o + t)] = 0.5;
            }
            for (j, wj) in w.rows().enumerate() {
                if j == i {
                    continue;
                }
                let nwj = wn2[j].sqrt();
                let a = Angle::new(wn2[i], wn2[j], dot(wi, wj));
                if a.parallel() {
                    return Err(Error::SingularPair(Operand::Neuron(i), Operand::Neuron(j)));
                }
                add_h1(&mut h, o, 1.0, wi, wj, nwi, nwj, a);
                h2_into(&mut h, o, j * k, wi, wj, nwi, nwj, a);
            }
            for (j, vj) in self.targets.rows().enumerate() {
                let nvj = self.v_norm2[j].sqrt();
                let a = Angle::new(wn2[i], self.v_norm2[j], dot(wi, vj));
                add_h1(&mut h, o, -1.0, wi, vj, nwi, nvj, a);
            }
        }
        Ok(h)
    }
}

pub fn objective_f(w: &WeightPoint, v: &TargetBasis) -> Result<f64> {
    Evaluator::new(v).objective(w)
}

pub fn gradient_f(w: &WeightPoint, v: &TargetBasis) -> Result<Vec<f64>> {
    Evaluator::new(v).gradient(w)
}

pub fn hessian_f(w: &WeightPoint, v: &TargetBasis) -> Result<DMatrix<f64>> {
    Evaluator::new(v).hessian(w)
}

/// Norm of each neuron's gradient block.
pub fn block_norms(grad: &[f64], k: usize) -> Vec<f64> {
    grad.chunks_exact(k).map(norm).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_err: f64,
}

/// Plain Monte Carlo estimate of the objective's defining expectation.
pub fn mc_objective_oracle(w: &WeightPoint, v: &TargetBasis, samples: usize, seed: u64) -> Result<McEstimate> {
    v.check_compatible(w)?;
    if samples == 0 {
        return Err(Error::InvalidConfig("at least one sample".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = vec![0.0; w.k()];
    let (mut sum, mut sum2) = (0.0, 0.0);
    for _ in 0..samples {
        for xa in x.iter_mut() {
            *xa = StandardNormal.sample(&mut rng);
        }
        let out: f64 = w.rows().map(|r| dot(r, &x).max(0.0)).sum::<f64>()
            - v.rows().map(|r| dot(r, &x).max(0.0)).sum::<f64>();
        let y = 0.5 * out * out;
        sum += y;
        sum2 += y * y;
    }
    let m = samples as f64;
    let mean = sum / m;
    let var = if samples > 1 {
        ((sum2 - m * mean * mean) / (m - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(McEstimate {
        mean,
        std_err: (var / m).sqrt(),
    })
}

/// Central differences of the objective.
pub fn fd_gradient_oracle(w: &WeightPoint, v: &TargetBasis, step: f64) -> Result<Vec<f64>> {
    let ev = Evaluator::new(v);
    let mut p = w.clone();
    let mut out = Vec::with_capacity(w.as_slice().len());
    for t in 0..w.as_slice().len() {
        let x = w.as_slice()[t];
        p.as_mut_slice()[t] = x + step;
        let fp = ev.objective(&p)?;
        p.as_mut_slice()[t] = x - step;
        let fm = ev.objective(&p)?;
        p.as_mut_slice()[t] = x;
        out.push((fp - fm) / (2.0 * step));
    }
    Ok(out)
}

/// Central differences of the closed-form gradient, column by column.
pub fn fd_hessian_oracle(w: &WeightPoint, v: &TargetBasis, step: f64) -> Result<DMatrix<f64>> {
    let ev = Evaluator::new(v);
    let d = w.as_slice().len();
    let mut p = w.clone();
    let mut h = DMatrix::zeros(d, d);
    for t in 0..d {
        let x = w.as_slice()[t];
        p.as_mut_slice()[t] = x + step;
        let gp = ev.gradient(&p)?;
        p.as_mut_slice()[t] = x - step;
        let gm = ev.gradient(&p)?;
        p.as_mut_slice()[t] = x;
        for r in 0..d {
            h[(r, t)] = (gp[r] - gm[r]) / (2.0 * step);
        }
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn geometry_special_pairs() {
        let g = pair_geometry(&[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert!(close(g.theta, PI / 2.0, 1e-15));
        assert_eq!(g.n_bar_vw.unwrap(), vec![0.0, 1.0]);

        let g = pair_geometry(&[0.3, -1.2], &[0.3, -1.2]).unwrap();
        assert!(g.parallel && g.theta == 0.0 && g.n_bar_vw.is_none());

        let g = pair_geometry(&[1.0, 0.0], &[-1.0, 0.0]).unwrap();
        assert!(g.parallel && g.theta == PI);

        assert!(matches!(pair_geometry(&[0.0, 0.0], &[1.0, 0.0]), Err(Error::ZeroNeuron(_))));
    }

    #[test]
    fn kernel_values() {
        assert!(close(kernel_f(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0 / (2.0 * PI), 1e-16));
        assert!(close(kernel_f(&[0.6, 0.8, 2.0], &[0.6, 0.8, 2.0]).unwrap(), 2.5, 1e-14));
        assert_eq!(kernel_f(&[1.0, 0.0], &[-1.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn kernel_gradient_values() {
        let g = kernel_grad_g(&[0.5, -1.0], &[0.5, -1.0]).unwrap();
        assert!(close(g[0], 0.25, 1e-15) && close(g[1], -0.5, 1e-15));
        let g = kernel_grad_g(&[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert!(close(g[0], 1.0 / (2.0 * PI), 1e-16) && close(g[1], 0.25, 1e-16));
        let g = kernel_grad_g(&[1.0, 0.0], &[2.0, 0.0]).unwrap();
        assert!(close(g[0], 1.0, 1e-15) && g[1] == 0.0);
    }

    #[test]
    fn h1_orthogonal_unit_pair() {
        let h = hess_block_h1(&[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert!(close(h[(0, 0)], 0.0, 1e-16) && close(h[(1, 1)], 1.0 / PI, 1e-16));
        assert!(close(h[(0, 1)], 0.0, 1e-16));
        assert!(matches!(hess_block_h1(&[1.0, 0.0], &[2.0, 0.0]), Err(Error::SingularPair(..))));
    }

    #[test]
    fn objective_small_cases() {
        let v = TargetBasis::standard(1);
        let w = WeightPoint::from_rows(&[vec![-1.0]]).unwrap();
        assert!(close(objective_f(&w, &v).unwrap(), 0.5, 1e-15));
        let w = WeightPoint::from_rows(&[vec![2.0]]).unwrap();
        assert!(close(objective_f(&w, &v).unwrap(), 0.25, 1e-15));
        assert_eq!(gradient_f(&w, &v).unwrap(), vec![0.5]);

        let v = TargetBasis::standard(3);
        let w = WeightPoint::new(3, 3, vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(objective_f(&w, &v).unwrap(), 0.0);
        assert!(gradient_f(&w, &v).unwrap().iter().all(|g| g.abs() < 1e-15));
    }

    #[test]
    fn hessian_single_neuron_on_target() {
        let v = TargetBasis::standard(2);
        let w = WeightPoint::from_rows(&[vec![1.0, 0.0]]).unwrap();
        let h = hessian_f(&w, &v).unwrap();
        assert!(close(h[(0, 0)], 0.5, 1e-16));
        assert!(close(h[(1, 1)], 0.5 - 1.0 / PI, 1e-16));
        assert!(close(h[(0, 1)], 0.0, 1e-16));
    }

    #[test]
    fn hessian_rejects_parallel_neurons() {
        let v = TargetBasis::standard(2);
        let w = WeightPoint::from_rows(&[vec![1.0, 1.0], vec![2.0, 2.0]]).unwrap();
        assert!(matches!(
            hessian_f(&w, &v),
            Err(Error::SingularPair(Operand::Neuron(0), Operand::Neuron(1)))
        ));
    }

    #[test]
    fn fused_matches_separate_objective() {
        let v = TargetBasis::standard(3);
        let w = WeightPoint::new(2, 3, vec![0.3, -0.2, 0.9, 1.1, 0.4, -0.5]).unwrap();
        let ev = Evaluator::new(&v);
        let mut g = vec![0.0; 6];
        let f = ev.value_and_gradient(&w, &mut g).unwrap();
        assert!(close(f, ev.objective(&w).unwrap(), 1e-15));
    }
}
