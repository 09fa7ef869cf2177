//! Interval versions of the closed-form objective, gradient and Hessian.

use crate::error::{Error, Operand, Result};
use crate::rigor::interval::{DirectedSum, Enclosure};
use crate::weights::{TargetBasis, WeightPoint};

/// Symmetric matrix of enclosures, row-major.
#[derive(Debug, Clone)]
pub struct IntervalMatrix {
    dim: usize,
    entries: Vec<Enclosure>,
}

impl IntervalMatrix {
    pub fn from_f64(m: &nalgebra::DMatrix<f64>, prec: u32) -> Self {
        assert!(m.is_square());
        let dim = m.nrows();
        let entries = (0..dim * dim)
            .map(|t| Enclosure::point(prec, m[(t / dim, t % dim)]))
            .collect();
        IntervalMatrix { dim, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, r: usize, c: usize) -> &Enclosure {
        &self.entries[r * self.dim + c]
    }

    fn set_sym(&mut self, r: usize, c: usize, e: Enclosure) {
        self.entries[c * self.dim + r] = e.clone();
        self.entries[r * self.dim + c] = e;
    }

    /// Entrywise midpoints, symmetrized bit-for-bit from the upper triangle.
    pub fn midpoint(&self) -> nalgebra::DMatrix<f64> {
        let d = self.dim;
        let mut m = nalgebra::DMatrix::zeros(d, d);
        for r in 0..d {
            for c in r..d {
                let x = self.get(r, c).mid_f64();
                m[(r, c)] = x;
                m[(c, r)] = x;
            }
        }
        m
    }

    pub fn max_width(&self) -> f64 {
        self.entries.iter().map(Enclosure::width_f64).fold(0.0, f64::max)
    }

    pub fn precision(&self) -> u32 {
        self.entries[0].precision()
    }
}

struct Vector<'a> {
    raw: &'a [f64],
    norm2: Enclosure,
    norm: Enclosure,
    unit: Vec<Enclosure>,
}

fn vector<'a>(raw: &'a [f64], who: Operand, prec: u32) -> Result<Vector<'a>> {
    let mut s = DirectedSum::new(prec);
    for x in raw {
        s.add_prod(&[*x, *x]);
    }
    let norm2 = s.finish();
    if !norm2.is_positive() {
        return Err(Error::ZeroNeuron(who));
    }
    let norm = norm2.sqrt_nonneg();
    let unit = raw.iter().map(|x| Enclosure::point(prec, *x).div(&norm)).collect();
    Ok(Vector { raw, norm2, norm, unit })
}

type PairTable<T> = Vec<Vec<T>>;

struct Pair {
    theta: Enclosure,
    sin: Enclosure,
    cos: Enclosure,
}

fn pair(w: &Vector, v: &Vector, prec: u32) -> Pair {
    let mut s = DirectedSum::new(prec);
    for (a, b) in w.raw.iter().zip(v.raw) {
        s.add_prod(&[*a, *b]);
    }
    let cos = s.finish().div(&w.norm.mul(&v.norm)).restrict(-1.0, 1.0);
    let one = Enclosure::point(prec, 1.0);
    let sin = one
        .sub(&cos)
        .restrict(0.0, 2.0)
        .mul(&one.add(&cos).restrict(0.0, 2.0))
        .sqrt_nonneg();
    Pair {
        theta: cos.acos_of_cos(),
        sin,
        cos,
    }
}

struct Frame<'a> {
    prec: u32,
    pi: Enclosure,
    two_pi: Enclosure,
    ws: Vec<Vector<'a>>,
    vs: Vec<Vector<'a>>,
}

impl<'a> Frame<'a> {
    fn new(w: &'a WeightPoint, v: &'a TargetBasis, prec: u32) -> Result<Self> {
        v.check_compatible(w)?;
        let ws = w
            .rows()
            .enumerate()
            .map(|(i, r)| vector(r, Operand::Neuron(i), prec))
            .collect::<Result<_>>()?;
        let vs = v
            .rows()
            .enumerate()
            .map(|(j, r)| vector(r, Operand::Target(j), prec))
            .collect::<Result<_>>()?;
        let pi = Enclosure::pi(prec);
        Ok(Frame {
            prec,
            two_pi: pi.mul_f64(2.0),
            pi,
            ws,
            vs,
        })
    }

    fn f(&self, a: &Vector, b: &Vector, p: &Pair) -> Enclosure {
        let tail = self.pi.sub(&p.theta).mul(&p.cos);
        a.norm.mul(&b.norm).div(&self.two_pi).mul(&p.sin.add(&tail))
    }

    fn nonsingular(&self, p: Pair, a: Operand, b: Operand) -> Result<Pair> {
        if p.sin.is_positive() {
            Ok(p)
        } else {
            Err(Error::SingularEnclosure(a, b))
        }
    }

    // every (w_i, w_j) with i != j, and every (w_i, v_j)
    fn all_pairs(&self) -> Result<(PairTable<Option<Pair>>, PairTable<Pair>)> {
        let mut ww = Vec::with_capacity(self.ws.len());
        for (i, a) in self.ws.iter().enumerate() {
            let row = self
                .ws
                .iter()
                .enumerate()
                .map(|(j, b)| {
                    if i == j {
                        Ok(None)
                    } else {
                        self.nonsingular(pair(a, b, self.prec), Operand::Neuron(i), Operand::Neuron(j))
                            .map(Some)
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            ww.push(row);
        }
        let mut wv = Vec::with_capacity(self.ws.len());
        for (i, a) in self.ws.iter().enumerate() {
            let row = self
                .vs
                .iter()
                .enumerate()
                .map(|(j, b)| self.nonsingular(pair(a, b, self.prec), Operand::Neuron(i), Operand::Target(j)))
                .collect::<Result<Vec<_>>>()?;
            wv.push(row);
        }
        Ok((ww, wv))
    }
}

/// Enclosure of the angle between two nonzero vectors.
pub fn enclose_angle(w: &[f64], v: &[f64], prec: u32) -> Result<Enclosure> {
    let a = vector(w, Operand::Neuron(0), prec)?;
    let b = vector(v, Operand::Target(0), prec)?;
    Ok(pair(&a, &b, prec).theta)
}

/// Enclosure of the objective. Parallel pairs are allowed here since the
/// objective is continuous everywhere away from zero neurons.
pub fn enclose_objective(w: &WeightPoint, v: &TargetBasis, prec: u32) -> Result<Enclosure> {
    let fr = Frame::new(w, v, prec)?;
    let self_terms = |xs: &[Vector]| {
        let mut s = DirectedSum::new(prec);
        for (i, a) in xs.iter().enumerate() {
            for (j, b) in xs.iter().enumerate() {
                if i == j {
                    s.add(&a.norm2.mul_f64(0.5));
                } else {
                    s.add(&fr.f(a, b, &pair(a, b, prec)));
                }
            }
        }
        s.finish().mul_f64(0.5)
    };
    let mut cross = DirectedSum::new(prec);
    for a in &fr.ws {
        for b in &fr.vs {
            cross.add(&fr.f(a, b, &pair(a, b, prec)));
        }
    }
    Ok(self_terms(&fr.ws).sub(&cross.finish()).add(&self_terms(&fr.vs)))
}

/// Entrywise enclosure of the gradient, one block of `k` per neuron.
pub fn enclose_gradient(w: &WeightPoint, v: &TargetBasis, prec: u32) -> Result<Vec<Enclosure>> {
    let fr = Frame::new(w, v, prec)?;
    let (ww, wv) = fr.all_pairs()?;
    let mut out = Vec::with_capacity(w.n() * w.k());
    for (i, a) in fr.ws.iter().enumerate() {
        // g(a, b) = (|b| sin / 2pi) a_bar + ((pi - theta) / 2pi) b
        let coeffs = |b: &Vector, p: &Pair| {
            (
                b.norm.mul(&p.sin).div(&fr.two_pi),
                fr.pi.sub(&p.theta).div(&fr.two_pi),
            )
        };
        let wterms: Vec<_> = fr
            .ws
            .iter()
            .zip(&ww[i])
            .filter_map(|(b, p)| p.as_ref().map(|p| (b, coeffs(b, p))))
            .collect();
        let vterms: Vec<_> = fr.vs.iter().zip(&wv[i]).map(|(b, p)| (b, coeffs(b, p))).collect();
        for t in 0..w.k() {
            let mut s = DirectedSum::new(prec);
            s.add_f64(0.5 * a.raw[t]);
            for (b, (cu, cb)) in &wterms {
                s.add(&cu.mul(&a.unit[t]).add(&cb.mul_f64(b.raw[t])));
            }
            for (b, (cu, cb)) in &vterms {
                s.add(&cu.mul(&a.unit[t]).add(&cb.mul_f64(b.raw[t])).neg());
            }
            out.push(s.finish());
        }
    }
    Ok(out)
}

/// Enclosure of the Euclidean norm of the gradient; `hi` is a certified
/// upper bound.
pub fn enclose_gradient_norm(w: &WeightPoint, v: &TargetBasis, prec: u32) -> Result<Enclosure> {
    let g = enclose_gradient(w, v, prec)?;
    let mut s = DirectedSum::new(prec);
    for e in &g {
        s.add(&e.sqr());
    }
    Ok(s.finish().sqrt_nonneg())
}

/// Entrywise enclosure of the Hessian. Every pair entering a second-order
/// term must be certifiably non-parallel.
pub fn enclose_hessian(w: &WeightPoint, v: &TargetBasis, prec: u32) -> Result<IntervalMatrix> {
    let fr = Frame::new(w, v, prec)?;
    let (ww, wv) = fr.all_pairs()?;
    let (n, k) = (w.n(), w.k());
    let dim = n * k;
    let mut h = IntervalMatrix {
        dim,
        entries: vec![Enclosure::zero(prec); dim * dim],
    };
    let residual = |a: &Vector, b: &Vector, p: &Pair| -> Vec<Enclosure> {
        (0..k)
            .map(|t| b.unit[t].sub(&p.cos.mul(&a.unit[t])).div(&p.sin))
            .collect()
    };
    for (i, a) in fr.ws.iter().enumerate() {
        // diagonal block: 1/2 I + sum_j c_j (I - a a^T + n_j n_j^T), signed
        let mut terms: Vec<(Enclosure, Vec<Enclosure>)> = Vec::new();
        for (b, p) in fr.ws.iter().zip(&ww[i]) {
            if let Some(p) = p {
                let c = p.sin.mul(&b.norm).div(&fr.two_pi.mul(&a.norm));
                terms.push((c, residual(a, b, p)));
            }
        }
        for (b, p) in fr.vs.iter().zip(&wv[i]) {
            let c = p.sin.mul(&b.norm).div(&fr.two_pi.mul(&a.norm)).neg();
            terms.push((c, residual(a, b, p)));
        }
        for r in 0..k {
            for s in r..k {
                let mut acc = DirectedSum::new(prec);
                if r == s {
                    acc.add_f64(0.5);
                }
                let proj = a.unit[r].mul(&a.unit[s]).neg().add_f64(if r == s { 1.0 } else { 0.0 });
                for (c, nb) in &terms {
                    acc.add(&c.mul(&proj.add(&nb[r].mul(&nb[s]))));
                }
                h.set_sym(i * k + r, i * k + s, acc.finish());
            }
        }
        // off-diagonal blocks (i, j), j > i: h2(w_i, w_j)
        for (j, b) in fr.ws.iter().enumerate().skip(i + 1) {
            let p = ww[i][j].as_ref().expect("pair computed");
            let n_ab = residual(b, a, p);
            let n_ba = residual(a, b, p);
            let diag = fr.pi.sub(&p.theta);
            for r in 0..k {
                for s in 0..k {
                    let mut e = n_ab[r].mul(&b.unit[s]).add(&n_ba[r].mul(&a.unit[s]));
                    if r == s {
                        e = e.add(&diag);
                    }
                    h.set_sym(i * k + r, j * k + s, e.div(&fr.two_pi));
                }
            }
        }
    }
    Ok(h)
}
