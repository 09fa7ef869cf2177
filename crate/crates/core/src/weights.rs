use crate::error::{Error, Operand, Result};

/// Hidden-layer weights: `n` neurons in `R^k`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightPoint {
    n: usize,
    k: usize,
    w: Vec<f64>,
}

impl WeightPoint {
    pub fn new(n: usize, k: usize, w: Vec<f64>) -> Result<Self> {
        if n == 0 || k == 0 {
            return Err(Error::InvalidConfig(format!("n={n}, k={k} must be positive")));
        }
        if w.len() != n * k {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for {n}x{k} weights",
                w.len()
            )));
        }
        if w.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidConfig("non-finite weight".into()));
        }
        Ok(WeightPoint { n, k, w })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let k = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != k) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        WeightPoint::new(rows.len(), k, rows.concat())
    }

    /// From the `k` rows of a `k x n` matrix whose columns are the
    /// neurons, the layout the worked examples are printed in.
    pub fn from_columns(matrix_rows: &[Vec<f64>]) -> Result<Self> {
        let k = matrix_rows.len();
        let n = matrix_rows.first().map_or(0, Vec::len);
        if matrix_rows.iter().any(|c| c.len() != n) {
            return Err(Error::DimensionMismatch("ragged matrix rows".into()));
        }
        let mut w = vec![0.0; n * k];
        for (a, row) in matrix_rows.iter().enumerate() {
            for (i, x) in row.iter().enumerate() {
                w[i * k + a] = *x;
            }
        }
        WeightPoint::new(n, k, w)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.w
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.w
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.w
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.w[i * self.k..(i + 1) * self.k]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.w.chunks_exact(self.k)
    }

    pub fn neuron_norms(&self) -> Vec<f64> {
        self.rows().map(norm).collect()
    }

    /// Euclidean distance in `R^{nk}`.
    pub fn distance(&self, other: &WeightPoint) -> f64 {
        self.w
            .iter()
            .zip(&other.w)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// Appends `m` zero coordinates to every neuron.
    pub fn padded(&self, m: usize) -> WeightPoint {
        let k = self.k + m;
        let mut w = vec![0.0; self.n * k];
        for (i, r) in self.rows().enumerate() {
            w[i * k..i * k + self.k].copy_from_slice(r);
        }
        WeightPoint { n: self.n, k, w }
    }

    /// Row `i` of the result is row `rows[i]` of `self`, column `a` is
    /// column `cols[a]`.
    pub fn permuted(&self, rows: &[usize], cols: &[usize]) -> WeightPoint {
        let mut w = Vec::with_capacity(self.w.len());
        for &i in rows {
            let r = self.row(i);
            w.extend(cols.iter().map(|&a| r[a]));
        }
        WeightPoint { n: self.n, k: self.k, w }
    }

    pub(crate) fn check_nonzero(&self) -> Result<()> {
        for (i, r) in self.rows().enumerate() {
            if r.iter().all(|x| *x == 0.0) {
                return Err(Error::ZeroNeuron(Operand::Neuron(i)));
            }
        }
        Ok(())
    }
}

/// Target neurons `v_1..v_k` of the teacher network.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetBasis {
    count: usize,
    dim: usize,
    vectors: Vec<f64>,
    orthonormal: bool,
}

impl TargetBasis {
    /// The standard basis of `R^k`.
    pub fn standard(k: usize) -> Self {
        let mut vectors = vec![0.0; k * k];
        for j in 0..k {
            vectors[j * k + j] = 1.0;
        }
        TargetBasis {
            count: k,
            dim: k,
            vectors,
            orthonormal: true,
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || dim == 0 || rows.iter().any(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch("target rows".into()));
        }
        for (j, r) in rows.iter().enumerate() {
            if r.iter().all(|x| *x == 0.0) {
                return Err(Error::ZeroNeuron(Operand::Target(j)));
            }
        }
        let orthonormal = rows.iter().enumerate().all(|(a, ra)| {
            rows.iter().enumerate().all(|(b, rb)| {
                let d: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
                (d - if a == b { 1.0 } else { 0.0 }).abs() <= 1e-12
            })
        });
        Ok(TargetBasis {
            count: rows.len(),
            dim,
            vectors: rows.concat(),
            orthonormal,
        })
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_orthonormal(&self) -> bool {
        self.orthonormal
    }

    pub fn is_standard(&self) -> bool {
        self.count == self.dim && *self == TargetBasis::standard(self.dim)
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.vectors[j * self.dim..(j + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.vectors.chunks_exact(self.dim)
    }

    pub fn norms(&self) -> Vec<f64> {
        self.rows().map(norm).collect()
    }

    /// Same targets embedded in `R^{dim+m}` by zero padding.
    pub fn padded(&self, m: usize) -> TargetBasis {
        let dim = self.dim + m;
        let mut vectors = vec![0.0; self.count * dim];
        for (j, r) in self.rows().enumerate() {
            vectors[j * dim..j * dim + self.dim].copy_from_slice(r);
        }
        TargetBasis {
            count: self.count,
            dim,
            vectors,
            orthonormal: self.orthonormal,
        }
    }

    pub(crate) fn check_compatible(&self, w: &WeightPoint) -> Result<()> {
        if w.k() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "neurons in R^{} but targets in R^{}",
                w.k(),
                self.dim
            )));
        }
        Ok(())
    }
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn columns_are_neurons() {
        let w = WeightPoint::from_columns(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]).unwrap();
        assert_eq!((w.n(), w.k()), (3, 2));
        assert_eq!(w.row(1), &[2.0, 5.0]);
    }

    #[test]
    fn padding_keeps_norms() {
        let w = WeightPoint::from_rows(&[vec![3.0, 4.0]]).unwrap();
        let p = w.padded(2);
        assert_eq!(p.as_slice(), &[3.0, 4.0, 0.0, 0.0]);
        assert_eq!(p.neuron_norms(), vec![5.0]);
    }

    #[test]
    fn standard_basis_detected() {
        assert!(TargetBasis::standard(3).is_standard());
        let t = TargetBasis::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert!(t.is_orthonormal());
        assert!(!t.is_standard());
    }
}
