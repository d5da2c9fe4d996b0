//! Dense symmetric positive-definite factorization and solves.
//!
//! Covariance matrices built from densely sampled sources can be close to
//! singular, so factorization retries with escalating diagonal jitter
//! (1e-10 -> 1e-6, scaled by the mean diagonal) before giving up.

use crate::error::MathError;

/// Row-major square matrix of f64.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMat {
    n: usize,
    data: Vec<f64>,
}

impl SquareMat {
    pub fn zeros(n: usize) -> Self {
        SquareMat {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = SquareMat::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.data[i * n + j] = f(i, j);
            }
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.n + j] = value;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    fn mean_diagonal(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        (0..self.n).map(|i| self.get(i, i)).sum::<f64>() / self.n as f64
    }
}

/// Cholesky factorization handle; immutable after creation.
#[derive(Debug, Clone)]
pub struct PsdFactor {
    n: usize,
    /// Row-major lower-triangular factor (upper triangle zeroed).
    l: Vec<f64>,
    /// Diagonal jitter that was added to obtain the factorization.
    jitter: f64,
}

/// Factorize a symmetric positive-definite matrix as L L^T.
///
/// On a failed pivot the factorization is retried with additive diagonal
/// jitter of 1e-10, 1e-8 and 1e-6 times the mean diagonal; if all retries
/// fail the error carries the failing pivot index.
pub fn psd_factorize(m: &SquareMat) -> Result<PsdFactor, MathError> {
    let scale = m.mean_diagonal().abs().max(f64::MIN_POSITIVE);
    let mut last_pivot = 0;
    for level in [0.0, 1e-10, 1e-8, 1e-6] {
        let jitter = level * scale;
        match cholesky(m, jitter) {
            Ok(l) => {
                return Ok(PsdFactor {
                    n: m.n(),
                    l,
                    jitter,
                })
            }
            Err(pivot) => last_pivot = pivot,
        }
    }
    Err(MathError::NotPositiveDefinite {
        pivot: last_pivot,
        max_jitter: 1e-6 * scale,
    })
}

/// Row-wise Cholesky; returns the failing pivot index on breakdown.
fn cholesky(m: &SquareMat, jitter: f64) -> Result<Vec<f64>, usize> {
    let n = m.n();
    let mut l = m.data.clone();
    for i in 0..n {
        let (prev, rest) = l.split_at_mut(i * n);
        let row_i = &mut rest[..n];
        for j in 0..i {
            let row_j = &prev[j * n..j * n + j + 1];
            let s: f64 = row_i[..j].iter().zip(&row_j[..j]).map(|(a, b)| a * b).sum();
            row_i[j] = (row_i[j] - s) / row_j[j];
        }
        let s: f64 = row_i[..i].iter().map(|v| v * v).sum();
        let d = row_i[i] + jitter - s;
        // NaN-safe pivot check.
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(d > 0.0) {
            return Err(i);
        }
        row_i[i] = d.sqrt();
        for v in row_i[i + 1..n].iter_mut() {
            *v = 0.0;
        }
    }
    Ok(l)
}

impl PsdFactor {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Jitter that was added to the diagonal, 0.0 if none was needed.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// Row-major lower-triangular factor.
    pub fn lower(&self) -> &[f64] {
        &self.l
    }

    /// log |M| of the factorized (possibly jittered) matrix.
    pub fn log_det(&self) -> f64 {
        let n = self.n;
        (0..n).map(|i| 2.0 * self.l[i * n + i].ln()).sum()
    }

    /// Solve M x = b.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = self.solve_lower(b);
        self.solve_upper_in_place(&mut x);
        x
    }

    /// Solve L y = b (forward substitution).
    pub fn solve_lower(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let n = self.n;
        let mut y = vec![0.0; n];
        for i in 0..n {
            let row = &self.l[i * n..i * n + i];
            let s: f64 = row.iter().zip(&y[..i]).map(|(a, b)| a * b).sum();
            y[i] = (b[i] - s) / self.l[i * n + i];
        }
        y
    }

    /// Solve L^T x = y in place (back substitution, row access only).
    fn solve_upper_in_place(&self, y: &mut [f64]) {
        let n = self.n;
        for i in (0..n).rev() {
            y[i] /= self.l[i * n + i];
            let xi = y[i];
            let row = &self.l[i * n..i * n + i];
            for (k, lik) in row.iter().enumerate() {
                y[k] -= lik * xi;
            }
        }
    }

    /// Diagonal of M^{-1}, via squared column norms of L^{-1}.
    pub fn diag_inverse(&self) -> Vec<f64> {
        let n = self.n;
        let mut diag = vec![0.0; n];
        let mut w = vec![0.0; n];
        for c in 0..n {
            w[c] = 1.0 / self.l[c * n + c];
            let mut acc = w[c] * w[c];
            for k in c + 1..n {
                let row = &self.l[k * n + c..k * n + k];
                let s: f64 = row.iter().zip(&w[c..k]).map(|(a, b)| a * b).sum();
                w[k] = -s / self.l[k * n + k];
                acc += w[k] * w[k];
            }
            diag[c] = acc;
        }
        diag
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mathkit::rng::Rng64;

    fn identity(n: usize) -> SquareMat {
        SquareMat::from_fn(n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    fn random_pd(n: usize, seed: u64) -> SquareMat {
        // A A^T + n I is comfortably positive definite.
        let mut rng = Rng64::new(seed);
        let a: Vec<f64> = (0..n * n).map(|_| rng.normal()).collect();
        SquareMat::from_fn(n, |i, j| {
            let dot: f64 = (0..n).map(|k| a[i * n + k] * a[j * n + k]).sum();
            dot + if i == j { n as f64 } else { 0.0 }
        })
    }

    #[test]
    fn identity_solve_is_identity() {
        let f = psd_factorize(&identity(3)).unwrap();
        let x = f.solve(&[1.0, 2.0, 3.0]);
        assert_eq!(x, vec![1.0, 2.0, 3.0]);
        assert_eq!(f.log_det(), 0.0);
        assert_eq!(f.jitter(), 0.0);
    }

    #[test]
    fn diagonal_log_det() {
        let m = SquareMat::from_fn(2, |i, j| if i == j { 2.0 } else { 0.0 });
        let f = psd_factorize(&m).unwrap();
        assert!((f.log_det() - 2.0 * 2.0f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn random_pd_reconstructs_from_factor() {
        let m = random_pd(5, 42);
        let f = psd_factorize(&m).unwrap();
        let n = 5;
        let mut err2 = 0.0;
        let mut norm2 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let rec: f64 = (0..n).map(|k| f.lower()[i * n + k] * f.lower()[j * n + k]).sum();
                err2 += (rec - m.get(i, j)).powi(2);
                norm2 += m.get(i, j).powi(2);
            }
        }
        assert!((err2 / norm2).sqrt() < 1e-10);
    }

    #[test]
    fn solve_residual_is_small() {
        let m = random_pd(20, 7);
        let f = psd_factorize(&m).unwrap();
        let b: Vec<f64> = (0..20).map(|i| (i as f64).sin() + 2.0).collect();
        let x = f.solve(&b);
        let b_inf = b.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        for i in 0..20 {
            let mi_x: f64 = (0..20).map(|j| m.get(i, j) * x[j]).sum();
            assert!((mi_x - b[i]).abs() <= 1e-8 * b_inf);
        }
    }

    #[test]
    fn indefinite_matrix_fails_with_pivot_index() {
        let m = SquareMat::from_fn(2, |i, j| if i == j { 1.0 } else { 2.0 });
        match psd_factorize(&m) {
            Err(MathError::NotPositiveDefinite { pivot, .. }) => assert_eq!(pivot, 1),
            other => panic!("expected NotPositiveDefinite, got {other:?}"),
        }
    }

    #[test]
    fn near_singular_matrix_is_rescued_by_jitter() {
        // Rank-one Gram matrix: singular but PSD, so jitter fixes it.
        let m = SquareMat::from_fn(3, |_, _| 1.0);
        let f = psd_factorize(&m).unwrap();
        assert!(f.jitter() > 0.0);
    }

    #[test]
    fn diag_inverse_matches_explicit_solves() {
        let m = random_pd(8, 11);
        let f = psd_factorize(&m).unwrap();
        let diag = f.diag_inverse();
        for i in 0..8 {
            let mut e = vec![0.0; 8];
            e[i] = 1.0;
            let col = f.solve(&e);
            assert!((diag[i] - col[i]).abs() < 1e-11 * diag[i].abs().max(1.0));
        }
    }
}
