//! Small dense linear algebra for `d ≤ 50` problems.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub fn dot<F: Scalar>(a: &[F], b: &[F]) -> F {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(F::zero(), |acc, (&x, &y)| acc + x * y)
}

pub fn norm<F: Scalar>(a: &[F]) -> F {
    dot(a, a).sqrt()
}

/// `y += alpha * x`
pub fn axpy<F: Scalar>(alpha: F, x: &[F], y: &mut [F]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scale<F: Scalar>(alpha: F, x: &mut [F]) {
    for xi in x.iter_mut() {
        *xi *= alpha;
    }
}

pub fn all_finite<F: Scalar>(x: &[F]) -> bool {
    x.iter().all(|v| v.is_finite())
}

/// Dense square matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix<F> {
    n: usize,
    data: Vec<F>,
}

impl<F: Scalar> SymMatrix<F> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![F::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = F::one();
        }
        m
    }

    /// `x xᵀ`, exactly symmetric.
    pub fn outer(x: &[F]) -> Self {
        let n = x.len();
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in i..n {
                let v = x[i] * x[j];
                m.data[i * n + j] = v;
                m.data[j * n + i] = v;
            }
        }
        m
    }

    /// Builds from rows, checking squareness and symmetry to `rel_tol`
    /// relative to the largest absolute entry. The lower triangle is
    /// overwritten with the upper one so the result is bitwise symmetric.
    pub fn from_rows(rows: &[Vec<F>], rel_tol: F) -> Result<Self> {
        let n = rows.len();
        for r in rows {
            if r.len() != n {
                return Err(Error::NotSquare {
                    rows: n,
                    cols: r.len(),
                });
            }
        }
        let mut data = Vec::with_capacity(n * n);
        for r in rows {
            data.extend_from_slice(r);
        }
        let mut m = Self { n, data };
        if !all_finite(&m.data) {
            return Err(Error::NonFinite("matrix"));
        }
        let scale = m.max_abs().max(F::min_positive_value());
        for i in 0..n {
            for j in (i + 1)..n {
                let (a, b) = (m.get(i, j), m.get(j, i));
                if (a - b).abs() > rel_tol * scale {
                    return Err(Error::NotSymmetric { row: i, col: j });
                }
                m.data[j * n + i] = a;
            }
        }
        Ok(m)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> F {
        self.data[i * self.n + j]
    }

    /// Sets `(i,j)` and `(j,i)` together.
    #[inline]
    pub fn set_sym(&mut self, i: usize, j: usize, v: F) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    pub fn as_slice(&self) -> &[F] {
        &self.data
    }

    pub fn rows(&self) -> Vec<Vec<F>> {
        self.data.chunks(self.n.max(1)).map(<[F]>::to_vec).collect()
    }

    pub fn max_abs(&self) -> F {
        self.data
            .iter()
            .fold(F::zero(), |acc, v| acc.max(v.abs()))
    }

    pub fn is_exactly_symmetric(&self) -> bool {
        (0..self.n).all(|i| (i + 1..self.n).all(|j| self.get(i, j) == self.get(j, i)))
    }

    pub fn add_assign(&mut self, other: &Self) {
        debug_assert_eq!(self.n, other.n);
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    /// Adds `shift` to every diagonal entry.
    pub fn shift_diagonal(&mut self, shift: F) {
        for i in 0..self.n {
            self.data[i * self.n + i] += shift;
        }
    }

    pub fn mul_vec(&self, x: &[F]) -> Vec<F> {
        self.data.chunks(self.n).map(|row| dot(row, x)).collect()
    }

    /// Lower Cholesky factor, or `None` if a pivot is not strictly positive.
    pub fn cholesky(&self) -> Option<Cholesky<F>> {
        let n = self.n;
        let mut l = vec![F::zero(); n * n];
        for j in 0..n {
            let mut diag = self.get(j, j);
            for k in 0..j {
                diag -= l[j * n + k] * l[j * n + k];
            }
            if !(diag > F::zero()) || !diag.is_finite() {
                return None;
            }
            let ljj = diag.sqrt();
            l[j * n + j] = ljj;
            for i in (j + 1)..n {
                let mut s = self.get(i, j);
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / ljj;
            }
        }
        Some(Cholesky { n, l })
    }
}

/// Lower-triangular factor `L` with `A = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky<F> {
    n: usize,
    l: Vec<F>,
}

impl<F: Scalar> Cholesky<F> {
    pub fn solve(&self, b: &[F]) -> Vec<F> {
        let n = self.n;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.l[i * n + k] * y[k];
            }
            y[i] = s / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= self.l[k * n + i] * y[k];
            }
            y[i] = s / self.l[i * n + i];
        }
        y
    }
}

/// Neumaier-compensated running sum of a vector.
#[derive(Debug, Clone, PartialEq)]
pub struct CompensatedVec<F> {
    sum: Vec<F>,
    comp: Vec<F>,
}

impl<F: Scalar> CompensatedVec<F> {
    pub fn zeros(n: usize) -> Self {
        Self {
            sum: vec![F::zero(); n],
            comp: vec![F::zero(); n],
        }
    }

    pub fn len(&self) -> usize {
        self.sum.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sum.is_empty()
    }

    pub fn add(&mut self, x: &[F]) {
        for ((s, c), &v) in self.sum.iter_mut().zip(self.comp.iter_mut()).zip(x) {
            neumaier(s, c, v);
        }
    }

    pub fn add_at(&mut self, i: usize, v: F) {
        neumaier(&mut self.sum[i], &mut self.comp[i], v);
    }

    pub fn value_at(&self, i: usize) -> F {
        self.sum[i] + self.comp[i]
    }

    pub fn value(&self) -> Vec<F> {
        self.sum
            .iter()
            .zip(&self.comp)
            .map(|(&s, &c)| s + c)
            .collect()
    }
}

#[inline]
fn neumaier<F: Scalar>(sum: &mut F, comp: &mut F, v: F) {
    let t = *sum + v;
    if sum.abs() >= v.abs() {
        *comp += (*sum - t) + v;
    } else {
        *comp += (v - t) + *sum;
    }
    *sum = t;
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn cholesky_solves_spd_system() {
        let a = SymMatrix::from_rows(
            &[
                vec![4.0, 1.0, 0.5],
                vec![1.0, 3.0, 0.2],
                vec![0.5, 0.2, 2.0],
            ],
            1e-12,
        )
        .unwrap();
        let x = vec![1.0, -2.0, 0.5];
        let b = a.mul_vec(&x);
        let sol = a.cholesky().unwrap().solve(&b);
        for (s, e) in sol.iter().zip(&x) {
            assert_relative_eq!(s, e, epsilon = 1e-12);
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = SymMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]], 1e-12).unwrap();
        assert!(a.cholesky().is_none());
    }

    #[test]
    fn from_rows_checks_shape_and_symmetry() {
        assert!(matches!(
            SymMatrix::from_rows(&[vec![1.0, 2.0]], 1e-12),
            Err(Error::NotSquare { .. })
        ));
        assert!(matches!(
            SymMatrix::from_rows(&[vec![1.0, 2.0], vec![2.1, 1.0]], 1e-12),
            Err(Error::NotSymmetric { row: 0, col: 1 })
        ));
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut acc = CompensatedVec::zeros(1);
        acc.add(&[1e16]);
        for _ in 0..10 {
            acc.add(&[1.0]);
        }
        acc.add(&[-1e16]);
        assert_eq!(acc.value()[0], 10.0);
    }
}
