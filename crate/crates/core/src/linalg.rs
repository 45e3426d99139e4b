//! Small dense symmetric matrices (row-major `n x n`) and a banded SPD solver.
//!
//! Matrices here are tiny (SPD targets are 2x2 or 3x3) so everything is
//! plain slices; the banded Cholesky factor backs the descent preconditioner.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns `(values, vectors)` where column `k` of `vectors` (row-major) is
/// the unit eigenvector for `values[k]`.
pub fn sym_eigen<T: Real>(a: &[T], n: usize) -> (Vec<T>, Vec<T>) {
    debug_assert_eq!(a.len(), n * n);
    let mut m: Vec<T> = a.to_vec();
    // enforce exact symmetry before rotating
    for i in 0..n {
        for j in (i + 1)..n {
            let s = (m[i * n + j] + m[j * n + i]) * T::lit(0.5);
            m[i * n + j] = s;
            m[j * n + i] = s;
        }
    }
    let mut v = vec![T::zero(); n * n];
    for i in 0..n {
        v[i * n + i] = T::one();
    }
    let scale: T = m.iter().map(|&x| x * x).sum::<T>();
    if scale == T::zero() {
        return (vec![T::zero(); n], v);
    }
    let tiny = T::epsilon() * T::epsilon() * scale;
    for _sweep in 0..64 {
        let mut off = T::zero();
        for i in 0..n {
            for j in (i + 1)..n {
                off = off + m[i * n + j] * m[i * n + j];
            }
        }
        if off <= tiny {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq == T::zero() {
                    continue;
                }
                let theta = (m[q * n + q] - m[p * n + p]) / (T::lit(2.0) * apq);
                let t = if theta.abs() > T::lit(1e60) {
                    T::one() / (T::lit(2.0) * theta)
                } else {
                    let sgn = if theta >= T::zero() { T::one() } else { -T::one() };
                    sgn / (theta.abs() + (theta * theta + T::one()).sqrt())
                };
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = m[k * n + p];
                    let akq = m[k * n + q];
                    m[k * n + p] = c * akp - s * akq;
                    m[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[p * n + k];
                    let aqk = m[q * n + k];
                    m[p * n + k] = c * apk - s * aqk;
                    m[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let values = (0..n).map(|i| m[i * n + i]).collect();
    (values, v)
}

/// Applies a scalar function spectrally: `V diag(f(values)) V^T`.
pub fn sym_fn<T: Real>(a: &[T], n: usize, f: impl Fn(T) -> T) -> Vec<T> {
    let (vals, vecs) = sym_eigen(a, n);
    let fv: Vec<T> = vals.into_iter().map(f).collect();
    let mut out = vec![T::zero(); n * n];
    for i in 0..n {
        for j in i..n {
            let mut s = T::zero();
            for k in 0..n {
                s = s + vecs[i * n + k] * fv[k] * vecs[j * n + k];
            }
            out[i * n + j] = s;
            out[j * n + i] = s;
        }
    }
    out
}

pub fn matmul<T: Real>(a: &[T], b: &[T], n: usize) -> Vec<T> {
    let mut out = vec![T::zero(); n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            for j in 0..n {
                out[i * n + j] = out[i * n + j] + aik * b[k * n + j];
            }
        }
    }
    out
}

/// `a b a` for symmetric `a`, symmetrized to remove rounding asymmetry.
pub fn sandwich<T: Real>(a: &[T], b: &[T], n: usize) -> Vec<T> {
    let mut out = matmul(&matmul(a, b, n), a, n);
    symmetrize(&mut out, n);
    out
}

pub fn symmetrize<T: Real>(a: &mut [T], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            let s = (a[i * n + j] + a[j * n + i]) * T::lit(0.5);
            a[i * n + j] = s;
            a[j * n + i] = s;
        }
    }
}

pub fn trace<T: Real>(a: &[T], n: usize) -> T {
    (0..n).map(|i| a[i * n + i]).sum()
}

/// Symmetric positive definite matrix with lower half-bandwidth `bw`,
/// factorized in place by Cholesky.
#[derive(Clone, Debug)]
pub struct BandedSpd<T> {
    size: usize,
    bw: usize,
    // row i holds entries (i, i - k) for k = 0..=bw at i * (bw + 1) + k
    band: Vec<T>,
    factored: bool,
}

impl<T: Real> BandedSpd<T> {
    pub fn zeros(size: usize, bw: usize) -> Self {
        Self { size, bw, band: vec![T::zero(); size * (bw + 1)], factored: false }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bw);
        i * (self.bw + 1) + (i - j)
    }

    /// Adds `v` to entry `(i, j)` (and implicitly `(j, i)`).
    pub fn add(&mut self, i: usize, j: usize, v: T) {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        assert!(r - c <= self.bw, "entry ({i},{j}) outside band {}", self.bw);
        let k = self.idx(r, c);
        self.band[k] = self.band[k] + v;
    }

    pub fn factor(&mut self) -> Result<()> {
        let n = self.size;
        for i in 0..n {
            let j0 = i.saturating_sub(self.bw);
            for j in j0..=i {
                let mut s = self.band[self.idx(i, j)];
                let k0 = j0.max(j.saturating_sub(self.bw));
                for k in k0..j {
                    s = s - self.band[self.idx(i, k)] * self.band[self.idx(j, k)];
                }
                if i == j {
                    if !(s > T::zero()) {
                        return Err(Error::Domain(format!("banded matrix not positive definite at pivot {i}")));
                    }
                    let k = self.idx(i, i);
                    self.band[k] = s.sqrt();
                } else {
                    let k = self.idx(i, j);
                    self.band[k] = s / self.band[self.idx(j, j)];
                }
            }
        }
        self.factored = true;
        Ok(())
    }

    /// Solves `A x = b` in place. Requires a prior successful [`factor`](Self::factor).
    pub fn solve_in_place(&self, b: &mut [T]) {
        assert!(self.factored, "solve before factor");
        let n = self.size;
        for i in 0..n {
            let mut s = b[i];
            for k in i.saturating_sub(self.bw)..i {
                s = s - self.band[self.idx(i, k)] * b[k];
            }
            b[i] = s / self.band[self.idx(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in (i + 1)..n.min(i + self.bw + 1) {
                s = s - self.band[self.idx(k, i)] * b[k];
            }
            b[i] = s / self.band[self.idx(i, i)];
        }
    }
}
