//! Banded direct factorisations.
//!
//! Inpainting systems on row-major grids are banded (bandwidth = image width
//! for the Laplacian, twice that for the biharmonic operator), so an LU
//! factorisation in band storage solves them exactly in O(n·b²) time and
//! O(n·b) memory. The LU variant uses partial pivoting and follows the
//! classic LAPACK `gbtrf`/`gbtrs` layout; the Cholesky variant handles the
//! symmetric positive definite reduced systems of the linear operators at
//! half the cost.

use crate::error::{Error, Result};
use crate::operators::SparseOperator;

/// LU factorisation of a banded matrix with partial pivoting.
pub struct BandLu {
    n: usize,
    kl: usize,
    ku: usize,
    /// Column-major band storage with `2*kl + ku + 1` rows per column; the
    /// extra `kl` rows hold fill-in above the original band.
    ab: Vec<f64>,
    ldab: usize,
    ipiv: Vec<usize>,
}

impl BandLu {
    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i + self.ku + self.kl >= j && i <= j + self.kl);
        j * self.ldab + (self.kl + self.ku + i - j)
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> f64 {
        self.ab[self.idx(i, j)]
    }

    /// Factors the sparse matrix; `kl`/`ku` are taken from its bandwidth.
    pub fn factor(matrix: &SparseOperator) -> Result<Self> {
        let n = matrix.dimension();
        let bw = matrix.bandwidth();
        let (kl, ku) = (bw, bw);
        let ldab = 2 * kl + ku + 1;
        let mut lu = BandLu { n, kl, ku, ab: vec![0.0; ldab * n], ldab, ipiv: vec![0; n] };
        for (i, j, v) in matrix.entries() {
            let pos = lu.idx(i, j);
            lu.ab[pos] = v;
        }
        lu.factor_in_place()?;
        Ok(lu)
    }

    fn factor_in_place(&mut self) -> Result<()> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        let kv = kl + ku; // width of the factored upper band
        let mut ju = 0usize;
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            // Partial pivot within column j.
            let mut jp = 0usize;
            let mut best = self.get(j, j).abs();
            for i in 1..=km {
                let v = self.get(j + i, j).abs();
                if v > best {
                    best = v;
                    jp = i;
                }
            }
            self.ipiv[j] = j + jp;
            if best == 0.0 {
                return Err(Error::Numerical(format!("singular system: zero pivot at column {}", j)));
            }
            ju = ju.max((j + jp + ku).min(n - 1));
            if jp != 0 {
                for col in j..=ju {
                    let a = self.idx(j + jp, col);
                    let b = self.idx(j, col);
                    self.ab.swap(a, b);
                }
            }
            if km > 0 {
                let inv = 1.0 / self.get(j, j);
                for i in 1..=km {
                    let pos = self.idx(j + i, j);
                    self.ab[pos] *= inv;
                }
                for col in (j + 1)..=ju {
                    let ujc = self.get(j, col);
                    if ujc != 0.0 {
                        for i in 1..=km {
                            let l = self.get(j + i, j);
                            let pos = self.idx(j + i, col);
                            self.ab[pos] -= l * ujc;
                        }
                    }
                }
            }
            let _ = kv;
        }
        Ok(())
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let kv = self.kl + self.ku;
        let mut x = b.to_vec();
        // Forward: apply L^-1 with the recorded row swaps.
        for j in 0..n {
            let jp = self.ipiv[j];
            if jp != j {
                x.swap(jp, j);
            }
            let km = self.kl.min(n - 1 - j);
            let xj = x[j];
            if xj != 0.0 {
                for i in 1..=km {
                    x[j + i] -= self.get(j + i, j) * xj;
                }
            }
        }
        // Backward: U x = y.
        for j in (0..n).rev() {
            x[j] /= self.get(j, j);
            let xj = x[j];
            if xj != 0.0 {
                let lo = j.saturating_sub(kv);
                for i in lo..j {
                    x[i] -= self.get(i, j) * xj;
                }
            }
        }
        x
    }

    /// Solves `Aᵀ x = b`.
    pub fn solve_transposed(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let kv = self.kl + self.ku;
        let mut x = b.to_vec();
        // Uᵀ y = b (forward).
        for j in 0..n {
            let lo = j.saturating_sub(kv);
            let mut sum = x[j];
            for i in lo..j {
                sum -= self.get(i, j) * x[i];
            }
            x[j] = sum / self.get(j, j);
        }
        // Lᵀ z = y (backward), undoing row swaps in reverse.
        for j in (0..n).rev() {
            let km = self.kl.min(n - 1 - j);
            let mut sum = x[j];
            for i in 1..=km {
                sum -= self.get(j + i, j) * x[j + i];
            }
            x[j] = sum;
            let jp = self.ipiv[j];
            if jp != j {
                x.swap(jp, j);
            }
        }
        x
    }
}

/// Cholesky factorisation `S = L Lᵀ` of a banded symmetric positive definite
/// matrix, lower band storage.
pub struct BandCholesky {
    n: usize,
    bw: usize,
    /// Column-major: `l[j * (bw + 1) + (i - j)]` holds L(i, j) for i in j..=j+bw.
    l: Vec<f64>,
}

pub struct NotSpd;

impl BandCholesky {
    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i >= j && i - j <= self.bw);
        j * (self.bw + 1) + (i - j)
    }

    /// Factors a matrix given by per-row sparse entries (only the lower
    /// triangle is read). Returns `Err(NotSpd)` on a nonpositive pivot.
    pub fn factor(n: usize, bw: usize, entry_rows: &[Vec<(usize, f64)>]) -> std::result::Result<Self, NotSpd> {
        let mut chol = BandCholesky { n, bw, l: vec![0.0; (bw + 1) * n] };
        for (i, row) in entry_rows.iter().enumerate() {
            for &(j, v) in row {
                if j <= i {
                    let pos = chol.idx(i, j);
                    chol.l[pos] = v;
                }
            }
        }
        for j in 0..n {
            let lo = j.saturating_sub(bw);
            let mut diag = chol.l[chol.idx(j, j)];
            for k in lo..j {
                let ljk = chol.l[chol.idx(j, k)];
                diag -= ljk * ljk;
            }
            if diag <= 0.0 || !diag.is_finite() {
                return Err(NotSpd);
            }
            let ljj = diag.sqrt();
            let jj = chol.idx(j, j);
            chol.l[jj] = ljj;
            let hi = (j + bw).min(n - 1);
            for i in (j + 1)..=hi {
                let mut sum = chol.l[chol.idx(i, j)];
                let lo_i = i.saturating_sub(bw);
                for k in lo_i.max(lo)..j {
                    sum -= chol.l[chol.idx(i, k)] * chol.l[chol.idx(j, k)];
                }
                let pos = chol.idx(i, j);
                chol.l[pos] = sum / ljj;
            }
        }
        Ok(chol)
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x = b.to_vec();
        // L y = b.
        for j in 0..n {
            let lo = j.saturating_sub(self.bw);
            let mut sum = x[j];
            for k in lo..j {
                sum -= self.l[self.idx(j, k)] * x[k];
            }
            x[j] = sum / self.l[self.idx(j, j)];
        }
        // Lᵀ x = y.
        for j in (0..n).rev() {
            let hi = (j + self.bw).min(n - 1);
            let mut sum = x[j];
            for i in (j + 1)..=hi {
                sum -= self.l[self.idx(i, j)] * x[i];
            }
            x[j] = sum / self.l[self.idx(j, j)];
        }
        x
    }
}
