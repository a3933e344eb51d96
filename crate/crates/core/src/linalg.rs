//! Small dense linear algebra on row-major `Vec<f64>` matrices.

use alloc::vec;
use alloc::vec::Vec;

/// In-place Cholesky factorization of a symmetric positive definite `n x n`
/// matrix; on success the lower triangle holds `L` with `A = L L^T` (the
/// strict upper triangle is zeroed). Returns the failing pivot on error.
pub fn cholesky_in_place(a: &mut [f64], n: usize) -> Result<(), usize> {
    debug_assert_eq!(a.len(), n * n);
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(j);
        }
        let d = libm::sqrt(d);
        a[j * n + j] = d;
        for i in (j + 1)..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / d;
        }
        for i in 0..j {
            a[i * n + j] = 0.0;
        }
    }
    Ok(())
}

/// Solve `L L^T x = b` in place given the factor from [`cholesky_in_place`].
pub fn cholesky_solve(l: &[f64], n: usize, b: &mut [f64]) {
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in (i + 1)..n {
            s -= l[k * n + i] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
}

/// `ln det A` from its Cholesky factor.
pub fn cholesky_log_det(l: &[f64], n: usize) -> f64 {
    (0..n).map(|i| 2.0 * libm::log(l[i * n + i])).sum()
}

/// Outcome of a diagonally pivoted Cholesky factorization.
#[derive(Debug, Clone)]
pub struct PivotedCholesky {
    pub n: usize,
    /// `perm[k]` is the original index of the k-th pivoted column.
    pub perm: Vec<usize>,
    pub rank: usize,
    /// Lower-triangular factor of the permuted matrix (first `rank` columns).
    pub l: Vec<f64>,
}

impl PivotedCholesky {
    /// Original indices of the columns left out of the factor.
    pub fn deficient_columns(&self) -> &[usize] {
        &self.perm[self.rank..]
    }

    /// Solve `A x = b` for a full-rank factorization.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        debug_assert_eq!(self.rank, n);
        let mut y: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        cholesky_solve(&self.l, n, &mut y);
        let mut x = vec![0.0; n];
        for (k, &p) in self.perm.iter().enumerate() {
            x[p] = y[k];
        }
        x
    }
}

/// Cholesky factorization with symmetric diagonal pivoting. Stops once the
/// largest remaining diagonal falls below `tol * max_initial_diagonal`.
pub fn pivoted_cholesky(a: &[f64], n: usize, tol: f64) -> PivotedCholesky {
    let mut m = a.to_vec();
    let mut perm: Vec<usize> = (0..n).collect();
    let max_diag = (0..n).map(|i| a[i * n + i]).fold(0.0f64, f64::max);
    let threshold = tol * max_diag.max(f64::MIN_POSITIVE);
    let mut rank = 0;
    for j in 0..n {
        // Choose the largest remaining Schur-complement diagonal.
        let mut best = j;
        let mut best_val = f64::NEG_INFINITY;
        for i in j..n {
            let mut d = m[i * n + i];
            for k in 0..j {
                d -= m[i * n + k] * m[i * n + k];
            }
            if d > best_val {
                best_val = d;
                best = i;
            }
        }
        if !(best_val > threshold) {
            break;
        }
        if best != j {
            swap_sym(&mut m, n, j, best);
            perm.swap(j, best);
        }
        let d = libm::sqrt(best_val);
        m[j * n + j] = d;
        for i in (j + 1)..n {
            let mut s = m[i * n + j];
            for k in 0..j {
                s -= m[i * n + k] * m[j * n + k];
            }
            m[i * n + j] = s / d;
        }
        rank += 1;
    }
    for i in 0..n {
        for j in (i + 1)..n {
            m[i * n + j] = 0.0;
        }
    }
    PivotedCholesky {
        n,
        perm,
        rank,
        l: m,
    }
}

// Symmetric row+column swap of a full square matrix.
fn swap_sym(m: &mut [f64], n: usize, a: usize, b: usize) {
    for k in 0..n {
        m.swap(a * n + k, b * n + k);
    }
    for k in 0..n {
        m.swap(k * n + a, k * n + b);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_solves_spd_system() {
        let a = [4.0, 2.0, 0.6, 2.0, 5.0, 1.0, 0.6, 1.0, 3.0];
        let mut l = a.to_vec();
        cholesky_in_place(&mut l, 3).unwrap();
        let mut x = vec![1.0, 2.0, 3.0];
        cholesky_solve(&l, 3, &mut x);
        for i in 0..3 {
            let r: f64 = (0..3).map(|j| a[i * 3 + j] * x[j]).sum();
            assert!((r - (i as f64 + 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn pivoted_detects_dependent_column() {
        // Column 2 = column 0 + column 1 in a Gram matrix.
        let x = [[1.0, 0.0, 1.0], [0.0, 1.0, 1.0], [1.0, 1.0, 2.0], [2.0, 1.0, 3.0]];
        let mut g = vec![0.0; 9];
        for row in &x {
            for i in 0..3 {
                for j in 0..3 {
                    g[i * 3 + j] += row[i] * row[j];
                }
            }
        }
        let f = pivoted_cholesky(&g, 3, 1e-10);
        assert_eq!(f.rank, 2);
        assert_eq!(f.deficient_columns().len(), 1);
    }

    #[test]
    fn pivoted_full_rank_solve_matches() {
        let a = [4.0, 2.0, 0.6, 2.0, 5.0, 1.0, 0.6, 1.0, 3.0];
        let f = pivoted_cholesky(&a, 3, 1e-12);
        assert_eq!(f.rank, 3);
        let x = f.solve(&[1.0, 2.0, 3.0]);
        for i in 0..3 {
            let r: f64 = (0..3).map(|j| a[i * 3 + j] * x[j]).sum();
            assert!((r - (i as f64 + 1.0)).abs() < 1e-12);
        }
    }
}
