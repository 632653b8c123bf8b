//! Dense Cholesky factorization and triangular solves.
//!
//! Matrices are square, row-major `Vec<f64>`. Only what the scoring path
//! needs is here: factor `A + shift·I`, then evaluate quadratic forms
//! `vᵀ (A + shift·I)⁻¹ v` as `‖L⁻¹ v‖²` by forward substitution.

use alloc::vec;
use alloc::vec::Vec;

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Lower-triangular factor `L` with `L Lᵀ = A + shift·I`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cholesky {
    dim: usize,
    lower: Vec<f64>,
}

impl Cholesky {
    /// Factors `a + shift·I`. Returns `None` if any pivot is not positive
    /// beyond the rounding floor `dim · ε_mach · max_diag`.
    pub fn factor(a: &[f64], dim: usize, shift: f64) -> Option<Self> {
        assert_eq!(a.len(), dim * dim, "matrix storage does not match dimension");
        let max_diag = (0..dim)
            .map(|i| a[i * dim + i] + shift)
            .fold(0.0_f64, f64::max);
        let floor = max_diag * dim as f64 * f64::EPSILON;

        let mut lower = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in 0..=i {
                let (row_i, row_j) = if i == j {
                    let r = &lower[i * dim..i * dim + j];
                    (r, r)
                } else {
                    (&lower[i * dim..i * dim + j], &lower[j * dim..j * dim + j])
                };
                let s = dot(row_i, row_j);
                if i == j {
                    let pivot = a[i * dim + i] + shift - s;
                    if !pivot.is_finite() || pivot <= floor {
                        return None;
                    }
                    lower[i * dim + i] = libm::sqrt(pivot);
                } else {
                    lower[i * dim + j] = (a[i * dim + j] - s) / lower[j * dim + j];
                }
            }
        }
        Some(Cholesky { dim, lower })
    }

    /// Rebuilds a factor from stored row-major lower-triangular entries.
    pub fn from_lower(lower: Vec<f64>, dim: usize) -> Option<Self> {
        if lower.len() != dim * dim {
            return None;
        }
        Some(Cholesky { dim, lower })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    /// In-place forward substitution: `b ← L⁻¹ b`.
    pub fn solve_lower_in_place(&self, b: &mut [f64]) {
        let d = self.dim;
        debug_assert_eq!(b.len(), d);
        for i in 0..d {
            let row = &self.lower[i * d..i * d + i];
            let s = dot(row, &b[..i]);
            b[i] = (b[i] - s) / self.lower[i * d + i];
        }
    }

    /// In-place back substitution: `b ← L⁻ᵀ b`.
    pub fn solve_upper_in_place(&self, b: &mut [f64]) {
        let d = self.dim;
        debug_assert_eq!(b.len(), d);
        for i in (0..d).rev() {
            let mut s = b[i];
            for (k, bk) in b.iter().enumerate().skip(i + 1) {
                s -= self.lower[k * d + i] * bk;
            }
            b[i] = s / self.lower[i * d + i];
        }
    }

    /// `vᵀ (L Lᵀ)⁻¹ v`, consuming `v` as scratch.
    pub fn quadratic_form(&self, mut v: Vec<f64>) -> f64 {
        self.solve_lower_in_place(&mut v);
        v.iter().map(|x| x * x).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_factors_to_identity() {
        let eye = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
        let c = Cholesky::factor(&eye, 3, 0.0).unwrap();
        assert_eq!(c.lower(), &eye);
    }

    #[test]
    fn known_factor() {
        // [[4, 2], [2, 10]] = [[2, 0], [1, 3]] · [[2, 1], [0, 3]]
        let a = [4.0, 2.0, 2.0, 10.0];
        let c = Cholesky::factor(&a, 2, 0.0).unwrap();
        assert_eq!(c.lower(), &[2.0, 0.0, 1.0, 3.0]);
        // solve (LLᵀ) x = b via both substitutions
        let mut b = [8.0, 14.0];
        c.solve_lower_in_place(&mut b);
        c.solve_upper_in_place(&mut b);
        let x = b;
        assert!((4.0 * x[0] + 2.0 * x[1] - 8.0).abs() < 1e-12);
        assert!((2.0 * x[0] + 10.0 * x[1] - 14.0).abs() < 1e-12);
    }

    #[test]
    fn rank_deficient_rejected_without_shift() {
        // outer product of (1, 2, 3)
        let u = [1.0, 2.0, 3.0];
        let a: Vec<f64> = (0..9).map(|k| u[k / 3] * u[k % 3]).collect();
        assert!(Cholesky::factor(&a, 3, 0.0).is_none());
        assert!(Cholesky::factor(&a, 3, 1e-6).is_some());
    }

    #[test]
    fn zero_matrix_rejected() {
        assert!(Cholesky::factor(&[0.0; 4], 2, 0.0).is_none());
    }

    #[test]
    fn quadratic_form_diagonal() {
        let a = [2.0, 0.0, 0.0, 8.0];
        let c = Cholesky::factor(&a, 2, 0.0).unwrap();
        assert!((c.quadratic_form(vec![2.0, 4.0]) - 4.0).abs() < 1e-14);
    }
}
