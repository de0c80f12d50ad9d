//! Small dense exact-arithmetic kernels: fraction-free determinant and
//! Gaussian elimination. Sizes here never exceed a dozen rows.

use crate::scalar::Scalar;

/// Determinant by Bareiss fraction-free elimination with row pivoting.
///
/// Every division `(a*d - b*c) / prev` is exact over an integral domain, so
/// over rationals the intermediate entries stay at the size of minors of
/// the input rather than growing like products of fractions.
pub fn det_bareiss<S: Scalar>(matrix: &[Vec<S>]) -> S {
    let n = matrix.len();
    if n == 0 {
        return S::one();
    }
    let mut a: Vec<Vec<S>> = matrix.to_vec();
    let mut sign = S::one();
    let mut prev = S::one();
    for k in 0..n - 1 {
        if a[k][k].is_zero() {
            match (k + 1..n).find(|&r| !a[r][k].is_zero()) {
                Some(r) => {
                    a.swap(k, r);
                    sign = -sign;
                }
                None => return S::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = (a[i][j].clone() * a[k][k].clone() - a[i][k].clone() * a[k][j].clone())
                    / prev.clone();
                a[i][j] = v;
            }
        }
        prev = a[k][k].clone();
    }
    sign * a[n - 1][n - 1].clone()
}

/// Solves `A x = b` by Gaussian elimination. Returns `None` when `A` is
/// singular.
pub fn solve<S: Scalar>(matrix: &[Vec<S>], rhs: &[S]) -> Option<Vec<S>> {
    let n = matrix.len();
    let mut a: Vec<Vec<S>> = matrix
        .iter()
        .zip(rhs)
        .map(|(row, b)| {
            let mut r = row.clone();
            r.push(b.clone());
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        let inv = S::one() / a[col][col].clone();
        for j in col..=n {
            a[col][j] = a[col][j].clone() * inv.clone();
        }
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let factor = a[r][col].clone();
                for j in col..=n {
                    let v = a[r][j].clone() - factor.clone() * a[col][j].clone();
                    a[r][j] = v;
                }
            }
        }
    }
    Some(a.into_iter().map(|mut row| row.pop().unwrap_or_else(S::zero)).collect())
}

/// Cofactor-expansion determinant; exponential, used only as a test oracle.
#[cfg(test)]
pub(crate) fn det_laplace<S: Scalar>(matrix: &[Vec<S>]) -> S {
    let n = matrix.len();
    if n == 0 {
        return S::one();
    }
    let mut total = S::zero();
    for j in 0..n {
        let minor: Vec<Vec<S>> = matrix[1..]
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|&(c, _)| c != j)
                    .map(|(_, v)| v.clone())
                    .collect()
            })
            .collect();
        let term = matrix[0][j].clone() * det_laplace(&minor);
        if j % 2 == 0 {
            total = total + term;
        } else {
            total = total - term;
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, ratio, Rational};
    use proptest::prelude::*;

    fn to_matrix(v: &[i64], n: usize) -> Vec<Vec<Rational>> {
        (0..n)
            .map(|i| (0..n).map(|j| ratio(v[i * n + j], 1 + (i + j) as i64 % 3)).collect())
            .collect()
    }

    #[test]
    fn needs_pivoting() {
        let m = vec![vec![int(0), int(1)], vec![int(1), int(0)]];
        assert_eq!(det_bareiss(&m), int(-1));
    }

    #[test]
    fn singular_is_zero() {
        let m = vec![vec![int(1), int(2)], vec![int(2), int(4)]];
        assert_eq!(det_bareiss(&m), int(0));
        assert!(solve(&m, &[int(1), int(1)]).is_none());
    }

    proptest! {
        #[test]
        fn bareiss_matches_cofactor_expansion(n in 1usize..5, v in prop::collection::vec(-5i64..=5, 16)) {
            let m = to_matrix(&v, n);
            prop_assert_eq!(det_bareiss(&m), det_laplace(&m));
        }

        #[test]
        fn solve_satisfies_system(v in prop::collection::vec(-5i64..=5, 9), b in prop::collection::vec(-5i64..=5, 3)) {
            let m = to_matrix(&v, 3);
            let rhs: Vec<Rational> = b.iter().map(|&x| int(x)).collect();
            if let Some(x) = solve(&m, &rhs) {
                for i in 0..3 {
                    let lhs = (0..3).fold(int(0), |acc, j| acc + m[i][j].clone() * x[j].clone());
                    prop_assert_eq!(&lhs, &rhs[i]);
                }
            } else {
                prop_assert_eq!(det_laplace(&m), int(0));
            }
        }
    }
}
