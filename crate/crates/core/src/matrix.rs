//! Tridiagonal and bidiagonal matrices, the `A = LR` correspondence with qd
//! variables, and a Sturm-sequence bisection eigenvalue oracle.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::solutions::{hadamard_coefficients, ShiftedTodaState, TodaState};

#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalMatrix<S> {
    pub diag: Vec<S>,
    pub sub: Vec<S>,
    pub sup: Vec<S>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BidiagonalMatrix<S> {
    pub diag: Vec<S>,
    pub sup: Vec<S>,
}

impl<S: Scalar> TridiagonalMatrix<S> {
    pub fn new(diag: Vec<S>, sub: Vec<S>, sup: Vec<S>) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::Dimension("empty matrix".into()));
        }
        if sub.len() + 1 != diag.len() || sup.len() + 1 != diag.len() {
            return Err(Error::Dimension(format!(
                "order {} needs {} off-diagonal entries, got sub {} / super {}",
                diag.len(),
                diag.len() - 1,
                sub.len(),
                sup.len()
            )));
        }
        Ok(Self { diag, sub, sup })
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    pub fn mul_vec(&self, v: &[S]) -> Result<Vec<S>> {
        let n = self.n();
        if v.len() != n {
            return Err(Error::Dimension(format!("matrix order {n}, vector length {}", v.len())));
        }
        Ok((0..n)
            .map(|i| {
                let mut acc = self.diag[i].clone() * v[i].clone();
                if i > 0 {
                    acc = acc + self.sub[i - 1].clone() * v[i - 1].clone();
                }
                if i + 1 < n {
                    acc = acc + self.sup[i].clone() * v[i + 1].clone();
                }
                acc
            })
            .collect())
    }
}

impl<S: Scalar> BidiagonalMatrix<S> {
    pub fn new(diag: Vec<S>, sup: Vec<S>) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::Dimension("empty matrix".into()));
        }
        if sup.len() + 1 != diag.len() {
            return Err(Error::Dimension(format!(
                "order {} needs {} superdiagonal entries, got {}",
                diag.len(),
                diag.len() - 1,
                sup.len()
            )));
        }
        Ok(Self { diag, sup })
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    /// `B^T B`, symmetric tridiagonal.
    pub fn gram(&self) -> TridiagonalMatrix<S> {
        let n = self.n();
        let diag = (0..n)
            .map(|k| {
                let b = self.diag[k].clone();
                let mut d = b.clone() * b;
                if k > 0 {
                    d = d + self.sup[k - 1].clone() * self.sup[k - 1].clone();
                }
                d
            })
            .collect();
        let off: Vec<S> = (0..n - 1)
            .map(|k| self.diag[k].clone() * self.sup[k].clone())
            .collect();
        TridiagonalMatrix { diag, sub: off.clone(), sup: off }
    }
}

/// `A = LR`: `diag_k = q_k + e_{k-1}`, `sub_k = q_k e_k`, `super_k = 1`.
pub fn build_lr<S: Scalar>(state: &TodaState<S>) -> TridiagonalMatrix<S> {
    let m = state.m();
    TridiagonalMatrix {
        diag: (1..=m).map(|k| state.q[k - 1].clone() + state.e_at(k - 1)).collect(),
        sub: (1..m).map(|k| state.q[k - 1].clone() * state.e_at(k)).collect(),
        sup: vec![S::one(); m.saturating_sub(1)],
    }
}

/// The shifted matrix built from `(Q, E)`; its eigenvalues are `lambda_i - mu`.
pub fn build_lr_shifted<S: Scalar>(state: &ShiftedTodaState<S>) -> TridiagonalMatrix<S> {
    build_lr(&state.unshifted())
}

/// Result of [`factor_lr`]: the qd variables and the diagonal similarity
/// `D` with `D^{-1} A D` unit upper-bidiagonal-coupled.
#[derive(Debug, Clone, PartialEq)]
pub struct LrFactors<S> {
    pub state: TodaState<S>,
    /// Diagonal of `D`; restarts at 1 after every zero superdiagonal entry.
    pub scaling: Vec<S>,
}

/// Inverse of [`build_lr`]. A general tridiagonal is first brought to unit
/// superdiagonal by a diagonal similarity, which maps `sub_k` to
/// `sub_k * super_k`. A zero `super_k` splits the matrix into blocks whose
/// spectra are kept; the coupling is then dropped.
pub fn factor_lr<S: Scalar>(a: &TridiagonalMatrix<S>) -> Result<LrFactors<S>> {
    let n = a.n();
    let mut scaling = vec![S::one()];
    let mut coupling = Vec::with_capacity(n - 1);
    for k in 0..n - 1 {
        let sup = &a.sup[k];
        if sup.is_zero() {
            scaling.push(S::one());
            coupling.push(S::zero());
        } else {
            scaling.push(scaling[k].clone() / sup.clone());
            coupling.push(a.sub[k].clone() * sup.clone());
        }
    }
    let mut q = Vec::with_capacity(n);
    let mut e = Vec::with_capacity(n - 1);
    q.push(a.diag[0].clone());
    for k in 0..n - 1 {
        if q[k].is_zero() {
            return Err(Error::ZeroPivot { index: k + 1 });
        }
        let ek = coupling[k].clone() / q[k].clone();
        q.push(a.diag[k + 1].clone() - ek.clone());
        e.push(ek);
    }
    Ok(LrFactors { state: TodaState { q, e }, scaling })
}

/// `(P_0(lambda), ..., P_{m-1}(lambda))` for the monic polynomials of the
/// three-term recursion; an eigenvector of `build_lr(state)` when `lambda`
/// is an eigenvalue.
pub fn eigenvector<S: Scalar>(state: &TodaState<S>, lambda: &S) -> Vec<S> {
    let m = state.m();
    let mut v = Vec::with_capacity(m);
    let mut prev = S::zero();
    let mut cur = S::one();
    for k in 0..m {
        v.push(cur.clone());
        let w = if k == 0 { S::zero() } else { state.q[k - 1].clone() * state.e_at(k) };
        let next =
            (lambda.clone() - state.q[k].clone() - state.e_at(k)) * cur.clone() - w * prev;
        prev = cur;
        cur = next;
    }
    v
}

fn max_abs<S: Scalar>(v: &[S]) -> S {
    v.iter().map(|x| x.abs()).fold(S::zero(), |a, b| if b > a { b } else { a })
}

/// `|A v - lambda v|_inf / |v|_inf`.
pub fn residual<S: Scalar>(a: &TridiagonalMatrix<S>, lambda: &S, v: &[S]) -> Result<S> {
    let norm = max_abs(v);
    if norm.is_zero() {
        return Err(Error::ZeroVector);
    }
    let av = a.mul_vec(v)?;
    let r: Vec<S> = av
        .into_iter()
        .zip(v)
        .map(|(x, y)| x - lambda.clone() * y.clone())
        .collect();
    Ok(max_abs(&r) / norm)
}

/// `det(zI - A)` for `A = build_lr(state)` by the leading-minor recursion.
pub fn charpoly_eval<S: Scalar>(state: &TodaState<S>, z: &S) -> S {
    let m = state.m();
    let mut prev = S::one();
    let mut cur = z.clone() - state.q[0].clone();
    for k in 1..m {
        let next = (z.clone() - state.q[k].clone() - state.e_at(k)) * cur.clone()
            - state.q[k - 1].clone() * state.e_at(k) * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// `det((z - mu)I - A)` for the shifted matrix, whose roots are the
/// unshifted eigenvalues.
pub fn shifted_charpoly_eval<S: Scalar>(state: &ShiftedTodaState<S>, z: &S) -> S {
    charpoly_eval(&state.unshifted(), &(z.clone() - state.mu.clone()))
}

/// Coefficients `[1, a_1, ..., a_m]` of `det(zI - build_lr(state))`.
pub fn charpoly_coeffs<S: Scalar>(state: &TodaState<S>) -> Vec<S> {
    hadamard_coefficients(state).pop().unwrap_or_default()
}

/// Eigenvalues, descending, of a tridiagonal with `sub_k * super_k > 0`
/// (or `= 0` for decoupled blocks), by bisection on Sturm counts of the
/// symmetrized matrix.
pub fn sturm_bisection_oracle(a: &TridiagonalMatrix<f64>) -> Result<Vec<f64>> {
    let n = a.n();
    let mut off2 = Vec::with_capacity(n - 1);
    for k in 0..n - 1 {
        let p = a.sub[k] * a.sup[k];
        if p < 0.0 || (p == 0.0 && (a.sub[k] != 0.0 || a.sup[k] != 0.0)) {
            return Err(Error::NotSymmetrizable { index: k + 1 });
        }
        off2.push(p);
    }
    let off: Vec<f64> = off2.iter().map(|p| p.sqrt()).collect();
    let norm = (0..n)
        .map(|i| {
            let mut r = a.diag[i].abs();
            if i > 0 {
                r += off[i - 1];
            }
            if i + 1 < n {
                r += off[i];
            }
            r
        })
        .fold(0.0, f64::max);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..n {
        let radius = if i > 0 { off[i - 1] } else { 0.0 } + if i + 1 < n { off[i] } else { 0.0 };
        lo = lo.min(a.diag[i] - radius);
        hi = hi.max(a.diag[i] + radius);
    }
    let pad = f64::EPSILON * norm.max(f64::MIN_POSITIVE) * (n as f64) + f64::MIN_POSITIVE;
    lo -= pad;
    hi += pad;
    let tol = 1e-14 * norm;

    // Number of eigenvalues strictly below x.
    let count_below = |x: f64| -> usize {
        let mut count = 0;
        let mut d = 1.0;
        for i in 0..n {
            d = a.diag[i] - x - if i > 0 { off2[i - 1] / d } else { 0.0 };
            if d == 0.0 {
                d = -f64::EPSILON * norm.max(f64::MIN_POSITIVE);
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    };

    let mut values = Vec::with_capacity(n);
    for j in 0..n {
        // j-th smallest eigenvalue: count_below(x) <= j < count_below(y).
        let (mut a_lo, mut a_hi) = (lo, hi);
        for _ in 0..256 {
            let mid = 0.5 * (a_lo + a_hi);
            if mid <= a_lo || mid >= a_hi {
                break;
            }
            if count_below(mid) > j {
                a_hi = mid;
            } else {
                a_lo = mid;
            }
            if a_hi - a_lo <= tol && a_hi - a_lo <= f64::EPSILON * a_lo.abs().max(a_hi.abs()) {
                break;
            }
        }
        values.push(0.5 * (a_lo + a_hi));
    }
    values.reverse();
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, ratio, Rational};
    use proptest::prelude::*;

    fn e2_state() -> TodaState<Rational> {
        TodaState::new(vec![ratio(3, 2), ratio(4, 3)], vec![ratio(1, 6)]).unwrap()
    }

    #[test]
    fn build_lr_examples() {
        let a = build_lr(&e2_state());
        assert_eq!(a.diag, vec![ratio(3, 2), ratio(3, 2)]);
        assert_eq!(a.sub, vec![ratio(1, 4)]);
        assert_eq!(a.sup, vec![int(1)]);
        assert_eq!(charpoly_coeffs(&e2_state()), vec![int(1), int(-3), int(2)]);

        let single = build_lr(&TodaState::new(vec![int(7)], vec![]).unwrap());
        assert_eq!(single.diag, vec![int(7)]);
        assert!(single.sub.is_empty());

        let diagonal = build_lr(&TodaState::new(vec![int(4), int(-1)], vec![int(0)]).unwrap());
        assert_eq!(diagonal.diag, vec![int(4), int(-1)]);
        assert_eq!(diagonal.sub, vec![int(0)]);
    }

    #[test]
    fn factor_lr_examples() {
        let a = TridiagonalMatrix::new(
            vec![ratio(3, 2), ratio(3, 2)],
            vec![ratio(1, 4)],
            vec![int(1)],
        )
        .unwrap();
        assert_eq!(factor_lr(&a).unwrap().state, e2_state());

        let d = TridiagonalMatrix::new(vec![int(2), int(5)], vec![int(0)], vec![int(0)]).unwrap();
        let f = factor_lr(&d).unwrap();
        assert_eq!(f.state.q, vec![int(2), int(5)]);
        assert_eq!(f.state.e, vec![int(0)]);

        let z = TridiagonalMatrix::new(vec![int(0), int(1)], vec![int(1)], vec![int(1)]).unwrap();
        assert!(matches!(factor_lr(&z), Err(Error::ZeroPivot { index: 1 })));
    }

    #[test]
    fn factor_lr_rescales_superdiagonal() {
        // sub * super = 1/4 keeps the E2 spectrum.
        let a = TridiagonalMatrix::new(
            vec![ratio(3, 2), ratio(3, 2)],
            vec![ratio(1, 8)],
            vec![int(2)],
        )
        .unwrap();
        let f = factor_lr(&a).unwrap();
        assert_eq!(f.state, e2_state());
        assert_eq!(f.scaling, vec![int(1), ratio(1, 2)]);
    }

    #[test]
    fn eigenvector_examples() {
        let s = e2_state();
        assert_eq!(eigenvector(&s, &int(2)), vec![int(1), ratio(1, 2)]);
        assert_eq!(eigenvector(&s, &int(1)), vec![int(1), ratio(-1, 2)]);
        let a = build_lr(&s);
        for l in [int(1), int(2)] {
            assert_eq!(residual(&a, &l, &eigenvector(&s, &l)).unwrap(), int(0));
        }
        assert!(matches!(residual(&a, &int(1), &[int(0), int(0)]), Err(Error::ZeroVector)));
    }

    #[test]
    fn residual_scales_with_perturbation() {
        let s = e2_state().to_float::<f64>();
        let a = build_lr(&s);
        let v = eigenvector(&s, &2.0);
        let r = residual(&a, &(2.0 + 1e-6), &v).unwrap();
        assert!(r > 1e-8 && r < 1e-4, "{r}");
    }

    #[test]
    fn charpoly_examples() {
        let s = e2_state();
        assert_eq!(charpoly_eval(&s, &int(2)), int(0));
        let shifted = ShiftedTodaState::new(vec![int(1), ratio(3, 4)], vec![ratio(1, 4)], ratio(1, 2))
            .unwrap();
        assert_eq!(shifted_charpoly_eval(&shifted, &int(1)), int(0));
        assert_eq!(shifted_charpoly_eval(&shifted, &int(2)), int(0));
        let single = TodaState::new(vec![int(5)], vec![]).unwrap();
        assert_eq!(charpoly_eval(&single, &int(9)), int(4));
    }

    #[test]
    fn oracle_examples() {
        let a = TridiagonalMatrix::new(vec![1.5, 1.5], vec![0.25], vec![1.0]).unwrap();
        let v = sturm_bisection_oracle(&a).unwrap();
        assert!((v[0] - 2.0).abs() < 1e-12 && (v[1] - 1.0).abs() < 1e-12, "{v:?}");

        let d = TridiagonalMatrix::new(vec![1.0, 3.0, -2.0], vec![0.0; 2], vec![0.0; 2]).unwrap();
        assert_eq!(sturm_bisection_oracle(&d).unwrap().len(), 3);
        let v = sturm_bisection_oracle(&d).unwrap();
        for (x, y) in v.iter().zip([3.0, 1.0, -2.0]) {
            assert!((x - y).abs() < 1e-13);
        }

        let bad = TridiagonalMatrix::new(vec![1.0, 1.0], vec![-1.0], vec![1.0]).unwrap();
        assert!(matches!(sturm_bisection_oracle(&bad), Err(Error::NotSymmetrizable { index: 1 })));
    }

    #[test]
    fn gram_of_bidiagonal() {
        let b = BidiagonalMatrix::new(vec![1.0, 1.0], vec![1.0]).unwrap();
        let g = b.gram();
        assert_eq!(g.diag, vec![1.0, 2.0]);
        let v = sturm_bisection_oracle(&g).unwrap();
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((v[0].sqrt() - phi).abs() < 1e-12);
        assert!((v[1].sqrt() - (phi - 1.0)).abs() < 1e-12);
    }

    fn small() -> impl Strategy<Value = Rational> {
        (-9i64..=9, 1i64..=5).prop_map(|(p, q)| ratio(p, q))
    }

    proptest! {
        #[test]
        fn factor_inverts_build(m in 1usize..6, q in prop::collection::vec(small(), 6), e in prop::collection::vec(small(), 5)) {
            let state = TodaState { q: q[..m].to_vec(), e: e[..m - 1].to_vec() };
            let a = build_lr(&state);
            match factor_lr(&a) {
                Ok(f) => {
                    prop_assert_eq!(build_lr(&f.state), a);
                    prop_assert_eq!(f.state, state);
                }
                Err(Error::ZeroPivot { index }) => prop_assert!(state.q[index - 1] == int(0)),
                Err(other) => prop_assert!(false, "{other}"),
            }
        }

        #[test]
        fn charpoly_recursion_matches_coefficients(m in 1usize..6, q in prop::collection::vec(small(), 6), e in prop::collection::vec(small(), 5), z in small()) {
            let state = TodaState { q: q[..m].to_vec(), e: e[..m - 1].to_vec() };
            let c = charpoly_coeffs(&state);
            let horner = c.iter().fold(int(0), |acc, a| acc * &z + a);
            prop_assert_eq!(charpoly_eval(&state, &z), horner);
        }

        #[test]
        fn oracle_trace_matches(d in prop::collection::vec(-10.0f64..10.0, 1..8), o in prop::collection::vec(0.01f64..5.0, 7)) {
            let n = d.len();
            let a = TridiagonalMatrix::new(d.clone(), o[..n - 1].to_vec(), vec![1.0; n - 1]).unwrap();
            let v = sturm_bisection_oracle(&a).unwrap();
            let trace: f64 = d.iter().sum();
            let sum: f64 = v.iter().sum();
            prop_assert!((trace - sum).abs() < 1e-10 * (1.0 + trace.abs()));
            prop_assert!(v.windows(2).all(|w| w[0] >= w[1]));
        }
    }
}
