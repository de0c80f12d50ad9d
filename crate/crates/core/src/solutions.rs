//! Lattice states and their closed-form values as ratios of Hankel
//! determinants, plus the conversions between qd and dLV variables.

use num::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hankel::HankelTable;
use crate::scalar::{serde_rational, Rational, Scalar};

/// qd variables `q_1..q_m`, `e_1..e_{m-1}`; `e_0 = e_m = 0` implicitly.
#[derive(Debug, Clone, PartialEq)]
pub struct TodaState<S> {
    pub q: Vec<S>,
    pub e: Vec<S>,
}

/// Shifted qd variables together with the shift `mu^{(t)}` they belong to.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftedTodaState<S> {
    pub q: Vec<S>,
    pub e: Vec<S>,
    pub mu: S,
}

/// dLV variables `u_1..u_{2m-1}` with step parameter `delta^{(t)}`;
/// `u_0 = u_{2m} = 0` implicitly.
#[derive(Debug, Clone, PartialEq)]
pub struct LvState<S> {
    pub u: Vec<S>,
    pub delta: S,
}

fn check_qe<S>(q: &[S], e: &[S]) -> Result<()> {
    if q.is_empty() {
        return Err(Error::Dimension("state needs at least one q".into()));
    }
    if e.len() + 1 != q.len() {
        return Err(Error::Dimension(format!(
            "{} q values need {} e values, got {}",
            q.len(),
            q.len() - 1,
            e.len()
        )));
    }
    Ok(())
}

/// `e_k` with the boundary convention, `k` 1-based in `0..=m`.
pub(crate) fn coupling<S: Scalar>(e: &[S], k: usize) -> S {
    if k == 0 {
        S::zero()
    } else {
        e.get(k - 1).cloned().unwrap_or_else(S::zero)
    }
}

impl<S: Scalar> TodaState<S> {
    pub fn new(q: Vec<S>, e: Vec<S>) -> Result<Self> {
        check_qe(&q, &e)?;
        Ok(Self { q, e })
    }

    pub fn m(&self) -> usize {
        self.q.len()
    }

    pub fn e_at(&self, k: usize) -> S {
        coupling(&self.e, k)
    }
}

impl<S: Scalar> ShiftedTodaState<S> {
    pub fn new(q: Vec<S>, e: Vec<S>, mu: S) -> Result<Self> {
        check_qe(&q, &e)?;
        Ok(Self { q, e, mu })
    }

    pub fn m(&self) -> usize {
        self.q.len()
    }

    pub fn e_at(&self, k: usize) -> S {
        coupling(&self.e, k)
    }

    /// The `(Q, E)` pair as a plain qd state, forgetting the shift.
    pub fn unshifted(&self) -> TodaState<S> {
        TodaState { q: self.q.clone(), e: self.e.clone() }
    }
}

impl<S: Scalar> LvState<S> {
    pub fn new(u: Vec<S>, delta: S) -> Result<Self> {
        if u.len().is_multiple_of(2) {
            return Err(Error::Dimension(format!(
                "dLV state needs 2m - 1 variables, got {}",
                u.len()
            )));
        }
        Ok(Self { u, delta })
    }

    pub fn m(&self) -> usize {
        self.u.len().div_ceil(2)
    }

    /// `u_k` with `u_0 = u_{2m} = 0`.
    pub fn u_at(&self, k: usize) -> S {
        coupling(&self.u, k)
    }
}

impl TodaState<Rational> {
    pub fn to_float<T: Scalar>(&self) -> TodaState<T> {
        TodaState {
            q: self.q.iter().map(T::from_rational).collect(),
            e: self.e.iter().map(T::from_rational).collect(),
        }
    }
}

impl ShiftedTodaState<Rational> {
    pub fn to_float<T: Scalar>(&self) -> ShiftedTodaState<T> {
        ShiftedTodaState {
            q: self.q.iter().map(T::from_rational).collect(),
            e: self.e.iter().map(T::from_rational).collect(),
            mu: T::from_rational(&self.mu),
        }
    }
}

impl LvState<Rational> {
    pub fn to_float<T: Scalar>(&self) -> LvState<T> {
        LvState {
            u: self.u.iter().map(T::from_rational).collect(),
            delta: T::from_rational(&self.delta),
        }
    }
}

/// `a * b / (c * d)` with the denominator factors checked nonzero.
fn quotient(
    table: &HankelTable,
    num: [(usize, usize, usize); 2],
    den: [(usize, usize, usize); 2],
) -> Result<Rational> {
    let mut d = Rational::one();
    for (k, s, t) in den {
        d *= table.nonzero(k, s, t)?;
    }
    let mut n = Rational::one();
    for (k, s, t) in num {
        n *= table.get(k, s, t)?;
    }
    Ok(n / d)
}

/// `q_k`, `e_k` at `(s, t)` from the Hankel determinants in rows `s, s+1`.
pub fn toda_from_hankel(table: &HankelTable, s: usize, t: usize) -> Result<TodaState<Rational>> {
    let m = table.m();
    let q = (1..=m)
        .map(|k| quotient(table, [(k - 1, s, t), (k, s + 1, t)], [(k, s, t), (k - 1, s + 1, t)]))
        .collect::<Result<Vec<_>>>()?;
    let e = (1..m)
        .map(|k| quotient(table, [(k + 1, s, t), (k - 1, s + 1, t)], [(k, s, t), (k, s + 1, t)]))
        .collect::<Result<Vec<_>>>()?;
    Ok(TodaState { q, e })
}

/// `Q_k`, `E_k` at `(s, t)` from the Hankel determinants in columns
/// `t, t+1`; the shift is the table's `mu^{(t)}`.
pub fn shifted_from_hankel(
    table: &HankelTable,
    s: usize,
    t: usize,
) -> Result<ShiftedTodaState<Rational>> {
    let m = table.m();
    let q = (1..=m)
        .map(|k| quotient(table, [(k - 1, s, t), (k, s, t + 1)], [(k, s, t), (k - 1, s, t + 1)]))
        .collect::<Result<Vec<_>>>()?;
    let e = (1..m)
        .map(|k| quotient(table, [(k + 1, s, t), (k - 1, s, t + 1)], [(k, s, t), (k, s, t + 1)]))
        .collect::<Result<Vec<_>>>()?;
    Ok(ShiftedTodaState { q, e, mu: table.mu(t).clone() })
}

/// dLV variables at time `t` with `delta^{(t)} = -1/mu^{(t)}`, built from
/// rows `s = 0, 1`.
pub fn lv_from_hankel(table: &HankelTable, t: usize) -> Result<LvState<Rational>> {
    lv_from_hankel_at(table, 0, t)
}

/// As [`lv_from_hankel`] but from rows `s, s+1`.
pub fn lv_from_hankel_at(table: &HankelTable, s: usize, t: usize) -> Result<LvState<Rational>> {
    let mu = table.mu(t);
    if mu.is_zero() {
        return Err(Error::ZeroShift { t });
    }
    let m = table.m();
    let mut u = Vec::with_capacity(2 * m - 1);
    for k in 1..=m {
        u.push(quotient(
            table,
            [(k, s + 1, t), (k - 1, s, t + 1)],
            [(k, s, t), (k - 1, s + 1, t + 1)],
        )?);
        if k < m {
            // 1/delta = -mu.
            let r = quotient(
                table,
                [(k + 1, s, t), (k - 1, s + 1, t + 1)],
                [(k, s + 1, t), (k, s, t + 1)],
            )?;
            u.push(-mu * r);
        }
    }
    Ok(LvState { u, delta: -mu.recip() })
}

/// Solves `q_k = u_{2k-1}(1 + delta u_{2k-2})`, `e_k = u_{2k}(1 + delta u_{2k-1})`
/// for `u` in ascending order.
pub fn toda_to_lv<S: Scalar>(state: &TodaState<S>, delta: S) -> Result<LvState<S>> {
    if delta.is_zero() {
        return Err(Error::Config("dLV parameter delta must be nonzero".into()));
    }
    let m = state.m();
    let mut u: Vec<S> = Vec::with_capacity(2 * m - 1);
    for k in 1..=m {
        let prev = if k == 1 { S::zero() } else { u[2 * k - 3].clone() };
        let denom = S::one() + delta.clone() * prev;
        if denom.is_zero() {
            return Err(Error::Breakdown { index: 2 * k - 1 });
        }
        u.push(state.q[k - 1].clone() / denom);
        if k < m {
            let denom = S::one() + delta.clone() * u[2 * k - 2].clone();
            if denom.is_zero() {
                return Err(Error::Breakdown { index: 2 * k });
            }
            u.push(state.e[k - 1].clone() / denom);
        }
    }
    Ok(LvState { u, delta })
}

pub fn lv_to_toda<S: Scalar>(state: &LvState<S>) -> TodaState<S> {
    let m = state.m();
    let factor = |k: usize| S::one() + state.delta.clone() * state.u_at(k);
    TodaState {
        q: (1..=m).map(|k| state.u_at(2 * k - 1) * factor(2 * k - 2)).collect(),
        e: (1..m).map(|k| state.u_at(2 * k) * factor(2 * k - 1)).collect(),
    }
}

/// Coefficients `b_{k,1..k}` of the monic polynomials generated by
/// `P_{k+1} = (z - q_{k+1} - e_k) P_k - q_k e_k P_{k-1}`, for `k = 0..=m`.
/// Entry `k` is `[1, b_{k,1}, ..., b_{k,k}]`.
pub fn hadamard_coefficients<S: Scalar>(state: &TodaState<S>) -> Vec<Vec<S>> {
    let m = state.m();
    let mut polys: Vec<Vec<S>> = vec![vec![S::one()]];
    for k in 0..m {
        let shift = state.q[k].clone() + state.e_at(k);
        let cur = &polys[k];
        let mut next = cur.clone();
        next.push(S::zero());
        for (i, c) in cur.iter().enumerate() {
            next[i + 1] = next[i + 1].clone() - shift.clone() * c.clone();
        }
        if k > 0 {
            let w = state.q[k - 1].clone() * state.e_at(k);
            for (i, c) in polys[k - 1].iter().enumerate() {
                next[i + 2] = next[i + 2].clone() - w.clone() * c.clone();
            }
        }
        polys.push(next);
    }
    polys
}

/// Initial moments `f_0..f_{m-1}` (normalized to `f_0 = 1`) of a sequence
/// whose qd variables at `s = 0` are `state`.
pub fn recover_initial_moments(state: &TodaState<Rational>) -> Result<Vec<Rational>> {
    if let Some(k) = state.q.iter().position(Zero::is_zero) {
        return Err(Error::SingularConfiguration { k: k + 1, s: 0, t: 0 });
    }
    if let Some(k) = state.e.iter().position(Zero::is_zero) {
        return Err(Error::SingularConfiguration { k: k + 2, s: 0, t: 0 });
    }
    let b = hadamard_coefficients(state);
    let mut f = vec![Rational::one()];
    for k in 1..state.m() {
        let next = -(1..=k).map(|i| &b[k][i] * &f[k - i]).sum::<Rational>();
        f.push(next);
    }
    Ok(f)
}

/// JSON form of any of the three states, rationals as `"p/q"` strings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum StateDocument {
    Toda {
        #[serde(with = "serde_rational::vec")]
        q: Vec<Rational>,
        #[serde(with = "serde_rational::vec", default)]
        e: Vec<Rational>,
    },
    Shifted {
        #[serde(rename = "Q", with = "serde_rational::vec")]
        q: Vec<Rational>,
        #[serde(rename = "E", with = "serde_rational::vec", default)]
        e: Vec<Rational>,
        #[serde(with = "serde_rational")]
        mu: Rational,
    },
    Lv {
        #[serde(with = "serde_rational::vec")]
        u: Vec<Rational>,
        #[serde(with = "serde_rational")]
        delta: Rational,
    },
}

impl From<&TodaState<Rational>> for StateDocument {
    fn from(s: &TodaState<Rational>) -> Self {
        StateDocument::Toda { q: s.q.clone(), e: s.e.clone() }
    }
}

impl From<&ShiftedTodaState<Rational>> for StateDocument {
    fn from(s: &ShiftedTodaState<Rational>) -> Self {
        StateDocument::Shifted { q: s.q.clone(), e: s.e.clone(), mu: s.mu.clone() }
    }
}

impl From<&LvState<Rational>> for StateDocument {
    fn from(s: &LvState<Rational>) -> Self {
        StateDocument::Lv { u: s.u.clone(), delta: s.delta.clone() }
    }
}

impl StateDocument {
    /// The qd state this document describes. Shifted states give `(Q, E)`;
    /// dLV states are converted.
    pub fn to_toda(&self) -> Result<TodaState<Rational>> {
        match self {
            StateDocument::Toda { q, e } => TodaState::new(q.clone(), e.clone()),
            StateDocument::Shifted { q, e, .. } => TodaState::new(q.clone(), e.clone()),
            StateDocument::Lv { u, delta } => {
                Ok(lv_to_toda(&LvState::new(u.clone(), delta.clone())?))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hankel::build_hankel_table;
    use crate::scalar::{int, ratio};
    use crate::spectral::fixtures::{e1, e2};
    use crate::spectral::{build_moment_table, MomentTable, ShiftSchedule, SpectralData};
    use proptest::prelude::*;

    fn table(spec: &SpectralData, shifts: &ShiftSchedule, s: usize, t: usize) -> HankelTable {
        let m = spec.m();
        build_hankel_table(&build_moment_table(spec, shifts, s + 2 * m + 2, t + 2).unwrap()).unwrap()
    }

    fn e2_table() -> HankelTable {
        let (spec, shifts) = e2();
        table(&spec, &shifts, 4, 4)
    }

    fn r(v: &[(i64, i64)]) -> Vec<Rational> {
        v.iter().map(|&(p, q)| ratio(p, q)).collect()
    }

    #[test]
    fn toda_examples() {
        let h = e2_table();
        let s0 = toda_from_hankel(&h, 0, 0).unwrap();
        assert_eq!(s0.q, r(&[(3, 2), (4, 3)]));
        assert_eq!(s0.e, r(&[(1, 6)]));
        let s1 = toda_from_hankel(&h, 1, 0).unwrap();
        assert_eq!(s1.q, r(&[(5, 3), (6, 5)]));
        assert_eq!(s1.e, r(&[(2, 15)]));

        let (spec, shifts) = e1();
        let h = table(&spec, &shifts, 3, 3);
        for s in 0..3 {
            for t in 0..3 {
                let st = toda_from_hankel(&h, s, t).unwrap();
                assert_eq!(st.q, vec![int(3)]);
                assert!(st.e.is_empty());
            }
        }
    }

    #[test]
    fn shifted_examples() {
        let h = e2_table();
        let st = shifted_from_hankel(&h, 0, 0).unwrap();
        assert_eq!(st.q, r(&[(1, 1), (3, 4)]));
        assert_eq!(st.e, r(&[(1, 4)]));
        assert_eq!(st.mu, ratio(1, 2));
        assert_eq!(&st.q[0] + &st.q[1] + &st.e[0], int(2));
        assert_eq!(&st.q[0] * &st.q[1], ratio(3, 4));

        let (spec, _) = e1();
        let h = table(&spec, &ShiftSchedule::constant(int(1)), 3, 3);
        assert_eq!(shifted_from_hankel(&h, 0, 0).unwrap().q, vec![int(2)]);
    }

    #[test]
    fn lv_examples() {
        let h = e2_table();
        let lv = lv_from_hankel(&h, 0).unwrap();
        assert_eq!(lv.u, r(&[(3, 2), (-1, 12), (8, 7)]));
        assert_eq!(lv.delta, int(-2));
        let back = lv_to_toda(&lv);
        assert_eq!(back, toda_from_hankel(&h, 0, 0).unwrap());

        // m = 1: u_1 = H_1^{(1,0)} / H_1^{(0,0)} = f_1 / f_0 = lambda.
        let (spec, _) = e1();
        let h = table(&spec, &ShiftSchedule::constant(int(1)), 3, 3);
        let lv = lv_from_hankel(&h, 0).unwrap();
        assert_eq!(lv.u, vec![int(3)]);
        assert_eq!(lv.delta, int(-1));

        // E2 reaches mu = 0 at t = 1.
        assert!(matches!(lv_from_hankel(&e2_table(), 1), Err(Error::ZeroShift { t: 1 })));
    }

    #[test]
    fn conversion_examples() {
        let s = TodaState::new(r(&[(3, 2), (4, 3)]), r(&[(1, 6)])).unwrap();
        assert_eq!(toda_to_lv(&s, int(-2)).unwrap().u, r(&[(3, 2), (-1, 12), (8, 7)]));
        let single = TodaState::new(vec![int(4)], vec![]).unwrap();
        assert_eq!(toda_to_lv(&single, ratio(7, 3)).unwrap().u, vec![int(4)]);
        let lv = LvState::new(vec![int(1), int(1), int(1)], int(1)).unwrap();
        let qd = lv_to_toda(&lv);
        assert_eq!(qd.q, vec![int(1), int(2)]);
        assert_eq!(qd.e, vec![int(2)]);
        assert_eq!(lv_to_toda(&LvState::new(vec![int(4)], int(9)).unwrap()).q, vec![int(4)]);
    }

    #[test]
    fn conversion_breakdown_reports_index() {
        // 1 + delta * u_1 = 1 - 1 * 1 = 0 when solving for u_2.
        let s = TodaState::new(vec![int(1), int(1)], vec![int(1)]).unwrap();
        assert!(matches!(toda_to_lv(&s, int(-1)), Err(Error::Breakdown { index: 2 })));
        assert!(toda_to_lv(&s, int(0)).is_err());
    }

    #[test]
    fn recover_examples() {
        let s = TodaState::new(r(&[(3, 2), (4, 3)]), r(&[(1, 6)])).unwrap();
        assert_eq!(recover_initial_moments(&s).unwrap(), r(&[(1, 1), (3, 2)]));
        let single = TodaState::new(vec![int(3)], vec![]).unwrap();
        assert_eq!(recover_initial_moments(&single).unwrap(), vec![int(1)]);
    }

    #[test]
    fn hadamard_coefficients_of_order_m_give_char_poly() {
        let s = TodaState::new(r(&[(3, 2), (4, 3)]), r(&[(1, 6)])).unwrap();
        let b = hadamard_coefficients(&s);
        assert_eq!(b[2], vec![int(1), int(-3), int(2)]);
    }

    #[test]
    fn state_document_round_trip() {
        let docs = [
            StateDocument::Toda { q: r(&[(3, 2), (4, 3)]), e: r(&[(1, 6)]) },
            StateDocument::Shifted { q: r(&[(1, 1), (3, 4)]), e: r(&[(1, 4)]), mu: ratio(1, 2) },
            StateDocument::Lv { u: r(&[(3, 2), (-1, 12), (8, 7)]), delta: int(-2) },
        ];
        for doc in docs {
            let text = serde_json::to_string(&doc).unwrap();
            let back: StateDocument = serde_json::from_str(&text).unwrap();
            assert_eq!(back, doc);
        }
        let parsed: StateDocument =
            serde_json::from_str(r#"{"kind":"shifted","Q":[1,"3/4"],"E":[0.25],"mu":"1/2"}"#)
                .unwrap();
        assert_eq!(parsed, StateDocument::Shifted {
            q: r(&[(1, 1), (3, 4)]),
            e: r(&[(1, 4)]),
            mu: ratio(1, 2)
        });
    }

    fn nonzero_small() -> impl Strategy<Value = Rational> {
        (1i64..=9, 1i64..=5, any::<bool>())
            .prop_map(|(p, q, neg)| ratio(if neg { -p } else { p }, q))
    }

    fn state_strategy() -> impl Strategy<Value = TodaState<Rational>> {
        (1usize..=4).prop_flat_map(|m| {
            (
                prop::collection::vec(nonzero_small(), m),
                prop::collection::vec(nonzero_small(), m - 1),
            )
                .prop_map(|(q, e)| TodaState { q, e })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn recovered_moments_reproduce_state(state in state_strategy()) {
            let m = state.m();
            let f = recover_initial_moments(&state).unwrap();
            let b = hadamard_coefficients(&state);
            let poly = crate::spectral::CharPoly::from_coeffs(b[m][1..].to_vec());
            let moments = MomentTable::from_recurrence(&poly, &f, &ShiftSchedule::zero(), 2 * m + 2, 0).unwrap();
            let h = build_hankel_table(&moments).unwrap();
            prop_assert_eq!(toda_from_hankel(&h, 0, 0).unwrap(), state);
        }

        #[test]
        fn lv_conversion_round_trip(state in state_strategy(), d in nonzero_small()) {
            if let Ok(lv) = toda_to_lv(&state, d) {
                prop_assert_eq!(lv_to_toda(&lv), state);
            }
        }

        #[test]
        fn weights_scale_out(c in nonzero_small()) {
            let (spec, shifts) = e2();
            let scaled = spec.with_weights(spec.weights().iter().map(|w| w * &c).collect()).unwrap();
            let a = table(&spec, &shifts, 2, 2);
            let b = table(&scaled, &shifts, 2, 2);
            for s in 0..2 {
                for t in 0..2 {
                    prop_assert_eq!(toda_from_hankel(&a, s, t).unwrap(), toda_from_hankel(&b, s, t).unwrap());
                    prop_assert_eq!(shifted_from_hankel(&a, s, t).unwrap(), shifted_from_hankel(&b, s, t).unwrap());
                }
            }
            prop_assert_eq!(lv_from_hankel(&a, 0).unwrap(), lv_from_hankel(&b, 0).unwrap());
        }
    }

    #[test]
    fn conversion_matches_hankel_lv() {
        let h = e2_table();
        let qd = toda_from_hankel(&h, 0, 0).unwrap();
        let lv = toda_to_lv(&qd, -h.mu(0).recip()).unwrap();
        assert_eq!(lv, lv_from_hankel(&h, 0).unwrap());
    }
}
