//! Hankel determinants `H_k^{(s,t)}`, Hankel polynomials `H_k^{(s,t)}(z)`,
//! Hadamard polynomials and their symmetric variant, all in exact
//! arithmetic over a [`MomentTable`].

use num::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::det_bareiss;
use crate::scalar::Rational;
use crate::spectral::MomentTable;

fn hankel_matrix(moments: &MomentTable, k: usize, s: usize, t: usize) -> Result<Vec<Vec<Rational>>> {
    if k > 0 {
        moments.get(s + 2 * k - 2, t)?;
    }
    let row = moments.row(t);
    Ok((0..k).map(|i| row[s + i..s + i + k].to_vec()).collect())
}

/// `k x k` determinant with entries `f_{s+i+j}^{(t)}`; `H_0 = 1`.
pub fn hankel_det(moments: &MomentTable, k: usize, s: usize, t: usize) -> Result<Rational> {
    Ok(det_bareiss(&hankel_matrix(moments, k, s, t)?))
}

/// Bordered determinant: the `k x k` Hankel block extended by one row of
/// moments and a last column `(1, z, ..., z^k)`.
pub fn hankel_poly_eval(
    moments: &MomentTable,
    k: usize,
    s: usize,
    t: usize,
    z: &Rational,
) -> Result<Rational> {
    if k == 0 {
        return Ok(Rational::one());
    }
    if k > moments.m() {
        return Err(Error::OutOfRange(format!(
            "Hankel polynomial degree {k} exceeds m = {}",
            moments.m()
        )));
    }
    moments.get(s + 2 * k - 1, t)?;
    let row = moments.row(t);
    let mut power = Rational::one();
    let matrix: Vec<Vec<Rational>> = (0..=k)
        .map(|i| {
            let mut r = row[s + i..s + i + k].to_vec();
            r.push(power.clone());
            power = &power * z;
            r
        })
        .collect();
    Ok(det_bareiss(&matrix))
}

/// Monic `H_k^{(s,t)}(z) / H_k^{(s,t)}`.
pub fn hadamard_poly_eval(
    moments: &MomentTable,
    k: usize,
    s: usize,
    t: usize,
    z: &Rational,
) -> Result<Rational> {
    if k == 0 {
        return Ok(Rational::one());
    }
    let h = hankel_det(moments, k, s, t)?;
    if h.is_zero() {
        return Err(Error::SingularConfiguration { k, s, t });
    }
    Ok(hankel_poly_eval(moments, k, s, t, z)? / h)
}

/// Symmetric Hadamard polynomial of index `j`: even `j = 2k` gives
/// `H_k^{(s,t)}(z^2)`, odd `j = 2k+1` gives `z H_k^{(s+1,t)}(z^2)` (both
/// Hadamard, i.e. monic).
pub fn symmetric_hadamard_eval(
    moments: &MomentTable,
    index: usize,
    s: usize,
    t: usize,
    z: &Rational,
) -> Result<Rational> {
    let z2 = z * z;
    if index.is_multiple_of(2) {
        hadamard_poly_eval(moments, index / 2, s, t, &z2)
    } else {
        Ok(z * hadamard_poly_eval(moments, index / 2, s + 1, t, &z2)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolyKind {
    Hankel,
    Hadamard,
    SymmetricHadamard,
}

/// One evaluated polynomial value together with what was evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyValue {
    pub value: Rational,
    pub k: usize,
    pub kind: PolyKind,
}

pub fn poly_value(
    moments: &MomentTable,
    kind: PolyKind,
    k: usize,
    s: usize,
    t: usize,
    z: &Rational,
) -> Result<PolyValue> {
    let value = match kind {
        PolyKind::Hankel => hankel_poly_eval(moments, k, s, t, z)?,
        PolyKind::Hadamard => hadamard_poly_eval(moments, k, s, t, z)?,
        PolyKind::SymmetricHadamard => symmetric_hadamard_eval(moments, k, s, t, z)?,
    };
    Ok(PolyValue { value, k, kind })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cell {
    pub k: usize,
    pub s: usize,
    pub t: usize,
}

/// `H_k^{(s,t)}` for `0 <= k <= m + 1` over every `(s, t)` the moment table
/// covers.
#[derive(Debug, Clone, PartialEq)]
pub struct HankelTable {
    m: usize,
    mu: Vec<Rational>,
    /// `values[t][s][k]`.
    values: Vec<Vec<Vec<Rational>>>,
    singular: Vec<Cell>,
}

impl HankelTable {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn s_max(&self) -> usize {
        self.values[0].len() - 1
    }

    pub fn t_max(&self) -> usize {
        self.values.len() - 1
    }

    pub fn mu(&self, t: usize) -> &Rational {
        &self.mu[t]
    }

    pub fn get(&self, k: usize, s: usize, t: usize) -> Result<&Rational> {
        self.values
            .get(t)
            .and_then(|plane| plane.get(s))
            .and_then(|col| col.get(k))
            .ok_or_else(|| Error::OutOfRange(format!("H_{k}^({s},{t}) not in table")))
    }

    /// Like [`get`](Self::get) but refuses a vanishing `H_k` with `1 <= k <= m`.
    pub fn nonzero(&self, k: usize, s: usize, t: usize) -> Result<&Rational> {
        let h = self.get(k, s, t)?;
        if h.is_zero() {
            return Err(Error::SingularConfiguration { k, s, t });
        }
        Ok(h)
    }

    /// Cells with `H_k = 0` for some `1 <= k <= m`.
    pub fn singular_cells(&self) -> &[Cell] {
        &self.singular
    }

    pub fn is_singular(&self) -> bool {
        !self.singular.is_empty()
    }

    /// Overwrites one entry. Meant for fault-injection tests of the identity
    /// checker; the table's invariants are not re-established.
    pub fn set(&mut self, k: usize, s: usize, t: usize, value: Rational) -> Result<()> {
        let slot = self
            .values
            .get_mut(t)
            .and_then(|plane| plane.get_mut(s))
            .and_then(|col| col.get_mut(k))
            .ok_or_else(|| Error::OutOfRange(format!("H_{k}^({s},{t}) not in table")))?;
        *slot = value;
        Ok(())
    }

    /// Both sides of `H_k^{(s+2)} H_k^{(s)} = (H_k^{(s+1)})^2 + H_{k+1}^{(s)} H_{k-1}^{(s+2)}`
    /// at fixed `t`, or `None` when the cell is outside the table.
    pub fn jacobi_s(&self, k: usize, s: usize, t: usize) -> Option<(Rational, Rational)> {
        if k == 0 || k > self.m || s + 2 > self.s_max() || t > self.t_max() {
            return None;
        }
        let h = |k: usize, s: usize| &self.values[t][s][k];
        let lhs = h(k, s + 2) * h(k, s);
        let rhs = h(k, s + 1) * h(k, s + 1) + h(k + 1, s) * h(k - 1, s + 2);
        Some((lhs, rhs))
    }

    /// The same identity in the `t` direction at fixed `s`. It only holds
    /// when `mu^{(t)} = mu^{(t+1)}`; other cells give `None`.
    pub fn jacobi_t(&self, k: usize, s: usize, t: usize) -> Option<(Rational, Rational)> {
        if k == 0 || k > self.m || s > self.s_max() || t + 2 > self.t_max() || self.mu[t] != self.mu[t + 1] {
            return None;
        }
        let h = |k: usize, t: usize| &self.values[t][s][k];
        let lhs = h(k, t + 2) * h(k, t);
        let rhs = h(k, t + 1) * h(k, t + 1) + h(k + 1, t) * h(k - 1, t + 2);
        Some((lhs, rhs))
    }
}

/// Computes every `H_k^{(s,t)}` by elimination and checks the result
/// exactly: `H_{m+1} = 0`, both Jacobi identities, and agreement of each
/// `H_{k+1}^{(s,t)}` with the value the `s`-Jacobi identity implies.
pub fn build_hankel_table(moments: &MomentTable) -> Result<HankelTable> {
    let m = moments.m();
    if moments.s_max() < 2 * m {
        return Err(Error::OutOfRange(format!(
            "moment table reaches s = {}, Hankel table of order {} needs s >= {}",
            moments.s_max(),
            m + 1,
            2 * m
        )));
    }
    let s_max = moments.s_max() - 2 * m;
    let mut singular = Vec::new();
    let mut values = Vec::with_capacity(moments.t_max() + 1);
    for t in 0..=moments.t_max() {
        let mut plane = Vec::with_capacity(s_max + 1);
        for s in 0..=s_max {
            let col = (0..=m + 1)
                .map(|k| hankel_det(moments, k, s, t))
                .collect::<Result<Vec<_>>>()?;
            singular.extend(
                (1..=m)
                    .filter(|&k| col[k].is_zero())
                    .map(|k| Cell { k, s, t }),
            );
            plane.push(col);
        }
        values.push(plane);
    }
    let table = HankelTable {
        m,
        mu: (0..=moments.t_max()).map(|t| moments.mu(t).clone()).collect(),
        values,
        singular,
    };
    verify_table(&table)?;
    Ok(table)
}

fn verify_table(table: &HankelTable) -> Result<()> {
    let m = table.m;
    for t in 0..=table.t_max() {
        for s in 0..=table.s_max() {
            if !table.values[t][s][m + 1].is_zero() {
                return Err(Error::InvariantViolation(format!("H_{}^({s},{t}) != 0", m + 1)));
            }
            for k in 1..=m {
                if let Some((lhs, rhs)) = table.jacobi_s(k, s, t) {
                    if lhs != rhs {
                        return Err(Error::InvariantViolation(format!(
                            "s-direction Jacobi identity fails at k={k}, s={s}, t={t}"
                        )));
                    }
                    let divisor = &table.values[t][s + 2][k - 1];
                    if !divisor.is_zero() {
                        let h = |k: usize, s: usize| &table.values[t][s][k];
                        let implied = (h(k, s + 2) * h(k, s) - h(k, s + 1) * h(k, s + 1)) / divisor;
                        if &implied != h(k + 1, s) {
                            return Err(Error::InvariantViolation(format!(
                                "recurrence value of H_{}^({s},{t}) disagrees with elimination",
                                k + 1
                            )));
                        }
                    }
                }
                if let Some((lhs, rhs)) = table.jacobi_t(k, s, t) {
                    if lhs != rhs {
                        return Err(Error::InvariantViolation(format!(
                            "t-direction Jacobi identity fails at k={k}, s={s}, t={t}"
                        )));
                    }
                }
            }
        }
    }
    Ok(())
}
