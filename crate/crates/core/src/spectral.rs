//! Spectral data, shift schedules and the two-time moment sequence
//! `f_s^{(t)} = sum_i c_i^{(t)} lambda_i^s`.
//!
//! The moment table is the single source from which every Hankel
//! determinant, Hadamard polynomial and closed-form lattice solution in this
//! crate is built. Two relations tie it together and are checked exactly
//! whenever a table is constructed:
//!
//! * the order-`m` recurrence `f_{s+m} + a_1 f_{s+m-1} + ... + a_m f_s = 0`
//!   with `a_i` the coefficients of `prod (z - lambda_i)`;
//! * the shift relation `f_s^{(t+1)} = f_{s+1}^{(t)} - mu^{(t)} f_s^{(t)}`.

use num::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::{serde_rational, Rational};

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralData {
    lambdas: Vec<Rational>,
    weights: Vec<Rational>,
}

impl SpectralData {
    pub fn new(lambdas: Vec<Rational>, weights: Vec<Rational>) -> Result<Self> {
        if lambdas.is_empty() {
            return Err(Error::InvalidSpectralData("m must be at least 1".into()));
        }
        if lambdas.len() != weights.len() {
            return Err(Error::InvalidSpectralData(format!(
                "{} eigenvalues but {} weights",
                lambdas.len(),
                weights.len()
            )));
        }
        check_distinct(&lambdas)?;
        if let Some(i) = weights.iter().position(Zero::is_zero) {
            return Err(Error::InvalidSpectralData(format!("weight c_{} is zero", i + 1)));
        }
        Ok(Self { lambdas, weights })
    }

    pub fn m(&self) -> usize {
        self.lambdas.len()
    }

    pub fn lambdas(&self) -> &[Rational] {
        &self.lambdas
    }

    pub fn weights(&self) -> &[Rational] {
        &self.weights
    }

    /// Weights after `t` shift steps: `c_i^{(t)} = c_i^{(0)} prod_{l<t} (lambda_i - mu^{(l)})`.
    pub fn weights_at(&self, shifts: &ShiftSchedule, t: usize) -> Vec<Rational> {
        self.lambdas
            .iter()
            .zip(&self.weights)
            .map(|(lambda, c)| {
                (0..t).fold(c.clone(), |acc, l| acc * (lambda - shifts.mu(l)))
            })
            .collect()
    }

    pub fn with_weights(&self, weights: Vec<Rational>) -> Result<Self> {
        Self::new(self.lambdas.clone(), weights)
    }
}

fn check_distinct(lambdas: &[Rational]) -> Result<()> {
    for i in 0..lambdas.len() {
        for j in i + 1..lambdas.len() {
            if lambdas[i] == lambdas[j] {
                return Err(Error::DuplicateEigenvalue { i: i + 1, j: j + 1 });
            }
        }
    }
    Ok(())
}

/// `mu^{(0)}, mu^{(1)}, ...`; the last listed value repeats forever, so the
/// limit `mu*` always exists.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftSchedule {
    mu: Vec<Rational>,
}

impl ShiftSchedule {
    pub fn new(mu: Vec<Rational>) -> Result<Self> {
        if mu.is_empty() {
            return Err(Error::InvalidSpectralData("shift schedule is empty".into()));
        }
        Ok(Self { mu })
    }

    pub fn constant(mu: Rational) -> Self {
        Self { mu: vec![mu] }
    }

    pub fn zero() -> Self {
        Self::constant(Rational::zero())
    }

    pub fn mu(&self, t: usize) -> Rational {
        self.mu[t.min(self.mu.len() - 1)].clone()
    }

    pub fn listed(&self) -> &[Rational] {
        &self.mu
    }

    pub fn limit(&self) -> &Rational {
        self.mu.last().expect("non-empty by construction")
    }

    /// Rejects `mu^{(t)} = lambda_i`, which would zero out `c_i^{(t+1)}`.
    pub fn check_against(&self, spec: &SpectralData) -> Result<()> {
        for (t, mu) in self.mu.iter().enumerate() {
            if let Some(i) = spec.lambdas().iter().position(|l| l == mu) {
                return Err(Error::ShiftCollision { t, index: i + 1 });
            }
        }
        Ok(())
    }

    /// `delta^{(t)} = -1 / mu^{(t)}` for the dLV form.
    pub fn delta(&self, t: usize) -> Result<Rational> {
        let mu = self.mu(t);
        if mu.is_zero() {
            return Err(Error::ZeroShift { t });
        }
        Ok(-mu.recip())
    }
}

/// Monic polynomial `z^m + a_1 z^{m-1} + ... + a_m`.
#[derive(Debug, Clone, PartialEq)]
pub struct CharPoly {
    coeffs: Vec<Rational>,
}

impl CharPoly {
    pub fn from_coeffs(coeffs: Vec<Rational>) -> Self {
        Self { coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len()
    }

    /// `a_1, ..., a_m`.
    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn eval(&self, z: &Rational) -> Rational {
        self.coeffs.iter().fold(Rational::one(), |acc, a| acc * z + a)
    }
}

pub fn char_poly(spec: &SpectralData) -> CharPoly {
    // Ascending coefficient vector of prod (z - lambda_i), leading term last.
    let mut poly = vec![Rational::one()];
    for lambda in spec.lambdas() {
        let mut next = vec![Rational::zero(); poly.len() + 1];
        for (i, c) in poly.iter().enumerate() {
            next[i + 1] += c;
            next[i] -= c * lambda;
        }
        poly = next;
    }
    poly.pop();
    poly.reverse();
    CharPoly { coeffs: poly }
}

pub fn moment(spec: &SpectralData, shifts: &ShiftSchedule, s: usize, t: usize) -> Rational {
    spec.weights_at(shifts, t)
        .iter()
        .zip(spec.lambdas())
        .map(|(c, lambda)| c * num::pow(lambda.clone(), s))
        .sum()
}

/// Inverts the Vandermonde system `f_j = sum_i c_i lambda_i^j`, `j < m`.
pub fn weights_from_initial_moments(lambdas: &[Rational], f0: &[Rational]) -> Result<Vec<Rational>> {
    if lambdas.len() != f0.len() {
        return Err(Error::Dimension(format!(
            "{} eigenvalues but {} initial moments",
            lambdas.len(),
            f0.len()
        )));
    }
    check_distinct(lambdas)?;
    let m = lambdas.len();
    let vandermonde: Vec<Vec<Rational>> = (0..m)
        .map(|j| lambdas.iter().map(|l| num::pow(l.clone(), j)).collect())
        .collect();
    linalg::solve(&vandermonde, f0)
        .ok_or_else(|| Error::InvariantViolation("distinct nodes gave a singular Vandermonde".into()))
}

/// Exact values `f_s^{(t)}` for `0 <= s <= s_max`, `0 <= t <= t_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTable {
    m: usize,
    poly: CharPoly,
    mu: Vec<Rational>,
    /// `values[t][s]`.
    values: Vec<Vec<Rational>>,
}

impl MomentTable {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn s_max(&self) -> usize {
        self.values[0].len() - 1
    }

    pub fn t_max(&self) -> usize {
        self.values.len() - 1
    }

    pub fn char_poly(&self) -> &CharPoly {
        &self.poly
    }

    /// `mu^{(t)}` as used to link row `t` to row `t + 1`.
    pub fn mu(&self, t: usize) -> &Rational {
        &self.mu[t]
    }

    pub fn get(&self, s: usize, t: usize) -> Result<&Rational> {
        self.values
            .get(t)
            .and_then(|row| row.get(s))
            .ok_or_else(|| Error::OutOfRange(format!("moment f_{s}^({t}) not in table")))
    }

    pub fn row(&self, t: usize) -> &[Rational] {
        &self.values[t]
    }

    /// Builds a table from the recurrence alone: `initial` holds
    /// `f_0^{(0)}..f_{m-1}^{(0)}`, later rows follow from the shift relation.
    pub fn from_recurrence(
        poly: &CharPoly,
        initial: &[Rational],
        shifts: &ShiftSchedule,
        s_max: usize,
        t_max: usize,
    ) -> Result<Self> {
        let m = poly.degree();
        if initial.len() != m {
            return Err(Error::Dimension(format!(
                "recurrence of order {m} needs {m} initial moments, got {}",
                initial.len()
            )));
        }
        // Each row needs m + 1 entries to seed the next one.
        let width = s_max.max(m);
        let mut rows = Vec::with_capacity(t_max + 1);
        let mut seed = initial.to_vec();
        for t in 0..=t_max {
            let mut full = seed.clone();
            while full.len() < width + 1 {
                let n = full.len();
                let next: Rational = -poly
                    .coeffs()
                    .iter()
                    .enumerate()
                    .map(|(i, a)| a * &full[n - 1 - i])
                    .sum::<Rational>();
                full.push(next);
            }
            let mu = shifts.mu(t);
            seed = (0..m).map(|s| &full[s + 1] - &mu * &full[s]).collect();
            full.truncate(s_max + 1);
            rows.push(full);
        }
        let table = Self {
            m,
            poly: poly.clone(),
            mu: (0..=t_max).map(|t| shifts.mu(t)).collect(),
            values: rows,
        };
        table.verify()?;
        Ok(table)
    }

    /// Exact check of both defining relations at every cell where they apply.
    pub fn verify(&self) -> Result<()> {
        let m = self.m;
        let a = self.poly.coeffs();
        for (t, row) in self.values.iter().enumerate() {
            for s in 0..row.len().saturating_sub(m) {
                let lhs: Rational = &row[s + m]
                    + (1..=m).map(|i| &a[i - 1] * &row[s + m - i]).sum::<Rational>();
                if !lhs.is_zero() {
                    return Err(Error::InvariantViolation(format!(
                        "linear recurrence fails at f_{s}^({t})"
                    )));
                }
            }
            if let Some(next) = self.values.get(t + 1) {
                for s in 0..row.len() - 1 {
                    if next[s] != &row[s + 1] - &self.mu[t] * &row[s] {
                        return Err(Error::InvariantViolation(format!(
                            "shift relation fails at f_{s}^({})",
                            t + 1
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

pub fn build_moment_table(
    spec: &SpectralData,
    shifts: &ShiftSchedule,
    s_max: usize,
    t_max: usize,
) -> Result<MomentTable> {
    let powers: Vec<Vec<Rational>> = spec
        .lambdas()
        .iter()
        .map(|l| {
            std::iter::successors(Some(Rational::one()), |p| Some(p * l))
                .take(s_max + 1)
                .collect()
        })
        .collect();
    let values = (0..=t_max)
        .map(|t| {
            let c = spec.weights_at(shifts, t);
            (0..=s_max)
                .map(|s| c.iter().zip(&powers).map(|(ci, p)| ci * &p[s]).sum())
                .collect()
        })
        .collect();
    let table = MomentTable {
        m: spec.m(),
        poly: char_poly(spec),
        mu: (0..=t_max).map(|t| shifts.mu(t)).collect(),
        values,
    };
    table.verify()?;
    Ok(table)
}

/// JSON document `{"lambdas": [...], "weights": [...], "mu": [...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralDocument {
    #[serde(with = "serde_rational::vec")]
    pub lambdas: Vec<Rational>,
    #[serde(with = "serde_rational::vec")]
    pub weights: Vec<Rational>,
    #[serde(with = "serde_rational::vec", default = "zero_shift")]
    pub mu: Vec<Rational>,
}

fn zero_shift() -> Vec<Rational> {
    vec![Rational::zero()]
}

impl SpectralDocument {
    pub fn from_parts(spec: &SpectralData, shifts: &ShiftSchedule) -> Self {
        Self {
            lambdas: spec.lambdas().to_vec(),
            weights: spec.weights().to_vec(),
            mu: shifts.listed().to_vec(),
        }
    }

    /// Validates and splits into data and schedule, rejecting shift collisions.
    pub fn into_parts(self) -> Result<(SpectralData, ShiftSchedule)> {
        let spec = SpectralData::new(self.lambdas, self.weights)?;
        let shifts = ShiftSchedule::new(self.mu)?;
        shifts.check_against(&spec)?;
        Ok((spec, shifts))
    }
}

/// Canonical test fixtures.
pub mod fixtures {
    use super::*;
    use crate::scalar::{int, ratio};

    /// `m = 1`, `lambda = 3`, `c = 1`, `mu = 0`.
    pub fn e1() -> (SpectralData, ShiftSchedule) {
        let spec = SpectralData::new(vec![int(3)], vec![int(1)]).expect("valid fixture");
        (spec, ShiftSchedule::zero())
    }

    /// `m = 2`, `lambda = (2, 1)`, `c = (1, 1)`, `mu^{(0)} = 1/2`, then `0`.
    pub fn e2() -> (SpectralData, ShiftSchedule) {
        let spec =
            SpectralData::new(vec![int(2), int(1)], vec![int(1), int(1)]).expect("valid fixture");
        let shifts = ShiftSchedule::new(vec![ratio(1, 2), int(0)]).expect("non-empty");
        (spec, shifts)
    }
}
