//! The qd, shifted qd and dLV sweeps, and the iterative eigenvalue and
//! singular value solvers built on them.

use std::fmt;
use std::str::FromStr;

use num::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{factor_lr, BidiagonalMatrix, TridiagonalMatrix};
use crate::scalar::Scalar;
use crate::solutions::{coupling, LvState, ShiftedTodaState, TodaState};

/// One progressive sweep of the autonomous discrete Toda equation.
pub fn qd_step<S: Scalar>(state: &TodaState<S>) -> Result<TodaState<S>> {
    let (q, e) = sweep(&state.q, &state.e, &S::zero())?;
    Ok(TodaState { q, e })
}

/// One sweep of the non-autonomous discrete Toda equation, moving the shift
/// from `state.mu` to `mu_next`.
pub fn shifted_qd_step<S: Scalar>(
    state: &ShiftedTodaState<S>,
    mu_next: S,
) -> Result<ShiftedTodaState<S>> {
    let (q, e) = sweep(&state.q, &state.e, &(state.mu.clone() - mu_next.clone()))?;
    Ok(ShiftedTodaState { q, e, mu: mu_next })
}

/// `q'_k = q_k + e_k + shift - e'_{k-1}`, `e'_k = e_k q_{k+1} / q'_k`,
/// carried in differential form: `d_k = q_k + shift - e'_{k-1}` obeys
/// `d_{k+1} = d_k q_{k+1} / q'_k + shift`, which avoids cancellation.
fn sweep<S: Scalar>(q: &[S], e: &[S], shift: &S) -> Result<(Vec<S>, Vec<S>)> {
    let m = q.len();
    let mut qn = Vec::with_capacity(m);
    let mut en: Vec<S> = Vec::with_capacity(m.saturating_sub(1));
    let mut d = q[0].clone() + shift.clone();
    for k in 0..m {
        let qk = d.clone() + coupling(e, k + 1);
        if k + 1 < m {
            if qk.is_zero() {
                return Err(Error::Breakdown { index: k + 1 });
            }
            let ratio = q[k + 1].clone() / qk.clone();
            en.push(e[k].clone() * ratio.clone());
            d = d * ratio + shift.clone();
        }
        qn.push(qk);
    }
    Ok((qn, en))
}

/// One sweep of the discrete Lotka-Volterra system with step parameters
/// `state.delta` (old) and `delta_next` (new).
pub fn lv_step<S: Scalar>(state: &LvState<S>, delta_next: S) -> Result<LvState<S>> {
    let n = state.u.len();
    let mut u: Vec<S> = Vec::with_capacity(n);
    for k in 1..=n {
        let prev = if k == 1 { S::zero() } else { u[k - 2].clone() };
        let denom = S::one() + delta_next.clone() * prev;
        if denom.is_zero() {
            return Err(Error::Breakdown { index: k });
        }
        let num = state.u[k - 1].clone() * (S::one() + state.delta.clone() * state.u_at(k + 1));
        u.push(num / denom);
    }
    Ok(LvState { u, delta: delta_next })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ShiftStrategy {
    None,
    Constant(f64),
    JohnsonBound,
    Aggressive,
}

impl FromStr for ShiftStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(ShiftStrategy::None),
            "johnson" | "johnson-bound" => Ok(ShiftStrategy::JohnsonBound),
            "aggressive" => Ok(ShiftStrategy::Aggressive),
            other => match other.strip_prefix("constant:") {
                Some(v) => v
                    .parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .map(ShiftStrategy::Constant)
                    .ok_or_else(|| Error::Config(format!("bad constant shift {v:?}"))),
                None => Err(Error::Config(format!(
                    "unknown shift strategy {other:?}, expected none|constant:S|johnson|aggressive"
                ))),
            },
        }
    }
}

impl fmt::Display for ShiftStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ShiftStrategy::None => f.write_str("none"),
            ShiftStrategy::Constant(s) => write!(f, "constant:{s}"),
            ShiftStrategy::JohnsonBound => f.write_str("johnson"),
            ShiftStrategy::Aggressive => f.write_str("aggressive"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    pub tol: f64,
    /// `None` means `10000 * m`.
    pub max_iters: Option<usize>,
    pub shift: ShiftStrategy,
    pub record_trace: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { tol: 1e-12, max_iters: None, shift: ShiftStrategy::None, record_trace: false }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::Config(format!("tolerance must be positive, got {}", self.tol)));
        }
        if self.max_iters == Some(0) {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        Ok(())
    }

    fn iteration_limit(&self, m: usize) -> usize {
        self.max_iters.unwrap_or(10_000 * m)
    }

    /// The tolerance actually used: never below a few ulps of `S`.
    fn effective_tol<S: Float>(&self) -> S {
        let floor = S::epsilon() * S::from(4.0).unwrap_or_else(S::one);
        S::from(self.tol).unwrap_or(floor).max(floor)
    }
}

/// Gershgorin lower bound for the smallest eigenvalue of the tridiagonal
/// built from `(q, e)`; uses the symmetrized rows when every `q_k e_k > 0`.
fn gershgorin_lower<S: Scalar + Float>(q: &[S], e: &[S]) -> S {
    let m = q.len();
    let products: Vec<S> = (1..m).map(|k| q[k - 1] * e[k - 1]).collect();
    let symmetric = products.iter().all(|p| *p > S::zero());
    let off = |k: usize| -> S {
        // Coupling between rows k and k+1 (0-based), as seen from either row.
        if symmetric {
            products[k].sqrt()
        } else {
            S::zero()
        }
    };
    (0..m)
        .map(|k| {
            let diag = q[k] + coupling(e, k);
            let radius = if symmetric {
                (if k > 0 { off(k - 1) } else { S::zero() })
                    + if k + 1 < m { off(k) } else { S::zero() }
            } else {
                (if k > 0 { Float::abs(products[k - 1]) } else { S::zero() })
                    + if k + 1 < m { S::one() } else { S::zero() }
            };
            diag - radius
        })
        .fold(S::infinity(), Float::min)
}

/// Next absolute shift `mu^{(t+1)}` for the shifted sweep.
pub fn choose_shift<S: Scalar + Float>(state: &ShiftedTodaState<S>, strategy: ShiftStrategy, tol: S) -> S {
    match strategy {
        ShiftStrategy::None => S::zero(),
        ShiftStrategy::Constant(sigma) => S::from(sigma).unwrap_or_else(S::zero),
        ShiftStrategy::JohnsonBound => {
            let mut step = gershgorin_lower(&state.q, &state.e).max(S::zero());
            // Keep the new Q_k nonzero wherever the sweep divides by it.
            let m = state.q.len();
            let guard = state.q[..m - 1]
                .iter()
                .copied()
                .filter(|v| *v > S::zero())
                .fold(S::infinity(), Float::min);
            if step >= guard {
                step = guard / (S::one() + S::one());
            }
            state.mu + step
        }
        ShiftStrategy::Aggressive => {
            let smallest = state.q.iter().copied().fold(S::infinity(), Float::min);
            state.mu + smallest - tol * Float::abs(smallest)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Deflation {
    pub index: usize,
    pub iteration: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub values: Vec<f64>,
    pub iterations: usize,
    #[serde(rename = "deflations")]
    pub deflation_log: Vec<Deflation>,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TraceKind {
    #[serde(rename = "q")]
    Q,
    #[serde(rename = "e")]
    E,
    #[serde(rename = "Q")]
    ShiftedQ,
    #[serde(rename = "E")]
    ShiftedE,
    #[serde(rename = "u")]
    U,
    #[serde(rename = "mu")]
    Mu,
    #[serde(rename = "delta")]
    Delta,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iter: usize,
    pub kind: TraceKind,
    pub index: usize,
    pub value: f64,
}

/// Per-iteration values of the active variables.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
}

impl Trace {
    fn push_all<S: Scalar>(&mut self, iter: usize, kind: TraceKind, values: &[S]) {
        for (i, v) in values.iter().enumerate() {
            self.records.push(TraceRecord {
                iter,
                kind,
                index: i + 1,
                value: v.to_f64().unwrap_or(f64::NAN),
            });
        }
    }

    fn push_one<S: Scalar>(&mut self, iter: usize, kind: TraceKind, value: &S) {
        self.records.push(TraceRecord {
            iter,
            kind,
            index: 0,
            value: value.to_f64().unwrap_or(f64::NAN),
        });
    }

    pub fn iterations(&self) -> usize {
        self.records.iter().map(|r| r.iter).max().unwrap_or(0)
    }

    /// `(iter, value)` pairs of one variable in iteration order.
    pub fn series(&self, kind: TraceKind, index: usize) -> Vec<(usize, f64)> {
        self.records
            .iter()
            .filter(|r| r.kind == kind && r.index == index)
            .map(|r| (r.iter, r.value))
            .collect()
    }

    fn has(&self, kind: TraceKind) -> bool {
        self.records.iter().any(|r| r.kind == kind)
    }

    fn max_index(&self, kind: TraceKind) -> usize {
        self.records.iter().filter(|r| r.kind == kind).map(|r| r.index).max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub spectrum: Spectrum,
    pub trace: Option<Trace>,
}

fn sort_descending_modulus(values: &mut [f64]) {
    values.sort_by(|a, b| b.abs().total_cmp(&a.abs()).then(b.total_cmp(a)));
}

fn check_finite<S: Scalar + Float>(values: &[S]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::Breakdown { index: i + 1 }),
        None => Ok(()),
    }
}

/// Eigenvalues of a tridiagonal matrix by qd or shifted qd iteration with
/// trailing deflation.
pub fn solve_eigen<S: Scalar + Float>(
    matrix: &TridiagonalMatrix<S>,
    opts: &SolveOptions,
) -> Result<Solution> {
    opts.validate()?;
    let start = factor_lr(matrix)?.state;
    let m = start.m();
    let limit = opts.iteration_limit(m);
    let tol: S = opts.effective_tol();
    let shifted = opts.shift != ShiftStrategy::None;
    let (q_kind, e_kind) = if shifted {
        (TraceKind::ShiftedQ, TraceKind::ShiftedE)
    } else {
        (TraceKind::Q, TraceKind::E)
    };

    let mut state = ShiftedTodaState { q: start.q, e: start.e, mu: S::zero() };
    let mut trace = opts.record_trace.then(Trace::default);
    let record = |trace: &mut Option<Trace>, iter: usize, st: &ShiftedTodaState<S>| {
        if let Some(tr) = trace.as_mut() {
            tr.push_all(iter, q_kind, &st.q);
            tr.push_all(iter, e_kind, &st.e);
            if shifted {
                tr.push_one(iter, TraceKind::Mu, &st.mu);
            }
        }
    };
    record(&mut trace, 0, &state);

    let mut found: Vec<f64> = Vec::with_capacity(m);
    let mut log = Vec::new();
    let mut iterations = 0;
    loop {
        while state.q.len() > 1 {
            let n = state.q.len();
            let (a, b) = (state.q[n - 2], state.q[n - 1]);
            let coupling = Float::abs(state.e[n - 2]);
            // The coupling moves the pair by about e * q / (a - b), so a
            // close pair needs it smaller than the plain relative test.
            let small = coupling <= tol * (Float::abs(a) + Float::abs(b))
                && coupling <= tol * Float::abs(a - b);
            if !small {
                break;
            }
            let value = state.q[n - 1] + state.mu;
            found.push(value.to_f64().unwrap_or(f64::NAN));
            log.push(Deflation { index: n, iteration: iterations });
            state.q.pop();
            state.e.pop();
        }
        if state.q.len() == 1 {
            found.push((state.q[0] + state.mu).to_f64().unwrap_or(f64::NAN));
            log.push(Deflation { index: 1, iteration: iterations });
            break;
        }
        if iterations >= limit {
            found.extend(state.q.iter().rev().map(|v| (*v + state.mu).to_f64().unwrap_or(f64::NAN)));
            sort_descending_modulus(&mut found);
            return Err(Error::NonConvergence {
                partial: Box::new(Spectrum {
                    values: found,
                    iterations,
                    deflation_log: log,
                    converged: false,
                }),
            });
        }
        let mu_next = choose_shift(&state, opts.shift, tol);
        state = shifted_qd_step(&state, mu_next)?;
        check_finite(&state.q)?;
        check_finite(&state.e)?;
        iterations += 1;
        record(&mut trace, iterations, &state);
    }
    sort_descending_modulus(&mut found);
    Ok(Solution {
        spectrum: Spectrum { values: found, iterations, deflation_log: log, converged: true },
        trace,
    })
}

/// `delta` used by the singular value solver for a given strategy.
fn singular_delta<S: Scalar + Float>(q: &[S], e: &[S], opts: &SolveOptions, tol: S) -> Result<S> {
    match opts.shift {
        ShiftStrategy::None => Ok(S::one()),
        ShiftStrategy::Constant(sigma) => {
            if sigma == 0.0 {
                return Err(Error::ZeroShift { t: 0 });
            }
            Ok(-S::one() / S::from(sigma).unwrap_or_else(S::one))
        }
        strategy => {
            let st = ShiftedTodaState { q: q.to_vec(), e: e.to_vec(), mu: S::zero() };
            let mu = choose_shift(&st, strategy, tol);
            Ok(if mu > S::zero() { -S::one() / mu } else { S::one() })
        }
    }
}

/// Singular values of an upper bidiagonal matrix by dLV iteration on the
/// qd data `q_k = b_k^2`, `e_k = c_k^2` of `B^T B`.
pub fn solve_singular<S: Scalar + Float>(
    bidiag: &BidiagonalMatrix<S>,
    opts: &SolveOptions,
) -> Result<Solution> {
    opts.validate()?;
    if let Some(i) = bidiag.diag.iter().position(|b| b.is_zero()) {
        return Err(Error::ZeroPivot { index: i + 1 });
    }
    if bidiag.diag.iter().chain(&bidiag.sup).any(|v| !v.is_finite()) {
        return Err(Error::InvalidSpectralData("non-finite bidiagonal entry".into()));
    }
    let m = bidiag.n();
    let limit = opts.iteration_limit(m);
    let tol: S = opts.effective_tol();
    let q: Vec<S> = bidiag.diag.iter().map(|b| *b * *b).collect();
    let e: Vec<S> = bidiag.sup.iter().map(|c| *c * *c).collect();
    let delta = singular_delta(&q, &e, opts, tol)?;
    let mut state = crate::solutions::toda_to_lv(&TodaState { q, e }, delta)?;

    let mut trace = opts.record_trace.then(Trace::default);
    let record = |trace: &mut Option<Trace>, iter: usize, st: &LvState<S>| {
        if let Some(tr) = trace.as_mut() {
            tr.push_all(iter, TraceKind::U, &st.u);
            tr.push_one(iter, TraceKind::Delta, &st.delta);
        }
    };
    record(&mut trace, 0, &state);

    let mut found: Vec<S> = Vec::with_capacity(m);
    let mut log = Vec::new();
    let mut iterations = 0;
    let finish = |found: &[S]| -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(found.len());
        for (i, v) in found.iter().enumerate() {
            if *v < S::zero() {
                return Err(Error::Breakdown { index: 2 * (m - i) - 1 });
            }
            out.push(Float::sqrt(*v).to_f64().unwrap_or(f64::NAN));
        }
        out.sort_by(|a, b| b.total_cmp(a));
        Ok(out)
    };
    loop {
        while state.u.len() > 1 {
            let n = state.u.len();
            let (a, b) = (state.u[n - 3], state.u[n - 1]);
            // Same gap-aware test as the qd solver, on e = u_{2k}(1 + delta u_{2k-1}).
            let coupling = Float::abs(state.u[n - 2] * (S::one() + state.delta * a));
            let small = Float::abs(state.u[n - 2]) <= tol * (Float::abs(a) + Float::abs(b))
                && coupling <= tol * Float::abs(a - b);
            if !small {
                break;
            }
            found.push(state.u[n - 1]);
            log.push(Deflation { index: n.div_ceil(2), iteration: iterations });
            state.u.truncate(n - 2);
        }
        if state.u.len() == 1 {
            found.push(state.u[0]);
            log.push(Deflation { index: 1, iteration: iterations });
            break;
        }
        if iterations >= limit {
            let mut partial = found.clone();
            partial.extend((0..state.u.len()).step_by(2).rev().map(|i| state.u[i]));
            let values = partial
                .iter()
                .map(|v| Float::sqrt(Float::abs(*v)).to_f64().unwrap_or(f64::NAN))
                .collect::<Vec<_>>();
            let mut values = values;
            values.sort_by(|a, b| b.total_cmp(a));
            return Err(Error::NonConvergence {
                partial: Box::new(Spectrum {
                    values,
                    iterations,
                    deflation_log: log,
                    converged: false,
                }),
            });
        }
        let d = state.delta;
        state = lv_step(&state, d)?;
        check_finite(&state.u)?;
        iterations += 1;
        record(&mut trace, iterations, &state);
    }
    let values = finish(&found)?;
    Ok(Solution {
        spectrum: Spectrum { values, iterations, deflation_log: log, converged: true },
        trace,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// Unshifted qd: `e_k` decays like `(lambda_{k+1}/lambda_k)^s`.
    SDirection,
    /// Shifted qd or dLV: decay governed by `|lambda_{k+1} - mu*| / |lambda_k - mu*|`.
    TDirection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    pub index: usize,
    /// Geometric mean of successive `|x^{(i+1)} / x^{(i)}|` over the last
    /// half of the recorded series.
    pub empirical: f64,
    /// Constant `C` in the fit `|x^{(i)}| ~ C r^i`.
    pub prefactor: f64,
    pub predicted: Option<f64>,
    pub deviation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub regime: Regime,
    pub variable: String,
    pub iterations: usize,
    pub mu_star: Option<f64>,
    pub spectrum: Vec<f64>,
    pub rates: Vec<RateEstimate>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub trace: Option<String>,
}

pub const MIN_TRACE_ITERATIONS: usize = 10;

fn last_value(trace: &Trace, kind: TraceKind, index: usize) -> Option<f64> {
    trace.series(kind, index).last().map(|&(_, v)| v)
}

/// Empirical decay rates of the coupling variables in a trace, compared with
/// the rates implied by the spectrum.
pub fn convergence_report(trace: &Trace, known_spectrum: Option<&[f64]>) -> Result<ConvergenceReport> {
    let (regime, kind, main_kind) = if trace.has(TraceKind::E) || trace.has(TraceKind::Q) {
        (Regime::SDirection, TraceKind::E, TraceKind::Q)
    } else if trace.has(TraceKind::ShiftedE) || trace.has(TraceKind::ShiftedQ) {
        (Regime::TDirection, TraceKind::ShiftedE, TraceKind::ShiftedQ)
    } else if trace.has(TraceKind::U) {
        (Regime::TDirection, TraceKind::U, TraceKind::U)
    } else {
        return Err(Error::InsufficientTrace { iterations: 0, required: MIN_TRACE_ITERATIONS });
    };
    let iterations = trace.iterations();
    let mu_star = match kind {
        TraceKind::ShiftedE => Some(trace.series(TraceKind::Mu, 0).last().map_or(0.0, |p| p.1)),
        TraceKind::U => trace
            .series(TraceKind::Delta, 0)
            .last()
            .map(|&(_, d)| if d != 0.0 { -1.0 / d } else { f64::INFINITY }),
        _ => None,
    };

    let (m, couplings): (usize, Vec<usize>) = if kind == TraceKind::U {
        let n = trace.max_index(TraceKind::U);
        let m = n.div_ceil(2);
        (m, (1..m).map(|k| 2 * k).collect())
    } else {
        let m = trace.max_index(main_kind);
        (m, (1..m).collect())
    };

    let spectrum: Vec<f64> = match known_spectrum {
        Some(s) => s.to_vec(),
        None => (1..=m)
            .filter_map(|k| match kind {
                TraceKind::U => last_value(trace, TraceKind::U, 2 * k - 1),
                TraceKind::ShiftedE => {
                    last_value(trace, main_kind, k).map(|v| v + mu_star.unwrap_or(0.0))
                }
                _ => last_value(trace, main_kind, k),
            })
            .collect(),
    };

    let variable = match kind {
        TraceKind::E => "e",
        TraceKind::ShiftedE => "E",
        _ => "u",
    }
    .to_string();

    if couplings.is_empty() {
        return Ok(ConvergenceReport {
            regime,
            variable,
            iterations,
            mu_star,
            spectrum,
            rates: Vec::new(),
            trace: None,
        });
    }
    if iterations < MIN_TRACE_ITERATIONS {
        return Err(Error::InsufficientTrace { iterations, required: MIN_TRACE_ITERATIONS });
    }

    // Order the spectrum the way the coupling variables separate it.
    let mut ordered = spectrum.clone();
    let centre = mu_star.unwrap_or(0.0);
    ordered.sort_by(|a, b| (b - centre).abs().total_cmp(&(a - centre).abs()));

    let mut rates = Vec::new();
    for (k, &index) in couplings.iter().enumerate() {
        let series: Vec<(usize, f64)> =
            trace.series(kind, index).into_iter().filter(|&(_, v)| v != 0.0 && v.is_finite()).collect();
        if series.len() < 3 {
            continue;
        }
        let tail = &series[series.len() / 2..];
        let logs: Vec<(f64, f64)> = tail.iter().map(|&(i, v)| (i as f64, v.abs().ln())).collect();
        let steps = logs.windows(2).map(|w| (w[1].1 - w[0].1, w[1].0 - w[0].0));
        let (dl, di) = steps.fold((0.0, 0.0), |acc, (dl, di)| (acc.0 + dl, acc.1 + di));
        if di == 0.0 {
            continue;
        }
        let log_r = dl / di;
        let empirical = log_r.exp();
        let log_c = logs.iter().map(|&(i, l)| l - i * log_r).sum::<f64>() / logs.len() as f64;
        let predicted = match (ordered.get(k), ordered.get(k + 1)) {
            (Some(a), Some(b)) if (a - centre) != 0.0 => Some(((b - centre) / (a - centre)).abs()),
            _ => None,
        };
        let deviation = predicted.map(|p| (empirical - p).abs() / p);
        rates.push(RateEstimate {
            index: k + 1,
            empirical,
            prefactor: log_c.exp(),
            predicted,
            deviation,
        });
    }
    Ok(ConvergenceReport { regime, variable, iterations, mu_star, spectrum, rates, trace: None })
}
