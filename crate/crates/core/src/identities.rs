//! Exact verification of the determinant, polynomial and lattice identities
//! satisfied by a moment sequence, over a window of `(s, t)` cells.

use std::cell::RefCell;
use std::collections::HashMap;

use num::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hankel::{build_hankel_table, hankel_poly_eval, Cell, HankelTable};
use crate::lattice::{lv_step, qd_step, shifted_qd_step};
use crate::scalar::{format_rational, Rational};
use crate::solutions::{
    lv_from_hankel_at, shifted_from_hankel, toda_from_hankel, toda_to_lv, LvState, ShiftedTodaState,
    TodaState,
};
use crate::spectral::MomentTable;

/// Cells `0 <= s <= s_max`, `0 <= t <= t_max` at which identities are checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub s_max: usize,
    pub t_max: usize,
}

impl Window {
    /// Moment table extent `(s_max, t_max)` the checks in this window read.
    pub fn required_moments(&self, m: usize) -> (usize, usize) {
        (self.s_max + 2 * m + 2, self.t_max + 2)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub k: usize,
    pub s: usize,
    pub t: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub z: Option<String>,
    pub lhs: String,
    pub rhs: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityResult {
    pub name: String,
    pub passed: bool,
    pub cells_checked: usize,
    pub skipped: usize,
    pub failed: usize,
    /// The first few failing cells.
    pub failures: Vec<Witness>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub seed: u64,
    pub window: Window,
    pub samples: Vec<String>,
    pub singular_cells: Vec<Cell>,
    pub identities: Vec<IdentityResult>,
}

impl IdentityReport {
    pub fn all_passed(&self) -> bool {
        self.identities.iter().all(|r| r.passed)
    }

    pub fn get(&self, name: &str) -> Option<&IdentityResult> {
        self.identities.iter().find(|r| r.name == name)
    }
}

const MAX_WITNESSES: usize = 5;

/// Random exact sample points `p/q`, `|p| <= 20`, `1 <= q <= 9`.
pub fn sample_points(count: usize, seed: u64) -> Vec<Rational> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| crate::scalar::ratio(rng.gen_range(-20..=20), rng.gen_range(1..=9)))
        .collect()
}

pub fn check_identities(
    moments: &MomentTable,
    window: Window,
    samples: usize,
    seed: u64,
) -> Result<IdentityReport> {
    let table = build_hankel_table(moments)?;
    check_identities_with_table(moments, &table, window, samples, seed)
}

/// As [`check_identities`] but against a supplied determinant table, which
/// may have been altered.
pub fn check_identities_with_table(
    moments: &MomentTable,
    table: &HankelTable,
    window: Window,
    samples: usize,
    seed: u64,
) -> Result<IdentityReport> {
    let m = table.m();
    let (need_s, need_t) = window.required_moments(m);
    if moments.s_max() < need_s || moments.t_max() < need_t {
        return Err(Error::OutOfRange(format!(
            "window s <= {}, t <= {} needs moments up to s = {need_s}, t = {need_t}",
            window.s_max, window.t_max
        )));
    }
    let zs = sample_points(samples, seed);
    let ctx = Context::new(moments, table);
    let mut results = Vec::new();
    for check in CHECKS {
        results.push(ctx.run(check, window, &zs)?);
    }
    Ok(IdentityReport {
        seed,
        window,
        samples: zs.iter().map(format_rational).collect(),
        singular_cells: table.singular_cells().to_vec(),
        identities: results,
    })
}

type Pair = Option<(Rational, Rational)>;

/// Range of `k` relative to `m` for one identity.
#[derive(Clone, Copy)]
enum Ks {
    /// `lo..=m + hi_offset`, with `hi_offset` possibly negative.
    Span(usize, isize),
    /// `lo..=2m + hi_offset`.
    Double(usize, isize),
}

struct Check {
    name: &'static str,
    uses_z: bool,
    ks: Ks,
    eval: fn(&Context, usize, usize, usize, &Rational) -> Result<Pair>,
}

struct Context<'a> {
    moments: &'a MomentTable,
    table: &'a HankelTable,
    hankel: RefCell<HashMap<(usize, usize, usize, Rational), Rational>>,
    toda: RefCell<HashMap<(usize, usize), Option<TodaState<Rational>>>>,
    shifted: RefCell<HashMap<(usize, usize), Option<ShiftedTodaState<Rational>>>>,
}

fn singular(err: &Error) -> bool {
    matches!(err, Error::SingularConfiguration { .. })
}

fn pair(lhs: Rational, rhs: Rational) -> Result<Pair> {
    Ok(Some((lhs, rhs)))
}

impl<'a> Context<'a> {
    fn new(moments: &'a MomentTable, table: &'a HankelTable) -> Self {
        Self {
            moments,
            table,
            hankel: RefCell::default(),
            toda: RefCell::default(),
            shifted: RefCell::default(),
        }
    }

    fn m(&self) -> usize {
        self.table.m()
    }

    fn mu(&self, t: usize) -> Rational {
        self.table.mu(t).clone()
    }

    /// `H_k^{(s,t)}`, with `H_{-1} = 0`.
    fn h(&self, k: isize, s: usize, t: usize) -> Result<Rational> {
        if k < 0 {
            return Ok(Rational::zero());
        }
        self.table.get(k as usize, s, t).cloned()
    }

    /// Hankel polynomial `H_k^{(s,t)}(z)`, with `H_{-1}(z) = 0`.
    fn hp(&self, k: isize, s: usize, t: usize, z: &Rational) -> Result<Rational> {
        if k < 0 {
            return Ok(Rational::zero());
        }
        let key = (k as usize, s, t, z.clone());
        if let Some(v) = self.hankel.borrow().get(&key) {
            return Ok(v.clone());
        }
        let v = hankel_poly_eval(self.moments, k as usize, s, t, z)?;
        self.hankel.borrow_mut().insert(key, v.clone());
        Ok(v)
    }

    /// Hadamard polynomial, normalized by the table's `H_k`.
    fn had(&self, k: isize, s: usize, t: usize, z: &Rational) -> Result<Rational> {
        if k < 0 {
            return Ok(Rational::zero());
        }
        if k == 0 {
            return Ok(Rational::one());
        }
        let h = self.table.nonzero(k as usize, s, t)?.clone();
        Ok(self.hp(k, s, t, z)? / h)
    }

    fn sym(&self, j: isize, s: usize, t: usize, z: &Rational) -> Result<Rational> {
        if j < 0 {
            return Ok(Rational::zero());
        }
        let z2 = z * z;
        if j % 2 == 0 {
            self.had(j / 2, s, t, &z2)
        } else {
            Ok(z * self.had(j / 2, s + 1, t, &z2)?)
        }
    }

    fn toda(&self, s: usize, t: usize) -> Result<TodaState<Rational>> {
        if let Some(v) = self.toda.borrow().get(&(s, t)) {
            return v.clone().ok_or(Error::SingularConfiguration { k: 0, s, t });
        }
        let v = match toda_from_hankel(self.table, s, t) {
            Ok(v) => Some(v),
            Err(e) if singular(&e) => None,
            Err(e) => return Err(e),
        };
        self.toda.borrow_mut().insert((s, t), v.clone());
        v.ok_or(Error::SingularConfiguration { k: 0, s, t })
    }

    fn shifted(&self, s: usize, t: usize) -> Result<ShiftedTodaState<Rational>> {
        if let Some(v) = self.shifted.borrow().get(&(s, t)) {
            return v.clone().ok_or(Error::SingularConfiguration { k: 0, s, t });
        }
        let v = match shifted_from_hankel(self.table, s, t) {
            Ok(v) => Some(v),
            Err(e) if singular(&e) => None,
            Err(e) => return Err(e),
        };
        self.shifted.borrow_mut().insert((s, t), v.clone());
        v.ok_or(Error::SingularConfiguration { k: 0, s, t })
    }

    /// `q_k`; `k` in `1..=m`.
    fn q(&self, k: usize, s: usize, t: usize) -> Result<Rational> {
        Ok(self.toda(s, t)?.q[k - 1].clone())
    }

    /// `e_k` with `e_0 = e_m = 0`.
    fn e(&self, k: usize, s: usize, t: usize) -> Result<Rational> {
        if k == 0 || k >= self.m() {
            return Ok(Rational::zero());
        }
        Ok(self.toda(s, t)?.e[k - 1].clone())
    }

    fn big_q(&self, k: usize, s: usize, t: usize) -> Result<Rational> {
        Ok(self.shifted(s, t)?.q[k - 1].clone())
    }

    fn big_e(&self, k: usize, s: usize, t: usize) -> Result<Rational> {
        if k == 0 || k >= self.m() {
            return Ok(Rational::zero());
        }
        Ok(self.shifted(s, t)?.e[k - 1].clone())
    }

    /// `v_{2k-1} = q_k`, `v_{2k} = e_k`, `v_0 = v_{2m} = 0`.
    fn v(&self, k: usize, s: usize, t: usize) -> Result<Rational> {
        if k % 2 == 1 {
            self.q(k.div_ceil(2), s, t)
        } else {
            self.e(k / 2, s, t)
        }
    }

    /// `V_{2k-1} = Q_k^{(s,t)}`, `V_{2k} = Q_k^{(s+1,t)}`.
    fn big_v(&self, k: usize, s: usize, t: usize) -> Result<Rational> {
        if k % 2 == 1 {
            self.big_q(k.div_ceil(2), s, t)
        } else {
            self.big_q(k / 2, s + 1, t)
        }
    }

    /// dLV variables at `(s, t)`; `None` when `mu^{(t)} = 0`.
    fn lv(&self, s: usize, t: usize) -> Result<Option<LvState<Rational>>> {
        if self.table.mu(t).is_zero() {
            return Ok(None);
        }
        lv_from_hankel_at(self.table, s, t).map(Some)
    }

    fn run(&self, check: &Check, window: Window, zs: &[Rational]) -> Result<IdentityResult> {
        let m = self.m() as isize;
        let (lo, hi) = match check.ks {
            Ks::Span(lo, off) => (lo as isize, m + off),
            Ks::Double(lo, off) => (lo as isize, 2 * m + off),
        };
        let zero = [Rational::zero()];
        let points: &[Rational] = if check.uses_z { zs } else { &zero };
        let mut result = IdentityResult {
            name: check.name.to_string(),
            passed: true,
            cells_checked: 0,
            skipped: 0,
            failed: 0,
            failures: Vec::new(),
        };
        for t in 0..=window.t_max {
            for s in 0..=window.s_max {
                for k in lo..=hi {
                    for z in points {
                        match (check.eval)(self, k as usize, s, t, z) {
                            Ok(None) => {}
                            Ok(Some((lhs, rhs))) => {
                                result.cells_checked += 1;
                                if lhs != rhs {
                                    result.passed = false;
                                    result.failed += 1;
                                    if result.failures.len() < MAX_WITNESSES {
                                        result.failures.push(Witness {
                                            k: k as usize,
                                            s,
                                            t,
                                            z: check.uses_z.then(|| format_rational(z)),
                                            lhs: format_rational(&lhs),
                                            rhs: format_rational(&rhs),
                                        });
                                    }
                                }
                            }
                            Err(e) if singular(&e) => result.skipped += 1,
                            Err(e) => return Err(e),
                        }
                    }
                }
            }
        }
        Ok(result)
    }
}

fn ik(k: usize) -> isize {
    k as isize
}

const CHECKS: &[Check] = &[
    Check {
        name: "hankel-rank",
        uses_z: false,
        ks: Ks::Span(1, 1),
        eval: |c, k, s, t, _| {
            if k != c.m() + 1 {
                return Ok(None);
            }
            pair(c.h(ik(k), s, t)?, Rational::zero())
        },
    },
    Check {
        name: "jacobi-s",
        uses_z: false,
        ks: Ks::Span(1, 0),
        eval: |c, k, s, t, _| Ok(c.table.jacobi_s(k, s, t)),
    },
    Check {
        name: "jacobi-t",
        uses_z: false,
        ks: Ks::Span(1, 0),
        eval: |c, k, s, t, _| Ok(c.table.jacobi_t(k, s, t)),
    },
    Check {
        name: "hadamard-char-poly",
        uses_z: true,
        ks: Ks::Span(0, 0),
        eval: |c, k, s, t, z| {
            if k != c.m() {
                return Ok(None);
            }
            pair(c.had(ik(k), s, t, z)?, c.moments.char_poly().eval(z))
        },
    },
    Check {
        name: "hankel-poly-jacobi-s",
        uses_z: true,
        ks: Ks::Span(1, 0),
        eval: |c, k, s, t, z| {
            let k = ik(k);
            let lhs = z * c.h(k, s, t)? * c.hp(k - 1, s + 1, t, z)?;
            let rhs = c.h(k, s + 1, t)? * c.hp(k - 1, s, t, z)? + c.h(k - 1, s + 1, t)? * c.hp(k, s, t, z)?;
            pair(lhs, rhs)
        },
    },
    Check {
        name: "hankel-poly-plucker-s",
        uses_z: true,
        ks: Ks::Span(1, 0),
        eval: |c, k, s, t, z| {
            let k = ik(k);
            let lhs = c.h(k, s + 1, t)? * c.hp(k, s, t, z)?;
            let rhs = c.h(k + 1, s, t)? * c.hp(k - 1, s + 1, t, z)? + c.h(k, s, t)? * c.hp(k, s + 1, t, z)?;
            pair(lhs, rhs)
        },
    },
    Check {
        name: "hankel-poly-jacobi-t",
        uses_z: true,
        ks: Ks::Span(1, 0),
        eval: |c, k, s, t, z| {
            let k = ik(k);
            let lhs = (z - c.mu(t)) * c.h(k, s, t)? * c.hp(k - 1, s, t + 1, z)?;
            let rhs = c.h(k, s, t + 1)? * c.hp(k - 1, s, t, z)? + c.h(k - 1, s, t + 1)? * c.hp(k, s, t, z)?;
            pair(lhs, rhs)
        },
    },
    Check {
        name: "hankel-poly-plucker-t",
        uses_z: true,
        ks: Ks::Span(1, 0),
        eval: |c, k, s, t, z| {
            let k = ik(k);
            let lhs = c.h(k, s, t + 1)? * c.hp(k, s, t, z)?;
            let rhs = c.h(k + 1, s, t)? * c.hp(k - 1, s, t + 1, z)? + c.h(k, s, t)? * c.hp(k, s, t + 1, z)?;
            pair(lhs, rhs)
        },
    },
    Check {
        name: "christoffel-s",
        uses_z: true,
        ks: Ks::Span(1, 0),
        eval: |c, k, s, t, z| {
            let lhs = z * c.had(ik(k) - 1, s + 1, t, z)?;
            let rhs = c.had(ik(k), s, t, z)? + c.q(k, s, t)? * c.had(ik(k) - 1, s, t, z)?;
            pair(lhs, rhs)
        },
    },
    Check {
        name: "geronimus-s",
        uses_z: true,
        ks: Ks::Span(1, 0),
        eval: |c, k, s, t, z| {
            let lhs = c.had(ik(k), s, t, z)?;
            let rhs = c.had(ik(k), s + 1, t, z)? + c.e(k, s, t)? * c.had(ik(k) - 1, s + 1, t, z)?;
            pair(lhs, rhs)
        },
    },
    Check {
        name: "christoffel-t",
        uses_z: true,
        ks: Ks::Span(1, 0),
        eval: |c, k, s, t, z| {
            let lhs = (z - c.mu(t)) * c.had(ik(k) - 1, s, t + 1, z)?;
            let rhs = c.had(ik(k), s, t, z)? + c.big_q(k, s, t)? * c.had(ik(k) - 1, s, t, z)?;
            pair(lhs, rhs)
        },
    },
    Check {
        name: "geronimus-t",
        uses_z: true,
        ks: Ks::Span(1, 0),
        eval: |c, k, s, t, z| {
            let lhs = c.had(ik(k), s, t, z)?;
            let rhs = c.had(ik(k), s, t + 1, z)? + c.big_e(k, s, t)? * c.had(ik(k) - 1, s, t + 1, z)?;
            pair(lhs, rhs)
        },
    },
    Check {
        name: "three-term-qe",
        uses_z: true,
        ks: Ks::Span(0, -1),
        eval: |c, k, s, t, z| {
            let lhs = c.had(ik(k) + 1, s, t, z)?;
            let w = if k == 0 { Rational::zero() } else { c.q(k, s, t)? * c.e(k, s, t)? };
            let rhs = (z - c.q(k + 1, s, t)? - c.e(k, s, t)?) * c.had(ik(k), s, t, z)?
                - w * c.had(ik(k) - 1, s, t, z)?;
            pair(lhs, rhs)
        },
    },
    Check {
        name: "three-term-QE",
        uses_z: true,
        ks: Ks::Span(0, -1),
        eval: |c, k, s, t, z| {
            let lhs = c.had(ik(k) + 1, s, t, z)?;
            let w = if k == 0 { Rational::zero() } else { c.big_q(k, s, t)? * c.big_e(k, s, t)? };
            let rhs = (z - c.big_q(k + 1, s, t)? - c.big_e(k, s, t)? - c.mu(t)) * c.had(ik(k), s, t, z)?
                - w * c.had(ik(k) - 1, s, t, z)?;
            pair(lhs, rhs)
        },
    },
    Check {
        name: "symmetric-three-term",
        uses_z: true,
        ks: Ks::Double(0, 0),
        eval: |c, k, s, t, z| {
            let k = ik(k);
            let lhs = z * c.sym(k, s, t, z)?;
            let rhs = c.sym(k + 1, s, t, z)? + c.v(k as usize, s, t)? * c.sym(k - 1, s, t, z)?;
            pair(lhs, rhs)
        },
    },
    Check {
        name: "symmetric-christoffel",
        uses_z: true,
        ks: Ks::Double(1, 0),
        eval: |c, k, s, t, z| {
            let k = ik(k);
            let lhs = (z * z - c.mu(t)) * c.sym(k - 1, s, t + 1, z)?;
            let rhs = c.sym(k + 1, s, t, z)? + c.big_v(k as usize, s, t)? * c.sym(k - 1, s, t, z)?;
            pair(lhs, rhs)
        },
    },
    Check {
        name: "v-V-sum",
        uses_z: false,
        ks: Ks::Double(0, -2),
        eval: |c, k, s, t, _| {
            let lhs = c.v(k, s, t + 1)? + c.big_v(k + 2, s, t)?;
            let rhs = c.v(k + 2, s, t)? + c.big_v(k + 1, s, t)?;
            pair(lhs, rhs)
        },
    },
    Check {
        name: "v-V-product",
        uses_z: false,
        ks: Ks::Double(1, -1),
        eval: |c, k, s, t, _| {
            pair(c.v(k, s, t + 1)? * c.big_v(k, s, t)?, c.v(k, s, t)? * c.big_v(k + 1, s, t)?)
        },
    },
    Check {
        name: "v-from-u",
        uses_z: false,
        ks: Ks::Double(1, 0),
        eval: |c, k, s, t, _| {
            let Some(lv) = c.lv(s, t)? else { return Ok(None) };
            let rhs = lv.u_at(k) * (Rational::one() + &lv.delta * lv.u_at(k - 1));
            pair(c.v(k, s, t)?, rhs)
        },
    },
    Check {
        name: "V-from-u",
        uses_z: false,
        ks: Ks::Double(1, 0),
        eval: |c, k, s, t, _| {
            let Some(lv) = c.lv(s, t)? else { return Ok(None) };
            let one = Rational::one();
            let rhs = -c.mu(t)
                * (&one + &lv.delta * lv.u_at(k - 1))
                * (&one + &lv.delta * lv.u_at(k));
            pair(c.big_v(k, s, t)?, rhs)
        },
    },
    Check {
        name: "dlv-relation",
        uses_z: false,
        ks: Ks::Double(1, -1),
        eval: |c, k, s, t, _| {
            let (Some(a), Some(b)) = (c.lv(s, t)?, c.lv(s, t + 1)?) else { return Ok(None) };
            let one = Rational::one();
            let lhs = b.u_at(k) * (&one + &b.delta * b.u_at(k - 1));
            let rhs = a.u_at(k) * (&one + &a.delta * a.u_at(k + 1));
            pair(lhs, rhs)
        },
    },
    Check {
        name: "qd-sum",
        uses_z: false,
        ks: Ks::Span(1, 0),
        eval: |c, k, s, t, _| {
            let lhs = c.q(k, s + 1, t)? + c.e(k - 1, s + 1, t)?;
            pair(lhs, c.q(k, s, t)? + c.e(k, s, t)?)
        },
    },
    Check {
        name: "qd-product",
        uses_z: false,
        ks: Ks::Span(1, -1),
        eval: |c, k, s, t, _| {
            pair(c.q(k, s + 1, t)? * c.e(k, s + 1, t)?, c.q(k + 1, s, t)? * c.e(k, s, t)?)
        },
    },
    Check {
        name: "shifted-qd-sum",
        uses_z: false,
        ks: Ks::Span(1, 0),
        eval: |c, k, s, t, _| {
            let lhs = c.big_q(k, s, t + 1)? + c.big_e(k - 1, s, t + 1)? + c.mu(t + 1);
            pair(lhs, c.big_q(k, s, t)? + c.big_e(k, s, t)? + c.mu(t))
        },
    },
    Check {
        name: "shifted-qd-product",
        uses_z: false,
        ks: Ks::Span(1, -1),
        eval: |c, k, s, t, _| {
            pair(
                c.big_q(k, s, t + 1)? * c.big_e(k, s, t + 1)?,
                c.big_q(k + 1, s, t)? * c.big_e(k, s, t)?,
            )
        },
    },
    Check {
        name: "evolution-qd",
        uses_z: false,
        ks: Ks::Double(1, -1),
        eval: |c, k, s, t, _| {
            let next = qd_step(&c.toda(s, t)?)?;
            let want = c.toda(s + 1, t)?;
            Ok(Some(component(&next.q, &next.e, &want.q, &want.e, k)))
        },
    },
    Check {
        name: "evolution-shifted-qd",
        uses_z: false,
        ks: Ks::Double(1, -1),
        eval: |c, k, s, t, _| {
            let next = shifted_qd_step(&c.shifted(s, t)?, c.mu(t + 1))?;
            let want = c.shifted(s, t + 1)?;
            Ok(Some(component(&next.q, &next.e, &want.q, &want.e, k)))
        },
    },
    Check {
        name: "evolution-dlv",
        uses_z: false,
        ks: Ks::Double(1, -1),
        eval: |c, k, s, t, _| {
            let (Some(a), Some(b)) = (c.lv(s, t)?, c.lv(s, t + 1)?) else { return Ok(None) };
            let next = lv_step(&a, b.delta.clone())?;
            pair(next.u_at(k), b.u_at(k))
        },
    },
    Check {
        name: "qd-to-dlv",
        uses_z: false,
        ks: Ks::Double(1, -1),
        eval: |c, k, s, t, _| {
            let Some(lv) = c.lv(s, t)? else { return Ok(None) };
            let converted = toda_to_lv(&c.toda(s, t)?, lv.delta.clone())?;
            pair(converted.u_at(k), lv.u_at(k))
        },
    },
];

/// Component `k` of the interleaved vector `(q_1, e_1, q_2, ..., q_m)`.
fn component(q: &[Rational], e: &[Rational], q2: &[Rational], e2: &[Rational], k: usize) -> (Rational, Rational) {
    if k % 2 == 1 {
        (q[(k - 1) / 2].clone(), q2[(k - 1) / 2].clone())
    } else {
        (e[k / 2 - 1].clone(), e2[k / 2 - 1].clone())
    }
}

/// Names of all identities [`check_identities`] evaluates, in report order.
pub fn identity_names() -> Vec<&'static str> {
    CHECKS.iter().map(|c| c.name).collect()
}
