//! Integral homology of the chain complex via Smith normal form.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::complex::{ChainComplexData, SparseMatrix};
use crate::error::{Error, Result};

/// Nonzero diagonal of the Smith normal form, with unimodular transforms when
/// requested (`u * m * v = diag(divisors)`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SmithForm {
    pub divisors: Vec<BigInt>,
    pub rank: usize,
    pub u: Option<Vec<Vec<BigInt>>>,
    pub v: Option<Vec<Vec<BigInt>>>,
}

fn identity(n: usize) -> Vec<Vec<BigInt>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }).collect())
        .collect()
}

struct Reducer {
    a: Vec<Vec<BigInt>>,
    u: Option<Vec<Vec<BigInt>>>,
    v: Option<Vec<Vec<BigInt>>>,
}

impl Reducer {
    fn swap_rows(&mut self, i: usize, j: usize) {
        self.a.swap(i, j);
        if let Some(u) = &mut self.u {
            u.swap(i, j);
        }
    }

    fn swap_cols(&mut self, i: usize, j: usize) {
        self.a.iter_mut().for_each(|r| r.swap(i, j));
        if let Some(v) = &mut self.v {
            v.iter_mut().for_each(|r| r.swap(i, j));
        }
    }

    /// row_i -= q * row_j
    fn row_op(&mut self, i: usize, j: usize, q: &BigInt) {
        fn op(m: &mut [Vec<BigInt>], i: usize, j: usize, q: &BigInt) {
            let src = m[j].clone();
            for (x, s) in m[i].iter_mut().zip(&src) {
                *x -= q * s;
            }
        }
        op(&mut self.a, i, j, q);
        if let Some(u) = &mut self.u {
            op(u, i, j, q);
        }
    }

    /// col_i -= q * col_j
    fn col_op(&mut self, i: usize, j: usize, q: &BigInt) {
        fn op(m: &mut [Vec<BigInt>], i: usize, j: usize, q: &BigInt) {
            for r in m.iter_mut() {
                let s = r[j].clone();
                r[i] -= q * s;
            }
        }
        op(&mut self.a, i, j, q);
        if let Some(v) = &mut self.v {
            op(v, i, j, q);
        }
    }
}

/// Smith normal form by elimination with pivots of least absolute value.
pub fn smith_normal_form(m: &[Vec<BigInt>]) -> SmithForm {
    smith(m, false)
}

pub fn smith_normal_form_with_transforms(m: &[Vec<BigInt>]) -> SmithForm {
    smith(m, true)
}

fn smith(m: &[Vec<BigInt>], transforms: bool) -> SmithForm {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    let mut r = Reducer {
        a: m.to_vec(),
        u: transforms.then(|| identity(rows)),
        v: transforms.then(|| identity(cols)),
    };
    let mut t = 0;
    while t < rows.min(cols) {
        let pivot = (t..rows)
            .flat_map(|i| (t..cols).map(move |j| (i, j)))
            .filter(|&(i, j)| !r.a[i][j].is_zero())
            .min_by(|&(i, j), &(k, l)| r.a[i][j].abs().cmp(&r.a[k][l].abs()));
        let Some((pi, pj)) = pivot else { break };
        r.swap_rows(t, pi);
        r.swap_cols(t, pj);
        loop {
            let mut dirty = false;
            for i in t + 1..rows {
                if !r.a[i][t].is_zero() {
                    let q = r.a[i][t].div_floor(&r.a[t][t]);
                    r.row_op(i, t, &q);
                    if !r.a[i][t].is_zero() {
                        dirty = true;
                    }
                }
            }
            for j in t + 1..cols {
                if !r.a[t][j].is_zero() {
                    let q = r.a[t][j].div_floor(&r.a[t][t]);
                    r.col_op(j, t, &q);
                    if !r.a[t][j].is_zero() {
                        dirty = true;
                    }
                }
            }
            if dirty {
                // Bring the smallest remainder in row/column t to the pivot.
                let best_row = (t + 1..rows)
                    .filter(|&i| !r.a[i][t].is_zero())
                    .min_by(|&i, &k| r.a[i][t].abs().cmp(&r.a[k][t].abs()));
                let best_col = (t + 1..cols)
                    .filter(|&j| !r.a[t][j].is_zero())
                    .min_by(|&j, &l| r.a[t][j].abs().cmp(&r.a[t][l].abs()));
                match (best_row, best_col) {
                    (Some(i), Some(j)) if r.a[t][j].abs() < r.a[i][t].abs() => r.swap_cols(t, j),
                    (Some(i), _) => r.swap_rows(t, i),
                    (None, Some(j)) => r.swap_cols(t, j),
                    (None, None) => unreachable!("dirty implies a nonzero remainder"),
                }
                continue;
            }
            // Divisibility: fold a non-divisible row into row t.
            let bad = (t + 1..rows).find(|&i| (t + 1..cols).any(|j| !(&r.a[i][j] % &r.a[t][t]).is_zero()));
            match bad {
                Some(i) => r.row_op(t, i, &(-BigInt::one())),
                None => break,
            }
        }
        if r.a[t][t].is_negative() {
            let q = BigInt::from(2);
            // Negate row t: row_t -= 2 * row_t.
            fn neg(m: &mut [Vec<BigInt>], t: usize, q: &BigInt) {
                let src = m[t].clone();
                for (x, s) in m[t].iter_mut().zip(&src) {
                    *x -= q * s;
                }
            }
            neg(&mut r.a, t, &q);
            if let Some(u) = &mut r.u {
                neg(u, t, &q);
            }
        }
        t += 1;
    }
    let divisors: Vec<BigInt> = (0..t).map(|i| r.a[i][i].clone()).collect();
    SmithForm { rank: divisors.len(), divisors, u: r.u, v: r.v }
}

pub fn sparse_to_big(m: &SparseMatrix) -> Vec<Vec<BigInt>> {
    m.to_dense().into_iter().map(|r| r.into_iter().map(BigInt::from).collect()).collect()
}

/// Serre class `S_m`: finite abelian groups whose order has only prime
/// factors `<= m`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SerreClassFilter {
    pub bound: u64,
}

impl SerreClassFilter {
    pub fn new(bound: u64) -> Result<Self> {
        if bound <= 1 {
            return Err(Error::Parse(format!("Serre class bound must exceed 1, got {bound}")));
        }
        Ok(SerreClassFilter { bound })
    }

    /// Removes every prime factor `<= bound`.
    pub fn strip(&self, mut d: u64) -> u64 {
        for p in 2..=self.bound {
            while d % p == 0 && d > 0 {
                d /= p;
            }
        }
        d
    }

    /// Torsion that survives modulo the class, as a divisibility chain.
    pub fn filter(&self, torsion: &[u64]) -> Vec<u64> {
        torsion.iter().map(|&d| self.strip(d)).filter(|&d| d > 1).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct HomologyGroup {
    pub degree: usize,
    pub free_rank: usize,
    pub torsion: Vec<u64>,
    pub filtered_torsion: Vec<u64>,
}

impl HomologyGroup {
    pub fn is_zero_mod_class(&self) -> bool {
        self.free_rank == 0 && self.filtered_torsion.is_empty()
    }
}

/// `H_n = ker d_n / im d_{n+1}` for every `n`, raw and modulo the class.
/// Refuses to run unless `d o d = 0`.
pub fn homology_of(cc: &ChainComplexData, filter: SerreClassFilter) -> Result<Vec<HomologyGroup>> {
    cc.verify_d_squared()?;
    let top = cc.top_dim();
    let forms: Vec<SmithForm> =
        cc.differentials.par_iter().map(|d| smith_normal_form(&sparse_to_big(d))).collect();
    (0..=top)
        .map(|n| {
            let rank_out = forms[n].rank;
            let incoming = forms.get(n + 1);
            let rank_in = incoming.map_or(0, |f| f.rank);
            let torsion = incoming
                .map(|f| {
                    f.divisors
                        .iter()
                        .filter(|d| !d.is_one())
                        .map(|d| d.to_u64().ok_or_else(|| Error::Parse(format!("divisor {d} exceeds u64"))))
                        .collect::<Result<Vec<u64>>>()
                })
                .transpose()?
                .unwrap_or_default();
            Ok(HomologyGroup {
                degree: n,
                free_rank: cc.sigma[n].len() - rank_out - rank_in,
                filtered_torsion: filter.filter(&torsion),
                torsion,
            })
        })
        .collect()
}

/// `sum (-1)^n |Sigma_n| == sum (-1)^n rank H_n`.
pub fn euler_check(cc: &ChainComplexData, homology: &[HomologyGroup]) -> bool {
    let sign = |n: usize| if n % 2 == 0 { 1i64 } else { -1 };
    let cells: i64 = cc.sigma.iter().enumerate().map(|(n, s)| sign(n) * s.len() as i64).sum();
    let ranks: i64 = homology.iter().map(|h| sign(h.degree) * h.free_rank as i64).sum();
    cells == ranks
}
