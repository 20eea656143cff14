//! Equivalence of cells under `GL_N(Z)` / `SL_N(Z)` and cell stabilizers.
//!
//! Any `gamma` carrying a cell onto another carries the barycenter form
//! `b = sum v v^t` of the first onto that of the second, so the pairings
//! `u^t b^-1 v` between cell vectors are preserved. We work with
//! `u^t adj(b) v`, which differs by the (invariant) factor `det b`. The search
//! picks a spanning sequence of source vectors, backtracks over images with
//! matching pairings, and solves for `gamma` once the sequence is assigned.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::{from_i128, meets_interior, Cell, UnimodularMap};
use crate::linalg::{self, Echelon};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Group {
    GL,
    SL,
}

impl Group {
    pub fn admits(self, g: &UnimodularMap) -> bool {
        match self {
            Group::GL => true,
            Group::SL => g.det() == 1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Group::GL => "gl",
            Group::SL => "sl",
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Group {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gl" => Ok(Group::GL),
            "sl" => Ok(Group::SL),
            other => Err(Error::Parse(format!("unknown group {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SearchMode {
    FindOne,
    FindAll,
}

#[derive(Clone, Debug)]
pub struct IsometryQuery<'a> {
    pub source: &'a Cell,
    pub target: &'a Cell,
    pub group: Group,
    pub mode: SearchMode,
}

/// The full (finite) stabilizer of a cell.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stabilizer {
    pub elements: Vec<UnimodularMap>,
}

impl Stabilizer {
    pub fn order(&self) -> usize {
        self.elements.len()
    }
}

/// Sign-independent summary of a cell up to `GL_N(Z)`: the sorted per-vector
/// profiles `(u^t adj(b) u, sorted |u^t adj(b) v|)` and `det b`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Fingerprint {
    det: i128,
    profiles: Vec<(i128, Vec<i128>)>,
}

/// A cell together with its pairing data, ready for repeated queries.
#[derive(Clone, Debug)]
pub struct PreparedCell {
    cell: Cell,
    pairing: Vec<Vec<i128>>,
    profiles: Vec<(i128, Vec<i128>)>,
    fingerprint: Fingerprint,
}

impl PreparedCell {
    pub fn new(cell: Cell) -> Result<Self> {
        if !meets_interior(&cell) {
            return Err(Error::DegenerateCell);
        }
        let b = cell.barycenter();
        let det = linalg::det(&b);
        let adj = linalg::adjugate(&b);
        let coords: Vec<Vec<i128>> = cell
            .vectors()
            .iter()
            .map(|v| v.coords().iter().map(|&x| x as i128).collect())
            .collect();
        let w: Vec<Vec<i128>> = coords
            .iter()
            .map(|u| (0..u.len()).map(|j| linalg::dot(u, &adj.iter().map(|r| r[j]).collect::<Vec<_>>())).collect())
            .collect();
        let pairing: Vec<Vec<i128>> =
            w.iter().map(|wu| coords.iter().map(|v| linalg::dot(wu, v)).collect()).collect();
        let profiles: Vec<(i128, Vec<i128>)> = (0..coords.len())
            .map(|i| {
                let mut row: Vec<i128> =
                    (0..coords.len()).filter(|&j| j != i).map(|j| pairing[i][j].abs()).collect();
                row.sort_unstable();
                (pairing[i][i], row)
            })
            .collect();
        let mut sorted = profiles.clone();
        sorted.sort();
        Ok(PreparedCell { cell, pairing, profiles, fingerprint: Fingerprint { det, profiles: sorted } })
    }

    pub fn cell(&self) -> &Cell {
        &self.cell
    }

    pub fn fingerprint(&self) -> &Fingerprint {
        &self.fingerprint
    }

    /// `u^t adj(b) v` for cell vectors `u`, `v`.
    pub fn pairing(&self, i: usize, j: usize) -> i128 {
        self.pairing[i][j]
    }
}

/// Searches for `gamma` with `source . gamma = target`.
pub fn find_equivalence(q: &IsometryQuery<'_>) -> Result<Option<UnimodularMap>> {
    let s = PreparedCell::new(q.source.clone())?;
    let t = PreparedCell::new(q.target.clone())?;
    Ok(find_prepared(&s, &t, q.group, q.mode).into_iter().next())
}

/// All `gamma` in the group with `source . gamma = target`.
pub fn find_all(source: &PreparedCell, target: &PreparedCell, group: Group) -> Vec<UnimodularMap> {
    find_prepared(source, target, group, SearchMode::FindAll)
}

pub fn find_one(source: &PreparedCell, target: &PreparedCell, group: Group) -> Option<UnimodularMap> {
    find_prepared(source, target, group, SearchMode::FindOne).into_iter().next()
}

pub fn stabilizer(c: &Cell, group: Group) -> Result<Stabilizer> {
    let p = PreparedCell::new(c.clone())?;
    Ok(stabilizer_prepared(&p, group))
}

pub fn stabilizer_prepared(c: &PreparedCell, group: Group) -> Stabilizer {
    let mut elements = find_all(c, c, group);
    elements.sort();
    Stabilizer { elements }
}

fn find_prepared(s: &PreparedCell, t: &PreparedCell, group: Group, mode: SearchMode) -> Vec<UnimodularMap> {
    if s.cell.len() != t.cell.len() || s.fingerprint != t.fingerprint {
        return Vec::new();
    }
    let n = s.cell.lattice_rank();
    if t.cell.lattice_rank() != n {
        return Vec::new();
    }

    // Profile classes shared by both cells.
    let mut ids: HashMap<&(i128, Vec<i128>), usize> = HashMap::new();
    for p in &s.profiles {
        let next = ids.len();
        ids.entry(p).or_insert(next);
    }
    let sid: Vec<usize> = s.profiles.iter().map(|p| ids[p]).collect();
    let tid: Vec<usize> = t.profiles.iter().map(|p| ids[p]).collect();
    let mut class_size = vec![0usize; ids.len()];
    sid.iter().for_each(|&c| class_size[c] += 1);

    // Spanning sequence of source vectors, rarest profiles first; later picks
    // prefer vectors paired nontrivially with earlier ones.
    let mut candidates: Vec<usize> = (0..s.cell.len()).collect();
    candidates.sort_by_key(|&i| (class_size[sid[i]], i));
    let mut ech = Echelon::new(n);
    let mut base: Vec<usize> = Vec::with_capacity(n);
    for &i in &candidates {
        if base.len() == n {
            break;
        }
        let v: Vec<i128> = s.cell.vectors()[i].coords().iter().map(|&x| x as i128).collect();
        if ech.insert(&v) {
            base.push(i);
        }
    }

    let source_base: Vec<Vec<i128>> = base
        .iter()
        .map(|&i| s.cell.vectors()[i].coords().iter().map(|&x| x as i128).collect())
        .collect();
    // Columns of S are the base vectors; gamma^t = T adj(S) / det(S).
    let smat = linalg::transpose(&source_base);
    let sdet = linalg::det(&smat);
    let sadj = linalg::adjugate(&smat);

    let mut search = Search {
        s,
        t,
        sid: &sid,
        tid: &tid,
        base: &base,
        sdet,
        sadj: &sadj,
        group,
        mode,
        images: Vec::with_capacity(n),
        used: vec![false; t.cell.len()],
        found: Vec::new(),
    };
    search.extend();
    search.found
}

struct Search<'a> {
    s: &'a PreparedCell,
    t: &'a PreparedCell,
    sid: &'a [usize],
    tid: &'a [usize],
    base: &'a [usize],
    sdet: i128,
    sadj: &'a [Vec<i128>],
    group: Group,
    mode: SearchMode,
    /// Signed target images: `(index, sign)`.
    images: Vec<(usize, i128)>,
    used: Vec<bool>,
    found: Vec<UnimodularMap>,
}

impl Search<'_> {
    fn done(&self) -> bool {
        self.mode == SearchMode::FindOne && !self.found.is_empty()
    }

    fn extend(&mut self) {
        let pos = self.images.len();
        if pos == self.base.len() {
            if let Some(g) = self.solve() {
                self.found.push(g);
            }
            return;
        }
        let si = self.base[pos];
        for ti in 0..self.t.cell.len() {
            if self.used[ti] || self.tid[ti] != self.sid[si] {
                continue;
            }
            for sign in [1i128, -1] {
                let consistent = self.images.iter().zip(self.base).all(|(&(tj, sj_sign), &sj)| {
                    self.s.pairing[sj][si] == sj_sign * sign * self.t.pairing[tj][ti]
                });
                if !consistent {
                    continue;
                }
                self.images.push((ti, sign));
                self.used[ti] = true;
                self.extend();
                self.used[ti] = false;
                self.images.pop();
                if self.done() {
                    return;
                }
            }
        }
    }

    fn solve(&self) -> Option<UnimodularMap> {
        let n = self.base.len();
        let tcols: Vec<Vec<i128>> = self
            .images
            .iter()
            .map(|&(ti, sign)| self.t.cell.vectors()[ti].coords().iter().map(|&x| sign * x as i128).collect())
            .collect();
        let tmat = linalg::transpose(&tcols);
        let num = linalg::mat_mul(&tmat, self.sadj);
        let mut gt = vec![vec![0i128; n]; n];
        for i in 0..n {
            for j in 0..n {
                if num[i][j] % self.sdet != 0 {
                    return None;
                }
                gt[i][j] = num[i][j] / self.sdet;
            }
        }
        if linalg::det(&gt).abs() != 1 {
            return None;
        }
        let g = UnimodularMap::from_transpose_unchecked(from_i128(&gt));
        if !self.group.admits(&g) {
            return None;
        }
        let maps_onto = self.s.cell.vectors().iter().all(|v| self.t.cell.contains(&v.act(&g)));
        maps_onto.then_some(g)
    }
}

/// Sign of the determinant of the map induced by `g` on the real span of the
/// rank-one forms of `c`.
pub fn orientation_sign(g: &UnimodularMap, c: &Cell) -> Result<i8> {
    if c.act(g) != *c {
        return Err(Error::NotStabilizing);
    }
    let flats = c.flats();
    let basis: Vec<Vec<i128>> = linalg::greedy_basis(&flats).into_iter().map(|i| flats[i].clone()).collect();
    let images: Vec<Vec<i128>> = linalg::greedy_basis(&flats)
        .into_iter()
        .map(|i| c.vectors()[i].act(g).sym_flat())
        .collect();
    Ok(linalg::relative_orientation(&images, &basis).expect("stabilizer preserves the span"))
}

/// Whether no stabilizer element reverses the orientation of the cell.
pub fn is_orientable(c: &Cell, group: Group) -> Result<bool> {
    let stab = stabilizer(c, group)?;
    is_orientable_with(c, &stab)
}

pub fn is_orientable_with(c: &Cell, stab: &Stabilizer) -> Result<bool> {
    for g in &stab.elements {
        if orientation_sign(g, c)? < 0 {
            return Ok(false);
        }
    }
    Ok(true)
}
