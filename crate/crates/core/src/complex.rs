//! The Voronoi complex modulo the group: cell representatives by dimension
//! and the signed differentials between orientable representatives.
//!
//! Cells are built top-down. Level 0 holds the orbits of the cells of perfect
//! forms; level `k + 1` holds the orbits of the interior-meeting facets of the
//! level-`k` representatives. Every facet of every representative keeps a link
//! to its representative one level down together with a witness map, which is
//! all the differential needs.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::{meets_interior, top_dimension, Cell, LatticeVector, UnimodularMap};
use crate::isometry::{find_one, is_orientable_with, stabilizer_prepared, Fingerprint, Group, PreparedCell, Stabilizer};
use crate::linalg;
use crate::polyhedral::{cone_facets, face_from_facet, Cone};
use crate::voronoi::PerfectFormRecord;

/// The global order on lattice vectors used to orient cells.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VectorOrder {
    #[default]
    Lex,
    ReverseLex,
}

impl VectorOrder {
    /// Indices of `c`'s vectors in this order.
    fn sequence(self, c: &Cell) -> Vec<usize> {
        match self {
            VectorOrder::Lex => (0..c.len()).collect(),
            VectorOrder::ReverseLex => (0..c.len()).rev().collect(),
        }
    }
}

/// The greedy rank-increasing subsequence of `c`'s vectors (in `order`); their
/// rank-one forms are the positive basis of the span of the cell.
pub fn orientation_basis(c: &Cell, order: VectorOrder) -> Vec<LatticeVector> {
    let seq = order.sequence(c);
    let flats: Vec<Vec<i128>> = seq.iter().map(|&i| c.vectors()[i].sym_flat()).collect();
    linalg::greedy_basis(&flats).into_iter().map(|k| c.vectors()[seq[k]].clone()).collect()
}

fn flats_of(vs: &[LatticeVector]) -> Vec<Vec<i128>> {
    vs.iter().map(LatticeVector::sym_flat).collect()
}

/// One orbit of interior-meeting cells.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CellClass {
    pub cell: Cell,
    pub dim: usize,
    pub stabilizer: Stabilizer,
    pub orientable: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum FacetLink {
    /// `classes[class].cell . witness = face` in the level below.
    Interior { class: usize, witness: UnimodularMap },
    /// The face lies in the boundary (does not meet the interior).
    Boundary,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FacetRecord {
    pub face: Cell,
    pub link: FacetLink,
}

/// All representatives of one dimension.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Level {
    pub dim: usize,
    pub classes: Vec<CellClass>,
    /// `facets[i]` are the facets of `classes[i]`; filled once the level below
    /// has been built.
    pub facets: Vec<Vec<FacetRecord>>,
}

/// Assigns every candidate cell to an orbit representative.
///
/// Candidates are bucketed by fingerprint; inside a bucket they are visited in
/// lexicographic order, so each representative is the least candidate of its
/// orbit. Buckets are independent and run in parallel.
fn reduce(candidates: &[Cell], group: Group) -> Result<(Vec<CellClass>, BTreeMap<Cell, (usize, UnimodularMap)>)> {
    let distinct: Vec<Cell> = candidates.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    let prepared: Vec<PreparedCell> =
        distinct.par_iter().map(|c| PreparedCell::new(c.clone())).collect::<Result<_>>()?;
    let mut buckets: BTreeMap<&Fingerprint, Vec<usize>> = BTreeMap::new();
    for (i, p) in prepared.iter().enumerate() {
        buckets.entry(p.fingerprint()).or_default().push(i);
    }
    let buckets: Vec<Vec<usize>> = buckets.into_values().collect();

    // Per bucket: (candidate, representative candidate, witness).
    let assigned: Vec<Vec<(usize, usize, UnimodularMap)>> = buckets
        .par_iter()
        .map(|members| {
            let mut reps: Vec<usize> = Vec::new();
            let mut out = Vec::with_capacity(members.len());
            for &m in members {
                let hit = reps
                    .iter()
                    .find_map(|&r| find_one(&prepared[r], &prepared[m], group).map(|g| (r, g)));
                match hit {
                    Some((r, g)) => out.push((m, r, g)),
                    None => {
                        reps.push(m);
                        out.push((m, m, UnimodularMap::identity(distinct[m].lattice_rank())));
                    }
                }
            }
            out
        })
        .collect();

    let mut rep_ids: Vec<usize> = assigned.iter().flatten().filter(|(m, r, _)| m == r).map(|(m, _, _)| *m).collect();
    rep_ids.sort();
    let class_of: BTreeMap<usize, usize> = rep_ids.iter().enumerate().map(|(k, &r)| (r, k)).collect();
    let classes: Vec<CellClass> = rep_ids
        .par_iter()
        .map(|&r| {
            let stab = stabilizer_prepared(&prepared[r], group);
            let cell = distinct[r].clone();
            let orientable = is_orientable_with(&cell, &stab)?;
            Ok(CellClass { dim: cell.proj_dim(), cell, stabilizer: stab, orientable })
        })
        .collect::<Result<_>>()?;
    let mut map = BTreeMap::new();
    for (m, r, g) in assigned.into_iter().flatten() {
        map.insert(distinct[m].clone(), (class_of[&r], g));
    }
    Ok((classes, map))
}

/// Level-by-level construction; each step is a resumable unit.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ComplexBuilder {
    pub rank: usize,
    pub group: Group,
    pub levels: Vec<Level>,
    pub finished: bool,
}

impl ComplexBuilder {
    /// Starts from the cells of the given perfect forms. For `SL` the mirror
    /// image of each cell is added as well, since one `GL` orbit may split.
    pub fn new(records: &[PerfectFormRecord], group: Group) -> Result<Self> {
        let rank = records.first().map(|r| r.form.rank()).ok_or(Error::EmptyCell)?;
        let mut candidates = Vec::new();
        for r in records {
            candidates.push(r.min_vectors.clone());
            if group == Group::SL {
                candidates.push(r.min_vectors.act(&UnimodularMap::reflection(rank)));
            }
        }
        let (classes, _) = reduce(&candidates, group)?;
        let level = Level { dim: top_dimension(rank), facets: Vec::new(), classes };
        Ok(ComplexBuilder { rank, group, levels: vec![level], finished: false })
    }

    /// Builds the next level down. Returns `false` once no interior faces
    /// remain.
    pub fn step(&mut self) -> Result<bool> {
        if self.finished {
            return Ok(false);
        }
        let last = self.levels.last().expect("top level exists");
        let faces: Vec<Vec<Cell>> = last
            .classes
            .par_iter()
            .map(|c| {
                let facets = cone_facets(&Cone::of_cell(&c.cell)?)?;
                facets.iter().map(|f| face_from_facet(&c.cell, f)).collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        let candidates: Vec<Cell> = faces.iter().flatten().filter(|c| meets_interior(c)).cloned().collect();
        let (classes, map) = reduce(&candidates, self.group)?;
        let facets = faces
            .into_iter()
            .map(|fs| {
                fs.into_iter()
                    .map(|face| {
                        let link = match map.get(&face) {
                            Some((class, witness)) => FacetLink::Interior { class: *class, witness: witness.clone() },
                            None => FacetLink::Boundary,
                        };
                        FacetRecord { face, link }
                    })
                    .collect()
            })
            .collect();
        let dim = last.dim - 1;
        self.levels.last_mut().expect("top level exists").facets = facets;
        if classes.is_empty() {
            self.finished = true;
            return Ok(false);
        }
        self.levels.push(Level { dim, classes, facets: Vec::new() });
        Ok(true)
    }

    pub fn finish(mut self) -> Result<VoronoiComplex> {
        while self.step()? {}
        Ok(VoronoiComplex { rank: self.rank, group: self.group, levels: self.levels })
    }
}

/// All interior-meeting cell orbits with their facet links.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VoronoiComplex {
    pub rank: usize,
    pub group: Group,
    /// `levels[k]` holds the cells of dimension `top_dimension(rank) - k`.
    pub levels: Vec<Level>,
}

/// Builds every orbit of interior-meeting cells from the perfect forms.
pub fn build_complex(records: &[PerfectFormRecord], group: Group) -> Result<VoronoiComplex> {
    ComplexBuilder::new(records, group)?.finish()
}

/// Orientable representatives per dimension (`Sigma_n`), indexed by `n`.
pub fn build_sigma(records: &[PerfectFormRecord], group: Group) -> Result<Vec<Vec<CellRepresentative>>> {
    Ok(build_complex(records, group)?.chain_complex(VectorOrder::Lex)?.sigma)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellRepresentative {
    pub cell: Cell,
    pub dim: usize,
    pub orientation_basis: Vec<LatticeVector>,
    pub stabilizer_order: usize,
    pub orientable: bool,
}

impl CellRepresentative {
    pub fn new(class: &CellClass, order: VectorOrder) -> Self {
        CellRepresentative {
            orientation_basis: orientation_basis(&class.cell, order),
            cell: class.cell.clone(),
            dim: class.dim,
            stabilizer_order: class.stabilizer.order(),
            orientable: class.orientable,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IncidenceEntry {
    pub sigma_index: usize,
    pub tau_index: usize,
    pub coefficient: i64,
}

/// Coordinate-list integer matrix; entries sorted by `(row, col)`, no zeros.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SparseMatrix {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<(usize, usize, i64)>,
}

impl SparseMatrix {
    pub fn zero(rows: usize, cols: usize) -> Self {
        SparseMatrix { rows, cols, entries: Vec::new() }
    }

    pub fn from_entries(rows: usize, cols: usize, entries: impl IntoIterator<Item = (usize, usize, i64)>) -> Self {
        let mut acc: BTreeMap<(usize, usize), i64> = BTreeMap::new();
        for (r, c, v) in entries {
            assert!(r < rows && c < cols, "entry out of range");
            *acc.entry((r, c)).or_default() += v;
        }
        let entries = acc.into_iter().filter(|(_, v)| *v != 0).map(|((r, c), v)| (r, c, v)).collect();
        SparseMatrix { rows, cols, entries }
    }

    pub fn to_dense(&self) -> Vec<Vec<i64>> {
        let mut m = vec![vec![0i64; self.cols]; self.rows];
        for &(r, c, v) in &self.entries {
            m[r][c] = v;
        }
        m
    }

    /// `self * other`.
    pub fn mul(&self, other: &SparseMatrix) -> SparseMatrix {
        assert_eq!(self.cols, other.rows);
        let mut by_row: BTreeMap<usize, Vec<(usize, i64)>> = BTreeMap::new();
        for &(r, c, v) in &other.entries {
            by_row.entry(r).or_default().push((c, v));
        }
        let mut out = Vec::new();
        for &(r, k, v) in &self.entries {
            if let Some(row) = by_row.get(&k) {
                out.extend(row.iter().map(|&(c, w)| (r, c, v * w)));
            }
        }
        SparseMatrix::from_entries(self.rows, other.cols, out)
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }
}

/// `V_n` bases and differentials `d_n : V_n -> V_{n-1}` (rows index
/// `Sigma_{n-1}`, columns index `Sigma_n`).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainComplexData {
    pub rank: usize,
    pub group: Group,
    pub order: VectorOrder,
    pub sigma: Vec<Vec<CellRepresentative>>,
    pub differentials: Vec<SparseMatrix>,
}

impl ChainComplexData {
    pub fn top_dim(&self) -> usize {
        self.sigma.len() - 1
    }

    pub fn sigma_counts(&self) -> Vec<usize> {
        self.sigma.iter().map(Vec::len).collect()
    }

    pub fn incidences(&self, n: usize) -> Vec<IncidenceEntry> {
        self.differentials[n]
            .entries
            .iter()
            .map(|&(r, c, v)| IncidenceEntry { sigma_index: c, tau_index: r, coefficient: v })
            .collect()
    }

    /// Checks `d_n o d_{n+1} = 0` for every `n`.
    pub fn verify_d_squared(&self) -> Result<()> {
        for n in 1..self.differentials.len() {
            if !self.differentials[n - 1].mul(&self.differentials[n]).is_zero() {
                return Err(Error::NonzeroSquare { lower: n - 1, upper: n });
            }
        }
        Ok(())
    }
}

/// `epsilon(tau', sigma)`: orientation of (positive basis of `tau'`, then the
/// least vector of `sigma` outside `tau'`) relative to the positive basis of
/// `sigma`.
pub fn epsilon_sign(tau_prime: &Cell, sigma: &CellRepresentative, order: VectorOrder) -> Result<i8> {
    if !tau_prime.is_subset_of(&sigma.cell) || tau_prime.proj_dim() + 1 != sigma.dim {
        return Err(Error::FacetNotIncident("not a facet of sigma"));
    }
    let extra = order
        .sequence(&sigma.cell)
        .into_iter()
        .map(|i| &sigma.cell.vectors()[i])
        .find(|v| !tau_prime.contains(v))
        .expect("facet is a proper subset");
    let mut b = orientation_basis(tau_prime, order);
    b.push(extra.clone());
    linalg::relative_orientation(&flats_of(&b), &flats_of(&sigma.orientation_basis))
        .ok_or(Error::FacetNotIncident("extended basis does not span sigma"))
}

/// `eta(tau, tau')`: whether `g` (with `tau . g = tau'`) carries the positive
/// basis of `tau` to a positive basis of `tau'`.
pub fn eta_sign(tau: &CellRepresentative, tau_prime: &Cell, g: &UnimodularMap, order: VectorOrder) -> Result<i8> {
    if tau.cell.act(g) != *tau_prime {
        return Err(Error::NotAWitness);
    }
    let images: Vec<LatticeVector> = tau.orientation_basis.iter().map(|v| v.act(g)).collect();
    let target = orientation_basis(tau_prime, order);
    linalg::relative_orientation(&flats_of(&images), &flats_of(&target)).ok_or(Error::NotAWitness)
}

/// How a facet of a representative contributes to the differential.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum FacetClassification {
    /// Equivalent to `Sigma_{n-1}[tau]`.
    Orientable { tau: usize },
    /// Equivalent to a non-orientable class; contributes zero.
    NonOrientable { class: usize },
    /// Does not meet the interior; contributes zero.
    Boundary,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FacetAudit {
    pub dim: usize,
    pub class: usize,
    pub facet: usize,
    pub classification: FacetClassification,
}

impl VoronoiComplex {
    pub fn top_dim(&self) -> usize {
        top_dimension(self.rank)
    }

    /// Level holding dimension `n`, if any.
    pub fn level(&self, n: usize) -> Option<&Level> {
        self.levels.iter().find(|l| l.dim == n)
    }

    /// Number of all interior-meeting orbits per dimension.
    pub fn class_counts(&self) -> Vec<usize> {
        (0..=self.top_dim()).map(|n| self.level(n).map_or(0, |l| l.classes.len())).collect()
    }

    /// Position of each class of dimension `n` in `Sigma_n`, if orientable.
    fn sigma_positions(&self, n: usize) -> Vec<Option<usize>> {
        let Some(level) = self.level(n) else { return Vec::new() };
        let mut next = 0;
        level
            .classes
            .iter()
            .map(|c| {
                c.orientable.then(|| {
                    next += 1;
                    next - 1
                })
            })
            .collect()
    }

    pub fn chain_complex(&self, order: VectorOrder) -> Result<ChainComplexData> {
        let top = self.top_dim();
        let reps: Vec<Vec<CellRepresentative>> = (0..=top)
            .map(|n| {
                self.level(n).map_or_else(Vec::new, |l| {
                    l.classes.iter().map(|c| CellRepresentative::new(c, order)).collect()
                })
            })
            .collect();
        let sigma: Vec<Vec<CellRepresentative>> =
            reps.iter().map(|r| r.iter().filter(|c| c.orientable).cloned().collect()).collect();
        let mut differentials = vec![SparseMatrix::zero(0, sigma[0].len())];
        for n in 1..=top {
            differentials.push(self.differential_with(n, &reps, &sigma, order)?);
        }
        Ok(ChainComplexData { rank: self.rank, group: self.group, order, sigma, differentials })
    }

    fn differential_with(
        &self,
        n: usize,
        reps: &[Vec<CellRepresentative>],
        sigma: &[Vec<CellRepresentative>],
        order: VectorOrder,
    ) -> Result<SparseMatrix> {
        let (rows, cols) = (sigma[n - 1].len(), sigma[n].len());
        let Some(level) = self.level(n) else { return Ok(SparseMatrix::zero(rows, cols)) };
        let col_of = self.sigma_positions(n);
        let row_of = self.sigma_positions(n - 1);
        let columns: Vec<Vec<(usize, usize, i64)>> = level
            .classes
            .par_iter()
            .enumerate()
            .filter_map(|(ci, _)| col_of[ci].map(|col| (ci, col)))
            .map(|(ci, col)| {
                let facets = level.facets.get(ci).ok_or(Error::MissingWitness(ci, n))?;
                let sigma_rep = &reps[n][ci];
                let mut out = Vec::new();
                for f in facets {
                    let FacetLink::Interior { class, witness } = &f.link else { continue };
                    let Some(row) = row_of.get(*class).copied().flatten() else { continue };
                    let eta = eta_sign(&reps[n - 1][*class], &f.face, witness, order)?;
                    let eps = epsilon_sign(&f.face, sigma_rep, order)?;
                    out.push((row, col, i64::from(eta * eps)));
                }
                Ok(out)
            })
            .collect::<Result<_>>()?;
        Ok(SparseMatrix::from_entries(rows, cols, columns.into_iter().flatten()))
    }

    /// The differential `d_n` between orientable representatives.
    pub fn differential(&self, n: usize, order: VectorOrder) -> Result<SparseMatrix> {
        let cc = self.chain_complex(order)?;
        cc.differentials.get(n).cloned().ok_or(Error::MissingWitness(0, n))
    }

    /// Classifies every facet of every representative exactly once.
    pub fn audit(&self) -> Vec<FacetAudit> {
        let mut out = Vec::new();
        for level in &self.levels {
            let below = level.dim.checked_sub(1).map(|d| self.sigma_positions(d)).unwrap_or_default();
            for (ci, facets) in level.facets.iter().enumerate() {
                for (fi, f) in facets.iter().enumerate() {
                    let classification = match &f.link {
                        FacetLink::Boundary => FacetClassification::Boundary,
                        FacetLink::Interior { class, .. } => match below.get(*class).copied().flatten() {
                            Some(tau) => FacetClassification::Orientable { tau },
                            None => FacetClassification::NonOrientable { class: *class },
                        },
                    };
                    out.push(FacetAudit { dim: level.dim, class: ci, facet: fi, classification });
                }
            }
        }
        out
    }

    /// For every facet equivalent to an orientable class, recomputes `eta`
    /// with every alternative witness `s . g` (`s` in the stabilizer of the
    /// class) and checks that the sign never changes. Returns the number of
    /// alternative witnesses checked.
    pub fn verify_eta_independence(&self, order: VectorOrder) -> Result<usize> {
        let mut checked = 0;
        for pair in self.levels.windows(2) {
            let (upper, lower) = (&pair[0], &pair[1]);
            let reps: Vec<CellRepresentative> =
                lower.classes.iter().map(|c| CellRepresentative::new(c, order)).collect();
            let counts: Vec<usize> = upper
                .facets
                .par_iter()
                .flatten()
                .map(|f| {
                    let FacetLink::Interior { class, witness } = &f.link else { return Ok(0) };
                    let tau = &lower.classes[*class];
                    if !tau.orientable {
                        return Ok(0);
                    }
                    let base = eta_sign(&reps[*class], &f.face, witness, order)?;
                    for s in &tau.stabilizer.elements {
                        let alt = s.compose(witness);
                        if eta_sign(&reps[*class], &f.face, &alt, order)? != base {
                            return Err(Error::NotAWitness);
                        }
                    }
                    Ok(tau.stabilizer.elements.len())
                })
                .collect::<Result<_>>()?;
            checked += counts.iter().sum::<usize>();
        }
        Ok(checked)
    }
}
