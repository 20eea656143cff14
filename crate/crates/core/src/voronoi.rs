//! Perfect forms of rank `N` up to equivalence, by Voronoi's neighbor graph.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::{minimal_vectors, short_vectors, sym_dim, Cell, FormRecord, QuadraticForm, UnimodularMap};
use crate::isometry::{find_one, Fingerprint, Group, PreparedCell};
use crate::polyhedral::{cone_facets, Cone, Facet};

const MAX_SEARCH_STEPS: usize = 4096;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NeighborRef {
    pub facet: usize,
    /// Index of the representative equivalent to the neighbor.
    pub index: usize,
    /// `sigma(representative) . witness = sigma(neighbor)`.
    pub witness: UnimodularMap,
}

#[derive(Clone, Debug)]
pub struct PerfectFormRecord {
    pub index: usize,
    /// Normalized to minimum 1.
    pub form: QuadraticForm,
    pub min_vectors: Cell,
    pub facets: Vec<Facet>,
    pub neighbors: Vec<NeighborRef>,
}

/// On-disk shape of a [`PerfectFormRecord`]: integer matrices only.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerfectFormLine {
    pub index: usize,
    pub form: FormRecord,
    pub min_vectors: Cell,
    pub facets: Vec<Facet>,
    pub neighbors: Vec<NeighborRef>,
}

impl PerfectFormRecord {
    pub fn to_line(&self) -> Result<PerfectFormLine> {
        Ok(PerfectFormLine {
            index: self.index,
            form: self.form.to_record()?,
            min_vectors: self.min_vectors.clone(),
            facets: self.facets.clone(),
            neighbors: self.neighbors.clone(),
        })
    }

    pub fn from_line(line: PerfectFormLine) -> Result<Self> {
        Ok(PerfectFormRecord {
            index: line.index,
            form: QuadraticForm::from_record(&line.form)?,
            min_vectors: line.min_vectors,
            facets: line.facets,
            neighbors: line.neighbors,
        })
    }
}

/// Symmetric integer matrix `R` with `v^t R v = 2 (normal . flat(v v^t))`.
fn normal_form(normal: &[i128], n: usize) -> Result<QuadraticForm> {
    if normal.len() != sym_dim(n) {
        return Err(Error::DimensionMismatch { expected: sym_dim(n), got: normal.len() });
    }
    let mut m = vec![vec![0i64; n]; n];
    let mut k = 0;
    for i in 0..n {
        for j in i..n {
            let x = i64::try_from(normal[k]).map_err(|_| Error::Parse("facet normal exceeds i64".into()))?;
            if i == j {
                m[i][i] = 2 * x;
            } else {
                m[i][j] = x;
                m[j][i] = x;
            }
            k += 1;
        }
    }
    QuadraticForm::from_integers(&m)
}

fn normalize_min_one(h: &QuadraticForm) -> Result<QuadraticForm> {
    let (min, _) = minimal_vectors(h)?;
    Ok(h.scaled(&min.recip()))
}

/// The perfect form sharing the facet `f` with `p`.
///
/// Moves along `h + t R`, where `R` is the facet normal read as a form
/// (nonnegative on the minimal vectors of `h`, zero on the facet). Step
/// doubling and bisection find a `u` with `h + u R` positive definite and of
/// minimum below that of `h`; every vector reaching the old minimum before
/// `u` is then among the short vectors of `h + u R`, which pins down the
/// exact contiguity parameter.
pub fn neighbor_form(p: &PerfectFormRecord, f: &Facet) -> Result<QuadraticForm> {
    let n = p.form.rank();
    let h = &p.form;
    let r = normal_form(&f.normal, n)?;
    for (i, v) in p.min_vectors.vectors().iter().enumerate() {
        let val = r.evaluate(v.coords());
        if val.is_negative() || (val.is_zero() != f.on_set.contains(&i)) {
            return Err(Error::FacetNotIncident("normal does not match minimal vectors"));
        }
    }
    let lambda = minimal_vectors(h)?.0;

    let mut lo = BigRational::zero();
    let mut hi = BigRational::one();
    let two = BigRational::from_integer(2.into());
    let mut steps = 0;
    let probe = loop {
        steps += 1;
        if steps > MAX_SEARCH_STEPS {
            return Err(Error::SearchDivergence(steps));
        }
        let candidate = h.add_scaled(&hi, &r);
        if !candidate.is_positive_definite() {
            hi = (&lo + &hi) / &two;
            continue;
        }
        let (m, _) = minimal_vectors(&candidate)?;
        if m < lambda {
            break candidate;
        }
        lo = hi.clone();
        hi = &hi * &two;
    };

    let (a, scale) = probe.integer_normalization();
    let bound: BigInt = (&lambda / &scale).floor().to_integer();
    let mut rho: Option<BigRational> = None;
    for (v, _) in short_vectors(&a, &bound)? {
        let rv = r.evaluate(&v);
        if rv.is_negative() {
            let t = (h.evaluate(&v) - &lambda) / (-rv);
            if rho.as_ref().is_none_or(|best| t < *best) {
                rho = Some(t);
            }
        }
    }
    let rho = rho.ok_or(Error::SearchDivergence(steps))?;
    normalize_min_one(&h.add_scaled(&rho, &r))
}

fn make_record(index: usize, form: QuadraticForm) -> Result<PerfectFormRecord> {
    let (_, m) = minimal_vectors(&form)?;
    if m.proj_dim() + 1 != sym_dim(form.rank()) {
        return Err(Error::Parse("neighbor search produced a non-perfect form".into()));
    }
    let facets = cone_facets(&Cone::of_cell(&m)?)?;
    Ok(PerfectFormRecord { index, form, min_vectors: m, facets, neighbors: Vec::new() })
}

/// Representatives of all perfect forms of rank `n` modulo the group, by a
/// breadth-first traversal of the neighbor graph from `A_n`.
///
/// Neighbors of one form are computed in parallel; deduplication runs
/// serially in facet order, so the output does not depend on scheduling.
pub fn enumerate_perfect_forms(n: usize, group: Group) -> Result<Vec<PerfectFormRecord>> {
    if !(2..=6).contains(&n) {
        return Err(Error::UnsupportedRank(n));
    }
    let seed = normalize_min_one(&QuadraticForm::root_lattice_a(n))?;
    let mut records = vec![make_record(0, seed)?];
    let mut prepared = vec![PreparedCell::new(records[0].min_vectors.clone())?];
    let mut buckets: HashMap<Fingerprint, Vec<usize>> = HashMap::new();
    buckets.entry(prepared[0].fingerprint().clone()).or_default().push(0);

    let mut i = 0;
    while i < records.len() {
        let neighbors: Vec<QuadraticForm> = records[i]
            .facets
            .par_iter()
            .map(|f| neighbor_form(&records[i], f))
            .collect::<Result<_>>()?;
        let mut refs = Vec::with_capacity(neighbors.len());
        for (facet, form) in neighbors.into_iter().enumerate() {
            let (_, m) = minimal_vectors(&form)?;
            let pc = PreparedCell::new(m)?;
            let bucket = buckets.entry(pc.fingerprint().clone()).or_default();
            let hit = bucket.iter().find_map(|&j| find_one(&prepared[j], &pc, group).map(|g| (j, g)));
            let (index, witness) = match hit {
                Some(found) => found,
                None => {
                    let j = records.len();
                    bucket.push(j);
                    records.push(make_record(j, form)?);
                    prepared.push(pc);
                    (j, UnimodularMap::identity(n))
                }
            };
            refs.push(NeighborRef { facet, index, witness });
        }
        records[i].neighbors = refs;
        i += 1;
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::is_perfect;
    use crate::isometry::{find_equivalence, IsometryQuery, SearchMode};
    use crate::polyhedral::face_from_facet;

    #[test]
    fn rank_two_has_one_class() {
        let recs = enumerate_perfect_forms(2, Group::GL).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].facets.len(), 3);
        for f in &recs[0].facets {
            let h = neighbor_form(&recs[0], f).unwrap();
            assert!(is_perfect(&h).unwrap());
            let (_, m) = minimal_vectors(&h).unwrap();
            let q = IsometryQuery {
                source: &recs[0].min_vectors,
                target: &m,
                group: Group::GL,
                mode: SearchMode::FindOne,
            };
            assert!(find_equivalence(&q).unwrap().is_some());
            // The neighbor shares exactly the facet's vectors.
            let face = face_from_facet(&recs[0].min_vectors, f).unwrap();
            assert_eq!(m.intersection(&recs[0].min_vectors).unwrap(), face);
        }
    }

    #[test]
    fn rank_three_has_one_class() {
        assert_eq!(enumerate_perfect_forms(3, Group::GL).unwrap().len(), 1);
    }

    #[test]
    fn rank_four_has_two_classes() {
        let recs = enumerate_perfect_forms(4, Group::GL).unwrap();
        assert_eq!(recs.len(), 2);
        let sizes: Vec<usize> = recs.iter().map(|r| r.min_vectors.len()).collect();
        assert_eq!(sizes, vec![10, 12]);
    }

    #[test]
    fn unsupported_rank() {
        assert!(matches!(enumerate_perfect_forms(1, Group::GL), Err(Error::UnsupportedRank(1))));
        assert!(matches!(enumerate_perfect_forms(7, Group::GL), Err(Error::UnsupportedRank(7))));
    }
}
