//! Facets of polyhedral cones spanned by rank-one forms.
//!
//! Facets are computed inside the linear span of the generators, so the same
//! routine serves both full-dimensional Voronoi domains and their
//! lower-dimensional faces.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::{sym_dim, Cell};
use crate::linalg::{self, dot, make_primitive, Echelon};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cone {
    ambient_dim: usize,
    generators: Vec<Vec<i128>>,
}

impl Cone {
    pub fn new(ambient_dim: usize, generators: Vec<Vec<i128>>) -> Result<Self> {
        if generators.is_empty() {
            return Err(Error::EmptyCell);
        }
        if generators.len() > 128 {
            return Err(Error::TooManyGenerators(generators.len()));
        }
        for g in &generators {
            if g.len() != ambient_dim {
                return Err(Error::DimensionMismatch { expected: ambient_dim, got: g.len() });
            }
            if g.iter().all(|x| *x == 0) {
                return Err(Error::ZeroVector(Vec::new()));
            }
        }
        Ok(Cone { ambient_dim, generators })
    }

    /// The cone on `{v v^t : v in c}` in flattened symmetric coordinates.
    pub fn of_cell(c: &Cell) -> Result<Self> {
        Cone::new(sym_dim(c.lattice_rank()), c.flats())
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn generators(&self) -> &[Vec<i128>] {
        &self.generators
    }

    /// Dimension of the linear span.
    pub fn dim(&self) -> usize {
        linalg::rank(&self.generators)
    }
}

/// A codimension-one face of a cone, given by a primitive normal that is
/// nonnegative on every generator.
///
/// The normal is only meaningful on the span of the cone: it is supported on
/// a set of coordinates that the span projects onto injectively.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Facet {
    pub normal: Vec<i128>,
    pub on_set: Vec<usize>,
}

#[derive(Clone)]
struct Ray {
    v: Vec<i128>,
    zeros: u128,
}

/// All facets of a pointed cone, sorted by incident generator set.
///
/// Incremental double description over the dual cone: start from the simplex
/// on a greedy basis of generators and add the remaining generators as
/// inequalities in index order, combining adjacent rays across each new
/// hyperplane. Adjacency is decided combinatorially on zero sets.
pub fn cone_facets(c: &Cone) -> Result<Vec<Facet>> {
    let gens = &c.generators;
    let basis = linalg::greedy_basis(gens);
    let r = basis.len();
    let mut ech = Echelon::new(c.ambient_dim);
    for &b in &basis {
        ech.insert(&gens[b]);
    }
    let cols = ech.pivots().to_vec();
    let proj: Vec<Vec<i128>> = gens.iter().map(|g| cols.iter().map(|&j| g[j]).collect()).collect();

    let mut processed: u128 = 0;
    for &b in &basis {
        processed |= 1 << b;
    }
    let mut rays: Vec<Ray> = basis
        .iter()
        .enumerate()
        .map(|(j, &bj)| {
            let others: Vec<Vec<i128>> = basis
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != j)
                .map(|(_, &b)| proj[b].clone())
                .collect();
            let mut v = linalg::nullspace(&others, r).pop().expect("one-dimensional kernel");
            if dot(&v, &proj[bj]) < 0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
            Ray { v, zeros: processed & !(1 << bj) }
        })
        .collect();

    for (gi, g) in proj.iter().enumerate() {
        if processed & (1 << gi) != 0 {
            continue;
        }
        let bit = 1u128 << gi;
        let s: Vec<i128> = rays.iter().map(|ray| dot(&ray.v, g)).collect();
        let mut next: Vec<Ray> = Vec::with_capacity(rays.len());
        for (ray, &si) in rays.iter().zip(&s) {
            if si > 0 {
                next.push(ray.clone());
            } else if si == 0 {
                next.push(Ray { v: ray.v.clone(), zeros: ray.zeros | bit });
            }
        }
        for (p, sp) in rays.iter().zip(&s).filter(|(_, s)| **s > 0) {
            for (q, sq) in rays.iter().zip(&s).filter(|(_, s)| **s < 0) {
                let common = p.zeros & q.zeros;
                if r >= 2 && (common.count_ones() as usize) < r - 2 {
                    continue;
                }
                let blocked = rays.iter().any(|w| {
                    !std::ptr::eq(w, p) && !std::ptr::eq(w, q) && common & !w.zeros == 0
                });
                if blocked {
                    continue;
                }
                let mut v: Vec<i128> = p
                    .v
                    .iter()
                    .zip(&q.v)
                    .map(|(a, b)| linalg::sub(linalg::mul(*sp, *b), linalg::mul(*sq, *a)))
                    .collect();
                if make_primitive(&mut v) == 0 {
                    continue;
                }
                next.push(Ray { v, zeros: common | bit });
            }
        }
        rays = next;
        processed |= bit;
    }

    if rays.is_empty() || linalg::rank(&rays.iter().map(|r| r.v.clone()).collect::<Vec<_>>()) < r {
        return Err(Error::NotPointed);
    }
    let mut facets: Vec<Facet> = rays
        .into_iter()
        .map(|ray| {
            let mut normal = vec![0i128; c.ambient_dim];
            for (k, &j) in cols.iter().enumerate() {
                normal[j] = ray.v[k];
            }
            let on_set = (0..gens.len()).filter(|i| ray.zeros & (1 << i) != 0).collect();
            Facet { normal, on_set }
        })
        .collect();
    facets.sort_by(|a, b| a.on_set.cmp(&b.on_set));
    Ok(facets)
}

/// The face of `c` cut out by `f`: the vectors whose rank-one forms lie on the
/// facet hyperplane.
pub fn face_from_facet(c: &Cell, f: &Facet) -> Result<Cell> {
    let flats = c.flats();
    if f.normal.len() != flats[0].len() {
        return Err(Error::DimensionMismatch { expected: flats[0].len(), got: f.normal.len() });
    }
    let mut on = Vec::new();
    for (i, g) in flats.iter().enumerate() {
        match dot(&f.normal, g) {
            0 => on.push(i),
            x if x < 0 => return Err(Error::FacetNotIncident("normal is negative on a generator")),
            _ => {}
        }
    }
    if on != f.on_set {
        return Err(Error::FacetNotIncident("incidence set does not match the normal"));
    }
    if on.len() == c.len() {
        return Err(Error::FacetNotIncident("not a proper facet"));
    }
    let face = c.sub_cell(&on)?;
    if face.proj_dim() + 1 != c.proj_dim() {
        return Err(Error::FacetNotIncident("face has the wrong dimension"));
    }
    Ok(face)
}
