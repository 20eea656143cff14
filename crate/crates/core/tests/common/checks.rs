//! Property checks shared by the property and acceptance suites. Each returns
//! the number of cases examined or a description of the first failure.

use std::collections::{BTreeSet, HashMap};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use voronoi_core::complex::{VectorOrder, VoronoiComplex};
use voronoi_core::forms::{minimal_vectors, Cell, LatticeVector, QuadraticForm};
use voronoi_core::homology::{euler_check, homology_of, smith_normal_form, SerreClassFilter};
use voronoi_core::linalg::Echelon;
use voronoi_core::polyhedral::{cone_facets, face_from_facet, Cone};
use voronoi_core::voronoi::PerfectFormRecord;

pub type Check = Result<usize, String>;

/// `m(tau) cap m(tau') = m(tau cap tau')` for every pair of facets of every
/// representative, with `m(tau cap tau')` read off from the linear spans.
pub fn face_calculus(cx: &VoronoiComplex) -> Check {
    let mut pairs = 0;
    for level in &cx.levels {
        for class in &level.classes {
            let sigma = &class.cell;
            let flats = sigma.flats();
            let facets = cone_facets(&Cone::of_cell(sigma).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
            let faces: Vec<Cell> = facets
                .iter()
                .map(|f| face_from_facet(sigma, f))
                .collect::<Result<_, _>>()
                .map_err(|e| e.to_string())?;
            // Bitmask of the vectors of sigma whose rank-one form lies in the
            // span of each face.
            let in_span: Vec<u128> = faces
                .iter()
                .map(|face| {
                    let mut ech = Echelon::new(flats[0].len());
                    face.flats().iter().for_each(|f| {
                        ech.insert(f);
                    });
                    flats.iter().enumerate().filter(|(_, f)| ech.contains(f)).fold(0u128, |m, (i, _)| m | 1 << i)
                })
                .collect();
            let mask = |c: &Cell| -> u128 {
                sigma.vectors().iter().enumerate().filter(|(_, v)| c.contains(v)).fold(0, |m, (i, _)| m | 1 << i)
            };
            let face_masks: Vec<u128> = faces.iter().map(mask).collect();
            for (i, (&span, &own)) in in_span.iter().zip(&face_masks).enumerate() {
                if span != own {
                    return Err(format!("face {i} of {:?} is not closed", sigma.vectors()));
                }
            }
            for i in 0..faces.len() {
                for j in i + 1..faces.len() {
                    let expected = in_span[i] & in_span[j];
                    let got = faces[i].intersection(&faces[j]).map_or(0, |c| mask(&c));
                    if got != expected {
                        return Err(format!("facets {i},{j} of {:?}", sigma.vectors()));
                    }
                    pairs += 1;
                }
            }
        }
    }
    Ok(pairs)
}

pub fn eta_independence(cx: &VoronoiComplex) -> Check {
    let mut n = 0;
    for order in [VectorOrder::Lex, VectorOrder::ReverseLex] {
        n += cx.verify_eta_independence(order).map_err(|e| e.to_string())?;
    }
    Ok(n)
}

/// Sum of `(-1)^n |Sigma_n|` against the homology ranks, both through the
/// library and recomputed here.
pub fn euler(cx: &VoronoiComplex) -> Check {
    let cc = cx.chain_complex(VectorOrder::Lex).map_err(|e| e.to_string())?;
    let h = homology_of(&cc, SerreClassFilter::new(cx.rank as u64 + 1).unwrap()).map_err(|e| e.to_string())?;
    let sign = |n: usize| if n % 2 == 0 { 1i64 } else { -1 };
    let chi_cells: i64 = cc.sigma_counts().iter().enumerate().map(|(n, &c)| sign(n) * c as i64).sum();
    let chi_h: i64 = h.iter().map(|g| sign(g.degree) * g.free_rank as i64).sum();
    if chi_cells != chi_h || !euler_check(&cc, &h) {
        return Err(format!("cells {chi_cells} vs homology {chi_h}"));
    }
    Ok(1)
}

/// A random unimodular matrix and its inverse, as products of elementary
/// matrices.
pub fn random_unimodular(rng: &mut ChaCha8Rng, n: usize, steps: usize) -> (Vec<Vec<i64>>, Vec<Vec<i64>>) {
    let id = |n: usize| -> Vec<Vec<i64>> { (0..n).map(|i| (0..n).map(|j| i64::from(i == j)).collect()).collect() };
    let (mut g, mut inv) = (id(n), id(n));
    for _ in 0..steps {
        let i = rng.gen_range(0..n);
        let j = (i + rng.gen_range(1..n)) % n;
        match rng.gen_range(0..3) {
            0 => {
                // g <- g E with E = I + c e_ij (column op), inverse E^-1 = I - c e_ij.
                let c: i64 = if rng.gen_bool(0.5) { 1 } else { -1 };
                for r in g.iter_mut() {
                    r[j] += c * r[i];
                }
                let row_i = inv[j].clone();
                for (x, y) in inv[i].iter_mut().zip(&row_i) {
                    *x -= c * y;
                }
            }
            1 => {
                for r in g.iter_mut() {
                    r.swap(i, j);
                }
                inv.swap(i, j);
            }
            _ => {
                for r in g.iter_mut() {
                    r[i] = -r[i];
                }
                inv[i].iter_mut().for_each(|x| *x = -*x);
            }
        }
    }
    (g, inv)
}

fn mat_vec(m: &[Vec<i64>], v: &[i64]) -> Vec<i64> {
    m.iter().map(|r| r.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

/// `m(g^t A g) = g^-1 m(A)` and equal minima, for perfect forms of ranks 2..=5.
pub fn minimal_vector_equivariance(reps: &[&PerfectFormRecord], maps: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for k in 0..maps {
        let p = reps[k % reps.len()];
        let n = p.form.rank();
        let a = p.form.to_record().map_err(|e| e.to_string())?.matrix;
        let (g, inv) = random_unimodular(&mut rng, n, 12);
        let b: Vec<Vec<i64>> = (0..n)
            .map(|i| (0..n).map(|j| (0..n).map(|k| (0..n).map(|l| g[k][i] * a[k][l] * g[l][j]).sum::<i64>()).sum()).collect())
            .collect();
        let (ma, ca) = minimal_vectors(&QuadraticForm::from_integers(&a).unwrap()).map_err(|e| e.to_string())?;
        let (mb, cb) = minimal_vectors(&QuadraticForm::from_integers(&b).unwrap()).map_err(|e| e.to_string())?;
        let expected: BTreeSet<LatticeVector> =
            ca.vectors().iter().map(|v| LatticeVector::new(mat_vec(&inv, v.coords())).unwrap()).collect();
        let got: BTreeSet<LatticeVector> = cb.vectors().iter().cloned().collect();
        if ma != mb || expected != got {
            return Err(format!("map {g:?} on form {a:?}"));
        }
    }
    Ok(maps)
}

/// All minors of `m`, memoized by (row set, column set) bitmasks, by Laplace
/// expansion along the first row of each minor.
struct Minors<'a> {
    m: &'a [Vec<i64>],
    memo: HashMap<(u16, u16), i128>,
}

impl Minors<'_> {
    fn get(&mut self, rows: u16, cols: u16) -> i128 {
        if rows == 0 {
            return 1;
        }
        if let Some(&v) = self.memo.get(&(rows, cols)) {
            return v;
        }
        let r0 = rows.trailing_zeros() as usize;
        let rest = rows & !(1 << r0);
        let mut sum = 0i128;
        let mut sign = 1i128;
        for c in 0..16 {
            if cols & (1 << c) == 0 {
                continue;
            }
            let a = i128::from(self.m[r0][c]);
            if a != 0 {
                sum += sign * a * self.get(rest, cols & !(1 << c));
            }
            sign = -sign;
        }
        self.memo.insert((rows, cols), sum);
        sum
    }
}

fn subsets(n: usize, k: usize) -> Vec<u16> {
    (0u16..1 << n).filter(|s| s.count_ones() as usize == k).collect()
}

/// Elementary divisors from determinantal divisors `d_k = gcd of k x k minors`.
pub fn determinantal_divisors(m: &[Vec<i64>]) -> Vec<i128> {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    let mut minors = Minors { m, memo: HashMap::new() };
    let mut d_prev = 1i128;
    let mut out = Vec::new();
    for k in 1..=rows.min(cols) {
        let mut g = 0i128;
        for &rs in &subsets(rows, k) {
            for &cs in &subsets(cols, k) {
                g = g.gcd(&minors.get(rs, cs));
            }
        }
        if g == 0 {
            break;
        }
        out.push(g / d_prev);
        d_prev = g;
    }
    out
}

pub fn random_matrix(rng: &mut ChaCha8Rng, max_dim: usize, bound: i64) -> Vec<Vec<i64>> {
    let r = rng.gen_range(1..=max_dim);
    let c = rng.gen_range(1..=max_dim);
    let sparse = rng.gen_bool(0.3);
    (0..r)
        .map(|_| {
            (0..c)
                .map(|_| if sparse && rng.gen_bool(0.6) { 0 } else { rng.gen_range(-bound..=bound) })
                .collect()
        })
        .collect()
}

pub fn to_big(m: &[Vec<i64>]) -> Vec<Vec<BigInt>> {
    m.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect()
}

/// Smith normal form against determinantal divisors on random matrices.
pub fn snf_oracle(count: usize, max_dim: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..count {
        let m = random_matrix(&mut rng, max_dim, 9);
        let snf = smith_normal_form(&to_big(&m));
        let oracle: Vec<BigInt> = determinantal_divisors(&m).into_iter().map(BigInt::from).collect();
        if snf.divisors != oracle {
            return Err(format!("{m:?}: {:?} vs {:?}", snf.divisors, oracle));
        }
        if snf.divisors.iter().any(|d| !d.is_positive())
            || snf.divisors.windows(2).any(|w| !(&w[1] % &w[0]).is_zero())
        {
            return Err(format!("{m:?}: not a divisibility chain"));
        }
    }
    Ok(count)
}
