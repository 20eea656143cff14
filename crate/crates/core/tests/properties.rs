mod common;

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::checks;
use common::{complex, records, GROUPS};
use voronoi_core::complex::{ChainComplexData, SparseMatrix, VectorOrder};
use voronoi_core::forms::{minimal_vectors, Cell, FormRecord, LatticeVector, QuadraticForm, UnimodularMap};
use voronoi_core::homology::{
    homology_of, smith_normal_form, smith_normal_form_with_transforms, SerreClassFilter,
};
use voronoi_core::isometry::{find_all, find_one, stabilizer_prepared, Group, PreparedCell};
use voronoi_core::polyhedral::{cone_facets, Cone};
use voronoi_core::voronoi::neighbor_form;

#[test]
fn face_calculus_on_all_facet_pairs() {
    for n in 2..=5 {
        let pairs = checks::face_calculus(complex(n, Group::GL)).unwrap();
        assert!(pairs > 0);
    }
}

#[test]
fn eta_does_not_depend_on_witness() {
    for n in 2..=5 {
        for g in GROUPS {
            checks::eta_independence(complex(n, g)).unwrap();
        }
    }
    assert!(checks::eta_independence(complex(4, Group::GL)).unwrap() > 0);
}

#[test]
fn d_squared_vanishes() {
    for n in 2..=5 {
        for g in GROUPS {
            for order in [VectorOrder::Lex, VectorOrder::ReverseLex] {
                let cc = complex(n, g).chain_complex(order).unwrap();
                cc.verify_d_squared().unwrap_or_else(|e| panic!("N={n} {g} {order:?}: {e}"));
            }
        }
    }
}

#[test]
fn euler_characteristic_on_every_complex() {
    for n in 2..=5 {
        for g in GROUPS {
            checks::euler(complex(n, g)).unwrap();
        }
    }
}

#[test]
fn minimal_vectors_are_equivariant() {
    let reps: Vec<_> = (2..=5).flat_map(|n| records(n).iter()).collect();
    assert_eq!(checks::minimal_vector_equivariance(&reps, 100, 7).unwrap(), 100);
}

#[test]
fn snf_matches_determinantal_divisors() {
    assert_eq!(checks::snf_oracle(500, 8, 11).unwrap(), 500);
}

fn big_rank(m: &[Vec<i64>]) -> usize {
    let mut a: Vec<Vec<BigRational>> =
        m.iter().map(|r| r.iter().map(|&x| BigRational::from_integer(x.into())).collect()).collect();
    let cols = a.first().map_or(0, Vec::len);
    let mut rank = 0;
    for c in 0..cols {
        let Some(p) = (rank..a.len()).find(|&i| !a[i][c].is_zero()) else { continue };
        a.swap(rank, p);
        for i in rank + 1..a.len() {
            let f = &a[i][c] / &a[rank][c];
            let pivot = a[rank].clone();
            for (x, y) in a[i].iter_mut().zip(&pivot) {
                *x -= &f * y;
            }
        }
        rank += 1;
    }
    rank
}

#[test]
fn snf_rank_matches_rational_elimination() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let m = checks::random_matrix(&mut rng, 8, 9);
        assert_eq!(smith_normal_form(&checks::to_big(&m)).rank, big_rank(&m), "{m:?}");
    }
    for n in 2..=5 {
        for d in &complex(n, Group::GL).chain_complex(VectorOrder::Lex).unwrap().differentials {
            assert_eq!(smith_normal_form(&voronoi_core::homology::sparse_to_big(d)).rank, big_rank(&d.to_dense()));
        }
    }
}

fn det_big(m: &[Vec<BigInt>]) -> BigRational {
    let mut a: Vec<Vec<BigRational>> = m.iter().map(|r| r.iter().cloned().map(BigRational::from_integer).collect()).collect();
    let n = a.len();
    let mut det = BigRational::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&i| !a[i][c].is_zero()) else { return BigRational::zero() };
        if p != c {
            a.swap(p, c);
            det = -det;
        }
        det *= &a[c][c];
        for i in c + 1..n {
            let f = &a[i][c] / &a[c][c];
            let pivot = a[c].clone();
            for (x, y) in a[i].iter_mut().zip(&pivot) {
                *x -= &f * y;
            }
        }
    }
    det
}

#[test]
fn snf_transforms_are_unimodular() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let m = checks::to_big(&checks::random_matrix(&mut rng, 6, 9));
        let f = smith_normal_form_with_transforms(&m);
        let (u, v) = (f.u.unwrap(), f.v.unwrap());
        assert_eq!(det_big(&u).abs(), BigRational::one());
        assert_eq!(det_big(&v).abs(), BigRational::one());
        let prod: Vec<Vec<BigInt>> = u
            .iter()
            .map(|r| (0..m[0].len()).map(|j| r.iter().zip(&m).map(|(x, mr)| x * &mr[j]).sum()).collect())
            .collect();
        let prod: Vec<Vec<BigInt>> = prod
            .iter()
            .map(|r| (0..v[0].len()).map(|j| r.iter().zip(&v).map(|(x, vr)| x * &vr[j]).sum()).collect())
            .collect();
        for (i, row) in prod.iter().enumerate() {
            for (j, x) in row.iter().enumerate() {
                let expected = if i == j && i < f.divisors.len() { f.divisors[i].clone() } else { BigInt::zero() };
                assert_eq!(*x, expected);
            }
        }
    }
}

fn permuted(cc: &ChainComplexData, rng: &mut ChaCha8Rng) -> ChainComplexData {
    let perms: Vec<Vec<usize>> = cc
        .sigma
        .iter()
        .map(|s| {
            let mut p: Vec<usize> = (0..s.len()).collect();
            p.shuffle(rng);
            p
        })
        .collect();
    let differentials = cc
        .differentials
        .iter()
        .enumerate()
        .map(|(n, d)| {
            let rows = if n == 0 { None } else { Some(&perms[n - 1]) };
            SparseMatrix::from_entries(
                d.rows,
                d.cols,
                d.entries.iter().map(|&(r, c, v)| (rows.map_or(r, |p| p[r]), perms[n][c], v)),
            )
        })
        .collect();
    let sigma = cc
        .sigma
        .iter()
        .zip(&perms)
        .map(|(s, p)| {
            let mut out = s.clone();
            for (i, &j) in p.iter().enumerate() {
                out[j] = s[i].clone();
            }
            out
        })
        .collect();
    ChainComplexData { sigma, differentials, ..cc.clone() }
}

#[test]
fn homology_ignores_basis_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for n in 3..=5 {
        for g in GROUPS {
            let cc = complex(n, g).chain_complex(VectorOrder::Lex).unwrap();
            let filter = SerreClassFilter::new(n as u64 + 1).unwrap();
            let base = homology_of(&cc, filter).unwrap();
            for _ in 0..3 {
                assert_eq!(homology_of(&permuted(&cc, &mut rng), filter).unwrap(), base);
            }
        }
    }
}

#[test]
fn reversed_vector_order_gives_same_homology() {
    for n in 2..=5 {
        for g in GROUPS {
            let filter = SerreClassFilter::new(n as u64 + 1).unwrap();
            let lex = homology_of(&complex(n, g).chain_complex(VectorOrder::Lex).unwrap(), filter).unwrap();
            let rev = homology_of(&complex(n, g).chain_complex(VectorOrder::ReverseLex).unwrap(), filter).unwrap();
            assert_eq!(lex, rev, "N={n} {g}");
        }
    }
}

#[test]
fn neighbors_point_back() {
    for n in 2..=4 {
        let recs = records(n);
        for p in recs {
            for (fi, f) in p.facets.iter().enumerate() {
                let q = neighbor_form(p, f).unwrap();
                let (_, mq) = minimal_vectors(&q).unwrap();
                let shared = p.min_vectors.intersection(&mq).unwrap();
                let qf = cone_facets(&Cone::of_cell(&mq).unwrap()).unwrap();
                let back = qf
                    .iter()
                    .find(|g| g.on_set.iter().map(|&i| mq.vectors()[i].clone()).collect::<Vec<_>>() == shared.vectors())
                    .unwrap_or_else(|| panic!("N={n} form {} facet {fi}: shared face is not a facet", p.index));
                let r = neighbor_form(&voronoi_core::voronoi::PerfectFormRecord {
                    index: 0,
                    form: q.clone(),
                    min_vectors: mq.clone(),
                    facets: qf.clone(),
                    neighbors: Vec::new(),
                }, back)
                .unwrap();
                assert_eq!(r, p.form, "N={n} form {} facet {fi}", p.index);
            }
        }
    }
}

#[test]
fn neighbor_witnesses_map_cells() {
    for n in 2..=5 {
        let recs = records(n);
        for p in recs {
            for nb in &p.neighbors {
                let q = neighbor_form(p, &p.facets[nb.facet]).unwrap();
                let (_, mq) = minimal_vectors(&q).unwrap();
                assert_eq!(recs[nb.index].min_vectors.act(&nb.witness), mq);
            }
        }
    }
}

#[test]
fn class_counts_of_perfect_forms() {
    let counts: Vec<usize> = (2..=5).map(|n| records(n).len()).collect();
    assert_eq!(counts, vec![1, 1, 2, 3]);
}

#[test]
fn find_all_is_a_stabilizer_coset() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for g in GROUPS {
        let cx = complex(3, g);
        for level in &cx.levels {
            for class in &level.classes {
                let pc = PreparedCell::new(class.cell.clone()).unwrap();
                let stab = stabilizer_prepared(&pc, g);
                assert_eq!(stab, class.stabilizer);
                let (m, _) = checks::random_unimodular(&mut rng, 3, 8);
                let mut gamma = UnimodularMap::new(m).unwrap();
                if !g.admits(&gamma) {
                    gamma = gamma.compose(&UnimodularMap::reflection(3));
                }
                let target = PreparedCell::new(class.cell.act(&gamma)).unwrap();
                let mut all = find_all(&pc, &target, g);
                all.sort();
                let mut coset: Vec<UnimodularMap> = stab.elements.iter().map(|s| s.compose(&gamma)).collect();
                coset.sort();
                assert_eq!(all, coset);
                assert!(find_one(&pc, &target, g).is_some());
            }
        }
    }
}

fn small_form(n: usize) -> impl Strategy<Value = Vec<Vec<i64>>> {
    proptest::collection::vec(-2i64..=2, n * n).prop_flat_map(move |off| {
        proptest::collection::vec(0i64..=3, n).prop_map(move |extra| {
            let mut m = vec![vec![0i64; n]; n];
            for i in 0..n {
                for j in i + 1..n {
                    m[i][j] = off[i * n + j];
                    m[j][i] = off[i * n + j];
                }
            }
            // Diagonally dominant, so positive definite; entries stay <= 5 in size.
            for i in 0..n {
                let row: i64 = (0..n).filter(|&j| j != i).map(|j| m[i][j].abs()).sum();
                m[i][i] = (row + 1 + extra[i]).min(5).max(row + 1);
            }
            m
        })
    })
}

fn brute_minimal(m: &[Vec<i64>]) -> (i64, BTreeSet<LatticeVector>) {
    let n = m.len();
    let value = |v: &[i64]| -> i64 { (0..n).map(|i| (0..n).map(|j| v[i] * m[i][j] * v[j]).sum::<i64>()).sum() };
    // For diagonally dominant forms h[v] >= max |v_i|, so min <= min diag bounds the box.
    let bound = (0..n).map(|i| m[i][i]).min().unwrap();
    let mut best = i64::MAX;
    let mut set = BTreeSet::new();
    let mut v = vec![-bound; n];
    loop {
        let gcd = v.iter().fold(0i64, |g, &x| num_integer::Integer::gcd(&g, &x));
        if gcd == 1 {
            let q = value(&v);
            if q < best {
                best = q;
                set.clear();
            }
            if q == best {
                set.insert(LatticeVector::new(v.clone()).unwrap());
            }
        }
        let mut k = 0;
        while k < n && v[k] == bound {
            v[k] = -bound;
            k += 1;
        }
        if k == n {
            break;
        }
        v[k] += 1;
    }
    (best, set)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn minimal_vectors_match_box_search(m in (2usize..=4).prop_flat_map(small_form)) {
        let (min, cell) = minimal_vectors(&QuadraticForm::from_integers(&m).unwrap()).unwrap();
        let (bmin, bset) = brute_minimal(&m);
        prop_assert_eq!(min, BigRational::from_integer(bmin.into()));
        prop_assert_eq!(cell.vectors().iter().cloned().collect::<BTreeSet<_>>(), bset);
    }

    #[test]
    fn form_records_round_trip(m in (2usize..=4).prop_flat_map(small_form), num in 1i64..50, den in 1i64..50) {
        let h = QuadraticForm::from_integers(&m).unwrap().scaled(&BigRational::new(num.into(), den.into()));
        let rec = h.to_record().unwrap();
        let line = serde_json::to_string(&rec).unwrap();
        let back: FormRecord = serde_json::from_str(&line).unwrap();
        prop_assert_eq!(&back, &rec);
        prop_assert_eq!(serde_json::to_string(&back).unwrap(), line);
        prop_assert_eq!(QuadraticForm::from_record(&back).unwrap(), h);
    }

    #[test]
    fn act_then_inverse_is_identity(seed in any::<u64>(), pick in 0usize..64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cx = complex(4, Group::GL);
        let cells: Vec<&Cell> = cx.levels.iter().flat_map(|l| l.classes.iter().map(|c| &c.cell)).collect();
        let c = cells[pick % cells.len()];
        let (m, inv) = checks::random_unimodular(&mut rng, 4, 10);
        let g = UnimodularMap::new(m).unwrap();
        let g_inv = g.inverse();
        prop_assert_eq!(g_inv.matrix(), &inv[..]);
        prop_assert_eq!(&c.act(&g).act(&g.inverse()), c);
        prop_assert_eq!(c.act(&g).len(), c.len());
    }

    #[test]
    fn facets_match_subset_enumeration(
        gens in proptest::collection::btree_set(
            (1i128..=3, -3i128..=3, -3i128..=3, -3i128..=3).prop_map(|(a, b, c, d)| vec![a, b, c, d]),
            4..=8,
        )
    ) {
        let gens: Vec<Vec<i128>> = gens.into_iter().collect();
        prop_assume!(voronoi_core::linalg::rank(&gens) == 4);
        let facets = cone_facets(&Cone::new(4, gens.clone()).unwrap()).unwrap();
        let got: BTreeSet<Vec<usize>> = facets.iter().map(|f| f.on_set.clone()).collect();
        prop_assert_eq!(got.len(), facets.len());
        prop_assert_eq!(got, brute_facets(&gens));
    }
}

/// Facets of a full-dimensional cone in `Z^4` from every triple of
/// generators spanning a supporting hyperplane.
fn brute_facets(gens: &[Vec<i128>]) -> BTreeSet<Vec<usize>> {
    let det3 = |a: &[i128], b: &[i128], c: &[i128]| {
        a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0]) + a[2] * (b[0] * c[1] - b[1] * c[0])
    };
    let mut out = BTreeSet::new();
    let k = gens.len();
    for i in 0..k {
        for j in i + 1..k {
            for l in j + 1..k {
                // Normal = generalized cross product of the three vectors.
                let (a, b, c) = (&gens[i], &gens[j], &gens[l]);
                let minor = |skip: usize| {
                    let pick = |v: &[i128]| -> Vec<i128> { (0..4).filter(|&t| t != skip).map(|t| v[t]).collect() };
                    det3(&pick(a), &pick(b), &pick(c))
                };
                let normal: Vec<i128> = (0..4).map(|t| if t % 2 == 0 { minor(t) } else { -minor(t) }).collect();
                if normal.iter().all(|&x| x == 0) {
                    continue;
                }
                let vals: Vec<i128> = gens.iter().map(|g| g.iter().zip(&normal).map(|(x, y)| x * y).sum()).collect();
                let sign = if vals.iter().all(|&v| v >= 0) {
                    1
                } else if vals.iter().all(|&v| v <= 0) {
                    -1
                } else {
                    0
                };
                if sign != 0 {
                    out.insert((0..k).filter(|&t| vals[t] == 0).collect::<Vec<_>>());
                }
            }
        }
    }
    out
}
