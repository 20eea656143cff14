//! Quadratic forms, lattice vectors, cells and the unimodular action.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// Dimension of the space of symmetric `n x n` matrices.
pub fn sym_dim(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Top dimension of the projectivized cone of forms, `N(N+1)/2 - 1`.
pub fn top_dimension(n: usize) -> usize {
    sym_dim(n) - 1
}

/// A primitive integer vector with its first nonzero coordinate positive.
///
/// `v` and `-v` define the same rank-one form, so only one of them is stored.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<i64>", into = "Vec<i64>")]
pub struct LatticeVector(Vec<i64>);

impl LatticeVector {
    /// Sign-normalizes `coords`. Fails on the zero vector or a non-primitive
    /// vector.
    pub fn new(coords: Vec<i64>) -> Result<Self> {
        let g = coords.iter().fold(0i64, |g, x| g.gcd(x));
        if g == 0 {
            return Err(Error::ZeroVector(coords));
        }
        if g != 1 {
            return Err(Error::NotPrimitive(coords));
        }
        Ok(Self::canonical_unchecked(coords))
    }

    pub(crate) fn canonical_unchecked(mut coords: Vec<i64>) -> Self {
        if coords.iter().find(|x| **x != 0).is_some_and(|x| *x < 0) {
            coords.iter_mut().for_each(|x| *x = -*x);
        }
        LatticeVector(coords)
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Upper triangle of `v v^t`, row by row.
    pub fn sym_flat(&self) -> Vec<i128> {
        sym_flat(&self.0)
    }

    /// `gamma^t v`, sign-normalized.
    pub fn act(&self, g: &UnimodularMap) -> LatticeVector {
        LatticeVector::canonical_unchecked(g.transpose_apply(&self.0))
    }
}

impl fmt::Debug for LatticeVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl TryFrom<Vec<i64>> for LatticeVector {
    type Error = Error;
    fn try_from(v: Vec<i64>) -> Result<Self> {
        LatticeVector::new(v)
    }
}

impl From<LatticeVector> for Vec<i64> {
    fn from(v: LatticeVector) -> Self {
        v.0
    }
}

pub(crate) fn sym_flat(v: &[i64]) -> Vec<i128> {
    let n = v.len();
    let mut out = Vec::with_capacity(sym_dim(n));
    for i in 0..n {
        for j in i..n {
            out.push(v[i] as i128 * v[j] as i128);
        }
    }
    out
}

/// A finite set of lattice vectors, identified with the cell spanned by their
/// rank-one forms.
#[derive(Clone, Serialize, Deserialize)]
#[serde(try_from = "Vec<LatticeVector>", into = "Vec<LatticeVector>")]
pub struct Cell {
    vectors: Vec<LatticeVector>,
    span_rank: usize,
    proj_dim: usize,
}

impl Cell {
    pub fn new(mut vectors: Vec<LatticeVector>) -> Result<Self> {
        let Some(first) = vectors.first() else {
            return Err(Error::EmptyCell);
        };
        let n = first.dim();
        if let Some(v) = vectors.iter().find(|v| v.dim() != n) {
            return Err(Error::DimensionMismatch { expected: n, got: v.dim() });
        }
        vectors.sort();
        vectors.dedup();
        let coords: Vec<Vec<i128>> = vectors
            .iter()
            .map(|v| v.coords().iter().map(|&x| x as i128).collect())
            .collect();
        let flats: Vec<Vec<i128>> = vectors.iter().map(LatticeVector::sym_flat).collect();
        Ok(Cell {
            span_rank: linalg::rank(&coords),
            proj_dim: linalg::rank(&flats) - 1,
            vectors,
        })
    }

    /// Dimension `N` of the ambient lattice.
    pub fn lattice_rank(&self) -> usize {
        self.vectors[0].dim()
    }

    pub fn vectors(&self) -> &[LatticeVector] {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn span_rank(&self) -> usize {
        self.span_rank
    }

    pub fn proj_dim(&self) -> usize {
        self.proj_dim
    }

    pub fn contains(&self, v: &LatticeVector) -> bool {
        self.vectors.binary_search(v).is_ok()
    }

    pub fn flats(&self) -> Vec<Vec<i128>> {
        self.vectors.iter().map(LatticeVector::sym_flat).collect()
    }

    /// The cell `c . gamma`, i.e. the vectors `gamma^t v`.
    pub fn act(&self, g: &UnimodularMap) -> Cell {
        Cell::new(self.vectors.iter().map(|v| v.act(g)).collect()).expect("nonempty")
    }

    pub fn sub_cell(&self, indices: &[usize]) -> Result<Cell> {
        Cell::new(indices.iter().map(|&i| self.vectors[i].clone()).collect())
    }

    pub fn intersection(&self, other: &Cell) -> Option<Cell> {
        let common: Vec<LatticeVector> =
            self.vectors.iter().filter(|v| other.contains(v)).cloned().collect();
        Cell::new(common).ok()
    }

    pub fn is_subset_of(&self, other: &Cell) -> bool {
        self.vectors.iter().all(|v| other.contains(v))
    }

    /// `b = sum v v^t`, the barycenter form of the cell.
    pub fn barycenter(&self) -> Vec<Vec<i128>> {
        let n = self.lattice_rank();
        let mut b = vec![vec![0i128; n]; n];
        for v in &self.vectors {
            let c = v.coords();
            for i in 0..n {
                for j in 0..n {
                    b[i][j] += c[i] as i128 * c[j] as i128;
                }
            }
        }
        b
    }
}

impl PartialEq for Cell {
    fn eq(&self, other: &Self) -> bool {
        self.vectors == other.vectors
    }
}

impl Eq for Cell {}

impl std::hash::Hash for Cell {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.vectors.hash(state)
    }
}

impl PartialOrd for Cell {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Cell {
    fn cmp(&self, other: &Self) -> Ordering {
        self.vectors.cmp(&other.vectors)
    }
}

impl fmt::Debug for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(&self.vectors).finish()
    }
}

impl TryFrom<Vec<LatticeVector>> for Cell {
    type Error = Error;
    fn try_from(v: Vec<LatticeVector>) -> Result<Self> {
        Cell::new(v)
    }
}

impl From<Cell> for Vec<LatticeVector> {
    fn from(c: Cell) -> Self {
        c.vectors
    }
}

/// Projective dimension of the cell: `rank{v v^t} - 1`.
pub fn cell_dimension(c: &Cell) -> Result<usize> {
    if c.is_empty() {
        return Err(Error::EmptyCell);
    }
    Ok(c.proj_dim())
}

/// Whether the cell contains a positive definite form, i.e. its vectors span
/// `Q^N`.
pub fn meets_interior(c: &Cell) -> bool {
    c.span_rank() == c.lattice_rank()
}

/// An integer matrix of determinant +-1, acting on forms by `h . g = g^t h g`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<i64>>", into = "Vec<Vec<i64>>")]
pub struct UnimodularMap {
    matrix: Vec<Vec<i64>>,
}

impl UnimodularMap {
    pub fn new(matrix: Vec<Vec<i64>>) -> Result<Self> {
        let n = matrix.len();
        if let Some(r) = matrix.iter().find(|r| r.len() != n) {
            return Err(Error::DimensionMismatch { expected: n, got: r.len() });
        }
        let d = linalg::det(&to_i128(&matrix));
        if d.abs() != 1 {
            return Err(Error::NotUnimodular(d.to_string()));
        }
        Ok(UnimodularMap { matrix })
    }

    pub fn identity(n: usize) -> Self {
        let matrix = (0..n).map(|i| (0..n).map(|j| i64::from(i == j)).collect()).collect();
        UnimodularMap { matrix }
    }

    /// `diag(-1, 1, ..., 1)`.
    pub fn reflection(n: usize) -> Self {
        let mut g = Self::identity(n);
        g.matrix[0][0] = -1;
        g
    }

    pub fn negated(&self) -> Self {
        let matrix = self.matrix.iter().map(|r| r.iter().map(|x| -x).collect()).collect();
        UnimodularMap { matrix }
    }

    pub(crate) fn from_transpose_unchecked(gt: Vec<Vec<i64>>) -> Self {
        UnimodularMap { matrix: linalg::transpose(&gt) }
    }

    pub fn dim(&self) -> usize {
        self.matrix.len()
    }

    pub fn matrix(&self) -> &[Vec<i64>] {
        &self.matrix
    }

    pub fn det(&self) -> i64 {
        linalg::det(&to_i128(&self.matrix)) as i64
    }

    /// `self * other`. Acting by the product is acting by `self`, then `other`.
    pub fn compose(&self, other: &UnimodularMap) -> UnimodularMap {
        let m = linalg::mat_mul(&to_i128(&self.matrix), &to_i128(&other.matrix));
        UnimodularMap { matrix: from_i128(&m) }
    }

    pub fn inverse(&self) -> UnimodularMap {
        let m = to_i128(&self.matrix);
        let d = linalg::det(&m);
        let adj = linalg::adjugate(&m);
        let inv: Vec<Vec<i128>> = adj.iter().map(|r| r.iter().map(|x| x * d).collect()).collect();
        UnimodularMap { matrix: from_i128(&inv) }
    }

    /// `g^t v`.
    pub fn transpose_apply(&self, v: &[i64]) -> Vec<i64> {
        let n = self.dim();
        (0..n).map(|j| (0..n).map(|i| self.matrix[i][j] * v[i]).sum()).collect()
    }
}

impl fmt::Debug for UnimodularMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.matrix)
    }
}

impl TryFrom<Vec<Vec<i64>>> for UnimodularMap {
    type Error = Error;
    fn try_from(m: Vec<Vec<i64>>) -> Result<Self> {
        UnimodularMap::new(m)
    }
}

impl From<UnimodularMap> for Vec<Vec<i64>> {
    fn from(g: UnimodularMap) -> Self {
        g.matrix
    }
}

pub(crate) fn to_i128(m: &[Vec<i64>]) -> Vec<Vec<i128>> {
    m.iter().map(|r| r.iter().map(|&x| x as i128).collect()).collect()
}

pub(crate) fn from_i128(m: &[Vec<i128>]) -> Vec<Vec<i64>> {
    m.iter()
        .map(|r| r.iter().map(|&x| i64::try_from(x).expect("entry fits in i64")).collect())
        .collect()
}

/// A real quadratic form with exact rational Gram matrix.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct QuadraticForm {
    entries: Vec<Vec<BigRational>>,
}

impl QuadraticForm {
    pub fn new(entries: Vec<Vec<BigRational>>) -> Result<Self> {
        let n = entries.len();
        if n == 0 {
            return Err(Error::DimensionMismatch { expected: 1, got: 0 });
        }
        if let Some(r) = entries.iter().find(|r| r.len() != n) {
            return Err(Error::DimensionMismatch { expected: n, got: r.len() });
        }
        for i in 0..n {
            for j in 0..i {
                if entries[i][j] != entries[j][i] {
                    return Err(Error::NotSymmetric);
                }
            }
        }
        Ok(QuadraticForm { entries })
    }

    pub fn from_integers(m: &[Vec<i64>]) -> Result<Self> {
        Self::new(
            m.iter()
                .map(|r| r.iter().map(|&x| BigRational::from_integer(x.into())).collect())
                .collect(),
        )
    }

    pub fn identity(n: usize) -> Self {
        let m: Vec<Vec<i64>> = (0..n).map(|i| (0..n).map(|j| i64::from(i == j)).collect()).collect();
        Self::from_integers(&m).expect("square")
    }

    /// Tridiagonal Gram matrix of the root lattice `A_n` (2 on the diagonal,
    /// -1 beside it).
    pub fn root_lattice_a(n: usize) -> Self {
        let m: Vec<Vec<i64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| match i.abs_diff(j) {
                        0 => 2,
                        1 => -1,
                        _ => 0,
                    })
                    .collect()
            })
            .collect();
        Self::from_integers(&m).expect("square")
    }

    pub fn rank(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[Vec<BigRational>] {
        &self.entries
    }

    pub fn evaluate(&self, v: &[i64]) -> BigRational {
        let n = self.rank();
        let mut acc = BigRational::zero();
        for i in 0..n {
            for j in 0..n {
                if v[i] != 0 && v[j] != 0 {
                    acc += &self.entries[i][j] * BigInt::from(v[i] * v[j]);
                }
            }
        }
        acc
    }

    pub fn scaled(&self, s: &BigRational) -> QuadraticForm {
        let entries = self.entries.iter().map(|r| r.iter().map(|x| x * s).collect()).collect();
        QuadraticForm { entries }
    }

    /// `self + t * other`.
    pub fn add_scaled(&self, t: &BigRational, other: &QuadraticForm) -> QuadraticForm {
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + t * y).collect())
            .collect();
        QuadraticForm { entries }
    }

    /// Sylvester's criterion, via the pivots of an exact `LDL^t`
    /// decomposition (the pivots are ratios of consecutive leading minors).
    pub fn is_positive_definite(&self) -> bool {
        ldl(&self.entries).is_some()
    }

    /// Writes the form as `scale * matrix` with `matrix` a primitive integer
    /// matrix and `scale > 0`.
    pub fn integer_normalization(&self) -> (Vec<Vec<BigInt>>, BigRational) {
        let den = self
            .entries
            .iter()
            .flatten()
            .fold(BigInt::one(), |l, x| l.lcm(x.denom()));
        let ints: Vec<Vec<BigInt>> = self
            .entries
            .iter()
            .map(|r| r.iter().map(|x| (x * &den).to_integer()).collect())
            .collect();
        let g = ints.iter().flatten().fold(BigInt::zero(), |g, x| g.gcd(x));
        let g = if g.is_zero() { BigInt::one() } else { g };
        let matrix = ints.iter().map(|r| r.iter().map(|x| x / &g).collect()).collect();
        (matrix, BigRational::new(g, den))
    }

    pub fn to_record(&self) -> Result<FormRecord> {
        let (m, scale) = self.integer_normalization();
        let matrix = m
            .iter()
            .map(|r| {
                r.iter()
                    .map(|x| x.to_i64().ok_or_else(|| Error::Parse(format!("entry {x} exceeds i64"))))
                    .collect::<Result<Vec<i64>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(FormRecord { rank: self.rank(), matrix, scale: scale.to_string() })
    }

    pub fn from_record(r: &FormRecord) -> Result<Self> {
        if r.matrix.len() != r.rank {
            return Err(Error::DimensionMismatch { expected: r.rank, got: r.matrix.len() });
        }
        let scale = BigRational::from_str(&r.scale).map_err(|e| Error::Parse(e.to_string()))?;
        Ok(Self::from_integers(&r.matrix)?.scaled(&scale))
    }
}

/// One line of a form file: the form equals `scale * matrix`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormRecord {
    pub rank: usize,
    pub matrix: Vec<Vec<i64>>,
    pub scale: String,
}

/// `g^t h g`.
pub fn act_on_form(h: &QuadraticForm, g: &UnimodularMap) -> Result<QuadraticForm> {
    let n = h.rank();
    if g.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: g.dim() });
    }
    let gm = g.matrix();
    let mut out = vec![vec![BigRational::zero(); n]; n];
    for i in 0..n {
        for j in 0..n {
            let mut acc = BigRational::zero();
            for k in 0..n {
                if gm[k][i] == 0 {
                    continue;
                }
                for l in 0..n {
                    if gm[l][j] != 0 {
                        acc += &h.entries[k][l] * BigInt::from(gm[k][i] * gm[l][j]);
                    }
                }
            }
            out[i][j] = acc;
        }
    }
    QuadraticForm::new(out)
}

/// Coefficients of `q(x) = sum_i q_ii (x_i + sum_{j>i} q_ij x_j)^2`. `None`
/// unless the matrix is positive definite.
fn ldl(a: &[Vec<BigRational>]) -> Option<Vec<Vec<BigRational>>> {
    let n = a.len();
    let mut q = a.to_vec();
    for i in 0..n {
        if !q[i][i].is_positive() {
            return None;
        }
        for j in i + 1..n {
            q[j][i] = q[i][j].clone();
            q[i][j] = &q[i][j] / &q[i][i];
        }
        for k in i + 1..n {
            for l in k..n {
                let d = &q[k][i] * &q[i][l];
                q[k][l] -= d;
            }
        }
    }
    Some(q)
}

/// The integers `x` with `(x - c)^2 <= t`, as an inclusive range.
fn integer_window(c: &BigRational, t: &BigRational) -> Option<(i64, i64)> {
    if t.is_negative() {
        return None;
    }
    let half = BigRational::new(1.into(), 2.into());
    let m = (c + &half).floor().to_integer().to_i64()?;
    let inside = |x: i64| -> bool {
        let d = BigRational::from_integer(x.into()) - c;
        &d * &d <= *t
    };
    if !inside(m) {
        return None;
    }
    let edge = |dir: i64| -> i64 {
        // Gallop outward to an outside point, then bisect.
        let mut step = 1i64;
        while inside(m + dir * step) {
            step *= 2;
        }
        let (mut good, mut bad) = (step / 2, step);
        while bad - good > 1 {
            let mid = (good + bad) / 2;
            if inside(m + dir * mid) {
                good = mid;
            } else {
                bad = mid;
            }
        }
        m + dir * good
    };
    Some((edge(-1), edge(1)))
}

/// All vectors `x != 0` with `x^t A x <= bound`, one per `+-` pair (first
/// nonzero coordinate positive), together with their values.
///
/// Exact Fincke-Pohst enumeration over an exact `LDL^t` decomposition; every
/// coordinate window is certified by exact comparison.
pub fn short_vectors(a: &[Vec<BigInt>], bound: &BigInt) -> Result<Vec<(Vec<i64>, BigInt)>> {
    let n = a.len();
    let ar: Vec<Vec<BigRational>> =
        a.iter().map(|r| r.iter().map(|x| BigRational::from_integer(x.clone())).collect()).collect();
    let q = ldl(&ar).ok_or(Error::NotPositiveDefinite)?;
    let mut out = Vec::new();
    let mut x = vec![0i64; n];
    enumerate(&q, a, n - 1, BigRational::from_integer(bound.clone()), &mut x, &mut out);
    out.sort();
    Ok(out)
}

fn enumerate(
    q: &[Vec<BigRational>],
    a: &[Vec<BigInt>],
    i: usize,
    remaining: BigRational,
    x: &mut Vec<i64>,
    out: &mut Vec<(Vec<i64>, BigInt)>,
) {
    let n = x.len();
    let mut c = BigRational::zero();
    for j in i + 1..n {
        if x[j] != 0 {
            c -= &q[i][j] * BigInt::from(x[j]);
        }
    }
    let t = &remaining / &q[i][i];
    let Some((lo, hi)) = integer_window(&c, &t) else { return };
    for xi in lo..=hi {
        x[i] = xi;
        if i == 0 {
            let first = x.iter().find(|v| **v != 0);
            if first.is_some_and(|v| *v > 0) {
                out.push((x.clone(), evaluate_int(a, x)));
            }
        } else {
            let d = BigRational::from_integer(xi.into()) - &c;
            let used = &q[i][i] * &d * &d;
            enumerate(q, a, i - 1, &remaining - used, x, out);
        }
    }
    x[i] = 0;
}

fn evaluate_int(a: &[Vec<BigInt>], v: &[i64]) -> BigInt {
    let n = v.len();
    let mut acc = BigInt::zero();
    for i in 0..n {
        for j in 0..n {
            if v[i] != 0 && v[j] != 0 {
                acc += &a[i][j] * BigInt::from(v[i] * v[j]);
            }
        }
    }
    acc
}

/// The minimum of `h` on `Z^N - {0}` and the vectors attaining it.
pub fn minimal_vectors(h: &QuadraticForm) -> Result<(BigRational, Cell)> {
    if !h.is_positive_definite() {
        return Err(Error::NotPositiveDefinite);
    }
    let (a, scale) = h.integer_normalization();
    let bound = (0..a.len()).map(|i| a[i][i].clone()).min().expect("rank >= 1");
    let found = short_vectors(&a, &bound)?;
    let min = found.iter().map(|(_, v)| v.clone()).min().expect("unit vectors are short");
    let vectors = found
        .into_iter()
        .filter(|(_, v)| *v == min)
        .map(|(x, _)| LatticeVector::new(x))
        .collect::<Result<Vec<_>>>()?;
    Ok((scale * min, Cell::new(vectors)?))
}

/// Whether the rank-one forms on the minimal vectors span all symmetric
/// matrices.
pub fn is_perfect(h: &QuadraticForm) -> Result<bool> {
    let (_, m) = minimal_vectors(h)?;
    Ok(m.proj_dim() + 1 == sym_dim(h.rank()))
}
