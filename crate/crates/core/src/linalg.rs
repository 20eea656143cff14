//! Exact integer linear algebra on small dense matrices.
//!
//! Everything here works over `i128` with checked arithmetic and keeps rows
//! primitive (content 1) between elimination steps, which keeps entries small
//! for the symmetric-matrix spans we deal with (dimension at most 21).

use num_integer::Integer;

#[inline]
pub(crate) fn mul(a: i128, b: i128) -> i128 {
    a.checked_mul(b).expect("i128 overflow in exact arithmetic")
}

#[inline]
pub(crate) fn sub(a: i128, b: i128) -> i128 {
    a.checked_sub(b).expect("i128 overflow in exact arithmetic")
}

#[inline]
pub(crate) fn add(a: i128, b: i128) -> i128 {
    a.checked_add(b).expect("i128 overflow in exact arithmetic")
}

pub fn dot(a: &[i128], b: &[i128]) -> i128 {
    a.iter().zip(b).fold(0, |acc, (x, y)| add(acc, mul(*x, *y)))
}

/// Divides `v` by the gcd of its entries. Returns the content that was removed
/// (0 for the zero vector).
pub fn make_primitive(v: &mut [i128]) -> i128 {
    let g = v.iter().fold(0i128, |g, x| g.gcd(x));
    if g > 1 {
        v.iter_mut().for_each(|x| *x /= g);
    }
    g
}

/// Row echelon form built one vector at a time.
///
/// Row `i` is zero on the pivot columns of rows `0..i` and nonzero on its own
/// pivot, so the square submatrix on [`Echelon::pivots`] is triangular with a
/// nonzero diagonal.
#[derive(Clone, Debug)]
pub struct Echelon {
    width: usize,
    rows: Vec<Vec<i128>>,
    pivots: Vec<usize>,
}

impl Echelon {
    pub fn new(width: usize) -> Self {
        Echelon {
            width,
            rows: Vec::new(),
            pivots: Vec::new(),
        }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    /// Reduces `v` against the current rows; the result is zero iff `v` lies in
    /// their span.
    pub fn reduce(&self, v: &[i128]) -> Vec<i128> {
        assert_eq!(v.len(), self.width);
        let mut v = v.to_vec();
        for (row, &p) in self.rows.iter().zip(&self.pivots) {
            if v[p] != 0 {
                let (a, b) = (row[p], v[p]);
                for (x, r) in v.iter_mut().zip(row) {
                    *x = sub(mul(a, *x), mul(b, *r));
                }
                make_primitive(&mut v);
            }
        }
        v
    }

    pub fn contains(&self, v: &[i128]) -> bool {
        self.reduce(v).iter().all(|x| *x == 0)
    }

    /// Adds `v` if it is independent of the current rows. Returns whether the
    /// rank increased.
    pub fn insert(&mut self, v: &[i128]) -> bool {
        let r = self.reduce(v);
        match r.iter().position(|x| *x != 0) {
            Some(p) => {
                self.rows.push(r);
                self.pivots.push(p);
                true
            }
            None => false,
        }
    }
}

pub fn rank(rows: &[Vec<i128>]) -> usize {
    let Some(first) = rows.first() else { return 0 };
    let mut e = Echelon::new(first.len());
    for r in rows {
        e.insert(r);
    }
    e.rank()
}

/// Indices of the rows that increase the rank when scanned in order.
pub fn greedy_basis(rows: &[Vec<i128>]) -> Vec<usize> {
    let Some(first) = rows.first() else { return Vec::new() };
    let mut e = Echelon::new(first.len());
    rows.iter()
        .enumerate()
        .filter_map(|(i, r)| e.insert(r).then_some(i))
        .collect()
}

/// Determinant by fraction-free (Bareiss) elimination.
pub fn det(m: &[Vec<i128>]) -> i128 {
    let n = m.len();
    if n == 0 {
        return 1;
    }
    let mut a: Vec<Vec<i128>> = m.to_vec();
    let mut sign = 1;
    let mut prev = 1i128;
    for k in 0..n - 1 {
        if a[k][k] == 0 {
            match (k + 1..n).find(|&i| a[i][k] != 0) {
                Some(i) => {
                    a.swap(i, k);
                    sign = -sign;
                }
                None => return 0,
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = sub(mul(a[i][j], a[k][k]), mul(a[i][k], a[k][j]));
                a[i][j] = v / prev;
            }
        }
        prev = a[k][k];
    }
    sign * a[n - 1][n - 1]
}

/// Adjugate of a square matrix, so that `m * adj(m) = det(m) * I`.
pub fn adjugate(m: &[Vec<i128>]) -> Vec<Vec<i128>> {
    let n = m.len();
    if n == 1 {
        return vec![vec![1]];
    }
    let mut adj = vec![vec![0i128; n]; n];
    for i in 0..n {
        for j in 0..n {
            let minor: Vec<Vec<i128>> = (0..n)
                .filter(|&r| r != i)
                .map(|r| (0..n).filter(|&c| c != j).map(|c| m[r][c]).collect())
                .collect();
            let c = det(&minor);
            adj[j][i] = if (i + j) % 2 == 0 { c } else { -c };
        }
    }
    adj
}

/// Primitive integer basis of `{x : rows * x = 0}`.
pub fn nullspace(rows: &[Vec<i128>], width: usize) -> Vec<Vec<i128>> {
    // Gauss-Jordan: every pivot column is zero in all other rows.
    let mut a: Vec<Vec<i128>> = rows.to_vec();
    let mut pivots: Vec<usize> = Vec::new();
    let mut r = 0;
    for col in 0..width {
        let Some(p) = (r..a.len()).find(|&i| a[i][col] != 0) else { continue };
        a.swap(r, p);
        for i in 0..a.len() {
            if i != r && a[i][col] != 0 {
                let (x, y) = (a[r][col], a[i][col]);
                let pivot_row = a[r].clone();
                for (v, pr) in a[i].iter_mut().zip(&pivot_row) {
                    *v = sub(mul(x, *v), mul(y, *pr));
                }
                make_primitive(&mut a[i]);
            }
        }
        pivots.push(col);
        r += 1;
        if r == a.len() {
            break;
        }
    }
    let free: Vec<usize> = (0..width).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let l = pivots.iter().enumerate().fold(1i128, |l, (i, &p)| l.lcm(&a[i][p]));
            let mut x = vec![0i128; width];
            x[f] = l;
            for (i, &p) in pivots.iter().enumerate() {
                x[p] = -mul(a[i][f], l / a[i][p]);
            }
            make_primitive(&mut x);
            x
        })
        .collect()
}

/// Sign of the determinant of the change of basis taking `b` to `a`, where
/// both are bases of the same subspace. `None` if `a` does not span the same
/// subspace as `b` (the restricted determinant vanishes).
pub fn relative_orientation(a: &[Vec<i128>], b: &[Vec<i128>]) -> Option<i8> {
    assert_eq!(a.len(), b.len());
    if a.is_empty() {
        return Some(1);
    }
    let mut e = Echelon::new(b[0].len());
    for v in b {
        if !e.insert(v) {
            return None;
        }
    }
    if a.iter().any(|v| !e.contains(v)) {
        return None;
    }
    let cols = e.pivots().to_vec();
    let restrict = |m: &[Vec<i128>]| -> Vec<Vec<i128>> {
        m.iter().map(|v| cols.iter().map(|&c| v[c]).collect()).collect()
    };
    let da = det(&restrict(a)).signum();
    let db = det(&restrict(b)).signum();
    if da == 0 || db == 0 {
        return None;
    }
    Some((da * db) as i8)
}

pub fn mat_mul(a: &[Vec<i128>], b: &[Vec<i128>]) -> Vec<Vec<i128>> {
    let m = b.first().map_or(0, Vec::len);
    a.iter()
        .map(|row| {
            (0..m)
                .map(|j| row.iter().zip(b).fold(0, |acc, (x, br)| add(acc, mul(*x, br[j]))))
                .collect()
        })
        .collect()
}

pub fn transpose<T: Copy>(a: &[Vec<T>]) -> Vec<Vec<T>> {
    let m = a.first().map_or(0, Vec::len);
    (0..m).map(|j| a.iter().map(|r| r[j]).collect()).collect()
}
