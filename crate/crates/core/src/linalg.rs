//! Dense exact linear algebra by Gauss-Jordan elimination.

use crate::scalar::Scalar;

pub type Matrix<S> = Vec<Vec<S>>;

pub fn zeros<S: Scalar>(rows: usize, cols: usize) -> Matrix<S> {
    vec![vec![S::zero(); cols]; rows]
}

pub fn identity<S: Scalar>(n: usize) -> Matrix<S> {
    let mut m = zeros(n, n);
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = S::one();
    }
    m
}

pub fn transpose<S: Scalar>(m: &Matrix<S>) -> Matrix<S> {
    if m.is_empty() {
        return Vec::new();
    }
    (0..m[0].len()).map(|j| m.iter().map(|row| row[j].clone()).collect()).collect()
}

pub fn mat_mul<S: Scalar>(a: &Matrix<S>, b: &Matrix<S>) -> Matrix<S> {
    let cols = b.first().map_or(0, Vec::len);
    a.iter()
        .map(|row| {
            (0..cols)
                .map(|j| {
                    row.iter().zip(b).fold(S::zero(), |acc, (x, brow)| {
                        if x.is_zero() {
                            acc
                        } else {
                            acc.add(&x.mul(&brow[j]))
                        }
                    })
                })
                .collect()
        })
        .collect()
}

pub fn mat_vec<S: Scalar>(a: &Matrix<S>, v: &[S]) -> Vec<S> {
    a.iter()
        .map(|row| row.iter().zip(v).fold(S::zero(), |acc, (x, y)| acc.add(&x.mul(y))))
        .collect()
}

/// Reduced row echelon form in place; returns pivot columns.
pub fn rref<S: Scalar>(m: &mut Matrix<S>) -> Vec<usize> {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let inv = m[r][c].inv().expect("nonzero pivot");
        for x in m[r].iter_mut() {
            *x = x.mul(&inv);
        }
        for i in 0..rows {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                for j in 0..cols {
                    if !m[r][j].is_zero() {
                        let v = m[i][j].sub(&f.mul(&m[r][j]));
                        m[i][j] = v;
                    }
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank<S: Scalar>(m: &Matrix<S>) -> usize {
    let mut a = m.clone();
    rref(&mut a).len()
}

/// Basis of the right kernel `{x : m x = 0}`.
pub fn kernel<S: Scalar>(m: &Matrix<S>, cols: usize) -> Vec<Vec<S>> {
    let mut a = m.clone();
    let pivots = rref(&mut a);
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![S::zero(); cols];
            v[f] = S::one();
            for (r, &p) in pivots.iter().enumerate() {
                v[p] = a[r][f].neg();
            }
            v
        })
        .collect()
}

/// Some solution of `m x = b`, or `None` when inconsistent.
pub fn solve<S: Scalar>(m: &Matrix<S>, b: &[S], cols: usize) -> Option<Vec<S>> {
    let mut aug: Matrix<S> = m
        .iter()
        .zip(b)
        .map(|(row, bi)| {
            let mut r = row.clone();
            r.push(bi.clone());
            r
        })
        .collect();
    let pivots = rref(&mut aug);
    if pivots.last() == Some(&cols) {
        return None;
    }
    let mut x = vec![S::zero(); cols];
    for (r, &p) in pivots.iter().enumerate() {
        x[p] = aug[r][cols].clone();
    }
    Some(x)
}

pub fn inverse<S: Scalar>(m: &Matrix<S>) -> Option<Matrix<S>> {
    let n = m.len();
    let mut aug: Matrix<S> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { S::one() } else { S::zero() }));
            r
        })
        .collect();
    let pivots = rref(&mut aug);
    if pivots.len() < n || pivots[n - 1] >= n {
        return None;
    }
    Some(aug.into_iter().map(|row| row[n..].to_vec()).collect())
}

pub fn determinant<S: Scalar>(m: &Matrix<S>) -> S {
    let n = m.len();
    let mut a = m.clone();
    let mut det = S::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&i| !a[i][c].is_zero()) else {
            return S::zero();
        };
        if p != c {
            a.swap(p, c);
            det = det.neg();
        }
        det = det.mul(&a[c][c]);
        let inv = a[c][c].inv().expect("nonzero pivot");
        for i in c + 1..n {
            if a[i][c].is_zero() {
                continue;
            }
            let f = a[i][c].mul(&inv);
            for j in c..n {
                let v = a[i][j].sub(&f.mul(&a[c][j]));
                a[i][j] = v;
            }
        }
    }
    det
}

/// Every principal minor, indexed by the bitmask of retained rows/columns.
pub fn principal_minors<S: Scalar>(m: &Matrix<S>) -> Vec<(u32, S)> {
    let n = m.len();
    (1u32..(1 << n))
        .map(|mask| {
            let idx: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
            let sub: Matrix<S> =
                idx.iter().map(|&i| idx.iter().map(|&j| m[i][j].clone()).collect()).collect();
            (mask, determinant(&sub))
        })
        .collect()
}
