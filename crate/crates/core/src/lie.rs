//! Lie algebra data, the Grassmann algebras `Λg` and `Λg*`, the Schouten
//! bracket, Chevalley-Eilenberg cohomology, and r-matrix data.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::scalar::{Rational, Scalar};

/// Largest supported Lie algebra dimension.
pub const MAX_DIM: usize = 8;

/// Structure constants `C^k_{ij} = e^k([e_i, e_j])` stored densely.
#[derive(Clone, Debug, PartialEq)]
pub struct LieAlgebra {
    dim: usize,
    c: Vec<Rational>,
    abelian: bool,
}

/// First failure found by [`LieAlgebra::validate`].
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LieViolation {
    /// `C^k_{ij} ≠ -C^k_{ji}` (1-based indices).
    Antisymmetry { i: usize, j: usize, k: usize },
    /// The Jacobiator of `(e_i, e_j, e_k)` is nonzero; `value` lists its
    /// components.
    Jacobi { i: usize, j: usize, k: usize, value: Vec<Rational> },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LieCertificate {
    pub dim: usize,
    pub triples_checked: usize,
}

impl LieAlgebra {
    pub fn abelian(dim: usize) -> Result<Self> {
        Self::from_brackets(dim, std::iter::empty())
    }

    /// Builds the table from entries `(i, j, k, c)` meaning `C^k_{ij} = c`
    /// (0-based). An entry for `(i, j)` also sets `(j, i)` to `-c` unless that
    /// entry is given explicitly; contradictions surface in [`Self::validate`].
    pub fn from_brackets(
        dim: usize,
        entries: impl IntoIterator<Item = (usize, usize, usize, Rational)>,
    ) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::Config(format!("dimension {dim} outside 1..={MAX_DIM}")));
        }
        let mut c = vec![Rational::zero(); dim * dim * dim];
        let mut explicit = vec![false; dim * dim * dim];
        let idx = |i: usize, j: usize, k: usize| (i * dim + j) * dim + k;
        for (i, j, k, v) in entries {
            if i >= dim || j >= dim || k >= dim {
                return Err(Error::Config(format!("bracket index out of range: ({i},{j},{k})")));
            }
            c[idx(i, j, k)] = v.clone();
            explicit[idx(i, j, k)] = true;
            if !explicit[idx(j, i, k)] && i != j {
                c[idx(j, i, k)] = v.neg();
            }
        }
        let abelian = c.iter().all(Rational::is_zero);
        Ok(LieAlgebra { dim, c, abelian })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_abelian(&self) -> bool {
        self.abelian
    }

    /// `C^k_{ij}`.
    pub fn structure_constant(&self, i: usize, j: usize, k: usize) -> &Rational {
        &self.c[(i * self.dim + j) * self.dim + k]
    }

    /// Nonzero `(k, C^k_{ij})`.
    pub fn bracket_basis(&self, i: usize, j: usize) -> impl Iterator<Item = (usize, &Rational)> {
        (0..self.dim)
            .map(move |k| (k, self.structure_constant(i, j, k)))
            .filter(|(_, c)| !c.is_zero())
    }

    pub fn bracket<S: Scalar>(&self, x: &[S], y: &[S]) -> Vec<S> {
        let mut out = vec![S::zero(); self.dim];
        for (i, xi) in x.iter().enumerate() {
            if xi.is_zero() {
                continue;
            }
            for (j, yj) in y.iter().enumerate() {
                if yj.is_zero() {
                    continue;
                }
                let f = xi.mul(yj);
                for (k, c) in self.bracket_basis(i, j) {
                    out[k] = out[k].add(&f.mul(&S::from_rational(c)));
                }
            }
        }
        out
    }

    /// Certifies antisymmetry and the Jacobi identity, or returns the first
    /// violation in lexicographic order.
    pub fn validate(&self) -> std::result::Result<LieCertificate, LieViolation> {
        let n = self.dim;
        for i in 0..n {
            for j in i..n {
                for k in 0..n {
                    let a = self.structure_constant(i, j, k);
                    let b = self.structure_constant(j, i, k);
                    if a.add(b) != Rational::zero() {
                        return Err(LieViolation::Antisymmetry { i: i + 1, j: j + 1, k: k + 1 });
                    }
                }
            }
        }
        let unit = |i: usize| {
            let mut v = vec![Rational::zero(); n];
            v[i] = Rational::one();
            v
        };
        let mut triples = 0;
        for i in 0..n {
            for j in i + 1..n {
                for k in j + 1..n {
                    triples += 1;
                    let (x, y, z) = (unit(i), unit(j), unit(k));
                    let a = self.bracket(&x, &self.bracket(&y, &z));
                    let b = self.bracket(&y, &self.bracket(&z, &x));
                    let c = self.bracket(&z, &self.bracket(&x, &y));
                    let value: Vec<Rational> =
                        (0..n).map(|m| a[m].add(&b[m]).add(&c[m])).collect();
                    if value.iter().any(|v| !v.is_zero()) {
                        return Err(LieViolation::Jacobi { i: i + 1, j: j + 1, k: k + 1, value });
                    }
                }
            }
        }
        Ok(LieCertificate { dim: n, triples_checked: triples })
    }

    /// Entries `(i, j, k, C^k_{ij})` with `i < j`, 0-based.
    pub fn entries(&self) -> Vec<(usize, usize, usize, Rational)> {
        let n = self.dim;
        let mut out = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                for (k, c) in self.bracket_basis(i, j) {
                    out.push((i, j, k, c.clone()));
                }
            }
        }
        out
    }
}

/// Sign of `e_a ∧ e_b` relative to the sorted merge, or `None` if the index
/// sets overlap.
pub fn wedge_sign(a: u32, b: u32) -> Option<i64> {
    if a & b != 0 {
        return None;
    }
    let mut inversions = 0u32;
    let mut rest = b;
    while rest != 0 {
        let j = rest.trailing_zeros();
        inversions += (a >> (j + 1)).count_ones();
        rest &= rest - 1;
    }
    Some(if inversions.is_multiple_of(2) { 1 } else { -1 })
}

/// Strictly increasing 0-based indices of a bitmask.
pub fn mask_indices(mask: u32) -> Vec<usize> {
    (0..32).filter(|i| mask >> i & 1 == 1).collect()
}

pub fn indices_mask(idx: &[usize]) -> u32 {
    idx.iter().fold(0, |m, &i| m | 1 << i)
}

/// Canonical mask and sign for an arbitrary index sequence, `None` on repeats.
pub fn sort_indices(idx: &[usize]) -> Option<(u32, i64)> {
    let mut mask = 0u32;
    let mut sign = 1i64;
    for &i in idx {
        let s = wedge_sign(mask, 1 << i)?;
        sign *= s;
        mask |= 1 << i;
    }
    Some((mask, sign))
}

/// Homogeneous element of an exterior algebra over a `dim`-dimensional space,
/// keyed by the bitmask of its strictly increasing index tuple.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Alternating {
    pub dim: usize,
    pub degree: usize,
    pub comps: BTreeMap<u32, Rational>,
}

impl Alternating {
    pub fn zero(dim: usize, degree: usize) -> Self {
        Alternating { dim, degree, comps: BTreeMap::new() }
    }

    /// Accumulates `c · e_{idx}` for an arbitrary index sequence.
    pub fn add_term(&mut self, idx: &[usize], c: &Rational) {
        assert_eq!(idx.len(), self.degree, "degree mismatch");
        if let Some((mask, sign)) = sort_indices(idx) {
            self.add_mask(mask, &c.mul(&Rational::from_int(sign)));
        }
    }

    pub fn add_mask(&mut self, mask: u32, c: &Rational) {
        if c.is_zero() {
            return;
        }
        let e = self.comps.entry(mask).or_insert_with(Rational::zero);
        *e = e.add(c);
        if e.is_zero() {
            self.comps.remove(&mask);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.comps.is_empty()
    }

    pub fn add(&self, o: &Self) -> Self {
        assert_eq!(self.degree, o.degree);
        let mut out = self.clone();
        for (m, c) in &o.comps {
            out.add_mask(*m, c);
        }
        out
    }

    pub fn scale(&self, s: &Rational) -> Self {
        let mut out = Alternating::zero(self.dim, self.degree);
        for (m, c) in &self.comps {
            out.add_mask(*m, &c.mul(s));
        }
        out
    }

    pub fn wedge(&self, o: &Self) -> Self {
        let mut out = Alternating::zero(self.dim, self.degree + o.degree);
        for (a, x) in &self.comps {
            for (b, y) in &o.comps {
                if let Some(s) = wedge_sign(*a, *b) {
                    out.add_mask(a | b, &x.mul(y).mul(&Rational::from_int(s)));
                }
            }
        }
        out
    }

    /// Antisymmetric matrix of a degree-2 element: `m[i][j]` is the
    /// coefficient of `e_i ⊗ e_j` in the tensor expansion.
    pub fn to_matrix(&self) -> Matrix<Rational> {
        assert_eq!(self.degree, 2);
        let mut m = linalg::zeros(self.dim, self.dim);
        for (mask, c) in &self.comps {
            let idx = mask_indices(*mask);
            m[idx[0]][idx[1]] = c.clone();
            m[idx[1]][idx[0]] = c.neg();
        }
        m
    }

    pub fn from_matrix(m: &Matrix<Rational>) -> Self {
        let n = m.len();
        let mut out = Alternating::zero(n, 2);
        for i in 0..n {
            for j in i + 1..n {
                out.add_mask(1 << i | 1 << j, &m[i][j]);
            }
        }
        out
    }

    pub fn basis(dim: usize, degree: usize) -> Vec<u32> {
        (0u32..1 << dim).filter(|m| m.count_ones() as usize == degree).collect()
    }

    fn to_vector(&self) -> Vec<Rational> {
        Self::basis(self.dim, self.degree)
            .iter()
            .map(|m| self.comps.get(m).cloned().unwrap_or_else(Rational::zero))
            .collect()
    }

    fn from_vector(dim: usize, degree: usize, v: &[Rational]) -> Self {
        let mut out = Alternating::zero(dim, degree);
        for (m, c) in Self::basis(dim, degree).iter().zip(v) {
            out.add_mask(*m, c);
        }
        out
    }
}

/// Element of `Λ^p g`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiVector(pub Alternating);

/// Element of `Λ^p g*`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Form(pub Alternating);

macro_rules! grassmann_newtype {
    ($t:ident) => {
        impl $t {
            pub fn zero(dim: usize, degree: usize) -> Self {
                $t(Alternating::zero(dim, degree))
            }
            pub fn dim(&self) -> usize {
                self.0.dim
            }
            pub fn degree(&self) -> usize {
                self.0.degree
            }
            pub fn is_zero(&self) -> bool {
                self.0.is_zero()
            }
            pub fn add(&self, o: &Self) -> Self {
                $t(self.0.add(&o.0))
            }
            pub fn sub(&self, o: &Self) -> Self {
                $t(self.0.add(&o.0.scale(&Rational::from_int(-1))))
            }
            pub fn scale(&self, s: &Rational) -> Self {
                $t(self.0.scale(s))
            }
            pub fn wedge(&self, o: &Self) -> Self {
                $t(self.0.wedge(&o.0))
            }
            /// Generator `e_i` (0-based).
            pub fn generator(dim: usize, i: usize) -> Self {
                let mut a = Alternating::zero(dim, 1);
                a.add_mask(1 << i, &Rational::one());
                $t(a)
            }
            /// `c · e_i ∧ e_j` (0-based).
            pub fn pair(dim: usize, i: usize, j: usize, c: Rational) -> Self {
                let mut a = Alternating::zero(dim, 2);
                a.add_term(&[i, j], &c);
                $t(a)
            }
            pub fn scalar(dim: usize, c: Rational) -> Self {
                let mut a = Alternating::zero(dim, 0);
                a.add_mask(0, &c);
                $t(a)
            }
            pub fn to_matrix(&self) -> Matrix<Rational> {
                self.0.to_matrix()
            }
            pub fn from_matrix(m: &Matrix<Rational>) -> Self {
                $t(Alternating::from_matrix(m))
            }
            pub fn components(&self) -> &BTreeMap<u32, Rational> {
                &self.0.comps
            }
        }
    };
}

grassmann_newtype!(MultiVector);
grassmann_newtype!(Form);

/// Schouten bracket on `Λg`, degree `p + q - 1`.
pub fn schouten_bracket(lie: &LieAlgebra, a: &MultiVector, b: &MultiVector) -> MultiVector {
    let (p, q) = (a.degree(), b.degree());
    let n = lie.dim();
    if p == 0 || q == 0 {
        return MultiVector::zero(n, (p + q).saturating_sub(1));
    }
    let mut out = Alternating::zero(n, p + q - 1);
    for (ma, ca) in a.components() {
        let ia = mask_indices(*ma);
        for (mb, cb) in b.components() {
            let ib = mask_indices(*mb);
            let coef = ca.mul(cb);
            for (x, &i) in ia.iter().enumerate() {
                for (y, &j) in ib.iter().enumerate() {
                    let sign = if (x + y) % 2 == 0 { 1 } else { -1 };
                    let rest_a: Vec<usize> = ia.iter().copied().filter(|&u| u != i).collect();
                    let rest_b: Vec<usize> = ib.iter().copied().filter(|&u| u != j).collect();
                    for (k, c) in lie.bracket_basis(i, j) {
                        let mut idx = vec![k];
                        idx.extend(&rest_a);
                        idx.extend(&rest_b);
                        out.add_term(&idx, &coef.mul(c).mul(&Rational::from_int(sign)));
                    }
                }
            }
        }
    }
    MultiVector(out)
}

/// Chevalley-Eilenberg differential with trivial coefficients:
/// `δ e^k = -½ C^k_{ij} e^i ∧ e^j`, extended as a graded derivation.
pub fn ce_differential(lie: &LieAlgebra, a: &Form) -> Form {
    let n = lie.dim();
    let p = a.degree();
    let mut out = Alternating::zero(n, p + 1);
    if p >= n {
        return Form(out);
    }
    for (mask, c) in a.components() {
        let idx = mask_indices(*mask);
        for (r, &k) in idx.iter().enumerate() {
            let sign = if r % 2 == 0 { 1 } else { -1 };
            for i in 0..n {
                for j in i + 1..n {
                    let ck = lie.structure_constant(i, j, k);
                    if ck.is_zero() {
                        continue;
                    }
                    let mut seq: Vec<usize> = idx[..r].to_vec();
                    seq.push(i);
                    seq.push(j);
                    seq.extend(&idx[r + 1..]);
                    out.add_term(&seq, &c.mul(ck).mul(&Rational::from_int(-sign)));
                }
            }
        }
    }
    Form(out)
}

/// Matrix of `δ_CE: Λ^p → Λ^{p+1}` in the bitmask bases.
fn ce_matrix(lie: &LieAlgebra, p: usize) -> Matrix<Rational> {
    let n = lie.dim();
    let src = Alternating::basis(n, p);
    let dst = Alternating::basis(n, p + 1);
    let mut m = linalg::zeros(dst.len(), src.len());
    for (col, mask) in src.iter().enumerate() {
        let mut e = Alternating::zero(n, p);
        e.add_mask(*mask, &Rational::one());
        let d = ce_differential(lie, &Form(e));
        for (row, dm) in dst.iter().enumerate() {
            if let Some(c) = d.components().get(dm) {
                m[row][col] = c.clone();
            }
        }
    }
    m
}

/// `H^p_CE(g)` with chosen representatives and exactness decisions.
#[derive(Clone, Debug)]
pub struct Cohomology {
    pub lie: Arc<LieAlgebra>,
    pub degree: usize,
    pub dimension: usize,
    pub kernel_dim: usize,
    pub image_dim: usize,
    /// Closed forms whose classes form a basis of `H^p`.
    pub representatives: Vec<Form>,
    image_basis: Vec<Vec<Rational>>,
}

pub fn ce_cohomology(lie: &Arc<LieAlgebra>, p: usize) -> Result<Cohomology> {
    let n = lie.dim();
    if p > n {
        return Err(Error::Config(format!("degree {p} exceeds dimension {n}")));
    }
    let dim_p = Alternating::basis(n, p).len();
    let kernel = if p == n {
        linalg::identity::<Rational>(dim_p)
    } else {
        linalg::kernel(&ce_matrix(lie, p), dim_p)
    };
    let image_basis: Vec<Vec<Rational>> = if p == 0 {
        Vec::new()
    } else {
        let m = ce_matrix(lie, p - 1);
        let mut cols = linalg::transpose(&m);
        let pivots = {
            let mut t = m.clone();
            linalg::rref(&mut t)
        };
        pivots.iter().map(|&c| std::mem::take(&mut cols[c])).collect()
    };
    // Extend the image basis greedily by kernel vectors.
    let mut span = image_basis.clone();
    let mut reps = Vec::new();
    for v in kernel.iter() {
        let mut trial = span.clone();
        trial.push(v.clone());
        if linalg::rank(&trial) > span.len() {
            span = trial;
            reps.push(Form(Alternating::from_vector(n, p, v)));
        }
    }
    Ok(Cohomology {
        lie: lie.clone(),
        degree: p,
        dimension: reps.len(),
        kernel_dim: kernel.len(),
        image_dim: image_basis.len(),
        representatives: reps,
        image_basis,
    })
}

impl Cohomology {
    /// `Some(β)` with `δ_CE β = form` when the form is exact.
    pub fn primitive(&self, form: &Form) -> Option<Form> {
        let p = self.degree;
        if p == 0 {
            return if form.is_zero() { Some(Form::zero(self.lie.dim(), 0)) } else { None };
        }
        let m = ce_matrix(&self.lie, p - 1);
        let cols = Alternating::basis(self.lie.dim(), p - 1).len();
        linalg::solve(&m, &form.0.to_vector(), cols)
            .map(|x| Form(Alternating::from_vector(self.lie.dim(), p - 1, &x)))
    }

    /// Coordinates of the class of a closed form in the representative basis.
    pub fn class_of(&self, form: &Form) -> Result<Vec<Rational>> {
        if !ce_differential(&self.lie, form).is_zero() {
            return Err(Error::Precondition("form is not δ_CE-closed".into()));
        }
        let mut cols: Vec<Vec<Rational>> =
            self.representatives.iter().map(|f| f.0.to_vector()).collect();
        cols.extend(self.image_basis.iter().cloned());
        let m = linalg::transpose(&cols);
        let v = form.0.to_vector();
        let x = if cols.is_empty() {
            Vec::new()
        } else {
            linalg::solve(&m, &v, cols.len())
                .ok_or_else(|| Error::Invariant("closed form outside kernel span".into()))?
        };
        Ok(x[..self.dimension].to_vec())
    }
}

/// Non-degenerate r-matrix with its inverse and musical maps.
#[derive(Clone, Debug)]
pub struct RMatrix {
    pub r: MultiVector,
    /// `r^{ij}`: coefficient of `e_i ⊗ e_j`.
    pub r_matrix: Matrix<Rational>,
    /// `ω = r^{-1}` as matrices, so that `ω·r = id`.
    pub omega: Matrix<Rational>,
    /// `♯`: column vector of a one-form to column vector of a vector.
    pub sharp: Matrix<Rational>,
    /// `♭ = ♯^{-1}`.
    pub flat: Matrix<Rational>,
}

pub fn invert_r(r: &MultiVector) -> Result<RMatrix> {
    if r.degree() != 2 {
        return Err(Error::Config("r-matrix must have degree 2".into()));
    }
    let rm = r.to_matrix();
    let n = rm.len();
    let Some(omega) = linalg::inverse(&rm) else {
        let kernel = linalg::kernel(&rm, n);
        return Err(Error::Degenerate { kernel: kernel[0].clone() });
    };
    let sharp = linalg::transpose(&rm);
    let flat = linalg::inverse(&sharp).expect("transpose of invertible");
    Ok(RMatrix { r: r.clone(), r_matrix: rm, omega, sharp, flat })
}

impl RMatrix {
    pub fn dim(&self) -> usize {
        self.r_matrix.len()
    }

    /// The symplectic form `ω` as an element of `Λ²g*`.
    pub fn omega_form(&self) -> Form {
        Form::from_matrix(&self.omega)
    }

    /// `♯α = (α ⊗ id)(r)` for a one-form.
    pub fn sharp_vec(&self, alpha: &[Rational]) -> Vec<Rational> {
        linalg::mat_vec(&self.sharp, alpha)
    }

    pub fn flat_vec(&self, x: &[Rational]) -> Vec<Rational> {
        linalg::mat_vec(&self.flat, x)
    }

    /// `Ω ↦ r·Ω·r` on two-forms, the convention sending `ω` to `r`.
    pub fn sharp2(&self, f: &Form) -> MultiVector {
        let m = linalg::mat_mul(&linalg::mat_mul(&self.r_matrix, &f.to_matrix()), &self.r_matrix);
        MultiVector::from_matrix(&m)
    }

    /// Inverse of [`Self::sharp2`]: `X ↦ ω·X·ω`.
    pub fn flat2(&self, x: &MultiVector) -> Form {
        let m = linalg::mat_mul(&linalg::mat_mul(&self.omega, &x.to_matrix()), &self.omega);
        Form::from_matrix(&m)
    }
}

/// Result of [`es_subalgebra`]: `g_r = ♯(g*)` with its induced data.
#[derive(Clone, Debug)]
pub struct EsSubalgebra {
    /// Basis vectors of `g_r` in coordinates of `g`.
    pub basis: Vec<Vec<Rational>>,
    /// Restricted structure constants; `None` for the zero subalgebra.
    pub lie: Option<LieAlgebra>,
    /// `r` written in the basis of `g_r`; non-degenerate.
    pub r: Option<MultiVector>,
    pub closed: bool,
}

pub fn es_subalgebra(lie: &LieAlgebra, r: &MultiVector) -> Result<EsSubalgebra> {
    let n = lie.dim();
    let rm = r.to_matrix();
    let mut rows = rm.clone();
    let pivots = linalg::rref(&mut rows);
    let basis: Vec<Vec<Rational>> = rows.into_iter().take(pivots.len()).collect();
    let m = basis.len();
    if m == 0 {
        return Ok(EsSubalgebra { basis, lie: None, r: None, closed: true });
    }
    let coords = linalg::transpose(&basis);
    let express = |v: &[Rational]| linalg::solve(&coords, v, m);
    let mut entries = Vec::new();
    let mut closed = true;
    for p in 0..m {
        for q in p + 1..m {
            let br = lie.bracket(&basis[p], &basis[q]);
            match express(&br) {
                Some(x) => {
                    for (k, c) in x.into_iter().enumerate() {
                        if !c.is_zero() {
                            entries.push((p, q, k, c));
                        }
                    }
                }
                None => closed = false,
            }
        }
    }
    // r = Σ r^{ij} e_i ⊗ e_j = Σ ρ^{pq} b_p ⊗ b_q with B ρ Bᵀ = r.
    let mut rho = linalg::zeros(m, m);
    // Solve columnwise: first X = B⁻¹ r (m×n), then ρ from X = ρ Bᵀ.
    let mut x_rows = linalg::zeros::<Rational>(m, n);
    for j in 0..n {
        let col: Vec<Rational> = rm.iter().map(|row| row[j].clone()).collect();
        let sol = express(&col).ok_or_else(|| Error::Invariant("r column outside g_r".into()))?;
        for p in 0..m {
            x_rows[p][j] = sol[p].clone();
        }
    }
    for p in 0..m {
        let sol = express(&x_rows[p]).ok_or_else(|| Error::Invariant("r row outside g_r".into()))?;
        rho[p] = sol;
    }
    let sub = if closed { Some(LieAlgebra::from_brackets(m, entries)?) } else { None };
    Ok(EsSubalgebra { basis, lie: sub, r: Some(MultiVector::from_matrix(&rho)), closed })
}

/// Built-in Lie algebras with non-degenerate r-matrices.
pub mod catalog {
    use super::*;

    #[derive(Clone, Debug)]
    pub struct CatalogEntry {
        pub name: &'static str,
        pub lie: Arc<LieAlgebra>,
        pub r: MultiVector,
    }

    fn q(n: i64) -> Rational {
        Rational::from_int(n)
    }

    pub fn abelian2() -> CatalogEntry {
        CatalogEntry {
            name: "abelian-2",
            lie: Arc::new(LieAlgebra::abelian(2).unwrap()),
            r: MultiVector::pair(2, 0, 1, q(1)),
        }
    }

    pub fn abelian4() -> CatalogEntry {
        CatalogEntry {
            name: "abelian-4",
            lie: Arc::new(LieAlgebra::abelian(4).unwrap()),
            r: MultiVector::pair(4, 0, 1, q(1)).add(&MultiVector::pair(4, 2, 3, q(1))),
        }
    }

    /// `[X, Y] = Y`, `r = X ∧ Y`.
    pub fn ax_plus_b() -> CatalogEntry {
        CatalogEntry {
            name: "ax+b",
            lie: Arc::new(LieAlgebra::from_brackets(2, [(0, 1, 1, q(1))]).unwrap()),
            r: MultiVector::pair(2, 0, 1, q(1)),
        }
    }

    /// Basis `X₁, Y₁, X₂, Y₂`, `r = X₁∧Y₁ + X₂∧Y₂`.
    pub fn aff1_squared() -> CatalogEntry {
        CatalogEntry {
            name: "aff(1)+aff(1)",
            lie: Arc::new(
                LieAlgebra::from_brackets(4, [(0, 1, 1, q(1)), (2, 3, 3, q(1))]).unwrap(),
            ),
            r: MultiVector::pair(4, 0, 1, q(1)).add(&MultiVector::pair(4, 2, 3, q(1))),
        }
    }

    pub fn all() -> Vec<CatalogEntry> {
        vec![abelian2(), abelian4(), ax_plus_b(), aff1_squared()]
    }
}
