//! The universal enveloping algebra in PBW normal form, its Hopf structure,
//! the tensor algebra `T•(U(g))` up to tensor degree three, the cobar
//! differential and the HKR splitting of closed two-cochains.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, RwLock};

use crate::error::{Error, Result};
use crate::lie::{LieAlgebra, MultiVector, MAX_DIM};
use crate::linalg;
use crate::scalar::{binomial, Coef, GaussianRational, Rational, Scalar};

/// Exponent vector of the ordered monomial `e_1^{a_1} ⋯ e_n^{a_n}`.
pub type Mono = [u8; MAX_DIM];

pub const UNIT: Mono = [0; MAX_DIM];

pub fn mono_degree(m: &Mono) -> usize {
    m.iter().map(|&a| a as usize).sum()
}

pub fn generator(i: usize) -> Mono {
    let mut m = UNIT;
    m[i] = 1;
    m
}

/// Letters of the monomial, left to right.
pub fn mono_letters(m: &Mono) -> Vec<usize> {
    m.iter().enumerate().flat_map(|(i, &a)| std::iter::repeat_n(i, a as usize)).collect()
}

/// Element of `U(g)` in PBW normal form.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct PbwElement<S> {
    pub terms: BTreeMap<Mono, S>,
}

impl<S: Scalar> PbwElement<S> {
    pub fn zero() -> Self {
        PbwElement { terms: BTreeMap::new() }
    }

    pub fn one() -> Self {
        Self::monomial(UNIT, S::one())
    }

    pub fn monomial(m: Mono, c: S) -> Self {
        let mut out = Self::zero();
        out.add_term(m, &c);
        out
    }

    pub fn generator(i: usize) -> Self {
        Self::monomial(generator(i), S::one())
    }

    pub fn scalar(c: S) -> Self {
        Self::monomial(UNIT, c)
    }

    pub fn add_term(&mut self, m: Mono, c: &S) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(v) => {
                *v = v.add(c);
                if v.is_zero() {
                    self.terms.remove(&m);
                }
            }
            None => {
                self.terms.insert(m, c.clone());
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut out = self.clone();
        for (m, c) in &o.terms {
            out.add_term(*m, c);
        }
        out
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.scale(&S::from_int(-1)))
    }

    pub fn scale(&self, s: &S) -> Self {
        let mut out = Self::zero();
        if s.is_zero() {
            return out;
        }
        for (m, c) in &self.terms {
            out.add_term(*m, &c.mul(s));
        }
        out
    }

    pub fn degree(&self) -> Option<usize> {
        self.terms.keys().map(mono_degree).max()
    }

    pub fn map_coeffs<T: Scalar>(&self, f: impl Fn(&S) -> T) -> PbwElement<T> {
        let mut out = PbwElement::zero();
        for (m, c) in &self.terms {
            out.add_term(*m, &f(c));
        }
        out
    }
}

impl PbwElement<Rational> {
    pub fn complexify(&self) -> PbwElement<GaussianRational> {
        self.map_coeffs(GaussianRational::from_rational)
    }
}

impl<S: Scalar> Coef for PbwElement<S> {
    type Field = S;
    fn zero() -> Self {
        PbwElement::zero()
    }
    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
    fn add_assign(&mut self, rhs: &Self) {
        for (m, c) in &rhs.terms {
            self.add_term(*m, c);
        }
    }
    fn scale(&self, s: &S) -> Self {
        PbwElement::scale(self, s)
    }
}

type Expansion = Arc<Vec<(Mono, Rational)>>;

/// `U(g)` for a fixed Lie algebra, with memoized straightening.
#[derive(Debug)]
pub struct Uea {
    lie: Arc<LieAlgebra>,
    gen_cache: RwLock<HashMap<(usize, Mono), Expansion>>,
    mono_cache: RwLock<HashMap<(Mono, Mono), Expansion>>,
}

impl Uea {
    pub fn new(lie: Arc<LieAlgebra>) -> Self {
        Uea { lie, gen_cache: RwLock::default(), mono_cache: RwLock::default() }
    }

    pub fn lie(&self) -> &Arc<LieAlgebra> {
        &self.lie
    }

    pub fn dim(&self) -> usize {
        self.lie.dim()
    }

    /// Normal form of `e_i · e^β`.
    pub fn left_mul_gen(&self, i: usize, beta: &Mono) -> Expansion {
        if let Some(j) = beta.iter().position(|&a| a > 0).filter(|&j| j < i) {
            if let Some(hit) = self.gen_cache.read().unwrap().get(&(i, *beta)) {
                return hit.clone();
            }
            // e_i e_j e^{β'} = e_j (e_i e^{β'}) + [e_i, e_j] e^{β'}
            let mut rest = *beta;
            rest[j] -= 1;
            let mut acc: BTreeMap<Mono, Rational> = BTreeMap::new();
            let mut push = |m: Mono, c: Rational| {
                let e = acc.entry(m).or_insert_with(Rational::zero);
                *e = e.add(&c);
            };
            for (m, c) in self.left_mul_gen(i, &rest).iter() {
                for (m2, c2) in self.left_mul_gen(j, m).iter() {
                    push(*m2, c.mul(c2));
                }
            }
            for (k, ck) in self.lie.bracket_basis(i, j) {
                for (m, c) in self.left_mul_gen(k, &rest).iter() {
                    push(*m, c.mul(ck));
                }
            }
            let out: Expansion =
                Arc::new(acc.into_iter().filter(|(_, c)| !c.is_zero()).collect());
            self.gen_cache.write().unwrap().insert((i, *beta), out.clone());
            out
        } else {
            let mut m = *beta;
            m[i] += 1;
            Arc::new(vec![(m, Rational::one())])
        }
    }

    /// Normal form of `e^α · e^β`.
    pub fn mono_mul(&self, a: &Mono, b: &Mono) -> Expansion {
        if self.lie.is_abelian() || a.iter().rposition(|&x| x > 0) <= b.iter().position(|&x| x > 0) {
            let mut m = *a;
            for (x, y) in m.iter_mut().zip(b) {
                *x += y;
            }
            return Arc::new(vec![(m, Rational::one())]);
        }
        if let Some(hit) = self.mono_cache.read().unwrap().get(&(*a, *b)) {
            return hit.clone();
        }
        let mut cur: BTreeMap<Mono, Rational> = BTreeMap::from([(*b, Rational::one())]);
        for i in mono_letters(a).into_iter().rev() {
            let mut next: BTreeMap<Mono, Rational> = BTreeMap::new();
            for (m, c) in &cur {
                for (m2, c2) in self.left_mul_gen(i, m).iter() {
                    let e = next.entry(*m2).or_insert_with(Rational::zero);
                    *e = e.add(&c.mul(c2));
                }
            }
            next.retain(|_, c| !c.is_zero());
            cur = next;
        }
        let out: Expansion = Arc::new(cur.into_iter().collect());
        self.mono_cache.write().unwrap().insert((*a, *b), out.clone());
        out
    }

    pub fn mul<S: Scalar>(&self, a: &PbwElement<S>, b: &PbwElement<S>) -> PbwElement<S> {
        let mut out = PbwElement::zero();
        for (ma, ca) in &a.terms {
            for (mb, cb) in &b.terms {
                let c = ca.mul(cb);
                for (m, k) in self.mono_mul(ma, mb).iter() {
                    out.add_term(*m, &c.mul(&S::from_rational(k)));
                }
            }
        }
        out
    }

    /// `e_i · a`.
    pub fn left_gen<S: Scalar>(&self, i: usize, a: &PbwElement<S>) -> PbwElement<S> {
        let mut out = PbwElement::zero();
        for (m, c) in &a.terms {
            for (m2, k) in self.left_mul_gen(i, m).iter() {
                out.add_term(*m2, &c.mul(&S::from_rational(k)));
            }
        }
        out
    }

    pub fn coproduct<S: Scalar>(&self, a: &PbwElement<S>) -> TensorUea<S> {
        let mut out = TensorUea::zero();
        for (m, c) in &a.terms {
            for (g, h, k) in mono_coproduct(m) {
                out.add_term(TKey::two(g, h), &c.mul(&S::from_rational(&k)));
            }
        }
        out
    }

    pub fn counit<S: Scalar>(&self, a: &PbwElement<S>) -> S {
        a.terms.get(&UNIT).cloned().unwrap_or_else(S::zero)
    }

    /// Anti-homomorphism with `S(e_i) = -e_i`.
    pub fn antipode<S: Scalar>(&self, a: &PbwElement<S>) -> PbwElement<S> {
        let mut out = PbwElement::zero();
        for (m, c) in &a.terms {
            out = out.add(&self.reversed(m).scale(c));
        }
        out
    }

    /// `(-1)^{|α|} e_{i_k} ⋯ e_{i_1}` for `e^α = e_{i_1} ⋯ e_{i_k}`.
    fn reversed<S: Scalar>(&self, m: &Mono) -> PbwElement<S> {
        let mut cur = PbwElement::<S>::one();
        for i in mono_letters(m) {
            cur = self.left_gen(i, &cur).scale(&S::from_int(-1));
        }
        cur
    }

    /// Componentwise product in `U(g)^{⊗k}` for elements of equal tensor
    /// degree.
    pub fn tensor_mul<S: Scalar>(&self, a: &TensorUea<S>, b: &TensorUea<S>) -> Result<TensorUea<S>> {
        let mut out = TensorUea::zero();
        for (ka, ca) in &a.terms {
            for (kb, cb) in &b.terms {
                if ka.deg != kb.deg {
                    return Err(Error::Config(format!(
                        "tensor degree mismatch: {} vs {}",
                        ka.deg, kb.deg
                    )));
                }
                let c = ca.mul(cb);
                let mut partial: Vec<(TKey, Rational)> =
                    vec![(TKey { deg: ka.deg, slots: [UNIT; 3] }, Rational::one())];
                for s in 0..ka.deg as usize {
                    let prod = self.mono_mul(&ka.slots[s], &kb.slots[s]);
                    partial = partial
                        .iter()
                        .flat_map(|(k, x)| {
                            prod.iter().map(move |(m, y)| {
                                let mut k2 = *k;
                                k2.slots[s] = *m;
                                (k2, x.mul(y))
                            })
                        })
                        .collect();
                }
                for (k, x) in partial {
                    out.add_term(k, &c.mul(&S::from_rational(&x)));
                }
            }
        }
        Ok(out)
    }

    /// Applies a linear map of `U(g)` to one tensor slot.
    pub fn map_slot<S: Scalar>(
        &self,
        a: &TensorUea<S>,
        slot: usize,
        f: impl Fn(&Mono) -> PbwElement<S>,
    ) -> TensorUea<S> {
        let mut out = TensorUea::zero();
        for (k, c) in &a.terms {
            debug_assert!(slot < k.deg as usize);
            for (m, x) in &f(&k.slots[slot]).terms {
                let mut k2 = *k;
                k2.slots[slot] = *m;
                out.add_term(k2, &c.mul(x));
            }
        }
        out
    }

    /// `Δ` applied to one slot, raising the tensor degree by one.
    pub fn coproduct_slot<S: Scalar>(&self, a: &TensorUea<S>, slot: usize) -> Result<TensorUea<S>> {
        let mut out = TensorUea::zero();
        for (k, c) in &a.terms {
            if k.deg as usize >= 3 {
                return Err(Error::Config("tensor degree above 3".into()));
            }
            for (g, h, x) in mono_coproduct(&k.slots[slot]) {
                let mut slots = [UNIT; 3];
                let mut w = 0;
                for s in 0..k.deg as usize {
                    if s == slot {
                        slots[w] = g;
                        slots[w + 1] = h;
                        w += 2;
                    } else {
                        slots[w] = k.slots[s];
                        w += 1;
                    }
                }
                out.add_term(TKey { deg: k.deg + 1, slots }, &c.mul(&S::from_rational(&x)));
            }
        }
        Ok(out)
    }

    /// `ε` applied to one slot, lowering the tensor degree by one.
    pub fn counit_slot<S: Scalar>(&self, a: &TensorUea<S>, slot: usize) -> TensorUea<S> {
        let mut out = TensorUea::zero();
        for (k, c) in &a.terms {
            if k.slots[slot] != UNIT {
                continue;
            }
            let mut slots = [UNIT; 3];
            let mut w = 0;
            for s in 0..k.deg as usize {
                if s != slot {
                    slots[w] = k.slots[s];
                    w += 1;
                }
            }
            out.add_term(TKey { deg: k.deg - 1, slots }, c);
        }
        out
    }

    /// Action of `e_i` on `T•(U(g))` by left multiplication, extended as a
    /// derivation over the tensor factors.
    pub fn act_gen<S: Scalar>(&self, i: usize, a: &TensorUea<S>) -> TensorUea<S> {
        let mut out = TensorUea::zero();
        for (k, c) in &a.terms {
            for s in 0..k.deg as usize {
                for (m, x) in self.left_mul_gen(i, &k.slots[s]).iter() {
                    let mut k2 = *k;
                    k2.slots[s] = *m;
                    out.add_term(k2, &c.mul(&S::from_rational(x)));
                }
            }
        }
        out
    }

    /// Cobar differential on tensor degrees one and two.
    pub fn hkr_boundary<S: Scalar>(&self, a: &TensorUea<S>) -> Result<TensorUea<S>> {
        let mut out = TensorUea::zero();
        let one = TensorUea::<S>::unit_tensor(1);
        for (k, c) in &a.terms {
            let single = TensorUea::term(*k, c.clone());
            let piece = match k.deg {
                1 => {
                    let mut p = single.concat(&one)?;
                    p.add_assign(&one.concat(&single)?);
                    p.sub_assign(&self.coproduct_slot(&single, 0)?);
                    p
                }
                2 => {
                    let mut p = one.concat(&single)?;
                    p.sub_assign(&self.coproduct_slot(&single, 0)?);
                    p.add_assign(&self.coproduct_slot(&single, 1)?);
                    p.sub_assign(&single.concat(&one)?);
                    p
                }
                d => return Err(Error::Config(format!("∂ undefined on tensor degree {d}"))),
            };
            out.add_assign(&piece);
        }
        Ok(out)
    }

    /// Splits a closed two-cochain as `C = X + ∂S` with `X = ½(C - T(C))`.
    pub fn hkr_decompose(&self, c: &TensorUea<Rational>) -> Result<(MultiVector, PbwElement<Rational>)> {
        if let Some((k, _)) = c.terms.iter().find(|(k, _)| k.deg != 2) {
            return Err(Error::Config(format!("expected tensor degree 2, found {}", k.deg)));
        }
        let dc = self.hkr_boundary(c)?;
        if let Some((k, v)) = dc.terms.iter().next() {
            return Err(Error::Precondition(format!(
                "∂C ≠ 0: component {} has coefficient {v}",
                k.display(self.dim())
            )));
        }
        let n = self.dim();
        let half = Rational::new(1, 2);
        let flipped = c.flip();
        let mut skew = c.clone();
        skew.sub_assign(&flipped);
        let skew = skew.scale(&half);
        let mut xm = linalg::zeros::<Rational>(n, n);
        for (k, v) in &skew.terms {
            match (single_letter(&k.slots[0]), single_letter(&k.slots[1])) {
                (Some(i), Some(j)) => xm[i][j] = v.clone(),
                _ => {
                    return Err(Error::Invariant(format!(
                        "skew part leaves g∧g at {}",
                        k.display(n)
                    )))
                }
            }
        }
        let x = MultiVector::from_matrix(&xm);
        let mut rest = c.clone();
        rest.add_assign(&flipped);
        let mut rest = rest.scale(&half);
        let mut s = PbwElement::<Rational>::zero();
        while let Some(top) = rest.terms.keys().map(|k| k.total_degree()).max() {
            if top < 2 {
                break;
            }
            // Bidegree (top-1, 1) part Σ_j P_j(y) z_j determines G = (1/top) Σ_j y_j P_j.
            let mut g = PbwElement::<Rational>::zero();
            for (k, v) in &rest.terms {
                if k.total_degree() != top {
                    continue;
                }
                if let Some(j) = single_letter(&k.slots[1]) {
                    let mut m = k.slots[0];
                    m[j] += 1;
                    g.add_term(m, &v.mul(&Rational::new(1, top as i64)));
                }
            }
            if g.is_zero() {
                let k = rest.terms.keys().find(|k| k.total_degree() == top).unwrap();
                return Err(Error::Invariant(format!(
                    "no descent step available at {}",
                    k.display(n)
                )));
            }
            rest.add_assign(&self.hkr_boundary(&TensorUea::from_pbw(&g))?);
            s = s.sub(&g);
            if let Some(k) = rest.terms.keys().find(|k| k.total_degree() >= top) {
                return Err(Error::Invariant(format!(
                    "top degree survived descent at {}",
                    k.display(n)
                )));
            }
        }
        // What is left is c·1⊗1 = ∂(c·1).
        for (k, v) in &rest.terms {
            if k.total_degree() != 0 {
                return Err(Error::Invariant(format!(
                    "symmetric remainder at {}",
                    k.display(n)
                )));
            }
            s.add_term(UNIT, v);
        }
        Ok((x, s))
    }
}

impl Uea {
    /// `*`-involution of `T•(U_ℂ(g))`: antilinear, `X* = -X`, reversing both
    /// the factors inside each slot and the order of the tensor factors.
    pub fn star(&self, a: &TensorUea<GaussianRational>) -> TensorUea<GaussianRational> {
        let mut out = TensorUea::zero();
        for (k, c) in &a.terms {
            let d = k.deg as usize;
            let mut partial: Vec<([Mono; 3], GaussianRational)> = vec![([UNIT; 3], c.conj())];
            for s in 0..d {
                let rev: PbwElement<GaussianRational> = self.reversed(&k.slots[s]);
                partial = partial
                    .iter()
                    .flat_map(|(slots, x)| {
                        rev.terms.iter().map(move |(m, y)| {
                            let mut sl = *slots;
                            sl[d - 1 - s] = *m;
                            (sl, x.mul(y))
                        })
                    })
                    .collect();
            }
            for (slots, x) in partial {
                out.add_term(TKey { deg: k.deg, slots }, &x);
            }
        }
        out
    }
}

fn single_letter(m: &Mono) -> Option<usize> {
    if mono_degree(m) == 1 {
        m.iter().position(|&a| a == 1)
    } else {
        None
    }
}

/// `Δ(e^α) = Σ_γ Π_i binom(α_i, γ_i) e^γ ⊗ e^{α-γ}`.
pub fn mono_coproduct(m: &Mono) -> Vec<(Mono, Mono, Rational)> {
    let mut out = vec![(UNIT, UNIT, Rational::one())];
    for i in 0..MAX_DIM {
        let a = m[i];
        if a == 0 {
            continue;
        }
        out = out
            .into_iter()
            .flat_map(|(g, h, c)| {
                (0..=a).map(move |k| {
                    let (mut g2, mut h2) = (g, h);
                    g2[i] = k;
                    h2[i] = a - k;
                    (g2, h2, c.mul(&binomial(a as u32, k as u32)))
                })
            })
            .collect();
    }
    out
}

/// Key of a pure tensor `e^{α_1} ⊗ ⋯ ⊗ e^{α_deg}` in `U(g)^{⊗deg}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TKey {
    pub deg: u8,
    pub slots: [Mono; 3],
}

impl TKey {
    pub const SCALAR: TKey = TKey { deg: 0, slots: [UNIT; 3] };

    pub fn one(m: Mono) -> Self {
        TKey { deg: 1, slots: [m, UNIT, UNIT] }
    }

    pub fn two(a: Mono, b: Mono) -> Self {
        TKey { deg: 2, slots: [a, b, UNIT] }
    }

    pub fn three(a: Mono, b: Mono, c: Mono) -> Self {
        TKey { deg: 3, slots: [a, b, c] }
    }

    pub fn total_degree(&self) -> usize {
        self.slots[..self.deg as usize].iter().map(mono_degree).sum()
    }

    pub fn display(&self, dim: usize) -> String {
        if self.deg == 0 {
            return "1".into();
        }
        self.slots[..self.deg as usize]
            .iter()
            .map(|m| display_mono(m, dim))
            .collect::<Vec<_>>()
            .join("⊗")
    }
}

pub fn display_mono(m: &Mono, dim: usize) -> String {
    let parts: Vec<String> = (0..dim)
        .filter(|&i| m[i] > 0)
        .map(|i| if m[i] == 1 { format!("e{}", i + 1) } else { format!("e{}^{}", i + 1, m[i]) })
        .collect();
    if parts.is_empty() {
        "1".into()
    } else {
        parts.join("")
    }
}

/// Element of `T^{≤3}(U(g))`, possibly of mixed tensor degree.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct TensorUea<S> {
    pub terms: BTreeMap<TKey, S>,
}

impl<S: Scalar> TensorUea<S> {
    pub fn zero() -> Self {
        TensorUea { terms: BTreeMap::new() }
    }

    pub fn term(k: TKey, c: S) -> Self {
        let mut out = Self::zero();
        out.add_term(k, &c);
        out
    }

    pub fn scalar(c: S) -> Self {
        Self::term(TKey::SCALAR, c)
    }

    /// `1 ⊗ ⋯ ⊗ 1` with `deg` factors.
    pub fn unit_tensor(deg: u8) -> Self {
        Self::term(TKey { deg, slots: [UNIT; 3] }, S::one())
    }

    pub fn from_pbw(a: &PbwElement<S>) -> Self {
        let mut out = Self::zero();
        for (m, c) in &a.terms {
            out.add_term(TKey::one(*m), c);
        }
        out
    }

    /// Tensor-degree-one part as a PBW element.
    pub fn to_pbw(&self) -> PbwElement<S> {
        let mut out = PbwElement::zero();
        for (k, c) in &self.terms {
            if k.deg == 1 {
                out.add_term(k.slots[0], c);
            }
        }
        out
    }

    pub fn add_term(&mut self, k: TKey, c: &S) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&k) {
            Some(v) => {
                *v = v.add(c);
                if v.is_zero() {
                    self.terms.remove(&k);
                }
            }
            None => {
                self.terms.insert(k, c.clone());
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut out = self.clone();
        out.add_assign(o);
        out
    }

    pub fn sub(&self, o: &Self) -> Self {
        let mut out = self.clone();
        out.sub_assign(o);
        out
    }

    pub fn scale(&self, s: &S) -> Self {
        let mut out = Self::zero();
        if s.is_zero() {
            return out;
        }
        for (k, c) in &self.terms {
            out.add_term(*k, &c.mul(s));
        }
        out
    }

    /// Product of `T•(U(g))`: concatenation of tensor factors.
    pub fn concat(&self, o: &Self) -> Result<Self> {
        let mut out = Self::zero();
        for (ka, ca) in &self.terms {
            for (kb, cb) in &o.terms {
                out.add_term(concat_keys(ka, kb)?, &ca.mul(cb));
            }
        }
        Ok(out)
    }

    /// Swap of the two factors of a degree-two element.
    pub fn flip(&self) -> Self {
        let mut out = Self::zero();
        for (k, c) in &self.terms {
            let k2 = if k.deg == 2 { TKey::two(k.slots[1], k.slots[0]) } else { *k };
            out.add_term(k2, c);
        }
        out
    }

    /// Part of total PBW degree exactly `d`.
    pub fn degree_part(&self, d: usize) -> Self {
        TensorUea {
            terms: self
                .terms
                .iter()
                .filter(|(k, _)| k.total_degree() == d)
                .map(|(k, c)| (*k, c.clone()))
                .collect(),
        }
    }

    pub fn map_coeffs<T: Scalar>(&self, f: impl Fn(&S) -> T) -> TensorUea<T> {
        let mut out = TensorUea::zero();
        for (k, c) in &self.terms {
            out.add_term(*k, &f(c));
        }
        out
    }

    pub fn display(&self, dim: usize) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        self.terms
            .iter()
            .map(|(k, c)| format!("({c}) {}", k.display(dim)))
            .collect::<Vec<_>>()
            .join(" + ")
    }
}

impl TensorUea<Rational> {
    pub fn complexify(&self) -> TensorUea<GaussianRational> {
        self.map_coeffs(GaussianRational::from_rational)
    }
}

pub fn concat_keys(a: &TKey, b: &TKey) -> Result<TKey> {
    let deg = a.deg + b.deg;
    if deg > 3 {
        return Err(Error::Config(format!("tensor degree {deg} exceeds 3")));
    }
    let mut slots = a.slots;
    for s in 0..b.deg as usize {
        slots[a.deg as usize + s] = b.slots[s];
    }
    Ok(TKey { deg, slots })
}

impl<S: Scalar> Coef for TensorUea<S> {
    type Field = S;
    fn zero() -> Self {
        TensorUea::zero()
    }
    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
    fn add_assign(&mut self, rhs: &Self) {
        for (k, c) in &rhs.terms {
            self.add_term(*k, c);
        }
    }
    fn scale(&self, s: &S) -> Self {
        TensorUea::scale(self, s)
    }
}

/// `X ∈ Λ²g` as the antisymmetric tensor `Σ X^{ij} e_i ⊗ e_j`.
pub fn bivector_tensor<S: Scalar>(x: &MultiVector) -> TensorUea<S> {
    let m = x.to_matrix();
    let mut out = TensorUea::zero();
    for (i, row) in m.iter().enumerate() {
        for (j, c) in row.iter().enumerate() {
            out.add_term(TKey::two(generator(i), generator(j)), &S::from_rational(c));
        }
    }
    out
}

/// Symmetric `s = Σ s^{ij} e_i ⊗ e_j` from a symmetric matrix.
pub fn matrix_tensor<S: Scalar>(m: &[Vec<S>]) -> TensorUea<S> {
    let mut out = TensorUea::zero();
    for (i, row) in m.iter().enumerate() {
        for (j, c) in row.iter().enumerate() {
            out.add_term(TKey::two(generator(i), generator(j)), c);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::catalog;
    use proptest::prelude::*;

    fn q(n: i64) -> Rational {
        Rational::from_int(n)
    }

    fn mono(v: &[u8]) -> Mono {
        let mut m = UNIT;
        m[..v.len()].copy_from_slice(v);
        m
    }

    fn p(terms: &[(&[u8], i64)]) -> PbwElement<Rational> {
        let mut out = PbwElement::zero();
        for (m, c) in terms {
            out.add_term(mono(m), &q(*c));
        }
        out
    }

    /// Straightening on words by repeated adjacent swaps, independent of the
    /// memoized recursion.
    fn word_normal_form(lie: &LieAlgebra, word: Vec<usize>) -> BTreeMap<Mono, Rational> {
        let mut work: Vec<(Vec<usize>, Rational)> = vec![(word, Rational::one())];
        let mut out: BTreeMap<Mono, Rational> = BTreeMap::new();
        while let Some((w, c)) = work.pop() {
            match (1..w.len()).find(|&p| w[p - 1] > w[p]) {
                None => {
                    let mut m = UNIT;
                    for &i in &w {
                        m[i] += 1;
                    }
                    let e = out.entry(m).or_insert_with(Rational::zero);
                    *e = e.add(&c);
                }
                Some(p) => {
                    let (a, b) = (w[p - 1], w[p]);
                    let mut swapped = w.clone();
                    swapped.swap(p - 1, p);
                    work.push((swapped, c.clone()));
                    for (k, ck) in lie.bracket_basis(a, b) {
                        let mut shorter = w[..p - 1].to_vec();
                        shorter.push(k);
                        shorter.extend(&w[p + 1..]);
                        work.push((shorter, c.mul(ck)));
                    }
                }
            }
        }
        out.retain(|_, c| !c.is_zero());
        out
    }

    fn heisenberg() -> Arc<LieAlgebra> {
        Arc::new(LieAlgebra::from_brackets(3, [(0, 1, 2, q(1))]).unwrap())
    }

    fn sl2() -> Arc<LieAlgebra> {
        // h, e, f with [h,e] = 2e, [h,f] = -2f, [e,f] = h
        Arc::new(
            LieAlgebra::from_brackets(3, [(0, 1, 1, q(2)), (0, 2, 2, q(-2)), (1, 2, 0, q(1))]).unwrap(),
        )
    }

    #[test]
    fn pbw_examples() {
        let ab = Uea::new(catalog::abelian2().lie);
        assert_eq!(
            ab.mul(&PbwElement::generator(0), &PbwElement::generator(1)),
            p(&[(&[1, 1], 1)])
        );
        let axb = Uea::new(catalog::ax_plus_b().lie);
        // Y·X = XY - Y
        assert_eq!(
            axb.mul(&PbwElement::generator(1), &PbwElement::generator(0)),
            p(&[(&[1, 1], 1), (&[0, 1], -1)])
        );
        let h = heisenberg();
        let u = Uea::new(h.clone());
        let prod = u.mul(&p(&[(&[1, 1, 0], 1)]), &PbwElement::generator(0));
        let oracle = word_normal_form(&h, vec![0, 1, 0]);
        assert_eq!(prod.terms, oracle);
    }

    #[test]
    fn hopf_examples() {
        let ab = Uea::new(catalog::abelian2().lie);
        assert_eq!(ab.coproduct(&PbwElement::<Rational>::one()), TensorUea::unit_tensor(2));
        let e1 = PbwElement::<Rational>::generator(0);
        let d = ab.coproduct(&e1);
        let expect = TensorUea::term(TKey::two(generator(0), UNIT), q(1))
            .add(&TensorUea::term(TKey::two(UNIT, generator(0)), q(1)));
        assert_eq!(d, expect);
        let e12 = p(&[(&[1, 1], 1)]);
        let d = ab.coproduct(&e12);
        let mut expect = TensorUea::zero();
        for (a, b) in [([1, 1], [0, 0]), ([1, 0], [0, 1]), ([0, 1], [1, 0]), ([0, 0], [1, 1])] {
            expect.add_term(TKey::two(mono(&a), mono(&b)), &q(1));
        }
        assert_eq!(d, expect);
        assert_eq!(ab.counit(&PbwElement::<Rational>::one()), q(1));
        assert_eq!(ab.counit(&e1), q(0));
        assert_eq!(ab.counit(&p(&[(&[0, 0], 3), (&[1, 1], 1), (&[1, 0], 2)])), q(3));
        assert_eq!(ab.antipode(&PbwElement::<Rational>::one()), PbwElement::one());
        assert_eq!(ab.antipode(&e1), e1.scale(&q(-1)));
        let axb = Uea::new(catalog::ax_plus_b().lie);
        // S(XY) = YX = XY - Y
        assert_eq!(axb.antipode(&e12), p(&[(&[1, 1], 1), (&[0, 1], -1)]));
    }

    #[test]
    fn star_examples() {
        let u = Uea::new(catalog::ax_plus_b().lie);
        let one = TensorUea::<GaussianRational>::unit_tensor(2);
        assert_eq!(u.star(&one), one);
        let r = bivector_tensor::<Rational>(&catalog::ax_plus_b().r).complexify();
        assert_eq!(u.star(&r), r.scale(&GaussianRational::from_int(-1)));
        let s = matrix_tensor(&[vec![q(2), q(1)], vec![q(1), q(3)]]).complexify();
        assert_eq!(u.star(&s), s);
        let z = TensorUea::term(TKey::one(generator(0)), GaussianRational::i());
        assert_eq!(u.star(&z), z);
    }

    #[test]
    fn boundary_examples() {
        let ab = Uea::new(catalog::abelian2().lie);
        let e1 = TensorUea::from_pbw(&PbwElement::<Rational>::generator(0));
        assert!(ab.hkr_boundary(&e1).unwrap().is_zero());
        let d = ab.hkr_boundary(&TensorUea::from_pbw(&p(&[(&[1, 1], 1)]))).unwrap();
        let expect = TensorUea::term(TKey::two(generator(0), generator(1)), q(-1))
            .add(&TensorUea::term(TKey::two(generator(1), generator(0)), q(-1)));
        assert_eq!(d, expect);
        assert!(ab.hkr_boundary(&TensorUea::<Rational>::unit_tensor(3)).is_err());
    }

    #[test]
    fn hkr_examples() {
        let e = catalog::aff1_squared();
        let u = Uea::new(e.lie.clone());
        let r = bivector_tensor::<Rational>(&e.r);
        let (x, s) = u.hkr_decompose(&r).unwrap();
        assert_eq!(x, e.r);
        assert!(s.is_zero());

        let ab = Uea::new(catalog::abelian2().lie);
        let g = p(&[(&[1, 1], 1)]);
        let c = ab.hkr_boundary(&TensorUea::from_pbw(&g)).unwrap();
        let (x, s) = ab.hkr_decompose(&c).unwrap();
        assert!(x.is_zero());
        assert_eq!(s, g);

        // D(e1⊗e2 + e2⊗e1) = ∂(-D e1e2)
        let d = q(3);
        let c = TensorUea::term(TKey::two(generator(0), generator(1)), d.clone())
            .add(&TensorUea::term(TKey::two(generator(1), generator(0)), d.clone()));
        let (x, s) = ab.hkr_decompose(&c).unwrap();
        assert!(x.is_zero());
        assert_eq!(s, p(&[(&[1, 1], -3)]));

        let bad = TensorUea::term(TKey::two(mono(&[2, 0]), UNIT), q(1));
        assert!(matches!(ab.hkr_decompose(&bad), Err(Error::Precondition(_))));
    }

    fn arb_pbw(n: usize, deg: u8) -> impl Strategy<Value = PbwElement<Rational>> {
        proptest::collection::vec((proptest::collection::vec(0..=deg, n), -3i64..4), 1..4).prop_map(
            move |ts| {
                let mut out = PbwElement::zero();
                for (m, c) in ts {
                    out.add_term(mono(&m), &q(c));
                }
                out
            },
        )
    }

    fn algebras() -> Vec<Arc<LieAlgebra>> {
        vec![heisenberg(), sl2(), Arc::new(LieAlgebra::from_brackets(3, [(0, 1, 1, q(1)), (0, 2, 2, q(-1))]).unwrap())]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn pbw_matches_word_rewriting(w in proptest::collection::vec(0usize..3, 0..5)) {
            for lie in algebras() {
                let u = Uea::new(lie.clone());
                let mut prod = PbwElement::<Rational>::one();
                for &i in &w {
                    prod = u.mul(&prod, &PbwElement::generator(i));
                }
                prop_assert_eq!(prod.terms, word_normal_form(&lie, w.clone()));
            }
        }

        #[test]
        fn pbw_associative(a in arb_pbw(3, 2), b in arb_pbw(3, 2), c in arb_pbw(3, 1)) {
            for lie in algebras() {
                let u = Uea::new(lie);
                prop_assert_eq!(u.mul(&u.mul(&a, &b), &c), u.mul(&a, &u.mul(&b, &c)));
                prop_assert_eq!(u.mul(&PbwElement::one(), &a), a.clone());
            }
        }

        #[test]
        fn hopf_axioms(a in arb_pbw(3, 2), b in arb_pbw(3, 1)) {
            for lie in algebras() {
                let u = Uea::new(lie);
                let da = u.coproduct(&a);
                prop_assert_eq!(u.coproduct_slot(&da, 0).unwrap(), u.coproduct_slot(&da, 1).unwrap());
                prop_assert_eq!(u.counit_slot(&da, 0), TensorUea::from_pbw(&a));
                prop_assert_eq!(u.counit_slot(&da, 1), TensorUea::from_pbw(&a));
                let dab = u.coproduct(&u.mul(&a, &b));
                prop_assert_eq!(dab, u.tensor_mul(&da, &u.coproduct(&b)).unwrap());
                prop_assert_eq!(u.counit(&u.mul(&a, &b)), u.counit(&a).mul(&u.counit(&b)));
                // μ(S ⊗ id)Δ = ε
                let mut conv = PbwElement::zero();
                for (k, c) in &da.terms {
                    let left = u.antipode(&PbwElement::monomial(k.slots[0], c.clone()));
                    conv = conv.add(&u.mul(&left, &PbwElement::monomial(k.slots[1], Rational::one())));
                }
                prop_assert_eq!(conv, PbwElement::scalar(u.counit(&a)));
                prop_assert_eq!(u.antipode(&u.mul(&a, &b)), u.mul(&u.antipode(&b), &u.antipode(&a)));
            }
        }

        #[test]
        fn boundary_squares_to_zero_and_flip_closed(a in arb_pbw(3, 3)) {
            for lie in algebras() {
                let u = Uea::new(lie);
                let c = u.hkr_boundary(&TensorUea::from_pbw(&a)).unwrap();
                prop_assert!(u.hkr_boundary(&c).unwrap().is_zero());
                prop_assert!(u.hkr_boundary(&c.flip()).unwrap().is_zero());
            }
        }

        #[test]
        fn hkr_reconstructs(a in arb_pbw(3, 3), x in proptest::collection::vec(-3i64..4, 3)) {
            for lie in [Arc::new(LieAlgebra::abelian(3).unwrap()), heisenberg()] {
                let u = Uea::new(lie);
                let mut biv = MultiVector::zero(3, 2);
                for (n, (i, j)) in [(0, 1), (0, 2), (1, 2)].into_iter().enumerate() {
                    biv = biv.add(&MultiVector::pair(3, i, j, q(x[n])));
                }
                let c = u.hkr_boundary(&TensorUea::from_pbw(&a)).unwrap().add(&bivector_tensor(&biv));
                let (xx, s) = u.hkr_decompose(&c).unwrap();
                prop_assert_eq!(xx.clone(), biv);
                let back = bivector_tensor(&xx).add(&u.hkr_boundary(&TensorUea::from_pbw(&s)).unwrap());
                prop_assert_eq!(back, c);
            }
        }

        #[test]
        fn star_is_antimultiplicative_involution(a in arb_pbw(3, 2), b in arb_pbw(3, 2)) {
            for lie in algebras() {
                let u = Uea::new(lie);
                let i = GaussianRational::i();
                let ca = TensorUea::from_pbw(&a).complexify().scale(&i.add(&GaussianRational::one()));
                let cb = TensorUea::from_pbw(&b).complexify();
                prop_assert_eq!(u.star(&u.star(&ca)), ca.clone());
                let ab = u.tensor_mul(&ca, &cb).unwrap();
                prop_assert_eq!(u.star(&ab), u.tensor_mul(&u.star(&cb), &u.star(&ca)).unwrap());
                let t = ca.concat(&cb).unwrap();
                prop_assert_eq!(u.star(&t), u.star(&cb).concat(&u.star(&ca)).unwrap());
            }
        }
    }
}
