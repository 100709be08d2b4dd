//! Sparse elements of `A ⊗ Sym(g*) ⊗ Λ(g*)[[t]]` with truncation caps, the
//! Koszul operators `δ`, `δ*`, `δ⁻¹`, `σ`, and fiberwise products.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::marker::PhantomData;
use std::sync::{Arc, RwLock};

use rand::Rng;

use crate::enveloping::{mono_degree, Mono, TensorUea, Uea, UNIT};
use crate::error::{Error, Result};
use crate::lie::wedge_sign;
use crate::linalg::Matrix;
use crate::scalar::{Coef, Rational, Scalar, TruncatedSeries};

/// Unital associative algebra with `g` acting by derivations.
pub trait CoefAlgebra: Send + Sync {
    type Elem: Coef;
    fn one(&self) -> Self::Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    /// `e_i ▷ a`.
    fn act(&self, i: usize, a: &Self::Elem) -> Self::Elem;

    fn lift(&self, c: &<Self::Elem as Coef>::Field) -> Self::Elem {
        self.one().scale(c)
    }
}

/// The ground field with trivial action.
#[derive(Clone, Debug, Default)]
pub struct Scalars<S>(PhantomData<S>);

impl<S> Scalars<S> {
    pub fn new() -> Self {
        Scalars(PhantomData)
    }
}

impl<S: Scalar + Coef<Field = S>> CoefAlgebra for Scalars<S> {
    type Elem = S;
    fn one(&self) -> S {
        S::one()
    }
    fn mul(&self, a: &S, b: &S) -> S {
        Scalar::mul(a, b)
    }
    fn act(&self, _: usize, _: &S) -> S {
        <S as Scalar>::zero()
    }
}

/// `(T•(U(g)), ⊗)` with `e_i` acting by left multiplication in every factor.
#[derive(Clone, Debug)]
pub struct TensorAlgebra<S> {
    pub uea: Arc<Uea>,
    _s: PhantomData<S>,
}

impl<S> TensorAlgebra<S> {
    pub fn new(uea: Arc<Uea>) -> Self {
        TensorAlgebra { uea, _s: PhantomData }
    }
}

impl<S: Scalar> CoefAlgebra for TensorAlgebra<S> {
    type Elem = TensorUea<S>;
    fn one(&self) -> TensorUea<S> {
        TensorUea::scalar(S::one())
    }
    fn mul(&self, a: &TensorUea<S>, b: &TensorUea<S>) -> TensorUea<S> {
        a.concat(b).expect("tensor degree above 3 inside the Weyl engine")
    }
    fn act(&self, i: usize, a: &TensorUea<S>) -> TensorUea<S> {
        self.uea.act_gen(i, a)
    }
}

/// Key `t^t ⊗ x^sym ⊗ e^{anti}`; the anti bitmask lists the wedge factors in
/// increasing order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WKey {
    pub t: u8,
    pub sym: Mono,
    pub anti: u8,
}

impl WKey {
    pub const ONE: WKey = WKey { t: 0, sym: UNIT, anti: 0 };

    pub fn new(t: usize, sym: Mono, anti: u8) -> Self {
        WKey { t: t as u8, sym, anti }
    }

    pub fn sym_degree(&self) -> usize {
        mono_degree(&self.sym)
    }

    pub fn anti_degree(&self) -> usize {
        self.anti.count_ones() as usize
    }

    /// `Deg = deg_s + 2 deg_t`.
    pub fn total_degree(&self) -> usize {
        self.sym_degree() + 2 * self.t as usize
    }
}

/// Truncation: `t`-power at most `t`, total degree at most `total`, and
/// optionally `deg_s + deg_t` at most `weight`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Caps {
    pub t: usize,
    pub total: usize,
    pub weight: Option<usize>,
}

impl Caps {
    /// Caps sufficient for results modulo `t^{order+1}`.
    pub fn for_order(order: usize) -> Self {
        Caps { t: order, total: 2 * order + 2, weight: None }
    }

    /// Caps for flat sections whose only use is `σ(a ∘ b)` modulo
    /// `t^{order+1}`: a full contraction of `t^k x^m` consumes `|m|` powers
    /// of `t`, so terms with `|m| + k > order` never reach the result.
    pub fn for_sections(order: usize) -> Self {
        Caps { weight: Some(order), ..Self::for_order(order) }
    }

    pub const fn bounded(t: usize, total: usize) -> Self {
        Caps { t, total, weight: None }
    }

    pub fn admits(&self, k: &WKey) -> bool {
        (k.t as usize) <= self.t
            && k.total_degree() <= self.total
            && self.weight.is_none_or(|w| k.sym_degree() + k.t as usize <= w)
    }

    fn widened(&self) -> Self {
        Caps { t: self.t + 1, total: self.total + 2, weight: self.weight.map(|w| w + 1) }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeylElement<E> {
    pub dim: usize,
    pub caps: Caps,
    terms: BTreeMap<WKey, E>,
}

fn sign_field<F: Scalar>(s: i64) -> F {
    F::from_int(s)
}

impl<E: Coef> WeylElement<E> {
    pub fn zero(dim: usize, caps: Caps) -> Self {
        WeylElement { dim, caps, terms: BTreeMap::new() }
    }

    pub fn term(dim: usize, caps: Caps, k: WKey, c: E) -> Self {
        let mut out = Self::zero(dim, caps);
        out.add_term(k, &c);
        out
    }

    /// `c ⊗ 1 ⊗ 1`.
    pub fn constant(dim: usize, caps: Caps, c: E) -> Self {
        Self::term(dim, caps, WKey::ONE, c)
    }

    pub fn terms(&self) -> &BTreeMap<WKey, E> {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Adds `c` at key `k`; silently drops keys outside the caps.
    pub fn add_term(&mut self, k: WKey, c: &E) {
        if c.is_zero() || !self.caps.admits(&k) {
            return;
        }
        match self.terms.get_mut(&k) {
            Some(v) => {
                v.add_assign(c);
                if v.is_zero() {
                    self.terms.remove(&k);
                }
            }
            None => {
                self.terms.insert(k, c.clone());
            }
        }
    }

    fn add_owned(&mut self, k: WKey, c: E) {
        if c.is_zero() || !self.caps.admits(&k) {
            return;
        }
        match self.terms.get_mut(&k) {
            Some(v) => {
                v.add_assign(&c);
                if v.is_zero() {
                    self.terms.remove(&k);
                }
            }
            None => {
                self.terms.insert(k, c);
            }
        }
    }

    fn check(&self, o: &Self) -> Result<()> {
        if self.caps != o.caps || self.dim != o.dim {
            return Err(Error::Config(format!(
                "incompatible Weyl elements: caps {:?}/{:?}, dims {}/{}",
                self.caps, o.caps, self.dim, o.dim
            )));
        }
        Ok(())
    }

    pub fn add(&self, o: &Self) -> Result<Self> {
        self.check(o)?;
        let mut out = self.clone();
        for (k, c) in &o.terms {
            out.add_term(*k, c);
        }
        Ok(out)
    }

    pub fn sub(&self, o: &Self) -> Result<Self> {
        self.check(o)?;
        let mut out = self.clone();
        for (k, c) in &o.terms {
            out.add_owned(*k, c.neg());
        }
        Ok(out)
    }

    pub fn add_assign(&mut self, o: &Self) {
        debug_assert_eq!(self.caps, o.caps);
        for (k, c) in &o.terms {
            self.add_term(*k, c);
        }
    }

    pub fn scale(&self, s: &E::Field) -> Self {
        let mut out = Self::zero(self.dim, self.caps);
        for (k, c) in &self.terms {
            out.add_owned(*k, c.scale(s));
        }
        out
    }

    pub fn neg(&self) -> Self {
        self.scale(&sign_field(-1))
    }

    /// Re-truncates (or re-labels with larger caps).
    pub fn with_caps(&self, caps: Caps) -> Self {
        let mut out = Self::zero(self.dim, caps);
        for (k, c) in &self.terms {
            out.add_term(*k, c);
        }
        out
    }

    pub fn map_terms<F: Coef>(&self, f: impl Fn(&WKey, &E) -> F) -> WeylElement<F> {
        let mut out = WeylElement::zero(self.dim, self.caps);
        for (k, c) in &self.terms {
            out.add_owned(*k, f(k, c));
        }
        out
    }

    /// Keeps the terms selected by `keep`.
    pub fn filter(&self, keep: impl Fn(&WKey) -> bool) -> Self {
        WeylElement {
            dim: self.dim,
            caps: self.caps,
            terms: self.terms.iter().filter(|(k, _)| keep(k)).map(|(k, c)| (*k, c.clone())).collect(),
        }
    }

    /// Multiplies by `t^k`.
    pub fn shift_t(&self, k: usize) -> Self {
        let mut out = Self::zero(self.dim, self.caps);
        for (key, c) in &self.terms {
            let mut k2 = *key;
            k2.t += k as u8;
            out.add_term(k2, c);
        }
        out
    }

    /// Multiplies every term by a function of its key, e.g. a degree map.
    pub fn weighted(&self, w: impl Fn(&WKey) -> i64) -> Self {
        self.map_terms(|k, c| c.scale(&sign_field(w(k))))
    }

    pub fn deg_s(&self) -> Self {
        self.weighted(|k| k.sym_degree() as i64)
    }

    pub fn deg_a(&self) -> Self {
        self.weighted(|k| k.anti_degree() as i64)
    }

    pub fn deg_t(&self) -> Self {
        self.weighted(|k| k.t as i64)
    }

    pub fn deg_total(&self) -> Self {
        self.weighted(|k| k.total_degree() as i64)
    }

    /// Smallest total degree among stored terms.
    pub fn min_total_degree(&self) -> Option<usize> {
        self.terms.keys().map(WKey::total_degree).min()
    }

    /// `δ = e^i ∧ ∂/∂x_i`.
    pub fn delta(&self) -> Self {
        let mut out = Self::zero(self.dim, self.caps);
        for (k, c) in &self.terms {
            for i in 0..self.dim {
                let a = k.sym[i];
                if a == 0 {
                    continue;
                }
                let Some(s) = wedge_sign(1 << i, k.anti as u32) else { continue };
                let mut sym = k.sym;
                sym[i] -= 1;
                let key = WKey { t: k.t, sym, anti: k.anti | 1 << i };
                out.add_owned(key, c.scale(&sign_field(s * a as i64)));
            }
        }
        out
    }

    /// `δ* = x_i · i_a(e_i)`.
    pub fn delta_star(&self) -> Self {
        self.koszul_dual(false)
    }

    /// `δ⁻¹ = δ*/(k+ℓ)` on components of symmetric degree `k` and
    /// antisymmetric degree `ℓ`.
    pub fn delta_inv(&self) -> Self {
        self.koszul_dual(true)
    }

    fn koszul_dual(&self, normalize: bool) -> Self {
        let mut out = Self::zero(self.dim, self.caps);
        for (k, c) in &self.terms {
            let kl = k.sym_degree() + k.anti_degree();
            if kl == 0 {
                continue;
            }
            for i in 0..self.dim {
                if k.anti >> i & 1 == 0 {
                    continue;
                }
                let below = (k.anti & ((1u8 << i) - 1)).count_ones();
                let s: i64 = if below.is_multiple_of(2) { 1 } else { -1 };
                let mut sym = k.sym;
                sym[i] += 1;
                let key = WKey { t: k.t, sym, anti: k.anti & !(1 << i) };
                let f = if normalize {
                    <E::Field as Scalar>::from_rational(&Rational::new(s, kl as i64))
                } else {
                    sign_field(s)
                };
                out.add_owned(key, c.scale(&f));
            }
        }
        out
    }

    /// `σ`: the component of symmetric and antisymmetric degree zero.
    pub fn sigma(&self) -> TruncatedSeries<E> {
        let mut out = TruncatedSeries::<E>::zero(self.caps.t);
        for (k, c) in &self.terms {
            if k.anti == 0 && k.sym == UNIT {
                out.coeff_mut(k.t as usize).add_assign(c);
            }
        }
        out
    }

    /// `σ` as a Weyl element.
    pub fn sigma_part(&self) -> Self {
        self.filter(|k| k.anti == 0 && k.sym == UNIT)
    }

    /// Lines `t^k | sym | anti | coefficient`.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for (k, c) in &self.terms {
            let sym: Vec<String> = k.sym[..self.dim].iter().map(|a| a.to_string()).collect();
            let _ = writeln!(s, "t^{} | {} | {:0w$b} | {:?}", k.t, sym.join(","), k.anti, c, w = self.dim);
        }
        s
    }

    /// Undeformed product `(f ⊗ α)(g ⊗ β) = f∨g ⊗ α∧β`.
    pub fn undeformed_mul<A: CoefAlgebra<Elem = E>>(&self, alg: &A, o: &Self) -> Result<Self> {
        self.check(o)?;
        let mut out = Self::zero(self.dim, self.caps);
        for (ka, ca) in &self.terms {
            for (kb, cb) in &o.terms {
                let Some(s) = wedge_sign(ka.anti as u32, kb.anti as u32) else { continue };
                let mut sym = ka.sym;
                for (x, y) in sym.iter_mut().zip(kb.sym) {
                    *x += y;
                }
                let key = WKey { t: ka.t + kb.t, sym, anti: ka.anti | kb.anti };
                if !out.caps.admits(&key) {
                    continue;
                }
                out.add_owned(key, alg.mul(ca, cb).scale(&sign_field(s)));
            }
        }
        Ok(out)
    }
}

/// Involution with Hermitian generators `x_i* = x_i`, `(e^i)* = e^i`, acting
/// on coefficients by `f`. With it `(a ∘ b)* = (-1)^{ab} b* ∘ a*`.
pub fn weyl_star<E: Coef>(a: &WeylElement<E>, f: impl Fn(&E) -> E) -> WeylElement<E> {
    a.map_terms(|_, c| f(c))
}

type Contractions<S> = Arc<Vec<(u8, Mono, S)>>;

/// The fiberwise product `μ ∘ exp((t/2) 𝒫_M)` with `𝒫_M = M^{ij} ∂_i ⊗ ∂_j`,
/// where `M = ħπ`. Commutators are divided by `ħ t`.
#[derive(Debug)]
pub struct FiberProduct<S> {
    dim: usize,
    m: Matrix<S>,
    half_m: Vec<(usize, usize, S)>,
    hbar: S,
    hbar_inv: S,
    cache: RwLock<HashMap<(Mono, Mono), Contractions<S>>>,
    full_cache: RwLock<HashMap<(Mono, Mono), S>>,
}

impl<S: Scalar> FiberProduct<S> {
    pub fn new(m: Matrix<S>, hbar: S) -> Result<Self> {
        let dim = m.len();
        let hbar_inv = hbar.inv().ok_or_else(|| Error::Config("ħ must be invertible".into()))?;
        let half = S::from_rational(&Rational::new(1, 2));
        let mut half_m = Vec::new();
        for (i, row) in m.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::Config("product matrix must be square".into()));
            }
            for (j, v) in row.iter().enumerate() {
                if !v.is_zero() {
                    half_m.push((i, j, v.mul(&half)));
                }
            }
        }
        Ok(FiberProduct {
            dim,
            m,
            half_m,
            hbar,
            hbar_inv,
            cache: RwLock::default(),
            full_cache: RwLock::default(),
        })
    }

    /// Real product with `π = r + s`.
    pub fn real(pi: Matrix<S>) -> Result<Self> {
        Self::new(pi, S::one())
    }

    pub fn matrix(&self) -> &Matrix<S> {
        &self.m
    }

    pub fn hbar(&self) -> &S {
        &self.hbar
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// All contractions of `x^a ⊗ x^b`: `(t-power, remaining monomial, weight)`.
    fn contractions(&self, a: &Mono, b: &Mono) -> Contractions<S> {
        if let Some(hit) = self.cache.read().unwrap().get(&(*a, *b)) {
            return hit.clone();
        }
        let mut acc: BTreeMap<(u8, Mono), S> = BTreeMap::new();
        let mut k = vec![0u8; self.half_m.len()];
        self.enumerate(0, &mut k, *a, *b, &mut |kk, ra, rb| {
            let mut w = S::one();
            let mut tp = 0u8;
            for (idx, &n) in kk.iter().enumerate() {
                if n == 0 {
                    continue;
                }
                tp += n;
                let c = &self.half_m[idx].2;
                let mut p = S::one();
                for _ in 0..n {
                    p = p.mul(c);
                }
                w = w.mul(&p).mul(&S::from_rational(&crate::scalar::factorial(n as u32).inv().unwrap()));
            }
            for i in 0..self.dim {
                w = w.mul(&S::from_rational(&falling(a[i], a[i] - ra[i])));
                w = w.mul(&S::from_rational(&falling(b[i], b[i] - rb[i])));
            }
            let mut res = ra;
            for (x, y) in res.iter_mut().zip(rb) {
                *x += y;
            }
            let e = acc.entry((tp, res)).or_insert_with(S::zero);
            *e = e.add(&w);
        });
        let out: Contractions<S> =
            Arc::new(acc.into_iter().filter(|(_, w)| !w.is_zero()).map(|((t, m), w)| (t, m, w)).collect());
        self.cache.write().unwrap().insert((*a, *b), out.clone());
        out
    }

    /// Weight of the full contraction of `x^a ⊗ x^b` (t-power `|a| = |b|`).
    fn full_contraction(&self, a: &Mono, b: &Mono) -> S {
        if let Some(hit) = self.full_cache.read().unwrap().get(&(*a, *b)) {
            return hit.clone();
        }
        let w = self
            .contractions(a, b)
            .iter()
            .find(|(_, m, _)| *m == UNIT)
            .map(|(_, _, w)| w.clone())
            .unwrap_or_else(S::zero);
        self.full_cache.write().unwrap().insert((*a, *b), w.clone());
        w
    }

    fn enumerate(
        &self,
        idx: usize,
        k: &mut Vec<u8>,
        ra: Mono,
        rb: Mono,
        f: &mut impl FnMut(&[u8], Mono, Mono),
    ) {
        if idx == self.half_m.len() {
            f(k, ra, rb);
            return;
        }
        let (i, j, _) = self.half_m[idx];
        let max = ra[i].min(rb[j]);
        for n in 0..=max {
            let (mut a2, mut b2) = (ra, rb);
            a2[i] -= n;
            b2[j] -= n;
            k[idx] = n;
            self.enumerate(idx + 1, k, a2, b2, f);
        }
        k[idx] = 0;
    }

    /// `a ∘ b`.
    pub fn mul<A>(&self, alg: &A, a: &WeylElement<A::Elem>, b: &WeylElement<A::Elem>) -> Result<WeylElement<A::Elem>>
    where
        A: CoefAlgebra,
        A::Elem: Coef<Field = S>,
    {
        a.check(b)?;
        self.mul_into(alg, a, b, a.caps)
    }

    fn mul_into<A>(
        &self,
        alg: &A,
        a: &WeylElement<A::Elem>,
        b: &WeylElement<A::Elem>,
        caps: Caps,
    ) -> Result<WeylElement<A::Elem>>
    where
        A: CoefAlgebra,
        A::Elem: Coef<Field = S>,
    {
        let mut out = WeylElement::zero(a.dim, caps);
        for (ka, ca) in &a.terms {
            for (kb, cb) in &b.terms {
                let t0 = ka.t + kb.t;
                if t0 as usize > caps.t {
                    continue;
                }
                let Some(s) = wedge_sign(ka.anti as u32, kb.anti as u32) else { continue };
                let anti = ka.anti | kb.anti;
                let mut coef: Option<A::Elem> = None;
                for (tp, m, w) in self.contractions(&ka.sym, &kb.sym).iter() {
                    let key = WKey { t: t0 + tp, sym: *m, anti };
                    if !caps.admits(&key) {
                        continue;
                    }
                    let c = coef.get_or_insert_with(|| alg.mul(ca, cb).scale(&S::from_int(s)));
                    out.add_owned(key, c.scale(w));
                }
            }
        }
        Ok(out)
    }

    /// `σ(a ∘ b)`, using only full contractions.
    pub fn sigma_mul<A>(&self, alg: &A, a: &WeylElement<A::Elem>, b: &WeylElement<A::Elem>) -> Result<TruncatedSeries<A::Elem>>
    where
        A: CoefAlgebra,
        A::Elem: Coef<Field = S>,
    {
        a.check(b)?;
        let cap = a.caps.t;
        let mut out = TruncatedSeries::<A::Elem>::zero(cap);
        let mut by_deg: BTreeMap<usize, Vec<(&WKey, &A::Elem)>> = BTreeMap::new();
        for (kb, cb) in &b.terms {
            if kb.anti == 0 {
                by_deg.entry(kb.sym_degree()).or_default().push((kb, cb));
            }
        }
        for (ka, ca) in &a.terms {
            if ka.anti != 0 {
                continue;
            }
            let d = ka.sym_degree();
            let Some(list) = by_deg.get(&d) else { continue };
            for (kb, cb) in list {
                let t = ka.t as usize + kb.t as usize + d;
                if t > cap {
                    continue;
                }
                let w = self.full_contraction(&ka.sym, &kb.sym);
                if w.is_zero() {
                    continue;
                }
                out.coeff_mut(t).add_assign(&alg.mul(ca, cb).scale(&w));
            }
        }
        Ok(out)
    }

    /// `[a, b] = a∘b - (-1)^{kℓ} b∘a` for homogeneous antisymmetric degrees.
    pub fn commutator<A>(&self, alg: &A, a: &WeylElement<A::Elem>, b: &WeylElement<A::Elem>) -> Result<WeylElement<A::Elem>>
    where
        A: CoefAlgebra,
        A::Elem: Coef<Field = S>,
    {
        a.check(b)?;
        self.commutator_into(alg, a, b, a.caps)
    }

    fn commutator_into<A>(
        &self,
        alg: &A,
        a: &WeylElement<A::Elem>,
        b: &WeylElement<A::Elem>,
        caps: Caps,
    ) -> Result<WeylElement<A::Elem>>
    where
        A: CoefAlgebra,
        A::Elem: Coef<Field = S>,
    {
        let mut out = WeylElement::zero(a.dim, caps);
        let odd = |x: &WeylElement<A::Elem>| {
            let mut e = WeylElement::zero(x.dim, x.caps);
            let mut o = WeylElement::zero(x.dim, x.caps);
            for (k, c) in &x.terms {
                if k.anti_degree() % 2 == 0 { &mut e } else { &mut o }.add_term(*k, c);
            }
            (e, o)
        };
        let (ae, ao) = odd(a);
        let (be, bo) = odd(b);
        for (x, y, sign) in [(&ae, &be, 1), (&ae, &bo, 1), (&ao, &be, 1), (&ao, &bo, -1)] {
            if x.is_empty() || y.is_empty() {
                continue;
            }
            out.add_assign(&self.mul_into(alg, x, y, caps)?);
            let yx = self.mul_into(alg, y, x, caps)?;
            if sign == 1 {
                out = out.sub(&yx)?;
            } else {
                out.add_assign(&yx);
            }
        }
        Ok(out)
    }

    /// `(1/(ħt)) [a, b]`. The commutator is formed with widened caps so the
    /// division loses nothing inside the caps of `a`.
    pub fn ad_over_t<A>(&self, alg: &A, a: &WeylElement<A::Elem>, b: &WeylElement<A::Elem>) -> Result<WeylElement<A::Elem>>
    where
        A: CoefAlgebra,
        A::Elem: Coef<Field = S>,
    {
        a.check(b)?;
        let c = self.commutator_into(alg, a, b, a.caps.widened())?;
        let mut out = WeylElement::zero(a.dim, a.caps);
        for (k, v) in &c.terms {
            if k.t == 0 {
                return Err(Error::Invariant(format!(
                    "commutator has a t^0 component at sym {:?}, anti {:b}",
                    &k.sym[..a.dim],
                    k.anti
                )));
            }
            let key = WKey { t: k.t - 1, ..*k };
            out.add_owned(key, v.scale(&self.hbar_inv));
        }
        Ok(out)
    }

    /// `(1/(ħt)) a ∘ b` for a product known to vanish at `t^0`.
    pub fn mul_over_t<A>(&self, alg: &A, a: &WeylElement<A::Elem>, b: &WeylElement<A::Elem>) -> Result<WeylElement<A::Elem>>
    where
        A: CoefAlgebra,
        A::Elem: Coef<Field = S>,
    {
        a.check(b)?;
        let c = self.mul_into(alg, a, b, a.caps.widened())?;
        let mut out = WeylElement::zero(a.dim, a.caps);
        for (k, v) in &c.terms {
            if k.t == 0 {
                return Err(Error::Invariant("product has a t^0 component".into()));
            }
            out.add_owned(WKey { t: k.t - 1, ..*k }, v.scale(&self.hbar_inv));
        }
        Ok(out)
    }
}

/// `a!/(a-k)!` written as `falling(a, k)`.
fn falling(a: u8, k: u8) -> Rational {
    let mut out = Rational::one();
    for j in 0..k {
        out = out.mul(&Rational::from_int((a - j) as i64));
    }
    out
}

/// `x_i` as a Weyl element with coefficient `c`.
pub fn sym_generator<E: Coef>(dim: usize, caps: Caps, i: usize, c: E) -> WeylElement<E> {
    let mut sym = UNIT;
    sym[i] = 1;
    WeylElement::term(dim, caps, WKey { t: 0, sym, anti: 0 }, c)
}

/// `e^i` in the antisymmetric factor with coefficient `c`.
pub fn anti_generator<E: Coef>(dim: usize, caps: Caps, i: usize, c: E) -> WeylElement<E> {
    WeylElement::term(dim, caps, WKey { t: 0, sym: UNIT, anti: 1 << i }, c)
}

/// Random element with `terms` terms of anti-degree `anti_degree`, sym
/// degree at most 3 and small integer coefficients (Gaussian when the
/// field has `i`).
pub fn sample_element<S: Scalar + Coef<Field = S>, R: Rng>(
    rng: &mut R,
    dim: usize,
    caps: Caps,
    terms: usize,
    anti_degree: usize,
) -> WeylElement<S> {
    let mut out = WeylElement::zero(dim, caps);
    for _ in 0..terms {
        let mut sym = UNIT;
        for _ in 0..rng.gen_range(0..=3) {
            sym[rng.gen_range(0..dim)] += 1;
        }
        let mut anti = 0u8;
        while (anti.count_ones() as usize) < anti_degree.min(dim) {
            anti |= 1 << rng.gen_range(0..dim);
        }
        let mut c = S::from_int(rng.gen_range(-3..=3));
        if let Some(i) = S::imag_unit() {
            c = c.add(&i.mul(&S::from_int(rng.gen_range(-3..=3))));
        }
        out.add_term(WKey::new(rng.gen_range(0..=caps.t.min(2)), sym, anti), &c);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::GaussianRational;
    use proptest::prelude::*;

    type W = WeylElement<Rational>;

    fn q(n: i64) -> Rational {
        Rational::from_int(n)
    }

    fn mono(v: &[u8]) -> Mono {
        let mut m = UNIT;
        m[..v.len()].copy_from_slice(v);
        m
    }

    const CAPS: Caps = Caps::bounded(3, 40);

    fn alg() -> Scalars<Rational> {
        Scalars::new()
    }

    fn symplectic2() -> FiberProduct<Rational> {
        FiberProduct::real(vec![vec![q(0), q(1)], vec![q(-1), q(0)]]).unwrap()
    }

    #[test]
    fn undeformed_examples() {
        let x1 = sym_generator(2, CAPS, 0, q(1));
        let sq = x1.undeformed_mul(&alg(), &x1).unwrap();
        assert_eq!(sq, W::term(2, CAPS, WKey::new(0, mono(&[2, 0]), 0), q(1)));
        let a1 = anti_generator(2, CAPS, 0, q(1));
        assert!(a1.undeformed_mul(&alg(), &a1).unwrap().is_zero());
        let u = W::term(2, CAPS, WKey::new(0, mono(&[1, 0]), 0b10), q(1));
        let v = W::term(2, CAPS, WKey::new(0, mono(&[0, 1]), 0b01), q(1));
        let uv = u.undeformed_mul(&alg(), &v).unwrap();
        assert_eq!(uv, W::term(2, CAPS, WKey::new(0, mono(&[1, 1]), 0b11), q(-1)));
    }

    #[test]
    fn fiber_product_examples() {
        let p = symplectic2();
        let x1 = sym_generator(2, CAPS, 0, q(1));
        let x2 = sym_generator(2, CAPS, 1, q(1));
        let prod = p.mul(&alg(), &x1, &x2).unwrap();
        let mut expect = W::term(2, CAPS, WKey::new(0, mono(&[1, 1]), 0), q(1));
        expect.add_term(WKey::new(1, UNIT, 0), &Rational::new(1, 2));
        assert_eq!(prod, expect);
        let c = p.commutator(&alg(), &x1, &x2).unwrap();
        assert_eq!(c, W::term(2, CAPS, WKey::new(1, UNIT, 0), q(1)));
        let one = W::constant(2, CAPS, q(1));
        assert_eq!(p.mul(&alg(), &prod, &one).unwrap(), prod);
        let ad = p.ad_over_t(&alg(), &x1, &x2).unwrap();
        assert_eq!(ad, W::constant(2, CAPS, q(1)));
        // Elements without symmetric part are central.
        let a1 = anti_generator(2, CAPS, 0, q(1));
        assert!(p.commutator(&alg(), &a1, &x2).unwrap().is_zero());
        assert!(p.commutator(&alg(), &a1, &a1).unwrap().is_zero());
    }

    #[test]
    fn koszul_examples() {
        let x1 = sym_generator(2, CAPS, 0, q(1));
        let a1 = anti_generator(2, CAPS, 0, q(1));
        assert_eq!(x1.delta(), a1);
        assert_eq!(a1.delta_inv(), x1);
        let mut e = W::constant(2, CAPS, q(5));
        e.add_term(WKey::new(0, mono(&[1, 0]), 0b10), &q(1));
        e.add_term(WKey::new(2, UNIT, 0), &q(7));
        let s = e.sigma();
        assert_eq!(s.coeffs(), &[q(5), q(0), q(7), q(0)]);
    }

    fn arb_weyl(dim: usize) -> impl Strategy<Value = W> {
        proptest::collection::vec(
            (0u8..2, proptest::collection::vec(0u8..3, dim), 0u8..(1 << dim), -3i64..4),
            0..6,
        )
        .prop_map(move |ts| {
            let mut w = W::zero(dim, CAPS);
            for (t, s, a, c) in ts {
                w.add_term(WKey::new(t as usize, mono(&s), a), &q(c));
            }
            w
        })
    }

    fn homogeneous_anti(w: &W, p: usize) -> W {
        w.filter(|k| k.anti_degree() == p)
    }

    fn pi3() -> Matrix<Rational> {
        // r = e1∧e2 plus a symmetric part on e3
        vec![vec![q(0), q(1), q(0)], vec![q(-1), q(0), q(0)], vec![q(0), q(0), q(2)]]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn poincare_lemma(a in arb_weyl(3)) {
            let lhs = a.delta_inv().delta().add(&a.delta().delta_inv()).unwrap()
                .add(&a.sigma_part()).unwrap();
            prop_assert_eq!(lhs, a.clone());
            prop_assert!(a.delta().delta().is_zero());
            prop_assert!(a.delta_star().delta_star().is_zero());
            prop_assert!(a.delta_inv().delta_inv().is_zero());
        }

        #[test]
        fn fiber_product_associative(a in arb_weyl(3), b in arb_weyl(3), c in arb_weyl(3)) {
            let p = FiberProduct::real(pi3()).unwrap();
            let l = p.mul(&alg(), &p.mul(&alg(), &a, &b).unwrap(), &c).unwrap();
            let r = p.mul(&alg(), &a, &p.mul(&alg(), &b, &c).unwrap()).unwrap();
            prop_assert_eq!(l, r);
        }

        #[test]
        fn derivations_of_product(a in arb_weyl(3), b in arb_weyl(3)) {
            let p = FiberProduct::real(pi3()).unwrap();
            for pa in 0..3 {
                let a = homogeneous_anti(&a, pa);
                let ab = p.mul(&alg(), &a, &b).unwrap();
                let sign = if pa % 2 == 0 { q(1) } else { q(-1) };
                let d = ab.delta();
                let rhs = p.mul(&alg(), &a.delta(), &b).unwrap()
                    .add(&p.mul(&alg(), &a, &b.delta()).unwrap().scale(&sign)).unwrap();
                prop_assert_eq!(d, rhs);
                for op in [W::deg_a, W::deg_total] {
                    let lhs = op(&ab);
                    let rhs = p.mul(&alg(), &op(&a), &b).unwrap()
                        .add(&p.mul(&alg(), &a, &op(&b)).unwrap()).unwrap();
                    prop_assert_eq!(lhs, rhs);
                }
            }
        }

        #[test]
        fn filtration_is_respected(a in arb_weyl(3), b in arb_weyl(3)) {
            let p = FiberProduct::real(pi3()).unwrap();
            let ab = p.mul(&alg(), &a, &b).unwrap();
            if let (Some(x), Some(y), Some(z)) =
                (a.min_total_degree(), b.min_total_degree(), ab.min_total_degree()) {
                prop_assert!(z >= x + y);
            }
        }

        #[test]
        fn sigma_mul_matches_full_product(a in arb_weyl(3), b in arb_weyl(3)) {
            let p = FiberProduct::real(pi3()).unwrap();
            prop_assert_eq!(p.sigma_mul(&alg(), &a, &b).unwrap(), p.mul(&alg(), &a, &b).unwrap().sigma());
        }

        #[test]
        fn hermitian_fiberwise_product(a in arb_weyl(2), b in arb_weyl(2), i1 in -2i64..3, i2 in -2i64..3) {
            // M = s + i r with r real antisymmetric, s real symmetric; ħ = i.
            let g = |re: i64, im: i64| GaussianRational::new(q(re), q(im));
            let m = vec![vec![g(2, 0), g(1, 1)], vec![g(1, -1), g(1, 0)]];
            let p = FiberProduct::new(m, GaussianRational::i()).unwrap();
            let ca = a.map_terms(|_, c| g(1, i1).mul(&GaussianRational::from_rational(c)));
            let cb = b.map_terms(|_, c| g(i2, 1).mul(&GaussianRational::from_rational(c)));
            let ga: Scalars<GaussianRational> = Scalars::new();
            let star = |w: &WeylElement<GaussianRational>| weyl_star(w, |c| c.conj());
            for pa in 0..3 {
                for pb in 0..3 {
                    let x = ca.filter(|k| k.anti_degree() == pa);
                    let y = cb.filter(|k| k.anti_degree() == pb);
                    let lhs = star(&p.mul(&ga, &x, &y).unwrap());
                    let mut rhs = p.mul(&ga, &star(&y), &star(&x)).unwrap();
                    if (pa * pb) % 2 == 1 {
                        rhs = rhs.neg();
                    }
                    prop_assert_eq!(lhs, rhs);
                }
            }
        }
    }
}
