//! Fedosov twists `F = 1 ⋆ 1`, the twist axioms, equivalences between
//! twists and the order-by-order comparison that detects `H²_CE` classes.

use std::sync::Arc;

use serde::Serialize;
use serde_json::{json, Value};

use crate::enveloping::{display_mono, PbwElement, TKey, TensorUea, Uea};
use crate::error::{Error, Result};
use crate::fedosov::FedosovContext;
use crate::lie::{ce_cohomology, ce_differential, Form, MultiVector};
use crate::linalg;
use crate::scalar::{bernoulli, factorial, Coef, Rational, Scalar, TruncatedSeries};
use crate::weyl::{Caps, TensorAlgebra, WeylElement};

/// Series in `U(g)^{⊗k}[[t]]`, stored as tensors of fixed degree.
pub type TensorSeries<S> = TruncatedSeries<TensorUea<S>>;

/// Where a twist came from.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Fedosov { order: usize, omega_orders: Vec<usize> },
    External,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TwistCandidate<S: Scalar> {
    pub value: TensorSeries<S>,
    pub provenance: Provenance,
}

impl<S: Scalar> TwistCandidate<S> {
    pub fn external(value: TensorSeries<S>) -> Self {
        TwistCandidate { value, provenance: Provenance::External }
    }

    pub fn order(&self) -> usize {
        self.value.cap()
    }

    /// `[{t_power, terms: [{left_monomial, right_monomial, coeff}]}]`.
    pub fn to_json(&self, dim: usize) -> Value {
        let orders: Vec<Value> = self
            .value
            .coeffs()
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let terms: Vec<Value> = c
                    .terms
                    .iter()
                    .map(|(key, v)| {
                        json!({
                            "left_monomial": key.slots[0][..dim].to_vec(),
                            "right_monomial": key.slots[1][..dim].to_vec(),
                            "coeff": v.to_string(),
                        })
                    })
                    .collect();
                json!({ "t_power": k, "terms": terms })
            })
            .collect();
        json!({ "provenance": self.provenance, "orders": orders })
    }
}

/// `F = σ(τ(1) ∘ τ(1))` for `1 ∈ U(g) ⊂ T•(U(g))`.
pub fn compute_twist<S: Scalar + Coef<Field = S>>(ctx: &FedosovContext<S>) -> Result<TwistCandidate<S>> {
    let uea = Arc::new(Uea::new(ctx.lie().clone()));
    compute_twist_with(ctx, &uea)
}

pub fn compute_twist_with<S: Scalar + Coef<Field = S>>(
    ctx: &FedosovContext<S>,
    uea: &Arc<Uea>,
) -> Result<TwistCandidate<S>> {
    let rho = ctx.solve_rho()?;
    let alg = TensorAlgebra::<S>::new(uea.clone());
    let ext = ctx.extended(&alg, &rho, Caps::for_sections(ctx.order()));
    let one = TensorUea::unit_tensor(1);
    let value = ext.star(&one, &one)?;
    let omega_orders =
        ctx.omegas().iter().enumerate().filter(|(_, o)| !o.is_zero()).map(|(k, _)| k + 1).collect();
    Ok(TwistCandidate { value, provenance: Provenance::Fedosov { order: ctx.order(), omega_orders } })
}

/// Product of two series with componentwise multiplication in `U^{⊗k}`.
pub fn series_tensor_mul<S: Scalar>(uea: &Uea, a: &TensorSeries<S>, b: &TensorSeries<S>) -> Result<TensorSeries<S>> {
    let cap = a.cap().min(b.cap());
    let mut out = TensorSeries::<S>::zero(cap);
    for i in 0..=cap {
        if a.coeff(i).is_zero() {
            continue;
        }
        for j in 0..=cap - i {
            if b.coeff(j).is_zero() {
                continue;
            }
            let p = uea.tensor_mul(a.coeff(i), b.coeff(j))?;
            out.coeff_mut(i + j).add_assign(&p);
        }
    }
    Ok(out)
}

/// `(a ⊗ b)_k = Σ a_i ⊗ b_{k-i}` by concatenation.
pub fn series_concat<S: Scalar>(a: &TensorSeries<S>, b: &TensorSeries<S>) -> Result<TensorSeries<S>> {
    a.mul_with(b, |x, y| x.concat(y).expect("tensor degree above 3"))
}

pub fn series_map<S: Scalar>(
    a: &TensorSeries<S>,
    f: impl Fn(&TensorUea<S>) -> Result<TensorUea<S>>,
) -> Result<TensorSeries<S>> {
    let coeffs = a.coeffs().iter().map(f).collect::<Result<Vec<_>>>()?;
    Ok(TruncatedSeries::from_coeffs(coeffs, a.cap()))
}

/// The constant series `x`.
pub fn series_constant<S: Scalar>(x: TensorUea<S>, cap: usize) -> TensorSeries<S> {
    TruncatedSeries::from_coeffs(vec![x], cap)
}

/// `exp(x)` for `x` without constant term, in `U^{⊗deg}`.
pub fn series_exp<S: Scalar>(uea: &Uea, x: &TensorSeries<S>, deg: u8) -> Result<TensorSeries<S>> {
    if !x.coeff(0).is_zero() {
        return Err(Error::Precondition("exp needs a series without constant term".into()));
    }
    let cap = x.cap();
    let mut out = series_constant(TensorUea::unit_tensor(deg), cap);
    let mut power = out.clone();
    for n in 1..=cap {
        power = series_tensor_mul(uea, &power, x)?;
        if power.is_zero() {
            break;
        }
        let w = factorial(n as u32).inv().expect("nonzero");
        out = out.add(&power.scale(&S::from_rational(&w)))?;
    }
    Ok(out)
}

/// Inverse of a series `1 + O(t)` in `U^{⊗deg}`.
pub fn series_inverse<S: Scalar>(uea: &Uea, a: &TensorSeries<S>, deg: u8) -> Result<TensorSeries<S>> {
    let cap = a.cap();
    let unit = series_constant(TensorUea::unit_tensor(deg), cap);
    if a.coeff(0) != unit.coeff(0) {
        return Err(Error::Precondition("series must start with 1".into()));
    }
    let x = unit.sub(a)?;
    let mut out = unit.clone();
    let mut power = unit;
    for _ in 1..=cap {
        power = series_tensor_mul(uea, &power, &x)?;
        if power.is_zero() {
            break;
        }
        out = out.add(&power)?;
    }
    Ok(out)
}

/// Which twist identity failed.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TwistIdentity {
    Normalization,
    Cocycle,
    CounitLeft,
    CounitRight,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrderVerdict {
    pub order: usize,
    pub cocycle: bool,
    pub counit: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TwistFailure {
    pub order: usize,
    pub identity: TwistIdentity,
    /// First offending component of `lhs - rhs`.
    pub component: String,
    pub coeff: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TwistReport {
    pub order: usize,
    pub orders: Vec<OrderVerdict>,
    pub first_failure: Option<TwistFailure>,
}

impl TwistReport {
    pub fn passed(&self) -> bool {
        self.first_failure.is_none()
    }
}

fn first_component<S: Scalar>(x: &TensorUea<S>, dim: usize) -> (String, String) {
    let (k, v) = x.terms.iter().next().expect("nonzero");
    (k.display(dim), v.to_string())
}

/// Checks `(Δ⊗id)(F)(F⊗1) = (id⊗Δ)(F)(1⊗F)`, `(ε⊗id)F = 1 = (id⊗ε)F` and
/// `F_0 = 1⊗1`, order by order.
pub fn verify_twist<S: Scalar>(uea: &Uea, f: &TwistCandidate<S>) -> Result<TwistReport> {
    let n = uea.dim();
    let fv = &f.value;
    let cap = fv.cap();
    if let Some((k, _)) = fv.coeffs().iter().flat_map(|c| c.terms.iter()).find(|(k, _)| k.deg != 2) {
        return Err(Error::Config(format!("twist terms must have tensor degree 2, found {}", k.deg)));
    }
    let one = series_constant(TensorUea::unit_tensor(1), cap);
    let lhs = series_tensor_mul(uea, &series_map(fv, |c| uea.coproduct_slot(c, 0))?, &series_concat(fv, &one)?)?;
    let rhs = series_tensor_mul(uea, &series_map(fv, |c| uea.coproduct_slot(c, 1))?, &series_concat(&one, fv)?)?;
    let mut orders = Vec::new();
    let mut first_failure = None;
    let unit2 = TensorUea::<S>::unit_tensor(2);
    if fv.coeff(0) != &unit2 {
        let diff = fv.coeff(0).sub(&unit2);
        let (component, coeff) = first_component(&diff, n);
        first_failure = Some(TwistFailure { order: 0, identity: TwistIdentity::Normalization, component, coeff });
    }
    for k in 0..=cap {
        let dc = lhs.coeff(k).sub(rhs.coeff(k));
        let unit1 = if k == 0 { TensorUea::unit_tensor(1) } else { TensorUea::zero() };
        let dl = uea.counit_slot(fv.coeff(k), 0).sub(&unit1);
        let dr = uea.counit_slot(fv.coeff(k), 1).sub(&unit1);
        orders.push(OrderVerdict { order: k, cocycle: dc.is_zero(), counit: dl.is_zero() && dr.is_zero() });
        if first_failure.is_some() {
            continue;
        }
        for (d, id) in [(dc, TwistIdentity::Cocycle), (dl, TwistIdentity::CounitLeft), (dr, TwistIdentity::CounitRight)] {
            if !d.is_zero() {
                let (component, coeff) = first_component(&d, n);
                first_failure = Some(TwistFailure { order: k, identity: id, component, coeff });
                break;
            }
        }
    }
    Ok(TwistReport { order: cap, orders, first_failure })
}

/// Equivalence `S ∈ U(g)[[t]]` with `S = 1 + O(t)`.
#[derive(Clone, Debug, PartialEq)]
pub struct EquivalenceElement<S: Scalar> {
    pub value: TensorSeries<S>,
}

impl<S: Scalar> EquivalenceElement<S> {
    pub fn identity(cap: usize) -> Self {
        EquivalenceElement { value: series_constant(TensorUea::unit_tensor(1), cap) }
    }

    /// `ε(S)` order by order.
    pub fn counit(&self, uea: &Uea) -> Vec<S> {
        self.value.coeffs().iter().map(|c| uea.counit(&c.to_pbw())).collect()
    }

    pub fn to_json(&self, dim: usize) -> Value {
        let orders: Vec<Value> = self
            .value
            .coeffs()
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let terms: Vec<Value> = c
                    .terms
                    .iter()
                    .map(|(key, v)| json!({ "monomial": key.slots[0][..dim].to_vec(), "coeff": v.to_string() }))
                    .collect();
                json!({ "t_power": k, "terms": terms })
            })
            .collect();
        Value::Array(orders)
    }
}

/// Residual `Δ(S)F' - F(S⊗S)`.
pub fn equivalence_defect<S: Scalar>(
    uea: &Uea,
    s: &EquivalenceElement<S>,
    f: &TensorSeries<S>,
    f_prime: &TensorSeries<S>,
) -> Result<TensorSeries<S>> {
    let ds = series_map(&s.value, |c| uea.coproduct_slot(c, 0))?;
    let lhs = series_tensor_mul(uea, &ds, f_prime)?;
    let ss = series_concat(&s.value, &s.value)?;
    let rhs = series_tensor_mul(uea, f, &ss)?;
    lhs.sub(&rhs)
}

/// `Δ(S)F' = F(S⊗S)`, `S_0 = 1` and `ε(S) = 1`.
pub fn is_equivalence<S: Scalar>(
    uea: &Uea,
    s: &EquivalenceElement<S>,
    f: &TensorSeries<S>,
    f_prime: &TensorSeries<S>,
) -> Result<bool> {
    let mut eps_ok = s.value.coeff(0) == &TensorUea::unit_tensor(1);
    for (k, e) in s.counit(uea).iter().enumerate() {
        eps_ok &= if k == 0 { e.is_one() } else { e.is_zero() };
    }
    Ok(eps_ok && equivalence_defect(uea, s, f, f_prime)?.is_zero())
}

fn same_setup<S: Scalar + Coef<Field = S>>(a: &FedosovContext<S>, b: &FedosovContext<S>) -> Result<()> {
    if a.lie().as_ref() != b.lie().as_ref()
        || a.rmatrix().r_matrix != b.rmatrix().r_matrix
        || a.connection() != b.connection()
        || a.s() != b.s()
        || a.variant() != b.variant()
        || a.order() != b.order()
    {
        return Err(Error::Precondition(
            "contexts must share g, r, the connection, s, the variant and the order".into(),
        ));
    }
    Ok(())
}

/// `S` with `Δ(S)F_{Ω'} = F_Ω(S⊗S)` from `C` with `δ_CE C = Ω - Ω'`;
/// `c[k-1]` is the one-form at `t^k`.
pub fn equivalence_from_cohomologous<S: Scalar + Coef<Field = S>>(
    ctx: &FedosovContext<S>,
    ctx_prime: &FedosovContext<S>,
    c: &[Form],
) -> Result<EquivalenceElement<S>> {
    same_setup(ctx, ctx_prime)?;
    let n = ctx.dim();
    let order = ctx.order();
    if c.len() > order {
        return Err(Error::Config(format!("C has {} coefficients but the order is {order}", c.len())));
    }
    for k in 1..=order {
        let ck = c.get(k - 1).cloned().unwrap_or_else(|| Form::zero(n, 1));
        if ck.dim() != n || ck.degree() != 1 {
            return Err(Error::Config(format!("C_{k} must be a one-form")));
        }
        let want = ctx.omega(k).sub(ctx_prime.omega(k));
        if ce_differential(ctx.lie(), &ck) != want {
            return Err(Error::Precondition(format!("δ_CE C_{k} ≠ Ω_{k} - Ω'_{k}")));
        }
    }
    lift_equivalence(ctx_prime, ctx, c)
}

/// The `h` solving `h = K⊗1 + δ⁻¹(Dh + (1/t)ad(ϱ)h + x/(eˣ-1)(ϱ_T - ϱ_S))`,
/// `x = (1/t)ad(h)`, where `δ_CE K = Ω_T - Ω_S` and `ϱ` is the source's.
pub fn equivalence_generator<S: Scalar + Coef<Field = S>>(
    source: &FedosovContext<S>,
    target: &FedosovContext<S>,
    c: &[Form],
) -> Result<WeylElement<S>> {
    let n = source.dim();
    let caps = source.caps();
    let rho = source.solve_rho()?;
    let rho_t = target.solve_rho()?;
    let alg_s = crate::weyl::Scalars::<S>::new();
    let prod = source.product();
    // K ⊗ 1: the one-form sits in the symmetric factor.
    let mut c_el = WeylElement::zero(n, caps);
    for (k, ck) in c.iter().enumerate() {
        for (mask, v) in ck.components() {
            let i = mask.trailing_zeros() as usize;
            let mut sym = crate::enveloping::UNIT;
            sym[i] = 1;
            c_el.add_term(crate::weyl::WKey::new(k + 1, sym, 0), &S::from_rational(v));
        }
    }
    let drho = rho_t.element.sub(&rho.element)?;
    let bern = bernoulli(caps.total + 1);
    let ad_h = |h: &WeylElement<S>, x: &WeylElement<S>| prod.ad_over_t(&alg_s, h, x);
    let mut h = c_el.clone();
    let mut settled = false;
    for _ in 0..=caps.total + 1 {
        // x/(eˣ - 1)(ϱ_T - ϱ_S)
        let mut series = WeylElement::zero(n, caps);
        let mut pw = drho.clone();
        for (m, b) in bern.iter().enumerate() {
            if m > 0 {
                pw = ad_h(&h, &pw)?;
            }
            if pw.is_zero() {
                break;
            }
            if !b.is_zero() {
                let w = b.mul(&factorial(m as u32).inv().expect("nonzero"));
                series.add_assign(&pw.scale(&S::from_rational(&w)));
            }
        }
        let inner = source
            .connection()
            .covariant_d(&h)
            .add(&prod.ad_over_t(&alg_s, &rho.element, &h)?)?
            .add(&series)?;
        let next = c_el.add(&inner.delta_inv())?;
        if next == h {
            settled = true;
            break;
        }
        h = next;
    }
    if !settled {
        return Err(Error::Invariant("h-recursion did not settle".into()));
    }
    Ok(h)
}

/// `S = σ(𝒜_h τ(1))`, so that `Δ(S)F_S = F_T(S⊗S)`.
fn lift_equivalence<S: Scalar + Coef<Field = S>>(
    source: &FedosovContext<S>,
    target: &FedosovContext<S>,
    c: &[Form],
) -> Result<EquivalenceElement<S>> {
    let h = equivalence_generator(source, target, c)?;
    let caps = source.caps();
    let rho = source.solve_rho()?;
    let prod = source.product();
    let uea = Arc::new(Uea::new(source.lie().clone()));
    let alg = TensorAlgebra::<S>::new(uea);
    let ext = source.extended(&alg, &rho, caps);
    let tau = ext.taylor(&TensorUea::unit_tensor(1))?;
    let h_a = h.map_terms(|_, c| alg_s_lift::<S>(c));
    // 𝒜_h = exp((1/t)ad(h)) on τ(1)
    let mut acc = tau.clone();
    let mut pw = tau;
    for m in 1..=caps.total + 1 {
        pw = prod.ad_over_t(&alg, &h_a, &pw)?;
        if pw.is_zero() {
            break;
        }
        acc.add_assign(&pw.scale(&S::from_rational(&factorial(m as u32).inv().expect("nonzero"))));
    }
    Ok(EquivalenceElement { value: acc.sigma() })
}

fn alg_s_lift<S: Scalar>(c: &S) -> TensorUea<S> {
    TensorUea::scalar(c.clone())
}

/// Result of comparing two twists at the first order where they may differ.
#[derive(Clone, Debug, PartialEq)]
pub enum StepVerdict {
    /// `F` and the conjugated `F'` now agree through `order`; `step` maps
    /// the old `F'` to the new one: `Δ(step)F'_new = F'_old(step⊗step)`.
    Equivalent { order: usize, step: EquivalenceElement<Rational> },
    /// The skew part is not removable: `class` are the coordinates of
    /// `X♭` in the `H²` basis, `omega_class` those of `-2X♭`.
    Obstruction { order: usize, bivector: MultiVector, class: Vec<Rational>, omega_class: Vec<Rational> },
}

/// Setup shared by comparisons: `U(g)`, `ω`, and the chosen `H²` basis.
pub struct Comparator {
    pub uea: Arc<Uea>,
    pub omega: linalg::Matrix<Rational>,
    pub cohomology: crate::lie::Cohomology,
}

impl Comparator {
    pub fn new(ctx: &FedosovContext<Rational>) -> Result<Self> {
        Ok(Comparator {
            uea: Arc::new(Uea::new(ctx.lie().clone())),
            omega: ctx.rmatrix().omega.clone(),
            cohomology: ce_cohomology(ctx.lie(), 2)?,
        })
    }

    fn flat2(&self, x: &MultiVector) -> Form {
        let m = x.to_matrix();
        Form::from_matrix(&linalg::mat_mul(&linalg::mat_mul(&self.omega, &m), &self.omega))
    }

    /// One step of the comparison: `f` and `f'` agree through order `k`.
    pub fn match_step(
        &self,
        f: &TensorSeries<Rational>,
        f_prime: &TensorSeries<Rational>,
        k: usize,
    ) -> Result<StepVerdict> {
        let cap = f.cap();
        if f_prime.cap() != cap || k >= cap {
            return Err(Error::Precondition("twists must share the truncation order and k < N".into()));
        }
        for i in 0..=k {
            if f.coeff(i) != f_prime.coeff(i) {
                return Err(Error::Precondition(format!("twists differ at order {i} ≤ k = {k}")));
            }
        }
        let uea = &self.uea;
        let n = uea.dim();
        let d = f.coeff(k + 1).sub(f_prime.coeff(k + 1));
        if !uea.hkr_boundary(&d)?.is_zero() {
            return Err(Error::Precondition(format!("∂(F_{} - F'_{}) ≠ 0: inputs are not twists", k + 1, k + 1)));
        }
        let (x, _) = uea.hkr_decompose(&d)?;
        let mut f_cur = f_prime.clone();
        let mut total = EquivalenceElement::identity(cap);
        if !x.is_zero() {
            let class = self.cohomology.class_of(&self.flat2(&x))?;
            if class.iter().any(|c| !c.is_zero()) {
                let omega_class = class.iter().map(|c| c.mul(&Rational::from_int(-2))).collect();
                return Ok(StepVerdict::Obstruction { order: k + 1, bivector: x, class, omega_class });
            }
            // Conjugating F' by exp(t^k ξ), ξ ∈ g, changes order k+1 by
            // -[Δξ, F'_1]; its skew part has to cancel X.
            let f1 = f_prime.coeff(1);
            let mut cols: Vec<MultiVector> = Vec::new();
            for i in 0..n {
                let g = TensorUea::from_pbw(&PbwElement::generator(i));
                let dg = uea.coproduct_slot(&g, 0)?;
                let comm = uea.tensor_mul(&dg, f1)?.sub(&uea.tensor_mul(f1, &dg)?);
                let (xi, _) = uea.hkr_decompose(&comm)?;
                cols.push(xi);
            }
            let basis = crate::lie::Alternating::basis(n, 2);
            let rows: linalg::Matrix<Rational> = basis
                .iter()
                .map(|mask| cols.iter().map(|c| c.components().get(mask).cloned().unwrap_or_default()).collect())
                .collect();
            let rhs: Vec<Rational> =
                basis.iter().map(|mask| x.components().get(mask).map(Rational::neg).unwrap_or_default()).collect();
            let xi = linalg::solve(&rows, &rhs, n).ok_or_else(|| {
                Error::Invariant("exact skew part but no conjugating element found".into())
            })?;
            // F'' = Δ(E) F' (E⊗E)^{-1}, E = exp(t^k ξ) grouplike.
            let mut gen = TensorUea::zero();
            for (i, c) in xi.iter().enumerate() {
                gen.add_term(TKey::one(crate::enveloping::generator(i)), c);
            }
            let mut xs = TensorSeries::<Rational>::zero(cap);
            *xs.coeff_mut(k) = gen;
            let e = series_exp(uea, &xs, 1)?;
            let e_inv = series_inverse(uea, &e, 1)?;
            f_cur = self.conjugate(&f_cur, &e, &e_inv)?;
            total = EquivalenceElement { value: e };
        }
        let d = f.coeff(k + 1).sub(f_cur.coeff(k + 1));
        let (x2, s) = uea.hkr_decompose(&d)?;
        if !x2.is_zero() {
            return Err(Error::Invariant("skew part survived conjugation".into()));
        }
        // F_{k+1} - F''_{k+1} = ∂S, and exp(t^{k+1} S) adds ∂S at order k+1.
        let mut ts = TensorSeries::<Rational>::zero(cap);
        *ts.coeff_mut(k + 1) = TensorUea::from_pbw(&s);
        let e = series_exp(uea, &ts, 1)?;
        let e_inv = series_inverse(uea, &e, 1)?;
        f_cur = self.conjugate(&f_cur, &e, &e_inv)?;
        if f_cur.coeff(k + 1) != f.coeff(k + 1) {
            return Err(Error::Invariant(format!("order {} still differs after the step", k + 1)));
        }
        let step = series_tensor_mul(uea, &total.value, &e)?;
        Ok(StepVerdict::Equivalent { order: k + 1, step: EquivalenceElement { value: step } })
    }

    /// `Δ(E⁻¹) F (E⊗E)`: the twist equivalent to `F` via `S = E`.
    fn conjugate(
        &self,
        f: &TensorSeries<Rational>,
        e: &TensorSeries<Rational>,
        e_inv: &TensorSeries<Rational>,
    ) -> Result<TensorSeries<Rational>> {
        let de_inv = series_map(e_inv, |c| self.uea.coproduct_slot(c, 0))?;
        let ee = series_concat(e, e)?;
        series_tensor_mul(&self.uea, &series_tensor_mul(&self.uea, &de_inv, f)?, &ee)
    }

    /// Runs the steps from order 1 to `N`. On success the returned `S`
    /// satisfies `Δ(S)F' = F(S⊗S)`.
    pub fn match_twists(&self, f: &TensorSeries<Rational>, f_prime: &TensorSeries<Rational>) -> Result<MatchReport> {
        let cap = f.cap();
        if f.coeff(0) != f_prime.coeff(0) {
            return Err(Error::Precondition("twists differ at order 0".into()));
        }
        let mut f_cur = f_prime.clone();
        let mut s_total = EquivalenceElement::identity(cap);
        let mut steps = Vec::new();
        for k in 0..cap {
            match self.match_step(f, &f_cur, k)? {
                StepVerdict::Equivalent { order, step } => {
                    // Δ(step) f_new = f_cur (step⊗step), so f_new = Δ(step⁻¹) f_cur (step⊗step).
                    let inv = series_inverse(&self.uea, &step.value, 1)?;
                    f_cur = self.conjugate(&f_cur, &step.value, &inv)?;
                    s_total = EquivalenceElement { value: series_tensor_mul(&self.uea, &s_total.value, &step.value)? };
                    steps.push(order);
                }
                obstruction @ StepVerdict::Obstruction { .. } => {
                    return Ok(MatchReport { equivalence: None, obstruction: Some(obstruction), closed_differences: steps.len() + 1, steps });
                }
            }
        }
        if &f_cur != f {
            return Err(Error::Invariant("order stepping did not reach the target twist".into()));
        }
        // Δ(s_total) F = F' (s_total ⊗ s_total), so its inverse goes the other way.
        let s_final = EquivalenceElement { value: series_inverse(&self.uea, &s_total.value, 1)? };
        if !is_equivalence(&self.uea, &s_final, f, f_prime)? {
            return Err(Error::Invariant("accumulated equivalence fails verification".into()));
        }
        Ok(MatchReport { equivalence: Some(s_final), obstruction: None, closed_differences: steps.len(), steps })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatchReport {
    pub equivalence: Option<EquivalenceElement<Rational>>,
    pub obstruction: Option<StepVerdict>,
    pub steps: Vec<usize>,
    /// Order differences found `∂`-closed along the way.
    pub closed_differences: usize,
}

/// One row of a classification run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassEntry {
    pub label: String,
    pub twist_verified: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairVerdict {
    pub a: usize,
    pub b: usize,
    pub equivalent: bool,
    pub obstruction_order: Option<usize>,
    pub obstruction_class: Option<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Fingerprint {
    pub label: String,
    pub order: usize,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassificationReport {
    pub h2_dimension: usize,
    /// Basis of `H²` used for class coordinates, as `(mask, coeff)` lists.
    pub h2_basis: Vec<Vec<(Vec<usize>, String)>>,
    pub entries: Vec<ClassEntry>,
    pub pairs: Vec<PairVerdict>,
    pub fingerprints: Vec<Fingerprint>,
}

/// Computes `F_Ω` for each representative, compares all pairs, and checks
/// that `(F_Ω - F_0)_{k+1}` has skew part `-½ Ω_k♯` at the first `k` with
/// `Ω_k ≠ 0`.
pub fn classify(contexts: &[(String, FedosovContext<Rational>)]) -> Result<ClassificationReport> {
    use rayon::prelude::*;
    let Some((_, first)) = contexts.first() else {
        return Err(Error::Config("nothing to classify".into()));
    };
    for (_, c) in contexts {
        same_setup(first, c)?;
    }
    let cmp = Comparator::new(first)?;
    let twists: Vec<TwistCandidate<Rational>> = contexts
        .par_iter()
        .map(|(_, c)| compute_twist_with(c, &cmp.uea))
        .collect::<Result<Vec<_>>>()?;
    let entries = contexts
        .iter()
        .zip(&twists)
        .map(|((label, _), f)| Ok(ClassEntry { label: label.clone(), twist_verified: verify_twist(&cmp.uea, f)?.passed() }))
        .collect::<Result<Vec<_>>>()?;
    let mut pairs = Vec::new();
    for a in 0..twists.len() {
        for b in a + 1..twists.len() {
            let rep = cmp.match_twists(&twists[a].value, &twists[b].value)?;
            let (order, class) = match &rep.obstruction {
                Some(StepVerdict::Obstruction { order, omega_class, .. }) => {
                    (Some(*order), Some(omega_class.iter().map(Rational::to_string).collect()))
                }
                _ => (None, None),
            };
            pairs.push(PairVerdict { a, b, equivalent: rep.equivalence.is_some(), obstruction_order: order, obstruction_class: class });
        }
    }
    // Fingerprint against the Ω = 0 run.
    let mut opts = crate::fedosov::ContextOptions::new(first.order());
    opts.s = first.s().cloned();
    opts.connection = Some(first.connection().clone());
    let zero_ctx = FedosovContext::<Rational>::new(first.lie().clone(), &first.rmatrix().r, opts)?;
    let f0 = compute_twist_with(&zero_ctx, &cmp.uea)?;
    let mut fingerprints = Vec::new();
    for ((label, c), f) in contexts.iter().zip(&twists) {
        let Some(k) = c.omegas().iter().position(|o| !o.is_zero()).map(|i| i + 1) else { continue };
        if k + 1 > c.order() {
            continue;
        }
        let d = f.value.coeff(k + 1).sub(f0.value.coeff(k + 1));
        let skew = d.sub(&d.flip()).scale(&Rational::new(1, 2));
        let om = c.omega(k);
        let want = c.rmatrix().sharp2(om).scale(&Rational::new(-1, 2));
        let holds = skew == crate::enveloping::bivector_tensor::<Rational>(&want);
        fingerprints.push(Fingerprint { label: label.clone(), order: k + 1, holds });
    }
    let h2_basis = cmp
        .cohomology
        .representatives
        .iter()
        .map(|f| {
            f.components()
                .iter()
                .map(|(m, c)| (crate::lie::mask_indices(*m).iter().map(|i| i + 1).collect(), c.to_string()))
                .collect()
        })
        .collect();
    Ok(ClassificationReport { h2_dimension: cmp.cohomology.dimension, h2_basis, entries, pairs, fingerprints })
}

pub fn describe_monomial(m: &crate::enveloping::Mono, dim: usize) -> String {
    display_mono(m, dim)
}
