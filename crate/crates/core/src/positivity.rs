//! Hermitian deformations, Kähler data, the fiberwise Wick product and the
//! positivity of `a* ⋆ a`.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::enveloping::{TensorUea, Uea};
use crate::error::{Error, Result};
use crate::fedosov::{ContextOptions, FedosovContext, Variant};
use crate::lie::{mask_indices, LieAlgebra, MultiVector};
use crate::linalg::{principal_minors, Matrix};
use crate::scalar::{factorial, GaussianRational, Rational, Scalar, TruncatedSeries};
use crate::udf::{sample_poly, DeformedProduct, FedosovUdf, ModuleAlgebraSpec, Poly, PolySeries};
use crate::weyl::{sample_element, Caps, CoefAlgebra, Scalars, WeylElement};

type C = GaussianRational;

fn c(re: Rational) -> C {
    GaussianRational::new(re, Rational::zero())
}

fn ci() -> C {
    GaussianRational::i()
}

/// Basis `e_1..e_n, f_1..f_n` with `r = A^{kl}(e_k⊗f_l - f_l⊗e_k) +
/// B^{kl}(e_k⊗e_l + f_k⊗f_l)`, `s = A^{kl}(e_k⊗e_l + f_k⊗f_l) -
/// B^{kl}(e_k⊗f_l + f_l⊗e_k)` and `g = A + iB`.
#[derive(Clone, Debug, PartialEq)]
pub struct KaehlerData {
    n: usize,
    a: Matrix<Rational>,
    b: Matrix<Rational>,
    r: MultiVector,
    s: Matrix<Rational>,
    g: Matrix<C>,
    certificate: KaehlerCertificate,
}

/// Evidence that `s` is positive: all principal minors of `s` and the
/// values of `z̄ g z` on the grid `{-1, 0, 1} + i{-1, 0, 1}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KaehlerCertificate {
    /// `(1-based rows, minor)`.
    pub principal_minors: Vec<(Vec<usize>, Rational)>,
    pub grid_points: usize,
    pub grid_minimum: Rational,
}

impl KaehlerData {
    pub fn new(a: Matrix<Rational>, b: Matrix<Rational>) -> Result<Self> {
        let n = a.len();
        if n == 0 || 2 * n > crate::lie::MAX_DIM {
            return Err(Error::Config(format!("Kähler block size must be in 1..={}", crate::lie::MAX_DIM / 2)));
        }
        if a.iter().chain(&b).any(|row| row.len() != n) || b.len() != n {
            return Err(Error::Config(format!("A and B must be {n}×{n}")));
        }
        for k in 0..n {
            for l in 0..n {
                if a[k][l] != a[l][k] {
                    return Err(Error::Certificate(format!("A is not symmetric at ({}, {})", k + 1, l + 1)));
                }
                if b[k][l] != b[l][k].neg() {
                    return Err(Error::Certificate(format!("B is not antisymmetric at ({}, {})", k + 1, l + 1)));
                }
            }
        }
        let r = Self::r_from(&a, &b);
        let mut s = crate::linalg::zeros::<Rational>(2 * n, 2 * n);
        for k in 0..n {
            for l in 0..n {
                s[k][l] = a[k][l].clone();
                s[n + k][n + l] = a[k][l].clone();
                s[k][n + l] = b[k][l].neg();
                s[n + l][k] = b[k][l].neg();
            }
        }
        let g: Matrix<C> =
            (0..n).map(|k| (0..n).map(|l| GaussianRational::new(a[k][l].clone(), b[k][l].clone())).collect()).collect();
        let minors: Vec<(Vec<usize>, Rational)> = principal_minors(&s)
            .into_iter()
            .map(|(mask, d)| (mask_indices(mask).iter().map(|i| i + 1).collect(), d))
            .collect();
        if let Some((rows, d)) = minors.iter().find(|(_, d)| d.signum() < 0) {
            return Err(Error::Certificate(format!("s has the negative principal minor {d} on rows {rows:?}")));
        }
        let mut kd = KaehlerData {
            n,
            a,
            b,
            r,
            s,
            g,
            certificate: KaehlerCertificate { principal_minors: minors, grid_points: 0, grid_minimum: Rational::zero() },
        };
        let units: Vec<C> = [-1i64, 0, 1]
            .iter()
            .flat_map(|&x| [-1i64, 0, 1].map(|y| GaussianRational::new(Rational::from_int(x), Rational::from_int(y))))
            .collect();
        let mut min: Option<Rational> = None;
        let mut count = 0;
        let mut z = vec![C::zero(); n];
        let mut idx = vec![0usize; n];
        loop {
            for (zk, &i) in z.iter_mut().zip(&idx) {
                *zk = units[i].clone();
            }
            let v = kd.quadratic(&z);
            if !v.im.is_zero() {
                return Err(Error::Invariant("z̄gz is not real".into()));
            }
            if min.as_ref().is_none_or(|m| v.re < *m) {
                min = Some(v.re.clone());
            }
            count += 1;
            let Some(pos) = idx.iter().position(|&i| i + 1 < units.len()) else { break };
            idx[pos] += 1;
            idx[..pos].iter_mut().for_each(|i| *i = 0);
        }
        let min = min.unwrap_or_default();
        if min.signum() < 0 {
            return Err(Error::Certificate(format!("z̄gz takes the negative value {min}")));
        }
        kd.certificate.grid_points = count;
        kd.certificate.grid_minimum = min;
        Ok(kd)
    }

    /// Also checks that the given `r` has the `A`/`B` block form.
    pub fn with_r(a: Matrix<Rational>, b: Matrix<Rational>, r: &MultiVector) -> Result<Self> {
        let kd = Self::new(a, b)?;
        if &kd.r != r {
            return Err(Error::Certificate("r does not decompose into the given A and B blocks".into()));
        }
        Ok(kd)
    }

    pub fn r_from(a: &Matrix<Rational>, b: &Matrix<Rational>) -> MultiVector {
        let n = a.len();
        let mut m = crate::linalg::zeros::<Rational>(2 * n, 2 * n);
        for k in 0..n {
            for l in 0..n {
                m[k][n + l] = a[k][l].clone();
                m[n + l][k] = a[k][l].neg();
                m[k][l] = b[k][l].clone();
                m[n + k][n + l] = b[k][l].clone();
            }
        }
        MultiVector::from_matrix(&m)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn a(&self) -> &Matrix<Rational> {
        &self.a
    }

    pub fn b(&self) -> &Matrix<Rational> {
        &self.b
    }

    pub fn r(&self) -> &MultiVector {
        &self.r
    }

    pub fn s(&self) -> &Matrix<Rational> {
        &self.s
    }

    pub fn g(&self) -> &Matrix<C> {
        &self.g
    }

    pub fn certificate(&self) -> &KaehlerCertificate {
        &self.certificate
    }

    /// `z̄_k g^{kl} z_l`.
    pub fn quadratic(&self, z: &[C]) -> C {
        let mut acc = C::zero();
        for k in 0..self.n {
            for l in 0..self.n {
                acc = acc.add(&z[k].conj().mul(&self.g[k][l]).mul(&z[l]));
            }
        }
        acc
    }

    /// `g^{k₁l₁}⋯g^{kₘlₘ}`.
    fn g_product(&self, ks: &[usize], ls: &[usize]) -> C {
        ks.iter().zip(ls).fold(C::one(), |acc, (&k, &l)| acc.mul(&self.g[k][l]))
    }

    fn is_positive_diagonal(&self) -> bool {
        (0..self.n).all(|k| {
            (0..self.n).all(|l| if k == l { self.g[k][k].im.is_zero() && self.g[k][k].re.signum() > 0 } else { self.g[k][l].is_zero() })
        })
    }

    /// `i_s(Z_k) = ½(∂_{e_k} - i∂_{f_k})`, or `i_s(Z̄_k)` with the other sign.
    pub fn z_derivative<E: crate::scalar::Coef<Field = C>>(&self, a: &WeylElement<E>, k: usize, bar: bool) -> WeylElement<E> {
        let half = c(Rational::new(1, 2));
        let im = if bar { ci().mul(&half) } else { ci().mul(&half).neg() };
        partial(a, k).scale(&half).add(&partial(a, self.n + k).scale(&im)).expect("same caps")
    }

    fn z_multi<E: crate::scalar::Coef<Field = C>>(&self, a: &WeylElement<E>, ks: &[usize], bar: bool) -> WeylElement<E> {
        ks.iter().fold(a.clone(), |acc, &k| self.z_derivative(&acc, k, bar))
    }
}

/// `∂/∂x_j` on the symmetric factor.
fn partial<E: crate::scalar::Coef>(a: &WeylElement<E>, j: usize) -> WeylElement<E> {
    let mut out = WeylElement::zero(a.dim, a.caps);
    for (k, v) in a.terms() {
        let e = k.sym[j];
        if e == 0 {
            continue;
        }
        let mut k2 = *k;
        k2.sym[j] -= 1;
        out.add_term(k2, &v.scale(&<E::Field as Scalar>::from_int(e as i64)));
    }
    out
}

/// All multi-indices in `[0, n)^m`.
fn multi_indices(n: usize, m: usize) -> Vec<Vec<usize>> {
    (0..m).fold(vec![Vec::new()], |acc, _| {
        acc.into_iter().flat_map(|v| (0..n).map(move |k| [v.clone(), vec![k]].concat())).collect()
    })
}

/// Fedosov context with the Wick product for the Kähler data; `opts`
/// supplies the order, `Ω` and the connection.
pub fn wick_context(
    kd: &KaehlerData,
    lie: Arc<LieAlgebra>,
    mut opts: ContextOptions,
) -> Result<FedosovContext<C>> {
    if lie.dim() != 2 * kd.n {
        return Err(Error::Config(format!("Kähler data needs a {}-dimensional Lie algebra", 2 * kd.n)));
    }
    opts.variant = Variant::Wick;
    opts.s = Some(kd.s.clone());
    FedosovContext::new(lie, &kd.r, opts).map_err(|e| match e {
        Error::Precondition(m) => Error::Certificate(m),
        other => other,
    })
}

/// `μ ∘ exp(2t g^{kl} i_s(Z_k) ⊗ i_s(Z̄_l))`, computed without the fiber
/// product machinery.
pub fn wick_form_mul<A>(kd: &KaehlerData, alg: &A, a: &WeylElement<A::Elem>, b: &WeylElement<A::Elem>) -> Result<WeylElement<A::Elem>>
where
    A: CoefAlgebra,
    A::Elem: crate::scalar::Coef<Field = C>,
{
    let mut out = a.undeformed_mul(alg, b)?;
    let mut pairs = vec![(a.clone(), b.clone())];
    for m in 1..=a.caps.t {
        let mut next = Vec::new();
        for (x, y) in &pairs {
            for k in 0..kd.n {
                let zx = kd.z_derivative(x, k, false);
                if zx.is_zero() {
                    continue;
                }
                for l in 0..kd.n {
                    if kd.g[k][l].is_zero() {
                        continue;
                    }
                    let zy = kd.z_derivative(y, l, true);
                    if !zy.is_zero() {
                        next.push((zx.scale(&kd.g[k][l]), zy));
                    }
                }
            }
        }
        if next.is_empty() {
            break;
        }
        let w = c(Rational::from_int(2).pow(m as u32).mul(&factorial(m as u32).inv().expect("nonzero")));
        for (x, y) in &next {
            out.add_assign(&x.undeformed_mul(alg, y)?.shift_t(m).scale(&w));
        }
        pairs = next;
    }
    Ok(out)
}

/// `t* = λ t` with `λ = -ħ/ħ̄`: `ħt` is imaginary.
pub fn t_conjugation(ctx: &FedosovContext<C>) -> Result<i64> {
    let h = ctx.product().hbar();
    let l = h.neg().mul(&h.conj().inv().expect("ħ ≠ 0"));
    if l == C::one() {
        Ok(1)
    } else if l == C::one().neg() {
        Ok(-1)
    } else {
        Err(Error::Config("ħ must be real or imaginary".into()))
    }
}

/// `ξ₁ ⊗ ⋯ ⊗ ξₖ ↦ ξ̄ₖ ⊗ ⋯ ⊗ ξ̄₁` with `ξ̄` the conjugation fixing the real
/// form of `U(g)`: the involution of `T•(U_ℂ(g))` for which the left
/// multiplication action of `g` satisfies `(X ▷ a)* = X ▷ a*`.
pub fn tensor_involution(a: &TensorUea<C>) -> TensorUea<C> {
    let mut out = TensorUea::zero();
    for (k, v) in &a.terms {
        let mut k2 = *k;
        let d = k.deg as usize;
        k2.slots[..d].reverse();
        out.add_term(k2, &v.conj());
    }
    out
}

fn lambda_pow(lambda: i64, k: usize) -> C {
    if lambda < 0 && k % 2 == 1 {
        C::one().neg()
    } else {
        C::one()
    }
}

/// `*` on Weyl elements: generators Hermitian, coefficients conjugated by
/// `conj`, `t ↦ λt`.
pub fn weyl_conj<E: crate::scalar::Coef>(a: &WeylElement<E>, lambda: i64, conj: impl Fn(&E) -> E) -> WeylElement<E>
where
    E::Field: From<C>,
{
    a.map_terms(|k, v| conj(v).scale(&lambda_pow(lambda, k.t as usize).into()))
}

fn conj_scalar_weyl(a: &WeylElement<C>, lambda: i64) -> WeylElement<C> {
    a.map_terms(|k, v| v.conj().mul(&lambda_pow(lambda, k.t as usize)))
}

fn conj_poly(p: &Poly<C>) -> Poly<C> {
    p.map_coeffs(C::conj)
}

fn conj_poly_series(p: &PolySeries<C>, lambda: i64) -> PolySeries<C> {
    let coeffs = p.coeffs().iter().enumerate().map(|(k, x)| conj_poly(x).scale(&lambda_pow(lambda, k))).collect();
    TruncatedSeries::from_coeffs(coeffs, p.cap())
}

/// Random polynomial with Gaussian-rational coefficients.
pub fn sample_complex_poly<R: Rng>(rng: &mut R, vars: usize, max_degree: usize, max_terms: usize) -> Poly<C> {
    let re = sample_poly(rng, vars, max_degree, max_terms).map_coeffs(|x| c(x.clone()));
    let im = sample_poly(rng, vars, max_degree, max_terms).map_coeffs(|x| c(x.clone()));
    re.add(&im.scale(&ci()))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HermitianReport {
    /// `t* = λ t`.
    pub t_conjugation: i64,
    pub rho_hermitian: bool,
    /// First component of `ϱ* - ϱ`, if any.
    pub rho_defect: Option<String>,
    pub curvature_hermitian: bool,
    pub operators_real: bool,
    /// `(a ∘ b)* = (-1)^{ab} b* ∘ a*` on random elements.
    pub fiber_hermitian: bool,
    /// `(a ⋆ b)* = b* ⋆ a*` on random polynomials, if a module algebra was given.
    pub star_hermitian: Option<bool>,
    pub twist_hermitian: bool,
    /// First order where `F* ≠ F` for [`tensor_involution`].
    pub twist_defect_order: Option<usize>,
    /// Same for the extension of `X* = -X` slotwise ([`Uea::star`]); left
    /// multiplication is not a `*`-action for it, so this may fail.
    pub hopf_star_defect_order: Option<usize>,
    pub samples: usize,
}

impl HermitianReport {
    pub fn passed(&self) -> bool {
        self.rho_hermitian
            && self.curvature_hermitian
            && self.operators_real
            && self.fiber_hermitian
            && self.star_hermitian != Some(false)
            && self.twist_hermitian
    }
}

/// Checks the reality statements: `ϱ* = ϱ`, `R* = R`, reality of `δ`,
/// `δ⁻¹`, `σ` and `D`, the Hermitian fiber product, `(a⋆b)* = b*⋆a*` and
/// `F* = F`.
pub fn hermitian_check(
    ctx: &FedosovContext<C>,
    spec: Option<&Arc<ModuleAlgebraSpec>>,
    samples: usize,
    seed: u64,
) -> Result<HermitianReport> {
    let lambda = t_conjugation(ctx)?;
    let n = ctx.dim();
    let caps = ctx.caps();
    let star = |a: &WeylElement<C>| conj_scalar_weyl(a, lambda);
    let rho = ctx.solve_rho()?;
    let diff = star(&rho.element).sub(&rho.element)?;
    let rho_defect = diff.terms().iter().next().map(|(k, v)| {
        format!("t^{} sym {:?} anti {:?}: {v}", k.t, &k.sym[..n], mask_indices(k.anti as u32))
    });
    let curvature_hermitian = &star(ctx.curvature()) == ctx.curvature();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let alg = Scalars::<C>::new();
    let mut operators_real = true;
    let mut fiber_hermitian = true;
    for _ in 0..samples {
        let da = rng.gen_range(0..=2);
        let db = rng.gen_range(0..=2);
        let a = sample_element(&mut rng, n, caps, 4, da);
        let b = sample_element(&mut rng, n, caps, 4, db);
        operators_real &= star(&a.delta()) == star(&a).delta()
            && star(&a.delta_inv()) == star(&a).delta_inv()
            && star(&a.sigma_part()) == star(&a).sigma_part()
            && star(&ctx.connection().covariant_d(&a)) == ctx.connection().covariant_d(&star(&a));
        let ab = ctx.product().mul(&alg, &a, &b)?;
        let ba = ctx.product().mul(&alg, &star(&b), &star(&a))?;
        let sign = if da * db % 2 == 1 { C::one().neg() } else { C::one() };
        fiber_hermitian &= star(&ab) == ba.scale(&sign);
    }

    let star_hermitian = match spec {
        None => None,
        Some(spec) => {
            let udf = FedosovUdf::new(ctx, spec.clone())?;
            let cap = spec.degree_cap() / 2;
            let mut ok = true;
            for _ in 0..samples {
                let a = sample_complex_poly(&mut rng, spec.variables(), cap.min(3), 3);
                let b = sample_complex_poly(&mut rng, spec.variables(), cap.min(3), 3);
                let lhs = conj_poly_series(&udf.product(&a, &b)?, lambda);
                let rhs = udf.product(&conj_poly(&b), &conj_poly(&a))?;
                ok &= lhs == rhs;
            }
            Some(ok)
        }
    };

    let uea = Uea::new(ctx.lie().clone());
    let f = crate::twist::compute_twist(ctx)?;
    let defect = |inv: &dyn Fn(&TensorUea<C>) -> TensorUea<C>| {
        f.value.coeffs().iter().enumerate().find(|(k, fk)| inv(fk).scale(&lambda_pow(lambda, *k)) != **fk).map(|(k, _)| k)
    };
    let twist_defect_order = defect(&tensor_involution);
    let hopf_star_defect_order = defect(&|x| uea.star(x));
    Ok(HermitianReport {
        t_conjugation: lambda,
        rho_hermitian: rho_defect.is_none(),
        rho_defect,
        curvature_hermitian,
        operators_real,
        fiber_hermitian,
        star_hermitian,
        twist_hermitian: twist_defect_order.is_none(),
        twist_defect_order,
        hopf_star_defect_order,
        samples,
    })
}

fn require_wick(ctx: &FedosovContext<C>, kd: &KaehlerData) -> Result<()> {
    if ctx.variant() != Variant::Wick || ctx.s() != Some(&kd.s) || ctx.rmatrix().r != kd.r {
        return Err(Error::Config("expected the Wick context of the given Kähler data".into()));
    }
    Ok(())
}

/// `a_{k₁…kₘ} = σ(i_s(Z̄_{k₁})⋯i_s(Z̄_{kₘ}) τ(a))` for all multi-indices.
pub fn holomorphic_coefficients(
    kd: &KaehlerData,
    tau: &WeylElement<Poly<C>>,
    m: usize,
) -> Vec<(Vec<usize>, PolySeries<C>)> {
    multi_indices(kd.n, m).into_iter().map(|ks| (ks.clone(), kd.z_multi(tau, &ks, true).sigma())).collect()
}

fn series_mul(a: &PolySeries<C>, b: &PolySeries<C>) -> PolySeries<C> {
    a.mul_with(b, |x, y| x.mul(y)).expect("matching caps")
}

fn shift_scale(a: &PolySeries<C>, m: usize, w: &C) -> PolySeries<C> {
    let cap = a.cap();
    let mut out = PolySeries::zero(cap);
    for k in 0..=cap.saturating_sub(m) {
        if m + k <= cap {
            *out.coeff_mut(m + k) = a.coeff(k).scale(w);
        }
    }
    out
}

fn weight(m: usize) -> C {
    c(Rational::from_int(2).pow(m as u32).mul(&factorial(m as u32).inv().expect("nonzero")))
}

#[derive(Clone, Debug, PartialEq)]
pub struct AstarAReport {
    pub order: usize,
    pub lhs: PolySeries<C>,
    pub rhs: PolySeries<C>,
    /// Contribution of each `m` to the right-hand side.
    pub terms: Vec<PolySeries<C>>,
}

impl AstarAReport {
    pub fn holds(&self) -> bool {
        self.lhs == self.rhs
    }

    pub fn to_json(&self, vars: usize) -> Value {
        json!({
            "order": self.order,
            "holds": self.holds(),
            "lhs": crate::udf::series_json(&self.lhs, vars),
            "rhs": crate::udf::series_json(&self.rhs, vars),
            "terms": self.terms.iter().map(|t| crate::udf::series_json(t, vars)).collect::<Vec<_>>(),
        })
    }
}

/// Both sides of `a* ⋆ a = Σ_m (2t)^m/m! Σ g^{k₁l₁}⋯g^{kₘlₘ} a*_{k…} a_{l…}`.
pub fn wick_positivity_identity(
    ctx: &FedosovContext<C>,
    kd: &KaehlerData,
    spec: &Arc<ModuleAlgebraSpec>,
    a: &Poly<C>,
) -> Result<AstarAReport> {
    require_wick(ctx, kd)?;
    let udf = FedosovUdf::new(ctx, spec.clone())?;
    let lhs = udf.product(&conj_poly(a), a)?;
    let tau = udf.taylor(a)?;
    let n = ctx.order();
    let mut rhs = PolySeries::zero(n);
    let mut terms = Vec::new();
    for m in 0..=n {
        let coeffs = holomorphic_coefficients(kd, &tau, m);
        let mut acc = PolySeries::zero(n);
        for (ks, ak) in &coeffs {
            let ak_star = conj_poly_series(ak, 1);
            for (ls, al) in &coeffs {
                let g = kd.g_product(ks, ls);
                if g.is_zero() {
                    continue;
                }
                acc = acc.add(&series_mul(&ak_star, al).scale(&g))?;
            }
        }
        let term = shift_scale(&acc, m, &weight(m));
        rhs = rhs.add(&term)?;
        terms.push(term);
    }
    Ok(AstarAReport { order: n, lhs, rhs, terms })
}

/// `ω(a) = Σ_p w_p a(p)` with nonnegative weights: positive on the
/// undeformed algebra because `ω(a*a) = Σ w_p |a(p)|²`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PositiveFunctionalSpec {
    pub points: Vec<(Rational, Vec<Rational>)>,
}

impl PositiveFunctionalSpec {
    pub fn new(points: Vec<(Rational, Vec<Rational>)>, vars: usize) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Config("a functional needs at least one evaluation point".into()));
        }
        for (i, (w, p)) in points.iter().enumerate() {
            if w.signum() < 0 {
                return Err(Error::Precondition(format!("weight {} is negative", i + 1)));
            }
            if p.len() != vars {
                return Err(Error::Config(format!("point {} must have {vars} coordinates", i + 1)));
            }
        }
        Ok(PositiveFunctionalSpec { points })
    }

    pub fn origin(vars: usize) -> Self {
        PositiveFunctionalSpec { points: vec![(Rational::one(), vec![Rational::zero(); vars])] }
    }

    fn point(&self, i: usize) -> Vec<C> {
        self.points[i].1.iter().map(|x| c(x.clone())).collect()
    }

    pub fn eval(&self, p: &Poly<C>) -> C {
        let mut acc = C::zero();
        for (i, (w, _)) in self.points.iter().enumerate() {
            acc = acc.add(&p.eval(&self.point(i)).mul(&c(w.clone())));
        }
        acc
    }

    /// `ω(a*a) ≥ 0` on the samples.
    pub fn spot_check(&self, samples: &[Poly<C>]) -> bool {
        samples.iter().all(|a| {
            let v = self.eval(&conj_poly(a).mul(a));
            v.im.is_zero() && v.re.signum() >= 0
        })
    }
}

/// One summand `w_p (2t)^m/m! v̄ g^{⊗m} v` with `v_K = a_K(p)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CertificateTerm {
    pub m: usize,
    pub point: usize,
    pub weight: Rational,
    /// `v_K` per multi-index, as `t`-coefficients.
    pub vector: Vec<(Vec<usize>, Vec<String>)>,
    /// `v̄ g^{⊗m} v` per `t`-order.
    pub quadratic: Vec<Rational>,
    pub leading_nonnegative: bool,
    /// For positive diagonal `g`: `v̄ g^{⊗m} v = Σ_K λ_K |v_K|²` checked.
    pub sum_of_squares: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampleProbe {
    pub sample: usize,
    /// `ω(a* ⋆ a)` per `t`-order.
    pub value: Vec<Rational>,
    pub real: bool,
    pub leading_order: Option<usize>,
    pub leading_nonnegative: bool,
    pub all_coefficients_nonnegative: bool,
    pub decomposition_matches: bool,
    pub terms: Vec<CertificateTerm>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbeReport {
    pub order: usize,
    pub functional_positive_on_samples: bool,
    pub kaehler: KaehlerCertificate,
    pub samples: Vec<SampleProbe>,
}

impl ProbeReport {
    pub fn passed(&self) -> bool {
        self.functional_positive_on_samples
            && self.samples.iter().all(|s| {
                s.real
                    && s.leading_nonnegative
                    && s.decomposition_matches
                    && s.terms.iter().all(|t| t.leading_nonnegative && t.sum_of_squares != Some(false))
            })
    }
}

fn real_parts(v: &[C]) -> Option<Vec<Rational>> {
    v.iter().map(|x| x.im.is_zero().then(|| x.re.clone())).collect()
}

/// Evaluates `ω(a* ⋆ a)` and its `g^{⊗m}`-weighted decomposition.
pub fn positivity_probe(
    ctx: &FedosovContext<C>,
    kd: &KaehlerData,
    spec: &Arc<ModuleAlgebraSpec>,
    functional: &PositiveFunctionalSpec,
    samples: &[Poly<C>],
) -> Result<ProbeReport> {
    require_wick(ctx, kd)?;
    if functional.points.iter().any(|(_, p)| p.len() != spec.variables()) {
        return Err(Error::Config("functional points do not match the number of variables".into()));
    }
    let udf = FedosovUdf::new(ctx, spec.clone())?;
    let n = ctx.order();
    let diagonal = kd.is_positive_diagonal();
    let mut out = Vec::new();
    for (si, a) in samples.iter().enumerate() {
        let lhs = udf.product(&conj_poly(a), a)?;
        let value: Vec<C> = lhs.coeffs().iter().map(|p| functional.eval(p)).collect();
        let tau = udf.taylor(a)?;
        let mut total = vec![C::zero(); n + 1];
        let mut terms = Vec::new();
        for m in 0..=n {
            let coeffs = holomorphic_coefficients(kd, &tau, m);
            for (pi, (w, _)) in functional.points.iter().enumerate() {
                let point = functional.point(pi);
                let v: Vec<(Vec<usize>, Vec<C>)> =
                    coeffs.iter().map(|(ks, s)| (ks.clone(), s.coeffs().iter().map(|p| p.eval(&point)).collect())).collect();
                let mut q = vec![C::zero(); n + 1];
                for (ks, vk) in &v {
                    for (ls, vl) in &v {
                        let g = kd.g_product(ks, ls);
                        if g.is_zero() {
                            continue;
                        }
                        for (i, x) in vk.iter().enumerate() {
                            for (j, y) in vl.iter().enumerate().take(n + 1 - i) {
                                q[i + j] = q[i + j].add(&x.conj().mul(&g).mul(y));
                            }
                        }
                    }
                }
                let sum_of_squares = diagonal.then(|| {
                    let mut sq = vec![C::zero(); n + 1];
                    for (ks, vk) in &v {
                        let lam = kd.g_product(ks, ks);
                        for (i, x) in vk.iter().enumerate() {
                            for (j, y) in vk.iter().enumerate().take(n + 1 - i) {
                                sq[i + j] = sq[i + j].add(&x.conj().mul(&lam).mul(y));
                            }
                        }
                    }
                    sq == q
                });
                let scale = weight(m).mul(&c(w.clone()));
                for k in 0..=n.saturating_sub(m) {
                    total[m + k] = total[m + k].add(&q[k].mul(&scale));
                }
                let quadratic = real_parts(&q)
                    .ok_or_else(|| Error::Invariant("v̄ g v has an imaginary part".into()))?;
                let leading_nonnegative = quadratic.iter().find(|x| !x.is_zero()).is_none_or(|x| x.signum() > 0);
                terms.push(CertificateTerm {
                    m,
                    point: pi,
                    weight: w.clone(),
                    vector: v.iter().map(|(ks, vk)| (ks.iter().map(|k| k + 1).collect(), vk.iter().map(C::to_string).collect())).collect(),
                    quadratic,
                    leading_nonnegative,
                    sum_of_squares,
                });
            }
        }
        let re = real_parts(&value);
        let real = re.is_some();
        let re = re.unwrap_or_else(|| value.iter().map(|x| x.re.clone()).collect());
        let leading_order = re.iter().position(|x| !x.is_zero());
        out.push(SampleProbe {
            sample: si,
            leading_nonnegative: leading_order.is_none_or(|k| re[k].signum() > 0),
            all_coefficients_nonnegative: re.iter().all(|x| x.signum() >= 0),
            decomposition_matches: total == value,
            value: re,
            real,
            leading_order,
            terms,
        });
    }
    Ok(ProbeReport {
        order: n,
        functional_positive_on_samples: functional.spot_check(samples),
        kaehler: kd.certificate.clone(),
        samples: out,
    })
}

/// `F = Σ_m (2t)^m/m! g^{KL} a_K* ⊗ a_L` with `a_K = σ(Z̄_K τ(1))` in
/// `U(g)[[t]]`: the Wick twist as a series of `g^{⊗m}`-weighted products.
pub fn wick_twist_decomposition(ctx: &FedosovContext<C>, kd: &KaehlerData) -> Result<bool> {
    require_wick(ctx, kd)?;
    let uea = Arc::new(Uea::new(ctx.lie().clone()));
    let caps = Caps::for_sections(ctx.order());
    let tau = crate::udf::taylor_of_one(ctx, caps)?;
    let n = ctx.order();
    let f = crate::twist::compute_twist_with(ctx, &uea)?;
    let mut sum = TruncatedSeries::<TensorUea<C>>::zero(n);
    for m in 0..=n {
        let coeffs: Vec<(Vec<usize>, TruncatedSeries<TensorUea<C>>)> = multi_indices(kd.n, m)
            .into_iter()
            .map(|ks| (ks.clone(), kd.z_multi(&tau, &ks, true).sigma()))
            .collect();
        for (ks, ak) in &coeffs {
            let ak_star = crate::twist::series_map(ak, |x| Ok(tensor_involution(x)))?;
            for (ls, al) in &coeffs {
                let g = kd.g_product(ks, ls);
                if g.is_zero() {
                    continue;
                }
                let prod = crate::twist::series_concat(&ak_star, al)?;
                for k in 0..=n.saturating_sub(m) {
                    crate::scalar::Coef::add_assign(sum.coeff_mut(m + k), &prod.coeff(k).scale(&g.mul(&weight(m))));
                }
            }
        }
    }
    Ok(sum == f.value)
}

pub mod examples {
    use super::*;

    /// `A = [1]`, `B = [0]` on the abelian plane: `r = e∧f`, `s = 1`.
    pub fn plane() -> KaehlerData {
        KaehlerData::new(vec![vec![Rational::one()]], vec![vec![Rational::zero()]]).expect("valid Kähler data")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::{catalog, Form};

    fn q(n: i64) -> Rational {
        Rational::from_int(n)
    }

    fn plane_ctx(order: usize) -> (KaehlerData, FedosovContext<C>, Arc<ModuleAlgebraSpec>) {
        let kd = examples::plane();
        let e = catalog::abelian2();
        let ctx = wick_context(&kd, e.lie.clone(), ContextOptions::new(order)).unwrap();
        let spec = Arc::new(crate::udf::examples::translations(&e.lie, 8).unwrap());
        (kd, ctx, spec)
    }

    #[test]
    fn kaehler_blocks() {
        let kd = examples::plane();
        assert_eq!(kd.r(), &catalog::abelian2().r);
        assert_eq!(kd.s(), &vec![vec![q(1), q(0)], vec![q(0), q(1)]]);
        assert_eq!(kd.g(), &vec![vec![C::one()]]);
        assert_eq!(kd.certificate().grid_points, 9);
        assert!(matches!(
            KaehlerData::new(vec![vec![q(1), q(0)], vec![q(0), q(1)]], vec![vec![q(0), q(1)], vec![q(1), q(0)]]),
            Err(Error::Certificate(_))
        ));
        assert!(matches!(KaehlerData::new(vec![vec![q(-1)]], vec![vec![q(0)]]), Err(Error::Certificate(_))));
        // B ≠ 0 but g = [[2, i], [-i, 2]] still positive
        let kd = KaehlerData::new(vec![vec![q(2), q(0)], vec![q(0), q(2)]], vec![vec![q(0), q(1)], vec![q(-1), q(0)]]).unwrap();
        assert_eq!(kd.certificate().grid_minimum, q(0));
    }

    #[test]
    fn wick_form_matches_fiber_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let alg = Scalars::<C>::new();
        let kds = [
            examples::plane(),
            KaehlerData::new(vec![vec![q(2), q(1)], vec![q(1), q(3)]], vec![vec![q(0), q(1)], vec![q(-1), q(0)]]).unwrap(),
        ];
        for kd in kds {
            let dim = 2 * kd.n();
            let (m, hbar) = crate::fedosov::product_matrix::<C>(Variant::Wick, &kd.r().to_matrix(), Some(kd.s())).unwrap();
            let prod = crate::weyl::FiberProduct::new(m, hbar).unwrap();
            let caps = Caps::for_order(3);
            for _ in 0..10 {
                let da = rng.gen_range(0..2);
                let a = sample_element(&mut rng, dim, caps, 4, da);
                let db = rng.gen_range(0..2);
                let b = sample_element(&mut rng, dim, caps, 4, db);
                assert_eq!(prod.mul(&alg, &a, &b).unwrap(), wick_form_mul(&kd, &alg, &a, &b).unwrap());
            }
        }
    }

    #[test]
    fn plane_is_hermitian() {
        let (_, ctx, spec) = plane_ctx(3);
        let rep = hermitian_check(&ctx, Some(&spec), 6, 1).unwrap();
        assert_eq!(rep.t_conjugation, 1);
        assert!(rep.passed(), "{rep:?}");
    }

    #[test]
    fn ax_plus_b_without_s_is_hermitian() {
        let e = catalog::ax_plus_b();
        let spec = Arc::new(crate::udf::examples::affine_line(&e.lie, 8).unwrap());
        // t is real for the Weyl product, so a real tΩ₁ would not be Hermitian there
        for (variant, omega) in [(Variant::Wick, vec![Form::pair(2, 0, 1, q(1))]), (Variant::Weyl, vec![])] {
            let mut o = ContextOptions::new(3);
            o.variant = variant;
            o.omega = omega;
            let ctx = FedosovContext::<C>::new(e.lie.clone(), &e.r, o).unwrap();
            let rep = hermitian_check(&ctx, Some(&spec), 4, 2).unwrap();
            assert!(rep.passed(), "{variant:?}: {rep:?}");
            assert_eq!(rep.hopf_star_defect_order, Some(2));
        }
    }

    #[test]
    fn imaginary_omega_breaks_hermiticity() {
        let e = catalog::ax_plus_b();
        let mut o = ContextOptions::new(2);
        o.variant = Variant::Wick;
        o.omega_imaginary = vec![Form::pair(2, 0, 1, q(1))];
        let ctx = FedosovContext::<C>::new(e.lie.clone(), &e.r, o).unwrap();
        let rep = hermitian_check(&ctx, None, 2, 3).unwrap();
        assert!(!rep.rho_hermitian);
        assert!(rep.rho_defect.is_some());
    }

    #[test]
    fn astara_on_the_plane() {
        let (kd, ctx, spec) = plane_ctx(3);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let unit = wick_positivity_identity(&ctx, &kd, &spec, &Poly::one()).unwrap();
        assert!(unit.holds());
        assert_eq!(unit.lhs.coeff(0), &Poly::one());
        for _ in 0..5 {
            let a = sample_complex_poly(&mut rng, 2, 3, 3);
            let rep = wick_positivity_identity(&ctx, &kd, &spec, &a).unwrap();
            assert!(rep.holds());
        }
        // a = x1 - i x2: a_1 = 1, so the m = 1 term is 2t g^{11}
        let a = Poly::var(0).sub(&Poly::var(1).scale(&ci()));
        let rep = wick_positivity_identity(&ctx, &kd, &spec, &a).unwrap();
        assert_eq!(rep.terms[1].coeff(1), &Poly::constant(c(q(2))));
        assert!(rep.terms[2].is_zero());
    }

    #[test]
    fn probe_at_the_origin() {
        let (kd, ctx, spec) = plane_ctx(3);
        let a = Poly::var(0).sub(&Poly::var(1).scale(&ci()));
        let rep = positivity_probe(&ctx, &kd, &spec, &PositiveFunctionalSpec::origin(2), &[a]).unwrap();
        assert!(rep.passed());
        assert_eq!(rep.samples[0].value, vec![q(0), q(2), q(0), q(0)]);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let samples: Vec<_> = (0..4).map(|_| sample_complex_poly(&mut rng, 2, 2, 3)).collect();
        let f = PositiveFunctionalSpec::new(vec![(q(1), vec![q(1), q(-2)]), (Rational::new(1, 2), vec![q(0), q(3)])], 2).unwrap();
        let rep = positivity_probe(&ctx, &kd, &spec, &f, &samples).unwrap();
        assert!(rep.passed());
        assert!(rep.samples.iter().all(|s| s.all_coefficients_nonnegative));
    }

    #[test]
    fn wick_twist_is_weighted_sum() {
        let (kd, ctx, _) = plane_ctx(3);
        assert!(wick_twist_decomposition(&ctx, &kd).unwrap());
    }
}
