//! Fedosov's recursion for `ϱ`, the extended Fedosov derivation, its
//! homotopy, and the Taylor series of flat sections.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::connection::{hess_connection, Connection};
use crate::error::{Error, Result};
use crate::lie::{ce_differential, invert_r, Form, LieAlgebra, MultiVector, RMatrix};
use crate::linalg::Matrix;
use crate::scalar::{Coef, Rational, Scalar, TruncatedSeries};
use crate::weyl::{Caps, CoefAlgebra, FiberProduct, WKey, WeylElement};

/// Which fiberwise product drives the construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// `exp((t/2) 𝒫_π)` with `π = r + s`.
    Weyl,
    /// Hermitian product `exp((t/2) 𝒫_{s + i r})`, commutators over `i t`.
    Wick,
}

/// Inputs besides the Lie algebra and `r`.
#[derive(Clone, Debug)]
pub struct ContextOptions {
    pub variant: Variant,
    /// Symmetric part `s^{ij}`; must be parallel for the connection.
    pub s: Option<Matrix<Rational>>,
    /// `Ω_1, Ω_2, …`: coefficient of `t^k` is `omega[k-1]`.
    pub omega: Vec<Form>,
    /// Imaginary parts: `Ω_k + i·omega_imaginary[k-1]`; complex scalars only.
    pub omega_imaginary: Vec<Form>,
    pub order: usize,
    /// Defaults to the Hess connection.
    pub connection: Option<Connection>,
}

impl ContextOptions {
    pub fn new(order: usize) -> Self {
        ContextOptions { variant: Variant::Weyl, s: None, omega: Vec::new(), omega_imaginary: Vec::new(), order, connection: None }
    }
}

/// Everything the recursions need, validated once.
pub struct FedosovContext<S: Scalar> {
    lie: Arc<LieAlgebra>,
    r: RMatrix,
    connection: Connection,
    s: Option<Matrix<Rational>>,
    variant: Variant,
    omega: Vec<Form>,
    omega_im: Vec<Form>,
    order: usize,
    product: FiberProduct<S>,
    curvature: WeylElement<S>,
}

/// The effective product matrix and `ħ` for a variant.
pub fn product_matrix<S: Scalar>(
    variant: Variant,
    r: &Matrix<Rational>,
    s: Option<&Matrix<Rational>>,
) -> Result<(Matrix<S>, S)> {
    let n = r.len();
    let sv = |i: usize, j: usize| s.map_or_else(Rational::zero, |m| m[i][j].clone());
    match variant {
        Variant::Weyl => {
            let m = (0..n).map(|i| (0..n).map(|j| S::from_rational(&r[i][j].add(&sv(i, j)))).collect()).collect();
            Ok((m, S::one()))
        }
        Variant::Wick => {
            let i_unit =
                S::imag_unit().ok_or_else(|| Error::Config("the Wick variant needs complex scalars".into()))?;
            let m = (0..n)
                .map(|a| {
                    (0..n)
                        .map(|b| S::from_rational(&sv(a, b)).add(&i_unit.mul(&S::from_rational(&r[a][b]))))
                        .collect()
                })
                .collect();
            Ok((m, i_unit))
        }
    }
}

impl<S: Scalar + Coef<Field = S>> FedosovContext<S> {
    pub fn new(lie: Arc<LieAlgebra>, r: &MultiVector, opts: ContextOptions) -> Result<Self> {
        let n = lie.dim();
        if r.dim() != n {
            return Err(Error::Config(format!("r lives in dimension {}, the Lie algebra in {n}", r.dim())));
        }
        let rd = invert_r(r)?;
        let connection = match opts.connection {
            Some(c) => {
                if c.dim() != n || c.lie().as_ref() != lie.as_ref() {
                    return Err(Error::Config("connection belongs to a different Lie algebra".into()));
                }
                c.check_torsion_free().map_err(|d| Error::Certificate(d.to_string()))?;
                c.check_symplectic(&rd.omega).map_err(|d| Error::Certificate(d.to_string()))?;
                c
            }
            None => hess_connection(&lie, &rd)?,
        };
        if let Some(s) = &opts.s {
            if s.len() != n || s.iter().any(|row| row.len() != n) {
                return Err(Error::Config(format!("s must be {n}×{n}")));
            }
            for i in 0..n {
                for j in 0..i {
                    if s[i][j] != s[j][i] {
                        return Err(Error::Precondition(format!("s is not symmetric at ({}, {})", i + 1, j + 1)));
                    }
                }
            }
            connection
                .check_covariantly_constant(s)
                .map_err(|d| Error::Precondition(format!("s is not parallel: {d}")))?;
        }
        if opts.omega.len().max(opts.omega_imaginary.len()) > opts.order {
            return Err(Error::Config(format!(
                "Ω has {} coefficients but the order is {}",
                opts.omega.len().max(opts.omega_imaginary.len()),
                opts.order
            )));
        }
        if opts.omega_imaginary.iter().any(|o| !o.is_zero()) && S::imag_unit().is_none() {
            return Err(Error::Config("an imaginary Ω needs complex scalars".into()));
        }
        let labelled = opts.omega.iter().enumerate().map(|(k, o)| (k, "", o));
        let labelled = labelled.chain(opts.omega_imaginary.iter().enumerate().map(|(k, o)| (k, "Im ", o)));
        for (k, part, om) in labelled {
            if om.dim() != n || om.degree() != 2 {
                return Err(Error::Config(format!("{part}Ω_{} must be a two-form on a {n}-dimensional algebra", k + 1)));
            }
            if !ce_differential(&lie, om).is_zero() {
                return Err(Error::Precondition(format!("{part}Ω_{} is not δ_CE-closed", k + 1)));
            }
        }
        if opts.order == 0 || opts.order > 12 {
            return Err(Error::Config("order must lie in 1..=12".into()));
        }
        let (m, hbar) = product_matrix::<S>(opts.variant, &rd.r_matrix, opts.s.as_ref())?;
        let product = FiberProduct::new(m, hbar)?;
        let caps = Caps::for_order(opts.order);
        let curvature = connection.curvature(&rd.omega, caps);
        let mut omega = opts.omega;
        omega.resize(opts.order, Form::zero(n, 2));
        let mut omega_im = opts.omega_imaginary;
        omega_im.resize(opts.order, Form::zero(n, 2));
        Ok(FedosovContext {
            lie,
            r: rd,
            connection,
            s: opts.s,
            variant: opts.variant,
            omega,
            omega_im,
            order: opts.order,
            product,
            curvature,
        })
    }

    pub fn lie(&self) -> &Arc<LieAlgebra> {
        &self.lie
    }

    pub fn dim(&self) -> usize {
        self.lie.dim()
    }

    pub fn rmatrix(&self) -> &RMatrix {
        &self.r
    }

    pub fn connection(&self) -> &Connection {
        &self.connection
    }

    pub fn s(&self) -> Option<&Matrix<Rational>> {
        self.s.as_ref()
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn caps(&self) -> Caps {
        Caps::for_order(self.order)
    }

    pub fn product(&self) -> &FiberProduct<S> {
        &self.product
    }

    pub fn curvature(&self) -> &WeylElement<S> {
        &self.curvature
    }

    /// `Ω_k` for `k ≥ 1`.
    pub fn omega(&self, k: usize) -> &Form {
        &self.omega[k - 1]
    }

    pub fn omegas(&self) -> &[Form] {
        &self.omega
    }

    /// `Σ_k t^k Ω_k` as a Weyl element.
    pub fn omega_weyl(&self) -> WeylElement<S> {
        let mut out = WeylElement::zero(self.dim(), self.caps());
        for k in 1..=self.order {
            out.add_assign(&self.form_at(k));
        }
        out
    }

    /// Imaginary part of `Ω_k`.
    pub fn omega_imaginary(&self, k: usize) -> &Form {
        &self.omega_im[k - 1]
    }

    /// `t^k Ω_k`, the component `Ω^{(2k)}` of total degree `2k`.
    fn form_at(&self, k: usize) -> WeylElement<S> {
        let mut out = WeylElement::zero(self.dim(), self.caps());
        for (mask, c) in self.omega[k - 1].components() {
            out.add_term(WKey::new(k, crate::enveloping::UNIT, *mask as u8), &S::from_rational(c));
        }
        if let Some(i) = S::imag_unit() {
            for (mask, c) in self.omega_im[k - 1].components() {
                out.add_term(WKey::new(k, crate::enveloping::UNIT, *mask as u8), &i.mul(&S::from_rational(c)));
            }
        }
        out
    }

    /// Total-degree recursion: `ϱ^{(3)} = δ⁻¹(R + tΩ₁)` and
    /// `ϱ^{(d+1)} = δ⁻¹(Dϱ^{(d)} + (1/t) Σ ϱ^{(a)} ∘ ϱ^{(b)} + Ω^{(d)})`
    /// with `a + b = d + 2`.
    pub fn solve_rho(&self) -> Result<Rho<S>> {
        let caps = self.caps();
        let n = self.dim();
        let alg = crate::weyl::Scalars::<S>::new();
        // parts[d] = ϱ^{(d)}
        let mut parts: Vec<WeylElement<S>> = vec![WeylElement::zero(n, caps); caps.total + 1];
        for d in 2..caps.total {
            let mut rhs = WeylElement::zero(n, caps);
            if d == 2 {
                rhs.add_assign(&self.curvature);
            }
            rhs.add_assign(&self.connection.covariant_d(&parts[d]));
            // Σ_{a+b=d+2} ϱ^{(a)} ∘ ϱ^{(b)}: the pairs a < b combine into
            // anticommutators, which vanish at t^0 individually.
            for a in 3..=(d + 2) / 2 {
                let b = d + 2 - a;
                if parts[a].is_zero() || parts[b].is_zero() {
                    continue;
                }
                let term = if a == b {
                    self.product.mul_over_t(&alg, &parts[a], &parts[b])?
                } else {
                    self.product.ad_over_t(&alg, &parts[a], &parts[b])?
                };
                rhs.add_assign(&term);
            }
            if d % 2 == 0 && d / 2 <= self.order {
                rhs.add_assign(&self.form_at(d / 2));
            }
            parts[d + 1] = rhs.delta_inv();
        }
        let mut element = WeylElement::zero(n, caps);
        for p in &parts {
            element.add_assign(p);
        }
        Ok(Rho { element })
    }

    /// `δϱ - R - Dϱ - (1/t)ϱ∘ϱ - Ω`, exact below the top total degree.
    pub fn rho_residual(&self, rho: &Rho<S>) -> Result<WeylElement<S>> {
        let alg = crate::weyl::Scalars::<S>::new();
        let x = &rho.element;
        let rr = self.product.mul_over_t(&alg, x, x)?;
        let res = x
            .delta()
            .sub(&self.curvature)?
            .sub(&self.connection.covariant_d(x))?
            .sub(&rr)?
            .sub(&self.omega_weyl())?;
        let top = self.caps().total;
        Ok(res.filter(|k| k.total_degree() < top))
    }

    /// `𝒟_ϱ(-δϱ + R + Dϱ + (1/t)ϱ∘ϱ + Ω)` for an arbitrary odd `ϱ` of total
    /// degree at least 2; vanishes identically below the caps.
    pub fn bianchi_defect(&self, rho: &WeylElement<S>) -> Result<WeylElement<S>> {
        let alg = crate::weyl::Scalars::<S>::new();
        let curv = rho
            .delta()
            .neg()
            .add(&self.curvature)?
            .add(&self.connection.covariant_d(rho))?
            .add(&self.product.mul_over_t(&alg, rho, rho)?)?
            .add(&self.omega_weyl())?;
        let out = curv
            .delta()
            .neg()
            .add(&self.connection.covariant_d(&curv))?
            .add(&self.product.ad_over_t(&alg, rho, &curv)?)?;
        let top = self.caps().total;
        Ok(out.filter(|k| k.total_degree() + 2 < top))
    }

    /// Operators of the extended construction for coefficient algebra `alg`,
    /// with every element held at `caps`.
    pub fn extended<'a, A>(&'a self, alg: &'a A, rho: &Rho<S>, caps: Caps) -> Extended<'a, S, A>
    where
        A: CoefAlgebra,
        A::Elem: Coef<Field = S>,
    {
        let rho_a = rho.element.with_caps(caps).map_terms(|_, c| alg.lift(c));
        Extended { ctx: self, alg, rho: rho_a, caps }
    }
}

/// Fedosov's element `ϱ`: antisymmetric degree 1, total degree at least 3,
/// `δ⁻¹ϱ = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct Rho<S> {
    pub element: WeylElement<S>,
}

impl<S: Scalar + Coef<Field = S>> Rho<S> {
    pub fn is_zero(&self) -> bool {
        self.element.is_zero()
    }

    /// `ϱ^{(d)}` for each total degree present.
    pub fn components(&self) -> Vec<(usize, WeylElement<S>)> {
        let mut degrees: Vec<usize> = self.element.terms().keys().map(WKey::total_degree).collect();
        degrees.sort_unstable();
        degrees.dedup();
        degrees.into_iter().map(|d| (d, self.element.filter(|k| k.total_degree() == d))).collect()
    }

    pub fn component(&self, d: usize) -> WeylElement<S> {
        self.element.filter(|k| k.total_degree() == d)
    }
}

/// `𝒟_𝒜`, `τ_𝒜`, the homotopy and the star product for one coefficient
/// algebra.
pub struct Extended<'a, S: Scalar, A: CoefAlgebra> {
    ctx: &'a FedosovContext<S>,
    alg: &'a A,
    rho: WeylElement<A::Elem>,
    caps: Caps,
}

impl<'a, S, A> Extended<'a, S, A>
where
    S: Scalar + Coef<Field = S>,
    A: CoefAlgebra,
    A::Elem: Coef<Field = S>,
{
    pub fn caps(&self) -> Caps {
        self.caps
    }

    pub fn algebra(&self) -> &A {
        self.alg
    }

    pub fn context(&self) -> &FedosovContext<S> {
        self.ctx
    }

    /// `ξ ⊗ 1 ⊗ 1`.
    pub fn constant(&self, xi: &A::Elem) -> WeylElement<A::Elem> {
        WeylElement::constant(self.ctx.dim(), self.caps, xi.clone())
    }

    /// `L(ξ ⊗ f ⊗ α) = e_i ▷ ξ ⊗ f ⊗ e^i ∧ α`.
    pub fn l_op(&self, a: &WeylElement<A::Elem>) -> WeylElement<A::Elem> {
        let mut out = WeylElement::zero(a.dim, a.caps);
        for (k, c) in a.terms() {
            for i in 0..a.dim {
                let Some(sign) = crate::lie::wedge_sign(1 << i, k.anti as u32) else { continue };
                let acted = self.alg.act(i, c);
                if acted.is_zero() {
                    continue;
                }
                out.add_term(WKey { anti: k.anti | 1 << i, ..*k }, &acted.scale(&S::from_int(sign)));
            }
        }
        out
    }

    /// `D + L + (1/t) ad(ϱ)`.
    pub fn perturbation(&self, a: &WeylElement<A::Elem>) -> Result<WeylElement<A::Elem>> {
        let mut out = self.ctx.connection.covariant_d(a);
        out.add_assign(&self.l_op(a));
        if !self.rho.is_zero() && !a.is_zero() {
            out.add_assign(&self.ctx.product.ad_over_t(self.alg, &self.rho, a)?);
        }
        Ok(out)
    }

    /// `𝒟_𝒜 = -δ + D + L + (1/t) ad(ϱ)`.
    pub fn derivation(&self, a: &WeylElement<A::Elem>) -> Result<WeylElement<A::Elem>> {
        let mut out = self.perturbation(a)?;
        out = out.sub(&a.delta())?;
        Ok(out)
    }

    /// `[δ⁻¹, D + L + (1/t)ad(ϱ)] = δ⁻¹X + Xδ⁻¹` (both odd).
    pub fn homotopy_step(&self, a: &WeylElement<A::Elem>) -> Result<WeylElement<A::Elem>> {
        let first = self.perturbation(a)?.delta_inv();
        let second = self.perturbation(&a.delta_inv())?;
        first.add(&second)
    }

    /// `(id - [δ⁻¹, X])⁻¹ a`: the step raises the total degree, so the
    /// geometric series stops inside the caps.
    pub fn geometric(&self, a: &WeylElement<A::Elem>) -> Result<WeylElement<A::Elem>> {
        let mut out = a.clone();
        let mut term = a.clone();
        for _ in 0..=self.caps.total {
            term = self.homotopy_step(&term)?;
            if term.is_zero() {
                return Ok(out);
            }
            out.add_assign(&term);
        }
        if term.is_zero() {
            Ok(out)
        } else {
            Err(Error::Invariant("homotopy series did not terminate inside the caps".into()))
        }
    }

    /// `𝒟_𝒜⁻¹ = -δ⁻¹ (id - [δ⁻¹, X])⁻¹`, the sign matching `𝒟_𝒜 = -δ + …`.
    pub fn homotopy(&self, a: &WeylElement<A::Elem>) -> Result<WeylElement<A::Elem>> {
        Ok(self.geometric(a)?.delta_inv().neg())
    }

    /// `σ(a)` put back as a Weyl element.
    pub fn sigma_embed(&self, a: &WeylElement<A::Elem>) -> WeylElement<A::Elem> {
        a.sigma_part()
    }

    /// Fedosov–Taylor series `τ(ξ) = Σ_k [δ⁻¹, X]^k ξ`.
    pub fn taylor(&self, xi: &A::Elem) -> Result<WeylElement<A::Elem>> {
        self.geometric(&self.constant(xi))
    }

    /// `τ` of a `t`-series of coefficients.
    pub fn taylor_series(&self, xi: &TruncatedSeries<A::Elem>) -> Result<WeylElement<A::Elem>> {
        let mut base = WeylElement::zero(self.ctx.dim(), self.caps);
        for (k, c) in xi.coeffs().iter().enumerate() {
            base.add_term(WKey::new(k, crate::enveloping::UNIT, 0), c);
        }
        self.geometric(&base)
    }

    /// `σ(τ(ξ) ∘ τ(η))`.
    pub fn star(&self, xi: &A::Elem, eta: &A::Elem) -> Result<TruncatedSeries<A::Elem>> {
        let a = self.taylor(xi)?;
        let b = self.taylor(eta)?;
        self.ctx.product.sigma_mul(self.alg, &a, &b)
    }

    /// `σ(τ(ξ) ∘ τ(η))` for series arguments.
    pub fn star_series(
        &self,
        xi: &TruncatedSeries<A::Elem>,
        eta: &TruncatedSeries<A::Elem>,
    ) -> Result<TruncatedSeries<A::Elem>> {
        let a = self.taylor_series(xi)?;
        let b = self.taylor_series(eta)?;
        self.ctx.product.sigma_mul(self.alg, &a, &b)
    }

    /// The fiberwise product of the enlarged algebra.
    pub fn mul(&self, a: &WeylElement<A::Elem>, b: &WeylElement<A::Elem>) -> Result<WeylElement<A::Elem>> {
        self.ctx.product.mul(self.alg, a, b)
    }
}
