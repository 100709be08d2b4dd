//! Universal deformation formulas on polynomial algebras with affine
//! `g`-actions: `a ⋆_F b = μ(F ▷ (a ⊗ b))` and the direct Fedosov product.

use std::collections::{BTreeMap, HashMap};
use std::marker::PhantomData;
use std::sync::Arc;

use rand::Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::enveloping::{mono_degree, mono_letters, Mono, TensorUea, Uea, UNIT};
use crate::error::{Error, Result};
use crate::fedosov::FedosovContext;
use crate::lie::{LieAlgebra, MAX_DIM};
use crate::linalg::Matrix;
use crate::scalar::{Coef, Rational, Scalar, TruncatedSeries};
use crate::twist::{verify_twist, TwistCandidate};
use crate::weyl::{Caps, CoefAlgebra, TensorAlgebra, WeylElement};

/// Commutative polynomial in at most eight variables.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Poly<S> {
    pub terms: BTreeMap<Mono, S>,
}

pub type PolySeries<S> = TruncatedSeries<Poly<S>>;

impl<S: Scalar> Poly<S> {
    pub fn zero() -> Self {
        Poly { terms: BTreeMap::new() }
    }

    pub fn constant(c: S) -> Self {
        let mut p = Self::zero();
        p.add_term(UNIT, &c);
        p
    }

    pub fn one() -> Self {
        Self::constant(S::one())
    }

    pub fn var(i: usize) -> Self {
        Self::monomial(crate::enveloping::generator(i), S::one())
    }

    pub fn monomial(m: Mono, c: S) -> Self {
        let mut p = Self::zero();
        p.add_term(m, &c);
        p
    }

    pub fn add_term(&mut self, m: Mono, c: &S) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(v) => {
                v.add_assign(c);
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

    /// Total degree; `None` for zero.
    pub fn degree(&self) -> Option<usize> {
        self.terms.keys().map(mono_degree).max()
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut out = self.clone();
        for (m, c) in &o.terms {
            out.add_term(*m, c);
        }
        out
    }

    pub fn sub(&self, o: &Self) -> Self {
        let mut out = self.clone();
        for (m, c) in &o.terms {
            out.add_term(*m, &c.neg());
        }
        out
    }

    pub fn scale(&self, s: &S) -> Self {
        if s.is_zero() {
            return Self::zero();
        }
        Poly { terms: self.terms.iter().map(|(m, c)| (*m, c.mul(s))).collect() }
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut out = Self::zero();
        for (a, x) in &self.terms {
            for (b, y) in &o.terms {
                let mut m = *a;
                for (mi, bi) in m.iter_mut().zip(b) {
                    *mi += bi;
                }
                out.add_term(m, &x.mul(y));
            }
        }
        out
    }

    /// `∂p/∂x_j`.
    pub fn derivative(&self, j: usize) -> Self {
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            if m[j] == 0 {
                continue;
            }
            let mut m2 = *m;
            m2[j] -= 1;
            out.add_term(m2, &c.mul(&S::from_int(m[j] as i64)));
        }
        out
    }

    /// Value at `x = point`.
    pub fn eval(&self, point: &[S]) -> S {
        let mut acc = S::zero();
        for (m, c) in &self.terms {
            let mut v = c.clone();
            for (i, &e) in m.iter().enumerate().filter(|(_, e)| **e > 0) {
                for _ in 0..e {
                    v = v.mul(&point[i]);
                }
            }
            acc.add_assign(&v);
        }
        acc
    }

    pub fn map_coeffs<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Poly<T> {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            out.add_term(*m, &f(c));
        }
        out
    }

    pub fn display(&self, vars: usize) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(m, c)| {
                let mono: Vec<String> = (0..vars)
                    .filter(|&i| m[i] > 0)
                    .map(|i| if m[i] == 1 { format!("x{}", i + 1) } else { format!("x{}^{}", i + 1, m[i]) })
                    .collect();
                if mono.is_empty() {
                    c.to_string()
                } else if c.is_one() {
                    mono.join("*")
                } else {
                    format!("({c})*{}", mono.join("*"))
                }
            })
            .collect();
        parts.join(" + ")
    }

    pub fn to_json(&self, vars: usize) -> Value {
        Value::Array(
            self.terms.iter().map(|(m, c)| json!({ "monomial": m[..vars].to_vec(), "coeff": c.to_string() })).collect(),
        )
    }
}

impl<S: Scalar> Coef for Poly<S> {
    type Field = S;
    fn zero() -> Self {
        Poly::zero()
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
        Poly::scale(self, s)
    }
}

/// `[{t_power, terms}]` for a series of polynomials.
pub fn series_json<S: Scalar>(p: &PolySeries<S>, vars: usize) -> Value {
    Value::Array(
        p.coeffs().iter().enumerate().map(|(k, c)| json!({ "t_power": k, "terms": c.to_json(vars) })).collect(),
    )
}

/// A certified affine action of `g` on `K[x_1..x_m]`.
///
/// `fields[i][j]` lists the coefficients of `e_i ▷ x_j`: the constant term
/// followed by the coefficients of `x_1..x_m`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModuleAlgebraSpec {
    lie: Arc<LieAlgebra>,
    variables: usize,
    fields: Vec<Matrix<Rational>>,
    degree_cap: usize,
}

/// Which check a candidate action failed.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ActionDefect {
    /// `[e_i▷, e_j▷] x_l ≠ Σ C^k_ij e_k ▷ x_l` (1-based).
    Bracket { i: usize, j: usize, variable: usize },
    /// Leibniz rule fails on `x_j x_l`.
    Leibniz { i: usize, j: usize, l: usize },
}

impl std::fmt::Display for ActionDefect {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ActionDefect::Bracket { i, j, variable } => {
                write!(f, "action does not respect [e{i}, e{j}] on x{variable}")
            }
            ActionDefect::Leibniz { i, j, l } => write!(f, "e{i} is not a derivation on x{j}*x{l}"),
        }
    }
}

impl ModuleAlgebraSpec {
    /// Accepts `m × m` (linear) or `m × (m+1)` (affine) matrices per basis
    /// vector and certifies the bracket relations and the Leibniz rule.
    pub fn new(
        lie: Arc<LieAlgebra>,
        variables: usize,
        action: Vec<Matrix<Rational>>,
        degree_cap: usize,
    ) -> Result<Self> {
        let n = lie.dim();
        if variables == 0 || variables > MAX_DIM {
            return Err(Error::Config(format!("number of variables must be in 1..={MAX_DIM}")));
        }
        if action.len() != n {
            return Err(Error::Config(format!("expected {n} action matrices, got {}", action.len())));
        }
        let mut fields = Vec::with_capacity(n);
        for (i, m) in action.into_iter().enumerate() {
            if m.len() != variables {
                return Err(Error::Config(format!("action matrix {} must have {variables} rows", i + 1)));
            }
            let row_len = m[0].len();
            if m.iter().any(|r| r.len() != row_len) || (row_len != variables && row_len != variables + 1) {
                return Err(Error::Config(format!(
                    "action matrix {} must be {variables}x{variables} or {variables}x{}",
                    i + 1,
                    variables + 1
                )));
            }
            let affine = if row_len == variables {
                m.into_iter().map(|r| std::iter::once(Rational::zero()).chain(r).collect()).collect()
            } else {
                m
            };
            fields.push(affine);
        }
        let spec = ModuleAlgebraSpec { lie, variables, fields, degree_cap };
        spec.certify().map_err(|d| Error::Certificate(d.to_string()))?;
        Ok(spec)
    }

    pub fn lie(&self) -> &Arc<LieAlgebra> {
        &self.lie
    }

    pub fn variables(&self) -> usize {
        self.variables
    }

    pub fn degree_cap(&self) -> usize {
        self.degree_cap
    }

    pub fn fields(&self) -> &[Matrix<Rational>] {
        &self.fields
    }

    /// `e_i ▷ x_j`.
    pub fn on_variable<S: Scalar>(&self, i: usize, j: usize) -> Poly<S> {
        let row = &self.fields[i][j];
        let mut p = Poly::constant(S::from_rational(&row[0]));
        for (k, c) in row[1..].iter().enumerate() {
            p.add_term(crate::enveloping::generator(k), &S::from_rational(c));
        }
        p
    }

    /// `e_i ▷ p = Σ_j (e_i ▷ x_j) ∂_j p`.
    pub fn act<S: Scalar>(&self, i: usize, p: &Poly<S>) -> Poly<S> {
        let mut out = Poly::zero();
        for j in 0..self.variables {
            let d = p.derivative(j);
            if d.is_zero() {
                continue;
            }
            out = out.add(&self.on_variable::<S>(i, j).mul(&d));
        }
        out
    }

    /// `u ▷ p` for a PBW monomial `u`; the rightmost letter acts first.
    pub fn act_mono<S: Scalar>(&self, u: &Mono, p: &Poly<S>) -> Poly<S> {
        mono_letters(u).iter().rev().fold(p.clone(), |acc, &i| self.act(i, &acc))
    }

    fn certify(&self) -> std::result::Result<(), ActionDefect> {
        let n = self.lie.dim();
        let m = self.variables;
        for i in 0..n {
            for j in 0..n {
                for l in 0..m {
                    let x = Poly::<Rational>::var(l);
                    let lhs = self.act(i, &self.act(j, &x)).sub(&self.act(j, &self.act(i, &x)));
                    let mut rhs = Poly::zero();
                    for (k, c) in self.lie.bracket_basis(i, j) {
                        rhs = rhs.add(&self.act(k, &x).scale(c));
                    }
                    if lhs != rhs {
                        return Err(ActionDefect::Bracket { i: i + 1, j: j + 1, variable: l + 1 });
                    }
                }
            }
        }
        for i in 0..n {
            for j in 0..m {
                for l in j..m {
                    let (xj, xl) = (Poly::<Rational>::var(j), Poly::var(l));
                    let lhs = self.act(i, &xj.mul(&xl));
                    let rhs = self.on_variable::<Rational>(i, j).mul(&xl).add(&xj.mul(&self.on_variable(i, l)));
                    if lhs != rhs {
                        return Err(ActionDefect::Leibniz { i: i + 1, j: j + 1, l: l + 1 });
                    }
                }
            }
        }
        Ok(())
    }

    fn check_degrees<S: Scalar>(&self, a: &Poly<S>, b: &Poly<S>) -> Result<()> {
        let degree = a.degree().unwrap_or(0) + b.degree().unwrap_or(0);
        if degree > self.degree_cap {
            return Err(Error::DegreeOverflow { degree, cap: self.degree_cap });
        }
        Ok(())
    }
}

/// The polynomial algebra of a spec as a coefficient algebra.
#[derive(Clone, Debug)]
pub struct PolyAlgebra<S> {
    pub spec: Arc<ModuleAlgebraSpec>,
    _s: PhantomData<S>,
}

impl<S> PolyAlgebra<S> {
    pub fn new(spec: Arc<ModuleAlgebraSpec>) -> Self {
        PolyAlgebra { spec, _s: PhantomData }
    }
}

impl<S: Scalar> CoefAlgebra for PolyAlgebra<S> {
    type Elem = Poly<S>;
    fn one(&self) -> Poly<S> {
        Poly::one()
    }
    fn mul(&self, a: &Poly<S>, b: &Poly<S>) -> Poly<S> {
        a.mul(b)
    }
    fn act(&self, i: usize, a: &Poly<S>) -> Poly<S> {
        self.spec.act(i, a)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    Twist,
    Fedosov,
}

/// A deformed product on `K[x][[t]]`, truncated at `t^N`.
pub trait DeformedProduct<S: Scalar> {
    fn route(&self) -> Route;
    fn order(&self) -> usize;
    fn spec(&self) -> &ModuleAlgebraSpec;
    fn product(&self, a: &Poly<S>, b: &Poly<S>) -> Result<PolySeries<S>>;

    /// Bilinear extension to series.
    fn product_series(&self, a: &PolySeries<S>, b: &PolySeries<S>) -> Result<PolySeries<S>> {
        let n = self.order();
        let mut out = PolySeries::zero(n);
        for (i, x) in a.coeffs().iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (j, y) in b.coeffs().iter().enumerate().take(n + 1 - i) {
                if y.is_zero() {
                    continue;
                }
                let p = self.product(x, y)?;
                for k in 0..=n - i - j {
                    out.coeff_mut(i + j + k).add_assign(p.coeff(k));
                }
            }
        }
        Ok(out)
    }

    /// `(a⋆b)⋆c - a⋆(b⋆c)`.
    fn associator(&self, a: &Poly<S>, b: &Poly<S>, c: &Poly<S>) -> Result<PolySeries<S>> {
        let n = self.order();
        let lift = |p: &Poly<S>| TruncatedSeries::from_coeffs(vec![p.clone()], n);
        let left = self.product_series(&self.product(a, b)?, &lift(c))?;
        let right = self.product_series(&lift(a), &self.product(b, c)?)?;
        left.sub(&right)
    }
}

/// `a ⋆_F b = μ(F ▷ (a ⊗ b))`.
pub struct TwistUdf<S: Scalar> {
    spec: Arc<ModuleAlgebraSpec>,
    twist: TwistCandidate<S>,
    /// Set when the twist did not pass `verify_twist`.
    pub warnings: Vec<String>,
}

impl<S: Scalar> TwistUdf<S> {
    pub fn new(spec: Arc<ModuleAlgebraSpec>, twist: TwistCandidate<S>) -> Result<Self> {
        let uea = Uea::new(spec.lie().clone());
        let report = verify_twist(&uea, &twist)?;
        let warnings = match report.first_failure {
            Some(f) => vec![format!(
                "twist fails {:?} at order {} (component {}, coefficient {})",
                f.identity, f.order, f.component, f.coeff
            )],
            None => Vec::new(),
        };
        Ok(TwistUdf { spec, twist, warnings })
    }

    pub fn twist(&self) -> &TwistCandidate<S> {
        &self.twist
    }
}

impl<S: Scalar> DeformedProduct<S> for TwistUdf<S> {
    fn route(&self) -> Route {
        Route::Twist
    }

    fn order(&self) -> usize {
        self.twist.order()
    }

    fn spec(&self) -> &ModuleAlgebraSpec {
        &self.spec
    }

    fn product(&self, a: &Poly<S>, b: &Poly<S>) -> Result<PolySeries<S>> {
        self.spec.check_degrees(a, b)?;
        let mut left: HashMap<Mono, Poly<S>> = HashMap::new();
        let mut right: HashMap<Mono, Poly<S>> = HashMap::new();
        let mut out = PolySeries::zero(self.order());
        for (k, fk) in self.twist.value.coeffs().iter().enumerate() {
            for (key, c) in &fk.terms {
                let (u, v) = (key.slots[0], key.slots[1]);
                let ua = left.entry(u).or_insert_with(|| self.spec.act_mono(&u, a));
                if ua.is_zero() {
                    continue;
                }
                let ua = ua.clone();
                let vb = right.entry(v).or_insert_with(|| self.spec.act_mono(&v, b));
                out.coeff_mut(k).add_assign(&ua.mul(vb).scale(c));
            }
        }
        Ok(out)
    }
}

/// `σ(τ_𝒜(a) ∘ τ_𝒜(b))` with the polynomial algebra as coefficients.
pub struct FedosovUdf<'a, S: Scalar> {
    ctx: &'a FedosovContext<S>,
    alg: PolyAlgebra<S>,
    rho: crate::fedosov::Rho<S>,
    caps: Caps,
}

impl<'a, S: Scalar + Coef<Field = S>> FedosovUdf<'a, S> {
    pub fn new(ctx: &'a FedosovContext<S>, spec: Arc<ModuleAlgebraSpec>) -> Result<Self> {
        Self::with_caps(ctx, spec, Caps::for_sections(ctx.order()))
    }

    pub fn with_caps(ctx: &'a FedosovContext<S>, spec: Arc<ModuleAlgebraSpec>, caps: Caps) -> Result<Self> {
        if spec.lie().as_ref() != ctx.lie().as_ref() {
            return Err(Error::Config("module algebra spec belongs to a different Lie algebra".into()));
        }
        let rho = ctx.solve_rho()?;
        Ok(FedosovUdf { ctx, alg: PolyAlgebra::new(spec), rho, caps })
    }

    /// `τ_𝒜(a)`.
    pub fn taylor(&self, a: &Poly<S>) -> Result<WeylElement<Poly<S>>> {
        self.ctx.extended(&self.alg, &self.rho, self.caps).taylor(a)
    }
}

impl<S: Scalar + Coef<Field = S>> DeformedProduct<S> for FedosovUdf<'_, S> {
    fn route(&self) -> Route {
        Route::Fedosov
    }

    fn order(&self) -> usize {
        self.ctx.order()
    }

    fn spec(&self) -> &ModuleAlgebraSpec {
        &self.alg.spec
    }

    fn product(&self, a: &Poly<S>, b: &Poly<S>) -> Result<PolySeries<S>> {
        self.alg.spec.check_degrees(a, b)?;
        self.ctx.extended(&self.alg, &self.rho, self.caps).star(a, b)
    }
}

/// `(ξ ⊗ α) • a = ξ ▷ a ⊗ α` for `ξ ∈ U(g)`.
pub fn bullet<S: Scalar>(
    spec: &ModuleAlgebraSpec,
    x: &WeylElement<TensorUea<S>>,
    a: &Poly<S>,
) -> Result<WeylElement<Poly<S>>> {
    let mut terms = Vec::new();
    for (k, xi) in x.terms() {
        let mut acted = Poly::zero();
        for (tk, c) in &xi.terms {
            match tk.deg {
                0 => acted = acted.add(&a.scale(c)),
                1 => acted = acted.add(&spec.act_mono(&tk.slots[0], a).scale(c)),
                d => return Err(Error::Precondition(format!("• needs U(g) coefficients, found tensor degree {d}"))),
            }
        }
        terms.push((*k, acted));
    }
    let mut out = WeylElement::zero(x.dim, x.caps);
    for (k, c) in terms {
        out.add_term(k, &c);
    }
    Ok(out)
}

/// `τ(1)` for `U(g)` coefficients, for use with [`bullet`].
pub fn taylor_of_one<S: Scalar + Coef<Field = S>>(ctx: &FedosovContext<S>, caps: Caps) -> Result<WeylElement<TensorUea<S>>> {
    let uea = Arc::new(Uea::new(ctx.lie().clone()));
    let alg = TensorAlgebra::<S>::new(uea);
    let rho = ctx.solve_rho()?;
    ctx.extended(&alg, &rho, caps).taylor(&TensorUea::unit_tensor(1))
}

/// Products of sample pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct DeformedProductTable<S: Scalar> {
    pub route: Route,
    pub order: usize,
    pub entries: Vec<(usize, usize, PolySeries<S>)>,
}

impl<S: Scalar> DeformedProductTable<S> {
    pub fn build(product: &dyn DeformedProduct<S>, samples: &[Poly<S>]) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, a) in samples.iter().enumerate() {
            for (j, b) in samples.iter().enumerate() {
                entries.push((i, j, product.product(a, b)?));
            }
        }
        Ok(DeformedProductTable { route: product.route(), order: product.order(), entries })
    }

    pub fn to_json(&self, vars: usize) -> Value {
        json!({
            "route": self.route,
            "order": self.order,
            "entries": self.entries.iter().map(|(i, j, p)| json!({ "a": i, "b": j, "product": series_json(p, vars) })).collect::<Vec<_>>(),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RouteReport {
    pub order: usize,
    pub pairs_checked: usize,
    /// Indices of pairs where the routes differ, with the first differing order.
    pub mismatches: Vec<(usize, usize)>,
    pub twist_warnings: Vec<String>,
}

impl RouteReport {
    pub fn agree(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// `a ⋆_Ω b` against `a ⋆_{F_Ω} b` on the given pairs.
pub fn compare_routes(
    spec: &Arc<ModuleAlgebraSpec>,
    twist_ctx: &FedosovContext<Rational>,
    fedosov_ctx: &FedosovContext<Rational>,
    pairs: &[(Poly<Rational>, Poly<Rational>)],
) -> Result<RouteReport> {
    use rayon::prelude::*;
    let twist = crate::twist::compute_twist(twist_ctx)?;
    let via_twist = TwistUdf::new(spec.clone(), twist)?;
    let via_fedosov = FedosovUdf::new(fedosov_ctx, spec.clone())?;
    let outcomes: Vec<Option<usize>> = pairs
        .par_iter()
        .map(|(a, b)| {
            let x = via_twist.product(a, b)?;
            let y = via_fedosov.product(a, b)?;
            Ok((0..=x.cap().min(y.cap())).find(|&k| x.coeff(k) != y.coeff(k)))
        })
        .collect::<Result<_>>()?;
    let mismatches = outcomes.iter().enumerate().filter_map(|(i, o)| o.map(|k| (i, k))).collect();
    Ok(RouteReport {
        order: twist_ctx.order(),
        pairs_checked: pairs.len(),
        mismatches,
        twist_warnings: via_twist.warnings,
    })
}

/// Random polynomial with small rational coefficients.
pub fn sample_poly<R: Rng>(rng: &mut R, vars: usize, max_degree: usize, max_terms: usize) -> Poly<Rational> {
    let mut p = Poly::zero();
    let terms = rng.gen_range(1..=max_terms);
    for _ in 0..terms {
        let mut m = UNIT;
        let d = rng.gen_range(0..=max_degree);
        for _ in 0..d {
            m[rng.gen_range(0..vars)] += 1;
        }
        let num = rng.gen_range(-4i64..=4);
        let den = if rng.gen_bool(0.25) { rng.gen_range(2i64..=3) } else { 1 };
        p.add_term(m, &Rational::new(num, den));
    }
    if p.is_zero() {
        p = Poly::var(0);
    }
    p
}

pub mod examples {
    use super::*;

    /// `∂_1, ∂_2` on `K[x_1, x_2]`.
    pub fn translations(lie: &Arc<LieAlgebra>, cap: usize) -> Result<ModuleAlgebraSpec> {
        let q = Rational::from_int;
        let field = |j: usize| -> Matrix<Rational> {
            (0..2).map(|row| vec![if row == j { q(1) } else { q(0) }, q(0), q(0)]).collect()
        };
        ModuleAlgebraSpec::new(lie.clone(), 2, vec![field(0), field(1)], cap)
    }

    /// `X ↦ -x ∂_x`, `Y ↦ ∂_x` on `K[x]`.
    pub fn affine_line(lie: &Arc<LieAlgebra>, cap: usize) -> Result<ModuleAlgebraSpec> {
        let q = Rational::from_int;
        ModuleAlgebraSpec::new(lie.clone(), 1, vec![vec![vec![q(0), q(-1)]], vec![vec![q(1), q(0)]]], cap)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fedosov::ContextOptions;
    use crate::lie::{catalog, Form};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn q(n: i64) -> Rational {
        Rational::from_int(n)
    }

    fn ctx(e: &catalog::CatalogEntry, order: usize, omega: Vec<Form>) -> FedosovContext<Rational> {
        let mut o = ContextOptions::new(order);
        o.omega = omega;
        FedosovContext::new(e.lie.clone(), &e.r, o).unwrap()
    }

    fn series(cs: Vec<Poly<Rational>>, n: usize) -> PolySeries<Rational> {
        TruncatedSeries::from_coeffs(cs, n)
    }

    #[test]
    fn certification_gate() {
        let e = catalog::ax_plus_b();
        assert!(examples::affine_line(&e.lie, 6).is_ok());
        // X ↦ +x∂_x breaks [X, Y] = Y
        let bad = ModuleAlgebraSpec::new(e.lie.clone(), 1, vec![vec![vec![q(0), q(1)]], vec![vec![q(1), q(0)]]], 6);
        assert!(matches!(bad, Err(Error::Certificate(_))));
        let shape = ModuleAlgebraSpec::new(e.lie.clone(), 1, vec![vec![vec![q(0), q(1), q(2)]]], 6);
        assert!(matches!(shape, Err(Error::Config(_))));
        let lin = ModuleAlgebraSpec::new(catalog::abelian2().lie, 2, vec![vec![vec![q(0), q(0)]; 2]; 2], 4).unwrap();
        assert_eq!(lin.fields()[0][0].len(), 3);
    }

    #[test]
    fn moyal_on_the_plane() {
        let e = catalog::abelian2();
        let spec = Arc::new(examples::translations(&e.lie, 6).unwrap());
        let c = ctx(&e, 3, vec![]);
        let f = crate::twist::compute_twist(&c).unwrap();
        let udf = TwistUdf::new(spec.clone(), f).unwrap();
        assert!(udf.warnings.is_empty());
        let (x, y) = (Poly::<Rational>::var(0), Poly::var(1));
        let xy = udf.product(&x, &y).unwrap();
        let yx = udf.product(&y, &x).unwrap();
        assert_eq!(xy, series(vec![x.mul(&y), Poly::constant(Rational::new(1, 2))], 3));
        assert_eq!(xy.sub(&yx).unwrap(), series(vec![Poly::zero(), Poly::one()], 3));
        let fed = FedosovUdf::new(&c, spec).unwrap();
        assert_eq!(fed.product(&x, &y).unwrap(), xy);
        // unit
        let p = x.mul(&x).add(&y);
        let lift = series(vec![p.clone()], 3);
        assert_eq!(udf.product(&p, &Poly::one()).unwrap(), lift);
        assert_eq!(fed.product(&Poly::one(), &p).unwrap(), lift);
    }

    #[test]
    fn first_order_is_half_r() {
        let e = catalog::ax_plus_b();
        let spec = Arc::new(examples::affine_line(&e.lie, 8).unwrap());
        let c = ctx(&e, 3, vec![]);
        let fed = FedosovUdf::new(&c, spec.clone()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..5 {
            let a = sample_poly(&mut rng, 1, 3, 3);
            let b = sample_poly(&mut rng, 1, 3, 3);
            let p = fed.product(&a, &b).unwrap();
            // (1/2) r^{ij} (e_i▷a)(e_j▷b), r = X∧Y
            let want = spec.act(0, &a).mul(&spec.act(1, &b)).sub(&spec.act(1, &a).mul(&spec.act(0, &b)));
            assert_eq!(p.coeff(1), &want.scale(&Rational::new(1, 2)));
            assert_eq!(p.coeff(0), &a.mul(&b));
        }
    }

    #[test]
    fn routes_agree_and_products_associate() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (e, spec, vars) in [
            (catalog::ax_plus_b(), examples::affine_line(&catalog::ax_plus_b().lie, 9).unwrap(), 1),
            (catalog::abelian2(), examples::translations(&catalog::abelian2().lie, 9).unwrap(), 2),
        ] {
            let spec = Arc::new(spec);
            let c = ctx(&e, 3, vec![Form::pair(2, 0, 1, Rational::new(1, 3))]);
            let pairs: Vec<_> =
                (0..6).map(|_| (sample_poly(&mut rng, vars, 3, 3), sample_poly(&mut rng, vars, 3, 3))).collect();
            let rep = compare_routes(&spec, &c, &c, &pairs).unwrap();
            assert!(rep.agree(), "{:?}", rep.mismatches);
            let fed = FedosovUdf::new(&c, spec.clone()).unwrap();
            for _ in 0..3 {
                let [a, b, d] = [0; 3].map(|_| sample_poly(&mut rng, vars, 2, 2));
                assert!(fed.associator(&a, &b, &d).unwrap().is_zero());
            }
        }
    }

    #[test]
    fn mismatched_omega_is_detected() {
        let e = catalog::abelian2();
        let spec = Arc::new(examples::translations(&e.lie, 6).unwrap());
        let c0 = ctx(&e, 3, vec![]);
        let c1 = ctx(&e, 3, vec![Form::pair(2, 0, 1, q(1))]);
        let pairs = vec![(Poly::var(0), Poly::var(1))];
        let rep = compare_routes(&spec, &c0, &c1, &pairs).unwrap();
        // tΩ₁ first shows up at t²
        assert_eq!(rep.mismatches, vec![(0, 2)]);
    }

    #[test]
    fn section_caps_suffice() {
        let e = catalog::ax_plus_b();
        let spec = Arc::new(examples::affine_line(&e.lie, 8).unwrap());
        let c = ctx(&e, 3, vec![Form::pair(2, 0, 1, q(2))]);
        let full = FedosovUdf::with_caps(&c, spec.clone(), Caps::for_order(3)).unwrap();
        let cut = FedosovUdf::new(&c, spec).unwrap();
        let a = Poly::var(0).mul(&Poly::var(0)).add(&Poly::constant(q(3)));
        let b = Poly::var(0).mul(&Poly::var(0)).mul(&Poly::var(0));
        assert_eq!(full.product(&a, &b).unwrap(), cut.product(&a, &b).unwrap());
    }

    #[test]
    fn bullet_identities() {
        let e = catalog::ax_plus_b();
        let spec = Arc::new(examples::affine_line(&e.lie, 8).unwrap());
        let c = ctx(&e, 3, vec![Form::pair(2, 0, 1, q(1))]);
        let caps = Caps::for_order(3);
        let tau1 = taylor_of_one(&c, caps).unwrap();
        let fed = FedosovUdf::with_caps(&c, spec.clone(), caps).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..4 {
            let a = sample_poly(&mut rng, 1, 3, 3);
            assert_eq!(fed.taylor(&a).unwrap(), bullet(&spec, &tau1, &a).unwrap());
            let lhs = bullet(&spec, &tau1, &a).unwrap().sigma();
            let s = tau1.sigma();
            for k in 0..=s.cap() {
                let mut acted = Poly::zero();
                for (tk, v) in &s.coeff(k).terms {
                    acted = acted.add(&spec.act_mono(&tk.slots[0], &a).scale(v));
                }
                assert_eq!(lhs.coeff(k), &acted);
            }
        }
    }

    #[test]
    fn degree_cap_is_enforced() {
        let e = catalog::ax_plus_b();
        let spec = Arc::new(examples::affine_line(&e.lie, 3).unwrap());
        let c = ctx(&e, 2, vec![]);
        let fed = FedosovUdf::new(&c, spec).unwrap();
        let x2 = Poly::var(0).mul(&Poly::var(0));
        assert!(matches!(fed.product(&x2, &x2), Err(Error::DegreeOverflow { degree: 4, cap: 3 })));
    }

    #[test]
    fn broken_twist_is_flagged() {
        let e = catalog::abelian2();
        let spec = Arc::new(examples::translations(&e.lie, 6).unwrap());
        let mut v = crate::twist::series_constant(TensorUea::<Rational>::unit_tensor(2), 2);
        *v.coeff_mut(1) = crate::enveloping::bivector_tensor(&e.r);
        let udf = TwistUdf::new(spec, TwistCandidate::external(v)).unwrap();
        assert_eq!(udf.warnings.len(), 1);
    }
}
