//! JSON input: Lie algebras, forms, twists, module specs and job files.
//! Every rejection carries the JSON pointer of the offending value.

use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::connection::Connection;
use crate::enveloping::{Mono, TKey, TensorUea, UNIT};
use crate::error::{Error, Result};
use crate::fedosov::{ContextOptions, FedosovContext, Variant};
use crate::lie::{catalog, schouten_bracket, Form, LieAlgebra, MultiVector, MAX_DIM};
use crate::linalg::Matrix;
use crate::scalar::{Rational, Scalar, TruncatedSeries};
use crate::twist::TwistCandidate;
use crate::udf::ModuleAlgebraSpec;

/// Version of the job format accepted by [`parse_job`].
pub const JOB_FORMAT_VERSION: u64 = 1;

/// Largest accepted order `N`.
pub const MAX_ORDER: usize = 12;

/// Largest total degree of a monomial read from JSON.
pub const MAX_MONOMIAL_DEGREE: usize = 64;

/// A JSON value together with its pointer.
#[derive(Clone, Copy)]
struct At<'a> {
    value: &'a Value,
    pointer: &'a str,
}

fn schema(pointer: &str, message: impl Into<String>) -> Error {
    Error::Schema { pointer: if pointer.is_empty() { "/".into() } else { pointer.into() }, message: message.into() }
}

fn child(pointer: &str, key: &str) -> String {
    format!("{pointer}/{}", key.replace('~', "~0").replace('/', "~1"))
}

impl<'a> At<'a> {
    fn err(&self, message: impl Into<String>) -> Error {
        schema(self.pointer, message)
    }

    fn object(&self, allowed: &[&str]) -> Result<&'a serde_json::Map<String, Value>> {
        let map = self.value.as_object().ok_or_else(|| self.err("expected an object"))?;
        if let Some(k) = map.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(schema(&child(self.pointer, k), "unknown field"));
        }
        Ok(map)
    }

    fn array(&self) -> Result<&'a [Value]> {
        self.value.as_array().map(Vec::as_slice).ok_or_else(|| self.err("expected an array"))
    }

    fn usize(&self) -> Result<usize> {
        self.value
            .as_u64()
            .and_then(|n| usize::try_from(n).ok())
            .ok_or_else(|| self.err("expected a nonnegative integer"))
    }

    fn u64(&self) -> Result<u64> {
        self.value.as_u64().ok_or_else(|| self.err("expected a nonnegative integer"))
    }

    fn str(&self) -> Result<&'a str> {
        self.value.as_str().ok_or_else(|| self.err("expected a string"))
    }

    /// `"p/q"` strings or JSON integers.
    fn rational(&self) -> Result<Rational> {
        match self.value {
            Value::String(s) => Rational::from_str(s).map_err(|_| self.err(format!("not a rational: {s:?}"))),
            Value::Number(n) => n.as_i64().map(Rational::from_int).ok_or_else(|| self.err("numbers must be integers; write fractions as \"p/q\"")),
            _ => Err(self.err("expected a rational string \"p/q\"")),
        }
    }

    /// 1-based index in `1..=dim`, returned 0-based.
    fn index(&self, dim: usize) -> Result<usize> {
        let i = self.usize()?;
        if i == 0 || i > dim {
            return Err(self.err(format!("index must be in 1..={dim}")));
        }
        Ok(i - 1)
    }
}

/// Runs `f` on the child at `key` with its pointer.
fn field<T>(
    map: &serde_json::Map<String, Value>,
    pointer: &str,
    key: &str,
    f: impl FnOnce(At<'_>) -> Result<T>,
) -> Result<Option<T>> {
    match map.get(key) {
        None => Ok(None),
        Some(v) => {
            let p = child(pointer, key);
            f(At { value: v, pointer: &p }).map(Some)
        }
    }
}

fn required<T>(
    map: &serde_json::Map<String, Value>,
    pointer: &str,
    key: &str,
    f: impl FnOnce(At<'_>) -> Result<T>,
) -> Result<T> {
    field(map, pointer, key, f)?.ok_or_else(|| schema(pointer, format!("missing field {key:?}")))
}

fn each<T>(at: At<'_>, mut f: impl FnMut(At<'_>) -> Result<T>) -> Result<Vec<T>> {
    at.array()?
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let p = format!("{}/{i}", at.pointer);
            f(At { value: v, pointer: &p })
        })
        .collect()
}

fn parse_value(text: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| Error::Parse(format!("invalid JSON: {e}")))
}

fn matrix(at: At<'_>, rows: usize, cols: Option<usize>) -> Result<Matrix<Rational>> {
    let m = each(at, |row| each(row, |x| x.rational()))?;
    if m.len() != rows {
        return Err(at.err(format!("expected {rows} rows")));
    }
    let width = cols.unwrap_or_else(|| m.first().map_or(0, Vec::len));
    for (i, row) in m.iter().enumerate() {
        if row.len() != width {
            return Err(schema(&format!("{}/{i}", at.pointer), format!("expected {width} entries")));
        }
    }
    Ok(m)
}

fn square(at: At<'_>, n: usize) -> Result<Matrix<Rational>> {
    matrix(at, n, Some(n))
}

fn monomial(at: At<'_>, dim: usize) -> Result<Mono> {
    let exps = each(at, |x| x.usize())?;
    if exps.len() != dim {
        return Err(at.err(format!("expected {dim} exponents")));
    }
    if exps.iter().sum::<usize>() > MAX_MONOMIAL_DEGREE {
        return Err(at.err(format!("total degree exceeds {MAX_MONOMIAL_DEGREE}")));
    }
    let mut m = UNIT;
    for (slot, e) in m.iter_mut().zip(exps) {
        *slot = e as u8;
    }
    Ok(m)
}

fn bivector_entries(at: At<'_>, dim: usize) -> Result<MultiVector> {
    let mut out = MultiVector::zero(dim, 2);
    each(at, |e| {
        let map = e.object(&["i", "j", "c"])?;
        let i = required(map, e.pointer, "i", |x| x.index(dim))?;
        let j = required(map, e.pointer, "j", |x| x.index(dim))?;
        let c = required(map, e.pointer, "c", |x| x.rational())?;
        if i == j {
            return Err(e.err("i and j must differ"));
        }
        out = out.add(&MultiVector::pair(dim, i, j, c));
        Ok(())
    })?;
    Ok(out)
}

/// `[{"i", "j", "c"}]` meaning `Σ c e^i ∧ e^j`.
fn two_form(at: At<'_>, dim: usize) -> Result<Form> {
    Ok(Form(bivector_entries(at, dim)?.0))
}

/// `[{"i", "c"}]` meaning `Σ c e^i`.
fn one_form(at: At<'_>, dim: usize) -> Result<Form> {
    let mut out = Form::zero(dim, 1);
    each(at, |e| {
        let map = e.object(&["i", "c"])?;
        let i = required(map, e.pointer, "i", |x| x.index(dim))?;
        let c = required(map, e.pointer, "c", |x| x.rational())?;
        out = out.add(&Form::generator(dim, i).scale(&c));
        Ok(())
    })?;
    Ok(out)
}

fn form_series(at: At<'_>, dim: usize) -> Result<Vec<Form>> {
    let forms = each(at, |f| two_form(f, dim))?;
    if forms.len() > MAX_ORDER {
        return Err(at.err(format!("at most {MAX_ORDER} coefficients")));
    }
    Ok(forms)
}

/// A Lie algebra with its r-matrix.
#[derive(Clone, Debug)]
pub struct LieInput {
    pub lie: Arc<LieAlgebra>,
    pub r: MultiVector,
    /// Catalog name, if one was used.
    pub name: Option<String>,
}

fn lie_input(at: At<'_>) -> Result<LieInput> {
    let map = at.object(&["catalog", "dim", "brackets", "r"])?;
    if let Some(name) = field(map, at.pointer, "catalog", |x| x.str().map(str::to_owned))? {
        if map.len() > 1 {
            return Err(at.err("\"catalog\" excludes the other fields"));
        }
        let entry = catalog::all()
            .into_iter()
            .find(|e| e.name == name.as_str())
            .ok_or_else(|| schema(&child(at.pointer, "catalog"), format!("unknown catalog entry {name:?}")))?;
        return Ok(LieInput { lie: entry.lie, r: entry.r, name: Some(name) });
    }
    let dim = required(map, at.pointer, "dim", |x| {
        let d = x.usize()?;
        if d == 0 || d > MAX_DIM {
            return Err(x.err(format!("dimension must be in 1..={MAX_DIM}")));
        }
        Ok(d)
    })?;
    let entries = field(map, at.pointer, "brackets", |x| {
        each(x, |e| {
            let m = e.object(&["i", "j", "k", "c"])?;
            Ok((
                required(m, e.pointer, "i", |v| v.index(dim))?,
                required(m, e.pointer, "j", |v| v.index(dim))?,
                required(m, e.pointer, "k", |v| v.index(dim))?,
                required(m, e.pointer, "c", |v| v.rational())?,
            ))
        })
    })?
    .unwrap_or_default();
    let lie = LieAlgebra::from_brackets(dim, entries).map_err(|e| at.err(e.to_string()))?;
    let r = required(map, at.pointer, "r", |x| bivector_entries(x, dim))?;
    Ok(LieInput { lie: Arc::new(lie), r, name: None })
}

/// `{"dim", "brackets": [{"i","j","k","c"}], "r": [{"i","j","c"}]}` with
/// 1-based indices, or `{"catalog": name}`.
pub fn parse_lie(text: &str) -> Result<LieInput> {
    let v = parse_value(text)?;
    lie_input(At { value: &v, pointer: "" })
}

fn twist_value(at: At<'_>, dim: usize) -> Result<TwistCandidate<Rational>> {
    let orders = match at.value {
        Value::Object(_) => {
            let map = at.object(&["orders", "provenance"])?;
            let p = child(at.pointer, "orders");
            let v = map.get("orders").ok_or_else(|| at.err("missing field \"orders\""))?;
            each(At { value: v, pointer: &p }, |o| twist_order(o, dim))?
        }
        _ => each(at, |o| twist_order(o, dim))?,
    };
    let cap = orders.iter().map(|(k, _)| *k).max().ok_or_else(|| at.err("a twist needs at least one order"))?;
    if cap > MAX_ORDER {
        return Err(at.err(format!("t-powers must be at most {MAX_ORDER}")));
    }
    let mut series = TruncatedSeries::<TensorUea<Rational>>::zero(cap);
    for (k, x) in orders {
        let c = series.coeff_mut(k);
        *c = c.add(&x);
    }
    Ok(TwistCandidate::external(series))
}

fn twist_order(at: At<'_>, dim: usize) -> Result<(usize, TensorUea<Rational>)> {
    let map = at.object(&["t_power", "terms"])?;
    let k = required(map, at.pointer, "t_power", |x| x.usize())?;
    let mut out = TensorUea::zero();
    required(map, at.pointer, "terms", |terms| {
        each(terms, |t| {
            let m = t.object(&["left_monomial", "right_monomial", "coeff"])?;
            let l = required(m, t.pointer, "left_monomial", |x| monomial(x, dim))?;
            let r = required(m, t.pointer, "right_monomial", |x| monomial(x, dim))?;
            let c = required(m, t.pointer, "coeff", |x| x.rational())?;
            out.add_term(TKey::two(l, r), &c);
            Ok(())
        })
    })?;
    Ok((k, out))
}

/// Twist JSON as produced by [`TwistCandidate::to_json`], or its bare
/// `orders` array; repeated `t_power` entries are summed.
pub fn parse_twist(text: &str, dim: usize) -> Result<TwistCandidate<Rational>> {
    if dim == 0 || dim > MAX_DIM {
        return Err(Error::Config(format!("dimension must be in 1..={MAX_DIM}")));
    }
    let v = parse_value(text)?;
    twist_value(At { value: &v, pointer: "" }, dim)
}

fn module_value(at: At<'_>, lie: &Arc<LieAlgebra>) -> Result<ModuleAlgebraSpec> {
    let map = at.object(&["variables", "action", "degree_cap"])?;
    let vars = required(map, at.pointer, "variables", |x| {
        let m = x.usize()?;
        if m == 0 || m > MAX_DIM {
            return Err(x.err(format!("must be in 1..={MAX_DIM}")));
        }
        Ok(m)
    })?;
    let action = required(map, at.pointer, "action", |x| {
        let ms = each(x, |m| matrix(m, vars, None))?;
        if ms.len() != lie.dim() {
            return Err(x.err(format!("expected one matrix per basis vector ({})", lie.dim())));
        }
        for (i, m) in ms.iter().enumerate() {
            let w = m.first().map_or(0, Vec::len);
            if w != vars && w != vars + 1 {
                return Err(schema(&format!("{}/{i}", x.pointer), format!("rows must have {vars} or {} entries", vars + 1)));
            }
        }
        Ok(ms)
    })?;
    let cap = field(map, at.pointer, "degree_cap", |x| {
        let c = x.usize()?;
        if c > MAX_MONOMIAL_DEGREE {
            return Err(x.err(format!("must be at most {MAX_MONOMIAL_DEGREE}")));
        }
        Ok(c)
    })?
    .unwrap_or(8);
    ModuleAlgebraSpec::new(lie.clone(), vars, action, cap)
}

/// `{"variables": m, "action": [matrix per basis vector], "degree_cap"}`;
/// matrices are `m × m` or `m × (m+1)` with the constant column first.
pub fn parse_module(text: &str, lie: &Arc<LieAlgebra>) -> Result<ModuleAlgebraSpec> {
    let v = parse_value(text)?;
    module_value(At { value: &v, pointer: "" }, lie)
}

/// Pipelines a job can request.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Check,
    Cohomology,
    Twist,
    Verify,
    Classify,
    Equivalence,
    Deform,
    Compare,
    Hermitian,
    Positivity,
    Selftest,
}

impl Command {
    pub const ALL: [Command; 11] = [
        Command::Check,
        Command::Cohomology,
        Command::Twist,
        Command::Verify,
        Command::Classify,
        Command::Equivalence,
        Command::Deform,
        Command::Compare,
        Command::Hermitian,
        Command::Positivity,
        Command::Selftest,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Check => "check",
            Command::Cohomology => "cohomology",
            Command::Twist => "twist",
            Command::Verify => "verify",
            Command::Classify => "classify",
            Command::Equivalence => "equivalence",
            Command::Deform => "deform",
            Command::Compare => "compare",
            Command::Hermitian => "hermitian",
            Command::Positivity => "positivity",
            Command::Selftest => "selftest",
        }
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown command {s:?}")))
    }
}

impl std::fmt::Display for Command {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ConnectionSpec {
    Hess,
    /// `gamma[i][j][k] = Γ^k_{ij}`, 0-based.
    Explicit(Vec<Vec<Vec<Rational>>>),
}

/// `Ω = Σ t^k (Ω_k + i Im Ω_k)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct OmegaSeries {
    pub real: Vec<Form>,
    pub imaginary: Vec<Form>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SampleSpec {
    pub count: usize,
    pub seed: u64,
    pub max_degree: usize,
    pub max_terms: usize,
}

impl SampleSpec {
    fn rng(&self) -> rand_chacha::ChaCha8Rng {
        rand::SeedableRng::seed_from_u64(self.seed)
    }

    /// `count` random polynomials in `vars` variables.
    pub fn polys(&self, vars: usize) -> Vec<crate::udf::Poly<Rational>> {
        let mut rng = self.rng();
        (0..self.count).map(|_| crate::udf::sample_poly(&mut rng, vars, self.max_degree, self.max_terms.max(1))).collect()
    }

    pub fn complex_polys(&self, vars: usize) -> Vec<crate::udf::Poly<crate::scalar::GaussianRational>> {
        let mut rng = self.rng();
        (0..self.count)
            .map(|_| crate::positivity::sample_complex_poly(&mut rng, vars, self.max_degree, self.max_terms.max(1)))
            .collect()
    }
}

impl Default for SampleSpec {
    fn default() -> Self {
        SampleSpec { count: 10, seed: 1, max_degree: 2, max_terms: 3 }
    }
}

#[derive(Clone, Debug)]
pub struct EquivalenceSpec {
    /// `Ω'` of the second twist.
    pub omega_prime: OmegaSeries,
    /// `C_k` with `δ_CE C_k = Ω_k - Ω'_k`.
    pub c: Vec<Form>,
}

/// A parsed job file.
#[derive(Clone, Debug)]
pub struct JobSpec {
    pub command: Option<Command>,
    pub lie: LieInput,
    pub order: usize,
    pub variant: Variant,
    pub s: Option<Matrix<Rational>>,
    /// Kähler blocks `(A, B)`.
    pub kaehler: Option<(Matrix<Rational>, Matrix<Rational>)>,
    pub connection: ConnectionSpec,
    pub omega: OmegaSeries,
    /// Cochain degree for `cohomology`.
    pub degree: Option<usize>,
    pub twist: Option<TwistCandidate<Rational>>,
    pub module: Option<Arc<ModuleAlgebraSpec>>,
    pub samples: SampleSpec,
    /// Labelled `Ω` choices for `classify`.
    pub classify: Vec<(String, OmegaSeries)>,
    pub equivalence: Option<EquivalenceSpec>,
    /// Weighted evaluation points of a positive functional.
    pub functional: Option<Vec<(Rational, Vec<Rational>)>>,
    pub output: Option<String>,
    /// SHA-256 of the canonical JSON of the job.
    pub hash: String,
}

fn omega_series(at: At<'_>, dim: usize) -> Result<OmegaSeries> {
    match at.value {
        Value::Array(_) => Ok(OmegaSeries { real: form_series(at, dim)?, imaginary: Vec::new() }),
        _ => {
            let map = at.object(&["real", "imaginary"])?;
            Ok(OmegaSeries {
                real: field(map, at.pointer, "real", |x| form_series(x, dim))?.unwrap_or_default(),
                imaginary: field(map, at.pointer, "imaginary", |x| form_series(x, dim))?.unwrap_or_default(),
            })
        }
    }
}

const JOB_FIELDS: [&str; 18] = [
    "version",
    "command",
    "lie",
    "order",
    "variant",
    "s",
    "kaehler",
    "connection",
    "omega",
    "degree",
    "twist",
    "module",
    "samples",
    "classify",
    "equivalence",
    "functional",
    "output",
    "comment",
];

/// Canonical hash: keys sorted, no whitespace.
pub fn job_hash(v: &Value) -> String {
    // serde_json's default map is ordered, so serialization is canonical.
    let bytes = serde_json::to_vec(v).expect("JSON values serialize");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn job_value(at: At<'_>, hash: String) -> Result<JobSpec> {
    let map = at.object(&JOB_FIELDS)?;
    if let Some(v) = field(map, at.pointer, "version", |x| x.u64())? {
        if v != JOB_FORMAT_VERSION {
            return Err(schema(&child(at.pointer, "version"), format!("unsupported version {v}; expected {JOB_FORMAT_VERSION}")));
        }
    }
    let command = field(map, at.pointer, "command", |x| {
        let s = x.str()?;
        Command::from_str(s).map_err(|_| x.err(format!("unknown command {s:?}")))
    })?;
    let lie = required(map, at.pointer, "lie", lie_input)?;
    let n = lie.lie.dim();
    let order = field(map, at.pointer, "order", |x| {
        let k = x.usize()?;
        if k == 0 || k > MAX_ORDER {
            return Err(x.err(format!("order must be in 1..={MAX_ORDER}")));
        }
        Ok(k)
    })?
    .unwrap_or(3);
    let variant = field(map, at.pointer, "variant", |x| match x.str()? {
        "weyl" => Ok(Variant::Weyl),
        "wick" => Ok(Variant::Wick),
        other => Err(x.err(format!("variant must be \"weyl\" or \"wick\", not {other:?}"))),
    })?
    .unwrap_or(Variant::Weyl);
    let s = field(map, at.pointer, "s", |x| square(x, n))?;
    let kaehler = field(map, at.pointer, "kaehler", |x| {
        let m = x.object(&["a", "b"])?;
        if n % 2 != 0 {
            return Err(x.err("Kähler data needs an even-dimensional Lie algebra"));
        }
        let a = required(m, x.pointer, "a", |y| square(y, n / 2))?;
        let b = required(m, x.pointer, "b", |y| square(y, n / 2))?;
        Ok((a, b))
    })?;
    let connection = field(map, at.pointer, "connection", |x| match x.value {
        Value::String(s) if s == "hess" => Ok(ConnectionSpec::Hess),
        Value::Object(_) => {
            let m = x.object(&["explicit"])?;
            let g = required(m, x.pointer, "explicit", |y| {
                let g = each(y, |slab| square(slab, n))?;
                if g.len() != n {
                    return Err(y.err(format!("expected {n} slabs Γ[i][j][k]")));
                }
                Ok(g)
            })?;
            Ok(ConnectionSpec::Explicit(g))
        }
        _ => Err(x.err("connection must be \"hess\" or {\"explicit\": Γ}")),
    })?
    .unwrap_or(ConnectionSpec::Hess);
    let omega = field(map, at.pointer, "omega", |x| omega_series(x, n))?.unwrap_or_default();
    if omega.real.len().max(omega.imaginary.len()) > order {
        return Err(schema(&child(at.pointer, "omega"), format!("more Ω coefficients than the order {order}")));
    }
    let degree = field(map, at.pointer, "degree", |x| {
        let p = x.usize()?;
        if p > n {
            return Err(x.err(format!("degree must be at most {n}")));
        }
        Ok(p)
    })?;
    let twist = field(map, at.pointer, "twist", |x| twist_value(x, n))?;
    let module = field(map, at.pointer, "module", |x| module_value(x, &lie.lie).map(Arc::new))?;
    let samples = field(map, at.pointer, "samples", |x| {
        let m = x.object(&["count", "seed", "max_degree", "max_terms"])?;
        let d = SampleSpec::default();
        let bounded = |key: &str, max: usize, default: usize| {
            field(m, x.pointer, key, |y| {
                let v = y.usize()?;
                if v > max {
                    return Err(y.err(format!("must be at most {max}")));
                }
                Ok(v)
            })
            .map(|v| v.unwrap_or(default))
        };
        Ok(SampleSpec {
            count: bounded("count", 1000, d.count)?,
            seed: field(m, x.pointer, "seed", |y| y.u64())?.unwrap_or(d.seed),
            max_degree: bounded("max_degree", 6, d.max_degree)?,
            max_terms: bounded("max_terms", 8, d.max_terms)?,
        })
    })?
    .unwrap_or_default();
    let classify = field(map, at.pointer, "classify", |x| {
        each(x, |e| {
            let m = e.object(&["label", "omega"])?;
            let label = required(m, e.pointer, "label", |y| y.str().map(str::to_owned))?;
            let om = field(m, e.pointer, "omega", |y| omega_series(y, n))?.unwrap_or_default();
            if om.real.len() > order || !om.imaginary.is_empty() {
                return Err(e.err(format!("needs at most {order} real Ω coefficients")));
            }
            Ok((label, om))
        })
    })?
    .unwrap_or_default();
    let equivalence = field(map, at.pointer, "equivalence", |x| {
        let m = x.object(&["omega_prime", "c"])?;
        let omega_prime = field(m, x.pointer, "omega_prime", |y| omega_series(y, n))?.unwrap_or_default();
        let c = required(m, x.pointer, "c", |y| each(y, |f| one_form(f, n)))?;
        if omega_prime.real.len() > order || c.len() > order {
            return Err(x.err(format!("at most {order} coefficients")));
        }
        Ok(EquivalenceSpec { omega_prime, c })
    })?;
    let functional = field(map, at.pointer, "functional", |x| {
        let vars = module.as_ref().map(|m| m.variables());
        each(x, |p| {
            let m = p.object(&["weight", "point"])?;
            let w = required(m, p.pointer, "weight", |y| y.rational())?;
            let point = required(m, p.pointer, "point", |y| each(y, |z| z.rational()))?;
            if let Some(v) = vars {
                if point.len() != v {
                    return Err(p.err(format!("point needs {v} coordinates")));
                }
            }
            Ok((w, point))
        })
    })?;
    let output = field(map, at.pointer, "output", |x| x.str().map(str::to_owned))?;
    field(map, at.pointer, "comment", |x| x.str().map(|_| ()))?;
    Ok(JobSpec {
        command,
        lie,
        order,
        variant,
        s,
        kaehler,
        connection,
        omega,
        degree,
        twist,
        module,
        samples,
        classify,
        equivalence,
        functional,
        output,
        hash,
    })
}

/// Parses and schema-checks a job file.
pub fn parse_job(text: &str) -> Result<JobSpec> {
    let v = parse_value(text)?;
    job_value(At { value: &v, pointer: "" }, job_hash(&v))
}

/// What [`JobSpec::structure`] found about the Lie algebra and `r`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StructureCheck {
    pub jacobi: Result<crate::lie::LieCertificate, crate::lie::LieViolation>,
    /// `[r, r] = 0`.
    pub cybe: bool,
}

impl StructureCheck {
    pub fn passed(&self) -> bool {
        self.jacobi.is_ok() && self.cybe
    }
}

impl JobSpec {
    pub fn dim(&self) -> usize {
        self.lie.lie.dim()
    }

    /// Replaces `N`, rechecking that every `Ω` series still fits.
    pub fn with_order(mut self, order: usize) -> Result<Self> {
        if order == 0 || order > MAX_ORDER {
            return Err(Error::Config(format!("order must be in 1..={MAX_ORDER}")));
        }
        let longest = std::iter::once(&self.omega)
            .chain(self.classify.iter().map(|(_, o)| o))
            .chain(self.equivalence.iter().map(|e| &e.omega_prime))
            .map(|o| o.real.len().max(o.imaginary.len()))
            .chain(self.equivalence.iter().map(|e| e.c.len()))
            .max()
            .unwrap_or(0);
        if longest > order {
            return Err(Error::Config(format!("the job has {longest} Ω coefficients, more than the order {order}")));
        }
        self.order = order;
        Ok(self)
    }

    pub fn structure(&self) -> StructureCheck {
        StructureCheck {
            jacobi: self.lie.lie.validate(),
            cybe: schouten_bracket(&self.lie.lie, &self.lie.r, &self.lie.r).is_zero(),
        }
    }

    /// Certificate error unless Jacobi and `[r, r] = 0` hold.
    pub fn require_structure(&self) -> Result<()> {
        let st = self.structure();
        if let Err(v) = st.jacobi {
            return Err(Error::Certificate(format!("not a Lie algebra: {v:?}")));
        }
        if !st.cybe {
            return Err(Error::Certificate("r does not satisfy [r, r] = 0".into()));
        }
        Ok(())
    }

    /// The `s` to use: explicit, else from the Kähler blocks.
    pub fn effective_s(&self) -> Result<Option<Matrix<Rational>>> {
        match (&self.s, &self.kaehler) {
            (Some(s), Some(_)) => {
                let kd = self.kaehler_data()?.expect("present");
                if kd.s() != s {
                    return Err(schema("/s", "differs from the s determined by the Kähler blocks"));
                }
                Ok(Some(s.clone()))
            }
            (Some(s), None) => Ok(Some(s.clone())),
            (None, Some(_)) => Ok(Some(self.kaehler_data()?.expect("present").s().clone())),
            (None, None) => Ok(None),
        }
    }

    pub fn kaehler_data(&self) -> Result<Option<crate::positivity::KaehlerData>> {
        self.kaehler
            .as_ref()
            .map(|(a, b)| crate::positivity::KaehlerData::with_r(a.clone(), b.clone(), &self.lie.r))
            .transpose()
    }

    /// Context options for a given `Ω`.
    pub fn options_with(&self, omega: &OmegaSeries) -> Result<ContextOptions> {
        let mut o = ContextOptions::new(self.order);
        o.variant = self.variant;
        o.s = self.effective_s()?;
        o.omega = omega.real.clone();
        o.omega_imaginary = omega.imaginary.clone();
        o.connection = match &self.connection {
            ConnectionSpec::Hess => None,
            ConnectionSpec::Explicit(g) => Some(Connection::new(self.lie.lie.clone(), g)?),
        };
        Ok(o)
    }

    pub fn context_with<S: Scalar + crate::scalar::Coef<Field = S>>(&self, omega: &OmegaSeries) -> Result<FedosovContext<S>> {
        self.require_structure()?;
        FedosovContext::new(self.lie.lie.clone(), &self.lie.r, self.options_with(omega)?)
    }

    pub fn context<S: Scalar + crate::scalar::Coef<Field = S>>(&self) -> Result<FedosovContext<S>> {
        self.context_with(&self.omega)
    }
}
