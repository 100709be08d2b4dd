//! Invariant battery on the built-in catalog.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use twist_core::enveloping::{bivector_tensor, Uea};
use twist_core::fedosov::{ContextOptions, FedosovContext, Variant};
use twist_core::lie::{catalog, ce_cohomology, schouten_bracket, Form};
use twist_core::positivity;
use twist_core::twist::{compute_twist_with, verify_twist};
use twist_core::udf::{self, examples};
use twist_core::weyl::{sample_element, Caps};
use twist_core::{Rational, Result};

use crate::commands::Outcome;

struct Battery {
    rows: Vec<(String, bool, String)>,
}

impl Battery {
    fn record(&mut self, name: String, r: Result<bool>) {
        let (ok, detail) = match r {
            Ok(ok) => (ok, String::new()),
            Err(e) => (false, e.to_string()),
        };
        self.rows.push((name, ok, detail));
    }
}

fn koszul(ctx: &FedosovContext<Rational>, samples: usize) -> Result<bool> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let caps = Caps::for_order(3);
    for k in 0..samples {
        let a = sample_element::<Rational, _>(&mut rng, ctx.dim(), caps, 5, k % 3);
        let id = a.delta().delta_inv().add(&a.delta_inv().delta())?.add(&a.sigma_part())?;
        if id != a || !a.delta().delta().is_zero() || !a.delta_inv().delta_inv().is_zero() {
            return Ok(false);
        }
    }
    Ok(true)
}

pub fn run() -> Outcome {
    let mut b = Battery { rows: Vec::new() };
    for e in catalog::all() {
        let name = e.name;
        b.record(format!("{name}: jacobi"), Ok(e.lie.validate().is_ok()));
        b.record(format!("{name}: [r, r] = 0"), Ok(schouten_bracket(&e.lie, &e.r, &e.r).is_zero()));
        let ctx = FedosovContext::<Rational>::new(e.lie.clone(), &e.r, ContextOptions::new(3));
        let ctx = match ctx {
            Ok(c) => c,
            Err(err) => {
                b.record(format!("{name}: context"), Err(err));
                continue;
            }
        };
        b.record(format!("{name}: koszul identities"), koszul(&ctx, 20));
        b.record(
            format!("{name}: rho equation"),
            ctx.solve_rho().and_then(|rho| ctx.rho_residual(&rho)).map(|r| r.is_zero()),
        );
        let uea = Arc::new(Uea::new(e.lie.clone()));
        b.record(
            format!("{name}: twist N=3 verified, F_1 = r/2"),
            compute_twist_with(&ctx, &uea).and_then(|f| {
                let first = f.value.coeff(1) == &bivector_tensor::<Rational>(&e.r).scale(&Rational::new(1, 2));
                Ok(first && verify_twist(&uea, &f)?.passed())
            }),
        );
    }
    let h2 = |e: catalog::CatalogEntry, want: usize| ce_cohomology(&e.lie, 2).map(|h| h.dimension == want);
    b.record("abelian-2: dim H^2 = 1".into(), h2(catalog::abelian2(), 1));
    b.record("ax+b: dim H^2 = 0".into(), h2(catalog::ax_plus_b(), 0));

    let routes = |e: catalog::CatalogEntry, spec: Result<udf::ModuleAlgebraSpec>| -> Result<bool> {
        let spec = Arc::new(spec?);
        let mut o = ContextOptions::new(3);
        o.omega = vec![Form::pair(e.lie.dim(), 0, 1, Rational::new(1, 2))];
        let ctx = FedosovContext::<Rational>::new(e.lie.clone(), &e.r, o)?;
        let samples = twist_core::io::SampleSpec { count: 6, seed: 3, max_degree: 2, max_terms: 3 }.polys(spec.variables());
        let pairs: Vec<_> = samples.iter().zip(samples.iter().rev()).map(|(a, b)| (a.clone(), b.clone())).collect();
        Ok(udf::compare_routes(&spec, &ctx, &ctx, &pairs)?.agree())
    };
    let ab = catalog::abelian2();
    b.record("abelian-2: twist and Fedosov routes agree".into(), routes(ab.clone(), examples::translations(&ab.lie, 8)));
    let axb = catalog::ax_plus_b();
    b.record("ax+b: twist and Fedosov routes agree".into(), routes(axb.clone(), examples::affine_line(&axb.lie, 8)));

    let kd = positivity::examples::plane();
    b.record(
        "kaehler plane: hermitian".into(),
        positivity::wick_context(&kd, ab.lie.clone(), ContextOptions::new(3))
            .and_then(|ctx| positivity::hermitian_check(&ctx, None, 4, 1))
            .map(|r| r.passed()),
    );
    let mut o = ContextOptions::new(3);
    o.variant = Variant::Wick;
    b.record(
        "ax+b wick: hermitian".into(),
        FedosovContext::new(axb.lie.clone(), &axb.r, o)
            .and_then(|ctx| positivity::hermitian_check(&ctx, None, 4, 1))
            .map(|r| r.passed()),
    );

    let passed = b.rows.iter().all(|(_, ok, _)| *ok);
    let summary = b.rows.iter().map(|(n, ok, d)| format!("{} {n}{}", if *ok { "pass" } else { "FAIL" }, if d.is_empty() { String::new() } else { format!(": {d}") })).collect();
    let result = json!({
        "checks": b.rows.iter().map(|(n, ok, d)| json!({ "name": n, "passed": ok, "detail": d })).collect::<Vec<_>>(),
    });
    Outcome { passed, result, summary }
}
