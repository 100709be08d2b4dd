//! One function per pipeline. Each returns the JSON result, a pass flag and
//! a few summary lines.

use std::sync::Arc;

use serde_json::{json, Value};
use twist_core::fedosov::{FedosovContext, Variant};
use twist_core::io::{Command, JobSpec};
use twist_core::lie::{ce_cohomology, invert_r, mask_indices, Form};
use twist_core::positivity::{self, KaehlerData, PositiveFunctionalSpec};
use twist_core::twist::{self, EquivalenceElement};
use twist_core::udf::{self, DeformedProduct, DeformedProductTable, FedosovUdf, ModuleAlgebraSpec};
use twist_core::{Error, GaussianRational, Rational, Result};

pub struct Outcome {
    pub passed: bool,
    pub result: Value,
    pub summary: Vec<String>,
}

fn missing(field: &str, command: Command) -> Error {
    Error::Schema { pointer: format!("/{field}"), message: format!("required by the {command} command") }
}

fn form_json(f: &Form) -> Value {
    Value::Array(
        f.components()
            .iter()
            .map(|(m, c)| json!({ "indices": mask_indices(*m).iter().map(|i| i + 1).collect::<Vec<_>>(), "c": c.to_string() }))
            .collect(),
    )
}

fn module(job: &JobSpec, command: Command) -> Result<&Arc<ModuleAlgebraSpec>> {
    job.module.as_ref().ok_or_else(|| missing("module", command))
}

pub fn run(command: Command, job: &JobSpec) -> Result<Outcome> {
    match command {
        Command::Check => check(job),
        Command::Cohomology => cohomology(job),
        Command::Twist => compute(job),
        Command::Verify => verify(job),
        Command::Classify => classify(job),
        Command::Equivalence => equivalence(job),
        Command::Deform => deform(job),
        Command::Compare => compare(job),
        Command::Hermitian => hermitian(job),
        Command::Positivity => positivity_cmd(job),
        Command::Selftest => Ok(crate::selftest::run()),
    }
}

fn verdict<T>(r: &Result<T>) -> Value {
    match r {
        Ok(_) => json!({ "ok": true }),
        Err(e) => json!({ "ok": false, "error": e.to_string() }),
    }
}

fn check(job: &JobSpec) -> Result<Outcome> {
    let st = job.structure();
    let nondegenerate = invert_r(&job.lie.r);
    let kaehler = job.kaehler_data();
    let context = if !st.passed() {
        Err(Error::Precondition("skipped: structure check failed".into()))
    } else if job.variant == Variant::Wick || !job.omega.imaginary.is_empty() {
        job.context::<GaussianRational>().map(|_| ())
    } else {
        job.context::<Rational>().map(|_| ())
    };
    let module_ok = job.module.is_some();
    let passed = st.passed() && nondegenerate.is_ok() && kaehler.is_ok() && context.is_ok();
    let mut summary = vec![
        format!("jacobi: {}", if st.jacobi.is_ok() { "ok" } else { "FAILED" }),
        format!("[r, r] = 0: {}", st.cybe),
        format!("r nondegenerate: {}", nondegenerate.is_ok()),
        match &context {
            Ok(()) => "connection, s and Ω: certified".to_string(),
            Err(e) => format!("connection, s and Ω: FAILED ({e})"),
        },
    ];
    if job.kaehler.is_some() {
        summary.push(match &kaehler {
            Ok(_) => "kaehler data: certified".to_string(),
            Err(e) => format!("kaehler data: FAILED ({e})"),
        });
    }
    if module_ok {
        summary.push("module action: certified".into());
    }
    Ok(Outcome {
        passed,
        result: json!({
            "jacobi": match &st.jacobi {
                Ok(c) => json!({ "ok": true, "triples_checked": c.triples_checked }),
                Err(v) => json!({ "ok": false, "violation": v }),
            },
            "cybe": st.cybe,
            "nondegenerate": verdict(&nondegenerate),
            "context": verdict(&context),
            "kaehler": match &kaehler {
                Ok(Some(kd)) => json!({ "ok": true, "certificate": kd.certificate() }),
                Ok(None) => Value::Null,
                Err(e) => json!({ "ok": false, "error": e.to_string() }),
            },
            "module_certified": module_ok,
        }),
        summary,
    })
}

fn cohomology(job: &JobSpec) -> Result<Outcome> {
    job.require_structure()?;
    let p = job.degree.unwrap_or(2);
    let h = ce_cohomology(&job.lie.lie, p)?;
    Ok(Outcome {
        passed: true,
        summary: vec![format!("H^{p}_CE: dimension {}", h.dimension)],
        result: json!({
            "degree": p,
            "dimension": h.dimension,
            "kernel_dim": h.kernel_dim,
            "image_dim": h.image_dim,
            "representatives": h.representatives.iter().map(form_json).collect::<Vec<_>>(),
        }),
    })
}

fn report_summary(rep: &twist::TwistReport) -> Vec<String> {
    let mut s: Vec<String> = rep
        .orders
        .iter()
        .map(|o| format!("order {}: cocycle {}, counit {}", o.order, o.cocycle, o.counit))
        .collect();
    if let Some(f) = &rep.first_failure {
        s.push(format!("first failure: {:?} at order {} ({} = {})", f.identity, f.order, f.component, f.coeff));
    }
    s
}

fn compute(job: &JobSpec) -> Result<Outcome> {
    let ctx = job.context::<Rational>()?;
    let uea = twist_core::enveloping::Uea::new(ctx.lie().clone());
    let f = twist::compute_twist(&ctx)?;
    let rep = twist::verify_twist(&uea, &f)?;
    Ok(Outcome {
        passed: rep.passed(),
        summary: report_summary(&rep),
        result: json!({ "twist": f.to_json(ctx.dim()), "verification": rep }),
    })
}

fn verify(job: &JobSpec) -> Result<Outcome> {
    let f = job.twist.as_ref().ok_or_else(|| missing("twist", Command::Verify))?;
    job.require_structure()?;
    let uea = twist_core::enveloping::Uea::new(job.lie.lie.clone());
    let rep = twist::verify_twist(&uea, f)?;
    Ok(Outcome { passed: rep.passed(), summary: report_summary(&rep), result: json!({ "verification": rep }) })
}

fn classify(job: &JobSpec) -> Result<Outcome> {
    if job.classify.is_empty() {
        return Err(missing("classify", Command::Classify));
    }
    let contexts = job
        .classify
        .iter()
        .map(|(label, om)| Ok((label.clone(), job.context_with::<Rational>(om)?)))
        .collect::<Result<Vec<_>>>()?;
    let rep = twist::classify(&contexts)?;
    let passed = rep.entries.iter().all(|e| e.twist_verified) && rep.fingerprints.iter().all(|f| f.holds);
    let mut summary = vec![format!("H^2_CE dimension: {}", rep.h2_dimension)];
    for p in &rep.pairs {
        let (a, b) = (&rep.entries[p.a].label, &rep.entries[p.b].label);
        summary.push(match &p.obstruction_class {
            None => format!("{a} ~ {b}: equivalent"),
            Some(c) => format!("{a} ~ {b}: obstructed at order {} by class {c:?}", p.obstruction_order.unwrap_or(0)),
        });
    }
    Ok(Outcome { passed, summary, result: serde_json::to_value(&rep).expect("serializable") })
}

fn equivalence(job: &JobSpec) -> Result<Outcome> {
    let spec = job.equivalence.as_ref().ok_or_else(|| missing("equivalence", Command::Equivalence))?;
    let ctx = job.context::<Rational>()?;
    let ctx_prime = job.context_with::<Rational>(&spec.omega_prime)?;
    let s: EquivalenceElement<Rational> = twist::equivalence_from_cohomologous(&ctx, &ctx_prime, &spec.c)?;
    let uea = twist_core::enveloping::Uea::new(ctx.lie().clone());
    let f = twist::compute_twist(&ctx)?;
    let f_prime = twist::compute_twist(&ctx_prime)?;
    let ok = twist::is_equivalence(&uea, &s, &f.value, &f_prime.value)?;
    let counit: Vec<String> = s.counit(&uea).iter().map(Rational::to_string).collect();
    Ok(Outcome {
        passed: ok,
        summary: vec![format!("Δ(S)F' = F(S⊗S) mod t^{}: {ok}", ctx.order() + 1), format!("ε(S) = {counit:?}")],
        result: json!({ "equivalence": s.to_json(ctx.dim()), "verified": ok, "counit": counit }),
    })
}

fn deform(job: &JobSpec) -> Result<Outcome> {
    let spec = module(job, Command::Deform)?;
    let ctx = job.context::<Rational>()?;
    let udf = FedosovUdf::new(&ctx, spec.clone())?;
    let samples = job.samples.polys(spec.variables());
    let table = DeformedProductTable::build(&udf, &samples)?;
    let mut assoc_failures = Vec::new();
    let mut triples = 0;
    let deg = |p: &udf::Poly<Rational>| p.degree().unwrap_or(0);
    for w in samples.windows(3) {
        if deg(&w[0]) + deg(&w[1]) + deg(&w[2]) > spec.degree_cap() {
            continue;
        }
        triples += 1;
        if !udf.associator(&w[0], &w[1], &w[2])?.is_zero() {
            assoc_failures.push(triples - 1);
        }
    }
    let vars = spec.variables();
    Ok(Outcome {
        passed: assoc_failures.is_empty(),
        summary: vec![
            format!("{} products", table.entries.len()),
            format!("associativity on {triples} triples within the degree cap: {}", if assoc_failures.is_empty() { "ok" } else { "FAILED" }),
        ],
        result: json!({
            "samples": samples.iter().map(|p| p.to_json(vars)).collect::<Vec<_>>(),
            "table": table.to_json(vars),
            "triples_checked": triples,
            "associator_failures": assoc_failures,
        }),
    })
}

fn compare(job: &JobSpec) -> Result<Outcome> {
    let spec = module(job, Command::Compare)?;
    let ctx = job.context::<Rational>()?;
    let samples = job.samples.polys(spec.variables());
    let pairs: Vec<_> = samples.iter().zip(samples.iter().cycle().skip(1)).map(|(a, b)| (a.clone(), b.clone())).collect();
    let rep = udf::compare_routes(spec, &ctx, &ctx, &pairs)?;
    Ok(Outcome {
        passed: rep.agree() && rep.twist_warnings.is_empty(),
        summary: vec![format!("{} pairs, {} mismatches", rep.pairs_checked, rep.mismatches.len())],
        result: serde_json::to_value(&rep).expect("serializable"),
    })
}

fn hermitian(job: &JobSpec) -> Result<Outcome> {
    let ctx: FedosovContext<GaussianRational> = job.context()?;
    let rep = positivity::hermitian_check(&ctx, job.module.as_ref(), job.samples.count, job.samples.seed)?;
    let summary = vec![
        format!("t* = {}", if rep.t_conjugation < 0 { "-t" } else { "t" }),
        format!("rho Hermitian: {}", rep.rho_hermitian),
        format!("operators real: {}", rep.operators_real),
        format!("fiber product Hermitian: {}", rep.fiber_hermitian),
        format!("star product Hermitian: {}", rep.star_hermitian.map_or("not checked (no module)".into(), |b| b.to_string())),
        format!("F* = F: {}", rep.twist_hermitian),
    ];
    Ok(Outcome { passed: rep.passed(), summary, result: serde_json::to_value(&rep).expect("serializable") })
}

fn positivity_cmd(job: &JobSpec) -> Result<Outcome> {
    let kd: KaehlerData = job.kaehler_data()?.ok_or_else(|| missing("kaehler", Command::Positivity))?;
    let spec = module(job, Command::Positivity)?;
    job.require_structure()?;
    let ctx = positivity::wick_context(&kd, job.lie.lie.clone(), job.options_with(&job.omega)?)?;
    let samples = job.samples.complex_polys(spec.variables());
    let vars = spec.variables();
    let mut identities = Vec::new();
    let mut all_hold = true;
    for a in &samples {
        let rep = positivity::wick_positivity_identity(&ctx, &kd, spec, a)?;
        all_hold &= rep.holds();
        identities.push(rep.to_json(vars));
    }
    let functional = match &job.functional {
        Some(points) => PositiveFunctionalSpec::new(points.clone(), vars)?,
        None => PositiveFunctionalSpec::origin(vars),
    };
    let probe = positivity::positivity_probe(&ctx, &kd, spec, &functional, &samples)?;
    Ok(Outcome {
        passed: all_hold && probe.passed(),
        summary: vec![
            format!("a*⋆a identity on {} samples: {}", samples.len(), if all_hold { "ok" } else { "FAILED" }),
            format!("positivity probe: {}", if probe.passed() { "ok" } else { "FAILED" }),
        ],
        result: json!({
            "samples": samples.iter().map(|p| p.to_json(vars)).collect::<Vec<_>>(),
            "identity": identities,
            "probe": probe,
        }),
    })
}
