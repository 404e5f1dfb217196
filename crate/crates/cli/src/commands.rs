use std::fmt::Write as _;

use clap::Args;
use noise_core::dominance::{averaging_step, exploration, fosd_check, level_independence};
use noise_core::inequalities::{
    bonferroni_independent, bonferroni_operator, bonferroni_partial, bonferroni_truncated, counterexample_harness,
    influence_inequality_check,
};
use noise_core::noisebool::lattice_closure;
use noise_core::operators::{
    equivalent_spectral_independence, generalized_multiplier, generalized_operator, joining_correlation,
    joining_correlation_mc, self_joining, spectral_independence_check, tail_bound_check, SpectralProbability,
    DEFAULT_JOINING_CAP,
};
use noise_core::scenarios::Scenario;
use noise_core::spectral::{first_chaos_additive, functionals_jh1, influence as influence_of, sqrt_influence};
use noise_core::{linalg, verify_axioms, Elem, NoiseBooleanAlgebra, SpectralResolution};
use serde::Serialize;
use serde_json::{json, Value};

use crate::load;
use crate::{Failure, Format, GlobalArgs};

const VERIFY_CLOSURE_LIMIT: usize = 4096;
const FIRST_CHAOS_CHECK_CAP: usize = 1024;

#[derive(Args)]
pub struct RvArgs {
    /// Random variable: `*`-joined names from the scenario, `1` for the
    /// constant.
    #[arg(long)]
    pub rv: String,
    /// List every spectral point, not only the charged ones.
    #[arg(long)]
    pub all: bool,
}

#[derive(Args)]
pub struct SemigroupArgs {
    #[arg(long)]
    pub rv: String,
    /// Comma-separated times; `inf` is allowed.
    #[arg(long, default_value = "0,0.5,1,2,inf")]
    pub t: String,
}

#[derive(Args)]
pub struct JoiningArgs {
    #[arg(long)]
    pub rv: String,
    /// A part of the partition of unity as `+`-joined field names;
    /// repeatable. Defaults to the atoms.
    #[arg(long = "part")]
    pub parts: Vec<String>,
    /// Comma-separated correlations, one per part (or a single value).
    #[arg(long)]
    pub rho: String,
    /// Samples for the Monte-Carlo fallback.
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
}

#[derive(Args)]
pub struct BonferroniArgs {
    /// Tuple entry as `+`-joined field names; repeatable. Defaults to the
    /// atoms.
    #[arg(long = "x")]
    pub xs: Vec<String>,
    /// Also check the truncated sum at this order.
    #[arg(long)]
    pub truncate: Option<usize>,
    /// Also report the partial-sum witness at this order.
    #[arg(long)]
    pub partial: Option<usize>,
    /// Use the form for an independency.
    #[arg(long)]
    pub independent: bool,
    /// Also check the influence form.
    #[arg(long)]
    pub influence: bool,
    /// Run the four-point counterexample instead (no scenario needed).
    #[arg(long)]
    pub counterexample: bool,
}

#[derive(Args)]
pub struct DominanceArgs {
    /// Comma-separated success probabilities.
    #[arg(long)]
    pub p: Option<String>,
    /// Comma-separated vector for one averaging step.
    #[arg(long)]
    pub average: Option<String>,
}

#[derive(Args)]
pub struct ExploreArgs {
    /// Use the normalized spectral measure of this random variable.
    #[arg(long)]
    pub rv: Option<String>,
    /// Comma-separated inclusion probabilities, one per atom.
    #[arg(long)]
    pub q: Option<String>,
}

fn to_json<T: Serialize>(value: &T) -> Result<String, Failure> {
    serde_json::to_string_pretty(value).map(|s| s + "\n").map_err(|e| Failure::Compute(e.to_string()))
}

fn float(v: f64) -> String {
    format!("{v:.16e}")
}

fn json_only(g: &GlobalArgs, command: &str) -> Result<(), Failure> {
    if g.format == Some(Format::Csv) {
        return Err(Failure::Load(format!("{command} has no CSV output")));
    }
    Ok(())
}

fn resolved(sc: &Scenario) -> Result<(NoiseBooleanAlgebra, SpectralResolution), Failure> {
    let b = load::algebra(sc)?;
    let res = SpectralResolution::resolve(&b)?;
    Ok((b, res))
}

pub fn scenario(g: &GlobalArgs) -> Result<String, Failure> {
    json_only(g, "scenario")?;
    let sc = load::scenario(g)?;
    Ok(sc.to_json()? + "\n")
}

#[derive(Serialize)]
struct Check {
    name: String,
    pass: bool,
    detail: String,
}

pub fn verify(g: &GlobalArgs) -> Result<String, Failure> {
    json_only(g, "verify")?;
    let sc = load::scenario(g)?;
    let atoms: Vec<_> = sc.atoms.iter().map(|a| sc.field(a).cloned()).collect::<Result<_, _>>()?;
    let closure = lattice_closure(&sc.space, &atoms, VERIFY_CLOSURE_LIMIT)?;
    let report = verify_axioms(&sc.space, &closure);
    if !report.passes() {
        let out = json!({
            "passes": false,
            "failed_axioms": report.failed_axioms(),
            "failures": report.failures,
            "checks": [],
        });
        return Err(Failure::Invariant(serde_json::to_string_pretty(&out).expect("json value")));
    }
    let mut checks = Vec::new();
    let b = match sc.algebra() {
        Ok(b) => b,
        Err(e) => {
            let out = json!({
                "passes": false,
                "failed_axioms": [],
                "failures": [],
                "checks": [Check { name: "independency".into(), pass: false, detail: e.to_string() }],
            });
            return Err(Failure::Invariant(serde_json::to_string_pretty(&out).expect("json value")));
        }
    };
    let res = SpectralResolution::resolve(&b)?;
    let space = b.space();

    let total: usize = res.dims().iter().sum();
    checks.push(Check {
        name: "completeness".into(),
        pass: total == space.len(),
        detail: format!("sum of dims {total}, outcomes {}", space.len()),
    });

    if space.len() <= FIRST_CHAOS_CHECK_CAP {
        let additive = first_chaos_additive(&b)?;
        let chaos = res.chaos_space(1);
        let dist = linalg::subspace_distance(space.probs(), &additive, &chaos);
        checks.push(Check {
            name: "first-chaos".into(),
            pass: additive.len() == chaos.len() && dist < 1e-8,
            detail: format!("dims {} and {}, distance {dist:.3e}", additive.len(), chaos.len()),
        });
    }

    let mut additive_ok = true;
    for parts in b.partitions_of_unity() {
        for s in res.points() {
            let split: usize = parts.iter().map(|p| res.counting(s.meet(*p))).sum();
            additive_ok &= split == res.counting(s);
        }
    }
    checks.push(Check {
        name: "counting-additivity".into(),
        pass: additive_ok,
        detail: format!("{} partitions of unity", b.partitions_of_unity().len()),
    });

    let mut worst: f64 = 0.0;
    for f in sc.rvs.values() {
        let mu = res.spectral_measure(f)?;
        for x in b.elems() {
            worst = worst.max((mu.below(x) - space.norm_sq(&b.cond_exp(f, x)?)).abs());
        }
    }
    checks.push(Check {
        name: "spectral-identity".into(),
        pass: worst < 1e-9,
        detail: format!("{} random variables, max error {worst:.3e}", sc.rvs.len()),
    });

    let passes = checks.iter().all(|c| c.pass);
    let out = json!({ "passes": passes, "failed_axioms": [], "failures": [], "checks": checks });
    let text = serde_json::to_string_pretty(&out).expect("json value");
    if passes {
        Ok(text + "\n")
    } else {
        Err(Failure::Invariant(text))
    }
}

pub fn spectral(g: &GlobalArgs, a: &RvArgs) -> Result<String, Failure> {
    let sc = load::scenario(g)?;
    let f = load::rv(&sc, &a.rv)?;
    let (b, res) = resolved(&sc)?;
    let mu = res.spectral_measure(&f)?;
    let norms: Vec<f64> = res.chaos_decompose(&f)?.iter().map(|c| b.space().norm_sq(c)).collect();
    let shown: Vec<Elem> = res.points().filter(|s| a.all || mu.mass(*s) > g.tol * mu.total()).collect();
    match g.format.unwrap_or(Format::Json) {
        Format::Csv => {
            let mut out = String::from("element,atoms,k,dim,mass\n");
            for &s in &shown {
                let names = load::atom_names(&sc, s).join("|");
                writeln!(out, "{},{names},{},{},{}", s.0, s.count(), res.dim(s), float(mu.mass(s))).unwrap();
            }
            Ok(out)
        }
        Format::Json => {
            let points: Vec<Value> = shown
                .iter()
                .map(|&s| {
                    json!({
                        "element": s.0,
                        "atoms": load::atom_names(&sc, s),
                        "k": s.count(),
                        "dim": res.dim(s),
                        "mass": mu.mass(s),
                    })
                })
                .collect();
            to_json(&json!({ "rv": a.rv, "total": mu.total(), "points": points, "chaos_norms": norms }))
        }
    }
}

pub fn chaos(g: &GlobalArgs, a: &RvArgs) -> Result<String, Failure> {
    let sc = load::scenario(g)?;
    let f = load::rv(&sc, &a.rv)?;
    let (b, res) = resolved(&sc)?;
    let parts = res.chaos_decompose(&f)?;
    let rows: Vec<(usize, usize, f64)> = parts
        .iter()
        .enumerate()
        .map(|(k, c)| (k, res.level(k).iter().map(|s| res.dim(*s)).sum(), b.space().norm_sq(c)))
        .collect();
    match g.format.unwrap_or(Format::Json) {
        Format::Csv => {
            let mut out = String::from("k,dim,norm_sq\n");
            for (k, dim, n) in rows {
                writeln!(out, "{k},{dim},{}", float(n)).unwrap();
            }
            Ok(out)
        }
        Format::Json => {
            let levels: Vec<Value> =
                rows.iter().map(|(k, dim, n)| json!({ "k": k, "dim": dim, "norm_sq": n })).collect();
            let components: Vec<&[f64]> = parts.iter().map(|c| c.values()).collect();
            to_json(&json!({ "rv": a.rv, "levels": levels, "components": components }))
        }
    }
}

pub fn influence(g: &GlobalArgs, a: &RvArgs) -> Result<String, Failure> {
    let sc = load::scenario(g)?;
    let f = load::rv(&sc, &a.rv)?;
    let b = load::algebra(&sc)?;
    let mut rows = Vec::new();
    for x in b.elems() {
        rows.push((x, influence_of(&b, x, &f)?, sqrt_influence(&b, x, &f)?));
    }
    let (j, h1) = functionals_jh1(&b, &f)?;
    match g.format.unwrap_or(Format::Json) {
        Format::Csv => {
            let mut out = String::from("element,atoms,influence,sqrt_influence\n");
            for (x, inf, sq) in rows {
                writeln!(out, "{},{},{},{}", x.0, load::atom_names(&sc, x).join("|"), float(inf), float(sq)).unwrap();
            }
            Ok(out)
        }
        Format::Json => {
            let rows: Vec<Value> = rows
                .iter()
                .map(|(x, inf, sq)| {
                    json!({ "element": x.0, "atoms": load::atom_names(&sc, *x), "influence": inf, "sqrt_influence": sq })
                })
                .collect();
            to_json(&json!({ "rv": a.rv, "influences": rows, "j": j, "h1": h1 }))
        }
    }
}

pub fn semigroup(g: &GlobalArgs, a: &SemigroupArgs) -> Result<String, Failure> {
    let sc = load::scenario(g)?;
    let f = load::rv(&sc, &a.rv)?;
    let ts = load::parse_floats(&a.t)?;
    if let Some(t) = ts.iter().find(|t| t.is_nan() || **t < 0.0) {
        return Err(Failure::Load(format!("time {t} is negative")));
    }
    let (_, res) = resolved(&sc)?;
    let curve = noise_core::operators::decay_curve(&res, &f, &ts)?;
    match g.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut out = String::from("t,value\n");
            for (t, v) in curve {
                writeln!(out, "{},{}", float(t), float(v)).unwrap();
            }
            Ok(out)
        }
        Format::Json => {
            let rows: Vec<Value> = curve
                .iter()
                .map(|(t, v)| json!({ "t": if t.is_finite() { json!(t) } else { json!("inf") }, "value": v }))
                .collect();
            to_json(&json!({ "rv": a.rv, "curve": rows }))
        }
    }
}

pub fn joining(g: &GlobalArgs, a: &JoiningArgs) -> Result<String, Failure> {
    json_only(g, "joining")?;
    let sc = load::scenario(g)?;
    let f = load::rv(&sc, &a.rv)?;
    let (b, res) = resolved(&sc)?;
    let parts: Vec<Elem> = if a.parts.is_empty() {
        b.atom_elems()
    } else {
        a.parts.iter().map(|p| load::elem(&sc, &b, p)).collect::<Result<_, _>>()?
    };
    let mut rho = load::parse_floats(&a.rho)?;
    if rho.len() == 1 && parts.len() > 1 {
        rho = vec![rho[0]; parts.len()];
    }
    let space = b.space();
    let u = generalized_operator(&res, &parts, &rho)?;
    let u_rho_form = space.inner(&f, &u.apply(&f));
    let mu_form = res.spectral_measure(&f)?.integrate(|s| generalized_multiplier(&parts, &rho, s));
    let n = space.len();
    let (correlation, method, std_error) = if n.saturating_mul(n) <= DEFAULT_JOINING_CAP {
        (joining_correlation(&self_joining(&b, &parts, &rho)?, &f, &f), "exact", None)
    } else {
        let est = joining_correlation_mc(&b, &parts, &rho, &f, &f, a.samples, g.seed)?;
        (est.mean, "monte-carlo", Some(est.std_error))
    };
    let part_names: Vec<Vec<String>> = parts.iter().map(|p| load::atom_names(&sc, *p)).collect();
    let mut out = json!({
        "rv": a.rv,
        "parts": part_names,
        "rho": rho,
        "correlation": correlation,
        "u_rho_form": u_rho_form,
        "mu_form": mu_form,
        "method": method,
    });
    if let Some(se) = std_error {
        out["std_error"] = json!(se);
        out["samples"] = json!(a.samples);
        out["seed"] = json!(g.seed);
    }
    to_json(&out)
}

pub fn bonferroni(g: &GlobalArgs, a: &BonferroniArgs) -> Result<String, Failure> {
    json_only(g, "bonferroni")?;
    if a.counterexample {
        return to_json(&counterexample_harness()?);
    }
    let sc = load::scenario(g)?;
    let (b, res) = resolved(&sc)?;
    let xs: Vec<Elem> = if a.xs.is_empty() {
        b.atom_elems()
    } else {
        a.xs.iter().map(|x| load::elem(&sc, &b, x)).collect::<Result<_, _>>()?
    };
    let report = if a.independent { bonferroni_independent(&res, &xs)? } else { bonferroni_operator(&res, &xs)? };
    let mut holds = report.is_positive(g.tol) && report.equality_on_low_chaos;
    let mut out = json!({ "tuple": xs.iter().map(|x| load::atom_names(&sc, *x)).collect::<Vec<_>>(), "report": report });
    if let Some(m) = a.truncate {
        let t = bonferroni_truncated(&res, &xs, m)?;
        holds &= t.holds;
        out["truncated"] = json!(t);
    }
    if let Some(m) = a.partial {
        let w = bonferroni_partial(&res, &xs, m)?;
        out["partial"] = json!({
            "m": w.m,
            "min_eigenvalue": w.min_eigenvalue,
            "max_eigenvalue": w.max_eigenvalue,
            "fails_both_ways": w.fails_both_ways(),
            "negative": w.negative.as_ref().map(|v| v.values().to_vec()),
            "positive": w.positive.as_ref().map(|v| v.values().to_vec()),
        });
    }
    if a.influence {
        let r = influence_inequality_check(&res, &xs)?;
        holds &= r.holds && r.three_partition_holds;
        out["influence"] = json!(r);
    }
    out["holds"] = json!(holds);
    let text = to_json(&out)?;
    if holds {
        Ok(text)
    } else {
        Err(Failure::Invariant(text.trim_end().to_string()))
    }
}

pub fn dominance(g: &GlobalArgs, a: &DominanceArgs) -> Result<String, Failure> {
    let mut out = serde_json::Map::new();
    let mut pass = true;
    let mut csv = String::new();
    if let Some(p) = &a.p {
        let r = fosd_check(&load::parse_floats(p)?)?;
        pass &= r.pass;
        csv.push_str("k,pmf,dominated_pmf,cdf,dominated_cdf\n");
        let (c, dc) = (r.pmf.cdf(), r.dominated_pmf.cdf());
        for k in 0..c.len() {
            let row = [r.pmf.masses()[k], r.dominated_pmf.masses()[k], c[k], dc[k]].map(float).join(",");
            writeln!(csv, "{k},{row}").unwrap();
        }
        out.insert("pmf".into(), json!(r.pmf));
        out.insert("dominated_pmf".into(), json!(r.dominated_pmf));
        out.insert("geometric_mean".into(), json!(r.geometric_mean));
        out.insert("pass".into(), json!(r.pass));
    }
    if let Some(x) = &a.average {
        let step = averaging_step(&load::parse_floats(x)?).map_err(|e| Failure::Load(e.to_string()))?;
        pass &= step.halves;
        out.insert("averaging".into(), json!({ "ratio": step.ratio(), "step": step }));
    }
    if out.is_empty() {
        return Err(Failure::Load("dominance needs --p or --average".into()));
    }
    let text = match g.format.unwrap_or(Format::Json) {
        Format::Csv if a.p.is_some() && a.average.is_none() => csv,
        Format::Csv => return Err(Failure::Load("CSV output is only available for --p alone".into())),
        Format::Json => to_json(&Value::Object(out))?,
    };
    if pass {
        Ok(text)
    } else {
        Err(Failure::Invariant(text.trim_end().to_string()))
    }
}

pub fn explore(g: &GlobalArgs, a: &ExploreArgs) -> Result<String, Failure> {
    json_only(g, "explore")?;
    let sc = load::scenario(g)?;
    let (b, res) = resolved(&sc)?;
    let chain = match sc.chain_elems(&b).map_err(|e| Failure::Load(e.to_string()))? {
        Some(chain) => chain,
        None => vec![vec![b.top()], b.atom_elems()],
    };
    let (source, nu) = match (&a.rv, &a.q) {
        (Some(name), _) => {
            let f = load::rv(&sc, name)?;
            (format!("rv:{name}"), SpectralProbability::from_measure(&res.spectral_measure(&f)?)?)
        }
        (None, Some(q)) => ("inclusion".to_string(), SpectralProbability::from_inclusion(&load::parse_floats(q)?)?),
        (None, None) => ("equivalent".to_string(), equivalent_spectral_independence(&res)?.1),
    };
    let independent = spectral_independence_check(&res, &nu, g.tol.max(1e-9))?;
    let ex = exploration(&res, &chain, &nu)?;
    let monotone = ex.labels.monotone_exclusion_holds();
    let levels: Vec<Value> = chain
        .iter()
        .enumerate()
        .map(|(k, level)| {
            let (deviation, exclusion) = level_independence(&res, level, &nu);
            json!({
                "level": k,
                "atoms": level.iter().map(|e| load::atom_names(&sc, *e)).collect::<Vec<_>>(),
                "included_law": ex.included_law[k],
                "independence_deviation": deviation,
                "exclusion_product": exclusion,
            })
        })
        .collect();
    let mut tail = Vec::new();
    if independent {
        for m in 0..=b.n_atoms() {
            tail.push(tail_bound_check(&res, &nu, m)?);
        }
    }
    let holds = independent && ex.counts_match && monotone && tail.iter().all(|t| t.holds);
    let out = json!({
        "nu": source,
        "spectral_independence": independent,
        "counts_match": ex.counts_match,
        "monotone_exclusion": monotone,
        "levels": levels,
        "tail_bounds": tail,
        "holds": holds,
    });
    let text = to_json(&out)?;
    if holds {
        Ok(text)
    } else {
        Err(Failure::Invariant(text.trim_end().to_string()))
    }
}
