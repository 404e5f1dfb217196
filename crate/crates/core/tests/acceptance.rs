mod common;

use std::collections::BTreeMap;
use std::time::Instant;

use common::{random_case, random_measurable_unit, random_partition, random_refinement, random_rv, Limits, DEFAULT_LIMITS};
use noise_core::dominance::{averaging_step, binomial_convolution, fosd_check};
use noise_core::inequalities::{bonferroni_operator, counterexample_harness};
use noise_core::operators::{
    equivalent_spectral_independence, exp_map, generalized_multiplier, is_multiplicative_integral, joining_correlation,
    noise_operator, noise_operator_bernoulli, reconstruct_from_inclusion, self_joining, spectral_independence_check,
    spectral_independence_from_integral, tail_bound_check, SpectralProbability,
};
use noise_core::scenarios::{
    classical_signs, first_chaos_decay, influential_vote_probability, rigidity_check, simplest_nonclassical, split_words,
    tweaked_nonclassical, VoterRule,
};
use noise_core::spectral::{first_chaos_additive, refine_compare};
use noise_core::{linalg, Elem, NoiseBooleanAlgebra, SpectralResolution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn rng(criterion: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(0x5eed_0000 + criterion)
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn fixed_algebras() -> Vec<NoiseBooleanAlgebra> {
    let mut out = Vec::new();
    for n in 1..=4 {
        out.push(classical_signs(n).unwrap().algebra().unwrap());
    }
    for (n, total) in [(1, 3), (2, 4), (3, 5)] {
        out.push(simplest_nonclassical(n, total).unwrap().algebra().unwrap());
        out.push(tweaked_nonclassical(n, total).unwrap().algebra().unwrap());
    }
    out.push(split_words(3, 1).unwrap().algebra().unwrap());
    out.push(noise_core::scenarios::voter_model(&VoterRule::majority(3).unwrap(), 1).unwrap().algebra().unwrap());
    out
}

fn c1_spectral_identity() -> Outcome {
    let mut rng = rng(1);
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let case = random_case(&mut rng, &DEFAULT_LIMITS);
        let res = SpectralResolution::resolve(&case.algebra).map_err(|e| e.to_string())?;
        let f = random_rv(&mut rng, case.space.len());
        let mu = res.spectral_measure(&f).map_err(|e| e.to_string())?;
        for x in case.algebra.elems() {
            let direct = case.space.norm_sq(&case.algebra.cond_exp(&f, x).unwrap());
            worst = worst.max((mu.below(x) - direct).abs());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(worst < 1e-9 && secs < 30.0, format!("max error {worst:.2e}, {secs:.2}s"))
}

fn c2_completeness() -> Outcome {
    let mut rng = rng(2);
    let mut algebras = fixed_algebras();
    for _ in 0..50 {
        algebras.push(random_case(&mut rng, &DEFAULT_LIMITS).algebra);
    }
    let mut worst_dist: f64 = 0.0;
    for b in &algebras {
        let res = SpectralResolution::resolve(b).map_err(|e| e.to_string())?;
        let total: usize = res.dims().iter().sum();
        if total != b.space().len() {
            return Err(format!("dimensions sum to {total}, |Ω| = {}", b.space().len()));
        }
        let additive = first_chaos_additive(b).map_err(|e| e.to_string())?;
        let chaos = res.chaos_space(1);
        if additive.len() != chaos.len() {
            return Err(format!("first chaos dims {} vs {}", additive.len(), chaos.len()));
        }
        worst_dist = worst_dist.max(linalg::subspace_distance(b.space().probs(), &additive, &chaos));
    }
    check(worst_dist < 1e-8, format!("{} algebras, first chaos distance {worst_dist:.2e}", algebras.len()))
}

fn multisets(len: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for rest in multisets(len, k - 1) {
        let lo = rest.last().copied().unwrap_or(0);
        for i in lo..len {
            let mut t = rest.clone();
            t.push(i);
            out.push(t);
        }
    }
    out
}

fn c3_bonferroni() -> Outcome {
    let mut rng = rng(3);
    let limits = Limits { max_atoms: 4, max_outcomes: 64, max_factors: 6 };
    let mut tuples = 0usize;
    let mut min_eig = f64::INFINITY;
    let mut worst_low: f64 = 0.0;
    for _ in 0..50 {
        let case = random_case(&mut rng, &limits);
        let res = SpectralResolution::resolve(&case.algebra).map_err(|e| e.to_string())?;
        let elems: Vec<Elem> = case.algebra.elems().collect();
        for n in 1..=4 {
            for t in multisets(elems.len(), n) {
                let xs: Vec<Elem> = t.iter().map(|&i| elems[i]).collect();
                let r = bonferroni_operator(&res, &xs).map_err(|e| e.to_string())?;
                tuples += 1;
                min_eig = min_eig.min(r.min_eigenvalue);
                worst_low = worst_low.max(r.low_chaos_residual);
                if r.equality_everywhere != r.containment_witness.is_some() {
                    return Err(format!("equality/containment mismatch for {xs:?}"));
                }
            }
        }
    }
    let cx = counterexample_harness().map_err(|e| e.to_string())?;
    let ok = min_eig >= -1e-9 && worst_low < 1e-9 && (cx.deficit + 0.5).abs() <= 1e-12;
    check(
        ok,
        format!("{tuples} tuples, min eigenvalue {min_eig:.2e}, low-chaos residual {worst_low:.2e}, counterexample deficit {}", cx.deficit),
    )
}

fn is_dyadic(b: &NoiseBooleanAlgebra) -> bool {
    b.space().probs().iter().all(|p| {
        let scaled = p * 65536.0;
        (scaled - scaled.round()).abs() < 1e-9
    })
}

fn c4_semigroup() -> Outcome {
    let mut rng = rng(4);
    let mut composition: f64 = 0.0;
    let mut bernoulli: f64 = 0.0;
    let mut quadratic: f64 = 0.0;
    for _ in 0..30 {
        let case = random_case(&mut rng, &DEFAULT_LIMITS);
        let res = SpectralResolution::resolve(&case.algebra).unwrap();
        let (s, t) = (rng.gen_range(0.0..3.0), rng.gen_range(0.0..3.0));
        let us = noise_operator(&res, s).unwrap();
        let ut = noise_operator(&res, t).unwrap();
        let ust = noise_operator(&res, s + t).unwrap();
        composition = composition.max(us.compose(&ut).max_abs_diff(&ust));
    }
    for b in fixed_algebras().iter().filter(|b| is_dyadic(b)) {
        let res = SpectralResolution::resolve(b).unwrap();
        for t in [0.0, 0.3, 1.0, 2.5] {
            let a = noise_operator(&res, t).unwrap();
            let c = noise_operator_bernoulli(b, t).unwrap();
            bernoulli = bernoulli.max(a.max_abs_diff(&c));
        }
    }
    for _ in 0..100 {
        let case = random_case(&mut rng, &DEFAULT_LIMITS);
        let res = SpectralResolution::resolve(&case.algebra).unwrap();
        let f = random_rv(&mut rng, case.space.len());
        let t = rng.gen_range(0.0..4.0);
        let lhs = case.space.inner(&f, &noise_operator(&res, t).unwrap().apply(&f));
        let mu = res.spectral_measure(&f).unwrap();
        let rhs = mu.integrate(|s| (-t * s.count() as f64).exp());
        quadratic = quadratic.max((lhs - rhs).abs());
    }
    check(
        composition < 1e-10 && bernoulli < 1e-12 && quadratic < 1e-9,
        format!("composition {composition:.2e}, bernoulli {bernoulli:.2e}, quadratic form {quadratic:.2e}"),
    )
}

fn c5_joining() -> Outcome {
    let mut rng = rng(5);
    let limits = Limits { max_atoms: 5, max_outcomes: 128, max_factors: 6 };
    let (mut corr, mut marg, mut sym): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for _ in 0..100 {
        let case = random_case(&mut rng, &limits);
        let res = SpectralResolution::resolve(&case.algebra).unwrap();
        let parts = random_partition(&mut rng, &case.algebra);
        let rho: Vec<f64> = parts.iter().map(|_| rng.gen_range(0.0..=1.0)).collect();
        let j = self_joining(&case.algebra, &parts, &rho).map_err(|e| e.to_string())?;
        let f = random_rv(&mut rng, case.space.len());
        let c = joining_correlation(&j, &f, &f);
        let op = noise_core::operators::generalized_operator(&res, &parts, &rho).unwrap();
        let via_op = case.space.inner(&f, &op.apply(&f));
        let via_mu = res.spectral_measure(&f).unwrap().integrate(|s| generalized_multiplier(&parts, &rho, s));
        corr = corr.max((c - via_op).abs()).max((c - via_mu).abs());
        let p = case.space.probs();
        for (a, b) in j.left_marginal().iter().chain(j.right_marginal().iter()).zip(p.iter().chain(p.iter())) {
            marg = marg.max((a - b).abs());
        }
        sym = sym.max(j.asymmetry());
    }
    check(
        corr < 1e-9 && marg < 1e-12 && sym < 1e-12,
        format!("correlation {corr:.2e}, marginals {marg:.2e}, asymmetry {sym:.2e}"),
    )
}

/// Spectral-independence probabilities produced by criterion 6, reused by 7.
fn independence_samples(rng: &mut ChaCha8Rng) -> Result<Vec<(SpectralResolution, SpectralProbability)>, String> {
    let mut out = Vec::new();
    for _ in 0..40 {
        let case = random_case(rng, &DEFAULT_LIMITS);
        let res = SpectralResolution::resolve(&case.algebra).map_err(|e| e.to_string())?;
        // exp of a random first-chaos element
        let basis = res.chaos_space(1);
        let mut h = noise_core::RandomVariable::zeros(case.space.len());
        for e in &basis {
            h.axpy(rng.gen_range(-0.4..0.4), e);
        }
        let f = exp_map(&res, &h).map_err(|e| e.to_string())?;
        if !is_multiplicative_integral(&case.algebra, &f).map_err(|e| e.to_string())? {
            return Err("exp of a first-chaos element is not multiplicative".into());
        }
        let nu = spectral_independence_from_integral(&res, &f).map_err(|e| e.to_string())?;
        out.push((res.clone(), nu));
        // reconstruction from inclusion probabilities
        let q: Vec<f64> = (0..case.algebra.n_atoms()).map(|_| rng.gen_range(0.0..0.95)).collect();
        let g = reconstruct_from_inclusion(&res, &q).map_err(|e| e.to_string())?;
        let nu_g = spectral_independence_from_integral(&res, &g).map_err(|e| e.to_string())?;
        let want = SpectralProbability::from_inclusion(&q).unwrap();
        if nu_g.max_abs_diff(&want) > 1e-9 {
            return Err(format!("reconstruction off by {:.2e}", nu_g.max_abs_diff(&want)));
        }
        out.push((res.clone(), nu_g));
        let (_, nu_eq) = equivalent_spectral_independence(&res).map_err(|e| e.to_string())?;
        if nu_eq.masses().iter().any(|&m| m <= 0.0) {
            return Err("equivalent witness is not fully supported".into());
        }
        out.push((res, nu_eq));
    }
    Ok(out)
}

fn c6_spectral_independence() -> Outcome {
    let samples = independence_samples(&mut rng(6))?;
    let mut failures = 0;
    for (res, nu) in &samples {
        if !spectral_independence_check(res, nu, 1e-9).map_err(|e| e.to_string())? {
            failures += 1;
        }
    }
    check(failures == 0, format!("{} probabilities, {failures} failed the independence check", samples.len()))
}

fn c7_tail_bound() -> Outcome {
    let samples = independence_samples(&mut rng(6))?;
    let mut checks = 0;
    let mut worst = f64::INFINITY;
    for (res, nu) in &samples {
        for m in 0..=res.algebra().n_atoms() {
            let t = tail_bound_check(res, nu, m).map_err(|e| e.to_string())?;
            checks += 1;
            worst = worst.min(t.lhs - t.rhs);
        }
    }
    check(worst >= -1e-12, format!("{checks} checks, min slack {worst:.2e}"))
}

fn c8_fosd() -> Outcome {
    let mut checks = 0usize;
    let mut pair_gap: f64 = 0.0;
    let grid: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
    for n in 1..=4u32 {
        for code in 0..11usize.pow(n) {
            let p: Vec<f64> = (0..n).map(|i| grid[code / 11usize.pow(i) % 11]).collect();
            let r = fosd_check(&p).map_err(|e| e.to_string())?;
            checks += 1;
            if !r.pass {
                return Err(format!("dominance fails for {p:?}"));
            }
            if n == 2 {
                pair_gap = pair_gap.max((r.pmf.cdf()[1] - r.dominated_pmf.cdf()[1]).abs());
            }
        }
    }
    let mut rng = rng(8);
    for _ in 0..1000 {
        let n = rng.gen_range(1..=8);
        let p: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..=1.0)).collect();
        checks += 1;
        if !fosd_check(&p).map_err(|e| e.to_string())?.pass {
            return Err(format!("dominance fails for {p:?}"));
        }
    }
    let example = binomial_convolution(&[0.2, 0.8]).unwrap();
    let ok = pair_gap <= 1e-12 && (example.cdf()[1] - 0.84).abs() < 1e-12;
    check(ok, format!("{checks} vectors, pair CDF gap at 1: {pair_gap:.2e}"))
}

fn c9_variance_halving() -> Outcome {
    let mut rng = rng(9);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let n = rng.gen_range(3..=12);
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let step = averaging_step(&x).map_err(|e| e.to_string())?;
        if !step.halves {
            return Err(format!("no halving for {x:?}"));
        }
        worst = worst.max(step.ratio());
    }
    check(worst <= 0.5 + 1e-12, format!("1000 vectors, max ratio {worst:.4}"))
}

fn c10_voter() -> Outcome {
    let start = Instant::now();
    let maj = VoterRule::majority(3).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for d in 1..=2 {
        let decay = first_chaos_decay(&maj, d).map_err(|e| e.to_string())?;
        worst = worst.max((decay - 0.75f64.powi(d as i32)).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    let rigid = rigidity_check(&maj);
    let p = influential_vote_probability(&maj);
    check(
        worst < 1e-9 && secs < 10.0 && rigid && (p - 0.5).abs() < 1e-12,
        format!("decay error {worst:.2e} in {secs:.2}s, rigid {rigid}, influential probability {p}"),
    )
}

fn c11_split_words() -> Outcome {
    let sc = split_words(3, 1).map_err(|e| e.to_string())?;
    let b = sc.algebra().map_err(|e| e.to_string())?;
    let res = SpectralResolution::resolve(&b).map_err(|e| e.to_string())?;
    let tail = sc.elem(&b, "tail").map_err(|e| e.to_string())?;
    let mu = res.spectral_measure(sc.rv("X1_1").map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for s in res.points() {
        let want = if s.contains(tail) { 0.25 } else { 0.0 };
        worst = worst.max((mu.mass(s) - want).abs());
    }
    check(worst < 1e-12, format!("max deviation {worst:.2e}"))
}

fn c12_refinement() -> Outcome {
    let mut rng = rng(12);
    let mut failures = 0;
    for _ in 0..100 {
        let case = random_case(&mut rng, &DEFAULT_LIMITS);
        let fine = random_refinement(&mut rng, &case);
        let coarse_res = SpectralResolution::resolve(&case.algebra).unwrap();
        let fine_res = SpectralResolution::resolve(&fine).unwrap();
        let f = random_rv(&mut rng, case.space.len());
        if !refine_compare(&coarse_res, &fine_res, &f).map_err(|e| e.to_string())?.holds {
            failures += 1;
        }
    }
    check(failures == 0, format!("100 refinements, {failures} failures"))
}

fn c13_pushforward() -> Outcome {
    let mut rng = rng(13);
    let limits = Limits { max_atoms: 4, max_outcomes: 256, max_factors: 6 };
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    while cases < 60 {
        let case = random_case(&mut rng, &limits);
        let b = &case.algebra;
        let n_atoms = b.n_atoms();
        let n = rng.gen_range(1..=3usize).min(n_atoms.max(1));
        // independency: disjoint elements, from a random assignment of atoms
        let mut xs = vec![Elem::ZERO; n];
        for a in 0..n_atoms {
            let slot = rng.gen_range(0..=n);
            if slot < n {
                xs[slot] = xs[slot].join(Elem::atom(a));
            }
        }
        let res = SpectralResolution::resolve(b).unwrap();
        let fs: Vec<_> = xs.iter().map(|&x| random_measurable_unit(&mut rng, &case.space, b.field(x))).collect();
        let product = fs.iter().skip(1).fold(fs[0].clone(), |acc, f| &acc * f);
        let mu = res.spectral_measure(&product).unwrap();
        let mus: Vec<_> = fs.iter().map(|f| res.spectral_measure(f).unwrap()).collect();
        let mut pushed: BTreeMap<Vec<Elem>, f64> = BTreeMap::new();
        for s in res.points() {
            *pushed.entry(xs.iter().map(|&x| s.meet(x)).collect()).or_default() += mu.mass(s);
        }
        let top = b.top();
        let mut tuple = vec![0u32; n];
        loop {
            let key: Vec<Elem> = tuple.iter().map(|&m| Elem(m)).collect();
            let want: f64 = key.iter().zip(&mus).map(|(s, m)| m.mass(*s)).product();
            let got = pushed.get(&key).copied().unwrap_or(0.0);
            worst = worst.max((got - want).abs());
            let mut i = 0;
            while i < n {
                tuple[i] += 1;
                if tuple[i] <= top.0 {
                    break;
                }
                tuple[i] = 0;
                i += 1;
            }
            if i == n {
                break;
            }
        }
        cases += 1;
    }
    check(worst < 1e-9, format!("{cases} independencies, max deviation {worst:.2e}"))
}

fn main() {
    let criteria: [Criterion; 13] = [
        ("spectral identity", c1_spectral_identity),
        ("completeness and first chaos", c2_completeness),
        ("bonferroni positivity", c3_bonferroni),
        ("noise semigroup", c4_semigroup),
        ("self-joining correlation", c5_joining),
        ("spectral independence", c6_spectral_independence),
        ("tail bound", c7_tail_bound),
        ("first-order dominance", c8_fosd),
        ("variance halving", c9_variance_halving),
        ("voter model decay", c10_voter),
        ("split-words spectrum", c11_split_words),
        ("refinement monotonicity", c12_refinement),
        ("pushforward product", c13_pushforward),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("criterion {:>2} {name}: PASS ({detail})", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} {name}: FAIL ({detail})", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
