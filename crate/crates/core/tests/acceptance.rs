//! Acceptance suite: one PASS/FAIL line per criterion.

use std::process::ExitCode;
use std::time::Instant;

use maxcsp_core::dictator::{run_test, TestConfig, TestFunction};
use maxcsp_core::exact::ratio;
use maxcsp_core::fourier::{is_fully_approximable, Predicate};
use maxcsp_core::instance::{self, brute_force, evaluate, random_assignment};
use maxcsp_core::measure::{self, Measure, PairwiseSearch};
use maxcsp_core::quadsign::{self, Surd};
use maxcsp_core::report::census;
use maxcsp_core::rounding::{self, empirical_pair_moment, pair_with_inner_product, SolveOptions};
use maxcsp_core::separate::{self, pair_index, verify_separator};
use maxcsp_core::{predicates, Error};
use rayon::prelude::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

type Check = fn() -> Result<Outcome, Error>;

fn main() -> ExitCode {
    let criteria: [(&str, Check); 11] = [
        ("1 dichotomy over all arity-4 predicates", dichotomy),
        ("2 named pairwise-independence verdicts", named_verdicts),
        ("3 GLST separator", glst_separator),
        ("4 OR/XOR and EQ/NEQ gadgets", gadgets),
        ("5 planted GLST usefulness", planted_glst),
        ("6 rounding moment law", moment_law),
        ("7 positive case", positive_case),
        ("8 resistance-condition checker", resistance),
        ("9 sign-of-quadratic construction", quadsign_check),
        ("10 fully approximable predicates", fully_approximable),
        ("11 dictatorship test completeness", dictator_completeness),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let out = check().unwrap_or_else(|e| outcome(false, format!("error: {e}")));
        let verdict = if out.pass { "PASS" } else { "FAIL" };
        println!("{verdict} criterion {name}: {} [{:.2?}]", out.detail, start.elapsed());
        failed += !out.pass as usize;
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}

fn dichotomy() -> Result<Outcome, Error> {
    let results: Vec<Result<(bool, bool), Error>> = (0u64..1 << 16)
        .into_par_iter()
        .filter(|&bits| bits != 0)
        .map(|bits| {
            let p = Predicate::from_bits(4, bits)?;
            let witness = match measure::find_pairwise_independent(&p)? {
                PairwiseSearch::Witness(mu) => {
                    measure::verify_pairwise_independent(&p, &mu)?;
                    true
                }
                PairwiseSearch::Separated { .. } => false,
            };
            let separator = match separate::separating_quadratic(&p)? {
                Some(sep) => {
                    let m = verify_separator(&p, &sep.quadratic, 1e-9)?;
                    if m < 1.0 - 1e-9 {
                        return Err(Error::Consistency(format!("margin {m} for {p}")));
                    }
                    true
                }
                None => false,
            };
            Ok((witness, separator))
        })
        .collect();
    let mut pi = 0;
    let mut sep = 0;
    let mut both_or_neither = 0;
    for r in results {
        let (w, s) = r?;
        pi += w as usize;
        sep += s as usize;
        both_or_neither += (w == s) as usize;
    }
    Ok(outcome(
        both_or_neither == 0 && pi + sep == 65535,
        format!("{pi} witnesses, {sep} separators, {both_or_neither} violations, empty table excluded"),
    ))
}

fn named_verdicts() -> Result<Outcome, Error> {
    let cases = [
        ("xor3", predicates::xor(3), true),
        ("xor4", predicates::xor(4), true),
        ("or3", predicates::or(3), true),
        ("glst", predicates::glst(), false),
        ("glst+", predicates::glst_plus(), false),
        ("eq2", predicates::eq2(), false),
        ("neq2", predicates::neq2(), false),
        ("nae3", predicates::nae(3), false),
    ];
    let mut wrong = Vec::new();
    for (name, p, want) in cases {
        let got = measure::find_pairwise_independent(&p)?.witness().is_some();
        if got != want {
            wrong.push(name);
        }
    }
    Ok(outcome(wrong.is_empty(), format!("mismatches: {wrong:?}")))
}

fn glst_separator() -> Result<Outcome, Error> {
    let p = predicates::glst();
    let sep = separate::separating_quadratic(&p)?
        .ok_or_else(|| Error::Consistency("no separator".into()))?;
    let q = &sep.quadratic;
    let (constant, coeffs) = q
        .exact_coeffs()
        .ok_or_else(|| Error::Consistency("separator not exact".into()))?;
    let pairs = [pair_index(4, 1, 2), pair_index(4, 1, 3), pair_index(4, 2, 3)];
    let lead = coeffs[4 + pairs[0]].clone();
    let shape_ok = constant == &ratio(0, 1)
        && lead < ratio(0, 1)
        && coeffs.iter().enumerate().all(|(s, c)| {
            if s >= 4 && pairs.contains(&(s - 4)) {
                *c == lead
            } else {
                *c == ratio(0, 1)
            }
        });
    let values: Vec<_> = p.accepted().iter().map(|&i| q.exact_eval_index(i)).collect();
    let ones = values.iter().filter(|v| v.as_ref() == Some(&ratio(1, 1))).count();
    Ok(outcome(
        shape_ok && ones == 8,
        format!("Q = {}, value 1 on {ones}/8 accepted", q.to_text().lines().skip(1).collect::<Vec<_>>().join(" ")),
    ))
}

fn gadgets() -> Result<Outcome, Error> {
    let g = instance::or_xor_gadget();
    let (or_v, _) = brute_force(&predicates::or(3).as_poly(), &g)?;
    let (xor_v, _) = brute_force(&predicates::xor(3).as_poly(), &g)?;
    let k4 = instance::complete_graph_gadget(4)?;
    let (eq_v, _) = brute_force(&predicates::eq2().as_poly(), &k4)?;
    let (neq_v, _) = brute_force(&predicates::neq2().as_poly(), &k4)?;
    let pass = or_v == 1.0 && xor_v == 0.5 && eq_v == 1.0 && neq_v == 2.0 / 3.0;
    Ok(outcome(pass, format!("OR/XOR ({or_v}, {xor_v}), EQ/NEQ on K4 ({eq_v}, {neq_v})")))
}

/// Uniform assignments averaged per instance for the trivial baseline.
const RANDOM_ASSIGNMENTS: u64 = 100;

struct PlantedRun {
    above: usize,
    values: Vec<f64>,
    random: Vec<f64>,
    slowest: f64,
}

fn planted_runs(
    p: &Predicate,
    build: impl Fn(u64) -> Result<maxcsp_core::Instance, Error>,
    solve: impl Fn(&maxcsp_core::Instance, &SolveOptions) -> Result<rounding::SolveReport, Error>,
) -> Result<PlantedRun, Error> {
    let mut run = PlantedRun { above: 0, values: vec![], random: vec![], slowest: 0.0 };
    for seed in 0..10u64 {
        let inst = build(seed)?;
        let start = Instant::now();
        let rep = solve(&inst, &SolveOptions { seed, ..SolveOptions::default() })?;
        run.slowest = run.slowest.max(start.elapsed().as_secs_f64());
        let q = separate::Quadratic::parse(&rep.separator, Some(p.arity()))?.to_poly();
        let gain = rep.value - rep.baseline;
        run.above += (gain >= 0.01) as usize;
        run.values.push(gain);
        let mut total = 0.0;
        for j in 0..RANDOM_ASSIGNMENTS {
            total += evaluate(&q, &inst, &random_assignment(inst.n(), 1000 * (seed + 1) + j))?;
        }
        run.random.push(total / RANDOM_ASSIGNMENTS as f64 - rep.baseline);
    }
    Ok(run)
}

fn fmt_list(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.3}")).collect();
    format!("[{}]", parts.join(", "))
}

fn planted_glst() -> Result<Outcome, Error> {
    let p = predicates::glst();
    let mu = Measure::uniform_on(4, &p.accepted())?;
    let run = planted_runs(
        &p,
        |seed| instance::planted_instance(&mu, 40, 2000, 0.05, seed),
        |inst, opts| rounding::solve_useful(inst, &p, opts),
    )?;
    let random_ok = run.random.iter().all(|v| v.abs() <= 0.07);
    Ok(outcome(
        run.above >= 9 && random_ok && run.slowest <= 60.0,
        format!(
            "{}/10 seeds ≥ 0.01, values {}, random {}, slowest {:.2}s",
            run.above,
            fmt_list(&run.values),
            fmt_list(&run.random),
            run.slowest
        ),
    ))
}

fn moment_law() -> Result<Outcome, Error> {
    let mut worst: f64 = f64::NEG_INFINITY;
    let mut cells = 0;
    let mut bad = 0;
    for (bi, b) in [1.5, 2.0, 2.5, 3.0].into_iter().enumerate() {
        for (ri, rho) in [-0.9, 0.0, 0.5, 0.9].into_iter().enumerate() {
            let vecs = pair_with_inner_product(rho);
            let (mean, se) = empirical_pair_moment(&vecs, b, 1_000_000, 100 + (4 * bi + ri) as u64);
            let slack = 2.0 * (-b * b / 2.0).exp() + 4.0 * se;
            let dev = (mean - rho / (b * b)).abs();
            worst = worst.max(dev / slack);
            cells += 1;
            bad += (dev > slack) as usize;
        }
    }
    Ok(outcome(bad == 0, format!("{cells} cells, {bad} outside bound, worst deviation/bound {worst:.3}")))
}

fn positive_case() -> Result<Outcome, Error> {
    let neq = predicates::neq2();
    let upc_neq = measure::find_uniformly_positively_correlated(&neq)?;
    let sep = separate::positive_separating_quadratic(&neq)?
        .ok_or_else(|| Error::Consistency("no positive separator for NEQ2".into()))?;
    separate::verify_positive_separator(&neq, &sep)?;
    let q = &sep.quadratic;
    let shape = q.exact_coeffs().map(|(c, v)| {
        c == &ratio(0, 1) && v[0] == ratio(0, 1) && v[1] == ratio(0, 1) && v[2] == ratio(-1, 1)
    }) == Some(true);
    let neq_ok = upc_neq.is_none() && shape && sep.r_star == 0.0 && sep.baseline == 0.0;

    let mu = Measure::uniform_on(2, &neq.accepted())?;
    let run = planted_runs(
        &neq,
        |seed| instance::planted_positive_instance(&mu, 40, 2000, 0.05, seed).map(|(i, _)| i),
        |inst, opts| rounding::positive_solve(inst, &neq, opts),
    )?;
    let random_ok = run.random.iter().all(|v| v.abs() <= 0.07);

    let eq_ok = measure::find_uniformly_positively_correlated(&predicates::eq2())?.is_some();
    let mut all_ones_bad = 0;
    let mut implication_bad = 0;
    let mut upc_checked = 0;
    for k in 1..=4usize {
        let rows: Vec<Result<(bool, bool, bool), Error>> = (1u64..1 << (1 << k))
            .into_par_iter()
            .map(|bits| {
                let p = Predicate::from_bits(k, bits)?;
                let pi = measure::find_pairwise_independent(&p)?.witness().is_some();
                let upc = measure::find_uniformly_positively_correlated(&p)?;
                if let Some(w) = &upc {
                    measure::verify_upc(&p, w)?;
                }
                Ok((p.accepts(0), pi, upc.is_some()))
            })
            .collect();
        for r in rows {
            let (ones, pi, upc) = r?;
            upc_checked += 1;
            all_ones_bad += (ones && !upc) as usize;
            implication_bad += (pi && !upc) as usize;
        }
    }
    Ok(outcome(
        neq_ok && run.above >= 9 && random_ok && run.slowest <= 60.0 && eq_ok && all_ones_bad == 0 && implication_bad == 0,
        format!(
            "NEQ2 Q = {}, r* = {}; {}/10 seeds ≥ E+ + 0.01, values {}, random {}; EQ2 UPC {eq_ok}; \
             {upc_checked} tables k ≤ 4: {all_ones_bad} all-ones misses, {implication_bad} PI⇏UPC",
            q.to_text().lines().skip(1).collect::<Vec<_>>().join(" "),
            sep.r_star,
            run.above,
            fmt_list(&run.values),
            fmt_list(&run.random)
        ),
    ))
}

fn resistance() -> Result<Outcome, Error> {
    let gp = predicates::glst_plus();
    let rep = measure::check_resistance(&gp, &gp.as_poly(), &measure::glst_measure())?;
    let v34 = rep
        .pairs
        .iter()
        .find(|v| v.pair == (3, 4))
        .ok_or_else(|| Error::Consistency("pair {3,4} missing".into()))?;
    let glst_ok = rep.pass && v34.signed_product == "-1/16" && v34.negative;
    let xo = predicates::xor_or4();
    let xo_ok = measure::check_resistance(&xo, &xo.as_poly(), &measure::xor_or4_measure())?.pass;
    let mut controls_fail = true;
    for p in [predicates::eq2(), predicates::neq2()] {
        let mu = Measure::uniform_on(2, &p.accepted())?;
        controls_fail &= !measure::check_resistance(&p, &p.as_poly(), &mu)?.pass;
    }
    Ok(outcome(
        glst_ok && xo_ok && controls_fail,
        format!(
            "GLST+ pass {} with P̂({{3,4}})·E[x3x4] = {}; x1⊕((x2⊕x3)∨x4) pass {xo_ok}; EQ2/NEQ2 controls rejected {controls_fail}",
            rep.pass, v34.signed_product
        ),
    ))
}

fn quadsign_check() -> Result<Outcome, Error> {
    let r = quadsign::verify_quadsign();
    let five = ["E[L1^2]", "E[L2^2]", "E[x1*L1]", "E[x1*L2]", "E[L1*L2]"];
    let five_ok = five.iter().all(|n| {
        r.check(n).is_some_and(|c| {
            let want: f64 = c.expected.parse().unwrap_or(f64::NAN);
            c.pass && (c.approx - want).abs() <= 1e-9
        })
    });
    let perturbed = quadsign::verify_quadsign_at(&Surd::rational(ratio(2, 25)));
    let control_fails = perturbed.check("E[L1*L2]").is_some_and(|c| !c.pass);
    Ok(outcome(
        r.pass && five_ok && control_fails,
        format!(
            "c = {} ≈ {:.4}, {} checks pass {}, support {}; c = 0.08 gives E[L1*L2] = {}",
            r.c,
            r.c_approx,
            r.checks.len(),
            r.pass,
            r.support_size,
            perturbed.check("E[L1*L2]").map(|c| c.value.as_str()).unwrap_or("?")
        ),
    ))
}

fn fully_approximable() -> Result<Outcome, Error> {
    let fa4 = is_fully_approximable(&predicates::fully_approximable4()).0;
    let neq = is_fully_approximable(&predicates::neq2()).0;
    let xor3 = is_fully_approximable(&predicates::xor(3)).0;
    let table = census(3, false)?;
    let balanced = (0u64..256)
        .filter(|&bits| {
            let count = |parity: u32| (0..8u32).filter(|&x| bits >> x & 1 == 1 && x.count_ones() % 2 == parity).count();
            count(0) == count(1)
        })
        .count() as u64;
    Ok(outcome(
        fa4 && neq && !xor3 && table.fully_approximable == balanced,
        format!(
            "fa4 {fa4}, NEQ2 {neq}, XOR3 {xor3}; arity-3 census {} vs balanced {balanced}",
            table.fully_approximable
        ),
    ))
}

fn dictator_completeness() -> Result<Outcome, Error> {
    let xor3 = predicates::xor(3);
    let cases = [
        ("XOR3", xor3.clone(), Measure::uniform_on(3, &xor3.accepted())?),
        ("GLST", predicates::glst(), measure::glst_measure()),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    let mut soundness = Vec::new();
    for (name, p, mu) in &cases {
        let obj = p.as_poly();
        for (ei, eps) in [0.05, 0.1].into_iter().enumerate() {
            let cfg = TestConfig::new(mu.clone(), 0.0, eps, 8, 1_000_000, 7 + ei as u64)?;
            let r = run_test(&obj, &TestFunction::Dictator(0), &cfg)?;
            let ok = r.estimate >= 1.0 - eps - r.ci;
            pass &= ok;
            parts.push(format!("{name} ε={eps}: {:.4}±{:.4}", r.estimate, r.ci));
        }
        let cfg = TestConfig::new(mu.clone(), 0.0, 0.1, 11, 1_000_000, 99)?;
        for f in [TestFunction::RandomFolded(5), TestFunction::Majority] {
            let r = run_test(&obj, &f, &cfg)?;
            let near = (r.estimate - p.density()).abs() <= r.ci + 0.05;
            soundness.push(format!("{name} {} {:.4} (E_P {}, within CI+0.05: {near})", f.name(), r.estimate, p.density()));
        }
    }
    Ok(outcome(pass, format!("{}; soundness (reported only): {}", parts.join(", "), soundness.join(", "))))
}
