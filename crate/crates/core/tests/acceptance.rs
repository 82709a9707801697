//! Acceptance checks, one line per criterion. Exits non-zero if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use ldpc_sdp::de::lp_baseline_sweep;
use ldpc_sdp::ensemble::{check_de_feasible, stability_lambda2_bound, CheckMode};
use ldpc_sdp::polynomial::{de_polynomial, lemma2_coefficients, multinomial_power};
use ldpc_sdp::solver::{Sense, SolveStatus, SolverOptions};
use ldpc_sdp::sos::{
    build_family_program, lift_to_real_line, solve_certified, verify_certificate, AffinePolynomialFamily,
    SosCertificate,
};
use ldpc_sdp::workflow::{
    cmd_optimize_lambda, cmd_threshold, cmd_verify, OptimizeLambdaArgs, ReportStatus, RunReport, ThresholdArgs,
    ThresholdMethod,
};
use ldpc_sdp::{DegreeDistribution, EnsembleSpec, Polynomial};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn dd(pairs: &[(usize, f64)]) -> DegreeDistribution {
    DegreeDistribution::new(pairs.iter().copied()).unwrap()
}

fn optimize(rho: DegreeDistribution, epsilon: f64, dv: usize) -> (RunReport, Duration) {
    let t = Instant::now();
    let r = cmd_optimize_lambda(&OptimizeLambdaArgs { rho, epsilon, max_var_degree: dv, tol: 1e-8 }).unwrap();
    (r, t.elapsed())
}

struct ReferenceCode {
    name: &'static str,
    check_degree: usize,
    epsilon: f64,
    dv: usize,
    rate: f64,
    gap: f64,
    stability_active: bool,
}

const CONSISTENT_CODES: [ReferenceCode; 4] = [
    ReferenceCode { name: "Code 1", check_degree: 4, epsilon: 0.64, dv: 5, rate: 0.3346, gap: 0.0708, stability_active: true },
    ReferenceCode { name: "Code 3", check_degree: 6, epsilon: 0.49, dv: 7, rate: 0.4922, gap: 0.0349, stability_active: false },
    ReferenceCode { name: "Code 4", check_degree: 7, epsilon: 0.38, dv: 5, rate: 0.593, gap: 0.0435, stability_active: true },
    ReferenceCode { name: "Code 5", check_degree: 8, epsilon: 0.33, dv: 5, rate: 0.6439, gap: 0.039, stability_active: true },
];

/// Optimiser outputs shared by several criteria.
struct Runs {
    codes: Vec<(&'static ReferenceCode, RunReport, Duration)>,
    code2: RunReport,
    two_tap: RunReport,
}

fn unit_interval_bound() -> Outcome {
    let t = Instant::now();
    let mut family = AffinePolynomialFamily::new(Polynomial::new(vec![1.0, 0.0, 1.0]));
    family.push("b", Polynomial::x());
    let prog = build_family_program(family, Sense::Maximize, &[1.0], &[(0.0, 1.0)]).map_err(|e| e.to_string())?;
    let c = solve_certified(&prog, &SolverOptions::default()).map_err(|e| e.to_string())?;
    let elapsed = t.elapsed();
    let b = c.solution.objective;
    ensure(c.is_certified(), || format!("status {:?}, certificate not valid", c.solution.status))?;
    ensure((b - 1.0).abs() <= 1e-6, || format!("b* = {b}"))?;
    ensure(elapsed < Duration::from_secs(1), || format!("took {elapsed:?}"))?;
    Ok(format!("b* = {b:.9} in {elapsed:?}"))
}

fn reference_designs(runs: &Runs) -> Outcome {
    let mut detail = Vec::new();
    for (code, r, elapsed) in &runs.codes {
        ensure(r.status == ReportStatus::Optimal, || format!("{}: status {:?} {:?}", code.name, r.status, r.notes))?;
        let (rate, gap) = (r.rate.unwrap(), r.gap.unwrap());
        ensure((rate - code.rate).abs() <= 2e-3, || format!("{}: rate {rate} vs {}", code.name, code.rate))?;
        ensure((gap - code.gap).abs() <= 2e-3, || format!("{}: gap {gap} vs {}", code.name, code.gap))?;
        let spec = r.ensemble.clone().unwrap();
        let de = check_de_feasible(&spec, CheckMode::Grid);
        ensure(de.feasible, || format!("{}: DE grid check fails at x = {}", code.name, de.worst_x))?;
        ensure(*elapsed < Duration::from_secs(10), || format!("{}: took {elapsed:?}", code.name))?;
        detail.push(format!("{} R={rate:.4} δ={gap:.4}", code.name));
    }
    Ok(detail.join(", "))
}

fn code2(runs: &Runs) -> Outcome {
    let r = &runs.code2;
    ensure(r.status == ReportStatus::Optimal, || format!("status {:?}", r.status))?;
    let rate = r.rate.unwrap();
    ensure(rate >= 0.421 - 2e-3 && rate <= 0.44, || format!("rate {rate}"))?;
    Ok(format!("Dv=8 rate {rate:.5} in [0.419, 0.44]"))
}

fn published_ensembles() -> Outcome {
    let type_a = [
        (2, 0.4167), (3, 0.1667), (4, 0.1000), (5, 0.0700), (6, 0.0532), (7, 0.0426), (8, 0.0353), (9, 0.0300),
        (10, 0.0260), (11, 0.0229), (12, 0.0204), (13, 0.0165),
    ];
    let type_mb = [(2, 0.4167), (3, 0.1667), (4, 0.1000), (8, 0.3176)];
    let mut detail = Vec::new();
    for (name, taps, expected) in [("Type-A", &type_a[..], 0.4998), ("Type-MB", &type_mb[..], 0.4926)] {
        let lambda = DegreeDistribution::normalized(taps.iter().copied()).unwrap();
        let spec = EnsembleSpec::new(lambda, dd(&[(6, 1.0)]), 0.48).unwrap();
        let r = cmd_verify(&spec).map_err(|e| e.to_string())?;
        ensure(r.status == ReportStatus::Feasible, || format!("{name}: {:?} {:?}", r.status, r.de))?;
        let rate = r.rate.unwrap();
        ensure((rate - expected).abs() <= 1e-3, || format!("{name}: rate {rate} vs {expected}"))?;
        detail.push(format!("{name} R={rate:.4}"));
    }
    Ok(detail.join(", "))
}

fn two_tap(runs: &Runs) -> Outcome {
    let r = &runs.two_tap;
    ensure(r.status == ReportStatus::Optimal, || format!("status {:?}", r.status))?;
    let spec = r.ensemble.clone().unwrap();
    ensure(check_de_feasible(&spec, CheckMode::Grid).feasible, || "DE grid check fails".into())?;
    let rate = r.rate.unwrap();
    ensure(rate >= 0.510, || format!("rate {rate}"))?;
    Ok(format!("rate {rate:.5} >= 0.510"))
}

fn stability(runs: &Runs) -> Outcome {
    let mut detail = Vec::new();
    let all = runs.codes.iter().map(|(c, r, _)| (c.name, c.stability_active, r)).chain([("Code 2", false, &runs.code2)]);
    for (name, active, r) in all {
        let spec = r.ensemble.as_ref().ok_or_else(|| format!("{name}: no ensemble"))?;
        let bound = stability_lambda2_bound(&spec.rho, spec.epsilon).unwrap();
        let l2 = spec.lambda.get(2);
        ensure(l2 <= bound + 1e-6, || format!("{name}: λ2 {l2} > bound {bound}"))?;
        if active {
            ensure(bound - l2 <= 1e-3, || format!("{name}: λ2 {l2} not at bound {bound}"))?;
        }
        detail.push(format!("{name} {:+.1e}", l2 - bound));
    }
    Ok(format!("λ2 - bound: {}", detail.join(", ")))
}

fn sweep(runs: &Runs) -> Outcome {
    let _ = runs;
    let t = Instant::now();
    let rho = dd(&[(5, 1.0)]);
    let grids = [10, 20, 50, 100, 200, 500, 1000];
    let rows = lp_baseline_sweep(&rho, 0.56, 5, &grids, &SolverOptions::default()).map_err(|e| e.to_string())?;
    let elapsed = t.elapsed();
    ensure(rows.iter().all(|r| r.status == SolveStatus::Optimal), || "an LP row failed".into())?;
    for w in rows.windows(2) {
        ensure(w[1].rate <= w[0].rate + 1e-9, || format!("rate rises from {} to {}", w[0].rate, w[1].rate))?;
    }
    let (sdp, _) = optimize(rho, 0.56, 5);
    let sdp_rate = sdp.rate.ok_or("SDP reference failed")?;
    let last = rows.last().unwrap();
    let excess = last.rate - sdp_rate;
    ensure(excess < 5e-3, || format!("LP {} vs SDP {sdp_rate}", last.rate))?;
    let lambda4 = last.lambda[2];
    ensure(lambda4.abs() < 1e-3, || format!("λ4 = {lambda4}"))?;
    ensure(elapsed < Duration::from_secs(60), || format!("took {elapsed:?}"))?;
    Ok(format!("rates {:.6} -> {:.6}, SDP {sdp_rate:.6}, λ4(N=1000) = {lambda4:.1e}, {elapsed:?}", rows[0].rate, last.rate))
}

fn random_distribution(rng: &mut ChaCha8Rng, max_degree: usize) -> DegreeDistribution {
    loop {
        let mut taps = Vec::new();
        for d in 2..=max_degree {
            if rng.gen_bool(0.6) {
                taps.push((d, rng.gen_range(0.05..1.0)));
            }
        }
        if !taps.is_empty() {
            return DegreeDistribution::normalized(taps).unwrap();
        }
    }
}

fn thresholds() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x7e5);
    let mut worst: f64 = 0.0;
    for k in 0..20 {
        let dv = rng.gen_range(2..=7);
        let dc = rng.gen_range(2..=7);
        let lambda = random_distribution(&mut rng, dv);
        let rho = random_distribution(&mut rng, dc);
        let r = cmd_threshold(&ThresholdArgs { lambda: lambda.clone(), rho: rho.clone(), method: ThresholdMethod::Both, tol: 1e-8 })
            .map_err(|e| e.to_string())?;
        let t = r.threshold.clone().unwrap();
        ensure(r.status == ReportStatus::Optimal, || format!("ensemble {k} ({lambda:?}, {rho:?}): {:?}", r.status))?;
        let diff = (t.sdp.unwrap() - t.bisect.unwrap()).abs();
        ensure(diff <= 1e-4, || format!("ensemble {k}: sdp {:?} bisect {:?}", t.sdp, t.bisect))?;
        worst = worst.max(diff);
    }

    // Fine scan of ε*(x) = x / λ(1 - ρ(1 - x)) for λ = x², ρ = x⁵.
    let n = 1_000_000;
    let scan = (1..=n)
        .map(|k| {
            let x = k as f64 / n as f64;
            x / (1.0 - (1.0 - x).powi(5)).powi(2)
        })
        .fold(f64::INFINITY, f64::min);
    let r = cmd_threshold(&ThresholdArgs {
        lambda: dd(&[(3, 1.0)]),
        rho: dd(&[(6, 1.0)]),
        method: ThresholdMethod::Both,
        tol: 1e-8,
    })
    .map_err(|e| e.to_string())?;
    let t = r.threshold.unwrap();
    for v in [t.sdp.unwrap(), t.bisect.unwrap(), scan] {
        ensure((v - 0.4294).abs() <= 1e-3, || format!("(x², x⁵): {v} vs 0.4294"))?;
    }
    ensure((t.sdp.unwrap() - scan).abs() <= 1e-3 && (t.bisect.unwrap() - scan).abs() <= 1e-3, || "scan disagrees".into())?;
    Ok(format!("20 ensembles, max |sdp - bisect| = {worst:.1e}; (x², x⁵) scan {scan:.6}, sdp {:.6}", t.sdp.unwrap()))
}

fn random_poly(rng: &mut ChaCha8Rng, degree: usize) -> Polynomial {
    Polynomial::new((0..=degree).map(|_| rng.gen_range(-1.0..1.0)).collect())
}

/// `s₁² + x(1 - x) s₂² + c`, nonnegative on `[0, 1]` by construction.
fn positive_on_unit_interval(rng: &mut ChaCha8Rng) -> Polynomial {
    let (d1, d2) = (rng.gen_range(0..=3), rng.gen_range(0..=2));
    let s1 = random_poly(rng, d1);
    let s2 = random_poly(rng, d2);
    let window = Polynomial::new(vec![0.0, 1.0, -1.0]);
    s1.mul(&s1).add(&window.mul(&s2).mul(&s2)).add(&Polynomial::constant(rng.gen_range(0.0..0.1)))
}

fn soundness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x50);
    let opts = SolverOptions::default();
    let mut certificates: Vec<(SosCertificate, Polynomial)> = Vec::new();
    for k in 0..50 {
        let p = positive_on_unit_interval(&mut rng);
        let prog = build_family_program(AffinePolynomialFamily::new(p.clone()), Sense::Minimize, &[], &[]).unwrap();
        let c = solve_certified(&prog, &opts).map_err(|e| e.to_string())?;
        let cert = c.certified.filter(|c| c.report.is_valid());
        let cert = cert.ok_or_else(|| format!("nonnegative #{k} {:?}: {:?}", p.coeffs(), c.solution.status))?;
        certificates.push((cert.certificate, prog.target(&[])));
    }
    for k in 0..50 {
        let base = positive_on_unit_interval(&mut rng);
        let (x_min, v_min) = (0..=1000)
            .map(|i| i as f64 / 1000.0)
            .map(|x| (x, base.evaluate(x)))
            .fold((0.0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
        let p = base.sub(&Polynomial::constant(v_min + rng.gen_range(0.01..0.1)));
        ensure(p.evaluate(x_min) < 0.0, || format!("negative #{k}: no negative witness"))?;
        let prog = build_family_program(AffinePolynomialFamily::new(p.clone()), Sense::Minimize, &[], &[]).unwrap();
        let c = solve_certified(&prog, &opts).map_err(|e| e.to_string())?;
        ensure(c.solution.status == SolveStatus::Infeasible, || format!("negative #{k} {:?}: {:?}", p.coeffs(), c.solution.status))?;
    }
    let mut rejected = 0;
    for (cert, target) in &certificates {
        for i in 0..cert.gram.nrows() {
            let mut gram = cert.gram.clone();
            gram[(i, i)] -= 1e-3;
            let report = verify_certificate(&SosCertificate::new(gram).unwrap(), target).unwrap();
            ensure(!report.is_valid(), || format!("perturbed entry {i} still verifies: {report:?}"))?;
            rejected += 1;
        }
    }
    Ok(format!("50 certified, 50 infeasible, {rejected} perturbed certificates rejected"))
}

fn oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0a);
    let mut worst1: f64 = 0.0;
    for _ in 0..200 {
        let n = rng.gen_range(1..=4);
        let power = rng.gen_range(0..=6);
        let a: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let expanded = multinomial_power(&a, power);
        let mut coeffs = vec![0.0];
        coeffs.extend(&a);
        let direct = Polynomial::new(coeffs).power(power);
        for (m, &v) in expanded.iter().enumerate() {
            worst1 = worst1.max((v - direct.coeff(m)).abs());
        }
    }
    ensure(worst1 <= 1e-12, || format!("multinomial vs power: {worst1:e}"))?;

    let mut worst2: f64 = 0.0;
    for n in 2..=7 {
        for _ in 0..10 {
            let dv = rng.gen_range(2..=7);
            let lambda = random_distribution(&mut rng, dv);
            let eps = rng.gen_range(0.05..0.95);
            let closed = lemma2_coefficients(&lambda, n, eps);
            let p = de_polynomial(&lambda, &dd(&[(n + 1, 1.0)]), eps).unwrap();
            for (j, &v) in closed.iter().enumerate() {
                worst2 = worst2.max((v - p.coeff(j)).abs());
            }
            ensure(p.degree().unwrap_or(0) < closed.len(), || "closed form too short".into())?;
        }
    }
    ensure(worst2 <= 1e-10, || format!("closed form vs de_polynomial: {worst2:e}"))?;

    for _ in 0..100 {
        let degree = rng.gen_range(0..=8);
        let p = random_poly(&mut rng, degree);
        let q = p.degree().unwrap_or(0) + rng.gen_range(0..3);
        let lifted = lift_to_real_line(&p, q).unwrap();
        ensure((0..=2 * q).filter(|l| l % 2 == 1).all(|l| lifted.coeff(l) == 0.0), || "odd lift coefficient".into())?;
    }

    let mut family = AffinePolynomialFamily::new(Polynomial::zero());
    family.push("a", Polynomial::monomial(2, 1.0));
    family.push("b", Polynomial::x());
    family.push("c", Polynomial::constant(1.0));
    let lifted = family.lift(2).unwrap();
    let expected: [(usize, [f64; 3]); 5] =
        [(0, [0.0, 0.0, 1.0]), (1, [0.0; 3]), (2, [0.0, 1.0, 2.0]), (3, [0.0; 3]), (4, [1.0, 1.0, 1.0])];
    for (l, coeffs) in expected {
        let (c0, cv) = lifted.coefficient(l);
        ensure(c0 == 0.0 && cv == coeffs, || format!("x^{l}: {c0} + {cv:?}"))?;
    }
    Ok(format!("multinomial {worst1:.1e}, closed form {worst2:.1e}, odd lift coefficients 0, unit-interval lift exact"))
}

fn capacity_bound(runs: &Runs) -> Outcome {
    let outputs = runs.codes.iter().map(|(_, r, _)| r).chain([&runs.code2, &runs.two_tap]);
    let mut worst = f64::NEG_INFINITY;
    for r in outputs {
        let spec = r.ensemble.as_ref().ok_or("missing ensemble")?;
        let excess = r.rate.unwrap() - (1.0 - spec.epsilon);
        ensure(excess <= 1e-6, || format!("rate exceeds capacity by {excess}"))?;
        worst = worst.max(excess);
    }
    Ok(format!("bound-achievement out of scope; max R - (1 - ε) = {worst:.4}"))
}

fn main() -> ExitCode {
    let start = Instant::now();
    let runs = Runs {
        codes: CONSISTENT_CODES
            .iter()
            .map(|c| {
                let (r, t) = optimize(dd(&[(c.check_degree, 1.0)]), c.epsilon, c.dv);
                (c, r, t)
            })
            .collect(),
        code2: optimize(dd(&[(5, 1.0)]), 0.56, 8).0,
        two_tap: optimize(dd(&[(6, 0.48555), (7, 0.51445)]), 0.45, 7).0,
    };
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("unit-interval bound exactness", Box::new(unit_interval_bound)),
        ("reference designs", Box::new(|| reference_designs(&runs))),
        ("code 2 design", Box::new(|| code2(&runs))),
        ("published ensemble verification", Box::new(published_ensembles)),
        ("two-tap design", Box::new(|| two_tap(&runs))),
        ("stability boundary", Box::new(|| stability(&runs))),
        ("discretised LP sweep", Box::new(|| sweep(&runs))),
        ("threshold cross-validation", Box::new(thresholds)),
        ("certificate soundness", Box::new(soundness)),
        ("oracle equivalences", Box::new(oracles)),
        ("capacity bound", Box::new(|| capacity_bound(&runs))),
    ];
    let mut failures = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {:>2} PASS {name}: {detail}", k + 1),
            Err(why) => {
                failures += 1;
                println!("criterion {:>2} FAIL {name}: {why}", k + 1);
            }
        }
    }
    println!("acceptance: {} of {} passed in {:?}", criteria.len() - failures, criteria.len(), start.elapsed());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
