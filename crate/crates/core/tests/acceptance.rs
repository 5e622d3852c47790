//! Acceptance criteria, one line per criterion. Exits nonzero if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wconc::analytic::{p_step_ppc, p_total_cpc, p_total_ppc};
use wconc::cli::{sweep_rows, sweep_table};
use wconc::montecarlo::estimate;
use wconc::optics::PmOutcome;
use wconc::protocol::{enumerate_success_paths, run, select_pivot, GateKind, PathMerge};
use wconc::qstate::WCoefficients;
use wconc::verify::{random_instance, run_suite, ClosedForm, SuiteConfig};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

const TOL: f64 = 1e-12;

fn five_photon() -> WCoefficients {
    WCoefficients::from_reals(&[0.5, 0.5, 0.5, 0.3, 0.4]).unwrap()
}

fn rng(stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(0x5eed);
    r.set_stream(stream);
    r
}

fn random_coeffs(n: usize, complex: bool, r: &mut ChaCha8Rng) -> WCoefficients {
    random_instance(n, complex, 1, r).coeffs
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn s<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn ppc_endpoint() -> Check {
    let start = Instant::now();
    let coeffs = five_photon();
    let analytic = p_total_ppc(&coeffs.moduli_sqr(), 2).map_err(s)?;
    let simulator = run(&coeffs, GateKind::Ppc, 1, 2).map_err(s)?.total_p;
    let mc = estimate(&coeffs, GateKind::Ppc, 1, 2, 1_000_000, 1).map_err(s)?;
    let elapsed = start.elapsed();
    ensure((analytic - 0.03228).abs() <= 1e-4, || {
        format!("analytic {analytic}")
    })?;
    ensure((simulator - analytic).abs() <= TOL, || {
        format!("simulator {simulator} vs analytic {analytic}")
    })?;
    ensure((mc.p_hat - analytic).abs() <= 4.0 * mc.stderr, || {
        format!("Monte Carlo {} +/- {} vs {analytic}", mc.p_hat, mc.stderr)
    })?;
    ensure(elapsed < Duration::from_secs(5), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "analytic {analytic:.7}, simulator {simulator:.7}, MC {:.5} +/- {:.5} (1e6 trials), {:.2?}",
        mc.p_hat, mc.stderr, elapsed
    ))
}

fn cpc_endpoint() -> Check {
    let coeffs = five_photon();
    let analytic = p_total_cpc(&coeffs.moduli_sqr(), 8, 2).map_err(s)?.total();
    let simulator = run(&coeffs, GateKind::Cpc, 8, 2).map_err(s)?.total_p;
    ensure((simulator - analytic).abs() <= TOL, || {
        format!("simulator {simulator} vs analytic {analytic}")
    })?;
    ensure((analytic - 0.28575).abs() <= 1e-3, || {
        format!("total {analytic}")
    })?;
    let mc = estimate(&coeffs, GateKind::Cpc, 8, 2, 1_000_000, 2).map_err(s)?;
    ensure((mc.p_hat - analytic).abs() <= 4.0 * mc.stderr, || {
        format!("Monte Carlo {} +/- {} vs {analytic}", mc.p_hat, mc.stderr)
    })?;
    Ok(format!(
        "analytic {analytic:.7}, simulator {simulator:.7}, |diff| {:.1e}, MC {:.5} +/- {:.5}",
        (analytic - simulator).abs(),
        mc.p_hat,
        mc.stderr
    ))
}

fn bell_pairs() -> Check {
    let mut r = rng(3);
    let mut worst: f64 = 0.0;
    for i in 0..50 {
        let coeffs = random_coeffs(2, i % 2 == 1, &mut r);
        let a2 = coeffs.moduli_sqr();
        let expected = 2.0 * a2[0] * a2[1];
        for pivot in [1, 2] {
            let sim = run(&coeffs, GateKind::Ppc, 1, pivot).map_err(s)?.total_p;
            let closed = p_total_ppc(&a2, pivot).map_err(s)?;
            let err = (sim - expected).abs().max((closed - expected).abs());
            worst = worst.max(err);
            ensure(err <= TOL, || {
                format!("pair {a2:?}: simulator {sim}, expected {expected}")
            })?;
        }
    }
    Ok(format!("50 pairs, both pivots, max error {worst:.1e}"))
}

fn oracle_suite() -> Check {
    let start = Instant::now();
    let report = run_suite(&SuiteConfig::default(), &ClosedForm).map_err(s)?;
    let elapsed = start.elapsed();
    if !report.passed() {
        return Err(format!("{report}"));
    }
    ensure(elapsed < Duration::from_secs(60), || {
        format!("took {elapsed:?}")
    })?;
    let checks: usize = report.matrix.values().map(|t| t.passed).sum();
    let worst = report
        .matrix
        .values()
        .map(|t| t.max_err)
        .fold(0.0, f64::max);
    Ok(format!(
        "{} instances, {checks} comparisons, max error {worst:.1e}, shifted normalization departs on {}, {:.2?}",
        report.instances, report.shifted_form_discrepancies, elapsed
    ))
}

fn success_fidelity() -> Check {
    let mut r = rng(5);
    let mut paths = 0usize;
    let mut minus_paths = 0usize;
    let mut worst: f64 = 0.0;
    for n in 2..=6 {
        for gate in [GateKind::Ppc, GateKind::Cpc] {
            let ms = if gate == GateKind::Ppc { 1..=1 } else { 1..=4 };
            for max_m in ms {
                for complex in [false, true] {
                    let coeffs = random_coeffs(n, complex, &mut r);
                    let pivot = r.gen_range(1..=n);
                    let total = run(&coeffs, gate, max_m, pivot).map_err(s)?.total_p;
                    let mut modes = vec![PathMerge::GlobalPhase];
                    if n <= 4 && max_m <= 3 {
                        modes.push(PathMerge::None);
                    }
                    for merge in modes {
                        let found = enumerate_success_paths(&coeffs, gate, max_m, pivot, merge)
                            .map_err(s)?;
                        let sum: f64 = found.iter().map(|p| p.probability).sum();
                        ensure((sum - total).abs() <= TOL, || {
                            format!("n={n} {gate} max_m={max_m}: paths sum {sum} vs total {total}")
                        })?;
                        for p in &found {
                            worst = worst.max((p.fidelity - 1.0).abs());
                            ensure((p.fidelity - 1.0).abs() <= TOL, || {
                                format!("n={n} {gate} max_m={max_m}: fidelity {}", p.fidelity)
                            })?;
                            if p.events.iter().any(|e| e.pm == Some(PmOutcome::Minus)) {
                                minus_paths += 1;
                            }
                        }
                        paths += found.len();
                    }
                }
            }
        }
    }
    ensure(minus_paths > 0, || "no path took a minus outcome".into())?;
    Ok(format!(
        "{paths} success paths ({minus_paths} with a minus outcome), max |F - 1| {worst:.1e}"
    ))
}

fn pivot_optimality() -> Check {
    let mut r = rng(6);
    let mut cpc_holds = 0;
    for i in 0..200 {
        let n = 2 + i % 5;
        let coeffs = random_coeffs(n, i % 2 == 1, &mut r);
        let best = select_pivot(&coeffs);
        let a2 = coeffs.moduli_sqr();
        let chosen = p_total_ppc(&a2, best).map_err(s)?;
        let chosen_sim = run(&coeffs, GateKind::Ppc, 1, best).map_err(s)?.total_p;
        let max_m = 1 + i % 4;
        let chosen_cpc = p_total_cpc(&a2, max_m, best).map_err(s)?.total();
        let mut cpc_ok = true;
        for alt in (1..=n).filter(|&p| p != best) {
            let other = p_total_ppc(&a2, alt).map_err(s)?;
            let other_sim = run(&coeffs, GateKind::Ppc, 1, alt).map_err(s)?.total_p;
            ensure(
                chosen >= other - TOL && chosen_sim >= other_sim - TOL,
                || format!("{a2:?}: pivot {best} gives {chosen}, pivot {alt} gives {other}"),
            )?;
            let other_cpc = p_total_cpc(&a2, max_m, alt).map_err(s)?.total();
            cpc_ok &= chosen_cpc >= other_cpc - TOL;
        }
        cpc_holds += usize::from(cpc_ok);
    }
    ensure(cpc_holds == 200, || {
        format!("CPC: smallest pivot optimal on only {cpc_holds} of 200")
    })?;
    Ok("200 instances: smallest-modulus pivot is optimal for PPC and for CPC (max_m 1..4)".into())
}

fn figure_shapes() -> Check {
    let coeffs = five_photon();
    let table = sweep_table(&coeffs, GateKind::Cpc, 8, 2).map_err(s)?;
    let rows = sweep_rows(&table);
    let sim = run(&coeffs, GateKind::Cpc, 8, 2).map_err(s)?.table;
    let k1: Vec<_> = rows.iter().filter(|r| r.k == 1).collect();
    let k3: Vec<_> = rows.iter().filter(|r| r.k == 3).collect();
    ensure(k1.len() == 8 && k3.len() == 8, || {
        "missing sweep rows".into()
    })?;
    for (a, b) in k1.iter().zip(&k3) {
        ensure(
            a.m == b.m
                && (a.p_step - b.p_step).abs() <= TOL
                && (a.p_step_cumsum - b.p_step_cumsum).abs() <= TOL,
            || format!("m={}: k=1 {:?} vs k=3 {:?}", a.m, a, b),
        )?;
        let s1 = sim.get(1, a.m).unwrap_or(0.0);
        let s3 = sim.get(3, a.m).unwrap_or(0.0);
        ensure((s1 - s3).abs() <= TOL, || {
            format!("simulator m={}: {s1} vs {s3}", a.m)
        })?;
    }

    let r3 = 1.0 / 3f64.sqrt();
    let r6 = 1.0 / 6f64.sqrt();
    let r12 = 1.0 / 12f64.sqrt();
    let r2 = 1.0 / 2f64.sqrt();
    let mut sets: Vec<WCoefficients> = [
        vec![0.5, 0.5, 0.5, 0.3, 0.4],
        vec![r6, r12, r2, 0.5],
        vec![r12, r6, r2, 0.5],
        vec![r2, 0.5, r6, r12],
        vec![r12, r2, 0.5, r6],
        vec![0.4, 0.3, 0.5, 0.5, 0.5],
        vec![0.5, 0.4, 0.3, 0.5, 0.5],
        vec![r3, r3, r3],
    ]
    .iter()
    .map(|v| WCoefficients::from_reals(v).unwrap())
    .collect();
    let mut r = rng(7);
    for i in 0..100 {
        sets.push(random_coeffs(2 + i % 6, i % 2 == 1, &mut r));
    }
    for coeffs in &sets {
        let n = coeffs.n();
        for pivot in 1..=n {
            let a2 = coeffs.moduli_sqr();
            let t = p_total_cpc(&a2, 8, pivot).map_err(s)?;
            for m in 1..8 {
                ensure(t.total_at(m + 1) >= t.total_at(m), || {
                    format!("{a2:?} pivot {pivot}: total decreases at m={m}")
                })?;
            }
            let ppc = run(coeffs, GateKind::Ppc, 1, pivot).map_err(s)?;
            let cpc = run(coeffs, GateKind::Cpc, 1, pivot).map_err(s)?;
            ensure((ppc.total_p - cpc.total_p).abs() <= TOL, || {
                format!("{a2:?}: PPC {} vs CPC(1) {}", ppc.total_p, cpc.total_p)
            })?;
            for row in ppc.table.rows() {
                let c = cpc.table.get(row.k, 1).unwrap_or(0.0);
                ensure((row.sum - c).abs() <= TOL, || {
                    format!("{a2:?}: photon {} PPC {} vs CPC(1) {c}", row.k, row.sum)
                })?;
            }
        }
    }
    Ok(format!(
        "k=1 and k=3 curves coincide over m=1..8; totals nondecreasing and CPC(1) = PPC on {} instances x all pivots",
        sets.len()
    ))
}

fn uniform_input() -> Check {
    for n in 2..=8 {
        let coeffs = WCoefficients::uniform(n).map_err(s)?;
        let expected = 0.5f64.powi(n as i32 - 1);
        for pivot in [1, n] {
            for gate in [GateKind::Ppc, GateKind::Cpc] {
                let report = run(&coeffs, gate, 1, pivot).map_err(s)?;
                for (&k, &p) in &report.per_step_p {
                    ensure((p - 0.5).abs() <= TOL, || {
                        format!("n={n} {gate}: photon {k} has {p}")
                    })?;
                    let closed = p_step_ppc(&coeffs.moduli_sqr(), k, pivot).map_err(s)?;
                    ensure((closed - 0.5).abs() <= TOL, || {
                        format!("n={n}: closed form {closed}")
                    })?;
                }
                ensure((report.total_p - expected).abs() <= TOL, || {
                    format!("n={n} {gate}: total {}", report.total_p)
                })?;
            }
            let closed = p_total_ppc(&coeffs.moduli_sqr(), pivot).map_err(s)?;
            ensure((closed - expected).abs() <= TOL, || {
                format!("n={n}: closed total {closed}")
            })?;
        }
    }
    Ok("n = 2..8: every step 1/2, total 2^-(n-1)".into())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("1 PPC endpoint 0.03228", ppc_endpoint),
        ("2 CPC endpoint 0.28575 at max_m=8", cpc_endpoint),
        ("3 two-photon total 2 a1^2 a2^2", bell_pairs),
        ("4 closed forms match simulator", oracle_suite),
        ("5 success paths reach unit fidelity", success_fidelity),
        ("6 smallest pivot is optimal", pivot_optimality),
        ("7 sweep curve shapes", figure_shapes),
        ("8 uniform input", uniform_input),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        match outcome {
            Ok(detail) => println!("[PASS] {name}: {detail} [{elapsed:.2?}]"),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {name}: {detail} [{elapsed:.2?}]");
            }
        }
    }
    println!("{} of 8 acceptance criteria pass", 8 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
