//! Sampling whole runs with Born-rule draws and comparing with the exact
//! total.

use std::collections::BTreeMap;

use wconc::montecarlo::{estimate, sample_trials};
use wconc::protocol::{run, GateKind};
use wconc::qstate::WCoefficients;

fn main() -> wconc::Result<()> {
    let coeffs = WCoefficients::from_reals(&[0.5, 0.5, 0.5, 0.3, 0.4])?;
    for (gate, max_m) in [(GateKind::Ppc, 1), (GateKind::Cpc, 8)] {
        let exact = run(&coeffs, gate, max_m, 2)?.total_p;
        let e = estimate(&coeffs, gate, max_m, 2, 1_000_000, 42)?;
        println!(
            "{gate} max_m={max_m}: p_hat {:.5} +/- {:.5}, exact {exact:.5}, z = {:+.2}",
            e.p_hat,
            e.stderr,
            (e.p_hat - exact) / e.stderr
        );
    }

    let trials = sample_trials(&coeffs, GateKind::Cpc, 8, 2, 100_000, 42)?;
    let mut attempts: BTreeMap<usize, usize> = BTreeMap::new();
    for t in trials.iter().filter(|t| t.success) {
        *attempts
            .entry(t.iterations_used.values().sum())
            .or_default() += 1;
    }
    println!("\nsuccessful CPC runs by total number of passing attempts:");
    for (total, count) in attempts {
        println!("  {total:>2}: {count}");
    }
    Ok(())
}
