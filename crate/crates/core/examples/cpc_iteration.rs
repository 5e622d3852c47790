//! Repeating the QND parity check: per-photon success curves and the total
//! against the number of attempts, as CSV on stdout.
//!
//! `cargo run --example cpc_iteration > curves.csv`

use wconc::cli::{sweep_csv, sweep_rows, sweep_table};
use wconc::protocol::{cpc_run, GateKind};
use wconc::qstate::WCoefficients;

fn main() -> wconc::Result<()> {
    let coeffs = WCoefficients::from_reals(&[0.5, 0.5, 0.5, 0.3, 0.4])?;
    let rows = sweep_rows(&sweep_table(&coeffs, GateKind::Cpc, 8, 2)?);
    print!("{}", sweep_csv(&rows));

    for m in [1, 2, 4, 8] {
        let report = cpc_run(&coeffs, m, 2)?;
        eprintln!("max_m = {m}: total {:.5}", report.total_p);
    }
    Ok(())
}
