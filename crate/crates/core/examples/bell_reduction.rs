//! Two photons: the whole protocol is one parity check and the total is
//! `2 |a1|^2 |a2|^2`.

use wconc::protocol::{ppc_run, GateKind};
use wconc::qstate::WCoefficients;

fn main() -> wconc::Result<()> {
    println!("{:>8} {:>12} {:>12}", "|a1|", "simulated", "2 a1^2 a2^2");
    for a1 in [0.2f64, 0.4, 0.6, 1.0 / 2f64.sqrt(), 0.9] {
        let a2 = (1.0 - a1 * a1).sqrt();
        let coeffs = WCoefficients::from_reals(&[a1, a2])?;
        let report = ppc_run(&coeffs, 2)?;
        assert_eq!(report.gate, GateKind::Ppc);
        println!(
            "{a1:>8.4} {:>12.8} {:>12.8}",
            report.total_p,
            2.0 * a1 * a1 * a2 * a2
        );
    }
    Ok(())
}
