//! Every way the protocol can succeed, with its probability and the
//! fidelity of the state it ends in.

use wconc::optics::PmOutcome;
use wconc::protocol::{enumerate_success_paths, GateKind, PathMerge};
use wconc::qstate::WCoefficients;

fn main() -> wconc::Result<()> {
    let coeffs = WCoefficients::from_reals(&[0.6, 0.48, 0.64])?;
    let paths = enumerate_success_paths(&coeffs, GateKind::Cpc, 2, 3, PathMerge::None)?;
    println!("{} success paths", paths.len());
    for p in &paths {
        let events: Vec<String> = p
            .events
            .iter()
            .map(|e| {
                let sign = match e.pm {
                    Some(PmOutcome::Plus) => "+",
                    Some(PmOutcome::Minus) => "-",
                    None => "",
                };
                format!("k{}m{}:{:?}{sign}", e.step_k, e.iteration_m, e.parity)
            })
            .collect();
        println!(
            "  p = {:.6}  F = {:.12}  {}",
            p.probability,
            p.fidelity,
            events.join(" ")
        );
    }
    let total: f64 = paths.iter().map(|p| p.probability).sum();
    println!("sum of path probabilities {total:.10}");
    Ok(())
}
