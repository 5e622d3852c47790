//! Single-attempt concentration of the five-photon state
//! `(0.5, 0.5, 0.5, 0.3, 0.4)`, simulated and in closed form.

use wconc::analytic::{p_step_ppc, p_total_ppc};
use wconc::protocol::ppc_run;
use wconc::qstate::WCoefficients;

fn main() -> wconc::Result<()> {
    let coeffs = WCoefficients::from_reals(&[0.5, 0.5, 0.5, 0.3, 0.4])?;
    let a2 = coeffs.moduli_sqr();
    let report = ppc_run(&coeffs, 2)?;

    println!("photon  simulated   closed form");
    for (&k, &p) in &report.per_step_p {
        println!("{k:>6}  {p:.8}  {:.8}", p_step_ppc(&a2, k, 2)?);
    }
    println!("total   {:.8}  {:.8}", report.total_p, p_total_ppc(&a2, 2)?);
    println!("rounded {:.5}", report.total_p);
    println!(
        "fidelity of the concentrated state: {:.12}",
        report.final_fidelity
    );
    println!("\nconcentrated state:\n{}", report.final_state);
    Ok(())
}
