//! Two photons through the parity-check hardware, term by term.

use num_complex::Complex64;
use wconc::optics::{cpc_measure, measure_pm, pbs, ppc_postselect, single_photon, CpcModel};
use wconc::qstate::{tensor, ModeId};

fn main() -> wconc::Result<()> {
    let a = ModeId::new("a")?;
    let b = ModeId::new("b")?;
    let (c, d) = (ModeId::new("c")?, ModeId::new("d")?);

    let first = single_photon(Complex64::new(0.6, 0.0), Complex64::new(0.8, 0.0), &a)?;
    let second = single_photon(Complex64::new(0.8, 0.0), Complex64::new(0.0, 0.6), &b)?;
    let pair = tensor(&first, &second)?;
    println!("input:\n{pair}\n");

    let routed = pbs(&pair, &a, &b, &c, &d)?;
    println!("after the PBS:\n{routed}\n");
    let (even, p) = ppc_postselect(&routed, &c, &d)?;
    println!("one photon per output port, p = {p:.6}:\n{even}\n");

    let branches = cpc_measure(&pair, &a, &b, &CpcModel::default())?;
    println!(
        "QND parity check: even p = {:.6}, odd p = {:.6}",
        branches.even.probability, branches.odd.probability
    );
    println!("odd branch, photons kept:\n{}\n", branches.odd.state);

    let pm = measure_pm(&branches.odd.state, &b)?;
    println!("measuring b in the |+>/|-> basis:");
    println!("  + with p = {:.6}: {}", pm.plus.probability, pm.plus.state);
    println!(
        "  - with p = {:.6}: {}",
        pm.minus.probability, pm.minus.state
    );
    Ok(())
}
