//! Which coefficient every other one is equalized to. The states in each
//! group differ only by relabelling the photons, yet the totals differ, and
//! the smallest pivot wins.

use wconc::analytic::p_total_cpc;
use wconc::protocol::select_pivot;
use wconc::qstate::WCoefficients;

fn curves(label: &str, sets: &[Vec<f64>]) -> wconc::Result<()> {
    println!("{label}");
    println!(
        "  {:<34} {:>9} {:>9} {:>9}",
        "coefficients", "m = 1", "m = 4", "m = 8"
    );
    for set in sets {
        let coeffs = WCoefficients::from_reals(set)?;
        let table = p_total_cpc(&coeffs.moduli_sqr(), 8, 2)?;
        let shown: Vec<String> = set.iter().map(|a| format!("{a:.3}")).collect();
        println!(
            "  {:<34} {:>9.5} {:>9.5} {:>9.5}   pivot 2, auto pick {}",
            shown.join(" "),
            table.total_at(1),
            table.total_at(4),
            table.total_at(8),
            select_pivot(&coeffs)
        );
    }
    Ok(())
}

fn main() -> wconc::Result<()> {
    let r2 = 1.0 / 2f64.sqrt();
    let r6 = 1.0 / 6f64.sqrt();
    let r12 = 1.0 / 12f64.sqrt();
    curves(
        "four photons",
        &[
            vec![r6, r12, r2, 0.5],
            vec![r12, r6, r2, 0.5],
            vec![r2, 0.5, r6, r12],
            vec![r12, r2, 0.5, r6],
        ],
    )?;
    curves(
        "five photons",
        &[
            vec![0.4, 0.3, 0.5, 0.5, 0.5],
            vec![0.5, 0.4, 0.3, 0.5, 0.5],
            vec![0.5, 0.5, 0.5, 0.3, 0.4],
        ],
    )?;
    Ok(())
}
