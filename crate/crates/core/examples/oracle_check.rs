//! Closed-form probabilities against the state simulator on random
//! instances.

use wconc::verify::{run_suite, ClosedForm, SuiteConfig};

fn main() -> wconc::Result<()> {
    let report = run_suite(&SuiteConfig::default(), &ClosedForm)?;
    println!("{report}");
    if !report.passed() {
        std::process::exit(1);
    }
    Ok(())
}
