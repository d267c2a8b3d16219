//! The acceptance gate: every claimed property, checked end to end on the
//! full grids, one verdict line per property. Run it alone with
//!
//! ```text
//! cargo test --test acceptance -- --nocapture
//! ```

use anonnet::verify::{run_all, Scope};

#[test]
fn acceptance() {
    let reports = run_all(Scope::Full);
    let mut failed = Vec::new();
    for report in &reports {
        let verdict = if report.pass { "PASS" } else { "FAIL" };
        println!("[{verdict}] {}: {}", report.name, report.details);
        if !report.pass {
            failed.push(format!("{}: {}", report.name, report.details));
        }
    }
    assert!(
        failed.is_empty(),
        "{} of {} checks failed:\n{}",
        failed.len(),
        reports.len(),
        failed.join("\n")
    );
}
