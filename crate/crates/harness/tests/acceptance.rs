//! Runs the acceptance criteria and prints one PASS or FAIL line each.
//!
//! Numeric arguments select a subset: `cargo test --test acceptance -- 3 7`.

use std::process::ExitCode;

use exmix_harness::acceptance::{criteria, ACCEPTANCE_SEED};

fn main() -> ExitCode {
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    let mut ran = 0;
    for c in criteria() {
        if !selected.is_empty() && !selected.contains(&c.id) {
            continue;
        }
        let out = c.evaluate(ACCEPTANCE_SEED);
        ran += 1;
        if !out.passed {
            failed += 1;
        }
        println!(
            "{} C{:02} {} ({:.1}s): {}",
            if out.passed { "PASS" } else { "FAIL" },
            out.id,
            out.title,
            out.seconds,
            out.detail
        );
    }
    println!("acceptance: {} passed, {failed} failed", ran - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
