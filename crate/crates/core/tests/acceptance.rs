//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Criteria run one after another so that the wall-time limits are measured
//! without contention. Checks in `verify::KNOWN_SHORTFALLS` still print FAIL;
//! the process exits non-zero on any other failure, on an error, or when a
//! listed check starts passing.

use std::process::ExitCode;

use noe_core::verify::{run_suite, Verdict};

fn main() -> ExitCode {
    // 1 and 2 share one set of Fermi-Dirac runs.
    let groups: [&[u8]; 8] = [&[1, 2], &[3], &[4], &[5], &[6], &[7], &[8], &[9]];
    let mut outcomes = Vec::new();
    for ids in groups {
        for o in run_suite(ids) {
            for line in o.lines() {
                println!("{line}");
            }
            outcomes.push(o);
        }
    }
    let v = Verdict::of(&outcomes);
    for name in &v.known {
        println!("known shortfall: {name}");
    }
    for name in &v.unexpected {
        println!("unexpected: {name}");
    }
    if v.ok() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
