//! Acceptance grid. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails. Positional arguments select criteria by number.

use mdlab_core::verify::{run, CRITERIA};
use std::process::ExitCode;

fn main() -> ExitCode {
    let selected: Vec<u8> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let ids: Vec<u8> = CRITERIA
        .iter()
        .map(|c| c.0)
        .filter(|id| selected.is_empty() || selected.contains(id))
        .collect();

    println!("\nrunning {} acceptance criteria", ids.len());
    let mut failed = Vec::new();
    for id in ids {
        let r = run(id);
        println!("{}", r.line());
        if !r.passed {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria passed\n");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}\n");
        ExitCode::FAILURE
    }
}
