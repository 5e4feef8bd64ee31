//! Runs the ten acceptance criteria and prints one line per criterion.
//!
//! Checks listed in `KNOWN_RED` are reported as `FAIL (known: ...)` without
//! failing the target; any other failed check or experiment error does.
//! Pass criterion numbers as arguments to run a subset.

use std::process::ExitCode;

use resonorm::acceptance::{run_criterion, Verdict, KNOWN_RED};

fn main() -> ExitCode {
    let selected: Vec<u32> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .filter(|n| (1..=10).contains(n))
        .collect();
    let list: Vec<u32> = if selected.is_empty() { (1..=10).collect() } else { selected };

    println!("\nrunning {} acceptance criteria (known red: {})", list.len(), KNOWN_RED.join(", "));
    let mut failed = Vec::new();
    for n in list {
        match run_criterion(n) {
            Ok(outcome) => {
                println!("{}", outcome.line());
                if outcome.verdict() == Verdict::Fail {
                    failed.push(n);
                }
            }
            Err(e) => {
                println!("criterion {n:>2} FAIL: {e}");
                failed.push(n);
            }
        }
    }
    if failed.is_empty() {
        println!("acceptance: ok\n");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: unexpected failures in criteria {failed:?}\n");
        ExitCode::FAILURE
    }
}
