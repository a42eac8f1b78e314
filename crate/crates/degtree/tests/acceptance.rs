//! Prints one PASS/FAIL line per acceptance criterion.
//!
//! `DEGTREE_QUICK=1` shrinks sample counts and sizes. Criteria listed as
//! known-unattainable are reported but do not fail the run.

use degtree::verify::{known_unattainable, run, Settings};

fn main() {
    let quick = std::env::var("DEGTREE_QUICK").is_ok_and(|v| v == "1");
    let settings = Settings { quick, ..Settings::default() };
    let mut failures = 0;
    for id in 1..=18 {
        let report = run(id, &settings);
        println!("{}", report.line());
        if !report.pass {
            match known_unattainable(id) {
                Some(why) => println!("       known unattainable: {why}"),
                None => failures += 1,
            }
        }
    }
    println!("acceptance: {failures} unexpected failure(s)");
    if failures > 0 {
        std::process::exit(1);
    }
}
