//! Runs the built-in consistency checks.

use eio_lab::cli::selftest::run_selftest;

fn main() {
    let results = run_selftest(None);
    for r in &results {
        println!("{} {} ({:.2} s): {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.seconds, r.detail);
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    std::process::exit(i32::from(failed > 0));
}
