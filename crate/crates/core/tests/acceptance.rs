//! Acceptance criteria. Runs without the test harness so that every
//! criterion prints its PASS/FAIL line; exits non-zero if any fails.

use std::process::ExitCode;

use pga::reproduce::{self, Config};

fn main() -> ExitCode {
    let cfg = Config::default();
    let criteria = [
        reproduce::extraction_laws,
        reproduce::sequence_axioms,
        reproduce::use_laws,
        reproduce::jump_free_compilation,
        reproduce::label_projections,
        reproduce::jump_chain_collapse,
        reproduce::approximation_induction,
    ];
    let mut failed = 0;
    for criterion in criteria {
        let result = criterion(&cfg);
        println!("{}", result.summary());
        if !result.passed() {
            failed += 1;
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
