//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use substruct::harness::{
    cmd_reproduce, cmd_verify, BenchmarkRow, Check, ReproduceOptions, Scale, VerifyOptions,
};
use substruct::wl::DEFAULT_BUDGET;

const SEED: u64 = 0;

type Criterion = (&'static str, Box<dyn Fn() -> (bool, String)>);

fn verify(check: Check) -> (bool, String) {
    let opts = VerifyOptions { seed: SEED, budget: DEFAULT_BUDGET };
    match cmd_verify(check, &opts) {
        Ok(r) => {
            let detail = match r.first_failure() {
                Some(f) => format!("{} instances, first failure {}: {}", r.instances.len(), f.id, f.detail),
                None => format!("{} instances", r.instances.len()),
            };
            (r.pass, detail)
        }
        Err(e) => (false, format!("error: {e}")),
    }
}

fn learning() -> (bool, String) {
    let opts = ReproduceOptions::new(SEED, Scale::Desk);
    let mut pass = true;
    let mut parts = Vec::new();
    for row in BenchmarkRow::ALL {
        match cmd_reproduce(row, &opts) {
            Ok(r) => {
                pass &= r.pass;
                parts.push(format!(
                    "{} best {:.3e} (bound {:.0e})",
                    r.id,
                    r.best_normalized_mse,
                    row.desk_threshold()
                ));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("{}: error {e}", row.name()));
            }
        }
    }
    (pass, parts.join("; "))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("doubled pattern pairs", Box::new(|| verify(Check::DoubledPattern))),
        ("k-WL initial distinction", Box::new(|| verify(Check::InitialDistinction))),
        ("path pairs", Box::new(|| verify(Check::PathPairs))),
        ("MPNN outputs agree on corpus pairs", Box::new(|| verify(Check::MpnnBlind))),
        ("star containment formula", Box::new(|| verify(Check::StarCount))),
        ("containment oracle", Box::new(|| verify(Check::ContainmentOracle))),
        ("label variance", Box::new(|| verify(Check::LabelVariance))),
        ("LRP learning at desk scale", Box::new(learning)),
        ("LRP gradient check", Box::new(|| verify(Check::LrpGradient))),
        ("refinement invariants", Box::new(|| verify(Check::WlInvariants))),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (pass, detail) = run();
        let status = if pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {:>2} {status} {name} [{:.1}s] {detail}",
            i + 1,
            start.elapsed().as_secs_f64()
        );
        if !pass {
            failed += 1;
        }
    }
    if failed == 0 {
        println!("acceptance: all criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} criteria failed");
        ExitCode::FAILURE
    }
}
