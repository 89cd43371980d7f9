//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Runs without the libtest harness so the lines are never captured. The
//! process fails if any criterion misses its expectation.

use qmlab::acceptance::{self, CriterionOutcome};

/// What the run must show for `id`. Criterion 1 cannot pass: n = 100 and
/// n = 1000 exceed the ambient dimension 64, so no expansion into that many
/// orthogonal microstates exists. Its attainable part is pinned instead.
fn expectation_met(o: &CriterionOutcome) -> bool {
    match o.id.as_str() {
        "1" => {
            !o.pass
                && o.detail.starts_with("n=10: 100/100 ok")
                && o.detail.contains("n=100: 0/100 ok")
                && o.detail.contains("n=1000: 0/100 ok")
        }
        _ => o.pass,
    }
}

fn main() {
    let mut unmet = Vec::new();
    for id in acceptance::IDS {
        let o = acceptance::run(id).expect("known criterion");
        println!("{}", o.line());
        if !expectation_met(&o) {
            unmet.push(o.id);
        }
    }
    let passed = acceptance::IDS.len() - unmet.len();
    println!(
        "acceptance: {passed}/{} expectations met (criterion 1 is expected to FAIL)",
        acceptance::IDS.len()
    );
    if !unmet.is_empty() {
        eprintln!("unmet expectations: {}", unmet.join(", "));
        std::process::exit(1);
    }
}
