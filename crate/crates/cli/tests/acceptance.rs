use bcrb_cli::acceptance::{run_acceptance, AcceptOptions, Injection, BUDGETS, SUITE_BUDGET};
use bcrb_cli::output::to_json;
use std::io::Write;

/// Written to the stderr handle directly so the lines survive output capture.
macro_rules! report {
    ($($t:tt)*) => {
        let _ = writeln!(std::io::stderr().lock(), $($t)*);
    };
}

#[test]
fn acceptance_suite() {
    let (summary, times) = run_acceptance(&AcceptOptions::default()).unwrap();
    let total: std::time::Duration = times.iter().map(|(_, t)| *t).sum();
    for (line, (id, t)) in summary.lines().iter().zip(&times) {
        let budget = BUDGETS.iter().find(|(b, _)| b == id).map(|(_, d)| *d);
        let over = budget.is_some_and(|b| *t > b);
        report!("{line} ({:.2} s{})", t.as_secs_f64(), if over { ", over budget" } else { "" });
    }
    report!("total {:.2} s (budget {} s)", total.as_secs_f64(), SUITE_BUDGET.as_secs());
    for c in summary.criteria.iter().filter(|c| !c.passed) {
        for i in c.items.iter().filter(|i| !i.passed) {
            report!("  criterion {}: {} got {} {:?} {} ± {}", c.id, i.name, i.got, i.relation, i.want, i.tolerance);
        }
    }
    assert_eq!(summary.criteria.len(), 8);
    assert!(summary.passed);
    assert!(total < SUITE_BUDGET);
}

#[test]
fn flipped_phi_branch_fails_dominance_criteria() {
    let opts = AcceptOptions { inject: Some(Injection::FlipPhiBranch), ..Default::default() };
    let (summary, _) = run_acceptance(&opts).unwrap();
    assert!(!summary.passed);
    let failed: Vec<u8> = summary.criteria.iter().filter(|c| !c.passed).map(|c| c.id).collect();
    assert!(failed.contains(&2) && failed.contains(&3), "{failed:?}");
}

#[test]
fn summary_is_byte_identical_across_runs() {
    let opts = AcceptOptions { seed: Some(11), ..Default::default() };
    let a = to_json(&run_acceptance(&opts).unwrap().0);
    let b = to_json(&run_acceptance(&opts).unwrap().0);
    assert_eq!(a, b);
}
