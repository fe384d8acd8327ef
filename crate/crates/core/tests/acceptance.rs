//! The acceptance suite: criteria 1 to 8 at their stated tolerances and
//! budgets, then criterion 9 by repeating the whole run on a different number
//! of workers and comparing every numeric report field.

use std::io::Write;

use hyperdual::cli::{numeric_fields, run_all, with_threads, Outcome, CRITERIA};

/// Written past the test harness capture so the lines always show.
fn say(line: &str) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{line}");
    let _ = out.flush();
}

#[test]
fn acceptance_criteria() {
    say("");
    let first: Vec<Outcome> = with_threads(1, || run_all(|o| say(&o.line()))).unwrap();
    let second: Vec<Outcome> = with_threads(2, || run_all(|_| {})).unwrap();

    let mut mismatched = Vec::new();
    for (a, b) in first.iter().zip(&second) {
        let same = match (&a.report, &b.report) {
            (Ok(x), Ok(y)) => numeric_fields(x) == numeric_fields(y),
            (Err(x), Err(y)) => x == y,
            _ => false,
        };
        if !same {
            mismatched.push(a.number);
        }
    }
    let deterministic = mismatched.is_empty() && first.len() == CRITERIA.len() && second.len() == CRITERIA.len();
    say(&format!(
        "criterion 9 [Determinism] {}: 1 vs 2 workers, {} of {} criteria identical",
        if deterministic { "PASS" } else { "FAIL" },
        CRITERIA.len() - mismatched.len(),
        CRITERIA.len()
    ));

    let failed: Vec<usize> = first.iter().filter(|o| !o.pass()).map(|o| o.number).chain(mismatched).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
