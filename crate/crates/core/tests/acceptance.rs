use std::io::Write;

use erasure_sim::acceptance::{run_suite, Status, ALL, DEFAULT_SEED};

#[test]
fn acceptance_criteria() {
    // Direct stderr writes bypass libtest capture so every verdict is logged.
    let results = run_suite(&ALL, DEFAULT_SEED, 0, |r| {
        let _ = writeln!(std::io::stderr(), "{r}");
    })
    .expect("suite runs");
    assert_eq!(results.len(), ALL.len());
    let failed: Vec<String> = results
        .iter()
        .filter(|r| r.status != Status::Pass)
        .map(|r| r.to_string())
        .collect();
    assert!(
        failed.is_empty(),
        "criteria not passing:\n{}",
        failed.join("\n")
    );
}
