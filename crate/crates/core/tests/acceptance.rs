use std::io::Write;

use weylchamber::acceptance::run_all;

#[test]
fn acceptance_criteria() {
    let ids: Vec<u8> = (1..=10).collect();
    let reports = run_all(&ids, 2024);
    // written to the raw handle so the summary shows without --nocapture
    let mut err = std::io::stderr().lock();
    writeln!(err).unwrap();
    for r in &reports {
        writeln!(err, "{r}").unwrap();
        for d in &r.details {
            writeln!(err, "    {d}").unwrap();
        }
    }
    drop(err);
    let failed: Vec<String> = reports.iter().filter(|r| !r.passed).map(|r| r.id.to_string()).collect();
    assert!(failed.is_empty(), "failed criteria: {}", failed.join(", "));
}
