mod common;

use std::time::{Duration, Instant};

use common::*;

#[test]
fn two_participants_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let start = Instant::now();
    let run = end_to_end(dir.path());
    assert!(start.elapsed() < Duration::from_secs(10), "{:?}", start.elapsed());
    assert_eq!(run.posted, run.previews);
    check_golden("report.txt", &run.report_text).unwrap();
    check_golden("report.json", &run.report_json).unwrap();
}

#[test]
fn deleted_url_is_absent_from_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let run = end_to_end(dir.path());
    let json: serde_json::Value = serde_json::from_str(&run.report_json).unwrap();
    // 7 trip links minus booking.com, plus 5 book club links from each participant.
    assert_eq!(json["totals"]["url_records"], 6 + 5 + 5);
    assert!(!run.report_text.contains("booking.com"));
    assert!(run.report_text.contains("airbnb.mx"));
}
