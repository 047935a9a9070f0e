mod common;

use std::io::{BufRead, BufReader};
use std::path::Path;
use std::process::{Command, Output, Stdio};

use common::*;

fn ucds(data: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ucds"))
        .arg("--data-dir")
        .arg(data)
        .arg("--offline")
        .args(args)
        .output()
        .unwrap()
}

fn ok(output: Output) -> String {
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    String::from_utf8(output.stdout).unwrap()
}

#[test]
fn review_workflow() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    assert_eq!(ok(ucds(&data, &["list"])), "no chats\n");

    let trip = fixture(TRIP);
    let out = ok(ucds(&data, &["import", trip.to_str().unwrap()]));
    assert!(out.starts_with("imported chat A ("), "{out}");
    let book = fixture(BOOK_CLUB);
    let out = ok(ucds(&data, &["import", book.to_str().unwrap()]));
    assert!(out.starts_with("imported chat B ("), "{out}");
    assert!(out.contains("1 shortened link(s)"), "{out}");

    let list = ok(ucds(&data, &["list"]));
    assert_eq!(list.lines().count(), 2);
    assert!(list.lines().next().unwrap().contains("users=3 messages=8 urls=7 2021-03-14..2021-04-02"));

    let removed = ok(ucds(&data, &["delete-url", "A", "2"]));
    assert_eq!(removed, "removed url 2 (booking.com) from chat A\n");
    assert!(ok(ucds(&data, &["list"])).lines().next().unwrap().ends_with(" edited"));

    let shown = ucds(&data, &["show", "A"]).stdout;
    let submitted = dir.path().join("out/P1/a.json");
    let out = ok(ucds(&data, &["submit", "A", "--out", submitted.to_str().unwrap()]));
    assert!(out.starts_with("submitted chat A to "), "{out}");
    assert_eq!(std::fs::read(&submitted).unwrap(), shown);

    let again = ucds(&data, &["submit", "A", "--out", submitted.to_str().unwrap()]);
    assert!(!again.status.success());
    assert!(String::from_utf8_lossy(&again.stderr).contains("already been submitted"));

    let report_json = dir.path().join("report.json");
    let report = ok(ucds(
        &data,
        &["analyze", dir.path().join("out").to_str().unwrap(), "--json", report_json.to_str().unwrap()],
    ));
    assert!(report.contains("== Domains =="), "{report}");
    assert!(!report.contains("booking.com"));
    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(report_json).unwrap()).unwrap();
    assert_eq!(json["totals"]["url_records"], 6);
}

#[test]
fn errors_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.txt");
    std::fs::write(&empty, "").unwrap();
    let out = ucds(dir.path(), &["import", empty.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error: "));
    assert!(!ucds(dir.path(), &["show", "nope"]).status.success());
    assert!(!ucds(dir.path(), &["submit", "A"]).status.success());
}

#[test]
fn serve_answers_on_loopback() {
    let dir = tempfile::tempdir().unwrap();
    let mut child = Command::new(env!("CARGO_BIN_EXE_ucds"))
        .args(["--offline", "--data-dir"])
        .arg(dir.path())
        .args(["serve", "--port", "0"])
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).unwrap();
    let base = line.trim().strip_prefix("listening on ").unwrap().to_string();
    assert!(base.starts_with("http://127.0.0.1:"), "{base}");
    let body = reqwest::blocking::get(format!("{base}/chats")).unwrap().text().unwrap();
    child.kill().unwrap();
    child.wait().unwrap();
    assert_eq!(body, "[]");
}
