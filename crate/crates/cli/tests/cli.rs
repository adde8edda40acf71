use std::process::{Command, Output};

fn contact(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_contact"))
        .args(args)
        .output()
        .expect("the contact binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn sweep_writes_header_rows_and_sentinel() {
    let out = contact(&["sensitivity", "--lambda-grid", "0:1:0.5", "--samples", "500", "--t", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("mode,lambda1,lambda2"));
    assert_eq!(lines.len(), 5);
    assert_eq!(lines[4], "# end rows=3");
    // lambda = 0 is exactly zero
    assert!(lines[1].contains(",0,0,"), "{}", lines[1]);
}

#[test]
fn invalid_input_exits_with_2() {
    for args in [
        &["sensitivity", "--lambda-grid", "2:1:0.5"][..],
        &["sensitivity", "--lambda", "1", "--p", "0.9", "--q", "0.7"],
        &["delta", "--lambda", "2", "--lambda2", "1"],
        &["delta", "--preset", "theorem1", "--p", "0.5"],
        &["oracle-check", "--lambda", "1", "--ring", "30"],
    ] {
        let out = contact(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("error: "));
    }
}

#[test]
fn inconclusive_sign_exits_with_3() {
    let out = contact(&["delta", "--lambda", "1", "--lambda2", "1.001", "--samples", "200", "--t", "5"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stdout(&out).ends_with("# end rows=1\n"));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(&cfg, "# sweep\nlambda = 1.5\nsamples = 300\nseed = 4\nt = 2\n").unwrap();
    let from_file = stdout(&contact(&["survival", "--config", cfg.to_str().unwrap()]));
    let row = from_file.lines().nth(1).unwrap();
    assert!(row.starts_with("survival,1.5,,"), "{row}");
    assert!(row.contains(",300,"), "{row}");
    let flagged = stdout(&contact(&["survival", "--config", cfg.to_str().unwrap(), "--seed", "5"]));
    assert!(flagged.lines().nth(1).unwrap().contains(",5,survival"), "{flagged}");
}

#[test]
fn oracle_check_reports_exact_rows() {
    let out = contact(&["oracle-check", "--lambda", "1", "--ring", "8", "--r", "2", "--t", "1"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.lines().nth(1).unwrap().contains("exact:ring8"), "{text}");
}
