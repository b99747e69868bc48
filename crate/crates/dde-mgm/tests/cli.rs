//! End-to-end tests of the `dde-mgm` binary: subcommands, formats, stdin
//! protocols, and exit codes (0 ok, 2 parse error, 3 precondition error).

use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dde-mgm"))
}

fn run_with_stdin(mut cmd: Command, input: &str) -> Output {
    let mut child = cmd
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary spawns");
    child
        .stdin
        .as_mut()
        .unwrap()
        .write_all(input.as_bytes())
        .unwrap();
    child.wait_with_output().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

/// Two easily separable classes: square-ish vs slow sine.
fn write_toy_csv(path: &Path) {
    let mut rows = vec!["series_id,label,v1".to_string()];
    for (label, period) in [("slow", 24.0), ("fast", 7.0)] {
        for i in 0..6 {
            let len = 160 + 13 * i;
            for t in 0..len {
                let v = (t as f64 * std::f64::consts::TAU / period + i as f64).sin()
                    + i as f64 * 0.5;
                rows.push(format!("{label}-{i},{label},{v}"));
            }
        }
    }
    std::fs::write(path, rows.join("\n") + "\n").unwrap();
}

#[test]
fn select_params_reports_selection() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("toy.csv");
    write_toy_csv(&csv);
    let out = bin()
        .args(["select-params", "--input"])
        .arg(&csv)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.lines().any(|l| l.starts_with("s=")), "{text}");
    assert!(text.lines().any(|l| l.starts_with("d=")), "{text}");
    assert!(text.lines().any(|l| l.starts_with("cells=")), "{text}");
}

#[test]
fn train_classify_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("toy.csv");
    let model = dir.path().join("toy.model");
    write_toy_csv(&csv);

    let out = bin()
        .args(["train", "--s", "3", "--d", "2", "--bins", "40", "--input"])
        .arg(&csv)
        .arg("--model")
        .arg(&model)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("classes=2"));
    let model_text = std::fs::read_to_string(&model).unwrap();
    assert!(model_text.starts_with("DDEMGM 1\n"));
    assert!(model_text.lines().last().unwrap().starts_with("checksum "));

    let out = bin()
        .args(["classify", "--model"])
        .arg(&model)
        .arg("--input")
        .arg(&csv)
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("accuracy=1"), "{text}");

    // JSON mode emits one object per line.
    let out = bin()
        .args(["classify", "--json", "--model"])
        .arg(&model)
        .arg("--input")
        .arg(&csv)
        .output()
        .unwrap();
    for line in stdout(&out).lines() {
        serde_json::from_str::<serde_json::Value>(line).expect("valid JSON line");
    }
}

#[test]
fn classify_stdin_segments_and_cadence() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("toy.csv");
    let model = dir.path().join("toy.model");
    write_toy_csv(&csv);
    assert!(bin()
        .args(["train", "--s", "3", "--d", "2", "--bins", "40", "--input"])
        .arg(&csv)
        .arg("--model")
        .arg(&model)
        .output()
        .unwrap()
        .status
        .success());

    // Two segments separated by a blank line; slow then fast.
    let mut input = String::new();
    for t in 0..80 {
        input.push_str(&format!(
            "{}\n",
            (t as f64 * std::f64::consts::TAU / 24.0).sin()
        ));
    }
    input.push('\n');
    for t in 0..80 {
        input.push_str(&format!(
            "{}\n",
            (t as f64 * std::f64::consts::TAU / 7.0).sin()
        ));
    }
    let mut cmd = bin();
    cmd.args(["classify", "--stdin", "--emit-every", "40", "--model"])
        .arg(&model);
    let out = run_with_stdin(cmd, &input);
    assert!(out.status.success());
    let text = stdout(&out);
    let finals: Vec<&str> = text.lines().filter(|l| l.contains("final=true")).collect();
    assert_eq!(finals.len(), 2, "{text}");
    assert!(finals[0].contains("pred=slow"), "{text}");
    assert!(finals[1].contains("pred=fast"), "{text}");
    assert!(text.lines().any(|l| l.contains("final=false")), "{text}");
}

#[test]
fn train_from_stdin_stream() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("stream.model");
    let mut input = String::new();
    for t in 0..120 {
        input.push_str(&format!(
            "a,{}\n",
            (t as f64 * std::f64::consts::TAU / 8.0).sin()
        ));
    }
    input.push('\n');
    for t in 0..120 {
        input.push_str(&format!("b,{}\n", [0.0, 2.0][t % 2]));
    }
    let mut cmd = bin();
    cmd.args(["train", "--stdin", "--s", "1", "--d", "2", "--bins", "30", "--model"])
        .arg(&model);
    let out = run_with_stdin(cmd, &input);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("classes=2"));
}

#[test]
fn eval_protocols_and_parallel_equality() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("toy.csv");
    write_toy_csv(&csv);

    let out = bin()
        .args([
            "eval", "--protocol", "holdout50", "--seed", "5", "--s", "3", "--d", "2", "--input",
        ])
        .arg(&csv)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("protocol=holdout50"), "{text}");
    assert!(text.lines().any(|l| l.starts_with("accuracy=")), "{text}");
    assert!(text.lines().any(|l| l.starts_with("confusion ")), "{text}");

    let run_online = |parallel: bool| {
        let mut cmd = bin();
        cmd.args([
            "eval", "--protocol", "online", "--seed", "5", "--s", "3", "--d", "2", "--json",
            "--input",
        ])
        .arg(&csv);
        if parallel {
            cmd.arg("--parallel");
        }
        let out = cmd.output().unwrap();
        assert!(out.status.success());
        let text = stdout(&out);
        let report: serde_json::Value =
            serde_json::from_str(text.lines().nth(1).unwrap()).unwrap();
        (
            report["accuracy"].clone(),
            report["confusion"].clone(),
            report["curve"].clone(),
        )
    };
    assert_eq!(run_online(false), run_online(true));
}

#[test]
fn bench_reports_per_bins_line() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("long.csv");
    let mut rows = vec!["series_id,label,v1".to_string()];
    for t in 0..10_500 {
        rows.push(format!(
            "s,w,{}",
            (t as f64 * std::f64::consts::TAU / 50.0).sin()
        ));
    }
    std::fs::write(&csv, rows.join("\n") + "\n").unwrap();

    let out = bin()
        .args(["bench", "--bins-sweep", "15,30", "--input"])
        .arg(&csv)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2, "{text}");
    assert!(lines[0].starts_with("bins=15 "), "{text}");
    assert!(lines[1].starts_with("bins=30 "), "{text}");
    assert!(lines[0].contains("rate="), "{text}");
}

#[test]
fn exit_code_2_on_parse_errors() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "series_id,label,v1\ns1,a,1\ns1,a,oops\n").unwrap();
    let out = bin()
        .args(["select-params", "--input"])
        .arg(&bad)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3") || String::from_utf8_lossy(&out.stderr).contains(":3"));

    // Corrupted model files are parse errors too.
    let model = dir.path().join("bad.model");
    std::fs::write(&model, "DDEMGM 1\nconfig n=1 s=1 d=2 tau=1 r=1 cells=0.1,0.1\nchecksum 00000000\n").unwrap();
    let csv = dir.path().join("toy.csv");
    write_toy_csv(&csv);
    let out = bin()
        .args(["classify", "--model"])
        .arg(&model)
        .arg("--input")
        .arg(&csv)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn exit_code_3_on_precondition_errors() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("toy.csv");
    write_toy_csv(&csv);

    // Missing input file.
    let out = bin()
        .args(["select-params", "--input", "/nonexistent/data.csv"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));

    // Model trained on nothing, then used to classify.
    let model = dir.path().join("empty.model");
    let mut cmd = bin();
    cmd.args(["train", "--stdin", "--s", "1", "--d", "2", "--bins", "30", "--model"])
        .arg(&model);
    let out = run_with_stdin(cmd, "a,1.0\na,2.0\n");
    assert!(out.status.success());
    let out = bin()
        .args(["classify", "--model"])
        .arg(&model)
        .arg("--input")
        .arg(&csv)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));

    // Short series cannot be benched.
    let out = bin()
        .args(["bench", "--s", "2", "--input"])
        .arg(&csv)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}
