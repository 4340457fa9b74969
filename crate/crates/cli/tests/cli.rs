use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn tfrank(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tfrank"))
        .current_dir(dir)
        .env_remove("TF_STATE_DIR")
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = tfrank(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).expect("utf-8")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

// Alice sends two messages, Bob reads both and answers, Alice replies.
const FOUR: &str = r#"{"op":"send","id":"m1","from":0,"msg":"are you in?"}
{"op":"send","id":"m2","from":0,"msg":"need an answer"}
{"op":"deliver","send":"m1","to":1}
{"op":"deliver","send":"m2","to":1}
{"op":"send","id":"m3","from":1,"msg":"yes"}
{"op":"deliver","send":"m3","to":0}
{"op":"send","id":"m4","from":0,"msg":"great"}
{"op":"deliver","send":"m4","to":1}
"#;

fn group_trace() -> String {
    let mut t = String::new();
    let lines = [
        r#"{"op":"init","cid":"team"}"#,
        r#"{"op":"send","id":"a","from":0,"msg":"standup?"}"#,
        r#"{"op":"deliver","send":"a","to":2}"#,
        r#"{"op":"send","id":"b","from":2,"msg":"ok"}"#,
        r#"{"op":"deliver","send":"b","to":1}"#,
        r#"{"op":"deliver","send":"a","to":1}"#,
        r#"{"op":"send","id":"c","from":1,"msg":"late"}"#,
        r#"{"op":"deliver","send":"c","to":0,"id":"c0"}"#,
        r#"{"op":"deliver","send":"b","to":0}"#,
        r#"{"op":"deliver","send":"c","to":2}"#,
        r#"{"op":"redact","refs":["b"]}"#,
        r#"{"op":"report","refs":["a","b@0"]}"#,
    ];
    for l in lines {
        t.push_str(l);
        t.push('\n');
    }
    t
}

fn simulate(dir: &Path, mode: &[&str], trace: &str, state: &str) -> String {
    let tp = write(dir, "trace.jsonl", trace);
    let mut args = mode.to_vec();
    args.extend(["simulate", tp.to_str().unwrap(), "--state-dir", state]);
    ok(dir, &args)
}

#[test]
fn four_message_trace_judges_to_the_expected_graph() {
    let d = TempDir::new().unwrap();
    let log = simulate(d.path(), &[], FOUR, "st");
    let last: Value = serde_json::from_str(log.lines().last().unwrap()).unwrap();
    assert_eq!(last["counters"], serde_json::json!([[3, 1], [1, 3]]));
    write(d.path(), "log.jsonl", &log);
    ok(d.path(), &["report", "log.jsonl", "-o", "rep.json"]);
    let rep: Value = serde_json::from_str(&fs::read_to_string(d.path().join("rep.json")).unwrap()).unwrap();
    assert_eq!(rep["entries"].as_array().unwrap().len(), 4);
    let g = ok(d.path(), &["judge", "rep.json", "--state-dir", "st", "--json"]);
    // built by hand from the schedule above
    let want = concat!(
        r#"{"parties":2,"vertices":[["#,
        r#"{"t":"S","cs":1,"cr":0,"msg":"are you in?"},{"t":"S","cs":2,"cr":0,"msg":"need an answer"},"#,
        r#"{"t":"R","cs":2,"cr":1,"msg":"yes"},{"t":"S","cs":3,"cr":1,"msg":"great"}],["#,
        r#"{"t":"R","cs":0,"cr":1,"msg":"are you in?"},{"t":"R","cs":0,"cr":2,"msg":"need an answer"},"#,
        r#"{"t":"S","cs":1,"cr":2,"msg":"yes"},{"t":"R","cs":1,"cr":3,"msg":"great"}]],"#,
        r#""edges":[[[0,0],[1,0]],[[0,1],[1,1]],[[0,3],[1,3]],[[1,2],[0,2]]]}"#,
        "\n"
    );
    assert_eq!(g, want);
    let dot = ok(d.path(), &["judge", "rep.json", "--state-dir", "st"]);
    assert!(dot.starts_with("digraph causality {"));
    assert!(dot.contains(r#""p1_S_1_2" -> "p0_R_2_1" [label="yes"];"#));
    assert!(!dot.contains("dashed"));
}

#[test]
fn empty_trace_gives_empty_log() {
    let d = TempDir::new().unwrap();
    assert_eq!(simulate(d.path(), &[], "", "st"), "");
    assert_eq!(simulate(d.path(), &[], "\n\n", "st"), "");
}

#[test]
fn redacted_subset_shows_gaps() {
    let d = TempDir::new().unwrap();
    write(d.path(), "log.jsonl", &simulate(d.path(), &[], FOUR, "st"));
    ok(d.path(), &["report", "log.jsonl", "--select", "m1,m4", "--redact", "m1", "-o", "r.json"]);
    let rep: Value = serde_json::from_str(&fs::read_to_string(d.path().join("r.json")).unwrap()).unwrap();
    let es = rep["entries"].as_array().unwrap();
    assert_eq!(es.len(), 2);
    assert!(es[0].get("msg").is_none() && es[0].get("k_f").is_none());
    assert!(es[1].get("msg").is_some());
    let dot = ok(d.path(), &["judge", "r.json", "--state-dir", "st"]);
    // Alice: S(1,0) then S(3,1); Bob: R(0,1) then R(1,3)
    assert!(dot.contains(r#""p0_S_1_0" -> "p0_S_3_1" [style=dashed, label="Δcs=2 Δcr=1"];"#), "{dot}");
    assert!(dot.contains(r#""p1_R_0_1" -> "p1_R_1_3" [style=dashed, label="Δcs=1 Δcr=2"];"#), "{dot}");
    assert!(dot.contains(r#"[label="S(1,0) ⟨redacted⟩"]"#));
}

#[test]
fn every_subset_is_reportable() {
    let d = TempDir::new().unwrap();
    write(d.path(), "log.jsonl", &simulate(d.path(), &[], FOUR, "st"));
    let ids = ["m1", "m2", "m3", "m4"];
    for mask in 1..16u32 {
        let pick: Vec<&str> = (0..4).filter(|b| mask & (1 << b) != 0).map(|b| ids[b]).collect();
        let sel = pick.join(",");
        for redact in ["", pick[0]] {
            let mut args = vec!["report", "log.jsonl", "--select", &sel, "-o", "r.json"];
            if !redact.is_empty() {
                args.extend(["--redact", redact]);
            }
            ok(d.path(), &args);
            ok(d.path(), &["judge", "r.json", "--state-dir", "st", "--json"]);
        }
    }
}

#[test]
fn tampered_report_is_rejected() {
    let d = TempDir::new().unwrap();
    write(d.path(), "log.jsonl", &simulate(d.path(), &[], FOUR, "st"));
    ok(d.path(), &["report", "log.jsonl", "-o", "rep.json"]);
    let mut rep: Value = serde_json::from_str(&fs::read_to_string(d.path().join("rep.json")).unwrap()).unwrap();
    let mac = rep["entries"][1]["t_r"]["mac"].as_str().unwrap().to_string();
    let flipped = if mac.starts_with('A') { format!("B{}", &mac[1..]) } else { format!("A{}", &mac[1..]) };
    rep["entries"][1]["t_r"]["mac"] = Value::String(flipped);
    write(d.path(), "bad.json", &rep.to_string());
    let out = tfrank(d.path(), &["judge", "bad.json", "--state-dir", "st"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(String::from_utf8_lossy(&out.stderr).trim(), "report rejected");
    assert!(out.stdout.is_empty());
}

#[test]
fn undelivered_selection_is_refused() {
    let d = TempDir::new().unwrap();
    let trace = "{\"op\":\"send\",\"id\":\"m1\",\"from\":0,\"msg\":\"x\"}\n";
    write(d.path(), "log.jsonl", &simulate(d.path(), &[], trace, "st"));
    let out = tfrank(d.path(), &["report", "log.jsonl", "--select", "m1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("only messages that have been sent and received can be reported"));
}

#[test]
fn malformed_trace_names_the_line() {
    let d = TempDir::new().unwrap();
    let tp = write(d.path(), "t.jsonl", "{\"op\":\"init\",\"cid\":\"x\"}\n{\"op\":\"send\",\"id\":\"m1\",\"from\":0}\n");
    let out = tfrank(d.path(), &["simulate", tp.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("trace line 2"));
    let tp = write(d.path(), "t.jsonl", "{\"op\":\"deliver\",\"send\":\"nope\",\"to\":1}\n");
    let out = tfrank(d.path(), &["simulate", tp.to_str().unwrap()]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("trace line 1"));
    let long = "x".repeat(256);
    let tp = write(d.path(), "t.jsonl", &format!("{{\"op\":\"init\",\"cid\":\"{long}\"}}\n"));
    assert_eq!(tfrank(d.path(), &["simulate", tp.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn protocol_rejections_are_logged() {
    let d = TempDir::new().unwrap();
    let trace = concat!(
        "{\"op\":\"send\",\"id\":\"m1\",\"from\":0,\"msg\":\"x\"}\n",
        "{\"op\":\"deliver\",\"send\":\"m1\",\"to\":1}\n",
        "{\"op\":\"deliver\",\"send\":\"m1\",\"to\":1}\n",
    );
    let log = simulate(d.path(), &[], trace, "st");
    let last: Value = serde_json::from_str(log.lines().nth(2).unwrap()).unwrap();
    assert_eq!(last["status"], "rejected");
    assert!(last.get("t_r").is_none());
    assert_eq!(last["counters"], serde_json::json!([[1, 0], [0, 1]]));
}

#[test]
fn replay_check_verdicts() {
    let d = TempDir::new().unwrap();
    let trace = concat!(
        "{\"op\":\"send\",\"id\":\"a\",\"from\":0,\"msg\":\"one\"}\n",
        "{\"op\":\"deliver\",\"send\":\"a\",\"to\":1,\"id\":\"ra\"}\n",
        "{\"op\":\"send\",\"id\":\"b\",\"from\":0,\"msg\":\"two\"}\n",
        "{\"op\":\"send\",\"id\":\"c\",\"from\":0,\"msg\":\"three\",\"pred\":\"a\"}\n",
        "{\"op\":\"send\",\"id\":\"e\",\"from\":1,\"msg\":\"four\"}\n",
    );
    write(d.path(), "log.jsonl", &simulate(d.path(), &["--mode", "outsourced"], trace, "st"));
    for id in ["a", "b", "c", "e", "ra"] {
        write(d.path(), &format!("{id}.json"), &ok(d.path(), &["tag", "log.jsonl", id]));
    }
    let check = |x: &str, y: &str| ok(d.path(), &["replay-check", x, y, "--state-dir", "st"]);
    assert_eq!(check("b.json", "c.json"), "party 0 convicted\n");
    assert_eq!(check("a.json", "b.json"), "no replay\n");
    assert_eq!(check("ra.json", "e.json"), "no replay\n");
    assert_eq!(check("b.json", "b.json"), "no replay\n");
    assert_eq!(ok(d.path(), &["replay-check", "c.json", "b.json", "--state-dir", "st", "--json"]), "{\"convicted\":0}\n");
    write(d.path(), "junk.json", "{\"ack\":\"AAAA\"}");
    assert_eq!(tfrank(d.path(), &["replay-check", "junk.json", "b.json", "--state-dir", "st"]).status.code(), Some(2));
}

#[test]
fn replay_check_needs_outsourced_state() {
    let d = TempDir::new().unwrap();
    write(d.path(), "log.jsonl", &simulate(d.path(), &[], FOUR, "st"));
    write(d.path(), "t.json", &ok(d.path(), &["tag", "log.jsonl", "m1"]));
    let out = tfrank(d.path(), &["replay-check", "t.json", "t.json", "--state-dir", "st"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn runs_are_deterministic() {
    let d = TempDir::new().unwrap();
    let run = |state: &str, seed: &str| {
        let log = simulate(d.path(), &["--mode", "group-3", "--seed", seed], &group_trace(), state);
        write(d.path(), "log.jsonl", &log);
        let rep = ok(d.path(), &["report", "log.jsonl", "--select", "a,c0", "--redact", "a@2"]);
        write(d.path(), "r.json", &rep);
        let g = ok(d.path(), &["judge", "r.json", "--state-dir", state]);
        (log, rep, g)
    };
    let one = run("s1", "7");
    assert_eq!(one, run("s2", "7"));
    assert_ne!(one.0, run("s3", "8").0);
}

#[test]
fn report_ops_in_a_trace_match_the_report_command() {
    let d = TempDir::new().unwrap();
    let log = simulate(d.path(), &["--mode", "group-3"], &group_trace(), "st");
    let inline: Value = serde_json::from_str(log.lines().last().unwrap()).unwrap();
    assert_eq!(inline["op"], "report");
    write(d.path(), "log.jsonl", &log);
    let rep: Value = serde_json::from_str(&ok(d.path(), &["report", "log.jsonl", "--select", "a,b@0"])).unwrap();
    assert_eq!(rep["entries"], inline["report"]);
    assert_eq!(rep["cid"], "team");
    // the trace redacted b
    assert!(rep["entries"][2].get("msg").is_none());
    assert!(rep["entries"][0].get("msg").is_some());
}

#[test]
fn split_runs_match_a_single_run() {
    for mode in [&["--mode", "2p"][..], &["--mode", "group-3"], &["--mode", "outsourced", "--parties", "3"]] {
        let d = TempDir::new().unwrap();
        let trace = if mode[1] == "2p" { FOUR.to_string() } else { group_trace() };
        let whole = simulate(d.path(), mode, &trace, "one");
        let mut pieces = String::new();
        for line in trace.lines() {
            // mode only matters when the state is created
            pieces.push_str(&simulate(d.path(), mode, &format!("{line}\n"), "split"));
        }
        assert_eq!(whole, pieces, "{mode:?}");
        for f in ["keystore.json", "server.jsonl", "session.json"] {
            let a = fs::read(d.path().join("one").join(f)).unwrap();
            let b = fs::read(d.path().join("split").join(f)).unwrap();
            assert_eq!(a, b, "{f}");
        }
    }
}

#[test]
fn saved_state_round_trips_bit_exactly() {
    let d = TempDir::new().unwrap();
    simulate(d.path(), &["--mode", "group-3"], &group_trace(), "st");
    let before: Vec<Vec<u8>> =
        ["keystore.json", "server.jsonl", "session.json"].iter().map(|f| fs::read(d.path().join("st").join(f)).unwrap()).collect();
    simulate(d.path(), &[], "", "st");
    let after: Vec<Vec<u8>> =
        ["keystore.json", "server.jsonl", "session.json"].iter().map(|f| fs::read(d.path().join("st").join(f)).unwrap()).collect();
    assert_eq!(before, after);
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        let mode = fs::metadata(d.path().join("st/keystore.json")).unwrap().permissions().mode();
        assert_eq!(mode & 0o777, 0o600);
    }
}

#[test]
fn mode_clash_with_saved_state_is_an_error() {
    let d = TempDir::new().unwrap();
    simulate(d.path(), &[], FOUR, "st");
    let tp = write(d.path(), "e.jsonl", "");
    let out = tfrank(d.path(), &["--mode", "group-3", "simulate", tp.to_str().unwrap(), "--state-dir", "st"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn corrupt_state_is_named() {
    let d = TempDir::new().unwrap();
    write(d.path(), "log.jsonl", &simulate(d.path(), &[], FOUR, "st"));
    ok(d.path(), &["report", "log.jsonl", "-o", "rep.json"]);
    let server = d.path().join("st/server.jsonl");
    let text = fs::read_to_string(&server).unwrap();

    fs::write(&server, &text[..text.len() - 5]).unwrap();
    let out = tfrank(d.path(), &["judge", "rep.json", "--state-dir", "st"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("corrupt state") && err.contains("server.jsonl"), "{err}");

    let broken = text.replacen("\"counters\":[[", "\"counters\":[[\"x\",", 1);
    fs::write(&server, broken).unwrap();
    let err = String::from_utf8_lossy(&tfrank(d.path(), &["judge", "rep.json", "--state-dir", "st"]).stderr).into_owned();
    assert!(err.contains("server.jsonl record 2"), "{err}");

    fs::write(&server, &text).unwrap();
    let session = d.path().join("st/session.json");
    let s = fs::read(&session).unwrap();
    fs::write(&session, &s[..s.len() / 2]).unwrap();
    let err = String::from_utf8_lossy(&tfrank(d.path(), &["judge", "rep.json", "--state-dir", "st"]).stderr).into_owned();
    assert!(err.contains("corrupt state: session.json"), "{err}");
}

#[test]
fn stateful_and_outsourced_judge_alike() {
    let d = TempDir::new().unwrap();
    let judged = |mode: &[&str], state: &str, trace: &str, sel: &str| {
        write(d.path(), "log.jsonl", &simulate(d.path(), mode, trace, state));
        ok(d.path(), &["report", "log.jsonl", "--select", sel, "-o", "r.json"]);
        ok(d.path(), &["judge", "r.json", "--state-dir", state, "--json"])
    };
    assert_eq!(judged(&["--mode", "2p"], "a", FOUR, "m1,m3,m4"), judged(&["--mode", "outsourced"], "b", FOUR, "m1,m3,m4"));
    let g = group_trace();
    assert_eq!(
        judged(&["--mode", "group-3"], "c", &g, "a,b,c"),
        judged(&["--mode", "outsourced", "--parties", "3"], "d", &g, "a,b,c")
    );
}

#[test]
fn attack_demo_reports_the_expected_verdict() {
    let d = TempDir::new().unwrap();
    let text = ok(d.path(), &["attack-demo"]);
    assert!(text.contains("(m1, m3, m2, m4)") && text.contains("(m1, m2, m3, m4)"));
    assert!(text.trim_end().ends_with("baseline: attack succeeds; QCC: attack fails"));
    let v: Value = serde_json::from_str(&ok(d.path(), &["attack-demo", "--json"])).unwrap();
    assert_eq!(v, serde_json::json!({"baseline_win": true, "qcc_win": false}));
}

#[test]
fn games_pass_on_a_short_sweep() {
    let d = TempDir::new().unwrap();
    let out = ok(d.path(), &["games", "--seeds", "8", "--json"]);
    let lines: Vec<Value> = serde_json::from_str(&out).unwrap();
    assert!(lines.len() >= 6);
    assert!(lines.iter().all(|l| l["pass"] == true), "{out}");
}

#[test]
fn usage_errors_exit_2() {
    let d = TempDir::new().unwrap();
    assert_eq!(tfrank(d.path(), &["bogus"]).status.code(), Some(2));
    assert_eq!(tfrank(d.path(), &["--mode", "ring", "simulate", "x"]).status.code(), Some(2));
    let out = tfrank(d.path(), &["judge", "r.json"]);
    assert_eq!(out.status.code(), Some(2));
}
