use std::io::Write;
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_powl2bpmn"))
}

fn corpus(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn run_stdin(args: &[&str], input: &str) -> Output {
    let mut child = bin()
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_str(&stdout(o)).unwrap_or_else(|e| panic!("{e}: {}", stdout(o)))
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

const ONE_TASK: &str = r#"process "one" { act a "Do It" @ "P" / "L" }"#;

#[test]
fn compile_writes_next_to_input() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("p13.powl");
    std::fs::copy(corpus("p13_complaint.powl"), &input).unwrap();
    let o = run(&["compile", p(&input), "--stats"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let stats = json(&o);
    assert_eq!(stats["pools"], 2);
    assert_eq!(stats["lanes"], 4);
    let xml = std::fs::read_to_string(dir.path().join("p13.bpmn")).unwrap();
    assert!(xml.contains("<bpmn:collaboration"));
}

#[test]
fn stats_of_one_task() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("one.bpmn");
    let o = run_stdin(&["compile", "-", "-o", p(&out), "--stats"], ONE_TASK);
    assert_eq!(code(&o), 0);
    assert_eq!(
        stdout(&o).trim(),
        r#"{"activities":1,"gateways":0,"pools":1,"lanes":1,"messageFlows":0}"#
    );
}

#[test]
fn stdin_to_stdout() {
    let o = run_stdin(&["compile", "-"], ONE_TASK);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).starts_with("<?xml"));
}

#[test]
fn syntax_error_exits_2_with_span() {
    let o = run_stdin(&["compile", "-"], "process \"x\" { act a \"A\" @ \"P\" }");
    assert_eq!(code(&o), 2);
    let err = stderr(&o);
    assert!(err.starts_with("<stdin>:1:"), "{err}");
    assert!(stdout(&o).is_empty());
}

#[test]
fn unreadable_input_exits_2() {
    assert_eq!(code(&run(&["compile", "/nonexistent/x.powl"])), 2);
}

#[test]
fn validate_clean_powl() {
    let o = run(&["validate", p(&corpus("p1_sales_order.powl"))]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = run(&["validate", p(&corpus("p1_sales_order.powl")), "--json"]);
    assert_eq!(json(&o)["valid"], true);
}

#[test]
fn validate_semantic_error_in_powl() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("bad.powl");
    std::fs::write(&f, r#"process "x" { po p { act a "A" @ "P" / "L" order { a -> b } } }"#).unwrap();
    let o = run(&["validate", p(&f), "--json"]);
    assert_eq!(code(&o), 1);
    let v = json(&o);
    assert_eq!(v["valid"], false);
    assert!(v["violations"][0]["span"]["start_line"].is_number());
}

#[test]
fn validate_bpmn_with_cross_pool_flow() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p13.bpmn");
    assert_eq!(code(&run(&["compile", p(&corpus("p13_complaint.powl")), "-o", p(&out)])), 0);
    assert_eq!(code(&run(&["validate", p(&out)])), 0);
    let xml = std::fs::read_to_string(&out).unwrap();
    // point a Customer-side flow at a Company-side task
    let mutated = xml.replacen("targetRef=\"main_receive_task\"", "targetRef=\"main_register_task\"", 1);
    assert_ne!(mutated, xml);
    std::fs::write(&out, mutated).unwrap();
    let o = run(&["validate", p(&out)]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("cross-pool sequence flow"), "{}", stderr(&o));
    let o = run(&["validate", p(&out), "--json"]);
    let v = json(&o);
    assert!(v["violations"]
        .as_array()
        .unwrap()
        .iter()
        .any(|x| x["rule"] == "cross-pool-sequence-flow"));
}

#[test]
fn validate_malformed_xml() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("broken.bpmn");
    std::fs::write(&f, "<bpmn:definitions").unwrap();
    assert_eq!(code(&run(&["validate", p(&f)])), 1);
}

#[test]
fn validate_usage_errors() {
    assert_eq!(code(&run(&["validate", "/nonexistent/file.powl"])), 2);
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("notes.txt");
    std::fs::write(&f, "x").unwrap();
    assert_eq!(code(&run(&["validate", p(&f)])), 2);
}

#[test]
fn check_corpus_model() {
    let o = run(&["check", p(&corpus("p7_booking.powl")), "--max-len", "12"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "equal");
}

#[test]
fn check_with_zero_length() {
    let o = run(&["check", p(&corpus("p2_hiring.powl")), "--max-len", "0", "--json"]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["verdict"], "equal");
}

#[test]
fn check_detects_mutation() {
    let o = run(&["check", p(&corpus("p13_complaint.powl")), "--mutate", "relabel", "--json"]);
    assert_eq!(code(&o), 1);
    let v = json(&o);
    assert_eq!(v["verdict"], "unequal");
    assert!(!v["witness"].as_array().unwrap().is_empty());
    let o = run(&["check", p(&corpus("p13_complaint.powl")), "--mutate", "relabel"]);
    assert!(stdout(&o).starts_with("unequal, witness <"));
}

#[test]
fn check_inconclusive_when_capped() {
    let o = run(&["check", p(&corpus("p18_university_admission.powl")), "--max-len", "30", "--max-traces", "5"]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).starts_with("inconclusive"));
}

const VALID: &str = "```\nprocess \"Leave\" {\n  po p {\n    act a \"Request Leave\" @ \"Firm\" / \"Staff\"\n    act b \"Approve Leave\" @ \"Firm\" / \"HR\"\n    order { a -> b }\n  }\n}\n```";
const INVALID: &str = "```\nprocess \"Leave\" { act a \"Request Leave\" }\n```";

fn transcript(dir: &Path, entries: &[&str]) -> PathBuf {
    let f = dir.join("transcript.json");
    std::fs::write(&f, serde_json::to_string(entries).unwrap()).unwrap();
    f
}

#[test]
fn generate_with_mock() {
    let dir = tempfile::tempdir().unwrap();
    let desc = dir.path().join("leave.txt");
    std::fs::write(&desc, "Staff request leave, HR approves it.").unwrap();
    let t = transcript(dir.path(), &[VALID]);
    let o = run(&["generate", p(&desc), "--mock", p(&t)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let powl = std::fs::read_to_string(dir.path().join("leave.powl")).unwrap();
    assert!(powl.contains("Approve Leave"));
    assert!(std::fs::read_to_string(dir.path().join("leave.bpmn")).unwrap().contains("Approve Leave"));
    let log: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("leave.log.json")).unwrap()).unwrap();
    assert_eq!(log["iterations"].as_array().unwrap().len(), 1);
}

#[test]
fn generate_gives_up_at_cap() {
    let dir = tempfile::tempdir().unwrap();
    let desc = dir.path().join("d.txt");
    std::fs::write(&desc, "something").unwrap();
    let t = transcript(dir.path(), &[INVALID]);
    let stem = dir.path().join("out");
    let o = run(&["generate", p(&desc), "--mock", p(&t), "--max-iterations", "3", "-o", p(&stem)]);
    assert_eq!(code(&o), 1);
    let log: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out.log.json")).unwrap()).unwrap();
    assert_eq!(log["iterations"].as_array().unwrap().len(), 3);
    assert!(!dir.path().join("out.powl").exists());
    assert!(!dir.path().join("out.bpmn").exists());
}

#[test]
fn generate_missing_credential_makes_no_request() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    listener.set_nonblocking(true).unwrap();
    let port = listener.local_addr().unwrap().port();
    let dir = tempfile::tempdir().unwrap();
    let desc = dir.path().join("d.txt");
    std::fs::write(&desc, "something").unwrap();
    let cfg = dir.path().join("provider.json");
    std::fs::write(
        &cfg,
        format!(
            r#"{{"endpointUrl":"http://127.0.0.1:{port}/v1/chat/completions","modelName":"m","apiKeyRef":"POWL_CLI_TEST_UNSET_KEY","timeout":5}}"#
        ),
    )
    .unwrap();
    let o = bin()
        .args(["generate", p(&desc), "--config", p(&cfg)])
        .env_remove("POWL_CLI_TEST_UNSET_KEY")
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("POWL_CLI_TEST_UNSET_KEY"));
    assert!(listener.accept().is_err(), "a connection was attempted");
    assert!(!dir.path().join("d.log.json").exists());
}

#[test]
fn generate_needs_a_provider() {
    let o = run(&["generate", "d.txt"]);
    assert_eq!(code(&o), 2);
}
