//! The REPL and the command-line binary.

mod common;

use std::path::Path;
use std::process::{Command, Output, Stdio};
use std::io::Write;

use common::*;
use tardi::frontend::repl::{repl, PROMPT};
use tardi::tabling::Mode;

fn repl_output(name: &str, mode: Mode, input: &str) -> (String, i32) {
    let mut s = session(name, mode);
    let mut out = Vec::new();
    let code = repl(&mut s, input.as_bytes(), &mut out).unwrap();
    (String::from_utf8(out).unwrap(), code)
}

#[test]
fn declined_retry_changes_nothing() {
    let (out, code) = repl_output(
        "get_stream",
        Mode::Off,
        "next\nretry 0\nn\nstack\nretry 0\ny\nquit\n",
    );
    assert!(out.contains("proceed? [y/N] retry aborted"), "{out}");
    assert!(out.contains("warning: retry of depth 0"), "{out}");
    assert!(out.contains("retried call at depth 0; I/O counter reset to 0"), "{out}");
    // The confirmed retry shows its warning only once.
    assert_eq!(out.matches("warning:").count(), 2, "{out}");
    assert_eq!(code, 0);
}

#[test]
fn io_listing_and_help() {
    let (out, _) = repl_output("ticks", Mode::Full, "help\nio-actions 0\nnext\nio-actions 0\nstack\nquit\n");
    assert!(out.contains("no I/O in this call"), "{out}");
    assert!(out.contains("actions [0, 1), page 1/1:"), "{out}");
    assert!(out.contains("0: write_string[handle(1), \".\"] -> [ok]"), "{out}");
    assert!(out.contains("#0 main entry-counter=0"), "{out}");
    assert!(out.starts_with("stopped (entry) in main"), "{out}");
    assert!(out.contains(PROMPT));
}

#[test]
fn bad_commands_are_reported() {
    let (out, code) = repl_output("ticks", Mode::Full, "frobnicate\nretry\nprint nothing\n");
    assert_eq!(out.matches("error:").count(), 3, "{out}");
    // End of input without quit.
    assert_eq!(code, 0);
}

#[test]
fn divergence_exit_code_in_repl() {
    let line = line_of("ask", "respond(c);");
    let input = format!("break {line}\ncontinue\ntable start\nnext\nretry 1\ny\ndelete 1\ncontinue\ncontinue\nstatus\nquit\n");
    let (out, code) = repl_output("ask", Mode::Manual { enabled: false }, &input);
    assert_eq!(out.matches("divergence:").count(), 1, "{out}");
    assert!(out.contains("error: session halted"), "{out}");
    assert!(out.contains("error: action 1 was recorded as write_string"), "{out}");
    assert_eq!(code, 3);
}

fn tardi(args: &[&str], cwd: &Path, stdin: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_tardi"))
        .args(args)
        .current_dir(cwd)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(stdin.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

#[test]
fn cli_run_with_scripted_backend() {
    let dir = programs_dir();
    let out = tardi(&["run", "read_next_item.tardi", "--backend", "script:read_next_item.script"], &dir, "");
    assert!(out.status.success(), "{out:?}");
    assert_eq!(String::from_utf8_lossy(&out.stdout), "item: apple\n1 item(s)\n");
}

#[test]
fn cli_run_against_the_file_system() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::copy(programs_dir().join("read_problem.tardi"), tmp.path().join("p.tardi")).unwrap();
    let out = tardi(&["run", "p.tardi", "--table-io=off"], tmp.path(), "4\n");
    assert!(out.status.success(), "{out:?}");
    assert_eq!(String::from_utf8_lossy(&out.stdout), "solution: 17\n");
}

#[test]
fn cli_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("bad.tardi"), "proc main() {\n    let x = y;\n}\n").unwrap();
    let out = tardi(&["check", "bad.tardi"], tmp.path(), "");
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.tardi:2:13: unbound variable y"), "{out:?}");

    std::fs::write(tmp.path().join("div.tardi"), "proc main() {\n    let x = 1 / 0;\n}\n").unwrap();
    let out = tardi(&["run", "div.tardi"], tmp.path(), "");
    assert_eq!(out.status.code(), Some(2));

    let out = tardi(&["run", "div.tardi", "--table-io=sometimes"], tmp.path(), "");
    assert_eq!(out.status.code(), Some(1));
    let out = tardi(&["check", "missing.tardi"], tmp.path(), "");
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn cli_debug_over_stdio_protocol() {
    let out = tardi(
        &["debug", "ask.tardi", "--table-io=full", "--backend", "script:ask.script", "--serve", "stdio"],
        &programs_dir(),
        "{\"id\":1,\"cmd\":\"continue\"}\n{\"id\":2,\"cmd\":\"quit\"}\n",
    );
    assert!(out.status.success(), "{out:?}");
    let text = String::from_utf8_lossy(&out.stdout);
    let last: serde_json::Value = serde_json::from_str(text.lines().last().unwrap()).unwrap();
    assert_eq!(last, serde_json::json!({"id": 2, "ok": true, "body": {"exit_code": 0}}));
    assert!(text.contains("\"type\":\"exited\""), "{text}");
}

#[test]
fn cli_debug_with_command_file() {
    let tmp = tempfile::tempdir().unwrap();
    let cmds = tmp.path().join("cmds.txt");
    std::fs::write(&cmds, "continue\nquit\n").unwrap();
    let out = tardi(
        &["debug", "write_solution.tardi", "--commands", cmds.to_str().unwrap()],
        &programs_dir(),
        "",
    );
    assert!(out.status.success(), "{out:?}");
    assert!(String::from_utf8_lossy(&out.stdout).contains("program exited with code 0"));
}
