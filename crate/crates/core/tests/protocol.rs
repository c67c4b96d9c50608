//! The JSON protocol: message shapes, a headless scripted session, and the
//! TCP endpoint.

mod common;

use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::mpsc;
use std::thread;

use common::*;
use proptest::prelude::*;
use serde_json::{json, Map, Value as Json};
use tardi::frontend::protocol::{decode, encode, serve_stream, Event, Message, Request, Response, ServeEnd};
use tardi::frontend::server::{serve_listener, BUSY};
use tardi::tabling::Mode;

fn json_leaf() -> impl Strategy<Value = Json> {
    prop_oneof![
        Just(Json::Null),
        any::<bool>().prop_map(Json::Bool),
        any::<i64>().prop_map(|i| json!(i)),
        "[a-z:./0-9 ]{0,12}".prop_map(Json::String),
    ]
}

fn json_map() -> impl Strategy<Value = Map<String, Json>> {
    prop::collection::btree_map("[a-z_]{1,8}", json_leaf(), 0..4).prop_map(|m| m.into_iter().collect())
}

fn message() -> impl Strategy<Value = Message> {
    prop_oneof![
        (any::<i64>(), "[a-z-]{1,10}", json_map()).prop_map(|(id, cmd, args)| Message::Request(Request { id, cmd, args })),
        (any::<Option<i64>>(), json_map()).prop_map(|(id, body)| Message::Response(Response::ok(id.unwrap_or(0), Json::Object(body)))),
        (any::<Option<i64>>(), "[a-z ]{1,20}").prop_map(|(id, e)| Message::Response(Response::error(id, e))),
        ("[a-z_]{1,10}", json_map()).prop_map(|(kind, p)| Message::Event(Event { kind, payload: Json::Object(p) })),
    ]
}

proptest! {
    #[test]
    fn messages_round_trip(m in message()) {
        let line = encode(&m);
        prop_assert!(!line.contains('\n'));
        prop_assert_eq!(decode(&line).unwrap(), m);
    }
}

/// Feeds `requests` to a fresh session and returns the output lines.
fn transcript(name: &str, mode: Mode, requests: &[Json]) -> (Vec<Json>, ServeEnd) {
    let mut input = String::new();
    for r in requests {
        input.push_str(&r.to_string());
        input.push('\n');
    }
    let mut s = session(name, mode);
    s.take_events();
    let mut out = Vec::new();
    let end = serve_stream(&mut s, input.as_bytes(), &mut out).unwrap();
    let lines = String::from_utf8(out)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    (lines, end)
}

fn responses(lines: &[Json]) -> Vec<&Json> {
    lines.iter().filter(|l| l.get("ok").is_some()).collect()
}

#[test]
fn parse_errors_are_answered() {
    let (lines, end) = transcript("ticks", Mode::Full, &[json!("not a request"), json!({"id": 1, "cmd": "status"})]);
    assert_eq!(lines[0], json!({"id": null, "ok": false, "error": "parse"}));
    assert_eq!(lines[1]["id"], json!(1));
    assert_eq!(end, ServeEnd::Disconnected);
}

#[test]
fn unknown_commands_and_bad_args() {
    let (lines, _) = transcript(
        "ticks",
        Mode::Full,
        &[
            json!({"id": 1, "cmd": "frobnicate"}),
            json!({"id": 2, "cmd": "retry"}),
            json!({"id": 3, "cmd": "retry", "args": {"depth": -1}}),
            json!({"id": 4, "cmd": "table", "args": {"action": "sideways"}}),
        ],
    );
    for (i, r) in responses(&lines).iter().enumerate() {
        assert_eq!(r["id"], json!(i + 1));
        assert_eq!(r["ok"], json!(false), "{r}");
    }
}

#[test]
fn every_command_is_reachable() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("trace.txt");
    let line = line_of("ticks", "seg();");
    let requests = [
        json!({"id": 1, "cmd": "break", "args": {"location": format!("ticks.tardi:{line}")}}),
        json!({"id": 2, "cmd": "break", "args": {"proc": "tick"}}),
        json!({"id": 3, "cmd": "delete", "args": {"breakpoint": 2}}),
        json!({"id": 4, "cmd": "continue"}),
        json!({"id": 5, "cmd": "step"}),
        json!({"id": 6, "cmd": "next"}),
        json!({"id": 7, "cmd": "finish"}),
        json!({"id": 8, "cmd": "stack"}),
        json!({"id": 9, "cmd": "print", "args": {"name": "nothing"}}),
        json!({"id": 10, "cmd": "safety", "args": {"depth": 0}}),
        json!({"id": 11, "cmd": "io-actions", "args": {"depth": 0}}),
        json!({"id": 12, "cmd": "calls"}),
        json!({"id": 13, "cmd": "call-io", "args": {"call": 1}}),
        json!({"id": 14, "cmd": "io-table"}),
        json!({"id": 15, "cmd": "table", "args": {"action": "status"}}),
        json!({"id": 16, "cmd": "trace-dump", "args": {"path": dump.to_str().unwrap()}}),
        json!({"id": 17, "cmd": "retry", "args": {"depth": 0}}),
        json!({"id": 18, "cmd": "status"}),
        json!({"id": 19, "cmd": "quit"}),
    ];
    let (lines, end) = transcript("ticks", Mode::Full, &requests);
    assert_eq!(end, ServeEnd::Quit);
    let rs = responses(&lines);
    assert_eq!(rs.len(), requests.len());
    for r in &rs {
        let id = r["id"].as_i64().unwrap();
        // `print` of an unbound name is the only expected error.
        assert_eq!(r["ok"], json!(id != 9), "{r}");
    }
    assert_eq!(rs[7]["body"]["frames"].as_array().unwrap().len(), 1);
    assert_eq!(rs[9]["body"]["verdict"], json!("safe"));
    assert!(std::fs::read_to_string(&dump).unwrap().lines().count() > 0);
    assert_eq!(rs[18]["body"], json!({"exit_code": 0}));
}

/// Events for a request come before its response, and every response
/// carries the request's id.
#[test]
fn events_precede_responses() {
    let (lines, _) = transcript(
        "fifty",
        Mode::Full,
        &[json!({"id": 1, "cmd": "next"}), json!({"id": 2, "cmd": "next"})],
    );
    let mut pending_events = 0;
    let mut seen = Vec::new();
    for l in &lines {
        if l.get("type").is_some() {
            pending_events += 1;
        } else {
            assert!(pending_events > 0, "response without a stop event: {l}");
            pending_events = 0;
            seen.push(l["id"].as_i64().unwrap());
        }
    }
    assert_eq!(seen, [1, 2]);
}

/// A front end's session: break, continue, safe retry, unsafe retry
/// declined then confirmed, and paging through a call's I/O.
#[test]
fn scripted_front_end_session() {
    let seg_line = line_of("ticks", "let _ = write_string(stdout, \"|\");");
    let requests = [
        json!({"id": 1, "cmd": "table", "args": {"action": "start"}}),
        json!({"id": 2, "cmd": "break", "args": {"line": seg_line}}),
        json!({"id": 3, "cmd": "continue"}),
        json!({"id": 4, "cmd": "retry", "args": {"depth": 1}}),
        json!({"id": 5, "cmd": "continue"}),
        json!({"id": 6, "cmd": "io-actions", "args": {"depth": 1, "page": 0}}),
        json!({"id": 7, "cmd": "table", "args": {"action": "stop"}}),
        json!({"id": 8, "cmd": "next"}),
        json!({"id": 9, "cmd": "step"}),
        json!({"id": 10, "cmd": "retry", "args": {"depth": 0}}),
        json!({"id": 11, "cmd": "retry", "args": {"depth": 0, "force": true}}),
        json!({"id": 12, "cmd": "stack"}),
    ];
    let (lines, _) = transcript("ticks", Mode::Manual { enabled: false }, &requests);
    let by_id = |id: i64| -> (Vec<&Json>, &Json) {
        let end = lines.iter().position(|l| l["id"] == json!(id) && l.get("ok").is_some()).unwrap();
        let start = lines[..end].iter().rposition(|l| l.get("ok").is_some()).map_or(0, |p| p + 1);
        (lines[start..end].iter().collect(), &lines[end])
    };

    let (evs, r) = by_id(4);
    assert_eq!(r["body"]["verdict"], json!("safe"));
    assert_eq!(r["body"]["n_actions"], json!(8));
    assert!(evs.iter().all(|e| e["type"] != "warning"));
    assert_eq!(evs.last().unwrap()["type"], json!("retried"));

    // The retried ticks replay.
    let (evs, _) = by_id(5);
    let io: Vec<_> = evs.iter().filter(|e| e["type"] == "io_action").collect();
    assert_eq!(io.len(), 8);
    assert!(io.iter().all(|e| e["payload"]["replayed"] == json!(true)));

    let (_, r) = by_id(6);
    let page = &r["body"];
    assert_eq!((page["entry_counter"].clone(), page["exit_counter"].clone()), (json!(2), json!(10)));
    assert_eq!(page["actions"].as_array().unwrap().len(), 8);
    assert_eq!(page["actions"][0]["replay_count"], json!(1));

    // The untabled "|" makes main's retry unsafe.
    let (evs, r) = by_id(10);
    assert_eq!(r["body"]["needs_confirm"], json!(true));
    let crossed = r["body"]["report"]["n_actions_crossed"].clone();
    assert_eq!(crossed, json!(11));
    assert_eq!(r["body"]["report"]["n_untabled"], json!(1));
    assert_eq!(evs.len(), 1);
    assert_eq!(evs[0]["type"], json!("warning"));
    assert_eq!(evs[0]["payload"]["report"]["n_actions_crossed"], crossed);

    let (evs, r) = by_id(11);
    assert_eq!(r["ok"], json!(true));
    let kinds: Vec<_> = evs.iter().map(|e| e["type"].as_str().unwrap()).collect();
    assert_eq!(kinds, ["warning", "retried"]);
    let (_, r) = by_id(12);
    assert_eq!(r["body"]["frames"].as_array().unwrap().len(), 1);
}

fn read_json(reader: &mut impl BufRead) -> Json {
    let mut line = String::new();
    reader.read_line(&mut line).unwrap();
    serde_json::from_str(&line).unwrap_or_else(|e| panic!("{e}: {line:?}"))
}

fn request(stream: &mut TcpStream, reader: &mut impl BufRead, req: Json) -> Json {
    writeln!(stream, "{req}").unwrap();
    loop {
        let msg = read_json(reader);
        if msg.get("ok").is_some() {
            return msg;
        }
    }
}

#[test]
fn tcp_refuses_a_second_client() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let (attached_tx, attached_rx) = mpsc::channel();
    let (refused_tx, refused_rx) = mpsc::channel();

    let first = thread::spawn(move || {
        let mut stream = TcpStream::connect(addr).unwrap();
        let mut reader = BufReader::new(stream.try_clone().unwrap());
        let r = request(&mut stream, &mut reader, json!({"id": 1, "cmd": "status"}));
        assert_eq!(r["ok"], json!(true));
        attached_tx.send(()).unwrap();
        let refusal: Json = refused_rx.recv().unwrap();
        let r = request(&mut stream, &mut reader, json!({"id": 2, "cmd": "quit"}));
        assert_eq!(r["ok"], json!(true));
        refusal
    });
    let second = thread::spawn(move || {
        attached_rx.recv().unwrap();
        let stream = TcpStream::connect(addr).unwrap();
        let mut reader = BufReader::new(stream);
        refused_tx.send(read_json(&mut reader)).unwrap();
    });

    let mut s = session("ticks", Mode::Full);
    let code = serve_listener(&mut s, listener).unwrap();
    second.join().unwrap();
    let refusal = first.join().unwrap();
    assert_eq!(refusal, json!({"id": null, "ok": false, "error": BUSY}));
    assert_eq!(code, 0);
}

#[test]
fn tcp_session_survives_reconnect() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let client = thread::spawn(move || {
        let counter = {
            let mut stream = TcpStream::connect(addr).unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            request(&mut stream, &mut reader, json!({"id": 1, "cmd": "next"}));
            request(&mut stream, &mut reader, json!({"id": 2, "cmd": "status"}))["body"]["counter"].clone()
        };
        let mut stream = TcpStream::connect(addr).unwrap();
        let mut reader = BufReader::new(stream.try_clone().unwrap());
        let again = request(&mut stream, &mut reader, json!({"id": 1, "cmd": "status"}))["body"]["counter"].clone();
        request(&mut stream, &mut reader, json!({"id": 2, "cmd": "quit"}));
        (counter, again)
    });
    let mut s = session("ticks", Mode::Full);
    serve_listener(&mut s, listener).unwrap();
    let (counter, again) = client.join().unwrap();
    assert_eq!(counter, json!(1));
    assert_eq!(again, json!(1));
}
