//! Newline-delimited JSON protocol.
//!
//! Each line is one message. Clients send requests; the server answers every
//! request with exactly one response, preceded by any events the request
//! produced:
//!
//! ```text
//! -> {"id":1,"cmd":"next"}
//! <- {"type":"io_action","payload":{"n":0,"name":"write_string",...}}
//! <- {"type":"stopped","payload":{"reason":"step-complete",...}}
//! <- {"id":1,"ok":true,"body":{...}}
//! ```
//!
//! The full schema is in `docs/protocol.md` and `docs/protocol.schema.json`.

use std::io::{self, BufRead, Write};
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value as Json};

use crate::debugger::{Command, DebugEvent, Session};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Request {
    pub id: i64,
    pub cmd: String,
    #[serde(default, skip_serializing_if = "Map::is_empty")]
    pub args: Map<String, Json>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Response {
    pub id: Option<i64>,
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub body: Option<Json>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Response {
    pub fn ok(id: i64, body: Json) -> Response {
        Response {
            id: Some(id),
            ok: true,
            body: Some(body),
            error: None,
        }
    }

    pub fn error(id: Option<i64>, error: impl Into<String>) -> Response {
        Response {
            id,
            ok: false,
            body: None,
            error: Some(error.into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Event {
    #[serde(rename = "type")]
    pub kind: String,
    pub payload: Json,
}

impl From<&DebugEvent> for Event {
    fn from(ev: &DebugEvent) -> Event {
        let mut json = serde_json::to_value(ev).expect("events serialize");
        let obj = json.as_object_mut().expect("events are objects");
        Event {
            kind: obj["type"].as_str().unwrap_or_default().to_string(),
            payload: obj.remove("payload").unwrap_or(Json::Null),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Message {
    Request(Request),
    Response(Response),
    Event(Event),
}

pub fn encode(m: &Message) -> String {
    serde_json::to_string(m).expect("messages serialize")
}

pub fn decode(line: &str) -> Result<Message, serde_json::Error> {
    serde_json::from_str(line)
}

fn get_u64(args: &Map<String, Json>, key: &str) -> Result<u64, String> {
    args.get(key)
        .ok_or_else(|| format!("missing argument {key}"))?
        .as_u64()
        .ok_or_else(|| format!("argument {key} must be a nonnegative integer"))
}

fn opt_u64(args: &Map<String, Json>, key: &str) -> Result<Option<u64>, String> {
    match args.get(key) {
        None | Some(Json::Null) => Ok(None),
        Some(_) => get_u64(args, key).map(Some),
    }
}

fn get_str(args: &Map<String, Json>, key: &str) -> Result<String, String> {
    args.get(key)
        .ok_or_else(|| format!("missing argument {key}"))?
        .as_str()
        .map(str::to_string)
        .ok_or_else(|| format!("argument {key} must be a string"))
}

fn get_bool(args: &Map<String, Json>, key: &str) -> Result<bool, String> {
    match args.get(key) {
        None | Some(Json::Null) => Ok(false),
        Some(Json::Bool(b)) => Ok(*b),
        Some(_) => Err(format!("argument {key} must be a boolean")),
    }
}

/// Maps a request onto a debugger command.
pub fn to_command(req: &Request) -> Result<Command, String> {
    let a = &req.args;
    let depth = || get_u64(a, "depth").map(|d| d as usize);
    let page = || opt_u64(a, "page").map(|p| p.unwrap_or(0) as usize);
    Ok(match req.cmd.as_str() {
        "break" => Command::Break(match (a.get("location"), a.get("line")) {
            (Some(_), _) => get_str(a, "location")?,
            (None, Some(_)) => get_u64(a, "line")?.to_string(),
            (None, None) => get_str(a, "proc")?,
        }),
        "delete" => Command::Delete(get_u64(a, "breakpoint")? as usize),
        "continue" => Command::Continue,
        "step" => Command::Step,
        "next" => Command::Next,
        "finish" => Command::Finish,
        "retry" => Command::Retry {
            depth: depth()?,
            force: get_bool(a, "force")?,
        },
        "safety" => Command::Safety { depth: depth()? },
        "stack" => Command::Stack,
        "print" => Command::Print {
            name: get_str(a, "name")?,
            depth: opt_u64(a, "depth")?.map(|d| d as usize),
        },
        "io-actions" => Command::IoActions {
            depth: depth()?,
            page: page()?,
        },
        "calls" => Command::Calls,
        "call-io" => Command::CallIo {
            call: get_u64(a, "call")?,
            page: page()?,
        },
        "io-table" => Command::IoTable,
        "table" => match get_str(a, "action")?.as_str() {
            "start" => Command::TableStart,
            "stop" => Command::TableStop,
            "status" => Command::TableStatus,
            other => return Err(format!("unknown table action {other}")),
        },
        "trace-dump" => Command::TraceDump {
            path: match a.get("path") {
                None | Some(Json::Null) => None,
                Some(_) => Some(PathBuf::from(get_str(a, "path")?)),
            },
        },
        "status" => Command::Status,
        "quit" => Command::Quit,
        other => return Err(format!("unknown command {other}")),
    })
}

/// Applies one request to the session. Returns the events it produced, in
/// order, and its response.
pub fn handle_request(session: &mut Session, req: &Request) -> (Vec<Event>, Response, bool) {
    let cmd = match to_command(req) {
        Ok(cmd) => cmd,
        Err(e) => return (Vec::new(), Response::error(Some(req.id), e), false),
    };
    let result = session.execute(&cmd);
    let events = session.take_events().iter().map(Event::from).collect();
    let response = match result {
        Ok(reply) => Response::ok(req.id, serde_json::to_value(reply).expect("replies serialize")),
        Err(e) => Response::error(Some(req.id), e.to_string()),
    };
    (events, response, cmd == Command::Quit)
}

/// How a serving loop ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ServeEnd {
    Quit,
    Disconnected,
}

fn write_line(out: &mut impl Write, m: &Message) -> io::Result<()> {
    let mut line = encode(m);
    line.push('\n');
    out.write_all(line.as_bytes())?;
    out.flush()
}

/// Serves one client until it sends `quit` or the stream ends. The session
/// is left stopped where it was when the stream ends.
pub fn serve_stream(
    session: &mut Session,
    input: impl BufRead,
    mut output: impl Write,
) -> io::Result<ServeEnd> {
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let req = match serde_json::from_str::<Request>(&line) {
            Ok(req) => req,
            Err(_) => {
                write_line(&mut output, &Message::Response(Response::error(None, "parse")))?;
                continue;
            }
        };
        let (events, response, quit) = handle_request(session, &req);
        for ev in events {
            write_line(&mut output, &Message::Event(ev))?;
        }
        write_line(&mut output, &Message::Response(response))?;
        if quit {
            return Ok(ServeEnd::Quit);
        }
    }
    Ok(ServeEnd::Disconnected)
}
