#![allow(dead_code)]

use std::path::PathBuf;
use std::rc::Rc;

use serde_json::{json, Value as Json};
use tardi::debugger::Session;
use tardi::frontend::protocol::{handle_request, Event, Request, Response};
use tardi::io::config::parse_script;
use tardi::io::trace::dump_trace;
use tardi::io::{ScriptedBackend, World};
use tardi::lang::{compile, CheckedProgram};
use tardi::tabling::{Mode, TablingState};
use tardi::vm::{init_machine, Status};

pub fn programs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("programs")
}

pub fn source(name: &str) -> String {
    std::fs::read_to_string(programs_dir().join(format!("{name}.tardi"))).unwrap()
}

pub fn program(name: &str) -> Rc<CheckedProgram> {
    Rc::new(compile(&source(name)).unwrap_or_else(|e| panic!("{name}: {e}")))
}

/// The backend from `programs/<name>.script`, or an empty one.
pub fn backend(name: &str) -> ScriptedBackend {
    match std::fs::read_to_string(programs_dir().join(format!("{name}.script"))) {
        Ok(text) => parse_script(&text).unwrap(),
        Err(_) => ScriptedBackend::new(""),
    }
}

/// 1-based line of the first source line containing `needle`.
pub fn line_of(name: &str, needle: &str) -> u64 {
    let src = source(name);
    src.lines()
        .position(|l| l.contains(needle))
        .unwrap_or_else(|| panic!("{needle:?} not in {name}")) as u64
        + 1
}

/// Straight execution without a debugger. Returns the world afterwards.
pub fn straight_run(name: &str, mode: Mode) -> World {
    let mut m = init_machine(program(name), World::scripted(backend(name)), TablingState::new(mode));
    let status = m.run_to_end().clone();
    assert!(matches!(status, Status::Exited(0)), "{name}: {status:?}");
    m.into_parts().0
}

pub fn session(name: &str, mode: Mode) -> Session {
    Session::new(
        program(name),
        World::scripted(backend(name)),
        TablingState::new(mode),
        format!("{name}.tardi"),
    )
}

/// Drives a session through the protocol layer, keeping every event.
pub struct Client {
    pub session: Session,
    pub events: Vec<Event>,
    next_id: i64,
}

impl Client {
    pub fn new(session: Session) -> Client {
        let mut session = session;
        let events = session.take_events().iter().map(Event::from).collect();
        Client {
            session,
            events,
            next_id: 1,
        }
    }

    /// Sends one request. Returns the events it produced and the response.
    pub fn send(&mut self, cmd: &str, args: Json) -> (Vec<Event>, Response) {
        let args = match args {
            Json::Object(map) => map,
            Json::Null => Default::default(),
            other => panic!("args must be an object, got {other}"),
        };
        let req = Request {
            id: self.next_id,
            cmd: cmd.into(),
            args,
        };
        self.next_id += 1;
        let (events, response, _) = handle_request(&mut self.session, &req);
        assert_eq!(response.id, Some(req.id));
        self.events.extend(events.iter().cloned());
        (events, response)
    }

    /// Like `send` but panics on an error response. Returns the body.
    pub fn ok(&mut self, cmd: &str, args: Json) -> Json {
        let (_, r) = self.send(cmd, args);
        assert!(r.ok, "{cmd} failed: {:?}", r.error);
        r.body.unwrap_or(Json::Null)
    }

    pub fn stack_height(&mut self) -> u64 {
        self.ok("stack", Json::Null)["frames"].as_array().unwrap().len() as u64
    }

    pub fn count(&self, kind: &str) -> usize {
        self.events.iter().filter(|e| e.kind == kind).count()
    }

    pub fn trace_dump(&self) -> String {
        dump_trace(self.session.world().trace())
    }

    pub fn scripted(&self) -> &ScriptedBackend {
        self.session.world().scripted_backend().unwrap()
    }
}

pub fn break_at(client: &mut Client, name: &str, needle: &str) {
    client.ok("break", json!({ "line": line_of(name, needle) }));
}

/// Number of close_file calls the backend rejected.
pub fn close_errors(world: &World) -> usize {
    world
        .trace()
        .records()
        .iter()
        .filter(|r| r.name == "close_file" && r.outputs.first().is_some_and(|v| v.is_error()))
        .count()
}

/// A retry scenario from the example programs: stop after the interesting
/// I/O, retry the enclosing call, run to exit.
pub struct Scenario {
    pub name: &'static str,
    pub stop_line: &'static str,
    /// Which frame to retry: `None` means the innermost.
    pub depth: Option<u64>,
}

pub const SCENARIOS: [Scenario; 4] = [
    Scenario {
        name: "write_solution",
        stop_line: "return r;",
        depth: Some(1),
    },
    Scenario {
        name: "read_problem",
        stop_line: "return solution;",
        depth: Some(1),
    },
    Scenario {
        name: "get_stream",
        stop_line: "return code, stream;",
        depth: Some(1),
    },
    Scenario {
        name: "read_next_item",
        stop_line: "return no;",
        depth: None,
    },
];

pub fn scenario(name: &str) -> &'static Scenario {
    SCENARIOS.iter().find(|s| s.name == name).unwrap()
}

/// Runs a scenario through the protocol. `force` confirms an unsafe retry.
pub fn run_scenario(s: &Scenario, mode: Mode, force: bool) -> Client {
    let mut c = Client::new(session(s.name, mode));
    break_at(&mut c, s.name, s.stop_line);
    c.ok("continue", Json::Null);
    let depth = s.depth.unwrap_or_else(|| c.stack_height() - 1);
    let body = c.ok("retry", json!({ "depth": depth, "force": force }));
    assert_eq!(body["needs_confirm"], json!(false), "{}: retry not performed", s.name);
    c.ok("delete", json!({ "breakpoint": 1 }));
    c.ok("continue", Json::Null);
    assert_eq!(c.session.status(), &Status::Exited(0), "{}", s.name);
    c
}
