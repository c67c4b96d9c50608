//! Session-level properties: retries under full tabling are invisible to
//! the outside world and repeatable.

mod common;

use common::*;
use proptest::prelude::*;
use tardi::debugger::{DebugError, RetryOutcome, Session, PAGE_SIZE};
use tardi::io::dump_trace;
use tardi::tabling::Mode;
use tardi::vm::Status;

const PROGRAMS: [&str; 6] = ["write_solution", "read_problem", "get_stream", "read_next_item", "fifty", "ticks"];

fn advance(s: &mut Session, steps: usize) {
    for _ in 0..steps {
        if !s.status().is_live() {
            break;
        }
        s.cmd_step().unwrap();
    }
}

fn observable(s: &Session) -> (String, String) {
    let w = s.world();
    (dump_trace(w.trace()), w.scripted_backend().unwrap().stdout().to_string())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    /// Retrying anywhere, any number of times, then running to the end
    /// looks exactly like a run without the debugger.
    #[test]
    fn retry_is_transparent(
        idx in 0..PROGRAMS.len(),
        stops in prop::collection::vec((0usize..60, any::<prop::sample::Index>()), 1..4),
    ) {
        let name = PROGRAMS[idx];
        let straight = straight_run(name, Mode::Full);
        let mut s = session(name, Mode::Full);
        for (steps, pick) in stops {
            advance(&mut s, steps);
            if !s.status().is_live() {
                break;
            }
            let depth = pick.index(s.machine().frames().len());
            let outcome = s.cmd_retry(depth, false).unwrap();
            prop_assert!(matches!(outcome, RetryOutcome::Retried(_)));
        }
        if s.status().is_live() {
            s.cmd_continue().unwrap();
        }
        prop_assert_eq!(s.status(), &Status::Exited(0));
        prop_assert_eq!(observable(&s).0, dump_trace(straight.trace()));
        prop_assert_eq!(observable(&s).1, straight.scripted_backend().unwrap().stdout());
    }

    /// Retrying the same frame twice in a row lands in the same state as
    /// retrying it once.
    #[test]
    fn retry_is_idempotent(idx in 0..PROGRAMS.len(), steps in 0usize..60, pick in any::<prop::sample::Index>()) {
        let name = PROGRAMS[idx];
        let mut s = session(name, Mode::Full);
        advance(&mut s, steps);
        prop_assume!(s.status().is_live());
        let depth = pick.index(s.machine().frames().len());
        s.cmd_retry(depth, false).unwrap();
        let once = (s.cmd_stack(), s.tabling().counter(), observable(&s));
        s.cmd_retry(depth, false).unwrap();
        let twice = (s.cmd_stack(), s.tabling().counter(), observable(&s));
        prop_assert_eq!(once, twice);
    }
}

#[test]
fn io_listing_pages() {
    let mut s = session("fifty", Mode::Full);
    let line = line_of("fifty", "group(10, 15);");
    s.cmd_break(&format!("fifty.tardi:{line}")).unwrap();
    s.cmd_continue().unwrap();
    assert_eq!(s.tabling().counter(), 20);
    let all = s.list_io_actions(0).unwrap();
    assert_eq!((all.entry_counter, all.exit_counter), (0, 20));
    assert_eq!(all.actions.len(), 20);
    assert_eq!(all.pages(), 1);
    s.cmd_next().unwrap();
    assert_eq!(s.status(), &Status::Exited(0));
    let main = s.calls().completed().find(|c| c.proc == "main").unwrap().id;
    let all = s.list_call_io(main).unwrap();
    assert_eq!(all.actions.len(), 50);
    assert_eq!(all.pages(), 50usize.div_ceil(PAGE_SIZE));
    let last = all.page(all.pages() - 1);
    assert_eq!(last.last().unwrap().n, 49);
    assert!(all.actions.iter().enumerate().all(|(i, a)| a.n == i as u64));
}

#[test]
fn completed_call_listing() {
    let mut s = session("ticks", Mode::Full);
    s.cmd_next().unwrap();
    s.cmd_next().unwrap();
    s.cmd_next().unwrap(); // over seg
    let seg = s
        .calls()
        .completed()
        .find(|c| c.proc == "seg")
        .expect("seg completed")
        .clone();
    let io = s.list_call_io(seg.id).unwrap();
    assert_eq!((io.entry_counter, io.exit_counter), (2, 11));
    assert_eq!(io.actions.len(), 9);
    assert!(matches!(s.list_call_io(9999), Err(DebugError::UnknownCall(9999))));
}

#[test]
fn untabled_listing_is_refused() {
    let mut s = session("ticks", Mode::Off);
    s.cmd_next().unwrap();
    assert!(matches!(s.list_io_actions(0), Err(DebugError::NotTabled { entry: 0, exit: 1 })));
    // An empty span is trivially covered.
    let fresh = session("ticks", Mode::Off);
    assert!(fresh.list_io_actions(0).unwrap().actions.is_empty());
}

#[test]
fn retry_bad_depth() {
    let mut s = session("ticks", Mode::Full);
    assert!(matches!(s.cmd_retry(3, false), Err(DebugError::BadDepth { depth: 3, height: 1 })));
}

#[test]
fn commands_after_exit() {
    let mut s = session("write_solution", Mode::Full);
    s.cmd_continue().unwrap();
    assert_eq!(s.status(), &Status::Exited(0));
    assert!(matches!(s.cmd_step(), Err(DebugError::NotStopped(_))));
    assert!(matches!(s.cmd_retry(0, true), Err(DebugError::NotStopped(_))));
    assert_eq!(s.exit_code(), 0);
}
