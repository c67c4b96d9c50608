//! Line-oriented debugger front end.

use std::io::{self, BufRead, Write};

use crate::debugger::command::{IoPage, HELP};
use crate::debugger::{Command, DebugEvent, Reply, Session};
use crate::lang::Span;
use crate::value::render_list;

pub const PROMPT: &str = "(tardi) ";

fn loc(span: Option<Span>) -> String {
    span.map_or_else(|| "end of procedure".into(), |s| s.to_string())
}

pub fn format_event(ev: &DebugEvent) -> String {
    match ev {
        DebugEvent::Stopped {
            reason,
            location,
            depth,
            proc,
            message,
        } => {
            let reason = serde_json::to_value(reason).unwrap();
            let mut s = format!(
                "stopped ({}) in {proc} at {} [depth {depth}]",
                reason.as_str().unwrap_or_default(),
                loc(*location)
            );
            if let Some(m) = message {
                s.push_str(&format!(": {m}"));
            }
            s
        }
        DebugEvent::IoAction(r) => format!(
            "io #{} {}{} -> {} ({})",
            r.number,
            r.name,
            render_list(&r.inputs),
            render_list(&r.outputs),
            match (r.replayed, r.tabled) {
                (true, _) => "replayed",
                (false, true) => "performed",
                (false, false) => "performed, untabled",
            }
        ),
        DebugEvent::Warning { text, .. } => format!("warning: {text}"),
        DebugEvent::Divergence(d) => format!("divergence: {d}"),
        DebugEvent::Exited { code } => format!("program exited with code {code}"),
        DebugEvent::Retried {
            depth,
            counter,
            location,
        } => format!(
            "retried call at depth {depth}; I/O counter reset to {counter}; at {}",
            loc(*location)
        ),
    }
}

fn format_page(page: &IoPage) -> String {
    if page.total == 0 {
        return format!(
            "no I/O in this call (actions [{}, {}))",
            page.entry_counter, page.exit_counter
        );
    }
    let mut s = format!(
        "actions [{}, {}), page {}/{}:",
        page.entry_counter,
        page.exit_counter,
        page.page + 1,
        page.pages
    );
    for a in &page.actions {
        s.push_str(&format!(
            "\n  {}: {}{} -> {}",
            a.n,
            a.name,
            render_list(&a.inputs),
            render_list(&a.outputs)
        ));
        if a.replay_count > 0 {
            s.push_str(&format!("  (replayed {}x)", a.replay_count));
        }
    }
    s
}

pub fn format_reply(reply: &Reply) -> Option<String> {
    Some(match reply {
        Reply::Breakpoint { breakpoint } => {
            let spec = serde_json::to_value(&breakpoint.spec).unwrap();
            format!("breakpoint {} at {}", breakpoint.id, spec["target"])
        }
        Reply::Deleted { deleted } => format!("deleted breakpoint {deleted}"),
        Reply::Position(_) | Reply::Retry(_) | Reply::Quit { .. } => return None,
        Reply::Safety(r) => format!(
            "retry of depth {} crosses {} action(s) [{}, {}): {}",
            r.target_depth,
            r.n_actions_crossed,
            r.entry_counter,
            r.current_counter,
            r.reason.as_deref().unwrap_or("safe")
        ),
        Reply::Stack { frames } => frames
            .iter()
            .map(|f| {
                let mut s = format!(
                    "#{} {} entry-counter={} at {}",
                    f.depth,
                    f.proc,
                    f.io_counter_on_entry,
                    loc(f.location)
                );
                if let Some(site) = f.call_site {
                    s.push_str(&format!(" (called from {site})"));
                }
                s
            })
            .collect::<Vec<_>>()
            .join("\n"),
        Reply::Value { name, value } => format!("{name} = {value}"),
        Reply::IoActions(page) => format_page(page),
        Reply::Calls { active, completed } => {
            let mut lines = Vec::new();
            for c in active {
                lines.push(format!("call {} {} active, entry {}", c.id, c.proc, c.entry_counter));
            }
            for c in completed {
                lines.push(format!(
                    "call {} {} entry {} exit {}",
                    c.id,
                    c.proc,
                    c.entry_counter,
                    c.exit_counter.unwrap_or_default()
                ));
            }
            lines.join("\n")
        }
        Reply::IoTable { actions } => {
            if actions.is_empty() {
                return Some("I/O table is empty".into());
            }
            actions
                .iter()
                .map(|a| {
                    format!(
                        "{}\t{}\t{}\t{}\t{}",
                        a.n,
                        a.name,
                        render_list(&a.inputs),
                        render_list(&a.outputs),
                        a.replay_count
                    )
                })
                .collect::<Vec<_>>()
                .join("\n")
        }
        Reply::Table {
            mode,
            regions,
            counter,
        } => {
            let regions: Vec<String> = regions.iter().map(|r| r.to_string()).collect();
            format!(
                "mode {mode}; counter {counter}; regions {}",
                if regions.is_empty() { "none".into() } else { regions.join(" ") }
            )
        }
        Reply::Trace { path: Some(p), text } => {
            format!("wrote {} trace record(s) to {}", text.lines().count(), p.display())
        }
        Reply::Trace { path: None, text } => text.trim_end().to_string(),
    })
}

fn flush_events(session: &mut Session, out: &mut impl Write, skip_warnings: bool) -> io::Result<()> {
    for ev in session.take_events() {
        if skip_warnings && matches!(ev, DebugEvent::Warning { .. }) {
            continue;
        }
        writeln!(out, "{}", format_event(&ev))?;
    }
    Ok(())
}

/// Runs commands from `input` until `quit` or end of input. Returns the
/// process exit code.
pub fn repl(session: &mut Session, mut input: impl BufRead, mut out: impl Write) -> io::Result<i32> {
    flush_events(session, &mut out, false)?;
    let mut line = String::new();
    loop {
        write!(out, "{PROMPT}")?;
        out.flush()?;
        line.clear();
        if input.read_line(&mut line)? == 0 {
            writeln!(out)?;
            return Ok(session.exit_code());
        }
        if matches!(line.trim(), "help" | "h" | "?") {
            writeln!(out, "{HELP}")?;
            continue;
        }
        let cmd = match Command::parse(&line) {
            Ok(Some(cmd)) => cmd,
            Ok(None) => continue,
            Err(e) => {
                writeln!(out, "error: {e}")?;
                continue;
            }
        };
        let result = session.execute(&cmd);
        flush_events(session, &mut out, false)?;
        match result {
            Ok(Reply::Quit { exit_code }) => return Ok(exit_code),
            Ok(Reply::Retry(r)) if r.needs_confirm => {
                write!(out, "proceed? [y/N] ")?;
                out.flush()?;
                line.clear();
                input.read_line(&mut line)?;
                let answer = line.trim().to_ascii_lowercase();
                if answer == "y" || answer == "yes" {
                    let depth = r.report.target_depth;
                    let result = session.execute(&Command::Retry { depth, force: true });
                    flush_events(session, &mut out, true)?;
                    if let Err(e) = result {
                        writeln!(out, "error: {e}")?;
                    }
                } else {
                    writeln!(out, "retry aborted")?;
                }
            }
            Ok(Reply::Position(p)) if cmd == Command::Status => {
                writeln!(
                    out,
                    "{}; at {} [depth {}]; I/O counter {}",
                    p.status,
                    loc(p.location),
                    p.depth,
                    p.counter
                )?;
            }
            Ok(reply) => {
                if let Some(text) = format_reply(&reply) {
                    writeln!(out, "{text}")?;
                }
            }
            Err(e) => writeln!(out, "error: {e}")?,
        }
    }
}
