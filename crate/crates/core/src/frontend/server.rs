//! Protocol endpoints.
//!
//! The session stays on the calling thread. For TCP, a helper thread accepts
//! connections and hands them over one at a time; anyone connecting while a
//! client is attached gets a `session busy` error line and is disconnected.

use std::io::{self, BufReader, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc;
use std::sync::Arc;
use std::thread;

use super::protocol::{encode, serve_stream, Message, Response, ServeEnd};
use crate::debugger::Session;

pub const BUSY: &str = "session busy";

pub fn serve_stdio(session: &mut Session) -> io::Result<i32> {
    let stdin = io::stdin();
    serve_stream(session, stdin.lock(), io::stdout().lock())?;
    Ok(session.exit_code())
}

fn refuse(mut stream: TcpStream) {
    let mut line = encode(&Message::Response(Response::error(None, BUSY)));
    line.push('\n');
    let _ = stream.write_all(line.as_bytes());
}

/// Serves clients from `listener`, one at a time, until one sends `quit`.
/// Returns the session's exit code.
pub fn serve_listener(session: &mut Session, listener: TcpListener) -> io::Result<i32> {
    let busy = Arc::new(AtomicBool::new(false));
    let (tx, rx) = mpsc::channel::<TcpStream>();
    {
        let busy = Arc::clone(&busy);
        thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(stream) = stream else { continue };
                if busy.swap(true, Ordering::SeqCst) {
                    refuse(stream);
                } else if tx.send(stream).is_err() {
                    break;
                }
            }
        });
    }
    while let Ok(stream) = rx.recv() {
        let reader = BufReader::new(stream.try_clone()?);
        let end = serve_stream(session, reader, &stream);
        busy.store(false, Ordering::SeqCst);
        match end {
            Ok(ServeEnd::Quit) => break,
            // The session waits, stopped, for the next client.
            Ok(ServeEnd::Disconnected) | Err(_) => continue,
        }
    }
    Ok(session.exit_code())
}

pub fn serve_tcp(session: &mut Session, port: u16) -> io::Result<i32> {
    let listener = TcpListener::bind(("127.0.0.1", port))?;
    eprintln!("tardi: listening on {}", listener.local_addr()?);
    serve_listener(session, listener)
}
