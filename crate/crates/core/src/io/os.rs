//! Host file system backend, confined to a sandbox directory.

use std::any::Any;
use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Component, Path, PathBuf};

use super::{IoBackend, OpenMode, STDIN, STDOUT};

enum Stream {
    Reader(BufReader<File>),
    Writer(File),
}

pub struct OsBackend {
    root: PathBuf,
    open: HashMap<u64, Stream>,
    next_handle: u64,
}

impl OsBackend {
    pub fn new(root: impl AsRef<Path>) -> io::Result<Self> {
        Ok(OsBackend {
            root: root.as_ref().canonicalize()?,
            open: HashMap::new(),
            next_handle: 2,
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Maps a program path into the sandbox, refusing anything that could
    /// leave it.
    pub fn resolve(&self, path: &str) -> Result<PathBuf, String> {
        let rel = Path::new(path);
        if path.is_empty() {
            return Err("empty path".into());
        }
        if rel
            .components()
            .any(|c| !matches!(c, Component::Normal(_) | Component::CurDir))
        {
            return Err(format!("path escapes sandbox: {path}"));
        }
        let joined = self.root.join(rel);
        // Symlinks may still point outside; check what actually exists.
        let existing = if joined.exists() {
            Some(joined.clone())
        } else {
            joined.parent().map(Path::to_path_buf)
        };
        if let Some(p) = existing {
            let real = p.canonicalize().map_err(|e| e.to_string())?;
            if !real.starts_with(&self.root) {
                return Err(format!("path escapes sandbox: {path}"));
            }
        }
        Ok(joined)
    }
}

/// Reads one UTF-8 encoded character.
fn read_utf8_char(r: &mut impl BufRead) -> io::Result<Option<char>> {
    let mut first = [0u8; 1];
    if r.read(&mut first)? == 0 {
        return Ok(None);
    }
    let width = match first[0] {
        b if b < 0x80 => 1,
        b if b >> 5 == 0b110 => 2,
        b if b >> 4 == 0b1110 => 3,
        b if b >> 3 == 0b11110 => 4,
        _ => return Err(io::Error::new(io::ErrorKind::InvalidData, "invalid UTF-8")),
    };
    let mut buf = [first[0], 0, 0, 0];
    r.read_exact(&mut buf[1..width])?;
    std::str::from_utf8(&buf[..width])
        .ok()
        .and_then(|s| s.chars().next())
        .map(Some)
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidData, "invalid UTF-8"))
}

fn read_line_from(r: &mut impl BufRead) -> io::Result<Option<String>> {
    let mut line = String::new();
    if r.read_line(&mut line)? == 0 {
        return Ok(None);
    }
    if line.ends_with('\n') {
        line.pop();
        if line.ends_with('\r') {
            line.pop();
        }
    }
    Ok(Some(line))
}

impl OsBackend {
    fn reader(&mut self, handle: u64) -> Result<&mut BufReader<File>, String> {
        match self.open.get_mut(&handle) {
            Some(Stream::Reader(r)) => Ok(r),
            Some(Stream::Writer(_)) => Err("stream not open for reading".into()),
            None => Err("read on closed stream".into()),
        }
    }
}

impl IoBackend for OsBackend {
    fn open(&mut self, path: &str, mode: OpenMode) -> Result<u64, String> {
        let full = self.resolve(path)?;
        let stream = match mode {
            OpenMode::Read => Stream::Reader(BufReader::new(File::open(&full).map_err(|e| e.to_string())?)),
            OpenMode::Write => Stream::Writer(File::create(&full).map_err(|e| e.to_string())?),
            OpenMode::Append => Stream::Writer(
                OpenOptions::new()
                    .create(true)
                    .append(true)
                    .open(&full)
                    .map_err(|e| e.to_string())?,
            ),
        };
        let handle = self.next_handle;
        self.next_handle += 1;
        self.open.insert(handle, stream);
        Ok(handle)
    }

    fn close(&mut self, handle: u64) -> Result<(), String> {
        if handle == STDIN || handle == STDOUT {
            return Err("cannot close a standard stream".into());
        }
        match self.open.remove(&handle) {
            Some(Stream::Writer(mut f)) => f.flush().map_err(|e| e.to_string()),
            Some(Stream::Reader(_)) => Ok(()),
            None => Err("close on closed stream".into()),
        }
    }

    fn read_char(&mut self, handle: u64) -> Result<Option<char>, String> {
        if handle == STDIN {
            return read_utf8_char(&mut io::stdin().lock()).map_err(|e| e.to_string());
        }
        read_utf8_char(self.reader(handle)?).map_err(|e| e.to_string())
    }

    fn read_line(&mut self, handle: u64) -> Result<Option<String>, String> {
        if handle == STDIN {
            return read_line_from(&mut io::stdin().lock()).map_err(|e| e.to_string());
        }
        read_line_from(self.reader(handle)?).map_err(|e| e.to_string())
    }

    fn write_string(&mut self, handle: u64, s: &str) -> Result<(), String> {
        if handle == STDOUT {
            let mut out = io::stdout().lock();
            return out
                .write_all(s.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| e.to_string());
        }
        match self.open.get_mut(&handle) {
            Some(Stream::Writer(f)) => f.write_all(s.as_bytes()).map_err(|e| e.to_string()),
            Some(Stream::Reader(_)) => Err("stream not open for writing".into()),
            None => Err("write on closed stream".into()),
        }
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}
