//! In-memory backend for deterministic runs.

use std::any::Any;
use std::collections::{BTreeMap, HashMap};

use super::{IoBackend, OpenMode, STDIN, STDOUT};

#[derive(Debug, Clone)]
struct OpenFile {
    path: String,
    mode: OpenMode,
    /// Snapshot of the contents at open time, for readers.
    content: Vec<char>,
    cursor: usize,
}

/// Scripted stdin, an in-memory file map, and captured stdout.
///
/// Handle ids start at 2 and are never reused, even after a close.
#[derive(Debug, Clone)]
pub struct ScriptedBackend {
    stdin: Vec<char>,
    stdin_cursor: usize,
    stdout: String,
    files: BTreeMap<String, String>,
    open: HashMap<u64, OpenFile>,
    next_handle: u64,
    failures: BTreeMap<usize, String>,
    op_count: usize,
    opens: usize,
    closes: usize,
}

impl ScriptedBackend {
    pub fn new(stdin: &str) -> Self {
        ScriptedBackend {
            stdin: stdin.chars().collect(),
            stdin_cursor: 0,
            stdout: String::new(),
            files: BTreeMap::new(),
            open: HashMap::new(),
            next_handle: 2,
            failures: BTreeMap::new(),
            op_count: 0,
            opens: 0,
            closes: 0,
        }
    }

    pub fn with_file(mut self, path: impl Into<String>, content: impl Into<String>) -> Self {
        self.files.insert(path.into(), content.into());
        self
    }

    /// Makes backend operation number `op_index` (0-based, counting every
    /// call into this backend) fail with `message` instead of taking effect.
    pub fn with_failure(mut self, op_index: usize, message: impl Into<String>) -> Self {
        self.failures.insert(op_index, message.into());
        self
    }

    pub fn stdout(&self) -> &str {
        &self.stdout
    }

    pub fn stdin_cursor(&self) -> usize {
        self.stdin_cursor
    }

    pub fn file(&self, path: &str) -> Option<&str> {
        self.files.get(path).map(String::as_str)
    }

    pub fn open_handle_count(&self) -> usize {
        self.open.len()
    }

    pub fn successful_opens(&self) -> usize {
        self.opens
    }

    pub fn successful_closes(&self) -> usize {
        self.closes
    }

    pub fn operation_count(&self) -> usize {
        self.op_count
    }

    fn begin_op(&mut self) -> Result<(), String> {
        let index = self.op_count;
        self.op_count += 1;
        match self.failures.get(&index) {
            Some(msg) => Err(msg.clone()),
            None => Ok(()),
        }
    }

    fn reader(&mut self, handle: u64) -> Result<&mut OpenFile, String> {
        let file = self
            .open
            .get_mut(&handle)
            .ok_or_else(|| "read on closed stream".to_string())?;
        if file.mode != OpenMode::Read {
            return Err("stream not open for reading".into());
        }
        Ok(file)
    }
}

impl IoBackend for ScriptedBackend {
    fn open(&mut self, path: &str, mode: OpenMode) -> Result<u64, String> {
        self.begin_op()?;
        let content = match mode {
            OpenMode::Read => self
                .files
                .get(path)
                .ok_or_else(|| format!("no such file: {path}"))?
                .chars()
                .collect(),
            OpenMode::Write => {
                self.files.insert(path.to_string(), String::new());
                Vec::new()
            }
            OpenMode::Append => {
                self.files.entry(path.to_string()).or_default();
                Vec::new()
            }
        };
        let handle = self.next_handle;
        self.next_handle += 1;
        self.opens += 1;
        self.open.insert(
            handle,
            OpenFile {
                path: path.to_string(),
                mode,
                content,
                cursor: 0,
            },
        );
        Ok(handle)
    }

    fn close(&mut self, handle: u64) -> Result<(), String> {
        self.begin_op()?;
        if handle == STDIN || handle == STDOUT {
            return Err("cannot close a standard stream".into());
        }
        match self.open.remove(&handle) {
            Some(_) => {
                self.closes += 1;
                Ok(())
            }
            None => Err("close on closed stream".into()),
        }
    }

    fn read_char(&mut self, handle: u64) -> Result<Option<char>, String> {
        self.begin_op()?;
        if handle == STDIN {
            let c = self.stdin.get(self.stdin_cursor).copied();
            if c.is_some() {
                self.stdin_cursor += 1;
            }
            return Ok(c);
        }
        let file = self.reader(handle)?;
        let c = file.content.get(file.cursor).copied();
        if c.is_some() {
            file.cursor += 1;
        }
        Ok(c)
    }

    fn read_line(&mut self, handle: u64) -> Result<Option<String>, String> {
        self.begin_op()?;
        let (content, cursor) = if handle == STDIN {
            (&self.stdin, &mut self.stdin_cursor)
        } else {
            let file = self.reader(handle)?;
            (&file.content, &mut file.cursor)
        };
        if *cursor >= content.len() {
            return Ok(None);
        }
        let rest = &content[*cursor..];
        let (line_len, consumed) = match rest.iter().position(|&c| c == '\n') {
            Some(i) => (i, i + 1),
            None => (rest.len(), rest.len()),
        };
        let line: String = rest[..line_len].iter().collect();
        *cursor += consumed;
        Ok(Some(line))
    }

    fn write_string(&mut self, handle: u64, s: &str) -> Result<(), String> {
        self.begin_op()?;
        if handle == STDOUT {
            self.stdout.push_str(s);
            return Ok(());
        }
        let file = self
            .open
            .get(&handle)
            .ok_or_else(|| "write on closed stream".to_string())?;
        if file.mode == OpenMode::Read {
            return Err("stream not open for writing".into());
        }
        let path = file.path.clone();
        self.files.entry(path).or_default().push_str(s);
        Ok(())
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}
