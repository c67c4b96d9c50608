//! Tardi: a time-travel debugger for a small single-assignment language,
//! with I/O tabling so that retried calls never repeat their side effects.

pub mod debugger;
pub mod frontend;
pub mod io;
pub mod lang;
pub mod tabling;
pub mod value;
pub mod vm;
