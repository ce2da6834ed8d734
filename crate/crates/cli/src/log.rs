//! Line-delimited JSON logging on standard error. `FFNO_LOG` selects the
//! most verbose level printed: `off`, `error`, `warn`, `info` (default) or `debug`.

use std::io::Write;
use std::sync::OnceLock;

use serde_json::{Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Level {
    Error = 1,
    Warn = 2,
    Info = 3,
    Debug = 4,
}

impl Level {
    fn name(self) -> &'static str {
        match self {
            Level::Error => "error",
            Level::Warn => "warn",
            Level::Info => "info",
            Level::Debug => "debug",
        }
    }
}

pub const ENV_VAR: &str = "FFNO_LOG";

/// Maximum level for a value of `FFNO_LOG`; `0` means off. Unknown values fall back to info.
pub fn parse_level(s: &str) -> u8 {
    match s.trim().to_ascii_lowercase().as_str() {
        "off" | "none" | "0" => 0,
        "error" => 1,
        "warn" | "warning" => 2,
        "debug" | "trace" => 4,
        _ => 3,
    }
}

fn max_level() -> u8 {
    static MAX: OnceLock<u8> = OnceLock::new();
    *MAX.get_or_init(|| std::env::var(ENV_VAR).map(|v| parse_level(&v)).unwrap_or(3))
}

pub fn enabled(level: Level) -> bool {
    level as u8 <= max_level()
}

/// One log record: `{"ts", "level", "event", ...fields}`.
pub fn record(level: Level, event: &str, fields: Value) -> Value {
    let mut m = Map::new();
    m.insert("ts".into(), Value::from(chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)));
    m.insert("level".into(), Value::from(level.name()));
    m.insert("event".into(), Value::from(event));
    if let Value::Object(f) = fields {
        m.extend(f);
    }
    Value::Object(m)
}

pub fn emit(level: Level, event: &str, fields: Value) {
    if !enabled(level) {
        return;
    }
    let line = record(level, event, fields).to_string();
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "{line}");
}

pub fn info(event: &str, fields: Value) {
    emit(Level::Info, event, fields);
}

pub fn debug(event: &str, fields: Value) {
    emit(Level::Debug, event, fields);
}

pub fn error(event: &str, fields: Value) {
    emit(Level::Error, event, fields);
}
