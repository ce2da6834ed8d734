//! Run configuration files: TOML, or JSON when the file ends in `.json`.
//!
//! Loading happens in three stages with distinct failures: the text is parsed
//! into a generic tree (syntax errors carry a line), command-line overrides
//! are merged into the tree, and the tree is decoded into the typed config
//! (schema errors carry the offending key).

use std::path::Path;

use serde::de::DeserializeOwned;
use serde_json::{Map, Value};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConfigFormat {
    Toml,
    Json,
}

impl ConfigFormat {
    pub fn of(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => ConfigFormat::Json,
            _ => ConfigFormat::Toml,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("syntax error: {0}")]
    SyntaxNoSpan(String),
    #[error("key `{key}`: {message}")]
    Schema { key: String, message: String },
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, column)
}

/// Parses config text into a tree. The top level must be a table.
pub fn parse(text: &str, format: ConfigFormat) -> Result<Value, ConfigError> {
    let value = match format {
        ConfigFormat::Json => serde_json::from_str::<Value>(text).map_err(|e| ConfigError::Syntax {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?,
        ConfigFormat::Toml => toml::from_str::<Value>(text).map_err(|e| match e.span() {
            Some(span) => {
                let (line, column) = line_col(text, span.start);
                ConfigError::Syntax { line, column, message: e.message().to_string() }
            }
            None => ConfigError::SyntaxNoSpan(e.message().to_string()),
        })?,
    };
    if !value.is_object() {
        return Err(ConfigError::Schema { key: ".".into(), message: "top level must be a table".into() });
    }
    Ok(value)
}

/// Decodes a tree into `T`, naming the first key that does not fit.
pub fn decode<T: DeserializeOwned>(value: Value) -> Result<T, ConfigError> {
    serde_path_to_error::deserialize(value).map_err(|e| ConfigError::Schema {
        key: e.path().to_string(),
        message: e.inner().to_string(),
    })
}

/// Recursively overlays `top` onto `base`; tables merge, everything else is replaced.
pub fn merge(base: &mut Value, top: Value) {
    match (base, top) {
        (Value::Object(b), Value::Object(t)) => {
            for (k, v) in t {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Sets the dotted `path` in `root`, creating tables on the way.
pub fn set(root: &mut Value, path: &str, value: Value) {
    let mut cur = root;
    for key in path.split('.') {
        if !cur.is_object() {
            *cur = Value::Object(Map::new());
        }
        cur = cur.as_object_mut().expect("made a table").entry(key.to_string()).or_insert(Value::Null);
    }
    *cur = value;
}

/// Sets `path` only when the flag was given.
pub fn set_opt<T: Into<Value>>(root: &mut Value, path: &str, value: Option<T>) {
    if let Some(v) = value {
        set(root, path, v.into());
    }
}

pub fn read_file(path: &Path) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse(&text, ConfigFormat::of(path)).map_err(|e| at(path, e))
}

/// Attaches the file name; schema problems keep their own exit code.
pub fn at(path: &Path, e: ConfigError) -> CliError {
    match e {
        ConfigError::Schema { .. } => CliError::Schema(format!("{}: {e}", path.display())),
        _ => CliError::Config { path: path.display().to_string(), message: e.to_string() },
    }
}

/// Decodes the resolved tree of a run; `source` names it in messages.
pub fn resolve<T: DeserializeOwned>(value: Value, source: &str) -> Result<T, CliError> {
    decode(value).map_err(|e| CliError::Schema(format!("{source}: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;
    use serde_json::json;

    #[derive(Debug, Deserialize, PartialEq)]
    #[serde(deny_unknown_fields)]
    struct Inner {
        a: u32,
        #[serde(default)]
        b: f64,
    }

    #[derive(Debug, Deserialize, PartialEq)]
    #[serde(deny_unknown_fields)]
    struct Outer {
        inner: Inner,
        name: String,
    }

    #[test]
    fn toml_and_json_agree() {
        let t = parse("name = \"x\"\n[inner]\na = 3\nb = 0.5\n", ConfigFormat::Toml).unwrap();
        let j = parse(r#"{"name": "x", "inner": {"a": 3, "b": 0.5}}"#, ConfigFormat::Json).unwrap();
        assert_eq!(t, j);
        let o: Outer = decode(t).unwrap();
        assert_eq!(o, Outer { inner: Inner { a: 3, b: 0.5 }, name: "x".into() });
    }

    #[test]
    fn syntax_errors_report_the_line() {
        let e = parse("name = \"x\"\n[inner]\na = = 3\n", ConfigFormat::Toml).unwrap_err();
        assert!(matches!(e, ConfigError::Syntax { line: 3, .. }), "{e}");
        let e = parse("{\n\"name\": \"x\",\n}", ConfigFormat::Json).unwrap_err();
        assert!(matches!(e, ConfigError::Syntax { line: 3, .. }), "{e}");
    }

    #[test]
    fn schema_errors_name_the_key() {
        let v = parse("name = \"x\"\n[inner]\na = 3\nc = 1\n", ConfigFormat::Toml).unwrap();
        match decode::<Outer>(v).unwrap_err() {
            ConfigError::Schema { key, message } => {
                assert_eq!(key, "inner.c");
                assert!(message.contains("unknown field"), "{message}");
            }
            other => panic!("{other}"),
        }
        let v = parse("name = \"x\"\n[inner]\na = -1\n", ConfigFormat::Toml).unwrap();
        assert!(matches!(decode::<Outer>(v), Err(ConfigError::Schema { key, .. }) if key == "inner.a"));
        assert!(matches!(parse("[1, 2]", ConfigFormat::Json), Err(ConfigError::Schema { .. })));
    }

    #[test]
    fn overrides_merge_into_tables() {
        let mut base = json!({"inner": {"a": 1, "b": 2.0}, "name": "base"});
        merge(&mut base, json!({"inner": {"b": 3.0}}));
        set(&mut base, "inner.a", json!(7));
        set(&mut base, "extra.deep.key", json!(true));
        set_opt::<u64>(&mut base, "name", None);
        assert_eq!(base, json!({"inner": {"a": 7, "b": 3.0}, "name": "base", "extra": {"deep": {"key": true}}}));
    }

    #[test]
    fn format_follows_extension() {
        assert_eq!(ConfigFormat::of(Path::new("a/run.JSON")), ConfigFormat::Json);
        assert_eq!(ConfigFormat::of(Path::new("run.toml")), ConfigFormat::Toml);
        assert_eq!(ConfigFormat::of(Path::new("run")), ConfigFormat::Toml);
    }
}
