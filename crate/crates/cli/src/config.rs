//! Plain-text `key = value` configuration files and the resolved-config echo.

use std::path::Path;

use serde::Serialize;
use serde_json::Value;

/// Parses `key = value` lines. Blank lines and lines starting with `#` are
/// skipped.
pub fn parse(text: &str) -> Result<Vec<(String, String)>, String> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("config line {}: expected `key = value`", i + 1))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(format!("config line {}: empty key", i + 1));
        }
        out.push((key.to_string(), value.trim().to_string()));
    }
    Ok(out)
}

fn given(args: &[String], key: &str) -> bool {
    let flag = format!("--{key}");
    let prefix = format!("--{key}=");
    args.iter().any(|a| *a == flag || a.starts_with(&prefix))
}

/// Appends config entries as flags unless the command line already sets them.
/// `true` becomes a bare flag and `false` is dropped.
pub fn merge(args: &[String], entries: &[(String, String)]) -> Vec<String> {
    let mut out = args.to_vec();
    for (key, value) in entries {
        if key == "command" || key == "config" || given(args, key) {
            continue;
        }
        match value.as_str() {
            "true" => out.push(format!("--{key}")),
            "false" => {}
            _ => {
                out.push(format!("--{key}"));
                out.push(value.clone());
            }
        }
    }
    out
}

/// Path given by `--config PATH` or `--config=PATH`.
pub fn config_path(args: &[String]) -> Option<String> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().cloned();
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some(p.to_string());
        }
    }
    None
}

fn scalar(v: &Value) -> Option<String> {
    match v {
        Value::Null => None,
        Value::String(s) => Some(s.clone()),
        Value::Array(items) => Some(items.iter().filter_map(scalar).collect::<Vec<_>>().join(",")),
        other => Some(other.to_string()),
    }
}

/// Renders a flat serializable struct as `key = value` lines that `parse`
/// reads back.
pub fn render(command: &str, args: &impl Serialize) -> String {
    let mut text = format!("command = {command}\n");
    if let Ok(Value::Object(map)) = serde_json::to_value(args) {
        for (k, v) in map {
            if k == "config" {
                continue;
            }
            if let Some(s) = scalar(&v) {
                text.push_str(&format!("{k} = {s}\n"));
            }
        }
    }
    text
}

pub fn echo(dir: &Path, command: &str, args: &impl Serialize) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(
        dir.join(format!("run_config_{command}.txt")),
        render(command, args),
    )
}
