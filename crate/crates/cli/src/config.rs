//! Flat `section.key = value` configuration. Files are TOML restricted to
//! one level of sections; numeric values may also be given as short
//! expressions such as `"pi/2"` or `"1.3*sigma_star"`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use toml::Value;

use crate::error::{CliError, Result};

pub type ConfigMap = BTreeMap<String, Value>;

/// Parses config text into dotted keys. Keys must have exactly one section.
pub fn parse_config(text: &str) -> Result<ConfigMap> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| CliError::config(e.message().to_string()))?;
    let mut out = ConfigMap::new();
    for (section, value) in table {
        let Value::Table(inner) = value else {
            return Err(CliError::config(format!("top-level key `{section}` must be written as `section.key`")));
        };
        for (key, v) in inner {
            if v.is_table() {
                return Err(CliError::config(format!("`{section}.{key}` nests too deeply")));
            }
            out.insert(format!("{section}.{key}"), v);
        }
    }
    Ok(out)
}

/// Parses a `key=value` override. Values that are not valid TOML are taken
/// as bare strings, so `kernel.form=printed` works unquoted.
pub fn parse_override(s: &str) -> Result<(String, Value)> {
    let (key, raw) =
        s.split_once('=').ok_or_else(|| CliError::config(format!("override `{s}` is not of the form key=value")))?;
    let key = key.trim();
    let raw = raw.trim();
    if key.split('.').count() != 2 || key.split('.').any(str::is_empty) {
        return Err(CliError::config(format!("override key `{key}` must be `section.key`")));
    }
    let value = match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("single key"),
        Err(_) => Value::String(raw.to_string()),
    };
    Ok((key.to_string(), value))
}

/// Evaluates a numeric value: a TOML number, or a string of the form
/// `[a*]pi[/b]`, `[a*]sigma_star`, or a plain number.
pub fn eval_number(value: &Value, sigma_star: Option<f64>) -> std::result::Result<f64, String> {
    match value {
        Value::Float(f) => Ok(*f),
        Value::Integer(i) => Ok(*i as f64),
        Value::String(s) => eval_expr(s, sigma_star),
        other => Err(format!("expected a number, got {}", other.type_str())),
    }
}

fn eval_expr(s: &str, sigma_star: Option<f64>) -> std::result::Result<f64, String> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((a, b)) => (a.trim(), Some(b.trim())),
        None => (s, None),
    };
    let (coef, sym) = match num.split_once('*') {
        Some((a, b)) => (Some(a.trim()), b.trim()),
        None => (None, num),
    };
    let base = match sym {
        "pi" => PI,
        "sigma_star" => sigma_star.ok_or_else(|| "sigma_star is not available here".to_string())?,
        other if coef.is_none() => other.parse::<f64>().map_err(|_| format!("cannot read `{s}` as a number"))?,
        _ => return Err(format!("cannot read `{s}` as a number")),
    };
    let coef = match coef {
        Some(c) => c.parse::<f64>().map_err(|_| format!("bad coefficient in `{s}`"))?,
        None => 1.0,
    };
    let den = match den {
        Some(d) => d.parse::<f64>().map_err(|_| format!("bad divisor in `{s}`"))?,
        None => 1.0,
    };
    let v = coef * base / den;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}
