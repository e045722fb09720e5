//! Run files: a command, a system file relative to the run file, a seed and
//! the command's flags.
//!
//! ```json
//! {
//!   "command": "escape-check",
//!   "system": "../systems/cantor.json",
//!   "seed": 4,
//!   "args": { "offset": "1/4", "trials": 10000 }
//! }
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use serde_json::Value;

use crate::args::Global;
use crate::Failure;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunFile {
    pub command: String,
    #[serde(default)]
    pub description: Option<String>,
    #[serde(default)]
    pub system: Option<PathBuf>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub args: serde_json::Map<String, Value>,
}

impl RunFile {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let raw = fs::read(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
        serde_json::from_slice(&raw).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
    }
}

fn flag_value(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

/// The argument vector equivalent to the run file; flags given on the outer
/// command line take precedence.
pub fn expand(path: &Path, outer: &Global) -> Result<Vec<String>, Failure> {
    let rf = RunFile::load(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut argv = vec!["fracdioph".to_string(), rf.command.clone()];
    for (k, v) in &rf.args {
        match v {
            Value::Bool(true) => argv.push(format!("--{k}")),
            Value::Bool(false) | Value::Null => {}
            other => {
                // arrays repeat the flag
                let items = match other {
                    Value::Array(a) => a.iter().collect(),
                    v => vec![v],
                };
                for item in items {
                    let val = flag_value(item).ok_or_else(|| Failure::usage(format!("unsupported value for {k}")))?;
                    argv.push(format!("--{k}"));
                    argv.push(val);
                }
            }
        }
    }
    let config = outer.config.clone().or_else(|| rf.system.as_ref().map(|s| base.join(s)));
    if let Some(c) = config {
        argv.push("--config".into());
        argv.push(c.display().to_string());
    }
    if let Some(s) = outer.seed.or(rf.seed) {
        argv.push("--seed".into());
        argv.push(s.to_string());
    }
    if let Some(o) = &outer.out {
        argv.push("--out".into());
        argv.push(o.display().to_string());
    }
    if let Some(t) = outer.threads {
        argv.push("--threads".into());
        argv.push(t.to_string());
    }
    if outer.svg {
        argv.push("--svg".into());
    }
    Ok(argv)
}
