//! Command-line harness: parses a system file, runs one command and writes
//! its CSV tables (and optional SVG plots) atomically.

pub mod args;
pub mod commands;
pub mod output;
pub mod runfile;

use std::ffi::OsString;
use std::fs;
use std::path::Path;

use clap::error::ErrorKind;
use clap::Parser;
use serde_json::json;

use args::Cli;
use commands::{execute, Context};
use output::{config_hash, write_atomic};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Why a run stopped. Usage problems exit with 2, everything else with 1.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Domain {
        kind: String,
        message: String,
        extra: Option<serde_json::Value>,
    },
}

impl Failure {
    pub fn usage(msg: impl Into<String>) -> Self {
        Failure::Usage(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Domain { .. } => 1,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Failure::Usage(m) => json!({ "error": "usage", "message": m }),
            Failure::Domain { kind, message, extra } => {
                let mut v = json!({ "error": kind, "message": message });
                if let Some(serde_json::Value::Object(map)) = extra {
                    for (k, x) in map {
                        v[k] = x.clone();
                    }
                }
                v
            }
        }
    }
}

impl From<fracdioph::Error> for Failure {
    fn from(e: fracdioph::Error) -> Self {
        // the variant name, in snake case
        let name: String = format!("{e:?}").chars().take_while(|c| c.is_alphanumeric()).collect();
        let mut kind = String::new();
        for (i, c) in name.chars().enumerate() {
            if c.is_uppercase() && i > 0 {
                kind.push('_');
            }
            kind.push(c.to_ascii_lowercase());
        }
        Failure::Domain {
            kind,
            message: e.to_string(),
            extra: None,
        }
    }
}

/// Parses `args` and runs; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("{}", f.to_json());
            f.exit_code()
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let args::Command::Run { file } = &cli.command {
        let argv = runfile::expand(file, &cli.global)?;
        let inner = Cli::try_parse_from(&argv).map_err(|e| Failure::usage(format!("run file {}: {e}", file.display())))?;
        if matches!(inner.command, args::Command::Run { .. }) {
            return Err(Failure::usage("run files cannot nest"));
        }
        return run(inner);
    }
    let g = &cli.global;
    if let Some(n) = g.threads {
        if n == 0 {
            return Err(Failure::usage("--threads must be positive"));
        }
        // a pool that already exists keeps its size
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    if cli.command.stochastic() && g.seed.is_none() {
        return Err(Failure::usage(format!("`{}` is stochastic and needs --seed", cli.command.name())));
    }
    if g.svg && g.out.is_none() {
        return Err(Failure::usage("--svg needs --out"));
    }
    let (file, raw) = match (&g.config, cli.command.needs_system()) {
        (Some(path), true) => {
            let raw = fs::read(path).map_err(|e| Failure::Domain {
                kind: "io".into(),
                message: format!("{}: {e}", path.display()),
                extra: None,
            })?;
            let file = serde_json::from_slice(&raw).map_err(|e| Failure::Domain {
                kind: "system_file".into(),
                message: format!("{}: {e}", path.display()),
                extra: None,
            })?;
            (Some(file), raw)
        }
        (None, true) => return Err(Failure::usage(format!("`{}` needs --config", cli.command.name()))),
        _ => (None, Vec::new()),
    };
    let ctx = Context { file, seed: g.seed };
    let (artifacts, failure) = execute(&cli.command, &ctx);

    let command_text = format!("{:?}", cli.command);
    let seed_text = if cli.command.stochastic() {
        g.seed.map_or("none".into(), |s| s.to_string())
    } else {
        "none".into()
    };
    let hash = config_hash(&[command_text.as_bytes(), seed_text.as_bytes(), &raw]);
    let header = format!(
        "# fracdioph {VERSION} command={} seed={seed_text} config={hash}",
        cli.command.name()
    );
    emit(g.out.as_deref(), g.svg, &header, &artifacts)?;
    match failure {
        Some(f) => Err(f),
        None => Ok(()),
    }
}

fn emit(out: Option<&Path>, svg: bool, header: &str, art: &commands::Artifacts) -> Result<(), Failure> {
    let io = |e: std::io::Error, p: &Path| Failure::Domain {
        kind: "io".into(),
        message: format!("{}: {e}", p.display()),
        extra: None,
    };
    match out {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| io(e, dir))?;
            for t in &art.tables {
                let path = dir.join(format!("{}.csv", t.name));
                write_atomic(&path, t.render(header).as_bytes()).map_err(|e| io(e, &path))?;
            }
            if svg {
                for (name, plot) in &art.plots {
                    let path = dir.join(format!("{name}.svg"));
                    write_atomic(&path, plot.svg().as_bytes()).map_err(|e| io(e, &path))?;
                }
            }
        }
        None => {
            let blocks: Vec<String> = art.tables.iter().map(|t| t.render(header)).collect();
            print!("{}", blocks.join("\n"));
        }
    }
    Ok(())
}
