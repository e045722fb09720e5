//! Helpers for the acceptance suite: running bundled run files in-process and
//! reading the CSV tables they write.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

/// The CLI crate's `examples/` directory.
pub fn examples() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../cli/examples")
}

pub fn system(name: &str) -> PathBuf {
    examples().join("systems").join(name)
}

pub fn run_file(name: &str) -> PathBuf {
    examples().join("runs").join(format!("{name}.json"))
}

/// Runs `examples/runs/<name>.json` with `--out out`; returns the exit code.
pub fn run_bundled(name: &str, out: &Path) -> i32 {
    let f = run_file(name);
    fracdioph_cli::main_with_args([
        "fracdioph".into(),
        "run".into(),
        f.into_os_string(),
        "--out".into(),
        out.as_os_str().to_owned(),
    ])
}

/// An empty directory `base/name`.
pub fn scratch(base: &Path, name: &str) -> PathBuf {
    let dir = base.join(name);
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

/// One table as written by the CLI: comment header, column row, data rows.
pub struct Csv {
    pub header: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Csv {
    pub fn parse(text: &str) -> Csv {
        let mut lines = text.lines().take_while(|l| !l.is_empty());
        let header = lines.next().unwrap_or_default().to_string();
        let columns = lines.next().unwrap_or_default().split(',').map(String::from).collect();
        let rows = lines.map(split_row).collect();
        Csv { header, columns, rows }
    }

    pub fn read(path: &Path) -> Csv {
        Csv::parse(&fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display())))
    }

    pub fn column(&self, name: &str) -> Vec<&str> {
        let i = self.columns.iter().position(|c| c == name).unwrap_or_else(|| panic!("no column {name}"));
        self.rows.iter().map(|r| r[i].as_str()).collect()
    }

    /// `quantity,value` tables as a map.
    pub fn pairs(&self) -> BTreeMap<String, String> {
        self.rows.iter().map(|r| (r[0].clone(), r[1].clone())).collect()
    }

    pub fn get(&self, key: &str) -> f64 {
        let p = self.pairs();
        let v = p.get(key).unwrap_or_else(|| panic!("no row {key}"));
        v.parse().unwrap_or_else(|_| panic!("{key} = {v} is not a number"))
    }
}

fn split_row(line: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut quoted = false;
    let mut chars = line.chars().peekable();
    while let Some(c) = chars.next() {
        match (c, quoted) {
            ('"', true) if chars.peek() == Some(&'"') => {
                cur.push('"');
                chars.next();
            }
            ('"', _) => quoted = !quoted,
            (',', false) => out.push(std::mem::take(&mut cur)),
            _ => cur.push(c),
        }
    }
    out.push(cur);
    out
}

/// Every CSV file in `dir` with its contents minus the header line.
pub fn bodies(dir: &Path) -> BTreeMap<String, String> {
    let mut m = BTreeMap::new();
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.extension().is_some_and(|x| x == "csv") {
            let text = fs::read_to_string(&p).unwrap();
            let body = text.split_once('\n').map_or("", |b| b.1).to_string();
            m.insert(p.file_name().unwrap().to_string_lossy().into_owned(), body);
        }
    }
    m
}
