use std::fmt;
use std::io::Write;
use std::path::Path;

use heatctrl_core::export::fmt17;

/// Failure classes, each with its own exit status.
#[derive(Debug)]
pub enum CliError {
    Precondition(String),
    Solver(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Precondition(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Precondition(m) => write!(f, "error: {m}"),
            CliError::Solver(m) => write!(f, "solver failure: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<heatctrl_core::Error> for CliError {
    fn from(e: heatctrl_core::Error) -> Self {
        if e.is_solver_failure() {
            CliError::Solver(e.to_string())
        } else {
            CliError::Precondition(e.to_string())
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn precondition(msg: impl Into<String>) -> CliError {
    CliError::Precondition(msg.into())
}

/// Writes through a temporary file in the destination directory, then renames.
pub fn write_atomic(path: &Path, contents: &str) -> CliResult<()> {
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

pub fn write_opt(path: Option<&Path>, contents: impl FnOnce() -> String) -> CliResult<()> {
    match path {
        Some(p) => write_atomic(p, &contents()),
        None => Ok(()),
    }
}

pub fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// JSON number with 17 significant digits; non-finite values become `null`.
pub fn num(v: f64) -> String {
    if v.is_finite() {
        fmt17(v)
    } else {
        "null".into()
    }
}

pub fn num_list(vs: &[f64]) -> String {
    let items: Vec<String> = vs.iter().map(|v| num(*v)).collect();
    format!("[{}]", items.join(","))
}

/// Minimal ordered JSON object writer.
#[derive(Default)]
pub struct Obj {
    fields: Vec<(String, String)>,
}

impl Obj {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn raw(mut self, key: &str, json: impl Into<String>) -> Self {
        self.fields.push((key.to_string(), json.into()));
        self
    }

    pub fn num(self, key: &str, v: f64) -> Self {
        self.raw(key, num(v))
    }

    pub fn opt_num(self, key: &str, v: Option<f64>) -> Self {
        self.raw(key, v.map_or("null".into(), num))
    }

    pub fn int(self, key: &str, v: usize) -> Self {
        self.raw(key, v.to_string())
    }

    pub fn flag(self, key: &str, v: bool) -> Self {
        self.raw(key, v.to_string())
    }

    pub fn text(self, key: &str, v: &str) -> Self {
        // serializing a str cannot fail
        let s = serde_json::to_string(v).unwrap_or_else(|_| "null".into());
        self.raw(key, s)
    }

    pub fn finish(self) -> String {
        let body: Vec<String> = self
            .fields
            .into_iter()
            .map(|(k, v)| format!("{}:{v}", serde_json::to_string(&k).unwrap_or_default()))
            .collect();
        format!("{{{}}}", body.join(","))
    }
}

pub fn array(items: &[String]) -> String {
    format!("[{}]", items.join(","))
}
