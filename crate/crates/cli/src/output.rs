use std::path::{Path, PathBuf};

use crate::error::CliError;

/// A finished output file; files are built in parallel and written in order.
pub struct Artifact {
    pub name: String,
    pub body: String,
}

/// CSV with a `#` comment block echoing the command and its config.
pub fn csv(command: &str, config_toml: &str, notes: &[String], header: &str, rows: &[String]) -> String {
    let mut s = format!("# opgrowth {command}\n");
    for n in notes {
        s.push_str(&format!("# {n}\n"));
    }
    s.push_str("# config:\n");
    for line in config_toml.lines() {
        if line.is_empty() {
            s.push_str("#\n");
        } else {
            s.push_str(&format!("#   {line}\n"));
        }
    }
    s.push_str(header);
    s.push('\n');
    for r in rows {
        s.push_str(r);
        s.push('\n');
    }
    s
}

pub fn num(v: f64) -> String {
    format!("{v:.12e}")
}

pub fn write_all(dir: &Path, artifacts: &[Artifact]) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(dir)?;
    let mut paths = Vec::new();
    for a in artifacts {
        let p = dir.join(&a.name);
        std::fs::write(&p, &a.body)?;
        paths.push(p);
    }
    Ok(paths)
}
