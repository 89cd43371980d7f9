//! Number formatting and report files.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;

pub use qmlab::format::sig9 as sig;

/// Optional output directory. Every file is written whole, and contents
/// depend only on inputs, so reruns are byte-identical.
pub struct Out(Option<PathBuf>);

impl Out {
    pub fn new(dir: Option<PathBuf>) -> anyhow::Result<Self> {
        if let Some(d) = &dir {
            fs::create_dir_all(d)
                .with_context(|| format!("cannot create output directory {}", d.display()))?;
        }
        Ok(Self(dir))
    }

    pub fn text(&self, name: &str, contents: &str) -> anyhow::Result<()> {
        if let Some(dir) = &self.0 {
            write(&dir.join(name), contents)?;
        }
        Ok(())
    }

    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> anyhow::Result<()> {
        if self.0.is_some() {
            let mut s = serde_json::to_string_pretty(value)?;
            s.push('\n');
            self.text(name, &s)?;
        }
        Ok(())
    }
}

fn write(path: &Path, contents: &str) -> anyhow::Result<()> {
    fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))
}

/// Rows of already formatted cells joined as CSV.
pub fn csv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    s
}
