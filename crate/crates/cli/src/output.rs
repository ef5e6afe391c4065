use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::ValueEnum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Where a report goes and in which format.
///
/// `--out` takes `csv` or `json` (stdout in that format), `-` (stdout in the
/// subcommand's default format) or a path whose extension picks the format.
/// `--format` overrides any inference.
#[derive(Debug, Clone)]
pub struct Target {
    pub path: Option<PathBuf>,
    pub format: Format,
}

impl Target {
    pub fn resolve(out: Option<&str>, format: Option<Format>, default: Format) -> Self {
        let (path, inferred) = match out {
            None | Some("-") => (None, None),
            Some("csv") => (None, Some(Format::Csv)),
            Some("json") => (None, Some(Format::Json)),
            Some(p) => {
                let path = PathBuf::from(p);
                let ext = path
                    .extension()
                    .and_then(|e| e.to_str())
                    .map(|e| e.to_ascii_lowercase());
                let f = match ext.as_deref() {
                    Some("json") => Some(Format::Json),
                    Some("csv") => Some(Format::Csv),
                    _ => None,
                };
                (Some(path), f)
            }
        };
        Self {
            path,
            format: format.or(inferred).unwrap_or(default),
        }
    }

    pub fn write(&self, body: &str) -> io::Result<()> {
        match &self.path {
            None => {
                let stdout = io::stdout();
                let mut lock = stdout.lock();
                lock.write_all(body.as_bytes())?;
                lock.flush()
            }
            Some(p) => {
                let mut w = BufWriter::new(File::create(p)?);
                w.write_all(body.as_bytes())?;
                w.flush()
            }
        }
    }
}

/// CSV text from a header and rows of already formatted cells.
pub fn csv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    s
}

pub fn json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}
