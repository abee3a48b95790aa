//! Certificate and CSV output plumbing.

use std::io::Write;
use std::path::PathBuf;

use serde::Serialize;

pub type BoxedError = Box<dyn std::error::Error + Send + Sync + 'static>;
pub type Result<T> = std::result::Result<T, BoxedError>;

/// The versioned certificate envelope. `pass` is a pure function of the
/// metrics and the pinned tolerances; `timing_ms` is excluded from
/// determinism comparisons.
#[derive(Serialize)]
pub struct Certificate<C: Serialize, M: Serialize> {
    pub schema: u32,
    pub command: &'static str,
    pub config: C,
    pub pass: bool,
    pub metrics: M,
    pub timing_ms: u128,
}

pub fn emit<C: Serialize, M: Serialize>(
    cert: &Certificate<C, M>,
    out: &Option<PathBuf>,
) -> Result<()> {
    let json = serde_json::to_string_pretty(cert)?;
    match out {
        None => println!("{json}"),
        Some(path) => {
            let mut f = std::fs::File::create(path)?;
            writeln!(f, "{json}")?;
        }
    }
    Ok(())
}

pub fn write_csv(path: &PathBuf, header: &str, rows: &[String]) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "{header}")?;
    for row in rows {
        writeln!(f, "{row}")?;
    }
    Ok(())
}
