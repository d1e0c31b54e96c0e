//! CSV and JSON output of experiment results.

use std::fs;
use std::path::Path;

use crate::config::Method;
use crate::error::{HarnessError, Result};
use crate::experiment::{Decision, Summary, TrialRecord};

pub const CSV_HEADER: [&str; 9] = [
    "trial",
    "seed",
    "method",
    "strategy",
    "p_lower",
    "p_upper",
    "decision",
    "oracle_calls",
    "wall_time_ms",
];

/// Strategy column value for methods without a search strategy.
pub const NO_STRATEGY: &str = "none";

/// Shortest exact decimal form: 17 significant digits.
fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn ensure_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => {
            fs::create_dir_all(dir).map_err(|source| HarnessError::Io {
                path: dir.to_path_buf(),
                source,
            })
        }
        _ => Ok(()),
    }
}

pub fn write_csv(records: &[TrialRecord], path: &Path) -> Result<()> {
    let csv_err = |source| HarnessError::Csv {
        path: path.to_path_buf(),
        source,
    };
    ensure_parent(path)?;
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in records {
        w.write_record([
            r.trial.to_string(),
            r.seed.to_string(),
            r.method.name().to_string(),
            r.strategy.map_or(NO_STRATEGY, |s| s.name()).to_string(),
            fmt_float(r.p_lower),
            fmt_float(r.p_upper),
            r.decision.name().to_string(),
            r.oracle_calls.to_string(),
            fmt_float(r.wall_time_ms),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_csv(path: &Path) -> Result<Vec<TrialRecord>> {
    let csv_err = |source| HarnessError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let bad = |line: usize, what: &str| {
        HarnessError::Config(format!("{}: row {line}: bad {what}", path.display()))
    };
    let mut rd = csv::Reader::from_path(path).map_err(csv_err)?;
    let header = rd.headers().map_err(csv_err)?;
    if header.iter().ne(CSV_HEADER) {
        return Err(HarnessError::Config(format!(
            "{}: unexpected header",
            path.display()
        )));
    }
    let mut out = Vec::new();
    for (i, row) in rd.records().enumerate() {
        let row = row.map_err(csv_err)?;
        let line = i + 2;
        let field = |k: usize| row.get(k).unwrap_or("");
        let float = |k: usize| {
            field(k)
                .parse::<f64>()
                .map_err(|_| bad(line, CSV_HEADER[k]))
        };
        let strategy = match field(3) {
            NO_STRATEGY => None,
            s => Some(s.parse().map_err(|_| bad(line, "strategy"))?),
        };
        out.push(TrialRecord {
            trial: field(0).parse().map_err(|_| bad(line, "trial"))?,
            seed: field(1).parse().map_err(|_| bad(line, "seed"))?,
            method: field(2)
                .parse::<Method>()
                .map_err(|_| bad(line, "method"))?,
            strategy,
            p_lower: float(4)?,
            p_upper: float(5)?,
            decision: Decision::parse(field(6)).ok_or_else(|| bad(line, "decision"))?,
            oracle_calls: field(7).parse().map_err(|_| bad(line, "oracle_calls"))?,
            wall_time_ms: float(8)?,
        });
    }
    Ok(out)
}

pub fn write_summary_json(summary: &Summary, path: &Path) -> Result<()> {
    ensure_parent(path)?;
    let text = serde_json::to_string_pretty(summary).map_err(|source| HarnessError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    fs::write(path, text + "\n").map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}
