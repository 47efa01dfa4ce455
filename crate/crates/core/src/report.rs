//! On-disk formats: the per-epoch runs CSV and the JSON summary.

use std::time::Duration;

use crate::analysis::Summary;
use crate::error::{Error, Result};
use crate::experiment::RunLog;

pub const RUNS_HEADER: &str = "initialiser,run,seed,epoch,train_loss,test_loss";

fn format_loss(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".to_string()
    } else {
        // Shortest representation that parses back to the same value.
        format!("{v:?}")
    }
}

/// One line per (initialiser, run, epoch); epochs are 0-based; `+∞` is
/// written as `inf`.
pub fn write_runs_csv(logs: &[RunLog]) -> String {
    let mut out = String::with_capacity(64 * logs.iter().map(RunLog::epochs).sum::<usize>() + 64);
    out.push_str(RUNS_HEADER);
    out.push('\n');
    for log in logs {
        for (epoch, (train, test)) in log.train_loss.iter().zip(&log.test_loss).enumerate() {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                log.initialiser,
                log.run,
                log.seed,
                epoch,
                format_loss(*train),
                format_loss(*test)
            ));
        }
    }
    out
}

/// Parses a runs file back into logs (wall-clock times are not stored and
/// come back as zero).
pub fn parse_runs_csv(text: &str, origin: &std::path::Path) -> Result<Vec<RunLog>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim_end() == RUNS_HEADER => {}
        other => {
            return Err(Error::format(
                origin,
                format!("expected header `{RUNS_HEADER}`, found `{}`", other.unwrap_or("")),
            ))
        }
    }
    let mut logs: Vec<RunLog> = Vec::new();
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(Error::format(origin, format!("line {lineno}: expected 6 fields, found {}", fields.len())));
        }
        let bad = |what: &str| Error::format(origin, format!("line {lineno}: invalid {what}"));
        let run: usize = fields[1].parse().map_err(|_| bad("run"))?;
        let seed: u64 = fields[2].parse().map_err(|_| bad("seed"))?;
        let epoch: usize = fields[3].parse().map_err(|_| bad("epoch"))?;
        let loss = |s: &str, what: &str| -> Result<f64> {
            let v: f64 = s.parse().map_err(|_| bad(what))?;
            if v.is_nan() || v < 0.0 {
                return Err(bad(what));
            }
            Ok(v)
        };
        let train = loss(fields[4], "train_loss")?;
        let test = loss(fields[5], "test_loss")?;
        let name = fields[0];

        let continues = logs
            .last()
            .is_some_and(|l| l.initialiser == name && l.run == run);
        if !continues {
            if epoch != 0 {
                return Err(Error::format(origin, format!("line {lineno}: run starts at epoch {epoch}")));
            }
            if logs.iter().any(|l| l.initialiser == name && l.run == run) {
                return Err(Error::format(origin, format!("line {lineno}: duplicate run {name}/{run}")));
            }
            logs.push(RunLog {
                initialiser: name.to_string(),
                run,
                seed,
                train_loss: Vec::new(),
                test_loss: Vec::new(),
                wall_clock: Duration::ZERO,
            });
        }
        let log = logs.last_mut().expect("pushed above");
        if epoch != log.train_loss.len() || seed != log.seed {
            return Err(Error::format(origin, format!("line {lineno}: epochs out of order for {name}/{run}")));
        }
        log.train_loss.push(train);
        log.test_loss.push(test);
    }
    if logs.is_empty() {
        return Err(Error::format(origin, "runs file has no records"));
    }
    Ok(logs)
}

/// Pretty JSON of a summary, newline-terminated.
pub fn summary_json(summary: &Summary) -> Result<String> {
    let mut text = serde_json::to_string_pretty(summary)?;
    text.push('\n');
    Ok(text)
}

/// Fixed-width text rendering of a summary.
pub fn summary_table(summary: &Summary) -> String {
    let mut out = format!(
        "{:<18} {:>10} {:>12} {:>12} {:>10}\n",
        "Initialiser", "Conv.epoch", "Conv.loss", "Final loss", "p-value"
    );
    for row in &summary.rows {
        let na = || "N/A".to_string();
        let epoch = row.convergence.epoch.map_or_else(na, |e| e.to_string());
        let loss = row.convergence.loss.map_or_else(na, |l| format!("{l:.6}"));
        let last = row.final_loss_mean.map_or_else(na, |l| format!("{l:.6}"));
        let p = match row.p_value {
            None => String::new(),
            Some(p) if p < 0.001 => "<0.001".to_string(),
            Some(p) => format!("{p:.3}"),
        };
        out.push_str(&format!(
            "{:<18} {:>10} {:>12} {:>12} {:>10}\n",
            row.initialiser, epoch, loss, last, p
        ));
    }
    out
}
