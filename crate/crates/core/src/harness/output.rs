use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

use super::config::ExperimentConfig;
use super::experiment::{timeseries, ScoreRecord, SweepRow};
use super::summary::RunSummary;

/// `printf("%.6g")`: six significant digits, trailing zeros dropped.
pub fn format_sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        trim_zeros(&format!("{x:.*}", (5 - exp) as usize)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

struct CsvFile {
    path: PathBuf,
    out: BufWriter<File>,
}

impl CsvFile {
    fn create(dir: &Path, name: &str) -> Result<Self> {
        let path = dir.join(name);
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        Ok(CsvFile {
            path,
            out: BufWriter::new(file),
        })
    }

    fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut line = fields
            .into_iter()
            .map(|f| f.as_ref().to_owned())
            .collect::<Vec<_>>()
            .join(",");
        line.push('\n');
        self.out
            .write_all(line.as_bytes())
            .map_err(|e| Error::io(&self.path, e))
    }

    fn finish(mut self) -> Result<PathBuf> {
        self.out.flush().map_err(|e| Error::io(&self.path, e))?;
        Ok(self.path)
    }
}

fn user_columns(prefix: &str, users: usize) -> impl Iterator<Item = String> + '_ {
    (0..users).map(move |i| format!("{prefix}{i}"))
}

/// Writes `scores.csv`, `summary.csv`, `config.toml` and, when cumulative
/// scores were kept, `timeseries.csv`. Returns the paths written.
pub fn emit_csv(
    records: &[ScoreRecord],
    summary: &RunSummary,
    config: &ExperimentConfig,
    output_dir: &Path,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(output_dir).map_err(|e| Error::io(output_dir, e))?;
    let users = summary.mean_per_user.len();
    let mut written = Vec::new();

    let mut scores = CsvFile::create(output_dir, "scores.csv")?;
    scores.row(std::iter::once("sample_id".to_string()).chain(user_columns("user_", users)))?;
    for r in records {
        scores.row(
            std::iter::once(r.sample_id.to_string()).chain(r.scores.iter().map(|&s| format_sig6(s))),
        )?;
    }
    written.push(scores.finish()?);

    if let Some(series) = timeseries(records) {
        let mut ts = CsvFile::create(output_dir, "timeseries.csv")?;
        ts.row(
            std::iter::once("t".to_string())
                .chain(user_columns("mean_user_", users))
                .chain(std::iter::once("mean_total".to_string())),
        )?;
        for (t, row) in series.iter().enumerate() {
            ts.row(std::iter::once((t + 1).to_string()).chain(row.iter().map(|&v| format_sig6(v))))?;
        }
        written.push(ts.finish()?);
    }

    let mut sum = CsvFile::create(output_dir, "summary.csv")?;
    sum.row(["metric", "value"])?;
    sum.row(["samples".to_string(), summary.samples.to_string()])?;
    for (i, m) in summary.mean_per_user.iter().enumerate() {
        sum.row([format!("mean_user_{i}"), format_sig6(*m)])?;
    }
    sum.row(["mean_total".to_string(), format_sig6(summary.mean_total)])?;
    let c = &summary.classification;
    sum.row(["sm_count".to_string(), c.sm_count().to_string()])?;
    sum.row(["ne_count".to_string(), c.ne_count.to_string()])?;
    sum.row(["unclassified_count".to_string(), c.unclassified_count.to_string()])?;
    for (label, count) in &c.cluster_counts {
        sum.row([format!("cluster_{label}"), count.to_string()])?;
    }
    written.push(sum.finish()?);

    let echo = output_dir.join("config.toml");
    fs::write(&echo, config.to_toml()).map_err(|e| Error::io(&echo, e))?;
    written.push(echo);
    Ok(written)
}

/// `sweep_omega.csv`: one row per omega.
pub fn emit_sweep_csv(rows: &[SweepRow], output_dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(output_dir).map_err(|e| Error::io(output_dir, e))?;
    let users = rows.first().map_or(0, |r| r.summary.mean_per_user.len());
    let mut csv = CsvFile::create(output_dir, "sweep_omega.csv")?;
    csv.row(
        ["omega", "mean_total"]
            .into_iter()
            .map(String::from)
            .chain(user_columns("mean_user_", users))
            .chain(["sm_fraction".to_string(), "ne_fraction".to_string()]),
    )?;
    for r in rows {
        let s = &r.summary;
        csv.row(
            [format_sig6(r.omega), format_sig6(s.mean_total)]
                .into_iter()
                .chain(s.mean_per_user.iter().map(|&m| format_sig6(m)))
                .chain([format_sig6(s.sm_fraction()), format_sig6(s.ne_fraction())]),
        )?;
    }
    csv.finish()
}
