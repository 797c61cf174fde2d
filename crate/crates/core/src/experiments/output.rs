//! CSV output: one detail file with every run, one summary file with the
//! mean over seeds, and the resolved configuration next to them.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use super::config::ExperimentConfig;
use crate::error::{Error, Result};

pub const HEADER: [&str; 6] = ["experiment", "sweep", "seed", "metric", "value", "units"];

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub experiment: String,
    pub sweep: f64,
    pub seed: u64,
    pub metric: String,
    pub value: f64,
    pub units: String,
}

/// Mean of one metric at one sweep value over the seeds that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub experiment: String,
    pub sweep: f64,
    pub metric: String,
    pub mean: f64,
    pub seeds: usize,
    pub units: String,
}

/// Group rows by (sweep, metric) in first-appearance order and average.
pub fn summarize(rows: &[ResultRow]) -> Vec<SummaryRow> {
    let mut out: Vec<SummaryRow> = Vec::new();
    let mut sums: Vec<f64> = Vec::new();
    for r in rows {
        let slot = out
            .iter()
            .position(|s| s.sweep.to_bits() == r.sweep.to_bits() && s.metric == r.metric && s.experiment == r.experiment);
        match slot {
            Some(i) => {
                sums[i] += r.value;
                out[i].seeds += 1;
            }
            None => {
                out.push(SummaryRow {
                    experiment: r.experiment.clone(),
                    sweep: r.sweep,
                    metric: r.metric.clone(),
                    mean: 0.0,
                    seeds: 1,
                    units: r.units.clone(),
                });
                sums.push(r.value);
            }
        }
    }
    for (s, sum) in out.iter_mut().zip(sums) {
        s.mean = sum / s.seeds as f64;
    }
    out
}

fn check_unique(rows: &[ResultRow]) -> Result<()> {
    let mut seen = HashSet::new();
    for r in rows {
        if !seen.insert((r.experiment.as_str(), r.sweep.to_bits(), r.seed, r.metric.as_str())) {
            return Err(Error::invariant(format!(
                "duplicate result row {}/{}/{}/{}",
                r.experiment, r.sweep, r.seed, r.metric
            )));
        }
    }
    Ok(())
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(file);
    w.write_record(HEADER)?;
    Ok(w)
}

/// Paths written by [`write_outputs`].
#[derive(Debug, Clone)]
pub struct OutputFiles {
    pub detail: PathBuf,
    pub summary: PathBuf,
    pub config: PathBuf,
}

impl OutputFiles {
    pub fn in_dir(dir: &Path, experiment: &str) -> Self {
        Self {
            detail: dir.join(format!("{experiment}_runs.csv")),
            summary: dir.join(format!("{experiment}_summary.csv")),
            config: dir.join(format!("{experiment}_config.txt")),
        }
    }
}

/// Write detail, summary and resolved config into `dir` (created if needed).
/// In the summary file the seed column reads `mean`.
pub fn write_outputs(dir: &Path, cfg: &ExperimentConfig, rows: &[ResultRow]) -> Result<OutputFiles> {
    check_unique(rows)?;
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let files = OutputFiles::in_dir(dir, cfg.experiment.name());

    let mut w = writer(&files.detail)?;
    for r in rows {
        w.write_record([
            r.experiment.clone(),
            format!("{}", r.sweep),
            r.seed.to_string(),
            r.metric.clone(),
            format!("{}", r.value),
            r.units.clone(),
        ])?;
    }
    w.flush().map_err(io_err(&files.detail))?;

    let mut w = writer(&files.summary)?;
    for s in summarize(rows) {
        w.write_record([
            s.experiment,
            format!("{}", s.sweep),
            "mean".to_string(),
            s.metric,
            format!("{}", s.mean),
            s.units,
        ])?;
    }
    w.flush().map_err(io_err(&files.summary))?;

    fs::write(&files.config, cfg.to_text()).map_err(io_err(&files.config))?;
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(sweep: f64, seed: u64, metric: &str, value: f64) -> ResultRow {
        ResultRow {
            experiment: "relay".into(),
            sweep,
            seed,
            metric: metric.into(),
            value,
            units: "fraction".into(),
        }
    }

    #[test]
    fn summary_means_in_order() {
        let rows = vec![
            row(0.0, 1, "a", 1.0),
            row(0.0, 1, "b", 5.0),
            row(0.0, 2, "a", 3.0),
            row(0.0, 2, "b", 7.0),
            row(5.0, 1, "a", 10.0),
        ];
        let s = summarize(&rows);
        let got: Vec<(f64, &str, f64, usize)> = s.iter().map(|s| (s.sweep, s.metric.as_str(), s.mean, s.seeds)).collect();
        assert_eq!(got, vec![(0.0, "a", 2.0, 2), (0.0, "b", 6.0, 2), (5.0, "a", 10.0, 1)]);
    }

    #[test]
    fn files_and_duplicates() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig::defaults(super::super::Experiment::Relay);
        let rows = vec![row(0.0, 1, "a", 0.5), row(f64::INFINITY, 1, "a", 0.25)];
        let files = write_outputs(dir.path(), &cfg, &rows).unwrap();
        let detail = fs::read_to_string(&files.detail).unwrap();
        assert_eq!(
            detail,
            "experiment,sweep,seed,metric,value,units\nrelay,0,1,a,0.5,fraction\nrelay,inf,1,a,0.25,fraction\n"
        );
        let summary = fs::read_to_string(&files.summary).unwrap();
        assert!(summary.starts_with("experiment,sweep,seed,metric,value,units\nrelay,0,mean,a,0.5,fraction\n"));
        assert!(files.config.exists());
        let dup = vec![row(0.0, 1, "a", 0.5), row(0.0, 1, "a", 0.6)];
        assert!(matches!(write_outputs(dir.path(), &cfg, &dup), Err(Error::Invariant(_))));
    }
}
