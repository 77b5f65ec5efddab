//! Result emission: JSON-lines records plus a CSV table.
//!
//! `<stem>.jsonl` holds one [`ResultRecord`] per line. `<stem>.csv` holds
//! the flat [`StatRow`] table: the summary rows, or exactly the per-replica
//! rows when per-replica emission is enabled (one row per replica). Coupling
//! experiments with per-replica emission additionally write
//! `<stem>.outcomes.jsonl` with one outcome object per run. File stems embed
//! the subcommand, dimension, seed, and timestamp.

use crate::error::Result;
use crate::experiments::{ExperimentConfig, ResultRecord, StatRow};
use std::io::Write;
use std::path::{Path, PathBuf};

/// Builds the output stem `<kind>_n<dim>_seed<seed>_<timestamp>`.
pub fn default_stem(cfg: &ExperimentConfig) -> String {
    let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%S%3fZ");
    format!("{}_n{}_seed{}_{stamp}", cfg.kind.name(), cfg.n, cfg.seed)
}

/// Paths produced by [`emit_results`].
#[derive(Debug, Clone)]
pub struct EmittedPaths {
    pub jsonl: PathBuf,
    pub csv: PathBuf,
    pub outcomes: Option<PathBuf>,
}

/// Writes the records under `dir` with the given file stem.
pub fn emit_results(records: &[ResultRecord], dir: &Path, stem: &str) -> Result<EmittedPaths> {
    std::fs::create_dir_all(dir)?;

    let jsonl_path = dir.join(format!("{stem}.jsonl"));
    let mut jsonl = std::io::BufWriter::new(std::fs::File::create(&jsonl_path)?);
    for record in records {
        serde_json::to_writer(&mut jsonl, record)?;
        jsonl.write_all(b"\n")?;
    }
    jsonl.flush()?;

    let csv_path = dir.join(format!("{stem}.csv"));
    let rows: Vec<&StatRow> = {
        let per_replica: Vec<&StatRow> = records
            .iter()
            .flat_map(|r| r.rows.iter())
            .filter(|row| row.replica.is_some())
            .collect();
        if per_replica.is_empty() {
            records.iter().flat_map(|r| r.rows.iter()).collect()
        } else {
            per_replica
        }
    };
    let mut csv = csv::Writer::from_path(&csv_path)?;
    for row in &rows {
        csv.serialize(row)?;
    }
    // Header-only file for empty runs.
    if rows.is_empty() {
        csv.write_record([
            "experiment", "n", "t", "replica", "stat", "value", "stderr", "ci_low", "ci_high",
            "reference", "seed", "note",
        ])?;
    }
    csv.flush()?;

    let mut outcomes_path = None;
    if records.iter().any(|r| !r.outcomes.is_empty()) {
        let path = dir.join(format!("{stem}.outcomes.jsonl"));
        let mut out = std::io::BufWriter::new(std::fs::File::create(&path)?);
        for record in records {
            for outcome in &record.outcomes {
                serde_json::to_writer(&mut out, outcome)?;
                out.write_all(b"\n")?;
            }
        }
        out.flush()?;
        outcomes_path = Some(path);
    }

    Ok(EmittedPaths { jsonl: jsonl_path, csv: csv_path, outcomes: outcomes_path })
}

/// Reads records back from a JSONL file (used by the determinism checks).
pub fn read_records(path: &Path) -> Result<Vec<ResultRecord>> {
    let text = std::fs::read_to_string(path)?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(Into::into))
        .collect()
}

/// Serializes records to JSONL with volatile fields cleared; two runs of the
/// same seeded config compare equal byte-for-byte.
pub fn deterministic_jsonl(records: &[ResultRecord]) -> Result<String> {
    let mut out = String::new();
    for record in records {
        let mut clone = record.clone();
        clone.strip_volatile();
        out.push_str(&serde_json::to_string(&clone)?);
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{run_experiment, ExperimentKind};

    #[test]
    fn empty_records_emit_valid_files() {
        let dir = tempfile::tempdir().unwrap();
        let paths = emit_results(&[], dir.path(), "empty").unwrap();
        assert_eq!(std::fs::read_to_string(&paths.jsonl).unwrap(), "");
        let csv = std::fs::read_to_string(&paths.csv).unwrap();
        assert!(csv.starts_with("experiment,"), "header-only CSV, got: {csv}");
        assert_eq!(csv.lines().count(), 1);
        assert!(paths.outcomes.is_none());
    }

    #[test]
    fn per_replica_csv_has_one_row_per_replica() {
        let cfg = ExperimentConfig {
            kind: ExperimentKind::SmallVals,
            n: 5,
            replicas: 37,
            threshold: Some(0.5),
            per_replica: true,
            ..Default::default()
        };
        let records = run_experiment(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let paths = emit_results(&records, dir.path(), "per_replica").unwrap();
        let csv = std::fs::read_to_string(&paths.csv).unwrap();
        assert_eq!(csv.lines().count() - 1, 37, "one CSV row per replica plus header");
    }

    #[test]
    fn jsonl_round_trips() {
        let cfg = ExperimentConfig {
            kind: ExperimentKind::Partition,
            n: 4,
            edges: 6,
            replicas: 50,
            ..Default::default()
        };
        let records = run_experiment(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let paths = emit_results(&records, dir.path(), "rt").unwrap();
        let back = read_records(&paths.jsonl).unwrap();
        assert_eq!(back.len(), records.len());
        assert_eq!(back[0].rows, records[0].rows);
    }

    #[test]
    fn deterministic_jsonl_is_reproducible() {
        let cfg = ExperimentConfig {
            kind: ExperimentKind::Coupon,
            n: 6,
            t_grid: vec![10],
            replicas: 200,
            seed: 77,
            ..Default::default()
        };
        let a = deterministic_jsonl(&run_experiment(&cfg).unwrap()).unwrap();
        let b = deterministic_jsonl(&run_experiment(&cfg).unwrap()).unwrap();
        assert_eq!(a, b);
    }
}
