use std::collections::BTreeSet;
use std::io::Write;

use pdm_core::{EssMode, OccupancyMode, SchemeKind, Volume};
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};
use crate::rotation::RotationRow;
use crate::scenario::BenchScenario;
use crate::update::UpdateSection;

/// Leading CSV columns; one `pdm_{n}` column per partition count follows.
pub const CSV_FIXED_COLUMNS: [&str; 6] = ["dataset", "size", "scheme", "computation_type", "tf", "distance_map"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub cpu: String,
    pub threads: usize,
    pub os: String,
    pub arch: String,
    pub build: String,
    pub version: String,
}

impl Environment {
    pub fn capture() -> Self {
        let cpu = std::fs::read_to_string("/proc/cpuinfo")
            .ok()
            .and_then(|s| {
                s.lines()
                    .find(|l| l.starts_with("model name"))
                    .and_then(|l| l.split(':').nth(1))
                    .map(|m| m.trim().to_string())
            })
            .unwrap_or_else(|| "unknown".into());
        Self {
            cpu,
            threads: rayon::current_num_threads(),
            os: std::env::consts::OS.into(),
            arch: std::env::consts::ARCH.into(),
            build: if cfg!(debug_assertions) { "debug" } else { "release" }.into(),
            version: env!("CARGO_PKG_VERSION").into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub dataset: String,
    pub size: [usize; 3],
    pub scheme: SchemeKind,
    pub occupancy: OccupancyMode,
    pub repetitions: usize,
    pub environment: Environment,
    pub update: UpdateSection,
    pub rotation: Vec<RotationRow>,
}

impl BenchReport {
    pub fn new(scenario: &BenchScenario, volume: &Volume, update: UpdateSection, rotation: Vec<RotationRow>) -> Self {
        Self {
            dataset: scenario.volume.label(),
            size: volume.dims(),
            scheme: scenario.scheme,
            occupancy: scenario.occupancy,
            repetitions: scenario.repetitions,
            environment: Environment::capture(),
            update,
            rotation,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Partition counts of the main scheme, ascending.
    fn counts(&self) -> Vec<usize> {
        let set: BTreeSet<usize> = self.update.init.iter().map(|r| r.n).collect();
        set.into_iter().collect()
    }

    pub fn csv_header(&self) -> Vec<String> {
        CSV_FIXED_COLUMNS
            .iter()
            .map(|s| s.to_string())
            .chain(self.counts().iter().map(|n| format!("pdm_{n}")))
            .collect()
    }

    /// Flat table: one-time init and update timings in milliseconds, then
    /// mean evaluated samples per frame for the distance map and each `n`.
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let err = |e: csv::Error| BenchError::Output(e.to_string());
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.csv_header()).map_err(err)?;
        let counts = self.counts();
        let size = format!("{}x{}x{}", self.size[0], self.size[1], self.size[2]);
        let fmt = |v: Option<f64>| v.map_or_else(String::new, |v| format!("{v:.4}"));
        let mut emit = |kind: &str, tf: &str, dist: Option<f64>, per_n: Vec<Option<f64>>| {
            let mut rec = vec![
                self.dataset.clone(),
                size.clone(),
                self.scheme.to_string(),
                kind.to_string(),
                tf.to_string(),
                fmt(dist),
            ];
            rec.extend(per_n.into_iter().map(fmt));
            w.write_record(rec).map_err(err)
        };

        let init = counts
            .iter()
            .map(|n| {
                self.update
                    .init
                    .iter()
                    .find(|r| r.n == *n && r.scheme == self.scheme)
                    .map(|r| r.one_time_init_ms)
            })
            .collect();
        emit("one_time_init_ms", "all", None, init)?;

        for tf in self.tf_names() {
            let rows: Vec<_> = self.update.rows.iter().filter(|r| r.tf == tf && r.scheme == self.scheme).collect();
            let Some(first) = rows.first() else { continue };
            let per_n = counts
                .iter()
                .map(|n| rows.iter().find(|r| r.n == *n).map(|r| r.update_ms_pdm))
                .collect();
            emit("update_ms", &tf, Some(first.update_ms_baseline), per_n)?;
        }

        for tf in self.tf_names() {
            let rows: Vec<_> = self.rotation.iter().filter(|r| r.tf == tf).collect();
            let dist = rows
                .iter()
                .find(|r| r.ess_mode == EssMode::Distance)
                .map(|r| r.mean_samples_evaluated);
            if dist.is_none() {
                continue;
            }
            let per_n = counts
                .iter()
                .map(|n| {
                    rows.iter()
                        .find(|r| r.ess_mode == EssMode::Pdm && r.n == Some(*n) && r.scheme == Some(self.scheme))
                        .map(|r| r.mean_samples_evaluated)
                })
                .collect();
            emit("samples_evaluated_mean", &tf, dist, per_n)?;
        }
        drop(emit);
        w.flush().map_err(|e| BenchError::Output(e.to_string()))
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("in-memory write");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    fn tf_names(&self) -> Vec<String> {
        let mut names: Vec<String> = Vec::new();
        for n in self.update.rows.iter().map(|r| &r.tf).chain(self.rotation.iter().map(|r| &r.tf)) {
            if !names.contains(n) {
                names.push(n.clone());
            }
        }
        names
    }

    /// Update rows where the partitioned update lost to the baseline.
    pub fn slower_rows(&self) -> impl Iterator<Item = &crate::update::UpdateRow> {
        self.update.rows.iter().filter(|r| r.pdm_slower)
    }
}
