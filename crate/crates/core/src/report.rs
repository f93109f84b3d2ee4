//! Batch execution and CSV output.
//!
//! Files written under the output directory:
//!
//! - `runs/<protocol>_<scenario>_seed<S>[_<axis><V>].csv`: per-round metrics
//! - `traces/...csv`: per-packet outcomes when tracing is on
//! - `summary.csv`: one row per run
//! - `comparison.csv`: mean and standard deviation over seeds
//! - `plots/*.csv`: seed-averaged series for plotting
//!
//! Lifetime milestones that never happened within a run are censored at
//! `rounds + 1` when averaged.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::ExperimentSpec;
use crate::protocols::ProtocolKind;
use crate::sim::{run_simulation, RoundMetrics, SimConfig, SimError, SimResult, TraceRow};

pub const ROUNDS_HEADER: &str = "round,sent,delivered,dropped,energy_j,alive,mean_hops,mean_path_m";
pub const SUMMARY_HEADER: &str =
    "protocol,scenario,seed,ttl,rho,success_ratio,fnd,hnd,lnd,total_energy_j";
pub const TRACE_HEADER: &str = "round,source,status,hops,path_length_m,energy_j";

#[derive(Debug, Error)]
pub enum ReportError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("writing {path}: {source} ({} files completed)", completed.len())]
    Io {
        path: PathBuf,
        completed: Vec<PathBuf>,
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// One finished simulation with the coordinates that produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub protocol: ProtocolKind,
    pub scenario: String,
    pub seed: u64,
    pub sweep_value: Option<f64>,
    pub config: SimConfig,
    pub result: SimResult,
}

impl RunRecord {
    pub fn file_stem(&self, axis: &str) -> String {
        let mut stem = format!("{}_{}_seed{}", self.protocol, self.scenario, self.seed);
        if let Some(v) = self.sweep_value {
            stem.push_str(&format!("_{axis}{v}"));
        }
        stem
    }

    pub fn summary_row(&self) -> SummaryRow {
        SummaryRow {
            protocol: self.protocol.name().to_string(),
            scenario: self.scenario.clone(),
            seed: self.seed,
            ttl: self.config.ttl,
            rho: self.config.aco.rho,
            success_ratio: self.result.success_ratio,
            fnd: self.result.fnd_round,
            hnd: self.result.hnd_round,
            lnd: self.result.lnd_round,
            total_energy_j: self.result.total_energy,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub protocol: String,
    pub scenario: String,
    pub seed: u64,
    pub ttl: u32,
    pub rho: f64,
    pub success_ratio: f64,
    pub fnd: Option<u32>,
    pub hnd: Option<u32>,
    pub lnd: Option<u32>,
    pub total_energy_j: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    /// Sample standard deviation; zero for a single value.
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        if values.is_empty() {
            return Self {
                mean: f64::NAN,
                std: f64::NAN,
            };
        }
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        Self { mean, std }
    }
}

/// Seed-averaged metrics for one (protocol, scenario, sweep point).
#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonRow {
    pub protocol: String,
    pub scenario: String,
    pub sweep_value: Option<f64>,
    pub runs: usize,
    pub success_ratio: MeanStd,
    pub total_energy: MeanStd,
    pub fnd: MeanStd,
    pub hnd: MeanStd,
    pub lnd: MeanStd,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonReport {
    pub sweep_axis: &'static str,
    pub rows: Vec<ComparisonRow>,
    pub summary: Vec<SummaryRow>,
    pub files: Vec<PathBuf>,
}

impl ComparisonReport {
    pub fn row(&self, protocol: ProtocolKind, sweep_value: Option<f64>) -> Option<&ComparisonRow> {
        self.rows
            .iter()
            .find(|r| r.protocol == protocol.name() && r.sweep_value == sweep_value)
    }
}

pub fn censored(milestone: Option<u32>, rounds: u32) -> f64 {
    f64::from(milestone.unwrap_or(rounds + 1))
}

/// Groups summary rows by protocol, scenario and sweep point (read from the
/// `axis` column) and averages them. `rounds` sets the censoring horizon.
pub fn aggregate(summary: &[SummaryRow], axis: &str, rounds: u32) -> Vec<ComparisonRow> {
    let mut groups: BTreeMap<(String, String, Option<u64>), Vec<&SummaryRow>> = BTreeMap::new();
    let point = |r: &SummaryRow| match axis {
        "ttl" => Some(f64::from(r.ttl)),
        "rho" => Some(r.rho),
        _ => None,
    };
    let mut order = Vec::new();
    for r in summary {
        let key = (
            r.protocol.clone(),
            r.scenario.clone(),
            point(r).map(f64::to_bits),
        );
        if !groups.contains_key(&key) {
            order.push(key.clone());
        }
        groups.entry(key).or_default().push(r);
    }
    order
        .into_iter()
        .map(|key| {
            let rows = &groups[&key];
            let col = |f: &dyn Fn(&SummaryRow) -> f64| -> MeanStd {
                MeanStd::of(&rows.iter().map(|r| f(r)).collect::<Vec<_>>())
            };
            ComparisonRow {
                protocol: key.0.clone(),
                scenario: key.1.clone(),
                sweep_value: key.2.map(f64::from_bits),
                runs: rows.len(),
                success_ratio: col(&|r| r.success_ratio),
                total_energy: col(&|r| r.total_energy_j),
                fnd: col(&|r| censored(r.fnd, rounds)),
                hnd: col(&|r| censored(r.hnd, rounds)),
                lnd: col(&|r| censored(r.lnd, rounds)),
            }
        })
        .collect()
}

/// Runs every (protocol, sweep point, seed) combination. Results come back
/// in that nesting order whatever the scheduling.
pub fn execute(spec: &ExperimentSpec) -> Result<Vec<RunRecord>, SimError> {
    let mut jobs = Vec::with_capacity(spec.run_count());
    for &protocol in &spec.protocols {
        for point in spec.sweep.points() {
            for &seed in &spec.seeds {
                let mut config = spec.sweep.apply(&spec.base, point);
                config.protocol = protocol;
                config.seed = seed;
                config.scenario.seed = seed;
                jobs.push((protocol, point, seed, config));
            }
        }
    }

    let run = |(protocol, point, seed, config): (ProtocolKind, Option<f64>, u64, SimConfig)| {
        run_simulation(&config).map(|result| RunRecord {
            protocol,
            scenario: spec.scenario_name.clone(),
            seed,
            sweep_value: point,
            config,
            result,
        })
    };

    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        jobs.into_par_iter().map(run).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        jobs.into_iter().map(run).collect()
    }
}

/// Runs the whole experiment and writes every output file.
pub fn run_experiments(spec: &ExperimentSpec) -> Result<ComparisonReport, ReportError> {
    spec.validate()
        .map_err(|e| SimError::InvalidConfig(e.to_string()))?;
    let records = execute(spec)?;
    let summary: Vec<SummaryRow> = records.iter().map(RunRecord::summary_row).collect();
    let axis = spec.sweep.axis();
    let rows = aggregate(&summary, axis, spec.base.rounds);

    let mut out = OutputDir::new(&spec.out_dir);
    for r in &records {
        let stem = r.file_stem(axis);
        out.write(&format!("runs/{stem}.csv"), |w| {
            write_rounds_csv(w, &r.result.rounds)
        })?;
        if spec.base.trace {
            out.write(&format!("traces/{stem}.csv"), |w| {
                write_trace_csv(w, &r.result.trace)
            })?;
        }
    }
    out.write("summary.csv", |w| write_summary_csv(w, &summary))?;
    out.write("comparison.csv", |w| write_comparison_csv(w, axis, &rows))?;
    out.write("plots/success_vs_round.csv", |w| {
        write_round_series(
            w,
            &records,
            |m| {
                if m.sent == 0 {
                    0.0
                } else {
                    f64::from(m.delivered) / f64::from(m.sent)
                }
            },
            false,
        )
    })?;
    out.write("plots/cumulative_energy_vs_round.csv", |w| {
        write_round_series(w, &records, |m| m.energy_consumed, true)
    })?;
    out.write("plots/alive_vs_round.csv", |w| {
        write_round_series(w, &records, |m| f64::from(m.alive_nodes), false)
    })?;
    out.write("plots/success_vs_ttl.csv", |w| {
        write_success_vs_ttl(w, &summary)
    })?;

    Ok(ComparisonReport {
        sweep_axis: axis,
        rows,
        summary,
        files: out.completed,
    })
}

struct OutputDir {
    root: PathBuf,
    completed: Vec<PathBuf>,
}

impl OutputDir {
    fn new(root: &Path) -> Self {
        Self {
            root: root.to_path_buf(),
            completed: Vec::new(),
        }
    }

    fn write(
        &mut self,
        rel: &str,
        body: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>,
    ) -> Result<(), ReportError> {
        let path = self.root.join(rel);
        let mut buf = Vec::new();
        let result = body(&mut buf).and_then(|_| {
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent)?;
            }
            fs::write(&path, &buf)
        });
        match result {
            Ok(()) => {
                self.completed.push(path);
                Ok(())
            }
            Err(source) => Err(ReportError::Io {
                path,
                completed: std::mem::take(&mut self.completed),
                source,
            }),
        }
    }
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().has_headers(false).from_writer(w)
}

fn flush<W: Write>(mut wtr: csv::Writer<W>) -> std::io::Result<()> {
    wtr.flush()
}

fn io(e: csv::Error) -> std::io::Error {
    std::io::Error::other(e)
}

pub fn write_rounds_csv<W: Write>(mut w: W, rounds: &[RoundMetrics]) -> std::io::Result<()> {
    writeln!(w, "{ROUNDS_HEADER}")?;
    let mut wtr = csv_writer(w);
    for m in rounds {
        wtr.serialize(m).map_err(io)?;
    }
    flush(wtr)
}

pub fn write_trace_csv<W: Write>(mut w: W, trace: &[TraceRow]) -> std::io::Result<()> {
    writeln!(w, "{TRACE_HEADER}")?;
    let mut wtr = csv_writer(w);
    for t in trace {
        wtr.serialize(t).map_err(io)?;
    }
    flush(wtr)
}

pub fn write_summary_csv<W: Write>(mut w: W, rows: &[SummaryRow]) -> std::io::Result<()> {
    writeln!(w, "{SUMMARY_HEADER}")?;
    let mut wtr = csv_writer(w);
    for r in rows {
        wtr.serialize(r).map_err(io)?;
    }
    flush(wtr)
}

pub fn read_summary_csv(path: impl AsRef<Path>) -> Result<Vec<SummaryRow>, csv::Error> {
    csv::Reader::from_path(path)?.deserialize().collect()
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_comparison_csv<W: Write>(
    mut w: W,
    axis: &str,
    rows: &[ComparisonRow],
) -> std::io::Result<()> {
    writeln!(
        w,
        "protocol,scenario,sweep_axis,sweep_value,runs,success_mean,success_std,energy_mean_j,energy_std_j,fnd_mean,fnd_std,hnd_mean,hnd_std,lnd_mean,lnd_std"
    )?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.protocol,
            r.scenario,
            axis,
            opt(r.sweep_value),
            r.runs,
            r.success_ratio.mean,
            r.success_ratio.std,
            r.total_energy.mean,
            r.total_energy.std,
            r.fnd.mean,
            r.fnd.std,
            r.hnd.mean,
            r.hnd.std,
            r.lnd.mean,
            r.lnd.std
        )?;
    }
    Ok(())
}

/// Per-round series averaged over seeds, one block per protocol and sweep point.
fn write_round_series<W: Write>(
    mut w: W,
    records: &[RunRecord],
    metric: impl Fn(&RoundMetrics) -> f64,
    cumulative: bool,
) -> std::io::Result<()> {
    writeln!(w, "protocol,sweep_value,round,runs,mean,std")?;
    type Key = (ProtocolKind, Option<u64>);
    let mut groups: Vec<(Key, Vec<Vec<f64>>)> = Vec::new();
    for r in records {
        let key = (r.protocol, r.sweep_value.map(f64::to_bits));
        let mut acc = 0.0;
        let series: Vec<f64> = r
            .result
            .rounds
            .iter()
            .map(|m| {
                if cumulative {
                    acc += metric(m);
                    acc
                } else {
                    metric(m)
                }
            })
            .collect();
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push(series),
            None => groups.push((key, vec![series])),
        }
    }
    for ((protocol, point), runs) in groups {
        let len = runs.iter().map(Vec::len).max().unwrap_or(0);
        for i in 0..len {
            let vals: Vec<f64> = runs.iter().filter_map(|s| s.get(i).copied()).collect();
            let ms = MeanStd::of(&vals);
            writeln!(
                w,
                "{},{},{},{},{},{}",
                protocol,
                opt(point.map(f64::from_bits)),
                i + 1,
                vals.len(),
                ms.mean,
                ms.std
            )?;
        }
    }
    Ok(())
}

fn write_success_vs_ttl<W: Write>(mut w: W, summary: &[SummaryRow]) -> std::io::Result<()> {
    writeln!(w, "protocol,ttl,runs,success_mean,success_std")?;
    let mut groups: BTreeMap<(String, u32), Vec<f64>> = BTreeMap::new();
    for r in summary {
        groups
            .entry((r.protocol.clone(), r.ttl))
            .or_default()
            .push(r.success_ratio);
    }
    for ((protocol, ttl), vals) in groups {
        let ms = MeanStd::of(&vals);
        writeln!(w, "{protocol},{ttl},{},{},{}", vals.len(), ms.mean, ms.std)?;
    }
    Ok(())
}
