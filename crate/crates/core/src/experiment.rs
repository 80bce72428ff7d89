//! Batch experiments over repetitions, processing gains, receivers and modes.
//!
//! Repetition `r` uses a network seeded by `derive_seed(master, [NETWORK, r])`;
//! its spreading codes for processing gain `N` come from
//! `derive_seed(network_seed, [SPREADING, N])`. The row's `seed` column is the
//! network seed, which is enough to rebuild the scenario.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{nash_solve, GameConfig};
use crate::network::{NetworkConfig, Scenario};
use crate::receivers::ReceiverKind;
use crate::rng::{derive_seed, TAG_NETWORK, TAG_SPREADING};
use crate::social::{realize, social_optimum, WeightVector};

pub const CSV_HEADER: &str = "N,receiver,mode,mean_utility,target_sinr,capped_fraction,converged,seed";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Mode {
    #[serde(rename = "nc")]
    Noncooperative,
    #[serde(rename = "so")]
    SocialOptimum,
}

impl Mode {
    pub const ALL: [Mode; 2] = [Mode::Noncooperative, Mode::SocialOptimum];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Noncooperative => "nc",
            Mode::SocialOptimum => "so",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "nc" | "noncooperative" | "non-cooperative" => Ok(Mode::Noncooperative),
            "so" | "social" | "social-optimum" | "social_optimum" => Ok(Mode::SocialOptimum),
            other => Err(Error::InvalidArgument(format!("unknown mode {other:?} (expected nc or so)"))),
        }
    }
}

/// Outcome of one cell, written to the `converged` column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    True,
    False,
    Infeasible,
    Inapplicable,
    Failed,
}

impl RunStatus {
    /// A utility was produced.
    pub fn completed(self) -> bool {
        matches!(self, RunStatus::True | RunStatus::False)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentSpec {
    pub network: NetworkConfig,
    pub game: GameConfig,
    pub receivers: Vec<ReceiverKind>,
    pub processing_gains: Vec<usize>,
    pub modes: Vec<Mode>,
    pub repetitions: usize,
    pub master_seed: u64,
    /// Social-optimum weights; uniform when absent.
    pub weights: Option<Vec<f64>>,
    pub out_dir: Option<PathBuf>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            network: NetworkConfig::default(),
            game: GameConfig::default(),
            receivers: ReceiverKind::ALL.to_vec(),
            processing_gains: vec![50, 100, 200, 300],
            modes: Mode::ALL.to_vec(),
            repetitions: 10,
            master_seed: 0,
            weights: None,
            out_dir: None,
        }
    }
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        self.network.validate()?;
        self.game.validate()?;
        if self.repetitions == 0 {
            return Err(Error::InvalidConfig("repetitions must be >= 1".into()));
        }
        if self.receivers.is_empty() || self.modes.is_empty() {
            return Err(Error::InvalidConfig("need at least one receiver and one mode".into()));
        }
        if self.processing_gains.is_empty() || self.processing_gains.contains(&0) {
            return Err(Error::InvalidConfig("processing gains must be a nonempty list of positive values".into()));
        }
        if let Some(w) = &self.weights {
            if w.len() != self.network.node_count {
                return Err(Error::InvalidConfig(format!(
                    "{} weights for {} nodes",
                    w.len(),
                    self.network.node_count
                )));
            }
            WeightVector::new(w.clone())?;
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(s)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&s)
    }

    pub fn network_seed(&self, repetition: usize) -> u64 {
        derive_seed(self.master_seed, &[TAG_NETWORK, repetition as u64])
    }

    fn weight_vector(&self) -> Result<WeightVector> {
        match &self.weights {
            Some(w) => WeightVector::new(w.clone()),
            None => Ok(WeightVector::uniform(self.network.node_count)),
        }
    }
}

/// Scenario used by a row with the given network seed.
pub fn scenario_for(network: &NetworkConfig, network_seed: u64, processing_gain: usize) -> Result<Scenario> {
    let cfg = NetworkConfig {
        seed: network_seed,
        ..network.clone()
    };
    let spreading_seed = derive_seed(network_seed, &[TAG_SPREADING, processing_gain as u64]);
    Scenario::generate(&cfg, processing_gain, spreading_seed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    #[serde(rename = "N")]
    pub processing_gain: usize,
    pub receiver: ReceiverKind,
    pub mode: Mode,
    /// Bits per joule; zero for rows without an outcome.
    pub mean_utility: f64,
    /// Game target for `nc`, balanced SINR for `so`; empty without an outcome.
    pub target_sinr: Option<f64>,
    pub capped_fraction: Option<f64>,
    pub converged: RunStatus,
    pub seed: u64,
}

impl ResultRow {
    fn empty(n: usize, receiver: ReceiverKind, mode: Mode, status: RunStatus, seed: u64) -> Self {
        Self {
            processing_gain: n,
            receiver,
            mode,
            mean_utility: 0.0,
            target_sinr: None,
            capped_fraction: None,
            converged: status,
            seed,
        }
    }
}

fn run_cell(
    sc: &Scenario,
    receiver: ReceiverKind,
    mode: Mode,
    game: &GameConfig,
    weights: &WeightVector,
    seed: u64,
) -> ResultRow {
    let n = sc.processing_gain();
    if !receiver.applicable(sc.node_count(), n) {
        return ResultRow::empty(n, receiver, mode, RunStatus::Inapplicable, seed);
    }
    let cfg = GameConfig {
        receiver,
        ..game.clone()
    };
    let result = match mode {
        Mode::Noncooperative => nash_solve(sc, &cfg).map(|out| ResultRow {
            processing_gain: n,
            receiver,
            mode,
            mean_utility: out.mean_utility(),
            target_sinr: Some(out.target_sinr),
            capped_fraction: Some(out.capped_fraction()),
            converged: if out.converged { RunStatus::True } else { RunStatus::False },
            seed,
        }),
        Mode::SocialOptimum => social_optimum(receiver, weights, sc, &cfg).and_then(|sol| {
            if !sol.feasible {
                log::info!(
                    "{receiver} social optimum infeasible at N = {n}, seed {seed}: {}",
                    sol.diagnostic.as_deref().unwrap_or("")
                );
                return Ok(ResultRow::empty(n, receiver, mode, RunStatus::Infeasible, seed));
            }
            let op = realize(&sol, sc, &cfg)?;
            Ok(ResultRow {
                processing_gain: n,
                receiver,
                mode,
                mean_utility: op.mean_utility(),
                target_sinr: Some(op.target_sinr),
                capped_fraction: Some(op.capped_fraction()),
                converged: RunStatus::True,
                seed,
            })
        }),
    };
    result.unwrap_or_else(|e| {
        log::warn!("{receiver}/{mode} at N = {n}, seed {seed} failed: {e}");
        ResultRow::empty(n, receiver, mode, RunStatus::Failed, seed)
    })
}

/// Runs every (repetition, N, receiver, mode) cell; rows come back in that order.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<ResultRow>> {
    spec.validate()?;
    let weights = spec.weight_vector()?;
    let jobs: Vec<(usize, usize)> = (0..spec.repetitions)
        .flat_map(|r| spec.processing_gains.iter().map(move |&n| (r, n)))
        .collect();
    let blocks: Vec<Vec<ResultRow>> = jobs
        .par_iter()
        .map(|&(r, n)| {
            let seed = spec.network_seed(r);
            let sc = match scenario_for(&spec.network, seed, n) {
                Ok(sc) => sc,
                Err(e) => {
                    log::warn!("scenario for repetition {r}, N = {n} failed: {e}");
                    return spec
                        .receivers
                        .iter()
                        .flat_map(|&rx| spec.modes.iter().map(move |&m| (rx, m)))
                        .map(|(rx, m)| ResultRow::empty(n, rx, m, RunStatus::Failed, seed))
                        .collect();
                }
            };
            spec.receivers
                .iter()
                .flat_map(|&rx| spec.modes.iter().map(move |&m| (rx, m)))
                .map(|(rx, m)| run_cell(&sc, rx, m, &spec.game, &weights, seed))
                .collect()
        })
        .collect();
    Ok(blocks.into_iter().flatten().collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellStats {
    pub mean: f64,
    /// Sample standard deviation; zero for a single value.
    pub std: f64,
    pub count: usize,
    /// Rows in the cell, including those without an outcome.
    pub rows: usize,
}

impl CellStats {
    fn from_values(values: &[f64], rows: usize) -> Self {
        let count = values.len();
        if count == 0 {
            return Self {
                mean: f64::NAN,
                std: f64::NAN,
                count,
                rows,
            };
        }
        let mean = values.iter().sum::<f64>() / count as f64;
        let std = if count > 1 {
            (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (count - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, std, count, rows }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilityCell {
    pub receiver: ReceiverKind,
    #[serde(rename = "N")]
    pub processing_gain: usize,
    pub mode: Mode,
    pub utility: CellStats,
    pub capped_fraction: CellStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SinrCell {
    pub receiver: ReceiverKind,
    #[serde(rename = "N")]
    pub processing_gain: usize,
    pub target_sinr: CellStats,
}

/// Utility table (receiver × N × mode) and social-optimum SINR table (receiver × N).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub utilities: Vec<UtilityCell>,
    pub sinrs: Vec<SinrCell>,
}

pub fn summarize(rows: &[ResultRow]) -> Result<Summary> {
    if rows.is_empty() {
        return Err(Error::InvalidArgument("no result rows to summarize".into()));
    }
    let mut groups: BTreeMap<(ReceiverKind, usize, Mode), Vec<&ResultRow>> = BTreeMap::new();
    for r in rows {
        groups.entry((r.receiver, r.processing_gain, r.mode)).or_default().push(r);
    }
    let mut utilities = Vec::new();
    let mut sinrs = Vec::new();
    for ((receiver, n, mode), group) in &groups {
        let done: Vec<&&ResultRow> = group.iter().filter(|r| r.converged.completed()).collect();
        let u: Vec<f64> = done.iter().map(|r| r.mean_utility).collect();
        let c: Vec<f64> = done.iter().filter_map(|r| r.capped_fraction).collect();
        utilities.push(UtilityCell {
            receiver: *receiver,
            processing_gain: *n,
            mode: *mode,
            utility: CellStats::from_values(&u, group.len()),
            capped_fraction: CellStats::from_values(&c, group.len()),
        });
        if *mode == Mode::SocialOptimum {
            let g: Vec<f64> = done.iter().filter_map(|r| r.target_sinr).collect();
            sinrs.push(SinrCell {
                receiver: *receiver,
                processing_gain: *n,
                target_sinr: CellStats::from_values(&g, group.len()),
            });
        }
    }
    Ok(Summary { utilities, sinrs })
}

impl Summary {
    fn gains(&self) -> Vec<usize> {
        let mut g: Vec<usize> = self.utilities.iter().map(|c| c.processing_gain).collect();
        g.sort_unstable();
        g.dedup();
        g
    }

    fn receivers(&self) -> Vec<ReceiverKind> {
        let mut r: Vec<ReceiverKind> = self.utilities.iter().map(|c| c.receiver).collect();
        r.sort();
        r.dedup();
        r
    }

    pub fn utility(&self, receiver: ReceiverKind, n: usize, mode: Mode) -> Option<&CellStats> {
        self.utilities
            .iter()
            .find(|c| c.receiver == receiver && c.processing_gain == n && c.mode == mode)
            .map(|c| &c.utility)
    }

    pub fn sinr(&self, receiver: ReceiverKind, n: usize) -> Option<&CellStats> {
        self.sinrs
            .iter()
            .find(|c| c.receiver == receiver && c.processing_gain == n)
            .map(|c| &c.target_sinr)
    }

    /// Plain-text rendering of both tables.
    pub fn render(&self) -> String {
        let gains = self.gains();
        let mut out = String::from("mean utility (bits/J), mean ± std over repetitions\n");
        let _ = write!(out, "{:<10}", "");
        for n in &gains {
            let _ = write!(out, "{:>26}", format!("N = {n}"));
        }
        out.push('\n');
        for rx in self.receivers() {
            for mode in Mode::ALL {
                let label = format!("{rx} {mode}");
                let mut line = format!("{label:<10}");
                let mut any = false;
                for &n in &gains {
                    let cell = match self.utility(rx, n, mode) {
                        Some(s) if s.count > 0 => {
                            any = true;
                            format!("{:.3e} ± {:.1e}", s.mean, s.std)
                        }
                        Some(_) => {
                            any = true;
                            "-".to_string()
                        }
                        None => String::new(),
                    };
                    let _ = write!(line, "{cell:>26}");
                }
                if any {
                    out.push_str(&line);
                    out.push('\n');
                }
            }
        }
        if !self.sinrs.is_empty() {
            out.push_str("\nsocially optimal SINR\n");
            let _ = write!(out, "{:<10}", "");
            for n in &gains {
                let _ = write!(out, "{:>18}", format!("N = {n}"));
            }
            out.push('\n');
            for rx in self.receivers() {
                let mut line = format!("{:<10}", rx.as_str());
                for &n in &gains {
                    let cell = match self.sinr(rx, n) {
                        Some(s) if s.count > 0 => format!("{:.3} ± {:.2}", s.mean, s.std),
                        Some(_) => "-".to_string(),
                        None => String::new(),
                    };
                    let _ = write!(line, "{cell:>18}");
                }
                out.push_str(&line);
                out.push('\n');
            }
        }
        out
    }

    /// Gnuplot data: one block per receiver, columns `N nc_mean nc_std so_mean so_std`,
    /// blocks separated by two blank lines for `index`.
    pub fn plot_data(&self) -> String {
        let mut out = String::new();
        for (i, rx) in self.receivers().into_iter().enumerate() {
            if i > 0 {
                out.push_str("\n\n");
            }
            let _ = writeln!(out, "# receiver {rx}");
            out.push_str("# N nc_mean nc_std so_mean so_std\n");
            for n in self.gains() {
                let pick = |m| self.utility(rx, n, m).filter(|s| s.count > 0).map(|s| (s.mean, s.std));
                let fmt = |v: Option<(f64, f64)>| match v {
                    Some((m, s)) => format!("{m:e} {s:e}"),
                    None => "NaN NaN".to_string(),
                };
                let _ = writeln!(
                    out,
                    "{n} {} {}",
                    fmt(pick(Mode::Noncooperative)),
                    fmt(pick(Mode::SocialOptimum))
                );
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::InvalidArgument(format!("unknown format {other:?} (expected csv or json)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub git_hash: Option<String>,
    pub master_seed: u64,
    pub timestamp_unix: u64,
    pub crate_version: String,
}

impl Provenance {
    pub fn capture(spec: &ExperimentSpec) -> Self {
        let git_hash = std::process::Command::new("git")
            .args(["rev-parse", "HEAD"])
            .output()
            .ok()
            .filter(|o| o.status.success())
            .and_then(|o| String::from_utf8(o.stdout).ok())
            .map(|s| s.trim().to_string());
        let timestamp_unix = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Self {
            git_hash,
            master_seed: spec.master_seed,
            timestamp_unix,
            crate_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultDocument {
    pub spec: ExperimentSpec,
    pub provenance: Provenance,
    pub rows: Vec<ResultRow>,
}

pub fn write_csv(rows: &[ResultRow], path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<Vec<ResultRow>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::Reader::from_reader(file);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header.join(",") != CSV_HEADER {
        return Err(Error::InvalidArgument(format!(
            "{}: unexpected header {:?}",
            path.display(),
            header.join(",")
        )));
    }
    Ok(r.deserialize().collect::<std::result::Result<Vec<ResultRow>, _>>()?)
}

/// Rows from a CSV or JSON result file, chosen by extension.
pub fn load_rows(path: &Path) -> Result<Vec<ResultRow>> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        let s = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let doc: ResultDocument = serde_json::from_str(&s)?;
        Ok(doc.rows)
    } else {
        read_csv(path)
    }
}

/// Writes `results.csv` or `results.json` plus `utility.dat` into `dir`;
/// returns the written paths.
pub fn emit(rows: &[ResultRow], spec: &ExperimentSpec, format: Format, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    match format {
        Format::Csv => {
            let path = dir.join("results.csv");
            write_csv(rows, &path)?;
            written.push(path);
        }
        Format::Json => {
            let path = dir.join("results.json");
            let doc = ResultDocument {
                spec: spec.clone(),
                provenance: Provenance::capture(spec),
                rows: rows.to_vec(),
            };
            let s = serde_json::to_string_pretty(&doc)?;
            fs::write(&path, s).map_err(|e| Error::io(&path, e))?;
            written.push(path);
        }
    }
    if !rows.is_empty() {
        let path = dir.join("utility.dat");
        fs::write(&path, summarize(rows)?.plot_data()).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec() -> ExperimentSpec {
        ExperimentSpec {
            network: NetworkConfig {
                node_count: 12,
                ..Default::default()
            },
            processing_gains: vec![8, 32],
            repetitions: 2,
            master_seed: 5,
            ..Default::default()
        }
    }

    #[test]
    fn rows_cover_every_cell_in_order() {
        let spec = small_spec();
        let rows = run_experiment(&spec).unwrap();
        assert_eq!(rows.len(), 2 * 2 * 3 * 2);
        assert_eq!(rows[0].processing_gain, 8);
        assert_eq!(rows[0].receiver, ReceiverKind::Mf);
        assert_eq!(rows[0].mode, Mode::Noncooperative);
        for r in rows.iter().filter(|r| r.processing_gain == 8 && r.receiver == ReceiverKind::De) {
            assert_eq!(r.converged, RunStatus::Inapplicable);
        }
        assert!(rows.iter().all(|r| r.mean_utility >= 0.0));
    }

    #[test]
    fn same_seed_same_rows() {
        let spec = small_spec();
        let a = run_experiment(&spec).unwrap();
        let b = run_experiment(&spec).unwrap();
        assert_eq!(format!("{a:?}"), format!("{b:?}"));
    }

    #[test]
    fn more_repetitions_keep_earlier_rows() {
        let spec = small_spec();
        let a = run_experiment(&spec).unwrap();
        let more = ExperimentSpec {
            repetitions: 3,
            ..spec
        };
        let b = run_experiment(&more).unwrap();
        assert_eq!(format!("{:?}", &b[..a.len()]), format!("{a:?}"));
    }

    #[test]
    fn rows_replay_from_their_seed() {
        let spec = small_spec();
        let rows = run_experiment(&spec).unwrap();
        let row = rows
            .iter()
            .find(|r| r.receiver == ReceiverKind::Mmse && r.mode == Mode::Noncooperative && r.processing_gain == 32)
            .unwrap();
        let sc = scenario_for(&spec.network, row.seed, 32).unwrap();
        let out = nash_solve(&sc, &spec.game).unwrap();
        assert_eq!(out.mean_utility(), row.mean_utility);
    }

    #[test]
    fn summary_means_are_arithmetic_means() {
        let spec = small_spec();
        let rows = run_experiment(&spec).unwrap();
        let s = summarize(&rows).unwrap();
        let picked: Vec<f64> = rows
            .iter()
            .filter(|r| r.receiver == ReceiverKind::Mmse && r.mode == Mode::SocialOptimum && r.processing_gain == 32)
            .map(|r| r.mean_utility)
            .collect();
        let cell = s.utility(ReceiverKind::Mmse, 32, Mode::SocialOptimum).unwrap();
        assert_eq!(cell.count, 2);
        assert!((cell.mean - (picked[0] + picked[1]) / 2.0).abs() <= 1e-15 * cell.mean);
        let de = s.sinr(ReceiverKind::De, 32).unwrap();
        assert!((de.mean - 6.4746).abs() < 1e-3 && de.std < 1e-12);
        assert_eq!(s.utility(ReceiverKind::De, 8, Mode::Noncooperative).unwrap().count, 0);
    }

    #[test]
    fn single_row_summary() {
        let row = ResultRow {
            processing_gain: 10,
            receiver: ReceiverKind::Mf,
            mode: Mode::Noncooperative,
            mean_utility: 3.0,
            target_sinr: Some(6.0),
            capped_fraction: Some(0.0),
            converged: RunStatus::True,
            seed: 1,
        };
        let s = summarize(&[row]).unwrap();
        assert_eq!(s.utilities.len(), 1);
        assert!(s.sinrs.is_empty());
        assert_eq!(s.utilities[0].utility.mean, 3.0);
        assert!(summarize(&[]).is_err());
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let spec = small_spec();
        let rows = run_experiment(&spec).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let written = emit(&rows, &spec, Format::Csv, dir.path()).unwrap();
        let text = fs::read_to_string(&written[0]).unwrap();
        assert_eq!(text.lines().next().unwrap(), CSV_HEADER);
        let back = read_csv(&written[0]).unwrap();
        assert_eq!(back.len(), rows.len());
        for (a, b) in rows.iter().zip(&back) {
            assert_eq!(a.mean_utility.to_bits(), b.mean_utility.to_bits());
            assert_eq!(a.target_sinr.map(f64::to_bits), b.target_sinr.map(f64::to_bits));
            assert_eq!(a.capped_fraction.map(f64::to_bits), b.capped_fraction.map(f64::to_bits));
            assert_eq!((a.converged, a.seed, a.mode, a.receiver), (b.converged, b.seed, b.mode, b.receiver));
        }
        let plot = fs::read_to_string(&written[1]).unwrap();
        assert_eq!(plot.matches("# receiver").count(), 3);
    }

    #[test]
    fn json_document_replays_spec() {
        let spec = small_spec();
        let rows = run_experiment(&spec).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let written = emit(&rows, &spec, Format::Json, dir.path()).unwrap();
        let doc: ResultDocument = serde_json::from_str(&fs::read_to_string(&written[0]).unwrap()).unwrap();
        assert_eq!(doc.spec, spec);
        assert_eq!(doc.rows.len(), rows.len());
        assert_eq!(load_rows(&written[0]).unwrap().len(), rows.len());
    }

    #[test]
    fn spec_defaults_and_validation() {
        let spec = ExperimentSpec::from_json("{}").unwrap();
        assert_eq!(spec.network.node_count, 100);
        assert_eq!(spec.processing_gains, vec![50, 100, 200, 300]);
        assert_eq!(spec.repetitions, 10);
        assert!(ExperimentSpec::from_json(r#"{"repetitions": 0}"#).is_err());
        assert!(ExperimentSpec::from_json(r#"{"receivers": []}"#).is_err());
        assert!(ExperimentSpec::from_json(r#"{"modes": ["so"], "receivers": ["mmse"]}"#).is_ok());
        assert!("xx".parse::<Mode>().is_err());
        assert_eq!("so".parse::<Mode>().unwrap(), Mode::SocialOptimum);
    }
}
