//! Random multi-hop topologies, channel gains and spreading sequences.
//!
//! Nodes are dropped uniformly in a square with the access point at its
//! center. Each node forwards to the nearest node that is strictly closer to
//! the access point, or to the access point itself when that is nearest.
//! The access point is receiver index `K` (one past the last node) and never
//! transmits.

use std::path::Path;

use nalgebra::DMatrix;
use rand::distributions::{Distribution, Open01};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{rng_from_seed, SimRng};

/// How the "Rayleigh with mean c·d^-a" channel statement is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GainModel {
    /// Amplitude `h` is Rayleigh with the given mean; `h²` enters the SINR.
    #[default]
    AmplitudeRayleigh,
    /// The power gain `h²` itself is Rayleigh with the given mean.
    PowerRayleigh,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NetworkConfig {
    pub node_count: usize,
    /// Side of the square deployment area in meters.
    pub area_side: f64,
    pub gain_mean_coefficient: f64,
    pub gain_exponent: f64,
    /// Thermal noise power in watts.
    pub noise_power: f64,
    pub seed: u64,
    pub gain_model: GainModel,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            node_count: 100,
            area_side: 500.0,
            gain_mean_coefficient: 0.3,
            gain_exponent: 2.0,
            noise_power: 5e-16,
            seed: 0,
            gain_model: GainModel::AmplitudeRayleigh,
        }
    }
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.node_count == 0 {
            return Err(Error::InvalidConfig("node_count must be at least 1".into()));
        }
        if !(self.area_side > 0.0 && self.area_side.is_finite()) {
            return Err(Error::InvalidConfig("area_side must be positive".into()));
        }
        if !(self.noise_power > 0.0 && self.noise_power.is_finite()) {
            return Err(Error::InvalidConfig("noise_power must be positive".into()));
        }
        if !(self.gain_mean_coefficient > 0.0) || !self.gain_exponent.is_finite() {
            return Err(Error::InvalidConfig(
                "gain_mean_coefficient must be positive and gain_exponent finite".into(),
            ));
        }
        Ok(())
    }

    /// Mean of the Rayleigh variable at distance `d` meters.
    pub fn gain_mean(&self, d: f64) -> f64 {
        self.gain_mean_coefficient * d.powf(-self.gain_exponent)
    }
}

/// Physical scenario: positions, routing and channel amplitudes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub positions: Vec<[f64; 2]>,
    pub access_point: [f64; 2],
    /// `next_hop[k]` is the receiver of node `k`; the value `K` is the access point.
    pub next_hop: Vec<usize>,
    /// `gains[k][m]` is the channel amplitude from node `k` to receiver `m`
    /// (`m` in `0..=K`). The diagonal is unused and stored as zero.
    pub gains: Vec<Vec<f64>>,
    /// Number of times positions were redrawn because two points coincided.
    #[serde(default)]
    pub regenerations: u32,
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

impl Network {
    pub fn node_count(&self) -> usize {
        self.positions.len()
    }

    pub fn access_point_index(&self) -> usize {
        self.positions.len()
    }

    fn location(&self, m: usize) -> [f64; 2] {
        if m == self.access_point_index() {
            self.access_point
        } else {
            self.positions[m]
        }
    }

    pub fn distance(&self, k: usize, m: usize) -> f64 {
        dist(self.location(k), self.location(m))
    }

    pub fn receiver_of(&self, k: usize) -> usize {
        self.next_hop[k]
    }

    /// Power gain `h_k^(m)²`.
    #[inline]
    pub fn power_gain(&self, k: usize, m: usize) -> f64 {
        let h = self.gains[k][m];
        h * h
    }

    /// `h_k^(m(k))²`.
    #[inline]
    pub fn primary_power_gain(&self, k: usize) -> f64 {
        self.power_gain(k, self.next_hop[k])
    }

    /// Distinct receivers in ascending index order.
    pub fn receivers(&self) -> Vec<usize> {
        let mut r = self.next_hop.clone();
        r.sort_unstable();
        r.dedup();
        r
    }

    /// Transmitters grouped by receiver, in the order of [`Network::receivers`].
    pub fn receiver_groups(&self) -> Vec<(usize, Vec<usize>)> {
        self.receivers()
            .into_iter()
            .map(|r| {
                let users = (0..self.node_count()).filter(|&k| self.next_hop[k] == r).collect();
                (r, users)
            })
            .collect()
    }

    /// Route from `k` to the access point, `k` first. `None` if the walk
    /// does not reach the access point within `K` hops.
    pub fn route(&self, k: usize) -> Option<Vec<usize>> {
        let ap = self.access_point_index();
        let mut path = vec![k];
        let mut cur = k;
        for _ in 0..self.node_count() {
            let next = *self.next_hop.get(cur)?;
            if next == ap {
                return Some(path);
            }
            if next == cur {
                return None;
            }
            path.push(next);
            cur = next;
        }
        None
    }

    /// Checks the structural invariants: every walk reaches the access point,
    /// nobody routes to itself, gains are present and positive off the diagonal.
    pub fn validate(&self) -> Result<()> {
        let k_count = self.node_count();
        if self.next_hop.len() != k_count || self.gains.len() != k_count {
            return Err(Error::InvalidArgument("network arrays have inconsistent lengths".into()));
        }
        for k in 0..k_count {
            if self.next_hop[k] == k || self.next_hop[k] > k_count {
                return Err(Error::InvalidArgument(format!("node {k} has an invalid next hop")));
            }
            if self.route(k).is_none() {
                return Err(Error::InvalidArgument(format!("route from node {k} does not reach the access point")));
            }
            if self.gains[k].len() != k_count + 1 {
                return Err(Error::InvalidArgument(format!("gain row {k} has wrong length")));
            }
            for (m, &h) in self.gains[k].iter().enumerate() {
                if m != k && !(h > 0.0 && h.is_finite()) {
                    return Err(Error::InvalidArgument(format!("gain ({k}, {m}) is not positive")));
                }
            }
        }
        Ok(())
    }
}

/// Drops nodes and builds the nearest-closer-node routing tree.
///
/// Positions are redrawn if any two points (including the access point)
/// coincide; the count is kept in [`Network::regenerations`]. Gains are left
/// empty; see [`sample_gains`].
pub fn generate_topology(cfg: &NetworkConfig, rng: &mut SimRng) -> Result<Network> {
    cfg.validate()?;
    let k_count = cfg.node_count;
    let center = [cfg.area_side / 2.0, cfg.area_side / 2.0];
    let mut regenerations = 0u32;
    let positions = loop {
        let pts: Vec<[f64; 2]> = (0..k_count)
            .map(|_| [rng.gen::<f64>() * cfg.area_side, rng.gen::<f64>() * cfg.area_side])
            .collect();
        let coincident = pts.iter().enumerate().any(|(i, &a)| {
            dist(a, center) == 0.0 || pts[i + 1..].iter().any(|&b| dist(a, b) == 0.0)
        });
        if !coincident {
            break pts;
        }
        regenerations += 1;
    };

    let next_hop = (0..k_count).map(|k| nearest_closer(&positions, center, k)).collect();

    Ok(Network {
        positions,
        access_point: center,
        next_hop,
        gains: Vec::new(),
        regenerations,
    })
}

/// Next hop of node `k`: the nearest node strictly closer to `center`, or
/// the access point (index `K`) if it is nearer than all of them. Distance
/// ties go to the lowest index.
fn nearest_closer(positions: &[[f64; 2]], center: [f64; 2], k: usize) -> usize {
    let own = dist(positions[k], center);
    let mut best = (own, positions.len());
    for (j, &p) in positions.iter().enumerate() {
        if dist(p, center) < own {
            let d = dist(positions[k], p);
            if d < best.0 || (d == best.0 && j < best.1) {
                best = (d, j);
            }
        }
    }
    best.1
}

/// Draws a Rayleigh variable with the given mean (scale `mean·√(2/π)`).
pub fn sample_rayleigh(mean: f64, rng: &mut SimRng) -> f64 {
    let u: f64 = Open01.sample(rng);
    let scale = mean * (2.0 / std::f64::consts::PI).sqrt();
    scale * (-2.0 * u.ln()).sqrt()
}

/// Fills `net.gains` with independent fades for every transmitter/receiver pair.
pub fn sample_gains(net: &mut Network, cfg: &NetworkConfig, rng: &mut SimRng) -> Result<()> {
    let k_count = net.node_count();
    let mut gains = vec![vec![0.0; k_count + 1]; k_count];
    for (k, row) in gains.iter_mut().enumerate() {
        for (m, slot) in row.iter_mut().enumerate() {
            if m == k {
                continue;
            }
            let d = net.distance(k, m);
            if d == 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "nodes {k} and {m} coincide; regenerate positions"
                )));
            }
            let mean = cfg.gain_mean(d);
            *slot = match cfg.gain_model {
                GainModel::AmplitudeRayleigh => sample_rayleigh(mean, rng),
                GainModel::PowerRayleigh => sample_rayleigh(mean, rng).sqrt(),
            };
        }
    }
    net.gains = gains;
    Ok(())
}

/// Topology plus gains from `cfg.seed`.
pub fn generate_network(cfg: &NetworkConfig) -> Result<Network> {
    let mut rng = rng_from_seed(cfg.seed);
    let mut net = generate_topology(cfg, &mut rng)?;
    sample_gains(&mut net, cfg, &mut rng)?;
    Ok(net)
}

/// Fraction of ordered pairs `(j, k)`, `j != k`, that share a receiver.
pub fn estimate_q(net: &Network) -> Result<f64> {
    let k_count = net.node_count();
    if k_count < 2 {
        return Err(Error::TooFewNodes);
    }
    let mut counts = vec![0usize; k_count + 1];
    for &r in &net.next_hop {
        counts[r] += 1;
    }
    let same: usize = counts.iter().map(|&n| n * n.saturating_sub(1)).sum();
    Ok(same as f64 / (k_count * (k_count - 1)) as f64)
}

/// `K` binary sequences of length `N`, entries `±1/√N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpreadingRecord", into = "SpreadingRecord")]
pub struct SpreadingSet {
    chips: Vec<Vec<i8>>,
    processing_gain: usize,
    /// Columns are the normalized sequences (N x K).
    matrix: DMatrix<f64>,
    rho: DMatrix<f64>,
}

#[derive(Serialize, Deserialize)]
struct SpreadingRecord {
    processing_gain: usize,
    chips: Vec<Vec<i8>>,
}

impl TryFrom<SpreadingRecord> for SpreadingSet {
    type Error = Error;
    fn try_from(r: SpreadingRecord) -> Result<Self> {
        SpreadingSet::from_chips(r.processing_gain, r.chips)
    }
}

impl From<SpreadingSet> for SpreadingRecord {
    fn from(s: SpreadingSet) -> Self {
        SpreadingRecord {
            processing_gain: s.processing_gain,
            chips: s.chips,
        }
    }
}

impl SpreadingSet {
    pub fn generate(users: usize, processing_gain: usize, rng: &mut SimRng) -> Result<Self> {
        if users == 0 || processing_gain == 0 {
            return Err(Error::InvalidArgument("spreading needs K >= 1 and N >= 1".into()));
        }
        let chips = (0..users)
            .map(|_| {
                (0..processing_gain)
                    .map(|_| if rng.gen::<bool>() { 1i8 } else { -1i8 })
                    .collect()
            })
            .collect();
        Self::from_chips(processing_gain, chips)
    }

    pub fn from_chips(processing_gain: usize, chips: Vec<Vec<i8>>) -> Result<Self> {
        if processing_gain == 0 || chips.is_empty() {
            return Err(Error::InvalidArgument("empty spreading set".into()));
        }
        if chips
            .iter()
            .any(|c| c.len() != processing_gain || c.iter().any(|&v| v != 1 && v != -1))
        {
            return Err(Error::InvalidArgument("chips must be +-1 with length N".into()));
        }
        let users = chips.len();
        let amp = 1.0 / (processing_gain as f64).sqrt();
        let matrix = DMatrix::from_fn(processing_gain, users, |i, k| chips[k][i] as f64 * amp);
        // Integer dot products keep rho_kk exactly 1.
        let n = processing_gain as f64;
        let rho = DMatrix::from_fn(users, users, |k, j| {
            let dot: i64 = chips[k]
                .iter()
                .zip(&chips[j])
                .map(|(&a, &b)| (a as i64) * (b as i64))
                .sum();
            dot as f64 / n
        });
        Ok(Self {
            chips,
            processing_gain,
            matrix,
            rho,
        })
    }

    pub fn processing_gain(&self) -> usize {
        self.processing_gain
    }

    pub fn user_count(&self) -> usize {
        self.chips.len()
    }

    pub fn chips(&self) -> &[Vec<i8>] {
        &self.chips
    }

    /// N x K matrix `S` of normalized sequences.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn sequence(&self, k: usize) -> nalgebra::DVectorView<'_, f64> {
        self.matrix.column(k)
    }

    /// Cross-correlations `rho_kj = s_k^T s_j`.
    pub fn rho(&self) -> &DMatrix<f64> {
        &self.rho
    }
}

/// A network together with the spreading codes used on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub config: NetworkConfig,
    #[serde(flatten)]
    pub network: Network,
    pub sequences: SpreadingSet,
}

impl Scenario {
    /// Network from `config.seed`, sequences from `spreading_seed`.
    pub fn generate(config: &NetworkConfig, processing_gain: usize, spreading_seed: u64) -> Result<Self> {
        let network = generate_network(config)?;
        let mut rng = rng_from_seed(spreading_seed);
        let sequences = SpreadingSet::generate(config.node_count, processing_gain, &mut rng)?;
        Self::new(config.clone(), network, sequences)
    }

    pub fn new(config: NetworkConfig, network: Network, sequences: SpreadingSet) -> Result<Self> {
        if network.node_count() != sequences.user_count() {
            return Err(Error::InvalidArgument(format!(
                "network has {} nodes but {} sequences",
                network.node_count(),
                sequences.user_count()
            )));
        }
        config.validate()?;
        network.validate()?;
        Ok(Self {
            config,
            network,
            sequences,
        })
    }

    pub fn node_count(&self) -> usize {
        self.network.node_count()
    }

    pub fn processing_gain(&self) -> usize {
        self.sequences.processing_gain()
    }

    pub fn noise_power(&self) -> f64 {
        self.config.noise_power
    }

    /// Load `K/N`.
    pub fn load(&self) -> f64 {
        self.node_count() as f64 / self.processing_gain() as f64
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let sc: Scenario = serde_json::from_str(s)?;
        Self::new(sc.config, sc.network, sc.sequences)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load_file(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&s)
    }
}
