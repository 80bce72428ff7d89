//! Large-system behavior of the three receivers under random spreading.
//!
//! As `K, N → ∞` with `K/N = β`, per-node SINRs concentrate on deterministic
//! functions of the node's own received power and the law of the
//! interferers' received powers. Nodes sharing a receiver appear with
//! probability `q`; other interferers reach the receiver through a cross gain
//! `G` while their power is set by their own primary gain `H`.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{Network, Scenario, SpreadingSet};
use crate::rng::{derive_seed, rng_from_seed, SimRng};
use crate::roots::bisect;

/// Default Monte Carlo size for expectations without a closed form.
pub const DEFAULT_SAMPLES: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticParams {
    /// `β = K/N`.
    pub load: f64,
    /// Probability that two distinct nodes share a receiver.
    pub sharing: f64,
    pub noise_power: f64,
}

impl AsymptoticParams {
    pub fn new(load: f64, sharing: f64, noise_power: f64) -> Result<Self> {
        let p = Self {
            load,
            sharing,
            noise_power,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.load >= 0.0 && self.load.is_finite()) {
            return Err(Error::InvalidArgument(format!("load {} must be >= 0", self.load)));
        }
        if !(0.0..=1.0).contains(&self.sharing) {
            return Err(Error::InvalidArgument(format!("sharing {} outside [0, 1]", self.sharing)));
        }
        if !(self.noise_power > 0.0 && self.noise_power.is_finite()) {
            return Err(Error::InvalidArgument("noise power must be positive".into()));
        }
        Ok(())
    }
}

/// Effective interference `I(a, b, c) = ab / (b + ac)`.
///
/// Nondecreasing in `a`, bounded by `min(a, b/c)`.
pub fn effective_interference(a: f64, b: f64, c: f64) -> f64 {
    if a <= 0.0 {
        return 0.0;
    }
    a * b / (b + a * c)
}

/// Matched-filter SINR for own received power `received = p h²`.
///
/// `mean_interferer_power` is `E[p_j h_j²]` with each interferer's primary gain.
pub fn asymptotic_sinr_mf(received: f64, params: &AsymptoticParams, mean_interferer_power: f64) -> f64 {
    received / (params.noise_power + params.load * mean_interferer_power)
}

/// Decorrelator SINR; zero once the load reaches one.
pub fn asymptotic_sinr_de(received: f64, params: &AsymptoticParams) -> f64 {
    if params.load < 1.0 {
        received * (1.0 - params.load) / params.noise_power
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPoint {
    pub gamma: f64,
    pub iterations: usize,
    /// `γ (σ² + w Σ I) - b` at the returned point, relative to `b`.
    pub residual: f64,
}

/// Solves `γ = b / (σ² + Σ_i w_i I(x_i, b, γ))`.
///
/// `γ (σ² + Σ w I)` is increasing in `γ`, so the root is unique and
/// bracketed by `[0, b/σ²]`.
fn interference_fixed_point(received: f64, noise: f64, weighted: &[(f64, f64)]) -> Result<FixedPoint> {
    if received <= 0.0 {
        return Ok(FixedPoint {
            gamma: 0.0,
            iterations: 0,
            residual: 0.0,
        });
    }
    let map = |g: f64| {
        let load: f64 = weighted
            .iter()
            .map(|&(w, x)| w * effective_interference(x, received, g))
            .sum();
        g * (noise + load) - received
    };
    let cap = received / noise;
    if map(cap) <= 0.0 {
        return Ok(FixedPoint {
            gamma: cap,
            iterations: 0,
            residual: 0.0,
        });
    }
    // Grow the bracket from below so the tolerance tracks the root, not b/σ².
    let (mut lo, mut hi) = (0.0, cap.min(1.0));
    while map(hi) <= 0.0 {
        lo = hi;
        hi = (2.0 * hi).min(cap);
    }
    let mut iterations = 0;
    let counted = |g: f64| {
        iterations += 1;
        map(g)
    };
    let b = bisect(counted, lo, hi, 1e-13 * hi, f64::INFINITY, "MMSE fixed point")?;
    let residual = map(b.root) / received;
    if !(residual.abs() <= 1e-8) {
        return Err(Error::NoRoot {
            what: format!("MMSE fixed point stalled after {iterations} evaluations"),
            lo: b.lo,
            hi: b.hi,
        });
    }
    Ok(FixedPoint {
        gamma: b.root,
        iterations,
        residual,
    })
}

/// MMSE large-system SINR.
///
/// `interferers` holds `(weight, received power at the node's receiver)`
/// describing the law of an interferer's received power; weights need not
/// be normalized.
pub fn asymptotic_sinr_mmse(
    received: f64,
    params: &AsymptoticParams,
    interferers: &[(f64, f64)],
) -> Result<FixedPoint> {
    params.validate()?;
    let total: f64 = interferers.iter().map(|&(w, _)| w).sum();
    if interferers.iter().any(|&(w, x)| !(w >= 0.0 && x >= 0.0)) {
        return Err(Error::InvalidArgument("interferer weights and powers must be >= 0".into()));
    }
    let weighted: Vec<(f64, f64)> = if total > 0.0 {
        interferers
            .iter()
            .map(|&(w, x)| (params.load * w / total, x))
            .collect()
    } else {
        Vec::new()
    };
    interference_fixed_point(received, params.noise_power, &weighted)
}

/// Per-node finite-system MMSE approximation on a scenario.
///
/// `γ_k = p_k h_k² / (σ² + (1/N) Σ_j I(p_j g_j, p_k h_k², γ_k))` over the
/// interferers `j` of node `k`, with `g_j` the gain from `j` to `k`'s receiver.
pub fn finite_mmse_sinr_approx(k: usize, powers: &[f64], sc: &Scenario) -> Result<f64> {
    let kk = sc.node_count();
    if powers.len() != kk || k >= kk {
        return Err(Error::InvalidArgument("power vector / node index mismatch".into()));
    }
    let r = sc.network.receiver_of(k);
    let w = 1.0 / sc.processing_gain() as f64;
    let xs: Vec<(f64, f64)> = (0..kk)
        .filter(|&j| j != k && j != r)
        .map(|j| (w, powers[j] * sc.network.power_gain(j, r)))
        .collect();
    let b = powers[k] * sc.network.primary_power_gain(k);
    Ok(interference_fixed_point(b, sc.noise_power(), &xs)?.gamma)
}

/// Law of a power gain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "law")]
pub enum GainLaw {
    PointMass { value: f64 },
    Exponential { mean: f64 },
}

impl GainLaw {
    fn validate(&self) -> Result<()> {
        let v = match *self {
            GainLaw::PointMass { value } => value,
            GainLaw::Exponential { mean } => mean,
        };
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidArgument(format!("gain law {self:?} needs a positive parameter")));
        }
        Ok(())
    }

    /// Inverse CDF at `u ∈ (0, 1)`.
    pub fn quantile(&self, u: f64) -> f64 {
        match *self {
            GainLaw::PointMass { value } => value,
            GainLaw::Exponential { mean } => -mean * (-u).ln_1p(),
        }
    }

    pub fn sample(&self, rng: &mut SimRng) -> f64 {
        match *self {
            GainLaw::PointMass { value } => value,
            GainLaw::Exponential { .. } => self.quantile(rng.gen::<f64>()),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            GainLaw::PointMass { value } => value,
            GainLaw::Exponential { mean } => mean,
        }
    }
}

/// `(ζ, dζ/dγ)` for independent exponential `G` (mean `g`) and `H` (mean `h`).
pub fn zeta_exponential(gamma: f64, g_mean: f64, h_mean: f64) -> (f64, f64) {
    let c = g_mean / h_mean;
    let a = c * gamma;
    if a <= 0.0 {
        return (f64::INFINITY, f64::NEG_INFINITY);
    }
    let e = a - 1.0;
    let (phi, dphi) = if e.abs() < 1e-3 {
        (
            0.5 - e / 3.0 + e * e / 4.0 - e * e * e / 5.0,
            -1.0 / 3.0 + e / 2.0 - 0.6 * e * e + 2.0 * e * e * e / 3.0,
        )
    } else {
        let num = a - 1.0 - a.ln();
        let om = 1.0 - a;
        (
            num / (om * om),
            ((1.0 - 1.0 / a) * om + 2.0 * num) / (om * om * om),
        )
    };
    (c * phi, c * c * dphi)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    /// Zero for closed forms.
    pub std_error: f64,
}

/// Joint description of `(H, G)`: an interferer's primary power gain and
/// its power gain to another node's receiver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum InterferenceProfile {
    /// Independent laws.
    Laws { primary: GainLaw, interferer: GainLaw },
    /// Observed `(h, g)` pairs.
    Sampled { pairs: Vec<(f64, f64)> },
}

impl InterferenceProfile {
    pub fn laws(primary: GainLaw, interferer: GainLaw) -> Result<Self> {
        primary.validate()?;
        interferer.validate()?;
        Ok(Self::Laws { primary, interferer })
    }

    /// Latin-hypercube sample of independent laws, `n` pairs.
    pub fn stratified(primary: GainLaw, interferer: GainLaw, n: usize, seed: u64) -> Result<Self> {
        primary.validate()?;
        interferer.validate()?;
        if n == 0 {
            return Err(Error::InvalidArgument("need at least one sample".into()));
        }
        let mut rng = rng_from_seed(seed);
        let strata = |rng: &mut SimRng| {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.shuffle(rng);
            idx.into_iter()
                .map(|i| (i as f64 + rng.gen_range(f64::EPSILON..1.0)) / n as f64)
                .collect::<Vec<f64>>()
        };
        let uh = strata(&mut rng);
        let ug = strata(&mut rng);
        let pairs = uh
            .iter()
            .zip(&ug)
            .map(|(&a, &b)| (primary.quantile(a.min(1.0 - 1e-16)), interferer.quantile(b.min(1.0 - 1e-16))))
            .collect();
        Ok(Self::Sampled { pairs })
    }

    /// Pairs from a network: for each node `k` and each interferer `j` not
    /// sharing `k`'s receiver, `(h_j² to m(j), h_j² to m(k))`.
    pub fn from_network(net: &Network) -> Result<Self> {
        Self::from_networks(std::slice::from_ref(net))
    }

    pub fn from_networks(nets: &[Network]) -> Result<Self> {
        let mut pairs = Vec::new();
        for net in nets {
            let kk = net.node_count();
            for k in 0..kk {
                let r = net.receiver_of(k);
                for j in 0..kk {
                    if j == k || j == r || net.receiver_of(j) == r {
                        continue;
                    }
                    pairs.push((net.primary_power_gain(j), net.power_gain(j, r)));
                }
            }
        }
        if pairs.is_empty() {
            return Err(Error::TooFewNodes);
        }
        Ok(Self::Sampled { pairs })
    }

    /// `ζ(γ) = E[G / (H + γG)]`.
    pub fn zeta(&self, gamma: f64) -> Result<Estimate> {
        if !(gamma >= 0.0) {
            return Err(Error::InvalidArgument(format!("zeta needs gamma >= 0, got {gamma}")));
        }
        match self {
            Self::Laws { primary, interferer } => match (primary, interferer) {
                (GainLaw::PointMass { value: h }, GainLaw::PointMass { value: g }) => Ok(Estimate {
                    value: g / (h + gamma * g),
                    std_error: 0.0,
                }),
                (GainLaw::Exponential { mean: h }, GainLaw::Exponential { mean: g }) => Ok(Estimate {
                    value: zeta_exponential(gamma, *g, *h).0,
                    std_error: 0.0,
                }),
                _ => self.sampled_default()?.zeta(gamma),
            },
            Self::Sampled { pairs } => Ok(mean_and_error(pairs.iter().map(|&(h, g)| g / (h + gamma * g)))),
        }
    }

    /// `dζ/dγ = -E[G² / (H + γG)²]`.
    pub fn zeta_derivative(&self, gamma: f64) -> Result<f64> {
        if !(gamma >= 0.0) {
            return Err(Error::InvalidArgument(format!("zeta needs gamma >= 0, got {gamma}")));
        }
        match self {
            Self::Laws { primary, interferer } => match (primary, interferer) {
                (GainLaw::PointMass { value: h }, GainLaw::PointMass { value: g }) => {
                    let d = h + gamma * g;
                    Ok(-g * g / (d * d))
                }
                (GainLaw::Exponential { mean: h }, GainLaw::Exponential { mean: g }) => {
                    Ok(zeta_exponential(gamma, *g, *h).1)
                }
                _ => self.sampled_default()?.zeta_derivative(gamma),
            },
            Self::Sampled { pairs } => Ok(-pairs
                .iter()
                .map(|&(h, g)| {
                    let d = h + gamma * g;
                    g * g / (d * d)
                })
                .sum::<f64>()
                / pairs.len() as f64),
        }
    }

    fn sampled_default(&self) -> Result<Self> {
        match self {
            Self::Laws { primary, interferer } => Self::stratified(*primary, *interferer, DEFAULT_SAMPLES, 0),
            Self::Sampled { .. } => Ok(self.clone()),
        }
    }

    /// `(h, g)` draws for Monte Carlo use.
    pub fn draw_pairs(&self, n: usize, seed: u64) -> Result<Vec<(f64, f64)>> {
        match self {
            Self::Laws { primary, interferer } => match Self::stratified(*primary, *interferer, n, seed)? {
                Self::Sampled { pairs } => Ok(pairs),
                Self::Laws { .. } => unreachable!(),
            },
            Self::Sampled { pairs } => {
                let mut rng = rng_from_seed(seed);
                Ok((0..n).map(|_| pairs[rng.gen_range(0..pairs.len())]).collect())
            }
        }
    }
}

fn mean_and_error(values: impl Iterator<Item = f64>) -> Estimate {
    let (mut n, mut mean, mut m2) = (0.0f64, 0.0f64, 0.0f64);
    for v in values {
        n += 1.0;
        let d = v - mean;
        mean += d / n;
        m2 += d * (v - mean);
    }
    let std_error = if n > 1.0 { (m2 / (n - 1.0) / n).sqrt() } else { 0.0 };
    Estimate { value: mean, std_error }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Achievability {
    /// `βγq/(1+γ) + βγ(1-q)ζ(γ)`; achievable iff below one.
    pub load_term: f64,
    pub std_error: f64,
    pub achievable: bool,
    /// The margin `1 - load_term` is within three standard errors of zero.
    pub uncertain: bool,
}

pub fn achievable(gamma: f64, params: &AsymptoticParams, profile: &InterferenceProfile) -> Result<Achievability> {
    params.validate()?;
    if !(gamma > 0.0) {
        return Err(Error::InvalidArgument(format!("target SINR must be positive, got {gamma}")));
    }
    let (b, q) = (params.load, params.sharing);
    let mut std_error = 0.0;
    let cross = if q < 1.0 && b > 0.0 {
        let z = profile.zeta(gamma)?;
        std_error = b * gamma * (1.0 - q) * z.std_error;
        b * gamma * (1.0 - q) * z.value
    } else {
        0.0
    };
    let load_term = b * gamma * q / (1.0 + gamma) + cross;
    Ok(Achievability {
        load_term,
        std_error,
        achievable: load_term < 1.0,
        uncertain: (1.0 - load_term).abs() <= 3.0 * std_error,
    })
}

/// Common received power `κ = γσ² / (1 - load term)` that gives every node SINR `γ`.
pub fn mmse_received_power(gamma: f64, params: &AsymptoticParams, profile: &InterferenceProfile) -> Result<f64> {
    let a = achievable(gamma, params, profile)?;
    if !a.achievable {
        return Err(Error::NotAchievable {
            sinr: gamma,
            load_term: a.load_term,
        });
    }
    Ok(gamma * params.noise_power / (1.0 - a.load_term))
}

/// Minimum transmit power for a node with primary power gain `h2` to reach `γ`.
pub fn min_power_mmse(
    h2: f64,
    gamma: f64,
    params: &AsymptoticParams,
    profile: &InterferenceProfile,
) -> Result<f64> {
    if !(h2 > 0.0) {
        return Err(Error::InvalidArgument("primary gain must be positive".into()));
    }
    Ok(mmse_received_power(gamma, params, profile)? / h2)
}

/// Interferer received-power law when every node transmits at `κ / H`.
///
/// A receiver-sharing interferer arrives at `κ`; any other at `κ G / H`.
pub fn equal_received_interferers(kappa: f64, sharing: f64, pairs: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let n = pairs.len() as f64;
    let mut out = Vec::with_capacity(pairs.len() + 1);
    if sharing > 0.0 {
        out.push((sharing, kappa));
    }
    if sharing < 1.0 {
        out.extend(pairs.iter().map(|&(h, g)| ((1.0 - sharing) / n, kappa * g / h)));
    }
    out
}

/// Finite stand-in for the large-system model: `K` users split into
/// equal-size groups, each group sharing one receiver that does not
/// transmit; gains are drawn i.i.d. from the given laws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LargeSystemConfig {
    pub users: usize,
    pub processing_gain: usize,
    pub group_size: usize,
    pub primary: GainLaw,
    pub interferer: GainLaw,
    pub noise_power: f64,
}

impl LargeSystemConfig {
    /// Group size whose realized sharing probability is closest to `q`.
    pub fn group_size_for(sharing: f64, users: usize) -> usize {
        ((1.0 + sharing * (users as f64 - 1.0)).round() as usize).clamp(1, users.max(1))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LargeSystem {
    pub config: LargeSystemConfig,
    /// Receiver index per user.
    pub group: Vec<usize>,
    /// `K x R` power gains; `gains[(k, group[k])]` is `k`'s primary gain.
    pub gains: DMatrix<f64>,
    pub sequences: SpreadingSet,
}

impl LargeSystem {
    pub fn generate(config: LargeSystemConfig, seed: u64) -> Result<Self> {
        config.primary.validate()?;
        config.interferer.validate()?;
        let (k, n) = (config.users, config.group_size);
        if k == 0 || n == 0 || n > k || config.processing_gain == 0 || !(config.noise_power > 0.0) {
            return Err(Error::InvalidConfig(format!("bad large-system config {config:?}")));
        }
        let group: Vec<usize> = (0..k).map(|i| i / n).collect();
        let receivers = group[k - 1] + 1;
        let mut rng = rng_from_seed(derive_seed(seed, &[1]));
        let gains = DMatrix::from_fn(k, receivers, |i, r| {
            if group[i] == r {
                config.primary.sample(&mut rng)
            } else {
                config.interferer.sample(&mut rng)
            }
        });
        let mut srng = rng_from_seed(derive_seed(seed, &[2]));
        let sequences = SpreadingSet::generate(k, config.processing_gain, &mut srng)?;
        Ok(Self {
            config,
            group,
            gains,
            sequences,
        })
    }

    pub fn user_count(&self) -> usize {
        self.config.users
    }

    pub fn load(&self) -> f64 {
        self.config.users as f64 / self.config.processing_gain as f64
    }

    /// Realized fraction of ordered user pairs sharing a receiver.
    pub fn sharing(&self) -> f64 {
        let k = self.user_count();
        if k < 2 {
            return 0.0;
        }
        let mut sizes = vec![0usize; self.gains.ncols()];
        for &g in &self.group {
            sizes[g] += 1;
        }
        sizes.iter().map(|&s| (s * s.saturating_sub(1)) as f64).sum::<f64>() / (k * (k - 1)) as f64
    }

    pub fn primary_gain(&self, k: usize) -> f64 {
        self.gains[(k, self.group[k])]
    }

    pub fn params(&self) -> Result<AsymptoticParams> {
        AsymptoticParams::new(self.load(), self.sharing(), self.config.noise_power)
    }

    /// Exact MMSE SINRs `p_k h_k² s_kᵀ A_k⁻¹ s_k`.
    pub fn exact_mmse_sinrs(&self, powers: &[f64]) -> Result<Vec<f64>> {
        self.check(powers)?;
        let s = self.sequences.matrix();
        let n = self.config.processing_gain;
        let mut out = vec![0.0; self.user_count()];
        for r in 0..self.gains.ncols() {
            let mut a = DMatrix::identity(n, n) * self.config.noise_power;
            for j in 0..self.user_count() {
                let w = powers[j] * self.gains[(j, r)];
                if w > 0.0 {
                    a.ger(w, &s.column(j), &s.column(j), 1.0);
                }
            }
            let chol = a.cholesky().ok_or_else(|| Error::SolverFailure {
                context: "large-system MMSE".into(),
                condition: f64::NAN,
            })?;
            for k in (0..self.user_count()).filter(|&k| self.group[k] == r) {
                let sk = s.column(k).into_owned();
                let t = sk.dot(&chol.solve(&sk));
                let w = powers[k] * self.gains[(k, r)];
                // Remove k's own contribution: sᵀA_k⁻¹s = t / (1 - w t).
                out[k] = w * t / (1.0 - w * t);
            }
        }
        Ok(out)
    }

    pub fn exact_mf_sinrs(&self, powers: &[f64]) -> Result<Vec<f64>> {
        self.check(powers)?;
        let rho = self.sequences.rho();
        Ok((0..self.user_count())
            .map(|k| {
                let r = self.group[k];
                let i: f64 = (0..self.user_count())
                    .filter(|&j| j != k)
                    .map(|j| powers[j] * self.gains[(j, r)] * rho[(k, j)] * rho[(k, j)])
                    .sum();
                powers[k] * self.gains[(k, r)] / (self.config.noise_power + i)
            })
            .collect())
    }

    pub fn exact_de_sinrs(&self, powers: &[f64]) -> Result<Vec<f64>> {
        self.check(powers)?;
        let k = self.user_count();
        if k > self.config.processing_gain {
            return Err(Error::DecorrelatorInapplicable {
                users: k,
                processing_gain: self.config.processing_gain,
            });
        }
        let inv = self
            .sequences
            .rho()
            .clone()
            .cholesky()
            .ok_or(Error::SingularCorrelation)?
            .inverse();
        Ok((0..k)
            .map(|i| powers[i] * self.primary_gain(i) / (self.config.noise_power * inv[(i, i)]))
            .collect())
    }

    /// Per-user finite approximation with weight `1/N` on every other user.
    pub fn approx_mmse_sinrs(&self, powers: &[f64]) -> Result<Vec<f64>> {
        self.check(powers)?;
        let w = 1.0 / self.config.processing_gain as f64;
        (0..self.user_count())
            .map(|k| {
                let r = self.group[k];
                let xs: Vec<(f64, f64)> = (0..self.user_count())
                    .filter(|&j| j != k)
                    .map(|j| (w, powers[j] * self.gains[(j, r)]))
                    .collect();
                Ok(interference_fixed_point(powers[k] * self.primary_gain(k), self.config.noise_power, &xs)?.gamma)
            })
            .collect()
    }

    fn check(&self, powers: &[f64]) -> Result<()> {
        if powers.len() != self.user_count() || powers.iter().any(|p| !(*p >= 0.0)) {
            return Err(Error::InvalidArgument("power vector must be nonnegative with one entry per user".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::NetworkConfig;
    use proptest::prelude::{prop_assert, prop_assert_eq, proptest, ProptestConfig};

    fn params(load: f64, sharing: f64, noise: f64) -> AsymptoticParams {
        AsymptoticParams::new(load, sharing, noise).unwrap()
    }

    fn exp_profile(h: f64, g: f64) -> InterferenceProfile {
        InterferenceProfile::laws(GainLaw::Exponential { mean: h }, GainLaw::Exponential { mean: g }).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn kernel_is_monotone_in_first_argument(
            a0 in 0.0f64..1e3, da in 0.0f64..1e3, b in 1e-6f64..1e3, c in 1e-6f64..1e3
        ) {
            prop_assert!(effective_interference(a0, b, c) <= effective_interference(a0 + da, b, c));
        }

        #[test]
        fn kernel_bounds(a in 1e-6f64..1e6, b in 1e-6f64..1e6, c in 1e-6f64..1e3) {
            let i = effective_interference(a, b, c);
            prop_assert!(i <= a * (1.0 + 1e-15));
            prop_assert!(i <= b / c * (1.0 + 1e-15));
        }

        #[test]
        fn full_sharing_reduces_to_single_cell(
            load in 0.01f64..4.0, gamma in 0.01f64..20.0, noise in 0.1f64..2.0
        ) {
            let p = params(load, 1.0, noise);
            let prof = exp_profile(1.0, 0.1);
            let a = achievable(gamma, &p, &prof).unwrap();
            prop_assert!((a.load_term - load * gamma / (1.0 + gamma)).abs() < 1e-12);
            prop_assert_eq!(a.achievable, load * gamma / (1.0 + gamma) < 1.0);
            if a.achievable {
                // all nodes received at κ solve κ = γ(σ² + βκ/(1+γ))
                let kappa = mmse_received_power(gamma, &p, &prof).unwrap();
                let fp = asymptotic_sinr_mmse(kappa, &p, &[(1.0, kappa)]).unwrap();
                prop_assert!((fp.gamma - gamma).abs() <= 1e-9 * gamma);
            }
        }
    }

    #[test]
    fn mf_and_de_substitutions() {
        assert_eq!(asymptotic_sinr_mf(3.0, &params(0.0, 0.0, 1.5), 7.0), 2.0);
        assert_eq!(asymptotic_sinr_mf(1.0, &params(1.0, 0.0, 0.5), 0.5), 1.0);
        assert_eq!(asymptotic_sinr_de(2.0, &params(0.5, 0.0, 1.0)), 1.0);
        assert_eq!(asymptotic_sinr_de(2.0, &params(1.0, 0.0, 1.0)), 0.0);
        assert_eq!(asymptotic_sinr_de(2.0, &params(3.0, 0.0, 1.0)), 0.0);
    }

    #[test]
    fn mmse_without_interference() {
        let p = params(1.0, 0.0, 0.5);
        let fp = asymptotic_sinr_mmse(2.0, &p, &[(1.0, 0.0)]).unwrap();
        assert!((fp.gamma - 4.0).abs() < 1e-10);
        assert_eq!(asymptotic_sinr_mmse(0.0, &p, &[(1.0, 3.0)]).unwrap().gamma, 0.0);
    }

    #[test]
    fn achievability_reductions() {
        let prof = exp_profile(1.0, 0.05);
        let p = params(2.0, 1.0, 1.0);
        assert!(achievable(0.99, &p, &prof).unwrap().achievable);
        assert!(!achievable(1.01, &p, &prof).unwrap().achievable);
        let tiny = params(1e-12, 0.3, 1.0);
        assert!(achievable(1e4, &tiny, &prof).unwrap().achievable);
        let unit = InterferenceProfile::laws(GainLaw::PointMass { value: 1.0 }, GainLaw::PointMass { value: 1.0 }).unwrap();
        for g in [0.1, 1.0, 10.0, 1e6] {
            let a = achievable(g, &params(1.0, 0.0, 1.0), &unit).unwrap();
            assert!((a.load_term - g / (1.0 + g)).abs() < 1e-12);
            assert!(a.achievable);
        }
    }

    #[test]
    fn min_power_substitution_and_refusal() {
        let prof = exp_profile(1.0, 0.05);
        let p = min_power_mmse(1.0, 1.0, &params(0.5, 1.0, 1.0), &prof).unwrap();
        assert!((p - 4.0 / 3.0).abs() < 1e-12);
        // received power does not depend on h
        let pp = params(0.5, 0.1, 1.0);
        let a = min_power_mmse(0.3, 2.0, &pp, &prof).unwrap() * 0.3;
        let b = min_power_mmse(7.0, 2.0, &pp, &prof).unwrap() * 7.0;
        assert!((a - b).abs() < 1e-12 * a);
        assert!(matches!(
            min_power_mmse(1.0, 3.0, &params(2.0, 1.0, 1.0), &prof),
            Err(Error::NotAchievable { .. })
        ));
    }

    #[test]
    fn zeta_point_masses_and_limits() {
        let unit = InterferenceProfile::laws(GainLaw::PointMass { value: 1.0 }, GainLaw::PointMass { value: 1.0 }).unwrap();
        for g in [0.0, 0.5, 3.0] {
            assert!((unit.zeta(g).unwrap().value - 1.0 / (1.0 + g)).abs() < 1e-15);
        }
        let pm = InterferenceProfile::laws(GainLaw::PointMass { value: 2.0 }, GainLaw::PointMass { value: 0.5 }).unwrap();
        assert!((pm.zeta(0.0).unwrap().value - 0.25).abs() < 1e-15);
        assert_eq!(exp_profile(1.0, 0.05).zeta(0.0).unwrap().value, f64::INFINITY);
    }

    #[test]
    fn exponential_closed_form_matches_quadrature() {
        // E[G/(H+γG)] by midpoint quadrature over the two quantile grids.
        for &(h, g, gamma) in &[(1.0, 0.05, 6.4), (1.0, 1.0, 1.0), (2.0, 0.5, 3.9), (1.0, 0.3, 0.2)] {
            let n = 2000;
            let mut acc = 0.0;
            for i in 0..n {
                let hv = -h * (1.0 - (i as f64 + 0.5) / n as f64).ln();
                for j in 0..n {
                    let gv = -g * (1.0 - (j as f64 + 0.5) / n as f64).ln();
                    acc += gv / (hv + gamma * gv);
                }
            }
            let quad = acc / (n * n) as f64;
            let (z, _) = zeta_exponential(gamma, g, h);
            assert!((z - quad).abs() < 2e-3 * z, "{h} {g} {gamma}: {z} vs {quad}");
        }
    }

    #[test]
    fn exponential_derivative_matches_differences() {
        for &(h, g, gamma) in &[(1.0, 0.05, 6.4), (1.0, 1.0, 1.0), (1.0, 1.0, 1.0005), (2.0, 0.5, 3.9)] {
            let d = 1e-6;
            let fd = (zeta_exponential(gamma + d, g, h).0 - zeta_exponential(gamma - d, g, h).0) / (2.0 * d);
            let an = zeta_exponential(gamma, g, h).1;
            assert!((fd - an).abs() < 1e-6 * an.abs(), "{gamma}: {fd} vs {an}");
        }
    }

    #[test]
    fn stratified_sample_agrees_with_closed_form() {
        let (hl, gl) = (GainLaw::Exponential { mean: 1.0 }, GainLaw::Exponential { mean: 0.05 });
        let s = InterferenceProfile::stratified(hl, gl, DEFAULT_SAMPLES, 9).unwrap();
        let exact = exp_profile(1.0, 0.05);
        for g in [1.0, 6.4] {
            let est = s.zeta(g).unwrap();
            let z = exact.zeta(g).unwrap().value;
            assert!((est.value - z).abs() < 4.0 * est.std_error + 1e-4 * z, "{g}");
            let d = s.zeta_derivative(g).unwrap();
            let dz = exact.zeta_derivative(g).unwrap();
            assert!((d - dz).abs() < 0.02 * dz.abs());
        }
    }

    #[test]
    fn zeta_is_nonincreasing_on_network_samples() {
        let cfg = NetworkConfig {
            node_count: 40,
            seed: 2,
            ..Default::default()
        };
        let net = crate::network::generate_network(&cfg).unwrap();
        let prof = InterferenceProfile::from_network(&net).unwrap();
        let mut prev = f64::INFINITY;
        for i in 0..60 {
            let z = prof.zeta(i as f64 * 0.25).unwrap().value;
            assert!(z <= prev);
            prev = z;
        }
        assert!(prof.zeta_derivative(2.0).unwrap() < 0.0);
    }

    #[test]
    fn network_pairs_exclude_shared_receivers() {
        let cfg = NetworkConfig {
            node_count: 30,
            seed: 6,
            ..Default::default()
        };
        let net = crate::network::generate_network(&cfg).unwrap();
        let InterferenceProfile::Sampled { pairs } = InterferenceProfile::from_network(&net).unwrap() else {
            panic!("expected samples");
        };
        let mut want = 0;
        for k in 0..30 {
            let r = net.receiver_of(k);
            want += (0..30).filter(|&j| j != k && j != r && net.receiver_of(j) != r).count();
        }
        assert_eq!(pairs.len(), want);
    }

    #[test]
    fn monte_carlo_fixed_point_matches_requested_sinr() {
        let prof = exp_profile(1.0, 0.05);
        let p = params(0.75, 0.05, 1.0);
        for gamma in [0.5, 2.0, 4.0] {
            let kappa = mmse_received_power(gamma, &p, &prof).unwrap();
            let pairs = prof.draw_pairs(DEFAULT_SAMPLES, 3).unwrap();
            let law = equal_received_interferers(kappa, p.sharing, &pairs);
            let fp = asymptotic_sinr_mmse(kappa, &p, &law).unwrap();
            assert!((fp.gamma - gamma).abs() < 0.01 * gamma, "{gamma}: {}", fp.gamma);
        }
    }

    fn big(users: usize, group: usize, h: GainLaw, g: GainLaw, seed: u64) -> LargeSystem {
        LargeSystem::generate(
            LargeSystemConfig {
                users,
                processing_gain: 200,
                group_size: group,
                primary: h,
                interferer: g,
                noise_power: 1.0,
            },
            seed,
        )
        .unwrap()
    }

    #[test]
    fn large_system_realizes_sharing() {
        let e = GainLaw::Exponential { mean: 1.0 };
        let s = big(100, 5, e, e, 0);
        assert!((s.sharing() - 4.0 / 99.0).abs() < 1e-15);
        assert_eq!(LargeSystemConfig::group_size_for(4.0 / 99.0, 100), 5);
    }

    #[test]
    fn finite_mf_and_de_follow_large_system_values() {
        // Same law for both gains so the interferer's own gain describes
        // what reaches other receivers.
        let e = GainLaw::Exponential { mean: 1.0 };
        let mut rng = rng_from_seed(11);
        let s = big(200, 1, e, e, 1);
        let powers: Vec<f64> = (0..200).map(|_| rng.gen_range(0.5..1.5)).collect();
        let got = s.exact_mf_sinrs(&powers).unwrap();
        let mean_pg = (0..200).map(|j| powers[j] * s.primary_gain(j)).sum::<f64>() / 200.0;
        let p = s.params().unwrap();
        let mut rel: Vec<f64> = (0..200)
            .map(|k| {
                let want = asymptotic_sinr_mf(powers[k] * s.primary_gain(k), &p, mean_pg);
                (got[k] / want - 1.0).abs()
            })
            .collect();
        rel.sort_by(f64::total_cmp);
        assert!(rel[100] < 0.10, "median MF deviation {}", rel[100]);

        let s = big(100, 1, e, e, 2);
        let powers = vec![1.0; 100];
        let got = s.exact_de_sinrs(&powers).unwrap();
        let p = s.params().unwrap();
        // Per-node values spread by about sqrt(2/(N-K)); the mean ratio concentrates.
        let ratio = (0..100)
            .map(|k| got[k] / asymptotic_sinr_de(s.primary_gain(k), &p))
            .sum::<f64>()
            / 100.0;
        assert!((ratio - 1.0).abs() < 0.10, "{ratio}");
    }

    #[test]
    fn per_node_approximation_tracks_exact_mmse() {
        let e = GainLaw::Exponential { mean: 1.0 };
        let s = big(200, 4, e, GainLaw::Exponential { mean: 0.2 }, 4);
        let mut rng = rng_from_seed(5);
        let powers: Vec<f64> = (0..200).map(|_| rng.gen_range(0.2..2.0)).collect();
        let exact = s.exact_mmse_sinrs(&powers).unwrap();
        let approx = s.approx_mmse_sinrs(&powers).unwrap();
        let within = (0..200).filter(|&k| (approx[k] / exact[k] - 1.0).abs() < 0.05).count();
        assert!(within >= 190, "{within}");
    }

    #[test]
    fn per_node_approximation_on_scenarios() {
        let cfg = NetworkConfig {
            node_count: 1,
            seed: 3,
            ..Default::default()
        };
        let sc = Scenario::generate(&cfg, 8, 1).unwrap();
        let g = finite_mmse_sinr_approx(0, &[2e-3], &sc).unwrap();
        let want = 2e-3 * sc.network.primary_power_gain(0) / sc.noise_power();
        assert!((g - want).abs() < 1e-12 * want);
    }

    #[test]
    fn approximation_is_scale_free_without_noise() {
        // Above unit load, so interference cannot be nulled and γ stays finite.
        let e = GainLaw::Exponential { mean: 1.0 };
        let mut s = big(300, 3, e, GainLaw::Exponential { mean: 0.3 }, 7);
        s.config.noise_power = 1e-12;
        let mut rng = rng_from_seed(8);
        let powers: Vec<f64> = (0..300).map(|_| rng.gen_range(0.2..2.0)).collect();
        let scaled: Vec<f64> = powers.iter().map(|p| p * 40.0).collect();
        let a = s.approx_mmse_sinrs(&powers).unwrap();
        let b = s.approx_mmse_sinrs(&scaled).unwrap();
        for k in 0..300 {
            assert!((a[k] - b[k]).abs() < 1e-6 * a[k], "{k}: {} vs {}", a[k], b[k]);
        }
    }

    #[test]
    fn rejects_bad_params() {
        assert!(AsymptoticParams::new(-1.0, 0.0, 1.0).is_err());
        assert!(AsymptoticParams::new(1.0, 1.5, 1.0).is_err());
        assert!(AsymptoticParams::new(1.0, 0.5, 0.0).is_err());
        assert!(InterferenceProfile::laws(GainLaw::PointMass { value: 0.0 }, GainLaw::PointMass { value: 1.0 }).is_err());
        assert!(exp_profile(1.0, 1.0).zeta(-1.0).is_err());
    }
}
