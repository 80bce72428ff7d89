//! Linear receivers and their output SINRs.
//!
//! For user `k` at receiver `r = m(k)` the interferers are every other
//! transmitter except `r` itself (a node does not transmit while it
//! receives). All three receivers give an SINR that is linear in the user's
//! own power, so the engine works with the SINR per watt of own power,
//! `γ_k / p_k`, which does not depend on `p_k`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{Scenario, SpreadingSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReceiverKind {
    Mf,
    De,
    Mmse,
}

impl ReceiverKind {
    pub const ALL: [ReceiverKind; 3] = [ReceiverKind::Mf, ReceiverKind::De, ReceiverKind::Mmse];

    pub fn as_str(self) -> &'static str {
        match self {
            ReceiverKind::Mf => "mf",
            ReceiverKind::De => "de",
            ReceiverKind::Mmse => "mmse",
        }
    }

    /// Whether the receiver exists for `users` sequences of length `processing_gain`.
    pub fn applicable(self, users: usize, processing_gain: usize) -> bool {
        self != ReceiverKind::De || users <= processing_gain
    }
}

impl fmt::Display for ReceiverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ReceiverKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mf" => Ok(ReceiverKind::Mf),
            "de" => Ok(ReceiverKind::De),
            "mmse" => Ok(ReceiverKind::Mmse),
            other => Err(Error::InvalidArgument(format!("unknown receiver '{other}'"))),
        }
    }
}

/// Filter vectors `c_k` (columns, N x K) for one receiver kind.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceiverBank {
    pub kind: ReceiverKind,
    pub filters: DMatrix<f64>,
}

impl ReceiverBank {
    pub fn matched(spread: &SpreadingSet) -> Self {
        Self {
            kind: ReceiverKind::Mf,
            filters: spread.matrix().clone(),
        }
    }

    pub fn mmse(powers: &[f64], sc: &Scenario) -> Result<Self> {
        let n = sc.processing_gain();
        let mut filters = DMatrix::zeros(n, sc.node_count());
        for k in 0..sc.node_count() {
            filters.set_column(k, &mmse_filter(k, powers, sc)?);
        }
        Ok(Self {
            kind: ReceiverKind::Mmse,
            filters,
        })
    }

    pub fn build(kind: ReceiverKind, powers: &[f64], sc: &Scenario) -> Result<Self> {
        match kind {
            ReceiverKind::Mf => Ok(Self::matched(&sc.sequences)),
            ReceiverKind::De => decorrelator_bank(&sc.sequences),
            ReceiverKind::Mmse => Self::mmse(powers, sc),
        }
    }

    pub fn filter(&self, k: usize) -> DVector<f64> {
        self.filters.column(k).into_owned()
    }

    /// Generic SINR of every user through its filter.
    pub fn sinrs(&self, powers: &[f64], sc: &Scenario) -> Result<Vec<f64>> {
        (0..sc.node_count())
            .map(|k| sinr_linear(self.filters.column(k).as_slice(), k, powers, sc))
            .collect()
    }
}

fn check_powers(powers: &[f64], sc: &Scenario) -> Result<()> {
    if powers.len() != sc.node_count() {
        return Err(Error::InvalidArgument(format!(
            "expected {} powers, got {}",
            sc.node_count(),
            powers.len()
        )));
    }
    if powers.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
        return Err(Error::InvalidArgument("powers must be finite and nonnegative".into()));
    }
    Ok(())
}

/// Transmitters that interfere with user `k` at its receiver.
fn interferers(sc: &Scenario, k: usize) -> impl Iterator<Item = usize> + '_ {
    let r = sc.network.receiver_of(k);
    (0..sc.node_count()).filter(move |&j| j != k && j != r)
}

/// SINR of user `k` through an arbitrary filter `c`.
pub fn sinr_linear(c: &[f64], k: usize, powers: &[f64], sc: &Scenario) -> Result<f64> {
    check_powers(powers, sc)?;
    let n = sc.processing_gain();
    if c.len() != n {
        return Err(Error::InvalidArgument(format!("filter length {} != N = {n}", c.len())));
    }
    let c = DVector::from_column_slice(c);
    let cc = c.dot(&c);
    if cc == 0.0 {
        return Err(Error::InvalidArgument("filter vector is zero".into()));
    }
    let s = sc.sequences.matrix();
    let r = sc.network.receiver_of(k);
    let own = c.dot(&s.column(k));
    let signal = powers[k] * sc.network.primary_power_gain(k) * own * own;
    let interference: f64 = interferers(sc, k)
        .map(|j| {
            let x = c.dot(&s.column(j));
            powers[j] * sc.network.power_gain(j, r) * x * x
        })
        .sum();
    Ok(signal / (sc.noise_power() * cc + interference))
}

/// Matched-filter SINR.
pub fn sinr_mf(k: usize, powers: &[f64], sc: &Scenario) -> Result<f64> {
    check_powers(powers, sc)?;
    let r = sc.network.receiver_of(k);
    let rho = sc.sequences.rho();
    let interference: f64 = interferers(sc, k)
        .map(|j| powers[j] * sc.network.power_gain(j, r) * rho[(k, j)] * rho[(k, j)])
        .sum();
    Ok(powers[k] * sc.network.primary_power_gain(k) / (sc.noise_power() + interference))
}

/// `A_k` at receiver `m(k)`: noise plus every interferer's covariance.
fn interference_covariance(k: usize, powers: &[f64], sc: &Scenario) -> DMatrix<f64> {
    let n = sc.processing_gain();
    let s = sc.sequences.matrix();
    let r = sc.network.receiver_of(k);
    let mut a = DMatrix::identity(n, n) * sc.noise_power();
    for j in interferers(sc, k) {
        let w = powers[j] * sc.network.power_gain(j, r);
        if w > 0.0 {
            a.ger(w, &s.column(j), &s.column(j), 1.0);
        }
    }
    a
}

fn spd_solve(a: DMatrix<f64>, rhs: &DVector<f64>, context: &str, noise: f64) -> Result<DVector<f64>> {
    let cond = a.diagonal().max() / noise;
    let chol = a.cholesky().ok_or_else(|| Error::SolverFailure {
        context: context.to_string(),
        condition: cond,
    })?;
    Ok(chol.solve(rhs))
}

/// MMSE filter `c_k = √p_k h_k / (1 + p_k h_k² s_kᵀA_k⁻¹s_k) · A_k⁻¹ s_k`.
///
/// Needs `p_k > 0`; the leading factor is zero otherwise.
pub fn mmse_filter(k: usize, powers: &[f64], sc: &Scenario) -> Result<DVector<f64>> {
    check_powers(powers, sc)?;
    if powers[k] <= 0.0 {
        return Err(Error::InvalidArgument(format!("MMSE filter of node {k} needs positive power")));
    }
    let a = interference_covariance(k, powers, sc);
    let s_k = sc.sequences.sequence(k).into_owned();
    let x = spd_solve(a, &s_k, "MMSE filter", sc.noise_power())?;
    let h2 = sc.network.primary_power_gain(k);
    let scale = (powers[k] * h2).sqrt() / (1.0 + powers[k] * h2 * s_k.dot(&x));
    Ok(x * scale)
}

/// MMSE SINR `p_k h_k² s_kᵀ A_k⁻¹ s_k`, solved in the chip domain.
pub fn sinr_mmse(k: usize, powers: &[f64], sc: &Scenario) -> Result<f64> {
    check_powers(powers, sc)?;
    let a = interference_covariance(k, powers, sc);
    let s_k = sc.sequences.sequence(k).into_owned();
    let x = spd_solve(a, &s_k, "MMSE SINR", sc.noise_power())?;
    Ok(powers[k] * sc.network.primary_power_gain(k) * s_k.dot(&x))
}

/// Decorrelator bank `C = S (SᵀS)⁻¹`.
pub fn decorrelator_bank(spread: &SpreadingSet) -> Result<ReceiverBank> {
    let inv = correlation_inverse(spread)?;
    Ok(ReceiverBank {
        kind: ReceiverKind::De,
        filters: spread.matrix() * inv,
    })
}

fn correlation_inverse(spread: &SpreadingSet) -> Result<DMatrix<f64>> {
    let (users, n) = (spread.user_count(), spread.processing_gain());
    if users > n {
        return Err(Error::DecorrelatorInapplicable {
            users,
            processing_gain: n,
        });
    }
    let chol = spread.rho().clone().cholesky().ok_or(Error::SingularCorrelation)?;
    // Repeated sequences leave a pivot at rounding level.
    if chol.l_dirty().diagonal().iter().any(|&d| d * d < 1e-12) {
        return Err(Error::SingularCorrelation);
    }
    Ok(chol.inverse())
}

/// Decorrelator SINR `p_k h_k² / (σ² c_kᵀc_k)`; `c_kᵀc_k = [(SᵀS)⁻¹]_kk`.
pub fn sinr_de(k: usize, powers: &[f64], sc: &Scenario) -> Result<f64> {
    check_powers(powers, sc)?;
    let inv = correlation_inverse(&sc.sequences)?;
    Ok(powers[k] * sc.network.primary_power_gain(k) / (sc.noise_power() * inv[(k, k)]))
}

/// Batched SINR evaluation for one receiver kind on a fixed scenario.
///
/// MMSE quantities are computed in a `d = min(N, K)` dimensional basis: with
/// `S = Q R` (thin QR when `K <= N`, `Q = I` otherwise) one has
/// `s_kᵀ A⁻¹ s_j = r_kᵀ (σ² I + R W Rᵀ)⁻¹ r_j`.
pub struct SinrEngine<'a> {
    sc: &'a Scenario,
    kind: ReceiverKind,
    /// `power_gain[(j, m)]` = `h_j^(m)²`.
    power_gain: DMatrix<f64>,
    primary: Vec<f64>,
    groups: Vec<(usize, Vec<usize>)>,
    rho_sq: Option<DMatrix<f64>>,
    de_noise: Option<Vec<f64>>,
    basis: Option<DMatrix<f64>>,
}

impl<'a> SinrEngine<'a> {
    pub fn new(sc: &'a Scenario, kind: ReceiverKind) -> Result<Self> {
        let k_count = sc.node_count();
        let power_gain = DMatrix::from_fn(k_count, k_count + 1, |j, m| sc.network.power_gain(j, m));
        let primary = (0..k_count).map(|k| sc.network.primary_power_gain(k)).collect();
        let mut engine = Self {
            sc,
            kind,
            power_gain,
            primary,
            groups: sc.network.receiver_groups(),
            rho_sq: None,
            de_noise: None,
            basis: None,
        };
        match kind {
            ReceiverKind::Mf => {
                engine.rho_sq = Some(sc.sequences.rho().map(|x| x * x));
            }
            ReceiverKind::De => {
                let inv = correlation_inverse(&sc.sequences)?;
                engine.de_noise = Some(inv.diagonal().iter().copied().collect());
            }
            ReceiverKind::Mmse => {
                let s = sc.sequences.matrix();
                engine.basis = Some(if k_count <= sc.processing_gain() {
                    s.clone().qr().r()
                } else {
                    s.clone()
                });
            }
        }
        Ok(engine)
    }

    pub fn kind(&self) -> ReceiverKind {
        self.kind
    }

    pub fn scenario(&self) -> &Scenario {
        self.sc
    }

    pub fn primary_power_gains(&self) -> &[f64] {
        &self.primary
    }

    /// `γ_k / p_k` for every user given everyone else's powers.
    pub fn sinr_per_watt(&self, powers: &[f64]) -> Result<Vec<f64>> {
        check_powers(powers, self.sc)?;
        match self.kind {
            ReceiverKind::Mf => Ok(self.mf_per_watt(powers)),
            ReceiverKind::De => {
                let noise = self.sc.noise_power();
                let de = self.de_noise.as_ref().expect("DE engine");
                Ok(self.primary.iter().zip(de).map(|(h, c)| h / (noise * c)).collect())
            }
            ReceiverKind::Mmse => self.mmse_per_watt(powers),
        }
    }

    pub fn sinrs(&self, powers: &[f64]) -> Result<Vec<f64>> {
        Ok(self
            .sinr_per_watt(powers)?
            .into_iter()
            .zip(powers)
            .map(|(s, p)| s * p)
            .collect())
    }

    fn mf_per_watt(&self, powers: &[f64]) -> Vec<f64> {
        let rho_sq = self.rho_sq.as_ref().expect("MF engine");
        let noise = self.sc.noise_power();
        let k_count = self.sc.node_count();
        let mut out = vec![0.0; k_count];
        for (r, users) in &self.groups {
            let r = *r;
            for &k in users {
                let mut interference = 0.0;
                for j in 0..k_count {
                    if j != k && j != r {
                        interference += powers[j] * self.power_gain[(j, r)] * rho_sq[(k, j)];
                    }
                }
                out[k] = self.primary[k] / (noise + interference);
            }
        }
        out
    }

    fn mmse_per_watt(&self, powers: &[f64]) -> Result<Vec<f64>> {
        let basis = self.basis.as_ref().expect("MMSE engine");
        let noise = self.sc.noise_power();
        let k_count = self.sc.node_count();
        let d = basis.nrows();
        let per_group: Vec<Result<Vec<(usize, f64)>>> = self
            .groups
            .par_iter()
            .map(|(r, users)| {
                let r = *r;
                // Everyone except the receiver node and this group's own users.
                let mut cols = Vec::with_capacity(k_count);
                let mut weights = Vec::with_capacity(k_count);
                for j in 0..k_count {
                    let w = powers[j] * self.power_gain[(j, r)];
                    if j != r && w > 0.0 && !users.contains(&j) {
                        cols.push(j);
                        weights.push(w.sqrt());
                    }
                }
                let mut base = DMatrix::identity(d, d) * noise;
                if !cols.is_empty() {
                    let scaled = DMatrix::from_fn(d, cols.len(), |i, c| basis[(i, cols[c])] * weights[c]);
                    base.gemm(1.0, &scaled, &scaled.transpose(), 1.0);
                }
                users
                    .iter()
                    .map(|&k| {
                        let mut a = base.clone();
                        for &j in users {
                            let w = powers[j] * self.power_gain[(j, r)];
                            if j != k && w > 0.0 {
                                a.ger(w, &basis.column(j), &basis.column(j), 1.0);
                            }
                        }
                        let r_k = basis.column(k).into_owned();
                        let x = spd_solve(a, &r_k, "MMSE SINR (reduced)", noise)?;
                        Ok((k, self.primary[k] * r_k.dot(&x)))
                    })
                    .collect()
            })
            .collect();
        let mut out = vec![0.0; k_count];
        for group in per_group {
            for (k, v) in group? {
                out[k] = v;
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{NetworkConfig, Scenario};
    use crate::rng::rng_from_seed;
    use rand::Rng;

    /// Two-node-plus-AP scenario with hand-set routing and unit gains.
    fn toy(chips: Vec<Vec<i8>>, noise: f64) -> Scenario {
        let k = chips.len();
        let n = chips[0].len();
        let cfg = NetworkConfig {
            node_count: k,
            noise_power: noise,
            ..Default::default()
        };
        let mut net = crate::network::generate_network(&cfg).unwrap();
        net.next_hop = vec![k; k];
        for row in net.gains.iter_mut() {
            for (m, h) in row.iter_mut().enumerate() {
                if *h != 0.0 || m == k {
                    *h = 1.0;
                }
            }
        }
        let spread = SpreadingSet::from_chips(n, chips).unwrap();
        Scenario::new(cfg, net, spread).unwrap()
    }

    fn random_scenario(k: usize, n: usize, seed: u64) -> Scenario {
        let cfg = NetworkConfig {
            node_count: k,
            seed,
            ..Default::default()
        };
        Scenario::generate(&cfg, n, seed + 1000).unwrap()
    }

    fn random_powers(sc: &Scenario, seed: u64) -> Vec<f64> {
        let mut rng = rng_from_seed(seed);
        (0..sc.node_count())
            .map(|k| {
                let target = 10f64.powf(rng.gen_range(-0.5..1.0));
                target * sc.noise_power() / sc.network.primary_power_gain(k)
            })
            .collect()
    }

    #[test]
    fn single_user_sinr() {
        let sc = toy(vec![vec![1, 1, -1, 1]], 0.5);
        let s0: Vec<f64> = sc.sequences.sequence(0).iter().copied().collect();
        assert!((sinr_linear(&s0, 0, &[1.0], &sc).unwrap() - 2.0).abs() < 1e-14);
        let scaled: Vec<f64> = s0.iter().map(|x| 3.7 * x).collect();
        assert!((sinr_linear(&scaled, 0, &[1.0], &sc).unwrap() - 2.0).abs() < 1e-14);
        assert!((sinr_mmse(0, &[1.0], &sc).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn mf_no_interference() {
        let mut sc = toy(vec![vec![1, 1]], 6.0);
        sc.network.gains[0][1] = 3f64.sqrt();
        assert!((sinr_mf(0, &[2.0], &sc).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn mf_two_users_quarter_correlation() {
        // rho_12 = 0.5 => rho^2 = 0.25
        let sc = toy(vec![vec![1, 1, 1, 1], vec![1, 1, 1, -1]], 0.75);
        assert_eq!(sc.sequences.rho()[(0, 1)], 0.5);
        assert!((sinr_mf(0, &[1.0, 1.0], &sc).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn orthogonal_sequences_give_interference_free_sinr() {
        let sc = toy(vec![vec![1, 1], vec![1, -1]], 0.25);
        let p = [0.3, 2.0];
        for k in 0..2 {
            let want = p[k] / 0.25;
            let s: Vec<f64> = sc.sequences.sequence(k).iter().copied().collect();
            assert!((sinr_linear(&s, k, &p, &sc).unwrap() - want).abs() < 1e-13);
            assert!((sinr_mf(k, &p, &sc).unwrap() - want).abs() < 1e-13);
            assert!((sinr_de(k, &p, &sc).unwrap() - want).abs() < 1e-13);
        }
        let bank = decorrelator_bank(&sc.sequences).unwrap();
        assert!((&bank.filters - sc.sequences.matrix()).amax() < 1e-15);
    }

    #[test]
    fn decorrelator_two_users_half_correlation() {
        let sc = toy(vec![vec![1, 1, 1, 1], vec![1, 1, 1, -1]], 1.0);
        let bank = decorrelator_bank(&sc.sequences).unwrap();
        let c1 = bank.filter(0);
        assert!((c1.dot(&c1) - 4.0 / 3.0).abs() < 1e-14);
        assert!((sinr_de(0, &[1.0, 1.0], &sc).unwrap() - 0.75).abs() < 1e-14);
    }

    #[test]
    fn decorrelator_nulls_cross_talk() {
        let sc = random_scenario(10, 50, 3);
        let bank = decorrelator_bank(&sc.sequences).unwrap();
        let cs = bank.filters.transpose() * sc.sequences.matrix();
        assert!((cs - DMatrix::<f64>::identity(10, 10)).amax() < 1e-10);
    }

    #[test]
    fn decorrelator_errors() {
        let sc = random_scenario(10, 8, 3);
        assert!(matches!(
            decorrelator_bank(&sc.sequences),
            Err(Error::DecorrelatorInapplicable { .. })
        ));
        let dup = SpreadingSet::from_chips(4, vec![vec![1, -1, 1, 1], vec![1, -1, 1, 1]]).unwrap();
        assert!(matches!(decorrelator_bank(&dup), Err(Error::SingularCorrelation)));
    }

    #[test]
    fn single_user_mmse_filter_is_matched() {
        let sc = toy(vec![vec![1, -1, 1, 1, -1, 1]], 0.3);
        let c = mmse_filter(0, &[2.0], &sc).unwrap();
        let s = sc.sequences.sequence(0);
        let ratio = c[0] / s[0];
        assert!((c - s * ratio).amax() < 1e-15);
    }

    #[test]
    fn mf_and_de_agree_with_generic_formula() {
        for seed in 0..10 {
            let sc = random_scenario(12, 40, seed);
            let p = random_powers(&sc, seed);
            let de = decorrelator_bank(&sc.sequences).unwrap();
            for k in 0..12 {
                let s: Vec<f64> = sc.sequences.sequence(k).iter().copied().collect();
                let a = sinr_mf(k, &p, &sc).unwrap();
                let b = sinr_linear(&s, k, &p, &sc).unwrap();
                assert!((a - b).abs() <= 1e-12 * a, "{a} {b}");
                let c = sinr_de(k, &p, &sc).unwrap();
                let d = sinr_linear(de.filters.column(k).as_slice(), k, &p, &sc).unwrap();
                assert!((c - d).abs() <= 1e-12 * c, "{c} {d}");
            }
        }
    }

    #[test]
    fn mmse_formula_matches_filter_output() {
        for seed in 0..5 {
            let sc = random_scenario(15, 24, seed);
            let p = random_powers(&sc, seed + 7);
            for k in 0..15 {
                let c = mmse_filter(k, &p, &sc).unwrap();
                let a = sinr_mmse(k, &p, &sc).unwrap();
                let b = sinr_linear(c.as_slice(), k, &p, &sc).unwrap();
                assert!((a - b).abs() <= 1e-9 * a, "{a} {b}");
            }
        }
    }

    #[test]
    fn engine_matches_single_user_routes() {
        // K < N (thin QR basis) and K > N (chip basis).
        for &(k, n) in &[(12usize, 30usize), (20, 8)] {
            let sc = random_scenario(k, n, 5);
            let p = random_powers(&sc, 1);
            for kind in ReceiverKind::ALL {
                if !kind.applicable(k, n) {
                    assert!(SinrEngine::new(&sc, kind).is_err());
                    continue;
                }
                let engine = SinrEngine::new(&sc, kind).unwrap();
                let got = engine.sinrs(&p).unwrap();
                for u in 0..k {
                    let want = match kind {
                        ReceiverKind::Mf => sinr_mf(u, &p, &sc),
                        ReceiverKind::De => sinr_de(u, &p, &sc),
                        ReceiverKind::Mmse => sinr_mmse(u, &p, &sc),
                    }
                    .unwrap();
                    assert!((got[u] - want).abs() <= 1e-9 * want, "{kind} {u}: {} vs {want}", got[u]);
                }
            }
        }
    }

    #[test]
    fn de_ignores_interferer_powers() {
        let sc = random_scenario(8, 20, 2);
        let p = random_powers(&sc, 3);
        let mut q = p.clone();
        for (j, v) in q.iter_mut().enumerate() {
            if j != 0 {
                *v *= 1e3;
            }
        }
        assert_eq!(sinr_de(0, &p, &sc).unwrap(), sinr_de(0, &q, &sc).unwrap());
    }

    #[test]
    fn receiver_kind_parsing() {
        assert_eq!("MMSE".parse::<ReceiverKind>().unwrap(), ReceiverKind::Mmse);
        assert!("zf".parse::<ReceiverKind>().is_err());
        assert!(!ReceiverKind::De.applicable(100, 50));
        assert!(ReceiverKind::De.applicable(100, 100));
    }

    #[test]
    fn rejects_bad_inputs() {
        let sc = random_scenario(4, 8, 1);
        assert!(sinr_mf(0, &[1.0, 1.0], &sc).is_err());
        assert!(sinr_mf(0, &[1.0, -1.0, 1.0, 1.0], &sc).is_err());
        assert!(sinr_linear(&[0.0; 8], 0, &[1.0; 4], &sc).is_err());
        assert!(mmse_filter(0, &[0.0, 1.0, 1.0, 1.0], &sc).is_err());
    }
}
