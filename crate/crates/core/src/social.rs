//! SINR-balanced social optima.
//!
//! All nodes are held at a common SINR `γ` and `γ` is chosen to maximize
//! `Σ α_k u_k`. For MF the balanced powers solve a linear system; for DE the
//! optimum coincides with the noncooperative point; for MMSE the large-system
//! received power `κ(γ)` turns the problem into maximizing `f(γ)/κ(γ)`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::asymptotic::{mmse_received_power, AsymptoticParams, InterferenceProfile};
use crate::error::{Error, Result};
use crate::game::{nash_solve, target_sinr, EfficiencyFunction, GameConfig};
use crate::network::{estimate_q, Scenario};
use crate::receivers::{ReceiverKind, SinrEngine};
use crate::roots::{bisect, golden_max};

/// Lowest SINR the MF feasibility scan will try.
const MF_SCAN_FLOOR: f64 = 1e-9;
const MF_SCAN_START: f64 = 1e-3;
const MF_SCAN_STEP: f64 = 1.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() || weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(Error::InvalidArgument("weights must be finite and nonnegative".into()));
        }
        if weights.iter().all(|&w| w == 0.0) {
            return Err(Error::InvalidArgument("weights must not all be zero".into()));
        }
        Ok(Self(weights))
    }

    pub fn uniform(k: usize) -> Self {
        Self(vec![1.0; k.max(1)])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    fn check_len(&self, k: usize) -> Result<()> {
        if self.0.len() != k {
            return Err(Error::InvalidArgument(format!("{} weights for {k} nodes", self.0.len())));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalancedSolution {
    pub receiver: ReceiverKind,
    pub target_sinr: f64,
    /// Balanced powers, not clipped at the power cap.
    pub powers: Vec<f64>,
    /// `Σ α_k u_k` at the balanced point.
    pub objective: f64,
    pub feasible: bool,
    pub diagnostic: Option<String>,
}

impl BalancedSolution {
    fn infeasible(receiver: ReceiverKind, diagnostic: String) -> Self {
        Self {
            receiver,
            target_sinr: f64::NAN,
            powers: Vec::new(),
            objective: 0.0,
            feasible: false,
            diagnostic: Some(diagnostic),
        }
    }
}

/// `Σ α_k (L/M) R f(γ_k) / p_k`.
pub fn weighted_objective(powers: &[f64], sinrs: &[f64], weights: &WeightVector, cfg: &GameConfig) -> Result<f64> {
    weights.check_len(powers.len())?;
    if sinrs.len() != powers.len() {
        return Err(Error::InvalidArgument("powers and SINRs differ in length".into()));
    }
    Ok(weights
        .as_slice()
        .iter()
        .zip(powers.iter().zip(sinrs))
        .map(|(&a, (&p, &g))| a * cfg.utility(g, p))
        .sum())
}

/// Matched-filter balancing system `(B + (1/γ + 1) D) p = σ² 1`.
///
/// `B_kj = -g_{j→m(k)} ρ_kj²` over the interferers of `k`, with the diagonal
/// `B_kk = -h_k²`; `D = diag(h_k²)`.
#[derive(Debug, Clone)]
pub struct MfSystem {
    b: DMatrix<f64>,
    d: DVector<f64>,
    noise: f64,
}

impl MfSystem {
    pub fn new(sc: &Scenario) -> Self {
        let k = sc.node_count();
        let rho = sc.sequences.rho();
        let net = &sc.network;
        let mut b = DMatrix::zeros(k, k);
        for i in 0..k {
            let r = net.receiver_of(i);
            for j in 0..k {
                if j == i {
                    b[(i, i)] = -net.primary_power_gain(i);
                } else if j != r {
                    b[(i, j)] = -net.power_gain(j, r) * rho[(i, j)] * rho[(i, j)];
                }
            }
        }
        let d = DVector::from_fn(k, |i, _| net.primary_power_gain(i));
        Self {
            b,
            d,
            noise: sc.noise_power(),
        }
    }

    /// `γB + (1+γ)D`.
    fn scaled(&self, gamma: f64) -> DMatrix<f64> {
        let mut m = &self.b * gamma;
        for i in 0..self.d.len() {
            m[(i, i)] += (1.0 + gamma) * self.d[i];
        }
        m
    }

    fn solve(&self, gamma: f64, rhs: &DVector<f64>) -> Result<DVector<f64>> {
        let x = self.scaled(gamma).lu().solve(rhs).ok_or_else(|| Error::Infeasible {
            sinr: gamma,
            reason: "balancing matrix is singular".into(),
        })?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Infeasible {
                sinr: gamma,
                reason: "balancing solve is not finite".into(),
            });
        }
        Ok(x)
    }

    /// Balanced powers `p(γ) = γσ² (γB + (1+γ)D)⁻¹ 1`.
    pub fn powers(&self, gamma: f64) -> Result<DVector<f64>> {
        if !(gamma > 0.0) {
            return Err(Error::InvalidArgument(format!("target SINR must be positive, got {gamma}")));
        }
        let ones = DVector::from_element(self.d.len(), 1.0);
        let p = self.solve(gamma, &ones)? * (gamma * self.noise);
        if let Some(k) = p.iter().position(|&v| v <= 0.0) {
            return Err(Error::Infeasible {
                sinr: gamma,
                reason: format!("node {k} would need nonpositive power"),
            });
        }
        Ok(p)
    }

    /// `dp/dγ = σ² M⁻¹ D M⁻¹ 1` with `M = γB + (1+γ)D`.
    pub fn derivative(&self, gamma: f64) -> Result<DVector<f64>> {
        let ones = DVector::from_element(self.d.len(), 1.0);
        let x = self.solve(gamma, &ones)?;
        let dx = x.component_mul(&self.d);
        Ok(self.solve(gamma, &dx)? * self.noise)
    }

    /// MF SINRs at `p`, from the same matrices.
    pub fn sinrs(&self, p: &DVector<f64>) -> Vec<f64> {
        (0..self.d.len())
            .map(|k| {
                // -row·p includes the diagonal term h_k² p_k; drop it.
                let interference = -self.b.row(k).transpose().dot(p) - self.d[k] * p[k];
                self.d[k] * p[k] / (self.noise + interference)
            })
            .collect()
    }

    fn feasible(&self, gamma: f64) -> bool {
        self.checked_powers(gamma).is_ok()
    }

    /// Balanced powers validated by recomputing the SINRs.
    fn checked_powers(&self, gamma: f64) -> Result<DVector<f64>> {
        let p = self.powers(gamma)?;
        let worst = self
            .sinrs(&p)
            .iter()
            .map(|g| (g / gamma - 1.0).abs())
            .fold(0.0, f64::max);
        if worst > 1e-8 {
            return Err(Error::Infeasible {
                sinr: gamma,
                reason: format!("back-substituted SINRs off by {worst:e}"),
            });
        }
        Ok(p)
    }
}

/// Balanced MF powers at SINR `γ`.
pub fn mf_balanced_powers(gamma: f64, sc: &Scenario) -> Result<Vec<f64>> {
    Ok(MfSystem::new(sc).checked_powers(gamma)?.iter().copied().collect())
}

pub fn mf_power_derivative(gamma: f64, sc: &Scenario) -> Result<Vec<f64>> {
    let sys = MfSystem::new(sc);
    sys.powers(gamma)?;
    Ok(sys.derivative(gamma)?.iter().copied().collect())
}

/// Largest SINR range `[lo, hi]` on which the MF system is feasible.
fn mf_feasible_range(sys: &MfSystem, upper: f64) -> Option<(f64, f64)> {
    let mut lo = MF_SCAN_START;
    while !sys.feasible(lo) {
        lo *= 0.5;
        if lo < MF_SCAN_FLOOR {
            return None;
        }
    }
    let mut last = lo;
    loop {
        let next = last * MF_SCAN_STEP;
        if next >= upper {
            return Some((lo, upper));
        }
        if !sys.feasible(next) {
            // Narrow the edge between the last feasible and first infeasible point.
            let (mut a, mut b) = (last, next);
            while b - a > 1e-10 * b {
                let m = 0.5 * (a + b);
                if sys.feasible(m) {
                    a = m;
                } else {
                    b = m;
                }
            }
            return Some((lo, a));
        }
        last = next;
    }
}

/// MF social optimum: maximizes `f(γ) Σ α_k / p_k(γ)` over the feasible range.
pub fn mf_social_optimum(weights: &WeightVector, sc: &Scenario, cfg: &GameConfig) -> Result<BalancedSolution> {
    weights.check_len(sc.node_count())?;
    let eff = cfg.efficiency();
    let gstar = target_sinr(&eff)?.gamma;
    let sys = MfSystem::new(sc);
    let Some((lo, hi)) = mf_feasible_range(&sys, 10.0 * gstar) else {
        return Ok(BalancedSolution::infeasible(
            ReceiverKind::Mf,
            format!("no feasible SINR at or above {MF_SCAN_FLOOR:e}"),
        ));
    };
    let alpha = DVector::from_column_slice(weights.as_slice());
    let ln_phi = |g: f64| -> f64 {
        match sys.powers(g) {
            Ok(p) => eff.ln_value(g) + alpha.component_div(&p).sum().ln(),
            Err(_) => f64::NEG_INFINITY,
        }
    };
    // d ln Φ / dγ = f'/f - Σ α p'/p² / Σ α/p
    let slope = |g: f64| -> f64 {
        let (Ok(p), Ok(dp)) = (sys.powers(g), sys.derivative(g)) else {
            return f64::NAN;
        };
        let s: f64 = (0..p.len()).map(|k| alpha[k] / p[k]).sum();
        let ds: f64 = (0..p.len()).map(|k| alpha[k] * dp[k] / (p[k] * p[k])).sum();
        eff.log_derivative(g) - ds / s
    };

    // Log-spaced scan locates the best interior bracket.
    let steps = 400;
    let ratio = (hi / lo).ln();
    let grid: Vec<f64> = (0..=steps)
        .map(|i| (lo.ln() + ratio * i as f64 / steps as f64).exp())
        .collect();
    let vals: Vec<f64> = grid.iter().map(|&g| ln_phi(g)).collect();
    let best = (0..vals.len()).max_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap_or(0);
    let a = grid[best.saturating_sub(1)];
    let b = grid[(best + 1).min(steps)];

    let gamma = if slope(a) > 0.0 && slope(b) < 0.0 {
        bisect(slope, a, b, 1e-12 * b, f64::INFINITY, "MF social optimum")?.root
    } else {
        // Optimum sits at a range end or the slope is unusable there.
        golden_max(ln_phi, a, b, 1e-12 * b).0
    };
    let p = sys.checked_powers(gamma)?;
    let powers: Vec<f64> = p.iter().copied().collect();
    let objective = weighted_objective(&powers, &vec![gamma; powers.len()], weights, cfg)?;
    Ok(BalancedSolution {
        receiver: ReceiverKind::Mf,
        target_sinr: gamma,
        powers,
        objective,
        feasible: true,
        diagnostic: Some(format!("feasible SINR range [{lo:.3e}, {hi:.6}]")),
    })
}

/// DE social optimum, identical to the noncooperative point.
pub fn de_social_optimum(weights: &WeightVector, sc: &Scenario, cfg: &GameConfig) -> Result<BalancedSolution> {
    weights.check_len(sc.node_count())?;
    let de_cfg = GameConfig {
        receiver: ReceiverKind::De,
        ..cfg.clone()
    };
    let out = nash_solve(sc, &de_cfg)?;
    let objective = weighted_objective(&out.powers, &out.sinrs, weights, cfg)?;
    Ok(BalancedSolution {
        receiver: ReceiverKind::De,
        target_sinr: out.target_sinr,
        powers: out.powers,
        objective,
        feasible: true,
        diagnostic: None,
    })
}

/// Balanced DE objective `f(γ) Σ α_k / p_k(γ)` with `p_k(γ) = γ c_k`, scaled by `(L/M) R`.
pub fn de_balanced_objective(gamma: f64, weights: &WeightVector, sc: &Scenario, cfg: &GameConfig) -> Result<f64> {
    weights.check_len(sc.node_count())?;
    let engine = SinrEngine::new(sc, ReceiverKind::De)?;
    let per_watt = engine.sinr_per_watt(&vec![0.0; sc.node_count()])?;
    let s: f64 = weights.as_slice().iter().zip(&per_watt).map(|(a, w)| a * w).sum();
    Ok(cfg.goodput_scale() * cfg.efficiency().value(gamma) / gamma * s)
}

/// `κ(γ) = γσ² / (1 - βγ(q/(1+γ) + (1-q)ζ(γ)))`.
pub fn mmse_kappa(gamma: f64, params: &AsymptoticParams, profile: &InterferenceProfile) -> Result<f64> {
    mmse_received_power(gamma, params, profile)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MmseOptimum {
    pub gamma: f64,
    /// Received power `κ` at the optimum.
    pub kappa: f64,
    /// `f(γ)/κ(γ)` at the optimum.
    pub objective: f64,
    /// Independent golden-section maximizer of `ln f - ln κ`.
    pub golden_gamma: f64,
    /// Upper end of the searched range (`γ*` or the achievability edge).
    pub upper: f64,
}

/// Load term `D(γ) = 1 - βγ(q/(1+γ) + (1-q)ζ)` and its derivative.
fn load_margin(gamma: f64, params: &AsymptoticParams, profile: &InterferenceProfile) -> Result<(f64, f64)> {
    let (b, q) = (params.load, params.sharing);
    let (z, dz) = if q < 1.0 && b > 0.0 {
        (profile.zeta(gamma)?.value, profile.zeta_derivative(gamma)?)
    } else {
        (0.0, 0.0)
    };
    let d = 1.0 - b * gamma * (q / (1.0 + gamma) + (1.0 - q) * z);
    let dd = -b * q / ((1.0 + gamma) * (1.0 + gamma)) - b * (1.0 - q) * (z + gamma * dz);
    Ok((d, dd))
}

/// Maximizer of `f(γ)/κ(γ)`.
///
/// Solved as the root of `f'/f - 1/γ + D'/D`, which lies below `γ*`
/// whenever the load term grows with `γ`.
pub fn mmse_social_optimum_sinr(
    params: &AsymptoticParams,
    profile: &InterferenceProfile,
    eff: &EfficiencyFunction,
) -> Result<MmseOptimum> {
    params.validate()?;
    let gstar = target_sinr(eff)?.gamma;
    let lo = 1e-3;
    if load_margin(lo, params, profile)?.0 <= 0.0 {
        return Err(Error::NotAchievable {
            sinr: lo,
            load_term: 1.0 - load_margin(lo, params, profile)?.0,
        });
    }
    let mut hi = gstar;
    if load_margin(hi, params, profile)?.0 <= 0.0 {
        let edge = bisect(
            |g| load_margin(g, params, profile).map(|m| m.0).unwrap_or(f64::NAN),
            lo,
            hi,
            1e-14 * hi,
            f64::INFINITY,
            "MMSE achievability edge",
        )?;
        hi = edge.lo;
    }
    let stationarity = |g: f64| -> f64 {
        match load_margin(g, params, profile) {
            Ok((d, dd)) if d > 0.0 => eff.log_derivative(g) - 1.0 / g + dd / d,
            _ => f64::NEG_INFINITY,
        }
    };
    let ln_obj = |g: f64| -> f64 {
        match load_margin(g, params, profile) {
            Ok((d, _)) if d > 0.0 => eff.ln_value(g) - g.ln() + d.ln(),
            _ => f64::NEG_INFINITY,
        }
    };
    let s_hi = stationarity(hi);
    let gamma = if s_hi >= 0.0 {
        // Only when the load term is flat: the optimum is γ* itself.
        hi
    } else {
        bisect(stationarity, lo, hi, 1e-13 * hi, f64::INFINITY, "MMSE social optimum")?.root
    };
    let (golden_gamma, _) = golden_max(ln_obj, lo, hi, 1e-12 * hi);
    let kappa = mmse_kappa(gamma, params, profile)?;
    Ok(MmseOptimum {
        gamma,
        kappa,
        objective: eff.value(gamma) / kappa,
        golden_gamma,
        upper: hi,
    })
}

/// Large-system parameters for a scenario: `β = K/N`, the network's `q`,
/// and its empirical gain pairs.
pub fn mmse_params_for(sc: &Scenario) -> Result<(AsymptoticParams, InterferenceProfile)> {
    let q = if sc.node_count() >= 2 { estimate_q(&sc.network)? } else { 0.0 };
    let params = AsymptoticParams::new(sc.load(), q, sc.noise_power())?;
    let profile = match InterferenceProfile::from_network(&sc.network) {
        Ok(p) => p,
        // No cross-receiver interferers at all: ζ never enters.
        Err(Error::TooFewNodes) => InterferenceProfile::Sampled { pairs: vec![(1.0, 0.0)] },
        Err(e) => return Err(e),
    };
    Ok((params, profile))
}

/// `p_k = κ(γ) / h_k²`.
pub fn mmse_socopt_powers(
    gamma: f64,
    sc: &Scenario,
    params: &AsymptoticParams,
    profile: &InterferenceProfile,
) -> Result<Vec<f64>> {
    let kappa = mmse_kappa(gamma, params, profile)?;
    Ok((0..sc.node_count())
        .map(|k| kappa / sc.network.primary_power_gain(k))
        .collect())
}

/// MMSE social optimum for a scenario from its own `q` and gain pairs.
pub fn mmse_social_optimum(weights: &WeightVector, sc: &Scenario, cfg: &GameConfig) -> Result<BalancedSolution> {
    weights.check_len(sc.node_count())?;
    let (params, profile) = mmse_params_for(sc)?;
    let opt = match mmse_social_optimum_sinr(&params, &profile, &cfg.efficiency()) {
        Ok(o) => o,
        Err(e @ (Error::NotAchievable { .. } | Error::NoRoot { .. })) => {
            return Ok(BalancedSolution::infeasible(ReceiverKind::Mmse, e.to_string()))
        }
        Err(e) => return Err(e),
    };
    let powers = mmse_socopt_powers(opt.gamma, sc, &params, &profile)?;
    let objective = weighted_objective(&powers, &vec![opt.gamma; powers.len()], weights, cfg)?;
    Ok(BalancedSolution {
        receiver: ReceiverKind::Mmse,
        target_sinr: opt.gamma,
        powers,
        objective,
        feasible: true,
        diagnostic: Some(format!("beta {:.4}, q {:.6}", params.load, params.sharing)),
    })
}

pub fn social_optimum(
    kind: ReceiverKind,
    weights: &WeightVector,
    sc: &Scenario,
    cfg: &GameConfig,
) -> Result<BalancedSolution> {
    match kind {
        ReceiverKind::Mf => mf_social_optimum(weights, sc, cfg),
        ReceiverKind::De => de_social_optimum(weights, sc, cfg),
        ReceiverKind::Mmse => mmse_social_optimum(weights, sc, cfg),
    }
}

/// A balanced solution played in the finite system: powers clipped at the
/// cap and SINRs recomputed exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub receiver: ReceiverKind,
    pub target_sinr: f64,
    pub powers: Vec<f64>,
    pub sinrs: Vec<f64>,
    pub utilities: Vec<f64>,
    /// Nodes whose balanced power exceeded the cap.
    pub capped: Vec<usize>,
}

impl OperatingPoint {
    pub fn mean_utility(&self) -> f64 {
        self.utilities.iter().sum::<f64>() / self.utilities.len() as f64
    }

    pub fn capped_fraction(&self) -> f64 {
        self.capped.len() as f64 / self.powers.len() as f64
    }
}

pub fn realize(sol: &BalancedSolution, sc: &Scenario, cfg: &GameConfig) -> Result<OperatingPoint> {
    if !sol.feasible {
        return Err(Error::Infeasible {
            sinr: sol.target_sinr,
            reason: sol.diagnostic.clone().unwrap_or_default(),
        });
    }
    let capped: Vec<usize> = (0..sol.powers.len()).filter(|&k| sol.powers[k] > cfg.max_power).collect();
    let powers: Vec<f64> = sol.powers.iter().map(|&p| p.min(cfg.max_power)).collect();
    let engine = SinrEngine::new(sc, sol.receiver)?;
    let sinrs = engine.sinrs(&powers)?;
    let utilities = crate::game::utilities(&powers, &sinrs, cfg);
    Ok(OperatingPoint {
        receiver: sol.receiver,
        target_sinr: sol.target_sinr,
        powers,
        sinrs,
        utilities,
        capped,
    })
}
