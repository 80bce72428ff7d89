//! The noncooperative power-control game.
//!
//! Each node maximizes `u_k = (L/M) R f(γ_k) / p_k` over `p_k ∈ [0, P_max]`.
//! With an SINR linear in own power the best response is the power that
//! puts the node at the target SINR `γ*` solving `f(γ) = γ f'(γ)`, clipped
//! at `P_max`. The equilibrium is found by synchronous best-response sweeps
//! from the all-zero power vector.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::Scenario;
use crate::receivers::{ReceiverKind, SinrEngine};
use crate::roots::bisect;

/// Packet success approximation `f(γ) = (1 - e^{-γ})^M`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EfficiencyFunction {
    pub packet_bits: u32,
}

impl EfficiencyFunction {
    pub fn new(packet_bits: u32) -> Self {
        Self { packet_bits }
    }

    fn m(&self) -> f64 {
        self.packet_bits as f64
    }

    /// `ln f(γ)`; `-inf` at `γ <= 0`.
    pub fn ln_value(&self, gamma: f64) -> f64 {
        if gamma <= 0.0 {
            return f64::NEG_INFINITY;
        }
        self.m() * (-(-gamma).exp_m1()).ln()
    }

    pub fn value(&self, gamma: f64) -> f64 {
        if gamma <= 0.0 {
            0.0
        } else {
            self.ln_value(gamma).exp()
        }
    }

    /// `f'(γ) = M e^{-γ} (1 - e^{-γ})^{M-1}`.
    pub fn derivative(&self, gamma: f64) -> f64 {
        let m = self.m();
        if gamma <= 0.0 {
            return if self.packet_bits == 1 { 1.0 } else { 0.0 };
        }
        m * (-gamma + (m - 1.0) * (-(-gamma).exp_m1()).ln()).exp()
    }

    /// `f'(γ)/f(γ) = M / (e^γ - 1)`.
    pub fn log_derivative(&self, gamma: f64) -> f64 {
        self.m() / gamma.exp_m1()
    }

    /// The unique positive root of `f(γ) - γ f'(γ)`.
    pub fn target_sinr(&self) -> Result<TargetSinr> {
        target_sinr(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetSinr {
    pub gamma: f64,
    /// Final bisection bracket; `f - γ f'` changes sign across it.
    pub bracket: (f64, f64),
}

/// Solves `f(γ*) = γ* f'(γ*)`.
///
/// For this efficiency function the condition reduces to
/// `e^γ - 1 = M γ`, which has a positive root only for `M >= 2`.
pub fn target_sinr(f: &EfficiencyFunction) -> Result<TargetSinr> {
    if f.packet_bits < 2 {
        return Err(Error::DegenerateEfficiency {
            packet_bits: f.packet_bits,
        });
    }
    let m = f.m();
    // sign(f - γ f') = sign(1 - M γ / (e^γ - 1))
    let balance = |g: f64| 1.0 - m * g / g.exp_m1();
    let lo = m.ln();
    let hi = 2.0 * m.ln() + 2.0;
    let b = bisect(balance, lo, hi, 1e-13, f64::INFINITY, "target SINR")?;
    let gamma = b.root;
    let residual = f.value(gamma) - gamma * f.derivative(gamma);
    if residual.abs() > 1e-12 || b.hi - b.lo > 1e-10 {
        return Err(Error::NoRoot {
            what: "target SINR".into(),
            lo: b.lo,
            hi: b.hi,
        });
    }
    Ok(TargetSinr {
        gamma,
        bracket: (b.lo, b.hi),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GameConfig {
    /// Information bits per packet (`L`).
    pub info_bits: u32,
    /// Total bits per packet (`M`).
    pub packet_bits: u32,
    /// Transmission rate in bits per second.
    pub rate: f64,
    /// Power cap in watts.
    pub max_power: f64,
    pub receiver: ReceiverKind,
    /// Relative power change that ends the sweeps.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Denominator floor for the relative change test, watts.
    pub power_floor: f64,
}

impl Default for GameConfig {
    fn default() -> Self {
        Self {
            info_bits: 100,
            packet_bits: 100,
            rate: 1e5,
            max_power: 1.0,
            receiver: ReceiverKind::Mmse,
            tolerance: 1e-10,
            max_iterations: 10_000,
            power_floor: 1e-18,
        }
    }
}

impl GameConfig {
    pub fn validate(&self) -> Result<()> {
        if self.info_bits == 0 || self.info_bits > self.packet_bits {
            return Err(Error::InvalidConfig("need 0 < L <= M".into()));
        }
        if !(self.rate > 0.0) {
            return Err(Error::InvalidConfig("rate must be positive".into()));
        }
        if !(self.max_power > 0.0 && self.max_power.is_finite()) {
            return Err(Error::InvalidConfig("max_power must be positive".into()));
        }
        if !(self.tolerance > 0.0) || self.max_iterations == 0 {
            return Err(Error::InvalidConfig("tolerance and max_iterations must be positive".into()));
        }
        Ok(())
    }

    pub fn efficiency(&self) -> EfficiencyFunction {
        EfficiencyFunction::new(self.packet_bits)
    }

    /// `(L/M) R`, bits per second of goodput at `f = 1`.
    pub fn goodput_scale(&self) -> f64 {
        self.info_bits as f64 / self.packet_bits as f64 * self.rate
    }

    /// Bits per joule; zero at zero power.
    pub fn utility(&self, sinr: f64, power: f64) -> f64 {
        if power <= 0.0 {
            return 0.0;
        }
        self.goodput_scale() * self.efficiency().value(sinr) / power
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BestResponse {
    pub power: f64,
    /// The unconstrained best response exceeded the cap (or was infinite).
    pub capped: bool,
}

/// `min(P_max, γ* / (γ_k / p_k))`.
pub fn best_response_power(sinr_per_watt: f64, target: f64, max_power: f64) -> BestResponse {
    let wanted = target / sinr_per_watt;
    if !(wanted.is_finite() && sinr_per_watt > 0.0) || wanted > max_power {
        BestResponse {
            power: max_power,
            capped: true,
        }
    } else {
        BestResponse {
            power: wanted,
            capped: false,
        }
    }
}

/// Utilities for given powers and SINRs.
pub fn utilities(powers: &[f64], sinrs: &[f64], cfg: &GameConfig) -> Vec<f64> {
    powers.iter().zip(sinrs).map(|(&p, &g)| cfg.utility(g, p)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameOutcome {
    pub receiver: ReceiverKind,
    pub target_sinr: f64,
    pub powers: Vec<f64>,
    pub sinrs: Vec<f64>,
    pub utilities: Vec<f64>,
    pub converged: bool,
    /// Sweeps that moved the power vector (the confirming sweep is not counted).
    pub iterations: usize,
    /// Nodes whose unconstrained best response exceeds the cap.
    pub capped: Vec<usize>,
    /// Whether the sweep sequence was componentwise nondecreasing after the first sweep.
    pub monotone: bool,
}

impl GameOutcome {
    pub fn mean_utility(&self) -> f64 {
        self.utilities.iter().sum::<f64>() / self.utilities.len() as f64
    }

    pub fn capped_fraction(&self) -> f64 {
        self.capped.len() as f64 / self.powers.len() as f64
    }
}

/// Nash equilibrium of the game with the receiver fixed to `cfg.receiver`.
///
/// With `cfg.receiver = Mmse` this is also the equilibrium of the game in
/// which nodes pick their receivers, since MMSE maximizes SINR for any power
/// profile.
pub fn nash_solve(sc: &Scenario, cfg: &GameConfig) -> Result<GameOutcome> {
    cfg.validate()?;
    let engine = SinrEngine::new(sc, cfg.receiver)?;
    let target = target_sinr(&cfg.efficiency())?.gamma;
    nash_solve_with(&engine, cfg, target)
}

/// Best-response sweeps on a prepared engine with an explicit target SINR.
pub fn nash_solve_with(engine: &SinrEngine<'_>, cfg: &GameConfig, target: f64) -> Result<GameOutcome> {
    let k_count = engine.scenario().node_count();
    let mut powers = vec![0.0; k_count];
    let mut converged = false;
    let mut monotone = true;
    let mut iterations = 0;
    let mut capped = vec![false; k_count];

    for sweep in 1..=cfg.max_iterations {
        let per_watt = engine.sinr_per_watt(&powers)?;
        let mut next = Vec::with_capacity(k_count);
        let mut delta: f64 = 0.0;
        for k in 0..k_count {
            let br = best_response_power(per_watt[k], target, cfg.max_power);
            capped[k] = br.capped;
            let old = powers[k];
            if sweep > 1 && br.power < old * (1.0 - 1e-9) {
                monotone = false;
            }
            delta = delta.max((br.power - old).abs() / old.max(cfg.power_floor));
            next.push(br.power);
        }
        powers = next;
        if delta <= cfg.tolerance {
            converged = true;
            break;
        }
        iterations = sweep;
    }
    if !converged {
        log::warn!(
            "{} best-response sweeps did not converge after {} iterations",
            engine.kind(),
            cfg.max_iterations
        );
    }

    let sinrs = engine.sinrs(&powers)?;
    let utilities = utilities(&powers, &sinrs, cfg);
    Ok(GameOutcome {
        receiver: engine.kind(),
        target_sinr: target,
        powers,
        sinrs,
        utilities,
        converged,
        iterations,
        capped: (0..k_count).filter(|&k| capped[k]).collect(),
        monotone,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::NetworkConfig;

    #[test]
    fn efficiency_basics() {
        let f = EfficiencyFunction::new(100);
        assert_eq!(f.value(0.0), 0.0);
        assert!(f.value(50.0) > 0.999_999_999);
        let one = EfficiencyFunction::new(1);
        assert!((one.value(2f64.ln()) - 0.5).abs() < 1e-15);
        let mut prev = 0.0;
        for i in 1..200 {
            let v = f.value(i as f64 * 0.1);
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn derivative_matches_central_differences() {
        let f = EfficiencyFunction::new(100);
        for &g in &[3.0, 6.47, 9.0] {
            let h = 1e-5;
            let fd = (f.value(g + h) - f.value(g - h)) / (2.0 * h);
            let an = f.derivative(g);
            assert!((fd - an).abs() <= 1e-6 * an, "{g}: {fd} vs {an}");
            assert!((f.log_derivative(g) - an / f.value(g)).abs() < 1e-12 * an / f.value(g));
        }
    }

    #[test]
    fn target_for_hundred_bit_packets() {
        let t = target_sinr(&EfficiencyFunction::new(100)).unwrap();
        assert!((t.gamma - 6.47).abs() < 0.01, "{}", t.gamma);
        let f = EfficiencyFunction::new(100);
        let g = |x: f64| f.value(x) - x * f.derivative(x);
        assert!(g(t.bracket.0) * g(t.bracket.1) <= 0.0);
        assert!(t.bracket.1 - t.bracket.0 <= 1e-10);
    }

    #[test]
    fn target_for_two_bit_packets() {
        // e^γ = 1 + 2γ, solved independently by plain bisection.
        let (mut lo, mut hi) = (0.5f64, 3.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid.exp() - 1.0 - 2.0 * mid < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let t = target_sinr(&EfficiencyFunction::new(2)).unwrap();
        assert!((t.gamma - lo).abs() < 1e-10);
        assert!((t.gamma - 1.2564).abs() < 1e-4);
    }

    #[test]
    fn single_bit_packets_are_degenerate() {
        assert!(matches!(
            target_sinr(&EfficiencyFunction::new(1)),
            Err(Error::DegenerateEfficiency { packet_bits: 1 })
        ));
    }

    #[test]
    fn best_response_cap_rule() {
        let br = best_response_power(1.0, 6.47, 100.0);
        assert_eq!(br, BestResponse { power: 6.47, capped: false });
        let br = best_response_power(1e-3, 6.47, 1.0);
        assert_eq!(br, BestResponse { power: 1.0, capped: true });
        assert!(best_response_power(0.0, 6.47, 1.0).capped);
    }

    #[test]
    fn utility_arithmetic() {
        let cfg = GameConfig::default();
        // f = 0.5 at the γ where (1 - e^-γ)^100 = 0.5
        let g = -(1.0 - 0.5f64.powf(0.01)).ln();
        assert!((cfg.utility(g, 1e-3) - 5e7).abs() < 1e-3);
        assert!((cfg.utility(g, 2e-3) - 2.5e7).abs() < 1e-3);
        assert_eq!(cfg.utility(g, 0.0), 0.0);
    }

    #[test]
    fn one_node_game() {
        let ncfg = NetworkConfig {
            node_count: 1,
            seed: 4,
            ..Default::default()
        };
        let sc = Scenario::generate(&ncfg, 16, 1).unwrap();
        let gs = target_sinr(&EfficiencyFunction::new(100)).unwrap().gamma;
        for kind in ReceiverKind::ALL {
            let cfg = GameConfig {
                receiver: kind,
                ..Default::default()
            };
            let out = nash_solve(&sc, &cfg).unwrap();
            assert!(out.converged);
            assert_eq!(out.iterations, 1);
            let want = gs * 5e-16 / sc.network.primary_power_gain(0);
            assert!((out.powers[0] - want).abs() <= 1e-12 * want);
            assert!((out.sinrs[0] - gs).abs() < 1e-9);
        }
    }

    #[test]
    fn invalid_game_config() {
        let bad = GameConfig { info_bits: 200, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = GameConfig { max_power: 0.0, ..Default::default() };
        assert!(bad.validate().is_err());
    }

    fn random_scenario(k: usize, n: usize, seed: u64) -> Scenario {
        let ncfg = NetworkConfig {
            node_count: k,
            seed,
            ..Default::default()
        };
        Scenario::generate(&ncfg, n, seed + 100).unwrap()
    }

    #[test]
    fn no_profitable_unilateral_deviation() {
        let sc = random_scenario(12, 32, 3);
        for kind in ReceiverKind::ALL {
            let cfg = GameConfig {
                receiver: kind,
                ..Default::default()
            };
            let out = nash_solve(&sc, &cfg).unwrap();
            assert!(out.converged);
            let engine = SinrEngine::new(&sc, kind).unwrap();
            for k in 0..sc.node_count() {
                let base = out.utilities[k];
                for step in 1..=40 {
                    let mut p = out.powers.clone();
                    p[k] = cfg.max_power * step as f64 / 40.0;
                    let g = engine.sinrs(&p).unwrap();
                    let u = cfg.utility(g[k], p[k]);
                    assert!(u <= base * (1.0 + 1e-6), "{kind} node {k}: {u} > {base}");
                }
                for scale in [0.5, 0.9, 0.99, 1.01, 1.1] {
                    let mut p = out.powers.clone();
                    p[k] = (p[k] * scale).min(cfg.max_power);
                    let g = engine.sinrs(&p).unwrap();
                    assert!(cfg.utility(g[k], p[k]) <= base * (1.0 + 1e-9));
                }
            }
        }
    }

    #[test]
    fn decorrelator_needs_one_sweep() {
        let sc = random_scenario(10, 40, 8);
        let cfg = GameConfig {
            receiver: ReceiverKind::De,
            ..Default::default()
        };
        let out = nash_solve(&sc, &cfg).unwrap();
        assert!(out.converged);
        assert_eq!(out.iterations, 1);
    }

    #[test]
    fn sweeps_from_zero_are_monotone() {
        for seed in 0..4 {
            let sc = random_scenario(20, 24, seed);
            for kind in [ReceiverKind::Mf, ReceiverKind::Mmse] {
                let cfg = GameConfig {
                    receiver: kind,
                    ..Default::default()
                };
                let out = nash_solve(&sc, &cfg).unwrap();
                assert!(out.converged);
                assert!(out.monotone, "{kind} seed {seed}");
            }
        }
    }

    #[test]
    fn uncapped_nodes_sit_at_target() {
        let sc = random_scenario(16, 64, 5);
        let out = nash_solve(&sc, &GameConfig::default()).unwrap();
        for k in 0..sc.node_count() {
            if !out.capped.contains(&k) {
                assert!((out.sinrs[k] - out.target_sinr).abs() < 1e-6);
            } else {
                assert_eq!(out.powers[k], 1.0);
                assert!(out.sinrs[k] < out.target_sinr);
            }
        }
    }
}
