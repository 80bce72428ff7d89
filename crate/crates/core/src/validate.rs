//! Self-checks run by `mhcdma validate`.
//!
//! Each check compares a solver against an independent computation on small
//! random scenarios and reports a one-line verdict.

use rand::Rng;

use crate::asymptotic::{effective_interference, AsymptoticParams, GainLaw, InterferenceProfile};
use crate::error::Result;
use crate::game::{nash_solve, target_sinr, EfficiencyFunction, GameConfig};
use crate::network::{NetworkConfig, Scenario};
use crate::receivers::{sinr_linear, ReceiverKind, SinrEngine};
use crate::rng::{derive_seed, rng_from_seed};
use crate::social::{mf_balanced_powers, mf_power_derivative, mmse_social_optimum_sinr};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> CheckResult {
    CheckResult { name, passed, detail }
}

fn scenario(k: usize, n: usize, seed: u64) -> Result<Scenario> {
    let cfg = NetworkConfig {
        node_count: k,
        seed,
        ..Default::default()
    };
    Scenario::generate(&cfg, n, derive_seed(seed, &[n as u64]))
}

pub fn run_checks(seed: u64) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    let mut rng = rng_from_seed(seed);

    let g = target_sinr(&EfficiencyFunction::new(100))?.gamma;
    out.push(check("target SINR for M = 100", (g - 6.4746).abs() < 1e-3, format!("{g:.6}")));

    let sc = scenario(8, 16, seed)?;
    for kind in ReceiverKind::ALL {
        let cfg = GameConfig {
            receiver: kind,
            ..Default::default()
        };
        let ne = nash_solve(&sc, &cfg)?;
        let engine = SinrEngine::new(&sc, kind)?;
        let mut worst: f64 = 0.0;
        for k in 0..sc.node_count() {
            for step in 1..=200 {
                let mut p = ne.powers.clone();
                p[k] = cfg.max_power * step as f64 / 200.0;
                let u = cfg.utility(engine.sinrs(&p)?[k], p[k]);
                worst = worst.max(u / ne.utilities[k] - 1.0);
            }
        }
        let name = match kind {
            ReceiverKind::Mf => "no profitable deviation (MF)",
            ReceiverKind::De => "no profitable deviation (DE)",
            ReceiverKind::Mmse => "no profitable deviation (MMSE)",
        };
        out.push(check(name, ne.converged && worst <= 1e-9, format!("best relative gain {worst:.2e}")));
    }

    let sc = scenario(10, 64, seed + 1)?;
    let gamma = 1.0;
    let p = mf_balanced_powers(gamma, &sc)?;
    let engine = SinrEngine::new(&sc, ReceiverKind::Mf)?;
    let spread = engine
        .sinrs(&p)?
        .iter()
        .map(|s| (s / gamma - 1.0).abs())
        .fold(0.0, f64::max);
    out.push(check("MF balanced SINRs", spread <= 1e-8, format!("max relative spread {spread:.2e}")));

    let dp = mf_power_derivative(gamma, &sc)?;
    let h = 1e-5 * gamma;
    let up = mf_balanced_powers(gamma + h, &sc)?;
    let dn = mf_balanced_powers(gamma - h, &sc)?;
    let fd_err = (0..dp.len())
        .map(|k| ((up[k] - dn[k]) / (2.0 * h) / dp[k] - 1.0).abs())
        .fold(0.0, f64::max);
    out.push(check("MF power derivative", fd_err <= 1e-4, format!("max relative error {fd_err:.2e}")));

    let de = SinrEngine::new(&sc, ReceiverKind::De)?;
    let base: Vec<f64> = (0..sc.node_count()).map(|_| rng.gen_range(1e-6..1e-3)).collect();
    let mut moved = 0.0f64;
    let g0 = de.sinrs(&base)?;
    for _ in 0..20 {
        let mut q = base.clone();
        for (j, v) in q.iter_mut().enumerate() {
            if j != 0 {
                *v = rng.gen_range(0.0..1.0);
            }
        }
        moved = moved.max((de.sinrs(&q)?[0] / g0[0] - 1.0).abs());
    }
    out.push(check("DE ignores interferer powers", moved <= 1e-12, format!("max relative change {moved:.2e}")));

    let mmse = SinrEngine::new(&sc, ReceiverKind::Mmse)?;
    let best = mmse.sinrs(&base)?;
    let mut beaten = 0;
    for _ in 0..200 {
        let c: Vec<f64> = (0..sc.processing_gain()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for (k, &b) in best.iter().enumerate() {
            if sinr_linear(&c, k, &base, &sc)? > b * (1.0 + 1e-9) {
                beaten += 1;
            }
        }
    }
    out.push(check("MMSE beats random filters", beaten == 0, format!("{beaten} violations")));

    let prof = InterferenceProfile::laws(GainLaw::Exponential { mean: 1.0 }, GainLaw::Exponential { mean: 0.05 })?;
    let params = AsymptoticParams::new(1.0, 0.05, 1.0)?;
    let opt = mmse_social_optimum_sinr(&params, &prof, &EfficiencyFunction::new(100))?;
    let gap = (opt.gamma - opt.golden_gamma).abs();
    out.push(check("MMSE optimum root vs direct maximum", gap <= 1e-6, format!("gap {gap:.2e}")));

    let mut bad = 0;
    for _ in 0..1000 {
        let (a, da, b, c) = (
            rng.gen_range(0.0..10.0),
            rng.gen_range(0.0..10.0),
            rng.gen_range(1e-3..10.0),
            rng.gen_range(1e-3..10.0),
        );
        if effective_interference(a, b, c) > effective_interference(a + da, b, c) {
            bad += 1;
        }
    }
    out.push(check("effective interference monotone", bad == 0, format!("{bad} violations")));

    Ok(out)
}
