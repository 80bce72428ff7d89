//! C ABI for the `mhcdma` power-control library.
//!
//! Scenarios and solver outcomes cross the boundary as opaque handles that the
//! caller releases with the matching `_free` function. Every fallible call
//! returns an [`MhStatus`]; on failure [`mh_last_error`] describes the cause
//! for the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use mhcdma::experiment::scenario_for;
use mhcdma::game::{nash_solve, target_sinr, EfficiencyFunction, GameConfig};
use mhcdma::network::{NetworkConfig, Scenario};
use mhcdma::receivers::ReceiverKind;
use mhcdma::social::{realize, social_optimum, WeightVector};
use mhcdma::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MhStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Infeasible = 3,
    NotAchievable = 4,
    Inapplicable = 5,
    Numerical = 6,
    Parse = 7,
    Io = 8,
    BufferTooSmall = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MhReceiver {
    MatchedFilter = 0,
    Decorrelator = 1,
    Mmse = 2,
}

impl From<MhReceiver> for ReceiverKind {
    fn from(r: MhReceiver) -> Self {
        match r {
            MhReceiver::MatchedFilter => ReceiverKind::Mf,
            MhReceiver::Decorrelator => ReceiverKind::De,
            MhReceiver::Mmse => ReceiverKind::Mmse,
        }
    }
}

/// Game parameters. Start from [`mh_game_params_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MhGameParams {
    /// Information bits per packet.
    pub info_bits: u32,
    /// Total bits per packet.
    pub packet_bits: u32,
    /// Bits per second.
    pub rate: f64,
    /// Watts.
    pub max_power: f64,
}

impl MhGameParams {
    fn config(&self, receiver: MhReceiver) -> GameConfig {
        GameConfig {
            info_bits: self.info_bits,
            packet_bits: self.packet_bits,
            rate: self.rate,
            max_power: self.max_power,
            receiver: receiver.into(),
            ..GameConfig::default()
        }
    }
}

/// Opaque scenario handle: topology, gains and spreading sequences.
pub struct MhScenario(Scenario);

/// Opaque per-node powers, SINRs and utilities from a solver.
pub struct MhOutcome {
    target_sinr: f64,
    powers: Vec<f64>,
    sinrs: Vec<f64>,
    utilities: Vec<f64>,
    converged: bool,
    capped: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> MhStatus {
    match e {
        Error::InvalidConfig(_) | Error::InvalidArgument(_) | Error::TooFewNodes | Error::DegenerateEfficiency { .. } => {
            MhStatus::InvalidArgument
        }
        Error::Infeasible { .. } => MhStatus::Infeasible,
        Error::NotAchievable { .. } => MhStatus::NotAchievable,
        Error::DecorrelatorInapplicable { .. } => MhStatus::Inapplicable,
        Error::SingularCorrelation | Error::SolverFailure { .. } | Error::NoRoot { .. } => MhStatus::Numerical,
        Error::Json(_) | Error::Csv(_) => MhStatus::Parse,
        Error::Io { .. } => MhStatus::Io,
    }
}

/// Runs `f`, recording any error or panic for [`mh_last_error`].
fn guard(f: impl FnOnce() -> Result<(), (MhStatus, String)>) -> MhStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            MhStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".to_string());
            MhStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (MhStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (MhStatus, String) {
    (MhStatus::NullPointer, format!("{what} is null"))
}

/// Message for the last failed call on this thread, or null. Valid until the
/// next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn mh_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn mh_game_params_default() -> MhGameParams {
    let d = GameConfig::default();
    MhGameParams {
        info_bits: d.info_bits,
        packet_bits: d.packet_bits,
        rate: d.rate,
        max_power: d.max_power,
    }
}

/// Generates a scenario with the default geometry; the same inputs give the
/// same scenario as the command-line tool.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn mh_scenario_generate(
    nodes: usize,
    processing_gain: usize,
    seed: u64,
    out: *mut *mut MhScenario,
) -> MhStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let cfg = NetworkConfig {
            node_count: nodes,
            ..Default::default()
        };
        let sc = scenario_for(&cfg, seed, processing_gain).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(MhScenario(sc)));
        Ok(())
    })
}

/// # Safety
/// `json` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mh_scenario_from_json(json: *const c_char, out: *mut *mut MhScenario) -> MhStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let s = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| (MhStatus::Parse, e.to_string()))?;
        let sc = Scenario::from_json(s).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(MhScenario(sc)));
        Ok(())
    })
}

/// Serializes a scenario. Release the string with [`mh_string_free`].
///
/// # Safety
/// `sc` must come from this library and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mh_scenario_to_json(sc: *const MhScenario, out: *mut *mut c_char) -> MhStatus {
    guard(|| {
        let sc = sc.as_ref().ok_or_else(|| null("scenario"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let json = sc.0.to_json().map_err(lib_err)?;
        *out = CString::new(json).map_err(|e| (MhStatus::Parse, e.to_string()))?.into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a string returned by this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn mh_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Number of transmitting nodes, or 0 for a null handle.
///
/// # Safety
/// `sc` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mh_scenario_node_count(sc: *const MhScenario) -> usize {
    sc.as_ref().map_or(0, |s| s.0.node_count())
}

/// # Safety
/// `sc` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mh_scenario_processing_gain(sc: *const MhScenario) -> usize {
    sc.as_ref().map_or(0, |s| s.0.processing_gain())
}

/// # Safety
/// `sc` must be null or a handle from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn mh_scenario_free(sc: *mut MhScenario) {
    if !sc.is_null() {
        drop(Box::from_raw(sc));
    }
}

/// SINR maximizing bits per joule for `packet_bits`-bit packets.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mh_target_sinr(packet_bits: u32, out: *mut f64) -> MhStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = target_sinr(&EfficiencyFunction::new(packet_bits)).map_err(lib_err)?.gamma;
        Ok(())
    })
}

unsafe fn solve(
    sc: *const MhScenario,
    params: *const MhGameParams,
    out: *mut *mut MhOutcome,
    f: impl FnOnce(&Scenario, &GameConfig) -> mhcdma::Result<MhOutcome>,
    receiver: MhReceiver,
) -> MhStatus {
    guard(|| {
        let sc = sc.as_ref().ok_or_else(|| null("scenario"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let params = params.as_ref().copied().unwrap_or_else(|| mh_game_params_default());
        let cfg = params.config(receiver);
        cfg.validate().map_err(lib_err)?;
        let outcome = f(&sc.0, &cfg).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(outcome));
        Ok(())
    })
}

/// Noncooperative equilibrium. A null `params` selects the defaults.
///
/// # Safety
/// `sc` must be a live handle, `params` null or valid, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mh_nash_solve(
    sc: *const MhScenario,
    receiver: MhReceiver,
    params: *const MhGameParams,
    out: *mut *mut MhOutcome,
) -> MhStatus {
    solve(
        sc,
        params,
        out,
        |sc, cfg| {
            let ne = nash_solve(sc, cfg)?;
            Ok(MhOutcome {
                target_sinr: ne.target_sinr,
                capped: ne.capped.len(),
                powers: ne.powers,
                sinrs: ne.sinrs,
                utilities: ne.utilities,
                converged: ne.converged,
            })
        },
        receiver,
    )
}

/// Equal-weight social optimum with powers clipped at the cap. Returns
/// [`MhStatus::Infeasible`] when no balanced SINR is feasible.
///
/// # Safety
/// `sc` must be a live handle, `params` null or valid, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mh_social_optimum(
    sc: *const MhScenario,
    receiver: MhReceiver,
    params: *const MhGameParams,
    out: *mut *mut MhOutcome,
) -> MhStatus {
    solve(
        sc,
        params,
        out,
        |sc, cfg| {
            let weights = WeightVector::uniform(sc.node_count());
            let sol = social_optimum(cfg.receiver, &weights, sc, cfg)?;
            let op = realize(&sol, sc, cfg)?;
            Ok(MhOutcome {
                target_sinr: op.target_sinr,
                capped: op.capped.len(),
                powers: op.powers,
                sinrs: op.sinrs,
                utilities: op.utilities,
                converged: true,
            })
        },
        receiver,
    )
}

/// Number of nodes in the outcome, or 0 for a null handle.
///
/// # Safety
/// `o` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mh_outcome_len(o: *const MhOutcome) -> usize {
    o.as_ref().map_or(0, |o| o.powers.len())
}

/// NaN for a null handle.
///
/// # Safety
/// `o` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mh_outcome_target_sinr(o: *const MhOutcome) -> f64 {
    o.as_ref().map_or(f64::NAN, |o| o.target_sinr)
}

/// Mean utility in bits per joule; NaN for a null handle.
///
/// # Safety
/// `o` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mh_outcome_mean_utility(o: *const MhOutcome) -> f64 {
    o.as_ref()
        .map_or(f64::NAN, |o| o.utilities.iter().sum::<f64>() / o.utilities.len() as f64)
}

/// # Safety
/// `o` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mh_outcome_converged(o: *const MhOutcome) -> bool {
    o.as_ref().is_some_and(|o| o.converged)
}

/// Nodes whose power hit the cap.
///
/// # Safety
/// `o` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mh_outcome_capped_count(o: *const MhOutcome) -> usize {
    o.as_ref().map_or(0, |o| o.capped)
}

unsafe fn copy_out(o: *const MhOutcome, buf: *mut f64, len: usize, pick: fn(&MhOutcome) -> &[f64]) -> MhStatus {
    guard(|| {
        let o = o.as_ref().ok_or_else(|| null("outcome"))?;
        if buf.is_null() {
            return Err(null("buffer"));
        }
        let src = pick(o);
        if len < src.len() {
            return Err((
                MhStatus::BufferTooSmall,
                format!("buffer holds {len} values, need {}", src.len()),
            ));
        }
        ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
        Ok(())
    })
}

/// Copies per-node powers (watts) into `buf`, which must hold
/// [`mh_outcome_len`] values.
///
/// # Safety
/// `buf` must be valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn mh_outcome_copy_powers(o: *const MhOutcome, buf: *mut f64, len: usize) -> MhStatus {
    copy_out(o, buf, len, |o| &o.powers)
}

/// # Safety
/// `buf` must be valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn mh_outcome_copy_sinrs(o: *const MhOutcome, buf: *mut f64, len: usize) -> MhStatus {
    copy_out(o, buf, len, |o| &o.sinrs)
}

/// # Safety
/// `buf` must be valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn mh_outcome_copy_utilities(o: *const MhOutcome, buf: *mut f64, len: usize) -> MhStatus {
    copy_out(o, buf, len, |o| &o.utilities)
}

/// # Safety
/// `o` must be null or a handle from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn mh_outcome_free(o: *mut MhOutcome) {
    if !o.is_null() {
        drop(Box::from_raw(o));
    }
}
