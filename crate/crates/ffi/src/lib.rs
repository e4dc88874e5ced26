//! C interface to the repeater simulator.
//!
//! Every fallible call returns a [`QrStatus`]; on anything but `QR_STATUS_OK` the
//! message is available from [`qr_last_error_message`] on the same thread.
//! Handles are opaque and must be released with their `_free` function.
//! Strings handed out by the library are released with [`qr_string_free`].

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use qrepeater::experiment;
use qrepeater::noise::{output_state, qber, MemoryModel};
use qrepeater::protocol::{self, PatchMode, Protocol, ProtocolConfig, SampleOutcome};

#[repr(C)]
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum QrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidUtf8 = 3,
    Json = 4,
    Simulation = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum QrProtocol {
    Mb = 0,
    Sb = 1,
}

#[repr(C)]
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum QrPatchMode {
    Limited = 0,
    Unlimited = 1,
}

/// Aggregated result of [`qr_run`]. Rates in Hz.
#[repr(C)]
#[derive(Copy, Clone, Debug, Default, PartialEq)]
pub struct QrStatistics {
    pub samples: u64,
    pub mean_rounds: f64,
    pub se_rounds: f64,
    pub mean_e_x: f64,
    pub se_e_x: f64,
    pub mean_e_z: f64,
    pub se_e_z: f64,
    pub raw_rate: f64,
    pub secret_key_fraction: f64,
    pub secret_key_rate: f64,
    pub se_secret_key_rate: f64,
}

/// Opaque chain configuration.
pub struct QrConfig {
    inner: ProtocolConfig,
}

/// Opaque single protocol run.
pub struct QrSample {
    outcome: SampleOutcome,
    memory: MemoryModel,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    // interior NULs would truncate the message in C anyway
    let msg = CString::new(msg.replace('\0', " ")).expect("no interior NUL");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

struct Failure(QrStatus, String);

impl From<qrepeater::Error> for Failure {
    fn from(e: qrepeater::Error) -> Self {
        let status = match e {
            qrepeater::Error::InvalidParameter { .. } | qrepeater::Error::UnsupportedSegments(_) => {
                QrStatus::InvalidArgument
            }
            qrepeater::Error::Json(_) => QrStatus::Json,
            _ => QrStatus::Simulation,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(QrStatus::NullPointer, format!("{what} is NULL"))
}

/// Runs `f`, turning errors and panics into a status plus thread-local message.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> QrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => QrStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".to_owned());
            set_error(format!("panic: {msg}"));
            QrStatus::Panic
        }
    }
}

unsafe fn config<'a>(cfg: *const QrConfig) -> Result<&'a QrConfig, Failure> {
    cfg.as_ref().ok_or_else(|| null("config"))
}

unsafe fn config_mut<'a>(cfg: *mut QrConfig) -> Result<&'a mut QrConfig, Failure> {
    cfg.as_mut().ok_or_else(|| null("config"))
}

unsafe fn sample<'a>(s: *const QrSample) -> Result<&'a QrSample, Failure> {
    s.as_ref().ok_or_else(|| null("sample"))
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(value);
    Ok(())
}

fn into_c_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|e| Failure(QrStatus::InvalidUtf8, e.to_string()))
}

/// Message of the last failed call on this thread, or NULL. The pointer is
/// owned by the library and valid until the next failing call.
#[no_mangle]
pub extern "C" fn qr_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn qr_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub unsafe extern "C" fn qr_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Default configuration: MB, k = 3, 100 km, T = 10 s, p = 0.5.
#[no_mangle]
pub unsafe extern "C" fn qr_config_new(out: *mut *mut QrConfig) -> QrStatus {
    guard(|| {
        let cfg = Box::new(QrConfig {
            inner: ProtocolConfig::default(),
        });
        write_out(out, Box::into_raw(cfg))
    })
}

/// Parses a JSON configuration (same schema as the CLI's `--config`).
#[no_mangle]
pub unsafe extern "C" fn qr_config_from_json(json: *const c_char, out: *mut *mut QrConfig) -> QrStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| Failure(QrStatus::InvalidUtf8, e.to_string()))?;
        let inner: ProtocolConfig = serde_json::from_str(text).map_err(|e| Failure(QrStatus::Json, e.to_string()))?;
        inner.validate()?;
        write_out(out, Box::into_raw(Box::new(QrConfig { inner })))
    })
}

#[no_mangle]
pub unsafe extern "C" fn qr_config_to_json(cfg: *const QrConfig, out: *mut *mut c_char) -> QrStatus {
    guard(|| {
        let text = serde_json::to_string(&config(cfg)?.inner).map_err(|e| Failure(QrStatus::Json, e.to_string()))?;
        write_out(out, into_c_string(text)?)
    })
}

#[no_mangle]
pub unsafe extern "C" fn qr_config_free(cfg: *mut QrConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Applies `f` and rejects the change if the result no longer validates.
unsafe fn update(cfg: *mut QrConfig, f: impl FnOnce(&mut ProtocolConfig)) -> QrStatus {
    guard(|| {
        let c = config_mut(cfg)?;
        let mut next = c.inner.clone();
        f(&mut next);
        next.validate()?;
        c.inner = next;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn qr_config_set_protocol(cfg: *mut QrConfig, protocol: QrProtocol) -> QrStatus {
    update(cfg, |c| {
        c.protocol = match protocol {
            QrProtocol::Mb => Protocol::Mb,
            QrProtocol::Sb => Protocol::Sb,
        }
    })
}

#[no_mangle]
pub unsafe extern "C" fn qr_config_set_levels(cfg: *mut QrConfig, levels: u32) -> QrStatus {
    update(cfg, |c| c.levels = levels)
}

#[no_mangle]
pub unsafe extern "C" fn qr_config_set_total_distance_km(cfg: *mut QrConfig, km: f64) -> QrStatus {
    update(cfg, |c| {
        c.total_distance_km = Some(km);
        c.segment_length_km = None;
    })
}

#[no_mangle]
pub unsafe extern "C" fn qr_config_set_dephasing_time_s(cfg: *mut QrConfig, seconds: f64) -> QrStatus {
    update(cfg, |c| c.dephasing_time_s = seconds)
}

#[no_mangle]
pub unsafe extern "C" fn qr_config_set_merge_probability(cfg: *mut QrConfig, p: f64) -> QrStatus {
    update(cfg, |c| c.merge_probability = p)
}

/// A negative value restores the attenuation-derived default.
#[no_mangle]
pub unsafe extern "C" fn qr_config_set_generation_probability(cfg: *mut QrConfig, p_gen: f64) -> QrStatus {
    update(cfg, |c| c.generation_probability = (p_gen >= 0.0).then_some(p_gen))
}

#[no_mangle]
pub unsafe extern "C" fn qr_config_set_growth_limit(cfg: *mut QrConfig, growth_limit: u32) -> QrStatus {
    update(cfg, |c| c.growth_limit = growth_limit)
}

#[no_mangle]
pub unsafe extern "C" fn qr_config_set_patching(cfg: *mut QrConfig, mode: QrPatchMode) -> QrStatus {
    update(cfg, |c| {
        c.patching = match mode {
            QrPatchMode::Limited => PatchMode::Limited,
            QrPatchMode::Unlimited => PatchMode::Unlimited,
        }
    })
}

#[no_mangle]
pub unsafe extern "C" fn qr_config_set_samples(cfg: *mut QrConfig, samples: u64) -> QrStatus {
    update(cfg, |c| c.samples = samples)
}

#[no_mangle]
pub unsafe extern "C" fn qr_config_set_seed(cfg: *mut QrConfig, seed: u64) -> QrStatus {
    update(cfg, |c| c.seed = seed)
}

/// Samples the configuration and writes the aggregate to `out`.
#[no_mangle]
pub unsafe extern "C" fn qr_run(cfg: *const QrConfig, out: *mut QrStatistics) -> QrStatus {
    guard(|| {
        let s = experiment::run(&config(cfg)?.inner)?;
        write_out(
            out,
            QrStatistics {
                samples: s.samples,
                mean_rounds: s.mean_rounds,
                se_rounds: s.se_rounds,
                mean_e_x: s.mean_e_x,
                se_e_x: s.se_e_x,
                mean_e_z: s.mean_e_z,
                se_e_z: s.se_e_z,
                raw_rate: s.raw_rate,
                secret_key_fraction: s.secret_key_fraction,
                secret_key_rate: s.secret_key_rate,
                se_secret_key_rate: s.se_secret_key_rate,
            },
        )
    })
}

/// Draws sample number `index` of the configured seed.
#[no_mangle]
pub unsafe extern "C" fn qr_sample_new(cfg: *const QrConfig, index: u64, out: *mut *mut QrSample) -> QrStatus {
    guard(|| {
        let c = &config(cfg)?.inner;
        let params = c.sampler_params()?;
        let outcome = protocol::sample(c.protocol, c.segments(), &params, c.seed, index)?;
        let s = Box::new(QrSample {
            outcome,
            memory: c.memory_model()?,
        });
        write_out(out, Box::into_raw(s))
    })
}

#[no_mangle]
pub unsafe extern "C" fn qr_sample_free(s: *mut QrSample) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

#[no_mangle]
pub unsafe extern "C" fn qr_sample_rounds(s: *const QrSample, out: *mut u64) -> QrStatus {
    guard(|| write_out(out, sample(s)?.outcome.rounds))
}

/// Largest entanglement gap, in segments, seen while building the sample.
#[no_mangle]
pub unsafe extern "C" fn qr_sample_max_gap(s: *const QrSample, out: *mut u32) -> QrStatus {
    guard(|| write_out(out, sample(s)?.outcome.stats.max_gap))
}

/// Bell-diagonal output probabilities in the order Φ+, Ψ+, Φ−, Ψ−.
#[no_mangle]
pub unsafe extern "C" fn qr_sample_bell_probabilities(s: *const QrSample, out: *mut f64) -> QrStatus {
    guard(|| {
        let s = sample(s)?;
        if out.is_null() {
            return Err(null("output pointer"));
        }
        let probs = output_state(&s.outcome.trace, &s.outcome.ledger, &s.memory)?.probs();
        ptr::copy_nonoverlapping(probs.as_ptr(), out, 4);
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn qr_sample_qber(s: *const QrSample, e_x: *mut f64, e_z: *mut f64) -> QrStatus {
    guard(|| {
        let s = sample(s)?;
        let (x, z) = qber(&output_state(&s.outcome.trace, &s.outcome.ledger, &s.memory)?);
        write_out(e_x, x)?;
        write_out(e_z, z)
    })
}

/// Operation trace as JSON; free with [`qr_string_free`].
#[no_mangle]
pub unsafe extern "C" fn qr_sample_trace_json(s: *const QrSample, out: *mut *mut c_char) -> QrStatus {
    guard(|| {
        let text = sample(s)?.outcome.trace.to_json()?;
        write_out(out, into_c_string(text)?)
    })
}
