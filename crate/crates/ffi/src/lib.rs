//! C ABI over the trngbench core.
//!
//! Every fallible function returns a [`TrngStatus`]. On failure a human-readable
//! message is available from [`trng_last_error_message`] on the same thread.
//! Devices are opaque handles created by a `trng_device_new_*` function and released
//! with [`trng_device_free`]; a handle must not be used from two threads at once.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use trngbench::bench::{self, SweepConfig, SweepError};
use trngbench::device::{make_profile, Device, DeviceError, ProfileError};
use trngbench::quality::{self, MetricSet, QualityError, QualityReport};
use trngbench::wire::{self, GetRandomRequest, HEADER_LEN};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrngStatus {
    Ok = 0,
    /// A required pointer argument was null.
    Null = 1,
    InvalidArgument = 2,
    UnknownProfile = 3,
    Io = 4,
    /// A replayed file has fewer bytes left than requested.
    Exhausted = 5,
    /// The output buffer is too small; the needed size was written to the length out-parameter.
    BufferTooSmall = 6,
    /// A byte buffer is not a well-formed GetRandom message.
    Wire = 7,
    /// The input is too short to analyze.
    TooShort = 8,
    /// The library panicked; the handle involved should be freed.
    Panic = 9,
}

/// Opaque random source.
pub struct TrngDevice {
    inner: Device,
}

/// One level's worth of quality metrics.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct TrngMetricSet {
    pub entropy: f64,
    pub chi_square: f64,
    pub chi_square_exceed_prob: f64,
    pub mean: f64,
    pub mc_pi_estimate: f64,
    pub mc_pi_error_pct: f64,
    /// Only meaningful when `serial_correlation_defined` is true.
    pub serial_correlation: f64,
    pub serial_correlation_defined: bool,
    /// True when any metric at this level is labelled fail.
    pub has_failure: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct TrngQualityReport {
    pub input_length: u64,
    pub byte_level: TrngMetricSet,
    pub bit_level: TrngMetricSet,
}

impl From<&MetricSet> for TrngMetricSet {
    fn from(m: &MetricSet) -> Self {
        Self {
            entropy: m.entropy,
            chi_square: m.chi_square,
            chi_square_exceed_prob: m.chi_square_exceed_prob,
            mean: m.mean,
            mc_pi_estimate: m.mc_pi_estimate,
            mc_pi_error_pct: m.mc_pi_error_pct,
            serial_correlation: m.serial_correlation.unwrap_or(f64::NAN),
            serial_correlation_defined: m.serial_correlation.is_some(),
            has_failure: m.has_failure(),
        }
    }
}

impl From<&QualityReport> for TrngQualityReport {
    fn from(r: &QualityReport) -> Self {
        Self {
            input_length: r.input_length,
            byte_level: (&r.byte_level).into(),
            bit_level: (&r.bit_level).into(),
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

struct Failure(TrngStatus, String);

impl Failure {
    fn null(arg: &str) -> Self {
        Failure(TrngStatus::Null, format!("`{arg}` must not be null"))
    }

    fn invalid(message: impl Into<String>) -> Self {
        Failure(TrngStatus::InvalidArgument, message.into())
    }
}

impl From<DeviceError> for Failure {
    fn from(e: DeviceError) -> Self {
        let status = match &e {
            DeviceError::ZeroLength | DeviceError::Bias(_) => TrngStatus::InvalidArgument,
            DeviceError::SourceExhausted { .. } => TrngStatus::Exhausted,
            DeviceError::Io { .. } | DeviceError::Entropy(_) => TrngStatus::Io,
            DeviceError::Profile(ProfileError::Unknown { .. }) => TrngStatus::UnknownProfile,
            DeviceError::Profile(_) => TrngStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

impl From<QualityError> for Failure {
    fn from(e: QualityError) -> Self {
        let status = match &e {
            QualityError::Empty | QualityError::TooShort { .. } => TrngStatus::TooShort,
            QualityError::InvalidPieces(_) => TrngStatus::InvalidArgument,
            QualityError::Io { .. } => TrngStatus::Io,
        };
        Failure(status, e.to_string())
    }
}

impl From<wire::WireError> for Failure {
    fn from(e: wire::WireError) -> Self {
        Failure(TrngStatus::Wire, e.to_string())
    }
}

/// Runs `body`, turning errors and panics into a status plus thread-local message.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> TrngStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => TrngStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_last_error(message);
            status
        }
        Err(panic) => {
            let what = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("internal panic: {what}"));
            TrngStatus::Panic
        }
    }
}

unsafe fn c_str<'a>(p: *const c_char, arg: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::null(arg));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::invalid(format!("`{arg}` is not valid UTF-8")))
}

unsafe fn in_slice<'a>(p: *const u8, len: usize, arg: &str) -> Result<&'a [u8], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::null(arg));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

/// Copies `src` to `(buf, cap)` and stores its length in `out_len`, or stores the
/// needed length and fails when it does not fit.
unsafe fn copy_out(src: &[u8], buf: *mut u8, cap: usize, out_len: *mut usize) -> Result<(), Failure> {
    if out_len.is_null() {
        return Err(Failure::null("out_len"));
    }
    *out_len = src.len();
    if src.len() > cap {
        return Err(Failure(
            TrngStatus::BufferTooSmall,
            format!("need {} bytes, buffer holds {cap}", src.len()),
        ));
    }
    if !src.is_empty() {
        if buf.is_null() {
            return Err(Failure::null("buf"));
        }
        ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    }
    Ok(())
}

unsafe fn store_device(out: *mut *mut TrngDevice, make: impl FnOnce() -> Result<Device, Failure>) -> TrngStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        *out = ptr::null_mut();
        let inner = make()?;
        *out = Box::into_raw(Box::new(TrngDevice { inner }));
        Ok(())
    })
}

unsafe fn device<'a>(dev: *mut TrngDevice) -> Result<&'a mut Device, Failure> {
    dev.as_mut().map(|d| &mut d.inner).ok_or_else(|| Failure::null("dev"))
}

/// Message describing the last failure on this thread, or null if none. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn trng_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn trng_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates a simulated chip from a built-in profile name.
///
/// # Safety
/// `profile` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn trng_device_new_simulated(
    profile: *const c_char,
    seed: u64,
    out: *mut *mut TrngDevice,
) -> TrngStatus {
    store_device(out, || {
        let name = c_str(profile, "profile")?;
        let p = make_profile(name).map_err(DeviceError::from)?;
        Ok(Device::simulated(p, seed)?)
    })
}

/// Like [`trng_device_new_simulated`] but byte value `v` is drawn with weight
/// `1 + epsilon * v`.
///
/// # Safety
/// Same as [`trng_device_new_simulated`].
#[no_mangle]
pub unsafe extern "C" fn trng_device_new_simulated_biased(
    profile: *const c_char,
    seed: u64,
    epsilon: f64,
    out: *mut *mut TrngDevice,
) -> TrngStatus {
    store_device(out, || {
        let name = c_str(profile, "profile")?;
        let p = make_profile(name).map_err(DeviceError::from)?;
        Ok(Device::simulated_biased(p, seed, epsilon)?)
    })
}

/// Creates a device reading the operating system's entropy source.
///
/// # Safety
/// `out` must be a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn trng_device_new_os(out: *mut *mut TrngDevice) -> TrngStatus {
    store_device(out, || Ok(Device::os_entropy()))
}

/// Creates a device replaying the bytes of a file in order.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn trng_device_new_file(path: *const c_char, out: *mut *mut TrngDevice) -> TrngStatus {
    store_device(out, || {
        let path = PathBuf::from(c_str(path, "path")?);
        Ok(Device::file_replay(path)?)
    })
}

/// Releases a device. Null is ignored.
///
/// # Safety
/// `dev` must come from a `trng_device_new_*` call and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn trng_device_free(dev: *mut TrngDevice) {
    if !dev.is_null() {
        drop(Box::from_raw(dev));
    }
}

/// Number of successful draws made so far, or 0 for a null handle.
///
/// # Safety
/// `dev` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn trng_device_calls(dev: *const TrngDevice) -> u64 {
    dev.as_ref().map_or(0, |d| d.inner.calls())
}

/// Asks the device for `n` bytes. The device may return fewer (simulated chips cap
/// each call); the count actually returned goes to `out_len` and the call duration in
/// microseconds to `out_duration_us` (may be null).
///
/// # Safety
/// `dev` must be a live handle, `buf` must hold `cap` bytes, `out_len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn trng_device_get_random(
    dev: *mut TrngDevice,
    n: usize,
    buf: *mut u8,
    cap: usize,
    out_len: *mut usize,
    out_duration_us: *mut f64,
) -> TrngStatus {
    guard(|| {
        let d = device(dev)?;
        if out_len.is_null() {
            return Err(Failure::null("out_len"));
        }
        let expected = d.max_request().map_or(n, |m| n.min(m));
        if expected > cap {
            *out_len = expected;
            return Err(Failure(
                TrngStatus::BufferTooSmall,
                format!("need {expected} bytes, buffer holds {cap}"),
            ));
        }
        let draw = d.get_random(n)?;
        copy_out(&draw.bytes, buf, cap, out_len)?;
        if let Some(slot) = out_duration_us.as_mut() {
            *slot = draw.duration_us;
        }
        Ok(())
    })
}

/// Passes a raw GetRandom command buffer to the device and copies back the encoded
/// response. Malformed commands still produce a (failure) response and `TRNG_OK`.
///
/// # Safety
/// `cmd` must hold `cmd_len` bytes, `resp` must hold `resp_cap` bytes, and `out_len`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn trng_device_submit_command(
    dev: *mut TrngDevice,
    cmd: *const u8,
    cmd_len: usize,
    resp: *mut u8,
    resp_cap: usize,
    out_len: *mut usize,
) -> TrngStatus {
    guard(|| {
        let d = device(dev)?;
        let raw = in_slice(cmd, cmd_len, "cmd")?;
        let response = d.submit_command(raw);
        copy_out(&response, resp, resp_cap, out_len)
    })
}

/// Writes the 14-byte request for `bytes_requested` into `buf`.
///
/// # Safety
/// `buf` must hold `cap` bytes and `out_len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn trng_encode_request(
    bytes_requested: u32,
    buf: *mut u8,
    cap: usize,
    out_len: *mut usize,
) -> TrngStatus {
    guard(|| {
        let raw = wire::encode_request(&GetRandomRequest::new(bytes_requested))?;
        copy_out(&raw, buf, cap, out_len)
    })
}

/// Decodes a response buffer. On success the payload occupies
/// `raw[TRNG_HEADER_LEN .. TRNG_HEADER_LEN + *out_size]`.
///
/// # Safety
/// `raw` must hold `len` bytes; the out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn trng_decode_response(
    raw: *const u8,
    len: usize,
    out_return_code: *mut u32,
    out_size: *mut u32,
) -> TrngStatus {
    guard(|| {
        if out_return_code.is_null() || out_size.is_null() {
            return Err(Failure::null("out_return_code/out_size"));
        }
        let r = wire::decode_response(in_slice(raw, len, "raw")?)?;
        *out_return_code = r.return_code;
        *out_size = r.random_bytes_size;
        Ok(())
    })
}

/// Size of the fixed GetRandom header in bytes.
pub const TRNG_HEADER_LEN: usize = 14;
const _: () = assert!(TRNG_HEADER_LEN == HEADER_LEN);

/// Runs the quality battery on an in-memory buffer of at least 6 bytes.
///
/// # Safety
/// `data` must hold `len` bytes and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn trng_analyze(data: *const u8, len: usize, out: *mut TrngQualityReport) -> TrngStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        let report = quality::analyze(in_slice(data, len, "data")?)?;
        *out = (&report).into();
        Ok(())
    })
}

/// Streams a file through the quality battery. With `pieces > 1`, `out_pieces` (room
/// for `pieces` reports) receives one report per contiguous segment; it may be null
/// when `pieces` is 1.
///
/// # Safety
/// `path` must be NUL-terminated, `out_whole` writable, and `out_pieces` null or able
/// to hold `pieces` reports.
#[no_mangle]
pub unsafe extern "C" fn trng_analyze_file(
    path: *const c_char,
    pieces: usize,
    out_whole: *mut TrngQualityReport,
    out_pieces: *mut TrngQualityReport,
) -> TrngStatus {
    guard(|| {
        let path = c_str(path, "path")?;
        if out_whole.is_null() {
            return Err(Failure::null("out_whole"));
        }
        if pieces > 1 && out_pieces.is_null() {
            return Err(Failure::null("out_pieces"));
        }
        let a = quality::analyze_file(path, pieces)?;
        *out_whole = (&a.whole).into();
        if !out_pieces.is_null() {
            for (i, r) in a.pieces.iter().enumerate() {
                *out_pieces.add(i) = r.into();
            }
        }
        Ok(())
    })
}

/// Sweeps request sizes `min..=max` in `step` increments, `reps` calls each, and
/// writes the CSV to `out_path`.
///
/// # Safety
/// `dev` must be a live handle and `out_path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn trng_bench_sweep_csv(
    dev: *mut TrngDevice,
    min: usize,
    max: usize,
    step: usize,
    reps: usize,
    out_path: *const c_char,
) -> TrngStatus {
    guard(|| {
        let d = device(dev)?;
        let path = c_str(out_path, "out_path")?;
        let cfg = SweepConfig {
            min_size: min,
            max_size: max,
            step,
            repetitions: reps,
        };
        let records = bench::sweep(d, &cfg).map_err(|e| match e {
            SweepError::Config(m) => Failure::invalid(m),
            SweepError::Device { source, .. } => source.into(),
        })?;
        let file = std::fs::File::create(path).map_err(|e| Failure(TrngStatus::Io, format!("{path}: {e}")))?;
        bench::write_csv(&records, std::io::BufWriter::new(file))
            .map_err(|e| Failure(TrngStatus::Io, format!("{path}: {e}")))?;
        Ok(())
    })
}
