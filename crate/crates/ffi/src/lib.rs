//! C ABI over the gpscale harness.
//!
//! Every fallible function returns a [`GpsStatus`]; on failure a message is
//! kept per thread and can be read with [`gps_last_error`]. Strings handed
//! out by the library must be released with [`gps_string_free`], handles
//! with their matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use gpscale::domains::{self, descriptor};
use gpscale::eval::{evaluate_scaling, EvalParams};
use gpscale::planning::Instance;
use gpscale::policy::{Policy, PolicySpec};
use gpscale::runner::{rollout_rng, run_policy};
use gpscale::{csp, oracle, stats, Error};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GpsStatus {
    Ok = 0,
    /// Reading or writing failed.
    Io = 1,
    /// Bad configuration, parameters or input data.
    Config = 2,
    /// A state or solution cap was hit.
    Resource = 3,
    /// A policy failed or broke the protocol.
    Policy = 4,
    /// A required pointer argument was null.
    NullArgument = 5,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 6,
    /// A Rust panic was caught at the boundary.
    Panic = 7,
}

/// Opaque planning instance.
pub struct GpsInstance(Instance);

/// Opaque policy.
pub struct GpsPolicy(Box<dyn Policy>);

/// Outcome of a single rollout.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct GpsRunOutcome {
    pub solved: bool,
    pub steps: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes were replaced");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> GpsStatus {
    match e.exit_code() {
        1 => GpsStatus::Io,
        3 => GpsStatus::Resource,
        4 => GpsStatus::Policy,
        _ => GpsStatus::Config,
    }
}

struct Fail(GpsStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

type FfiResult<T = ()> = Result<T, Fail>;

fn guard(f: impl FnOnce() -> FfiResult) -> GpsStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GpsStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside gpscale".into());
            GpsStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(GpsStatus::NullArgument, format!("`{what}` is null"))
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> FfiResult<&'a str> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(GpsStatus::InvalidUtf8, format!("`{what}` is not UTF-8")))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> FfiResult {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> FfiResult {
    let c = CString::new(s).map_err(|_| Fail(GpsStatus::Config, "output contains a nul byte".into()))?;
    write_out(out, c.into_raw(), "out")
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn gps_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn gps_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by the library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn gps_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Number of valid compositions of `domain` at size `n`.
///
/// # Safety
/// `domain` must be a nul-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gps_csp_count(domain: *const c_char, n: u64, out: *mut usize) -> GpsStatus {
    guard(|| {
        let desc = descriptor(read_str(domain, "domain")?)?;
        let all = csp::solve_all(&desc.csp, n)?;
        write_out(out, all.len(), "out")
    })
}

/// All compositions of `domain` at size `n` as a JSON array of objects
/// mapping each size parameter to its value.
///
/// # Safety
/// `domain` must be a nul-terminated string and `out` writable. The result
/// must be released with [`gps_string_free`].
#[no_mangle]
pub unsafe extern "C" fn gps_csp_solve_json(
    domain: *const c_char,
    n: u64,
    out: *mut *mut c_char,
) -> GpsStatus {
    guard(|| {
        let desc = descriptor(read_str(domain, "domain")?)?;
        let names: Vec<&str> = desc.size_params().collect();
        let rows: Vec<serde_json::Map<String, serde_json::Value>> = csp::solve_all(&desc.csp, n)?
            .iter()
            .map(|a| {
                names
                    .iter()
                    .zip(a.values())
                    .map(|(k, v)| ((*k).to_owned(), (*v).into()))
                    .collect()
            })
            .collect();
        let text = serde_json::to_string(&rows).map_err(Error::from)?;
        write_string(out, text)
    })
}

/// Generates an instance of `domain` at size `n`, picking the composition
/// uniformly with `seed`.
///
/// # Safety
/// `domain` must be a nul-terminated string and `out` writable. The handle
/// must be released with [`gps_instance_free`].
#[no_mangle]
pub unsafe extern "C" fn gps_instance_generate(
    domain: *const c_char,
    n: u64,
    seed: u64,
    out: *mut *mut GpsInstance,
) -> GpsStatus {
    guard(|| {
        let domain = read_str(domain, "domain")?;
        let desc = descriptor(domain)?;
        let all = csp::solve_all(&desc.csp, n)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pick = csp::sample_uniform(&all, &mut rng)
            .map_err(|_| Error::InvalidInput(format!("no {domain} composition of size {n}")))?;
        let input = desc.input_from(pick, &mut rng);
        let inst = domains::generate_instance(domain, &input, seed)?;
        write_out(out, Box::into_raw(Box::new(GpsInstance(inst))), "out")
    })
}

/// Parses an instance from its JSON document.
///
/// # Safety
/// `json` must be a nul-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gps_instance_from_json(
    json: *const c_char,
    out: *mut *mut GpsInstance,
) -> GpsStatus {
    guard(|| {
        let inst = Instance::from_json(read_str(json, "json")?)?;
        write_out(out, Box::into_raw(Box::new(GpsInstance(inst))), "out")
    })
}

/// # Safety
/// `inst` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn gps_instance_free(inst: *mut GpsInstance) {
    if !inst.is_null() {
        drop(Box::from_raw(inst));
    }
}

/// Size of the instance under its domain's size equation.
///
/// # Safety
/// `inst` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gps_instance_size(inst: *const GpsInstance, out: *mut usize) -> GpsStatus {
    guard(|| {
        let inst = inst.as_ref().ok_or_else(|| null("inst"))?;
        write_out(out, inst.0.size(), "out")
    })
}

/// Instance as JSON.
///
/// # Safety
/// `inst` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gps_instance_to_json(
    inst: *const GpsInstance,
    out: *mut *mut c_char,
) -> GpsStatus {
    guard(|| {
        let inst = inst.as_ref().ok_or_else(|| null("inst"))?;
        write_string(out, inst.0.to_json())
    })
}

/// Instance as a PDDL problem named `name`.
///
/// # Safety
/// `inst` must be a live handle, `name` a nul-terminated string and `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn gps_instance_to_pddl(
    inst: *const GpsInstance,
    name: *const c_char,
    out: *mut *mut c_char,
) -> GpsStatus {
    guard(|| {
        let inst = inst.as_ref().ok_or_else(|| null("inst"))?;
        write_string(out, inst.0.to_pddl(read_str(name, "name")?))
    })
}

/// Optimal plan length within `horizon` steps, or -1 when there is none.
///
/// # Safety
/// `inst` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gps_oracle_plan_length(
    inst: *const GpsInstance,
    horizon: usize,
    out: *mut i64,
) -> GpsStatus {
    guard(|| {
        let inst = inst.as_ref().ok_or_else(|| null("inst"))?;
        let len = oracle::optimal_plan(&inst.0, horizon)?.map_or(-1, |p| p.len() as i64);
        write_out(out, len, "out")
    })
}

/// Builds a policy from a short form such as `oracle-greedy` or
/// `stepwise:10`, or from a JSON object.
///
/// # Safety
/// `spec` must be a nul-terminated string and `out` writable. The handle
/// must be released with [`gps_policy_free`].
#[no_mangle]
pub unsafe extern "C" fn gps_policy_new(spec: *const c_char, out: *mut *mut GpsPolicy) -> GpsStatus {
    guard(|| {
        let policy = PolicySpec::parse(read_str(spec, "spec")?)?.build()?;
        write_out(out, Box::into_raw(Box::new(GpsPolicy(policy))), "out")
    })
}

/// # Safety
/// `policy` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn gps_policy_free(policy: *mut GpsPolicy) {
    if !policy.is_null() {
        drop(Box::from_raw(policy));
    }
}

/// Rolls `policy` out on `inst` under plan-length `bound`. The random
/// stream is seeded from the instance seed xor `salt`.
///
/// # Safety
/// `policy` and `inst` must be live handles and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gps_run(
    policy: *mut GpsPolicy,
    inst: *const GpsInstance,
    bound: usize,
    salt: u64,
    out: *mut GpsRunOutcome,
) -> GpsStatus {
    guard(|| {
        let policy = policy.as_mut().ok_or_else(|| null("policy"))?;
        let inst = inst.as_ref().ok_or_else(|| null("inst"))?;
        let mut rng = rollout_rng(&inst.0, salt);
        let r = run_policy(policy.0.as_mut(), &inst.0, bound, &mut rng);
        write_out(
            out,
            GpsRunOutcome {
                solved: r.solved,
                steps: r.steps,
            },
            "out",
        )
    })
}

/// Scaling evaluation of `policy` on `domain`. `params_json` holds an
/// evaluation parameter object (missing fields take defaults) or is null.
/// The result is the scaling curve as JSON.
///
/// # Safety
/// `policy` must be a live handle, `domain` a nul-terminated string,
/// `params_json` null or a nul-terminated string, and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gps_evaluate_json(
    policy: *mut GpsPolicy,
    domain: *const c_char,
    params_json: *const c_char,
    out: *mut *mut c_char,
) -> GpsStatus {
    guard(|| {
        let policy = policy.as_mut().ok_or_else(|| null("policy"))?;
        let domain = read_str(domain, "domain")?;
        let params: EvalParams = if params_json.is_null() {
            EvalParams::default()
        } else {
            serde_json::from_str(read_str(params_json, "params_json")?).map_err(Error::from)?
        };
        let curve = evaluate_scaling(policy.0.as_mut(), domain, &params)?;
        write_string(out, serde_json::to_string(&curve).map_err(Error::from)?)
    })
}

/// `p`-quantile of Student's t with `df` degrees of freedom.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gps_t_quantile(p: f64, df: u64, out: *mut f64) -> GpsStatus {
    guard(|| write_out(out, stats::t_quantile(p, df)?, "out"))
}

unsafe fn read_curve(sizes: *const usize, coverage: *const f64, len: usize) -> FfiResult<Vec<(usize, f64)>> {
    if len == 0 {
        return Ok(Vec::new());
    }
    if sizes.is_null() || coverage.is_null() {
        return Err(null("sizes/coverage"));
    }
    let s = std::slice::from_raw_parts(sizes, len);
    let c = std::slice::from_raw_parts(coverage, len);
    Ok(s.iter().copied().zip(c.iter().copied()).collect())
}

/// Scale of a coverage curve given as parallel arrays of length `len`.
///
/// # Safety
/// `sizes` and `coverage` must point to `len` readable elements and `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn gps_scale(
    sizes: *const usize,
    coverage: *const f64,
    len: usize,
    tau: f64,
    zeta: usize,
    out: *mut usize,
) -> GpsStatus {
    guard(|| {
        let curve = read_curve(sizes, coverage, len)?;
        write_out(out, stats::scale_metric(&curve, tau, zeta)?, "out")
    })
}

/// SumCov of a coverage curve. `up_to_scale` selects the variant that
/// only adds entries up to the Scale size.
///
/// # Safety
/// As for [`gps_scale`].
#[no_mangle]
pub unsafe extern "C" fn gps_sumcov(
    sizes: *const usize,
    coverage: *const f64,
    len: usize,
    tau: f64,
    zeta: usize,
    up_to_scale: bool,
    out: *mut f64,
) -> GpsStatus {
    guard(|| {
        let curve = read_curve(sizes, coverage, len)?;
        let mode = if up_to_scale {
            stats::SumCovMode::UpToScale
        } else {
            stats::SumCovMode::ThroughTermination
        };
        write_out(out, stats::sumcov_metric(&curve, tau, zeta, mode)?, "out")
    })
}
