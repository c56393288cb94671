//! C ABI over the dolfree library: opaque handles, integer status codes, and
//! a thread-local last-error message. Every exported symbol carries the
//! `dolfree_` prefix, and the matching header is generated into
//! `include/dolfree.h` at build time.
//!
//! Conventions shared by the whole surface:
//! - Functions that can fail return [`DolfreeStatus`]; `DOLFREE_STATUS_OK`
//!   is zero and every failure is negative.
//! - Out-parameters are written only on success.
//! - Handles are created and destroyed by this library alone. Passing a
//!   handle to the wrong `*_free` (or freeing twice) is undefined behavior,
//!   as in any C API.
//! - Enum parameters must hold a declared variant; C callers passing stray
//!   integers get undefined behavior.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::io::BufWriter;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use dolfree::geometry::{DecisionSet, GeometryError};
use dolfree::harness::{self, HarnessError, LearnerChoice, RunSpec, StreamChoice};
use dolfree::learners::{make_preset, PresetInputs, PresetKind};
use dolfree::network::{MixingMatrix, Topology};

/// Status code returned by every fallible entry point.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DolfreeStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = -1,
    /// Arguments were structurally valid but rejected (bad shape, bad range).
    InvalidArgument = -2,
    /// A numerical routine failed or flagged its result as unreliable.
    Numerical = -3,
    /// The operating system refused a file operation.
    Io = -4,
    /// A string argument was not valid UTF-8.
    Utf8 = -5,
}

/// Gossip graph shape for [`dolfree_mixing_build`].
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub enum DolfreeTopology {
    Complete = 0,
    Cycle = 1,
    Grid = 2,
}

/// Learner driven by [`dolfree_run_synthetic_csv`].
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub enum DolfreeLearner {
    /// Block learner with exact gradients.
    DBocg = 0,
    /// Block learner with one-point bandit estimates.
    DBbcg = 1,
    /// Per-round baseline that gossips every step.
    DOcg = 2,
}

/// Synthetic loss stream family.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub enum DolfreeStream {
    Convex = 0,
    StronglyConvex = 1,
}

/// Parameter preset, or `None` for learners tuned by hand (D-OCG).
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub enum DolfreePresetChoice {
    ConvexFull = 0,
    StronglyConvexFull = 1,
    ConvexBandit = 2,
    StronglyConvexBandit = 3,
    HighProbBandit = 4,
    None = 5,
}

/// Problem constants consumed by [`dolfree_preset_fill`].
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct DolfreePresetInputs {
    pub horizon: u64,
    pub nodes: u64,
    pub dim: u64,
    /// Second-largest singular value of the gossip matrix.
    pub sigma2: f64,
    pub lipschitz: f64,
    pub value_bound: f64,
    pub circumradius: f64,
    pub inradius: f64,
    /// Strong convexity modulus; zero for merely convex losses.
    pub alpha: f64,
    /// Failure probability budget for the high-probability preset.
    pub gamma: f64,
    /// Multiplier on the regularization weight.
    pub c_tune: f64,
    /// Multiplier on the exploration radius.
    pub delta_c: f64,
}

/// Block-learner parameters produced by [`dolfree_preset_fill`].
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct DolfreeBlockParams {
    /// Rounds per block.
    pub k_block: u64,
    /// Inner solver iterations per block.
    pub l_iters: u64,
    /// Regularization weight.
    pub h: f64,
    /// Strong convexity modulus baked into the surrogate.
    pub alpha: f64,
}

/// Everything needed to reproduce one synthetic run.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct DolfreeRunConfig {
    pub stream: DolfreeStream,
    pub topology: DolfreeTopology,
    pub learner: DolfreeLearner,
    /// Must be a bandit preset for `DBBCG`, a full-information preset for
    /// `DBOCG`, and `None` for `DOCG`.
    pub preset: DolfreePresetChoice,
    pub nodes: u64,
    pub horizon: u64,
    pub dim: u64,
    pub seed: u64,
    pub c_tune: f64,
    pub delta_c: f64,
    pub gamma: f64,
    /// Gradient scale of the synthetic losses.
    pub g: f64,
    /// Strong convexity modulus of the strongly convex stream.
    pub alpha: f64,
}

/// Opaque feasible-set handle.
pub struct DolfreeSet(DecisionSet);

/// Opaque gossip-matrix handle.
pub struct DolfreeMixing(MixingMatrix);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: &str) {
    let sanitized: String = message.chars().map(|c| if c == '\0' { ' ' } else { c }).collect();
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).ok();
    });
}

fn fail(status: DolfreeStatus, message: &str) -> DolfreeStatus {
    set_last_error(message);
    status
}

fn geometry_status(e: &GeometryError) -> DolfreeStatus {
    match e {
        GeometryError::PowerIterationStalled { .. } => DolfreeStatus::Numerical,
        _ => DolfreeStatus::InvalidArgument,
    }
}

/// Convert panics into a status so unwinding never crosses the C boundary.
fn guarded<F: FnOnce() -> DolfreeStatus>(body: F) -> DolfreeStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => fail(DolfreeStatus::Numerical, "internal panic"),
    }
}

/// Version of the underlying library as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn dolfree_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message describing this thread's most recent failure, or null if every
/// call so far succeeded. The pointer stays valid until the next failing
/// call on the same thread.
#[no_mangle]
pub extern "C" fn dolfree_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| match &*slot.borrow() {
        Some(msg) => msg.as_ptr(),
        None => std::ptr::null(),
    })
}

fn emit_set(
    out: *mut *mut DolfreeSet,
    built: Result<DecisionSet, GeometryError>,
) -> DolfreeStatus {
    if out.is_null() {
        return fail(DolfreeStatus::NullPointer, "out pointer is null");
    }
    match built {
        Ok(set) => {
            unsafe { *out = Box::into_raw(Box::new(DolfreeSet(set))) };
            DolfreeStatus::Ok
        }
        Err(e) => fail(geometry_status(&e), &e.to_string()),
    }
}

/// Create an origin-centered box with the given half-width per coordinate.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn dolfree_set_hypercube(
    halfwidth: f64,
    dim: u64,
    out: *mut *mut DolfreeSet,
) -> DolfreeStatus {
    emit_set(out, DecisionSet::hypercube(halfwidth, dim as usize))
}

/// Create an L1 ball of radius `tau`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn dolfree_set_l1_ball(
    tau: f64,
    dim: u64,
    out: *mut *mut DolfreeSet,
) -> DolfreeStatus {
    emit_set(out, DecisionSet::l1_ball(tau, dim as usize))
}

/// Create a Euclidean ball of the given radius.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn dolfree_set_euclidean_ball(
    radius: f64,
    dim: u64,
    out: *mut *mut DolfreeSet,
) -> DolfreeStatus {
    emit_set(out, DecisionSet::euclidean_ball(radius, dim as usize))
}

/// Create a trace-norm ball over row-major `rows x cols` matrices.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn dolfree_set_trace_norm_ball(
    tau: f64,
    rows: u64,
    cols: u64,
    out: *mut *mut DolfreeSet,
) -> DolfreeStatus {
    emit_set(out, DecisionSet::trace_norm_ball(tau, rows as usize, cols as usize))
}

/// Ambient dimension of the set, or 0 when the handle is null.
///
/// # Safety
/// `set` must be null or a live handle from one of the constructors.
#[no_mangle]
pub unsafe extern "C" fn dolfree_set_dim(set: *const DolfreeSet) -> u64 {
    if set.is_null() {
        return 0;
    }
    (*set).0.dim() as u64
}

/// Radius of the largest origin-centered Euclidean ball inside the set, or
/// NaN when the handle is null.
///
/// # Safety
/// `set` must be null or a live handle from one of the constructors.
#[no_mangle]
pub unsafe extern "C" fn dolfree_set_inradius(set: *const DolfreeSet) -> f64 {
    if set.is_null() {
        return f64::NAN;
    }
    (*set).0.inradius()
}

/// Smallest R such that every member has Euclidean norm at most R, or NaN
/// when the handle is null.
///
/// # Safety
/// `set` must be null or a live handle from one of the constructors.
#[no_mangle]
pub unsafe extern "C" fn dolfree_set_circumradius(set: *const DolfreeSet) -> f64 {
    if set.is_null() {
        return f64::NAN;
    }
    (*set).0.circumradius()
}

/// Write the set member minimizing the inner product with `direction` into
/// `out`. `len` must equal the set's dimension; `out` receives `len` values.
///
/// # Safety
/// `direction` and `out` must point to `len` readable (respectively
/// writable) doubles, and `set` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn dolfree_set_lmo(
    set: *const DolfreeSet,
    direction: *const f64,
    len: u64,
    out: *mut f64,
) -> DolfreeStatus {
    if set.is_null() || direction.is_null() || out.is_null() {
        return fail(DolfreeStatus::NullPointer, "set, direction, and out must be non-null");
    }
    let set = &(*set).0;
    if len as usize != set.dim() {
        return fail(DolfreeStatus::InvalidArgument, "direction length does not match the set dimension");
    }
    let dir = std::slice::from_raw_parts(direction, len as usize);
    guarded(|| match set.lmo(dir) {
        Ok(v) => {
            std::ptr::copy_nonoverlapping(v.as_ptr(), out, v.len());
            DolfreeStatus::Ok
        }
        Err(e) => fail(geometry_status(&e), &e.to_string()),
    })
}

/// Set `*inside` to 1 when `x` belongs to the set within the relative
/// tolerance `tol`, else 0.
///
/// # Safety
/// `x` must point to `len` readable doubles, `inside` must be writable, and
/// `set` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn dolfree_set_contains(
    set: *const DolfreeSet,
    x: *const f64,
    len: u64,
    tol: f64,
    inside: *mut c_int,
) -> DolfreeStatus {
    if set.is_null() || x.is_null() || inside.is_null() {
        return fail(DolfreeStatus::NullPointer, "set, x, and inside must be non-null");
    }
    let point = std::slice::from_raw_parts(x, len as usize);
    *inside = c_int::from((*set).0.contains(point, tol));
    DolfreeStatus::Ok
}

/// Destroy a set handle. Null is a no-op.
///
/// # Safety
/// `set` must be null or a live handle, and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn dolfree_set_free(set: *mut DolfreeSet) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

/// Build the symmetric doubly stochastic gossip matrix for a topology.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn dolfree_mixing_build(
    topology: DolfreeTopology,
    nodes: u64,
    out: *mut *mut DolfreeMixing,
) -> DolfreeStatus {
    if out.is_null() {
        return fail(DolfreeStatus::NullPointer, "out pointer is null");
    }
    let topo = match topology {
        DolfreeTopology::Complete => Topology::Complete,
        DolfreeTopology::Cycle => Topology::Cycle,
        DolfreeTopology::Grid => Topology::Grid,
    };
    guarded(|| match MixingMatrix::from_topology(topo, nodes as usize) {
        Ok(m) => {
            *out = Box::into_raw(Box::new(DolfreeMixing(m)));
            DolfreeStatus::Ok
        }
        Err(e) => fail(DolfreeStatus::InvalidArgument, &e.to_string()),
    })
}

/// Number of nodes, or 0 when the handle is null.
///
/// # Safety
/// `mixing` must be null or a live handle from [`dolfree_mixing_build`].
#[no_mangle]
pub unsafe extern "C" fn dolfree_mixing_nodes(mixing: *const DolfreeMixing) -> u64 {
    if mixing.is_null() {
        return 0;
    }
    (*mixing).0.n() as u64
}

/// Second-largest singular value, or NaN when the handle is null.
///
/// # Safety
/// `mixing` must be null or a live handle from [`dolfree_mixing_build`].
#[no_mangle]
pub unsafe extern "C" fn dolfree_mixing_sigma2(mixing: *const DolfreeMixing) -> f64 {
    if mixing.is_null() {
        return f64::NAN;
    }
    (*mixing).0.sigma2()
}

/// 1 when the lazy `(P + I) / 2` correction was applied, 0 when it was not,
/// -1 when the handle is null.
///
/// # Safety
/// `mixing` must be null or a live handle from [`dolfree_mixing_build`].
#[no_mangle]
pub unsafe extern "C" fn dolfree_mixing_lazy_applied(mixing: *const DolfreeMixing) -> c_int {
    if mixing.is_null() {
        return -1;
    }
    c_int::from((*mixing).0.lazy_applied())
}

/// Entry (i, j) of the gossip matrix, or NaN when the handle is null or the
/// indices are out of range.
///
/// # Safety
/// `mixing` must be null or a live handle from [`dolfree_mixing_build`].
#[no_mangle]
pub unsafe extern "C" fn dolfree_mixing_weight(
    mixing: *const DolfreeMixing,
    i: u64,
    j: u64,
) -> f64 {
    if mixing.is_null() {
        return f64::NAN;
    }
    let m = &(*mixing).0;
    if i as usize >= m.n() || j as usize >= m.n() {
        return f64::NAN;
    }
    m.weight(i as usize, j as usize)
}

/// Destroy a mixing handle. Null is a no-op.
///
/// # Safety
/// `mixing` must be null or a live handle, and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn dolfree_mixing_free(mixing: *mut DolfreeMixing) {
    if !mixing.is_null() {
        drop(Box::from_raw(mixing));
    }
}

/// Derive block parameters (and, for bandit presets, the exploration radius
/// written to `out_delta`; full-information presets write 0).
///
/// # Safety
/// `inputs`, `out_params`, and `out_delta` must be valid for one read or
/// write of their respective types.
#[no_mangle]
pub unsafe extern "C" fn dolfree_preset_fill(
    preset: DolfreePresetChoice,
    inputs: *const DolfreePresetInputs,
    out_params: *mut DolfreeBlockParams,
    out_delta: *mut f64,
) -> DolfreeStatus {
    if inputs.is_null() || out_params.is_null() || out_delta.is_null() {
        return fail(DolfreeStatus::NullPointer, "inputs, out_params, and out_delta must be non-null");
    }
    let kind = match preset {
        DolfreePresetChoice::ConvexFull => PresetKind::ConvexFull,
        DolfreePresetChoice::StronglyConvexFull => PresetKind::StronglyConvexFull,
        DolfreePresetChoice::ConvexBandit => PresetKind::ConvexBandit,
        DolfreePresetChoice::StronglyConvexBandit => PresetKind::StronglyConvexBandit,
        DolfreePresetChoice::HighProbBandit => PresetKind::HighProbBandit,
        DolfreePresetChoice::None => {
            return fail(DolfreeStatus::InvalidArgument, "preset fill needs a concrete preset")
        }
    };
    let c = &*inputs;
    let rust_inputs = PresetInputs {
        horizon: c.horizon as usize,
        nodes: c.nodes as usize,
        dim: c.dim as usize,
        sigma2: c.sigma2,
        lipschitz: c.lipschitz,
        value_bound: c.value_bound,
        circumradius: c.circumradius,
        inradius: c.inradius,
        alpha: c.alpha,
        gamma: c.gamma,
        c_tune: c.c_tune,
        delta_c: c.delta_c,
    };
    guarded(|| match make_preset(kind, &rust_inputs) {
        Ok(preset) => {
            *out_params = DolfreeBlockParams {
                k_block: preset.params.k_block as u64,
                l_iters: preset.params.l_iters as u64,
                h: preset.params.h,
                alpha: preset.params.alpha,
            };
            *out_delta = preset.delta.unwrap_or(0.0);
            DolfreeStatus::Ok
        }
        Err(e) => fail(DolfreeStatus::InvalidArgument, &e.to_string()),
    })
}

fn harness_status(e: &HarnessError) -> DolfreeStatus {
    match e {
        HarnessError::Config(_) => DolfreeStatus::InvalidArgument,
        HarnessError::Numerical(_) => DolfreeStatus::Numerical,
        HarnessError::Io(_) => DolfreeStatus::Io,
    }
}

/// Run one synthetic simulation and write its per-round trace CSV (the same
/// format the `dolfree` CLI emits) to `out_path`. Identical configs produce
/// byte-identical files.
///
/// # Safety
/// `config` must be valid for one read and `out_path` must be a
/// NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn dolfree_run_synthetic_csv(
    config: *const DolfreeRunConfig,
    out_path: *const c_char,
) -> DolfreeStatus {
    if config.is_null() || out_path.is_null() {
        return fail(DolfreeStatus::NullPointer, "config and out_path must be non-null");
    }
    let path = match CStr::from_ptr(out_path).to_str() {
        Ok(s) => PathBuf::from(s),
        Err(_) => return fail(DolfreeStatus::Utf8, "out_path is not valid UTF-8"),
    };
    let c = &*config;
    let spec = RunSpec {
        stream: match c.stream {
            DolfreeStream::Convex => StreamChoice::SyntheticConvex,
            DolfreeStream::StronglyConvex => StreamChoice::SyntheticStronglyConvex,
        },
        topology: match c.topology {
            DolfreeTopology::Complete => Topology::Complete,
            DolfreeTopology::Cycle => Topology::Cycle,
            DolfreeTopology::Grid => Topology::Grid,
        },
        nodes: c.nodes as usize,
        learner: match c.learner {
            DolfreeLearner::DBocg => LearnerChoice::DBocg,
            DolfreeLearner::DBbcg => LearnerChoice::DBbcg,
            DolfreeLearner::DOcg => LearnerChoice::DOcg,
        },
        preset: match c.preset {
            DolfreePresetChoice::ConvexFull => Some(PresetKind::ConvexFull),
            DolfreePresetChoice::StronglyConvexFull => Some(PresetKind::StronglyConvexFull),
            DolfreePresetChoice::ConvexBandit => Some(PresetKind::ConvexBandit),
            DolfreePresetChoice::StronglyConvexBandit => Some(PresetKind::StronglyConvexBandit),
            DolfreePresetChoice::HighProbBandit => Some(PresetKind::HighProbBandit),
            DolfreePresetChoice::None => None,
        },
        c_tune: c.c_tune,
        delta_c: c.delta_c,
        gamma: c.gamma,
        seed: c.seed,
        horizon: Some(c.horizon as usize),
        dim: c.dim as usize,
        g: c.g,
        alpha: c.alpha,
        ..RunSpec::default()
    };
    guarded(|| {
        let artifacts = match harness::execute_run(&spec) {
            Ok(a) => a,
            Err(e) => return fail(harness_status(&e), &e.to_string()),
        };
        let file = match std::fs::File::create(&path) {
            Ok(f) => f,
            Err(e) => return fail(DolfreeStatus::Io, &e.to_string()),
        };
        let mut w = BufWriter::new(file);
        match harness::write_trace_csv(&mut w, &artifacts.trace, &artifacts.echo) {
            Ok(()) => DolfreeStatus::Ok,
            Err(e) => fail(DolfreeStatus::Io, &e.to_string()),
        }
    })
}
