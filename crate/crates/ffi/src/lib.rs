//! C interface. A computed skeleton lives behind an opaque `EskelSkeleton`
//! handle; every fallible call returns an `EskelStatus` and leaves a message
//! for `eskel_last_error_message` on failure.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use eskel::geom2d::Point2;
use eskel::pipeline::{run_pipeline, Pipeline, PipelineError, RunConfig};

/// Status codes; the non-zero values match the command-line exit codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EskelStatus {
    Ok = 0,
    CheckFailed = 1,
    InvalidArgument = 2,
    Polygon = 3,
    Equilibrium = 4,
    Field = 5,
    Skeleton = 6,
    Measure = 7,
    Verification = 8,
    Io = 9,
    /// A Rust panic was caught at the boundary.
    Internal = 10,
}

impl From<&PipelineError> for EskelStatus {
    fn from(e: &PipelineError) -> Self {
        match e.exit_code() {
            2 => Self::InvalidArgument,
            3 => Self::Polygon,
            4 => Self::Equilibrium,
            5 => Self::Field,
            6 => Self::Skeleton,
            7 => Self::Measure,
            8 => Self::Verification,
            9 => Self::Io,
            _ => Self::Internal,
        }
    }
}

/// Resolution parameters; `eskel_config_default` fills in the defaults.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EskelConfig {
    pub panels_per_side: usize,
    pub grading: f64,
    pub grid_resolution: usize,
    pub samples_per_arc: usize,
}

impl From<&EskelConfig> for RunConfig {
    fn from(c: &EskelConfig) -> Self {
        RunConfig {
            panels_per_side: c.panels_per_side,
            grading: c.grading,
            grid_resolution: c.grid_resolution,
            samples_per_arc: c.samples_per_arc,
            ..RunConfig::default()
        }
    }
}

/// Opaque handle to a computed skeleton and its Riesz measure.
pub struct EskelSkeleton {
    pipeline: Pipeline,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn fail(status: EskelStatus, msg: impl Into<String>) -> EskelStatus {
    set_error(msg);
    status
}

/// Runs `f`, turning a panic into `Internal`.
fn guard(f: impl FnOnce() -> EskelStatus) -> EskelStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(EskelStatus::Internal, format!("internal error: {msg}"))
        }
    }
}

fn handle<'a>(h: *const EskelSkeleton) -> Result<&'a Pipeline, EskelStatus> {
    // SAFETY: callers pass a handle from eskel_compute that was not freed.
    unsafe { h.as_ref() }
        .map(|s| &s.pipeline)
        .ok_or_else(|| fail(EskelStatus::InvalidArgument, "null skeleton handle"))
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s).map_or(ptr::null_mut(), CString::into_raw)
}

/// Library version, static storage.
#[no_mangle]
pub extern "C" fn eskel_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn eskel_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// # Safety
/// `out` must be NULL or point to writable memory for one `EskelConfig`.
#[no_mangle]
pub unsafe extern "C" fn eskel_config_default(out: *mut EskelConfig) -> EskelStatus {
    guard(|| {
        let Some(out) = (unsafe { out.as_mut() }) else {
            return fail(EskelStatus::InvalidArgument, "null config pointer");
        };
        let d = RunConfig::default();
        *out = EskelConfig {
            panels_per_side: d.panels_per_side,
            grading: d.grading,
            grid_resolution: d.grid_resolution,
            samples_per_arc: d.samples_per_arc,
        };
        EskelStatus::Ok
    })
}

/// Computes the skeleton of the polygon with `n_vertices` vertices stored
/// as `x0, y0, x1, y1, ...` in `xy`. `config` may be NULL for defaults. On
/// success `*out` receives a handle to release with `eskel_skeleton_free`.
///
/// # Safety
/// `xy` must point to `2 * n_vertices` readable doubles; `config` must be
/// NULL or valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn eskel_compute(
    xy: *const f64,
    n_vertices: usize,
    config: *const EskelConfig,
    out: *mut *mut EskelSkeleton,
) -> EskelStatus {
    guard(|| {
        if xy.is_null() || out.is_null() {
            return fail(EskelStatus::InvalidArgument, "null vertex or output pointer");
        }
        unsafe { *out = ptr::null_mut() };
        let coords = unsafe { std::slice::from_raw_parts(xy, 2 * n_vertices) };
        let mut run = match unsafe { config.as_ref() } {
            Some(c) => RunConfig::from(c),
            None => RunConfig::default(),
        };
        run.vertices = coords.chunks(2).map(|c| Point2::new(c[0], c[1])).collect();
        match run_pipeline(&run) {
            Ok(pipeline) => {
                unsafe { *out = Box::into_raw(Box::new(EskelSkeleton { pipeline })) };
                EskelStatus::Ok
            }
            Err(e) => fail(EskelStatus::from(&e), e.to_string()),
        }
    })
}

/// Releases a handle; NULL is ignored.
///
/// # Safety
/// `h` must be NULL or a handle from `eskel_compute` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn eskel_skeleton_free(h: *mut EskelSkeleton) {
    if !h.is_null() {
        drop(unsafe { Box::from_raw(h) });
    }
}

/// Arc, junction and region counts; any output pointer may be NULL.
///
/// # Safety
/// `h` must be a live handle; non-NULL outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn eskel_skeleton_counts(
    h: *const EskelSkeleton,
    arcs: *mut usize,
    junctions: *mut usize,
    regions: *mut usize,
) -> EskelStatus {
    guard(|| {
        let p = match handle(h) {
            Ok(p) => p,
            Err(s) => return s,
        };
        for (dst, v) in [
            (arcs, p.skeleton.arcs.len()),
            (junctions, p.skeleton.junctions.len()),
            (regions, p.connectivity.region_count()),
        ] {
            if let Some(d) = unsafe { dst.as_mut() } {
                *d = v;
            }
        }
        EskelStatus::Ok
    })
}

/// Total mass of the measure, Robin constant, and whether the complement of
/// the ridge set is connected; any output pointer may be NULL.
///
/// # Safety
/// As for `eskel_skeleton_counts`.
#[no_mangle]
pub unsafe extern "C" fn eskel_skeleton_summary(
    h: *const EskelSkeleton,
    mass: *mut f64,
    robin_constant: *mut f64,
    complement_connected: *mut bool,
) -> EskelStatus {
    guard(|| {
        let p = match handle(h) {
            Ok(p) => p,
            Err(s) => return s,
        };
        if let Some(d) = unsafe { mass.as_mut() } {
            *d = p.measure.total_mass();
        }
        if let Some(d) = unsafe { robin_constant.as_mut() } {
            *d = p.fields.solution().robin_constant();
        }
        if let Some(d) = unsafe { complement_connected.as_mut() } {
            *d = p.connectivity.complement_connected;
        }
        EskelStatus::Ok
    })
}

/// Copies arc `arc` into `xy` as `x0, y0, ...` and its face pair into
/// `pair[0..2]`. `*n_points` receives the point count; if `capacity` (in
/// points) is too small nothing is copied and `INVALID_ARGUMENT` is
/// returned, so a first call with `xy = NULL` sizes the buffer.
///
/// # Safety
/// `h` must be live; `xy` must hold `capacity` points or be NULL; `pair`
/// must be NULL or hold two `size_t`; `n_points` must be writable.
#[no_mangle]
pub unsafe extern "C" fn eskel_skeleton_arc(
    h: *const EskelSkeleton,
    arc: usize,
    xy: *mut f64,
    capacity: usize,
    n_points: *mut usize,
    pair: *mut usize,
) -> EskelStatus {
    guard(|| {
        let p = match handle(h) {
            Ok(p) => p,
            Err(s) => return s,
        };
        let Some(a) = p.skeleton.arcs.get(arc) else {
            return fail(EskelStatus::InvalidArgument, format!("no arc {arc}"));
        };
        let Some(n) = (unsafe { n_points.as_mut() }) else {
            return fail(EskelStatus::InvalidArgument, "null point-count pointer");
        };
        *n = a.points.len();
        if !pair.is_null() {
            unsafe {
                *pair = a.pair.0;
                *pair.add(1) = a.pair.1;
            }
        }
        if xy.is_null() {
            return EskelStatus::Ok;
        }
        if capacity < a.points.len() {
            return fail(
                EskelStatus::InvalidArgument,
                format!("buffer holds {capacity} points, arc has {}", a.points.len()),
            );
        }
        let dst = unsafe { std::slice::from_raw_parts_mut(xy, 2 * a.points.len()) };
        for (d, q) in dst.chunks_mut(2).zip(&a.points) {
            d[0] = q.x;
            d[1] = q.y;
        }
        EskelStatus::Ok
    })
}

/// Location of junction `k`.
///
/// # Safety
/// `h` must be live; `x` and `y` must be writable.
#[no_mangle]
pub unsafe extern "C" fn eskel_skeleton_junction(
    h: *const EskelSkeleton,
    k: usize,
    x: *mut f64,
    y: *mut f64,
) -> EskelStatus {
    guard(|| {
        let p = match handle(h) {
            Ok(p) => p,
            Err(s) => return s,
        };
        let Some(j) = p.skeleton.junctions.get(k) else {
            return fail(EskelStatus::InvalidArgument, format!("no junction {k}"));
        };
        if x.is_null() || y.is_null() {
            return fail(EskelStatus::InvalidArgument, "null output pointer");
        }
        unsafe {
            *x = j.location.x;
            *y = j.location.y;
        }
        EskelStatus::Ok
    })
}

/// The full JSON bundle, or NULL on failure. Release with
/// `eskel_string_free`.
///
/// # Safety
/// `h` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn eskel_skeleton_to_json(h: *const EskelSkeleton) -> *mut c_char {
    let mut out = ptr::null_mut();
    guard(|| {
        let p = match handle(h) {
            Ok(p) => p,
            Err(s) => return s,
        };
        match serde_json::to_string(&p.bundle()) {
            Ok(s) => {
                out = into_c_string(s);
                EskelStatus::Ok
            }
            Err(e) => fail(EskelStatus::Io, e.to_string()),
        }
    });
    out
}

/// Runs every verification check. `perturb > 0` tests the perturbed
/// measure instead (negative control). Returns `OK` when all checks pass
/// and `CHECK_FAILED` otherwise; in both cases `*report_json`, if
/// `report_json` is not NULL, receives the report for `eskel_string_free`.
///
/// # Safety
/// `h` must be live; `report_json` must be NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn eskel_verify(
    h: *const EskelSkeleton,
    perturb: f64,
    report_json: *mut *mut c_char,
) -> EskelStatus {
    guard(|| {
        let p = match handle(h) {
            Ok(p) => p,
            Err(s) => return s,
        };
        if let Some(r) = unsafe { report_json.as_mut() } {
            *r = ptr::null_mut();
        }
        if !perturb.is_finite() || perturb >= 1.0 {
            return fail(
                EskelStatus::InvalidArgument,
                format!("perturbation {perturb} outside [0, 1)"),
            );
        }
        let report = match p.verify((perturb > 0.0).then_some(perturb)) {
            Ok(r) => r,
            Err(e) => return fail(EskelStatus::from(&e), e.to_string()),
        };
        if let Some(r) = unsafe { report_json.as_mut() } {
            *r = into_c_string(serde_json::to_string(&report).unwrap_or_default());
        }
        if report.passed {
            EskelStatus::Ok
        } else {
            let failed: Vec<&str> = report.failed_checks().map(|c| c.name.as_str()).collect();
            fail(
                EskelStatus::CheckFailed,
                format!("failed checks: {}", failed.join(", ")),
            )
        }
    })
}

/// Releases a string returned by this library; NULL is ignored.
///
/// # Safety
/// `s` must be NULL or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn eskel_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CStr;

    fn last_error() -> Option<String> {
        let p = eskel_last_error_message();
        (!p.is_null()).then(|| unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned())
    }

    #[test]
    fn defaults_match_the_library() {
        let mut c = EskelConfig {
            panels_per_side: 0,
            grading: 0.0,
            grid_resolution: 0,
            samples_per_arc: 0,
        };
        assert_eq!(unsafe { eskel_config_default(&mut c) }, EskelStatus::Ok);
        assert_eq!(RunConfig::from(&c), RunConfig::default());
        assert_eq!(
            unsafe { eskel_config_default(ptr::null_mut()) },
            EskelStatus::InvalidArgument
        );
        assert!(last_error().unwrap().contains("null"));
    }

    #[test]
    fn errors_map_to_status_and_message() {
        let xy = [0.0, 0.0, 2.0, 0.0, 1.0, 0.3, 1.0, 2.0];
        let mut h = ptr::null_mut();
        let s = unsafe { eskel_compute(xy.as_ptr(), 4, ptr::null(), &mut h) };
        assert_eq!(s, EskelStatus::Polygon);
        assert!(h.is_null());
        assert!(last_error().unwrap().contains("non-convex"));
        let s = unsafe { eskel_skeleton_counts(ptr::null(), ptr::null_mut(), ptr::null_mut(), ptr::null_mut()) };
        assert_eq!(s, EskelStatus::InvalidArgument);
    }

    #[test]
    fn version_is_a_c_string() {
        let v = unsafe { CStr::from_ptr(eskel_version()) };
        assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
    }
}
