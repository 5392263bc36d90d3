//! C ABI over `conewidth`: opaque handles, status codes and a thread-local
//! last-error message.
//!
//! Every fallible function returns a [`CwStatus`] and writes results through
//! out-pointers. Handles are released with the matching `*_free` function;
//! passing NULL to a `*_free` function is a no-op.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use conewidth::acceptance::keep_going;
use conewidth::builder::{theorem9_build, Theorem9Cfg};
use conewidth::field::ScalarField;
use conewidth::geometry::{gen_cantor_product, gen_four_corner_cantor, Cone, GridDomain, GridSet, PointCloud};
use conewidth::width::{width_brute_force, width_open};
use conewidth::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CwStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Format = 4,
    /// The brute-force oracle refused a grid above its node budget.
    BudgetExceeded = 5,
    /// A construction or certificate precondition did not hold.
    Computation = 6,
    Panic = 7,
}

/// Rasterized open set on a planar grid.
pub struct CwGridSet(GridSet);

/// Finite planar point set, optionally with normal data.
pub struct CwPointCloud(PointCloud);

/// Scalar field sampled on grid nodes.
pub struct CwField(ScalarField);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> CwStatus {
    match e {
        Error::Io(_) => CwStatus::Io,
        Error::Format { .. } | Error::Csv(_) => CwStatus::Format,
        Error::NodeBudgetExceeded { .. } => CwStatus::BudgetExceeded,
        Error::InvalidInput(_)
        | Error::Config(_)
        | Error::DimensionMismatch { .. }
        | Error::OutsideDomain { .. }
        | Error::EmptyStepSet { .. } => CwStatus::InvalidArgument,
        _ => CwStatus::Computation,
    }
}

enum Fail {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> CwStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            CwStatus::Ok
        }
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("{what} is NULL"));
            CwStatus::NullPointer
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            CwStatus::Panic
        }
    }
}

unsafe fn get<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

unsafe fn put<T>(out: *mut T, v: T, what: &'static str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail::Null(what));
    }
    out.write(v);
    Ok(())
}

unsafe fn path_arg(p: *const c_char) -> Result<PathBuf, Fail> {
    if p.is_null() {
        return Err(Fail::Null("path"));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Error::invalid("path is not valid UTF-8"))?;
    Ok(PathBuf::from(s))
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn cw_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cw_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Grid set on `nx × ny` cells of side `spacing` with lower-left corner
/// `(origin_x, origin_y)`. `occupancy` has `nx*ny` bytes, x fastest; nonzero
/// marks an occupied cell. `padding` empty cells are added on every side.
///
/// # Safety
/// `occupancy` must point to `nx*ny` readable bytes and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cw_grid_set_new(
    origin_x: f64,
    origin_y: f64,
    spacing: f64,
    nx: usize,
    ny: usize,
    padding: usize,
    occupancy: *const u8,
    out: *mut *mut CwGridSet,
) -> CwStatus {
    guard(|| {
        if occupancy.is_null() {
            return Err(Fail::Null("occupancy"));
        }
        let d = GridDomain::new([origin_x, origin_y], spacing, vec![nx, ny], padding)?;
        let occ = std::slice::from_raw_parts(occupancy, nx * ny);
        let g = GridSet::from_cells(d, |idx| occ[(idx[0] - padding) + nx * (idx[1] - padding)] != 0);
        put(out, boxed(CwGridSet(g)), "out")
    })
}

/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cw_grid_set_read_pbm(path: *const c_char, out: *mut *mut CwGridSet) -> CwStatus {
    guard(|| {
        let g = GridSet::read_pbm(&path_arg(path)?)?;
        put(out, boxed(CwGridSet(g)), "out")
    })
}

/// # Safety
/// `set` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn cw_grid_set_write_pbm(set: *const CwGridSet, path: *const c_char) -> CwStatus {
    guard(|| {
        get(set, "set")?.0.write_pbm(&path_arg(path)?)?;
        Ok(())
    })
}

/// # Safety
/// `set` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cw_grid_set_count(set: *const CwGridSet, out: *mut usize) -> CwStatus {
    guard(|| put(out, get(set, "set")?.0.count(), "out"))
}

/// # Safety
/// `set` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cw_grid_set_free(set: *mut CwGridSet) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

/// Width of `set` for the cone with axis `(axis_x, axis_y)` and `aperture`,
/// over lattice paths with steps up to `s_max`.
///
/// # Safety
/// `set` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cw_width(
    set: *const CwGridSet,
    axis_x: f64,
    axis_y: f64,
    aperture: f64,
    s_max: usize,
    out: *mut f64,
) -> CwStatus {
    guard(|| {
        let cone = Cone::new([axis_x, axis_y], aperture)?;
        let w = width_open(&get(set, "set")?.0, &cone, s_max)?;
        put(out, w.value, "out")
    })
}

/// Exhaustive path enumeration; small grids only.
///
/// # Safety
/// `set` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cw_width_brute_force(
    set: *const CwGridSet,
    axis_x: f64,
    axis_y: f64,
    aperture: f64,
    s_max: usize,
    out: *mut f64,
) -> CwStatus {
    guard(|| {
        let cone = Cone::new([axis_x, axis_y], aperture)?;
        put(out, width_brute_force(&get(set, "set")?.0, &cone, s_max)?, "out")
    })
}

/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cw_point_cloud_read_csv(path: *const c_char, out: *mut *mut CwPointCloud) -> CwStatus {
    guard(|| {
        let pc = PointCloud::read_csv(&path_arg(path)?)?;
        put(out, boxed(CwPointCloud(pc)), "out")
    })
}

/// Four-corner Cantor set at `depth` (4^depth points).
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cw_point_cloud_four_corner(depth: u32, out: *mut *mut CwPointCloud) -> CwStatus {
    guard(|| put(out, boxed(CwPointCloud(gen_four_corner_cantor(depth)?)), "out"))
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cw_point_cloud_cantor_product(
    ratio: f64,
    depth: u32,
    y_samples: usize,
    out: *mut *mut CwPointCloud,
) -> CwStatus {
    guard(|| put(out, boxed(CwPointCloud(gen_cantor_product(ratio, depth, y_samples)?)), "out"))
}

/// # Safety
/// `pc` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cw_point_cloud_len(pc: *const CwPointCloud, out: *mut usize) -> CwStatus {
    guard(|| put(out, get(pc, "pc")?.0.len(), "out"))
}

/// Coordinates of point `index` into `xy[0..2]`.
///
/// # Safety
/// `pc` must be a live handle and `xy` must have room for two doubles.
#[no_mangle]
pub unsafe extern "C" fn cw_point_cloud_point(pc: *const CwPointCloud, index: usize, xy: *mut f64) -> CwStatus {
    guard(|| {
        let pts = get(pc, "pc")?.0.points();
        let p = pts
            .get(index)
            .ok_or_else(|| Error::invalid(format!("index {index} out of range for {} points", pts.len())))?;
        if xy.is_null() {
            return Err(Fail::Null("xy"));
        }
        let s = std::slice::from_raw_parts_mut(xy, 2);
        s.copy_from_slice(&[p[0], p[1]]);
        Ok(())
    })
}

/// # Safety
/// `pc` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cw_point_cloud_free(pc: *mut CwPointCloud) {
    if !pc.is_null() {
        drop(Box::from_raw(pc));
    }
}

/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cw_field_read(path: *const c_char, out: *mut *mut CwField) -> CwStatus {
    guard(|| {
        let f = ScalarField::read_binary(&path_arg(path)?)?;
        put(out, boxed(CwField(f)), "out")
    })
}

/// # Safety
/// `field` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn cw_field_write(field: *const CwField, path: *const c_char) -> CwStatus {
    guard(|| {
        get(field, "field")?.0.write_binary(&path_arg(path)?)?;
        Ok(())
    })
}

/// Multilinear interpolation at `(x, y)`.
///
/// # Safety
/// `field` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cw_field_evaluate(field: *const CwField, x: f64, y: f64, out: *mut f64) -> CwStatus {
    guard(|| put(out, get(field, "field")?.0.evaluate(&[x, y])?, "out"))
}

/// # Safety
/// `field` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cw_field_lipschitz(field: *const CwField, out: *mut f64) -> CwStatus {
    guard(|| put(out, get(field, "field")?.0.lipschitz(), "out"))
}

/// # Safety
/// `field` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cw_field_free(field: *mut CwField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// Theorem-9 pipeline on the square `[lo, hi]²` at spacing `h` with `steps`
/// directions; stage assertion failures are recorded, not fatal.
///
/// # Safety
/// `pc` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cw_build_theorem9(
    pc: *const CwPointCloud,
    lo: f64,
    hi: f64,
    h: f64,
    steps: usize,
    out: *mut *mut CwField,
) -> CwStatus {
    guard(|| {
        let d = GridDomain::square(lo, hi, h, 0)?;
        let cfg = Theorem9Cfg {
            recursion: keep_going(),
            ..Default::default()
        };
        let o = theorem9_build(&get(pc, "pc")?.0, &d, steps, &cfg)?;
        put(out, boxed(CwField(o.f)), "out")
    })
}
