//! C ABI over the `l20fs` solver.
//!
//! Objects cross the boundary as opaque handles created by `*_new`/`l20fs_solve`
//! and released with the matching `*_free`. Every fallible call returns an
//! [`L20fsStatus`]; on failure a message is available from
//! [`l20fs_last_error`] on the same thread.
//!
//! Matrices are passed sample-major: sample `j`'s `d` features occupy
//! `features[j*d .. (j+1)*d]`. Labels and feature indices are 0-based.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use l20fs::solver::solve;
use l20fs::{
    center, resolve_config, select_by_count, Algorithm, Dataset, Error, RegularizationPath,
    SolverConfig,
};
use nalgebra::DMatrix;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum L20fsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ShapeMismatch = 3,
    NonFinite = 4,
    Divergence = 5,
    DegenerateData = 6,
    OutOfRange = 7,
    BufferTooSmall = 8,
    Panic = 99,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum L20fsAlgorithm {
    Hiht = 0,
    Ahiht = 1,
}

/// Solver settings. `lambda0`, `l0` and `max_l` are chosen automatically
/// when set to a value `<= 0`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct L20fsSolverConfig {
    pub lambda0: f64,
    pub l0: f64,
    pub rho: f64,
    pub gamma: f64,
    pub eta: f64,
    pub epsilon: f64,
    pub path_steps: usize,
    pub max_inner_iterations: usize,
    pub max_l: f64,
    pub seed: u64,
}

/// Scalar summary of one path point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct L20fsPointInfo {
    pub lambda: f64,
    pub objective: f64,
    pub support_size: usize,
    pub inner_iterations: usize,
    pub iht_updates: usize,
    pub final_l: f64,
    pub truncated: bool,
}

/// Opaque labelled dataset.
pub struct L20fsDataset {
    inner: Dataset,
}

/// Opaque regularization path.
pub struct L20fsPath {
    inner: RegularizationPath,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn status_of(error: &Error) -> L20fsStatus {
    match error {
        Error::InvalidLabel { .. } | Error::Parameter(_) | Error::Config(_) | Error::Usage(_) => {
            L20fsStatus::InvalidArgument
        }
        Error::Shape { .. } => L20fsStatus::ShapeMismatch,
        Error::NonFinite(_) => L20fsStatus::NonFinite,
        Error::Divergence { .. } => L20fsStatus::Divergence,
        Error::DegenerateDataset(_) | Error::Stratification(_) | Error::EmptyPath => {
            L20fsStatus::DegenerateData
        }
        _ => L20fsStatus::InvalidArgument,
    }
}

/// Runs `body`, translating errors and panics into a status code.
fn guard(body: impl FnOnce() -> Result<(), (L20fsStatus, String)>) -> L20fsStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => L20fsStatus::Ok,
        Ok(Err((status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic");
            L20fsStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (L20fsStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (L20fsStatus, String) {
    (L20fsStatus::NullPointer, format!("{what} is null"))
}

/// Message for the last failed call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn l20fs_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

#[no_mangle]
pub extern "C" fn l20fs_solver_config_default() -> L20fsSolverConfig {
    let d = SolverConfig::default();
    L20fsSolverConfig {
        lambda0: 0.0,
        l0: 0.0,
        rho: d.rho,
        gamma: d.gamma,
        eta: d.eta,
        epsilon: d.epsilon,
        path_steps: d.path_steps,
        max_inner_iterations: d.max_inner_iterations,
        max_l: 0.0,
        seed: d.seed,
    }
}

/// Copies the inputs into a new dataset handle written to `*out`.
#[no_mangle]
pub unsafe extern "C" fn l20fs_dataset_new(
    features: *const f64,
    feature_count: usize,
    sample_count: usize,
    labels: *const usize,
    class_count: usize,
    out: *mut *mut L20fsDataset,
) -> L20fsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if features.is_null() {
            return Err(null("features"));
        }
        if labels.is_null() {
            return Err(null("labels"));
        }
        let len = feature_count.checked_mul(sample_count).ok_or((
            L20fsStatus::InvalidArgument,
            "dimensions overflow".to_string(),
        ))?;
        let values = std::slice::from_raw_parts(features, len);
        let labels = std::slice::from_raw_parts(labels, sample_count).to_vec();
        let x = DMatrix::from_column_slice(feature_count, sample_count, values);
        let inner = Dataset::new(x, labels, class_count).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(L20fsDataset { inner }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn l20fs_dataset_free(dataset: *mut L20fsDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

/// Centers the dataset and runs the homotopy solver, writing a path handle to `*out`.
#[no_mangle]
pub unsafe extern "C" fn l20fs_solve(
    dataset: *const L20fsDataset,
    algorithm: L20fsAlgorithm,
    config: *const L20fsSolverConfig,
    out: *mut *mut L20fsPath,
) -> L20fsStatus {
    guard(|| {
        let dataset = dataset.as_ref().ok_or_else(|| null("dataset"))?;
        let config = config.as_ref().ok_or_else(|| null("config"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let auto = |v: f64| if v > 0.0 { Some(v) } else { None };
        let settings = SolverConfig {
            lambda0: auto(config.lambda0),
            l0: auto(config.l0),
            rho: config.rho,
            gamma: config.gamma,
            eta: config.eta,
            epsilon: config.epsilon,
            path_steps: config.path_steps,
            max_inner_iterations: config.max_inner_iterations,
            max_l: auto(config.max_l),
            seed: config.seed,
        };
        let centered = center(&dataset.inner).map_err(lib_err)?;
        let resolved = resolve_config(&settings, &centered).map_err(lib_err)?;
        let algorithm = match algorithm {
            L20fsAlgorithm::Hiht => Algorithm::Hiht,
            L20fsAlgorithm::Ahiht => Algorithm::Ahiht,
        };
        let inner = solve(algorithm, &centered, &resolved).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(L20fsPath { inner }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn l20fs_path_free(path: *mut L20fsPath) {
    if !path.is_null() {
        drop(Box::from_raw(path));
    }
}

/// Number of points, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn l20fs_path_len(path: *const L20fsPath) -> usize {
    path.as_ref().map_or(0, |p| p.inner.points.len())
}

/// Feature and class counts of the weight matrices.
#[no_mangle]
pub unsafe extern "C" fn l20fs_path_dims(
    path: *const L20fsPath,
    feature_count: *mut usize,
    class_count: *mut usize,
) -> L20fsStatus {
    guard(|| {
        let path = path.as_ref().ok_or_else(|| null("path"))?;
        if feature_count.is_null() || class_count.is_null() {
            return Err(null("output pointer"));
        }
        let (d, c) = path.inner.points[0].weights.shape();
        *feature_count = d;
        *class_count = c;
        Ok(())
    })
}

fn point(path: &L20fsPath, index: usize) -> Result<&l20fs::PathPoint, (L20fsStatus, String)> {
    path.inner.points.get(index).ok_or_else(|| {
        (
            L20fsStatus::OutOfRange,
            format!(
                "point {index} out of range for a path of {}",
                path.inner.points.len()
            ),
        )
    })
}

#[no_mangle]
pub unsafe extern "C" fn l20fs_path_point(
    path: *const L20fsPath,
    index: usize,
    out: *mut L20fsPointInfo,
) -> L20fsStatus {
    guard(|| {
        let path = path.as_ref().ok_or_else(|| null("path"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let p = point(path, index)?;
        *out = L20fsPointInfo {
            lambda: p.lambda,
            objective: p.objective,
            support_size: p.support_size,
            inner_iterations: p.inner_iterations,
            iht_updates: p.iht_updates,
            final_l: p.final_l,
            truncated: p.truncated,
        };
        Ok(())
    })
}

unsafe fn copy_out<T: Copy>(
    src: &[T],
    buffer: *mut T,
    capacity: usize,
) -> Result<(), (L20fsStatus, String)> {
    if src.len() > capacity {
        return Err((
            L20fsStatus::BufferTooSmall,
            format!("buffer holds {capacity} values, {} needed", src.len()),
        ));
    }
    if !src.is_empty() {
        if buffer.is_null() {
            return Err(null("buffer"));
        }
        ptr::copy_nonoverlapping(src.as_ptr(), buffer, src.len());
    }
    Ok(())
}

/// Writes the ascending selected-feature indices of point `index`; their
/// number goes to `*written`.
#[no_mangle]
pub unsafe extern "C" fn l20fs_path_support(
    path: *const L20fsPath,
    index: usize,
    buffer: *mut usize,
    capacity: usize,
    written: *mut usize,
) -> L20fsStatus {
    guard(|| {
        let path = path.as_ref().ok_or_else(|| null("path"))?;
        let p = point(path, index)?;
        copy_out(&p.support, buffer, capacity)?;
        if !written.is_null() {
            *written = p.support.len();
        }
        Ok(())
    })
}

/// Writes the `d x C` weights of point `index` feature-major:
/// `buffer[i*C + c]` is the weight of feature `i` for class `c`.
#[no_mangle]
pub unsafe extern "C" fn l20fs_path_weights(
    path: *const L20fsPath,
    index: usize,
    buffer: *mut f64,
    capacity: usize,
) -> L20fsStatus {
    guard(|| {
        let path = path.as_ref().ok_or_else(|| null("path"))?;
        let p = point(path, index)?;
        // column-major storage of the transpose is feature-major
        let transposed = p.weights.values().transpose();
        copy_out(transposed.as_slice(), buffer, capacity)
    })
}

/// Writes the `C` intercepts of point `index`.
#[no_mangle]
pub unsafe extern "C" fn l20fs_path_bias(
    path: *const L20fsPath,
    index: usize,
    buffer: *mut f64,
    capacity: usize,
) -> L20fsStatus {
    guard(|| {
        let path = path.as_ref().ok_or_else(|| null("path"))?;
        let p = point(path, index)?;
        copy_out(p.bias.as_slice(), buffer, capacity)
    })
}

/// Index of the point whose support size is closest to `target`.
#[no_mangle]
pub unsafe extern "C" fn l20fs_select_by_count(
    path: *const L20fsPath,
    target: usize,
    index: *mut usize,
) -> L20fsStatus {
    guard(|| {
        let path = path.as_ref().ok_or_else(|| null("path"))?;
        let index = index.as_mut().ok_or_else(|| null("index"))?;
        let chosen = select_by_count(&path.inner, target).map_err(lib_err)?;
        *index = path
            .inner
            .points
            .iter()
            .position(|p| ptr::eq(p, chosen))
            .expect("selected point belongs to the path");
        Ok(())
    })
}
