//! C ABI for the stabjgl joint network estimator.
//!
//! The surface follows the usual handle-and-status-code shape:
//!
//! - Opaque handles ([`Dataset`], [`FitResult`]) own all Rust-side memory.
//!   Create them through `stabjgl_*_create`/`stabjgl_infer`, release them
//!   through the matching `stabjgl_*_free`. Handles are never returned
//!   half-built: on any failure the out-pointer is left untouched.
//! - Every fallible call returns a [`Status`]; results travel through out
//!   parameters. On a non-OK status, `stabjgl_last_error` returns a
//!   human-readable message for the calling thread, valid until that
//!   thread's next call into this library.
//! - Panics never unwind across the boundary; they surface as
//!   [`Status::Panic`].
//!
//! Estimation itself is documented on the `stabjgl` crate: data in, a
//! stability-selected sparsity penalty, an information-criterion-selected
//! similarity penalty, and per-group sparse precision matrices out. Results
//! are deterministic in the dataset, options, and seed — including across
//! thread counts. The file formats and the synthetic-data generator are
//! CLI-level conveniences and are not part of this ABI.
//!
//! The matching header, `include/stabjgl.h`, is generated from this file by
//! the build script and committed alongside it.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use stabjgl::ebic::EbicConfig;
use stabjgl::error::Error;
use stabjgl::model::{linear_grid, GroupedDataset};
use stabjgl::ndarray::Array2;
use stabjgl::pipeline::{run_stabjgl, PipelineOptions, StabJglResult};
use stabjgl::solver::SolverOptions;
use stabjgl::stability::StabilityConfig;

/// Outcome of a call: `Ok` or the failure class.
///
/// `InvalidArgument` covers null or malformed inputs and out-of-range
/// options; `NumericalError` covers aborts inside estimation (factorization
/// failures, too many failed subsample fits); `Panic` reports a defect in
/// this library that was caught at the boundary.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NumericalError = 3,
    Panic = 4,
}

/// Observations for all groups; create with `stabjgl_dataset_create`.
pub struct Dataset {
    inner: GroupedDataset,
}

/// A finished estimation; query with the `stabjgl_result_*` accessors.
pub struct FitResult {
    inner: StabJglResult,
}

/// Every tunable of the pipeline, flattened for C.
///
/// Obtain a baseline from `stabjgl_options_default` and override fields as
/// needed. Both penalty grids are inclusive, evenly spaced `lo..hi` ranges;
/// a single-point grid requires `lo == hi`. Validation happens inside
/// `stabjgl_infer`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct Options {
    /// Sparsity-penalty grid: low endpoint (must be positive).
    pub lambda1_lo: f64,
    /// Sparsity-penalty grid: high endpoint.
    pub lambda1_hi: f64,
    /// Sparsity-penalty grid: number of values.
    pub lambda1_count: usize,
    /// Similarity-penalty grid: low endpoint (zero allowed).
    pub lambda2_lo: f64,
    /// Similarity-penalty grid: high endpoint.
    pub lambda2_hi: f64,
    /// Similarity-penalty grid: number of values.
    pub lambda2_count: usize,
    /// Similarity penalty held fixed during the subsample sweeps.
    pub lambda2_init: f64,
    /// Variability threshold for the sparsity-penalty selection, strictly
    /// between 0 and 1.
    pub beta1: f64,
    /// Subsamples per group.
    pub n_subsamples: usize,
    /// Subsample-size cap as a fraction of each group's rows, in (0, 1).
    pub subsample_cap_ratio: f64,
    /// Extra sparsity weight of the information criterion, in [0, 1];
    /// 0 gives the plain criterion.
    pub gamma: f64,
    /// Augmented-Lagrangian parameter of the solver.
    pub admm_rho: f64,
    /// Solver iteration cap.
    pub max_iter: usize,
    /// Solver primal stopping tolerance.
    pub primal_tol: f64,
    /// Solver dual stopping tolerance.
    pub dual_tol: f64,
    /// Scale each variable to unit sample variance before estimation.
    pub standardize: bool,
    /// Seed for the subsample draws; fixed seed means fixed output.
    pub seed: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg).unwrap_or_else(|_| CString::new("invalid error text").unwrap());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
}

fn status_of(e: &Error) -> Status {
    if e.is_stage_abort() {
        Status::NumericalError
    } else {
        Status::InvalidArgument
    }
}

/// Run `f` with panic containment and last-error bookkeeping.
fn guarded(f: impl FnOnce() -> Status) -> Status {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic; this is a bug in the library".into());
            Status::Panic
        }
    }
}

macro_rules! require_nonnull {
    ($ptr:expr, $name:literal) => {
        if $ptr.is_null() {
            set_error(concat!($name, " must not be null").into());
            return Status::NullPointer;
        }
    };
}

/// Library version as a static UTF-8/ASCII string; never null, never freed.
#[no_mangle]
pub extern "C" fn stabjgl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message for the calling thread's most recent failure, or null after a
/// success. The pointer stays valid until this thread's next call into the
/// library; copy the string if it must outlive that.
#[no_mangle]
pub extern "C" fn stabjgl_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map_or(std::ptr::null(), |c| c.as_ptr())
    })
}

/// The defaults of the underlying library: 20-point penalty grids over
/// [0.01, 1] and [0, 0.1], threshold 0.1, 20 subsamples, criterion weight 0,
/// solver at rho 1 with tolerance 1e-5, standardization on, seed 0.
#[no_mangle]
pub extern "C" fn stabjgl_options_default() -> Options {
    let stab = StabilityConfig::default();
    let ebic = EbicConfig::default();
    let solver = SolverOptions::default();
    let pipeline = PipelineOptions::default();
    Options {
        lambda1_lo: *stab.lambda1_grid.first().expect("nonempty default grid"),
        lambda1_hi: *stab.lambda1_grid.last().expect("nonempty default grid"),
        lambda1_count: stab.lambda1_grid.len(),
        lambda2_lo: *ebic.lambda2_grid.first().expect("nonempty default grid"),
        lambda2_hi: *ebic.lambda2_grid.last().expect("nonempty default grid"),
        lambda2_count: ebic.lambda2_grid.len(),
        lambda2_init: stab.lambda2_init,
        beta1: stab.beta1,
        n_subsamples: stab.n_sample,
        subsample_cap_ratio: stab.subsample_cap_ratio,
        gamma: ebic.gamma,
        admm_rho: solver.admm_rho,
        max_iter: solver.max_iter,
        primal_tol: solver.primal_tol,
        dual_tol: solver.dual_tol,
        standardize: pipeline.standardize,
        seed: stab.seed,
    }
}

/// Bundle per-group observation matrices into a dataset handle.
///
/// `groups` holds `n_groups` pointers; `groups[k]` is a row-major
/// `rows[k] x p` matrix of finite values (rows are observations, columns are
/// the `p` shared variables, zero-based). The data is copied; the caller's
/// buffers are never retained. On `Ok`, `*out` owns the handle and must be
/// released with `stabjgl_dataset_free`.
///
/// # Safety
///
/// `groups` must point to `n_groups` readable pointers, `rows` to
/// `n_groups` readable lengths, each `groups[k]` to `rows[k] * p` readable
/// doubles, and `out` to a writable pointer slot.
#[no_mangle]
pub unsafe extern "C" fn stabjgl_dataset_create(
    groups: *const *const f64,
    rows: *const usize,
    n_groups: usize,
    p: usize,
    out: *mut *mut Dataset,
) -> Status {
    guarded(|| {
        require_nonnull!(out, "out");
        require_nonnull!(groups, "groups");
        require_nonnull!(rows, "rows");
        if n_groups == 0 {
            set_error("n_groups must be at least 1".into());
            return Status::InvalidArgument;
        }
        let group_ptrs = unsafe { std::slice::from_raw_parts(groups, n_groups) };
        let row_counts = unsafe { std::slice::from_raw_parts(rows, n_groups) };
        let mut matrices = Vec::with_capacity(n_groups);
        for (k, (&ptr, &n_k)) in group_ptrs.iter().zip(row_counts).enumerate() {
            if ptr.is_null() {
                set_error(format!("groups[{k}] must not be null"));
                return Status::NullPointer;
            }
            let values = unsafe { std::slice::from_raw_parts(ptr, n_k * p) }.to_vec();
            match Array2::from_shape_vec((n_k, p), values) {
                Ok(m) => matrices.push(m),
                Err(e) => {
                    set_error(format!("group {k} has a bad shape: {e}"));
                    return Status::InvalidArgument;
                }
            }
        }
        match GroupedDataset::new(matrices) {
            Ok(inner) => {
                unsafe { *out = Box::into_raw(Box::new(Dataset { inner })) };
                Status::Ok
            }
            Err(e) => {
                set_error(e.to_string());
                status_of(&e)
            }
        }
    })
}

/// Release a dataset handle. Null is a no-op.
///
/// # Safety
///
/// `dataset` must be a pointer from `stabjgl_dataset_create` that has not
/// been freed already.
#[no_mangle]
pub unsafe extern "C" fn stabjgl_dataset_free(dataset: *mut Dataset) {
    if !dataset.is_null() {
        drop(unsafe { Box::from_raw(dataset) });
    }
}

/// Run the full pipeline: select both penalties, fit the final model.
///
/// On `Ok`, `*out` owns the result handle and must be released with
/// `stabjgl_result_free`. Runtime grows steeply with the variable count;
/// expect seconds for tens of variables and minutes for hundreds.
///
/// # Safety
///
/// `dataset` must be a live handle from `stabjgl_dataset_create`, `options`
/// either null (defaults) or a readable options struct, and `out` a
/// writable pointer slot.
#[no_mangle]
pub unsafe extern "C" fn stabjgl_infer(
    dataset: *const Dataset,
    options: *const Options,
    out: *mut *mut FitResult,
) -> Status {
    guarded(|| {
        require_nonnull!(out, "out");
        require_nonnull!(dataset, "dataset");
        let data = unsafe { &(*dataset).inner };
        let opts = if options.is_null() {
            stabjgl_options_default()
        } else {
            unsafe { *options }
        };

        let lambda1_grid = match linear_grid(opts.lambda1_lo, opts.lambda1_hi, opts.lambda1_count)
        {
            Ok(g) => g,
            Err(e) => {
                set_error(format!("lambda1 grid: {e}"));
                return Status::InvalidArgument;
            }
        };
        let lambda2_grid = match linear_grid(opts.lambda2_lo, opts.lambda2_hi, opts.lambda2_count)
        {
            Ok(g) => g,
            Err(e) => {
                set_error(format!("lambda2 grid: {e}"));
                return Status::InvalidArgument;
            }
        };
        let stab = StabilityConfig {
            lambda1_grid,
            lambda2_init: opts.lambda2_init,
            beta1: opts.beta1,
            n_sample: opts.n_subsamples,
            subsample_cap_ratio: opts.subsample_cap_ratio,
            seed: opts.seed,
        };
        let ebic = EbicConfig {
            lambda2_grid,
            gamma: opts.gamma,
        };
        let solver = SolverOptions {
            admm_rho: opts.admm_rho,
            max_iter: opts.max_iter,
            primal_tol: opts.primal_tol,
            dual_tol: opts.dual_tol,
            ..SolverOptions::default()
        };
        let pipeline = PipelineOptions {
            standardize: opts.standardize,
            ..PipelineOptions::default()
        };

        match run_stabjgl(data, &stab, &ebic, &solver, &pipeline) {
            Ok(inner) => {
                unsafe { *out = Box::into_raw(Box::new(FitResult { inner })) };
                Status::Ok
            }
            Err(e) => {
                set_error(e.to_string());
                status_of(&e)
            }
        }
    })
}

/// Release a result handle. Null is a no-op.
///
/// # Safety
///
/// `result` must be a pointer from `stabjgl_infer` that has not been freed
/// already.
#[no_mangle]
pub unsafe extern "C" fn stabjgl_result_free(result: *mut FitResult) {
    if !result.is_null() {
        drop(unsafe { Box::from_raw(result) });
    }
}

unsafe fn result_ref<'a>(result: *const FitResult) -> Option<&'a StabJglResult> {
    if result.is_null() {
        set_error("result must not be null".into());
        None
    } else {
        Some(unsafe { &(*result).inner })
    }
}

fn checked_group(r: &StabJglResult, group: usize) -> Option<usize> {
    let k = r.edge_sets.len();
    if group < k {
        Some(group)
    } else {
        set_error(format!("group index {group} out of range for {k} groups"));
        None
    }
}

/// Selected penalties: sparsity into `*lambda1`, similarity into `*lambda2`.
///
/// # Safety
///
/// `result` must be a live handle; `lambda1` and `lambda2` must be writable.
#[no_mangle]
pub unsafe extern "C" fn stabjgl_result_lambdas(
    result: *const FitResult,
    lambda1: *mut f64,
    lambda2: *mut f64,
) -> Status {
    guarded(|| {
        require_nonnull!(lambda1, "lambda1");
        require_nonnull!(lambda2, "lambda2");
        let Some(r) = (unsafe { result_ref(result) }) else {
            return Status::NullPointer;
        };
        unsafe {
            *lambda1 = r.lambda1;
            *lambda2 = r.lambda2;
        }
        Status::Ok
    })
}

/// Problem shape: group count into `*n_groups`, variable count into `*p`.
///
/// # Safety
///
/// `result` must be a live handle; `n_groups` and `p` must be writable.
#[no_mangle]
pub unsafe extern "C" fn stabjgl_result_shape(
    result: *const FitResult,
    n_groups: *mut usize,
    p: *mut usize,
) -> Status {
    guarded(|| {
        require_nonnull!(n_groups, "n_groups");
        require_nonnull!(p, "p");
        let Some(r) = (unsafe { result_ref(result) }) else {
            return Status::NullPointer;
        };
        unsafe {
            *n_groups = r.edge_sets.len();
            *p = r.fit.z(0).nrows();
        }
        Status::Ok
    })
}

/// Fraction of possible edges present in one group's estimated graph.
///
/// # Safety
///
/// `result` must be a live handle; `sparsity` must be writable.
#[no_mangle]
pub unsafe extern "C" fn stabjgl_result_sparsity(
    result: *const FitResult,
    group: usize,
    sparsity: *mut f64,
) -> Status {
    guarded(|| {
        require_nonnull!(sparsity, "sparsity");
        let Some(r) = (unsafe { result_ref(result) }) else {
            return Status::NullPointer;
        };
        let Some(g) = checked_group(r, group) else {
            return Status::InvalidArgument;
        };
        unsafe { *sparsity = r.sparsities[g] };
        Status::Ok
    })
}

/// Number of edges in one group's estimated graph.
///
/// # Safety
///
/// `result` must be a live handle; `count` must be writable.
#[no_mangle]
pub unsafe extern "C" fn stabjgl_result_edge_count(
    result: *const FitResult,
    group: usize,
    count: *mut usize,
) -> Status {
    guarded(|| {
        require_nonnull!(count, "count");
        let Some(r) = (unsafe { result_ref(result) }) else {
            return Status::NullPointer;
        };
        let Some(g) = checked_group(r, group) else {
            return Status::InvalidArgument;
        };
        unsafe { *count = r.edge_sets[g].len() };
        Status::Ok
    })
}

/// Copy one group's edges as zero-based index pairs.
///
/// Edges are written interleaved — `out[0], out[1]` is the first edge —
/// in ascending order with `i < j`. `capacity` is the length of `out` in
/// `uint32_t` units and must be at least twice the edge count (query it
/// with `stabjgl_result_edge_count`).
///
/// # Safety
///
/// `result` must be a live handle and `out` writable for `capacity`
/// elements.
#[no_mangle]
pub unsafe extern "C" fn stabjgl_result_edges(
    result: *const FitResult,
    group: usize,
    out: *mut u32,
    capacity: usize,
) -> Status {
    guarded(|| {
        require_nonnull!(out, "out");
        let Some(r) = (unsafe { result_ref(result) }) else {
            return Status::NullPointer;
        };
        let Some(g) = checked_group(r, group) else {
            return Status::InvalidArgument;
        };
        let edges = &r.edge_sets[g];
        let needed = edges.len() * 2;
        if capacity < needed {
            set_error(format!(
                "edge buffer holds {capacity} values but {needed} are needed"
            ));
            return Status::InvalidArgument;
        }
        let slot = unsafe { std::slice::from_raw_parts_mut(out, needed) };
        for (e, (i, j)) in edges.iter().enumerate() {
            slot[2 * e] = i as u32;
            slot[2 * e + 1] = j as u32;
        }
        Status::Ok
    })
}

/// Copy one group's estimated precision matrix, row-major `p x p`.
///
/// This is the sparsity-carrying estimate: entries are exactly zero off the
/// estimated graph. `capacity` is the length of `out` in doubles and must
/// be at least `p * p`.
///
/// # Safety
///
/// `result` must be a live handle and `out` writable for `capacity`
/// elements.
#[no_mangle]
pub unsafe extern "C" fn stabjgl_result_precision(
    result: *const FitResult,
    group: usize,
    out: *mut f64,
    capacity: usize,
) -> Status {
    guarded(|| {
        let Some(r) = (unsafe { result_ref(result) }) else {
            return Status::NullPointer;
        };
        let matrix = {
            let Some(g) = checked_group(r, group) else {
                return Status::InvalidArgument;
            };
            r.fit.z(g)
        };
        unsafe { copy_matrix(matrix, out, capacity) }
    })
}

/// Copy one group's partial-correlation matrix, row-major `p x p`.
///
/// Off-diagonal entries are the estimated conditional dependencies on
/// the [-1, 1] scale (zero off the estimated graph); the diagonal is 1 by
/// convention. `capacity` must be at least `p * p`.
///
/// # Safety
///
/// `result` must be a live handle and `out` writable for `capacity`
/// elements.
#[no_mangle]
pub unsafe extern "C" fn stabjgl_result_partial_correlations(
    result: *const FitResult,
    group: usize,
    out: *mut f64,
    capacity: usize,
) -> Status {
    guarded(|| {
        let Some(r) = (unsafe { result_ref(result) }) else {
            return Status::NullPointer;
        };
        let matrix = {
            let Some(g) = checked_group(r, group) else {
                return Status::InvalidArgument;
            };
            &r.partial_correlations[g]
        };
        unsafe { copy_matrix(matrix, out, capacity) }
    })
}

/// Copy a matrix into a caller buffer, enforcing its capacity.
///
/// # Safety
///
/// `out` must be null or writable for `capacity` elements.
unsafe fn copy_matrix(matrix: &Array2<f64>, out: *mut f64, capacity: usize) -> Status {
    if out.is_null() {
        set_error("out must not be null".into());
        return Status::NullPointer;
    }
    let needed = matrix.nrows() * matrix.ncols();
    if capacity < needed {
        set_error(format!(
            "matrix buffer holds {capacity} values but {needed} are needed"
        ));
        return Status::InvalidArgument;
    }
    let slot = unsafe { std::slice::from_raw_parts_mut(out, needed) };
    for (cell, &v) in slot.iter_mut().zip(matrix.iter()) {
        *cell = v;
    }
    Status::Ok
}
