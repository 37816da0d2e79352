//! C interface to `faultmem`.
//!
//! Objects are opaque handles created by `fm_*` constructors and released
//! with the matching `_free`. Every fallible call returns an [`FmStatus`];
//! on failure the message is available from [`fm_last_error`] on the same
//! thread. Panics are caught at the boundary and reported as
//! `FM_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use faultmem::analysis::{cor23_min_q, cor24_min_q, prop21_min_degree, thm42_min_degree};
use faultmem::engine::{estimate_error, exact_tree_marginal, Automaton, BoundaryPolicy, Observed, SimPlan};
use faultmem::faults::{FaultModel, FaultSpec};
use faultmem::infobound::{Feasibility, InfoBoundReport};
use faultmem::lattice::{self, Lattice, Tiling};
use faultmem::treeify::{treeify, verify_directed_tree, TreeRuleSet};
use faultmem::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Lattice = 3,
    Treeify = 4,
    Transition = 5,
    Faults = 6,
    Engine = 7,
    Analysis = 8,
    InfoBound = 9,
    Config = 10,
    BufferTooSmall = 11,
    Panic = 12,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FmModel {
    Adversarial = 0,
    PureProbabilistic = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FmFormula {
    /// Uses `m`.
    Prop21 = 0,
    Cor23Odd = 1,
    Cor23Even = 2,
    Cor24Odd = 3,
    Cor24Even = 4,
    Thm42Lower = 5,
}

/// Opaque lattice handle.
pub struct FmLattice(Lattice);

/// Opaque tree reduction handle.
pub struct FmTreeRules(TreeRuleSet);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> FmStatus {
    match e {
        Error::Lattice(_)
        | Error::CapExceeded { .. }
        | Error::Unreachable { .. }
        | Error::TruncationTooSmall(_)
        | Error::Parse { .. } => FmStatus::Lattice,
        Error::Treeify(_) => FmStatus::Treeify,
        Error::Transition(_) => FmStatus::Transition,
        Error::Faults(_) => FmStatus::Faults,
        Error::Engine(_) => FmStatus::Engine,
        Error::Analysis(_) => FmStatus::Analysis,
        Error::InfoBound(_) => FmStatus::InfoBound,
        Error::Config { .. } => FmStatus::Config,
    }
}

fn fail(status: FmStatus, msg: impl Into<String>) -> FmStatus {
    set_error(msg.into());
    status
}

/// Runs `f`, translating errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), FmStatus>) -> FmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FmStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(FmStatus::Panic, "internal panic"),
    }
}

trait OrStatus<T> {
    fn or_status(self) -> Result<T, FmStatus>;
}

impl<T> OrStatus<T> for faultmem::Result<T> {
    fn or_status(self) -> Result<T, FmStatus> {
        self.map_err(|e| fail(status_of(&e), e.to_string()))
    }
}

fn non_null<'a, T>(p: *const T, name: &str) -> Result<&'a T, FmStatus> {
    if p.is_null() {
        Err(fail(FmStatus::NullPointer, format!("{name} is null")))
    } else {
        // SAFETY: caller passes a live pointer produced by this library or
        // a valid pointer to T.
        Ok(unsafe { &*p })
    }
}

fn out_ptr<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, FmStatus> {
    if p.is_null() {
        Err(fail(FmStatus::NullPointer, format!("{name} is null")))
    } else {
        // SAFETY: caller passes a writable pointer to T.
        Ok(unsafe { &mut *p })
    }
}

fn out_slice<'a, T>(p: *mut T, len: usize, name: &str) -> Result<&'a mut [T], FmStatus> {
    if p.is_null() {
        if len == 0 {
            return Ok(&mut []);
        }
        return Err(fail(FmStatus::NullPointer, format!("{name} is null")));
    }
    // SAFETY: caller passes a writable buffer of `len` elements.
    Ok(unsafe { std::slice::from_raw_parts_mut(p, len) })
}

fn model(m: FmModel) -> FaultModel {
    match m {
        FmModel::Adversarial => FaultModel::Adversarial,
        FmModel::PureProbabilistic => FaultModel::PureProbabilistic,
    }
}

/// Copies the calling thread's last error message into `buf` (NUL
/// terminated, truncated to fit) and returns the full message length.
///
/// # Safety
/// `buf` must be null or point to `cap` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn fm_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && cap > 0 {
            let n = msg.len().min(cap - 1);
            ptr::copy_nonoverlapping(msg.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

fn store_lattice(result: faultmem::Result<Lattice>, out: *mut *mut FmLattice) -> FmStatus {
    guard(|| {
        let slot = out_ptr(out, "out")?;
        *slot = ptr::null_mut();
        let l = result.or_status()?;
        *slot = Box::into_raw(Box::new(FmLattice(l)));
        Ok(())
    })
}

/// `q`-regular tree to the given depth.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fm_lattice_tree(q: u32, depth: u32, out: *mut *mut FmLattice) -> FmStatus {
    store_lattice(lattice::build_tree(q, depth), out)
}

/// Ball of `shells` shells in the hyperbolic `{p,q}` tessellation.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fm_lattice_hyperbolic(p: u32, q: u32, shells: u32, out: *mut *mut FmLattice) -> FmStatus {
    store_lattice(lattice::build_hyperbolic(p, q, shells), out)
}

/// Periodic `{p,q}` Euclidean tiling: `{4,4}`, `{3,6}` or `{6,3}`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fm_lattice_euclidean(
    p: u32,
    q: u32,
    width: u32,
    height: u32,
    out: *mut *mut FmLattice,
) -> FmStatus {
    let built = match Tiling::from_pq(p, q) {
        Some(t) => lattice::build_euclidean_torus(t, width, height),
        None => Err(Error::Lattice(format!("{{{p},{q}}} is not a Euclidean tiling"))),
    };
    store_lattice(built, out)
}

/// Toom's north-east-center torus.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fm_lattice_toom(width: u32, height: u32, out: *mut *mut FmLattice) -> FmStatus {
    store_lattice(lattice::build_toom(width, height), out)
}

/// Parses the text lattice format.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fm_lattice_from_text(text: *const c_char, out: *mut *mut FmLattice) -> FmStatus {
    if text.is_null() {
        return fail(FmStatus::NullPointer, "text is null");
    }
    let parsed = match CStr::from_ptr(text).to_str() {
        Ok(s) => Lattice::from_text(s),
        Err(_) => Err(Error::Parse {
            line: 0,
            msg: "input is not UTF-8".into(),
        }),
    };
    store_lattice(parsed, out)
}

/// # Safety
/// `lattice` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fm_lattice_vertex_count(lattice: *const FmLattice) -> usize {
    if lattice.is_null() {
        0
    } else {
        (*lattice).0.vertex_count()
    }
}

/// Writes the text form into `buf` (NUL terminated). `needed` receives the
/// size including the terminator; `FM_STATUS_BUFFER_TOO_SMALL` if it does
/// not fit.
///
/// # Safety
/// `lattice` must be a live handle, `buf` null or `cap` writable bytes,
/// `needed` null or valid.
#[no_mangle]
pub unsafe extern "C" fn fm_lattice_to_text(
    lattice: *const FmLattice,
    buf: *mut c_char,
    cap: usize,
    needed: *mut usize,
) -> FmStatus {
    guard(|| {
        let l = non_null(lattice, "lattice")?;
        let text = l.0.to_text();
        if !needed.is_null() {
            *needed = text.len() + 1;
        }
        if text.len() + 1 > cap || buf.is_null() {
            return Err(fail(FmStatus::BufferTooSmall, format!("need {} bytes", text.len() + 1)));
        }
        ptr::copy_nonoverlapping(text.as_ptr(), buf as *mut u8, text.len());
        *buf.add(text.len()) = 0;
        Ok(())
    })
}

/// # Safety
/// `lattice` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fm_lattice_free(lattice: *mut FmLattice) {
    if !lattice.is_null() {
        drop(Box::from_raw(lattice));
    }
}

/// Tree reduction rooted at `root`.
///
/// # Safety
/// `lattice` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fm_treeify(lattice: *const FmLattice, root: usize, out: *mut *mut FmTreeRules) -> FmStatus {
    guard(|| {
        let slot = out_ptr(out, "out")?;
        *slot = ptr::null_mut();
        let l = non_null(lattice, "lattice")?;
        let rules = treeify(&l.0, root).or_status()?;
        *slot = Box::into_raw(Box::new(FmTreeRules(rules)));
        Ok(())
    })
}

/// Largest per-vertex deletion count over interior vertices, and whether
/// the retained edges form a tree.
///
/// # Safety
/// `rules` must be a live handle; outputs must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn fm_tree_rules_summary(
    rules: *const FmTreeRules,
    max_deletions: *mut u32,
    is_tree: *mut bool,
) -> FmStatus {
    guard(|| {
        let r = non_null(rules, "rules")?;
        *out_ptr(max_deletions, "max_deletions")? = r.0.max_deletions;
        *out_ptr(is_tree, "is_tree")? = verify_directed_tree(&r.0).ok;
        Ok(())
    })
}

/// Retained out-degree and threshold of vertex `v`.
///
/// # Safety
/// `rules` must be a live handle; outputs must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn fm_tree_rules_vertex(
    rules: *const FmTreeRules,
    v: usize,
    out_degree: *mut u32,
    threshold: *mut u32,
    deletions: *mut u32,
) -> FmStatus {
    guard(|| {
        let r = &non_null(rules, "rules")?.0;
        if v >= r.vertex_count() {
            return Err(fail(FmStatus::InvalidArgument, format!("vertex {v} out of range")));
        }
        *out_ptr(out_degree, "out_degree")? = r.out_degree[v];
        *out_ptr(threshold, "threshold")? = r.threshold[v];
        *out_ptr(deletions, "deletions")? = r.r(v);
        Ok(())
    })
}

/// # Safety
/// `rules` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fm_tree_rules_free(rules: *mut FmTreeRules) {
    if !rules.is_null() {
        drop(Box::from_raw(rules));
    }
}

/// Least degree required by `formula` at margin `xi` (`m` for `Prop21`).
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fm_bound(formula: FmFormula, xi: f64, m: u32, out: *mut u64) -> FmStatus {
    guard(|| {
        let slot = out_ptr(out, "out")?;
        *slot = match formula {
            FmFormula::Prop21 => prop21_min_degree(xi, m),
            FmFormula::Cor23Odd => cor23_min_q(xi).map(|b| b.odd_q),
            FmFormula::Cor23Even => cor23_min_q(xi).map(|b| b.even_q),
            FmFormula::Cor24Odd => cor24_min_q(xi).map(|b| b.odd_q),
            FmFormula::Cor24Even => cor24_min_q(xi).map(|b| b.even_q),
            FmFormula::Thm42Lower => thm42_min_degree(xi),
        }
        .or_status()?;
        Ok(())
    })
}

/// Exact per-cell error probabilities `P_0..P_{len-1}` on a tree with `d`
/// children per cell and threshold `h`, transient faults at rate `alpha`.
///
/// # Safety
/// `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn fm_exact_tree_marginal(
    d: u32,
    h: u32,
    alpha: f64,
    fault_model: FmModel,
    out: *mut f64,
    len: usize,
) -> FmStatus {
    guard(|| {
        let buf = out_slice(out, len, "out")?;
        if len == 0 {
            return Ok(());
        }
        let spec = FaultSpec::new(alpha, 0.0, model(fault_model), false).or_status()?;
        let p = exact_tree_marginal(d, h, &spec, len as u32 - 1).or_status()?;
        buf.copy_from_slice(&p);
        Ok(())
    })
}

/// Information bound for fan-in `d` over horizon `t`. `excluded_at`
/// receives the horizon from which remembering with error `delta` is
/// impossible, or 0 if it is never excluded.
///
/// # Safety
/// Outputs must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn fm_info_bound(
    d: u32,
    xi: f64,
    delta: f64,
    t: u32,
    es_bound: *mut f64,
    fano_floor: *mut f64,
    excluded_at: *mut u32,
) -> FmStatus {
    guard(|| {
        let r = InfoBoundReport::uniform(d, xi, delta, t).or_status()?;
        *out_ptr(es_bound, "es_bound")? = r.es_bound;
        *out_ptr(fano_floor, "fano_floor")? = r.fano_floor;
        *out_ptr(excluded_at, "excluded_at")? = match r.verdict {
            Feasibility::ExcludedAt(t) => t,
            Feasibility::NotExcluded => 0,
        };
        Ok(())
    })
}

/// Monte Carlo error frequency of the root at times `0..len`, remembering 0
/// with boundary cells held at 1. With `use_tree` the lattice is first
/// reduced to a tree rooted at vertex 0.
///
/// # Safety
/// `lattice` must be a live handle and `out` point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn fm_estimate_root_error(
    lattice: *const FmLattice,
    use_tree: bool,
    alpha: f64,
    beta: f64,
    fault_model: FmModel,
    replicates: u64,
    seed: u64,
    out: *mut f64,
    len: usize,
) -> FmStatus {
    guard(|| {
        let l = &non_null(lattice, "lattice")?.0;
        let buf = out_slice(out, len, "out")?;
        if len == 0 {
            return Err(fail(FmStatus::InvalidArgument, "need room for at least time 0"));
        }
        let spec = FaultSpec::new(alpha, beta, model(fault_model), false).or_status()?;
        let automaton = if use_tree {
            Automaton::from_tree(&treeify(l, 0).or_status()?, false)
        } else {
            Automaton::majority(l)
        }
        .or_status()?;
        let plan = SimPlan::new(
            Arc::new(automaton),
            spec,
            len as u32 - 1,
            replicates,
            Observed::Root,
            seed,
            BoundaryPolicy::ClampToError,
        )
        .or_status()?;
        let est = estimate_error(&plan);
        for (t, slot) in buf.iter_mut().enumerate() {
            *slot = est.freq(t as u32, 0);
        }
        Ok(())
    })
}
