// C ABI wrapper around the Clarabel interior-point solver.
//
// Problem form:  min 0.5 x'Px + q'x  s.t.  Ax + s = b,  s in K
// where K is a product of cones given as (tag, dim) pairs in row order.
// P is upper-triangular CSC, A is CSC, both 0-based usize indices.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettings, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};
use std::slice;

pub const CONE_ZERO: i32 = 0;
pub const CONE_NONNEG: i32 = 1;
pub const CONE_SOC: i32 = 2;

#[repr(C)]
pub struct SolveOptions {
    pub max_iter: u32,
    pub time_limit: f64,
    pub verbose: i32,
    pub tol_gap_abs: f64,
    pub tol_gap_rel: f64,
    pub tol_feas: f64,
}

#[repr(C)]
pub struct SolveResult {
    pub status: i32,
    pub obj_val: f64,
    pub obj_val_dual: f64,
    pub iterations: u32,
    pub solve_time: f64,
}

fn status_code(s: SolverStatus) -> i32 {
    match s {
        SolverStatus::Solved => 0,
        SolverStatus::AlmostSolved => 1,
        SolverStatus::PrimalInfeasible => 2,
        SolverStatus::DualInfeasible => 3,
        SolverStatus::AlmostPrimalInfeasible => 4,
        SolverStatus::AlmostDualInfeasible => 5,
        SolverStatus::MaxIterations => 6,
        SolverStatus::MaxTime => 7,
        SolverStatus::NumericalError => 8,
        SolverStatus::InsufficientProgress => 9,
        _ => -1,
    }
}

/// Solve one conic problem. Returns 0 on success (including infeasible
/// certificates), nonzero on malformed input. Outputs x (len n), z and s
/// (len m) must be caller-allocated.
///
/// # Safety
/// All pointers must reference buffers of the documented lengths.
#[no_mangle]
pub unsafe extern "C" fn clarabel_ffi_solve(
    n: usize,
    m: usize,
    p_colptr: *const usize,
    p_rowval: *const usize,
    p_nzval: *const f64,
    p_nnz: usize,
    q: *const f64,
    a_colptr: *const usize,
    a_rowval: *const usize,
    a_nzval: *const f64,
    a_nnz: usize,
    b: *const f64,
    cone_tags: *const i32,
    cone_dims: *const usize,
    n_cones: usize,
    opts: *const SolveOptions,
    x_out: *mut f64,
    z_out: *mut f64,
    s_out: *mut f64,
    result: *mut SolveResult,
) -> i32 {
    let p_colptr = slice::from_raw_parts(p_colptr, n + 1).to_vec();
    let p_rowval = slice::from_raw_parts(p_rowval, p_nnz).to_vec();
    let p_nzval = slice::from_raw_parts(p_nzval, p_nnz).to_vec();
    let q = slice::from_raw_parts(q, n).to_vec();
    let a_colptr = slice::from_raw_parts(a_colptr, n + 1).to_vec();
    let a_rowval = slice::from_raw_parts(a_rowval, a_nnz).to_vec();
    let a_nzval = slice::from_raw_parts(a_nzval, a_nnz).to_vec();
    let b = slice::from_raw_parts(b, m).to_vec();
    let tags = slice::from_raw_parts(cone_tags, n_cones);
    let dims = slice::from_raw_parts(cone_dims, n_cones);

    let mut cones: Vec<SupportedConeT<f64>> = Vec::with_capacity(n_cones);
    let mut total_dim = 0usize;
    for i in 0..n_cones {
        total_dim += dims[i];
        match tags[i] {
            CONE_ZERO => cones.push(SupportedConeT::ZeroConeT(dims[i])),
            CONE_NONNEG => cones.push(SupportedConeT::NonnegativeConeT(dims[i])),
            CONE_SOC => cones.push(SupportedConeT::SecondOrderConeT(dims[i])),
            _ => return 2,
        }
    }
    if total_dim != m {
        return 3;
    }

    let pmat = CscMatrix::new(n, n, p_colptr, p_rowval, p_nzval);
    let amat = CscMatrix::new(m, n, a_colptr, a_rowval, a_nzval);

    let o = &*opts;
    let settings = DefaultSettings {
        max_iter: o.max_iter,
        time_limit: o.time_limit,
        verbose: o.verbose != 0,
        tol_gap_abs: o.tol_gap_abs,
        tol_gap_rel: o.tol_gap_rel,
        tol_feas: o.tol_feas,
        ..DefaultSettings::default()
    };

    let mut solver = match DefaultSolver::new(&pmat, &q, &amat, &b, &cones, settings) {
        Ok(s) => s,
        Err(_) => return 4,
    };
    solver.solve();

    let sol = &solver.solution;
    let xs = slice::from_raw_parts_mut(x_out, n);
    let zs = slice::from_raw_parts_mut(z_out, m);
    let ss = slice::from_raw_parts_mut(s_out, m);
    xs.copy_from_slice(&sol.x);
    zs.copy_from_slice(&sol.z);
    ss.copy_from_slice(&sol.s);

    let r = &mut *result;
    r.status = status_code(sol.status);
    r.obj_val = sol.obj_val;
    r.obj_val_dual = sol.obj_val_dual;
    r.iterations = solver.info.iterations;
    r.solve_time = solver.info.solve_time;
    0
}
