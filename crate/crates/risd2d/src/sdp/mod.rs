//! Dense semidefinite programming over complex Hermitian matrices.
//!
//! Problems have the shape produced by semidefinite relaxations of
//! unit-modulus quadratic programs:
//!
//! ```text
//! maximize   Re Tr(C Q)
//! subject to Q_nn = 1            (optional unit diagonal)
//!            Tr(A_j Q) <= b_j    (or >=, per constraint)
//!            Q PSD Hermitian
//! ```
//!
//! The complex problem is embedded into a real symmetric program of twice
//! the dimension via `H -> [[Re H, -Im H], [Im H, Re H]]` and handed to the
//! interior-point core in [`ipm`]. The embedding doubles traces, commutes
//! with positive semidefiniteness in both directions, and lets the optimum
//! be recovered exactly by block-averaging, so no complex arithmetic is
//! needed inside the solver loop.
//!
//! [`verify`] recomputes every optimality certificate from scratch in the
//! complex domain — feasibility margins, dual feasibility, duality gap,
//! complementarity — so callers never have to trust the solver's own
//! bookkeeping.

mod embed;
mod ipm;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

use embed::{embed_hermitian, unembed_hermitian};
use ipm::{IpmOptions, RealSdp, Row, RowMat};

#[derive(Debug, Error)]
pub enum SdpError {
    /// The objective (`index == None`) or a constraint matrix deviates from
    /// its conjugate transpose by more than a tight tolerance.
    #[error("matrix {} is not Hermitian", match .index { Some(j) => format!("of constraint {j}"), None => "of the objective".into() })]
    NotHermitian { index: Option<usize> },
    #[error("constraint {index} is {got}x{got2}, expected {want}x{want}", got = .rows, got2 = .cols)]
    DimensionMismatch {
        index: usize,
        rows: usize,
        cols: usize,
        want: usize,
    },
    #[error("objective must be a nonempty square matrix")]
    BadObjective,
    #[error("constraint {index} has a non-finite right-hand side")]
    BadRhs { index: usize },
    #[error("problem has neither a unit-diagonal condition nor constraints")]
    Unconstrained,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintSense {
    Le,
    Ge,
}

/// One linear trace constraint `Tr(matrix * Q) <= rhs` (or `>=`).
#[derive(Debug, Clone)]
pub struct SdpConstraint {
    pub matrix: DMatrix<Complex64>,
    pub sense: ConstraintSense,
    pub rhs: f64,
}

#[derive(Debug, Clone)]
pub struct SdpProblem {
    pub objective: DMatrix<Complex64>,
    pub constraints: Vec<SdpConstraint>,
    /// Require `Q_nn = 1` for every diagonal entry.
    pub diag_one: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct SdpOptions {
    /// Convergence tolerance on (normalized) primal/dual residuals and
    /// relative duality gap.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SdpOptions {
    fn default() -> Self {
        SdpOptions {
            tol: 1e-7,
            max_iter: 100,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdpStatus {
    Optimal,
    /// A feasibility phase certified that no PSD matrix satisfies all
    /// constraints (within tolerance).
    Infeasible,
    MaxIter,
}

/// Solver output. When `status` is [`SdpStatus::Infeasible`] only `status`
/// and `iterations` are meaningful; the remaining fields are zeros/NaN.
#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub q: DMatrix<Complex64>,
    /// Objective `Re Tr(C Q)` at the returned iterate.
    pub value: f64,
    pub status: SdpStatus,
    pub iterations: usize,
    /// |dual objective - primal objective| at termination.
    pub duality_gap: f64,
    /// Largest normalized primal/dual residual at termination.
    pub kkt_residual: f64,
    /// Multipliers of the unit-diagonal conditions (empty without them).
    pub diag_duals: Vec<f64>,
    /// Multipliers of the trace inequalities, nonnegative at optimality,
    /// stated for the `<=` orientation of each constraint.
    pub ineq_duals: Vec<f64>,
}

/// Independently recomputed optimality evidence for a solution.
///
/// All quantities are in the original (unscaled) problem data. Margins are
/// signed: a healthy solution has `psd_margin` and `dual_psd_margin` no
/// smaller than a tiny negative rounding allowance and violations near zero.
#[derive(Debug, Clone)]
pub struct ResidualReport {
    /// Smallest eigenvalue of Q.
    pub psd_margin: f64,
    /// max_n |Q_nn - 1| (zero when no unit diagonal was requested).
    pub max_diag_violation: f64,
    /// Largest amount by which any trace inequality is broken.
    pub max_ineq_violation: f64,
    /// Smallest eigenvalue of the dual slack `Diag(z) + sum y_j A~_j - C`.
    pub dual_psd_margin: f64,
    /// Smallest inequality multiplier (infinite when there are none).
    pub min_ineq_dual: f64,
    /// |dual objective - primal objective| recomputed from the certificates.
    pub duality_gap: f64,
    /// |<Q, dual slack>|.
    pub complementarity: f64,
}

fn maxabs_complex(m: &DMatrix<Complex64>) -> f64 {
    m.iter()
        .fold(0.0f64, |acc, c| acc.max(c.re.abs()).max(c.im.abs()))
}

fn check_hermitian(m: &DMatrix<Complex64>, index: Option<usize>) -> Result<(), SdpError> {
    let scale = 1.0 + maxabs_complex(m);
    let n = m.nrows();
    for i in 0..n {
        for j in 0..n {
            let dev = (m[(i, j)] - m[(j, i)].conj()).norm();
            if dev > 1e-12 * scale {
                return Err(SdpError::NotHermitian { index });
            }
        }
    }
    Ok(())
}

/// Re Tr(A B) for Hermitian `a`, `b` (the imaginary part cancels).
fn herm_inner(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for j in 0..n {
        for i in 0..n {
            acc += (a[(i, j)] * b[(j, i)]).re;
        }
    }
    acc
}

fn min_eigenvalue(h: &DMatrix<Complex64>) -> f64 {
    let sym = (h + h.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = sym.symmetric_eigen();
    eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Constraint data normalized to `Tr(A~ Q) <= b~` orientation and scaled to
/// unit magnitude.
struct NormalizedIneq {
    mat: DMatrix<Complex64>,
    rhs: f64,
    /// Entry scale divided out of `mat` and `rhs` before solving.
    scale: f64,
}

fn validate_and_normalize(problem: &SdpProblem) -> Result<Vec<NormalizedIneq>, SdpError> {
    let n = problem.objective.nrows();
    if n == 0 || !problem.objective.is_square() {
        return Err(SdpError::BadObjective);
    }
    check_hermitian(&problem.objective, None)?;
    if !problem.diag_one && problem.constraints.is_empty() {
        return Err(SdpError::Unconstrained);
    }
    let mut out = Vec::with_capacity(problem.constraints.len());
    for (j, con) in problem.constraints.iter().enumerate() {
        if con.matrix.nrows() != n || con.matrix.ncols() != n {
            return Err(SdpError::DimensionMismatch {
                index: j,
                rows: con.matrix.nrows(),
                cols: con.matrix.ncols(),
                want: n,
            });
        }
        if !con.rhs.is_finite() {
            return Err(SdpError::BadRhs { index: j });
        }
        check_hermitian(&con.matrix, Some(j))?;
        let (mat, rhs) = match con.sense {
            ConstraintSense::Le => (con.matrix.clone(), con.rhs),
            ConstraintSense::Ge => (-&con.matrix, -con.rhs),
        };
        let scale = maxabs_complex(&mat).max(f64::MIN_POSITIVE.sqrt());
        out.push(NormalizedIneq {
            mat: &mat / Complex64::new(scale, 0.0),
            rhs: rhs / scale,
            scale,
        });
    }
    Ok(out)
}

/// Assemble the real equality rows shared by both solve phases.
fn real_rows(n2: usize, diag_one: bool, ineqs: &[NormalizedIneq], phase_one: bool) -> Vec<Row> {
    let num_ineq = ineqs.len();
    let mut rows = Vec::with_capacity(if diag_one { n2 } else { 0 } + num_ineq);
    if diag_one {
        for k in 0..n2 {
            rows.push(Row {
                mat: RowMat::Diag(k),
                lp: vec![],
                rhs: 1.0,
            });
        }
    }
    for (j, ineq) in ineqs.iter().enumerate() {
        let mut lp = vec![(j, 1.0)];
        if phase_one {
            lp.push((num_ineq, -1.0));
        }
        rows.push(Row {
            mat: RowMat::Dense(embed_hermitian(&ineq.mat) * 0.5),
            lp,
            rhs: ineq.rhs,
        });
    }
    rows
}

/// Solve the problem to the requested tolerance.
///
/// The solve is fully deterministic: identical inputs produce bitwise
/// identical outputs.
pub fn solve(problem: &SdpProblem, opts: &SdpOptions) -> Result<SdpSolution, SdpError> {
    let ineqs = validate_and_normalize(problem)?;
    let n = problem.objective.nrows();
    let n2 = 2 * n;
    let num_ineq = ineqs.len();

    let obj_scale = maxabs_complex(&problem.objective).max(f64::MIN_POSITIVE.sqrt());
    let c_scaled = &problem.objective / Complex64::new(obj_scale, 0.0);

    let ipm_opts = IpmOptions {
        tol: 0.5 * opts.tol,
        max_iter: opts.max_iter,
    };

    // Feasibility phase, skipped when the identity is already strictly
    // feasible (it always satisfies a unit diagonal).
    if num_ineq > 0 {
        let identity_strict = ineqs.iter().all(|ineq| {
            let tr: f64 = (0..n).map(|k| ineq.mat[(k, k)].re).sum();
            tr < ineq.rhs - 1e-8 * (1.0 + ineq.rhs.abs())
        });
        if !identity_strict {
            let phase1 = RealSdp {
                n: n2,
                num_lp: num_ineq + 1,
                c_psd: DMatrix::zeros(n2, n2),
                c_lp: {
                    let mut c = DVector::zeros(num_ineq + 1);
                    c[num_ineq] = -1.0;
                    c
                },
                rows: real_rows(n2, problem.diag_one, &ineqs, true),
            };
            let out = ipm::solve_real(&phase1, &ipm_opts);
            let max_rhs = ineqs.iter().fold(0.0f64, |a, q| a.max(q.rhs.abs()));
            let eps_feas = 1e-6 * (1.0 + max_rhs);
            if out.converged && out.x[num_ineq] > eps_feas {
                return Ok(SdpSolution {
                    q: DMatrix::zeros(n, n),
                    value: f64::NAN,
                    status: SdpStatus::Infeasible,
                    iterations: out.iterations,
                    duality_gap: f64::NAN,
                    kkt_residual: f64::NAN,
                    diag_duals: vec![],
                    ineq_duals: vec![],
                });
            }
        }
    }

    let phase2 = RealSdp {
        n: n2,
        num_lp: num_ineq,
        c_psd: embed_hermitian(&c_scaled) * 0.5,
        c_lp: DVector::zeros(num_ineq),
        rows: real_rows(n2, problem.diag_one, &ineqs, false),
    };
    let out = ipm::solve_real(&phase2, &ipm_opts);

    let q = unembed_hermitian(&out.y);
    let diag_duals = if problem.diag_one {
        (0..n).map(|k| obj_scale * (out.w[k] + out.w[k + n])).collect()
    } else {
        vec![]
    };
    let row_offset = if problem.diag_one { n2 } else { 0 };
    let ineq_duals = (0..num_ineq)
        .map(|j| obj_scale * out.w[row_offset + j] / ineqs[j].scale)
        .collect();

    Ok(SdpSolution {
        q,
        value: obj_scale * out.pobj,
        status: if out.converged {
            SdpStatus::Optimal
        } else {
            SdpStatus::MaxIter
        },
        iterations: out.iterations,
        duality_gap: (obj_scale * (out.dobj - out.pobj)).abs(),
        kkt_residual: out.primal_res.max(out.dual_res),
        diag_duals,
        ineq_duals,
    })
}

/// Recompute all optimality evidence for `solution` directly from the
/// problem data, without reusing anything the solver derived internally.
pub fn verify(problem: &SdpProblem, solution: &SdpSolution) -> Result<ResidualReport, SdpError> {
    let ineqs = validate_and_normalize(problem)?;
    let n = problem.objective.nrows();
    let q = &solution.q;

    let psd_margin = min_eigenvalue(q);
    let max_diag_violation = if problem.diag_one {
        (0..n).fold(0.0f64, |acc, k| {
            acc.max((q[(k, k)] - Complex64::new(1.0, 0.0)).norm())
        })
    } else {
        0.0
    };

    let mut max_ineq_violation = 0.0f64;
    let mut dual_obj = 0.0f64;
    // Dual slack S = Diag(diag_duals) + sum_j y_j A~_j - C, in original units.
    let mut dual_slack = -problem.objective.clone();
    for (k, &zeta) in solution.diag_duals.iter().enumerate() {
        dual_slack[(k, k)] += Complex64::new(zeta, 0.0);
        dual_obj += zeta;
    }
    let mut min_ineq_dual = f64::INFINITY;
    for (j, ineq) in ineqs.iter().enumerate() {
        let lhs = herm_inner(&ineq.mat, q) * ineq.scale;
        let rhs = ineq.rhs * ineq.scale;
        max_ineq_violation = max_ineq_violation.max(lhs - rhs);
        let y = solution.ineq_duals.get(j).copied().unwrap_or(0.0);
        min_ineq_dual = min_ineq_dual.min(y);
        dual_obj += y * rhs;
        let w = Complex64::new(y * ineq.scale, 0.0);
        dual_slack.zip_apply(&ineq.mat, |dst, src| *dst += w * src);
    }

    let primal_obj = herm_inner(&problem.objective, q);
    let dual_psd_margin = min_eigenvalue(&dual_slack);
    let complementarity = herm_inner(q, &dual_slack).abs();

    Ok(ResidualReport {
        psd_margin,
        max_diag_violation,
        max_ineq_violation: max_ineq_violation.max(0.0),
        dual_psd_margin,
        min_ineq_dual,
        duality_gap: (dual_obj - primal_obj).abs(),
        complementarity,
    })
}
