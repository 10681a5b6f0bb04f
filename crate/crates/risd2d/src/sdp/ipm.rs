//! Primal-dual interior-point core for small dense real SDPs.
//!
//! Standard form (maximization; inequality slacks live in the LP block):
//!
//! ```text
//! max  <C, Y> + c'x
//! s.t. <A_r, Y> + a_r'x = b_r       r = 0..m-1
//!      Y PSD,  x >= 0
//! ```
//!
//! The search direction is the HKM direction with a Mehrotra
//! predictor-corrector step. Unit-diagonal rows (`A_r = e_kk e_kk'`) are the
//! bulk of our row set and get closed-form Schur-complement entries, so an
//! iteration without dense rows costs a handful of `n^3` products.
//!
//! Everything here is deterministic: no randomness, fixed iteration order.

use nalgebra::{Cholesky, DMatrix, DVector};

/// PSD-block coefficient of one constraint row.
#[derive(Debug, Clone)]
pub enum RowMat {
    /// `e_kk e_kk'`: picks the diagonal entry `Y_kk`.
    Diag(usize),
    /// Arbitrary symmetric coefficient matrix.
    Dense(DMatrix<f64>),
}

/// One equality row `<A_r, Y> + a_r'x = b_r`.
#[derive(Debug, Clone)]
pub struct Row {
    pub mat: RowMat,
    /// Sparse LP-block coefficients (index, value).
    pub lp: Vec<(usize, f64)>,
    pub rhs: f64,
}

/// Problem data for [`solve_real`].
#[derive(Debug, Clone)]
pub struct RealSdp {
    /// PSD block dimension.
    pub n: usize,
    /// Number of nonnegative scalar variables.
    pub num_lp: usize,
    pub c_psd: DMatrix<f64>,
    pub c_lp: DVector<f64>,
    pub rows: Vec<Row>,
}

#[derive(Debug, Clone, Copy)]
pub struct IpmOptions {
    pub tol: f64,
    pub max_iter: usize,
}

/// Final iterate and certificates of the interior-point run.
#[derive(Debug, Clone)]
pub struct IpmOutcome {
    pub y: DMatrix<f64>,
    pub x: DVector<f64>,
    /// Equality multipliers, one per row.
    pub w: DVector<f64>,
    pub pobj: f64,
    pub dobj: f64,
    pub primal_res: f64,
    pub dual_res: f64,
    pub iterations: usize,
    pub converged: bool,
}

const STEP_FRACTION: f64 = 0.98;

/// `sum_ij a[i,j] g[j,i]`, i.e. `Tr(A G)` without symmetry assumptions on `g`.
fn tr_prod(a: &DMatrix<f64>, g: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for j in 0..n {
        for i in 0..n {
            acc += a[(i, j)] * g[(j, i)];
        }
    }
    acc
}

/// Frobenius inner product of two same-shape matrices.
fn frob(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

fn row_value(row: &RowMat, y: &DMatrix<f64>) -> f64 {
    match row {
        RowMat::Diag(k) => y[(*k, *k)],
        RowMat::Dense(a) => frob(a, y), // both symmetric
    }
}

/// `Tr(A_r G)` for a possibly nonsymmetric `G`.
fn row_trace(row: &RowMat, g: &DMatrix<f64>) -> f64 {
    match row {
        RowMat::Diag(k) => g[(*k, *k)],
        RowMat::Dense(a) => tr_prod(a, g),
    }
}

/// Accumulate `coeff * A_r` into `acc`.
fn row_axpy(acc: &mut DMatrix<f64>, coeff: f64, row: &RowMat) {
    match row {
        RowMat::Diag(k) => acc[(*k, *k)] += coeff,
        RowMat::Dense(a) => {
            acc.zip_apply(a, |dst, src| *dst += coeff * src);
        }
    }
}

/// Largest step in `[0, 1]` keeping `base + alpha * dir` positive definite,
/// probed by Cholesky bisection.
fn psd_max_step(base: &DMatrix<f64>, dir: &DMatrix<f64>) -> f64 {
    let probe = |alpha: f64| Cholesky::new(base + dir * alpha).is_some();
    if probe(1.0) {
        return 1.0;
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..30 {
        let mid = 0.5 * (lo + hi);
        if probe(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Largest step in `[0, 1]` keeping `x + alpha * dx` nonnegative.
fn lp_max_step(x: &DVector<f64>, dx: &DVector<f64>) -> f64 {
    let mut alpha = 1.0f64;
    for i in 0..x.len() {
        if dx[i] < 0.0 {
            alpha = alpha.min(-x[i] / dx[i]);
        }
    }
    alpha
}

fn cholesky_with_ridge(m: &DMatrix<f64>) -> Option<Cholesky<f64, nalgebra::Dyn>> {
    if let Some(c) = Cholesky::new(m.clone()) {
        return Some(c);
    }
    let dim = m.nrows();
    let scale = m.trace().abs().max(1.0) / dim as f64;
    let mut ridge = scale * 1e-14;
    for _ in 0..8 {
        let jittered = m + DMatrix::identity(dim, dim) * ridge;
        if let Some(c) = Cholesky::new(jittered) {
            return Some(c);
        }
        ridge *= 100.0;
    }
    None
}

struct Direction {
    dw: DVector<f64>,
    ds: DMatrix<f64>,
    dz: DVector<f64>,
    dy: DMatrix<f64>,
    dx: DVector<f64>,
}

/// Solve the standard-form problem by predictor-corrector interior point.
pub fn solve_real(prob: &RealSdp, opts: &IpmOptions) -> IpmOutcome {
    let n = prob.n;
    let nlp = prob.num_lp;
    let m = prob.rows.len();
    assert!(m > 0, "at least one constraint row is required");

    let cmax = prob
        .c_psd
        .iter()
        .chain(prob.c_lp.iter())
        .fold(0.0f64, |acc, &v| acc.max(v.abs()))
        .max(1.0);
    let bmax = prob
        .rows
        .iter()
        .fold(0.0f64, |acc, r| acc.max(r.rhs.abs()))
        .max(1.0);

    let mut y = DMatrix::<f64>::identity(n, n) * bmax;
    let mut x = DVector::<f64>::from_element(nlp, bmax);
    let mut w = DVector::<f64>::zeros(m);
    let mut s = DMatrix::<f64>::identity(n, n) * cmax;
    let mut z = DVector::<f64>::from_element(nlp, cmax);

    let total_dim = (n + nlp) as f64;
    let mut outcome_iters = 0;
    let mut converged = false;
    let (mut pobj, mut dobj) = (0.0, 0.0);
    let (mut pinf, mut dinf) = (f64::INFINITY, f64::INFINITY);
    let mut best_metric = f64::INFINITY;
    let mut since_best = 0usize;

    for iter in 0..opts.max_iter {
        outcome_iters = iter;

        // Residuals.
        let mut r_p = DVector::<f64>::zeros(m);
        for (r, row) in prob.rows.iter().enumerate() {
            let mut lhs = row_value(&row.mat, &y);
            for &(i, a) in &row.lp {
                lhs += a * x[i];
            }
            r_p[r] = row.rhs - lhs;
        }
        let mut rd = prob.c_psd.clone() + &s;
        for (r, row) in prob.rows.iter().enumerate() {
            row_axpy(&mut rd, -w[r], &row.mat);
        }
        let mut rd_lp = prob.c_lp.clone() + &z;
        for (r, row) in prob.rows.iter().enumerate() {
            for &(i, a) in &row.lp {
                rd_lp[i] -= a * w[r];
            }
        }

        pobj = frob(&prob.c_psd, &y) + prob.c_lp.dot(&x);
        dobj = prob
            .rows
            .iter()
            .enumerate()
            .map(|(r, row)| w[r] * row.rhs)
            .sum();
        let gap = frob(&y, &s) + x.dot(&z);
        let mu = gap / total_dim;

        pinf = r_p.amax() / (1.0 + bmax);
        let dinf_psd = rd.amax();
        let dinf_lp = if nlp > 0 { rd_lp.amax() } else { 0.0 };
        dinf = dinf_psd.max(dinf_lp) / (1.0 + cmax);
        let relgap = gap / (1.0 + pobj.abs() + dobj.abs());

        let metric = pinf.max(dinf).max(relgap);
        if metric <= opts.tol {
            converged = true;
            break;
        }
        if metric < 0.5 * best_metric {
            best_metric = metric;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best > 30 {
                break; // numerically stalled
            }
        }
        if !metric.is_finite() {
            break;
        }

        // Factorizations of the current iterate.
        let chol_s = match cholesky_with_ridge(&s) {
            Some(c) => c,
            None => break,
        };
        let s_inv = chol_s.inverse();

        // Per dense row: W_r = S^-1 A_r Y (transpose of Y A_r S^-1).
        let w_mats: Vec<Option<DMatrix<f64>>> = prob
            .rows
            .iter()
            .map(|row| match &row.mat {
                RowMat::Diag(_) => None,
                RowMat::Dense(a) => Some(&s_inv * &(a * &y)),
            })
            .collect();

        // Schur complement M_rs = Tr(A_r Y A_s S^-1) + sum_i a_r a_s x/z.
        let dd = y.component_mul(&s_inv);
        let mut big_m = DMatrix::<f64>::zeros(m, m);
        for r in 0..m {
            for c in r..m {
                let val = match (&prob.rows[r].mat, &prob.rows[c].mat) {
                    (RowMat::Diag(a), RowMat::Diag(b)) => dd[(*a, *b)],
                    (RowMat::Diag(a), RowMat::Dense(_)) => {
                        let wm = w_mats[c].as_ref().unwrap();
                        wm[(*a, *a)]
                    }
                    (RowMat::Dense(_), RowMat::Diag(b)) => {
                        let wm = w_mats[r].as_ref().unwrap();
                        wm[(*b, *b)]
                    }
                    (RowMat::Dense(ar), RowMat::Dense(ac)) => {
                        let wr = w_mats[r].as_ref().unwrap();
                        let wc = w_mats[c].as_ref().unwrap();
                        0.5 * (frob(ar, wc) + frob(ac, wr))
                    }
                };
                big_m[(r, c)] = val;
                big_m[(c, r)] = val;
            }
        }
        if nlp > 0 {
            for r in 0..m {
                for c in r..m {
                    let mut acc = 0.0;
                    for &(i, ar) in &prob.rows[r].lp {
                        for &(j, ac) in &prob.rows[c].lp {
                            if i == j {
                                acc += ar * ac * x[i] / z[i];
                            }
                        }
                    }
                    if acc != 0.0 {
                        big_m[(r, c)] += acc;
                        big_m[(c, r)] = big_m[(r, c)];
                    }
                }
            }
        }
        let chol_m = match cholesky_with_ridge(&big_m) {
            Some(c) => c,
            None => break,
        };

        // Shared piece of both right-hand sides: Y R_d S^-1.
        let y_rd_sinv = &y * &(&rd * &s_inv);

        // One Newton solve for a given complementarity target, expressed as
        // G = R_c S^-1 and g_i = r_c_i / z_i.
        let solve_direction = |g_psd: &DMatrix<f64>, g_lp: &DVector<f64>| -> Direction {
            let full_g = g_psd + &y_rd_sinv;
            let mut rhs = DVector::<f64>::zeros(m);
            for (r, row) in prob.rows.iter().enumerate() {
                let mut v = row_trace(&row.mat, &full_g) - r_p[r];
                for &(i, a) in &row.lp {
                    v += a * (g_lp[i] + x[i] / z[i] * rd_lp[i]);
                }
                rhs[r] = v;
            }
            let dw = chol_m.solve(&rhs);

            let mut ds = -rd.clone();
            for (r, row) in prob.rows.iter().enumerate() {
                row_axpy(&mut ds, dw[r], &row.mat);
            }
            let mut dz = DVector::<f64>::zeros(nlp);
            for (r, row) in prob.rows.iter().enumerate() {
                for &(i, a) in &row.lp {
                    dz[i] += a * dw[r];
                }
            }
            for i in 0..nlp {
                dz[i] -= rd_lp[i];
            }

            // dS already carries -R_d, so the complementarity target alone
            // remains here (the R_d term in `full_g` was only for the RHS).
            let dy_raw = g_psd - &y * &(&ds * &s_inv);
            let dy = (&dy_raw + dy_raw.transpose()) * 0.5;
            let mut dx = DVector::<f64>::zeros(nlp);
            for i in 0..nlp {
                dx[i] = g_lp[i] - x[i] / z[i] * dz[i];
            }
            Direction { dw, ds, dz, dy, dx }
        };

        // Predictor: drive complementarity toward zero (R_c = -Y S).
        let g_aff_psd = -&y;
        let g_aff_lp = -x.clone();
        let aff = solve_direction(&g_aff_psd, &g_aff_lp);

        let ap_aff = psd_max_step(&y, &aff.dy).min(lp_max_step(&x, &aff.dx));
        let ad_aff = psd_max_step(&s, &aff.ds).min(lp_max_step(&z, &aff.dz));
        let gap_aff = frob(&(&y + &aff.dy * ap_aff), &(&s + &aff.ds * ad_aff))
            + (&x + &aff.dx * ap_aff).dot(&(&z + &aff.dz * ad_aff));
        let sigma = (gap_aff / gap).clamp(0.0, 1.0).powi(3);

        // Corrector: R_c = sigma mu I - Y S - dY dS.
        let target = sigma * mu;
        let g_corr_psd = &s_inv * target - &y - &aff.dy * &(&aff.ds * &s_inv);
        let mut g_corr_lp = DVector::<f64>::zeros(nlp);
        for i in 0..nlp {
            g_corr_lp[i] = (target - aff.dx[i] * aff.dz[i]) / z[i] - x[i];
        }
        let dir = solve_direction(&g_corr_psd, &g_corr_lp);

        let ap = (STEP_FRACTION * psd_max_step(&y, &dir.dy).min(lp_max_step(&x, &dir.dx))).min(1.0);
        let ad = (STEP_FRACTION * psd_max_step(&s, &dir.ds).min(lp_max_step(&z, &dir.dz))).min(1.0);

        y += &dir.dy * ap;
        x += &dir.dx * ap;
        w += &dir.dw * ad;
        s += &dir.ds * ad;
        z += &dir.dz * ad;
    }

    IpmOutcome {
        y,
        x,
        w,
        pobj,
        dobj,
        primal_res: pinf,
        dual_res: dinf,
        iterations: outcome_iters,
        converged,
    }
}
