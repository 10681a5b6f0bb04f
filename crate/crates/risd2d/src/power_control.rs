//! Transmit-power control at fixed reflection phases.
//!
//! With the phases frozen, each link's rate depends on the powers through
//! `log2(T_l) - log2(I_l)`, where `T_l` is the total received power at
//! receiver `l` and `I_l` excludes the serving link. Both logs are concave,
//! so the sum rate is a difference of concave functions; energy efficiency
//! adds a ratio on top. The solver peels these layers off one at a time:
//!
//! * [`dinkelbach`] turns the efficiency ratio into a sequence of
//!   `rate - lambda * power` problems, raising `lambda` to the best
//!   efficiency seen so far (so the `lambda` trace never decreases);
//! * [`dca_solve`] handles each such problem by linearizing the subtracted
//!   concave part around the current iterate, a
//!   majorize-minimize step that can only improve the true objective;
//! * [`solve_convex_subproblem`] solves the resulting concave program over
//!   the power box with a log-barrier Newton method. Minimum-rate
//!   requirements ride along as linearized constraints that are tightened
//!   inner approximations, so feasibility, once established, is preserved.
//!
//! Everything here is deterministic and allocation-light; typical problems
//! have fewer than a dozen variables.

use nalgebra::{Cholesky, DMatrix, DVector};
use thiserror::Error;

use crate::system::SystemParams;

const LN2: f64 = std::f64::consts::LN_2;

#[derive(Debug, Error)]
pub enum PcError {
    #[error("{0}")]
    Dimension(String),
    #[error("maximum transmit power must be positive, got {0}")]
    BadPowerCap(f64),
}

/// Gains, noise, and power-model constants for one power-control problem.
///
/// `gains[(i, l)]` is the squared effective channel magnitude from
/// transmitter `i` into receiver `l`, with the reflection phases already
/// absorbed.
#[derive(Debug, Clone)]
pub struct PcContext {
    pub gains: DMatrix<f64>,
    pub noise_power: f64,
    pub p_max: f64,
    pub r_min: Vec<f64>,
    /// Power drawn regardless of the transmit levels (circuitry and
    /// reflecting elements).
    pub fixed_power: f64,
}

impl PcContext {
    pub fn new(
        gains: DMatrix<f64>,
        noise_power: f64,
        p_max: f64,
        r_min: Vec<f64>,
        fixed_power: f64,
    ) -> Result<PcContext, PcError> {
        let links = gains.nrows();
        if !gains.is_square() || links == 0 {
            return Err(PcError::Dimension(format!(
                "gain matrix is {}x{}",
                gains.nrows(),
                gains.ncols()
            )));
        }
        if r_min.len() != links {
            return Err(PcError::Dimension(format!(
                "{} rate floors for {links} links",
                r_min.len()
            )));
        }
        if !(p_max > 0.0) {
            return Err(PcError::BadPowerCap(p_max));
        }
        Ok(PcContext {
            gains,
            noise_power,
            p_max,
            r_min,
            fixed_power,
        })
    }

    /// Pull the scalar constants out of the shared parameter struct.
    pub fn from_params(
        gains: DMatrix<f64>,
        params: &SystemParams,
        num_elements: usize,
    ) -> Result<PcContext, PcError> {
        let fixed = params.circuit_power * 2.0 * gains.nrows() as f64
            + params.element_power * num_elements as f64;
        PcContext::new(
            gains,
            params.noise_power,
            params.p_max,
            params.r_min.clone(),
            fixed,
        )
    }

    pub fn num_links(&self) -> usize {
        self.gains.nrows()
    }

    /// Total received power at receiver `l`, serving signal included.
    fn total_at(&self, p: &DVector<f64>, l: usize) -> f64 {
        let mut acc = self.noise_power;
        for i in 0..self.num_links() {
            acc += self.gains[(i, l)] * p[i];
        }
        acc
    }

    /// Interference-plus-noise at receiver `l`.
    fn interference_at(&self, p: &DVector<f64>, l: usize) -> f64 {
        self.total_at(p, l) - self.gains[(l, l)] * p[l]
    }

    pub fn rate(&self, p: &DVector<f64>, l: usize) -> f64 {
        (self.total_at(p, l) / self.interference_at(p, l)).log2()
    }

    pub fn sum_rate(&self, p: &DVector<f64>) -> f64 {
        (0..self.num_links()).map(|l| self.rate(p, l)).sum()
    }

    pub fn total_power(&self, p: &DVector<f64>) -> f64 {
        p.sum() + self.fixed_power
    }

    pub fn energy_efficiency(&self, p: &DVector<f64>) -> f64 {
        self.sum_rate(p) / self.total_power(p)
    }

    /// `rate_l - r_min_l` for every link.
    pub fn rate_margins(&self, p: &DVector<f64>) -> Vec<f64> {
        (0..self.num_links())
            .map(|l| self.rate(p, l) - self.r_min[l])
            .collect()
    }

    pub fn worst_margin(&self, p: &DVector<f64>) -> f64 {
        self.rate_margins(p)
            .into_iter()
            .fold(f64::INFINITY, f64::min)
    }

    fn in_box(&self, p: &DVector<f64>, tol: f64) -> bool {
        p.iter().all(|&v| v >= -tol && v <= self.p_max + tol)
    }

    pub fn is_feasible(&self, p: &DVector<f64>, tol: f64) -> bool {
        self.in_box(p, tol) && self.worst_margin(p) >= -tol
    }
}

/// The two concave halves of the sum rate: `sum_rate = f1 - f2` with
/// `f1 = sum_l log2(T_l)` and `f2 = sum_l log2(I_l)`.
pub fn dc_components(ctx: &PcContext, p: &DVector<f64>) -> (f64, f64) {
    let mut f1 = 0.0;
    let mut f2 = 0.0;
    for l in 0..ctx.num_links() {
        f1 += ctx.total_at(p, l).log2();
        f2 += ctx.interference_at(p, l).log2();
    }
    (f1, f2)
}

pub fn grad_f1(ctx: &PcContext, p: &DVector<f64>) -> DVector<f64> {
    let links = ctx.num_links();
    let mut g = DVector::zeros(links);
    for l in 0..links {
        let t = ctx.total_at(p, l);
        for i in 0..links {
            g[i] += ctx.gains[(i, l)] / (LN2 * t);
        }
    }
    g
}

pub fn grad_f2(ctx: &PcContext, p: &DVector<f64>) -> DVector<f64> {
    let links = ctx.num_links();
    let mut g = DVector::zeros(links);
    for l in 0..links {
        let intf = ctx.interference_at(p, l);
        for i in 0..links {
            if i != l {
                g[i] += ctx.gains[(i, l)] / (LN2 * intf);
            }
        }
    }
    g
}

/// `log2` of the interference-plus-noise at receiver `l`: the concave term
/// subtracted both inside the objective split and inside link `l`'s rate
/// floor, and therefore the term the solver linearizes.
pub fn interference_log2(ctx: &PcContext, p: &DVector<f64>, l: usize) -> f64 {
    ctx.interference_at(p, l).log2()
}

pub fn grad_interference_log2(ctx: &PcContext, p: &DVector<f64>, l: usize) -> DVector<f64> {
    let links = ctx.num_links();
    let intf = ctx.interference_at(p, l);
    let mut g = DVector::zeros(links);
    for i in 0..links {
        if i != l {
            g[i] = ctx.gains[(i, l)] / (LN2 * intf);
        }
    }
    g
}

/// `sum_rate(p) - lambda * total_power(p)`: the Dinkelbach objective.
pub fn f_lambda(ctx: &PcContext, p: &DVector<f64>, lambda: f64) -> f64 {
    ctx.sum_rate(p) - lambda * ctx.total_power(p)
}

/// The concave minorant of [`f_lambda`] obtained by linearizing `f2` at
/// `p_ref`. Touches `f_lambda` at `p_ref` and underestimates it elsewhere.
pub fn surrogate_objective(
    ctx: &PcContext,
    p: &DVector<f64>,
    p_ref: &DVector<f64>,
    lambda: f64,
) -> f64 {
    let (f1, _) = dc_components(ctx, p);
    let (_, f2_ref) = dc_components(ctx, p_ref);
    let d = grad_f2(ctx, p_ref);
    f1 - f2_ref - d.dot(&(p - p_ref)) - lambda * ctx.total_power(p)
}

/// One linearized rate-floor row: `(1/ln 2) ln T_l(p) - slope . p - offset`
/// must stay positive (minus the epigraph variable, when present).
struct RateRow {
    link: usize,
    slope: DVector<f64>,
    offset: f64,
}

impl RateRow {
    /// Linearize link `l`'s floor at `p_ref`, requiring
    /// `log2 T_l - [linearized log2 I_l] >= floor`.
    fn at(ctx: &PcContext, l: usize, p_ref: &DVector<f64>, floor: f64) -> RateRow {
        let slope = grad_interference_log2(ctx, p_ref, l);
        let offset = interference_log2(ctx, p_ref, l) - slope.dot(p_ref) + floor;
        RateRow {
            link: l,
            slope,
            offset,
        }
    }
}

/// Barrier-method problem: maximize
/// `w_log * (1/ln2) sum_l ln T_l(p) + lin . p [+ s]` over the power box,
/// subject to every [`RateRow`] staying positive (shifted by the epigraph
/// variable `s` when present, which is itself capped above).
struct Barrier<'a> {
    ctx: &'a PcContext,
    w_log: f64,
    lin: DVector<f64>,
    rows: Vec<RateRow>,
    epigraph: bool,
    s_cap: f64,
}

impl Barrier<'_> {
    fn dim(&self) -> usize {
        self.ctx.num_links() + usize::from(self.epigraph)
    }

    fn num_constraints(&self) -> usize {
        2 * self.ctx.num_links() + self.rows.len() + usize::from(self.epigraph)
    }

    fn powers<'b>(&self, x: &'b DVector<f64>) -> DVector<f64> {
        x.rows(0, self.ctx.num_links()).into_owned()
    }

    fn objective(&self, x: &DVector<f64>) -> f64 {
        let links = self.ctx.num_links();
        let p = self.powers(x);
        let mut val = 0.0;
        if self.w_log != 0.0 {
            for l in 0..links {
                val += self.w_log * self.ctx.total_at(&p, l).ln() / LN2;
            }
        }
        val += self.lin.dot(&p);
        if self.epigraph {
            val += x[links];
        }
        val
    }

    fn row_value(&self, row: &RateRow, x: &DVector<f64>) -> f64 {
        let links = self.ctx.num_links();
        let p = self.powers(x);
        let mut v = self.ctx.total_at(&p, row.link).ln() / LN2 - row.slope.dot(&p) - row.offset;
        if self.epigraph {
            v -= x[links];
        }
        v
    }

    fn in_domain(&self, x: &DVector<f64>) -> bool {
        let links = self.ctx.num_links();
        for i in 0..links {
            if x[i] <= 0.0 || x[i] >= self.ctx.p_max {
                return false;
            }
        }
        if self.epigraph && x[links] >= self.s_cap {
            return false;
        }
        self.rows.iter().all(|row| self.row_value(row, x) > 0.0)
    }

    /// Barrier potential `t * objective + sum of logs`; `-inf` off-domain.
    fn potential(&self, t: f64, x: &DVector<f64>) -> f64 {
        if !self.in_domain(x) {
            return f64::NEG_INFINITY;
        }
        let links = self.ctx.num_links();
        let mut val = t * self.objective(x);
        for i in 0..links {
            val += x[i].ln() + (self.ctx.p_max - x[i]).ln();
        }
        if self.epigraph {
            val += (self.s_cap - x[links]).ln();
        }
        for row in &self.rows {
            val += self.row_value(row, x).ln();
        }
        val
    }

    /// Gradient and Hessian of the potential at an in-domain point.
    fn derivatives(&self, t: f64, x: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        let links = self.ctx.num_links();
        let dim = self.dim();
        let p = self.powers(x);
        let mut grad = DVector::<f64>::zeros(dim);
        let mut hess = DMatrix::<f64>::zeros(dim, dim);

        // Smooth objective part.
        if self.w_log != 0.0 {
            for l in 0..links {
                let total = self.ctx.total_at(&p, l);
                let scale = t * self.w_log / LN2;
                for i in 0..links {
                    let gi = self.ctx.gains[(i, l)];
                    grad[i] += scale * gi / total;
                    for j in 0..links {
                        hess[(i, j)] -= scale * gi * self.ctx.gains[(j, l)] / (total * total);
                    }
                }
            }
        }
        for i in 0..links {
            grad[i] += t * self.lin[i];
        }
        if self.epigraph {
            grad[links] += t;
        }

        // Box barriers.
        for i in 0..links {
            let lo = x[i];
            let hi = self.ctx.p_max - x[i];
            grad[i] += 1.0 / lo - 1.0 / hi;
            hess[(i, i)] -= 1.0 / (lo * lo) + 1.0 / (hi * hi);
        }
        if self.epigraph {
            let cap = self.s_cap - x[links];
            grad[links] -= 1.0 / cap;
            hess[(links, links)] -= 1.0 / (cap * cap);
        }

        // Rate rows: value v, gradient gv, Hessian of v, then the chain
        // rule for ln v.
        for row in &self.rows {
            let v = self.row_value(row, x);
            let total = self.ctx.total_at(&p, row.link);
            let mut gv = DVector::<f64>::zeros(dim);
            for i in 0..links {
                gv[i] = self.ctx.gains[(i, row.link)] / (LN2 * total) - row.slope[i];
            }
            if self.epigraph {
                gv[links] = -1.0;
            }
            // Hess v = -(1/ln2) g g' / T^2 on the power block.
            for i in 0..links {
                let gi = self.ctx.gains[(i, row.link)];
                for j in 0..links {
                    let gj = self.ctx.gains[(j, row.link)];
                    hess[(i, j)] -= gi * gj / (LN2 * total * total * v);
                }
            }
            grad.axpy(1.0 / v, &gv, 1.0);
            // -(gv gv')/v^2 over the full dimension.
            for i in 0..dim {
                for j in 0..dim {
                    hess[(i, j)] -= gv[i] * gv[j] / (v * v);
                }
            }
        }
        (grad, hess)
    }

    /// Run the barrier method from a strictly feasible `x0`. Returns the
    /// final point and an upper bound on its distance from the constrained
    /// optimum in objective value.
    fn solve(&self, x0: DVector<f64>, early_exit: impl Fn(&DVector<f64>) -> bool) -> (DVector<f64>, f64) {
        debug_assert!(self.in_domain(&x0));
        let m = self.num_constraints() as f64;
        let mut x = x0;
        let mut t = 1.0;
        for _stage in 0..24 {
            // Newton with backtracking on the potential.
            for _ in 0..60 {
                let (grad, hess) = self.derivatives(t, &x);
                let neg = -hess;
                let Some(chol) = cholesky_jittered(&neg) else {
                    break;
                };
                let step = chol.solve(&grad);
                let decrement = grad.dot(&step);
                if decrement <= 2e-11 * (1.0 + t * self.objective(&x).abs()) {
                    break;
                }
                let base = self.potential(t, &x);
                let mut alpha = 1.0;
                let mut accepted = false;
                for _ in 0..60 {
                    let cand = &x + &step * alpha;
                    if self.potential(t, &cand) >= base + 0.1 * alpha * decrement {
                        x = cand;
                        accepted = true;
                        break;
                    }
                    alpha *= 0.5;
                }
                if !accepted {
                    break;
                }
            }
            if early_exit(&x) {
                break;
            }
            if m / t <= 1e-9 * (1.0 + self.objective(&x).abs()) {
                break;
            }
            t *= 10.0;
        }
        let gap = m / t;
        (x, gap)
    }
}

fn cholesky_jittered(m: &DMatrix<f64>) -> Option<Cholesky<f64, nalgebra::Dyn>> {
    if let Some(c) = Cholesky::new(m.clone()) {
        return Some(c);
    }
    let dim = m.nrows();
    let mut ridge = m.trace().abs().max(1.0) / dim as f64 * 1e-12;
    for _ in 0..4 {
        if let Some(c) = Cholesky::new(m + DMatrix::identity(dim, dim) * ridge) {
            return Some(c);
        }
        ridge *= 1e3;
    }
    None
}

#[derive(Debug, Clone)]
pub struct SubproblemSolution {
    pub p: DVector<f64>,
    /// Bound on the surrogate suboptimality left by the barrier method.
    pub gap_bound: f64,
}

/// Find a strictly feasible starting point for the given rows by maximizing
/// the worst row value over the box. Returns `None` when even that optimum
/// is not positive.
fn interior_point_for(ctx: &PcContext, rows: &[RateRow]) -> Option<DVector<f64>> {
    let links = ctx.num_links();
    let center = DVector::from_element(links, 0.5 * ctx.p_max);
    if rows.is_empty() {
        return Some(center);
    }
    let probe = Barrier {
        ctx,
        w_log: 0.0,
        lin: DVector::zeros(links),
        rows: rows
            .iter()
            .map(|r| RateRow {
                link: r.link,
                slope: r.slope.clone(),
                offset: r.offset,
            })
            .collect(),
        epigraph: true,
        s_cap: 0.0, // patched below
    };
    let worst = |x: &DVector<f64>| -> f64 {
        rows.iter()
            .map(|row| {
                // Row value without the epigraph shift.
                let p = x.rows(0, links).into_owned();
                ctx.total_at(&p, row.link).ln() / LN2 - row.slope.dot(&p) - row.offset
            })
            .fold(f64::INFINITY, f64::min)
    };
    let start_margin = worst(&center);
    let probe = Barrier {
        s_cap: start_margin.abs() + 100.0,
        ..probe
    };
    let mut x0 = DVector::zeros(links + 1);
    x0.rows_mut(0, links).copy_from(&center);
    x0[links] = start_margin - 1.0;
    let (x, _) = probe.solve(x0, |x| worst(&x.rows(0, links).into_owned()) >= 1e-6);
    let p = x.rows(0, links).into_owned();
    if worst(&p) > 1e-12 {
        Some(p)
    } else {
        None
    }
}

/// Maximize the linearized Dinkelbach surrogate around `p_ref`.
///
/// The rate floors enter through their inner linearization at `p_ref`, so
/// any returned point satisfies the true floors whenever `p_ref` does.
/// When the linearized constraint set has no interior the reference point
/// is returned unchanged.
pub fn solve_convex_subproblem(
    ctx: &PcContext,
    p_ref: &DVector<f64>,
    lambda: f64,
) -> Result<SubproblemSolution, PcError> {
    let links = ctx.num_links();
    if p_ref.len() != links {
        return Err(PcError::Dimension(format!(
            "{} powers for {links} links",
            p_ref.len()
        )));
    }
    let d = grad_f2(ctx, p_ref);
    let lin = DVector::from_iterator(links, d.iter().map(|&di| -di - lambda));
    let rows: Vec<RateRow> = (0..links)
        .filter(|&l| ctx.r_min[l] > 0.0)
        .map(|l| RateRow::at(ctx, l, p_ref, ctx.r_min[l]))
        .collect();

    // Strictly feasible start: clamp the reference point into the box and
    // fall back to a dedicated feasibility solve if a rate row is tight.
    let margin = 1e-9 * ctx.p_max;
    let clamped = DVector::from_iterator(
        links,
        p_ref.iter().map(|&v| v.clamp(margin, ctx.p_max - margin)),
    );
    let barrier = Barrier {
        ctx,
        w_log: 1.0,
        lin,
        rows,
        epigraph: false,
        s_cap: 0.0,
    };
    let x0 = if barrier.in_domain(&clamped) {
        clamped
    } else {
        match interior_point_for(ctx, &barrier.rows) {
            Some(p0) => p0,
            None => {
                return Ok(SubproblemSolution {
                    p: p_ref.clone(),
                    gap_bound: f64::INFINITY,
                })
            }
        }
    };
    let (x, gap_bound) = barrier.solve(x0, |_| false);

    // Snap near-boundary coordinates exactly onto the boundary when doing
    // so keeps every linearized row satisfied.
    let mut snapped = x.clone();
    let snap = 1e-8 * ctx.p_max;
    for i in 0..links {
        if snapped[i] < snap {
            snapped[i] = 0.0;
        } else if snapped[i] > ctx.p_max - snap {
            snapped[i] = ctx.p_max;
        }
    }
    let p = if snapped
        .iter()
        .zip(x.iter())
        .any(|(a, b)| a != b)
    {
        let rows_ok = barrier
            .rows
            .iter()
            .all(|row| barrier.row_value(row, &snapped) >= -1e-12);
        if rows_ok {
            snapped
        } else {
            x
        }
    } else {
        x
    };
    Ok(SubproblemSolution { p, gap_bound })
}

#[derive(Debug, Clone)]
pub struct DcaOpts {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for DcaOpts {
    fn default() -> Self {
        DcaOpts {
            tol: 1e-6,
            max_iter: 50,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DcaOutcome {
    pub p: DVector<f64>,
    /// `f_lambda` after every accepted iterate, starting with the initial
    /// point. Non-decreasing.
    pub trace: Vec<f64>,
}

/// Maximize [`f_lambda`] from `p0` by successive surrogate maximization.
///
/// Each round maximizes the concave minorant touched at the current
/// iterate; a round is accepted only when the surrogate value does not
/// drop, which makes the reported `f_lambda` trace non-decreasing.
pub fn dca_solve(
    ctx: &PcContext,
    p0: &DVector<f64>,
    lambda: f64,
    opts: &DcaOpts,
) -> Result<DcaOutcome, PcError> {
    let mut p = p0.clone();
    let mut value = f_lambda(ctx, &p, lambda);
    let mut trace = vec![value];
    for _ in 0..opts.max_iter {
        let sub = solve_convex_subproblem(ctx, &p, lambda)?;
        let anchor = surrogate_objective(ctx, &p, &p, lambda);
        let improved = surrogate_objective(ctx, &sub.p, &p, lambda);
        if !(improved >= anchor) {
            break; // numerically stuck; keep the current feasible iterate
        }
        let next_value = f_lambda(ctx, &sub.p, lambda);
        p = sub.p;
        let gain = next_value - value;
        value = next_value;
        trace.push(value);
        if gain <= opts.tol * (1.0 + value.abs()) {
            break;
        }
    }
    Ok(DcaOutcome { p, trace })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PcStatus {
    Converged,
    MaxIter,
    /// No transmit powers satisfy every minimum-rate requirement.
    Infeasible,
}

#[derive(Debug, Clone)]
pub struct PowerOpts {
    /// Stop once `f_lambda` at the current efficiency estimate drops below
    /// this.
    pub fp_tol: f64,
    pub fp_max_iter: usize,
    pub dca: DcaOpts,
}

impl Default for PowerOpts {
    fn default() -> Self {
        PowerOpts {
            fp_tol: 1e-4,
            fp_max_iter: 30,
            dca: DcaOpts::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct DinkelbachOutcome {
    pub p: DVector<f64>,
    pub energy_efficiency: f64,
    /// Efficiency estimate per round, starting at the best seed's
    /// efficiency. Non-decreasing.
    pub lambda_trace: Vec<f64>,
    pub status: PcStatus,
}

/// How many starting points the first Dinkelbach round refines. The
/// efficiency landscape has one basin per "mostly one transmitter" pattern,
/// so a single descent can settle for the wrong link; a handful of starts
/// covers the basins that matter.
const DINKELBACH_STARTS: usize = 3;

/// Maximize energy efficiency over the power box.
///
/// Runs the Dinkelbach fixed-point iteration with [`dca_solve`] as the
/// inner maximizer. The first round descends from the few best seeds —
/// the warm start, full power, and single-transmitter patterns at several
/// levels — and later rounds continue from the incumbent, which is always
/// the best iterate by true efficiency; `lambda` is the efficiency of that
/// incumbent, which makes the trace non-decreasing and leaves the final
/// `lambda` exactly equal to the efficiency of the returned powers.
pub fn dinkelbach(
    ctx: &PcContext,
    warm: Option<&DVector<f64>>,
    opts: &PowerOpts,
) -> Result<DinkelbachOutcome, PcError> {
    let links = ctx.num_links();

    // Assemble feasible starting candidates, best efficiency first. The
    // single-transmitter patterns only survive the feasibility filter when
    // the silenced links carry no rate floor.
    let mut seeds: Vec<DVector<f64>> = Vec::new();
    if let Some(w) = warm {
        if w.len() == links {
            seeds.push(DVector::from_iterator(
                links,
                w.iter().map(|&v| v.clamp(0.0, ctx.p_max)),
            ));
        }
    }
    seeds.push(DVector::from_element(links, ctx.p_max));
    if links > 1 {
        for l in 0..links {
            for level in [1.0, 0.1, 0.01] {
                let mut solo = DVector::zeros(links);
                solo[l] = level * ctx.p_max;
                seeds.push(solo);
            }
        }
    }
    seeds.retain(|p| ctx.is_feasible(p, 1e-9));
    if seeds.is_empty() {
        if let Some(p) = feasibility_check(ctx) {
            seeds.push(p);
        }
    }
    if seeds.is_empty() {
        return Ok(DinkelbachOutcome {
            p: DVector::zeros(links),
            energy_efficiency: 0.0,
            lambda_trace: vec![],
            status: PcStatus::Infeasible,
        });
    }
    seeds.sort_by(|a, b| ctx.energy_efficiency(b).total_cmp(&ctx.energy_efficiency(a)));
    seeds.truncate(DINKELBACH_STARTS);
    let mut best = seeds[0].clone();

    let mut lambda = ctx.energy_efficiency(&best);
    let mut trace = vec![lambda];
    let mut status = PcStatus::MaxIter;
    for round in 0..opts.fp_max_iter {
        let starts = if round == 0 { seeds.len() } else { 1 };
        for s in 0..starts {
            let from = if round == 0 { &seeds[s] } else { &best };
            let inner = dca_solve(ctx, from, lambda, &opts.dca)?;
            if ctx.is_feasible(&inner.p, 1e-9)
                && ctx.energy_efficiency(&inner.p) > ctx.energy_efficiency(&best)
            {
                best = inner.p;
            }
        }
        let residual = f_lambda(ctx, &best, lambda).abs();
        lambda = ctx.energy_efficiency(&best);
        trace.push(lambda);
        if residual <= opts.fp_tol {
            status = PcStatus::Converged;
            break;
        }
    }

    Ok(DinkelbachOutcome {
        p: best.clone(),
        energy_efficiency: ctx.energy_efficiency(&best),
        lambda_trace: trace,
        status,
    })
}

/// Search for transmit powers meeting every minimum-rate requirement.
///
/// Thin wrapper around [`best_effort_margins`]: returns the point it found
/// when the worst margin is nonnegative, `None` otherwise.
pub fn feasibility_check(ctx: &PcContext) -> Option<DVector<f64>> {
    let (p, margin) = best_effort_margins(ctx);
    (margin >= 0.0).then_some(p)
}

/// Push the worst rate margin as high as the power box allows.
///
/// Cheap candidates (uniform levels, and a coarse grid when the link count
/// is small) are tried first; if none meets every floor, a max-min margin
/// optimization is run from the most promising seed. Returns the best
/// powers found together with their true worst margin, which is negative
/// exactly when no feasible point turned up. The search stops at the first
/// feasible point rather than maximizing further, so the returned margin is
/// a lower bound on the achievable one.
pub fn best_effort_margins(ctx: &PcContext) -> (DVector<f64>, f64) {
    let links = ctx.num_links();
    if ctx.r_min.iter().all(|&r| r <= 0.0) {
        let p = DVector::from_element(links, ctx.p_max);
        let margin = ctx.worst_margin(&p);
        return (p, margin);
    }

    let mut seeds: Vec<DVector<f64>> = vec![
        DVector::from_element(links, ctx.p_max),
        DVector::from_element(links, 0.5 * ctx.p_max),
        DVector::from_element(links, 0.1 * ctx.p_max),
        DVector::from_element(links, 0.01 * ctx.p_max),
    ];
    if links <= 4 {
        let levels: Vec<f64> = (0..9).map(|k| ctx.p_max * k as f64 / 8.0).collect();
        let combos = 9usize.pow(links as u32);
        for code in 0..combos {
            let mut c = code;
            let mut p = DVector::zeros(links);
            for i in 0..links {
                p[i] = levels[c % 9];
                c /= 9;
            }
            seeds.push(p);
        }
    }

    let mut best_seed: Option<(f64, DVector<f64>)> = None;
    for seed in seeds {
        let margin = ctx.worst_margin(&seed);
        if margin >= 0.0 {
            return (seed, margin);
        }
        if best_seed.as_ref().is_none_or(|(m, _)| margin > *m) {
            best_seed = Some((margin, seed));
        }
    }
    let (mut best_margin, mut p) = best_seed.expect("at least one seed");
    let mut best_point = p.clone();

    // Max-min margin ascent: maximize s subject to the linearized margins
    // exceeding s, re-linearizing at each accepted iterate.
    let interior = 1e-9 * ctx.p_max;
    for _ in 0..15 {
        let rows: Vec<RateRow> = (0..links)
            .filter(|&l| ctx.r_min[l] > 0.0)
            .map(|l| RateRow::at(ctx, l, &p, ctx.r_min[l]))
            .collect();
        let clamped = DVector::from_iterator(
            links,
            p.iter().map(|&v| v.clamp(interior, ctx.p_max - interior)),
        );
        let row_worst = |q: &DVector<f64>| -> f64 {
            rows.iter()
                .map(|row| ctx.total_at(q, row.link).ln() / LN2 - row.slope.dot(q) - row.offset)
                .fold(f64::INFINITY, f64::min)
        };
        let start_margin = row_worst(&clamped);
        let barrier = Barrier {
            ctx,
            w_log: 0.0,
            lin: DVector::zeros(links),
            rows,
            epigraph: true,
            s_cap: start_margin.abs() + 100.0,
        };
        let mut x0 = DVector::zeros(links + 1);
        x0.rows_mut(0, links).copy_from(&clamped);
        x0[links] = start_margin - 1.0;
        if !barrier.in_domain(&x0) {
            break;
        }
        let (x, _) = barrier.solve(x0, |x| {
            ctx.worst_margin(&x.rows(0, links).into_owned()) >= 1e-7
        });
        let next = x.rows(0, links).into_owned();
        let next_margin = ctx.worst_margin(&next);
        if next_margin > best_margin {
            best_margin = next_margin;
            best_point = next.clone();
        }
        if next_margin >= 0.0 {
            return (next, next_margin);
        }
        // No true-margin success yet; continue only while the ascent keeps
        // making progress.
        if next_margin <= ctx.worst_margin(&p) + 1e-12 {
            break;
        }
        p = next;
    }
    (best_point, best_margin)
}
