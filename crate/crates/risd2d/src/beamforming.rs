//! Reflection-phase optimization for the passive surfaces.
//!
//! For fixed transmit powers the sum rate is a ratio-heavy function of the
//! reflection phases. This module chains three reformulations to make it
//! tractable:
//!
//! 1. a Lagrangian dual transform that pulls the per-link SINR out of the
//!    logarithm, introducing one nonnegative weight per link;
//! 2. a quadratic transform that linearizes each remaining ratio around a
//!    complex auxiliary variable, leaving a concave quadratic in the phase
//!    vector;
//! 3. a semidefinite lift of that unit-modulus quadratic program, solved by
//!    [`crate::sdp`] and rounded back to unit-modulus phases by Gaussian
//!    randomization.
//!
//! Both auxiliary updates are closed-form maximizers, and a rounded phase
//! vector is only accepted when it does not lower the sum rate or break a
//! minimum-rate requirement, so the per-round trace reported by
//! [`optimize_phases`] is non-decreasing by construction. When the
//! minimum-rate floors are themselves unreachable at the current phases,
//! [`raise_worst_margin`] points the same relaxation at the worst rate
//! margin instead of the sum rate.
//!
//! Throughout, the optimization variable is `t` with `t[n] =
//! exp(-j*phi_n)`, so that `t^H x` applies the phase shifts `exp(j*phi_n)`
//! to a cascade vector `x`. [`theta_from_phases`] and [`phases_from_theta`]
//! convert between the two views.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::netmodel::ChannelRealization;
use crate::sdp::{
    self, ConstraintSense, SdpConstraint, SdpOptions, SdpProblem, SdpStatus,
};
use crate::system::{PhaseConfig, PowerAlloc, SystemParams};

#[derive(Debug, Error)]
pub enum BeamformingError {
    #[error("{0}")]
    Dimension(String),
    #[error("relaxation solve failed: {0}")]
    Sdp(#[from] sdp::SdpError),
}

/// Sum-rate curvature targets: the SINR each link must reach to sustain its
/// minimum rate, `2^r - 1` per link.
pub fn sinr_targets(r_min: &[f64]) -> Vec<f64> {
    r_min.iter().map(|r| 2f64.powf(*r) - 1.0).collect()
}

/// Power-weighted channel data with the phase dependence factored out.
///
/// For transmitter `i` and receiver `l`, the received amplitude is
/// `b(i, l) + t^H a(i, l)`: `b` collects the direct path and `a` the
/// per-element cascade through the surfaces, both scaled by the square root
/// of the transmit power so that squared magnitudes are received powers.
#[derive(Debug, Clone)]
pub struct LinkData {
    /// `a[i][l]`, one cascade vector per (transmitter, receiver) pair.
    a: Vec<Vec<DVector<Complex64>>>,
    /// `b[i][l]`, the scaled direct amplitudes.
    b: Vec<Vec<Complex64>>,
    noise_power: f64,
}

impl LinkData {
    pub fn new(
        chan: &ChannelRealization,
        p: &PowerAlloc,
        eta: f64,
        noise_power: f64,
    ) -> Result<LinkData, BeamformingError> {
        let links = chan.num_links();
        let n = chan.num_elements();
        if p.num_links() != links {
            return Err(BeamformingError::Dimension(format!(
                "{} transmit powers for {} links",
                p.num_links(),
                links
            )));
        }
        let amp = eta.sqrt();
        let mut a = Vec::with_capacity(links);
        let mut b = Vec::with_capacity(links);
        for i in 0..links {
            let sqrt_p = p.p[i].sqrt();
            let mut a_row = Vec::with_capacity(links);
            let mut b_row = Vec::with_capacity(links);
            for l in 0..links {
                let mut cascade = DVector::zeros(n);
                for e in 0..n {
                    cascade[e] = chan.tx_ris[(e, i)] * chan.ris_rx[(e, l)];
                }
                a_row.push(cascade * Complex64::new(amp * sqrt_p, 0.0));
                b_row.push(chan.direct[(i, l)] * Complex64::new(sqrt_p, 0.0));
            }
            a.push(a_row);
            b.push(b_row);
        }
        Ok(LinkData { a, b, noise_power })
    }

    pub fn num_links(&self) -> usize {
        self.b.len()
    }

    pub fn num_elements(&self) -> usize {
        self.a.first().map_or(0, |row| row[0].len())
    }

    pub fn noise_power(&self) -> f64 {
        self.noise_power
    }

    pub fn a(&self, i: usize, l: usize) -> &DVector<Complex64> {
        &self.a[i][l]
    }

    pub fn b(&self, i: usize, l: usize) -> Complex64 {
        self.b[i][l]
    }

    /// Received amplitude `b(i, l) + t^H a(i, l)`.
    pub fn effective(&self, theta: &DVector<Complex64>, i: usize, l: usize) -> Complex64 {
        self.b[i][l] + self.a[i][l].dotc(theta).conj()
    }

    /// Total received power at receiver `l` including noise:
    /// `sum_i |b(i,l) + t^H a(i,l)|^2 + noise`.
    pub fn total_power_at(&self, theta: &DVector<Complex64>, l: usize) -> f64 {
        let links = self.num_links();
        (0..links)
            .map(|i| self.effective(theta, i, l).norm_sqr())
            .sum::<f64>()
            + self.noise_power
    }

    pub fn sinr(&self, theta: &DVector<Complex64>, l: usize) -> f64 {
        let signal = self.effective(theta, l, l).norm_sqr();
        let denom = self.total_power_at(theta, l) - signal;
        signal / denom
    }

    pub fn sum_rate(&self, theta: &DVector<Complex64>) -> f64 {
        (0..self.num_links())
            .map(|l| (1.0 + self.sinr(theta, l)).log2())
            .sum()
    }

    /// Smallest `sinr_l - target_l` over all links.
    pub fn worst_sinr_margin(&self, theta: &DVector<Complex64>, targets: &[f64]) -> f64 {
        (0..self.num_links())
            .map(|l| self.sinr(theta, l) - targets[l])
            .fold(f64::INFINITY, f64::min)
    }

    /// Smallest `log2(1 + sinr_l) - r_min_l` over all links: the quantity
    /// that must reach zero for the rate floors to hold.
    pub fn worst_rate_margin(&self, theta: &DVector<Complex64>, r_min: &[f64]) -> f64 {
        (0..self.num_links())
            .map(|l| (1.0 + self.sinr(theta, l)).log2() - r_min[l])
            .fold(f64::INFINITY, f64::min)
    }
}

/// `t[n] = exp(-j*phi_n)`.
pub fn theta_from_phases(phases: &[f64]) -> DVector<Complex64> {
    DVector::from_iterator(
        phases.len(),
        phases.iter().map(|&phi| Complex64::from_polar(1.0, -phi)),
    )
}

/// Inverse of [`theta_from_phases`], normalized into `[0, 2*pi)`.
pub fn phases_from_theta(theta: &DVector<Complex64>) -> Vec<f64> {
    theta
        .iter()
        .map(|t| {
            let phi = -t.arg();
            phi.rem_euclid(std::f64::consts::TAU)
        })
        .collect()
}

/// Per-link SINR at the current phases; the weight vector that makes the
/// dual-transformed objective coincide with the sum rate.
pub fn update_beta(link: &LinkData, theta: &DVector<Complex64>) -> Vec<f64> {
    (0..link.num_links()).map(|l| link.sinr(theta, l)).collect()
}

/// Dual-transformed sum-rate surrogate.
///
/// For fixed weights `beta` this is, up to the `1/ln 2` factor, a sum of
/// `ln(1 + beta_l) - beta_l` terms plus weighted received-signal fractions;
/// maximizing over `beta` recovers the sum rate exactly.
pub fn lagrangian_objective(link: &LinkData, theta: &DVector<Complex64>, beta: &[f64]) -> f64 {
    let mut acc = 0.0;
    for l in 0..link.num_links() {
        let signal = link.effective(theta, l, l).norm_sqr();
        let fraction = signal / link.total_power_at(theta, l);
        acc += (1.0 + beta[l]).ln() - beta[l] + (1.0 + beta[l]) * fraction;
    }
    acc / std::f64::consts::LN_2
}

/// Ratio part of the surrogate (without the `1/ln 2` factor or the
/// weight-only terms): `sum_l (1 + beta_l) * signal_l / total_l`.
pub fn ratio_objective(link: &LinkData, theta: &DVector<Complex64>, beta: &[f64]) -> f64 {
    (0..link.num_links())
        .map(|l| {
            let signal = link.effective(theta, l, l).norm_sqr();
            (1.0 + beta[l]) * signal / link.total_power_at(theta, l)
        })
        .sum()
}

/// Closed-form maximizers of the quadratic transform, one per link.
pub fn update_eps(
    link: &LinkData,
    theta: &DVector<Complex64>,
    beta: &[f64],
) -> Vec<Complex64> {
    (0..link.num_links())
        .map(|l| {
            let signal = link.effective(theta, l, l);
            signal * (1.0 + beta[l]).sqrt() / link.total_power_at(theta, l)
        })
        .collect()
}

/// Quadratic-transformed surrogate at arbitrary auxiliaries `eps`.
///
/// Equals [`ratio_objective`] when `eps` comes from [`update_eps`], and is
/// smaller otherwise: the gap is exactly
/// `sum_l total_l * |eps_l - eps_l^opt|^2`.
pub fn quadratic_objective(
    link: &LinkData,
    theta: &DVector<Complex64>,
    beta: &[f64],
    eps: &[Complex64],
) -> f64 {
    let mut acc = 0.0;
    for l in 0..link.num_links() {
        let signal = link.effective(theta, l, l);
        let total = link.total_power_at(theta, l);
        acc += 2.0 * (1.0 + beta[l]).sqrt() * (eps[l].conj() * signal).re
            - eps[l].norm_sqr() * total;
    }
    acc
}

/// The quadratic surrogate collected into matrix form:
/// `value(t) = -t^H U t + 2 Re(t^H v) + c`.
#[derive(Debug, Clone)]
pub struct QuadraticForm {
    pub u: DMatrix<Complex64>,
    pub v: DVector<Complex64>,
    pub c: f64,
}

impl QuadraticForm {
    pub fn value(&self, theta: &DVector<Complex64>) -> f64 {
        let quad = (theta.adjoint() * &self.u * theta)[(0, 0)].re;
        let lin = theta.dotc(&self.v).re;
        -quad + 2.0 * lin + self.c
    }
}

/// Collect [`quadratic_objective`] into an explicit quadratic in `t`.
pub fn build_quadratic_form(link: &LinkData, beta: &[f64], eps: &[Complex64]) -> QuadraticForm {
    let n = link.num_elements();
    let links = link.num_links();
    let mut u = DMatrix::<Complex64>::zeros(n, n);
    let mut v = DVector::<Complex64>::zeros(n);
    let mut c = 0.0;
    for l in 0..links {
        let weight = eps[l].norm_sqr();
        let root = (1.0 + beta[l]).sqrt();
        for i in 0..links {
            let a = link.a(i, l);
            u += a * a.adjoint() * Complex64::new(weight, 0.0);
            v -= a * (link.b(i, l).conj() * weight);
            c -= weight * link.b(i, l).norm_sqr();
        }
        v += link.a(l, l) * (eps[l].conj() * root);
        c += 2.0 * root * (eps[l].conj() * link.b(l, l)).re - weight * link.noise_power;
    }
    QuadraticForm { u, v, c }
}

/// `[t; 1]`, the homogenized phase vector the lift works with.
pub fn lift_theta(theta: &DVector<Complex64>) -> DVector<Complex64> {
    let n = theta.len();
    let mut out = DVector::zeros(n + 1);
    out.rows_mut(0, n).copy_from(theta);
    out[n] = Complex64::new(1.0, 0.0);
    out
}

/// Homogenized objective: `Tr(lift_objective * qq^H) = value(t) - c` for
/// `q = [t; 1]`.
pub fn lift_objective(qf: &QuadraticForm) -> DMatrix<Complex64> {
    let n = qf.v.len();
    let mut m = DMatrix::zeros(n + 1, n + 1);
    m.view_mut((0, 0), (n, n)).copy_from(&(-&qf.u));
    for k in 0..n {
        m[(k, n)] = qf.v[k];
        m[(n, k)] = qf.v[k].conj();
    }
    m
}

/// Homogenized received-power matrix for the pair `(i, l)`:
/// `Tr(R qq^H) + |b(i,l)|^2 = |b(i,l) + t^H a(i,l)|^2` for `q = [t; 1]`.
pub fn lift_link_matrix(link: &LinkData, i: usize, l: usize) -> DMatrix<Complex64> {
    let n = link.num_elements();
    let a = link.a(i, l);
    let b = link.b(i, l);
    let mut m = DMatrix::zeros(n + 1, n + 1);
    m.view_mut((0, 0), (n, n)).copy_from(&(a * a.adjoint()));
    for k in 0..n {
        m[(k, n)] = a[k] * b.conj();
        m[(n, k)] = b * a[k].conj();
    }
    m
}

/// Assemble the semidefinite relaxation of maximizing the quadratic
/// surrogate over unit-modulus phases, with a received-SINR floor per link
/// whose target is positive.
pub fn build_sdr(link: &LinkData, qf: &QuadraticForm, targets: &[f64]) -> SdpProblem {
    let links = link.num_links();
    let mut constraints = Vec::new();
    for l in 0..links {
        let gamma = targets[l];
        if gamma <= 0.0 {
            continue;
        }
        let dim = link.num_elements() + 1;
        let mut m = DMatrix::<Complex64>::zeros(dim, dim);
        let mut rhs = link.b(l, l).norm_sqr() - gamma * link.noise_power;
        for i in 0..links {
            if i == l {
                m -= lift_link_matrix(link, l, l);
            } else {
                m += lift_link_matrix(link, i, l) * Complex64::new(gamma, 0.0);
                rhs -= gamma * link.b(i, l).norm_sqr();
            }
        }
        constraints.push(SdpConstraint {
            matrix: m,
            sense: ConstraintSense::Le,
            rhs,
        });
    }
    SdpProblem {
        objective: lift_objective(qf),
        constraints,
        diag_one: true,
    }
}

fn unit(z: Complex64) -> Complex64 {
    let n = z.norm();
    if n > 0.0 {
        z / n
    } else {
        Complex64::new(1.0, 0.0)
    }
}

/// Unit-modulus candidates read off a relaxation solution: the element-wise
/// phases of the leading eigenvector (always first), then `samples` Gaussian
/// draws shaped by `q`, each referenced to its homogenizing entry.
fn randomization_candidates<R: Rng>(
    q: &DMatrix<Complex64>,
    samples: usize,
    rng: &mut R,
) -> Vec<DVector<Complex64>> {
    let dim = q.nrows();
    let n = dim - 1;
    let sym = (q + q.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = sym.symmetric_eigen();

    let mut candidates: Vec<DVector<Complex64>> = Vec::with_capacity(samples + 1);

    let lead = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, _)| k)
        .expect("nonempty spectrum");
    let v = eig.eigenvectors.column(lead);
    let reference = if v[n].norm() > 1e-12 {
        v[n]
    } else {
        Complex64::new(1.0, 0.0)
    };
    candidates.push(DVector::from_iterator(
        n,
        (0..n).map(|k| unit(v[k] * reference.conj())),
    ));

    if samples > 0 {
        let root = {
            let scaled = DVector::from_iterator(
                dim,
                eig.eigenvalues
                    .iter()
                    .map(|&l| Complex64::new(l.max(0.0).sqrt(), 0.0)),
            );
            &eig.eigenvectors * DMatrix::from_diagonal(&scaled) * eig.eigenvectors.adjoint()
        };
        for _ in 0..samples {
            let draw = DVector::from_iterator(
                dim,
                (0..dim).map(|_| {
                    Complex64::new(
                        rng.sample::<f64, _>(StandardNormal),
                        rng.sample::<f64, _>(StandardNormal),
                    )
                }),
            );
            let r = &root * draw;
            candidates.push(DVector::from_iterator(
                n,
                (0..n).map(|k| unit(r[k] * r[n].conj())),
            ));
        }
    }

    candidates
}

/// Round a relaxation solution back to unit-modulus phases.
///
/// Candidates are the element-wise phases of the leading eigenvector plus
/// `samples` Gaussian draws shaped by `q`; each candidate is kept only if
/// every link still meets its SINR target, and the best feasible candidate
/// under the quadratic surrogate wins. Returns `None` when no candidate is
/// feasible. A rank-one `q` built from a feasible phase vector is always
/// recovered exactly via its eigenvector.
pub fn gaussian_randomization<R: Rng>(
    link: &LinkData,
    qf: &QuadraticForm,
    targets: &[f64],
    q: &DMatrix<Complex64>,
    samples: usize,
    rng: &mut R,
) -> Option<(DVector<Complex64>, f64)> {
    let mut best: Option<(DVector<Complex64>, f64)> = None;
    for cand in randomization_candidates(q, samples, rng) {
        let feasible = (0..link.num_links()).all(|l| {
            targets[l] <= 0.0
                || link.sinr(&cand, l) >= targets[l] - 1e-9 * (1.0 + targets[l])
        });
        if !feasible {
            continue;
        }
        let value = qf.value(&cand);
        if best.as_ref().is_none_or(|(_, b)| value > *b) {
            best = Some((cand, value));
        }
    }
    best
}

/// Round a relaxation solution to the candidate with the largest worst-link
/// rate margin, regardless of the surrogate value.
///
/// The same candidate pool as [`gaussian_randomization`], but nothing is
/// filtered out: when every candidate still violates some floor, the least
/// bad one is returned with its (negative) margin.
pub fn margin_randomization<R: Rng>(
    link: &LinkData,
    r_min: &[f64],
    q: &DMatrix<Complex64>,
    samples: usize,
    rng: &mut R,
) -> (DVector<Complex64>, f64) {
    randomization_candidates(q, samples, rng)
        .into_iter()
        .map(|cand| {
            let margin = link.worst_rate_margin(&cand, r_min);
            (cand, margin)
        })
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("at least the eigenvector candidate")
}

#[derive(Debug, Clone)]
pub struct PhaseOpts {
    /// Outer rounds of (weights, auxiliaries, relaxation, rounding).
    pub rounds: usize,
    /// Relative sum-rate improvement below which the loop stops.
    pub tol: f64,
    pub randomization_samples: usize,
    pub sdp: SdpOptions,
}

impl Default for PhaseOpts {
    fn default() -> Self {
        PhaseOpts {
            rounds: 15,
            tol: 1e-4,
            randomization_samples: 200,
            sdp: SdpOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PhaseOutcome {
    pub config: PhaseConfig,
    /// Sum rate after each accepted update; the first entry is the sum rate
    /// of the initial phases. Non-decreasing.
    pub trace: Vec<f64>,
    pub accepted_rounds: usize,
}

/// Improve the reflection phases at fixed transmit powers.
///
/// Runs rounds of closed-form auxiliary updates followed by a semidefinite
/// relaxation and Gaussian rounding. A candidate is adopted only when it
/// does not lower the sum rate and does not worsen the worst SINR-target
/// margin, so the reported trace is non-decreasing. Rounds where the
/// relaxation fails to solve or rounding finds no feasible candidate leave
/// the phases untouched and stop the loop.
pub fn optimize_phases<R: Rng>(
    chan: &ChannelRealization,
    p: &PowerAlloc,
    params: &SystemParams,
    init: &PhaseConfig,
    opts: &PhaseOpts,
    rng: &mut R,
) -> Result<PhaseOutcome, BeamformingError> {
    let n = chan.num_elements();
    if init.num_elements() != n {
        return Err(BeamformingError::Dimension(format!(
            "{} initial phases for {} elements",
            init.num_elements(),
            n
        )));
    }
    if params.r_min.len() != chan.num_links() {
        return Err(BeamformingError::Dimension(format!(
            "{} rate floors for {} links",
            params.r_min.len(),
            chan.num_links()
        )));
    }
    let link = LinkData::new(chan, p, init.eta, params.noise_power)?;
    let targets = sinr_targets(&params.r_min);
    let mut theta = theta_from_phases(&init.phases);
    let mut rate = link.sum_rate(&theta);
    let mut trace = vec![rate];
    let mut accepted = 0usize;

    if n > 0 {
        for _ in 0..opts.rounds {
            let beta = update_beta(&link, &theta);
            let eps = update_eps(&link, &theta, &beta);
            let qf = build_quadratic_form(&link, &beta, &eps);
            let problem = build_sdr(&link, &qf, &targets);
            let sol = sdp::solve(&problem, &opts.sdp)?;
            if sol.status != SdpStatus::Optimal {
                break;
            }
            let Some((cand, _)) = gaussian_randomization(
                &link,
                &qf,
                &targets,
                &sol.q,
                opts.randomization_samples,
                rng,
            ) else {
                break;
            };
            let cand_rate = link.sum_rate(&cand);
            let margin_floor = link.worst_sinr_margin(&theta, &targets).min(0.0);
            if cand_rate < rate || link.worst_sinr_margin(&cand, &targets) < margin_floor {
                break;
            }
            let gain = cand_rate - rate;
            theta = cand;
            rate = cand_rate;
            accepted += 1;
            trace.push(rate);
            if gain < opts.tol * (1.0 + rate.abs()) {
                break;
            }
        }
    }

    Ok(PhaseOutcome {
        config: PhaseConfig {
            phases: phases_from_theta(&theta),
            eta: init.eta,
        },
        trace,
        accepted_rounds: accepted,
    })
}

/// One relaxation round aimed at the rate floors instead of the sum rate.
///
/// Useful when no transmit powers can meet the floors at the current
/// phases: power control has no further lever there, but re-aiming the
/// surfaces can. Every floored link gets a hard received-SINR constraint at
/// a demanded rate — its floor for links already satisfied (so surplus can
/// be traded away, never the floor itself), and as much of the shortfall as
/// the relaxation will bear for links in violation. The demanded lift
/// starts at full repair plus headroom for the later rounding and is scaled
/// back geometrically while the relaxation reports infeasible. Links short
/// of their floor also keep their surrogate terms, concentrating the
/// objective on exactly the rates that need raising. Rounding picks the
/// candidate with the best worst-link rate margin at the given powers.
/// Returns the new phases when that margin improves on the current one,
/// `None` when there are no elements, no demand level is within reach, or
/// no candidate is better.
pub fn raise_worst_margin<R: Rng>(
    chan: &ChannelRealization,
    p: &PowerAlloc,
    params: &SystemParams,
    phase: &PhaseConfig,
    opts: &PhaseOpts,
    rng: &mut R,
) -> Result<Option<PhaseConfig>, BeamformingError> {
    let n = chan.num_elements();
    if phase.num_elements() != n {
        return Err(BeamformingError::Dimension(format!(
            "{} phases for {} elements",
            phase.num_elements(),
            n
        )));
    }
    if params.r_min.len() != chan.num_links() {
        return Err(BeamformingError::Dimension(format!(
            "{} rate floors for {} links",
            params.r_min.len(),
            chan.num_links()
        )));
    }
    if n == 0 {
        return Ok(None);
    }
    let link = LinkData::new(chan, p, phase.eta, params.noise_power)?;
    let theta = theta_from_phases(&phase.phases);
    let margin = link.worst_rate_margin(&theta, &params.r_min);

    // The dual weights equal the per-link SINRs, so the rates each link
    // currently achieves come straight from them.
    let beta = update_beta(&link, &theta);
    let eps_full = update_eps(&link, &theta, &beta);
    let rates: Vec<f64> = beta.iter().map(|b| (1.0 + b).log2()).collect();

    // Ask for a little more than the floors, scaled with the square of the
    // per-element rounding error, so the candidate still clears them after
    // its phases snap to the hardware grid.
    let step = std::f64::consts::PI / f64::from(1u32 << params.resolution_bits);
    let headroom = 2.0 * step * step;

    let mut best: Option<(DVector<Complex64>, f64)> = None;
    let mut lift = -margin + headroom;
    for _ in 0..3 {
        let mut eps = eps_full.clone();
        let mut targets = Vec::with_capacity(link.num_links());
        for l in 0..link.num_links() {
            let floor = params.r_min[l];
            if floor <= 0.0 || rates[l] >= floor {
                eps[l] = Complex64::new(0.0, 0.0);
            }
            if floor <= 0.0 {
                targets.push(0.0);
                continue;
            }
            let demanded = (floor + headroom).min(rates[l] + lift);
            targets.push((2f64.powf(demanded) - 1.0) * (1.0 - 1e-9));
        }
        let qf = build_quadratic_form(&link, &beta, &eps);
        let problem = build_sdr(&link, &qf, &targets);
        let sol = sdp::solve(&problem, &opts.sdp)?;
        if sol.status == SdpStatus::Optimal {
            let (cand, cand_margin) = margin_randomization(
                &link,
                &params.r_min,
                &sol.q,
                opts.randomization_samples,
                rng,
            );
            if best.as_ref().is_none_or(|(_, m)| cand_margin > *m) {
                let done = cand_margin >= headroom;
                best = Some((cand, cand_margin));
                if done {
                    break;
                }
            }
        }
        lift /= 4.0;
    }
    match best {
        Some((cand, m)) if m > margin => Ok(Some(PhaseConfig {
            phases: phases_from_theta(&cand),
            eta: phase.eta,
        })),
        _ => Ok(None),
    }
}
