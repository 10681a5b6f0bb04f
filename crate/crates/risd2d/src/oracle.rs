//! Brute-force reference optimizers for small instances.
//!
//! Nothing here scales: the searches are exponential in the element count or
//! the link count and exist so tests can compare the production solvers
//! against answers obtained with no cleverness at all. Size guards keep the
//! search spaces enumerable.

use nalgebra::DVector;

use crate::netmodel::ChannelRealization;
use crate::power_control::PcContext;
use crate::system::{self, PhaseConfig, PowerAlloc};

/// Result of a dense grid search over the power box.
#[derive(Debug, Clone)]
pub struct GridSearchResult {
    pub p: DVector<f64>,
    pub energy_efficiency: f64,
}

/// Evaluate energy efficiency on a regular grid over the power box,
/// honoring the minimum-rate floors, and return the best grid point.
///
/// The grid includes both endpoints, so zero and full power are always
/// candidates. Points violating a rate floor are skipped; `None` means no
/// grid point was feasible. Ties keep the first point in odometer order,
/// which makes the result deterministic.
pub fn grid_power_search(ctx: &PcContext, points_per_dim: usize) -> Option<GridSearchResult> {
    let links = ctx.num_links();
    assert!(links <= 4, "grid search is exponential in the link count");
    assert!(points_per_dim >= 2);

    let levels: Vec<f64> = (0..points_per_dim)
        .map(|k| ctx.p_max * k as f64 / (points_per_dim - 1) as f64)
        .collect();
    let mut best: Option<GridSearchResult> = None;
    let combos = points_per_dim.pow(links as u32);
    let mut p = DVector::zeros(links);
    for code in 0..combos {
        let mut c = code;
        for i in 0..links {
            p[i] = levels[c % points_per_dim];
            c /= points_per_dim;
        }
        if ctx.worst_margin(&p) < 0.0 {
            continue;
        }
        let ee = ctx.energy_efficiency(&p);
        if best.as_ref().is_none_or(|b| ee > b.energy_efficiency) {
            best = Some(GridSearchResult {
                p: p.clone(),
                energy_efficiency: ee,
            });
        }
    }
    best
}

/// Call `visit` with every phase vector from the `bits`-bit codebook
/// `{0, delta, ..., (2^bits - 1) delta}`, `delta = 2 pi / 2^bits`, in
/// odometer order over `n` elements.
pub fn enumerate_quantized_phases(n: usize, bits: u32, mut visit: impl FnMut(&[f64])) {
    assert!(
        n as u32 * bits <= 20,
        "enumeration would cover 2^{} configurations",
        n as u32 * bits
    );
    let levels = 1usize << bits;
    let delta = std::f64::consts::TAU / levels as f64;
    let combos = levels.pow(n as u32);
    let mut phases = vec![0.0; n];
    for code in 0..combos {
        let mut c = code;
        for ph in phases.iter_mut() {
            *ph = (c % levels) as f64 * delta;
            c /= levels;
        }
        visit(&phases);
    }
}

/// The sum-rate-optimal quantized reflection state at fixed powers, found
/// by trying every configuration of the `bits`-bit codebook.
pub fn exhaustive_phase_search(
    chan: &ChannelRealization,
    p: &PowerAlloc,
    eta: f64,
    noise_power: f64,
    bits: u32,
) -> (PhaseConfig, f64) {
    let n = chan.num_elements();
    let mut best_phases = vec![0.0; n];
    let mut best_rate = f64::NEG_INFINITY;
    enumerate_quantized_phases(n, bits, |phases| {
        let cfg = PhaseConfig {
            phases: phases.to_vec(),
            eta,
        };
        let gains = system::effective_gains(chan, &cfg).expect("dimensions match");
        let rate = system::sum_rate_from_gains(&gains, p, noise_power);
        if rate > best_rate {
            best_rate = rate;
            best_phases.copy_from_slice(phases);
        }
    });
    (
        PhaseConfig {
            phases: best_phases,
            eta,
        },
        best_rate,
    )
}
