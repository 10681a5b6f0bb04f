//! SINR, rate, power, and energy-efficiency bookkeeping.
//!
//! With transmit powers `p_i`, reflection amplitude `sqrt(eta)` and phase
//! shifts `phi_n`, the effective channel from tx `i` to rx `l` is
//!
//! ```text
//! hhat_il = h_il + sqrt(eta) * sum_n e^{j phi_n} f_l[n] g_i[n]
//! ```
//!
//! where `g_i` is tx `i` → elements and `f_l` is elements → rx `l`. Link
//! `l` decodes its own transmitter against the co-channel rest:
//!
//! ```text
//! z_l = |hhat_ll|^2 p_l / (sum_{i != l} |hhat_il|^2 p_i + sigma^2)
//! R   = sum_l log2(1 + z_l)                      [bits/s/Hz]
//! P   = sum_l p_l + 2 L P_c + N P_elem           [W]
//! EE  = R / P                                    [bits/Hz/J]
//! ```

use num_complex::Complex64;
use rand::Rng;
use thiserror::Error;

use nalgebra::DMatrix;

use crate::netmodel::ChannelRealization;

#[derive(Debug, Error)]
pub enum SystemError {
    #[error("{0}")]
    Dimension(String),
    #[error("link index {0} out of range for {1} links")]
    LinkIndex(usize, usize),
}

/// Power in watts for a level expressed in dBm.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Level in dBm for a power in watts.
pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

/// Per-element static power draw in watts for a phase-resolution bit width,
/// for the widths with a tabulated value.
pub fn element_power_for_bits(bits: u32) -> Option<f64> {
    match bits {
        3 => Some(1.5e-3),
        4 => Some(4.5e-3),
        5 => Some(6.0e-3),
        6 => Some(7.8e-3),
        _ => None,
    }
}

/// Reflection phase shifts plus the common amplitude efficiency.
#[derive(Debug, Clone)]
pub struct PhaseConfig {
    /// One phase in radians per reflecting element.
    pub phases: Vec<f64>,
    /// Amplitude reflection efficiency eta in (0, 1].
    pub eta: f64,
}

impl PhaseConfig {
    pub fn zeros(n: usize, eta: f64) -> Self {
        PhaseConfig {
            phases: vec![0.0; n],
            eta,
        }
    }

    /// Phases drawn i.i.d. uniform over [0, 2*pi).
    pub fn random<R: Rng + ?Sized>(n: usize, eta: f64, rng: &mut R) -> Self {
        PhaseConfig {
            phases: (0..n)
                .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
                .collect(),
            eta,
        }
    }

    pub fn num_elements(&self) -> usize {
        self.phases.len()
    }

    /// Round every phase to the nearest point of the `bits`-bit codebook
    /// `{0, delta, 2 delta, ...}` with `delta = 2 pi / 2^bits`.
    pub fn quantized(&self, bits: u32) -> PhaseConfig {
        let levels = (1u64 << bits) as f64;
        let delta = std::f64::consts::TAU / levels;
        PhaseConfig {
            phases: self
                .phases
                .iter()
                .map(|&ph| (ph / delta).round().rem_euclid(levels) * delta)
                .collect(),
            eta: self.eta,
        }
    }
}

/// Transmit power per link, watts.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerAlloc {
    pub p: Vec<f64>,
}

impl PowerAlloc {
    pub fn uniform(links: usize, value: f64) -> Self {
        PowerAlloc {
            p: vec![value; links],
        }
    }

    pub fn zeros(links: usize) -> Self {
        Self::uniform(links, 0.0)
    }

    pub fn num_links(&self) -> usize {
        self.p.len()
    }

    pub fn total(&self) -> f64 {
        self.p.iter().sum()
    }
}

/// Static network parameters: noise, power model, and per-link QoS floors.
#[derive(Debug, Clone)]
pub struct SystemParams {
    /// Receiver noise power sigma^2, watts.
    pub noise_power: f64,
    /// Circuit power per device, watts; each link has a tx and an rx.
    pub circuit_power: f64,
    /// Static power per reflecting element, watts.
    pub element_power: f64,
    /// Phase-resolution bit width the element power corresponds to.
    pub resolution_bits: u32,
    /// Per-link transmit power cap, watts.
    pub p_max: f64,
    /// Per-link minimum rate, bits/s/Hz; 0 disables the floor.
    pub r_min: Vec<f64>,
}

impl SystemParams {
    /// Defaults: sigma^2 = -117 dBm, P_c = 15 dBm, 3-bit elements,
    /// P_max = 0.1 W, no rate floors.
    pub fn new(links: usize) -> Self {
        SystemParams {
            noise_power: dbm_to_watts(-117.0),
            circuit_power: dbm_to_watts(15.0),
            element_power: element_power_for_bits(3).unwrap(),
            resolution_bits: 3,
            p_max: 0.1,
            r_min: vec![0.0; links],
        }
    }

    pub fn with_bits(mut self, bits: u32) -> Self {
        self.resolution_bits = bits;
        if let Some(w) = element_power_for_bits(bits) {
            self.element_power = w;
        }
        self
    }

    pub fn with_r_min(mut self, r_min: Vec<f64>) -> Self {
        self.r_min = r_min;
        self
    }

    pub fn with_p_max(mut self, p_max: f64) -> Self {
        self.p_max = p_max;
        self
    }
}

fn check_dims(chan: &ChannelRealization, phase: &PhaseConfig) -> Result<(), SystemError> {
    if phase.num_elements() != chan.num_elements() {
        return Err(SystemError::Dimension(format!(
            "{} phases for {} elements",
            phase.num_elements(),
            chan.num_elements()
        )));
    }
    Ok(())
}

/// Effective channel tx `i` → rx `l` under the given reflection state.
pub fn effective_channel(
    chan: &ChannelRealization,
    phase: &PhaseConfig,
    i: usize,
    l: usize,
) -> Result<Complex64, SystemError> {
    check_dims(chan, phase)?;
    let links = chan.num_links();
    if i >= links || l >= links {
        return Err(SystemError::LinkIndex(i.max(l), links));
    }
    let mut reflected = Complex64::new(0.0, 0.0);
    for n in 0..chan.num_elements() {
        reflected += Complex64::from_polar(1.0, phase.phases[n])
            * chan.ris_rx[(n, l)]
            * chan.tx_ris[(n, i)];
    }
    Ok(chan.direct[(i, l)] + phase.eta.sqrt() * reflected)
}

/// All L x L effective channels; entry `(i, l)` is tx `i` → rx `l`.
pub fn effective_matrix(
    chan: &ChannelRealization,
    phase: &PhaseConfig,
) -> Result<DMatrix<Complex64>, SystemError> {
    check_dims(chan, phase)?;
    let links = chan.num_links();
    let n = chan.num_elements();
    let sqrt_eta = phase.eta.sqrt();
    let coeffs: Vec<Complex64> = phase
        .phases
        .iter()
        .map(|&ph| Complex64::from_polar(sqrt_eta, ph))
        .collect();
    let mut out = DMatrix::zeros(links, links);
    for i in 0..links {
        for l in 0..links {
            let mut reflected = Complex64::new(0.0, 0.0);
            for k in 0..n {
                reflected += coeffs[k] * chan.ris_rx[(k, l)] * chan.tx_ris[(k, i)];
            }
            out[(i, l)] = chan.direct[(i, l)] + reflected;
        }
    }
    Ok(out)
}

/// Squared magnitudes `|hhat_il|^2` of the effective channels.
pub fn effective_gains(
    chan: &ChannelRealization,
    phase: &PhaseConfig,
) -> Result<DMatrix<f64>, SystemError> {
    Ok(effective_matrix(chan, phase)?.map(|c| c.norm_sqr()))
}

/// SINR of link `l` given precomputed effective gains.
pub fn sinr_from_gains(gains: &DMatrix<f64>, p: &PowerAlloc, noise_power: f64, l: usize) -> f64 {
    let links = gains.nrows();
    let mut interference = 0.0;
    for i in 0..links {
        if i != l {
            interference += gains[(i, l)] * p.p[i];
        }
    }
    gains[(l, l)] * p.p[l] / (interference + noise_power)
}

/// SINR of link `l`.
pub fn sinr(
    chan: &ChannelRealization,
    phase: &PhaseConfig,
    p: &PowerAlloc,
    params: &SystemParams,
    l: usize,
) -> Result<f64, SystemError> {
    let links = chan.num_links();
    if l >= links {
        return Err(SystemError::LinkIndex(l, links));
    }
    let gains = effective_gains(chan, phase)?;
    Ok(sinr_from_gains(&gains, p, params.noise_power, l))
}

/// Network sum rate in bits/s/Hz given precomputed effective gains.
pub fn sum_rate_from_gains(gains: &DMatrix<f64>, p: &PowerAlloc, noise_power: f64) -> f64 {
    (0..gains.nrows())
        .map(|l| (1.0 + sinr_from_gains(gains, p, noise_power, l)).log2())
        .sum()
}

/// Network sum rate in bits/s/Hz.
pub fn sum_rate(
    chan: &ChannelRealization,
    phase: &PhaseConfig,
    p: &PowerAlloc,
    params: &SystemParams,
) -> Result<f64, SystemError> {
    let gains = effective_gains(chan, phase)?;
    Ok(sum_rate_from_gains(&gains, p, params.noise_power))
}

/// Total consumed power in watts: transmit + per-device circuit + elements.
pub fn total_power(p: &PowerAlloc, params: &SystemParams, num_elements: usize) -> f64 {
    p.total()
        + 2.0 * p.num_links() as f64 * params.circuit_power
        + num_elements as f64 * params.element_power
}

/// Energy efficiency in bits/Hz/J given precomputed effective gains.
pub fn energy_efficiency_from_gains(
    gains: &DMatrix<f64>,
    p: &PowerAlloc,
    params: &SystemParams,
    num_elements: usize,
) -> f64 {
    sum_rate_from_gains(gains, p, params.noise_power) / total_power(p, params, num_elements)
}

/// Energy efficiency in bits/Hz/J.
pub fn energy_efficiency(
    chan: &ChannelRealization,
    phase: &PhaseConfig,
    p: &PowerAlloc,
    params: &SystemParams,
) -> Result<f64, SystemError> {
    let gains = effective_gains(chan, phase)?;
    Ok(energy_efficiency_from_gains(
        &gains,
        p,
        params,
        chan.num_elements(),
    ))
}

/// Constraint margins for one operating point. Phase configurations are
/// unit-modulus by construction (angles), so only rate floors and the
/// transmit-power box are reported.
#[derive(Debug, Clone)]
pub struct FeasibilityReport {
    /// Achieved rate minus the floor, per link; >= 0 is feasible.
    pub rate_margins: Vec<f64>,
    /// min(p_l, P_max - p_l) per link; >= 0 is inside the box.
    pub power_margins: Vec<f64>,
}

impl FeasibilityReport {
    pub fn feasible(&self, tol: f64) -> bool {
        self.rate_margins.iter().all(|&m| m >= -tol)
            && self.power_margins.iter().all(|&m| m >= -tol)
    }

    pub fn worst_rate_margin(&self) -> f64 {
        self.rate_margins.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

/// Evaluate every constraint margin at `(phase, p)`.
pub fn check_feasibility(
    chan: &ChannelRealization,
    phase: &PhaseConfig,
    p: &PowerAlloc,
    params: &SystemParams,
) -> Result<FeasibilityReport, SystemError> {
    let gains = effective_gains(chan, phase)?;
    Ok(check_feasibility_from_gains(&gains, p, params))
}

/// Constraint margins from precomputed effective gains.
pub fn check_feasibility_from_gains(
    gains: &DMatrix<f64>,
    p: &PowerAlloc,
    params: &SystemParams,
) -> FeasibilityReport {
    let links = gains.nrows();
    let rate_margins = (0..links)
        .map(|l| {
            let rate = (1.0 + sinr_from_gains(gains, p, params.noise_power, l)).log2();
            rate - params.r_min.get(l).copied().unwrap_or(0.0)
        })
        .collect();
    let power_margins = p.p.iter().map(|&pl| pl.min(params.p_max - pl)).collect();
    FeasibilityReport {
        rate_margins,
        power_margins,
    }
}
