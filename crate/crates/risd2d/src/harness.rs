//! Experiment harness: configuration files, the joint optimizer, Monte
//! Carlo sweeps, and the command-line entry point.
//!
//! A sweep re-runs the same set of trials at every sweep value. Trial `t`
//! derives all of its randomness from `seed ^ t` with one fixed stream per
//! purpose (placement, fading, initial phases, rounding), so changing the
//! swept parameter never changes which network a trial sees: curves from
//! one run are paired sample by sample, and a re-run reproduces every
//! output byte for byte.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::beamforming::{self, PhaseOpts};
use crate::netmodel::{self, ChannelRealization, FadingParams, Point, Rect};
use crate::power_control::{self, PcContext, PcStatus, PowerOpts};
use crate::system::{self, PhaseConfig, PowerAlloc, SystemParams};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Model(#[from] netmodel::ModelError),
    #[error(transparent)]
    System(#[from] system::SystemError),
    #[error(transparent)]
    Beamforming(#[from] beamforming::BeamformingError),
    #[error(transparent)]
    Power(#[from] power_control::PcError),
}

/// Everything a sweep needs, read from a flat `key = value` file.
///
/// The list-valued keys (`n_elements`, `bits`, `pmax_dbm`, `rmin`) hold the
/// candidate sweep values; a sweep iterates over its own list and pins the
/// others to their first entry.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Side of the square deployment area, meters.
    pub area_m: f64,
    pub links: usize,
    pub d2d_min_m: f64,
    pub d2d_max_m: f64,
    /// Surface centers; the element budget is split evenly across them.
    pub ris_positions: Vec<Point>,
    pub n_elements: Vec<usize>,
    pub bits: Vec<u32>,
    pub pmax_dbm: Vec<f64>,
    /// Common minimum rate applied to every link, bits/s/Hz.
    pub rmin: Vec<f64>,
    pub noise_dbm: f64,
    pub circuit_power_dbm: f64,
    pub eta: f64,
    pub rician_k: f64,
    pub pathloss_k: f64,
    pub pathloss_exp: f64,
    pub trials: usize,
    pub seed: u64,
    pub outer_tol: f64,
    pub outer_max_iter: usize,
    pub fp_tol: f64,
    pub fp_max_iter: usize,
    /// Cap on relaxation-plus-rounding rounds inside each phase update.
    pub phase_rounds: usize,
    pub randomization_samples: usize,
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            area_m: 100.0,
            links: 4,
            d2d_min_m: 15.0,
            d2d_max_m: 30.0,
            ris_positions: vec![
                Point::new(-50.0, -50.0),
                Point::new(-50.0, 50.0),
                Point::new(50.0, -50.0),
                Point::new(50.0, 50.0),
            ],
            n_elements: vec![16, 32, 48, 64, 80],
            bits: vec![3],
            pmax_dbm: vec![20.0],
            rmin: vec![0.0],
            noise_dbm: -117.0,
            circuit_power_dbm: 15.0,
            eta: 0.8,
            rician_k: 2.0,
            pathloss_k: 1e-3,
            pathloss_exp: 4.0,
            trials: 50,
            seed: 1,
            outer_tol: 1e-3,
            outer_max_iter: 10,
            fp_tol: 1e-4,
            fp_max_iter: 30,
            phase_rounds: 15,
            randomization_samples: 200,
            out_dir: PathBuf::from("results"),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Io(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Parse `key = value` lines; `#` starts a comment, blank lines are
    /// skipped, list values are comma-separated, and positions are `x:y`
    /// pairs. Unset keys keep their defaults.
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let mut cfg = ExperimentConfig::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let lineno = idx + 1;
            let bad = |what: &str| HarnessError::Config(format!("line {lineno}: {what}: {raw}"));
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad("expected `key = value`"))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "area_m" => cfg.area_m = parse_num(value).map_err(|e| bad(&e))?,
                "links" => cfg.links = parse_num(value).map_err(|e| bad(&e))?,
                "d2d_min_m" => cfg.d2d_min_m = parse_num(value).map_err(|e| bad(&e))?,
                "d2d_max_m" => cfg.d2d_max_m = parse_num(value).map_err(|e| bad(&e))?,
                "ris_positions" => {
                    cfg.ris_positions = parse_points(value).map_err(|e| bad(&e))?
                }
                "n_elements" => cfg.n_elements = parse_list(value).map_err(|e| bad(&e))?,
                "bits" => cfg.bits = parse_list(value).map_err(|e| bad(&e))?,
                "pmax_dbm" => cfg.pmax_dbm = parse_list(value).map_err(|e| bad(&e))?,
                "rmin" => cfg.rmin = parse_list(value).map_err(|e| bad(&e))?,
                "noise_dbm" => cfg.noise_dbm = parse_num(value).map_err(|e| bad(&e))?,
                "circuit_power_dbm" => {
                    cfg.circuit_power_dbm = parse_num(value).map_err(|e| bad(&e))?
                }
                "eta" => cfg.eta = parse_num(value).map_err(|e| bad(&e))?,
                "rician_k" => cfg.rician_k = parse_num(value).map_err(|e| bad(&e))?,
                "pathloss_k" => cfg.pathloss_k = parse_num(value).map_err(|e| bad(&e))?,
                "pathloss_exp" => cfg.pathloss_exp = parse_num(value).map_err(|e| bad(&e))?,
                "trials" => cfg.trials = parse_num(value).map_err(|e| bad(&e))?,
                "seed" => cfg.seed = parse_num(value).map_err(|e| bad(&e))?,
                "outer_tol" => cfg.outer_tol = parse_num(value).map_err(|e| bad(&e))?,
                "outer_max_iter" => cfg.outer_max_iter = parse_num(value).map_err(|e| bad(&e))?,
                "fp_tol" => cfg.fp_tol = parse_num(value).map_err(|e| bad(&e))?,
                "fp_max_iter" => cfg.fp_max_iter = parse_num(value).map_err(|e| bad(&e))?,
                "phase_rounds" => cfg.phase_rounds = parse_num(value).map_err(|e| bad(&e))?,
                "randomization_samples" => {
                    cfg.randomization_samples = parse_num(value).map_err(|e| bad(&e))?
                }
                "out_dir" => cfg.out_dir = PathBuf::from(value),
                _ => return Err(bad("unknown key")),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), HarnessError> {
        let fail = |what: String| Err(HarnessError::Config(what));
        if self.links == 0 {
            return fail("links must be at least 1".into());
        }
        if !(self.area_m > 0.0) {
            return fail(format!("area_m must be positive, got {}", self.area_m));
        }
        if !(0.0 < self.d2d_min_m && self.d2d_min_m <= self.d2d_max_m) {
            return fail(format!(
                "need 0 < d2d_min_m <= d2d_max_m, got {} and {}",
                self.d2d_min_m, self.d2d_max_m
            ));
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return fail(format!("eta must lie in (0, 1], got {}", self.eta));
        }
        if self.trials == 0 {
            return fail("trials must be at least 1".into());
        }
        for list in [
            ("n_elements", self.n_elements.is_empty()),
            ("bits", self.bits.is_empty()),
            ("pmax_dbm", self.pmax_dbm.is_empty()),
            ("rmin", self.rmin.is_empty()),
        ] {
            if list.1 {
                return fail(format!("{} must not be empty", list.0));
            }
        }
        for &b in &self.bits {
            if system::element_power_for_bits(b).is_none() {
                return fail(format!("no element power tabulated for {b}-bit phases"));
            }
        }
        if self.ris_positions.is_empty() && self.n_elements.iter().any(|&n| n > 0) {
            return fail("n_elements > 0 requires at least one entry in ris_positions".into());
        }
        Ok(())
    }

    fn fading(&self) -> FadingParams {
        FadingParams {
            rician_k: self.rician_k,
            pathloss_k: self.pathloss_k,
            pathloss_exp: self.pathloss_exp,
        }
    }

    fn params(&self, bits: u32, pmax_dbm: f64, rmin: f64) -> SystemParams {
        SystemParams {
            noise_power: system::dbm_to_watts(self.noise_dbm),
            circuit_power: system::dbm_to_watts(self.circuit_power_dbm),
            element_power: system::element_power_for_bits(bits).expect("validated"),
            resolution_bits: bits,
            p_max: system::dbm_to_watts(pmax_dbm),
            r_min: vec![rmin; self.links],
        }
    }

    fn joint_opts(&self) -> JointOpts {
        JointOpts {
            outer_tol: self.outer_tol,
            outer_max_iter: self.outer_max_iter,
            phase: PhaseOpts {
                rounds: self.phase_rounds,
                randomization_samples: self.randomization_samples,
                ..PhaseOpts::default()
            },
            power: PowerOpts {
                fp_tol: self.fp_tol,
                fp_max_iter: self.fp_max_iter,
                ..PowerOpts::default()
            },
        }
    }
}

fn parse_num<T: std::str::FromStr>(value: &str) -> Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("cannot parse `{value}`"))
}

fn parse_list<T: std::str::FromStr>(value: &str) -> Result<Vec<T>, String> {
    value.split(',').map(|item| parse_num(item.trim())).collect()
}

fn parse_points(value: &str) -> Result<Vec<Point>, String> {
    value
        .split(',')
        .map(|item| {
            let item = item.trim();
            let (x, y) = item
                .split_once(':')
                .ok_or_else(|| format!("expected `x:y`, got `{item}`"))?;
            Ok(Point::new(parse_num(x.trim())?, parse_num(y.trim())?))
        })
        .collect()
}

/// Split `n` elements across `surfaces` surfaces as evenly as possible,
/// giving the leftover one-per-surface from the front.
pub fn split_elements(n: usize, surfaces: usize) -> Vec<usize> {
    if surfaces == 0 {
        return Vec::new();
    }
    let base = n / surfaces;
    let extra = n % surfaces;
    (0..surfaces)
        .map(|m| base + usize::from(m < extra))
        .collect()
}

#[derive(Debug, Clone)]
pub struct JointOpts {
    /// Relative efficiency improvement below which the alternation stops.
    pub outer_tol: f64,
    pub outer_max_iter: usize,
    pub phase: PhaseOpts,
    pub power: PowerOpts,
}

impl Default for JointOpts {
    fn default() -> Self {
        JointOpts {
            outer_tol: 1e-3,
            outer_max_iter: 10,
            phase: PhaseOpts::default(),
            power: PowerOpts::default(),
        }
    }
}

/// Outcome of one trial's joint optimization (or of a baseline).
#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    /// False when no transmit powers met the rate floors at the initial
    /// phases and re-aiming the surfaces could not repair them; the
    /// remaining fields are zero in that case.
    pub feasible: bool,
    pub energy_efficiency: f64,
    pub sum_rate: f64,
    pub total_power: f64,
    /// Efficiency after the initial power optimization and after every
    /// accepted alternation round. Non-decreasing.
    pub ee_trace: Vec<f64>,
}

impl TrialResult {
    fn infeasible() -> Self {
        TrialResult {
            feasible: false,
            energy_efficiency: 0.0,
            sum_rate: 0.0,
            total_power: 0.0,
            ee_trace: Vec::new(),
        }
    }
}

/// Alternate power control and phase optimization from the given initial
/// phases until the efficiency stops improving.
///
/// All evaluation happens on phases rounded to the hardware resolution in
/// `params`: the optimizer proposes continuous phases, but a proposal is
/// adopted only if its rounded version, with re-optimized powers, improves
/// the efficiency. Rate floors that are infeasible at the initial phases
/// get a repair attempt via [`restore_feasibility`] before the trial is
/// declared lost. With no reflecting elements this reduces to a single
/// power optimization.
pub fn optimize_joint<R: Rng>(
    chan: &ChannelRealization,
    params: &SystemParams,
    init: &PhaseConfig,
    opts: &JointOpts,
    rng: &mut R,
) -> Result<TrialResult, HarnessError> {
    let n = chan.num_elements();
    let links = chan.num_links();

    let evaluate = |cfg: &PhaseConfig| -> Result<PcContext, HarnessError> {
        let gains = system::effective_gains(chan, cfg)?;
        Ok(PcContext::from_params(gains, params, n)?)
    };

    // Round 0: powers only, at the (rounded) initial phases. When the rate
    // floors are infeasible there, power control has no remedy, but the
    // surfaces might: try to repair the floors before giving up.
    let mut phase_cont = init.clone();
    let mut phase = init.quantized(params.resolution_bits);
    let mut round0 = power_control::dinkelbach(&evaluate(&phase)?, None, &opts.power)?;
    if round0.status == PcStatus::Infeasible {
        let Some((repaired, warm)) = restore_feasibility(chan, params, &phase_cont, opts, rng)?
        else {
            return Ok(TrialResult::infeasible());
        };
        phase_cont = repaired;
        phase = phase_cont.quantized(params.resolution_bits);
        round0 = power_control::dinkelbach(&evaluate(&phase)?, Some(&warm), &opts.power)?;
        if round0.status == PcStatus::Infeasible {
            return Ok(TrialResult::infeasible());
        }
    }
    let mut power = round0.p;
    let mut ee = round0.energy_efficiency;
    let mut trace = vec![ee];

    if n > 0 {
        for _ in 0..opts.outer_max_iter {
            let alloc = PowerAlloc {
                p: power.iter().copied().collect(),
            };
            let out =
                beamforming::optimize_phases(chan, &alloc, params, &phase_cont, &opts.phase, rng)?;
            let cand = out.config.quantized(params.resolution_bits);
            let cand_ctx = evaluate(&cand)?;
            let dk = power_control::dinkelbach(&cand_ctx, Some(&power), &opts.power)?;
            if dk.status == PcStatus::Infeasible || dk.energy_efficiency <= ee {
                break;
            }
            let gain = dk.energy_efficiency - ee;
            phase_cont = out.config;
            phase = cand;
            power = dk.p;
            ee = dk.energy_efficiency;
            trace.push(ee);
            if gain <= opts.outer_tol * (1.0 + ee.abs()) {
                break;
            }
        }
    }

    let ctx = evaluate(&phase)?;
    debug_assert!(links == ctx.num_links());
    Ok(TrialResult {
        feasible: true,
        energy_efficiency: ee,
        sum_rate: ctx.sum_rate(&power),
        total_power: ctx.total_power(&power),
        ee_trace: trace,
    })
}

/// Try to make infeasible rate floors reachable by re-aiming the surfaces.
///
/// Alternates margin-directed phase proposals with a best-effort search for
/// max-min-margin powers, judging every proposal at its rounded phases. A
/// proposal is kept only when it improves that margin. Returns the repaired
/// continuous phases and a feasible power vector, or `None` when the floors
/// stay out of reach within the configured number of rounds.
fn restore_feasibility<R: Rng>(
    chan: &ChannelRealization,
    params: &SystemParams,
    init: &PhaseConfig,
    opts: &JointOpts,
    rng: &mut R,
) -> Result<Option<(PhaseConfig, DVector<f64>)>, HarnessError> {
    if chan.num_elements() == 0 {
        return Ok(None);
    }
    let margins_at = |cfg: &PhaseConfig| -> Result<(DVector<f64>, f64), HarnessError> {
        let gains = system::effective_gains(chan, cfg)?;
        let ctx = PcContext::from_params(gains, params, chan.num_elements())?;
        Ok(power_control::best_effort_margins(&ctx))
    };

    let mut cont = init.clone();
    let (mut p_ref, mut margin) = margins_at(&cont.quantized(params.resolution_bits))?;
    for _ in 0..opts.phase.rounds {
        if margin >= 0.0 {
            break;
        }
        let alloc = PowerAlloc {
            p: p_ref.iter().copied().collect(),
        };
        let Some(cand) =
            beamforming::raise_worst_margin(chan, &alloc, params, &cont, &opts.phase, rng)?
        else {
            break;
        };
        let (cand_p, cand_margin) = margins_at(&cand.quantized(params.resolution_bits))?;
        if cand_margin <= margin {
            break;
        }
        cont = cand;
        p_ref = cand_p;
        margin = cand_margin;
    }
    if margin >= 0.0 {
        Ok(Some((cont, p_ref)))
    } else {
        Ok(None)
    }
}

/// Optimize the powers only, leaving the phases exactly as given.
pub fn optimize_powers_at(
    chan: &ChannelRealization,
    params: &SystemParams,
    phase: &PhaseConfig,
    opts: &PowerOpts,
) -> Result<TrialResult, HarnessError> {
    let gains = system::effective_gains(chan, phase)?;
    let ctx = PcContext::from_params(gains, params, chan.num_elements())?;
    let out = power_control::dinkelbach(&ctx, None, opts)?;
    if out.status == PcStatus::Infeasible {
        return Ok(TrialResult::infeasible());
    }
    Ok(TrialResult {
        feasible: true,
        energy_efficiency: out.energy_efficiency,
        sum_rate: ctx.sum_rate(&out.p),
        total_power: ctx.total_power(&out.p),
        ee_trace: vec![out.energy_efficiency],
    })
}

fn stream_rng(seed: u64, trial: usize, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ trial as u64);
    rng.set_stream(stream);
    rng
}

/// The random draws of one trial: placement, fading, and initial phases.
/// Independent of every swept parameter except the element count, which
/// only adds fading draws, so node placements stay paired across the sweep.
fn sample_trial(
    cfg: &ExperimentConfig,
    n: usize,
    trial: usize,
) -> Result<(ChannelRealization, PhaseConfig), HarnessError> {
    let (positions, counts): (&[Point], Vec<usize>) = if n == 0 {
        (&[], Vec::new())
    } else {
        (
            &cfg.ris_positions,
            split_elements(n, cfg.ris_positions.len()),
        )
    };
    let topo = netmodel::sample_topology(
        Rect::centered(cfg.area_m, cfg.area_m),
        cfg.links,
        positions,
        &counts,
        (cfg.d2d_min_m, cfg.d2d_max_m),
        &mut stream_rng(cfg.seed, trial, 0),
    )?;
    let chan = netmodel::realize_channels(&topo, &cfg.fading(), &mut stream_rng(cfg.seed, trial, 1))?;
    let init = PhaseConfig::random(n, cfg.eta, &mut stream_rng(cfg.seed, trial, 2));
    Ok((chan, init))
}

/// The three per-trial outcomes a sweep can report.
#[derive(Debug, Clone)]
struct TrialTriple {
    main: TrialResult,
    no_ris: Option<TrialResult>,
    random_phase: Option<TrialResult>,
}

fn run_trial(
    cfg: &ExperimentConfig,
    n: usize,
    bits: u32,
    pmax_dbm: f64,
    rmin: f64,
    trial: usize,
    with_baselines: bool,
) -> Result<TrialTriple, HarnessError> {
    let params = cfg.params(bits, pmax_dbm, rmin);
    let (chan, init) = sample_trial(cfg, n, trial)?;
    let mut rng = stream_rng(cfg.seed, trial, 3);
    let main = optimize_joint(&chan, &params, &init, &cfg.joint_opts(), &mut rng)?;

    if !with_baselines {
        return Ok(TrialTriple {
            main,
            no_ris: None,
            random_phase: None,
        });
    }

    // Random-phase baseline: powers optimized, phases left at the rounded
    // initial draw — exactly the main run's round 0.
    let random_phase = optimize_powers_at(
        &chan,
        &params,
        &init.quantized(params.resolution_bits),
        &cfg.joint_opts().power,
    )?;

    // Surface-free baseline: same direct channels, zero elements.
    let bare = chan.without_ris();
    let no_ris = optimize_powers_at(
        &bare,
        &params,
        &PhaseConfig::zeros(0, cfg.eta),
        &cfg.joint_opts().power,
    )?;

    Ok(TrialTriple {
        main,
        no_ris: Some(no_ris),
        random_phase: Some(random_phase),
    })
}

/// Per-sweep-point aggregate over all trials.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointStats {
    /// Mean efficiency over every trial, with infeasible trials counted
    /// as zero.
    pub mean_ee: f64,
    pub failure_rate: f64,
    /// Mean over the feasible trials only; zero when none were.
    pub mean_sum_rate: f64,
    pub mean_total_power: f64,
    pub trials: usize,
}

fn aggregate(results: &[TrialResult]) -> PointStats {
    let trials = results.len();
    let mean_ee = results.iter().map(|r| r.energy_efficiency).sum::<f64>() / trials as f64;
    let ok: Vec<&TrialResult> = results.iter().filter(|r| r.feasible).collect();
    let failures = trials - ok.len();
    let mean_over_ok = |f: fn(&TrialResult) -> f64| -> f64 {
        if ok.is_empty() {
            0.0
        } else {
            ok.iter().map(|r| f(r)).sum::<f64>() / ok.len() as f64
        }
    };
    PointStats {
        mean_ee,
        failure_rate: failures as f64 / trials as f64,
        mean_sum_rate: mean_over_ok(|r| r.sum_rate),
        mean_total_power: mean_over_ok(|r| r.total_power),
        trials,
    }
}

/// Run every trial of one sweep point in parallel, in trial order.
fn run_point(
    cfg: &ExperimentConfig,
    n: usize,
    bits: u32,
    pmax_dbm: f64,
    rmin: f64,
    with_baselines: bool,
) -> Result<(PointStats, Option<PointStats>, Option<PointStats>), HarnessError> {
    let triples: Vec<TrialTriple> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| run_trial(cfg, n, bits, pmax_dbm, rmin, t, with_baselines))
        .collect::<Result<_, _>>()?;
    let main: Vec<TrialResult> = triples.iter().map(|t| t.main.clone()).collect();
    let pick = |get: fn(&TrialTriple) -> Option<&TrialResult>| -> Option<PointStats> {
        let rows: Option<Vec<TrialResult>> =
            triples.iter().map(|t| get(t).cloned()).collect();
        rows.map(|rows| aggregate(&rows))
    };
    Ok((
        aggregate(&main),
        pick(|t| t.no_ris.as_ref()),
        pick(|t| t.random_phase.as_ref()),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sweep {
    /// Mean efficiency versus total element count, at every resolution in
    /// `bits`; also writes the surface-free and random-phase baselines.
    Elements,
    /// Mean efficiency versus the transmit power cap, one file per rate
    /// floor in `rmin`.
    PowerCap,
    /// Mean efficiency versus the common rate floor.
    RateFloor,
}

/// One CSV row: swept variable name and value, resolution, and aggregates.
fn push_row(out: &mut String, var: &str, value: f64, bits: u32, s: &PointStats) {
    let _ = writeln!(
        out,
        "{var},{value:.9e},{bits},{:.9e},{:.9e},{:.9e},{:.9e},{}",
        s.mean_ee, s.failure_rate, s.mean_sum_rate, s.mean_total_power, s.trials
    );
}

const CSV_HEADER: &str =
    "sweep_var,value,b,mean_ee_bits_per_hz_per_joule,failure_rate,mean_sum_rate,mean_total_power_w,trials\n";

fn write_file(dir: &Path, name: &str, body: &str) -> Result<PathBuf, HarnessError> {
    let path = dir.join(name);
    std::fs::write(&path, body)
        .map_err(|e| HarnessError::Io(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}

/// Run one sweep and write its CSV files; returns the paths written.
pub fn run_sweep(cfg: &ExperimentConfig, sweep: Sweep) -> Result<Vec<PathBuf>, HarnessError> {
    std::fs::create_dir_all(&cfg.out_dir)
        .map_err(|e| HarnessError::Io(format!("cannot create {}: {e}", cfg.out_dir.display())))?;
    let pmax0 = cfg.pmax_dbm[0];
    let rmin0 = cfg.rmin[0];
    let n0 = cfg.n_elements[0];
    let bits0 = cfg.bits[0];
    let mut written = Vec::new();

    match sweep {
        Sweep::Elements => {
            let mut main = String::from(CSV_HEADER);
            let mut bare = String::from(CSV_HEADER);
            let mut random = String::from(CSV_HEADER);
            for &bits in &cfg.bits {
                for &n in &cfg.n_elements {
                    let (m, b, r) = run_point(cfg, n, bits, pmax0, rmin0, true)?;
                    push_row(&mut main, "n_elements", n as f64, bits, &m);
                    push_row(&mut bare, "n_elements", n as f64, bits, &b.expect("requested"));
                    push_row(
                        &mut random,
                        "n_elements",
                        n as f64,
                        bits,
                        &r.expect("requested"),
                    );
                }
            }
            written.push(write_file(&cfg.out_dir, "ee_vs_elements.csv", &main)?);
            written.push(write_file(&cfg.out_dir, "ee_vs_elements_no_ris.csv", &bare)?);
            written.push(write_file(
                &cfg.out_dir,
                "ee_vs_elements_random_phase.csv",
                &random,
            )?);
        }
        Sweep::PowerCap => {
            for &rmin in &cfg.rmin {
                let mut body = String::from(CSV_HEADER);
                for &pmax in &cfg.pmax_dbm {
                    let (m, _, _) = run_point(cfg, n0, bits0, pmax, rmin, false)?;
                    push_row(&mut body, "pmax_dbm", pmax, bits0, &m);
                }
                let name = format!("ee_vs_pmax_rmin_{rmin}.csv");
                written.push(write_file(&cfg.out_dir, &name, &body)?);
            }
        }
        Sweep::RateFloor => {
            let mut body = String::from(CSV_HEADER);
            for &rmin in &cfg.rmin {
                let (m, _, _) = run_point(cfg, n0, bits0, pmax0, rmin, false)?;
                push_row(&mut body, "rmin", rmin, bits0, &m);
            }
            written.push(write_file(&cfg.out_dir, "ee_vs_rmin.csv", &body)?);
        }
    }
    Ok(written)
}

pub mod cli {
    //! `risd2d` binary: load a config, run one sweep, write CSVs.

    use super::*;
    use clap::{Parser, ValueEnum};

    #[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
    pub enum SweepArg {
        /// Efficiency versus total reflecting-element count (plus baselines).
        NElements,
        /// Efficiency versus the per-link transmit power cap.
        Pmax,
        /// Efficiency versus the common minimum-rate requirement.
        Rmin,
    }

    impl From<SweepArg> for Sweep {
        fn from(arg: SweepArg) -> Sweep {
            match arg {
                SweepArg::NElements => Sweep::Elements,
                SweepArg::Pmax => Sweep::PowerCap,
                SweepArg::Rmin => Sweep::RateFloor,
            }
        }
    }

    /// Energy-efficiency experiments for RIS-assisted D2D networks.
    #[derive(Debug, Parser)]
    #[command(name = "risd2d", version)]
    pub struct Cli {
        /// Experiment configuration file (`key = value` lines); defaults
        /// apply for missing keys or a missing flag.
        #[arg(long)]
        pub config: Option<PathBuf>,
        /// Which parameter to sweep.
        #[arg(long, value_enum, default_value = "n-elements")]
        pub sweep: SweepArg,
        /// Override the trial count from the config.
        #[arg(long)]
        pub trials: Option<usize>,
        /// Override the base seed from the config.
        #[arg(long)]
        pub seed: Option<u64>,
        /// Override the output directory from the config.
        #[arg(long)]
        pub out: Option<PathBuf>,
    }

    pub fn execute(cli: &Cli) -> Result<Vec<PathBuf>, HarnessError> {
        let mut cfg = match &cli.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(t) = cli.trials {
            cfg.trials = t;
        }
        if let Some(s) = cli.seed {
            cfg.seed = s;
        }
        if let Some(dir) = &cli.out {
            cfg.out_dir = dir.clone();
        }
        cfg.validate()?;
        run_sweep(&cfg, cli.sweep.into())
    }

    /// Entry point for the binary; returns the process exit code.
    pub fn run() -> i32 {
        let cli = Cli::parse();
        match execute(&cli) {
            Ok(paths) => {
                for p in paths {
                    println!("wrote {}", p.display());
                }
                0
            }
            Err(e) => {
                eprintln!("error: {e}");
                1
            }
        }
    }
}
