//! Deployment geometry and small-scale fading for RIS-assisted D2D links.
//!
//! `L` transmitter/receiver pairs and `M` reflecting surfaces live in a
//! rectangular region. Every scalar channel coefficient is Rician faded and
//! normalized so that its mean square equals the distance power law
//!
//! ```text
//! E[|h|^2] = k * d^(-chi)
//! ```
//!
//! with `k` the gain at 1 m and `chi` the path-loss exponent. Reflected
//! paths are modeled per element as a cascade of two segments, tx→surface
//! and surface→rx, each faded independently with the segment distance taken
//! to the surface center. Distances are floored at 1 m before the power law
//! is applied, which keeps co-located nodes finite.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use nalgebra::DMatrix;

/// Attempts per pair before receiver placement gives up.
const PLACEMENT_CAP: usize = 10_000;

/// Minimum distance in meters fed to the power law.
const DISTANCE_FLOOR_M: f64 = 1.0;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("path-loss distance must be positive, got {0}")]
    NonPositiveDistance(f64),
    #[error("d2d distance range [{0}, {1}] is invalid")]
    BadDistanceRange(f64, f64),
    #[error("pair {pair}: receiver annulus does not intersect the area ({attempts} rejections)")]
    Placement { pair: usize, attempts: usize },
    #[error("{0}")]
    Dimension(String),
}

/// A position in the deployment plane, meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dist(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Axis-aligned deployment rectangle, meters.
#[derive(Debug, Clone, Copy)]
pub struct Rect {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Rect {
    /// Rectangle of the given width/height centered on the origin.
    pub fn centered(width: f64, height: f64) -> Self {
        Rect {
            x_min: -width / 2.0,
            x_max: width / 2.0,
            y_min: -height / 2.0,
            y_max: height / 2.0,
        }
    }

    pub fn contains(&self, p: &Point) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }

    pub fn center(&self) -> Point {
        Point::new((self.x_min + self.x_max) / 2.0, (self.y_min + self.y_max) / 2.0)
    }
}

/// Large- and small-scale fading parameters.
#[derive(Debug, Clone, Copy)]
pub struct FadingParams {
    /// Rician K-factor (linear). 0 is pure Rayleigh, large K is pure LoS.
    pub rician_k: f64,
    /// Power-law gain at the 1 m reference distance.
    pub pathloss_k: f64,
    /// Path-loss exponent chi.
    pub pathloss_exp: f64,
}

impl Default for FadingParams {
    fn default() -> Self {
        FadingParams {
            rician_k: 2.0,
            pathloss_k: 1e-3,
            pathloss_exp: 4.0,
        }
    }
}

/// Node and surface placement for one experiment trial.
#[derive(Debug, Clone)]
pub struct Topology {
    pub tx: Vec<Point>,
    pub rx: Vec<Point>,
    /// Surface centers; may be empty for RIS-free scenarios.
    pub ris: Vec<Point>,
    /// Element count per surface, same length as `ris`.
    pub elements_per_ris: Vec<usize>,
}

impl Topology {
    pub fn num_links(&self) -> usize {
        self.tx.len()
    }

    pub fn num_elements(&self) -> usize {
        self.elements_per_ris.iter().sum()
    }

    /// Surface index owning each global element, in stacking order.
    pub fn ris_of_element(&self) -> Vec<usize> {
        let mut owner = Vec::with_capacity(self.num_elements());
        for (m, &cnt) in self.elements_per_ris.iter().enumerate() {
            owner.extend(std::iter::repeat(m).take(cnt));
        }
        owner
    }
}

/// One draw of every channel coefficient in the network.
///
/// Matrix layout: `direct[(i, l)]` is tx `i` → rx `l`; column `i` of
/// `tx_ris` stacks tx `i` → element `n` over all surfaces in order; column
/// `l` of `ris_rx` stacks element `n` → rx `l`.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    pub direct: DMatrix<Complex64>,
    pub tx_ris: DMatrix<Complex64>,
    pub ris_rx: DMatrix<Complex64>,
}

impl ChannelRealization {
    pub fn num_links(&self) -> usize {
        self.direct.nrows()
    }

    pub fn num_elements(&self) -> usize {
        self.tx_ris.nrows()
    }

    /// The same network with every reflecting element removed.
    pub fn without_ris(&self) -> Self {
        let l = self.num_links();
        ChannelRealization {
            direct: self.direct.clone(),
            tx_ris: DMatrix::zeros(0, l),
            ris_rx: DMatrix::zeros(0, l),
        }
    }
}

/// Mean channel power `k * d^(-chi)` at distance `d` meters.
///
/// No flooring happens here; callers that may see co-located nodes apply
/// the 1 m floor before calling.
pub fn path_loss_gain(d: f64, fading: &FadingParams) -> Result<f64, ModelError> {
    if d <= 0.0 {
        return Err(ModelError::NonPositiveDistance(d));
    }
    Ok(fading.pathloss_k * d.powf(-fading.pathloss_exp))
}

/// Draw transmitter/receiver placements.
///
/// Transmitters fall uniformly in `area`; each receiver falls uniformly on
/// the annulus `d_range` around its transmitter, rejection-sampled until it
/// lands inside `area`. Surfaces are placed at the given fixed positions.
/// Draw order is fixed (pair 0 tx, pair 0 rx, pair 1 tx, ...), so a seeded
/// generator reproduces the same topology.
pub fn sample_topology<R: Rng + ?Sized>(
    area: Rect,
    links: usize,
    ris_positions: &[Point],
    elements_per_ris: &[usize],
    d_range: (f64, f64),
    rng: &mut R,
) -> Result<Topology, ModelError> {
    let (d_min, d_max) = d_range;
    if !(d_min > 0.0 && d_max >= d_min) {
        return Err(ModelError::BadDistanceRange(d_min, d_max));
    }
    if ris_positions.len() != elements_per_ris.len() {
        return Err(ModelError::Dimension(format!(
            "{} surfaces but {} element counts",
            ris_positions.len(),
            elements_per_ris.len()
        )));
    }

    let mut tx = Vec::with_capacity(links);
    let mut rx = Vec::with_capacity(links);
    for pair in 0..links {
        let t = Point::new(
            rng.random_range(area.x_min..=area.x_max),
            rng.random_range(area.y_min..=area.y_max),
        );
        // Uniform area density on the annulus: r^2 uniform between the
        // squared radii, angle uniform.
        let mut placed = false;
        for _ in 0..PLACEMENT_CAP {
            let u: f64 = rng.random();
            let r = (d_min * d_min + u * (d_max * d_max - d_min * d_min)).sqrt();
            let ang = rng.random_range(0.0..std::f64::consts::TAU);
            let cand = Point::new(t.x + r * ang.cos(), t.y + r * ang.sin());
            if area.contains(&cand) {
                rx.push(cand);
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(ModelError::Placement {
                pair,
                attempts: PLACEMENT_CAP,
            });
        }
        tx.push(t);
    }

    Ok(Topology {
        tx,
        rx,
        ris: ris_positions.to_vec(),
        elements_per_ris: elements_per_ris.to_vec(),
    })
}

/// One Rician coefficient with mean power `gain`.
fn rician_draw<R: Rng + ?Sized>(gain: f64, k: f64, rng: &mut R) -> Complex64 {
    let los_phase = rng.random_range(0.0..std::f64::consts::TAU);
    let n_re: f64 = rng.sample(StandardNormal);
    let n_im: f64 = rng.sample(StandardNormal);
    let los_scale = (k / (1.0 + k)).sqrt();
    // Scatter component is unit-power circular Gaussian: variance 1/2 per axis.
    let scatter_scale = (0.5 / (1.0 + k)).sqrt();
    let los = Complex64::from_polar(los_scale, los_phase);
    let scatter = Complex64::new(n_re, n_im) * scatter_scale;
    (los + scatter) * gain.sqrt()
}

/// Draw every channel coefficient for `topo`.
///
/// Order is fixed: the direct matrix tx-major, then tx→RIS columns per
/// transmitter, then RIS→rx columns per receiver, so a seeded generator is
/// reproducible. Each reflected-path element is faded independently; both
/// of its segments use the distance to the surface center, floored at 1 m.
pub fn realize_channels<R: Rng + ?Sized>(
    topo: &Topology,
    fading: &FadingParams,
    rng: &mut R,
) -> Result<ChannelRealization, ModelError> {
    let l_cnt = topo.num_links();
    let n_cnt = topo.num_elements();
    let owner = topo.ris_of_element();

    let mut direct = DMatrix::zeros(l_cnt, l_cnt);
    for i in 0..l_cnt {
        for l in 0..l_cnt {
            let d = topo.tx[i].dist(&topo.rx[l]).max(DISTANCE_FLOOR_M);
            let gain = path_loss_gain(d, fading)?;
            direct[(i, l)] = rician_draw(gain, fading.rician_k, rng);
        }
    }

    let mut tx_ris = DMatrix::zeros(n_cnt, l_cnt);
    for i in 0..l_cnt {
        for n in 0..n_cnt {
            let d = topo.tx[i].dist(&topo.ris[owner[n]]).max(DISTANCE_FLOOR_M);
            let gain = path_loss_gain(d, fading)?;
            tx_ris[(n, i)] = rician_draw(gain, fading.rician_k, rng);
        }
    }

    let mut ris_rx = DMatrix::zeros(n_cnt, l_cnt);
    for l in 0..l_cnt {
        for n in 0..n_cnt {
            let d = topo.ris[owner[n]].dist(&topo.rx[l]).max(DISTANCE_FLOOR_M);
            let gain = path_loss_gain(d, fading)?;
            ris_rx[(n, l)] = rician_draw(gain, fading.rician_k, rng);
        }
    }

    Ok(ChannelRealization {
        direct,
        tx_ris,
        ris_rx,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn path_loss_reference_distance() {
        let f = FadingParams::default();
        assert_relative_eq!(path_loss_gain(1.0, &f).unwrap(), 1e-3, max_relative = 1e-12);
    }

    #[test]
    fn path_loss_halving_gains_two_to_chi() {
        let f = FadingParams::default();
        for d in [0.5, 1.0, 3.7, 20.0, 173.0] {
            let ratio = path_loss_gain(d / 2.0, &f).unwrap() / path_loss_gain(d, &f).unwrap();
            assert_relative_eq!(ratio, 2f64.powf(f.pathloss_exp), max_relative = 1e-12);
        }
    }

    #[test]
    fn path_loss_rejects_zero_distance() {
        let f = FadingParams::default();
        assert!(path_loss_gain(0.0, &f).is_err());
        assert!(path_loss_gain(-1.0, &f).is_err());
    }

    #[test]
    fn topology_respects_area_and_distance_range() {
        let area = Rect::centered(200.0, 200.0);
        let ris = [Point::new(-50.0, -50.0), Point::new(50.0, 50.0)];
        for seed in 0..100 {
            let topo = sample_topology(area, 6, &ris, &[4, 4], (20.0, 40.0), &mut rng(seed))
                .expect("placement feasible");
            for l in 0..6 {
                assert!(area.contains(&topo.tx[l]));
                assert!(area.contains(&topo.rx[l]));
                let d = topo.tx[l].dist(&topo.rx[l]);
                assert!((20.0..=40.0).contains(&d), "pair distance {d}");
            }
            assert_eq!(topo.num_elements(), 8);
        }
    }

    #[test]
    fn degenerate_annulus_pins_pair_distance() {
        let area = Rect::centered(200.0, 200.0);
        let topo =
            sample_topology(area, 1, &[], &[], (20.0, 20.0), &mut rng(7)).expect("placement");
        assert_relative_eq!(topo.tx[0].dist(&topo.rx[0]), 20.0, epsilon = 1e-9);
    }

    #[test]
    fn impossible_annulus_reports_pair_index() {
        // 1 m x 1 m box cannot hold a 20 m separation.
        let area = Rect::centered(1.0, 1.0);
        let err = sample_topology(area, 3, &[], &[], (20.0, 40.0), &mut rng(3)).unwrap_err();
        match err {
            ModelError::Placement { pair, .. } => assert_eq!(pair, 0),
            other => panic!("expected placement error, got {other}"),
        }
    }

    #[test]
    fn mismatched_ris_lengths_error() {
        let area = Rect::centered(100.0, 100.0);
        let err = sample_topology(area, 1, &[Point::new(0.0, 0.0)], &[], (5.0, 10.0), &mut rng(0))
            .unwrap_err();
        assert!(matches!(err, ModelError::Dimension(_)));
    }

    #[test]
    fn same_seed_reproduces_topology_and_channels() {
        let area = Rect::centered(200.0, 200.0);
        let ris = [Point::new(50.0, -50.0)];
        let f = FadingParams::default();
        let (t1, c1) = {
            let mut r = rng(42);
            let t = sample_topology(area, 4, &ris, &[8], (20.0, 40.0), &mut r).unwrap();
            let c = realize_channels(&t, &f, &mut r).unwrap();
            (t, c)
        };
        let (t2, c2) = {
            let mut r = rng(42);
            let t = sample_topology(area, 4, &ris, &[8], (20.0, 40.0), &mut r).unwrap();
            let c = realize_channels(&t, &f, &mut r).unwrap();
            (t, c)
        };
        assert_eq!(t1.tx, t2.tx);
        assert_eq!(t1.rx, t2.rx);
        assert_eq!(c1.direct, c2.direct);
        assert_eq!(c1.tx_ris, c2.tx_ris);
        assert_eq!(c1.ris_rx, c2.ris_rx);
    }

    #[test]
    fn channel_dimensions_follow_topology() {
        let area = Rect::centered(200.0, 200.0);
        let ris = [Point::new(-50.0, 50.0), Point::new(50.0, 50.0)];
        let mut r = rng(5);
        let topo = sample_topology(area, 3, &ris, &[5, 3], (20.0, 40.0), &mut r).unwrap();
        let chan = realize_channels(&topo, &FadingParams::default(), &mut r).unwrap();
        assert_eq!(chan.direct.shape(), (3, 3));
        assert_eq!(chan.tx_ris.shape(), (8, 3));
        assert_eq!(chan.ris_rx.shape(), (8, 3));
        let stripped = chan.without_ris();
        assert_eq!(stripped.num_elements(), 0);
        assert_eq!(stripped.direct, chan.direct);
    }

    #[test]
    fn pure_los_magnitude_matches_power_law() {
        let topo = Topology {
            tx: vec![Point::new(0.0, 0.0)],
            rx: vec![Point::new(30.0, 0.0)],
            ris: vec![],
            elements_per_ris: vec![],
        };
        let f = FadingParams {
            rician_k: 1e12,
            ..FadingParams::default()
        };
        let mut r = rng(11);
        let chan = realize_channels(&topo, &f, &mut r).unwrap();
        let expect = path_loss_gain(30.0, &f).unwrap().sqrt();
        assert_relative_eq!(chan.direct[(0, 0)].norm(), expect, max_relative = 1e-4);
    }

    #[test]
    fn distance_floor_guards_colocated_nodes() {
        let topo = Topology {
            tx: vec![Point::new(3.0, 3.0)],
            rx: vec![Point::new(3.0, 3.0)],
            ris: vec![],
            elements_per_ris: vec![],
        };
        let f = FadingParams {
            rician_k: 1e12,
            ..FadingParams::default()
        };
        let chan = realize_channels(&topo, &f, &mut rng(2)).unwrap();
        // Floored to 1 m, so the mean power is exactly the reference gain.
        assert_relative_eq!(chan.direct[(0, 0)].norm(), 1e-3f64.sqrt(), max_relative = 1e-4);
    }

    #[test]
    fn rician_normalization_is_unit_mean_power() {
        // Monte Carlo check of E[|h|^2] = k d^(-chi) across K factors.
        const NUM_SAMPLES: usize = 100_000;
        let topo = Topology {
            tx: vec![Point::new(0.0, 0.0)],
            rx: vec![Point::new(25.0, 0.0)],
            ris: vec![],
            elements_per_ris: vec![],
        };
        for (seed, k) in [(1u64, 0.0), (2, 2.0), (3, 10.0)] {
            let f = FadingParams {
                rician_k: k,
                ..FadingParams::default()
            };
            let gain = path_loss_gain(25.0, &f).unwrap();
            let mut r = rng(seed);
            let mut acc = 0.0;
            for _ in 0..NUM_SAMPLES {
                let c = realize_channels(&topo, &f, &mut r).unwrap();
                acc += c.direct[(0, 0)].norm_sqr();
            }
            let mean = acc / NUM_SAMPLES as f64;
            assert!(
                (mean / gain - 1.0).abs() < 0.05,
                "K={k}: mean |h|^2 / gain = {}",
                mean / gain
            );
        }
    }
}
