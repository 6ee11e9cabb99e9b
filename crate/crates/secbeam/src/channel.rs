//! Seed-driven synthesis of the propagation environment.
//!
//! The base station reaches every receiver only through the reflecting
//! surface, so one scenario produces four channels: the BS-to-IRS matrix `G`
//! (Rician, line-of-sight plus scattered) and the three IRS-to-node vectors
//! `h1`, `h2`, `he` (Rayleigh). Large-scale attenuation follows
//! `beta * d^(-alpha)` with a 1 m reference distance. All synthesis is a pure
//! function of `(scenario, seed)`.

use crate::la::{complex_gaussian_mat, complex_gaussian_vec};
use crate::rng::StreamFactory;
use crate::{C64, CMat, CVec};
use rand::Rng;
use std::f64::consts::{FRAC_PI_2, TAU};
use thiserror::Error;

/// Element spacing over wavelength for both arrays.
pub const DEFAULT_SPACING: f64 = 0.5;

const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Error, PartialEq)]
pub enum ScenarioError {
    #[error("{0} must be at least 1")]
    ZeroCount(&'static str),
    #[error("{0} must be positive, got {1}")]
    NonPositive(&'static str, f64),
    #[error("{0} must be non-negative, got {1}")]
    Negative(&'static str, f64),
    #[error("{0} must not be co-located with the IRS")]
    CoLocated(&'static str),
}

#[derive(Debug, Error, PartialEq)]
pub enum ChannelError {
    #[error("distance must be positive, got {0}")]
    NonPositiveDistance(f64),
}

/// Full description of one simulated deployment.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    /// Transmit antennas at the base station (M).
    pub antennas: usize,
    /// IRS element grid, horizontal count (Na).
    pub irs_rows: usize,
    /// IRS element grid, vertical count (Nb).
    pub irs_cols: usize,
    /// Base-station position, meters.
    pub bs: [f64; 2],
    /// IRS position, meters.
    pub irs: [f64; 2],
    /// Confidential subscriber position, meters.
    pub subscriber: [f64; 2],
    /// General communication user position, meters.
    pub user: [f64; 2],
    /// Eavesdropper position, meters.
    pub eavesdropper: [f64; 2],
    /// Secrecy-rate target for the subscriber, bit/s/Hz.
    pub delta1: f64,
    /// QoS rate target for the general user, bit/s/Hz.
    pub delta2: f64,
    /// Noise power at the subscriber, watts.
    pub sigma1_sq: f64,
    /// Noise power at the general user, watts.
    pub sigma2_sq: f64,
    /// Noise power at the eavesdropper, watts.
    pub sigmae_sq: f64,
    /// Carrier wavelength, meters.
    pub wavelength: f64,
    /// Rician factor of the BS-IRS link (LoS-to-scatter power ratio).
    pub rician_factor: f64,
    /// Path-loss exponent.
    pub pathloss_exponent: f64,
    /// Path-loss coefficient at the 1 m reference distance.
    pub pathloss_coeff: f64,
    /// Master seed for all random draws.
    pub seed: u64,
}

impl Scenario {
    /// The default simulated deployment: 4 BS antennas, a 4x4 surface,
    /// BS at (0, 200), IRS at the origin, subscriber at (50, 0), user at
    /// (50, 50), eavesdropper at (40, -30), 4 bit/s/Hz targets, -90 dBm
    /// noise, 2.4 GHz carrier.
    pub fn table_ii() -> Self {
        let noise_w = dbm_to_watts(-90.0);
        Scenario {
            antennas: 4,
            irs_rows: 4,
            irs_cols: 4,
            bs: [0.0, 200.0],
            irs: [0.0, 0.0],
            subscriber: [50.0, 0.0],
            user: [50.0, 50.0],
            eavesdropper: [40.0, -30.0],
            delta1: 4.0,
            delta2: 4.0,
            sigma1_sq: noise_w,
            sigma2_sq: noise_w,
            sigmae_sq: noise_w,
            wavelength: SPEED_OF_LIGHT / 2.4e9,
            rician_factor: 10.0,
            pathloss_exponent: 4.0,
            pathloss_coeff: 1e-9,
            seed: 1,
        }
    }

    /// Total number of IRS elements (N).
    pub fn elements(&self) -> usize {
        self.irs_rows * self.irs_cols
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.antennas == 0 {
            return Err(ScenarioError::ZeroCount("antennas"));
        }
        if self.irs_rows == 0 || self.irs_cols == 0 {
            return Err(ScenarioError::ZeroCount("irs grid"));
        }
        for (name, v) in [
            ("sigma1_sq", self.sigma1_sq),
            ("sigma2_sq", self.sigma2_sq),
            ("sigmae_sq", self.sigmae_sq),
            ("wavelength", self.wavelength),
            ("pathloss_exponent", self.pathloss_exponent),
            ("pathloss_coeff", self.pathloss_coeff),
        ] {
            if !(v > 0.0) {
                return Err(ScenarioError::NonPositive(name, v));
            }
        }
        for (name, v) in [
            ("rician_factor", self.rician_factor),
            ("delta1", self.delta1),
            ("delta2", self.delta2),
        ] {
            if !(v >= 0.0) {
                return Err(ScenarioError::Negative(name, v));
            }
        }
        for (name, p) in [
            ("bs", self.bs),
            ("subscriber", self.subscriber),
            ("user", self.user),
            ("eavesdropper", self.eavesdropper),
        ] {
            if distance(p, self.irs) <= 0.0 {
                return Err(ScenarioError::CoLocated(name));
            }
        }
        Ok(())
    }
}

/// One realization of every channel in the system.
#[derive(Debug, Clone)]
pub struct ChannelSet {
    /// BS-to-IRS channel, N x M.
    pub g: CMat,
    /// IRS-to-subscriber channel, length N.
    pub h1: CVec,
    /// IRS-to-user channel, length N.
    pub h2: CVec,
    /// IRS-to-eavesdropper channel, length N.
    pub he: CVec,
}

impl ChannelSet {
    /// (N, M).
    pub fn dims(&self) -> (usize, usize) {
        (self.g.nrows(), self.g.ncols())
    }
}

/// Arrival/departure geometry of the BS-IRS line-of-sight path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometryAngles {
    /// Azimuth angle of arrival at the IRS, radians.
    pub azimuth: f64,
    /// Elevation angle of arrival at the IRS, radians.
    pub elevation: f64,
    /// Departure angle at the BS array, radians.
    pub departure: f64,
    /// BS-IRS distance, meters.
    pub distance: f64,
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0) * 1e-3
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * (watts * 1e3).log10()
}

fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Linear power gain `beta * d^(-alpha)` with a 1 m reference distance.
pub fn path_loss(distance_m: f64, alpha: f64, beta: f64) -> Result<f64, ChannelError> {
    if !(distance_m > 0.0) {
        return Err(ChannelError::NonPositiveDistance(distance_m));
    }
    Ok(beta * distance_m.powf(-alpha))
}

/// LoS geometry of a scenario: angles at the IRS and the BS plus the link
/// distance. The deployment plane is horizontal and the surface is vertical,
/// so arrivals come in at grazing elevation.
pub fn geometry_angles(sc: &Scenario) -> GeometryAngles {
    let dx = sc.bs[0] - sc.irs[0];
    let dy = sc.bs[1] - sc.irs[1];
    GeometryAngles {
        azimuth: dy.atan2(dx),
        elevation: FRAC_PI_2,
        departure: (sc.irs[1] - sc.bs[1]).atan2(sc.irs[0] - sc.bs[0]),
        distance: distance(sc.bs, sc.irs),
    }
}

/// Steering vector of an Na x Nb square planar array, flattened row-major.
///
/// Entry (p, q) is `exp(j 2 pi s (p sin(el) cos(az) + q sin(el) sin(az)))`
/// where `s` is the element spacing over the wavelength. Every entry has unit
/// modulus.
pub fn steering_vector(
    na: usize,
    nb: usize,
    azimuth: f64,
    elevation: f64,
    spacing_over_lambda: f64,
) -> CVec {
    let (sa, ca) = azimuth.sin_cos();
    let se = elevation.sin();
    let mut out = CVec::zeros(na * nb);
    for p in 0..na {
        for q in 0..nb {
            let phase = TAU * spacing_over_lambda * (p as f64 * se * ca + q as f64 * se * sa);
            out[p * nb + q] = C64::from_polar(1.0, phase);
        }
    }
    out
}

/// Steering vector of the M-element uniform linear array at the BS.
pub fn ula_steering(m: usize, angle: f64, spacing_over_lambda: f64) -> CVec {
    CVec::from_fn(m, |i, _| {
        C64::from_polar(1.0, TAU * spacing_over_lambda * i as f64 * angle.cos())
    })
}

/// Rician BS-to-IRS channel.
///
/// `G = sqrt(bl) (sqrt(k/(1+k)) Gbar + sqrt(1/(1+k)) Gtilde)` where `bl` is
/// the link path-loss gain, `k` the Rician factor, `Gbar` the deterministic
/// LoS component `exp(-j 2 pi d / lambda) a_I a_B^H`, and `Gtilde` i.i.d.
/// unit-variance circular Gaussian. The weights split the per-entry power so
/// that `E|G_nm|^2 = bl` exactly.
pub fn rician_channel<R: Rng + ?Sized>(
    sc: &Scenario,
    angles: &GeometryAngles,
    rng: &mut R,
) -> CMat {
    let n = sc.elements();
    let m = sc.antennas;
    let bl = path_loss(angles.distance, sc.pathloss_exponent, sc.pathloss_coeff)
        .expect("validated scenario has positive BS-IRS distance");
    let k = sc.rician_factor;
    let a_i = steering_vector(
        sc.irs_rows,
        sc.irs_cols,
        angles.azimuth,
        angles.elevation,
        DEFAULT_SPACING,
    );
    let a_b = ula_steering(m, angles.departure, DEFAULT_SPACING);
    let los_phase = C64::from_polar(1.0, -TAU * angles.distance / sc.wavelength);
    let g_bar = (&a_i * a_b.adjoint()) * los_phase;
    let g_tilde = complex_gaussian_mat(rng, n, m);
    let w_los = (k / (1.0 + k)).sqrt();
    let w_nlos = (1.0 / (1.0 + k)).sqrt();
    (g_bar * C64::new(w_los, 0.0) + g_tilde * C64::new(w_nlos, 0.0)) * C64::new(bl.sqrt(), 0.0)
}

/// Rayleigh IRS-to-node channel: i.i.d. circular Gaussian entries with
/// per-entry variance `pathloss_gain`.
pub fn rayleigh_channel<R: Rng + ?Sized>(pathloss_gain: f64, n: usize, rng: &mut R) -> CVec {
    assert!(pathloss_gain > 0.0, "path-loss gain must be positive");
    complex_gaussian_vec(rng, n) * C64::new(pathloss_gain.sqrt(), 0.0)
}

/// Draw every channel of the scenario from independent labeled streams of
/// its seed.
pub fn synthesize(sc: &Scenario) -> ChannelSet {
    synthesize_with(sc, &StreamFactory::new(sc.seed))
}

/// Like [`synthesize`] but with an explicit stream factory.
pub fn synthesize_with(sc: &Scenario, streams: &StreamFactory) -> ChannelSet {
    let n = sc.elements();
    let angles = geometry_angles(sc);
    let g = rician_channel(sc, &angles, &mut streams.stream("channel.bs_irs"));
    let node = |label: &str, pos: [f64; 2]| {
        let gain = path_loss(
            distance(pos, sc.irs),
            sc.pathloss_exponent,
            sc.pathloss_coeff,
        )
        .expect("validated scenario keeps nodes away from the IRS");
        rayleigh_channel(gain, n, &mut streams.stream(label))
    };
    let h1 = node("channel.irs_subscriber", sc.subscriber);
    let h2 = node("channel.irs_user", sc.user);
    let he = node("channel.irs_eve", sc.eavesdropper);
    ChannelSet { g, h1, h2, he }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn path_loss_reference_distance() {
        assert_relative_eq!(path_loss(1.0, 4.0, 1e-9).unwrap(), 1e-9);
        assert_relative_eq!(path_loss(10.0, 4.0, 1e-9).unwrap(), 1e-13);
        assert_relative_eq!(
            path_loss(50.0, 4.0, 1e-9).unwrap(),
            1.6e-16,
            max_relative = 1e-12
        );
    }

    #[test]
    fn path_loss_rejects_nonpositive_distance() {
        assert_eq!(
            path_loss(0.0, 4.0, 1e-9),
            Err(ChannelError::NonPositiveDistance(0.0))
        );
        assert!(path_loss(-3.0, 4.0, 1e-9).is_err());
    }

    #[test]
    fn steering_zero_elevation_is_all_ones() {
        let v = steering_vector(3, 2, 1.1, 0.0, DEFAULT_SPACING);
        for e in v.iter() {
            assert_relative_eq!(e.re, 1.0, epsilon = 1e-15);
            assert_relative_eq!(e.im, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn steering_entries_unit_modulus() {
        let v = steering_vector(4, 4, 0.73, 1.21, DEFAULT_SPACING);
        for e in v.iter() {
            assert_relative_eq!(e.norm(), 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn steering_two_by_two_hand_case() {
        // az = 0, el = pi/2, spacing 1/2: phase(p, q) = pi * p.
        let v = steering_vector(2, 2, 0.0, FRAC_PI_2, 0.5);
        let expect = [1.0, 1.0, -1.0, -1.0];
        for (e, want) in v.iter().zip(expect) {
            assert_relative_eq!(e.re, want, epsilon = 1e-12);
            assert_relative_eq!(e.im, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn rician_pure_los_limit() {
        let mut sc = Scenario::table_ii();
        sc.rician_factor = 1e12;
        let angles = geometry_angles(&sc);
        let bl = path_loss(angles.distance, sc.pathloss_exponent, sc.pathloss_coeff).unwrap();
        let g = rician_channel(
            &sc,
            &angles,
            &mut StreamFactory::new(5).stream("channel.bs_irs"),
        );
        let a_i = steering_vector(
            sc.irs_rows,
            sc.irs_cols,
            angles.azimuth,
            angles.elevation,
            DEFAULT_SPACING,
        );
        let a_b = ula_steering(sc.antennas, angles.departure, DEFAULT_SPACING);
        let los = (&a_i * a_b.adjoint())
            * C64::from_polar(1.0, -TAU * angles.distance / sc.wavelength)
            * C64::new(bl.sqrt(), 0.0);
        let rel = (&g - &los).norm() / los.norm();
        assert!(rel < 1e-5, "relative LoS distance {rel}");
    }

    #[test]
    fn rician_second_moment_monte_carlo() {
        let mut sc = Scenario::table_ii();
        sc.antennas = 2;
        sc.irs_rows = 2;
        sc.irs_cols = 2;
        let angles = geometry_angles(&sc);
        let bl = path_loss(angles.distance, sc.pathloss_exponent, sc.pathloss_coeff).unwrap();
        let mut rng = StreamFactory::new(11).stream("channel.bs_irs");
        let mut acc = 0.0;
        let draws = 10_000;
        for _ in 0..draws {
            let g = rician_channel(&sc, &angles, &mut rng);
            acc += g.iter().map(|e| e.norm_sqr()).sum::<f64>() / (g.len() as f64);
        }
        let mean = acc / draws as f64;
        assert!(
            (mean - bl).abs() / bl < 0.05,
            "mean |G|^2 = {mean}, expected {bl}"
        );
    }

    #[test]
    fn rician_is_deterministic_per_seed() {
        let sc = Scenario::table_ii();
        let angles = geometry_angles(&sc);
        let a = rician_channel(
            &sc,
            &angles,
            &mut StreamFactory::new(9).stream("channel.bs_irs"),
        );
        let b = rician_channel(
            &sc,
            &angles,
            &mut StreamFactory::new(9).stream("channel.bs_irs"),
        );
        assert_eq!(a, b);
    }

    #[test]
    fn rayleigh_second_moment_monte_carlo() {
        let gain = 3.7e-14;
        let mut rng = StreamFactory::new(2).stream("x");
        let draws = 10_000;
        let n = 8;
        let mut acc = 0.0;
        for _ in 0..draws {
            let h = rayleigh_channel(gain, n, &mut rng);
            acc += h.iter().map(|e| e.norm_sqr()).sum::<f64>() / n as f64;
        }
        let mean = acc / draws as f64;
        assert!((mean - gain).abs() / gain < 0.05);
    }

    #[test]
    fn rayleigh_gain_scaling_is_linear() {
        let mut a_rng = StreamFactory::new(4).stream("x");
        let mut b_rng = StreamFactory::new(4).stream("x");
        let a = rayleigh_channel(1.0, 16, &mut a_rng);
        let b = rayleigh_channel(4.0, 16, &mut b_rng);
        assert_relative_eq!(b.norm_squared(), 4.0 * a.norm_squared(), max_relative = 1e-12);
    }

    #[test]
    fn rayleigh_deterministic() {
        let a = rayleigh_channel(1e-12, 5, &mut StreamFactory::new(8).stream("h"));
        let b = rayleigh_channel(1e-12, 5, &mut StreamFactory::new(8).stream("h"));
        assert_eq!(a, b);
    }

    #[test]
    fn synthesize_dimensions() {
        let sc = Scenario::table_ii();
        let ch = synthesize(&sc);
        assert_eq!(ch.dims(), (16, 4));
        assert_eq!(ch.h1.len(), 16);
        assert_eq!(ch.h2.len(), 16);
        assert_eq!(ch.he.len(), 16);
    }

    #[test]
    fn synthesize_reference_distance_power() {
        let mut sc = Scenario::table_ii();
        sc.user = [1.0, 0.0];
        let mut acc = 0.0;
        let draws = 10_000;
        for s in 0..draws {
            sc.seed = s;
            let ch = synthesize(&sc);
            acc += ch.h2.iter().map(|e| e.norm_sqr()).sum::<f64>() / ch.h2.len() as f64;
        }
        let mean = acc / draws as f64;
        assert!(
            (mean - sc.pathloss_coeff).abs() / sc.pathloss_coeff < 0.05,
            "per-entry power {mean} vs beta {}",
            sc.pathloss_coeff
        );
    }

    #[test]
    fn synthesize_seed_changes_channels() {
        let mut sc = Scenario::table_ii();
        let a = synthesize(&sc);
        sc.seed = 2;
        let b = synthesize(&sc);
        assert_ne!(a.h1, b.h1);
    }

    #[test]
    fn validate_catches_bad_fields() {
        let mut sc = Scenario::table_ii();
        sc.antennas = 0;
        assert_eq!(sc.validate(), Err(ScenarioError::ZeroCount("antennas")));
        let mut sc = Scenario::table_ii();
        sc.sigma1_sq = 0.0;
        assert!(sc.validate().is_err());
        let mut sc = Scenario::table_ii();
        sc.delta1 = -1.0;
        assert!(sc.validate().is_err());
        assert!(Scenario::table_ii().validate().is_ok());
    }

    #[test]
    fn dbm_round_trip() {
        assert_relative_eq!(dbm_to_watts(-90.0), 1e-12, max_relative = 1e-12);
        assert_relative_eq!(watts_to_dbm(1e-12), -90.0, max_relative = 1e-12);
    }
}
