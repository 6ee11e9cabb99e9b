//! Rates, secrecy rate, transmit power, and the cascaded channel operators
//! every subproblem consumes.
//!
//! Artificial noise enters each receiver through its covariance: the
//! interference term at node k is `|g_k^H w_j|^2 + g_k^H Z g_k + sigma_k^2`
//! with `g_k^H = h_k^H Phi G` the effective BS-to-node channel.

use crate::channel::ChannelSet;
use crate::la::{outer, quad_form};
use crate::{C64, CMat, CVec};

/// Receiving node of the cascade.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Node {
    Subscriber,
    User,
    Eve,
}

impl Node {
    pub const ALL: [Node; 3] = [Node::Subscriber, Node::User, Node::Eve];

    fn index(self) -> usize {
        match self {
            Node::Subscriber => 0,
            Node::User => 1,
            Node::Eve => 2,
        }
    }
}

/// The four decision variables of the power-minimization problem.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamState {
    /// Confidential beamformer, length M.
    pub w1: CVec,
    /// General beamformer, length M.
    pub w2: CVec,
    /// Artificial-noise covariance, Hermitian PSD M x M.
    pub an_cov: CMat,
    /// IRS reflection coefficients, unit modulus, length N.
    pub v: CVec,
}

impl BeamState {
    /// All-zero beams, zero AN, unit reflection coefficients.
    pub fn quiescent(m: usize, n: usize) -> Self {
        BeamState {
            w1: CVec::zeros(m),
            w2: CVec::zeros(m),
            an_cov: CMat::zeros(m, m),
            v: CVec::from_element(n, C64::new(1.0, 0.0)),
        }
    }
}

/// Rates in bit/s/Hz and the transmit power they cost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateSummary {
    pub confidential: f64,
    pub general: f64,
    pub eavesdropper: f64,
    pub secrecy: f64,
    pub total_power: f64,
}

/// Per-node cascade matrices `Theta_k = diag(h_k^H) G`, N x M.
///
/// The defining identity is `h_k^H Phi G = u^H Theta_k` for `Phi = diag(v)`
/// and the lift vector `u = conj(v)`; it turns every quadratic form in the
/// reflection coefficients into a trace against `U = u u^H`. The unit-modulus
/// set is conjugation-invariant, so optimizing over `u` and conjugating back
/// loses nothing.
#[derive(Debug, Clone)]
pub struct CascadeOperators {
    theta: [CMat; 3],
    lift: CVec,
}

/// Build the cascade operators at physical reflection coefficients `v`.
pub fn cascade(channels: &ChannelSet, v: &CVec) -> CascadeOperators {
    let make = |h: &CVec| {
        let mut t = channels.g.clone();
        for (n, hn) in h.iter().enumerate() {
            let c = hn.conj();
            for m in 0..t.ncols() {
                t[(n, m)] *= c;
            }
        }
        t
    };
    CascadeOperators {
        theta: [make(&channels.h1), make(&channels.h2), make(&channels.he)],
        lift: v.conjugate(),
    }
}

impl CascadeOperators {
    /// `Theta_k`, N x M.
    pub fn theta(&self, node: Node) -> &CMat {
        &self.theta[node.index()]
    }

    /// The lift vector `u = conj(v)`.
    pub fn lift(&self) -> &CVec {
        &self.lift
    }

    /// Effective channel `g_k = Theta_k^H u` (so `g_k^H = h_k^H Phi G`).
    pub fn effective(&self, node: Node) -> CVec {
        self.theta(node).adjoint() * &self.lift
    }

    /// `H_k = g_k g_k^H`, Hermitian PSD rank-one M x M.
    pub fn h_mat(&self, node: Node) -> CMat {
        outer(&self.effective(node))
    }

    /// `O_k = Theta_k Theta_k^H`, Hermitian PSD N x N.
    pub fn o_mat(&self, node: Node) -> CMat {
        let t = self.theta(node);
        t * t.adjoint()
    }

    /// `M_{k,i} = (Theta_k w)(Theta_k w)^H`, Hermitian PSD N x N; satisfies
    /// `Tr(u u^H M_{k,i}) = |u^H Theta_k w|^2`.
    pub fn m_beam(&self, node: Node, w: &CVec) -> CMat {
        outer(&(self.theta(node) * w))
    }

    /// `M_{k,z} = Theta_k Z Theta_k^H`, Hermitian PSD N x N.
    pub fn m_cov(&self, node: Node, z: &CMat) -> CMat {
        let t = self.theta(node);
        t * z * t.adjoint()
    }
}

/// Total transmit power `||w1||^2 + ||w2||^2 + Tr(Z)` in watts.
pub fn total_power(state: &BeamState) -> f64 {
    state.w1.norm_squared() + state.w2.norm_squared() + state.an_cov.trace().re
}

/// Effective channels `g_k` for all three nodes at reflection coefficients
/// `v`.
pub fn effective_channels(channels: &ChannelSet, v: &CVec) -> [CVec; 3] {
    let ops = cascade(channels, v);
    [
        ops.effective(Node::Subscriber),
        ops.effective(Node::User),
        ops.effective(Node::Eve),
    ]
}

/// All rates of the system at `state`, with `noise = [sigma1^2, sigma2^2,
/// sigmae^2]`.
pub fn rates(channels: &ChannelSet, state: &BeamState, noise: [f64; 3]) -> RateSummary {
    let [g1, g2, ge] = effective_channels(channels, &state.v);
    let sig = |g: &CVec, w: &CVec| (g.adjoint() * w)[(0, 0)].norm_sqr();
    let an = |g: &CVec| quad_form(&state.an_cov, g);

    let r_c = rate(sig(&g1, &state.w1), sig(&g1, &state.w2) + an(&g1) + noise[0]);
    let r_g = rate(sig(&g2, &state.w2), sig(&g2, &state.w1) + an(&g2) + noise[1]);
    let r_e = rate(sig(&ge, &state.w1), sig(&ge, &state.w2) + an(&ge) + noise[2]);
    RateSummary {
        confidential: r_c,
        general: r_g,
        eavesdropper: r_e,
        secrecy: (r_c - r_e).max(0.0),
        total_power: total_power(state),
    }
}

fn rate(signal: f64, interference_plus_noise: f64) -> f64 {
    (1.0 + signal / interference_plus_noise).log2()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::la::{complex_gaussian_mat, complex_gaussian_vec, hermitize, tr_prod};
    use crate::rng::StreamFactory;
    use approx::assert_relative_eq;
    use rand::Rng;

    fn unit(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_instance(seed: u64, n: usize, m: usize) -> (ChannelSet, BeamState) {
        let mut rng = StreamFactory::new(seed).stream("secrecy-test");
        let channels = ChannelSet {
            g: complex_gaussian_mat(&mut rng, n, m),
            h1: complex_gaussian_vec(&mut rng, n),
            h2: complex_gaussian_vec(&mut rng, n),
            he: complex_gaussian_vec(&mut rng, n),
        };
        let a = complex_gaussian_mat(&mut rng, m, m);
        let state = BeamState {
            w1: complex_gaussian_vec(&mut rng, m),
            w2: complex_gaussian_vec(&mut rng, m),
            an_cov: hermitize(&(&a * a.adjoint())),
            v: CVec::from_fn(n, |_, _| C64::from_polar(1.0, rng.random::<f64>() * 6.28)),
        };
        (channels, state)
    }

    #[test]
    fn total_power_basis_vector() {
        let mut s = BeamState::quiescent(2, 3);
        s.w1[0] = unit(1.0, 0.0);
        assert_relative_eq!(total_power(&s), 1.0);
    }

    #[test]
    fn total_power_all_zero() {
        assert_relative_eq!(total_power(&BeamState::quiescent(3, 4)), 0.0);
    }

    #[test]
    fn total_power_diagonal_cov() {
        let mut s = BeamState::quiescent(2, 3);
        s.an_cov = CMat::from_diagonal_element(2, 2, unit(0.5, 0.0));
        assert_relative_eq!(total_power(&s), 1.0);
    }

    #[test]
    fn silent_eavesdropper_gives_full_secrecy() {
        let (mut channels, mut state) = random_instance(1, 4, 3);
        channels.he = CVec::zeros(4);
        state.w1[0] = unit(1.0, 0.0);
        let r = rates(&channels, &state, [1.0, 1.0, 1.0]);
        assert_eq!(r.eavesdropper, 0.0);
        assert_relative_eq!(r.secrecy, r.confidential);
    }

    #[test]
    fn zero_confidential_beam_clamps_secrecy() {
        let (channels, mut state) = random_instance(2, 4, 3);
        state.w1 = CVec::zeros(3);
        let r = rates(&channels, &state, [1.0, 1.0, 1.0]);
        assert_eq!(r.confidential, 0.0);
        assert_eq!(r.secrecy, 0.0);
    }

    #[test]
    fn scalar_hand_case() {
        // M = N = 1, G = 1, h1 = 1, he = 1/2, w1 = 1, w2 = 0, Z = 0, v = 1,
        // unit noise everywhere.
        let channels = ChannelSet {
            g: CMat::from_element(1, 1, unit(1.0, 0.0)),
            h1: CVec::from_element(1, unit(1.0, 0.0)),
            h2: CVec::from_element(1, unit(1.0, 0.0)),
            he: CVec::from_element(1, unit(0.5, 0.0)),
        };
        let mut state = BeamState::quiescent(1, 1);
        state.w1[0] = unit(1.0, 0.0);
        let r = rates(&channels, &state, [1.0, 1.0, 1.0]);
        assert_relative_eq!(r.confidential, 1.0, max_relative = 1e-14);
        assert_relative_eq!(r.eavesdropper, 1.25f64.log2(), max_relative = 1e-14);
        assert_relative_eq!(r.secrecy, 1.0 - 1.25f64.log2(), max_relative = 1e-13);
    }

    #[test]
    fn cascade_identity_holds() {
        let (channels, state) = random_instance(3, 5, 3);
        let ops = cascade(&channels, &state.v);
        let phi = CMat::from_diagonal(&state.v);
        for (node, h) in [
            (Node::Subscriber, &channels.h1),
            (Node::User, &channels.h2),
            (Node::Eve, &channels.he),
        ] {
            let direct = (h.adjoint() * &phi * &channels.g).transpose().conjugate();
            let via_theta = ops.effective(node);
            assert!((direct - via_theta).norm() < 1e-12);
        }
    }

    #[test]
    fn cascade_all_ones_column_sums() {
        let (channels, _) = random_instance(4, 5, 3);
        let ones = CVec::from_element(5, unit(1.0, 0.0));
        let ops = cascade(&channels, &ones);
        let direct = (channels.h1.adjoint() * &channels.g).transpose().conjugate();
        assert!((ops.effective(Node::Subscriber) - direct).norm() < 1e-12);
    }

    #[test]
    fn trace_form_matches_quadratic_form() {
        let (channels, state) = random_instance(5, 4, 3);
        let ops = cascade(&channels, &state.v);
        let big_v = outer(ops.lift());
        let m11 = ops.m_beam(Node::Subscriber, &state.w1);
        let direct = {
            let g1 = ops.effective(Node::Subscriber);
            (g1.adjoint() * &state.w1)[(0, 0)].norm_sqr()
        };
        assert_relative_eq!(tr_prod(&big_v, &m11), direct, max_relative = 1e-10);
    }

    #[test]
    fn rate_trace_form_agrees_with_vector_form() {
        // Tr(H_k W) against |g_k^H w|^2 across all nodes of random instances.
        for seed in 0..20 {
            let (channels, state) = random_instance(100 + seed, 4, 3);
            let ops = cascade(&channels, &state.v);
            for node in Node::ALL {
                let h = ops.h_mat(node);
                let g = ops.effective(node);
                let w1_quad = (g.adjoint() * &state.w1)[(0, 0)].norm_sqr();
                assert_relative_eq!(
                    tr_prod(&h, &outer(&state.w1)),
                    w1_quad,
                    max_relative = 1e-10,
                    epsilon = 1e-12
                );
                let z_quad = quad_form(&state.an_cov, &g);
                assert_relative_eq!(
                    tr_prod(&h, &state.an_cov),
                    z_quad,
                    max_relative = 1e-10,
                    epsilon = 1e-12
                );
            }
        }
    }

    #[test]
    fn secrecy_invariant_under_global_phase_of_w1() {
        let (channels, mut state) = random_instance(6, 4, 3);
        let noise = [0.3, 0.4, 0.5];
        let before = rates(&channels, &state, noise);
        state.w1 *= C64::from_polar(1.0, 1.234);
        let after = rates(&channels, &state, noise);
        assert_relative_eq!(before.secrecy, after.secrecy, max_relative = 1e-12);
        assert_relative_eq!(before.total_power, after.total_power, max_relative = 1e-12);
    }

    #[test]
    fn artificial_noise_never_helps_the_eavesdropper() {
        for seed in 0..10 {
            let (channels, state) = random_instance(200 + seed, 4, 3);
            let noise = [0.3, 0.4, 0.5];
            let with_an = rates(&channels, &state, noise);
            let mut no_an = state.clone();
            no_an.an_cov = CMat::zeros(3, 3);
            let without = rates(&channels, &no_an, noise);
            assert!(with_an.eavesdropper <= without.eavesdropper + 1e-12);
        }
    }
}
