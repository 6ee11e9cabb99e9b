//! The three convexified subproblems behind the alternating loop.
//!
//! With the other variables held fixed, each decision variable solves a
//! semidefinite program:
//!
//! - **Confidential beamformer**: lifting `w1` to `W1 = w1 w1^H` makes both
//!   rate constraints linear in `W1`; the secrecy constraint takes the form
//!   `Tr(H1 W1) - 2^d1 alpha Tr(He W1) + beta >= 0` with `alpha` the ratio of
//!   the subscriber's to the eavesdropper's interference-plus-noise at the
//!   incumbent.
//! - **General beamformer and AN covariance**: the secrecy rate is a
//!   difference of convex log terms in `(W2, Z)`. Successive convex
//!   approximation replaces it by its first-order expansion at an anchor and
//!   re-anchors; a backtracking safeguard keeps every accepted inner iterate
//!   feasible for the exact constraint, which also makes the inner objective
//!   sequence non-increasing.
//! - **IRS phase shifts**: the same treatment over the unit-diagonal lift
//!   `U = u u^H` of the (conjugated) reflection coefficients, either as a
//!   pure feasibility problem or maximizing the linearized secrecy surplus
//!   so later outer iterations can trade the slack for power.

use crate::la::{hermitize, outer, tr_prod};
use crate::channel::ChannelSet;
use crate::recovery::project_unit_modulus;
use crate::sdp::{solve, SdpProblem, SdpSolution, Sense, SolveOptions, SolveStatus};
use crate::secrecy::{cascade, CascadeOperators, Node};
use crate::{C64, CMat, CVec};
use thiserror::Error;

const LN2: f64 = std::f64::consts::LN_2;

/// Inner-loop controls for the SCA subproblems.
#[derive(Debug, Clone, Copy)]
pub struct ScaOptions {
    pub max_inner: usize,
    /// Relative objective-change tolerance ending the inner loop.
    pub tol: f64,
}

impl Default for ScaOptions {
    fn default() -> Self {
        ScaOptions {
            max_inner: 20,
            tol: 1e-5,
        }
    }
}

#[derive(Debug, Error)]
pub enum SubproblemError {
    #[error("subproblem is infeasible")]
    Infeasible,
    #[error("solver did not return a usable point: {0:?}")]
    Solver(SolveStatus),
    #[error(transparent)]
    Sdp(#[from] crate::sdp::SdpError),
}

fn usable(sol: &SdpSolution) -> Result<(), SubproblemError> {
    match sol.status {
        SolveStatus::Optimal => Ok(()),
        SolveStatus::MaxIterations if sol.duality_gap < 1e-4 => Ok(()),
        SolveStatus::Infeasible => Err(SubproblemError::Infeasible),
        s => Err(SubproblemError::Solver(s)),
    }
}

/// `H_k = g_k g_k^H` for all three nodes at reflection coefficients `v`.
pub fn h_mats(channels: &ChannelSet, v: &CVec) -> [CMat; 3] {
    let ops = cascade(channels, v);
    [
        ops.h_mat(Node::Subscriber),
        ops.h_mat(Node::User),
        ops.h_mat(Node::Eve),
    ]
}

// ---------------------------------------------------------------------------
// Confidential beamformer.
// ---------------------------------------------------------------------------

/// Coefficients of the lifted secrecy constraint at the incumbent.
#[derive(Debug, Clone, Copy)]
pub struct P2Coefficients {
    /// Interference-plus-noise ratio subscriber over eavesdropper.
    pub alpha: f64,
    /// Constant offset of the lifted secrecy constraint.
    pub beta: f64,
}

/// Compute `alpha` and `beta` from the incumbent `(w2, Z, v)`.
pub fn p2_coefficients(
    channels: &ChannelSet,
    v: &CVec,
    w2: &CVec,
    z: &CMat,
    delta1: f64,
    noise: [f64; 3],
) -> P2Coefficients {
    let [h1, _, he] = h_mats(channels, v);
    let w2m = outer(w2);
    let a_den = tr_prod(&h1, &w2m) + tr_prod(&h1, z) + noise[0];
    let b_den = tr_prod(&he, &w2m) + tr_prod(&he, z) + noise[2];
    let alpha = a_den / b_den;
    let beta = a_den - (2f64).powf(delta1) * alpha * b_den;
    P2Coefficients { alpha, beta }
}

#[derive(Debug, Clone)]
pub struct P2Outcome {
    /// Relaxed confidential beamformer `W1`.
    pub w1_mat: CMat,
    /// `Tr(W1)` at the optimum.
    pub objective: f64,
    /// QoS slack used by the relaxed variant; zero when inactive.
    pub qos_slack: f64,
}

/// Minimize `Tr(W1)` subject to the lifted secrecy and QoS constraints.
///
/// With `relax_qos` the QoS coupling gains a penalized slack; the first
/// outer iteration uses it because the initial general beamformer carries no
/// headroom for the confidential stream's interference.
#[allow(clippy::too_many_arguments)]
pub fn solve_p2(
    channels: &ChannelSet,
    v: &CVec,
    w2: &CVec,
    z: &CMat,
    delta1: f64,
    delta2: f64,
    noise: [f64; 3],
    relax_qos: bool,
    opts: &SolveOptions,
) -> Result<P2Outcome, SubproblemError> {
    let m = channels.g.ncols();
    let [h1, h2, he] = h_mats(channels, v);
    let coef = p2_coefficients(channels, v, w2, z, delta1, noise);

    let mut p = SdpProblem::new();
    let w1 = p.add_block(m);
    p.set_objective(w1, CMat::identity(m, m));

    // Secrecy: Tr((H1 - 2^d1 alpha He) W1) >= -beta.
    let d1 = &h1 - &he * C64::new((2f64).powf(delta1) * coef.alpha, 0.0);
    p.add_constraint(vec![(w1, d1)], Sense::Ge, -coef.beta);

    // QoS: gamma2 Tr(H2 W1) <= Tr(H2 W2) - gamma2 (Tr(H2 Z) + sigma2^2).
    let gamma2 = (2f64).powf(delta2) - 1.0;
    let mut slack_used = false;
    if gamma2 > 0.0 {
        let w2m = outer(w2);
        let budget = (tr_prod(&h2, &w2m) - gamma2 * (tr_prod(&h2, z) + noise[1])) / gamma2;
        if relax_qos {
            let s = p.add_block(1);
            slack_used = true;
            p.add_constraint(
                vec![
                    (w1, h2.clone()),
                    (s, CMat::from_element(1, 1, C64::new(-1.0, 0.0))),
                ],
                Sense::Le,
                budget,
            );
            p.set_objective(
                s,
                CMat::from_element(1, 1, C64::new(1e4 * (1.0 + budget.abs()), 0.0)),
            );
        } else {
            p.add_constraint(vec![(w1, h2.clone())], Sense::Le, budget);
        }
    }

    let sol = solve(&p, opts)?;
    usable(&sol)?;
    let w1_mat = hermitize(&sol.blocks[0]);
    let qos_slack = if slack_used {
        sol.blocks[1][(0, 0)].re
    } else {
        0.0
    };
    Ok(P2Outcome {
        objective: w1_mat.trace().re,
        w1_mat,
        qos_slack,
    })
}

// ---------------------------------------------------------------------------
// General beamformer + AN covariance.
// ---------------------------------------------------------------------------

/// Gradients of the two log terms that carry the confidential stream.
#[derive(Debug, Clone)]
pub struct NGradients {
    pub n1: CMat,
    pub n4: CMat,
}

/// Affine link budgets of the `(W2, Z)` problem at fixed `w1` and `v`.
pub struct P3Terms {
    h1: CMat,
    h2: CMat,
    he: CMat,
    /// `|g1^H w1|^2`.
    a1: f64,
    /// `|g2^H w1|^2`.
    a2: f64,
    /// `|ge^H w1|^2`.
    be: f64,
    noise: [f64; 3],
}

impl P3Terms {
    pub fn new(channels: &ChannelSet, v: &CVec, w1: &CVec, noise: [f64; 3]) -> Self {
        let ops = cascade(channels, v);
        let sig = |node: Node| {
            let g = ops.effective(node);
            (g.adjoint() * w1)[(0, 0)].norm_sqr()
        };
        P3Terms {
            h1: ops.h_mat(Node::Subscriber),
            h2: ops.h_mat(Node::User),
            he: ops.h_mat(Node::Eve),
            a1: sig(Node::Subscriber),
            a2: sig(Node::User),
            be: sig(Node::Eve),
            noise,
        }
    }

    fn budgets(&self, w2: &CMat, z: &CMat) -> [f64; 4] {
        let a_den = tr_prod(&self.h1, w2) + tr_prod(&self.h1, z) + self.noise[0];
        let b_den = tr_prod(&self.he, w2) + tr_prod(&self.he, z) + self.noise[2];
        [a_den + self.a1, a_den, b_den + self.be, b_den]
    }

    /// The four log terms `N1..N4`.
    pub fn n_values(&self, w2: &CMat, z: &CMat) -> [f64; 4] {
        self.budgets(w2, z).map(|b| -b.log2())
    }

    /// Secrecy rate of the lifted `(W2, Z)` problem: `-N1 + N2 + N3 - N4`.
    pub fn secrecy_lifted(&self, w2: &CMat, z: &CMat) -> f64 {
        let [n1, n2, n3, n4] = self.n_values(w2, z);
        -n1 + n2 + n3 - n4
    }

    /// Gradients of `N1` and `N4` at the anchor; each matrix serves as both
    /// the `W2`- and the `Z`-gradient.
    pub fn grad_n(&self, w2: &CMat, z: &CMat) -> NGradients {
        let [a_num, _, _, b_den] = self.budgets(w2, z);
        NGradients {
            n1: &self.h1 * C64::new(-1.0 / (LN2 * a_num), 0.0),
            n4: &self.he * C64::new(-1.0 / (LN2 * b_den), 0.0),
        }
    }

    /// Combined gradient of the lifted secrecy rate (same matrix for `W2`
    /// and `Z`).
    fn secrecy_gradient(&self, w2: &CMat, z: &CMat) -> CMat {
        let [a_num, a_den, b_num, b_den] = self.budgets(w2, z);
        let c1 = (1.0 / a_num - 1.0 / a_den) / LN2;
        let ce = (1.0 / b_den - 1.0 / b_num) / LN2;
        &self.h1 * C64::new(c1, 0.0) + &self.he * C64::new(ce, 0.0)
    }

    /// True QoS margin `Tr(H2 W2) - gamma2 (Tr(H2 Z) + a2 + sigma2^2)`.
    pub fn qos_margin(&self, w2: &CMat, z: &CMat, delta2: f64) -> f64 {
        let gamma2 = (2f64).powf(delta2) - 1.0;
        tr_prod(&self.h2, w2) - gamma2 * (tr_prod(&self.h2, z) + self.a2 + self.noise[1])
    }
}

/// Spec-level entry point: gradients of `N1`/`N4` at `(anchor_w2, anchor_z)`.
pub fn grad_n(
    channels: &ChannelSet,
    v: &CVec,
    w1: &CVec,
    anchor_w2: &CMat,
    anchor_z: &CMat,
    noise: [f64; 3],
) -> NGradients {
    P3Terms::new(channels, v, w1, noise).grad_n(anchor_w2, anchor_z)
}

#[derive(Debug, Clone)]
pub struct P3Outcome {
    pub w2_mat: CMat,
    pub z: CMat,
    /// `Tr(W2) + Tr(Z)` at the returned point.
    pub objective: f64,
    /// Objective after each accepted inner iterate (non-increasing).
    pub inner_objectives: Vec<f64>,
    pub inner_iterations: usize,
}

/// Inner SCA loop for the general beamformer and the AN covariance.
///
/// Every accepted iterate satisfies the exact secrecy constraint of the
/// lifted problem: when the linearization overshoots, the step is shortened
/// toward the anchor (the constraint is exact there), which also preserves
/// the QoS constraint and keeps the objective non-increasing. With
/// `with_an = false` the AN covariance is pinned to zero and dropped from
/// the program.
#[allow(clippy::too_many_arguments)]
pub fn solve_p3(
    channels: &ChannelSet,
    v: &CVec,
    w1: &CVec,
    delta1: f64,
    delta2: f64,
    noise: [f64; 3],
    anchor_w2: &CMat,
    anchor_z: &CMat,
    sca: &ScaOptions,
    opts: &SolveOptions,
    with_an: bool,
) -> Result<P3Outcome, SubproblemError> {
    let m = channels.g.ncols();
    let terms = P3Terms::new(channels, v, w1, noise);

    let mut w2_t = hermitize(anchor_w2);
    let mut z_t = if with_an {
        hermitize(anchor_z)
    } else {
        CMat::zeros(m, m)
    };

    // The surrogate is exact at its anchor, so the anchor must satisfy the
    // true constraint. Restore it with a penalized slack when it does not
    // (possible right after rank-one recovery).
    if terms.secrecy_lifted(&w2_t, &z_t) < delta1 - 1e-9 {
        let restored =
            p3_step(&terms, delta1, delta2, m, &w2_t, &z_t, opts, with_an, true)?;
        w2_t = restored.0;
        z_t = restored.1;
        if terms.secrecy_lifted(&w2_t, &z_t) < delta1 - 1e-6 {
            return Err(SubproblemError::Infeasible);
        }
    }

    let mut objective = w2_t.trace().re + z_t.trace().re;
    let mut inner_objectives = vec![objective];
    let mut iterations = 0;

    for it in 0..sca.max_inner {
        iterations = it + 1;
        let step = match p3_step(&terms, delta1, delta2, m, &w2_t, &z_t, opts, with_an, false) {
            Ok(s) => s,
            Err(SubproblemError::Infeasible) if it == 0 => {
                return Err(SubproblemError::Infeasible)
            }
            Err(_) => break,
        };
        let (w2_new, z_new) = step;

        // Backtrack toward the anchor until the exact constraint holds.
        let mut accepted = None;
        let mut theta = 1.0;
        for _ in 0..20 {
            let w2_c = blend(&w2_t, &w2_new, theta);
            let z_c = blend(&z_t, &z_new, theta);
            if terms.secrecy_lifted(&w2_c, &z_c) >= delta1 - 1e-9 {
                accepted = Some((w2_c, z_c));
                break;
            }
            theta *= 0.5;
        }
        let Some((w2_c, z_c)) = accepted else { break };
        let new_objective = w2_c.trace().re + z_c.trace().re;
        let drop = objective - new_objective;
        w2_t = w2_c;
        z_t = z_c;
        objective = new_objective;
        inner_objectives.push(objective);
        if drop.abs() <= sca.tol * objective.abs().max(1e-12) {
            break;
        }
    }

    Ok(P3Outcome {
        w2_mat: w2_t,
        z: z_t,
        objective,
        inner_objectives,
        inner_iterations: iterations,
    })
}

/// One slack-relaxed linearized solve at the anchor, for bootstrapping a
/// mutually consistent starting state: the QoS constraint binds exactly
/// while the secrecy surrogate may be violated at a heavy penalty.
#[allow(clippy::too_many_arguments)]
pub fn solve_p3_relaxed(
    channels: &ChannelSet,
    v: &CVec,
    w1: &CVec,
    delta1: f64,
    delta2: f64,
    noise: [f64; 3],
    anchor_w2: &CMat,
    anchor_z: &CMat,
    opts: &SolveOptions,
    with_an: bool,
) -> Result<(CMat, CMat), SubproblemError> {
    let m = channels.g.ncols();
    let terms = P3Terms::new(channels, v, w1, noise);
    let w2_t = hermitize(anchor_w2);
    let z_t = if with_an {
        hermitize(anchor_z)
    } else {
        CMat::zeros(m, m)
    };
    p3_step(&terms, delta1, delta2, m, &w2_t, &z_t, opts, with_an, true)
}

fn blend(a: &CMat, b: &CMat, theta: f64) -> CMat {
    a * C64::new(1.0 - theta, 0.0) + b * C64::new(theta, 0.0)
}

/// One linearized solve at the given anchor; `restore` adds a penalized
/// slack on the secrecy constraint to pull an infeasible anchor back in.
#[allow(clippy::too_many_arguments)]
fn p3_step(
    terms: &P3Terms,
    delta1: f64,
    delta2: f64,
    m: usize,
    w2_t: &CMat,
    z_t: &CMat,
    opts: &SolveOptions,
    with_an: bool,
    restore: bool,
) -> Result<(CMat, CMat), SubproblemError> {
    let gamma2 = (2f64).powf(delta2) - 1.0;
    let g = terms.secrecy_gradient(w2_t, z_t);
    let r0 = terms.secrecy_lifted(w2_t, z_t);
    let rhs1 = delta1 - r0 + tr_prod(&g, w2_t) + tr_prod(&g, z_t);

    let mut p = SdpProblem::new();
    let w2b = p.add_block(m);
    let zb = with_an.then(|| p.add_block(m));
    p.set_objective(w2b, CMat::identity(m, m));
    if let Some(zb) = zb {
        p.set_objective(zb, CMat::identity(m, m));
    }

    let mut secrecy_terms = vec![(w2b, g.clone())];
    if let Some(zb) = zb {
        secrecy_terms.push((zb, g.clone()));
    }
    if restore {
        let s = p.add_block(1);
        p.set_objective(
            s,
            CMat::from_element(1, 1, C64::new(1e4 * (1.0 + rhs1.abs()), 0.0)),
        );
        secrecy_terms.push((s, CMat::from_element(1, 1, C64::new(1.0, 0.0))));
    }
    p.add_constraint(secrecy_terms, Sense::Ge, rhs1);

    if gamma2 > 0.0 {
        let mut qos_terms = vec![(w2b, terms.h2.clone())];
        if let Some(zb) = zb {
            qos_terms.push((zb, &terms.h2 * C64::new(-gamma2, 0.0)));
        }
        p.add_constraint(qos_terms, Sense::Ge, gamma2 * (terms.a2 + terms.noise[1]));
    }

    let sol = solve(&p, opts)?;
    usable(&sol)?;
    let w2_new = hermitize(&sol.blocks[0]);
    let z_new = if with_an {
        hermitize(&sol.blocks[1])
    } else {
        CMat::zeros(m, m)
    };
    Ok((w2_new, z_new))
}

// ---------------------------------------------------------------------------
// IRS phase shifts.
// ---------------------------------------------------------------------------

/// Gradients of the two log terms of the phase-shift problem.
#[derive(Debug, Clone)]
pub struct TGradients {
    pub t1: CMat,
    pub t4: CMat,
}

/// `T1(U) = -log2(P_t Tr(U O_1) + sigma1^2)`.
pub fn t1_value(ops: &CascadeOperators, p_t: f64, u: &CMat, sigma1_sq: f64) -> f64 {
    let o1 = ops.o_mat(Node::Subscriber);
    -(p_t * tr_prod(u, &o1) + sigma1_sq).log2()
}

/// `T4(U) = -log2(Tr(U M_e2) + Tr(U M_ez) + sigmae^2)`.
pub fn t4_value(
    ops: &CascadeOperators,
    w2: &CVec,
    z: &CMat,
    u: &CMat,
    sigmae_sq: f64,
) -> f64 {
    let me2 = ops.m_beam(Node::Eve, w2);
    let mez = ops.m_cov(Node::Eve, z);
    -(tr_prod(u, &me2) + tr_prod(u, &mez) + sigmae_sq).log2()
}

/// Exact gradients of `T1` and `T4` at anchor `U`.
pub fn grad_t(
    ops: &CascadeOperators,
    w2: &CVec,
    z: &CMat,
    p_t: f64,
    u: &CMat,
    noise: [f64; 3],
) -> TGradients {
    let o1 = ops.o_mat(Node::Subscriber);
    let den1 = p_t * tr_prod(u, &o1) + noise[0];
    let me2 = ops.m_beam(Node::Eve, w2);
    let mez = ops.m_cov(Node::Eve, z);
    let den4 = tr_prod(u, &me2) + tr_prod(u, &mez) + noise[2];
    TGradients {
        t1: o1 * C64::new(-p_t / (LN2 * den1), 0.0),
        t4: (me2 + mez) * C64::new(-1.0 / (LN2 * den4), 0.0),
    }
}

/// Objective of the phase-shift subproblem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum P4Objective {
    /// Any point satisfying the linearized constraints.
    Feasibility,
    /// Maximize the linearized secrecy surplus so the next beamformer pass
    /// can shed power.
    MaxSecrecyMargin,
}

/// Quadratic-form operators of the phase problem at fixed `(w1, w2, Z)`.
pub struct P4Terms {
    /// Signal-plus-interference operator at the subscriber.
    s1: CMat,
    /// Interference operator at the subscriber.
    d1: CMat,
    /// Signal-plus-interference operator at the eavesdropper.
    se: CMat,
    /// Interference operator at the eavesdropper.
    de: CMat,
    m21: CMat,
    m22: CMat,
    m2z: CMat,
    noise: [f64; 3],
}

impl P4Terms {
    pub fn new(
        channels: &ChannelSet,
        w1: &CVec,
        w2: &CVec,
        z: &CMat,
        noise: [f64; 3],
    ) -> Self {
        // Theta does not depend on the reflection coefficients; any v works.
        let ones = CVec::from_element(channels.g.nrows(), C64::new(1.0, 0.0));
        let ops = cascade(channels, &ones);
        let m11 = ops.m_beam(Node::Subscriber, w1);
        let m12 = ops.m_beam(Node::Subscriber, w2);
        let m1z = ops.m_cov(Node::Subscriber, z);
        let me1 = ops.m_beam(Node::Eve, w1);
        let me2 = ops.m_beam(Node::Eve, w2);
        let mez = ops.m_cov(Node::Eve, z);
        P4Terms {
            s1: &m11 + &m12 + &m1z,
            d1: m12 + m1z,
            se: &me1 + &me2 + &mez,
            de: me2 + mez,
            m21: ops.m_beam(Node::User, w1),
            m22: ops.m_beam(Node::User, w2),
            m2z: ops.m_cov(Node::User, z),
            noise,
        }
    }

    fn budgets(&self, u: &CMat) -> [f64; 4] {
        [
            tr_prod(u, &self.s1) + self.noise[0],
            tr_prod(u, &self.d1) + self.noise[0],
            tr_prod(u, &self.se) + self.noise[2],
            tr_prod(u, &self.de) + self.noise[2],
        ]
    }

    /// Secrecy rate of the lifted phase problem; exact at rank-one `U`.
    pub fn secrecy_lifted(&self, u: &CMat) -> f64 {
        let [a_num, a_den, b_num, b_den] = self.budgets(u);
        a_num.log2() - a_den.log2() - b_num.log2() + b_den.log2()
    }

    fn secrecy_gradient(&self, u: &CMat) -> CMat {
        let [a_num, a_den, b_num, b_den] = self.budgets(u);
        (&self.s1 * C64::new(1.0 / a_num, 0.0) - &self.d1 * C64::new(1.0 / a_den, 0.0)
            - &self.se * C64::new(1.0 / b_num, 0.0)
            + &self.de * C64::new(1.0 / b_den, 0.0))
            * C64::new(1.0 / LN2, 0.0)
    }

    /// QoS margin `Tr(U M22) - gamma2 (Tr(U M21) + Tr(U M2z) + sigma2^2)`.
    pub fn qos_margin(&self, u: &CMat, delta2: f64) -> f64 {
        let gamma2 = (2f64).powf(delta2) - 1.0;
        tr_prod(u, &self.m22)
            - gamma2 * (tr_prod(u, &self.m21) + tr_prod(u, &self.m2z) + self.noise[1])
    }
}

#[derive(Debug, Clone)]
pub struct P4Outcome {
    /// Relaxed lift `U` (unit diagonal, PSD). The physical reflection
    /// coefficients are the conjugate of the recovered phase vector.
    pub v_mat: CMat,
    /// Lifted secrecy rate at the returned `U`.
    pub lifted_secrecy: f64,
    /// Lifted secrecy after each accepted inner iterate (non-decreasing).
    pub inner_margins: Vec<f64>,
    pub inner_iterations: usize,
}

/// Inner SCA loop for the IRS phase shifts over the unit-diagonal PSD lift.
#[allow(clippy::too_many_arguments)]
pub fn solve_p4(
    channels: &ChannelSet,
    w1: &CVec,
    w2: &CVec,
    z: &CMat,
    delta1: f64,
    delta2: f64,
    noise: [f64; 3],
    anchor_v: &CVec,
    sca: &ScaOptions,
    opts: &SolveOptions,
    mode: P4Objective,
) -> Result<P4Outcome, SubproblemError> {
    let n = channels.g.nrows();
    if n == 1 {
        // A single element has no freedom; the lift is the scalar 1.
        let u = CMat::identity(1, 1);
        let terms = P4Terms::new(channels, w1, w2, z, noise);
        return Ok(P4Outcome {
            lifted_secrecy: terms.secrecy_lifted(&u),
            v_mat: u,
            inner_margins: vec![],
            inner_iterations: 0,
        });
    }

    let terms = P4Terms::new(channels, w1, w2, z, noise);
    let gamma2 = (2f64).powf(delta2) - 1.0;
    let lift = project_unit_modulus(&anchor_v.conjugate());
    let mut u_t = outer(&lift);
    let mut margin = terms.secrecy_lifted(&u_t);
    let mut inner_margins = vec![margin];
    let mut iterations = 0;

    for it in 0..sca.max_inner {
        iterations = it + 1;
        let g = terms.secrecy_gradient(&u_t);
        let r0 = terms.secrecy_lifted(&u_t);
        let rhs1 = delta1 - r0 + tr_prod(&g, &u_t);

        let mut p = SdpProblem::new();
        let ub = p.add_unit_diag_block(n);
        if mode == P4Objective::MaxSecrecyMargin {
            p.set_objective(ub, -&g);
        }
        p.add_constraint(vec![(ub, g.clone())], Sense::Ge, rhs1);
        if gamma2 > 0.0 {
            let qos = &terms.m22 - (&terms.m21 + &terms.m2z) * C64::new(gamma2, 0.0);
            p.add_constraint(vec![(ub, qos)], Sense::Ge, gamma2 * noise[1]);
        }
        let sol = solve(&p, opts)?;
        if it == 0 && matches!(sol.status, SolveStatus::Infeasible) {
            return Err(SubproblemError::Infeasible);
        }
        if usable(&sol).is_err() {
            break;
        }
        let u_new = hermitize(&sol.blocks[0]);

        // Accept the blend with the best exact lifted secrecy; the QoS
        // constraint is linear and holds at both endpoints.
        let mut best_theta = 0.0;
        let mut best_margin = margin;
        for theta in [1.0, 0.5, 0.25] {
            let cand = blend(&u_t, &u_new, theta);
            let m = terms.secrecy_lifted(&cand);
            if m > best_margin {
                best_margin = m;
                best_theta = theta;
            }
        }
        if mode == P4Objective::Feasibility {
            u_t = u_new;
            margin = terms.secrecy_lifted(&u_t);
            inner_margins.push(margin);
            break;
        }
        if best_theta == 0.0 || best_margin <= margin + sca.tol * margin.abs().max(1e-9) {
            if best_theta > 0.0 {
                u_t = blend(&u_t, &u_new, best_theta);
                margin = best_margin;
                inner_margins.push(margin);
            }
            break;
        }
        u_t = blend(&u_t, &u_new, best_theta);
        margin = best_margin;
        inner_margins.push(margin);
    }

    Ok(P4Outcome {
        v_mat: u_t,
        lifted_secrecy: margin,
        inner_margins,
        inner_iterations: iterations,
    })
}
