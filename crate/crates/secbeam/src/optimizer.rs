//! The outer alternating loop: confidential beamformer, then general
//! beamformer plus AN covariance, then IRS phases, until the transmit power
//! settles.
//!
//! Iterates are guarded two ways. Every recovered block must leave the full
//! state feasible for the exact rate constraints, and a block update is
//! accepted only if it does not raise that block's power past the
//! incumbent's, so the power trace is non-increasing by construction even
//! though Gaussian randomization is lossy.
//!
//! Channels span ~19 orders of magnitude between path gains and noise
//! floors, so the loop works in a normalized unit system (unit-RMS channels,
//! order-one noise) and converts back to watts at the boundary. Rates are
//! identical in both systems.

use crate::channel::{synthesize, ChannelSet, Scenario};
use crate::la::{hermitize, outer};
use crate::recovery::{
    extract_phases, rank_one_extract, rescale_to_feasibility, RandomizationOptions,
};
use crate::rng::StreamFactory;
use crate::sdp::SolveOptions;
use crate::secrecy::{cascade, rates, total_power, BeamState, Node, RateSummary};
use crate::subproblems::{
    solve_p2, solve_p3, solve_p3_relaxed, solve_p4, P4Objective, ScaOptions,
};
use crate::{C64, CMat, CVec};
use std::io::Write;

/// Convergence and sub-solver controls of the alternating loop.
#[derive(Debug, Clone)]
pub struct OptimizerOptions {
    /// Relative power-change threshold ending the loop.
    pub outer_tol: f64,
    pub max_outer: usize,
    pub sca: ScaOptions,
    pub randomization: RandomizationOptions,
    /// Slack used when checking the power trace for monotonicity.
    pub monotonicity_slack: f64,
    pub sdp: SolveOptions,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        OptimizerOptions {
            outer_tol: 1e-4,
            max_outer: 1000,
            sca: ScaOptions::default(),
            randomization: RandomizationOptions::default(),
            monotonicity_slack: 1e-3,
            sdp: SolveOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Converged,
    MaxIterations,
    Infeasible,
}

/// Everything a run produced.
#[derive(Debug, Clone)]
pub struct RunReport {
    /// Transmit power after each outer iteration, watts.
    pub power_trace: Vec<f64>,
    /// Final decision variables in physical units.
    pub state: BeamState,
    /// Rates at the final state, evaluated from the raw channels.
    pub rates: RateSummary,
    /// Sum of the relaxed subproblem objectives at the final state, watts;
    /// a lower bound on the achieved power.
    pub sdr_lower_bound: f64,
    pub status: RunStatus,
    /// Outer iterations used.
    pub iterations: usize,
    /// Relaxation gaps of the confidential-beamformer recoveries.
    pub recovery_gaps: Vec<f64>,
}

impl RunReport {
    /// Line-oriented record: `key value` pairs plus the power trace.
    pub fn write_lines<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "status {:?}", self.status)?;
        writeln!(w, "iterations {}", self.iterations)?;
        writeln!(w, "power_watts {:.12e}", self.rates.total_power)?;
        writeln!(w, "secrecy_rate {:.12}", self.rates.secrecy)?;
        writeln!(w, "general_rate {:.12}", self.rates.general)?;
        writeln!(w, "eavesdropper_rate {:.12}", self.rates.eavesdropper)?;
        writeln!(w, "sdr_lower_bound {:.12e}", self.sdr_lower_bound)?;
        for (i, p) in self.power_trace.iter().enumerate() {
            writeln!(w, "trace {} {:.12e}", i + 1, p)?;
        }
        Ok(())
    }
}

/// True iff the trace never rises by more than the slack:
/// `p[t+1] <= p[t] (1 + slack)` for all `t`.
pub fn check_monotone(power_trace: &[f64], slack: f64) -> bool {
    power_trace
        .windows(2)
        .all(|w| w[1] <= w[0] * (1.0 + slack))
}

// ---------------------------------------------------------------------------
// Unit normalization.
// ---------------------------------------------------------------------------

/// A channel set rescaled to unit RMS per link, with noise powers expressed
/// in an order-one power unit. Rates computed in this system equal the
/// physical ones; powers convert back through `power_unit`.
pub(crate) struct Normalized {
    pub channels: ChannelSet,
    pub noise: [f64; 3],
    /// Watts per normalized power unit.
    pub power_unit: f64,
}

fn rms<I: Iterator<Item = f64>>(sq_iter: I, len: usize) -> f64 {
    let s: f64 = sq_iter.sum();
    let r = (s / len.max(1) as f64).sqrt();
    if r > 0.0 {
        r
    } else {
        1.0
    }
}

impl Normalized {
    pub fn new(sc: &Scenario, raw: &ChannelSet) -> Self {
        let s_g = rms(raw.g.iter().map(|e| e.norm_sqr()), raw.g.len());
        let active = [
            raw.h1.iter().any(|e| e.norm_sqr() > 0.0),
            raw.h2.iter().any(|e| e.norm_sqr() > 0.0),
            raw.he.iter().any(|e| e.norm_sqr() > 0.0),
        ];
        let s_h = [
            rms(raw.h1.iter().map(|e| e.norm_sqr()), raw.h1.len()),
            rms(raw.h2.iter().map(|e| e.norm_sqr()), raw.h2.len()),
            rms(raw.he.iter().map(|e| e.norm_sqr()), raw.he.len()),
        ];
        let channels = ChannelSet {
            g: &raw.g * C64::new(1.0 / s_g, 0.0),
            h1: &raw.h1 * C64::new(1.0 / s_h[0], 0.0),
            h2: &raw.h2 * C64::new(1.0 / s_h[1], 0.0),
            he: &raw.he * C64::new(1.0 / s_h[2], 0.0),
        };
        let raw_noise = [sc.sigma1_sq, sc.sigma2_sq, sc.sigmae_sq];
        let scaled: Vec<f64> = raw_noise
            .iter()
            .zip(&s_h)
            .map(|(sig, sh)| sig / (s_g * s_g * sh * sh))
            .collect();
        // Only links that exist pick the unit; a severed link (zero channel
        // vector) contributes nothing to any rate, so its noise scale must
        // not distort the conditioning of the others.
        let power_unit = scaled
            .iter()
            .zip(active)
            .filter(|(_, a)| *a)
            .fold(0.0f64, |acc, (&s, _)| acc.max(s))
            .max(f64::MIN_POSITIVE);
        Normalized {
            channels,
            noise: [
                scaled[0] / power_unit,
                scaled[1] / power_unit,
                scaled[2] / power_unit,
            ],
            power_unit,
        }
    }

    /// Map a normalized state back to physical units.
    pub fn denormalize(&self, state: &BeamState) -> BeamState {
        let s = C64::new(self.power_unit.sqrt(), 0.0);
        BeamState {
            w1: &state.w1 * s,
            w2: &state.w2 * s,
            an_cov: &state.an_cov * C64::new(self.power_unit, 0.0),
            v: state.v.clone(),
        }
    }
}

// ---------------------------------------------------------------------------
// Initialization.
// ---------------------------------------------------------------------------

/// Smallest scaling of `dir` meeting `rate(c dir) = target` (monotone rate),
/// overshooting by at most ~1e-7.
fn min_scale_to_rate(dir: &CVec, rate: impl Fn(&CVec) -> f64, target: f64) -> CVec {
    if target <= 0.0 {
        return CVec::zeros(dir.len());
    }
    let at = |c: f64| rate(&(dir * C64::new(c, 0.0)));
    let mut hi = 1.0;
    while at(hi) < target {
        hi *= 2.0;
        assert!(hi < 1e150, "rate target unreachable along direction");
    }
    let mut lo = hi / 2.0;
    while lo > 1e-150 && at(lo) >= target {
        hi = lo;
        lo /= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if at(mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
        if (hi - lo) / hi < 1e-14 {
            break;
        }
    }
    dir * C64::new(hi * (1.0 + 1e-9), 0.0)
}

/// Starting point: random IRS phases, the general beamformer matched to its
/// effective channel at the minimum power meeting the QoS target alone, a
/// vanishing AN covariance, and no confidential beam yet.
pub fn initialize(sc: &Scenario, channels: &ChannelSet, streams: &StreamFactory) -> BeamState {
    initialize_with(
        channels,
        [sc.sigma1_sq, sc.sigma2_sq, sc.sigmae_sq],
        sc.delta2,
        streams,
    )
}

pub(crate) fn initialize_with(
    channels: &ChannelSet,
    noise: [f64; 3],
    delta2: f64,
    streams: &StreamFactory,
) -> BeamState {
    use rand::Rng;
    let (n, m) = channels.dims();
    let mut rng = streams.stream("init.phases");
    let v = CVec::from_fn(n, |_, _| {
        C64::from_polar(1.0, rng.random::<f64>() * std::f64::consts::TAU)
    });

    let ops = cascade(channels, &v);
    let g2 = ops.effective(Node::User);
    let dir = if g2.norm() > 0.0 {
        &g2 * C64::new(1.0 / g2.norm(), 0.0)
    } else {
        let mut e = CVec::zeros(m);
        e[0] = C64::new(1.0, 0.0);
        e
    };

    let base = BeamState {
        w1: CVec::zeros(m),
        w2: CVec::zeros(m),
        an_cov: CMat::zeros(m, m),
        v,
    };
    let qos_rate = |w: &CVec| {
        let mut s = base.clone();
        s.w2 = w.clone();
        rates(channels, &s, noise).general
    };
    let w2 = min_scale_to_rate(&dir, qos_rate, delta2);

    let eps = 1e-6 * w2.norm_squared();
    BeamState {
        w1: CVec::zeros(m),
        w2,
        an_cov: CMat::identity(m, m) * C64::new(eps, 0.0),
        v: base.v,
    }
}

// ---------------------------------------------------------------------------
// The loop.
// ---------------------------------------------------------------------------

/// Which updates a scheme runs each outer iteration.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LoopConfig {
    /// Update the IRS phases (off for the random-phase baseline).
    pub update_phases: bool,
    /// Keep an AN covariance (off for the no-AN baseline).
    pub with_an: bool,
}

impl LoopConfig {
    pub fn proposed() -> Self {
        LoopConfig {
            update_phases: true,
            with_an: true,
        }
    }
}

const FEAS_TOL: f64 = 1e-9;

pub(crate) struct LoopContext<'a> {
    pub channels: &'a ChannelSet,
    pub noise: [f64; 3],
    pub delta1: f64,
    pub delta2: f64,
}

impl LoopContext<'_> {
    fn feasible(&self, state: &BeamState, tol: f64) -> bool {
        let r = rates(self.channels, state, self.noise);
        r.secrecy >= self.delta1 - tol && r.general >= self.delta2 - tol
    }

    fn secrecy_at(&self, state: &BeamState) -> f64 {
        rates(self.channels, state, self.noise).secrecy
    }
}

/// Minimize the transmit power of the full scheme for one scenario.
pub fn minimize_power(sc: &Scenario, opts: &OptimizerOptions) -> RunReport {
    run_alternating(sc, &synthesize(sc), LoopConfig::proposed(), opts)
}

pub(crate) fn run_alternating(
    sc: &Scenario,
    raw: &ChannelSet,
    cfg: LoopConfig,
    opts: &OptimizerOptions,
) -> RunReport {
    sc.validate().expect("scenario must be valid");
    let norm = Normalized::new(sc, raw);
    let streams = StreamFactory::new(sc.seed);
    let ctx = LoopContext {
        channels: &norm.channels,
        noise: norm.noise,
        delta1: sc.delta1,
        delta2: sc.delta2,
    };

    let mut state = initialize_with(&norm.channels, norm.noise, sc.delta2, &streams);
    if !cfg.with_an {
        state.an_cov = CMat::zeros(sc.antennas, sc.antennas);
    }

    let mut rng_w1 = streams.stream("recover.w1");
    let mut rng_w2 = streams.stream("recover.w2");
    let mut rng_v = streams.stream("recover.v");

    let mut trace_norm: Vec<f64> = Vec::new();
    let mut gaps: Vec<f64> = Vec::new();

    // The initial state meets the QoS target with no headroom and carries no
    // confidential beam at all, so the strict subproblems would deadlock at
    // zero margin. Alternate slack-relaxed solves until the state is
    // mutually consistent.
    if !bootstrap(&ctx, &mut state, cfg, opts, &mut rng_w1, &mut rng_w2, &mut gaps) {
        return infeasible_report(sc, raw, &norm, state, trace_norm, gaps);
    }

    let mut lb_w1: Option<f64> = None;
    let mut lb_w2z: Option<f64> = None;
    let mut status = RunStatus::MaxIterations;
    let mut iterations = 0;

    for t in 1..=opts.max_outer {
        iterations = t;

        // (a) Confidential beamformer.
        if let Ok(out) = solve_p2(
            ctx.channels,
            &state.v,
            &state.w2,
            &state.an_cov,
            ctx.delta1,
            ctx.delta2,
            ctx.noise,
            false,
            &opts.sdp,
        ) {
            lb_w1 = Some(out.objective);
            if let Some((w1_new, gap)) =
                recover_w1(&ctx, &state, &out.w1_mat, &mut rng_w1, &opts.randomization, false)
            {
                if w1_new.norm_squared() <= state.w1.norm_squared() * (1.0 + 1e-9) {
                    state.w1 = w1_new;
                    gaps.push(gap);
                }
            }
        }

        // (b) General beamformer and AN covariance.
        let w2_anchor = outer(&state.w2);
        let z_anchor = if cfg.with_an {
            state.an_cov.clone()
        } else {
            CMat::zeros(sc.antennas, sc.antennas)
        };
        if let Ok(out) = solve_p3(
            ctx.channels,
            &state.v,
            &state.w1,
            ctx.delta1,
            ctx.delta2,
            ctx.noise,
            &w2_anchor,
            &z_anchor,
            &opts.sca,
            &opts.sdp,
            cfg.with_an,
        ) {
            lb_w2z = Some(out.objective);
            let z_new = if cfg.with_an {
                hermitize(&out.z)
            } else {
                CMat::zeros(sc.antennas, sc.antennas)
            };
            if let Some(w2_new) =
                recover_w2(&ctx, &state, &out.w2_mat, &z_new, &mut rng_w2, &opts.randomization, false)
            {
                let cand_power = w2_new.norm_squared() + z_new.trace().re;
                let inc_power = state.w2.norm_squared() + state.an_cov.trace().re;
                if cand_power <= inc_power * (1.0 + 1e-9) {
                    state.w2 = w2_new;
                    state.an_cov = z_new;
                }
            }
        }

        // (c) IRS phases.
        if cfg.update_phases {
            if let Ok(out) = solve_p4(
                ctx.channels,
                &state.w1,
                &state.w2,
                &state.an_cov,
                ctx.delta1,
                ctx.delta2,
                ctx.noise,
                &state.v,
                &opts.sca,
                &opts.sdp,
                P4Objective::MaxSecrecyMargin,
            ) {
                let incumbent_margin = ctx.secrecy_at(&state) - ctx.delta1;
                let score = |u: &CVec| {
                    let mut s = state.clone();
                    s.v = u.conjugate();
                    let r = rates(ctx.channels, &s, ctx.noise);
                    if r.secrecy >= ctx.delta1 - FEAS_TOL && r.general >= ctx.delta2 - FEAS_TOL {
                        Some(r.secrecy - ctx.delta1)
                    } else {
                        None
                    }
                };
                if let Ok(ex) = extract_phases(&out.v_mat, &opts.randomization, &mut rng_v, score)
                {
                    if let Some(m) = score(&ex.vector) {
                        if m > incumbent_margin - 1e-12 {
                            state.v = ex.vector.conjugate();
                        }
                    }
                }
            }
        }

        // (d) Evaluate and decide.
        if t == 1 && !ctx.feasible(&state, 1e-6) {
            return infeasible_report(sc, raw, &norm, state, trace_norm, gaps);
        }
        let p = total_power(&state);
        trace_norm.push(p);
        if t >= 2 {
            let prev = trace_norm[t - 2];
            let small = p.max(prev) < 1e-12;
            if small || (prev - p).abs() / p.max(1e-300) < opts.outer_tol {
                status = RunStatus::Converged;
                break;
            }
        }
    }

    // Lower bound from the relaxed objectives at the final state.
    let lb_w1 = lb_w1.or_else(|| {
        solve_p2(
            ctx.channels,
            &state.v,
            &state.w2,
            &state.an_cov,
            ctx.delta1,
            ctx.delta2,
            ctx.noise,
            false,
            &opts.sdp,
        )
        .ok()
        .map(|o| o.objective)
    });
    let sdr_lower_bound =
        (lb_w1.unwrap_or(0.0) + lb_w2z.unwrap_or(0.0)).min(total_power(&state)) * norm.power_unit;

    finish_report(
        sc,
        raw,
        &norm,
        state,
        trace_norm,
        gaps,
        status,
        iterations,
        sdr_lower_bound,
    )
}

/// Alternate slack-relaxed beamformer and QoS solves from the raw
/// initialization until the full state satisfies both rate constraints.
/// This is plain coupled power control: each relaxed pass meets its own
/// constraint exactly while paying a penalty on the other, and the pair
/// contracts to the joint fixed point whenever the targets are jointly
/// achievable.
fn bootstrap(
    ctx: &LoopContext,
    state: &mut BeamState,
    cfg: LoopConfig,
    opts: &OptimizerOptions,
    rng_w1: &mut impl rand::Rng,
    rng_w2: &mut impl rand::Rng,
    gaps: &mut Vec<f64>,
) -> bool {
    let dbg = std::env::var("SECBEAM_DEBUG").is_ok();
    let m = state.w1.len();
    for _round in 0..8 {
        // Confidential beam meeting the secrecy target at the current state.
        let Ok(out) = solve_p2(
            ctx.channels,
            &state.v,
            &state.w2,
            &state.an_cov,
            ctx.delta1,
            ctx.delta2,
            ctx.noise,
            true,
            &opts.sdp,
        ).map_err(|e| {
            if dbg {
                eprintln!("bootstrap: p2 {e:?}");
            }
        }) else {
            return false;
        };
        let Some((w1_new, gap)) =
            recover_w1(ctx, state, &out.w1_mat, rng_w1, &opts.randomization, true)
        else {
            if dbg {
                eprintln!("bootstrap: w1 recovery failed, tr={:.3e}", out.w1_mat.trace().re);
            }
            return false;
        };
        state.w1 = w1_new;
        gaps.push(gap);

        // General beam and AN meeting the QoS target under that beam.
        let w2_anchor = outer(&state.w2);
        let z_anchor = if cfg.with_an {
            state.an_cov.clone()
        } else {
            CMat::zeros(m, m)
        };
        let Ok((w2_mat, z_mat)) = solve_p3_relaxed(
            ctx.channels,
            &state.v,
            &state.w1,
            ctx.delta1,
            ctx.delta2,
            ctx.noise,
            &w2_anchor,
            &z_anchor,
            &opts.sdp,
            cfg.with_an,
        ).map_err(|e| {
            if dbg {
                eprintln!("bootstrap: p3 {e:?}");
            }
        }) else {
            return false;
        };
        let z_new = if cfg.with_an {
            hermitize(&z_mat)
        } else {
            CMat::zeros(m, m)
        };
        let Some(w2_new) =
            recover_w2(ctx, state, &w2_mat, &z_new, rng_w2, &opts.randomization, true)
        else {
            if dbg {
                eprintln!("bootstrap: w2 recovery failed, tr={:.3e}", w2_mat.trace().re);
            }
            return false;
        };
        state.w2 = w2_new;
        state.an_cov = z_new;

        if dbg {
            let r = rates(ctx.channels, state, ctx.noise);
            eprintln!(
                "bootstrap round {_round}: sec={:.6} gen={:.6} pow={:.4e}",
                r.secrecy,
                r.general,
                total_power(state)
            );
        }
        if ctx.feasible(state, 1e-7) {
            return true;
        }
    }

    // Final polish: scale the confidential beam back onto the secrecy
    // target, then re-check everything.
    let secrecy = |w: &CVec| {
        let mut s = state.clone();
        s.w1 = w.clone();
        rates(ctx.channels, &s, ctx.noise).secrecy
    };
    if let Ok(w1_new) = rescale_to_feasibility(&state.w1, secrecy, ctx.delta1) {
        state.w1 = w1_new;
    }
    ctx.feasible(state, 1e-6)
}

fn recover_w1(
    ctx: &LoopContext,
    state: &BeamState,
    w1_mat: &CMat,
    rng: &mut impl rand::Rng,
    ropts: &RandomizationOptions,
    first: bool,
) -> Option<(CVec, f64)> {
    let with_w1 = |w: &CVec| {
        let mut s = state.clone();
        s.w1 = w.clone();
        s
    };
    let admissible = |w: &CVec| {
        let r = rates(ctx.channels, &with_w1(w), ctx.noise);
        r.secrecy >= ctx.delta1 - FEAS_TOL && (first || r.general >= ctx.delta2 - FEAS_TOL)
    };
    let trace = w1_mat.trace().re;

    if let Ok(ex) = rank_one_extract(w1_mat, ropts, rng, admissible) {
        if admissible(&ex.vector) {
            return Some((ex.vector, ex.gap));
        }
        // The rank-one branch returns without consulting the predicate;
        // rescale it onto the secrecy target and re-check QoS.
        let secrecy = |w: &CVec| ctx.secrecy_at(&with_w1(w));
        if let Ok(scaled) = rescale_to_feasibility(&ex.vector, secrecy, ctx.delta1) {
            if admissible(&scaled) {
                let gap = scaled.norm_squared() / trace.max(f64::MIN_POSITIVE);
                return Some((scaled, gap));
            }
        }
        return None;
    }

    // No candidate met the constraints outright: take the bare extraction
    // and scale it up to the secrecy target.
    let ex = rank_one_extract(w1_mat, ropts, rng, |_| true).ok()?;
    let secrecy = |w: &CVec| ctx.secrecy_at(&with_w1(w));
    let scaled = rescale_to_feasibility(&ex.vector, secrecy, ctx.delta1).ok()?;
    if admissible(&scaled) {
        let gap = scaled.norm_squared() / trace.max(f64::MIN_POSITIVE);
        Some((scaled, gap))
    } else {
        None
    }
}

fn recover_w2(
    ctx: &LoopContext,
    state: &BeamState,
    w2_mat: &CMat,
    z_new: &CMat,
    rng: &mut impl rand::Rng,
    ropts: &RandomizationOptions,
    first: bool,
) -> Option<CVec> {
    let with_w2 = |w: &CVec| {
        let mut s = state.clone();
        s.w2 = w.clone();
        s.an_cov = z_new.clone();
        s
    };
    let admissible = |w: &CVec| {
        let r = rates(ctx.channels, &with_w2(w), ctx.noise);
        r.general >= ctx.delta2 - FEAS_TOL && (first || r.secrecy >= ctx.delta1 - FEAS_TOL)
    };

    if let Ok(ex) = rank_one_extract(w2_mat, ropts, rng, admissible) {
        if admissible(&ex.vector) {
            return Some(ex.vector);
        }
        let qos = |w: &CVec| rates(ctx.channels, &with_w2(w), ctx.noise).general;
        if let Ok(scaled) = rescale_to_feasibility(&ex.vector, qos, ctx.delta2) {
            if admissible(&scaled) {
                return Some(scaled);
            }
        }
        return None;
    }
    let ex = rank_one_extract(w2_mat, ropts, rng, |_| true).ok()?;
    let qos = |w: &CVec| rates(ctx.channels, &with_w2(w), ctx.noise).general;
    let scaled = rescale_to_feasibility(&ex.vector, qos, ctx.delta2).ok()?;
    admissible(&scaled).then_some(scaled)
}

#[allow(clippy::too_many_arguments)]
fn finish_report(
    sc: &Scenario,
    raw: &ChannelSet,
    norm: &Normalized,
    state: BeamState,
    trace_norm: Vec<f64>,
    gaps: Vec<f64>,
    status: RunStatus,
    iterations: usize,
    sdr_lower_bound: f64,
) -> RunReport {
    let physical = norm.denormalize(&state);
    let summary = rates(
        raw,
        &physical,
        [sc.sigma1_sq, sc.sigma2_sq, sc.sigmae_sq],
    );
    RunReport {
        power_trace: trace_norm.iter().map(|p| p * norm.power_unit).collect(),
        state: physical,
        rates: summary,
        sdr_lower_bound,
        status,
        iterations,
        recovery_gaps: gaps,
    }
}

fn infeasible_report(
    sc: &Scenario,
    raw: &ChannelSet,
    norm: &Normalized,
    state: BeamState,
    trace_norm: Vec<f64>,
    gaps: Vec<f64>,
) -> RunReport {
    let mut r = finish_report(sc, raw, norm, state, trace_norm, gaps, RunStatus::Infeasible, 1, 0.0);
    r.sdr_lower_bound = 0.0;
    r
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn check_monotone_examples() {
        assert!(check_monotone(&[5.0, 4.0, 3.0], 0.0));
        assert!(!check_monotone(&[3.0, 4.0], 0.0));
        assert!(check_monotone(&[3.0, 3.0029], 1e-3));
        assert!(check_monotone(&[1.0], 0.0));
    }

    #[test]
    fn initialization_contract() {
        let sc = Scenario::table_ii();
        let channels = synthesize(&sc);
        let streams = StreamFactory::new(sc.seed);
        let state = initialize(&sc, &channels, &streams);
        // Unit-modulus reflection coefficients by construction.
        for e in state.v.iter() {
            assert_relative_eq!(e.norm(), 1.0, epsilon = 1e-12);
        }
        // The general beamformer meets its QoS target alone.
        let mut probe = state.clone();
        probe.w1 = CVec::zeros(sc.antennas);
        probe.an_cov = CMat::zeros(sc.antennas, sc.antennas);
        let r = rates(
            &channels,
            &probe,
            [sc.sigma1_sq, sc.sigma2_sq, sc.sigmae_sq],
        );
        assert!(r.general >= sc.delta2 - 1e-6, "general rate {}", r.general);
        assert!(r.general <= sc.delta2 + 1e-3);
        // Deterministic per seed.
        let again = initialize(&sc, &channels, &streams);
        assert_eq!(state.w2, again.w2);
        assert_eq!(state.v, again.v);
    }

    #[test]
    fn zero_targets_drive_power_to_zero() {
        // Unit-scale physics so "zero power" is meaningful in absolute
        // terms: gains and noise near one instead of Table-II path losses.
        let mut sc = Scenario::table_ii();
        sc.antennas = 2;
        sc.irs_rows = 2;
        sc.irs_cols = 2;
        sc.bs = [0.0, 2.0];
        sc.subscriber = [1.0, 0.0];
        sc.user = [1.0, 1.0];
        sc.eavesdropper = [0.5, -0.5];
        sc.pathloss_coeff = 1.0;
        sc.sigma1_sq = 1.0;
        sc.sigma2_sq = 1.0;
        sc.sigmae_sq = 1.0;
        sc.delta1 = 0.0;
        sc.delta2 = 0.0;
        let report = minimize_power(&sc, &OptimizerOptions::default());
        assert_ne!(report.status, RunStatus::Infeasible);
        assert!(
            report.rates.total_power < 1e-6,
            "power {}",
            report.rates.total_power
        );
    }

    #[test]
    fn scalar_power_control_matches_closed_form() {
        // M = N = 1 with no eavesdropper: the two-rate power-control problem
        // has a closed-form optimum; the loop must land on it.
        let mut sc = Scenario::table_ii();
        sc.antennas = 1;
        sc.irs_rows = 1;
        sc.irs_cols = 1;
        sc.delta1 = 0.3;
        sc.delta2 = 0.3;
        sc.seed = 42;
        let mut raw = synthesize(&sc);
        raw.he = CVec::zeros(1);

        let opts = OptimizerOptions::default();
        let report = run_alternating(&sc, &raw, LoopConfig::proposed(), &opts);
        assert_eq!(report.status, RunStatus::Converged);

        // Closed form of the coupled pair
        //   u1 p1 = gamma1 (u1 p2 + sigma1^2),
        //   u2 p2 = gamma2 (u2 p1 + sigma2^2),
        // with u_k = |h_k v g|^2 and gamma = 2^delta - 1.
        let g = raw.g[(0, 0)];
        let u1 = (raw.h1[0].conj() * report.state.v[0] * g).norm_sqr();
        let u2 = (raw.h2[0].conj() * report.state.v[0] * g).norm_sqr();
        let gamma1 = (2f64).powf(sc.delta1) - 1.0;
        let gamma2 = (2f64).powf(sc.delta2) - 1.0;
        assert!(gamma1 * gamma2 < 1.0, "targets must be jointly feasible");
        let p1 = (gamma1 * sc.sigma1_sq / u1 + gamma1 * gamma2 * sc.sigma2_sq / u2)
            / (1.0 - gamma1 * gamma2);
        let p2 = gamma2 * p1 + gamma2 * sc.sigma2_sq / u2;
        let expected = p1 + p2;
        let achieved = report.rates.total_power;
        assert_relative_eq!(achieved, expected, max_relative = 2e-3);
    }
}
