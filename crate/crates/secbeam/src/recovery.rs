//! Rank-one extraction from relaxed solutions.
//!
//! A solved relaxation hands back a Hermitian PSD matrix; transmission needs
//! a vector. Numerically rank-one matrices yield their scaled dominant
//! eigenvector directly. Anything else goes through Gaussian randomization:
//! candidates `U S^(1/2) r` with standard complex Gaussian `r`, filtered by a
//! caller-supplied feasibility predicate. Beamformer recovery keeps the
//! feasible candidate of smallest norm; phase recovery projects candidates
//! onto the unit-modulus set first and keeps the best-scoring one.

use crate::la::complex_gaussian_vec;
use crate::{C64, CMat, CVec};
use nalgebra::SymmetricEigen;
use rand::Rng;
use thiserror::Error;

/// Ratio below which the second eigenvalue counts as numerically zero.
const RANK_ONE_RATIO: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct RandomizationOptions {
    /// Randomized candidates to draw when the matrix is not rank-one.
    pub candidates: usize,
    /// Slack available to feasibility predicates built by callers.
    pub feasibility_tol: f64,
    /// Label of the random stream feeding the candidate draws.
    pub stream: String,
}

impl Default for RandomizationOptions {
    fn default() -> Self {
        RandomizationOptions {
            candidates: 100,
            feasibility_tol: 1e-9,
            stream: "recovery".to_string(),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum RecoveryError {
    #[error("no randomized candidate satisfied the feasibility predicate")]
    NoFeasibleCandidate,
    #[error("no scaling achieves feasibility: the constraint saturates below the target")]
    Unbounded,
}

/// Extracted vector plus the relaxation gap it cost.
#[derive(Debug, Clone)]
pub struct Extraction {
    pub vector: CVec,
    /// `||w||^2 / Tr(X)`; 1.0 for the exact rank-one branch.
    pub gap: f64,
    pub randomized: bool,
}

struct Decomposition {
    eigvals: Vec<f64>,
    eigvecs: CMat,
    trace: f64,
}

fn decompose(x: &CMat) -> Decomposition {
    let eig = SymmetricEigen::new(crate::la::hermitize(x));
    let mut idx: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    idx.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .expect("eigenvalues of a Hermitian matrix are finite")
    });
    let eigvals: Vec<f64> = idx.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
    let n = x.nrows();
    let eigvecs = CMat::from_fn(n, n, |r, c| eig.eigenvectors[(r, idx[c])]);
    let trace = eigvals.iter().sum();
    Decomposition {
        eigvals,
        eigvecs,
        trace,
    }
}

fn dominant_vector(d: &Decomposition) -> CVec {
    d.eigvecs.column(0) * C64::new(d.eigvals[0].sqrt(), 0.0)
}

fn random_candidate<R: Rng + ?Sized>(d: &Decomposition, rng: &mut R) -> CVec {
    let n = d.eigvals.len();
    let r = complex_gaussian_vec(rng, n);
    let mut out = CVec::zeros(n);
    for k in 0..n {
        out += d.eigvecs.column(k) * (r[k] * C64::new(d.eigvals[k].sqrt(), 0.0));
    }
    out
}

/// Recover a beamforming vector from a PSD matrix.
///
/// Rank-one inputs return `sqrt(lambda_1) u_1`. Otherwise randomized
/// candidates are norm-capped at `sqrt(Tr X) (1 + 1e-9)` so the recovered
/// power never regresses past the relaxation trace, filtered by `feasible`,
/// and the smallest-norm survivor wins (ties broken by draw order).
pub fn rank_one_extract<R: Rng + ?Sized>(
    x: &CMat,
    opts: &RandomizationOptions,
    rng: &mut R,
    feasible: impl Fn(&CVec) -> bool,
) -> Result<Extraction, RecoveryError> {
    let d = decompose(x);
    if x.nrows() == 1 || d.eigvals[1] <= RANK_ONE_RATIO * d.eigvals[0] {
        let w = dominant_vector(&d);
        let gap = if d.trace > 0.0 {
            w.norm_squared() / d.trace
        } else {
            1.0
        };
        return Ok(Extraction {
            vector: w,
            gap,
            randomized: false,
        });
    }

    let cap = (d.trace * (1.0 + 1e-9)).sqrt();
    let mut best: Option<CVec> = None;
    for l in 0..opts.candidates.max(1) {
        // Deterministic quality floor first, then Gaussian draws.
        let mut w = if l == 0 {
            dominant_vector(&d)
        } else {
            random_candidate(&d, rng)
        };
        let norm = w.norm();
        if norm > cap {
            w *= C64::new(cap / norm, 0.0);
        }
        if !feasible(&w) {
            continue;
        }
        match &best {
            Some(b) if w.norm_squared() >= b.norm_squared() => {}
            _ => best = Some(w),
        }
    }
    let w = best.ok_or(RecoveryError::NoFeasibleCandidate)?;
    Ok(Extraction {
        gap: w.norm_squared() / d.trace,
        vector: w,
        randomized: true,
    })
}

/// Recover a unit-modulus phase vector from a unit-diagonal PSD matrix.
///
/// Candidates are projected onto the unit-modulus set before scoring;
/// `score` returns `None` for infeasible candidates and a figure of merit to
/// maximize otherwise.
pub fn extract_phases<R: Rng + ?Sized>(
    x: &CMat,
    opts: &RandomizationOptions,
    rng: &mut R,
    score: impl Fn(&CVec) -> Option<f64>,
) -> Result<Extraction, RecoveryError> {
    let d = decompose(x);
    let rank_one = x.nrows() == 1 || d.eigvals[1] <= RANK_ONE_RATIO * d.eigvals[0];
    let draws = if rank_one { 1 } else { opts.candidates.max(1) };

    let mut best: Option<(CVec, f64)> = None;
    for l in 0..draws {
        let raw = if l == 0 {
            dominant_vector(&d)
        } else {
            random_candidate(&d, rng)
        };
        let u = project_unit_modulus(&raw);
        if let Some(s) = score(&u) {
            match &best {
                Some((_, sb)) if s <= *sb => {}
                _ => best = Some((u, s)),
            }
        }
    }
    let (u, _) = best.ok_or(RecoveryError::NoFeasibleCandidate)?;
    Ok(Extraction {
        gap: u.norm_squared() / d.trace.max(f64::MIN_POSITIVE),
        vector: u,
        randomized: !rank_one,
    })
}

/// Entrywise `w_n / |w_n|`; zero entries map to 1 (their phase is undefined,
/// and the event has measure zero for the inputs seen here).
pub fn project_unit_modulus(w: &CVec) -> CVec {
    CVec::from_fn(w.len(), |n, _| {
        let e = w[n];
        let m = e.norm();
        if m == 0.0 {
            C64::new(1.0, 0.0)
        } else {
            e / m
        }
    })
}

/// Smallest scaling `c >= 1` of `w` that brings `rate(c w)` up to `target`.
///
/// The rate is monotone in the scale for the constraints handled here, so a
/// geometric bracket plus bisection lands in `[target, target + 1e-4]`. When
/// the rate saturates below the target, no scaling helps (the eavesdropper's
/// SINR scales along with the subscriber's) and `Unbounded` is returned.
pub fn rescale_to_feasibility(
    w: &CVec,
    rate: impl Fn(&CVec) -> f64,
    target: f64,
) -> Result<CVec, RecoveryError> {
    const RATE_SLACK: f64 = 1e-4;
    if rate(w) >= target {
        return Ok(w.clone());
    }
    let at = |c: f64| rate(&(w * C64::new(c, 0.0)));

    // Geometric growth until the target is bracketed or the rate stalls.
    let mut lo = 1.0;
    let mut hi = 2.0;
    let mut r_lo = at(lo);
    loop {
        let r_hi = at(hi);
        if r_hi >= target {
            break;
        }
        if r_hi - r_lo < 1e-12 || hi > 1e18 {
            return Err(RecoveryError::Unbounded);
        }
        lo = hi;
        r_lo = r_hi;
        hi *= 2.0;
    }

    // Bisect down into the slack band just above the target.
    for _ in 0..200 {
        if at(hi) <= target + RATE_SLACK {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if at(mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(w * C64::new(hi, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::la::{complex_gaussian_vec, outer};
    use crate::rng::StreamFactory;
    use approx::assert_relative_eq;

    #[test]
    fn exact_rank_one_returns_the_vector() {
        let mut rng = StreamFactory::new(1).stream("recovery-test");
        let v = complex_gaussian_vec(&mut rng, 4);
        let x = outer(&v);
        let ex =
            rank_one_extract(&x, &RandomizationOptions::default(), &mut rng, |_| true).unwrap();
        assert!(!ex.randomized);
        // Same vector up to a global phase.
        let overlap = (ex.vector.adjoint() * &v)[(0, 0)].norm();
        assert_relative_eq!(overlap, v.norm_squared(), max_relative = 1e-10);
        assert_relative_eq!(ex.gap, 1.0, max_relative = 1e-10);
    }

    #[test]
    fn rank_two_candidates_respect_trace_cap() {
        let mut rng = StreamFactory::new(2).stream("recovery-test");
        let x = CMat::identity(2, 2);
        let ex =
            rank_one_extract(&x, &RandomizationOptions::default(), &mut rng, |_| true).unwrap();
        assert!(ex.randomized);
        assert!(ex.vector.norm_squared() <= 2.0 + 1e-9);
    }

    #[test]
    fn no_feasible_candidate_is_reported() {
        let mut rng = StreamFactory::new(3).stream("recovery-test");
        let x = CMat::identity(3, 3);
        let err =
            rank_one_extract(&x, &RandomizationOptions::default(), &mut rng, |_| false)
                .unwrap_err();
        assert_eq!(err, RecoveryError::NoFeasibleCandidate);
    }

    #[test]
    fn projection_examples() {
        let w = CVec::from_vec(vec![C64::new(2.0, 0.0), C64::new(0.0, -3.0)]);
        let p = project_unit_modulus(&w);
        assert_relative_eq!(p[0].re, 1.0, epsilon = 1e-15);
        assert_relative_eq!(p[0].im, 0.0, epsilon = 1e-15);
        assert_relative_eq!(p[1].re, 0.0, epsilon = 1e-15);
        assert_relative_eq!(p[1].im, -1.0, epsilon = 1e-15);
    }

    #[test]
    fn projection_is_idempotent() {
        let mut rng = StreamFactory::new(4).stream("recovery-test");
        let w = complex_gaussian_vec(&mut rng, 6);
        let once = project_unit_modulus(&w);
        let twice = project_unit_modulus(&once);
        assert!((&once - &twice).norm() < 1e-15);
        for e in once.iter() {
            assert_relative_eq!(e.norm(), 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn projection_maps_zero_to_one() {
        let w = CVec::from_vec(vec![C64::new(0.0, 0.0)]);
        assert_eq!(project_unit_modulus(&w)[0], C64::new(1.0, 0.0));
    }

    #[test]
    fn rescale_returns_input_when_feasible() {
        let w = CVec::from_element(2, C64::new(1.0, 0.0));
        let out = rescale_to_feasibility(&w, |_| 10.0, 1.0).unwrap();
        assert_eq!(out, w);
    }

    #[test]
    fn rescale_scalar_monotone_oracle() {
        // Scalar secrecy rate with g1 = 1, ge = 0.3, unit noises: monotone
        // increasing in the scale, saturating above the target.
        let g1 = 1.0f64;
        let ge = 0.3f64;
        let rate = |w: &CVec| {
            let p = w.norm_squared();
            (1.0 + g1 * g1 * p).log2() - (1.0 + ge * ge * p).log2()
        };
        let target = 2.0;
        let w0 = CVec::from_element(1, C64::new(0.1, 0.0));
        assert!(rate(&w0) < target);
        let out = rescale_to_feasibility(&w0, rate, target).unwrap();
        let achieved = rate(&out);
        assert!(
            (target..=target + 1e-4).contains(&achieved),
            "achieved {achieved}"
        );
    }

    #[test]
    fn rescale_detects_dominant_eavesdropper() {
        // Eavesdropper channel aligned with and stronger than the
        // subscriber's: scaling cannot create secrecy.
        let rate = |w: &CVec| {
            let p = w.norm_squared();
            (1.0 + p).log2() - (1.0 + 4.0 * p).log2()
        };
        let w0 = CVec::from_element(1, C64::new(1.0, 0.0));
        assert_eq!(
            rescale_to_feasibility(&w0, rate, 0.5).unwrap_err(),
            RecoveryError::Unbounded
        );
    }

    #[test]
    fn extraction_is_deterministic_given_stream() {
        let x = CMat::identity(3, 3) * C64::new(2.0, 0.0);
        let opts = RandomizationOptions::default();
        let a = rank_one_extract(
            &x,
            &opts,
            &mut StreamFactory::new(5).stream(&opts.stream),
            |_| true,
        )
        .unwrap();
        let b = rank_one_extract(
            &x,
            &opts,
            &mut StreamFactory::new(5).stream(&opts.stream),
            |_| true,
        )
        .unwrap();
        assert_eq!(a.vector, b.vector);
    }

    #[test]
    fn phase_extraction_yields_unit_modulus() {
        let mut rng = StreamFactory::new(6).stream("recovery-test");
        // A blend of two phase profiles: rank two, unit diagonal.
        let u1 = project_unit_modulus(&complex_gaussian_vec(&mut rng, 4));
        let u2 = project_unit_modulus(&complex_gaussian_vec(&mut rng, 4));
        let x = (outer(&u1) + outer(&u2)) * C64::new(0.5, 0.0);
        let ex = extract_phases(&x, &RandomizationOptions::default(), &mut rng, |u| {
            Some(-(u - &u1).norm())
        })
        .unwrap();
        for e in ex.vector.iter() {
            assert_relative_eq!(e.norm(), 1.0, epsilon = 1e-12);
        }
    }
}
