//! Dense semidefinite programming over Hermitian PSD blocks with linear
//! trace constraints.
//!
//! Problems are stated in the complex domain:
//!
//! ```text
//! min  sum_j Tr(C_j X_j)
//! s.t. sum_j Tr(A_ij X_j)  >=|=|<=  b_i
//!      X_j Hermitian PSD, optionally with unit diagonal
//! ```
//!
//! Each Hermitian block is lowered onto its real symmetric embedding (traces
//! compensated by 1/2), inequalities gain scalar slack blocks, unit-diagonal
//! flags become per-entry equality constraints, and the result is handed to
//! the interior-point core in [`ipm`].

pub mod embed;
mod ipm;

use crate::la::{hermitize, tr_prod};
use crate::CMat;
use embed::{embed_hermitian, extract_hermitian};
use ipm::{solve_real, RealOptions, RealProblem, RealStatus};
use std::io::Write;
use thiserror::Error;

/// Handle to a Hermitian matrix block of a problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockId(usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Ge,
    Eq,
    Le,
}

impl Sense {
    fn symbol(self) -> &'static str {
        match self {
            Sense::Ge => ">=",
            Sense::Eq => "==",
            Sense::Le => "<=",
        }
    }
}

#[derive(Debug, Error)]
pub enum SdpError {
    #[error("block dimension must be at least 1")]
    EmptyBlock,
    #[error("matrix for block {0} has wrong dimensions")]
    DimensionMismatch(usize),
    #[error("problem has no blocks")]
    NoBlocks,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    MaxIterations,
    NumericalFailure,
}

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Dual-objective divergence level treated as primal infeasibility.
    pub divergence_threshold: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-7,
            max_iter: 200,
            divergence_threshold: 1e10,
        }
    }
}

struct Block {
    dim: usize,
    unit_diag: bool,
    objective: Option<CMat>,
}

struct Constraint {
    terms: Vec<(usize, CMat)>,
    sense: Sense,
    rhs: f64,
}

/// A Hermitian SDP under construction.
pub struct SdpProblem {
    blocks: Vec<Block>,
    constraints: Vec<Constraint>,
}

impl Default for SdpProblem {
    fn default() -> Self {
        Self::new()
    }
}

impl SdpProblem {
    pub fn new() -> Self {
        SdpProblem {
            blocks: Vec::new(),
            constraints: Vec::new(),
        }
    }

    /// Add a Hermitian PSD block of the given complex dimension.
    pub fn add_block(&mut self, dim: usize) -> BlockId {
        self.blocks.push(Block {
            dim,
            unit_diag: false,
            objective: None,
        });
        BlockId(self.blocks.len() - 1)
    }

    /// Add a block whose diagonal is pinned to one.
    pub fn add_unit_diag_block(&mut self, dim: usize) -> BlockId {
        let id = self.add_block(dim);
        self.blocks[id.0].unit_diag = true;
        id
    }

    /// Set the objective coefficient `C_j` of a block (replaces any previous
    /// setting). Blocks without a coefficient contribute nothing.
    pub fn set_objective(&mut self, block: BlockId, c: CMat) {
        self.blocks[block.0].objective = Some(hermitize(&c));
    }

    /// Add `sum_j Tr(A_j X_j) (sense) rhs`.
    pub fn add_constraint(&mut self, terms: Vec<(BlockId, CMat)>, sense: Sense, rhs: f64) {
        self.constraints.push(Constraint {
            terms: terms
                .into_iter()
                .map(|(id, a)| (id.0, hermitize(&a)))
                .collect(),
            sense,
            rhs,
        });
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    fn validate(&self) -> Result<(), SdpError> {
        if self.blocks.is_empty() {
            return Err(SdpError::NoBlocks);
        }
        for b in &self.blocks {
            if b.dim == 0 {
                return Err(SdpError::EmptyBlock);
            }
            if let Some(c) = &b.objective {
                if c.nrows() != b.dim || c.ncols() != b.dim {
                    return Err(SdpError::DimensionMismatch(b.dim));
                }
            }
        }
        for con in &self.constraints {
            for (j, a) in &con.terms {
                let dim = self.blocks[*j].dim;
                if a.nrows() != dim || a.ncols() != dim {
                    return Err(SdpError::DimensionMismatch(*j));
                }
            }
        }
        Ok(())
    }

    /// Plain-text dump: dimension header plus row-major entries, mainly for
    /// offline debugging of a failing solve.
    pub fn dump_text<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "sdp blocks={} constraints={}", self.blocks.len(), self.constraints.len())?;
        for (j, b) in self.blocks.iter().enumerate() {
            writeln!(
                w,
                "block {} dim={} unit_diag={}",
                j,
                b.dim,
                if b.unit_diag { 1 } else { 0 }
            )?;
            if let Some(c) = &b.objective {
                writeln!(w, "objective {}", j)?;
                write_matrix(w, c)?;
            }
        }
        for con in &self.constraints {
            writeln!(
                w,
                "constraint {} {:.17e} terms={}",
                con.sense.symbol(),
                con.rhs,
                con.terms.len()
            )?;
            for (j, a) in &con.terms {
                writeln!(w, "term block={}", j)?;
                write_matrix(w, a)?;
            }
        }
        Ok(())
    }
}

fn write_matrix<W: Write>(w: &mut W, a: &CMat) -> std::io::Result<()> {
    writeln!(w, "dim {} {}", a.nrows(), a.ncols())?;
    for i in 0..a.nrows() {
        let row: Vec<String> = (0..a.ncols())
            .map(|j| format!("{:.17e} {:.17e}", a[(i, j)].re, a[(i, j)].im))
            .collect();
        writeln!(w, "{}", row.join(" "))?;
    }
    Ok(())
}

/// Result of a solve: recovered Hermitian blocks plus solver diagnostics.
#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub blocks: Vec<CMat>,
    pub objective_value: f64,
    pub status: SolveStatus,
    pub duality_gap: f64,
    pub iterations: usize,
    pub merit_trace: Vec<f64>,
}

impl SdpSolution {
    pub fn is_usable(&self) -> bool {
        matches!(self.status, SolveStatus::Optimal)
    }
}

/// Solve a Hermitian SDP. Deterministic given identical inputs.
pub fn solve(problem: &SdpProblem, opts: &SolveOptions) -> Result<SdpSolution, SdpError> {
    problem.validate()?;

    // Lower to the real embedding: matrix blocks first, then one scalar
    // slack block per inequality.
    let nb = problem.blocks.len();
    let mut dims: Vec<usize> = problem.blocks.iter().map(|b| 2 * b.dim).collect();
    let mut c: Vec<nalgebra::DMatrix<f64>> = problem
        .blocks
        .iter()
        .map(|b| match &b.objective {
            Some(cj) => embed_hermitian(cj) * 0.5,
            None => nalgebra::DMatrix::zeros(2 * b.dim, 2 * b.dim),
        })
        .collect();

    let mut rows: Vec<Vec<(usize, nalgebra::DMatrix<f64>)>> = Vec::new();
    let mut b_vec: Vec<f64> = Vec::new();

    for con in &problem.constraints {
        let mut row: Vec<(usize, nalgebra::DMatrix<f64>)> = con
            .terms
            .iter()
            .map(|(j, a)| (*j, embed_hermitian(a) * 0.5))
            .collect();
        match con.sense {
            Sense::Eq => {}
            Sense::Ge | Sense::Le => {
                let slack_sign = if con.sense == Sense::Ge { -1.0 } else { 1.0 };
                dims.push(1);
                c.push(nalgebra::DMatrix::zeros(1, 1));
                row.push((dims.len() - 1, nalgebra::DMatrix::from_element(1, 1, slack_sign)));
            }
        }
        rows.push(row);
        b_vec.push(con.rhs);
    }

    // Unit-diagonal blocks: Re X_kk = 1 entry by entry.
    for (j, blk) in problem.blocks.iter().enumerate() {
        if blk.unit_diag {
            for k in 0..blk.dim {
                let mut e = CMat::zeros(blk.dim, blk.dim);
                e[(k, k)] = crate::C64::new(1.0, 0.0);
                rows.push(vec![(j, embed_hermitian(&e) * 0.5)]);
                b_vec.push(1.0);
            }
        }
    }

    let real = RealProblem {
        dims,
        c,
        rows,
        b: b_vec,
    };
    let ropts = RealOptions {
        tol: opts.tol,
        max_iter: opts.max_iter,
        divergence_threshold: opts.divergence_threshold,
    };
    let rsol = solve_real(&real, &ropts);

    let blocks: Vec<CMat> = (0..nb).map(|j| extract_hermitian(&rsol.x[j])).collect();
    let objective_value = problem
        .blocks
        .iter()
        .zip(&blocks)
        .map(|(b, x)| b.objective.as_ref().map_or(0.0, |cj| tr_prod(cj, x)))
        .sum();

    Ok(SdpSolution {
        blocks,
        objective_value,
        status: match rsol.status {
            RealStatus::Optimal => SolveStatus::Optimal,
            RealStatus::Infeasible => SolveStatus::Infeasible,
            RealStatus::MaxIterations => SolveStatus::MaxIterations,
            RealStatus::NumericalFailure => SolveStatus::NumericalFailure,
        },
        duality_gap: rsol.gap,
        iterations: rsol.iterations,
        merit_trace: rsol.merit_trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::la::{complex_gaussian_mat, hermitize};
    use crate::rng::StreamFactory;
    use crate::CMat;
    use approx::assert_relative_eq;
    use nalgebra::SymmetricEigen;

    fn random_psd(seed: u64, n: usize) -> CMat {
        let mut rng = StreamFactory::new(seed).stream("sdp-test");
        let a = complex_gaussian_mat(&mut rng, n, n);
        hermitize(&(&a * a.adjoint()))
    }

    #[test]
    fn minimal_trace_with_floor() {
        // min Tr(X), Tr(X) >= 2, X PSD 2x2 -> objective 2.
        let mut p = SdpProblem::new();
        let x = p.add_block(2);
        p.set_objective(x, CMat::identity(2, 2));
        p.add_constraint(vec![(x, CMat::identity(2, 2))], Sense::Ge, 2.0);
        let sol = solve(&p, &SolveOptions::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert_relative_eq!(sol.objective_value, 2.0, max_relative = 1e-6);
        // Solution block is PSD to tolerance.
        let eig = SymmetricEigen::new(sol.blocks[0].clone());
        assert!(eig.eigenvalues.iter().all(|l| *l > -1e-6));
    }

    #[test]
    fn single_trace_constraint_analytic_oracle() {
        // min Tr(X) s.t. Tr(H X) >= c has optimum c / lambda_max(H).
        for n in [2usize, 3, 5, 8, 12, 16] {
            let h = random_psd(40 + n as u64, n);
            let c_rhs = 3.5;
            let lam_max = SymmetricEigen::new(h.clone()).eigenvalues.max();
            let mut p = SdpProblem::new();
            let x = p.add_block(n);
            p.set_objective(x, CMat::identity(n, n));
            p.add_constraint(vec![(x, h.clone())], Sense::Ge, c_rhs);
            let sol = solve(&p, &SolveOptions::default()).unwrap();
            assert_eq!(sol.status, SolveStatus::Optimal, "dim {n}");
            assert_relative_eq!(
                sol.objective_value,
                c_rhs / lam_max,
                max_relative = 1e-6
            );
        }
    }

    #[test]
    fn contradictory_traces_are_infeasible() {
        let mut p = SdpProblem::new();
        let x = p.add_block(2);
        p.set_objective(x, CMat::identity(2, 2));
        p.add_constraint(vec![(x, CMat::identity(2, 2))], Sense::Ge, 1.0);
        p.add_constraint(vec![(x, CMat::identity(2, 2))], Sense::Le, 0.5);
        let sol = solve(&p, &SolveOptions::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Infeasible);
    }

    #[test]
    fn unit_diag_block_pins_diagonal() {
        // Feasibility problem over a unit-diagonal PSD block.
        let mut p = SdpProblem::new();
        let v = p.add_unit_diag_block(3);
        let h = random_psd(7, 3);
        p.set_objective(v, -h.clone()); // maximize Tr(H V)
        let sol = solve(&p, &SolveOptions::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        for k in 0..3 {
            assert_relative_eq!(sol.blocks[0][(k, k)].re, 1.0, epsilon = 1e-6);
            assert!(sol.blocks[0][(k, k)].im.abs() < 1e-9);
        }
    }

    #[test]
    fn returned_points_feasible_and_psd() {
        // Random PSD-data problem with a few mixed constraints.
        let n = 4;
        let h1 = random_psd(100, n);
        let h2 = random_psd(101, n);
        let mut p = SdpProblem::new();
        let x = p.add_block(n);
        p.set_objective(x, CMat::identity(n, n));
        p.add_constraint(vec![(x, h1.clone())], Sense::Ge, 2.0);
        p.add_constraint(vec![(x, h2.clone())], Sense::Le, 50.0);
        let opts = SolveOptions::default();
        let sol = solve(&p, &opts).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        let xb = &sol.blocks[0];
        let v1 = crate::la::tr_prod(&h1, xb);
        let v2 = crate::la::tr_prod(&h2, xb);
        let scale = 1.0 + v1.abs().max(v2.abs());
        assert!(v1 >= 2.0 - 10.0 * opts.tol * scale, "violation {v1}");
        assert!(v2 <= 50.0 + 10.0 * opts.tol * scale);
        let eig = SymmetricEigen::new(xb.clone());
        assert!(eig.eigenvalues.iter().all(|l| *l >= -10.0 * opts.tol));
        assert!(sol.duality_gap <= 10.0 * opts.tol);
    }

    #[test]
    fn merit_trace_decreases() {
        let n = 6;
        let h = random_psd(55, n);
        let mut p = SdpProblem::new();
        let x = p.add_block(n);
        p.set_objective(x, CMat::identity(n, n));
        p.add_constraint(vec![(x, h)], Sense::Ge, 1.0);
        let sol = solve(&p, &SolveOptions::default()).unwrap();
        let trace = &sol.merit_trace;
        assert!(trace.len() >= 3);
        for w in trace.windows(2) {
            assert!(
                w[1] <= w[0] * 1.05,
                "merit rose from {} to {}",
                w[0],
                w[1]
            );
        }
        assert!(trace.last().unwrap() < &(trace[0] * 1e-4));
    }

    #[test]
    fn solve_is_deterministic() {
        let n = 5;
        let h = random_psd(60, n);
        let build = || {
            let mut p = SdpProblem::new();
            let x = p.add_block(n);
            p.set_objective(x, CMat::identity(n, n));
            p.add_constraint(vec![(x, h.clone())], Sense::Ge, 1.0);
            p
        };
        let a = solve(&build(), &SolveOptions::default()).unwrap();
        let b = solve(&build(), &SolveOptions::default()).unwrap();
        assert_eq!(a.blocks[0], b.blocks[0]);
        assert_eq!(a.iterations, b.iterations);
    }

    #[test]
    fn dump_text_round_trips_header() {
        let mut p = SdpProblem::new();
        let x = p.add_block(2);
        p.set_objective(x, CMat::identity(2, 2));
        p.add_constraint(vec![(x, CMat::identity(2, 2))], Sense::Ge, 2.0);
        let mut buf = Vec::new();
        p.dump_text(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("sdp blocks=1 constraints=1"));
        assert!(text.contains("constraint >="));
    }
}
