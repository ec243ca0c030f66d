//! Solver reports and their CSV/JSON renderings.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// `‖∇f‖ ≤ ε`.
    Converged,
    IterationLimit,
    /// The subproblem or line search could not move from the current point.
    Stalled,
    Failed(String),
}

impl Termination {
    pub fn as_str(&self) -> &str {
        match self {
            Termination::Converged => "converged",
            Termination::IterationLimit => "iteration_limit",
            Termination::Stalled => "stalled",
            Termination::Failed(_) => "failed",
        }
    }
}

/// One major iteration `j → j+1`, with values taken at `xʲ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub value: f64,
    pub grad_norm: f64,
    /// Subspace dimension `K` (1 for line-search solvers).
    pub subspace_dim: usize,
    pub method: String,
    pub inner_iterations: usize,
    pub inner_tolerance: Option<f64>,
    pub lambda: Option<f64>,
    /// Cancellation-safe estimate of `f(xʲ) − f(xʲ⁺¹)`.
    pub decrease: f64,
}

/// One boundary check of exponent `p` over `[start, end)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockRecord {
    pub exponent: u32,
    pub start: usize,
    pub end: usize,
    /// The block ran in correction mode.
    pub correction_block: bool,
    /// The check put `p` into correction mode for the next block.
    pub triggered_correction: bool,
    pub eq1_pass: bool,
    pub eq2_pass: bool,
    pub eq1_value: f64,
    /// `Σλ` over the block.
    pub sum_lambda: f64,
    /// `Σλ⟨g, x − x^{r_p}⟩` over the block.
    pub sum_lambda_inner: f64,
    pub q_norm: f64,
    pub weighted_norm: f64,
    pub rho: f64,
    pub rho_observed: Option<f64>,
    pub sum_cross: f64,
    pub max_displacement: f64,
    pub max_inner_tolerance: f64,
}

/// KKT residuals at iteration `j` for an exponent in correction mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectionRecord {
    pub iteration: usize,
    pub exponent: u32,
    /// `⟨gʲ, xʲ − x^{r_p}⟩`.
    pub displacement_inner: f64,
    pub displacement_norm: f64,
    /// `⟨gʲ, q_p^{j−1}⟩`.
    pub accumulated_inner: f64,
    pub accumulated_norm: f64,
    /// Inner tolerance of the subproblem that produced `xʲ`.
    pub inner_tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub solver: String,
    pub termination: Termination,
    pub iterations: usize,
    pub newton_iterations: usize,
    pub ellipsoid_iterations: usize,
    pub line_search_iterations: usize,
    pub correction_blocks: usize,
    pub max_subspace_dim: usize,
    pub value: f64,
    pub grad_norm: f64,
    pub x: Vec<f64>,
    pub trace: Vec<IterationRecord>,
    pub blocks: Vec<BlockRecord>,
    pub corrections: Vec<CorrectionRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterates: Option<Vec<Vec<f64>>>,
}

#[derive(Serialize)]
struct TraceRow<'a> {
    solver: &'a str,
    iteration: usize,
    value: f64,
    grad_norm: f64,
    subspace_dim: usize,
    method: &'a str,
    inner_iterations: usize,
    decrease: f64,
}

#[derive(Serialize)]
struct BlockRow<'a> {
    solver: &'a str,
    exponent: u32,
    start: usize,
    end: usize,
    correction_block: bool,
    triggered_correction: bool,
    eq1_pass: bool,
    eq2_pass: bool,
    rho_observed: Option<f64>,
}

impl SolveReport {
    pub fn new(solver: impl Into<String>) -> Self {
        SolveReport {
            solver: solver.into(),
            termination: Termination::IterationLimit,
            iterations: 0,
            newton_iterations: 0,
            ellipsoid_iterations: 0,
            line_search_iterations: 0,
            correction_blocks: 0,
            max_subspace_dim: 0,
            value: f64::NAN,
            grad_norm: f64::NAN,
            x: Vec::new(),
            trace: Vec::new(),
            blocks: Vec::new(),
            corrections: Vec::new(),
            iterates: None,
        }
    }

    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged
    }

    /// Newton plus ellipsoid iterations.
    pub fn inner_iterations(&self) -> usize {
        self.newton_iterations + self.ellipsoid_iterations
    }

    /// Largest observed ρ over every checked block, if any block had one.
    pub fn rho_max(&self) -> Option<f64> {
        self.blocks.iter().filter_map(|b| b.rho_observed).fold(None, |acc, r| Some(acc.map_or(r, |a: f64| a.max(r))))
    }

    pub fn write_trace_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_to_io(path, e))?;
        for r in &self.trace {
            w.serialize(TraceRow {
                solver: &self.solver,
                iteration: r.iteration,
                value: r.value,
                grad_norm: r.grad_norm,
                subspace_dim: r.subspace_dim,
                method: &r.method,
                inner_iterations: r.inner_iterations,
                decrease: r.decrease,
            })?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn write_blocks_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_to_io(path, e))?;
        for b in &self.blocks {
            w.serialize(BlockRow {
                solver: &self.solver,
                exponent: b.exponent,
                start: b.start,
                end: b.end,
                correction_block: b.correction_block,
                triggered_correction: b.triggered_correction,
                eq1_pass: b.eq1_pass,
                eq2_pass: b.eq2_pass,
                rho_observed: b.rho_observed,
            })?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

pub(crate) fn csv_to_io(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Csv(csv::Error::from(std::io::Error::other(format!("{other:?}")))),
    }
}
