//! Sequential/parallel kernel pairs for the bench suite. Not public API.

use crate::grid::{Image, Mask};
use crate::inpaint::{SolverConfig, SystemSolver};
use crate::operators::{EedParams, SparseOperator};
use crate::par;

pub fn apply_par(op: &SparseOperator, x: &[f64]) -> Vec<f64> {
    op.apply(x)
}

pub fn apply_seq(op: &SparseOperator, x: &[f64]) -> Vec<f64> {
    op.apply_seq(x)
}

/// Batch of inpainting echoes over the whole mask, parallel over columns.
pub fn echoes_par(mask: &Mask, op: &SparseOperator, cfg: &SolverConfig) -> Vec<Vec<f64>> {
    let solver = SystemSolver::new(mask, op, cfg).unwrap();
    let idx = mask.indices();
    par::map_indexed(idx.len(), |j| solver.echo(idx[j]).unwrap())
}

pub fn echoes_seq(mask: &Mask, op: &SparseOperator, cfg: &SolverConfig) -> Vec<Vec<f64>> {
    let solver = SystemSolver::new(mask, op, cfg).unwrap();
    mask.indices().iter().map(|&i| solver.echo(i).unwrap()).collect()
}

pub fn eed_assemble(u: &Image, params: EedParams) -> SparseOperator {
    crate::operators::assemble_eed(u, params).unwrap()
}

pub fn smooth(f: &Image, sigma: f64) -> Image {
    crate::grid::gaussian_smooth(f, sigma).unwrap()
}
