//! Tonal (grey value) optimisation for a fixed mask.
//!
//! For linear operators the reconstruction is linear in the stored values,
//! so minimising |r(c, g) − f|² is a strictly convex least squares problem
//! with a unique solution. Three routes are provided: direct normal
//! equations on the inpainting echoes (the small-instance oracle), gradient
//! descent with exact line search, and gradient descent accelerated with
//! fast explicit diffusion (FED) cycles. The nonlinear EED case runs plain
//! gradient descent with a finite-difference Jacobian and returns the
//! best-MSE iterate.
//!
//! Optimised grey values are intentionally *not* clamped to [0, 255].

use crate::error::{Error, Result};
use crate::grid::{mse, Image, Mask, Seed};
use crate::inpaint::{solve_eed_with_init, SolverConfig, SystemSolver};
use crate::operators::{EedParams, SparseOperator};
use crate::par;
use crate::rng::Pcg32;

/// Stored grey values over the whole grid; entries off the mask are fixed
/// at zero (they have no influence on the reconstruction).
#[derive(Debug, Clone, PartialEq)]
pub struct GreyValues {
    values: Vec<f64>,
}

impl GreyValues {
    pub fn new(values: Vec<f64>, mask: &Mask) -> Result<Self> {
        if values.len() != mask.len() {
            return Err(Error::DimensionMismatch("grey value vector size vs mask".into()));
        }
        for (i, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::InvalidInput("grey values must be finite".into()));
            }
            if !mask.is_set(i) && *v != 0.0 {
                return Err(Error::InvalidInput(format!(
                    "grey value at non-mask pixel {} must be zero",
                    i
                )));
            }
        }
        Ok(GreyValues { values })
    }

    /// `C f`: the image values on the mask, zero elsewhere.
    pub fn masked_image(f: &Image, mask: &Mask) -> Self {
        let values = (0..f.len())
            .map(|i| if mask.is_set(i) { f.values()[i] } else { 0.0 })
            .collect();
        GreyValues { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Pairs (pixel index, value) over the mask, for CSV emission.
    pub fn mask_entries(&self, mask: &Mask) -> Vec<(usize, f64)> {
        mask.indices().into_iter().map(|i| (i, self.values[i])).collect()
    }

    pub fn from_mask_entries(entries: &[(usize, f64)], mask: &Mask) -> Result<Self> {
        let mut values = vec![0.0; mask.len()];
        for &(i, v) in entries {
            if i >= values.len() || !mask.is_set(i) {
                return Err(Error::InvalidInput(format!("tonal entry at {} is not a mask pixel", i)));
            }
            values[i] = v;
        }
        GreyValues::new(values, mask)
    }
}

/// Reconstruction and MSE for stored values `g`.
pub fn reconstruction_mse(
    f: &Image,
    mask: &Mask,
    op: &SparseOperator,
    g: &GreyValues,
    cfg: &SolverConfig,
) -> Result<f64> {
    let solver = SystemSolver::new(mask, op, cfg)?;
    let u = solver.reconstruct(g.values())?;
    mse(&f.with_values(u)?, f)
}

/// Columns of the |J|×|K| echo matrix `B`, in ascending mask-index order.
pub fn echo_matrix(mask: &Mask, op: &SparseOperator, cfg: &SolverConfig) -> Result<Vec<Vec<f64>>> {
    let solver = SystemSolver::new(mask, op, cfg)?;
    let indices = mask.indices();
    let columns = par::map_indexed(indices.len(), |j| solver.echo(indices[j]));
    columns.into_iter().collect()
}

/// Solves a dense symmetric positive definite system by Cholesky.
fn spd_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    for j in 0..n {
        let mut diag = a[j][j];
        for k in 0..j {
            diag -= a[j][k] * a[j][k];
        }
        if diag <= 0.0 || !diag.is_finite() {
            return Err(Error::Numerical(
                "normal equations are not positive definite".into(),
            ));
        }
        let ljj = diag.sqrt();
        a[j][j] = ljj;
        for i in (j + 1)..n {
            let mut sum = a[i][j];
            for k in 0..j {
                sum -= a[i][k] * a[j][k];
            }
            a[i][j] = sum / ljj;
        }
    }
    // Forward then backward substitution.
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum -= a[i][k] * b[k];
        }
        b[i] = sum / a[i][i];
    }
    for i in (0..n).rev() {
        let mut sum = b[i];
        for k in (i + 1)..n {
            sum -= a[k][i] * b[k];
        }
        b[i] = sum / a[i][i];
    }
    Ok(b)
}

/// Direct tonal optimisation through the normal equations `BᵀB g = Bᵀf`.
///
/// Builds `B` from the inpainting echoes, so the cost grows with |K|; meant
/// as the exact oracle for small instances (|K| ≤ 2048).
pub fn gvo_direct(
    f: &Image,
    mask: &Mask,
    op: &SparseOperator,
    cfg: &SolverConfig,
) -> Result<GreyValues> {
    let k = mask.count();
    if k == 0 {
        return Err(Error::InvalidInput("empty mask".into()));
    }
    if k > 2048 {
        return Err(Error::InvalidInput(format!(
            "gvo_direct is an oracle for small instances; |K| = {} exceeds 2048",
            k
        )));
    }
    let columns = echo_matrix(mask, op, cfg)?;
    let gram = par::map_indexed(k, |r| {
        (0..k)
            .map(|c| columns[r].iter().zip(&columns[c]).map(|(a, b)| a * b).sum::<f64>())
            .collect::<Vec<f64>>()
    });
    let rhs: Vec<f64> = columns
        .iter()
        .map(|col| col.iter().zip(f.values()).map(|(a, b)| a * b).sum())
        .collect();
    let solution = spd_solve(gram, rhs)?;
    let mut values = vec![0.0; f.len()];
    for (j, &i) in mask.indices().iter().enumerate() {
        values[i] = solution[j];
    }
    GreyValues::new(values, mask)
}

/// One row of a gradient-descent log.
#[derive(Debug, Clone, serde::Serialize)]
pub struct GvoLogRow {
    pub iteration: usize,
    pub grad_norm_sq: f64,
    pub mse: f64,
}

/// Result of an iterative tonal optimisation.
#[derive(Debug, Clone)]
pub struct GvoOutcome {
    pub grey: GreyValues,
    /// Number of gradient evaluations spent.
    pub gradient_evaluations: usize,
    pub iterations: usize,
    pub final_mse: f64,
    pub log: Vec<GvoLogRow>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// ∇E(g) = Jᵀ (u − f) with Jᵀ applied through one transposed solve and a
/// masking; also returns the reconstruction u.
fn gradient(
    solver: &SystemSolver,
    f: &Image,
    g: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let u = solver.reconstruct(g)?;
    let residual: Vec<f64> = u.iter().zip(f.values()).map(|(a, b)| a - b).collect();
    let w = solver.solve_transposed_system(&residual)?;
    let grad: Vec<f64> = (0..w.len())
        .map(|i| if solver.mask().is_set(i) { w[i] } else { 0.0 })
        .collect();
    Ok((grad, u))
}

const MAX_GRADIENT_ITERS: usize = 200_000;

/// Grey value optimisation by gradient descent with exact line search.
///
/// Starts from g⁰ = Cf and iterates g ← g − α∇E with the step that
/// minimises the quadratic energy along the gradient ray,
/// α = |∇E|² / |r(c, ∇E)|². Stops once |∇E|² ≤ eps · |∇E(g⁰)|².
pub fn gvo_exact_line_search(
    f: &Image,
    mask: &Mask,
    op: &SparseOperator,
    eps: f64,
    cfg: &SolverConfig,
) -> Result<GvoOutcome> {
    if !(eps > 0.0) {
        return Err(Error::InvalidInput("eps must be positive".into()));
    }
    let solver = SystemSolver::new(mask, op, cfg)?;
    let mut g = GreyValues::masked_image(f, mask).values.clone();
    let mut evals = 0usize;
    let mut iterations = 0usize;
    let mut log = Vec::new();
    let mut baseline = None;
    loop {
        let (grad, u) = gradient(&solver, f, &g)?;
        evals += 1;
        let grad_norm_sq = dot(&grad, &grad);
        let current_mse =
            u.iter().zip(f.values()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / f.len() as f64;
        log.push(GvoLogRow { iteration: iterations, grad_norm_sq, mse: current_mse });
        let base = *baseline.get_or_insert(grad_norm_sq);
        if grad_norm_sq <= eps * base || grad_norm_sq == 0.0 {
            let grey = GreyValues::new(g, mask)?;
            return Ok(GvoOutcome {
                grey,
                gradient_evaluations: evals,
                iterations,
                final_mse: current_mse,
                log,
            });
        }
        if iterations >= MAX_GRADIENT_ITERS {
            return Err(Error::NonConvergence(format!(
                "exact line search did not reach eps = {} within {} iterations",
                eps, MAX_GRADIENT_ITERS
            )));
        }
        // Exact line search step.
        let r_grad = solver.reconstruct(&grad)?;
        let denom = dot(&r_grad, &r_grad);
        if denom == 0.0 {
            return Err(Error::Numerical(
                "line search denominator |r(c, grad)|² vanished with a nonzero gradient".into(),
            ));
        }
        let residual_dot: f64 = u
            .iter()
            .zip(f.values())
            .zip(&r_grad)
            .map(|((ui, fi), ri)| (ui - fi) * ri)
            .sum();
        let alpha = residual_dot / denom;
        for (gi, di) in g.iter_mut().zip(&grad) {
            *gi -= alpha * di;
        }
        iterations += 1;
    }
}

/// FED step sizes α_i = α* / (2 cos²(π (2i+1) / (4M+2))) for i = 0..M−1.
///
/// For cycle lengths above 12 the order is permuted by the κ-cycle scheme
/// (κ = M/2, indices generated modulo the smallest prime ≥ M+1) to tame
/// rounding error accumulation.
pub fn fed_step_sizes(alpha_star: f64, m: usize) -> Vec<f64> {
    assert!(m >= 1, "cycle length must be at least 1");
    assert!(alpha_star > 0.0, "alpha_star must be positive");
    let raw: Vec<f64> = (0..m)
        .map(|i| {
            let angle = std::f64::consts::PI * (2 * i + 1) as f64 / (4 * m + 2) as f64;
            alpha_star / (2.0 * angle.cos().powi(2))
        })
        .collect();
    if m <= 12 {
        return raw;
    }
    fed_permutation(m).into_iter().map(|i| raw[i]).collect()
}

fn is_prime(n: usize) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// The κ-cycle ordering used by reference FED implementations: walk the
/// multiples of κ = M/2 modulo the smallest prime ≥ M+1, skipping residues
/// beyond the cycle length.
pub fn fed_permutation(m: usize) -> Vec<usize> {
    let kappa = m / 2;
    let mut prime = m + 1;
    while !is_prime(prime) {
        prime += 1;
    }
    let mut perm = Vec::with_capacity(m);
    let mut k = 0usize;
    while perm.len() < m {
        loop {
            let residue = ((k + 1) * kappa) % prime;
            debug_assert!(residue >= 1);
            let index = residue - 1;
            if index < m {
                perm.push(index);
                k += 1;
                break;
            }
            k += 1;
        }
    }
    perm
}

/// Configuration of the FED-accelerated tonal optimisation.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FedConfig {
    /// Cycle length M.
    pub m: usize,
    /// Relative gradient-norm stopping factor ε.
    pub eps: f64,
    /// Power iterations for the Lipschitz estimate.
    pub power_iters: usize,
    /// α* as a fraction of the stability limit 2/L.
    pub alpha_star_fraction: f64,
}

impl Default for FedConfig {
    fn default() -> Self {
        FedConfig { m: 15, eps: 1e-3, power_iters: 5, alpha_star_fraction: 2.0 / 3.0 }
    }
}

impl FedConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m < 1 {
            return Err(Error::InvalidInput("FED cycle length must be at least 1".into()));
        }
        if !(self.eps > 0.0) {
            return Err(Error::InvalidInput("eps must be positive".into()));
        }
        if self.power_iters < 5 {
            return Err(Error::InvalidInput("power_iters must be at least 5".into()));
        }
        if !(self.alpha_star_fraction > 0.0 && self.alpha_star_fraction < 1.0) {
            return Err(Error::InvalidInput("alpha_star_fraction must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

/// Estimates the Lipschitz constant L = ρ(DᵀD) of the tonal gradient, where
/// D = M⁻¹C, by power iteration with a fixed-seed start vector.
///
/// Each iteration costs one solve with M and one with Mᵀ. The returned
/// Rayleigh quotient underestimates ρ and is non-decreasing in the number
/// of iterations.
pub fn estimate_lipschitz(
    mask: &Mask,
    op: &SparseOperator,
    power_iters: usize,
    cfg: &SolverConfig,
) -> Result<f64> {
    if power_iters == 0 {
        return Err(Error::InvalidInput("power_iters must be positive".into()));
    }
    let solver = SystemSolver::new(mask, op, cfg)?;
    let n = mask.len();
    let mut rng = Pcg32::new(Seed(0x9E37_79B9_7F4A_7C15));
    let mut v: Vec<f64> = (0..n).map(|_| rng.symmetric_unit()).collect();
    let norm = dot(&v, &v).sqrt();
    for x in &mut v {
        *x /= norm;
    }
    let apply = |v: &[f64]| -> Result<Vec<f64>> {
        // DᵀD v = Cᵀ M⁻ᵀ (M⁻¹ C v), exploiting C = Cᵀ = C².
        let cv: Vec<f64> = (0..n).map(|i| if mask.is_set(i) { v[i] } else { 0.0 }).collect();
        let w = solver.solve_system(&cv)?;
        let t = solver.solve_transposed_system(&w)?;
        Ok((0..n).map(|i| if mask.is_set(i) { t[i] } else { 0.0 }).collect())
    };
    let mut rayleigh = 0.0;
    for _ in 0..power_iters {
        let z = apply(&v)?;
        rayleigh = dot(&v, &z) / dot(&v, &v);
        let norm = dot(&z, &z).sqrt();
        if norm == 0.0 {
            break;
        }
        v = z.into_iter().map(|x| x / norm).collect();
    }
    Ok(rayleigh)
}

const MAX_FED_CYCLES: usize = 50_000;

/// Grey value optimisation with FED-accelerated gradient descent.
///
/// Estimates L, sets α* = alpha_star_fraction · 2/L, and runs FED cycles of
/// the explicit gradient iteration until |∇E|² ≤ eps · |∇E(g⁰)|², checked at
/// each cycle start.
pub fn gvo_fed(
    f: &Image,
    mask: &Mask,
    op: &SparseOperator,
    fed: &FedConfig,
    cfg: &SolverConfig,
) -> Result<GvoOutcome> {
    fed.validate()?;
    let solver = SystemSolver::new(mask, op, cfg)?;
    let lipschitz = estimate_lipschitz(mask, op, fed.power_iters, cfg)?;
    if !(lipschitz > 0.0) {
        return Err(Error::Numerical(format!("nonpositive Lipschitz estimate {}", lipschitz)));
    }
    let alpha_star = fed.alpha_star_fraction * 2.0 / lipschitz;
    let steps = fed_step_sizes(alpha_star, fed.m);

    let mut g = GreyValues::masked_image(f, mask).values.clone();
    let mut evals = 0usize;
    let mut log = Vec::new();
    let mut baseline = None;
    for cycle in 0..MAX_FED_CYCLES {
        for (i, &alpha) in steps.iter().enumerate() {
            let (grad, u) = gradient(&solver, f, &g)?;
            evals += 1;
            let grad_norm_sq = dot(&grad, &grad);
            if !grad_norm_sq.is_finite() {
                return Err(Error::Numerical("FED iteration diverged".into()));
            }
            let current_mse = u
                .iter()
                .zip(f.values())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                / f.len() as f64;
            log.push(GvoLogRow { iteration: evals, grad_norm_sq, mse: current_mse });
            if i == 0 {
                let base = *baseline.get_or_insert(grad_norm_sq);
                if grad_norm_sq <= fed.eps * base || grad_norm_sq == 0.0 {
                    let grey = GreyValues::new(g, mask)?;
                    return Ok(GvoOutcome {
                        grey,
                        gradient_evaluations: evals,
                        iterations: cycle,
                        final_mse: current_mse,
                        log,
                    });
                }
            }
            for (gi, di) in g.iter_mut().zip(&grad) {
                *gi -= alpha * di;
            }
        }
    }
    Err(Error::NonConvergence(format!(
        "FED did not reach eps = {} within {} cycles",
        fed.eps, MAX_FED_CYCLES
    )))
}

/// Configuration of the EED tonal optimisation.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EedGvoConfig {
    /// Fixed gradient descent step size α.
    pub alpha: f64,
    /// Grey value perturbation η for the finite-difference Jacobian.
    pub eta: f64,
    /// Gradient descent iteration budget.
    pub iterations: usize,
    /// Recompute the Jacobian every this many iterations (1 = every step).
    pub jacobian_refresh: usize,
}

impl Default for EedGvoConfig {
    /// α = 10⁻², η = 1.0: the best-performing pair in the reference
    /// parameter study.
    fn default() -> Self {
        EedGvoConfig { alpha: 1e-2, eta: 1.0, iterations: 10, jacobian_refresh: 1 }
    }
}

impl EedGvoConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) || !(self.eta > 0.0) {
            return Err(Error::InvalidInput("alpha and eta must be positive".into()));
        }
        if self.iterations == 0 || self.jacobian_refresh == 0 {
            return Err(Error::InvalidInput("iteration counts must be positive".into()));
        }
        Ok(())
    }
}

/// Tonal optimisation for EED inpainting by gradient descent with a
/// numerically differentiated Jacobian.
///
/// Column j of the Jacobian is (r(c, g + η e_j) − r(c, g)) / η, one full
/// nonlinear solve per mask pixel (run in parallel). The objective is not
/// convex, so the iterate with the lowest recorded MSE is returned.
pub fn gvo_eed(
    f: &Image,
    mask: &Mask,
    params: EedParams,
    conf: &EedGvoConfig,
    cfg: &SolverConfig,
) -> Result<GvoOutcome> {
    conf.validate()?;
    if mask.count() == 0 {
        return Err(Error::InvalidInput("empty mask".into()));
    }
    let indices = mask.indices();
    let k = indices.len();
    let mut g = GreyValues::masked_image(f, mask).values.clone();

    let reconstruct = |g: &[f64], init: Option<&Image>| -> Result<Image> {
        let data = Image::new(f.width(), f.height(), g.to_vec())?;
        Ok(solve_eed_with_init(mask, &data, params, cfg, init)?.image)
    };

    let mut u = reconstruct(&g, None)?;
    let mut best_mse = mse(&u, f)?;
    let mut best_g = g.clone();
    let mut log = vec![GvoLogRow { iteration: 0, grad_norm_sq: f64::NAN, mse: best_mse }];
    let mut jacobian: Vec<Vec<f64>> = Vec::new();

    for iter in 1..=conf.iterations {
        if jacobian.is_empty() || (iter - 1) % conf.jacobian_refresh == 0 {
            let columns = par::map_indexed(k, |j| -> Result<Vec<f64>> {
                let mut perturbed = g.clone();
                perturbed[indices[j]] += conf.eta;
                let uj = reconstruct(&perturbed, Some(&u))?;
                Ok(uj
                    .values()
                    .iter()
                    .zip(u.values())
                    .map(|(a, b)| (a - b) / conf.eta)
                    .collect())
            });
            jacobian = columns.into_iter().collect::<Result<_>>()?;
        }
        let residual: Vec<f64> = u.values().iter().zip(f.values()).map(|(a, b)| a - b).collect();
        let grad: Vec<f64> = jacobian.iter().map(|col| dot(col, &residual)).collect();
        let grad_norm_sq = dot(&grad, &grad);
        for (j, &i) in indices.iter().enumerate() {
            g[i] -= conf.alpha * grad[j];
        }
        u = reconstruct(&g, Some(&u))?;
        let current_mse = mse(&u, f)?;
        log.push(GvoLogRow { iteration: iter, grad_norm_sq, mse: current_mse });
        if current_mse < best_mse {
            best_mse = current_mse;
            best_g = g.clone();
        }
    }
    Ok(GvoOutcome {
        grey: GreyValues::new(best_g, mask)?,
        gradient_evaluations: conf.iterations,
        iterations: conf.iterations,
        final_mse: best_mse,
        log,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{assemble_biharmonic, assemble_laplacian};
    use approx::assert_abs_diff_eq;

    fn cfg() -> SolverConfig {
        SolverConfig::default()
    }

    fn random_instance(seed: u64, w: usize, h: usize, density: f64) -> (Image, Mask) {
        let mut rng = Pcg32::new(Seed(seed));
        let f = Image::new(w, h, (0..w * h).map(|_| rng.unit() * 255.0).collect()).unwrap();
        let k = ((w * h) as f64 * density).round().max(1.0) as usize;
        let mut pool: Vec<usize> = (0..w * h).collect();
        let idx = crate::rng::sample_without_replacement(&mut pool, k, &mut rng);
        (f, Mask::from_indices(w, h, &idx).unwrap())
    }

    #[test]
    fn direct_full_mask_returns_f() {
        let (f, _) = random_instance(1, 4, 4, 1.0);
        let mask = Mask::full(4, 4).unwrap();
        let op = assemble_laplacian(4, 4).unwrap();
        let g = gvo_direct(&f, &mask, &op, &cfg()).unwrap();
        for (a, b) in g.values().iter().zip(f.values()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-8);
        }
    }

    #[test]
    fn direct_never_worse_than_unoptimised() {
        let (f, mask) = random_instance(2, 6, 5, 0.2);
        let op = assemble_laplacian(6, 5).unwrap();
        let g = gvo_direct(&f, &mask, &op, &cfg()).unwrap();
        let baseline = GreyValues::masked_image(&f, &mask);
        let mse_opt = reconstruction_mse(&f, &mask, &op, &g, &cfg()).unwrap();
        let mse_base = reconstruction_mse(&f, &mask, &op, &baseline, &cfg()).unwrap();
        assert!(mse_opt <= mse_base + 1e-12, "{} vs {}", mse_opt, mse_base);
    }

    #[test]
    fn direct_matches_grid_search_on_5_pixels() {
        // Brute-force oracle over a fine grid of stored values.
        let f = Image::new(5, 1, vec![0.0, 4.0, 0.0, 4.0, 0.0]).unwrap();
        let mask = Mask::from_indices(5, 1, &[0, 2, 4]).unwrap();
        let op = assemble_laplacian(5, 1).unwrap();
        let solver_cfg = cfg();
        let g = gvo_direct(&f, &mask, &op, &solver_cfg).unwrap();

        let solver = SystemSolver::new(&mask, &op, &solver_cfg).unwrap();
        let eval = |a: f64, b: f64, c: f64| -> f64 {
            let u = solver.reconstruct(&[a, 0.0, b, 0.0, c]).unwrap();
            u.iter()
                .zip(f.values())
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
        };
        let mut best = (f64::INFINITY, 0.0, 0.0, 0.0);
        let grid: Vec<f64> = (0..=120).map(|i| -2.0 + i as f64 * 0.05).collect();
        for &a in &grid {
            for &b in &grid {
                for &c in &grid {
                    let e = eval(a, b, c);
                    if e < best.0 {
                        best = (e, a, b, c);
                    }
                }
            }
        }
        assert!((g.values()[0] - best.1).abs() <= 0.05);
        assert!((g.values()[2] - best.2).abs() <= 0.05);
        assert!((g.values()[4] - best.3).abs() <= 0.05);
    }

    #[test]
    fn line_search_stops_immediately_at_optimum() {
        let f = Image::new(4, 4, (0..16).map(|i| (i * 11) as f64).collect()).unwrap();
        let mask = Mask::full(4, 4).unwrap();
        let op = assemble_laplacian(4, 4).unwrap();
        // Full mask: g0 = f is already optimal, gradient vanishes.
        let out = gvo_exact_line_search(&f, &mask, &op, 1e-8, &cfg()).unwrap();
        assert_eq!(out.iterations, 0);
        assert_abs_diff_eq!(out.final_mse, 0.0, epsilon = 1e-20);
    }

    #[test]
    fn line_search_energy_strictly_decreases() {
        let (f, mask) = random_instance(5, 8, 8, 0.15);
        let op = assemble_laplacian(8, 8).unwrap();
        let out = gvo_exact_line_search(&f, &mask, &op, 1e-6, &cfg()).unwrap();
        for w in out.log.windows(2) {
            assert!(
                w[1].mse < w[0].mse + 1e-12 * w[0].mse.max(1.0),
                "energy went {} -> {}",
                w[0].mse,
                w[1].mse
            );
        }
    }

    #[test]
    fn line_search_matches_direct() {
        for seed in [10, 11] {
            let (f, mask) = random_instance(seed, 7, 6, 0.2);
            let op = assemble_laplacian(7, 6).unwrap();
            let direct = gvo_direct(&f, &mask, &op, &cfg()).unwrap();
            let els = gvo_exact_line_search(&f, &mask, &op, 1e-10, &cfg()).unwrap();
            let m_direct = reconstruction_mse(&f, &mask, &op, &direct, &cfg()).unwrap();
            assert!(
                (els.final_mse - m_direct).abs() <= 1e-6 * m_direct.max(1e-12),
                "{} vs {}",
                els.final_mse,
                m_direct
            );
        }
    }

    #[test]
    fn fed_steps_m1_and_m2() {
        let s = fed_step_sizes(1.0, 1);
        assert_eq!(s.len(), 1);
        assert_abs_diff_eq!(s[0], 2.0 / 3.0, epsilon = 1e-12);

        let s = fed_step_sizes(1.0, 2);
        assert_abs_diff_eq!(s[0], 0.5527864045000421, epsilon = 1e-10);
        assert_abs_diff_eq!(s[1], 1.4472135954999579, epsilon = 1e-10);
        assert_abs_diff_eq!(s.iter().sum::<f64>(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn fed_step_sums_match_closed_form() {
        for m in 1..=50 {
            let alpha_star = 0.37;
            let s = fed_step_sizes(alpha_star, m);
            let want = alpha_star * (m * (m + 1)) as f64 / 3.0;
            let got: f64 = s.iter().sum();
            assert!(
                (got - want).abs() <= 1e-9 * want.max(1.0),
                "M = {}: {} vs {}",
                m,
                got,
                want
            );
        }
    }

    #[test]
    fn fed_overstep_count_is_half_the_cycle() {
        for m in 1..=30 {
            let alpha_star = 1.0;
            // Unpermuted formula values.
            let raw: Vec<f64> = (0..m)
                .map(|i| {
                    let angle = std::f64::consts::PI * (2 * i + 1) as f64 / (4 * m + 2) as f64;
                    alpha_star / (2.0 * angle.cos().powi(2))
                })
                .collect();
            let over = raw.iter().filter(|&&a| a > alpha_star).count();
            assert_eq!(over, m / 2, "M = {}", m);
            // And they are exactly the trailing entries i >= ceil(M/2).
            for (i, &a) in raw.iter().enumerate() {
                assert_eq!(a > alpha_star, i >= m.div_ceil(2), "M = {}, i = {}", m, i);
            }
        }
    }

    #[test]
    fn fed_permutation_golden_m13() {
        // Hand-walked κ-cycle: κ = 6, prime = 17.
        assert_eq!(
            fed_permutation(13),
            vec![5, 11, 0, 6, 12, 1, 7, 2, 8, 3, 9, 4, 10]
        );
        // Permutations are permutations.
        for m in 13..40 {
            let mut p = fed_permutation(m);
            p.sort_unstable();
            assert_eq!(p, (0..m).collect::<Vec<_>>());
        }
    }

    #[test]
    fn lipschitz_full_mask_is_one() {
        let mask = Mask::full(5, 5).unwrap();
        let op = assemble_laplacian(5, 5).unwrap();
        let l = estimate_lipschitz(&mask, &op, 5, &cfg()).unwrap();
        assert_abs_diff_eq!(l, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn lipschitz_monotone_in_power_iters() {
        let (_, mask) = random_instance(3, 6, 6, 0.25);
        let op = assemble_laplacian(6, 6).unwrap();
        let mut prev = 0.0;
        for iters in 1..=8 {
            let l = estimate_lipschitz(&mask, &op, iters, &cfg()).unwrap();
            assert!(l >= prev - 1e-12, "estimate dropped: {} -> {}", prev, l);
            prev = l;
        }
    }

    #[test]
    fn fed_full_mask_recovers_f() {
        let f = Image::new(4, 4, (0..16).map(|i| (i * 3) as f64).collect()).unwrap();
        let mask = Mask::full(4, 4).unwrap();
        let op = assemble_laplacian(4, 4).unwrap();
        let fed = FedConfig { eps: 1e-10, ..FedConfig::default() };
        let out = gvo_fed(&f, &mask, &op, &fed, &cfg()).unwrap();
        for (a, b) in out.grey.values().iter().zip(f.values()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-4);
        }
    }

    #[test]
    fn fed_matches_direct_small_instance() {
        let (f, mask) = random_instance(7, 6, 6, 0.25);
        let op = assemble_biharmonic(6, 6).unwrap();
        let direct = gvo_direct(&f, &mask, &op, &cfg()).unwrap();
        let m_direct = reconstruction_mse(&f, &mask, &op, &direct, &cfg()).unwrap();
        let fed = FedConfig { eps: 1e-10, power_iters: 30, ..FedConfig::default() };
        let out = gvo_fed(&f, &mask, &op, &fed, &cfg()).unwrap();
        assert!(
            (out.final_mse - m_direct).abs() <= 1e-5 * m_direct.max(1e-12),
            "{} vs {}",
            out.final_mse,
            m_direct
        );
    }

    #[test]
    fn eed_gvo_full_mask_converges_to_f() {
        let f = Image::new(4, 3, (0..12).map(|i| (i * 9) as f64).collect()).unwrap();
        let mask = Mask::full(4, 3).unwrap();
        let conf = EedGvoConfig { alpha: 0.5, eta: 1.0, iterations: 40, jacobian_refresh: 1 };
        let out = gvo_eed(&f, &mask, EedParams::default(), &conf, &cfg()).unwrap();
        assert!(out.final_mse < 1e-6, "final mse {}", out.final_mse);
    }

    #[test]
    fn eed_gvo_constant_image_is_optimal_at_init() {
        let f = Image::constant(5, 4, 77.0).unwrap();
        let mask = Mask::from_indices(5, 4, &[7]).unwrap();
        let conf = EedGvoConfig { iterations: 2, ..EedGvoConfig::default() };
        let out = gvo_eed(&f, &mask, EedParams::default(), &conf, &cfg()).unwrap();
        assert_abs_diff_eq!(out.final_mse, 0.0, epsilon = 1e-16);
        assert_abs_diff_eq!(out.grey.values()[7], 77.0, epsilon = 1e-12);
    }

    #[test]
    fn eed_gvo_never_worse_than_baseline() {
        let (f, mask) = random_instance(9, 6, 5, 0.2);
        let conf = EedGvoConfig { iterations: 3, ..EedGvoConfig::default() };
        let params = EedParams::default();
        let out = gvo_eed(&f, &mask, params, &conf, &cfg()).unwrap();
        // Baseline: g = Cf.
        let baseline = crate::inpaint::solve_eed_inpainting(&mask, &f, params, &cfg()).unwrap();
        let base_mse = mse(&baseline.image, &f).unwrap();
        assert!(out.final_mse <= base_mse + 1e-12, "{} vs {}", out.final_mse, base_mse);
    }
}
