//! 2D spatial data selection.
//!
//! Three routes to an inpainting mask of prescribed density: dithering a
//! rescaled Laplacian-magnitude density (analytic approach), greedy
//! randomised removal of the least significant mask pixels (probabilistic
//! sparsification), and stochastic swaps that move mask pixels to the worst
//! reconstructed locations (nonlocal pixel exchange).
//!
//! Runs are single-threaded over one sequential RNG stream, so identical
//! seeds give identical masks; the inner inpainting solves may parallelise
//! internally.

use crate::error::{Error, Result};
use crate::grid::{mse, Image, Mask, Seed};
use crate::inpaint::{solve_eed_with_init, SolverConfig};
use crate::operators::{assemble_for, OperatorKind};
use crate::rng::{sample_without_replacement, Pcg32};

/// Parameters of the probabilistic sparsification (Algorithm: fraction `p`
/// of mask pixels become candidates, fraction `q` of the candidates is
/// removed per iteration, until density `d` remains).
#[derive(Debug, Clone, Copy)]
pub struct SparsifyParams {
    pub p: f64,
    pub q: f64,
    pub d: f64,
    pub seed: Seed,
}

impl SparsifyParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.p > 0.0 && self.p <= 1.0) || !(self.q > 0.0 && self.q <= 1.0) {
            return Err(Error::InvalidInput("p and q must lie in (0, 1]".into()));
        }
        if !(self.d > 0.0 && self.d < 1.0) {
            return Err(Error::InvalidInput("target density d must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

/// Parameters of the nonlocal pixel exchange.
#[derive(Debug, Clone, Copy)]
pub struct ExchangeParams {
    /// Candidate set size m.
    pub m: usize,
    /// Iteration budget (the paper's runs used 5·10⁵).
    pub iterations: usize,
    pub seed: Seed,
}

impl ExchangeParams {
    pub fn validate(&self) -> Result<()> {
        if self.m < 1 {
            return Err(Error::InvalidInput("candidate set size m must be at least 1".into()));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidInput("iteration budget must be positive".into()));
        }
        Ok(())
    }
}

/// Parameters of the analytic (Laplacian magnitude) approach.
#[derive(Debug, Clone, Copy)]
pub struct AnalyticParams {
    pub sigma: f64,
    pub s: f64,
    pub d: f64,
}

impl AnalyticParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma >= 0.0) {
            return Err(Error::InvalidInput("sigma must be nonnegative".into()));
        }
        if !(self.s > 0.0) {
            return Err(Error::InvalidInput("exponent s must be positive".into()));
        }
        if !(self.d > 0.0 && self.d < 1.0) {
            return Err(Error::InvalidInput("target density d must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

/// Rounds `d · |J|` to the nearest pixel count, at least 1.
pub fn target_pixel_count(d: f64, total: usize) -> usize {
    ((d * total as f64).round() as usize).clamp(1, total)
}

/// Floyd–Steinberg error diffusion in raster order.
///
/// Thresholds at 127.5 and pushes the quantisation error to the classic
/// right / bottom-left / bottom / bottom-right neighbours with weights
/// 7/16, 3/16, 5/16, 1/16. Weights are renormalised over the in-bounds
/// neighbours so no error mass leaves the image before the final pixel;
/// this keeps the mask average within 255/|J| of the input average.
pub fn floyd_steinberg_dither(density: &Image) -> Result<Mask> {
    if density.values().iter().any(|&v| !(0.0..=255.0).contains(&v)) {
        return Err(Error::InvalidInput("density values must lie in [0, 255]".into()));
    }
    let (w, h) = (density.width(), density.height());
    let mut work = density.values().to_vec();
    let mut bits = vec![false; w * h];
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let old = work[i];
            let set = old >= 127.5;
            bits[i] = set;
            let error = old - if set { 255.0 } else { 0.0 };
            // (dx, dy, weight) targets in diffusion order.
            let targets: [(isize, isize, f64); 4] =
                [(1, 0, 7.0), (-1, 1, 3.0), (0, 1, 5.0), (1, 1, 1.0)];
            let mut in_bounds = [false; 4];
            let mut total = 0.0;
            for (t, &(dx, dy, wt)) in targets.iter().enumerate() {
                let xx = x as isize + dx;
                let yy = y as isize + dy;
                if xx >= 0 && xx < w as isize && yy < h as isize {
                    in_bounds[t] = true;
                    total += wt;
                }
            }
            if total == 0.0 {
                continue; // last pixel of the image
            }
            for (t, &(dx, dy, wt)) in targets.iter().enumerate() {
                if in_bounds[t] {
                    let xx = (x as isize + dx) as usize;
                    let yy = (y as isize + dy) as usize;
                    work[yy * w + xx] += error * wt / total;
                }
            }
        }
    }
    Mask::new(w, h, bits)
}

/// Analytic spatial selection: dither the rescaled smoothed Laplacian
/// magnitude `|Δf_σ|^s`, then enforce the exact pixel count by adding
/// (removing) the unset (set) pixels with the largest (smallest) pre-dither
/// density.
pub fn analytic_mask(f: &Image, params: &AnalyticParams) -> Result<Mask> {
    params.validate()?;
    let smoothed = crate::grid::gaussian_smooth(f, params.sigma)?;
    let laplacian = assemble_for(OperatorKind::Homogeneous, f)?;
    let lap = laplacian.apply(smoothed.values());
    let magnitude: Vec<f64> = lap.iter().map(|v| v.abs().powf(params.s)).collect();
    let max = magnitude.iter().cloned().fold(0.0f64, f64::max);
    if max == 0.0 {
        return Err(Error::Numerical(
            "degenerate density: |Laplacian|^s is identically zero".into(),
        ));
    }
    let mean = magnitude.iter().sum::<f64>() / magnitude.len() as f64;
    let scale = params.d * 255.0 / mean;
    let density_values: Vec<f64> = magnitude.iter().map(|&v| (scale * v).clamp(0.0, 255.0)).collect();
    let density = Image::new(f.width(), f.height(), density_values.clone())?;
    let mask = floyd_steinberg_dither(&density)?;

    // Exact-count enforcement.
    let target = target_pixel_count(params.d, f.len());
    let mut bits = mask.bits().to_vec();
    let mut count = bits.iter().filter(|&&b| b).count();
    if count < target {
        let mut unset: Vec<usize> = (0..bits.len()).filter(|&i| !bits[i]).collect();
        // Largest pre-dither density first; ties by lowest index.
        unset.sort_by(|&a, &b| density_values[b].total_cmp(&density_values[a]).then(a.cmp(&b)));
        for &i in unset.iter().take(target - count) {
            bits[i] = true;
        }
    } else if count > target {
        let mut set: Vec<usize> = (0..bits.len()).filter(|&i| bits[i]).collect();
        // Smallest pre-dither density first; ties by lowest index.
        set.sort_by(|&a, &b| density_values[a].total_cmp(&density_values[b]).then(a.cmp(&b)));
        for &i in set.iter().take(count - target) {
            bits[i] = false;
        }
    }
    count = bits.iter().filter(|&&b| b).count();
    debug_assert_eq!(count, target);
    Mask::new(f.width(), f.height(), bits)
}

/// One row of a sparsification or exchange log.
#[derive(Debug, Clone, serde::Serialize)]
pub struct IterationLogRow {
    pub iteration: usize,
    pub mask_pixels: usize,
    pub mse: f64,
}

/// Sparsification result: final mask plus the per-iteration log.
#[derive(Debug, Clone)]
pub struct SparsifyOutcome {
    pub mask: Mask,
    pub log: Vec<IterationLogRow>,
}

/// Caches EED reconstructions so consecutive solves can warm-start from the
/// previous fixed point.
struct Reconstructor<'a> {
    kind: OperatorKind,
    cfg: &'a SolverConfig,
    previous: Option<Image>,
}

impl<'a> Reconstructor<'a> {
    fn new(kind: OperatorKind, cfg: &'a SolverConfig) -> Self {
        Reconstructor { kind, cfg, previous: None }
    }

    fn inpaint(&mut self, mask: &Mask, f: &Image) -> Result<Image> {
        match self.kind {
            OperatorKind::Eed(params) => {
                let sol = solve_eed_with_init(mask, f, params, self.cfg, self.previous.as_ref())?;
                self.previous = Some(sol.image.clone());
                Ok(sol.image)
            }
            linear => {
                let op = assemble_for(linear, f)?;
                crate::inpaint::solve_linear_inpainting(mask, f, &op, self.cfg)
            }
        }
    }
}

/// Probabilistic sparsification: start from the full mask and iteratively
/// delete the candidates whose removal hurts least.
///
/// Per iteration, `max(1, ⌈p·|K|⌉)` candidates leave the mask, the
/// reconstruction is computed, and the `max(1, ⌈q·|T|⌉)` candidates with the
/// smallest local error `(u_i − f_i)²` stay out (capped at the density
/// boundary so the output hits `⌊d·|J|⌉` pixels exactly); the rest are
/// reinstated. Counts round up, which makes the
/// `⌈ln d / ln(1−pq)⌉` termination bound hold unconditionally. Ties in
/// local error break towards the lowest pixel index.
pub fn probabilistic_sparsification(
    f: &Image,
    kind: OperatorKind,
    params: &SparsifyParams,
    cfg: &SolverConfig,
) -> Result<SparsifyOutcome> {
    params.validate()?;
    cfg.validate()?;
    let total = f.len();
    let target = target_pixel_count(params.d, total);
    let mut rng = Pcg32::new(params.seed);
    let mut bits = vec![true; total];
    let mut k_count = total;
    let mut log = Vec::new();
    let mut reconstructor = Reconstructor::new(kind, cfg);
    let mut iteration = 0;

    while k_count > target {
        iteration += 1;
        // Candidate draw from the current mask, ascending pool for determinism.
        let mut pool: Vec<usize> = (0..total).filter(|&i| bits[i]).collect();
        let t_size = ((params.p * k_count as f64).ceil() as usize).clamp(1, k_count);
        let candidates = sample_without_replacement(&mut pool, t_size, &mut rng);
        for &i in &candidates {
            bits[i] = false;
        }
        let mask = Mask::new(f.width(), f.height(), bits.clone())?;
        if mask.count() == 0 {
            // p = 1 removed everything; put the candidates back one step and stop.
            for &i in &candidates {
                bits[i] = true;
            }
            break;
        }
        let u = reconstructor.inpaint(&mask, f)?;
        let mut errors: Vec<(f64, usize)> = candidates
            .iter()
            .map(|&i| ((u.values()[i] - f.values()[i]).powi(2), i))
            .collect();
        // Smallest error first, ties towards the lowest index; those are
        // removed permanently.
        errors.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let remove = ((params.q * errors.len() as f64).ceil() as usize)
            .max(1)
            .min(k_count - target);
        for &(_, i) in errors.iter().skip(remove) {
            bits[i] = true; // reinstate the high-error candidates
        }
        k_count -= remove;
        log.push(IterationLogRow {
            iteration,
            mask_pixels: k_count,
            mse: mse(&u, f)?,
        });
    }
    let mask = Mask::new(f.width(), f.height(), bits)?;
    debug_assert_eq!(mask.count(), target);
    Ok(SparsifyOutcome { mask, log })
}

/// Upper bound on the sparsification iteration count when every iteration
/// removes at least the nominal fraction: ⌈ln d / ln(1 − pq)⌉.
pub fn sparsification_iteration_bound(p: f64, q: f64, d: f64) -> usize {
    (d.ln() / (1.0 - p * q).ln()).ceil() as usize
}

/// Exchange result: final mask plus the accepted-state MSE log.
#[derive(Debug, Clone)]
pub struct ExchangeOutcome {
    pub mask: Mask,
    pub log: Vec<IterationLogRow>,
    pub accepted_swaps: usize,
}

/// Nonlocal pixel exchange: repeatedly propose swapping the worst
/// reconstructed non-mask pixel (among `m` random candidates) with a random
/// mask pixel, keeping the swap only if the global MSE strictly decreases.
///
/// The returned mask has the same density as the input and an MSE no larger
/// than the input's.
pub fn nonlocal_pixel_exchange(
    f: &Image,
    mask: &Mask,
    kind: OperatorKind,
    params: &ExchangeParams,
    cfg: &SolverConfig,
) -> Result<ExchangeOutcome> {
    params.validate()?;
    cfg.validate()?;
    if !mask.same_shape_as_image(f) {
        return Err(Error::DimensionMismatch("mask and image shapes differ".into()));
    }
    let k_count = mask.count();
    if k_count == 0 {
        return Err(Error::InvalidInput("exchange needs a nonempty mask".into()));
    }
    let free = mask.len() - k_count;
    if params.m > free {
        return Err(Error::InvalidInput(format!(
            "candidate set size {} exceeds the {} non-mask pixels",
            params.m, free
        )));
    }

    let mut rng = Pcg32::new(params.seed);
    let mut bits = mask.bits().to_vec();
    let mut reconstructor = Reconstructor::new(kind, cfg);
    let mut current = reconstructor.inpaint(mask, f)?;
    let mut current_mse = mse(&current, f)?;
    let mut accepted = 0usize;
    let mut log = Vec::with_capacity(params.iterations);

    for iteration in 1..=params.iterations {
        // Draw m candidates among the non-mask pixels (ascending pool for
        // determinism) and pick the one with the largest local error; ties
        // break towards the lowest index.
        let mut pool: Vec<usize> = (0..bits.len()).filter(|&i| !bits[i]).collect();
        let candidates = sample_without_replacement(&mut pool, params.m, &mut rng);
        let mut best = candidates[0];
        let mut best_err = f64::NEG_INFINITY;
        for &i in &candidates {
            let e = (current.values()[i] - f.values()[i]).powi(2);
            if e > best_err || (e == best_err && i < best) {
                best_err = e;
                best = i;
            }
        }
        // Random mask pixel to evict.
        let mask_pixels: Vec<usize> = (0..bits.len()).filter(|&i| bits[i]).collect();
        let out = mask_pixels[rng.below(mask_pixels.len())];

        bits[out] = false;
        bits[best] = true;
        let trial_mask = Mask::new(f.width(), f.height(), bits.clone())?;
        let trial = reconstructor.inpaint(&trial_mask, f)?;
        let trial_mse = mse(&trial, f)?;
        if trial_mse < current_mse {
            current = trial;
            current_mse = trial_mse;
            accepted += 1;
        } else {
            // Revert.
            bits[out] = true;
            bits[best] = false;
        }
        log.push(IterationLogRow { iteration, mask_pixels: k_count, mse: current_mse });
    }
    Ok(ExchangeOutcome {
        mask: Mask::new(f.width(), f.height(), bits)?,
        log,
        accepted_swaps: accepted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::OperatorKind;

    fn checkerboard(w: usize, h: usize) -> Image {
        let vals = (0..w * h)
            .map(|i| {
                let (x, y) = (i % w, i / w);
                if (x / 4 + y / 4) % 2 == 0 {
                    40.0
                } else {
                    210.0
                }
            })
            .collect();
        Image::new(w, h, vals).unwrap()
    }

    #[test]
    fn dither_zero_and_saturated() {
        let zero = Image::constant(9, 7, 0.0).unwrap();
        assert_eq!(floyd_steinberg_dither(&zero).unwrap().count(), 0);
        let full = Image::constant(9, 7, 255.0).unwrap();
        assert_eq!(floyd_steinberg_dither(&full).unwrap().count(), 63);
    }

    #[test]
    fn dither_mid_grey_16x16_has_exactly_128_pixels() {
        let img = Image::constant(16, 16, 127.5).unwrap();
        let mask = floyd_steinberg_dither(&img).unwrap();
        assert_eq!(mask.count(), 128);
    }

    #[test]
    fn dither_preserves_average() {
        let img = checkerboard(16, 12);
        let mask = floyd_steinberg_dither(&img).unwrap();
        let mask_mean = mask.count() as f64 * 255.0 / mask.len() as f64;
        assert!(
            (mask_mean - img.mean()).abs() <= 255.0 / img.len() as f64,
            "mask mean {} vs image mean {}",
            mask_mean,
            img.mean()
        );
    }

    #[test]
    fn dither_rejects_out_of_range() {
        let img = Image::new(2, 1, vec![-1.0, 3.0]).unwrap();
        assert!(floyd_steinberg_dither(&img).is_err());
    }

    #[test]
    fn analytic_mask_exact_density() {
        let img = checkerboard(16, 16);
        let params = AnalyticParams { sigma: 1.0, s: 0.8, d: 0.1 };
        let mask = analytic_mask(&img, &params).unwrap();
        assert_eq!(mask.count(), target_pixel_count(0.1, 256));
    }

    #[test]
    fn analytic_mask_rejects_constant_image() {
        let img = Image::constant(8, 8, 99.0).unwrap();
        let params = AnalyticParams { sigma: 1.0, s: 1.0, d: 0.1 };
        let err = analytic_mask(&img, &params).unwrap_err();
        assert!(err.to_string().contains("degenerate density"), "{err}");
    }

    #[test]
    fn sparsification_hits_exact_density_and_is_deterministic() {
        let img = checkerboard(12, 10);
        let params = SparsifyParams { p: 0.3, q: 0.5, d: 0.15, seed: Seed(99) };
        let cfg = SolverConfig::default();
        let a = probabilistic_sparsification(&img, OperatorKind::Homogeneous, &params, &cfg).unwrap();
        let b = probabilistic_sparsification(&img, OperatorKind::Homogeneous, &params, &cfg).unwrap();
        assert_eq!(a.mask, b.mask);
        assert_eq!(a.mask.count(), target_pixel_count(0.15, 120));
        // Mask size shrinks strictly every iteration.
        for w in a.log.windows(2) {
            assert!(w[1].mask_pixels < w[0].mask_pixels);
        }
    }

    #[test]
    fn sparsification_respects_iteration_bound() {
        let img = checkerboard(16, 16);
        let params = SparsifyParams { p: 0.3, q: 0.5, d: 0.2, seed: Seed(3) };
        let cfg = SolverConfig::default();
        let out = probabilistic_sparsification(&img, OperatorKind::Homogeneous, &params, &cfg).unwrap();
        let bound = sparsification_iteration_bound(params.p, params.q, params.d);
        assert!(
            out.log.len() <= bound,
            "{} iterations exceed the bound {}",
            out.log.len(),
            bound
        );
    }

    #[test]
    fn bound_formula_matches_hand_value() {
        // ⌈ln 0.25 / ln 0.95⌉ = 28 for p = 0.1, q = 0.5.
        assert_eq!(sparsification_iteration_bound(0.1, 0.5, 0.25), 28);
    }

    #[test]
    fn exchange_preserves_density_and_never_worsens() {
        let img = checkerboard(10, 8);
        let cfg = SolverConfig::default();
        let mask = Mask::from_indices(10, 8, &[0, 1, 2, 3, 40, 41, 42, 43]).unwrap();
        let op = assemble_for(OperatorKind::Homogeneous, &img).unwrap();
        let before = crate::inpaint::solve_linear_inpainting(&mask, &img, &op, &cfg).unwrap();
        let before_mse = mse(&before, &img).unwrap();
        let params = ExchangeParams { m: 5, iterations: 60, seed: Seed(7) };
        let out = nonlocal_pixel_exchange(&img, &mask, OperatorKind::Homogeneous, &params, &cfg).unwrap();
        assert_eq!(out.mask.count(), mask.count());
        let after = crate::inpaint::solve_linear_inpainting(&out.mask, &img, &op, &cfg).unwrap();
        assert!(mse(&after, &img).unwrap() <= before_mse + 1e-12);
        // Logged MSE trace is non-increasing.
        for w in out.log.windows(2) {
            assert!(w[1].mse <= w[0].mse + 1e-12);
        }
    }

    #[test]
    fn exchange_validates_candidate_size() {
        let img = checkerboard(4, 4);
        let mask = Mask::from_indices(4, 4, &[0, 5]).unwrap();
        let params = ExchangeParams { m: 15, iterations: 5, seed: Seed(1) };
        let cfg = SolverConfig::default();
        assert!(nonlocal_pixel_exchange(&img, &mask, OperatorKind::Homogeneous, &params, &cfg).is_err());
    }

    #[test]
    fn exchange_finds_the_exhaustive_optimum_on_6_pixels() {
        // 1D signal [0,0,0,9,9,9] with 2 mask pixels: compare against all
        // C(6,2) = 15 masks by exhaustive search.
        let img = Image::new(6, 1, vec![0.0, 0.0, 0.0, 9.0, 9.0, 9.0]).unwrap();
        let cfg = SolverConfig::default();
        let op = assemble_for(OperatorKind::Homogeneous, &img).unwrap();
        let mut best = f64::INFINITY;
        for i in 0..6 {
            for j in (i + 1)..6 {
                let m = Mask::from_indices(6, 1, &[i, j]).unwrap();
                let u = crate::inpaint::solve_linear_inpainting(&m, &img, &op, &cfg).unwrap();
                best = best.min(mse(&u, &img).unwrap());
            }
        }
        let start = Mask::from_indices(6, 1, &[0, 1]).unwrap();
        let params = ExchangeParams { m: 2, iterations: 200, seed: Seed(42) };
        let out = nonlocal_pixel_exchange(&img, &start, OperatorKind::Homogeneous, &params, &cfg).unwrap();
        let u = crate::inpaint::solve_linear_inpainting(&out.mask, &img, &op, &cfg).unwrap();
        let got = mse(&u, &img).unwrap();
        assert!((got - best).abs() <= 1e-10, "exchange MSE {} vs optimum {}", got, best);
    }
}
