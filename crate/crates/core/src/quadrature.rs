//! Adaptive Simpson quadrature.

/// Integrates `f` over `[a, b]` to roughly `rel_tol` relative accuracy.
///
/// The tolerance is turned into an absolute budget against a coarse
/// composite-Simpson estimate of ∫|f|, so integrands that vanish on parts of
/// the domain (absolute-error curves with kinks) still terminate.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> f64 {
    assert!(b > a, "empty integration interval");
    // Scale estimate from 128 panels of |f|.
    let panels = 128;
    let h = (b - a) / panels as f64;
    let mut scale = 0.0;
    for k in 0..panels {
        let x0 = a + k as f64 * h;
        scale += h / 6.0 * (f(x0).abs() + 4.0 * f(x0 + h / 2.0).abs() + f(x0 + h).abs());
    }
    let abs_tol = rel_tol * scale.max(1e-300);

    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = simpson(a, b, fa, fm, fb);
    adapt(&f, a, fa, m, fm, b, fb, whole, abs_tol, 60)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adapt<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    fa: f64,
    m: f64,
    fm: f64,
    b: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: usize,
) -> f64 {
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    adapt(f, a, fa, lm, flm, m, fm, left, tol / 2.0, depth - 1)
        + adapt(f, m, fm, rm, frm, b, fb, right, tol / 2.0, depth - 1)
}
