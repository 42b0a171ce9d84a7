//! One-dimensional search used by the threshold optimizers.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section minimization of a unimodal `f` on `[lo, hi]`.
pub(crate) fn golden_min<F: FnMut(f64) -> f64>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> (f64, f64) {
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Uniform grid of `points` evaluations, then golden-section refinement in
/// the bracket around the best grid point. Never returns worse than the grid.
pub(crate) fn grid_golden_min<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    points: usize,
    tol: f64,
) -> (f64, f64) {
    debug_assert!(points >= 2 && hi >= lo);
    let step = (hi - lo) / (points - 1) as f64;
    let grid = |i: usize| {
        if i + 1 == points {
            hi
        } else {
            lo + step * i as f64
        }
    };
    let mut best = (lo, f(lo));
    let mut best_i = 0;
    for i in 1..points {
        let x = grid(i);
        let fx = f(x);
        // NaN never wins.
        if fx < best.1 || best.1.is_nan() {
            best = (x, fx);
            best_i = i;
        }
    }
    if step == 0.0 {
        return best;
    }
    let a = grid(best_i.saturating_sub(1));
    let b = grid((best_i + 1).min(points - 1));
    let refined = golden_min(&mut f, a, b, tol);
    if refined.1 < best.1 {
        refined
    } else {
        best
    }
}
