//! One-dimensional convex minimization.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for the minimizer of a unimodal `f` on `[a, b]`.
///
/// Stops once the bracket is narrower than `tol`. The endpoints are compared
/// against the interior estimate, so minimizers sitting on the boundary are
/// returned exactly. Ties prefer the smaller `x`.
pub fn golden_section_min(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> (f64, f64) {
    if !(b > a) {
        return (a, f(a));
    }
    let (mut lo, mut hi) = (a, b);
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
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
    let mid = 0.5 * (lo + hi);
    let mut best = (a, f(a));
    for x in [mid, b] {
        let fx = f(x);
        if fx < best.1 {
            best = (x, fx);
        }
    }
    best
}
