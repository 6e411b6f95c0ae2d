/// Smoothed 0-1 loss and its derivative.
///
/// `1` for `u < -1`, `0` for `u > 1`, and the cubic
/// `u^3/4 - 3u/4 + 1/2` in between, which joins both constants with zero
/// slope.
pub fn smoothed01_loss(u: f64) -> (f64, f64) {
    if u > 1.0 {
        (0.0, 0.0)
    } else if u >= -1.0 {
        (0.25 * u * u * u - 0.75 * u + 0.5, 0.75 * u * u - 0.75)
    } else {
        (1.0, 0.0)
    }
}

/// Exponential S-shaped utility and its derivative: concave
/// `(1 - e^{-psi1 u}) / psi1` on gains, convex `(e^{psi2 u} - 1) / psi2` on
/// losses.
pub fn exp_utility(u: f64, psi1: f64, psi2: f64) -> (f64, f64) {
    if u >= 0.0 {
        (-(-psi1 * u).exp_m1() / psi1, (-psi1 * u).exp())
    } else {
        ((psi2 * u).exp_m1() / psi2, (psi2 * u).exp())
    }
}
