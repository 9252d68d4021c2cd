//! Central finite differences for checking analytic gradients.

/// Coordinates whose gradients are both below this magnitude are compared
/// on an absolute scale of `FLOOR * tolerance`.
pub const FLOOR: f64 = 1e-4;

pub const STEP: f64 = 1e-5;

pub const TOLERANCE: f64 = 1e-4;

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(FLOOR)
}

/// `(f(x + h e_i) - f(x - h e_i)) / 2h` for every coordinate of `x`.
pub fn central_differences<F>(x: &[f64], step: f64, mut f: F) -> Vec<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + step;
            let plus = f(&probe);
            probe[i] = x[i] - step;
            let minus = f(&probe);
            probe[i] = x[i];
            (plus - minus) / (2.0 * step)
        })
        .collect()
}

/// Largest relative error over all coordinates.
pub fn max_relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    analytic
        .iter()
        .zip(numeric)
        .map(|(&a, &n)| relative_error(a, n))
        .fold(0.0, f64::max)
}
