//! Fourth-order finite differences on a uniform grid. Interior nodes use
//! centered five-point stencils; the two nodes at each end use one-sided
//! stencils of the same order.

/// First derivative at node `i`.
pub fn d1_at(f: &[f64], i: usize, dr: f64) -> f64 {
    let n = f.len();
    debug_assert!(n >= 6);
    let s = 12.0 * dr;
    if i >= 2 && i + 2 < n {
        (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]) / s
    } else if i == 0 {
        (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) / s
    } else if i == 1 {
        (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) / s
    } else if i == n - 2 {
        (3.0 * f[n - 1] + 10.0 * f[n - 2] - 18.0 * f[n - 3] + 6.0 * f[n - 4] - f[n - 5]) / s
    } else {
        (25.0 * f[n - 1] - 48.0 * f[n - 2] + 36.0 * f[n - 3] - 16.0 * f[n - 4] + 3.0 * f[n - 5]) / s
    }
}

/// Second derivative at node `i`.
pub fn d2_at(f: &[f64], i: usize, dr: f64) -> f64 {
    let n = f.len();
    debug_assert!(n >= 6);
    let s = 12.0 * dr * dr;
    if i >= 2 && i + 2 < n {
        (-f[i - 2] + 16.0 * f[i - 1] - 30.0 * f[i] + 16.0 * f[i + 1] - f[i + 2]) / s
    } else if i == 0 {
        (45.0 * f[0] - 154.0 * f[1] + 214.0 * f[2] - 156.0 * f[3] + 61.0 * f[4] - 10.0 * f[5]) / s
    } else if i == 1 {
        (10.0 * f[0] - 15.0 * f[1] - 4.0 * f[2] + 14.0 * f[3] - 6.0 * f[4] + f[5]) / s
    } else if i == n - 2 {
        (10.0 * f[n - 1] - 15.0 * f[n - 2] - 4.0 * f[n - 3] + 14.0 * f[n - 4] - 6.0 * f[n - 5] + f[n - 6]) / s
    } else {
        (45.0 * f[n - 1] - 154.0 * f[n - 2] + 214.0 * f[n - 3] - 156.0 * f[n - 4] + 61.0 * f[n - 5]
            - 10.0 * f[n - 6])
            / s
    }
}

pub fn d1(f: &[f64], dr: f64) -> Vec<f64> {
    (0..f.len()).map(|i| d1_at(f, i, dr)).collect()
}

pub fn d2(f: &[f64], dr: f64) -> Vec<f64> {
    (0..f.len()).map(|i| d2_at(f, i, dr)).collect()
}
