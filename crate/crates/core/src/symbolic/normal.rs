//! Standard normal quantiles for SAX breakpoints.

#![allow(clippy::excessive_precision)]

// Rational approximation by P. J. Acklam, relative error below 1.2e-9.
const A: [f64; 6] = [
    -3.969683028665376e+01,
    2.209460984245205e+02,
    -2.759285104469687e+02,
    1.383577518672690e+02,
    -3.066479806614716e+01,
    2.506628277459239e+00,
];
const B: [f64; 5] = [
    -5.447609879822406e+01,
    1.615858368580409e+02,
    -1.556989798598866e+02,
    6.680131188771972e+01,
    -1.328068155288572e+01,
];
const C: [f64; 6] = [
    -7.784894002430293e-03,
    -3.223964580411365e-01,
    -2.400758277161838e+00,
    -2.549732539343734e+00,
    4.374664141464968e+00,
    2.938163982698783e+00,
];
const D: [f64; 4] = [7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00, 3.754408661907416e+00];

const P_LOW: f64 = 0.02425;

/// Inverse of the standard normal CDF for `p` in `(0, 1)`.
pub fn inverse_normal_cdf(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "probability {p} outside (0, 1)");
    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -inverse_normal_cdf(1.0 - p)
    }
}

/// The `a - 1` cut points splitting the standard normal into `a`
/// equal-probability regions. Symmetric around zero.
pub fn breakpoints(alphabet_size: usize) -> Vec<f64> {
    let a = alphabet_size as f64;
    let mut cuts: Vec<f64> = (1..alphabet_size).map(|k| inverse_normal_cdf(k as f64 / a)).collect();
    // Exact symmetry keeps mirrored series mapping to mirrored symbols.
    let m = cuts.len();
    for k in 0..m / 2 {
        let v = 0.5 * (cuts[m - 1 - k] - cuts[k]);
        cuts[k] = -v;
        cuts[m - 1 - k] = v;
    }
    if m % 2 == 1 {
        cuts[m / 2] = 0.0;
    }
    cuts
}
