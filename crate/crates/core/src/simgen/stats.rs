//! Small statistical helpers for the generators and their tests.

use statrs::function::erf::erfc;

/// Two-sided normal p-value `2 (1 - Phi(|x|))`.
pub fn two_sided_p(x: f64) -> f64 {
    erfc(x.abs() / std::f64::consts::SQRT_2).clamp(0.0, 1.0)
}

/// Upper-tail normal p-value `1 - Phi(x)`.
pub fn one_sided_p(x: f64) -> f64 {
    (0.5 * erfc(x / std::f64::consts::SQRT_2)).clamp(0.0, 1.0)
}

/// One-sample Kolmogorov–Smirnov test against Uniform[0, 1]. Returns the
/// statistic and its asymptotic p-value (with Stephens' small-sample
/// correction).
pub fn ks_uniform(samples: &[f64]) -> (f64, f64) {
    let n = samples.len();
    if n == 0 {
        return (0.0, 1.0);
    }
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    let nf = n as f64;
    let d = v
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let x = x.clamp(0.0, 1.0);
            ((i + 1) as f64 / nf - x).max(x - i as f64 / nf)
        })
        .fold(0.0, f64::max);
    let sn = nf.sqrt();
    (d, kolmogorov_q((sn + 0.12 + 0.11 / sn) * d))
}

/// `Q(lambda) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2)`.
fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=200 {
        let kf = k as f64;
        let term = sign * (-2.0 * kf * kf * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}
