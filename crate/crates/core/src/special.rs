//! Hurwitz zeta and the periodized power kernels built from it.

use std::f64::consts::PI;

// B_{2j}/(2j)! for j = 1..10
const BERNOULLI_OVER_FACT: [f64; 10] = [
    1.0 / 12.0,
    -1.0 / 720.0,
    1.0 / 30240.0,
    -1.0 / 1209600.0,
    1.0 / 47900160.0,
    -691.0 / 1307674368000.0,
    1.0 / 74724249600.0,
    -3617.0 / 10670622842880000.0,
    43867.0 / 5109094217170944000.0,
    -174611.0 / 802857662698291200000.0,
];

/// Hurwitz zeta ζ(s, a) for a > 0 and s ≠ 1, analytically continued to s < 1.
pub fn hurwitz_zeta(s: f64, a: f64) -> f64 {
    assert!(a > 0.0, "hurwitz_zeta needs a > 0");
    assert!((s - 1.0).abs() > 1e-12, "pole at s = 1");
    let big_n = 12usize;
    let mut sum = 0.0;
    for k in 0..big_n {
        sum += (k as f64 + a).powf(-s);
    }
    let x = big_n as f64 + a;
    sum += x.powf(1.0 - s) / (s - 1.0) + 0.5 * x.powf(-s);
    // Euler-Maclaurin tail: sum_j B_2j/(2j)! * s(s+1)...(s+2j-2) x^{-s-2j+1}
    let mut rising = s;
    let mut xp = x.powf(-s - 1.0);
    for (j, b) in BERNOULLI_OVER_FACT.iter().enumerate() {
        let term = b * rising * xp;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
        let k = 2.0 * j as f64;
        rising *= (s + k + 1.0) * (s + k + 2.0);
        xp /= x * x;
    }
    sum
}

pub fn riemann_zeta(s: f64) -> f64 {
    hurwitz_zeta(s, 1.0)
}

/// c_σ with |ξ|^σ = c_σ · PV∫ (f(x) − f(y)) / |x − y|^{1+σ} dy.
pub fn c_sigma(sigma: f64) -> f64 {
    use statrs::function::gamma::gamma;
    sigma * 2f64.powf(sigma - 1.0) * gamma((1.0 + sigma) / 2.0)
        / (PI.sqrt() * gamma(1.0 - sigma / 2.0))
}

/// Period-L sum of |t|^{-s} sampled at t = jL/n, j = 0..n. Entry 0 is left at 0.
/// For s < 1 the sum is the zeta-regularized one, which has zero mean.
pub fn periodized_even(s: f64, n: usize, period: f64) -> Vec<f64> {
    mirrored(n, 1.0, |a| period.powf(-s) * (hurwitz_zeta(s, a) + hurwitz_zeta(s, 1.0 - a)))
}

/// Period-L sum of sgn(t)|t|^{-s}, same sampling as [`periodized_even`].
pub fn periodized_odd(s: f64, n: usize, period: f64) -> Vec<f64> {
    mirrored(n, -1.0, |a| period.powf(-s) * (hurwitz_zeta(s, a) - hurwitz_zeta(s, 1.0 - a)))
}

/// (1/L) cot(π t / L) at t = jL/n; the periodic kernel of 1/(π t).
pub fn cot_kernel(n: usize, period: f64) -> Vec<f64> {
    mirrored(n, -1.0, |a| 1.0 / (period * (PI * a).tan()))
}

// Table over a = j/n computed for j <= n/2 and mirrored with the given parity,
// so that even/odd symmetry holds bit for bit.
fn mirrored(n: usize, parity: f64, f: impl Fn(f64) -> f64) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for j in 1..=n / 2 {
        let v = f(j as f64 / n as f64);
        out[j] = v;
        out[n - j] = parity * v;
    }
    if parity < 0.0 {
        out[n / 2] = 0.0;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeta_known_values() {
        assert!((riemann_zeta(2.0) - PI * PI / 6.0).abs() < 1e-14);
        assert!((riemann_zeta(0.0) + 0.5).abs() < 1e-14);
        assert!((riemann_zeta(-1.0) + 1.0 / 12.0).abs() < 1e-14);
        assert!((riemann_zeta(0.5) + 1.4603545088095868).abs() < 1e-13);
        // ζ(s, 1/2) = (2^s − 1) ζ(s)
        let s = 1.5;
        let lhs = hurwitz_zeta(s, 0.5);
        assert!((lhs - (2f64.powf(s) - 1.0) * riemann_zeta(s)).abs() < 1e-12);
    }

    #[test]
    fn small_argument_matches_leading_power() {
        let a = 1e-3;
        let z = hurwitz_zeta(1.5, a);
        assert!((z - a.powf(-1.5) - hurwitz_zeta(1.5, 1.0 + a)).abs() < 1e-9);
    }

    #[test]
    fn c_sigma_closed_forms() {
        assert!((c_sigma(1.0) - 1.0 / PI).abs() < 1e-14);
        assert!((c_sigma(0.5) - 1.0 / (2.0 * (2.0 * PI).sqrt())).abs() < 1e-14);
    }

    #[test]
    fn regularized_even_kernel_has_zero_mean() {
        let n = 256;
        let w = periodized_even(0.5, n, 10.0);
        // the omitted j = 0 cell contributes 2ζ(s)Δ^{1-s} from the singular part
        // and −2ζ(s)L^{-s}Δ from the smooth remainder
        let d = 10.0 / n as f64;
        let sum: f64 = w.iter().sum::<f64>() * d;
        let cell = 2.0 * riemann_zeta(0.5) * (d.sqrt() - d / 10f64.sqrt());
        assert!((sum - cell).abs() < 1e-6, "{sum} vs {cell}");
    }

    #[test]
    fn odd_kernel_is_odd() {
        let w = periodized_odd(0.5, 64, 3.0);
        for j in 1..64 {
            assert!((w[j] + w[64 - j]).abs() < 1e-12);
        }
    }
}
