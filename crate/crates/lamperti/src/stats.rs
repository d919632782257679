//! Distributional targets and test statistics: empirical distributions,
//! one- and two-sample Kolmogorov–Smirnov tests, the inverse-gamma reference
//! law `1/(2s²γ_shape)`, gamma-function moment formulas and normal
//! confidence intervals. Everything here is pure and stateless.

use crate::error::{Error, Result};

// ---------------------------------------------------------------------------
// Gamma-function machinery
// ---------------------------------------------------------------------------

/// Lanczos approximation (g = 7, 9 coefficients).
const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Γ(x)` for `x > 0`, accurate to about 1e-12 relative.
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::domain(format!("log_gamma requires x > 0, got {x}")));
    }
    Ok(log_gamma_unchecked(x))
}

fn log_gamma_unchecked(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection: Γ(x)Γ(1-x) = π / sin(πx).
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - log_gamma_unchecked(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

const GAMMA_EPS: f64 = 1e-15;
const GAMMA_ITMAX: usize = 800;

/// Lower regularized incomplete gamma `P(a, x) = γ(a,x)/Γ(a)`.
pub fn regularized_gamma_p(a: f64, x: f64) -> Result<f64> {
    if !(a > 0.0) || !(x >= 0.0) {
        return Err(Error::domain(format!(
            "regularized gamma needs a > 0, x >= 0 (a = {a}, x = {x})"
        )));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    // Series for x < a + 1, continued fraction otherwise.
    if x < a + 1.0 {
        Ok(gamma_p_series(a, x))
    } else {
        Ok(1.0 - gamma_q_cf(a, x))
    }
}

/// Upper regularized incomplete gamma `Q(a, x) = 1 - P(a, x)`.
pub fn regularized_gamma_q(a: f64, x: f64) -> Result<f64> {
    if !(a > 0.0) || !(x >= 0.0) {
        return Err(Error::domain(format!(
            "regularized gamma needs a > 0, x >= 0 (a = {a}, x = {x})"
        )));
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    if x < a + 1.0 {
        Ok(1.0 - gamma_p_series(a, x))
    } else {
        Ok(gamma_q_cf(a, x))
    }
}

fn gamma_p_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut term = 1.0 / a;
    let mut sum = term;
    for _ in 0..GAMMA_ITMAX {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * GAMMA_EPS {
            break;
        }
    }
    sum * (-x + a * x.ln() - log_gamma_unchecked(a)).exp()
}

/// Modified Lentz continued fraction for Q(a, x), valid for x >= a + 1.
fn gamma_q_cf(a: f64, x: f64) -> f64 {
    let tiny = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..=GAMMA_ITMAX {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < GAMMA_EPS {
            break;
        }
    }
    (-x + a * x.ln() - log_gamma_unchecked(a)).exp() * h
}

// ---------------------------------------------------------------------------
// Inverse-gamma reference law
// ---------------------------------------------------------------------------

/// CDF of `1/(2 s² γ_{(1+r)/2})` at `x > 0`, where `γ_shape` is a standard
/// Gamma variable: `P(X ≤ x) = Q(shape, 1/(2 s² x))`.
pub fn inverse_gamma_cdf(x: f64, r: f64, s2: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::domain(format!(
            "inverse_gamma_cdf requires x > 0, got {x}"
        )));
    }
    if !(r > -1.0) || !(s2 > 0.0) {
        return Err(Error::domain(format!(
            "inverse_gamma_cdf requires r > -1, s2 > 0 (r = {r}, s2 = {s2})"
        )));
    }
    let shape = 0.5 * (1.0 + r);
    regularized_gamma_q(shape, 1.0 / (2.0 * s2 * x))
}

/// `q`-th moment of `1/(2 s² γ_{(1+r)/2})`:
/// `(2s²)^{-q} Γ(shape - q) / Γ(shape)`, finite only for `q < shape`.
pub fn inverse_gamma_moment(r: f64, s2: f64, q: f64) -> Result<f64> {
    let shape = 0.5 * (1.0 + r);
    if !(q >= 0.0) || q >= shape {
        return Err(Error::domain(format!(
            "moment order must satisfy 0 <= q < (1+r)/2 = {shape}, got {q}"
        )));
    }
    if !(s2 > 0.0) {
        return Err(Error::domain(format!("s2 must be positive, got {s2}")));
    }
    let ln = log_gamma(shape - q)? - log_gamma(shape)? - q * (2.0 * s2).ln();
    Ok(ln.exp())
}

// ---------------------------------------------------------------------------
// Empirical distributions and KS tests
// ---------------------------------------------------------------------------

/// A sorted sample with uniform weights.
#[derive(Debug, Clone)]
pub struct EmpiricalDistribution {
    values: Vec<f64>,
}

impl EmpiricalDistribution {
    /// Sorts the sample. Non-finite values are rejected.
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("empirical distribution needs size >= 1"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("empirical distribution has non-finite values"));
        }
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(Self { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Right-continuous ECDF value at `x`.
    pub fn cdf(&self, x: f64) -> f64 {
        let k = self.values.partition_point(|&v| v <= x);
        k as f64 / self.values.len() as f64
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

/// Asymptotic Kolmogorov survival function `P(sup |B| > z)` for the limiting
/// statistic `√n · D`. Uses the alternating series for moderate z and the
/// theta-dual series for small z.
pub fn kolmogorov_pvalue(z: f64) -> f64 {
    if z <= 0.0 {
        return 1.0;
    }
    if z < 1.18 {
        // K(z) = sqrt(2π)/z Σ exp(-(2k-1)² π² / (8z²)); p = 1 - K(z).
        let pi = std::f64::consts::PI;
        let mut k_cdf = 0.0;
        for k in 1..=30 {
            let m = (2 * k - 1) as f64;
            k_cdf += (-(m * m) * pi * pi / (8.0 * z * z)).exp();
        }
        k_cdf *= (2.0 * pi).sqrt() / z;
        (1.0 - k_cdf).clamp(0.0, 1.0)
    } else {
        // p = 2 Σ (-1)^{k-1} exp(-2k²z²), at least 10 terms evaluated.
        let mut p = 0.0;
        let mut sign = 1.0;
        for k in 1..=100 {
            let term = (-2.0 * (k * k) as f64 * z * z).exp();
            p += sign * term;
            sign = -sign;
            if k >= 10 && term < 1e-16 {
                break;
            }
        }
        (2.0 * p).clamp(0.0, 1.0)
    }
}

/// Asymptotic critical value for the KS statistic at significance `alpha`
/// and effective sample size `n_eff`: `D_crit = sqrt(-ln(alpha/2) / 2) / sqrt(n_eff)`.
pub fn ks_critical_value(alpha: f64, n_eff: f64) -> f64 {
    (-(alpha / 2.0).ln() / 2.0).sqrt() / n_eff.sqrt()
}

/// One-sample KS test of a sample against a CDF. Returns `(D, p-value)`.
pub fn ks_one_sample(sample: &EmpiricalDistribution, cdf: impl Fn(f64) -> f64) -> (f64, f64) {
    let n = sample.len();
    let nf = n as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sample.values().iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / nf).max((i + 1) as f64 / nf - f);
    }
    (d, kolmogorov_pvalue(nf.sqrt() * d))
}

/// Two-sample KS test. The p-value uses the harmonic effective size
/// `n_eff = n·m/(n+m)` in the asymptotic Kolmogorov law. Returns `(D, p-value)`.
pub fn ks_two_sample(a: &EmpiricalDistribution, b: &EmpiricalDistribution) -> (f64, f64) {
    let (xa, xb) = (a.values(), b.values());
    let (na, nb) = (xa.len() as f64, xb.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < xa.len() && j < xb.len() {
        let v = xa[i].min(xb[j]);
        while i < xa.len() && xa[i] <= v {
            i += 1;
        }
        while j < xb.len() && xb[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let n_eff = na * nb / (na + nb);
    (d, kolmogorov_pvalue(n_eff.sqrt() * d))
}

/// Chi-square upper tail probability with `dof` degrees of freedom.
pub fn chi_square_pvalue(stat: f64, dof: f64) -> Result<f64> {
    regularized_gamma_q(0.5 * dof, 0.5 * stat)
}

// ---------------------------------------------------------------------------
// Normal confidence intervals
// ---------------------------------------------------------------------------

/// Standard normal quantile (Acklam's rational approximation, |rel| < 1.2e-9).
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!(
            "normal quantile requires p in (0,1), got {p}"
        )));
    }
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_690e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    let p_low = 0.02425;
    let x = if p < p_low {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - p_low {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -((((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0))
    };
    Ok(x)
}

/// Normal-approximation confidence interval for the mean at the given
/// two-sided level. Returns `(mean, half_width)`. Meant for samples of size
/// at least 30; smaller samples get the same formula.
pub fn mean_ci(sample: &[f64], level: f64) -> Result<(f64, f64)> {
    if sample.is_empty() {
        return Err(Error::invalid("mean_ci needs a nonempty sample"));
    }
    let n = sample.len() as f64;
    let mean = sample.iter().sum::<f64>() / n;
    let var = sample.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    let z = normal_quantile(0.5 + level / 2.0)?;
    Ok((mean, z * (var / n).sqrt()))
}
