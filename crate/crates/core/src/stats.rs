//! Small statistics toolkit used by the sampler checks and batch reports.

use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::error::{Error, Result};

pub fn median(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

pub fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

/// Pearson chi-square statistic and upper-tail p-value for observed counts
/// against expected counts. Degrees of freedom are `bins - 1 - fitted`.
pub fn chi_square_gof(observed: &[u64], expected: &[f64], fitted: usize) -> Result<(f64, f64)> {
    if observed.len() != expected.len() || observed.len() < 2 + fitted {
        return Err(Error::Parameter("chi-square needs matching bins and positive dof".into()));
    }
    if expected.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::Parameter("expected counts must be positive".into()));
    }
    let stat: f64 = observed
        .iter()
        .zip(expected)
        .map(|(&o, &e)| {
            let d = o as f64 - e;
            d * d / e
        })
        .sum();
    let dof = (observed.len() - 1 - fitted) as f64;
    let dist = ChiSquared::new(dof).map_err(|e| Error::Internal(e.to_string()))?;
    Ok((stat, 1.0 - dist.cdf(stat)))
}

/// Mann-Whitney U test with normal approximation and tie correction.
/// Returns `(U_x, p)` where `p` is the one-sided p-value for the alternative
/// "x tends to be smaller than y".
pub fn mann_whitney_less(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    let (n1, n2) = (x.len(), y.len());
    if n1 == 0 || n2 == 0 {
        return Err(Error::Parameter("rank-sum test needs two non-empty samples".into()));
    }
    let mut all: Vec<(f64, bool)> = x.iter().map(|&v| (v, true)).chain(y.iter().map(|&v| (v, false))).collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = all.len();
    let mut rank_x = 0.0;
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && all[j + 1].0 == all[i].0 {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        rank_x += all[i..=j].iter().filter(|e| e.1).count() as f64 * avg;
        i = j + 1;
    }
    let (f1, f2, nf) = (n1 as f64, n2 as f64, n as f64);
    let u = rank_x - f1 * (f1 + 1.0) / 2.0;
    let mu = f1 * f2 / 2.0;
    let var = f1 * f2 / 12.0 * ((nf + 1.0) - tie_term / (nf * (nf - 1.0)).max(1.0));
    if var <= 0.0 {
        return Ok((u, 0.5));
    }
    // continuity correction toward the null
    let z = (u - mu + 0.5) / var.sqrt();
    let p = Normal::new(0.0, 1.0).map_err(|e| Error::Internal(e.to_string()))?.cdf(z);
    Ok((u, p))
}

/// Integrated autocorrelation time `1 + 2 sum rho(k)` with Sokal's
/// self-consistent window (`c = 5`). Lags are scanned up to `n / 2`.
pub fn integrated_autocorr_time(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 4 {
        return 1.0;
    }
    let m = xs.iter().sum::<f64>() / n as f64;
    let d: Vec<f64> = xs.iter().map(|v| v - m).collect();
    let c0 = d.iter().map(|v| v * v).sum::<f64>() / n as f64;
    if c0 == 0.0 {
        return 1.0;
    }
    let mut tau = 1.0;
    let max_lag = n / 2;
    let mut k = 1;
    // Lags are evaluated on a geometric-then-linear schedule so that very
    // long chains stay affordable: every lag below 64, then every `step`.
    let mut step = 1;
    while k < max_lag {
        let ck = d[..n - k].iter().zip(&d[k..]).map(|(a, b)| a * b).sum::<f64>() / n as f64;
        tau += 2.0 * (ck / c0) * step as f64;
        if (k as f64) >= 5.0 * tau {
            break;
        }
        if k >= 64 {
            step = (k / 32).max(1);
        }
        k += step;
    }
    tau.max(1.0)
}
