//! Bernstein-form evaluation and hypergeometric conditional means.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use crate::error::{invalid, Result};

/// Largest index for which binomial weights are formed from exact integers.
pub const EXACT_BINOMIAL_LIMIT: u64 = 64;

/// Evaluates `sum_k C(n,k) c_k p^k (1-p)^(n-k)` for the row `c_0..=c_n`
/// with de Casteljau's algorithm.
pub fn bernstein_eval(coeffs: &[f64], p: f64) -> f64 {
    if coeffs.is_empty() {
        return 0.0;
    }
    let q = 1.0 - p;
    let mut work = coeffs.to_vec();
    for level in (1..work.len()).rev() {
        for i in 0..level {
            work[i] = q * work[i] + p * work[i + 1];
        }
    }
    work[0]
}

fn binomial_u128(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

fn check_indices(m: u64, n: u64, k: u64) -> Result<()> {
    if m >= n {
        return Err(invalid(format!(
            "conditional mean needs m < n, got m={m}, n={n}"
        )));
    }
    if k > n {
        return Err(invalid(format!("heads k={k} exceed tosses n={n}")));
    }
    Ok(())
}

/// `E(c(m, H_m) | H_n = k)` for the row `row = c(m, 0..=m)`.
///
/// Given `H_n = k`, `H_m` is hypergeometric:
/// `P(H_m = i) = C(n-m, k-i) C(m, i) / C(n, k)`. For `m = n - 1` the sum
/// reduces to `(k/n) c(n-1, k-1) + ((n-k)/n) c(n-1, k)`. Weights come from
/// exact integer binomials up to [`EXACT_BINOMIAL_LIMIT`]; beyond it they
/// are built by the ratio recurrence outward from the mode.
pub fn hypergeom_condmean(row: &[f64], n: u64, k: u64) -> Result<f64> {
    if row.is_empty() {
        return Err(invalid("empty coefficient row"));
    }
    let m = row.len() as u64 - 1;
    check_indices(m, n, k)?;
    if m + 1 == n {
        let nf = n as f64;
        let mut acc = 0.0;
        if k >= 1 {
            acc += k as f64 / nf * row[(k - 1) as usize];
        }
        if k <= m {
            acc += (n - k) as f64 / nf * row[k as usize];
        }
        return Ok(acc);
    }
    let lo = k.saturating_sub(n - m);
    let hi = k.min(m);
    let mut acc = 0.0;
    if n <= EXACT_BINOMIAL_LIMIT {
        let total = binomial_u128(n, k) as f64;
        for i in lo..=hi {
            let w = (binomial_u128(n - m, k - i) * binomial_u128(m, i)) as f64 / total;
            acc += w * row[i as usize];
        }
    } else {
        // weights by the ratio recurrence from the mode, normalised at the end
        let (nf, mf, kf) = (n as f64, m as f64, k as f64);
        let mode = (((mf + 1.0) * (kf + 1.0) / (nf + 2.0)).floor() as u64).clamp(lo, hi);
        let ratio = |i: u64| {
            let i = i as f64;
            (mf - i) * (kf - i) / ((i + 1.0) * (nf - mf - kf + i + 1.0))
        };
        let mut total = 1.0;
        acc = row[mode as usize];
        let mut w = 1.0;
        for i in mode..hi {
            w *= ratio(i);
            if w < 1e-300 {
                break;
            }
            total += w;
            acc += w * row[(i + 1) as usize];
        }
        w = 1.0;
        for i in (lo..mode).rev() {
            w /= ratio(i);
            if w < 1e-300 {
                break;
            }
            total += w;
            acc += w * row[i as usize];
        }
        acc /= total;
    }
    Ok(acc)
}

/// Exact rational version of [`hypergeom_condmean`].
pub fn hypergeom_condmean_exact(row: &[BigRational], n: u64, k: u64) -> Result<BigRational> {
    if row.is_empty() {
        return Err(invalid("empty coefficient row"));
    }
    let m = row.len() as u64 - 1;
    check_indices(m, n, k)?;
    let lo = k.saturating_sub(n - m);
    let hi = k.min(m);
    let total = binomial_big(n, k);
    let mut acc = BigRational::zero();
    for i in lo..=hi {
        let w = BigRational::new(
            binomial_big(n - m, k - i) * binomial_big(m, i),
            total.clone(),
        );
        acc += w * &row[i as usize];
    }
    Ok(acc)
}

pub(crate) fn binomial_big(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    num_integer::binomial(BigInt::from(n), BigInt::from(k))
}
