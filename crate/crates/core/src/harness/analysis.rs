use super::HarnessError;

/// Shortest analysable trace, in cycles.
pub const MIN_CYCLES: usize = 5;

/// Mean frequency from upward zero crossings of the mean-removed signal,
/// located by linear interpolation.
pub fn zero_crossing_frequency(t: &[f64], x: &[f64]) -> Result<f64, HarnessError> {
    if t.len() != x.len() {
        return Err(HarnessError::Analysis("time and signal lengths differ".into()));
    }
    let mean = x.iter().sum::<f64>() / x.len().max(1) as f64;
    let mut crossings = Vec::new();
    for i in 1..x.len() {
        let (a, b) = (x[i - 1] - mean, x[i] - mean);
        if a < 0.0 && b >= 0.0 {
            crossings.push(t[i - 1] + (t[i] - t[i - 1]) * (-a) / (b - a));
        }
    }
    if crossings.len() < MIN_CYCLES + 1 {
        return Err(HarnessError::TooShort(format!(
            "{} upward crossings; need {} (five full cycles)",
            crossings.len(),
            MIN_CYCLES + 1
        )));
    }
    Ok((crossings.len() - 1) as f64 / (crossings[crossings.len() - 1] - crossings[0]))
}

/// Delay (in samples, fractional) at which `b` best matches `a`: the lag `k`
/// maximizing `Σ a[i] b[i + k]` over `|k| <= max_lag`. Positive means `b`
/// lags `a`. Both signals are mean-removed; indices wrap, so the window
/// should span whole cycles.
pub fn cross_correlation_lag(a: &[f64], b: &[f64], max_lag: usize) -> Result<f64, HarnessError> {
    let n = a.len();
    if n != b.len() || n < 4 {
        return Err(HarnessError::TooShort("need two equal-length signals of at least 4 samples".into()));
    }
    let ma = a.iter().sum::<f64>() / n as f64;
    let mb = b.iter().sum::<f64>() / n as f64;
    let a: Vec<f64> = a.iter().map(|v| v - ma).collect();
    let b: Vec<f64> = b.iter().map(|v| v - mb).collect();
    let max_lag = max_lag.min(n / 2) as i64;
    let corr = |k: i64| -> f64 {
        (0..n).map(|i| a[i] * b[((i as i64 + k).rem_euclid(n as i64)) as usize]).sum()
    };
    let (mut best_k, mut best) = (0i64, f64::NEG_INFINITY);
    for k in -max_lag..=max_lag {
        let c = corr(k);
        if c > best {
            best = c;
            best_k = k;
        }
    }
    let (l, r) = (corr(best_k - 1), corr(best_k + 1));
    let denom = l - 2.0 * best + r;
    let frac = if denom < 0.0 { 0.5 * (l - r) / denom } else { 0.0 };
    Ok(best_k as f64 + frac.clamp(-0.5, 0.5))
}

/// Wraps a phase in cycles to `[-0.5, 0.5)`.
pub fn wrap_cycles(x: f64) -> f64 {
    (x + 0.5).rem_euclid(1.0) - 0.5
}

pub fn rmse(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    (a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len().max(1) as f64).sqrt()
}

/// Index of the first sample below `threshold` whose predecessor was at or
/// above it.
pub fn first_downward_crossing(x: &[f64], threshold: f64) -> Option<usize> {
    (1..x.len()).find(|&i| x[i - 1] >= threshold && x[i] < threshold)
}

/// Largest window start..end (end exclusive) past `start` spanning a whole
/// number of cycles of `period` samples.
pub fn whole_cycles(start: usize, len: usize, period: f64) -> Result<std::ops::Range<usize>, HarnessError> {
    let avail = len.saturating_sub(start) as f64;
    let cycles = (avail / period).floor();
    if cycles < MIN_CYCLES as f64 {
        return Err(HarnessError::TooShort(format!(
            "{avail} samples after warm-up hold fewer than {MIN_CYCLES} cycles of {period:.1}"
        )));
    }
    Ok(start..start + (cycles * period).round() as usize)
}
