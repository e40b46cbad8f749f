//! Small numeric helpers shared across modules.

/// Neumaier-compensated sum. Deterministic for a fixed iteration order and
/// keeps accumulation error near one ulp even over millions of terms.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(items: I) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for x in items {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

pub fn mean(values: &[f64]) -> f64 {
    compensated_sum(values.iter().copied()) / values.len() as f64
}

/// Sample standard deviation (n - 1 denominator).
pub fn sample_std(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(values);
    let ss = compensated_sum(values.iter().map(|v| (v - m) * (v - m)));
    (ss / (n - 1) as f64).sqrt()
}

/// `floor(t / dt)` robust to the quotient landing one ulp under an integer.
pub fn step_count(t: f64, dt: f64) -> usize {
    let ratio = t / dt;
    let rounded = ratio.round();
    if (ratio - rounded).abs() <= 1e-9 * rounded.max(1.0) {
        rounded as usize
    } else {
        ratio.floor() as usize
    }
}
