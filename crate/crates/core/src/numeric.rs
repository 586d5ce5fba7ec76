//! Small floating-point helpers shared by the kernels.

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Compensated sum of an iterator of values.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<CompensatedSum>().value()
}

/// Streaming accumulator for a sum of `exp(log_term)` values.
///
/// Terms are summed in linear space relative to a running scale; the scale
/// only moves once the running sum would leave the normal range, so ordinary
/// tails stay in plain compensated linear arithmetic.
#[derive(Debug, Clone, Copy)]
pub struct LogSumExp {
    scale: f64,
    acc: CompensatedSum,
}

impl Default for LogSumExp {
    fn default() -> Self {
        Self {
            scale: 0.0,
            acc: CompensatedSum::new(),
        }
    }
}

const UNDERFLOW: f64 = 1e-300;

impl LogSumExp {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_log(&mut self, log_term: f64) {
        if log_term == f64::NEG_INFINITY {
            return;
        }
        let rel = (log_term - self.scale).exp();
        let current = self.acc.value();
        if rel > 1e300 || (current < UNDERFLOW && rel < UNDERFLOW) {
            // Rebase onto the larger of the two magnitudes.
            let current_log = if current > 0.0 {
                self.scale + current.ln()
            } else {
                f64::NEG_INFINITY
            };
            let new_scale = current_log.max(log_term);
            let mut acc = CompensatedSum::new();
            if current > 0.0 {
                acc.add((current_log - new_scale).exp());
            }
            acc.add((log_term - new_scale).exp());
            self.scale = new_scale;
            self.acc = acc;
        } else {
            self.acc.add(rel);
        }
    }

    pub fn merge(&mut self, other: &LogSumExp) {
        let v = other.acc.value();
        if v > 0.0 {
            self.add_log(other.scale + v.ln());
        }
    }

    /// Natural log of the accumulated sum (`-inf` when empty).
    pub fn ln(&self) -> f64 {
        let v = self.acc.value();
        if v > 0.0 {
            self.scale + v.ln()
        } else {
            f64::NEG_INFINITY
        }
    }
}

/// Binomial coefficient `C(n, r)` as a float; saturates to `inf`.
pub fn binomial_f64(n: u64, r: u64) -> f64 {
    if r > n {
        return 0.0;
    }
    let r = r.min(n - r);
    let mut acc = 1.0f64;
    for i in 0..r {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
        if !acc.is_finite() {
            return f64::INFINITY;
        }
    }
    acc.round()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_beats_naive_on_cancellation() {
        let xs = [1.0, 1e100, 1.0, -1e100];
        assert_eq!(compensated_sum(xs), 2.0);
    }

    #[test]
    fn log_sum_handles_tiny_terms() {
        let mut acc = LogSumExp::new();
        for _ in 0..10 {
            acc.add_log(-1000.0);
        }
        assert!((acc.ln() - (-1000.0 + 10f64.ln())).abs() < 1e-12);
        acc.add_log(0.0);
        assert!(acc.ln().abs() < 1e-12);
    }

    #[test]
    fn log_sum_merge_matches_sequential() {
        let terms = [-3.0, -700.5, -1.25, -0.5, -800.0];
        let mut all = LogSumExp::new();
        terms.iter().for_each(|&t| all.add_log(t));
        let mut a = LogSumExp::new();
        let mut b = LogSumExp::new();
        terms[..2].iter().for_each(|&t| a.add_log(t));
        terms[2..].iter().for_each(|&t| b.add_log(t));
        a.merge(&b);
        assert!((a.ln() - all.ln()).abs() < 1e-14);
    }

    #[test]
    fn binomial_small_values() {
        assert_eq!(binomial_f64(3, 1), 3.0);
        assert_eq!(binomial_f64(4, 2), 6.0);
        assert_eq!(binomial_f64(33, 3), 5456.0);
        assert_eq!(binomial_f64(2, 5), 0.0);
    }
}
