//! Neumaier compensated accumulators. Results depend only on insertion order,
//! so callers that merge parallel partials in a fixed order stay deterministic.

use num_complex::Complex64;

#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
    count: u64,
    abs: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
        self.count += 1;
        self.abs += x.abs();
    }

    pub fn merge(&mut self, other: &NeumaierSum) {
        self.add(other.sum);
        self.add(other.comp);
        self.count += other.count.saturating_sub(2);
        self.abs += other.abs - other.sum.abs() - other.comp.abs();
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    /// Sum of absolute values of everything added.
    pub fn abs_total(&self) -> f64 {
        self.abs
    }

    /// Conservative rounding bound: 4 ulp per term against the absolute mass.
    pub fn error_bound(&self) -> f64 {
        4.0 * f64::EPSILON * self.count.max(1) as f64 * self.abs.max(self.value().abs())
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = NeumaierSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ComplexSum {
    pub re: NeumaierSum,
    pub im: NeumaierSum,
}

impl ComplexSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    pub fn merge(&mut self, other: &ComplexSum) {
        self.re.merge(&other.re);
        self.im.merge(&other.im);
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }

    pub fn error_bound(&self) -> f64 {
        self.re.error_bound().hypot(self.im.error_bound())
    }
}

/// Compensated sum of a slice in index order.
pub fn sum_f64(xs: &[f64]) -> f64 {
    xs.iter().copied().collect::<NeumaierSum>().value()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn recovers_cancelled_mass() {
        let xs = [1.0, 1e100, 1.0, -1e100];
        assert_eq!(sum_f64(&xs), 2.0);
        let naive: f64 = xs.iter().sum();
        assert_eq!(naive, 0.0);
    }

    #[test]
    fn merge_is_order_stable() {
        let xs: Vec<f64> = (0..1000).map(|k| ((k * 7919) % 1013) as f64 * 1e-3 - 0.5).collect();
        let whole = sum_f64(&xs);
        let mut a: NeumaierSum = xs[..400].iter().copied().collect();
        let b: NeumaierSum = xs[400..].iter().copied().collect();
        a.merge(&b);
        assert!((a.value() - whole).abs() <= 1e-13);
        assert_eq!(a.count(), 1000);
    }

    proptest! {
        #[test]
        fn close_to_exact_rational_sum(v in proptest::collection::vec(-1_000_000i64..1_000_000, 1..200)) {
            let xs: Vec<f64> = v.iter().map(|&k| k as f64 / 1024.0).collect();
            let exact: i64 = v.iter().sum();
            prop_assert_eq!(sum_f64(&xs), exact as f64 / 1024.0);
        }
    }
}
