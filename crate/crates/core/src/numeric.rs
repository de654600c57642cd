//! Small floating-point utilities shared by the evaluation code.

/// Running product with an error-free correction term (TwoProduct via FMA).
///
/// Long chain-rule products lose about one ulp per factor when multiplied
/// naively; carrying the rounding error keeps the relative error near one ulp
/// for the lengths used here.
#[derive(Debug, Clone, Copy)]
pub struct CompensatedProduct {
    hi: f64,
    lo: f64,
}

impl Default for CompensatedProduct {
    fn default() -> Self {
        Self { hi: 1.0, lo: 0.0 }
    }
}

impl CompensatedProduct {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn mul(&mut self, factor: f64) {
        let p = self.hi * factor;
        let err = self.hi.mul_add(factor, -p);
        self.lo = self.lo.mul_add(factor, err);
        self.hi = p;
    }

    pub fn value(&self) -> f64 {
        self.hi + self.lo
    }
}

/// Relative error `|a - b| / max(|b|, tiny)`.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// Formats a float with 17 significant digits, the width used in reports.
pub fn fmt17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_product_beats_naive() {
        let factors: Vec<f64> = (0..200).map(|i| 1.0 + 1e-3 * ((i * 37 % 11) as f64 - 5.0)).collect();
        let mut c = CompensatedProduct::new();
        let mut naive = 1.0f64;
        for &f in &factors {
            c.mul(f);
            naive *= f;
        }
        // Same value to well within the naive error budget.
        assert!(rel_err(c.value(), naive) < 1e-13);
        let exact: f64 = factors.iter().map(|f| f.ln()).sum::<f64>().exp();
        assert!(rel_err(c.value(), exact) < 1e-13);
    }

    #[test]
    fn fmt17_round_trips() {
        for x in [0.1, 1.0 / 3.0, 2.0f64.sqrt(), 1e-300] {
            let s = fmt17(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
    }
}
