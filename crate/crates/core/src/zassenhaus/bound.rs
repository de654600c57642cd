//! The theoretical `n` guaranteeing a flattening collision.

use crate::{Error, Result};

/// Smallest `n >= 1` with `M^(2m+4) theta^n 2^(-n/(2N)) < epsilon`,
/// evaluated in the log domain.
///
/// The pigeonhole requirement (more candidates than bucket vectors) is
/// checked for satisfiability only: with `2^n` candidates and at most
/// `(2^(n/(2N)) + 1)^(N-1)` occupied bucket vectors it holds for all large
/// `n` whenever `N >= 1`.
pub fn pigeonhole_bound(m_const: f64, m_len: usize, theta: f64, n_grid: usize, epsilon: f64) -> Result<usize> {
    if n_grid == 0 || !(m_const > 0.0) || !(epsilon > 0.0) || !(theta > 0.0) {
        return Err(Error::Precondition("pigeonhole bound needs M, theta, epsilon > 0 and N >= 1".into()));
    }
    let decay = std::f64::consts::LN_2 / (2.0 * n_grid as f64) - theta.ln();
    if !(decay > 1e-14) {
        return Err(Error::Precondition(format!(
            "theta = {theta} is not below 2^(1/(2N)) = {}; condition (ii) never holds",
            2f64.powf(0.5 / n_grid as f64)
        )));
    }
    let head = (2 * m_len + 4) as f64 * m_const.ln() - epsilon.ln();
    let holds = |n: usize| head - n as f64 * decay < 0.0;
    let guess = (head / decay).floor().max(0.0);
    if !guess.is_finite() || guess > 1e15 {
        return Err(Error::Precondition(format!("bound {guess} is not representable")));
    }
    let mut n = (guess as usize).saturating_sub(1).max(1);
    while holds(n) && n > 1 {
        n -= 1;
    }
    while !holds(n) {
        n += 1;
    }
    Ok(n)
}
