use std::fmt;

use serde::{Deserialize, Serialize};

use crate::analysis::{asymptotic_edge, regime_report_for, zf_break_threshold, Edge, RegimeReport};
use crate::error::{Error, Result};

/// Eavesdropper-to-transmitter antenna ratios scanned by default.
pub const DEFAULT_Y_PRIME_GRID: &[f64] = &[
    1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 48.0, 64.0, 80.0, 96.0, 112.0, 128.0, 160.0, 192.0, 256.0,
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeRow {
    pub n_t: usize,
    pub y_prime: f64,
    pub n_r_prime: usize,
    pub m_alpha: f64,
    pub report: RegimeReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimalRatio {
    pub n_t: usize,
    /// Smallest grid ratio at which the point is contradictory.
    pub grid_y_prime: Option<f64>,
    /// Smallest `n_r'` at which the point is contradictory, over all
    /// integers.
    pub exact_n_r_prime: usize,
    pub exact_y_prime: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeScan {
    pub epsilon: f64,
    pub epsilon_prime: f64,
    /// `mα = √n_t · (1 + margin)`.
    pub margin: f64,
    pub rows: Vec<RegimeRow>,
    pub minimal: Vec<MinimalRatio>,
}

impl fmt::Display for RegimeScan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "epsilon = {}, epsilon' = {}, m*alpha = sqrt(n_t) * {}",
            self.epsilon,
            self.epsilon_prime,
            1.0 + self.margin
        )?;
        writeln!(
            f,
            "{:>6} {:>8} {:>8} {:>9} {:>12} {:>9} {:>13}",
            "n_t", "y'", "n_r'", "m*alpha", "zf_thresh", "zf_breaks", "contradiction"
        )?;
        for r in &self.rows {
            let thresh = r
                .report
                .zf_threshold
                .map_or_else(|| "-".to_string(), |t| format!("{t:.3}"));
            writeln!(
                f,
                "{:>6} {:>8} {:>8} {:>9.4} {:>12} {:>9} {:>13}",
                r.n_t,
                r.y_prime,
                r.n_r_prime,
                r.m_alpha,
                thresh,
                r.report.zf_breaks,
                r.report.contradiction
            )?;
        }
        writeln!(f)?;
        writeln!(
            f,
            "{:>6} {:>12} {:>12}",
            "n_t", "grid min y'", "exact min y'"
        )?;
        for m in &self.minimal {
            let grid = m
                .grid_y_prime
                .map_or_else(|| "-".to_string(), |y| y.to_string());
            writeln!(f, "{:>6} {:>12} {:>12.4}", m.n_t, grid, m.exact_y_prime)?;
        }
        Ok(())
    }
}

/// Smallest `n_r'` for which zero-forcing provably breaks the scheme at
/// noise power `noise_var = m²α²`.
pub fn minimal_contradicting_receivers(
    n_t: usize,
    noise_var: f64,
    epsilon: f64,
    epsilon_prime: f64,
) -> Result<usize> {
    if !(epsilon_prime > 0.0 && epsilon_prime < 1.0) {
        return Err(Error::invalid(format!(
            "epsilon' must lie in (0, 1), got {epsilon_prime}"
        )));
    }
    // The threshold increases with n_r' wherever it is defined, so the
    // predicate is monotone and can be bisected.
    let breaks = |n_r_prime: usize| -> Result<bool> {
        let y = n_r_prime as f64 / n_t as f64;
        if asymptotic_edge(y, Edge::Min) <= epsilon_prime {
            return Ok(false);
        }
        Ok(zf_break_threshold(n_t, n_r_prime, epsilon, epsilon_prime)? >= noise_var)
    };
    let mut hi = n_t.max(1);
    while !breaks(hi)? {
        hi = hi
            .checked_mul(2)
            .ok_or_else(|| Error::invalid("no contradicting n_r' exists"))?;
    }
    let mut lo = n_t;
    if breaks(lo)? {
        return Ok(lo);
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if breaks(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Evaluates the hardness and break conditions on an `(n_t, y')` grid with
/// `mα` just above `√n_t`.
pub fn regime_scan(
    n_ts: &[usize],
    y_primes: &[f64],
    epsilon: f64,
    epsilon_prime: f64,
    margin: f64,
) -> Result<RegimeScan> {
    if n_ts.is_empty() || y_primes.is_empty() {
        return Err(Error::invalid("regime scan needs non-empty grids"));
    }
    if !(margin > 0.0) {
        return Err(Error::invalid(format!(
            "margin must be positive, got {margin}"
        )));
    }
    if let Some(bad) = y_primes.iter().find(|&&y| !(y >= 1.0 && y.is_finite())) {
        return Err(Error::invalid(format!("grid ratio {bad} is below 1")));
    }
    let mut rows = Vec::new();
    let mut minimal = Vec::new();
    for &n_t in n_ts {
        if n_t == 0 {
            return Err(Error::invalid("n_t must be positive"));
        }
        let m_alpha = (n_t as f64).sqrt() * (1.0 + margin);
        let noise_var = m_alpha * m_alpha;
        let mut grid_y_prime = None;
        for &y_prime in y_primes {
            let n_r_prime = (y_prime * n_t as f64).round() as usize;
            let report =
                regime_report_for(n_t, n_r_prime, noise_var, true, epsilon, epsilon_prime)?;
            if report.contradiction {
                grid_y_prime = Some(grid_y_prime.map_or(y_prime, |g: f64| g.min(y_prime)));
            }
            rows.push(RegimeRow {
                n_t,
                y_prime,
                n_r_prime,
                m_alpha,
                report,
            });
        }
        let exact = minimal_contradicting_receivers(n_t, noise_var, epsilon, epsilon_prime)?;
        minimal.push(MinimalRatio {
            n_t,
            grid_y_prime,
            exact_n_r_prime: exact,
            exact_y_prime: exact as f64 / n_t as f64,
        });
    }
    Ok(RegimeScan {
        epsilon,
        epsilon_prime,
        margin,
        rows,
        minimal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// mα = 8.1 at n_t = 64.
    const MARGIN: f64 = 0.0125;

    #[test]
    fn n64_grid_minimum_is_96() {
        let scan = regime_scan(&[64], DEFAULT_Y_PRIME_GRID, 0.05, 0.01, MARGIN).unwrap();
        assert!((scan.rows[0].m_alpha - 8.1).abs() < 1e-12);
        assert_eq!(scan.minimal[0].grid_y_prime, Some(96.0));
        let row96 = scan.rows.iter().find(|r| r.y_prime == 96.0).unwrap();
        assert!((row96.report.zf_threshold.unwrap() - 77.9).abs() < 0.05);
        assert!(row96.report.contradiction);
        let row80 = scan.rows.iter().find(|r| r.y_prime == 80.0).unwrap();
        assert!(!row80.report.contradiction);
    }

    #[test]
    fn exact_minimum_brackets_the_threshold() {
        let noise_var = 8.1f64 * 8.1;
        let n = minimal_contradicting_receivers(64, noise_var, 0.05, 0.01).unwrap();
        assert!(zf_break_threshold(64, n, 0.05, 0.01).unwrap() >= noise_var);
        assert!(zf_break_threshold(64, n - 1, 0.05, 0.01).unwrap() < noise_var);
        // Brute-force scan as an independent route.
        let brute = (64..100_000)
            .find(|&k| {
                asymptotic_edge(k as f64 / 64.0, Edge::Min) > 0.01
                    && zf_break_threshold(64, k, 0.05, 0.01).unwrap() >= noise_var
            })
            .unwrap();
        assert_eq!(n, brute);
    }

    #[test]
    fn square_rows_never_contradict() {
        let scan = regime_scan(&[64, 128, 256], &[1.0, 2.0], 0.05, 0.01, MARGIN).unwrap();
        for r in scan.rows.iter().filter(|r| r.y_prime == 1.0) {
            assert!(!r.report.contradiction);
            assert_eq!(r.report.zf_threshold, None);
        }
    }

    #[test]
    fn minimal_ratio_grows_logarithmically() {
        let n_ts = [64usize, 128, 256, 512];
        let scan = regime_scan(&n_ts, &[1.0], 0.05, 0.01, MARGIN).unwrap();
        let ys: Vec<f64> = scan.minimal.iter().map(|m| m.exact_y_prime).collect();
        // Fit y' = c · ln(n_t) through the origin and require every point
        // within 15% of the fit.
        let logs: Vec<f64> = n_ts.iter().map(|&n| (n as f64).ln()).collect();
        let c = ys.iter().zip(&logs).map(|(y, l)| y * l).sum::<f64>()
            / logs.iter().map(|l| l * l).sum::<f64>();
        for (y, l) in ys.iter().zip(&logs) {
            assert!(
                (y / (c * l) - 1.0).abs() < 0.15,
                "y' = {y}, fit = {}",
                c * l
            );
        }
        // Doubling n_t adds a roughly constant amount, never an increasing one.
        let steps: Vec<f64> = ys.windows(2).map(|w| w[1] - w[0]).collect();
        assert!(steps.iter().all(|&s| s > 0.0));
        for w in steps.windows(2) {
            assert!(w[1] <= w[0] * 1.1, "{steps:?}");
        }
    }

    #[test]
    fn scan_validation() {
        assert!(regime_scan(&[], &[1.0], 0.05, 0.01, MARGIN).is_err());
        assert!(regime_scan(&[64], &[0.5], 0.05, 0.01, MARGIN).is_err());
        assert!(regime_scan(&[64], &[2.0], 0.05, 0.01, 0.0).is_err());
    }
}
