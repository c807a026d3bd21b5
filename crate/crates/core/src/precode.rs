//! Precoders and decoders.
//!
//! Every decoder first produces a [`SymbolEstimate`]: the equalized
//! observation in symbol units, `x + noise`. Rounding it gives `x_hat`, and
//! comparing against the true message gives a [`DecodeResult`].

use crate::error::{Error, Result};
use crate::matrix::{pseudo_inverse, svd, Matrix, SvdFactors, RANK_TOLERANCE};

/// Exhaustive search is refused above this many candidates.
pub const ML_SEARCH_CAP: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub enum PrecoderKind {
    /// `P = V` from `H = UΣVᵗ`.
    Svd,
    /// `P = H⁻¹`; requires square full-rank `H`.
    Inverse,
    Identity,
    Custom(Matrix),
}

impl PrecoderKind {
    pub fn name(&self) -> &'static str {
        match self {
            PrecoderKind::Svd => "svd",
            PrecoderKind::Inverse => "inverse",
            PrecoderKind::Identity => "identity",
            PrecoderKind::Custom(_) => "custom",
        }
    }
}

impl std::str::FromStr for PrecoderKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "svd" => Ok(PrecoderKind::Svd),
            "inverse" => Ok(PrecoderKind::Inverse),
            "identity" => Ok(PrecoderKind::Identity),
            other => Err(Error::invalid(format!(
                "unknown precoder '{other}' (expected svd, inverse or identity)"
            ))),
        }
    }
}

fn check_full_rank(f: &SvdFactors) -> Result<()> {
    let (hi, lo) = (f.sigma_max(), f.sigma_min());
    if !(lo > RANK_TOLERANCE * hi) {
        return Err(Error::RankDeficient {
            sigma_min: lo,
            sigma_max: hi,
        });
    }
    Ok(())
}

pub fn make_precoder(kind: &PrecoderKind, h_svd: &SvdFactors, h: &Matrix) -> Result<Matrix> {
    let n_t = h.cols();
    match kind {
        PrecoderKind::Svd => Ok(h_svd.v.clone()),
        PrecoderKind::Identity => Ok(Matrix::identity(n_t)),
        PrecoderKind::Inverse => {
            if !h.is_square() {
                return Err(Error::invalid(format!(
                    "inverse precoder needs a square channel, H is {}x{}",
                    h.rows(),
                    h.cols()
                )));
            }
            check_full_rank(h_svd)?;
            Ok(h_svd.pseudo_inverse())
        }
        PrecoderKind::Custom(p) => {
            if p.rows() != n_t || p.cols() != n_t {
                return Err(Error::dims(format!(
                    "custom precoder is {}x{}, expected {n_t}x{n_t}",
                    p.rows(),
                    p.cols()
                )));
            }
            check_full_rank(&svd(p)?)?;
            Ok(p.clone())
        }
    }
}

/// Equalized observation `x + ẽ` in symbol units.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolEstimate {
    pub soft: Vec<f64>,
}

impl SymbolEstimate {
    /// Nearest integer per coordinate, ties to even.
    pub fn x_hat(&self) -> Vec<i64> {
        self.soft
            .iter()
            .map(|v| v.round_ties_even() as i64)
            .collect()
    }

    /// Judges the estimate against the transmitted message. With `clamp`,
    /// `x_hat` is first clipped into `{0..m-1}` before the symbol check;
    /// the per-layer criterion never clamps.
    pub fn assess(&self, x_true: &[i64], m: u32, clamp: bool) -> Result<DecodeResult> {
        if x_true.len() != self.soft.len() {
            return Err(Error::dims(format!(
                "estimate has {} layers, message has {}",
                self.soft.len(),
                x_true.len()
            )));
        }
        let mut x_hat = self.x_hat();
        if clamp {
            let top = i64::from(m) - 1;
            x_hat.iter_mut().for_each(|v| *v = (*v).clamp(0, top));
        }
        let per_layer_noise: Vec<f64> = self
            .soft
            .iter()
            .zip(x_true)
            .map(|(s, &x)| s - x as f64)
            .collect();
        Ok(DecodeResult {
            success_paper: per_layer_noise.iter().all(|e| e.abs() < 0.5),
            success_symbol: x_hat == x_true,
            x_hat,
            per_layer_noise,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult {
    pub x_hat: Vec<i64>,
    /// Every layer's equalized noise is below half a symbol.
    pub success_paper: bool,
    pub success_symbol: bool,
    /// `soft - x_true` per layer, in symbol units.
    pub per_layer_noise: Vec<f64>,
}

/// Legitimate receiver under SVD precoding: filter with `Uᵗ`, divide layer
/// `i` by `sigma_i`. Only the first `n_t` coordinates of `Uᵗy` carry signal.
pub fn legit_decode_svd(y_b: &[f64], h_svd: &SvdFactors) -> Result<SymbolEstimate> {
    check_full_rank(h_svd)?;
    let filtered = h_svd.u.transpose_matvec(y_b)?;
    Ok(SymbolEstimate {
        soft: filtered
            .iter()
            .zip(&h_svd.sigma)
            .map(|(y, s)| y / s)
            .collect(),
    })
}

/// Zero-forcing: `x_hat = round(pinv(channel_eq) · y)`.
pub fn zf_decode(y: &[f64], channel_eq: &Matrix) -> Result<SymbolEstimate> {
    zf_decode_with(y, &svd(channel_eq)?)
}

/// Zero-forcing with a precomputed SVD of the equivalent channel.
pub fn zf_decode_with(y: &[f64], eq_svd: &SvdFactors) -> Result<SymbolEstimate> {
    if eq_svd.u.rows() < eq_svd.v.rows() {
        return Err(Error::dims(
            "equivalent channel has fewer rows than columns",
        ));
    }
    check_full_rank(eq_svd)?;
    Ok(SymbolEstimate {
        soft: eq_svd.pseudo_solve(y)?,
    })
}

/// Exhaustive maximum-likelihood search over `{0..m-1}^n_t`. Ties go to
/// the lexicographically smallest candidate.
pub fn ml_decode(y: &[f64], channel_eq: &Matrix, m: u32, n_t: usize) -> Result<Vec<i64>> {
    if m < 2 {
        return Err(Error::invalid(format!(
            "constellation size must be at least 2, got {m}"
        )));
    }
    if channel_eq.cols() != n_t || channel_eq.rows() != y.len() {
        return Err(Error::dims(format!(
            "channel is {}x{}, expected {}x{n_t}",
            channel_eq.rows(),
            channel_eq.cols(),
            y.len()
        )));
    }
    let size = u128::from(m).checked_pow(n_t as u32).unwrap_or(u128::MAX);
    if size > u128::from(ML_SEARCH_CAP) {
        return Err(Error::SearchSpaceTooLarge {
            size,
            cap: ML_SEARCH_CAP,
        });
    }

    let columns: Vec<Vec<f64>> = (0..n_t).map(|j| channel_eq.column(j)).collect();
    let mut candidate = vec![0i64; n_t];
    // residual = y - channel_eq · candidate, updated incrementally
    let mut residual = y.to_vec();
    let mut best = candidate.clone();
    let mut best_cost = f64::INFINITY;
    loop {
        let cost: f64 = residual.iter().map(|r| r * r).sum();
        if cost < best_cost {
            best_cost = cost;
            best.copy_from_slice(&candidate);
        }
        // Odometer increment with the last coordinate fastest, giving
        // lexicographic enumeration order.
        let mut pos = n_t;
        loop {
            if pos == 0 {
                return Ok(best);
            }
            pos -= 1;
            if candidate[pos] + 1 < i64::from(m) {
                candidate[pos] += 1;
                for (r, c) in residual.iter_mut().zip(&columns[pos]) {
                    *r -= c;
                }
                break;
            }
            let back = candidate[pos] as f64;
            candidate[pos] = 0;
            for (r, c) in residual.iter_mut().zip(&columns[pos]) {
                *r += back * c;
            }
        }
    }
}

/// Pseudo-inverse of the equivalent channel, for callers that want the
/// explicit ZF filter.
pub fn zf_filter(channel_eq: &Matrix) -> Result<Matrix> {
    pseudo_inverse(channel_eq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::svd;

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    #[test]
    fn precoder_kinds() {
        let h = m(&[&[2.0, 1.0], &[0.5, 3.0]]);
        let f = svd(&h).unwrap();
        assert_eq!(
            make_precoder(&PrecoderKind::Identity, &f, &h).unwrap(),
            Matrix::identity(2)
        );
        let v = make_precoder(&PrecoderKind::Svd, &f, &h).unwrap();
        let hv = h.matmul(&v).unwrap();
        let us = Matrix::from_fn(2, 2, |i, j| f.u.get(i, j) * f.sigma[j]);
        assert!(hv.max_abs_diff(&us).unwrap() < 1e-12);

        let inv = make_precoder(&PrecoderKind::Inverse, &f, &h).unwrap();
        let hp = h.matmul(&inv).unwrap();
        assert!(hp.max_abs_diff(&Matrix::identity(2)).unwrap() < 1e-12);
    }

    #[test]
    fn inverse_precoder_rejects_bad_channels() {
        let tall = m(&[&[1.0, 0.0], &[0.0, 1.0], &[1.0, 1.0]]);
        let f = svd(&tall).unwrap();
        assert!(make_precoder(&PrecoderKind::Inverse, &f, &tall).is_err());
        let singular = m(&[&[1.0, 2.0], &[2.0, 4.0]]);
        let f = svd(&singular).unwrap();
        assert!(matches!(
            make_precoder(&PrecoderKind::Inverse, &f, &singular),
            Err(Error::RankDeficient { .. })
        ));
    }

    #[test]
    fn custom_precoder_checks() {
        let h = Matrix::identity(2);
        let f = svd(&h).unwrap();
        let good = m(&[&[1.0, 1.0], &[0.0, 1.0]]);
        assert_eq!(
            make_precoder(&PrecoderKind::Custom(good.clone()), &f, &h).unwrap(),
            good
        );
        let bad = m(&[&[1.0, 1.0], &[1.0, 1.0]]);
        assert!(make_precoder(&PrecoderKind::Custom(bad), &f, &h).is_err());
        assert!(make_precoder(&PrecoderKind::Custom(Matrix::identity(3)), &f, &h).is_err());
    }

    #[test]
    fn legit_decoder_scalar_examples() {
        let f = svd(&m(&[&[2.0]])).unwrap();
        // x = 1, e = 0.9
        let r = legit_decode_svd(&[2.9], &f)
            .unwrap()
            .assess(&[1], 2, false)
            .unwrap();
        assert_eq!(r.x_hat, vec![1]);
        assert!(r.success_paper && r.success_symbol);
        // x = 1, e = 1.1
        let r = legit_decode_svd(&[3.1], &f)
            .unwrap()
            .assess(&[1], 2, false)
            .unwrap();
        assert_eq!(r.x_hat, vec![2]);
        assert!(!r.success_paper && !r.success_symbol);
    }

    #[test]
    fn legit_decoder_rejects_degenerate_channel() {
        let f = svd(&Matrix::from_diag(&[1.0, 0.0])).unwrap();
        assert!(legit_decode_svd(&[0.0, 0.0], &f).is_err());
    }

    #[test]
    fn zf_hand_example() {
        let eq = Matrix::from_diag(&[2.0, 2.0]);
        let est = zf_decode(&[2.6, 0.2], &eq).unwrap();
        assert!((est.soft[0] - 1.3).abs() < 1e-14 && (est.soft[1] - 0.1).abs() < 1e-14);
        assert_eq!(est.x_hat(), vec![1, 0]);
    }

    #[test]
    fn zf_matches_explicit_2x2_inverse() {
        let gv = m(&[&[1.0, 2.0], &[2.0, 1.0]]);
        let inv = m(&[&[-1.0 / 3.0, 2.0 / 3.0], &[2.0 / 3.0, -1.0 / 3.0]]);
        assert!(zf_filter(&gv).unwrap().max_abs_diff(&inv).unwrap() < 1e-14);
        let x = [1.0, 0.0];
        let noise = [0.05, -0.12];
        let clean = gv.matvec(&x).unwrap();
        let y: Vec<f64> = clean.iter().zip(&noise).map(|(a, b)| a + b).collect();
        let expected: Vec<f64> = inv
            .matvec(&noise)
            .unwrap()
            .iter()
            .zip(&x)
            .map(|(e, x)| x + e)
            .collect();
        let est = zf_decode(&y, &gv).unwrap();
        for (a, b) in est.soft.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-13);
        }
        assert_eq!(est.x_hat(), vec![1, 0]);
    }

    #[test]
    fn zf_rejects_rank_deficient() {
        let eq = m(&[&[1.0, 2.0], &[2.0, 4.0], &[3.0, 6.0]]);
        assert!(matches!(
            zf_decode(&[1.0, 2.0, 3.0], &eq),
            Err(Error::RankDeficient { .. })
        ));
    }

    #[test]
    fn rounding_is_ties_to_even() {
        let est = SymbolEstimate {
            soft: vec![0.5, 1.5, 2.5, -0.5],
        };
        assert_eq!(est.x_hat(), vec![0, 2, 2, 0]);
    }

    #[test]
    fn clamping_only_affects_symbol_check() {
        let est = SymbolEstimate {
            soft: vec![-0.7, 1.2],
        };
        let plain = est.assess(&[0, 1], 2, false).unwrap();
        assert!(!plain.success_symbol && !plain.success_paper);
        let clamped = est.assess(&[0, 1], 2, true).unwrap();
        assert_eq!(clamped.x_hat, vec![0, 1]);
        assert!(clamped.success_symbol && !clamped.success_paper);
    }

    #[test]
    fn ml_examples() {
        let i2 = Matrix::identity(2);
        assert_eq!(ml_decode(&[0.9, 0.1], &i2, 2, 2).unwrap(), vec![1, 0]);
        let h = m(&[&[1.0, 0.3, -0.2], &[0.4, -1.1, 0.5], &[0.2, 0.1, 0.9]]);
        let x = [2.0, 0.0, 1.0];
        let y = h.matvec(&x).unwrap();
        assert_eq!(ml_decode(&y, &h, 3, 3).unwrap(), vec![2, 0, 1]);
    }

    #[test]
    fn ml_ties_pick_lexicographically_smallest() {
        // Columns identical: (1,0) and (0,1) are equally far from y.
        let h = m(&[&[1.0, 1.0]]);
        assert_eq!(ml_decode(&[1.0], &h, 2, 2).unwrap(), vec![0, 1]);
    }

    #[test]
    fn ml_cap_enforced() {
        let h = Matrix::identity(21);
        assert!(matches!(
            ml_decode(&[0.0; 21], &h, 2, 21),
            Err(Error::SearchSpaceTooLarge { .. })
        ));
        let h = Matrix::identity(20);
        // 2^20 = 1_048_576 > 10^6
        assert!(ml_decode(&[0.0; 20], &h, 2, 20).is_err());
        let h = Matrix::identity(6);
        assert_eq!(ml_decode(&[0.0; 6], &h, 10, 6).unwrap(), vec![0; 6]);
    }

    #[test]
    fn precoder_names_parse() {
        for k in ["svd", "inverse", "identity"] {
            assert_eq!(k.parse::<PrecoderKind>().unwrap().name(), k);
        }
        assert!("qr".parse::<PrecoderKind>().is_err());
    }
}
