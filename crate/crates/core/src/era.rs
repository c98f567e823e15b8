//! Eigensystem-realization benchmark identifier.
//!
//! Correlation decays against a reference channel are stacked into block
//! Hankel matrices; an SVD-truncated realization then yields a discrete
//! state-transition matrix whose eigenvalues map to continuous poles and
//! whose output matrix carries the mode shapes.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::modes::{normalize_shape, Mode, ModeSet, SourceOrder};
use crate::signals::CorrelationSet;

/// Hankel/realization configuration.
///
/// `hankel_rows` counts block rows (each block stacks every channel), and
/// `truncation` is the number of retained singular values, which equals the
/// realized state dimension. `shift` is the lag advance between the two
/// Hankel matrices; the pole mapping divides by `dt * shift` accordingly.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EraConfig {
    pub hankel_rows: usize,
    pub hankel_cols: usize,
    pub truncation: usize,
    #[serde(default = "default_shift")]
    pub shift: usize,
}

fn default_shift() -> usize {
    1
}

impl EraConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hankel_rows == 0 || self.hankel_cols == 0 {
            return Err(Error::InvalidConfig("Hankel dimensions must be >= 1".into()));
        }
        if self.truncation < 2 {
            return Err(Error::InvalidConfig("truncation must be >= 2".into()));
        }
        if self.shift == 0 {
            return Err(Error::InvalidConfig("shift must be >= 1".into()));
        }
        Ok(())
    }
}

/// Discrete-time realization extracted from the Hankel SVD.
#[derive(Debug, Clone)]
pub struct EraRealization {
    /// State-transition matrix (truncation x truncation).
    pub a: DMatrix<f64>,
    /// Output matrix (channels x truncation).
    pub c_out: DMatrix<f64>,
    /// Correlation sample step in seconds.
    pub dt: f64,
    /// Lag advance used between the Hankel matrices.
    pub shift: usize,
}

/// Build the block Hankel pair (H0, H1): H0 stacks R(l) at lags l = i + j,
/// H1 the same pattern advanced by `shift` lags.
pub fn build_hankel(corr: &CorrelationSet, cfg: &EraConfig) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    cfg.validate()?;
    let lags = corr.lags();
    let needed = cfg.hankel_rows + cfg.hankel_cols + cfg.shift - 1;
    if needed > lags {
        return Err(Error::InsufficientLags {
            needed,
            available: lags,
        });
    }
    let nch = corr.channels();
    let rows = nch * cfg.hankel_rows;
    let mut h0 = DMatrix::zeros(rows, cfg.hankel_cols);
    let mut h1 = DMatrix::zeros(rows, cfg.hankel_cols);
    for i in 0..cfg.hankel_rows {
        for j in 0..cfg.hankel_cols {
            for c in 0..nch {
                h0[(nch * i + c, j)] = corr.data[c][i + j];
                h1[(nch * i + c, j)] = corr.data[c][i + j + cfg.shift];
            }
        }
    }
    Ok((h0, h1))
}

/// Decomposed Hankel data, reusable across truncation orders (the SVD is by
/// far the dominant cost of a multi-order sweep).
#[derive(Debug, Clone)]
pub struct HankelSvd {
    u: DMatrix<f64>,
    sv: nalgebra::DVector<f64>,
    vt: DMatrix<f64>,
    h1: DMatrix<f64>,
    channels: usize,
    dt: f64,
    shift: usize,
    rank: usize,
}

impl HankelSvd {
    pub fn new(corr: &CorrelationSet, cfg: &EraConfig) -> Result<Self> {
        let (h0, h1) = build_hankel(corr, cfg)?;
        let dims = h0.nrows().max(h0.ncols()) as f64;
        let (u, sv, vt) = linalg::svd(h0)?;
        let rank_tol = sv.max() * f64::EPSILON * dims;
        let rank = sv.iter().filter(|&&s| s > rank_tol).count();
        Ok(HankelSvd {
            u,
            sv,
            vt,
            h1,
            channels: corr.channels(),
            dt: corr.dt,
            shift: cfg.shift,
            rank,
        })
    }

    /// Numerical rank of H0 at working precision.
    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Realization truncated to the given state dimension.
    pub fn realize(&self, truncation: usize) -> Result<EraRealization> {
        if truncation < 2 {
            return Err(Error::InvalidConfig("truncation must be >= 2".into()));
        }
        if truncation > self.rank {
            return Err(Error::TruncationExceedsRank {
                truncation,
                rank: self.rank,
            });
        }
        let t = truncation;
        let ut = self.u.columns(0, t).transpose();
        let v = self.vt.rows(0, t).transpose();
        let mut a = ut * &self.h1 * v;
        let inv_sqrt: Vec<f64> = (0..t).map(|i| 1.0 / self.sv[i].sqrt()).collect();
        for i in 0..t {
            for j in 0..t {
                a[(i, j)] *= inv_sqrt[i] * inv_sqrt[j];
            }
        }
        let mut c_out = DMatrix::zeros(self.channels, t);
        for c in 0..self.channels {
            for j in 0..t {
                c_out[(c, j)] = self.u[(c, j)] * self.sv[j].sqrt();
            }
        }
        Ok(EraRealization {
            a,
            c_out,
            dt: self.dt,
            shift: self.shift,
        })
    }
}

/// SVD-truncated realization: A = S^-1/2 U^T H1 V S^-1/2 with C read from
/// the first block row of U S^1/2.
pub fn realize(corr: &CorrelationSet, cfg: &EraConfig) -> Result<EraRealization> {
    HankelSvd::new(corr, cfg)?.realize(cfg.truncation)
}

/// Modes of a realization: discrete eigenvalues are mapped to continuous
/// poles p = ln(lambda) / (dt * shift); shapes come from the output matrix
/// applied to the eigenvectors. Unstable or overdamped candidates are left
/// in for the stabilization hard screen to reject.
pub fn realization_modes(real: &EraRealization) -> Result<ModeSet> {
    let evs = linalg::real_matrix_eigenvalues(&real.a)?;
    let order = real.a.nrows();
    let mut modes = Vec::new();
    for lam in evs.into_iter().filter(|l| l.im > 0.0) {
        if lam.norm() == 0.0 {
            continue;
        }
        let p = lam.ln() / (real.dt * real.shift as f64);
        let wn = p.norm();
        if wn == 0.0 {
            continue;
        }
        let psi = linalg::complex_eigenvector(&real.a, lam)?;
        let raw: Vec<Complex64> = (0..real.c_out.nrows())
            .map(|c| {
                (0..order)
                    .map(|j| psi[j] * real.c_out[(c, j)])
                    .sum::<Complex64>()
            })
            .collect();
        let Some(shape) = normalize_shape(&raw) else {
            continue;
        };
        modes.push(Mode {
            freq_hz: wn / (2.0 * std::f64::consts::PI),
            damping: -p.re / wn,
            shape,
            source_order: SourceOrder::Order(order),
        });
    }
    Ok(ModeSet::new(modes))
}

/// Full ERA pass: Hankel, SVD truncation, realization, modal extraction.
pub fn fit_era(corr: &CorrelationSet, cfg: &EraConfig) -> Result<ModeSet> {
    let real = realize(corr, cfg)?;
    realization_modes(&real)
}
