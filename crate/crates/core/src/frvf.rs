//! Iterative pole-relocation rational fitting of multichannel spectra.
//!
//! The fitter approximates every channel v of a [`SpectrumSet`] by
//!
//! ```text
//! f_v(s)  ~=  sum_n R_{v,n} / (s - p_n) + d_v + s e_v
//! ```
//!
//! Poles are improved iteratively: each step solves one linear least-squares
//! problem for an auxiliary scaling function sigma(s) sharing the trial
//! poles, then relocates the poles to the zeros of sigma. Three variants are
//! supported and freely combined:
//!
//! * plain: sigma constrained by sigma(inf) = 1;
//! * relaxed: sigma(inf) is a free real unknown d_sigma, with one extra
//!   equation Re{ sum_k sigma(s_k) } = N_s to rule out the trivial solution;
//! * fast: the per-channel numerator unknowns are eliminated by QR and only
//!   the stacked reduced systems are solved for the common sigma unknowns.
//!
//! All least-squares work happens in a real-valued basis: a conjugate pole
//! pair contributes the two columns 1/(s-a) + 1/(s-a*) and
//! i/(s-a) - i/(s-a*), so pair residues stay conjugate and d, e, d_sigma
//! stay real by construction.
//!
//! The fitter consumes complex frequency samples; magnitude-only fitting is
//! not provided.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::modes::{normalize_shape, Mode, ModeSet, SourceOrder};
use crate::signals::SpectrumSet;

/// Least-squares weighting applied per channel and frequency sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    /// w = 1.
    #[default]
    None,
    /// w = 1 / sqrt(|f(s_k)|): moderate emphasis of low-magnitude regions.
    WeakInverse,
    /// w = 1 / |f(s_k)|: strong emphasis of low-magnitude regions.
    StrongInverse,
}

/// Fit configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitConfig {
    /// Total pole count (even; conjugate pairs).
    pub n_poles: usize,
    pub n_iterations: usize,
    #[serde(default)]
    pub weighting: Weighting,
    #[serde(default = "default_true")]
    pub relaxed: bool,
    #[serde(default = "default_true")]
    pub fast: bool,
    /// Include the constant offset d_v in the numerator basis.
    #[serde(default = "default_true")]
    pub include_d: bool,
    /// Include the linear term s e_v in the numerator basis.
    #[serde(default = "default_true")]
    pub include_e: bool,
    /// Analysis band (f_min, f_max) in Hz; starting poles span it.
    pub band: (f64, f64),
}

fn default_true() -> bool {
    true
}

impl FitConfig {
    /// Defaults: 5 iterations, no weighting, relaxed + fast, d and e on.
    pub fn new(n_poles: usize, band: (f64, f64)) -> Self {
        FitConfig {
            n_poles,
            n_iterations: 5,
            weighting: Weighting::None,
            relaxed: true,
            fast: true,
            include_d: true,
            include_e: true,
            band,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_poles < 2 || self.n_poles % 2 != 0 {
            return Err(Error::InvalidConfig(format!(
                "pole count must be even and >= 2, got {}",
                self.n_poles
            )));
        }
        if self.n_iterations == 0 {
            return Err(Error::InvalidConfig("need at least one iteration".into()));
        }
        if !(self.band.1 > self.band.0 && self.band.0 >= 0.0) {
            return Err(Error::InvalidConfig(format!("invalid band {:?}", self.band)));
        }
        Ok(())
    }
}

/// A pole entry: an isolated real pole or a conjugate pair represented by
/// its positive-imaginary member. The set is closed under conjugation by
/// construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Pole {
    Real(f64),
    Pair(Complex64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoleStage {
    Trial,
    Final,
}

/// Conjugate-closed pole set.
#[derive(Debug, Clone, PartialEq)]
pub struct PoleSet {
    entries: Vec<Pole>,
    pub stage: PoleStage,
}

impl PoleSet {
    pub fn from_entries(entries: Vec<Pole>, stage: PoleStage) -> Result<Self> {
        for p in &entries {
            match *p {
                Pole::Real(a) if a.is_finite() => {}
                Pole::Pair(z) if z.re.is_finite() && z.im > 0.0 => {}
                _ => {
                    return Err(Error::InvalidInput(format!(
                        "invalid pole entry {p:?} (pairs must have Im > 0)"
                    )))
                }
            }
        }
        Ok(PoleSet { entries, stage })
    }

    pub fn entries(&self) -> &[Pole] {
        &self.entries
    }

    /// Total pole count (pairs counted twice).
    pub fn n_poles(&self) -> usize {
        self.entries
            .iter()
            .map(|p| match p {
                Pole::Real(_) => 1,
                Pole::Pair(_) => 2,
            })
            .sum()
    }

    /// Full pole list with conjugates written out.
    pub fn expanded(&self) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.n_poles());
        for p in &self.entries {
            match *p {
                Pole::Real(a) => out.push(Complex64::new(a, 0.0)),
                Pole::Pair(z) => {
                    out.push(z);
                    out.push(z.conj());
                }
            }
        }
        out
    }

    /// True when every pole has a strictly negative real part.
    pub fn is_stable(&self) -> bool {
        self.entries.iter().all(|p| match *p {
            Pole::Real(a) => a < 0.0,
            Pole::Pair(z) => z.re < 0.0,
        })
    }
}

/// Scaling-function estimate from one relocation step.
#[derive(Debug, Clone)]
pub struct SigmaEstimate {
    /// Residues of sigma aligned with the trial pole entries (real entries
    /// carry a purely real residue).
    pub residues: Vec<Complex64>,
    /// Constant term of sigma (1 exactly when not relaxed).
    pub d_sigma: f64,
}

/// Fitted rational model.
#[derive(Debug, Clone)]
pub struct RationalModel {
    pub poles: PoleSet,
    /// Residues per channel, aligned with the pole entries; residues of a
    /// pair's conjugate partner are implied.
    pub residues: Vec<Vec<Complex64>>,
    pub d: Vec<f64>,
    pub e: Vec<f64>,
}

impl RationalModel {
    pub fn channels(&self) -> usize {
        self.residues.len()
    }
}

/// Result of a full fit, with the RMSE recorded after every relocation pass.
#[derive(Debug, Clone)]
pub struct FitOutcome {
    pub model: RationalModel,
    pub iteration_rmse: Vec<f64>,
}

/// Starting poles: N_p/2 conjugate pairs with imaginary parts 2 pi f_m on a
/// linear grid over the band and real parts -beta/100. When the band starts
/// at zero the grid points are pulled inside by half a spacing so no pole
/// lands on the origin.
pub fn init_poles(band: (f64, f64), n_poles: usize) -> Result<PoleSet> {
    if n_poles % 2 != 0 || n_poles == 0 {
        return Err(Error::InvalidConfig(format!(
            "pole count must be even and positive, got {n_poles}"
        )));
    }
    let (f_min, f_max) = band;
    if !(f_max > f_min && f_min >= 0.0) {
        return Err(Error::InvalidConfig(format!("invalid band {band:?}")));
    }
    let pairs = n_poles / 2;
    let freqs: Vec<f64> = if f_min == 0.0 {
        let h = (f_max - f_min) / pairs as f64;
        (0..pairs).map(|m| f_min + (m as f64 + 0.5) * h).collect()
    } else if pairs == 1 {
        vec![0.5 * (f_min + f_max)]
    } else {
        let h = (f_max - f_min) / (pairs - 1) as f64;
        (0..pairs).map(|m| f_min + m as f64 * h).collect()
    };
    let entries = freqs
        .iter()
        .map(|f| {
            let beta = 2.0 * std::f64::consts::PI * f;
            Pole::Pair(Complex64::new(-beta / 100.0, beta))
        })
        .collect();
    PoleSet::from_entries(entries, PoleStage::Trial)
}

/// Per-channel, per-sample least-squares weights for a scheme.
pub fn weights_for(spectra: &SpectrumSet, scheme: Weighting) -> Vec<Vec<f64>> {
    spectra
        .data
        .iter()
        .map(|ch| match scheme {
            Weighting::None => vec![1.0; ch.len()],
            _ => {
                let peak = ch.iter().map(|z| z.norm()).fold(0.0, f64::max);
                if peak == 0.0 {
                    return vec![1.0; ch.len()];
                }
                let floor = 1e-14 * peak;
                ch.iter()
                    .map(|z| {
                        let m = z.norm().max(floor);
                        match scheme {
                            Weighting::WeakInverse => 1.0 / m.sqrt(),
                            _ => 1.0 / m,
                        }
                    })
                    .collect()
            }
        })
        .collect()
}

/// Real-coefficient complex basis columns for the pole entries.
fn basis_columns(s: &[Complex64], entries: &[Pole]) -> DMatrix<Complex64> {
    let n_cols: usize = entries
        .iter()
        .map(|p| match p {
            Pole::Real(_) => 1,
            Pole::Pair(_) => 2,
        })
        .sum();
    let mut m = DMatrix::zeros(s.len(), n_cols);
    let mut col = 0;
    for p in entries {
        match *p {
            Pole::Real(a) => {
                for (k, sk) in s.iter().enumerate() {
                    m[(k, col)] = Complex64::new(1.0, 0.0) / (sk - a);
                }
                col += 1;
            }
            Pole::Pair(z) => {
                for (k, sk) in s.iter().enumerate() {
                    let u = Complex64::new(1.0, 0.0) / (sk - z);
                    let v = Complex64::new(1.0, 0.0) / (sk - z.conj());
                    m[(k, col)] = u + v;
                    m[(k, col + 1)] = Complex64::i() * (u - v);
                }
                col += 2;
            }
        }
    }
    m
}

struct Layout {
    n_poles: usize,
    /// numerator columns: poles + optional d + optional e
    p_local: usize,
    /// common columns: sigma residues + optional d_sigma
    q_common: usize,
    d_col: Option<usize>,
    e_col: Option<usize>,
}

fn layout(cfg: &FitConfig, n_poles: usize) -> Layout {
    let d_col = cfg.include_d.then_some(n_poles);
    let e_col = cfg
        .include_e
        .then_some(n_poles + usize::from(cfg.include_d));
    Layout {
        n_poles,
        p_local: n_poles + usize::from(cfg.include_d) + usize::from(cfg.include_e),
        q_common: n_poles + usize::from(cfg.relaxed),
        d_col,
        e_col,
    }
}

/// Assemble the real 2Ns x (p_local + q_common + 1) system for channel v:
/// `[X | Y | rhs]` with X the numerator block, Y the sigma block, and rhs
/// zero in the relaxed formulation (the data lives inside Y) or the weighted
/// data otherwise.
fn channel_system(
    s: &[Complex64],
    basis: &DMatrix<Complex64>,
    f: &[Complex64],
    w: &[f64],
    lay: &Layout,
    relaxed: bool,
) -> DMatrix<f64> {
    let ns = s.len();
    let cols = lay.p_local + lay.q_common + 1;
    let mut a = DMatrix::zeros(2 * ns, cols);
    for k in 0..ns {
        let wk = w[k];
        for j in 0..lay.n_poles {
            let b = basis[(k, j)];
            a[(k, j)] = wk * b.re;
            a[(ns + k, j)] = wk * b.im;
            let fb = -f[k] * b;
            a[(k, lay.p_local + j)] = wk * fb.re;
            a[(ns + k, lay.p_local + j)] = wk * fb.im;
        }
        if let Some(dc) = lay.d_col {
            a[(k, dc)] = wk;
        }
        if let Some(ec) = lay.e_col {
            a[(ns + k, ec)] = wk * s[k].im;
        }
        if relaxed {
            let md = -f[k];
            a[(k, lay.p_local + lay.n_poles)] = wk * md.re;
            a[(ns + k, lay.p_local + lay.n_poles)] = wk * md.im;
        } else {
            a[(k, cols - 1)] = wk * f[k].re;
            a[(ns + k, cols - 1)] = wk * f[k].im;
        }
    }
    a
}

/// Non-triviality constraint row (already scaled by gamma), last entry = rhs.
fn constraint_row(basis: &DMatrix<Complex64>, lay: &Layout, gamma: f64) -> Vec<f64> {
    let ns = basis.nrows() as f64;
    let mut row = vec![0.0; lay.q_common + 1];
    for j in 0..lay.n_poles {
        let sum: Complex64 = basis.column(j).iter().sum();
        row[j] = gamma * sum.re;
    }
    row[lay.n_poles] = gamma * ns; // d_sigma coefficient
    row[lay.q_common] = gamma * ns; // right-hand side
    row
}

fn relaxed_gamma(spectra: &SpectrumSet, w: &[Vec<f64>]) -> f64 {
    let mut sum = 0.0;
    let mut count = 0usize;
    for (ch, wch) in spectra.data.iter().zip(w) {
        for (z, &wk) in ch.iter().zip(wch) {
            let g = wk * z.norm();
            sum += g * g;
            count += 1;
        }
    }
    if count == 0 || sum == 0.0 {
        return 1.0; // all-zero data: keep the constraint row alive unscaled
    }
    sum.sqrt() / count as f64
}

/// Joint magnitude scale of a spectrum set (1 when identically zero).
///
/// The fit is covariant under a common scaling of the data, so the solvers
/// normalize by this factor internally; physical units routinely put the
/// spectra 15+ orders of magnitude away from the O(1)..O(omega) basis
/// columns, which would otherwise starve the data block of precision.
fn magnitude_scale(spectra: &SpectrumSet) -> f64 {
    let peak = spectra
        .data
        .iter()
        .flatten()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    if peak > 0.0 {
        peak
    } else {
        1.0
    }
}

fn scaled_copy(spectra: &SpectrumSet, scale: f64) -> SpectrumSet {
    SpectrumSet {
        freqs: spectra.freqs.clone(),
        data: spectra
            .data
            .iter()
            .map(|ch| ch.iter().map(|z| z / scale).collect())
            .collect(),
    }
}

/// Solve the pole-identification problem for the common sigma coefficients.
fn solve_sigma(raw: &SpectrumSet, trial: &PoleSet, cfg: &FitConfig) -> Result<Vec<f64>> {
    let spectra = &scaled_copy(raw, magnitude_scale(raw));
    let s = spectra.s_values();
    let ns = s.len();
    let v = spectra.channels();
    let lay = layout(cfg, trial.n_poles());
    if 2 * ns < lay.p_local + lay.q_common + 1 {
        return Err(Error::IllConditioned(format!(
            "{ns} frequency samples cannot support {} unknowns",
            lay.p_local + lay.q_common
        )));
    }
    let basis = basis_columns(&s, trial.entries());
    let w = weights_for(spectra, cfg.weighting);

    let mut stacked_rows: Vec<Vec<f64>> = if cfg.fast {
        // eliminate the numerator block channel by channel, keep the reduced
        // sigma equations (rows p_local.. of the triangular factor)
        let reduced: Vec<DMatrix<f64>> = (0..v)
            .into_par_iter()
            .map(|ch| {
                let a = channel_system(&s, &basis, &spectra.data[ch], &w[ch], &lay, cfg.relaxed);
                let r = linalg::qr_r(a);
                r.view((lay.p_local, lay.p_local), (lay.q_common, lay.q_common + 1))
                    .into_owned()
            })
            .collect();
        reduced
            .iter()
            .flat_map(|r| {
                (0..r.nrows()).map(move |i| (0..r.ncols()).map(|j| r[(i, j)]).collect())
            })
            .collect()
    } else {
        // dense reference path: one block least-squares over all channels
        let rows = 2 * ns * v;
        let cols = v * lay.p_local + lay.q_common;
        let mut big = DMatrix::zeros(rows + usize::from(cfg.relaxed), cols + 1);
        for ch in 0..v {
            let a = channel_system(&s, &basis, &spectra.data[ch], &w[ch], &lay, cfg.relaxed);
            for i in 0..2 * ns {
                for j in 0..lay.p_local {
                    big[(2 * ns * ch + i, lay.p_local * ch + j)] = a[(i, j)];
                }
                for j in 0..lay.q_common {
                    big[(2 * ns * ch + i, v * lay.p_local + j)] = a[(i, lay.p_local + j)];
                }
                big[(2 * ns * ch + i, cols)] = a[(i, lay.p_local + lay.q_common)];
            }
        }
        if cfg.relaxed {
            let gamma = relaxed_gamma(spectra, &w);
            let crow = constraint_row(&basis, &lay, gamma);
            for j in 0..lay.q_common {
                big[(rows, v * lay.p_local + j)] = crow[j];
            }
            big[(rows, cols)] = crow[lay.q_common];
        }
        let a = big.view((0, 0), (big.nrows(), cols)).into_owned();
        let b = big.column(cols).into_owned();
        let sol = linalg::lstsq_min_norm(&a, &b)
            .map_err(|e| Error::IllConditioned(format!("dense relocation solve: {e}")))?;
        return Ok(sol.as_slice()[v * lay.p_local..].to_vec());
    };

    if cfg.relaxed {
        let gamma = relaxed_gamma(spectra, &w);
        stacked_rows.push(constraint_row(&basis, &lay, gamma));
    }
    let rows = stacked_rows.len();
    let mut a = DMatrix::zeros(rows, lay.q_common);
    let mut b = nalgebra::DVector::zeros(rows);
    for (i, row) in stacked_rows.iter().enumerate() {
        for j in 0..lay.q_common {
            a[(i, j)] = row[j];
        }
        b[i] = row[lay.q_common];
    }
    linalg::lstsq_min_norm(&a, &b)
        .map(|x| x.as_slice().to_vec())
        .map_err(|e| Error::IllConditioned(format!("reduced relocation solve: {e}")))
}

/// One pole-relocation step: estimate the scaling function on the trial
/// poles, then move the poles to its zeros. Relocated right-half-plane poles
/// are reflected into the left half-plane; the output stays conjugate-closed.
pub fn pole_relocation_step(
    spectra: &SpectrumSet,
    trial: &PoleSet,
    cfg: &FitConfig,
) -> Result<(PoleSet, SigmaEstimate)> {
    cfg.validate()?;
    if spectra.is_empty() || spectra.channels() == 0 {
        return Err(Error::InvalidInput("empty spectra".into()));
    }
    if !trial.is_stable() {
        return Err(Error::InvalidInput("trial poles must be stable".into()));
    }
    let lay = layout(cfg, trial.n_poles());
    let eta = solve_sigma(spectra, trial, cfg)?;

    let d_sigma = if cfg.relaxed { eta[lay.n_poles] } else { 1.0 };
    if cfg.relaxed && d_sigma.abs() < 1e-8 {
        return Err(Error::DegenerateScaling(d_sigma.abs()));
    }

    // sigma residues aligned with entries
    let mut residues = Vec::with_capacity(trial.entries().len());
    let mut col = 0;
    for p in trial.entries() {
        match p {
            Pole::Real(_) => {
                residues.push(Complex64::new(eta[col], 0.0));
                col += 1;
            }
            Pole::Pair(_) => {
                residues.push(Complex64::new(eta[col], eta[col + 1]));
                col += 2;
            }
        }
    }

    // zeros of sigma: eigenvalues of Ahat - bhat (1/d_sigma) chat^T in the
    // real pair basis
    let n = trial.n_poles();
    let mut m = DMatrix::zeros(n, n);
    let mut bhat = vec![0.0; n];
    let mut chat = vec![0.0; n];
    let mut i = 0;
    for p in trial.entries() {
        match *p {
            Pole::Real(a) => {
                m[(i, i)] = a;
                bhat[i] = 1.0;
                chat[i] = eta[i];
                i += 1;
            }
            Pole::Pair(z) => {
                m[(i, i)] = z.re;
                m[(i, i + 1)] = z.im;
                m[(i + 1, i)] = -z.im;
                m[(i + 1, i + 1)] = z.re;
                bhat[i] = 2.0;
                chat[i] = eta[i];
                chat[i + 1] = eta[i + 1];
                i += 2;
            }
        }
    }
    for r in 0..n {
        for c in 0..n {
            m[(r, c)] -= bhat[r] * chat[c] / d_sigma;
        }
    }
    let mut zeros = linalg::real_matrix_eigenvalues(&m)?;
    for z in &mut zeros {
        if z.re > 0.0 {
            *z = Complex64::new(-z.re, z.im);
        }
    }
    let mut reals: Vec<f64> = zeros.iter().filter(|z| z.im == 0.0).map(|z| z.re).collect();
    let mut pairs: Vec<Complex64> = zeros.iter().filter(|z| z.im > 0.0).copied().collect();
    let n_neg = zeros.iter().filter(|z| z.im < 0.0).count();
    if n_neg != pairs.len() {
        return Err(Error::EigenFailure(
            "relocated poles are not conjugate-closed".into(),
        ));
    }
    reals.sort_by(f64::total_cmp);
    pairs.sort_by(|a, b| a.im.total_cmp(&b.im).then(a.re.total_cmp(&b.re)));
    let entries: Vec<Pole> = reals
        .into_iter()
        .map(Pole::Real)
        .chain(pairs.into_iter().map(Pole::Pair))
        .collect();
    let relocated = PoleSet::from_entries(entries, PoleStage::Trial)?;
    Ok((relocated, SigmaEstimate { residues, d_sigma }))
}

/// With poles fixed, fit per-channel residues plus the real d and e terms in
/// the conjugate-preserving real basis.
pub fn fit_residues(
    raw: &SpectrumSet,
    final_poles: &PoleSet,
    cfg: &FitConfig,
) -> Result<RationalModel> {
    if !final_poles.is_stable() {
        return Err(Error::InvalidInput("poles must be stable".into()));
    }
    let fscale = magnitude_scale(raw);
    let spectra = &scaled_copy(raw, fscale);
    let s = spectra.s_values();
    let ns = s.len();
    let lay = layout(cfg, final_poles.n_poles());
    if 2 * ns < lay.p_local {
        return Err(Error::RankDeficient(format!(
            "{ns} samples cannot support {} residue unknowns",
            lay.p_local
        )));
    }
    let basis = basis_columns(&s, final_poles.entries());
    let w = weights_for(spectra, cfg.weighting);

    let solved: Vec<Result<(Vec<Complex64>, f64, f64)>> = (0..spectra.channels())
        .into_par_iter()
        .map(|ch| {
            let f = &spectra.data[ch];
            let wch = &w[ch];
            let mut a = DMatrix::zeros(2 * ns, lay.p_local);
            let mut b = nalgebra::DVector::zeros(2 * ns);
            for k in 0..ns {
                let wk = wch[k];
                for j in 0..lay.n_poles {
                    let col = basis[(k, j)];
                    a[(k, j)] = wk * col.re;
                    a[(ns + k, j)] = wk * col.im;
                }
                if let Some(dc) = lay.d_col {
                    a[(k, dc)] = wk;
                }
                if let Some(ec) = lay.e_col {
                    a[(ns + k, ec)] = wk * s[k].im;
                }
                b[k] = wk * f[k].re;
                b[ns + k] = wk * f[k].im;
            }
            let x = linalg::lstsq_min_norm(&a, &b)?;
            // undo the internal magnitude normalization
            let mut res = Vec::with_capacity(final_poles.entries().len());
            let mut col = 0;
            for p in final_poles.entries() {
                match p {
                    Pole::Real(_) => {
                        res.push(Complex64::new(fscale * x[col], 0.0));
                        col += 1;
                    }
                    Pole::Pair(_) => {
                        res.push(Complex64::new(fscale * x[col], fscale * x[col + 1]));
                        col += 2;
                    }
                }
            }
            let d = lay.d_col.map_or(0.0, |c| fscale * x[c]);
            let e = lay.e_col.map_or(0.0, |c| fscale * x[c]);
            Ok((res, d, e))
        })
        .collect();

    let mut residues = Vec::with_capacity(spectra.channels());
    let mut d = Vec::with_capacity(spectra.channels());
    let mut e = Vec::with_capacity(spectra.channels());
    for r in solved {
        let (res, dv, ev) = r?;
        residues.push(res);
        d.push(dv);
        e.push(ev);
    }
    let mut poles = final_poles.clone();
    poles.stage = PoleStage::Final;
    Ok(RationalModel {
        poles,
        residues,
        d,
        e,
    })
}

/// Full fit: starting poles spanning the band, `n_iterations` relocation
/// steps, then residue identification. The RMSE against the data is logged
/// after every relocation pass.
pub fn fit(spectra: &SpectrumSet, cfg: &FitConfig) -> Result<FitOutcome> {
    cfg.validate()?;
    if spectra.is_empty() || spectra.channels() == 0 {
        return Err(Error::InvalidInput("empty spectra".into()));
    }
    let mut poles = init_poles(cfg.band, cfg.n_poles)?;
    let mut iteration_rmse = Vec::with_capacity(cfg.n_iterations);
    let mut model = None;
    for _ in 0..cfg.n_iterations {
        let (relocated, _sigma) = pole_relocation_step(spectra, &poles, cfg)?;
        poles = relocated;
        let m = fit_residues(spectra, &poles, cfg)?;
        iteration_rmse.push(rmse(&m, spectra)?);
        model = Some(m);
    }
    let model = model.expect("at least one iteration");
    Ok(FitOutcome {
        model,
        iteration_rmse,
    })
}

/// Evaluate the fitted transfer function on a frequency grid (Hz).
pub fn evaluate(model: &RationalModel, freqs: &[f64]) -> SpectrumSet {
    let s: Vec<Complex64> = freqs
        .iter()
        .map(|f| Complex64::new(0.0, 2.0 * std::f64::consts::PI * f))
        .collect();
    let data = model
        .residues
        .iter()
        .enumerate()
        .map(|(ch, res)| {
            s.iter()
                .map(|&sk| {
                    let mut h = Complex64::new(model.d[ch], 0.0) + sk * model.e[ch];
                    for (p, r) in model.poles.entries().iter().zip(res) {
                        match *p {
                            Pole::Real(a) => h += Complex64::new(r.re, 0.0) / (sk - a),
                            Pole::Pair(z) => {
                                h += r / (sk - z) + r.conj() / (sk - z.conj());
                            }
                        }
                    }
                    h
                })
                .collect()
        })
        .collect();
    SpectrumSet {
        freqs: freqs.to_vec(),
        data,
    }
}

/// Root-mean-square of |H_v(s_k) - f_v(s_k)| over all channels and samples.
pub fn rmse(model: &RationalModel, spectra: &SpectrumSet) -> Result<f64> {
    if model.channels() != spectra.channels() {
        return Err(Error::GridMismatch(format!(
            "{} model channels vs {} spectrum channels",
            model.channels(),
            spectra.channels()
        )));
    }
    let fit = evaluate(model, &spectra.freqs);
    let mut sum = 0.0;
    let mut count = 0usize;
    for (a, b) in fit.data.iter().zip(&spectra.data) {
        for (x, y) in a.iter().zip(b) {
            sum += (x - y).norm_sqr();
            count += 1;
        }
    }
    Ok((sum / count as f64).sqrt())
}

/// Check two sets of frequencies describe the same grid.
pub fn grids_match(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|(x, y)| (x - y).abs() <= 1e-9 * y.abs().max(1.0))
}

/// Extract one mode per conjugate pair: omega_n = |p|, f_n = omega_n / 2 pi,
/// zeta_n = -Re(p)/|p|, shape from the per-channel residues of the pair.
/// Real poles carry no oscillatory mode and are skipped with a diagnostic.
pub fn extract_modes(model: &RationalModel) -> (ModeSet, Vec<String>) {
    let mut modes = Vec::new();
    let mut diagnostics = Vec::new();
    let order = model.poles.n_poles();
    for (idx, p) in model.poles.entries().iter().enumerate() {
        match *p {
            Pole::Real(a) => {
                diagnostics.push(format!("real pole {a:.6e} excluded from modal extraction"));
            }
            Pole::Pair(z) => {
                let wn = z.norm();
                let raw: Vec<Complex64> = model.residues.iter().map(|r| r[idx]).collect();
                match normalize_shape(&raw) {
                    Some(shape) => modes.push(Mode {
                        freq_hz: wn / (2.0 * std::f64::consts::PI),
                        damping: -z.re / wn,
                        shape,
                        source_order: SourceOrder::Order(order),
                    }),
                    None => diagnostics.push(format!(
                        "pole {z} has an all-zero residue vector; mode skipped"
                    )),
                }
            }
        }
    }
    (ModeSet::new(modes), diagnostics)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signals::SpectrumSet;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn spectrum_from_pairs(
        freqs: &[f64],
        pairs: &[Complex64],
        residues: &[Vec<Complex64>],
    ) -> SpectrumSet {
        let s: Vec<Complex64> = freqs
            .iter()
            .map(|f| Complex64::new(0.0, 2.0 * std::f64::consts::PI * f))
            .collect();
        let data = residues
            .iter()
            .map(|res| {
                s.iter()
                    .map(|&sk| {
                        let mut h = Complex64::new(0.0, 0.0);
                        for (p, r) in pairs.iter().zip(res) {
                            h += r / (sk - p) + r.conj() / (sk - p.conj());
                        }
                        h
                    })
                    .collect()
            })
            .collect();
        SpectrumSet {
            freqs: freqs.to_vec(),
            data,
        }
    }

    fn lin_freqs(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect()
    }

    fn three_pair_spectrum() -> (SpectrumSet, Vec<Complex64>) {
        let pairs = vec![
            Complex64::new(-0.5, 50.0),
            Complex64::new(-1.2, 120.0),
            Complex64::new(-3.0, 300.0),
        ];
        let residues = vec![
            vec![
                Complex64::new(1.0, 0.4),
                Complex64::new(-0.7, 1.1),
                Complex64::new(0.3, -0.2),
            ],
            vec![
                Complex64::new(0.2, -1.0),
                Complex64::new(1.4, 0.5),
                Complex64::new(-0.6, 0.8),
            ],
        ];
        let freqs = lin_freqs(2.0, 60.0, 240);
        (spectrum_from_pairs(&freqs, &pairs, &residues), pairs)
    }

    #[test]
    fn init_poles_hits_requested_betas() {
        // pairs at beta = 100 and 200 rad/s
        let lo = 100.0 / (2.0 * std::f64::consts::PI);
        let hi = 200.0 / (2.0 * std::f64::consts::PI);
        let set = init_poles((lo, hi), 4).unwrap();
        match set.entries()[0] {
            Pole::Pair(z) => {
                assert_relative_eq!(z.re, -1.0, epsilon = 1e-12);
                assert_relative_eq!(z.im, 100.0, epsilon = 1e-12);
            }
            _ => panic!("expected pair"),
        }
        let betas: Vec<f64> = set
            .entries()
            .iter()
            .map(|p| match p {
                Pole::Pair(z) => z.im,
                _ => panic!(),
            })
            .collect();
        assert!(betas.windows(2).all(|w| w[1] > w[0]));
        // alpha = beta / 100 throughout
        for p in set.entries() {
            if let Pole::Pair(z) = p {
                assert_relative_eq!(-z.re * 100.0, z.im, epsilon = 1e-12);
            }
        }
        assert_eq!(set.expanded().len(), 4);
    }

    #[test]
    fn init_poles_rejects_odd_count() {
        assert!(init_poles((1.0, 10.0), 5).is_err());
    }

    #[test]
    fn init_poles_nudges_away_from_zero() {
        let set = init_poles((0.0, 10.0), 8).unwrap();
        for p in set.entries() {
            if let Pole::Pair(z) = p {
                assert!(z.im > 0.0);
            }
        }
        assert!(set.is_stable());
    }

    #[test]
    fn relocation_fixed_point_on_exact_data() {
        let (spec, pairs) = three_pair_spectrum();
        let cfg = FitConfig::new(6, (2.0, 60.0));
        let trial = PoleSet::from_entries(
            pairs.iter().map(|&z| Pole::Pair(z)).collect(),
            PoleStage::Trial,
        )
        .unwrap();
        let (relocated, sigma) = pole_relocation_step(&spec, &trial, &cfg).unwrap();
        assert_relative_eq!(sigma.d_sigma, 1.0, epsilon = 1e-8);
        for r in &sigma.residues {
            assert!(r.norm() < 1e-8, "sigma residue {r}");
        }
        let mut got = relocated.expanded();
        let mut want = trial.expanded();
        let key = |z: &Complex64| (z.im, z.re);
        got.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
        want.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).norm() < 1e-8, "pole moved: {g} vs {w}");
        }
    }

    #[test]
    fn relocation_converges_to_sdof_pole() {
        let (m, zeta, fn_hz) = (1.0f64, 0.03f64, 1.0f64);
        let wn = 2.0 * std::f64::consts::PI * fn_hz;
        let wd = wn * (1.0 - zeta * zeta).sqrt();
        let freqs = lin_freqs(0.05, 2.0, 200);
        let s: Vec<Complex64> = freqs
            .iter()
            .map(|f| Complex64::new(0.0, 2.0 * std::f64::consts::PI * f))
            .collect();
        let data: Vec<Complex64> = s
            .iter()
            .map(|&sk| Complex64::new(1.0, 0.0) / (m * sk * sk + 2.0 * zeta * wn * m * sk + wn * wn * m))
            .collect();
        let spec = SpectrumSet {
            freqs,
            data: vec![data],
        };
        let cfg = FitConfig::new(2, (0.05, 2.0));
        // deliberately detuned trial pair
        let mut poles = PoleSet::from_entries(
            vec![Pole::Pair(Complex64::new(-0.05, 2.0 * std::f64::consts::PI * 1.4))],
            PoleStage::Trial,
        )
        .unwrap();
        for _ in 0..5 {
            let (next, _) = pole_relocation_step(&spec, &poles, &cfg).unwrap();
            poles = next;
        }
        let p = match poles.entries()[0] {
            Pole::Pair(z) => z,
            _ => panic!("expected a pair"),
        };
        let target = Complex64::new(-zeta * wn, wd);
        assert!((p - target).norm() < 1e-6, "pole {p} vs {target}");
    }

    #[test]
    fn fast_path_matches_dense_path() {
        let (spec, _) = three_pair_spectrum();
        let trial = init_poles((2.0, 60.0), 6).unwrap();
        for relaxed in [true, false] {
            let mut cfg = FitConfig::new(6, (2.0, 60.0));
            cfg.relaxed = relaxed;
            cfg.fast = true;
            let (fast, sig_f) = pole_relocation_step(&spec, &trial, &cfg).unwrap();
            cfg.fast = false;
            let (dense, sig_d) = pole_relocation_step(&spec, &trial, &cfg).unwrap();
            let scale = dense.expanded()[0].norm();
            for (a, b) in fast.expanded().iter().zip(dense.expanded().iter()) {
                assert!(
                    (a - b).norm() <= 1e-8 * scale.max(1.0),
                    "relaxed={relaxed}: {a} vs {b}"
                );
            }
            for (a, b) in sig_f.residues.iter().zip(&sig_d.residues) {
                assert!((a - b).norm() <= 1e-8 * (1.0 + b.norm()));
            }
            assert_relative_eq!(sig_f.d_sigma, sig_d.d_sigma, epsilon = 1e-8);
        }
    }

    #[test]
    fn relaxed_and_plain_agree_on_exact_data() {
        let (spec, pairs) = three_pair_spectrum();
        let mut cfg = FitConfig::new(6, (2.0, 60.0));
        let run = |relaxed: bool, cfg: &mut FitConfig| {
            cfg.relaxed = relaxed;
            let mut poles = init_poles(cfg.band, cfg.n_poles).unwrap();
            for _ in 0..5 {
                poles = pole_relocation_step(&spec, &poles, cfg).unwrap().0;
            }
            let mut ex = poles.expanded();
            ex.sort_by(|a, b| a.im.total_cmp(&b.im));
            ex
        };
        let a = run(true, &mut cfg);
        let b = run(false, &mut cfg);
        let scale = pairs.iter().map(|z| z.norm()).fold(0.0, f64::max);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).norm() < 1e-7 * scale, "{x} vs {y}");
        }
    }

    #[test]
    fn poles_stay_stable_and_closed_through_iterations() {
        let (spec, _) = three_pair_spectrum();
        let cfg = FitConfig::new(8, (2.0, 60.0));
        let mut poles = init_poles(cfg.band, cfg.n_poles).unwrap();
        for _ in 0..6 {
            let (next, _) = pole_relocation_step(&spec, &poles, &cfg).unwrap();
            assert!(next.is_stable(), "unstable pole set {next:?}");
            assert_eq!(next.n_poles(), 8);
            poles = next;
        }
    }

    #[test]
    fn residues_of_sdof_match_partial_fraction_coefficients() {
        // H(s) = 1/(m (s - s1)(s - s2)) has residue 1/(m (s1 - s2)) at s1
        let (m, zeta, fn_hz) = (2.5f64, 0.05f64, 3.0f64);
        let wn = 2.0 * std::f64::consts::PI * fn_hz;
        let wd = wn * (1.0 - zeta * zeta).sqrt();
        let s1 = Complex64::new(-zeta * wn, wd);
        let s2 = s1.conj();
        let freqs = lin_freqs(0.5, 8.0, 300);
        let s: Vec<Complex64> = freqs
            .iter()
            .map(|f| Complex64::new(0.0, 2.0 * std::f64::consts::PI * f))
            .collect();
        let data: Vec<Complex64> = s
            .iter()
            .map(|&sk| Complex64::new(1.0, 0.0) / (m * (sk - s1) * (sk - s2)))
            .collect();
        let spec = SpectrumSet {
            freqs,
            data: vec![data],
        };
        let poles =
            PoleSet::from_entries(vec![Pole::Pair(s1)], PoleStage::Final).unwrap();
        let cfg = FitConfig::new(2, (0.5, 8.0));
        let model = fit_residues(&spec, &poles, &cfg).unwrap();
        let expect = Complex64::new(1.0, 0.0) / (m * (s1 - s2));
        assert!(
            (model.residues[0][0] - expect).norm() < 1e-10 * expect.norm(),
            "{} vs {expect}",
            model.residues[0][0]
        );
        assert!(model.d[0].abs() < 1e-12);
        assert!(model.e[0].abs() < 1e-12);
    }

    #[test]
    fn zero_spectra_give_zero_model() {
        let freqs = lin_freqs(1.0, 10.0, 50);
        let spec = SpectrumSet {
            freqs: freqs.clone(),
            data: vec![vec![Complex64::new(0.0, 0.0); freqs.len()]],
        };
        let poles = init_poles((1.0, 10.0), 4).unwrap();
        let cfg = FitConfig::new(4, (1.0, 10.0));
        let model = fit_residues(&spec, &poles, &cfg).unwrap();
        for r in &model.residues[0] {
            assert!(r.norm() < 1e-14);
        }
        assert!(model.d[0].abs() < 1e-14);
        assert!(model.e[0].abs() < 1e-14);
    }

    #[test]
    fn evaluate_single_real_pole() {
        let poles =
            PoleSet::from_entries(vec![Pole::Real(-2.0)], PoleStage::Final).unwrap();
        let model = RationalModel {
            poles,
            residues: vec![vec![Complex64::new(3.0, 0.0)]],
            d: vec![0.0],
            e: vec![0.0],
        };
        let out = evaluate(&model, &[1.0]);
        let s = Complex64::new(0.0, 2.0 * std::f64::consts::PI);
        let expect = Complex64::new(3.0, 0.0) / (s + 2.0);
        assert!((out.data[0][0] - expect).norm() < 1e-14);
    }

    #[test]
    fn fit_round_trips_exact_rational_data() {
        let (spec, _) = three_pair_spectrum();
        let cfg = FitConfig::new(6, (2.0, 60.0));
        let out = fit(&spec, &cfg).unwrap();
        assert_eq!(out.iteration_rmse.len(), 5);
        let final_rmse = *out.iteration_rmse.last().unwrap();
        let peak = spec
            .data
            .iter()
            .flatten()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        assert!(final_rmse < 1e-10 * peak, "rmse {final_rmse}");
        let again = rmse(&out.model, &spec).unwrap();
        assert_relative_eq!(again, final_rmse, epsilon = 1e-14 * peak);
        // evaluating on the fit grid reproduces the data within the fit rmse
        let fitted = evaluate(&out.model, &spec.freqs);
        for (a, b) in fitted.data.iter().flatten().zip(spec.data.iter().flatten()) {
            assert!((a - b).norm() <= 10.0 * final_rmse + 1e-12 * peak);
        }
    }

    #[test]
    fn rmse_rejects_channel_mismatch() {
        let (spec, _) = three_pair_spectrum();
        let cfg = FitConfig::new(6, (2.0, 60.0));
        let model = fit(&spec, &cfg).unwrap().model;
        let half = SpectrumSet {
            freqs: spec.freqs.clone(),
            data: vec![spec.data[0].clone()],
        };
        assert!(rmse(&model, &half).is_err());
    }

    #[test]
    fn perfect_model_has_zero_rmse() {
        let pairs = vec![Complex64::new(-1.0, 30.0)];
        let residues = vec![vec![Complex64::new(0.5, 0.1)]];
        let freqs = lin_freqs(1.0, 10.0, 64);
        let spec = spectrum_from_pairs(&freqs, &pairs, &residues);
        let model = RationalModel {
            poles: PoleSet::from_entries(vec![Pole::Pair(pairs[0])], PoleStage::Final).unwrap(),
            residues,
            d: vec![0.0],
            e: vec![0.0],
        };
        assert!(rmse(&model, &spec).unwrap() < 1e-15);
    }

    #[test]
    fn extract_modes_closed_form() {
        let p = Complex64::new(-0.1885, 6.2804);
        let model = RationalModel {
            poles: PoleSet::from_entries(vec![Pole::Pair(p)], PoleStage::Final).unwrap(),
            residues: vec![vec![Complex64::new(1.0, -0.5)]],
            d: vec![0.0],
            e: vec![0.0],
        };
        let (modes, diags) = extract_modes(&model);
        assert!(diags.is_empty());
        assert_eq!(modes.len(), 1);
        assert!((modes.modes[0].freq_hz - 1.0).abs() < 1e-4);
        assert!((modes.modes[0].damping - 0.03).abs() < 1e-4);
    }

    #[test]
    fn real_poles_are_skipped_with_diagnostic() {
        let model = RationalModel {
            poles: PoleSet::from_entries(
                vec![Pole::Real(-4.0), Pole::Pair(Complex64::new(-1.0, 20.0))],
                PoleStage::Final,
            )
            .unwrap(),
            residues: vec![vec![Complex64::new(1.0, 0.0), Complex64::new(0.3, 0.2)]],
            d: vec![0.0],
            e: vec![0.0],
        };
        let (modes, diags) = extract_modes(&model);
        assert_eq!(modes.len(), 1);
        assert_eq!(diags.len(), 1);
        assert!(diags[0].contains("real pole"));
    }

    #[test]
    fn scale_covariance_of_the_whole_fit() {
        let (spec, _) = three_pair_spectrum();
        let c = 37.5;
        let scaled = SpectrumSet {
            freqs: spec.freqs.clone(),
            data: spec
                .data
                .iter()
                .map(|ch| ch.iter().map(|z| z * c).collect())
                .collect(),
        };
        let cfg = FitConfig::new(6, (2.0, 60.0));
        let a = fit(&spec, &cfg).unwrap().model;
        let b = fit(&scaled, &cfg).unwrap().model;
        let pa = a.poles.expanded();
        let pb = b.poles.expanded();
        for (x, y) in pa.iter().zip(&pb) {
            assert!((x - y).norm() < 1e-7 * y.norm(), "pole moved under scaling");
        }
        for ch in 0..2 {
            for (ra, rb) in a.residues[ch].iter().zip(&b.residues[ch]) {
                assert!((ra * c - rb).norm() < 1e-6 * rb.norm().max(1e-12));
            }
            assert_relative_eq!(a.d[ch] * c, b.d[ch], epsilon = 1e-9 * c);
            assert_relative_eq!(a.e[ch] * c, b.e[ch], epsilon = 1e-9 * c);
        }
    }

    proptest! {
        #[test]
        fn extraction_round_trips_pole_parameters(
            fn_hz in 0.1f64..2000.0,
            zeta in 0.001f64..0.2
        ) {
            let wn = 2.0 * std::f64::consts::PI * fn_hz;
            let wd = wn * (1.0 - zeta * zeta).sqrt();
            let p = Complex64::new(-zeta * wn, wd);
            let model = RationalModel {
                poles: PoleSet::from_entries(vec![Pole::Pair(p)], PoleStage::Final).unwrap(),
                residues: vec![vec![Complex64::new(1.0, 1.0)]],
                d: vec![0.0],
                e: vec![0.0],
            };
            let (modes, _) = extract_modes(&model);
            let m = &modes.modes[0];
            let wn_back = 2.0 * std::f64::consts::PI * m.freq_hz;
            let rebuilt = Complex64::new(
                -m.damping * wn_back,
                wn_back * (1.0 - m.damping * m.damping).sqrt(),
            );
            prop_assert!((rebuilt - p).norm() <= 1e-12 * p.norm());
        }
    }
}
