//! Cantilever beam bench: assembles an Euler-Bernoulli FEM model with modal
//! damping, solves its eigenproblem, and simulates impulse-response datasets
//! (optionally noise-contaminated) in the same format the preprocessing
//! pipeline ingests.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::modes::{normalize_shape, Mode, ModeSet, SourceOrder};
use crate::signals::TimeSeriesSet;

/// Cross-section description: either I-section dimensions or explicit
/// integrated properties.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Section {
    /// I-section dimensions in meters. `h` is the overall depth, `w` the
    /// flange width, `t_w` the web thickness, `t_f` the flange thickness;
    /// the web clear height is `h - 2 t_f`.
    Dims { h: f64, w: f64, t_w: f64, t_f: f64 },
    /// Explicit area (m^2) and second moment of area (m^4).
    Explicit { area: f64, second_moment: f64 },
}

impl Section {
    pub fn area(&self) -> f64 {
        match *self {
            Section::Dims { h, w, t_w, t_f } => w * h - (w - t_w) * (h - 2.0 * t_f),
            Section::Explicit { area, .. } => area,
        }
    }

    pub fn second_moment(&self) -> f64 {
        match *self {
            Section::Dims { h, w, t_w, t_f } => {
                (w * h.powi(3) - (w - t_w) * (h - 2.0 * t_f).powi(3)) / 12.0
            }
            Section::Explicit { second_moment, .. } => second_moment,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Section::Dims { h, w, t_w, t_f } => {
                h > 0.0 && w > 0.0 && t_w > 0.0 && t_f > 0.0 && t_w < w && 2.0 * t_f < h
            }
            Section::Explicit {
                area,
                second_moment,
            } => area > 0.0 && second_moment > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("non-positive or inconsistent section: {self:?}")))
        }
    }
}

/// Cantilever beam definition for the bench.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BeamSpec {
    /// Beam length in meters.
    pub length: f64,
    pub n_elements: usize,
    pub section: Section,
    /// Material density in kg/m^3.
    pub density: f64,
    /// Young's modulus in Pa.
    pub young_modulus: f64,
    /// Uniform modal damping ratio imposed on every mode.
    pub modal_damping: f64,
}

impl BeamSpec {
    /// Reference validation beam: a 2 m aluminium I-beam cantilever, eight
    /// elements, 3% modal damping.
    ///
    /// The section properties are pinned explicitly (A = 2.8e-4 m^2,
    /// I = 3.227399e-8 m^4) so that the bench reproduces its reference
    /// natural frequencies (7.648 ... 1228.851 Hz) to within 0.005%.
    /// Deriving I from the nominal plate dimensions (H 25 mm, W 50 mm,
    /// t_w 1.5 mm, t_f 2.5 mm) gives 3.277e-8 m^4, about 1.5% stiffer than
    /// the reference frequencies imply with E = 70 GPa; the implied modulus
    /// of the reference data is ~68.9 GPa, a common aluminium library value.
    pub fn reference() -> Self {
        BeamSpec {
            length: 2.0,
            n_elements: 8,
            section: Section::Explicit {
                area: 2.8e-4,
                second_moment: 3.227399e-8,
            },
            density: 2700.0,
            young_modulus: 70e9,
            modal_damping: 0.03,
        }
    }
}

/// Per-node global DOF indices after the root clamp (`None` = removed).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeDofs {
    pub translation: Option<usize>,
    pub rotation: Option<usize>,
}

/// Assembled FEM system after boundary conditions.
#[derive(Debug, Clone)]
pub struct StructuralModel {
    pub mass: DMatrix<f64>,
    pub stiffness: DMatrix<f64>,
    pub damping: DMatrix<f64>,
    pub dof_map: Vec<NodeDofs>,
}

impl StructuralModel {
    pub fn dofs(&self) -> usize {
        self.mass.nrows()
    }

    /// Indices of the free translational DOFs, ordered by node.
    pub fn translation_dofs(&self) -> Vec<usize> {
        self.dof_map.iter().filter_map(|nd| nd.translation).collect()
    }
}

/// Assemble mass, stiffness, and modal damping matrices for a clamped-root
/// Euler-Bernoulli cantilever. Element DOF order is (w1, theta1, w2, theta2);
/// the root node loses both DOFs.
pub fn assemble_model(spec: &BeamSpec) -> Result<StructuralModel> {
    if spec.n_elements == 0 {
        return Err(Error::InvalidConfig("need at least one element".into()));
    }
    if !(spec.length > 0.0 && spec.density > 0.0 && spec.young_modulus > 0.0) {
        return Err(Error::InvalidConfig("length, density, modulus must be positive".into()));
    }
    if !(spec.modal_damping > 0.0 && spec.modal_damping < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "modal damping must lie in (0, 1), got {}",
            spec.modal_damping
        )));
    }
    spec.section.validate()?;

    let ne = spec.n_elements;
    let le = spec.length / ne as f64;
    let area = spec.section.area();
    let inertia = spec.section.second_moment();
    let ei = spec.young_modulus * inertia;
    let rho_a_le = spec.density * area * le;

    let me = {
        let c = rho_a_le / 420.0;
        let l = le;
        DMatrix::from_row_slice(
            4,
            4,
            &[
                156.0 * c, 22.0 * l * c, 54.0 * c, -13.0 * l * c,
                22.0 * l * c, 4.0 * l * l * c, 13.0 * l * c, -3.0 * l * l * c,
                54.0 * c, 13.0 * l * c, 156.0 * c, -22.0 * l * c,
                -13.0 * l * c, -3.0 * l * l * c, -22.0 * l * c, 4.0 * l * l * c,
            ],
        )
    };
    let ke = {
        let l = le;
        DMatrix::from_row_slice(
            4,
            4,
            &[
                12.0 * ei / l.powi(3), 6.0 * ei / l.powi(2), -12.0 * ei / l.powi(3), 6.0 * ei / l.powi(2),
                6.0 * ei / l.powi(2), 4.0 * ei / l, -6.0 * ei / l.powi(2), 2.0 * ei / l,
                -12.0 * ei / l.powi(3), -6.0 * ei / l.powi(2), 12.0 * ei / l.powi(3), -6.0 * ei / l.powi(2),
                6.0 * ei / l.powi(2), 2.0 * ei / l, -6.0 * ei / l.powi(2), 4.0 * ei / l,
            ],
        )
    };

    let full = 2 * (ne + 1);
    let mut m_full = DMatrix::zeros(full, full);
    let mut k_full = DMatrix::zeros(full, full);
    for e in 0..ne {
        let base = 2 * e;
        for i in 0..4 {
            for j in 0..4 {
                m_full[(base + i, base + j)] += me[(i, j)];
                k_full[(base + i, base + j)] += ke[(i, j)];
            }
        }
    }
    // clamp the root node: drop the first two DOFs
    let red = full - 2;
    let mass = m_full.view((2, 2), (red, red)).into_owned();
    let stiffness = k_full.view((2, 2), (red, red)).into_owned();

    let (omegas, phi) = linalg::generalized_eigen(&stiffness, &mass)?;
    // C_d = M Phi diag(2 zeta omega) Phi^T M with mass-normalized Phi
    let diag = DMatrix::from_diagonal(&omegas.map(|w| 2.0 * spec.modal_damping * w));
    let damping = &mass * &phi * diag * phi.transpose() * &mass;

    let mut dof_map = vec![NodeDofs {
        translation: None,
        rotation: None,
    }];
    for node in 1..=ne {
        dof_map.push(NodeDofs {
            translation: Some(2 * (node - 1)),
            rotation: Some(2 * (node - 1) + 1),
        });
    }
    Ok(StructuralModel {
        mass,
        stiffness,
        damping,
        dof_map,
    })
}

/// Undamped modal basis: ascending circular frequencies and mass-normalized
/// eigenvectors over the free DOFs.
pub fn modal_basis(model: &StructuralModel) -> Result<(DVector<f64>, DMatrix<f64>)> {
    linalg::generalized_eigen(&model.stiffness, &model.mass)
}

/// Modal damping ratios extracted from the damping matrix through the
/// mass-normalized basis: zeta_n = phi_n^T C_d phi_n / (2 omega_n).
fn modal_damping_ratios(model: &StructuralModel, omegas: &DVector<f64>, phi: &DMatrix<f64>) -> Vec<f64> {
    (0..omegas.len())
        .map(|m| {
            let col = phi.column(m);
            let c = (col.transpose() * &model.damping * col)[(0, 0)];
            c / (2.0 * omegas[m])
        })
        .collect()
}

/// Solve `K phi = omega^2 M phi` and report every mode with its shape
/// restricted to the free translational DOFs (the bench output channels).
pub fn analytic_modes(model: &StructuralModel) -> Result<ModeSet> {
    let (omegas, phi) = modal_basis(model)?;
    let zetas = modal_damping_ratios(model, &omegas, &phi);
    let trans = model.translation_dofs();
    let mut modes = Vec::with_capacity(omegas.len());
    for m in 0..omegas.len() {
        if omegas[m] <= 0.0 {
            return Err(Error::EigenFailure("zero-frequency mode in clamped model".into()));
        }
        let raw: Vec<Complex64> = trans
            .iter()
            .map(|&d| Complex64::new(phi[(d, m)], 0.0))
            .collect();
        let shape = normalize_shape(&raw).ok_or(Error::ZeroShape)?;
        modes.push(Mode {
            freq_hz: omegas[m] / (2.0 * std::f64::consts::PI),
            damping: zetas[m],
            shape,
            source_order: SourceOrder::ANALYTIC,
        });
    }
    Ok(ModeSet::new(modes))
}

/// Exact modal-superposition response to a rectangular force pulse of width
/// 1/fs at `force_node`, sampled at `fs` for `duration` seconds. Outputs are
/// the transverse displacements at every free translational DOF.
pub fn impulse_response(
    model: &StructuralModel,
    force_node: usize,
    amplitude: f64,
    fs: f64,
    duration: f64,
) -> Result<TimeSeriesSet> {
    if !(fs > 0.0 && duration > 0.0) {
        return Err(Error::InvalidConfig("fs and duration must be positive".into()));
    }
    let force_dof = model
        .dof_map
        .get(force_node)
        .ok_or_else(|| Error::InvalidConfig(format!("node {force_node} does not exist")))?
        .translation
        .ok_or_else(|| Error::InvalidConfig(format!("node {force_node} is clamped")))?;

    let (omegas, phi) = modal_basis(model)?;
    let zetas = modal_damping_ratios(model, &omegas, &phi);
    let dt = 1.0 / fs;
    let n = (duration * fs).round() as usize;
    let trans = model.translation_dofs();
    let mut data = vec![vec![0.0; n]; trans.len()];

    for m in 0..omegas.len() {
        let w = omegas[m];
        let z = zetas[m];
        if !(w > 0.0) {
            return Err(Error::EigenFailure("non-positive modal frequency".into()));
        }
        if !(z < 1.0) {
            return Err(Error::InvalidInput(format!(
                "mode at {w} rad/s is not underdamped (zeta = {z})"
            )));
        }
        let a = z * w;
        let b = w * (1.0 - z * z).sqrt();
        let p = phi[(force_dof, m)] * amplitude;
        // state at the end of the pulse: step response of the modal oscillator
        let e = (-a * dt).exp();
        let (sb, cb) = (b * dt).sin_cos();
        let q1 = p / (w * w) * (1.0 - e * (cb + a / b * sb));
        let v1 = p * e * sb / b;
        let c2 = (v1 + a * q1) / b;
        let gains: Vec<f64> = trans.iter().map(|&d| phi[(d, m)]).collect();
        for t in 1..n {
            let tau = (t as f64 - 1.0) * dt;
            let decay = (-a * tau).exp();
            let (s, c) = (b * tau).sin_cos();
            let q = decay * (q1 * c + c2 * s);
            for (ch, g) in gains.iter().enumerate() {
                data[ch][t] += g * q;
            }
        }
        // t = 0 is sampled at pulse onset where the displacement is zero
    }
    let labels = (1..=trans.len()).map(|i| format!("w{i}")).collect();
    Ok(TimeSeriesSet {
        dt,
        t0: 0.0,
        data,
        channel_labels: labels,
    })
}

/// Add seeded Gaussian noise scaled per channel by `percent` of the channel
/// standard deviation. Deterministic for a fixed seed.
pub fn add_noise(ts: &TimeSeriesSet, percent: f64, seed: u64) -> Result<TimeSeriesSet> {
    if percent < 0.0 {
        return Err(Error::InvalidConfig(format!("noise percent must be >= 0, got {percent}")));
    }
    let mut out = ts.clone();
    if percent == 0.0 {
        return Ok(out);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for ch in &mut out.data {
        let n = ch.len() as f64;
        let mean = ch.iter().sum::<f64>() / n;
        let var = ch.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
        let scale = percent * var.sqrt();
        for x in ch.iter_mut() {
            let g: f64 = rng.sample(StandardNormal);
            *x += scale * g;
        }
    }
    Ok(out)
}
