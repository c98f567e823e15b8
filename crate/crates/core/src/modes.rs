//! Modal parameter containers shared by every identifier.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Where a mode estimate came from: an analytic eigensolution or an
/// identification run at a given model order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", untagged)]
pub enum SourceOrder {
    Analytic(AnalyticTag),
    Order(usize),
}

/// Serialization tag for analytic modes (`"analytic"` in JSON).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnalyticTag {
    Analytic,
}

impl SourceOrder {
    pub const ANALYTIC: SourceOrder = SourceOrder::Analytic(AnalyticTag::Analytic);
}

/// One identified (or analytic) vibration mode.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Mode {
    /// Natural frequency f_n in Hz.
    pub freq_hz: f64,
    /// Damping ratio zeta_n (dimensionless).
    pub damping: f64,
    /// Complex mode shape over the output channels, unit-normalized with the
    /// largest-magnitude component rotated onto the positive real axis.
    #[serde(with = "complex_vec")]
    pub shape: Vec<Complex64>,
    pub source_order: SourceOrder,
}

/// Ordered collection of modes (ascending natural frequency).
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ModeSet {
    pub modes: Vec<Mode>,
}

impl ModeSet {
    pub fn new(mut modes: Vec<Mode>) -> Self {
        modes.sort_by(|a, b| a.freq_hz.total_cmp(&b.freq_hz));
        ModeSet { modes }
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// Number of output channels the shapes are defined on (0 when empty).
    pub fn channels(&self) -> usize {
        self.modes.first().map_or(0, |m| m.shape.len())
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.freq_hz).collect()
    }
}

/// Normalize a shape to unit Euclidean norm and rotate its largest-magnitude
/// component onto the positive real axis. Returns `None` for a zero vector.
pub fn normalize_shape(shape: &[Complex64]) -> Option<Vec<Complex64>> {
    let norm: f64 = shape.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if !(norm > 0.0) {
        return None;
    }
    let (imax, zmax) = shape
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))?;
    let _ = imax;
    let phase = Complex64::from_polar(1.0, -zmax.arg());
    Some(shape.iter().map(|z| z * phase / norm).collect())
}

/// Serde adapter storing complex vectors as `[[re, im], ...]`.
pub mod complex_vec {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[Complex64], s: S) -> Result<S::Ok, S::Error> {
        let pairs: Vec<[f64; 2]> = v.iter().map(|z| [z.re, z.im]).collect();
        pairs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Complex64>, D::Error> {
        let pairs: Vec<[f64; 2]> = Vec::deserialize(d)?;
        Ok(pairs.iter().map(|p| Complex64::new(p[0], p[1])).collect())
    }
}
