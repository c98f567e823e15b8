//! File formats: CSV time series, JSON configurations and results, and
//! plot-ready exports of stabilization diagrams.
//!
//! Time-series CSV layout: a header row `time,<label>,...` followed by one
//! row per sample; the first column is the time in seconds. Lines starting
//! with `#` are comments (used to stamp a run id) and are skipped on read.
//! Floats are printed with shortest round-trip precision, so parse/print is
//! exact.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frvf::{Pole, PoleSet, PoleStage, RationalModel};
use crate::signals::{RawRecord, RotationAngles, TimeSeriesSet};
use crate::stabilization::StabilizationDiagram;

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Read a raw record from CSV without assuming a uniform time base.
pub fn read_raw_csv(path: &Path) -> Result<RawRecord> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let reader = BufReader::new(file);
    let mut timestamps = Vec::new();
    let mut samples: Vec<Vec<f64>> = Vec::new();
    let mut labels: Vec<String> = Vec::new();
    let mut header_seen = false;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        if !header_seen {
            if fields.len() < 2 || !fields[0].eq_ignore_ascii_case("time") {
                return Err(Error::Parse {
                    path: path.display().to_string(),
                    line: lineno + 1,
                    message: "expected header `time,<channel>,...`".into(),
                });
            }
            labels = fields[1..].iter().map(|s| s.to_string()).collect();
            samples = vec![Vec::new(); labels.len()];
            header_seen = true;
            continue;
        }
        if fields.len() != labels.len() + 1 {
            return Err(Error::Parse {
                path: path.display().to_string(),
                line: lineno + 1,
                message: format!("expected {} fields, found {}", labels.len() + 1, fields.len()),
            });
        }
        let parse = |s: &str, lineno: usize| -> Result<f64> {
            s.parse::<f64>().map_err(|_| Error::Parse {
                path: path.display().to_string(),
                line: lineno + 1,
                message: format!("invalid float {s:?}"),
            })
        };
        timestamps.push(parse(fields[0], lineno)?);
        for (c, f) in fields[1..].iter().enumerate() {
            samples[c].push(parse(f, lineno)?);
        }
    }
    if !header_seen || timestamps.is_empty() {
        return Err(Error::Parse {
            path: path.display().to_string(),
            line: 0,
            message: "empty dataset".into(),
        });
    }
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "record".into());
    Ok(RawRecord {
        name,
        timestamps,
        samples,
        channel_labels: labels,
    })
}

/// Read a uniformly sampled series, validating the grid step.
pub fn read_timeseries_csv(path: &Path) -> Result<TimeSeriesSet> {
    let rec = read_raw_csv(path)?;
    if rec.timestamps.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "{}: need at least two samples",
            path.display()
        )));
    }
    let dt = rec.timestamps[1] - rec.timestamps[0];
    if !(dt > 0.0) {
        return Err(Error::NonMonotonicTimestamps(path.display().to_string()));
    }
    for (i, w) in rec.timestamps.windows(2).enumerate() {
        let step = w[1] - w[0];
        if (step - dt).abs() > 1e-6 * dt {
            return Err(Error::InvalidInput(format!(
                "{}: non-uniform step at row {} ({step} vs {dt})",
                path.display(),
                i + 2
            )));
        }
    }
    Ok(TimeSeriesSet {
        dt,
        t0: rec.timestamps[0],
        data: rec.samples,
        channel_labels: rec.channel_labels,
    })
}

/// Write a time series to CSV. `run_id`, when given, is stamped as a leading
/// comment line.
pub fn write_timeseries_csv(path: &Path, ts: &TimeSeriesSet, run_id: Option<&str>) -> Result<()> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    let res: std::io::Result<()> = (|| {
        if let Some(id) = run_id {
            writeln!(w, "# run_id: {id}")?;
        }
        write!(w, "time")?;
        for label in &ts.channel_labels {
            write!(w, ",{label}")?;
        }
        writeln!(w)?;
        for i in 0..ts.samples() {
            write!(w, "{}", ts.t0 + i as f64 * ts.dt)?;
            for ch in &ts.data {
                write!(w, ",{}", ch[i])?;
            }
            writeln!(w)?;
        }
        w.flush()
    })();
    res.map_err(|e| io_err(path, e))
}

/// Load any JSON-encoded value.
pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    serde_json::from_reader(BufReader::new(file)).map_err(|e| Error::Json {
        path: path.display().to_string(),
        source: e,
    })
}

/// Save a value as pretty-printed JSON; `run_id` is injected as a top-level
/// field when the value serializes to an object.
pub fn save_json<T: Serialize>(path: &Path, value: &T, run_id: Option<&str>) -> Result<()> {
    let mut doc = serde_json::to_value(value).map_err(|e| Error::Json {
        path: path.display().to_string(),
        source: e,
    })?;
    if let (Some(id), Some(obj)) = (run_id, doc.as_object_mut()) {
        obj.insert("run_id".into(), serde_json::Value::String(id.into()));
    }
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, &doc).map_err(|e| Error::Json {
        path: path.display().to_string(),
        source: e,
    })?;
    writeln!(w).map_err(|e| io_err(path, e))?;
    w.flush().map_err(|e| io_err(path, e))
}

/// Triad rotation entry as configured on disk (angles in degrees).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TriadRotation {
    pub channels: [usize; 3],
    pub yaw: f64,
    pub pitch: f64,
    pub roll: f64,
}

impl TriadRotation {
    pub fn to_radians(&self) -> ([usize; 3], RotationAngles) {
        let rad = std::f64::consts::PI / 180.0;
        (
            self.channels,
            RotationAngles {
                yaw: self.yaw * rad,
                pitch: self.pitch * rad,
                roll: self.roll * rad,
            },
        )
    }
}

/// Serialized form of a rational model: expanded pole list (conjugates
/// explicit) with per-channel residues aligned to it, plus the real offset
/// and slope terms.
#[derive(Debug, Serialize, Deserialize)]
struct RationalModelRepr {
    poles: Vec<[f64; 2]>,
    residues: Vec<Vec<[f64; 2]>>,
    d: Vec<f64>,
    e: Vec<f64>,
}

impl Serialize for RationalModel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut poles = Vec::new();
        let mut residues = vec![Vec::new(); self.residues.len()];
        for (idx, p) in self.poles.entries().iter().enumerate() {
            match *p {
                Pole::Real(a) => {
                    poles.push([a, 0.0]);
                    for (ch, out) in residues.iter_mut().enumerate() {
                        out.push([self.residues[ch][idx].re, 0.0]);
                    }
                }
                Pole::Pair(z) => {
                    poles.push([z.re, z.im]);
                    poles.push([z.re, -z.im]);
                    for (ch, out) in residues.iter_mut().enumerate() {
                        let r = self.residues[ch][idx];
                        out.push([r.re, r.im]);
                        out.push([r.re, -r.im]);
                    }
                }
            }
        }
        RationalModelRepr {
            poles,
            residues,
            d: self.d.clone(),
            e: self.e.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for RationalModel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as DeError;
        let repr = RationalModelRepr::deserialize(d)?;
        let nch = repr.residues.len();
        for (ch, r) in repr.residues.iter().enumerate() {
            if r.len() != repr.poles.len() {
                return Err(D::Error::custom(format!(
                    "channel {ch}: {} residues for {} poles",
                    r.len(),
                    repr.poles.len()
                )));
            }
        }
        let mut entries = Vec::new();
        let mut residues: Vec<Vec<Complex64>> = vec![Vec::new(); nch];
        let mut i = 0;
        while i < repr.poles.len() {
            let p = Complex64::new(repr.poles[i][0], repr.poles[i][1]);
            if p.im == 0.0 {
                entries.push(Pole::Real(p.re));
                for (ch, out) in residues.iter_mut().enumerate() {
                    out.push(Complex64::new(repr.residues[ch][i][0], 0.0));
                }
                i += 1;
            } else {
                let next = repr
                    .poles
                    .get(i + 1)
                    .map(|q| Complex64::new(q[0], q[1]))
                    .ok_or_else(|| D::Error::custom("dangling complex pole without conjugate"))?;
                let tol = 1e-9 * p.norm().max(1.0);
                if (next - p.conj()).norm() > tol {
                    return Err(D::Error::custom(format!(
                        "pole {next} does not conjugate {p}"
                    )));
                }
                let rep = if p.im > 0.0 { p } else { p.conj() };
                let take = |ch: usize, at: usize| {
                    Complex64::new(repr.residues[ch][at][0], repr.residues[ch][at][1])
                };
                for ch in 0..nch {
                    let r = if p.im > 0.0 { take(ch, i) } else { take(ch, i + 1) };
                    residues[ch].push(r);
                }
                entries.push(Pole::Pair(rep));
                i += 2;
            }
        }
        let poles = PoleSet::from_entries(entries, PoleStage::Final)
            .map_err(|e| D::Error::custom(e.to_string()))?;
        Ok(RationalModel {
            poles,
            residues,
            d: repr.d,
            e: repr.e,
        })
    }
}

/// Diagram as CSV rows `order,freq_hz,damping,freq_stable,damp_stable,shape_stable`.
pub fn diagram_to_csv(diag: &StabilizationDiagram, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    let res: std::io::Result<()> = (|| {
        writeln!(w, "order,freq_hz,damping,freq_stable,damp_stable,shape_stable")?;
        for entry in &diag.entries {
            for (m, f) in entry.modes.iter().zip(&entry.flags) {
                writeln!(
                    w,
                    "{},{},{},{},{},{}",
                    entry.order, m.freq_hz, m.damping, f.freq_stable, f.damp_stable, f.shape_stable
                )?;
            }
        }
        w.flush()
    })();
    res.map_err(|e| io_err(path, e))
}

/// Plot-ready JSON for external rendering: one point per screened pole.
pub fn diagram_to_plot_json(diag: &StabilizationDiagram) -> serde_json::Value {
    let points: Vec<serde_json::Value> = diag
        .entries
        .iter()
        .flat_map(|entry| {
            entry.modes.iter().zip(&entry.flags).map(move |(m, f)| {
                serde_json::json!({
                    "order": entry.order,
                    "freq_hz": m.freq_hz,
                    "damping": m.damping,
                    "freq_stable": f.freq_stable,
                    "damp_stable": f.damp_stable,
                    "shape_stable": f.shape_stable,
                    "stable": f.all(),
                })
            })
        })
        .collect();
    serde_json::json!({
        "orders": diag.entries.iter().map(|e| e.order).collect::<Vec<_>>(),
        "failures": diag.failures.iter().map(|(k, msg)| serde_json::json!({
            "order": k,
            "error": msg,
        })).collect::<Vec<_>>(),
        "points": points,
    })
}
