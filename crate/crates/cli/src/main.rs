//! Command-line front end: simulate -> preprocess -> identify -> stabilize
//! -> track, with file-based stage boundaries so every experiment is a
//! reproducible loop over configs.
//!
//! Exit codes: 0 success, 1 usage, 2 data/configuration error, 3 numerical
//! failure.

mod manifest;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use manifest::ManifestBuilder;
use modalfit::beam::{self, BeamSpec};
use modalfit::era::EraConfig;
use modalfit::frvf::{self, FitConfig, RationalModel, Weighting};
use modalfit::io as mio;
use modalfit::signals::{self, CorrelationSet, SpectrumSet, TimeSeriesSet};
use modalfit::stabilization::{self, ScreenCriteria, SweepConfig, SweepInput};
use modalfit::{Error, ModeSet, Result};

#[derive(Parser)]
#[command(
    name = "modalfit",
    version,
    about = "Output-only operational modal analysis: correlation-driven rational fitting with realization benchmarking, stabilization screening, and modal tracking"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the built-in cantilever bench and write dataset + ground truth
    Simulate(SimulateArgs),
    /// Align, rotate, and decimate raw multichannel records
    Preprocess(PreprocessArgs),
    /// Identify modal parameters from a uniform dataset
    Identify(IdentifyArgs),
    /// Multi-order sweep with stabilization screening and selection
    Stabilize(StabilizeArgs),
    /// Match candidate mode sets against a reference set
    Track(TrackArgs),
    /// Export plot-ready CSV data (x, y, series)
    Plotdata(PlotdataArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Beam definition JSON; defaults to the built-in reference cantilever
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Noise level as a fraction of each channel's standard deviation
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Sampling frequency in Hz
    #[arg(long, default_value_t = 3600.0)]
    fs: f64,
    /// Record duration in seconds
    #[arg(long, default_value_t = 30.0)]
    duration: f64,
    /// Node carrying the transverse impulse (root = 0 is clamped)
    #[arg(long, default_value_t = 1)]
    force_node: usize,
    /// Impulse amplitude in Newton
    #[arg(long, default_value_t = 1.0)]
    amplitude: f64,
    /// Output CSV dataset
    #[arg(long)]
    out_data: PathBuf,
    /// Output ground-truth mode set JSON
    #[arg(long)]
    out_modes: PathBuf,
}

#[derive(Args)]
struct PreprocessArgs {
    /// Input CSV record(s); repeat for multiple sensors
    #[arg(long, required = true)]
    input: Vec<PathBuf>,
    /// Common resampling rate in Hz
    #[arg(long, default_value_t = 500.0)]
    target_rate: f64,
    /// Triad rotation config JSON (channels + yaw/pitch/roll in degrees)
    #[arg(long)]
    rotations: Option<PathBuf>,
    /// Decimation target rate in Hz
    #[arg(long, default_value_t = 10.0)]
    decimate_to: f64,
    /// Skip the decimation stage
    #[arg(long, default_value_t = false)]
    no_decimate: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct IdentifyArgs {
    /// Uniform time-series CSV
    #[arg(long)]
    data: PathBuf,
    /// Identification method
    #[arg(long, value_parser = ["frvf", "era"])]
    method: String,
    /// Method configuration JSON (FitConfig / EraConfig); flags below apply
    /// when omitted
    #[arg(long)]
    config: Option<PathBuf>,
    /// Correlation reference channel (1-based)
    #[arg(long, default_value_t = 1)]
    reference: usize,
    /// Maximum correlation lag in samples
    #[arg(long, default_value_t = 1000)]
    max_lag: usize,
    /// Analysis band "fmin,fmax" in Hz (default: 0 to 99% of Nyquist)
    #[arg(long)]
    band: Option<String>,
    /// Pole count (frvf) or retained singular values (era)
    #[arg(long, default_value_t = 16)]
    order: usize,
    /// Relocation iteration count (frvf)
    #[arg(long, default_value_t = 5)]
    iterations: usize,
    /// Weighting scheme (frvf)
    #[arg(long, default_value = "none", value_parser = ["none", "weak_inverse", "strong_inverse"])]
    weighting: String,
    /// Output mode-set JSON
    #[arg(long)]
    out: PathBuf,
    /// Fit report JSON (per-iteration error for frvf)
    #[arg(long)]
    report: Option<PathBuf>,
    /// Fitted rational model JSON (frvf only)
    #[arg(long)]
    out_model: Option<PathBuf>,
}

#[derive(Args)]
struct StabilizeArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_parser = ["frvf", "era"])]
    method: String,
    /// Base method configuration JSON (order is overridden per sweep point)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Screening criteria JSON; defaults to the bench screen
    #[arg(long)]
    criteria: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    reference: usize,
    #[arg(long, default_value_t = 1000)]
    max_lag: usize,
    #[arg(long)]
    band: Option<String>,
    /// Selected stable mode set JSON
    #[arg(long)]
    out: PathBuf,
    /// Full diagram as CSV (order, freq, damping, flags)
    #[arg(long)]
    diagram_csv: Option<PathBuf>,
    /// Full diagram as plot-ready JSON
    #[arg(long)]
    diagram_json: Option<PathBuf>,
}

#[derive(Args)]
struct TrackArgs {
    /// Reference mode-set JSON
    #[arg(long)]
    reference: PathBuf,
    /// Candidate mode-set JSON(s)
    #[arg(long, required = true)]
    candidate: Vec<PathBuf>,
    /// Relative frequency tolerance
    #[arg(long, default_value_t = 0.10)]
    f_tol: f64,
    /// Acceptance threshold on the modal assurance criterion
    #[arg(long, default_value_t = 0.7)]
    mac_min: f64,
    /// Match report JSON
    #[arg(long)]
    out: PathBuf,
    /// Optional flat CSV version of the report
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct PlotdataArgs {
    #[command(subcommand)]
    what: PlotdataCommand,
}

#[derive(Subcommand)]
enum PlotdataCommand {
    /// Measured correlation spectra vs a fitted model: rows (freq, magnitude, series)
    Frf {
        #[arg(long)]
        data: PathBuf,
        /// Fitted rational model JSON (from `identify --out-model`)
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 1)]
        reference: usize,
        #[arg(long, default_value_t = 1000)]
        max_lag: usize,
        #[arg(long)]
        band: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Stabilization diagram points: rows (freq, order, series)
    Diagram {
        /// Plot-ready diagram JSON (from `stabilize --diagram-json`)
        #[arg(long)]
        diagram: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap's help/version "errors" are normal exits
            if e.use_stderr() {
                eprintln!("{e}");
                std::process::exit(1);
            }
            print!("{e}");
            std::process::exit(0);
        }
    };
    let result = match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Preprocess(args) => cmd_preprocess(args),
        Command::Identify(args) => cmd_identify(args),
        Command::Stabilize(args) => cmd_stabilize(args),
        Command::Track(args) => cmd_track(args),
        Command::Plotdata(args) => match args.what {
            PlotdataCommand::Frf {
                data,
                model,
                reference,
                max_lag,
                band,
                out,
            } => cmd_plotdata_frf(data, model, reference, max_lag, band, out),
            PlotdataCommand::Diagram { diagram, out } => cmd_plotdata_diagram(diagram, out),
        },
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

fn parse_band(text: &str) -> Result<(f64, f64)> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 2 {
        return Err(Error::InvalidConfig(format!(
            "band must be \"fmin,fmax\", got {text:?}"
        )));
    }
    let lo: f64 = parts[0]
        .trim()
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("invalid band edge {:?}", parts[0])))?;
    let hi: f64 = parts[1]
        .trim()
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("invalid band edge {:?}", parts[1])))?;
    Ok((lo, hi))
}

fn band_or_default(band: &Option<String>, ts: &TimeSeriesSet) -> Result<(f64, f64)> {
    match band {
        Some(text) => parse_band(text),
        None => Ok((0.0, 0.99 * 0.5 / ts.dt)),
    }
}

fn weighting_from(name: &str) -> Weighting {
    match name {
        "weak_inverse" => Weighting::WeakInverse,
        "strong_inverse" => Weighting::StrongInverse,
        _ => Weighting::None,
    }
}

/// 1-based channel index from the command line to 0-based.
fn reference_index(reference: usize, channels: usize) -> Result<usize> {
    if reference == 0 || reference > channels {
        return Err(Error::ChannelOutOfRange {
            index: reference,
            channels,
        });
    }
    Ok(reference - 1)
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    let mut mf = ManifestBuilder::new("simulate");
    mf.set_seed(args.seed);
    mf.set_params(serde_json::json!({
        "noise": args.noise,
        "fs": args.fs,
        "duration": args.duration,
        "force_node": args.force_node,
        "amplitude": args.amplitude,
        "builtin_spec": args.spec.is_none(),
    }));
    let spec: BeamSpec = match &args.spec {
        Some(path) => {
            mf.hash_input(path)?;
            mio::load_json(path)?
        }
        None => BeamSpec::reference(),
    };
    let model = beam::assemble_model(&spec)?;
    let truth = beam::analytic_modes(&model)?;
    mf.mark("assemble");
    let clean = beam::impulse_response(&model, args.force_node, args.amplitude, args.fs, args.duration)?;
    let data = beam::add_noise(&clean, args.noise, args.seed)?;
    mf.mark("simulate");
    let run_id = mf.run_id();
    mio::write_timeseries_csv(&args.out_data, &data, Some(&run_id))?;
    mio::save_json(&args.out_modes, &truth, Some(&run_id))?;
    mf.mark("write");
    mf.record_output(&args.out_data);
    mf.record_output(&args.out_modes);
    mf.write(&args.out_data)?;
    println!(
        "simulated {} channels x {} samples at {} Hz (noise {}), run {run_id}",
        data.channels(),
        data.samples(),
        args.fs,
        args.noise
    );
    Ok(())
}

fn cmd_preprocess(args: PreprocessArgs) -> Result<()> {
    let mut mf = ManifestBuilder::new("preprocess");
    mf.set_params(serde_json::json!({
        "target_rate": args.target_rate,
        "decimate_to": args.decimate_to,
        "no_decimate": args.no_decimate,
    }));
    let mut records = Vec::new();
    for path in &args.input {
        mf.hash_input(path)?;
        records.push(mio::read_raw_csv(path)?);
    }
    let mut ts = signals::ingest_and_align(&records, args.target_rate)?;
    mf.mark("align");
    if let Some(path) = &args.rotations {
        mf.hash_input(path)?;
        let triads: Vec<mio::TriadRotation> = mio::load_json(path)?;
        let converted: Vec<_> = triads.iter().map(|t| t.to_radians()).collect();
        ts = signals::apply_rotation(&ts, &converted)?;
    }
    mf.mark("rotate");
    if !args.no_decimate {
        let ratio = ts.rate() / args.decimate_to;
        let factor = ratio.round();
        if factor < 1.0 || (ratio - factor).abs() > 1e-6 * factor {
            return Err(Error::InvalidConfig(format!(
                "rate {} Hz is not an integer multiple of the decimation target {} Hz",
                ts.rate(),
                args.decimate_to
            )));
        }
        ts = signals::decimate(&ts, factor as usize)?;
    }
    mf.mark("decimate");
    let run_id = mf.run_id();
    mio::write_timeseries_csv(&args.out, &ts, Some(&run_id))?;
    mf.record_output(&args.out);
    mf.write(&args.out)?;
    println!(
        "preprocessed {} channels x {} samples at {} Hz, run {run_id}",
        ts.channels(),
        ts.samples(),
        ts.rate()
    );
    Ok(())
}

fn correlations_for(
    ts: &TimeSeriesSet,
    reference: usize,
    max_lag: usize,
) -> Result<CorrelationSet> {
    let r = reference_index(reference, ts.channels())?;
    signals::next_correlations(ts, r, max_lag)
}

#[derive(serde::Serialize)]
struct FitReport {
    method: String,
    reference_channel: usize,
    max_lag: usize,
    band_hz: Option<(f64, f64)>,
    n_modes: usize,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    iteration_rmse: Vec<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    diagnostics: Vec<String>,
}

fn cmd_identify(args: IdentifyArgs) -> Result<()> {
    let mut mf = ManifestBuilder::new("identify");
    mf.set_params(serde_json::json!({
        "method": args.method,
        "reference": args.reference,
        "max_lag": args.max_lag,
        "band": args.band,
        "order": args.order,
        "iterations": args.iterations,
        "weighting": args.weighting,
    }));
    mf.hash_input(&args.data)?;
    let ts = mio::read_timeseries_csv(&args.data)?;
    let corr = correlations_for(&ts, args.reference, args.max_lag)?;
    mf.mark("correlate");

    let mut report = FitReport {
        method: args.method.clone(),
        reference_channel: args.reference,
        max_lag: args.max_lag,
        band_hz: None,
        n_modes: 0,
        iteration_rmse: Vec::new(),
        diagnostics: Vec::new(),
    };
    let mut fitted_model: Option<RationalModel> = None;

    let modes: ModeSet = match args.method.as_str() {
        "frvf" => {
            let cfg: FitConfig = match &args.config {
                Some(path) => {
                    mf.hash_input(path)?;
                    mio::load_json(path)?
                }
                None => {
                    let mut cfg = FitConfig::new(args.order, band_or_default(&args.band, &ts)?);
                    cfg.n_iterations = args.iterations;
                    cfg.weighting = weighting_from(&args.weighting);
                    cfg
                }
            };
            report.band_hz = Some(cfg.band);
            let spectra = signals::correlations_to_spectra(&corr, cfg.band)?;
            let outcome = frvf::fit(&spectra, &cfg)?;
            report.iteration_rmse = outcome.iteration_rmse.clone();
            let (modes, diags) = frvf::extract_modes(&outcome.model);
            report.diagnostics = diags;
            fitted_model = Some(outcome.model);
            modes
        }
        "era" => {
            let cfg: EraConfig = match &args.config {
                Some(path) => {
                    mf.hash_input(path)?;
                    mio::load_json(path)?
                }
                None => EraConfig {
                    hankel_rows: 60,
                    hankel_cols: 600,
                    truncation: args.order,
                    shift: 1,
                },
            };
            modalfit::era::fit_era(&corr, &cfg)?
        }
        other => return Err(Error::InvalidConfig(format!("unknown method {other:?}"))),
    };
    mf.mark("identify");

    report.n_modes = modes.len();
    let run_id = mf.run_id();
    mio::save_json(&args.out, &modes, Some(&run_id))?;
    mf.record_output(&args.out);
    if let Some(path) = &args.report {
        mio::save_json(path, &report, Some(&run_id))?;
        mf.record_output(path);
    }
    if let Some(path) = &args.out_model {
        match &fitted_model {
            Some(model) => {
                mio::save_json(path, model, Some(&run_id))?;
                mf.record_output(path);
            }
            None => {
                return Err(Error::InvalidConfig(
                    "--out-model applies to the frvf method only".into(),
                ))
            }
        }
    }
    mf.mark("write");
    mf.write(&args.out)?;
    println!("identified {} modes ({}), run {run_id}", modes.len(), args.method);
    for m in &modes.modes {
        println!("  f = {:10.4} Hz  zeta = {:.4}", m.freq_hz, m.damping);
    }
    Ok(())
}

fn cmd_stabilize(args: StabilizeArgs) -> Result<()> {
    let mut mf = ManifestBuilder::new("stabilize");
    mf.set_params(serde_json::json!({
        "method": args.method,
        "reference": args.reference,
        "max_lag": args.max_lag,
        "band": args.band,
    }));
    mf.hash_input(&args.data)?;
    let ts = mio::read_timeseries_csv(&args.data)?;
    let corr = correlations_for(&ts, args.reference, args.max_lag)?;
    mf.mark("correlate");

    let criteria: ScreenCriteria = match &args.criteria {
        Some(path) => {
            mf.hash_input(path)?;
            mio::load_json(path)?
        }
        None => ScreenCriteria::bench_defaults(),
    };

    let diagram = match args.method.as_str() {
        "frvf" => {
            let cfg: FitConfig = match &args.config {
                Some(path) => {
                    mf.hash_input(path)?;
                    mio::load_json(path)?
                }
                None => FitConfig::new(
                    criteria.order_range.min.max(2),
                    band_or_default(&args.band, &ts)?,
                ),
            };
            let spectra = signals::correlations_to_spectra(&corr, cfg.band)?;
            stabilization::sweep(
                &SweepInput::Spectra(&spectra),
                &SweepConfig::Frvf(cfg),
                &criteria,
            )?
        }
        "era" => {
            let cfg: EraConfig = match &args.config {
                Some(path) => {
                    mf.hash_input(path)?;
                    mio::load_json(path)?
                }
                None => EraConfig {
                    hankel_rows: 60,
                    hankel_cols: 600,
                    truncation: criteria.order_range.min.max(2),
                    shift: 1,
                },
            };
            stabilization::sweep(
                &SweepInput::Correlations(&corr),
                &SweepConfig::Era(cfg),
                &criteria,
            )?
        }
        other => return Err(Error::InvalidConfig(format!("unknown method {other:?}"))),
    };
    mf.mark("sweep");
    let selected = stabilization::select_stable(&diagram, &criteria);
    mf.mark("select");

    let run_id = mf.run_id();
    mio::save_json(&args.out, &selected, Some(&run_id))?;
    mf.record_output(&args.out);
    if let Some(path) = &args.diagram_csv {
        mio::diagram_to_csv(&diagram, path)?;
        mf.record_output(path);
    }
    if let Some(path) = &args.diagram_json {
        mio::save_json(path, &mio::diagram_to_plot_json(&diagram), Some(&run_id))?;
        mf.record_output(path);
    }
    mf.mark("write");
    mf.write(&args.out)?;
    println!(
        "{} stable alignments from {} identified orders ({} failed), run {run_id}",
        selected.len(),
        diagram.entries.len(),
        diagram.failures.len()
    );
    for m in &selected.modes {
        println!("  f = {:10.4} Hz  zeta = {:.4}", m.freq_hz, m.damping);
    }
    Ok(())
}

fn cmd_track(args: TrackArgs) -> Result<()> {
    let mut mf = ManifestBuilder::new("track");
    mf.set_params(serde_json::json!({
        "f_tol": args.f_tol,
        "mac_min": args.mac_min,
    }));
    mf.hash_input(&args.reference)?;
    let reference: ModeSet = mio::load_json(&args.reference)?;
    let mut reports = Vec::new();
    for path in &args.candidate {
        mf.hash_input(path)?;
        let candidate: ModeSet = mio::load_json(path)?;
        let report = stabilization::track(&reference, &candidate, args.f_tol, args.mac_min)?;
        reports.push((path.display().to_string(), report));
    }
    mf.mark("track");

    let doc = serde_json::json!({
        "f_tol": args.f_tol,
        "mac_min": args.mac_min,
        "reference": args.reference.display().to_string(),
        "cases": reports.iter().map(|(name, rep)| serde_json::json!({
            "candidate": name,
            "report": rep,
        })).collect::<Vec<_>>(),
    });
    let run_id = mf.run_id();
    mio::save_json(&args.out, &doc, Some(&run_id))?;
    mf.record_output(&args.out);
    if let Some(path) = &args.csv {
        write_track_csv(path, &reports)?;
        mf.record_output(path);
    }
    mf.mark("write");
    mf.write(&args.out)?;
    for (name, rep) in &reports {
        let accepted = rep.matches.iter().filter(|m| m.accepted).count();
        println!(
            "{name}: {accepted} accepted / {} matched, {} reference modes unmatched",
            rep.matches.len(),
            rep.unmatched_reference.len()
        );
    }
    Ok(())
}

fn write_track_csv(
    path: &Path,
    reports: &[(String, stabilization::TrackReport)],
) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let mut w = BufWriter::new(file);
    let res: std::io::Result<()> = (|| {
        writeln!(w, "candidate,reference_index,candidate_index,freq_dev_pct,mac,accepted")?;
        for (name, rep) in reports {
            for m in &rep.matches {
                writeln!(
                    w,
                    "{name},{},{},{},{},{}",
                    m.reference_index, m.candidate_index, m.freq_dev_pct, m.mac, m.accepted
                )?;
            }
        }
        w.flush()
    })();
    res.map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })
}

fn cmd_plotdata_frf(
    data: PathBuf,
    model_path: PathBuf,
    reference: usize,
    max_lag: usize,
    band: Option<String>,
    out: PathBuf,
) -> Result<()> {
    let mut mf = ManifestBuilder::new("plotdata-frf");
    mf.hash_input(&data)?;
    mf.hash_input(&model_path)?;
    let ts = mio::read_timeseries_csv(&data)?;
    let corr = correlations_for(&ts, reference, max_lag)?;
    let band = band_or_default(&band, &ts)?;
    let spectra = signals::correlations_to_spectra(&corr, band)?;
    let model: RationalModel = mio::load_json(&model_path)?;
    let fit: SpectrumSet = frvf::evaluate(&model, &spectra.freqs);
    mf.mark("evaluate");

    let file = File::create(&out).map_err(|e| Error::Io {
        path: out.display().to_string(),
        source: e,
    })?;
    let mut w = BufWriter::new(file);
    let res: std::io::Result<()> = (|| {
        writeln!(w, "x,y,series")?;
        for (ch, label) in ts.channel_labels.iter().enumerate() {
            for (k, f) in spectra.freqs.iter().enumerate() {
                writeln!(w, "{f},{},data:{label}", spectra.data[ch][k].norm())?;
            }
            for (k, f) in spectra.freqs.iter().enumerate() {
                writeln!(w, "{f},{},fit:{label}", fit.data[ch][k].norm())?;
            }
            for (k, f) in spectra.freqs.iter().enumerate() {
                let err = (spectra.data[ch][k] - fit.data[ch][k]).norm();
                writeln!(w, "{f},{err},error:{label}")?;
            }
        }
        w.flush()
    })();
    res.map_err(|e| Error::Io {
        path: out.display().to_string(),
        source: e,
    })?;
    mf.record_output(&out);
    mf.write(&out)?;
    println!("wrote FRF plot data for {} channels to {}", ts.channels(), out.display());
    Ok(())
}

fn cmd_plotdata_diagram(diagram: PathBuf, out: PathBuf) -> Result<()> {
    let mut mf = ManifestBuilder::new("plotdata-diagram");
    mf.hash_input(&diagram)?;
    let doc: serde_json::Value = mio::load_json(&diagram)?;
    let points = doc
        .get("points")
        .and_then(|p| p.as_array())
        .ok_or_else(|| Error::InvalidInput("diagram JSON carries no points array".into()))?;
    let file = File::create(&out).map_err(|e| Error::Io {
        path: out.display().to_string(),
        source: e,
    })?;
    let mut w = BufWriter::new(file);
    let res: std::io::Result<()> = (|| {
        writeln!(w, "x,y,series")?;
        for p in points {
            let f = p.get("freq_hz").and_then(|v| v.as_f64()).unwrap_or(f64::NAN);
            let order = p.get("order").and_then(|v| v.as_u64()).unwrap_or(0);
            let stable = p.get("stable").and_then(|v| v.as_bool()).unwrap_or(false);
            let series = if stable { "stable" } else { "screened" };
            writeln!(w, "{f},{order},{series}")?;
        }
        w.flush()
    })();
    res.map_err(|e| Error::Io {
        path: out.display().to_string(),
        source: e,
    })?;
    mf.record_output(&out);
    mf.write(&out)?;
    println!("wrote diagram plot data ({} points) to {}", points.len(), out.display());
    Ok(())
}
