//! Cross-module checks on the built-in cantilever bench: rational-fit
//! quality, weighting behavior, and iteration-count convergence on the
//! simulated dataset.

use std::sync::OnceLock;

use modalfit::beam::{self, BeamSpec};
use modalfit::frvf::{self, FitConfig, Weighting};
use modalfit::signals::{self, SpectrumSet, TimeSeriesSet};

const BAND: (f64, f64) = (0.0, 1300.0);

fn beam_response() -> &'static TimeSeriesSet {
    static DATA: OnceLock<TimeSeriesSet> = OnceLock::new();
    DATA.get_or_init(|| {
        let model = beam::assemble_model(&BeamSpec::reference()).unwrap();
        beam::impulse_response(&model, 1, 1.0, 3600.0, 30.0).unwrap()
    })
}

fn spectra_of(ts: &TimeSeriesSet) -> SpectrumSet {
    let corr = signals::next_correlations(ts, 0, 1000).unwrap();
    signals::correlations_to_spectra(&corr, BAND).unwrap()
}

fn peak(spectra: &SpectrumSet) -> f64 {
    spectra
        .data
        .iter()
        .flatten()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

#[test]
fn noiseless_fit_error_is_orders_below_the_spectrum_peak() {
    let spectra = spectra_of(beam_response());
    let cfg = FitConfig::new(40, BAND);
    let outcome = frvf::fit(&spectra, &cfg).unwrap();
    let rel = outcome.iteration_rmse.last().unwrap() / peak(&spectra);
    assert!(rel < 1e-8, "relative fit error {rel:.3e}");
}

#[test]
fn iteration_rmse_log_is_monotone_enough() {
    // the log exists per iteration and the final entry is not worse than
    // the first (strict monotonicity is not guaranteed under relocation)
    let spectra = spectra_of(beam_response());
    let cfg = FitConfig::new(16, BAND);
    let outcome = frvf::fit(&spectra, &cfg).unwrap();
    assert_eq!(outcome.iteration_rmse.len(), cfg.n_iterations);
    assert!(outcome.iteration_rmse.last().unwrap() <= outcome.iteration_rmse.first().unwrap());
}

#[test]
fn unit_weighting_minimizes_absolute_rmse_under_noise() {
    let noisy = beam::add_noise(beam_response(), 0.02, 0).unwrap();
    let spectra = spectra_of(&noisy);
    let run = |scheme: Weighting| {
        let mut cfg = FitConfig::new(16, BAND);
        cfg.weighting = scheme;
        let model = frvf::fit(&spectra, &cfg).unwrap().model;
        frvf::rmse(&model, &spectra).unwrap()
    };
    let rmse_none = run(Weighting::None);
    let rmse_strong = run(Weighting::StrongInverse);
    assert!(
        rmse_none <= rmse_strong,
        "unit {rmse_none:.3e} vs strong inverse {rmse_strong:.3e}"
    );
}

#[test]
fn extra_iterations_do_not_move_converged_poles() {
    let spectra = spectra_of(beam_response());
    let freqs = |iters: usize| {
        let mut cfg = FitConfig::new(16, BAND);
        cfg.n_iterations = iters;
        let outcome = frvf::fit(&spectra, &cfg).unwrap();
        let (modes, _) = frvf::extract_modes(&outcome.model);
        modes.frequencies()
    };
    let five = freqs(5);
    let ten = freqs(10);
    assert_eq!(five.len(), ten.len());
    for (a, b) in five.iter().zip(&ten) {
        assert!(
            (a - b).abs() <= 1e-6 * b,
            "mode frequency moved between 5 and 10 iterations: {a} vs {b}"
        );
    }
}

#[test]
fn large_hankel_configuration_is_accepted_on_long_correlations() {
    // 700 block rows x 800 columns with shift 10 requires 1509 lags
    let corr = signals::next_correlations(beam_response(), 0, 1600).unwrap();
    let cfg = modalfit::era::EraConfig {
        hankel_rows: 700,
        hankel_cols: 800,
        truncation: 150,
        shift: 10,
    };
    let (h0, h1) = modalfit::era::build_hankel(&corr, &cfg).unwrap();
    assert_eq!(h0.shape(), (8 * 700, 800));
    assert_eq!(h1.shape(), (8 * 700, 800));
    // H1 is H0 advanced by `shift` lags
    assert_eq!(h1[(0, 0)], corr.data[0][10]);
    assert_eq!(h0[(0, 10)], h1[(0, 0)]);
}
