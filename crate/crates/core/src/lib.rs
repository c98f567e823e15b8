//! Output-only operational modal analysis toolkit.
//!
//! The pipeline turns raw multichannel acceleration or displacement records
//! into modal parameters without measuring the excitation:
//!
//! 1. [`signals`] — alignment, sensor-frame rotation, decimation, output
//!    correlation estimation and correlation spectra.
//! 2. [`frvf`] — iterative pole-relocation rational fitting of the
//!    correlation spectra (plain, relaxed, and QR-reduced fast variants)
//!    with residue identification and modal extraction.
//! 3. [`era`] — an eigensystem-realization benchmark identifier working on
//!    the same correlation decays.
//! 4. [`stabilization`] — multi-order sweeps, hard/soft pole screening,
//!    stable-alignment selection, and cross-case modal tracking.
//! 5. [`beam`] — a built-in cantilever FEM bench that generates the
//!    validation datasets used by the test suite.

pub mod beam;
pub mod era;
pub mod error;
pub mod frvf;
pub mod io;
pub mod linalg;
pub mod modes;
pub mod signals;
pub mod stabilization;

pub use error::{Error, Result};
pub use modes::{Mode, ModeSet, SourceOrder};
