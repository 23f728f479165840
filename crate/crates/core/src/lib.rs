//! Parametric T60 and DRR retargeting of recorded impulse responses, and
//! synthesis of labelled reverberant-speech datasets built on it.
//!
//! The pieces, bottom up:
//!
//! * [`air`]: the impulse-response type, direct-path search, early/late
//!   partition and DRR.
//! * [`decay`]: decay-plus-noise-floor model fitting, T60, and noise-floor
//!   replacement.
//! * [`filterbank`]: zero-phase, power-complementary third-octave bank.
//! * [`augment`]: DRR and T60 retargeting.
//! * [`levels`]: active speech level, RMS and integrated loudness.
//! * [`dataset`]: segmentation, balanced AIR generation, mixing, manifests
//!   and calibration.
//! * [`eval`]: bias / MSE / Pearson statistics and reports.

pub mod air;
pub mod augment;
pub mod convolve;
pub mod dataset;
pub mod decay;
pub mod error;
pub mod eval;
pub mod filterbank;
pub mod levels;
pub mod rng;
mod simplex;
pub mod synth;
pub mod wav;

pub use air::{drr_of, find_direct_path, measure_drr, split_early_late, Air, EarlyLateSplit};
pub use augment::{
    augment, augment_drr, augment_t60_fullband, augment_t60_subband, solve_drr_gain, AugmentReport,
    AugmentSpec,
};
pub use decay::{
    compute_envelope, detect_noise_floor_onset, estimate_decay, estimate_t60, fit_decay_model,
    measure_t60, remove_noise_floor, synthesize_noise_free_late, DecayFit, DecayModel,
    EnergyEnvelope,
};
pub use error::{Error, Result};
pub use eval::{evaluate, EvalStats, ReportFormat};
pub use filterbank::{analyze, design_filterbank, synthesize, FilterbankSpec, SubbandSet};
pub use levels::{
    active_speech_level, integrated_loudness, normalize_loudness, rms_level, LevelMethod,
    LevelReport,
};
