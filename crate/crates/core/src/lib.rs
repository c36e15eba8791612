//! Link-level simulation of amplitude-only (Rydberg-atomic) MIMO uplinks with
//! phase-rotated symbol spreading: every symbol vector is sent twice, the
//! second time rotated by a phase offset, and the two magnitude readings per
//! receiver are turned back into a linear complex model `ŝ ≈ Hx + v_e` that
//! standard ML and ZF detectors can work on.

pub mod channel;
pub mod constellation;
pub mod detect;
pub mod error;
pub mod frontend;
pub mod montecarlo;
pub mod reconstruct;
pub mod rng;

pub use channel::{ChannelRealization, CMatrix, NoiseSpec, ReferenceSignal};
pub use constellation::{demap, make_qam, modulate, quantize, Constellation};
pub use detect::{ml_linear, ml_single_shot, zf_linear, DetectionResult};
pub use error::{Error, Result};
pub use frontend::{observe_prss, observe_single, DualSlotObservation};
pub use reconstruct::{
    build_measurement_matrix, effective_observations, empirical_noise_variance, predicted_mse,
    predicted_trace, reconstruct_general, reconstruct_optimal, EffectiveObservation, MeasurementMatrix,
    OffsetSign, ReconstructedSignal,
};
