//! Transition-curve detection in charge-sensing scans and the figures derived
//! from it.
//!
//! The chain is: derivative-of-Gaussian high-pass along the plunger axis,
//! row-wise maximum filter, chaining of maxima into segments, merging and
//! ordering of segments into curves, and read-out of the 1e/2e voltages.

mod chain;
mod filter;
mod margin;
mod maxima;
mod merge;
mod summary;
mod temperature;

pub use chain::{chain_segments, nearest, CurveSegment};
pub use filter::{derivative_row, derivative_weights, highpass_background, highpass_values};
pub use margin::{margin_passes, median_addition, validate_margin};
pub use maxima::{adaptive_floor, detect_maxima, image_noise, robust_noise, MaximaSet, Point};
pub(crate) use maxima::median;
pub use merge::{merge_and_order, MergeConfig, TransitionCurve};
pub use summary::{analyze_scan, refine_centers, summarize_transitions, AnalysisConfig, ScanAnalysis, TransitionSummary};
pub use temperature::{cumulative_trapezoid, fit_electron_temperature, fit_integrated_trace, TemperatureFit};
