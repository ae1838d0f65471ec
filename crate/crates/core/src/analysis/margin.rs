use super::maxima::median;
use super::summary::TransitionSummary;
use crate::{Error, Result};

/// The 1e line is trusted only if the scan extends below it by more than two
/// typical addition voltages.
pub fn margin_passes(margin: f64, typical_addition: f64) -> bool {
    margin > 2.0 * typical_addition
}

/// Median addition voltage over the summaries that have one.
pub fn median_addition(summaries: &[TransitionSummary]) -> Result<f64> {
    let adds: Vec<f64> = summaries.iter().filter_map(|s| s.addition_voltage).collect();
    if adds.is_empty() {
        return Err(Error::InsufficientData("no addition voltages on the wafer".into()));
    }
    Ok(median(&adds))
}

/// Per-summary verdict; `None` where no 1e voltage (hence no margin) exists.
pub fn validate_margin(summaries: &[TransitionSummary]) -> Result<Vec<Option<bool>>> {
    let typical = median_addition(summaries)?;
    Ok(summaries
        .iter()
        .map(|s| s.scan_margin.map(|m| margin_passes(m, typical)))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strict_boundary() {
        assert!(margin_passes(0.40, 0.158));
        assert!(!margin_passes(0.316, 0.158));
        assert!(!margin_passes(0.2, 0.158));
    }

    #[test]
    fn needs_addition_data() {
        let s = TransitionSummary {
            scan_margin: Some(0.3),
            success: true,
            ..Default::default()
        };
        assert!(validate_margin(&[s]).is_err());
    }

    #[test]
    fn wafer_median_used() {
        let mk = |m: f64, a: f64| TransitionSummary {
            scan_margin: Some(m),
            addition_voltage: Some(a),
            success: true,
            ..Default::default()
        };
        let s = vec![mk(0.25, 0.1), mk(0.15, 0.08), mk(0.19, 0.06), TransitionSummary::default()];
        // median addition 0.08 -> threshold 0.16
        assert_eq!(
            validate_margin(&s).unwrap(),
            vec![Some(true), Some(false), Some(true), None]
        );
    }
}
