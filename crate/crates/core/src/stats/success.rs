use crate::analysis::TransitionSummary;
use crate::{Error, Result};

/// Fraction of attempted charge-sensing scans in which transitions were found.
pub fn success_rate<'a>(summaries: impl IntoIterator<Item = &'a TransitionSummary>) -> Result<f64> {
    let (mut n, mut ok) = (0usize, 0usize);
    for s in summaries {
        n += 1;
        ok += usize::from(s.success);
    }
    if n == 0 {
        return Err(Error::InsufficientData("no scans attempted".into()));
    }
    Ok(ok as f64 / n as f64)
}
