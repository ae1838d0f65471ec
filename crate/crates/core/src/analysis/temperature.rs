use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::fit::{least_squares, Residuals};
use crate::units::BOLTZMANN_EV;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TemperatureFit {
    pub temperature: f64,
    /// Propagated from the lever-arm uncertainty.
    pub uncertainty: f64,
    pub center: f64,
    pub amplitude: f64,
    pub rms_residual: f64,
}

/// Cumulative trapezoid integral, starting at 0.
pub fn cumulative_trapezoid(x: &[f64], y: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len());
    let mut acc = 0.0;
    out.push(0.0);
    for i in 1..x.len() {
        acc += 0.5 * (y[i] + y[i - 1]) * (x[i] - x[i - 1]);
        out.push(acc);
    }
    out
}

/// `A·tanh(κ(V − V0)) + B + C·V`, linear background fitted jointly.
struct Step<'a> {
    v: &'a [f64],
    y: &'a [f64],
}

impl Residuals for Step<'_> {
    fn len(&self) -> usize {
        self.v.len()
    }

    fn residuals(&self, p: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let t = (p[1] * (self.v[i] - p[2])).tanh();
            *o = p[0] * t + p[3] + p[4] * self.v[i] - self.y[i];
        }
    }

    fn jacobian(&self, p: &[f64], out: &mut DMatrix<f64>) {
        for i in 0..self.v.len() {
            let dv = self.v[i] - p[2];
            let t = (p[1] * dv).tanh();
            let s = 1.0 - t * t;
            out[(i, 0)] = t;
            out[(i, 1)] = p[0] * s * dv;
            out[(i, 2)] = -p[0] * s * p[1];
            out[(i, 3)] = 1.0;
            out[(i, 4)] = self.v[i];
        }
    }
}

fn check_inputs(v: &[f64], y: &[f64], lever_arm: f64) -> Result<()> {
    if !(lever_arm > 0.0 && lever_arm <= 1.0) {
        return Err(Error::validation("lever arm must lie in (0, 1]"));
    }
    if v.len() != y.len() || v.len() < 8 {
        return Err(Error::InsufficientData("trace needs at least 8 matching samples".into()));
    }
    if v.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::validation("trace voltages must increase strictly"));
    }
    Ok(())
}

/// Fits an already integrated trace (a temperature-broadened step).
pub fn fit_integrated_trace(
    v: &[f64],
    integrated: &[f64],
    lever_arm: f64,
    lever_arm_sigma: f64,
    peak_guess: f64,
    width_guess: f64,
) -> Result<TemperatureFit> {
    check_inputs(v, integrated, lever_arm)?;
    let lo = integrated.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = integrated.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sign = if integrated[integrated.len() - 1] >= integrated[0] { 1.0 } else { -1.0 };
    let p0 = [
        sign * 0.5 * (hi - lo),
        1.7627 / width_guess.max(1e-9),
        peak_guess,
        0.5 * (hi + lo),
        0.0,
    ];
    let problem = Step { v, y: integrated };
    let out = least_squares(&problem, &p0);
    let kappa = out.params[1].abs();
    let scale = (hi - lo).abs().max(f64::MIN_POSITIVE);
    if !out.converged || !(kappa > 0.0) || !kappa.is_finite() {
        return Err(Error::Fit {
            message: "temperature step fit".into(),
            residual: out.rms / scale,
        });
    }
    let temperature = lever_arm / (2.0 * BOLTZMANN_EV * kappa);
    Ok(TemperatureFit {
        temperature,
        uncertainty: temperature * lever_arm_sigma / lever_arm,
        center: out.params[2],
        amplitude: out.params[0].abs(),
        rms_residual: out.rms,
    })
}

/// Electron temperature from a lock-in trace across one transition.
pub fn fit_electron_temperature(
    v: &[f64],
    signal: &[f64],
    lever_arm: f64,
    lever_arm_sigma: f64,
) -> Result<TemperatureFit> {
    check_inputs(v, signal, lever_arm)?;
    let (ipk, &peak) = signal
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty");
    let base = signal.iter().copied().fold(f64::INFINITY, f64::min);
    if !(peak - base > 1e-12 * peak.abs().max(base.abs()).max(f64::MIN_POSITIVE)) {
        return Err(Error::InsufficientData("trace has no transition peak".into()));
    }
    let half = base + 0.5 * (peak - base);
    let left = (0..ipk).rev().find(|&i| signal[i] < half).unwrap_or(0);
    let right = (ipk..signal.len()).find(|&i| signal[i] < half).unwrap_or(signal.len() - 1);
    let fwhm = (v[right] - v[left]).max(v[1] - v[0]);
    let integrated = cumulative_trapezoid(v, signal);
    fit_integrated_trace(v, &integrated, lever_arm, lever_arm_sigma, v[ipk], fwhm)
}
