//! Thin adapter over the `levenberg-marquardt` solver for dense, dynamically
//! sized least-squares problems.

use levenberg_marquardt::{LeastSquaresProblem, LevenbergMarquardt};
use nalgebra::{storage::Owned, DMatrix, DVector, Dyn};

/// Residuals and Jacobian of a least-squares problem.
pub trait Residuals {
    fn len(&self) -> usize;
    /// Writes `model - data` for every point.
    fn residuals(&self, params: &[f64], out: &mut [f64]);
    /// Writes d(residual_i)/d(param_j) at `out[(i, j)]`.
    fn jacobian(&self, params: &[f64], out: &mut DMatrix<f64>);
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitOutcome {
    pub params: Vec<f64>,
    /// Root-mean-square residual at the solution.
    pub rms: f64,
    pub converged: bool,
    pub evaluations: usize,
}

struct Adapter<'a, R: Residuals> {
    problem: &'a R,
    params: DVector<f64>,
}

impl<R: Residuals> LeastSquaresProblem<f64, Dyn, Dyn> for Adapter<'_, R> {
    type ResidualStorage = Owned<f64, Dyn>;
    type JacobianStorage = Owned<f64, Dyn, Dyn>;
    type ParameterStorage = Owned<f64, Dyn>;

    fn set_params(&mut self, x: &DVector<f64>) {
        self.params.copy_from(x);
    }

    fn params(&self) -> DVector<f64> {
        self.params.clone()
    }

    fn residuals(&self) -> Option<DVector<f64>> {
        let mut r = DVector::zeros(self.problem.len());
        self.problem.residuals(self.params.as_slice(), r.as_mut_slice());
        r.iter().all(|v| v.is_finite()).then_some(r)
    }

    fn jacobian(&self) -> Option<DMatrix<f64>> {
        let mut j = DMatrix::zeros(self.problem.len(), self.params.len());
        self.problem.jacobian(self.params.as_slice(), &mut j);
        j.iter().all(|v| v.is_finite()).then_some(j)
    }
}

pub fn least_squares<R: Residuals>(problem: &R, initial: &[f64]) -> FitOutcome {
    let adapter = Adapter {
        problem,
        params: DVector::from_column_slice(initial),
    };
    let solver = LevenbergMarquardt::new()
        .with_tol(1e-14)
        .with_patience(400);
    let (done, report) = solver.minimize(adapter);
    let params: Vec<f64> = done.params.iter().copied().collect();
    let mut r = vec![0.0; problem.len()];
    problem.residuals(&params, &mut r);
    let rms = if r.is_empty() {
        0.0
    } else {
        (r.iter().map(|v| v * v).sum::<f64>() / r.len() as f64).sqrt()
    };
    FitOutcome {
        params,
        rms,
        converged: report.termination.was_successful() && rms.is_finite(),
        evaluations: report.number_of_evaluations,
    }
}
