//! Vanishing-viscosity sweeps.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{solve, SolverConfig};
use crate::error::{Error, Result};
use crate::report::{linear_fit, RegressionFit};
use crate::spectral::Field;

/// Successive terminal differences of an `ε` sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub eps: Vec<f64>,
    /// `‖θ_{ε_i}(T) − θ_{ε_{i+1}}(T)‖_∞`.
    pub differences: Vec<f64>,
    /// Fit of `ln difference` against `ln ε_i`; the exponent is the Cauchy rate.
    pub fit: Option<RegressionFit>,
    /// Differences strictly decrease along the sweep.
    pub monotone: bool,
    pub config_hash: String,
}

/// Run `solve` once per viscosity (concurrently) and compare terminal fields.
pub fn vanishing_viscosity_sweep(
    config: &SolverConfig,
    eps_list: &[f64],
) -> Result<ConvergenceReport> {
    if eps_list.len() < 2 {
        return Err(Error::Config(
            "an epsilon sweep needs at least two values".into(),
        ));
    }
    if eps_list.windows(2).any(|w| w[1] > w[0]) || eps_list.iter().any(|e| !(*e >= 0.0)) {
        return Err(Error::Config(
            "epsilon list must be nonnegative and nonincreasing".into(),
        ));
    }
    let terminals: Vec<Field> = eps_list
        .par_iter()
        .map(|&eps| {
            let mut c = config.clone();
            c.epsilon = eps;
            c.snapshot_times.clear();
            solve(&c).map(|t| t.terminal().clone())
        })
        .collect::<Result<_>>()?;
    let differences: Vec<f64> = terminals
        .windows(2)
        .map(|w| w[0].sub(&w[1]).map(|d| d.sup_norm()))
        .collect::<Result<_>>()?;
    let (xs, ys): (Vec<f64>, Vec<f64>) = eps_list
        .iter()
        .zip(&differences)
        .filter(|(e, d)| **e > 0.0 && **d > 0.0)
        .map(|(e, d)| (e.ln(), d.ln()))
        .unzip();
    Ok(ConvergenceReport {
        eps: eps_list.to_vec(),
        monotone: differences.windows(2).all(|w| w[1] < w[0]),
        fit: linear_fit(&xs, &ys),
        differences,
        config_hash: config.hash(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::LevyKernelSpec;
    use crate::solver::InitialSpec;
    use crate::spectral::Grid;

    fn linear() -> SolverConfig {
        let g = Grid::new(1, 32, 1.0).unwrap();
        let mut c = SolverConfig::new(g, LevyKernelSpec::fractional_laplacian(1, 0.5), 0.01, 0.5);
        c.initial = InitialSpec::Cosine {
            amplitude: 1.0,
            wavevector: [1, 0],
        };
        c
    }

    #[test]
    fn repeated_viscosity_gives_zero_difference() {
        let r = vanishing_viscosity_sweep(&linear(), &[0.1, 0.1]).unwrap();
        assert_eq!(r.differences, vec![0.0]);
        assert!(r.fit.is_none());
    }

    #[test]
    fn single_mode_matches_duhamel_difference() {
        let eps = [0.1, 0.05, 0.025];
        let r = vanishing_viscosity_sweep(&linear(), &eps).unwrap();
        let t: f64 = 0.5;
        for (i, d) in r.differences.iter().enumerate() {
            let exact = (-t).exp() * ((-eps[i + 1] * t).exp() - (-eps[i] * t).exp());
            assert!((d - exact).abs() < 1e-12, "{d} {exact}");
        }
        assert!(r.monotone);
        assert!((r.fit.unwrap().exponent - 1.0).abs() < 0.05);
    }

    #[test]
    fn increasing_list_is_rejected() {
        assert!(vanishing_viscosity_sweep(&linear(), &[0.1, 0.2]).is_err());
    }
}
