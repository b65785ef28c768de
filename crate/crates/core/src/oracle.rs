//! Random-tensor equivalence suite: the permutation engine against the
//! explicit four-dimensional formulas.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::integrands::{
    psi_closed_form_4d, psi_extrinsic_rf, psi_intrinsic, random_curvature_tensor, random_symmetric, ClosedFormInput,
    FrameData,
};
use crate::metrics::CurvatureData;

/// Pass threshold on the absolute difference.
pub const ORACLE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleOptions {
    pub trials: usize,
    pub seed: u64,
    /// Test hook: flip the sign of the engine's `Ψ_3` before comparing.
    #[serde(default)]
    pub mutate_psi3: bool,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self { trials: 1000, seed: 0, mutate_psi3: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleRow {
    /// Face dimension; 4 is the interior integrand.
    pub r: usize,
    pub max_abs_error: f64,
    pub max_abs_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub trials: usize,
    pub rows: Vec<OracleRow>,
    pub max_error: f64,
    pub pass: bool,
}

fn random_metric(rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let a = random_symmetric(4, rng);
    &a * &a * 0.3 + DMatrix::identity(4, 4)
}

pub fn closed_form_oracle(opts: &OracleOptions) -> Result<OracleReport> {
    if opts.trials == 0 {
        return Err(GeomError::InvalidInput("the oracle needs at least one trial".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut rows: Vec<OracleRow> = (0..=4).map(|r| OracleRow { r, max_abs_error: 0.0, max_abs_value: 0.0 }).collect();
    for _ in 0..opts.trials {
        for r in 0..4 {
            let riemann = random_curvature_tensor(r, &mut rng);
            let lambda = random_symmetric(r, &mut rng);
            let gamma = if r == 0 { 1.0 } else { 0.5 + rand::Rng::random::<f64>(&mut rng) };
            let fd = FrameData { point: vec![], riemann: riemann.clone(), gamma, lambda: vec![lambda.clone()] };
            let mut engine = 0.0;
            for f in 0..=r / 2 {
                engine += psi_extrinsic_rf(&fd, &[1.0], r, f, 4)?;
            }
            if r == 3 && opts.mutate_psi3 {
                engine = -engine;
            }
            let closed = psi_closed_form_4d(r, ClosedFormInput::Face { riemann: &riemann, lambda: &lambda, gamma })?;
            let row = &mut rows[r];
            row.max_abs_error = row.max_abs_error.max((engine - closed).abs());
            row.max_abs_value = row.max_abs_value.max(closed.abs());
        }
        let riemann = random_curvature_tensor(4, &mut rng);
        let c = CurvatureData::from_riemann(vec![], random_metric(&mut rng), riemann)?;
        let engine = psi_intrinsic(&c.riemann, c.det_g);
        let closed = psi_closed_form_4d(4, ClosedFormInput::Interior(&c))?;
        let row = &mut rows[4];
        row.max_abs_error = row.max_abs_error.max((engine - closed).abs());
        row.max_abs_value = row.max_abs_value.max(closed.abs());
    }
    let max_error = rows.iter().map(|r| r.max_abs_error).fold(0.0, f64::max);
    Ok(OracleReport { trials: opts.trials, rows, max_error, pass: max_error <= ORACLE_TOL })
}
