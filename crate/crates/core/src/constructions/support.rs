//! Low-dimensional support sets inside `[0,1]^dim`, sampled for the grid
//! cover and for error certification.

use std::f64::consts::PI;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SupportKind {
    /// `t ↦ (t, 1/2, …, 1/2)`.
    Segment,
    /// `t ↦ (t, 1/2 + sin(2πt)/4, 1/2 + cos(2πt)/4, 1/2, …)`.
    Curve,
    /// `(u, v) ↦ (u, v, 1/2, …)`.
    Square,
    /// `(u, v) ↦ (u, v, 1/2 + sin(π(u+v))/5, 1/2, …)`.
    Surface,
    /// The whole cube.
    Cube,
}

pub const SUPPORT_NAMES: [&str; 5] = ["segment", "curve", "square", "surface", "cube"];

impl FromStr for SupportKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "segment" => Ok(SupportKind::Segment),
            "curve" => Ok(SupportKind::Curve),
            "square" => Ok(SupportKind::Square),
            "surface" => Ok(SupportKind::Surface),
            "cube" => Ok(SupportKind::Cube),
            other => Err(Error::Parameter(format!(
                "unknown support {other:?}; expected one of {SUPPORT_NAMES:?}"
            ))),
        }
    }
}

impl SupportKind {
    /// Intrinsic dimension of the set embedded in `[0,1]^dim`.
    pub fn intrinsic_dim(self, dim: usize) -> usize {
        match self {
            SupportKind::Segment | SupportKind::Curve => 1,
            SupportKind::Square | SupportKind::Surface => 2,
            SupportKind::Cube => dim,
        }
    }

    fn min_dim(self) -> usize {
        match self {
            SupportKind::Segment | SupportKind::Cube => 1,
            SupportKind::Square => 2,
            SupportKind::Curve | SupportKind::Surface => 3,
        }
    }

    /// Image of a parameter point `u ∈ [0,1]^{intrinsic}`.
    pub fn embed(self, u: &[f64], dim: usize) -> Vec<f64> {
        let mut x = vec![0.5; dim];
        match self {
            SupportKind::Segment => x[0] = u[0],
            SupportKind::Curve => {
                x[0] = u[0];
                x[1] = 0.5 + 0.25 * (2.0 * PI * u[0]).sin();
                x[2] = 0.5 + 0.25 * (2.0 * PI * u[0]).cos();
            }
            SupportKind::Square => {
                x[0] = u[0];
                x[1] = u[1];
            }
            SupportKind::Surface => {
                x[0] = u[0];
                x[1] = u[1];
                x[2] = 0.5 + 0.2 * (PI * (u[0] + u[1])).sin();
            }
            SupportKind::Cube => x.copy_from_slice(u),
        }
        x
    }

    /// `n` points from uniformly drawn parameters.
    pub fn sample(self, dim: usize, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
        if dim < self.min_dim() {
            return Err(Error::Parameter(format!(
                "support {self:?} needs ambient dimension >= {}, got {dim}",
                self.min_dim()
            )));
        }
        let k = self.intrinsic_dim(dim);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok((0..n)
            .map(|_| {
                let u: Vec<f64> = (0..k).map(|_| rng.gen::<f64>()).collect();
                self.embed(&u, dim)
            })
            .collect())
    }
}
