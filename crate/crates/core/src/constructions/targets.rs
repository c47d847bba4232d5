//! Target functions for the approximator, with optional analytic partials.

use crate::error::{Error, Result};

/// A scalar function on `R^dim`. Implementors may expose exact partial
/// derivatives; when [`TargetFunction::partial`] returns `None` callers fall
/// back to finite differences.
pub trait TargetFunction: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    /// `∂^s f(x)` for the multi-index `s`, if known in closed form.
    fn partial(&self, _x: &[f64], _s: &[usize]) -> Option<f64> {
        None
    }
}

/// Wraps a closure as a target function without derivative information.
pub struct FnTarget<F> {
    dim: usize,
    f: F,
}

impl<F> FnTarget<F>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        FnTarget { dim, f }
    }
}

impl<F> TargetFunction for FnTarget<F>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

/// The built-in functions selectable by name from the command line.
#[derive(Clone, Debug, PartialEq)]
pub enum RegistryFunction {
    /// `f ≡ value`.
    Constant { dim: usize, value: f64 },
    /// `f(x) = x_1²`.
    Square { dim: usize },
    /// `f(x) = 0.5 + 0.25 sin(w·x)` with `w = (2, 1, …, 1)`.
    Sine { dim: usize },
    /// `f(x) = exp(-‖x - c‖² / (2σ²))` with `c = (0.5, …)` and `σ = 0.5`.
    Radial { dim: usize },
}

pub const REGISTRY_NAMES: [&str; 4] = ["const", "square", "sine", "radial"];

const RADIAL_SIGMA: f64 = 0.5;

impl RegistryFunction {
    pub fn by_name(name: &str, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Parameter("function dimension must be positive".into()));
        }
        match name {
            "const" => Ok(RegistryFunction::Constant { dim, value: 0.3 }),
            "square" => Ok(RegistryFunction::Square { dim }),
            "sine" => Ok(RegistryFunction::Sine { dim }),
            "radial" => Ok(RegistryFunction::Radial { dim }),
            other => Err(Error::Parameter(format!(
                "unknown function {other:?}; expected one of {REGISTRY_NAMES:?}"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            RegistryFunction::Constant { .. } => "const",
            RegistryFunction::Square { .. } => "square",
            RegistryFunction::Sine { .. } => "sine",
            RegistryFunction::Radial { .. } => "radial",
        }
    }

    fn sine_weight(j: usize) -> f64 {
        if j == 0 {
            2.0
        } else {
            1.0
        }
    }
}

/// Probabilists' Hermite polynomial `He_n(t)`.
fn hermite(n: usize, t: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, t);
    if n == 0 {
        return prev;
    }
    for k in 1..n {
        let next = t * cur - k as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

impl TargetFunction for RegistryFunction {
    fn dim(&self) -> usize {
        match self {
            RegistryFunction::Constant { dim, .. }
            | RegistryFunction::Square { dim }
            | RegistryFunction::Sine { dim }
            | RegistryFunction::Radial { dim } => *dim,
        }
    }

    fn value(&self, x: &[f64]) -> f64 {
        match self {
            RegistryFunction::Constant { value, .. } => *value,
            RegistryFunction::Square { .. } => x[0] * x[0],
            RegistryFunction::Sine { .. } => {
                let arg: f64 = x.iter().enumerate().map(|(j, v)| Self::sine_weight(j) * v).sum();
                0.5 + 0.25 * arg.sin()
            }
            RegistryFunction::Radial { .. } => {
                let r2: f64 = x.iter().map(|v| (v - 0.5) * (v - 0.5)).sum();
                (-r2 / (2.0 * RADIAL_SIGMA * RADIAL_SIGMA)).exp()
            }
        }
    }

    fn partial(&self, x: &[f64], s: &[usize]) -> Option<f64> {
        let order: usize = s.iter().sum();
        Some(match self {
            RegistryFunction::Constant { value, .. } => {
                if order == 0 {
                    *value
                } else {
                    0.0
                }
            }
            RegistryFunction::Square { .. } => {
                if s.iter().skip(1).any(|&k| k > 0) {
                    0.0
                } else {
                    match s[0] {
                        0 => x[0] * x[0],
                        1 => 2.0 * x[0],
                        2 => 2.0,
                        _ => 0.0,
                    }
                }
            }
            RegistryFunction::Sine { .. } => {
                if order == 0 {
                    return Some(self.value(x));
                }
                let arg: f64 = x.iter().enumerate().map(|(j, v)| Self::sine_weight(j) * v).sum();
                let scale: f64 = s
                    .iter()
                    .enumerate()
                    .map(|(j, &k)| Self::sine_weight(j).powi(k as i32))
                    .product();
                0.25 * scale * (arg + order as f64 * std::f64::consts::FRAC_PI_2).sin()
            }
            RegistryFunction::Radial { .. } => s
                .iter()
                .zip(x)
                .map(|(&k, &v)| {
                    let t = (v - 0.5) / RADIAL_SIGMA;
                    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                    sign * RADIAL_SIGMA.powi(-(k as i32)) * hermite(k, t) * (-0.5 * t * t).exp()
                })
                .product(),
        })
    }
}
