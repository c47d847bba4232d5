//! Ground-truth generators `G̃: [0,1]^ℓ → [0,1]^d` with exact left inverses,
//! used as synthetic data with known intrinsic dimension.

use std::f64::consts::PI;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::discrepancy::LatentDistribution;
use crate::error::{Error, Result};

/// Largest amplitude accepted for the optional ambient perturbation; the
/// clean images stay inside `[0.1, 0.9]^d`, so this keeps data in the cube.
pub const MAX_NOISE: f64 = 0.2;

/// Exponent used by the radial-warp model.
pub const WARP_GAMMA: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    /// `x_j = 0.1 + 0.8 z_j` for `j < ℓ`, convex mixtures of `z` after that.
    AffineEmbed,
    /// Affine in the first `ℓ` outputs, `0.5 + 0.4 sin(2π w_j·z + φ_j)` after.
    SineRidge,
    /// One half-circle arc per latent coordinate (needs `d ≥ 2ℓ`).
    TorusLike,
    /// `ℓ∞`-radial power warp of the latent cube, then the affine embedding.
    RadialWarp,
}

pub const MODEL_NAMES: [&str; 4] = ["affine-embed", "sine-ridge", "torus-like", "radial-warp"];

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "affine-embed" => Ok(ModelKind::AffineEmbed),
            "sine-ridge" => Ok(ModelKind::SineRidge),
            "torus-like" => Ok(ModelKind::TorusLike),
            "radial-warp" => Ok(ModelKind::RadialWarp),
            other => Err(Error::Parameter(format!(
                "unknown model {other:?}; expected one of {MODEL_NAMES:?}"
            ))),
        }
    }
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::AffineEmbed => "affine-embed",
            ModelKind::SineRidge => "sine-ridge",
            ModelKind::TorusLike => "torus-like",
            ModelKind::RadialWarp => "radial-warp",
        }
    }
}

/// A generator, its inverse and the latent law.
///
/// Regularity tags: affine-embed, sine-ridge and torus-like are smooth with
/// Lipschitz inverses (`α_g = α_e = 1` as used by the rate formulas);
/// radial-warp is `1/2`-Hölder with a Lipschitz inverse. Lipschitz constants
/// of `G̃` in `ℓ2`: affine `0.8√(d)`, sine-ridge at most `0.8 + 0.8π√d`,
/// torus-like `0.4π`.
#[derive(Clone, Debug, Serialize)]
pub struct GroundTruthModel {
    pub kind: ModelKind,
    pub ell: usize,
    pub d: usize,
    pub nu: LatentDistribution,
    /// Amplitude of the optional bounded ambient perturbation (0 = off).
    pub noise: f64,
}

impl GroundTruthModel {
    pub fn new(kind: ModelKind, ell: usize, d: usize) -> Result<Self> {
        if ell == 0 || d < ell {
            return Err(Error::Parameter(format!("need 1 <= ell <= d, got ell={ell}, d={d}")));
        }
        if kind == ModelKind::TorusLike && d < 2 * ell {
            return Err(Error::Parameter(format!(
                "torus-like model needs d >= 2 ell, got ell={ell}, d={d}"
            )));
        }
        Ok(GroundTruthModel {
            kind,
            ell,
            d,
            nu: LatentDistribution::UniformCube,
            noise: 0.0,
        })
    }

    pub fn with_latent(mut self, nu: LatentDistribution) -> Self {
        self.nu = nu;
        self
    }

    pub fn with_noise(mut self, amplitude: f64) -> Result<Self> {
        if !(0.0..=MAX_NOISE).contains(&amplitude) {
            return Err(Error::Parameter(format!(
                "noise amplitude must lie in [0, {MAX_NOISE}], got {amplitude}"
            )));
        }
        self.noise = amplitude;
        Ok(self)
    }

    pub fn id(&self) -> String {
        format!("{}-l{}-d{}", self.kind.name(), self.ell, self.d)
    }

    /// Hölder exponent of `G̃`.
    pub fn alpha_g(&self) -> f64 {
        match self.kind {
            ModelKind::RadialWarp => WARP_GAMMA,
            _ => 1.0,
        }
    }

    /// Hölder exponent of `Ẽ`.
    pub fn alpha_e(&self) -> f64 {
        1.0
    }

    /// Mixing weights `w_{jk} ≥ 0`, `Σ_k w_{jk} = 1`, for output `j ≥ ℓ`.
    fn mix(&self, j: usize) -> Vec<f64> {
        let raw: Vec<f64> = (0..self.ell).map(|k| (((j + 1) * (k + 2)) % 5 + 1) as f64).collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|w| w / total).collect()
    }

    fn affine(&self, z: &[f64]) -> Vec<f64> {
        (0..self.d)
            .map(|j| {
                if j < self.ell {
                    0.1 + 0.8 * z[j]
                } else {
                    let w = self.mix(j);
                    0.1 + 0.8 * w.iter().zip(z).map(|(a, b)| a * b).sum::<f64>()
                }
            })
            .collect()
    }

    /// `G̃(z)`.
    pub fn generate(&self, z: &[f64]) -> Vec<f64> {
        match self.kind {
            ModelKind::AffineEmbed => self.affine(z),
            ModelKind::SineRidge => (0..self.d)
                .map(|j| {
                    if j < self.ell {
                        0.1 + 0.8 * z[j]
                    } else {
                        let w = self.mix(j);
                        let arg: f64 = w.iter().zip(z).map(|(a, b)| a * b).sum();
                        0.5 + 0.4 * (2.0 * PI * arg + 0.7 * j as f64).sin()
                    }
                })
                .collect(),
            ModelKind::TorusLike => (0..self.d)
                .map(|j| {
                    if j < 2 * self.ell {
                        let angle = PI * z[j / 2];
                        if j % 2 == 0 {
                            0.5 + 0.4 * angle.cos()
                        } else {
                            0.5 + 0.4 * angle.sin()
                        }
                    } else {
                        0.5
                    }
                })
                .collect(),
            ModelKind::RadialWarp => self.affine(&warp(z)),
        }
    }

    /// `Ẽ(x)`, a left inverse of [`Self::generate`] on its image.
    pub fn encode(&self, x: &[f64]) -> Vec<f64> {
        match self.kind {
            ModelKind::AffineEmbed | ModelKind::SineRidge => (0..self.ell).map(|j| (x[j] - 0.1) / 0.8).collect(),
            ModelKind::TorusLike => (0..self.ell)
                .map(|k| (x[2 * k + 1] - 0.5).atan2(x[2 * k] - 0.5) / PI)
                .collect(),
            ModelKind::RadialWarp => {
                let w: Vec<f64> = (0..self.ell).map(|j| (x[j] - 0.1) / 0.8).collect();
                unwarp(&w)
            }
        }
    }

    pub fn sample_latent(&self, n: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| self.nu.sample(self.ell, &mut rng)).collect()
    }

    /// `X_i = G̃(Z_i)` (plus the bounded perturbation when enabled) together
    /// with the latents that produced them.
    pub fn generate_with_latents(&self, n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let z = self.sample_latent(n, seed);
        let mut noise_rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
        let x = z
            .iter()
            .map(|zi| {
                let mut x = self.generate(zi);
                if self.noise > 0.0 {
                    for v in x.iter_mut() {
                        *v = (*v + self.noise * (noise_rng.gen::<f64>() - 0.5)).clamp(0.0, 1.0);
                    }
                }
                x
            })
            .collect();
        (x, z)
    }

    pub fn generate_dataset(&self, n: usize, seed: u64) -> Vec<Vec<f64>> {
        self.generate_with_latents(n, seed).0
    }
}

fn linf_radius(z: &[f64]) -> f64 {
    z.iter().map(|v| (v - 0.5).abs()).fold(0.0, f64::max)
}

/// `z ↦ 1/2 + (z - 1/2)(2r)^{γ-1}` with `r = ‖z - 1/2‖_∞`; maps the cube onto
/// itself and has radial profile `r ↦ 2^{γ-1} r^γ`.
fn warp(z: &[f64]) -> Vec<f64> {
    let r = linf_radius(z);
    if r == 0.0 {
        return z.to_vec();
    }
    let scale = (2.0 * r).powf(WARP_GAMMA - 1.0);
    z.iter().map(|v| 0.5 + (v - 0.5) * scale).collect()
}

fn unwarp(w: &[f64]) -> Vec<f64> {
    let rw = linf_radius(w);
    if rw == 0.0 {
        return w.to_vec();
    }
    let rz = 0.5 * (2.0 * rw).powf(1.0 / WARP_GAMMA);
    w.iter().map(|v| 0.5 + (v - 0.5) * rz / rw).collect()
}

/// Seeded shuffle split into `(train, test)` of sizes `round(n·fraction)` and
/// the rest.
pub fn split(points: &[Vec<f64>], train_fraction: f64, seed: u64) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Parameter(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let n = points.len();
    let n_train = (n as f64 * train_fraction).round() as usize;
    if n_train == 0 || n_train == n {
        return Err(Error::Parameter(format!(
            "split of {n} points at {train_fraction} leaves one side empty"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let train = order[..n_train].iter().map(|&i| points[i].clone()).collect();
    let test = order[n_train..].iter().map(|&i| points[i].clone()).collect();
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discrepancy::{wasserstein1, EmpiricalMeasure};
    use crate::intrinsic_dim::{default_eps_grid, minkowski_dim_estimate};
    use proptest::prelude::{prop_assert, proptest, ProptestConfig};

    fn all_models(ell: usize, d: usize) -> Vec<GroundTruthModel> {
        MODEL_NAMES
            .iter()
            .map(|n| GroundTruthModel::new(n.parse().unwrap(), ell, d).unwrap())
            .collect()
    }

    #[test]
    fn latent_sampling() {
        let m = GroundTruthModel::new(ModelKind::SineRidge, 2, 8).unwrap();
        assert_eq!(m.sample_latent(3, 42), m.sample_latent(3, 42));
        let z = m.sample_latent(100_000, 1);
        for k in 0..2 {
            let mean = z.iter().map(|v| v[k]).sum::<f64>() / z.len() as f64;
            assert!((0.49..=0.51).contains(&mean), "{mean}");
        }
        let g = m.clone().with_latent(LatentDistribution::TruncatedGaussian);
        assert!(g
            .sample_latent(5000, 2)
            .iter()
            .flatten()
            .all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn affine_segment() {
        let m = GroundTruthModel::new(ModelKind::AffineEmbed, 1, 3).unwrap();
        let a = m.generate(&[0.0]);
        let b = m.generate(&[1.0]);
        for x in m.generate_dataset(500, 3) {
            let t = (x[0] - a[0]) / (b[0] - a[0]);
            for j in 0..3 {
                assert!((a[j] + t * (b[j] - a[j]) - x[j]).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn round_trip_every_model() {
        for ell in [1, 2, 4] {
            for m in all_models(ell, 8) {
                let (x, z) = m.generate_with_latents(10_000, 5);
                for (xi, zi) in x.iter().zip(&z) {
                    assert!(xi.iter().all(|v| (0.0..=1.0).contains(v)));
                    let back = m.encode(xi);
                    for (a, b) in back.iter().zip(zi) {
                        assert!((a - b).abs() <= 1e-9, "{} {a} vs {b}", m.id());
                    }
                }
            }
        }
    }

    #[test]
    fn sine_ridge_dimension() {
        let m = GroundTruthModel::new(ModelKind::SineRidge, 2, 8).unwrap();
        let x = m.generate_dataset(100_000, 9);
        let est = minkowski_dim_estimate(&x, &default_eps_grid()).unwrap();
        assert!((1.6..=2.4).contains(&est.slope), "{}", est.slope);
    }

    #[test]
    fn dimension_fidelity_for_lipschitz_maps() {
        for kind in [ModelKind::AffineEmbed, ModelKind::SineRidge, ModelKind::TorusLike] {
            for ell in [1, 2] {
                let m = GroundTruthModel::new(kind, ell, 6).unwrap();
                let est = minkowski_dim_estimate(&m.generate_dataset(60_000, 4), &default_eps_grid()).unwrap();
                assert!((est.slope - ell as f64).abs() <= 0.4, "{} {}", m.id(), est.slope);
            }
        }
    }

    #[test]
    fn push_forward_separation() {
        let one = GroundTruthModel::new(ModelKind::SineRidge, 1, 4).unwrap();
        let three = GroundTruthModel::new(ModelKind::SineRidge, 3, 4).unwrap();
        let n = 1000;
        let a = EmpiricalMeasure::uniform(one.generate_dataset(n, 1)).unwrap();
        let b = EmpiricalMeasure::uniform(one.generate_dataset(n, 2)).unwrap();
        let c = EmpiricalMeasure::uniform(three.generate_dataset(n, 3)).unwrap();
        let same = wasserstein1(&a, &b).unwrap();
        let diff = wasserstein1(&a, &c).unwrap();
        assert!(diff >= 3.0 * same, "same={same} diff={diff}");
    }

    #[test]
    fn noise_is_bounded_and_optional() {
        let m = GroundTruthModel::new(ModelKind::SineRidge, 1, 3).unwrap();
        assert!(m.clone().with_noise(0.5).is_err());
        let noisy = m.clone().with_noise(0.1).unwrap();
        let clean = m.generate_dataset(200, 7);
        let dirty = noisy.generate_dataset(200, 7);
        for (a, b) in clean.iter().zip(&dirty) {
            for (u, v) in a.iter().zip(b) {
                assert!((u - v).abs() <= 0.05 + 1e-15);
            }
        }
        assert_ne!(clean, dirty);
    }

    #[test]
    fn construction_errors() {
        assert!(GroundTruthModel::new(ModelKind::AffineEmbed, 3, 2).is_err());
        assert!(GroundTruthModel::new(ModelKind::TorusLike, 3, 5).is_err());
        assert!("spiral".parse::<ModelKind>().is_err());
    }

    #[test]
    fn split_examples() {
        let pts: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64 / 10.0]).collect();
        let (train, test) = split(&pts, 0.8, 1).unwrap();
        assert_eq!((train.len(), test.len()), (8, 2));
        let mut all: Vec<f64> = train.iter().chain(&test).map(|p| p[0]).collect();
        all.sort_by(f64::total_cmp);
        assert_eq!(all, pts.iter().map(|p| p[0]).collect::<Vec<_>>());
        assert_eq!(split(&pts, 0.8, 1).unwrap(), (train, test));
        assert!(split(&pts, 0.99, 1).is_err());
        assert!(split(&pts, 0.0, 1).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn warp_inverts(a in 0.0f64..=1.0, b in 0.0f64..=1.0, c in 0.0f64..=1.0) {
            let z = vec![a, b, c];
            let w = warp(&z);
            prop_assert!(w.iter().all(|v| (0.0..=1.0).contains(v)));
            let back = unwarp(&w);
            for (x, y) in back.iter().zip(&z) {
                prop_assert!((x - y).abs() <= 1e-12);
            }
        }
    }
}
