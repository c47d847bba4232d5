//! Box-counting covering numbers and Minkowski-dimension estimates.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};

/// Default scales `2^-2, …, 2^-7`, largest first.
pub fn default_eps_grid() -> Vec<f64> {
    (2..=7).map(|k| 2f64.powi(-k)).collect()
}

/// Number of occupied cells of side `2ε` in the lattice anchored at the
/// origin (cell `⌊x/2ε⌋`, the last cell closed at 1).
pub fn covering_number(points: &[Vec<f64>], eps: f64) -> Result<usize> {
    if !(eps > 0.0 && eps <= 0.5) {
        return Err(Error::Parameter(format!("eps must lie in (0, 1/2], got {eps}")));
    }
    if points.is_empty() {
        return Err(Error::Parameter("covering number of an empty sample".into()));
    }
    let k = (1.0 / (2.0 * eps)).ceil() as i64;
    let mut cells: HashSet<Vec<i64>> = HashSet::new();
    for p in points {
        cells.insert(
            p.iter()
                .map(|&v| ((v / (2.0 * eps)).floor() as i64).clamp(0, k - 1))
                .collect(),
        );
    }
    Ok(cells.len())
}

#[derive(Clone, Debug, Serialize)]
pub struct CoveringCurve {
    /// `(ε, N(ε))` pairs in the order the scales were given.
    pub entries: Vec<(f64, usize)>,
}

impl CoveringCurve {
    pub fn compute(points: &[Vec<f64>], eps_grid: &[f64]) -> Result<Self> {
        let entries = eps_grid
            .iter()
            .map(|&e| Ok((e, covering_number(points, e)?)))
            .collect::<Result<_>>()?;
        Ok(CoveringCurve { entries })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DimensionEstimate {
    pub slope: f64,
    /// True when every count used in the fit is equal (the slope is then 0).
    pub flat: bool,
    pub curve: CoveringCurve,
}

/// Ordinary least-squares slope of `log N(ε)` against `log(1/ε)`, fitted over
/// the scales that remain after dropping the largest and smallest one.
pub fn minkowski_dim_estimate(points: &[Vec<f64>], eps_grid: &[f64]) -> Result<DimensionEstimate> {
    if eps_grid.len() < 4 {
        return Err(Error::Parameter(format!(
            "need at least 4 scales, got {}",
            eps_grid.len()
        )));
    }
    let (lo, hi) = eps_grid
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &e| (lo.min(e), hi.max(e)));
    if hi / lo < 4.0 {
        return Err(Error::Parameter("scales must span at least two octaves".into()));
    }
    let mut sorted = eps_grid.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let curve = CoveringCurve::compute(points, &sorted)?;
    let inner = &curve.entries[1..curve.entries.len() - 1];
    let flat = inner.iter().all(|&(_, c)| c == inner[0].1);
    let slope = if flat {
        0.0
    } else {
        let xs: Vec<f64> = inner.iter().map(|&(e, _)| (1.0 / e).ln()).collect();
        let ys: Vec<f64> = inner.iter().map(|&(_, c)| (c as f64).ln()).collect();
        ols_slope(&xs, &ys)
    };
    Ok(DimensionEstimate { slope, flat, curve })
}

pub(crate) fn ols_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[derive(Clone, Debug, Serialize)]
pub struct HolderImageCheck {
    pub dim_in: f64,
    pub dim_out: f64,
    /// `dim_in / (γ ∧ 1)`.
    pub bound: f64,
    /// `dim_out ≤ bound + 0.3`.
    pub holds: bool,
}

/// Slack allowed between the measured image dimension and its bound.
pub const IMAGE_DIM_SLACK: f64 = 0.3;

/// Samples `n_points` uniform latents in `[0,1]^latent_dim`, maps them and
/// compares the two box-counting dimensions with `dim_in/(γ ∧ 1)`.
pub fn holder_image_dim_check(
    map: &dyn Fn(&[f64]) -> Vec<f64>,
    gamma: f64,
    latent_dim: usize,
    ambient_dim: usize,
    n_points: usize,
    seed: u64,
) -> Result<HolderImageCheck> {
    if !(gamma > 0.0) {
        return Err(Error::Parameter(format!("gamma must be positive, got {gamma}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let latents: Vec<Vec<f64>> = (0..n_points)
        .map(|_| (0..latent_dim).map(|_| rng.gen::<f64>()).collect())
        .collect();
    let mut images = Vec::with_capacity(n_points);
    for z in &latents {
        let x = map(z);
        if x.len() != ambient_dim {
            return Err(Error::InputShape {
                expected: ambient_dim,
                got: x.len(),
            });
        }
        if x.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Domain(format!("map output {x:?} outside [0,1]^{ambient_dim}")));
        }
        images.push(x);
    }
    let grid = default_eps_grid();
    let dim_in = minkowski_dim_estimate(&latents, &grid)?.slope;
    let dim_out = minkowski_dim_estimate(&images, &grid)?.slope;
    let bound = dim_in / gamma.min(1.0);
    Ok(HolderImageCheck {
        dim_in,
        dim_out,
        bound,
        holds: dim_out <= bound + IMAGE_DIM_SLACK,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{prop_assert, proptest};

    fn uniform(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| (0..d).map(|_| rng.gen()).collect()).collect()
    }

    #[test]
    fn covering_examples() {
        for eps in [0.5, 0.1, 0.01] {
            assert_eq!(covering_number(&[vec![0.3, 0.3]], eps).unwrap(), 1);
        }
        let seg: Vec<Vec<f64>> = (0..=100).map(|i| vec![i as f64 / 100.0, 0.0]).collect();
        assert_eq!(covering_number(&seg, 0.125).unwrap(), 4);
        let grid: Vec<Vec<f64>> = (0..=40)
            .flat_map(|i| (0..=40).map(move |j| vec![i as f64 / 40.0, j as f64 / 40.0]))
            .collect();
        assert_eq!(covering_number(&grid, 0.125).unwrap(), 16);
        assert!(covering_number(&[], 0.1).is_err());
        assert!(covering_number(&seg, 0.0).is_err());
    }

    #[test]
    fn dimension_of_segment_and_square() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let seg: Vec<Vec<f64>> = (0..20_000)
            .map(|_| {
                let t: f64 = rng.gen();
                vec![t, 0.2 + 0.5 * t, 0.7]
            })
            .collect();
        let d1 = minkowski_dim_estimate(&seg, &default_eps_grid()).unwrap();
        assert!((0.8..=1.2).contains(&d1.slope), "{}", d1.slope);
        let sq: Vec<Vec<f64>> = uniform(50_000, 2, 4)
            .into_iter()
            .map(|u| vec![u[0], u[1], 0.5, 0.5, 0.1])
            .collect();
        let d2 = minkowski_dim_estimate(&sq, &default_eps_grid()).unwrap();
        assert!((1.7..=2.3).contains(&d2.slope), "{}", d2.slope);
        let single = minkowski_dim_estimate(&[vec![0.4; 3]], &default_eps_grid()).unwrap();
        assert_eq!(single.slope, 0.0);
        assert!(single.flat);
    }

    #[test]
    fn scale_grid_validation() {
        let p = vec![vec![0.5]];
        assert!(minkowski_dim_estimate(&p, &[0.25, 0.125, 0.0625]).is_err());
        assert!(minkowski_dim_estimate(&p, &[0.25, 0.24, 0.23, 0.22]).is_err());
    }

    #[test]
    fn holder_images() {
        let embed = |z: &[f64]| vec![z[0], 0.5 + 0.3 * z[0], 0.5, 1.0 - z[0]];
        let c = holder_image_dim_check(&embed, 1.0, 1, 4, 20_000, 5).unwrap();
        assert!(c.holds && (c.dim_out - 1.0).abs() < 0.3, "{c:?}");
        let ident = |z: &[f64]| z.to_vec();
        let c = holder_image_dim_check(&ident, 1.0, 2, 2, 20_000, 6).unwrap();
        assert_eq!(c.dim_in, c.dim_out);
        let root = |z: &[f64]| vec![z[0].sqrt(), 0.0, 0.0];
        let c = holder_image_dim_check(&root, 0.5, 1, 3, 20_000, 7).unwrap();
        assert!((c.bound - 2.0 * c.dim_in).abs() < 1e-12);
        assert!(c.holds);
        let escape = |z: &[f64]| vec![z[0] + 2.0];
        assert!(matches!(
            holder_image_dim_check(&escape, 1.0, 1, 1, 10, 0),
            Err(Error::Domain(_))
        ));
    }

    proptest! {
        #[test]
        fn covering_monotone_in_eps(seed in 0u64..1000, n in 1usize..200, a in 1i32..8, gap in 0i32..4) {
            // Lattices at unrelated scales are not nested, so monotonicity is
            // checked along dyadic refinements.
            let pts = uniform(n, 2, seed);
            let large = 2f64.powi(-a);
            let small = large / 2f64.powi(gap);
            prop_assert!(covering_number(&pts, small).unwrap() >= covering_number(&pts, large).unwrap());
        }

        #[test]
        fn covering_monotone_in_subsets(seed in 0u64..1000, n in 2usize..200, eps in 0.01f64..0.5) {
            let pts = uniform(n, 3, seed);
            let sub = &pts[..n / 2];
            prop_assert!(covering_number(sub, eps).unwrap() <= covering_number(&pts, eps).unwrap());
            let k = (1.0 / (2.0 * eps)).ceil() as usize;
            prop_assert!(covering_number(&pts, eps).unwrap() <= k.pow(3));
        }
    }
}
