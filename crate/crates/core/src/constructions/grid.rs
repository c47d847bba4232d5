//! ε-grid cover of the unit cube and the bump partition of unity built on it.

use std::collections::BTreeSet;

use serde::Serialize;

use super::gadgets::xi_value;
use crate::error::{Error, Result};

/// Multi-index of a grid box. Box `i` (zero-based) is centred at
/// `θ^i = ε + 2 i ε` in every coordinate. The extended set may contain the
/// ghost indices `-1` and `K` just outside the cube.
pub type BoxIndex = Vec<i64>;

/// The boxes `B_∞(θ^i, ε)`, `i ∈ [K]^d`, `K = ⌈1/(2ε)⌉`, together with the
/// boxes hit by a support sample (`active`) and their neighbourhood
/// (`extended`).
#[derive(Clone, Debug, Serialize)]
pub struct GridCover {
    pub eps: f64,
    pub k: usize,
    pub dim: usize,
    active: BTreeSet<BoxIndex>,
    extended: BTreeSet<BoxIndex>,
}

/// Plateau shrink used for the bumps: `δ = ε/4`.
pub fn bump_delta(eps: f64) -> f64 {
    eps / 4.0
}

/// Outer and inner radii `(a, b) = (ε + δ, ε − δ)` of the per-axis bump.
/// Adjacent bumps (spacing 2ε) have coinciding ramps, so they sum to one.
pub fn bump_radii(eps: f64) -> (f64, f64) {
    let delta = bump_delta(eps);
    (eps + delta, eps - delta)
}

impl GridCover {
    pub fn center(&self, idx: &[i64]) -> Vec<f64> {
        idx.iter().map(|&i| self.eps + 2.0 * i as f64 * self.eps).collect()
    }

    /// Zero-based index of the box containing `x` (upper faces belong to the
    /// next box; the last box is closed).
    pub fn box_of(&self, x: &[f64]) -> BoxIndex {
        x.iter()
            .map(|&v| ((v / (2.0 * self.eps)).floor() as i64).clamp(0, self.k as i64 - 1))
            .collect()
    }

    pub fn active(&self) -> &BTreeSet<BoxIndex> {
        &self.active
    }

    pub fn extended(&self) -> &BTreeSet<BoxIndex> {
        &self.extended
    }

    /// `ζ(x - θ^i) = Π_j ξ(x_j - θ^i_j)`, evaluated in closed form.
    pub fn bump(&self, idx: &[i64], x: &[f64]) -> f64 {
        let (a, b) = bump_radii(self.eps);
        idx.iter()
            .zip(x)
            .map(|(&i, &v)| xi_value(v - (self.eps + 2.0 * i as f64 * self.eps), a, b))
            .product()
    }

    /// `Σ_{i ∈ extended} ζ(x - θ^i)`.
    pub fn partition_sum(&self, x: &[f64]) -> f64 {
        self.extended.iter().map(|idx| self.bump(idx, x)).sum()
    }
}

pub fn build_grid_cover(sample: &[Vec<f64>], eps: f64) -> Result<GridCover> {
    if !(eps > 0.0 && eps <= 0.5) {
        return Err(Error::Parameter(format!("grid eps must lie in (0, 1/2], got {eps}")));
    }
    let dim = sample
        .first()
        .ok_or_else(|| Error::Parameter("empty support sample".into()))?
        .len();
    if dim == 0 {
        return Err(Error::Parameter("support points must have positive dimension".into()));
    }
    let k = (1.0 / (2.0 * eps)).ceil() as usize;
    let mut cover = GridCover {
        eps,
        k,
        dim,
        active: BTreeSet::new(),
        extended: BTreeSet::new(),
    };
    for x in sample {
        if x.len() != dim {
            return Err(Error::InputShape {
                expected: dim,
                got: x.len(),
            });
        }
        if x.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Domain(format!("support point {x:?} outside [0,1]^{dim}")));
        }
        cover.active.insert(cover.box_of(x));
    }
    let (a, _) = bump_radii(eps);
    // Neighbours at ℓ∞ index distance ≤ 1 whose bump reaches into the cube.
    let reaches_cube = |i: i64| {
        let c = eps + 2.0 * i as f64 * eps;
        c - a < 1.0 && c + a > 0.0
    };
    let offsets = 3usize.pow(dim as u32);
    for idx in &cover.active {
        for code in 0..offsets {
            let mut rest = code;
            let mut nb = idx.clone();
            for slot in nb.iter_mut() {
                *slot += (rest % 3) as i64 - 1;
                rest /= 3;
            }
            if nb.iter().all(|&i| reaches_cube(i)) {
                cover.extended.insert(nb);
            }
        }
    }
    Ok(cover)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_point() {
        for d in 1..=3 {
            let cover = build_grid_cover(&[vec![0.5; d]], 0.125).unwrap();
            assert_eq!(cover.active().len(), 1);
            assert_eq!(cover.extended().len(), 3usize.pow(d as u32));
        }
    }

    #[test]
    fn horizontal_segment() {
        let sample: Vec<Vec<f64>> = (0..=100).map(|i| vec![i as f64 / 100.0, 0.5]).collect();
        let cover = build_grid_cover(&sample, 0.125).unwrap();
        assert_eq!(cover.k, 4);
        // Oracle: enumerate the 4×4 boxes and test each one for a sample point.
        let mut count = 0;
        for i in 0..4 {
            for j in 0..4 {
                let lo = [0.25 * i as f64, 0.25 * j as f64];
                let hit = sample.iter().any(|p| {
                    (0..2).all(|c| {
                        let top = if (if c == 0 { i } else { j }) == 3 {
                            1.0 + 1e-12
                        } else {
                            lo[c] + 0.25
                        };
                        p[c] >= lo[c] && p[c] < top
                    })
                });
                count += hit as usize;
            }
        }
        assert_eq!(count, 4);
        assert_eq!(cover.active().len(), 4);
    }

    #[test]
    fn neighbourhood_size_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let d = rng.gen_range(1..=3);
            let n = rng.gen_range(1..60);
            let eps = rng.gen_range(0.04..0.5);
            let sample: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..d).map(|_| rng.gen_range(0.0..=1.0)).collect())
                .collect();
            let cover = build_grid_cover(&sample, eps).unwrap();
            assert!(cover.active().is_subset(cover.extended()));
            assert!(cover.extended().len() <= 3usize.pow(d as u32) * cover.active().len());
            for x in &sample {
                assert!(cover.active().contains(&cover.box_of(x)));
            }
        }
    }

    #[test]
    fn boxes_are_disjoint() {
        // Every point of a fine lattice has exactly one owning box, and its
        // distance to that center is at most eps.
        let cover = build_grid_cover(&[vec![0.1, 0.1]], 0.1).unwrap();
        for i in 0..=50 {
            for j in 0..=50 {
                let x = [i as f64 / 50.0, j as f64 / 50.0];
                let b = cover.box_of(&x);
                let c = cover.center(&b);
                assert!((x[0] - c[0]).abs() <= cover.eps + 1e-12);
                assert!((x[1] - c[1]).abs() <= cover.eps + 1e-12);
            }
        }
    }

    #[test]
    fn partition_of_unity_and_support() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let sample: Vec<Vec<f64>> = (0..400).map(|_| vec![rng.gen(), rng.gen()]).collect();
        let cover = build_grid_cover(&sample, 0.07).unwrap();
        let (a, _) = bump_radii(cover.eps);
        for x in &sample {
            assert!((cover.partition_sum(x) - 1.0).abs() <= 1e-9);
            for idx in cover.extended() {
                let c = cover.center(idx);
                let dist = x.iter().zip(&c).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
                if dist >= a {
                    assert_eq!(cover.bump(idx, x), 0.0);
                }
            }
        }
    }

    #[test]
    fn invalid_inputs() {
        assert!(build_grid_cover(&[], 0.1).is_err());
        assert!(build_grid_cover(&[vec![0.5]], 0.0).is_err());
        assert!(build_grid_cover(&[vec![0.5]], 0.6).is_err());
        assert!(matches!(build_grid_cover(&[vec![1.5]], 0.1), Err(Error::Domain(_))));
    }
}
