//! Elementary ReLU gadgets: squaring, trapezoid bumps and products.

use crate::error::{Error, Result};
use crate::relu_net::{compose, identity_block, stack_parallel, Activation, Layer, ReluNetwork};

/// Largest refinement level accepted by [`build_sq`].
pub const MAX_SQ_LEVEL: usize = 30;

/// Piecewise-linear interpolant of `x²` on the dyadic grid `k/2^m`, valid on
/// `[0, 1]`.
///
/// Built from the sawtooth iteration `sq_m(x) = x - Σ_{s≤m} g_s(x)/4^s`, where
/// `g` is the hat map `2 ReLU(y) - 4 ReLU(y - 1/2)` and `g_s` its s-fold
/// composition. Each hidden layer carries the current hat value as the pair
/// `(ReLU(g), ReLU(g - 1/2))` plus the running sum.
pub fn build_sq(m: usize) -> Result<ReluNetwork> {
    if !(1..=MAX_SQ_LEVEL).contains(&m) {
        return Err(Error::Parameter(format!(
            "sq level m must be in 1..={MAX_SQ_LEVEL}, got {m}"
        )));
    }
    use Activation::{Identity, Relu};
    let mut layers = Vec::with_capacity(m + 1);
    layers.push(Layer::from_rows(
        1,
        vec![vec![(0, 1.0)], vec![(0, 1.0)]],
        vec![0.0, -0.5],
        vec![Relu, Relu],
    )?);
    // Layer s (s >= 2) holds [a_s, b_s, acc_{s-1}]; acc_0 is the input itself,
    // which equals a_1 on [0, 1].
    for s in 2..=m {
        let scale = 0.25f64.powi(s as i32 - 1);
        let hat = vec![(0, 2.0), (1, -4.0)];
        let acc = if s == 2 {
            vec![(0, 1.0 - 2.0 * scale), (1, 4.0 * scale)]
        } else {
            vec![(2, 1.0), (0, -2.0 * scale), (1, 4.0 * scale)]
        };
        let in_dim = if s == 2 { 2 } else { 3 };
        layers.push(Layer::from_rows(
            in_dim,
            vec![hat.clone(), hat, acc],
            vec![0.0, -0.5, 0.0],
            vec![Relu; 3],
        )?);
    }
    let scale = 0.25f64.powi(m as i32);
    let out = if m == 1 {
        Layer::from_rows(
            2,
            vec![vec![(0, 1.0 - 2.0 * scale), (1, 4.0 * scale)]],
            vec![0.0],
            vec![Identity],
        )?
    } else {
        Layer::from_rows(
            3,
            vec![vec![(2, 1.0), (0, -2.0 * scale), (1, 4.0 * scale)]],
            vec![0.0],
            vec![Identity],
        )?
    };
    layers.push(out);
    ReluNetwork::new(layers)
}

/// Trapezoid bump: 1 on `[-b, b]`, 0 outside `[-a, a]`, linear in between.
/// Depth two, width four.
pub fn build_xi(a: f64, b: f64) -> Result<ReluNetwork> {
    if !(b > 0.0 && a > b && a.is_finite()) {
        return Err(Error::Parameter(format!("bump needs 0 < b < a, got a={a}, b={b}")));
    }
    let w = 1.0 / (a - b);
    let hidden = Layer::from_rows(
        1,
        vec![vec![(0, w)]; 4],
        vec![a * w, b * w, -b * w, -a * w],
        vec![Activation::Relu; 4],
    )?;
    let out = Layer::from_rows(
        4,
        vec![vec![(0, 1.0), (1, -1.0), (2, -1.0), (3, 1.0)]],
        vec![0.0],
        vec![Activation::Identity],
    )?;
    ReluNetwork::new(vec![hidden, out])
}

/// Closed form of the bump realised by [`build_xi`]; exactly 0 for `|u| ≥ a`
/// and exactly 1 for `|u| ≤ b`.
pub fn xi_value(u: f64, a: f64, b: f64) -> f64 {
    let r = u.abs();
    if r >= a {
        0.0
    } else if r <= b {
        1.0
    } else {
        (a - r) / (a - b)
    }
}

/// `prod²_m(x, y) = M² (sq_m(|x+y|/2M) - sq_m(|x-y|/2M))`, an approximate
/// product on `[-M, M]²` with error at most `M²/2^{2m+1}`. Returns exactly 0
/// whenever either argument is 0, and flipping the sign of one argument flips
/// the sign of the output bit for bit.
pub fn build_prod2(m: usize, bound: f64) -> Result<ReluNetwork> {
    if !(bound > 0.0 && bound.is_finite()) {
        return Err(Error::Parameter(format!(
            "product range M must be positive, got {bound}"
        )));
    }
    let sq = build_sq(m)?;
    let c = 1.0 / (2.0 * bound);
    let abs_hidden = Layer::from_rows(
        2,
        vec![
            vec![(0, 1.0), (1, 1.0)],
            vec![(0, -1.0), (1, -1.0)],
            vec![(0, 1.0), (1, -1.0)],
            vec![(0, -1.0), (1, 1.0)],
        ],
        vec![0.0; 4],
        vec![Activation::Relu; 4],
    )?;
    let abs_out = Layer::from_rows(
        4,
        vec![vec![(0, c), (1, c)], vec![(2, c), (3, c)]],
        vec![0.0; 2],
        vec![Activation::Identity; 2],
    )?;
    let halves = ReluNetwork::new(vec![abs_hidden, abs_out])?;
    let pair = stack_parallel(&[sq.lift_inputs(2, &[0])?, sq.lift_inputs(2, &[1])?])?;
    let m2 = bound * bound;
    let diff = ReluNetwork::affine(&[vec![m2, -m2]], vec![0.0])?;
    compose(&diff, &compose(&pair, &halves)?)
}

/// Approximate product of `d` numbers in `[-1, 1]` via the recursion
/// `prod^(k) = prod²(prod^(k-1)(x_1..x_{k-1}), x_k)` with range `M = d - 1`;
/// error at most `d³/2^{2m+2}`. Unused inputs ride along in identity blocks.
pub fn build_prodd(m: usize, d: usize) -> Result<ReluNetwork> {
    if m < 3 {
        return Err(Error::Parameter(format!("product level m must be >= 3, got {m}")));
    }
    if d < 2 {
        return Err(Error::Parameter(format!("product needs d >= 2 inputs, got {d}")));
    }
    let p2 = build_prod2(m, (d - 1) as f64)?;
    let mut net: Option<ReluNetwork> = None;
    let mut width = d;
    while width >= 2 {
        let level = if width == 2 {
            p2.clone()
        } else {
            let carry: Vec<usize> = (2..width).collect();
            stack_parallel(&[
                p2.lift_inputs(width, &[0, 1])?,
                identity_block(width - 2, p2.depth())?.lift_inputs(width, &carry)?,
            ])?
        };
        net = Some(match net {
            None => level,
            Some(inner) => compose(&level, &inner)?,
        });
        width -= 1;
    }
    Ok(net.expect("d >= 2 gives at least one level"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn eval1(net: &ReluNetwork, x: f64) -> f64 {
        net.evaluate(&[x]).unwrap()[0]
    }

    #[test]
    fn sq_dyadic_points() {
        let sq3 = build_sq(3).unwrap();
        assert_eq!(eval1(&sq3, 5.0 / 8.0), 25.0 / 64.0);
        assert_eq!(eval1(&sq3, 3.0 / 8.0), 9.0 / 64.0);
        assert_eq!(eval1(&sq3, 0.0), 0.0);
        assert_eq!(eval1(&sq3, 1.0), 1.0);
        for m in 1..=10 {
            let net = build_sq(m).unwrap();
            let n = 1usize << m;
            for k in 0..=n {
                let x = k as f64 / n as f64;
                assert_eq!(eval1(&net, x), x * x, "m={m} k={k}");
            }
        }
    }

    #[test]
    fn sq_dense_sweep_m4() {
        let net = build_sq(4).unwrap();
        let xs: Vec<Vec<f64>> = (0..=100_000).map(|i| vec![i as f64 / 1e5]).collect();
        let ys = net.evaluate_batch(&xs).unwrap();
        let err = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| (y[0] - x[0] * x[0]).abs())
            .fold(0.0, f64::max);
        let bound = 2f64.powi(-10);
        assert!(err <= bound + 1e-9, "{err}");
        assert!(err >= 0.9 * bound, "{err}");
    }

    #[test]
    fn sq_range_checks_and_linear_size() {
        assert!(build_sq(0).is_err());
        assert!(build_sq(31).is_err());
        for m in 2..=10 {
            let s = build_sq(m).unwrap().count_stats();
            assert_eq!(s.depth, m + 1);
            assert!(s.weights <= 8 * m, "m={m} weights={}", s.weights);
        }
    }

    #[test]
    fn xi_shape() {
        let xi = build_xi(2.0, 1.0).unwrap();
        assert_eq!(eval1(&xi, 0.0), 1.0);
        assert_eq!(eval1(&xi, 2.0), 0.0);
        assert_eq!(eval1(&xi, -2.0), 0.0);
        assert_eq!(eval1(&xi, 1.5), 0.5);
        let s = xi.count_stats();
        assert_eq!(s.depth, 2);
        assert!(s.weights <= 12);
        assert!(build_xi(1.0, 1.0).is_err());
        assert!(build_xi(1.0, 2.0).is_err());
        for k in 0..=80 {
            let u = -4.0 + 0.1 * k as f64;
            assert!((eval1(&xi, u) - xi_value(u, 2.0, 1.0)).abs() <= 1e-12);
        }
    }

    #[test]
    fn prod2_zero_and_bound() {
        for m in 1..6 {
            let p = build_prod2(m, 1.0).unwrap();
            assert_eq!(p.evaluate(&[0.0, 0.7]).unwrap()[0], 0.0);
            assert_eq!(p.evaluate(&[-0.3, 0.0]).unwrap()[0], 0.0);
        }
        let p5 = build_prod2(5, 1.0).unwrap();
        let v = p5.evaluate(&[0.6, 0.8]).unwrap()[0];
        assert!((v - 0.48).abs() <= 2f64.powi(-11));
    }

    #[test]
    fn prod2_grid_m3() {
        let p = build_prod2(3, 1.0).unwrap();
        let mut worst = 0.0f64;
        for i in 0..=200 {
            for j in 0..=200 {
                let (x, y) = (-1.0 + 0.01 * i as f64, -1.0 + 0.01 * j as f64);
                let v = p.evaluate(&[x, y]).unwrap()[0];
                worst = worst.max((v - x * y).abs());
            }
        }
        assert!(worst <= 1.0 / 128.0 + 1e-9, "{worst}");
    }

    #[test]
    fn prod2_sign_flip_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let p = build_prod2(6, 1.5).unwrap();
        for _ in 0..200 {
            let x = rng.gen_range(-1.5..1.5);
            let y = rng.gen_range(-1.5..1.5);
            let a = p.evaluate(&[x, y]).unwrap()[0];
            let b = p.evaluate(&[x, -y]).unwrap()[0];
            assert_eq!(b, -a);
        }
    }

    #[test]
    fn prodd_cases() {
        assert!(build_prodd(2, 3).is_err());
        assert!(build_prodd(3, 1).is_err());
        let p = build_prodd(5, 3).unwrap();
        let v = p.evaluate(&[1.0, 1.0, 1.0]).unwrap()[0];
        assert!((v - 1.0).abs() <= 27.0 / 4096.0);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..20 {
            let y: f64 = rng.gen_range(-1.0..1.0);
            let z: f64 = rng.gen_range(-1.0..1.0);
            assert_eq!(p.evaluate(&[0.0, y, z]).unwrap()[0], 0.0);
        }
        let d2 = build_prodd(4, 2).unwrap();
        let p2 = build_prod2(4, 1.0).unwrap();
        for _ in 0..100 {
            let x = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            assert_eq!(d2.evaluate(&x).unwrap(), p2.evaluate(&x).unwrap());
        }
    }

    #[test]
    fn prodd_size_is_linear() {
        for d in 2..=4 {
            for m in 3..=8 {
                let s = build_prodd(m, d).unwrap().count_stats();
                assert!(s.depth <= 3 * d * m, "d={d} m={m} depth={}", s.depth);
                assert!(s.weights <= 20 * d * m, "d={d} m={m} weights={}", s.weights);
            }
        }
    }
}
