//! The Hölder-function approximator: a partition of unity of trapezoid bumps
//! times local Taylor polynomials, every product realised by `prod^(d)_m`.

use std::collections::HashMap;

use serde::Serialize;

use super::gadgets::{build_prodd, build_xi, MAX_SQ_LEVEL};
use super::grid::{build_grid_cover, bump_radii, GridCover};
use super::targets::TargetFunction;
use super::taylor::{multi_factorial, taylor_piece, MAX_TAYLOR_ORDER};
use crate::error::{Error, Result};
use crate::relu_net::{compose, identity_block, linear_combine, stack_parallel, ReluNetwork};

/// Smallest product level used, the minimum accepted by [`build_prodd`].
const MIN_LEVEL: usize = 3;

/// Size and parameter summary of one assembled approximator.
#[derive(Clone, Debug, Serialize)]
pub struct ApproxReport {
    pub beta: f64,
    pub eta: f64,
    pub taylor_order: usize,
    pub eps: f64,
    pub grid_k: usize,
    pub level_m: usize,
    pub holder_const: f64,
    pub active_boxes: usize,
    pub extended_boxes: usize,
    pub pieces: usize,
    pub depth: usize,
    pub weights: usize,
    /// Per-piece product error `(d+k)³/2^{2m+2}`.
    pub product_error_bound: f64,
}

#[derive(Clone, Debug)]
pub struct HolderApproximation {
    pub network: ReluNetwork,
    pub cover: GridCover,
    pub report: ApproxReport,
}

/// Taylor order used for smoothness `β`: all `|s| ≤ ⌈β⌉ - 1`.
pub fn taylor_order(beta: f64) -> usize {
    (beta.ceil() as usize).saturating_sub(1)
}

/// Grid scale `ε = (η / 2^{d+k+2})^{1/β}`, capped at 1/2.
pub fn grid_eps(dim: usize, order: usize, beta: f64, eta: f64) -> f64 {
    (eta / 2f64.powi((dim + order + 2) as i32)).powf(1.0 / beta).min(0.5)
}

/// Product level `m = ⌈log₂((d+k)³ C / η)⌉ + d - 1`, at least 3.
pub fn product_level(dim: usize, order: usize, holder_const: f64, eta: f64) -> usize {
    let arity = (dim + order) as f64;
    let raw = (arity.powi(3) * holder_const / eta).log2().ceil() + dim as f64 - 1.0;
    if raw < MIN_LEVEL as f64 {
        MIN_LEVEL
    } else {
        raw as usize
    }
}

/// `prod_m` of the given arity; arity 1 is the identity.
fn product_net(cache: &mut HashMap<usize, ReluNetwork>, m: usize, arity: usize) -> Result<ReluNetwork> {
    if let Some(net) = cache.get(&arity) {
        return Ok(net.clone());
    }
    let net = if arity == 1 {
        identity_block(1, 1)?
    } else {
        build_prodd(m, arity)?
    };
    cache.insert(arity, net.clone());
    Ok(net)
}

/// Builds `f̂ = Σ_{i∈ℐ†} Σ_{|s|≤k} a_{i,s} prod_m(ξ(x_1-θ_1), …, ξ(x_d-θ_d), (x-θ)^s)`
/// for the grid determined by the support sample.
pub fn build_holder_approximator(
    f: &dyn TargetFunction,
    support: &[Vec<f64>],
    beta: f64,
    eta: f64,
) -> Result<HolderApproximation> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::Parameter(format!("eta must lie in (0, 1), got {eta}")));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::Parameter(format!("beta must be positive, got {beta}")));
    }
    let order = taylor_order(beta);
    if order > MAX_TAYLOR_ORDER {
        return Err(Error::Parameter(format!(
            "beta={beta} needs Taylor order {order}, above the cap {MAX_TAYLOR_ORDER}"
        )));
    }
    let dim = f.dim();
    if let Some(bad) = support.iter().find(|x| x.len() != dim) {
        return Err(Error::InputShape {
            expected: dim,
            got: bad.len(),
        });
    }
    let eps = grid_eps(dim, order, beta, eta);
    let cover = build_grid_cover(support, eps)?;

    let mut pieces = Vec::with_capacity(cover.extended().len());
    let mut holder_const = 0.0f64;
    for idx in cover.extended() {
        let piece = taylor_piece(f, &cover.center(idx), order)?;
        for (s, a) in &piece.terms {
            holder_const = holder_const.max(a.abs() * multi_factorial(s));
        }
        pieces.push(piece);
    }
    let holder_const = (2.0 * holder_const).max(f64::MIN_POSITIVE);
    let m = product_level(dim, order, holder_const, eta);
    if m > MAX_SQ_LEVEL {
        return Err(Error::Resource(format!(
            "eta={eta} requires product level m={m}, above the cap {MAX_SQ_LEVEL}"
        )));
    }

    let (a, b) = bump_radii(eps);
    let xi = build_xi(a, b)?;
    let shift = identity_block(1, xi.depth())?;
    let mut prod_cache = HashMap::new();
    let mut nets = Vec::new();
    let mut coeffs = Vec::new();
    for piece in &pieces {
        let bumps: Vec<ReluNetwork> = (0..dim)
            .map(|j| xi.translate_inputs(&[piece.center[j]])?.lift_inputs(dim, &[j]))
            .collect::<Result<_>>()?;
        for (s, coeff) in &piece.terms {
            if *coeff == 0.0 {
                continue;
            }
            let mut factors = bumps.clone();
            for (j, &power) in s.iter().enumerate() {
                let shifted = shift.translate_inputs(&[piece.center[j]])?.lift_inputs(dim, &[j])?;
                factors.extend(std::iter::repeat(shifted).take(power));
            }
            let prod = product_net(&mut prod_cache, m, factors.len())?;
            nets.push(compose(&prod, &stack_parallel(&factors)?)?);
            coeffs.push(*coeff);
        }
    }
    let network = if nets.is_empty() {
        // f vanishes identically on the grid centers.
        ReluNetwork::affine(&[vec![0.0; dim]], vec![0.0])?
    } else {
        linear_combine(&nets, &coeffs)?
    };
    let stats = network.count_stats();
    let report = ApproxReport {
        beta,
        eta,
        taylor_order: order,
        eps,
        grid_k: cover.k,
        level_m: m,
        holder_const,
        active_boxes: cover.active().len(),
        extended_boxes: cover.extended().len(),
        pieces: nets.len(),
        depth: stats.depth,
        weights: stats.weights,
        product_error_bound: ((dim + order) as f64).powi(3) / 2f64.powi(2 * m as i32 + 2),
    };
    Ok(HolderApproximation { network, cover, report })
}

/// `max_x |net(x) - f(x)|` over the given points (0 for an empty list).
pub fn sup_error(net: &ReluNetwork, f: &dyn TargetFunction, points: &[Vec<f64>]) -> Result<f64> {
    let outputs = net.evaluate_batch(points)?;
    Ok(points
        .iter()
        .zip(&outputs)
        .map(|(x, y)| (y[0] - f.value(x)).abs())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::super::targets::{FnTarget, RegistryFunction};
    use super::*;

    fn segment(n: usize) -> Vec<Vec<f64>> {
        (0..n).map(|i| vec![i as f64 / (n - 1) as f64, 0.5]).collect()
    }

    #[test]
    fn parameter_formulas() {
        assert_eq!(taylor_order(1.0), 0);
        assert_eq!(taylor_order(1.5), 1);
        assert_eq!(taylor_order(2.0), 1);
        assert_eq!(taylor_order(3.0), 2);
        let eps = grid_eps(2, 1, 2.0, 0.05);
        assert!((eps - (0.05f64 / 32.0).sqrt()).abs() < 1e-15);
        assert_eq!(grid_eps(1, 0, 1.0, 0.9), 0.1125);
        // (3³·2/0.01) = 5400, log2 → 12.4 → 13, plus d-1 = 1.
        assert_eq!(product_level(2, 1, 2.0, 0.01), 14);
        assert_eq!(product_level(1, 0, 1e-9, 0.5), 3);
    }

    #[test]
    fn constant_function() {
        let f = RegistryFunction::by_name("const", 2).unwrap();
        let sample = segment(400);
        let approx = build_holder_approximator(&f, &sample, 1.0, 0.01).unwrap();
        assert!(sup_error(&approx.network, &f, &sample).unwrap() <= 0.01);
        assert_eq!(approx.report.pieces, approx.report.extended_boxes);
    }

    #[test]
    fn square_on_segment() {
        let f = FnTarget::new(2, |x: &[f64]| x[0] * x[0]);
        let build = segment(500);
        let approx = build_holder_approximator(&f, &build, 2.0, 0.05).unwrap();
        let dense = segment(10_000);
        let err = sup_error(&approx.network, &f, &dense).unwrap();
        assert!(err <= 0.05, "sup error {err}");
        let s = approx.network.count_stats();
        assert_eq!((s.depth, s.weights), (approx.report.depth, approx.report.weights));
    }

    #[test]
    fn eta_too_small_for_level_cap() {
        let f = RegistryFunction::by_name("sine", 1).unwrap();
        let sample = vec![vec![0.5]];
        match build_holder_approximator(&f, &sample, 40.0, 1e-17) {
            Err(Error::Parameter(_)) => {}
            other => panic!("unexpected {other:?}"),
        }
        match build_holder_approximator(&f, &sample, 1.0, 1e-15) {
            Err(Error::Resource(msg)) => assert!(msg.contains("m=")),
            other => panic!("unexpected {:?}", other.map(|a| a.report)),
        }
    }

    #[test]
    fn sup_error_basics() {
        let net = ReluNetwork::affine(&[vec![0.5, -1.0]], vec![0.25]).unwrap();
        let copy = net.clone();
        let f = FnTarget::new(2, move |x: &[f64]| copy.evaluate(x).unwrap()[0]);
        assert_eq!(sup_error(&net, &f, &segment(50)).unwrap(), 0.0);
        let g = FnTarget::new(2, |x: &[f64]| x[0]);
        let few = sup_error(&net, &g, &segment(5)).unwrap();
        let more = sup_error(&net, &g, &segment(9)).unwrap();
        assert!(more >= few);
    }
}
