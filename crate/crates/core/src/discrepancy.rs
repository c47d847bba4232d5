//! Exact empirical Wasserstein-1 distance and MMD² estimators with a
//! Gaussian kernel.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest point count accepted by [`wasserstein1`] per measure.
pub const MAX_TRANSPORT_POINTS: usize = 4096;

/// Resolution of the integer costs used by the min-cost-flow solver.
const COST_SCALE: f64 = 1e9;

/// Weighted point cloud inside the cube `[lo, hi]^dim`.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalMeasure {
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl EmpiricalMeasure {
    /// Uniform weights on points of `[0,1]^dim`.
    pub fn uniform(points: Vec<Vec<f64>>) -> Result<Self> {
        let n = points.len();
        Self::weighted_in(points, vec![1.0 / n.max(1) as f64; n], 0.0, 1.0)
    }

    pub fn weighted(points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        Self::weighted_in(points, weights, 0.0, 1.0)
    }

    /// Measure whose points are declared to lie in `[lo, hi]^dim`.
    pub fn weighted_in(points: Vec<Vec<f64>>, weights: Vec<f64>, lo: f64, hi: f64) -> Result<Self> {
        let first = points
            .first()
            .ok_or_else(|| Error::Parameter("empirical measure needs at least one point".into()))?;
        let dim = first.len();
        if dim == 0 {
            return Err(Error::Parameter("points must have positive dimension".into()));
        }
        if weights.len() != points.len() {
            return Err(Error::Parameter(format!(
                "{} weights for {} points",
                weights.len(),
                points.len()
            )));
        }
        for p in &points {
            if p.len() != dim {
                return Err(Error::InputShape {
                    expected: dim,
                    got: p.len(),
                });
            }
            if p.iter().any(|v| !(v.is_finite() && *v >= lo && *v <= hi)) {
                return Err(Error::Domain(format!("point {p:?} outside [{lo}, {hi}]^{dim}")));
            }
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Parameter("weights must be finite and nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Parameter(format!("weights sum to {total}, not 1")));
        }
        Ok(EmpiricalMeasure { points, weights })
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn is_uniform(&self) -> bool {
        let w = 1.0 / self.len() as f64;
        self.weights.iter().all(|&v| v == w)
    }
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    sq_dist(a, b).sqrt()
}

pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Minimum-cost perfect assignment of rows to columns of a square cost
/// matrix (shortest augmenting paths with potentials). Returns the column
/// assigned to each row.
pub fn solve_assignment(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    // 1-based arrays; column 0 is the virtual source.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut minv = vec![0.0; n + 1];
    let mut used = vec![false; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        minv.iter_mut().for_each(|m| *m = f64::INFINITY);
        used.iter_mut().for_each(|u| *u = false);
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let row = &cost[i0 - 1];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = row[j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0usize; n];
    for j in 1..=n {
        assign[p[j] - 1] = j - 1;
    }
    assign
}

/// Optimal transport plan between two weighted measures.
#[derive(Clone, Debug)]
pub struct TransportPlan {
    /// `(i, j, mass)` for every positive entry of the coupling.
    pub entries: Vec<(usize, usize, f64)>,
    pub cost: f64,
}

fn check_transport_sizes(p: &EmpiricalMeasure, q: &EmpiricalMeasure) -> Result<()> {
    if p.dim() != q.dim() {
        return Err(Error::InputShape {
            expected: p.dim(),
            got: q.dim(),
        });
    }
    if p.len() > MAX_TRANSPORT_POINTS || q.len() > MAX_TRANSPORT_POINTS {
        return Err(Error::Resource(format!(
            "exact transport is limited to {MAX_TRANSPORT_POINTS} points per measure \
             (got {} and {}); subsample the inputs",
            p.len(),
            q.len()
        )));
    }
    Ok(())
}

/// Exact optimal coupling for the Euclidean ground cost. Equal-size uniform
/// measures go through [`solve_assignment`]; anything else through
/// successive shortest paths on integer-rounded costs.
pub fn optimal_transport(p: &EmpiricalMeasure, q: &EmpiricalMeasure) -> Result<TransportPlan> {
    check_transport_sizes(p, q)?;
    let cost: Vec<Vec<f64>> = p
        .points
        .iter()
        .map(|x| q.points.iter().map(|y| euclidean(x, y)).collect())
        .collect();
    if p.len() == q.len() && p.is_uniform() && q.is_uniform() {
        let assign = solve_assignment(&cost);
        let n = p.len() as f64;
        let total = sorted_sum(assign.iter().enumerate().map(|(i, &j)| cost[i][j]).collect());
        return Ok(TransportPlan {
            entries: assign.iter().enumerate().map(|(i, &j)| (i, j, 1.0 / n)).collect(),
            cost: total / n,
        });
    }
    let entries = min_cost_flow(&cost, &p.weights, &q.weights);
    let total = entries.iter().map(|&(i, j, m)| m * cost[i][j]).sum();
    Ok(TransportPlan { entries, cost: total })
}

/// Sum in ascending order, so the result does not depend on the order the
/// terms were produced in (keeps W1 exactly symmetric).
pub fn sorted_sum(mut terms: Vec<f64>) -> f64 {
    terms.sort_by(f64::total_cmp);
    terms.iter().sum()
}

pub fn wasserstein1(p: &EmpiricalMeasure, q: &EmpiricalMeasure) -> Result<f64> {
    Ok(optimal_transport(p, q)?.cost)
}

#[derive(PartialEq, Eq)]
struct Visit {
    dist: i64,
    node: usize,
}

impl Ord for Visit {
    fn cmp(&self, other: &Self) -> Ordering {
        other.dist.cmp(&self.dist).then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Visit {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Transportation problem by successive shortest paths with Johnson
/// potentials. Nodes `0..n` are sources, `n..n+m` sinks; every source-sink
/// arc is present with unbounded capacity, so the residual graph only needs
/// the flow matrix.
fn min_cost_flow(cost: &[Vec<f64>], supply: &[f64], demand: &[f64]) -> Vec<(usize, usize, f64)> {
    const MASS_EPS: f64 = 1e-15;
    let (n, m) = (supply.len(), demand.len());
    let icost: Vec<Vec<i64>> = cost
        .iter()
        .map(|row| row.iter().map(|c| (c * COST_SCALE).round() as i64).collect())
        .collect();
    let mut flow = vec![vec![0.0f64; m]; n];
    let mut sup = supply.to_vec();
    let mut dem = demand.to_vec();
    let mut pot = vec![0i64; n + m];
    loop {
        if sup.iter().all(|&s| s <= MASS_EPS) || dem.iter().all(|&d| d <= MASS_EPS) {
            break;
        }
        // Multi-source Dijkstra over reduced costs.
        let mut dist = vec![i64::MAX; n + m];
        let mut prev = vec![usize::MAX; n + m];
        let mut heap = BinaryHeap::new();
        for i in 0..n {
            if sup[i] > MASS_EPS {
                dist[i] = 0;
                heap.push(Visit { dist: 0, node: i });
            }
        }
        while let Some(Visit { dist: d, node }) = heap.pop() {
            if d > dist[node] {
                continue;
            }
            if node < n {
                for j in 0..m {
                    let nd = d + icost[node][j] + pot[node] - pot[n + j];
                    if nd < dist[n + j] {
                        dist[n + j] = nd;
                        prev[n + j] = node;
                        heap.push(Visit { dist: nd, node: n + j });
                    }
                }
            } else {
                let j = node - n;
                for i in 0..n {
                    if flow[i][j] > MASS_EPS {
                        let nd = d - icost[i][j] + pot[n + j] - pot[i];
                        if nd < dist[i] {
                            dist[i] = nd;
                            prev[i] = node;
                            heap.push(Visit { dist: nd, node: i });
                        }
                    }
                }
            }
        }
        let target = (0..m)
            .filter(|&j| dem[j] > MASS_EPS && dist[n + j] < i64::MAX)
            .min_by_key(|&j| (dist[n + j], j));
        let Some(tj) = target else { break };
        let reach = dist[n + tj];
        for v in 0..n + m {
            pot[v] += dist[v].min(reach);
        }
        // Walk back to find the bottleneck, then push.
        let mut bottleneck = dem[tj];
        let mut node = n + tj;
        let mut source = node;
        while node != usize::MAX {
            let pv = prev[node];
            if pv == usize::MAX {
                source = node;
                break;
            }
            if node < n {
                // Backward arc sink pv -> source node cancels flow[node][pv-n].
                bottleneck = bottleneck.min(flow[node][pv - n]);
            }
            node = pv;
        }
        bottleneck = bottleneck.min(sup[source]);
        let mut node = n + tj;
        while prev[node] != usize::MAX {
            let pv = prev[node];
            if node >= n {
                flow[pv][node - n] += bottleneck;
            } else {
                flow[node][pv - n] -= bottleneck;
            }
            node = pv;
        }
        sup[source] -= bottleneck;
        dem[tj] -= bottleneck;
    }
    let mut entries = Vec::new();
    for (i, row) in flow.iter().enumerate() {
        for (j, &f) in row.iter().enumerate() {
            if f > MASS_EPS {
                entries.push((i, j, f));
            }
        }
    }
    entries
}

/// Gaussian kernel `K(x,y) = B² exp(-‖x-y‖²/(2σ²))` with `B = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KernelSpec {
    pub sigma: f64,
}

impl KernelSpec {
    pub fn gaussian(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::Parameter(format!("bandwidth must be positive, got {sigma}")));
        }
        Ok(KernelSpec { sigma })
    }

    /// Bound `B` with `K(x,y) ≤ B²`.
    pub fn bound(&self) -> f64 {
        1.0
    }

    /// Per-argument Euclidean Lipschitz constant `τ_k = e^{-1/2}/σ`.
    pub fn lipschitz(&self) -> f64 {
        (-0.5f64).exp() / self.sigma
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        (-sq_dist(x, y) / (2.0 * self.sigma * self.sigma)).exp()
    }
}

/// Median pairwise Euclidean distance over (at most) the first 1000 points.
pub fn median_bandwidth(points: &[Vec<f64>]) -> Result<f64> {
    let pts = &points[..points.len().min(1000)];
    let mut d: Vec<f64> = Vec::with_capacity(pts.len() * pts.len() / 2);
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            d.push(euclidean(&pts[i], &pts[j]));
        }
    }
    if d.is_empty() {
        return Err(Error::Parameter("median heuristic needs at least two points".into()));
    }
    d.sort_by(f64::total_cmp);
    let mid = d.len() / 2;
    let med = if d.len() % 2 == 0 {
        0.5 * (d[mid - 1] + d[mid])
    } else {
        d[mid]
    };
    if med > 0.0 {
        Ok(med)
    } else {
        Err(Error::Parameter("all points coincide; bandwidth undefined".into()))
    }
}

fn weighted_gram(k: &KernelSpec, a: &[Vec<f64>], wa: &[f64], b: &[Vec<f64>], wb: &[f64]) -> f64 {
    a.iter()
        .zip(wa)
        .map(|(x, &u)| u * b.iter().zip(wb).map(|(y, &v)| v * k.eval(x, y)).sum::<f64>())
        .sum()
}

/// V-statistic `Σ w w K(P,P) + Σ w' w' K(Q,Q) - 2 Σ w w' K(P,Q)`.
pub fn mmd2_plugin(p: &EmpiricalMeasure, q: &EmpiricalMeasure, k: &KernelSpec) -> Result<f64> {
    if p.dim() != q.dim() {
        return Err(Error::InputShape {
            expected: p.dim(),
            got: q.dim(),
        });
    }
    let pp = weighted_gram(k, &p.points, &p.weights, &p.points, &p.weights);
    let qq = weighted_gram(k, &q.points, &q.weights, &q.points, &q.weights);
    let pq = weighted_gram(k, &p.points, &p.weights, &q.points, &q.weights);
    Ok(pp + qq - 2.0 * pq)
}

fn check_samples(x: &[Vec<f64>], name: &str) -> Result<usize> {
    if x.len() < 2 {
        return Err(Error::Parameter(format!(
            "{name} needs at least 2 points, got {}",
            x.len()
        )));
    }
    let dim = x[0].len();
    if let Some(bad) = x.iter().find(|p| p.len() != dim) {
        return Err(Error::InputShape {
            expected: dim,
            got: bad.len(),
        });
    }
    Ok(dim)
}

/// `(1/(n(n-1))) Σ_{i≠j} K(x_i, x_j)`.
pub fn within_u_statistic(x: &[Vec<f64>], k: &KernelSpec) -> f64 {
    let n = x.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += k.eval(&x[i], &x[j]);
            }
        }
    }
    s / (n * (n - 1)) as f64
}

/// The unbiased two-sample estimate; may be negative.
pub fn mmd2_unbiased_two_sample(x: &[Vec<f64>], z: &[Vec<f64>], k: &KernelSpec) -> Result<f64> {
    let dx = check_samples(x, "X")?;
    let dz = check_samples(z, "Z")?;
    if dx != dz {
        return Err(Error::InputShape { expected: dx, got: dz });
    }
    let (n, m) = (x.len(), z.len());
    let mut cross = 0.0;
    for xi in x {
        for zj in z {
            cross += k.eval(xi, zj);
        }
    }
    Ok(within_u_statistic(x, k) + within_u_statistic(z, k) - 2.0 * cross / (n * m) as f64)
}

/// Latent distributions with known kernel expectations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LatentDistribution {
    /// Uniform on `[0,1]^ℓ`.
    UniformCube,
    /// `N(1/2, 0.2²)` per coordinate, truncated to `[0,1]`.
    TruncatedGaussian,
}

pub const TRUNC_GAUSS_MEAN: f64 = 0.5;
pub const TRUNC_GAUSS_SD: f64 = 0.2;

impl FromStr for LatentDistribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" | "uniform-cube" => Ok(LatentDistribution::UniformCube),
            "truncated-gaussian" | "gaussian" => Ok(LatentDistribution::TruncatedGaussian),
            other => Err(Error::Config(format!("unsupported latent distribution {other:?}"))),
        }
    }
}

impl LatentDistribution {
    pub fn sample(self, dim: usize, rng: &mut impl Rng) -> Vec<f64> {
        match self {
            LatentDistribution::UniformCube => (0..dim).map(|_| rng.gen::<f64>()).collect(),
            LatentDistribution::TruncatedGaussian => {
                let normal = Normal::new(TRUNC_GAUSS_MEAN, TRUNC_GAUSS_SD).expect("valid normal");
                (0..dim)
                    .map(|_| loop {
                        let v = normal.sample(rng);
                        if (0.0..=1.0).contains(&v) {
                            break v;
                        }
                    })
                    .collect()
            }
        }
    }
}

/// `∫₀¹∫₀¹ exp(-(z-z')²/(2σ²)) dz dz'`.
pub fn uniform_pair_integral(sigma: f64) -> f64 {
    let r = 1.0 / (sigma * std::f64::consts::SQRT_2);
    2.0 * (sigma * (std::f64::consts::PI / 2.0).sqrt() * libm::erf(r)
        - sigma * sigma * (1.0 - (-1.0 / (2.0 * sigma * sigma)).exp()))
}

/// `∫₀¹ exp(-(x-z)²/(2σ²)) dz`.
pub fn uniform_cross_integral(x: f64, sigma: f64) -> f64 {
    let s = sigma * std::f64::consts::SQRT_2;
    sigma * (std::f64::consts::PI / 2.0).sqrt() * (libm::erf((1.0 - x) / s) + libm::erf(x / s))
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SemiAnalytic {
    pub value: f64,
    /// Monte Carlo standard error; 0 for closed-form expectations.
    pub std_err: f64,
}

/// Default Monte Carlo size for latent expectations without closed form.
pub const SEMI_ANALYTIC_MC: usize = 1_000_000;

/// `U_X + E K(Z,Z') - (2/n) Σ_i E K(x_i, Z)` with `Z, Z' ~ ν`.
pub fn mmd2_semi_analytic(
    x: &[Vec<f64>],
    k: &KernelSpec,
    nu: LatentDistribution,
    mc_samples: usize,
    seed: u64,
) -> Result<SemiAnalytic> {
    let dim = check_samples(x, "X")?;
    let u = within_u_statistic(x, k);
    let n = x.len() as f64;
    match nu {
        LatentDistribution::UniformCube => {
            let zz = uniform_pair_integral(k.sigma).powi(dim as i32);
            let cross: f64 = x
                .iter()
                .map(|xi| xi.iter().map(|&v| uniform_cross_integral(v, k.sigma)).product::<f64>())
                .sum();
            Ok(SemiAnalytic {
                value: u + zz - 2.0 * cross / n,
                std_err: 0.0,
            })
        }
        LatentDistribution::TruncatedGaussian => {
            if mc_samples < 2 {
                return Err(Error::Parameter("Monte Carlo needs at least 2 samples".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (mut mean, mut m2) = (0.0, 0.0);
            for t in 0..mc_samples {
                let z = nu.sample(dim, &mut rng);
                let z2 = nu.sample(dim, &mut rng);
                let cross: f64 = x.iter().map(|xi| k.eval(xi, &z)).sum();
                let h = k.eval(&z, &z2) - 2.0 * cross / n;
                let delta = h - mean;
                mean += delta / (t + 1) as f64;
                m2 += delta * (h - mean);
            }
            let var = m2 / (mc_samples - 1) as f64;
            Ok(SemiAnalytic {
                value: u + mean,
                std_err: (var / mc_samples as f64).sqrt(),
            })
        }
    }
}

/// Largest `(K(x,x) + K(y,y) - 2K(x,y)) / (2τ_k‖x-y‖)` over random pairs in
/// `[0,1]^dim`; coincident pairs count as 0.
pub fn kernel_hilbert_lipschitz_check(k: &KernelSpec, dim: usize, trials: usize, seed: u64) -> Result<f64> {
    if trials == 0 || dim == 0 {
        return Err(Error::Parameter("need trials >= 1 and dim >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for t in 0..trials {
        let x: Vec<f64> = (0..dim).map(|_| rng.gen()).collect();
        // A few near-coincident pairs probe the small-distance regime.
        let y: Vec<f64> = if t % 10 == 0 {
            x.iter().map(|v| v + 1e-6 * rng.gen::<f64>()).collect()
        } else {
            (0..dim).map(|_| rng.gen()).collect()
        };
        worst = worst.max(hilbert_ratio(k, &x, &y));
    }
    Ok(worst)
}

pub fn hilbert_ratio(k: &KernelSpec, x: &[f64], y: &[f64]) -> f64 {
    let dist = euclidean(x, y);
    if dist == 0.0 {
        return 0.0;
    }
    (k.eval(x, x) + k.eval(y, y) - 2.0 * k.eval(x, y)) / (2.0 * k.lipschitz() * dist)
}
