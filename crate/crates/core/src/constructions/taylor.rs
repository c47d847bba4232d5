//! Local Taylor polynomials `P_θ(x) = Σ_{|s| ≤ k} ∂^s f(θ)/s! (x - θ)^s`.

use serde::Serialize;

use super::targets::TargetFunction;
use crate::error::{Error, Result};

/// Largest Taylor order supported.
pub const MAX_TAYLOR_ORDER: usize = 4;

/// Step of the central finite differences used when no analytic partials exist.
pub const FD_STEP: f64 = 1e-4;

/// All multi-indices `s ∈ N^dim` with `|s| ≤ max_order`, ordered by total
/// degree and then lexicographically (descending in the first coordinate).
pub fn multi_indices(dim: usize, max_order: usize) -> Vec<Vec<usize>> {
    fn fill(dim: usize, remaining: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() + 1 == dim {
            prefix.push(remaining);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for k in (0..=remaining).rev() {
            prefix.push(k);
            fill(dim, remaining - k, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    for total in 0..=max_order {
        fill(dim, total, &mut Vec::with_capacity(dim), &mut out);
    }
    out
}

/// `s! = Π s_j!`.
pub fn multi_factorial(s: &[usize]) -> f64 {
    s.iter().map(|&k| (1..=k).map(|v| v as f64).product::<f64>()).product()
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Central finite-difference estimate of `∂^s f(x)` using the tensor product of
/// one-dimensional `n`-th order central stencils with step `h`.
pub fn finite_difference_partial(f: &dyn TargetFunction, x: &[f64], s: &[usize], h: f64) -> Result<f64> {
    let axes: Vec<(usize, usize)> = s.iter().copied().enumerate().filter(|&(_, k)| k > 0).collect();
    if axes.is_empty() {
        return checked(f, x);
    }
    // Odometer over the stencil positions of each active axis.
    let mut pos = vec![0usize; axes.len()];
    let mut total = 0.0;
    let mut point = x.to_vec();
    loop {
        let mut weight = 1.0;
        for (&(axis, n), &k) in axes.iter().zip(&pos) {
            point[axis] = x[axis] + (n as f64 / 2.0 - k as f64) * h;
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            weight *= sign * binomial(n, k);
        }
        total += weight * checked(f, &point)?;
        let mut carry = 0;
        while carry < axes.len() {
            pos[carry] += 1;
            if pos[carry] <= axes[carry].1 {
                break;
            }
            pos[carry] = 0;
            carry += 1;
        }
        if carry == axes.len() {
            break;
        }
    }
    let order: usize = s.iter().sum();
    Ok(total / h.powi(order as i32))
}

fn checked(f: &dyn TargetFunction, x: &[f64]) -> Result<f64> {
    let v = f.value(x);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Oracle(format!("non-finite value {v} at {x:?}")))
    }
}

/// Taylor coefficients `a_{θ,s} = ∂^s f(θ)/s!` around one center.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TaylorPiece {
    pub center: Vec<f64>,
    pub order: usize,
    /// `(s, a_{θ,s})` for every `|s| ≤ order`, in [`multi_indices`] order.
    pub terms: Vec<(Vec<usize>, f64)>,
}

impl TaylorPiece {
    pub fn coeff(&self, s: &[usize]) -> Option<f64> {
        self.terms.iter().find(|(t, _)| t.as_slice() == s).map(|(_, a)| *a)
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(s, a)| {
                a * s
                    .iter()
                    .zip(x.iter().zip(&self.center))
                    .map(|(&k, (xv, c))| (xv - c).powi(k as i32))
                    .product::<f64>()
            })
            .sum()
    }
}

pub fn taylor_piece(f: &dyn TargetFunction, center: &[f64], order: usize) -> Result<TaylorPiece> {
    if center.len() != f.dim() {
        return Err(Error::InputShape {
            expected: f.dim(),
            got: center.len(),
        });
    }
    if order > MAX_TAYLOR_ORDER {
        return Err(Error::Parameter(format!(
            "Taylor order {order} exceeds the cap {MAX_TAYLOR_ORDER}"
        )));
    }
    if center.iter().any(|c| !c.is_finite()) {
        return Err(Error::Domain(format!("non-finite Taylor center {center:?}")));
    }
    let terms = multi_indices(center.len(), order)
        .into_iter()
        .map(|s| {
            let deriv = match f.partial(center, &s) {
                Some(v) => v,
                None => finite_difference_partial(f, center, &s, FD_STEP)?,
            };
            if !deriv.is_finite() {
                return Err(Error::Oracle(format!("non-finite partial {s:?} at {center:?}")));
            }
            let a = deriv / multi_factorial(&s);
            Ok((s, a))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TaylorPiece {
        center: center.to_vec(),
        order,
        terms,
    })
}

#[cfg(test)]
mod tests {
    use super::super::targets::FnTarget;
    use super::*;

    /// `x^{1.5}` with its exact first derivative.
    struct PowThreeHalves;
    impl TargetFunction for PowThreeHalves {
        fn dim(&self) -> usize {
            1
        }
        fn value(&self, x: &[f64]) -> f64 {
            x[0].powf(1.5)
        }
        fn partial(&self, x: &[f64], s: &[usize]) -> Option<f64> {
            match s[0] {
                0 => Some(self.value(x)),
                1 => Some(1.5 * x[0].sqrt()),
                _ => None,
            }
        }
    }

    #[test]
    fn multi_index_enumeration() {
        let idx = multi_indices(2, 2);
        assert_eq!(
            idx,
            vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![2, 0], vec![1, 1], vec![0, 2]]
        );
        assert_eq!(multi_indices(3, 2).len(), 10);
        assert_eq!(multi_indices(1, 4).len(), 5);
    }

    #[test]
    fn square_order_one_by_finite_differences() {
        let f = FnTarget::new(1, |x: &[f64]| x[0] * x[0]);
        let p = taylor_piece(&f, &[0.5], 1).unwrap();
        assert!((p.coeff(&[0]).unwrap() - 0.25).abs() < 1e-12);
        assert!((p.coeff(&[1]).unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn constant_has_only_zeroth_term() {
        let f = FnTarget::new(2, |_: &[f64]| 1.7);
        let p = taylor_piece(&f, &[0.3, 0.4], 2).unwrap();
        assert_eq!(p.coeff(&[0, 0]), Some(1.7));
        for (s, a) in &p.terms {
            if s.iter().sum::<usize>() > 0 {
                assert!(a.abs() < 1e-6, "{s:?} -> {a}");
            }
        }
    }

    #[test]
    fn holder_remainder_bound() {
        let f = PowThreeHalves;
        for theta in [0.1, 0.35, 0.5, 0.9] {
            let p = taylor_piece(&f, &[theta], 1).unwrap();
            for i in 0..=1000 {
                let x = i as f64 / 1000.0;
                let rem = (f.value(&[x]) - p.evaluate(&[x])).abs();
                assert!(rem <= (x - theta).abs().powf(1.5) + 1e-12, "θ={theta} x={x}");
            }
        }
    }

    #[test]
    fn mixed_partial_by_differences() {
        let f = FnTarget::new(2, |x: &[f64]| (x[0] * x[1]).sin());
        let v = finite_difference_partial(&f, &[0.3, 0.8], &[1, 1], FD_STEP).unwrap();
        let exact = (0.24f64).cos() - 0.24 * (0.24f64).sin();
        assert!((v - exact).abs() < 1e-6);
    }

    #[test]
    fn oracle_failures_propagate() {
        let f = FnTarget::new(1, |x: &[f64]| if x[0] > 0.5 { f64::NAN } else { x[0] });
        assert!(matches!(taylor_piece(&f, &[0.5], 1), Err(Error::Oracle(_))));
        assert!(taylor_piece(&f, &[0.2], 5).is_err());
        assert!(taylor_piece(&f, &[0.2, 0.1], 1).is_err());
    }
}
