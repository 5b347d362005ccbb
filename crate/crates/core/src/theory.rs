//! Closed-form bounds on `T(f, rho)` for place and grid cell codes.
//!
//! Every evaluator works with integer floors; inputs such as `rho = 0.1`
//! are not exact in binary, so floors are taken with a relative slack of
//! `1e-9` (a value within that slack of an integer counts as the integer).

use serde::Serialize;

use crate::codes::{Code, ModuleSpec};
use crate::{Error, Result, EPS};

fn floor_tol(x: f64) -> f64 {
    (x + 1e-9 * x.abs().max(1.0)).floor()
}

fn ceil_tol(x: f64) -> f64 {
    (x - 1e-9 * x.abs().max(1.0)).ceil()
}

fn inv(x: f64) -> f64 {
    if x <= 0.0 {
        f64::INFINITY
    } else {
        1.0 / x
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if (0.0..=0.5 + EPS).contains(&rho) {
        Ok(())
    } else {
        Err(Error::Domain {
            value: rho,
            domain: "distance 0 <= rho <= 1/2",
        })
    }
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::Domain {
            value: 0.0,
            domain: "at least one neuron",
        })
    } else {
        Ok(())
    }
}

/// Module sizes and scales `(n_i, lambda_i)` of a grid class.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSpec(Vec<ModuleSpec>);

impl GridSpec {
    pub fn new(modules: Vec<ModuleSpec>) -> Result<Self> {
        // Scale validation is shared with code construction.
        let probe: Vec<ModuleSpec> = modules.iter().map(|m| ModuleSpec { n: 1, lambda: m.lambda }).collect();
        Code::grid(&probe, &crate::codes::Inner::Adaptive, 2.0)?;
        Ok(GridSpec(modules))
    }

    pub fn of(code: &Code) -> Self {
        GridSpec(code.module_specs())
    }

    pub fn balanced(n: usize, m: usize) -> Result<Self> {
        Ok(GridSpec(Code::balanced_spec(n, m)?))
    }

    pub fn modules(&self) -> &[ModuleSpec] {
        &self.0
    }

    pub fn n(&self) -> usize {
        self.0.iter().map(|m| m.n).sum()
    }

    /// `lambda_k` for 1-based `k`, with `lambda_{m+1} = 0`.
    fn lambda(&self, k: usize) -> f64 {
        self.0.get(k - 1).map_or(0.0, |m| m.lambda)
    }

    fn density(&self, k: usize) -> f64 {
        let m = &self.0[k - 1];
        m.n as f64 / m.lambda
    }
}

/// `1 / floor(n / floor(1 / 2 rho))`: no place cells code beats this.
/// Infinite for `rho <= 1 / (2 (n + 1))`.
pub fn place_lower_bound(n: usize, rho: f64) -> Result<f64> {
    check_n(n)?;
    check_rho(rho)?;
    if rho == 0.0 {
        return Ok(f64::INFINITY);
    }
    let l = floor_tol(1.0 / (2.0 * rho));
    Ok(inv(floor_tol(n as f64 / l)))
}

/// Outer terms `(1 / floor(4 n rho), 1 / floor(3 n rho / 2))` of the place
/// cells minimax chain, valid for `rho` in `(1/n, 1/2]`.
///
/// The upper term is the published one. The tuned uniform code only
/// certifies the weaker [`tuned_uniform_upper`]: `ceil(1/rho) >= 1/rho`
/// gives `floor(n / ceil(1/rho)) <= floor(3 n rho / 2)` for every `rho`.
pub fn place_minimax_sandwich(n: usize, rho: f64) -> Result<(f64, f64)> {
    check_n(n)?;
    check_rho(rho)?;
    if rho <= 1.0 / n as f64 + EPS {
        return Err(Error::Domain {
            value: rho,
            domain: "place minimax sandwich needs 1/n < rho <= 1/2",
        });
    }
    let nf = n as f64;
    Ok((inv(floor_tol(4.0 * nf * rho)), inv(floor_tol(1.5 * nf * rho))))
}

/// `1 / floor(n / d)` with `d = ceil(1 / rho)`: the exact time of the
/// d-uniform code tuned to `rho`, the middle term of the minimax chain.
pub fn tuned_uniform_time(n: usize, rho: f64) -> Result<f64> {
    check_n(n)?;
    check_rho(rho)?;
    if rho == 0.0 {
        return Ok(f64::INFINITY);
    }
    let d = ceil_tol(1.0 / rho);
    Ok(inv(floor_tol(n as f64 / d)))
}

/// `1 / floor(n rho / 2)`, which bounds [`tuned_uniform_time`] from above
/// since `ceil(1/rho) <= 2/rho` for `rho <= 1`.
pub fn tuned_uniform_upper(n: usize, rho: f64) -> Result<f64> {
    check_n(n)?;
    check_rho(rho)?;
    Ok(inv(floor_tol(n as f64 * rho / 2.0)))
}

/// `(1 / floor(2 n rho), 2 / floor(2 n rho))` bracketing the adaptive place
/// code; both infinite when `rho < 1 / 2n`.
pub fn adaptive_place_sandwich(n: usize, rho: f64) -> Result<(f64, f64)> {
    check_n(n)?;
    check_rho(rho)?;
    let k = floor_tol(2.0 * n as f64 * rho);
    Ok((inv(k), 2.0 * inv(k)))
}

/// `max { k : lambda_k >= rho }`, 1-based.
pub fn j_rho(spec: &GridSpec, rho: f64) -> Result<usize> {
    if !(rho.is_finite() && rho <= 1.0 + EPS) {
        return Err(Error::Domain {
            value: rho,
            domain: "rho <= lambda_1 = 1",
        });
    }
    Ok((1..=spec.0.len())
        .rev()
        .find(|&k| spec.lambda(k) >= rho - EPS)
        .unwrap_or(1))
}

/// Lower bound on the minimax time over a grid class, with its two
/// sufficient conditions for impossibility.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridLowerBound {
    /// `1 / floor(6 min_k sum_{i<=k} (n_i / lambda_i) max(rho, lambda_{k+1}))`.
    pub value: f64,
    /// The inner minimum before the floor.
    pub inner_min: f64,
    /// Some `2 <= k <= j_rho` has `(k-1) lambda_k < min_{i<k} lambda_i / 6 n_i`.
    pub scale_degenerate: bool,
    /// `j_rho rho < min_{i<=j_rho} lambda_i / 6 n_i`.
    pub range_degenerate: bool,
}

fn min_ratio(spec: &GridSpec, upto: usize) -> f64 {
    (1..=upto)
        .map(|i| spec.lambda(i) / (6.0 * spec.0[i - 1].n as f64))
        .fold(f64::INFINITY, f64::min)
}

/// Lower bound on `T(G((n_i, lambda_i)), rho)`. Requires `rho <= 1/2` when
/// `lambda_1 / lambda_2` is even and `rho <= 1/2 - lambda_2 / 2` when odd.
pub fn grid_lower_bound(spec: &GridSpec, rho: f64) -> Result<GridLowerBound> {
    check_rho(rho)?;
    let m = spec.0.len();
    if m >= 2 {
        let ratio = (spec.lambda(1) / spec.lambda(2)).round() as u64;
        if ratio % 2 == 1 && rho > 0.5 - spec.lambda(2) / 2.0 + EPS {
            return Err(Error::HypothesisUnmet(format!(
                "lambda_1/lambda_2 = {ratio} is odd, so rho must be <= {}",
                0.5 - spec.lambda(2) / 2.0
            )));
        }
    }
    let inner_min = (1..=m)
        .map(|k| {
            let s: f64 = (1..=k).map(|i| spec.density(i)).sum();
            s * rho.max(spec.lambda(k + 1))
        })
        .fold(f64::INFINITY, f64::min);
    let j = j_rho(spec, rho)?;
    let scale_degenerate =
        (2..=j).any(|k| (k - 1) as f64 * spec.lambda(k) < min_ratio(spec, k - 1));
    let range_degenerate = j as f64 * rho < min_ratio(spec, j);
    Ok(GridLowerBound {
        value: inv(floor_tol(6.0 * inner_min)),
        inner_min,
        scale_degenerate,
        range_degenerate,
    })
}

/// Upper bound for the adaptive grid code built on `spec`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridUpperBound {
    /// `4 / min_k sum_{j<=k} floor((n_j / lambda_j) max(lambda_{k+1}, rho))`.
    pub value: f64,
    /// `min_k sum_{j<=k} (n_j / lambda_j) max(lambda_{k+1}, rho)`, no floors.
    pub inner_min: f64,
    /// `1 / (6 inner_min)`: class lower end of the log-factor sandwich.
    pub sandwich_lower: f64,
    /// `16 log2(1/rho) / inner_min`: upper end of the log-factor sandwich.
    pub sandwich_upper: f64,
    /// Both range conditions under which the log-factor sandwich holds.
    pub in_adaptive_range: bool,
}

pub fn grid_adaptive_upper_bound(spec: &GridSpec, rho: f64) -> Result<GridUpperBound> {
    check_rho(rho)?;
    let m = spec.0.len();
    let floored = (1..=m)
        .map(|k| {
            let reach = spec.lambda(k + 1).max(rho);
            (1..=k).map(|j| floor_tol(spec.density(j) * reach)).sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min);
    let inner_min = (1..=m)
        .map(|k| {
            let reach = spec.lambda(k + 1).max(rho);
            (1..=k).map(|j| spec.density(j) * reach).sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min);
    let j = j_rho(spec, rho)?;
    let ratio = |i: usize| spec.lambda(i) / spec.0[i - 1].n as f64;
    let scales_ok = (1..=j).all(|k| (1..k).any(|i| spec.lambda(k) >= ratio(i) - EPS) || k == 1);
    let rho_ok = (1..=j).any(|i| rho >= ratio(i) - EPS);
    Ok(GridUpperBound {
        value: 4.0 * inv(floored),
        inner_min,
        sandwich_lower: inv(6.0 * inner_min),
        sandwich_upper: 16.0 * (1.0 / rho).log2() * inv(inner_min),
        in_adaptive_range: scales_ok && rho_ok,
    })
}

/// `(1 / 3 floor(n/m), 16 / floor(n/m))` for the balanced adaptive grid code
/// with `m = floor(log2(1/rho))` modules. Needs `2^{-n/2} <= rho <= 1/2` and
/// `n >= 2m`.
pub fn balanced_rate(n: usize, rho: f64) -> Result<(f64, f64)> {
    check_n(n)?;
    check_rho(rho)?;
    if rho < 2f64.powf(-(n as f64) / 2.0) * (1.0 - 1e-12) {
        return Err(Error::Domain {
            value: rho,
            domain: "balanced rate needs rho >= 2^(-n/2)",
        });
    }
    let m = balanced_modules(rho);
    if n < 2 * m {
        return Err(Error::Domain {
            value: rho,
            domain: "balanced rate needs n >= 2 floor(log2(1/rho))",
        });
    }
    let per = (n / m) as f64;
    Ok((1.0 / (3.0 * per), 16.0 / per))
}

/// `floor(log2(1/rho))`, at least 1.
pub fn balanced_modules(rho: f64) -> usize {
    (floor_tol((1.0 / rho).log2()) as usize).max(1)
}

/// `1 / ceil(delta n rho)`: the adaptive time random place codes reach with
/// high probability once `rho >= c / sqrt(n)`.
pub fn random_place_target(n: usize, rho: f64, delta: f64) -> f64 {
    inv(ceil_tol(delta * n as f64 * rho))
}

/// `16 / floor(min_k sum_{i<=k} n_i / lambda_i)`: the high-probability time
/// of random grid codes in their adaptive range.
pub fn random_grid_target(spec: &GridSpec) -> f64 {
    let min = (1..=spec.0.len())
        .map(|k| (1..=k).map(|i| spec.density(i)).sum::<f64>())
        .fold(f64::INFINITY, f64::min);
    16.0 * inv(floor_tol(min))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * b.abs().max(1.0)
    }

    #[test]
    fn place_lower_examples() {
        assert!(close(place_lower_bound(100, 0.1).unwrap(), 1.0 / 20.0));
        assert_eq!(place_lower_bound(100, 1.0 / 202.0).unwrap(), f64::INFINITY);
        assert!(place_lower_bound(100, 1.0 / 200.0).unwrap().is_finite());
        assert!(close(place_lower_bound(100, 0.5).unwrap(), 0.01));
        assert_eq!(place_lower_bound(100, 0.0).unwrap(), f64::INFINITY);
        assert!(place_lower_bound(100, 0.7).is_err());
    }

    #[test]
    fn minimax_sandwich_examples() {
        let (lo, hi) = place_minimax_sandwich(100, 0.1).unwrap();
        assert!(close(lo, 1.0 / 40.0) && close(hi, 1.0 / 15.0));
        let (lo, hi) = place_minimax_sandwich(100, 0.5).unwrap();
        assert!(close(lo, 1.0 / 200.0) && close(hi, 1.0 / 75.0));
        assert!(place_minimax_sandwich(100, 0.01).is_err());
        assert!(close(tuned_uniform_time(100, 0.1).unwrap(), 0.1));
        // The tuned uniform code sits above the published upper term.
        assert!(tuned_uniform_time(100, 0.5).unwrap() > place_minimax_sandwich(100, 0.5).unwrap().1);
        assert!(close(tuned_uniform_upper(100, 0.5).unwrap(), 1.0 / 25.0));
    }

    #[test]
    fn adaptive_sandwich_examples() {
        let (lo, hi) = adaptive_place_sandwich(100, 0.25).unwrap();
        assert!(close(lo, 1.0 / 50.0) && close(hi, 2.0 / 50.0));
        let (lo, hi) = adaptive_place_sandwich(100, 0.004).unwrap();
        assert_eq!((lo, hi), (f64::INFINITY, f64::INFINITY));
    }

    #[test]
    fn j_rho_examples() {
        let spec = GridSpec::new(vec![
            ModuleSpec { n: 1, lambda: 1.0 },
            ModuleSpec { n: 1, lambda: 0.5 },
            ModuleSpec { n: 1, lambda: 0.25 },
        ])
        .unwrap();
        assert_eq!(j_rho(&spec, 0.3).unwrap(), 2);
        assert_eq!(j_rho(&spec, 1.0).unwrap(), 1);
        assert!(j_rho(&spec, 1.5).is_err());
        let deep = GridSpec::balanced(40, 20).unwrap();
        assert_eq!(j_rho(&deep, 2f64.powi(-10)).unwrap(), 11);
    }

    #[test]
    fn grid_lower_balanced() {
        let spec = GridSpec::balanced(100, 20).unwrap();
        for e in 1..=20 {
            let rho = 2f64.powi(-e);
            let b = grid_lower_bound(&spec, rho).unwrap();
            assert!(close(b.inner_min, 2.5), "rho=2^-{e}: {}", b.inner_min);
            assert!(close(b.value, 1.0 / 15.0));
        }
    }

    #[test]
    fn grid_lower_single_module() {
        let spec = GridSpec::new(vec![ModuleSpec { n: 50, lambda: 1.0 }]).unwrap();
        let b = grid_lower_bound(&spec, 0.1).unwrap();
        assert!(close(b.inner_min, 5.0));
        assert!(close(b.value, 1.0 / 30.0));
    }

    #[test]
    fn grid_lower_degenerate_and_hypothesis() {
        // One cell per module and a very fine second module: (k-1) lambda_k
        // falls below lambda_1 / 6 n_1.
        let spec = GridSpec::new(vec![ModuleSpec { n: 1, lambda: 1.0 }, ModuleSpec { n: 1, lambda: 1.0 / 64.0 }]).unwrap();
        let b = grid_lower_bound(&spec, 0.01).unwrap();
        assert!(b.scale_degenerate);
        assert_eq!(b.value, f64::INFINITY);
        let odd = GridSpec::new(vec![ModuleSpec { n: 3, lambda: 1.0 }, ModuleSpec { n: 3, lambda: 1.0 / 3.0 }]).unwrap();
        assert!(grid_lower_bound(&odd, 0.3).is_ok());
        assert!(matches!(grid_lower_bound(&odd, 0.4), Err(Error::HypothesisUnmet(_))));
    }

    #[test]
    fn grid_upper_examples() {
        let spec = GridSpec::balanced(100, 20).unwrap();
        for e in 1..=20 {
            let u = grid_adaptive_upper_bound(&spec, 2f64.powi(-e)).unwrap();
            assert!(u.value <= 16.0 / 5.0);
        }
        let single = GridSpec::new(vec![ModuleSpec { n: 50, lambda: 1.0 }]).unwrap();
        let u = grid_adaptive_upper_bound(&single, 0.1).unwrap();
        assert!(close(u.value, 4.0 / 5.0));
    }

    #[test]
    fn balanced_rate_examples() {
        let (lo, hi) = balanced_rate(100, 2f64.powi(-20)).unwrap();
        assert!(close(lo, 1.0 / 15.0) && close(hi, 16.0 / 5.0));
        let (lo, hi) = balanced_rate(100, 0.5).unwrap();
        assert!(close(lo, 1.0 / 300.0) && close(hi, 0.16));
        assert!(balanced_rate(10, 2f64.powi(-8)).is_err());
        assert!(balanced_rate(100, 2f64.powi(-51)).is_err());
    }
}
