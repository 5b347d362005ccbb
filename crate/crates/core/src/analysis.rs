//! Discrimination quantities computed exactly or in closed form.
//!
//! For two stimuli observed for a time `T`, the error of the best test is
//! bracketed by functions of `T * Delta` alone (see [`pe_bounds`]), which is
//! why the minimal discrimination time is taken as `1 / Delta`
//! ([`t_min`]). The worst case over all pairs at distance at least `rho`,
//! `T(f, rho)`, is computed exactly by [`DiscriminationProfile`].

use rayon::prelude::*;
use serde::Serialize;

use crate::codes::{Code, DEFAULT_BREAKPOINT_CAP};
use crate::geometry::{open_interval_reach, CirclePoint, Reach};
use crate::{Error, Result, EPS};

/// `C_mu = (mu - 1)^2 / 4 * min(1 / 2 mu, 3 / (5 + mu))`.
pub fn c_mu(mu: f64) -> f64 {
    (mu - 1.0).powi(2) / 4.0 * (1.0 / (2.0 * mu)).min(3.0 / (5.0 + mu))
}

/// `C~_mu = (mu - 1) ln mu`.
pub fn c_tilde_mu(mu: f64) -> f64 {
    (mu - 1.0) * mu.ln()
}

fn check_time(t: f64) -> Result<()> {
    if t.is_finite() && t > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            value: t,
            domain: "observation time T > 0",
        })
    }
}

fn check_mu(mu: f64) -> Result<()> {
    if mu.is_finite() && mu > 1.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            value: mu,
            domain: "firing rate mu > 1",
        })
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

/// Kullback-Leibler divergence `K(P1, P2)` in nats between the spike-count
/// laws under `s1` and `s2`:
/// `T (mu - 1 - ln mu) |I2 \ I1| + T (mu ln mu - mu + 1) |I1 \ I2|`.
pub fn kl_divergence(code: &Code, s1: &CirclePoint, s2: &CirclePoint, t: f64) -> Result<f64> {
    check_time(t)?;
    let mu = code.mu();
    check_mu(mu)?;
    let r = code.delta(s1, s2)?;
    let ln = mu.ln();
    Ok(t * (mu - 1.0 - ln) * r.only_in_2 as f64 + t * (mu * ln - mu + 1.0) * r.only_in_1 as f64)
}

/// Bracket on the minimax error `p_e(s1, s2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorBounds {
    pub kl: f64,
    pub pe_lower: f64,
    pub pe_upper: f64,
    pub c_mu: f64,
    pub c_tilde_mu: f64,
}

/// Error bracket for a pair with statistic `delta`, from `T` and `mu` only.
/// The `kl` field is the upper bound `T C~_mu Delta` on the divergence.
pub fn pe_bounds_for_delta(delta: usize, t: f64, mu: f64) -> Result<ErrorBounds> {
    check_time(t)?;
    check_mu(mu)?;
    let (c, ct) = (c_mu(mu), c_tilde_mu(mu));
    let x = t * ct * delta as f64;
    Ok(ErrorBounds {
        kl: x,
        pe_lower: ((-x).exp() / 4.0).max((1.0 - (x / 2.0).sqrt()) / 2.0),
        pe_upper: (-t * c * delta as f64).exp(),
        c_mu: c,
        c_tilde_mu: ct,
    })
}

/// `max(exp(-T C~ D)/4, (1 - sqrt(T C~ D / 2))/2) <= p_e <= exp(-T C D)`.
pub fn pe_bounds(code: &Code, s1: &CirclePoint, s2: &CirclePoint, t: f64) -> Result<ErrorBounds> {
    let delta = code.delta(s1, s2)?.delta;
    let mut b = pe_bounds_for_delta(delta, t, code.mu())?;
    b.kl = kl_divergence(code, s1, s2, t)?;
    Ok(b)
}

/// Bernstein-type bound on `P(X >= theta (1 + x))` for `X ~ Poisson(theta)`.
pub fn poisson_tail_upper(theta: f64, x: f64) -> Result<f64> {
    if !(theta.is_finite() && theta > 0.0) {
        return Err(Error::Domain {
            value: theta,
            domain: "Poisson mean theta > 0",
        });
    }
    if !(x.is_finite() && x >= 0.0) {
        return Err(Error::Domain {
            value: x,
            domain: "relative deviation x >= 0",
        });
    }
    Ok((-theta * x * x / (2.0 * (1.0 + x / 3.0))).exp())
}

/// Sub-Gaussian bound on `P(X <= theta - x)` for `X ~ Poisson(theta)`.
pub fn poisson_tail_lower(theta: f64, x: f64) -> Result<f64> {
    if !(theta.is_finite() && theta > 0.0) {
        return Err(Error::Domain {
            value: theta,
            domain: "Poisson mean theta > 0",
        });
    }
    if !(0.0..=theta).contains(&x) {
        return Err(Error::Domain {
            value: x,
            domain: "absolute deviation 0 <= x <= theta",
        });
    }
    Ok((-x * x / (2.0 * theta)).exp())
}

fn ln_pmf(theta: f64, k: u64) -> f64 {
    let mut ln_fact = 0.0;
    for j in 2..=k {
        ln_fact += (j as f64).ln();
    }
    k as f64 * theta.ln() - theta - ln_fact
}

/// `P(X <= k)` for `X ~ Poisson(theta)` by direct summation.
pub fn poisson_cdf(theta: f64, k: u64) -> f64 {
    let mut term = (-theta).exp();
    let mut sum = term;
    for j in 1..=k {
        term *= theta / j as f64;
        sum += term;
    }
    sum.min(1.0)
}

/// `P(X >= k)` for `X ~ Poisson(theta)`, summed upward from `k` so that
/// small tails do not cancel.
pub fn poisson_sf(theta: f64, k: u64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let mut term = ln_pmf(theta, k).exp();
    let mut sum = 0.0;
    let mut j = k;
    while term > 0.0 && (term > sum * 1e-18 || (j as f64) < theta) {
        sum += term;
        j += 1;
        term *= theta / j as f64;
    }
    sum.min(1.0)
}

/// `T_min(f, s1, s2) = 1 / Delta`, infinite when the pair cannot be told
/// apart.
pub fn t_min(code: &Code, s1: &CirclePoint, s2: &CirclePoint) -> Result<f64> {
    let d = code.delta(s1, s2)?.delta;
    Ok(if d == 0 { f64::INFINITY } else { 1.0 / d as f64 })
}

/// Limits on exact enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellBudget {
    /// Cap on raw breakpoints generated from the arcs.
    pub breakpoints: usize,
    /// Cap on cells entering the quadratic pair enumeration.
    pub cells: usize,
}

impl Default for CellBudget {
    fn default() -> Self {
        CellBudget {
            breakpoints: DEFAULT_BREAKPOINT_CAP,
            cells: 1 << 12,
        }
    }
}

impl CellBudget {
    pub fn with_cells(cells: usize) -> Self {
        CellBudget {
            breakpoints: DEFAULT_BREAKPOINT_CAP.max(2 * cells),
            cells,
        }
    }
}

/// For every attainable value `v` of `Delta`, the largest distance between
/// two stimuli whose statistic is `v`. Built once per code by enumerating
/// all pairs of breakpoint cells; `T(f, rho)` for any `rho` is then a scan.
///
/// Cells are half-open, so for cells `[a, a + la[` and `[b, b + lb[` the
/// displacement `theta_2 - theta_1` ranges over the open interval
/// `(b - a - la, b - a + lb)`; whether a pair at distance `>= rho` exists
/// reduces to [`Reach::reaches`] on that interval.
#[derive(Debug, Clone)]
pub struct DiscriminationProfile {
    reach: Vec<Option<Reach>>,
    cells: usize,
}

fn better(a: Reach, b: Reach) -> Reach {
    if (a.sup - b.sup).abs() <= EPS {
        if b.attained {
            b
        } else {
            a
        }
    } else if b.sup > a.sup {
        b
    } else {
        a
    }
}

fn merge(into: &mut [Option<Reach>], from: &[Option<Reach>]) {
    for (slot, r) in into.iter_mut().zip(from) {
        if let Some(r) = r {
            *slot = Some(slot.map_or(*r, |cur| better(cur, *r)));
        }
    }
}

impl DiscriminationProfile {
    pub fn new(code: &Code, budget: CellBudget) -> Result<Self> {
        let cells = code.cells(budget.breakpoints)?;
        let m = cells.len();
        if m > budget.cells {
            return Err(Error::CellBudgetExceeded {
                needed: m,
                budget: budget.cells,
            });
        }
        let n = code.n();
        let full = Reach {
            sup: 0.5,
            attained: true,
        };
        let reach = (0..m)
            .into_par_iter()
            .fold(
                || vec![None; n + 1],
                |mut acc: Vec<Option<Reach>>, a| {
                    let sa = cells.active(a);
                    for b in a..m {
                        let d = sa.delta(cells.active(b));
                        if acc[d] == Some(full) {
                            continue;
                        }
                        let r = if a == b {
                            open_interval_reach(-cells.lengths[a], cells.lengths[a], 1.0)
                        } else {
                            let offset = cells.starts[b] - cells.starts[a];
                            open_interval_reach(offset - cells.lengths[a], offset + cells.lengths[b], 1.0)
                        };
                        acc[d] = Some(acc[d].map_or(r, |cur| better(cur, r)));
                    }
                    acc
                },
            )
            .reduce(
                || vec![None; n + 1],
                |mut x, y| {
                    merge(&mut x, &y);
                    x
                },
            );
        Ok(DiscriminationProfile { reach, cells: m })
    }

    /// Number of breakpoint cells that were enumerated.
    pub fn cell_count(&self) -> usize {
        self.cells
    }

    /// Largest distance reached by pairs with statistic `delta`, if any.
    pub fn reach(&self, delta: usize) -> Option<Reach> {
        self.reach.get(delta).copied().flatten()
    }

    /// `min Delta_{s1,s2}` over pairs with `d(s1, s2) >= rho`.
    pub fn min_delta(&self, rho: f64) -> Result<usize> {
        check_rho(rho)?;
        Ok(self
            .reach
            .iter()
            .position(|r| r.is_some_and(|r| r.reaches(rho.min(0.5))))
            .expect("antipodal pairs always exist"))
    }

    /// `T(f, rho)`.
    pub fn t_of_rho(&self, rho: f64) -> Result<f64> {
        let d = self.min_delta(rho)?;
        Ok(if d == 0 { f64::INFINITY } else { 1.0 / d as f64 })
    }
}

/// Exact `T(f, rho) = max_{d(s1,s2) >= rho} 1 / Delta_{s1,s2}`.
pub fn t_of_rho_exact(code: &Code, rho: f64, budget: CellBudget) -> Result<f64> {
    check_rho(rho)?;
    DiscriminationProfile::new(code, budget)?.t_of_rho(rho)
}

/// Anchored proxy `max_{rho' >= rho in grid} T_min(f, s, s + rho')`. It
/// never exceeds the exact value since it maximizes over a subset of pairs.
pub fn t_of_rho_sampled(code: &Code, anchor: &CirclePoint, rho: f64, grid: &[f64]) -> Result<f64> {
    check_rho(rho)?;
    let mut worst: Option<f64> = None;
    for &r in grid.iter().filter(|&&r| r >= rho - EPS) {
        let t = t_min(code, anchor, &anchor.shifted(r)?)?;
        worst = Some(worst.map_or(t, |w: f64| w.max(t)));
    }
    worst.ok_or(Error::Domain {
        value: rho,
        domain: "the sampling grid has no point at or above rho",
    })
}

/// `n` points `min * ratio^k` up to and including `max` (the last point is
/// clamped to `max`).
pub fn geometric_grid(min: f64, max: f64, ratio: f64) -> Result<Vec<f64>> {
    if !(min > 0.0 && max >= min && ratio > 1.0) {
        return Err(Error::Domain {
            value: ratio,
            domain: "geometric grid needs 0 < min <= max and ratio > 1",
        });
    }
    let steps = ((max / min).ln() / ratio.ln() + 1e-9).floor() as i32;
    let mut grid: Vec<f64> = (0..=steps).map(|k| min * ratio.powi(k)).collect();
    if let Some(last) = grid.last_mut() {
        if (*last - max).abs() <= 1e-9 * max {
            *last = max;
        }
    }
    if grid.last().is_some_and(|&l| l < max * (1.0 - 1e-9)) {
        grid.push(max);
    }
    Ok(grid)
}

/// `points` log-spaced values from `min` to `max` inclusive.
pub fn log_grid(min: f64, max: f64, points: usize) -> Result<Vec<f64>> {
    if !(min > 0.0 && max > min && points >= 2) {
        return Err(Error::Domain {
            value: min,
            domain: "log grid needs 0 < min < max and at least two points",
        });
    }
    let (a, b) = (min.ln(), max.ln());
    Ok((0..points)
        .map(|k| {
            if k == 0 {
                min
            } else if k + 1 == points {
                max
            } else {
                (a + (b - a) * k as f64 / (points - 1) as f64).exp()
            }
        })
        .collect())
}

/// Probability that two points at argument gap `gap` on `S^lambda` both fall
/// in `[[A, B[[` for `A`, `B` independent uniform on `S^lambda`.
pub fn interval_cover_probability(gap: f64, lambda: f64) -> f64 {
    let t = gap.abs();
    (lambda * lambda / 2.0 - t * (lambda - t)) / (lambda * lambda)
}
