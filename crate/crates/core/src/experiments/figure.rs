use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use super::{fmt_f64, Check, ExperimentConfig};
use crate::analysis::t_of_rho_sampled;
use crate::montecarlo::{derive_seed, empirical_tmin};
use crate::Result;

/// One `(code, rho')` point of the left panel.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeftRow {
    pub code: String,
    pub rho_prime: f64,
    pub delta: usize,
    pub empirical_tmin: Option<f64>,
}

/// One `(code, rho)` point of the right panel.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RightRow {
    pub code: String,
    pub rho: f64,
    pub proxy_t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Figure {
    pub left: Vec<LeftRow>,
    pub right: Vec<RightRow>,
}

/// Left panel: for every code and every `rho'` of the grid, `Delta(s, s +
/// rho')` and the smallest grid time whose simulated error is at most
/// `alpha`. Right panel: the anchored proxy of `T(f, rho)`. Each `(code,
/// rho')` cell gets its own seed, so rows do not depend on scheduling.
pub fn run_figure(cfg: &ExperimentConfig) -> Result<Figure> {
    let rho = cfg.rho_points()?;
    let t_grid = cfg.t_points()?;
    let s = cfg.anchor_point();
    let mut left = Vec::new();
    let mut right = Vec::new();
    for (ci, (id, spec)) in cfg.codes()?.into_iter().enumerate() {
        let code = spec.build(cfg.mu)?;
        let rows: Vec<Result<LeftRow>> = rho
            .par_iter()
            .enumerate()
            .map(|(ri, &r)| {
                let s2 = s.shifted(r)?;
                let delta = code.delta(&s, &s2)?.delta;
                let seed = derive_seed(cfg.master_seed, ((ci as u64) << 32) | ri as u64);
                Ok(LeftRow {
                    code: id.clone(),
                    rho_prime: r,
                    delta,
                    empirical_tmin: empirical_tmin(&code, &s, &s2, cfg.alpha, &t_grid, cfg.trials, seed)?,
                })
            })
            .collect();
        for row in rows {
            left.push(row?);
        }
        for &r in &rho {
            right.push(RightRow {
                code: id.clone(),
                rho: r,
                proxy_t: t_of_rho_sampled(&code, &s, r, &rho)?,
            });
        }
    }
    Ok(Figure { left, right })
}

impl Figure {
    pub fn left_csv(&self) -> String {
        let mut out = String::from("code,rho_prime,delta,inv_delta,empirical_tmin\n");
        for r in &self.left {
            let inv = if r.delta == 0 { f64::INFINITY } else { 1.0 / r.delta as f64 };
            let tmin = r.empirical_tmin.map_or("NA".to_string(), fmt_f64);
            out.push_str(&format!("{},{},{},{},{}\n", r.code, fmt_f64(r.rho_prime), r.delta, fmt_f64(inv), tmin));
        }
        out
    }

    pub fn right_csv(&self) -> String {
        let mut out = String::from("code,rho,proxy_T\n");
        for r in &self.right {
            out.push_str(&format!("{},{},{}\n", r.code, fmt_f64(r.rho), fmt_f64(r.proxy_t)));
        }
        out
    }
}

/// Least squares `y = b x` through the origin: `(b, R^2)` with the
/// uncentered `R^2 = 1 - SS_res / sum y^2`.
pub fn fit_through_origin(points: &[(f64, f64)]) -> (f64, f64) {
    let sxy: f64 = points.iter().map(|(x, y)| x * y).sum();
    let sxx: f64 = points.iter().map(|(x, _)| x * x).sum();
    let syy: f64 = points.iter().map(|(_, y)| y * y).sum();
    let b = sxy / sxx;
    let ss_res: f64 = points.iter().map(|(x, y)| (y - b * x).powi(2)).sum();
    (b, 1.0 - ss_res / syy)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShapeReport {
    pub pooled_slope: f64,
    pub pooled_r2: f64,
    pub checks: Vec<Check>,
}

impl ShapeReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Properties the figure must show. `scale` multiplies every tolerance:
/// 1 for the full run, 3 for `--fast`.
pub fn shape_checks(fig: &Figure, scale: f64) -> ShapeReport {
    let mut checks = Vec::new();
    let mut codes: Vec<&str> = Vec::new();
    for r in &fig.left {
        if !codes.contains(&r.code.as_str()) {
            codes.push(&r.code);
        }
    }
    let points = |code: Option<&str>| -> Vec<(f64, f64)> {
        fig.left
            .iter()
            .filter(|r| code.is_none_or(|c| r.code == c))
            .filter_map(|r| r.empirical_tmin.filter(|_| r.delta > 0).map(|t| (1.0 / r.delta as f64, t)))
            .collect()
    };
    let pooled = points(None);
    let (slope, r2) = if pooled.is_empty() { (f64::NAN, f64::NAN) } else { fit_through_origin(&pooled) };
    let r2_min = 1.0 - 0.05 * scale;
    checks.push(Check {
        name: "pooled-r2".into(),
        code: "all".into(),
        pass: r2 > r2_min,
        margin: r2 - r2_min,
        params: json!({ "slope": slope, "r2": r2, "points": pooled.len(), "threshold": r2_min }),
    });
    let rel_max = 0.15 * scale;
    for c in &codes {
        let pts = points(Some(c));
        if pts.is_empty() {
            continue;
        }
        let (b, _) = fit_through_origin(&pts);
        let dev = (b - slope).abs() / slope;
        checks.push(Check {
            name: "slope-agreement".into(),
            code: c.to_string(),
            pass: dev <= rel_max,
            margin: rel_max - dev,
            params: json!({ "slope": b, "pooled": slope, "relative_deviation": dev, "tolerance": rel_max }),
        });
    }
    let right = |code: &str, lo: f64, hi: f64| -> Vec<(f64, f64)> {
        fig.right
            .iter()
            .filter(|r| r.code == code && r.rho >= lo * (1.0 - 1e-12) && r.rho <= hi * (1.0 + 1e-12))
            .map(|r| (r.rho, r.proxy_t))
            .collect()
    };
    let place = right("place-adaptive", 0.01, 0.5);
    if !place.is_empty() {
        // Fit c / rho in log space, then measure the worst multiplicative gap.
        let finite = place.iter().all(|(_, t)| t.is_finite());
        let log_c = place.iter().map(|(r, t)| (t * r).ln()).sum::<f64>() / place.len() as f64;
        let c = log_c.exp();
        let worst = place
            .iter()
            .map(|(r, t)| (t * r / c).max(c / (t * r)))
            .fold(1.0, f64::max);
        let factor = 4.0 * scale;
        checks.push(Check {
            name: "place-inverse-rho".into(),
            code: "place-adaptive".into(),
            pass: finite && worst <= factor,
            margin: factor - worst,
            params: json!({ "c": c, "worst_factor": worst, "tolerance": factor, "rho_range": [0.01, 0.5] }),
        });
    }
    let bal = right("grid-adaptive-balanced", 2f64.powi(-19), 0.5);
    if !bal.is_empty() {
        let max = bal.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        let min = bal.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        let ratio = max / min;
        let limit = 4.0 * scale;
        checks.push(Check {
            name: "balanced-flat".into(),
            code: "grid-adaptive-balanced".into(),
            pass: ratio.is_finite() && ratio <= limit,
            margin: limit - ratio,
            params: json!({ "max": max, "min": min, "ratio": ratio, "tolerance": limit, "rho_range": [2f64.powi(-19), 0.5] }),
        });
    }
    ShapeReport {
        pooled_slope: slope,
        pooled_r2: r2,
        checks,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn origin_fit() {
        let (b, r2) = fit_through_origin(&[(1.0, 2.0), (2.0, 4.0), (0.5, 1.0)]);
        assert!((b - 2.0).abs() < 1e-12 && (r2 - 1.0).abs() < 1e-12);
        // Oracle: b = sum xy / sum xx = (1 + 2*3) / (1 + 4) = 1.4; residuals
        // -0.4, 0.2; R^2 = 1 - 0.2 / 10.
        let (b, r2) = fit_through_origin(&[(1.0, 1.0), (2.0, 3.0)]);
        assert!((b - 1.4).abs() < 1e-12);
        assert!((r2 - 0.98).abs() < 1e-12);
    }
}
