//! Closed-form bounds against exact worst-case times on small codes.

use popcode::analysis::{t_of_rho_exact, CellBudget};
use popcode::codes::{Code, Inner, ModuleSpec};
use popcode::theory::{
    adaptive_place_sandwich, grid_adaptive_upper_bound, grid_lower_bound, place_lower_bound, random_grid_target,
    random_place_target, GridSpec,
};
use popcode::Error;
use proptest::prelude::*;

fn budget() -> CellBudget {
    CellBudget::with_cells(1 << 12)
}

/// Scales `1, 1/r1, 1/(r1 r2), ...` with ratios in {2, 3, 4}.
fn grid_strategy() -> impl Strategy<Value = Vec<ModuleSpec>> {
    prop::collection::vec((1usize..6, 2u32..5), 1..4).prop_map(|mods| {
        let mut lambda = 1.0;
        mods.iter()
            .enumerate()
            .map(|(i, &(n, r))| {
                if i > 0 {
                    lambda /= r as f64;
                }
                ModuleSpec { n, lambda }
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn adaptive_place_between_its_bounds(n in 1usize..60, rho in 0.0f64..=0.5) {
        let code = Code::adaptive_place(n, 30.0).unwrap();
        let t = t_of_rho_exact(&code, rho, budget()).unwrap();
        let (lo, hi) = adaptive_place_sandwich(n, rho).unwrap();
        prop_assert!(lo <= t && t <= hi, "n={n} rho={rho}: {lo} <= {t} <= {hi}");
    }

    #[test]
    fn place_codes_respect_the_class_bound(n in 1usize..25, seed in any::<u64>(), rho in 0.0f64..=0.5) {
        let code = Code::random_place(n, 5.0, seed).unwrap();
        let t = t_of_rho_exact(&code, rho, budget()).unwrap();
        prop_assert!(t >= place_lower_bound(n, rho).unwrap());
    }

    #[test]
    fn grid_codes_between_class_lower_and_adaptive_upper(spec in grid_strategy(), rho in 0.0f64..=0.5, seed in any::<u64>()) {
        let g = GridSpec::new(spec.clone()).unwrap();
        let adaptive = Code::grid(&spec, &Inner::Adaptive, 30.0).unwrap();
        let random = Code::grid(&spec, &Inner::Random { seed }, 30.0).unwrap();
        let lower = match grid_lower_bound(&g, rho) {
            Ok(b) => Some(b),
            Err(Error::HypothesisUnmet(_)) => None,
            Err(e) => panic!("{e}"),
        };
        for code in [&adaptive, &random] {
            let t = match t_of_rho_exact(code, rho, budget()) {
                Ok(t) => t,
                Err(Error::CellBudgetExceeded { .. }) => return Ok(()),
                Err(e) => panic!("{e}"),
            };
            if let Some(b) = lower {
                prop_assert!(t >= b.value, "{spec:?} rho={rho}: {t} < {}", b.value);
                if b.scale_degenerate || b.range_degenerate {
                    prop_assert!(t.is_infinite());
                }
            }
        }
        let t = t_of_rho_exact(&adaptive, rho, budget()).unwrap();
        let up = grid_adaptive_upper_bound(&g, rho).unwrap();
        prop_assert!(t <= up.value, "{spec:?} rho={rho}: {t} > {}", up.value);
        if up.in_adaptive_range && rho > 0.0 {
            prop_assert!(up.sandwich_lower <= t && t <= up.sandwich_upper.max(up.value));
        }
    }
}

#[test]
fn balanced_grid_sandwich_exact() {
    for (n, m) in [(20, 4), (40, 8), (100, 5), (100, 6)] {
        let code = Code::balanced_grid(n, m, &Inner::Adaptive, 30.0).unwrap();
        let per = (n / m) as f64;
        for k in 0..=20 {
            let rho = 0.5f64.powi(m as i32) * (2f64.powi(m as i32 - 1)).powf(k as f64 / 20.0);
            let t = t_of_rho_exact(&code, rho.min(0.5), budget()).unwrap();
            assert!(1.0 / (3.0 * per) < t && t < 16.0 / per, "n={n} m={m} rho={rho}: {t}");
        }
    }
}

#[test]
fn random_place_codes_adapt_far_away() {
    // With delta = 0.1, the target 1 / ceil(0.1 n rho) should hold for most
    // draws once rho is of order 1 / sqrt(n).
    let n = 400;
    let rhos = [0.2, 0.3, 0.4, 0.5];
    let seeds = 30;
    let mut ok = 0;
    for seed in 0..seeds {
        let code = Code::random_place(n, 30.0, seed).unwrap();
        let profile = popcode::analysis::DiscriminationProfile::new(&code, budget()).unwrap();
        ok += rhos
            .iter()
            .filter(|&&r| profile.t_of_rho(r).unwrap() <= random_place_target(n, r, 0.1))
            .count();
    }
    let frac = ok as f64 / (seeds as usize * rhos.len()) as f64;
    assert!(frac >= 0.95, "fraction {frac}");
}

#[test]
fn random_grid_codes_meet_their_target() {
    let spec = vec![
        ModuleSpec { n: 20, lambda: 1.0 },
        ModuleSpec { n: 20, lambda: 0.5 },
        ModuleSpec { n: 20, lambda: 0.25 },
    ];
    let target = random_grid_target(&GridSpec::new(spec.clone()).unwrap());
    assert_eq!(target, 0.8);
    let mut ok = 0;
    let mut total = 0;
    for seed in 0..20 {
        let code = Code::grid(&spec, &Inner::Random { seed }, 30.0).unwrap();
        let profile = popcode::analysis::DiscriminationProfile::new(&code, budget()).unwrap();
        for k in 0..=8 {
            let rho = 0.1 + 0.05 * k as f64;
            total += 1;
            ok += (profile.t_of_rho(rho).unwrap() <= target) as usize;
        }
    }
    assert!(ok as f64 >= 0.9 * total as f64, "{ok}/{total}");
}
