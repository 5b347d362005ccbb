//! The exact worst-case time against a direct scan over a fine lattice.

use std::collections::HashMap;

use popcode::analysis::{CellBudget, DiscriminationProfile};
use popcode::codes::Code;
use popcode::geometry::CirclePoint;
use proptest::prelude::*;

/// `min_delta[k]`: smallest statistic over lattice pairs `k` steps apart.
fn scan(code: &Code, steps: usize) -> Vec<usize> {
    let mut ids: HashMap<Vec<usize>, usize> = HashMap::new();
    let mut sets = Vec::new();
    let of: Vec<usize> = (0..steps)
        .map(|i| {
            let set = code.active_set(&CirclePoint::unit(i as f64 / steps as f64).unwrap()).unwrap();
            let next = ids.len();
            *ids.entry(set.to_vec()).or_insert_with(|| {
                sets.push(set);
                next
            })
        })
        .collect();
    let table: Vec<Vec<usize>> = sets.iter().map(|a| sets.iter().map(|b| a.delta(b)).collect()).collect();
    (0..=steps / 2)
        .map(|k| (0..steps).map(|i| table[of[i]][of[(i + k) % steps]]).min().unwrap())
        .collect()
}

fn scan_time(min_delta: &[usize], from: usize) -> f64 {
    let d = min_delta[from..].iter().copied().min().unwrap_or(0);
    if d == 0 { f64::INFINITY } else { 1.0 / d as f64 }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn lattice_aligned_codes_agree(
        fields in prop::collection::vec((0u32..100, 0u32..100), 1..8),
        k in 0usize..=100,
    ) {
        let steps = 200;
        let arcs: Vec<(f64, f64)> = fields.iter().map(|&(a, b)| (a as f64 / 100.0, b as f64 / 100.0)).collect();
        let code = Code::place(3.0, &arcs).unwrap();
        let profile = DiscriminationProfile::new(&code, CellBudget::default()).unwrap();
        let min_delta = scan(&code, steps);
        let rho = k as f64 / steps as f64;
        prop_assert_eq!(profile.t_of_rho(rho).unwrap(), scan_time(&min_delta, k), "rho={}", rho);
    }
}
