//! Poisson spike-count simulation and the count-threshold test.
//!
//! Every trial draws from its own ChaCha8 stream keyed by
//! `(master_seed, hypothesis, trial)`, so results do not depend on how
//! rayon schedules the trials. The key does not include `T`: scanning a
//! time grid reuses the same streams at every `T`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Poisson};
use rayon::prelude::*;
use serde::Serialize;

use crate::codes::{ActiveSet, Code};
use crate::geometry::CirclePoint;
use crate::{Error, Result};

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

fn poisson(mean: f64) -> Poisson<f64> {
    Poisson::new(mean).expect("positive finite Poisson mean")
}

/// Spike counts `N^i_T` of every neuron on stimulus `s`.
pub fn simulate_counts<R: Rng + ?Sized>(code: &Code, s: &CirclePoint, t: f64, rng: &mut R) -> Result<Vec<u64>> {
    check_time(t)?;
    let active = code.active_set(s)?;
    let (hi, lo) = (poisson(t * code.mu()), poisson(t));
    Ok((0..code.n())
        .map(|i| {
            let d = if active.contains(i) { &hi } else { &lo };
            d.sample(rng) as u64
        })
        .collect())
}

/// Spike times on `[0, T)` for every neuron, by exponential gaps. Only for
/// illustration: the test needs counts alone.
pub fn simulate_spike_times<R: Rng + ?Sized>(code: &Code, s: &CirclePoint, t: f64, rng: &mut R) -> Result<Vec<Vec<f64>>> {
    check_time(t)?;
    let rates = code.rates(s)?;
    Ok(rates
        .iter()
        .map(|&r| {
            let mut times = Vec::new();
            let mut now = 0.0;
            loop {
                let gap: f64 = Exp1.sample(rng);
                now += gap / r;
                if now >= t {
                    break times;
                }
                times.push(now);
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Decision {
    S1,
    S2,
}

/// The test in a fixed orientation: `first` is the stimulus whose exclusive
/// active neurons `diff` are the larger set difference.
#[derive(Debug, Clone)]
struct Oriented {
    diff: Vec<usize>,
    swapped: bool,
}

impl Oriented {
    fn new(code: &Code, a: &ActiveSet, b: &ActiveSet) -> Result<Self> {
        let ab = a.minus_count(b);
        let ba = b.minus_count(a);
        if ab.max(ba) == 0 {
            return Err(Error::IndistinguishablePair);
        }
        let (first, second, swapped) = if ab >= ba { (a, b, false) } else { (b, a, true) };
        let diff = (0..code.n()).filter(|&i| first.contains(i) && !second.contains(i)).collect();
        Ok(Oriented { diff, swapped })
    }

    fn delta(&self) -> usize {
        self.diff.len()
    }

    /// `Z > Delta T (mu + 1) / 2` picks the first stimulus; ties go to the
    /// second.
    fn picks_first(z: u64, delta: usize, t: f64, mu: f64) -> bool {
        z as f64 > delta as f64 * t * (mu + 1.0) / 2.0
    }

    fn label(&self, first: bool) -> Decision {
        match (first, self.swapped) {
            (true, false) | (false, true) => Decision::S1,
            _ => Decision::S2,
        }
    }
}

/// The optimal test between `s1` and `s2` given the spike counts of all
/// neurons. Only the neurons active on the oriented first stimulus and not on
/// the second enter the statistic `Z`.
pub fn optimal_test(code: &Code, s1: &CirclePoint, s2: &CirclePoint, counts: &[u64], t: f64) -> Result<Decision> {
    check_time(t)?;
    if counts.len() != code.n() {
        return Err(Error::Domain {
            value: counts.len() as f64,
            domain: "one count per neuron",
        });
    }
    let o = Oriented::new(code, &code.active_set(s1)?, &code.active_set(s2)?)?;
    let z: u64 = o.diff.iter().map(|&i| counts[i]).sum();
    Ok(o.label(Oriented::picks_first(z, o.delta(), t, code.mu())))
}

/// Error counts of the test under both hypotheses at one observation time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialBatch {
    pub code_id: String,
    pub theta1: f64,
    pub theta2: f64,
    pub t: f64,
    pub trials: u64,
    /// Trials under `s1` where the test answered `s2`.
    pub err_1_to_2: u64,
    /// Trials under `s2` where the test answered `s1`.
    pub err_2_to_1: u64,
    pub master_seed: u64,
}

impl TrialBatch {
    pub const CSV_HEADER: &'static str = "code_id,theta1,theta2,T,trials,err12,err21,seed";

    /// `max(err_1_to_2, err_2_to_1) / trials`.
    pub fn p_hat(&self) -> f64 {
        self.err_1_to_2.max(self.err_2_to_1) as f64 / self.trials as f64
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{:.16e},{:.16e},{:.16e},{},{},{},{}",
            self.code_id, self.theta1, self.theta2, self.t, self.trials, self.err_1_to_2, self.err_2_to_1, self.master_seed
        )
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of the stream for one `(hypothesis, trial)` under `master`.
pub fn trial_seed(master: u64, hypothesis: u8, trial: u64) -> u64 {
    splitmix(splitmix(splitmix(master) ^ hypothesis as u64) ^ trial)
}

/// Derives an independent master seed for a sub-experiment.
pub fn derive_seed(master: u64, key: u64) -> u64 {
    splitmix(splitmix(master) ^ splitmix(key.wrapping_add(0x5eed)))
}

/// Errors in the oriented frame: `(under first, under second)`. Under the
/// first stimulus the `delta` neurons of `Z` fire at `mu`, under the second
/// at 1; the other neurons cannot change the decision and are not drawn.
fn oriented_errors(delta: usize, mu: f64, t: f64, trials: u64, seed: u64) -> (u64, u64) {
    let count = |hypothesis: u8, rate: f64, wrong_if_first: bool| -> u64 {
        let d = poisson(t * rate);
        (0..trials)
            .into_par_iter()
            .map(|k| {
                let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(seed, hypothesis, k));
                let z: u64 = (0..delta).map(|_| d.sample(&mut rng) as u64).sum();
                (Oriented::picks_first(z, delta, t, mu) == wrong_if_first) as u64
            })
            .sum()
    };
    (count(0, mu, false), count(1, 1.0, true))
}

fn batch(code_id: &str, s1: &CirclePoint, s2: &CirclePoint, t: f64, trials: u64, seed: u64, o: &Oriented, mu: f64) -> TrialBatch {
    let (e_first, e_second) = oriented_errors(o.delta(), mu, t, trials, seed);
    let (err_1_to_2, err_2_to_1) = if o.swapped { (e_second, e_first) } else { (e_first, e_second) };
    TrialBatch {
        code_id: code_id.to_string(),
        theta1: s1.theta(),
        theta2: s2.theta(),
        t,
        trials,
        err_1_to_2,
        err_2_to_1,
        master_seed: seed,
    }
}

fn check_trials(trials: u64) -> Result<()> {
    if trials == 0 {
        Err(Error::Domain {
            value: 0.0,
            domain: "trials >= 1",
        })
    } else {
        Ok(())
    }
}

/// Runs `trials` simulations of the test under each hypothesis.
pub fn estimate_error(
    code: &Code,
    code_id: &str,
    s1: &CirclePoint,
    s2: &CirclePoint,
    t: f64,
    trials: u64,
    master_seed: u64,
) -> Result<TrialBatch> {
    check_time(t)?;
    check_trials(trials)?;
    let o = Oriented::new(code, &code.active_set(s1)?, &code.active_set(s2)?)?;
    Ok(batch(code_id, s1, s2, t, trials, master_seed, &o, code.mu()))
}

/// Smallest `T` of the ascending grid whose estimated error is at most
/// `alpha`, or `None`. Pairs with `Delta = 0` are never found.
pub fn empirical_tmin(
    code: &Code,
    s1: &CirclePoint,
    s2: &CirclePoint,
    alpha: f64,
    t_grid: &[f64],
    trials: u64,
    master_seed: u64,
) -> Result<Option<f64>> {
    Ok(scan_tmin(code, s1, s2, alpha, t_grid, trials, master_seed)?.map(|b| b.t))
}

/// Like [`empirical_tmin`], returning the batch that met `alpha`.
pub fn scan_tmin(
    code: &Code,
    s1: &CirclePoint,
    s2: &CirclePoint,
    alpha: f64,
    t_grid: &[f64],
    trials: u64,
    master_seed: u64,
) -> Result<Option<TrialBatch>> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain {
            value: alpha,
            domain: "0 < alpha < 1",
        });
    }
    check_trials(trials)?;
    if t_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config("time grid must be strictly ascending".into()));
    }
    let o = match Oriented::new(code, &code.active_set(s1)?, &code.active_set(s2)?) {
        Ok(o) => o,
        Err(Error::IndistinguishablePair) => return Ok(None),
        Err(e) => return Err(e),
    };
    for &t in t_grid {
        check_time(t)?;
        let b = batch("", s1, s2, t, trials, master_seed, &o, code.mu());
        if b.p_hat() <= alpha {
            return Ok(Some(b));
        }
    }
    Ok(None)
}

/// Fraction of `draws` uniform arcs `[[A, B[[` on `S^lambda` containing both
/// `0` and `gap`.
pub fn interval_cover_frequency(gap: f64, lambda: f64, draws: u64, seed: u64) -> Result<f64> {
    if !(lambda > 0.0 && (0.0..lambda).contains(&gap)) {
        return Err(Error::Domain {
            value: gap,
            domain: "0 <= gap < lambda",
        });
    }
    let s1 = CirclePoint::new(0.0, lambda)?;
    let s2 = CirclePoint::new(gap, lambda)?;
    let hits: u64 = (0..draws)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(seed, 2, k));
            let a = rng.random::<f64>() * lambda;
            let b = rng.random::<f64>() * lambda;
            let arc = crate::geometry::Arc::from_angles(a, b, lambda).expect("finite angles");
            (arc.contains(&s1).unwrap() && arc.contains(&s2).unwrap()) as u64
        })
        .sum();
    Ok(hits as f64 / draws as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(t: f64) -> CirclePoint {
        CirclePoint::unit(t).unwrap()
    }

    #[test]
    fn count_means() {
        let code = Code::adaptive_place(4, 30.0).unwrap();
        let s = p(0.3);
        let active = code.active_set(&s).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let t = 0.2;
        let reps = 100_000;
        let mut sums = vec![0u64; 4];
        for _ in 0..reps {
            for (acc, c) in sums.iter_mut().zip(simulate_counts(&code, &s, t, &mut rng).unwrap()) {
                *acc += c;
            }
        }
        for (i, &s) in sums.iter().enumerate() {
            let mean = if active.contains(i) { t * 30.0 } else { t };
            let sigma = (mean / reps as f64).sqrt();
            let got = s as f64 / reps as f64;
            assert!((got - mean).abs() < 3.0 * sigma, "neuron {i}: {got} vs {mean}");
        }
        assert!(simulate_counts(&code, &s, 0.0, &mut rng).is_err());
    }

    #[test]
    fn spike_times_sorted_within_window() {
        let code = Code::adaptive_place(3, 5.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let trains = simulate_spike_times(&code, &p(0.1), 2.0, &mut rng).unwrap();
        assert_eq!(trains.len(), 3);
        for tr in trains {
            assert!(tr.windows(2).all(|w| w[0] < w[1]));
            assert!(tr.iter().all(|&x| (0.0..2.0).contains(&x)));
        }
    }

    #[test]
    fn test_edges() {
        let code = Code::adaptive_place(10, 30.0).unwrap();
        // I_{0.6} has 7 exclusive neurons against 3, so no relabelling.
        let (s1, s2) = (p(0.6), p(0.1));
        let zeros = vec![0u64; 10];
        assert_eq!(optimal_test(&code, &s1, &s2, &zeros, 1.0).unwrap(), Decision::S2);
        let i1 = code.active_set(&s1).unwrap();
        let means: Vec<u64> = (0..10).map(|i| if i1.contains(i) { 30 } else { 1 }).collect();
        assert_eq!(optimal_test(&code, &s1, &s2, &means, 1.0).unwrap(), Decision::S1);
        assert_eq!(optimal_test(&code, &s1, &s1, &zeros, 1.0), Err(Error::IndistinguishablePair));
    }

    #[test]
    fn tie_goes_to_s2() {
        // One neuron differs; threshold 1 * 2 * (3 + 1) / 2 = 4.
        let code = Code::place(3.0, &[(0.0, 0.5)]).unwrap();
        let (s1, s2) = (p(0.1), p(0.6));
        assert_eq!(optimal_test(&code, &s1, &s2, &[4], 2.0).unwrap(), Decision::S2);
        assert_eq!(optimal_test(&code, &s1, &s2, &[5], 2.0).unwrap(), Decision::S1);
        // Swapped orientation: Z counts the same neuron, now for s2.
        assert_eq!(optimal_test(&code, &s2, &s1, &[4], 2.0).unwrap(), Decision::S1);
        assert_eq!(optimal_test(&code, &s2, &s1, &[5], 2.0).unwrap(), Decision::S2);
    }

    #[test]
    fn estimate_is_pool_independent() {
        let code = Code::adaptive_place(20, 5.0).unwrap();
        let run = |threads| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| estimate_error(&code, "a", &p(0.1), &p(0.2), 0.1, 2000, 99).unwrap())
        };
        let one = run(1);
        assert_eq!(one, run(4));
        assert_eq!(one, run(16));
        assert!(one.err_1_to_2 <= one.trials && one.err_2_to_1 <= one.trials);
    }

    #[test]
    fn huge_time_never_errs() {
        let code = Code::adaptive_place(20, 30.0).unwrap();
        let b = estimate_error(&code, "a", &p(0.1), &p(0.3), 10.0, 2000, 3).unwrap();
        assert_eq!(b.p_hat(), 0.0);
    }

    #[test]
    fn tmin_not_found_for_equal_active_sets() {
        let code = Code::adaptive_place(4, 30.0).unwrap();
        let grid = [0.1, 1.0, 10.0];
        assert_eq!(empirical_tmin(&code, &p(0.01), &p(0.02), 0.05, &grid, 100, 1).unwrap(), None);
    }

    #[test]
    fn csv_row_shape() {
        let b = TrialBatch {
            code_id: "x".into(),
            theta1: 1.0 / 3.0,
            theta2: 0.5,
            t: 0.1,
            trials: 10,
            err_1_to_2: 1,
            err_2_to_1: 2,
            master_seed: 5,
        };
        assert_eq!(b.csv_row(), "x,3.3333333333333331e-1,5.0000000000000000e-1,1.0000000000000001e-1,10,1,2,5");
        assert_eq!(b.p_hat(), 0.2);
    }
}
