//! The simulated walk against a direct enumeration of its path law.

use std::collections::HashMap;

use proptest::prelude::*;
use rwm_core::limits::discrete_density;
use rwm_core::walk::simulate_path;
use rwm_core::{ModificationParams, SimRng, Trajectory};
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Probability of the increment sequence encoded in the low `m` bits of `code`,
/// written out from the transition rule with no library code involved.
fn oracle(code: u32, m: usize, delta: f64, cap: Option<u32>) -> (Vec<i32>, f64) {
    let mut x = 0i32;
    let mut visits = 1u32;
    let mut prob = 1.0;
    let mut positions = vec![0];
    for k in 0..m {
        let v = cap.map_or(visits, |c| visits.min(c));
        let p = (0.5 + f64::from(v) * delta).min(1.0);
        let up = code >> k & 1 == 1;
        prob *= if up { p } else { 1.0 - p };
        x += if up { 1 } else { -1 };
        visits += u32::from(x == 0);
        positions.push(x);
    }
    (positions, prob)
}

#[test]
fn density_reproduces_enumerated_law() {
    for delta in [0.05, 0.2, 0.5] {
        for cap in [None, Some(1), Some(3)] {
            let mut params = ModificationParams::new(delta).unwrap();
            if let Some(c) = cap {
                params = params.with_cap(c).unwrap();
            }
            for m in [1usize, 5, 12] {
                let mut total = 0.0;
                for code in 0..1u32 << m {
                    let (positions, prob) = oracle(code, m, delta, cap);
                    let traj = Trajectory::from_positions(positions).unwrap();
                    let rho = discrete_density(&traj, &params);
                    assert!(
                        (rho * 0.5f64.powi(m as i32) - prob).abs() <= 1e-12,
                        "delta {delta} cap {cap:?} code {code}"
                    );
                    total += prob;
                }
                assert!((total - 1.0).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn simulated_paths_follow_enumerated_law() {
    const M: usize = 6;
    const N: usize = 200_000;
    let delta = 0.2;
    let params = ModificationParams::new(delta).unwrap();
    let mut rng = SimRng::from_seed(2024);
    let mut counts: HashMap<Vec<i32>, u64> = HashMap::new();
    for _ in 0..N {
        let t = simulate_path(&params, M, &mut rng).unwrap();
        *counts.entry(t.positions).or_default() += 1;
    }
    let mut chi2 = 0.0;
    let mut cells = 0;
    for code in 0..1u32 << M {
        let (positions, prob) = oracle(code, M, delta, None);
        let observed = counts.remove(&positions).unwrap_or(0) as f64;
        if prob == 0.0 {
            assert_eq!(observed, 0.0);
            continue;
        }
        chi2 += (observed - N as f64 * prob).powi(2) / (N as f64 * prob);
        cells += 1;
    }
    assert!(counts.is_empty(), "impossible paths were sampled");
    let p = 1.0 - ChiSquared::new((cells - 1) as f64).unwrap().cdf(chi2);
    assert!(p > 1e-4, "chi-square {chi2} on {cells} cells, p = {p}");
}

proptest! {
    #[test]
    fn simulated_trajectories_are_consistent(
        seed in any::<u64>(),
        delta in 1e-4f64..=0.5,
        steps in 1usize..300,
        cap in proptest::option::of(1u32..10),
    ) {
        let mut params = ModificationParams::new(delta).unwrap();
        if let Some(c) = cap {
            params = params.with_cap(c).unwrap();
        }
        let t = simulate_path(&params, steps, &mut SimRng::from_seed(seed)).unwrap();
        prop_assert_eq!(t.positions.len(), steps + 1);
        let rebuilt = Trajectory::from_positions(t.positions.clone()).unwrap();
        prop_assert_eq!(&rebuilt.visits, &t.visits);
        // Every sampled path has positive probability, and the same seed replays it.
        prop_assert!(discrete_density(&t, &params) > 0.0);
        let again = simulate_path(&params, steps, &mut SimRng::from_seed(seed)).unwrap();
        prop_assert_eq!(again, t);
    }
}
