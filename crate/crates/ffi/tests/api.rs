use std::ffi::{c_void, CStr};
use std::ptr;

use rwm_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(rwm_last_error_message()) }
        .to_string_lossy()
        .into_owned()
}

#[test]
fn transition_probabilities_and_errors() {
    let (mut p, mut q) = (0.0, 0.0);
    unsafe {
        assert_eq!(rwm_transition_probabilities(0, 0.1, 0, &mut p, &mut q), RwmStatus::Ok);
        assert_eq!((p, q), (0.5, 0.5));
        assert_eq!(rwm_transition_probabilities(6, 0.1, 0, &mut p, &mut q), RwmStatus::Ok);
        assert_eq!((p, q), (1.0, 0.0));
        assert_eq!(
            rwm_transition_probabilities(1, 0.0, 0, &mut p, &mut q),
            RwmStatus::InvalidArgument
        );
        assert!(last_error().contains("delta must lie in (0, 0.5]"), "{}", last_error());
        assert_eq!(
            rwm_transition_probabilities(1, 0.1, 0, ptr::null_mut(), &mut q),
            RwmStatus::NullPointer
        );
        assert_eq!(last_error(), "p is null");
    }
}

#[test]
fn rng_matches_core_stream() {
    let mut core = rwm_core::SimRng::from_seed(9);
    unsafe {
        let rng = rwm_rng_new(9);
        for _ in 0..100 {
            let mut u = 0;
            assert_eq!(rwm_rng_next_u64(rng, &mut u), RwmStatus::Ok);
            assert_eq!(u, core.next_u64());
        }
        let mut x = 0.0;
        assert_eq!(rwm_rng_standard_normal(rng, &mut x), RwmStatus::Ok);
        assert_eq!(x, core.standard_normal());
        rwm_rng_free(rng);
        rwm_rng_free(ptr::null_mut());
        assert_eq!(rwm_rng_uniform(ptr::null_mut(), &mut x), RwmStatus::NullPointer);
    }
}

#[test]
fn trajectories_round_trip() {
    unsafe {
        let rng = rwm_rng_new(3);
        let mut t = ptr::null_mut();
        assert_eq!(rwm_simulate_path(0.05, 0, 200, rng, &mut t), RwmStatus::Ok);
        let len = rwm_trajectory_len(t);
        assert_eq!(len, 201);
        let mut xs = vec![0i32; len];
        let mut vs = vec![0u32; len];
        assert_eq!(
            rwm_trajectory_positions(t, xs.as_mut_ptr(), len - 1),
            RwmStatus::BufferTooSmall
        );
        assert_eq!(rwm_trajectory_positions(t, xs.as_mut_ptr(), len), RwmStatus::Ok);
        assert_eq!(rwm_trajectory_visits(t, vs.as_mut_ptr(), len), RwmStatus::Ok);
        let expected = rwm_core::walk::simulate_path(
            &rwm_core::ModificationParams::new(0.05).unwrap(),
            200,
            &mut rwm_core::SimRng::from_seed(3),
        )
        .unwrap();
        assert_eq!(xs, expected.positions);
        assert_eq!(vs, expected.visits);
        rwm_trajectory_free(t);
        rwm_rng_free(rng);

        let bad = [0, 2];
        assert_eq!(
            rwm_trajectory_from_positions(bad.as_ptr(), 2, &mut t),
            RwmStatus::InvalidArgument
        );
        assert_eq!(rwm_trajectory_len(ptr::null()), 0);
    }
}

#[test]
fn density_matches_enumerated_probability() {
    // Path probability under the modified walk equals density * 2^-m.
    let delta = 0.2;
    let positions = [0, 1, 0, -1, 0, 1, 2];
    let params = rwm_core::ModificationParams::new(delta).unwrap();
    let traj = rwm_core::Trajectory::from_positions(positions.to_vec()).unwrap();
    let prob: f64 = traj
        .increments()
        .enumerate()
        .map(|(k, xi)| {
            let (p, q) = rwm_core::walk::transition_probabilities(traj.visits[k], &params);
            if xi > 0 {
                p
            } else {
                q
            }
        })
        .product();
    unsafe {
        let mut t = ptr::null_mut();
        assert_eq!(
            rwm_trajectory_from_positions(positions.as_ptr(), positions.len(), &mut t),
            RwmStatus::Ok
        );
        let mut rho = 0.0;
        assert_eq!(rwm_discrete_density(t, delta, 0, &mut rho), RwmStatus::Ok);
        assert!((rho * 0.5f64.powi(6) - prob).abs() < 1e-15);
        assert_eq!(
            rwm_discrete_density(ptr::null(), delta, 0, &mut rho),
            RwmStatus::NullPointer
        );
        rwm_trajectory_free(t);
    }
}

#[test]
fn last_return_and_truncation() {
    unsafe {
        let rng = rwm_rng_new(11);
        let mut s = RwmReturnSummary {
            returns_count: 9,
            last_return: 9,
            truncation_bias_bound: 9.0,
            steps: 9,
        };
        assert_eq!(rwm_simulate_to_last_return(0.5, 3, 10, rng, &mut s), RwmStatus::Ok);
        assert_eq!((s.returns_count, s.last_return, s.truncation_bias_bound), (0, 0, 0.0));
        // A tiny bias with a huge barrier cannot escape within 10 steps.
        assert_eq!(
            rwm_simulate_to_last_return(1e-9, 1_000_000, 10, rng, &mut s),
            RwmStatus::Truncated
        );
        assert_eq!(s.steps, 10);
        assert_eq!(s.truncation_bias_bound, 1.0);
        rwm_rng_free(rng);
    }
}

#[test]
fn analytics_wrappers() {
    let mut v = 0.0;
    let mut finite = false;
    unsafe {
        assert_eq!(rwm_returns_survival(3, 0.05, &mut v), RwmStatus::Ok);
        assert!((v - 0.504).abs() < 1e-15);
        assert_eq!(rwm_returns_survival(3, 0.6, &mut v), RwmStatus::InvalidArgument);
        assert_eq!(rwm_slope_limit_cdf(0.0, 1.0, &mut v), RwmStatus::Ok);
        assert_eq!(v, 0.0);
        assert_eq!(rwm_slope_limit_cdf(1.0, -1.0, &mut v), RwmStatus::InvalidArgument);
        assert_eq!(rwm_return_time_transform(1.0, 0.6, &mut v), RwmStatus::Ok);
        assert!((v - 0.8).abs() < 1e-12);
        assert_eq!(rwm_return_time_transform(1.5, 0.6, &mut v), RwmStatus::InvalidArgument);
        assert_eq!(rwm_expected_return_time(0.6, &mut v, &mut finite), RwmStatus::Ok);
        assert!(finite && (v - 4.8).abs() < 1e-12);
        assert_eq!(
            rwm_expected_last_return(0.25, RwmLastReturnVariant::PaperDisplay, &mut v),
            RwmStatus::Ok
        );
        assert!((v - 9.0).abs() < 1e-12);
    }
    assert!((rwm_rayleigh_cdf((2.0 * 2f64.ln()).sqrt()) - 0.5).abs() < 1e-15);
    assert_eq!(rwm_derive_seed(1, 2), rwm_core::derive_seed(1, 2));
}

unsafe extern "C" fn scaled_uniform(x: f64, data: *mut c_void) -> f64 {
    let width = *(data as *const f64);
    (x / width).clamp(0.0, 1.0)
}

#[test]
fn ks_wrappers() {
    let mut r = RwmKsResult {
        statistic: -1.0,
        n_effective: 0.0,
        p_value: 0.0,
    };
    let mut width = 2.0f64;
    let xs = [1.0];
    unsafe {
        let data = (&mut width as *mut f64).cast();
        assert_eq!(
            rwm_ks_one_sample(xs.as_ptr(), 1, Some(scaled_uniform), data, &mut r),
            RwmStatus::Ok
        );
        assert_eq!(r.statistic, 0.5);
        assert_eq!(
            rwm_ks_one_sample(xs.as_ptr(), 1, None, data, &mut r),
            RwmStatus::NullPointer
        );
        assert_eq!(
            rwm_ks_one_sample(ptr::null(), 0, Some(scaled_uniform), data, &mut r),
            RwmStatus::SampleTooSmall
        );
        let a = [0.0];
        let b = [1.0];
        assert_eq!(rwm_ks_two_sample(a.as_ptr(), 1, b.as_ptr(), 1, &mut r), RwmStatus::Ok);
        assert_eq!(r.statistic, 1.0);
        let mut p = 0.0;
        assert_eq!(rwm_ks_pvalue(0.0, 100.0, &mut p), RwmStatus::Ok);
        assert_eq!(p, 1.0);
        assert_eq!(rwm_ks_pvalue(2.0, 100.0, &mut p), RwmStatus::InvalidArgument);
    }
}
