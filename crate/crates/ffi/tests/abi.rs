use std::ffi::{CStr, CString};
use std::ptr;

use propchaos_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(pc_last_error()) }.to_string_lossy().into_owned()
}

#[test]
fn kac_run_conserves_energy_and_momentum() {
    unsafe {
        let mut rng = ptr::null_mut();
        assert_eq!(pc_rng_new(7, 0, &mut rng), PcStatus::Ok);
        let mut kernel = ptr::null_mut();
        let spec = CString::new("isotropic").unwrap();
        assert_eq!(pc_kernel_new(3, spec.as_ptr(), &mut kernel), PcStatus::Ok);
        let mut state = ptr::null_mut();
        let (mean, var) = ([0.3, 0.0, -0.1], [1.0; 3]);
        assert_eq!(pc_state_sample_gaussian(3, 200, mean.as_ptr(), var.as_ptr(), rng, &mut state), PcStatus::Ok);

        let (mut e0, mut p0) = (0.0, [0.0; 3]);
        assert_eq!(pc_state_moments(state, &mut e0, p0.as_mut_ptr()), PcStatus::Ok);
        assert_eq!(pc_kac_advance(state, kernel, 2.0, rng), PcStatus::Ok);
        let (mut e1, mut p1) = (0.0, [0.0; 3]);
        assert_eq!(pc_state_moments(state, &mut e1, p1.as_mut_ptr()), PcStatus::Ok);
        assert!((e1 - e0).abs() < 1e-10 * e0);
        for a in 0..3 {
            assert!((p1[a] - p0[a]).abs() < 1e-10);
        }

        let (mut n, mut dim, mut t) = (0usize, 0usize, 0.0);
        assert_eq!(pc_state_shape(state, &mut n, &mut dim, &mut t), PcStatus::Ok);
        assert_eq!((n, dim, t), (200, 3, 2.0));
        let mut buf = vec![0.0; 600];
        assert_eq!(pc_state_coords(state, buf.as_mut_ptr(), 600), PcStatus::Ok);
        assert_eq!(pc_state_coords(state, buf.as_mut_ptr(), 10), PcStatus::InvalidArgument);

        pc_state_free(state);
        pc_kernel_free(kernel);
        pc_rng_free(rng);
    }
}

#[test]
fn metrics_agree_on_one_dimensional_shift() {
    unsafe {
        let xs: Vec<f64> = (0..50).map(|i| i as f64 / 10.0).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x + 0.5).collect();
        let (mut a, mut b) = (ptr::null_mut(), ptr::null_mut());
        assert_eq!(pc_state_new(1, 50, xs.as_ptr(), &mut a), PcStatus::Ok);
        assert_eq!(pc_state_new(1, 50, ys.as_ptr(), &mut b), PcStatus::Ok);
        let (mut w1, mut w2, mut sw, mut se) = (0.0, 0.0, 0.0, 1.0);
        assert_eq!(pc_w1(a, b, &mut w1), PcStatus::Ok);
        assert_eq!(pc_w2(a, b, &mut w2), PcStatus::Ok);
        let mut rng = ptr::null_mut();
        pc_rng_new(1, 1, &mut rng);
        assert_eq!(pc_w2_sliced(a, b, 8, rng, &mut sw, &mut se), PcStatus::Ok);
        for v in [w1, w2, sw] {
            assert!((v - 0.5).abs() < 1e-12);
        }
        let mut tos = 0.0;
        assert_eq!(pc_toscani(a, a, 2.0, 10.0, 100, &mut tos), PcStatus::Ok);
        assert_eq!(tos, 0.0);
        pc_rng_free(rng);
        pc_state_free(a);
        pc_state_free(b);
    }
}

#[test]
fn steady_temperature_depends_on_the_pair_convention() {
    unsafe {
        let mut kernel = ptr::null_mut();
        let spec = CString::new("isotropic").unwrap();
        pc_kernel_new(3, spec.as_ptr(), &mut kernel);
        let (mut ordered, mut unordered) = (0.0, 0.0);
        assert_eq!(pc_steady_temperature(kernel, 0.8, 1.0, true, &mut ordered), PcStatus::Ok);
        assert_eq!(pc_steady_temperature(kernel, 0.8, 1.0, false, &mut unordered), PcStatus::Ok);
        assert!((ordered - 100.0 / 9.0).abs() < 1e-12);
        assert!((unordered - 2.0 * ordered).abs() < 1e-12);
        assert_eq!(pc_steady_temperature(kernel, 1.2, 1.0, true, &mut ordered), PcStatus::InvalidArgument);
        pc_kernel_free(kernel);
    }
}

#[test]
fn errors_are_reported_with_messages() {
    unsafe {
        assert_eq!(pc_rng_uniform(ptr::null_mut(), ptr::null_mut()), PcStatus::NullPointer);
        assert!(last_error().contains("rng"));
        let mut kernel = ptr::null_mut();
        let spec = CString::new("no_such_kernel").unwrap();
        assert_eq!(pc_kernel_new(3, spec.as_ptr(), &mut kernel), PcStatus::InvalidArgument);
        assert!(kernel.is_null());
        assert!(!last_error().is_empty());

        let sub = CString::new("simulate").unwrap();
        let cfg = CString::new("model = \"inelastic_thermostat\"\ndim = 3\nalpha = 2.0\n").unwrap();
        let mut out = ptr::null_mut();
        assert_eq!(pc_run_experiment(sub.as_ptr(), cfg.as_ptr(), 1, &mut out), PcStatus::ConfigError);
        assert!(last_error().contains("alpha"));
        assert!(out.is_null());
    }
}

#[test]
fn run_experiment_matches_the_cli_renderer() {
    let text = "dim = 2\nn = 40\nt_end = 1.0\nmaster_seed = 3\n";
    let cfg_rust = propchaos::cli::ExperimentConfig::parse(text).unwrap().resolve().unwrap();
    let pool = propchaos::parallel::Pool::new(1).unwrap();
    let (expected, _) = propchaos::cli::render(propchaos::cli::Subcommand::Simulate, &cfg_rust, &pool).unwrap();
    unsafe {
        let sub = CString::new("simulate").unwrap();
        let cfg = CString::new(text).unwrap();
        let mut out = ptr::null_mut();
        assert_eq!(pc_run_experiment(sub.as_ptr(), cfg.as_ptr(), 2, &mut out), PcStatus::Ok);
        assert_eq!(CStr::from_ptr(out).to_str().unwrap(), expected);
        pc_string_free(out);

        let check = CString::new("check").unwrap();
        let empty = CString::new("").unwrap();
        let mut out = ptr::null_mut();
        assert_eq!(pc_run_experiment(check.as_ptr(), empty.as_ptr(), 1, &mut out), PcStatus::Ok);
        assert!(CStr::from_ptr(out).to_str().unwrap().contains("check,passed,detail"));
        pc_string_free(out);
    }
}
