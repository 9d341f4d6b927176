use super::*;
use crate::fitting::{fit, initial_guess, DressedDipModel};
use crate::lineshape::{ensemble_spectrum, lorentzian_signal, lorentzian_spectrum, Damping, StrainDistribution};
use crate::spectrum::linear_grid;
use crate::spin::{DriveConfig, PhysicalEnvironment, DEFAULT_DD_DT_MHZ_PER_K};

const DD: f64 = DEFAULT_DD_DT_MHZ_PER_K;

fn lorentz_curve(w: f64, c: f64) -> impl Fn(f64) -> f64 {
    move |nu| lorentzian_signal(nu, &[2870.0], &[w], &[c])
}

#[test]
fn slope_eta_scales_with_rate_and_dd_dt() {
    let a = slope_sensitivity_curve(lorentz_curve(2.0, 0.02), (2860.0, 2880.0), 1e6, DD).unwrap();
    let b = slope_sensitivity_curve(lorentz_curve(2.0, 0.02), (2860.0, 2880.0), 2e6, DD).unwrap();
    let c = slope_sensitivity_curve(lorentz_curve(2.0, 0.02), (2860.0, 2880.0), 1e6, 0.5 * DD).unwrap();
    assert!((b.eta_slope / a.eta_slope - 0.5f64.sqrt()).abs() < 1e-12);
    assert!((c.eta_slope / a.eta_slope - 2.0).abs() < 1e-12);
}

#[test]
fn rate_scaling_exact_for_both_figures() {
    let budget = NoiseBudget::new(1e6).unwrap();
    let quad = NoiseBudget::new(4e6).unwrap();
    let a = linewidth_sensitivity(1.0, 0.01, &budget, DD).unwrap();
    let b = linewidth_sensitivity(1.0, 0.01, &quad, DD).unwrap();
    assert!((b / a - 0.5).abs() < 1e-15);
}

#[test]
fn linewidth_examples() {
    let budget = NoiseBudget::new(1e6).unwrap();
    let eta = linewidth_sensitivity(1.0, 0.01, &budget, DD).unwrap();
    assert!((eta - 1.0375).abs() < 1e-4, "{eta}");
    let doubled = linewidth_sensitivity(1.0, 0.02, &budget, DD).unwrap();
    assert!((doubled / eta - 0.5).abs() < 1e-15);
    let ratio = linewidth_sensitivity(7.92, 0.01, &budget, DD).unwrap()
        / linewidth_sensitivity(1.91, 0.01, &budget, DD).unwrap();
    assert!((ratio - 4.147).abs() < 5e-4);
    assert!((ratio - 7.92 / 1.91).abs() < 1e-12);
    assert!(linewidth_sensitivity(0.0, 0.01, &budget, DD).is_err());
    assert!(linewidth_sensitivity(1.0, -0.01, &budget, DD).is_err());
    assert!(NoiseBudget::new(0.0).is_err());
}

#[test]
fn lorentzian_slope_and_linewidth_agree() {
    let budget = NoiseBudget::new(1e6).unwrap();
    for (w, c) in [(1.0, 0.01), (1.91, 0.03), (7.92, 0.02)] {
        let s = slope_sensitivity_curve(lorentz_curve(w, c), (2840.0, 2900.0), 1e6, DD).unwrap();
        let l = linewidth_sensitivity(w, c, &budget, DD).unwrap();
        assert!((s.eta_slope / l - 1.0).abs() < 0.05, "{w} {c}: {}", s.eta_slope / l);
        assert!(((s.best_frequency - 2870.0).abs() - w / (2.0 * 3f64.sqrt())).abs() < 1e-4);
    }
}

#[test]
fn flat_curve_has_no_sensitivity() {
    let r = slope_sensitivity_curve(|_| 1.0, (2860.0, 2880.0), 1e6, DD);
    assert!(matches!(r, Err(Error::NoSensitivity)));
    assert!(slope_sensitivity_curve(lorentz_curve(1.0, 0.1), (2860.0, 2880.0), 1e6, 0.0).is_err());
}

fn lorentz_fit(center: f64) -> FitResult {
    let spec = lorentzian_spectrum(&[center], &[3.0], &[0.03], &linear_grid(2855.0, 2885.0, 301)).unwrap();
    let model = FitModel::lorentzian(1);
    fit(&spec, &model, &initial_guess(&spec, &model).unwrap()).unwrap()
}

#[test]
fn temperature_linear_inversion() {
    let cal = lorentz_fit(2870.0);
    let warm = lorentz_fit(2870.0 - 0.0742);
    let t = estimate_temperature(&warm, &cal, 300.0, DD).unwrap();
    assert!((t.delta_t - 1.0).abs() < 1e-6, "{}", t.delta_t);
    assert!((t.temperature - 301.0).abs() < 1e-6);
}

#[test]
fn zero_shift_uncertainty_combines_both_fits() {
    let spec = lorentzian_spectrum(&[2870.0], &[3.0], &[0.03], &linear_grid(2855.0, 2885.0, 301)).unwrap();
    let noisy = crate::lineshape::synthesize_measurement(&spec, 1e6, 1.0, 1).unwrap();
    let model = FitModel::lorentzian(1);
    let r = fit(&noisy, &model, &initial_guess(&noisy, &model).unwrap()).unwrap();
    let t = estimate_temperature(&r, &r, 300.0, DD).unwrap();
    assert_eq!(t.delta_t, 0.0);
    let sc = r.uncertainty("center_1").unwrap();
    assert!((t.uncertainty - (2.0 * sc * sc).sqrt() / DD.abs()).abs() < 1e-12);
}

#[test]
fn temperature_family_mismatch_rejected() {
    let cal = lorentz_fit(2870.0);
    let mut other = cal.clone();
    other.model = FitModel::DressedDip(DressedDipModel::default());
    assert!(matches!(
        estimate_temperature(&other, &cal, 300.0, DD),
        Err(Error::ModelMismatch(_))
    ));
}

#[test]
fn noiseless_dressed_temperature_exact() {
    let base = PhysicalEnvironment {
        d0: 2880.0,
        ex: 5.0,
        ..Default::default()
    };
    let drive = DriveConfig {
        rabi_mw: 0.6,
        rabi_mw_y: 0.6,
        omega_rf: 10.5,
        rabi_rf: 4.0,
        ..Default::default()
    };
    let model = FitModel::DressedDip(DressedDipModel {
        omega_rf: 10.5,
        ..Default::default()
    });
    let grid = linear_grid(2864.0, 2898.0, 681);
    let strain = StrainDistribution::new(5.0, 0.0, 1).unwrap();
    let fit_at = |t: f64| {
        let env = base.with_temperature(t);
        let spec = ensemble_spectrum(&env, &drive, &grid, Damping::new(0.5, 0.3), 0.05, &strain).unwrap();
        fit(&spec, &model, &initial_guess(&spec, &model).unwrap()).unwrap()
    };
    let cal = fit_at(300.0);
    for dt in [-10.0, -1.0, 0.0, 1.0, 10.0] {
        let est = estimate_temperature(&fit_at(300.0 + dt), &cal, 300.0, DD).unwrap();
        assert!((est.delta_t - dt).abs() < 1e-5, "{dt}: {}", est.delta_t);
    }
}

fn small_sweep() -> SweepConfig {
    SweepConfig {
        axes: vec![SweepAxis {
            name: "rabi_rf".into(),
            values: vec![3.0, 6.0],
        }],
        environment: PhysicalEnvironment {
            ex: 5.0,
            ..Default::default()
        },
        drive: DriveConfig {
            rabi_mw: 0.6,
            omega_rf: 10.0,
            ..Default::default()
        },
        damping: Damping::new(0.5, 0.5),
        grid: GridSpec {
            start: 2868.0,
            stop: 2885.0,
            points: 341,
        },
        fit_model: FitModel::DressedDip(DressedDipModel::default()),
        seed: 9,
        ..Default::default()
    }
}

#[test]
fn sweep_axis_validation() {
    let budget = NoiseBudget::default();
    let mut c = small_sweep();
    c.axes[0].values.clear();
    assert!(sweep(&c, &budget).is_err());
    let mut c = small_sweep();
    c.axes[0].name = "gamma_c".into();
    assert!(matches!(sweep(&c, &budget), Err(Error::UnknownAxis(_))));
    let mut c = small_sweep();
    c.axes[0].name = "laser_power_mw".into();
    assert!(sweep(&c, &budget).is_err());
}

#[test]
fn sweep_is_deterministic_and_ordered() {
    let budget = NoiseBudget::default();
    let c = small_sweep();
    let a = sweep(&c, &budget).unwrap();
    let b = sweep(&c, &budget).unwrap();
    let (mut ca, mut cb) = (Vec::new(), Vec::new());
    a.write_csv(&mut ca).unwrap();
    b.write_csv(&mut cb).unwrap();
    assert_eq!(ca, cb);
    assert_eq!(a.rows.iter().map(|r| r.index).collect::<Vec<_>>(), vec![0, 1]);
    assert!(a.rows.iter().all(SweepRow::ok), "{:?}", a.rows);
    let text = String::from_utf8(ca).unwrap();
    assert!(text.starts_with("index,rabi_rf,fwhm_mhz,contrast,eta_slope_k_per_rthz"));
}

#[test]
fn two_axis_points_last_fastest() {
    let mut c = small_sweep();
    c.axes.push(SweepAxis {
        name: "rabi_mw".into(),
        values: vec![0.1, 0.2, 0.3],
    });
    assert_eq!(c.point_count(), 6);
    assert_eq!(c.point(0), vec![3.0, 0.1]);
    assert_eq!(c.point(2), vec![3.0, 0.3]);
    assert_eq!(c.point(3), vec![6.0, 0.1]);
}

#[test]
fn point_seeds_differ() {
    let seeds: Vec<u64> = (0..50).map(|i| sweep::point_seed(1, i)).collect();
    let mut uniq = seeds.clone();
    uniq.sort();
    uniq.dedup();
    assert_eq!(uniq.len(), 50);
    assert_eq!(sweep::point_seed(1, 3), seeds[3]);
}

#[test]
fn laser_model_operating_point() {
    let budget = NoiseBudget {
        photon_rate: 1.0,
        alpha: 0.1,
        laser: Some(LaserModel {
            rate_per_mw: 2e6,
            pump_per_mw: 1.0,
            gamma_sat: 1.0,
        }),
    };
    let op = budget.operating_point(Damping::new(1.0, 0.1), Some(1.0));
    assert_eq!(op.photon_rate, 2e6);
    assert!((op.alpha - 0.05).abs() < 1e-15);
    assert_eq!(op.damping, Damping::new(1.5, 0.6));
    let none = budget.operating_point(Damping::new(1.0, 0.1), None);
    assert_eq!(none.photon_rate, 1.0);
}
