use proptest::prelude::*;

use cqed::blockade::{certify_distribution, certify_inequalities, relative_deviation};
use cqed::correlations::{gk_from_distribution, poisson_reference, windowed_average, SteadyStateModel};
use cqed::fitting::{levenberg_marquardt, LmOptions};
use cqed::lindblad::{liouvillian, propagate};
use cqed::units::mhz;
use cqed::{
    CorrelationSeries, DensityMatrix, Drive, DriveKind, PhotonDistribution, SpaceDims, SpectrumModel, SystemParams,
};

fn drive_kind() -> impl Strategy<Value = DriveKind> {
    prop_oneof![Just(DriveKind::Atom), Just(DriveKind::Cavity)]
}

prop_compose! {
    fn system()(g in 0.0..30.0, kappa in 0.5..5.0, gamma in 0.5..5.0, dc in -30.0..30.0,
                dac in -5.0..5.0, eta in 0.01..2.0, kind in drive_kind(), n_max in 3usize..7)
        -> SystemParams {
        SystemParams::with_cavity_detuning(
            mhz(g), mhz(kappa), mhz(gamma), mhz(dc), mhz(dac),
            Drive::new(kind, mhz(eta)),
            SpaceDims::with_max_photons(n_max).unwrap(),
        ).unwrap()
    }
}

fn assert_physical(rho: &DensityMatrix) -> Result<(), TestCaseError> {
    prop_assert!((rho.trace() - 1.0).abs() < 1e-10, "trace {}", rho.trace());
    prop_assert!(rho.hermiticity_error() < 1e-10);
    prop_assert!(rho.min_eigenvalue() > -1e-10, "min eigenvalue {}", rho.min_eigenvalue());
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn steady_states_are_density_matrices(p in system()) {
        let model = SteadyStateModel::solve(&p).unwrap();
        assert_physical(model.rho())?;
        let dist = model.photon_distribution();
        prop_assert!((dist.total() - 1.0).abs() < 1e-10);
        prop_assert!(dist.probs.iter().all(|x| *x >= 0.0));
    }

    #[test]
    fn evolution_keeps_states_physical(p in system(), t in 0.0..500e-9) {
        let l = liouvillian(&p).unwrap();
        let rho = propagate(&l, &DensityMatrix::ground(p.dims), t).unwrap();
        assert_physical(&rho)?;
    }

    #[test]
    fn thermal_spectrum_scales_with_drive_squared(
        kind in drive_kind(), dc in -30.0..30.0f64, s in 0.1..10.0f64, t in 0.0..3.0f64, dac in -3.0..3.0f64,
    ) {
        let model = SpectrumModel {
            g: mhz(16.38), kappa: mhz(2.0), gamma: mhz(3.0), delta_ac: mhz(dac),
            eta: mhz(0.05), temperature_scale: mhz(t), a_ec: 0.0, drive: kind,
        };
        let scaled = SpectrumModel { eta: model.eta * s, ..model };
        let (a, b) = (model.thermal(mhz(dc)), scaled.thermal(mhz(dc)));
        prop_assert!((b - s * s * a).abs() <= 1e-12 * b.abs());
    }
}

proptest! {
    #[test]
    fn poisson_has_unit_factorial_moments(mean in 0.01..3.0, k in 1usize..5) {
        let dist = poisson_reference(mean, 80).unwrap();
        let gk = gk_from_distribution(&dist, k).unwrap();
        prop_assert!((gk - 1.0).abs() < 1e-10, "g{k} = {gk}");
        let dev = relative_deviation(&dist, mean).unwrap();
        prop_assert!(dev.iter().take(20).all(|d| d.abs() < 1e-10));
    }

    #[test]
    fn windowed_average_is_bounded_by_samples(values in prop::collection::vec(-5.0..5.0f64, 2..60)) {
        let taus: Vec<f64> = (0..values.len()).map(|i| i as f64).collect();
        let series = CorrelationSeries { taus, values: values.clone(), order: 2 };
        let w = windowed_average(&series, 0.0, values.len() as f64).unwrap();
        let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert_eq!(w.samples, values.len());
        prop_assert!(w.mean >= lo - 1e-12 && w.mean <= hi + 1e-12);
        prop_assert!(w.standard_error >= 0.0);
    }

    #[test]
    fn upper_margin_grows_with_higher_order_correlation(
        g_n in 0.0..3.0, g in 0.0..3.0, dg in 0.0..1.0, mean in 0.0..0.5,
    ) {
        let a = certify_inequalities(g_n, g, mean, 2);
        let b = certify_inequalities(g_n, g + dg, mean, 2);
        prop_assert!(b.upper_margin >= a.upper_margin);
    }

    #[test]
    fn strict_blockade_implies_upper_bound(raw in prop::collection::vec(0.01..1.0f64, 2..5), empty in 0.5..0.99) {
        // support on 0..=n with most weight in vacuum keeps ⟨m⟩ below one
        let n = raw.len() - 1;
        let total: f64 = raw[1..].iter().sum();
        let mut probs = vec![empty];
        probs.extend(raw[1..].iter().map(|x| x / total * (1.0 - empty)));
        let dist = PhotonDistribution::new(probs).unwrap();
        prop_assume!(dist.mean < 1.0);
        let report = certify_distribution(&dist, n).unwrap();
        prop_assert!(report.strict_pass);
        prop_assert!(report.upper_margin < 0.0);
    }

    #[test]
    fn accepted_steps_never_increase_the_residual(a in 0.5..3.0f64, b in 0.1..2.0f64, a0 in 0.2..5.0, b0 in 0.05..3.0) {
        let xs: Vec<f64> = (0..30).map(|i| i as f64 * 0.1).collect();
        let ys: Vec<f64> = xs.iter().map(|x| a * (-b * x).exp()).collect();
        let residuals = |p: &[f64]| xs.iter().zip(&ys).map(|(x, y)| p[0] * (-p[1] * x).exp() - y).collect();
        let fit = levenberg_marquardt(residuals, &["a", "b"], &[a0, b0], &[true, true], &[1.0, 1.0], LmOptions::default()).unwrap();
        prop_assert!(fit.history.windows(2).all(|w| w[1] <= w[0]));
        prop_assert_eq!(*fit.history.last().unwrap(), fit.residual_norm);
    }
}
