use quartic_sos::certificate::{verify, Certificate};
use quartic_sos::format::{self, InstanceMeta, PayloadEncoding};
use quartic_sos::instances::{Family, InstanceSpec, SosStatus};
use quartic_sos::network::expand;
use quartic_sos::optimizer::solve;
use quartic_sos::quartic::coeff_metrics;
use quartic_sos::SolveConfig;

fn failures_at(family: Family, n: usize, seeds: std::ops::Range<u64>, tol: f64) -> Vec<(u64, f64)> {
    let mut bad = Vec::new();
    for seed in seeds {
        let (target, status) = InstanceSpec::new(family, n, seed).generate::<f64>().unwrap();
        assert_eq!(status, SosStatus::SosByConstruction);
        let config = SolveConfig {
            tol,
            seed,
            ..SolveConfig::default()
        };
        let r = solve(&target, &config).unwrap();
        if !r.converged {
            bad.push((seed, r.best_relative_error));
        }
    }
    bad
}

#[test]
fn uniform_instances_always_reach_loose_tolerance() {
    for n in [3, 6, 12] {
        let bad = failures_at(Family::UniformSos, n, 0..50, 1e-5);
        assert!(bad.is_empty(), "n={n}: {bad:?}");
    }
}

#[test]
fn spiked_instances_always_reach_loose_tolerance() {
    let bad = failures_at(Family::Spiked, 4, 0..50, 1e-5);
    assert!(bad.is_empty(), "{bad:?}");
}

#[test]
fn perturbed_instances_always_reach_loose_tolerance() {
    let bad = failures_at(Family::PerturbedDiag, 4, 0..50, 1e-5);
    assert!(bad.is_empty(), "{bad:?}");
}

#[test]
fn files_to_certificate_and_back() {
    let dir = tempfile::tempdir().unwrap();
    for (seed, encoding) in [(0, PayloadEncoding::Inline), (1, PayloadEncoding::Binary)] {
        let spec = InstanceSpec::new(Family::UniformSos, 7, seed);
        let (target, status) = spec.generate::<f64>().unwrap();
        let tpath = dir.path().join(format!("t{seed}.json"));
        format::write_coefficients(&tpath, &target, Some(InstanceMeta { spec: spec.clone(), status }), encoding).unwrap();

        let file = format::read_coefficients(&tpath).unwrap();
        assert_eq!(file.instance.unwrap().spec, spec);
        let bits = |f: &quartic_sos::QuarticF64| f.coeffs().iter().map(|c| c.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&file.form), bits(&target));

        let config = SolveConfig {
            seed,
            ..SolveConfig::default()
        };
        let r = solve(&file.form, &config).unwrap();
        assert!(r.converged);
        let cert = Certificate::from_params(&r.best_params, &file.form, r.best_relative_error).unwrap();
        let cpath = dir.path().join(format!("c{seed}.json"));
        format::write_certificate(&cpath, &cert).unwrap();
        let back = format::read_certificate(&cpath).unwrap();
        assert_eq!(back, cert);

        let verdict = verify(&back, &target, 10.0 * config.tol).unwrap();
        assert!(verdict.is_certified(), "{verdict:?}");
        let direct = coeff_metrics(&expand(&r.best_params), &target).unwrap();
        assert!((direct.relative_error.unwrap() - verdict.residual()).abs() <= 1e-12);
    }
}
