use exciton_spectra::pseudomode::*;
use exciton_spectra::spectra::{absorption_with_method, overlap, uniform_grid};
use exciton_spectra::*;

fn settings(tolerance: f64) -> ConvergenceSettings<f64> {
    ConvergenceSettings {
        tolerance,
        eta: 0.01,
        nu: uniform_grid(-5.0, 7.0, 1201).unwrap(),
        budget: DEFAULT_BUDGET,
    }
}

fn dimer(x: f64) -> (Aggregate64, Bath64, Config64) {
    let agg = Aggregate64::homogeneous(2, 0.0, 0.44).unwrap();
    let bath = Bath64::uniform(2, &[BathTerm64::from_huang_rhys(x, 1.0, 0.25)]).unwrap();
    let config = Config64::fitted(0.005, 150.0)
        .unwrap()
        .with_sample_spacing(0.05)
        .unwrap();
    (agg, bath, config)
}

#[test]
fn converged_caps_are_stable_under_two_more_quanta() {
    let (agg, bath, config) = dimer(0.64);
    let s = settings(1e-3);
    let result = converge_caps(&agg, &bath, &config, &s).unwrap();
    let last = result.ladder.last().unwrap();
    assert!(last.overlap_with_previous.unwrap() >= 99.9);

    let bigger = BasisCaps::uniform(result.caps.total + 2);
    let trace = pm_correlation(&agg, &bath, bigger, &config, s.budget).unwrap();
    let spec = absorption_with_method(&trace, s.eta, &s.nu, Method::Pseudomode).unwrap();
    let o = overlap(&result.spectrum, &spec).unwrap();
    assert!(
        o >= 100.0 * (1.0 - s.tolerance),
        "caps {:?} vs +2: {o}",
        result.caps
    );
}

#[test]
fn stronger_coupling_needs_at_least_as_many_quanta() {
    let s = settings(1e-3);
    let (agg, weak, config) = dimer(0.64);
    let (_, strong, _) = dimer(1.2);
    let a = converge_caps(&agg, &weak, &config, &s).unwrap().caps;
    let b = converge_caps(&agg, &strong, &config, &s).unwrap().caps;
    assert!(
        b.total >= a.total && b.per_mode >= a.per_mode,
        "{a:?} vs {b:?}"
    );
}
