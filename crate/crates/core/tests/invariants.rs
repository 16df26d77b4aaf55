use exciton_spectra::linalg::CsrMatrix;
use exciton_spectra::model::{
    bath_correlation, gamma_to_huang_rhys, huang_rhys_to_gamma, initial_bright_state,
};
use exciton_spectra::propagation::{default_time_step, ComplexOde, Rk4};
use exciton_spectra::pseudomode::*;
use exciton_spectra::spectra::{absorption_from_trace, overlap, uniform_grid};
use exciton_spectra::*;
use num_complex::Complex64;
use proptest::prelude::*;

fn lorentz_sum(nu: &[f64], lines: &[(f64, f64, f64)]) -> Spectrum64 {
    let values = nu
        .iter()
        .map(|&v| {
            lines
                .iter()
                .map(|&(c, w, a)| a * w / ((v - c).powi(2) + w * w))
                .sum()
        })
        .collect();
    Spectrum64::new(nu.to_vec(), values, Method::Unspecified, 0.0).unwrap()
}

fn lines() -> impl Strategy<Value = Vec<(f64, f64, f64)>> {
    prop::collection::vec((-3.0..3.0f64, 0.05..1.0f64, 0.1..2.0f64), 1..4)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn overlap_is_symmetric_and_bounded(a in lines(), b in lines()) {
        let nu = uniform_grid(-6.0, 6.0, 601).unwrap();
        let (sa, sb) = (lorentz_sum(&nu, &a), lorentz_sum(&nu, &b));
        let ab = overlap(&sa, &sb).unwrap();
        let ba = overlap(&sb, &sa).unwrap();
        prop_assert!((ab - ba).abs() < 1e-10);
        prop_assert!((0.0..=100.0 + 1e-9).contains(&ab));
        prop_assert!((overlap(&sa, &sa).unwrap() - 100.0).abs() < 1e-9);
    }

    #[test]
    fn correlation_never_exceeds_its_origin(
        terms in prop::collection::vec((0.0..2.0f64, 0.0..3.0f64, 0.0..1.0f64), 1..5),
        tau in 0.0..50.0f64,
    ) {
        let terms: Vec<BathTerm64> = terms.into_iter().map(|(g, o, w)| BathTerm64::new(g, o, w)).collect();
        let bath = Bath64::uniform(1, &terms).unwrap();
        let at_zero = bath_correlation(&bath, 0, 0.0).unwrap();
        prop_assert!(at_zero.im.abs() < 1e-14);
        prop_assert!(bath_correlation(&bath, 0, tau).unwrap().norm() <= at_zero.re * (1.0 + 1e-12) + 1e-15);
    }

    #[test]
    fn huang_rhys_round_trips(x in 0.0..5.0f64, omega in 0.01..5.0f64) {
        let g = huang_rhys_to_gamma(x, omega);
        prop_assert!((gamma_to_huang_rhys(g, omega) - x).abs() <= 1e-12 * x.max(1.0));
    }

    #[test]
    fn spectrum_is_linear_in_trace(scale in 0.1..10.0f64, eps in -1.0..1.0f64) {
        let dt = 0.05;
        let make = |s: f64| {
            let samples = (0..2000).map(|k| Complex64::new(-0.2, -eps).scale(k as f64 * dt).exp() * s).collect();
            Trace64::new(dt, samples, s).unwrap()
        };
        let nu = uniform_grid(-3.0, 3.0, 121).unwrap();
        let one = absorption_from_trace(&make(1.0), 0.01, &nu).unwrap();
        let scaled = absorption_from_trace(&make(scale), 0.01, &nu).unwrap();
        for (a, b) in one.values().iter().zip(scaled.values()) {
            prop_assert!((a * scale - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn basis_order_does_not_change_trace(seed in any::<u64>(), v in -1.5..1.5f64) {
        let agg = Aggregate64::homogeneous(2, 0.0, v).unwrap();
        let bath = Bath64::uniform(2, &[BathTerm64::from_huang_rhys(0.64, 1.0, 0.25)]).unwrap();
        let basis = enumerate_basis(2, &bath.modes_per_monomer(), BasisCaps::uniform(3), DEFAULT_BUDGET).unwrap();
        let mut states = basis.states().to_vec();
        // Fisher-Yates driven by a splitmix sequence.
        let mut z = seed;
        for i in (1..states.len()).rev() {
            z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
            let mut x = z;
            x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
            x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
            states.swap(i, ((x ^ (x >> 31)) % (i as u64 + 1)) as usize);
        }
        let shuffled = PmBasis::from_states(2, &bath.modes_per_monomer(), states).unwrap();
        let config = Config64::new(0.01, 5.0).unwrap();
        let bright = initial_bright_state(&agg).unwrap();
        let run = |b: &PmBasis| {
            let g = assemble_generator(&agg, &bath, b).unwrap();
            let psi0 = embed_initial_state(b, &bright).unwrap();
            propagate_pm(&g, &psi0, bright.mu_tot_sq(), &config, TimeDoubling::Disabled).unwrap()
        };
        prop_assert!(run(&basis).max_scaled_deviation(&run(&shuffled)) <= 1e-12);
    }

    #[test]
    fn damped_pm_norm_never_grows(
        v in -1.5..1.5f64,
        x in 0.1..1.5f64,
        omega in 0.5..1.5f64,
        width in 0.05..0.6f64,
    ) {
        let agg = Aggregate64::homogeneous(2, 0.0, v).unwrap();
        let bath = Bath64::uniform(2, &[BathTerm64::from_huang_rhys(x, omega, width)]).unwrap();
        let norms = pm_norms(&agg, &bath, 4, 10.0);
        for pair in norms.windows(2) {
            prop_assert!(pair[1] <= pair[0] * (1.0 + 1e-12), "{} -> {}", pair[0], pair[1]);
        }
    }
}

struct Sparse<'a>(&'a CsrMatrix<f64>);

impl ComplexOde<f64> for Sparse<'_> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn derivative(&mut self, y: &[Complex64], dy: &mut [Complex64]) {
        self.0.mul_vec_into(y, dy);
    }
}

fn pm_norms(agg: &Aggregate64, bath: &Bath64, cap: u32, t_max: f64) -> Vec<f64> {
    let basis = enumerate_basis(
        agg.n_monomers(),
        &bath.modes_per_monomer(),
        BasisCaps::uniform(cap),
        DEFAULT_BUDGET,
    )
    .unwrap();
    let generator = assemble_generator(agg, bath, &basis).unwrap();
    let mut psi = embed_initial_state(&basis, &initial_bright_state(agg).unwrap()).unwrap();
    let dt = default_time_step(agg, bath);
    let steps = (t_max / dt).round() as usize;
    let mut rk = Rk4::new(psi.len());
    let mut norms = vec![1.0];
    for _ in 0..steps {
        rk.step(&mut Sparse(generator.matrix()), dt, &mut psi);
        norms.push(psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt());
    }
    norms
}

#[test]
fn undamped_pm_conserves_norm() {
    let agg = Aggregate64::homogeneous(2, 0.0, 0.7).unwrap();
    let bath = Bath64::uniform(2, &[BathTerm64::from_huang_rhys(0.64, 1.0, 0.0)]).unwrap();
    let norms = pm_norms(&agg, &bath, 6, 50.0);
    let drift = norms.iter().map(|n| (n - 1.0).abs()).fold(0.0, f64::max);
    assert!(drift <= 1e-8, "drift {drift}");
}
