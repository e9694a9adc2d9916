mod common;

use common::*;
use ncpd::detectors::amf::{amf_constrained_core, amf_statistic};
use ncpd::detectors::dncp::dncp_run;
use ncpd::detectors::rncp::rncp_run;
use ncpd::detectors::{self, sample_covariance, whiten_with, DetectorKind, IterationControl, WhitenerKind};
use ncpd::scenario::{HermitianCovariance, Hypothesis, Scenario, ScenarioConfig};
use num_complex::Complex64;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn cyclic_estimators_are_monotone(seed in any::<u64>(), n in prop::sample::select(vec![2usize, 3, 4, 8]), h in 2usize..12) {
        let mut r = rng(seed);
        let w = random_instance(n, h, &mut r);
        let init = unit(n, &mut r);
        let run = rncp_run(&w, &init, IterationControl::fixed(15)).unwrap();
        for pair in run.objective_trace.windows(2) {
            prop_assert!(pair[1] >= pair[0] - 1e-9 * pair[0].abs().max(1.0), "{:?}", run.objective_trace);
        }
        prop_assert!(run.objective_trace.iter().all(|g| *g <= run.objective_bound * (1.0 + 1e-9) + 1e-9));
        prop_assert!(run.p_trace.iter().all(|p| *p >= 0.0));
        prop_assert!(run.u0_norm_trace.iter().all(|u| (u - 1.0).abs() < 1e-10));

        let run = dncp_run(&w, &init, IterationControl::fixed(15)).unwrap();
        for pair in run.h_trace.windows(2) {
            prop_assert!(pair[1] <= pair[0] + 1e-9 * pair[0].abs().max(1.0), "{:?}", run.h_trace);
        }
        prop_assert!(run.h_trace.iter().all(|v| *v >= -1e-9));
    }

    #[test]
    fn amf_dual_route(seed in any::<u64>(), n in 2usize..9, h in 1usize..6) {
        let mut r = rng(seed);
        let m = HermitianCovariance::new(random_hpd(n, &mut r)).unwrap();
        let z = random_vec(n, &mut r);
        let v = random_vec(n, &mut r);
        let direct = amf_statistic(&z, &v, &m).unwrap();

        let l = m.matrix().clone().cholesky().unwrap().l();
        let x_cut = l.solve_lower_triangular(&z).unwrap();
        let v0 = l.solve_lower_triangular(&v).unwrap();
        let mut x = random_mat(n, h, &mut r);
        x.set_column(0, &x_cut);
        let (h0, h1) = amf_constrained_core(&x, &v0).unwrap();
        prop_assert!(relative_gap(h1 - h0, direct) < 1e-9, "{} vs {}", h1 - h0, direct);
    }
}

#[test]
fn statistics_do_not_depend_on_the_whitener() {
    let cfg = ScenarioConfig::default();
    let scenario = Scenario::new(&cfg).unwrap();
    let mut r = rng(3);
    let control = IterationControl::fixed(10);
    for t in 0..20 {
        let hyp = if t % 2 == 0 {
            Hypothesis::H0
        } else {
            Hypothesis::H1 { scnr_db: 15.0 }
        };
        let data = scenario.synthesize(hyp, &mut r).unwrap();
        let m_hat = sample_covariance(&data.r_secondary).unwrap();
        let v = scenario.target_steering();
        let init = scenario.init_steering();
        let a = whiten_with(&m_hat, &data, v, WhitenerKind::Cholesky).unwrap();
        let b = whiten_with(&m_hat, &data, v, WhitenerKind::InverseSqrt).unwrap();
        let pairs = [
            (
                detectors::rncp::rncp_statistic(&a, &init, control).unwrap().statistic,
                detectors::rncp::rncp_statistic(&b, &init, control).unwrap().statistic,
            ),
            (
                detectors::dncp::dncp_statistic(&a, &init, control).unwrap().statistic,
                detectors::dncp::dncp_statistic(&b, &init, control).unwrap().statistic,
            ),
            (
                detectors::amf::amf_from_whitened(&a),
                detectors::amf::amf_from_whitened(&b),
            ),
        ];
        for (x, y) in pairs {
            assert!(relative_gap(x, y) < 1e-7, "{x} vs {y}");
        }
    }
}

#[test]
fn scaling_the_data_and_covariance_together_leaves_statistics_unchanged() {
    let cfg = ScenarioConfig::default();
    let scenario = Scenario::new(&cfg).unwrap();
    let mut r = rng(4);
    let data = scenario.synthesize(Hypothesis::H1 { scnr_db: 10.0 }, &mut r).unwrap();
    let mut scaled = data.clone();
    let g = Complex64::new(3.0, -1.5);
    scaled.z_cut *= g;
    scaled.z_omega *= g;
    scaled.r_secondary *= g;
    let kinds = [DetectorKind::Rncp, DetectorKind::Dncp, DetectorKind::Amf];
    let a = detectors::evaluate(&kinds, &data, &scenario, IterationControl::default()).unwrap();
    let b = detectors::evaluate(&kinds, &scaled, &scenario, IterationControl::default()).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert!(
            relative_gap(x.statistic, y.statistic) < 1e-8,
            "{} vs {}",
            x.statistic,
            y.statistic
        );
    }
}
