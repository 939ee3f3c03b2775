mod common;

use std::f64::consts::PI;

use cfsl_core::data::{generate, DatasetKind};
use cfsl_core::inverse::{
    gradient_check, reconstruct, relative_l2_error, residual, uniqueness_probe, Init, InverseConfig,
    HALF_POINT,
};
use cfsl_core::{Order, PotentialModel, Problem};
use common::{t_end, x_of, Oracle};

#[test]
fn residual_against_zero_model_matches_oracle_gaps() {
    let truth = Problem::from_fn(1.0, |x| x.cos(), 0.0, 0.0).unwrap();
    let ds = generate(&truth, DatasetKind::TwoSpectra, 6).unwrap();
    let model = PotentialModel::cosine(Order::new(1.0).unwrap(), 3).unwrap();
    let r = residual(&model, &ds).unwrap();
    assert!(r.iter().map(|v| v * v).sum::<f64>() > 0.0);

    let cos = |t: f64| t.cos();
    let robin = Oracle { q: &cos, t_end: PI, h: Some(0.0), big_h: 0.0 };
    let dirichlet = Oracle { q: &cos, t_end: PI, h: None, big_h: 0.0 };
    let lam = robin.eigenvalues(6, 4000);
    let xi = dirichlet.eigenvalues(6, 4000);
    for n in 0..6 {
        let free = (n * n) as f64;
        assert!((r[n] - (free - lam[n])).abs() < 1e-6, "{n}: {} vs {}", r[n], free - lam[n]);
        let free = (n as f64 + 0.5).powi(2);
        assert!((r[6 + n] - (free - xi[n])).abs() < 1e-6, "{n}: {} vs {}", r[6 + n], free - xi[n]);
    }
}

#[test]
fn probe_sees_a_half_interval_bump() {
    let p1 = Problem::trivial(1.0).unwrap();
    let p2 = Problem::from_fn(1.0, |x| if x < HALF_POINT { x.sin() } else { 0.0 }, 0.0, 0.0).unwrap();
    let sep = uniqueness_probe(&p1, &p2, 20).unwrap();
    assert!(sep > 1e-4, "{sep}");
}

#[test]
fn half_inverse_recovers_parabola() {
    let alpha = 0.7;
    let truth = Problem::from_fn(alpha, |x| x * (PI - x) / 4.0, 0.4, -0.3).unwrap();
    let ds = generate(&truth, DatasetKind::MixedHalf, 20).unwrap();
    let cfg = InverseConfig { basis_size: Some(8), init: Init::Zero, ..Default::default() };
    let report = reconstruct(&ds, &cfg).unwrap();
    assert!(report.converged, "{:?}", report.stop_reason);
    assert!(report.gradient_check.passed);
    let q = report.model.potential().unwrap();
    let err = relative_l2_error(&q, &truth.q, truth.order, 0.0, HALF_POINT);
    assert!(err < 2e-2, "{err}");
    assert!((report.model.h - 0.4).abs() < 2e-2, "{}", report.model.h);
    assert_eq!(report.model.big_h, -0.3);

    let tail = ds.tail_function().unwrap().unwrap();
    for i in 1..200 {
        let x = HALF_POINT + (PI - HALF_POINT) * i as f64 / 200.0;
        let got = q.eval_x(x, truth.order);
        assert_eq!(got.to_bits(), tail.eval(x).to_bits(), "x = {x}");
    }
    let model_json = report.model.to_json();
    let cfsl_core::Payload::MixedHalf { tail: nodes, .. } = &ds.payload else { unreachable!() };
    assert_eq!(model_json["tail"], serde_json::json!(nodes));

    for w in report.history.windows(2) {
        assert!(w[1].objective <= w[0].objective, "{:?}", report.history);
    }
}

#[test]
fn norms_round_trip_on_random_truth() {
    let truth = Problem::random_smooth(21, 0.85, 4, 0.2, 0.4).unwrap();
    let ds = generate(&truth, DatasetKind::SpectrumWithNorms, 12).unwrap();
    let cfg = InverseConfig { basis_size: Some(4), ..Default::default() };
    let report = reconstruct(&ds, &cfg).unwrap();
    assert!(report.converged);
    let err = relative_l2_error(&report.model.potential().unwrap(), &truth.q, truth.order, 0.0, PI);
    assert!(err < 1e-4, "{err}");
    assert!((report.model.h - 0.2).abs() < 1e-5 && (report.model.big_h - 0.4).abs() < 1e-5);
    let fit = report.model.problem().unwrap();
    let again = generate(&fit, DatasetKind::SpectrumWithNorms, 12).unwrap();
    let r = residual(&report.model, &again).unwrap();
    assert!(r.iter().all(|v| v.abs() < 1e-12));
    let r = residual(&report.model, &ds).unwrap();
    assert!(r.iter().all(|v| v.abs() < 1e-6), "{r:?}");
}

#[test]
fn oracle_confirms_reconstructed_spectrum() {
    let alpha = 0.8;
    let truth = Problem::random_smooth(5, alpha, 3, 0.1, 0.3).unwrap();
    let ds = generate(&truth, DatasetKind::TwoSpectra, 8).unwrap();
    let report = reconstruct(&ds, &InverseConfig { basis_size: Some(3), ..Default::default() }).unwrap();
    let fit = report.model.problem().unwrap();
    let order = fit.order;
    let q = |t: f64| fit.q.eval_x(x_of(t, alpha), order);
    let oracle = Oracle { q: &q, t_end: t_end(alpha), h: Some(fit.h), big_h: fit.big_h };
    let lam = oracle.eigenvalues(8, 4000);
    for (a, b) in lam.iter().zip(ds.eigenvalues().unwrap()) {
        assert!((a - b).abs() < 1e-5 * b.abs().max(1.0), "{a} vs {b}");
    }
}

#[test]
fn gradient_check_on_half_model() {
    let truth = Problem::from_fn(0.9, |x| (x - 1.0).powi(2) / 3.0, 0.2, 0.1).unwrap();
    let ds = generate(&truth, DatasetKind::MixedHalf, 10).unwrap();
    let tail = ds.tail_function().unwrap().unwrap();
    let mut model = PotentialModel::half(truth.order, 4, tail, 0.1).unwrap();
    model.coeffs = vec![0.3, -0.1, 0.05, 0.02];
    model.h = 0.5;
    let check = gradient_check(&model, &ds).unwrap();
    assert!(check.passed, "{check:?}");
}
