use std::f64::consts::PI;
use std::io;

use approx::assert_relative_eq;
use gcf_core::diagnostics::DiagnosticsRecord;
use gcf_core::flow::{
    normalize, run, stable_dt, step, CsvRecordSink, FlowConfig, FlowError, FlowState, NullSink, RecordSink,
    StopReason, StopRule,
};
use gcf_core::{AxisymBody, ConvexBody, CurveBody, DiagnosticBody, Mode};
use nalgebra::Vector2;
use proptest::prelude::*;

#[test]
fn stable_dt_examples() {
    let dt256 = stable_dt(&CurveBody::circle(256, 1.0).unwrap(), 1.0, 0.1);
    assert_relative_eq!(dt256, 0.1 * (2.0 * PI / 256.0).powi(2), max_relative = 1e-14);
    assert!((dt256 - 6.02e-5).abs() < 5e-8);
    let dt512 = stable_dt(&CurveBody::circle(512, 1.0).unwrap(), 1.0, 0.1);
    assert!((dt512 - 1.51e-5).abs() < 5e-8);
    assert_relative_eq!(dt256 / dt512, 4.0, max_relative = 1e-12);

    // dt > 0 and continuous in the scale of the body.
    let c = CurveBody::circle(256, 1.0).unwrap();
    let mut last = stable_dt(&c, 1.0, 0.1);
    for k in 1..=20 {
        let dt = stable_dt(&c.scale(1.0 + 0.05 * k as f64).unwrap(), 1.0, 0.1);
        assert!(dt > 0.0);
        assert!((dt / last - 1.0).abs() < 0.2);
        last = dt;
    }
}

#[test]
fn sphere_step_is_uniform() {
    for alpha in [1.0 / 3.0, 1.0, 2.0] {
        let next = step(&FlowState::new(AxisymBody::sphere(64, 1.0).unwrap()), &FlowConfig::new(alpha)).unwrap();
        let h = next.body.support();
        let spread = h.iter().fold(0.0f64, |m, v| m.max((v - h[0]).abs()));
        assert!(spread < 1e-15);
        // 1 − dt to first order in dt.
        assert!((h[0] - (1.0 - next.last_dt)).abs() <= 3.0 * next.last_dt.powi(2) * (alpha + 1.0));
    }
}

#[test]
fn ellipse_moves_fastest_where_curvature_is_largest() {
    let n = 512;
    let e = CurveBody::ellipse(n, 2.0, 0.5).unwrap();
    let next = step(&FlowState::new(e.clone()), &FlowConfig::new(1.0)).unwrap();
    let dh: Vec<f64> = e.support().iter().zip(next.body.support()).map(|(a, b)| a - b).collect();
    // K(0)/K(π/2) = 8 / 0.125.
    assert_relative_eq!(dh[0] / dh[n / 4], 64.0, max_relative = 1e-2);
}

#[test]
fn normalize_examples() {
    let n = 128;
    for h in normalize(&CurveBody::circle(n, 3.0).unwrap()).unwrap().support() {
        assert!((h - 1.0).abs() < 1e-12);
    }
    let shifted = CurveBody::from_fn(n, |t| 1.0 + 0.3 * t.cos()).unwrap();
    for h in normalize(&shifted).unwrap().support() {
        assert!((h - 1.0).abs() < 1e-10);
    }
    let e = CurveBody::ellipse(512, 2.0, 0.5).unwrap();
    let ne = normalize(&e).unwrap();
    for (a, b) in ne.support().iter().zip(e.support()) {
        assert!((a - b).abs() < 1e-8);
    }
    let s = normalize(&AxisymBody::spheroid(128, 1.4, 0.4).unwrap().translate(0.2).unwrap()).unwrap();
    assert_relative_eq!(s.volume(), 4.0 * PI / 3.0, max_relative = 1e-12);
    assert!(s.steiner_point().abs() < 1e-12);
}

#[test]
fn circle_is_a_fixed_point_of_the_normalised_flow() {
    let mut cfg = FlowConfig::new(1.0);
    cfg.max_steps = 1000;
    let out = run(CurveBody::circle(64, 1.0).unwrap(), &cfg, &mut NullSink).unwrap();
    assert_eq!(out.reason, StopReason::MaxSteps);
    assert_eq!(out.state.step, 1000);
    assert!(out.state.body.support().iter().all(|h| (h - 1.0).abs() <= 1e-12));
}

#[test]
fn stop_rule_ends_the_run_and_emits_the_last_state() {
    let mut cfg = FlowConfig::new(1.0);
    cfg.max_steps = 200_000;
    cfg.emit_every = 1000;
    cfg.stop = StopRule::Roundness(1.01);
    let mut records: Vec<DiagnosticsRecord> = Vec::new();
    let out = run(CurveBody::ellipse(128, 1.5, 2.0 / 3.0).unwrap(), &cfg, &mut records).unwrap();
    assert_eq!(out.reason, StopReason::RuleSatisfied);
    let last = records.last().unwrap();
    assert_eq!(last.step, out.state.step);
    assert!(last.roundness <= 1.01);
    assert!(records.iter().rev().skip(1).all(|r| r.step % 1000 == 0 && r.roundness > 1.01));

    let mut cfg = FlowConfig::new(1.0);
    cfg.stop = StopRule::MaxTime(0.01);
    let out = run(CurveBody::circle(64, 1.0).unwrap(), &cfg, &mut NullSink).unwrap();
    assert!(out.state.t >= 0.01 && out.state.t - out.state.last_dt < 0.01);
}

#[test]
fn record_stream_is_deterministic() {
    let body = AxisymBody::spheroid(64, 1.3, 0.6)
        .unwrap()
        .perturbed(&[Mode { k: 2, amplitude: 0.02 }])
        .unwrap();
    let mut cfg = FlowConfig::new(0.5);
    cfg.max_steps = 50;
    let bytes = || {
        let mut buf = Vec::new();
        let mut sink = CsvRecordSink::new(&mut buf).unwrap();
        run(body.clone(), &cfg, &mut sink).unwrap();
        sink.flush().unwrap();
        drop(sink);
        buf
    };
    let a = bytes();
    assert_eq!(a, bytes());
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with(
        "step,t,dt,volume,h_min,h_max,roundness,soliton_residual,Z_min,Z_max,W_max,entropy,cubic_norm\n"
    ));
    assert_eq!(text.lines().count(), 51);
}

#[test]
fn failures_keep_the_last_state_and_the_records() {
    // Overflowing speed: the very first step fails.
    let e = CurveBody::ellipse(64, 2.0, 0.5).unwrap();
    let mut records: Vec<DiagnosticsRecord> = Vec::new();
    let f = run(e.clone(), &FlowConfig::new(400.0), &mut records).unwrap_err();
    assert!(matches!(f.error, FlowError::StepFailure { step: 1, .. }));
    assert_eq!(f.state.body.support(), e.support());
    assert!(records.is_empty());

    /// Accepts three records, then fails.
    struct Flaky(Vec<usize>);
    impl<B> RecordSink<B> for Flaky {
        fn emit(&mut self, _: &FlowState<B>, r: &DiagnosticsRecord) -> io::Result<()> {
            if self.0.len() == 3 {
                return Err(io::Error::other("disk full"));
            }
            self.0.push(r.step);
            Ok(())
        }
    }
    let mut sink = Flaky(Vec::new());
    let f = run(e, &FlowConfig::new(1.0), &mut sink).unwrap_err();
    assert!(matches!(f.error, FlowError::Sink(_)));
    assert_eq!(sink.0, vec![1, 2, 3]);
    assert_eq!(f.state.step, 4);

    let mut bad = FlowConfig::new(1.0);
    bad.emit_every = 0;
    let f = run(CurveBody::circle(32, 1.0).unwrap(), &bad, &mut NullSink).unwrap_err();
    assert!(matches!(f.error, FlowError::InvalidConfig(_)));
}

fn check_one_step<B: DiagnosticBody>(body: B, alpha: f64) -> Result<(), TestCaseError> {
    let next = step(&FlowState::new(body.clone()), &FlowConfig::new(alpha)).unwrap();
    prop_assert!(next.body.volume() < body.volume());
    for (after, before) in next.body.support().iter().zip(body.support()) {
        prop_assert!(after < before);
    }
    Ok(())
}

fn modes(amps: &[f64]) -> Vec<Mode> {
    amps.iter()
        .enumerate()
        .map(|(i, a)| Mode {
            k: i as u32 + 2,
            amplitude: a / ((i + 2) * (i + 2)) as f64,
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn curve_step_shrinks_the_body(
        a in 0.7..1.4f64, b in 0.7..1.4f64, amps in prop::collection::vec(-0.1..0.1f64, 3),
        vx in -0.2..0.2f64, alpha in prop::sample::select(vec![0.25, 1.0 / 3.0, 0.5, 1.0, 2.0]),
    ) {
        let body = CurveBody::ellipse(64, a, b)
            .and_then(|e| e.perturbed(&modes(&amps)))
            .and_then(|e| e.translate(Vector2::new(vx, 0.0)));
        prop_assume!(body.is_ok());
        check_one_step(body.unwrap(), alpha)?;
    }

    #[test]
    fn axisym_step_shrinks_the_body(
        a in 0.7..1.4f64, c in 0.7..1.4f64, amps in prop::collection::vec(-0.1..0.1f64, 3),
        v in -0.2..0.2f64, alpha in prop::sample::select(vec![0.25, 1.0 / 3.0, 0.5, 1.0, 2.0]),
    ) {
        let body = AxisymBody::spheroid(64, a, c)
            .and_then(|e| e.perturbed(&modes(&amps)))
            .and_then(|e| e.translate(v));
        prop_assume!(body.is_ok());
        check_one_step(body.unwrap(), alpha)?;
    }

    #[test]
    fn normalised_sphere_stays_fixed(alpha in 0.2..3.0f64, radius in 0.5..2.0f64) {
        let mut cfg = FlowConfig::new(alpha);
        cfg.max_steps = 5;
        let out = run(AxisymBody::sphere(32, radius).unwrap(), &cfg, &mut NullSink).unwrap();
        for h in out.state.body.support() {
            prop_assert!((h - 1.0).abs() <= 1e-12);
        }
    }
}
