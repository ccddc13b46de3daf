use std::sync::OnceLock;

use abclab_core::engine::{
    lift_to_surface, periodic_separation, separation_report, step, transitivity_witness, EngineConfig, SchemeStage,
};
use abclab_core::geometry::{CylinderPoint, Surface};
use abclab_core::map::{FlowConfig, MapExpr};
use abclab_core::rational::RationalAngle;
use abclab_core::Error;

fn stage_one() -> &'static (EngineConfig, SchemeStage) {
    static S: OnceLock<(EngineConfig, SchemeStage)> = OnceLock::new();
    S.get_or_init(|| {
        let cfg = EngineConfig::default();
        let s0 = SchemeStage::initial(&cfg).unwrap();
        let s1 = step(&s0, &cfg).unwrap();
        (cfg, s1)
    })
}

#[test]
fn separation_of_simple_maps() {
    let cfg = FlowConfig::default();
    let half = MapExpr::rotation(RationalAngle::new(1, 2).unwrap());
    let d = periodic_separation(|x| half.eval(x, &cfg), 2, 16).unwrap();
    assert!((d - 0.5).abs() < 1e-15);
    let id = MapExpr::identity();
    assert_eq!(periodic_separation(|x| id.eval(x, &cfg), 2, 16).unwrap(), 0.0);
}

#[test]
fn first_stage_certificates() {
    let (cfg, s1) = stage_one();
    assert_eq!(s1.n, 1);
    assert_eq!(s1.alpha, RationalAngle::new(1, 4).unwrap());
    assert!(s1.j >= 1);
    assert!(s1.certificates.conjugacy <= 1e-8);
    assert!(s1.certificates.symplectic <= 1e-6);
    assert!(s1.orbit.radius <= 1.0 / 3.0 + 2.0 / cfg.grid_n as f64);
    let sep = separation_report(s1, cfg).unwrap();
    assert!(sep.exhaustive);
    assert!(sep.grid_min() > 0.0);
}

#[test]
fn sphere_lift_fixes_poles_and_is_continuous() {
    let (cfg, s1) = stage_one();
    let lift = lift_to_surface(s1, Surface::Sphere).unwrap();
    for pole in [[0.0, 0.0, 1.0], [0.0, 0.0, -1.0]] {
        assert_eq!(lift.eval(&pole, &cfg.flow).unwrap(), pole.to_vec());
    }
    assert!(lift.seam_residual(1000, &cfg.flow).unwrap() <= 1e-6);
}

#[test]
fn disk_lift_fixes_center() {
    let (cfg, s1) = stage_one();
    let lift = lift_to_surface(s1, Surface::Disk).unwrap();
    assert_eq!(lift.eval(&[0.0, 0.0], &cfg.flow).unwrap(), vec![0.0, 0.0]);
    assert!(lift.seam_residual(200, &cfg.flow).unwrap() <= 1e-6);
    assert!(matches!(lift_to_surface(s1, Surface::Cylinder), Err(Error::Domain(_))));
}

#[test]
fn witness_at_first_stage() {
    let (cfg, s1) = stage_one();
    let lift = lift_to_surface(s1, Surface::Sphere).unwrap();
    let w = transitivity_witness(s1, &lift, 0.6, cfg).unwrap();
    assert!(w.start_distance <= 0.6);
    assert!(w.end_surface[2] < 0.0);
    assert!(w.steps < s1.orbit_length());
    let again = s1.iterate(&w.start, &w.steps, &cfg.flow).unwrap();
    assert_eq!(again, w.end);
    assert!(matches!(transitivity_witness(s1, &lift, 0.01, cfg), Err(Error::WitnessNotFound(_))));
}

#[test]
fn orbit_points_are_iterates() {
    let (cfg, s1) = stage_one();
    let start = s1.h_inverse().eval(&CylinderPoint { theta: s1.orbit.base, y: 0.0 }, &cfg.flow).unwrap();
    for (k, p) in s1.orbit.indices.iter().zip(&s1.orbit.points).take(8) {
        let q = s1.iterate(&start, k, &cfg.flow).unwrap();
        assert!(abclab_core::geometry::cyl_distance(&q, p) < 1e-12);
    }
}
