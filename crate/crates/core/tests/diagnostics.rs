use abclab_core::geometry::*;
use abclab_core::glue::*;
use abclab_core::linalg::{inv4, mul4, norm2_4, sub4};
use abclab_core::structure::*;
use abclab_core::Result;
use num_complex::Complex64;

fn glued() -> Glued {
    let b = BumpProfile::new(0.05, 0.2).unwrap();
    Glued::new(&EntireMapSpec::shear_twist(0.02, 0.015, 2).unwrap(), b, 64, 1e-9).unwrap()
}

fn wobble(p: &Frame) -> Result<Frame> {
    let t = 2.0 * std::f64::consts::PI * p[0];
    Ok([p[0] + 0.03 * p[3], p[1] + 0.04 * t.cos() * p[2], p[2] + 0.02 * p[1] * p[3], p[3] - 0.05 * t.sin()])
}

fn points(n: usize) -> Vec<Frame> {
    (0..n)
        .map(|i| {
            let s = i as f64;
            [(0.137 * s + 0.05) % 1.0, 0.2 * (1.3 * s).sin(), 0.8 * (0.7 * s).cos(), 0.3 * (2.1 * s).sin()]
        })
        .collect()
}

#[test]
fn axial_projection_is_holomorphic() {
    let spec = DomainSpec::new(Surface::Sphere, 2.0, false).unwrap();
    let mut n = 0;
    for p in points(200) {
        let c = ComplexCylinderPoint::from_frame([p[0], 0.5 * p[1], 0.9 * p[2], 0.5 * p[3]]);
        let z = axial_unproject_complex(&c).unwrap();
        if !domain_contains(&spec, &DomainPoint::Sphere(z)) {
            continue;
        }
        n += 1;
        let flat = [z[0].re, z[0].im, z[1].re, z[1].im, z[2].re, z[2].im];
        let f = |v: &[f64]| -> Result<Vec<f64>> {
            let w = [Complex64::new(v[0], v[1]), Complex64::new(v[2], v[3]), Complex64::new(v[4], v[5])];
            Ok(axial_project_complex(&w)?.frame().to_vec())
        };
        let r = cauchy_riemann_general(&f, &flat, 1e-4, &[0]).unwrap();
        assert!(r <= 1e-6, "{r} at {flat:?}");
    }
    assert!(n > 100);
}

#[test]
fn pullbacks_are_functorial() {
    let h = glued();
    let hf = |p: &Frame| h.eval_frame(p);
    let comp = |p: &Frame| wobble(&hf(p)?);
    for p in points(10) {
        let direct = pullback_structure(&comp, &p, 1e-4).unwrap().j;
        let gj = pullback_structure(&wobble, &hf(&p).unwrap(), 1e-4).unwrap().j;
        let dh = jacobian4(&hf, &p, 1e-4).unwrap();
        let staged = mul4(&inv4(&dh).unwrap(), &mul4(&gj, &dh));
        assert!(norm2_4(&sub4(&direct, &staged)) <= 1e-6, "{p:?}");
    }
}

#[test]
fn equivariant_pullback_anticommutes_with_sigma() {
    let h = glued();
    let jf = |p: &Frame| Ok(pullback_structure(&|q: &Frame| h.eval_frame(q), p, 1e-4)?.j);
    for p in points(10) {
        assert!(sigma_structure_residual(&jf, &p).unwrap() <= 1e-6);
        assert!(sigma_map_residual(&|q: &Frame| h.eval_frame(q), &p).unwrap() <= 1e-10);
    }
}

#[test]
fn glued_pullback_is_integrable() {
    let h = glued();
    let hf = |p: &Frame| h.eval_frame(p);
    let jf = |p: &Frame| Ok(pullback_structure(&hf, p, 1e-3)?.j);
    let jf_fine = |p: &Frame| Ok(pullback_structure(&hf, p, 1e-4)?.j);
    let wf = |p: &Frame| Ok(pullback_form(&hf, p, 1e-4)?.w);
    // points inside the transition band where h is not holomorphic
    for p in [[0.31, 0.05, 0.87, 0.02], [0.74, -0.1, -0.9, 0.05], [0.12, 0.2, 0.3, -0.1]] {
        let rep = nijenhuis_sweep(&jf, &p, &[1e-2, 1e-3, 1e-4]).unwrap();
        assert!(rep.slope >= 1.5 || rep.vanishes(1e-9), "{rep:?}");
        let r = holomorphic_form_residual(&wf, &jf_fine, &p, 3e-4).unwrap();
        assert!(r.max() <= 1e-5, "{r:?}");
    }
}

#[test]
fn twisted_structure_stays_non_integrable() {
    let jf = twisted_structure(2.0);
    for p in points(5) {
        let rep = nijenhuis_sweep(&jf, &p, &[1e-2, 1e-3, 1e-4]).unwrap();
        assert!(rep.residuals.iter().all(|r| *r >= 1e-2), "{rep:?}");
        let spread = rep.residuals.iter().fold(0.0f64, |m, r| m.max(*r)) / rep.residuals.iter().fold(f64::MAX, |m, r| m.min(*r));
        assert!(spread < 1.01);
    }
}
