//! End-to-end acceptance run: a default three-stage cylinder experiment
//! followed by every check, one verdict line per criterion.

use std::collections::BTreeMap;
use std::io::Write;
use std::time::{Duration, Instant};

use abclab::diagnose::{diagnose, CheckReport};
use abclab::run::{load, run, LoadedRun};
use abclab::ExperimentConfig;
use abclab_core::deform::{tracking_points, AmplitudeSchedule, DeformationTrack};
use abclab_core::geometry::{
    axial_project, axial_unproject, cyl_distance, disk_involution, polar_project, polar_unproject, CylinderPoint,
    DiskPoint,
};
use abclab_core::structure::convergence_tracker;

const STAGES: usize = 3;
const RUNTIME_LIMIT: Duration = Duration::from_secs(300);

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn check(run: &LoadedRun, name: &str, n: usize) -> CheckReport {
    diagnose(run, name, n).unwrap_or_else(|e| panic!("{name} at stage {n}: {e}")).0
}

fn value(rep: &CheckReport, key: &str) -> String {
    rep.get(key).unwrap_or("-").to_string()
}

/// Runs `name` on every stage in `stages`, reporting `key` for each.
fn over(run: &LoadedRun, name: &str, stages: impl IntoIterator<Item = usize>, key: &str) -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for n in stages {
        let rep = check(run, name, n);
        pass &= rep.pass;
        parts.push(format!("n={n} {key}={}", value(&rep, key)));
    }
    verdict(pass, parts.join(", "))
}

/// Weyl-sequence samples of `[0,1)²`.
fn weyl(count: usize) -> impl Iterator<Item = (f64, f64)> {
    let (a, b) = (0.754_877_666_246_692_8_f64, 0.569_840_290_998_053_3_f64);
    (0..count).map(move |i| ((0.5 + a * i as f64).fract(), (0.5 + b * i as f64).fract()))
}

/// Area scale of a parametrized surface from Richardson-extrapolated
/// central differences.
fn area_scale(f: impl Fn(f64, f64) -> Vec<f64>, t: f64, y: f64, h: f64) -> f64 {
    let diff = |h: f64| {
        let d = |a: Vec<f64>, b: Vec<f64>| a.iter().zip(&b).map(|(u, v)| (u - v) / (2.0 * h)).collect::<Vec<f64>>();
        (d(f(t + h, y), f(t - h, y)), d(f(t, y + h), f(t, y - h)))
    };
    let (a1, b1) = diff(h);
    let (a2, b2) = diff(0.5 * h);
    let rich = |x: &[f64], z: &[f64]| x.iter().zip(z).map(|(u, v)| (4.0 * v - u) / 3.0).collect::<Vec<f64>>();
    let (dt, dy) = (rich(&a1, &a2), rich(&b1, &b2));
    if dt.len() == 2 {
        (dt[0] * dy[1] - dt[1] * dy[0]).abs()
    } else {
        let c = [dt[1] * dy[2] - dt[2] * dy[1], dt[2] * dy[0] - dt[0] * dy[2], dt[0] * dy[1] - dt[1] * dy[0]];
        (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt()
    }
}

fn geometry_oracles() -> Verdict {
    let (mut axial, mut polar, mut symp, mut invol, mut circle) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for (u, v) in weyl(10_000) {
        let c = CylinderPoint::new(u, -0.999_999 + 1.999_998 * v);
        let s = axial_unproject(&c).unwrap();
        axial = axial.max(cyl_distance(&c, &axial_project(&s).unwrap()));
        axial = axial.max(s.chord(&axial_unproject(&axial_project(&s).unwrap()).unwrap()));
        polar = polar.max(cyl_distance(&c, &polar_project(&polar_unproject(&c).unwrap()).unwrap()));

        let r = (1e-6 + (2.0 - 2e-6) * v).sqrt();
        let a = 2.0 * std::f64::consts::PI * u;
        let x = DiskPoint::new(r * a.cos(), r * a.sin());
        let z = disk_involution(&disk_involution(&x).unwrap()).unwrap();
        invol = invol.max((z.x[0] - x.x[0]).abs().max((z.x[1] - x.x[1]).abs()));
        let on = DiskPoint::new(a.cos(), a.sin());
        let w = disk_involution(&on).unwrap();
        circle = circle.max((w.x[0] - on.x[0]).abs().max((w.x[1] - on.x[1]).abs()));
    }
    for (u, v) in weyl(1000) {
        let y = -0.99 + 1.98 * v;
        let sph = |t: f64, y: f64| axial_unproject(&CylinderPoint::new(t, y)).unwrap().x.to_vec();
        let dsk = |t: f64, y: f64| polar_unproject(&CylinderPoint::new(t, y)).unwrap().x.to_vec();
        symp = symp.max((area_scale(sph, u, y, 1e-4) / (4.0 * std::f64::consts::PI) - 0.5).abs());
        symp = symp.max((area_scale(dsk, u, y, 1e-4) / std::f64::consts::PI - 0.5).abs());
    }
    verdict(
        axial <= 1e-12 && polar <= 1e-12 && symp <= 1e-8 && invol <= 1e-12 && circle <= 1e-12,
        format!("axial={axial:.2e} polar={polar:.2e} symplectic={symp:.2e} involution={invol:.2e} circle={circle:.2e}"),
    )
}

fn deformation_budgets(run: &LoadedRun) -> Verdict {
    let track = run.deformation(STAGES).expect("replay");
    let rows = convergence_tracker(&track.tracked).unwrap();
    let mut pass = rows.len() == STAGES;
    let mut parts = Vec::new();
    for (row, rec) in rows.iter().zip(&run.records) {
        let d = rec.deform.as_ref().expect("deformation recorded");
        pass &= row.ok() && row.dj == d.dj && row.dw == d.dw && d.dj < d.budget && d.dw < d.budget;
        parts.push(format!("n={} dJ={:.2e} dW={:.2e} budget={}", row.n, row.dj, row.dw, row.budget));
    }
    let cfg = &run.config;
    let mut retry = DeformationTrack::new(cfg.bump, tracking_points(cfg.seed, 4, cfg.tracking_r).unwrap());
    let s = retry.advance(1, &AmplitudeSchedule::new(2.0, 1.0, 30).unwrap()).unwrap();
    pass &= s.halvings > 0 && s.ok();
    parts.push(format!("oversized start halved {}x", s.halvings));
    verdict(pass, parts.join(", "))
}

#[test]
fn acceptance() {
    let dir = tempfile::tempdir().unwrap();
    let mut pairs = BTreeMap::new();
    pairs.insert("stages".to_string(), STAGES.to_string());
    pairs.insert("out".to_string(), dir.path().display().to_string());
    let cfg = ExperimentConfig::from_pairs(&pairs).unwrap();

    let start = Instant::now();
    run(&cfg).expect("three-stage run");
    let elapsed = start.elapsed();
    let r = load(dir.path()).unwrap();
    assert_eq!(r.stages.len(), STAGES + 1);

    let mut results: Vec<(&str, Verdict)> = Vec::new();

    let mut conj = over(&r, "conjugacy", 1..=STAGES, "residual");
    conj.pass &= elapsed <= RUNTIME_LIMIT;
    conj.detail = format!("{}, run {:.1}s", conj.detail, elapsed.as_secs_f64());
    results.push(("conjugacy invariance", conj));
    results.push(("symplecticity", over(&r, "symplectic", 0..=STAGES, "det_residual")));
    results.push(("density ladder", over(&r, "density", 1..=STAGES, "covering_radius")));
    results.push(("growth inequality", over(&r, "growth", 0..STAGES, "exhaustive")));

    let liou = check(&r, "liouville", STAGES);
    let rows: Vec<&str> = liou.values.iter().filter(|(k, _)| k == "row").map(|(_, v)| v.as_str()).collect();
    let denominators = rows.iter().all(|row| row.split(' ').nth(2) == Some("true"));
    results.push(("liouville certificate", verdict(liou.pass && denominators && rows.len() == STAGES + 1, format!("{} exact rows", rows.len()))));

    let mut sep = over(&r, "separation", 1..=STAGES, "grid_min");
    for n in 1..=STAGES {
        let rep = check(&r, "separation", n);
        sep.pass &= rep.get("bound_log2").is_some_and(|b| b.parse::<f64>().is_ok_and(f64::is_finite));
    }
    results.push(("periodic separation", sep));

    let mut lift = over(&r, "lift", 1..=STAGES, "seam_residual");
    for n in 2..=STAGES {
        let rep = check(&r, "lift", n);
        lift.pass &= rep.get("witness") == Some("found") && rep.get("fixed_points_exact") == Some("true");
        lift.detail.push_str(&format!(", n={n} witness steps={}", value(&rep, "witness_steps")));
    }
    results.push(("surface lift", lift));

    let mut glue = verdict(true, String::new());
    for n in [0, 1] {
        let rep = check(&r, "glue", n);
        glue.pass &= rep.pass && rep.get("unit_density_identity") == Some("true");
        glue.detail.push_str(&format!(
            "n={n} det={} support={} sigma={} mass={}; ",
            value(&rep, "det_residual"),
            value(&rep, "support_violations"),
            value(&rep, "sigma_residual"),
            value(&rep, "mass_residual")
        ));
    }
    results.push(("gluing pipeline", glue));

    let nij = check(&r, "nijenhuis", STAGES);
    let holo = check(&r, "holoform", STAGES);
    let sig = check(&r, "sigma", STAGES);
    results.push((
        "complex diagnostics",
        verdict(
            nij.pass && holo.pass && sig.pass,
            format!(
                "min slope={} (below noise {}), control={}, holoform={}, sigma={}",
                value(&nij, "min_slope"),
                value(&nij, "below_noise_points"),
                value(&nij, "control_non_integrable"),
                value(&holo, "residual"),
                value(&sig, "structure_residual")
            ),
        ),
    ));
    results.push(("structural convergence budget", deformation_budgets(&r)));
    results.push(("geometry oracles", geometry_oracles()));

    let mut err = std::io::stderr().lock();
    for (i, (name, v)) in results.iter().enumerate() {
        let _ = writeln!(err, "criterion {:>2} {:<30} {}  {}", i + 1, name, if v.pass { "PASS" } else { "FAIL" }, v.detail);
    }
    let failed: Vec<&str> = results.iter().filter(|(_, v)| !v.pass).map(|(n, _)| *n).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
