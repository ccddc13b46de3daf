//! Named diagnostics over a recorded run.

use std::fmt::Write as _;
use std::path::PathBuf;

use abclab_core::deform::{tracking_points, DeformationTrack};
use abclab_core::engine::{
    conjugacy_residual, covering_radius, growth_report, lift_to_surface, orbit_points, separation_report,
    symplectic_residual, transitivity_witness,
};
use abclab_core::geometry::Surface;
use abclab_core::glue::{glue_and_report_with, volume_correction, EntireMapSpec, GlueOptions};
use abclab_core::rational::liouville_certificate;
use abclab_core::structure::{
    holomorphic_form_residual, nijenhuis_sweep, pullback_form, pullback_structure, sigma_map_residual,
    sigma_structure_residual, twisted_structure, Frame,
};
use abclab_core::text::fmt_f64;

use crate::error::{LabError, LabResult};
use crate::record::write_atomic;
use crate::run::LoadedRun;

/// Checks accepted by [`diagnose`].
pub const CHECKS: &[&str] = &[
    "symplectic",
    "conjugacy",
    "density",
    "separation",
    "nijenhuis",
    "holoform",
    "sigma",
    "glue",
    "liouville",
    "growth",
    "lift",
];

/// Random points of the complexified cylinder used by the structure checks.
pub const STRUCTURE_POINTS: usize = 20;
pub const NIJENHUIS_STEPS: [f64; 3] = [1e-2, 1e-3, 1e-4];
/// A residual at or below `NIJENHUIS_NOISE / step` is differentiated
/// roundoff of the pulled-back structure and carries no slope.
pub const NIJENHUIS_NOISE: f64 = 50.0 * f64::EPSILON / PULLBACK_STEP;
/// Step of the inner difference that builds `h*J_o` for the Nijenhuis sweep.
const PULLBACK_STEP: f64 = 1e-3;
const FORM_STEP: f64 = 1e-4;
const CLOSEDNESS_STEP: f64 = 3e-4;
/// Coupling of the non-integrable control structure.
const TWIST_CONTROL: f64 = 2.0;

#[derive(Clone, Debug, PartialEq)]
pub struct CheckReport {
    pub check: String,
    pub stage: usize,
    pub pass: bool,
    pub values: Vec<(String, String)>,
    /// Extra plot-ready file written next to the report.
    pub field: Option<(String, String)>,
}

impl CheckReport {
    fn new(check: &str, stage: usize) -> Self {
        CheckReport { check: check.to_string(), stage, pass: true, values: Vec::new(), field: None }
    }

    fn put(&mut self, k: &str, v: impl ToString) {
        self.values.push((k.to_string(), v.to_string()));
    }

    fn num(&mut self, k: &str, v: f64) {
        self.put(k, fmt_f64(v));
    }

    /// Records `value ≤ limit` and folds it into the verdict.
    fn bound(&mut self, k: &str, value: f64, limit: f64) {
        self.num(k, value);
        self.num(&format!("{k}_limit"), limit);
        self.pass &= value <= limit;
    }

    pub fn get(&self, k: &str) -> Option<&str> {
        self.values.iter().find(|(a, _)| a == k).map(|(_, v)| v.as_str())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("# abclab diagnostic report\n");
        let _ = writeln!(s, "check = {}", self.check);
        let _ = writeln!(s, "stage = {}", self.stage);
        let _ = writeln!(s, "status = {}", if self.pass { "pass" } else { "breach" });
        for (k, v) in &self.values {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }

    pub fn file_name(&self) -> String {
        format!("{}_stage_{:03}.txt", self.check, self.stage)
    }
}

/// Runs `check` on stage `n` of `run` and writes the report (and field
/// scan, when the check has one) under `<run>/reports/`.
pub fn diagnose(run: &LoadedRun, check: &str, n: usize) -> LabResult<(CheckReport, PathBuf)> {
    if !CHECKS.contains(&check) {
        return Err(LabError::UnknownCheck(check.to_string()));
    }
    let rep = compute(run, check, n).map_err(|e| match e {
        LabError::Core(source) => LabError::Stage { stage: n, source },
        e => e,
    })?;
    let dir = run.dir.join("reports");
    std::fs::create_dir_all(&dir).map_err(LabError::io(&dir))?;
    let path = dir.join(rep.file_name());
    write_atomic(&path, &rep.to_text())?;
    if let Some((name, text)) = &rep.field {
        write_atomic(&dir.join(name), text)?;
    }
    Ok((rep, path))
}

fn compute(run: &LoadedRun, check: &str, n: usize) -> LabResult<CheckReport> {
    let cfg = &run.config;
    let engine = cfg.engine();
    let stage = run.stage(n)?;
    let mut rep = CheckReport::new(check, n);
    match check {
        "symplectic" => rep.bound("det_residual", symplectic_residual(stage, &engine)?, cfg.tol.symplectic),
        "conjugacy" => {
            let prev = if n == 0 { stage } else { run.stage(n - 1)? };
            rep.put("alpha", &prev.alpha);
            let r = conjugacy_residual(&prev.conjugators, &stage.conjugators, &prev.alpha, &engine)?;
            rep.bound("residual", r, cfg.tol.conjugacy);
        }
        "density" => {
            let pts = orbit_points(&stage.conjugators, &stage.alpha, stage.orbit.base, &stage.orbit.indices, &engine)?;
            let r = covering_radius(&pts, engine.grid_n);
            rep.put("segment_points", pts.len());
            rep.put("segment_length", stage.orbit_length());
            rep.num("recorded_radius", stage.orbit.radius);
            rep.pass &= r == stage.orbit.radius;
            rep.bound("covering_radius", r, 3f64.powi(-(n as i32)) + 2.0 / engine.grid_n as f64);
        }
        "separation" => {
            let s = separation_report(stage, &engine)?;
            rep.num("q_log2", s.q_log2);
            rep.put("exhaustive", s.exhaustive);
            rep.num("grid_min", s.grid_min());
            rep.num("bound_log2", s.bound_log2);
            rep.num("certified", s.certified());
            for (k, lo, hi) in &s.rows {
                rep.put("row", format!("{k} {} {}", fmt_f64(*lo), fmt_f64(*hi)));
            }
            rep.pass &= s.pass();
        }
        "growth" => {
            let next = run.stage(n + 1)?;
            let g = growth_report(stage, next, cfg.tol.growth, &engine)?;
            rep.put("exhaustive", g.exhaustive);
            rep.num("drift_log2", g.drift_log2);
            for r in &g.rows {
                rep.put("row", format!("{} {} {} {}", r.k, fmt_f64(r.prev_max), fmt_f64(r.next_max), fmt_f64(r.limit)));
            }
            rep.pass &= g.pass();
        }
        "liouville" => {
            let alphas: Vec<_> = run.stages[..=n].iter().map(|s| s.alpha.clone()).collect();
            let l = liouville_certificate(&alphas)?;
            for r in &l.rows {
                rep.put(
                    "row",
                    format!(
                        "{} {} {} {} {} {}",
                        r.n,
                        fmt_f64(r.denominator_log2),
                        r.denominator_ok,
                        r.gap.as_deref().unwrap_or("none"),
                        r.gap_ok,
                        r.tail_ok
                    ),
                );
            }
            rep.pass &= l.pass();
        }
        "lift" => {
            let surface = if cfg.surface == Surface::Cylinder { Surface::Sphere } else { cfg.surface };
            let lift = lift_to_surface(stage, surface)?;
            rep.put("surface", surface.name());
            let fixed: Vec<Vec<f64>> = match surface {
                Surface::Sphere => vec![vec![0.0, 0.0, 1.0], vec![0.0, 0.0, -1.0]],
                _ => vec![vec![0.0, 0.0]],
            };
            let fixes = fixed.iter().all(|p| lift.eval(p, &engine.flow).ok().as_ref() == Some(p));
            rep.put("fixed_points_exact", fixes);
            rep.pass &= fixes;
            rep.bound("seam_residual", lift.seam_residual(1000, &engine.flow)?, cfg.tol.seam);
            rep.num("delta", cfg.witness_delta);
            match transitivity_witness(stage, &lift, cfg.witness_delta, &engine) {
                Ok(w) => {
                    rep.put("witness", "found");
                    rep.num("witness_start_distance", w.start_distance);
                    rep.put("witness_steps", &w.steps);
                    rep.put("witness_end", w.end_surface.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(" "));
                }
                Err(e) => {
                    rep.put("witness", format!("none ({e})"));
                    rep.pass &= n < 2;
                }
            }
        }
        "glue" => glue_check(run, n, &mut rep)?,
        "nijenhuis" | "holoform" | "sigma" => structure_check(run, check, n, &mut rep)?,
        _ => unreachable!("checked against CHECKS"),
    }
    Ok(rep)
}

fn glue_check(run: &LoadedRun, n: usize, rep: &mut CheckReport) -> LabResult<()> {
    let cfg = &run.config;
    let spec = if n > 0 && cfg.deform {
        run.deformation(n)?.stages[n - 1].spec.clone()
    } else {
        EntireMapSpec::shear_twist(cfg.schedule.base, 0.75 * cfg.schedule.base, 2)?
    };
    rep.put("entire_leaves", spec.leaves.len());
    let opts = GlueOptions { quad_n: cfg.quad_n, complex_n: cfg.glue_complex_n, ..GlueOptions::default() };
    let g = glue_and_report_with(&spec, &cfg.bump, cfg.glue_r, cfg.glue_grid, &opts)?;
    rep.bound("det_residual", g.det_residual, cfg.tol.glue_det);
    rep.put("support_violations", g.support_violations);
    rep.put("support_samples", g.support_samples);
    rep.pass &= g.support_violations == 0;
    rep.bound("sigma_residual", g.sigma_residual, cfg.tol.glue_sigma);
    rep.num("mass", g.mass);
    rep.bound("mass_residual", g.mass_residual, cfg.tol.mass);
    rep.num("tau", g.tau);
    rep.num("closeness", g.closeness);
    rep.num("structure_distance", g.structure_distance);
    rep.num("form_distance", g.form_distance);
    rep.put("singular_samples", g.singular_samples);
    if let Some(r) = g.rotation_residual {
        rep.num("rotation_residual", r);
    }
    let one = |_: f64, _: f64| -> abclab_core::Result<f64> { Ok(1.0) };
    let vc = volume_correction(one, &cfg.bump, cfg.quad_n)?;
    let mut identity = vc.tau() == 0.0;
    for i in 0..64 {
        let (t, y) = (i as f64 / 64.0, -0.999 + 1.998 * ((i * 29) % 64) as f64 / 63.0);
        identity &= vc.forward(t, y)? == (t, y) && vc.inverse(t, y)? == (t, y);
    }
    rep.put("unit_density_identity", identity);
    rep.pass &= identity;
    Ok(())
}

/// `H_n`, the `STRUCTURE_POINTS` seeded sample points, and the track.
fn structure_setup(run: &LoadedRun, n: usize) -> LabResult<(DeformationTrack, Vec<Frame>)> {
    let cfg = &run.config;
    let track = if cfg.deform {
        run.deformation(n)?
    } else if n == 0 {
        DeformationTrack::new(cfg.bump, Vec::new())
    } else {
        return Err(LabError::Usage("structure checks need a run with deform = true".into()));
    };
    let pts = tracking_points(cfg.seed.wrapping_add(1), STRUCTURE_POINTS, cfg.tracking_r)?;
    Ok((track, pts))
}

fn frame_cols(p: &Frame) -> String {
    p.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(" ")
}

fn structure_check(run: &LoadedRun, check: &str, n: usize, rep: &mut CheckReport) -> LabResult<()> {
    let cfg = &run.config;
    let (track, pts) = structure_setup(run, n)?;
    let h = |p: &Frame| track.eval(p);
    rep.put("points", pts.len());
    rep.put("seed", cfg.seed.wrapping_add(1));
    let mut field = String::new();
    match check {
        "nijenhuis" => {
            let jf = |p: &Frame| Ok(pullback_structure(&h, p, PULLBACK_STEP)?.j);
            let control = twisted_structure(TWIST_CONTROL);
            let _ = writeln!(field, "# theta_re theta_im y_re y_im J00 J01 .. J33 (row-major pullback of J_o)");
            let (mut worst_slope, mut vanishing) = (f64::INFINITY, 0usize);
            let mut control_ok = true;
            for p in &pts {
                let s = nijenhuis_sweep(&jf, p, &NIJENHUIS_STEPS)?;
                match s.resolved_slope(NIJENHUIS_NOISE) {
                    Some(k) => worst_slope = worst_slope.min(k),
                    None => vanishing += 1,
                }
                rep.put(
                    "row",
                    format!("{} {} {}", frame_cols(p), s.residuals.iter().map(|r| fmt_f64(*r)).collect::<Vec<_>>().join(" "), fmt_f64(s.slope)),
                );
                let c = nijenhuis_sweep(&control, p, &NIJENHUIS_STEPS)?;
                let (lo, hi) = c.residuals.iter().fold((f64::INFINITY, 0.0f64), |(a, b), r| (a.min(*r), b.max(*r)));
                control_ok &= lo >= 1e-2 && hi / lo < 1.01;
                let j = jf(p)?;
                let _ = writeln!(field, "{} {}", frame_cols(p), j.iter().flatten().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(" "));
            }
            rep.put("below_noise_points", vanishing);
            rep.num("noise", NIJENHUIS_NOISE);
            if worst_slope.is_finite() {
                rep.num("min_slope", worst_slope);
            }
            rep.num("slope_limit", cfg.tol.nijenhuis_slope);
            rep.pass &= worst_slope >= cfg.tol.nijenhuis_slope;
            rep.put("control_non_integrable", control_ok);
            rep.pass &= control_ok;
        }
        "holoform" => {
            let jf = |p: &Frame| Ok(pullback_structure(&h, p, FORM_STEP)?.j);
            let wf = |p: &Frame| Ok(pullback_form(&h, p, FORM_STEP)?.w);
            let _ = writeln!(field, "# theta_re theta_im y_re y_im then re im of W01 W02 W03 W12 W13 W23 (pullback of Omega_o)");
            let (mut td, mut cl) = (0.0f64, 0.0f64);
            for p in &pts {
                let r = holomorphic_form_residual(&wf, &jf, p, CLOSEDNESS_STEP)?;
                td = td.max(r.type_defect);
                cl = cl.max(r.closedness);
                let w = wf(p)?;
                let mut cols = Vec::new();
                for a in 0..4 {
                    for b in a + 1..4 {
                        cols.push(fmt_f64(w[a][b].re));
                        cols.push(fmt_f64(w[a][b].im));
                    }
                }
                let _ = writeln!(field, "{} {}", frame_cols(p), cols.join(" "));
            }
            rep.num("type_defect", td);
            rep.num("closedness", cl);
            rep.bound("residual", td.max(cl), cfg.tol.holoform);
        }
        "sigma" => {
            let jf = |p: &Frame| Ok(pullback_structure(&h, p, FORM_STEP)?.j);
            let (mut sj, mut sm) = (0.0f64, 0.0f64);
            for p in &pts {
                sj = sj.max(sigma_structure_residual(&jf, p)?);
                sm = sm.max(sigma_map_residual(&h, p)?);
            }
            rep.bound("structure_residual", sj, cfg.tol.sigma);
            rep.bound("map_residual", sm, cfg.tol.glue_sigma);
        }
        _ => unreachable!(),
    }
    if !field.is_empty() {
        rep.field = Some((format!("{check}_stage_{n:03}.field"), field));
    }
    Ok(())
}
