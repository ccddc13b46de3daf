//! Lifts of a stage to the sphere and the disk.
//!
//! On the punctured surface the lift is `π⁻¹∘f_n∘π`; the poles (sphere) or
//! the center (disk) are fixed, as by the ambient rotation by `α_n`. The
//! conjugators are the identity near `|y| = 1`, so there the lift is exactly
//! that rotation.

use alloc::format;
use alloc::vec::Vec;

use num_bigint::BigUint;

use super::{EngineConfig, SchemeStage};
use crate::error::{Error, Result};
use crate::geometry::{
    axial_project, axial_unproject, polar_project, polar_unproject, CylinderPoint, DiskPoint, SpherePoint, Surface,
};
use crate::map::{FlowConfig, MapExpr};
use crate::turns::Turns;

#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceLift {
    pub surface: Surface,
    pub n: usize,
    pub alpha: Turns,
    pub map: MapExpr,
}

/// Points of `π⁻¹(𝕋 × {±(1 − 10⁻³)})` used for the seam check.
pub const SEAM_OFFSET: f64 = 1e-3;

impl SurfaceLift {
    fn rotate2(&self, x: f64, y: f64) -> (f64, f64) {
        let (s, c) = libm::sincos(2.0 * core::f64::consts::PI * self.alpha.to_f64());
        (c * x - s * y, s * x + c * y)
    }

    /// The ambient rotation about the vertical axis (sphere) or the center (disk).
    pub fn rotate(&self, p: &[f64]) -> Vec<f64> {
        let (a, b) = self.rotate2(p[0], p[1]);
        let mut v = alloc::vec![a, b];
        v.extend_from_slice(&p[2..]);
        v
    }

    pub fn eval_sphere(&self, s: &SpherePoint, cfg: &FlowConfig) -> Result<SpherePoint> {
        if s.x[0] == 0.0 && s.x[1] == 0.0 {
            return Ok(*s);
        }
        let c = axial_project(s)?;
        axial_unproject(&self.map.eval(&c, cfg)?)
    }

    pub fn eval_disk(&self, d: &DiskPoint, cfg: &FlowConfig) -> Result<DiskPoint> {
        if d.norm_sq() == 0.0 {
            return Ok(*d);
        }
        polar_unproject(&self.map.eval(&polar_project(d)?, cfg)?)
    }

    /// Cylinder point to surface coordinates.
    pub fn to_surface(&self, c: &CylinderPoint) -> Result<Vec<f64>> {
        Ok(match self.surface {
            Surface::Sphere => axial_unproject(c)?.x.to_vec(),
            _ => polar_unproject(c)?.x.to_vec(),
        })
    }

    /// Evaluates the lift on surface coordinates.
    pub fn eval(&self, p: &[f64], cfg: &FlowConfig) -> Result<Vec<f64>> {
        Ok(match self.surface {
            Surface::Sphere => self.eval_sphere(&SpherePoint::new([p[0], p[1], p[2]])?, cfg)?.x.to_vec(),
            _ => self.eval_disk(&DiskPoint::new(p[0], p[1]), cfg)?.x.to_vec(),
        })
    }

    /// Largest distance between the lift and the ambient rotation over
    /// `count` points at `|y| = 1 − 10⁻³`, split between the two ends.
    pub fn seam_residual(&self, count: usize, cfg: &FlowConfig) -> Result<f64> {
        let half = count.div_ceil(2);
        let mut worst: f64 = 0.0;
        for end in [1.0, -1.0] {
            for i in 0..half {
                let c = CylinderPoint::new((i as f64 + 0.5) / half as f64, end * (1.0 - SEAM_OFFSET));
                let p = self.to_surface(&c)?;
                let a = self.eval(&p, cfg)?;
                let b = self.rotate(&p);
                let d = a.iter().zip(&b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>();
                worst = worst.max(libm::sqrt(d));
            }
        }
        Ok(worst)
    }
}

pub fn lift_to_surface(stage: &SchemeStage, surface: Surface) -> Result<SurfaceLift> {
    if surface == Surface::Cylinder {
        return Err(Error::Domain("lifts go to the sphere or the disk".into()));
    }
    Ok(SurfaceLift { surface, n: stage.n, alpha: stage.alpha.turns(), map: stage.map() })
}

/// An orbit segment from near the fixed point (north pole, or disk center)
/// to the far side (southern hemisphere, or the boundary collar).
#[derive(Clone, Debug, PartialEq)]
pub struct Witness {
    pub start: CylinderPoint,
    pub start_surface: Vec<f64>,
    /// Distance of the start from the fixed point's circle, `½|y ∓ 1|`.
    pub start_distance: f64,
    pub steps: BigUint,
    pub end: CylinderPoint,
    pub end_surface: Vec<f64>,
}

/// Searches the stage's certified orbit segment for a witness.
pub fn transitivity_witness(stage: &SchemeStage, lift: &SurfaceLift, delta: f64, cfg: &EngineConfig) -> Result<Witness> {
    let scale = libm::pow(3.0, -(stage.j as f64));
    if !(delta > scale) {
        return Err(Error::WitnessNotFound(format!(
            "δ = {delta} is below the certified density scale 3^-{} at stage {}",
            stage.j, stage.n
        )));
    }
    // sphere: start near y = 1, reach y < 0; disk: start near y = −1, reach ½(1 − y) ≤ δ
    let near = |y: f64| match lift.surface {
        Surface::Sphere => 0.5 * (1.0 - y),
        _ => 0.5 * (1.0 + y),
    };
    let far = |y: f64| match lift.surface {
        Surface::Sphere => y < 0.0,
        _ => 0.5 * (1.0 - y) <= delta,
    };
    let pts = &stage.orbit.points;
    let idx = &stage.orbit.indices;
    let mut order: Vec<usize> = (0..pts.len()).filter(|&i| near(pts[i].y) <= delta).collect();
    order.sort_by(|&a, &b| near(pts[a].y).total_cmp(&near(pts[b].y)));
    for i in order {
        let Some(j) = (i + 1..pts.len()).find(|&j| far(pts[j].y)) else { continue };
        let steps = &idx[j] - &idx[i];
        let start = pts[i];
        let end = stage.iterate(&start, &steps, &cfg.flow)?;
        if !far(end.y) {
            continue;
        }
        return Ok(Witness {
            start_surface: lift.to_surface(&start)?,
            start_distance: near(start.y),
            start,
            steps,
            end_surface: lift.to_surface(&end)?,
            end,
        });
    }
    Err(Error::WitnessNotFound(format!("no orbit point within {delta} of the fixed point leads across")))
}
