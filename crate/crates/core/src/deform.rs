//! Structural deformation track.
//!
//! Stage `n` glues a small entire shear/twist `D_n` and tracks
//! `J_n = H_n*J_o`, `Ω_n = H_n*Ω_o` with `H_n = D_n ∘ … ∘ D_1` at a fixed
//! set of points of `A_R`. A stage whose distance to the previous one
//! reaches `2^{-n}` is rebuilt at half the amplitude.

use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};
use crate::geometry::{domain_contains, ComplexCylinderPoint, DomainPoint, DomainSpec, Surface};
use crate::glue::{BumpProfile, EntireLeaf, EntireMapSpec, Glued};
use crate::structure::{omega_o, pullback_pair, stage_distance, Frame, TrackedStage, J_O};

/// Largest twist frequency used; above it the stage is the shear `a(y² + y³)`.
pub const MAX_TWIST_FREQ: u64 = 64;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AmplitudeSchedule {
    pub base: f64,
    pub ratio: f64,
    pub max_halvings: u32,
}

impl Default for AmplitudeSchedule {
    fn default() -> Self {
        AmplitudeSchedule { base: 0.02, ratio: 0.5, max_halvings: 30 }
    }
}

impl AmplitudeSchedule {
    pub fn new(base: f64, ratio: f64, max_halvings: u32) -> Result<Self> {
        if !(base > 0.0 && base.is_finite() && ratio > 0.0 && ratio <= 1.0) {
            return Err(Error::Domain(alloc::format!("bad amplitude schedule base = {base}, ratio = {ratio}")));
        }
        Ok(AmplitudeSchedule { base, ratio, max_halvings })
    }

    /// Amplitude proposed for stage `n ≥ 1`.
    pub fn amplitude(&self, n: usize) -> f64 {
        self.base * libm::pow(self.ratio, n.saturating_sub(1) as f64)
    }
}

fn unit(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

/// `count` seeded points of `A_R` with `|Re y| < 1`.
pub fn tracking_points(seed: u64, count: usize, r: f64) -> Result<Vec<Frame>> {
    let spec = DomainSpec::new(Surface::Cylinder, r, true)?;
    let im_t = 0.5 * libm::acosh(1.5 * r);
    let ymax = libm::sqrt(3.0 * r - 2.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let mut tries = 0usize;
    while out.len() < count {
        tries += 1;
        if tries > 1000 * (count + 1) {
            return Err(Error::SearchExhausted("tracking-point rejection sampling".into()));
        }
        let p = [unit(&mut rng), im_t * (2.0 * unit(&mut rng) - 1.0), 2.0 * unit(&mut rng) - 1.0, ymax * (2.0 * unit(&mut rng) - 1.0)];
        if domain_contains(&spec, &DomainPoint::Cylinder(ComplexCylinderPoint::from_frame(p))) {
            out.push(p);
        }
    }
    Ok(out)
}

/// `Shear(a y²) ∘ Twist(a' cos 2πmθ)` with `m = q`, where the twist is
/// damped by `cosh(2πm·im_theta)` so it stays of size `a` on the tracking
/// strip; for `q > MAX_TWIST_FREQ` the stage is the single shear `a(y² + y³)`.
pub fn deformation_spec(a: f64, q: u64, im_theta: f64) -> Result<EntireMapSpec> {
    if q == 0 {
        return Err(Error::Domain("frequency must be positive".into()));
    }
    if q > MAX_TWIST_FREQ {
        return EntireMapSpec::new(alloc::vec![EntireLeaf::Shear(alloc::vec![0.0, 0.0, a, a])], None);
    }
    let damp = libm::cosh(2.0 * core::f64::consts::PI * q as f64 * im_theta);
    EntireMapSpec::shear_twist(a, a / damp, q)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeformationStage {
    pub n: usize,
    pub amplitude: f64,
    pub halvings: u32,
    pub spec: EntireMapSpec,
    pub dj: f64,
    pub dw: f64,
    pub budget: f64,
}

impl DeformationStage {
    pub fn ok(&self) -> bool {
        self.dj < self.budget && self.dw < self.budget
    }
}

#[derive(Clone, Debug)]
pub struct DeformationTrack {
    pub bump: BumpProfile,
    pub quad_n: usize,
    pub fd_step: f64,
    pub points: Vec<Frame>,
    maps: Vec<Glued>,
    pub tracked: Vec<TrackedStage>,
    pub stages: Vec<DeformationStage>,
}

impl DeformationTrack {
    pub fn new(bump: BumpProfile, points: Vec<Frame>) -> Self {
        let base = TrackedStage { n: 0, j: alloc::vec![J_O; points.len()], w: alloc::vec![omega_o(); points.len()] };
        DeformationTrack { bump, quad_n: 64, fd_step: 1e-4, points, maps: Vec::new(), tracked: alloc::vec![base], stages: Vec::new() }
    }

    fn eval_h(maps: &[Glued], p: &Frame) -> Result<Frame> {
        let mut z = *p;
        for m in maps {
            z = m.eval_frame(&z)?;
        }
        Ok(z)
    }

    fn track(&self, maps: &[Glued], n: usize) -> Result<TrackedStage> {
        let h = |p: &Frame| Self::eval_h(maps, p);
        let mut j = Vec::with_capacity(self.points.len());
        let mut w = Vec::with_capacity(self.points.len());
        for p in &self.points {
            let (js, ws) = pullback_pair(&h, p, self.fd_step)?;
            j.push(js.j);
            w.push(ws.w);
        }
        Ok(TrackedStage { n, j, w })
    }

    fn im_theta(&self) -> f64 {
        self.points.iter().fold(0.0, |m, p| m.max(libm::fabs(p[1])))
    }

    /// Appends stage `n = len + 1` with twist frequency `q`, halving the
    /// proposed amplitude until both distances fall below `2^{-n}`.
    pub fn advance(&mut self, q: u64, schedule: &AmplitudeSchedule) -> Result<&DeformationStage> {
        let n = self.stages.len() + 1;
        let budget = libm::exp2(-(n as f64));
        let prev = self.tracked.last().expect("stage 0 is always tracked").clone();
        let mut a = schedule.amplitude(n);
        for halvings in 0..=schedule.max_halvings {
            let spec = deformation_spec(a, q, self.im_theta())?;
            let glued = match Glued::new(&spec, self.bump, self.quad_n, 1e-9) {
                Ok(g) => g,
                Err(Error::Domain(_)) | Err(Error::Quadrature(_)) => {
                    a *= 0.5;
                    continue;
                }
                Err(e) => return Err(e),
            };
            let mut maps = self.maps.clone();
            maps.push(glued.clone());
            let tracked = match self.track(&maps, n) {
                Ok(t) => t,
                Err(Error::SingularJacobian(_)) => {
                    a *= 0.5;
                    continue;
                }
                Err(e) => return Err(e),
            };
            let (dj, dw) = stage_distance(&prev, &tracked)?;
            let stage = DeformationStage { n, amplitude: a, halvings, spec, dj, dw, budget };
            if stage.ok() {
                self.maps.push(glued);
                self.tracked.push(tracked);
                self.stages.push(stage);
                return Ok(self.stages.last().expect("just pushed"));
            }
            a *= 0.5;
        }
        Err(Error::CertificateFailure(alloc::format!(
            "stage {n} stayed above the 2^-{n} budget after {} halvings",
            schedule.max_halvings
        )))
    }

    /// Rebuilds a stage at a known amplitude, without the budget search.
    pub fn replay(&mut self, q: u64, amplitude: f64, halvings: u32) -> Result<&DeformationStage> {
        let n = self.stages.len() + 1;
        let spec = deformation_spec(amplitude, q, self.im_theta())?;
        let glued = Glued::new(&spec, self.bump, self.quad_n, 1e-9)?;
        let mut maps = self.maps.clone();
        maps.push(glued.clone());
        let tracked = self.track(&maps, n)?;
        let (dj, dw) = stage_distance(self.tracked.last().expect("stage 0 is always tracked"), &tracked)?;
        self.maps.push(glued);
        self.tracked.push(tracked);
        self.stages.push(DeformationStage { n, amplitude, halvings, spec, dj, dw, budget: libm::exp2(-(n as f64)) });
        Ok(self.stages.last().expect("just pushed"))
    }

    /// `H_n` applied to a frame.
    pub fn eval(&self, p: &Frame) -> Result<Frame> {
        Self::eval_h(&self.maps, p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::convergence_tracker;

    #[test]
    fn points_are_seeded_and_inside() {
        let a = tracking_points(7, 12, 2.0).unwrap();
        assert_eq!(a, tracking_points(7, 12, 2.0).unwrap());
        assert_ne!(a, tracking_points(8, 12, 2.0).unwrap());
        assert!(a.iter().all(|p| p[2].abs() < 1.0 && (0.0..1.0).contains(&p[0])));
    }

    #[test]
    fn large_frequency_falls_back_to_shears() {
        let s = deformation_spec(0.01, 1000, 0.5).unwrap();
        assert_eq!(s.leaves.len(), 1);
        assert!(s.q.is_none());
        assert_eq!(deformation_spec(0.01, 3, 0.0).unwrap().q, Some(3));
    }

    #[test]
    fn schedule_meets_budgets() {
        let bump = BumpProfile::new(0.05, 0.2).unwrap();
        let mut track = DeformationTrack::new(bump, tracking_points(1, 6, 2.0).unwrap());
        for q in [1, 2, 1000] {
            track.advance(q, &AmplitudeSchedule::default()).unwrap();
        }
        let rows = convergence_tracker(&track.tracked).unwrap();
        assert_eq!(rows.len(), 3);
        for (r, s) in rows.iter().zip(&track.stages) {
            assert!(r.ok(), "{r:?}");
            assert_eq!(r.dj, s.dj);
        }
        let mut again = DeformationTrack::new(bump, track.points.clone());
        for (q, s) in [1, 2, 1000].into_iter().zip(&track.stages) {
            again.replay(q, s.amplitude, s.halvings).unwrap();
        }
        assert_eq!(again.stages, track.stages);
    }

    #[test]
    fn oversized_amplitude_is_halved() {
        let bump = BumpProfile::new(0.05, 0.2).unwrap();
        let mut track = DeformationTrack::new(bump, tracking_points(3, 4, 2.0).unwrap());
        let s = track.advance(1, &AmplitudeSchedule::new(2.0, 1.0, 30).unwrap()).unwrap();
        assert!(s.halvings > 0);
        assert!(s.ok());
    }
}
