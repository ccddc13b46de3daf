//! Points, the cylinder metric, and the symplectic charts between the
//! sphere, the disk and the cylinder.
//!
//! Area forms are normalized to total mass 1: `½ dθ∧dy` on the cylinder,
//! `(1/π) dx₁∧dx₂` on the disk and area/4π on the sphere.

use core::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::turns::Turns;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CylinderPoint {
    pub theta: Turns,
    pub y: f64,
}

impl CylinderPoint {
    pub fn new(theta: f64, y: f64) -> Self {
        CylinderPoint { theta: Turns::from_f64(theta), y }
    }

    pub fn theta_f64(&self) -> f64 {
        self.theta.to_f64()
    }
}

/// Point of `C/Z × C`. The real part of θ is kept in [0, 1).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComplexCylinderPoint {
    pub theta: Complex64,
    pub y: Complex64,
}

impl ComplexCylinderPoint {
    pub fn new(theta: Complex64, y: Complex64) -> Self {
        ComplexCylinderPoint { theta, y }.normalized()
    }

    pub fn from_real(p: &CylinderPoint) -> Self {
        ComplexCylinderPoint {
            theta: Complex64::new(p.theta.to_f64(), 0.0),
            y: Complex64::new(p.y, 0.0),
        }
    }

    pub fn from_frame(v: [f64; 4]) -> Self {
        ComplexCylinderPoint::new(Complex64::new(v[0], v[1]), Complex64::new(v[2], v[3]))
    }

    /// Real coordinates (Re θ, Im θ, Re y, Im y).
    pub fn frame(&self) -> [f64; 4] {
        [self.theta.re, self.theta.im, self.y.re, self.y.im]
    }

    pub fn normalized(mut self) -> Self {
        self.theta.re -= libm::floor(self.theta.re);
        if self.theta.re >= 1.0 {
            self.theta.re = 0.0;
        }
        self
    }

    /// The real structure σ(θ, y) = (θ̄, ȳ).
    pub fn conj(&self) -> Self {
        ComplexCylinderPoint { theta: self.theta.conj(), y: self.y.conj() }.normalized()
    }

    pub fn is_real(&self) -> bool {
        self.theta.im == 0.0 && self.y.im == 0.0
    }

    pub fn to_real(&self) -> CylinderPoint {
        CylinderPoint::new(self.theta.re, self.y.re)
    }
}

/// Distance on `C/Z × C` compatible with the cylinder metric on real points.
pub fn complex_cyl_distance(a: &ComplexCylinderPoint, b: &ComplexCylinderPoint) -> f64 {
    let mut dre = a.theta.re - b.theta.re;
    dre -= libm::round(dre);
    let dt = libm::hypot(dre, a.theta.im - b.theta.im);
    let dy = 0.5 * (a.y - b.y).norm();
    dt.max(dy)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpherePoint {
    pub x: [f64; 3],
}

impl SpherePoint {
    /// Renormalizes onto the unit sphere.
    pub fn new(x: [f64; 3]) -> Result<Self> {
        let n = libm::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::Range("zero or non-finite vector".into()));
        }
        Ok(SpherePoint { x: [x[0] / n, x[1] / n, x[2] / n] })
    }

    pub fn chord(&self, o: &SpherePoint) -> f64 {
        let d = [self.x[0] - o.x[0], self.x[1] - o.x[1], self.x[2] - o.x[2]];
        libm::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2])
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiskPoint {
    pub x: [f64; 2],
}

impl DiskPoint {
    pub fn new(x1: f64, x2: f64) -> Self {
        DiskPoint { x: [x1, x2] }
    }

    pub fn norm_sq(&self) -> f64 {
        self.x[0] * self.x[0] + self.x[1] * self.x[1]
    }
}

pub type ComplexSpherePoint = [Complex64; 3];
pub type ComplexDiskPoint = [Complex64; 2];

pub fn cyl_distance(p: &CylinderPoint, q: &CylinderPoint) -> f64 {
    p.theta.distance(q.theta).max(0.5 * libm::fabs(p.y - q.y))
}

pub fn axial_project(s: &SpherePoint) -> Result<CylinderPoint> {
    let [x1, x2, x3] = s.x;
    if libm::fabs(x3) >= 1.0 || (x1 == 0.0 && x2 == 0.0) {
        return Err(Error::Pole);
    }
    Ok(CylinderPoint { theta: Turns::from_f64(libm::atan2(x2, x1) / (2.0 * PI)), y: x3 })
}

pub fn axial_unproject(c: &CylinderPoint) -> Result<SpherePoint> {
    if !(libm::fabs(c.y) < 1.0) {
        return Err(Error::Range(alloc::format!("|y| = {} is not below 1", libm::fabs(c.y))));
    }
    let r = libm::sqrt(1.0 - c.y * c.y);
    let a = 2.0 * PI * c.theta.to_f64();
    Ok(SpherePoint { x: [r * libm::cos(a), r * libm::sin(a), c.y] })
}

fn angle_of(u: Complex64, v: Complex64) -> Complex64 {
    // (1/2πi) log((u + i v)/√(u² + v²))
    let w = (u + I * v) / (u * u + v * v).sqrt();
    w.ln() / (2.0 * PI * I)
}

pub fn axial_project_complex(z: &ComplexSpherePoint) -> Result<ComplexCylinderPoint> {
    if libm::fabs(z[2].re) >= 1.0 {
        return Err(Error::Pole);
    }
    let s = z[0] * z[0] + z[1] * z[1];
    if s.norm() == 0.0 {
        return Err(Error::Pole);
    }
    Ok(ComplexCylinderPoint::new(angle_of(z[0], z[1]), z[2]))
}

pub fn axial_unproject_complex(c: &ComplexCylinderPoint) -> Result<ComplexSpherePoint> {
    if !(libm::fabs(c.y.re) < 1.0) {
        return Err(Error::Range("|Re y| is not below 1".into()));
    }
    let r = (Complex64::new(1.0, 0.0) - c.y * c.y).sqrt();
    let a = c.theta * (2.0 * PI);
    Ok([r * a.cos(), r * a.sin(), c.y])
}

pub fn polar_project(d: &DiskPoint) -> Result<CylinderPoint> {
    let s = d.norm_sq();
    if s == 0.0 {
        return Err(Error::Origin);
    }
    Ok(CylinderPoint {
        theta: Turns::from_f64(libm::atan2(d.x[1], d.x[0]) / (2.0 * PI)),
        y: 2.0 * s - 1.0,
    })
}

pub fn polar_unproject(c: &CylinderPoint) -> Result<DiskPoint> {
    if !(c.y > -1.0) {
        return Err(Error::Origin);
    }
    let r = libm::sqrt(0.5 * (c.y + 1.0));
    let a = 2.0 * PI * c.theta.to_f64();
    Ok(DiskPoint { x: [r * libm::cos(a), r * libm::sin(a)] })
}

pub fn polar_project_complex(z: &ComplexDiskPoint) -> Result<ComplexCylinderPoint> {
    let s = z[0] * z[0] + z[1] * z[1];
    if !(s.re > 0.0) {
        return Err(Error::Origin);
    }
    Ok(ComplexCylinderPoint::new(angle_of(z[0], z[1]), s * 2.0 - 1.0))
}

pub fn polar_unproject_complex(c: &ComplexCylinderPoint) -> Result<ComplexDiskPoint> {
    if !(c.y.re > -1.0) {
        return Err(Error::Origin);
    }
    let r = ((c.y + 1.0) * 0.5).sqrt();
    let a = c.theta * (2.0 * PI);
    Ok([r * a.cos(), r * a.sin()])
}

/// ψ(x) = √(2 − ‖x‖²)·x/‖x‖ on the annulus 0 < ‖x‖² < 2.
pub fn disk_involution(d: &DiskPoint) -> Result<DiskPoint> {
    let s = d.norm_sq();
    if !(s > 0.0 && s < 2.0) {
        return Err(Error::Range(alloc::format!("‖x‖² = {s} outside (0, 2)")));
    }
    let f = libm::sqrt(2.0 / s - 1.0);
    Ok(DiskPoint { x: [f * d.x[0], f * d.x[1]] })
}

pub fn disk_involution_complex(z: &ComplexDiskPoint) -> Result<ComplexDiskPoint> {
    let s = z[0] * z[0] + z[1] * z[1];
    if !(s.re > 0.0 && s.re < 2.0) {
        return Err(Error::Range("Re(z₁² + z₂²) outside (0, 2)".into()));
    }
    let f = (Complex64::new(2.0, 0.0) - s).sqrt() / s.sqrt();
    Ok([z[0] * f, z[1] * f])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Surface {
    Cylinder,
    Sphere,
    Disk,
}

impl Surface {
    pub fn name(&self) -> &'static str {
        match self {
            Surface::Cylinder => "cylinder",
            Surface::Sphere => "sphere",
            Surface::Disk => "disk",
        }
    }

    pub fn parse(s: &str) -> Result<Surface> {
        match s {
            "cylinder" => Ok(Surface::Cylinder),
            "sphere" => Ok(Surface::Sphere),
            "disk" => Ok(Surface::Disk),
            _ => Err(Error::Parse(alloc::format!("unknown surface `{s}`"))),
        }
    }
}

/// Complexified domain `𝔸_ρ`, `𝕊_ρ` or `𝔹_ρ`; `punctured` selects the
/// strips `Ǎ_ρ`, `Š_ρ`, `Ď_ρ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DomainSpec {
    pub surface: Surface,
    pub rho: f64,
    pub punctured: bool,
}

impl DomainSpec {
    pub fn new(surface: Surface, rho: f64, punctured: bool) -> Result<Self> {
        if !(rho > 1.0) {
            return Err(Error::Domain(alloc::format!("ρ = {rho} must exceed 1")));
        }
        Ok(DomainSpec { surface, rho, punctured })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DomainPoint {
    Cylinder(ComplexCylinderPoint),
    Sphere(ComplexSpherePoint),
    Disk(ComplexDiskPoint),
}

pub fn domain_contains(spec: &DomainSpec, point: &DomainPoint) -> bool {
    match (spec.surface, point) {
        (Surface::Cylinder, DomainPoint::Cylinder(c)) => {
            let e = libm::exp(-2.0 * c.theta.im) + libm::exp(2.0 * c.theta.im);
            e + c.y.norm_sqr() <= 3.0 * spec.rho && (!spec.punctured || libm::fabs(c.y.re) < 1.0)
        }
        (Surface::Sphere, DomainPoint::Sphere(z)) => {
            let on = (z[0] * z[0] + z[1] * z[1] + z[2] * z[2] - 1.0).norm() <= 1e-12;
            let m: f64 = z.iter().map(|w| w.norm_sqr()).sum();
            on && m <= spec.rho && (!spec.punctured || libm::fabs(z[2].re) < 1.0)
        }
        (Surface::Disk, DomainPoint::Disk(z)) => {
            let m: f64 = z.iter().map(|w| w.norm_sqr()).sum();
            let s = (z[0] * z[0] + z[1] * z[1]).re;
            m <= spec.rho && (!spec.punctured || (s > 0.0 && s < 1.0))
        }
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(t: f64, y: f64) -> CylinderPoint {
        CylinderPoint::new(t, y)
    }

    #[test]
    fn metric_examples() {
        assert!((cyl_distance(&c(0.9, 0.0), &c(0.1, 0.0)) - 0.2).abs() < 1e-15);
        assert_eq!(cyl_distance(&c(0.3, 1.0), &c(0.3, -1.0)), 1.0);
        assert_eq!(cyl_distance(&c(0.0, 1.0), &c(0.5, -1.0)), 1.0);
    }

    #[test]
    fn axial_examples() {
        let p = axial_project(&SpherePoint::new([1.0, 0.0, 0.0]).unwrap()).unwrap();
        assert_eq!((p.theta_f64(), p.y), (0.0, 0.0));
        let p = axial_project(&SpherePoint::new([0.0, 1.0, 0.0]).unwrap()).unwrap();
        assert!((p.theta_f64() - 0.25).abs() < 1e-16 && p.y == 0.0);
        assert_eq!(axial_project(&SpherePoint::new([0.0, 0.0, 1.0]).unwrap()), Err(Error::Pole));
        let s = axial_unproject(&c(0.0, 0.0)).unwrap();
        assert_eq!(s.x, [1.0, 0.0, 0.0]);
        let s = axial_unproject(&c(0.5, 0.0)).unwrap();
        assert!((s.x[0] + 1.0).abs() < 1e-15 && s.x[1].abs() < 1e-15);
        assert!(matches!(axial_unproject(&c(0.1, 1.0)), Err(Error::Range(_))));
    }

    #[test]
    fn polar_examples() {
        let p = polar_project(&DiskPoint::new(1.0, 0.0)).unwrap();
        assert_eq!((p.theta_f64(), p.y), (0.0, 1.0));
        let p = polar_project(&DiskPoint::new(0.0, libm::sqrt(0.5))).unwrap();
        assert!((p.theta_f64() - 0.25).abs() < 1e-16 && p.y.abs() < 1e-15);
        assert_eq!(polar_project(&DiskPoint::new(0.0, 0.0)), Err(Error::Origin));
    }

    #[test]
    fn involution_examples() {
        assert_eq!(disk_involution(&DiskPoint::new(1.0, 0.0)).unwrap().x, [1.0, 0.0]);
        let v = disk_involution(&DiskPoint::new(libm::sqrt(0.5), 0.0)).unwrap();
        assert!((v.x[0] - libm::sqrt(1.5)).abs() < 1e-15);
        assert!(disk_involution(&DiskPoint::new(1.5, 0.0)).is_err());
    }

    #[test]
    fn domain_examples() {
        let a = DomainSpec::new(Surface::Cylinder, 1.0001, false).unwrap();
        let origin = ComplexCylinderPoint::new(Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        assert!(domain_contains(&a, &DomainPoint::Cylinder(origin)));
        let a2 = DomainSpec::new(Surface::Cylinder, 2.0, false).unwrap();
        let p = ComplexCylinderPoint::new(Complex64::new(0.0, 0.0), Complex64::new(0.0, 2.0));
        assert!(domain_contains(&a2, &DomainPoint::Cylinder(p)));
        let s = DomainSpec::new(Surface::Sphere, 2.0, false).unwrap();
        // cosh-type point with Σ|z|² = 2.1: z = (cosh t, i sinh t, 0)
        let t = libm::acosh(libm::sqrt(1.55));
        let z = [Complex64::new(libm::cosh(t), 0.0), Complex64::new(0.0, libm::sinh(t)), Complex64::new(0.0, 0.0)];
        let m: f64 = z.iter().map(|w| w.norm_sqr()).sum();
        assert!((m - 2.1).abs() < 1e-12);
        assert!(!domain_contains(&s, &DomainPoint::Sphere(z)));
        assert!(DomainSpec::new(Surface::Disk, 1.0, false).is_err());
    }

    #[test]
    fn complex_projection_agrees_on_reals() {
        let s = SpherePoint::new([0.3, -0.5, 0.2]).unwrap();
        let r = axial_project(&s).unwrap();
        let z = s.x.map(|v| Complex64::new(v, 0.0));
        let cz = axial_project_complex(&z).unwrap();
        assert!((cz.theta.re - r.theta_f64()).abs() < 1e-14 && cz.theta.im.abs() < 1e-14);
        let back = axial_unproject_complex(&cz).unwrap();
        for k in 0..3 {
            assert!((back[k] - z[k]).norm() < 1e-14);
        }
    }
}
