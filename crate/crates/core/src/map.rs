//! Expression trees of area-preserving maps of the cylinder.
//!
//! Leaves are exact rotations, shears `(θ + g(y), y)`, twists
//! `(θ, y + t(θ))` and time-one maps of `H = K(1−y²)c(y)cos(2π f θ)`, where
//! `c` is an optional smooth collar cutoff (identically 1 by default).
//! Real points keep θ in fixed point; complexified points use `Complex64`.

use alloc::boxed::Box;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{cyl_distance, ComplexCylinderPoint, CylinderPoint};
use crate::integrator::{flow, mat_mul, Integrator, PlanarField, M2, V2};
use crate::linalg::{mul2, Mat2, I2};
use crate::rational::RationalAngle;
use crate::smooth::plateau;
use crate::turns::Turns;

/// Largest frequency accepted on complexified points.
pub const MAX_COMPLEX_FREQ: u128 = 1 << 40;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowConfig {
    pub steps: usize,
    pub tol: f64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig { steps: 256, tol: 1e-13 }
    }
}

impl FlowConfig {
    pub fn new(steps: usize, tol: f64) -> Result<Self> {
        if steps < 16 {
            return Err(Error::Domain(alloc::format!("step count {steps} is below 16")));
        }
        if !(tol > 0.0 && tol <= 1e-12) {
            return Err(Error::Domain(alloc::format!("tolerance {tol} must lie in (0, 1e-12]")));
        }
        Ok(FlowConfig { steps, tol })
    }

    fn integrator(&self, steps: usize) -> Integrator {
        Integrator::new(steps, self.tol)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Angle {
    Exact(RationalAngle),
    Real(f64),
}

impl Angle {
    pub fn turns(&self) -> Turns {
        match self {
            Angle::Exact(a) => a.turns(),
            Angle::Real(x) => Turns::from_f64(*x),
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Angle::Exact(a) => a.to_f64(),
            Angle::Real(x) => *x,
        }
    }
}

/// `g(y) = Σ c_k y^k`.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly {
    pub coeffs: Vec<f64>,
}

impl Poly {
    pub fn eval(&self, y: f64) -> (f64, f64) {
        let mut v = 0.0;
        let mut d = 0.0;
        for &c in self.coeffs.iter().rev() {
            d = d * y + v;
            v = v * y + c;
        }
        (v, d)
    }

    pub fn eval_c(&self, y: Complex64) -> (Complex64, Complex64) {
        let mut v = Complex64::new(0.0, 0.0);
        let mut d = Complex64::new(0.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            d = d * y + v;
            v = v * y + c;
        }
        (v, d)
    }

    pub fn scaled(&self, s: f64) -> Poly {
        Poly { coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrigTerm {
    pub k: u64,
    pub cos: f64,
    pub sin: f64,
}

/// `t(θ) = Σ a_k cos(2πkθ) + b_k sin(2πkθ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrigPoly {
    pub terms: Vec<TrigTerm>,
}

impl TrigPoly {
    pub fn eval(&self, theta: Turns) -> (f64, f64) {
        let mut v = 0.0;
        let mut d = 0.0;
        for t in &self.terms {
            let (s, c) = libm::sincos(2.0 * PI * theta.phase(t.k as u128));
            v += t.cos * c + t.sin * s;
            d += 2.0 * PI * t.k as f64 * (t.sin * c - t.cos * s);
        }
        (v, d)
    }

    pub fn eval_c(&self, theta: Complex64) -> (Complex64, Complex64) {
        let mut v = Complex64::new(0.0, 0.0);
        let mut d = Complex64::new(0.0, 0.0);
        for t in &self.terms {
            let a = theta * (2.0 * PI * t.k as f64);
            let (s, c) = (a.sin(), a.cos());
            v += c * t.cos + s * t.sin;
            d += (c * t.sin - s * t.cos) * (2.0 * PI * t.k as f64);
        }
        (v, d)
    }

    pub fn scaled(&self, s: f64) -> TrigPoly {
        TrigPoly {
            terms: self
                .terms
                .iter()
                .map(|t| TrigTerm { k: t.k, cos: t.cos * s, sin: t.sin * s })
                .collect(),
        }
    }
}

/// Time-one map of `K(1−y²)c(y)cos(2π·freq·θ)` with `steps` macro steps.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HamFlow {
    pub k: f64,
    pub freq: u128,
    pub steps: usize,
    /// Width δ of the boundary cutoff: `c = 1` on `|y| ≤ 1 − 2δ`, `c = 0` on
    /// `|y| ≥ 1 − δ`. Zero disables the cutoff.
    pub collar: f64,
}

impl HamFlow {
    pub fn new(k: f64, freq: u128, steps: usize) -> Result<Self> {
        Self::with_collar(k, freq, steps, 0.0)
    }

    pub fn with_collar(k: f64, freq: u128, steps: usize, collar: f64) -> Result<Self> {
        if freq == 0 {
            return Err(Error::Domain("frequency must be positive".into()));
        }
        if steps < 16 {
            return Err(Error::Domain(alloc::format!("step count {steps} is below 16")));
        }
        if !k.is_finite() || !(0.0..0.25).contains(&collar) {
            return Err(Error::Domain(alloc::format!("bad flow parameters K = {k}, collar = {collar}")));
        }
        Ok(HamFlow { k, freq, steps, collar })
    }

    /// `κ = K·freq`, the only parameter of the flow in phase coordinates.
    pub fn kappa(&self) -> f64 {
        self.k * self.freq as f64
    }

    pub fn hamiltonian(&self, p: &CylinderPoint) -> f64 {
        let (pr, _, _) = profile(p.y, self.collar);
        self.k * pr * libm::cos(2.0 * PI * p.theta.phase(self.freq))
    }

    pub fn field(&self) -> PhaseField {
        PhaseField { kappa: self.kappa(), collar: self.collar }
    }

    /// The flow for `time` in phase coordinates `(freq·θ, y)`, with its tangent.
    pub fn phase_flow(&self, z: [f64; 2], time: f64, cfg: &FlowConfig) -> Result<([f64; 2], Mat2)> {
        let out = flow(&self.field(), z, time, &cfg.integrator(self.steps), true)?;
        Ok((out.z, out.tangent))
    }
}

/// `(1−y²)c(y)` and its first two derivatives.
fn profile(y: f64, collar: f64) -> (f64, f64, f64) {
    let p = 1.0 - y * y;
    if collar == 0.0 {
        return (p, -2.0 * y, -2.0);
    }
    let (c, dc, ddc) = plateau(y, 1.0 - 2.0 * collar, 1.0 - collar);
    (p * c, -2.0 * y * c + p * dc, -2.0 * c - 4.0 * y * dc + p * ddc)
}

/// The flow in phase coordinates `(φ, y) = (freq·θ, y)`:
/// `φ' = 2κ P'(y) cos 2πφ`, `y' = 4πκ P(y) sin 2πφ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseField {
    pub kappa: f64,
    pub collar: f64,
}

impl PlanarField<f64> for PhaseField {
    fn eval(&self, z: V2<f64>) -> (V2<f64>, M2<f64>) {
        let (s, c) = libm::sincos(2.0 * PI * z[0]);
        let (p, p1, p2) = profile(z[1], self.collar);
        let k = self.kappa;
        (
            [2.0 * k * p1 * c, 4.0 * PI * k * p * s],
            [
                [-4.0 * PI * k * p1 * s, 2.0 * k * p2 * c],
                [8.0 * PI * PI * k * p * c, 4.0 * PI * k * p1 * s],
            ],
        )
    }
}

impl PlanarField<Complex64> for PhaseField {
    fn eval(&self, z: V2<Complex64>) -> (V2<Complex64>, M2<Complex64>) {
        let a = z[0] * (2.0 * PI);
        let (s, c) = (a.sin(), a.cos());
        let y = z[1];
        let one = Complex64::new(1.0, 0.0);
        let (p, p1, p2) = if self.collar == 0.0 {
            (one - y * y, y * -2.0, Complex64::new(-2.0, 0.0))
        } else {
            // real cutoff evaluated at Re y; not holomorphic inside the collar
            let (cc, dc, ddc) = plateau(y.re, 1.0 - 2.0 * self.collar, 1.0 - self.collar);
            let base = one - y * y;
            (base * cc, y * (-2.0 * cc) + base * dc, Complex64::new(-2.0 * cc, 0.0) - y * (4.0 * dc) + base * ddc)
        };
        let k = self.kappa;
        (
            [p1 * c * (2.0 * k), p * s * (4.0 * PI * k)],
            [
                [-(p1 * s * (4.0 * PI * k)), p2 * c * (2.0 * k)],
                [p * c * (8.0 * PI * PI * k), p1 * s * (4.0 * PI * k)],
            ],
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum MapExpr {
    Rotation(Angle),
    Shear(Poly),
    Twist(TrigPoly),
    HamFlow(HamFlow),
    /// `Compose([a, b, c]) = a ∘ b ∘ c`; the empty composition is the identity.
    Compose(Vec<MapExpr>),
    Inverse(Box<MapExpr>),
}

/// Real Jacobian in (θ, y) coordinates and the product of leaf determinants.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tangent {
    pub matrix: Mat2,
    pub det: f64,
}

impl MapExpr {
    pub fn identity() -> MapExpr {
        MapExpr::Compose(Vec::new())
    }

    pub fn rotation(a: RationalAngle) -> MapExpr {
        MapExpr::Rotation(Angle::Exact(a))
    }

    pub fn shear(coeffs: &[f64]) -> MapExpr {
        MapExpr::Shear(Poly { coeffs: coeffs.to_vec() })
    }

    pub fn twist(terms: &[(u64, f64, f64)]) -> MapExpr {
        MapExpr::Twist(TrigPoly {
            terms: terms.iter().map(|&(k, a, b)| TrigTerm { k, cos: a, sin: b }).collect(),
        })
    }

    pub fn compose(parts: Vec<MapExpr>) -> MapExpr {
        MapExpr::Compose(parts)
    }

    pub fn inverse(&self) -> MapExpr {
        match self {
            MapExpr::Inverse(m) => (**m).clone(),
            m => MapExpr::Inverse(Box::new(m.clone())),
        }
    }

    /// Merges adjacent exact rotations of a composition into their exact sum,
    /// dropping zero rotations and nested identities.
    pub fn fold_rotations(&self) -> MapExpr {
        match self {
            MapExpr::Compose(v) => {
                let mut out: Vec<MapExpr> = Vec::with_capacity(v.len());
                for m in v.iter().map(MapExpr::fold_rotations) {
                    let merged = match (out.last(), &m) {
                        (Some(MapExpr::Rotation(Angle::Exact(a))), MapExpr::Rotation(Angle::Exact(b))) => a.checked_add(b),
                        _ => None,
                    };
                    match merged {
                        Some(c) => *out.last_mut().expect("nonempty") = MapExpr::rotation(c),
                        None => out.push(m),
                    }
                    if matches!(out.last(), Some(MapExpr::Rotation(Angle::Exact(a))) if a.is_zero())
                        || matches!(out.last(), Some(MapExpr::Compose(w)) if w.is_empty())
                    {
                        out.pop();
                    }
                }
                if out.len() == 1 {
                    out.pop().expect("one element")
                } else {
                    MapExpr::Compose(out)
                }
            }
            MapExpr::Inverse(m) => match m.fold_rotations() {
                MapExpr::Rotation(Angle::Exact(a)) => MapExpr::rotation(a.negated()),
                f => MapExpr::Inverse(Box::new(f)),
            },
            m => m.clone(),
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            MapExpr::Compose(v) => v.iter().map(MapExpr::leaf_count).sum(),
            MapExpr::Inverse(m) => m.leaf_count(),
            _ => 1,
        }
    }

    pub fn max_frequency(&self) -> u128 {
        match self {
            MapExpr::Compose(v) => v.iter().map(MapExpr::max_frequency).max().unwrap_or(0),
            MapExpr::Inverse(m) => m.max_frequency(),
            MapExpr::HamFlow(h) => h.freq,
            MapExpr::Twist(t) => t.terms.iter().map(|x| x.k as u128).max().unwrap_or(0),
            _ => 0,
        }
    }

    pub fn eval(&self, p: &CylinderPoint, cfg: &FlowConfig) -> Result<CylinderPoint> {
        self.apply(*p, false, cfg, &mut None)
    }

    /// Image together with the analytic Jacobian.
    pub fn eval_tangent(&self, p: &CylinderPoint, cfg: &FlowConfig) -> Result<(CylinderPoint, Tangent)> {
        let mut t = Some(Tangent { matrix: I2, det: 1.0 });
        let q = self.apply(*p, false, cfg, &mut t)?;
        Ok((q, t.expect("tangent requested")))
    }

    fn apply(
        &self,
        p: CylinderPoint,
        inv: bool,
        cfg: &FlowConfig,
        tan: &mut Option<Tangent>,
    ) -> Result<CylinderPoint> {
        let sgn = if inv { -1.0 } else { 1.0 };
        match self {
            MapExpr::Compose(parts) => {
                let mut q = p;
                if inv {
                    for m in parts.iter() {
                        q = m.apply(q, true, cfg, tan)?;
                    }
                } else {
                    for m in parts.iter().rev() {
                        q = m.apply(q, false, cfg, tan)?;
                    }
                }
                Ok(q)
            }
            MapExpr::Inverse(m) => m.apply(p, !inv, cfg, tan),
            MapExpr::Rotation(a) => {
                let t = a.turns();
                Ok(CylinderPoint { theta: if inv { p.theta - t } else { p.theta + t }, y: p.y })
            }
            MapExpr::Shear(g) => {
                let (v, d) = g.eval(p.y);
                push(tan, [[1.0, sgn * d], [0.0, 1.0]], 1.0);
                Ok(CylinderPoint { theta: p.theta + Turns::from_f64(sgn * v), y: p.y })
            }
            MapExpr::Twist(t) => {
                let (v, d) = t.eval(p.theta);
                push(tan, [[1.0, 0.0], [sgn * d, 1.0]], 1.0);
                Ok(CylinderPoint { theta: p.theta, y: p.y + sgn * v })
            }
            MapExpr::HamFlow(h) => {
                let phi = p.theta.phase(h.freq);
                let out = flow(&h.field(), [phi, p.y], sgn, &cfg.integrator(h.steps), tan.is_some())?;
                let f = h.freq as f64;
                let dphi = out.z[0] - phi;
                let t = out.tangent;
                push(tan, [[t[0][0], t[0][1] / f], [t[1][0] * f, t[1][1]]], out.det);
                Ok(CylinderPoint { theta: p.theta + Turns::from_f64(dphi / f), y: out.z[1] })
            }
        }
    }

    pub fn eval_complex(&self, p: &ComplexCylinderPoint, cfg: &FlowConfig) -> Result<ComplexCylinderPoint> {
        self.apply_c(*p, false, cfg, &mut None)
    }

    /// Image together with the complex Jacobian `∂(θ', y')/∂(θ, y)`.
    pub fn eval_complex_tangent(
        &self,
        p: &ComplexCylinderPoint,
        cfg: &FlowConfig,
    ) -> Result<(ComplexCylinderPoint, M2<Complex64>)> {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let mut t = Some([[one, zero], [zero, one]]);
        let q = self.apply_c(*p, false, cfg, &mut t)?;
        Ok((q, t.expect("tangent requested")))
    }

    fn apply_c(
        &self,
        p: ComplexCylinderPoint,
        inv: bool,
        cfg: &FlowConfig,
        tan: &mut Option<M2<Complex64>>,
    ) -> Result<ComplexCylinderPoint> {
        let sgn = if inv { -1.0 } else { 1.0 };
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        match self {
            MapExpr::Compose(parts) => {
                let mut q = p;
                if inv {
                    for m in parts.iter() {
                        q = m.apply_c(q, true, cfg, tan)?;
                    }
                } else {
                    for m in parts.iter().rev() {
                        q = m.apply_c(q, false, cfg, tan)?;
                    }
                }
                Ok(q)
            }
            MapExpr::Inverse(m) => m.apply_c(p, !inv, cfg, tan),
            MapExpr::Rotation(a) => Ok(ComplexCylinderPoint::new(p.theta + sgn * a.to_f64(), p.y)),
            MapExpr::Shear(g) => {
                let (v, d) = g.eval_c(p.y);
                push_c(tan, [[one, d * sgn], [zero, one]]);
                Ok(ComplexCylinderPoint::new(p.theta + v * sgn, p.y))
            }
            MapExpr::Twist(t) => {
                let (v, d) = t.eval_c(p.theta);
                push_c(tan, [[one, zero], [d * sgn, one]]);
                Ok(ComplexCylinderPoint::new(p.theta, p.y + v * sgn))
            }
            MapExpr::HamFlow(h) => {
                if h.freq > MAX_COMPLEX_FREQ {
                    return Err(Error::Domain(alloc::format!(
                        "frequency {} too large for complexified evaluation",
                        h.freq
                    )));
                }
                let f = h.freq as f64;
                let mut phi = p.theta * f;
                phi.re -= libm::floor(phi.re);
                let out = flow(&h.field(), [phi, p.y], sgn, &cfg.integrator(h.steps), tan.is_some())?;
                let t = out.tangent;
                push_c(tan, [[t[0][0], t[0][1] / f], [t[1][0] * f, t[1][1]]]);
                Ok(ComplexCylinderPoint::new(p.theta + (out.z[0] - phi) / f, out.z[1]))
            }
        }
    }
}

fn push(tan: &mut Option<Tangent>, m: Mat2, det: f64) {
    if let Some(t) = tan {
        t.matrix = mul2(&m, &t.matrix);
        t.det *= det;
    }
}

fn push_c(tan: &mut Option<M2<Complex64>>, m: M2<Complex64>) {
    if let Some(t) = tan {
        *t = mat_mul(&m, t);
    }
}

/// Signed coordinate difference `a − b` with θ taken on its short representative.
pub fn difference(a: &CylinderPoint, b: &CylinderPoint) -> [f64; 2] {
    [(a.theta - b.theta).to_signed_f64(), a.y - b.y]
}

fn shifted(p: &CylinderPoint, j: usize, h: f64) -> CylinderPoint {
    if j == 0 {
        CylinderPoint { theta: p.theta + Turns::from_f64(h), y: p.y }
    } else {
        CylinderPoint { theta: p.theta, y: p.y + h }
    }
}

fn central(m: &MapExpr, p: &CylinderPoint, h: f64, cfg: &FlowConfig) -> Result<Mat2> {
    let mut out = [[0.0; 2]; 2];
    for j in 0..2 {
        let a = m.eval(&shifted(p, j, h), cfg)?;
        let b = m.eval(&shifted(p, j, -h), cfg)?;
        let d = difference(&a, &b);
        out[0][j] = d[0] / (2.0 * h);
        out[1][j] = d[1] / (2.0 * h);
    }
    Ok(out)
}

/// Central differences at steps `h` and `h/2`, combined by one Richardson step.
pub fn jacobian(m: &MapExpr, p: &CylinderPoint, step: f64, cfg: &FlowConfig) -> Result<Mat2> {
    let a = central(m, p, step, cfg)?;
    let b = central(m, p, 0.5 * step, cfg)?;
    let mut r = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            r[i][j] = (4.0 * b[i][j] - a[i][j]) / 3.0;
        }
    }
    Ok(r)
}

fn complex_step(m: &MapExpr, p: &CylinderPoint, h: f64, cfg: &FlowConfig) -> Result<Mat2> {
    let base = ComplexCylinderPoint::from_real(p);
    let mut out = [[0.0; 2]; 2];
    for j in 0..2 {
        let mut q = base;
        if j == 0 {
            q.theta.im = h;
        } else {
            q.y.im = h;
        }
        let r = m.eval_complex(&q, cfg)?;
        out[0][j] = r.theta.im / h;
        out[1][j] = r.y.im / h;
    }
    Ok(out)
}

/// Complex-step differences `Im f(x + ih)/h` at `h` and `h/2` with one
/// Richardson step. Free of subtractive cancellation, so it resolves
/// Jacobians of strongly shearing maps to near machine precision. Requires
/// every leaf to be holomorphic (no collar cutoff).
pub fn jacobian_complex_step(m: &MapExpr, p: &CylinderPoint, step: f64, cfg: &FlowConfig) -> Result<Mat2> {
    let a = complex_step(m, p, step, cfg)?;
    let b = complex_step(m, p, 0.5 * step, cfg)?;
    let mut r = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            r[i][j] = (4.0 * b[i][j] - a[i][j]) / 3.0;
        }
    }
    Ok(r)
}

pub fn jacobian_analytic(m: &MapExpr, p: &CylinderPoint, cfg: &FlowConfig) -> Result<Mat2> {
    Ok(m.eval_tangent(p, cfg)?.1.matrix)
}

/// The uniform `n × n` grid of 𝔸: θ = i/n, y = −1 + 2j/(n − 1).
pub fn grid(n: usize) -> Vec<CylinderPoint> {
    let mut v = Vec::with_capacity(n * n);
    for j in 0..n {
        let y = if n > 1 { -1.0 + 2.0 * j as f64 / (n - 1) as f64 } else { 0.0 };
        for i in 0..n {
            v.push(CylinderPoint { theta: Turns::from_f64(i as f64 / n as f64), y });
        }
    }
    v
}

/// `sup_x d(m(Rot_α x), Rot_α(m x))` over [`grid`].
pub fn commutation_residual(m: &MapExpr, alpha: &Angle, grid_n: usize, cfg: &FlowConfig) -> Result<f64> {
    let t = alpha.turns();
    let mut worst: f64 = 0.0;
    for p in grid(grid_n) {
        let a = m.eval(&CylinderPoint { theta: p.theta + t, y: p.y }, cfg)?;
        let b = m.eval(&p, cfg)?;
        let b = CylinderPoint { theta: b.theta + t, y: b.y };
        worst = worst.max(cyl_distance(&a, &b));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::Scalar;

    fn cfg() -> FlowConfig {
        FlowConfig::default()
    }

    #[test]
    fn leaf_examples() {
        let r = MapExpr::rotation(RationalAngle::new(1, 2).unwrap());
        let q = r.eval(&CylinderPoint::new(0.25, 0.3), &cfg()).unwrap();
        assert_eq!((q.theta_f64(), q.y), (0.75, 0.3));
        let s = MapExpr::shear(&[0.0, 0.0, 1.0]);
        let q = s.eval(&CylinderPoint::new(0.1, 0.5), &cfg()).unwrap();
        assert!((q.theta_f64() - 0.35).abs() < 1e-15 && q.y == 0.5);
        let j = jacobian(&s, &CylinderPoint::new(0.1, 0.5), 1e-4, &cfg()).unwrap();
        assert!((j[0][1] - 1.0).abs() < 1e-10 && (j[0][0] - 1.0).abs() < 1e-12);
        assert!(j[1][0].abs() < 1e-12 && (j[1][1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn flow_preserves_boundary_and_energy() {
        let h = HamFlow::new(0.25, 1, 256).unwrap();
        let m = MapExpr::HamFlow(h);
        for &y in &[1.0, -1.0] {
            for i in 0..8 {
                let p = CylinderPoint::new(i as f64 / 8.0 + 0.01, y);
                assert_eq!(m.eval(&p, &cfg()).unwrap().y, y);
            }
        }
        let mut worst: f64 = 0.0;
        for i in 0..100 {
            let p = CylinderPoint::new((i as f64 * 0.618_033_988_7) % 1.0, -0.95 + 1.9 * ((i * 37 % 100) as f64) / 100.0);
            let q = m.eval(&p, &cfg()).unwrap();
            worst = worst.max((h.hamiltonian(&q) - h.hamiltonian(&p)).abs());
        }
        assert!(worst < 1e-9, "energy drift {worst}");
    }

    #[test]
    fn twist_analytic_matches_differences() {
        let m = MapExpr::compose(alloc::vec![
            MapExpr::twist(&[(1, 0.3, -0.1), (3, 0.05, 0.02)]),
            MapExpr::shear(&[0.1, 0.2, -0.3]),
        ]);
        let p = CylinderPoint::new(0.37, -0.2);
        let a = jacobian_analytic(&m, &p, &cfg()).unwrap();
        let f = jacobian(&m, &p, 1e-5, &cfg()).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((a[i][j] - f[i][j]).abs() < 1e-7, "{a:?} {f:?}");
            }
        }
    }

    #[test]
    fn strong_flow_is_area_preserving() {
        let m = MapExpr::HamFlow(HamFlow::new(3.0, 4, 4096).unwrap());
        let p = CylinderPoint::new(0.2, 0.1);
        let j = jacobian_complex_step(&m, &p, 1e-6, &cfg()).unwrap();
        let d = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        assert!((d - 1.0).abs() <= 1e-8, "det {d}");
        let (_, t) = m.eval_tangent(&p, &cfg()).unwrap();
        assert!((t.det - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn commutation_examples() {
        let s = MapExpr::shear(&[0.0, 0.4, 0.1]);
        let a = Angle::Exact(RationalAngle::new(1, 3).unwrap());
        assert_eq!(commutation_residual(&s, &a, 16, &cfg()).unwrap(), 0.0);
        let h = MapExpr::HamFlow(HamFlow::new(0.02, 12, 64).unwrap());
        let a = Angle::Exact(RationalAngle::new(1, 4).unwrap());
        assert!(commutation_residual(&h, &a, 16, &cfg()).unwrap() <= 1e-9);
        let t = MapExpr::twist(&[(1, 0.3, 0.0)]);
        let a = Angle::Exact(RationalAngle::new(1, 2).unwrap());
        assert!(commutation_residual(&t, &a, 16, &cfg()).unwrap() >= 0.1);
    }

    #[test]
    fn complex_matches_real_on_reals() {
        let m = MapExpr::compose(alloc::vec![
            MapExpr::HamFlow(HamFlow::new(0.05, 3, 64).unwrap()),
            MapExpr::twist(&[(2, 0.1, 0.05)]),
            MapExpr::shear(&[0.0, 0.3]),
        ]);
        let p = CylinderPoint::new(0.21, 0.4);
        let r = m.eval(&p, &cfg()).unwrap();
        let c = m.eval_complex(&ComplexCylinderPoint::from_real(&p), &cfg()).unwrap();
        assert!((c.theta.re - r.theta_f64()).abs() < 1e-12 && (c.y.re - r.y).abs() < 1e-12);
        assert!(c.theta.im.mag() < 1e-15 && c.y.im.mag() < 1e-15);
    }
}
