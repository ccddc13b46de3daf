//! Gluing an entire symplectic map to the identity.
//!
//! The entire map `h_r` is blended to the identity with a bump `β(Re y)`,
//! giving `ĥ`. Its real trace distorts area by `g = det Dĥ`, and the
//! corrector `φ_r = Fl⁻¹ ∘ T_{−τ} ∘ φ₁` pushes `g dθ∧dy` back to `dθ∧dy`
//! while fixing a neighbourhood of the boundary. The glued map is
//! `h = ĥ ∘ φ̂_r⁻¹`, where `φ̂(z) = φ(Re z) + i·Im z`.

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt::Write;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{complex_cyl_distance, domain_contains, ComplexCylinderPoint, CylinderPoint, DomainPoint, DomainSpec, Surface};
use crate::integrator::{flow, Integrator, PlanarField, M2, V2};
use crate::linalg::det2;
use crate::map::{FlowConfig, MapExpr};
use crate::smooth::{plateau, ramp};
use crate::structure::{form_distance, frame_diff, frame_norm, omega_o, pullback_pair, sigma_map_residual, Frame, J_O};
use crate::text::{fmt_f64, parse_f64};

/// `β = 1` on `|y| ≤ 1−eps`, `β = 0` on `|y| ≥ 1−eta`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BumpProfile {
    pub eta: f64,
    pub eps: f64,
}

impl BumpProfile {
    pub fn new(eta: f64, eps: f64) -> Result<Self> {
        if !(eta > 0.0 && eta < eps && eps < 1.0) {
            return Err(Error::Domain(alloc::format!("need 0 < eta < eps < 1, got eta = {eta}, eps = {eps}")));
        }
        Ok(BumpProfile { eta, eps })
    }

    /// `β(y)` with its first two derivatives.
    pub fn beta(&self, y: f64) -> (f64, f64, f64) {
        plateau(y, 1.0 - self.eps, 1.0 - self.eta)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum EntireLeaf {
    /// `θ ↦ θ + Σ c_k y^k`.
    Shear(Vec<f64>),
    /// `y ↦ y + Σ a cos 2πkθ + b sin 2πkθ` over `(k, a, b)`.
    Twist(Vec<(u64, f64, f64)>),
}

/// Alternating real shears and twists; the first leaf acts last.
#[derive(Clone, Debug, PartialEq)]
pub struct EntireMapSpec {
    pub leaves: Vec<EntireLeaf>,
    pub q: Option<u64>,
}

impl EntireMapSpec {
    pub fn new(leaves: Vec<EntireLeaf>, q: Option<u64>) -> Result<Self> {
        if q == Some(0) {
            return Err(Error::Domain("commutation frequency must be positive".into()));
        }
        for (i, leaf) in leaves.iter().enumerate() {
            if i > 0 && core::mem::discriminant(leaf) == core::mem::discriminant(&leaves[i - 1]) {
                return Err(Error::Domain(alloc::format!("leaves {} and {} have the same kind", i - 1, i)));
            }
            match leaf {
                EntireLeaf::Shear(c) => {
                    if c.iter().any(|x| !x.is_finite()) {
                        return Err(Error::Domain("non-finite shear coefficient".into()));
                    }
                }
                EntireLeaf::Twist(t) => {
                    for &(k, a, b) in t {
                        if !(a.is_finite() && b.is_finite()) {
                            return Err(Error::Domain("non-finite twist coefficient".into()));
                        }
                        if let Some(q) = q {
                            if k % q != 0 {
                                return Err(Error::Domain(alloc::format!("twist frequency {k} is not a multiple of {q}")));
                            }
                        }
                    }
                }
            }
        }
        Ok(EntireMapSpec { leaves, q })
    }

    pub fn identity() -> Self {
        EntireMapSpec { leaves: Vec::new(), q: None }
    }

    /// `Shear(a·y²) ∘ Twist(b·cos 2πmθ)`.
    pub fn shear_twist(a: f64, b: f64, m: u64) -> Result<Self> {
        EntireMapSpec::new(
            alloc::vec![EntireLeaf::Shear(alloc::vec![0.0, 0.0, a]), EntireLeaf::Twist(alloc::vec![(m, b, 0.0)])],
            Some(m),
        )
    }

    pub fn scaled(&self, t: f64) -> Self {
        let leaves = self
            .leaves
            .iter()
            .map(|l| match l {
                EntireLeaf::Shear(c) => EntireLeaf::Shear(c.iter().map(|x| x * t).collect()),
                EntireLeaf::Twist(v) => EntireLeaf::Twist(v.iter().map(|&(k, a, b)| (k, a * t, b * t)).collect()),
            })
            .collect();
        EntireMapSpec { leaves, q: self.q }
    }

    pub fn to_map(&self) -> MapExpr {
        MapExpr::compose(
            self.leaves
                .iter()
                .map(|l| match l {
                    EntireLeaf::Shear(c) => MapExpr::shear(c),
                    EntireLeaf::Twist(t) => MapExpr::twist(t),
                })
                .collect(),
        )
    }
}

/// Representative of `x` mod 1 in (−½, ½].
fn short(x: f64) -> f64 {
    x - libm::ceil(x - 0.5)
}

fn wrap(x: f64) -> f64 {
    let r = x - libm::floor(x);
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Something that can be integrated as an area density on the real cylinder.
pub trait Density {
    fn density(&self, theta: f64, y: f64) -> Result<f64>;
}

impl<F: Fn(f64, f64) -> Result<f64>> Density for F {
    fn density(&self, theta: f64, y: f64) -> Result<f64> {
        self(theta, y)
    }
}

/// The blended map `ĥ = id + β(Re y)·(h_r − id)`.
#[derive(Clone, Debug)]
pub struct Blend {
    pub map: MapExpr,
    pub bump: BumpProfile,
    cfg: FlowConfig,
}

impl Blend {
    pub fn new(h_r: &EntireMapSpec, bump: BumpProfile) -> Self {
        Blend { map: h_r.to_map(), bump, cfg: FlowConfig::default() }
    }

    pub fn eval(&self, z: &ComplexCylinderPoint) -> Result<ComplexCylinderPoint> {
        let (b, _, _) = self.bump.beta(z.y.re);
        if b == 0.0 {
            return Ok(*z);
        }
        let w = self.map.eval_complex(z, &self.cfg)?;
        if b == 1.0 {
            return Ok(w);
        }
        let mut dt = w.theta - z.theta;
        dt.re = short(dt.re);
        Ok(ComplexCylinderPoint::new(z.theta + dt * b, z.y + (w.y - z.y) * b))
    }

    /// `det` of the real-trace Jacobian of the blend.
    pub fn area_density(&self, theta: f64, y: f64) -> Result<f64> {
        if !(libm::fabs(y) <= 1.0 && theta.is_finite()) {
            return Err(Error::Range(alloc::format!("({theta}, {y}) is off the real cylinder")));
        }
        let (b, db, _) = self.bump.beta(y);
        if b == 0.0 && db == 0.0 {
            return Ok(1.0);
        }
        let p = CylinderPoint::new(theta, y);
        let (q, t) = self.map.eval_tangent(&p, &self.cfg)?;
        let m = t.matrix;
        if b == 1.0 && db == 0.0 {
            return Ok(det2(&m));
        }
        let dt = (q.theta - p.theta).to_signed_f64();
        let dy = q.y - y;
        let a = [
            [1.0 + b * (m[0][0] - 1.0), db * dt + b * m[0][1]],
            [b * m[1][0], 1.0 + db * dy + b * (m[1][1] - 1.0)],
        ];
        Ok(det2(&a))
    }
}

impl Density for Blend {
    fn density(&self, theta: f64, y: f64) -> Result<f64> {
        self.area_density(theta, y)
    }
}

pub fn blend(h_r: &EntireMapSpec, beta: &BumpProfile, p: &ComplexCylinderPoint) -> Result<ComplexCylinderPoint> {
    Blend::new(h_r, *beta).eval(p)
}

/// `Γ(θ) = Σ a_k cos 2πkθ + b_k sin 2πkθ`, k ≥ 1.
#[derive(Clone, Debug, Default, PartialEq)]
struct Modes {
    a: Vec<f64>,
    b: Vec<f64>,
}

impl Modes {
    /// Primitive of `−½ f` from equispaced samples of a mean-zero `f`.
    fn primitive_of(f: &[f64], cos: &[f64], sin: &[f64]) -> Modes {
        let n = f.len();
        let mut a = Vec::new();
        let mut b = Vec::new();
        for k in 1..n / 2 {
            let (mut al, mut be) = (0.0, 0.0);
            for (i, v) in f.iter().enumerate() {
                let m = (k * i) % n;
                al += v * cos[m];
                be += v * sin[m];
            }
            al *= 2.0 / n as f64;
            be *= 2.0 / n as f64;
            let w = 2.0 * PI * k as f64;
            a.push(0.5 * be / w);
            b.push(-0.5 * al / w);
        }
        let keep = (0..a.len()).rev().find(|&i| libm::fabs(a[i]) + libm::fabs(b[i]) > 1e-17).map_or(0, |i| i + 1);
        a.truncate(keep);
        b.truncate(keep);
        Modes { a, b }
    }

    fn is_zero(&self) -> bool {
        self.a.is_empty()
    }

    fn eval(&self, theta: f64) -> (f64, f64, f64) {
        let (s1, c1) = libm::sincos(2.0 * PI * theta);
        let (mut c, mut s) = (1.0, 0.0);
        let (mut v, mut d, mut dd) = (0.0, 0.0, 0.0);
        for k in 0..self.a.len() {
            let nc = c * c1 - s * s1;
            s = s * c1 + c * s1;
            c = nc;
            let w = 2.0 * PI * (k + 1) as f64;
            let (a, b) = (self.a[k], self.b[k]);
            v += a * c + b * s;
            d += w * (b * c - a * s);
            dd -= w * w * (a * c + b * s);
        }
        (v, d, dd)
    }
}

/// Hamiltonian field of `H = b₊(y)Γ₊(θ) + b₋(y)Γ₋(θ)`,
/// `(θ̇, ẏ) = (2∂_y H, −2∂_θ H)`.
struct BumpField<'a> {
    plus: &'a Modes,
    minus: &'a Modes,
    lo: f64,
    hi: f64,
}

impl PlanarField<f64> for BumpField<'_> {
    fn eval(&self, z: V2<f64>) -> (V2<f64>, M2<f64>) {
        let (bp, bp1, bp2) = ramp(z[1], self.lo, self.hi);
        let (bm, bm1, bm2) = ramp(-z[1], self.lo, self.hi);
        let bm1 = -bm1;
        let gp = if bp != 0.0 || bp1 != 0.0 || bp2 != 0.0 { self.plus.eval(z[0]) } else { (0.0, 0.0, 0.0) };
        let gm = if bm != 0.0 || bm1 != 0.0 || bm2 != 0.0 { self.minus.eval(z[0]) } else { (0.0, 0.0, 0.0) };
        let hy = bp1 * gp.0 + bm1 * gm.0;
        let ht = bp * gp.1 + bm * gm.1;
        let hty = bp1 * gp.1 + bm1 * gm.1;
        (
            [2.0 * hy, -2.0 * ht],
            [
                [2.0 * hty, 2.0 * (bp2 * gp.0 + bm2 * gm.0)],
                [-2.0 * (bp * gp.2 + bm * gm.2), -2.0 * hty],
            ],
        )
    }
}

pub const GAMMA_GRID: usize = 1024;

/// The area corrector `φ_r` built from a density `g` with `g = 1` off the
/// transition bands `1−eps < |y| < 1−eta`.
#[derive(Clone, Debug)]
pub struct VolumeCorrection<G> {
    g: G,
    bump: BumpProfile,
    n: usize,
    tau: f64,
    mass: f64,
    gamma_plus: Vec<f64>,
    gamma_minus: Vec<f64>,
    plus: Modes,
    minus: Modes,
    flow_steps: usize,
}

impl<G: Density> VolumeCorrection<G> {
    /// Quadrature starts at `quad_n` intervals and doubles until two
    /// successive band integrals agree to `tol` on probe angles.
    pub fn new(g: G, bump: BumpProfile, quad_n: usize, tol: f64) -> Result<Self> {
        if quad_n < 64 || quad_n % 2 != 0 {
            return Err(Error::Domain(alloc::format!("quad_n = {quad_n} must be even and at least 64")));
        }
        if !(bump.eta < 1.0 / 3.0) {
            return Err(Error::Domain(alloc::format!("eta = {} leaves no room for the boundary Hamiltonian", bump.eta)));
        }
        let mut vc = VolumeCorrection {
            g,
            bump,
            n: quad_n,
            tau: 0.0,
            mass: 2.0,
            gamma_plus: Vec::new(),
            gamma_minus: Vec::new(),
            plus: Modes::default(),
            minus: Modes::default(),
            flow_steps: 32,
        };
        let probes: Vec<f64> = (0..16).map(|i| (i as f64 + 0.37) / 16.0).collect();
        let mut prev: Vec<(f64, f64)> = probes.iter().map(|&t| vc.masses(t)).collect::<Result<_>>()?;
        loop {
            if vc.n > quad_n << 8 {
                return Err(Error::Quadrature(alloc::format!("band integrals unsettled at {} intervals", vc.n / 2)));
            }
            vc.n *= 2;
            let next: Vec<(f64, f64)> = probes.iter().map(|&t| vc.masses(t)).collect::<Result<_>>()?;
            let diff = prev
                .iter()
                .zip(&next)
                .map(|(a, b)| libm::fabs(a.0 - b.0).max(libm::fabs(a.1 - b.1)))
                .fold(0.0, f64::max);
            if diff <= tol {
                break;
            }
            prev = next;
        }
        let n = GAMMA_GRID;
        let mut gp = Vec::with_capacity(n);
        let mut gm = Vec::with_capacity(n);
        for i in 0..n {
            let (ap, am) = vc.masses(i as f64 / n as f64)?;
            gp.push(1.0 + 0.5 * ap - 0.5 * am);
            gm.push(-1.0 - 0.5 * ap - 1.5 * am);
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        vc.tau = mean(&gp) - 1.0;
        vc.mass = mean(&gp) - mean(&gm);
        let fp: Vec<f64> = gp.iter().map(|v| v - 1.0 - vc.tau).collect();
        let fm: Vec<f64> = gm.iter().map(|v| v + 1.0 - vc.tau).collect();
        let bound = fp.iter().chain(&fm).fold(0.0f64, |m, v| m.max(libm::fabs(*v)));
        if bound >= 0.5 * bump.eta {
            return Err(Error::Domain(alloc::format!("boundary displacement {bound} exceeds half the margin eta")));
        }
        let cos: Vec<f64> = (0..n).map(|m| libm::cos(2.0 * PI * m as f64 / n as f64)).collect();
        let sin: Vec<f64> = (0..n).map(|m| libm::sin(2.0 * PI * m as f64 / n as f64)).collect();
        vc.plus = Modes::primitive_of(&fp, &cos, &sin);
        vc.minus = Modes::primitive_of(&fm, &cos, &sin);
        vc.gamma_plus = gp;
        vc.gamma_minus = gm;
        Ok(vc)
    }

    pub fn density(&self) -> &G {
        &self.g
    }

    /// Number of Simpson intervals per band integral.
    pub fn quad_n(&self) -> usize {
        self.n
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// `∫_T (γ₊ − γ₋) dθ` by the trapezoid rule on the γ grid.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn gamma_plus(&self) -> &[f64] {
        &self.gamma_plus
    }

    pub fn gamma_minus(&self) -> &[f64] {
        &self.gamma_minus
    }

    /// `Γ±(θ)` from the interpolated primitives.
    pub fn primitives(&self, theta: f64) -> (f64, f64) {
        (self.plus.eval(theta).0, self.minus.eval(theta).0)
    }

    fn lo(&self) -> f64 {
        1.0 - self.bump.eps
    }

    fn hi(&self) -> f64 {
        1.0 - self.bump.eta
    }

    /// Composite Simpson for `∫_a^b (g − 1)` with `n` intervals.
    fn band(&self, theta: f64, a: f64, b: f64) -> Result<f64> {
        let n = self.n;
        let h = (b - a) / n as f64;
        let mut s = 0.0;
        for i in 0..=n {
            let w = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            let t = if i == n { b } else { a + h * i as f64 };
            s += w * (self.g.density(theta, t)? - 1.0);
        }
        Ok(s * h / 3.0)
    }

    /// `(∫₀¹ (g−1), ∫₋₁⁰ (g−1))`.
    fn masses(&self, theta: f64) -> Result<(f64, f64)> {
        let (lo, hi) = (self.lo(), self.hi());
        Ok((self.band(theta, lo, hi)?, self.band(theta, -hi, -lo)?))
    }

    fn partial(&self, theta: f64, y: f64) -> Result<f64> {
        let (lo, hi) = (self.lo(), self.hi());
        if y > lo {
            self.band(theta, lo, y.min(hi))
        } else if y < -lo {
            Ok(-self.band(theta, y.max(-hi), -lo)?)
        } else {
            Ok(0.0)
        }
    }

    /// Height component of `φ₁(θ, y) = (θ, ∫₀^y g − ½∫₋₁¹ g + 1)`.
    pub fn phi1(&self, theta: f64, y: f64) -> Result<f64> {
        let (ap, am) = self.masses(theta)?;
        Ok(y + self.partial(theta, y)? - 0.5 * (ap + am))
    }

    pub fn phi1_inverse(&self, theta: f64, target: f64) -> Result<f64> {
        let (ap, am) = self.masses(theta)?;
        let shift = 0.5 * (ap + am);
        let mut y = target + shift;
        for _ in 0..60 {
            let r = y + self.partial(theta, y)? - shift - target;
            if r == 0.0 {
                return Ok(y);
            }
            let d = if libm::fabs(y) <= 1.0 { self.g.density(theta, y)? } else { 1.0 };
            if !(d > 0.0) {
                return Err(Error::SingularJacobian(alloc::format!("density {d} at ({theta}, {y})")));
            }
            let step = r / d;
            y -= step;
            if libm::fabs(step) <= 4.0 * f64::EPSILON * (1.0 + libm::fabs(y)) {
                return Ok(y);
            }
        }
        Err(Error::NonConvergence(alloc::format!("inverting the height map at ({theta}, {target})")))
    }

    fn is_trivial(&self) -> bool {
        self.plus.is_zero() && self.minus.is_zero()
    }

    fn boundary_flow(&self, theta: f64, y: f64, time: f64) -> Result<(f64, f64)> {
        let lo = 1.0 - 3.0 * self.bump.eta;
        if self.is_trivial() || libm::fabs(y) <= lo {
            return Ok((theta, y));
        }
        let field = BumpField { plus: &self.plus, minus: &self.minus, lo, hi: 1.0 - 2.0 * self.bump.eta };
        let out = flow(&field, [theta, y], time, &Integrator::new(self.flow_steps, 1e-14), false)?;
        Ok((wrap(out.z[0]), out.z[1]))
    }

    /// `φ_r(θ, y) = Fl⁻¹(φ₁(θ, y) − (0, τ))`.
    pub fn forward(&self, theta: f64, y: f64) -> Result<(f64, f64)> {
        let y1 = self.phi1(theta, y)? - self.tau;
        self.boundary_flow(theta, y1, -1.0)
    }

    /// `φ_r⁻¹(θ, y) = φ₁⁻¹(Fl¹(θ, y) + (0, τ))`.
    pub fn inverse(&self, theta: f64, y: f64) -> Result<(f64, f64)> {
        let (t, y1) = self.boundary_flow(theta, y, 1.0)?;
        Ok((t, self.phi1_inverse(t, y1 + self.tau)?))
    }
}

pub fn volume_correction<G: Density>(g: G, beta: &BumpProfile, quad_n: usize) -> Result<VolumeCorrection<G>> {
    VolumeCorrection::new(g, *beta, quad_n, 1e-9)
}

/// `h = ĥ ∘ φ̂_r⁻¹`.
#[derive(Clone, Debug)]
pub struct Glued {
    pub spec: EntireMapSpec,
    corr: VolumeCorrection<Blend>,
}

impl Glued {
    pub fn new(h_r: &EntireMapSpec, bump: BumpProfile, quad_n: usize, tol: f64) -> Result<Self> {
        let corr = VolumeCorrection::new(Blend::new(h_r, bump), bump, quad_n, tol)?;
        Ok(Glued { spec: h_r.clone(), corr })
    }

    pub fn blend(&self) -> &Blend {
        self.corr.density()
    }

    pub fn correction(&self) -> &VolumeCorrection<Blend> {
        &self.corr
    }

    pub fn bump(&self) -> BumpProfile {
        self.corr.bump
    }

    /// Points with `|Re y| ≥ 1−eta` are returned unchanged.
    pub fn eval(&self, z: &ComplexCylinderPoint) -> Result<ComplexCylinderPoint> {
        if libm::fabs(z.y.re) >= 1.0 - self.corr.bump.eta {
            return Ok(*z);
        }
        self.eval_formula(z)
    }

    /// The defining composition without the support shortcut.
    pub fn eval_formula(&self, z: &ComplexCylinderPoint) -> Result<ComplexCylinderPoint> {
        let (t, y) = self.corr.inverse(z.theta.re, z.y.re)?;
        let u = ComplexCylinderPoint::new(Complex64::new(t, z.theta.im), Complex64::new(y, z.y.im));
        self.blend().eval(&u)
    }

    pub fn eval_frame(&self, p: &Frame) -> Result<Frame> {
        Ok(self.eval(&ComplexCylinderPoint::from_frame(*p))?.frame())
    }

    pub fn eval_real(&self, theta: f64, y: f64) -> Result<(f64, f64)> {
        let z = self.eval(&ComplexCylinderPoint::new(Complex64::new(theta, 0.0), Complex64::new(y, 0.0)))?;
        Ok((z.theta.re, z.y.re))
    }

    /// Richardson-extrapolated finite-difference Jacobian of the real trace.
    pub fn real_jacobian(&self, theta: f64, y: f64, step: f64) -> Result<[[f64; 2]; 2]> {
        let central = |h: f64| -> Result<[[f64; 2]; 2]> {
            let mut d = [[0.0; 2]; 2];
            for k in 0..2 {
                let (mut a, mut b) = ([theta, y], [theta, y]);
                a[k] += h;
                b[k] -= h;
                let width = a[k] - b[k];
                let fa = self.eval_real(a[0], a[1])?;
                let fb = self.eval_real(b[0], b[1])?;
                d[0][k] = short(fa.0 - fb.0) / width;
                d[1][k] = (fa.1 - fb.1) / width;
            }
            Ok(d)
        };
        let a = central(step)?;
        let b = central(0.5 * step)?;
        let mut r = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                r[i][j] = (4.0 * b[i][j] - a[i][j]) / 3.0;
            }
        }
        Ok(r)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GlueOptions {
    pub quad_n: usize,
    pub quad_tol: f64,
    /// Points per axis of the complexified sample grid.
    pub complex_n: usize,
    pub fd_step: f64,
}

impl Default for GlueOptions {
    fn default() -> Self {
        GlueOptions { quad_n: 64, quad_tol: 1e-9, complex_n: 6, fd_step: 1e-4 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GlueReport {
    pub eta: f64,
    pub eps: f64,
    pub r: f64,
    pub grid_n: usize,
    pub complex_n: usize,
    pub quad_n: usize,
    pub tau: f64,
    pub mass: f64,
    pub mass_residual: f64,
    /// (M1) sup |det Dh − 1| on the real grid.
    pub det_residual: f64,
    /// sup distance between h and h_r on |y| ≤ 1−eps.
    pub closeness: f64,
    /// sup (|y'| − 1)⁺ over real grid images.
    pub annulus_excess: f64,
    /// (M2) samples outside the support that moved, out of `support_samples`.
    pub support_violations: usize,
    pub support_samples: usize,
    /// Deviation of the unshortcut formula from the identity on the same samples.
    pub collar_residual: f64,
    /// (M3) sup ‖h*J_o − J_o‖ and ‖h*Ω_o − Ω_o‖.
    pub structure_distance: f64,
    pub form_distance: f64,
    pub structure_samples: usize,
    /// Samples whose Jacobian was too ill-conditioned to pull back `J_o`.
    pub singular_samples: usize,
    /// (M4) sup |σ h − h σ|.
    pub sigma_residual: f64,
    /// sup |h ∘ Rot_{1/q} − Rot_{1/q} ∘ h| when the entire map carries q.
    pub rotation_residual: Option<f64>,
}

const REPORT_KEYS: [&str; 21] = [
    "eta",
    "eps",
    "r",
    "grid_n",
    "complex_n",
    "quad_n",
    "tau",
    "mass",
    "mass_residual",
    "det_residual",
    "closeness",
    "annulus_excess",
    "support_violations",
    "support_samples",
    "collar_residual",
    "structure_distance",
    "form_distance",
    "structure_samples",
    "singular_samples",
    "sigma_residual",
    "rotation_residual",
];

impl GlueReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str("# glue report; the entire map is an explicit shear/twist family\n");
        let f = |x: f64| fmt_f64(x);
        let rows: [String; 21] = [
            f(self.eta),
            f(self.eps),
            f(self.r),
            alloc::format!("{}", self.grid_n),
            alloc::format!("{}", self.complex_n),
            alloc::format!("{}", self.quad_n),
            f(self.tau),
            f(self.mass),
            f(self.mass_residual),
            f(self.det_residual),
            f(self.closeness),
            f(self.annulus_excess),
            alloc::format!("{}", self.support_violations),
            alloc::format!("{}", self.support_samples),
            f(self.collar_residual),
            f(self.structure_distance),
            f(self.form_distance),
            alloc::format!("{}", self.structure_samples),
            alloc::format!("{}", self.singular_samples),
            f(self.sigma_residual),
            self.rotation_residual.map_or_else(|| "none".into(), f),
        ];
        for (k, v) in REPORT_KEYS.iter().zip(rows.iter()) {
            let _ = writeln!(s, "{k} {v}");
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut vals: [Option<&str>; 21] = [None; 21];
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once(' ').ok_or_else(|| Error::Parse(alloc::format!("bad line {line:?}")))?;
            let i = REPORT_KEYS
                .iter()
                .position(|x| *x == k)
                .ok_or_else(|| Error::Parse(alloc::format!("unknown key {k:?}")))?;
            vals[i] = Some(v.trim());
        }
        let get = |i: usize| vals[i].ok_or_else(|| Error::Parse(alloc::format!("missing key {}", REPORT_KEYS[i])));
        let fl = |i: usize| get(i).and_then(parse_f64);
        let int = |i: usize| {
            get(i).and_then(|v| v.parse::<usize>().map_err(|_| Error::Parse(alloc::format!("bad integer {v:?}"))))
        };
        Ok(GlueReport {
            eta: fl(0)?,
            eps: fl(1)?,
            r: fl(2)?,
            grid_n: int(3)?,
            complex_n: int(4)?,
            quad_n: int(5)?,
            tau: fl(6)?,
            mass: fl(7)?,
            mass_residual: fl(8)?,
            det_residual: fl(9)?,
            closeness: fl(10)?,
            annulus_excess: fl(11)?,
            support_violations: int(12)?,
            support_samples: int(13)?,
            collar_residual: fl(14)?,
            structure_distance: fl(15)?,
            form_distance: fl(16)?,
            structure_samples: int(17)?,
            singular_samples: int(18)?,
            sigma_residual: fl(19)?,
            rotation_residual: match get(20)? {
                "none" => None,
                v => Some(parse_f64(v)?),
            },
        })
    }
}

/// Complexified sample grid of `A_R`, cell centred and filtered by membership.
pub fn complex_grid(r: f64, n: usize) -> Result<Vec<Frame>> {
    let spec = DomainSpec::new(Surface::Cylinder, r, false)?;
    let im_t = 0.5 * libm::acosh(1.5 * r);
    let ymax = libm::sqrt(3.0 * r - 2.0);
    let c = |i: usize, a: f64| -a + 2.0 * a * (i as f64 + 0.5) / n as f64;
    let mut out = Vec::new();
    for i0 in 0..n {
        for i1 in 0..n {
            for i2 in 0..n {
                for i3 in 0..n {
                    let p = [(i0 as f64 + 0.5) / n as f64, c(i1, im_t), c(i2, ymax), c(i3, ymax)];
                    let z = ComplexCylinderPoint::from_frame(p);
                    if domain_contains(&spec, &DomainPoint::Cylinder(z)) {
                        out.push(p);
                    }
                }
            }
        }
    }
    Ok(out)
}

fn real_grid(n: usize) -> impl Iterator<Item = (f64, f64)> {
    (0..n * n).map(move |k| ((k / n) as f64 + 0.5, (k % n) as f64 + 0.5)).map(move |(i, j)| (i / n as f64, -1.0 + 2.0 * j / n as f64))
}

pub fn glue_and_report(h_r: &EntireMapSpec, beta: &BumpProfile, r: f64, grid_n: usize) -> Result<GlueReport> {
    glue_and_report_with(h_r, beta, r, grid_n, &GlueOptions::default())
}

pub fn glue_and_report_with(
    h_r: &EntireMapSpec,
    beta: &BumpProfile,
    r: f64,
    grid_n: usize,
    opts: &GlueOptions,
) -> Result<GlueReport> {
    if !(r > 1.0) {
        return Err(Error::Domain(alloc::format!("R = {r} must exceed 1")));
    }
    if grid_n < 2 {
        return Err(Error::Domain("grid needs at least 2 points per axis".into()));
    }
    let glued = Glued::new(h_r, *beta, opts.quad_n, opts.quad_tol)?;
    glued_report(&glued, r, grid_n, opts)
}

pub fn glued_report(glued: &Glued, r: f64, grid_n: usize, opts: &GlueOptions) -> Result<GlueReport> {
    let bump = glued.bump();
    let corr = glued.correction();
    let cfg = FlowConfig::default();
    let h_r = glued.blend().map.clone();

    let mut det_residual = 0.0f64;
    let mut closeness = 0.0f64;
    let mut annulus_excess = 0.0f64;
    for (t, y) in real_grid(grid_n) {
        let d = glued.real_jacobian(t, y, opts.fd_step)?;
        det_residual = det_residual.max(libm::fabs(det2(&d) - 1.0));
        let (_, y1) = glued.eval_real(t, y)?;
        annulus_excess = annulus_excess.max(libm::fabs(y1) - 1.0);
        if libm::fabs(y) <= 1.0 - bump.eps {
            let z = ComplexCylinderPoint::new(Complex64::new(t, 0.0), Complex64::new(y, 0.0));
            let a = glued.eval(&z)?;
            let b = h_r.eval_complex(&z, &cfg)?;
            closeness = closeness.max(complex_cyl_distance(&a, &b));
        }
    }

    let mut support_violations = 0;
    let mut support_samples = 0;
    let mut collar_residual = 0.0f64;
    let m = grid_n.max(8);
    for i in 0..m {
        for j in 0..m {
            let a = (j as f64 + 0.5) / m as f64;
            let ry = (1.0 - bump.eta) + 0.5 * a;
            let sgn = if j % 2 == 0 { 1.0 } else { -1.0 };
            let im = 0.3 * libm::sin(7.0 * (i + j) as f64);
            let p = [(i as f64 + 0.25) / m as f64, im, sgn * ry, -im];
            let z = ComplexCylinderPoint::from_frame(p);
            let w = glued.eval(&z)?;
            support_samples += 1;
            let same = w.theta.re.to_bits() == z.theta.re.to_bits()
                && w.theta.im.to_bits() == z.theta.im.to_bits()
                && w.y.re.to_bits() == z.y.re.to_bits()
                && w.y.im.to_bits() == z.y.im.to_bits();
            if !same {
                support_violations += 1;
            }
            if libm::fabs(ry) <= 1.0 {
                collar_residual = collar_residual.max(complex_cyl_distance(&glued.eval_formula(&z)?, &z));
            }
        }
    }

    let h = |p: &Frame| glued.eval_frame(p);
    let omega = omega_o();
    let mut structure_distance = 0.0f64;
    let mut form_dist = 0.0f64;
    let mut sigma_residual = 0.0f64;
    let mut rotation_residual = glued.spec.q.map(|_| 0.0f64);
    let mut singular_samples = 0;
    let pts = complex_grid(r, opts.complex_n)?;
    for p in &pts {
        sigma_residual = sigma_residual.max(sigma_map_residual(&h, p)?);
        if let (Some(q), Some(rr)) = (glued.spec.q, rotation_residual.as_mut()) {
            let mut pr = *p;
            pr[0] += 1.0 / q as f64;
            let mut a = h(p)?;
            a[0] += 1.0 / q as f64;
            *rr = rr.max(frame_norm(&frame_diff(&h(&pr)?, &a)));
        }
        let (js, ws) = match pullback_pair(&h, p, opts.fd_step) {
            Ok(v) => v,
            Err(Error::SingularJacobian(_)) => {
                singular_samples += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        let mut worst = 0.0f64;
        for i in 0..4 {
            for k in 0..4 {
                worst = worst.max(libm::fabs(js.j[i][k] - J_O[i][k]));
            }
        }
        structure_distance = structure_distance.max(worst);
        form_dist = form_dist.max(form_distance(&ws.w, &omega));
    }

    Ok(GlueReport {
        eta: bump.eta,
        eps: bump.eps,
        r,
        grid_n,
        complex_n: opts.complex_n,
        quad_n: corr.quad_n(),
        tau: corr.tau(),
        mass: corr.mass(),
        mass_residual: libm::fabs(corr.mass() - 2.0),
        det_residual,
        closeness,
        annulus_excess: annulus_excess.max(0.0),
        support_violations,
        support_samples,
        collar_residual,
        structure_distance,
        form_distance: form_dist,
        structure_samples: pts.len(),
        singular_samples,
        sigma_residual,
        rotation_residual,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InjectivityReport {
    pub points: usize,
    pub collisions: usize,
}

fn mix(mut x: u64) -> u64 {
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Spatial-hash collision scan of the blend over an `n⁴` grid of `A_R`.
/// Distinct sources whose images share a cell of side `resolution` and lie
/// within `resolution` of each other count as collisions.
pub fn injectivity_scan(b: &Blend, r: f64, n: usize, resolution: f64) -> Result<InjectivityReport> {
    let pts = complex_grid(r, n)?;
    let image = |p: &Frame| -> Result<ComplexCylinderPoint> { b.eval(&ComplexCylinderPoint::from_frame(*p)) };
    let key = |z: &ComplexCylinderPoint| -> u64 {
        let cells = 1.0 / resolution;
        let f = z.frame();
        let mut h = 0u64;
        for (i, v) in f.iter().enumerate() {
            let mut c = libm::floor(v / resolution);
            if i == 0 {
                c -= cells * libm::floor(c / cells);
            }
            h = mix(h ^ (c as i64 as u64).wrapping_add(i as u64));
        }
        h
    };
    let mut keys = Vec::with_capacity(pts.len());
    for p in &pts {
        keys.push(key(&image(p)?));
    }
    keys.sort_unstable();
    let mut dup: Vec<u64> = keys.windows(2).filter(|w| w[0] == w[1]).map(|w| w[0]).collect();
    dup.dedup();
    let mut collisions = 0;
    if !dup.is_empty() {
        let mut hits: Vec<ComplexCylinderPoint> = Vec::new();
        let mut hit_keys = Vec::new();
        for p in &pts {
            let z = image(p)?;
            let k = key(&z);
            if dup.binary_search(&k).is_ok() {
                hits.push(z);
                hit_keys.push(k);
            }
        }
        for i in 0..hits.len() {
            for j in i + 1..hits.len() {
                if hit_keys[i] == hit_keys[j] && complex_cyl_distance(&hits[i], &hits[j]) < resolution {
                    collisions += 1;
                }
            }
        }
    }
    Ok(InjectivityReport { points: pts.len(), collisions })
}
