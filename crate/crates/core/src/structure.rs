//! Differential geometry on the complexified cylinder seen as a real
//! 4-manifold with coordinates `(Re θ, Im θ, Re y, Im y)`.
//!
//! Maps and fields are sampled through closures; all derivatives are central
//! differences. Jacobians of maps use one Richardson step, derivatives of
//! fields (brackets, exterior derivative) use a plain central difference at
//! the requested step, so their truncation error is visible in step sweeps.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{cond4, inv4, mul4, norm2_4, sub4, Mat4, I4};

/// `(Re θ, Im θ, Re y, Im y)`.
pub type Frame = [f64; 4];

/// Complex bilinear form on the real tangent space, `Ω(u, v) = uᵀ W v`.
pub type Form = [[Complex64; 4]; 4];

/// Multiplication by `i` on both complex coordinates.
pub const J_O: Mat4 = [
    [0.0, -1.0, 0.0, 0.0],
    [1.0, 0.0, 0.0, 0.0],
    [0.0, 0.0, 0.0, -1.0],
    [0.0, 0.0, 1.0, 0.0],
];

/// Differential of the real structure `σ(θ, y) = (θ̄, ȳ)`.
pub const SIGMA: Mat4 = [
    [1.0, 0.0, 0.0, 0.0],
    [0.0, -1.0, 0.0, 0.0],
    [0.0, 0.0, 1.0, 0.0],
    [0.0, 0.0, 0.0, -1.0],
];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

pub fn sigma(p: &Frame) -> Frame {
    [p[0], -p[1], p[2], -p[3]]
}

/// `a − b` with the `Re θ` component taken on its short representative.
pub fn frame_diff(a: &Frame, b: &Frame) -> Frame {
    let mut d = [a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3]];
    d[0] -= libm::round(d[0]);
    d
}

pub fn frame_norm(v: &Frame) -> f64 {
    libm::sqrt(v.iter().map(|x| x * x).sum())
}

fn shifted(p: &Frame, k: usize, s: f64) -> Frame {
    let mut q = *p;
    q[k] += s;
    q
}

/// Central-difference Jacobian at `step` (no extrapolation).
pub fn central_jacobian<F>(h: &F, p: &Frame, step: f64) -> Result<Mat4>
where
    F: Fn(&Frame) -> Result<Frame>,
{
    if !(step > 0.0) {
        return Err(Error::Domain("difference step must be positive".into()));
    }
    let mut d = [[0.0; 4]; 4];
    for k in 0..4 {
        let (pa, pb) = (shifted(p, k, step), shifted(p, k, -step));
        // divide by the representable spacing so the identity is exact
        let width = pa[k] - pb[k];
        let col = frame_diff(&h(&pa)?, &h(&pb)?);
        for i in 0..4 {
            d[i][k] = col[i] / width;
        }
    }
    Ok(d)
}

/// Central differences at `step` and `step/2` with one Richardson step.
pub fn jacobian4<F>(h: &F, p: &Frame, step: f64) -> Result<Mat4>
where
    F: Fn(&Frame) -> Result<Frame>,
{
    let a = central_jacobian(h, p, step)?;
    let b = central_jacobian(h, p, 0.5 * step)?;
    let mut r = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            r[i][j] = (4.0 * b[i][j] - a[i][j]) / 3.0;
        }
    }
    Ok(r)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StructureSample {
    pub point: Frame,
    pub j: Mat4,
}

impl StructureSample {
    /// `‖J² + I‖`.
    pub fn square_defect(&self) -> f64 {
        let mut m = mul4(&self.j, &self.j);
        for (i, row) in m.iter_mut().enumerate() {
            row[i] += 1.0;
        }
        norm2_4(&m)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FormSample {
    pub point: Frame,
    pub w: Form,
}

/// `Ω_o = ½ dθ∧dy` with `dθ = dx₀ + i dx₁`, `dy = dx₂ + i dx₃`.
pub fn omega_o() -> Form {
    let a = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0), ZERO, ZERO];
    let b = [ZERO, ZERO, Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)];
    let mut w = [[ZERO; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            w[i][j] = (a[i] * b[j] - a[j] * b[i]) * 0.5;
        }
    }
    w
}

/// Largest entry over the six coordinate bivectors.
pub fn form_norm(w: &Form) -> f64 {
    let mut m: f64 = 0.0;
    for i in 0..4 {
        for j in i + 1..4 {
            m = m.max(w[i][j].norm());
        }
    }
    m
}

pub fn form_distance(a: &Form, b: &Form) -> f64 {
    let mut d = [[ZERO; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            d[i][j] = a[i][j] - b[i][j];
        }
    }
    form_norm(&d)
}

/// `DᵀWD`.
pub fn transport_form(w: &Form, d: &Mat4) -> Form {
    let mut out = [[ZERO; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            let mut s = ZERO;
            for i in 0..4 {
                for j in 0..4 {
                    s += w[i][j] * (d[i][a] * d[j][b]);
                }
            }
            out[a][b] = s;
        }
    }
    out
}

/// `D⁻¹ J_o D`, failing when `D` is too ill-conditioned or the result is
/// not a complex structure to `1e−6`.
pub fn conjugate_structure(p: &Frame, d: &Mat4) -> Result<StructureSample> {
    let c = cond4(d);
    if !(c <= 1e6) {
        return Err(Error::SingularJacobian(alloc::format!("condition number {c:e} at {p:?}")));
    }
    let inv = inv4(d).ok_or_else(|| Error::SingularJacobian(alloc::format!("singular jacobian at {p:?}")))?;
    let s = StructureSample { point: *p, j: mul4(&inv, &mul4(&J_O, d)) };
    let defect = s.square_defect();
    if !(defect <= 1e-6) {
        return Err(Error::SingularJacobian(alloc::format!("‖J² + I‖ = {defect:e} at {p:?}")));
    }
    Ok(s)
}

/// `h*J_o = Dh⁻¹∘J_o∘Dh`.
pub fn pullback_structure<F>(h: &F, p: &Frame, step: f64) -> Result<StructureSample>
where
    F: Fn(&Frame) -> Result<Frame>,
{
    conjugate_structure(p, &jacobian4(h, p, step)?)
}

/// `h*Ω_o`.
pub fn pullback_form<F>(h: &F, p: &Frame, step: f64) -> Result<FormSample>
where
    F: Fn(&Frame) -> Result<Frame>,
{
    Ok(FormSample { point: *p, w: transport_form(&omega_o(), &jacobian4(h, p, step)?) })
}

/// Both pullbacks from one Jacobian.
pub fn pullback_pair<F>(h: &F, p: &Frame, step: f64) -> Result<(StructureSample, FormSample)>
where
    F: Fn(&Frame) -> Result<Frame>,
{
    let d = jacobian4(h, p, step)?;
    Ok((conjugate_structure(p, &d)?, FormSample { point: *p, w: transport_form(&omega_o(), &d) }))
}

fn mat_derivs<J>(jf: &J, p: &Frame, step: f64) -> Result<[Mat4; 4]>
where
    J: Fn(&Frame) -> Result<Mat4>,
{
    let mut out = [[[0.0; 4]; 4]; 4];
    for (k, o) in out.iter_mut().enumerate() {
        let a = jf(&shifted(p, k, step))?;
        let b = jf(&shifted(p, k, -step))?;
        let d = sub4(&a, &b);
        for i in 0..4 {
            for j in 0..4 {
                o[i][j] = d[i][j] / (2.0 * step);
            }
        }
    }
    Ok(out)
}

/// Max over coordinate pairs `(e_a, e_b)` of
/// `|[X,Y] + J([JX,Y] + [X,JY]) − [JX,JY]|`.
pub fn nijenhuis_residual<J>(jf: &J, p: &Frame, step: f64) -> Result<f64>
where
    J: Fn(&Frame) -> Result<Mat4>,
{
    let j = jf(p)?;
    let dj = mat_derivs(jf, p, step)?;
    let mut worst: f64 = 0.0;
    for a in 0..4 {
        for b in a + 1..4 {
            // [JX, Y] + [X, JY] = ∂_a J e_b − ∂_b J e_a for constant X = e_a, Y = e_b
            let mut inner = [0.0; 4];
            let mut outer = [0.0; 4];
            for i in 0..4 {
                inner[i] = dj[a][i][b] - dj[b][i][a];
                for k in 0..4 {
                    outer[i] += j[k][a] * dj[k][i][b] - j[k][b] * dj[k][i][a];
                }
            }
            let mut n = [0.0; 4];
            for i in 0..4 {
                n[i] = (0..4).map(|k| j[i][k] * inner[k]).sum::<f64>() - outer[i];
            }
            worst = worst.max(frame_norm(&n));
        }
    }
    Ok(worst)
}

/// Least-squares slope of `log r` against `log step`.
pub fn loglog_slope(steps: &[f64], values: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = steps
        .iter()
        .zip(values)
        .map(|(s, v)| (libm::log10(*s), libm::log10(*v)))
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

#[derive(Clone, Debug, PartialEq)]
pub struct SlopeReport {
    pub steps: Vec<f64>,
    pub residuals: Vec<f64>,
    pub slope: f64,
}

impl SlopeReport {
    /// Residuals at or below `floor` at every step count as vanishing.
    pub fn vanishes(&self, floor: f64) -> bool {
        self.residuals.iter().all(|r| *r <= floor)
    }

    /// Slope over the steps whose residual clears the roundoff floor
    /// `noise / step`; `None` when fewer than two do.
    pub fn resolved_slope(&self, noise: f64) -> Option<f64> {
        let (s, r): (Vec<f64>, Vec<f64>) = self
            .steps
            .iter()
            .zip(&self.residuals)
            .filter(|(s, r)| **r > noise / **s)
            .map(|(s, r)| (*s, *r))
            .unzip();
        (s.len() >= 2).then(|| loglog_slope(&s, &r))
    }
}

pub fn nijenhuis_sweep<J>(jf: &J, p: &Frame, steps: &[f64]) -> Result<SlopeReport>
where
    J: Fn(&Frame) -> Result<Mat4>,
{
    let residuals = steps.iter().map(|s| nijenhuis_residual(jf, p, *s)).collect::<Result<Vec<_>>>()?;
    let slope = loglog_slope(steps, &residuals);
    Ok(SlopeReport { steps: steps.to_vec(), residuals, slope })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HoloFormResidual {
    /// `max |Ω(Je_a, e_b) − iΩ(e_a, e_b)|`.
    pub type_defect: f64,
    /// `max |dΩ(e_a, e_b, e_c)|`.
    pub closedness: f64,
}

impl HoloFormResidual {
    pub fn max(&self) -> f64 {
        self.type_defect.max(self.closedness)
    }
}

pub fn holomorphic_form_residual<W, J>(wf: &W, jf: &J, p: &Frame, step: f64) -> Result<HoloFormResidual>
where
    W: Fn(&Frame) -> Result<Form>,
    J: Fn(&Frame) -> Result<Mat4>,
{
    let w = wf(p)?;
    let j = jf(p)?;
    let mut type_defect: f64 = 0.0;
    for a in 0..4 {
        for b in 0..4 {
            let mut s = ZERO;
            for k in 0..4 {
                s += w[k][b] * j[k][a];
            }
            type_defect = type_defect.max((s - w[a][b] * Complex64::new(0.0, 1.0)).norm());
        }
    }
    // central differences at step and step/2, one Richardson step
    let mut dw = [[[ZERO; 4]; 4]; 4];
    for (k, slot) in dw.iter_mut().enumerate() {
        for (s, wgt) in [(step, -1.0 / 3.0), (0.5 * step, 4.0 / 3.0)] {
            let (pa, pb) = (shifted(p, k, s), shifted(p, k, -s));
            let width = pa[k] - pb[k];
            let a = wf(&pa)?;
            let b = wf(&pb)?;
            for i in 0..4 {
                for l in 0..4 {
                    slot[i][l] += (a[i][l] - b[i][l]) * (wgt / width);
                }
            }
        }
    }
    let mut closedness: f64 = 0.0;
    for a in 0..4 {
        for b in a + 1..4 {
            for c in b + 1..4 {
                let v = dw[a][b][c] - dw[b][a][c] + dw[c][a][b];
                closedness = closedness.max(v.norm());
            }
        }
    }
    Ok(HoloFormResidual { type_defect, closedness })
}

/// `|σ(h(z)) − h(σ(z))|`.
pub fn sigma_map_residual<F>(h: &F, p: &Frame) -> Result<f64>
where
    F: Fn(&Frame) -> Result<Frame>,
{
    let a = sigma(&h(p)?);
    let b = h(&sigma(p))?;
    Ok(frame_norm(&frame_diff(&a, &b)))
}

/// `‖(Dσ)⁻¹ J(σp) Dσ + J(p)‖`.
pub fn sigma_structure_residual<J>(jf: &J, p: &Frame) -> Result<f64>
where
    J: Fn(&Frame) -> Result<Mat4>,
{
    let a = mul4(&SIGMA, &mul4(&jf(&sigma(p))?, &SIGMA));
    let b = jf(p)?;
    let mut s = a;
    for i in 0..4 {
        for k in 0..4 {
            s[i][k] += b[i][k];
        }
    }
    Ok(norm2_4(&s))
}

/// `‖Dh J_o − J_o Dh‖`.
pub fn cauchy_riemann_residual<F>(h: &F, p: &Frame, step: f64) -> Result<f64>
where
    F: Fn(&Frame) -> Result<Frame>,
{
    let d = jacobian4(h, p, step)?;
    Ok(norm2_4(&sub4(&mul4(&d, &J_O), &mul4(&J_O, &d))))
}

/// Cauchy–Riemann defect of a map between spaces of complex dimensions
/// `n/2 → m/2` in interleaved `(re, im)` coordinates, as the Frobenius norm
/// of `Df J − J Df`. `wrap` lists output coordinates that live mod 1.
pub fn cauchy_riemann_general<F>(f: &F, p: &[f64], step: f64, wrap: &[usize]) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let n = p.len();
    let central = |s: f64| -> Result<Vec<Vec<f64>>> {
        let mut cols = Vec::with_capacity(n);
        for k in 0..n {
            let mut a = p.to_vec();
            let mut b = p.to_vec();
            a[k] += s;
            b[k] -= s;
            let width = a[k] - b[k];
            let (fa, fb) = (f(&a)?, f(&b)?);
            let col: Vec<f64> = fa
                .iter()
                .zip(&fb)
                .enumerate()
                .map(|(i, (u, v))| {
                    let mut d = u - v;
                    if wrap.contains(&i) {
                        d -= libm::round(d);
                    }
                    d / width
                })
                .collect();
            cols.push(col);
        }
        Ok(cols)
    };
    let a = central(step)?;
    let b = central(0.5 * step)?;
    let m = a[0].len();
    // D[i][k] from columns, with one Richardson step
    let d = |i: usize, k: usize| (4.0 * b[k][i] - a[k][i]) / 3.0;
    let mut sum = 0.0;
    for i in 0..m {
        for k in 0..n {
            // (D J)[i][k]: J e_{2r} = e_{2r+1}, J e_{2r+1} = −e_{2r}
            let dj = if k % 2 == 0 { d(i, k + 1) } else { -d(i, k - 1) };
            let jd = if i % 2 == 0 { -d(i + 1, k) } else { d(i - 1, k) };
            sum += (dj - jd) * (dj - jd);
        }
    }
    Ok(libm::sqrt(sum))
}

/// `J = R J_o R⁻¹` with `R` the rotation by `c·Re y` in the `(Re θ, Re y)`
/// plane, which mixes the two complex lines.
pub fn twisted_structure(c: f64) -> impl Fn(&Frame) -> Result<Mat4> {
    move |p: &Frame| {
        let (s, co) = libm::sincos(c * p[2]);
        let mut r = I4;
        r[0][0] = co;
        r[0][2] = -s;
        r[2][0] = s;
        r[2][2] = co;
        let mut rt = r;
        rt[0][2] = s;
        rt[2][0] = -s;
        Ok(mul4(&r, &mul4(&J_O, &rt)))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrackedStage {
    pub n: usize,
    pub j: Vec<Mat4>,
    pub w: Vec<Form>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrackerRow {
    pub n: usize,
    pub dj: f64,
    pub dw: f64,
    pub budget: f64,
}

impl TrackerRow {
    /// Strict inequality against `2^{-n}` for both distances.
    pub fn ok(&self) -> bool {
        self.dj < self.budget && self.dw < self.budget
    }
}

pub fn stage_distance(a: &TrackedStage, b: &TrackedStage) -> Result<(f64, f64)> {
    if a.j.len() != b.j.len() || a.w.len() != b.w.len() {
        return Err(Error::Domain("stages were sampled on different tracking sets".into()));
    }
    let dj = a.j.iter().zip(&b.j).map(|(x, y)| norm2_4(&sub4(x, y))).fold(0.0, f64::max);
    let dw = a.w.iter().zip(&b.w).map(|(x, y)| form_distance(x, y)).fold(0.0, f64::max);
    Ok((dj, dw))
}

/// Consecutive-stage distances at the tracked points against `2^{-n}`.
pub fn convergence_tracker(stages: &[TrackedStage]) -> Result<Vec<TrackerRow>> {
    if stages.len() < 2 {
        return Err(Error::Domain("the tracker needs at least two stages".into()));
    }
    let mut rows = vec![];
    for w in stages.windows(2) {
        let (dj, dw) = stage_distance(&w[0], &w[1])?;
        rows.push(TrackerRow { n: w[1].n, dj, dw, budget: libm::exp2(-(w[1].n as f64)) });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn id(p: &Frame) -> Result<Frame> {
        Ok(*p)
    }

    // a smooth non-holomorphic diffeomorphism near the identity
    fn bend(p: &Frame) -> Result<Frame> {
        let t = 2.0 * core::f64::consts::PI * p[0];
        Ok([
            p[0] + 0.05 * libm::sin(t) * p[2],
            p[1] + 0.1 * p[2] * p[3],
            p[2] + 0.08 * libm::cos(t) + 0.05 * p[1] * p[1],
            p[3] + 0.03 * p[2] * p[2],
        ])
    }

    const P: Frame = [0.3, 0.2, -0.4, 0.1];

    #[test]
    fn identity_pullback_is_standard() {
        let s = pullback_structure(&id, &P, 1e-4).unwrap();
        assert_eq!(s.j, J_O);
        let w = pullback_form(&id, &P, 1e-4).unwrap();
        assert_eq!(w.w, omega_o());
        let jf = |_: &Frame| Ok(J_O);
        assert!(nijenhuis_residual(&jf, &P, 1e-3).unwrap() <= 1e-10);
        assert!(sigma_structure_residual(&jf, &P).unwrap() <= 1e-12);
        let wf = |_: &Frame| Ok(omega_o());
        assert!(holomorphic_form_residual(&wf, &jf, &P, 1e-3).unwrap().max() <= 1e-10);
    }

    #[test]
    fn conjugate_structure_breaks_type() {
        let jf = |_: &Frame| {
            let mut m = J_O;
            for r in m.iter_mut() {
                for v in r.iter_mut() {
                    *v = -*v;
                }
            }
            Ok(m)
        };
        let wf = |_: &Frame| Ok(omega_o());
        let r = holomorphic_form_residual(&wf, &jf, &P, 1e-3).unwrap();
        assert!((r.type_defect - 2.0 * form_norm(&omega_o())).abs() < 1e-15);
    }

    #[test]
    fn sigma_is_antiholomorphic() {
        let s = |p: &Frame| Ok(sigma(p));
        let r = cauchy_riemann_residual(&s, &P, 1e-4).unwrap();
        assert!((r - 2.0).abs() < 1e-9, "{r}");
    }

    #[test]
    fn pullback_is_integrable() {
        let jf = |p: &Frame| Ok(pullback_structure(&bend, p, 1e-3)?.j);
        let rep = nijenhuis_sweep(&jf, &P, &[1e-2, 1e-3, 1e-4]).unwrap();
        assert!(rep.slope >= 1.5, "{rep:?}");
        let wf = |p: &Frame| Ok(pullback_form(&bend, p, 1e-3)?.w);
        assert!(holomorphic_form_residual(&wf, &jf, &P, 1e-4).unwrap().max() <= 1e-5);
    }

    #[test]
    fn twisted_structure_is_not_integrable() {
        let jf = twisted_structure(2.0);
        let s = StructureSample { point: P, j: jf(&P).unwrap() };
        assert!(s.square_defect() < 1e-14);
        let rep = nijenhuis_sweep(&jf, &P, &[1e-2, 1e-3, 1e-4]).unwrap();
        assert!(rep.residuals.iter().all(|r| *r >= 1e-2), "{rep:?}");
        assert!(rep.slope.abs() < 0.05, "{rep:?}");
    }

    #[test]
    fn tracker_flags_budget() {
        let a = TrackedStage { n: 0, j: vec![J_O], w: vec![omega_o()] };
        let b = TrackedStage { n: 1, j: vec![J_O], w: vec![omega_o()] };
        let rows = convergence_tracker(&[a.clone(), b]).unwrap();
        assert_eq!(rows[0].dj, 0.0);
        assert!(rows[0].ok());
        let mut m = J_O;
        m[0][0] = 0.5;
        let c = TrackedStage { n: 1, j: vec![m], w: vec![omega_o()] };
        let rows = convergence_tracker(&[a, c]).unwrap();
        assert_eq!(rows[0].dj, 0.5);
        assert!(!rows[0].ok());
    }

    #[test]
    fn slope_ignores_roundoff_steps() {
        let rep = SlopeReport { steps: vec![1e-2, 1e-3, 1e-4], residuals: vec![3.8e-7, 4.7e-9, 8.6e-10], slope: 0.0 };
        let s = rep.resolved_slope(1e-12).unwrap();
        assert!((s - (3.8e-7f64 / 4.7e-9).log10()).abs() < 1e-12);
        let noise = SlopeReport { steps: vec![1e-2, 1e-3, 1e-4], residuals: vec![1.6e-11, 1.7e-10, 1.8e-9], slope: 0.0 };
        assert_eq!(noise.resolved_slope(1e-12), None);
    }
}
