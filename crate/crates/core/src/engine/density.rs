//! Orbit segments of `f = h⁻¹∘Rot_α∘h` aimed at a lattice of targets.
//!
//! Orbit points are `h⁻¹(θ₀ + kα, 0)`. Conjugators whose frequency is a
//! multiple of the lattice denominator fix every lattice point at phase 0,
//! so they drop out. At the outermost remaining level either the lattice is
//! coarse (all of it is enumerated over candidate base phases) or much finer
//! than the conjugator's period, in which case each target is pulled back
//! to that level, matched by a point of `g(𝕋×{0})`, and hit by the smallest
//! `k` whose lattice point lands in a window around it.

use alloc::vec::Vec;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};

use super::{covering_radius, h_inverse_expr, Conjugator, EngineConfig};
use crate::error::{Error, Result};
use crate::geometry::CylinderPoint;
use crate::rational::RationalAngle;
use crate::turns::Turns;

#[derive(Clone, Debug, PartialEq)]
pub struct OrbitDesign {
    pub base: Turns,
    /// Iterates used, sorted, always containing 0.
    pub indices: Vec<BigUint>,
    pub points: Vec<CylinderPoint>,
    pub radius: f64,
    /// The conjugator level the design was made at (0: plain rotation).
    pub level: usize,
}

impl OrbitDesign {
    /// Length of the orbit segment `{f^k x : 0 ≤ k < N}` containing every index.
    pub fn length(&self) -> BigUint {
        self.indices.last().cloned().unwrap_or_default() + 1u32
    }
}

/// Evaluates `f^k(x)` for `x = h⁻¹(base, 0)` and every `k` in `indices`.
pub fn orbit_points(
    stack: &[Conjugator],
    alpha: &RationalAngle,
    base: Turns,
    indices: &[BigUint],
    cfg: &EngineConfig,
) -> Result<Vec<CylinderPoint>> {
    let hinv = h_inverse_expr(stack);
    let h = hinv.inverse();
    let x = hinv.eval(&CylinderPoint { theta: base, y: 0.0 }, &cfg.flow)?;
    let hx = h.eval(&x, &cfg.flow)?;
    let mut out = Vec::with_capacity(indices.len());
    for k in indices {
        let p = CylinderPoint { theta: hx.theta + alpha.multiple_turns(k), y: hx.y };
        out.push(hinv.eval(&p, &cfg.flow)?);
    }
    Ok(out)
}

pub fn design_orbit(stack: &[Conjugator], alpha: &RationalAngle, cfg: &EngineConfig) -> Result<OrbitDesign> {
    let r = alpha.lattice_denominator().clone();
    let mut level = stack.len();
    while level > 0 && (BigUint::from(stack[level - 1].flow.freq) % &r).is_zero() {
        level -= 1;
    }
    let skipped = level < stack.len();
    let (base, mut indices) = if level > 0 && r >= BigUint::from(stack[level - 1].flow.freq) * 256u32 {
        (Turns::ZERO, targeted(stack, level, alpha, cfg)?)
    } else {
        let rr = r
            .to_u64()
            .filter(|&v| v <= cfg.enum_cap)
            .ok_or_else(|| Error::SearchExhausted(alloc::format!("lattice 1/{r} is too fine to enumerate")))?;
        enumerate(stack, level, alpha, rr, skipped, cfg)?
    };
    indices.push(BigUint::zero());
    indices.sort();
    indices.dedup();
    let points = orbit_points(stack, alpha, base, &indices, cfg)?;
    let radius = covering_radius(&points, cfg.grid_n);
    Ok(OrbitDesign { base, indices, points, radius, level })
}

/// Every lattice point, with the base phase picked among `cfg.candidates`.
fn enumerate(
    stack: &[Conjugator],
    level: usize,
    alpha: &RationalAngle,
    r: u64,
    skipped: bool,
    cfg: &EngineConfig,
) -> Result<(Turns, Vec<BigUint>)> {
    let outer = h_inverse_expr(&stack[..level]);
    let cands = if skipped { 1 } else { cfg.candidates.max(1) };
    let rb = BigUint::from(r);
    let mut best = (f64::INFINITY, Turns::ZERO);
    for c in 0..cands {
        let base = Turns::from_ratio(&BigUint::from(c), &(&rb * BigUint::from(cands)));
        let mut pts = Vec::with_capacity(r as usize);
        for m in 0..r {
            let t = base + Turns::from_ratio(&BigUint::from(m), &rb);
            pts.push(outer.eval(&CylinderPoint { theta: t, y: 0.0 }, &cfg.flow)?);
        }
        let rad = covering_radius(&pts, cfg.grid_n);
        if rad < best.0 {
            best = (rad, base);
        }
    }
    let indices = (0..r)
        .map(|m| alpha.index_near(Turns::from_ratio(&BigUint::from(m), &rb)))
        .collect();
    Ok((best.1, indices))
}

/// Height of `g(φ/f, 0)` and its phase, in phase coordinates.
fn image(c: &Conjugator, phi: f64, cfg: &EngineConfig) -> Result<[f64; 2]> {
    Ok(c.flow.phase_flow([phi, 0.0], 1.0, &cfg.flow)?.0)
}

/// Phase `φ` with `g(φ/f, 0)` at height `y`, on the branch rising to
/// `φ = 1/4` (or falling to `3/4`); clamped to the reach.
fn solve_height(c: &Conjugator, y: f64, cfg: &EngineConfig) -> Result<(f64, [f64; 2])> {
    let (mut lo, mut hi) = if y >= 0.0 { (0.0, 0.25) } else { (0.5, 0.75) };
    let end = image(c, hi, cfg)?;
    if (y >= 0.0 && y >= end[1]) || (y < 0.0 && y <= end[1]) {
        return Ok((hi, end));
    }
    for _ in 0..48 {
        let mid = 0.5 * (lo + hi);
        let z = image(c, mid, cfg)?;
        let below = if y >= 0.0 { z[1] < y } else { z[1] > y };
        if below {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let phi = 0.5 * (lo + hi);
    Ok((phi, image(c, phi, cfg)?))
}

fn frac_signed(x: f64) -> f64 {
    x - libm::round(x)
}

/// Target lattice `(i + ½)/n × (−1 + (2j + 1)/n)`, kept off the collars.
pub fn targets(cfg: &EngineConfig) -> Vec<CylinderPoint> {
    let n = cfg.targets;
    let cap = 1.0 - 3.0 * cfg.collar;
    let mut v = Vec::with_capacity(n * n);
    for j in 0..n {
        let y = (-1.0 + (2 * j + 1) as f64 / n as f64).clamp(-cap, cap);
        for i in 0..n {
            v.push(CylinderPoint::new((i as f64 + 0.5) / n as f64, y));
        }
    }
    v
}

fn targeted(stack: &[Conjugator], level: usize, alpha: &RationalAngle, cfg: &EngineConfig) -> Result<Vec<BigUint>> {
    let inner = h_inverse_expr(&stack[..level - 1]).inverse();
    let upto = h_inverse_expr(&stack[..level]);
    let g = &stack[level - 1];
    let f = g.flow.freq;
    let ff = f as f64;
    let mut out = Vec::new();
    for z in targets(cfg) {
        let w = inner.eval(&z, &cfg.flow)?;
        let (phi, img) = solve_height(g, w.y, cfg)?;
        let raw = w.theta - Turns::from_f64((img[0] - phi) / ff);
        let t = raw + Turns::from_f64(frac_signed(phi - raw.phase(f)) / ff);
        let (_, tan) = upto.eval_tangent(&CylinderPoint { theta: t, y: 0.0 }, &cfg.flow)?;
        let speed = tan.matrix[0][0].abs().max(0.5 * tan.matrix[1][0].abs()).max(1e-300);
        let half = (cfg.hit_tol / speed).min(0.25);
        let lo = t - Turns::from_f64(half);
        let k = alpha
            .first_index_in(lo, Turns::from_f64(2.0 * half))
            .unwrap_or_else(|| alpha.index_near(t));
        out.push(k);
    }
    Ok(out)
}
