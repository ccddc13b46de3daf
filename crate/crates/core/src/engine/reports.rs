//! Grid certificates for accepted stages.

use alloc::vec::Vec;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};

use super::{h_inverse_expr, Conjugator, EngineConfig, SchemeStage};
use crate::error::Result;
use crate::geometry::{cyl_distance, CylinderPoint};
use crate::linalg::det2;
use crate::map::grid;
use crate::rational::{log2_big, Gap, RationalAngle};

/// Sup over the grid of `d(h'⁻¹Rot_α h'(x), h⁻¹Rot_α h(x))`.
pub fn conjugacy_residual(
    prev: &[Conjugator],
    next: &[Conjugator],
    alpha: &RationalAngle,
    cfg: &EngineConfig,
) -> Result<f64> {
    let a_inv = h_inverse_expr(prev);
    let a = a_inv.inverse();
    let b_inv = h_inverse_expr(next);
    let b = b_inv.inverse();
    let t = alpha.turns();
    let mut worst: f64 = 0.0;
    for x in grid(cfg.grid_n) {
        let u = a.eval(&x, &cfg.flow)?;
        let u = a_inv.eval(&CylinderPoint { theta: u.theta + t, y: u.y }, &cfg.flow)?;
        let v = b.eval(&x, &cfg.flow)?;
        let v = b_inv.eval(&CylinderPoint { theta: v.theta + t, y: v.y }, &cfg.flow)?;
        worst = worst.max(cyl_distance(&u, &v));
    }
    Ok(worst)
}

/// Largest tangent entry for which `ad − bc` still resolves `1e-6`.
const RESOLVABLE_ENTRY: f64 = 1e4;

/// Grid sup of `|det Df_n − 1|` with `det Df_n` the product of the
/// determinants of the computed step Jacobians. The composed matrix itself
/// is only consulted while its entries stay below `1/√ε`, past which
/// `ad − bc` is cancellation noise.
pub fn symplectic_residual(stage: &SchemeStage, cfg: &EngineConfig) -> Result<f64> {
    let m = stage.map();
    let mut worst: f64 = 0.0;
    for x in grid(cfg.grid_n) {
        let (_, t) = m.eval_tangent(&x, &cfg.flow)?;
        worst = worst.max((t.det - 1.0).abs());
        if t.matrix.iter().flatten().all(|v| v.abs() < RESOLVABLE_ENTRY) {
            worst = worst.max((det2(&t.matrix) - 1.0).abs());
        }
    }
    Ok(worst)
}

/// `min over the grid and 0 < k < q of d(x, f^k(x))`, iterating `f`.
pub fn periodic_separation<F>(f: F, q: u64, grid_n: usize) -> Result<f64>
where
    F: Fn(&CylinderPoint) -> Result<CylinderPoint>,
{
    let mut best = f64::INFINITY;
    for x in grid(grid_n) {
        let mut y = x;
        for _ in 1..q {
            y = f(&y)?;
            best = best.min(cyl_distance(&x, &y));
        }
    }
    Ok(best)
}

/// The iterates examined for a period `q`: all of `0 < k < q` up to the scan
/// cap, otherwise a fixed spread including `1` and `q − 1`.
fn iterates(alpha: &RationalAngle, cfg: &EngineConfig) -> (bool, Vec<BigUint>) {
    let q = alpha.lattice_denominator();
    let closed = alpha.exact().is_none();
    match q.to_u64() {
        Some(v) if v <= cfg.scan_cap && !closed => (true, (1..v).map(BigUint::from).collect()),
        _ => {
            let s = cfg.k_samples.max(2) as u32;
            let mut ks: Vec<BigUint> = (0..s).map(|i| (q * i) / (s - 1)).collect();
            ks[0] = BigUint::from(1u32);
            let last = ks.len() - 1;
            ks[last] = q - 1u32;
            ks.retain(|k| !k.is_zero());
            ks.dedup();
            (false, ks)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeparationReport {
    pub n: usize,
    /// log2 of the period `q_n`.
    pub q_log2: f64,
    /// Whether every `0 < k < q_n` was scanned.
    pub exhaustive: bool,
    /// `(k, min over the grid of d(x, f^k x), max over the grid)`.
    pub rows: Vec<(BigUint, f64, f64)>,
    /// log2 of `1/(q_n L(h_n))`, a lower bound for every `0 < k < q_n`.
    pub bound_log2: f64,
}

impl SeparationReport {
    pub fn grid_min(&self) -> f64 {
        self.rows.iter().map(|r| r.1).fold(f64::INFINITY, f64::min)
    }

    /// A separation value safe to feed into `ν`: the analytic bound, and the
    /// grid minimum as well when the scan was exhaustive.
    pub fn certified(&self) -> f64 {
        let b = libm::exp2(self.bound_log2);
        if self.exhaustive {
            b.min(self.grid_min())
        } else {
            b
        }
    }

    pub fn pass(&self) -> bool {
        self.grid_min() > 0.0 && self.bound_log2 > f64::NEG_INFINITY
    }
}

pub fn separation_report(stage: &SchemeStage, cfg: &EngineConfig) -> Result<SeparationReport> {
    let q_log2 = stage.alpha.denominator_log2();
    let (exhaustive, ks) = if q_log2 == 0.0 { (true, Vec::new()) } else { iterates(&stage.alpha, cfg) };
    let h = stage.h();
    let hinv = stage.h_inverse();
    let mut rows: Vec<(BigUint, f64, f64)> = ks.iter().map(|k| (k.clone(), f64::INFINITY, 0.0)).collect();
    for x in grid(cfg.grid_n) {
        let hx = h.eval(&x, &cfg.flow)?;
        for r in rows.iter_mut() {
            let p = CylinderPoint { theta: hx.theta + stage.alpha.multiple_turns(&r.0), y: hx.y };
            let d = cyl_distance(&x, &hinv.eval(&p, &cfg.flow)?);
            r.1 = r.1.min(d);
            r.2 = r.2.max(d);
        }
    }
    let bound_log2 = if q_log2 == 0.0 { f64::INFINITY } else { -q_log2 - libm::log2(stage.lip_h()) };
    Ok(SeparationReport { n: stage.n, q_log2, exhaustive, rows, bound_log2 })
}

#[derive(Clone, Debug, PartialEq)]
pub struct GrowthRow {
    pub k: BigUint,
    pub prev_max: f64,
    pub next_max: f64,
    pub limit: f64,
}

impl GrowthRow {
    pub fn ok(&self) -> bool {
        self.next_max <= self.limit
    }
}

/// `max d(x, f_{n+1}^k x) ≤ (1 + 2^{-q_n}) max d(x, f_n^k x) + slack` for
/// `0 < k < q_n`, on the grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GrowthReport {
    pub n: usize,
    pub exhaustive: bool,
    pub rows: Vec<GrowthRow>,
    /// log2 of `q_n L(h_{n+1}⁻¹) |α_{n+1} − α_n|`, bounding
    /// `d(f_n^k x, f_{n+1}^k x)` for every `0 < k < q_n`.
    pub drift_log2: f64,
}

impl GrowthReport {
    pub fn pass(&self) -> bool {
        self.rows.iter().all(GrowthRow::ok)
    }
}

pub fn growth_report(prev: &SchemeStage, next: &SchemeStage, slack: f64, cfg: &EngineConfig) -> Result<GrowthReport> {
    let q = prev.alpha.lattice_denominator().clone();
    let (exhaustive, ks) = if q == BigUint::from(1u32) { (true, Vec::new()) } else { iterates(&prev.alpha, cfg) };
    let factor = 1.0 + libm::exp2(-prev.alpha.denominator_log2());
    let (hp, hpi) = (prev.h(), prev.h_inverse());
    let (hn, hni) = (next.h(), next.h_inverse());
    let mut rows: Vec<GrowthRow> = ks
        .iter()
        .map(|k| GrowthRow { k: k.clone(), prev_max: 0.0, next_max: 0.0, limit: 0.0 })
        .collect();
    for x in grid(cfg.grid_n) {
        let a = hp.eval(&x, &cfg.flow)?;
        let b = hn.eval(&x, &cfg.flow)?;
        for r in rows.iter_mut() {
            let pa = CylinderPoint { theta: a.theta + prev.alpha.multiple_turns(&r.k), y: a.y };
            let pb = CylinderPoint { theta: b.theta + next.alpha.multiple_turns(&r.k), y: b.y };
            r.prev_max = r.prev_max.max(cyl_distance(&x, &hpi.eval(&pa, &cfg.flow)?));
            r.next_max = r.next_max.max(cyl_distance(&x, &hni.eval(&pb, &cfg.flow)?));
        }
    }
    for r in rows.iter_mut() {
        r.limit = factor * r.prev_max + slack;
    }
    let gap = Gap::between(&prev.alpha, &next.alpha)?;
    let drift_log2 = log2_big(&q) + libm::log2(next.lip_h_inverse()) + gap.log2();
    Ok(GrowthReport { n: prev.n, exhaustive, rows, drift_log2 })
}
