//! Conjugators `g = h_{q,ε}`: time-one maps of `K(1−y²)c(y)cos(2π qM θ)`.

use alloc::format;

use num_bigint::BigUint;
use num_traits::ToPrimitive;

use super::EngineConfig;
use crate::error::{Error, Result};
use crate::geometry::CylinderPoint;
use crate::linalg::metric_norm2;
use crate::map::{commutation_residual, Angle, HamFlow, MapExpr};
use crate::rational::RationalAngle;

#[derive(Clone, Debug, PartialEq)]
pub struct Conjugator {
    pub flow: HamFlow,
    /// The rotation denominator `q` it commutes with.
    pub q: u128,
    pub m: u128,
    pub eps: f64,
    /// Metric Lipschitz bounds of `g` and `g⁻¹`.
    pub lip: f64,
    pub lip_inv: f64,
    /// Certified covering radius of `g(𝕋×{0})`.
    pub cover: f64,
    pub commutation: f64,
}

impl Conjugator {
    pub fn expr(&self) -> MapExpr {
        MapExpr::HamFlow(self.flow)
    }
}

/// Extreme heights reached by `g(𝕋×{0})`, sampled over one period.
fn reach(flow: &HamFlow, samples: usize, cfg: &EngineConfig) -> Result<(f64, f64)> {
    let mut hi = f64::NEG_INFINITY;
    let mut lo = f64::INFINITY;
    for i in 0..samples {
        let (z, _) = flow.phase_flow([i as f64 / samples as f64, 0.0], 1.0, &cfg.flow)?;
        hi = hi.max(z[1]);
        lo = lo.min(z[1]);
    }
    Ok((hi, lo))
}

/// Covering radius of the image curve from the 2048 samples themselves,
/// only meaningful when few periods fit on the circle.
fn discrete_cover(flow: &HamFlow, cfg: &EngineConfig) -> Result<f64> {
    let m = MapExpr::HamFlow(*flow);
    let n = cfg.curve_samples;
    let mut pts = alloc::vec::Vec::with_capacity(n);
    for i in 0..n {
        pts.push(m.eval(&CylinderPoint::new(i as f64 / n as f64, 0.0), &cfg.flow)?);
    }
    Ok(super::covering_radius(&pts, cfg.grid_n))
}

/// Sup of the metric norm of `Dg` (or `Dg⁻¹`) over a grid of one period.
pub fn lipschitz(flow: &HamFlow, time: f64, cfg: &EngineConfig) -> Result<f64> {
    let n = cfg.lip_grid;
    let f = flow.freq as f64;
    let mut worst: f64 = 0.0;
    for j in 0..n {
        let y = -1.0 + 2.0 * j as f64 / (n - 1) as f64;
        for i in 0..n {
            let (_, t) = flow.phase_flow([i as f64 / n as f64, y], time, &cfg.flow)?;
            let jt = [[t[0][0], t[0][1] / f], [t[1][0] * f, t[1][1]]];
            worst = worst.max(metric_norm2(&jt));
        }
    }
    Ok(worst)
}

/// Builds `h_{q,ε}`: frequency `qM` with `M = ⌈1/ε⌉` and the smallest
/// doubling of κ = K·qM whose image of the equator reaches
/// `|y| ≥ 1 − max(ε, 2δ)`, `δ` being the collar width.
pub fn make_conjugator(q: &BigUint, eps: f64, cfg: &EngineConfig) -> Result<Conjugator> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain(format!("continuity modulus {eps} must lie in (0, 1)")));
    }
    let qq = q
        .to_u128()
        .filter(|&v| v > 0)
        .ok_or_else(|| Error::Unrepresentable(format!("rotation denominator {q} exceeds 128 bits")))?;
    let m = libm::ceil(1.0 / eps);
    if m >= 1e30 {
        return Err(Error::Unrepresentable(format!("M = {m} is too large")));
    }
    let m = m as u128;
    let freq = qq
        .checked_mul(m)
        .ok_or_else(|| Error::Unrepresentable(format!("frequency {qq}·{m} exceeds 128 bits")))?;
    let target = 1.0 - eps.max(2.0 * cfg.collar);
    let f = freq as f64;
    let mut kappa = cfg.kappa_start;
    let (flow, hi, lo) = loop {
        let flow = HamFlow::with_collar(kappa / f, freq, cfg.flow_steps, cfg.collar)?;
        let (hi, lo) = reach(&flow, cfg.curve_samples, cfg)?;
        if hi >= target && lo <= -target {
            break (flow, hi, lo);
        }
        kappa *= 2.0;
        if kappa > cfg.kappa_cap {
            return Err(Error::SearchExhausted(format!(
                "no K up to κ = {} reaches |y| ≥ {target}",
                cfg.kappa_cap
            )));
        }
    };
    let bound = (0.5 / f).max(0.5 * (1.0 - hi)).max(0.5 * (1.0 + lo));
    let cover = if freq <= 64 { bound.min(discrete_cover(&flow, cfg)?) } else { bound };
    if cover > eps.max(2.0 * cfg.collar) {
        return Err(Error::CertificateFailure(format!("covering radius {cover} exceeds ε = {eps}")));
    }
    let rot = Angle::Exact(RationalAngle::from_ratio(num_rational::Ratio::new(
        BigUint::from(1u32),
        q.clone(),
    )));
    let commutation = commutation_residual(&MapExpr::HamFlow(flow), &rot, cfg.check_grid, &cfg.flow)?;
    if commutation > 1e-8 {
        return Err(Error::CertificateFailure(format!(
            "commutation with Rot_1/{q} off by {commutation}"
        )));
    }
    Ok(Conjugator {
        flow,
        q: qq,
        m,
        eps,
        lip: lipschitz(&flow, 1.0, cfg)?,
        lip_inv: lipschitz(&flow, -1.0, cfg)?,
        cover,
        commutation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::big;

    #[test]
    fn coarse_conjugator() {
        let c = make_conjugator(&big(1), 0.3, &EngineConfig::default()).unwrap();
        assert_eq!(c.flow.freq, 4);
        assert!(c.cover <= 0.3);
        assert!(c.lip >= 1.0 && c.lip_inv >= 1.0);
    }

    #[test]
    fn commutes_with_its_rotation() {
        let c = make_conjugator(&big(3), 0.2, &EngineConfig::default()).unwrap();
        assert_eq!(c.flow.freq, 15);
        assert!(c.commutation <= 1e-8);
    }

    #[test]
    fn rejects_large_modulus() {
        assert!(make_conjugator(&big(1), 1.5, &EngineConfig::default()).is_err());
    }
}
