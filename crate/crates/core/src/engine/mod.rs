//! The approximation-by-conjugacy induction on the cylinder.
//!
//! Stage `n` holds `α_n = p_n/q_n` and conjugators `g_1, …, g_n` with
//! `h_n⁻¹ = g_1∘…∘g_n`, so `f_n = h_n⁻¹∘Rot_{α_n}∘h_n`. A step appends
//! `g_{n+1} = h_{q_n,ε}` (which commutes with `Rot_{α_n}`), picks the budget
//! `ν`, moves the angle by less than `ν` and certifies the new orbit density.

mod conjugator;
mod density;
mod lift;
mod reports;

pub use conjugator::{lipschitz, make_conjugator, Conjugator};
pub use density::{design_orbit, orbit_points, targets, OrbitDesign};
pub use lift::{lift_to_surface, transitivity_witness, SurfaceLift, Witness};
pub use reports::{
    conjugacy_residual, growth_report, periodic_separation, separation_report, symplectic_residual, GrowthReport,
    GrowthRow, SeparationReport,
};

use alloc::format;
use alloc::vec::Vec;

use num_bigint::BigUint;
use num_rational::Ratio;
use num_traits::{One, ToPrimitive};

use crate::error::{Error, Result};
use crate::geometry::{cyl_distance, CylinderPoint};
use crate::map::{grid, FlowConfig, MapExpr};
use crate::rational::{choose_next_alpha, farey_separation, Budget, RationalAngle};

#[derive(Clone, Debug, PartialEq)]
pub struct EngineConfig {
    /// Resolution of every diagnostic grid.
    pub grid_n: usize,
    /// Grid for the commutation certificate of a single conjugator.
    pub check_grid: usize,
    pub flow: FlowConfig,
    /// Macro steps per unit time for conjugator flows.
    pub flow_steps: usize,
    /// Collar width δ of the boundary cutoff.
    pub collar: f64,
    pub kappa_start: f64,
    pub kappa_cap: f64,
    pub curve_samples: usize,
    pub lip_grid: usize,
    /// Targets per side of the density lattice.
    pub targets: usize,
    pub hit_tol: f64,
    pub candidates: u64,
    pub enum_cap: u64,
    /// Largest `q` scanned over every `0 < k < q`.
    pub scan_cap: u64,
    /// Iterates sampled when `q` is above `scan_cap`.
    pub k_samples: usize,
    pub retries: usize,
    pub conjugacy_tol: f64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            grid_n: 64,
            check_grid: 16,
            flow: FlowConfig::default(),
            flow_steps: 256,
            collar: 1.25e-3,
            kappa_start: 1.0 / 64.0,
            kappa_cap: 64.0,
            curve_samples: 2048,
            lip_grid: 64,
            targets: 12,
            hit_tol: 2e-3,
            candidates: 64,
            enum_cap: 4096,
            scan_cap: 64,
            k_samples: 4,
            retries: 8,
            conjugacy_tol: 1e-8,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Domain(format!("engine config: {m}")));
        if self.grid_n < 8 || self.check_grid < 8 || self.lip_grid < 8 {
            return bad("grids need at least 8 points per side");
        }
        if !(0.0..0.25).contains(&self.collar) {
            return bad("collar must lie in [0, 1/4)");
        }
        if !(self.kappa_start > 0.0 && self.kappa_cap >= self.kappa_start) {
            return bad("κ search range is empty");
        }
        if self.targets == 0 || self.curve_samples == 0 || !(self.hit_tol > 0.0) {
            return bad("targets, curve samples and hit tolerance must be positive");
        }
        if !(self.conjugacy_tol > 0.0) {
            return bad("tolerances must be positive");
        }
        FlowConfig::new(self.flow.steps, self.flow.tol)?;
        Ok(())
    }
}

/// `max_{x ∈ grid} min_p d(x, p)` over the `grid_n × grid_n` grid of 𝔸.
pub fn covering_radius(points: &[CylinderPoint], grid_n: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for x in grid(grid_n) {
        let mut best = f64::INFINITY;
        for p in points {
            best = best.min(cyl_distance(&x, p));
        }
        worst = worst.max(best);
    }
    worst
}

pub(crate) fn h_inverse_expr(stack: &[Conjugator]) -> MapExpr {
    MapExpr::compose(stack.iter().map(Conjugator::expr).collect())
}

/// The four terms whose minimum is `ν(h_{n+1}, α_n)`.
#[derive(Clone, Debug, PartialEq)]
pub struct NuTerms {
    /// Distance to the nearest other fraction with denominator `≤ q`.
    pub farey: Budget,
    /// `2^{-q} q^{-q}`.
    pub liouville: Budget,
    /// `2^{-q} ε_sep / (q L(h_{n+1}⁻¹))`; absent for `q = 1`.
    pub separation: Option<Budget>,
    /// `3^{-j-1} / Σ_{k=1}^{N} L_f^{k-1}`.
    pub closeness: Budget,
    /// `ε(h_{n+1}, α_n)` used in the separation term.
    pub eps_sep: f64,
}

impl NuTerms {
    pub fn min(&self) -> Budget {
        let mut v = alloc::vec![self.farey.clone(), self.liouville.clone(), self.closeness.clone()];
        v.extend(self.separation.clone());
        Budget::min_of(&v).expect("nonempty")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Certificates {
    /// Covering radius of the designed orbit segment.
    pub density: f64,
    /// Grid sup of `d(h_n⁻¹Rot h_n, h_{n-1}⁻¹Rot h_{n-1})` at `α_{n-1}`.
    pub conjugacy: f64,
    /// Grid sup of `|det Df_n − 1|`.
    pub symplectic: f64,
    /// Budget halvings needed before the density certificate passed.
    pub halvings: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SchemeStage {
    pub n: usize,
    pub alpha: RationalAngle,
    /// `g_1, …, g_n`.
    pub conjugators: Vec<Conjugator>,
    /// Largest `j` with the orbit segment `3^{-j}`-dense (plus grid slack).
    pub j: u32,
    pub orbit: OrbitDesign,
    /// Budget the increment `α_n − α_{n−1}` was drawn under.
    pub nu: Option<Budget>,
    pub nu_terms: Option<NuTerms>,
    /// Continuity modulus behind `g_n`.
    pub epsilon: f64,
    pub certificates: Certificates,
}

impl SchemeStage {
    pub fn initial(cfg: &EngineConfig) -> Result<SchemeStage> {
        let alpha = RationalAngle::zero();
        let orbit = design_orbit(&[], &alpha, cfg)?;
        Ok(SchemeStage {
            n: 0,
            j: density_level(orbit.radius, cfg.grid_n),
            alpha,
            conjugators: Vec::new(),
            certificates: Certificates { density: orbit.radius, conjugacy: 0.0, symplectic: 0.0, halvings: 0 },
            orbit,
            nu: None,
            nu_terms: None,
            epsilon: 0.0,
        })
    }

    pub fn h_inverse(&self) -> MapExpr {
        h_inverse_expr(&self.conjugators)
    }

    pub fn h(&self) -> MapExpr {
        self.h_inverse().inverse()
    }

    /// `f_n` as an expression.
    pub fn map(&self) -> MapExpr {
        MapExpr::compose(alloc::vec![self.h_inverse(), MapExpr::rotation(self.alpha.clone()), self.h()])
    }

    /// `f_n^k(x) = h⁻¹(Rot_{kα}(h x))`.
    pub fn iterate(&self, x: &CylinderPoint, k: &BigUint, cfg: &FlowConfig) -> Result<CylinderPoint> {
        let hx = self.h().eval(x, cfg)?;
        let p = CylinderPoint { theta: hx.theta + self.alpha.multiple_turns(k), y: hx.y };
        self.h_inverse().eval(&p, cfg)
    }

    /// Product bound on the Lipschitz constant of `h_n⁻¹`.
    pub fn lip_h_inverse(&self) -> f64 {
        self.conjugators.iter().map(|c| c.lip).product()
    }

    pub fn lip_h(&self) -> f64 {
        self.conjugators.iter().map(|c| c.lip_inv).product()
    }

    pub fn orbit_length(&self) -> BigUint {
        self.orbit.length()
    }
}

/// Largest `j` with `radius ≤ 3^{-j} + 2/grid_n`.
pub fn density_level(radius: f64, grid_n: usize) -> u32 {
    let slack = 2.0 / grid_n as f64;
    let mut j = 0;
    while j < 40 && radius <= libm::pow(3.0, -(j as f64 + 1.0)) + slack {
        j += 1;
    }
    j
}

/// `ν(h_{n+1}, α_n)` from its four terms. `eps_sep` is the periodic
/// separation `ε(h_{n+1}, α_n)` of `f_n`.
pub fn select_nu(stage: &SchemeStage, next: &[Conjugator], eps_sep: f64) -> Result<NuTerms> {
    let a = stage
        .alpha
        .exact()
        .ok_or_else(|| Error::Unrepresentable(format!("angle {} has no explicit denominator", stage.alpha)))?;
    let q = a.denom();
    let qf = q.to_f64().unwrap_or(f64::INFINITY);
    let farey = Budget::Exact(farey_separation(a));
    let liouville = Budget::liouville(q);
    let lip_next: f64 = next.iter().map(|c| c.lip).product();
    let separation = if q.is_one() {
        None
    } else {
        if !(eps_sep > 0.0) {
            return Err(Error::CertificateFailure(format!("periodic separation {eps_sep} is not positive")));
        }
        Some(Budget::dyadic_below(qf + libm::log2(qf * lip_next / eps_sep)))
    };
    let n = stage.orbit_length().to_f64().unwrap_or(f64::INFINITY);
    let j1 = stage.j as i32 + 1;
    let closeness = if n <= 1.0 {
        Budget::Exact(Ratio::new(BigUint::one(), BigUint::from(3u32).pow(j1 as u32)))
    } else {
        let lf = (stage.lip_h_inverse() * stage.lip_h()).max(1.0);
        let sum = libm::log2(n) + (n - 1.0) * libm::log2(lf);
        Budget::dyadic_below(j1 as f64 * libm::log2(3.0) + sum + 1e-9)
    };
    Ok(NuTerms { farey, liouville, separation, closeness, eps_sep })
}

/// `ε` for the next conjugator: `ε`-close points stay `3^{-j-2}`-close under
/// `h_n⁻¹`, with a safety factor 2 on the Lipschitz bound.
pub fn continuity_modulus(stage: &SchemeStage) -> f64 {
    libm::pow(3.0, -(stage.j as f64 + 2.0)) / (2.0 * stage.lip_h_inverse())
}

pub fn step(stage: &SchemeStage, cfg: &EngineConfig) -> Result<SchemeStage> {
    let n = stage.n;
    let q = stage
        .alpha
        .exact()
        .ok_or_else(|| {
            Error::Unrepresentable(format!(
                "stage {} rotates by a closed-form angle; its period has no 128-bit frequency",
                n
            ))
        })?
        .denom()
        .clone();
    let eps = continuity_modulus(stage);
    let g = make_conjugator(&q, eps, cfg)?;
    let mut next = stage.conjugators.clone();
    next.push(g);
    let conjugacy = conjugacy_residual(&stage.conjugators, &next, &stage.alpha, cfg)?;
    if conjugacy > cfg.conjugacy_tol {
        return Err(Error::CertificateFailure(format!(
            "stage {}: conjugacy identity off by {conjugacy}",
            n + 1
        )));
    }
    let sep = separation_report(stage, cfg)?;
    let terms = select_nu(stage, &next, sep.certified())?;
    let mut nu = terms.min();
    let threshold = libm::pow(3.0, -((n + 1) as f64)) + 2.0 / cfg.grid_n as f64;
    let mut halvings = 0;
    let (alpha, orbit) = loop {
        let alpha = choose_next_alpha(&stage.alpha, &nu, n as u64)?;
        let orbit = design_orbit(&next, &alpha, cfg)?;
        if orbit.radius <= threshold {
            break (alpha, orbit);
        }
        halvings += 1;
        nu = match nu.halve() {
            Some(v) if halvings <= cfg.retries => v,
            _ => {
                return Err(Error::CertificateFailure(format!(
                    "stage {}: orbit covering radius {} above {threshold}",
                    n + 1,
                    orbit.radius
                )))
            }
        };
    };
    let mut out = SchemeStage {
        n: n + 1,
        j: density_level(orbit.radius, cfg.grid_n).max(stage.j),
        alpha,
        conjugators: next,
        certificates: Certificates { density: orbit.radius, conjugacy, symplectic: 0.0, halvings },
        orbit,
        nu: Some(nu),
        nu_terms: Some(terms),
        epsilon: eps,
    };
    out.certificates.symplectic = symplectic_residual(&out, cfg)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::big;

    #[test]
    fn covering_examples() {
        let g = grid(16);
        assert_eq!(covering_radius(&g, 16), 0.0);
        let circle: Vec<_> = (0..256).map(|i| CylinderPoint::new(i as f64 / 256.0, 0.0)).collect();
        assert!((covering_radius(&circle, 64) - 0.5).abs() <= 1.0 / 64.0);
        assert!(covering_radius(&[CylinderPoint::new(0.3, 0.2)], 32) >= 0.5);
    }

    #[test]
    fn first_budget_and_angle() {
        let cfg = EngineConfig::default();
        let s0 = SchemeStage::initial(&cfg).unwrap();
        assert_eq!(s0.j, 0);
        let g = make_conjugator(&big(1), continuity_modulus(&s0), &cfg).unwrap();
        assert_eq!(g.m, 18);
        let terms = select_nu(&s0, &[g], 1.0).unwrap();
        assert_eq!(terms.farey, Budget::Exact(Ratio::from_integer(big(1))));
        assert_eq!(terms.liouville, Budget::Exact(Ratio::new(big(1), big(2))));
        assert!(terms.separation.is_none());
        assert_eq!(terms.min(), Budget::Exact(Ratio::new(big(1), big(3))));
        let a = choose_next_alpha(&s0.alpha, &terms.min(), 0).unwrap();
        assert_eq!(a, RationalAngle::new(1, 4).unwrap());
    }

    #[test]
    fn density_levels() {
        assert_eq!(density_level(0.5, 64), 0);
        assert_eq!(density_level(0.3, 64), 1);
        assert_eq!(density_level(0.06, 64), 3);
    }
}
