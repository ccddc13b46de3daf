//! Stage records: one `key = value` text file per accepted stage.
//!
//! Angles on the circle are written as the two hex words of their 256-bit
//! fixed-point value, floats in shortest round-trip form, rationals and
//! budgets in their exact text forms. Reading a record back gives a value
//! equal to the one written.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use abclab_core::engine::{Certificates, Conjugator, NuTerms, OrbitDesign, SchemeStage};
use abclab_core::geometry::CylinderPoint;
use abclab_core::map::HamFlow;
use abclab_core::rational::{Budget, RationalAngle};
use abclab_core::text::{fmt_f64, parse_f64};
use abclab_core::turns::Turns;
use num_bigint::BigUint;

use crate::error::{LabError, LabResult};

pub const RECORD_HEADER: &str = "# abclab stage record";

/// Deformation-track values stored next to a stage.
#[derive(Clone, Debug, PartialEq)]
pub struct DeformRecord {
    pub q: u64,
    pub amplitude: f64,
    pub halvings: u32,
    pub dj: f64,
    pub dw: f64,
    pub budget: f64,
}

/// Everything needed to rebuild stage `n` given the records before it.
#[derive(Clone, Debug, PartialEq)]
pub struct StageRecord {
    pub config_hash: String,
    pub n: usize,
    pub alpha: RationalAngle,
    pub j: u32,
    /// `g_n`; stage 0 has none.
    pub conjugator: Option<Conjugator>,
    pub orbit: OrbitDesign,
    pub nu: Option<Budget>,
    pub nu_terms: Option<NuTerms>,
    pub epsilon: f64,
    pub certificates: Certificates,
    pub deform: Option<DeformRecord>,
}

pub fn fmt_turns(t: Turns) -> String {
    format!("{:032x}:{:032x}", t.hi, t.lo)
}

pub fn parse_turns(s: &str) -> Option<Turns> {
    let (hi, lo) = s.trim().split_once(':')?;
    Some(Turns::from_words(u128::from_str_radix(hi, 16).ok()?, u128::from_str_radix(lo, 16).ok()?))
}

fn fmt_opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| "none".to_string(), T::to_string)
}

impl StageRecord {
    /// The record of `stage`, which must carry `g_n` as its last conjugator.
    pub fn from_stage(stage: &SchemeStage, config_hash: &str, deform: Option<DeformRecord>) -> Self {
        StageRecord {
            config_hash: config_hash.to_string(),
            n: stage.n,
            alpha: stage.alpha.clone(),
            j: stage.j,
            conjugator: if stage.n == 0 { None } else { stage.conjugators.last().cloned() },
            orbit: stage.orbit.clone(),
            nu: stage.nu.clone(),
            nu_terms: stage.nu_terms.clone(),
            epsilon: stage.epsilon,
            certificates: stage.certificates.clone(),
            deform,
        }
    }

    /// Rebuilds the stage on top of the conjugators of the previous one.
    pub fn to_stage(&self, prev: &[Conjugator]) -> SchemeStage {
        let mut conjugators = prev.to_vec();
        conjugators.extend(self.conjugator.clone());
        SchemeStage {
            n: self.n,
            alpha: self.alpha.clone(),
            conjugators,
            j: self.j,
            orbit: self.orbit.clone(),
            nu: self.nu.clone(),
            nu_terms: self.nu_terms.clone(),
            epsilon: self.epsilon,
            certificates: self.certificates.clone(),
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("config_hash", self.config_hash.clone());
        kv("n", self.n.to_string());
        kv("alpha", self.alpha.to_string());
        kv("j", self.j.to_string());
        if let Some(c) = &self.conjugator {
            kv("K", fmt_f64(c.flow.k));
            kv("M", c.flow.freq.to_string());
            kv("steps", c.flow.steps.to_string());
            kv("collar", fmt_f64(c.flow.collar));
            kv("q", c.q.to_string());
            kv("m", c.m.to_string());
            kv("eps", fmt_f64(c.eps));
            kv("lip", fmt_f64(c.lip));
            kv("lip_inv", fmt_f64(c.lip_inv));
            kv("cover", fmt_f64(c.cover));
            kv("commutation", fmt_f64(c.commutation));
        }
        kv("orbit_base", fmt_turns(self.orbit.base));
        kv("orbit_level", self.orbit.level.to_string());
        kv("orbit_radius", fmt_f64(self.orbit.radius));
        kv("orbit_indices", self.orbit.indices.iter().map(BigUint::to_string).collect::<Vec<_>>().join(" "));
        for p in &self.orbit.points {
            kv("orbit_point", format!("{} {}", fmt_turns(p.theta), fmt_f64(p.y)));
        }
        kv("nu", fmt_opt(&self.nu));
        if let Some(t) = &self.nu_terms {
            kv("nu_farey", t.farey.to_string());
            kv("nu_liouville", t.liouville.to_string());
            kv("nu_separation", fmt_opt(&t.separation));
            kv("nu_closeness", t.closeness.to_string());
            kv("nu_eps_sep", fmt_f64(t.eps_sep));
        }
        kv("epsilon", fmt_f64(self.epsilon));
        kv("cert_density", fmt_f64(self.certificates.density));
        kv("cert_conjugacy", fmt_f64(self.certificates.conjugacy));
        kv("cert_symplectic", fmt_f64(self.certificates.symplectic));
        kv("cert_halvings", self.certificates.halvings.to_string());
        if let Some(d) = &self.deform {
            kv("deform_q", d.q.to_string());
            kv("deform_amplitude", fmt_f64(d.amplitude));
            kv("deform_halvings", d.halvings.to_string());
            kv("deform_dj", fmt_f64(d.dj));
            kv("deform_dw", fmt_f64(d.dw));
            kv("deform_budget", fmt_f64(d.budget));
        }
        format!("{RECORD_HEADER}\n{s}")
    }

    pub fn from_text(text: &str) -> Result<Self, String> {
        let mut map: BTreeMap<&str, &str> = BTreeMap::new();
        let mut points = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once(" = ").ok_or_else(|| format!("line {}: expected key = value", i + 1))?;
            if k == "orbit_point" {
                let (t, y) = v.split_once(' ').ok_or_else(|| format!("line {}: bad orbit point", i + 1))?;
                let theta = parse_turns(t).ok_or_else(|| format!("line {}: bad angle {t}", i + 1))?;
                points.push(CylinderPoint { theta, y: parse_f64(y).map_err(|e| e.to_string())? });
            } else if map.insert(k, v).is_some() {
                return Err(format!("duplicate key {k}"));
            }
        }
        let get = |k: &str| map.get(k).copied().ok_or_else(|| format!("missing key {k}"));
        let float = |k: &str| -> Result<f64, String> { parse_f64(get(k)?).map_err(|e| format!("{k}: {e}")) };
        fn num<T: FromStr>(k: &str, v: Result<&str, String>) -> Result<T, String> {
            let v = v?;
            v.parse::<T>().map_err(|_| format!("{k}: bad value {v}"))
        }
        let budget = |v: &str| -> Result<Option<Budget>, String> {
            if v == "none" {
                Ok(None)
            } else {
                Budget::from_str(v).map(Some).map_err(|e| e.to_string())
            }
        };
        let conjugator = if map.contains_key("K") {
            Some(Conjugator {
                flow: HamFlow {
                    k: float("K")?,
                    freq: num("M", get("M"))?,
                    steps: num("steps", get("steps"))?,
                    collar: float("collar")?,
                },
                q: num("q", get("q"))?,
                m: num("m", get("m"))?,
                eps: float("eps")?,
                lip: float("lip")?,
                lip_inv: float("lip_inv")?,
                cover: float("cover")?,
                commutation: float("commutation")?,
            })
        } else {
            None
        };
        let indices = get("orbit_indices")?
            .split_whitespace()
            .map(|s| BigUint::from_str(s).map_err(|e| format!("orbit_indices: {e}")))
            .collect::<Result<Vec<_>, _>>()?;
        let orbit = OrbitDesign {
            base: parse_turns(get("orbit_base")?).ok_or("bad orbit_base")?,
            indices,
            points,
            radius: float("orbit_radius")?,
            level: num("orbit_level", get("orbit_level"))?,
        };
        let nu_terms = if map.contains_key("nu_farey") {
            let need = |k: &str| -> Result<Budget, String> { budget(get(k)?)?.ok_or_else(|| format!("{k} is none")) };
            Some(NuTerms {
                farey: need("nu_farey")?,
                liouville: need("nu_liouville")?,
                separation: budget(get("nu_separation")?)?,
                closeness: need("nu_closeness")?,
                eps_sep: float("nu_eps_sep")?,
            })
        } else {
            None
        };
        let deform = if map.contains_key("deform_q") {
            Some(DeformRecord {
                q: num("deform_q", get("deform_q"))?,
                amplitude: float("deform_amplitude")?,
                halvings: num("deform_halvings", get("deform_halvings"))?,
                dj: float("deform_dj")?,
                dw: float("deform_dw")?,
                budget: float("deform_budget")?,
            })
        } else {
            None
        };
        Ok(StageRecord {
            config_hash: get("config_hash")?.to_string(),
            n: num("n", get("n"))?,
            alpha: RationalAngle::from_str(get("alpha")?).map_err(|e| e.to_string())?,
            j: num("j", get("j"))?,
            conjugator,
            orbit,
            nu: budget(get("nu")?)?,
            nu_terms,
            epsilon: float("epsilon")?,
            certificates: Certificates {
                density: float("cert_density")?,
                conjugacy: float("cert_conjugacy")?,
                symplectic: float("cert_symplectic")?,
                halvings: num("cert_halvings", get("cert_halvings"))?,
            },
            deform,
        })
    }

    pub fn read(path: &Path) -> LabResult<Self> {
        let text = std::fs::read_to_string(path).map_err(LabError::io(path))?;
        Self::from_text(&text).map_err(|msg| LabError::Record { path: path.to_path_buf(), msg })
    }

    /// Writes through a temporary file so a killed run never leaves half a record.
    pub fn write(&self, path: &Path) -> LabResult<()> {
        write_atomic(path, &self.to_text())
    }
}

pub fn write_atomic(path: &Path, text: &str) -> LabResult<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, text).map_err(LabError::io(&tmp))?;
    std::fs::rename(&tmp, path).map_err(LabError::io(path))
}

pub fn stage_file_name(n: usize) -> String {
    format!("stage_{n:03}.txt")
}

#[cfg(test)]
mod tests {
    use super::*;
    use abclab_core::engine::{step, EngineConfig};

    #[test]
    fn turns_text_is_exact() {
        for t in [Turns::ZERO, Turns::HALF, Turns::from_f64(0.1), Turns::from_words(u128::MAX, 7)] {
            assert_eq!(parse_turns(&fmt_turns(t)), Some(t));
        }
        assert_eq!(parse_turns("zz:00"), None);
    }

    #[test]
    fn stage_one_round_trips() {
        let cfg = EngineConfig { grid_n: 32, ..EngineConfig::default() };
        let s0 = SchemeStage::initial(&cfg).unwrap();
        let s1 = step(&s0, &cfg).unwrap();
        let deform = DeformRecord { q: 3, amplitude: 0.02, halvings: 1, dj: 1e-3, dw: 2.5e-4, budget: 0.5 };
        let rec = StageRecord::from_stage(&s1, "abc", Some(deform));
        let back = StageRecord::from_text(&rec.to_text()).unwrap();
        assert_eq!(back, rec);
        assert_eq!(back.to_stage(&s0.conjugators), s1);
        let r0 = StageRecord::from_stage(&s0, "abc", None);
        assert_eq!(StageRecord::from_text(&r0.to_text()).unwrap().to_stage(&[]), s0);
    }

    #[test]
    fn malformed_records_are_rejected() {
        assert!(StageRecord::from_text("n = 1").is_err());
        assert!(StageRecord::from_text("garbage").is_err());
    }
}
