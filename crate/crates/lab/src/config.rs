//! Flat `key = value` experiment configuration.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use abclab_core::deform::AmplitudeSchedule;
use abclab_core::engine::EngineConfig;
use abclab_core::geometry::Surface;
use abclab_core::glue::BumpProfile;
use abclab_core::map::FlowConfig;
use abclab_core::text::{fmt_f64, parse_f64};
use sha2::{Digest, Sha256};

use crate::error::{LabError, LabResult};

/// Every recognised key with its default and a one-line description.
pub const KEYS: &[(&str, &str, &str)] = &[
    ("surface", "cylinder", "cylinder | sphere | disk; surface used for lifts and exports"),
    ("stages", "3", "number of scheme stages after stage 0"),
    ("grid_n", "64", "points per side of every diagnostic grid (≥ 16)"),
    ("flow_steps", "256", "macro steps per unit time for conjugator flows"),
    ("flow_tol", "1e-13", "Newton tolerance of the implicit integrator"),
    ("eta", "0.05", "gluing support margin"),
    ("eps", "0.2", "gluing plateau margin, eta < eps"),
    ("amp_base", "0.02", "deformation amplitude proposed at stage 1"),
    ("amp_ratio", "0.5", "ratio between proposed amplitudes of consecutive stages"),
    ("amp_halvings", "30", "maximum amplitude halvings per stage"),
    ("deform", "true", "run the structural deformation track alongside the scheme"),
    ("seed", "1", "64-bit seed for every random choice"),
    ("tracking_points", "8", "number of tracked points in the complexified cylinder"),
    ("tracking_r", "2", "radius R of the complexified cylinder A_R for tracking"),
    ("glue_r", "2", "radius R of A_R for the gluing report"),
    ("glue_grid", "64", "real grid resolution of the gluing report"),
    ("glue_complex_n", "6", "points per axis of the gluing report's complex grid"),
    ("quad_n", "64", "initial Simpson interval count of the volume correction"),
    ("witness_delta", "0.5", "pole-collar radius for the transitivity witness"),
    ("tol_conjugacy", "1e-8", "conjugacy invariance tolerance"),
    ("tol_symplectic", "1e-6", "determinant tolerance of the stage maps"),
    ("tol_growth", "1e-6", "additive slack in the growth inequality"),
    ("tol_seam", "1e-6", "surface-lift seam continuity tolerance"),
    ("tol_glue_det", "1e-6", "determinant tolerance of the glued map"),
    ("tol_glue_sigma", "1e-10", "sigma-commutation tolerance of the glued map"),
    ("tol_mass", "1e-8", "mass identity tolerance"),
    ("tol_holoform", "1e-5", "holomorphic 2-form residual tolerance"),
    ("tol_sigma", "1e-6", "real-structure anticommutation tolerance"),
    ("nijenhuis_slope", "1.5", "minimum log-log slope of Nijenhuis residuals"),
    ("out", "run", "output directory"),
];

/// Keys that do not change the content of any stage record.
const UNHASHED: &[&str] = &["out", "stages"];

#[derive(Clone, Debug, PartialEq)]
pub struct Tolerances {
    pub conjugacy: f64,
    pub symplectic: f64,
    pub growth: f64,
    pub seam: f64,
    pub glue_det: f64,
    pub glue_sigma: f64,
    pub mass: f64,
    pub holoform: f64,
    pub sigma: f64,
    pub nijenhuis_slope: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub surface: Surface,
    pub stages: usize,
    pub grid_n: usize,
    pub flow: FlowConfig,
    pub flow_steps: usize,
    pub bump: BumpProfile,
    pub schedule: AmplitudeSchedule,
    pub deform: bool,
    pub seed: u64,
    pub tracking_points: usize,
    pub tracking_r: f64,
    pub glue_r: f64,
    pub glue_grid: usize,
    pub glue_complex_n: usize,
    pub quad_n: usize,
    pub witness_delta: f64,
    pub tol: Tolerances,
    pub out: PathBuf,
    raw: BTreeMap<String, String>,
}

fn defaults() -> BTreeMap<String, String> {
    KEYS.iter().map(|(k, v, _)| (k.to_string(), v.to_string())).collect()
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_pairs(text: &str) -> LabResult<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| LabError::Config(format!("line {}: expected key = value", i + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if out.insert(k.to_string(), v.to_string()).is_some() {
            return Err(LabError::Config(format!("line {}: duplicate key {k}", i + 1)));
        }
    }
    Ok(out)
}

impl ExperimentConfig {
    pub fn from_pairs(pairs: &BTreeMap<String, String>) -> LabResult<Self> {
        let mut raw = defaults();
        for (k, v) in pairs {
            if !raw.contains_key(k) {
                return Err(LabError::Config(format!("unknown key {k}")));
            }
            raw.insert(k.clone(), v.clone());
        }
        let get = |k: &str| raw[k].as_str();
        let float = |k: &str| -> LabResult<f64> {
            parse_f64(get(k)).map_err(|_| LabError::Config(format!("{k}: not a number: {}", get(k))))
        };
        let int = |k: &str| -> LabResult<u64> {
            get(k).parse::<u64>().map_err(|_| LabError::Config(format!("{k}: not a non-negative integer: {}", get(k))))
        };
        let boolean = |k: &str| -> LabResult<bool> {
            match get(k) {
                "true" => Ok(true),
                "false" => Ok(false),
                v => Err(LabError::Config(format!("{k}: expected true or false, got {v}"))),
            }
        };
        let surface = Surface::parse(get("surface")).map_err(|e| LabError::Config(format!("surface: {e}")))?;
        let flow = FlowConfig::new(int("flow_steps")? as usize, float("flow_tol")?)
            .map_err(|e| LabError::Config(format!("flow: {e}")))?;
        let bump = BumpProfile::new(float("eta")?, float("eps")?).map_err(|e| LabError::Config(e.to_string()))?;
        let schedule = AmplitudeSchedule::new(float("amp_base")?, float("amp_ratio")?, int("amp_halvings")? as u32)
            .map_err(|e| LabError::Config(e.to_string()))?;
        let tol = Tolerances {
            conjugacy: float("tol_conjugacy")?,
            symplectic: float("tol_symplectic")?,
            growth: float("tol_growth")?,
            seam: float("tol_seam")?,
            glue_det: float("tol_glue_det")?,
            glue_sigma: float("tol_glue_sigma")?,
            mass: float("tol_mass")?,
            holoform: float("tol_holoform")?,
            sigma: float("tol_sigma")?,
            nijenhuis_slope: float("nijenhuis_slope")?,
        };
        let cfg = ExperimentConfig {
            surface,
            stages: int("stages")? as usize,
            grid_n: int("grid_n")? as usize,
            flow_steps: int("flow_steps")? as usize,
            flow,
            bump,
            schedule,
            deform: boolean("deform")?,
            seed: int("seed")?,
            tracking_points: int("tracking_points")? as usize,
            tracking_r: float("tracking_r")?,
            glue_r: float("glue_r")?,
            glue_grid: int("glue_grid")? as usize,
            glue_complex_n: int("glue_complex_n")? as usize,
            quad_n: int("quad_n")? as usize,
            witness_delta: float("witness_delta")?,
            tol,
            out: PathBuf::from(get("out")),
            raw: BTreeMap::new(),
        };
        cfg.validate()?;
        let mut cfg = cfg;
        cfg.raw = cfg.canonical_pairs(&raw)?;
        Ok(cfg)
    }

    pub fn parse(text: &str) -> LabResult<Self> {
        Self::from_pairs(&parse_pairs(text)?)
    }

    pub fn with_overrides(&self, over: &BTreeMap<String, String>) -> LabResult<Self> {
        let mut pairs = self.raw.clone();
        for (k, v) in over {
            pairs.insert(k.clone(), v.clone());
        }
        Self::from_pairs(&pairs)
    }

    fn validate(&self) -> LabResult<()> {
        let bad = |m: String| Err(LabError::Config(m));
        if self.stages < 1 {
            return bad("stages must be at least 1".into());
        }
        if self.grid_n < 16 || self.glue_grid < 16 {
            return bad("grid resolutions must be at least 16".into());
        }
        let t = &self.tol;
        for (k, v) in [
            ("tol_conjugacy", t.conjugacy),
            ("tol_symplectic", t.symplectic),
            ("tol_growth", t.growth),
            ("tol_seam", t.seam),
            ("tol_glue_det", t.glue_det),
            ("tol_glue_sigma", t.glue_sigma),
            ("tol_mass", t.mass),
            ("tol_holoform", t.holoform),
            ("tol_sigma", t.sigma),
            ("nijenhuis_slope", t.nijenhuis_slope),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{k} must be positive"));
            }
        }
        if !(self.tracking_r > 1.0 && self.glue_r > 1.0) {
            return bad("complex radii must exceed 1".into());
        }
        if self.tracking_points == 0 || self.glue_complex_n == 0 {
            return bad("sample counts must be positive".into());
        }
        if !(self.bump.eta < 1.0 / 3.0) {
            return bad("eta must be below 1/3".into());
        }
        if self.quad_n < 64 || !self.quad_n.is_multiple_of(2) {
            return bad("quad_n must be even and at least 64".into());
        }
        if !(self.witness_delta > 0.0) {
            return bad("witness_delta must be positive".into());
        }
        Ok(())
    }

    /// Values re-rendered from their parsed form, so `1e-8` and `0.00000001` agree.
    fn canonical_pairs(&self, raw: &BTreeMap<String, String>) -> LabResult<BTreeMap<String, String>> {
        let mut out = BTreeMap::new();
        for (k, v) in raw {
            let c = match *k {
                ref s if s == "surface" => self.surface.name().to_string(),
                ref s if s == "out" || s == "deform" => v.clone(),
                _ => match v.parse::<u64>() {
                    Ok(i) => i.to_string(),
                    Err(_) => fmt_f64(parse_f64(v).map_err(|e| LabError::Config(format!("{k}: {e}")))?),
                },
            };
            out.insert(k.clone(), c);
        }
        Ok(out)
    }

    pub fn pairs(&self) -> &BTreeMap<String, String> {
        &self.raw
    }

    /// Sorted `key = value` lines.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.raw {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }

    /// SHA-256 of the sorted canonical pairs, excluding `out` and `stages`.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for (k, v) in &self.raw {
            if UNHASHED.contains(&k.as_str()) {
                continue;
            }
            h.update(format!("{k}={v}\n").as_bytes());
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn engine(&self) -> EngineConfig {
        EngineConfig {
            grid_n: self.grid_n,
            flow: self.flow,
            flow_steps: self.flow_steps,
            conjugacy_tol: self.tol.conjugacy,
            ..EngineConfig::default()
        }
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig::from_pairs(&BTreeMap::new()).expect("defaults are valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = ExperimentConfig::default();
        assert_eq!(ExperimentConfig::parse(&c.to_text()).unwrap(), c);
        assert_eq!(c.engine().grid_n, 64);
    }

    #[test]
    fn hash_ignores_order_and_spelling() {
        let a = ExperimentConfig::parse("eta = 0.05\neps = 0.2\ntol_conjugacy = 1e-8\n").unwrap();
        let b = ExperimentConfig::parse("tol_conjugacy=0.00000001\n# comment\neps=0.2\neta=0.05").unwrap();
        assert_eq!(a.hash(), b.hash());
        let c = ExperimentConfig::parse("eta = 0.04").unwrap();
        assert_ne!(a.hash(), c.hash());
        let d = ExperimentConfig::parse("stages = 7\nout = elsewhere").unwrap();
        assert_eq!(a.hash(), d.hash());
    }

    #[test]
    fn invalid_configs_are_rejected() {
        assert!(ExperimentConfig::parse("eta = 0.3\neps = 0.2").is_err());
        assert!(ExperimentConfig::parse("stages = 0").is_err());
        assert!(ExperimentConfig::parse("grid_n = 8").is_err());
        assert!(ExperimentConfig::parse("tol_mass = 0").is_err());
        assert!(ExperimentConfig::parse("colour = red").is_err());
        assert!(ExperimentConfig::parse("eta").is_err());
        assert!(ExperimentConfig::parse("eta = 0.1\neta = 0.1").is_err());
    }

    #[test]
    fn overrides_replace_values() {
        let c = ExperimentConfig::default();
        let mut o = BTreeMap::new();
        o.insert("stages".to_string(), "1".to_string());
        let d = c.with_overrides(&o).unwrap();
        assert_eq!(d.stages, 1);
        assert_eq!(d.hash(), c.hash());
    }
}
