//! Sequential stage runs with persistence and resume.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use abclab_core::deform::{tracking_points, DeformationTrack};
use abclab_core::engine::{step, SchemeStage};
use num_traits::ToPrimitive;

use crate::config::ExperimentConfig;
use crate::error::{LabError, LabResult};
use crate::record::{stage_file_name, write_atomic, DeformRecord, StageRecord};

pub const TOOL_VERSION: &str = concat!("abclab ", env!("CARGO_PKG_VERSION"));
pub const MANIFEST_FILE: &str = "manifest.txt";
pub const CONFIG_FILE: &str = "config.txt";

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RunStatus {
    Complete,
    Partial,
    Failed { stage: usize, reason: String },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunManifest {
    pub config_hash: String,
    pub tool_version: String,
    pub requested: usize,
    /// `(n, file name)` for every persisted stage, in order.
    pub stages: Vec<(usize, String)>,
    pub status: RunStatus,
}

impl RunManifest {
    pub fn to_text(&self) -> String {
        let mut s = String::from("# abclab run manifest\n");
        let _ = writeln!(s, "tool = {}", self.tool_version);
        let _ = writeln!(s, "config_hash = {}", self.config_hash);
        let _ = writeln!(s, "requested = {}", self.requested);
        match &self.status {
            RunStatus::Complete => s.push_str("status = complete\n"),
            RunStatus::Partial => s.push_str("status = partial\n"),
            RunStatus::Failed { stage, reason } => {
                let _ = writeln!(s, "status = failed");
                let _ = writeln!(s, "failed_stage = {stage}");
                let _ = writeln!(s, "failure = {}", reason.replace('\n', " "));
            }
        }
        for (n, f) in &self.stages {
            let _ = writeln!(s, "stage = {n} {f}");
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self, String> {
        let mut m = RunManifest {
            config_hash: String::new(),
            tool_version: String::new(),
            requested: 0,
            stages: Vec::new(),
            status: RunStatus::Partial,
        };
        let (mut status, mut failed_stage, mut failure) = (None, None, String::new());
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once(" = ").ok_or_else(|| format!("bad manifest line `{line}`"))?;
            match k {
                "tool" => m.tool_version = v.to_string(),
                "config_hash" => m.config_hash = v.to_string(),
                "requested" => m.requested = v.parse().map_err(|_| format!("bad requested `{v}`"))?,
                "status" => status = Some(v.to_string()),
                "failed_stage" => failed_stage = Some(v.parse().map_err(|_| format!("bad failed_stage `{v}`"))?),
                "failure" => failure = v.to_string(),
                "stage" => {
                    let (n, f) = v.split_once(' ').ok_or_else(|| format!("bad stage line `{v}`"))?;
                    m.stages.push((n.parse().map_err(|_| format!("bad stage index `{n}`"))?, f.to_string()));
                }
                _ => return Err(format!("unknown manifest key `{k}`")),
            }
        }
        m.status = match status.as_deref() {
            Some("complete") => RunStatus::Complete,
            Some("partial") => RunStatus::Partial,
            Some("failed") => RunStatus::Failed { stage: failed_stage.ok_or("failed run without stage")?, reason: failure },
            other => return Err(format!("bad status {other:?}")),
        };
        if m.config_hash.is_empty() {
            return Err("missing config_hash".into());
        }
        Ok(m)
    }

    pub fn read(dir: &Path) -> LabResult<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path).map_err(LabError::io(&path))?;
        Self::from_text(&text).map_err(|msg| LabError::Record { path, msg })
    }

    fn write(&self, dir: &Path) -> LabResult<()> {
        write_atomic(&dir.join(MANIFEST_FILE), &self.to_text())
    }
}

/// A run directory loaded into memory: stages `0..=k` and, when enabled,
/// the deformation track rebuilt up to stage `k`.
pub struct LoadedRun {
    pub dir: PathBuf,
    pub config: ExperimentConfig,
    pub manifest: RunManifest,
    pub stages: Vec<SchemeStage>,
    pub records: Vec<StageRecord>,
}

impl LoadedRun {
    pub fn stage(&self, n: usize) -> LabResult<&SchemeStage> {
        self.stages.get(n).ok_or(LabError::MissingStage(n))
    }

    /// Replays the deformation track through stage `n`.
    pub fn deformation(&self, n: usize) -> LabResult<DeformationTrack> {
        self.stage(n)?;
        let mut track = new_track(&self.config)?;
        for rec in self.records.iter().take(n) {
            let d = rec.deform.as_ref().ok_or_else(|| LabError::Usage("run has no deformation track".into()))?;
            track.replay(d.q, d.amplitude, d.halvings).map_err(|source| LabError::Stage { stage: rec.n, source })?;
        }
        Ok(track)
    }
}

fn new_track(cfg: &ExperimentConfig) -> LabResult<DeformationTrack> {
    let mut track = DeformationTrack::new(cfg.bump, tracking_points(cfg.seed, cfg.tracking_points, cfg.tracking_r)?);
    track.quad_n = cfg.quad_n;
    Ok(track)
}

/// Twist frequency used by the deformation of stage `n`.
fn deform_q(stage: &SchemeStage) -> u64 {
    stage.alpha.lattice_denominator().to_u64().unwrap_or(u64::MAX)
}

/// Reads `config.txt`, the manifest and every record it lists.
pub fn load(dir: &Path) -> LabResult<LoadedRun> {
    let cpath = dir.join(CONFIG_FILE);
    let text = std::fs::read_to_string(&cpath).map_err(LabError::io(&cpath))?;
    let mut config = ExperimentConfig::parse(&text)?;
    config.out = dir.to_path_buf();
    let manifest = RunManifest::read(dir)?;
    if manifest.config_hash != config.hash() {
        return Err(LabError::Record { path: cpath, msg: "config does not match the manifest hash".into() });
    }
    let (stages, records) = load_records(dir, &config, &manifest)?;
    Ok(LoadedRun { dir: dir.to_path_buf(), config, manifest, stages, records })
}

fn load_records(dir: &Path, cfg: &ExperimentConfig, m: &RunManifest) -> LabResult<(Vec<SchemeStage>, Vec<StageRecord>)> {
    let mut stages = vec![SchemeStage::initial(&cfg.engine()).map_err(|source| LabError::Stage { stage: 0, source })?];
    let mut records = Vec::new();
    for (i, (n, file)) in m.stages.iter().enumerate() {
        let path = dir.join(file);
        if *n != i + 1 {
            return Err(LabError::Record { path, msg: format!("expected stage {}, manifest lists {n}", i + 1) });
        }
        let rec = StageRecord::read(&path)?;
        if rec.n != *n || rec.config_hash != m.config_hash {
            return Err(LabError::Record { path, msg: "record does not belong to this run".into() });
        }
        let prev = stages.last().expect("stage 0 is always present");
        stages.push(rec.to_stage(&prev.conjugators));
        records.push(rec);
    }
    Ok((stages, records))
}

/// Runs stages `1..=cfg.stages` into `cfg.out`, continuing after the last
/// stage already recorded there.
pub fn run(cfg: &ExperimentConfig) -> LabResult<RunManifest> {
    run_with(cfg, |_| {})
}

/// As [`run`], calling `progress` after each stage is persisted.
pub fn run_with(cfg: &ExperimentConfig, mut progress: impl FnMut(&StageRecord)) -> LabResult<RunManifest> {
    let dir = &cfg.out;
    std::fs::create_dir_all(dir).map_err(LabError::io(dir))?;
    let hash = cfg.hash();
    let mut manifest = match RunManifest::read(dir) {
        Ok(m) if m.config_hash == hash => m,
        Ok(_) => return Err(LabError::Config(format!("{} holds a run with a different config", dir.display()))),
        Err(LabError::Io { source, .. }) if source.kind() == std::io::ErrorKind::NotFound => RunManifest {
            config_hash: hash.clone(),
            tool_version: TOOL_VERSION.to_string(),
            requested: cfg.stages,
            stages: Vec::new(),
            status: RunStatus::Partial,
        },
        Err(e) => return Err(e),
    };
    manifest.requested = cfg.stages;
    manifest.tool_version = TOOL_VERSION.to_string();
    write_atomic(&dir.join(CONFIG_FILE), &cfg.to_text())?;

    let engine = cfg.engine();
    let (mut stages, records) = load_records(dir, cfg, &manifest)?;
    let mut track = if cfg.deform { Some(new_track(cfg)?) } else { None };
    if let Some(track) = track.as_mut() {
        for rec in &records {
            let d = rec.deform.as_ref().ok_or_else(|| LabError::Record {
                path: dir.join(stage_file_name(rec.n)),
                msg: "missing deformation values".into(),
            })?;
            track.replay(d.q, d.amplitude, d.halvings).map_err(|source| LabError::Stage { stage: rec.n, source })?;
        }
    }

    for n in stages.len()..=cfg.stages {
        let prev = stages.last().expect("stage 0 is always present");
        let next = match step(prev, &engine) {
            Ok(s) => s,
            Err(source) => return fail(dir, &mut manifest, n, source),
        };
        let deform = match track.as_mut() {
            None => None,
            Some(track) => {
                let q = deform_q(&next);
                match track.advance(q, &cfg.schedule) {
                    Ok(s) => Some(DeformRecord {
                        q,
                        amplitude: s.amplitude,
                        halvings: s.halvings,
                        dj: s.dj,
                        dw: s.dw,
                        budget: s.budget,
                    }),
                    Err(source) => return fail(dir, &mut manifest, n, source),
                }
            }
        };
        let rec = StageRecord::from_stage(&next, &hash, deform);
        let file = stage_file_name(n);
        rec.write(&dir.join(&file))?;
        manifest.stages.push((n, file));
        manifest.status = RunStatus::Partial;
        manifest.write(dir)?;
        progress(&rec);
        stages.push(next);
    }
    manifest.status = RunStatus::Complete;
    manifest.write(dir)?;
    Ok(manifest)
}

fn fail(dir: &Path, m: &mut RunManifest, stage: usize, source: abclab_core::Error) -> LabResult<RunManifest> {
    m.status = RunStatus::Failed { stage, reason: source.to_string() };
    m.write(dir)?;
    Err(LabError::Stage { stage, source })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_round_trips() {
        let m = RunManifest {
            config_hash: "ab12".into(),
            tool_version: TOOL_VERSION.into(),
            requested: 3,
            stages: vec![(1, stage_file_name(1)), (2, stage_file_name(2))],
            status: RunStatus::Failed { stage: 3, reason: "certificate failure: x".into() },
        };
        assert_eq!(RunManifest::from_text(&m.to_text()).unwrap(), m);
        assert!(RunManifest::from_text("status = done\nconfig_hash = x").is_err());
    }
}
