//! Command-line front end; every config key is also a `--key value` flag.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use abclab_core::glue::{glue_and_report_with, EntireMapSpec, GlueOptions};
use clap::{value_parser, Arg, ArgAction, ArgMatches, Command};

use crate::config::{parse_pairs, ExperimentConfig, KEYS};
use crate::diagnose::{diagnose, CHECKS};
use crate::error::{LabError, LabResult};
use crate::export::export_orbit;
use crate::record::write_atomic;
use crate::run::{load, run_with};

fn key_args(cmd: Command) -> Command {
    let cmd = cmd.arg(Arg::new("config").long("config").value_name("FILE").help("flat key = value config file"));
    KEYS.iter().fold(cmd, |c, (k, default, help)| {
        let arg = Arg::new(*k).long(*k).value_name("VALUE").help(format!("{help} [default: {default}]"));
        c.arg(if k.contains('_') { arg.alias(k.replace('_', "-")) } else { arg })
    })
}

fn run_dir_arg() -> Arg {
    Arg::new("run").long("run").value_name("DIR").required(true).help("run directory holding manifest.txt")
}

fn stage_arg(required: bool) -> Arg {
    Arg::new("stage").long("stage").value_parser(value_parser!(usize)).required(required)
}

pub fn command() -> Command {
    Command::new("abclab")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Staged conjugation-scheme experiments with persisted, checkable stages")
        .subcommand_required(true)
        .subcommand(key_args(Command::new("run").about("run or resume the stages of an experiment")))
        .subcommand(
            Command::new("diagnose")
                .about("run a named check on one recorded stage")
                .arg(run_dir_arg())
                .arg(Arg::new("check").long("check").required(true).help(format!("one of: {}", CHECKS.join(", "))))
                .arg(stage_arg(true)),
        )
        .subcommand(
            Command::new("export-orbit")
                .about("write an orbit segment of a recorded stage as plain text")
                .arg(run_dir_arg())
                .arg(stage_arg(true))
                .arg(Arg::new("theta").long("theta").value_parser(value_parser!(f64)).default_value("0"))
                .arg(Arg::new("y").long("y").value_parser(value_parser!(f64)).default_value("0").allow_hyphen_values(true))
                .arg(Arg::new("length").long("length").value_parser(value_parser!(u64)).default_value("1"))
                .arg(Arg::new("output").long("output").short('o').value_name("FILE")),
        )
        .subcommand(
            key_args(Command::new("glue-report").about("glue an explicit shear/twist pair and report its checks"))
                .arg(Arg::new("shear").long("shear").value_parser(value_parser!(f64)).default_value("0.02"))
                .arg(Arg::new("twist").long("twist").value_parser(value_parser!(f64)).default_value("0.015"))
                .arg(Arg::new("freq").long("freq").value_parser(value_parser!(u64)).default_value("2"))
                .arg(Arg::new("output").long("output").short('o').value_name("FILE")),
        )
        .subcommand(
            Command::new("liouville")
                .about("exact Liouville certificate over the recorded angles")
                .arg(run_dir_arg())
                .arg(stage_arg(false)),
        )
        .arg(Arg::new("quiet").long("quiet").short('q').action(ArgAction::SetTrue).global(true))
}

fn config_from(m: &ArgMatches) -> LabResult<ExperimentConfig> {
    let mut pairs = match m.get_one::<String>("config") {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(LabError::io(p))?;
            parse_pairs(&text)?
        }
        None => BTreeMap::new(),
    };
    for (k, _, _) in KEYS {
        if let Some(v) = m.get_one::<String>(k) {
            pairs.insert(k.to_string(), v.clone());
        }
    }
    ExperimentConfig::from_pairs(&pairs)
}

fn say(quiet: bool, msg: impl AsRef<str>) {
    if !quiet {
        println!("{}", msg.as_ref());
    }
}

/// Exit status: 0 pass, 1 tolerance breach or failure, 2 usage error.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let m = match command().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            if e.use_stderr() {
                eprint!("{e}");
                return 2;
            }
            let _ = e.print();
            return 0;
        }
    };
    match dispatch(&m) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(m: &ArgMatches) -> LabResult<bool> {
    let quiet = m.get_flag("quiet");
    match m.subcommand() {
        Some(("run", sub)) => {
            let cfg = config_from(sub)?;
            let man = run_with(&cfg, |r| say(quiet, format!("stage {} alpha = {}", r.n, r.alpha)))?;
            say(quiet, format!("{} stages in {}", man.stages.len(), cfg.out.display()));
            Ok(true)
        }
        Some(("diagnose", sub)) => {
            let run = load(Path::new(sub.get_one::<String>("run").expect("required")))?;
            let check = sub.get_one::<String>("check").expect("required");
            let (rep, path) = diagnose(&run, check, *sub.get_one::<usize>("stage").expect("required"))?;
            say(quiet, format!("{} stage {}: {} ({})", rep.check, rep.stage, status(rep.pass), path.display()));
            Ok(rep.pass)
        }
        Some(("liouville", sub)) => {
            let run = load(Path::new(sub.get_one::<String>("run").expect("required")))?;
            let n = sub.get_one::<usize>("stage").copied().unwrap_or(run.stages.len() - 1);
            let (rep, path) = diagnose(&run, "liouville", n)?;
            say(quiet, format!("liouville through stage {n}: {} ({})", status(rep.pass), path.display()));
            Ok(rep.pass)
        }
        Some(("export-orbit", sub)) => {
            let run = load(Path::new(sub.get_one::<String>("run").expect("required")))?;
            let n = *sub.get_one::<usize>("stage").expect("required");
            let out = sub
                .get_one::<String>("output")
                .map(PathBuf::from)
                .unwrap_or_else(|| run.dir.join(format!("orbit_stage_{n:03}.txt")));
            let f = |k: &str| *sub.get_one::<f64>(k).expect("defaulted");
            export_orbit(&run, n, f("theta"), f("y"), *sub.get_one::<u64>("length").expect("defaulted"), &out)?;
            say(quiet, format!("wrote {}", out.display()));
            Ok(true)
        }
        Some(("glue-report", sub)) => {
            let cfg = config_from(sub)?;
            let f = |k: &str| *sub.get_one::<f64>(k).expect("defaulted");
            let spec = EntireMapSpec::shear_twist(f("shear"), f("twist"), *sub.get_one::<u64>("freq").expect("defaulted"))?;
            let opts = GlueOptions { quad_n: cfg.quad_n, complex_n: cfg.glue_complex_n, ..GlueOptions::default() };
            let rep = glue_and_report_with(&spec, &cfg.bump, cfg.glue_r, cfg.glue_grid, &opts)?;
            let pass = rep.det_residual <= cfg.tol.glue_det
                && rep.support_violations == 0
                && rep.sigma_residual <= cfg.tol.glue_sigma
                && rep.mass_residual <= cfg.tol.mass;
            let text = format!("{}# status: {}\n", rep.to_text(), status(pass));
            match sub.get_one::<String>("output") {
                Some(p) => {
                    write_atomic(Path::new(p), &text)?;
                    say(quiet, format!("glue report: {} ({p})", status(pass)));
                }
                None => say(quiet, text),
            }
            Ok(pass)
        }
        _ => Err(LabError::Usage("unknown verb".into())),
    }
}

fn status(pass: bool) -> &'static str {
    if pass {
        "pass"
    } else {
        "breach"
    }
}
