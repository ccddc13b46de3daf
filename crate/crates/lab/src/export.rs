//! Plot-ready orbit export.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use abclab_core::engine::lift_to_surface;
use abclab_core::geometry::{CylinderPoint, Surface};
use abclab_core::rational::{Ratio, RationalAngle};
use abclab_core::text::{fmt_f64, parse_f64};
use abclab_core::turns::Turns;
use num_bigint::BigUint;
use num_traits::One;

use crate::error::{LabError, LabResult};
use crate::record::write_atomic;
use crate::run::LoadedRun;

/// Closed forms whose expanded denominator would exceed this many bits are
/// not written out as `p/q`.
pub const MAX_EXPANDED_BITS: u64 = 1 << 20;

/// `α` as a single exact fraction, expanding a closed form when it is small
/// enough to write.
pub fn exact_fraction(alpha: &RationalAngle) -> Option<Ratio> {
    match alpha {
        RationalAngle::Exact(r) => Some(r.clone()),
        RationalAngle::Liouville { base } => {
            let d = base.denom();
            let bits = d.bits();
            let d_small = u32::try_from(d).ok()?;
            if (d_small as u64).saturating_mul(bits + 1) > MAX_EXPANDED_BITS {
                return None;
            }
            let den = (BigUint::one() << d_small) * d.pow(d_small) + BigUint::one();
            Some(base + Ratio::new(BigUint::one(), den))
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OrbitRow {
    pub k: u64,
    pub theta: f64,
    pub y: f64,
    pub surface: Vec<f64>,
}

/// Writes `length` iterates of stage `n` from `(theta, y)`.
pub fn export_orbit(run: &LoadedRun, n: usize, theta: f64, y: f64, length: u64, path: &Path) -> LabResult<PathBuf> {
    if length == 0 {
        return Err(LabError::Usage("orbit length must be at least 1".into()));
    }
    let stage = run.stage(n)?;
    let flow = run.config.engine().flow;
    let surface = run.config.surface;
    let lift = if surface == Surface::Cylinder { None } else { Some(lift_to_surface(stage, surface)?) };
    let mut s = String::from("# abclab orbit export\n");
    let _ = writeln!(s, "# stage = {n}");
    let _ = writeln!(s, "# alpha = {}", stage.alpha);
    match exact_fraction(&stage.alpha) {
        Some(r) => {
            let _ = writeln!(s, "# alpha_exact = {}/{}", r.numer(), r.denom());
        }
        None => {
            let _ = writeln!(s, "# alpha_exact = unavailable (closed form above)");
        }
    }
    let _ = writeln!(s, "# surface = {}", surface.name());
    let _ = writeln!(s, "# start = {} {}", fmt_f64(theta), fmt_f64(y));
    let _ = writeln!(s, "# length = {length}");
    let cols = match surface {
        Surface::Cylinder => "k theta y",
        Surface::Sphere => "k theta y x1 x2 x3",
        Surface::Disk => "k theta y x1 x2",
    };
    let _ = writeln!(s, "# columns = {cols}");
    let x0 = CylinderPoint { theta: Turns::from_f64(theta), y };
    for k in 0..length {
        let p = stage.iterate(&x0, &BigUint::from(k), &flow).map_err(|source| LabError::Stage { stage: n, source })?;
        let _ = write!(s, "{k} {} {}", fmt_f64(p.theta.to_f64()), fmt_f64(p.y));
        if let Some(l) = &lift {
            for v in l.to_surface(&p)? {
                let _ = write!(s, " {}", fmt_f64(v));
            }
        }
        s.push('\n');
    }
    write_atomic(path, &s)?;
    Ok(path.to_path_buf())
}

/// Parses the records of an exported orbit, skipping header lines.
pub fn read_orbit(text: &str) -> Result<Vec<OrbitRow>, String> {
    let mut rows = Vec::new();
    for line in text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty()) {
        let mut it = line.split_whitespace();
        let k = it.next().ok_or("empty row")?.parse::<u64>().map_err(|e| e.to_string())?;
        let vals = it.map(|v| parse_f64(v).map_err(|e| e.to_string())).collect::<Result<Vec<_>, _>>()?;
        if vals.len() < 2 {
            return Err(format!("row {k} has {} values", vals.len()));
        }
        rows.push(OrbitRow { k, theta: vals[0], y: vals[1], surface: vals[2..].to_vec() });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::str::FromStr;

    #[test]
    fn closed_forms_expand() {
        let a = RationalAngle::from_str("1/4+1/(2^4*4^4+1)").unwrap();
        let r = exact_fraction(&a).unwrap();
        assert_eq!(r, Ratio::new(BigUint::from(1u32), BigUint::from(4u32)) + Ratio::new(BigUint::from(1u32), BigUint::from(4097u32)));
        let b = RationalAngle::new(3, 7).unwrap();
        assert_eq!(exact_fraction(&b).unwrap(), Ratio::new(BigUint::from(3u32), BigUint::from(7u32)));
    }

    #[test]
    fn rows_parse() {
        let rows = read_orbit("# h\n0 0 0\n1 0.25 -1e-7 0.1 0.2 0.3\n").unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1].y, -1e-7);
        assert_eq!(rows[1].surface.len(), 3);
        assert!(read_orbit("3 1").is_err());
    }
}
