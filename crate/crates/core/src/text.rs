//! Line-oriented text for numbers and map expressions.
//!
//! Floats are written with the shortest digit string that parses back to the
//! same double (never more than 17 significant digits). A map expression is
//! written in prefix order, one node per line:
//!
//! ```text
//! compose 2
//! rotation 1/4
//! inverse
//! hamflow 0.25 18 256 0.00125
//! ```
//!
//! Leaves: `rotation p/q`, `rotation real x`, `shear c0 c1 …`,
//! `twist k:a:b …` and `hamflow K freq steps collar`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use crate::error::{Error, Result};
use crate::map::{Angle, HamFlow, MapExpr, Poly, TrigPoly, TrigTerm};

/// Shortest round-trip decimal form, switching to exponent form outside
/// `[1e-5, 1e16)`.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-5..1e16).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn parse_f64(s: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad number `{s}`")))
}

pub fn map_to_text(m: &MapExpr) -> String {
    let mut out = String::new();
    write_node(m, &mut out);
    out
}

fn write_node(m: &MapExpr, out: &mut String) {
    match m {
        MapExpr::Rotation(Angle::Exact(a)) => {
            let _ = writeln!(out, "rotation {a}");
        }
        MapExpr::Rotation(Angle::Real(x)) => {
            let _ = writeln!(out, "rotation real {}", fmt_f64(*x));
        }
        MapExpr::Shear(p) => {
            out.push_str("shear");
            for c in &p.coeffs {
                out.push(' ');
                out.push_str(&fmt_f64(*c));
            }
            out.push('\n');
        }
        MapExpr::Twist(t) => {
            out.push_str("twist");
            for term in &t.terms {
                let _ = write!(out, " {}:{}:{}", term.k, fmt_f64(term.cos), fmt_f64(term.sin));
            }
            out.push('\n');
        }
        MapExpr::HamFlow(h) => {
            let _ = writeln!(out, "hamflow {} {} {} {}", fmt_f64(h.k), h.freq, h.steps, fmt_f64(h.collar));
        }
        MapExpr::Compose(v) => {
            let _ = writeln!(out, "compose {}", v.len());
            for c in v {
                write_node(c, out);
            }
        }
        MapExpr::Inverse(b) => {
            out.push_str("inverse\n");
            write_node(b, out);
        }
    }
}

pub fn map_from_text(s: &str) -> Result<MapExpr> {
    let mut lines = s.lines().map(str::trim).filter(|l| !l.is_empty());
    let m = read_node(&mut lines)?;
    if let Some(extra) = lines.next() {
        return Err(Error::Parse(format!("trailing line `{extra}`")));
    }
    Ok(m)
}

fn read_node<'a, I: Iterator<Item = &'a str>>(lines: &mut I) -> Result<MapExpr> {
    let line = lines.next().ok_or_else(|| Error::Parse("unexpected end of map".into()))?;
    let mut words = line.split_whitespace();
    let head = words.next().unwrap_or_default();
    let rest: Vec<&str> = words.collect();
    let bad = || Error::Parse(format!("bad map line `{line}`"));
    Ok(match head {
        "rotation" => match rest.as_slice() {
            ["real", x] => MapExpr::Rotation(Angle::Real(parse_f64(x)?)),
            [a] => MapExpr::Rotation(Angle::Exact(a.parse()?)),
            _ => return Err(bad()),
        },
        "shear" => MapExpr::Shear(Poly { coeffs: rest.iter().map(|c| parse_f64(c)).collect::<Result<_>>()? }),
        "twist" => {
            let mut terms = Vec::with_capacity(rest.len());
            for t in rest {
                let mut it = t.split(':');
                let (Some(k), Some(a), Some(b), None) = (it.next(), it.next(), it.next(), it.next()) else {
                    return Err(bad());
                };
                let k = k.parse::<u64>().map_err(|_| bad())?;
                terms.push(TrigTerm { k, cos: parse_f64(a)?, sin: parse_f64(b)? });
            }
            MapExpr::Twist(TrigPoly { terms })
        }
        "hamflow" => {
            let [k, f, n, c] = rest.as_slice() else { return Err(bad()) };
            MapExpr::HamFlow(HamFlow::with_collar(
                parse_f64(k)?,
                f.parse::<u128>().map_err(|_| bad())?,
                n.parse::<usize>().map_err(|_| bad())?,
                parse_f64(c)?,
            )?)
        }
        "compose" => {
            let [n] = rest.as_slice() else { return Err(bad()) };
            let n = n.parse::<usize>().map_err(|_| bad())?;
            let mut v = Vec::with_capacity(n.min(1024));
            for _ in 0..n {
                v.push(read_node(lines)?);
            }
            MapExpr::Compose(v)
        }
        "inverse" if rest.is_empty() => MapExpr::Inverse(alloc::boxed::Box::new(read_node(lines)?)),
        _ => return Err(bad()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::RationalAngle;

    #[test]
    fn float_forms() {
        assert_eq!(fmt_f64(0.0), "0");
        assert_eq!(fmt_f64(0.1), "0.1");
        assert_eq!(fmt_f64(1e-300), "1e-300");
        assert_eq!(fmt_f64(-2.5e20), "-2.5e20");
        for x in [1.0 / 3.0, 2.0f64.sqrt() * 1e-9, 6.02214076e23, f64::MIN_POSITIVE, -0.0] {
            assert_eq!(parse_f64(&fmt_f64(x)).unwrap().to_bits(), x.to_bits());
        }
    }

    #[test]
    fn map_round_trip() {
        let m = MapExpr::compose(alloc::vec![
            MapExpr::rotation(RationalAngle::new(1, 4).unwrap()),
            MapExpr::HamFlow(HamFlow::with_collar(1.0 / 72.0, 18, 256, 1.25e-3).unwrap()).inverse(),
            MapExpr::shear(&[0.1, -1.0 / 3.0]),
            MapExpr::twist(&[(3, 0.2, -0.7), (6, 1e-30, 0.0)]),
            MapExpr::Rotation(Angle::Real(0.123456789012345678)),
            MapExpr::identity(),
        ]);
        let s = map_to_text(&m);
        assert!(s.starts_with("compose 6\nrotation 1/4\ninverse\nhamflow "));
        assert_eq!(map_from_text(&s).unwrap(), m);
        assert!(map_from_text("compose 2\nshear 1\n").is_err());
        assert!(map_from_text("shear 1\nshear 2\n").is_err());
        assert!(map_from_text("twist 1:2\n").is_err());
    }
}
