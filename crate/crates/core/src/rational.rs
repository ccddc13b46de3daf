//! Exact rotation numbers and the budgets bounding their increments.
//!
//! Liouville increments grow like 2^q q^q, which outruns explicit storage
//! after a couple of stages. Numbers past [`EXPLICIT_BITS`] are kept in
//! closed form: `base + 1/(2^d d^d + 1)` for angles and `1/(2^d d^d)` for
//! budgets, where `d` is the denominator of `base`.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::str::FromStr;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::turns::Turns;

pub type Ratio = num_rational::Ratio<BigUint>;

/// Largest 2^q q^q (in bits) that is written out explicitly.
pub const EXPLICIT_BITS: f64 = 4096.0;

pub fn big(n: u64) -> BigUint {
    BigUint::from(n)
}

/// log2 of a positive integer, accurate to f64 rounding.
pub fn log2_big(x: &BigUint) -> f64 {
    let b = x.bits();
    if b == 0 {
        return f64::NEG_INFINITY;
    }
    if b <= 1000 {
        return libm::log2(x.to_f64().unwrap_or(f64::MAX));
    }
    let shift = b - 64;
    let top = (x >> shift).to_f64().unwrap_or(0.0);
    libm::log2(top) + shift as f64
}

pub fn log2_ratio(r: &Ratio) -> f64 {
    log2_big(r.numer()) - log2_big(r.denom())
}

/// log2 of 2^q q^q.
pub fn liouville_log2(q: &BigUint) -> f64 {
    let lq = log2_big(q);
    let qf = libm::exp2(lq);
    qf * (1.0 + lq)
}

/// 2^q q^q, when it fits under [`EXPLICIT_BITS`].
pub fn liouville_denominator(q: &BigUint) -> Option<BigUint> {
    if liouville_log2(q) > EXPLICIT_BITS {
        return None;
    }
    let qu = q.to_u32()?;
    Some((BigUint::one() << qu) * q.pow(qu))
}

/// Exact value of a finite positive double.
pub fn ratio_from_f64(x: f64) -> Result<Ratio> {
    if !(x.is_finite() && x > 0.0) {
        return Err(Error::Domain(format!("expected a positive finite value, got {x}")));
    }
    let (mantissa, exp, _) = num_traits::float::FloatCore::integer_decode(x);
    let m = BigUint::from(mantissa);
    Ok(if exp >= 0 {
        Ratio::from_integer(m << exp as u32)
    } else {
        Ratio::new(m, BigUint::one() << (-exp) as u32)
    })
}

fn reduce_unit(r: Ratio) -> Ratio {
    let (n, d) = (r.numer().clone(), r.denom().clone());
    Ratio::new(n.mod_floor(&d), d)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RationalAngle {
    Exact(Ratio),
    /// `base + 1/(2^d d^d + 1)` with `d = base.denom()`.
    Liouville { base: Ratio },
}

impl RationalAngle {
    pub fn zero() -> Self {
        RationalAngle::Exact(Ratio::from_integer(BigUint::zero()))
    }

    pub fn new(p: u64, q: u64) -> Result<Self> {
        if q == 0 {
            return Err(Error::Domain("zero denominator".into()));
        }
        Ok(RationalAngle::Exact(reduce_unit(Ratio::new(big(p), big(q)))))
    }

    pub fn from_ratio(r: Ratio) -> Self {
        RationalAngle::Exact(reduce_unit(r))
    }

    /// Exact sum mod 1; `None` when either angle is a closed form.
    pub fn checked_add(&self, o: &RationalAngle) -> Option<RationalAngle> {
        Some(RationalAngle::from_ratio(self.exact()? + o.exact()?))
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, RationalAngle::Exact(r) if r.is_zero())
    }

    /// `-α` mod 1.
    pub fn negated(&self) -> RationalAngle {
        match self {
            RationalAngle::Exact(r) => RationalAngle::from_ratio(Ratio::from_integer(BigUint::one()) - r),
            RationalAngle::Liouville { .. } => self.clone(),
        }
    }

    pub fn exact(&self) -> Option<&Ratio> {
        match self {
            RationalAngle::Exact(r) => Some(r),
            RationalAngle::Liouville { .. } => None,
        }
    }

    /// Denominator of the orbit lattice that is resolvable in fixed point:
    /// `q` for explicit angles, `d` for closed forms.
    pub fn lattice_denominator(&self) -> &BigUint {
        match self {
            RationalAngle::Exact(r) => r.denom(),
            RationalAngle::Liouville { base } => base.denom(),
        }
    }

    /// log2 of the reduced denominator.
    pub fn denominator_log2(&self) -> f64 {
        match self {
            RationalAngle::Exact(r) => log2_big(r.denom()),
            RationalAngle::Liouville { base } => {
                log2_big(base.denom()) + liouville_log2(base.denom())
            }
        }
    }

    pub fn denominator_at_least(&self, n: u64) -> bool {
        match self {
            RationalAngle::Exact(r) => *r.denom() >= big(n),
            RationalAngle::Liouville { .. } => true,
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.turns().to_f64()
    }

    pub fn turns(&self) -> Turns {
        self.multiple_turns(&BigUint::one())
    }

    /// Fixed-point value of `k * self` mod 1.
    ///
    /// For closed forms the increment `k/(2^d d^d + 1)` is below the
    /// fixed-point resolution whenever `k` stays well below `2^(bits - 160)`.
    pub fn multiple_turns(&self, k: &BigUint) -> Turns {
        match self {
            RationalAngle::Exact(r) => Turns::from_ratio(&(k * r.numer()), r.denom()),
            RationalAngle::Liouville { base } => {
                debug_assert!((k.bits() as f64) + 160.0 < liouville_log2(base.denom()));
                Turns::from_ratio(&(k * base.numer()), base.denom())
            }
        }
    }

    /// Smallest `k >= 0` on the lattice with `k * self` nearest to `t`.
    pub fn index_near(&self, t: Turns) -> BigUint {
        let (p, q) = match self {
            RationalAngle::Exact(r) => (r.numer(), r.denom()),
            RationalAngle::Liouville { base } => (base.numer(), base.denom()),
        };
        if q.is_one() {
            return BigUint::zero();
        }
        let tq = (t.to_biguint() * q + (BigUint::one() << 255u32)) >> 256u32;
        let r = tq.mod_floor(q);
        let pinv = p.modinv(q).expect("reduced fraction");
        (r * pinv).mod_floor(q)
    }
}

/// Smallest `x >= 0` with `l <= a*x mod m <= r`, for `0 <= l <= r < m`.
pub fn modular_window_min(a: &BigUint, m: &BigUint, l: &BigUint, r: &BigUint) -> Option<BigUint> {
    let a = a % m;
    if l.is_zero() {
        return Some(BigUint::zero());
    }
    if a.is_zero() {
        return None;
    }
    let x = l.div_ceil(&a);
    if &(&a * &x) <= r {
        return Some(x);
    }
    // no multiple of a in [l, r]: look for the smallest wrap count y instead
    let mr = m % &a;
    if mr.is_zero() {
        return None;
    }
    let y = modular_window_min(&mr, &a, &(&a - r % &a), &(&a - l % &a))?;
    Some((l + m * y).div_ceil(&a))
}

impl RationalAngle {
    /// Smallest `k >= 0` with `k * self - lo` (mod 1) in `[0, width]`, using
    /// the lattice `p/q` (closed forms are treated as their base).
    pub fn first_index_in(&self, lo: Turns, width: Turns) -> Option<BigUint> {
        let (p, q) = match self {
            RationalAngle::Exact(r) => (r.numer(), r.denom()),
            RationalAngle::Liouville { base } => (base.numer(), base.denom()),
        };
        let scale = |t: Turns, up: bool| {
            let v = t.to_biguint() * q;
            let mut w = &v >> 256u32;
            if up && (&w << 256u32) != v {
                w += BigUint::one();
            }
            w
        };
        let l = scale(lo, true);
        let hi = lo + width;
        let wraps = hi < lo;
        if wraps || l >= *q {
            // 0 lies in the window
            return Some(BigUint::zero());
        }
        let r = scale(hi, false);
        if r < l {
            return None;
        }
        let r = if r >= *q { q - BigUint::one() } else { r };
        modular_window_min(p, q, &l, &r)
    }
}

impl fmt::Display for RationalAngle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RationalAngle::Exact(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            RationalAngle::Liouville { base } => {
                let d = base.denom();
                write!(f, "{}/{}+1/(2^{d}*{d}^{d}+1)", base.numer(), d)
            }
        }
    }
}

fn parse_fraction(s: &str) -> Result<Ratio> {
    let (p, q) = s
        .split_once('/')
        .ok_or_else(|| Error::Parse(format!("expected p/q, got `{s}`")))?;
    let p = BigUint::from_str(p.trim()).map_err(|e| Error::Parse(e.to_string()))?;
    let q = BigUint::from_str(q.trim()).map_err(|e| Error::Parse(e.to_string()))?;
    if q.is_zero() {
        return Err(Error::Parse("zero denominator".into()));
    }
    Ok(Ratio::new(p, q))
}

/// Parses `(2^d*d^d` + `suffix`, returning `d`.
fn parse_liouville_tail(s: &str, suffix: &str) -> Result<BigUint> {
    let inner = s
        .strip_prefix("1/(2^")
        .and_then(|r| r.strip_suffix(suffix))
        .ok_or_else(|| Error::Parse(format!("bad closed form `{s}`")))?;
    let (d1, rest) = inner
        .split_once('*')
        .ok_or_else(|| Error::Parse(format!("bad closed form `{s}`")))?;
    let (d2, d3) = rest
        .split_once('^')
        .ok_or_else(|| Error::Parse(format!("bad closed form `{s}`")))?;
    if d1 != d2 || d2 != d3 {
        return Err(Error::Parse(format!("inconsistent closed form `{s}`")));
    }
    BigUint::from_str(d1).map_err(|e| Error::Parse(e.to_string()))
}

impl FromStr for RationalAngle {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s.split_once("+1/(") {
            None => Ok(RationalAngle::from_ratio(parse_fraction(s)?)),
            Some((base, tail)) => {
                let base = parse_fraction(base)?;
                let d = parse_liouville_tail(&format!("1/({tail}"), "+1)")?;
                if &d != base.denom() {
                    return Err(Error::Parse(format!("closed form does not match base in `{s}`")));
                }
                Ok(RationalAngle::Liouville { base: reduce_unit(base) })
            }
        }
    }
}

/// Upper bound for the next rotation increment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Budget {
    Exact(Ratio),
    /// `1/(2^d d^d)`.
    LiouvilleBound { d: BigUint },
    /// `2^{-e}`, for float-derived terms too small to write out.
    Dyadic { e: BigUint },
}

impl Budget {
    /// 2^{-q} q^{-q}.
    pub fn liouville(q: &BigUint) -> Budget {
        match liouville_denominator(q) {
            Some(x) => Budget::Exact(Ratio::new(BigUint::one(), x)),
            None => Budget::LiouvilleBound { d: q.clone() },
        }
    }

    pub fn log2(&self) -> f64 {
        match self {
            Budget::Exact(r) => log2_ratio(r),
            Budget::LiouvilleBound { d } => -liouville_log2(d),
            Budget::Dyadic { e } => -e.to_f64().unwrap_or(f64::INFINITY),
        }
    }

    /// A power of two at most `2^{-bits}`, exact when small enough to store.
    pub fn dyadic_below(bits: f64) -> Budget {
        let e = libm::ceil(bits.max(0.0));
        if e <= EXPLICIT_BITS {
            Budget::Exact(Ratio::new(BigUint::one(), BigUint::one() << (e as u32)))
        } else {
            Budget::Dyadic { e: BigUint::from(e as u128) }
        }
    }

    pub fn to_f64(&self) -> f64 {
        libm::exp2(self.log2())
    }

    pub fn halve(&self) -> Option<Budget> {
        match self {
            Budget::Exact(r) => Some(Budget::Exact(r / BigUint::from(2u32))),
            Budget::LiouvilleBound { .. } => None,
            Budget::Dyadic { e } => Some(Budget::Dyadic { e: e + BigUint::one() }),
        }
    }

    /// Exact ordering for explicit values; closed forms are ordered by
    /// magnitude, which is decisive since they sit thousands of bits apart.
    pub fn compare(&self, other: &Budget) -> Ordering {
        match (self, other) {
            (Budget::Exact(a), Budget::Exact(b)) => a.cmp(b),
            (Budget::LiouvilleBound { d: a }, Budget::LiouvilleBound { d: b }) => b.cmp(a),
            (Budget::Dyadic { e: a }, Budget::Dyadic { e: b }) => b.cmp(a),
            _ => self.log2().partial_cmp(&other.log2()).unwrap_or(Ordering::Equal),
        }
    }

    pub fn min_of(terms: &[Budget]) -> Option<Budget> {
        terms
            .iter()
            .min_by(|a, b| a.compare(b))
            .cloned()
    }
}

impl fmt::Display for Budget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Budget::Exact(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            Budget::LiouvilleBound { d } => write!(f, "1/(2^{d}*{d}^{d})"),
            Budget::Dyadic { e } => write!(f, "1/2^{e}"),
        }
    }
}

impl FromStr for Budget {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.starts_with("1/(") {
            Ok(Budget::LiouvilleBound { d: parse_liouville_tail(s, ")")? })
        } else if let Some(e) = s.strip_prefix("1/2^") {
            let e = BigUint::from_str(e).map_err(|e| Error::Parse(e.to_string()))?;
            Ok(Budget::Dyadic { e })
        } else {
            Ok(Budget::Exact(parse_fraction(s)?))
        }
    }
}

/// Distance from `p/q` to the nearest other fraction with denominator at most `q`.
pub fn farey_separation(alpha: &Ratio) -> Ratio {
    let q = alpha.denom();
    if q.is_one() {
        return Ratio::from_integer(BigUint::one());
    }
    let b = alpha.numer().modinv(q).expect("reduced fraction");
    let d = q - &b;
    let m = if b > d { b } else { d };
    Ratio::new(BigUint::one(), q * m)
}

/// `alpha + 1/Q` with the smallest admissible `Q`: `1/Q < nu` and the
/// reduced denominator at least `n + 1`.
pub fn choose_next_alpha(alpha: &RationalAngle, nu: &Budget, n: u64) -> Result<RationalAngle> {
    let a = alpha
        .exact()
        .ok_or_else(|| Error::Unrepresentable(format!("cannot extend closed-form angle {alpha}")))?;
    match nu {
        Budget::Exact(v) => {
            if v.is_zero() {
                return Err(Error::Domain("zero budget".into()));
            }
            let mut qq = (v.denom() / v.numer()) + BigUint::one();
            for _ in 0..4096 {
                let cand = reduce_unit(a + Ratio::new(BigUint::one(), qq.clone()));
                if *cand.denom() >= big(n + 1) {
                    return Ok(RationalAngle::Exact(cand));
                }
                qq += BigUint::one();
            }
            Err(Error::SearchExhausted("no admissible denominator".into()))
        }
        Budget::LiouvilleBound { d } => {
            if d != a.denom() {
                return Err(Error::Unrepresentable(format!(
                    "closed-form budget 1/(2^d d^d) with d = {d} does not match the denominator of {alpha}"
                )));
            }
            Ok(RationalAngle::Liouville { base: a.clone() })
        }
        Budget::Dyadic { e } => Err(Error::Unrepresentable(format!(
            "budget 1/2^{e} is below explicit precision and has no closed form"
        ))),
    }
}

/// Increment between consecutive angles.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Gap {
    Exact(Ratio),
    /// `1/(2^d d^d + 1)`.
    Reciprocal { d: BigUint },
}

impl Gap {
    pub fn log2(&self) -> f64 {
        match self {
            Gap::Exact(r) => log2_ratio(r),
            Gap::Reciprocal { d } => -liouville_log2(d),
        }
    }

    pub fn between(prev: &RationalAngle, next: &RationalAngle) -> Result<Gap> {
        match (prev, next) {
            (RationalAngle::Exact(a), RationalAngle::Exact(b)) => {
                let diff = reduce_unit(b + (Ratio::from_integer(BigUint::one()) - a));
                let other = Ratio::from_integer(BigUint::one()) - &diff;
                Ok(Gap::Exact(if diff <= other { diff } else { other }))
            }
            (RationalAngle::Exact(a), RationalAngle::Liouville { base }) if a == base => {
                Ok(Gap::Reciprocal { d: a.denom().clone() })
            }
            _ => Err(Error::Unrepresentable(format!("gap between {prev} and {next}"))),
        }
    }

    /// Strict comparison with 2^{-q} q^{-q}.
    pub fn below_liouville(&self, q: &BigUint) -> bool {
        match (self, liouville_denominator(q)) {
            (Gap::Exact(g), Some(x)) => g * Ratio::from_integer(x) < Ratio::from_integer(BigUint::one()),
            (Gap::Reciprocal { d }, _) if d == q => true,
            _ => self.log2() < -liouville_log2(q) - 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LiouvilleRow {
    pub n: usize,
    pub denominator_log2: f64,
    pub denominator_ok: bool,
    pub gap: Option<String>,
    pub gap_ok: bool,
    pub tail_ok: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LiouvilleReport {
    pub rows: Vec<LiouvilleRow>,
}

impl LiouvilleReport {
    pub fn pass(&self) -> bool {
        self.rows.iter().all(|r| r.denominator_ok && r.gap_ok && r.tail_ok)
    }
}

fn log2_sum(terms: &[f64]) -> f64 {
    let m = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + libm::log2(terms.iter().map(|t| libm::exp2(t - m)).sum::<f64>())
}

/// Checks `q_n >= n`, `0 < |a_{n+1} - a_n| < 2^{-q_n} q_n^{-q_n}` and the tail
/// bound `sum_{m>=n} |a_{m+1} - a_m| <= 2 * 2^{-q_n} q_n^{-q_n}`, where the
/// unseen tail past the last angle is bounded by twice its own Liouville term.
pub fn liouville_certificate(schedule: &[RationalAngle]) -> Result<LiouvilleReport> {
    let mut gaps = Vec::new();
    for w in schedule.windows(2) {
        gaps.push(Gap::between(&w[0], &w[1])?);
    }
    let mut rows = Vec::new();
    let last = schedule.len().saturating_sub(1);
    for (n, a) in schedule.iter().enumerate() {
        let q = a.lattice_denominator().clone();
        let denominator_ok = a.denominator_at_least(n as u64);
        let lq = if matches!(a, RationalAngle::Exact(_)) {
            -liouville_log2(&q)
        } else {
            -(a.denominator_log2() + libm::exp2(a.denominator_log2()))
        };
        let (gap, gap_ok, tail_ok) = if n < last {
            let g = &gaps[n];
            let gap_ok = match a {
                RationalAngle::Exact(_) => g.below_liouville(&q) && g.log2() > f64::NEG_INFINITY,
                RationalAngle::Liouville { .. } => g.log2() < lq - 1.0,
            };
            let mut rest: Vec<f64> = gaps[n + 1..].iter().map(Gap::log2).collect();
            rest.push(1.0 + last_liouville_log2(&schedule[last]));
            let rest = log2_sum(&rest);
            let slack = match (a, g, liouville_denominator(&q)) {
                (RationalAngle::Exact(_), Gap::Exact(gr), Some(x)) => {
                    let two = Ratio::new(BigUint::from(2u32), x);
                    if &two > gr {
                        log2_ratio(&(two - gr))
                    } else {
                        f64::NEG_INFINITY
                    }
                }
                _ => lq,
            };
            let label = match g {
                Gap::Exact(r) => format!("{}/{}", r.numer(), r.denom()),
                Gap::Reciprocal { d } => format!("1/(2^{d}*{d}^{d}+1)"),
            };
            (Some(label), gap_ok, rest < slack - 1e-9)
        } else {
            (None, true, true)
        };
        rows.push(LiouvilleRow {
            n,
            denominator_log2: a.denominator_log2(),
            denominator_ok,
            gap,
            gap_ok,
            tail_ok,
        });
    }
    Ok(LiouvilleReport { rows })
}

fn last_liouville_log2(a: &RationalAngle) -> f64 {
    match a {
        RationalAngle::Exact(r) => -liouville_log2(r.denom()),
        RationalAngle::Liouville { .. } => {
            let l = a.denominator_log2();
            -(libm::exp2(l) * (1.0 + l))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(p: u64, q: u64) -> Ratio {
        Ratio::new(big(p), big(q))
    }

    #[test]
    fn farey_terms() {
        assert_eq!(farey_separation(&r(1, 2)), r(1, 2));
        assert_eq!(farey_separation(&r(0, 1)), r(1, 1));
        // neighbours of 2/5 in F_5 are 1/3 and 1/2
        assert_eq!(farey_separation(&r(2, 5)), r(1, 15));
    }

    #[test]
    fn liouville_terms() {
        assert_eq!(Budget::liouville(&big(2)), Budget::Exact(r(1, 16)));
        assert_eq!(Budget::liouville(&big(4)), Budget::Exact(r(1, 4096)));
        assert!(matches!(Budget::liouville(&big(1000)), Budget::LiouvilleBound { .. }));
    }

    #[test]
    fn next_alpha_example() {
        let a = choose_next_alpha(&RationalAngle::zero(), &Budget::Exact(r(1, 3)), 0).unwrap();
        assert_eq!(a, RationalAngle::new(1, 4).unwrap());
        let b = choose_next_alpha(&a, &Budget::liouville(&big(4)), 1).unwrap();
        assert_eq!(b, RationalAngle::new(4101, 16388).unwrap());
    }

    #[test]
    fn next_alpha_respects_denominator_floor() {
        // 0 + 1/2 has denominator 2 < 3, so Q moves on to 3
        let a = choose_next_alpha(&RationalAngle::zero(), &Budget::Exact(r(2, 3)), 2).unwrap();
        assert_eq!(a, RationalAngle::new(1, 3).unwrap());
    }

    #[test]
    fn certificate_example() {
        let s = [
            RationalAngle::zero(),
            RationalAngle::new(1, 4).unwrap(),
            RationalAngle::new(4101, 16388).unwrap(),
        ];
        assert!(liouville_certificate(&s).unwrap().pass());
        let bad = [
            RationalAngle::zero(),
            RationalAngle::new(1, 4).unwrap(),
            RationalAngle::new(4100, 16384).unwrap(),
        ];
        assert!(!liouville_certificate(&bad).unwrap().pass());
    }

    #[test]
    fn closed_form_certificate() {
        let base = r(4101, 16388);
        let s = [
            RationalAngle::new(1, 4).unwrap(),
            RationalAngle::Exact(base.clone()),
            RationalAngle::Liouville { base },
        ];
        let rep = liouville_certificate(&s).unwrap();
        assert!(rep.pass(), "{rep:?}");
    }

    #[test]
    fn text_round_trip() {
        let a = RationalAngle::Liouville { base: r(4101, 16388) };
        let s = a.to_string();
        assert_eq!(s, "4101/16388+1/(2^16388*16388^16388+1)");
        assert_eq!(s.parse::<RationalAngle>().unwrap(), a);
        let b = Budget::LiouvilleBound { d: big(77) };
        assert_eq!(b.to_string().parse::<Budget>().unwrap(), b);
        assert_eq!("3/12".parse::<RationalAngle>().unwrap(), RationalAngle::new(1, 4).unwrap());
    }

    #[test]
    fn lattice_index() {
        let a = RationalAngle::new(3, 7).unwrap();
        for k in 0u64..7 {
            let t = a.multiple_turns(&big(k));
            assert_eq!(a.index_near(t), big(k));
        }
    }

    #[test]
    fn window_min_matches_brute_force() {
        for m in 1u64..40 {
            for a in 0..m {
                for l in 0..m {
                    for r in l..m {
                        let brute = (0..m).find(|x| (a * x % m) >= l && (a * x % m) <= r);
                        let got = modular_window_min(&big(a), &big(m), &big(l), &big(r));
                        assert_eq!(got, brute.map(big), "a={a} m={m} l={l} r={r}");
                    }
                }
            }
        }
    }

    #[test]
    fn window_search_on_lattice() {
        let a = RationalAngle::new(5, 13).unwrap();
        let lo = Turns::from_f64(0.6);
        let w = Turns::from_f64(0.1);
        let k = a.first_index_in(lo, w).unwrap();
        let brute = (0u64..13)
            .find(|k| {
                let x = (5 * k % 13) as f64 / 13.0;
                (0.6..=0.7).contains(&x)
            })
            .unwrap();
        assert_eq!(k, big(brute));
    }

    #[test]
    fn dyadic_budgets() {
        assert_eq!(Budget::dyadic_below(2.5), Budget::Exact(r(1, 8)));
        let b = Budget::dyadic_below(1e6);
        assert_eq!(b.to_string().parse::<Budget>().unwrap(), b);
        assert_eq!(b.compare(&Budget::LiouvilleBound { d: big(100000) }), Ordering::Greater);
        assert!(choose_next_alpha(&RationalAngle::zero(), &b, 0).is_err());
    }

    #[test]
    fn exact_f64_ratio() {
        assert_eq!(ratio_from_f64(0.375).unwrap(), r(3, 8));
        let x = 1e-12;
        let v = ratio_from_f64(x).unwrap();
        assert_eq!(v.numer().to_f64().unwrap() / v.denom().to_f64().unwrap(), x);
    }
}
