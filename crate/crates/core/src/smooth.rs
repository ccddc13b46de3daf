//! C^∞ cutoffs built from exp(−1/t).

fn psi(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        libm::exp(-1.0 / t)
    }
}

fn dpsi(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        libm::exp(-1.0 / t) / (t * t)
    }
}

fn d2psi(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        libm::exp(-1.0 / t) * (1.0 - 2.0 * t) / (t * t * t * t)
    }
}

/// Smooth step: 0 for t ≤ 0, 1 for t ≥ 1. Returns value, first and second derivative.
pub fn step(t: f64) -> (f64, f64, f64) {
    if t <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    if t >= 1.0 {
        return (1.0, 0.0, 0.0);
    }
    let (a, da, dda) = (psi(t), dpsi(t), d2psi(t));
    let (b, db, ddb) = (psi(1.0 - t), -dpsi(1.0 - t), d2psi(1.0 - t));
    let s = a + b;
    let ds = da + db;
    let dds = dda + ddb;
    let v = a / s;
    let dv = (da * s - a * ds) / (s * s);
    let ddv = (dda * s - a * dds) / (s * s) - 2.0 * ds * (da * s - a * ds) / (s * s * s);
    (v, dv, ddv)
}

/// Even plateau: 1 on |y| ≤ inner, 0 on |y| ≥ outer.
/// Returns value and first two derivatives in y.
pub fn plateau(y: f64, inner: f64, outer: f64) -> (f64, f64, f64) {
    let a = libm::fabs(y);
    if a <= inner {
        return (1.0, 0.0, 0.0);
    }
    if a >= outer {
        return (0.0, 0.0, 0.0);
    }
    let w = outer - inner;
    let (v, dv, ddv) = step((outer - a) / w);
    let sgn = if y >= 0.0 { 1.0 } else { -1.0 };
    (v, -sgn * dv / w, ddv / (w * w))
}

/// One-sided ramp: 0 for y ≤ lo, 1 for y ≥ hi.
pub fn ramp(y: f64, lo: f64, hi: f64) -> (f64, f64, f64) {
    let w = hi - lo;
    let (v, dv, ddv) = step((y - lo) / w);
    (v, dv / w, ddv / (w * w))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plateau_levels() {
        assert_eq!(plateau(0.3, 0.5, 0.8).0, 1.0);
        assert_eq!(plateau(-0.9, 0.5, 0.8).0, 0.0);
        let mid = plateau(0.65, 0.5, 0.8).0;
        assert!((mid - 0.5).abs() < 1e-12);
    }

    #[test]
    fn derivatives_match_differences() {
        for &y in &[0.55, 0.62, 0.71, -0.6, -0.77] {
            let h = 1e-6;
            let (_, d, dd) = plateau(y, 0.5, 0.8);
            let fd = (plateau(y + h, 0.5, 0.8).0 - plateau(y - h, 0.5, 0.8).0) / (2.0 * h);
            let fdd = (plateau(y + h, 0.5, 0.8).1 - plateau(y - h, 0.5, 0.8).1) / (2.0 * h);
            assert!((d - fd).abs() < 1e-6 * (1.0 + d.abs()));
            assert!((dd - fdd).abs() < 1e-5 * (1.0 + dd.abs()));
        }
    }
}
