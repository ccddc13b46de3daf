//! Fixed-size real matrices used by the Jacobian and structure code.

pub type Mat2 = [[f64; 2]; 2];
pub type Mat4 = [[f64; 4]; 4];

pub const I2: Mat2 = [[1.0, 0.0], [0.0, 1.0]];

pub fn mul2(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

pub fn det2(a: &Mat2) -> f64 {
    a[0][0] * a[1][1] - a[0][1] * a[1][0]
}

pub fn inv2(a: &Mat2) -> Option<Mat2> {
    let d = det2(a);
    if d == 0.0 || !d.is_finite() {
        return None;
    }
    Some([[a[1][1] / d, -a[0][1] / d], [-a[1][0] / d, a[0][0] / d]])
}

/// Operator norm for the cylinder metric max(|dθ|, ½|dy|).
pub fn metric_norm2(a: &Mat2) -> f64 {
    let r0 = libm::fabs(a[0][0]) + 2.0 * libm::fabs(a[0][1]);
    let r1 = 0.5 * libm::fabs(a[1][0]) + libm::fabs(a[1][1]);
    r0.max(r1)
}

pub const I4: Mat4 = [
    [1.0, 0.0, 0.0, 0.0],
    [0.0, 1.0, 0.0, 0.0],
    [0.0, 0.0, 1.0, 0.0],
    [0.0, 0.0, 0.0, 1.0],
];

pub fn mul4(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut c = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            let mut s = 0.0;
            for k in 0..4 {
                s += a[i][k] * b[k][j];
            }
            c[i][j] = s;
        }
    }
    c
}

pub fn sub4(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut c = *a;
    for i in 0..4 {
        for j in 0..4 {
            c[i][j] -= b[i][j];
        }
    }
    c
}

pub fn transpose4(a: &Mat4) -> Mat4 {
    let mut t = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            t[i][j] = a[j][i];
        }
    }
    t
}

pub fn apply4(a: &Mat4, v: &[f64; 4]) -> [f64; 4] {
    let mut out = [0.0; 4];
    for i in 0..4 {
        out[i] = a[i][0] * v[0] + a[i][1] * v[1] + a[i][2] * v[2] + a[i][3] * v[3];
    }
    out
}

/// Gauss–Jordan inverse with partial pivoting.
pub fn inv4(a: &Mat4) -> Option<Mat4> {
    let mut m = *a;
    let mut inv = I4;
    for col in 0..4 {
        let mut piv = col;
        for r in col + 1..4 {
            if libm::fabs(m[r][col]) > libm::fabs(m[piv][col]) {
                piv = r;
            }
        }
        if m[piv][col] == 0.0 || !m[piv][col].is_finite() {
            return None;
        }
        m.swap(col, piv);
        inv.swap(col, piv);
        let p = m[col][col];
        for j in 0..4 {
            m[col][j] /= p;
            inv[col][j] /= p;
        }
        for r in 0..4 {
            if r != col {
                let f = m[r][col];
                if f != 0.0 {
                    for j in 0..4 {
                        m[r][j] -= f * m[col][j];
                        inv[r][j] -= f * inv[col][j];
                    }
                }
            }
        }
    }
    Some(inv)
}

/// Eigenvalues of a symmetric 4×4 matrix by cyclic Jacobi rotations.
pub fn sym_eigenvalues4(a: &Mat4) -> [f64; 4] {
    let mut m = *a;
    for _ in 0..64 {
        let mut off = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    off += m[i][j] * m[i][j];
                }
            }
        }
        if off < 1e-300 {
            break;
        }
        for p in 0..3 {
            for q in p + 1..4 {
                if m[p][q] == 0.0 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (libm::fabs(theta) + libm::sqrt(theta * theta + 1.0));
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / libm::sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..4 {
                    let mkp = m[k][p];
                    let mkq = m[k][q];
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..4 {
                    let mpk = m[p][k];
                    let mqk = m[q][k];
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
            }
        }
    }
    [m[0][0], m[1][1], m[2][2], m[3][3]]
}

/// Largest and smallest singular values.
pub fn singular_extremes4(a: &Mat4) -> (f64, f64) {
    let ata = mul4(&transpose4(a), a);
    let ev = sym_eigenvalues4(&ata);
    let mx = ev.iter().cloned().fold(f64::MIN, f64::max).max(0.0);
    let mn = ev.iter().cloned().fold(f64::MAX, f64::min).max(0.0);
    (libm::sqrt(mx), libm::sqrt(mn))
}

pub fn norm2_4(a: &Mat4) -> f64 {
    singular_extremes4(a).0
}

pub fn cond4(a: &Mat4) -> f64 {
    let (mx, mn) = singular_extremes4(a);
    if mn == 0.0 {
        f64::INFINITY
    } else {
        mx / mn
    }
}

pub fn det4(a: &Mat4) -> f64 {
    let mut m = *a;
    let mut det = 1.0;
    for col in 0..4 {
        let mut piv = col;
        for r in col + 1..4 {
            if libm::fabs(m[r][col]) > libm::fabs(m[piv][col]) {
                piv = r;
            }
        }
        if m[piv][col] == 0.0 {
            return 0.0;
        }
        if piv != col {
            m.swap(col, piv);
            det = -det;
        }
        det *= m[col][col];
        for r in col + 1..4 {
            let f = m[r][col] / m[col][col];
            for j in col..4 {
                m[r][j] -= f * m[col][j];
            }
        }
    }
    det
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_and_norms() {
        let a: Mat4 = [
            [2.0, 1.0, 0.0, 0.0],
            [0.0, 3.0, 0.0, 1.0],
            [1.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 2.0, 5.0],
        ];
        let p = mul4(&a, &inv4(&a).unwrap());
        for i in 0..4 {
            for j in 0..4 {
                assert!((p[i][j] - I4[i][j]).abs() < 1e-14);
            }
        }
        let d: Mat4 = [
            [3.0, 0.0, 0.0, 0.0],
            [0.0, -7.0, 0.0, 0.0],
            [0.0, 0.0, 0.5, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ];
        assert!((norm2_4(&d) - 7.0).abs() < 1e-13);
        assert!((cond4(&d) - 14.0).abs() < 1e-12);
        assert!((det4(&d) + 10.5).abs() < 1e-13);
    }

    #[test]
    fn metric_norm_of_shear() {
        assert_eq!(metric_norm2(&[[1.0, 1.0], [0.0, 1.0]]), 3.0);
    }
}
