//! Small dense solves used by the geometry code. Matrices are row-major `n × n`.

/// LU with partial pivoting. Returns `None` when a pivot falls below `eps`.
fn lu_decompose(n: usize, a: &mut [f64], perm: &mut [usize], eps: f64) -> Option<f64> {
    let mut sign = 1.0;
    for (i, p) in perm.iter_mut().enumerate() {
        *p = i;
    }
    for col in 0..n {
        let mut pivot = col;
        let mut best = a[col * n + col].abs();
        for row in col + 1..n {
            let v = a[row * n + col].abs();
            if v > best {
                best = v;
                pivot = row;
            }
        }
        if best <= eps {
            return None;
        }
        if pivot != col {
            for k in 0..n {
                a.swap(col * n + k, pivot * n + k);
            }
            perm.swap(col, pivot);
            sign = -sign;
        }
        let d = a[col * n + col];
        for row in col + 1..n {
            let f = a[row * n + col] / d;
            a[row * n + col] = f;
            for k in col + 1..n {
                a[row * n + k] -= f * a[col * n + k];
            }
        }
    }
    Some(sign)
}

pub fn determinant(n: usize, m: &[f64]) -> f64 {
    let mut a = m.to_vec();
    let mut perm = vec![0; n];
    match lu_decompose(n, &mut a, &mut perm, 0.0) {
        Some(sign) => (0..n).fold(sign, |acc, i| acc * a[i * n + i]),
        None => 0.0,
    }
}

/// Solves `m x = b`; `None` if `m` is numerically singular.
pub fn solve(n: usize, m: &[f64], b: &[f64]) -> Option<Vec<f64>> {
    let mut a = m.to_vec();
    let mut perm = vec![0; n];
    let scale = m.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    lu_decompose(n, &mut a, &mut perm, scale * 1e-14)?;
    Some(lu_solve(n, &a, &perm, b))
}

fn lu_solve(n: usize, lu: &[f64], perm: &[usize], b: &[f64]) -> Vec<f64> {
    let mut x: Vec<f64> = perm.iter().map(|&p| b[p]).collect();
    for i in 0..n {
        for k in 0..i {
            x[i] -= lu[i * n + k] * x[k];
        }
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            x[i] -= lu[i * n + k] * x[k];
        }
        x[i] /= lu[i * n + i];
    }
    x
}

pub fn invert(n: usize, m: &[f64]) -> Option<Vec<f64>> {
    let mut a = m.to_vec();
    let mut perm = vec![0; n];
    let scale = m.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    lu_decompose(n, &mut a, &mut perm, scale * 1e-14)?;
    let mut inv = vec![0.0; n * n];
    let mut e = vec![0.0; n];
    for col in 0..n {
        e.iter_mut().for_each(|v| *v = 0.0);
        e[col] = 1.0;
        let x = lu_solve(n, &a, &perm, &e);
        for row in 0..n {
            inv[row * n + col] = x[row];
        }
    }
    Some(inv)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Unsigned volume of the simplex spanned by `dim + 1` points.
pub fn simplex_volume(dim: usize, points: &[&[f64]]) -> f64 {
    debug_assert_eq!(points.len(), dim + 1);
    let mut m = Vec::with_capacity(dim * dim);
    for p in &points[1..] {
        for k in 0..dim {
            m.push(p[k] - points[0][k]);
        }
    }
    determinant(dim, &m).abs() / factorial(dim)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_and_inverts() {
        let m = [4.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 2.0];
        let x = solve(3, &m, &[1.0, 2.0, 3.0]).unwrap();
        let back: Vec<f64> = (0..3).map(|i| dot(&m[i * 3..i * 3 + 3], &x)).collect();
        for (b, e) in back.iter().zip([1.0, 2.0, 3.0]) {
            assert!((b - e).abs() < 1e-12);
        }
        let inv = invert(3, &m).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let v: f64 = (0..3).map(|k| m[i * 3 + k] * inv[k * 3 + j]).sum();
                assert!((v - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
        assert!((determinant(3, &m) - 18.0).abs() < 1e-12);
    }

    #[test]
    fn singular_is_detected() {
        let m = [1.0, 2.0, 2.0, 4.0];
        assert!(solve(2, &m, &[1.0, 1.0]).is_none());
        assert_eq!(determinant(2, &m), 0.0);
    }

    #[test]
    fn unit_simplex_volume() {
        let o = [0.0, 0.0, 0.0];
        let (x, y, z) = ([1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]);
        let v = simplex_volume(3, &[&o, &x, &y, &z]);
        assert!((v - 1.0 / 6.0).abs() < 1e-15);
    }
}
