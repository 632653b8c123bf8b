//! Brute-force reference implementations. Deliberately share no code with
//! the library: explicit inverses, direct-definition sums and full sorts.
#![allow(dead_code, clippy::needless_range_loop)]

/// Direct-definition mean and `1/(n−1)` covariance of row-major data.
pub fn covariance(rows: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = rows.len();
    let d = rows[0].len();
    let mut mu = vec![0.0; d];
    for r in rows {
        for j in 0..d {
            mu[j] += r[j];
        }
    }
    for m in &mut mu {
        *m /= n as f64;
    }
    let mut s = vec![vec![0.0; d]; d];
    for r in rows {
        for i in 0..d {
            for j in 0..d {
                s[i][j] += (r[i] - mu[i]) * (r[j] - mu[j]);
            }
        }
    }
    for row in &mut s {
        for v in row.iter_mut() {
            *v /= (n - 1) as f64;
        }
    }
    (mu, s)
}

/// Gauss-Jordan inverse with partial pivoting.
pub fn invert(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let d = a.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..d).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for col in 0..d {
        let piv = (col..d).max_by(|&x, &y| m[x][col].abs().total_cmp(&m[y][col].abs()))?;
        if m[piv][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, piv);
        let p = m[col][col];
        for v in m[col].iter_mut() {
            *v /= p;
        }
        for r in 0..d {
            if r != col {
                let f = m[r][col];
                if f != 0.0 {
                    for c in 0..2 * d {
                        m[r][c] -= f * m[col][c];
                    }
                }
            }
        }
    }
    Some(m.into_iter().map(|r| r[d..].to_vec()).collect())
}

/// `(x − μ)ᵀ A⁻¹ (x − μ)` with an explicit inverse.
pub fn mahalanobis_sq(inv: &[Vec<f64>], mu: &[f64], x: &[f64]) -> f64 {
    let d = mu.len();
    let z: Vec<f64> = (0..d).map(|i| x[i] - mu[i]).collect();
    let mut s = 0.0;
    for i in 0..d {
        for j in 0..d {
            s += z[i] * inv[i][j] * z[j];
        }
    }
    s
}

/// Scores every row against its own sample moments plus `eps·I`.
pub fn scores(rows: &[Vec<f64>], eps: f64) -> Vec<f64> {
    let (mu, mut s) = covariance(rows);
    for (i, row) in s.iter_mut().enumerate() {
        row[i] += eps;
    }
    let inv = invert(&s).expect("reference covariance not invertible");
    rows.iter().map(|r| mahalanobis_sq(&inv, &mu, r)).collect()
}

/// Reference selection: fully sort, then take in order.
pub fn selection(
    scores: &[f64],
    k_low: usize,
    k_high: usize,
    k_mean: usize,
    disjoint: bool,
) -> (Vec<usize>, Vec<usize>, Vec<usize>) {
    let n = scores.len();
    let mut by_score: Vec<(f64, usize)> = scores.iter().copied().zip(0..n).collect();
    by_score.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    let mut low: Vec<usize> = by_score.iter().take(k_low).map(|p| p.1).collect();

    let mut desc: Vec<(f64, usize)> = scores.iter().copied().zip(0..n).collect();
    desc.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    let mut high = Vec::new();
    for (_, i) in desc {
        if high.len() == k_high {
            break;
        }
        if disjoint && low.contains(&i) {
            continue;
        }
        high.push(i);
    }

    let mean = scores.iter().sum::<f64>() / n as f64;
    let mut near: Vec<(f64, usize)> = (0..n)
        .filter(|i| !disjoint || (!low.contains(i) && !high.contains(i)))
        .map(|i| ((scores[i] - mean).abs(), i))
        .collect();
    near.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    let mut mid: Vec<usize> = near.into_iter().take(k_mean).map(|p| p.1).collect();
    low.sort();
    high.sort();
    mid.sort();
    (low, high, mid)
}

/// Two-pass central-moment statistics: (mean, variance, skewness, excess kurtosis).
pub fn moments(xs: &[f64]) -> (f64, f64, f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let m2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let m3 = xs.iter().map(|x| (x - mean).powi(3)).sum::<f64>() / n;
    let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    let var = m2 * n / (n - 1.0);
    (mean, var, m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-12)
}
