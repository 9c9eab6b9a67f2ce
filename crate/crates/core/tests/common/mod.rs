//! Reference implementations used as test oracles. They work on plain
//! `Vec`s and share no code with the sampler.
#![allow(dead_code, clippy::needless_range_loop)]

pub type Mat = Vec<Vec<f64>>;

pub fn inverse(a: &Mat) -> Mat {
    let n = a.len();
    let mut m: Mat = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&x, &y| m[x][col].abs().total_cmp(&m[y][col].abs()))
            .unwrap();
        m.swap(col, piv);
        let p = m[col][col];
        for v in m[col].iter_mut() {
            *v /= p;
        }
        for r in 0..n {
            if r != col {
                let f = m[r][col];
                if f != 0.0 {
                    for c in 0..2 * n {
                        m[r][c] -= f * m[col][c];
                    }
                }
            }
        }
    }
    m.into_iter().map(|r| r[n..].to_vec()).collect()
}

pub fn mat_vec(a: &Mat, v: &[f64]) -> Vec<f64> {
    a.iter()
        .map(|r| r.iter().zip(v).map(|(x, y)| x * y).sum())
        .collect()
}

/// BPMF conditional of one row latent given column latents `others`
/// (column vectors) and its observed `(column, value)` pairs.
pub fn bpmf_latent_conditional(
    lambda: &Mat,
    mu: &[f64],
    alpha: f64,
    others: &[Vec<f64>],
    ratings: &[(usize, f64)],
) -> (Mat, Vec<f64>) {
    let d = mu.len();
    let mut prec = lambda.clone();
    let mut rhs = mat_vec(lambda, mu);
    for &(j, r) in ratings {
        let v = &others[j];
        for a in 0..d {
            for b in 0..d {
                prec[a][b] += alpha * v[a] * v[b];
            }
            rhs[a] += alpha * r * v[a];
        }
    }
    let mean = mat_vec(&inverse(&prec), &rhs);
    (prec, mean)
}

/// Normal-Wishart conditional in the centred textbook form. Returns
/// `(μ*, β*, W*⁻¹, ν*)`.
pub fn bpmf_prior_posterior(
    mu0: &[f64],
    beta0: f64,
    w0: &Mat,
    nu0: f64,
    latents: &[Vec<f64>],
) -> (Vec<f64>, f64, Mat, f64) {
    let d = mu0.len();
    let n = latents.len() as f64;
    let mut ubar = vec![0.0; d];
    for u in latents {
        for a in 0..d {
            ubar[a] += u[a] / n;
        }
    }
    let w0_inv = inverse(w0);
    let mut scale_inv = w0_inv.clone();
    for a in 0..d {
        for b in 0..d {
            let mut c = 0.0;
            for u in latents {
                c += (u[a] - ubar[a]) * (u[b] - ubar[b]);
            }
            scale_inv[a][b] +=
                c + beta0 * n / (beta0 + n) * (ubar[a] - mu0[a]) * (ubar[b] - mu0[b]);
        }
    }
    let mu_star = (0..d)
        .map(|a| (beta0 * mu0[a] + n * ubar[a]) / (beta0 + n))
        .collect();
    (mu_star, beta0 + n, scale_inv, nu0 + n)
}

pub fn max_rel_err(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    a.iter()
        .zip(b)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
        / scale
}

pub fn flatten(m: &Mat) -> Vec<f64> {
    m.iter().flatten().copied().collect()
}

/// Δ-grid conditional of a scalar latent: normalized `exp(log_joint)` on `grid`.
pub fn grid_density(grid: &[f64], log_joint: impl Fn(f64) -> f64) -> Vec<f64> {
    let logs: Vec<f64> = grid.iter().map(|&x| log_joint(x)).collect();
    let top = logs.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    let unnorm: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
    let h = grid[1] - grid[0];
    // trapezoid rule
    let z: f64 = h * (unnorm.iter().sum::<f64>() - 0.5 * (unnorm[0] + unnorm[unnorm.len() - 1]));
    unnorm.into_iter().map(|v| v / z).collect()
}
