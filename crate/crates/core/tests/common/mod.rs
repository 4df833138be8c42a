//! Brute-force oracles shared by the integration tests. Nothing here calls
//! into the library's numerical routines.

#![allow(dead_code)]

use dppdesign::KernelMatrix;

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Determinant by Laplace expansion along the first row.
pub fn det_cofactor(m: &[Vec<f64>]) -> f64 {
    let n = m.len();
    match n {
        0 => 1.0,
        1 => m[0][0],
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        _ => (0..n)
            .map(|c| {
                let minor: Vec<Vec<f64>> = m[1..]
                    .iter()
                    .map(|row| {
                        row.iter()
                            .enumerate()
                            .filter(|&(j, _)| j != c)
                            .map(|(_, &v)| v)
                            .collect()
                    })
                    .collect();
                let sign = if c % 2 == 0 { 1.0 } else { -1.0 };
                sign * m[0][c] * det_cofactor(&minor)
            })
            .sum(),
    }
}

pub fn principal(k: &KernelMatrix, rows: &[usize]) -> Vec<Vec<f64>> {
    rows.iter()
        .map(|&i| rows.iter().map(|&j| k.get(i, j)).collect())
        .collect()
}

/// Elementary symmetric polynomial `e_j` by summing over all `j`-subsets.
pub fn esp_enumerate(lambdas: &[f64], j: usize) -> f64 {
    if j > lambdas.len() {
        return 0.0;
    }
    subsets(lambdas.len(), j)
        .iter()
        .map(|s| s.iter().map(|&i| lambdas[i]).product::<f64>())
        .sum()
}

/// `e_0..=e_N` from power sums via the alternating Newton identities.
pub fn esp_newton(lambdas: &[f64]) -> Vec<f64> {
    let n = lambdas.len();
    let p: Vec<f64> = (0..=n)
        .map(|i| lambdas.iter().map(|l| l.powi(i as i32)).sum())
        .collect();
    let mut e = vec![0.0; n + 1];
    e[0] = 1.0;
    for k in 1..=n {
        let mut acc = 0.0;
        for i in 1..=k {
            let sign = if i % 2 == 1 { 1.0 } else { -1.0 };
            acc += sign * e[k - i] * p[i];
        }
        e[k] = acc / k as f64;
    }
    e
}

/// Best `ln det` over all `n`-subsets of the rows of `k`, with its subset.
pub fn best_subset(k: &KernelMatrix, n: usize) -> (f64, Vec<usize>) {
    let mut best = (f64::NEG_INFINITY, Vec::new());
    for s in subsets(k.size(), n) {
        let d = det_cofactor(&principal(k, &s));
        let ld = if d > 0.0 { d.ln() } else { f64::NEG_INFINITY };
        if ld > best.0 {
            best = (ld, s);
        }
    }
    best
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
pub fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n)
            .max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))
            .unwrap();
        a.swap(c, p);
        b.swap(c, p);
        for r in (c + 1)..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for c in (0..n).rev() {
        let s: f64 = ((c + 1)..n).map(|k| a[c][k] * x[k]).sum();
        x[c] = (b[c] - s) / a[c][c];
    }
    x
}

/// One-shot Schur complement `K_AA - K_AB K_BB^{-1} K_BA` for the rows not in `cond`.
pub fn schur_oracle(k: &[Vec<f64>], cond: &[usize]) -> Vec<Vec<f64>> {
    let n = k.len();
    let rest: Vec<usize> = (0..n).filter(|i| !cond.contains(i)).collect();
    let kbb: Vec<Vec<f64>> = cond
        .iter()
        .map(|&i| cond.iter().map(|&j| k[i][j]).collect())
        .collect();
    // Columns of K_BB^{-1} K_BA, one per remaining row.
    let z: Vec<Vec<f64>> = rest
        .iter()
        .map(|&a| solve(kbb.clone(), cond.iter().map(|&b| k[b][a]).collect()))
        .collect();
    rest.iter()
        .enumerate()
        .map(|(ia, &a)| {
            rest.iter()
                .map(|&c| {
                    let corr: f64 = cond.iter().zip(&z[ia]).map(|(&b, zb)| k[c][b] * zb).sum();
                    k[a][c] - corr
                })
                .collect()
        })
        .collect()
}

pub fn to_rows(k: &KernelMatrix) -> Vec<Vec<f64>> {
    (0..k.size())
        .map(|i| (0..k.size()).map(|j| k.get(i, j)).collect())
        .collect()
}
