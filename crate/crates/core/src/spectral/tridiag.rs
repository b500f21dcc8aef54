//! Symmetric tridiagonal eigenproblems: Sturm-sequence bisection for the
//! eigenvalues, inverse iteration for the vectors.

use crate::banded::BandMatrix;

/// Number of eigenvalues strictly below `x`.
pub fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut d = 1.0;
    for i in 0..diag.len() {
        let e2 = if i == 0 { 0.0 } else { off[i - 1] * off[i - 1] };
        d = diag[i] - x - if i == 0 { 0.0 } else { e2 / d };
        if d == 0.0 {
            d = -f64::EPSILON * (diag[i].abs() + x.abs() + 1.0);
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

fn gershgorin(diag: &[f64], off: &[f64]) -> (f64, f64) {
    let n = diag.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = if i > 0 { off[i - 1].abs() } else { 0.0 }
            + if i + 1 < n { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    (lo, hi)
}

/// The `k`-th smallest eigenvalue (0-based) by bisection.
pub fn eigenvalue(diag: &[f64], off: &[f64], k: usize) -> f64 {
    let (mut lo, mut hi) = gershgorin(diag, off);
    let scale = lo.abs().max(hi.abs()).max(1.0);
    while hi - lo > 4.0 * f64::EPSILON * scale {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(diag, off, mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Normalised eigenvector for an eigenvalue estimate, orthogonalised against
/// `previous` (vectors of nearby eigenvalues).
pub fn eigenvector(diag: &[f64], off: &[f64], lambda: f64, previous: &[&[f64]]) -> Vec<f64> {
    let n = diag.len();
    let scale = diag.iter().map(|d| d.abs()).fold(1.0, f64::max);
    let shift = lambda + 1e-12 * scale;
    let mut a = BandMatrix::zeros(n, 1, 1);
    for i in 0..n {
        a.add(i, i, diag[i] - shift);
        if i + 1 < n {
            a.add(i, i + 1, off[i]);
            a.add(i + 1, i, off[i]);
        }
    }
    let lu = match a.factor() {
        Ok(lu) => lu,
        Err(_) => {
            // exact eigenvalue hit: perturb the shift
            let mut b = BandMatrix::zeros(n, 1, 1);
            for i in 0..n {
                b.add(i, i, diag[i] - shift - 1e-10 * scale);
                if i + 1 < n {
                    b.add(i, i + 1, off[i]);
                    b.add(i + 1, i, off[i]);
                }
            }
            b.factor().expect("perturbed shift is not an eigenvalue")
        }
    };
    // deterministic start with no special symmetry
    let mut v: Vec<f64> = (0..n)
        .map(|i| 1.0 + 0.1 * ((i as f64) * 0.618_033_988_749_895).fract())
        .collect();
    for _ in 0..4 {
        for p in previous {
            let c: f64 = v.iter().zip(p.iter()).map(|(x, y)| x * y).sum();
            for (x, y) in v.iter_mut().zip(p.iter()) {
                *x -= c * y;
            }
        }
        normalise(&mut v);
        lu.solve_in_place(&mut v);
        normalise(&mut v);
    }
    for p in previous {
        let c: f64 = v.iter().zip(p.iter()).map(|(x, y)| x * y).sum();
        for (x, y) in v.iter_mut().zip(p.iter()) {
            *x -= c * y;
        }
    }
    normalise(&mut v);
    let big = v
        .iter()
        .copied()
        .max_by(|a, b| a.abs().total_cmp(&b.abs()))
        .unwrap_or(1.0);
    if big < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    v
}

fn normalise(v: &mut [f64]) {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
}

/// The `k` smallest eigenpairs in ascending order.
pub fn lowest_eigenpairs(diag: &[f64], off: &[f64], k: usize) -> Vec<(f64, Vec<f64>)> {
    let k = k.min(diag.len());
    let scale = diag.iter().map(|d| d.abs()).fold(1.0, f64::max);
    let mut out: Vec<(f64, Vec<f64>)> = Vec::with_capacity(k);
    for j in 0..k {
        let lambda = eigenvalue(diag, off, j);
        let near: Vec<&[f64]> = out
            .iter()
            .filter(|(l, _)| (l - lambda).abs() < 1e-6 * scale)
            .map(|(_, v)| v.as_slice())
            .collect();
        let v = eigenvector(diag, off, lambda, &near);
        out.push((lambda, v));
    }
    out
}
