//! Banded LU with partial pivoting and a bordered-system solver.
//!
//! The Newton matrix of the travelling-wave problem is banded except for one
//! dense column (the wave-speed unknown) and one dense row (the phase
//! condition). Both are eliminated by block elimination against the banded
//! factorization, followed by iterative refinement on the full bordered
//! system; the banded block is nearly singular at the static walls
//! (translation mode), which plain bordering would not tolerate.

/// Square banded matrix with `kl` sub- and `ku` super-diagonals.
///
/// Rows are stored with room for `kl` extra super-diagonals created by
/// pivoting fill-in, so that the same buffer holds the LU factors.
#[derive(Clone, Debug)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        BandMatrix {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.ku + self.kl);
        i * self.width + (j + self.kl - i)
    }

    pub fn in_band(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && j + self.kl >= i && j <= i + self.ku
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if self.in_band(i, j) {
            self.data[self.idx(i, j)]
        } else {
            0.0
        }
    }

    /// Adds `v` to entry `(i, j)`; panics if it lies outside the band.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(
            self.in_band(i, j),
            "entry ({i}, {j}) outside band kl={} ku={}",
            self.kl,
            self.ku
        );
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                (lo..=hi).map(|j| self.data[self.idx(i, j)] * x[j]).sum()
            })
            .collect()
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    /// In-place LU factorization with partial pivoting.
    pub fn factor(mut self) -> Result<BandLu, SingularMatrix> {
        let n = self.n;
        let (kl, ku) = (self.kl, self.ku);
        let mut pivots = vec![0usize; n];
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let last_col = (k + kl + ku).min(n - 1);
            let (mut p, mut best) = (k, self.data[self.idx(k, k)].abs());
            for i in k + 1..=last_row {
                let v = self.data[self.idx(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(SingularMatrix { column: k });
            }
            pivots[k] = p;
            if p != k {
                for j in k..=last_col {
                    let (a, b) = (self.idx(k, j), self.idx(p, j));
                    self.data.swap(a, b);
                }
            }
            let pivot = self.data[self.idx(k, k)];
            for i in k + 1..=last_row {
                let ik = self.idx(i, k);
                let l = self.data[ik] / pivot;
                self.data[ik] = l;
                if l != 0.0 {
                    for j in k + 1..=last_col {
                        let kj = self.data[self.idx(k, j)];
                        let ij = self.idx(i, j);
                        self.data[ij] -= l * kj;
                    }
                }
            }
        }
        Ok(BandLu { lu: self, pivots })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SingularMatrix {
    pub column: usize,
}

impl std::fmt::Display for SingularMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "zero pivot in column {}", self.column)
    }
}

#[derive(Clone, Debug)]
pub struct BandLu {
    lu: BandMatrix,
    pivots: Vec<usize>,
}

impl BandLu {
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let a = &self.lu;
        let n = a.n;
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            if bk != 0.0 {
                for i in k + 1..=(k + a.kl).min(n - 1) {
                    b[i] -= a.data[a.idx(i, k)] * bk;
                }
            }
        }
        for k in (0..n).rev() {
            let mut s = b[k];
            for j in k + 1..=(k + a.kl + a.ku).min(n - 1) {
                s -= a.data[a.idx(k, j)] * b[j];
            }
            b[k] = s / a.data[a.idx(k, k)];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

/// The system `[A c; r^T d] [x; mu] = [f; phi]` with banded `A`.
#[derive(Clone, Debug)]
pub struct BorderedSystem {
    pub band: BandMatrix,
    pub column: Vec<f64>,
    pub row: Vec<f64>,
    pub corner: f64,
}

impl BorderedSystem {
    pub fn dim(&self) -> usize {
        self.band.n() + 1
    }

    pub fn matvec(&self, x: &[f64], mu: f64) -> (Vec<f64>, f64) {
        let mut top = self.band.matvec(x);
        for (t, c) in top.iter_mut().zip(&self.column) {
            *t += c * mu;
        }
        let bottom = dot(&self.row, x) + self.corner * mu;
        (top, bottom)
    }

    pub fn factor(&self) -> Result<BorderedLu<'_>, SingularMatrix> {
        let lu = self.band.clone().factor()?;
        let z = lu.solve(&self.column);
        let schur = self.corner - dot(&self.row, &z);
        if schur == 0.0 || !schur.is_finite() {
            return Err(SingularMatrix {
                column: self.band.n(),
            });
        }
        Ok(BorderedLu {
            system: self,
            lu,
            z,
            schur,
        })
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let n = self.band.n();
        let mut m = nalgebra::DMatrix::zeros(n + 1, n + 1);
        m.view_mut((0, 0), (n, n)).copy_from(&self.band.to_dense());
        for i in 0..n {
            m[(i, n)] = self.column[i];
            m[(n, i)] = self.row[i];
        }
        m[(n, n)] = self.corner;
        m
    }
}

pub struct BorderedLu<'a> {
    system: &'a BorderedSystem,
    lu: BandLu,
    z: Vec<f64>,
    schur: f64,
}

impl BorderedLu<'_> {
    fn eliminate(&self, f: &[f64], phi: f64) -> (Vec<f64>, f64) {
        let mut y = self.lu.solve(f);
        let mu = (phi - dot(&self.system.row, &y)) / self.schur;
        for (yi, zi) in y.iter_mut().zip(&self.z) {
            *yi -= mu * zi;
        }
        (y, mu)
    }

    /// Block elimination followed by `refinements` rounds of iterative
    /// refinement against the unfactored system.
    pub fn solve(&self, f: &[f64], phi: f64, refinements: usize) -> (Vec<f64>, f64) {
        let (mut x, mut mu) = self.eliminate(f, phi);
        for _ in 0..refinements {
            let (ax, am) = self.system.matvec(&x, mu);
            let rf: Vec<f64> = f.iter().zip(&ax).map(|(a, b)| a - b).collect();
            let rphi = phi - am;
            let (dx, dmu) = self.eliminate(&rf, rphi);
            for (xi, d) in x.iter_mut().zip(&dx) {
                *xi += d;
            }
            mu += dmu;
        }
        (x, mu)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_band(n: usize, kl: usize, ku: usize, rng: &mut ChaCha8Rng) -> BandMatrix {
        let mut a = BandMatrix::zeros(n, kl, ku);
        for i in 0..n {
            for j in i.saturating_sub(kl)..=(i + ku).min(n - 1) {
                a.add(i, j, rng.gen_range(-1.0..1.0));
            }
        }
        a
    }

    #[test]
    fn band_lu_matches_dense_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &(n, kl, ku) in &[(1, 0, 0), (5, 1, 1), (40, 3, 3), (57, 7, 7), (30, 2, 5)] {
            let a = random_band(n, kl, ku, &mut rng);
            let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let dense = a.to_dense();
            let expected = dense.clone().lu().solve(&DVector::from_vec(b.clone())).unwrap();
            let x = a.factor().unwrap().solve(&b);
            for i in 0..n {
                assert!((x[i] - expected[i]).abs() < 1e-9 * (1.0 + expected[i].abs()));
            }
        }
    }

    #[test]
    fn pivoting_handles_zero_diagonal() {
        // [[0, 1], [1, 0]] needs a row swap
        let mut a = BandMatrix::zeros(2, 1, 1);
        a.add(0, 1, 1.0);
        a.add(1, 0, 1.0);
        let x = a.factor().unwrap().solve(&[2.0, 3.0]);
        assert_eq!(x, vec![3.0, 2.0]);
    }

    #[test]
    fn singular_band_is_reported() {
        let a = BandMatrix::zeros(3, 1, 1);
        assert_eq!(a.factor().unwrap_err().column, 0);
    }

    #[test]
    fn bordered_solve_with_nearly_singular_block() {
        // A = tridiag(-1, 2, -1) minus its smallest eigenvalue: singular up to
        // rounding, bordered by its null vector (the translation-mode layout).
        let n = 60;
        let mut band = BandMatrix::zeros(n, 1, 1);
        let lambda0 = 2.0 - 2.0 * (std::f64::consts::PI / (n + 1) as f64).cos();
        let null: Vec<f64> = (0..n)
            .map(|i| (std::f64::consts::PI * (i + 1) as f64 / (n + 1) as f64).sin())
            .collect();
        for i in 0..n {
            band.add(i, i, 2.0 - lambda0 * (1.0 + 1e-9));
            if i > 0 {
                band.add(i, i - 1, -1.0);
                band.add(i - 1, i, -1.0);
            }
        }
        let sys = BorderedSystem {
            band,
            column: null.clone(),
            row: null.clone(),
            corner: 0.0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let phi = 0.3;
        let dense: DMatrix<f64> = sys.to_dense();
        let mut rhs = f.clone();
        rhs.push(phi);
        let expected = dense.lu().solve(&DVector::from_vec(rhs)).unwrap();
        let lu = sys.factor().unwrap();
        let (x, mu) = lu.solve(&f, phi, 2);
        assert!((mu - expected[n]).abs() < 1e-9);
        for i in 0..n {
            assert!((x[i] - expected[i]).abs() < 1e-8, "{i}");
        }
    }
}
