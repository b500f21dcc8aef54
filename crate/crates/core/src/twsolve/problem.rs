//! Discrete travelling-wave residual and its Jacobian.
//!
//! With `a = psi_ref + u`, `b = beta_ref + w`:
//!
//! ```text
//! G1 = sin a b'' + 2 cos a a' b' + V a' + alpha V sin a b' - F1(a, b)
//! G2 = a'' - 1/2 sin 2a b'^2 + alpha V a' - V sin a b' - F2(a, b)
//! g  = <b - beta*, beta*'>
//! ```
//!
//! Unknowns are the corrections at interior nodes, interleaved as
//! `(u_1, w_1, u_2, w_2, ...)`, followed by `V`. Rows are ordered
//! `(G2_1, G1_1, G2_2, G1_2, ...)` so the leading derivative of each equation
//! sits on the diagonal.

use crate::banded::{BandMatrix, BorderedSystem};
use crate::energetics::{torque_jacobian, torques};
use crate::error::{Error, Result};
use crate::model::{check_psi_range, PolarProfile};
use crate::stencil::{derivatives, StencilOrder};

use super::reference::ReferenceProfile;

/// Corrections `u`, `w` at every grid node; both vanish at the two ends.
#[derive(Clone, Debug, PartialEq)]
pub struct Correction {
    pub u: Vec<f64>,
    pub w: Vec<f64>,
}

impl Correction {
    pub fn zeros(n: usize) -> Self {
        Correction {
            u: vec![0.0; n],
            w: vec![0.0; n],
        }
    }

    fn check(&self, n: usize) -> Result<()> {
        if self.u.len() != n || self.w.len() != n {
            return Err(Error::InvalidProfile(format!(
                "correction has {}/{} samples, grid has {n} nodes",
                self.u.len(),
                self.w.len()
            )));
        }
        let ends = [self.u[0], self.u[n - 1], self.w[0], self.w[n - 1]];
        if ends.iter().any(|v| *v != 0.0) {
            return Err(Error::InvalidProfile(
                "corrections must vanish at both grid ends".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct Residual {
    pub g1: Vec<f64>,
    pub g2: Vec<f64>,
    pub g: f64,
}

impl Residual {
    /// `sqrt(h sum(G1^2 + G2^2) + g^2)`.
    pub fn norm(&self, h: f64) -> f64 {
        let s: f64 = self
            .g1
            .iter()
            .zip(&self.g2)
            .map(|(a, b)| a * a + b * b)
            .sum();
        (h * s + self.g * self.g).sqrt()
    }
}

/// Pointwise partial derivatives of `(G1, G2)` with respect to
/// `a, a', a'', b, b', b''` and `V`.
struct Partials {
    g1: [f64; 6],
    g2: [f64; 6],
    g1_v: f64,
    g2_v: f64,
}

pub(crate) struct Problem<'a> {
    pub reference: &'a ReferenceProfile,
    pub order: StencilOrder,
    pub alpha: f64,
    h: f64,
    n: usize,
    r: usize,
    /// Trapezoid weights times `beta*'` at the nodes.
    phase_row: Vec<f64>,
    /// `<beta_ref - beta*, beta*'>`, the phase functional at zero correction.
    phase_offset: f64,
}

impl<'a> Problem<'a> {
    pub fn new(reference: &'a ReferenceProfile, order: StencilOrder) -> Result<Self> {
        let r = order.radius();
        if reference.ghosts() < r {
            return Err(Error::InvalidProfile(format!(
                "reference carries {} ghost nodes, stencil needs {r}",
                reference.ghosts()
            )));
        }
        let grid = reference.grid;
        let n = grid.n_nodes();
        let h = grid.spacing();
        let g = reference.ghosts();
        let db = reference.base.dbeta_nodes();
        let phase_row: Vec<f64> = (0..n)
            .map(|i| {
                let wt = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
                h * wt * db[i]
            })
            .collect();
        let phase_offset = (0..n)
            .map(|i| phase_row[i] * (reference.beta[i + g] - reference.base.beta[i + g]))
            .sum();
        Ok(Problem {
            reference,
            order,
            alpha: reference.params.alpha,
            h,
            n,
            r,
            phase_row,
            phase_offset,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.n
    }

    pub fn n_unknowns(&self) -> usize {
        2 * (self.n - 2) + 1
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    /// Stencil-ready arrays `a`, `b` (`r` ghosts each side) for interior
    /// corrections packed as in the Newton vector.
    pub fn profiles(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let g = self.reference.ghosts();
        let off = g - self.r;
        let len = self.n + 2 * self.r;
        let mut a = self.reference.psi[off..off + len].to_vec();
        let mut b = self.reference.beta[off..off + len].to_vec();
        for i in 1..self.n - 1 {
            a[i + self.r] += x[2 * (i - 1)];
            b[i + self.r] += x[2 * (i - 1) + 1];
        }
        (a, b)
    }

    pub fn pack(&self, c: &Correction, v: f64) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.n_unknowns());
        for i in 1..self.n - 1 {
            x.push(c.u[i]);
            x.push(c.w[i]);
        }
        x.push(v);
        x
    }

    /// The solution profile on the grid for a Newton vector.
    pub fn solution_profile(&self, x: &[f64]) -> PolarProfile {
        let (a, b) = self.profiles(x);
        let r = self.r..self.r + self.n;
        PolarProfile {
            psi: a[r.clone()].to_vec(),
            beta: b[r].to_vec(),
            minus: self.reference.minus,
            plus: self.reference.plus,
        }
    }

    fn node_derivatives(&self, a: &[f64], b: &[f64], i: usize) -> [f64; 6] {
        let (a1, a2) = derivatives(self.order, a, i, self.h);
        let (b1, b2) = derivatives(self.order, b, i, self.h);
        [a[i + self.r], a1, a2, b[i + self.r], b1, b2]
    }

    fn pointwise(&self, d: &[f64; 6], v: f64) -> (f64, f64) {
        let [a, a1, a2, b, b1, b2] = *d;
        let alpha = self.alpha;
        let (sa, ca) = a.sin_cos();
        let (f1, f2) = torques(a, b, &self.reference.params);
        let g1 = sa * b2 + 2.0 * ca * a1 * b1 + v * a1 + alpha * v * sa * b1 - f1;
        let g2 = a2 - sa * ca * b1 * b1 + alpha * v * a1 - v * sa * b1 - f2;
        (g1, g2)
    }

    fn partials(&self, d: &[f64; 6], v: f64) -> Partials {
        let [a, a1, _a2, b, b1, b2] = *d;
        let alpha = self.alpha;
        let (sa, ca) = a.sin_cos();
        let tj = torque_jacobian(a, b, &self.reference.params);
        let g1 = [
            ca * b2 - 2.0 * sa * a1 * b1 + alpha * v * ca * b1 - tj[0][0],
            2.0 * ca * b1 + v,
            0.0,
            -tj[0][1],
            2.0 * ca * a1 + alpha * v * sa,
            sa,
        ];
        let g2 = [
            -(2.0 * a).cos() * b1 * b1 - v * ca * b1 - tj[1][0],
            alpha * v,
            1.0,
            -tj[1][1],
            -(2.0 * a).sin() * b1 - v * sa,
            0.0,
        ];
        Partials {
            g1,
            g2,
            g1_v: a1 + alpha * sa * b1,
            g2_v: alpha * a1 - sa * b1,
        }
    }

    /// Residual for a Newton vector; end-node entries are the (satisfied)
    /// Dirichlet conditions and read zero.
    pub fn residual(&self, x: &[f64]) -> Result<Residual> {
        let (a, b) = self.profiles(x);
        check_psi_range(&a[self.r..self.r + self.n])?;
        let v = x[self.n_unknowns() - 1];
        let mut g1 = vec![0.0; self.n];
        let mut g2 = vec![0.0; self.n];
        for i in 1..self.n - 1 {
            let d = self.node_derivatives(&a, &b, i);
            let (r1, r2) = self.pointwise(&d, v);
            g1[i] = r1;
            g2[i] = r2;
        }
        let g = self.phase_offset
            + (1..self.n - 1)
                .map(|i| self.phase_row[i] * x[2 * (i - 1) + 1])
                .sum::<f64>();
        Ok(Residual { g1, g2, g })
    }

    /// Residual packed in row order `(G2_i, G1_i)...,g`.
    pub fn residual_vector(&self, res: &Residual) -> Vec<f64> {
        let mut f = Vec::with_capacity(self.n_unknowns());
        for i in 1..self.n - 1 {
            f.push(res.g2[i]);
            f.push(res.g1[i]);
        }
        f.push(res.g);
        f
    }

    pub fn jacobian(&self, x: &[f64]) -> BorderedSystem {
        let m = 2 * (self.n - 2);
        let bw = 2 * self.r + 1;
        let (a, b) = self.profiles(x);
        let v = x[m];
        let c1 = self.order.first();
        let c2 = self.order.second();
        let (ih, ih2) = (1.0 / self.h, 1.0 / (self.h * self.h));
        let mut band = BandMatrix::zeros(m, bw, bw);
        let mut column = vec![0.0; m];
        for i in 1..self.n - 1 {
            let d = self.node_derivatives(&a, &b, i);
            let p = self.partials(&d, v);
            let (row2, row1) = (2 * (i - 1), 2 * (i - 1) + 1);
            column[row2] = p.g2_v;
            column[row1] = p.g1_v;
            for (k, (&s1, &s2)) in c1.iter().zip(c2).enumerate() {
                let j = (i + k) as isize - self.r as isize;
                if j < 1 || j as usize > self.n - 2 {
                    continue;
                }
                let j = j as usize;
                let diag = if j == i { 1.0 } else { 0.0 };
                let (cu, cw) = (2 * (j - 1), 2 * (j - 1) + 1);
                for (row, q) in [(row1, &p.g1), (row2, &p.g2)] {
                    let du = diag * q[0] + q[1] * s1 * ih + q[2] * s2 * ih2;
                    let dw = diag * q[3] + q[4] * s1 * ih + q[5] * s2 * ih2;
                    if du != 0.0 {
                        band.add(row, cu, du);
                    }
                    if dw != 0.0 {
                        band.add(row, cw, dw);
                    }
                }
            }
        }
        let mut row = vec![0.0; m];
        for i in 1..self.n - 1 {
            row[2 * (i - 1) + 1] = self.phase_row[i];
        }
        BorderedSystem {
            band,
            column,
            row,
            corner: 0.0,
        }
    }

    /// Jacobian by central differences of the residual, entries outside the
    /// band dropped.
    pub fn fd_jacobian(&self, x: &[f64], step: f64) -> Result<BorderedSystem> {
        let m = 2 * (self.n - 2);
        let bw = 2 * self.r + 1;
        let mut band = BandMatrix::zeros(m, bw, bw);
        let mut column = vec![0.0; m];
        let mut row = vec![0.0; m];
        let mut corner = 0.0;
        let mut xp = x.to_vec();
        for j in 0..=m {
            let e = step * (1.0 + x[j].abs());
            xp[j] = x[j] + e;
            let fp = self.residual_vector(&self.residual(&xp)?);
            xp[j] = x[j] - e;
            let fm = self.residual_vector(&self.residual(&xp)?);
            xp[j] = x[j];
            for i in 0..=m {
                let d = (fp[i] - fm[i]) / (2.0 * e);
                match (i == m, j == m) {
                    (false, false) => {
                        if band.in_band(i, j) {
                            band.add(i, j, d);
                        }
                    }
                    (false, true) => column[i] = d,
                    (true, false) => row[j] = d,
                    (true, true) => corner = d,
                }
            }
        }
        Ok(BorderedSystem {
            band,
            column,
            row,
            corner,
        })
    }

    /// `integral |m'|^2` with the solver's stencil and the trapezoid rule.
    pub fn exchange_integral(&self, x: &[f64]) -> f64 {
        let (a, b) = self.profiles(x);
        let dens: Vec<f64> = (0..self.n)
            .map(|i| {
                let (a1, _) = derivatives(self.order, &a, i, self.h);
                let (b1, _) = derivatives(self.order, &b, i, self.h);
                let s = a[i + self.r].sin();
                a1 * a1 + s * s * b1 * b1
            })
            .collect();
        self.reference.grid.trapezoid(&dens)
    }
}

/// Residual of the travelling-wave system at the given corrections and speed.
pub fn residual(
    correction: &Correction,
    velocity: f64,
    reference: &ReferenceProfile,
    order: StencilOrder,
) -> Result<Residual> {
    let problem = Problem::new(reference, order)?;
    correction.check(problem.n_nodes())?;
    problem.residual(&problem.pack(correction, velocity))
}
