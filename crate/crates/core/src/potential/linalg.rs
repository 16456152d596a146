//! Conjugate gradients for graph Laplacians restricted to a vertex subset.

use super::PotentialError;

/// `diag(x) - sum over listed neighbors`, a symmetric M-matrix in CSR form.
pub(crate) struct Laplacian {
    pub diag: Vec<f64>,
    pub offsets: Vec<u32>,
    pub adj: Vec<u32>,
}

impl Laplacian {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        for i in 0..self.len() {
            let mut s = self.diag[i] * x[i];
            for &j in &self.adj[self.offsets[i] as usize..self.offsets[i + 1] as usize] {
                s -= x[j as usize];
            }
            out[i] = s;
        }
    }

    /// Jacobi-preconditioned CG from a zero start, stopping once
    /// `|r| <= tol |b|`.
    pub fn solve(&self, b: &[f64], tol: f64) -> Result<Vec<f64>, PotentialError> {
        let n = self.len();
        let mut x = vec![0.0; n];
        let bnorm = dot(b, b).sqrt();
        if bnorm == 0.0 {
            return Ok(x);
        }
        let mut r = b.to_vec();
        let mut z: Vec<f64> = r.iter().zip(&self.diag).map(|(r, d)| r / d).collect();
        let mut p = z.clone();
        let mut ap = vec![0.0; n];
        let mut rz = dot(&r, &z);
        let max_iter = 20 * n + 100;
        for _ in 0..max_iter {
            self.apply(&p, &mut ap);
            let alpha = rz / dot(&p, &ap);
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            if dot(&r, &r).sqrt() <= tol * bnorm {
                return Ok(x);
            }
            for i in 0..n {
                z[i] = r[i] / self.diag[i];
            }
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        Err(PotentialError::Solver(format!("conjugate gradients stalled after {max_iter} iterations on {n} unknowns")))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
