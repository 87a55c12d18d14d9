//! Restarted GMRES with modified Gram–Schmidt and Givens rotations.

use crate::error::{Error, Result};
use crate::operators::OperatorAction;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmresConfig {
    /// Relative residual target `‖b − Ax‖ / ‖b‖`.
    pub tolerance: f64,
    pub restart: usize,
    pub max_iterations: usize,
}

impl Default for GmresConfig {
    fn default() -> Self {
        GmresConfig {
            tolerance: 1e-12,
            restart: 30,
            max_iterations: 2000,
        }
    }
}

impl GmresConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0 && self.tolerance < 1.0) {
            return Err(Error::param("gmres_tol", format!("must lie in (0, 1), got {}", self.tolerance)));
        }
        if self.restart == 0 {
            return Err(Error::param("gmres_restart", "must be at least 1"));
        }
        if self.max_iterations == 0 {
            return Err(Error::param("gmres_max_iter", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmresStats {
    pub iterations: usize,
    /// Final relative residual (recomputed from the iterate).
    pub residual: f64,
    /// Relative residual estimate after every Arnoldi step, starting with the
    /// initial residual.
    pub history: Vec<f64>,
    /// Index into `history` at which each restart cycle begins.
    pub cycle_starts: Vec<usize>,
}

fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// Dot product with four interleaved partial sums.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for l in 0..4 {
            acc[l] += x[l] * y[l];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

fn residual_into<O: OperatorAction + ?Sized>(op: &O, rhs: &[f64], x: &[f64], r: &mut [f64]) {
    op.apply(x, r);
    for (ri, bi) in r.iter_mut().zip(rhs) {
        *ri = bi - *ri;
    }
}

/// Solves `op x = rhs` starting from `x0`.
pub fn gmres<O: OperatorAction + ?Sized>(
    op: &O,
    rhs: &[f64],
    x0: &[f64],
    cfg: &GmresConfig,
) -> Result<(Vec<f64>, GmresStats)> {
    let n = rhs.len();
    if op.rows() != op.cols() || op.rows() != n || x0.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "operator {}x{}, rhs {}, x0 {}",
            op.rows(),
            op.cols(),
            n,
            x0.len()
        )));
    }
    if rhs.iter().any(|v| !v.is_finite()) {
        return Err(Error::param("rhs", "contains non-finite values"));
    }
    let b_norm = norm(rhs);
    if b_norm == 0.0 {
        return Ok((
            vec![0.0; n],
            GmresStats {
                iterations: 0,
                residual: 0.0,
                history: vec![0.0],
                cycle_starts: vec![0],
            },
        ));
    }

    let m = cfg.restart.min(n).max(1);
    let mut x = x0.to_vec();
    let mut r = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut basis: Vec<Vec<f64>> = (0..=m).map(|_| vec![0.0; n]).collect();
    // Column-major upper Hessenberg, (m + 1) x m.
    let mut h = vec![0.0; (m + 1) * m];
    let mut cs = vec![0.0; m];
    let mut sn = vec![0.0; m];
    let mut s = vec![0.0; m + 1];
    let mut y = vec![0.0; m];

    let mut iterations = 0;
    let mut history = Vec::new();
    let mut cycle_starts = Vec::new();

    residual_into(op, rhs, &x, &mut r);
    let mut rel = norm(&r) / b_norm;
    loop {
        cycle_starts.push(history.len());
        history.push(rel);
        if rel <= cfg.tolerance {
            return Ok((
                x,
                GmresStats {
                    iterations,
                    residual: rel,
                    history,
                    cycle_starts,
                },
            ));
        }
        if iterations >= cfg.max_iterations {
            return Err(Error::GmresNotConverged {
                iterations,
                residual: rel,
                history,
            });
        }

        let beta = norm(&r);
        for (v, ri) in basis[0].iter_mut().zip(&r) {
            *v = ri / beta;
        }
        s.iter_mut().for_each(|v| *v = 0.0);
        s[0] = beta;
        let mut k_used = 0;

        for j in 0..m {
            op.apply(&basis[j], &mut w);
            for i in 0..=j {
                let hij = dot(&w, &basis[i]);
                h[j * (m + 1) + i] = hij;
                for (wk, vk) in w.iter_mut().zip(&basis[i]) {
                    *wk -= hij * vk;
                }
            }
            let hn = norm(&w);
            h[j * (m + 1) + j + 1] = hn;
            if hn > 0.0 {
                for (v, wk) in basis[j + 1].iter_mut().zip(&w) {
                    *v = wk / hn;
                }
            }
            for i in 0..j {
                let (a, b) = (h[j * (m + 1) + i], h[j * (m + 1) + i + 1]);
                h[j * (m + 1) + i] = cs[i] * a + sn[i] * b;
                h[j * (m + 1) + i + 1] = -sn[i] * a + cs[i] * b;
            }
            let (a, b) = (h[j * (m + 1) + j], h[j * (m + 1) + j + 1]);
            let d = a.hypot(b);
            let (c, sv) = if d == 0.0 { (1.0, 0.0) } else { (a / d, b / d) };
            cs[j] = c;
            sn[j] = sv;
            h[j * (m + 1) + j] = d;
            h[j * (m + 1) + j + 1] = 0.0;
            s[j + 1] = -sv * s[j];
            s[j] *= c;

            iterations += 1;
            k_used = j + 1;
            let est = s[j + 1].abs() / b_norm;
            history.push(est);
            if est <= cfg.tolerance || hn == 0.0 || iterations >= cfg.max_iterations {
                break;
            }
        }

        for i in (0..k_used).rev() {
            let mut acc = s[i];
            for l in i + 1..k_used {
                acc -= h[l * (m + 1) + i] * y[l];
            }
            let diag = h[i * (m + 1) + i];
            y[i] = if diag != 0.0 { acc / diag } else { 0.0 };
        }
        for (l, yl) in y.iter().enumerate().take(k_used) {
            for (xk, vk) in x.iter_mut().zip(&basis[l]) {
                *xk += yl * vk;
            }
        }
        residual_into(op, rhs, &x, &mut r);
        rel = norm(&r) / b_norm;
        if !rel.is_finite() {
            return Err(Error::GmresNotConverged {
                iterations,
                residual: rel,
                history,
            });
        }
    }
}
