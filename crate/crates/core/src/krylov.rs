//! Full GMRes with right preconditioning.

use std::io::{self, Write};
use std::time::Instant;

use crate::error::{Error, Result};

/// Square linear map on coefficient slices.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    /// `y = A x`; `y` is overwritten.
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

/// Approximate inverse applied on the right, `out = M^{-1} r`.
pub trait Preconditioner {
    fn apply(&self, r: &[f64], out: &mut [f64]);
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Identity;

impl Preconditioner for Identity {
    fn apply(&self, r: &[f64], out: &mut [f64]) {
        out.copy_from_slice(r);
    }
}

impl<F: Fn(&[f64], &mut [f64])> Preconditioner for F {
    fn apply(&self, r: &[f64], out: &mut [f64]) {
        self(r, out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmresConfig {
    /// relative residual threshold
    pub tol: f64,
    pub maxiter: usize,
    /// true residual is recomputed every this many iterations
    pub true_residual_every: usize,
}

impl Default for GmresConfig {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            maxiter: 3000,
            true_residual_every: 10,
        }
    }
}

impl GmresConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidConfig(format!("tol must be positive, got {}", self.tol)));
        }
        if self.maxiter == 0 {
            return Err(Error::InvalidConfig("maxiter must be at least 1".into()));
        }
        if self.true_residual_every == 0 {
            return Err(Error::InvalidConfig("true residual interval must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    MaxIterations,
    /// Krylov space became invariant before the tolerance was reached.
    Breakdown,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    pub converged: bool,
    pub status: SolveStatus,
    /// Arnoldi residual estimate relative to `‖b‖`, entry 0 is the initial residual
    pub residual_history: Vec<f64>,
    /// `(iteration, ‖b - A x‖ / ‖b‖)` at every check
    pub true_residuals: Vec<(usize, f64)>,
    /// relative true residual of the returned iterate
    pub final_residual: f64,
    pub wall_time: f64,
}

impl SolveReport {
    /// Writes `iter,arnoldi_residual[,true_residual]` lines.
    pub fn write_log(&self, mut out: impl Write) -> io::Result<()> {
        let mut checks = self.true_residuals.iter().peekable();
        for (it, r) in self.residual_history.iter().enumerate() {
            while checks.next_if(|(i, _)| *i < it).is_some() {}
            match checks.next_if(|(i, _)| *i == it) {
                Some((_, t)) => writeln!(out, "{it},{r:e},{t:e}")?,
                None => writeln!(out, "{it},{r:e}")?,
            }
        }
        Ok(())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Orthonormal Krylov basis of `A M^{-1}` with its Hessenberg matrix.
pub(crate) struct Arnoldi {
    pub(crate) basis: Vec<Vec<f64>>,
    /// column `j` holds `h_{0..=j+1, j}`
    pub(crate) hessenberg: Vec<Vec<f64>>,
}

impl Arnoldi {
    fn new(v0: Vec<f64>) -> Self {
        Self {
            basis: vec![v0],
            hessenberg: Vec::new(),
        }
    }

    /// Extends the basis by one vector. Modified Gram-Schmidt followed by one
    /// reorthogonalization pass. Returns `(h_{j+1,j}, ‖w‖ before projection)`.
    fn step(&mut self, op: &dyn LinearOperator, pc: &dyn Preconditioner, tmp: &mut [f64]) -> (f64, f64) {
        let n = op.dim();
        let j = self.basis.len() - 1;
        pc.apply(&self.basis[j], tmp);
        let mut w = vec![0.0; n];
        op.apply(tmp, &mut w);
        let w_norm = norm(&w);
        let mut h = vec![0.0; j + 2];
        for _pass in 0..2 {
            // each update of w is fused with the inner product against the next vector
            let mut c = dot(&w, &self.basis[0]);
            for i in 0..=j {
                h[i] += c;
                let v = &self.basis[i];
                match self.basis.get(i + 1) {
                    Some(next) => {
                        let mut acc = 0.0;
                        for ((wr, vr), nr) in w.iter_mut().zip(v).zip(next) {
                            *wr -= c * vr;
                            acc += *wr * nr;
                        }
                        c = acc;
                    }
                    None => axpy(-c, v, &mut w),
                }
            }
        }
        let beta = norm(&w);
        h[j + 1] = beta;
        if beta > 0.0 {
            w.iter_mut().for_each(|v| *v /= beta);
        }
        self.basis.push(w);
        self.hessenberg.push(h);
        (beta, w_norm)
    }
}

struct Givens {
    c: Vec<f64>,
    s: Vec<f64>,
    /// rotated Hessenberg columns (upper triangular)
    r: Vec<Vec<f64>>,
    g: Vec<f64>,
}

impl Givens {
    fn new(beta: f64) -> Self {
        Self {
            c: Vec::new(),
            s: Vec::new(),
            r: Vec::new(),
            g: vec![beta],
        }
    }

    /// Rotates the new Hessenberg column and returns the residual estimate.
    fn push(&mut self, mut h: Vec<f64>) -> f64 {
        let j = self.c.len();
        for i in 0..j {
            let (a, b) = (h[i], h[i + 1]);
            h[i] = self.c[i] * a + self.s[i] * b;
            h[i + 1] = -self.s[i] * a + self.c[i] * b;
        }
        let (a, b) = (h[j], h[j + 1]);
        let rho = a.hypot(b);
        let (c, s) = if rho == 0.0 { (0.0, 1.0) } else { (a / rho, b / rho) };
        h[j] = rho;
        h[j + 1] = 0.0;
        self.c.push(c);
        self.s.push(s);
        let gj = self.g[j];
        self.g[j] = c * gj;
        self.g.push(-s * gj);
        h.truncate(j + 1);
        self.r.push(h);
        self.g[j + 1].abs()
    }

    /// Least-squares coefficients after `m` steps.
    fn coefficients(&self, m: usize) -> Vec<f64> {
        let mut y = self.g[..m].to_vec();
        for i in (0..m).rev() {
            for k in i + 1..m {
                y[i] -= self.r[k][i] * y[k];
            }
            y[i] = if self.r[i][i] != 0.0 { y[i] / self.r[i][i] } else { 0.0 };
        }
        y
    }
}

/// `x = M^{-1} V y`
fn assemble_iterate(arnoldi: &Arnoldi, pc: &dyn Preconditioner, y: &[f64]) -> Vec<f64> {
    let n = arnoldi.basis[0].len();
    let mut t = vec![0.0; n];
    for (yi, v) in y.iter().zip(&arnoldi.basis) {
        axpy(*yi, v, &mut t);
    }
    let mut x = vec![0.0; n];
    pc.apply(&t, &mut x);
    x
}

fn residual_norm(op: &dyn LinearOperator, b: &[f64], x: &[f64]) -> f64 {
    let mut r = vec![0.0; b.len()];
    op.apply(x, &mut r);
    r.iter_mut().zip(b).for_each(|(ri, bi)| *ri = bi - *ri);
    norm(&r)
}

/// Solves `A x = b` from a zero initial guess by GMRes on `A M^{-1}`.
///
/// Without convergence the iterate minimizing the residual over the built
/// Krylov space is returned with `converged = false`.
pub fn gmres(
    op: &dyn LinearOperator,
    pc: &dyn Preconditioner,
    b: &[f64],
    cfg: &GmresConfig,
) -> Result<(Vec<f64>, SolveReport)> {
    cfg.validate()?;
    let n = op.dim();
    if b.len() != n {
        return Err(Error::LayoutMismatch {
            expected: n,
            actual: b.len(),
        });
    }
    let start = Instant::now();
    let beta = norm(b);
    if beta == 0.0 {
        return Ok((
            vec![0.0; n],
            SolveReport {
                iterations: 0,
                converged: true,
                status: SolveStatus::Converged,
                residual_history: vec![0.0],
                true_residuals: vec![(0, 0.0)],
                final_residual: 0.0,
                wall_time: start.elapsed().as_secs_f64(),
            },
        ));
    }
    let mut arnoldi = Arnoldi::new(b.iter().map(|v| v / beta).collect());
    let mut givens = Givens::new(beta);
    let mut history = vec![1.0];
    let mut true_residuals = vec![(0, 1.0)];
    let mut tmp = vec![0.0; n];
    let mut status = SolveStatus::MaxIterations;
    let mut iterations = 0;
    while iterations < cfg.maxiter {
        let (h_next, w_norm) = arnoldi.step(op, pc, &mut tmp);
        let h = arnoldi.hessenberg.last().unwrap().clone();
        let est = givens.push(h);
        iterations += 1;
        history.push(est / beta);
        if iterations % cfg.true_residual_every == 0 {
            let x = assemble_iterate(&arnoldi, pc, &givens.coefficients(iterations));
            true_residuals.push((iterations, residual_norm(op, b, &x) / beta));
        }
        if est <= cfg.tol * beta {
            status = SolveStatus::Converged;
            break;
        }
        if h_next <= 1e-14 * w_norm {
            status = SolveStatus::Breakdown;
            break;
        }
    }
    let x = assemble_iterate(&arnoldi, pc, &givens.coefficients(iterations));
    let final_residual = residual_norm(op, b, &x) / beta;
    if true_residuals.last().map(|t| t.0) != Some(iterations) {
        true_residuals.push((iterations, final_residual));
    }
    if status == SolveStatus::Breakdown && final_residual <= cfg.tol {
        status = SolveStatus::Converged;
    }
    Ok((
        x,
        SolveReport {
            iterations,
            converged: status == SolveStatus::Converged,
            status,
            residual_history: history,
            true_residuals,
            final_residual,
            wall_time: start.elapsed().as_secs_f64(),
        },
    ))
}
