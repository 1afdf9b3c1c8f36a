//! Matrix counterparts of the tensor models: rank, nuclear norm, singular
//! value thresholding, completion, robust PCA and low-rank + TV
//! super-resolution. Built on nalgebra's real SVD, independently of the
//! Fourier-domain tensor path, so the `n3 = 1` cases can cross-check it.

use nalgebra::{DMatrix, SVD};

use crate::error::{Error, Result};
use crate::shrink::{diff, diff_adjoint, DiffAxis};
use crate::solvers::{SolverConfig, SolverReport};
use crate::tensor::{Matrix, Tensor3};

/// Observation pattern for [`lrmc`].
pub type MatrixMask = DMatrix<bool>;

fn check_finite(m: &Matrix) -> Result<()> {
    match m.iter().position(|v| !v.is_finite()) {
        Some(pos) => Err(Error::NonFinite(pos)),
        None => Ok(()),
    }
}

fn svd(m: &Matrix) -> Result<SVD<f64, nalgebra::Dyn, nalgebra::Dyn>> {
    check_finite(m)?;
    SVD::try_new(m.clone(), true, true, f64::EPSILON, 0).ok_or(Error::SvdNonConvergence {
        sweeps: 0,
        residual: f64::NAN,
    })
}

/// Number of singular values above `tol · σ_max`.
pub fn matrix_rank_tol(m: &Matrix, tol: f64) -> Result<usize> {
    if m.is_empty() {
        return Ok(0);
    }
    let s = svd(m)?.singular_values;
    let smax = s.max();
    if smax == 0.0 {
        return Ok(0);
    }
    Ok(s.iter().filter(|&&v| v > tol * smax).count())
}

/// Sum of singular values.
pub fn nuclear_norm(m: &Matrix) -> Result<f64> {
    if m.is_empty() {
        return Ok(0.0);
    }
    Ok(svd(m)?.singular_values.sum())
}

/// `U·diag((σ − τ)₊)·Vᵀ`, the minimizer of `‖X‖_* + ½‖X − Y‖_F²`.
pub fn matrix_svt(y: &Matrix, tau: f64) -> Result<Matrix> {
    Ok(svt_with_norm(y, tau)?.0)
}

fn svt_with_norm(y: &Matrix, tau: f64) -> Result<(Matrix, f64)> {
    if !(tau >= 0.0) || !tau.is_finite() {
        return Err(Error::InvalidArgument(format!("threshold must be >= 0, got {tau}")));
    }
    let d = svd(y)?;
    let shrunk = d.singular_values.map(|s| (s - tau).max(0.0));
    let u = d.u.as_ref().expect("requested U");
    let vt = d.v_t.as_ref().expect("requested Vᵀ");
    let mut out = Matrix::zeros(y.nrows(), y.ncols());
    for (i, &s) in shrunk.iter().enumerate() {
        if s > 0.0 {
            out.ger(s, &u.column(i), &vt.row(i).transpose(), 1.0);
        }
    }
    Ok((out, shrunk.sum()))
}

fn soft(x: &Matrix, tau: f64) -> Matrix {
    x.map(|v| v.signum() * (v.abs() - tau).max(0.0))
}

fn l1(x: &Matrix) -> f64 {
    x.iter().map(|v| v.abs()).sum()
}

fn max_abs(x: &Matrix) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Nuclear-norm matrix completion:
/// `min ‖X‖_*  s.t.  X = M on Ω`.
pub fn lrmc(m: &Matrix, omega: &MatrixMask, cfg: &SolverConfig) -> Result<(Matrix, SolverReport)> {
    cfg.validate()?;
    check_finite(m)?;
    if omega.shape() != m.shape() {
        return Err(Error::DimMismatch(format!("mask {:?} vs matrix {:?}", omega.shape(), m.shape())));
    }
    if !omega.iter().any(|&b| b) {
        return Err(Error::EmptyMask);
    }
    if omega.iter().all(|&b| b) {
        let mut report = SolverReport::default();
        report.record(0.0, nuclear_norm(m)?);
        report.converged = true;
        return Ok((m.clone(), report));
    }
    let observed = |x: &mut Matrix| {
        for (idx, v) in x.iter_mut().enumerate() {
            if omega[idx] {
                *v = m[idx];
            }
        }
    };
    let mut x = m.zip_map(omega, |v, b| if b { v } else { 0.0 });
    let mut z = Matrix::zeros(m.nrows(), m.ncols());
    let mut y = z.clone();
    let mut pen = cfg.penalty();
    let mut report = SolverReport::default();
    for _ in 0..cfg.max_iter {
        let mu = pen.mu;
        let (z_new, _) = svt_with_norm(&(&x + &y / mu), 1.0 / mu)?;
        let mut x_new = &z_new - &y / mu;
        observed(&mut x_new);
        let resid = &x_new - &z_new;
        let r_inf = max_abs(&resid);
        let chg = max_abs(&(&x_new - &x)).max(max_abs(&(&z_new - &z))).max(r_inf);
        report.record(r_inf, nuclear_norm(&x_new)?);
        x = x_new;
        z = z_new;
        if chg <= cfg.tol {
            report.converged = true;
            break;
        }
        y += &resid * mu;
        pen.grow();
    }
    Ok((x, report))
}

/// Default sparse weight `1/√max(m, n)`.
pub fn rpca_lambda(m: &Matrix) -> f64 {
    1.0 / (m.nrows().max(m.ncols()) as f64).sqrt()
}

/// Robust PCA: `min ‖L‖_* + λ‖S‖₁  s.t.  M = L + S`. `lambda = None`
/// selects [`rpca_lambda`].
pub fn rpca(
    m: &Matrix,
    lambda: Option<f64>,
    cfg: &SolverConfig,
) -> Result<(Matrix, Matrix, SolverReport)> {
    cfg.validate()?;
    check_finite(m)?;
    let lambda = lambda.unwrap_or_else(|| rpca_lambda(m));
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!("lambda must be > 0, got {lambda}")));
    }
    let mut l = m.clone();
    let mut s = Matrix::zeros(m.nrows(), m.ncols());
    let mut y = s.clone();
    let mut pen = cfg.penalty();
    let mut report = SolverReport::default();
    for _ in 0..cfg.max_iter {
        let mu = pen.mu;
        let (l_new, nuclear) = svt_with_norm(&(m - &s + &y / mu), 1.0 / mu)?;
        let s_new = soft(&(m - &l_new + &y / mu), lambda / mu);
        let resid = m - &l_new - &s_new;
        let r_inf = max_abs(&resid);
        let chg = max_abs(&(&l_new - &l)).max(max_abs(&(&s_new - &s))).max(r_inf);
        report.record(r_inf, nuclear + lambda * l1(&(m - &l_new)));
        l = l_new;
        s = s_new;
        if chg <= cfg.tol {
            report.converged = true;
            break;
        }
        y += &resid * mu;
        pen.grow();
    }
    Ok((l, s, report))
}

/// Blur by a normalized kernel (circular convolution, kernel centered)
/// followed by keeping every `factor`-th row and column starting at 0.
#[derive(Debug, Clone, PartialEq)]
pub struct DegradationOp {
    kernel: Matrix,
    factor: usize,
}

impl DegradationOp {
    /// Kernel sides must be odd and its entries must sum to 1 within 1e-12.
    pub fn new(kernel: Matrix, factor: usize) -> Result<Self> {
        check_finite(&kernel)?;
        let (kr, kc) = kernel.shape();
        if kr % 2 == 0 || kc % 2 == 0 {
            return Err(Error::InvalidArgument(format!("kernel sides must be odd, got {kr}×{kc}")));
        }
        if (kernel.sum() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("kernel sums to {}, not 1", kernel.sum())));
        }
        if factor == 0 {
            return Err(Error::InvalidArgument("decimation factor must be >= 1".into()));
        }
        Ok(Self { kernel, factor })
    }

    /// Uniform `size × size` box blur.
    pub fn box_blur(size: usize, factor: usize) -> Result<Self> {
        let n = (size * size) as f64;
        Self::new(Matrix::from_element(size, size, 1.0 / n), factor)
    }

    /// Pure decimation.
    pub fn decimation(factor: usize) -> Result<Self> {
        Self::new(Matrix::from_element(1, 1, 1.0), factor)
    }

    pub fn kernel(&self) -> &Matrix {
        &self.kernel
    }

    pub fn factor(&self) -> usize {
        self.factor
    }

    /// Output shape for a `rows × cols` input.
    pub fn output_shape(&self, rows: usize, cols: usize) -> (usize, usize) {
        (rows.div_ceil(self.factor), cols.div_ceil(self.factor))
    }

    fn blur(&self, x: &Matrix, adjoint: bool) -> Matrix {
        let (n, m) = x.shape();
        let (kr, kc) = self.kernel.shape();
        let (cr, cc) = ((kr / 2) as isize, (kc / 2) as isize);
        let sign = if adjoint { 1 } else { -1 };
        Matrix::from_fn(n, m, |i, j| {
            let mut acc = 0.0;
            for a in 0..kr {
                for b in 0..kc {
                    let di = sign * (a as isize - cr);
                    let dj = sign * (b as isize - cc);
                    let si = (i as isize + di).rem_euclid(n as isize) as usize;
                    let sj = (j as isize + dj).rem_euclid(m as isize) as usize;
                    acc += self.kernel[(a, b)] * x[(si, sj)];
                }
            }
            acc
        })
    }

    /// `H x`.
    pub fn apply(&self, x: &Matrix) -> Matrix {
        let blurred = self.blur(x, false);
        let (r, c) = self.output_shape(x.nrows(), x.ncols());
        Matrix::from_fn(r, c, |i, j| blurred[(i * self.factor, j * self.factor)])
    }

    /// `Hᵀ y` for an input grid of `rows × cols`.
    pub fn adjoint(&self, y: &Matrix, rows: usize, cols: usize) -> Result<Matrix> {
        if y.shape() != self.output_shape(rows, cols) {
            return Err(Error::DimMismatch(format!(
                "{:?} is not the image of a {rows}×{cols} grid",
                y.shape()
            )));
        }
        let mut up = Matrix::zeros(rows, cols);
        for i in 0..y.nrows() {
            for j in 0..y.ncols() {
                up[(i * self.factor, j * self.factor)] = y[(i, j)];
            }
        }
        Ok(self.blur(&up, true))
    }
}

fn as_tensor(m: &Matrix) -> Tensor3 {
    Tensor3::from_frontal_slices(std::slice::from_ref(m)).expect("non-empty finite matrix")
}

fn grad(x: &Matrix, axis: DiffAxis) -> Matrix {
    diff(&as_tensor(x), axis).frontal(0)
}

fn grad_adjoint(g: &Matrix, axis: DiffAxis) -> Matrix {
    diff_adjoint(&as_tensor(g), axis).frontal(0)
}

const PLANE: [DiffAxis; 2] = [DiffAxis::Y, DiffAxis::X];

fn tv(x: &Matrix) -> f64 {
    PLANE.iter().map(|&a| l1(&grad(x, a))).sum()
}

/// Conjugate gradient for the symmetric positive definite `apply`.
fn conjugate_gradient(apply: impl Fn(&Matrix) -> Matrix, b: &Matrix, x0: Matrix, rtol: f64, max_iter: usize) -> Matrix {
    let mut x = x0;
    let mut r = b - apply(&x);
    let mut p = r.clone();
    let mut rr = r.norm_squared();
    let stop = (rtol * b.norm()).powi(2);
    for _ in 0..max_iter {
        if rr <= stop {
            break;
        }
        let ap = apply(&p);
        let alpha = rr / p.dot(&ap);
        x += &p * alpha;
        r -= &ap * alpha;
        let rr_new = r.norm_squared();
        p = &r + &p * (rr_new / rr);
        rr = rr_new;
    }
    x
}

/// Low-rank + TV single-image super-resolution:
///
/// `min λ1‖X‖_* + λ2·TV(X)  s.t.  H X = Y`
///
/// with `X` of size `d·rows(Y) × d·cols(Y)`. The constraint enters through
/// an augmented Lagrangian term; the `X` update is solved by conjugate
/// gradients. `None` weights default to `λ1 = 1`, `λ2 = 0.1`.
pub fn lrtv_super_resolve(
    y: &Matrix,
    h: &DegradationOp,
    lambda1: Option<f64>,
    lambda2: Option<f64>,
    cfg: &SolverConfig,
) -> Result<(Matrix, SolverReport)> {
    cfg.validate()?;
    check_finite(y)?;
    let l1w = lambda1.unwrap_or(1.0);
    let l2w = lambda2.unwrap_or(0.1);
    for (name, v) in [("lambda1", l1w), ("lambda2", l2w)] {
        if !(v >= 0.0) || !v.is_finite() {
            return Err(Error::InvalidArgument(format!("{name} must be >= 0, got {v}")));
        }
    }
    if y.is_empty() {
        return Err(Error::InvalidArgument("empty observation".into()));
    }
    let (rows, cols) = (y.nrows() * h.factor(), y.ncols() * h.factor());
    let hty = h.adjoint(y, rows, cols)?;

    // nearest-neighbour upsampling as the starting point
    let mut x = Matrix::from_fn(rows, cols, |i, j| y[(i / h.factor(), j / h.factor())]);
    let zero = Matrix::zeros(rows, cols);
    let mut y_k = zero.clone();
    let mut y_g = [zero.clone(), zero.clone()];
    let mut y_h = Matrix::zeros(y.nrows(), y.ncols());
    let mut pen = cfg.penalty();
    let mut report = SolverReport::default();
    let use_tv = l2w > 0.0;

    for _ in 0..cfg.max_iter {
        let mu = pen.mu;
        let (k, _) = svt_with_norm(&(&x + &y_k / mu), l1w / mu)?;
        let mut g = [zero.clone(), zero.clone()];
        if use_tv {
            for (a, &ax) in PLANE.iter().enumerate() {
                g[a] = soft(&(grad(&x, ax) + &y_g[a] / mu), l2w / mu);
            }
        }

        let mut rhs = &k - &y_k / mu + &hty - h.adjoint(&(&y_h / mu), rows, cols)?;
        if use_tv {
            for (a, &ax) in PLANE.iter().enumerate() {
                rhs += grad_adjoint(&(&g[a] - &y_g[a] / mu), ax);
            }
        }
        let normal = |v: &Matrix| {
            let mut out = v + h.adjoint(&h.apply(v), rows, cols).expect("shape from apply");
            if use_tv {
                for &ax in &PLANE {
                    out += grad_adjoint(&grad(v, ax), ax);
                }
            }
            out
        };
        let x_new = conjugate_gradient(normal, &rhs, x.clone(), 1e-13, 4 * rows * cols);

        let r_k = &x_new - &k;
        let r_h = h.apply(&x_new) - y;
        let mut residual = max_abs(&r_k).max(max_abs(&r_h));
        let mut r_g = [zero.clone(), zero.clone()];
        if use_tv {
            for (a, &ax) in PLANE.iter().enumerate() {
                r_g[a] = grad(&x_new, ax) - &g[a];
                residual = residual.max(max_abs(&r_g[a]));
            }
        }
        let chg = max_abs(&(&x_new - &x)).max(residual);
        report.record(residual, l1w * nuclear_norm(&x_new)? + l2w * tv(&x_new));
        x = x_new;
        if chg <= cfg.tol {
            report.converged = true;
            break;
        }
        y_k += &r_k * mu;
        y_h += &r_h * mu;
        if use_tv {
            for a in 0..2 {
                y_g[a] += &r_g[a] * mu;
            }
        }
        pen.grow();
    }
    Ok((x, report))
}
