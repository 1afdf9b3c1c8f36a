use super::{check_weight, default_sparse_weight, SolverConfig, SolverReport};
use crate::error::Result;
use crate::shrink::{diff, diff_adjoint, soft_threshold, solve_difference_system, tsvt_with_norm, DiffAxis};
use crate::tensor::Tensor3;

/// Weights of the rain-removal model. `None` fields take the defaults
/// `λ1 = 1/√(max(n1, n2)·n3)` and `λ2 = λ3 = λ4 = λ1`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DerainParams {
    /// Sparsity of the rain layer.
    pub lambda1: Option<f64>,
    /// Vertical smoothness of the rain layer.
    pub lambda2: Option<f64>,
    /// Horizontal smoothness of the background.
    pub lambda3: Option<f64>,
    /// Temporal smoothness of the background.
    pub lambda4: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct DerainResult {
    pub background: Tensor3,
    pub rain: Tensor3,
    pub report: SolverReport,
}

/// Rain streak removal for video with vertical streaks (rows are mode 1):
///
/// `min ‖B‖ + λ1‖R‖₁ + λ2‖∇y R‖₁ + λ3‖∇x B‖₁ + λ4‖∇t B‖₁  s.t.  O = B + R`
///
/// `R` is eliminated as `O − B`; every non-smooth term gets its own split
/// and the `B` update is a 3-D circular difference system solved by FFT.
pub fn derain(o: &Tensor3, params: &DerainParams, cfg: &SolverConfig) -> Result<DerainResult> {
    cfg.validate()?;
    let dims = o.dims();
    let (n1, n2, n3) = dims;
    let l1 = params.lambda1.unwrap_or_else(|| default_sparse_weight(dims));
    let l2 = params.lambda2.unwrap_or(l1);
    let l3 = params.lambda3.unwrap_or(l1);
    let l4 = params.lambda4.unwrap_or(l1);
    for (name, v) in [("lambda1", l1), ("lambda2", l2), ("lambda3", l3), ("lambda4", l4)] {
        check_weight(name, v)?;
    }
    let zero = || Tensor3::zeros(n1, n2, n3);
    let dy_o = diff(o, DiffAxis::Y);

    // splits: K = B, P = O − B, Gy = ∇y(O − B), Gx = ∇x B, Gt = ∇t B
    let mut b = o.clone();
    let mut y_k = zero();
    let mut y_p = zero();
    let mut y_y = zero();
    let mut y_x = zero();
    let mut y_t = zero();
    let terms = [(DiffAxis::Y, 1.0), (DiffAxis::X, 1.0), (DiffAxis::T, 1.0)];
    let mut pen = cfg.penalty();
    let mut report = SolverReport::default();

    for _ in 0..cfg.max_iter {
        let mu = pen.mu;
        let inv = 1.0 / mu;
        let r = o - &b;
        let (dy_r, dx_b, dt_b) = (diff(&r, DiffAxis::Y), diff(&b, DiffAxis::X), diff(&b, DiffAxis::T));

        let mut arg = b.clone();
        arg.axpy(inv, &y_k);
        let (k, nuclear) = tsvt_with_norm(&arg, inv)?;
        let mut arg = r.clone();
        arg.axpy(inv, &y_p);
        let p = soft_threshold(&arg, l1 / mu)?;
        let mut arg = dy_r;
        arg.axpy(inv, &y_y);
        let gy = soft_threshold(&arg, l2 / mu)?;
        let mut arg = dx_b;
        arg.axpy(inv, &y_x);
        let gx = soft_threshold(&arg, l3 / mu)?;
        let mut arg = dt_b;
        arg.axpy(inv, &y_t);
        let gt = soft_threshold(&arg, l4 / mu)?;

        let mut rhs = k.clone();
        rhs.axpy(-inv, &y_k);
        rhs.axpy(1.0, &(o - &p));
        rhs.axpy(inv, &y_p);
        let mut w = &dy_o - &gy;
        w.axpy(inv, &y_y);
        rhs.axpy(1.0, &diff_adjoint(&w, DiffAxis::Y));
        let mut w = gx.clone();
        w.axpy(-inv, &y_x);
        rhs.axpy(1.0, &diff_adjoint(&w, DiffAxis::X));
        let mut w = gt.clone();
        w.axpy(-inv, &y_t);
        rhs.axpy(1.0, &diff_adjoint(&w, DiffAxis::T));
        let b_new = solve_difference_system(&rhs, 2.0, &terms)?;

        let r_new = o - &b_new;
        let res_k = &b_new - &k;
        let res_p = &r_new - &p;
        let res_y = &diff(&r_new, DiffAxis::Y) - &gy;
        let res_x = &diff(&b_new, DiffAxis::X) - &gx;
        let res_t = &diff(&b_new, DiffAxis::T) - &gt;
        let residual = [&res_k, &res_p, &res_y, &res_x, &res_t]
            .iter()
            .map(|r| r.max_abs())
            .fold(0.0, f64::max);
        let chg = b_new.max_abs_diff(&b).max(residual);

        // objective at B = K, R = O − K
        let rk = o - &k;
        let objective = nuclear / n3 as f64
            + l1 * rk.l1_norm()
            + l2 * diff(&rk, DiffAxis::Y).l1_norm()
            + l3 * diff(&k, DiffAxis::X).l1_norm()
            + l4 * diff(&k, DiffAxis::T).l1_norm();
        report.record(residual, objective);

        b = b_new;
        if chg <= cfg.tol {
            report.converged = true;
            break;
        }
        y_k.axpy(mu, &res_k);
        y_p.axpy(mu, &res_p);
        y_y.axpy(mu, &res_y);
        y_x.axpy(mu, &res_x);
        y_t.axpy(mu, &res_t);
        pen.grow();
    }
    let rain = o - &b;
    Ok(DerainResult {
        background: b,
        rain,
        report,
    })
}
