use super::{change, default_sparse_weight, SolverConfig, SolverReport};
use crate::error::{Error, Result};
use crate::shrink::{soft_threshold, tsvt_with_norm};
use crate::tensor::Tensor3;

/// Default sparse weight `1/√(max(n1, n2)·n3)`.
pub fn trpca_lambda(dims: (usize, usize, usize)) -> f64 {
    default_sparse_weight(dims)
}

/// Tensor robust PCA: `min ‖L‖ + λ‖S‖₁  s.t.  M = L + S`.
///
/// `lambda = None` selects [`trpca_lambda`]. Returns `(L, S, report)`; when
/// the iteration cap is hit the last iterate is returned with
/// `converged = false`.
pub fn trpca(
    m: &Tensor3,
    lambda: Option<f64>,
    cfg: &SolverConfig,
) -> Result<(Tensor3, Tensor3, SolverReport)> {
    cfg.validate()?;
    let lambda = lambda.unwrap_or_else(|| trpca_lambda(m.dims()));
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!("lambda must be > 0, got {lambda}")));
    }
    let n3 = m.dims().2 as f64;
    let mut pen = cfg.penalty();
    let mut l = m.clone();
    let (n1, n2, depth) = m.dims();
    let mut s = Tensor3::zeros(n1, n2, depth);
    let mut y = Tensor3::zeros(n1, n2, depth);
    let mut report = SolverReport::default();

    for _ in 0..cfg.max_iter {
        let mu = pen.mu;
        let mut arg = m - &s;
        arg.axpy(1.0 / mu, &y);
        let (l_new, nuclear) = tsvt_with_norm(&arg, 1.0 / mu)?;

        let mut arg = m - &l_new;
        arg.axpy(1.0 / mu, &y);
        let s_new = soft_threshold(&arg, lambda / mu)?;

        let resid = &(m - &l_new) - &s_new;
        let r_inf = resid.max_abs();
        let chg = change(&l_new, &l).max(change(&s_new, &s)).max(r_inf);
        let objective = nuclear / n3 + lambda * (m - &l_new).l1_norm();
        report.record(r_inf, objective);
        l = l_new;
        s = s_new;
        if chg <= cfg.tol {
            report.converged = true;
            break;
        }
        y.axpy(mu, &resid);
        pen.grow();
    }
    Ok((l, s, report))
}
