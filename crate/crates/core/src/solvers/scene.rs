use super::{check_weight, default_sparse_weight, SolverConfig, SolverReport};
use crate::error::Result;
use crate::metrics::support;
use crate::shrink::{anisotropic_tv, diff, diff_adjoint, soft_threshold, solve_difference_system, tsvt_with_norm, DiffAxis};
use crate::tensor::{Mask3, Tensor3};

/// Weights of the moving-object decomposition. `None` fields take the
/// defaults `λ1 = 1/√(max(n1, n2)·n3)`, `λ2 = 0.3·λ1`, `λ3 = 0.1·λ1`.
///
/// `λ2` must stay below `6·λ3`: the TV of any tensor is at most six times its
/// l1 norm, so otherwise every entry is cheaper in `E` than in `D`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ModParams {
    pub lambda1: Option<f64>,
    pub lambda2: Option<f64>,
    pub lambda3: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ModResult {
    /// Static background.
    pub background: Tensor3,
    /// Everything that is not background: `d + e`.
    pub foreground: Tensor3,
    /// Dynamic background disturbance (sparse, temporally irregular).
    pub dynamic: Tensor3,
    /// Moving objects (sparse and piecewise smooth in space and time).
    pub objects: Tensor3,
    pub report: SolverReport,
}

/// Moving object detection under dynamic background:
///
/// `min ‖B‖ + λ1‖F‖₁ + λ2‖D‖₁ + λ3·TV(E)  s.t.  T = B + F,  F = D + E`
///
/// with TV the anisotropic total variation along all three modes.
pub fn mod_decompose(t: &Tensor3, params: &ModParams, cfg: &SolverConfig) -> Result<ModResult> {
    cfg.validate()?;
    let dims = t.dims();
    let (n1, n2, n3) = dims;
    let l1 = params.lambda1.unwrap_or(default_sparse_weight(dims));
    let l2 = params.lambda2.unwrap_or(0.3 * l1);
    let l3 = params.lambda3.unwrap_or(0.1 * l1);
    for (name, v) in [("lambda1", l1), ("lambda2", l2), ("lambda3", l3)] {
        check_weight(name, v)?;
    }
    let zero = || Tensor3::zeros(n1, n2, n3);

    let mut b = t.clone();
    let mut f = zero();
    let mut d = zero();
    let mut e = zero();
    let mut y_split = zero();
    let mut y_fg = zero();
    let mut y_diff = [zero(), zero(), zero()];
    let mut pen = cfg.penalty();
    let mut report = SolverReport::default();

    for _ in 0..cfg.max_iter {
        let mu = pen.mu;
        let inv = 1.0 / mu;

        let mut arg = t - &f;
        arg.axpy(inv, &y_split);
        let (b_new, nuclear) = tsvt_with_norm(&arg, inv)?;

        let mut arg = t - &b_new;
        arg.axpy(inv, &y_split);
        arg.axpy(1.0, &d);
        arg.axpy(1.0, &e);
        arg.axpy(-inv, &y_fg);
        let f_new = soft_threshold(&arg.scale(0.5), l1 / (2.0 * mu))?;

        let mut arg = &f_new - &e;
        arg.axpy(inv, &y_fg);
        let d_new = soft_threshold(&arg, l2 / mu)?;

        let mut g = [zero(), zero(), zero()];
        for (a, ax) in DiffAxis::ALL.iter().enumerate() {
            let mut arg = diff(&e, *ax);
            arg.axpy(inv, &y_diff[a]);
            g[a] = soft_threshold(&arg, l3 / mu)?;
        }

        let mut rhs = &f_new - &d_new;
        rhs.axpy(inv, &y_fg);
        for (a, ax) in DiffAxis::ALL.iter().enumerate() {
            let mut w = g[a].clone();
            w.axpy(-inv, &y_diff[a]);
            rhs.axpy(1.0, &diff_adjoint(&w, *ax));
        }
        let terms: Vec<_> = DiffAxis::ALL.iter().map(|&ax| (ax, 1.0)).collect();
        let e_new = solve_difference_system(&rhs, 1.0, &terms)?;

        let r_split = &(t - &b_new) - &f_new;
        let r_fg = &(&f_new - &d_new) - &e_new;
        let mut residual = r_split.max_abs().max(r_fg.max_abs());
        let mut r_diff = [zero(), zero(), zero()];
        for (a, ax) in DiffAxis::ALL.iter().enumerate() {
            r_diff[a] = &diff(&e_new, *ax) - &g[a];
            residual = residual.max(r_diff[a].max_abs());
        }
        let chg = b_new
            .max_abs_diff(&b)
            .max(f_new.max_abs_diff(&f))
            .max(d_new.max_abs_diff(&d))
            .max(e_new.max_abs_diff(&e))
            .max(residual);

        // objective at (B, T − B, D, T − B − D), which satisfies both constraints
        let fg = t - &b_new;
        let objective = nuclear / n3 as f64
            + l1 * fg.l1_norm()
            + l2 * d_new.l1_norm()
            + l3 * anisotropic_tv(&(&fg - &d_new), &DiffAxis::ALL);
        report.record(residual, objective);

        b = b_new;
        f = f_new;
        d = d_new;
        e = e_new;
        if chg <= cfg.tol {
            report.converged = true;
            break;
        }
        y_split.axpy(mu, &r_split);
        y_fg.axpy(mu, &r_fg);
        for a in 0..3 {
            y_diff[a].axpy(mu, &r_diff[a]);
        }
        pen.grow();
    }
    Ok(ModResult {
        background: b,
        foreground: f,
        dynamic: d,
        objects: e,
        report,
    })
}

/// Moving-object mask: entries with `|e| > 0.1·max|e|`. Empty for `e = 0`.
pub fn foreground_mask(e: &Tensor3) -> Mask3 {
    let peak = e.max_abs();
    support(e, 0.1 * peak)
}
