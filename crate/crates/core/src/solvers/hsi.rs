use super::{check_weight, default_sparse_weight, SolverConfig, SolverReport};
use crate::error::{Error, Result};
use crate::shrink::{
    anisotropic_tv, diff, diff_adjoint, soft_threshold, solve_difference_system, tsvt_with_norm,
    DiffAxis,
};
use crate::tensor::Tensor3;

const SPATIAL: [DiffAxis; 2] = [DiffAxis::Y, DiffAxis::X];

/// Cubic patch tiling for [`hsi_mixed_denoise`]: `size × size × n3` blocks
/// taken every `stride` pixels, overlaps averaged uniformly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PatchSpec {
    pub size: usize,
    pub stride: usize,
}

impl Default for PatchSpec {
    fn default() -> Self {
        Self { size: 16, stride: 8 }
    }
}

/// Weights of the mixed-noise model.
#[derive(Debug, Clone, PartialEq)]
pub struct HsiParams {
    /// Sparse weight; `None` uses `1/√(max(n1, n2)·n3)` of the block solved.
    pub lambda: Option<f64>,
    /// Weight of `‖N‖_F²`.
    pub tau: f64,
    /// Weight of the spatial total variation of `L`.
    pub gamma: f64,
    /// Solve on overlapping patches instead of the whole cube.
    pub patch: Option<PatchSpec>,
}

impl Default for HsiParams {
    fn default() -> Self {
        Self {
            lambda: None,
            tau: 10.0,
            gamma: 0.05,
            patch: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct HsiResult {
    /// Clean low-rank cube.
    pub low_rank: Tensor3,
    /// Sparse (impulse/stripe) noise.
    pub sparse: Tensor3,
    /// Dense Gaussian-like noise.
    pub noise: Tensor3,
    pub report: SolverReport,
}

/// Mixed-noise removal for hyperspectral cubes:
///
/// `min ‖L‖ + λ‖S‖₁ + τ‖N‖_F² + γ·TV(L)  s.t.  H = L + S + N`
///
/// where TV is the anisotropic spatial total variation (rows and columns,
/// circular boundary). `L` is split into a nuclear-norm copy and two
/// difference variables; the resulting `L` update is solved exactly in the
/// 2-D Fourier domain of each band.
pub fn hsi_mixed_denoise(h: &Tensor3, params: &HsiParams, cfg: &SolverConfig) -> Result<HsiResult> {
    cfg.validate()?;
    if let Some(l) = params.lambda {
        check_weight("lambda", l)?;
    }
    check_weight("tau", params.tau)?;
    check_weight("gamma", params.gamma)?;
    match params.patch {
        None => solve_block(h, params, cfg),
        Some(p) => solve_patches(h, p, params, cfg),
    }
}

fn solve_block(h: &Tensor3, params: &HsiParams, cfg: &SolverConfig) -> Result<HsiResult> {
    let dims = h.dims();
    let (n1, n2, n3) = dims;
    let lambda = params.lambda.unwrap_or_else(|| default_sparse_weight(dims));
    let (tau, gamma) = (params.tau, params.gamma);
    let zero = || Tensor3::zeros(n1, n2, n3);

    let mut l = h.clone();
    let mut k = h.clone();
    let mut g = [zero(), zero()];
    let mut s = zero();
    let mut nz = zero();
    let mut y_data = zero();
    let mut y_copy = zero();
    let mut y_diff = [zero(), zero()];
    let mut pen = cfg.penalty();
    let mut report = SolverReport::default();

    for _ in 0..cfg.max_iter {
        let mu = pen.mu;
        let inv = 1.0 / mu;

        let mut arg = l.clone();
        arg.axpy(inv, &y_copy);
        let (k_new, nuclear) = tsvt_with_norm(&arg, inv)?;

        let mut g_new = [zero(), zero()];
        if gamma > 0.0 {
            for (a, ax) in SPATIAL.iter().enumerate() {
                let mut arg = diff(&l, *ax);
                arg.axpy(inv, &y_diff[a]);
                g_new[a] = soft_threshold(&arg, gamma / mu)?;
            }
        }

        let mut rhs = &(h - &s) - &nz;
        rhs.axpy(inv, &y_data);
        rhs.axpy(1.0, &k_new);
        rhs.axpy(-inv, &y_copy);
        let mut terms = Vec::new();
        if gamma > 0.0 {
            for (a, ax) in SPATIAL.iter().enumerate() {
                let mut t = g_new[a].clone();
                t.axpy(-inv, &y_diff[a]);
                rhs.axpy(1.0, &diff_adjoint(&t, *ax));
                terms.push((*ax, 1.0));
            }
        }
        let l_new = solve_difference_system(&rhs, 2.0, &terms)?;

        let mut arg = &(h - &l_new) - &nz;
        arg.axpy(inv, &y_data);
        let s_new = soft_threshold(&arg, lambda / mu)?;

        let mut arg = h - &l_new;
        arg.axpy(-1.0, &s_new);
        arg.axpy(inv, &y_data);
        let n_new = arg.scale(mu / (mu + 2.0 * tau));

        let r_data = &(&(h - &l_new) - &s_new) - &n_new;
        let r_copy = &l_new - &k_new;
        let mut residual = r_data.max_abs().max(r_copy.max_abs());
        let mut r_diff = [zero(), zero()];
        if gamma > 0.0 {
            for (a, ax) in SPATIAL.iter().enumerate() {
                r_diff[a] = &diff(&l_new, *ax) - &g_new[a];
                residual = residual.max(r_diff[a].max_abs());
            }
        }
        let chg = l_new
            .max_abs_diff(&l)
            .max(s_new.max_abs_diff(&s))
            .max(n_new.max_abs_diff(&nz))
            .max(residual);

        // objective at (K, S, H − K − S): feasible for the data constraint
        let dense = &(h - &k_new) - &s_new;
        let objective = nuclear / n3 as f64
            + lambda * s_new.l1_norm()
            + tau * dense.frobenius_norm().powi(2)
            + gamma * anisotropic_tv(&k_new, &SPATIAL);
        report.record(residual, objective);

        l = l_new;
        k = k_new;
        g = g_new;
        s = s_new;
        nz = n_new;
        if chg <= cfg.tol {
            report.converged = true;
            break;
        }
        y_data.axpy(mu, &r_data);
        y_copy.axpy(mu, &r_copy);
        if gamma > 0.0 {
            for a in 0..2 {
                y_diff[a].axpy(mu, &r_diff[a]);
            }
        }
        pen.grow();
    }
    let _ = (&k, &g);
    Ok(HsiResult {
        low_rank: l,
        sparse: s,
        noise: nz,
        report,
    })
}

fn patch_starts(extent: usize, size: usize, stride: usize) -> Vec<usize> {
    if size >= extent {
        return vec![0];
    }
    let mut starts: Vec<usize> = (0..=extent - size).step_by(stride).collect();
    if *starts.last().unwrap() != extent - size {
        starts.push(extent - size);
    }
    starts
}

fn solve_patches(
    h: &Tensor3,
    patch: PatchSpec,
    params: &HsiParams,
    cfg: &SolverConfig,
) -> Result<HsiResult> {
    if patch.size == 0 || patch.stride == 0 {
        return Err(Error::InvalidArgument(format!("invalid patch spec {patch:?}")));
    }
    let (n1, n2, n3) = h.dims();
    let rows = patch_starts(n1, patch.size, patch.stride);
    let cols = patch_starts(n2, patch.size, patch.stride);
    let mut acc = [vec![0.0; n1 * n2 * n3], vec![0.0; n1 * n2 * n3], vec![0.0; n1 * n2 * n3]];
    let mut hits = vec![0u32; n1 * n2];
    let mut reports = Vec::new();
    for &r0 in &rows {
        for &c0 in &cols {
            let (ph, pw) = (patch.size.min(n1), patch.size.min(n2));
            let block = Tensor3::from_fn(ph, pw, n3, |i, j, k| h.get(r0 + i, c0 + j, k));
            let out = solve_block(&block, params, cfg)?;
            for (a, part) in [&out.low_rank, &out.sparse, &out.noise].iter().enumerate() {
                for k in 0..n3 {
                    for i in 0..ph {
                        for j in 0..pw {
                            acc[a][k * n1 * n2 + (r0 + i) * n2 + c0 + j] += part.get(i, j, k);
                        }
                    }
                }
            }
            for i in 0..ph {
                for j in 0..pw {
                    hits[(r0 + i) * n2 + c0 + j] += 1;
                }
            }
            reports.push(out.report);
        }
    }
    let average = |v: &Vec<f64>| {
        let data = v
            .iter()
            .enumerate()
            .map(|(off, x)| x / hits[off % (n1 * n2)] as f64)
            .collect();
        Tensor3::new((n1, n2, n3), data)
    };
    Ok(HsiResult {
        low_rank: average(&acc[0])?,
        sparse: average(&acc[1])?,
        noise: average(&acc[2])?,
        report: merge_reports(&reports),
    })
}

/// Combines per-patch runs: residuals take the worst patch, objectives the
/// sum over patches, each patch holding its final value once finished.
fn merge_reports(reports: &[SolverReport]) -> SolverReport {
    let longest = reports.iter().map(|r| r.iterations).max().unwrap_or(0);
    let mut merged = SolverReport::default();
    for it in 0..longest {
        let pick = |trace: &Vec<f64>| trace.get(it).or(trace.last()).copied().unwrap_or(0.0);
        let residual = reports.iter().map(|r| pick(&r.residuals)).fold(0.0, f64::max);
        let objective = reports.iter().map(|r| pick(&r.objectives)).sum();
        merged.record(residual, objective);
    }
    merged.converged = reports.iter().all(|r| r.converged);
    merged
}
