//! Proximal operators: tensor singular value thresholding and its weighted
//! variant, entrywise soft-thresholding, and circular finite differences.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::spectral::{self, map_symmetric, thin_svd, CMatrix, SpectralTensor3};
use crate::tensor::{Matrix, Tensor3};

/// Thresholds applied to the spectral singular values by [`weighted_tsvt`].
#[derive(Debug, Clone, PartialEq)]
pub enum WeightVector {
    /// `w_i` for singular value index `i`, shared by every Fourier slice.
    /// A single entry is broadcast to every index.
    PerIndex(Vec<f64>),
    /// `w_{i,k} = c / (σ_{i,k} + eps)` from the singular values of the
    /// tensor being thresholded.
    Reweighted { c: f64, eps: f64 },
}

impl WeightVector {
    pub fn constant(w: f64) -> Self {
        Self::PerIndex(vec![w])
    }

    /// Default reweighting rule with `eps = 1e-6`.
    pub fn reweighted(c: f64) -> Self {
        Self::Reweighted { c, eps: 1e-6 }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |v: f64| !v.is_finite() || v < 0.0;
        match self {
            Self::PerIndex(w) => {
                if w.is_empty() {
                    return Err(Error::InvalidArgument("empty weight vector".into()));
                }
                if let Some(v) = w.iter().find(|&&v| bad(v)) {
                    return Err(Error::InvalidArgument(format!("invalid weight {v}")));
                }
            }
            Self::Reweighted { c, eps } => {
                if bad(*c) || !(eps.is_finite() && *eps > 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "invalid reweighting constants c={c}, eps={eps}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Scales every threshold by `factor ≥ 0`.
    pub fn scaled(&self, factor: f64) -> Self {
        match self {
            Self::PerIndex(w) => Self::PerIndex(w.iter().map(|v| v * factor).collect()),
            Self::Reweighted { c, eps } => Self::Reweighted {
                c: c * factor,
                eps: *eps,
            },
        }
    }

    fn threshold(&self, i: usize, sigma: f64) -> f64 {
        match self {
            Self::PerIndex(w) if w.len() == 1 => w[0],
            Self::PerIndex(w) => w[i],
            Self::Reweighted { c, eps } => c / (sigma + eps),
        }
    }
}

/// Shrinks each spectral singular value by `threshold(i, σ)`; shared by
/// [`tsvt`] and [`weighted_tsvt`]. Also returns the sum of the shrunk
/// singular values over all `n3` slices (the nuclear norm of the output).
fn spectral_shrink<F>(y: &Tensor3, threshold: F) -> Result<(Tensor3, f64)>
where
    F: Fn(usize, f64) -> f64 + Sync + Send,
{
    let n3 = y.dims().2;
    let yf = spectral::to_spectral(y);
    let slices = map_symmetric(
        n3,
        |k| -> Result<(CMatrix, f64)> {
            let svd = thin_svd(yf.slice(k))?;
            let (m, n) = yf.slice(k).shape();
            let mut out = CMatrix::zeros(m, n);
            let mut kept = 0.0;
            for (i, &s) in svd.s.iter().enumerate() {
                let shrunk = (s - threshold(i, s)).max(0.0);
                if shrunk == 0.0 {
                    // singular values are sorted, but weights need not be
                    continue;
                }
                kept += shrunk;
                let u = svd.u.column(i) * Complex64::new(shrunk, 0.0);
                let v = svd.v.column(i).map(|z| z.conj());
                out.ger(Complex64::new(1.0, 0.0), &u, &v, Complex64::new(1.0, 0.0));
            }
            Ok((out, kept))
        },
        |r| r.clone().map(|(m, kept)| (m.map(|z| z.conj()), kept)),
    );
    let mut total = 0.0;
    let mut out = Vec::with_capacity(n3);
    for s in slices {
        let (m, kept) = s?;
        total += kept;
        out.push(m);
    }
    Ok((spectral::inverse_unchecked(&SpectralTensor3::new(out)?), total))
}

/// Tensor singular value thresholding: every spectral singular value `σ`
/// becomes `(σ − τ)₊`. Proximal map of the nuclear norm summed over the
/// Fourier slices with the quadratic measured slice-wise.
pub fn tsvt(y: &Tensor3, tau: f64) -> Result<Tensor3> {
    if !(tau >= 0.0) || !tau.is_finite() {
        return Err(Error::InvalidArgument(format!("threshold must be >= 0, got {tau}")));
    }
    if tau == 0.0 {
        return Ok(y.clone());
    }
    Ok(spectral_shrink(y, |_, _| tau)?.0)
}

/// [`tsvt`] together with the tensor nuclear norm of its output.
pub(crate) fn tsvt_with_norm(y: &Tensor3, tau: f64) -> Result<(Tensor3, f64)> {
    if !(tau >= 0.0) || !tau.is_finite() {
        return Err(Error::InvalidArgument(format!("threshold must be >= 0, got {tau}")));
    }
    spectral_shrink(y, |_, _| tau)
}

/// Weighted thresholding: `σ_{i,k}` becomes `(σ_{i,k} − w_{i,k})₊`.
pub fn weighted_tsvt(y: &Tensor3, w: &WeightVector) -> Result<Tensor3> {
    w.validate()?;
    let (n1, n2, _) = y.dims();
    if let WeightVector::PerIndex(v) = w {
        if v.len() != 1 && v.len() < n1.min(n2) {
            return Err(Error::DimMismatch(format!(
                "{} weights for {} singular values",
                v.len(),
                n1.min(n2)
            )));
        }
        if v.iter().all(|&x| x == 0.0) {
            return Ok(y.clone());
        }
    }
    Ok(spectral_shrink(y, |i, s| w.threshold(i, s))?.0)
}

#[inline]
fn shrink_scalar(v: f64, tau: f64) -> f64 {
    v.signum() * (v.abs() - tau).max(0.0)
}

/// Entrywise `sign(x)·(|x| − τ)₊`.
pub fn soft_threshold(x: &Tensor3, tau: f64) -> Result<Tensor3> {
    if !(tau >= 0.0) || !tau.is_finite() {
        return Err(Error::InvalidArgument(format!("threshold must be >= 0, got {tau}")));
    }
    Ok(x.map(|v| shrink_scalar(v, tau)))
}

/// Soft-thresholding with per-position thresholds `τ·weights(i, j)`, the same
/// for every frontal slice.
pub fn masked_soft_threshold(x: &Tensor3, weights: &Matrix, tau: f64) -> Result<Tensor3> {
    let (n1, n2, _) = x.dims();
    if weights.shape() != (n1, n2) {
        return Err(Error::DimMismatch(format!(
            "weights {:?} vs slices {n1}x{n2}",
            weights.shape()
        )));
    }
    if !(tau >= 0.0) || !tau.is_finite() {
        return Err(Error::InvalidArgument(format!("threshold must be >= 0, got {tau}")));
    }
    if let Some(w) = weights.iter().find(|w| !(0.0..=1.0).contains(*w)) {
        return Err(Error::InvalidArgument(format!("mask weight {w} outside [0, 1]")));
    }
    let mut out = x.clone();
    let data = out.data_mut();
    for (off, v) in data.iter_mut().enumerate() {
        let i = (off / n2) % n1;
        let j = off % n2;
        *v = shrink_scalar(*v, tau * weights[(i, j)]);
    }
    Ok(out)
}

/// Axis of a forward difference. `Y` runs down the rows (mode 1), `X`
/// across the columns (mode 2) and `T` through the frontal slices (mode 3).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DiffAxis {
    X,
    Y,
    T,
}

impl DiffAxis {
    pub const ALL: [DiffAxis; 3] = [DiffAxis::Y, DiffAxis::X, DiffAxis::T];

    fn index(self) -> usize {
        match self {
            DiffAxis::Y => 0,
            DiffAxis::X => 1,
            DiffAxis::T => 2,
        }
    }
}

fn extent(dims: (usize, usize, usize), axis: DiffAxis) -> usize {
    [dims.0, dims.1, dims.2][axis.index()]
}

fn shifted_offset(dims: (usize, usize, usize), axis: DiffAxis, off: usize, forward: bool) -> usize {
    let (n1, n2, _) = dims;
    let k = off / (n1 * n2);
    let i = (off / n2) % n1;
    let j = off % n2;
    let n = extent(dims, axis);
    let step = |v: usize| if forward { (v + 1) % n } else { (v + n - 1) % n };
    let (i, j, k) = match axis {
        DiffAxis::Y => (step(i), j, k),
        DiffAxis::X => (i, step(j), k),
        DiffAxis::T => (i, j, step(k)),
    };
    k * n1 * n2 + i * n2 + j
}

/// Circular forward difference `x(· + 1) − x(·)` along `axis`.
pub fn diff(x: &Tensor3, axis: DiffAxis) -> Tensor3 {
    let dims = x.dims();
    let src = x.data();
    let data = (0..src.len())
        .map(|off| src[shifted_offset(dims, axis, off, true)] - src[off])
        .collect();
    Tensor3::from_raw(dims, data)
}

/// Adjoint of [`diff`]: `g(· − 1) − g(·)`.
pub fn diff_adjoint(g: &Tensor3, axis: DiffAxis) -> Tensor3 {
    let dims = g.dims();
    let src = g.data();
    let data = (0..src.len())
        .map(|off| src[shifted_offset(dims, axis, off, false)] - src[off])
        .collect();
    Tensor3::from_raw(dims, data)
}

/// Anisotropic total variation: `Σ_axis ‖diff(x, axis)‖₁`.
pub fn anisotropic_tv(x: &Tensor3, axes: &[DiffAxis]) -> f64 {
    axes.iter().map(|&a| diff(x, a).l1_norm()).sum()
}

/// Solves `(a·I + Σ_axis b_axis · diffᵀdiff) x = rhs` exactly. Circular
/// differences are diagonalized by the DFT along their axis, so the system
/// is inverted pointwise in the frequency domain.
pub fn solve_difference_system(rhs: &Tensor3, a: f64, terms: &[(DiffAxis, f64)]) -> Result<Tensor3> {
    let dims = rhs.dims();
    let axes: Vec<DiffAxis> = terms
        .iter()
        .filter(|(ax, b)| *b != 0.0 && extent(dims, *ax) > 1)
        .map(|(ax, _)| *ax)
        .collect();
    let mut buf: Vec<Complex64> = rhs.data().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    for &ax in &axes {
        fft_along(&mut buf, dims, ax, false);
    }
    let eig = |ax: DiffAxis, f: usize| {
        let n = extent(dims, ax) as f64;
        2.0 - 2.0 * (2.0 * std::f64::consts::PI * f as f64 / n).cos()
    };
    let (n1, n2, _) = dims;
    for (off, z) in buf.iter_mut().enumerate() {
        let idx = [(off / n2) % n1, off % n2, off / (n1 * n2)];
        let mut denom = a;
        for &(ax, b) in terms {
            if extent(dims, ax) > 1 {
                denom += b * eig(ax, idx[ax.index()]);
            }
        }
        if denom <= 0.0 {
            return Err(Error::InvalidArgument(
                "difference system is singular".into(),
            ));
        }
        *z /= denom;
    }
    for &ax in axes.iter().rev() {
        fft_along(&mut buf, dims, ax, true);
    }
    Ok(Tensor3::from_raw(dims, buf.iter().map(|z| z.re).collect()))
}

fn fft_along(buf: &mut [Complex64], dims: (usize, usize, usize), axis: DiffAxis, inverse: bool) {
    let n = extent(dims, axis);
    let mut planner = FftPlanner::<f64>::new();
    let fft = if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    };
    let (n1, n2, n3) = dims;
    let stride = match axis {
        DiffAxis::Y => n2,
        DiffAxis::X => 1,
        DiffAxis::T => n1 * n2,
    };
    let starts: Vec<usize> = match axis {
        DiffAxis::Y => (0..n3).flat_map(|k| (0..n2).map(move |j| k * n1 * n2 + j)).collect(),
        DiffAxis::X => (0..n3).flat_map(|k| (0..n1).map(move |i| k * n1 * n2 + i * n2)).collect(),
        DiffAxis::T => (0..n1 * n2).collect(),
    };
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let scale = if inverse { 1.0 / n as f64 } else { 1.0 };
    for s in starts {
        for (t, z) in line.iter_mut().enumerate() {
            *z = buf[s + t * stride];
        }
        fft.process_with_scratch(&mut line, &mut scratch);
        for (t, z) in line.iter().enumerate() {
            buf[s + t * stride] = *z * scale;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tprod::{identity_tensor, spectral_singular_values, tnn};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n1: usize, n2: usize, n3: usize, seed: u64) -> Tensor3 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Tensor3::from_fn(n1, n2, n3, |_, _, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn tsvt_trivial_cases() {
        let y = random(3, 4, 3, 1);
        assert_eq!(tsvt(&y, 0.0).unwrap(), y);
        let id = identity_tensor(4, 3);
        assert!(tsvt(&id, 0.5).unwrap().max_abs_diff(&id.scale(0.5)) < 1e-14);
        assert!(tsvt(&y, -1.0).is_err());
    }

    #[test]
    fn tsvt_shrinks_spectral_singulars() {
        let y = random(4, 4, 3, 2);
        let before = spectral_singular_values(&y).unwrap();
        let smax = before.iter().flatten().fold(0.0f64, |m, &v| m.max(v));
        for tau in [0.1, smax / 2.0, 2.0 * smax] {
            let after = spectral_singular_values(&tsvt(&y, tau).unwrap()).unwrap();
            for (b, a) in before.iter().zip(&after) {
                for (sb, sa) in b.iter().zip(a) {
                    assert!(((sb - tau).max(0.0) - sa).abs() <= 1e-9);
                }
            }
        }
    }

    #[test]
    fn tsvt_non_expansive_and_norm_decreasing() {
        let a = random(4, 3, 5, 3);
        let b = random(4, 3, 5, 4);
        let d = (&tsvt(&a, 0.3).unwrap() - &tsvt(&b, 0.3).unwrap()).frobenius_norm();
        assert!(d <= (&a - &b).frobenius_norm() + 1e-12);
        assert!(tnn(&tsvt(&a, 0.3).unwrap()).unwrap() < tnn(&a).unwrap());
    }

    #[test]
    fn weighted_tsvt_reductions() {
        let y = random(4, 5, 3, 5);
        assert_eq!(weighted_tsvt(&y, &WeightVector::constant(0.0)).unwrap(), y);
        let a = weighted_tsvt(&y, &WeightVector::constant(0.4)).unwrap();
        let b = tsvt(&y, 0.4).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-14);
        assert!(weighted_tsvt(&y, &WeightVector::PerIndex(vec![0.1, -1.0])).is_err());
        assert!(weighted_tsvt(&y, &WeightVector::PerIndex(vec![0.1, 0.2])).is_err());
    }

    #[test]
    fn reweighting_shrinks_small_singulars_more() {
        let y = random(5, 5, 3, 6);
        let before = spectral_singular_values(&y).unwrap();
        let after =
            spectral_singular_values(&weighted_tsvt(&y, &WeightVector::reweighted(0.05)).unwrap())
                .unwrap();
        for (b, a) in before.iter().zip(&after) {
            let rel: Vec<f64> = b.iter().zip(a).map(|(sb, sa)| sa / sb).collect();
            assert!(rel.windows(2).all(|w| w[0] >= w[1] - 1e-12), "{rel:?}");
        }
    }

    /// Minimizer of `τ|s| + ½(s − x)²` by dense grid search.
    fn grid_prox(x: f64, tau: f64) -> f64 {
        let mut best = (f64::INFINITY, 0.0);
        let steps = 200_000;
        for n in 0..=steps {
            let s = -4.0 + 8.0 * n as f64 / steps as f64;
            let f = tau * s.abs() + 0.5 * (s - x).powi(2);
            if f < best.0 {
                best = (f, s);
            }
        }
        best.1
    }

    #[test]
    fn soft_threshold_cases() {
        let t = Tensor3::new((1, 1, 2), vec![3.0, -0.5]).unwrap();
        assert_eq!(soft_threshold(&t, 1.0).unwrap().data(), &[2.0, 0.0]);
        assert!(soft_threshold(&t, -0.1).is_err());
        let x = random(2, 2, 2, 7).scale(3.0);
        let out = soft_threshold(&x, 0.7).unwrap();
        for (a, b) in x.data().iter().zip(out.data()) {
            assert!((grid_prox(*a, 0.7) - b).abs() < 1e-4);
        }
    }

    #[test]
    fn masked_soft_threshold_cases() {
        let x = random(3, 2, 2, 8).scale(2.0);
        let ones = Matrix::from_element(3, 2, 1.0);
        assert_eq!(masked_soft_threshold(&x, &ones, 0.5).unwrap(), soft_threshold(&x, 0.5).unwrap());
        let zeros = Matrix::zeros(3, 2);
        assert_eq!(masked_soft_threshold(&x, &zeros, 0.5).unwrap(), x);
        let w = Matrix::from_row_slice(3, 2, &[0.0, 0.25, 0.5, 0.75, 1.0, 0.1]);
        let out = masked_soft_threshold(&x, &w, 0.8).unwrap();
        for k in 0..2 {
            for i in 0..3 {
                for j in 0..2 {
                    let expect = grid_prox(x.get(i, j, k), 0.8 * w[(i, j)]);
                    assert!((out.get(i, j, k) - expect).abs() < 1e-4);
                }
            }
        }
        assert!(masked_soft_threshold(&x, &Matrix::zeros(2, 2), 0.5).is_err());
        assert!(masked_soft_threshold(&x, &Matrix::from_element(3, 2, 1.5), 0.5).is_err());
    }

    #[test]
    fn diff_cases() {
        let c = Tensor3::filled(3, 4, 5, 2.5);
        for ax in DiffAxis::ALL {
            assert_eq!(diff(&c, ax).max_abs(), 0.0);
        }
        let x = random(3, 4, 1, 9);
        assert_eq!(diff(&x, DiffAxis::T).max_abs(), 0.0);
        let x = random(3, 4, 5, 10);
        let dy = diff(&x, DiffAxis::Y);
        assert_eq!(dy.get(2, 1, 3), x.get(0, 1, 3) - x.get(2, 1, 3));
        let dx = diff(&x, DiffAxis::X);
        assert_eq!(dx.get(1, 0, 2), x.get(1, 1, 2) - x.get(1, 0, 2));
    }

    #[test]
    fn diff_adjoint_identity() {
        let x = random(3, 4, 5, 11);
        let g = random(3, 4, 5, 12);
        for ax in DiffAxis::ALL {
            let lhs = diff(&x, ax).inner_product(&g).unwrap();
            let rhs = x.inner_product(&diff_adjoint(&g, ax)).unwrap();
            assert!((lhs - rhs).abs() <= 1e-12);
        }
    }

    #[test]
    fn difference_system_solution() {
        let rhs = random(4, 5, 3, 13);
        let terms = [(DiffAxis::X, 0.7), (DiffAxis::Y, 1.3), (DiffAxis::T, 0.2)];
        let x = solve_difference_system(&rhs, 1.5, &terms).unwrap();
        let mut applied = x.scale(1.5);
        for (ax, b) in terms {
            applied = &applied + &diff_adjoint(&diff(&x, ax), ax).scale(b);
        }
        assert!(applied.max_abs_diff(&rhs) < 1e-12);
        assert!(solve_difference_system(&rhs, 0.0, &[(DiffAxis::X, 1.0)]).is_err());
    }
}
