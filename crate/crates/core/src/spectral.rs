//! Mode-3 DFT between real tensors and their complex frontal-slice images,
//! plus the complex SVD used on each Fourier slice.
//!
//! Forward transforms are unnormalized and inverse transforms carry the
//! `1/n3` factor, so `bcirc(x)` is unitarily similar to the block diagonal of
//! the spectral slices.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::tensor::Tensor3;

pub type CMatrix = DMatrix<Complex64>;

/// Relative tolerance for the conjugate-symmetry check in [`from_spectral`].
pub const SYMMETRY_TOL: f64 = 1e-8;

/// Singular values at or below this fraction of the largest one count as
/// zero for rank decisions.
pub const RANK_RTOL: f64 = 1e-12;

/// Complex frontal-slice stack: slice `k` holds DFT component `k` of every tube.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralTensor3 {
    dims: (usize, usize, usize),
    slices: Vec<CMatrix>,
}

impl SpectralTensor3 {
    pub fn new(slices: Vec<CMatrix>) -> Result<Self> {
        let first = slices
            .first()
            .ok_or_else(|| Error::InvalidArgument("no spectral slices".into()))?;
        let (n1, n2) = first.shape();
        if n1 == 0 || n2 == 0 {
            return Err(Error::InvalidArgument("empty spectral slice".into()));
        }
        if slices.iter().any(|s| s.shape() != (n1, n2)) {
            return Err(Error::DimMismatch("spectral slices differ in shape".into()));
        }
        Ok(Self {
            dims: (n1, n2, slices.len()),
            slices,
        })
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        self.dims
    }

    pub fn slices(&self) -> &[CMatrix] {
        &self.slices
    }

    pub fn slice(&self, k: usize) -> &CMatrix {
        &self.slices[k]
    }

    pub fn into_slices(self) -> Vec<CMatrix> {
        self.slices
    }

    /// Sum of squared moduli over every slice.
    pub fn norm_squared(&self) -> f64 {
        self.slices.iter().map(|s| s.norm_squared()).sum()
    }

    /// Largest deviation from `slice(k) = conj(slice(n3 − k))`, relative to
    /// the largest entry modulus.
    pub fn symmetry_defect(&self) -> f64 {
        let n3 = self.dims.2;
        let scale = self
            .slices
            .iter()
            .flat_map(|s| s.iter())
            .fold(0.0f64, |m, z| m.max(z.norm()));
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = self.slices[0]
            .iter()
            .fold(0.0f64, |m, z| m.max(z.im.abs()));
        for k in 1..n3 {
            let mirror = &self.slices[n3 - k];
            for (a, b) in self.slices[k].iter().zip(mirror.iter()) {
                worst = worst.max((a - b.conj()).norm());
            }
        }
        worst / scale
    }
}

/// Number of slices that must be computed independently for a
/// conjugate-symmetric stack of depth `n3`; the rest are mirrors.
pub fn independent_slices(n3: usize) -> usize {
    n3 / 2 + 1
}

/// Applies `f` to the independent spectral slices in parallel and fills the
/// mirrored ones by conjugation. Output order is schedule independent.
pub(crate) fn map_symmetric<T, F, C>(n3: usize, f: F, conj: C) -> Vec<T>
where
    T: Send + Clone,
    F: Fn(usize) -> T + Sync + Send,
    C: Fn(&T) -> T,
{
    let half = independent_slices(n3).min(n3);
    let mut head: Vec<T> = (0..half).into_par_iter().map(&f).collect();
    head.reserve(n3 - half);
    for k in half..n3 {
        let mirrored = conj(&head[n3 - k]);
        head.push(mirrored);
    }
    head
}

/// Unnormalized forward DFT of every tube.
pub fn to_spectral(x: &Tensor3) -> SpectralTensor3 {
    let (n1, n2, n3) = x.dims();
    let plane = n1 * n2;
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(n3);
    let mut buf = vec![Complex64::new(0.0, 0.0); n3];
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let mut slices = vec![CMatrix::zeros(n1, n2); n3];
    let data = x.data();
    for i in 0..n1 {
        for j in 0..n2 {
            let base = i * n2 + j;
            for (k, b) in buf.iter_mut().enumerate() {
                *b = Complex64::new(data[k * plane + base], 0.0);
            }
            fft.process_with_scratch(&mut buf, &mut scratch);
            for (k, b) in buf.iter().enumerate() {
                slices[k][(i, j)] = *b;
            }
        }
    }
    SpectralTensor3 {
        dims: (n1, n2, n3),
        slices,
    }
}

/// Inverse DFT (scaled by `1/n3`) of every tube. Fails if the input is not
/// the image of a real tensor.
pub fn from_spectral(s: &SpectralTensor3) -> Result<Tensor3> {
    let defect = s.symmetry_defect();
    if defect > SYMMETRY_TOL {
        return Err(Error::SpectralAsymmetry(defect));
    }
    Ok(inverse_unchecked(s))
}

pub(crate) fn inverse_unchecked(s: &SpectralTensor3) -> Tensor3 {
    let (n1, n2, n3) = s.dims;
    let plane = n1 * n2;
    let mut planner = FftPlanner::<f64>::new();
    let ifft = planner.plan_fft_inverse(n3);
    let mut buf = vec![Complex64::new(0.0, 0.0); n3];
    let mut scratch = vec![Complex64::new(0.0, 0.0); ifft.get_inplace_scratch_len()];
    let mut data = vec![0.0; plane * n3];
    let inv = 1.0 / n3 as f64;
    for i in 0..n1 {
        for j in 0..n2 {
            for (k, b) in buf.iter_mut().enumerate() {
                *b = s.slices[k][(i, j)];
            }
            ifft.process_with_scratch(&mut buf, &mut scratch);
            let base = i * n2 + j;
            for (k, b) in buf.iter().enumerate() {
                data[k * plane + base] = b.re * inv;
            }
        }
    }
    Tensor3::from_raw((n1, n2, n3), data)
}

/// Thin-or-full complex SVD `a = u · diag(s) · vᴴ`.
///
/// `u` is `m × m` and `v` is `n × n`, both unitary; `s` has `min(m, n)`
/// entries, non-negative and non-increasing.
#[derive(Debug, Clone)]
pub struct ComplexSvd {
    pub u: CMatrix,
    pub s: Vec<f64>,
    pub v: CMatrix,
}

impl ComplexSvd {
    /// Rebuilds `u · diag(s) · vᴴ` (rectangular diagonal).
    pub fn reconstruct(&self) -> CMatrix {
        let (m, n) = (self.u.nrows(), self.v.nrows());
        let mut us = CMatrix::zeros(m, n);
        for (c, &sv) in self.s.iter().enumerate() {
            for r in 0..m {
                us[(r, c)] = self.u[(r, c)] * sv;
            }
        }
        us * self.v.adjoint()
    }

    /// Count of singular values above `rtol · s_max`.
    pub fn rank(&self, rtol: f64) -> usize {
        let smax = self.s.first().copied().unwrap_or(0.0);
        if smax == 0.0 {
            return 0;
        }
        self.s.iter().filter(|&&v| v > rtol * smax).count()
    }
}

const MAX_SWEEPS: usize = 80;

/// One-sided (Hestenes) Jacobi SVD of a complex matrix.
///
/// Columns are orthogonalized pairwise by complex Jacobi rotations until
/// every pair is orthogonal to working precision. Each column of `u` is
/// rotated so its largest-modulus entry is real and non-negative.
pub fn complex_svd(a: &CMatrix) -> Result<ComplexSvd> {
    if let Some(pos) = a.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite(pos));
    }
    let (m, n) = a.shape();
    let mut out = if m >= n {
        jacobi_tall(a, true)?
    } else {
        let t = jacobi_tall(&a.adjoint(), true)?;
        ComplexSvd {
            u: t.v,
            s: t.s,
            v: t.u,
        }
    };
    fix_phases(&mut out);
    Ok(out)
}

/// Economy SVD for thresholding: `u` is `m × k`, `v` is `n × k` with
/// `k = min(m, n)`. Columns of `u` paired with zero singular values are zero
/// and no phase normalization is applied.
pub(crate) fn thin_svd(a: &CMatrix) -> Result<ComplexSvd> {
    let (m, n) = a.shape();
    if m >= n {
        jacobi_tall(a, false)
    } else {
        let t = jacobi_tall(&a.adjoint(), false)?;
        Ok(ComplexSvd {
            u: t.v,
            s: t.s,
            v: t.u,
        })
    }
}

fn jacobi_tall(a: &CMatrix, full: bool) -> Result<ComplexSvd> {
    let (m, n) = a.shape();
    // work at unit scale so squared column norms neither underflow nor overflow
    let scale = a.iter().fold(0.0f64, |acc, z| acc.max(z.norm()));
    let mut w = if scale > 0.0 { a.unscale(scale) } else { a.clone() };
    let mut v = CMatrix::identity(n, n);
    let eps = f64::EPSILON;

    let mut norms: Vec<f64> = (0..n).map(|j| col_norm_sq(w.as_slice(), m, j)).collect();
    let mut sweeps = 0;
    loop {
        let mut rotated = false;
        let mut off = 0.0f64;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = norms[p];
                let beta = norms[q];
                let gamma = col_dot(w.as_slice(), m, p, q);
                let g = gamma.norm();
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                let rel = g / (alpha.sqrt() * beta.sqrt());
                off = off.max(rel);
                if !(rel > eps * m as f64) {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + zeta.hypot(1.0));
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(w.as_mut_slice(), m, p, q, c, s, phase.conj());
                rotate(v.as_mut_slice(), n, p, q, c, s, phase.conj());
                norms[p] = col_norm_sq(w.as_slice(), m, p);
                norms[q] = col_norm_sq(w.as_slice(), m, q);
            }
        }
        sweeps += 1;
        if !rotated {
            break;
        }
        if sweeps >= MAX_SWEEPS {
            return Err(Error::SvdNonConvergence {
                sweeps,
                residual: off,
            });
        }
    }

    let mut sv: Vec<f64> = norms.iter().map(|x| x.sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sv[j].total_cmp(&sv[i]).then(i.cmp(&j)));

    let smax = order.first().map(|&i| sv[i]).unwrap_or(0.0);
    let cutoff = smax * eps * (m.max(n) as f64);
    let mut u = CMatrix::zeros(m, if full { m } else { n });
    let mut vs = CMatrix::zeros(n, n);
    let mut filled = 0;
    for (dst, &src) in order.iter().enumerate() {
        vs.set_column(dst, &v.column(src));
        if sv[src] > cutoff && sv[src] > 0.0 {
            let inv = 1.0 / sv[src];
            for r in 0..m {
                u[(r, dst)] = w[(r, src)] * inv;
            }
            filled = dst + 1;
        }
    }
    sv = order.iter().map(|&i| sv[i] * scale).collect();
    if full {
        complete_orthonormal(&mut u, filled);
    }
    Ok(ComplexSvd { u, s: sv, v: vs })
}

#[inline]
fn col_norm_sq(data: &[Complex64], m: usize, j: usize) -> f64 {
    data[j * m..(j + 1) * m].iter().map(|z| z.norm_sqr()).sum()
}

#[inline]
fn col_dot(data: &[Complex64], m: usize, p: usize, q: usize) -> Complex64 {
    let (cp, cq) = (&data[p * m..(p + 1) * m], &data[q * m..(q + 1) * m]);
    cp.iter().zip(cq).map(|(a, b)| a.conj() * b).sum()
}

/// `col_p ← c·col_p − s·e·col_q`, `col_q ← s·col_p + c·e·col_q` with `|e| = 1`.
#[inline]
fn rotate(data: &mut [Complex64], m: usize, p: usize, q: usize, c: f64, s: f64, e: Complex64) {
    let (lo, hi) = data.split_at_mut(q * m);
    let cp = &mut lo[p * m..(p + 1) * m];
    let cq = &mut hi[..m];
    for (a, b) in cp.iter_mut().zip(cq.iter_mut()) {
        let bq = *b * e;
        let ap = *a;
        *a = ap * c - bq * s;
        *b = ap * s + bq * c;
    }
}

/// Extends the first `filled` orthonormal columns of `u` to a unitary basis
/// by Gram–Schmidt over the standard basis.
fn complete_orthonormal(u: &mut CMatrix, filled: usize) {
    let m = u.nrows();
    let mut next = filled;
    let mut e = 0;
    while next < m && e < m {
        let mut cand = nalgebra::DVector::<Complex64>::zeros(m);
        cand[e] = Complex64::new(1.0, 0.0);
        for _ in 0..2 {
            for c in 0..next {
                let col = u.column(c);
                let proj: Complex64 = col.iter().zip(cand.iter()).map(|(a, b)| a.conj() * b).sum();
                for r in 0..m {
                    cand[r] -= col[r] * proj;
                }
            }
        }
        let nrm = cand.norm();
        if nrm > 1e-6 {
            u.set_column(next, &(cand / Complex64::new(nrm, 0.0)));
            next += 1;
        }
        e += 1;
    }
}

fn fix_phases(svd: &mut ComplexSvd) {
    let k = svd.s.len();
    for c in 0..svd.u.ncols() {
        let col = svd.u.column(c);
        let (mut best, mut mag) = (0, -1.0);
        for (r, z) in col.iter().enumerate() {
            if z.norm() > mag + 1e-14 {
                mag = z.norm();
                best = r;
            }
        }
        let z = col[best];
        if z.norm() == 0.0 {
            continue;
        }
        let rot = z.conj() / z.norm();
        for r in 0..svd.u.nrows() {
            svd.u[(r, c)] *= rot;
        }
        if c < k {
            for r in 0..svd.v.nrows() {
                svd.v[(r, c)] *= rot;
            }
        }
    }
}
