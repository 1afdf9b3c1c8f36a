//! Dense third-order tensors and the slice/fiber rearrangements built on them.
//!
//! Storage is frontal-slice-major: the entry `(i, j, k)` of an `n1 × n2 × n3`
//! tensor lives at offset `k·n1·n2 + i·n2 + j`. All indices in this API are
//! 0-based.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Real dense matrix used for slices, unfoldings and block matrices.
pub type Matrix = DMatrix<f64>;

/// Which family of 2-D sections [`Tensor3::slice`] extracts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SliceAxis {
    /// `x(k, :, :)`, an `n2 × n3` matrix.
    Horizontal,
    /// `x(:, k, :)`, an `n1 × n3` matrix.
    Lateral,
    /// `x(:, :, k)`, an `n1 × n2` matrix.
    Frontal,
}

/// Dense real `n1 × n2 × n3` tensor. Every entry is finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    dims: (usize, usize, usize),
    data: Vec<f64>,
}

impl Tensor3 {
    /// Wraps `data` laid out frontal-slice-major. Rejects wrong lengths,
    /// zero extents and non-finite entries.
    pub fn new(dims: (usize, usize, usize), data: Vec<f64>) -> Result<Self> {
        check_dims(dims)?;
        let (n1, n2, n3) = dims;
        if data.len() != n1 * n2 * n3 {
            return Err(Error::DimMismatch(format!(
                "{} values for dims {}x{}x{}",
                data.len(),
                n1,
                n2,
                n3
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(pos));
        }
        Ok(Self { dims, data })
    }

    pub fn zeros(n1: usize, n2: usize, n3: usize) -> Self {
        assert!(n1 > 0 && n2 > 0 && n3 > 0, "tensor extents must be positive");
        Self {
            dims: (n1, n2, n3),
            data: vec![0.0; n1 * n2 * n3],
        }
    }

    pub fn filled(n1: usize, n2: usize, n3: usize, value: f64) -> Self {
        assert!(value.is_finite());
        let mut t = Self::zeros(n1, n2, n3);
        t.data.fill(value);
        t
    }

    /// Builds a tensor entry by entry. Panics if `f` yields a non-finite value.
    pub fn from_fn(
        n1: usize,
        n2: usize,
        n3: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Self {
        let mut t = Self::zeros(n1, n2, n3);
        let mut off = 0;
        for k in 0..n3 {
            for i in 0..n1 {
                for j in 0..n2 {
                    let v = f(i, j, k);
                    assert!(v.is_finite(), "non-finite entry at ({i}, {j}, {k})");
                    t.data[off] = v;
                    off += 1;
                }
            }
        }
        t
    }

    /// Stacks equally shaped matrices as frontal slices.
    pub fn from_frontal_slices(slices: &[Matrix]) -> Result<Self> {
        let first = slices
            .first()
            .ok_or_else(|| Error::InvalidArgument("no frontal slices".into()))?;
        let (n1, n2) = first.shape();
        let mut data = Vec::with_capacity(n1 * n2 * slices.len());
        for s in slices {
            if s.shape() != (n1, n2) {
                return Err(Error::DimMismatch(format!(
                    "frontal slice {:?} differs from {:?}",
                    s.shape(),
                    (n1, n2)
                )));
            }
            for i in 0..n1 {
                for j in 0..n2 {
                    data.push(s[(i, j)]);
                }
            }
        }
        Self::new((n1, n2, slices.len()), data)
    }

    /// Trusted constructor for data produced by finite arithmetic inside the crate.
    pub(crate) fn from_raw(dims: (usize, usize, usize), data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), dims.0 * dims.1 * dims.2);
        debug_assert!(data.iter().all(|v| v.is_finite()));
        Self { dims, data }
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn offset(&self, i: usize, j: usize, k: usize) -> usize {
        let (n1, n2, _) = self.dims;
        k * n1 * n2 + i * n2 + j
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[self.offset(i, j, k)]
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Frontal slice `k` as an `n1 × n2` matrix.
    pub fn frontal(&self, k: usize) -> Matrix {
        let (n1, n2, _) = self.dims;
        let base = k * n1 * n2;
        Matrix::from_row_slice(n1, n2, &self.data[base..base + n1 * n2])
    }

    pub fn frontal_slices(&self) -> Vec<Matrix> {
        (0..self.dims.2).map(|k| self.frontal(k)).collect()
    }

    pub fn slice(&self, axis: SliceAxis, k: usize) -> Result<Matrix> {
        let (n1, n2, n3) = self.dims;
        let extent = match axis {
            SliceAxis::Horizontal => n1,
            SliceAxis::Lateral => n2,
            SliceAxis::Frontal => n3,
        };
        if k >= extent {
            return Err(Error::IndexOutOfRange { index: k, extent });
        }
        Ok(match axis {
            SliceAxis::Horizontal => Matrix::from_fn(n2, n3, |j, t| self.get(k, j, t)),
            SliceAxis::Lateral => Matrix::from_fn(n1, n3, |i, t| self.get(i, k, t)),
            SliceAxis::Frontal => self.frontal(k),
        })
    }

    /// The mode-3 fiber `x(i, j, :)`.
    pub fn tube(&self, i: usize, j: usize) -> Vec<f64> {
        (0..self.dims.2).map(|k| self.get(i, j, k)).collect()
    }

    /// Mode-`mode` unfolding. Columns are the mode fibers ordered
    /// lexicographically over the remaining indices, lower index fastest.
    pub fn unfold(&self, mode: usize) -> Result<Matrix> {
        let (n1, n2, n3) = self.dims;
        match mode {
            1 => Ok(Matrix::from_fn(n1, n2 * n3, |i, c| {
                self.get(i, c % n2, c / n2)
            })),
            2 => Ok(Matrix::from_fn(n2, n1 * n3, |j, c| {
                self.get(c % n1, j, c / n1)
            })),
            3 => Ok(Matrix::from_fn(n3, n1 * n2, |k, c| {
                self.get(c % n1, c / n1, k)
            })),
            _ => Err(Error::InvalidArgument(format!("unfold mode {mode}"))),
        }
    }

    /// Inverse of [`Tensor3::unfold`].
    pub fn fold(m: &Matrix, mode: usize, dims: (usize, usize, usize)) -> Result<Self> {
        check_dims(dims)?;
        let (n1, n2, n3) = dims;
        let expect = match mode {
            1 => (n1, n2 * n3),
            2 => (n2, n1 * n3),
            3 => (n3, n1 * n2),
            _ => return Err(Error::InvalidArgument(format!("fold mode {mode}"))),
        };
        if m.shape() != expect {
            return Err(Error::DimMismatch(format!(
                "mode-{mode} fold of {:?} into {n1}x{n2}x{n3}",
                m.shape()
            )));
        }
        let t = match mode {
            1 => Self::from_fn(n1, n2, n3, |i, j, k| m[(i, j + k * n2)]),
            2 => Self::from_fn(n1, n2, n3, |i, j, k| m[(j, i + k * n1)]),
            _ => Self::from_fn(n1, n2, n3, |i, j, k| m[(k, i + j * n1)]),
        };
        Ok(t)
    }

    /// Block-circulant matrix: block `(r, c)` is frontal slice `(r − c) mod n3`.
    pub fn bcirc(&self) -> Matrix {
        let (n1, n2, n3) = self.dims;
        let mut out = Matrix::zeros(n1 * n3, n2 * n3);
        for r in 0..n3 {
            for c in 0..n3 {
                let k = (r + n3 - c) % n3;
                for i in 0..n1 {
                    for j in 0..n2 {
                        out[(r * n1 + i, c * n2 + j)] = self.get(i, j, k);
                    }
                }
            }
        }
        out
    }

    /// Frontal slices stacked vertically, `(n1·n3) × n2`.
    pub fn bvec(&self) -> Matrix {
        let (n1, n2, n3) = self.dims;
        Matrix::from_fn(n1 * n3, n2, |r, j| self.get(r % n1, j, r / n1))
    }

    pub fn bvfold(m: &Matrix, dims: (usize, usize, usize)) -> Result<Self> {
        check_dims(dims)?;
        let (n1, n2, n3) = dims;
        if m.shape() != (n1 * n3, n2) {
            return Err(Error::DimMismatch(format!(
                "bvfold of {:?} into {n1}x{n2}x{n3}",
                m.shape()
            )));
        }
        Ok(Self::from_fn(n1, n2, n3, |i, j, k| m[(k * n1 + i, j)]))
    }

    /// Frontal slices on the block diagonal, `(n1·n3) × (n2·n3)`.
    pub fn bdiag(&self) -> Matrix {
        let (n1, n2, n3) = self.dims;
        let mut out = Matrix::zeros(n1 * n3, n2 * n3);
        for k in 0..n3 {
            for i in 0..n1 {
                for j in 0..n2 {
                    out[(k * n1 + i, k * n2 + j)] = self.get(i, j, k);
                }
            }
        }
        out
    }

    pub fn bdfold(m: &Matrix, dims: (usize, usize, usize)) -> Result<Self> {
        check_dims(dims)?;
        let (n1, n2, n3) = dims;
        if m.shape() != (n1 * n3, n2 * n3) {
            return Err(Error::DimMismatch(format!(
                "bdfold of {:?} into {n1}x{n2}x{n3}",
                m.shape()
            )));
        }
        Ok(Self::from_fn(n1, n2, n3, |i, j, k| {
            m[(k * n1 + i, k * n2 + j)]
        }))
    }

    /// `m × n × t` to `m × t × n`; lateral slice `k` of the result is frontal
    /// slice `k` of `self`.
    pub fn twist(&self) -> Self {
        let (n1, n2, n3) = self.dims;
        Self::from_fn(n1, n3, n2, |i, k, j| self.get(i, j, k))
    }

    pub fn squeeze(&self) -> Self {
        let (n1, n3, n2) = self.dims;
        Self::from_fn(n1, n2, n3, |i, j, k| self.get(i, k, j))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn l1_norm(&self) -> f64 {
        self.data.iter().map(|v| v.abs()).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn inner_product(&self, other: &Self) -> Result<f64> {
        self.check_same_dims(other)?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum())
    }

    /// Keeps entries inside `mask`, zeroes the rest.
    pub fn project_mask(&self, mask: &Mask3) -> Result<Self> {
        if mask.dims() != self.dims {
            return Err(Error::DimMismatch(format!(
                "mask {:?} vs tensor {:?}",
                mask.dims(),
                self.dims
            )));
        }
        let data = self
            .data
            .iter()
            .zip(mask.data())
            .map(|(&v, &m)| if m { v } else { 0.0 })
            .collect();
        Ok(Self::from_raw(self.dims, data))
    }

    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Self {
        let data: Vec<f64> = self.data.iter().map(|&v| f(v)).collect();
        assert!(data.iter().all(|v| v.is_finite()), "map produced non-finite value");
        Self::from_raw(self.dims, data)
    }

    /// Entrywise combination of two equally shaped tensors.
    pub fn zip_map(&self, other: &Self, mut f: impl FnMut(f64, f64) -> f64) -> Result<Self> {
        self.check_same_dims(other)?;
        let data: Vec<f64> = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| f(a, b))
            .collect();
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(pos));
        }
        Ok(Self::from_raw(self.dims, data))
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| v * c)
    }

    pub fn check_same_dims(&self, other: &Self) -> Result<()> {
        if self.dims != other.dims {
            return Err(Error::DimMismatch(format!(
                "{:?} vs {:?}",
                self.dims, other.dims
            )));
        }
        Ok(())
    }

    /// `self += alpha · other`, used by solver inner loops.
    pub(crate) fn axpy(&mut self, alpha: f64, other: &Self) {
        debug_assert_eq!(self.dims, other.dims);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
    }

    /// Largest entrywise difference; panics on mismatched dims.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dims, other.dims);
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

fn check_dims(dims: (usize, usize, usize)) -> Result<()> {
    if dims.0 == 0 || dims.1 == 0 || dims.2 == 0 {
        return Err(Error::InvalidArgument(format!(
            "tensor extents must be positive, got {dims:?}"
        )));
    }
    Ok(())
}

macro_rules! binop {
    ($tr:ident, $method:ident, $op:tt) => {
        impl $tr<&Tensor3> for &Tensor3 {
            type Output = Tensor3;
            fn $method(self, rhs: &Tensor3) -> Tensor3 {
                assert_eq!(self.dims, rhs.dims, "tensor dims differ");
                let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a $op b).collect();
                Tensor3::from_raw(self.dims, data)
            }
        }
        impl $tr<Tensor3> for Tensor3 {
            type Output = Tensor3;
            fn $method(self, rhs: Tensor3) -> Tensor3 {
                (&self).$method(&rhs)
            }
        }
        impl $tr<&Tensor3> for Tensor3 {
            type Output = Tensor3;
            fn $method(self, rhs: &Tensor3) -> Tensor3 {
                (&self).$method(rhs)
            }
        }
    };
}

binop!(Add, add, +);
binop!(Sub, sub, -);

impl Mul<f64> for &Tensor3 {
    type Output = Tensor3;
    fn mul(self, c: f64) -> Tensor3 {
        self.scale(c)
    }
}

impl Mul<f64> for Tensor3 {
    type Output = Tensor3;
    fn mul(self, c: f64) -> Tensor3 {
        self.scale(c)
    }
}

impl Neg for &Tensor3 {
    type Output = Tensor3;
    fn neg(self) -> Tensor3 {
        self.scale(-1.0)
    }
}

/// Boolean `n1 × n2 × n3` array in the same layout as [`Tensor3`]; used as
/// the observation set of completion problems.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask3 {
    dims: (usize, usize, usize),
    data: Vec<bool>,
}

impl Mask3 {
    pub fn new(dims: (usize, usize, usize), data: Vec<bool>) -> Result<Self> {
        check_dims(dims)?;
        if data.len() != dims.0 * dims.1 * dims.2 {
            return Err(Error::DimMismatch(format!(
                "{} flags for dims {dims:?}",
                data.len()
            )));
        }
        Ok(Self { dims, data })
    }

    pub fn filled(n1: usize, n2: usize, n3: usize, value: bool) -> Self {
        assert!(n1 > 0 && n2 > 0 && n3 > 0, "mask extents must be positive");
        Self {
            dims: (n1, n2, n3),
            data: vec![value; n1 * n2 * n3],
        }
    }

    pub fn from_fn(
        n1: usize,
        n2: usize,
        n3: usize,
        mut f: impl FnMut(usize, usize, usize) -> bool,
    ) -> Self {
        let mut m = Self::filled(n1, n2, n3, false);
        let mut off = 0;
        for k in 0..n3 {
            for i in 0..n1 {
                for j in 0..n2 {
                    m.data[off] = f(i, j, k);
                    off += 1;
                }
            }
        }
        m
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        self.dims
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> bool {
        let (n1, n2, _) = self.dims;
        self.data[k * n1 * n2 + i * n2 + j]
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn is_all(&self) -> bool {
        self.data.iter().all(|&b| b)
    }

    pub fn complement(&self) -> Self {
        Self {
            dims: self.dims,
            data: self.data.iter().map(|b| !b).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n1: usize, n2: usize, n3: usize, seed: u64) -> Tensor3 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Tensor3::from_fn(n1, n2, n3, |_, _, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn constructor_rejects_bad_input() {
        assert!(matches!(
            Tensor3::new((2, 2, 1), vec![0.0; 3]),
            Err(Error::DimMismatch(_))
        ));
        assert_eq!(
            Tensor3::new((1, 1, 2), vec![0.0, f64::NAN]),
            Err(Error::NonFinite(1))
        );
        assert!(Tensor3::new((0, 1, 1), vec![]).is_err());
    }

    #[test]
    fn scalar_frontal_slice() {
        let t = Tensor3::new((1, 1, 1), vec![5.0]).unwrap();
        assert_eq!(t.slice(SliceAxis::Frontal, 0).unwrap(), Matrix::from_element(1, 1, 5.0));
        assert_eq!(
            t.slice(SliceAxis::Frontal, 1),
            Err(Error::IndexOutOfRange { index: 1, extent: 1 })
        );
    }

    #[test]
    fn slices_match_direct_indexing() {
        let t = random(3, 4, 2, 1);
        for k in 0..2 {
            let f = t.slice(SliceAxis::Frontal, k).unwrap();
            for i in 0..3 {
                for j in 0..4 {
                    assert_eq!(f[(i, j)], t.data()[k * 12 + i * 4 + j]);
                }
            }
        }
        let h = t.slice(SliceAxis::Horizontal, 2).unwrap();
        assert_eq!(h.shape(), (4, 2));
        assert_eq!(h[(3, 1)], t.get(2, 3, 1));
        let l = t.slice(SliceAxis::Lateral, 1).unwrap();
        assert_eq!(l.shape(), (3, 2));
        assert_eq!(l[(2, 0)], t.get(2, 1, 0));
    }

    #[test]
    fn unfold_layout_and_roundtrip() {
        let t = random(2, 3, 4, 2);
        let m1 = t.unfold(1).unwrap();
        assert_eq!(m1.shape(), (2, 12));
        for i in 0..2 {
            for j in 0..3 {
                for k in 0..4 {
                    assert_eq!(m1[(i, j + 3 * k)], t.get(i, j, k));
                }
            }
        }
        for mode in 1..=3 {
            let m = t.unfold(mode).unwrap();
            assert_eq!(Tensor3::fold(&m, mode, t.dims()).unwrap(), t);
        }
        assert!(t.unfold(4).is_err());
        assert!(Tensor3::fold(&m1, 2, t.dims()).is_err());
    }

    #[test]
    fn mode3_unfold_of_tube_is_a_column() {
        let t = Tensor3::new((1, 1, 4), vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let m = t.unfold(3).unwrap();
        assert_eq!(m.shape(), (4, 1));
        assert_eq!(m.column(0).iter().copied().collect::<Vec<_>>(), t.tube(0, 0));
    }

    #[test]
    fn bcirc_of_tube() {
        let t = Tensor3::new((1, 1, 3), vec![1.0, 2.0, 3.0]).unwrap();
        let (a, b, c) = (1.0, 2.0, 3.0);
        let expect = Matrix::from_row_slice(3, 3, &[a, c, b, b, a, c, c, b, a]);
        assert_eq!(t.bcirc(), expect);
        let single = random(2, 3, 1, 3);
        assert_eq!(single.bcirc(), single.frontal(0));
    }

    #[test]
    fn block_folds_roundtrip() {
        let t = random(3, 2, 4, 4);
        assert_eq!(Tensor3::bvfold(&t.bvec(), t.dims()).unwrap(), t);
        assert_eq!(Tensor3::bdfold(&t.bdiag(), t.dims()).unwrap(), t);
        let tube = Tensor3::new((1, 1, 2), vec![2.0, 7.0]).unwrap();
        assert_eq!(tube.bdiag(), Matrix::from_diagonal(&nalgebra::dvector![2.0, 7.0]));
        assert!(Tensor3::bvfold(&t.bvec(), (3, 2, 3)).is_err());
    }

    #[test]
    fn block_norms() {
        let t = random(2, 3, 5, 5);
        let f = t.frobenius_norm();
        assert!((t.bvec().norm() - f).abs() < 1e-12);
        assert!((t.bcirc().norm() - 5f64.sqrt() * f).abs() < 1e-12);
    }

    #[test]
    fn twist_squeeze() {
        let t = random(2, 3, 4, 6);
        let tw = t.twist();
        assert_eq!(tw.dims(), (2, 4, 3));
        for i in 0..2 {
            for j in 0..3 {
                for k in 0..4 {
                    assert_eq!(tw.get(i, k, j), t.get(i, j, k));
                }
            }
        }
        assert_eq!(tw.squeeze(), t);
        assert_eq!(random(3, 2, 1, 7).twist().dims(), (3, 1, 2));
        for k in 0..4 {
            assert_eq!(tw.slice(SliceAxis::Lateral, k).unwrap(), t.frontal(k));
        }
    }

    #[test]
    fn norms_of_zero_and_ones() {
        let z = Tensor3::zeros(2, 3, 2);
        assert_eq!(z.frobenius_norm(), 0.0);
        assert_eq!(z.l1_norm(), 0.0);
        assert_eq!(z.inner_product(&z).unwrap(), 0.0);
        let n = 4;
        let id = Tensor3::from_fn(n, n, 3, |i, j, k| if k == 0 && i == j { 1.0 } else { 0.0 });
        assert!((id.frobenius_norm() - 2.0).abs() < 1e-15);
        assert_eq!(id.l1_norm(), 4.0);
    }

    #[test]
    fn inner_product_matches_bdiag_trace() {
        let x = random(2, 2, 3, 8);
        let y = random(2, 2, 3, 9);
        let oracle = (x.bdiag().transpose() * y.bdiag()).trace();
        assert!((x.inner_product(&y).unwrap() - oracle).abs() < 1e-12);
        assert!(x.inner_product(&random(2, 2, 2, 1)).is_err());
    }

    #[test]
    fn mask_projection() {
        let x = random(3, 3, 2, 10);
        let all = Mask3::filled(3, 3, 2, true);
        assert_eq!(x.project_mask(&all).unwrap(), x);
        let none = Mask3::filled(3, 3, 2, false);
        assert_eq!(x.project_mask(&none).unwrap(), Tensor3::zeros(3, 3, 2));
        let half = Mask3::from_fn(3, 3, 2, |i, j, k| (i + j + k) % 2 == 0);
        let p = x.project_mask(&half).unwrap();
        assert_eq!(p.project_mask(&half).unwrap(), p);
        let y = random(3, 3, 2, 11);
        let lhs = p.inner_product(&y).unwrap();
        let rhs = x.inner_product(&y.project_mask(&half).unwrap()).unwrap();
        assert!((lhs - rhs).abs() < 1e-12);
        assert!(x.project_mask(&Mask3::filled(3, 3, 1, true)).is_err());
    }
}
