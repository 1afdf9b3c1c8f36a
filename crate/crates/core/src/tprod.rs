//! t-product algebra: products, transpose, identity, t-SVD, multirank and
//! the tensor nuclear norm.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{self, complex_svd, map_symmetric, CMatrix, SpectralTensor3};
use crate::tensor::Tensor3;

/// t-SVD factors `x = u * s * vᵀ`.
#[derive(Debug, Clone)]
pub struct TSvdFactors {
    /// `n1 × n1 × n3`, unitary.
    pub u: Tensor3,
    /// `n1 × n2 × n3`, f-diagonal.
    pub s: Tensor3,
    /// `n2 × n2 × n3`, unitary.
    pub v: Tensor3,
    /// Singular values of every spectral slice, non-increasing per slice.
    pub spectral_singulars: Vec<Vec<f64>>,
}

impl TSvdFactors {
    pub fn reconstruct(&self) -> Tensor3 {
        let us = t_product(&self.u, &self.s).expect("conformal t-SVD factors");
        t_product(&us, &t_transpose(&self.v)).expect("conformal t-SVD factors")
    }
}

fn conj_matrix(m: &CMatrix) -> CMatrix {
    m.map(|z| z.conj())
}

/// Fast t-product: slice-wise matrix products in the Fourier domain.
pub fn t_product(x: &Tensor3, y: &Tensor3) -> Result<Tensor3> {
    let (n1, n2, n3) = x.dims();
    let (m2, n4, m3) = y.dims();
    if n2 != m2 || n3 != m3 {
        return Err(Error::DimMismatch(format!(
            "t-product of {n1}x{n2}x{n3} and {m2}x{n4}x{m3}"
        )));
    }
    let xf = spectral::to_spectral(x);
    let yf = spectral::to_spectral(y);
    let zf = map_symmetric(n3, |k| xf.slice(k) * yf.slice(k), conj_matrix);
    Ok(spectral::inverse_unchecked(&SpectralTensor3::new(zf)?))
}

/// Reference t-product `bvfold(bcirc(x) · bvec(y))`, materializing the
/// block-circulant matrix.
pub fn t_product_circulant(x: &Tensor3, y: &Tensor3) -> Result<Tensor3> {
    let (n1, n2, n3) = x.dims();
    let (m2, n4, m3) = y.dims();
    if n2 != m2 || n3 != m3 {
        return Err(Error::DimMismatch(format!(
            "t-product of {n1}x{n2}x{n3} and {m2}x{n4}x{m3}"
        )));
    }
    Tensor3::bvfold(&(x.bcirc() * y.bvec()), (n1, n4, n3))
}

/// Transposes every frontal slice and reverses the order of slices 2..n3.
pub fn t_transpose(x: &Tensor3) -> Tensor3 {
    let (n1, n2, n3) = x.dims();
    Tensor3::from_fn(n2, n1, n3, |i, j, k| x.get(j, i, (n3 - k) % n3))
}

/// `I_n` in the first frontal slice, zeros elsewhere.
pub fn identity_tensor(n: usize, n3: usize) -> Tensor3 {
    Tensor3::from_fn(n, n, n3, |i, j, k| if k == 0 && i == j { 1.0 } else { 0.0 })
}

/// Computes the t-SVD slice-wise in the Fourier domain.
pub fn t_svd(x: &Tensor3) -> Result<TSvdFactors> {
    let (n1, n2, n3) = x.dims();
    let xf = spectral::to_spectral(x);
    let svds = map_symmetric(
        n3,
        |k| complex_svd(xf.slice(k)),
        |r| {
            r.clone().map(|s| spectral::ComplexSvd {
                u: conj_matrix(&s.u),
                s: s.s,
                v: conj_matrix(&s.v),
            })
        },
    );
    let svds: Vec<_> = svds.into_iter().collect::<Result<_>>()?;

    let mut uf = Vec::with_capacity(n3);
    let mut sf = Vec::with_capacity(n3);
    let mut vf = Vec::with_capacity(n3);
    let mut singulars = Vec::with_capacity(n3);
    for svd in svds {
        let mut sigma = CMatrix::zeros(n1, n2);
        for (i, &s) in svd.s.iter().enumerate() {
            sigma[(i, i)] = Complex64::new(s, 0.0);
        }
        uf.push(svd.u);
        vf.push(svd.v);
        sf.push(sigma);
        singulars.push(svd.s);
    }
    Ok(TSvdFactors {
        u: spectral::from_spectral(&SpectralTensor3::new(uf)?)?,
        s: spectral::from_spectral(&SpectralTensor3::new(sf)?)?,
        v: spectral::from_spectral(&SpectralTensor3::new(vf)?)?,
        spectral_singulars: singulars,
    })
}

/// Singular values of each Fourier-domain frontal slice.
pub fn spectral_singular_values(x: &Tensor3) -> Result<Vec<Vec<f64>>> {
    let xf = spectral::to_spectral(x);
    let n3 = x.dims().2;
    let per: Vec<Result<Vec<f64>>> = map_symmetric(
        n3,
        |k| complex_svd(xf.slice(k)).map(|s| s.s),
        |r| r.clone(),
    );
    per.into_iter().collect()
}

/// Rank of each Fourier slice: singular values above `tol · s_max(slice)`.
pub fn multirank(x: &Tensor3, tol: f64) -> Result<Vec<usize>> {
    if tol < 0.0 {
        return Err(Error::InvalidArgument(format!("negative rank tolerance {tol}")));
    }
    Ok(spectral_singular_values(x)?
        .iter()
        .map(|s| {
            let smax = s.first().copied().unwrap_or(0.0);
            if smax == 0.0 {
                0
            } else {
                s.iter().filter(|&&v| v > tol * smax).count()
            }
        })
        .collect())
}

/// Tubal rank: the largest entry of the multirank.
pub fn tubal_rank(x: &Tensor3, tol: f64) -> Result<usize> {
    Ok(multirank(x, tol)?.into_iter().max().unwrap_or(0))
}

/// Tensor nuclear norm: the sum of every Fourier-slice singular value
/// (no `1/n3` normalization).
pub fn tnn(x: &Tensor3) -> Result<f64> {
    Ok(spectral_singular_values(x)?
        .iter()
        .map(|s| s.iter().sum::<f64>())
        .sum())
}

/// `uᵀ * u` and `u * uᵀ` both within `tol` of the identity in Frobenius norm.
pub fn is_unitary(u: &Tensor3, tol: f64) -> Result<bool> {
    let (n1, n2, n3) = u.dims();
    if n1 != n2 {
        return Err(Error::DimMismatch(format!(
            "unitary test needs square slices, got {n1}x{n2}"
        )));
    }
    let id = identity_tensor(n1, n3);
    let ut = t_transpose(u);
    let left = (&t_product(&ut, u)? - &id).frobenius_norm();
    let right = (&t_product(u, &ut)? - &id).frobenius_norm();
    Ok(left <= tol && right <= tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::to_spectral;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n1: usize, n2: usize, n3: usize, seed: u64) -> Tensor3 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Tensor3::from_fn(n1, n2, n3, |_, _, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn identity_laws() {
        let x = random(3, 4, 5, 1);
        assert!(t_product(&x, &identity_tensor(4, 5)).unwrap().max_abs_diff(&x) < 1e-14);
        assert!(t_product(&identity_tensor(3, 5), &x).unwrap().max_abs_diff(&x) < 1e-14);
        assert_eq!(identity_tensor(1, 1).data(), &[1.0]);
        let f = to_spectral(&identity_tensor(3, 4));
        for k in 0..4 {
            assert!((f.slice(k) - CMatrix::identity(3, 3)).norm() < 1e-15);
        }
    }

    #[test]
    fn depth_one_is_matrix_product() {
        let x = random(3, 4, 1, 2);
        let y = random(4, 2, 1, 3);
        let z = t_product(&x, &y).unwrap();
        assert!((z.frontal(0) - x.frontal(0) * y.frontal(0)).amax() < 1e-14);
    }

    #[test]
    fn fast_product_matches_circulant() {
        let x = random(3, 4, 5, 4);
        let y = random(4, 2, 5, 5);
        let fast = t_product(&x, &y).unwrap();
        let slow = t_product_circulant(&x, &y).unwrap();
        assert!(fast.max_abs_diff(&slow) <= 1e-10);
        assert!(t_product(&x, &random(3, 2, 5, 1)).is_err());
        assert!(t_product(&x, &random(4, 2, 4, 1)).is_err());
    }

    #[test]
    fn transpose_rules() {
        let x = random(2, 3, 1, 6);
        assert_eq!(t_transpose(&x).frontal(0), x.frontal(0).transpose());
        let x = random(2, 3, 4, 7);
        let t = t_transpose(&x);
        assert_eq!(t.frontal(0), x.frontal(0).transpose());
        assert_eq!(t.frontal(1), x.frontal(3).transpose());
        assert_eq!(t.frontal(3), x.frontal(1).transpose());
        assert_eq!(t_transpose(&t), x);
        let y = random(3, 5, 4, 8);
        let lhs = t_transpose(&t_product(&x, &y).unwrap());
        let rhs = t_product_circulant(&t_transpose(&y), &t_transpose(&x)).unwrap();
        assert!(lhs.max_abs_diff(&rhs) <= 1e-10);
    }

    #[test]
    fn tsvd_of_identity() {
        let f = t_svd(&identity_tensor(3, 4)).unwrap();
        assert!(f.s.max_abs_diff(&identity_tensor(3, 4)) < 1e-14);
        for s in &f.spectral_singulars {
            assert!(s.iter().all(|v| (v - 1.0).abs() < 1e-14));
        }
    }

    #[test]
    fn tsvd_reconstructs_and_is_unitary() {
        for (dims, seed) in [((5, 4, 3), 9), ((3, 5, 4), 10), ((4, 4, 1), 11)] {
            let x = random(dims.0, dims.1, dims.2, seed);
            let f = t_svd(&x).unwrap();
            let err = (&f.reconstruct() - &x).frobenius_norm() / x.frobenius_norm();
            assert!(err <= 1e-10, "{err}");
            assert!(is_unitary(&f.u, 1e-6).unwrap());
            assert!(is_unitary(&f.v, 1e-6).unwrap());
            let sf = to_spectral(&f.s);
            for k in 0..dims.2 {
                let sl = sf.slice(k);
                for i in 0..dims.0 {
                    for j in 0..dims.1 {
                        if i != j {
                            assert!(sl[(i, j)].norm() < 1e-12);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn spectral_singulars_match_gram_eigen() {
        let x = random(4, 3, 5, 12);
        let f = t_svd(&x).unwrap();
        let xf = to_spectral(&x);
        for k in 0..5 {
            let gram = xf.slice(k).adjoint() * xf.slice(k);
            let mut eig: Vec<f64> =
                nalgebra::SymmetricEigen::new(gram).eigenvalues.iter().copied().collect();
            eig.sort_by(|a, b| b.total_cmp(a));
            for (s, e) in f.spectral_singulars[k].iter().zip(&eig) {
                assert!((s * s - e).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn multirank_cases() {
        assert_eq!(multirank(&identity_tensor(3, 4), 1e-10).unwrap(), vec![3; 4]);
        assert_eq!(multirank(&Tensor3::zeros(3, 3, 2), 1e-10).unwrap(), vec![0, 0]);
        let a = random(6, 2, 4, 13);
        let b = random(2, 6, 4, 14);
        let x = t_product(&a, &b).unwrap();
        assert!(multirank(&x, 1e-10).unwrap().iter().all(|&r| r <= 2));
        assert_eq!(tubal_rank(&x, 1e-10).unwrap(), 2);
        assert!(multirank(&x, -1.0).is_err());
    }

    #[test]
    fn tnn_cases() {
        assert!((tnn(&identity_tensor(4, 3)).unwrap() - 12.0).abs() < 1e-12);
        let x = random(4, 4, 3, 15);
        let bc = x.bcirc();
        let oracle: f64 = bc.svd(false, false).singular_values.iter().sum();
        let t = tnn(&x).unwrap();
        assert!((t - oracle).abs() / oracle <= 1e-8);
        assert!((tnn(&x.scale(-2.5)).unwrap() - 2.5 * t).abs() < 1e-10);
    }

    #[test]
    fn unitary_checks() {
        assert!(is_unitary(&identity_tensor(3, 3), 1e-12).unwrap());
        assert!(!is_unitary(&identity_tensor(3, 3).scale(2.0), 1e-8).unwrap());
        assert!(is_unitary(&random(2, 3, 2, 1), 1e-8).is_err());
    }
}
