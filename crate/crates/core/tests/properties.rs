use proptest::prelude::*;

use tubal::io::{decode, encode_mask, encode_tensor, TensorData};
use tubal::tprod::spectral_singular_values;
use tubal::{
    diff, diff_adjoint, from_spectral, soft_threshold, t_product, t_svd, t_transpose, tnn,
    to_spectral, tsvt, DiffAxis, Mask3, Tensor3,
};

fn tensor_with(dims: (usize, usize, usize)) -> impl Strategy<Value = Tensor3> {
    prop::collection::vec(-1.0f64..1.0, dims.0 * dims.1 * dims.2)
        .prop_map(move |data| Tensor3::new(dims, data).unwrap())
}

fn tensor(max: usize, max_depth: usize) -> impl Strategy<Value = Tensor3> {
    (1..=max, 1..=max, 1..=max_depth).prop_flat_map(tensor_with)
}

/// Two tensors of the same shape.
fn pair(max: usize, max_depth: usize) -> impl Strategy<Value = (Tensor3, Tensor3)> {
    (1..=max, 1..=max, 1..=max_depth).prop_flat_map(|d| (tensor_with(d), tensor_with(d)))
}

fn mask_like(dims: (usize, usize, usize)) -> impl Strategy<Value = Mask3> {
    prop::collection::vec(any::<bool>(), dims.0 * dims.1 * dims.2)
        .prop_map(move |flags| Mask3::new(dims, flags).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn spectral_roundtrip(x in tensor(5, 6)) {
        let back = from_spectral(&to_spectral(&x)).unwrap();
        prop_assert!(back.max_abs_diff(&x) <= 1e-12);
    }

    #[test]
    fn product_matches_circulant_oracle(
        (a, b) in (1..=4usize, 1..=4usize, 1..=4usize, 1..=4usize)
            .prop_flat_map(|(n1, n2, n4, n3)| (tensor_with((n1, n2, n3)), tensor_with((n2, n4, n3))))
    ) {
        let (n1, _, n3) = a.dims();
        let fast = t_product(&a, &b).unwrap();
        let oracle = Tensor3::bvfold(&(a.bcirc() * b.bvec()), (n1, b.dims().1, n3)).unwrap();
        prop_assert!(fast.max_abs_diff(&oracle) <= 1e-10);
        let lhs = t_transpose(&fast);
        let rhs = t_product(&t_transpose(&b), &t_transpose(&a)).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-10);
    }

    #[test]
    fn tsvd_reconstructs(x in tensor(5, 4)) {
        let f = t_svd(&x).unwrap();
        prop_assert!((&f.reconstruct() - &x).frobenius_norm() <= 1e-10 * x.frobenius_norm().max(1.0));
    }

    #[test]
    fn tnn_is_a_norm((x, y) in pair(4, 4), c in -3.0f64..3.0) {
        let (tx, ty) = (tnn(&x).unwrap(), tnn(&y).unwrap());
        prop_assert!(tx >= 0.0);
        prop_assert!((tnn(&x.scale(c)).unwrap() - c.abs() * tx).abs() <= 1e-10 * tx.max(1.0));
        prop_assert!(tnn(&(&x + &y)).unwrap() <= tx + ty + 1e-10);
    }

    #[test]
    fn tsvt_is_non_expansive((x, y) in pair(4, 4), tau in 0.0f64..2.0) {
        let d = (&tsvt(&x, tau).unwrap() - &tsvt(&y, tau).unwrap()).frobenius_norm();
        prop_assert!(d <= (&x - &y).frobenius_norm() + 1e-10);
    }

    #[test]
    fn tsvt_shifts_singular_values(x in tensor(4, 4), tau in 0.0f64..1.5) {
        let before = spectral_singular_values(&x).unwrap();
        let after = spectral_singular_values(&tsvt(&x, tau).unwrap()).unwrap();
        for (b, a) in before.iter().flatten().zip(after.iter().flatten()) {
            prop_assert!((a - (b - tau).max(0.0)).abs() <= 1e-9);
        }
    }

    #[test]
    fn soft_threshold_is_the_scalar_prox(x in tensor(3, 3), tau in 0.0f64..1.0) {
        let s = soft_threshold(&x, tau).unwrap();
        for (&v, &p) in x.data().iter().zip(s.data()) {
            let cost = |q: f64| tau * q.abs() + 0.5 * (q - v) * (q - v);
            // the prox beats nearby points and zero
            for q in [p - 1e-3, p + 1e-3, 0.0, v] {
                prop_assert!(cost(p) <= cost(q) + 1e-15);
            }
        }
    }

    #[test]
    fn mask_projection_is_an_orthogonal_projector(
        (x, y, m) in (1..=5usize, 1..=5usize, 1..=4usize)
            .prop_flat_map(|d| (tensor_with(d), tensor_with(d), mask_like(d)))
    ) {
        let px = x.project_mask(&m).unwrap();
        prop_assert_eq!(&px.project_mask(&m).unwrap(), &px);
        let lhs = px.inner_product(&y).unwrap();
        let rhs = x.inner_product(&y.project_mask(&m).unwrap()).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12);
    }

    #[test]
    fn diff_adjoint_identity((x, g) in pair(6, 5)) {
        for axis in DiffAxis::ALL {
            let lhs = diff(&x, axis).inner_product(&g).unwrap();
            let rhs = x.inner_product(&diff_adjoint(&g, axis)).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12);
        }
    }

    #[test]
    fn file_encoding_is_bit_exact(
        (dims, bits) in (1..=6usize, 1..=6usize, 1..=6usize).prop_flat_map(|d| {
            (Just(d), prop::collection::vec(any::<u64>(), d.0 * d.1 * d.2))
        })
    ) {
        let data: Vec<f64> = bits
            .iter()
            .map(|&b| f64::from_bits(b))
            .map(|v| if v.is_finite() { v } else { -0.0 })
            .collect();
        let x = Tensor3::new(dims, data).unwrap();
        match decode(&encode_tensor(&x)).unwrap() {
            TensorData::Real(back) => {
                prop_assert_eq!(back.dims(), dims);
                for (a, b) in back.data().iter().zip(x.data()) {
                    prop_assert_eq!(a.to_bits(), b.to_bits());
                }
            }
            TensorData::Mask(_) => prop_assert!(false, "decoded a mask"),
        }
    }

    #[test]
    fn mask_encoding_roundtrips(m in (1..=6usize, 1..=6usize, 1..=6usize).prop_flat_map(mask_like)) {
        prop_assert_eq!(decode(&encode_mask(&m)).unwrap(), TensorData::Mask(m));
    }
}
