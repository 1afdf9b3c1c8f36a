//! End-to-end recovery on synthetic data with known ground truth.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use tubal::cluster::{dissimilarity_matrix, solve_representation, RepresentationParams};
use tubal::matrix::{lrmc, lrtv_super_resolve, rpca, DegradationOp, MatrixMask};
use tubal::metrics::{f_measure, psnr, support};
use tubal::solvers::{derain, mod_decompose, wtnn_denoise, DerainParams, ModParams, SolverConfig};
use tubal::synth::{self, SubmoduleSpec, VideoSpec};
use tubal::{t_product, Matrix, SliceAxis, Tensor3, WeightVector};

fn matrix(m: &Matrix) -> Tensor3 {
    Tensor3::from_frontal_slices(std::slice::from_ref(m)).unwrap()
}

fn rel(a: &Matrix, b: &Matrix) -> f64 {
    (a - b).norm() / b.norm()
}

// Exact completion holds with high probability, not for every mask: of these
// six instances, seed 21 stays at RSE ~4e-2 under any penalty schedule.
#[test]
fn lrmc_rank_two_half_observed() {
    let mut recovered = 0;
    for seed in 21..27 {
        let m = synth::low_tubal_rank((30, 30, 1), 2, seed).unwrap().frontal(0);
        let mask = synth::missing_mask((30, 30, 1), 0.5, seed + 1).unwrap();
        let omega = MatrixMask::from_fn(30, 30, |i, j| mask.get(i, j, 0));
        let observed = m.zip_map(&omega, |v, b| if b { v } else { 0.0 });
        let (x, report) = lrmc(&observed, &omega, &SolverConfig::default()).unwrap();
        assert!(report.converged);
        recovered += usize::from(rel(&x, &m) <= 1e-3);
    }
    assert!(recovered >= 5, "{recovered}/6 recovered");
}

#[test]
fn rpca_rank_two_with_spikes() {
    let l0 = synth::low_tubal_rank((30, 30, 1), 2, 23).unwrap().frontal(0);
    let (s0, _) = synth::sparse_spikes((30, 30, 1), 0.05, 5.0, 24).unwrap();
    let m = &l0 + s0.frontal(0);
    let (l, _, _) = rpca(&m, Some(1.0 / 30f64.sqrt()), &SolverConfig::default()).unwrap();
    assert!(rel(&l, &l0) <= 1e-3, "{}", rel(&l, &l0));
}

#[test]
fn wtnn_reweighting_removes_gaussian_noise() {
    let x = synth::low_tubal_rank((30, 30, 10), 2, 25).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(26);
    let noise = Normal::new(0.0, 0.1).unwrap();
    let y = x.map(|v| v + noise.sample(&mut rng));
    let (xhat, _) = wtnn_denoise(&y, 1.0, &WeightVector::reweighted(20.0), &SolverConfig::default()).unwrap();
    let before = psnr(&y, &x, 1.0).unwrap();
    let after = psnr(&xhat, &x, 1.0).unwrap();
    assert!(after >= before + 5.0, "{before:.2} -> {after:.2}");
}

#[test]
fn super_resolution_beats_nearest_upsampling() {
    // four flat rectangles on a mid-grey field
    let x0 = Matrix::from_fn(32, 32, |i, j| {
        let mut v: f64 = 0.5;
        if (4..14).contains(&i) && (6..20).contains(&j) {
            v = 0.9;
        }
        if (18..30).contains(&i) && (2..12).contains(&j) {
            v = 0.1;
        }
        if (16..26).contains(&i) && (18..30).contains(&j) {
            v = 0.75;
        }
        v
    });
    let h = DegradationOp::box_blur(3, 2).unwrap();
    let y = h.apply(&x0);
    let nearest = Matrix::from_fn(32, 32, |i, j| y[(i / 2, j / 2)]);
    let (x, _) = lrtv_super_resolve(&y, &h, None, None, &SolverConfig::default()).unwrap();
    let base = psnr(&matrix(&nearest), &matrix(&x0), 1.0).unwrap();
    let ours = psnr(&matrix(&x), &matrix(&x0), 1.0).unwrap();
    assert!(ours >= base + 3.0, "{base:.2} -> {ours:.2}");
}

#[test]
fn mod_dynamic_layer_takes_the_ripple() {
    let v = synth::surveillance_video(VideoSpec::default(), 27).unwrap();
    let out = mod_decompose(&v.video, &ModParams::default(), &SolverConfig::default()).unwrap();
    assert!(out.dynamic.l1_norm() > 0.0);
    let total = out.objects.frobenius_norm().powi(2);
    let inside: f64 = out
        .objects
        .data()
        .iter()
        .zip(v.foreground.data())
        .filter(|(_, &m)| m)
        .map(|(e, _)| e * e)
        .sum();
    assert!(inside >= 0.8 * total, "{:.3}", inside / total);
}

#[test]
fn derain_recovers_streak_support() {
    let rain = synth::rain_streaks((32, 32, 10), 0.05, 0.8, 28).unwrap();
    let out = derain(&rain.rainy, &DerainParams::default(), &SolverConfig::default()).unwrap();
    let f1 = f_measure(&support(&out.rain, 0.4), &rain.streaks).unwrap();
    assert!(f1 >= 0.85, "{f1}");
}

#[test]
fn exact_dependency_is_represented() {
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    let (n1, n3) = (8, 4);
    let mut slices: Vec<Tensor3> =
        (0..4).map(|_| Tensor3::from_fn(n1, 1, n3, |_, _, _| rng.random_range(-1.0..1.0))).collect();
    // the fifth image is slice 0 + slice 1 exactly
    slices.push(&slices[0] + &slices[1]);
    let y = Tensor3::from_fn(n1, slices.len(), n3, |i, j, k| slices[j].get(i, 0, k));
    let m = dissimilarity_matrix(&y).unwrap();
    let params = RepresentationParams { lambda1: 0.1, lambda2: 1e4 };
    let (z, _) = solve_representation(&y, &m, params, &SolverConfig::default()).unwrap();
    let resid = (&y - &t_product(&y, &z).unwrap()).frobenius_norm() / y.frobenius_norm();
    assert!(resid <= 1e-3, "{resid}");
}

#[test]
fn coefficients_stay_within_submodules() {
    let spec = SubmoduleSpec { clusters: 2, ..Default::default() };
    let imgs = synth::submodule_images(spec, 30).unwrap();
    let m = dissimilarity_matrix(&imgs.stacked).unwrap();
    let (z, _) =
        solve_representation(&imgs.stacked, &m, RepresentationParams::default(), &SolverConfig::default()).unwrap();
    let n = imgs.labels.len();
    let (mut within, mut across) = (0.0, 0.0);
    for a in 0..n {
        for b in 0..n {
            let e: f64 = z.tube(a, b).iter().map(|v| v * v).sum();
            if imgs.labels[a] == imgs.labels[b] {
                within += e;
            } else {
                across += e;
            }
        }
    }
    assert!(across <= 0.1 * within, "across {across:.3e} within {within:.3e}");
    // every lateral slice of Z pairs image j with its coefficients
    assert_eq!(z.slice(SliceAxis::Lateral, 0).unwrap().nrows(), n);
}


#[test]
fn runs_are_reproducible() {
    let imgs = synth::submodule_images(SubmoduleSpec::default(), 31).unwrap();
    let cfg = SolverConfig { seed: 5, ..Default::default() };
    let run = || {
        tubal::cluster::cluster_images(&imgs.stacked, 3, RepresentationParams::default(), &cfg).unwrap()
    };
    let (a, ra) = run();
    let (b, rb) = run();
    assert_eq!(a, b);
    assert_eq!(ra, rb);
}
