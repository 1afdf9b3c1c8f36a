//! Seeded synthetic data with known ground truth.
//!
//! Every generator is deterministic for a fixed seed (ChaCha8 stream).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::error::{Error, Result};
use crate::tensor::{Mask3, Tensor3};
use crate::tprod::t_product;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn check_fraction(name: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("{name} = {p} outside [0, 1]")));
    }
    Ok(())
}

fn check_positive(dims: (usize, usize, usize)) -> Result<()> {
    if dims.0 == 0 || dims.1 == 0 || dims.2 == 0 {
        return Err(Error::InvalidArgument(format!("dims {dims:?} must be positive")));
    }
    Ok(())
}

fn gaussian(n1: usize, n2: usize, n3: usize, std: f64, rng: &mut ChaCha8Rng) -> Tensor3 {
    Tensor3::from_fn(n1, n2, n3, |_, _, _| {
        let z: f64 = StandardNormal.sample(rng);
        z * std
    })
}

/// `A * B` with `A: n1×r×n3`, `B: r×n2×n3` Gaussian; entries of `A` have
/// variance `1/n1` and entries of `B` variance `1/n2`.
pub fn low_tubal_rank(dims: (usize, usize, usize), rank: usize, seed: u64) -> Result<Tensor3> {
    check_positive(dims)?;
    let (n1, n2, n3) = dims;
    if rank == 0 || rank > n1.min(n2) {
        return Err(Error::InvalidArgument(format!(
            "tubal rank {rank} must be in 1..={}",
            n1.min(n2)
        )));
    }
    let mut r = rng(seed);
    let a = gaussian(n1, rank, n3, 1.0 / (n1 as f64).sqrt(), &mut r);
    let b = gaussian(rank, n2, n3, 1.0 / (n2 as f64).sqrt(), &mut r);
    t_product(&a, &b)
}

/// Bernoulli(`density`) support carrying `±magnitude` with random signs.
pub fn sparse_spikes(
    dims: (usize, usize, usize),
    density: f64,
    magnitude: f64,
    seed: u64,
) -> Result<(Tensor3, Mask3)> {
    check_positive(dims)?;
    check_fraction("spike density", density)?;
    let mut r = rng(seed);
    let (n1, n2, n3) = dims;
    let mut support = Vec::with_capacity(n1 * n2 * n3);
    let mut values = Vec::with_capacity(n1 * n2 * n3);
    for _ in 0..n1 * n2 * n3 {
        let hit = r.random_bool(density);
        let sign = if r.random_bool(0.5) { 1.0 } else { -1.0 };
        support.push(hit);
        values.push(if hit { sign * magnitude } else { 0.0 });
    }
    Ok((Tensor3::new(dims, values)?, Mask3::new(dims, support)?))
}

/// Observation mask with each entry kept independently with probability
/// `observed`. Never empty: if the draw keeps nothing, entry 0 is kept.
pub fn missing_mask(dims: (usize, usize, usize), observed: f64, seed: u64) -> Result<Mask3> {
    check_positive(dims)?;
    check_fraction("observed fraction", observed)?;
    let mut r = rng(seed);
    let n = dims.0 * dims.1 * dims.2;
    let mut flags: Vec<bool> = (0..n).map(|_| r.random_bool(observed)).collect();
    if !flags.iter().any(|&b| b) {
        flags[0] = true;
    }
    Mask3::new(dims, flags)
}

/// Static-camera video with a moving square.
#[derive(Debug, Clone)]
pub struct SurveillanceVideo {
    pub video: Tensor3,
    /// Rank-1 static background (identical frames).
    pub background: Tensor3,
    /// Pixels covered by the moving block.
    pub foreground: Mask3,
    /// Dynamic background disturbance added to the video.
    pub ripple: Tensor3,
}

/// Parameters of [`surveillance_video`].
#[derive(Debug, Clone, Copy)]
pub struct VideoSpec {
    pub dims: (usize, usize, usize),
    /// Side of the moving square; 0 disables the foreground.
    pub block: usize,
    /// Amplitude of the rippling patch; 0 disables it.
    pub ripple: f64,
}

impl Default for VideoSpec {
    fn default() -> Self {
        Self {
            dims: (32, 32, 20),
            block: 6,
            ripple: 0.1,
        }
    }
}

/// Rank-1 background `p(i)·q(j)`, a bright block moving one pixel per frame
/// along a bouncing path, and a rippling patch in the lower-left corner where
/// each pixel oscillates with its own random frequency in `[π/2, π)` and phase.
pub fn surveillance_video(spec: VideoSpec, seed: u64) -> Result<SurveillanceVideo> {
    check_positive(spec.dims)?;
    let (n1, n2, n3) = spec.dims;
    if spec.block > n1.min(n2) {
        return Err(Error::InvalidArgument(format!("block {} larger than frame", spec.block)));
    }
    let mut r = rng(seed);
    let p: Vec<f64> = (0..n1).map(|_| r.random_range(0.6..0.9)).collect();
    let q: Vec<f64> = (0..n2).map(|_| r.random_range(0.4..0.7)).collect();
    let background = Tensor3::from_fn(n1, n2, n3, |i, j, _| p[i] * q[j]);

    let travel_i = n1 - spec.block;
    let travel_j = n2 - spec.block;
    let start_i = r.random_range(0..=travel_i / 2);
    let start_j = r.random_range(0..=travel_j / 2);
    let bounce = |start: usize, travel: usize, k: usize| -> usize {
        if travel == 0 {
            return 0;
        }
        let period = 2 * travel;
        let pos = (start + k) % period;
        if pos <= travel {
            pos
        } else {
            period - pos
        }
    };
    let foreground = Mask3::from_fn(n1, n2, n3, |i, j, k| {
        if spec.block == 0 {
            return false;
        }
        let bi = bounce(start_i, travel_i, k);
        let bj = bounce(start_j, travel_j, 2 * k / 3);
        (bi..bi + spec.block).contains(&i) && (bj..bj + spec.block).contains(&j)
    });

    let patch_i = n1 - n1 / 4;
    let patch_j = n2 / 3;
    let waves: Vec<(f64, f64)> = (0..n1 * n2)
        .map(|_| {
            let pi = std::f64::consts::PI;
            (r.random_range(0.5 * pi..pi), r.random_range(0.0..2.0 * pi))
        })
        .collect();
    let ripple = Tensor3::from_fn(n1, n2, n3, |i, j, k| {
        if spec.ripple == 0.0 || i < patch_i || j >= patch_j {
            return 0.0;
        }
        let (omega, phase) = waves[i * n2 + j];
        spec.ripple * (omega * k as f64 + phase).sin()
    });

    let video = Tensor3::from_fn(n1, n2, n3, |i, j, k| {
        let base = if foreground.get(i, j, k) {
            0.05
        } else {
            background.get(i, j, k)
        };
        base + ripple.get(i, j, k)
    });
    Ok(SurveillanceVideo {
        video,
        background,
        foreground,
        ripple,
    })
}

/// Smooth background plus vertical rain streaks.
#[derive(Debug, Clone)]
pub struct RainyVideo {
    pub rainy: Tensor3,
    pub clean: Tensor3,
    pub streaks: Mask3,
}

/// Low-tubal-rank smooth background with vertical streak segments of
/// `magnitude` covering about `density` of all pixels.
pub fn rain_streaks(
    dims: (usize, usize, usize),
    density: f64,
    magnitude: f64,
    seed: u64,
) -> Result<RainyVideo> {
    check_positive(dims)?;
    check_fraction("streak density", density)?;
    let (n1, n2, n3) = dims;
    let mut r = rng(seed);
    let tau = std::f64::consts::TAU;
    let (a, b, c) = (r.random_range(0.0..tau), r.random_range(0.0..tau), r.random_range(0.0..tau));
    let clean = Tensor3::from_fn(n1, n2, n3, |i, j, k| {
        let (y, x, t) = (i as f64 / n1 as f64, j as f64 / n2 as f64, k as f64 / n3 as f64);
        0.45 + 0.2 * (tau * y + a).sin() * (tau * x + b).cos() + 0.1 * (tau * x + 0.5 * t + c).sin()
    });
    let target = (density * (n1 * n2 * n3) as f64).round() as usize;
    let mut hit = vec![false; n1 * n2 * n3];
    let mut covered = 0;
    let max_len = (n1 / 3).max(1);
    while covered < target {
        let k = r.random_range(0..n3);
        let j = r.random_range(0..n2);
        let len = r.random_range(max_len.div_ceil(2)..=max_len);
        let top = r.random_range(0..n1);
        for i in top..(top + len).min(n1) {
            let off = k * n1 * n2 + i * n2 + j;
            if !hit[off] && covered < target {
                hit[off] = true;
                covered += 1;
            }
        }
    }
    let streaks = Mask3::new(dims, hit)?;
    let rainy = Tensor3::from_fn(n1, n2, n3, |i, j, k| {
        clean.get(i, j, k) + if streaks.get(i, j, k) { magnitude } else { 0.0 }
    });
    Ok(RainyVideo {
        rainy,
        clean,
        streaks,
    })
}

/// Hyperspectral cube with mixed noise.
#[derive(Debug, Clone)]
pub struct HsiCube {
    pub noisy: Tensor3,
    pub clean: Tensor3,
    /// Entries replaced by impulse noise.
    pub impulses: Mask3,
}

#[derive(Debug, Clone, Copy)]
pub struct HsiSpec {
    pub dims: (usize, usize, usize),
    /// Number of rectangular material regions on top of the background.
    pub regions: usize,
    pub gaussian_sigma: f64,
    /// Fraction of entries replaced by salt-and-pepper values.
    pub impulse: f64,
    /// Fraction of columns per band offset by a constant stripe.
    pub stripes: f64,
}

impl Default for HsiSpec {
    fn default() -> Self {
        Self {
            dims: (32, 32, 8),
            regions: 4,
            gaussian_sigma: 0.1,
            impulse: 0.05,
            stripes: 0.0,
        }
    }
}

/// Piecewise-constant abundance maps (axis-aligned rectangles) with random
/// spectra, then Gaussian noise, salt-and-pepper impulses and optional
/// column stripes.
pub fn hsi_cube(spec: HsiSpec, seed: u64) -> Result<HsiCube> {
    check_positive(spec.dims)?;
    check_fraction("impulse fraction", spec.impulse)?;
    check_fraction("stripe fraction", spec.stripes)?;
    if !(spec.gaussian_sigma >= 0.0) {
        return Err(Error::InvalidArgument("negative noise level".into()));
    }
    let (n1, n2, n3) = spec.dims;
    let mut r = rng(seed);
    let spectrum = |r: &mut ChaCha8Rng| -> Vec<f64> {
        let lo = r.random_range(0.15..0.5);
        let hi = r.random_range(0.5..0.85);
        let phase = r.random_range(0.0..std::f64::consts::PI);
        (0..n3)
            .map(|k| lo + (hi - lo) * (0.5 + 0.5 * (phase + 2.0 * k as f64 / n3 as f64).sin()))
            .collect()
    };
    let mut label = vec![0usize; n1 * n2];
    let mut spectra = vec![spectrum(&mut r)];
    for reg in 1..=spec.regions {
        let h = r.random_range(n1 / 4..=n1 / 2);
        let w = r.random_range(n2 / 4..=n2 / 2);
        let top = r.random_range(0..=n1 - h);
        let left = r.random_range(0..=n2 - w);
        for i in top..top + h {
            for j in left..left + w {
                label[i * n2 + j] = reg;
            }
        }
        spectra.push(spectrum(&mut r));
    }
    let clean = Tensor3::from_fn(n1, n2, n3, |i, j, k| spectra[label[i * n2 + j]][k]);

    let noise = Normal::new(0.0, spec.gaussian_sigma.max(f64::MIN_POSITIVE))
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let stripe_cols: Vec<Vec<f64>> = (0..n3)
        .map(|_| {
            (0..n2)
                .map(|_| {
                    if r.random_bool(spec.stripes) {
                        r.random_range(-0.25..0.25)
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    let mut impulses = vec![false; n1 * n2 * n3];
    let mut data = clean.data().to_vec();
    for (off, v) in data.iter_mut().enumerate() {
        let k = off / (n1 * n2);
        let j = off % n2;
        let g = if spec.gaussian_sigma > 0.0 { noise.sample(&mut r) } else { 0.0 };
        *v += g + stripe_cols[k][j];
        if r.random_bool(spec.impulse) {
            impulses[off] = true;
            *v = if r.random_bool(0.5) { 1.0 } else { 0.0 };
        }
    }
    Ok(HsiCube {
        noisy: Tensor3::new(spec.dims, data)?,
        clean,
        impulses: Mask3::new(spec.dims, impulses)?,
    })
}

/// Images drawn from a union of free submodules.
#[derive(Debug, Clone)]
pub struct SubmoduleImages {
    /// `n1 × N × n3`; lateral slice `j` is image `j`.
    pub stacked: Tensor3,
    /// Ground-truth submodule of each image, 0-based.
    pub labels: Vec<usize>,
}

#[derive(Debug, Clone, Copy)]
pub struct SubmoduleSpec {
    pub n1: usize,
    pub n3: usize,
    pub clusters: usize,
    pub per_cluster: usize,
    /// Number of generating lateral slices per submodule.
    pub dim: usize,
}

impl Default for SubmoduleSpec {
    fn default() -> Self {
        Self {
            n1: 16,
            n3: 8,
            clusters: 3,
            per_cluster: 15,
            dim: 2,
        }
    }
}

/// Each submodule is spanned (under the t-product) by `dim` random lateral
/// slices; every image is a t-linear combination with random tube
/// coefficients. Images are ordered cluster by cluster.
pub fn submodule_images(spec: SubmoduleSpec, seed: u64) -> Result<SubmoduleImages> {
    if spec.clusters < 1 || spec.per_cluster < 1 || spec.dim < 1 || spec.n1 == 0 || spec.n3 == 0 {
        return Err(Error::InvalidArgument(format!("invalid submodule spec {spec:?}")));
    }
    if spec.clusters * spec.per_cluster < 2 {
        return Err(Error::InvalidArgument("need at least two images".into()));
    }
    let mut r = rng(seed);
    let n = spec.clusters * spec.per_cluster;
    let mut data = vec![0.0; spec.n1 * n * spec.n3];
    let mut labels = Vec::with_capacity(n);
    for c in 0..spec.clusters {
        let basis = gaussian(spec.n1, spec.dim, spec.n3, 1.0, &mut r);
        let coeffs = gaussian(spec.dim, spec.per_cluster, spec.n3, 1.0, &mut r);
        let block = t_product(&basis, &coeffs)?;
        for local in 0..spec.per_cluster {
            let col = c * spec.per_cluster + local;
            for k in 0..spec.n3 {
                for i in 0..spec.n1 {
                    data[k * spec.n1 * n + i * n + col] = block.get(i, local, k);
                }
            }
            labels.push(c);
        }
    }
    Ok(SubmoduleImages {
        stacked: Tensor3::new((spec.n1, n, spec.n3), data)?,
        labels,
    })
}
