//! Union-of-free-submodules clustering: images are lateral slices of a
//! tensor, each is expressed as a t-linear combination of the others with a
//! low-rank, dissimilarity-masked sparse coefficient tensor, and the
//! coefficients feed a spectral clustering.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::shrink::{masked_soft_threshold, tsvt_with_norm};
use crate::solvers::{SolverConfig, SolverReport};
use crate::spectral::{inverse_unchecked, map_symmetric, to_spectral, CMatrix, SpectralTensor3};
use crate::tensor::{Matrix, Tensor3};
use crate::tprod::t_product;

/// Symmetric `N × N` matrix with entries in `[0, 1]` and a zero diagonal;
/// large entries mark dissimilar image pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct DissimilarityMatrix(Matrix);

impl DissimilarityMatrix {
    pub fn new(m: Matrix) -> Result<Self> {
        let n = m.nrows();
        if m.ncols() != n || n == 0 {
            return Err(Error::DimMismatch(format!("dissimilarity must be square, got {:?}", m.shape())));
        }
        for i in 0..n {
            if m[(i, i)] != 0.0 {
                return Err(Error::InvalidArgument(format!("nonzero diagonal at {i}")));
            }
            for j in 0..n {
                let v = m[(i, j)];
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::InvalidArgument(format!("entry ({i}, {j}) = {v} outside [0, 1]")));
                }
                if (v - m[(j, i)]).abs() > 1e-12 {
                    return Err(Error::InvalidArgument(format!("asymmetric at ({i}, {j})")));
                }
            }
        }
        Ok(Self(m))
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Cluster label of every image, in `1..=count`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterAssignment {
    labels: Vec<usize>,
    count: usize,
}

impl ClusterAssignment {
    pub fn new(labels: Vec<usize>, count: usize) -> Result<Self> {
        if let Some(l) = labels.iter().find(|&&l| l == 0 || l > count) {
            return Err(Error::InvalidArgument(format!("label {l} outside 1..={count}")));
        }
        Ok(Self { labels, count })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// Labels shifted to `0..count`.
    pub fn zero_based(&self) -> Vec<usize> {
        self.labels.iter().map(|l| l - 1).collect()
    }
}

/// Stacks `n1 × n3` images as the lateral slices of an `n1 × N × n3` tensor.
pub fn stack_images(images: &[Matrix]) -> Result<Tensor3> {
    if images.len() < 2 {
        return Err(Error::InvalidArgument(format!("need at least two images, got {}", images.len())));
    }
    let (n1, n3) = images[0].shape();
    if let Some(bad) = images.iter().position(|m| m.shape() != (n1, n3)) {
        return Err(Error::DimMismatch(format!(
            "image {bad} is {:?}, expected {:?}",
            images[bad].shape(),
            (n1, n3)
        )));
    }
    let n = images.len();
    Tensor3::new(
        (n1, n, n3),
        (0..n1 * n * n3)
            .map(|off| {
                let (k, i, j) = (off / (n1 * n), (off / n) % n1, off % n);
                images[j][(i, k)]
            })
            .collect(),
    )
}

/// `M(i, j) = 1 − |corr(image_i, image_j)|`, clamped to `[0, 1]`. Images
/// with zero variance are maximally dissimilar to every other image.
pub fn dissimilarity_matrix(y: &Tensor3) -> Result<DissimilarityMatrix> {
    let (n1, n, n3) = y.dims();
    if n < 2 {
        return Err(Error::InvalidArgument("need at least two images".into()));
    }
    let centered: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let v: Vec<f64> = (0..n3).flat_map(|k| (0..n1).map(move |i| (i, k))).map(|(i, k)| y.get(i, j, k)).collect();
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            v.into_iter().map(|x| x - mean).collect()
        })
        .collect();
    let norms: Vec<f64> = centered.iter().map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
    let mut m = Matrix::zeros(n, n);
    for a in 0..n {
        for b in a + 1..n {
            let d = if norms[a] == 0.0 || norms[b] == 0.0 {
                1.0
            } else {
                let dot: f64 = centered[a].iter().zip(&centered[b]).map(|(x, y)| x * y).sum();
                (1.0 - (dot / (norms[a] * norms[b])).abs()).clamp(0.0, 1.0)
            };
            m[(a, b)] = d;
            m[(b, a)] = d;
        }
    }
    DissimilarityMatrix::new(m)
}

/// Self-representation weights. `λ1` scales the dissimilarity-masked l1
/// term and `λ2` the fit `‖Y − Y * Z‖_F²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RepresentationParams {
    pub lambda1: f64,
    pub lambda2: f64,
}

impl Default for RepresentationParams {
    fn default() -> Self {
        Self {
            lambda1: 0.1,
            lambda2: 10.0,
        }
    }
}

/// ADMM for
///
/// `min ‖C‖ + λ1 Σ_k ‖M ⊙ Q_k‖₁ + λ2‖Y − Y * Z‖_F²  s.t.  Z = C,  Z = Q`
///
/// returning the `N × N × n3` coefficient tensor `Z`.
pub fn solve_representation(
    y: &Tensor3,
    m: &DissimilarityMatrix,
    params: RepresentationParams,
    cfg: &SolverConfig,
) -> Result<(Tensor3, SolverReport)> {
    cfg.validate()?;
    let (lambda1, lambda2) = (params.lambda1, params.lambda2);
    for (name, v) in [("lambda1", lambda1), ("lambda2", lambda2)] {
        if !(v >= 0.0) || !v.is_finite() {
            return Err(Error::InvalidArgument(format!("{name} must be >= 0, got {v}")));
        }
    }
    let (_, n, n3) = y.dims();
    if m.len() != n {
        return Err(Error::DimMismatch(format!("{} × {} dissimilarity for {n} images", m.len(), m.len())));
    }
    let mask = m.as_matrix();
    let yf = to_spectral(y);
    let grams: Vec<CMatrix> = yf.slices().iter().map(|s| s.adjoint() * s).collect();

    let zero = || Tensor3::zeros(n, n, n3);
    let mut z = zero();
    let mut c = zero();
    let mut q = zero();
    let mut y1 = zero();
    let mut y2 = zero();
    let mut pen = cfg.penalty();
    let mut report = SolverReport::default();

    for _ in 0..cfg.max_iter {
        let mu = pen.mu;
        let inv = 1.0 / mu;

        // (2λ2 GᴴG + 2μ I) Z = 2λ2 GᴴG + μ(C − Y1/μ) + μ(Q − Y2/μ), per Fourier slice
        let mut target = &c + &q;
        target.axpy(-inv, &y1);
        target.axpy(-inv, &y2);
        let tf = to_spectral(&target.scale(mu));
        let two_l2 = Complex64::new(2.0 * lambda2, 0.0);
        let solved = map_symmetric(
            n3,
            |k| -> Result<CMatrix> {
                let g = &grams[k];
                let mut lhs = g * two_l2;
                for i in 0..n {
                    lhs[(i, i)] += Complex64::new(2.0 * mu, 0.0);
                }
                let rhs = g * two_l2 + tf.slice(k);
                lhs.lu()
                    .solve(&rhs)
                    .ok_or_else(|| Error::InvalidArgument("singular representation system".into()))
            },
            |r| r.clone().map(|m| m.map(|z| z.conj())),
        );
        let slices = solved.into_iter().collect::<Result<Vec<_>>>()?;
        let z_new = inverse_unchecked(&SpectralTensor3::new(slices)?);

        let mut arg = z_new.clone();
        arg.axpy(inv, &y1);
        let (c_new, nuclear) = tsvt_with_norm(&arg, inv)?;
        let mut arg = z_new.clone();
        arg.axpy(inv, &y2);
        let q_new = masked_soft_threshold(&arg, mask, lambda1 * inv)?;

        let r1 = &z_new - &c_new;
        let r2 = &z_new - &q_new;
        let residual = r1.max_abs().max(r2.max_abs());
        let chg = z_new
            .max_abs_diff(&z)
            .max(c_new.max_abs_diff(&c))
            .max(q_new.max_abs_diff(&q))
            .max(residual);

        let masked_l1: f64 = (0..n3)
            .map(|k| (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| mask[(i, j)] * c_new.get(i, j, k).abs()).sum::<f64>())
            .sum();
        let fit = (y - &t_product(y, &c_new)?).frobenius_norm().powi(2);
        report.record(residual, nuclear / n3 as f64 + lambda1 * masked_l1 + lambda2 * fit);

        z = z_new;
        c = c_new;
        q = q_new;
        if chg <= cfg.tol {
            report.converged = true;
            break;
        }
        y1.axpy(mu, &r1);
        y2.axpy(mu, &r2);
        pen.grow();
    }
    Ok((z, report))
}

/// `w(i, j) = ‖z(i, j, :)‖ + ‖z(j, i, :)‖`.
pub fn affinity(z: &Tensor3) -> Result<Matrix> {
    let (n1, n2, _) = z.dims();
    if n1 != n2 {
        return Err(Error::DimMismatch(format!("coefficient tensor must be N×N×n3, got {:?}", z.dims())));
    }
    let tube_norm = |i: usize, j: usize| z.tube(i, j).iter().map(|v| v * v).sum::<f64>().sqrt();
    let norms = Matrix::from_fn(n1, n1, tube_norm);
    Ok(Matrix::from_fn(n1, n1, |i, j| norms[(i, j)] + norms[(j, i)]))
}

const KMEANS_RESTARTS: usize = 20;
const KMEANS_MAX_ITER: usize = 300;

/// Spectral clustering on the symmetric-normalized Laplacian: the
/// eigenvectors of the `count` smallest eigenvalues, rows normalized, are
/// grouped by k-means (k-means++ seeding, best of 20 restarts). Labels are
/// numbered by first appearance.
pub fn spectral_cluster(w: &Matrix, count: usize, seed: u64) -> Result<ClusterAssignment> {
    let n = w.nrows();
    if w.ncols() != n {
        return Err(Error::DimMismatch(format!("affinity must be square, got {:?}", w.shape())));
    }
    if count < 2 || count > n {
        return Err(Error::InvalidArgument(format!("cluster count {count} outside 2..={n}")));
    }
    for i in 0..n {
        for j in 0..n {
            let v = w[(i, j)];
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidArgument(format!("affinity entry ({i}, {j}) = {v}")));
            }
            if (v - w[(j, i)]).abs() > 1e-12 * v.abs().max(1.0) {
                return Err(Error::InvalidArgument(format!("affinity asymmetric at ({i}, {j})")));
            }
        }
    }
    if w.iter().all(|&v| v == 0.0) {
        return Err(Error::TrivialGraph);
    }
    let degree: Vec<f64> = (0..n).map(|i| w.row(i).sum()).collect();
    let scale: Vec<f64> = degree.iter().map(|&d| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 }).collect();
    let laplacian = Matrix::from_fn(n, n, |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        id - scale[i] * w[(i, j)] * scale[j]
    });
    let eig = SymmetricEigen::new(laplacian);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    let mut embed = DMatrix::from_fn(n, count, |i, c| eig.eigenvectors[(i, order[c])]);
    for mut row in embed.row_iter_mut() {
        let norm = row.norm();
        if norm > 0.0 {
            row /= norm;
        }
    }

    let points: Vec<Vec<f64>> = embed.row_iter().map(|r| r.iter().copied().collect()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(f64, Vec<usize>)> = None;
    for _ in 0..KMEANS_RESTARTS {
        let (inertia, labels) = kmeans(&points, count, &mut rng);
        if best.as_ref().is_none_or(|(b, _)| inertia < *b) {
            best = Some((inertia, labels));
        }
    }
    let raw = best.expect("at least one restart").1;
    let mut remap = vec![0usize; count];
    let mut next = 1;
    let labels = raw
        .iter()
        .map(|&l| {
            if remap[l] == 0 {
                remap[l] = next;
                next += 1;
            }
            remap[l]
        })
        .collect();
    ClusterAssignment::new(labels, count)
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// One k-means run: k-means++ seeding then Lloyd iterations. Empty clusters
/// are re-seeded with the point farthest from its centre.
fn kmeans(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> (f64, Vec<usize>) {
    let n = points.len();
    let mut centres = vec![points[rng.random_range(0..n)].clone()];
    while centres.len() < k {
        let d: Vec<f64> = points
            .iter()
            .map(|p| centres.iter().map(|c| dist2(p, c)).fold(f64::INFINITY, f64::min))
            .collect();
        let next = match WeightedIndex::new(&d) {
            Ok(dist) => dist.sample(rng),
            // every point coincides with a centre
            Err(_) => rng.random_range(0..n),
        };
        centres.push(points[next].clone());
    }

    let mut labels = vec![usize::MAX; n];
    for _ in 0..KMEANS_MAX_ITER {
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let mut best = (f64::INFINITY, 0);
            for (c, centre) in centres.iter().enumerate() {
                let d = dist2(p, centre);
                if d < best.0 {
                    best = (d, c);
                }
            }
            if labels[i] != best.1 {
                labels[i] = best.1;
                changed = true;
            }
        }
        for c in 0..k {
            if !labels.contains(&c) {
                let far = (0..n)
                    .max_by(|&a, &b| {
                        dist2(&points[a], &centres[labels[a]]).total_cmp(&dist2(&points[b], &centres[labels[b]]))
                    })
                    .expect("non-empty point set");
                labels[far] = c;
                changed = true;
            }
        }
        let dim = points[0].len();
        for (c, centre) in centres.iter_mut().enumerate() {
            let members: Vec<&Vec<f64>> = points.iter().zip(&labels).filter(|(_, &l)| l == c).map(|(p, _)| p).collect();
            *centre = (0..dim).map(|d| members.iter().map(|p| p[d]).sum::<f64>() / members.len() as f64).collect();
        }
        if !changed {
            break;
        }
    }
    let inertia = points.iter().zip(&labels).map(|(p, &l)| dist2(p, &centres[l])).sum();
    (inertia, labels)
}

/// Full pipeline: dissimilarity mask, self-representation, affinity and
/// spectral clustering into `count` groups.
pub fn cluster_images(
    y: &Tensor3,
    count: usize,
    params: RepresentationParams,
    cfg: &SolverConfig,
) -> Result<(ClusterAssignment, SolverReport)> {
    let m = dissimilarity_matrix(y)?;
    let (z, report) = solve_representation(y, &m, params, cfg)?;
    let w = affinity(&z)?;
    Ok((spectral_cluster(&w, count, cfg.seed)?, report))
}
