use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use tubal::cluster::{cluster_images, RepresentationParams};
use tubal::io::{self, MetricsRow, TensorData};
use tubal::matrix::{lrtv_super_resolve, DegradationOp};
use tubal::metrics::{cluster_accuracy, f_measure, psnr, rse, support};
use tubal::solvers::{
    derain, foreground_mask, hsi_mixed_denoise, lrtc, mod_decompose, trpca, wtnn_denoise,
    DerainParams, HsiParams, ModParams, PatchSpec, SolverConfig, SolverReport,
};
use tubal::synth::{self, HsiSpec, SubmoduleSpec, VideoSpec};
use tubal::{t_product, t_svd, tnn, tsvt, Tensor3, WeightVector};

#[derive(Parser)]
#[command(name = "tubal", version, about = "Tensor recovery with the t-product algebra")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct SolverArgs {
    /// Initial ADMM penalty.
    #[arg(long, default_value_t = 1e-3)]
    mu0: f64,
    /// Penalty growth factor.
    #[arg(long, default_value_t = 1.1)]
    rho: f64,
    #[arg(long, default_value_t = 1e10)]
    mu_max: f64,
    #[arg(long, default_value_t = 1e-7)]
    tol: f64,
    #[arg(long, default_value_t = 500)]
    max_iter: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl SolverArgs {
    fn config(&self) -> SolverConfig {
        SolverConfig {
            mu0: self.mu0,
            rho: self.rho,
            mu_max: self.mu_max,
            tol: self.tol,
            max_iter: self.max_iter,
            seed: self.seed,
        }
    }
}

#[derive(Args, Clone)]
struct MetricArgs {
    /// Append one metrics row to this CSV file.
    #[arg(long)]
    metrics_csv: Option<PathBuf>,
    /// Experiment id written to the CSV.
    #[arg(long, default_value = "run")]
    experiment: String,
    /// Ground truth for PSNR/RSE (tensor) or F-measure (mask).
    #[arg(long = "ref")]
    reference: Option<PathBuf>,
    /// Peak value for PSNR.
    #[arg(long, default_value_t = 1.0)]
    peak: f64,
}

#[derive(Subcommand)]
enum Command {
    /// t-product of two tensors.
    Tprod {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long = "in2")]
        input2: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// t-SVD: writes U, S, V.
    Tsvd {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        out2: PathBuf,
        #[arg(long)]
        out3: PathBuf,
    },
    /// Prints the tensor nuclear norm.
    Tnn {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Tensor singular value thresholding.
    Svt {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        tau: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Low-rank tensor completion.
    Complete {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        mask: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        metrics: MetricArgs,
    },
    /// Tensor robust PCA: writes the low-rank and sparse parts.
    Rpca {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        out2: Option<PathBuf>,
        #[arg(long)]
        lambda: Option<f64>,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        metrics: MetricArgs,
    },
    /// Weighted nuclear norm denoising with reweighted thresholds c/(σ + ε).
    Denoise {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        /// Reweighting constant c.
        #[arg(long, default_value_t = 20.0)]
        weight_c: f64,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        metrics: MetricArgs,
    },
    /// Hyperspectral mixed-noise removal: writes clean, sparse and dense parts.
    HsiDenoise {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        out2: Option<PathBuf>,
        #[arg(long)]
        out3: Option<PathBuf>,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long, default_value_t = 10.0)]
        tau: f64,
        #[arg(long, default_value_t = 0.05)]
        gamma: f64,
        /// Solve on overlapping square patches of this side.
        #[arg(long)]
        patch: Option<usize>,
        #[arg(long, default_value_t = 8)]
        stride: usize,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        metrics: MetricArgs,
    },
    /// Moving object detection: writes background, foreground, dynamic
    /// background, objects and the object mask.
    Mod {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        out2: Option<PathBuf>,
        #[arg(long)]
        out3: Option<PathBuf>,
        #[arg(long)]
        out4: Option<PathBuf>,
        #[arg(long)]
        out5: Option<PathBuf>,
        #[arg(long)]
        lambda1: Option<f64>,
        #[arg(long)]
        lambda2: Option<f64>,
        #[arg(long)]
        lambda3: Option<f64>,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        metrics: MetricArgs,
    },
    /// Rain streak removal: writes background and rain layers.
    Derain {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        out2: Option<PathBuf>,
        #[arg(long)]
        lambda1: Option<f64>,
        #[arg(long)]
        lambda2: Option<f64>,
        #[arg(long)]
        lambda3: Option<f64>,
        #[arg(long)]
        lambda4: Option<f64>,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        metrics: MetricArgs,
    },
    /// Low-rank + TV super-resolution of an n1×n2×1 image.
    Sr {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 2)]
        factor: usize,
        /// Side of the box blur kernel (odd).
        #[arg(long, default_value_t = 3)]
        kernel: usize,
        #[arg(long)]
        lambda1: Option<f64>,
        #[arg(long)]
        lambda2: Option<f64>,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        metrics: MetricArgs,
    },
    /// Clusters the lateral slices of an n1×N×n3 tensor; prints 1-based labels.
    Cluster {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        clusters: usize,
        #[arg(long, default_value_t = 0.1)]
        lambda1: f64,
        #[arg(long, default_value_t = 10.0)]
        lambda2: f64,
        /// Write labels here, one per line.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Ground-truth labels, one per line, for the accuracy metric.
        #[arg(long)]
        truth: Option<PathBuf>,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        metrics: MetricArgs,
    },
    /// Synthetic data generators.
    Synth(SynthArgs),
    /// Compares two files: PSNR and RSE for tensors, F-measure for masks.
    Metrics {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long = "ref")]
        reference: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        peak: f64,
        #[arg(long)]
        metrics_csv: Option<PathBuf>,
        #[arg(long, default_value = "run")]
        experiment: String,
    },
}

#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum SynthKind {
    LowTubalRank,
    SparseSpikes,
    MissingMask,
    SurveillanceVideo,
    RainStreaks,
    HsiCube,
    SubmoduleImages,
}

#[derive(Args)]
struct SynthArgs {
    kind: SynthKind,
    /// Tensor dims as n1,n2,n3.
    #[arg(long, value_parser = parse_dims)]
    dims: Option<(usize, usize, usize)>,
    #[arg(long, default_value_t = 2)]
    rank: usize,
    #[arg(long, default_value_t = 0.05)]
    density: f64,
    #[arg(long)]
    magnitude: Option<f64>,
    #[arg(long, default_value_t = 0.5)]
    observed: f64,
    /// Existing tensor to add sparse spikes to.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    out2: Option<PathBuf>,
    #[arg(long)]
    out3: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    clusters: usize,
    #[arg(long, default_value_t = 15)]
    per_cluster: usize,
}

fn parse_dims(s: &str) -> std::result::Result<(usize, usize, usize), String> {
    let parts: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    match parts[..] {
        [a, b, c] => Ok((a, b, c)),
        _ => Err(format!("expected n1,n2,n3, got {s:?}")),
    }
}

fn load(path: &Path) -> Result<Tensor3> {
    io::read_tensor(path).with_context(|| format!("reading {}", path.display()))
}

fn save(x: &Tensor3, path: &Path) -> Result<()> {
    io::write_tensor(x, path).with_context(|| format!("writing {}", path.display()))
}

fn save_opt(x: &Tensor3, path: &Option<PathBuf>) -> Result<()> {
    match path {
        Some(p) => save(x, p),
        None => Ok(()),
    }
}

fn save_mask(m: &tubal::Mask3, path: &Path) -> Result<()> {
    io::write_mask(m, path).with_context(|| format!("writing {}", path.display()))
}

/// Prints the run summary and, when requested, appends the metrics row.
fn finish(
    solver: &str,
    result: Option<&Tensor3>,
    report: &SolverReport,
    started: Instant,
    metrics: &MetricArgs,
    mut row: MetricsRow,
) -> Result<()> {
    if let (Some(path), Some(result)) = (&metrics.reference, result) {
        if let TensorData::Real(truth) = io::read_any(path).with_context(|| format!("reading {}", path.display()))? {
            row.psnr = Some(psnr(result, &truth, metrics.peak)?);
            row.rse = Some(rse(result, &truth)?);
        }
    }
    row.experiment = metrics.experiment.clone();
    row.solver = solver.into();
    row.iterations = Some(report.iterations);
    row.wall_time_s = Some(started.elapsed().as_secs_f64());
    row.converged = Some(report.converged);
    println!(
        "{solver}: iterations={} converged={} objective={:e}",
        report.iterations, report.converged, report.final_objective
    );
    if let (Some(p), Some(r)) = (row.psnr, row.rse) {
        println!("psnr={p} rse={r:e}");
    }
    if let Some(path) = &metrics.metrics_csv {
        io::append_metrics(path, &row)?;
    }
    Ok(())
}

fn read_labels(path: &Path) -> Result<Vec<usize>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.trim().parse::<usize>().with_context(|| format!("bad label {l:?}")))
        .collect()
}

fn write_labels(labels: &[usize], path: &Path) -> Result<()> {
    let text: String = labels.iter().map(|l| format!("{l}\n")).collect();
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Tprod { input, input2, out } => save(&t_product(&load(&input)?, &load(&input2)?)?, &out),
        Command::Tsvd { input, out, out2, out3 } => {
            let f = t_svd(&load(&input)?)?;
            save(&f.u, &out)?;
            save(&f.s, &out2)?;
            save(&f.v, &out3)
        }
        Command::Tnn { input } => {
            println!("{:?}", tnn(&load(&input)?)?);
            Ok(())
        }
        Command::Svt { input, tau, out } => save(&tsvt(&load(&input)?, tau)?, &out),
        Command::Complete { input, mask, out, solver, metrics } => {
            let m = load(&input)?;
            let omega = io::read_mask(&mask).with_context(|| format!("reading {}", mask.display()))?;
            let t = Instant::now();
            let (x, report) = lrtc(&m, &omega, &solver.config())?;
            save(&x, &out)?;
            finish("lrtc", Some(&x), &report, t, &metrics, MetricsRow::default())
        }
        Command::Rpca { input, out, out2, lambda, solver, metrics } => {
            let m = load(&input)?;
            let t = Instant::now();
            let (l, s, report) = trpca(&m, lambda, &solver.config())?;
            save(&l, &out)?;
            save_opt(&s, &out2)?;
            finish("trpca", Some(&l), &report, t, &metrics, MetricsRow::default())
        }
        Command::Denoise { input, out, lambda, weight_c, solver, metrics } => {
            let y = load(&input)?;
            let t = Instant::now();
            let (x, report) = wtnn_denoise(&y, lambda, &WeightVector::reweighted(weight_c), &solver.config())?;
            save(&x, &out)?;
            finish("wtnn", Some(&x), &report, t, &metrics, MetricsRow::default())
        }
        Command::HsiDenoise { input, out, out2, out3, lambda, tau, gamma, patch, stride, solver, metrics } => {
            let h = load(&input)?;
            let params = HsiParams {
                lambda,
                tau,
                gamma,
                patch: patch.map(|size| PatchSpec { size, stride }),
            };
            let t = Instant::now();
            let r = hsi_mixed_denoise(&h, &params, &solver.config())?;
            save(&r.low_rank, &out)?;
            save_opt(&r.sparse, &out2)?;
            save_opt(&r.noise, &out3)?;
            finish("hsi", Some(&r.low_rank), &r.report, t, &metrics, MetricsRow::default())
        }
        Command::Mod { input, out, out2, out3, out4, out5, lambda1, lambda2, lambda3, solver, metrics } => {
            let v = load(&input)?;
            let params = ModParams { lambda1, lambda2, lambda3 };
            let t = Instant::now();
            let r = mod_decompose(&v, &params, &solver.config())?;
            let mask = foreground_mask(&r.objects);
            save(&r.background, &out)?;
            save_opt(&r.foreground, &out2)?;
            save_opt(&r.dynamic, &out3)?;
            save_opt(&r.objects, &out4)?;
            if let Some(p) = &out5 {
                save_mask(&mask, p)?;
            }
            let mut row = MetricsRow::default();
            if let Some(path) = &metrics.reference {
                if let TensorData::Mask(truth) = io::read_any(path)? {
                    row.f_measure = Some(f_measure(&mask, &truth)?);
                    println!("f_measure={}", row.f_measure.unwrap());
                }
            }
            finish("mod", Some(&r.background), &r.report, t, &metrics, row)
        }
        Command::Derain { input, out, out2, lambda1, lambda2, lambda3, lambda4, solver, metrics } => {
            let o = load(&input)?;
            let params = DerainParams { lambda1, lambda2, lambda3, lambda4 };
            let t = Instant::now();
            let r = derain(&o, &params, &solver.config())?;
            save(&r.background, &out)?;
            save_opt(&r.rain, &out2)?;
            finish("derain", Some(&r.background), &r.report, t, &metrics, MetricsRow::default())
        }
        Command::Sr { input, out, factor, kernel, lambda1, lambda2, solver, metrics } => {
            let y = load(&input)?;
            let (n1, n2, n3) = y.dims();
            if n3 != 1 {
                bail!("super-resolution takes an n1×n2×1 image, got {:?}", y.dims());
            }
            let h = DegradationOp::box_blur(kernel, factor)?;
            let t = Instant::now();
            let (x, report) = lrtv_super_resolve(&y.frontal(0), &h, lambda1, lambda2, &solver.config())?;
            debug_assert_eq!(x.shape(), (n1 * factor, n2 * factor));
            let x = Tensor3::from_frontal_slices(&[x])?;
            save(&x, &out)?;
            finish("lrtv", Some(&x), &report, t, &metrics, MetricsRow::default())
        }
        Command::Cluster { input, clusters, lambda1, lambda2, out, truth, solver, metrics } => {
            let y = load(&input)?;
            let t = Instant::now();
            let params = RepresentationParams { lambda1, lambda2 };
            let (assignment, report) = cluster_images(&y, clusters, params, &solver.config())?;
            let labels = assignment.labels();
            println!("{}", labels.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(","));
            if let Some(p) = &out {
                write_labels(labels, p)?;
            }
            let mut row = MetricsRow::default();
            if let Some(p) = &truth {
                let truth = read_labels(p)?;
                let min = truth.iter().copied().min().unwrap_or(0);
                let shifted: Vec<usize> = truth.iter().map(|l| l - min).collect();
                let acc = cluster_accuracy(&assignment.zero_based(), &shifted)?;
                println!("accuracy={acc}");
                row.cluster_accuracy = Some(acc);
            }
            finish("cluster", None, &report, t, &metrics, row)
        }
        Command::Synth(args) => run_synth(args),
        Command::Metrics { input, reference, peak, metrics_csv, experiment } => {
            let mut row = MetricsRow {
                experiment,
                solver: "metrics".into(),
                ..Default::default()
            };
            match (io::read_any(&input)?, io::read_any(&reference)?) {
                (TensorData::Real(x), TensorData::Real(r)) => {
                    let p = psnr(&x, &r, peak)?;
                    let e = rse(&x, &r)?;
                    println!("psnr={} rse={}", if p.is_infinite() { "inf".into() } else { p.to_string() }, e);
                    row.psnr = Some(p);
                    row.rse = Some(e);
                }
                (TensorData::Mask(x), TensorData::Mask(r)) => {
                    let f = f_measure(&x, &r)?;
                    println!("f_measure={f}");
                    row.f_measure = Some(f);
                }
                (TensorData::Real(x), TensorData::Mask(r)) => {
                    // support of a recovered sparse component against a true mask
                    let f = f_measure(&support(&x, 1e-6 * x.max_abs()), &r)?;
                    println!("f_measure={f}");
                    row.f_measure = Some(f);
                }
                _ => bail!("cannot compare a mask against a real tensor"),
            }
            if let Some(p) = metrics_csv {
                io::append_metrics(p, &row)?;
            }
            Ok(())
        }
    }
}

fn run_synth(a: SynthArgs) -> Result<()> {
    let need = |p: &Option<PathBuf>, name: &str| -> Result<PathBuf> {
        p.clone().with_context(|| format!("--{name} is required for this kind"))
    };
    match a.kind {
        SynthKind::LowTubalRank => {
            let x = synth::low_tubal_rank(a.dims.unwrap_or((30, 30, 10)), a.rank, a.seed)?;
            save(&x, &a.out)
        }
        SynthKind::SparseSpikes => {
            let base = a.input.as_deref().map(load).transpose()?;
            let dims = base.as_ref().map(|b| b.dims()).or(a.dims).unwrap_or((30, 30, 10));
            let (s, mask) = synth::sparse_spikes(dims, a.density, a.magnitude.unwrap_or(5.0), a.seed)?;
            let x = match base {
                Some(b) => &b + &s,
                None => s,
            };
            save(&x, &a.out)?;
            if let Some(p) = &a.out2 {
                save_mask(&mask, p)?;
            }
            Ok(())
        }
        SynthKind::MissingMask => {
            let m = synth::missing_mask(a.dims.unwrap_or((30, 30, 10)), a.observed, a.seed)?;
            save_mask(&m, &a.out)
        }
        SynthKind::SurveillanceVideo => {
            let spec = VideoSpec {
                dims: a.dims.unwrap_or(VideoSpec::default().dims),
                ..Default::default()
            };
            let v = synth::surveillance_video(spec, a.seed)?;
            save(&v.video, &a.out)?;
            save_opt(&v.background, &a.out2)?;
            if let Some(p) = &a.out3 {
                save_mask(&v.foreground, p)?;
            }
            Ok(())
        }
        SynthKind::RainStreaks => {
            let v = synth::rain_streaks(a.dims.unwrap_or((32, 32, 10)), a.density, a.magnitude.unwrap_or(0.8), a.seed)?;
            save(&v.rainy, &a.out)?;
            save_opt(&v.clean, &a.out2)?;
            if let Some(p) = &a.out3 {
                save_mask(&v.streaks, p)?;
            }
            Ok(())
        }
        SynthKind::HsiCube => {
            let spec = HsiSpec {
                dims: a.dims.unwrap_or(HsiSpec::default().dims),
                ..Default::default()
            };
            let c = synth::hsi_cube(spec, a.seed)?;
            save(&c.noisy, &a.out)?;
            save_opt(&c.clean, &a.out2)?;
            if let Some(p) = &a.out3 {
                save_mask(&c.impulses, p)?;
            }
            Ok(())
        }
        SynthKind::SubmoduleImages => {
            let (n1, _, n3) = a.dims.unwrap_or((16, 1, 8));
            let spec = SubmoduleSpec {
                n1,
                n3,
                clusters: a.clusters,
                per_cluster: a.per_cluster,
                dim: a.rank,
            };
            let d = synth::submodule_images(spec, a.seed)?;
            save(&d.stacked, &a.out)?;
            let labels: Vec<usize> = d.labels.iter().map(|l| l + 1).collect();
            write_labels(&labels, &need(&a.out2, "out2")?)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
