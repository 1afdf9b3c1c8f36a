//! Transform-based third-order tensor algebra and low-tubal-rank recovery.
//!
//! The crate covers the t-product algebra (t-SVD, multirank, tensor nuclear
//! norm), the proximal operators built on it, ADMM solvers for completion,
//! robust decomposition, denoising, background/foreground separation and
//! rain removal, union-of-free-submodules clustering, matrix counterparts of
//! the models, and a small binary file format.

pub mod cluster;
pub mod error;
pub mod io;
pub mod matrix;
pub mod metrics;
pub mod solvers;
pub mod synth;
pub mod shrink;
pub mod spectral;
pub mod tensor;
pub mod tprod;

pub use error::{Error, Result};
pub use shrink::{
    diff, diff_adjoint, masked_soft_threshold, soft_threshold, tsvt, weighted_tsvt, DiffAxis,
    WeightVector,
};
pub use spectral::{complex_svd, from_spectral, to_spectral, CMatrix, ComplexSvd, SpectralTensor3};
pub use tensor::{Mask3, Matrix, SliceAxis, Tensor3};
pub use tprod::{
    identity_tensor, is_unitary, multirank, t_product, t_product_circulant, t_svd, t_transpose,
    tnn, tubal_rank, TSvdFactors,
};
