//! SVM model container (`LSFS`): payload is the solver configuration, then
//! `n_sv: u32, dim: u32`, bias, gamma, the signed dual coefficients, and the
//! support vectors row-major as 64-bit floats.

use super::smo::SvmModel;
use super::SvmConfig;
use crate::container::{self, ContainerError, PayloadReader, PayloadWriter};
use crate::linalg::Mat;
use std::path::Path;

pub const SVM_MAGIC: [u8; 4] = *b"LSFS";

pub fn save_svm(path: &Path, model: &SvmModel) -> Result<u64, ContainerError> {
    let mut w = PayloadWriter::new();
    w.f64(model.config.c);
    w.f64(model.config.gamma);
    w.f64(model.config.class_weight.0);
    w.f64(model.config.class_weight.1);
    w.f64(model.config.tolerance);
    w.u64(model.config.max_iterations as u64);
    w.u64(model.n_iterations as u64);
    w.u32(u32::from(model.converged));
    w.f64(model.dual_objective);
    w.u32(model.support_vectors.rows as u32);
    w.u32(model.support_vectors.cols as u32);
    w.f64(model.bias);
    w.f64(model.gamma);
    w.f64_slice(&model.dual_coeffs);
    w.f64_slice(&model.support_vectors.data);
    container::write_file(path, SVM_MAGIC, &w.finish())
}

pub fn load_svm(path: &Path) -> Result<(SvmModel, u64), ContainerError> {
    let (payload, digest) = container::read_file(path, SVM_MAGIC)?;
    let mut r = PayloadReader::new(&payload);
    let c = r.f64()?;
    let cfg_gamma = r.f64()?;
    let w_neg = r.f64()?;
    let w_pos = r.f64()?;
    let tolerance = r.f64()?;
    let max_iterations = r.u64()? as usize;
    let n_iterations = r.u64()? as usize;
    let converged = r.u32()? != 0;
    let dual_objective = r.f64()?;
    let n_sv = r.u32()? as usize;
    let dim = r.u32()? as usize;
    let bias = r.f64()?;
    let gamma = r.f64()?;
    let dual_coeffs = r.f64_vec(n_sv)?;
    let data = r.f64_vec(n_sv * dim)?;
    r.done()?;
    let model = SvmModel {
        support_vectors: Mat {
            rows: n_sv,
            cols: dim,
            data,
        },
        dual_coeffs,
        bias,
        gamma,
        config: SvmConfig {
            c,
            gamma: cfg_gamma,
            class_weight: (w_neg, w_pos),
            tolerance,
            max_iterations,
            ..SvmConfig::default()
        },
        n_iterations,
        converged,
        dual_objective,
    };
    Ok((model, digest))
}
