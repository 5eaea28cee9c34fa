//! Feed-forward map from `[anchor extractor, primary embedding]` (2K) through
//! a tanh hidden layer to a K-dimensional canonical embedding.

use alloc::vec;
use alloc::vec::Vec;

use super::config::Variant;
use super::params::{MapperSlots, ModelParams};
use crate::error::{Error, Result};
use crate::extractor::{EmbeddingField, ExtractorVec};
use crate::linalg::{
    Strides, accumulate_column_sums, accumulate_weight_grad, axpy, dot, gemm, matmul_bt, tanh,
};

pub(crate) struct MapperCache {
    /// `N x ff_hidden` post-tanh activations.
    hidden: Vec<f64>,
    /// `N x K` canonical embeddings.
    pub out: Vec<f64>,
}

fn slots(params: &ModelParams) -> Result<&MapperSlots> {
    params.layout.mapper.as_ref().ok_or(Error::WrongVariant {
        operation: "canonical mapping",
        variant: params.config().variant,
    })
}

pub(crate) fn forward(params: &ModelParams, anchor: &[f64], v: &[f64]) -> Result<MapperCache> {
    let s = slots(params)?;
    let k = params.config().embed_dim;
    let nh = params.config().ff_hidden;
    let w1 = params.slice(&s.w1);
    let b1 = params.slice(&s.b1);
    let w2 = params.slice(&s.w2);
    let b2 = params.slice(&s.b2);
    // The anchor half of the first layer is shared by every bin.
    let shared: Vec<f64> = (0..nh)
        .map(|r| b1[r] + dot(&w1[r * 2 * k..r * 2 * k + k], anchor))
        .collect();
    let n = v.len() / k;
    let mut hidden = vec![0.0; n * nh];
    gemm(
        1.0,
        v,
        Strides::dense(n, k),
        &w1[k..],
        w1_embedding_t(k, nh),
        0.0,
        &mut hidden,
        Strides::dense(n, nh),
    );
    for hid in hidden.chunks_exact_mut(nh) {
        for (h, &sh) in hid.iter_mut().zip(&shared) {
            *h = tanh(*h + sh);
        }
    }
    let mut out = vec![0.0; n * k];
    matmul_bt(&hidden, nh, w2, &mut out);
    for o in out.chunks_exact_mut(k) {
        axpy(1.0, b2, o);
    }
    Ok(MapperCache { hidden, out })
}

/// The embedding half of `w1` (`nh x 2K`, columns `K..2K`) viewed as `K x nh`;
/// index it from `w1[K..]`.
fn w1_embedding_t(k: usize, nh: usize) -> Strides {
    Strides {
        rows: k,
        cols: nh,
        rs: 1,
        cs: 2 * k,
    }
}

/// Accumulates mapper weight gradients into `grads`, adds the input-embedding
/// gradient into `d_v` and the anchor-extractor gradient into `d_anchor`.
pub(crate) fn backward(
    params: &ModelParams,
    cache: &MapperCache,
    anchor: &[f64],
    v: &[f64],
    d_out: &[f64],
    grads: &mut [f64],
    d_v: &mut [f64],
    d_anchor: &mut [f64],
) -> Result<()> {
    let s = slots(params)?.clone();
    let k = params.config().embed_dim;
    let nh = params.config().ff_hidden;
    let n = v.len() / k;
    let w1 = params.slice(&s.w1);
    let w2 = params.slice(&s.w2);

    // d_pre = (d_out w2) * (1 - h^2)
    let mut d_pre = vec![0.0; n * nh];
    gemm(
        1.0,
        d_out,
        Strides::dense(n, k),
        w2,
        Strides::dense(k, nh),
        0.0,
        &mut d_pre,
        Strides::dense(n, nh),
    );
    let mut d_pre_sum = vec![0.0; nh];
    for (dp, hid) in d_pre.chunks_exact_mut(nh).zip(cache.hidden.chunks_exact(nh)) {
        for ((d, &h), sum) in dp.iter_mut().zip(hid).zip(d_pre_sum.iter_mut()) {
            *d *= 1.0 - h * h;
            *sum += *d;
        }
    }
    accumulate_weight_grad(d_out, &cache.hidden, nh, &mut grads[s.w2.clone()]);
    accumulate_column_sums(d_out, &mut grads[s.b2.clone()]);
    for (g, d) in grads[s.b1.clone()].iter_mut().zip(&d_pre_sum) {
        *g += d;
    }
    // Embedding half of w1: grad[r, K + j] += sum_n d_pre[n, r] v[n, j].
    gemm(
        1.0,
        &d_pre,
        Strides::transposed(nh, n),
        v,
        Strides::dense(n, k),
        1.0,
        &mut grads[s.w1.start + k..s.w1.end],
        Strides {
            rows: nh,
            cols: k,
            rs: 2 * k,
            cs: 1,
        },
    );
    gemm(
        1.0,
        &d_pre,
        Strides::dense(n, nh),
        &w1[k..],
        Strides {
            rows: nh,
            cols: k,
            rs: 2 * k,
            cs: 1,
        },
        1.0,
        d_v,
        Strides::dense(n, k),
    );
    let gw1 = &mut grads[s.w1.clone()];
    for r in 0..nh {
        axpy(d_pre_sum[r], anchor, &mut gw1[r * 2 * k..r * 2 * k + k]);
        axpy(d_pre_sum[r], &w1[r * 2 * k..r * 2 * k + k], d_anchor);
    }
    Ok(())
}

/// Canonical embeddings: the mapper applied to every bin of `v` with the
/// anchor extractor broadcast across bins.
pub fn map_canonical(params: &ModelParams, a: &ExtractorVec, v: &EmbeddingField) -> Result<EmbeddingField> {
    let cfg = params.config();
    if cfg.variant != Variant::Denet {
        return Err(Error::WrongVariant {
            operation: "canonical mapping",
            variant: cfg.variant,
        });
    }
    for (found, context) in [(a.dim(), "anchor extractor dimension"), (v.dim(), "embedding dimension")] {
        if found != cfg.embed_dim {
            return Err(Error::ShapeMismatch {
                context,
                expected: cfg.embed_dim,
                found,
            });
        }
    }
    let cache = forward(params, a.as_slice(), v.as_slice())?;
    EmbeddingField::from_vec(v.num_bins(), v.num_frames(), v.dim(), cache.out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{ModelConfig, init_params};

    fn params() -> ModelParams {
        let mut cfg = ModelConfig::desk(Variant::Denet).with_num_bins(3);
        cfg.embed_dim = 4;
        cfg.ff_hidden = 6;
        init_params(cfg, 5).unwrap()
    }

    fn field() -> EmbeddingField {
        let mut data: Vec<f64> = (0..3 * 2 * 4).map(|i| ((i * 7 % 11) as f64 / 11.0) - 0.5).collect();
        // bins (0,0) and (2,1) share an embedding
        let copy: Vec<f64> = data[..4].to_vec();
        data[(3 + 2) * 4..(3 + 2) * 4 + 4].copy_from_slice(&copy);
        EmbeddingField::from_vec(3, 2, 4, data).unwrap()
    }

    #[test]
    fn output_shape_and_pointwise_behaviour() {
        let p = params();
        let a = ExtractorVec(vec![0.1, -0.2, 0.3, 0.0]);
        let v = field();
        let out = map_canonical(&p, &a, &v).unwrap();
        assert_eq!((out.num_bins(), out.num_frames(), out.dim()), (3, 2, 4));
        assert_eq!(out.embedding(0, 0), out.embedding(2, 1));
        assert_ne!(out.embedding(0, 0), out.embedding(1, 0));
    }

    #[test]
    fn anchor_changes_the_output() {
        let p = params();
        let v = field();
        let a = map_canonical(&p, &ExtractorVec(vec![0.1, -0.2, 0.3, 0.0]), &v).unwrap();
        let b = map_canonical(&p, &ExtractorVec(vec![0.1, -0.2, 0.3, 1e-3]), &v).unwrap();
        assert!(a.as_slice().iter().zip(b.as_slice()).any(|(x, y)| x != y));
    }

    #[test]
    fn wrong_variant_is_rejected() {
        let mut cfg = ModelConfig::desk(Variant::DanetAnchor).with_num_bins(3);
        cfg.embed_dim = 4;
        let p = init_params(cfg, 5).unwrap();
        let err = map_canonical(&p, &ExtractorVec(vec![0.0; 4]), &field()).unwrap_err();
        assert!(matches!(err, Error::WrongVariant { .. }));
    }
}
