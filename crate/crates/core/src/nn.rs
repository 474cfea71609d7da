//! Attention building blocks shared by the sampler and estimator networks:
//! linear layers, multi-head attention, post-norm transformer blocks, and
//! the latent-array point-cloud encoder both models use.

use crate::autodiff::{attention, ParamSet, Tape, Tensor, Var};
use rand::Rng;

/// Layer-norm epsilon.
pub const LN_EPS: f64 = 1e-5;
/// Additive floor applied to softplus-activated standard deviations.
pub const SIGMA_FLOOR: f64 = 1e-4;
/// Default MLP hidden width as a multiple of the model width.
pub const DEFAULT_MLP_MULT: usize = 4;

// ---------------------------------------------------------------------------
// Parameter registration
// ---------------------------------------------------------------------------

pub fn init_linear<R: Rng + ?Sized>(
    params: &mut ParamSet,
    prefix: &str,
    in_dim: usize,
    out_dim: usize,
    rng: &mut R,
) {
    params.insert(format!("{prefix}.w"), Tensor::xavier(in_dim, out_dim, rng));
    params.insert(format!("{prefix}.b"), Tensor::zeros(1, out_dim));
}

/// Registers one transformer block: attention projections, two layer norms
/// and the MLP. The key projection carries no bias: a per-row constant
/// added to every key cancels inside the softmax, so such a parameter
/// would have an identically zero gradient.
pub fn init_block<R: Rng + ?Sized>(
    params: &mut ParamSet,
    prefix: &str,
    d_model: usize,
    mlp_mult: usize,
    rng: &mut R,
) {
    for name in ["q", "v", "o"] {
        init_linear(params, &format!("{prefix}.{name}"), d_model, d_model, rng);
    }
    params.insert(format!("{prefix}.k.w"), Tensor::xavier(d_model, d_model, rng));
    params.insert(format!("{prefix}.ln1.g"), Tensor::full(1, d_model, 1.0));
    params.insert(format!("{prefix}.ln1.b"), Tensor::zeros(1, d_model));
    init_linear(params, &format!("{prefix}.mlp1"), d_model, mlp_mult * d_model, rng);
    init_linear(params, &format!("{prefix}.mlp2"), mlp_mult * d_model, d_model, rng);
    params.insert(format!("{prefix}.ln2.g"), Tensor::full(1, d_model, 1.0));
    params.insert(format!("{prefix}.ln2.b"), Tensor::zeros(1, d_model));
}

/// Registers the point-cloud encoder: learned latent query array, point
/// embedder, one cross-attention block and `self_layers` self-attention
/// blocks.
pub fn init_encoder<R: Rng + ?Sized>(
    params: &mut ParamSet,
    prefix: &str,
    d_model: usize,
    latent_len: usize,
    point_dim: usize,
    self_layers: usize,
    mlp_mult: usize,
    rng: &mut R,
) {
    params.insert(
        format!("{prefix}.latent"),
        Tensor::small_normal(latent_len, d_model, 0.02, rng),
    );
    init_linear(params, &format!("{prefix}.point_emb"), point_dim, d_model, rng);
    init_block(params, &format!("{prefix}.cross"), d_model, mlp_mult, rng);
    for l in 0..self_layers {
        init_block(params, &format!("{prefix}.self{l}"), d_model, mlp_mult, rng);
    }
}

// ---------------------------------------------------------------------------
// Tape-side bindings
// ---------------------------------------------------------------------------

/// All parameters of a set registered as leaves on one tape, in order.
pub struct Bound {
    vars: Vec<Var>,
}

impl Bound {
    pub fn new(tape: &mut Tape, params: &ParamSet) -> Self {
        let vars = (0..params.len())
            .map(|i| tape.leaf(params.by_index(i).1.clone()))
            .collect();
        Bound { vars }
    }

    pub fn var(&self, params: &ParamSet, name: &str) -> Var {
        self.vars[params.index_of(name)]
    }

    /// Gradients for every parameter, aligned with the set order. Call
    /// after `tape.backward`.
    pub fn gradients(&self, tape: &Tape) -> Vec<Tensor> {
        self.vars.iter().map(|&v| tape.grad(v)).collect()
    }
}

#[derive(Clone, Copy)]
pub struct LinearVars {
    pub w: Var,
    pub b: Var,
}

pub struct BlockVars {
    pub q: LinearVars,
    pub k_w: Var,
    pub v: LinearVars,
    pub o: LinearVars,
    pub ln1_g: Var,
    pub ln1_b: Var,
    pub mlp1: LinearVars,
    pub mlp2: LinearVars,
    pub ln2_g: Var,
    pub ln2_b: Var,
}

pub struct EncoderVars {
    pub latent: Var,
    pub point_emb: LinearVars,
    pub cross: BlockVars,
    pub selfs: Vec<BlockVars>,
}

pub fn bind_linear(bound: &Bound, params: &ParamSet, prefix: &str) -> LinearVars {
    LinearVars {
        w: bound.var(params, &format!("{prefix}.w")),
        b: bound.var(params, &format!("{prefix}.b")),
    }
}

pub fn bind_block(bound: &Bound, params: &ParamSet, prefix: &str) -> BlockVars {
    BlockVars {
        q: bind_linear(bound, params, &format!("{prefix}.q")),
        k_w: bound.var(params, &format!("{prefix}.k.w")),
        v: bind_linear(bound, params, &format!("{prefix}.v")),
        o: bind_linear(bound, params, &format!("{prefix}.o")),
        ln1_g: bound.var(params, &format!("{prefix}.ln1.g")),
        ln1_b: bound.var(params, &format!("{prefix}.ln1.b")),
        mlp1: bind_linear(bound, params, &format!("{prefix}.mlp1")),
        mlp2: bind_linear(bound, params, &format!("{prefix}.mlp2")),
        ln2_g: bound.var(params, &format!("{prefix}.ln2.g")),
        ln2_b: bound.var(params, &format!("{prefix}.ln2.b")),
    }
}

pub fn bind_encoder(
    bound: &Bound,
    params: &ParamSet,
    prefix: &str,
    self_layers: usize,
) -> EncoderVars {
    EncoderVars {
        latent: bound.var(params, &format!("{prefix}.latent")),
        point_emb: bind_linear(bound, params, &format!("{prefix}.point_emb")),
        cross: bind_block(bound, params, &format!("{prefix}.cross")),
        selfs: (0..self_layers)
            .map(|l| bind_block(bound, params, &format!("{prefix}.self{l}")))
            .collect(),
    }
}

// ---------------------------------------------------------------------------
// Forward helpers
// ---------------------------------------------------------------------------

pub fn linear(tape: &mut Tape, x: Var, l: &LinearVars) -> Var {
    let h = tape.matmul(x, l.w);
    tape.add_row(h, l.b)
}

fn layer_norm_affine(tape: &mut Tape, x: Var, g: Var, b: Var) -> Var {
    let n = tape.layer_norm(x, LN_EPS);
    let n = tape.mul_row(n, g);
    tape.add_row(n, b)
}

/// Multi-head attention with queries from `x_q` and keys/values from `x_kv`.
/// `mask` has one entry per (query row, kv row) pair, `true` = excluded.
pub fn multi_head_attention(
    tape: &mut Tape,
    x_q: Var,
    x_kv: Var,
    n_heads: usize,
    block: &BlockVars,
    mask: Option<&[bool]>,
) -> Var {
    let d_model = tape.value(x_q).cols();
    assert_eq!(d_model % n_heads, 0, "d_model must divide by n_heads");
    let d_head = d_model / n_heads;
    let q = linear(tape, x_q, &block.q);
    let k = tape.matmul(x_kv, block.k_w);
    let v = linear(tape, x_kv, &block.v);
    let heads: Vec<Var> = (0..n_heads)
        .map(|h| {
            let qs = tape.slice_cols(q, h * d_head, (h + 1) * d_head);
            let ks = tape.slice_cols(k, h * d_head, (h + 1) * d_head);
            let vs = tape.slice_cols(v, h * d_head, (h + 1) * d_head);
            attention(tape, qs, ks, vs, mask)
        })
        .collect();
    let cat = tape.concat_cols(&heads);
    linear(tape, cat, &block.o)
}

/// Post-norm transformer block: attention + residual + LN, MLP + residual
/// + LN.
pub fn transformer_block(
    tape: &mut Tape,
    x: Var,
    kv: Var,
    n_heads: usize,
    block: &BlockVars,
    mask: Option<&[bool]>,
) -> Var {
    let att = multi_head_attention(tape, x, kv, n_heads, block, mask);
    let res = tape.add(x, att);
    let x = layer_norm_affine(tape, res, block.ln1_g, block.ln1_b);
    let h = linear(tape, x, &block.mlp1);
    let h = tape.relu(h);
    let h = linear(tape, h, &block.mlp2);
    let res = tape.add(x, h);
    layer_norm_affine(tape, res, block.ln2_g, block.ln2_b)
}

/// Latent-array encoder: learned queries cross-attend to the embedded point
/// set (no positional information, so the result is order-free), then the
/// latents are refined by self-attention. Output length is fixed by the
/// latent count regardless of the input size.
pub fn encode_point_set(
    tape: &mut Tape,
    enc: &EncoderVars,
    n_heads: usize,
    cloud_normalized: &Tensor,
) -> Var {
    let points = tape.leaf(cloud_normalized.clone());
    let emb = linear(tape, points, &enc.point_emb);
    let mut z = transformer_block(tape, enc.latent, emb, n_heads, &enc.cross, None);
    for blk in &enc.selfs {
        z = transformer_block(tape, z, z, n_heads, blk, None);
    }
    z
}

/// Causal mask over a token sequence: row i may attend to columns <= i.
pub fn causal_mask(len: usize) -> Vec<bool> {
    let mut mask = vec![false; len * len];
    for i in 0..len {
        for j in 0..len {
            mask[i * len + j] = j > i;
        }
    }
    mask
}
