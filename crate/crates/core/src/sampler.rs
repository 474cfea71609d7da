//! The learned sampler: a latent-array point-cloud encoder, a causal node
//! decoder over the goal plus the most recent tree nodes, and a diagonal
//! Gaussian head that proposes the next state.
//!
//! All model-space coordinates are normalized to [-1, 1]. The decoder sees
//! a goal token (type embedding, no position) followed by at most
//! [`CONTEXT_WINDOW`] node tokens carrying positional embeddings indexed
//! from the window end, so predictions depend only on the recent suffix.

use crate::autodiff::{
    Checkpoint, CheckpointError, Gradients, ParamSet, Tape, Tensor, Var,
};
use crate::geometry::{SpaceTag, State, StateSpace};
use crate::nn::{
    self, bind_block, bind_encoder, bind_linear, causal_mask, encode_point_set, linear,
    transformer_block, Bound, SIGMA_FLOOR,
};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Decoder context window: the goal token plus at most this many recent
/// node tokens.
pub const CONTEXT_WINDOW: usize = 5;

const LOG_2PI: f64 = 1.8378770664093453; // ln(2*pi)

/// Architecture hyperparameters. Embedded in checkpoints so a model loads
/// without a sidecar config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub space: SpaceTag,
    pub d_model: usize,
    pub latent_len: usize,
    pub n_heads: usize,
    pub encoder_self_layers: usize,
    pub decoder_self_layers: usize,
    pub context_window: usize,
    /// MLP hidden width as a multiple of d_model.
    pub mlp_mult: usize,
    /// Predict deltas from the previous node instead of absolute states.
    pub predict_delta: bool,
}

impl SamplerConfig {
    pub fn for_space(space: SpaceTag) -> Self {
        SamplerConfig {
            space,
            d_model: 64,
            latent_len: 32,
            n_heads: 4,
            encoder_self_layers: 2,
            decoder_self_layers: 2,
            context_window: CONTEXT_WINDOW,
            mlp_mult: crate::nn::DEFAULT_MLP_MULT,
            predict_delta: false,
        }
    }

    pub fn state_dim(&self) -> usize {
        self.space.dim()
    }

    pub fn point_dim(&self) -> usize {
        self.space.ambient_dim()
    }

    fn validate(&self) {
        assert!(self.d_model % self.n_heads == 0, "d_model must divide by n_heads");
        assert!(self.context_window >= 1);
        assert!(self.latent_len >= 1);
    }

    fn to_hyperparameters(&self) -> Vec<(String, String)> {
        vec![
            ("space".into(), self.space.name().into()),
            ("d_model".into(), self.d_model.to_string()),
            ("latent_len".into(), self.latent_len.to_string()),
            ("n_heads".into(), self.n_heads.to_string()),
            ("encoder_self_layers".into(), self.encoder_self_layers.to_string()),
            ("decoder_self_layers".into(), self.decoder_self_layers.to_string()),
            ("context_window".into(), self.context_window.to_string()),
            ("mlp_mult".into(), self.mlp_mult.to_string()),
            ("predict_delta".into(), self.predict_delta.to_string()),
        ]
    }

    fn from_checkpoint(ck: &Checkpoint) -> Result<Self, ModelError> {
        let get = |key: &str| {
            ck.hyper(key)
                .ok_or_else(|| ModelError::MissingHyperparameter(key.to_string()))
        };
        let space = SpaceTag::parse(get("space")?)
            .ok_or_else(|| ModelError::MissingHyperparameter("space".into()))?;
        let parse_usize = |key: &str| -> Result<usize, ModelError> {
            get(key)?
                .parse()
                .map_err(|_| ModelError::MissingHyperparameter(key.to_string()))
        };
        Ok(SamplerConfig {
            space,
            d_model: parse_usize("d_model")?,
            latent_len: parse_usize("latent_len")?,
            n_heads: parse_usize("n_heads")?,
            encoder_self_layers: parse_usize("encoder_self_layers")?,
            decoder_self_layers: parse_usize("decoder_self_layers")?,
            context_window: parse_usize("context_window")?,
            mlp_mult: parse_usize("mlp_mult")?,
            predict_delta: get("predict_delta")? == "true",
        })
    }
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("checkpoint is for model kind {found:?}, expected {expected:?}")]
    WrongModelKind { expected: String, found: String },
    #[error("checkpoint header is missing or has malformed key {0:?}")]
    MissingHyperparameter(String),
    #[error("model was trained for space {model:?} but the scenario uses {scenario:?}")]
    SpaceMismatch { model: SpaceTag, scenario: SpaceTag },
    #[error("forward pass produced a non-finite value: {0}")]
    NonFinite(String),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
}

/// Mean and standard deviation of the next-state distribution, in
/// normalized coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianStep {
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
}

/// One training example: a normalized point cloud, goal and path.
#[derive(Debug, Clone)]
pub struct ModelExample {
    pub cloud: Tensor,
    pub goal: Vec<f64>,
    /// Normalized path states, root first; at least two entries.
    pub path: Vec<Vec<f64>>,
}

/// The learned sampler model.
#[derive(Debug, Clone)]
pub struct SamplerModel {
    pub config: SamplerConfig,
    pub params: ParamSet,
}

struct DecoderVars {
    node_emb: nn::LinearVars,
    goal_emb: nn::LinearVars,
    goal_type: Var,
    pos_emb: Var,
    selfs: Vec<nn::BlockVars>,
    cross: nn::BlockVars,
    mu: nn::LinearVars,
    sigma: nn::LinearVars,
}

struct SamplerVars {
    encoder: nn::EncoderVars,
    decoder: DecoderVars,
}

impl SamplerModel {
    /// Fresh model with seeded initialisation.
    pub fn init(config: SamplerConfig, seed: u64) -> Self {
        config.validate();
        let mut rng = crate::seed::rng_for(seed, &[crate::seed::tag::MODEL_INIT]);
        let mut params = ParamSet::new();
        nn::init_encoder(
            &mut params,
            "enc",
            config.d_model,
            config.latent_len,
            config.point_dim(),
            config.encoder_self_layers,
            config.mlp_mult,
            &mut rng,
        );
        let d = config.state_dim();
        nn::init_linear(&mut params, "dec.node_emb", d, config.d_model, &mut rng);
        nn::init_linear(&mut params, "dec.goal_emb", d, config.d_model, &mut rng);
        params.insert(
            "dec.goal_type",
            Tensor::small_normal(1, config.d_model, 0.02, &mut rng),
        );
        params.insert(
            "dec.pos_emb",
            Tensor::small_normal(config.context_window, config.d_model, 0.02, &mut rng),
        );
        for l in 0..config.decoder_self_layers {
            nn::init_block(&mut params, &format!("dec.self{l}"), config.d_model, config.mlp_mult, &mut rng);
        }
        nn::init_block(&mut params, "dec.cross", config.d_model, config.mlp_mult, &mut rng);
        nn::init_linear(&mut params, "dec.mu", config.d_model, d, &mut rng);
        nn::init_linear(&mut params, "dec.sigma", config.d_model, d, &mut rng);
        SamplerModel { config, params }
    }

    fn bind(&self, tape: &mut Tape) -> (Bound, SamplerVars) {
        let bound = Bound::new(tape, &self.params);
        let vars = SamplerVars {
            encoder: bind_encoder(&bound, &self.params, "enc", self.config.encoder_self_layers),
            decoder: DecoderVars {
                node_emb: bind_linear(&bound, &self.params, "dec.node_emb"),
                goal_emb: bind_linear(&bound, &self.params, "dec.goal_emb"),
                goal_type: bound.var(&self.params, "dec.goal_type"),
                pos_emb: bound.var(&self.params, "dec.pos_emb"),
                selfs: (0..self.config.decoder_self_layers)
                    .map(|l| bind_block(&bound, &self.params, &format!("dec.self{l}")))
                    .collect(),
                cross: bind_block(&bound, &self.params, "dec.cross"),
                mu: bind_linear(&bound, &self.params, "dec.mu"),
                sigma: bind_linear(&bound, &self.params, "dec.sigma"),
            },
        };
        (bound, vars)
    }

    /// Encodes a normalized point cloud into the latent array Z_p
    /// (inference only; no gradients retained).
    pub fn encode_state_space(&self, cloud_normalized: &Tensor) -> Tensor {
        let mut tape = Tape::new();
        let (_, vars) = self.bind(&mut tape);
        let z = encode_point_set(&mut tape, &vars.encoder, self.config.n_heads, cloud_normalized);
        tape.value(z).clone()
    }

    /// Decoder forward for one prediction: tokens are the goal plus the
    /// last `context_window` nodes of `nodes`, causal self-attention, then
    /// cross-attention into `z_p`, with the Gaussian head applied to the
    /// final node token.
    fn decode_on_tape(
        &self,
        tape: &mut Tape,
        vars: &SamplerVars,
        z_p: Var,
        goal: &[f64],
        nodes: &[Vec<f64>],
    ) -> (Var, Var) {
        assert!(!nodes.is_empty(), "decoder requires at least the root node");
        let d = self.config.state_dim();
        assert_eq!(goal.len(), d);
        let w = self.config.context_window;
        let window = if nodes.len() > w {
            &nodes[nodes.len() - w..]
        } else {
            nodes
        };
        let k = window.len();

        let goal_in = tape.leaf(Tensor::row(goal));
        let goal_tok = linear(tape, goal_in, &vars.decoder.goal_emb);
        let goal_tok = tape.add(goal_tok, vars.decoder.goal_type);

        let mut node_data = Vec::with_capacity(k * d);
        for n in window {
            assert_eq!(n.len(), d);
            node_data.extend_from_slice(n);
        }
        let nodes_in = tape.leaf(Tensor::from_vec(k, d, node_data));
        let node_tok = linear(tape, nodes_in, &vars.decoder.node_emb);
        // positions are indexed from the window end so a full-sequence
        // prediction equals the windowed one exactly
        let pos = tape.slice_rows(vars.decoder.pos_emb, w - k, w);
        let node_tok = tape.add(node_tok, pos);

        let mut tokens = tape.concat_rows(&[goal_tok, node_tok]);
        let mask = causal_mask(k + 1);
        for blk in &vars.decoder.selfs {
            tokens = transformer_block(tape, tokens, tokens, self.config.n_heads, blk, Some(&mask));
        }
        let tokens = transformer_block(
            tape,
            tokens,
            z_p,
            self.config.n_heads,
            &vars.decoder.cross,
            None,
        );
        let last = tape.slice_rows(tokens, k, k + 1);
        let mu = linear(tape, last, &vars.decoder.mu);
        let mu = if self.config.predict_delta {
            let prev = tape.leaf(Tensor::row(&window[k - 1]));
            tape.add(mu, prev)
        } else {
            mu
        };
        let raw_sigma = linear(tape, last, &vars.decoder.sigma);
        let sp = tape.softplus(raw_sigma);
        let sigma = tape.add_scalar(sp, SIGMA_FLOOR);
        (mu, sigma)
    }

    /// Predicts the next-state distribution given the cached latents, the
    /// goal, and the node sequence so far (all normalized).
    pub fn decode_next(&self, z_p: &Tensor, goal: &[f64], nodes: &[Vec<f64>]) -> GaussianStep {
        let mut tape = Tape::new();
        let (_, vars) = self.bind(&mut tape);
        let z = tape.leaf(z_p.clone());
        let (mu, sigma) = self.decode_on_tape(&mut tape, &vars, z, goal, nodes);
        GaussianStep {
            mu: tape.value(mu).data().to_vec(),
            sigma: tape.value(sigma).data().to_vec(),
        }
    }

    /// Teacher-forced per-path mean log-likelihood terms plus per-path mean
    /// entropy, on an existing tape. Returns (mean_log_lik, mean_entropy).
    fn path_terms_on_tape(
        &self,
        tape: &mut Tape,
        vars: &SamplerVars,
        example: &ModelExample,
    ) -> (Var, Var) {
        assert!(
            example.path.len() >= 2,
            "a path must contain at least two states"
        );
        let d = self.config.state_dim() as f64;
        let z_p = encode_point_set(tape, &vars.encoder, self.config.n_heads, &example.cloud);
        let steps = example.path.len() - 1;
        let mut log_lik_sum: Option<Var> = None;
        let mut entropy_sum: Option<Var> = None;
        for i in 1..example.path.len() {
            let (mu, sigma) = self.decode_on_tape(tape, vars, z_p, &example.goal, &example.path[..i]);
            let target = tape.leaf(Tensor::row(&example.path[i]));
            // log N(x; mu, diag sigma^2)
            //   = -d/2 ln(2pi) - sum ln sigma - sum (x-mu)^2 / (2 sigma^2)
            let diff = tape.sub(target, mu);
            let sq = tape.mul(diff, diff);
            let var2 = tape.mul(sigma, sigma);
            let quad = tape.div(sq, var2);
            let quad_sum = tape.sum_all(quad);
            let quad_term = tape.scale(quad_sum, -0.5);
            let ln_sigma = tape.log(sigma);
            let ln_sigma_sum = tape.sum_all(ln_sigma);
            let ln_term = tape.scale(ln_sigma_sum, -1.0);
            let partial = tape.add(quad_term, ln_term);
            let logp = tape.add_scalar(partial, -0.5 * d * LOG_2PI);
            log_lik_sum = Some(match log_lik_sum {
                Some(acc) => tape.add(acc, logp),
                None => logp,
            });
            // closed-form diagonal Gaussian entropy:
            //   sum_j 0.5 ln(2 pi e sigma_j^2) = d/2 ln(2 pi e) + sum ln sigma
            let ent = tape.add_scalar(ln_sigma_sum, 0.5 * d * (LOG_2PI + 1.0));
            entropy_sum = Some(match entropy_sum {
                Some(acc) => tape.add(acc, ent),
                None => ent,
            });
        }
        let inv_steps = 1.0 / steps as f64;
        let mean_ll = tape.scale(log_lik_sum.unwrap(), inv_steps);
        let mean_ent = tape.scale(entropy_sum.unwrap(), inv_steps);
        (mean_ll, mean_ent)
    }

    /// Weighted negative log-likelihood with an entropy bonus:
    /// `-(1/B) sum_b w_b * mean_ll_b - lambda * (1/B) sum_b mean_entropy_b`.
    ///
    /// With all weights 1 and lambda 0 this is exactly the pretraining
    /// negative log-likelihood.
    pub fn weighted_nll_loss_grad(
        &self,
        batch: &[ModelExample],
        weights: &[f64],
        lambda: f64,
    ) -> Result<(f64, Gradients), ModelError> {
        assert_eq!(batch.len(), weights.len());
        assert!(!batch.is_empty(), "empty batch");
        let mut tape = Tape::new();
        let (bound, vars) = self.bind(&mut tape);
        let mut loss_acc: Option<Var> = None;
        for (example, &w) in batch.iter().zip(weights) {
            let (mean_ll, mean_ent) = self.path_terms_on_tape(&mut tape, &vars, example);
            let weighted = tape.scale(mean_ll, -w);
            let ent_term = tape.scale(mean_ent, -lambda);
            let term = tape.add(weighted, ent_term);
            loss_acc = Some(match loss_acc {
                Some(acc) => tape.add(acc, term),
                None => term,
            });
        }
        let loss = tape.scale(loss_acc.unwrap(), 1.0 / batch.len() as f64);
        if let Some(what) = tape.first_nonfinite() {
            return Err(ModelError::NonFinite(what.to_string()));
        }
        let value = tape.value(loss).item();
        tape.backward(loss);
        Ok((value, bound.gradients(&tape)))
    }

    /// Plain negative log-likelihood (teacher forcing), averaged over steps
    /// and then over the batch.
    pub fn nll_loss_grad(&self, batch: &[ModelExample]) -> Result<(f64, Gradients), ModelError> {
        let weights = vec![1.0; batch.len()];
        self.weighted_nll_loss_grad(batch, &weights, 0.0)
    }

    /// Loss value only.
    pub fn nll_loss(&self, batch: &[ModelExample]) -> Result<f64, ModelError> {
        Ok(self.nll_loss_grad(batch)?.0)
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint::new(
            "sampler",
            self.config.to_hyperparameters(),
            self.params.clone(),
        )
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self, ModelError> {
        if ck.model_kind != "sampler" {
            return Err(ModelError::WrongModelKind {
                expected: "sampler".into(),
                found: ck.model_kind.clone(),
            });
        }
        let config = SamplerConfig::from_checkpoint(ck)?;
        config.validate();
        Ok(SamplerModel {
            config,
            params: ck.params.clone(),
        })
    }
}

/// Draws a state from the step distribution, denormalizes it and clamps or
/// wraps it into bounds.
pub fn sample_next<R: Rng + ?Sized>(
    step: &GaussianStep,
    space: &StateSpace,
    rng: &mut R,
) -> State {
    let v: Vec<f64> = step
        .mu
        .iter()
        .zip(&step.sigma)
        .map(|(&m, &s)| {
            let z: f64 = rng.sample(rand_distr::StandardNormal);
            m + s * z
        })
        .collect();
    space.denormalize_from_model(&v)
}

/// With probability `prob`, reverses a path (start/goal roles swap at the
/// call site by conditioning on the reversed path's destination).
pub fn reverse_augment<R: Rng + ?Sized>(path: &[State], rng: &mut R, prob: f64) -> Vec<State> {
    if rng.random_range(0.0..1.0) < prob {
        path.iter().rev().cloned().collect()
    } else {
        path.to_vec()
    }
}
