//! Path-length estimator: the same latent-array encoder architecture as the
//! sampler (separate weights) plus a learned readout token that
//! cross-attends to the latents and the embedded start/goal, ending in a
//! softplus scalar head so predicted lengths stay nonnegative.

use crate::autodiff::{Checkpoint, Gradients, ParamSet, Tape, Tensor, Var};
use crate::geometry::SpaceTag;
use crate::nn::{
    self, bind_block, bind_encoder, bind_linear, encode_point_set, linear, transformer_block,
    Bound,
};
use crate::sampler::ModelError;
use serde::{Deserialize, Serialize};

/// Architecture version recorded in checkpoint headers.
pub const ESTIMATOR_ARCH_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub space: SpaceTag,
    pub d_model: usize,
    pub latent_len: usize,
    pub n_heads: usize,
    pub encoder_self_layers: usize,
    /// MLP hidden width as a multiple of d_model.
    pub mlp_mult: usize,
}

impl EstimatorConfig {
    pub fn for_space(space: SpaceTag) -> Self {
        EstimatorConfig {
            space,
            d_model: 64,
            latent_len: 32,
            n_heads: 4,
            encoder_self_layers: 2,
            mlp_mult: crate::nn::DEFAULT_MLP_MULT,
        }
    }

    fn to_hyperparameters(&self) -> Vec<(String, String)> {
        vec![
            ("space".into(), self.space.name().into()),
            ("d_model".into(), self.d_model.to_string()),
            ("latent_len".into(), self.latent_len.to_string()),
            ("n_heads".into(), self.n_heads.to_string()),
            ("encoder_self_layers".into(), self.encoder_self_layers.to_string()),
            ("mlp_mult".into(), self.mlp_mult.to_string()),
            ("arch_version".into(), ESTIMATOR_ARCH_VERSION.into()),
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
        Ok(EstimatorConfig {
            space,
            d_model: parse_usize("d_model")?,
            latent_len: parse_usize("latent_len")?,
            n_heads: parse_usize("n_heads")?,
            encoder_self_layers: parse_usize("encoder_self_layers")?,
            mlp_mult: parse_usize("mlp_mult")?,
        })
    }
}

/// One supervised example for the estimator.
#[derive(Debug, Clone)]
pub struct LengthExample {
    pub cloud: Tensor,
    pub start: Vec<f64>,
    pub goal: Vec<f64>,
    pub c_real: f64,
}

#[derive(Debug, Clone)]
pub struct EstimatorModel {
    pub config: EstimatorConfig,
    pub params: ParamSet,
}

struct EstimatorVars {
    encoder: nn::EncoderVars,
    start_emb: nn::LinearVars,
    goal_emb: nn::LinearVars,
    readout: Var,
    readout_block: nn::BlockVars,
    head1: nn::LinearVars,
    head2: nn::LinearVars,
}

impl EstimatorModel {
    pub fn init(config: EstimatorConfig, seed: u64) -> Self {
        let mut rng = crate::seed::rng_for(seed, &[crate::seed::tag::MODEL_INIT, 1]);
        let mut params = ParamSet::new();
        nn::init_encoder(
            &mut params,
            "enc",
            config.d_model,
            config.latent_len,
            config.space.ambient_dim(),
            config.encoder_self_layers,
            config.mlp_mult,
            &mut rng,
        );
        let d = config.space.dim();
        nn::init_linear(&mut params, "est.start_emb", d, config.d_model, &mut rng);
        nn::init_linear(&mut params, "est.goal_emb", d, config.d_model, &mut rng);
        params.insert(
            "est.readout",
            Tensor::small_normal(1, config.d_model, 0.02, &mut rng),
        );
        nn::init_block(&mut params, "est.readout_block", config.d_model, config.mlp_mult, &mut rng);
        nn::init_linear(&mut params, "est.head1", config.d_model, config.d_model, &mut rng);
        nn::init_linear(&mut params, "est.head2", config.d_model, 1, &mut rng);
        EstimatorModel { config, params }
    }

    fn bind(&self, tape: &mut Tape) -> (Bound, EstimatorVars) {
        let bound = Bound::new(tape, &self.params);
        let vars = EstimatorVars {
            encoder: bind_encoder(&bound, &self.params, "enc", self.config.encoder_self_layers),
            start_emb: bind_linear(&bound, &self.params, "est.start_emb"),
            goal_emb: bind_linear(&bound, &self.params, "est.goal_emb"),
            readout: bound.var(&self.params, "est.readout"),
            readout_block: bind_block(&bound, &self.params, "est.readout_block"),
            head1: bind_linear(&bound, &self.params, "est.head1"),
            head2: bind_linear(&bound, &self.params, "est.head2"),
        };
        (bound, vars)
    }

    fn estimate_on_tape(
        &self,
        tape: &mut Tape,
        vars: &EstimatorVars,
        cloud: &Tensor,
        start: &[f64],
        goal: &[f64],
    ) -> Var {
        let z = encode_point_set(tape, &vars.encoder, self.config.n_heads, cloud);
        let s_in = tape.leaf(Tensor::row(start));
        let s_tok = linear(tape, s_in, &vars.start_emb);
        let g_in = tape.leaf(Tensor::row(goal));
        let g_tok = linear(tape, g_in, &vars.goal_emb);
        let kv = tape.concat_rows(&[z, s_tok, g_tok]);
        let read = transformer_block(
            tape,
            vars.readout,
            kv,
            self.config.n_heads,
            &vars.readout_block,
            None,
        );
        let h = linear(tape, read, &vars.head1);
        let h = tape.relu(h);
        let raw = linear(tape, h, &vars.head2);
        tape.softplus(raw)
    }

    /// Predicted path length in workspace units (always nonnegative).
    pub fn estimate_length(&self, cloud: &Tensor, start: &[f64], goal: &[f64]) -> f64 {
        let mut tape = Tape::new();
        let (_, vars) = self.bind(&mut tape);
        let out = self.estimate_on_tape(&mut tape, &vars, cloud, start, goal);
        tape.value(out).item()
    }

    /// Batch-mean squared-error loss `(1/B) sum 0.5 (C_real - C_est)^2`
    /// with gradients.
    pub fn mse_loss_grad(&self, batch: &[LengthExample]) -> Result<(f64, Gradients), ModelError> {
        assert!(!batch.is_empty());
        let mut tape = Tape::new();
        let (bound, vars) = self.bind(&mut tape);
        let mut acc: Option<Var> = None;
        for ex in batch {
            let est = self.estimate_on_tape(&mut tape, &vars, &ex.cloud, &ex.start, &ex.goal);
            let target = tape.leaf(Tensor::scalar(ex.c_real));
            let diff = tape.sub(target, est);
            let sq = tape.mul(diff, diff);
            let half = tape.scale(sq, 0.5);
            acc = Some(match acc {
                Some(a) => tape.add(a, half),
                None => half,
            });
        }
        let loss = tape.scale(acc.unwrap(), 1.0 / batch.len() as f64);
        if let Some(what) = tape.first_nonfinite() {
            return Err(ModelError::NonFinite(what.to_string()));
        }
        let value = tape.value(loss).item();
        tape.backward(loss);
        Ok((value, bound.gradients(&tape)))
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint::new(
            "estimator",
            self.config.to_hyperparameters(),
            self.params.clone(),
        )
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self, ModelError> {
        if ck.model_kind != "estimator" {
            return Err(ModelError::WrongModelKind {
                expected: "estimator".into(),
                found: ck.model_kind.clone(),
            });
        }
        let config = EstimatorConfig::from_checkpoint(ck)?;
        Ok(EstimatorModel {
            config,
            params: ck.params.clone(),
        })
    }
}

/// The scalar estimator objective: exactly `0.5 (C_real - C_est)^2`.
pub fn estimator_loss(c_real: f64, c_est: f64) -> f64 {
    0.5 * (c_real - c_est).powi(2)
}
