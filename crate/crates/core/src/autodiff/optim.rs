//! Parameter containers and optimizers.

use super::tensor::Tensor;
use std::collections::HashMap;

/// Named parameter tensors in a fixed registration order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamSet {
    names: Vec<String>,
    tensors: Vec<Tensor>,
    index: HashMap<String, usize>,
}

impl ParamSet {
    pub fn new() -> Self {
        ParamSet::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, t: Tensor) -> usize {
        let name = name.into();
        assert!(
            !self.index.contains_key(&name),
            "duplicate parameter name {name:?}"
        );
        let idx = self.tensors.len();
        self.index.insert(name.clone(), idx);
        self.names.push(name);
        self.tensors.push(t);
        idx
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    /// Total number of scalar parameters.
    pub fn num_scalars(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }

    pub fn get(&self, name: &str) -> &Tensor {
        &self.tensors[self.index[name]]
    }

    pub fn get_mut(&mut self, name: &str) -> &mut Tensor {
        &mut self.tensors[self.index[name]]
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    pub fn index_of(&self, name: &str) -> usize {
        *self
            .index
            .get(name)
            .unwrap_or_else(|| panic!("unknown parameter {name:?}"))
    }

    pub fn by_index(&self, i: usize) -> (&str, &Tensor) {
        (&self.names[i], &self.tensors[i])
    }

    pub fn by_index_mut(&mut self, i: usize) -> &mut Tensor {
        &mut self.tensors[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.names.iter().map(String::as_str).zip(self.tensors.iter())
    }
}

/// Gradients aligned with a [`ParamSet`]'s registration order.
pub type Gradients = Vec<Tensor>;

/// Optimizer choice. The plain step matches a vanilla gradient update; Adam
/// is the default for training stability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

/// Adam hyperparameters (also carries the SGD flag).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    pub kind: OptimizerKind,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl OptimizerConfig {
    pub fn adam(lr: f64) -> Self {
        OptimizerConfig {
            kind: OptimizerKind::Adam,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn sgd(lr: f64) -> Self {
        OptimizerConfig {
            kind: OptimizerKind::Sgd,
            lr,
            beta1: 0.0,
            beta2: 0.0,
            eps: 0.0,
        }
    }
}

/// Stateful optimizer over one [`ParamSet`].
pub struct Optimizer {
    config: OptimizerConfig,
    m: Vec<Tensor>,
    v: Vec<Tensor>,
    t: u64,
}

impl Optimizer {
    pub fn new(config: OptimizerConfig, params: &ParamSet) -> Self {
        let shapes: Vec<Tensor> = (0..params.len())
            .map(|i| {
                let (_, t) = params.by_index(i);
                Tensor::zeros(t.rows(), t.cols())
            })
            .collect();
        Optimizer {
            config,
            m: shapes.clone(),
            v: shapes,
            t: 0,
        }
    }

    pub fn config(&self) -> OptimizerConfig {
        self.config
    }

    /// One update step. `grads` must align with the param set order.
    pub fn step(&mut self, params: &mut ParamSet, grads: &Gradients) {
        assert_eq!(grads.len(), params.len(), "gradient/parameter count mismatch");
        match self.config.kind {
            OptimizerKind::Sgd => {
                for (i, g) in grads.iter().enumerate() {
                    let p = params.by_index_mut(i);
                    for (pv, gv) in p.data_mut().iter_mut().zip(g.data()) {
                        *pv -= self.config.lr * gv;
                    }
                }
            }
            OptimizerKind::Adam => {
                self.t += 1;
                let (b1, b2) = (self.config.beta1, self.config.beta2);
                let bc1 = 1.0 - b1.powi(self.t as i32);
                let bc2 = 1.0 - b2.powi(self.t as i32);
                for (i, g) in grads.iter().enumerate() {
                    let m = &mut self.m[i];
                    let v = &mut self.v[i];
                    let p = params.by_index_mut(i);
                    for (((pv, gv), mv), vv) in p
                        .data_mut()
                        .iter_mut()
                        .zip(g.data())
                        .zip(m.data_mut())
                        .zip(v.data_mut())
                    {
                        *mv = b1 * *mv + (1.0 - b1) * gv;
                        *vv = b2 * *vv + (1.0 - b2) * gv * gv;
                        let m_hat = *mv / bc1;
                        let v_hat = *vv / bc2;
                        *pv -= self.config.lr * m_hat / (v_hat.sqrt() + self.config.eps);
                    }
                }
            }
        }
    }
}
