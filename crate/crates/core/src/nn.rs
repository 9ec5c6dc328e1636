//! Per-agent MLP softmax policies over one-hot states, with hand-written
//! backpropagation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dynamics::gradient::{log_barrier_penalty, log_barrier_penalty_grad, pg_gradient_from, ParamTable};
use crate::error::{MpgError, Result};
use crate::eval::evaluate;
use crate::game::{softmax_row, MarkovGame, ProductPolicy};

/// Hidden-layer nonlinearity.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    Relu,
    Tanh,
    Identity,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
            Activation::Identity => z,
        }
    }

    fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - z.tanh().powi(2),
            Activation::Identity => 1.0,
        }
    }
}

/// One agent's network `one-hot(|S|) -> FC(width) -> FC(width) -> Linear(|A|)`.
/// Weight matrices are row-major `out x in`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpLayers {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
    pub w3: Vec<f64>,
    pub b3: Vec<f64>,
}

impl MlpLayers {
    fn zeros(num_states: usize, width: usize, num_actions: usize) -> Self {
        MlpLayers {
            w1: vec![0.0; width * num_states],
            b1: vec![0.0; width],
            w2: vec![0.0; width * width],
            b2: vec![0.0; width],
            w3: vec![0.0; num_actions * width],
            b3: vec![0.0; num_actions],
        }
    }

    fn parts(&self) -> [&Vec<f64>; 6] {
        [&self.w1, &self.b1, &self.w2, &self.b2, &self.w3, &self.b3]
    }

    fn parts_mut(&mut self) -> [&mut Vec<f64>; 6] {
        [
            &mut self.w1,
            &mut self.b1,
            &mut self.w2,
            &mut self.b2,
            &mut self.w3,
            &mut self.b3,
        ]
    }

    /// All entries in the order `w1, b1, w2, b2, w3, b3`.
    pub fn flatten(&self) -> Vec<f64> {
        self.parts().into_iter().flatten().copied().collect()
    }

    fn len(&self) -> usize {
        self.parts().iter().map(|p| p.len()).sum()
    }

    fn assign(&mut self, flat: &[f64]) {
        let mut offset = 0;
        for part in self.parts_mut() {
            let n = part.len();
            part.copy_from_slice(&flat[offset..offset + n]);
            offset += n;
        }
    }
}

/// Network parameters for every agent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpPolicyParams {
    num_states: usize,
    width: usize,
    action_counts: Vec<usize>,
    pub activation: Activation,
    pub agents: Vec<MlpLayers>,
}

impl MlpPolicyParams {
    /// All-zero networks, which emit uniform policies.
    pub fn zeros(game: &MarkovGame, width: usize, activation: Activation) -> Self {
        MlpPolicyParams {
            num_states: game.num_states(),
            width,
            action_counts: game.action_counts().to_vec(),
            activation,
            agents: game
                .action_counts()
                .iter()
                .map(|&c| MlpLayers::zeros(game.num_states(), width, c))
                .collect(),
        }
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn action_counts(&self) -> &[usize] {
        &self.action_counts
    }

    /// Per-agent flat parameter vectors.
    pub fn flatten(&self) -> ParamTable {
        self.agents.iter().map(MlpLayers::flatten).collect()
    }

    /// Copy with the given per-agent flat parameters.
    pub fn with_flat(&self, flat: &[Vec<f64>]) -> Result<Self> {
        if flat.len() != self.agents.len() || flat.iter().zip(&self.agents).any(|(f, layers)| f.len() != layers.len()) {
            return Err(MpgError::ShapeMismatch(
                "flat MLP parameters do not match the architecture".into(),
            ));
        }
        if flat.iter().flatten().any(|x| !x.is_finite()) {
            return Err(MpgError::NonFiniteEntry("MLP parameters".into()));
        }
        let mut out = self.clone();
        for (layers, f) in out.agents.iter_mut().zip(flat) {
            layers.assign(f);
        }
        Ok(out)
    }

    /// `self + scale * direction`, entrywise.
    pub fn add_scaled(&self, direction: &[Vec<f64>], scale: f64) -> Result<Self> {
        let flat: ParamTable = self
            .flatten()
            .iter()
            .zip(direction)
            .map(|(p, d)| p.iter().zip(d).map(|(x, y)| x + scale * y).collect())
            .collect();
        self.with_flat(&flat)
    }
}

/// Standard-normal weights scaled by `1 / sqrt(fan_in)`, zero biases.
pub fn init_mlp(seed: u64, game: &MarkovGame, width: usize, activation: Activation) -> MlpPolicyParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = MlpPolicyParams::zeros(game, width, activation);
    let n = game.num_states();
    for layers in &mut params.agents {
        for (w, fan_in) in [(&mut layers.w1, n), (&mut layers.w2, width), (&mut layers.w3, width)] {
            let scale = 1.0 / (fan_in as f64).sqrt();
            for x in w.iter_mut() {
                let z: f64 = StandardNormal.sample(&mut rng);
                *x = z * scale;
            }
        }
    }
    params
}

/// Row-major `out x in` matrix times vector, plus bias.
fn affine(w: &[f64], b: &[f64], x: &[f64]) -> Vec<f64> {
    b.iter()
        .enumerate()
        .map(|(r, &bias)| {
            bias + w[r * x.len()..(r + 1) * x.len()]
                .iter()
                .zip(x)
                .map(|(a, c)| a * c)
                .sum::<f64>()
        })
        .collect()
}

/// Intermediate values of one forward pass.
struct Forward {
    z1: Vec<f64>,
    h1: Vec<f64>,
    z2: Vec<f64>,
    h2: Vec<f64>,
    logits: Vec<f64>,
}

fn forward(layers: &MlpLayers, act: Activation, num_states: usize, state: usize) -> Forward {
    let width = layers.b1.len();
    // one-hot input selects column `state` of w1
    let z1: Vec<f64> = (0..width)
        .map(|r| layers.w1[r * num_states + state] + layers.b1[r])
        .collect();
    let h1: Vec<f64> = z1.iter().map(|&z| act.apply(z)).collect();
    let z2 = affine(&layers.w2, &layers.b2, &h1);
    let h2: Vec<f64> = z2.iter().map(|&z| act.apply(z)).collect();
    let logits = affine(&layers.w3, &layers.b3, &h2);
    Forward { z1, h1, z2, h2, logits }
}

/// Action distribution of `agent` in `state`.
pub fn mlp_forward(params: &MlpPolicyParams, agent: usize, state: usize) -> Vec<f64> {
    let f = forward(&params.agents[agent], params.activation, params.num_states, state);
    softmax_row(&f.logits)
}

/// The tabular product policy obtained by running every network on every state.
pub fn mlp_policy(params: &MlpPolicyParams) -> ProductPolicy {
    let tables: Vec<Vec<f64>> = (0..params.agents.len())
        .map(|i| (0..params.num_states).flat_map(|s| mlp_forward(params, i, s)).collect())
        .collect();
    ProductPolicy::from_parts(params.num_states, params.action_counts.clone(), tables)
}

/// Backpropagates per-state logit gradients `g[i][s * |A^i| + a]` to the
/// network weights of every agent.
pub fn backprop_logit_gradient(params: &MlpPolicyParams, logit_grad: &[Vec<f64>]) -> ParamTable {
    let n = params.num_states;
    let act = params.activation;
    params
        .agents
        .iter()
        .zip(logit_grad)
        .zip(&params.action_counts)
        .map(|((layers, g), &c)| {
            let width = layers.b1.len();
            let mut grad = MlpLayers::zeros(n, width, c);
            for s in 0..n {
                let f = forward(layers, act, n, s);
                let dlogits = &g[s * c..(s + 1) * c];
                let mut dh2 = vec![0.0; width];
                for (a, &dl) in dlogits.iter().enumerate() {
                    grad.b3[a] += dl;
                    for k in 0..width {
                        grad.w3[a * width + k] += dl * f.h2[k];
                        dh2[k] += layers.w3[a * width + k] * dl;
                    }
                }
                let dz2: Vec<f64> = dh2.iter().zip(&f.z2).map(|(d, &z)| d * act.derivative(z)).collect();
                let mut dh1 = vec![0.0; width];
                for (r, &dz) in dz2.iter().enumerate() {
                    grad.b2[r] += dz;
                    for k in 0..width {
                        grad.w2[r * width + k] += dz * f.h1[k];
                        dh1[k] += layers.w2[r * width + k] * dz;
                    }
                }
                for (r, (&dh, &z)) in dh1.iter().zip(&f.z1).enumerate() {
                    let dz = dh * act.derivative(z);
                    grad.b1[r] += dz;
                    grad.w1[r * n + s] += dz;
                }
            }
            grad.flatten()
        })
        .collect()
}

/// `Phi(mu)` plus the log-barrier penalty, for the policy emitted by the networks.
pub fn mlp_objective(game: &MarkovGame, params: &MlpPolicyParams, lambda: f64) -> Result<f64> {
    let policy = mlp_policy(params);
    let phi = evaluate(game, &policy)?.phi_mu.ok_or(MpgError::MissingPotential)?;
    Ok(phi + log_barrier_penalty(&policy, lambda))
}

/// Exact gradient of `Phi(mu)` with respect to every network weight:
/// `sum_s d(s) sum_a A^i(s, a) grad pi^i(a|s)`.
pub fn mlp_policy_gradient(game: &MarkovGame, params: &MlpPolicyParams) -> Result<ParamTable> {
    mlp_log_barrier_grad(game, params, 0.0)
}

/// Gradient of `Phi(mu)` plus the log-barrier penalty with coefficient `lambda`.
pub fn mlp_log_barrier_grad(game: &MarkovGame, params: &MlpPolicyParams, lambda: f64) -> Result<ParamTable> {
    if !(lambda >= 0.0) {
        return Err(MpgError::InvalidConfig(format!("lambda must be >= 0, got {lambda}")));
    }
    if params.num_states != game.num_states() || params.action_counts != game.action_counts() {
        return Err(MpgError::DimensionMismatch("MLP shape does not match the game".into()));
    }
    let policy = mlp_policy(params);
    let eval = evaluate(game, &policy)?;
    if eval.phi_mu.is_none() {
        return Err(MpgError::MissingPotential);
    }
    // softmax logits per state behave like tabular parameters, so the
    // tabular gradient is exactly dPhi/dlogits
    let mut logit_grad = pg_gradient_from(&policy, &eval);
    if lambda > 0.0 {
        for (g, r) in logit_grad.iter_mut().zip(log_barrier_penalty_grad(&policy, lambda)) {
            for (x, y) in g.iter_mut().zip(r) {
                *x += y;
            }
        }
    }
    Ok(backprop_logit_gradient(params, &logit_grad))
}
