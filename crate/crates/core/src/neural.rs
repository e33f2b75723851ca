//! Minimal differentiable layer stack for the two policy networks: a graph
//! convolutional encoder over the substrate, a small fully connected branch
//! for the request view, and a combining head. No ML framework; forward
//! passes record what reverse mode needs and gradients are exact.
//!
//! Both networks share the same backbone shape. The actor head is linear and
//! its outputs are the pre-softmax action scores; the critic applies its
//! activation on the head and funnels it into a single value neuron.

use ndarray::linalg::general_mat_mul;
use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::topology::Psn;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Relu,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Relu => x.max(0.0),
        }
    }

    /// Derivative expressed through the activation output.
    fn derive_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - y * y,
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Layer sizes. The standard configuration is 4 input channels per node,
/// three propagation rounds of width 60, and a 4-unit request branch, giving
/// a combined vector of `60 * nodes + 4`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetDims {
    pub nodes: usize,
    pub node_features: usize,
    pub gcn_width: usize,
    pub gcn_depth: usize,
    pub nspr_features: usize,
    pub branch_units: usize,
}

impl NetDims {
    pub fn standard(nodes: usize) -> Self {
        NetDims {
            nodes,
            node_features: 4,
            gcn_width: 60,
            gcn_depth: 3,
            nspr_features: 4,
            branch_units: 4,
        }
    }

    pub fn concat_len(&self) -> usize {
        self.gcn_width * self.nodes + self.branch_units
    }
}

/// Symmetric-normalized propagation matrix with self loops:
/// entry (i, j) of `(A + I)` scaled by `1/sqrt(d_i * d_j)`.
pub fn normalized_adjacency_from_edges(n: usize, edges: &[(usize, usize)]) -> Array2<f64> {
    let mut a = Array2::<f64>::eye(n);
    for &(i, j) in edges {
        a[[i, j]] = 1.0;
        a[[j, i]] = 1.0;
    }
    let degrees: Vec<f64> = (0..n).map(|i| a.row(i).sum()).collect();
    for i in 0..n {
        for j in 0..n {
            if a[[i, j]] != 0.0 {
                a[[i, j]] /= (degrees[i] * degrees[j]).sqrt();
            }
        }
    }
    a
}

pub fn normalized_adjacency(psn: &Psn) -> Array2<f64> {
    let edges: Vec<(usize, usize)> = psn.links().iter().map(|l| (l.a, l.b)).collect();
    normalized_adjacency_from_edges(psn.node_count(), &edges)
}

/// Shared trunk of actor and critic.
#[derive(Debug, Clone, PartialEq)]
pub struct Backbone {
    pub dims: NetDims,
    pub activation: Activation,
    pub gcn_w: Vec<Array2<f64>>,
    pub gcn_b: Vec<Array1<f64>>,
    pub branch_w: Array2<f64>,
    pub branch_b: Array1<f64>,
    pub head_w: Array2<f64>,
    pub head_b: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActorParams {
    pub backbone: Backbone,
    /// Shaping knobs carried with the policy parameters.
    pub xi: f64,
    pub beta: f64,
    pub eta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticParams {
    pub backbone: Backbone,
    pub value_w: Array1<f64>,
    pub value_b: f64,
}

fn init_matrix<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Array2<f64> {
    let bound = 1.0 / (rows as f64).sqrt();
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(-bound..bound))
}

impl Backbone {
    pub fn init<R: Rng>(dims: NetDims, activation: Activation, rng: &mut R) -> Self {
        let mut gcn_w = Vec::with_capacity(dims.gcn_depth);
        let mut gcn_b = Vec::with_capacity(dims.gcn_depth);
        let mut in_w = dims.node_features;
        for _ in 0..dims.gcn_depth {
            gcn_w.push(init_matrix(in_w, dims.gcn_width, rng));
            gcn_b.push(Array1::zeros(dims.gcn_width));
            in_w = dims.gcn_width;
        }
        Backbone {
            dims,
            activation,
            gcn_w,
            gcn_b,
            branch_w: init_matrix(dims.nspr_features, dims.branch_units, rng),
            branch_b: Array1::zeros(dims.branch_units),
            head_w: init_matrix(dims.concat_len(), dims.nodes, rng),
            head_b: Array1::zeros(dims.nodes),
        }
    }
}

impl ActorParams {
    pub fn init<R: Rng>(dims: NetDims, rng: &mut R) -> Self {
        ActorParams {
            backbone: Backbone::init(dims, Activation::Tanh, rng),
            xi: 1.0,
            beta: 1.0,
            eta: 0.0,
        }
    }
}

impl CriticParams {
    pub fn init<R: Rng>(dims: NetDims, rng: &mut R) -> Self {
        let backbone = Backbone::init(dims, Activation::Relu, rng);
        let bound = 1.0 / (dims.nodes as f64).sqrt();
        CriticParams {
            backbone,
            value_w: Array1::from_shape_fn(dims.nodes, |_| rng.random_range(-bound..bound)),
            value_b: 0.0,
        }
    }
}

/// Everything reverse mode needs from one forward pass.
#[derive(Debug, Clone)]
pub struct Tape {
    /// Propagated input of each GCN layer (`A_hat * H_in`).
    gcn_ah: Vec<Array2<f64>>,
    /// Activated output of each GCN layer.
    gcn_out: Vec<Array2<f64>>,
    nspr_in: Array1<f64>,
    branch_out: Array1<f64>,
    concat: Array1<f64>,
    /// Critic only: activated head output feeding the value neuron.
    hidden: Array1<f64>,
}

/// `gcn_depth` rounds of `H <- act(A_hat * H * W + b)`. Standalone entry
/// point for the encoder alone; the full networks go through
/// `actor_forward`/`critic_forward`.
pub fn gcn_forward(
    a_hat: &Array2<f64>,
    x: &Array2<f64>,
    weights: &[Array2<f64>],
    biases: &[Array1<f64>],
    activation: Activation,
) -> Array2<f64> {
    let (outs, _) = gcn_forward_taped(a_hat, x, weights, biases, activation);
    outs.last().expect("at least one layer").clone()
}

fn gcn_forward_taped(
    a_hat: &Array2<f64>,
    x: &Array2<f64>,
    weights: &[Array2<f64>],
    biases: &[Array1<f64>],
    activation: Activation,
) -> (Vec<Array2<f64>>, Vec<Array2<f64>>) {
    assert_eq!(
        a_hat.nrows(),
        x.nrows(),
        "feature rows must match the propagation matrix"
    );
    let mut outs = Vec::with_capacity(weights.len());
    let mut ahs = Vec::with_capacity(weights.len());
    let mut h = x.clone();
    for (w, b) in weights.iter().zip(biases) {
        assert_eq!(h.ncols(), w.nrows(), "GCN weight width mismatch");
        let ah = a_hat.dot(&h);
        let mut pre = ah.dot(w);
        pre += b;
        pre.mapv_inplace(|v| activation.apply(v));
        ahs.push(ah);
        outs.push(pre.clone());
        h = pre;
    }
    (outs, ahs)
}

fn backbone_forward(
    bb: &Backbone,
    a_hat: &Array2<f64>,
    node_features: &Array2<f64>,
    nspr_features: &Array1<f64>,
) -> (Array1<f64>, Tape) {
    assert_eq!(node_features.nrows(), bb.dims.nodes, "node feature rows");
    assert_eq!(node_features.ncols(), bb.dims.node_features, "node feature cols");
    assert_eq!(nspr_features.len(), bb.dims.nspr_features, "nspr feature len");
    let (gcn_out, gcn_ah) =
        gcn_forward_taped(a_hat, node_features, &bb.gcn_w, &bb.gcn_b, bb.activation);
    let mut branch = nspr_features.dot(&bb.branch_w);
    branch += &bb.branch_b;
    branch.mapv_inplace(|v| bb.activation.apply(v));

    let flat = gcn_out
        .last()
        .expect("gcn output")
        .iter()
        .copied()
        .chain(branch.iter().copied())
        .collect::<Array1<f64>>();
    let mut head = flat.dot(&bb.head_w);
    head += &bb.head_b;
    let tape = Tape {
        gcn_ah,
        gcn_out,
        nspr_in: nspr_features.clone(),
        branch_out: branch,
        concat: flat,
        hidden: Array1::zeros(0),
    };
    (head, tape)
}

/// Pre-softmax action scores over all substrate nodes.
pub fn actor_forward(
    actor: &ActorParams,
    a_hat: &Array2<f64>,
    node_features: &Array2<f64>,
    nspr_features: &Array1<f64>,
) -> (Array1<f64>, Tape) {
    backbone_forward(&actor.backbone, a_hat, node_features, nspr_features)
}

/// State-value estimate.
pub fn critic_forward(
    critic: &CriticParams,
    a_hat: &Array2<f64>,
    node_features: &Array2<f64>,
    nspr_features: &Array1<f64>,
) -> (f64, Tape) {
    let (head, mut tape) = backbone_forward(&critic.backbone, a_hat, node_features, nspr_features);
    let hidden = head.mapv(|v| critic.backbone.activation.apply(v));
    let value = hidden.dot(&critic.value_w) + critic.value_b;
    tape.hidden = hidden;
    (value, tape)
}

#[derive(Debug, Clone)]
pub struct BackboneGrads {
    pub gcn_w: Vec<Array2<f64>>,
    pub gcn_b: Vec<Array1<f64>>,
    pub branch_w: Array2<f64>,
    pub branch_b: Array1<f64>,
    pub head_w: Array2<f64>,
    pub head_b: Array1<f64>,
}

impl BackboneGrads {
    pub fn zeros_like(bb: &Backbone) -> Self {
        BackboneGrads {
            gcn_w: bb.gcn_w.iter().map(|w| Array2::zeros(w.raw_dim())).collect(),
            gcn_b: bb.gcn_b.iter().map(|b| Array1::zeros(b.raw_dim())).collect(),
            branch_w: Array2::zeros(bb.branch_w.raw_dim()),
            branch_b: Array1::zeros(bb.branch_b.raw_dim()),
            head_w: Array2::zeros(bb.head_w.raw_dim()),
            head_b: Array1::zeros(bb.head_b.raw_dim()),
        }
    }

    fn squared_norm(&self) -> f64 {
        let mut s = 0.0;
        for w in &self.gcn_w {
            s += w.iter().map(|v| v * v).sum::<f64>();
        }
        for b in &self.gcn_b {
            s += b.iter().map(|v| v * v).sum::<f64>();
        }
        s += self.branch_w.iter().map(|v| v * v).sum::<f64>();
        s += self.branch_b.iter().map(|v| v * v).sum::<f64>();
        s += self.head_w.iter().map(|v| v * v).sum::<f64>();
        s += self.head_b.iter().map(|v| v * v).sum::<f64>();
        s
    }

    fn scale(&mut self, f: f64) {
        for w in &mut self.gcn_w {
            w.mapv_inplace(|v| v * f);
        }
        for b in &mut self.gcn_b {
            b.mapv_inplace(|v| v * f);
        }
        self.branch_w.mapv_inplace(|v| v * f);
        self.branch_b.mapv_inplace(|v| v * f);
        self.head_w.mapv_inplace(|v| v * f);
        self.head_b.mapv_inplace(|v| v * f);
    }
}

#[derive(Debug, Clone)]
pub struct ActorGrads {
    pub backbone: BackboneGrads,
}

impl ActorGrads {
    pub fn zeros_like(p: &ActorParams) -> Self {
        ActorGrads {
            backbone: BackboneGrads::zeros_like(&p.backbone),
        }
    }

    pub fn global_norm(&self) -> f64 {
        self.backbone.squared_norm().sqrt()
    }

    pub fn clip_global_norm(&mut self, max_norm: f64) {
        let norm = self.global_norm();
        if norm > max_norm && norm > 0.0 {
            self.backbone.scale(max_norm / norm);
        }
    }
}

#[derive(Debug, Clone)]
pub struct CriticGrads {
    pub backbone: BackboneGrads,
    pub value_w: Array1<f64>,
    pub value_b: f64,
}

impl CriticGrads {
    pub fn zeros_like(p: &CriticParams) -> Self {
        CriticGrads {
            backbone: BackboneGrads::zeros_like(&p.backbone),
            value_w: Array1::zeros(p.value_w.raw_dim()),
            value_b: 0.0,
        }
    }

    pub fn global_norm(&self) -> f64 {
        let s = self.backbone.squared_norm()
            + self.value_w.iter().map(|v| v * v).sum::<f64>()
            + self.value_b * self.value_b;
        s.sqrt()
    }

    pub fn clip_global_norm(&mut self, max_norm: f64) {
        let norm = self.global_norm();
        if norm > max_norm && norm > 0.0 {
            let f = max_norm / norm;
            self.backbone.scale(f);
            self.value_w.mapv_inplace(|v| v * f);
            self.value_b *= f;
        }
    }
}

fn backbone_backward(
    bb: &Backbone,
    a_hat: &Array2<f64>,
    tape: &Tape,
    d_head: &Array1<f64>,
    grads: &mut BackboneGrads,
) {
    // head: pre = concat . W + b
    general_mat_mul(
        1.0,
        &tape.concat.view().insert_axis(Axis(1)),
        &d_head.view().insert_axis(Axis(0)),
        1.0,
        &mut grads.head_w,
    );
    grads.head_b += d_head;
    let d_concat = bb.head_w.dot(d_head);

    let n = bb.dims.nodes;
    let width = bb.dims.gcn_width;
    let split = n * width;
    let d_gcn_flat = d_concat.slice(ndarray::s![..split]).to_owned();
    let mut d_out = d_gcn_flat
        .into_shape_with_order((n, width))
        .expect("gcn gradient reshape");
    let d_branch_out = d_concat.slice(ndarray::s![split..]).to_owned();

    // request branch
    let d_branch_pre = &d_branch_out
        * &tape
            .branch_out
            .mapv(|y| bb.activation.derive_from_output(y));
    general_mat_mul(
        1.0,
        &tape.nspr_in.view().insert_axis(Axis(1)),
        &d_branch_pre.view().insert_axis(Axis(0)),
        1.0,
        &mut grads.branch_w,
    );
    grads.branch_b += &d_branch_pre;

    // GCN layers, last to first; A_hat is symmetric so its transpose is
    // itself.
    for l in (0..bb.gcn_w.len()).rev() {
        let d_pre = &d_out
            * &tape.gcn_out[l].mapv(|y| bb.activation.derive_from_output(y));
        general_mat_mul(1.0, &tape.gcn_ah[l].t(), &d_pre, 1.0, &mut grads.gcn_w[l]);
        grads.gcn_b[l] += &d_pre.sum_axis(Axis(0));
        if l > 0 {
            d_out = a_hat.dot(&d_pre.dot(&bb.gcn_w[l].t()));
        }
    }
}

/// Accumulates gradients for the actor given the loss gradient with respect
/// to the pre-softmax scores.
pub fn actor_backward(
    actor: &ActorParams,
    a_hat: &Array2<f64>,
    tape: &Tape,
    d_scores: &Array1<f64>,
    grads: &mut ActorGrads,
) {
    backbone_backward(&actor.backbone, a_hat, tape, d_scores, &mut grads.backbone);
}

/// Accumulates gradients for the critic given the loss gradient with respect
/// to the value output.
pub fn critic_backward(
    critic: &CriticParams,
    a_hat: &Array2<f64>,
    tape: &Tape,
    d_value: f64,
    grads: &mut CriticGrads,
) {
    grads.value_w.scaled_add(d_value, &tape.hidden);
    grads.value_b += d_value;
    let mut d_head = critic.value_w.mapv(|w| w * d_value);
    d_head *= &tape
        .hidden
        .mapv(|y| critic.backbone.activation.derive_from_output(y));
    backbone_backward(&critic.backbone, a_hat, tape, &d_head, &mut grads.backbone);
}

/// One SGD step: `p -= lr * g`.
pub fn apply_actor_grads(actor: &mut ActorParams, grads: &ActorGrads, lr: f64) {
    apply_backbone(&mut actor.backbone, &grads.backbone, lr);
}

pub fn apply_critic_grads(critic: &mut CriticParams, grads: &CriticGrads, lr: f64) {
    apply_backbone(&mut critic.backbone, &grads.backbone, lr);
    critic.value_w.scaled_add(-lr, &grads.value_w);
    critic.value_b -= lr * grads.value_b;
}

fn apply_backbone(bb: &mut Backbone, g: &BackboneGrads, lr: f64) {
    for (w, gw) in bb.gcn_w.iter_mut().zip(&g.gcn_w) {
        w.scaled_add(-lr, gw);
    }
    for (b, gb) in bb.gcn_b.iter_mut().zip(&g.gcn_b) {
        b.scaled_add(-lr, gb);
    }
    bb.branch_w.scaled_add(-lr, &g.branch_w);
    bb.branch_b.scaled_add(-lr, &g.branch_b);
    bb.head_w.scaled_add(-lr, &g.head_w);
    bb.head_b.scaled_add(-lr, &g.head_b);
}

/// Max-shifted softmax; sums to one within working precision.
pub fn softmax_policy(scores: &Array1<f64>) -> Array1<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out = scores.mapv(|z| (z - max).exp());
    let sum = out.sum();
    out.mapv_inplace(|v| v / sum);
    out
}

/// Log-probabilities via the shifted log-sum-exp.
pub fn log_softmax(scores: &Array1<f64>) -> Array1<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = scores.mapv(|z| (z - max).exp()).sum().ln() + max;
    scores.mapv(|z| z - lse)
}

/// Samples an index from a categorical distribution.
pub fn sample_categorical<R: Rng>(probs: &Array1<f64>, rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

// --- checkpoint io -----------------------------------------------------

const CHECKPOINT_MAGIC: &[u8; 4] = b"SLCK";
const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize, PartialEq)]
struct CheckpointHeader {
    dims: NetDims,
    actor_activation: Activation,
    critic_activation: Activation,
    xi: f64,
    beta: f64,
    eta: f64,
    phase: u64,
    episodes: u64,
}

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a checkpoint file (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    BadVersion(u32),
    #[error("corrupt checkpoint header: {0}")]
    BadHeader(#[from] serde_json::Error),
    #[error("checkpoint payload truncated")]
    Truncated,
}

fn write_f64s<W: std::io::Write>(w: &mut W, it: impl Iterator<Item = f64>) -> std::io::Result<()> {
    for v in it {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

struct F64Reader<R: std::io::Read> {
    inner: R,
}

impl<R: std::io::Read> F64Reader<R> {
    fn next(&mut self) -> Result<f64, CheckpointError> {
        let mut buf = [0u8; 8];
        self.inner
            .read_exact(&mut buf)
            .map_err(|_| CheckpointError::Truncated)?;
        Ok(f64::from_le_bytes(buf))
    }

    fn fill1(&mut self, a: &mut Array1<f64>) -> Result<(), CheckpointError> {
        for v in a.iter_mut() {
            *v = self.next()?;
        }
        Ok(())
    }

    fn fill2(&mut self, a: &mut Array2<f64>) -> Result<(), CheckpointError> {
        for v in a.iter_mut() {
            *v = self.next()?;
        }
        Ok(())
    }
}

fn backbone_values(bb: &Backbone) -> impl Iterator<Item = f64> + '_ {
    bb.gcn_w
        .iter()
        .flat_map(|w| w.iter().copied())
        .chain(bb.gcn_b.iter().flat_map(|b| b.iter().copied()))
        .chain(bb.branch_w.iter().copied())
        .chain(bb.branch_b.iter().copied())
        .chain(bb.head_w.iter().copied())
        .chain(bb.head_b.iter().copied())
}

fn read_backbone<R: std::io::Read>(
    r: &mut F64Reader<R>,
    dims: NetDims,
    activation: Activation,
) -> Result<Backbone, CheckpointError> {
    let mut bb = Backbone {
        dims,
        activation,
        gcn_w: {
            let mut v = Vec::new();
            let mut in_w = dims.node_features;
            for _ in 0..dims.gcn_depth {
                v.push(Array2::zeros((in_w, dims.gcn_width)));
                in_w = dims.gcn_width;
            }
            v
        },
        gcn_b: vec![Array1::zeros(dims.gcn_width); dims.gcn_depth],
        branch_w: Array2::zeros((dims.nspr_features, dims.branch_units)),
        branch_b: Array1::zeros(dims.branch_units),
        head_w: Array2::zeros((dims.concat_len(), dims.nodes)),
        head_b: Array1::zeros(dims.nodes),
    };
    for w in &mut bb.gcn_w {
        r.fill2(w)?;
    }
    for b in &mut bb.gcn_b {
        r.fill1(b)?;
    }
    r.fill2(&mut bb.branch_w)?;
    r.fill1(&mut bb.branch_b)?;
    r.fill2(&mut bb.head_w)?;
    r.fill1(&mut bb.head_b)?;
    Ok(bb)
}

/// Versioned binary dump of both parameter sets: magic, version, a JSON
/// header with layer sizes and shaping knobs, then all weights as little
/// endian f64 in declaration order.
pub fn save_checkpoint(
    path: &std::path::Path,
    actor: &ActorParams,
    critic: &CriticParams,
    phase: u64,
    episodes: u64,
) -> Result<(), CheckpointError> {
    let header = CheckpointHeader {
        dims: actor.backbone.dims,
        actor_activation: actor.backbone.activation,
        critic_activation: critic.backbone.activation,
        xi: actor.xi,
        beta: actor.beta,
        eta: actor.eta,
        phase,
        episodes,
    };
    let header_json = serde_json::to_vec(&header)?;
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    use std::io::Write;
    w.write_all(CHECKPOINT_MAGIC)?;
    w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    w.write_all(&(header_json.len() as u32).to_le_bytes())?;
    w.write_all(&header_json)?;
    write_f64s(&mut w, backbone_values(&actor.backbone))?;
    write_f64s(&mut w, backbone_values(&critic.backbone))?;
    write_f64s(&mut w, critic.value_w.iter().copied())?;
    write_f64s(&mut w, std::iter::once(critic.value_b))?;
    w.flush()?;
    Ok(())
}

pub fn load_checkpoint(
    path: &std::path::Path,
) -> Result<(ActorParams, CriticParams, u64, u64), CheckpointError> {
    let file = std::fs::File::open(path)?;
    let mut r = std::io::BufReader::new(file);
    use std::io::Read;
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let mut version = [0u8; 4];
    r.read_exact(&mut version)?;
    let version = u32::from_le_bytes(version);
    if version != CHECKPOINT_VERSION {
        return Err(CheckpointError::BadVersion(version));
    }
    let mut len = [0u8; 4];
    r.read_exact(&mut len)?;
    let mut header_json = vec![0u8; u32::from_le_bytes(len) as usize];
    r.read_exact(&mut header_json)?;
    let header: CheckpointHeader = serde_json::from_slice(&header_json)?;
    let mut r = F64Reader { inner: r };
    let actor = ActorParams {
        backbone: read_backbone(&mut r, header.dims, header.actor_activation)?,
        xi: header.xi,
        beta: header.beta,
        eta: header.eta,
    };
    let mut critic = CriticParams {
        backbone: read_backbone(&mut r, header.dims, header.critic_activation)?,
        value_w: Array1::zeros(header.dims.nodes),
        value_b: 0.0,
    };
    r.fill1(&mut critic.value_w)?;
    critic.value_b = r.next()?;
    Ok((actor, critic, header.phase, header.episodes))
}
