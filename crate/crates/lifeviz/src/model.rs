//! The encoder -> repeated conv block -> decoder architecture, its
//! adversarial discriminator, and a hand-built weight set that executes
//! the Game of Life rule exactly.
//!
//! Two forward modes exist: training (only the final prediction and the
//! autoencoder reconstruction are produced) and inference (the decoder is
//! additionally applied to every intermediate hidden state).

use crate::error::{Error, Result};
use crate::tensor::ops;
use crate::tensor::optim::Parameter;
use crate::tensor::{Scalar, Tensor};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ModelConfig {
    pub grid_height: usize,
    pub grid_width: usize,
    /// Hidden channels carried between timesteps.
    pub channels: usize,
    pub encoder_layers: usize,
    pub decoder_layers: usize,
    pub rnn_layers_per_block: usize,
    pub kernel_size: usize,
    /// Number of block applications between encoder and decoder.
    pub model_timesteps: usize,
    /// True: one block applied at every timestep. False: independent
    /// per-timestep blocks.
    pub weight_sharing: bool,
    /// Activation on the encoder output and on the last layer of each
    /// block — i.e. on every hidden state handed between timesteps.
    /// Bounded activations keep hidden channels board-like across
    /// timesteps; unbounded ones leave each timestep free to rescale.
    #[serde(default)]
    pub hidden_activation: Activation,
}

/// Elementwise nonlinearity selector for hidden-state outputs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Relu,
    Sigmoid,
}

impl Activation {
    fn apply<S: Scalar>(self, x: &Tensor<S>) -> Result<Tensor<S>> {
        match self {
            Activation::Relu => ops::relu(x),
            Activation::Sigmoid => ops::sigmoid(x),
        }
    }
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            grid_height: 16,
            grid_width: 16,
            channels: 20,
            encoder_layers: 1,
            decoder_layers: 1,
            rnn_layers_per_block: 2,
            kernel_size: 3,
            model_timesteps: 3,
            weight_sharing: true,
            hidden_activation: Activation::default(),
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.model_timesteps < 2 {
            return Err(Error::invalid(
                "model_timesteps must be >= 2 so at least one intermediate hidden state exists",
            ));
        }
        if self.kernel_size % 2 == 0 || self.kernel_size == 0 {
            return Err(Error::invalid("kernel_size must be odd"));
        }
        if self.channels == 0
            || self.encoder_layers == 0
            || self.decoder_layers == 0
            || self.rnn_layers_per_block == 0
        {
            return Err(Error::invalid("layer and channel counts must be positive"));
        }
        if self.grid_height == 0 || self.grid_width == 0 {
            return Err(Error::invalid("grid dimensions must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone)]
pub struct ConvLayer<S: Scalar> {
    pub weight: Tensor<S>,
    pub bias: Tensor<S>,
}

impl<S: Scalar> ConvLayer<S> {
    fn new_random<R: Rng>(cout: usize, cin: usize, k: usize, rng: &mut R) -> Self {
        let fan_in = cin * k * k;
        let std = (2.0 / fan_in as f64).sqrt();
        let normal = Normal::new(0.0, std).unwrap();
        let weight: Vec<S> = (0..cout * cin * k * k)
            .map(|_| S::from_f64(normal.sample(rng)))
            .collect();
        ConvLayer {
            weight: Tensor::param_from_vec(&[cout, cin, k, k], weight).unwrap(),
            bias: Tensor::param_from_vec(&[cout], vec![S::zero(); cout]).unwrap(),
        }
    }

    fn from_values(cout: usize, cin: usize, k: usize, w: Vec<S>, b: Vec<S>) -> Self {
        ConvLayer {
            weight: Tensor::param_from_vec(&[cout, cin, k, k], w).unwrap(),
            bias: Tensor::param_from_vec(&[cout], b).unwrap(),
        }
    }

    fn deep_clone(&self) -> Self {
        ConvLayer {
            weight: Tensor::param_from_vec(self.weight.shape(), self.weight.to_vec()).unwrap(),
            bias: Tensor::param_from_vec(self.bias.shape(), self.bias.to_vec()).unwrap(),
        }
    }
}

#[derive(Clone)]
pub struct Discriminator<S: Scalar> {
    pub conv1: ConvLayer<S>,
    pub conv2: ConvLayer<S>,
    /// 1x1 conv producing a per-pixel realness logit. Local verdicts give
    /// the decoder spatially resolved gradients; a pooled scalar head only
    /// ever tells it about image-wide statistics.
    pub head: ConvLayer<S>,
}

pub const DISC_CHANNELS: usize = 16;

impl<S: Scalar> Discriminator<S> {
    fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let conv1 = ConvLayer::new_random(DISC_CHANNELS, 1, 3, &mut rng);
        let conv2 = ConvLayer::new_random(DISC_CHANNELS, DISC_CHANNELS, 3, &mut rng);
        // Small head init keeps the untrained output near 0.5; relu
        // features have a positive mean that a fan-in-scaled head amplifies.
        let std = 0.1 / (DISC_CHANNELS as f64).sqrt();
        let normal = Normal::new(0.0, std).unwrap();
        let head_weight: Vec<S> = (0..DISC_CHANNELS)
            .map(|_| S::from_f64(normal.sample(&mut rng)))
            .collect();
        Discriminator {
            conv1,
            conv2,
            head: ConvLayer {
                weight: Tensor::param_from_vec(&[1, DISC_CHANNELS, 1, 1], head_weight).unwrap(),
                bias: Tensor::param_from_vec(&[1], vec![S::zero()]).unwrap(),
            },
        }
    }

    fn deep_clone(&self) -> Self {
        Discriminator {
            conv1: self.conv1.deep_clone(),
            conv2: self.conv2.deep_clone(),
            head: self.head.deep_clone(),
        }
    }
}

/// All trainable state of one network.
#[derive(Clone)]
pub struct NetworkParams<S: Scalar> {
    pub cfg: ModelConfig,
    pub encoder: Vec<ConvLayer<S>>,
    /// One entry when `weight_sharing`, else `model_timesteps` entries.
    pub blocks: Vec<Vec<ConvLayer<S>>>,
    pub decoder: Vec<ConvLayer<S>>,
    pub discriminator: Option<Discriminator<S>>,
}

/// Per-input record of one inference pass.
pub struct ForwardTrace<S: Scalar> {
    /// Hidden states after timesteps `1 .. t-1`. The encoder output and
    /// the final timestep are deliberately absent.
    pub hidden: Vec<Tensor<S>>,
    /// `decoded[i] = decoder(hidden[i])`, each in (0, 1).
    pub decoded: Vec<Tensor<S>>,
    pub final_pred: Tensor<S>,
    pub recon: Tensor<S>,
}

/// Fresh randomly initialized parameters, deterministic in `seed`.
/// The discriminator is created separately when adversarial training asks
/// for it.
pub fn init_params<S: Scalar>(cfg: &ModelConfig, seed: u64) -> Result<NetworkParams<S>> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = cfg.channels;
    let k = cfg.kernel_size;
    let mut encoder = Vec::with_capacity(cfg.encoder_layers);
    for i in 0..cfg.encoder_layers {
        let cin = if i == 0 { 1 } else { c };
        encoder.push(ConvLayer::new_random(c, cin, k, &mut rng));
    }
    let block_count = if cfg.weight_sharing {
        1
    } else {
        cfg.model_timesteps
    };
    let mut blocks = Vec::with_capacity(block_count);
    for _ in 0..block_count {
        let block = (0..cfg.rnn_layers_per_block)
            .map(|_| ConvLayer::new_random(c, c, k, &mut rng))
            .collect();
        blocks.push(block);
    }
    let mut decoder = Vec::with_capacity(cfg.decoder_layers);
    for i in 0..cfg.decoder_layers {
        let cout = if i == cfg.decoder_layers - 1 { 1 } else { c };
        decoder.push(ConvLayer::new_random(cout, c, k, &mut rng));
    }
    Ok(NetworkParams {
        cfg: cfg.clone(),
        encoder,
        blocks,
        decoder,
        discriminator: None,
    })
}

impl<S: Scalar> NetworkParams<S> {
    pub fn ensure_discriminator(&mut self, seed: u64) {
        if self.discriminator.is_none() {
            self.discriminator = Some(Discriminator::new(seed));
        }
    }

    /// Independent copy with fresh leaf tensors.
    pub fn deep_clone(&self) -> Self {
        NetworkParams {
            cfg: self.cfg.clone(),
            encoder: self.encoder.iter().map(ConvLayer::deep_clone).collect(),
            blocks: self
                .blocks
                .iter()
                .map(|b| b.iter().map(ConvLayer::deep_clone).collect())
                .collect(),
            decoder: self.decoder.iter().map(ConvLayer::deep_clone).collect(),
            discriminator: self.discriminator.as_ref().map(Discriminator::deep_clone),
        }
    }

    fn check_input(&self, input: &Tensor<S>) -> Result<()> {
        let s = input.shape();
        if s.len() != 4 || s[1] != 1 || s[2] != self.cfg.grid_height || s[3] != self.cfg.grid_width
        {
            return Err(Error::shape(
                format!("[B,1,{},{}]", self.cfg.grid_height, self.cfg.grid_width),
                format!("{s:?}"),
            ));
        }
        Ok(())
    }

    fn encode(&self, input: &Tensor<S>) -> Result<Tensor<S>> {
        let mut x = input.clone();
        let last = self.encoder.len() - 1;
        for (i, layer) in self.encoder.iter().enumerate() {
            x = ops::conv2d_circular(&x, &layer.weight, &layer.bias)?;
            x = if i == last { self.cfg.hidden_activation.apply(&x)? } else { ops::relu(&x)? };
        }
        Ok(x)
    }

    fn apply_block(&self, timestep: usize, h: &Tensor<S>) -> Result<Tensor<S>> {
        let block = if self.cfg.weight_sharing {
            &self.blocks[0]
        } else {
            &self.blocks[timestep]
        };
        let mut x = h.clone();
        let last = block.len() - 1;
        for (i, layer) in block.iter().enumerate() {
            x = ops::conv2d_circular(&x, &layer.weight, &layer.bias)?;
            x = if i == last { self.cfg.hidden_activation.apply(&x)? } else { ops::relu(&x)? };
        }
        Ok(x)
    }

    pub fn decode(&self, h: &Tensor<S>) -> Result<Tensor<S>> {
        let mut x = h.clone();
        let last = self.decoder.len() - 1;
        for (i, layer) in self.decoder.iter().enumerate() {
            x = ops::conv2d_circular(&x, &layer.weight, &layer.bias)?;
            x = if i == last { ops::sigmoid(&x)? } else { ops::relu(&x)? };
        }
        Ok(x)
    }

    /// Training-mode forward: `(final_pred, recon)`, both in (0, 1).
    pub fn forward_train(&self, input: &Tensor<S>) -> Result<(Tensor<S>, Tensor<S>)> {
        self.forward_train_dropout(input, 0.0, &mut ChaCha8Rng::seed_from_u64(0))
    }

    /// Training-mode forward with inverted dropout applied to every hidden
    /// state handed between timesteps. Dropping hidden cells forces the
    /// shared block to keep a redundant representation it can repair at
    /// every application, which pushes all timesteps toward one code
    /// instead of a fragile per-stage channel pipeline. `drop_prob == 0`
    /// is the plain deterministic forward.
    pub fn forward_train_dropout(
        &self,
        input: &Tensor<S>,
        drop_prob: f64,
        rng: &mut ChaCha8Rng,
    ) -> Result<(Tensor<S>, Tensor<S>)> {
        self.check_input(input)?;
        let enc = self.encode(input)?;
        let mut h = dropout(&enc, drop_prob, rng)?;
        for t in 0..self.cfg.model_timesteps {
            h = self.apply_block(t, &h)?;
            if t + 1 < self.cfg.model_timesteps {
                h = dropout(&h, drop_prob, rng)?;
            }
        }
        let final_pred = self.decode(&h)?;
        let recon = self.decode(&enc)?;
        Ok((final_pred, recon))
    }

    /// Inference-mode forward: decoder applied to each intermediate hidden
    /// state as well.
    pub fn forward_inference(&self, input: &Tensor<S>) -> Result<ForwardTrace<S>> {
        self.check_input(input)?;
        let enc = self.encode(input)?;
        let t = self.cfg.model_timesteps;
        let mut hidden = Vec::with_capacity(t - 1);
        let mut h = enc.clone();
        for step in 0..t {
            h = self.apply_block(step, &h)?;
            if step + 1 < t {
                hidden.push(h.clone());
            }
        }
        let decoded = hidden
            .iter()
            .map(|hi| self.decode(hi))
            .collect::<Result<Vec<_>>>()?;
        let final_pred = self.decode(&h)?;
        let recon = self.decode(&enc)?;
        Ok(ForwardTrace {
            hidden,
            decoded,
            final_pred,
            recon,
        })
    }

    /// Backbone pass with every activation detached: `(enc, hidden)` where
    /// `hidden` holds `h_1 .. h_T`. Decoding these trains the decoder alone;
    /// no gradient can reach the encoder or the blocks.
    pub fn backbone_detached(&self, input: &Tensor<S>) -> Result<(Tensor<S>, Vec<Tensor<S>>)> {
        self.check_input(input)?;
        let enc = self.encode(input)?.detach();
        let mut hidden = Vec::with_capacity(self.cfg.model_timesteps);
        let mut h = enc.clone();
        for t in 0..self.cfg.model_timesteps {
            h = self.apply_block(t, &h)?.detach();
            hidden.push(h.clone());
        }
        Ok((enc, hidden))
    }

    /// Per-pixel probability map `[B,1,H,W]` that each cell of each image
    /// locally looks like part of a real GoL state. Training against this
    /// map hands the decoder a gradient at every pixel instead of one
    /// image-wide scalar.
    pub fn discriminate_map(&self, image: &Tensor<S>) -> Result<Tensor<S>> {
        let disc = self
            .discriminator
            .as_ref()
            .ok_or_else(|| Error::Precondition("discriminator not initialized".into()))?;
        let x = ops::relu(&ops::conv2d_circular(image, &disc.conv1.weight, &disc.conv1.bias)?)?;
        let x = ops::relu(&ops::conv2d_circular(&x, &disc.conv2.weight, &disc.conv2.bias)?)?;
        ops::sigmoid(&ops::conv2d_circular(&x, &disc.head.weight, &disc.head.bias)?)
    }

    /// Probability that each image in the batch is a real GoL state:
    /// the mean of the per-pixel verdicts.
    pub fn discriminate(&self, image: &Tensor<S>) -> Result<Tensor<S>> {
        ops::global_mean_pool(&self.discriminate_map(image)?)
    }

    pub fn backbone_parameters(&self) -> Vec<Parameter<S>> {
        let mut out = self.encoder_rnn_parameters();
        out.extend(self.decoder_parameters());
        out
    }

    /// Encoder and block parameters: the part frozen during adversarial
    /// fine-tuning.
    pub fn encoder_rnn_parameters(&self) -> Vec<Parameter<S>> {
        let mut out = Vec::new();
        for (i, l) in self.encoder.iter().enumerate() {
            out.push(Parameter::new(format!("encoder.{i}.weight"), l.weight.clone()));
            out.push(Parameter::new(format!("encoder.{i}.bias"), l.bias.clone()));
        }
        for (b, block) in self.blocks.iter().enumerate() {
            for (i, l) in block.iter().enumerate() {
                out.push(Parameter::new(format!("block.{b}.{i}.weight"), l.weight.clone()));
                out.push(Parameter::new(format!("block.{b}.{i}.bias"), l.bias.clone()));
            }
        }
        out
    }

    pub fn decoder_parameters(&self) -> Vec<Parameter<S>> {
        let mut out = Vec::new();
        for (i, l) in self.decoder.iter().enumerate() {
            out.push(Parameter::new(format!("decoder.{i}.weight"), l.weight.clone()));
            out.push(Parameter::new(format!("decoder.{i}.bias"), l.bias.clone()));
        }
        out
    }

    pub fn discriminator_parameters(&self) -> Vec<Parameter<S>> {
        let mut out = Vec::new();
        if let Some(d) = &self.discriminator {
            out.push(Parameter::new("disc.conv1.weight", d.conv1.weight.clone()));
            out.push(Parameter::new("disc.conv1.bias", d.conv1.bias.clone()));
            out.push(Parameter::new("disc.conv2.weight", d.conv2.weight.clone()));
            out.push(Parameter::new("disc.conv2.bias", d.conv2.bias.clone()));
            out.push(Parameter::new("disc.head.weight", d.head.weight.clone()));
            out.push(Parameter::new("disc.head.bias", d.head.bias.clone()));
        }
        out
    }

    pub fn all_parameters(&self) -> Vec<Parameter<S>> {
        let mut out = self.backbone_parameters();
        out.extend(self.discriminator_parameters());
        out
    }
}

/// Inverted dropout by a constant Bernoulli mask: kept elements are scaled
/// by 1/(1-p) so the expected activation is unchanged.
fn dropout<S: Scalar>(x: &Tensor<S>, p: f64, rng: &mut ChaCha8Rng) -> Result<Tensor<S>> {
    if p <= 0.0 {
        return Ok(x.clone());
    }
    if p >= 1.0 {
        return Err(Error::invalid("dropout probability must be below 1"));
    }
    let keep = S::from_f64(1.0 / (1.0 - p));
    let mask: Vec<S> = (0..x.numel())
        .map(|_| if rng.gen::<f64>() < p { S::zero() } else { keep })
        .collect();
    ops::mul(x, &Tensor::from_vec(x.shape(), mask)?)
}

/// Hand-built weights for which one block application is exactly one GoL
/// step and the decoder thresholds back to the grid.
///
/// The construction feeds the neighbor sum plus half the center cell into
/// four hinge features `relu(v - a)`, `a in {2, 2.5, 3.5, 4}`; the second
/// block layer combines them into a trapezoid that is exactly 1 on the
/// alive cases `v in {2.5, 3, 3.5}` and 0 on every other reachable value.
/// Four hidden channels are required; two hinge features cannot carve out
/// the alive band.
pub fn construct_gol_step_params<S: Scalar>(cfg: &ModelConfig) -> Result<NetworkParams<S>> {
    cfg.validate()?;
    if cfg.kernel_size != 3 {
        return Err(Error::Precondition("rule construction requires kernel_size = 3".into()));
    }
    if cfg.hidden_activation != Activation::Relu {
        return Err(Error::Precondition(
            "rule construction requires relu hidden activations; the trapezoid \
             features rely on exact zeros"
                .into(),
        ));
    }
    if cfg.channels < 4 {
        return Err(Error::Precondition(
            "rule construction requires at least 4 channels".into(),
        ));
    }
    if cfg.rnn_layers_per_block < 2 {
        return Err(Error::Precondition(
            "rule construction requires at least 2 layers per block".into(),
        ));
    }
    let c = cfg.channels;
    let k = 3;
    let kk = k * k;
    let center = 4; // index of (1,1) in a 3x3 kernel

    let identity_cc = |chs: usize| -> ConvLayer<S> {
        let mut w = vec![S::zero(); chs * chs * kk];
        for ch in 0..chs {
            w[(ch * chs + ch) * kk + center] = S::one();
        }
        ConvLayer::from_values(chs, chs, k, w, vec![S::zero(); chs])
    };

    // Encoder: copy the grid into channel 0.
    let mut encoder = Vec::new();
    let mut w0 = vec![S::zero(); c * kk];
    w0[center] = S::one();
    encoder.push(ConvLayer::from_values(c, 1, k, w0, vec![S::zero(); c]));
    for _ in 1..cfg.encoder_layers {
        encoder.push(identity_cc(c));
    }

    // Block layer 1: hinge features of v = neighbor sum + 0.5 * center.
    let hinges = [2.0, 2.5, 3.5, 4.0];
    let mut w1 = vec![S::zero(); c * c * kk];
    let mut b1 = vec![S::zero(); c];
    for (ch, knot) in hinges.iter().enumerate() {
        let base = (ch * c) * kk; // reads channel 0
        for tap in 0..kk {
            w1[base + tap] = if tap == center {
                S::from_f64(0.5)
            } else {
                S::one()
            };
        }
        b1[ch] = S::from_f64(-knot);
    }
    let layer1 = ConvLayer::from_values(c, c, k, w1, b1);

    // Block layer 2: trapezoid 2*(A - B - C + D) back into channel 0.
    let mut w2 = vec![S::zero(); c * c * kk];
    let signs = [2.0, -2.0, -2.0, 2.0];
    for (ch, sign) in signs.iter().enumerate() {
        w2[ch * kk + center] = S::from_f64(*sign);
    }
    let layer2 = ConvLayer::from_values(c, c, k, w2, vec![S::zero(); c]);

    let mut block = vec![layer1, layer2];
    for _ in 2..cfg.rnn_layers_per_block {
        block.push(identity_cc(c));
    }
    let block_count = if cfg.weight_sharing {
        1
    } else {
        cfg.model_timesteps
    };
    let blocks = (0..block_count)
        .map(|_| block.iter().map(ConvLayer::deep_clone).collect())
        .collect();

    // Decoder: steep sigmoid on channel 0.
    let mut decoder = Vec::new();
    for _ in 1..cfg.decoder_layers {
        decoder.push(identity_cc(c));
    }
    let mut wd = vec![S::zero(); c * kk];
    wd[center] = S::from_f64(20.0);
    decoder.push(ConvLayer::from_values(1, c, k, wd, vec![S::from_f64(-10.0)]));

    Ok(NetworkParams {
        cfg: cfg.clone(),
        encoder,
        blocks,
        decoder,
        discriminator: None,
    })
}
