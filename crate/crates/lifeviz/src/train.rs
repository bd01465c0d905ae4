//! Training regimes: final-state training (optionally averaged with the
//! autoencoder loss), adversarial decoder fine-tuning with a frozen
//! encoder/RNN, accuracy gating, and emergence-step tracking.

use crate::error::{Error, Result};
use crate::life::{self, Example, GenConfig, Grid};
use crate::metric::{self, MatchReport, MetricInput};
use crate::model::NetworkParams;
use crate::tensor::ops;
use crate::tensor::optim::{Adam, Sgd};
use crate::tensor::{Scalar, Tensor};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Training stops early once evaluation accuracy reaches this level; the
/// 99% gate is still applied to the final measurement.
pub const EARLY_STOP_ACCURACY: f64 = 0.995;

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_steps: usize,
    pub eval_interval: usize,
    pub use_autoencoder: bool,
    /// Runs below this final accuracy are excluded from reported means.
    pub accuracy_gate: f64,
    /// Pixel-accuracy level whose first crossing is recorded per state.
    pub emergence_threshold: f64,
    pub eval_set_size: usize,
    pub seed: u64,
    /// When true, training stops once evaluation accuracy reaches
    /// [`EARLY_STOP_ACCURACY`]; otherwise it runs all `max_steps`.
    pub early_stop: bool,
    /// Stream one line per evaluation to stderr. Off by default; file
    /// outputs are unaffected either way.
    #[serde(default)]
    pub progress: bool,
    /// Decoupled L2 weight decay applied by the optimizer. A small decay
    /// biases the decoder toward the minimum-norm readout shared with the
    /// autoencoder path, which keeps decoded hidden states legible.
    #[serde(default)]
    pub weight_decay: f64,
    /// Which optimizer drives the main regime.
    #[serde(default)]
    pub optimizer: OptimizerKind,
    /// Momentum coefficient when `optimizer` is `sgd`; ignored by Adam.
    #[serde(default = "default_momentum")]
    pub momentum: f64,
    /// Inverted-dropout probability on hidden states between timesteps
    /// during the main regime (train-time only). Dropping hidden cells
    /// forces the shared block onto a redundant, self-repairing code, so
    /// every timestep tends to reuse the decoder-readable representation.
    #[serde(default)]
    pub hidden_dropout: f64,
}

fn default_momentum() -> f64 {
    0.9
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    #[default]
    Adam,
    Sgd,
}

/// Either optimizer behind one `step` call.
enum Optimizer<S: Scalar> {
    Adam(Adam<S>),
    Sgd(Sgd<S>),
}

impl<S: Scalar> Optimizer<S> {
    fn from_config(cfg: &TrainConfig) -> Self {
        match cfg.optimizer {
            OptimizerKind::Adam => {
                let mut a = Adam::new(cfg.learning_rate);
                a.weight_decay = cfg.weight_decay;
                Optimizer::Adam(a)
            }
            OptimizerKind::Sgd => {
                let mut s = Sgd::new(cfg.learning_rate, cfg.momentum);
                s.weight_decay = cfg.weight_decay;
                Optimizer::Sgd(s)
            }
        }
    }

    fn step(&mut self, params: &[crate::tensor::optim::Parameter<S>]) -> Result<()> {
        match self {
            Optimizer::Adam(a) => a.step(params),
            Optimizer::Sgd(s) => s.step(params),
        }
    }
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            batch_size: 16,
            max_steps: 20_000,
            eval_interval: 100,
            use_autoencoder: true,
            accuracy_gate: 0.99,
            emergence_threshold: 0.98,
            eval_set_size: 256,
            seed: 0,
            early_stop: true,
            progress: false,
            weight_decay: 0.0,
            optimizer: OptimizerKind::default(),
            momentum: default_momentum(),
            hidden_dropout: 0.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.max_steps == 0 || self.eval_interval == 0 {
            return Err(Error::invalid("batch_size, max_steps, eval_interval must be positive"));
        }
        if !(0.0..=1.0).contains(&self.accuracy_gate) || self.accuracy_gate == 0.0 {
            return Err(Error::invalid("accuracy_gate must be in (0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.emergence_threshold) || self.emergence_threshold == 0.0 {
            return Err(Error::invalid("emergence_threshold must be in (0, 1]"));
        }
        if self.eval_set_size == 0 {
            return Err(Error::invalid("eval_set_size must be positive"));
        }
        if !(0.0..1.0).contains(&self.hidden_dropout) {
            return Err(Error::invalid("hidden_dropout must be in [0, 1)"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AdvConfig {
    pub disc_learning_rate: f64,
    pub adv_steps: usize,
    /// Weights for the (final-prediction, autoencoder, generator) terms;
    /// the weighted sum is divided by 3 to mirror the loss-averaging style
    /// of the main regime.
    pub loss_weights: [f64; 3],
    /// Gaussian instance noise added to every discriminator input. Real
    /// boards are binary while decoder outputs are sigmoid-continuous, so
    /// without noise the discriminator wins on saturation alone and never
    /// judges structure.
    #[serde(default)]
    pub instance_noise: f64,
    /// Target used for real samples in the discriminator loss (one-sided
    /// label smoothing); 1.0 disables it.
    #[serde(default = "default_real_label")]
    pub real_label: f64,
}

fn default_real_label() -> f64 {
    1.0
}

impl Default for AdvConfig {
    fn default() -> Self {
        AdvConfig {
            disc_learning_rate: 1e-3,
            adv_steps: 2_000,
            loss_weights: [1.0, 1.0, 1.0],
            instance_noise: 0.1,
            real_label: 0.9,
        }
    }
}

impl AdvConfig {
    pub fn validate(&self) -> Result<()> {
        if self.loss_weights.iter().any(|&w| w < 0.0) {
            return Err(Error::invalid("loss weights must be non-negative"));
        }
        if self.loss_weights.iter().all(|&w| w == 0.0) {
            return Err(Error::invalid("at least one loss weight must be positive"));
        }
        if self.adv_steps == 0 {
            return Err(Error::invalid("adv_steps must be positive"));
        }
        if self.instance_noise < 0.0 {
            return Err(Error::invalid("instance_noise must be non-negative"));
        }
        if !(0.0..=1.0).contains(&self.real_label) || self.real_label == 0.0 {
            return Err(Error::invalid("real_label must be in (0, 1]"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
pub struct LossEntry {
    pub step: usize,
    pub main_loss: f64,
    pub autoencoder_loss: Option<f64>,
}

#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
pub struct EvalEntry {
    pub step: usize,
    pub final_accuracy: f64,
    /// Per decoded intermediate; empty when model and GoL timesteps differ.
    pub intermediate: Vec<f64>,
}

/// Outcome of one training phase.
#[derive(Clone, Debug, Default, serde::Serialize, serde::Deserialize)]
pub struct RunRecord {
    pub loss_history: Vec<LossEntry>,
    pub eval_history: Vec<EvalEntry>,
    pub final_accuracy: f64,
    pub gate_passed: bool,
    pub steps_run: usize,
    /// First step at which each decoded intermediate state reached the
    /// emergence threshold; empty when model and GoL timesteps differ.
    pub emergence_steps: Vec<Option<usize>>,
    /// First step at which the final prediction reached the threshold.
    pub final_emergence_step: Option<usize>,
    /// Filled in by the harness once a checkpoint is written.
    pub checkpoint: Option<std::path::PathBuf>,
}

/// Where training batches come from: an endless seeded generator, or a
/// fixed dataset cycled in order (the overfit regime).
pub enum DataSource {
    Stream {
        gen: GenConfig,
        gol_timesteps: usize,
        rng: ChaCha8Rng,
    },
    Fixed {
        examples: Vec<Example>,
        cursor: usize,
    },
}

impl DataSource {
    pub fn stream(gen: GenConfig, gol_timesteps: usize) -> Self {
        let rng = gen.rng();
        DataSource::Stream {
            gen,
            gol_timesteps,
            rng,
        }
    }

    pub fn fixed(examples: Vec<Example>) -> Result<Self> {
        if examples.is_empty() {
            return Err(Error::invalid("fixed data source needs at least one example"));
        }
        Ok(DataSource::Fixed {
            examples,
            cursor: 0,
        })
    }

    pub fn gol_timesteps(&self) -> usize {
        match self {
            DataSource::Stream { gol_timesteps, .. } => *gol_timesteps,
            DataSource::Fixed { examples, .. } => examples[0].truth.len() - 1,
        }
    }

    pub fn next_batch(&mut self, n: usize) -> Result<Vec<Example>> {
        match self {
            DataSource::Stream {
                gen,
                gol_timesteps,
                rng,
            } => (0..n)
                .map(|_| life::make_example(gen, *gol_timesteps, rng))
                .collect(),
            DataSource::Fixed { examples, cursor } => {
                let mut out = Vec::with_capacity(n);
                for _ in 0..n {
                    out.push(examples[*cursor].clone());
                    *cursor = (*cursor + 1) % examples.len();
                }
                Ok(out)
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Tensor <-> Grid plumbing
// ---------------------------------------------------------------------------

/// Stacks grids into a constant `[B,1,H,W]` tensor.
pub fn grids_to_tensor<S: Scalar>(grids: &[Grid]) -> Result<Tensor<S>> {
    if grids.is_empty() {
        return Err(Error::invalid("empty grid batch"));
    }
    let (h, w) = (grids[0].height(), grids[0].width());
    let mut data = Vec::with_capacity(grids.len() * h * w);
    for g in grids {
        if g.height() != h || g.width() != w {
            return Err(Error::shape(format!("{w}x{h}"), format!("{}x{}", g.width(), g.height())));
        }
        data.extend(g.cells().iter().map(|&c| S::from_f64(c as f64)));
    }
    Tensor::from_vec(&[grids.len(), 1, h, w], data)
}

/// Thresholds a `[B,1,H,W]` image batch into grids. A value exactly equal
/// to `tau` maps to 0.
pub fn threshold<S: Scalar>(image: &Tensor<S>, tau: f64) -> Result<Vec<Grid>> {
    let s = image.shape();
    if s.len() != 4 || s[1] != 1 {
        return Err(Error::shape("[B,1,H,W]", format!("{s:?}")));
    }
    let (b, h, w) = (s[0], s[2], s[3]);
    let tau = S::from_f64(tau);
    let d = image.data();
    let mut out = Vec::with_capacity(b);
    for i in 0..b {
        let cells = d[i * h * w..(i + 1) * h * w]
            .iter()
            .map(|&v| u8::from(v > tau))
            .collect();
        out.push(Grid::new(w, h, cells)?);
    }
    Ok(out)
}

/// Fraction of pixels where the thresholded prediction equals the target.
pub fn pixel_accuracy<S: Scalar>(pred: &Tensor<S>, target: &Grid) -> Result<f64> {
    if pred.numel() != target.cells().len() {
        return Err(Error::shape(
            format!("{} pixels", target.cells().len()),
            format!("{}", pred.numel()),
        ));
    }
    let half = S::from_f64(0.5);
    let d = pred.data();
    let equal = d
        .iter()
        .zip(target.cells())
        .filter(|(&v, &t)| u8::from(v > half) == t)
        .count();
    Ok(equal as f64 / target.cells().len() as f64)
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

pub struct EvalAccuracy {
    pub final_accuracy: f64,
    /// Mean accuracy of decoded hidden state `h_i` against truth state
    /// `s_{i+1}`; present only when model and GoL timesteps coincide.
    pub intermediate: Vec<f64>,
}

const EVAL_CHUNK: usize = 32;

/// Mean pixel accuracies over a fixed evaluation set. Pure: touches no
/// parameters, no optimizer state, no random stream.
pub fn evaluate_accuracy<S: Scalar>(
    params: &NetworkParams<S>,
    eval_set: &[Example],
) -> Result<EvalAccuracy> {
    if eval_set.is_empty() {
        return Err(Error::invalid("empty evaluation set"));
    }
    let t = params.cfg.model_timesteps;
    let g = eval_set[0].truth.len() - 1;
    let track_intermediate = t == g;
    let mut final_sum = 0.0;
    let mut inter_sum = vec![0.0; if track_intermediate { t - 1 } else { 0 }];
    let plane = params.cfg.grid_height * params.cfg.grid_width;
    for chunk in eval_set.chunks(EVAL_CHUNK) {
        let firsts: Vec<Grid> = chunk.iter().map(|e| e.first.clone()).collect();
        let x = grids_to_tensor::<S>(&firsts)?;
        let trace = params.forward_inference(&x)?;
        let pred = trace.final_pred.data();
        let half = S::from_f64(0.5);
        for (bi, ex) in chunk.iter().enumerate() {
            let p = &pred[bi * plane..(bi + 1) * plane];
            let equal = p
                .iter()
                .zip(ex.target.cells())
                .filter(|(&v, &t)| u8::from(v > half) == t)
                .count();
            final_sum += equal as f64 / plane as f64;
        }
        if track_intermediate {
            for (i, dec) in trace.decoded.iter().enumerate() {
                let dd = dec.data();
                for (bi, ex) in chunk.iter().enumerate() {
                    let truth = &ex.truth.states[i + 1];
                    let p = &dd[bi * plane..(bi + 1) * plane];
                    let equal = p
                        .iter()
                        .zip(truth.cells())
                        .filter(|(&v, &t)| u8::from(v > half) == t)
                        .count();
                    inter_sum[i] += equal as f64 / plane as f64;
                }
            }
        }
    }
    let n = eval_set.len() as f64;
    Ok(EvalAccuracy {
        final_accuracy: final_sum / n,
        intermediate: inter_sum.into_iter().map(|s| s / n).collect(),
    })
}

/// Scores the interpretability metric over freshly generated sequences.
/// Returns the mean and the per-sequence reports.
pub fn metric_eval<S: Scalar>(
    params: &NetworkParams<S>,
    gen: &GenConfig,
    gol_timesteps: usize,
    sequences: usize,
    seed: u64,
) -> Result<(f64, Vec<MatchReport>)> {
    if gol_timesteps < 2 {
        return Err(Error::invalid("metric evaluation needs gol_timesteps >= 2"));
    }
    if sequences == 0 {
        return Err(Error::invalid("metric evaluation needs at least one sequence"));
    }
    let gen = GenConfig { seed, ..gen.clone() };
    let mut rng = gen.rng();
    let examples: Vec<Example> = (0..sequences)
        .map(|_| life::make_example(&gen, gol_timesteps, &mut rng))
        .collect::<Result<_>>()?;
    let mut reports = Vec::with_capacity(sequences);
    let mut sum = 0.0;
    for chunk in examples.chunks(EVAL_CHUNK) {
        let firsts: Vec<Grid> = chunk.iter().map(|e| e.first.clone()).collect();
        let x = grids_to_tensor::<S>(&firsts)?;
        let trace = params.forward_inference(&x)?;
        let decoded_grids: Vec<Vec<Grid>> = trace
            .decoded
            .iter()
            .map(|d| threshold(d, 0.5))
            .collect::<Result<_>>()?;
        for (bi, ex) in chunk.iter().enumerate() {
            let hidden_decoded: Vec<Grid> =
                decoded_grids.iter().map(|per_i| per_i[bi].clone()).collect();
            let report = metric::metric(&MetricInput {
                hidden_decoded,
                truth: ex.truth.clone(),
            })?;
            sum += report.value;
            reports.push(report);
        }
    }
    Ok((sum / sequences as f64, reports))
}

// ---------------------------------------------------------------------------
// Main training regime
// ---------------------------------------------------------------------------

/// Trains encoder, blocks, and decoder on the final-state loss, optionally
/// averaged with the autoencoder loss. Evaluates on `eval_set` every
/// `eval_interval` steps, records emergence crossings, and stops early at
/// [`EARLY_STOP_ACCURACY`].
pub fn train_main<S: Scalar>(
    params: &NetworkParams<S>,
    cfg: &TrainConfig,
    data: &mut DataSource,
    eval_set: &[Example],
) -> Result<RunRecord> {
    cfg.validate()?;
    if eval_set.is_empty() {
        return Err(Error::invalid("empty evaluation set"));
    }
    let t = params.cfg.model_timesteps;
    let g = data.gol_timesteps();
    let mut record = RunRecord {
        emergence_steps: vec![None; if t == g { t - 1 } else { 0 }],
        ..RunRecord::default()
    };
    let backbone = params.backbone_parameters();
    let mut optimizer = Optimizer::from_config(cfg);
    let mut drop_rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(0xD209));
    let half = S::from_f64(0.5);
    let mut last_eval: Option<EvalAccuracy> = None;
    let mut last_eval_step = 0usize;
    for step in 1..=cfg.max_steps {
        let batch = data.next_batch(cfg.batch_size)?;
        let firsts: Vec<Grid> = batch.iter().map(|e| e.first.clone()).collect();
        let targets: Vec<Grid> = batch.iter().map(|e| e.target.clone()).collect();
        let x = grids_to_tensor::<S>(&firsts)?;
        let y = grids_to_tensor::<S>(&targets)?;
        let (pred, recon) = params.forward_train_dropout(&x, cfg.hidden_dropout, &mut drop_rng)?;
        let main = ops::mse_loss(&pred, &y)?;
        let (loss, ae_value) = if cfg.use_autoencoder {
            let ae = ops::mse_loss(&recon, &x)?;
            let avg = ops::scale(&ops::add(&main, &ae)?, half)?;
            (avg, Some(ae.item().to_f64()))
        } else {
            (main.clone(), None)
        };
        loss.backward()?;
        optimizer.step(&backbone)?;
        record.loss_history.push(LossEntry {
            step,
            main_loss: main.item().to_f64(),
            autoencoder_loss: ae_value,
        });
        record.steps_run = step;

        if step % cfg.eval_interval == 0 || step == cfg.max_steps {
            let eval = evaluate_accuracy(params, eval_set)?;
            if cfg.progress {
                let inter: Vec<String> =
                    eval.intermediate.iter().map(|v| format!("{v:.4}")).collect();
                eprintln!(
                    "step {step:6}  final acc {:.4}  intermediate [{}]",
                    eval.final_accuracy,
                    inter.join(", ")
                );
            }
            record.eval_history.push(EvalEntry {
                step,
                final_accuracy: eval.final_accuracy,
                intermediate: eval.intermediate.clone(),
            });
            if record.final_emergence_step.is_none()
                && eval.final_accuracy >= cfg.emergence_threshold
            {
                record.final_emergence_step = Some(step);
            }
            for (i, &acc) in eval.intermediate.iter().enumerate() {
                if record.emergence_steps[i].is_none() && acc >= cfg.emergence_threshold {
                    record.emergence_steps[i] = Some(step);
                }
            }
            let stop = cfg.early_stop && eval.final_accuracy >= EARLY_STOP_ACCURACY;
            last_eval = Some(eval);
            last_eval_step = step;
            if stop {
                break;
            }
        }
    }
    let final_eval = match last_eval {
        Some(e) if last_eval_step == record.steps_run => e,
        _ => evaluate_accuracy(params, eval_set)?,
    };
    record.final_accuracy = final_eval.final_accuracy;
    record.gate_passed = record.final_accuracy >= cfg.accuracy_gate;
    Ok(record)
}

// ---------------------------------------------------------------------------
// Adversarial decoder fine-tuning
// ---------------------------------------------------------------------------

/// GAN-style fine-tuning of the decoder on a pretrained backbone.
/// Alternates 1:1 between a discriminator step (real GoL states vs decoded
/// intermediates) and a decoder step (weighted final-prediction,
/// autoencoder, and non-saturating generator losses). Encoder and block
/// parameters receive no updates: every hidden state is detached before it
/// reaches a loss.
pub fn train_adversarial<S: Scalar>(
    params: &mut NetworkParams<S>,
    cfg: &TrainConfig,
    adv: &AdvConfig,
    data: &mut DataSource,
    eval_set: &[Example],
    pretrained: &RunRecord,
) -> Result<RunRecord> {
    cfg.validate()?;
    adv.validate()?;
    if pretrained.steps_run == 0 {
        return Err(Error::Precondition(
            "adversarial training requires a backbone pretrained by the main regime".into(),
        ));
    }
    params.ensure_discriminator(cfg.seed.wrapping_add(0x0D15C));
    let disc_params = params.discriminator_parameters();
    let dec_params = params.decoder_parameters();
    let mut adam_disc = Adam::new(adv.disc_learning_rate);
    let mut adam_dec = Adam::new(cfg.learning_rate);
    adam_dec.weight_decay = cfg.weight_decay;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(0xAD7E2));
    let t = params.cfg.model_timesteps;
    let [w_final, w_ae, w_gen] = adv.loss_weights;
    let mut record = RunRecord::default();

    for step in 1..=adv.adv_steps {
        // -- discriminator step --------------------------------------------
        let batch = data.next_batch(cfg.batch_size)?;
        let firsts: Vec<Grid> = batch.iter().map(|e| e.first.clone()).collect();
        let x = grids_to_tensor::<S>(&firsts)?;
        let real: Vec<Grid> = batch
            .iter()
            .map(|e| {
                let idx = rng.gen_range(0..e.truth.len());
                e.truth.states[idx].clone()
            })
            .collect();
        let real_x = grids_to_tensor::<S>(&real)?;
        let (_, hidden) = params.backbone_detached(&x)?;
        let fakes: Vec<Tensor<S>> = hidden[..t - 1]
            .iter()
            .map(|h| params.decode(h))
            .collect::<Result<_>>()?;
        let fake_x = stack_detached(&fakes)?;
        let d_real = params.discriminate_map(&noised(&real_x, adv.instance_noise, &mut rng)?)?;
        let d_fake = params.discriminate_map(&noised(&fake_x, adv.instance_noise, &mut rng)?)?;
        let ones = filled_like(&d_real, S::from_f64(adv.real_label));
        let zeros_t = zeros_like(&d_fake);
        let disc_loss = ops::scale(
            &ops::add(&ops::bce_loss(&d_real, &ones)?, &ops::bce_loss(&d_fake, &zeros_t)?)?,
            half_of::<S>(),
        )?;
        disc_loss.backward()?;
        adam_disc.step(&disc_params)?;
        for p in &dec_params {
            p.value.zero_grad();
        }

        // -- decoder step ---------------------------------------------------
        let batch = data.next_batch(cfg.batch_size)?;
        let firsts: Vec<Grid> = batch.iter().map(|e| e.first.clone()).collect();
        let targets: Vec<Grid> = batch.iter().map(|e| e.target.clone()).collect();
        let x = grids_to_tensor::<S>(&firsts)?;
        let y = grids_to_tensor::<S>(&targets)?;
        let (enc, hidden) = params.backbone_detached(&x)?;
        let final_loss = ops::mse_loss(&params.decode(hidden.last().unwrap())?, &y)?;
        let ae_loss = ops::mse_loss(&params.decode(&enc)?, &x)?;
        // Non-saturating generator loss: -mean log D(decoded), i.e. BCE
        // against the "real" label, averaged over the intermediate states.
        let mut gen_loss: Option<Tensor<S>> = None;
        for h in &hidden[..t - 1] {
            let dec = params.decode(h)?;
            let d = params.discriminate_map(&noised(&dec, adv.instance_noise, &mut rng)?)?;
            let term = ops::bce_loss(&d, &ones_like(&d))?;
            gen_loss = Some(match gen_loss {
                Some(acc) => ops::add(&acc, &term)?,
                None => term,
            });
        }
        let gen_loss = ops::scale(&gen_loss.unwrap(), S::from_f64(1.0 / (t - 1) as f64))?;
        let weighted = ops::add(
            &ops::add(
                &ops::scale(&final_loss, S::from_f64(w_final))?,
                &ops::scale(&ae_loss, S::from_f64(w_ae))?,
            )?,
            &ops::scale(&gen_loss, S::from_f64(w_gen))?,
        )?;
        let total = ops::scale(&weighted, S::from_f64(1.0 / 3.0))?;
        total.backward()?;
        adam_dec.step(&dec_params)?;
        for p in &disc_params {
            p.value.zero_grad();
        }

        record.loss_history.push(LossEntry {
            step,
            main_loss: total.item().to_f64(),
            autoencoder_loss: Some(ae_loss.item().to_f64()),
        });
        record.steps_run = step;
    }

    let eval = evaluate_accuracy(params, eval_set)?;
    record.final_accuracy = eval.final_accuracy;
    record.gate_passed = record.final_accuracy >= cfg.accuracy_gate;
    Ok(record)
}

fn half_of<S: Scalar>() -> S {
    S::from_f64(0.5)
}

fn ones_like<S: Scalar>(t: &Tensor<S>) -> Tensor<S> {
    Tensor::from_vec(t.shape(), vec![S::one(); t.numel()]).unwrap()
}

fn filled_like<S: Scalar>(t: &Tensor<S>, value: S) -> Tensor<S> {
    Tensor::from_vec(t.shape(), vec![value; t.numel()]).unwrap()
}

/// Adds zero-mean Gaussian noise as a constant tensor; gradients flow
/// through to `t` untouched.
fn noised<S: Scalar>(t: &Tensor<S>, sigma: f64, rng: &mut ChaCha8Rng) -> Result<Tensor<S>> {
    if sigma <= 0.0 {
        return Ok(t.clone());
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::invalid(format!("noise: {e}")))?;
    let noise: Vec<S> = (0..t.numel()).map(|_| S::from_f64(normal.sample(rng))).collect();
    ops::add(t, &Tensor::from_vec(t.shape(), noise)?)
}

fn zeros_like<S: Scalar>(t: &Tensor<S>) -> Tensor<S> {
    Tensor::zeros(t.shape())
}

/// Concatenates detached image batches along the batch axis.
fn stack_detached<S: Scalar>(images: &[Tensor<S>]) -> Result<Tensor<S>> {
    if images.is_empty() {
        return Err(Error::invalid("nothing to stack"));
    }
    let s = images[0].shape().to_vec();
    let mut data = Vec::new();
    let mut batch = 0;
    for img in images {
        if img.shape()[1..] != s[1..] {
            return Err(Error::shape(format!("{s:?}"), format!("{:?}", img.shape())));
        }
        batch += img.shape()[0];
        data.extend(img.data().iter().copied());
    }
    Tensor::from_vec(&[batch, s[1], s[2], s[3]], data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{init_params, ModelConfig};

    fn small_gen(seed: u64) -> GenConfig {
        GenConfig {
            width: 8,
            height: 8,
            seed,
            ..GenConfig::default()
        }
    }

    #[test]
    fn threshold_rules() {
        let mk = |v: f64| Tensor::from_vec(&[1, 1, 2, 2], vec![v; 4]).unwrap();
        assert_eq!(threshold(&mk(0.49), 0.5).unwrap()[0].live_count(), 0);
        assert_eq!(threshold(&mk(0.51), 0.5).unwrap()[0].live_count(), 4);
        // exact tie maps to dead
        assert_eq!(threshold(&mk(0.5), 0.5).unwrap()[0].live_count(), 0);
    }

    #[test]
    fn pixel_accuracy_values() {
        let g = life::blinker_h(4, 4, 1, 1);
        let exact: Vec<f64> = g.cells().iter().map(|&c| c as f64).collect();
        let t = Tensor::from_vec(&[1, 1, 4, 4], exact.clone()).unwrap();
        assert_eq!(pixel_accuracy(&t, &g).unwrap(), 1.0);
        let flipped: Vec<f64> = exact.iter().map(|v| 1.0 - v).collect();
        let t = Tensor::from_vec(&[1, 1, 4, 4], flipped).unwrap();
        assert_eq!(pixel_accuracy(&t, &g).unwrap(), 0.0);
        let half: Vec<f64> = exact
            .iter()
            .enumerate()
            .map(|(i, &v)| if i < 8 { 1.0 - v } else { v })
            .collect();
        let t = Tensor::from_vec(&[1, 1, 4, 4], half).unwrap();
        assert_eq!(pixel_accuracy(&t, &g).unwrap(), 0.5);
        assert!(pixel_accuracy(&t, &Grid::dead(3, 3)).is_err());
    }

    #[test]
    fn autoencoder_flag_controls_loss_and_history() {
        let cfg = ModelConfig {
            grid_height: 8,
            grid_width: 8,
            channels: 4,
            model_timesteps: 2,
            ..ModelConfig::default()
        };
        let params = init_params::<f64>(&cfg, 1).unwrap();
        let gen = small_gen(1);
        let eval_set = life::make_dataset(&GenConfig { seed: 99, ..gen.clone() }, 8, 2).unwrap();
        let tcfg = TrainConfig {
            max_steps: 3,
            eval_interval: 10,
            batch_size: 4,
            use_autoencoder: false,
            ..TrainConfig::default()
        };
        let mut data = DataSource::stream(gen, 2);
        let record = train_main(&params, &tcfg, &mut data, &eval_set).unwrap();
        assert!(record
            .loss_history
            .iter()
            .all(|e| e.autoencoder_loss.is_none()));
    }

    #[test]
    fn averaged_loss_gradient_equals_manual_composition() {
        // Gradients of 0.5*(main + ae) must equal gradients of the same
        // scalar composed by hand from two separate backward passes.
        let cfg = ModelConfig {
            grid_height: 6,
            grid_width: 6,
            channels: 4,
            model_timesteps: 2,
            ..ModelConfig::default()
        };
        let params = init_params::<f64>(&cfg, 7).unwrap();
        let gen = GenConfig {
            width: 6,
            height: 6,
            seed: 3,
            ..GenConfig::default()
        };
        let data = life::make_dataset(&gen, 4, 2).unwrap();
        let firsts: Vec<Grid> = data.iter().map(|e| e.first.clone()).collect();
        let targets: Vec<Grid> = data.iter().map(|e| e.target.clone()).collect();
        let x = grids_to_tensor::<f64>(&firsts).unwrap();
        let y = grids_to_tensor::<f64>(&targets).unwrap();
        let backbone = params.backbone_parameters();

        let (pred, recon) = params.forward_train(&x).unwrap();
        let avg = ops::scale(
            &ops::add(
                &ops::mse_loss(&pred, &y).unwrap(),
                &ops::mse_loss(&recon, &x).unwrap(),
            )
            .unwrap(),
            0.5,
        )
        .unwrap();
        avg.backward().unwrap();
        let grads_a: Vec<Vec<f64>> = backbone
            .iter()
            .map(|p| p.value.grad().unwrap())
            .collect();
        for p in &backbone {
            p.value.zero_grad();
        }

        // manual: backprop each term separately with weight 0.5
        let (pred, recon) = params.forward_train(&x).unwrap();
        ops::scale(&ops::mse_loss(&pred, &y).unwrap(), 0.5)
            .unwrap()
            .backward()
            .unwrap();
        ops::scale(&ops::mse_loss(&recon, &x).unwrap(), 0.5)
            .unwrap()
            .backward()
            .unwrap();
        for (p, ga) in backbone.iter().zip(&grads_a) {
            let gb = p.value.grad().unwrap();
            for (a, b) in ga.iter().zip(&gb) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn evaluation_is_side_effect_free() {
        let cfg = ModelConfig {
            grid_height: 8,
            grid_width: 8,
            channels: 4,
            model_timesteps: 2,
            ..ModelConfig::default()
        };
        let params = init_params::<f64>(&cfg, 2).unwrap();
        let eval_set = life::make_dataset(&small_gen(5), 8, 2).unwrap();
        let before: Vec<Vec<f64>> = params
            .backbone_parameters()
            .iter()
            .map(|p| p.value.to_vec())
            .collect();
        let a = evaluate_accuracy(&params, &eval_set).unwrap();
        let b = evaluate_accuracy(&params, &eval_set).unwrap();
        assert_eq!(a.final_accuracy, b.final_accuracy);
        let after: Vec<Vec<f64>> = params
            .backbone_parameters()
            .iter()
            .map(|p| p.value.to_vec())
            .collect();
        assert_eq!(before, after);
        assert!(params
            .backbone_parameters()
            .iter()
            .all(|p| p.value.grad().is_none()));
    }

    #[test]
    fn adversarial_requires_pretrained_backbone() {
        let cfg = ModelConfig {
            grid_height: 8,
            grid_width: 8,
            channels: 4,
            model_timesteps: 2,
            ..ModelConfig::default()
        };
        let mut params = init_params::<f64>(&cfg, 2).unwrap();
        let eval_set = life::make_dataset(&small_gen(5), 4, 2).unwrap();
        let mut data = DataSource::stream(small_gen(0), 2);
        let err = train_adversarial(
            &mut params,
            &TrainConfig::default(),
            &AdvConfig::default(),
            &mut data,
            &eval_set,
            &RunRecord::default(),
        );
        assert!(matches!(err, Err(Error::Precondition(_))));
    }

    #[test]
    fn adversarial_freezes_encoder_and_blocks() {
        let cfg = ModelConfig {
            grid_height: 8,
            grid_width: 8,
            channels: 4,
            model_timesteps: 2,
            ..ModelConfig::default()
        };
        let mut params = init_params::<f64>(&cfg, 2).unwrap();
        let gen = small_gen(0);
        let eval_set = life::make_dataset(&GenConfig { seed: 50, ..gen.clone() }, 8, 2).unwrap();
        let tcfg = TrainConfig {
            max_steps: 5,
            eval_interval: 5,
            batch_size: 4,
            ..TrainConfig::default()
        };
        let mut data = DataSource::stream(gen, 2);
        let pre = train_main(&params, &tcfg, &mut data, &eval_set).unwrap();
        let frozen: Vec<Vec<f64>> = params
            .encoder_rnn_parameters()
            .iter()
            .map(|p| p.value.to_vec())
            .collect();
        let decoder_before: Vec<Vec<f64>> = params
            .decoder_parameters()
            .iter()
            .map(|p| p.value.to_vec())
            .collect();
        let adv = AdvConfig {
            adv_steps: 5,
            ..AdvConfig::default()
        };
        train_adversarial(&mut params, &tcfg, &adv, &mut data, &eval_set, &pre).unwrap();
        let frozen_after: Vec<Vec<f64>> = params
            .encoder_rnn_parameters()
            .iter()
            .map(|p| p.value.to_vec())
            .collect();
        assert_eq!(frozen, frozen_after, "encoder/RNN must be bitwise unchanged");
        let decoder_after: Vec<Vec<f64>> = params
            .decoder_parameters()
            .iter()
            .map(|p| p.value.to_vec())
            .collect();
        assert_ne!(decoder_before, decoder_after, "decoder must move");
    }

    #[test]
    fn rule_network_metric_is_perfect() {
        let cfg = ModelConfig {
            grid_height: 8,
            grid_width: 8,
            channels: 4,
            model_timesteps: 3,
            ..ModelConfig::default()
        };
        let params = crate::model::construct_gol_step_params::<f64>(&cfg).unwrap();
        let (mean, reports) = metric_eval(&params, &small_gen(0), 3, 20, 123).unwrap();
        assert_eq!(reports.len(), 20);
        assert!(mean >= 1.0, "rule network mean metric {mean}");
    }
}
