//! The acceptance checklist: one pass/fail line per top-level claim.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to watch the
//! lines appear. Criteria 5-9 train real networks and dominate the
//! runtime; training runs are shared between criteria wherever the
//! protocol allows (same configuration, same seeds).

use lifeviz::gradcheck::{max_relative_error, DEFAULT_H};
use lifeviz::harness::checkpoint::{diff_checkpoints, save_checkpoint};
use lifeviz::harness::commands::{cmd_eval, cmd_generate, cmd_train, run_experiment, RunSummary};
use lifeviz::harness::config::{ExperimentConfig, SweepCell, SweepConfig};
use lifeviz::harness::sweep::cmd_sweep;
use lifeviz::life::{self, Grid, Sequence};
use lifeviz::metric::{metric, MetricInput, MATCH_THRESHOLD};
use lifeviz::model::{construct_gol_step_params, init_params, ModelConfig};
use lifeviz::tensor::optim::Parameter;
use lifeviz::tensor::{ops, Tensor};
use lifeviz::train::{self, AdvConfig};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::path::Path;
use std::time::Instant;

// ---------------------------------------------------------------------------
// Budget knobs for the training-based criteria (single-core runtime).
// ---------------------------------------------------------------------------

/// Hidden channels for all trained cells.
const CHANNELS: usize = 12;
/// Step budget for g=t=2 runs (criterion 5).
const G2_MAX_STEPS: usize = 8000;
/// Step budget for g=3 runs (criteria 6-9).
const G3_MAX_STEPS: usize = 20000;
/// Adversarial fine-tuning steps.
const ADV_STEPS: usize = 1500;
/// Metric sequences per run (the tables use more; the mean is stable well
/// before that).
const METRIC_SEQUENCES: usize = 200;
/// Seeds per cell; criterion 9 needs at least 5 gate-passing runs.
const CELL_B_SEEDS: u64 = 5;
const ARM_SEEDS: u64 = 3;

struct Criterion {
    id: u32,
    name: &'static str,
    pass: bool,
    detail: String,
}

fn record(results: &mut Vec<Criterion>, id: u32, name: &'static str, pass: bool, detail: String) {
    results.push(Criterion {
        id,
        name,
        pass,
        detail,
    });
}

// ---------------------------------------------------------------------------
// Criterion 1: engine vs an independent naive implementation.
// ---------------------------------------------------------------------------

/// Deliberately plain reimplementation of B3/S23 on a torus.
fn naive_step(g: &Grid) -> Grid {
    let (w, h) = (g.width() as isize, g.height() as isize);
    let mut out = Grid::dead(g.width(), g.height());
    for y in 0..h {
        for x in 0..w {
            let mut live = 0;
            for dy in -1..=1_isize {
                for dx in -1..=1_isize {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    let nx = (x + dx).rem_euclid(w) as usize;
                    let ny = (y + dy).rem_euclid(h) as usize;
                    live += g.get(nx, ny) as usize;
                }
            }
            let alive = g.get(x as usize, y as usize) == 1;
            let next = if alive { live == 2 || live == 3 } else { live == 3 };
            out.set(x as usize, y as usize, u8::from(next));
        }
    }
    out
}

fn criterion_1(results: &mut Vec<Criterion>) {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut mismatches = 0;
    for _ in 0..1000 {
        let cells: Vec<u8> = (0..256).map(|_| u8::from(rng.gen_bool(0.5))).collect();
        let g = Grid::new(16, 16, cells).unwrap();
        if life::step(&g).cells() != naive_step(&g).cells() {
            mismatches += 1;
        }
    }
    let dt = t0.elapsed().as_secs_f64();
    record(
        results,
        1,
        "engine equals naive oracle on 1000 grids",
        mismatches == 0 && dt < 1.0,
        format!("{mismatches} mismatches, {dt:.2}s"),
    );
}

// ---------------------------------------------------------------------------
// Criterion 2: finite-difference gradient checks in 64-bit mode.
// ---------------------------------------------------------------------------

const GRAD_TOL: f64 = 1e-6;

fn kink_free(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let mag = rng.gen_range(0.1..1.0);
            if rng.gen_bool(0.5) {
                mag
            } else {
                -mag
            }
        })
        .collect()
}

fn gparam(rng: &mut ChaCha8Rng, name: &str, shape: &[usize]) -> Parameter<f64> {
    let n = shape.iter().product();
    Parameter::new(
        name.to_string(),
        Tensor::param_from_vec(shape, kink_free(rng, n)).unwrap(),
    )
}

fn criterion_2(results: &mut Vec<Criterion>) {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst: (f64, &str) = (0.0, "none");
    let bump = |err: f64, name: &'static str, worst: &mut (f64, &str)| {
        if err > worst.0 {
            *worst = (err, name);
        }
    };

    // Every differentiable op, each through a scalar loss.
    let x = gparam(&mut rng, "x", &[2, 3, 5, 4]);
    let k = gparam(&mut rng, "k", &[2, 3, 3, 3]);
    let b = gparam(&mut rng, "b", &[2]);
    let err = max_relative_error(
        &[x.clone(), k.clone(), b.clone()],
        || {
            let y = ops::conv2d_circular(&x.value, &k.value, &b.value)?;
            ops::mse_loss(&y, &Tensor::zeros(y.shape()))
        },
        DEFAULT_H,
    )
    .unwrap();
    bump(err, "conv2d_circular", &mut worst);

    let a = gparam(&mut rng, "a", &[2, 2, 3, 3]);
    for (name, f) in [
        ("relu", ops::relu as fn(&Tensor<f64>) -> lifeviz::Result<Tensor<f64>>),
        ("sigmoid", ops::sigmoid),
    ] {
        let err = max_relative_error(
            std::slice::from_ref(&a),
            || {
                let y = f(&a.value)?;
                ops::mse_loss(&y, &Tensor::zeros(y.shape()))
            },
            DEFAULT_H,
        )
        .unwrap();
        if name == "relu" {
            bump(err, "relu", &mut worst);
        } else {
            bump(err, "sigmoid", &mut worst);
        }
    }

    let p = gparam(&mut rng, "p", &[1, 1, 4, 4]);
    let q = gparam(&mut rng, "q", &[1, 1, 4, 4]);
    let err = max_relative_error(
        &[p.clone(), q.clone()],
        || ops::mse_loss(&p.value, &q.value),
        DEFAULT_H,
    )
    .unwrap();
    bump(err, "mse_loss", &mut worst);

    let logits = gparam(&mut rng, "logits", &[6]);
    let labels = Tensor::from_vec(&[6], vec![0.3, 0.8, 0.1, 0.9, 0.5, 0.6]).unwrap();
    let err = max_relative_error(
        std::slice::from_ref(&logits),
        || ops::bce_loss(&ops::sigmoid(&logits.value)?, &labels),
        DEFAULT_H,
    )
    .unwrap();
    bump(err, "bce_loss", &mut worst);

    let u = gparam(&mut rng, "u", &[2, 3, 4, 4]);
    let w = gparam(&mut rng, "w", &[1, 3]);
    let wb = gparam(&mut rng, "wb", &[1]);
    let v = gparam(&mut rng, "v", &[2, 3, 4, 4]);
    let err = max_relative_error(
        &[u.clone(), w.clone(), wb.clone(), v.clone()],
        || {
            let sum = ops::add(&u.value, &ops::scale(&v.value, 0.7)?)?;
            let pooled = ops::global_mean_pool(&sum)?;
            let out = ops::dense(&pooled, &w.value, &wb.value)?;
            ops::mean_all(&out)
        },
        DEFAULT_H,
    )
    .unwrap();
    bump(err, "dense/pool/add/scale/mean_all", &mut worst);

    // The full two-timestep network with the combined training loss.
    let cfg = ModelConfig {
        grid_height: 5,
        grid_width: 5,
        channels: 4,
        model_timesteps: 2,
        ..ModelConfig::default()
    };
    let params = init_params::<f64>(&cfg, 9).unwrap();
    let mut drng = ChaCha8Rng::seed_from_u64(10);
    let x = Tensor::from_vec(
        &[2, 1, 5, 5],
        (0..50).map(|_| f64::from(drng.gen_bool(0.4))).collect(),
    )
    .unwrap();
    let y = Tensor::from_vec(
        &[2, 1, 5, 5],
        (0..50).map(|_| f64::from(drng.gen_bool(0.4))).collect(),
    )
    .unwrap();
    let backbone = params.backbone_parameters();
    let err = max_relative_error(
        &backbone,
        || {
            let (pred, recon) = params.forward_train(&x)?;
            let main = ops::mse_loss(&pred, &y)?;
            let ae = ops::mse_loss(&recon, &x)?;
            ops::scale(&ops::add(&main, &ae)?, 0.5)
        },
        DEFAULT_H,
    )
    .unwrap();
    bump(err, "full g=t=2 network", &mut worst);

    let dt = t0.elapsed().as_secs_f64();
    record(
        results,
        2,
        "gradient checks (all ops + full network) < 1e-6",
        worst.0 < GRAD_TOL && dt < 30.0,
        format!("worst {:.2e} ({}), {dt:.1}s", worst.0, worst.1),
    );
}

// ---------------------------------------------------------------------------
// Criterion 3: metric fixtures + brute-force equivalence.
// ---------------------------------------------------------------------------

/// Distinct 8x8 patterns that pairwise disagree on far more than 5% of
/// cells, so cross-matches cannot happen by accident.
fn pattern(kind: usize) -> Grid {
    let mut g = Grid::dead(8, 8);
    match kind {
        0 => {
            for x in 0..8 {
                g.set(x, 0, 1);
                g.set(x, 1, 1);
            }
        }
        1 => {
            for y in 0..8 {
                g.set(0, y, 1);
                g.set(1, y, 1);
            }
        }
        2 => {
            for i in 0..8 {
                g.set(i, i, 1);
                g.set(7 - i, i, 1);
            }
        }
        3 => {
            for y in 3..5 {
                for x in 0..8 {
                    g.set(x, y, 1);
                }
            }
        }
        _ => {
            for y in 0..8 {
                for x in 0..8 {
                    if (x + y) % 2 == 0 {
                        g.set(x, y, 1);
                    }
                }
            }
        }
    }
    g
}

/// Straight-line scorer written independently of the library version:
/// walk (i, j) pairs in order, keep a seen-set of matched truth indices.
fn brute_force_metric(hidden: &[Grid], truth: &[Grid]) -> f64 {
    let mut seen: Vec<usize> = Vec::new();
    let mut total = 0.0;
    for h in hidden {
        for (jz, s) in truth.iter().enumerate().take(truth.len() - 1).skip(1) {
            let equal = h
                .cells()
                .iter()
                .zip(s.cells())
                .filter(|(x, y)| x == y)
                .count();
            let frac = equal as f64 / h.cells().len() as f64;
            if frac < MATCH_THRESHOLD {
                continue;
            }
            if seen.contains(&jz) {
                total += 0.5;
            } else {
                seen.push(jz);
                total += 1.0;
            }
        }
    }
    total / hidden.len().min(truth.len() - 2) as f64
}

fn criterion_3(results: &mut Vec<Criterion>) {
    let mut ok = true;
    let mut detail = String::new();

    // The four worked scenarios with frozen exact values.
    let (s1, s2, s3, s4) = (pattern(0), pattern(1), pattern(2), pattern(3));
    let noise = pattern(4);
    let cases: Vec<(f64, MetricInput)> = vec![
        (
            0.5,
            MetricInput {
                hidden_decoded: vec![noise.clone(), s3.clone()],
                truth: Sequence {
                    states: vec![s1.clone(), s2.clone(), s3.clone(), s4.clone()],
                },
            },
        ),
        (
            0.75,
            MetricInput {
                hidden_decoded: vec![s2.clone(), s2.clone()],
                truth: Sequence {
                    states: vec![s1.clone(), s2.clone(), s3.clone(), s4.clone()],
                },
            },
        ),
        (
            1.0,
            MetricInput {
                hidden_decoded: vec![s2.clone(), s3.clone()],
                truth: Sequence {
                    states: vec![s1.clone(), s2.clone(), s3.clone()],
                },
            },
        ),
        (
            1.5,
            MetricInput {
                hidden_decoded: vec![s2.clone(), s2.clone()],
                truth: Sequence {
                    states: vec![s1.clone(), s2.clone(), s3.clone()],
                },
            },
        ),
    ];
    for (expect, input) in &cases {
        let got = metric(input).unwrap().value;
        if got != *expect {
            ok = false;
            detail.push_str(&format!("fixture {expect} gave {got}; "));
        }
    }

    // Brute-force equivalence on random scenarios. Predicted states are a
    // mix of copies of truth states (matches), near-copies below the 95%
    // threshold, and unrelated grids.
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut diffs = 0;
    for _ in 0..1000 {
        let m = rng.gen_range(3..=6);
        let n = rng.gen_range(1..=4);
        let truth: Vec<Grid> = (0..m)
            .map(|_| {
                let cells = (0..16).map(|_| u8::from(rng.gen_bool(0.5))).collect();
                Grid::new(4, 4, cells).unwrap()
            })
            .collect();
        let hidden: Vec<Grid> = (0..n)
            .map(|_| {
                let pick = rng.gen_range(0..10);
                if pick < 5 {
                    truth[rng.gen_range(0..m)].clone()
                } else if pick < 7 {
                    let mut g = truth[rng.gen_range(0..m)].clone();
                    let (x, y) = (rng.gen_range(0..4), rng.gen_range(0..4));
                    g.set(x, y, 1 - g.get(x, y));
                    g
                } else {
                    let cells = (0..16).map(|_| u8::from(rng.gen_bool(0.5))).collect();
                    Grid::new(4, 4, cells).unwrap()
                }
            })
            .collect();
        let expect = brute_force_metric(&hidden, &truth);
        let input = MetricInput {
            hidden_decoded: hidden,
            truth: Sequence { states: truth },
        };
        if metric(&input).unwrap().value != expect {
            diffs += 1;
        }
    }
    if diffs > 0 {
        ok = false;
        detail.push_str(&format!("{diffs}/1000 brute-force disagreements; "));
    }
    if detail.is_empty() {
        detail = "4 fixtures exact, 1000 random scenarios exact".into();
    }
    record(results, 3, "metric fixtures + brute-force equivalence", ok, detail);
}

// ---------------------------------------------------------------------------
// Criterion 4: the hand-built rule network is exact; file-level metric 1.0.
// ---------------------------------------------------------------------------

fn criterion_4(results: &mut Vec<Criterion>) {
    let cfg = ModelConfig {
        channels: 4,
        model_timesteps: 3,
        ..ModelConfig::default()
    };
    let params = construct_gol_step_params::<f32>(&cfg).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut wrong = 0;
    let batch = 50;
    for _ in 0..(1000 / batch) {
        let grids: Vec<Grid> = (0..batch)
            .map(|_| {
                let cells = (0..256).map(|_| u8::from(rng.gen_bool(0.4))).collect();
                Grid::new(16, 16, cells).unwrap()
            })
            .collect();
        let x = train::grids_to_tensor::<f32>(&grids).unwrap();
        let trace = params.forward_inference(&x).unwrap();
        // decoded[i] should equal the (i+1)-step evolution; final_pred the
        // 3-step evolution.
        for (i, d) in trace
            .decoded
            .iter()
            .chain(std::iter::once(&trace.final_pred))
            .enumerate()
        {
            let got = train::threshold(d, 0.5).unwrap();
            for (b, g0) in grids.iter().enumerate() {
                let want = life::evolve(g0, i + 1).unwrap().states[i + 1].clone();
                if got[b].cells() != want.cells() {
                    wrong += 1;
                }
            }
        }
    }

    // File-level: checkpoint the constructed network and score it.
    let dir = tempfile::tempdir().unwrap();
    let ckpt = dir.path().join("rule.llns");
    save_checkpoint(&ckpt, &params).unwrap();
    let mut ecfg = ExperimentConfig::default();
    ecfg.gol_timesteps = 3;
    ecfg.model = cfg;
    ecfg.metric_eval_sequences = 300;
    let mean = cmd_eval(&ckpt, &ecfg, &dir.path().join("eval")).unwrap();

    record(
        results,
        4,
        "hand-built rule network exact; cmd_eval metric 1.0",
        wrong == 0 && mean == 1.0,
        format!("{wrong} wrong states over 1000 grids x 3 steps, eval metric {mean}"),
    );
}

// ---------------------------------------------------------------------------
// Training cells shared by criteria 5-9.
// ---------------------------------------------------------------------------

fn cell_config(g: usize, t: usize, ae: bool, rnn: bool, adv: bool, seed: u64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.gol_timesteps = g;
    cfg.metric_eval_sequences = METRIC_SEQUENCES;
    cfg.model.channels = CHANNELS;
    cfg.model.model_timesteps = t;
    cfg.model.weight_sharing = rnn;
    cfg.train.use_autoencoder = ae;
    cfg.train.max_steps = if g == 2 { G2_MAX_STEPS } else { G3_MAX_STEPS };
    cfg.train.seed = seed;
    cfg.gen.seed = seed;
    cfg.adv = adv.then(|| AdvConfig {
        adv_steps: ADV_STEPS,
        ..AdvConfig::default()
    });
    cfg
}

fn run_cell(g: usize, t: usize, ae: bool, rnn: bool, adv: bool, seeds: &[u64]) -> Vec<RunSummary> {
    seeds
        .iter()
        .map(|&seed| {
            let cfg = cell_config(g, t, ae, rnn, adv, seed);
            let mut params = init_params::<f32>(&cfg.model, seed).unwrap();
            let t0 = Instant::now();
            let s = run_experiment(&cfg, &mut params).unwrap();
            println!(
                "  [run] g={g} t={t} ae={ae} rnn={rnn} seed={seed}: \
                 steps {}, acc {:.4}, gate {}, metric base {:.3} adv {:?} ({:.0}s)",
                s.record.steps_run,
                s.record.final_accuracy,
                s.record.gate_passed,
                s.metric_base,
                s.metric_adv,
                t0.elapsed().as_secs_f64()
            );
            s
        })
        .collect()
}

fn gated_mean<F: Fn(&RunSummary) -> f64>(runs: &[RunSummary], f: F) -> Option<(f64, usize)> {
    let vals: Vec<f64> = runs
        .iter()
        .filter(|r| r.record.gate_passed)
        .map(|r| f(r))
        .collect();
    if vals.is_empty() {
        None
    } else {
        Some((vals.iter().sum::<f64>() / vals.len() as f64, vals.len()))
    }
}

fn criterion_5(results: &mut Vec<Criterion>, cell_a: &[RunSummary]) {
    let gated: Vec<&RunSummary> = cell_a.iter().filter(|r| r.record.gate_passed).collect();
    let mean = if gated.is_empty() {
        f64::NAN
    } else {
        gated.iter().map(|r| r.metric_max()).sum::<f64>() / gated.len() as f64
    };
    record(
        results,
        5,
        "g=t=2 autoencoder+sharing: >=3 gated runs, mean metric >= 0.90",
        gated.len() >= 3 && mean >= 0.90,
        format!("{} gated runs, mean metric {mean:.3}", gated.len()),
    );
}

fn criterion_6(results: &mut Vec<Criterion>, with_ae: &[RunSummary], without_ae: &[RunSummary]) {
    let a = gated_mean(with_ae, |r| r.metric_max());
    let b = gated_mean(without_ae, |r| r.metric_max());
    match (a, b) {
        (Some((ma, na)), Some((mb, nb))) => record(
            results,
            6,
            "autoencoder ablation: gap > 0.15 at g=t=3",
            na >= 3 && nb >= 3 && ma - mb > 0.15,
            format!("with {ma:.3} (n={na}) vs without {mb:.3} (n={nb}), gap {:.3}", ma - mb),
        ),
        _ => record(
            results,
            6,
            "autoencoder ablation: gap > 0.15 at g=t=3",
            false,
            "an arm has no gate-passing runs".into(),
        ),
    }
}

fn criterion_7(results: &mut Vec<Criterion>, shared: &[RunSummary], untied: &[RunSummary]) {
    let a = gated_mean(shared, |r| r.metric_max());
    let b = gated_mean(untied, |r| r.metric_max());
    match (a, b) {
        (Some((ma, na)), Some((mb, nb))) => record(
            results,
            7,
            "weight-sharing ablation: gap > 0.15 at g=t=3",
            na >= 3 && nb >= 3 && ma - mb > 0.15,
            format!("shared {ma:.3} (n={na}) vs untied {mb:.3} (n={nb}), gap {:.3}", ma - mb),
        ),
        _ => record(
            results,
            7,
            "weight-sharing ablation: gap > 0.15 at g=t=3",
            false,
            "an arm has no gate-passing runs".into(),
        ),
    }
}

fn criterion_8(results: &mut Vec<Criterion>, cell_e: &[RunSummary]) {
    let base = gated_mean(cell_e, |r| r.metric_base);
    let adv = gated_mean(cell_e, |r| r.metric_adv.unwrap_or(f64::NAN));
    match (base, adv) {
        (Some((mb, n)), Some((ma, _))) => record(
            results,
            8,
            "adversarial improvement > 0.10 at g=3 t=2",
            n >= 3 && ma - mb > 0.10,
            format!("base {mb:.3} -> adversarial {ma:.3} over {n} gated runs"),
        ),
        _ => record(
            results,
            8,
            "adversarial improvement > 0.10 at g=3 t=2",
            false,
            "no gate-passing runs".into(),
        ),
    }
}

fn criterion_9(results: &mut Vec<Criterion>, cell_b: &[RunSummary]) {
    let gated: Vec<&RunSummary> = cell_b.iter().filter(|r| r.record.gate_passed).collect();
    let mut ordered = 0;
    for r in &gated {
        let h1 = r.record.emergence_steps.first().copied().flatten();
        let fin = r.record.final_emergence_step;
        if let (Some(h1), Some(fin)) = (h1, fin) {
            if h1 <= fin {
                ordered += 1;
            }
        }
    }
    let frac = if gated.is_empty() {
        0.0
    } else {
        ordered as f64 / gated.len() as f64
    };
    record(
        results,
        9,
        "emergence ordering: first intermediate crosses 98% no later than final in >=80%",
        gated.len() >= 5 && frac >= 0.80,
        format!("{ordered}/{} gated runs ordered ({frac:.0}%)", gated.len()),
    );
}

// ---------------------------------------------------------------------------
// Criteria 10 + 11: frozen backbone via checkpoint diff, and determinism.
// ---------------------------------------------------------------------------

/// Tiny but complete configuration for the file-level criteria.
fn tiny_config(seed: u64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.gol_timesteps = 2;
    cfg.dataset_count = 64;
    cfg.metric_eval_sequences = 20;
    cfg.model.channels = 6;
    cfg.model.model_timesteps = 2;
    cfg.train.max_steps = 120;
    cfg.train.eval_interval = 60;
    cfg.train.eval_set_size = 32;
    cfg.train.seed = seed;
    cfg.gen.seed = seed;
    cfg.adv = Some(AdvConfig {
        adv_steps: 60,
        ..AdvConfig::default()
    });
    cfg
}

fn criterion_10(results: &mut Vec<Criterion>, train_dir: &Path) {
    let base = train_dir.join("checkpoint_base.llns");
    let fin = train_dir.join("checkpoint.llns");
    let diffs = diff_checkpoints(&base, &fin).unwrap();
    let backbone_moved: Vec<&String> = diffs
        .iter()
        .filter(|n| n.starts_with("encoder.") || n.starts_with("block."))
        .collect();
    let decoder_moved = diffs.iter().any(|n| n.starts_with("decoder."));
    record(
        results,
        10,
        "adversarial phase: encoder/RNN bitwise frozen, decoder updated",
        backbone_moved.is_empty() && decoder_moved,
        format!(
            "{} differing tensors, backbone diffs {:?}",
            diffs.len(),
            backbone_moved
        ),
    );
}

fn files_equal(a: &Path, b: &Path, name: &str) -> bool {
    std::fs::read(a.join(name)).unwrap() == std::fs::read(b.join(name)).unwrap()
}

fn criterion_11(results: &mut Vec<Criterion>, t1: &Path, t2: &Path) {
    let mut ok = true;
    let mut detail = Vec::new();

    // generate twice
    let gdir = tempfile::tempdir().unwrap();
    let (ga, gb) = (gdir.path().join("a"), gdir.path().join("b"));
    let cfg = tiny_config(5);
    cmd_generate(&cfg, &ga).unwrap();
    cmd_generate(&cfg, &gb).unwrap();
    for f in ["dataset.bin", "dataset_summary.csv"] {
        if !files_equal(&ga, &gb, f) {
            ok = false;
            detail.push(format!("generate/{f}"));
        }
    }

    // train twice (the two directories passed in)
    for f in [
        "config.toml",
        "train_log.csv",
        "eval_log.csv",
        "emergence.csv",
        "summary.csv",
        "checkpoint_base.llns",
        "checkpoint.llns",
    ] {
        if !files_equal(t1, t2, f) {
            ok = false;
            detail.push(format!("train/{f}"));
        }
    }

    // sweep twice
    let sdir = tempfile::tempdir().unwrap();
    let (sa, sb) = (sdir.path().join("a"), sdir.path().join("b"));
    let mut base = tiny_config(7);
    base.adv = None;
    base.runs_per_cell = 1;
    let sweep = SweepConfig {
        base,
        master_seed: 7,
        cells: vec![SweepCell {
            gol_timesteps: 2,
            model_timesteps: 2,
            use_autoencoder: true,
            use_rnn: true,
        }],
    };
    cmd_sweep(&sweep, &sa, 1).unwrap();
    cmd_sweep(&sweep, &sb, 1).unwrap();
    if !files_equal(&sa, &sb, "table.csv") {
        ok = false;
        detail.push("sweep/table.csv".into());
    }

    record(
        results,
        11,
        "seeded commands reproduce identical outputs",
        ok,
        if detail.is_empty() {
            "generate/train/sweep outputs byte-identical".into()
        } else {
            format!("differing: {}", detail.join(", "))
        },
    );
}

// ---------------------------------------------------------------------------

#[test]
fn acceptance_criteria() {
    let mut results: Vec<Criterion> = Vec::new();

    criterion_1(&mut results);
    criterion_2(&mut results);
    criterion_3(&mut results);
    criterion_4(&mut results);

    // File-level criteria share one pair of tiny training runs.
    let tdir = tempfile::tempdir().unwrap();
    let (t1, t2) = (tdir.path().join("a"), tdir.path().join("b"));
    let tiny = tiny_config(5);
    cmd_train(&tiny, &t1).unwrap();
    cmd_train(&tiny, &t2).unwrap();
    criterion_10(&mut results, &t1);
    criterion_11(&mut results, &t1, &t2);

    // Training cells. Seeds are fixed; cell B is shared by criteria 6, 7
    // and 9.
    println!("training cells (single-core; this is the slow part)...");
    let seeds_a: Vec<u64> = (1..=ARM_SEEDS).collect();
    let seeds_b: Vec<u64> = (1..=CELL_B_SEEDS).collect();
    let cell_a = run_cell(2, 2, true, true, true, &seeds_a); // criterion 5
    let cell_b = run_cell(3, 3, true, true, true, &seeds_b); // criteria 6, 7, 9
    let cell_c = run_cell(3, 3, false, true, true, &seeds_a); // criterion 6
    let cell_d = run_cell(3, 3, true, false, true, &seeds_a); // criterion 7
    let cell_e = run_cell(3, 2, true, true, true, &seeds_a); // criterion 8

    criterion_5(&mut results, &cell_a);
    criterion_6(&mut results, &cell_b, &cell_c);
    criterion_7(&mut results, &cell_b, &cell_d);
    criterion_8(&mut results, &cell_e);
    criterion_9(&mut results, &cell_b);

    results.sort_by_key(|c| c.id);
    let mut failed = Vec::new();
    for c in &results {
        let status = if c.pass { "PASS" } else { "FAIL" };
        println!("criterion {:02} [{status}] {} - {}", c.id, c.name, c.detail);
        if !c.pass {
            failed.push(c.id);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
