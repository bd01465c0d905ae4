//! The five harness commands. Each takes a resolved configuration and an
//! output directory and writes deterministic CSV/PGM/checkpoint artifacts.

use crate::error::{Error, Result};
use crate::harness::checkpoint::{load_checkpoint, save_checkpoint};
use crate::harness::config::ExperimentConfig;
use crate::harness::fmt_sig;
use crate::life::{self, GenConfig};
use crate::model::{init_params, NetworkParams};
use crate::tensor::Scalar;
use crate::train::{self, DataSource, RunRecord};
use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Seed offset for the held-out accuracy evaluation set.
const EVAL_SEED_SALT: u64 = 0x9E3779B97F4A7C15;
/// Seed offset for the metric evaluation sequences. Base and adversarial
/// metrics reuse the same offset and hence the same sequences.
const METRIC_SEED_SALT: u64 = 0xC2B2AE3D27D4EB4F;

/// What one full experiment run produced.
#[derive(Clone, Debug)]
pub struct RunSummary {
    pub seed: u64,
    pub record: RunRecord,
    pub metric_base: f64,
    pub metric_adv: Option<f64>,
    pub adv_record: Option<RunRecord>,
}

impl RunSummary {
    /// Headline value: max of base and adversarial when both exist.
    pub fn metric_max(&self) -> f64 {
        match self.metric_adv {
            Some(a) => crate::metric::max_of_variants(self.metric_base, a),
            None => self.metric_base,
        }
    }
}

// ---------------------------------------------------------------------------
// generate
// ---------------------------------------------------------------------------

pub fn cmd_generate(cfg: &ExperimentConfig, out: &Path) -> Result<PathBuf> {
    cfg.validate()?;
    if cfg.dataset_count == 0 {
        return Err(Error::invalid("dataset_count must be positive"));
    }
    std::fs::create_dir_all(out)?;
    let examples = life::make_dataset(&cfg.gen, cfg.dataset_count, cfg.gol_timesteps)?;
    let path = out.join("dataset.bin");
    life::write_dataset(&path, &examples)?;
    let mut summary = String::new();
    writeln!(summary, "count,{}", cfg.dataset_count).unwrap();
    writeln!(summary, "width,{}", cfg.gen.width).unwrap();
    writeln!(summary, "height,{}", cfg.gen.height).unwrap();
    writeln!(summary, "density,{}", fmt_sig(cfg.gen.density)).unwrap();
    writeln!(summary, "gol_timesteps,{}", cfg.gol_timesteps).unwrap();
    writeln!(summary, "seed,{}", cfg.gen.seed).unwrap();
    std::fs::write(out.join("dataset_summary.csv"), summary)?;
    Ok(path)
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

/// Runs one experiment end to end in memory: main training, base metric,
/// and (when configured) the adversarial phase plus its metric.
/// `params` comes back in its final state.
pub fn run_experiment<S: Scalar>(
    cfg: &ExperimentConfig,
    params: &mut NetworkParams<S>,
) -> Result<RunSummary> {
    cfg.validate()?;
    let seed = cfg.train.seed;
    let eval_gen = GenConfig {
        seed: seed.wrapping_add(EVAL_SEED_SALT),
        ..cfg.gen.clone()
    };
    let eval_set = life::make_dataset(&eval_gen, cfg.train.eval_set_size, cfg.gol_timesteps)?;
    let mut data = DataSource::stream(cfg.gen.clone(), cfg.gol_timesteps);
    let record = train::train_main(params, &cfg.train, &mut data, &eval_set)?;
    let metric_seed = seed.wrapping_add(METRIC_SEED_SALT);
    let (metric_base, _) = train::metric_eval(
        params,
        &cfg.gen,
        cfg.gol_timesteps,
        cfg.metric_eval_sequences,
        metric_seed,
    )?;
    let mut summary = RunSummary {
        seed,
        record,
        metric_base,
        metric_adv: None,
        adv_record: None,
    };
    if let Some(adv) = &cfg.adv {
        let adv_record =
            train::train_adversarial(params, &cfg.train, adv, &mut data, &eval_set, &summary.record)?;
        let (metric_adv, _) = train::metric_eval(
            params,
            &cfg.gen,
            cfg.gol_timesteps,
            cfg.metric_eval_sequences,
            metric_seed,
        )?;
        summary.metric_adv = Some(metric_adv);
        summary.adv_record = Some(adv_record);
    }
    Ok(summary)
}

/// Trains per the config and writes the run directory: loss log, emergence
/// log, summary, and checkpoints (a pre-adversarial one when the
/// adversarial phase runs).
pub fn cmd_train(cfg: &ExperimentConfig, out: &Path) -> Result<RunSummary> {
    cfg.validate()?;
    std::fs::create_dir_all(out)?;
    cfg.save(&out.join("config.toml"))?;
    let mut params = init_params::<f32>(&cfg.model, cfg.train.seed)?;

    // Inline run_experiment so the pre-adversarial checkpoint can be
    // captured between the phases.
    let seed = cfg.train.seed;
    let eval_gen = GenConfig {
        seed: seed.wrapping_add(EVAL_SEED_SALT),
        ..cfg.gen.clone()
    };
    let eval_set = life::make_dataset(&eval_gen, cfg.train.eval_set_size, cfg.gol_timesteps)?;
    let mut data = DataSource::stream(cfg.gen.clone(), cfg.gol_timesteps);
    let mut record = train::train_main(&params, &cfg.train, &mut data, &eval_set)?;
    let metric_seed = seed.wrapping_add(METRIC_SEED_SALT);
    let (metric_base, _) = train::metric_eval(
        &params,
        &cfg.gen,
        cfg.gol_timesteps,
        cfg.metric_eval_sequences,
        metric_seed,
    )?;
    let mut metric_adv = None;
    let mut adv_record = None;
    if let Some(adv) = &cfg.adv {
        save_checkpoint(&out.join("checkpoint_base.llns"), &params)?;
        let r = train::train_adversarial(&mut params, &cfg.train, adv, &mut data, &eval_set, &record)?;
        let (m, _) = train::metric_eval(
            &params,
            &cfg.gen,
            cfg.gol_timesteps,
            cfg.metric_eval_sequences,
            metric_seed,
        )?;
        metric_adv = Some(m);
        adv_record = Some(r);
    }
    let ckpt = out.join("checkpoint.llns");
    save_checkpoint(&ckpt, &params)?;
    record.checkpoint = Some(PathBuf::from("checkpoint.llns"));

    let summary = RunSummary {
        seed,
        record,
        metric_base,
        metric_adv,
        adv_record,
    };
    write_train_log(&out.join("train_log.csv"), &summary.record)?;
    write_eval_log(&out.join("eval_log.csv"), &summary.record)?;
    write_emergence_log(&out.join("emergence.csv"), &summary.record)?;
    write_run_summary(&out.join("summary.csv"), cfg, &summary)?;
    Ok(summary)
}

fn write_train_log(path: &Path, record: &RunRecord) -> Result<()> {
    let mut s = String::from("step,main_loss,autoencoder_loss\n");
    for e in &record.loss_history {
        let ae = e.autoencoder_loss.map_or(String::new(), fmt_sig);
        writeln!(s, "{},{},{}", e.step, fmt_sig(e.main_loss), ae).unwrap();
    }
    std::fs::write(path, s)?;
    Ok(())
}

fn write_eval_log(path: &Path, record: &RunRecord) -> Result<()> {
    let states = record
        .eval_history
        .first()
        .map_or(0, |e| e.intermediate.len());
    let mut s = String::from("step,final_accuracy");
    for i in 0..states {
        write!(s, ",h_{}_accuracy", i + 1).unwrap();
    }
    s.push('\n');
    for e in &record.eval_history {
        write!(s, "{},{}", e.step, fmt_sig(e.final_accuracy)).unwrap();
        for v in &e.intermediate {
            write!(s, ",{}", fmt_sig(*v)).unwrap();
        }
        s.push('\n');
    }
    std::fs::write(path, s)?;
    Ok(())
}

fn write_emergence_log(path: &Path, record: &RunRecord) -> Result<()> {
    let mut s = String::from("state,emergence_step\n");
    for (i, step) in record.emergence_steps.iter().enumerate() {
        let v = step.map_or(String::new(), |x| x.to_string());
        writeln!(s, "h_{},{}", i + 1, v).unwrap();
    }
    let v = record.final_emergence_step.map_or(String::new(), |x| x.to_string());
    writeln!(s, "final,{v}").unwrap();
    std::fs::write(path, s)?;
    Ok(())
}

fn write_run_summary(path: &Path, cfg: &ExperimentConfig, s: &RunSummary) -> Result<()> {
    let mut out = String::from("key,value\n");
    let mut kv = |k: &str, v: String| writeln!(out, "{k},{v}").unwrap();
    kv("seed", s.seed.to_string());
    kv("gol_timesteps", cfg.gol_timesteps.to_string());
    kv("model_timesteps", cfg.model.model_timesteps.to_string());
    kv("use_autoencoder", cfg.train.use_autoencoder.to_string());
    kv("use_rnn", cfg.model.weight_sharing.to_string());
    kv("steps_run", s.record.steps_run.to_string());
    kv("final_accuracy", fmt_sig(s.record.final_accuracy));
    kv("gate_passed", s.record.gate_passed.to_string());
    kv("metric_base", fmt_sig(s.metric_base));
    kv(
        "metric_adv",
        s.metric_adv.map_or(String::new(), fmt_sig),
    );
    kv("metric_max", fmt_sig(s.metric_max()));
    kv(
        "checkpoint",
        s.record
            .checkpoint
            .as_ref()
            .map_or(String::new(), |p| p.display().to_string()),
    );
    std::fs::write(path, out)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

/// Number of sequences rendered as PGM strips.
const EVAL_IMAGE_COUNT: usize = 8;

pub fn cmd_eval(checkpoint: &Path, cfg: &ExperimentConfig, out: &Path) -> Result<f64> {
    cfg.validate()?;
    let params = load_checkpoint::<f32>(checkpoint)?;
    if params.cfg.grid_width != cfg.gen.width || params.cfg.grid_height != cfg.gen.height {
        return Err(Error::invalid(format!(
            "checkpoint grid {}x{} does not match config grid {}x{}",
            params.cfg.grid_width, params.cfg.grid_height, cfg.gen.width, cfg.gen.height
        )));
    }
    std::fs::create_dir_all(out)?;
    let metric_seed = cfg.train.seed.wrapping_add(METRIC_SEED_SALT);
    let (mean, reports) = train::metric_eval(
        &params,
        &cfg.gen,
        cfg.gol_timesteps,
        cfg.metric_eval_sequences,
        metric_seed,
    )?;

    let mut pairs = String::from("run_id,sequence_id,i,j,score,value\n");
    let run_id = cfg.train.seed;
    for (sid, r) in reports.iter().enumerate() {
        for p in &r.pairs {
            writeln!(
                pairs,
                "{run_id},{sid},{},{},{},{}",
                p.i,
                p.j,
                fmt_sig(p.score),
                fmt_sig(r.value)
            )
            .unwrap();
        }
    }
    std::fs::write(out.join("metric_pairs.csv"), pairs)?;

    let mut summary = String::from("key,value\n");
    writeln!(summary, "sequences,{}", cfg.metric_eval_sequences).unwrap();
    writeln!(summary, "mean_metric,{}", fmt_sig(mean)).unwrap();
    std::fs::write(out.join("eval_summary.csv"), summary)?;

    write_eval_strips(&params, cfg, out, metric_seed)?;
    Ok(mean)
}

/// For the first few sequences, writes one PGM strip: input, decoded
/// hidden states (probabilities), interior truth states, final truth, and
/// the final prediction.
fn write_eval_strips(
    params: &NetworkParams<f32>,
    cfg: &ExperimentConfig,
    out: &Path,
    seed: u64,
) -> Result<()> {
    let gen = GenConfig { seed, ..cfg.gen.clone() };
    let mut rng = gen.rng();
    let count = EVAL_IMAGE_COUNT.min(cfg.metric_eval_sequences);
    let (h, w) = (cfg.gen.height, cfg.gen.width);
    for sid in 0..count {
        let ex = life::make_example(&gen, cfg.gol_timesteps, &mut rng)?;
        let x = train::grids_to_tensor::<f32>(std::slice::from_ref(&ex.first))?;
        let trace = params.forward_inference(&x)?;
        let mut panels: Vec<Vec<u8>> = Vec::new();
        let grid_panel = |g: &crate::life::Grid| -> Vec<u8> {
            g.cells().iter().map(|&c| if c == 1 { 255 } else { 0 }).collect()
        };
        let prob_panel = |t: &crate::tensor::Tensor<f32>| -> Vec<u8> {
            t.data().iter().map(|&v| (v.clamp(0.0, 1.0) * 255.0) as u8).collect()
        };
        panels.push(grid_panel(&ex.first));
        for d in &trace.decoded {
            panels.push(prob_panel(d));
        }
        for s in &ex.truth.states[1..ex.truth.len() - 1] {
            panels.push(grid_panel(s));
        }
        panels.push(grid_panel(&ex.target));
        panels.push(prob_panel(&trace.final_pred));
        write_pgm_strip(&out.join(format!("sequence_{sid}.pgm")), w, h, &panels)?;
    }
    Ok(())
}

/// Binary PGM (P5) with the panels side by side, separated by a grey column.
fn write_pgm_strip(path: &Path, w: usize, h: usize, panels: &[Vec<u8>]) -> Result<()> {
    let sep = 1usize;
    let total_w = panels.len() * w + (panels.len() - 1) * sep;
    let mut body = vec![128u8; total_w * h];
    for (pi, panel) in panels.iter().enumerate() {
        let x0 = pi * (w + sep);
        for row in 0..h {
            let src = &panel[row * w..(row + 1) * w];
            let dst = row * total_w + x0;
            body[dst..dst + w].copy_from_slice(src);
        }
    }
    let mut file = format!("P5\n{total_w} {h}\n255\n").into_bytes();
    file.extend_from_slice(&body);
    std::fs::write(path, file)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

/// Parsed `summary.csv` of one run directory.
#[derive(Clone, Debug)]
pub struct RunRow {
    pub dir: String,
    pub fields: HashMap<String, String>,
    pub emergence: Vec<(String, Option<usize>)>,
}

fn read_kv_csv(path: &Path) -> Result<HashMap<String, String>> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    if header != "key,value" {
        return Err(Error::Format(format!(
            "{}: expected header 'key,value', got {header:?}",
            path.display()
        )));
    }
    let mut map = HashMap::new();
    for line in lines {
        if let Some((k, v)) = line.split_once(',') {
            map.insert(k.to_string(), v.to_string());
        }
    }
    Ok(map)
}

fn require<'a>(map: &'a HashMap<String, String>, key: &str, path: &Path) -> Result<&'a str> {
    map.get(key)
        .map(String::as_str)
        .ok_or_else(|| Error::Format(format!("{}: missing column {key:?}", path.display())))
}

/// Reads every run directory under `dir` and renders the report text:
/// per-run gate status and metric, plus an emergence-ordering summary.
pub fn cmd_report(dir: &Path) -> Result<String> {
    let mut runs: Vec<RunRow> = Vec::new();
    let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join("summary.csv").is_file())
        .collect();
    entries.sort();
    for run_dir in entries {
        let summary_path = run_dir.join("summary.csv");
        let fields = read_kv_csv(&summary_path)?;
        for key in [
            "seed",
            "gol_timesteps",
            "model_timesteps",
            "final_accuracy",
            "gate_passed",
            "metric_base",
            "metric_max",
        ] {
            require(&fields, key, &summary_path)?;
        }
        let mut emergence = Vec::new();
        let em_path = run_dir.join("emergence.csv");
        if em_path.is_file() {
            let text = std::fs::read_to_string(&em_path)?;
            let mut lines = text.lines();
            if lines.next() != Some("state,emergence_step") {
                return Err(Error::Format(format!(
                    "{}: missing column \"state,emergence_step\"",
                    em_path.display()
                )));
            }
            for line in lines {
                if let Some((k, v)) = line.split_once(',') {
                    emergence.push((k.to_string(), v.parse().ok()));
                }
            }
        }
        runs.push(RunRow {
            dir: run_dir
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default(),
            fields,
            emergence,
        });
    }
    if runs.is_empty() {
        return Err(Error::invalid(format!(
            "{}: no run directories with summary.csv",
            dir.display()
        )));
    }

    let mut out = String::new();
    writeln!(out, "runs: {}", runs.len()).unwrap();
    let mut gated = 0usize;
    for r in &runs {
        let gate = r.fields["gate_passed"] == "true";
        if gate {
            gated += 1;
        }
        writeln!(
            out,
            "{}: seed {} acc {} gate {} metric_base {} metric_max {}{}",
            r.dir,
            r.fields["seed"],
            r.fields["final_accuracy"],
            if gate { "PASS" } else { "FAIL" },
            r.fields["metric_base"],
            r.fields["metric_max"],
            if gate { "" } else { " (excluded from means)" },
        )
        .unwrap();
    }
    writeln!(out, "gate-passing runs: {gated}/{}", runs.len()).unwrap();

    // Emergence ordering: fraction of gated runs in which each intermediate
    // state crossed the threshold no later than the final state.
    let mut per_state: HashMap<String, (usize, usize)> = HashMap::new();
    for r in &runs {
        if r.fields["gate_passed"] != "true" {
            continue;
        }
        let final_step = r
            .emergence
            .iter()
            .find(|(k, _)| k == "final")
            .and_then(|(_, v)| *v);
        for (state, step) in &r.emergence {
            if state == "final" {
                continue;
            }
            let e = per_state.entry(state.clone()).or_insert((0, 0));
            e.1 += 1;
            let before = match (step, final_step) {
                (Some(s), Some(f)) => *s <= f,
                (Some(_), None) => true,
                _ => false,
            };
            if before {
                e.0 += 1;
            }
        }
    }
    let mut states: Vec<_> = per_state.into_iter().collect();
    states.sort();
    for (state, (before, total)) in states {
        writeln!(
            out,
            "emergence: {state} crossed before final in {before}/{total} gated runs"
        )
        .unwrap();
    }
    Ok(out)
}
