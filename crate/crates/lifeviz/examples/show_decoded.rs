//! Prints ground-truth states and decoded hidden states side by side as
//! ASCII boards, plus raw decoder-output statistics — a quick look at what
//! the decoder actually draws for each timestep.
//!
//!     cargo run --release --example show_decoded -- ckpt.llns \
//!         [gol_timesteps] [examples] [warmup_prob] [density] [warmup_steps]

use lifeviz::harness::checkpoint::load_checkpoint;
use lifeviz::life::{GenConfig, Grid};
use lifeviz::train::{grids_to_tensor, threshold};
use std::path::Path;

fn render(rows: &[(&str, &Grid)]) {
    let h = rows[0].1.height();
    for (label, _) in rows {
        print!("{label:<18}");
    }
    println!();
    for y in 0..h {
        for (_, g) in rows {
            let line: String = (0..g.width())
                .map(|x| if g.get(y, x) != 0 { '#' } else { '.' })
                .collect();
            print!("{line:<18}");
        }
        println!();
    }
}

fn main() -> lifeviz::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let ckpt = args.get(1).expect("checkpoint path");
    let g: usize = args.get(2).map_or(2, |s| s.parse().expect("gol_timesteps"));
    let n: usize = args.get(3).map_or(2, |s| s.parse().expect("examples"));
    let warmup_prob: f64 = args.get(4).map_or(0.5, |s| s.parse().expect("warmup_prob"));
    let density: f64 = args.get(5).map_or(0.38, |s| s.parse().expect("density"));
    let warmup_steps: usize = args.get(6).map_or(2, |s| s.parse().expect("warmup_steps"));

    let params = load_checkpoint::<f32>(Path::new(ckpt))?;
    let gen = GenConfig { warmup_prob, density, warmup_steps, seed: 314, ..GenConfig::default() };
    let set = lifeviz::life::make_dataset(&gen, n, g)?;
    for e in &set {
        let x = grids_to_tensor::<f32>(std::slice::from_ref(&e.first))?;
        let trace = params.forward_inference(&x)?;
        let mut rows: Vec<(String, Grid)> = Vec::new();
        for (j, s) in e.truth.states.iter().enumerate() {
            rows.push((format!("s{}", j + 1), s.clone()));
        }
        for (i, dec) in trace.decoded.iter().enumerate() {
            let vals = dec.to_vec();
            let (mut lo, mut hi, mut sum) = (f32::MAX, f32::MIN, 0.0f32);
            for v in &vals {
                lo = lo.min(*v);
                hi = hi.max(*v);
                sum += *v;
            }
            println!(
                "decoded h{}: min {lo:.3} max {hi:.3} mean {:.3}",
                i + 1,
                sum / vals.len() as f32
            );
            rows.push((format!("dec(h{})", i + 1), threshold(dec, 0.5)?.remove(0)));
        }
        let pred = threshold(&trace.final_pred, 0.5)?.remove(0);
        rows.push(("final".to_string(), pred));
        let borrowed: Vec<(&str, &Grid)> =
            rows.iter().map(|(l, g)| (l.as_str(), g)).collect();
        render(&borrowed);
        println!();
    }
    Ok(())
}
