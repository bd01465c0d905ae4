//! Prints, for a few generator settings, the live density and the
//! fraction of cells a single step changes — a feel for how "settled"
//! the sampled boards are.

use lifeviz::life::{self, GenConfig};
use lifeviz::metric::match_fraction;

fn main() -> lifeviz::Result<()> {
    for (wp, ws, d) in [
        (0.0, 0, 0.38),
        (0.5, 2, 0.38),
        (1.0, 2, 0.38),
        (1.0, 4, 0.38),
        (1.0, 8, 0.38),
        (1.0, 16, 0.38),
        (1.0, 8, 0.6),
    ] {
        let gen = GenConfig {
            warmup_prob: wp,
            warmup_steps: ws,
            density: d,
            seed: 7,
            ..GenConfig::default()
        };
        let examples = life::make_dataset(&gen, 200, 3)?;
        let mut dens = 0.0;
        let mut stay = [0.0f64; 3];
        for e in &examples {
            dens += e.first.live_count() as f64 / 256.0;
            for i in 0..3 {
                stay[i] += match_fraction(&e.truth.states[i], &e.truth.states[i + 1])?;
            }
        }
        let n = examples.len() as f64;
        println!(
            "warmup_prob {wp:.1} warmup_steps {ws:2} density {d:.2}: live {:.3}, \
             step-similarity s1-s2 {:.3}, s2-s3 {:.3}, s3-s4 {:.3}",
            dens / n,
            stay[0] / n,
            stay[1] / n,
            stay[2] / n
        );
    }
    Ok(())
}
