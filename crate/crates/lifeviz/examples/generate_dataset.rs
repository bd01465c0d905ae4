//! Generates a seeded dataset of Game of Life sequences, writes it to the
//! packed binary format, reloads it, and prints a few states.
//!
//!     cargo run --example generate_dataset -- [count]

use lifeviz::life::{self, GenConfig};

fn render(g: &lifeviz::life::Grid) -> String {
    let mut s = String::new();
    for y in 0..g.height() {
        for x in 0..g.width() {
            s.push(if g.get(x, y) == 1 { '#' } else { '.' });
        }
        s.push('\n');
    }
    s
}

fn main() -> lifeviz::Result<()> {
    let count: usize = std::env::args()
        .nth(1)
        .map_or(64, |s| s.parse().expect("count"));
    let cfg = GenConfig { seed: 7, ..GenConfig::default() };
    let examples = life::make_dataset(&cfg, count, 3)?;

    let dir = std::env::temp_dir().join("lifeviz_dataset_demo");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("dataset.bin");
    life::write_dataset(&path, &examples)?;
    let reloaded = life::read_dataset(&path)?;
    assert_eq!(examples.len(), reloaded.len());
    assert_eq!(examples[0].truth.states, reloaded[0].truth.states);
    println!(
        "wrote and reloaded {} examples ({} bytes) at {}",
        reloaded.len(),
        std::fs::metadata(&path)?.len(),
        path.display()
    );

    let ex = &examples[0];
    println!("\nfirst state:\n{}", render(&ex.first));
    for (i, s) in ex.truth.states[1..].iter().enumerate() {
        println!("after {} step(s):\n{}", i + 1, render(s));
    }
    Ok(())
}
