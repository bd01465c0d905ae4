//! Walks through the four worked scoring scenarios of the
//! interpretability metric (values 0.5, 0.75, 1.0, and 1.5).

use lifeviz::life::{Grid, Sequence};
use lifeviz::metric::{metric, MetricInput};

fn bar_rows(g: &mut Grid) {
    for x in 0..8 {
        g.set(x, 0, 1);
        g.set(x, 1, 1);
    }
}
fn bar_cols(g: &mut Grid) {
    for y in 0..8 {
        g.set(0, y, 1);
        g.set(1, y, 1);
    }
}
fn cross(g: &mut Grid) {
    for i in 0..8 {
        g.set(i, i, 1);
        g.set(7 - i, i, 1);
    }
}
fn band(g: &mut Grid) {
    for y in 3..5 {
        for x in 0..8 {
            g.set(x, y, 1);
        }
    }
}

fn make(f: fn(&mut Grid)) -> Grid {
    let mut g = Grid::dead(8, 8);
    f(&mut g);
    g
}

fn show(name: &str, hidden: Vec<Grid>, truth: Vec<Grid>) {
    let report = metric(&MetricInput {
        hidden_decoded: hidden,
        truth: Sequence { states: truth },
    })
    .unwrap();
    println!("{name}: value {}", report.value);
    for p in &report.pairs {
        println!("  pair (h_{}, s_{}) -> {}", p.i, p.j, p.score);
    }
}

fn main() {
    let (s1, s2, s3, s4) = (make(bar_rows), make(bar_cols), make(cross), make(band));
    let noise = {
        let mut g = Grid::dead(8, 8);
        for y in 0..8 {
            for x in 0..8 {
                if (x + y) % 2 == 0 {
                    g.set(x, y, 1);
                }
            }
        }
        g
    };

    // One of two hidden states matches an interior truth state.
    show(
        "half",
        vec![noise, s3.clone()],
        vec![s1.clone(), s2.clone(), s3.clone(), s4.clone()],
    );
    // Both hidden states match the same interior truth state.
    show(
        "three quarters",
        vec![s2.clone(), s2.clone()],
        vec![s1.clone(), s2.clone(), s3.clone(), s4],
    );
    // More hidden states than interior truth states: denominator is 1.
    show(
        "one",
        vec![s2.clone(), s3.clone()],
        vec![s1.clone(), s2.clone(), s3.clone()],
    );
    // Both hidden states match the single interior state: value above 1.
    show(
        "three halves",
        vec![s2.clone(), s2.clone()],
        vec![s1, s2, s3],
    );
}
