//! Conway's Game of Life on a torus, plus dataset construction.
//!
//! Everything the experiments consume comes from here: the B3/S23 step
//! rule with wrap-around neighbors, seeded random state generation, and
//! `(first state, k-th state)` training pairs with the full ground-truth
//! sequence kept alongside for evaluation.

use crate::error::{Error, Result};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::io::{Read, Write};
use std::path::Path;

/// A binary Game of Life state. `cells` is row-major, each cell 0 or 1.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Grid {
    width: usize,
    height: usize,
    cells: Vec<u8>,
}

impl Grid {
    pub fn new(width: usize, height: usize, cells: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid("grid dimensions must be positive"));
        }
        if cells.len() != width * height {
            return Err(Error::shape(
                format!("{} cells", width * height),
                format!("{}", cells.len()),
            ));
        }
        if cells.iter().any(|&c| c > 1) {
            return Err(Error::invalid("grid cells must be 0 or 1"));
        }
        Ok(Grid {
            width,
            height,
            cells,
        })
    }

    pub fn dead(width: usize, height: usize) -> Self {
        Grid {
            width,
            height,
            cells: vec![0; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn cells(&self) -> &[u8] {
        &self.cells
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.cells[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        assert!(v <= 1, "cell value must be 0 or 1");
        self.cells[y * self.width + x] = v;
    }

    pub fn live_count(&self) -> usize {
        self.cells.iter().map(|&c| c as usize).sum()
    }

    /// Cyclic translation by (dx, dy); used by the equivariance tests.
    pub fn shift(&self, dx: isize, dy: isize) -> Grid {
        let (w, h) = (self.width as isize, self.height as isize);
        let mut out = Grid::dead(self.width, self.height);
        for y in 0..self.height {
            for x in 0..self.width {
                let nx = (x as isize + dx).rem_euclid(w) as usize;
                let ny = (y as isize + dy).rem_euclid(h) as usize;
                out.cells[ny * self.width + nx] = self.cells[y * self.width + x];
            }
        }
        out
    }

    /// Writes the grid as a binary PGM (P5) image, 0 -> black, 1 -> white.
    pub fn write_pgm(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        write_pgm_bytes(&mut f, self.width, self.height, &self.cells)?;
        Ok(())
    }
}

pub(crate) fn write_pgm_bytes<W: Write>(
    w: &mut W,
    width: usize,
    height: usize,
    cells: &[u8],
) -> std::io::Result<()> {
    write!(w, "P5\n{} {}\n255\n", width, height)?;
    let bytes: Vec<u8> = cells.iter().map(|&c| if c > 0 { 255 } else { 0 }).collect();
    w.write_all(&bytes)
}

/// One toroidal B3/S23 step. The input is untouched.
pub fn step(g: &Grid) -> Grid {
    let (w, h) = (g.width, g.height);
    let mut out = Grid::dead(w, h);
    for y in 0..h {
        let up = if y == 0 { h - 1 } else { y - 1 };
        let down = if y == h - 1 { 0 } else { y + 1 };
        for x in 0..w {
            let left = if x == 0 { w - 1 } else { x - 1 };
            let right = if x == w - 1 { 0 } else { x + 1 };
            let n = g.get(left, up)
                + g.get(x, up)
                + g.get(right, up)
                + g.get(left, y)
                + g.get(right, y)
                + g.get(left, down)
                + g.get(x, down)
                + g.get(right, down);
            let alive = g.get(x, y) == 1;
            out.cells[y * w + x] = u8::from(n == 3 || (alive && n == 2));
        }
    }
    out
}

/// An ordered run of states where consecutive pairs are related by [`step`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sequence {
    pub states: Vec<Grid>,
}

impl Sequence {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

/// Evolves `g` for `timesteps` steps, returning all `timesteps + 1` states.
pub fn evolve(g: &Grid, timesteps: usize) -> Result<Sequence> {
    if timesteps == 0 {
        return Err(Error::invalid("evolve requires timesteps >= 1"));
    }
    let mut states = Vec::with_capacity(timesteps + 1);
    states.push(g.clone());
    for _ in 0..timesteps {
        let next = step(states.last().unwrap());
        states.push(next);
    }
    Ok(Sequence { states })
}

/// Controls random initial-state generation.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GenConfig {
    pub width: usize,
    pub height: usize,
    /// Probability each cell starts alive.
    pub density: f64,
    /// Probability a sample is pre-evolved to produce structured patterns.
    pub warmup_prob: f64,
    pub warmup_steps: usize,
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            width: 16,
            height: 16,
            density: 0.38,
            warmup_prob: 0.5,
            warmup_steps: 2,
            seed: 0,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::invalid("grid dimensions must be positive"));
        }
        if !(0.0..=1.0).contains(&self.density) {
            return Err(Error::invalid("density must be in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.warmup_prob) {
            return Err(Error::invalid("warmup_prob must be in [0, 1]"));
        }
        Ok(())
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

/// Draws a random grid from `cfg` using the caller's stream.
pub fn random_grid<R: Rng>(cfg: &GenConfig, rng: &mut R) -> Grid {
    let mut g = Grid::dead(cfg.width, cfg.height);
    for c in g.cells.iter_mut() {
        *c = u8::from(rng.gen_bool(cfg.density));
    }
    if cfg.warmup_steps > 0 && cfg.warmup_prob > 0.0 && rng.gen_bool(cfg.warmup_prob) {
        g = evolve(&g, cfg.warmup_steps)
            .expect("warmup_steps > 0")
            .states
            .pop()
            .unwrap();
    }
    g
}

/// One training/evaluation sample: the first state, the target state, and
/// the full ground-truth trajectory connecting them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Example {
    pub first: Grid,
    pub target: Grid,
    pub truth: Sequence,
}

/// Builds `count` examples, each evolved `gol_timesteps` steps.
/// Deterministic in `cfg.seed`.
pub fn make_dataset(cfg: &GenConfig, count: usize, gol_timesteps: usize) -> Result<Vec<Example>> {
    if count == 0 {
        return Err(Error::invalid("make_dataset requires count >= 1"));
    }
    if gol_timesteps == 0 {
        return Err(Error::invalid("make_dataset requires gol_timesteps >= 1"));
    }
    cfg.validate()?;
    let mut rng = cfg.rng();
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        out.push(make_example(cfg, gol_timesteps, &mut rng)?);
    }
    Ok(out)
}

pub fn make_example<R: Rng>(cfg: &GenConfig, gol_timesteps: usize, rng: &mut R) -> Result<Example> {
    let g = random_grid(cfg, rng);
    let truth = evolve(&g, gol_timesteps)?;
    Ok(Example {
        first: truth.states.first().unwrap().clone(),
        target: truth.states.last().unwrap().clone(),
        truth,
    })
}

// ---------------------------------------------------------------------------
// Dataset file format
//
// 16-byte header: magic "GOLD", format version u32, width u16, height u16,
// count u32 (all little-endian), then `count` records of grids bit-packed
// row-major, most-significant-bit first. Each record holds the full truth
// sequence, so the number of grids per record is (filesize - 16) /
// (count * packed grid size).
// ---------------------------------------------------------------------------

const DATASET_MAGIC: &[u8; 4] = b"GOLD";
const DATASET_VERSION: u32 = 1;

fn packed_len(width: usize, height: usize) -> usize {
    (width * height + 7) / 8
}

pub(crate) fn pack_bits(cells: &[u8]) -> Vec<u8> {
    let mut out = vec![0u8; (cells.len() + 7) / 8];
    for (i, &c) in cells.iter().enumerate() {
        if c > 0 {
            out[i / 8] |= 0x80 >> (i % 8);
        }
    }
    out
}

pub(crate) fn unpack_bits(bytes: &[u8], n: usize) -> Vec<u8> {
    (0..n).map(|i| (bytes[i / 8] >> (7 - i % 8)) & 1).collect()
}

pub fn write_dataset(path: &Path, examples: &[Example]) -> Result<()> {
    if examples.is_empty() {
        return Err(Error::invalid("cannot write an empty dataset"));
    }
    let w = examples[0].first.width();
    let h = examples[0].first.height();
    let seq_len = examples[0].truth.len();
    for ex in examples {
        if ex.first.width() != w || ex.first.height() != h || ex.truth.len() != seq_len {
            return Err(Error::invalid("dataset examples must share shape and length"));
        }
    }
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    f.write_all(DATASET_MAGIC)?;
    f.write_all(&DATASET_VERSION.to_le_bytes())?;
    f.write_all(&(w as u16).to_le_bytes())?;
    f.write_all(&(h as u16).to_le_bytes())?;
    f.write_all(&(examples.len() as u32).to_le_bytes())?;
    for ex in examples {
        for g in &ex.truth.states {
            f.write_all(&pack_bits(g.cells()))?;
        }
    }
    f.flush()?;
    Ok(())
}

pub fn read_dataset(path: &Path) -> Result<Vec<Example>> {
    let bytes = {
        let mut buf = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut buf)?;
        buf
    };
    if bytes.len() < 16 || &bytes[0..4] != DATASET_MAGIC {
        return Err(Error::Format("not a GOLD dataset file".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != DATASET_VERSION {
        return Err(Error::Format(format!("unsupported dataset version {version}")));
    }
    let w = u16::from_le_bytes(bytes[8..10].try_into().unwrap()) as usize;
    let h = u16::from_le_bytes(bytes[10..12].try_into().unwrap()) as usize;
    let count = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    if w == 0 || h == 0 || count == 0 {
        return Err(Error::Format("degenerate dataset header".into()));
    }
    let grid_bytes = packed_len(w, h);
    let body = bytes.len() - 16;
    if body % (count * grid_bytes) != 0 {
        return Err(Error::Format("dataset body length inconsistent with header".into()));
    }
    let seq_len = body / (count * grid_bytes);
    if seq_len < 2 {
        return Err(Error::Format("dataset records must hold at least 2 states".into()));
    }
    let mut out = Vec::with_capacity(count);
    let mut off = 16;
    for _ in 0..count {
        let mut states = Vec::with_capacity(seq_len);
        for _ in 0..seq_len {
            let cells = unpack_bits(&bytes[off..off + grid_bytes], w * h);
            states.push(Grid::new(w, h, cells)?);
            off += grid_bytes;
        }
        let truth = Sequence { states };
        out.push(Example {
            first: truth.states.first().unwrap().clone(),
            target: truth.states.last().unwrap().clone(),
            truth,
        });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Well-known test patterns
// ---------------------------------------------------------------------------

/// 2x2 still-life block with top-left corner at (x, y).
pub fn block(width: usize, height: usize, x: usize, y: usize) -> Grid {
    let mut g = Grid::dead(width, height);
    for (dx, dy) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
        g.set((x + dx) % width, (y + dy) % height, 1);
    }
    g
}

/// Horizontal 3-cell blinker centered at (cx, cy).
pub fn blinker_h(width: usize, height: usize, cx: usize, cy: usize) -> Grid {
    let mut g = Grid::dead(width, height);
    for dx in [-1isize, 0, 1] {
        let x = (cx as isize + dx).rem_euclid(width as isize) as usize;
        g.set(x, cy, 1);
    }
    g
}

/// Vertical 3-cell blinker centered at (cx, cy).
pub fn blinker_v(width: usize, height: usize, cx: usize, cy: usize) -> Grid {
    let mut g = Grid::dead(width, height);
    for dy in [-1isize, 0, 1] {
        let y = (cy as isize + dy).rem_euclid(height as isize) as usize;
        g.set(cx, y, 1);
    }
    g
}
