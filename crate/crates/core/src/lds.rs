//! Sobol' sequences with optional random linear scrambling.
//!
//! Points are produced in Gray-code order with 32 output bits per coordinate.
//! Direction numbers default to the embedded Joe–Kuo table (1024 dimensions);
//! another table in the usual `d s a m_1 .. m_s` text format can be loaded
//! with [`DirectionNumberTable::from_file`].
//!
//! Scrambling is Matoušek's linear scramble: every coordinate gets a random
//! lower-triangular 32×32 bit matrix with unit diagonal plus a random digital
//! shift. The random bits come from `ChaCha8Rng` seeded with
//! `seed_from_u64(seed)` on stream `replicate`, drawn dimension by dimension:
//! 32 row masks (most significant digit first) followed by one shift word.
//!
//! An unscrambled stream starts at index 1 because the origin is a degenerate
//! input for radial lifts. A scrambled stream starts at index 0, so that every
//! block of `2^m` points starting at the front is a scrambled digital net.

use std::path::Path;
use std::sync::OnceLock;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{config, Error, Result};

const BITS: usize = 32;
const SCALE: f64 = 1.0 / 4_294_967_296.0;

/// Largest number of points a stream will produce.
pub const MAX_POINTS: u64 = 1 << 31;

static EMBEDDED_TEXT: &str = include_str!("../data/new-joe-kuo-1024.txt");

#[derive(Debug, Clone, PartialEq, Eq)]
struct Primitive {
    degree: u32,
    coeffs: u32,
    m: Vec<u32>,
}

/// Primitive polynomials and initial direction integers for dimensions 2 and up.
/// Dimension 1 is always the van der Corput sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectionNumberTable {
    rows: Vec<Primitive>,
}

impl DirectionNumberTable {
    /// The built-in table.
    pub fn embedded() -> &'static DirectionNumberTable {
        static TABLE: OnceLock<DirectionNumberTable> = OnceLock::new();
        TABLE.get_or_init(|| Self::parse(EMBEDDED_TEXT).expect("embedded direction numbers are valid"))
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        Self::parse(&text)
    }

    /// Parses `d s a m_1 .. m_s` lines. A non-numeric first line is treated as a header.
    pub fn parse(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            let nums: std::result::Result<Vec<u64>, _> = fields.iter().map(|f| f.parse::<u64>()).collect();
            let nums = match nums {
                Ok(n) => n,
                Err(_) if rows.is_empty() && lineno == 0 => continue,
                Err(e) => return Err(Error::Parse(format!("line {}: {e}", lineno + 1))),
            };
            if nums.len() < 3 {
                return Err(Error::Parse(format!("line {}: expected `d s a m_1 .. m_s`", lineno + 1)));
            }
            let (d, s, a) = (nums[0], nums[1], nums[2]);
            if d as usize != rows.len() + 2 {
                return Err(Error::Parse(format!(
                    "line {}: dimension {d} out of order, expected {}",
                    lineno + 1,
                    rows.len() + 2
                )));
            }
            if s == 0 || s as usize >= BITS || nums.len() != 3 + s as usize {
                return Err(Error::Parse(format!("line {}: degree {s} does not match the m values", lineno + 1)));
            }
            if a >= 1 << (s - 1) {
                return Err(Error::Parse(format!("line {}: coefficient {a} too large for degree {s}", lineno + 1)));
            }
            let m: Vec<u32> = nums[3..].iter().map(|&v| v as u32).collect();
            for (k, &mk) in m.iter().enumerate() {
                if mk % 2 == 0 || mk as u64 >= 1 << (k + 1) {
                    return Err(Error::Parse(format!(
                        "line {}: m_{} = {mk} must be odd and below 2^{}",
                        lineno + 1,
                        k + 1,
                        k + 1
                    )));
                }
            }
            rows.push(Primitive { degree: s as u32, coeffs: a as u32, m });
        }
        if rows.is_empty() {
            return Err(Error::Parse("direction-number table is empty".into()));
        }
        Ok(Self { rows })
    }

    pub fn max_dimension(&self) -> usize {
        self.rows.len() + 1
    }

    /// Direction integers `v_1 .. v_32` (left aligned) for 0-based dimension `j`.
    pub fn direction_integers(&self, j: usize) -> Result<[u32; BITS]> {
        let mut v = [0u32; BITS];
        if j == 0 {
            for (k, vk) in v.iter_mut().enumerate() {
                *vk = 1 << (BITS - 1 - k);
            }
            return Ok(v);
        }
        let row = self
            .rows
            .get(j - 1)
            .ok_or_else(|| Error::Config(format!("dimension {} exceeds table size {}", j + 1, self.max_dimension())))?;
        let s = row.degree as usize;
        for k in 0..s {
            v[k] = row.m[k] << (BITS - 1 - k);
        }
        for k in s..BITS {
            let mut x = v[k - s] ^ (v[k - s] >> s);
            for i in 1..s {
                if (row.coeffs >> (s - 1 - i)) & 1 == 1 {
                    x ^= v[k - i];
                }
            }
            v[k] = x;
        }
        Ok(v)
    }
}

/// Scrambling state of a stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Scramble {
    Off,
    Linear { seed: u64, replicate: u64 },
}

/// Stateful Sobol' generator in `[0,1)^s`.
#[derive(Debug, Clone)]
pub struct SobolStream {
    dim: usize,
    index: u64,
    v: Vec<[u32; BITS]>,
    shift: Vec<u32>,
    state: Vec<u32>,
    scramble: Scramble,
}

// y = L x for a lower-triangular bit matrix given by its rows, digit 0 = msb
fn apply_rows(rows: &[u32; BITS], x: u32) -> u32 {
    let mut y = 0u32;
    for (i, &r) in rows.iter().enumerate() {
        y |= ((r & x).count_ones() & 1) << (BITS - 1 - i);
    }
    y
}

impl SobolStream {
    /// Unscrambled stream using the embedded table.
    pub fn new(dim: usize) -> Result<Self> {
        Self::with_table(DirectionNumberTable::embedded(), dim, Scramble::Off)
    }

    /// Scrambled stream using the embedded table.
    pub fn scrambled(dim: usize, seed: u64, replicate: u64) -> Result<Self> {
        Self::with_table(DirectionNumberTable::embedded(), dim, Scramble::Linear { seed, replicate })
    }

    pub fn with_table(table: &DirectionNumberTable, dim: usize, scramble: Scramble) -> Result<Self> {
        if dim == 0 {
            return config("Sobol' dimension must be at least 1");
        }
        if dim > table.max_dimension() {
            return config(format!("dimension {dim} exceeds the direction-number table ({})", table.max_dimension()));
        }
        let mut v: Vec<[u32; BITS]> = (0..dim).map(|j| table.direction_integers(j)).collect::<Result<_>>()?;
        let mut shift = vec![0u32; dim];
        if let Scramble::Linear { seed, replicate } = scramble {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(replicate);
            for (vj, sj) in v.iter_mut().zip(shift.iter_mut()) {
                let mut rows = [0u32; BITS];
                for (i, row) in rows.iter_mut().enumerate() {
                    let above = if i == 0 { 0 } else { !0u32 << (BITS - i) };
                    *row = (rng.next_u32() & above) | (1 << (BITS - 1 - i));
                }
                *sj = rng.next_u32();
                for vk in vj.iter_mut() {
                    *vk = apply_rows(&rows, *vk);
                }
            }
        }
        let start = if scramble == Scramble::Off { 1 } else { 0 };
        let mut s = Self { dim, index: 0, v, state: shift.clone(), shift, scramble };
        s.seek(start)?;
        Ok(s)
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    /// Index of the point the next call will return.
    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn scramble(&self) -> Scramble {
        self.scramble
    }

    /// Positions the stream so the next point is the one with the given index.
    pub fn seek(&mut self, index: u64) -> Result<()> {
        if index > MAX_POINTS {
            return Err(Error::Exhausted(format!("index {index} beyond {MAX_POINTS}")));
        }
        let gray = index ^ (index >> 1);
        for j in 0..self.dim {
            let mut x = self.shift[j];
            for k in 0..BITS {
                if (gray >> k) & 1 == 1 {
                    x ^= self.v[j][k];
                }
            }
            self.state[j] = x;
        }
        self.index = index;
        Ok(())
    }

    /// Writes the next point as raw 32-bit digits.
    pub fn next_bits(&mut self, out: &mut [u32]) -> Result<()> {
        if out.len() != self.dim {
            return config(format!("output buffer has {} slots for dimension {}", out.len(), self.dim));
        }
        if self.index >= MAX_POINTS {
            return Err(Error::Exhausted(format!("Sobol' stream reached {MAX_POINTS} points")));
        }
        out.copy_from_slice(&self.state);
        let c = (!self.index).trailing_zeros() as usize;
        if c < BITS {
            for j in 0..self.dim {
                self.state[j] ^= self.v[j][c];
            }
        }
        self.index += 1;
        Ok(())
    }

    /// Writes the next point in `[0,1)^s`.
    pub fn next_into(&mut self, out: &mut [f64]) -> Result<()> {
        if out.len() != self.dim {
            return config(format!("output buffer has {} slots for dimension {}", out.len(), self.dim));
        }
        if self.index >= MAX_POINTS {
            return Err(Error::Exhausted(format!("Sobol' stream reached {MAX_POINTS} points")));
        }
        for (o, &s) in out.iter_mut().zip(&self.state) {
            *o = s as f64 * SCALE;
        }
        let c = (!self.index).trailing_zeros() as usize;
        if c < BITS {
            for j in 0..self.dim {
                self.state[j] ^= self.v[j][c];
            }
        }
        self.index += 1;
        Ok(())
    }

    /// Returns the next point in `[0,1)^s`.
    pub fn next_point(&mut self) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim];
        self.next_into(&mut out)?;
        Ok(out)
    }
}

/// Maps 32-bit digits to the midpoint of their cell, a value strictly inside `(0,1)`.
pub fn bits_to_open_unit(b: u32) -> f64 {
    (b as f64 + 0.5) * SCALE
}

/// Generates `replicates` point sets of `count` points each.
///
/// With `seed = None` a single unscrambled set is produced (replicates must be 1).
/// Otherwise replicate `r` is scrambled with `(seed, r)`.
pub fn sobol_block(dim: usize, count: usize, replicates: usize, seed: Option<u64>) -> Result<Vec<Vec<Vec<f64>>>> {
    if count == 0 || !count.is_power_of_two() {
        return config(format!("point count {count} must be a power of two"));
    }
    if replicates == 0 {
        return config("at least one replicate is required");
    }
    if seed.is_none() && replicates > 1 {
        return config("unscrambled blocks have a single replicate");
    }
    (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut s = match seed {
                Some(seed) => SobolStream::scrambled(dim, seed, r as u64)?,
                None => SobolStream::new(dim)?,
            };
            (0..count).map(|_| s.next_point()).collect()
        })
        .collect()
}
