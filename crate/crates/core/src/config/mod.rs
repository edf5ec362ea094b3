//! System parameters, bit split, index look-up table and constellations.
//!
//! A DM-IM-3D-OFDM sub-block has `n` subcarriers, of which `k` carry points
//! from constellation A and the remaining `n - k` carry points from the
//! disjoint constellation B. The pattern of A positions conveys
//! `p1 = floor(log2(C(n, k)))` index bits; the points themselves convey
//! `p2 = k log2(c_A) + (n - k) log2(c_B)` symbol bits.
//!
//! Subcarrier positions in [`IndexLookupTable`] are 1-based, matching the
//! way index patterns are usually tabulated.

mod file;

use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::rx::EnergySource;

pub use file::ConfigFile;

/// One 3-D constellation point: a complex 3-vector carried on one subcarrier.
pub type Point3 = [Complex64; 3];

/// Tolerance on the average block energy of a constellation set.
pub const POWER_TOLERANCE: f64 = 1e-12;

/// Index, symbol and total bit counts for one sub-block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BitSplit {
    pub index_bits: usize,
    pub symbol_bits: usize,
    pub total: usize,
}

/// System parameters plus the quantities derived from them.
///
/// Fields are public so that arbitrary (possibly inconsistent) configurations
/// can be checked with [`validate_config`]; [`SystemConfig::new`] only builds
/// consistent ones.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SystemConfig {
    /// Subcarriers per sub-block.
    pub n: usize,
    /// Subcarriers carrying mode-A points per sub-block.
    pub k: usize,
    pub c_a: usize,
    pub c_b: usize,
    /// Total subcarriers per frame (`N`).
    pub total_subcarriers: usize,
    /// Sub-blocks per frame (`u`).
    pub sub_blocks: usize,
    /// Bits per frame (`m`).
    pub frame_bits: usize,
    /// `p1`
    pub index_bits: usize,
    /// `p2`
    pub symbol_bits: usize,
    /// `p`
    pub bits_per_block: usize,
}

impl SystemConfig {
    /// A single-sub-block frame (`N = n`).
    pub fn new(n: usize, k: usize, c_a: usize, c_b: usize) -> Result<Self> {
        Self::with_frame(n, k, c_a, c_b, n)
    }

    pub fn with_frame(
        n: usize,
        k: usize,
        c_a: usize,
        c_b: usize,
        total_subcarriers: usize,
    ) -> Result<Self> {
        let split = derive_bit_split(n, k, c_a, c_b)?;
        if total_subcarriers == 0 || total_subcarriers % n != 0 {
            return Err(Error::InvalidParameter(format!(
                "total subcarriers {total_subcarriers} is not a positive multiple of n = {n}"
            )));
        }
        let sub_blocks = total_subcarriers / n;
        Ok(Self {
            n,
            k,
            c_a,
            c_b,
            total_subcarriers,
            sub_blocks,
            frame_bits: sub_blocks * split.total,
            index_bits: split.index_bits,
            symbol_bits: split.symbol_bits,
            bits_per_block: split.total,
        })
    }

    /// Bits carried by one mode-A point.
    pub fn bits_per_a(&self) -> usize {
        self.c_a.trailing_zeros() as usize
    }

    /// Bits carried by one mode-B point.
    pub fn bits_per_b(&self) -> usize {
        self.c_b.trailing_zeros() as usize
    }

    pub fn split(&self) -> BitSplit {
        BitSplit {
            index_bits: self.index_bits,
            symbol_bits: self.symbol_bits,
            total: self.bits_per_block,
        }
    }
}

/// Binomial coefficient, saturating at `u128::MAX`.
pub(crate) fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) is divisible by (i + 1) at every step.
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Computes `(p1, p2, p)` for the given system shape.
pub fn derive_bit_split(n: usize, k: usize, c_a: usize, c_b: usize) -> Result<BitSplit> {
    if n < 2 || k < 1 || k > n - 1 {
        return Err(Error::InvalidParameter(format!(
            "k = {k} is outside [1, n - 1] for n = {n}"
        )));
    }
    for (name, c) in [("c_A", c_a), ("c_B", c_b)] {
        if !c.is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "{name} = {c} is not a power of two"
            )));
        }
    }
    let combos = binomial(n, k);
    let index_bits = (u128::BITS - 1 - combos.leading_zeros()) as usize;
    let symbol_bits =
        k * c_a.trailing_zeros() as usize + (n - k) * c_b.trailing_zeros() as usize;
    Ok(BitSplit {
        index_bits,
        symbol_bits,
        total: index_bits + symbol_bits,
    })
}

/// Maps index-bit ranks to the set of mode-A subcarrier positions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexLookupTable {
    /// Entry `r` holds the strictly increasing, 1-based mode-A positions
    /// selected by the big-endian index-bit value `r`.
    pub entries: Vec<Vec<usize>>,
}

impl IndexLookupTable {
    pub fn new(entries: Vec<Vec<usize>>) -> Self {
        Self { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn pattern(&self, rank: usize) -> Option<&[usize]> {
        self.entries.get(rank).map(Vec::as_slice)
    }

    /// Rank of a pattern, if the table contains it.
    pub fn rank_of(&self, pattern: &[usize]) -> Option<usize> {
        self.entries.iter().position(|e| e.as_slice() == pattern)
    }
}

/// The index table used for `(n, k) = (4, 2)`.
const TABLE_4_2: [[usize; 2]; 4] = [[1, 2], [2, 3], [3, 4], [1, 4]];

/// Builds the index look-up table for `(n, k)`.
///
/// `(4, 2)` yields the table `[1,2], [2,3], [3,4], [1,4]`. Every other shape
/// takes the first `2^p1` k-combinations of `1..=n` in lexicographic order.
pub fn build_index_lut(n: usize, k: usize) -> Result<IndexLookupTable> {
    // Cardinalities are irrelevant to p1; pass trivially valid ones.
    let split = derive_bit_split(n, k, 1, 1)?;
    if (n, k) == (4, 2) {
        return Ok(IndexLookupTable::new(
            TABLE_4_2.iter().map(|e| e.to_vec()).collect(),
        ));
    }
    let wanted = 1usize << split.index_bits;
    let mut entries = Vec::with_capacity(wanted);
    let mut combo: Vec<usize> = (1..=k).collect();
    loop {
        entries.push(combo.clone());
        if entries.len() == wanted {
            break;
        }
        // Advance to the next lexicographic combination.
        let mut i = k;
        while i > 0 && combo[i - 1] == n - k + i {
            i -= 1;
        }
        if i == 0 {
            break;
        }
        combo[i - 1] += 1;
        for j in i..k {
            combo[j] = combo[j - 1] + 1;
        }
    }
    Ok(IndexLookupTable::new(entries))
}

/// The two disjoint point lists used on mode-A and mode-B subcarriers.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstellationSet {
    pub mode_a: Vec<Point3>,
    pub mode_b: Vec<Point3>,
}

pub(crate) fn point_energy(p: &Point3) -> f64 {
    p.iter().map(Complex64::norm_sqr).sum()
}

fn mean_energy(points: &[Point3]) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    points.iter().map(point_energy).sum::<f64>() / points.len() as f64
}

impl ConstellationSet {
    /// Average per-subcarrier energy of a sub-block with `k` mode-A columns.
    pub fn block_energy(&self, n: usize, k: usize) -> f64 {
        (k as f64 * mean_energy(&self.mode_a) + (n - k) as f64 * mean_energy(&self.mode_b))
            / n as f64
    }
}

/// Unit-modulus `j`-th point of a `c`-PSK alphabet, exact on the axes.
fn psk_unit(j: usize, c: usize) -> Complex64 {
    if (4 * j) % c == 0 {
        return match (4 * j / c) % 4 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
    }
    Complex64::from_polar(1.0, std::f64::consts::TAU * j as f64 / c as f64)
}

/// Default constellations: mode A lives on the third component, mode B on
/// the first, with a 3:1 energy ratio between the modes.
///
/// Each mode is a `c`-PSK alphabet on its component; for `c = 2` that is the
/// antipodal pair `±r (0,0,1)` and `±r (1,0,0)`. The radii satisfy
/// `r_A^2 = 3 r_B^2` and unit average block energy, which for `(n, k) = (4, 2)`
/// gives `r_A^2 = 1.5` and `r_B^2 = 0.5`.
pub fn default_constellations(config: &SystemConfig) -> ConstellationSet {
    let (n, k) = (config.n as f64, config.k as f64);
    let r_b = (n / (n + 2.0 * k)).sqrt();
    let r_a = (3.0 * n / (n + 2.0 * k)).sqrt();
    let zero = Complex64::new(0.0, 0.0);
    let mode_a = (0..config.c_a)
        .map(|j| [zero, zero, psk_unit(j, config.c_a) * r_a])
        .collect();
    let mode_b = (0..config.c_b)
        .map(|j| [psk_unit(j, config.c_b) * r_b, zero, zero])
        .collect();
    ConstellationSet { mode_a, mode_b }
}

/// A violated configuration invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    KRange { n: usize, k: usize },
    NotPowerOfTwo { which: &'static str, value: usize },
    BitSplit,
    BlockCounts,
    LutCardinality { expected: usize, found: usize },
    LutPattern { rank: usize, reason: String },
    LutDuplicate { rank: usize },
    ConstellationSize { mode: char, expected: usize, found: usize },
    ConstellationOverlap,
    ConstellationDuplicate { mode: char },
    NonFinitePoint { mode: char },
    PowerNormalization { value: f64 },
}

impl Violation {
    /// Short, stable name of the violated invariant.
    pub fn name(&self) -> &'static str {
        match self {
            Violation::KRange { .. } => "k range",
            Violation::NotPowerOfTwo { .. } => "power of two",
            Violation::BitSplit => "bit split",
            Violation::BlockCounts => "block counts",
            Violation::LutCardinality { .. } => "lut cardinality",
            Violation::LutPattern { .. } => "lut pattern",
            Violation::LutDuplicate { .. } => "lut duplicate",
            Violation::ConstellationSize { .. } => "constellation size",
            Violation::ConstellationOverlap => "constellation overlap",
            Violation::ConstellationDuplicate { .. } => "constellation duplicate",
            Violation::NonFinitePoint { .. } => "non-finite point",
            Violation::PowerNormalization { .. } => "power normalization",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: ", self.name())?;
        match self {
            Violation::KRange { n, k } => write!(f, "k = {k} not in [1, {}]", n.saturating_sub(1)),
            Violation::NotPowerOfTwo { which, value } => {
                write!(f, "{which} = {value} is not a power of two")
            }
            Violation::BitSplit => write!(f, "p1/p2/p disagree with (n, k, c_A, c_B)"),
            Violation::BlockCounts => write!(f, "N != u n or m != u p"),
            Violation::LutCardinality { expected, found } => {
                write!(f, "expected {expected} entries, found {found}")
            }
            Violation::LutPattern { rank, reason } => write!(f, "entry {rank}: {reason}"),
            Violation::LutDuplicate { rank } => write!(f, "entry {rank} repeats an earlier entry"),
            Violation::ConstellationSize { mode, expected, found } => {
                write!(f, "mode {mode} has {found} points, expected {expected}")
            }
            Violation::ConstellationOverlap => write!(f, "modes A and B share a point"),
            Violation::ConstellationDuplicate { mode } => {
                write!(f, "mode {mode} contains a repeated point")
            }
            Violation::NonFinitePoint { mode } => write!(f, "mode {mode} has a non-finite coordinate"),
            Violation::PowerNormalization { value } => {
                write!(f, "average block energy {value} differs from 1")
            }
        }
    }
}

fn has_duplicates(points: &[Point3]) -> bool {
    points
        .iter()
        .enumerate()
        .any(|(i, p)| points[..i].contains(p))
}

/// Checks every configuration invariant and reports all violations found.
pub fn validate_config(
    config: &SystemConfig,
    constellations: &ConstellationSet,
    lut: &IndexLookupTable,
) -> std::result::Result<(), Vec<Violation>> {
    let mut out = Vec::new();
    let SystemConfig { n, k, c_a, c_b, .. } = *config;

    let k_ok = n >= 2 && (1..n).contains(&k);
    if !k_ok {
        out.push(Violation::KRange { n, k });
    }
    for (which, value) in [("c_A", c_a), ("c_B", c_b)] {
        if !value.is_power_of_two() {
            out.push(Violation::NotPowerOfTwo { which, value });
        }
    }
    let split = derive_bit_split(n, k, c_a, c_b).ok();
    if let Some(split) = split {
        if split != config.split() {
            out.push(Violation::BitSplit);
        }
    }
    if config.total_subcarriers != config.sub_blocks * n
        || config.frame_bits != config.sub_blocks * config.bits_per_block
    {
        out.push(Violation::BlockCounts);
    }

    if let Some(split) = split {
        let expected = 1usize << split.index_bits;
        if lut.len() != expected {
            out.push(Violation::LutCardinality { expected, found: lut.len() });
        }
    }
    for (rank, entry) in lut.entries.iter().enumerate() {
        let reason = if entry.len() != k {
            Some(format!("has {} positions, expected {k}", entry.len()))
        } else if entry.iter().any(|&pos| pos < 1 || pos > n) {
            Some(format!("position outside 1..={n}"))
        } else if entry.windows(2).any(|w| w[0] >= w[1]) {
            Some("positions not strictly increasing".to_owned())
        } else {
            None
        };
        if let Some(reason) = reason {
            out.push(Violation::LutPattern { rank, reason });
        }
        if lut.entries[..rank].contains(entry) {
            out.push(Violation::LutDuplicate { rank });
        }
    }

    for (mode, points, expected) in [
        ('A', &constellations.mode_a, c_a),
        ('B', &constellations.mode_b, c_b),
    ] {
        if points.len() != expected {
            out.push(Violation::ConstellationSize { mode, expected, found: points.len() });
        }
        if points.iter().flatten().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            out.push(Violation::NonFinitePoint { mode });
        }
        if has_duplicates(points) {
            out.push(Violation::ConstellationDuplicate { mode });
        }
    }
    if constellations
        .mode_a
        .iter()
        .any(|p| constellations.mode_b.contains(p))
    {
        out.push(Violation::ConstellationOverlap);
    }
    if k_ok {
        let value = constellations.block_energy(n, k);
        if !((value - 1.0).abs() <= POWER_TOLERANCE) {
            out.push(Violation::PowerNormalization { value });
        }
    }

    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

/// Everything needed to run the link: system shape, alphabets, index table
/// and receiver front-end options.
#[derive(Debug, Clone, PartialEq)]
pub struct Setup {
    pub system: SystemConfig,
    pub constellations: ConstellationSet,
    pub lut: IndexLookupTable,
    pub energy_source: EnergySource,
}

impl Setup {
    /// Default index table and constellations for the given shape.
    pub fn with_defaults(n: usize, k: usize, c_a: usize, c_b: usize) -> Result<Self> {
        let system = SystemConfig::new(n, k, c_a, c_b)?;
        Ok(Self {
            constellations: default_constellations(&system),
            lut: build_index_lut(n, k)?,
            system,
            energy_source: EnergySource::default(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        validate_config(&self.system, &self.constellations, &self.lut).map_err(Error::Validation)
    }
}
