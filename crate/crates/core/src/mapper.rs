//! Bit-to-block mapping.
//!
//! A sub-block's `p` bits are laid out as
//!
//! ```text
//! [ index bits (p1) | mode-A symbol bits (k log2 c_A) | mode-B symbol bits ((n-k) log2 c_B) ]
//! ```
//!
//! The index bits, read as a big-endian integer, select the look-up table
//! entry with that rank. Mode-A symbol bits are then consumed `log2 c_A` at a
//! time over the A positions in ascending order, each group being the
//! big-endian rank of the point in the mode-A list. Mode-B bits are consumed
//! the same way over the remaining positions.

use crate::block::BlockMatrix;
use crate::config::{Point3, Setup};
use crate::error::{Error, Result};

/// Bits of one sub-block, each 0 or 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SubBlockBits(Vec<u8>);

impl SubBlockBits {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::InvalidParameter("bit values must be 0 or 1".into()));
        }
        Ok(Self(bits))
    }

    /// The `len` low bits of `message`, most significant first.
    pub fn from_message(message: u64, len: usize) -> Self {
        Self((0..len).rev().map(|i| ((message >> i) & 1) as u8).collect())
    }

    /// Inverse of [`SubBlockBits::from_message`]; requires `len() <= 64`.
    pub fn to_message(&self) -> u64 {
        read_uint(&self.0) as u64
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.0
    }
}

impl AsRef<[u8]> for SubBlockBits {
    fn as_ref(&self) -> &[u8] {
        &self.0
    }
}

fn read_uint(bits: &[u8]) -> usize {
    bits.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize)
}

fn write_uint(value: usize, width: usize, out: &mut Vec<u8>) {
    out.extend((0..width).rev().map(|i| ((value >> i) & 1) as u8));
}

/// The transmitted `3 x n` sub-block and its mode-A positions (1-based).
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolBlock {
    pub x: BlockMatrix,
    pub pattern: Vec<usize>,
}

pub fn map_bits_to_block(bits: &SubBlockBits, setup: &Setup) -> Result<SymbolBlock> {
    let cfg = &setup.system;
    if bits.len() != cfg.bits_per_block {
        return Err(Error::InvalidParameter(format!(
            "expected {} bits per sub-block, got {}",
            cfg.bits_per_block,
            bits.len()
        )));
    }
    let b = bits.as_slice();
    let (index, rest) = b.split_at(cfg.index_bits);
    let (a_bits, b_bits) = rest.split_at(cfg.k * cfg.bits_per_a());

    let pattern = setup
        .lut
        .pattern(read_uint(index))
        .ok_or_else(|| Error::InvalidParameter("index rank outside look-up table".into()))?
        .to_vec();

    let mut columns: Vec<Option<Point3>> = vec![None; cfg.n];
    let wa = cfg.bits_per_a();
    for (j, &pos) in pattern.iter().enumerate() {
        let rank = read_uint(&a_bits[j * wa..(j + 1) * wa]);
        columns[pos - 1] = Some(setup.constellations.mode_a[rank]);
    }
    let wb = cfg.bits_per_b();
    let complement = (1..=cfg.n).filter(|p| !pattern.contains(p));
    for (j, pos) in complement.enumerate() {
        let rank = read_uint(&b_bits[j * wb..(j + 1) * wb]);
        columns[pos - 1] = Some(setup.constellations.mode_b[rank]);
    }
    let columns: Vec<Point3> = columns
        .into_iter()
        .map(|c| c.expect("every subcarrier assigned"))
        .collect();
    Ok(SymbolBlock {
        x: BlockMatrix::from_columns(&columns),
        pattern,
    })
}

/// Exact inverse of [`map_bits_to_block`].
pub fn demap_block_to_bits(block: &SymbolBlock, setup: &Setup) -> Result<SubBlockBits> {
    let cfg = &setup.system;
    let consts = &setup.constellations;
    if block.x.cols() != cfg.n {
        return Err(Error::UnmappableBlock(format!(
            "block has {} subcarriers, expected {}",
            block.x.cols(),
            cfg.n
        )));
    }
    // Classify every column by exact match.
    let mut a_ranks = Vec::new();
    let mut b_ranks = Vec::new();
    let mut pattern = Vec::new();
    for phi in 0..cfg.n {
        let col = block.x.column(phi);
        if let Some(r) = consts.mode_a.iter().position(|p| *p == col) {
            pattern.push(phi + 1);
            a_ranks.push(r);
        } else if let Some(r) = consts.mode_b.iter().position(|p| *p == col) {
            b_ranks.push(r);
        } else {
            return Err(Error::UnmappableBlock(format!(
                "subcarrier {} is not a constellation point",
                phi + 1
            )));
        }
    }
    let rank = setup.lut.rank_of(&pattern).ok_or_else(|| {
        Error::UnmappableBlock(format!("pattern {pattern:?} has no look-up table rank"))
    })?;

    let mut bits = Vec::with_capacity(cfg.bits_per_block);
    write_uint(rank, cfg.index_bits, &mut bits);
    for r in a_ranks {
        write_uint(r, cfg.bits_per_a(), &mut bits);
    }
    for r in b_ranks {
        write_uint(r, cfg.bits_per_b(), &mut bits);
    }
    Ok(SubBlockBits(bits))
}

/// One legal transmitted sub-block together with its bits.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    /// The bits as a big-endian integer; also the candidate's rank.
    pub message: u64,
    pub bits: SubBlockBits,
    pub block: SymbolBlock,
}

/// Largest `p` for which the full candidate set is built.
pub const MAX_CANDIDATE_BITS: usize = 24;

/// All `2^p` sub-blocks in ascending message order.
pub fn enumerate_all_blocks(setup: &Setup) -> Result<Vec<Candidate>> {
    let p = setup.system.bits_per_block;
    if p > MAX_CANDIDATE_BITS {
        return Err(Error::CandidateSetTooLarge(p));
    }
    (0..1u64 << p)
        .map(|message| {
            let bits = SubBlockBits::from_message(message, p);
            let block = map_bits_to_block(&bits, setup)?;
            Ok(Candidate { message, bits, block })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::point_energy;

    fn bits(v: &[u8]) -> SubBlockBits {
        SubBlockBits::new(v.to_vec()).unwrap()
    }

    #[test]
    fn all_zero_bits() {
        let setup = Setup::with_defaults(4, 2, 2, 2).unwrap();
        let blk = map_bits_to_block(&bits(&[0, 0, 0, 0, 0, 0]), &setup).unwrap();
        let (a, b) = (&setup.constellations.mode_a, &setup.constellations.mode_b);
        assert_eq!(blk.pattern, vec![1, 2]);
        assert_eq!(blk.x, BlockMatrix::from_columns(&[a[0], a[0], b[0], b[0]]));
    }

    #[test]
    fn hand_traced_block() {
        let setup = Setup::with_defaults(4, 2, 2, 2).unwrap();
        let (a, b) = (&setup.constellations.mode_a, &setup.constellations.mode_b);
        let src = bits(&[1, 0, 0, 1, 1, 0]);
        let blk = map_bits_to_block(&src, &setup).unwrap();
        assert_eq!(blk.pattern, vec![3, 4]);
        assert_eq!(blk.x, BlockMatrix::from_columns(&[b[1], b[0], a[0], a[1]]));
        assert_eq!(demap_block_to_bits(&blk, &setup).unwrap(), src);
    }

    #[test]
    fn pattern_one_four_energies() {
        let setup = Setup::with_defaults(4, 2, 2, 2).unwrap();
        for tail in 0..16u64 {
            let msg = (0b11 << 4) | tail;
            let blk = map_bits_to_block(&SubBlockBits::from_message(msg, 6), &setup).unwrap();
            assert_eq!(blk.pattern, vec![1, 4]);
            assert!((point_energy(&blk.x.column(0)) - 1.5).abs() < 1e-15);
            assert!((point_energy(&blk.x.column(3)) - 1.5).abs() < 1e-15);
        }
    }

    #[test]
    fn pattern_outside_table_is_unmappable() {
        let setup = Setup::with_defaults(4, 2, 2, 2).unwrap();
        let (a, b) = (&setup.constellations.mode_a, &setup.constellations.mode_b);
        let blk = SymbolBlock {
            x: BlockMatrix::from_columns(&[a[0], b[0], a[1], b[1]]),
            pattern: vec![1, 3],
        };
        let err = demap_block_to_bits(&blk, &setup).unwrap_err();
        assert!(matches!(err, Error::UnmappableBlock(_)));
    }

    #[test]
    fn off_constellation_column_is_unmappable() {
        let setup = Setup::with_defaults(4, 2, 2, 2).unwrap();
        let mut blk = map_bits_to_block(&bits(&[0; 6]), &setup).unwrap();
        blk.x[(0, 2)] *= 1.0 + 1e-12;
        assert!(matches!(
            demap_block_to_bits(&blk, &setup),
            Err(Error::UnmappableBlock(_))
        ));
    }

    #[test]
    fn exhaustive_bijection_and_mode_count() {
        for (n, k, ca, cb) in [(4, 2, 2, 2), (2, 1, 2, 2), (4, 1, 4, 2), (5, 2, 2, 4), (6, 3, 2, 2)] {
            let setup = Setup::with_defaults(n, k, ca, cb).unwrap();
            let cands = enumerate_all_blocks(&setup).unwrap();
            assert_eq!(cands.len(), 1 << setup.system.bits_per_block);
            for c in &cands {
                let a_cols = (0..n)
                    .filter(|&phi| setup.constellations.mode_a.contains(&c.block.x.column(phi)))
                    .count();
                assert_eq!(a_cols, k);
                assert_eq!(demap_block_to_bits(&c.block, &setup).unwrap(), c.bits);
                assert_eq!(c.bits.to_message(), c.message);
            }
        }
    }

    #[test]
    fn candidates_distinct_and_ordered() {
        let setup = Setup::with_defaults(4, 2, 2, 2).unwrap();
        let cands = enumerate_all_blocks(&setup).unwrap();
        assert_eq!(cands.len(), 64);
        for i in 0..cands.len() {
            for j in 0..i {
                assert_ne!(cands[i].block.x, cands[j].block.x);
            }
        }
        let zero = map_bits_to_block(&SubBlockBits::from_message(0, 6), &setup).unwrap();
        assert_eq!(cands[0].block, zero);
        assert_eq!(enumerate_all_blocks(&Setup::with_defaults(2, 1, 2, 2).unwrap()).unwrap().len(), 8);
    }

    #[test]
    fn candidate_energy_is_normalized() {
        for (n, k, ca, cb) in [(4, 2, 2, 2), (4, 1, 4, 2), (6, 2, 2, 2)] {
            let setup = Setup::with_defaults(n, k, ca, cb).unwrap();
            let cands = enumerate_all_blocks(&setup).unwrap();
            let total: f64 = cands
                .iter()
                .flat_map(|c| (0..n).map(move |phi| point_energy(&c.block.x.column(phi))))
                .sum();
            let mean = total / (cands.len() * n) as f64;
            assert!((mean - 1.0).abs() < 1e-12, "({n},{k},{ca},{cb}) mean {mean}");
        }
    }

    #[test]
    fn oversized_candidate_set_rejected() {
        // n = 8, k = 4, c = 16: p1 = 6, p2 = 32.
        let setup = Setup::with_defaults(8, 4, 16, 16).unwrap();
        assert!(matches!(
            enumerate_all_blocks(&setup),
            Err(Error::CandidateSetTooLarge(38))
        ));
    }

    #[test]
    fn wrong_length_rejected() {
        let setup = Setup::with_defaults(4, 2, 2, 2).unwrap();
        assert!(map_bits_to_block(&bits(&[0; 5]), &setup).is_err());
        assert!(SubBlockBits::new(vec![0, 2]).is_err());
    }
}
