//! Cascade information reconciliation.
//!
//! Both parties are simulated in one process. Alice discloses the parity of
//! every block and of every half inspected during binary search; Bob flips
//! the bit each search isolates. A correction in one pass changes the parity
//! of the blocks containing that bit in every other pass run so far, and
//! those blocks are searched again.

use std::collections::VecDeque;
use std::fmt;
use std::ops::Range;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::pipeline::BitStream;
use crate::rng::{child_rng, derive_seed};

pub const DEFAULT_PASSES: usize = 4;

/// `ceil(0.73 / bmr)`; a zero estimate means a single block over the whole
/// key, reported as `usize::MAX`.
pub fn estimate_initial_block_size(bmr_estimate: f64) -> Result<usize> {
    if !(0.0..=0.5).contains(&bmr_estimate) {
        return Err(Error::invalid(format!(
            "BMR estimate {bmr_estimate} outside [0, 0.5]"
        )));
    }
    if bmr_estimate == 0.0 {
        return Ok(usize::MAX);
    }
    Ok(((0.73 / bmr_estimate).ceil() as usize).max(1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReconciliationSession {
    permutation_seed: u64,
    block_size: usize,
    pass_count: usize,
}

impl ReconciliationSession {
    pub fn new(permutation_seed: u64, block_size: usize, pass_count: usize) -> Result<Self> {
        if block_size == 0 {
            return Err(Error::invalid("block size must be at least 1"));
        }
        if pass_count == 0 {
            return Err(Error::invalid("pass count must be at least 1"));
        }
        Ok(Self {
            permutation_seed,
            block_size,
            pass_count,
        })
    }

    /// Four passes sized from an estimated BMR.
    pub fn from_bmr_estimate(permutation_seed: u64, bmr_estimate: f64) -> Result<Self> {
        Self::new(
            permutation_seed,
            estimate_initial_block_size(bmr_estimate)?,
            DEFAULT_PASSES,
        )
    }

    pub fn permutation_seed(&self) -> u64 {
        self.permutation_seed
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    pub fn pass_count(&self) -> usize {
        self.pass_count
    }

    /// Block size of `pass` (0-based), doubling each pass, capped at `len`.
    pub fn block_size_for_pass(&self, pass: usize, len: usize) -> usize {
        let factor = 1usize.checked_shl(pass as u32).unwrap_or(usize::MAX);
        self.block_size.saturating_mul(factor).min(len).max(1)
    }

    /// Seed of the shuffle used in `pass`.
    pub fn pass_seed(&self, pass: usize) -> u64 {
        derive_seed(self.permutation_seed, &[pass as u64])
    }
}

/// Shuffled order of `len` positions used by one pass.
pub fn pass_permutation(seed: u64, len: usize) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..len).collect();
    perm.shuffle(&mut child_rng(seed, &[]));
    perm
}

/// One message of the public discussion. Passes and blocks are 0-based here
/// and 1-based in the text log.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TranscriptRecord {
    Permutation {
        pass: usize,
        seed: u64,
    },
    /// Alice's parity over permuted positions `range` of `block`.
    Parity {
        pass: usize,
        block: usize,
        range: Range<usize>,
        parity: u8,
    },
    /// Bob flipped his bit at original position `index`.
    Correction {
        pass: usize,
        block: usize,
        index: usize,
    },
    HashIndex(u64),
}

impl fmt::Display for TranscriptRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TranscriptRecord::Permutation { pass, seed } => {
                write!(f, "pass={} permutation-seed={seed}", pass + 1)
            }
            TranscriptRecord::Parity {
                pass,
                block,
                range,
                parity,
            } => write!(
                f,
                "pass={} block={} range={}..{} parity={parity}",
                pass + 1,
                block + 1,
                range.start,
                range.end
            ),
            TranscriptRecord::Correction { pass, block, index } => write!(
                f,
                "pass={} block={} correction-index={index}",
                pass + 1,
                block + 1
            ),
            TranscriptRecord::HashIndex(i) => write!(f, "hash-index={i}"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Transcript {
    records: Vec<TranscriptRecord>,
}

impl Transcript {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, record: TranscriptRecord) {
        self.records.push(record);
    }

    pub fn records(&self) -> &[TranscriptRecord] {
        &self.records
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn parity_count(&self) -> usize {
        self.records
            .iter()
            .filter(|r| matches!(r, TranscriptRecord::Parity { .. }))
            .count()
    }

    /// Original positions Bob flipped, in order.
    pub fn corrections(&self) -> Vec<usize> {
        self.records
            .iter()
            .filter_map(|r| match r {
                TranscriptRecord::Correction { index, .. } => Some(*index),
                _ => None,
            })
            .collect()
    }

    /// One record per line.
    pub fn to_log(&self) -> String {
        self.records.iter().map(|r| format!("{r}\n")).collect()
    }
}

/// Parity bits disclosed in `transcript`.
pub fn leakage_bits(transcript: &Transcript) -> usize {
    transcript.parity_count()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reconciled {
    pub corrected: BitStream,
    pub transcript: Transcript,
}

struct Pass {
    perm: Vec<usize>,
    position: Vec<usize>,
    block_size: usize,
    alice_parity: Vec<u8>,
}

impl Pass {
    fn block_range(&self, block: usize) -> Range<usize> {
        let start = block * self.block_size;
        start..(start + self.block_size).min(self.perm.len())
    }

    fn block_of(&self, index: usize) -> usize {
        self.position[index] / self.block_size
    }

    fn parity(&self, bits: &[u8], range: Range<usize>) -> u8 {
        self.perm[range].iter().fold(0, |acc, &i| acc ^ bits[i])
    }
}

/// Corrects Bob's bits towards Alice's. Alice's stream is never modified.
pub fn reconcile(
    alice: &BitStream,
    bob: &BitStream,
    session: &ReconciliationSession,
) -> Result<Reconciled> {
    if alice.len() != bob.len() {
        return Err(Error::LengthMismatch {
            left: alice.len(),
            right: bob.len(),
        });
    }
    let a = alice.bits();
    let mut b = bob.bits().to_vec();
    let n = a.len();
    let mut transcript = Transcript::new();
    if n == 0 {
        return Ok(Reconciled {
            corrected: bob.clone(),
            transcript,
        });
    }

    let mut passes: Vec<Pass> = Vec::with_capacity(session.pass_count);
    for p in 0..session.pass_count {
        let seed = session.pass_seed(p);
        let perm = pass_permutation(seed, n);
        let mut position = vec![0; n];
        for (j, &i) in perm.iter().enumerate() {
            position[i] = j;
        }
        let block_size = session.block_size_for_pass(p, n);
        transcript.push(TranscriptRecord::Permutation { pass: p, seed });
        let mut pass = Pass {
            perm,
            position,
            block_size,
            alice_parity: Vec::new(),
        };
        let blocks = n.div_ceil(block_size);
        for k in 0..blocks {
            let range = pass.block_range(k);
            let parity = pass.parity(a, range.clone());
            transcript.push(TranscriptRecord::Parity {
                pass: p,
                block: k,
                range,
                parity,
            });
            pass.alice_parity.push(parity);
        }
        passes.push(pass);

        let mut queue: VecDeque<(usize, usize)> = (0..blocks).map(|k| (p, k)).collect();
        while let Some((q, k)) = queue.pop_front() {
            let pass = &passes[q];
            let range = pass.block_range(k);
            if pass.parity(&b, range.clone()) == pass.alice_parity[k] {
                continue;
            }
            let index = binary_search(pass, q, k, range, a, &b, &mut transcript);
            b[index] ^= 1;
            transcript.push(TranscriptRecord::Correction {
                pass: q,
                block: k,
                index,
            });
            for (r, other) in passes.iter().enumerate() {
                if r != q {
                    queue.push_back((r, other.block_of(index)));
                }
            }
        }
    }

    Ok(Reconciled {
        corrected: BitStream::new(b, bob.bits_per_sample(), bob.provenance())?,
        transcript,
    })
}

/// Halves a block with odd parity difference until one bit is left.
fn binary_search(
    pass: &Pass,
    pass_index: usize,
    block: usize,
    mut range: Range<usize>,
    alice: &[u8],
    bob: &[u8],
    transcript: &mut Transcript,
) -> usize {
    while range.len() > 1 {
        let mid = range.start + range.len() / 2;
        let left = range.start..mid;
        let parity = pass.parity(alice, left.clone());
        transcript.push(TranscriptRecord::Parity {
            pass: pass_index,
            block,
            range: left.clone(),
            parity,
        });
        range = if pass.parity(bob, left.clone()) != parity {
            left
        } else {
            mid..range.end
        };
    }
    pass.perm[range.start]
}
