use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Disjoint blocks covering `0..n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockPartition {
    blocks: Vec<Vec<usize>>,
}

impl BlockPartition {
    pub fn new(n: usize, mut blocks: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = vec![false; n];
        for b in &mut blocks {
            if b.is_empty() {
                return Err(Error::InvalidSpec("empty block".into()));
            }
            b.sort_unstable();
            for &v in b.iter() {
                if v >= n || seen[v] {
                    return Err(Error::InvalidSpec(format!("site {v} repeated or out of range")));
                }
                seen[v] = true;
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidSpec("blocks do not cover every site".into()));
        }
        Ok(Self { blocks })
    }

    /// Every site its own block.
    pub fn singletons(n: usize) -> Self {
        Self { blocks: (0..n).map(|i| vec![i]).collect() }
    }

    /// Consecutive blocks of size `m`; requires `m | n`.
    pub fn contiguous(n: usize, m: usize) -> Result<Self> {
        if m == 0 || !n.is_multiple_of(m) {
            return Err(Error::InvalidSpec(format!("block size {m} does not divide {n}")));
        }
        Ok(Self { blocks: (0..n / m).map(|b| (b * m..(b + 1) * m).collect()).collect() })
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn n_sites(&self) -> usize {
        self.blocks.iter().map(Vec::len).sum()
    }

    /// Common block size, if all blocks are equal.
    pub fn uniform_size(&self) -> Option<usize> {
        let m = self.blocks.first()?.len();
        self.blocks.iter().all(|b| b.len() == m).then_some(m)
    }

    /// Block index of every site.
    pub fn block_of(&self) -> Vec<usize> {
        let mut out = vec![0; self.n_sites()];
        for (k, b) in self.blocks.iter().enumerate() {
            for &v in b {
                out[v] = k;
            }
        }
        out
    }
}
