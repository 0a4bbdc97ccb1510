//! Connected-domain (CD) counting: maximal 4-connected regions of equal
//! value. Counts drive the step-3 ordering diagnostics; they never reorder
//! patterns themselves.

use std::io::Write;

use crate::basis::{Pattern, PatternBasis};
use crate::error::{Error, Result};

struct DisjointSet {
    parent: Vec<u32>,
    rank: Vec<u8>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        DisjointSet {
            parent: (0..n as u32).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, mut i: u32) -> u32 {
        while self.parent[i as usize] != i {
            // path halving
            let gp = self.parent[self.parent[i as usize] as usize];
            self.parent[i as usize] = gp;
            i = gp;
        }
        i
    }

    fn union(&mut self, a: u32, b: u32) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (ra, rb) = if self.rank[ra as usize] < self.rank[rb as usize] {
            (rb, ra)
        } else {
            (ra, rb)
        };
        self.parent[rb as usize] = ra;
        if self.rank[ra as usize] == self.rank[rb as usize] {
            self.rank[ra as usize] += 1;
        }
        true
    }
}

/// Number of 4-connected equal-value domains, via union-find over the grid.
pub fn count_cd(pattern: &Pattern) -> usize {
    let p = pattern.side();
    let v = pattern.values();
    let mut ds = DisjointSet::new(p * p);
    let mut components = p * p;
    for r in 0..p {
        for c in 0..p {
            let i = r * p + c;
            if c + 1 < p && v[i] == v[i + 1] && ds.union(i as u32, (i + 1) as u32) {
                components -= 1;
            }
            if r + 1 < p && v[i] == v[i + p] && ds.union(i as u32, (i + p) as u32) {
                components -= 1;
            }
        }
    }
    components
}

/// Independent flood-fill implementation of the same count, kept as the
/// testing oracle for `count_cd`.
pub fn count_cd_oracle(pattern: &Pattern) -> usize {
    let p = pattern.side();
    let v = pattern.values();
    let mut seen = vec![false; p * p];
    let mut stack = Vec::new();
    let mut count = 0;
    for start in 0..p * p {
        if seen[start] {
            continue;
        }
        count += 1;
        seen[start] = true;
        stack.push(start);
        while let Some(i) = stack.pop() {
            let (r, c) = (i / p, i % p);
            let mut visit = |j: usize| {
                if !seen[j] && v[j] == v[i] {
                    seen[j] = true;
                    stack.push(j);
                }
            };
            if r > 0 {
                visit(i - p);
            }
            if r + 1 < p {
                visit(i + p);
            }
            if c > 0 {
                visit(i - 1);
            }
            if c + 1 < p {
                visit(i + 1);
            }
        }
    }
    count
}

/// Per-pattern CD counts over a basis plus the group indices whose second
/// and third patterns tie.
#[derive(Debug, Clone)]
pub struct CdProfile {
    counts: Vec<usize>,
    tied_pairs: Vec<usize>,
}

impl CdProfile {
    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    /// 1-based group indices i with CD(P_i2) == CD(P_i3).
    pub fn tied_pairs(&self) -> &[usize] {
        &self.tied_pairs
    }

    /// Tied pairs restricted to an inclusive 1-based group range.
    pub fn tied_pairs_in(&self, lo: usize, hi: usize) -> Vec<usize> {
        self.tied_pairs.iter().copied().filter(|&g| g >= lo && g <= hi).collect()
    }

    /// True when counts are non-decreasing inside every group of four.
    pub fn within_group_non_decreasing(&self) -> bool {
        self.counts
            .chunks_exact(4)
            .all(|g| g[0] <= g[1] && g[1] <= g[2] && g[2] <= g[3])
    }

    /// CSV rows: sequence_index,group_index,position_in_group,cd_count
    /// (all 1-based).
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "sequence_index,group_index,position_in_group,cd_count")?;
        for (i, &cd) in self.counts.iter().enumerate() {
            writeln!(w, "{},{},{},{}", i + 1, i / 4 + 1, i % 4 + 1, cd)?;
        }
        Ok(())
    }
}

/// CD profile of a basis (length must be a multiple of 4).
pub fn cd_profile(basis: &PatternBasis) -> Result<CdProfile> {
    if !basis.len().is_multiple_of(4) {
        return Err(Error::InvalidArgument(format!(
            "basis length {} is not a multiple of 4",
            basis.len()
        )));
    }
    let counts: Vec<usize> = basis.patterns().iter().map(count_cd).collect();
    let tied_pairs = counts
        .chunks_exact(4)
        .enumerate()
        .filter(|(_, g)| g[1] == g[2])
        .map(|(i, _)| i + 1)
        .collect();
    Ok(CdProfile { counts, tied_pairs })
}

/// Groups of the unswapped (steps 1-2) sequence whose second pattern has a
/// strictly larger CD count than the third, i.e. the swaps step 3 should
/// perform if the CD rule is taken as authoritative.
pub fn observed_swap_groups(steps12: &[Pattern]) -> Vec<usize> {
    steps12
        .chunks_exact(4)
        .enumerate()
        .filter(|(_, g)| count_cd(&g[1]) > count_cd(&g[2]))
        .map(|(i, _)| i + 1)
        .collect()
}
