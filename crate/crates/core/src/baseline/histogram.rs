//! Empirical probability mass distribution of quantized levels.

use std::collections::BTreeMap;

use crate::{Error, Result};

/// Symbol occurrence counts. Kept in a sorted map so every derived artifact
/// (codes, reports) is deterministic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolHistogram {
    counts: BTreeMap<i64, u64>,
    total: u64,
}

impl SymbolHistogram {
    pub fn from_counts(counts: BTreeMap<i64, u64>) -> Result<Self> {
        let counts: BTreeMap<i64, u64> = counts.into_iter().filter(|&(_, c)| c > 0).collect();
        if counts.is_empty() {
            return Err(Error::invalid("histogram needs at least one symbol"));
        }
        let total = counts.values().sum();
        Ok(Self { counts, total })
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn counts(&self) -> &BTreeMap<i64, u64> {
        &self.counts
    }

    pub fn probability(&self, symbol: i64) -> f64 {
        self.counts
            .get(&symbol)
            .map_or(0.0, |&c| c as f64 / self.total as f64)
    }

    pub fn symbol_count(&self) -> usize {
        self.counts.len()
    }
}

/// Exact empirical distribution of a level sequence.
pub fn epmd(levels: &[i64]) -> Result<SymbolHistogram> {
    if levels.is_empty() {
        return Err(Error::invalid("cannot take the EPMD of an empty sequence"));
    }
    let mut counts = BTreeMap::new();
    for &l in levels {
        *counts.entry(l).or_insert(0u64) += 1;
    }
    SymbolHistogram::from_counts(counts)
}

/// Shannon entropy in bits per symbol, with `0 log 0 := 0`.
pub fn entropy(h: &SymbolHistogram) -> f64 {
    h.counts()
        .values()
        .map(|&c| {
            let p = c as f64 / h.total() as f64;
            if p > 0.0 {
                -p * p.log2()
            } else {
                0.0
            }
        })
        .sum()
}
