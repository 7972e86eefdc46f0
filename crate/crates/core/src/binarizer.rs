//! Binarization of signed quantization levels and the per-bin context layout.
//!
//! A level maps to bins as follows (the normative bitstream layout):
//!
//! ```text
//! sigFlag                 1 bin   0 terminates (level == 0)
//! signFlag                1 bin   1 = negative
//! AbsGr(j), j = 1..=n     <= n    1 = |level| > j, stop at the first 0
//! Exp-Golomb of i = |level| - n, coded when all n flags were 1:
//!   unary exponent        k ones and a zero, k = floor(log2 i)
//!   remainder             k bypass bins, r = i - 2^k, MSB first
//! ```
//!
//! Every bin except the Golomb remainder is coded with a context model:
//! two significance contexts switched on whether the previously scanned
//! weight was significant, one sign context, one context per AbsGr flag
//! position, and one context per unary prefix position (capped, deeper
//! positions reuse the last context).

use crate::cabac::{ContextModel, Decoder, Encoder, BYPASS_COST_UNITS, PROB_ONE};
use crate::{Error, Result};

/// Unary prefix positions beyond this share the last context model.
const GOLOMB_CONTEXT_CAP: u32 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BinarizerConfig {
    /// Number of AbsGr(j) flags before the Exp-Golomb remainder starts.
    pub n_flags: u32,
    /// Largest admissible unary exponent; longer runs are a corrupt stream.
    pub max_golomb_order: u32,
}

impl Default for BinarizerConfig {
    fn default() -> Self {
        Self {
            n_flags: 10,
            max_golomb_order: 31,
        }
    }
}

impl BinarizerConfig {
    pub fn new(n_flags: u32, max_golomb_order: u32) -> Result<Self> {
        if n_flags == 0 {
            return Err(Error::invalid("n_flags must be at least 1"));
        }
        if max_golomb_order > 62 {
            return Err(Error::invalid("max_golomb_order must be <= 62"));
        }
        Ok(Self {
            n_flags,
            max_golomb_order,
        })
    }

    /// Largest |level| the bin grammar can express under this config.
    pub fn max_abs_level(&self) -> u64 {
        let k = self.max_golomb_order;
        // i <= 2^(k+1) - 1, |level| = i + n_flags
        (1u64 << (k + 1)) - 1 + self.n_flags as u64
    }
}

/// Role of one bin within a level's bin sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinRole {
    Sig,
    Sign,
    /// AbsGr(j) flag, j in 1..=n_flags.
    AbsGr(u32),
    /// Unary prefix bit at the given position (the terminating zero included).
    GolombUnary(u32),
    /// Fixed-length remainder bit, coded without a context.
    Bypass,
}

/// The context models consumed by one tensor's scan. Freshly initialized per
/// tensor record; never shared between encoder/decoder instances.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContextSet {
    sig: [ContextModel; 2],
    sign: ContextModel,
    absgr: Vec<ContextModel>,
    golomb: Vec<ContextModel>,
}

impl ContextSet {
    pub fn new(cfg: &BinarizerConfig) -> Self {
        Self {
            sig: [ContextModel::new(); 2],
            sign: ContextModel::new(),
            absgr: vec![ContextModel::new(); cfg.n_flags as usize],
            golomb: vec![
                ContextModel::new();
                cfg.max_golomb_order.saturating_add(1).min(GOLOMB_CONTEXT_CAP) as usize
            ],
        }
    }

    /// Total number of context models; a pure function of the config.
    pub fn model_count(&self) -> usize {
        2 + 1 + self.absgr.len() + self.golomb.len()
    }

    fn model(&self, role: BinRole, prev_significant: bool) -> Option<&ContextModel> {
        match role {
            BinRole::Sig => Some(&self.sig[prev_significant as usize]),
            BinRole::Sign => Some(&self.sign),
            BinRole::AbsGr(j) => Some(&self.absgr[(j - 1) as usize]),
            BinRole::GolombUnary(pos) => {
                let idx = (pos as usize).min(self.golomb.len() - 1);
                Some(&self.golomb[idx])
            }
            BinRole::Bypass => None,
        }
    }

    fn model_mut(&mut self, role: BinRole, prev_significant: bool) -> Option<&mut ContextModel> {
        match role {
            BinRole::Sig => Some(&mut self.sig[prev_significant as usize]),
            BinRole::Sign => Some(&mut self.sign),
            BinRole::AbsGr(j) => Some(&mut self.absgr[(j - 1) as usize]),
            BinRole::GolombUnary(pos) => {
                let last = self.golomb.len() - 1;
                Some(&mut self.golomb[(pos as usize).min(last)])
            }
            BinRole::Bypass => None,
        }
    }
}

/// Receives the bins of one level in order.
trait BinSink {
    fn put(&mut self, bin: bool, role: BinRole) -> Result<()>;
}

/// Produces the bins of one level in order.
trait BinSource {
    fn get(&mut self, role: BinRole) -> Result<bool>;
}

/// The one forward walk of the level grammar; everything that emits bins
/// (binarize, encode, cost estimation, context commits) goes through here.
fn walk_level<S: BinSink>(level: i64, cfg: &BinarizerConfig, sink: &mut S) -> Result<()> {
    if level == 0 {
        return sink.put(false, BinRole::Sig);
    }
    sink.put(true, BinRole::Sig)?;
    sink.put(level < 0, BinRole::Sign)?;
    let magnitude = level.unsigned_abs();
    for j in 1..=cfg.n_flags as u64 {
        let greater = magnitude > j;
        sink.put(greater, BinRole::AbsGr(j as u32))?;
        if !greater {
            return Ok(());
        }
    }
    let residual = magnitude - cfg.n_flags as u64; // >= 1 here
    let exponent = 63 - residual.leading_zeros();
    if exponent > cfg.max_golomb_order {
        return Err(Error::LevelRange(level));
    }
    for pos in 0..exponent {
        sink.put(true, BinRole::GolombUnary(pos))?;
    }
    sink.put(false, BinRole::GolombUnary(exponent))?;
    let remainder = residual - (1u64 << exponent);
    for bit in (0..exponent).rev() {
        sink.put((remainder >> bit) & 1 == 1, BinRole::Bypass)?;
    }
    Ok(())
}

/// The one reverse walk of the level grammar.
fn unwalk_level<S: BinSource>(cfg: &BinarizerConfig, source: &mut S) -> Result<i64> {
    if !source.get(BinRole::Sig)? {
        return Ok(0);
    }
    let negative = source.get(BinRole::Sign)?;
    let mut magnitude = None;
    for j in 1..=cfg.n_flags as u64 {
        if !source.get(BinRole::AbsGr(j as u32))? {
            magnitude = Some(j);
            break;
        }
    }
    let magnitude = match magnitude {
        Some(m) => m,
        None => {
            let mut exponent = 0u32;
            while source.get(BinRole::GolombUnary(exponent))? {
                exponent += 1;
                if exponent > cfg.max_golomb_order {
                    return Err(Error::corrupt(format!(
                        "unary exponent run exceeds max order {}",
                        cfg.max_golomb_order
                    )));
                }
            }
            let mut remainder = 0u64;
            for _ in 0..exponent {
                remainder = (remainder << 1) | source.get(BinRole::Bypass)? as u64;
            }
            cfg.n_flags as u64 + (1u64 << exponent) + remainder
        }
    };
    let level = i64::try_from(magnitude)
        .map_err(|_| Error::corrupt("decoded magnitude exceeds level range"))?;
    Ok(if negative { -level } else { level })
}

/// Expand a level into its labelled bin sequence.
pub fn binarize(level: i64, cfg: &BinarizerConfig) -> Result<Vec<(bool, BinRole)>> {
    struct Collect(Vec<(bool, BinRole)>);
    impl BinSink for Collect {
        fn put(&mut self, bin: bool, role: BinRole) -> Result<()> {
            self.0.push((bin, role));
            Ok(())
        }
    }
    let mut sink = Collect(Vec::new());
    walk_level(level, cfg, &mut sink)?;
    Ok(sink.0)
}

/// Inverse of [`binarize`] over a raw bin stream.
pub fn debinarize<I: Iterator<Item = bool>>(bins: &mut I, cfg: &BinarizerConfig) -> Result<i64> {
    struct Drain<'a, I: Iterator<Item = bool>>(&'a mut I);
    impl<I: Iterator<Item = bool>> BinSource for Drain<'_, I> {
        fn get(&mut self, _role: BinRole) -> Result<bool> {
            self.0
                .next()
                .ok_or_else(|| Error::truncated("bin sequence ended mid-level"))
        }
    }
    unwalk_level(cfg, &mut Drain(bins))
}

/// Arithmetic-code one level, adapting the context set.
pub fn encode_level(
    enc: &mut Encoder,
    ctxs: &mut ContextSet,
    level: i64,
    cfg: &BinarizerConfig,
    prev_significant: bool,
) -> Result<()> {
    struct Emit<'a> {
        enc: &'a mut Encoder,
        ctxs: &'a mut ContextSet,
        prev: bool,
    }
    impl BinSink for Emit<'_> {
        fn put(&mut self, bin: bool, role: BinRole) -> Result<()> {
            match self.ctxs.model_mut(role, self.prev) {
                Some(ctx) => self.enc.encode_bin(ctx, bin),
                None => self.enc.encode_bypass(bin),
            }
            Ok(())
        }
    }
    walk_level(
        level,
        cfg,
        &mut Emit {
            enc,
            ctxs,
            prev: prev_significant,
        },
    )
}

/// Decode one level; context updates mirror [`encode_level`] bit-exactly.
pub fn decode_level(
    dec: &mut Decoder,
    ctxs: &mut ContextSet,
    cfg: &BinarizerConfig,
    prev_significant: bool,
) -> Result<i64> {
    struct Read<'a, 'b> {
        dec: &'a mut Decoder<'b>,
        ctxs: &'a mut ContextSet,
        prev: bool,
    }
    impl BinSource for Read<'_, '_> {
        fn get(&mut self, role: BinRole) -> Result<bool> {
            match self.ctxs.model_mut(role, self.prev) {
                Some(ctx) => self.dec.decode_bin(ctx),
                None => self.dec.decode_bypass(),
            }
        }
    }
    unwalk_level(
        cfg,
        &mut Read {
            dec,
            ctxs,
            prev: prev_significant,
        },
    )
}

/// Code length of `level` under the current context states, in `2^-16`-bit
/// units. Contexts are not mutated; bypass bins cost exactly one bit.
pub fn estimate_level_units(
    ctxs: &ContextSet,
    level: i64,
    cfg: &BinarizerConfig,
    prev_significant: bool,
) -> Result<u64> {
    struct Tally<'a> {
        ctxs: &'a ContextSet,
        prev: bool,
        units: u64,
    }
    impl BinSink for Tally<'_> {
        fn put(&mut self, bin: bool, role: BinRole) -> Result<()> {
            self.units += match self.ctxs.model(role, self.prev) {
                Some(ctx) => ctx.cost_units(bin),
                None => BYPASS_COST_UNITS,
            };
            Ok(())
        }
    }
    let mut tally = Tally {
        ctxs,
        prev: prev_significant,
        units: 0,
    };
    walk_level(level, cfg, &mut tally)?;
    Ok(tally.units)
}

/// [`estimate_level_units`] in fractional bits.
pub fn estimate_level_bits(
    ctxs: &ContextSet,
    level: i64,
    cfg: &BinarizerConfig,
    prev_significant: bool,
) -> Result<f64> {
    Ok(estimate_level_units(ctxs, level, cfg, prev_significant)? as f64 / PROB_ONE as f64)
}

/// Update the context set exactly as encoding `level` would, without
/// producing any output. Used by the rate-distortion quantizer to commit a
/// chosen level before scoring the next position.
pub fn commit_level(
    ctxs: &mut ContextSet,
    level: i64,
    cfg: &BinarizerConfig,
    prev_significant: bool,
) -> Result<()> {
    struct Commit<'a> {
        ctxs: &'a mut ContextSet,
        prev: bool,
    }
    impl BinSink for Commit<'_> {
        fn put(&mut self, bin: bool, role: BinRole) -> Result<()> {
            if let Some(ctx) = self.ctxs.model_mut(role, self.prev) {
                ctx.update(bin);
            }
            Ok(())
        }
    }
    walk_level(
        level,
        cfg,
        &mut Commit {
            ctxs,
            prev: prev_significant,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg_n(n: u32) -> BinarizerConfig {
        BinarizerConfig::new(n, 31).unwrap()
    }

    fn bin_string(level: i64, cfg: &BinarizerConfig) -> String {
        binarize(level, cfg)
            .unwrap()
            .iter()
            .map(|&(b, _)| if b { '1' } else { '0' })
            .collect()
    }

    #[test]
    fn golden_bin_strings() {
        let cfg = cfg_n(1);
        assert_eq!(bin_string(1, &cfg), "100");
        assert_eq!(bin_string(-4, &cfg), "111101");
        assert_eq!(bin_string(7, &cfg), "10111010");
        assert_eq!(bin_string(0, &cfg), "0");
        // sig=1, sign=0, AbsGr1=1, residual 1 has exponent 0: unary "0", no
        // remainder bits
        assert_eq!(bin_string(2, &cfg), "1010");
    }

    #[test]
    fn level_one_is_three_context_bins() {
        let cfg = cfg_n(1);
        let bins = binarize(1, &cfg).unwrap();
        assert_eq!(bins.len(), 3);
        assert!(bins.iter().all(|&(_, r)| r != BinRole::Bypass));
    }

    #[test]
    fn debinarize_golden() {
        let cfg = cfg_n(1);
        for (s, want) in [("100", 1i64), ("0", 0), ("111101", -4), ("10111010", 7)] {
            let mut it = s.chars().map(|c| c == '1');
            assert_eq!(debinarize(&mut it, &cfg).unwrap(), want);
        }
    }

    #[test]
    fn roundtrip_exhaustive_window() {
        for n in [1u32, 2, 10] {
            let cfg = cfg_n(n);
            for level in -10_000i64..=10_000 {
                let bins = binarize(level, &cfg).unwrap();
                let mut it = bins.iter().map(|&(b, _)| b);
                assert_eq!(debinarize(&mut it, &cfg).unwrap(), level, "n={n}");
                assert_eq!(it.next(), None, "level {level} left residue");
            }
        }
    }

    #[test]
    fn roundtrip_wide_window_default_config() {
        let cfg = BinarizerConfig::default();
        for level in (-100_000i64..=100_000).step_by(17) {
            let bins = binarize(level, &cfg).unwrap();
            let mut it = bins.iter().map(|&(b, _)| b);
            assert_eq!(debinarize(&mut it, &cfg).unwrap(), level);
        }
        // extremes of the representable range
        let max = cfg.max_abs_level() as i64;
        for level in [max, -max, max - 1] {
            let bins = binarize(level, &cfg).unwrap();
            let mut it = bins.iter().map(|&(b, _)| b);
            assert_eq!(debinarize(&mut it, &cfg).unwrap(), level);
        }
        assert!(matches!(
            binarize(max + 1, &cfg),
            Err(Error::LevelRange(_))
        ));
    }

    #[test]
    fn prefix_free_on_small_window() {
        let cfg = cfg_n(2);
        let strings: Vec<String> = (-64i64..=64).map(|l| bin_string(l, &cfg)).collect();
        for (i, a) in strings.iter().enumerate() {
            for (j, b) in strings.iter().enumerate() {
                if i != j {
                    assert!(!b.starts_with(a.as_str()), "{a} prefixes {b}");
                }
            }
        }
    }

    #[test]
    fn malformed_unary_run_is_corrupt() {
        let cfg = BinarizerConfig::new(1, 3).unwrap();
        // sig=1 sign=0 absgr1=1, then 5 unary ones: exceeds max order 3
        let mut it = [true, false, true, true, true, true, true, true]
            .into_iter()
            .chain(std::iter::repeat(true));
        assert!(matches!(
            debinarize(&mut it.by_ref(), &cfg),
            Err(Error::CorruptStream(_))
        ));
    }

    #[test]
    fn fresh_context_costs() {
        let cfg10 = cfg_n(10);
        let cfg1 = cfg_n(1);
        let ctxs10 = ContextSet::new(&cfg10);
        let ctxs1 = ContextSet::new(&cfg1);
        assert_eq!(
            estimate_level_bits(&ctxs10, 0, &cfg10, false).unwrap(),
            1.0
        );
        assert_eq!(estimate_level_bits(&ctxs1, 1, &cfg1, false).unwrap(), 3.0);
        assert_eq!(estimate_level_bits(&ctxs1, -4, &cfg1, false).unwrap(), 6.0);
    }

    #[test]
    fn estimate_does_not_touch_contexts() {
        let cfg = BinarizerConfig::default();
        let ctxs = ContextSet::new(&cfg);
        let before = ctxs.clone();
        for level in [-37i64, 0, 5, 1000] {
            estimate_level_bits(&ctxs, level, &cfg, true).unwrap();
        }
        assert_eq!(ctxs, before);
    }

    #[test]
    fn tail_cost_monotone_in_magnitude() {
        let cfg = BinarizerConfig::default();
        let ctxs = ContextSet::new(&cfg);
        let mut prev = 0.0;
        for level in cfg.n_flags as i64 + 1..2000 {
            let cost = estimate_level_bits(&ctxs, level, &cfg, false).unwrap();
            assert!(
                cost >= prev,
                "cost({level}) = {cost} < cost({}) = {prev}",
                level - 1
            );
            prev = cost;
        }
    }

    #[test]
    fn model_count_is_config_function() {
        let a = ContextSet::new(&cfg_n(10));
        assert_eq!(a.model_count(), 2 + 1 + 10 + 16);
        let b = ContextSet::new(&BinarizerConfig::new(3, 7).unwrap());
        assert_eq!(b.model_count(), 2 + 1 + 3 + 8);
    }

    #[test]
    fn commit_matches_encode_context_evolution() {
        let cfg = BinarizerConfig::default();
        let levels = [0i64, 5, -3, 0, 0, 17, -200, 1, 0, 64];
        let mut committed = ContextSet::new(&cfg);
        let mut encoded = ContextSet::new(&cfg);
        let mut enc = Encoder::new();
        let mut prev = false;
        for &l in &levels {
            commit_level(&mut committed, l, &cfg, prev).unwrap();
            encode_level(&mut enc, &mut encoded, l, &cfg, prev).unwrap();
            prev = l != 0;
        }
        assert_eq!(committed, encoded);
    }
}
