//! Adaptive binary probability model for one bin position.

/// Number of fractional bits in the probability fixed point.
pub const PROB_BITS: u32 = 16;
/// Fixed-point representation of probability 1.0.
pub const PROB_ONE: u32 = 1 << PROB_BITS;
/// Probabilities are clamped to `[PROB_MIN, PROB_ONE - PROB_MIN]` (2^-10).
pub const PROB_MIN: u16 = (PROB_ONE >> 10) as u16;
/// Exponential-smoothing rate 2^-ADAPT_SHIFT for on-the-fly updates.
pub const ADAPT_SHIFT: u32 = 5;

/// Cost of a bypass bin, in `2^-16`-bit units (exactly one bit).
pub const BYPASS_COST_UNITS: u64 = PROB_ONE as u64;

/// Adaptive probability state of one bin position.
///
/// Stores the probability of the bin value 0 as a 16-fractional-bit fixed
/// point. A fresh model starts at exactly 1/2 and moves toward each observed
/// bin by exponential smoothing, clamped away from certainty so that a
/// mispredicted bin never costs more than ~10 bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ContextModel {
    p_zero: u16,
}

impl Default for ContextModel {
    fn default() -> Self {
        Self::new()
    }
}

impl ContextModel {
    /// Fresh model: p(0) = 1/2 exactly.
    pub fn new() -> Self {
        Self {
            p_zero: (PROB_ONE / 2) as u16,
        }
    }

    /// Model with an explicit zero-bin probability (clamped). Mainly useful
    /// for frozen-probability coding and tests.
    pub fn with_p_zero(p_zero: u16) -> Self {
        Self {
            p_zero: p_zero.clamp(PROB_MIN, (PROB_ONE - PROB_MIN as u32) as u16),
        }
    }

    /// Probability of the 0-bin in `2^-16` units.
    pub fn p_zero(&self) -> u16 {
        self.p_zero
    }

    /// Move p(0) toward the observed bin: `p0 += ((1-bin) - p0) * 2^-5`,
    /// clamped to `[2^-10, 1 - 2^-10]`.
    pub fn update(&mut self, bin: bool) {
        let target: i32 = if bin { 0 } else { PROB_ONE as i32 };
        let p = self.p_zero as i32;
        let next = p + ((target - p) >> ADAPT_SHIFT);
        self.p_zero = next.clamp(PROB_MIN as i32, (PROB_ONE - PROB_MIN as u32) as i32) as u16;
    }

    /// Code length of `bin` under this model, in `2^-16`-bit units.
    /// Pure: never mutates the model.
    pub fn cost_units(&self, bin: bool) -> u64 {
        let p = if bin {
            PROB_ONE - self.p_zero as u32
        } else {
            self.p_zero as u32
        };
        neg_log2_units(p)
    }

    /// Code length of `bin` in fractional bits (`-log2 p`).
    pub fn cost_bits(&self, bin: bool) -> f64 {
        self.cost_units(bin) as f64 / PROB_ONE as f64
    }
}

/// Fractional part of log2 over one octave: `LOG2_FRAC[i] ~= log2(1 + i/64) * 2^16`.
/// Values between entries are linearly interpolated so cost estimates are
/// deterministic integer arithmetic on every platform.
const LOG2_FRAC: [u32; 64] = [
    0, 1466, 2909, 4331, 5732, 7112, 8473, 9814, //
    11136, 12440, 13727, 14996, 16248, 17484, 18704, 19909, //
    21098, 22272, 23433, 24579, 25711, 26830, 27936, 29029, //
    30109, 31178, 32234, 33279, 34312, 35334, 36346, 37346, //
    38336, 39316, 40286, 41246, 42196, 43137, 44068, 44990, //
    45904, 46809, 47705, 48593, 49472, 50344, 51207, 52063, //
    52911, 53751, 54584, 55410, 56229, 57040, 57845, 58643, //
    59434, 60219, 60997, 61769, 62534, 63294, 64047, 64794,
];

/// `-log2(p / 2^16)` in `2^-16`-bit units for `p` in `[1, 2^16)`.
fn neg_log2_units(p: u32) -> u64 {
    debug_assert!(p >= 1 && p < PROB_ONE);
    let msb = 31 - p.leading_zeros(); // floor(log2 p), 0..=15
    let mantissa = p << (15 - msb); // normalized to [2^15, 2^16)
    let idx = ((mantissa >> 9) - 64) as usize; // 0..=63
    let rem = (mantissa & 511) as u64;
    let f0 = LOG2_FRAC[idx] as u64;
    let f1 = if idx == 63 {
        PROB_ONE as u64
    } else {
        LOG2_FRAC[idx + 1] as u64
    };
    let frac = f0 + (((f1 - f0) * rem) >> 9);
    // -log2(p/2^16) = (16 - msb) - log2(mantissa/2^15)
    ((16 - msb) as u64) * PROB_ONE as u64 - frac
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fresh_model_is_half() {
        let ctx = ContextModel::new();
        assert_eq!(ctx.p_zero(), 32768);
        assert_eq!(ctx.cost_bits(false), 1.0);
        assert_eq!(ctx.cost_bits(true), 1.0);
        assert_eq!(ContextModel::new(), ContextModel::new());
    }

    #[test]
    fn single_zero_observation() {
        let mut ctx = ContextModel::new();
        ctx.update(false);
        // 0.5 + (1 - 0.5) * 2^-5 = 0.515625
        assert_eq!(ctx.p_zero() as f64 / PROB_ONE as f64, 0.515625);
    }

    #[test]
    fn repeated_observation_reaches_clamp() {
        let mut ctx = ContextModel::new();
        for _ in 0..1000 {
            ctx.update(false);
        }
        assert_eq!(ctx.p_zero() as u32, PROB_ONE - PROB_MIN as u32);
        let mut ctx = ContextModel::new();
        for _ in 0..1000 {
            ctx.update(true);
        }
        assert_eq!(ctx.p_zero(), PROB_MIN);
    }

    #[test]
    fn alternating_bins_stay_near_half() {
        let mut ctx = ContextModel::new();
        for i in 0..10_000 {
            ctx.update(i % 2 == 0);
            let p = ctx.p_zero() as f64 / PROB_ONE as f64;
            assert!((0.4..=0.6).contains(&p), "p0 left the band: {p}");
        }
    }

    #[test]
    fn cost_is_side_effect_free() {
        let mut ctx = ContextModel::new();
        ctx.update(true);
        ctx.update(true);
        let snapshot = ctx;
        for _ in 0..100 {
            let _ = ctx.cost_bits(false);
            let _ = ctx.cost_bits(true);
        }
        assert_eq!(ctx, snapshot);
    }

    #[test]
    fn cost_matches_exact_log_within_table_precision() {
        // 1/256-bit precision contract for the interpolated lookup.
        for p in (64u32..65472).step_by(37) {
            let approx = neg_log2_units(p) as f64 / PROB_ONE as f64;
            let exact = -((p as f64) / PROB_ONE as f64).log2();
            assert!(
                (approx - exact).abs() < 1.0 / 256.0,
                "p={p}: approx {approx} vs exact {exact}"
            );
        }
    }

    #[test]
    fn clamped_cost_is_about_ten_bits() {
        let ctx = ContextModel::with_p_zero(PROB_MIN);
        assert!((ctx.cost_bits(false) - 10.0).abs() < 0.01);
        let c = ContextModel::with_p_zero(3 << 14); // p0 = 0.75
        assert!((c.cost_bits(false) - 0.415).abs() < 0.01);
    }
}
