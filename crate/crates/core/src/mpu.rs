//! Fixed-point model of the mantissa prediction unit (MPU).
//!
//! Three pipeline stages evaluate
//! `b_g = k * sum(shift_i * 2^-shift_i) / sum(2^-shift_i) + b_fix`:
//!
//! 1. per element, `shift_i << F >> shift_i` and `1 << F >> shift_i`
//!    (truncating shifts of `F`-fractional-bit constants);
//! 2. two exact 64-input adder trees;
//! 3. leading-one normalization of the denominator, an 8-bit reciprocal
//!    LUT, multiply by numerator and `k`, add `b_fix`, saturate to 5 bits.
//!
//! The saturated result is then rounded up and clamped to `1..=11`.

use std::fmt;
use std::sync::OnceLock;

use crate::dsbp::{DsbpConfig, KFactor, OperandKind, MAX_INPUT_BITWIDTH};
use crate::error::{Error, Result};

pub const LUT_BITS: u32 = 8;
pub const SAT_BITS: u32 = 5;
pub const DEFAULT_FRAC_BITS: u32 = 15;
/// Fractional bits kept in the stage-3 result.
pub const RESULT_FRAC_BITS: u32 = 8;
/// Fractional bits of a reciprocal LUT entry (Q1.7).
pub const RECIP_FRAC_BITS: u32 = LUT_BITS - 1;
pub const PIPELINE_STAGES: u32 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct MpuConfig {
    pub frac_bits: u32,
    pub lut_bits: u32,
    pub k: KFactor,
    pub b_fix: u32,
    pub sat_bits: u32,
}

impl MpuConfig {
    pub fn new(k: KFactor, b_fix: u32) -> Self {
        Self {
            frac_bits: DEFAULT_FRAC_BITS,
            lut_bits: LUT_BITS,
            k,
            b_fix,
            sat_bits: SAT_BITS,
        }
    }

    pub fn from_dsbp(cfg: &DsbpConfig) -> Self {
        Self::new(cfg.k, cfg.b_fix)
    }
}

impl Default for MpuConfig {
    fn default() -> Self {
        Self::new(KFactor::ZERO, 0)
    }
}

/// Intermediate values of one prediction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MpuTrace {
    pub stage1_num_terms: Vec<u64>,
    pub stage1_den_terms: Vec<u64>,
    pub stage2_num: u64,
    pub stage2_den: u64,
    /// Leading-one position of the denominator.
    pub den_msb: u32,
    pub lut_index: u8,
    pub stage3_recip: u8,
    /// Result with `RESULT_FRAC_BITS` fractional bits, before saturation.
    pub result_pre_sat: u64,
    pub result_sat: u64,
    pub b_g: u32,
    /// Every denominator term underflowed; `b_g` fell back to `b_fix`.
    pub degenerate: bool,
}

impl fmt::Display for MpuTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "stage1 num terms: {:?}", self.stage1_num_terms)?;
        writeln!(f, "stage1 den terms: {:?}", self.stage1_den_terms)?;
        writeln!(f, "stage2 num = {}  den = {}", self.stage2_num, self.stage2_den)?;
        writeln!(
            f,
            "stage3 den msb = {}  lut[{}] = {} ({:.6})",
            self.den_msb,
            self.lut_index,
            self.stage3_recip,
            self.stage3_recip as f64 / (1 << RECIP_FRAC_BITS) as f64
        )?;
        let scale = (1u64 << RESULT_FRAC_BITS) as f64;
        writeln!(
            f,
            "result pre-sat = {:.6}  sat = {:.6}",
            self.result_pre_sat as f64 / scale,
            self.result_sat as f64 / scale
        )?;
        write!(f, "b_g = {}{}", self.b_g, if self.degenerate { " (degenerate)" } else { "" })
    }
}

/// Reciprocal table indexed by the 8 bits after the leading one of a
/// normalized mantissa `m = 1 + i/256`. Entry `i` is `round(2^15 / (256 + i))`,
/// i.e. `1/m` in Q1.7: 128 for `m = 1`, 64 at the top of the range.
pub fn build_reciprocal_lut(lut_bits: u32) -> Vec<u8> {
    let n = 1u32 << lut_bits;
    let num = 1u64 << (2 * lut_bits - 1);
    (0..n)
        .map(|i| {
            let d = (n + i) as u64;
            ((2 * num + d) / (2 * d)) as u8
        })
        .collect()
}

fn shared_lut() -> &'static [u8] {
    static LUT: OnceLock<Vec<u8>> = OnceLock::new();
    LUT.get_or_init(|| build_reciprocal_lut(LUT_BITS))
}

fn clamp_input(b: u64) -> u32 {
    b.clamp(1, MAX_INPUT_BITWIDTH as u64) as u32
}

pub fn mpu_predict(shifts: &[u32], cfg: &MpuConfig) -> Result<(u32, MpuTrace)> {
    if shifts.is_empty() {
        return Err(Error::EmptyGroup);
    }
    if shifts.len() > 64 {
        return Err(Error::LengthMismatch {
            left: shifts.len(),
            right: 64,
        });
    }
    if cfg.lut_bits != LUT_BITS {
        return Err(Error::BitwidthOutOfRange {
            what: "reciprocal LUT",
            value: cfg.lut_bits as i64,
        });
    }
    let f = cfg.frac_bits;

    // stage 1
    let shr = |v: u64, s: u32| if s >= 64 { 0 } else { v >> s };
    let num_terms: Vec<u64> = shifts.iter().map(|&s| shr((s as u64) << f, s)).collect();
    let den_terms: Vec<u64> = shifts.iter().map(|&s| shr(1u64 << f, s)).collect();

    // stage 2
    let num: u64 = num_terms.iter().sum();
    let den: u64 = den_terms.iter().sum();

    let mut trace = MpuTrace {
        stage1_num_terms: num_terms,
        stage1_den_terms: den_terms,
        stage2_num: num,
        stage2_den: den,
        den_msb: 0,
        lut_index: 0,
        stage3_recip: 0,
        result_pre_sat: 0,
        result_sat: 0,
        b_g: clamp_input(cfg.b_fix as u64),
        degenerate: false,
    };
    if den == 0 {
        trace.degenerate = true;
        return Ok((trace.b_g, trace));
    }

    // stage 3
    let msb = 63 - den.leading_zeros();
    let index = if msb >= LUT_BITS {
        (den >> (msb - LUT_BITS)) & 0xFF
    } else {
        (den << (LUT_BITS - msb)) & 0xFF
    } as u8;
    let recip = shared_lut()[index as usize];

    // num/den ~= num * recip / 2^(RECIP_FRAC_BITS + msb); k has 2 fractional bits
    let product = num as u128 * recip as u128 * cfg.k.quarters() as u128;
    let drop = RECIP_FRAC_BITS + msb + 2;
    let scaled = if drop >= RESULT_FRAC_BITS {
        product >> (drop - RESULT_FRAC_BITS)
    } else {
        product << (RESULT_FRAC_BITS - drop)
    };
    let pre_sat = scaled + ((cfg.b_fix as u128) << RESULT_FRAC_BITS);
    let sat_max = (1u128 << (cfg.sat_bits + RESULT_FRAC_BITS)) - 1;
    let sat = pre_sat.min(sat_max) as u64;

    let frac_mask = (1u64 << RESULT_FRAC_BITS) - 1;
    let ceil = (sat + frac_mask) >> RESULT_FRAC_BITS;

    trace.den_msb = msb;
    trace.lut_index = index;
    trace.stage3_recip = recip;
    trace.result_pre_sat = pre_sat.min(u64::MAX as u128) as u64;
    trace.result_sat = sat;
    trace.b_g = clamp_input(ceil);
    Ok((trace.b_g, trace))
}

/// Exact real-valued `k * ratio + b_fix`, rounded up and clamped to `1..=11`.
/// The ceiling is taken after scaling, unlike the offline reference which
/// scales the rounded-up `b_dyn`.
pub fn exact_eq1(shifts: &[u32], k: KFactor, b_fix: u32) -> u32 {
    let top = shifts.iter().copied().max().unwrap_or(0);
    let mut num = 0u128;
    let mut den = 0u128;
    for &s in shifts {
        let w = 1u128 << (top - s);
        num += s as u128 * w;
        den += w;
    }
    // ceil((k_q * num / den + 4 * b_fix) / 4) = ceil((k_q*num + 4*b_fix*den) / (4*den))
    let total = k.quarters() as u128 * num + 4 * b_fix as u128 * den;
    clamp_input(total.div_ceil(4 * den) as u64)
}

/// Input-side configuration adapter: the MPU only runs for inputs.
pub fn predict_input(shifts: &[u32], cfg: &DsbpConfig) -> Result<(u32, MpuTrace)> {
    debug_assert_eq!(cfg.kind, OperandKind::Input);
    mpu_predict(shifts, &MpuConfig::from_dsbp(cfg))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lut_endpoints() {
        let lut = build_reciprocal_lut(8);
        assert_eq!(lut.len(), 256);
        assert_eq!(lut[0], 128);
        assert_eq!(lut[255], 64);
        assert!(lut.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn all_zero_shifts() {
        let cfg = MpuConfig::new(KFactor::from_int(2), 6);
        let (b, t) = mpu_predict(&[0; 64], &cfg).unwrap();
        assert_eq!(t.stage2_num, 0);
        assert_eq!(t.stage2_den, 64 << DEFAULT_FRAC_BITS);
        assert_eq!(b, 6);
    }

    #[test]
    fn small_padded_profile() {
        let mut s = vec![0u32; 64];
        s[..4].copy_from_slice(&[0, 1, 2, 3]);
        let cfg = MpuConfig::new(KFactor::from_int(1), 0);
        let (b, t) = mpu_predict(&s, &cfg).unwrap();
        // 61 zero shifts plus 1, 2, 3: den = 61 + 0.5 + 0.25 + 0.125
        let exact = 1.375 / 61.875;
        assert!((t.stage2_num as f64 / t.stage2_den as f64 - exact).abs() < 1e-12);
        assert_eq!(b, 1);
        assert_eq!(exact_eq1(&s, KFactor::from_int(1), 0), 1);
    }

    #[test]
    fn zero_k_annihilates_shifts() {
        let cfg = MpuConfig::new(KFactor::ZERO, 7);
        for shifts in [[0u32, 9, 9, 9], [0, 1, 2, 3], [3, 3, 0, 15]] {
            assert_eq!(mpu_predict(&shifts, &cfg).unwrap().0, 7);
        }
    }

    #[test]
    fn adder_tree_sums_terms() {
        let s: Vec<u32> = (0..64).map(|i| (i * 7 % 19) as u32).collect();
        let (_, t) = mpu_predict(&s, &MpuConfig::new(KFactor::from_int(1), 2)).unwrap();
        assert_eq!(t.stage2_num, t.stage1_num_terms.iter().sum::<u64>());
        assert_eq!(t.stage2_den, t.stage1_den_terms.iter().sum::<u64>());
    }

    #[test]
    fn degenerate_denominator_falls_back() {
        let (b, t) = mpu_predict(&[20, 30], &MpuConfig::new(KFactor::from_int(2), 4)).unwrap();
        assert!(t.degenerate);
        assert_eq!(b, 4);
        let (b, _) = mpu_predict(&[40], &MpuConfig::new(KFactor::from_int(2), 0)).unwrap();
        assert_eq!(b, 1);
    }

    #[test]
    fn saturation_caps_large_results() {
        let mut s = vec![6u32; 64];
        s[0] = 0;
        let (b, t) = mpu_predict(&s, &MpuConfig::new(KFactor::from_int(2), 30)).unwrap();
        assert_eq!(t.result_sat, (1 << (SAT_BITS + RESULT_FRAC_BITS)) - 1);
        assert!(t.result_pre_sat > t.result_sat);
        assert_eq!(b, 11);
    }

    #[test]
    fn rejects_bad_lengths() {
        assert!(mpu_predict(&[], &MpuConfig::default()).is_err());
        assert!(mpu_predict(&[0; 65], &MpuConfig::default()).is_err());
    }

    #[test]
    fn trace_renders() {
        let (_, t) = mpu_predict(&[0, 1, 2], &MpuConfig::new(KFactor::from_int(1), 3)).unwrap();
        let text = t.to_string();
        assert!(text.contains("stage2 num"));
        assert!(text.ends_with("b_g = 4"));
    }
}
