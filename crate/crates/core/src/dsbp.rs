//! Reference model of dynamic shift-aware bitwidth prediction and group
//! mantissa alignment.
//!
//! A group is a run of `G` elements along the reduction axis that share one
//! MAC column. For each group the largest (alignment) exponent `E_max` is
//! found, every element gets `shift_i = E_max - E_i`, and the aligned
//! bitwidth is predicted from the `2^-shift_i`-weighted mean of the shifts:
//!
//! ```text
//! b_dyn = ceil( sum(shift_i * 2^-shift_i) / sum(2^-shift_i) )
//! b_g   = round_to_valid(k * b_dyn + b_fix)
//! ```
//!
//! All arithmetic here is exact (integers and dyadic rationals); this module
//! is the golden model the hardware-faithful MPU and FIAU are checked against.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::fp8::{DecodedFp8, Fp8Format, Fp8Tensor};

/// Default group size: one 64-row MAC column.
pub const GROUP_SIZE: usize = 64;

pub const WEIGHT_BITWIDTHS: [u32; 4] = [1, 3, 5, 7];
pub const MAX_INPUT_BITWIDTH: u32 = 11;

/// Which operand a configuration applies to. Determines the valid aligned
/// bitwidth set and the rounding rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OperandKind {
    /// Offline: nearest of {1, 3, 5, 7}, ties up.
    Weight,
    /// On-the-fly: round up, clamped to 1..=11.
    Input,
}

/// Non-negative scaling factor `k` with two fractional bits.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct KFactor {
    quarters: u32,
}

impl KFactor {
    pub const ZERO: Self = Self { quarters: 0 };

    pub const fn from_quarters(quarters: u32) -> Self {
        Self { quarters }
    }

    pub const fn from_int(k: u32) -> Self {
        Self { quarters: k * 4 }
    }

    pub fn from_f64(k: f64) -> Result<Self> {
        let q = k * 4.0;
        if !q.is_finite() || q < 0.0 || q.fract() != 0.0 || q > u32::MAX as f64 {
            return Err(Error::InvalidScale(k.to_string()));
        }
        Ok(Self { quarters: q as u32 })
    }

    #[inline]
    pub const fn quarters(self) -> u32 {
        self.quarters
    }

    pub fn as_f64(self) -> f64 {
        self.quarters as f64 / 4.0
    }

    pub fn is_zero(self) -> bool {
        self.quarters == 0
    }
}

impl fmt::Display for KFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_f64())
    }
}

impl FromStr for KFactor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let v: f64 = s
            .trim()
            .parse()
            .map_err(|_| Error::InvalidScale(s.to_string()))?;
        Self::from_f64(v)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct DsbpConfig {
    pub group_size: usize,
    pub k: KFactor,
    pub b_fix: u32,
    pub kind: OperandKind,
}

impl DsbpConfig {
    pub fn new(kind: OperandKind, k: KFactor, b_fix: u32) -> Self {
        Self {
            group_size: GROUP_SIZE,
            k,
            b_fix,
            kind,
        }
    }

    /// Fixed-bitwidth configuration (`k = 0`).
    pub fn fixed(kind: OperandKind, b_fix: u32) -> Self {
        Self::new(kind, KFactor::ZERO, b_fix)
    }
}

/// Rounds `quarters / 4` onto the valid bitwidth set of `kind`.
pub fn round_to_valid(kind: OperandKind, quarters: u64) -> u32 {
    match kind {
        OperandKind::Input => {
            let up = quarters.div_ceil(4);
            up.clamp(1, MAX_INPUT_BITWIDTH as u64) as u32
        }
        OperandKind::Weight => {
            let mut best = WEIGHT_BITWIDTHS[0];
            let mut best_dist = u64::MAX;
            for &c in &WEIGHT_BITWIDTHS {
                let dist = quarters.abs_diff(4 * c as u64);
                // `<=` walks the ascending set so ties resolve upwards
                if dist <= best_dist {
                    best = c;
                    best_dist = dist;
                }
            }
            best
        }
    }
}

/// Exponent gaps of one group relative to its maximum.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShiftProfile {
    pub e_max: u32,
    pub shifts: Vec<u32>,
}

impl ShiftProfile {
    pub fn from_exponents(exps: &[u32]) -> Result<Self> {
        let e_max = *exps.iter().max().ok_or(Error::EmptyGroup)?;
        let shifts = exps.iter().map(|&e| e_max - e).collect();
        Ok(Self { e_max, shifts })
    }

    pub fn from_shifts(shifts: Vec<u32>) -> Result<Self> {
        if shifts.is_empty() {
            return Err(Error::EmptyGroup);
        }
        let top = *shifts.iter().max().unwrap();
        Ok(Self { e_max: top, shifts })
    }

    /// `w_i = 2^-shift_i`.
    pub fn weights(&self) -> Vec<f64> {
        self.shifts.iter().map(|&s| 2f64.powi(-(s as i32))).collect()
    }

    pub fn max_shift(&self) -> u32 {
        self.shifts.iter().copied().max().unwrap_or(0)
    }

    /// Weighted mean as an exact fraction `(num, den)`.
    pub fn weighted_mean(&self) -> (u128, u128) {
        let top = self.max_shift();
        let mut num = 0u128;
        let mut den = 0u128;
        for &s in &self.shifts {
            let w = 1u128 << (top - s);
            num += s as u128 * w;
            den += w;
        }
        (num, den)
    }
}

/// Predicted bitwidth for one group.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Prediction {
    pub b_dyn: u32,
    pub b_g: u32,
}

impl Prediction {
    pub fn fixed(b_g: u32) -> Self {
        Self { b_dyn: 0, b_g }
    }
}

pub fn predict_bitwidth(profile: &ShiftProfile, cfg: &DsbpConfig) -> Result<Prediction> {
    if profile.shifts.is_empty() {
        return Err(Error::EmptyGroup);
    }
    let (num, den) = profile.weighted_mean();
    let b_dyn = num.div_ceil(den) as u32;
    let quarters = cfg.k.quarters() as u64 * b_dyn as u64 + 4 * cfg.b_fix as u64;
    Ok(Prediction {
        b_dyn,
        b_g: round_to_valid(cfg.kind, quarters),
    })
}

/// `G` elements of one reduction row. Trailing positions past `valid_len`
/// are tiling pads and take no part in prediction or alignment.
#[derive(Clone, Debug, PartialEq)]
pub struct Group {
    pub elements: Vec<DecodedFp8>,
    pub valid_len: usize,
}

impl Group {
    pub fn new(elements: Vec<DecodedFp8>) -> Self {
        let valid_len = elements.len();
        Self {
            elements,
            valid_len,
        }
    }

    /// Pads `values` with `+0.0` up to `size` elements.
    pub fn padded(values: &[DecodedFp8], size: usize) -> Self {
        let mut elements = values.to_vec();
        elements.resize(size.max(values.len()), DecodedFp8::ZERO);
        Self {
            elements,
            valid_len: values.len(),
        }
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    #[inline]
    pub fn is_valid(&self, i: usize) -> bool {
        i < self.valid_len
    }

    pub fn valid(&self) -> &[DecodedFp8] {
        &self.elements[..self.valid_len]
    }

    pub fn shift_profile(&self) -> Result<ShiftProfile> {
        let exps: Vec<u32> = self.valid().iter().map(DecodedFp8::align_exp).collect();
        ShiftProfile::from_exponents(&exps)
    }
}

/// Splits every reduction row (last axis) into groups of `group_size`,
/// zero-padding the final group of each row.
pub fn partition(tensor: &Fp8Tensor, group_size: usize) -> Result<Vec<Group>> {
    if group_size == 0 {
        return Err(Error::InvalidGroupSize(group_size));
    }
    if tensor.is_empty() {
        return Err(Error::EmptyTensor);
    }
    let mut groups = Vec::with_capacity(tensor.rows() * tensor.cols().div_ceil(group_size));
    for r in 0..tensor.rows() {
        for chunk in tensor.row(r).chunks(group_size) {
            groups.push(Group::padded(chunk, group_size));
        }
    }
    Ok(groups)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Rounding {
    #[default]
    HalfAwayFromZero,
    /// Floor of the signed value; bit-identical to the FIAU's
    /// arithmetic-shift truncation.
    Truncate,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Convention {
    /// The group maximum exactly fills `b_g` magnitude bits; container is
    /// `b_g + 1` bits with sign.
    #[default]
    Fitted,
    /// `M' = round(M * 2^(b_g - mant_bits - shift))` taken literally, which
    /// needs a `b_g + 2`-bit container when the hidden bit is included.
    Literal,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct AlignOptions {
    pub rounding: Rounding,
    pub convention: Convention,
}

impl AlignOptions {
    pub fn truncating() -> Self {
        Self {
            rounding: Rounding::Truncate,
            convention: Convention::Fitted,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroupAlignment {
    /// Largest alignment exponent of the group (biased).
    pub e_max: u32,
    pub prediction: Prediction,
    /// Signed aligned mantissas, one per group slot (pads are 0).
    pub aligned: Vec<i32>,
    /// `value_i ~= aligned_i * 2^scale_exp`.
    pub scale_exp: i32,
    /// Container width including the sign bit.
    pub container_bits: u32,
    pub valid_len: usize,
}

impl GroupAlignment {
    #[inline]
    pub fn b_g(&self) -> u32 {
        self.prediction.b_g
    }

    /// Reconstructed real values of the valid (non-pad) elements.
    pub fn reconstruct(&self) -> Vec<f64> {
        let scale = 2f64.powi(self.scale_exp);
        self.aligned[..self.valid_len]
            .iter()
            .map(|&a| a as f64 * scale)
            .collect()
    }
}

/// Computes `sign * sig * 2^exp` rounded to an integer.
fn scale_round(negative: bool, sig: u32, exp: i32, rounding: Rounding) -> i64 {
    let sig = sig as i64;
    if exp >= 0 {
        let v = sig << exp;
        return if negative { -v } else { v };
    }
    let sh = (-exp) as u32;
    if sh >= 40 {
        // sig < 2^6, so everything shifts out
        return match (rounding, negative && sig != 0) {
            (Rounding::Truncate, true) => -1,
            _ => 0,
        };
    }
    match rounding {
        Rounding::HalfAwayFromZero => {
            let mag = (sig + (1 << (sh - 1))) >> sh;
            if negative {
                -mag
            } else {
                mag
            }
        }
        Rounding::Truncate => {
            let v = if negative { -sig } else { sig };
            v >> sh
        }
    }
}

pub fn align_group(
    group: &Group,
    fmt: Fp8Format,
    prediction: Prediction,
    opts: AlignOptions,
) -> Result<GroupAlignment> {
    let b_g = prediction.b_g;
    if !(1..=MAX_INPUT_BITWIDTH).contains(&b_g) {
        return Err(Error::BitwidthOutOfRange {
            what: "aligned",
            value: b_g as i64,
        });
    }
    let profile = group.shift_profile()?;
    let mant = fmt.mant_bits() as i32;
    let magnitude_bits = match opts.convention {
        Convention::Fitted => b_g,
        Convention::Literal => b_g + 1,
    };
    let top_exp = magnitude_bits as i32 - 1 - mant;
    let hi = (1i64 << magnitude_bits) - 1;
    let lo = match opts.rounding {
        Rounding::HalfAwayFromZero => -hi,
        Rounding::Truncate => -hi - 1,
    };

    let mut aligned = vec![0i32; group.len()];
    for (slot, (d, &shift)) in aligned
        .iter_mut()
        .zip(group.valid().iter().zip(&profile.shifts))
    {
        let v = scale_round(d.negative, d.sig, top_exp - shift as i32, opts.rounding);
        *slot = v.clamp(lo, hi) as i32;
    }

    let scale_exp = profile.e_max as i32 - fmt.bias() - (magnitude_bits as i32 - 1);
    Ok(GroupAlignment {
        e_max: profile.e_max,
        prediction,
        aligned,
        scale_exp,
        container_bits: magnitude_bits + 1,
        valid_len: group.valid_len,
    })
}

/// Result of running prediction and alignment over a whole tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantizedTensor {
    pub rows: usize,
    pub cols: usize,
    pub groups_per_row: usize,
    pub groups: Vec<GroupAlignment>,
}

impl QuantizedTensor {
    /// The predicted bitwidth tensor, one entry per group in row-major order.
    pub fn bitwidths(&self) -> Vec<u32> {
        self.groups.iter().map(GroupAlignment::b_g).collect()
    }

    pub fn reconstruct(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.rows * self.cols);
        for g in &self.groups {
            out.extend(g.reconstruct());
        }
        out
    }

    pub fn mean_bitwidth(&self) -> f64 {
        let total: u64 = self.groups.iter().map(|g| g.b_g() as u64).sum();
        total as f64 / self.groups.len() as f64
    }
}

pub fn quantize_group(
    group: &Group,
    fmt: Fp8Format,
    cfg: &DsbpConfig,
    opts: AlignOptions,
) -> Result<GroupAlignment> {
    let prediction = predict_bitwidth(&group.shift_profile()?, cfg)?;
    align_group(group, fmt, prediction, opts)
}

pub fn quantize_tensor(
    tensor: &Fp8Tensor,
    cfg: &DsbpConfig,
    opts: AlignOptions,
) -> Result<QuantizedTensor> {
    let groups = partition(tensor, cfg.group_size)?
        .iter()
        .map(|g| quantize_group(g, tensor.format(), cfg, opts))
        .collect::<Result<Vec<_>>>()?;
    Ok(QuantizedTensor {
        rows: tensor.rows(),
        cols: tensor.cols(),
        groups_per_row: tensor.cols().div_ceil(cfg.group_size),
        groups,
    })
}

/// Signal-to-quantization-noise ratio in dB. Returns `f64::INFINITY` when the
/// reconstruction is lossless.
pub fn sqnr(original: &[f64], reconstructed: &[f64]) -> Result<f64> {
    if original.len() != reconstructed.len() {
        return Err(Error::LengthMismatch {
            left: original.len(),
            right: reconstructed.len(),
        });
    }
    let signal: f64 = original.iter().map(|x| x * x).sum();
    if signal == 0.0 {
        return Err(Error::ZeroSignal);
    }
    let noise: f64 = original
        .iter()
        .zip(reconstructed)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    if noise == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (signal / noise).log10())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fp8::{decode, encode, to_real};

    fn profile(shifts: &[u32]) -> ShiftProfile {
        ShiftProfile::from_shifts(shifts.to_vec()).unwrap()
    }

    #[test]
    fn partition_counts_and_padding() {
        let t = Fp8Tensor::new(Fp8Format::E4M3, vec![128], vec![0x38; 128]).unwrap();
        let g = partition(&t, 64).unwrap();
        assert_eq!(g.len(), 2);
        assert!(g.iter().all(|g| g.valid_len == 64));

        let t = Fp8Tensor::new(Fp8Format::E4M3, vec![100], (0..100).map(|i| i as u8 % 100).collect()).unwrap();
        let g = partition(&t, 64).unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g[0].valid_len, 64);
        assert_eq!(g[1].valid_len, 36);
        assert_eq!(g[1].len(), 64);
        assert!(g[1].elements[36..].iter().all(|d| *d == DecodedFp8::ZERO));
        // identity ordering
        assert_eq!(g[0].elements[..], t.decoded()[..64]);
        assert_eq!(g[1].valid(), &t.decoded()[64..]);

        assert!(matches!(partition(&t, 0), Err(Error::InvalidGroupSize(0))));
    }

    #[test]
    fn partition_runs_along_last_axis() {
        let t = Fp8Tensor::new(Fp8Format::E4M3, vec![3, 70], vec![0x38; 210]).unwrap();
        let g = partition(&t, 64).unwrap();
        assert_eq!(g.len(), 6);
        assert_eq!(g.iter().map(|g| g.valid_len).collect::<Vec<_>>(), [64, 6, 64, 6, 64, 6]);
    }

    #[test]
    fn all_zero_shifts_give_fixed_bitwidth() {
        let cfg = DsbpConfig::new(OperandKind::Weight, KFactor::from_int(1), 5);
        let p = predict_bitwidth(&profile(&[0; 64]), &cfg).unwrap();
        assert_eq!(p, Prediction { b_dyn: 0, b_g: 5 });
    }

    #[test]
    fn mostly_five_shifts() {
        // brute force: num = 63*5/32, den = 63/32 + 1 -> 315/95 = 3.3157..
        let mut s = vec![5u32; 64];
        s[17] = 0;
        let ratio: f64 = (63.0 * 5.0 / 32.0) / (63.0 / 32.0 + 1.0);
        assert!((ratio - 3.315789).abs() < 1e-6);
        let cfg = DsbpConfig::new(OperandKind::Input, KFactor::from_int(1), 0);
        let p = predict_bitwidth(&profile(&s), &cfg).unwrap();
        assert_eq!(p.b_dyn, 4);
        assert_eq!(p.b_g, 4);
    }

    #[test]
    fn four_element_input_example() {
        let cfg = DsbpConfig::new(OperandKind::Input, KFactor::from_int(2), 4);
        let p = predict_bitwidth(&profile(&[0, 1, 2, 3]), &cfg).unwrap();
        assert_eq!(p, Prediction { b_dyn: 1, b_g: 6 });
    }

    #[test]
    fn empty_profile_is_an_error() {
        assert!(ShiftProfile::from_shifts(vec![]).is_err());
        let p = ShiftProfile {
            e_max: 0,
            shifts: vec![],
        };
        let cfg = DsbpConfig::fixed(OperandKind::Input, 3);
        assert!(matches!(predict_bitwidth(&p, &cfg), Err(Error::EmptyGroup)));
    }

    #[test]
    fn weight_rounding_ties_up() {
        let r = |v: u64| round_to_valid(OperandKind::Weight, 4 * v);
        assert_eq!([r(0), r(1), r(2), r(3), r(4), r(5), r(6), r(7), r(8), r(20)], [1, 1, 3, 3, 5, 5, 7, 7, 7, 7]);
        // 2.25 is closer to 3 than to 1; 1.75 closer to 1
        assert_eq!(round_to_valid(OperandKind::Weight, 9), 3);
        assert_eq!(round_to_valid(OperandKind::Weight, 7), 1);
    }

    #[test]
    fn input_rounding_is_ceiling_clamped() {
        let r = |q: u64| round_to_valid(OperandKind::Input, q);
        assert_eq!(r(0), 1);
        assert_eq!(r(1), 1);
        assert_eq!(r(5), 2);
        assert_eq!(r(44), 11);
        assert_eq!(r(45), 11);
        assert_eq!(r(400), 11);
    }

    #[test]
    fn kfactor_parsing() {
        assert_eq!("1".parse::<KFactor>().unwrap(), KFactor::from_int(1));
        assert_eq!("0.25".parse::<KFactor>().unwrap().quarters(), 1);
        assert!("0.3".parse::<KFactor>().is_err());
        assert!("-1".parse::<KFactor>().is_err());
        assert_eq!(KFactor::from_quarters(6).to_string(), "1.5");
    }

    #[test]
    fn max_element_fills_magnitude_bits() {
        // E4M3 0x7E = 1.75 * 2^8, significand 14 (0b1110); plus its neighbour 0x7A
        let fmt = Fp8Format::E4M3;
        let els: Vec<_> = [0x7Eu8, 0x77].iter().map(|&b| decode(b, fmt).unwrap()).collect();
        let a = align_group(&Group::new(els), fmt, Prediction::fixed(7), AlignOptions::default()).unwrap();
        assert_eq!(a.aligned[0], 14 << 3);
        assert!(a.aligned.iter().all(|v| v.abs() < 1 << 7));
        assert_eq!(a.container_bits, 8);
    }

    #[test]
    fn identical_values_reconstruct_exactly() {
        let fmt = Fp8Format::E3M4;
        let d = decode(0xB5, fmt).unwrap();
        let g = Group::new(vec![d; 64]);
        let a = align_group(&g, fmt, Prediction::fixed(5), AlignOptions::default()).unwrap();
        assert!(a.aligned.iter().all(|&v| v == a.aligned[0]));
        let want = to_real(&d, fmt);
        assert!(a.reconstruct().iter().all(|&v| v == want));
    }

    #[test]
    fn zero_only_group() {
        let fmt = Fp8Format::E5M2;
        let z = decode(0x80, fmt).unwrap();
        let g = Group::new(vec![z, DecodedFp8::ZERO, z]);
        let p = g.shift_profile().unwrap();
        assert!(p.shifts.iter().all(|&s| s == 0));
        let cfg = DsbpConfig::new(OperandKind::Input, KFactor::from_int(2), 3);
        let a = quantize_group(&g, fmt, &cfg, AlignOptions::default()).unwrap();
        assert_eq!(a.prediction.b_dyn, 0);
        assert!(a.aligned.iter().all(|&v| v == 0));
    }

    #[test]
    fn pads_are_excluded_from_the_profile() {
        let fmt = Fp8Format::E4M3;
        let one = decode(encode(1.0, fmt).unwrap(), fmt).unwrap();
        let g = Group::padded(&[one; 10], 64);
        let p = g.shift_profile().unwrap();
        assert_eq!(p.shifts.len(), 10);
        assert_eq!(p.max_shift(), 0);
        let a = align_group(&g, fmt, Prediction::fixed(3), AlignOptions::default()).unwrap();
        assert!(a.aligned[10..].iter().all(|&v| v == 0));
        assert_eq!(a.reconstruct(), vec![1.0; 10]);
    }

    #[test]
    fn truncation_is_floor_and_rounding_saturates() {
        let fmt = Fp8Format::E2M5;
        // significand 63 at b_g = 1: 63 * 2^(0 - 5) = 1.97 -> rounds to 2, saturates at 1
        let d = decode(encode(-63.0 / 32.0, fmt).unwrap(), fmt).unwrap();
        let g = Group::new(vec![d]);
        let r = align_group(&g, fmt, Prediction::fixed(1), AlignOptions::default()).unwrap();
        assert_eq!(r.aligned[0], -1);
        let t = align_group(&g, fmt, Prediction::fixed(1), AlignOptions::truncating()).unwrap();
        assert_eq!(t.aligned[0], -2);
    }

    #[test]
    fn literal_convention_uses_wider_container() {
        let fmt = Fp8Format::E4M3;
        let d = decode(0x7E, fmt).unwrap();
        let opts = AlignOptions {
            rounding: Rounding::HalfAwayFromZero,
            convention: Convention::Literal,
        };
        let a = align_group(&Group::new(vec![d]), fmt, Prediction::fixed(7), opts).unwrap();
        assert_eq!(a.container_bits, 9);
        assert_eq!(a.aligned[0], 14 << 4);
        assert_eq!(a.reconstruct()[0], 448.0);
    }

    #[test]
    fn sqnr_edges() {
        assert_eq!(sqnr(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), f64::INFINITY);
        assert_eq!(sqnr(&[1.0, -2.0], &[0.0, 0.0]).unwrap(), 0.0);
        assert!(matches!(sqnr(&[0.0, 0.0], &[1.0, 0.0]), Err(Error::ZeroSignal)));
        assert!(sqnr(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn out_of_range_bitwidth_rejected() {
        let g = Group::new(vec![DecodedFp8::ZERO]);
        assert!(align_group(&g, Fp8Format::E4M3, Prediction::fixed(0), AlignOptions::default()).is_err());
        assert!(align_group(&g, Fp8Format::E4M3, Prediction::fixed(12), AlignOptions::default()).is_err());
    }
}
