//! Precision-scalable INT MAC array.
//!
//! The array has 64 rows and 96 columns of 2-bit cells. A `W`-bit weight is
//! split into `W/2` two-bit slices stored in adjacent columns; only the most
//! significant slice is signed (SNF set). Inputs arrive bit-serially, MSB
//! first, with the MSB carrying negative weight. Per input bit, each column's
//! adder tree produces `sum(bit_i * cell_i)`; the fusion unit recombines the
//! columns of a channel and the result is shift-accumulated over input bits.

use crate::dsbp::{
    align_group, predict_bitwidth, round_to_valid, AlignOptions, DsbpConfig, Group, OperandKind,
    Prediction,
};
use crate::error::{Error, Result};
use crate::fiau::align_input_group;
use crate::fp8::Fp8Format;
use crate::mpu::{mpu_predict, MpuConfig, MpuTrace};

pub const ROWS: usize = 64;
pub const COLUMNS: usize = 96;
pub const WEIGHT_WIDTHS: [u32; 4] = [2, 4, 6, 8];
pub const MIN_INPUT_WIDTH: u32 = 2;
pub const MAX_INPUT_WIDTH: u32 = 12;

/// A two's-complement weight split into 2-bit slices, LSB slice first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightSlices {
    pub slices: Vec<i8>,
    pub width: u32,
}

impl WeightSlices {
    /// Signed-number flag of slice `j`.
    #[inline]
    pub fn snf(&self, j: usize) -> bool {
        j + 1 == self.slices.len()
    }

    pub fn recompose(&self) -> i32 {
        self.slices
            .iter()
            .rev()
            .fold(0i32, |acc, &s| acc * 4 + s as i32)
    }
}

fn check_weight_width(width: u32) -> Result<()> {
    if WEIGHT_WIDTHS.contains(&width) {
        Ok(())
    } else {
        Err(Error::BitwidthOutOfRange {
            what: "weight",
            value: width as i64,
        })
    }
}

fn check_input_width(width: u32) -> Result<()> {
    if (MIN_INPUT_WIDTH..=MAX_INPUT_WIDTH).contains(&width) {
        Ok(())
    } else {
        Err(Error::BitwidthOutOfRange {
            what: "input",
            value: width as i64,
        })
    }
}

fn check_range(value: i32, width: u32) -> Result<()> {
    let lo = -(1i32 << (width - 1));
    let hi = (1i32 << (width - 1)) - 1;
    if value < lo || value > hi {
        return Err(Error::ValueOutOfRange {
            value: value as i64,
            width,
        });
    }
    Ok(())
}

pub fn decompose_weight(w: i32, width: u32) -> Result<WeightSlices> {
    check_weight_width(width)?;
    check_range(w, width)?;
    let n = (width / 2) as usize;
    let bits = w as u32;
    let slices = (0..n)
        .map(|j| {
            let field = ((bits >> (2 * j)) & 0b11) as i8;
            if j + 1 == n && field >= 2 {
                field - 4
            } else {
                field
            }
        })
        .collect();
    Ok(WeightSlices { slices, width })
}

/// One column's adder tree: `sum(bit_i * cell_i)` over the set bits of
/// `input_bits`. Cells are 2-bit fields, read as signed when `snf` is set.
pub fn column_mac(input_bits: u64, cells: &[u8], snf: bool) -> i32 {
    cells
        .iter()
        .take(ROWS)
        .enumerate()
        .filter(|(i, _)| (input_bits >> i) & 1 == 1)
        .map(|(_, &c)| {
            let c = (c & 0b11) as i32;
            if snf && c >= 2 {
                c - 4
            } else {
                c
            }
        })
        .sum()
}

/// Column recombination routing for one output channel.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FusionPath {
    /// 2/4/8-bit weights: pairwise shift-add tree.
    Regular,
    /// 6-bit weights: three columns fused in one step.
    SixBit,
}

impl FusionPath {
    pub fn for_width(width: u32) -> Self {
        if width == 6 {
            Self::SixBit
        } else {
            Self::Regular
        }
    }

    /// Recombines per-column partial sums (LSB slice first).
    pub fn fuse(self, cols: &[i32]) -> i32 {
        match (self, cols.len()) {
            (Self::SixBit, 3) => cols[0] + (cols[1] << 2) + (cols[2] << 4),
            (_, 1) => cols[0],
            (_, 2) => cols[0] + (cols[1] << 2),
            (_, 4) => (cols[0] + (cols[1] << 2)) + ((cols[2] + (cols[3] << 2)) << 4),
            // generic shift-add for any other arrangement
            _ => cols.iter().rev().fold(0, |acc, &c| (acc << 2) + c),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ArrayConfig {
    pub rows: usize,
    pub columns: usize,
    pub weight_width: u32,
    pub input_width: u32,
}

impl ArrayConfig {
    pub fn new(input_width: u32, weight_width: u32) -> Result<Self> {
        check_input_width(input_width)?;
        check_weight_width(weight_width)?;
        Ok(Self {
            rows: ROWS,
            columns: COLUMNS,
            weight_width,
            input_width,
        })
    }

    pub fn columns_per_channel(&self) -> usize {
        (self.weight_width / 2) as usize
    }

    /// Output channels per pass: `192 / W`.
    pub fn channels(&self) -> usize {
        self.columns / self.columns_per_channel()
    }
}

/// Weight storage of the 64x96 array, one 2-bit field per cell.
#[derive(Clone, Debug)]
pub struct MacArray {
    cfg: ArrayConfig,
    /// `cells[col][row]`, loaded channels only
    cells: Vec<Vec<u8>>,
    channels_loaded: usize,
}

impl MacArray {
    /// Loads up to `cfg.channels()` weight vectors (each at most 64 long).
    pub fn load(cfg: ArrayConfig, weights: &[Vec<i32>]) -> Result<Self> {
        if weights.len() > cfg.channels() {
            return Err(Error::Incompatible(format!(
                "{} channels exceed the {} available at {}-bit weights",
                weights.len(),
                cfg.channels(),
                cfg.weight_width
            )));
        }
        let per = cfg.columns_per_channel();
        // only the columns of loaded channels are materialized
        let mut cells = vec![vec![0u8; cfg.rows]; weights.len() * per];
        for (ch, w) in weights.iter().enumerate() {
            if w.len() > cfg.rows {
                return Err(Error::LengthMismatch {
                    left: w.len(),
                    right: cfg.rows,
                });
            }
            for (row, &v) in w.iter().enumerate() {
                let s = decompose_weight(v, cfg.weight_width)?;
                for (j, &slice) in s.slices.iter().enumerate() {
                    cells[ch * per + j][row] = (slice as u8) & 0b11;
                }
            }
        }
        Ok(Self {
            cfg,
            cells,
            channels_loaded: weights.len(),
        })
    }

    pub fn config(&self) -> &ArrayConfig {
        &self.cfg
    }

    /// Runs one bit-serial MAC pass over the loaded channels.
    pub fn compute(&self, inputs: &[i32]) -> Result<Vec<i32>> {
        let cfg = &self.cfg;
        if inputs.len() > cfg.rows {
            return Err(Error::LengthMismatch {
                left: inputs.len(),
                right: cfg.rows,
            });
        }
        for &x in inputs {
            check_range(x, cfg.input_width)?;
        }
        let per = cfg.columns_per_channel();
        let path = FusionPath::for_width(cfg.weight_width);
        let mut acc = vec![0i32; self.channels_loaded];
        let mut partial = vec![0i32; per];
        for bit in (0..cfg.input_width).rev() {
            let plane = inputs
                .iter()
                .enumerate()
                .fold(0u64, |m, (i, &x)| m | ((((x >> bit) & 1) as u64) << i));
            for (ch, a) in acc.iter_mut().enumerate() {
                for (j, p) in partial.iter_mut().enumerate() {
                    *p = column_mac(plane, &self.cells[ch * per + j], j + 1 == per);
                }
                let fused = path.fuse(&partial);
                let term = if bit == cfg.input_width - 1 { -fused } else { fused };
                *a = (*a << 1) + term;
            }
        }
        Ok(acc)
    }
}

/// Dot product of `inputs` (I-bit) and `weights` (W-bit) through the sliced,
/// bit-serial datapath of a single channel.
pub fn fused_mac(inputs: &[i32], weights: &[i32], cfg: &ArrayConfig) -> Result<i32> {
    if inputs.len() != weights.len() {
        return Err(Error::LengthMismatch {
            left: inputs.len(),
            right: weights.len(),
        });
    }
    let array = MacArray::load(*cfg, &[weights.to_vec()])?;
    Ok(array.compute(inputs)?[0])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PipelineMode {
    /// `k` ignored, bitwidths are `round_to_valid(b_fix)`, MPU clock-gated.
    Fixed,
    /// Weights predicted offline by the reference, inputs by the MPU.
    Dynamic,
}

impl std::fmt::Display for PipelineMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Fixed => "fixed",
            Self::Dynamic => "dynamic",
        })
    }
}

/// One operand after bitwidth selection and alignment.
#[derive(Clone, Debug, PartialEq)]
pub struct AlignedOperand {
    pub values: Vec<i32>,
    pub prediction: Prediction,
    pub e_max: u32,
    pub scale_exp: i32,
    pub mpu: Option<MpuTrace>,
}

impl AlignedOperand {
    /// Container width including sign.
    pub fn width(&self) -> u32 {
        self.prediction.b_g + 1
    }
}

/// Offline weight path: reference prediction and round-half-away alignment.
pub fn align_weight_operand(
    group: &Group,
    fmt: Fp8Format,
    cfg: &DsbpConfig,
    mode: PipelineMode,
) -> Result<AlignedOperand> {
    let prediction = match mode {
        PipelineMode::Fixed => Prediction::fixed(round_to_valid(OperandKind::Weight, 4 * cfg.b_fix as u64)),
        PipelineMode::Dynamic => {
            let cfg = DsbpConfig {
                kind: OperandKind::Weight,
                ..*cfg
            };
            predict_bitwidth(&group.shift_profile()?, &cfg)?
        }
    };
    let a = align_group(group, fmt, prediction, AlignOptions::default())?;
    Ok(AlignedOperand {
        values: a.aligned,
        prediction,
        e_max: a.e_max,
        scale_exp: a.scale_exp,
        mpu: None,
    })
}

/// On-the-fly input path: MPU prediction (dynamic mode) and FIAU alignment.
pub fn align_input_operand(
    group: &Group,
    fmt: Fp8Format,
    cfg: &DsbpConfig,
    mode: PipelineMode,
) -> Result<AlignedOperand> {
    let (prediction, mpu) = match mode {
        PipelineMode::Fixed => (
            Prediction::fixed(round_to_valid(OperandKind::Input, 4 * cfg.b_fix as u64)),
            None,
        ),
        PipelineMode::Dynamic => {
            let profile = group.shift_profile()?;
            let (num, den) = profile.weighted_mean();
            let (b_g, trace) = mpu_predict(&profile.shifts, &MpuConfig::from_dsbp(cfg))?;
            (
                Prediction {
                    b_dyn: num.div_ceil(den) as u32,
                    b_g,
                },
                Some(trace),
            )
        }
    };
    let (e_max, values) = align_input_group(group, fmt.mant_bits(), prediction.b_g)?;
    let scale_exp = e_max as i32 - fmt.bias() - (prediction.b_g as i32 - 1);
    Ok(AlignedOperand {
        values,
        prediction,
        e_max,
        scale_exp,
        mpu,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct MacOutcome {
    /// Integer MAC result from the array.
    pub integer: i32,
    /// `integer * 2^(input.scale_exp + weight.scale_exp)`.
    pub value: f64,
    pub input: AlignedOperand,
    pub weight: AlignedOperand,
}

/// Integer MAC of two aligned operands, rescaled to a real.
pub fn mac_aligned(input: &AlignedOperand, weight: &AlignedOperand) -> Result<(i32, f64)> {
    let cfg = ArrayConfig::new(input.width(), weight.width())?;
    let integer = fused_mac(&input.values, &weight.values, &cfg)?;
    let value = integer as f64 * 2f64.powi(input.scale_exp + weight.scale_exp);
    Ok((integer, value))
}

/// Full floating-point MAC of one 64-element input group against one weight
/// group: bitwidth selection, alignment, sliced INT MAC, rescale.
pub fn fp_macro_mac(
    x: &Group,
    x_fmt: Fp8Format,
    w: &Group,
    w_fmt: Fp8Format,
    input_cfg: &DsbpConfig,
    weight_cfg: &DsbpConfig,
    mode: PipelineMode,
) -> Result<MacOutcome> {
    if x.len() != w.len() || x.len() > ROWS {
        return Err(Error::Incompatible(format!(
            "group sizes {} and {} (array has {} rows)",
            x.len(),
            w.len(),
            ROWS
        )));
    }
    let input = align_input_operand(x, x_fmt, input_cfg, mode)?;
    let weight = align_weight_operand(w, w_fmt, weight_cfg, mode)?;
    let (integer, value) = mac_aligned(&input, &weight)?;
    Ok(MacOutcome {
        integer,
        value,
        input,
        weight,
    })
}
