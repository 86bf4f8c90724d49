//! FP8 minifloat codec for the four 8-bit layouts E2M5, E3M4, E4M3 and E5M2.
//!
//! Decoding exposes the sign / biased exponent / significand planes used by
//! the alignment pipeline. The significand of a normal value carries its
//! hidden leading one, so `value = sign * sig * 2^(max(e_raw, 1) - bias - mant_bits)`
//! holds for every finite encoding, subnormals included.
//!
//! Special values: E5M2 reserves the all-ones exponent for Inf/NaN, E4M3
//! reserves only `S.1111.111` as NaN, E2M5 and E3M4 have no specials. The
//! macro datapath has no way to carry specials, so decoding rejects them.

use std::fmt;

use crate::error::{Error, Result};

/// Exponent/mantissa split of an 8-bit float.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Fp8Format {
    exp_bits: u32,
}

impl Fp8Format {
    pub const E2M5: Self = Self { exp_bits: 2 };
    pub const E3M4: Self = Self { exp_bits: 3 };
    pub const E4M3: Self = Self { exp_bits: 4 };
    pub const E5M2: Self = Self { exp_bits: 5 };

    pub const ALL: [Self; 4] = [Self::E2M5, Self::E3M4, Self::E4M3, Self::E5M2];

    pub fn new(exp_bits: u32) -> Result<Self> {
        match exp_bits {
            2..=5 => Ok(Self { exp_bits }),
            other => Err(Error::UnsupportedFormat(other)),
        }
    }

    #[inline]
    pub const fn exp_bits(self) -> u32 {
        self.exp_bits
    }

    #[inline]
    pub const fn mant_bits(self) -> u32 {
        7 - self.exp_bits
    }

    #[inline]
    pub const fn bias(self) -> i32 {
        (1 << (self.exp_bits - 1)) - 1
    }

    #[inline]
    const fn exp_mask(self) -> u32 {
        (1 << self.exp_bits) - 1
    }

    #[inline]
    const fn mant_mask(self) -> u32 {
        (1 << self.mant_bits()) - 1
    }

    /// True if the 8-bit pattern denotes a finite number in this format.
    pub fn is_finite_code(self, byte: u8) -> bool {
        let e = (byte as u32 >> self.mant_bits()) & self.exp_mask();
        let m = byte as u32 & self.mant_mask();
        match self.exp_bits {
            5 => e != self.exp_mask(),
            4 => !(e == self.exp_mask() && m == self.mant_mask()),
            _ => true,
        }
    }

    /// Largest finite positive encoding.
    pub fn max_finite_code(self) -> u8 {
        match self.exp_bits {
            // 0.11110.11
            5 => 0x7B,
            // 0.1111.110
            4 => 0x7E,
            _ => 0x7F,
        }
    }

    pub fn max_finite(self) -> f64 {
        // max_finite_code is always finite
        to_real(&decode(self.max_finite_code(), self).unwrap(), self)
    }

    /// Largest biased exponent field that can appear in a finite value.
    pub fn max_exp_field(self) -> u32 {
        (self.max_finite_code() as u32 >> self.mant_bits()) & self.exp_mask()
    }

    pub fn name(self) -> String {
        format!("E{}M{}", self.exp_bits, self.mant_bits())
    }
}

impl fmt::Display for Fp8Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "E{}M{}", self.exp_bits, self.mant_bits())
    }
}

impl std::str::FromStr for Fp8Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "E2M5" => Ok(Self::E2M5),
            "E3M4" => Ok(Self::E3M4),
            "E4M3" => Ok(Self::E4M3),
            "E5M2" => Ok(Self::E5M2),
            _ => Err(Error::Parse {
                location: "format".into(),
                detail: format!("unknown FP8 format `{s}`"),
            }),
        }
    }
}

/// Sign / exponent / significand planes of one finite FP8 value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct DecodedFp8 {
    pub negative: bool,
    /// Biased exponent field as stored (0 for zero and subnormals).
    pub e_raw: u32,
    /// Significand integer, hidden bit included for normals.
    pub sig: u32,
}

impl DecodedFp8 {
    pub const ZERO: Self = Self {
        negative: false,
        e_raw: 0,
        sig: 0,
    };

    #[inline]
    pub fn sign(&self) -> i32 {
        if self.negative {
            -1
        } else {
            1
        }
    }

    #[inline]
    pub fn is_zero(&self) -> bool {
        self.sig == 0
    }

    #[inline]
    pub fn is_subnormal(&self) -> bool {
        self.e_raw == 0 && self.sig != 0
    }

    /// Exponent used for alignment. Zero and subnormals live in the same
    /// binade as exponent field 1.
    #[inline]
    pub fn align_exp(&self) -> u32 {
        self.e_raw.max(1)
    }

    /// Significand with the sign applied.
    #[inline]
    pub fn signed_sig(&self) -> i32 {
        self.sign() * self.sig as i32
    }
}

pub fn decode(byte: u8, fmt: Fp8Format) -> Result<DecodedFp8> {
    if !fmt.is_finite_code(byte) {
        return Err(Error::NonFinite {
            byte,
            format: fmt.name(),
        });
    }
    let negative = byte & 0x80 != 0;
    let e_raw = (byte as u32 >> fmt.mant_bits()) & fmt.exp_mask();
    let m = byte as u32 & fmt.mant_mask();
    let sig = if e_raw == 0 { m } else { m | (1 << fmt.mant_bits()) };
    Ok(DecodedFp8 { negative, e_raw, sig })
}

pub fn to_real(d: &DecodedFp8, fmt: Fp8Format) -> f64 {
    let exp = d.align_exp() as i32 - fmt.bias() - fmt.mant_bits() as i32;
    let mag = d.sig as f64 * 2f64.powi(exp);
    if d.negative {
        -mag
    } else {
        mag
    }
}

/// Round-to-nearest-even quantization with saturation to the largest finite
/// magnitude. The sign of zero is preserved.
pub fn encode(value: f64, fmt: Fp8Format) -> Result<u8> {
    if value.is_nan() {
        return Err(Error::NanInput);
    }
    let sign_bit = if value.is_sign_negative() { 0x80 } else { 0 };
    let mag = value.abs();
    let max_code = fmt.max_finite_code();
    let real = |code: u8| to_real(&decode(code, fmt).unwrap(), fmt);

    if mag >= real(max_code) {
        return Ok(max_code | sign_bit);
    }
    // Positive finite codes are monotone in their bit pattern; find the
    // largest one not above `mag`.
    let (mut lo, mut hi) = (0u8, max_code);
    while lo < hi {
        let mid = lo + (hi - lo).div_ceil(2);
        if real(mid) <= mag {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    let below = real(lo);
    if below == mag {
        return Ok(lo | sign_bit);
    }
    let above = real(lo + 1);
    // Exact in f64: both neighbours have at most 6 significant bits.
    let midpoint = (below + above) / 2.0;
    let code = if mag < midpoint {
        lo
    } else if mag > midpoint {
        lo + 1
    } else if lo & 1 == 0 {
        lo
    } else {
        lo + 1
    };
    Ok(code | sign_bit)
}

/// A decoded FP8 tensor. The last dimension is the reduction axis.
#[derive(Clone, Debug, PartialEq)]
pub struct Fp8Tensor {
    format: Fp8Format,
    shape: Vec<usize>,
    bytes: Vec<u8>,
    decoded: Vec<DecodedFp8>,
}

impl Fp8Tensor {
    pub fn new(format: Fp8Format, shape: Vec<usize>, bytes: Vec<u8>) -> Result<Self> {
        if shape.is_empty() || shape.iter().product::<usize>() == 0 {
            return Err(Error::EmptyTensor);
        }
        let expected: usize = shape.iter().product();
        if expected != bytes.len() {
            return Err(Error::ShapeMismatch {
                shape,
                len: bytes.len(),
            });
        }
        let decoded = bytes
            .iter()
            .map(|&b| decode(b, format))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            format,
            shape,
            bytes,
            decoded,
        })
    }

    /// Quantizes real values. Returns the tensor and the number of values
    /// that saturated to the largest finite magnitude.
    pub fn from_reals(format: Fp8Format, shape: Vec<usize>, values: &[f64]) -> Result<(Self, usize)> {
        let max = format.max_finite();
        let mut saturated = 0;
        let mut bytes = Vec::with_capacity(values.len());
        for (index, &v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFiniteSource { index });
            }
            if v.abs() > max {
                saturated += 1;
            }
            bytes.push(encode(v, format)?);
        }
        Ok((Self::new(format, shape, bytes)?, saturated))
    }

    #[inline]
    pub fn format(&self) -> Fp8Format {
        self.format
    }

    #[inline]
    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    #[inline]
    pub fn bytes(&self) -> &[u8] {
        &self.bytes
    }

    #[inline]
    pub fn decoded(&self) -> &[DecodedFp8] {
        &self.decoded
    }

    pub fn len(&self) -> usize {
        self.bytes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bytes.is_empty()
    }

    /// Length of the reduction (last) axis.
    pub fn cols(&self) -> usize {
        *self.shape.last().unwrap()
    }

    /// Number of independent reduction rows.
    pub fn rows(&self) -> usize {
        self.len() / self.cols()
    }

    pub fn row(&self, r: usize) -> &[DecodedFp8] {
        let c = self.cols();
        &self.decoded[r * c..(r + 1) * c]
    }

    pub fn to_reals(&self) -> Vec<f64> {
        self.decoded.iter().map(|d| to_real(d, self.format)).collect()
    }
}
