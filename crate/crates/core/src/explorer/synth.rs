//! Seeded synthetic FP8 tensors with distinct exponent-gap profiles.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dsbp::GROUP_SIZE;
use crate::error::{Error, Result};
use crate::fp8::{Fp8Format, Fp8Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Distribution {
    /// Exponent field uniform over all normal binades.
    UniformExponent,
    /// One exponent for the whole tensor; every shift is zero.
    Concentrated,
    /// A narrow body of small exponents; some 64-element blocks along the
    /// last axis also carry large outliers.
    OutlierHeavy,
}

/// Probability that an outlier-heavy block contains outliers.
pub const HOT_BLOCK_RATE: f64 = 1.0 / 4.0;
/// Probability that an element of such a block is drawn from the outlier band.
pub const OUTLIER_RATE: f64 = 1.0 / 8.0;

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::UniformExponent => "uniform-exponent",
            Self::Concentrated => "concentrated",
            Self::OutlierHeavy => "outlier-heavy",
        })
    }
}

impl FromStr for Distribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform-exponent" | "uniform" => Ok(Self::UniformExponent),
            "concentrated" => Ok(Self::Concentrated),
            "outlier-heavy" | "outlier" => Ok(Self::OutlierHeavy),
            _ => Err(Error::Parse {
                location: "distribution".into(),
                detail: format!("unknown distribution `{s}`"),
            }),
        }
    }
}

fn draw_code(rng: &mut ChaCha8Rng, fmt: Fp8Format, e: u32) -> u8 {
    let mant = fmt.mant_bits();
    loop {
        let m = rng.random_range(0..1u32 << mant);
        let s = rng.random_bool(0.5) as u32;
        let code = ((s << 7) | (e << mant) | m) as u8;
        if fmt.is_finite_code(code) {
            return code;
        }
    }
}

pub fn gen_synthetic(dist: Distribution, fmt: Fp8Format, shape: Vec<usize>, seed: u64) -> Result<Fp8Tensor> {
    let count: usize = shape.iter().product();
    if shape.is_empty() || count == 0 {
        return Err(Error::EmptyTensor);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let top = fmt.max_exp_field();
    let mut bytes = Vec::with_capacity(count);
    match dist {
        Distribution::UniformExponent => {
            for _ in 0..count {
                let e = rng.random_range(1..=top);
                bytes.push(draw_code(&mut rng, fmt, e));
            }
        }
        Distribution::Concentrated => {
            let e = rng.random_range(1..=top);
            for _ in 0..count {
                bytes.push(draw_code(&mut rng, fmt, e));
            }
        }
        Distribution::OutlierHeavy => {
            let base = (top / 3).max(1);
            let band_lo = (base + (top - base).div_ceil(2)).min(top);
            let body = base.saturating_sub(1).max(1)..=(base + 1).min(top);
            let cols = *shape.last().unwrap();
            let mut hot = false;
            for i in 0..count {
                if (i % cols).is_multiple_of(GROUP_SIZE) {
                    hot = rng.random_bool(HOT_BLOCK_RATE);
                }
                let e = if hot && rng.random_bool(OUTLIER_RATE) {
                    rng.random_range(band_lo..=top)
                } else {
                    rng.random_range(body.clone())
                };
                bytes.push(draw_code(&mut rng, fmt, e));
            }
        }
    }
    Fp8Tensor::new(fmt, shape, bytes)
}
