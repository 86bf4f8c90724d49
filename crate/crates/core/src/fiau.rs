//! FIFO-based input alignment.
//!
//! A two's-complement mantissa is written into a bit FIFO MSB first. On read
//! the pointer dwells on the MSB for `exp_offset + 1` cycles and then walks
//! towards the LSB; after `save_len` cycles it jumps to the write pointer for
//! the next element. The emitted word is the top `save_len` bits of the
//! sign-extended, arithmetically right-shifted mantissa.

use std::fmt::Write as _;

use crate::dsbp::Group;
use crate::error::{Error, Result};

pub const MAX_WIDTH: u32 = 12;

/// One read cycle of the FIFO.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FiauCycle {
    pub cycle: u32,
    pub w_ptr: u32,
    pub r_ptr: u32,
    pub bit: bool,
}

/// Bit FIFO holding one mantissa.
#[derive(Clone, Debug)]
pub struct FiauStream {
    fifo: Vec<bool>,
    w_ptr: u32,
    r_ptr: u32,
    exp_offset: u32,
    save_len: u32,
}

fn check_fits(value: i32, width: u32) -> Result<()> {
    if !(1..=MAX_WIDTH).contains(&width) {
        return Err(Error::BitwidthOutOfRange {
            what: "FIAU mantissa",
            value: width as i64,
        });
    }
    let lo = -(1i64 << (width - 1));
    let hi = (1i64 << (width - 1)) - 1;
    if (value as i64) < lo || (value as i64) > hi {
        return Err(Error::ValueOutOfRange {
            value: value as i64,
            width,
        });
    }
    Ok(())
}

fn check_save_len(save_len: u32) -> Result<()> {
    if !(1..=MAX_WIDTH).contains(&save_len) {
        return Err(Error::BitwidthOutOfRange {
            what: "FIAU save_len",
            value: save_len as i64,
        });
    }
    Ok(())
}

impl FiauStream {
    /// Serially writes `mantissa` (a `width`-bit two's-complement value).
    pub fn write(mantissa: i32, width: u32, exp_offset: u32, save_len: u32) -> Result<Self> {
        check_fits(mantissa, width)?;
        check_save_len(save_len)?;
        let mut fifo = Vec::with_capacity(width as usize);
        let mut w_ptr = 0;
        for b in (0..width).rev() {
            fifo.push((mantissa >> b) & 1 == 1);
            w_ptr += 1;
        }
        Ok(Self {
            fifo,
            w_ptr,
            r_ptr: 0,
            exp_offset,
            save_len,
        })
    }

    /// Steps the read side for `save_len` cycles.
    pub fn read(&mut self) -> Vec<FiauCycle> {
        let mut out = Vec::with_capacity(self.save_len as usize);
        for cycle in 0..self.save_len {
            if cycle > self.exp_offset {
                self.r_ptr += 1;
            }
            // past the written LSB the FIFO is empty and reads as zero
            let bit = self.fifo.get(self.r_ptr as usize).copied().unwrap_or(false);
            out.push(FiauCycle {
                cycle,
                w_ptr: self.w_ptr,
                r_ptr: self.r_ptr,
                bit,
            });
        }
        self.r_ptr = self.w_ptr;
        out
    }
}

fn assemble(bits: &[FiauCycle]) -> i32 {
    let n = bits.len() as u32;
    let raw = bits.iter().fold(0u32, |acc, c| (acc << 1) | c.bit as u32);
    // sign-extend from n bits
    ((raw << (32 - n)) as i32) >> (32 - n)
}

/// Cycle-stepped alignment. Returns the aligned `save_len`-bit value and the
/// per-cycle pointer trace.
pub fn fiau_align_traced(
    mantissa: i32,
    width: u32,
    exp_offset: u32,
    save_len: u32,
) -> Result<(i32, Vec<FiauCycle>)> {
    let mut stream = FiauStream::write(mantissa, width, exp_offset, save_len)?;
    let cycles = stream.read();
    Ok((assemble(&cycles), cycles))
}

pub fn fiau_align(mantissa: i32, width: u32, exp_offset: u32, save_len: u32) -> Result<i32> {
    fiau_align_traced(mantissa, width, exp_offset, save_len).map(|(v, _)| v)
}

/// Closed form of the pointer scheme: `floor(m * 2^(save_len - width - exp_offset))`.
pub fn shift_align(mantissa: i32, width: u32, exp_offset: u32, save_len: u32) -> Result<i32> {
    check_fits(mantissa, width)?;
    check_save_len(save_len)?;
    let m = mantissa as i64;
    let e = save_len as i64 - width as i64 - exp_offset as i64;
    let v = if e >= 0 { m << e } else { m >> (-e).min(63) };
    Ok(v as i32)
}

pub fn render_trace(cycles: &[FiauCycle]) -> String {
    let mut s = String::new();
    for c in cycles {
        let _ = writeln!(s, "cycle {:2}  w_ptr {:2}  r_ptr {:2}  bit {}", c.cycle, c.w_ptr, c.r_ptr, c.bit as u8);
    }
    s
}

/// Aligns a group of two's-complement mantissas to `b_g + 1` bits using
/// `exp_offset = e_max - exps[i]`.
pub fn fiau_align_group(
    mantissas: &[i32],
    width: u32,
    e_max: u32,
    exps: &[u32],
    b_g: u32,
) -> Result<Vec<i32>> {
    if mantissas.len() != exps.len() {
        return Err(Error::LengthMismatch {
            left: mantissas.len(),
            right: exps.len(),
        });
    }
    mantissas
        .iter()
        .zip(exps)
        .map(|(&m, &e)| {
            let offset = e_max.checked_sub(e).ok_or(Error::Incompatible(format!(
                "exponent {e} above group maximum {e_max}"
            )))?;
            fiau_align(m, width, offset, b_g + 1)
        })
        .collect()
}

/// Width of an FP8 input mantissa stream: hidden bit, stored bits and sign.
pub fn input_width(mant_bits: u32) -> u32 {
    mant_bits + 2
}

/// Streams a decoded input group through the FIAU. Pads emit zero.
pub fn align_input_group(group: &Group, mant_bits: u32, b_g: u32) -> Result<(u32, Vec<i32>)> {
    let profile = group.shift_profile()?;
    let width = input_width(mant_bits);
    let mut out = vec![0i32; group.len()];
    for (slot, (d, &shift)) in out.iter_mut().zip(group.valid().iter().zip(&profile.shifts)) {
        *slot = fiau_align(d.signed_sig(), width, shift, b_g + 1)?;
    }
    Ok((profile.e_max, out))
}
