//! Analytic throughput / energy-efficiency model.
//!
//! Throughput scales as `t_const / (I * W)` where `I` and `W` are the average
//! input and weight computational bitwidths including the sign bit. Energy
//! per FLOP is affine in `I * W`, plus a constant overhead when the dynamic
//! prediction path (MPU) is active. The coefficients are fitted to measured
//! macro data points; INT modes are returned verbatim from the table.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};

/// Mode column of a measured row.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PerfMode {
    FixedFp,
    DynamicFp,
    Int,
}

impl fmt::Display for PerfMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::FixedFp => "fixed-fp",
            Self::DynamicFp => "dynamic-fp",
            Self::Int => "int",
        })
    }
}

impl std::str::FromStr for PerfMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed-fp" | "fixed" => Ok(Self::FixedFp),
            "dynamic-fp" | "dynamic" => Ok(Self::DynamicFp),
            "int" => Ok(Self::Int),
            _ => Err(Error::Parse {
                location: "mode".into(),
                detail: format!("unknown mode `{s}`"),
            }),
        }
    }
}

/// One measured operating point.
#[derive(Clone, Debug, PartialEq)]
pub struct TableRow {
    pub name: String,
    pub mode: PerfMode,
    pub avg_i: f64,
    pub avg_w: f64,
    /// TFLOPs (or TOPs for INT rows).
    pub throughput: f64,
    /// TFLOPS/W (or TOPS/W).
    pub efficiency: f64,
}

impl TableRow {
    fn new(name: &str, mode: PerfMode, avg_i: f64, avg_w: f64, throughput: f64, efficiency: f64) -> Self {
        Self {
            name: name.to_string(),
            mode,
            avg_i,
            avg_w,
            throughput,
            efficiency,
        }
    }
}

/// Post-layout macro measurements (fixed and INT rows at 50% weight sparsity
/// and 50% input toggle rate; dynamic rows on Llama-7b / BoolQ).
pub fn reference_table() -> Vec<TableRow> {
    vec![
        TableRow::new("E5M3", PerfMode::FixedFp, 4.0, 4.0, 0.192, 77.9),
        TableRow::new("E5M7", PerfMode::FixedFp, 8.0, 8.0, 0.048, 20.4),
        TableRow::new("INT4", PerfMode::Int, 4.0, 4.0, 0.192, 109.3),
        TableRow::new("INT8", PerfMode::Int, 8.0, 8.0, 0.048, 27.3),
        TableRow::new("Precise", PerfMode::DynamicFp, 7.65, 6.61, 0.061, 22.5),
        TableRow::new("Efficient", PerfMode::DynamicFp, 5.58, 6.08, 0.092, 33.7),
    ]
}

pub const CALIBRATION_CONDITIONS: &str = "50% weight sparsity, 50% input toggle rate";

#[derive(Clone, Debug, PartialEq)]
pub struct PerfCalibration {
    /// TFLOP * bit^2.
    pub t_const: f64,
    /// Energy per FLOP slope in pJ-equivalent units (1 / (TFLOPS/W)) per bit^2.
    pub e_a: f64,
    pub e_b: f64,
    pub e_mpu: f64,
    pub int_rows: Vec<TableRow>,
}

/// Relative disagreement allowed between the two fixed rows' `t_const`.
pub const T_CONST_TOLERANCE: f64 = 0.01;

pub fn calibrate(rows: &[TableRow]) -> Result<PerfCalibration> {
    let fixed: Vec<&TableRow> = rows.iter().filter(|r| r.mode == PerfMode::FixedFp).collect();
    if fixed.len() != 2 {
        return Err(Error::Calibration(format!(
            "need exactly two fixed-fp rows, got {}",
            fixed.len()
        )));
    }
    let (lo, hi) = if fixed[0].avg_i * fixed[0].avg_w <= fixed[1].avg_i * fixed[1].avg_w {
        (fixed[0], fixed[1])
    } else {
        (fixed[1], fixed[0])
    };
    let p_lo = lo.avg_i * lo.avg_w;
    let p_hi = hi.avg_i * hi.avg_w;
    if p_lo == p_hi {
        return Err(Error::Calibration("fixed rows share the same I*W".into()));
    }
    let t_lo = lo.throughput * p_lo;
    let t_hi = hi.throughput * p_hi;
    if (t_lo - t_hi).abs() > T_CONST_TOLERANCE * t_lo.max(t_hi) {
        return Err(Error::Calibration(format!(
            "throughput constants disagree: {t_lo} vs {t_hi}"
        )));
    }
    let t_const = (t_lo + t_hi) / 2.0;

    let e_a = (1.0 / hi.efficiency - 1.0 / lo.efficiency) / (p_hi - p_lo);
    let e_b = 1.0 / lo.efficiency - e_a * p_lo;

    let e_mpu = match rows.iter().find(|r| r.mode == PerfMode::DynamicFp) {
        Some(d) => 1.0 / d.efficiency - (e_a * d.avg_i * d.avg_w + e_b),
        None => 0.0,
    };
    if e_mpu < 0.0 {
        return Err(Error::Calibration(format!("negative dynamic overhead {e_mpu}")));
    }

    Ok(PerfCalibration {
        t_const,
        e_a,
        e_b,
        e_mpu,
        int_rows: rows.iter().filter(|r| r.mode == PerfMode::Int).cloned().collect(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct PerfReport {
    pub avg_i: f64,
    pub avg_w: f64,
    pub throughput: f64,
    pub efficiency: f64,
    pub mode: PerfMode,
}

impl PerfCalibration {
    pub fn from_reference_table() -> Self {
        calibrate(&reference_table()).expect("reference table is consistent")
    }

    pub fn energy_per_op(&self, avg_i: f64, avg_w: f64, mode: PerfMode) -> f64 {
        let base = self.e_a * avg_i * avg_w + self.e_b;
        match mode {
            PerfMode::DynamicFp => base + self.e_mpu,
            _ => base,
        }
    }

    pub fn estimate(&self, avg_i: f64, avg_w: f64, mode: PerfMode) -> Result<PerfReport> {
        if !(2.0..=12.0).contains(&avg_i) {
            return Err(Error::BitwidthOutOfRange {
                what: "average input",
                value: avg_i.round() as i64,
            });
        }
        if !(2.0..=8.0).contains(&avg_w) {
            return Err(Error::BitwidthOutOfRange {
                what: "average weight",
                value: avg_w.round() as i64,
            });
        }
        if mode == PerfMode::Int {
            let row = self
                .int_rows
                .iter()
                .find(|r| r.avg_i == avg_i && r.avg_w == avg_w)
                .ok_or_else(|| {
                    Error::Calibration(format!("no INT row for {avg_i}/{avg_w}"))
                })?;
            return Ok(PerfReport {
                avg_i,
                avg_w,
                throughput: row.throughput,
                efficiency: row.efficiency,
                mode,
            });
        }
        Ok(PerfReport {
            avg_i,
            avg_w,
            throughput: self.t_const / (avg_i * avg_w),
            efficiency: 1.0 / self.energy_per_op(avg_i, avg_w, mode),
            mode,
        })
    }

    /// `key = value` lines; INT rows as `int.<name> = I W throughput efficiency`.
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("# conditions: {CALIBRATION_CONDITIONS}\n"));
        s.push_str(&format!("t_const = {:e}\n", self.t_const));
        s.push_str(&format!("e_a = {:e}\n", self.e_a));
        s.push_str(&format!("e_b = {:e}\n", self.e_b));
        s.push_str(&format!("e_mpu = {:e}\n", self.e_mpu));
        for r in &self.int_rows {
            s.push_str(&format!(
                "int.{} = {} {} {} {}\n",
                r.name, r.avg_i, r.avg_w, r.throughput, r.efficiency
            ));
        }
        s
    }

    pub fn parse_config(text: &str) -> Result<Self> {
        let mut scalars = BTreeMap::new();
        let mut int_rows = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |detail: String| Error::Parse {
                location: format!("calibration line {}", n + 1),
                detail,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err("expected `key = value`".into()))?;
            let (key, value) = (key.trim(), value.trim());
            if let Some(name) = key.strip_prefix("int.") {
                let nums = value
                    .split_whitespace()
                    .map(|v| v.parse::<f64>().map_err(|e| err(e.to_string())))
                    .collect::<Result<Vec<_>>>()?;
                if nums.len() != 4 {
                    return Err(err("INT row needs `I W throughput efficiency`".into()));
                }
                int_rows.push(TableRow::new(name, PerfMode::Int, nums[0], nums[1], nums[2], nums[3]));
            } else {
                let v: f64 = value.parse().map_err(|e: std::num::ParseFloatError| err(e.to_string()))?;
                scalars.insert(key.to_string(), v);
            }
        }
        let get = |k: &str| {
            scalars.get(k).copied().ok_or_else(|| Error::Parse {
                location: "calibration".into(),
                detail: format!("missing key `{k}`"),
            })
        };
        Ok(Self {
            t_const: get("t_const")?,
            e_a: get("e_a")?,
            e_b: get("e_b")?,
            e_mpu: get("e_mpu")?,
            int_rows,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_config(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_config_string()).map_err(|e| Error::io(path, e))
    }
}

/// Parses measured rows from CSV: `name,mode,avg_i,avg_w,throughput,efficiency`.
pub fn parse_table_csv(text: &str) -> Result<Vec<TableRow>> {
    let mut rows = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("name,") {
            continue;
        }
        let err = |detail: String| Error::Parse {
            location: format!("table line {}", n + 1),
            detail,
        };
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 6 {
            return Err(err(format!("expected 6 fields, got {}", f.len())));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|e| err(e.to_string()));
        rows.push(TableRow {
            name: f[0].to_string(),
            mode: f[1].parse()?,
            avg_i: num(f[2])?,
            avg_w: num(f[3])?,
            throughput: num(f[4])?,
            efficiency: num(f[5])?,
        });
    }
    Ok(rows)
}
