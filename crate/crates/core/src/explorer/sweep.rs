//! Configuration sweeps over the full alignment + MAC pipeline.

use std::fmt::Write as _;

use rayon::prelude::*;

use super::pareto::{pareto_flags, Objectives};
use crate::dsbp::{partition, sqnr, DsbpConfig, KFactor, OperandKind, GROUP_SIZE};
use crate::error::{Error, Result};
use crate::fp8::Fp8Tensor;
use crate::mac::{align_input_operand, align_weight_operand, mac_aligned, AlignedOperand, PipelineMode};
use crate::perf::{PerfCalibration, PerfMode};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SweepMode {
    Fixed,
    Dynamic,
    Both,
}

impl std::str::FromStr for SweepMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed" => Ok(Self::Fixed),
            "dynamic" => Ok(Self::Dynamic),
            "both" => Ok(Self::Both),
            _ => Err(Error::Parse {
                location: "mode".into(),
                detail: format!("unknown sweep mode `{s}`"),
            }),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub k_values: Vec<KFactor>,
    pub b_fix_input: Vec<u32>,
    pub b_fix_weight: Vec<u32>,
    pub mode: SweepMode,
    pub seed: u64,
}

/// One point of the grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SweepConfig {
    pub id: usize,
    pub mode: PipelineMode,
    pub k: KFactor,
    pub b_fix_input: u32,
    pub b_fix_weight: u32,
}

impl SweepConfig {
    pub fn input_cfg(&self) -> DsbpConfig {
        DsbpConfig::new(OperandKind::Input, self.k, self.b_fix_input)
    }

    pub fn weight_cfg(&self) -> DsbpConfig {
        DsbpConfig::new(OperandKind::Weight, self.k, self.b_fix_weight)
    }
}

/// Named operating points.
pub fn preset(name: &str) -> Option<SweepSpec> {
    let (mode, k, bi, bw) = match name {
        "e5m3-fixed" => (SweepMode::Fixed, 0, 3, 3),
        "e5m7-fixed" => (SweepMode::Fixed, 0, 7, 7),
        "precise" => (SweepMode::Dynamic, 1, 6, 5),
        "efficient" => (SweepMode::Dynamic, 2, 4, 4),
        _ => return None,
    };
    Some(SweepSpec {
        k_values: vec![KFactor::from_int(k)],
        b_fix_input: vec![bi],
        b_fix_weight: vec![bw],
        mode,
        seed: 0,
    })
}

pub const PRESETS: [&str; 4] = ["e5m3-fixed", "e5m7-fixed", "precise", "efficient"];

impl SweepSpec {
    /// Grid points in id order: fixed points first (k forced to 0, so the
    /// k list does not multiply them), then dynamic points.
    pub fn configs(&self) -> Result<Vec<SweepConfig>> {
        if self.b_fix_input.is_empty() || self.b_fix_weight.is_empty() {
            return Err(Error::Parse {
                location: "sweep".into(),
                detail: "b_fix lists must be non-empty".into(),
            });
        }
        let dynamic = matches!(self.mode, SweepMode::Dynamic | SweepMode::Both);
        if dynamic && self.k_values.is_empty() {
            return Err(Error::Parse {
                location: "sweep".into(),
                detail: "k list must be non-empty".into(),
            });
        }
        let mut out = Vec::new();
        let mut push = |mode, k, b_fix_input, b_fix_weight| {
            out.push(SweepConfig {
                id: out.len(),
                mode,
                k,
                b_fix_input,
                b_fix_weight,
            })
        };
        if matches!(self.mode, SweepMode::Fixed | SweepMode::Both) {
            for &bi in &self.b_fix_input {
                for &bw in &self.b_fix_weight {
                    push(PipelineMode::Fixed, KFactor::ZERO, bi, bw);
                }
            }
        }
        if dynamic {
            for &k in &self.k_values {
                for &bi in &self.b_fix_input {
                    for &bw in &self.b_fix_weight {
                        push(PipelineMode::Dynamic, k, bi, bw);
                    }
                }
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub config_id: usize,
    pub mode: PipelineMode,
    pub k: KFactor,
    pub b_fix_input: u32,
    pub b_fix_weight: u32,
    pub avg_i: f64,
    pub avg_w: f64,
    pub sqnr_db: f64,
    pub throughput: f64,
    pub efficiency: f64,
    pub pareto: bool,
}

impl Objectives for SweepRow {
    fn sqnr_db(&self) -> f64 {
        self.sqnr_db
    }

    fn efficiency(&self) -> f64 {
        self.efficiency
    }
}

/// Input and weight tensors sharing one reduction length.
#[derive(Clone, Debug)]
pub struct Workload {
    inputs: Fp8Tensor,
    weights: Fp8Tensor,
    reference: Vec<f64>,
}

impl Workload {
    /// `inputs` is `[N, K]` and `weights` is `[M, K]` (1-D tensors count as
    /// a single row). Outputs are the `N x M` dot products.
    pub fn new(inputs: Fp8Tensor, weights: Fp8Tensor) -> Result<Self> {
        if inputs.cols() != weights.cols() {
            return Err(Error::Incompatible(format!(
                "reduction lengths differ: inputs {:?}, weights {:?}",
                inputs.shape(),
                weights.shape()
            )));
        }
        let xr = inputs.to_reals();
        let wr = weights.to_reals();
        let k = inputs.cols();
        let mut reference = Vec::with_capacity(inputs.rows() * weights.rows());
        for x in xr.chunks(k) {
            for w in wr.chunks(k) {
                reference.push(x.iter().zip(w).map(|(a, b)| a * b).sum());
            }
        }
        Ok(Self {
            inputs,
            weights,
            reference,
        })
    }

    pub fn inputs(&self) -> &Fp8Tensor {
        &self.inputs
    }

    pub fn weights(&self) -> &Fp8Tensor {
        &self.weights
    }

    /// Wide-float dot products, row-major over (input row, weight row).
    pub fn reference(&self) -> &[f64] {
        &self.reference
    }

    fn aligned(
        &self,
        tensor: &Fp8Tensor,
        f: impl Fn(&crate::dsbp::Group) -> Result<AlignedOperand>,
    ) -> Result<Vec<AlignedOperand>> {
        partition(tensor, GROUP_SIZE)?.iter().map(f).collect()
    }

    /// Runs one configuration end to end.
    pub fn evaluate(&self, cfg: &SweepConfig) -> Result<Evaluation> {
        let icfg = cfg.input_cfg();
        let wcfg = cfg.weight_cfg();
        let xf = self.inputs.format();
        let wf = self.weights.format();
        let xs = self.aligned(&self.inputs, |g| align_input_operand(g, xf, &icfg, cfg.mode))?;
        let ws = self.aligned(&self.weights, |g| align_weight_operand(g, wf, &wcfg, cfg.mode))?;
        let gpr = self.inputs.cols().div_ceil(GROUP_SIZE);

        let mut outputs = Vec::with_capacity(self.reference.len());
        for xrow in xs.chunks(gpr) {
            for wrow in ws.chunks(gpr) {
                let mut acc = 0.0;
                for (x, w) in xrow.iter().zip(wrow) {
                    acc += mac_aligned(x, w)?.1;
                }
                outputs.push(acc);
            }
        }
        let mean = |ops: &[AlignedOperand]| {
            ops.iter().map(|o| o.prediction.b_g as f64).sum::<f64>() / ops.len() as f64
        };
        Ok(Evaluation {
            avg_i: mean(&xs) + 1.0,
            avg_w: mean(&ws) + 1.0,
            sqnr_db: sqnr(&self.reference, &outputs)?,
            outputs,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub avg_i: f64,
    pub avg_w: f64,
    pub sqnr_db: f64,
    pub outputs: Vec<f64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SweepOptions {
    /// Replace the measured average bitwidths fed to the perf model.
    pub inject_avg: Option<(f64, f64)>,
}

pub fn run_sweep(
    workload: &Workload,
    spec: &SweepSpec,
    cal: &PerfCalibration,
    opts: SweepOptions,
) -> Result<Vec<SweepRow>> {
    let configs = spec.configs()?;
    let mut rows = configs
        .par_iter()
        .map(|c| {
            let ev = workload.evaluate(c)?;
            let (avg_i, avg_w) = opts.inject_avg.unwrap_or((ev.avg_i, ev.avg_w));
            let perf_mode = match c.mode {
                PipelineMode::Fixed => PerfMode::FixedFp,
                PipelineMode::Dynamic => PerfMode::DynamicFp,
            };
            let report = cal.estimate(avg_i, avg_w, perf_mode)?;
            Ok(SweepRow {
                config_id: c.id,
                mode: c.mode,
                k: c.k,
                b_fix_input: c.b_fix_input,
                b_fix_weight: c.b_fix_weight,
                avg_i,
                avg_w,
                sqnr_db: ev.sqnr_db,
                throughput: report.throughput,
                efficiency: report.efficiency,
                pareto: false,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by_key(|r| r.config_id);
    let flags = pareto_flags(&rows);
    for (row, flag) in rows.iter_mut().zip(flags) {
        row.pareto = flag;
    }
    Ok(rows)
}

/// Finds a dynamic row with strictly higher efficiency than some fixed row
/// while giving up at most `tolerance_db` of SQNR.
pub fn dynamic_beats_fixed(rows: &[SweepRow], tolerance_db: f64) -> Option<(usize, usize)> {
    let dynamic = rows.iter().filter(|r| r.mode == PipelineMode::Dynamic);
    for d in dynamic {
        for f in rows.iter().filter(|r| r.mode == PipelineMode::Fixed) {
            if d.efficiency > f.efficiency && d.sqnr_db >= f.sqnr_db - tolerance_db {
                return Some((d.config_id, f.config_id));
            }
        }
    }
    None
}

/// Formats with six significant digits.
pub fn sig6(x: f64) -> String {
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.5e}");
    let exp: i32 = sci.rsplit('e').next().unwrap().parse().unwrap();
    let decimals = (5 - exp).max(0) as usize;
    format!("{x:.decimals$}")
}

pub const CSV_HEADER: &str =
    "config_id,mode,k,b_fix_input,b_fix_weight,avg_i,avg_w,sqnr_db,throughput_tflops,efficiency_tflops_per_w,pareto";

pub fn to_csv(rows: &[SweepRow]) -> String {
    let mut s = String::new();
    s.push_str(CSV_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.config_id,
            r.mode,
            r.k,
            r.b_fix_input,
            r.b_fix_weight,
            sig6(r.avg_i),
            sig6(r.avg_w),
            sig6(r.sqnr_db),
            sig6(r.throughput),
            sig6(r.efficiency),
            r.pareto
        );
    }
    s
}
