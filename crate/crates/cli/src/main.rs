use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use fp8cim::dsbp::{partition, DsbpConfig, KFactor, OperandKind, GROUP_SIZE};
use fp8cim::explorer::{
    gen_synthetic, preset, run_sweep, to_csv, Distribution, SweepMode, SweepOptions, SweepSpec, Workload,
    PRESETS,
};
use fp8cim::fiau::{fiau_align_traced, input_width, render_trace};
use fp8cim::fp8::to_real;
use fp8cim::io::{import_real, load_f8t, save_f8t, RealSource};
use fp8cim::mac::{fp_macro_mac, PipelineMode};
use fp8cim::perf::{calibrate, parse_table_csv, reference_table, PerfCalibration, PerfMode};
use fp8cim::{Fp8Format, Fp8Tensor};

#[derive(Parser)]
#[command(name = "fp8cim", version, about = "Variable-precision FP8 compute-in-memory explorer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep (k, B_fix) configurations and emit a CSV report.
    Sweep(SweepArgs),
    /// Run one 64-element group end to end and print every stage.
    Mac(MacArgs),
    /// Fit the performance model and write a calibration file.
    Calibrate(CalibrateArgs),
    /// Write a seeded synthetic tensor.
    Gen(GenArgs),
    /// Convert real values (CSV or raw little-endian f32) to an FP8 tensor.
    Import(ImportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Fixed,
    Dynamic,
    Both,
}

/// Tensor sources shared by `sweep` and `mac`. Without files a synthetic
/// outlier-heavy pair is generated from `--seed`.
#[derive(Args)]
struct DataArgs {
    /// Input tensor (.f8t), `[N, K]`.
    #[arg(long, requires = "weights")]
    inputs: Option<PathBuf>,
    /// Weight tensor (.f8t), `[M, K]`.
    #[arg(long, requires = "inputs")]
    weights: Option<PathBuf>,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Shape of each synthetic tensor.
    #[arg(long, value_delimiter = ',', default_value = "16,256")]
    synth_shape: Vec<usize>,
    #[arg(long, default_value = "E4M3")]
    synth_format: Fp8Format,
}

impl DataArgs {
    fn load(&self) -> Result<(Fp8Tensor, Fp8Tensor)> {
        match (&self.inputs, &self.weights) {
            (Some(x), Some(w)) => Ok((read_tensor(x)?, read_tensor(w)?)),
            _ => {
                let gen = |seed| {
                    gen_synthetic(Distribution::OutlierHeavy, self.synth_format, self.synth_shape.clone(), seed)
                };
                Ok((gen(self.seed)?, gen(self.seed + 1)?))
            }
        }
    }
}

fn read_tensor(path: &Path) -> Result<Fp8Tensor> {
    Ok(load_f8t(path)?)
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Scaling factors for dynamic points (multiples of 0.25).
    #[arg(long, value_delimiter = ',', conflicts_with = "preset")]
    k: Option<Vec<KFactor>>,
    #[arg(long, value_delimiter = ',', conflicts_with = "preset")]
    bfix_input: Option<Vec<u32>>,
    #[arg(long, value_delimiter = ',', conflicts_with = "preset")]
    bfix_weight: Option<Vec<u32>>,
    #[arg(long, value_enum, default_value = "both", conflicts_with = "preset")]
    mode: ModeArg,
    /// Named operating point: e5m3-fixed, e5m7-fixed, precise, efficient.
    #[arg(long)]
    preset: Option<String>,
    /// Calibration file; defaults to the built-in measured table.
    #[arg(long)]
    cal: Option<PathBuf>,
    /// Replace measured average bitwidths fed to the perf model, as `I,W`.
    #[arg(long, value_delimiter = ',')]
    inject_avg: Option<Vec<f64>>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MacArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value_t = 0)]
    input_row: usize,
    #[arg(long, default_value_t = 0)]
    weight_row: usize,
    /// Group index along the reduction axis.
    #[arg(long, default_value_t = 0)]
    group: usize,
    #[arg(long, default_value = "1")]
    k: KFactor,
    #[arg(long, default_value_t = 6)]
    bfix_input: u32,
    #[arg(long, default_value_t = 5)]
    bfix_weight: u32,
    #[arg(long, value_enum, default_value = "dynamic")]
    mode: PipelineArg,
    /// Also print the FIAU cycle trace of this element.
    #[arg(long)]
    trace_element: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum PipelineArg {
    Fixed,
    Dynamic,
}

#[derive(Args)]
struct CalibrateArgs {
    /// Measured rows as CSV (`name,mode,avg_i,avg_w,throughput,efficiency`).
    #[arg(long)]
    rows: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    /// uniform-exponent, concentrated or outlier-heavy.
    #[arg(long, default_value = "outlier-heavy")]
    dist: Distribution,
    #[arg(long, default_value = "E4M3")]
    format: Fp8Format,
    #[arg(long, value_delimiter = ',', default_value = "16,256")]
    shape: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ImportArgs {
    /// `.csv`/`.txt` is read as text, anything else as raw f32.
    #[arg(long)]
    src: PathBuf,
    #[arg(long)]
    format: Fp8Format,
    #[arg(long, value_delimiter = ',')]
    shape: Option<Vec<usize>>,
    #[arg(long)]
    out: PathBuf,
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn sweep(a: SweepArgs) -> Result<()> {
    let spec = match &a.preset {
        Some(name) => preset(name).ok_or_else(|| anyhow!("unknown preset `{name}` (known: {})", PRESETS.join(", ")))?,
        None => SweepSpec {
            k_values: a.k.unwrap_or_else(|| vec![KFactor::from_int(1), KFactor::from_int(2)]),
            b_fix_input: a.bfix_input.unwrap_or_else(|| (1..=11).collect()),
            b_fix_weight: a.bfix_weight.unwrap_or_else(|| vec![1, 3, 5, 7]),
            mode: match a.mode {
                ModeArg::Fixed => SweepMode::Fixed,
                ModeArg::Dynamic => SweepMode::Dynamic,
                ModeArg::Both => SweepMode::Both,
            },
            seed: a.data.seed,
        },
    };
    let cal = match &a.cal {
        Some(p) => PerfCalibration::load(p)?,
        None => PerfCalibration::from_reference_table(),
    };
    let inject_avg = match a.inject_avg.as_deref() {
        None => None,
        Some(&[i, w]) => Some((i, w)),
        Some(v) => bail!("--inject-avg takes two values `I,W`, got {}", v.len()),
    };
    let opts = SweepOptions { inject_avg };
    let (x, w) = a.data.load()?;
    let workload = Workload::new(x, w)?;
    let rows = run_sweep(&workload, &spec, &cal, opts)?;
    emit(&to_csv(&rows), a.out.as_deref())
}

fn mac(a: MacArgs) -> Result<()> {
    let (x, w) = a.data.load()?;
    let pick = |t: &Fp8Tensor, row: usize, what: &str| {
        let groups = partition(t, GROUP_SIZE)?;
        let per_row = t.cols().div_ceil(GROUP_SIZE);
        if row >= t.rows() || a.group >= per_row {
            bail!("{what} row {row} / group {} outside a {:?} tensor", a.group, t.shape());
        }
        Ok(groups[row * per_row + a.group].clone())
    };
    let xg = pick(&x, a.input_row, "input")?;
    let wg = pick(&w, a.weight_row, "weight")?;
    let (xf, wf) = (x.format(), w.format());
    let mode = match a.mode {
        PipelineArg::Fixed => PipelineMode::Fixed,
        PipelineArg::Dynamic => PipelineMode::Dynamic,
    };
    let icfg = DsbpConfig::new(OperandKind::Input, a.k, a.bfix_input);
    let wcfg = DsbpConfig::new(OperandKind::Weight, a.k, a.bfix_weight);
    let out = fp_macro_mac(&xg, xf, &wg, wf, &icfg, &wcfg, mode)?;

    println!("mode {mode}, k {}, B_fix {}/{}", a.k, a.bfix_input, a.bfix_weight);
    println!("input  {xf}: e_max {} b_dyn {} b_g {} ({}-bit), scale 2^{}", out.input.e_max, out.input.prediction.b_dyn,
        out.input.prediction.b_g, out.input.width(), out.input.scale_exp);
    println!("weight {wf}: e_max {} b_dyn {} b_g {} ({}-bit), scale 2^{}", out.weight.e_max, out.weight.prediction.b_dyn,
        out.weight.prediction.b_g, out.weight.width(), out.weight.scale_exp);
    if let Some(trace) = &out.input.mpu {
        println!("-- MPU --\n{trace}");
    }
    println!("-- FIAU aligned inputs --\n{:?}", &out.input.values[..xg.valid_len]);
    println!("-- aligned weights --\n{:?}", &out.weight.values[..wg.valid_len]);
    if let Some(i) = a.trace_element {
        let d = xg.valid().get(i).ok_or_else(|| anyhow!("element {i} outside the group"))?;
        let shift = xg.shift_profile()?.shifts[i];
        let (v, cycles) = fiau_align_traced(d.signed_sig(), input_width(xf.mant_bits()), shift, out.input.width())?;
        println!("-- FIAU element {i}: mantissa {} shift {shift} -> {v} --", d.signed_sig());
        print!("{}", render_trace(&cycles));
    }
    let exact: f64 = xg.valid().iter().zip(wg.valid()).map(|(p, q)| to_real(p, xf) * to_real(q, wf)).sum();
    println!("integer MAC {}", out.integer);
    println!("result {:e}  exact {:e}  error {:e}", out.value, exact, out.value - exact);
    Ok(())
}

fn calibrate_cmd(a: CalibrateArgs) -> Result<()> {
    let rows = match &a.rows {
        Some(p) => parse_table_csv(&fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?)?,
        None => reference_table(),
    };
    let cal = calibrate(&rows)?;
    let mut text = cal.to_config_string();
    // residuals of every measured floating-point row not used by the fit
    let fit_dynamic = rows.iter().find(|r| r.mode == PerfMode::DynamicFp).map(|r| r.name.clone());
    for r in rows.iter().filter(|r| r.mode == PerfMode::DynamicFp) {
        if Some(&r.name) == fit_dynamic.as_ref() {
            continue;
        }
        let e = cal.estimate(r.avg_i, r.avg_w, r.mode)?;
        text.push_str(&format!(
            "# residual {}: predicted {:.3} TFLOPS/W vs measured {} ({:+.2}%), throughput {:.4} vs {}\n",
            r.name,
            e.efficiency,
            r.efficiency,
            100.0 * (e.efficiency - r.efficiency) / r.efficiency,
            e.throughput,
            r.throughput
        ));
    }
    emit(&text, a.out.as_deref())
}

fn gen(a: GenArgs) -> Result<()> {
    let t = gen_synthetic(a.dist, a.format, a.shape, a.seed)?;
    save_f8t(&t, &a.out)?;
    log::info!("wrote {} {:?} to {}", t.format(), t.shape(), a.out.display());
    Ok(())
}

fn import(a: ImportArgs) -> Result<()> {
    let imp = import_real(&a.src, RealSource::from_path(&a.src), a.format, a.shape)?;
    save_f8t(&imp.tensor, &a.out)?;
    Ok(())
}

/// Joins the error chain, skipping causes a message already spells out.
fn one_line(e: &anyhow::Error) -> String {
    let mut line = String::new();
    for cause in e.chain() {
        let msg = cause.to_string();
        if !line.contains(&msg) {
            if !line.is_empty() {
                line.push_str(": ");
            }
            line.push_str(&msg);
        }
    }
    line.replace('\n', " ")
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Sweep(a) => sweep(a),
        Command::Mac(a) => mac(a),
        Command::Calibrate(a) => calibrate_cmd(a),
        Command::Gen(a) => gen(a),
        Command::Import(a) => import(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", one_line(&e));
            ExitCode::FAILURE
        }
    }
}
