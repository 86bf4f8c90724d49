use std::fs;

use fp8cim::dsbp::{partition, KFactor};
use fp8cim::explorer::{
    dominates, gen_synthetic, pareto_flags, preset, run_sweep, to_csv, Distribution, Objectives, SweepMode,
    SweepOptions, SweepSpec, Workload, CSV_HEADER,
};
use fp8cim::fp8::{decode, to_real};
use fp8cim::io::{decode_f8t, encode_f8t, import_real, load_f8t, save_f8t, RealSource};
use fp8cim::mac::PipelineMode;
use fp8cim::perf::{calibrate, parse_table_csv, reference_table, PerfCalibration, PerfMode};
use fp8cim::{Error, Fp8Format, Fp8Tensor};
use proptest::prelude::*;

fn small_workload() -> Workload {
    let x = gen_synthetic(Distribution::OutlierHeavy, Fp8Format::E4M3, vec![4, 128], 1).unwrap();
    let w = gen_synthetic(Distribution::UniformExponent, Fp8Format::E3M4, vec![4, 128], 2).unwrap();
    Workload::new(x, w).unwrap()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    ((a - b) / b).abs() <= tol
}

// --- sweep ----------------------------------------------------------------

#[test]
fn e5m7_preset_reproduces_the_fixed_row() {
    let rows = run_sweep(
        &small_workload(),
        &preset("e5m7-fixed").unwrap(),
        &PerfCalibration::from_reference_table(),
        SweepOptions::default(),
    )
    .unwrap();
    assert_eq!(rows.len(), 1);
    let r = &rows[0];
    assert_eq!((r.avg_i, r.avg_w), (8.0, 8.0));
    assert!(close(r.throughput, 0.048, 1e-12));
    assert!(close(r.efficiency, 20.4, 1e-12));
    assert!(r.pareto);
}

#[test]
fn precise_preset_with_injected_bitwidths() {
    let rows = run_sweep(
        &small_workload(),
        &preset("precise").unwrap(),
        &PerfCalibration::from_reference_table(),
        SweepOptions {
            inject_avg: Some((7.65, 6.61)),
        },
    )
    .unwrap();
    let r = &rows[0];
    assert_eq!(r.mode, PipelineMode::Dynamic);
    assert!(close(r.throughput, 0.061, 0.01));
    assert!(close(r.efficiency, 22.5, 1e-9));
}

#[test]
fn single_config_twice_gives_identical_rows() {
    let spec = SweepSpec {
        k_values: vec![KFactor::ZERO],
        b_fix_input: vec![5],
        b_fix_weight: vec![5],
        mode: SweepMode::Fixed,
        seed: 0,
    };
    let cal = PerfCalibration::from_reference_table();
    let a = run_sweep(&small_workload(), &spec, &cal, SweepOptions::default()).unwrap();
    let b = run_sweep(&small_workload(), &spec, &cal, SweepOptions::default()).unwrap();
    assert_eq!(a, b);
    assert_eq!(to_csv(&a), to_csv(&b));
}

#[test]
fn csv_layout() {
    let spec = SweepSpec {
        k_values: vec![KFactor::from_int(1)],
        b_fix_input: vec![3, 6],
        b_fix_weight: vec![3],
        mode: SweepMode::Both,
        seed: 0,
    };
    let rows = run_sweep(&small_workload(), &spec, &PerfCalibration::from_reference_table(), SweepOptions::default())
        .unwrap();
    let csv = to_csv(&rows);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], CSV_HEADER);
    assert_eq!(lines.len(), 5);
    let ncols = CSV_HEADER.split(',').count();
    assert!(lines.iter().all(|l| l.split(',').count() == ncols));
    assert!(lines[1].starts_with("0,fixed,0,3,3,4.00000,4.00000,"));
    assert!(lines[3].starts_with("2,dynamic,1,3,3,"));
}

#[test]
fn mismatched_reduction_lengths_fail_early() {
    let x = gen_synthetic(Distribution::Concentrated, Fp8Format::E4M3, vec![2, 64], 1).unwrap();
    let w = gen_synthetic(Distribution::Concentrated, Fp8Format::E4M3, vec![2, 96], 1).unwrap();
    assert!(matches!(Workload::new(x, w), Err(Error::Incompatible(_))));
}

/// Stronger reading of the dynamic-vs-fixed claim: some dynamic point beats,
/// on efficiency, every fixed point whose SQNR is within 0.5 dB of it.
#[test]
fn a_dynamic_point_beats_every_comparable_fixed_point() {
    let x = gen_synthetic(Distribution::OutlierHeavy, Fp8Format::E4M3, vec![16, 256], 7).unwrap();
    let w = gen_synthetic(Distribution::OutlierHeavy, Fp8Format::E4M3, vec![16, 256], 8).unwrap();
    let spec = SweepSpec {
        k_values: vec![KFactor::from_int(1), KFactor::from_int(2)],
        b_fix_input: (1..=11).collect(),
        b_fix_weight: vec![1, 3, 5, 7],
        mode: SweepMode::Both,
        seed: 7,
    };
    let rows = run_sweep(
        &Workload::new(x, w).unwrap(),
        &spec,
        &PerfCalibration::from_reference_table(),
        SweepOptions::default(),
    )
    .unwrap();
    let fixed: Vec<_> = rows.iter().filter(|r| r.mode == PipelineMode::Fixed).collect();
    let found = rows.iter().filter(|r| r.mode == PipelineMode::Dynamic).any(|d| {
        let near: Vec<_> = fixed.iter().filter(|f| (f.sqnr_db - d.sqnr_db).abs() <= 0.5).collect();
        !near.is_empty() && near.iter().all(|f| d.efficiency > f.efficiency)
    });
    assert!(found);
    assert!(rows.iter().any(|r| r.pareto && r.mode == PipelineMode::Dynamic));
}

// --- pareto ---------------------------------------------------------------

#[derive(Clone, Copy, Debug)]
struct P(f64, f64);

impl Objectives for P {
    fn sqnr_db(&self) -> f64 {
        self.0
    }
    fn efficiency(&self) -> f64 {
        self.1
    }
}

proptest! {
    #[test]
    fn pareto_matches_brute_force(pts in prop::collection::vec((0u8..12, 0u8..12), 1..40)) {
        // coarse grid values force plenty of ties
        let rows: Vec<P> = pts.iter().map(|&(a, b)| P(a as f64, b as f64 / 2.0)).collect();
        let flags = pareto_flags(&rows);
        for (i, r) in rows.iter().enumerate() {
            let dominated = rows.iter().any(|o| dominates(o, r));
            prop_assert_eq!(flags[i], !dominated);
        }
    }
}

// --- perf -----------------------------------------------------------------

#[test]
fn calibration_round_trips_through_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cal.txt");
    let cal = PerfCalibration::from_reference_table();
    cal.save(&path).unwrap();
    let back = PerfCalibration::load(&path).unwrap();
    assert_eq!(back, cal);
    let int8 = back.estimate(8.0, 8.0, PerfMode::Int).unwrap();
    assert_eq!((int8.throughput, int8.efficiency), (0.048, 27.3));
}

#[test]
fn calibration_from_csv_rows() {
    let text = "name,mode,avg_i,avg_w,throughput,efficiency\n\
                E5M3,fixed-fp,4,4,0.192,77.9\n\
                E5M7,fixed-fp,8,8,0.048,20.4\n\
                Precise,dynamic-fp,7.65,6.61,0.061,22.5\n";
    let rows = parse_table_csv(text).unwrap();
    let cal = calibrate(&rows).unwrap();
    let reference = PerfCalibration::from_reference_table();
    assert!(close(cal.e_mpu, reference.e_mpu, 1e-12));
    assert!(cal.int_rows.is_empty());
    assert!(parse_table_csv("a,b,c").is_err());
}

#[test]
fn inconsistent_fixed_rows_are_rejected() {
    let mut rows = reference_table();
    rows[1].throughput = 0.05;
    assert!(matches!(calibrate(&rows), Err(Error::Calibration(_))));
    let mut rows = reference_table();
    rows[4].efficiency = 1000.0;
    assert!(calibrate(&rows).is_err());
}

#[test]
fn estimate_range_checks() {
    let cal = PerfCalibration::from_reference_table();
    assert!(cal.estimate(1.5, 4.0, PerfMode::FixedFp).is_err());
    assert!(cal.estimate(4.0, 9.0, PerfMode::FixedFp).is_err());
    assert!(cal.estimate(5.0, 5.0, PerfMode::Int).is_err());
}

proptest! {
    #[test]
    fn throughput_times_area_is_constant(i in 2.0f64..=12.0, w in 2.0f64..=8.0) {
        let cal = PerfCalibration::from_reference_table();
        let fixed = cal.estimate(i, w, PerfMode::FixedFp).unwrap();
        let dynamic = cal.estimate(i, w, PerfMode::DynamicFp).unwrap();
        prop_assert!(close(fixed.throughput * i * w, 3.072, 1e-12));
        prop_assert!(dynamic.efficiency <= fixed.efficiency);
    }
}

// --- tensor io ------------------------------------------------------------

#[test]
fn f8t_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.f8t");
    let t = gen_synthetic(Distribution::UniformExponent, Fp8Format::E4M3, vec![64], 4).unwrap();
    save_f8t(&t, &path).unwrap();
    let written = fs::read(&path).unwrap();
    let back = load_f8t(&path).unwrap();
    assert_eq!(back, t);
    assert_eq!(encode_f8t(&back), written);
    assert_eq!(partition(&back, 64).unwrap().len(), 1);
}

#[test]
fn f8t_errors_are_distinct() {
    let p = std::path::Path::new("x.f8t");
    let t = Fp8Tensor::new(Fp8Format::E5M2, vec![2, 2], vec![1, 2, 3, 4]).unwrap();
    let good = encode_f8t(&t);
    assert!(matches!(decode_f8t(b"NOPE\x05", p), Err(Error::BadMagic(_))));
    assert!(matches!(decode_f8t(&good[..good.len() - 1], p), Err(Error::Truncated { .. })));
    let mut nan = good.clone();
    *nan.last_mut().unwrap() = 0x7F;
    assert!(matches!(decode_f8t(&nan, p), Err(Error::NonFinite { .. })));
    let mut bad_fmt = good.clone();
    bad_fmt[4] = 6;
    assert!(matches!(decode_f8t(&bad_fmt, p), Err(Error::UnsupportedFormat(6))));
    let mut extra = good;
    extra.push(0);
    assert!(matches!(decode_f8t(&extra, p), Err(Error::ShapeMismatch { .. })));
    assert!(matches!(load_f8t(std::path::Path::new("/nonexistent/x.f8t")), Err(Error::Io { .. })));
}

#[test]
fn csv_import() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("z.csv");
    fs::write(&path, "0,0,0\n").unwrap();
    let imp = import_real(&path, RealSource::from_path(&path), Fp8Format::E4M3, None).unwrap();
    assert_eq!(imp.tensor.bytes(), &[0, 0, 0]);
    assert_eq!(imp.tensor.shape(), &[3]);

    fs::write(&path, "1,1000\n-2,-1e6\n").unwrap();
    let imp = import_real(&path, RealSource::Csv, Fp8Format::E4M3, None).unwrap();
    assert_eq!(imp.saturated, 2);
    assert_eq!(imp.tensor.shape(), &[2, 2]);
    assert_eq!(imp.tensor.to_reals(), vec![1.0, 448.0, -2.0, -448.0]);

    fs::write(&path, "1,nan,3\n").unwrap();
    assert!(matches!(
        import_real(&path, RealSource::Csv, Fp8Format::E4M3, None),
        Err(Error::NonFiniteSource { index: 1 })
    ));
    fs::write(&path, "1,2\n3\n").unwrap();
    assert!(import_real(&path, RealSource::Csv, Fp8Format::E4M3, None).is_err());
}

#[test]
fn raw_f32_import_with_shape() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("v.bin");
    let vals = [0.5f32, -3.0, 1.25, 64.0, 0.0, -0.0];
    let bytes: Vec<u8> = vals.iter().flat_map(|v| v.to_le_bytes()).collect();
    fs::write(&path, &bytes).unwrap();
    let imp = import_real(&path, RealSource::from_path(&path), Fp8Format::E5M2, Some(vec![2, 3])).unwrap();
    assert_eq!(imp.tensor.shape(), &[2, 3]);
    assert_eq!(imp.tensor.to_reals(), vec![0.5, -3.0, 1.25, 64.0, 0.0, -0.0]);

    fs::write(&path, &bytes[..5]).unwrap();
    assert!(matches!(
        import_real(&path, RealSource::RawF32, Fp8Format::E5M2, None),
        Err(Error::Truncated { .. })
    ));
    let inf: Vec<u8> = [1.0f32, f32::INFINITY].iter().flat_map(|v| v.to_le_bytes()).collect();
    fs::write(&path, inf).unwrap();
    assert!(matches!(
        import_real(&path, RealSource::RawF32, Fp8Format::E5M2, None),
        Err(Error::NonFiniteSource { index: 1 })
    ));
}

/// Spacing between `x`'s quantized neighbours, from the code table.
fn local_ulp(code: u8, fmt: Fp8Format) -> f64 {
    let mag = code & 0x7F;
    let v = |c: u8| to_real(&decode(c, fmt).unwrap(), fmt);
    let up = if fmt.is_finite_code(mag + 1) && mag < fmt.max_finite_code() { v(mag + 1) - v(mag) } else { 0.0 };
    let down = if mag > 0 { v(mag) - v(mag - 1) } else { 0.0 };
    up.max(down)
}

proptest! {
    #[test]
    fn imported_values_within_half_ulp(fmt in prop::sample::select(Fp8Format::ALL.to_vec()), xs in prop::collection::vec(-1e4f32..1e4, 1..40)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.bin");
        fs::write(&path, xs.iter().flat_map(|v| v.to_le_bytes()).collect::<Vec<u8>>()).unwrap();
        let imp = import_real(&path, RealSource::RawF32, fmt, None).unwrap();
        for ((&x, &code), q) in xs.iter().zip(imp.tensor.bytes()).zip(imp.tensor.to_reals()) {
            let x = x as f64;
            if x.abs() <= fmt.max_finite() {
                prop_assert!((q - x).abs() <= local_ulp(code, fmt) / 2.0, "{x} -> {q}");
            } else {
                prop_assert_eq!(q, fmt.max_finite().copysign(x));
            }
        }
    }
}
