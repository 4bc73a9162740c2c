use std::path::PathBuf;

use num_complex::Complex64;
use psido_core::experiments::{ExperimentConfig, Scenario};
use psido_core::io::{load_field, read_binary, save_field};
use psido_core::kernel::build_kernel_slice;
use psido_core::report::CSV_HEADER;
use psido_core::weights::WeightKind;
use psido_core::{
    EstimateReport, Field, PiecewiseConstantTrack, ReportRow, SpacetimeGrid, Symbol, SymbolKind,
    Verdict, WeightSpec,
};

fn configs_dir() -> PathBuf {
    [env!("CARGO_MANIFEST_DIR"), "..", "..", "configs"]
        .iter()
        .collect()
}

#[test]
fn symbol_json_round_trip() {
    let track = PiecewiseConstantTrack::new(vec![0.0, 0.5, 2.0], vec![1.0, 2.5]).unwrap();
    let symbols = [
        Symbol::fractional_laplacian(1.5).unwrap(),
        Symbol::time_modulated(2.0, track.clone()).unwrap(),
        Symbol::seeded_time_modulated(1.0, 1.0, 6, [0.5, 2.0], 42).unwrap(),
        Symbol::anisotropic_power(2.0, vec![1.0, 3.0], Some(track.clone())).unwrap(),
        Symbol::complex_shift(1.0, track).unwrap(),
    ];
    for s in symbols {
        let j = serde_json::to_string(&s).unwrap();
        let back: Symbol = serde_json::from_str(&j).unwrap();
        assert_eq!(back, s, "{j}");
    }
}

#[test]
fn seeded_symbol_from_json_is_reproducible() {
    let j = r#"{"kind":"time_modulated","gamma":1.5,"seed":9,
               "random_track":{"horizon":2.0,"pieces":5,"range":[1.0,2.0]}}"#;
    let a: Symbol = serde_json::from_str(j).unwrap();
    let b = Symbol::seeded_time_modulated(1.5, 2.0, 5, [1.0, 2.0], 9).unwrap();
    assert_eq!(a, b);
    assert_eq!(*a.kind(), SymbolKind::TimeModulated);
    assert_eq!(a.track().unwrap().values().len(), 5);
}

#[test]
fn bad_symbols_are_rejected() {
    for j in [
        r#"{"kind":"fractional_laplacian","gamma":0.0}"#,
        r#"{"kind":"fractional_laplacian","gamma":-1.0}"#,
        r#"{"kind":"time_modulated","gamma":2.0}"#,
        r#"{"kind":"time_modulated","gamma":2.0,"track":{"breakpoints":[0,1],"values":[-1.0]}}"#,
        r#"{"kind":"heat","gamma":2.0}"#,
    ] {
        assert!(serde_json::from_str::<Symbol>(j).is_err(), "{j}");
    }
}

#[test]
fn weight_json_round_trip() {
    let ws = [
        WeightSpec::constant(2.0, 3).unwrap(),
        WeightSpec::power_space(0.5, 3.0, 2).unwrap(),
        WeightSpec::power_time(-0.25, 1.5).unwrap(),
        WeightSpec::spacetime_power(1.0, 2.0, 2).unwrap(),
        WeightSpec::product_power(0.5, 0.5, 2.0, 2).unwrap(),
    ];
    for w in ws {
        let j = serde_json::to_string(&w).unwrap();
        let back: WeightSpec = serde_json::from_str(&j).unwrap();
        assert_eq!(back, w);
    }
    let w: WeightSpec =
        serde_json::from_str(r#"{"kind":"spacetime_power","alpha":2.0,"p":3.0,"dim":3}"#).unwrap();
    assert_eq!(*w.kind(), WeightKind::SpacetimePower { alpha: 2.0 });
    assert!(serde_json::from_str::<WeightSpec>(r#"{"kind":"constant","p":1.0,"dim":1}"#).is_err());
}

#[test]
fn grid_json_uses_short_keys() {
    let g = SpacetimeGrid::new(2, 16.0, 128, 1.0, 128).unwrap();
    let v = serde_json::to_value(&g).unwrap();
    assert_eq!(v["L"], 16.0);
    assert_eq!(v["Nt"], 128);
    let back: SpacetimeGrid = serde_json::from_value(v).unwrap();
    assert_eq!(back, g);
    assert!(serde_json::from_str::<SpacetimeGrid>(r#"{"d":1,"L":1,"N":7,"T":1,"Nt":4}"#).is_err());
    assert!(serde_json::from_str::<SpacetimeGrid>(r#"{"d":3,"L":1,"N":8,"T":1,"Nt":4}"#).is_err());
}

#[test]
fn shipped_configs_parse() {
    let mut n = 0;
    for entry in std::fs::read_dir(configs_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            let c = ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{path:?}: {e}"));
            assert!(c.scenario.is_some(), "{path:?}");
            n += 1;
        }
    }
    assert!(n >= 10);
}

#[test]
fn config_rejects_unknown_fields() {
    let j = r#"{"scenario":"solve","grid":{"d":1,"L":1,"N":8,"T":1,"Nt":4},"gird":1}"#;
    assert!(ExperimentConfig::from_json(j).is_err());
}

#[test]
fn config_round_trip() {
    let c = ExperimentConfig::load(&configs_dir().join("apriori_mixed.json")).unwrap();
    let j = serde_json::to_string(&c).unwrap();
    let back = ExperimentConfig::from_json(&j).unwrap();
    assert_eq!(
        serde_json::to_value(&back).unwrap(),
        serde_json::to_value(&c).unwrap()
    );
}

#[test]
fn scenario_names() {
    for s in Scenario::ALL {
        assert_eq!(s.as_str().parse::<Scenario>().unwrap(), s);
        assert_eq!(s.as_str().replace('_', "-").parse::<Scenario>().unwrap(), s);
    }
    assert!("nonsense".parse::<Scenario>().is_err());
}

#[test]
fn field_binary_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let g = SpacetimeGrid::new(2, 3.0, 8, 0.5, 4).unwrap();
    let f = Field::from_fn(&g, |t, x| Complex64::new(x[0] - t, x[1] * t + 0.1));
    let path = dir.path().join("f.bin");
    save_field(&path, &f).unwrap();
    let back = load_field(&path).unwrap();
    assert_eq!(back.grid(), f.grid());
    assert_eq!(back.layout(), f.layout());
    assert!(back.values().iter().zip(f.values()).all(|(a, b)| a == b));
    let len = std::fs::metadata(&path).unwrap().len() as usize;
    let header_len = std::fs::read(&path)
        .unwrap()
        .iter()
        .position(|&b| b == b'\n')
        .unwrap()
        + 1;
    assert_eq!(len - header_len, 16 * f.values().len());
}

#[test]
fn kernel_slice_dump_header() {
    let g = SpacetimeGrid::new(1, 8.0, 64, 1.0, 8).unwrap();
    let s = Symbol::fractional_laplacian(2.0).unwrap();
    let k = build_kernel_slice(&s, &g, 0.5, 0.25, 0.0, 0, &[1]).unwrap();
    let mut buf = Vec::new();
    k.write_binary(&mut buf).unwrap();
    let (h, data) = read_binary(buf.as_slice()).unwrap();
    assert_eq!(h["t"], 0.5);
    assert_eq!(h["s"], 0.25);
    assert_eq!(h["alpha"], serde_json::json!([1]));
    assert_eq!(data, k.values);
}

#[test]
fn report_csv_and_json() {
    let mut r = EstimateReport::new("demo");
    r.push(
        ReportRow::new("a", "op", "ref")
            .measured(1.5)
            .theory(1.0)
            .fit(1.02, 0.01)
            .pass_if(true),
    );
    r.push(
        ReportRow::new("b", "op", "ref")
            .measured(f64::NAN)
            .verdict(Verdict::Info),
    );
    let csv = r.to_csv_string().unwrap();
    let header = csv.lines().next().unwrap();
    assert_eq!(header, CSV_HEADER.join(","));
    assert_eq!(
        header,
        "scenario,case,input_params,measured,theory,slope,stderr,verdict"
    );
    assert_eq!(csv.lines().count(), 3);
    let dir = tempfile::tempdir().unwrap();
    r.write_dir(dir.path()).unwrap();
    let back: EstimateReport =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap())
            .unwrap();
    assert_eq!(back.rows.len(), 2);
    assert!(back.rows[1].measured.is_nan());
    assert_eq!(back.rows[0].slope, Some(1.02));
    assert!(back.all_pass());
}
