use std::path::Path;

use sbl_core::analysis::{error_against_reference, ComparisonKind};
use sbl_core::harness::{make_reference, solve_to_record, ReferenceFile, RunConfig};
use sbl_core::mesh::{export_mesh, MeshFormat, MeshRecord, Regime};

fn shipped(name: &str) -> RunConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    RunConfig::from_file(&path).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn shipped_configs_parse() {
    let ex1 = shipped("example1.toml");
    assert_eq!(ex1.sweep.n_rows(), 21);
    assert_eq!(ex1.sweep.mode, ComparisonKind::Reference);
    let fixed = shipped("example1_fixed_eps2.toml");
    assert_eq!(fixed.sweep.eps1.len(), 4);
    assert_eq!(shipped("example2.toml").problem.forcing.name(), "inverse-distance");
    assert_eq!(shipped("manufactured_disk.toml").sweep.mode, ComparisonKind::Exact);
}

#[test]
fn stored_reference_reproduces_errors() {
    let cfg = shipped("example1.toml").problem.with_degree(3);
    let dir = tempfile::tempdir().unwrap();
    let (coarse, _) = solve_to_record(&cfg).unwrap();
    let (reference, file) = make_reference(&cfg).unwrap();
    assert_eq!(reference.degree(), 5);
    let path = dir.path().join("ref.json");
    file.write(&path).unwrap();
    let back = ReferenceFile::read(&path).unwrap();
    assert_eq!(back, file);
    let loaded = back.solution().unwrap();
    assert_eq!(loaded.regime(), Regime::PreAsymptotic);
    let direct = error_against_reference(&coarse, &reference).unwrap();
    let stored = error_against_reference(&coarse, &loaded).unwrap();
    assert_eq!(direct.energy_error.to_bits(), stored.energy_error.to_bits());
    assert_eq!(direct.balanced_error.to_bits(), stored.balanced_error.to_bits());
}

#[test]
fn mesh_json_round_trip() {
    let cfg = shipped("example1.toml").problem;
    let mesh = cfg.mesh_spec().build().unwrap();
    let json = String::from_utf8(export_mesh(&mesh, MeshFormat::Json).unwrap()).unwrap();
    let rec = MeshRecord::from_json(&json).unwrap();
    assert_eq!(rec, MeshRecord::from_mesh(&mesh));
    assert_eq!(rec.elements.len(), mesh.n_elements());
}
