//! Round trips of the file formats.

use bosonlab::config::{Command, CollisionRatio, RunConfig};
use bosonlab::io::{
    circuit_from_json, circuit_to_json, read_circuit, read_distribution, read_experiment_csv, write_circuit,
    write_distribution, write_experiment_csv,
};
use bosonlab_core::architecture::{build_butterfly, build_kaleidoscope, circuit_unitary};
use bosonlab_core::probability::full_distribution;
use bosonlab_core::sampling::{collision_ratio_experiment, EnsembleKind, ExperimentConfig};
use bosonlab_core::{Circuit, OutcomeConfig, RngHandle};

#[test]
fn circuit_json_is_bit_exact() {
    let mut rng = RngHandle::new(17);
    for arch in [build_butterfly(8).unwrap(), build_kaleidoscope(16, 2).unwrap()] {
        let c = Circuit::random(arch, &mut rng);
        let back = circuit_from_json(&circuit_to_json(&c).unwrap()).unwrap();
        assert_eq!(back, c);
        for (a, b) in back.gates().iter().zip(c.gates()) {
            for (x, y) in a.0.iter().zip(b.0.iter()) {
                assert_eq!(x.re.to_bits(), y.re.to_bits());
                assert_eq!(x.im.to_bits(), y.im.to_bits());
            }
        }
    }
}

#[test]
fn circuit_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.json");
    let c = Circuit::random(build_kaleidoscope(4, 1).unwrap(), &mut RngHandle::new(3));
    write_circuit(&path, &c).unwrap();
    assert_eq!(read_circuit(&path).unwrap(), c);
}

#[test]
fn circuit_json_rejects_mismatched_layout() {
    let c = Circuit::random(build_butterfly(4).unwrap(), &mut RngHandle::new(1));
    // B* has the same gate count as B on 4 modes but the opposite layer order.
    let text = circuit_to_json(&c).unwrap().replacen("\"B\"", "\"B*\"", 1);
    assert_ne!(text, circuit_to_json(&c).unwrap());
    assert!(circuit_from_json(&text).is_err());
    let mut doc: serde_json::Value = serde_json::from_str(&circuit_to_json(&c).unwrap()).unwrap();
    doc["gates"][0]["modes"] = serde_json::json!([1, 3]);
    assert!(circuit_from_json(&doc.to_string()).is_err());
}

#[test]
fn distribution_csv_round_trip() {
    let c = Circuit::random(build_kaleidoscope(4, 1).unwrap(), &mut RngHandle::new(8));
    let dist = full_distribution(&circuit_unitary(&c), &OutcomeConfig::first_modes(4, 2).unwrap()).unwrap();
    let mut buf = Vec::new();
    write_distribution(&mut buf, &dist).unwrap();
    assert_eq!(read_distribution(buf.as_slice()).unwrap(), dist);
}

#[test]
fn experiment_csv_round_trip() {
    let cfg = ExperimentConfig {
        modes: 8,
        photons: vec![2, 3],
        reps: vec![1],
        circuits: 3,
        samples: 20,
        ensembles: vec![EnsembleKind::Local, EnsembleKind::Haar, EnsembleKind::LocalPerm],
        seed: 4,
    };
    let mut records = collision_ratio_experiment(&cfg).unwrap();
    for r in &mut records {
        r.wall_time_s = 0.0;
    }
    let mut buf = Vec::new();
    write_experiment_csv(&mut buf, &records).unwrap();
    assert_eq!(read_experiment_csv(buf.as_slice()).unwrap(), records);
}

#[test]
fn run_config_round_trips_through_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.json");
    let cfg = RunConfig {
        command: Command::CollisionRatio(CollisionRatio {
            photons: vec![4, 12],
            ensembles: "local,localperm".into(),
            ..Default::default()
        }),
        seed: u64::MAX,
        out: Some("out.csv".into()),
        format: None,
    };
    std::fs::write(&path, cfg.to_json().unwrap()).unwrap();
    assert_eq!(RunConfig::load(&path).unwrap(), cfg);
}
