//! File formats: circuit JSON, distribution CSV and experiment CSV.

use std::io::{Read, Write};
use std::path::Path;

use bosonlab_core::architecture::{build_butterfly, build_inverse_butterfly, build_kaleidoscope};
use bosonlab_core::probability::OutcomeConfig;
use bosonlab_core::sampling::{EnsembleKind, ExperimentRecord};
use bosonlab_core::{ArchLabel, Architecture, Circuit, Complex64, Gate2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Core(#[from] bosonlab_core::Error),
    #[error("format error: {0}")]
    Format(String),
}

pub type IoResult<T> = Result<T, IoError>;

/// Header of the collision-ratio CSV.
pub const EXPERIMENT_HEADER: [&str; 9] = ["ensemble", "M", "N", "q", "circuit", "seed", "cf_count", "samples", "ratio"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct GateJson {
    layer: usize,
    modes: [usize; 2],
    /// Row-major `[re, im]` pairs.
    matrix: [[f64; 2]; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CircuitJson {
    modes: usize,
    architecture: String,
    gates: Vec<GateJson>,
}

fn build_architecture(label: ArchLabel, modes: usize) -> IoResult<Architecture> {
    Ok(match label {
        ArchLabel::Butterfly => build_butterfly(modes)?,
        ArchLabel::InverseButterfly => build_inverse_butterfly(modes)?,
        ArchLabel::Kaleidoscope(q) => build_kaleidoscope(modes, q)?,
    })
}

/// Serialize a circuit. Doubles print in shortest round-trip form, so
/// reading the text back reproduces every bit.
pub fn circuit_to_json(c: &Circuit) -> IoResult<String> {
    let doc = CircuitJson {
        modes: c.modes(),
        architecture: c.arch().label().to_string(),
        gates: c
            .iter()
            .map(|(p, g)| GateJson {
                layer: p.layer,
                modes: [p.mode_a, p.mode_b],
                matrix: g.0.map(|z| [z.re, z.im]),
            })
            .collect(),
    };
    Ok(serde_json::to_string_pretty(&doc)?)
}

pub fn circuit_from_json(text: &str) -> IoResult<Circuit> {
    let doc: CircuitJson = serde_json::from_str(text)?;
    let label: ArchLabel = doc.architecture.parse()?;
    let arch = build_architecture(label, doc.modes)?;
    if arch.gate_count() != doc.gates.len() {
        return Err(IoError::Format(format!(
            "{} needs {} gates, file has {}",
            doc.architecture,
            arch.gate_count(),
            doc.gates.len()
        )));
    }
    let mut gates = Vec::with_capacity(doc.gates.len());
    for (p, g) in arch.placements().zip(&doc.gates) {
        if p.layer != g.layer || [p.mode_a, p.mode_b] != g.modes {
            return Err(IoError::Format(format!(
                "gate at layer {} on modes {:?} does not match the {} layout",
                g.layer, g.modes, doc.architecture
            )));
        }
        gates.push(Gate2(g.matrix.map(|[re, im]| Complex64::new(re, im))));
    }
    Ok(Circuit::new(arch, gates)?)
}

pub fn write_circuit(path: &Path, c: &Circuit) -> IoResult<()> {
    std::fs::write(path, circuit_to_json(c)?)?;
    Ok(())
}

pub fn read_circuit(path: &Path) -> IoResult<Circuit> {
    circuit_from_json(&std::fs::read_to_string(path)?)
}

/// `outcome,probability` rows; outcomes written as `a|b|c`.
pub fn write_distribution<W: Write>(w: W, dist: &[(OutcomeConfig, f64)]) -> IoResult<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["outcome", "probability"])?;
    for (s, p) in dist {
        out.write_record([s.to_string(), format!("{p:?}")])?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_distribution<R: Read>(r: R) -> IoResult<Vec<(OutcomeConfig, f64)>> {
    let mut rd = csv::Reader::from_reader(r);
    let mut out = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let s: OutcomeConfig = rec
            .get(0)
            .ok_or_else(|| IoError::Format("missing outcome".into()))?
            .parse()?;
        let p: f64 = rec
            .get(1)
            .and_then(|x| x.parse().ok())
            .ok_or_else(|| IoError::Format("bad probability".into()))?;
        out.push((s, p));
    }
    Ok(out)
}

pub fn write_experiment_csv<W: Write>(w: W, records: &[ExperimentRecord]) -> IoResult<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(EXPERIMENT_HEADER)?;
    for r in records {
        out.write_record([
            r.ensemble.id().to_string(),
            r.modes.to_string(),
            r.photons.to_string(),
            r.q.to_string(),
            r.circuit.to_string(),
            r.seed.to_string(),
            r.cf_count.to_string(),
            r.samples.to_string(),
            format!("{:?}", r.ratio),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_experiment_csv<R: Read>(r: R) -> IoResult<Vec<ExperimentRecord>> {
    let mut rd = csv::Reader::from_reader(r);
    let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    if header != EXPERIMENT_HEADER {
        return Err(IoError::Format(format!("unexpected header {header:?}")));
    }
    let mut out = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let field = |i: usize| rec.get(i).ok_or_else(|| IoError::Format("short row".into()));
        let num = |i: usize| -> IoResult<u64> {
            field(i)?.parse().map_err(|_| IoError::Format(format!("bad integer in column {i}")))
        };
        let ensemble: EnsembleKind = field(0)?.parse()?;
        out.push(ExperimentRecord {
            ensemble,
            modes: num(1)? as usize,
            photons: num(2)? as usize,
            q: num(3)? as usize,
            circuit: num(4)? as usize,
            seed: num(5)?,
            cf_count: num(6)? as usize,
            samples: num(7)? as usize,
            ratio: field(8)?.parse().map_err(|_| IoError::Format("bad ratio".into()))?,
            wall_time_s: 0.0,
        });
    }
    Ok(out)
}
