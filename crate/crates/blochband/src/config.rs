//! Run configuration: serializable description of the operator, the
//! deformation, solver settings, and per-command scenario parameters.
//! A run re-executed from its emitted resolved configuration reproduces
//! its outputs.

use std::collections::BTreeMap;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::deformation::{Deformation, DeformationKind};
use crate::error::{Error, Result};
use crate::lattice::FourierIndex;
use crate::potential::{EvenScalarField, OddPotential, SquareLatticePotential};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub potential: PotentialSpec,
    #[serde(default)]
    pub deformation: DeformationSpec,
    #[serde(default = "default_cutoff")]
    pub cutoff: u32,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub scenario: ScenarioConfig,
    #[serde(default)]
    pub seed: u64,
}

fn default_cutoff() -> u32 {
    8
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialSpec {
    /// the two-orbit cosine potential
    Example { v01: f64, v11: f64 },
    /// explicit representatives expanded over their symmetry orbits
    Representatives {
        #[serde(default)]
        v0: f64,
        representatives: Vec<RepCoeff>,
        cutoff: u32,
    },
    /// JSON file holding a `Representatives`-shaped specification
    File { path: String },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RepCoeff {
    pub m1: i32,
    pub m2: i32,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DeformationSpec {
    #[default]
    Identity,
    Family {
        family: DeformationKind,
        parameter: f64,
    },
    Matrix {
        t: [[f64; 2]; 2],
    },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Tolerances {
    /// two levels are degenerate below this times `max(1, |E|)`
    pub degeneracy: f64,
    /// Newton acceptance on the reduced-matrix components
    pub newton: f64,
    /// direct-gap acceptance at a located degeneracy
    pub gap: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            degeneracy: 1e-8,
            newton: 1e-10,
            gap: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioConfig {
    /// quasimomentum path for `bands`
    #[serde(default)]
    pub kpath: KPathSpec,
    /// number of bands to emit
    #[serde(default = "default_band_count")]
    pub band_count: usize,
    /// energy window for degeneracy detection (defaults to a window around
    /// the lowest corner cluster)
    #[serde(default)]
    pub window: Option<(f64, f64)>,
    /// Chern scenario: 0-based band index
    #[serde(default = "default_band_index")]
    pub band_index: usize,
    /// Chern scenario: grid size
    #[serde(default = "default_grid")]
    pub grid: usize,
    /// symmetry-breaking perturbation
    #[serde(default)]
    pub perturbation: Option<PerturbationSpec>,
    /// amplitude ladder for `asymptotics`
    #[serde(default = "default_deltas")]
    pub deltas: Vec<f64>,
    /// deformation family scan for `scan`
    #[serde(default)]
    pub family: Option<FamilyScanSpec>,
    /// `bands`: also dump eigenvector coefficients for the first n k-points
    #[serde(default)]
    pub dump_vectors: Option<usize>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            kpath: KPathSpec::default(),
            band_count: default_band_count(),
            window: None,
            band_index: default_band_index(),
            grid: default_grid(),
            perturbation: None,
            deltas: default_deltas(),
            family: None,
            dump_vectors: None,
        }
    }
}

fn default_band_count() -> usize {
    8
}
fn default_band_index() -> usize {
    1
}
fn default_grid() -> usize {
    64
}
fn default_deltas() -> Vec<f64> {
    vec![0.01, 0.02, 0.04]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KPathSpec {
    /// Gamma -> M -> X -> Gamma
    Preset {
        #[serde(default = "default_samples")]
        samples_per_segment: usize,
    },
    Points {
        points: Vec<[f64; 2]>,
        #[serde(default = "default_samples")]
        samples_per_segment: usize,
    },
    Grid {
        center: [f64; 2],
        half_width: f64,
        n: usize,
    },
}

fn default_samples() -> usize {
    40
}

impl Default for KPathSpec {
    fn default() -> Self {
        KPathSpec::Preset {
            samples_per_segment: default_samples(),
        }
    }
}

impl KPathSpec {
    pub fn points(&self) -> Vec<[f64; 2]> {
        match self {
            KPathSpec::Preset {
                samples_per_segment,
            } => {
                let pi = std::f64::consts::PI;
                segments(
                    &[[0.0, 0.0], [pi, pi], [pi, 0.0], [0.0, 0.0]],
                    *samples_per_segment,
                )
            }
            KPathSpec::Points {
                points,
                samples_per_segment,
            } => segments(points, *samples_per_segment),
            KPathSpec::Grid {
                center,
                half_width,
                n,
            } => {
                let mut out = Vec::with_capacity(n * n);
                for i in 0..*n {
                    for j in 0..*n {
                        let fx = if *n > 1 {
                            2.0 * i as f64 / (*n as f64 - 1.0) - 1.0
                        } else {
                            0.0
                        };
                        let fy = if *n > 1 {
                            2.0 * j as f64 / (*n as f64 - 1.0) - 1.0
                        } else {
                            0.0
                        };
                        out.push([center[0] + half_width * fx, center[1] + half_width * fy]);
                    }
                }
                out
            }
        }
    }
}

fn segments(corners: &[[f64; 2]], per_segment: usize) -> Vec<[f64; 2]> {
    let mut out = Vec::new();
    for w in corners.windows(2) {
        for i in 0..per_segment {
            let t = i as f64 / per_segment as f64;
            out.push([
                w[0][0] + t * (w[1][0] - w[0][0]),
                w[0][1] + t * (w[1][1] - w[0][1]),
            ]);
        }
    }
    if let Some(last) = corners.last() {
        out.push(*last);
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PerturbationSpec {
    /// odd sine potential with amplitude `w`, coupling `delta`
    OddSine { w: f64, delta: f64 },
    /// even cosine field with amplitude `a1`, magneto-optic coupling `delta`
    EvenCosine { a1: f64, delta: f64 },
    /// odd coefficients from file
    OddFile { path: String, delta: f64 },
    /// even coefficients from file
    EvenFile { path: String, delta: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FamilyScanSpec {
    pub family: DeformationKind,
    pub max_parameter: f64,
    #[serde(default = "default_steps")]
    pub steps: usize,
}

fn default_steps() -> usize {
    20
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: RunConfig =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{path:?}: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.cutoff < 1 || self.cutoff > 24 {
            return Err(Error::Config(format!(
                "cutoff {} outside the supported range 1..=24",
                self.cutoff
            )));
        }
        if self.scenario.grid < 4 {
            return Err(Error::Config("chern grid must be at least 4".into()));
        }
        Ok(())
    }

    pub fn build_potential(&self) -> Result<SquareLatticePotential> {
        build_potential_spec(&self.potential, self.cutoff)
    }

    pub fn build_deformation(&self) -> Result<Deformation> {
        match &self.deformation {
            DeformationSpec::Identity => Ok(Deformation::identity()),
            DeformationSpec::Family { family, parameter } => {
                Deformation::family(*family, *parameter)
            }
            DeformationSpec::Matrix { t } => Deformation::from_matrix(crate::linalg2::Mat2(*t)),
        }
    }
}

pub fn build_potential_spec(spec: &PotentialSpec, cutoff: u32) -> Result<SquareLatticePotential> {
    match spec {
        PotentialSpec::Example { v01, v11 } => {
            let _ = cutoff;
            Ok(SquareLatticePotential::example(*v01, *v11, 2))
        }
        PotentialSpec::Representatives {
            v0,
            representatives,
            cutoff,
        } => {
            let reps: Vec<(FourierIndex, f64)> = representatives
                .iter()
                .map(|r| (FourierIndex::new(r.m1, r.m2), r.value))
                .collect();
            SquareLatticePotential::from_representatives(*v0, &reps, *cutoff)
        }
        PotentialSpec::File { path } => {
            let text = std::fs::read_to_string(path)?;
            #[derive(Deserialize)]
            struct FileSpec {
                #[serde(default)]
                v0: f64,
                representatives: Vec<RepCoeff>,
                cutoff: u32,
            }
            let fs: FileSpec = serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("potential file {path}: {e}")))?;
            let reps: Vec<(FourierIndex, f64)> = fs
                .representatives
                .iter()
                .map(|r| (FourierIndex::new(r.m1, r.m2), r.value))
                .collect();
            SquareLatticePotential::from_representatives(fs.v0, &reps, fs.cutoff)
        }
    }
}

/// Coefficient file for odd/even perturbations, tagged by symmetry class.
#[derive(Debug, Deserialize)]
struct PerturbationFile {
    symmetry: String,
    coefficients: Vec<ComplexCoeff>,
    cutoff: u32,
}

#[derive(Debug, Clone, Copy, Deserialize)]
struct ComplexCoeff {
    m1: i32,
    m2: i32,
    #[serde(default)]
    re: f64,
    #[serde(default)]
    im: f64,
}

pub fn load_odd_potential(path: &str) -> Result<OddPotential> {
    let text = std::fs::read_to_string(path)?;
    let f: PerturbationFile = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("perturbation file {path}: {e}")))?;
    if f.symmetry != "odd" {
        return Err(Error::Config(format!(
            "perturbation file {path} tagged '{}', expected 'odd'",
            f.symmetry
        )));
    }
    let mut map = BTreeMap::new();
    for c in f.coefficients {
        map.insert(FourierIndex::new(c.m1, c.m2), Complex64::new(c.re, c.im));
    }
    OddPotential::from_coeffs(map, f.cutoff)
}

pub fn load_even_field(path: &str) -> Result<EvenScalarField> {
    let text = std::fs::read_to_string(path)?;
    let f: PerturbationFile = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("perturbation file {path}: {e}")))?;
    if f.symmetry != "even" {
        return Err(Error::Config(format!(
            "perturbation file {path} tagged '{}', expected 'even'",
            f.symmetry
        )));
    }
    let mut map = BTreeMap::new();
    for c in f.coefficients {
        if c.im != 0.0 {
            return Err(Error::Config(format!(
                "even scalar field must have real coefficients, got im = {} at ({}, {})",
                c.im, c.m1, c.m2
            )));
        }
        map.insert(FourierIndex::new(c.m1, c.m2), c.re);
    }
    EvenScalarField::from_coeffs(map, f.cutoff)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trip() {
        let cfg = RunConfig {
            potential: PotentialSpec::Example { v01: 1.0, v11: 0.5 },
            deformation: DeformationSpec::Family {
                family: DeformationKind::Tilt,
                parameter: 0.01,
            },
            cutoff: 8,
            tolerances: Tolerances::default(),
            scenario: ScenarioConfig::default(),
            seed: 42,
        };
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back.cutoff, 8);
        assert_eq!(back.seed, 42);
        back.validate().unwrap();
        back.build_potential().unwrap();
        back.build_deformation().unwrap();
    }

    #[test]
    fn invalid_configs_rejected() {
        let text = r#"{
            "potential": {"kind": "example", "v01": 1.0, "v11": 0.5},
            "cutoff": 0
        }"#;
        let cfg: RunConfig = serde_json::from_str(text).unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn preset_path_hits_corners() {
        let pts = KPathSpec::default().points();
        let pi = std::f64::consts::PI;
        assert_eq!(pts[0], [0.0, 0.0]);
        assert!(pts.iter().any(|p| (p[0] - pi).abs() < 1e-12 && (p[1] - pi).abs() < 1e-12));
        assert_eq!(*pts.last().unwrap(), [0.0, 0.0]);
    }

    #[test]
    fn perturbation_files_validated() {
        let dir = std::env::temp_dir().join("blochband_cfg_test");
        std::fs::create_dir_all(&dir).unwrap();
        let odd = dir.join("odd.json");
        std::fs::write(
            &odd,
            r#"{"symmetry": "odd", "cutoff": 1, "coefficients": [
                {"m1": 1, "m2": 0, "im": -1.0}, {"m1": -1, "m2": 0, "im": 1.0}
            ]}"#,
        )
        .unwrap();
        load_odd_potential(odd.to_str().unwrap()).unwrap();
        // violating oddness is rejected
        let bad = dir.join("bad.json");
        std::fs::write(
            &bad,
            r#"{"symmetry": "odd", "cutoff": 1, "coefficients": [
                {"m1": 1, "m2": 0, "re": 1.0}, {"m1": -1, "m2": 0, "re": 1.0}
            ]}"#,
        )
        .unwrap();
        assert!(load_odd_potential(bad.to_str().unwrap()).is_err());
    }
}
