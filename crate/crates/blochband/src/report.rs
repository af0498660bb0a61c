//! Serializable analysis reports and the fixed-format CSV writers.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::degeneracy::{HypothesisFlags, QuadraticDegeneracy};
use crate::dirac::{DiracPair, TrajectoryScan};
use crate::error::Result;
use crate::linalg2::Vec2;

/// Degeneracy analysis report (all scalars, vectors, flags, residuals).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DegeneracyReport {
    pub e_s: f64,
    pub k: Vec2,
    pub alphas: [f64; 3],
    pub betas: [f64; 3],
    pub flags: HypothesisFlags,
    pub generic_coefficients: bool,
    pub max_imag: f64,
    pub cluster: Vec<f64>,
    pub guard_gap: f64,
}

impl DegeneracyReport {
    pub fn from_degeneracy(deg: &QuadraticDegeneracy) -> Self {
        DegeneracyReport {
            e_s: deg.e_s,
            k: deg.k,
            alphas: deg.alphas,
            betas: deg.betas,
            flags: deg.flags,
            generic_coefficients: deg.generic_coefficients,
            max_imag: deg.max_imag,
            cluster: deg.cluster.clone(),
            guard_gap: deg.guard_gap,
        }
    }
}

/// Dirac pair report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiracReport {
    pub e_s: f64,
    pub tau0: f64,
    pub tau: Vec2,
    pub tau_norm: f64,
    pub phi: f64,
    pub pair: DiracPair,
}

/// Chern computation report (the curvature field goes to CSV separately).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChernReport {
    pub band: usize,
    pub grid: usize,
    pub chern: i32,
    pub residual: f64,
    pub min_gap: f64,
}

/// Fitted leading coefficients over an amplitude ladder.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AsymptoticsReport {
    pub deltas: Vec<f64>,
    pub e_s: Vec<f64>,
    pub alphas: Vec<[f64; 3]>,
    pub betas: Vec<[f64; 3]>,
    /// linear-regression slope of `E_S(delta) - E_S(0)`
    pub e_s_slope: f64,
    /// fitted limits of `delta * alpha_j`
    pub alpha_limits: [f64; 3],
    /// fitted limits of `beta_0`, `beta_1` and of `beta_2 / delta^2`
    pub beta_limits: [f64; 3],
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    Ok(())
}

/// Band table: header `k1,k2,E1..En`.
pub fn write_bands_csv(path: &Path, bands: &[(Vec2, Vec<f64>)]) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    let n = bands.first().map(|b| b.1.len()).unwrap_or(0);
    let mut header = String::from("k1,k2");
    for i in 1..=n {
        header.push_str(&format!(",E{i}"));
    }
    writeln!(f, "{header}")?;
    for (k, es) in bands {
        let mut line = format!("{:.17e},{:.17e}", k[0], k[1]);
        for e in es {
            line.push_str(&format!(",{e:.17e}"));
        }
        writeln!(f, "{line}")?;
    }
    Ok(())
}

/// Trajectory table: `s,tau_norm,phi,D+x,D+y,D-x,D-y,E_D,gap`.
pub fn write_trajectory_csv(path: &Path, scan: &TrajectoryScan) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "s,tau_norm,phi,D+x,D+y,D-x,D-y,E_D,gap")?;
    for p in &scan.points {
        writeln!(
            f,
            "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
            p.s,
            p.tau_norm,
            p.phi,
            p.d_plus[0],
            p.d_plus[1],
            p.d_minus[0],
            p.d_minus[1],
            p.e_d,
            p.gap
        )?;
    }
    Ok(())
}

/// Berry curvature field for heatmaps: `i,j,k1,k2,F`.
pub fn write_curvature_csv(path: &Path, grid: usize, curvature: &[f64]) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "i,j,k1,k2,F")?;
    let pi = std::f64::consts::PI;
    for i in 0..grid {
        for j in 0..grid {
            let k1 = -pi + 2.0 * pi * i as f64 / grid as f64;
            let k2 = -pi + 2.0 * pi * j as f64 / grid as f64;
            writeln!(
                f,
                "{i},{j},{k1:.17e},{k2:.17e},{:.17e}",
                curvature[i * grid + j]
            )?;
        }
    }
    Ok(())
}

/// Amplitude-ladder table for the asymptotics command:
/// `delta,E_S,alpha0,alpha1,alpha2,beta0,beta1,beta2`.
pub fn write_asymptotics_csv(path: &Path, report: &AsymptoticsReport) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "delta,E_S,alpha0,alpha1,alpha2,beta0,beta1,beta2")?;
    for (i, d) in report.deltas.iter().enumerate() {
        writeln!(
            f,
            "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
            d,
            report.e_s[i],
            report.alphas[i][0],
            report.alphas[i][1],
            report.alphas[i][2],
            report.betas[i][0],
            report.betas[i][1],
            report.betas[i][2]
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degeneracy_report_round_trips() {
        let rep = DegeneracyReport {
            e_s: 19.2,
            k: [std::f64::consts::PI, std::f64::consts::PI],
            alphas: [-13.6, -13.6, -26.9],
            betas: [-19.8, -19.7, 0.024],
            flags: HypothesisFlags {
                q1: true,
                q2: true,
                q3: true,
                q4: true,
                q5: true,
                q6: true,
            },
            generic_coefficients: true,
            max_imag: 1e-12,
            cluster: vec![18.2, 19.2, 19.2, 22.2],
            guard_gap: 0.98,
        };
        let text = serde_json::to_string(&rep).unwrap();
        let back: DegeneracyReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back.alphas, rep.alphas);
        assert_eq!(back.cluster, rep.cluster);
    }

    #[test]
    fn bands_csv_format() {
        let dir = std::env::temp_dir().join("blochband_report_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bands.csv");
        write_bands_csv(
            &path,
            &[([0.0, 0.0], vec![1.0, 2.0]), ([0.1, 0.2], vec![3.0, 4.0])],
        )
        .unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "k1,k2,E1,E2");
        assert_eq!(text.lines().count(), 3);
    }
}
