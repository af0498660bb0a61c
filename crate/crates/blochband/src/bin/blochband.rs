//! Command-line driver: band sweeps, degeneracy analysis, Dirac-point
//! location and trajectory scans, symmetry-breaking Chern computations, and
//! amplitude-ladder asymptotics. Every command writes its outputs together
//! with a resolved configuration that reproduces the run.
//!
//! Exit codes: 0 success, 2 configuration error, 3 hypothesis failure,
//! 4 solver failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use blochband::bloch::{band_structure, Perturbations};
use blochband::breaking::{c_breaking_params_dirac, p_breaking_params_dirac};
use blochband::chern::chern_number;
use blochband::config::{load_even_field, load_odd_potential, PerturbationSpec, RunConfig};
use blochband::degeneracy::find_quadratic_degeneracy_with_tol;
use blochband::dirac::{locate_dirac_with_tol, trajectory_scan};
use blochband::error::Error;
use blochband::report::{
    write_asymptotics_csv, write_bands_csv, write_curvature_csv, write_json,
    write_trajectory_csv, AsymptoticsReport, ChernReport, DegeneracyReport, DiracReport,
};
use blochband::{Deformation, EvenScalarField, OddPotential, PlaneWaveBasis};

#[derive(Parser)]
#[command(
    name = "blochband",
    about = "Floquet-Bloch band structures of square-lattice operators: degeneracies, Dirac points, Chern numbers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// output directory
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// plane-wave cutoff override
    #[arg(long, global = true)]
    cutoff: Option<u32>,
    /// rayon worker threads
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// band energies along a quasimomentum path or grid -> CSV
    Bands,
    /// quadratic degeneracy analysis -> JSON report
    Degeneracy,
    /// locate the split Dirac pair -> JSON report
    Dirac,
    /// symmetry-broken Chern number -> JSON report + curvature CSV
    Chern,
    /// dispersion-parameter asymptotics over an amplitude ladder -> CSV
    Asymptotics,
    /// Dirac trajectory under a deformation family -> CSV
    Scan,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Symmetry { .. } | Error::Json(_) | Error::Io(_) => 2,
        Error::Hypothesis(_) | Error::RotationBroken { .. } | Error::BandNotIsolated { .. } => 3,
        _ => 4,
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, Error> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::from_file(path)?,
        None => {
            return Err(Error::Config(
                "--config <file> is required (see README for the schema)".into(),
            ))
        }
    };
    if let Some(n) = cli.cutoff {
        cfg.cutoff = n;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), Error> {
    let cfg = load_config(cli)?;
    std::fs::create_dir_all(&cli.out)?;
    write_json(&cli.out.join("resolved_config.json"), &cfg)?;
    let out = cli.out.clone();
    let basis = PlaneWaveBasis::new(cfg.cutoff);
    let potential = cfg.build_potential()?;
    let deformation = cfg.build_deformation()?;
    let window = cfg.scenario.window.unwrap_or((f64::MIN, f64::MAX));

    match cli.command {
        Command::Bands => {
            let kpoints = cfg.scenario.kpath.points();
            let bands = band_structure(
                &basis,
                &potential,
                &deformation,
                &kpoints,
                cfg.scenario.band_count,
            )?;
            write_bands_csv(&out.join("bands.csv"), &bands)?;
            if let Some(nvec) = cfg.scenario.dump_vectors {
                let dump = dump_vectors(&basis, &potential, &deformation, &kpoints, &cfg, nvec)?;
                write_json(&out.join("vectors.json"), &dump)?;
            }
            println!(
                "wrote {} k-points to {}",
                bands.len(),
                out.join("bands.csv").display()
            );
        }
        Command::Degeneracy => {
            let deg = find_quadratic_degeneracy_with_tol(
                &basis,
                &potential,
                window,
                cfg.tolerances.degeneracy,
            )?;
            let report = DegeneracyReport::from_degeneracy(&deg);
            write_json(&out.join("degeneracy.json"), &report)?;
            println!(
                "E_S = {:.9}, alphas = {:?}, betas = {:?}, flags all = {}",
                deg.e_s,
                deg.alphas,
                deg.betas,
                deg.flags.all()
            );
        }
        Command::Dirac => {
            let deg = find_quadratic_degeneracy_with_tol(
                &basis,
                &potential,
                window,
                cfg.tolerances.degeneracy,
            )?;
            let pair = locate_dirac_with_tol(
                &basis,
                &potential,
                &deg,
                &deformation,
                cfg.tolerances.newton,
                cfg.tolerances.gap,
            )?;
            let report = DiracReport {
                e_s: deg.e_s,
                tau0: deformation.tau0,
                tau: [deformation.tau1, deformation.tau3],
                tau_norm: deformation.tau_norm,
                phi: deformation.phi,
                pair,
            };
            write_json(&out.join("dirac.json"), &report)?;
            println!(
                "D+ = ({:.9}, {:.9}), E_D = {:.9}, gap residual = {:.2e}",
                report.pair.plus.d[0],
                report.pair.plus.d[1],
                report.pair.plus.e_d,
                report.pair.plus.gap_residual
            );
            if let Some(spec) = &cfg.scenario.perturbation {
                let (kind, tp, tm) = match spec {
                    PerturbationSpec::OddSine { w, .. } => {
                        let wpot = OddPotential::sine(*w, cfg.cutoff);
                        let (tp, tm) = p_breaking_params_dirac(
                            &basis, &potential, &deformation, &deg,
                            report.pair.plus.e_d, report.pair.plus.d, &wpot,
                        )?;
                        ("parity", tp, tm)
                    }
                    PerturbationSpec::OddFile { path, .. } => {
                        let wpot = load_odd_potential(path)?;
                        let (tp, tm) = p_breaking_params_dirac(
                            &basis, &potential, &deformation, &deg,
                            report.pair.plus.e_d, report.pair.plus.d, &wpot,
                        )?;
                        ("parity", tp, tm)
                    }
                    PerturbationSpec::EvenCosine { a1, .. } => {
                        let a = EvenScalarField::cosine(0.0, *a1, cfg.cutoff);
                        let (tp, tm) = c_breaking_params_dirac(
                            &basis, &potential, &deformation, &deg,
                            report.pair.plus.e_d, report.pair.plus.d, &a,
                        )?;
                        ("conjugation", tp, tm)
                    }
                    PerturbationSpec::EvenFile { path, .. } => {
                        let a = load_even_field(path)?;
                        let (tp, tm) = c_breaking_params_dirac(
                            &basis, &potential, &deformation, &deg,
                            report.pair.plus.e_d, report.pair.plus.d, &a,
                        )?;
                        ("conjugation", tp, tm)
                    }
                };
                write_json(
                    &out.join("breaking_params.json"),
                    &serde_json::json!({ "kind": kind, "theta_plus": tp, "theta_minus": tm }),
                )?;
            }
        }
        Command::Chern => {
            let spec = cfg.scenario.perturbation.as_ref().ok_or_else(|| {
                Error::Config("chern requires scenario.perturbation".into())
            })?;
            let odd_hold;
            let even_hold;
            let perturbations = match spec {
                PerturbationSpec::OddSine { w, delta } => {
                    odd_hold = OddPotential::sine(*w, cfg.cutoff);
                    Perturbations {
                        odd: Some((*delta, &odd_hold)),
                        ..Default::default()
                    }
                }
                PerturbationSpec::OddFile { path, delta } => {
                    odd_hold = load_odd_potential(path)?;
                    Perturbations {
                        odd: Some((*delta, &odd_hold)),
                        ..Default::default()
                    }
                }
                PerturbationSpec::EvenCosine { a1, delta } => {
                    even_hold = EvenScalarField::cosine(0.0, *a1, cfg.cutoff);
                    Perturbations {
                        magneto: Some((*delta, &even_hold)),
                        ..Default::default()
                    }
                }
                PerturbationSpec::EvenFile { path, delta } => {
                    even_hold = load_even_field(path)?;
                    Perturbations {
                        magneto: Some((*delta, &even_hold)),
                        ..Default::default()
                    }
                }
            };
            let result = chern_number(
                &basis,
                &potential,
                deformation.metric(),
                perturbations,
                cfg.scenario.band_index,
                cfg.scenario.grid,
            )?;
            let report = ChernReport {
                band: result.band_index,
                grid: result.grid_size,
                chern: result.chern,
                residual: result.rounding_residual,
                min_gap: result.min_gap,
            };
            write_json(&out.join("chern.json"), &report)?;
            write_curvature_csv(
                &out.join("curvature.csv"),
                result.grid_size,
                &result.curvature,
            )?;
            println!(
                "band {} chern = {} (residual {:.2e}, min gap {:.3e})",
                report.band, report.chern, report.residual, report.min_gap
            );
        }
        Command::Asymptotics => {
            let report = asymptotics(&basis, &cfg)?;
            write_asymptotics_csv(&out.join("asymptotics.csv"), &report)?;
            write_json(&out.join("asymptotics.json"), &report)?;
            println!(
                "E_S slope = {:.6}; delta*alpha limits = {:?}; beta limits = {:?}",
                report.e_s_slope, report.alpha_limits, report.beta_limits
            );
        }
        Command::Scan => {
            let spec = cfg
                .scenario
                .family
                .as_ref()
                .ok_or_else(|| Error::Config("scan requires scenario.family".into()))?;
            let deg = find_quadratic_degeneracy_with_tol(
                &basis,
                &potential,
                window,
                cfg.tolerances.degeneracy,
            )?;
            let steps: Vec<f64> = (0..=spec.steps)
                .map(|i| i as f64 / spec.steps as f64)
                .collect();
            let family_kind = spec.family;
            let max_p = spec.max_parameter;
            let scan = trajectory_scan(
                &basis,
                &potential,
                &deg,
                move |s| {
                    if s == 0.0 {
                        Ok(Deformation::identity())
                    } else {
                        Deformation::family(family_kind, lerp_parameter(family_kind, max_p, s))
                    }
                },
                &steps,
            )?;
            write_trajectory_csv(&out.join("trajectory.csv"), &scan)?;
            if let Some(reason) = &scan.stop_reason {
                println!("scan stopped early: {reason}");
            }
            println!("wrote {} trajectory points", scan.points.len());
        }
    }
    Ok(())
}

fn dump_vectors(
    basis: &PlaneWaveBasis,
    potential: &blochband::SquareLatticePotential,
    deformation: &Deformation,
    kpoints: &[[f64; 2]],
    cfg: &RunConfig,
    nvec: usize,
) -> Result<serde_json::Value, Error> {
    let mut entries = Vec::new();
    for &k in kpoints.iter().take(nvec) {
        let h = blochband::bloch::assemble(
            basis,
            k,
            potential,
            deformation.metric(),
            Perturbations::default(),
        )?;
        let sol = blochband::bloch::eigensolve(&h, cfg.scenario.band_count)?;
        let mut states = Vec::new();
        for c in 0..cfg.scenario.band_count {
            let col: Vec<[f64; 2]> = sol.vectors.column(c).iter().map(|z| [z.re, z.im]).collect();
            states.push(serde_json::json!({
                "energy": sol.energies[c],
                "coefficients": col,
            }));
        }
        entries.push(serde_json::json!({
            "k": k,
            "indices": basis.indices().iter().map(|m| [m.m1, m.m2]).collect::<Vec<_>>(),
            "states": states,
        }));
    }
    Ok(serde_json::Value::Array(entries))
}

/// Families are parameterized so `s = 0` is the identity.
fn lerp_parameter(kind: blochband::DeformationKind, max_p: f64, s: f64) -> f64 {
    match kind {
        blochband::DeformationKind::Tilt => s * max_p,
        // dilation and uniaxial reach the identity at parameter 1
        blochband::DeformationKind::Dilation | blochband::DeformationKind::Uniaxial => {
            1.0 + s * (max_p - 1.0)
        }
    }
}

fn asymptotics(base_basis: &PlaneWaveBasis, cfg: &RunConfig) -> Result<AsymptoticsReport, Error> {
    let potential = cfg.build_potential()?;
    let deltas = cfg.scenario.deltas.clone();
    if deltas.len() < 2 {
        return Err(Error::Config("asymptotics needs at least two deltas".into()));
    }
    let e0 = 2.0 * std::f64::consts::PI * std::f64::consts::PI;
    let mut e_s = Vec::new();
    let mut alphas = Vec::new();
    let mut betas = Vec::new();
    for &d in &deltas {
        let scaled = potential.scaled(d);
        let w = cfg.scenario.window.unwrap_or((e0 - 1.0, e0 + 1.0));
        let deg = find_quadratic_degeneracy_with_tol(
            base_basis,
            &scaled,
            w,
            cfg.tolerances.degeneracy,
        )?;
        e_s.push(deg.e_s);
        alphas.push(deg.alphas);
        betas.push(deg.betas);
    }
    let e_s_slope = slope(&deltas, &e_s);
    let mut alpha_limits = [0.0f64; 3];
    for j in 0..3 {
        let ys: Vec<f64> = deltas.iter().zip(&alphas).map(|(d, a)| d * a[j]).collect();
        alpha_limits[j] = intercept(&deltas, &ys);
    }
    let d2: Vec<f64> = deltas.iter().map(|d| d * d).collect();
    let beta_limits = [
        intercept(&deltas, &betas.iter().map(|b| b[0]).collect::<Vec<_>>()),
        intercept(&deltas, &betas.iter().map(|b| b[1]).collect::<Vec<_>>()),
        // beta2 vanishes quadratically: report the delta^2 slope
        slope(&d2, &betas.iter().map(|b| b[2]).collect::<Vec<_>>()),
    ];
    Ok(AsymptoticsReport {
        deltas,
        e_s,
        alphas,
        betas,
        e_s_slope,
        alpha_limits,
        beta_limits,
    })
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

fn intercept(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    (sy - slope(xs, ys) * sx) / n
}
