//! Command-line front end: configuration parsing, run orchestration and
//! artifact output.

use crate::bubble::{
    sensitivity_validation, solve_zeroth, write_sweep_csv, write_vtk, CaseConfig, FirstProblem,
};
use crate::dbp::{linearize_poisson_demo, MixedBc};
use crate::error::{Error, Result};
use crate::exec::{with_jobs, Execution};
use crate::fem::NewtonSettings;
use crate::mesh::build_disk_mesh;
use crate::selftest;
use crate::surface::Vec2;
use clap::{Parser, ValueEnum};
use serde::Deserialize;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// operator identities and perturbation-form checks
    Selftest,
    /// linearised Robin-Poisson problem on the unit disk against direct solves
    PoissonDemo,
    /// zeroth- and first-order bubble solve with VTK export
    Bubble,
    /// first-order force against finite differences over an offset grid
    Sweep,
}

#[derive(Debug, Parser)]
#[command(name = "defdom", version, about = "Finite elements on deformable domains")]
pub struct Cli {
    pub command: Command,
    /// TOML case file (keys Ca, V_B, L, eps, mesh_h, eps_grid, d_eps)
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// output directory, created if missing
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// worker threads for sweeps and assembly
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// repeat for more detail (-v Newton traces, -vv debug)
    #[arg(short, long, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

/// Contents of the case file. Names follow the physical symbols.
#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CaseFile {
    #[serde(rename = "Ca")]
    pub ca: Option<f64>,
    #[serde(rename = "V_B")]
    pub v_b: Option<f64>,
    #[serde(rename = "L")]
    pub length: Option<f64>,
    pub eps: Option<f64>,
    pub mesh_h: Option<f64>,
    pub eps_grid: Option<Vec<f64>>,
    pub d_eps: Option<f64>,
    /// Poisson demonstrator perturbation sizes
    pub deltas: Option<Vec<f64>>,
}

impl CaseFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    fn need(v: Option<f64>, key: &str) -> Result<f64> {
        v.ok_or_else(|| Error::Config(format!("missing key `{key}`")))
    }

    pub fn case(&self) -> Result<CaseConfig> {
        let c = CaseConfig::new(
            Self::need(self.ca, "Ca")?,
            Self::need(self.v_b, "V_B")?,
            Self::need(self.length, "L")?,
            self.eps.unwrap_or(0.0),
            Self::need(self.mesh_h, "mesh_h")?,
        );
        c.validate()?;
        if !(c.mesh_h > 0.0) {
            return Err(Error::Config(format!("mesh_h must be positive, got {}", c.mesh_h)));
        }
        Ok(c)
    }
}

/// Process exit status for an error: 2 for bad input, 1 for numerical failure.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Usage(_) | Error::Parse { .. } | Error::Validation(_) => 2,
        _ => 1,
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    std::fs::create_dir_all(&cli.out)?;
    let file = match &cli.config {
        Some(p) => CaseFile::load(p)?,
        None => CaseFile::default(),
    };
    let exec = if cli.jobs > 1 { Execution::Parallel } else { Execution::Sequential };
    with_jobs(cli.jobs, || match cli.command {
        Command::Selftest => selftest_cmd(cli.seed, &cli.out),
        Command::PoissonDemo => poisson_cmd(&file, &cli.out, exec),
        Command::Bubble => bubble_cmd(&file, &cli.out, exec),
        Command::Sweep => sweep_cmd(&file, &cli.out, exec),
    })
}

fn selftest_cmd(seed: u64, out: &Path) -> Result<()> {
    let checks = selftest::run(seed)?;
    let mut report = String::new();
    for c in &checks {
        println!("{c}");
        let _ = writeln!(report, "{c}");
    }
    std::fs::write(out.join("selftest.txt"), report)?;
    let failed = checks.iter().filter(|c| !c.passed()).count();
    if failed > 0 {
        return Err(Error::Solver(format!("{failed} self-test check(s) failed")));
    }
    Ok(())
}

fn poisson_cmd(file: &CaseFile, out: &Path, exec: Execution) -> Result<()> {
    let h = file.mesh_h.unwrap_or(0.025);
    let deltas = file.deltas.clone().unwrap_or_else(|| vec![1e-2, 5e-3, 2.5e-3]);
    if deltas.iter().any(|d| !(d.abs() > 0.0 && d.abs() < 0.2)) {
        return Err(Error::Config("deltas must be nonzero and below 0.2 in magnitude".into()));
    }
    let mesh = build_disk_mesh(1.0, h, true)?;
    let gamma = |_: Vec2| (1.0, [0.0, 0.0]);
    let sigma = |_: Vec2, p: f64| (p * p, 2.0 * p);
    let bc = MixedBc { c: -1.0, gamma: &gamma, sigma: &sigma };
    let report = linearize_poisson_demo(&mesh, &bc, 1.0, &deltas, &NewtonSettings::default(), exec)?;
    std::fs::write(out.join("poisson_demo.csv"), report.to_csv())?;
    for r in &report.rows {
        println!("delta {:.3e}  relative error {:.3e}", r.delta, r.error);
    }
    println!("slopes {:?}", report.slopes());
    Ok(())
}

fn bubble_cmd(file: &CaseFile, out: &Path, exec: Execution) -> Result<()> {
    let case = file.case()?;
    let mesh = case.build_mesh()?;
    let (zp, zs) = solve_zeroth(&mesh, &case, exec)?;
    let first = FirstProblem::new(&zp, &zs)?.solve(exec)?;
    let mut summary = String::from("key,value\n");
    for (k, v) in [
        ("Ca", case.ca),
        ("V_B", case.v_b),
        ("L", case.length),
        ("eps", case.eps),
        ("V0", zs.v0),
        ("dp0", zs.dp0),
        ("pG0", zs.pg0),
        ("f0", zs.f0),
        ("V1", first.v1),
        ("dp1", first.dp1),
        ("pG1", first.pg1),
        ("f1", first.f1),
        ("bubble_area", mesh.bubble_area(Some(&zs.displacement))),
    ] {
        let _ = writeln!(summary, "{k},{v:.12e}");
    }
    std::fs::write(out.join("bubble.csv"), &summary)?;
    print!("{summary}");
    let p = zp.pressure(&zs.state);
    let u = zp.velocity(&zs.state);
    write_vtk(out.join("bubble.vtk"), &mesh, &zs.displacement, &[("pressure", &p), ("rho1", &first.rho)], &[("velocity", &u)])?;
    Ok(())
}

fn sweep_cmd(file: &CaseFile, out: &Path, exec: Execution) -> Result<()> {
    let case = file.case()?;
    let grid = file.eps_grid.clone().ok_or_else(|| Error::Config("missing key `eps_grid`".into()))?;
    let d_eps = file.d_eps.unwrap_or(1e-3);
    if !(d_eps > 0.0) {
        return Err(Error::Config(format!("d_eps must be positive, got {d_eps}")));
    }
    let report = sensitivity_validation(&case, &grid, d_eps, exec, Execution::Sequential);
    write_sweep_csv(&report, out.join("sweep.csv"))?;
    for r in &report.rows {
        match &r.failure {
            None => println!("eps {:.3}  f1 {:.6e}  dfd {:.6e}  mismatch {:.2e}", r.eps, r.f1, r.dfd_eps, r.mismatch),
            Some(f) => println!("eps {:.3}  failed: {f}", r.eps),
        }
    }
    if report.failures() > 0 {
        return Err(Error::Solver(format!("{} sweep point(s) failed", report.failures())));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn case_file_uses_symbol_names() {
        let f = CaseFile::parse("Ca = 0.2\nV_B = 0.125\nL = 3.0\nmesh_h = 0.1\neps_grid = [0.0, 0.05]\n").unwrap();
        let c = f.case().unwrap();
        assert_eq!((c.ca, c.v_b, c.length, c.eps), (0.2, 0.125, 3.0, 0.0));
        assert_eq!(f.eps_grid, Some(vec![0.0, 0.05]));
    }

    #[test]
    fn missing_or_unknown_keys_are_usage_errors() {
        let e = CaseFile::parse("V_B = 0.1\nL = 3.0\nmesh_h = 0.1").unwrap().case().unwrap_err();
        assert_eq!(exit_code(&e), 2);
        assert!(e.to_string().contains("Ca"));
        let e = CaseFile::parse("ca = 0.2").unwrap_err();
        assert_eq!(exit_code(&e), 2);
    }

    #[test]
    fn numerical_failures_exit_with_one() {
        assert_eq!(exit_code(&Error::Solver("x".into())), 1);
        assert_eq!(exit_code(&Error::Convergence { iterations: 3, last_residual: 1.0, history: vec![] }), 1);
    }
}
