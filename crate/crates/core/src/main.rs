use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use macroelast::complex::{Family, GlobalSpace};
use macroelast::mesh::{load_mesh, Mesh};
use macroelast::report::{run_checks, ALL_CHECKS};
use macroelast::solver::{
    assemble_mixed, convergence_csv, convergence_study, manufactured_discrete_pair, relative_l2,
    solve_mixed, trig_errors, trig_problem, ManufacturedTrig, MaterialLaw, MixedProblem,
};

#[derive(Parser)]
#[command(
    name = "macroelast",
    about = "Composite stress and C1 elements on barycentric refinements: verification and mixed elasticity runs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run algebraic verification checks and print a JSON report.
    Verify {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(short, long)]
        k: usize,
        /// Comma-separated subset of: psi,potential,unisolvence,exactness,commuting,c1
        #[arg(long, value_delimiter = ',')]
        checks: Option<Vec<String>>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Print the dimension table of the global spaces.
    Dims {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(short, long)]
        k: usize,
    },
    /// Solve one mixed elasticity problem.
    Solve {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(short, long)]
        k: usize,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, default_value_t = 1.0)]
        mu: f64,
        /// One of: zero, patch, trig
        #[arg(long, default_value = "trig")]
        case: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Manufactured-solution convergence study with CSV output.
    Convergence {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(short, long)]
        k: usize,
        #[arg(long, default_value_t = 3)]
        levels: usize,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, default_value_t = 1.0)]
        mu: f64,
    },
}

fn read_mesh(path: &PathBuf) -> Result<(Mesh, String), String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    let mesh = load_mesh(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok((mesh, name))
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run() -> Result<ExitCode, String> {
    let cli = Cli::parse();
    match cli.command {
        Command::Verify { mesh, k, checks, seed } => {
            let (mesh, name) = read_mesh(&mesh)?;
            let names: Vec<String> = checks
                .unwrap_or_else(|| ALL_CHECKS.iter().map(|s| s.to_string()).collect());
            let (reports, all_pass) = run_checks(&names, &mesh, &name, k, seed);
            println!(
                "{}",
                serde_json::to_string_pretty(&reports).map_err(|e| e.to_string())?
            );
            Ok(if all_pass { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::Dims { mesh, k } => {
            let (mesh, name) = read_mesh(&mesh)?;
            println!("mesh {name}: {} vertices, {} edges, {} triangles", mesh.num_vertices(), mesh.num_edges(), mesh.num_triangles());
            println!("{:<10} {:>6} {:>10} {:>9} {:>13} {:>6}", "space", "k", "per-vertex", "per-edge", "per-triangle", "dim");
            let mut rows = vec![("U", Family::U)];
            if k >= 1 {
                rows.push(("Sigma", Family::Sigma));
                rows.push(("V", Family::V));
            }
            for (label, family) in rows {
                let s = GlobalSpace::new(&mesh, family, k);
                println!(
                    "{:<10} {:>6} {:>10} {:>9} {:>13} {:>6}",
                    label, k, s.per_vertex, s.per_edge, s.per_triangle, s.dim()
                );
            }
            if k >= 2 {
                let u = GlobalSpace::new(&mesh, Family::U, k).dim() as i64;
                let s = GlobalSpace::new(&mesh, Family::Sigma, k).dim() as i64;
                let v = GlobalSpace::new(&mesh, Family::V, k).dim() as i64;
                println!("alternating sum U - 3 - Sigma + V = {}", u - 3 - s + v);
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Solve { mesh, k, lambda, mu, case, seed } => {
            if k < 2 {
                return Err(
                    "the mixed solver needs k >= 2: the k = 1 stress element is not \
                     unisolvent (see README, known limitation)"
                        .into(),
                );
            }
            let (mesh, name) = read_mesh(&mesh)?;
            let material = MaterialLaw::new(lambda, mu);
            let assembly = assemble_mixed(&mesh, k, &material);
            println!(
                "# mesh {name}: dim Sigma = {}, dim V = {}, boundary stress DoFs = {}",
                assembly.space_sigma.dim(),
                assembly.space_v.dim(),
                assembly.boundary_dofs.len()
            );
            match case.as_str() {
                "zero" => {
                    let problem = MixedProblem {
                        load: vec![0.0; assembly.space_v.dim()],
                        boundary_values: vec![0.0; assembly.boundary_dofs.len()],
                        rigid_targets: [0.0; 3],
                    };
                    let sol = solve_mixed(&assembly, &problem)?;
                    let max_sigma = sol.sigma.iter().fold(0.0f64, |a, x| a.max(x.abs()));
                    let max_u = sol.u.iter().fold(0.0f64, |a, x| a.max(x.abs()));
                    println!("case,residual,equilibrium_defect,max_sigma,max_u");
                    println!(
                        "zero,{:.14e},{:.14e},{:.14e},{:.14e}",
                        sol.residual, sol.equilibrium_defect, max_sigma, max_u
                    );
                }
                "patch" => {
                    let patch = manufactured_discrete_pair(&assembly, seed);
                    let sol = solve_mixed(&assembly, &patch.problem)?;
                    println!("case,residual,equilibrium_defect,err_sigma_rel,err_u_rel");
                    println!(
                        "patch,{:.14e},{:.14e},{:.14e},{:.14e}",
                        sol.residual,
                        sol.equilibrium_defect,
                        relative_l2(&sol.sigma, &patch.sigma_star),
                        relative_l2(&sol.u, &patch.u_star)
                    );
                }
                "trig" => {
                    let exact = ManufacturedTrig { mu };
                    let problem = trig_problem(&mesh, &assembly, &exact);
                    let sol = solve_mixed(&assembly, &problem)?;
                    let (es, eu) = trig_errors(&mesh, &assembly, &sol, &exact);
                    println!("case,residual,equilibrium_defect,err_sigma_L2,err_u_L2");
                    println!(
                        "trig,{:.14e},{:.14e},{:.14e},{:.14e}",
                        sol.residual, sol.equilibrium_defect, es, eu
                    );
                }
                other => return Err(format!("unknown case '{other}' (use zero, patch, or trig)")),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Convergence { mesh, k, levels, lambda, mu } => {
            if k < 2 {
                return Err("convergence studies need k >= 2".into());
            }
            let (mesh, _) = read_mesh(&mesh)?;
            let material = MaterialLaw::new(lambda, mu);
            let rows = convergence_study(&mesh, levels, k, &material)?;
            print!("{}", convergence_csv(&rows));
            Ok(ExitCode::SUCCESS)
        }
    }
}
