use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use elastoswim::config::{load_config, RunConfig};
use elastoswim::experiment::{run_frequency_sweep, run_single};
use elastoswim::mesh::{mesh_quality, write_msh, TriangleMesh};
use elastoswim::swimmer::{build_fluid_mesh, build_swimmer};
use elastoswim::{Error, Result};

#[derive(Parser)]
#[command(name = "elastoswim", version, about = "ALE simulation of an elastic magneto-swimmer in a 2D channel")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one configuration and write strokes.csv and VTK snapshots.
    Run(Common),
    /// Run every (frequency, Young modulus) pair and write sweep.csv.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Actuation frequencies in Hz.
        #[arg(long, value_delimiter = ',', default_values_t = [0.2, 0.4, 0.8, 1.6, 3.0])]
        frequencies: Vec<f64>,
        /// Tail Young moduli in Pa.
        #[arg(long, value_delimiter = ',', default_values_t = [5e4, 8e4, 2e5])]
        young_moduli: Vec<f64>,
    },
    /// Build the swimmer and fluid meshes and print their statistics.
    MeshReport(Common),
    /// Validate a configuration and print it with defaults filled in.
    CheckConfig(Common),
}

#[derive(Args)]
struct Common {
    /// JSON configuration; defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides output.directory).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write VTK snapshots every N steps.
    #[arg(long)]
    stride: Option<usize>,
    /// Worker threads; 1 gives bit-reproducible output.
    #[arg(long)]
    threads: Option<usize>,
    /// Mesh generator perturbation seed.
    #[arg(long)]
    seed: Option<u64>,
}

impl Common {
    fn load(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => load_config(path)?,
            None => RunConfig::default(),
        };
        if let Some(out) = &self.out {
            cfg.output.directory = out.clone();
        }
        if let Some(stride) = self.stride {
            cfg.output.stride = stride;
        }
        if self.seed.is_some() {
            cfg.mesh.seed = self.seed;
        }
        cfg.validate()?;
        if let Some(n) = self.threads {
            if n == 0 {
                return Err(Error::Config("--threads must be at least 1".into()));
            }
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| Error::Config(format!("cannot start the thread pool: {e}")))?;
        }
        Ok(cfg)
    }
}

fn report(name: &str, mesh: &TriangleMesh) {
    let q = mesh_quality(mesh);
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for t in &mesh.triangles {
        for i in 0..3 {
            let (a, b) = (mesh.vertices[t[i]], mesh.vertices[t[(i + 1) % 3]]);
            let l = (a[0] - b[0]).hypot(a[1] - b[1]);
            lo = lo.min(l);
            hi = hi.max(l);
        }
    }
    println!(
        "{name}: {} vertices, {} triangles, {} boundary edges, edge length {lo:e}..{hi:e} m, quality min {:.4} mean {:.4}",
        mesh.num_vertices(),
        mesh.num_triangles(),
        mesh.boundary_edges.len(),
        q.min_quality,
        q.mean_quality
    );
}

/// Exit code of a sweep with failed cells.
const SOLVER_FAILURE: u8 = 3;

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::CheckConfig(common) => {
            let cfg = common.load()?;
            println!("{}", cfg.to_json());
            eprintln!("configuration is valid: {} steps of {:e} s", cfg.num_steps(), cfg.time_step());
        }
        Command::MeshReport(common) => {
            let cfg = common.load()?;
            let body = build_swimmer(&cfg.swimmer, cfg.mesh.h_min, cfg.mesh.seed)?;
            let (fluid, interface) = build_fluid_mesh(&cfg.channel, &body, &cfg.mesh)?;
            report("swimmer", &body.mesh);
            report("fluid", &fluid);
            println!("interface: {} vertices", interface.len());
            if let Some(dir) = &common.out {
                std::fs::create_dir_all(dir)?;
                std::fs::write(dir.join("swimmer.msh"), write_msh(&body.mesh))?;
                std::fs::write(dir.join("fluid.msh"), write_msh(&fluid))?;
            }
        }
        Command::Run(common) => {
            let cfg = common.load()?;
            let out = cfg.output.directory.clone();
            let s = run_single(&cfg, Some(&out))?;
            println!("steps: {}", s.records.len() - 1);
            println!("fixed-point iterations: {}", s.total_iterations);
            println!("remeshes: {}", s.remesh_count);
            println!("window: t = {:e}..{:e} s", s.records[s.window.0].t, s.records[s.window.1].t);
            println!("delta_x: {:e} m", s.delta_x);
            println!("stroke_area: {:e} rad^2", s.stroke_area);
            println!("output: {}", out.join("strokes.csv").display());
        }
        Command::Sweep {
            common,
            frequencies,
            young_moduli,
        } => {
            let cfg = common.load()?;
            let out = cfg.output.directory.clone();
            let table = run_frequency_sweep(&cfg, &frequencies, &young_moduli, Some(Path::new(&out)))?;
            println!("{:>8} {:>10} {:>14} {:>14}", "f", "E", "delta_x", "stroke_area");
            for c in &table {
                match (&c.error, c.delta_x, c.stroke_area) {
                    (None, Some(dx), Some(a)) => println!("{:>8} {:>10} {:>14.6e} {:>14.6e}", c.frequency, c.young_modulus, dx, a),
                    (err, ..) => println!("{:>8} {:>10} failed: {}", c.frequency, c.young_modulus, err.as_deref().unwrap_or("?")),
                }
            }
            println!("output: {}", out.join("sweep.csv").display());
            if table.iter().any(|c| c.error.is_some()) {
                eprintln!("error: some sweep cells failed");
                return Ok(SOLVER_FAILURE);
            }
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
