use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use visvol::bvh::Scene;
use visvol::config::parse_config;
use visvol::depth::export_depth_sphere;
use visvol::io::{load_mesh, save_mesh};
use visvol::pipeline::{mission_polygon, run_pipeline};
use visvol::vis_sphere::tessellate_visibility_sphere;
use visvol::volume::{compute_vertex_sphere, RunReport};

#[derive(Parser)]
#[command(name = "visvol", version, about = "Polygon visibility volumes in triangle-mesh scenes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline: visibility spheres, volume, constraints, report
    Compute {
        /// mission YAML
        #[arg(long)]
        config: PathBuf,
        /// where outputs are written (default: config's output_dir or ".")
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// recheck the volume against the segment oracle
        #[arg(long)]
        validate: bool,
        /// override the config's sampling seed
        #[arg(long)]
        seed: Option<u64>,
        /// worker threads (default: all cores)
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Compute and export a single vertex's visibility sphere
    Sphere {
        #[arg(long)]
        config: PathBuf,
        /// polygon vertex index
        #[arg(long)]
        vertex_index: usize,
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// also write the raw depth grid (f32 binary + JSON header)
        #[arg(long)]
        dump_depth: bool,
    },
    /// Summarize a previously written report.json
    Report {
        #[arg(long)]
        input: PathBuf,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<(), String> {
    match cli.command {
        Command::Compute { config, output_dir, validate, seed, threads } => {
            if let Some(n) = threads {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global()
                    .map_err(|e| format!("thread pool: {e}"))?;
            }
            let mut cfg = parse_config(&config).map_err(|e| e.to_string())?;
            if validate {
                cfg.validate = true;
            }
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            let out_dir = output_dir
                .or_else(|| cfg.output_dir.clone())
                .unwrap_or_else(|| PathBuf::from("."));
            let outcome = run_pipeline(&cfg, &out_dir).map_err(|e| e.to_string())?;
            print_summary(&outcome.report);
            println!("report: {}", outcome.report_path.display());
            Ok(())
        }
        Command::Sphere { config, vertex_index, output_dir, dump_depth } => {
            let cfg = parse_config(&config).map_err(|e| e.to_string())?;
            let polygon = mission_polygon(&cfg).map_err(|e| e.to_string())?;
            if vertex_index >= polygon.len() {
                return Err(format!(
                    "vertex index {vertex_index} out of range (polygon has {} vertices)",
                    polygon.len()
                ));
            }
            let scene_mesh = load_mesh(&cfg.scene).map_err(|e| e.to_string())?;
            let scene = Scene::new(scene_mesh);
            let center = polygon.vertices()[vertex_index];
            let sphere = compute_vertex_sphere(&scene, center, &cfg.to_volume_params())
                .map_err(|e| e.to_string())?;

            let out_dir = output_dir
                .or_else(|| cfg.output_dir.clone())
                .unwrap_or_else(|| PathBuf::from("."));
            std::fs::create_dir_all(&out_dir).map_err(|e| e.to_string())?;
            let mesh = tessellate_visibility_sphere(&sphere);
            let mesh_path = out_dir.join(format!("sphere_{vertex_index:03}.obj"));
            save_mesh(&mesh, &mesh_path).map_err(|e| e.to_string())?;
            println!(
                "sphere {vertex_index}: center ({}, {}, {}), {} triangles -> {}",
                center.x,
                center.y,
                center.z,
                mesh.triangle_count(),
                mesh_path.display()
            );
            if dump_depth {
                let grid_path = out_dir.join(format!("depth_{vertex_index:03}.f32"));
                let header_path = out_dir.join(format!("depth_{vertex_index:03}.json"));
                export_depth_sphere(&sphere, &grid_path, &header_path).map_err(|e| e.to_string())?;
                println!("depth grid: {}", grid_path.display());
            }
            Ok(())
        }
        Command::Report { input } => {
            let text = std::fs::read_to_string(&input).map_err(|e| format!("{}: {e}", input.display()))?;
            let report: RunReport =
                serde_json::from_str(&text).map_err(|e| format!("{}: {e}", input.display()))?;
            print_summary(&report);
            Ok(())
        }
    }
}

fn print_summary(report: &RunReport) {
    println!(
        "backend {:?}, d_max {} m, angular {}x{}, grid {}x{}x{} (cell {:.3} m)",
        report.backend,
        report.d_max,
        report.n_phi,
        report.n_theta,
        report.grid.resolution[0],
        report.grid.resolution[1],
        report.grid.resolution[2],
        report.grid.cell_size,
    );
    println!(
        "edges processed: {} ({} splits), spheres computed: {} ({} cache hits)",
        report.edges.len(),
        report.splits,
        report.spheres_computed,
        report.sphere_cache_hits
    );
    let fv = &report.final_volume;
    if fv.empty {
        println!("visibility volume: EMPTY");
    } else {
        println!(
            "visibility volume: {} vertices, {} triangles, chi {}, {} component(s), watertight: {}",
            fv.vertices, fv.triangles, fv.chi, fv.components, fv.watertight
        );
    }
    if let Some(nav) = &report.navigable {
        if nav.empty {
            println!("navigable volume: EMPTY");
        } else {
            println!(
                "navigable volume: {} vertices, {} triangles, chi {}, watertight: {}",
                nav.vertices, nav.triangles, nav.chi, nav.watertight
            );
        }
    }
    if let Some(v) = &report.validation {
        println!(
            "oracle agreement: {:.4} overall, {:.4} away from boundary ({} samples, {} disagreements listed)",
            v.agreement_rate,
            v.restricted_rate,
            v.n_samples,
            v.disagreements.len()
        );
    }
    for w in &report.warnings {
        println!("warning: {w}");
    }
    for t in [
        ("spheres", report.timings.spheres_s),
        ("topology", report.timings.topology_s),
        ("extraction", report.timings.extraction_s),
        ("total", report.timings.total_s),
    ] {
        println!("time {}: {:.2} s", t.0, t.1);
    }
}
