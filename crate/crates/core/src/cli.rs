//! Command-line front end.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::geom2d::validate_polygon_with;
use crate::io::{self, csv_path, write_json_atomic, IoError};
use crate::pipeline::{conjecture, run_pipeline, ConjectureOptions, PipelineError, RunConfig};
use crate::verify::{convergence_study, is_converging, ConvergenceRow};

const EXIT_CODES: &str = "\
Exit codes:
  0  success (for verify: every check passed)
  1  a verification check failed
  2  usage or configuration error (including malformed --vertices)
  3  invalid polygon (too few vertices, duplicate, degenerate angle, non-convex)
  4  equilibrium solve failed
  5  reflected field evaluation failed
  6  skeleton extraction failed
  7  Riesz measure assembly failed
  8  verification could not be set up
  9  file input/output error";

#[derive(Parser, Debug)]
#[command(name = "eskel", version, about = "Electrostatic skeletons of convex polygons", after_help = EXIT_CODES)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Skeleton, junctions and Riesz measure as a JSON bundle.
    Compute {
        #[command(flatten)]
        polygon: PolygonArgs,
        #[command(flatten)]
        resolution: ResolutionArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Exterior match, moments, convexity, monotonicity and connectivity.
    Verify {
        #[command(flatten)]
        polygon: PolygonArgs,
        #[command(flatten)]
        resolution: ResolutionArgs,
        #[command(flatten)]
        output: OutputArgs,
        /// Level values for the convexity check, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        levels: Option<Vec<f64>>,
        /// Seed for the random monotonicity segments.
        #[arg(long)]
        seed: Option<u64>,
        /// Test the ±FRACTION arc-mass perturbation instead of the measure
        /// itself (negative control; expected to fail).
        #[arg(long, value_name = "FRACTION", num_args = 0..=1, default_missing_value = "0.1")]
        perturb: Option<f64>,
    },
    /// Look for random polygons whose ridge set divides the interior.
    Conjecture {
        #[command(flatten)]
        resolution: ResolutionArgs,
        /// Number of sides (at least 4).
        #[arg(long, default_value_t = 4)]
        sides: usize,
        #[arg(long, default_value_t = 50)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Smallest interior angle of a generated polygon, degrees.
        #[arg(long, default_value_t = 15.0)]
        min_angle: f64,
        /// Skip the square, pentagon and hexagon fixtures.
        #[arg(long)]
        no_fixtures: bool,
        /// Write the JSON report here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Robin constant and exterior potential under mesh refinement.
    Converge {
        #[command(flatten)]
        polygon: PolygonArgs,
        #[arg(long, value_delimiter = ',', default_value = "16,32,64,128,256")]
        panel_counts: Vec<usize>,
        #[arg(long, default_value_t = 3.0)]
        grading: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
struct PolygonArgs {
    /// Vertex coordinates `x1,y1,x2,y2,...`.
    #[arg(long, allow_hyphen_values = true)]
    vertices: Option<String>,
    /// JSON file `{"vertices": [[x, y], ...]}`.
    #[arg(long)]
    input: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ResolutionArgs {
    /// JSON run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Boundary panels per side.
    #[arg(long)]
    panels: Option<usize>,
    /// Mesh grading exponent towards the vertices.
    #[arg(long)]
    grading: Option<f64>,
    /// Label grid resolution along the longer bounding-box side.
    #[arg(long)]
    grid: Option<usize>,
    /// Measure samples per ridge arc.
    #[arg(long)]
    arc_samples: Option<usize>,
}

#[derive(Args, Debug)]
struct OutputArgs {
    /// Write JSON here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write `<PREFIX>_ridges.csv`, `<PREFIX>_measure.csv`, ...
    #[arg(long, value_name = "PREFIX")]
    csv: Option<PathBuf>,
}

impl PolygonArgs {
    fn vertices(&self) -> Result<Vec<crate::geom2d::Point2>, IoError> {
        match (&self.vertices, &self.input) {
            (Some(v), _) => io::parse_vertex_list(v),
            (None, Some(p)) => io::read_vertices_json(p),
            (None, None) => unreachable!("clap requires one polygon source"),
        }
    }
}

impl ResolutionArgs {
    fn config(&self) -> Result<RunConfig, PipelineError> {
        let mut c = match &self.config {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|source| IoError::File {
                    path: p.clone(),
                    source,
                })?;
                serde_json::from_str(&text).map_err(|source| IoError::Json {
                    path: p.clone(),
                    source,
                })?
            }
            None => RunConfig::default(),
        };
        if let Some(v) = self.panels {
            c.panels_per_side = v;
        }
        if let Some(v) = self.grading {
            c.grading = v;
        }
        if let Some(v) = self.grid {
            c.grid_resolution = v;
        }
        if let Some(v) = self.arc_samples {
            c.samples_per_arc = v;
        }
        Ok(c)
    }
}

/// Emits `value` to `out` or standard output; the summary goes to standard
/// output when the JSON does not, else to standard error.
fn emit(value: &impl Serialize, out: Option<&Path>, summary: &str) -> Result<(), PipelineError> {
    match out {
        Some(p) => {
            write_json_atomic(p, value)?;
            print!("{summary}");
        }
        None => {
            let text = serde_json::to_string_pretty(value).expect("reports serialize");
            println!("{text}");
            eprint!("{summary}");
        }
    }
    Ok(())
}

fn config_with_polygon(polygon: &PolygonArgs, resolution: &ResolutionArgs) -> Result<RunConfig, PipelineError> {
    let mut c = resolution.config()?;
    c.vertices = polygon.vertices()?;
    Ok(c)
}

fn execute(command: Command) -> Result<i32, PipelineError> {
    match command {
        Command::Compute {
            polygon,
            resolution,
            output,
        } => {
            let mut config = config_with_polygon(&polygon, &resolution)?;
            config.output_path = output.out.as_ref().map(|p| p.display().to_string());
            let p = run_pipeline(&config)?;
            let b = p.bundle();
            if let Some(prefix) = &output.csv {
                io::write_ridges_csv(&csv_path(prefix, "ridges"), &p.skeleton)?;
                io::write_measure_csv(&csv_path(prefix, "measure"), &p.measure)?;
            }
            let s = &b.summary;
            let summary = format!(
                "{} arcs, {} junctions, {} regions, mass {:.6}, complement {}\n",
                s.n_arcs,
                s.n_junctions,
                s.n_regions,
                s.mass,
                if s.complement_connected {
                    "connected"
                } else {
                    "DISCONNECTED"
                }
            );
            emit(&b, output.out.as_deref(), &summary)?;
            Ok(0)
        }
        Command::Verify {
            polygon,
            resolution,
            output,
            levels,
            seed,
            perturb,
        } => {
            let mut config = config_with_polygon(&polygon, &resolution)?;
            config.output_path = output.out.as_ref().map(|p| p.display().to_string());
            if let Some(l) = levels {
                config.tolerances.levels = l;
            }
            if let Some(s) = seed {
                config.tolerances.seed = s;
            }
            if let Some(f) = perturb {
                if !(f.is_finite() && f > 0.0 && f < 1.0) {
                    return Err(PipelineError::Config(format!("--perturb must lie in (0, 1), got {f}")));
                }
            }
            let p = run_pipeline(&config)?;
            let r = p.verify(perturb)?;
            if let Some(prefix) = &output.csv {
                io::write_ridges_csv(&csv_path(prefix, "ridges"), &p.skeleton)?;
                io::write_measure_csv(&csv_path(prefix, "measure"), &p.measure)?;
                io::write_levels_csv(&csv_path(prefix, "levels"), &r.level_curves)?;
            }
            let mut summary = String::new();
            for c in &r.checks {
                let _ = writeln!(
                    summary,
                    "{} {:<24} {:>12.4e} (threshold {:e})",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.value,
                    c.threshold
                );
            }
            let _ = writeln!(
                summary,
                "{}",
                if r.passed {
                    "all checks passed"
                } else {
                    "some checks FAILED"
                }
            );
            emit(&r, output.out.as_deref(), &summary)?;
            Ok(if r.passed { 0 } else { 1 })
        }
        Command::Conjecture {
            resolution,
            sides,
            trials,
            seed,
            min_angle,
            no_fixtures,
            out,
        } => {
            let config = resolution.config()?;
            let opts = ConjectureOptions {
                n_sides: sides,
                trials,
                seed,
                min_angle_deg: min_angle,
                fixtures: !no_fixtures,
            };
            let r = conjecture(&config, &opts)?;
            let mut summary = String::new();
            for i in &r.instances {
                match (&i.error, i.complement_connected) {
                    (Some(e), _) => {
                        let _ = writeln!(summary, "{:<12} error: {e}", i.label);
                    }
                    (None, c) => {
                        let _ = writeln!(
                            summary,
                            "{:<12} regions {} junctions {} complement {}",
                            i.label,
                            i.n_regions.unwrap_or(0),
                            i.n_junctions.unwrap_or(0),
                            if c == Some(true) { "connected" } else { "DISCONNECTED" }
                        );
                    }
                }
            }
            let _ = writeln!(
                summary,
                "{} instances, {} counterexample candidates, {} failures",
                r.instances.len(),
                r.counterexamples.len(),
                r.failures
            );
            for c in &r.counterexamples {
                let _ = writeln!(summary, "candidate {}: {}", c.label, c.reproduce);
            }
            emit(&r, out.as_deref(), &summary)?;
            Ok(0)
        }
        Command::Converge {
            polygon,
            panel_counts,
            grading,
            out,
        } => {
            let poly = validate_polygon_with(&polygon.vertices()?, &Default::default())?;
            let rows = convergence_study(&poly, &panel_counts, grading)?;
            #[derive(Serialize)]
            struct Report {
                rows: Vec<ConvergenceRow>,
                converging: bool,
            }
            let report = Report {
                converging: is_converging(&rows),
                rows,
            };
            let mut summary = String::from("panels  robin_constant        gamma_change  exterior_change\n");
            let fmt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.3e}"));
            for r in &report.rows {
                let _ = writeln!(
                    summary,
                    "{:>6}  {:<20.15}  {:>12}  {:>15}",
                    r.panels_per_side,
                    r.robin_constant,
                    fmt(r.gamma_change),
                    fmt(r.exterior_change)
                );
            }
            emit(&report, out.as_deref(), &summary)?;
            Ok(0)
        }
    }
}

/// Parses `args` (including the program name) and runs; returns the exit
/// code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn help_documents_exit_codes() {
        let help = Cli::command().render_long_help().to_string();
        assert!(help.contains("Exit codes"));
        assert!(help.contains("9  file input/output error"));
    }

    #[test]
    fn negative_coordinates_and_optional_perturb() {
        let cli = Cli::try_parse_from(["eskel", "verify", "--vertices", "-1,0,1,0,0,1", "--perturb"]).unwrap();
        let Command::Verify { polygon, perturb, .. } = cli.command else {
            panic!("wrong subcommand")
        };
        assert_eq!(polygon.vertices().unwrap().len(), 3);
        assert_eq!(perturb, Some(0.1));
    }

    #[test]
    fn polygon_source_is_required_and_exclusive() {
        assert!(Cli::try_parse_from(["eskel", "compute"]).is_err());
        assert!(Cli::try_parse_from(["eskel", "compute", "--vertices", "0,0,1,0,0,1", "--input", "p.json"]).is_err());
        assert_eq!(run(["eskel", "compute"]), 2);
    }

    #[test]
    fn bad_inputs_map_to_exit_codes() {
        assert_eq!(run(["eskel", "compute", "--vertices", "0,0,1,0"]), 3);
        assert_eq!(run(["eskel", "compute", "--vertices", "0,0,1"]), 2);
        assert_eq!(run(["eskel", "compute", "--input", "/nonexistent/p.json"]), 9);
        assert_eq!(run(["eskel", "conjecture", "--sides", "3", "--trials", "1"]), 2);
    }
}
