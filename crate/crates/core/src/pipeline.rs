//! End-to-end runs: polygon → equilibrium → reflected fields → skeleton →
//! measure, plus the verification report and the random-polygon experiment.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::equilibrium::{solve_polygon, EquilibriumError};
use crate::geom2d::{regular_polygon, validate_polygon_with, ConvexPolygon, Point2, PolygonError, PolygonOptions};
use crate::io::IoError;
use crate::reflections::{FieldError, ReflectedFieldSet};
use crate::riesz::{assemble_measure, RieszError, RieszMeasure};
use crate::skeleton::{
    connectivity_report, extract_ridges_with, label_grid, ConnectivityReport, Endpoint, LabelGrid, RidgeOptions,
    Skeleton, SkeletonError,
};
use crate::verify::{
    check_ray_monotonicity, match_exterior, trace_level_curve, ConvexityReport, MatchReport, Tolerances, VerifyError,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Polygon(#[from] PolygonError),
    #[error(transparent)]
    Equilibrium(#[from] EquilibriumError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Skeleton(#[from] SkeletonError),
    #[error(transparent)]
    Riesz(#[from] RieszError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error(transparent)]
    Io(#[from] IoError),
}

impl PipelineError {
    /// Process exit code, one per error class. 1 is reserved for failed
    /// checks and 2 for usage errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Io(IoError::VertexList(_)) => 2,
            Self::Polygon(_) => 3,
            Self::Equilibrium(_) | Self::Field(FieldError::Equilibrium(_)) => 4,
            Self::Field(_) => 5,
            Self::Skeleton(_) => 6,
            Self::Riesz(_) => 7,
            Self::Verify(_) => 8,
            Self::Io(_) => 9,
        }
    }
}

/// Everything a run depends on. Defaults reproduce the acceptance suite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub vertices: Vec<Point2>,
    pub panels_per_side: usize,
    pub grading: f64,
    pub grid_resolution: usize,
    pub samples_per_arc: usize,
    pub polygon: PolygonOptions,
    pub ridges: RidgeOptions,
    pub tolerances: Tolerances,
    pub output_path: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            vertices: Vec::new(),
            panels_per_side: 64,
            grading: 3.0,
            grid_resolution: 512,
            samples_per_arc: 256,
            polygon: PolygonOptions::default(),
            ridges: RidgeOptions::default(),
            tolerances: Tolerances::default(),
            output_path: None,
        }
    }
}

impl RunConfig {
    pub fn with_vertices(vertices: Vec<Point2>) -> Self {
        Self {
            vertices,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let t = &self.tolerances;
        for (name, v) in [
            ("panels_per_side", self.panels_per_side),
            ("grid_resolution", self.grid_resolution),
            ("samples_per_arc", self.samples_per_arc),
            ("match_points", t.match_points),
            ("level_angles", t.level_angles),
            ("monotonicity_trials", t.monotonicity_trials),
            ("monotonicity_samples", t.monotonicity_samples),
        ] {
            if v == 0 {
                return Err(PipelineError::Config(format!("{name} must be positive")));
            }
        }
        if !(self.grading.is_finite() && self.grading >= 1.0) {
            return Err(PipelineError::Config(format!(
                "grading must be at least 1, got {}",
                self.grading
            )));
        }
        if t.levels.iter().any(|&c| !(c.is_finite() && c > 0.0)) {
            return Err(PipelineError::Config("levels must be positive".into()));
        }
        Ok(())
    }

    pub fn polygon(&self) -> Result<ConvexPolygon, PipelineError> {
        Ok(validate_polygon_with(&self.vertices, &self.polygon)?)
    }
}

/// Fields, grid and skeleton; the measure is not needed for connectivity.
pub struct Skeletonized {
    pub fields: ReflectedFieldSet,
    pub grid: LabelGrid,
    pub skeleton: Skeleton,
    pub connectivity: ConnectivityReport,
}

pub fn skeletonize(config: &RunConfig) -> Result<Skeletonized, PipelineError> {
    config.validate()?;
    let poly = config.polygon()?;
    let sol = solve_polygon(&poly, config.panels_per_side, config.grading)?;
    let fields = ReflectedFieldSet::new(sol)?;
    let grid = label_grid(&fields, config.grid_resolution)?;
    let skeleton = extract_ridges_with(&fields, &grid, &config.ridges)?;
    let connectivity = connectivity_report(&grid, &skeleton);
    Ok(Skeletonized {
        fields,
        grid,
        skeleton,
        connectivity,
    })
}

pub struct Pipeline {
    pub config: RunConfig,
    pub fields: ReflectedFieldSet,
    pub grid: LabelGrid,
    pub skeleton: Skeleton,
    pub connectivity: ConnectivityReport,
    pub measure: RieszMeasure,
}

pub fn run_pipeline(config: &RunConfig) -> Result<Pipeline, PipelineError> {
    let s = skeletonize(config)?;
    let measure = assemble_measure(&s.fields, &s.skeleton, config.samples_per_arc)?;
    Ok(Pipeline {
        config: config.clone(),
        fields: s.fields,
        grid: s.grid,
        skeleton: s.skeleton,
        connectivity: s.connectivity,
        measure,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BundleSkeleton<'a> {
    pub arcs: &'a [crate::skeleton::RidgeArc],
    pub junctions: &'a [crate::skeleton::Junction],
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BundleMeasure<'a> {
    pub samples: &'a [crate::riesz::MeasureSample],
    pub arc_masses: &'a [f64],
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BundleSummary {
    pub mass: f64,
    pub n_regions: usize,
    pub n_arcs: usize,
    pub n_junctions: usize,
    pub complement_connected: bool,
    pub min_density: f64,
    pub residual: f64,
}

/// The `compute` output.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Bundle<'a> {
    pub polygon: &'a [Point2],
    pub robin_constant: f64,
    pub skeleton: BundleSkeleton<'a>,
    pub measure: BundleMeasure<'a>,
    pub summary: BundleSummary,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl Check {
    fn below(name: &str, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            passed: value < threshold,
        }
    }

    fn above(name: &str, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            passed: value > threshold,
        }
    }

    fn at_least(name: &str, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            passed: value >= threshold,
        }
    }

    fn holds(name: &str, ok: bool) -> Self {
        Self {
            name: name.into(),
            value: f64::from(u8::from(ok)),
            threshold: 1.0,
            passed: ok,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelSummary {
    pub level: f64,
    pub min_cross_product: f64,
    pub radius_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonotonicitySummary {
    pub segments: usize,
    pub min_increment: f64,
    /// Largest `|u|` where a segment leaves the polygon's vertex.
    pub max_start_value: f64,
    /// Indices of segments with a decrement beyond tolerance.
    pub violations: Vec<usize>,
}

/// The `verify` output.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerificationReport {
    pub polygon: Vec<Point2>,
    pub perturbed: Option<f64>,
    pub checks: Vec<Check>,
    #[serde(rename = "match")]
    pub match_report: MatchReport,
    /// Match of the perturbed measure; absent when the measure under test
    /// is itself perturbed.
    pub negative_control: Option<MatchReport>,
    pub convexity: Vec<LevelSummary>,
    pub monotonicity: MonotonicitySummary,
    pub connectivity: ConnectivityReport,
    pub passed: bool,
    #[serde(skip)]
    pub level_curves: Vec<ConvexityReport>,
}

impl VerificationReport {
    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

impl Pipeline {
    pub fn polygon(&self) -> &ConvexPolygon {
        self.fields.polygon()
    }

    pub fn min_density(&self) -> f64 {
        self.measure
            .samples
            .iter()
            .map(|s| s.density)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn bundle(&self) -> Bundle<'_> {
        let sol = self.fields.solution();
        Bundle {
            polygon: self.polygon().vertices(),
            robin_constant: sol.robin_constant(),
            skeleton: BundleSkeleton {
                arcs: &self.skeleton.arcs,
                junctions: &self.skeleton.junctions,
            },
            measure: BundleMeasure {
                samples: &self.measure.samples,
                arc_masses: &self.measure.arc_masses,
            },
            summary: BundleSummary {
                mass: self.measure.total_mass(),
                n_regions: self.connectivity.region_count(),
                n_arcs: self.skeleton.arcs.len(),
                n_junctions: self.skeleton.junctions.len(),
                complement_connected: self.connectivity.complement_connected,
                min_density: self.min_density(),
                residual: sol.residual(),
            },
        }
    }

    /// Runs every check. With `perturb = Some(f)` the measure under test is
    /// replaced by its `±f` arc-mass perturbation, which should fail.
    pub fn verify(&self, perturb: Option<f64>) -> Result<VerificationReport, PipelineError> {
        let t = &self.config.tolerances;
        let sol = self.fields.solution();
        let poly = self.polygon();
        let diam = poly.diameter();
        let radii: Vec<f64> = t.match_radii.iter().map(|r| r * diam).collect();
        let measure = match perturb {
            Some(f) => self.measure.perturbed(f),
            None => self.measure.clone(),
        };
        let m = match_exterior(sol, &measure, &radii, t.match_points, t.moment_order)?;
        let mut checks = vec![
            Check::below("exterior_match", m.max_sup_error(), t.exterior_match),
            Check::below("moment_match", m.max_moment_error(), t.moment_match),
            Check::below("mass", m.mass_error, t.mass),
        ];
        let negative_control = match perturb {
            Some(_) => None,
            None => {
                let nc = match_exterior(
                    sol,
                    &self.measure.perturbed(t.perturbation),
                    &radii,
                    t.match_points,
                    t.moment_order,
                )?;
                let miss = nc.max_sup_error().max(nc.max_moment_error());
                checks.push(Check::above("negative_control", miss, t.negative_control));
                Some(nc)
            }
        };
        let min_density = measure.samples.iter().map(|s| s.density).fold(f64::INFINITY, f64::min);
        checks.push(Check::above("positive_density", min_density, 0.0));

        let mut level_curves = Vec::with_capacity(t.levels.len());
        for &c in &t.levels {
            let r = trace_level_curve(sol, c, t.level_angles)?;
            checks.push(Check::at_least(
                &format!("convexity_{c}"),
                r.min_cross_product,
                t.convexity,
            ));
            level_curves.push(r);
        }
        let convexity = level_curves
            .iter()
            .map(|r| LevelSummary {
                level: r.level,
                min_cross_product: r.min_cross_product,
                radius_ratio: r.radius_ratio,
            })
            .collect();

        let segments = check_ray_monotonicity(sol, t.monotonicity_trials, t.monotonicity_samples, t.seed)?;
        let monotonicity = MonotonicitySummary {
            segments: segments.len(),
            min_increment: segments.iter().map(|s| s.min_increment).fold(f64::INFINITY, f64::min),
            max_start_value: segments.iter().map(|s| s.values[0].abs()).fold(0.0, f64::max),
            violations: segments
                .iter()
                .enumerate()
                .filter(|(_, s)| s.min_increment <= t.monotonicity)
                .map(|(k, _)| k)
                .collect(),
        };
        checks.push(Check::above("monotonicity", monotonicity.min_increment, t.monotonicity));
        checks.push(Check::below(
            "boundary_value",
            monotonicity.max_start_value,
            t.boundary_value,
        ));

        let conn = &self.connectivity;
        checks.push(Check::holds("regions_match_faces", conn.regions_match_faces()));
        checks.push(Check::holds("complement_connected", conn.complement_connected));
        checks.push(Check::holds("arcs_reach_every_vertex", self.arcs_reach_every_vertex()));

        let passed = checks.iter().all(|c| c.passed);
        Ok(VerificationReport {
            polygon: poly.vertices().to_vec(),
            perturbed: perturb,
            checks,
            match_report: m,
            negative_control,
            convexity,
            monotonicity,
            connectivity: conn.clone(),
            passed,
            level_curves,
        })
    }

    fn arcs_reach_every_vertex(&self) -> bool {
        let mut reached = vec![false; self.polygon().len()];
        for a in &self.skeleton.arcs {
            for e in [a.start, a.end] {
                if let Endpoint::Vertex(v) = e {
                    reached[v] = true;
                }
            }
        }
        reached.into_iter().all(|r| r)
    }
}

/// Sorted uniform angles on the unit circle, redrawn until every interior
/// angle is at least `min_angle_deg`.
pub fn random_convex_polygon(rng: &mut impl Rng, n: usize, min_angle_deg: f64) -> Vec<Point2> {
    let opts = PolygonOptions { min_angle_deg };
    loop {
        let mut angles: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..TAU)).collect();
        angles.sort_by(f64::total_cmp);
        let v: Vec<Point2> = angles.iter().map(|t| Point2::new(t.cos(), t.sin())).collect();
        if validate_polygon_with(&v, &opts).is_ok() {
            return v;
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Instance {
    pub label: String,
    pub vertices: Vec<Point2>,
    pub n_regions: Option<usize>,
    pub tip_fragments: Option<usize>,
    pub complement_connected: Option<bool>,
    pub complement_components: Option<usize>,
    pub n_junctions: Option<usize>,
    pub n_arcs: Option<usize>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Counterexample {
    pub label: String,
    pub vertices: Vec<Point2>,
    pub complement_components: usize,
    pub n_regions: usize,
    /// Command line reproducing the run.
    pub reproduce: String,
}

/// The `conjecture` output.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConjectureReport {
    pub n_sides: usize,
    pub trials: usize,
    pub seed: u64,
    pub min_angle_deg: f64,
    pub panels_per_side: usize,
    pub grading: f64,
    pub grid_resolution: usize,
    pub instances: Vec<Instance>,
    pub counterexamples: Vec<Counterexample>,
    pub failures: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConjectureOptions {
    pub n_sides: usize,
    pub trials: usize,
    pub seed: u64,
    pub min_angle_deg: f64,
    /// Also run the square, regular pentagon and regular hexagon.
    pub fixtures: bool,
}

impl Default for ConjectureOptions {
    fn default() -> Self {
        Self {
            n_sides: 4,
            trials: 50,
            seed: 0,
            min_angle_deg: 15.0,
            fixtures: true,
        }
    }
}

fn format_vertices(v: &[Point2]) -> String {
    v.iter()
        .flat_map(|p| [p.x, p.y])
        .map(|c| format!("{c:?}"))
        .collect::<Vec<_>>()
        .join(",")
}

/// Does the ridge set ever divide a polygon with more than three sides?
/// Per-instance failures are recorded, not returned.
pub fn conjecture(config: &RunConfig, opts: &ConjectureOptions) -> Result<ConjectureReport, PipelineError> {
    if opts.n_sides < 4 {
        return Err(PipelineError::Config(format!(
            "conjecture needs at least 4 sides, got {}; triangles always have a skeleton",
            opts.n_sides
        )));
    }
    config.validate()?;
    let mut polygons: Vec<(String, Vec<Point2>)> = Vec::new();
    if opts.fixtures {
        for n in [4, 5, 6] {
            polygons.push((
                format!("regular_{n}"),
                regular_polygon(n, Point2::default(), 1.0, PI / n as f64),
            ));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for k in 0..opts.trials {
        polygons.push((
            format!("random_{k}"),
            random_convex_polygon(&mut rng, opts.n_sides, opts.min_angle_deg),
        ));
    }

    let mut instances = Vec::with_capacity(polygons.len());
    let mut counterexamples = Vec::new();
    let mut failures = 0;
    for (label, vertices) in polygons {
        let cfg = RunConfig {
            vertices: vertices.clone(),
            ..config.clone()
        };
        let mut inst = Instance {
            label: label.clone(),
            vertices: vertices.clone(),
            n_regions: None,
            tip_fragments: None,
            complement_connected: None,
            complement_components: None,
            n_junctions: None,
            n_arcs: None,
            error: None,
        };
        match skeletonize(&cfg) {
            Ok(s) => {
                let c = &s.connectivity;
                inst.n_regions = Some(c.region_count());
                inst.tip_fragments = Some(c.tip_fragments);
                inst.complement_connected = Some(c.complement_connected);
                inst.complement_components = Some(c.complement_components);
                inst.n_junctions = Some(c.junctions);
                inst.n_arcs = Some(c.arcs);
                if !c.complement_connected {
                    counterexamples.push(Counterexample {
                        label,
                        reproduce: format!(
                            "eskel verify --vertices {} --panels {} --grading {:?} --grid {}",
                            format_vertices(&vertices),
                            cfg.panels_per_side,
                            cfg.grading,
                            cfg.grid_resolution
                        ),
                        vertices,
                        complement_components: c.complement_components,
                        n_regions: c.region_count(),
                    });
                }
            }
            Err(e) => {
                failures += 1;
                inst.error = Some(e.to_string());
            }
        }
        instances.push(inst);
    }
    Ok(ConjectureReport {
        n_sides: opts.n_sides,
        trials: opts.trials,
        seed: opts.seed,
        min_angle_deg: opts.min_angle_deg,
        panels_per_side: config.panels_per_side,
        grading: config.grading,
        grid_resolution: config.grid_resolution,
        instances,
        counterexamples,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn equilateral() -> Vec<Point2> {
        vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(0.5, 3f64.sqrt() / 2.0),
        ]
    }

    fn coarse(vertices: Vec<Point2>) -> RunConfig {
        RunConfig {
            panels_per_side: 32,
            grid_resolution: 192,
            samples_per_arc: 64,
            ..RunConfig::with_vertices(vertices)
        }
    }

    #[test]
    fn config_rejects_zero_counts() {
        let mut c = RunConfig::with_vertices(equilateral());
        assert!(c.validate().is_ok());
        c.grid_resolution = 0;
        assert!(matches!(c.validate(), Err(PipelineError::Config(_))));
        let c = RunConfig {
            grading: 0.5,
            ..RunConfig::default()
        };
        assert_eq!(c.validate().unwrap_err().exit_code(), 2);
    }

    #[test]
    fn config_defaults_fill_missing_keys() {
        let c: RunConfig = serde_json::from_str(r#"{"grid_resolution": 300}"#).unwrap();
        assert_eq!(c.grid_resolution, 300);
        assert_eq!(c.panels_per_side, 64);
        assert_eq!(c.tolerances, Tolerances::default());
    }

    #[test]
    fn error_classes_have_distinct_codes() {
        let nonconvex = vec![
            Point2::new(0.0, 0.0),
            Point2::new(2.0, 0.0),
            Point2::new(1.0, 0.3),
            Point2::new(1.0, 2.0),
        ];
        let e = run_pipeline(&coarse(nonconvex)).err().unwrap();
        assert_eq!(e.exit_code(), 3);
        assert!(e.to_string().contains("non-convex"));
        let codes = [
            PipelineError::Config(String::new()).exit_code(),
            PipelineError::Polygon(PolygonError::TooFewVertices(2)).exit_code(),
            PipelineError::Equilibrium(EquilibriumError::InvalidResolution(String::new())).exit_code(),
            PipelineError::Field(FieldError::NoSuchFace { index: 9, count: 3 }).exit_code(),
            PipelineError::Skeleton(SkeletonError::InvalidResolution(1)).exit_code(),
            PipelineError::Riesz(RieszError::TooFewSamples(1)).exit_code(),
            PipelineError::Verify(VerifyError::NonPositiveLevel(0.0)).exit_code(),
            PipelineError::Io(IoError::File {
                path: "x".into(),
                source: std::io::Error::other("x"),
            })
            .exit_code(),
        ];
        let mut sorted = codes.to_vec();
        sorted.dedup();
        assert_eq!(sorted, codes.to_vec());
        assert!(codes.iter().all(|&c| c > 1));
    }

    #[test]
    fn equilateral_bundle_and_report() {
        let p = run_pipeline(&coarse(equilateral())).unwrap();
        let b = p.bundle();
        assert_eq!(b.skeleton.arcs.len(), 3);
        assert_eq!(b.skeleton.junctions.len(), 1);
        assert!((b.summary.mass - 1.0).abs() < 5e-3);
        assert_eq!(b.summary.n_regions, 3);
        let r = p.verify(None).unwrap();
        assert!(r.passed, "{:?}", r.failed_checks().collect::<Vec<_>>());
        let bad = p.verify(Some(0.1)).unwrap();
        assert!(!bad.passed);
        assert!(bad.failed_checks().any(|c| c.name == "exterior_match"));
        assert!(bad.negative_control.is_none());
    }

    #[test]
    fn random_polygons_are_convex_and_reproducible() {
        let mut a = ChaCha8Rng::seed_from_u64(3);
        let mut b = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let v = random_convex_polygon(&mut a, 5, 15.0);
            assert_eq!(v, random_convex_polygon(&mut b, 5, 15.0));
            let poly = validate_polygon_with(&v, &PolygonOptions { min_angle_deg: 15.0 }).unwrap();
            assert_eq!(poly.len(), 5);
        }
    }

    #[test]
    fn conjecture_rejects_triangles_and_runs_fixtures() {
        let cfg = coarse(Vec::new());
        let tri = ConjectureOptions {
            n_sides: 3,
            ..ConjectureOptions::default()
        };
        assert_eq!(conjecture(&cfg, &tri).unwrap_err().exit_code(), 2);
        let opts = ConjectureOptions {
            trials: 2,
            ..ConjectureOptions::default()
        };
        let r = conjecture(&cfg, &opts).unwrap();
        assert_eq!(r.instances.len(), 5);
        assert_eq!(r.instances[0].label, "regular_4");
        assert_eq!(r.instances[2].n_regions, Some(6));
        assert!(r.counterexamples.is_empty());
        assert_eq!(r.failures, 0);
    }
}
