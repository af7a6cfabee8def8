//! End-to-end orchestration: transform the problem, march the system solver,
//! rebuild the coordinate map, recover the scalar solution, and emit CSV,
//! JSON and plot-script artifacts. Every number in the report is copied from
//! a monitor defined in the solver modules, never recomputed here, and the
//! whole pipeline is deterministic so reruns produce byte-identical files.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::RunConfig;
use crate::entropy::{
    discrete_entropy_residuals, lift_entropy, scalar_pair_from_entropy, ScalarEntropy,
    SystemEntropyPair,
};
use crate::flux::FluxSpec;
use crate::gamma::{build_gamma, recovered_rho_profile, GammaField};
use crate::godunov::{
    build_region, cfl_timestep, evolve, init_cells, sup_lambda2, tv_pq, CellField, Grid,
};
use crate::scalar::{l1_distance, scalar_evolve, PiecewiseConstant, ScalarField};
use crate::temple::RegionQ;
use crate::transform::TransformSpec;

/// Tolerances the pipeline enforces at runtime; breaching one is a property
/// violation (exit code 3), not a user error.
pub const REGION_TOL_FACTOR: f64 = 1e-12;
pub const ENTROPY_RESIDUAL_TOL: f64 = 1e-10;

/// Which prefix of the pipeline a subcommand runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    TransformInfo,
    Solve,
    Recover,
    Compare,
    Audit,
    Run,
}

impl Stage {
    fn wants_gamma(self) -> bool {
        !matches!(self, Stage::TransformInfo | Stage::Solve)
    }

    fn wants_compare(self, config: &RunConfig) -> bool {
        matches!(self, Stage::Compare) || (matches!(self, Stage::Run) && config.compare)
    }

    fn wants_audit(self, config: &RunConfig) -> bool {
        matches!(self, Stage::Audit) || (matches!(self, Stage::Run) && config.entropy_audit)
    }
}

#[derive(Debug)]
pub enum PipelineError {
    /// Bad configuration or inputs; maps to exit code 2.
    Validation(String),
    /// A solver guarantee failed at runtime; maps to exit code 3.
    Property(String),
    /// Filesystem trouble; maps to exit code 1.
    Io(std::io::Error),
}

impl fmt::Display for PipelineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PipelineError::Validation(msg) => write!(f, "validation error: {msg}"),
            PipelineError::Property(msg) => write!(f, "property violation: {msg}"),
            PipelineError::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl From<std::io::Error> for PipelineError {
    fn from(e: std::io::Error) -> Self {
        PipelineError::Io(e)
    }
}

impl PipelineError {
    /// Process exit code: 2 for bad input, 3 for a broken solver guarantee,
    /// 1 for filesystem trouble.
    pub fn exit_code(&self) -> u8 {
        match self {
            PipelineError::Validation(_) => 2,
            PipelineError::Property(_) => 3,
            PipelineError::Io(_) => 1,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TransformReport {
    pub flux: String,
    pub orientation: i32,
    pub shift_l: f64,
    pub flux_constant_k: f64,
    pub k_bound: f64,
    pub interval_tilde: [f64; 2],
    pub region: [f64; 2],
    pub sup_lambda2: f64,
    pub timestep: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EntropySummary {
    pub center: f64,
    pub max_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleComparison {
    pub time: f64,
    pub l1_distance: f64,
    pub disjoint: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub transform: TransformReport,
    pub steps: usize,
    pub final_time: f64,
    /// tv_pq at t = 0 followed by the value after every step, verbatim from
    /// the solver diagnostics.
    pub tv_per_step: Vec<f64>,
    pub max_region_violation: f64,
    pub max_entropy_residual_per_entropy: Vec<EntropySummary>,
    pub l1_vs_oracle: Vec<OracleComparison>,
}

pub struct PipelineOutcome {
    pub transform: TransformReport,
    pub report: Option<RunReport>,
    pub files: Vec<PathBuf>,
}

struct Prepared {
    flux: FluxSpec,
    spec: TransformSpec,
    grid: Grid,
    field0: CellField,
    region: RegionQ,
    transform: TransformReport,
}

fn prepare(config: &RunConfig) -> Result<Prepared, PipelineError> {
    config.validate().map_err(PipelineError::Validation)?;
    let interval = (config.interval[0], config.interval[1]);
    let flux = config.flux.build(interval).map_err(PipelineError::Validation)?;
    let spec = TransformSpec::build(&flux)
        .map_err(|e| PipelineError::Validation(format!("transform setup: {e}")))?;
    let grid = Grid::from_span((config.span[0], config.span[1]), config.h)
        .map_err(|e| PipelineError::Validation(e.to_string()))?;
    let sigma0 = spec.transform_data(&config.initial_data);
    let field0 =
        init_cells(&sigma0, grid).map_err(|e| PipelineError::Validation(e.to_string()))?;
    let region = build_region(field0.states.iter().map(|w| w.v))
        .map_err(|e| PipelineError::Validation(e.to_string()))?;
    let sup_l2 = sup_lambda2(&region, &spec.velocity);
    let timestep = cfl_timestep(&region, &spec.velocity, grid.h, config.cfl_fraction)
        .map_err(|e| PipelineError::Validation(e.to_string()))?;
    let transform = TransformReport {
        flux: config.flux.label(),
        orientation: spec.orientation.sign() as i32,
        shift_l: spec.l_shift,
        flux_constant_k: spec.flux_constant,
        k_bound: spec.k_bound,
        interval_tilde: [spec.interval_tilde.0, spec.interval_tilde.1],
        region: [region.lower, region.upper],
        sup_lambda2: sup_l2,
        timestep,
    };
    Ok(Prepared { flux, spec, grid, field0, region, transform })
}

/// Default audit centers: the region corners and its midpoint.
fn default_centers(region: &RegionQ) -> Vec<f64> {
    vec![region.lower, 0.5 * (region.lower + region.upper), region.upper]
}

fn audit_pair(spec: &TransformSpec, center: f64) -> Result<SystemEntropyPair, PipelineError> {
    let s = spec.clone();
    let scalar = scalar_pair_from_entropy(
        ScalarEntropy::quadratic(center),
        move |x| s.transformed_flux_prime(x),
        spec.interval_tilde.0,
        spec.interval_tilde,
    )
    .map_err(|e| PipelineError::Validation(format!("entropy center {center}: {e}")))?;
    Ok(lift_entropy(scalar, &spec.velocity))
}

/// Run the stage's pipeline prefix and write its artifacts into `out_dir`
/// (current directory when neither the flag nor the config names one).
/// `transform-info` writes nothing; callers print the returned summary.
pub fn execute(
    config: &RunConfig,
    stage: Stage,
    out_override: Option<&Path>,
) -> Result<PipelineOutcome, PipelineError> {
    let prep = prepare(config)?;
    if stage == Stage::TransformInfo {
        return Ok(PipelineOutcome { transform: prep.transform, report: None, files: vec![] });
    }

    let out_dir: PathBuf = out_override
        .map(Path::to_path_buf)
        .or_else(|| config.output_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&out_dir)?;
    let mut files = Vec::new();

    let tv0 = tv_pq(&prep.field0);
    let history = evolve(
        prep.field0.clone(),
        config.t_final,
        &prep.spec.velocity,
        config.cfl_fraction,
        true,
    )
    .map_err(|e| PipelineError::Property(e.to_string()))?;

    let max_violation = history
        .diagnostics
        .iter()
        .map(|d| d.max_region_violation)
        .fold(0.0_f64, f64::max);
    if max_violation > REGION_TOL_FACTOR * prep.region.upper {
        return Err(PipelineError::Property(format!(
            "region breach {max_violation:.3e} exceeds {:.3e} (region [{}, {}])",
            REGION_TOL_FACTOR * prep.region.upper,
            prep.region.lower,
            prep.region.upper
        )));
    }

    let mut tv_per_step = Vec::with_capacity(history.diagnostics.len() + 1);
    tv_per_step.push(tv0);
    tv_per_step.extend(history.diagnostics.iter().map(|d| d.tv_pq));

    write_cells_csv(&out_dir.join("cells_initial.csv"), &history.fields[0], &mut files)?;
    write_cells_csv(&out_dir.join("cells_final.csv"), history.final_field(), &mut files)?;

    let mut recovered: Option<PiecewiseConstant> = None;
    if stage.wants_gamma() {
        let gamma = build_gamma(&history, &prep.spec.velocity);
        gamma
            .validate(&history.region)
            .map_err(|e| PipelineError::Property(e.to_string()))?;
        write_gamma_csv(&out_dir.join("gamma.csv"), &gamma, &mut files)?;
        let profile = recovered_rho_profile(&history, &gamma, gamma.n_levels() - 1, &prep.spec);
        write_profile_csv(&out_dir.join("recovered_rho.csv"), &profile, &mut files)?;
        recovered = Some(profile);
    }

    let mut l1_vs_oracle = Vec::new();
    if stage.wants_compare(config) {
        let profile = recovered.as_ref().expect("compare runs after recovery");
        let oracle0 = ScalarField::from_data(&config.initial_data, prep.grid);
        let oracle = scalar_evolve(&prep.flux, oracle0, config.t_final, config.cfl_fraction)
            .map_err(|e| PipelineError::Validation(e.to_string()))?;
        let oracle_profile = oracle.to_piecewise();
        write_profile_csv(&out_dir.join("oracle_rho.csv"), &oracle_profile, &mut files)?;
        let outcome =
            l1_distance(profile, &oracle_profile, (config.span[0], config.span[1]));
        l1_vs_oracle.push(OracleComparison {
            time: config.t_final,
            l1_distance: outcome.value,
            disjoint: outcome.disjoint,
        });
    }

    let mut entropy_summaries = Vec::new();
    if stage.wants_audit(config) {
        let centers = config
            .entropy_centers
            .clone()
            .unwrap_or_else(|| default_centers(&prep.region));
        let mut audits = Vec::with_capacity(centers.len());
        for &c in &centers {
            let pair = audit_pair(&prep.spec, c)?;
            let audit = discrete_entropy_residuals(&history, &pair);
            entropy_summaries.push(EntropySummary { center: c, max_residual: audit.max_residual });
            audits.push(audit);
        }
        write_entropy_audit_json(&out_dir.join("entropy_audit.json"), &centers, &audits, &mut files)?;
        if let Some(bad) = entropy_summaries
            .iter()
            .find(|s| s.max_residual > ENTROPY_RESIDUAL_TOL)
        {
            return Err(PipelineError::Property(format!(
                "entropy residual {:.3e} for center {} exceeds {ENTROPY_RESIDUAL_TOL:.1e}",
                bad.max_residual, bad.center
            )));
        }
    }

    let report = RunReport {
        transform: prep.transform.clone(),
        steps: history.fields.len() - 1,
        final_time: history.final_field().time,
        tv_per_step,
        max_region_violation: max_violation,
        max_entropy_residual_per_entropy: entropy_summaries,
        l1_vs_oracle,
    };
    let report_path = out_dir.join("report.json");
    fs::write(&report_path, to_pretty_json(&report)?)?;
    files.push(report_path);

    let plot_path = out_dir.join("plot.gp");
    fs::write(&plot_path, plot_script(stage, config))?;
    files.push(plot_path);

    Ok(PipelineOutcome { transform: prep.transform, report: Some(report), files })
}

pub fn to_pretty_json<T: Serialize>(value: &T) -> Result<String, PipelineError> {
    serde_json::to_string_pretty(value)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| PipelineError::Io(std::io::Error::other(e)))
}

/// One row per cell: center coordinate, conserved pair, invariant pair.
/// 17 significant digits round-trip f64 exactly.
fn write_cells_csv(
    path: &Path,
    field: &CellField,
    files: &mut Vec<PathBuf>,
) -> Result<(), PipelineError> {
    let mut out = String::from("x_center,eta,v,p,q\n");
    for (i, w) in field.states.iter().enumerate() {
        let x = field.grid.cell_center(i);
        out.push_str(&format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            x,
            w.eta,
            w.v,
            w.p(),
            w.q()
        ));
    }
    fs::write(path, out)?;
    files.push(path.to_path_buf());
    Ok(())
}

/// Long format: every (level, node) pair on its own row.
fn write_gamma_csv(
    path: &Path,
    gamma: &GammaField,
    files: &mut Vec<PathBuf>,
) -> Result<(), PipelineError> {
    let mut out = String::from("t,x_node,gamma\n");
    for (n, row) in gamma.rows.iter().enumerate() {
        let t = gamma.times[n];
        for (j, &g) in row.iter().enumerate() {
            out.push_str(&format!("{:.16e},{:.16e},{:.16e}\n", t, gamma.nodes[j], g));
        }
    }
    fs::write(path, out)?;
    files.push(path.to_path_buf());
    Ok(())
}

/// Step function sampled at cell midpoints, where the value is attained on
/// the whole cell rather than interpolated.
fn write_profile_csv(
    path: &Path,
    profile: &PiecewiseConstant,
    files: &mut Vec<PathBuf>,
) -> Result<(), PipelineError> {
    let mut out = String::from("y,rho\n");
    for (i, &v) in profile.values.iter().enumerate() {
        let mid = 0.5 * (profile.breaks[i] + profile.breaks[i + 1]);
        out.push_str(&format!("{:.16e},{:.16e}\n", mid, v));
    }
    fs::write(path, out)?;
    files.push(path.to_path_buf());
    Ok(())
}

#[derive(Serialize)]
struct EntropyAuditRecord<'a> {
    center: f64,
    max_residual: f64,
    /// Steps whose largest residual exceeds the admissibility tolerance;
    /// empty on every healthy run.
    violations: Vec<usize>,
    per_step_max: &'a [f64],
}

fn write_entropy_audit_json(
    path: &Path,
    centers: &[f64],
    audits: &[crate::entropy::EntropyAudit],
    files: &mut Vec<PathBuf>,
) -> Result<(), PipelineError> {
    #[derive(Serialize)]
    struct Doc<'a> {
        tolerance: f64,
        entropies: Vec<EntropyAuditRecord<'a>>,
    }
    let entropies = centers
        .iter()
        .zip(audits)
        .map(|(&center, audit)| EntropyAuditRecord {
            center,
            max_residual: audit.max_residual,
            violations: audit
                .per_step_max
                .iter()
                .enumerate()
                .filter(|(_, &r)| r > ENTROPY_RESIDUAL_TOL)
                .map(|(i, _)| i)
                .collect(),
            per_step_max: &audit.per_step_max,
        })
        .collect();
    let doc = Doc { tolerance: ENTROPY_RESIDUAL_TOL, entropies };
    fs::write(path, to_pretty_json(&doc)?)?;
    files.push(path.to_path_buf());
    Ok(())
}

/// A small gnuplot script over the emitted CSVs; `gnuplot plot.gp` renders
/// PNGs next to them.
fn plot_script(stage: Stage, config: &RunConfig) -> String {
    let mut s = String::from(
        "# Render with: gnuplot plot.gp\n\
         set datafile separator \",\"\n\
         set term pngcairo size 1000,700 font \",11\"\n\
         set key left top\n\n\
         set output \"cells.png\"\n\
         set xlabel \"x\"\n\
         plot \"cells_final.csv\" skip 1 using 1:4 with steps lw 2 title \"p at T\", \\\n\
              \"cells_final.csv\" skip 1 using 1:2 with steps title \"eta at T\", \\\n\
              \"cells_initial.csv\" skip 1 using 1:4 with steps dt 2 title \"p at 0\"\n",
    );
    if stage.wants_gamma() {
        s.push_str(
            "\nset output \"recovered.png\"\nset xlabel \"y\"\n\
             plot \"recovered_rho.csv\" skip 1 using 1:2 with steps lw 2 title \"recovered rho\"",
        );
        if stage.wants_compare(config) {
            s.push_str(", \\\n     \"oracle_rho.csv\" skip 1 using 1:2 with steps title \"oracle\"");
        }
        s.push('\n');
    }
    s
}
