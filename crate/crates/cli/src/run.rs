//! Task orchestration: executes a validated scenario's tasks in order and
//! assembles the report bundle. Tasks run sequentially; the per-node grid
//! sweeps inside the analysis modules parallelize on the ambient rayon pool.

use std::path::PathBuf;

use anyhow::{anyhow, Context};

use sisample::fibers::{midpoint_grid, FrequencyGrid};
use sisample::gramian::frame_analysis;
use sisample::rational::to_f64;
use sisample::sampling::{
    fd_union_report, sis_union_report, spectrum_curve, PairReport, SamplingReport, SamplingSet,
    StabilityOutcome, SubspaceData, UnionModel,
};
use sisample::subspaces::{friedrichs_angle, SubspacePair, Verdict};
use sisample::Tolerances;

use crate::report::{fmt_f64, fmt_opt_f64, BundleWriter, ReportBundle};
use crate::scenario::{Scenario, Task};

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub out_dir: PathBuf,
    /// Echo of the effective FSIS_THREADS setting ("auto" or a number).
    pub threads_label: String,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub bundle: ReportBundle,
    pub exit_code: i32,
}

fn omega_header(dimension: usize) -> String {
    if dimension == 1 {
        "omega".to_string()
    } else {
        (0..dimension).map(|i| format!("omega_{i}")).collect::<Vec<_>>().join(",")
    }
}

fn omega_cell(grid: &FrequencyGrid, node: usize) -> String {
    grid.node(node)
        .coords
        .iter()
        .map(|r| fmt_f64(to_f64(r)))
        .collect::<Vec<_>>()
        .join(",")
}

/// Executes every task in order and writes the bundle. Any module error
/// aborts with a diagnostic naming the task (node-level context rides on the
/// module error itself).
pub fn run(scenario: &Scenario, config: &RunConfig) -> anyhow::Result<RunOutcome> {
    let mut w = BundleWriter::new(&config.out_dir);
    let tol = scenario.tolerances.clone();

    w.line("sisample analysis report");
    w.line("========================");
    w.blank();
    w.line(format!("scenario: {}", scenario.file_name));
    w.line(format!("input sha256: {}", scenario.sha256));
    w.blank();
    w.line("settings:");
    let dim = w.setting("dimension", scenario.dimension);
    w.line(format!("  dimension = {dim}"));
    let grid_nodes = w.setting("grid", scenario.grid_size);
    w.line(format!("  grid = {grid_nodes}"));
    for (key, value) in [
        ("rank_tol", tol.rank_tol),
        ("spec_tol", tol.spec_tol),
        ("close_eps", tol.close_eps),
        ("conv_eps", tol.conv_eps),
    ] {
        let rendered = w.setting(key, fmt_f64(value));
        w.line(format!("  {key} = {rendered}"));
    }
    let max_iter = w.setting("max_iter", tol.max_iter);
    w.line(format!("  max_iter = {max_iter}"));
    let threads = w.setting("threads", &config.threads_label);
    w.line(format!("  threads = {threads}"));
    w.blank();
    w.line("caveats:");
    w.line(format!(
        "  - \"a.e.\" statements are evaluated on the {grid_nodes} grid nodes only; every verdict is a numerical certificate, not a proof."
    ));

    let mut grid = midpoint_grid(scenario.dimension, scenario.grid_size);
    let warnings = grid.avoid_breakpoints(&scenario.generators);
    if !warnings.is_empty() {
        w.blank();
        w.line("warnings:");
        for warning in &warnings {
            w.line(format!("  - {warning}"));
        }
    }

    for (index, task) in scenario.tasks.iter().enumerate() {
        let task_no = index + 1;
        let slug = task.slug();
        let csv_prefix = format!("{task_no:02}_{slug}");
        run_task(scenario, task, &grid, &tol, &mut w, task_no, &csv_prefix)
            .with_context(|| format!("task {task_no} ({slug})"))?;
    }

    w.blank();
    let flags = w.flags;
    w.line(format!(
        "verdict flags: not_closed={} not_injective={} not_stable={}",
        flags.not_closed, flags.not_injective, flags.not_stable
    ));
    w.line(format!("exit code: {}", flags.exit_code()));

    let bundle = w
        .finish(&scenario.file_name, &scenario.sha256)
        .context("writing the report bundle")?;
    Ok(RunOutcome { exit_code: bundle.flags.exit_code(), bundle })
}

fn run_task(
    scenario: &Scenario,
    task: &Task,
    grid: &FrequencyGrid,
    tol: &Tolerances,
    w: &mut BundleWriter,
    task_no: usize,
    csv_prefix: &str,
) -> anyhow::Result<()> {
    match task {
        Task::Angle { u, v, u_minus_v, v_minus_u } => {
            angle_task(scenario, grid, tol, w, task_no, csv_prefix, u, v, u_minus_v, v_minus_u)
        }
        Task::Dimension { subspace } => dimension_task(scenario, grid, tol, w, task_no, csv_prefix, subspace),
        Task::SpectrumCurve { subspace } => {
            spectrum_task(scenario, grid, tol, w, task_no, csv_prefix, subspace)
        }
        Task::AnalyzeSis { union } => sis_task(scenario, grid, tol, w, task_no, csv_prefix, union),
        Task::AnalyzeUnion => fd_task(scenario, tol, w, task_no, csv_prefix),
    }
}

fn note_truncated(scenario: &Scenario, names: &[&str], w: &mut BundleWriter) {
    for name in names {
        if scenario.subspace(name).truncated {
            w.line(format!(
                "  warning: subspace {name} is a declared finite prefix of a countable generator list; verdicts apply to the truncated space"
            ));
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn angle_task(
    scenario: &Scenario,
    grid: &FrequencyGrid,
    tol: &Tolerances,
    w: &mut BundleWriter,
    task_no: usize,
    csv_prefix: &str,
    u: &str,
    v: &str,
    u_minus_v: &Option<String>,
    v_minus_u: &Option<String>,
) -> anyhow::Result<()> {
    let mut pair = SubspacePair::new(scenario.subspace_generators(u), scenario.subspace_generators(v));
    let supplied = match (u_minus_v, v_minus_u) {
        (Some(x), Some(xp)) => {
            pair = pair.with_ominus_frames(
                scenario.subspace_generators(x),
                scenario.subspace_generators(xp),
            );
            true
        }
        _ => false,
    };
    let report = friedrichs_angle(&pair, grid, tol)?;

    let csv_name = format!("{csv_prefix}.csv");
    let rows: Vec<String> = report
        .per_node
        .iter()
        .map(|n| {
            format!(
                "{},{},{}",
                omega_cell(grid, n.node_index),
                fmt_f64(n.dixmier),
                fmt_opt_f64(n.friedrichs)
            )
        })
        .collect();
    w.add_csv(&csv_name, &format!("{},c0,c", omega_header(scenario.dimension)), &rows);

    let task_label = format!("task{task_no}");
    w.blank();
    w.line(format!("[task {task_no}] angle between {u} and {v}"));
    note_truncated(scenario, &[u, v], w);
    w.line(format!(
        "  ominus frames: {}",
        if supplied { "supplied by the scenario" } else { "computed by alternating projections" }
    ));
    w.line(format!("  per-node table: {csv_name}"));
    let c0 = w.record(&task_label, "dixmier_grid_max", fmt_f64(report.aggregate_dixmier));
    w.line(format!("  Dixmier cosine (grid max) = {c0}"));
    match report.aggregate_friedrichs {
        Some(c) => {
            let c = w.record(&task_label, "friedrichs_grid_max", fmt_f64(c));
            w.line(format!("  Friedrichs cosine (grid max) = {c}"));
        }
        None => w.line("  Friedrichs cosine (grid max) = indeterminate at every node"),
    }
    if !report.indeterminate_nodes.is_empty() {
        let count = w.record(&task_label, "indeterminate_nodes", report.indeterminate_nodes.len());
        w.line(format!(
            "  alternating projections hit max_iter at {count} nodes (see empty c cells in {csv_name})"
        ));
    }
    let verdict = w.record(&task_label, "closedness_verdict", report.verdict);
    match &report.caveat {
        Some(caveat) => w.line(format!("  verdict: {verdict} — {caveat}")),
        None => w.line(format!("  verdict: {verdict}")),
    }
    if report.verdict == Verdict::NotClosed {
        w.flags.not_closed = true;
    }
    Ok(())
}

fn dimension_task(
    scenario: &Scenario,
    grid: &FrequencyGrid,
    tol: &Tolerances,
    w: &mut BundleWriter,
    task_no: usize,
    csv_prefix: &str,
    subspace: &str,
) -> anyhow::Result<()> {
    let gens = scenario.subspace_generators(subspace);
    let analysis = frame_analysis(&gens, grid, tol.rank_tol, tol.spec_tol)?;

    let csv_name = format!("{csv_prefix}.csv");
    let rows: Vec<String> = analysis
        .dim_fn
        .values
        .iter()
        .enumerate()
        .map(|(i, d)| format!("{},{}", omega_cell(grid, i), d))
        .collect();
    w.add_csv(&csv_name, &format!("{},dim", omega_header(scenario.dimension)), &rows);

    let task_label = format!("task{task_no}");
    w.blank();
    w.line(format!("[task {task_no}] dimension function and frame analysis of {subspace}"));
    note_truncated(scenario, &[subspace], w);
    w.line(format!("  per-node table: {csv_name}"));
    let dim_min = w.record(
        &task_label,
        "dim_min",
        analysis.dim_fn.values.iter().min().copied().unwrap_or(0),
    );
    let dim_max = w.record(&task_label, "dim_max", analysis.dim_fn.max());
    let length = w.record(&task_label, "length_estimate", analysis.length_estimate);
    w.line(format!(
        "  dimension function: min {dim_min}, max {dim_max}; length estimate len(S) = {length}"
    ));
    let beta = w.record(&task_label, "bessel_bound", fmt_f64(analysis.bessel_bound));
    w.line(format!("  Bessel bound beta = {beta}"));
    match analysis.frame_lower {
        Some(alpha) => {
            let alpha = w.record(&task_label, "frame_lower", fmt_f64(alpha));
            w.line(format!("  frame lower bound alpha = {alpha} (frame sequence at grid level)"));
        }
        None => w.line("  no positive alpha above tolerance: not certified as a frame sequence"),
    }
    let riesz = w.record(&task_label, "is_riesz", analysis.is_riesz);
    if !analysis.dim_fn.is_constant() {
        w.line("  dimension function non-constant: Riesz basis of translates does not exist");
    } else if analysis.is_riesz {
        w.line(format!(
            "  dimension function constant and fibers full-rank: Riesz basis of translates exists (grid certificate, is_riesz = {riesz})"
        ));
    } else {
        w.line(format!(
            "  fibers are rank-deficient: the translates of these generators form no Riesz basis (is_riesz = {riesz})"
        ));
    }
    Ok(())
}

fn spectrum_task(
    scenario: &Scenario,
    grid: &FrequencyGrid,
    tol: &Tolerances,
    w: &mut BundleWriter,
    task_no: usize,
    csv_prefix: &str,
    subspace: &str,
) -> anyhow::Result<()> {
    let gens = scenario.subspace_generators(subspace);
    let psi_gens = scenario
        .sampling_generators()
        .ok_or_else(|| anyhow!("spectrum-curve needs a sampling_set"))?;
    let psi = SamplingSet::validate(psi_gens, grid, tol)?;
    let rows_data = spectrum_curve(&gens, &psi, grid, tol)?;

    let csv_name = format!("{csv_prefix}.csv");
    let rows: Vec<String> = rows_data
        .iter()
        .map(|r| {
            format!(
                "{},{},{},{},{}",
                omega_cell(grid, r.node_index),
                fmt_f64(r.sigma2_min_nonzero.unwrap_or(0.0)),
                fmt_f64(r.sigma2_max.unwrap_or(0.0)),
                r.rank,
                r.dim
            )
        })
        .collect();
    w.add_csv(
        &csv_name,
        &format!("{},sigma2_min_nonzero,sigma2_max,rank,dim", omega_header(scenario.dimension)),
        &rows,
    );

    let task_label = format!("task{task_no}");
    w.blank();
    w.line(format!("[task {task_no}] spectrum curve of {subspace} against the sampling set"));
    note_truncated(scenario, &[subspace], w);
    w.line(format!("  per-node table: {csv_name}"));
    let bessel = w.record(&task_label, "sampling_bessel_bound", fmt_f64(psi.bessel.bessel_bound));
    w.line(format!("  sampling set Bessel bound = {bessel}"));
    let alpha = rows_data.iter().filter_map(|r| r.sigma2_min_nonzero).fold(None, |acc: Option<f64>, v| {
        Some(acc.map_or(v, |a| a.min(v)))
    });
    let beta = rows_data.iter().filter_map(|r| r.sigma2_max).fold(0.0f64, f64::max);
    match alpha {
        Some(a) => {
            let a = w.record(&task_label, "sigma2_min_nonzero", fmt_f64(a));
            let b = w.record(&task_label, "sigma2_max", fmt_f64(beta));
            w.line(format!("  sigma^2 range over the grid: [{a}, {b}] (nonzero part)"));
        }
        None => w.line("  all cross spectra vanish on the grid"),
    }
    Ok(())
}

fn stability_cell(outcome: &StabilityOutcome) -> (String, String, String) {
    match outcome {
        StabilityOutcome::Stable(b) => ("stable".to_string(), fmt_f64(b.alpha), fmt_f64(b.beta)),
        StabilityOutcome::Vacuous => ("vacuous".to_string(), String::new(), String::new()),
        StabilityOutcome::RankFailure { .. } => {
            ("rank-failure".to_string(), String::new(), String::new())
        }
    }
}

fn pair_summary(
    w: &mut BundleWriter,
    task_label: &str,
    pair: &PairReport,
    grid_len: usize,
) {
    let key = format!("pair_{}_{}", pair.gamma, pair.theta);
    let dim = w.record(task_label, format!("{key}_dim"), pair.dim);
    let witness_count = w.record(task_label, format!("{key}_rank_fail_nodes"), pair.witness_nodes.len());
    let (stability, alpha, beta) = stability_cell(&pair.stability);
    w.record(task_label, format!("{key}_injective"), pair.injective);
    w.record(task_label, format!("{key}_stability"), &stability);
    if !alpha.is_empty() {
        w.record(task_label, format!("{key}_alpha"), &alpha);
        w.record(task_label, format!("{key}_beta"), &beta);
    }
    let mut line = format!(
        "  pair ({}, {}): dim {dim}; injective: {} [{}]",
        pair.gamma,
        pair.theta,
        if pair.injective { "yes" } else { "no" },
        pair.label
    );
    if !pair.witness_nodes.is_empty() {
        line.push_str(&format!("; rank condition fails at {witness_count} of {grid_len} nodes"));
    }
    match &pair.stability {
        StabilityOutcome::Stable(_) => {
            line.push_str(&format!("; stable with (alpha, beta) = ({alpha}, {beta})"))
        }
        StabilityOutcome::Vacuous => line.push_str("; zero-dimensional pair (vacuously stable)"),
        StabilityOutcome::RankFailure { .. } => line.push_str("; not stable (rank failure)"),
    }
    if let Some(verdict) = pair.angle_verdict {
        w.record(task_label, format!("{key}_closedness"), verdict);
        line.push_str(&format!("; sum closedness: {verdict}"));
    }
    w.line(line);
}

fn union_summary(
    w: &mut BundleWriter,
    task_label: &str,
    report: &SamplingReport,
) {
    let injective = w.record(task_label, "union_injective", report.injective);
    let stable = w.record(task_label, "union_stable", report.stable);
    w.line(format!("  union injective: {injective}; union stable: {stable}"));
    if let (Some(alpha), Some(beta)) = (report.alpha, report.beta) {
        let alpha = w.record(task_label, "union_alpha", fmt_f64(alpha));
        let beta = w.record(task_label, "union_beta", fmt_f64(beta));
        w.line(format!("  union stability bounds: (alpha, beta) = ({alpha}, {beta})"));
    }
    let have = w.record(task_label, "sample_count", report.sample_count);
    let need = w.record(task_label, "required_samples", report.required_samples);
    if report.meets_sample_bound {
        w.line(format!("  sample-count lower bound met: #I = {have} >= {need}"));
    } else {
        w.line(format!(
            "  sample-count lower bound violated: #I = {have} < {need} = max pair dimension"
        ));
    }
    w.flags.not_injective |= !report.injective;
    w.flags.not_stable |= !report.stable;
    w.flags.not_closed |= report
        .pairs
        .iter()
        .any(|p| p.angle_verdict == Some(Verdict::NotClosed));
}

fn sis_task(
    scenario: &Scenario,
    grid: &FrequencyGrid,
    tol: &Tolerances,
    w: &mut BundleWriter,
    task_no: usize,
    csv_prefix: &str,
    union: &[String],
) -> anyhow::Result<()> {
    let model = UnionModel::new(
        union
            .iter()
            .map(|name| (name.clone(), SubspaceData::Generators(scenario.subspace_generators(name))))
            .collect(),
    )?;
    let psi_gens = scenario
        .sampling_generators()
        .ok_or_else(|| anyhow!("analyze-sis needs a sampling_set"))?;
    let psi = SamplingSet::validate(psi_gens, grid, tol)?;
    let report = sis_union_report(&model, &psi, grid, tol)?;

    let task_label = format!("task{task_no}");
    w.blank();
    w.line(format!("[task {task_no}] sampling analysis of the union {{{}}}", union.join(", ")));
    let names: Vec<&str> = union.iter().map(String::as_str).collect();
    note_truncated(scenario, &names, w);
    let bessel = w.record(&task_label, "sampling_bessel_bound", fmt_f64(psi.bessel.bessel_bound));
    w.line(format!("  sampling set Bessel bound = {bessel}"));
    w.line("  pair dimensions are length estimates: grid maxima of the closure dimension functions");
    for pair in &report.pairs {
        let csv_name = format!("{csv_prefix}_pair_{}_{}.csv", pair.gamma, pair.theta);
        let rows: Vec<String> = pair
            .per_node
            .iter()
            .map(|n| {
                format!(
                    "{},{},{},{},{},{}",
                    omega_cell(grid, n.node_index),
                    n.dim,
                    n.cross_rank,
                    n.rank_ok,
                    fmt_f64(n.sigma2_min_nonzero.unwrap_or(0.0)),
                    fmt_f64(n.sigma2_max.unwrap_or(0.0))
                )
            })
            .collect();
        w.add_csv(
            &csv_name,
            &format!(
                "{},dim,cross_rank,rank_ok,sigma2_min_nonzero,sigma2_max",
                omega_header(scenario.dimension)
            ),
            &rows,
        );
        pair_summary(w, &task_label, pair, grid.len());
        w.line(format!("    per-node table: {csv_name}"));
    }
    union_summary(w, &task_label, &report);
    Ok(())
}

fn fd_task(
    scenario: &Scenario,
    tol: &Tolerances,
    w: &mut BundleWriter,
    task_no: usize,
    csv_prefix: &str,
) -> anyhow::Result<()> {
    let fd = scenario.fd.as_ref().ok_or_else(|| anyhow!("analyze-union needs the fd model"))?;
    let model = UnionModel::new(
        fd.subspaces
            .iter()
            .map(|(name, basis)| (name.clone(), SubspaceData::Basis(basis.clone())))
            .collect(),
    )?;
    let report = fd_union_report(&model, &fd.sampling, tol)?;

    let task_label = format!("task{task_no}");
    w.blank();
    w.line(format!(
        "[task {task_no}] finite-dimensional sampling analysis ({} subspaces in C^{})",
        fd.subspaces.len(),
        fd.ambient_dim
    ));
    let csv_name = format!("{csv_prefix}.csv");
    let rows: Vec<String> = report
        .pairs
        .iter()
        .map(|p| {
            let (stability, alpha, beta) = stability_cell(&p.stability);
            format!(
                "{},{},{},{},{},{},{},{}",
                p.gamma, p.theta, p.dim, p.injective, p.label, stability, alpha, beta
            )
        })
        .collect();
    w.add_csv(&csv_name, "gamma,theta,dim,injective,label,stability,alpha,beta", &rows);
    w.line(format!("  per-pair table: {csv_name}"));
    let pair_count = w.record(&task_label, "pair_count", report.pairs.len());
    w.line(format!("  pairs analyzed (diagonal included): {pair_count}"));
    // Worst pairs only in the summary; the CSV has every pair.
    for pair in report.pairs.iter().filter(|p| !p.injective || !p.stability.is_stable()).take(5) {
        pair_summary(w, &task_label, pair, 0);
    }
    if report.pairs.iter().all(|p| p.injective && p.stability.is_stable()) {
        w.line("  every pair passes the rank and spectrum conditions");
    }
    union_summary(w, &task_label, &report);
    Ok(())
}

/// One-shot convenience: run with a default thread label.
pub fn run_to_dir(scenario: &Scenario, out_dir: &std::path::Path) -> anyhow::Result<RunOutcome> {
    run(scenario, &RunConfig { out_dir: out_dir.to_path_buf(), threads_label: "auto".to_string() })
}
