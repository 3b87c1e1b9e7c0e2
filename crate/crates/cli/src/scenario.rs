//! Scenario files: the JSON schema, loading, and up-front validation.
//!
//! A scenario names its generators (piecewise Fourier transforms or sampled
//! fiber sidecar files), groups them into subspaces, optionally declares a
//! sampling set and a finite-dimensional union model, and lists the analysis
//! tasks. Every referenced name is resolved and every task validated before
//! any computation starts; schema errors carry the offending field path.
//! Interval endpoints must be exact: strings like `"5/2"` or `"2.5"`, or
//! bare integers — JSON floats would silently lose exactness.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Deserialize;
use thiserror::Error;

use sisample::dsl::{parse_generator, GeneratorSpec, PieceRecord, SampledFibers};
use sisample::Tolerances;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse `{path}` as JSON: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("{field}: {message}")]
    Schema { field: String, message: String },
}

fn schema(field: impl Into<String>, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Schema { field: field.into(), message: message.into() }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    version: String,
    dimension: usize,
    /// Defaults to 512 nodes for 1-D, 64 per axis otherwise.
    #[serde(default)]
    grid: Option<usize>,
    #[serde(default)]
    tolerances: TolerancesFile,
    #[serde(default)]
    generators: Vec<GeneratorFile>,
    #[serde(default)]
    subspaces: Vec<SubspaceFile>,
    #[serde(default)]
    sampling_set: Option<Vec<String>>,
    #[serde(default)]
    fd: Option<FdFile>,
    tasks: Vec<TaskFile>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct TolerancesFile {
    rank_tol: Option<f64>,
    spec_tol: Option<f64>,
    close_eps: Option<f64>,
    conv_eps: Option<f64>,
    max_iter: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GeneratorFile {
    name: String,
    #[serde(default)]
    pieces: Option<Vec<PieceFile>>,
    #[serde(default)]
    fibers: Option<FibersFile>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PieceFile {
    interval: (EndpointFile, EndpointFile),
    expr: String,
}

#[derive(Debug, Deserialize)]
#[serde(
    untagged,
    expecting = "an exact rational endpoint: a string like \"5/2\" or \"2.5\", or an integer (bare JSON floats lose exactness)"
)]
enum EndpointFile {
    Int(i64),
    Text(String),
}

impl EndpointFile {
    fn as_text(&self) -> String {
        match self {
            EndpointFile::Int(v) => v.to_string(),
            EndpointFile::Text(s) => s.clone(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FibersFile {
    file: String,
    dimension: usize,
    grid: usize,
    window: Vec<Vec<i64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SubspaceFile {
    name: String,
    generators: Vec<String>,
    #[serde(default)]
    truncated: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FdFile {
    ambient_dim: usize,
    subspaces: Vec<FdSubspaceFile>,
    sampling: Vec<Vec<[f64; 2]>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FdSubspaceFile {
    name: String,
    vectors: Vec<Vec<[f64; 2]>>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
enum TaskFile {
    Angle {
        u: String,
        v: String,
        #[serde(default)]
        u_minus_v: Option<String>,
        #[serde(default)]
        v_minus_u: Option<String>,
    },
    Dimension { subspace: String },
    SpectrumCurve { subspace: String },
    AnalyzeSis { union: Vec<String> },
    AnalyzeUnion {},
}

/// A validated analysis task; all names are resolved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Task {
    Angle { u: String, v: String, u_minus_v: Option<String>, v_minus_u: Option<String> },
    Dimension { subspace: String },
    SpectrumCurve { subspace: String },
    AnalyzeSis { union: Vec<String> },
    AnalyzeUnion,
}

impl Task {
    /// Short slug used in output file names.
    pub fn slug(&self) -> String {
        match self {
            Task::Angle { u, v, .. } => format!("angle_{u}_{v}"),
            Task::Dimension { subspace } => format!("dimension_{subspace}"),
            Task::SpectrumCurve { subspace } => format!("spectrum_{subspace}"),
            Task::AnalyzeSis { union } => format!("sis_{}", union.join("_")),
            Task::AnalyzeUnion => "fd_union".to_string(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SubspaceDef {
    pub name: String,
    pub generator_names: Vec<String>,
    /// Declared finite prefix of a countable generator list: verdicts apply
    /// to the truncated space and the report carries a warning.
    pub truncated: bool,
}

#[derive(Debug, Clone)]
pub struct FdModel {
    pub ambient_dim: usize,
    pub subspaces: Vec<(String, DMatrix<Complex64>)>,
    pub sampling: DMatrix<Complex64>,
}

/// A fully validated scenario, ready to run.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub file_name: String,
    pub sha256: String,
    pub dimension: usize,
    pub grid_size: usize,
    pub tolerances: Tolerances,
    pub generators: Vec<GeneratorSpec>,
    generator_index: HashMap<String, usize>,
    pub subspaces: Vec<SubspaceDef>,
    subspace_index: HashMap<String, usize>,
    pub sampling_set: Option<Vec<String>>,
    pub fd: Option<FdModel>,
    pub tasks: Vec<Task>,
}

/// Command-line overrides; flags win over scenario values.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub grid: Option<usize>,
    pub rank_tol: Option<f64>,
    pub spec_tol: Option<f64>,
    pub close_eps: Option<f64>,
    pub max_iter: Option<usize>,
}

impl Scenario {
    pub fn generator(&self, name: &str) -> &GeneratorSpec {
        &self.generators[self.generator_index[name]]
    }

    pub fn subspace(&self, name: &str) -> &SubspaceDef {
        &self.subspaces[self.subspace_index[name]]
    }

    pub fn subspace_generators(&self, name: &str) -> Vec<GeneratorSpec> {
        self.subspace(name)
            .generator_names
            .iter()
            .map(|g| self.generator(g).clone())
            .collect()
    }

    pub fn sampling_generators(&self) -> Option<Vec<GeneratorSpec>> {
        self.sampling_set
            .as_ref()
            .map(|names| names.iter().map(|g| self.generator(g).clone()).collect())
    }

    pub fn apply_overrides(&mut self, overrides: &Overrides) {
        if let Some(grid) = overrides.grid {
            self.grid_size = grid;
        }
        if let Some(v) = overrides.rank_tol {
            self.tolerances.rank_tol = v;
        }
        if let Some(v) = overrides.spec_tol {
            self.tolerances.spec_tol = v;
        }
        if let Some(v) = overrides.close_eps {
            self.tolerances.close_eps = v;
        }
        if let Some(v) = overrides.max_iter {
            self.tolerances.max_iter = v;
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for byte in digest {
        let _ = write!(out, "{byte:02x}");
    }
    out
}

fn valid_name(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

/// Loads and validates a scenario file. Sampled-fiber sidecar CSVs are read
/// relative to the scenario's directory.
pub fn load_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let display = path.display().to_string();
    let bytes = std::fs::read(path).map_err(|source| ScenarioError::Io { path: display.clone(), source })?;
    let sha256 = sha256_hex(&bytes);
    let file: ScenarioFile = serde_json::from_slice(&bytes)
        .map_err(|source| ScenarioError::Json { path: display.clone(), source })?;

    if file.version != "1" {
        return Err(schema("version", format!("unsupported version `{}` (expected \"1\")", file.version)));
    }
    if file.dimension == 0 {
        return Err(schema("dimension", "must be at least 1"));
    }
    let grid_size = file.grid.unwrap_or(if file.dimension == 1 { 512 } else { 64 });
    if grid_size == 0 {
        return Err(schema("grid", "must be at least 1"));
    }

    let defaults = Tolerances::default();
    let tolerances = Tolerances {
        rank_tol: file.tolerances.rank_tol.unwrap_or(defaults.rank_tol),
        spec_tol: file.tolerances.spec_tol.unwrap_or(defaults.spec_tol),
        close_eps: file.tolerances.close_eps.unwrap_or(defaults.close_eps),
        conv_eps: file.tolerances.conv_eps.unwrap_or(defaults.conv_eps),
        max_iter: file.tolerances.max_iter.unwrap_or(defaults.max_iter),
    };

    let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
    let mut generators = Vec::with_capacity(file.generators.len());
    let mut generator_index = HashMap::new();
    for (i, g) in file.generators.iter().enumerate() {
        let field = format!("generators[{i}]");
        if !valid_name(&g.name) {
            return Err(schema(format!("{field}.name"), format!("invalid name `{}`", g.name)));
        }
        if generator_index.contains_key(&g.name) {
            return Err(schema(format!("{field}.name"), format!("duplicate generator `{}`", g.name)));
        }
        let spec = match (&g.pieces, &g.fibers) {
            (Some(pieces), None) => {
                if file.dimension != 1 {
                    return Err(schema(
                        format!("{field}.pieces"),
                        "piecewise generators are 1-dimensional; use sampled fibers for n >= 2",
                    ));
                }
                build_piecewise(&field, &g.name, pieces)?
            }
            (None, Some(fibers)) => build_sampled(&field, &g.name, fibers, &base_dir, file.dimension)?,
            _ => {
                return Err(schema(field, "generator needs exactly one of `pieces` or `fibers`"));
            }
        };
        generator_index.insert(g.name.clone(), generators.len());
        generators.push(spec);
    }

    let mut subspaces = Vec::with_capacity(file.subspaces.len());
    let mut subspace_index = HashMap::new();
    for (i, s) in file.subspaces.iter().enumerate() {
        let field = format!("subspaces[{i}]");
        if !valid_name(&s.name) {
            return Err(schema(format!("{field}.name"), format!("invalid name `{}`", s.name)));
        }
        if subspace_index.contains_key(&s.name) {
            return Err(schema(format!("{field}.name"), format!("duplicate subspace `{}`", s.name)));
        }
        for (j, gname) in s.generators.iter().enumerate() {
            if !generator_index.contains_key(gname) {
                return Err(schema(
                    format!("{field}.generators[{j}]"),
                    format!("unknown generator `{gname}`"),
                ));
            }
        }
        subspace_index.insert(s.name.clone(), subspaces.len());
        subspaces.push(SubspaceDef {
            name: s.name.clone(),
            generator_names: s.generators.clone(),
            truncated: s.truncated,
        });
    }

    if let Some(sampling) = &file.sampling_set {
        for (j, gname) in sampling.iter().enumerate() {
            if !generator_index.contains_key(gname) {
                return Err(schema(format!("sampling_set[{j}]"), format!("unknown generator `{gname}`")));
            }
        }
    }

    let fd = match &file.fd {
        None => None,
        Some(fd_file) => Some(build_fd(fd_file)?),
    };

    let mut tasks = Vec::with_capacity(file.tasks.len());
    for (i, t) in file.tasks.iter().enumerate() {
        let field = format!("tasks[{i}]");
        let resolve_subspace = |name: &str, sub_field: &str| {
            if subspace_index.contains_key(name) {
                Ok(name.to_string())
            } else {
                Err(schema(format!("{field}.{sub_field}"), format!("unknown subspace `{name}`")))
            }
        };
        let task = match t {
            TaskFile::Angle { u, v, u_minus_v, v_minus_u } => {
                if u_minus_v.is_some() != v_minus_u.is_some() {
                    return Err(schema(
                        field,
                        "supply both `u_minus_v` and `v_minus_u`, or neither",
                    ));
                }
                Task::Angle {
                    u: resolve_subspace(u, "u")?,
                    v: resolve_subspace(v, "v")?,
                    u_minus_v: u_minus_v
                        .as_ref()
                        .map(|n| resolve_subspace(n, "u_minus_v"))
                        .transpose()?,
                    v_minus_u: v_minus_u
                        .as_ref()
                        .map(|n| resolve_subspace(n, "v_minus_u"))
                        .transpose()?,
                }
            }
            TaskFile::Dimension { subspace } => {
                Task::Dimension { subspace: resolve_subspace(subspace, "subspace")? }
            }
            TaskFile::SpectrumCurve { subspace } => {
                if file.sampling_set.is_none() {
                    return Err(schema(field, "spectrum-curve needs a `sampling_set`"));
                }
                Task::SpectrumCurve { subspace: resolve_subspace(subspace, "subspace")? }
            }
            TaskFile::AnalyzeSis { union } => {
                if file.sampling_set.is_none() {
                    return Err(schema(field, "analyze-sis needs a `sampling_set`"));
                }
                if union.is_empty() {
                    return Err(schema(format!("{field}.union"), "needs at least one subspace"));
                }
                Task::AnalyzeSis {
                    union: union
                        .iter()
                        .map(|n| resolve_subspace(n, "union"))
                        .collect::<Result<_, _>>()?,
                }
            }
            TaskFile::AnalyzeUnion {} => {
                if fd.is_none() {
                    return Err(schema(field, "analyze-union needs the `fd` model"));
                }
                Task::AnalyzeUnion
            }
        };
        tasks.push(task);
    }

    let file_name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| display.clone());
    Ok(Scenario {
        file_name,
        sha256,
        dimension: file.dimension,
        grid_size,
        tolerances,
        generators,
        generator_index,
        subspaces,
        subspace_index,
        sampling_set: file.sampling_set.clone(),
        fd,
        tasks,
    })
}

fn build_piecewise(
    field: &str,
    name: &str,
    pieces: &[PieceFile],
) -> Result<GeneratorSpec, ScenarioError> {
    let lowers: Vec<String> = pieces.iter().map(|p| p.interval.0.as_text()).collect();
    let uppers: Vec<String> = pieces.iter().map(|p| p.interval.1.as_text()).collect();
    let records: Vec<PieceRecord<'_>> = pieces
        .iter()
        .enumerate()
        .map(|(j, p)| PieceRecord { lower: &lowers[j], upper: &uppers[j], expr: &p.expr })
        .collect();
    parse_generator(name, &records)
        .map_err(|e| schema(format!("{field}.pieces"), e.to_string()))
}

fn build_sampled(
    field: &str,
    name: &str,
    fibers: &FibersFile,
    base_dir: &Path,
    scenario_dimension: usize,
) -> Result<GeneratorSpec, ScenarioError> {
    if fibers.dimension != scenario_dimension {
        return Err(schema(
            format!("{field}.fibers.dimension"),
            format!("declared {} but the scenario dimension is {}", fibers.dimension, scenario_dimension),
        ));
    }
    let csv_path = base_dir.join(&fibers.file);
    let text = std::fs::read_to_string(&csv_path).map_err(|source| ScenarioError::Io {
        path: csv_path.display().to_string(),
        source,
    })?;
    let mut entries = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        let expected = 1 + fibers.dimension + 2;
        if cols.len() != expected {
            return Err(schema(
                format!("{field}.fibers.file"),
                format!("line {}: expected {} columns (node, k..., re, im), found {}", line_no + 1, expected, cols.len()),
            ));
        }
        let bad = |what: &str| {
            schema(
                format!("{field}.fibers.file"),
                format!("line {}: cannot parse {what}", line_no + 1),
            )
        };
        let node: usize = cols[0].parse().map_err(|_| bad("node index"))?;
        let mut k = Vec::with_capacity(fibers.dimension);
        for col in &cols[1..1 + fibers.dimension] {
            k.push(col.parse::<i64>().map_err(|_| bad("window index"))?);
        }
        let re: f64 = cols[cols.len() - 2].parse().map_err(|_| bad("re"))?;
        let im: f64 = cols[cols.len() - 1].parse().map_err(|_| bad("im"))?;
        entries.push((node, k, Complex64::new(re, im)));
    }
    let sampled = SampledFibers::new(fibers.dimension, fibers.grid, fibers.window.clone(), entries)
        .map_err(|e| schema(format!("{field}.fibers"), e.to_string()))?;
    Ok(GeneratorSpec::sampled(name, sampled))
}

fn build_fd(fd: &FdFile) -> Result<FdModel, ScenarioError> {
    let n = fd.ambient_dim;
    if n == 0 {
        return Err(schema("fd.ambient_dim", "must be at least 1"));
    }
    let to_matrix = |vectors: &[Vec<[f64; 2]>], field: &str| -> Result<DMatrix<Complex64>, ScenarioError> {
        if vectors.is_empty() {
            return Err(schema(field, "needs at least one vector"));
        }
        for (j, v) in vectors.iter().enumerate() {
            if v.len() != n {
                return Err(schema(
                    format!("{field}[{j}]"),
                    format!("vector has {} entries, ambient_dim is {n}", v.len()),
                ));
            }
        }
        Ok(DMatrix::from_fn(n, vectors.len(), |r, c| {
            Complex64::new(vectors[c][r][0], vectors[c][r][1])
        }))
    };
    let mut subspaces = Vec::with_capacity(fd.subspaces.len());
    let mut seen = HashMap::new();
    for (i, s) in fd.subspaces.iter().enumerate() {
        let field = format!("fd.subspaces[{i}]");
        if !valid_name(&s.name) {
            return Err(schema(format!("{field}.name"), format!("invalid name `{}`", s.name)));
        }
        if seen.insert(s.name.clone(), ()).is_some() {
            return Err(schema(format!("{field}.name"), format!("duplicate subspace `{}`", s.name)));
        }
        subspaces.push((s.name.clone(), to_matrix(&s.vectors, &format!("{field}.vectors"))?));
    }
    if subspaces.is_empty() {
        return Err(schema("fd.subspaces", "needs at least one subspace"));
    }
    let sampling = to_matrix(&fd.sampling, "fd.sampling")?;
    Ok(FdModel { ambient_dim: n, subspaces, sampling })
}
