//! Refinement studies: configuration, registered cases, and table output.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{self, convergence_orders, ErrorReport, OrderEntry, ReportInputs};
use crate::basis::radau_roots;
use crate::corrections::{build_stack, BcKind, FluxWeights};
use crate::error::{LdgError, Result};
use crate::exact::{DriftingWave, ExactSolution, PeriodicWave};
use crate::mesh::Mesh;
use crate::solver::{integrate, BoundaryCondition, IntegrateOptions, LdgOperator, SchemeConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = LdgError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(LdgError::InvalidConfig(format!("unknown format `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub case: String,
    pub k: usize,
    pub n_list: Vec<usize>,
    pub lambda: f64,
    pub theta: f64,
    pub cfl: f64,
    pub final_time: f64,
    /// Correction depth of the initial data; `k` when unset.
    pub depth: Option<usize>,
    /// Overrides the case's boundary condition.
    pub bc: Option<BcKind>,
    pub perturb: Option<f64>,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub time_integrals: bool,
    pub trace_log: Option<PathBuf>,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            case: "periodic-ex1".into(),
            k: 2,
            n_list: vec![20, 40, 80, 160],
            lambda: 0.8,
            theta: 0.8,
            cfl: 0.01,
            final_time: 1.0,
            depth: None,
            bc: None,
            perturb: None,
            seed: 0,
            out: None,
            format: Format::Csv,
            time_integrals: false,
            trace_log: None,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| LdgError::InvalidConfig(format!("bad value `{value}` for `{key}`")))
}

impl StudyConfig {
    /// Sets one `key = value` entry; keys match the long CLI flags.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "case" => self.case = v.to_string(),
            "k" => self.k = parse(key, v)?,
            "N" | "n" => {
                self.n_list = v
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| parse(key, s))
                    .collect::<Result<_>>()?
            }
            "lambda" => self.lambda = parse(key, v)?,
            "theta" => self.theta = parse(key, v)?,
            "cfl" => self.cfl = parse(key, v)?,
            "T" | "t" => self.final_time = parse(key, v)?,
            "ell" => self.depth = Some(parse(key, v)?),
            "bc" => self.bc = Some(v.parse()?),
            "perturb" => self.perturb = Some(parse(key, v)?),
            "seed" => self.seed = parse(key, v)?,
            "out" => self.out = Some(PathBuf::from(v)),
            "format" => self.format = v.parse()?,
            "time_integrals" => self.time_integrals = parse(key, v)?,
            "trace_log" => self.trace_log = Some(PathBuf::from(v)),
            other => return Err(LdgError::InvalidConfig(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Flat `key = value` lines; `#` starts a comment.
    pub fn parse_str(text: &str) -> Result<Self> {
        let mut cfg = StudyConfig::default();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                LdgError::InvalidConfig(format!("line {}: expected key = value", no + 1))
            })?;
            cfg.set(key, value)?;
        }
        Ok(cfg)
    }

    pub fn depth(&self) -> usize {
        self.depth.unwrap_or(self.k)
    }

    pub fn weights(&self) -> FluxWeights {
        FluxWeights::new(self.lambda, self.theta)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_list.is_empty() {
            return Err(LdgError::InvalidConfig("empty N list".into()));
        }
        if self.n_list.windows(2).any(|w| w[1] <= w[0]) {
            return Err(LdgError::InvalidConfig(
                "N list must be strictly increasing".into(),
            ));
        }
        if let Some(&n) = self.n_list.iter().find(|&&n| n < 2) {
            return Err(LdgError::InvalidN(n));
        }
        if self.k == 0 {
            return Err(LdgError::InvalidConfig("k must be at least 1".into()));
        }
        let depth = self.depth();
        if depth == 0 || depth > self.k {
            return Err(LdgError::DepthExceeded { depth, k: self.k });
        }
        self.resolve_case()?;
        Ok(())
    }

    pub fn resolve_case(&self) -> Result<Case> {
        let mut case = lookup_case(&self.case)?;
        if let Some(bc) = self.bc {
            if bc == BcKind::Periodic && !case.solution.is_periodic() {
                return Err(LdgError::InvalidConfig(format!(
                    "{} is not periodic",
                    case.solution.name()
                )));
            }
            case.bc = bc;
        }
        Ok(case)
    }
}

#[derive(Debug, Clone)]
pub struct Case {
    pub name: String,
    pub solution: Arc<dyn ExactSolution>,
    pub bc: BcKind,
}

pub const CASES: [&str; 3] = ["periodic-ex1", "mixed-ex2", "dirichlet-ex2"];

pub fn lookup_case(name: &str) -> Result<Case> {
    let (solution, bc): (Arc<dyn ExactSolution>, BcKind) = match name {
        "periodic-ex1" => (Arc::new(PeriodicWave), BcKind::Periodic),
        "mixed-ex2" => (Arc::new(DriftingWave), BcKind::Mixed),
        "dirichlet-ex2" => (Arc::new(DriftingWave), BcKind::Dirichlet),
        other => return Err(LdgError::UnknownCase(other.to_string())),
    };
    Ok(Case {
        name: name.to_string(),
        solution,
        bc,
    })
}

fn build_mesh(cfg: &StudyConfig, n: usize, length: f64) -> Result<Mesh> {
    match cfg.perturb {
        Some(a) if a > 0.0 => Mesh::perturbed(n, length, a, cfg.seed),
        _ => Mesh::uniform(n, length),
    }
}

/// One refinement level: integrate and evaluate every functional at `T`.
pub fn run_single(cfg: &StudyConfig, case: &Case, n: usize) -> Result<ErrorReport> {
    let sol = case.solution.as_ref();
    let mesh = Arc::new(build_mesh(cfg, n, sol.domain_length())?);
    let scheme = SchemeConfig {
        k: cfg.k,
        weights: cfg.weights(),
        bc: BoundaryCondition::from_exact(case.bc, case.solution.clone()),
        cfl: cfg.cfl,
        final_time: cfg.final_time,
        depth: cfg.depth(),
    };
    let trace_log = cfg.trace_log.as_ref().map(|p| {
        let stem = p.file_stem().and_then(|s| s.to_str()).unwrap_or("trace");
        p.with_file_name(format!("{stem}_N{n}.csv"))
    });
    let opts = IntegrateOptions {
        time_integrals: cfg.time_integrals,
        trace_log,
    };
    let state = integrate(&scheme, mesh.clone(), sol, &opts)?;
    let t = state.t;
    let op = LdgOperator::new(mesh.clone(), &scheme)?;
    let q_h = op.auxiliary_solve(&state.u, t);
    let stack = build_stack(sol, t, mesh, cfg.k, cfg.depth(), cfg.weights(), case.bc)?;
    let (u_i, _) = stack.interpolant();
    let u_points = radau_roots(cfg.k, cfg.theta)?;
    let q_points = radau_roots(cfg.k, 1.0 - cfg.theta)?;
    let mut report = analysis::error_report(&ReportInputs {
        u_h: &state.u,
        q_h: &q_h,
        interpolant: &u_i,
        u: &|x| sol.u(x, t),
        q: &|x| sol.q(x, t),
        q_x: &|x| sol.eval(2, 0, x, t),
        theta: cfg.theta,
        bc: case.bc,
        t,
        u_points: &u_points,
        q_points: &q_points,
    })?;
    if let Some(ti) = state.time_integrals {
        report.int_e_q_l2 = Some(ti.q_l2_sq.sqrt());
        report.int_e_qn = Some(ti.q_trace_sq.sqrt());
        report.int_e_qc = Some(ti.q_cell_sq.sqrt());
    }
    log::info!("N = {n}: {} steps, e_un = {:e}", state.steps, report.e_un);
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub config: StudyConfig,
    pub bc: BcKind,
    /// `max(||u(., 0)||, ||u(., T)||)`, the scale of the round-off floor.
    pub floor_scale: f64,
    pub rows: Vec<ErrorReport>,
    /// Per column, one entry per row.
    pub orders: BTreeMap<String, Vec<OrderEntry>>,
}

impl ConvergenceTable {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let mut out = Vec::with_capacity(self.rows.len());
        for r in &self.rows {
            let value = r
                .columns()
                .into_iter()
                .find(|(c, _)| *c == name)
                .map(|(_, v)| v)
                .or_else(|| {
                    r.optional_columns()
                        .into_iter()
                        .find(|(c, _)| *c == name)
                        .and_then(|(_, v)| v)
                })?;
            out.push(value);
        }
        Some(out)
    }

    pub fn orders(&self, name: &str) -> Option<&[OrderEntry]> {
        self.orders.get(name).map(|v| v.as_slice())
    }
}

fn column_orders(rows: &[ErrorReport], scale: f64, values: &[Option<f64>]) -> Option<Vec<OrderEntry>> {
    let pairs: Option<Vec<(usize, f64)>> = rows.iter().zip(values).map(|(r, v)| v.map(|v| (r.n, v))).collect();
    // columns containing exact zeros (e.g. T = 0) have no orders
    convergence_orders(&pairs?, scale).ok()
}

pub fn run_study(cfg: &StudyConfig) -> Result<ConvergenceTable> {
    cfg.validate()?;
    let case = cfg.resolve_case()?;
    let rows: Vec<ErrorReport> = cfg
        .n_list
        .par_iter()
        .map(|&n| {
            run_single(cfg, &case, n).map_err(|e| LdgError::Run {
                n,
                cause: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;
    let sol = case.solution.as_ref();
    let fine = Arc::new(build_mesh(cfg, *cfg.n_list.last().unwrap(), sol.domain_length())?);
    let zero = crate::field::Field::zeros(fine, cfg.k);
    // round-off is set by the largest state the run carried
    let floor_scale = [0.0, cfg.final_time]
        .iter()
        .map(|&t| analysis::l2_error(&zero, &|x| sol.u(x, t)))
        .fold(0.0, f64::max);
    let mut orders = BTreeMap::new();
    let names: Vec<&str> = rows[0].columns().iter().map(|(c, _)| *c).collect();
    for name in names {
        let values: Vec<Option<f64>> = rows
            .iter()
            .map(|r| r.columns().into_iter().find(|(c, _)| *c == name).map(|(_, v)| v))
            .collect();
        if let Some(o) = column_orders(&rows, floor_scale, &values) {
            orders.insert(name.to_string(), o);
        }
    }
    for name in ["int_e_q_l2", "int_e_qn", "int_e_qc"] {
        let values: Vec<Option<f64>> = rows
            .iter()
            .map(|r| r.optional_columns().into_iter().find(|(c, _)| *c == name).and_then(|(_, v)| v))
            .collect();
        if let Some(o) = column_orders(&rows, floor_scale, &values) {
            orders.insert(name.to_string(), o);
        }
    }
    Ok(ConvergenceTable {
        config: cfg.clone(),
        bc: case.bc,
        floor_scale,
        rows,
        orders,
    })
}

/// Six significant digits, scientific.
pub fn sci(v: f64) -> String {
    format!("{v:.5e}")
}

fn order_cell(entry: Option<&OrderEntry>) -> String {
    match entry {
        Some(OrderEntry {
            order: Some(o),
            floor,
        }) => {
            if *floor {
                format!("{o:.2}*")
            } else {
                format!("{o:.2}")
            }
        }
        _ => String::new(),
    }
}

/// CSV: one row per N, each functional followed by its order column.
/// Orders of entries at the round-off floor carry a trailing `*`.
pub fn write_csv(table: &ConvergenceTable, mut out: impl Write) -> Result<()> {
    let mut header = vec!["N".to_string(), "T".to_string()];
    let first = &table.rows[0];
    let names: Vec<&str> = first
        .columns()
        .iter()
        .map(|(c, _)| *c)
        .chain(first.optional_columns().iter().map(|(c, _)| *c))
        .collect();
    for name in &names {
        header.push(name.to_string());
        header.push(format!("{name}_order"));
    }
    header.push("discarded_roots".into());
    writeln!(out, "{}", header.join(","))?;
    for (i, r) in table.rows.iter().enumerate() {
        let mut cells = vec![r.n.to_string(), format!("{}", r.t)];
        let values: Vec<Option<f64>> = r
            .columns()
            .iter()
            .map(|(_, v)| Some(*v))
            .chain(r.optional_columns().iter().map(|(_, v)| *v))
            .collect();
        for (name, v) in names.iter().zip(values) {
            cells.push(v.map(sci).unwrap_or_default());
            cells.push(order_cell(table.orders.get(*name).and_then(|o| o.get(i))));
        }
        cells.push(r.discarded_roots.to_string());
        writeln!(out, "{}", cells.join(","))?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JsonCell {
    pub display: String,
    pub value: f64,
    pub order: Option<f64>,
    pub floor: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JsonRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub t: f64,
    pub discarded_roots: usize,
    pub values: BTreeMap<String, JsonCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JsonTable {
    pub config: StudyConfig,
    pub bc: BcKind,
    pub floor_scale: f64,
    pub rows: Vec<JsonRow>,
}

pub fn to_json_table(table: &ConvergenceTable) -> JsonTable {
    let rows = table
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut values = BTreeMap::new();
            let all = r
                .columns()
                .into_iter()
                .map(|(c, v)| (c, Some(v)))
                .chain(r.optional_columns());
            for (name, v) in all {
                let Some(v) = v else { continue };
                let entry = table.orders.get(name).and_then(|o| o.get(i));
                values.insert(
                    name.to_string(),
                    JsonCell {
                        display: sci(v),
                        value: v,
                        order: entry.and_then(|e| e.order),
                        floor: entry.map(|e| e.floor).unwrap_or(false),
                    },
                );
            }
            JsonRow {
                n: r.n,
                t: r.t,
                discarded_roots: r.discarded_roots,
                values,
            }
        })
        .collect();
    JsonTable {
        config: table.config.clone(),
        bc: table.bc,
        floor_scale: table.floor_scale,
        rows,
    }
}

pub fn write_json(table: &ConvergenceTable, out: impl Write) -> Result<()> {
    serde_json::to_writer_pretty(out, &to_json_table(table))?;
    Ok(())
}

/// Writes the table to `path`, or to stdout when `path` is `None`.
pub fn emit(table: &ConvergenceTable, format: Format, path: Option<&std::path::Path>) -> Result<()> {
    let mut sink: Box<dyn Write> = match path {
        Some(p) => Box::new(std::io::BufWriter::new(std::fs::File::create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    };
    match format {
        Format::Csv => write_csv(table, &mut sink)?,
        Format::Json => {
            write_json(table, &mut sink)?;
            writeln!(sink)?;
        }
    }
    sink.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_config_text() {
        let cfg = StudyConfig::parse_str(
            "# table 4\ncase = mixed-ex2\nk=1\nN = 40, 80,160\nlambda=1.2\ntheta = 0.8\nT=1\nformat=json\n",
        )
        .unwrap();
        assert_eq!(cfg.case, "mixed-ex2");
        assert_eq!(cfg.n_list, vec![40, 80, 160]);
        assert_eq!(cfg.lambda, 1.2);
        assert_eq!(cfg.format, Format::Json);
        assert_eq!(cfg.depth(), 1);
        cfg.validate().unwrap();
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(StudyConfig::parse_str("k 2").is_err());
        assert!(StudyConfig::parse_str("colour = red").is_err());
        let mut cfg = StudyConfig::default();
        cfg.n_list = vec![20, 10];
        assert!(cfg.validate().is_err());
        cfg.n_list = vec![];
        assert!(cfg.validate().is_err());
        let mut cfg = StudyConfig::default();
        cfg.case = "nope".into();
        assert!(matches!(cfg.validate(), Err(LdgError::UnknownCase(_))));
        let mut cfg = StudyConfig::default();
        cfg.case = "mixed-ex2".into();
        cfg.bc = Some(BcKind::Periodic);
        assert!(cfg.validate().is_err());
        let mut cfg = StudyConfig::default();
        cfg.depth = Some(3);
        assert!(matches!(cfg.validate(), Err(LdgError::DepthExceeded { .. })));
    }

    #[test]
    fn bc_override() {
        let mut cfg = StudyConfig::default();
        cfg.case = "mixed-ex2".into();
        cfg.bc = Some(BcKind::Dirichlet);
        assert_eq!(cfg.resolve_case().unwrap().bc, BcKind::Dirichlet);
    }

    #[test]
    fn zero_time_study_reports_interpolation_errors() {
        let mut cfg = StudyConfig::default();
        cfg.k = 1;
        cfg.n_list = vec![8, 16];
        cfg.final_time = 0.0;
        let table = run_study(&cfg).unwrap();
        for r in &table.rows {
            assert_eq!(r.superclose, 0.0);
            assert!(r.e_u_l2 > 0.0);
        }
        assert!(table.orders("superclose").is_none());
        assert!(table.orders("e_u_l2").is_some());
    }

    #[test]
    fn outputs_round_trip() {
        let mut cfg = StudyConfig::default();
        cfg.k = 1;
        cfg.n_list = vec![6, 12];
        cfg.final_time = 0.05;
        cfg.time_integrals = true;
        let table = run_study(&cfg).unwrap();
        let mut csv = Vec::new();
        write_csv(&table, &mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert_eq!(text.lines().count(), cfg.n_list.len() + 1);
        let header = text.lines().next().unwrap();
        for (name, _) in table.rows[0].columns() {
            assert!(header.split(',').any(|c| c == name));
        }
        let mut json = Vec::new();
        write_json(&table, &mut json).unwrap();
        let back: JsonTable = serde_json::from_slice(&json).unwrap();
        assert_eq!(back, to_json_table(&table));
        assert_eq!(back.rows[1].values["e_un"].value, table.rows[1].e_un);
        assert!(back.rows[0].values.contains_key("int_e_q_l2"));
    }
}
