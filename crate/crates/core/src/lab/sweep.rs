use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{ExperimentConfig, SweepAxis};
use super::experiment::run_experiment;
use super::LabError;

pub const INDEX_FILE: &str = "index.jsonl";

/// One line of the sweep index.
#[derive(Debug, Clone, Serialize)]
pub struct SweepCell {
    pub cell: usize,
    pub dir: String,
    pub overrides: serde_json::Map<String, serde_json::Value>,
    pub ok: bool,
    pub error: Option<String>,
    pub exit_code: Option<i32>,
    pub converged: Option<bool>,
    pub t_final: Option<f64>,
    pub rate: Option<f64>,
    pub rate_r2: Option<f64>,
}

/// Sets `value` at a dotted path such as `flow.dt_init` or `initial.modes.0.amplitude`,
/// creating intermediate tables as needed.
pub fn set_path(root: &mut toml::Value, path: &str, value: toml::Value) -> Result<(), LabError> {
    let bad = |why: &str| LabError::Config(format!("sweep path `{path}`: {why}"));
    let mut parts = path.split('.').peekable();
    let mut cur = root;
    while let Some(key) = parts.next() {
        if key.is_empty() {
            return Err(bad("empty segment"));
        }
        let last = parts.peek().is_none();
        cur = match cur {
            toml::Value::Table(t) => {
                if last {
                    t.insert(key.to_string(), value);
                    return Ok(());
                }
                t.entry(key.to_string()).or_insert_with(|| toml::Value::Table(Default::default()))
            }
            toml::Value::Array(a) => {
                let i: usize = key.parse().map_err(|_| bad("array segment must be an index"))?;
                let slot = a.get_mut(i).ok_or_else(|| bad("index out of range"))?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            _ => return Err(bad("descends into a scalar")),
        };
    }
    Err(bad("empty path"))
}

/// Expands the Cartesian product of the axes, last axis fastest.
pub fn expand(axes: &[SweepAxis]) -> Vec<Vec<(String, toml::Value)>> {
    let mut cells: Vec<Vec<(String, toml::Value)>> = vec![Vec::new()];
    for axis in axes {
        cells = cells
            .into_iter()
            .flat_map(|prefix| {
                axis.values.iter().map(move |v| {
                    let mut c = prefix.clone();
                    c.push((axis.path.clone(), v.clone()));
                    c
                })
            })
            .collect();
    }
    cells
}

fn toml_to_json(v: &toml::Value) -> serde_json::Value {
    serde_json::to_value(v).unwrap_or(serde_json::Value::Null)
}

/// Runs every cell of the sweep described in `text` into `out_dir/cell_NNNN`, then
/// writes `index.jsonl` in cell order. Failed cells are recorded, not fatal.
pub fn run_sweep(
    text: &str,
    base_dir: &Path,
    out_dir: &Path,
    max_threads: Option<usize>,
) -> Result<Vec<SweepCell>, LabError> {
    let mut root: toml::Value = toml::from_str(text).map_err(|e| LabError::Config(e.to_string()))?;
    let template = ExperimentConfig::from_value(root.clone(), base_dir)?;
    let axes = template.sweep.clone().unwrap_or_default().axes;
    if axes.is_empty() {
        return Err(LabError::Config("sweep needs at least one [[sweep.axes]] entry".into()));
    }
    if let Some(t) = root.as_table_mut() {
        t.remove("sweep");
    }

    let mut configs = Vec::new();
    for (i, overrides) in expand(&axes).into_iter().enumerate() {
        let mut value = root.clone();
        for (path, v) in &overrides {
            set_path(&mut value, path, v.clone())?;
        }
        let cfg = ExperimentConfig::from_value(value, base_dir)
            .map_err(|e| LabError::Config(format!("cell {i}: {e}")))?;
        configs.push((i, overrides, cfg));
    }
    std::fs::create_dir_all(out_dir).map_err(|e| LabError::io(out_dir, e))?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(max_threads.unwrap_or(0))
        .build()
        .map_err(|e| LabError::Config(format!("thread pool: {e}")))?;
    let mut cells: Vec<SweepCell> = pool.install(|| {
        configs
            .par_iter()
            .map(|(i, overrides, cfg)| {
                let dir = format!("cell_{i:04}");
                let result = run_experiment(cfg, Some(&out_dir.join(&dir)));
                let overrides = overrides.iter().map(|(k, v)| (k.clone(), toml_to_json(v))).collect();
                let mut cell = SweepCell {
                    cell: *i,
                    dir,
                    overrides,
                    ok: result.is_ok(),
                    error: None,
                    exit_code: None,
                    converged: None,
                    t_final: None,
                    rate: None,
                    rate_r2: None,
                };
                match result {
                    Ok(o) => {
                        cell.converged = Some(o.summary.converged);
                        cell.t_final = Some(o.summary.t_final);
                        cell.rate = o.summary.rate;
                        cell.rate_r2 = o.summary.rate_r2;
                    }
                    Err(e) => {
                        cell.exit_code = Some(e.exit_code());
                        cell.error = Some(e.to_string());
                    }
                }
                cell
            })
            .collect()
    });
    cells.sort_by_key(|c| c.cell);

    let mut index = Vec::new();
    for c in &cells {
        serde_json::to_writer(&mut index, c).expect("index line serializes");
        index.push(b'\n');
    }
    let path = out_dir.join(INDEX_FILE);
    std::fs::write(&path, index).map_err(|e| LabError::io(&path, e))?;
    Ok(cells)
}
