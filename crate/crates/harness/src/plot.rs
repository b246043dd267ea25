//! gnuplot data and scripts from the experiment CSVs.
//!
//! Each recognised CSV becomes a `.dat` file (whitespace separated, one
//! gnuplot index block per variant) and a `.gp` script rendering an SVG.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsvKind {
    Loss,
    Weak,
    Strong,
    Landscape,
}

impl CsvKind {
    pub fn of(path: &Path) -> Option<Self> {
        let stem = path.file_stem()?.to_str()?;
        match stem {
            "loss" => Some(Self::Loss),
            "weak" => Some(Self::Weak),
            "strong" => Some(Self::Strong),
            s if s.starts_with("landscape_") => Some(Self::Landscape),
            _ => None,
        }
    }

    fn columns(self) -> &'static [&'static str] {
        match self {
            Self::Loss => &["step", "variant", "loss", "mse_weak"],
            Self::Weak => &[
                "step",
                "variant",
                "mse_weak",
                "recovery_residual",
                "recovered_snapshot_mse",
            ],
            Self::Strong => &["iter", "variant", "inversion_loss", "mse_strong"],
            Self::Landscape => &["x0", "x1", "loss"],
        }
    }
}

/// Parsed CSV: the text column `variant` (if any) and numeric columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub variants: Vec<String>,
    pub numeric: BTreeMap<String, Vec<f64>>,
    pub rows: usize,
}

impl Table {
    fn col(&self, name: &str) -> &[f64] {
        &self.numeric[name]
    }
}

pub fn read_table(path: &Path, kind: CsvKind) -> Result<Table, HarnessError> {
    let csv_err = |row: usize, column: &str, message: String| HarnessError::Csv {
        path: path.to_path_buf(),
        row,
        column: column.to_string(),
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| csv_err(0, "-", e.to_string()))?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| csv_err(1, "-", e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let expected = kind.columns();
    if header != expected {
        return Err(csv_err(
            1,
            "-",
            format!("header {header:?}, expected {expected:?}"),
        ));
    }
    let mut table = Table {
        variants: Vec::new(),
        numeric: BTreeMap::new(),
        rows: 0,
    };
    for name in expected.iter().filter(|&&c| c != "variant") {
        table.numeric.insert(name.to_string(), Vec::new());
    }
    for (i, rec) in reader.records().enumerate() {
        // Line 1 is the header.
        let row = i + 2;
        let rec = rec.map_err(|e| csv_err(row, "-", e.to_string()))?;
        if rec.len() != expected.len() {
            return Err(csv_err(
                row,
                "-",
                format!("{} fields, expected {}", rec.len(), expected.len()),
            ));
        }
        for (name, field) in expected.iter().zip(rec.iter()) {
            if *name == "variant" {
                table.variants.push(field.to_string());
            } else {
                let v: f64 = field
                    .trim()
                    .parse()
                    .map_err(|_| csv_err(row, name, format!("not a number: {field:?}")))?;
                table.numeric.get_mut(*name).expect("column").push(v);
            }
        }
        table.rows += 1;
    }
    if table.rows == 0 {
        return Err(HarnessError::EmptyCsv(path.to_path_buf()));
    }
    Ok(table)
}

/// Log-axis bounds: one decade below the smallest positive value, and one
/// decade above the largest but never below `1e-1`, so floor-level series
/// are drawn against the scale of the defended ones.
pub fn log_bounds(values: impl IntoIterator<Item = f64>) -> Option<(f64, f64)> {
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for v in values.into_iter().filter(|v| v.is_finite() && *v > 0.0) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if hi == 0.0 {
        return None;
    }
    let lo_exp = lo.log10().floor() - 1.0;
    let hi_exp = (hi.log10().ceil() + 1.0).max(-1.0);
    Some((10f64.powf(lo_exp), 10f64.powf(hi_exp)))
}

/// Row indices grouped by variant, in first-appearance order.
fn groups(t: &Table) -> Vec<(String, Vec<usize>)> {
    let mut out: Vec<(String, Vec<usize>)> = Vec::new();
    for (i, v) in t.variants.iter().enumerate() {
        match out.iter_mut().find(|(name, _)| name == v) {
            Some((_, rows)) => rows.push(i),
            None => out.push((v.clone(), vec![i])),
        }
    }
    out
}

fn series_dat(t: &Table, x: &str, ys: &[&str]) -> (String, Vec<String>) {
    let mut s = String::new();
    let gs = groups(t);
    for (k, (name, rows)) in gs.iter().enumerate() {
        if k > 0 {
            s.push_str("\n\n");
        }
        let _ = writeln!(s, "# {name}\n# {x} {}", ys.join(" "));
        for &r in rows {
            let _ = write!(s, "{}", t.col(x)[r]);
            for y in ys {
                let _ = write!(s, " {:e}", t.col(y)[r]);
            }
            s.push('\n');
        }
    }
    (s, gs.into_iter().map(|(n, _)| n).collect())
}

fn plot_clauses(dat: &str, names: &[String], column: usize, suffix: &str) -> String {
    names
        .iter()
        .enumerate()
        .map(|(i, n)| format!("'{dat}' index {i} using 1:{column} with lines title '{n}{suffix}'"))
        .collect::<Vec<_>>()
        .join(", \\\n     ")
}

/// One emitted figure.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotArtifact {
    pub data: PathBuf,
    pub script: PathBuf,
    /// `(lo, hi)` of the log y axis, for the weak-privacy figure.
    pub log_y: Option<(f64, f64)>,
    /// Grid side, for landscapes.
    pub grid: Option<usize>,
}

fn emit_one(path: &Path, kind: CsvKind, out_dir: &Path) -> Result<PlotArtifact, HarnessError> {
    let t = read_table(path, kind)?;
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("plot")
        .to_string();
    let dat_name = format!("{stem}.dat");
    let mut log_y = None;
    let mut grid = None;
    let (dat, script) = match kind {
        CsvKind::Loss => {
            let (dat, names) = series_dat(&t, "step", &["loss", "mse_weak"]);
            let gp = format!(
                "set xlabel 'training step'\nset ylabel 'loss'\nplot {}\n",
                plot_clauses(&dat_name, &names, 2, "")
            );
            (dat, gp)
        }
        CsvKind::Weak => {
            let (dat, names) = series_dat(&t, "step", &["mse_weak", "recovered_snapshot_mse"]);
            let bounds = log_bounds(
                t.col("mse_weak")
                    .iter()
                    .chain(t.col("recovered_snapshot_mse"))
                    .copied(),
            );
            let range = match bounds {
                Some((lo, hi)) => format!("set yrange [{lo:e}:{hi:e}]\n"),
                None => String::new(),
            };
            log_y = bounds;
            let gp = format!(
                "set logscale y\n{range}set format y '10^{{%L}}'\nset xlabel 'training step'\nset ylabel 'MSE'\nplot {}, \\\n     {}\n",
                plot_clauses(&dat_name, &names, 2, " weak"),
                plot_clauses(&dat_name, &names, 3, " snapshot"),
            );
            (dat, gp)
        }
        CsvKind::Strong => {
            let (dat, names) = series_dat(&t, "iter", &["mse_strong", "inversion_loss"]);
            let gp = format!(
                "set xlabel 'attack iteration'\nset ylabel 'MSE strong'\nplot {}\n",
                plot_clauses(&dat_name, &names, 2, "")
            );
            (dat, gp)
        }
        CsvKind::Landscape => {
            let g = (t.rows as f64).sqrt().round() as usize;
            if g * g != t.rows {
                return Err(HarnessError::Csv {
                    path: path.to_path_buf(),
                    row: t.rows + 1,
                    column: "-".into(),
                    message: format!("{} rows do not form a square grid", t.rows),
                });
            }
            grid = Some(g);
            let mut dat = String::new();
            for i in 0..g {
                for j in 0..g {
                    let r = i * g + j;
                    let _ = writeln!(
                        dat,
                        "{:e} {:e} {:e}",
                        t.col("x0")[r],
                        t.col("x1")[r],
                        t.col("loss")[r]
                    );
                }
                dat.push('\n');
            }
            let gp = format!(
                "set view map\nset xlabel 'x0'\nset ylabel 'x1'\nset size square\nsplot '{dat_name}' using 1:2:3 with pm3d notitle\n"
            );
            (dat, gp)
        }
    };
    let svg = format!("{stem}.svg");
    let script = format!("set terminal svg size 800,600\nset output '{svg}'\n{script}");
    let data = out_dir.join(&dat_name);
    fs::write(&data, dat).map_err(|e| HarnessError::io(&data, e))?;
    let script_path = out_dir.join(format!("{stem}.gp"));
    fs::write(&script_path, script).map_err(|e| HarnessError::io(&script_path, e))?;
    Ok(PlotArtifact {
        data,
        script: script_path,
        log_y,
        grid,
    })
}

/// CSVs under `dir` that [`emit_plot_data`] understands, sorted by name.
pub fn discover(dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let mut out: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| HarnessError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv") && CsvKind::of(p).is_some())
        .collect();
    out.sort();
    Ok(out)
}

/// Writes one `.dat` + `.gp` pair per input CSV into `out_dir`. Every input
/// is parsed before anything is written.
pub fn emit_plot_data(
    inputs: &[PathBuf],
    out_dir: &Path,
) -> Result<Vec<PlotArtifact>, HarnessError> {
    if inputs.is_empty() {
        return Err(HarnessError::NothingToPlot(out_dir.to_path_buf()));
    }
    let kinds = inputs
        .iter()
        .map(|p| {
            let kind = CsvKind::of(p).ok_or_else(|| HarnessError::Csv {
                path: p.clone(),
                row: 0,
                column: "-".into(),
                message:
                    "unrecognised file name (expected loss, weak, strong or landscape_<variant>)"
                        .into(),
            })?;
            read_table(p, kind)?;
            Ok(kind)
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;
    fs::create_dir_all(out_dir).map_err(|e| HarnessError::io(out_dir, e))?;
    inputs
        .iter()
        .zip(kinds)
        .map(|(p, k)| emit_one(p, k, out_dir))
        .collect()
}
