//! The four commands: forecast, sweep, compare, synth.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::Serialize;

use randcast_core::{
    ape_distribution, compute_metrics, diversity, gw_test, load_csv, load_exclusions,
    rolling_forecast, synth_series, DiversityReport, MetricsReport, RollingForecastResult,
    RollingOptions, TimeSeries,
};

use crate::config::{DataSource, RunConfig};
use crate::{manifest, CliError};

/// Create the run directory, refusing to reuse a non-empty one unless
/// forced.
pub fn ensure_out_dir(dir: &Path, force: bool) -> Result<(), CliError> {
    if dir.exists() {
        let occupied = std::fs::read_dir(dir)
            .map_err(|e| CliError::Data(format!("cannot inspect {}: {e}", dir.display())))?
            .next()
            .is_some();
        if occupied && !force {
            return Err(CliError::Config(format!(
                "output directory {} is not empty; pass --force to overwrite",
                dir.display()
            )));
        }
    }
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Data(format!("cannot create {}: {e}", dir.display())))?;
    Ok(())
}

fn load_series(config: &RunConfig) -> Result<TimeSeries, CliError> {
    let exclusions = match &config.exclusions_path {
        Some(path) => load_exclusions(path).map_err(CliError::from_core)?,
        None => Vec::new(),
    };
    let series = match &config.data {
        DataSource::Csv { path, schema } => {
            load_csv(path, schema, &exclusions).map_err(CliError::from_core)?
        }
        DataSource::Synth(spec) => {
            let series =
                synth_series(&spec.to_params(config.seed)).map_err(CliError::from_core)?;
            if exclusions.is_empty() {
                series
            } else {
                series.without_dates(&exclusions).map_err(CliError::from_core)?
            }
        }
    };
    Ok(series)
}

fn rolling_options(config: &RunConfig) -> RollingOptions {
    RollingOptions {
        horizon: config.horizon,
        pairing: config.weekday_pairing,
        collect_members: config.collect_member_forecasts,
    }
}

fn run_rolling(config: &RunConfig, series: &TimeSeries) -> Result<RollingForecastResult, CliError> {
    let model = config.model.to_model(config.seed)?;
    let result = rolling_forecast(
        series,
        config.test_start,
        config.test_end,
        &model,
        &rolling_options(config),
    )
    .map_err(CliError::from_core)?;
    if result.days.is_empty() {
        return Err(CliError::Data(format!(
            "no forecastable days between {} and {}",
            config.test_start, config.test_end
        )));
    }
    Ok(result)
}

fn write_forecast_csv(dir: &Path, result: &RollingForecastResult) -> Result<(), CliError> {
    let path = dir.join("forecast.csv");
    let mut out = std::fs::File::create(&path)
        .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))?;
    let emit = |out: &mut std::fs::File, line: String| {
        writeln!(out, "{line}").map_err(|e| CliError::Data(format!("write failed: {e}")))
    };
    emit(&mut out, "date,hour,actual,forecast".into())?;
    for day in &result.days {
        for (hour, (actual, forecast)) in day.actual.iter().zip(&day.forecast).enumerate() {
            emit(&mut out, format!("{},{hour},{actual},{forecast}", day.date))?;
        }
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct ApeQuantiles {
    q05: f64,
    q25: f64,
    q50: f64,
    q75: f64,
    q95: f64,
}

#[derive(Debug, Serialize)]
struct MetricsArtifact {
    metrics: MetricsReport,
    ape_quantiles: ApeQuantiles,
    diversity: Option<DiversityReport>,
    forecast_days: usize,
    skipped_days: usize,
}

fn evaluate(result: &RollingForecastResult) -> Result<MetricsArtifact, CliError> {
    let actuals = result.actual_matrix();
    let forecasts = result.forecast_matrix();
    let metrics = compute_metrics(&actuals, &forecasts).map_err(CliError::from_core)?;
    let apes = ape_distribution(&actuals, &forecasts).map_err(CliError::from_core)?;
    let diversity = match result.member_matrix() {
        Some(members) => Some(diversity(&members).map_err(CliError::from_core)?),
        None => None,
    };
    Ok(MetricsArtifact {
        metrics,
        ape_quantiles: ApeQuantiles {
            q05: apes.q05,
            q25: apes.q25,
            q50: apes.q50,
            q75: apes.q75,
            q95: apes.q95,
        },
        diversity,
        forecast_days: result.days.len(),
        skipped_days: result.skipped.len(),
    })
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Data(format!("cannot serialize {name}: {e}")))?;
    std::fs::write(dir.join(name), text)
        .map_err(|e| CliError::Data(format!("cannot write {name}: {e}")))
}

/// `forecast`: one rolling run; writes forecast.csv, metrics.json and
/// manifest.json.
pub fn cmd_forecast(config: &RunConfig, out_dir: &Path, force: bool) -> Result<(), CliError> {
    let series = load_series(config)?;
    let result = run_rolling(config, &series)?;
    ensure_out_dir(out_dir, force)?;
    write_forecast_csv(out_dir, &result)?;
    write_json(out_dir, "metrics.json", &evaluate(&result)?)?;
    let manifest = manifest::build("forecast", config, result.days.len(), result.skipped.clone())?;
    manifest::write(out_dir, &manifest)?;
    println!(
        "forecast: {} days written to {} ({} skipped)",
        result.days.len(),
        out_dir.display(),
        result.skipped.len()
    );
    Ok(())
}

/// `sweep`: rerun the rolling forecast over a grid of diversity
/// parameters (optionally crossed with hidden node counts) and tabulate
/// MAPE and diversity per cell.
pub fn cmd_sweep(config: &RunConfig, out_dir: &Path, force: bool) -> Result<(), CliError> {
    let sweep = config.sweep.as_ref().ok_or_else(|| {
        CliError::Config("sweep command needs a `sweep` section in the config".into())
    })?;
    if sweep.parameter_values.is_empty() {
        return Err(CliError::Config("sweep.parameter_values is empty".into()));
    }
    if config.model.kind == "naive" {
        return Err(CliError::Config(
            "sweep needs an ensemble model kind, not `naive`".into(),
        ));
    }
    let series = load_series(config)?;
    let m_values = sweep
        .hidden_nodes_values
        .clone()
        .unwrap_or_else(|| vec![config.model.hidden_nodes]);

    ensure_out_dir(out_dir, force)?;
    let path = out_dir.join("sweep.csv");
    let mut out = std::fs::File::create(&path)
        .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))?;
    writeln!(out, "strategy,parameter,hidden_nodes,members,mape,diversity,forecast_days")
        .map_err(|e| CliError::Data(format!("write failed: {e}")))?;

    let mut cells = 0usize;
    for &m in &m_values {
        for &value in &sweep.parameter_values {
            let mut cell = config.clone();
            cell.model.hidden_nodes = m;
            cell.model.parameter = Some(value);
            let result = run_rolling(&cell, &series)?;
            let artifact = evaluate(&result)?;
            let diversity_col = artifact
                .diversity
                .map(|d| d.value.to_string())
                .unwrap_or_default();
            writeln!(
                out,
                "{},{value},{m},{},{},{diversity_col},{}",
                config.model.kind, config.model.members, artifact.metrics.mape, result.days.len()
            )
            .map_err(|e| CliError::Data(format!("write failed: {e}")))?;
            cells += 1;
        }
    }
    let manifest = manifest::build("sweep", config, cells, Vec::new())?;
    manifest::write(out_dir, &manifest)?;
    println!("sweep: {cells} cells written to {}", out_dir.display());
    Ok(())
}

struct RunArtifacts {
    name: String,
    dates: Vec<NaiveDate>,
    actuals: Vec<Vec<f64>>,
    forecasts: Vec<Vec<f64>>,
}

fn read_forecast_csv(dir: &Path) -> Result<RunArtifacts, CliError> {
    let path = dir.join("forecast.csv");
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    let mut days: BTreeMap<NaiveDate, Vec<(usize, f64, f64)>> = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 {
            if line.trim() != "date,hour,actual,forecast" {
                return Err(CliError::Data(format!(
                    "{}: unexpected header `{line}`",
                    path.display()
                )));
            }
            continue;
        }
        let parse = |field: &str| -> Result<f64, CliError> {
            field.parse::<f64>().map_err(|_| {
                CliError::Data(format!("{}:{}: bad number `{field}`", path.display(), i + 1))
            })
        };
        let mut fields = line.split(',');
        let (date, hour, actual, forecast) = match (
            fields.next(),
            fields.next(),
            fields.next(),
            fields.next(),
        ) {
            (Some(d), Some(h), Some(a), Some(f)) => (d, h, a, f),
            _ => {
                return Err(CliError::Data(format!(
                    "{}:{}: expected 4 fields",
                    path.display(),
                    i + 1
                )))
            }
        };
        let date: NaiveDate = date.parse().map_err(|_| {
            CliError::Data(format!("{}:{}: bad date `{date}`", path.display(), i + 1))
        })?;
        let hour: usize = hour.parse().map_err(|_| {
            CliError::Data(format!("{}:{}: bad hour `{hour}`", path.display(), i + 1))
        })?;
        days.entry(date)
            .or_default()
            .push((hour, parse(actual)?, parse(forecast)?));
    }
    if days.is_empty() {
        return Err(CliError::Data(format!("{} holds no rows", path.display())));
    }
    let mut dates = Vec::new();
    let mut actuals = Vec::new();
    let mut forecasts = Vec::new();
    for (date, mut rows) in days {
        rows.sort_by_key(|(h, _, _)| *h);
        if rows.iter().enumerate().any(|(i, (h, _, _))| *h != i) {
            return Err(CliError::Data(format!(
                "{}: day {date} has missing or duplicate hours",
                path.display()
            )));
        }
        dates.push(date);
        actuals.push(rows.iter().map(|(_, a, _)| *a).collect());
        forecasts.push(rows.iter().map(|(_, _, f)| *f).collect());
    }
    let name = dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| dir.display().to_string());
    Ok(RunArtifacts {
        name,
        dates,
        actuals,
        forecasts,
    })
}

/// `compare`: pairwise one-sided conditional-predictive-ability p-values
/// and a combined metrics table over finished runs sharing one test
/// window.
///
/// In `gw_pvalues.csv` the cell at (row Y, column X) is the one-sided
/// p-value for "X forecasts better than Y"; values near zero favor the
/// column model.
pub fn cmd_compare(run_dirs: &[PathBuf], out_dir: &Path, force: bool) -> Result<(), CliError> {
    if run_dirs.len() < 2 {
        return Err(CliError::Config("compare needs at least two run directories".into()));
    }
    let runs: Vec<RunArtifacts> = run_dirs
        .iter()
        .map(|d| read_forecast_csv(d))
        .collect::<Result<_, _>>()?;
    for run in &runs[1..] {
        if run.dates != runs[0].dates {
            return Err(CliError::Data(format!(
                "window mismatch: run `{}` covers different days than `{}`",
                run.name, runs[0].name
            )));
        }
        if run.actuals[0].len() != runs[0].actuals[0].len() {
            return Err(CliError::Data(format!(
                "window mismatch: run `{}` has a different cycle length than `{}`",
                run.name, runs[0].name
            )));
        }
    }

    let losses: Vec<Vec<Vec<f64>>> = runs
        .iter()
        .map(|r| {
            r.actuals
                .iter()
                .zip(&r.forecasts)
                .map(|(a, f)| a.iter().zip(f).map(|(x, y)| (x - y).abs()).collect())
                .collect()
        })
        .collect();

    ensure_out_dir(out_dir, force)?;

    let mut gw_csv = String::from("model");
    for run in &runs {
        gw_csv.push(',');
        gw_csv.push_str(&run.name);
    }
    gw_csv.push('\n');
    for (y, row_run) in runs.iter().enumerate() {
        gw_csv.push_str(&row_run.name);
        for x in 0..runs.len() {
            let result = gw_test(&losses[y], &losses[x]).map_err(CliError::from_core)?;
            gw_csv.push_str(&format!(",{:.6}", result.p_value));
        }
        gw_csv.push('\n');
    }
    std::fs::write(out_dir.join("gw_pvalues.csv"), gw_csv)
        .map_err(|e| CliError::Data(format!("cannot write gw_pvalues.csv: {e}")))?;

    let reports: Vec<MetricsReport> = runs
        .iter()
        .map(|r| compute_metrics(&r.actuals, &r.forecasts).map_err(CliError::from_core))
        .collect::<Result<_, _>>()?;
    let mut table = String::from("metric");
    for run in &runs {
        table.push(',');
        table.push_str(&run.name);
    }
    table.push('\n');
    let rows: [(&str, fn(&MetricsReport) -> f64); 5] = [
        ("mape", |r| r.mape),
        ("median_ape", |r| r.median_ape),
        ("rmse", |r| r.rmse),
        ("mpe", |r| r.mpe),
        ("std_pe", |r| r.std_pe),
    ];
    for (label, get) in rows {
        table.push_str(label);
        for report in &reports {
            table.push_str(&format!(",{:.6}", get(report)));
        }
        table.push('\n');
    }
    std::fs::write(out_dir.join("metrics_table.csv"), table)
        .map_err(|e| CliError::Data(format!("cannot write metrics_table.csv: {e}")))?;

    println!(
        "compare: {} runs over {} days written to {}",
        runs.len(),
        runs[0].dates.len(),
        out_dir.display()
    );
    Ok(())
}

/// `synth`: generate the configured synthetic series and write it as an
/// hourly CSV loadable by `forecast`.
pub fn cmd_synth(config: &RunConfig, out_dir: &Path, force: bool) -> Result<(), CliError> {
    let DataSource::Synth(spec) = &config.data else {
        return Err(CliError::Config("synth command needs a `synth` data source".into()));
    };
    let params = spec.to_params(config.seed);
    if params.cycle_len != 24 {
        return Err(CliError::Config(format!(
            "hourly CSV export needs cycle_len 24, got {}",
            params.cycle_len
        )));
    }
    let series = synth_series(&params).map_err(CliError::from_core)?;
    ensure_out_dir(out_dir, force)?;
    let path = out_dir.join("synth.csv");
    let mut out = std::fs::File::create(&path)
        .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))?;
    writeln!(out, "timestamp,value").map_err(|e| CliError::Data(format!("write failed: {e}")))?;
    for cycle in series.split_cycles() {
        for (hour, value) in cycle.values.iter().enumerate() {
            writeln!(out, "{}T{hour:02}:00:00,{value}", cycle.start_date)
                .map_err(|e| CliError::Data(format!("write failed: {e}")))?;
        }
    }
    let manifest = manifest::build("synth", config, series.num_cycles(), Vec::new())?;
    manifest::write(out_dir, &manifest)?;
    println!(
        "synth: {} days written to {}",
        series.num_cycles(),
        out_dir.display()
    );
    Ok(())
}
