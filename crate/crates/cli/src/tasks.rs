use std::path::Path;

use rayon::prelude::*;
use serde_json::{json, Value};

use cqed::blockade::{certify_distribution, relative_deviation};
use cqed::correlations::{poisson_reference, SteadyStateModel};
use cqed::fitting::{fit_longtime, fit_spectrum, SpectrumFitMask};
use cqed::semiclassical::composite_spectrum;
use cqed::units::{mhz, to_mhz};
use cqed::{CorrelationSeries, LongTimeFit, SpectrumSeries};

use crate::config::{
    FitParameter, Grid, LongTimeGuess, Quantity, RunConfig, SpectrumMethod, SweepAxis, SystemConfig, Task, Window,
};
use crate::error::CliError;
use crate::output::{Cell, Output};

/// Runs the configured task. Relative input paths resolve against `base_dir`.
pub fn execute(config: &RunConfig, base_dir: &Path) -> Result<Output, CliError> {
    let system = &config.system;
    match &config.task {
        Task::Spectrum { detunings_mhz, method, temperature_scale_mhz, a_ec } => {
            spectrum(system, detunings_mhz, *method, *temperature_scale_mhz, *a_ec)
        }
        Task::G2 { taus_ns } => {
            let model = SteadyStateModel::solve(&system.params()?)?;
            let series = model.g2(&seconds(taus_ns)?)?;
            Ok(series_output("g2", "g2", &series))
        }
        Task::G3map { tau1_ns, tau2_ns } => {
            let model = SteadyStateModel::solve(&system.params()?)?;
            let (t1, t2) = (tau1_ns.values()?, tau2_ns.values()?);
            let map = model.g3_map(&scale(&t1, 1e-9), &scale(&t2, 1e-9))?;
            let mut out = Output::new("g3map", &["tau1_ns", "tau2_ns", "g3"]);
            for (i, row) in map.iter().enumerate() {
                for (j, v) in row.iter().enumerate() {
                    out.push(vec![t1[i].into(), t2[j].into(), (*v).into()]);
                }
            }
            Ok(out)
        }
        Task::G3diag { taus_ns } => {
            let model = SteadyStateModel::solve(&system.params()?)?;
            Ok(series_output("g3diag", "g3", &model.g3_diag(&seconds(taus_ns)?)?))
        }
        Task::G3zero { taus_ns } => {
            let model = SteadyStateModel::solve(&system.params()?)?;
            Ok(series_output("g3zero", "g3", &model.g3_zero_tau(&seconds(taus_ns)?)?))
        }
        Task::Distribution => distribution(system),
        Task::Certify { n } => certify(system, *n),
        Task::FitSpectrum { input, temperature_scale_mhz, a_ec, scale, fixed } => {
            let (x, y) = read_series(&base_dir.join(input))?;
            let data = SpectrumSeries { detunings: x.iter().map(|d| mhz(*d)).collect(), values: y };
            fit_spectrum_task(system, &data, *temperature_scale_mhz, *a_ec, *scale, fixed)
        }
        Task::FitLongtime { input, initial, window_ns } => {
            let (x, y) = read_series(&base_dir.join(input))?;
            fit_longtime_task(&x, &y, initial, *window_ns)
        }
        Task::Sweep { axes, quantities } => sweep(system, axes, quantities),
    }
}

fn scale(values: &[f64], factor: f64) -> Vec<f64> {
    values.iter().map(|v| v * factor).collect()
}

fn seconds(grid: &Grid) -> Result<Vec<f64>, CliError> {
    Ok(scale(&grid.values()?, 1e-9))
}

fn series_output(task: &str, column: &str, series: &CorrelationSeries) -> Output {
    let mut out = Output::new(task, &["tau_ns", column]);
    for (t, v) in series.taus.iter().zip(&series.values) {
        out.push(vec![(t * 1e9).into(), (*v).into()]);
    }
    out
}

fn spectrum(
    system: &SystemConfig,
    detunings_mhz: &Grid,
    method: SpectrumMethod,
    temperature_scale_mhz: f64,
    a_ec: f64,
) -> Result<Output, CliError> {
    let grid = detunings_mhz.values()?;
    let values = match method {
        SpectrumMethod::Semiclassical => {
            let model = system.spectrum_model(temperature_scale_mhz, a_ec)?;
            let detunings: Vec<f64> = grid.iter().map(|d| mhz(*d)).collect();
            composite_spectrum(&model, &detunings)?.values
        }
        SpectrumMethod::Quantum => {
            if temperature_scale_mhz != 0.0 || a_ec != 0.0 {
                return Err(CliError::config("the quantum spectrum has no thermal or remnant terms"));
            }
            grid.par_iter()
                .map(|d| {
                    let p = SystemConfig { delta_c_mhz: *d, ..system.clone() }.params()?;
                    Ok(SteadyStateModel::solve(&p)?.mean_photons())
                })
                .collect::<Result<Vec<f64>, CliError>>()?
        }
    };
    let mut out = Output::new("spectrum", &["delta_c_mhz", "mean_photons"]);
    for (d, v) in grid.iter().zip(values) {
        out.push(vec![(*d).into(), v.into()]);
    }
    Ok(out)
}

fn distribution(system: &SystemConfig) -> Result<Output, CliError> {
    let model = SteadyStateModel::solve(&system.params()?)?;
    let dist = model.photon_distribution();
    let poisson = poisson_reference(dist.mean, dist.probs.len() - 1)?;
    let deviation = relative_deviation(&dist, dist.mean).unwrap_or_default();
    let mut out = Output::new("distribution", &["n", "probability", "poisson", "relative_deviation"]);
    for (n, p) in dist.probs.iter().enumerate() {
        let dev = deviation.get(n).copied().unwrap_or(f64::NAN);
        out.push(vec![n.into(), (*p).into(), poisson.probs[n].into(), dev.into()]);
    }
    out.extra("mean", json!(dist.mean));
    Ok(out)
}

fn certify(system: &SystemConfig, n: usize) -> Result<Output, CliError> {
    let model = SteadyStateModel::solve(&system.params()?)?;
    let report = certify_distribution(&model.photon_distribution(), n)?;
    let mut out = Output::new(
        "certify",
        &["n", "mean", "g_n", "g_np1", "strict_pass", "inequality_pass", "upper_margin", "lower_margin"],
    );
    out.push(vec![
        report.n.into(),
        report.mean.into(),
        report.g_n.into(),
        report.g_np1.into(),
        report.strict_pass.into(),
        report.inequality_pass.into(),
        report.upper_margin.into(),
        report.lower_margin.into(),
    ]);
    out.extra("report", serde_json::to_value(&report).expect("serializable"));
    Ok(out)
}

fn fit_spectrum_task(
    system: &SystemConfig,
    data: &SpectrumSeries,
    temperature_scale_mhz: f64,
    a_ec: f64,
    scale: f64,
    fixed: &[FitParameter],
) -> Result<Output, CliError> {
    let initial = system.spectrum_model(temperature_scale_mhz, a_ec)?;
    let mut mask = SpectrumFitMask::all();
    for p in fixed {
        match p {
            FitParameter::G => mask.g = false,
            FitParameter::DeltaAc => mask.delta_ac = false,
            FitParameter::Eta => mask.eta = false,
            FitParameter::TemperatureScale => mask.temperature_scale = false,
            FitParameter::AEc => mask.a_ec = false,
        }
    }
    let fit = fit_spectrum(data, initial.drive, &initial, scale, mask)?;
    let mut out = Output::new("fit-spectrum", &["parameter", "value", "standard_error"]);
    let names = ["g_mhz", "delta_ac_mhz", "eta_mhz", "temperature_scale_mhz", "a_ec"];
    for (j, name) in names.iter().enumerate() {
        let (v, e) = (fit.parameters[j], fit.standard_errors[j]);
        let (v, e) = if j < 4 { (to_mhz(v), to_mhz(e)) } else { (v, e) };
        out.push(vec![(*name).into(), v.into(), e.into()]);
    }
    fit_diagnostics(&mut out, &fit);
    Ok(out)
}

fn fit_diagnostics(out: &mut Output, fit: &cqed::FitResult) {
    out.extra("converged", json!(fit.converged));
    out.extra("iterations", json!(fit.iterations));
    out.extra("residual_norm", json!(fit.residual_norm));
    out.extra("gradient_norm", json!(fit.gradient_norm));
}

fn fit_longtime_task(
    taus_ns: &[f64],
    values: &[f64],
    guess: &LongTimeGuess,
    window: Option<Window>,
) -> Result<Output, CliError> {
    let (taus, values): (Vec<f64>, Vec<f64>) = taus_ns
        .iter()
        .zip(values)
        .filter(|(t, _)| window.is_none_or(|w| **t >= w.start && **t <= w.stop))
        .map(|(t, v)| (t * 1e-9, *v))
        .unzip();
    let data = CorrelationSeries { taus, values, order: 2 };
    let initial = LongTimeFit {
        a_c: guess.a_c,
        tau_c: guess.tau_c_ns * 1e-9,
        f_c: guess.f_c_mhz * 1e6,
        a_i: guess.a_i,
        tau_i: guess.tau_i_ns * 1e-9,
        c: guess.c,
    };
    let (p, fit) = fit_longtime(&data, &initial)?;
    let e = &fit.standard_errors;
    let rows = [
        ("a_c", p.a_c, e[0]),
        ("tau_c_ns", p.tau_c * 1e9, e[1] * 1e9),
        ("f_c_mhz", p.f_c * 1e-6, e[2] * 1e-6),
        ("a_i", p.a_i, e[3]),
        ("tau_i_ns", p.tau_i * 1e9, e[4] * 1e9),
        ("c", p.c, e[5]),
    ];
    let mut out = Output::new("fit-longtime", &["parameter", "value", "standard_error"]);
    for (name, v, err) in rows {
        out.push(vec![name.into(), v.into(), err.into()]);
    }
    fit_diagnostics(&mut out, &fit);
    Ok(out)
}

/// Cartesian product of the axes, first axis slowest.
fn expand(axes: &[SweepAxis]) -> Result<Vec<Vec<f64>>, CliError> {
    let mut points = vec![Vec::new()];
    for axis in axes {
        let values = axis.values.values()?;
        points = points
            .into_iter()
            .flat_map(|p| {
                values.iter().map(move |v| {
                    let mut q = p.clone();
                    q.push(*v);
                    q
                })
            })
            .collect();
    }
    Ok(points)
}

/// Evaluates each quantity at one sweep point; failures are per quantity.
fn sweep_point(system: &SystemConfig, quantities: &[Quantity]) -> Vec<Result<f64, CliError>> {
    let needs_quantum = quantities.iter().any(|q| *q != Quantity::SemiclassicalMeanPhotons);
    let model = if needs_quantum {
        system.params().and_then(|p| SteadyStateModel::solve(&p).map_err(CliError::from))
    } else {
        Err(CliError::numerical("not solved"))
    };
    quantities
        .iter()
        .map(|q| match q {
            Quantity::SemiclassicalMeanPhotons => Ok(system.spectrum_model(0.0, 0.0)?.bare(mhz(system.delta_c_mhz))),
            Quantity::MeanPhotons => Ok(model.as_ref().map_err(Clone::clone)?.mean_photons()),
            Quantity::G2Zero => Ok(model.as_ref().map_err(Clone::clone)?.gk_zero(2)?),
            Quantity::G3Zero => Ok(model.as_ref().map_err(Clone::clone)?.gk_zero(3)?),
        })
        .collect()
}

fn sweep(system: &SystemConfig, axes: &[SweepAxis], quantities: &[Quantity]) -> Result<Output, CliError> {
    let points = expand(axes)?;
    let results: Vec<Vec<Result<f64, CliError>>> = points
        .par_iter()
        .map(|point| {
            let mut local = system.clone();
            for (axis, v) in axes.iter().zip(point) {
                local = local.with(axis.parameter, *v);
            }
            sweep_point(&local, quantities)
        })
        .collect();

    let mut columns: Vec<&str> = axes.iter().map(|a| a.parameter.name()).collect();
    columns.extend(quantities.iter().map(|q| q.name()));
    columns.push("error");
    let mut out = Output::new("sweep", &columns);
    let mut failures = 0;
    for (point, values) in points.iter().zip(results) {
        let mut row: Vec<Cell> = point.iter().map(|v| Cell::from(*v)).collect();
        let mut errors = Vec::new();
        for (q, value) in quantities.iter().zip(values) {
            match value {
                Ok(v) => row.push(v.into()),
                Err(e) => {
                    row.push(f64::NAN.into());
                    errors.push(format!("{}: {}", q.name(), e.message));
                }
            }
        }
        if !errors.is_empty() {
            failures += 1;
        }
        row.push(errors.join("; ").into());
        out.push(row);
    }
    out.extra("failed_points", json!(failures));
    Ok(out)
}

/// Reads two numeric columns from a CSV (optional `#` comments and header)
/// or from the JSON output of a table-producing task.
pub fn read_series(path: &Path) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read input {}: {e}", path.display())))?;
    if text.trim_start().starts_with('{') {
        let v: Value = serde_json::from_str(&text)
            .map_err(|e| CliError::config(format!("invalid JSON input {}: {e}", path.display())))?;
        let rows = v["rows"].as_array().ok_or_else(|| CliError::config("JSON input has no rows"))?;
        let mut x = Vec::with_capacity(rows.len());
        let mut y = Vec::with_capacity(rows.len());
        for row in rows {
            let pair = (row.get(0).and_then(json_number), row.get(1).and_then(json_number));
            match pair {
                (Some(a), Some(b)) => {
                    x.push(a);
                    y.push(b);
                }
                _ => return Err(CliError::config("JSON input rows need two numeric leading columns")),
            }
        }
        return Ok((x, y));
    }
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split(',').map(str::trim);
        let (a, b) = (fields.next().unwrap_or(""), fields.next().unwrap_or(""));
        match (a.parse::<f64>(), b.parse::<f64>()) {
            (Ok(a), Ok(b)) => {
                x.push(a);
                y.push(b);
            }
            // the first non-numeric line is the header
            _ if x.is_empty() => continue,
            _ => return Err(CliError::config(format!("{}:{}: expected two numbers", path.display(), lineno + 1))),
        }
    }
    Ok((x, y))
}

fn json_number(v: &Value) -> Option<f64> {
    match v {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => s.parse().ok(),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SweepParameter;

    #[test]
    fn cartesian_order() {
        let axes = vec![
            SweepAxis { parameter: SweepParameter::EtaMhz, values: Grid::List(vec![1.0, 2.0]) },
            SweepAxis { parameter: SweepParameter::DeltaCMhz, values: Grid::List(vec![10.0, 20.0, 30.0]) },
        ];
        let points = expand(&axes).unwrap();
        assert_eq!(points.len(), 6);
        assert_eq!(points[0], vec![1.0, 10.0]);
        assert_eq!(points[1], vec![1.0, 20.0]);
        assert_eq!(points[5], vec![2.0, 30.0]);
    }

    #[test]
    fn reads_csv_with_header_and_comments() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        std::fs::write(&path, "# comment\nx,y\n1,2\n3.5,4e-3\n").unwrap();
        assert_eq!(read_series(&path).unwrap(), (vec![1.0, 3.5], vec![2.0, 4e-3]));
        std::fs::write(&path, "x,y\n1,2\nbad,row\n").unwrap();
        assert!(read_series(&path).is_err());
    }
}
