use rayon::prelude::*;
use serde::Serialize;
use twostage::exact_circuit::{
    check_dual_unitarity, gate_for_family, light_cone_channel, magnon_convergence, reverse_transition_correlator,
    two_point_correlator, ChannelReport, DualUnitarityCheck, MagnonConvergence, Pauli, ReverseTransition, Side,
};
use twostage::propagator::{
    build_schedule, default_windows, fit_rate, partition_free_boundary, pinned_table, Boundary, EvolutionPath,
    Geometry, Pinning, RateEstimate,
};
use twostage::resummation::{
    generating_root, resummed_rate, solve_irreducible, ReducedSeries, ResummedRate, RootResult,
};
use twostage::theory::{
    averaged_channel, predict_rates, r_mag_analytic, r_mag_open, staircase_minimize, AveragedChannel,
    RatePrediction, StaircaseOptimum,
};
use twostage::GateFamily;

use crate::config::{Command, ExactMode, RunConfig};
use crate::output::{emit, num, opt, Table, Written};
use crate::CliError;

pub fn run(config: &RunConfig) -> Result<Written, CliError> {
    match config.command {
        Command::Simulate => simulate(config),
        Command::SweepAz => sweep_az(config),
        Command::Predict => predict(config),
        Command::Channel => channel(config),
        Command::Resum => resum(config),
        Command::Exact => exact(config),
    }
}

fn need_family(config: &RunConfig) -> Result<GateFamily, CliError> {
    config
        .family
        .ok_or_else(|| CliError::Config(format!("{} needs --family", config.command.name())))
}

fn need_l(config: &RunConfig) -> Result<usize, CliError> {
    config.l.ok_or_else(|| CliError::Config(format!("{} needs --L", config.command.name())))
}

fn trace_table(root: &RootResult) -> Table {
    let mut t = Table::new(vec!["order", "x0", "rate"]);
    for p in &root.trace {
        t.push(vec![p.order.to_string(), opt(p.x0), opt(p.rate)]);
    }
    t
}

#[derive(Serialize)]
struct SimulateResult {
    path: EvolutionPath,
    start_layer: usize,
    truncated: bool,
    normalization: f64,
    first_stage: RateEstimate,
    second_stage: RateEstimate,
    prediction: Option<RatePrediction>,
}

fn simulate(config: &RunConfig) -> Result<Written, CliError> {
    let family = need_family(config)?;
    if matches!(family, GateFamily::FixedFloquet { .. }) {
        return Err(CliError::Config("simulate runs averaged families; use `exact` for a fixed Floquet gate".into()));
    }
    let l = need_l(config)?;
    let schedule = build_schedule(config.geometry, config.boundary, l)?;
    let t_max = config.t_max.unwrap_or(3 * l as u32);
    let x0 = config.x0.unwrap_or(l / 2);
    let series = partition_free_boundary(x0, &schedule, &family, t_max, config.path)?;
    let (d1, d2) = default_windows(&schedule, &series.times);
    let first_stage = fit_rate(&series.times, &series.delta_z, config.window1.unwrap_or(d1))?;
    let second_stage = fit_rate(&series.times, &series.delta_z, config.window2.unwrap_or(d2))?;
    let prediction = predict_rates(&family, config.geometry, config.boundary).ok();
    let mut table = Table::new(vec!["t", "delta_z"]);
    for (t, z) in series.times.iter().zip(&series.delta_z) {
        table.push(vec![num(*t), num(*z)]);
    }
    let result = SimulateResult {
        path: series.path,
        start_layer: series.start_layer,
        truncated: series.truncated,
        normalization: series.normalization,
        first_stage,
        second_stage,
        prediction,
    };
    emit(config, Some(&table), &result, true)
}

#[derive(Serialize)]
struct SweepRow {
    az: f64,
    r_measured: Option<f64>,
    r_analytic_periodic: f64,
    r_analytic_open: f64,
    error: Option<String>,
}

fn sweep_az(config: &RunConfig) -> Result<Written, CliError> {
    let l = config.l.unwrap_or(16);
    let order = config.order.unwrap_or(l - 1);
    let schedule = build_schedule(Geometry::Brickwall, Boundary::Open, l)?;
    let (ax, ay) = match config.family {
        Some(GateFamily::XyzAveraged { ax, ay, .. }) => (ax, ay),
        None => (1.0, 1.0),
        Some(_) => return Err(CliError::Config("sweep-az scans the xyz family".into())),
    };
    let rows: Vec<SweepRow> = config
        .az_grid
        .par_iter()
        .map(|&az| {
            let measured = GateFamily::xyz(ax, ay, az)
                .and_then(|f| pinned_table(Pinning::Magnon, &schedule, &f, order as u32))
                .and_then(|t| resummed_rate(&t, config.reduction, order));
            let (r_measured, error) = match measured {
                Ok(r) => (Some(r.root.rate), None),
                Err(e) => (None, Some(e.to_string())),
            };
            SweepRow { az, r_measured, r_analytic_periodic: r_mag_analytic(az), r_analytic_open: r_mag_open(az), error }
        })
        .collect();
    let mut table = Table::new(vec!["a_z", "r_measured", "r_analytic", "boundary"]);
    for r in &rows {
        table.push(vec![num(r.az), opt(r.r_measured), num(r.r_analytic_open), "open".into()]);
        table.push(vec![num(r.az), opt(r.r_measured), num(r.r_analytic_periodic), "periodic".into()]);
    }
    emit(config, Some(&table), &rows, false)
}

#[derive(Serialize)]
struct PredictResult {
    prediction: RatePrediction,
    staircase_optimum: Option<StaircaseOptimum>,
    averaged_channel: Option<AveragedChannel>,
}

fn predict(config: &RunConfig) -> Result<Written, CliError> {
    let family = need_family(config)?;
    let prediction = predict_rates(&family, config.geometry, config.boundary)?;
    let staircase_optimum = match family {
        GateFamily::Haar { q } if config.geometry == Geometry::Staircase => Some(staircase_minimize(q)?),
        _ => None,
    };
    let averaged_channel = match family {
        GateFamily::XyzAveraged { az, .. } if family.is_dual_unitary() => Some(averaged_channel(az)?),
        _ => None,
    };
    emit(config, None, &PredictResult { prediction, staircase_optimum, averaged_channel }, false)
}

#[derive(Serialize)]
struct ChannelResult {
    dual_unitarity: DualUnitarityCheck,
    averaged: Option<AveragedChannel>,
    right: ChannelReport,
    left: ChannelReport,
}

fn channel(config: &RunConfig) -> Result<Written, CliError> {
    let family = need_family(config)?;
    let gate = gate_for_family(&family)?;
    let averaged = match family {
        GateFamily::FixedFloquet { az, .. } if family.is_dual_unitary() => Some(averaged_channel(az)?),
        _ => None,
    };
    let result = ChannelResult {
        dual_unitarity: check_dual_unitarity(&gate),
        averaged,
        right: light_cone_channel(&gate, Side::Right).report(),
        left: light_cone_channel(&gate, Side::Left).report(),
    };
    emit(config, None, &result, false)
}

#[derive(Serialize)]
struct ResumResult {
    resummed: ResummedRate,
    r_analytic: Option<f64>,
}

fn read_series(path: &std::path::Path) -> Result<Vec<f64>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .has_headers(false)
        .from_path(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut values = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| CliError::Config(e.to_string()))?;
        let cells: Vec<f64> = rec.iter().filter_map(|c| c.trim().parse().ok()).collect();
        match cells.as_slice() {
            [] => continue,
            [v] => values.push(*v),
            [_, rest @ ..] => values.push(rest.iter().sum()),
        }
    }
    Ok(values)
}

fn resum(config: &RunConfig) -> Result<Written, CliError> {
    let (resummed, r_analytic) = match &config.input {
        Some(path) => {
            let mut values = read_series(path)?;
            if let Some(order) = config.order {
                values.truncate(order + 1);
            }
            let mut series = ReducedSeries::from_values(values);
            series.method = config.reduction;
            let oscillating = series.oscillates();
            if oscillating {
                series.values.iter_mut().for_each(|v| *v = v.abs());
                series.method = config.reduction.absolute();
            }
            let root = generating_root(&solve_irreducible(&series)?)?;
            (ResummedRate { root, method: series.method, oscillating }, None)
        }
        None => {
            let family = need_family(config)?;
            let l = config.l.unwrap_or(16);
            let order = config.order.unwrap_or(l - 1);
            let schedule = build_schedule(Geometry::Brickwall, config.boundary, l)?;
            let table = pinned_table(Pinning::Magnon, &schedule, &family, order as u32)?;
            let analytic = match family {
                GateFamily::XyzAveraged { az, .. } if family.is_dual_unitary() => Some(r_mag_analytic(az)),
                _ => None,
            };
            (resummed_rate(&table, config.reduction, order)?, analytic)
        }
    };
    let table = trace_table(&resummed.root);
    emit(config, Some(&table), &ResumResult { resummed, r_analytic }, false)
}

#[derive(Serialize)]
struct MagnonResult<'a> {
    convergence: &'a MagnonConvergence,
    r_mag_averaged: Option<f64>,
}

#[derive(Serialize)]
struct ReverseResult<'a> {
    transition: &'a ReverseTransition,
    r_mag_analytic: f64,
    r_mag_fixed: f64,
}

#[derive(Serialize)]
struct CorrelatorResult {
    channel: ChannelReport,
    exact: bool,
}

fn exact(config: &RunConfig) -> Result<Written, CliError> {
    let family = need_family(config)?;
    let gate = gate_for_family(&family)?;
    let GateFamily::FixedFloquet { az, phi, .. } = family else { unreachable!() };
    let l = config.l.unwrap_or(12);
    let schedule = build_schedule(Geometry::Brickwall, config.boundary, l)?;
    match config.mode {
        ExactMode::Magnon => {
            let conv = magnon_convergence(&gate, &schedule, config.reduction)?;
            let r_mag_averaged = family.is_dual_unitary().then(|| r_mag_analytic(az));
            let table = trace_table(&conv.resummed.root);
            emit(config, Some(&table), &MagnonResult { convergence: &conv, r_mag_averaged }, false)
        }
        ExactMode::Reverse => {
            if !family.is_dual_unitary() {
                return Err(CliError::Config("reverse mode uses the dual-unitary Floquet gate (--ax 1 --ay 1)".into()));
            }
            let t_max = config.t_max.map(|t| t as usize).unwrap_or(l - 1);
            let rt = reverse_transition_correlator(az, phi, &schedule, t_max, config.states, config.seed)?;
            let mut table = Table::new(vec!["t", "c2"]);
            for (t, c) in rt.times.iter().zip(&rt.series) {
                table.push(vec![num(*t), num(*c)]);
            }
            let fixed = light_cone_channel(&gate, Side::Right).r_mag_fixed();
            emit(
                config,
                Some(&table),
                &ReverseResult { transition: &rt, r_mag_analytic: r_mag_analytic(az), r_mag_fixed: fixed },
                true,
            )
        }
        ExactMode::Correlator => {
            let t_max = config.t_max.unwrap_or(l as u32);
            let mut table = Table::new(vec!["t", "zz_right", "zz_left"]);
            for t in 0..=t_max {
                let x = t as i64;
                table.push(vec![
                    t.to_string(),
                    num(two_point_correlator(Pauli::Z, Pauli::Z, x, t, &gate)),
                    num(two_point_correlator(Pauli::Z, Pauli::Z, -x, t, &gate)),
                ]);
            }
            let channel = light_cone_channel(&gate, Side::Right);
            emit(config, Some(&table), &CorrelatorResult { exact: channel.exact, channel: channel.report() }, false)
        }
    }
}
