use std::path::{Path, PathBuf};

use pspec_core::gallery::{DiscretizedOperator, ModelKind, PhaseBox, SymbolModel};
use pspec_core::lab::{
    auto_delta, iid_perturbation_demo, probabilistic_weyl_experiment, ssv_tail_experiment, IidLaw, PerturbationKind, PerturbationSpec,
};
use pspec_core::pseudospectrum::{boundary_exponent_fit, contours, growth_rate_fit, scan};
use pspec_core::quasimode::{operator_for, residual_decay, BeamSign};
use pspec_core::symbol::{classical_spectrum_mask, kappa_fit, lambda_pm_mask, level_set, order_at, sublevel_box, volume_v_z, Order};
use pspec_core::{Rectangle, SigmaMinField};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use crate::config::*;
use crate::csv::{eigenvalue_csv, field_csv, grid_csv, read_field_csv, table_csv};
use crate::svg::{contours_svg, weyl_svg};
use crate::CliError;

struct Ctx<'a> {
    config: Option<&'a Path>,
    print_config: bool,
}

/// Merges flags over the config file, then fills defaults computed from the
/// merged values. Returns `None` after printing when `--print-config` is set.
fn resolve<T: Serialize + DeserializeOwned>(
    flags: &T,
    ctx: &Ctx,
    defaults: impl FnOnce(&T) -> Result<T, CliError>,
) -> Result<Option<(T, String)>, CliError> {
    let merged = merge(flags, ctx.config)?;
    let d = defaults(&merged)?;
    let resolved = with_defaults(merged, d)?;
    let json = serde_json::to_string(&resolved).map_err(|e| CliError::Usage(e.to_string()))?;
    if ctx.print_config {
        let pretty = serde_json::to_string_pretty(&resolved).map_err(|e| CliError::Usage(e.to_string()))?;
        println!("{pretty}");
        return Ok(None);
    }
    Ok(Some((resolved, json)))
}

fn emit(path: Option<&PathBuf>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Report fields at top level plus the resolved config.
fn report_json<R: Serialize>(report: &R, config: &str) -> Result<String, CliError> {
    let mut v = serde_json::to_value(report).map_err(|e| CliError::Numerical(e.to_string()))?;
    if let Value::Object(m) = &mut v {
        let cfg: Value = serde_json::from_str(config).map_err(|e| CliError::Usage(e.to_string()))?;
        m.insert("config".into(), cfg);
        m.insert("pspec_version".into(), Value::String(env!("CARGO_PKG_VERSION").into()));
    }
    serde_json::to_string_pretty(&v).map(|s| s + "\n").map_err(|e| CliError::Numerical(e.to_string()))
}

fn get<T: Clone>(v: &Option<T>, field: &'static str) -> Result<T, CliError> {
    v.clone().ok_or_else(|| CliError::Usage(format!("`{field}` is required")))
}

fn default_n(model: ModelKind) -> usize {
    match model {
        ModelKind::Jordan => 20,
        ModelKind::Ho | ModelKind::Davies => 100,
        ModelKind::Hager => 101,
    }
}

fn default_grid(model: ModelKind) -> &'static str {
    match model {
        ModelKind::Jordan => "-1,1,-1,1,101,101",
        ModelKind::Ho => "0,4,-1,1,81,41",
        ModelKind::Davies => "-0.5,5,-0.5,5,111,111",
        ModelKind::Hager => "-2,2,-2,2,81,81",
    }
}

fn symbol_of(model: ModelKind) -> Result<SymbolModel, CliError> {
    model.symbol().ok_or_else(|| CliError::Usage(format!("`model`: {} has no principal symbol", model.name())))
}

fn model_or(v: &Option<String>, fallback: ModelKind) -> Result<ModelKind, CliError> {
    v.as_deref().map(parse_model).transpose().map(|m| m.unwrap_or(fallback))
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let ctx = Ctx { config: cli.config.as_deref(), print_config: cli.print_config };
    match &cli.command {
        Command::Scan(a) => run_scan(a, &ctx),
        Command::Contours(a) => run_contours(a, &ctx),
        Command::Symbol(SymbolCommand::Sigma(a)) => run_symbol_grid(a, &ctx, false),
        Command::Symbol(SymbolCommand::Lambda(a)) => run_symbol_grid(a, &ctx, true),
        Command::Symbol(SymbolCommand::Order(a)) => run_order(a, &ctx),
        Command::Symbol(SymbolCommand::Volume(a)) => run_volume(a, &ctx, false),
        Command::Symbol(SymbolCommand::Kappa(a)) => run_volume(a, &ctx, true),
        Command::Quasimode(a) => run_quasimode(a, &ctx),
        Command::Lab(LabCommand::Weyl(a)) => run_weyl(a, &ctx),
        Command::Lab(LabCommand::Ssv(a)) => run_ssv(a, &ctx),
        Command::Fit(FitCommand::Boundary(a)) => run_boundary(a, &ctx),
    }
}

fn run_scan(flags: &ScanArgs, ctx: &Ctx) -> Result<(), CliError> {
    let Some((a, json)) = resolve(flags, ctx, |m| {
        let model = model_or(&m.model, ModelKind::Jordan)?;
        let n = m.n.unwrap_or(default_n(model));
        Ok(ScanArgs {
            model: Some(model.name().into()),
            h: Some(default_h(model, n)),
            n: Some(n),
            grid: Some(default_grid(model).into()),
            out: None,
            workers: Some(workers_default(None)?),
        })
    })?
    else {
        return Ok(());
    };
    let op = DiscretizedOperator::build(parse_model(&get(&a.model, "model")?)?, get(&a.h, "h")?, get(&a.n, "N")?)?;
    let grid = parse_grid(&get(&a.grid, "grid")?)?;
    let field = scan(&op, &grid, get(&a.workers, "workers")?)?;
    emit(a.out.as_ref(), &field_csv(&field, &json))
}

fn run_contours(flags: &ContoursArgs, ctx: &Ctx) -> Result<(), CliError> {
    let Some((a, json)) = resolve(flags, ctx, |m| {
        let levels = Some("1e-1,1e-2,1e-4".to_string());
        if m.field.is_some() {
            return Ok(ContoursArgs { levels, ..Default::default() });
        }
        let model = model_or(&m.model, ModelKind::Jordan)?;
        let n = m.n.unwrap_or(default_n(model));
        Ok(ContoursArgs {
            model: Some(model.name().into()),
            h: Some(default_h(model, n)),
            n: Some(n),
            grid: Some(default_grid(model).into()),
            levels,
            workers: Some(workers_default(None)?),
            ..Default::default()
        })
    })?
    else {
        return Ok(());
    };
    let mut levels = parse_list("levels", &get(&a.levels, "levels")?)?;
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let field: SigmaMinField = match &a.field {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
            read_field_csv(&text)?
        }
        None => {
            let op = DiscretizedOperator::build(parse_model(&get(&a.model, "model")?)?, get(&a.h, "h")?, get(&a.n, "N")?)?;
            scan(&op, &parse_grid(&get(&a.grid, "grid")?)?, get(&a.workers, "workers")?)?
        }
    };
    let set = contours(&field, &levels)?;
    let fp = &field.fingerprint;
    let title = format!("σ_min(P − z) isolines, {} h={} N={}", fp.model, fp.h, fp.n);
    let svg = contours_svg(&set, &field.grid, &title, &json);
    if let Some(out) = &a.out {
        emit(Some(out), &report_json(&set, &json)?)?;
    }
    if a.svg.is_some() || a.out.is_none() {
        emit(a.svg.as_ref(), &svg)?;
    }
    Ok(())
}

fn run_symbol_grid(flags: &SymbolGridArgs, ctx: &Ctx, lambda: bool) -> Result<(), CliError> {
    let Some((a, json)) = resolve(flags, ctx, |m| {
        let model = model_or(&m.model, ModelKind::Davies)?;
        Ok(SymbolGridArgs { model: Some(model.name().into()), grid: Some(default_grid(model).into()), resolution: Some(401), out: None })
    })?
    else {
        return Ok(());
    };
    let model = symbol_of(parse_model(&get(&a.model, "model")?)?)?;
    let grid = parse_grid(&get(&a.grid, "grid")?)?;
    let corner = grid.node(0, 0).norm().max(grid.node(grid.nx - 1, grid.ny - 1).norm());
    let window = Rectangle::new(grid.re_min, grid.re_max, grid.im_min, grid.im_max)?;
    let phase_box = PhaseBox::for_modulus(model, corner.max(window.max_modulus()) + grid.pitch());
    let res = get(&a.resolution, "resolution")?;
    let (column, values): (&str, Vec<String>) = if lambda {
        let mask = lambda_pm_mask(model, &grid, &phase_box, res);
        let class = |c: &pspec_core::symbol::LambdaClass| match (c.plus, c.minus) {
            (true, true) => "both",
            (true, false) => "plus",
            (false, true) => "minus",
            (false, false) => "none",
        };
        ("class", mask.iter().map(|c| class(c).to_string()).collect())
    } else {
        let mask = classical_spectrum_mask(model, &grid, &phase_box, res);
        ("value", mask.iter().map(|b| u8::from(*b).to_string()).collect())
    };
    emit(a.out.as_ref(), &grid_csv(&grid, column, &values, &json))
}

fn run_order(flags: &OrderArgs, ctx: &Ctx) -> Result<(), CliError> {
    let Some((a, json)) = resolve(flags, ctx, |m| {
        let model = model_or(&m.model, ModelKind::Davies)?;
        Ok(OrderArgs { model: Some(model.name().into()), z: Some("1+1i".into()), cap: Some(3), resolution: Some(401), out: None })
    })?
    else {
        return Ok(());
    };
    let model = symbol_of(parse_model(&get(&a.model, "model")?)?)?;
    let z = parse_complex("z", &get(&a.z, "z")?)?;
    let cap = get(&a.cap, "cap")?;
    let sample = level_set(model, z, &PhaseBox::for_modulus(model, z.norm() + 0.5), get(&a.resolution, "resolution")?)?;
    let order = match order_at(model, z, &sample, cap)? {
        Order::Exactly(k) => k.to_string(),
        Order::GeCap => format!(">={cap}"),
    };
    emit(a.out.as_ref(), &table_csv("z_re,z_im,order", &[format!("{:?},{:?},{order}", z.re, z.im)], &json))
}

fn run_volume(flags: &VolumeArgs, ctx: &Ctx, kappa: bool) -> Result<(), CliError> {
    let Some((a, json)) = resolve(flags, ctx, |m| {
        let model = model_or(&m.model, ModelKind::Davies)?;
        Ok(VolumeArgs { model: Some(model.name().into()), z: Some("1+1i".into()), t: Some("1e-3:1e-2:5".into()), resolution: Some(2001), out: None })
    })?
    else {
        return Ok(());
    };
    let model = symbol_of(parse_model(&get(&a.model, "model")?)?)?;
    let z = parse_complex("z", &get(&a.z, "z")?)?;
    let t = parse_t_grid("t", &get(&a.t, "t")?)?;
    let t_max = t.iter().copied().fold(0.0, f64::max);
    let phase_box = sublevel_box(model, z, t_max);
    let res = get(&a.resolution, "resolution")?;
    let text = if kappa {
        let k = kappa_fit(model, z, &t, &phase_box, res)?;
        table_csv("z_re,z_im,kappa", &[format!("{:?},{:?},{k:?}", z.re, z.im)], &json)
    } else {
        let rows = t
            .iter()
            .map(|&ti| volume_v_z(model, z, ti, &phase_box, res).map(|v| format!("{:?},{:?},{ti:?},{v:?}", z.re, z.im)))
            .collect::<Result<Vec<_>, _>>()?;
        table_csv("z_re,z_im,t,volume", &rows, &json)
    };
    emit(a.out.as_ref(), &text)
}

fn run_quasimode(flags: &QuasimodeArgs, ctx: &Ctx) -> Result<(), CliError> {
    let Some((a, json)) = resolve(flags, ctx, |m| {
        let model = model_or(&m.model, ModelKind::Davies)?;
        Ok(QuasimodeArgs {
            model: Some(model.name().into()),
            z: Some("1+1i".into()),
            hlist: Some("0.04,0.02,0.01,0.005".into()),
            sign: Some("plus".into()),
            out: None,
        })
    })?
    else {
        return Ok(());
    };
    let model = symbol_of(parse_model(&get(&a.model, "model")?)?)?;
    let z = parse_complex("z", &get(&a.z, "z")?)?;
    let hlist = parse_list("hlist", &get(&a.hlist, "hlist")?)?;
    let sign: BeamSign = get(&a.sign, "sign")?.parse()?;
    let report = residual_decay(model, z, &hlist, sign)?;
    emit(a.out.as_ref(), &report_json(&report, &json)?)
}

fn perturbation_spec(kind: &str, h: f64, delta: f64, force: bool) -> Result<PerturbationSpec, CliError> {
    Ok(match kind {
        "matrix" | "gaussian" => PerturbationSpec::gaussian(delta),
        "potential" => PerturbationSpec::potential_for(h, delta, force),
        law => PerturbationSpec { kind: PerturbationKind::IidMatrix { law: law.parse()? }, delta },
    })
}

fn run_weyl(flags: &WeylArgs, ctx: &Ctx) -> Result<(), CliError> {
    let Some((a, json)) = resolve(flags, ctx, |m| {
        let model = model_or(&m.model, ModelKind::Hager)?;
        let n = m.n.unwrap_or(601);
        Ok(WeylArgs {
            model: Some(model.name().into()),
            h: Some(default_h(model, n)),
            n: Some(n),
            delta: Some("auto".into()),
            gamma: Some("-0.5,0.5,-0.5,0.5".into()),
            draws: Some(20),
            seed: Some(7),
            perturbation: Some("matrix".into()),
            force_potential: Some(false),
            workers: Some(workers_default(None)?),
            ..Default::default()
        })
    })?
    else {
        return Ok(());
    };
    let n = get(&a.n, "N")?;
    let h = get(&a.h, "h")?;
    let op = DiscretizedOperator::build(parse_model(&get(&a.model, "model")?)?, h, n)?;
    let delta = match get(&a.delta, "delta")?.as_str() {
        "auto" => auto_delta(n),
        s => s.parse::<f64>().map_err(|_| CliError::Usage(format!("`delta`: expected `auto` or a number, got `{s}`")))?,
    };
    let spec = perturbation_spec(&get(&a.perturbation, "perturbation")?, h, delta, get(&a.force_potential, "force_potential")?)?;
    let gamma = parse_rectangle("gamma", &get(&a.gamma, "gamma")?)?;
    let seed = get(&a.seed, "seed")?;
    let report = probabilistic_weyl_experiment(&op, &gamma, &spec, get(&a.draws, "draws")?, seed, get(&a.workers, "workers")?)?;
    if let Some(path) = &a.eigs {
        emit(Some(path), &eigenvalue_csv(&report.eigenvalues, seed, &json))?;
    }
    if let Some(path) = &a.svg {
        emit(Some(path), &weyl_svg(&report, &json))?;
    }
    emit(a.out.as_ref(), &report_json(&report, &json)?)
}

fn run_ssv(flags: &SsvArgs, ctx: &Ctx) -> Result<(), CliError> {
    let Some((a, json)) = resolve(flags, ctx, |m| {
        let model = model_or(&m.model, ModelKind::Hager)?;
        let n = m.n.unwrap_or(51);
        Ok(SsvArgs {
            model: Some(model.name().into()),
            h: Some(default_h(model, n)),
            n: Some(n),
            delta: Some(1e-3),
            t: Some("1e-3:1:25".into()),
            draws: Some(20_000),
            seed: Some(11),
            law: Some("gaussian".into()),
            out: None,
            workers: Some(workers_default(None)?),
        })
    })?
    else {
        return Ok(());
    };
    let op = DiscretizedOperator::build(parse_model(&get(&a.model, "model")?)?, get(&a.h, "h")?, get(&a.n, "N")?)?;
    let t = parse_t_grid("t", &get(&a.t, "t")?)?;
    let law: IidLaw = get(&a.law, "law")?.parse()?;
    let (delta, draws, seed, workers) = (get(&a.delta, "delta")?, get(&a.draws, "draws")?, get(&a.seed, "seed")?, get(&a.workers, "workers")?);
    let text = if law == IidLaw::Gaussian {
        report_json(&ssv_tail_experiment(&op.matrix, delta, &t, draws, seed, workers)?, &json)?
    } else {
        report_json(&iid_perturbation_demo(&op.matrix, law, delta, &t, draws, seed, workers)?, &json)?
    };
    emit(a.out.as_ref(), &text)
}

fn run_boundary(flags: &BoundaryArgs, ctx: &Ctx) -> Result<(), CliError> {
    let Some((a, json)) = resolve(flags, ctx, |m| {
        let model = model_or(&m.model, ModelKind::Davies)?;
        Ok(BoundaryArgs {
            model: Some(model.name().into()),
            z: Some("1".into()),
            hlist: Some("0.02,0.01,0.005,0.0025".into()),
            n_scale: Some(1),
            law: Some("power".into()),
            out: None,
        })
    })?
    else {
        return Ok(());
    };
    let model = symbol_of(parse_model(&get(&a.model, "model")?)?)?;
    let z = parse_complex("z", &get(&a.z, "z")?)?;
    let hlist = parse_list("hlist", &get(&a.hlist, "hlist")?)?;
    let scale = get(&a.n_scale, "n_scale")?;
    if scale == 0 {
        return Err(CliError::Usage("`n_scale` must be at least 1".into()));
    }
    let family = move |h: f64| -> pspec_core::Result<DiscretizedOperator> {
        let base = operator_for(model, h, z)?;
        if scale == 1 {
            return Ok(base);
        }
        let n = match model {
            SymbolModel::Hager => (base.dim() - 1) * scale + 1,
            _ => base.dim() * scale,
        };
        DiscretizedOperator::build(base.model, h, n)
    };
    let fit = match get(&a.law, "law")?.as_str() {
        "power" => boundary_exponent_fit(&family, z, &hlist)?,
        "exponential" => growth_rate_fit(&family, z, &hlist)?,
        other => return Err(CliError::Usage(format!("`law`: expected power or exponential, got `{other}`"))),
    };
    emit(a.out.as_ref(), &report_json(&fit, &json)?)
}
