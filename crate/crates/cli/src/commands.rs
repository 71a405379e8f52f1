use std::f64::consts::PI;

use anyhow::Result;
use num_complex::Complex64;
use serde::Serialize;

use transverse_core::colloc::{self, CriterionOptions};
use transverse_core::evans::{self, EvansParams};
use transverse_core::simulate::{self, Dynamics, Grid2d, Perturbation, SimConfig};
use transverse_core::specfind::{self, Rect, TraceOptions};
use transverse_core::spectral::Grid1d;
use transverse_core::verify::{self, SuiteOptions};
use transverse_core::{ModelName, ModelSpec};

use crate::config::{ConfigFile, Settings};
use crate::output::Outputs;
use crate::{Cli, Command, EvansArgs, InvalidInput, ModelArgs, PropertyFailure, RectArgs};

pub fn name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Models { .. } => "models",
        Command::Profile { .. } => "profile",
        Command::Evans { .. } => "evans",
        Command::EvansGrid { .. } => "evans-grid",
        Command::Dispersion { .. } => "dispersion",
        Command::Criterion { .. } => "criterion",
        Command::Mode { .. } => "mode",
        Command::Simulate { .. } => "simulate",
        Command::Packet { .. } => "packet",
        Command::Verify { .. } => "verify",
    }
}

struct Ctx {
    settings: Settings,
    out: Outputs,
    config_sha: Option<String>,
    model: Option<ModelSpec>,
}

impl Ctx {
    fn model(&mut self, a: &ModelArgs) -> Result<ModelSpec> {
        let name: String = self.settings.require("model", a.model.clone())?;
        let name: ModelName = name.parse()?;
        let p = self.settings.opt("p", a.p)?;
        let c = self.settings.opt("c", a.c)?;
        let m = ModelSpec::from_parts(name, p, c)?;
        self.settings.resolved.insert("p".into(), m.p.to_string());
        self.settings.resolved.insert("c".into(), m.c.to_string());
        self.model = Some(m.clone());
        Ok(m)
    }

    fn evans(&mut self, a: &EvansArgs) -> Result<EvansParams> {
        let d = EvansParams::default();
        let tol = self.settings.get("tol", a.tol, d.tol)?;
        let x_inf = self.settings.opt("x_inf", a.x_inf)?;
        if !(tol > 0.0 && tol < 1e-2) {
            return Err(InvalidInput(format!("tol must lie in (0, 1e-2), got {tol}")).into());
        }
        Ok(EvansParams { x_inf, tol })
    }

    fn rect(&mut self, a: &RectArgs) -> Result<Rect> {
        let d = Rect::default_search();
        let r = Rect::new(
            self.settings.get("re_min", a.re_min, d.re_min)?,
            self.settings.get("re_max", a.re_max, d.re_max)?,
            self.settings.get("im_min", a.im_min, d.im_min)?,
            self.settings.get("im_max", a.im_max, d.im_max)?,
        );
        if !(r.re_min > 0.0 && r.re_max > r.re_min && r.im_max > r.im_min) {
            return Err(InvalidInput("search rectangle must satisfy 0 < re_min < re_max, im_min < im_max".into()).into());
        }
        Ok(r)
    }

    fn finish(self) -> Result<()> {
        self.out.finish(self.model.as_ref(), &self.settings.resolved, self.config_sha)?;
        Ok(())
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
    }
}

fn positive(name: &str, x: f64) -> Result<f64> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(InvalidInput(format!("{name} must be positive, got {x}")).into())
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let cfg = match &cli.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let cmd = name(&cli.command);
    if let Command::Models { action } = &cli.command {
        return models(action);
    }
    let mut ctx = Ctx {
        settings: Settings::new(cfg.for_command(cmd)),
        out: Outputs::new(&cli.out, cmd)?,
        config_sha: cfg.sha256.clone(),
        model: None,
    };
    let mut failed = 0;
    match &cli.command {
        Command::Models { .. } => unreachable!(),
        Command::Profile { model, n, half_length } => profile(&mut ctx, model, *n, *half_length)?,
        Command::Evans { model, evans, sigma_re, sigma_im, k } => evans_point(&mut ctx, model, evans, *sigma_re, *sigma_im, *k)?,
        Command::EvansGrid { model, evans, rect, nre, nim, k, kmin, kmax, nk } => {
            evans_grid(&mut ctx, model, evans, rect, (*nre, *nim), (*k, *kmin, *kmax, *nk))?
        }
        Command::Dispersion { model, evans, rect, kmin, kmax, nk, jump_tol, fit_half_width } => {
            dispersion(&mut ctx, model, evans, rect, (*kmin, *kmax, *nk), (*jump_tol, *fit_half_width))?
        }
        Command::Criterion { model, n, half_length, kmin, kmax, nk, k_tol, fd_step } => {
            criterion(&mut ctx, model, (*n, *half_length), (*kmin, *kmax, *nk), (*k_tol, *fd_step))?
        }
        Command::Mode { model, evans, rect, k, sigma_re, sigma_im, n, half_length } => {
            mode(&mut ctx, model, evans, rect, *k, (*sigma_re, *sigma_im), (*n, *half_length))?
        }
        Command::Simulate { .. } => simulate_cmd(&mut ctx, &cli.command)?,
        Command::Packet { .. } => packet(&mut ctx, &cli.command)?,
        Command::Verify { quick } => failed = verify_cmd(&mut ctx, *quick)?,
    }
    // The manifest is written even when a property check failed.
    ctx.finish()?;
    if failed > 0 {
        return Err(PropertyFailure(failed).into());
    }
    Ok(())
}

#[derive(Serialize)]
struct ModelRow {
    name: String,
    p: u32,
    c: f64,
    components: usize,
    ode_dim_k0: usize,
    ode_dim_k1: usize,
    decay_rate: f64,
    x_inf: f64,
    coercivity_k: f64,
    mk_fredholm: bool,
}

fn models(action: &str) -> Result<()> {
    if action != "list" {
        return Err(InvalidInput(format!("unknown models action '{action}' (expected 'list')")).into());
    }
    let rows: Vec<ModelRow> = ModelSpec::registry()
        .iter()
        .map(|m| ModelRow {
            name: m.name.to_string(),
            p: m.p,
            c: m.c,
            components: m.d(),
            ode_dim_k0: m.ode_dim(0.0),
            ode_dim_k1: m.ode_dim(1.0),
            decay_rate: m.decay_rate(),
            x_inf: m.x_inf_default(),
            coercivity_k: m.coercivity_k(),
            mk_fredholm: m.mk_fredholm(),
        })
        .collect();
    println!("{}", serde_json::to_string_pretty(&rows)?);
    Ok(())
}

fn profile(ctx: &mut Ctx, a: &ModelArgs, n: Option<usize>, half: Option<f64>) -> Result<()> {
    let m = ctx.model(a)?;
    let n = ctx.settings.get("n", n, 512)?;
    let half = positive("half_length", ctx.settings.get("half_length", half, m.x_inf_default())?)?;
    if n < 2 {
        return Err(InvalidInput("n must be at least 2".into()).into());
    }
    let grid = Grid1d::new(n, half);
    let rows: Vec<Vec<f64>> = grid
        .points()
        .map(|x| std::iter::once(x).chain(m.soliton_profile(x)).collect())
        .collect();
    let header: Vec<String> = std::iter::once("x".to_string()).chain((0..m.d()).map(|i| format!("q{i}"))).collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    ctx.out.write_csv("profile.csv", &header, &rows)?;
    Ok(())
}

#[derive(Serialize)]
struct EvansJson {
    k: f64,
    sigma_re: f64,
    sigma_im: f64,
    mantissa_re: f64,
    mantissa_im: f64,
    log_scale: f64,
    log_abs_d: f64,
    arg_d: f64,
    x_inf: f64,
}

fn evans_point(
    ctx: &mut Ctx,
    a: &ModelArgs,
    e: &EvansArgs,
    sre: Option<f64>,
    sim: Option<f64>,
    k: Option<f64>,
) -> Result<()> {
    let m = ctx.model(a)?;
    let p = ctx.evans(e)?;
    let s = Complex64::new(ctx.settings.require("sigma_re", sre)?, ctx.settings.get("sigma_im", sim, 0.0)?);
    let k = ctx.settings.require("k", k)?;
    let v = evans::evans_eval(&m, s, k, &p)?;
    let j = EvansJson {
        k,
        sigma_re: s.re,
        sigma_im: s.im,
        mantissa_re: v.mantissa.re,
        mantissa_im: v.mantissa.im,
        log_scale: v.log_scale,
        log_abs_d: v.ln_abs(),
        arg_d: v.arg(),
        x_inf: v.x_inf,
    };
    println!("{}", serde_json::to_string_pretty(&j)?);
    ctx.out.write_json("evans.json", &j)?;
    Ok(())
}

fn k_list(ctx: &mut Ctx, k: Option<f64>, kmin: Option<f64>, kmax: Option<f64>, nk: Option<usize>) -> Result<Vec<f64>> {
    if let Some(k) = ctx.settings.opt("k", k)? {
        return Ok(vec![k]);
    }
    let kmin = ctx.settings.require("kmin", kmin)?;
    let kmax = ctx.settings.get("kmax", kmax, kmin)?;
    let nk = ctx.settings.get("nk", nk, 1)?;
    if nk == 0 || kmin < 0.0 || kmax < kmin {
        return Err(InvalidInput("need 0 <= kmin <= kmax and nk >= 1".into()).into());
    }
    Ok(linspace(kmin, kmax, nk))
}

#[derive(Serialize)]
struct GridSummary {
    points: usize,
    failed: usize,
    first_error: Option<String>,
}

fn evans_grid(
    ctx: &mut Ctx,
    a: &ModelArgs,
    e: &EvansArgs,
    r: &RectArgs,
    (nre, nim): (Option<usize>, Option<usize>),
    (k, kmin, kmax, nk): (Option<f64>, Option<f64>, Option<f64>, Option<usize>),
) -> Result<()> {
    let m = ctx.model(a)?;
    let p = ctx.evans(e)?;
    let rect = ctx.rect(r)?;
    let nre = ctx.settings.get("nre", nre, 20)?;
    let nim = ctx.settings.get("nim", nim, 21)?;
    let ks = k_list(ctx, k, kmin, kmax, nk)?;
    let mut pts = Vec::new();
    for &k in &ks {
        for im in linspace(rect.im_min, rect.im_max, nim) {
            for re in linspace(rect.re_min, rect.re_max, nre) {
                pts.push((Complex64::new(re, im), k));
            }
        }
    }
    let vals = evans::evans_many(&m, &pts, &p);
    let mut failed = 0;
    let mut first_error = None;
    let rows: Vec<Vec<f64>> = pts
        .iter()
        .zip(&vals)
        .map(|(&(s, k), v)| match v {
            Ok(v) => vec![s.re, s.im, k, v.ln_abs(), v.arg()],
            Err(err) => {
                failed += 1;
                first_error.get_or_insert_with(|| err.to_string());
                vec![s.re, s.im, k, f64::NAN, f64::NAN]
            }
        })
        .collect();
    ctx.out.write_csv("evans-grid.csv", &["re_sigma", "im_sigma", "k", "log_abs_D", "arg_D"], &rows)?;
    ctx.out.write_json(
        "evans-grid.json",
        &GridSummary {
            points: rows.len(),
            failed,
            first_error,
        },
    )?;
    Ok(())
}

#[derive(Serialize)]
struct DispersionJson {
    k0: f64,
    sigma0_re: f64,
    sigma0_im: f64,
    m: u32,
    band: Vec<(f64, f64)>,
}

fn dispersion(
    ctx: &mut Ctx,
    a: &ModelArgs,
    e: &EvansArgs,
    r: &RectArgs,
    (kmin, kmax, nk): (Option<f64>, Option<f64>, Option<usize>),
    (jump, fit): (Option<f64>, Option<f64>),
) -> Result<()> {
    let m = ctx.model(a)?;
    let p = ctx.evans(e)?;
    let rect = ctx.rect(r)?;
    let kmin = ctx.settings.get("kmin", kmin, 0.02)?;
    let kmax = ctx.settings.get("kmax", kmax, m.coercivity_k())?;
    let nk = ctx.settings.get("nk", nk, 40)?;
    let d = TraceOptions::default();
    let opts = TraceOptions {
        rect,
        jump_tol: ctx.settings.get("jump_tol", jump, d.jump_tol)?,
        fit_half_width: ctx.settings.get("fit_half_width", fit, d.fit_half_width)?,
    };
    let curve = specfind::trace_dispersion(&m, kmin, kmax, nk, &p, &opts)?;
    let rows: Vec<Vec<f64>> = curve
        .samples
        .iter()
        .map(|s| {
            let z = s.sigma.unwrap_or(Complex64::new(f64::NAN, f64::NAN));
            vec![s.k, z.re, z.im, s.residual]
        })
        .collect();
    ctx.out.write_csv("dispersion.csv", &["k", "re_sigma", "im_sigma", "residual"], &rows)?;
    let j = DispersionJson {
        k0: curve.k0,
        sigma0_re: curve.sigma0.re,
        sigma0_im: curve.sigma0.im,
        m: curve.m,
        band: curve.band.clone(),
    };
    println!("{}", serde_json::to_string_pretty(&j)?);
    ctx.out.write_json("dispersion.json", &j)?;
    Ok(())
}

#[derive(Serialize)]
struct CriterionJson {
    k0: Option<f64>,
    derivative_pairing: Option<f64>,
    criterion_valid: bool,
    fredholm: bool,
    mu_max0: Option<f64>,
    predicted_pairing: Option<f64>,
    note: Option<String>,
}

fn criterion(
    ctx: &mut Ctx,
    a: &ModelArgs,
    (n, half): (Option<usize>, Option<f64>),
    (kmin, kmax, nk): (Option<f64>, Option<f64>, Option<usize>),
    (k_tol, fd): (Option<f64>, Option<f64>),
) -> Result<()> {
    let m = ctx.model(a)?;
    let d = CriterionOptions::default();
    let opts = CriterionOptions {
        n: ctx.settings.get("n", n, d.n)?,
        half_length: ctx.settings.get("half_length", half, d.half_length)?,
        k_tol: ctx.settings.get("k_tol", k_tol, d.k_tol)?,
        fd_step: ctx.settings.get("fd_step", fd, d.fd_step)?,
    };
    let kmin = ctx.settings.get("kmin", kmin, 0.0)?;
    let kmax = ctx.settings.get("kmax", kmax, m.coercivity_k())?;
    let nk = ctx.settings.get("nk", nk, 30)?;
    let ks = linspace(kmin, kmax, nk);
    let mu = colloc::scan_mk(&m, &ks, opts.n, opts.half_length)?;
    let rows: Vec<Vec<f64>> = ks.iter().zip(&mu).map(|(&k, &u)| vec![k, u]).collect();
    ctx.out.write_csv("criterion.csv", &["k", "mu_max"], &rows)?;
    let c = colloc::find_k0_criterion(&m, &opts)?;
    let j = match c {
        Some(c) => CriterionJson {
            k0: Some(c.k0),
            derivative_pairing: Some(c.derivative_pairing),
            criterion_valid: c.criterion_valid,
            fredholm: c.fredholm,
            mu_max0: Some(c.mu_max0),
            predicted_pairing: c.predicted_pairing,
            note: Some(c.note).filter(|n| !n.is_empty()),
        },
        None => CriterionJson {
            k0: None,
            derivative_pairing: None,
            criterion_valid: false,
            fredholm: m.mk_fredholm(),
            mu_max0: None,
            predicted_pairing: None,
            note: Some("no sign change of the top eigenvalue of M_k".into()),
        },
    };
    println!("{}", serde_json::to_string_pretty(&j)?);
    ctx.out.write_json("criterion.json", &j)?;
    Ok(())
}

#[derive(Serialize)]
struct ModeJson {
    k: f64,
    sigma_re: f64,
    sigma_im: f64,
    residual: f64,
    conservation: f64,
    h1_norm_sq: f64,
    singular_ratio: f64,
    n: usize,
    half_length: f64,
}

fn mode(
    ctx: &mut Ctx,
    a: &ModelArgs,
    e: &EvansArgs,
    r: &RectArgs,
    k: Option<f64>,
    (sre, sim): (Option<f64>, Option<f64>),
    (n, half): (Option<usize>, Option<f64>),
) -> Result<()> {
    let m = ctx.model(a)?;
    let p = ctx.evans(e)?;
    let rect = ctx.rect(r)?;
    let k = ctx.settings.require("k", k)?;
    let sigma = match ctx.settings.opt("sigma_re", sre)? {
        Some(re) => {
            let guess = Complex64::new(re, ctx.settings.get("sigma_im", sim, 0.0)?);
            specfind::refine_root(&m, k, guess, &p)?.sigma
        }
        None => match specfind::find_unstable_sigma(&m, k, &rect, &p)? {
            Some(root) => root.sigma,
            None => {
                return Err(transverse_core::Error::Numerical(format!("no unstable eigenvalue in the search region at k={k}")).into())
            }
        },
    };
    let n = ctx.settings.opt("n", n)?;
    let half = ctx.settings.opt("half_length", half)?;
    let grid = match (n, half) {
        (Some(n), Some(h)) => Some(Grid1d::new(n, positive("half_length", h)?)),
        (None, None) => None,
        _ => return Err(InvalidInput("give both n and half_length, or neither".into()).into()),
    };
    let res = specfind::mode_reconstruct(&m, k, sigma, grid)?;
    let g = res.grid.grid();
    let mut header = vec!["x".to_string()];
    for i in 0..m.d() {
        header.push(format!("re_u{i}"));
        header.push(format!("im_u{i}"));
    }
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows: Vec<Vec<f64>> = (0..g.n)
        .map(|j| {
            let mut r = vec![g.x(j)];
            for comp in &res.u {
                r.push(comp[j].re);
                r.push(comp[j].im);
            }
            r
        })
        .collect();
    ctx.out.write_csv("mode.csv", &header, &rows)?;
    let j = ModeJson {
        k,
        sigma_re: res.sigma.re,
        sigma_im: res.sigma.im,
        residual: res.residual,
        conservation: res.conservation,
        h1_norm_sq: res.h1_norm_sq,
        singular_ratio: res.singular_ratio,
        n: res.grid.n,
        half_length: res.grid.half_length,
    };
    println!("{}", serde_json::to_string_pretty(&j)?);
    ctx.out.write_json("mode.json", &j)?;
    Ok(())
}

fn simulate_cmd(ctx: &mut Ctx, cmd: &Command) -> Result<()> {
    let Command::Simulate {
        model,
        nx,
        ny,
        lx,
        ly,
        k,
        dt,
        t_max,
        delta,
        perturbation,
        dynamics,
        dealias,
        kappa,
        fit_lo_factor,
        fit_hi,
        record_every,
        snapshot_every,
    } = cmd
    else {
        unreachable!()
    };
    let m = ctx.model(model)?;
    let s = &mut ctx.settings;
    let nx = s.get("nx", *nx, 256)?;
    let ny = s.get("ny", *ny, 32)?;
    let lx = s.get("lx", *lx, 40.0)?;
    let k = s.opt("k", *k)?;
    let ly = match (s.opt("ly", *ly)?, k) {
        (Some(ly), _) => ly,
        (None, Some(k)) => 2.0 * PI / positive("k", k)?,
        (None, None) => return Err(InvalidInput("simulate needs ly or a transverse frequency k".into()).into()),
    };
    s.resolved.insert("ly".into(), ly.to_string());
    let grid = Grid2d::new(nx, ny, lx, ly)?;
    let mut cfg = SimConfig::new(m.clone(), grid, s.get("dt", *dt, 0.01)?, s.get("t_max", *t_max, 200.0)?);
    cfg.delta = s.get("delta", *delta, 1e-4)?;
    cfg.dynamics = match s.get("dynamics", dynamics.clone(), "nonlinear".to_string())?.as_str() {
        "nonlinear" => Dynamics::Nonlinear,
        "linearized" | "linear" => Dynamics::Linearized,
        other => return Err(InvalidInput(format!("unknown dynamics '{other}'")).into()),
    };
    cfg.dealias = s.get("dealias", *dealias, true)?;
    cfg.kappa = s.get("kappa", *kappa, cfg.kappa)?;
    cfg.fit_lo_factor = s.get("fit_lo_factor", *fit_lo_factor, cfg.fit_lo_factor)?;
    cfg.fit_hi = s.get("fit_hi", *fit_hi, cfg.fit_hi)?;
    cfg.record_every = s.get("record_every", *record_every, cfg.record_every)?;
    cfg.snapshot_every = s.get("snapshot_every", *snapshot_every, 0)?;
    let default_pert = if k.is_some() { "eigenmode" } else { "none" };
    let pert = s.get("perturbation", perturbation.clone(), default_pert.to_string())?;
    match pert.as_str() {
        "none" => {
            cfg.perturbation = Perturbation::None;
            cfg.delta = 0.0;
            s.resolved.insert("delta".into(), "0".into());
        }
        "eigenmode" => {
            let k = k.ok_or_else(|| InvalidInput("an eigenmode perturbation needs k".into()))?;
            let root = specfind::find_unstable_sigma(&m, k, &Rect::default_search(), &EvansParams::default())?
                .ok_or_else(|| transverse_core::Error::Numerical(format!("no unstable eigenvalue at k={k}")))?;
            cfg.perturbation = simulate::eigenmode_perturbation(&m, k, root.sigma, &grid)?.0;
        }
        other => return Err(InvalidInput(format!("unknown perturbation '{other}'")).into()),
    }
    let report = simulate::run_instability_experiment(&cfg)?;
    ctx.out.write_json("simulate.json", &report)?;
    let rows: Vec<Vec<f64>> = report
        .series
        .iter()
        .map(|r| vec![r.t, r.norm_total, r.norm_perp, r.hamiltonian_diag])
        .collect();
    ctx.out.write_csv("simulate.csv", &["t", "norm_total", "norm_perp", "hamiltonian_diag"], &rows)?;
    for (i, snap) in report.snapshots.iter().enumerate() {
        ctx.out.write_bytes(&format!("simulate.snap{i:05}.bin"), &simulate::encode_snapshot(snap))?;
    }
    let g = report.growth.as_ref();
    let summary = serde_json::json!({
        "growth_rate": g.map(|g| g.rate),
        "r_squared": g.map(|g| g.r_squared),
        "t_delta": report.t_delta,
        "distance_at_t_delta": report.distance_at_t_delta,
        "inconclusive": report.inconclusive,
        "blow_up_time": report.blow_up_time,
        "steps": report.steps,
    });
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

#[derive(Serialize)]
struct PacketJson {
    k0: f64,
    sigma0_re: f64,
    m: u32,
    interval: (f64, f64),
    nodes: usize,
    ly: f64,
    ratio_min: f64,
    ratio_max: f64,
    within_bounds: bool,
}

fn packet(ctx: &mut Ctx, cmd: &Command) -> Result<()> {
    let Command::Packet {
        model,
        evans,
        kmin,
        kmax,
        nodes,
        nx,
        lx,
        trace_kmin,
        trace_kmax,
        trace_nk,
        t_max,
        nt,
    } = cmd
    else {
        unreachable!()
    };
    let m = ctx.model(model)?;
    let p = ctx.evans(evans)?;
    let s = &mut ctx.settings;
    let tk0 = s.get("trace_kmin", *trace_kmin, 0.02)?;
    let tk1 = s.get("trace_kmax", *trace_kmax, m.coercivity_k())?;
    let tnk = s.get("trace_nk", *trace_nk, 30)?;
    let curve = specfind::trace_dispersion(&m, tk0, tk1, tnk, &p, &TraceOptions::default())?;
    let (b0, b1) = curve
        .band
        .iter()
        .copied()
        .find(|&(a, b)| a <= curve.k0 && curve.k0 <= b)
        .ok_or_else(|| transverse_core::Error::Numerical("no unstable band found".into()))?;
    let a = s.get("kmin", *kmin, (curve.k0 - 0.1).max(b0))?;
    let b = s.get("kmax", *kmax, (curve.k0 + 0.1).min(b1))?;
    let nodes = s.get("nodes", *nodes, 41)?;
    let grid = Grid1d::new(s.get("nx", *nx, 512)?, s.get("lx", *lx, 80.0)?);
    let s0 = curve.sigma0.re;
    let t_max = s.get("t_max", *t_max, 3.0 / s0)?;
    let nt = s.get("nt", *nt, 13)?;
    let modes = simulate::packet_modes(&m, &curve, (a, b), nodes, grid, &p)?;
    let times = linspace(0.0, t_max, nt);
    let ratios = simulate::packet_bound_ratios(&modes, curve.m, s0, &times);
    let rows: Vec<Vec<f64>> = times
        .iter()
        .zip(&ratios)
        .map(|(&t, &r)| {
            let f = simulate::wave_packet(&modes, t);
            vec![t, f.norm, f.quadrature_norm, r]
        })
        .collect();
    ctx.out.write_csv("packet.csv", &["t", "norm", "quadrature_norm", "bound_ratio"], &rows)?;
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let j = PacketJson {
        k0: curve.k0,
        sigma0_re: s0,
        m: curve.m,
        interval: (a, b),
        nodes,
        ly: modes.ly,
        ratio_min: lo,
        ratio_max: hi,
        within_bounds: lo >= 1.0 / 3.0 && hi <= 3.0,
    };
    println!("{}", serde_json::to_string_pretty(&j)?);
    ctx.out.write_json("packet.json", &j)?;
    Ok(())
}

fn verify_cmd(ctx: &mut Ctx, quick: bool) -> Result<usize> {
    let quick = ctx.settings.flag("quick", quick)?;
    let checks = verify::run_suite(&SuiteOptions { quick });
    let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(4);
    println!("{:<width$}  {:<6}  {:>11}  {:>11}  detail", "check", "status", "value", "tolerance");
    for c in &checks {
        println!(
            "{:<width$}  {:<6}  {:>11.3e}  {:>11.3e}  {}",
            c.name,
            if c.passed { "PASS" } else { "FAIL" },
            c.value,
            c.tolerance,
            c.detail
        );
    }
    ctx.out.write_json("verify.json", &checks)?;
    Ok(checks.iter().filter(|c| !c.passed).count())
}
