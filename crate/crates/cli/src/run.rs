//! Command dispatch and report writing.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use heatlab::chaos::{self, ChaosConfig};
use heatlab::fk::{self, InitialCondition, MomentConfig, MomentEstimate, NoiseKind, Sense, SweepPoint};
use heatlab::kernels::{self, SpaceKernelSpec, TimeKernelSpec};
use heatlab::noise::{self, NoiseGrid, NoiseSynth};
use heatlab::paths::derive_seed;
use heatlab::simplex::{self, SimplexSpec};
use serde_json::{json, Map, Value};

use crate::config::*;
use crate::error::{CliError, CliResult, EXIT_IO, EXIT_OK};

pub const REPORT_FILE: &str = "report.json";

#[derive(Debug, Clone)]
pub struct Outcome {
    pub exit_code: i32,
    pub report: Value,
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    out: &'a Path,
    outputs: Map<String, Value>,
    warnings: Vec<String>,
    files: Vec<String>,
}

impl Ctx<'_> {
    fn put(&mut self, key: &str, v: Value) {
        self.outputs.insert(key.to_string(), v);
    }

    fn create(&mut self, rel: &str) -> CliResult<BufWriter<File>> {
        let path = self.out.join(rel);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        self.files.push(rel.to_string());
        Ok(BufWriter::new(File::create(path)?))
    }

    fn csv(&mut self, rel: &str) -> CliResult<csv::Writer<BufWriter<File>>> {
        Ok(csv::Writer::from_writer(self.create(rel)?))
    }

    fn kernels(&mut self) -> CliResult<(TimeKernelSpec, SpaceKernelSpec)> {
        let (g, l) = self.cfg.kernels()?;
        self.put("gamma", serde_json::to_value(TimeKernelConfig::from_spec(&g))?);
        self.put("lambda", serde_json::to_value(SpaceKernelConfig::from_spec(&l))?);
        Ok((g, l))
    }
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Core(heatlab::Error::from(e))
}

/// Runs `cfg`, writing `report.json` and the command's data files under
/// `out`. The report is written for failures too.
pub fn run(cfg: &ExperimentConfig, out: &Path) -> Outcome {
    let start = Instant::now();
    let mut ctx = Ctx { cfg, out, outputs: Map::new(), warnings: Vec::new(), files: Vec::new() };
    let res = fs::create_dir_all(out).map_err(CliError::from).and_then(|_| dispatch(&mut ctx));
    let (exit_code, status, reason, message) = match &res {
        Ok(()) => (EXIT_OK, "ok", Value::Null, Value::Null),
        Err(e) => (e.exit_code(), e.status(), json!(e.reason()), json!(e.to_string())),
    };
    let mut report = json!({
        "schema_version": SCHEMA_VERSION,
        "heatlab_version": env!("CARGO_PKG_VERSION"),
        "command": cfg.command.name(),
        "status": status,
        "exit_code": exit_code,
        "reason": reason,
        "message": message,
        "config": serde_json::to_value(cfg).unwrap_or(Value::Null),
        "outputs": Value::Object(std::mem::take(&mut ctx.outputs)),
        "warnings": ctx.warnings,
        "files": ctx.files,
    });
    report["wall_time_s"] = json!(start.elapsed().as_secs_f64());
    let written = serde_json::to_vec_pretty(&report)
        .map_err(CliError::from)
        .and_then(|b| fs::write(out.join(REPORT_FILE), b).map_err(CliError::from));
    match written {
        Ok(()) => Outcome { exit_code, report },
        Err(e) => {
            eprintln!("error[{}]: cannot write report: {e}", e.reason());
            Outcome { exit_code: EXIT_IO, report }
        }
    }
}

/// Report payload without the fields that vary between identical runs.
pub fn deterministic_payload(report: &Value) -> Value {
    let mut r = report.clone();
    if let Some(m) = r.as_object_mut() {
        m.remove("wall_time_s");
    }
    r
}

/// The report written when the config itself cannot be loaded.
pub fn write_load_failure(out: &Path, err: &CliError) -> CliResult<()> {
    fs::create_dir_all(out)?;
    let report = json!({
        "schema_version": SCHEMA_VERSION,
        "heatlab_version": env!("CARGO_PKG_VERSION"),
        "status": err.status(),
        "exit_code": err.exit_code(),
        "reason": err.reason(),
        "message": err.to_string(),
    });
    fs::write(out.join(REPORT_FILE), serde_json::to_vec_pretty(&report)?)?;
    Ok(())
}

pub fn default_out_dir(cfg: &ExperimentConfig) -> PathBuf {
    PathBuf::from(cfg.out.clone().unwrap_or_else(|| format!("heatlab-{}", cfg.command.name())))
}

fn dispatch(ctx: &mut Ctx) -> CliResult<()> {
    match ctx.cfg.command {
        Command::Hypothesis => hypothesis(ctx),
        Command::Moments => moments(ctx),
        Command::Chaos => chaos_cmd(ctx),
        Command::Simplex => simplex_cmd(ctx),
        Command::Partition => partition(ctx),
        Command::Synthesize => synthesize(ctx),
        Command::Besov => besov(ctx),
        Command::Intermittency => intermittency(ctx),
    }
}

fn hypothesis(ctx: &mut Ctx) -> CliResult<()> {
    let p = ctx.cfg.hypothesis.clone().unwrap_or_default();
    let (spec, admissible) = match (&ctx.cfg.preset, &ctx.cfg.lambda) {
        (None, Some(l)) => {
            let checked = l.to_spec();
            let admissible = checked.as_ref().err().map(|e| e.to_string());
            (checked.or_else(|_| l.to_spec_unchecked())?, admissible)
        }
        _ => (ctx.cfg.space_kernel()?, None),
    };
    ctx.put("lambda", serde_json::to_value(SpaceKernelConfig::from_spec(&spec))?);
    ctx.put("admissible", json!(admissible.is_none()));
    if let Some(why) = admissible {
        ctx.warnings.push(format!("kernel outside its admissible range: {why}"));
    }
    let r = kernels::mu_moment_integral(&spec, p.p, p.tol)?;
    ctx.put("integrable", json!(r.finite));
    ctx.put("integral_value", json!(r.integral_value));
    ctx.put("exponent_p", json!(r.exponent_p));
    ctx.put("converged", json!(r.converged));
    ctx.put("quadrature_error", json!(r.quadrature_error));
    if let (Some(n), true) = (p.cutoff, r.finite) {
        let (c, d) = kernels::cn_dn(&spec, n)?;
        ctx.put("cutoff", json!(n));
        ctx.put("c_n", json!(c));
        ctx.put("d_n", json!(d));
    }
    Ok(())
}

fn initial(u0: &InitialConfig) -> InitialCondition {
    match u0 {
        InitialConfig::One => InitialCondition::One,
        InitialConfig::GaussianBump { center, width } => {
            InitialCondition::GaussianBump { center: center.clone(), width: *width }
        }
    }
}

fn noise_kind(n: NoiseKindName) -> NoiseKind {
    match n {
        NoiseKindName::TimeDependent => NoiseKind::TimeDependent,
        NoiseKindName::TimeIndependent => NoiseKind::TimeIndependent,
    }
}

fn estimate_json(e: &MomentEstimate) -> Value {
    let (m, se) = e.mean();
    json!({
        "log_mean": e.log_mean,
        "stderr_log": e.stderr_log,
        "mean": m,
        "stderr": se,
        "ess": e.ess,
        "samples_used": e.samples_used,
        "warnings": e.warnings,
    })
}

fn check_ess(e: &MomentEstimate, floor: f64) -> CliResult<()> {
    if e.ess < floor * e.samples_used as f64 {
        return Err(CliError::EssCollapse { ess: e.ess, samples: e.samples_used, floor });
    }
    Ok(())
}

fn moments(ctx: &mut Ctx) -> CliResult<()> {
    let p = ctx.cfg.moments.clone().unwrap_or_default();
    let (g, l) = ctx.kernels()?;
    let dim = l.dim;
    let mut m = MomentConfig::new(g, l, p.k, p.t);
    m.sense = match p.sense {
        SenseName::Skorohod => Sense::Skorohod,
        SenseName::Stratonovich => Sense::Stratonovich,
    };
    m.noise_kind = noise_kind(p.noise);
    m.x = p.x.clone().unwrap_or_else(|| vec![0.0; dim]);
    m.u0 = initial(&p.u0);
    m.samples = p.samples;
    m.steps = p.steps;
    m.seed = ctx.cfg.seed;
    m.workers = ctx.cfg.workers;
    let e = fk::moment(&m)?;
    ctx.warnings.extend(e.warnings.iter().cloned());
    ctx.put("estimate", estimate_json(&e));
    let mut w = ctx.csv("moments.csv")?;
    w.write_record(["k", "t", "log_mean", "stderr_log", "ess"]).map_err(csv_err)?;
    w.write_record([p.k.to_string(), p.t.to_string(), e.log_mean.to_string(), e.stderr_log.to_string(), e.ess.to_string()])
        .map_err(csv_err)?;
    w.flush()?;
    check_ess(&e, p.ess_floor)
}

fn chaos_cmd(ctx: &mut Ctx) -> CliResult<()> {
    let p = ctx.cfg.chaos.clone().unwrap_or_default();
    let (g, l) = ctx.kernels()?;
    let mut c = ChaosConfig::new(g, l, p.t, p.samples, p.steps, ctx.cfg.seed);
    c.workers = ctx.cfg.workers;
    let sum = if p.compare_fk {
        let cmp = chaos::compare_with_fk(p.order, &c, p.fk_samples)?;
        ctx.put(
            "fk",
            json!({"mean": cmp.fk_mean, "stderr": cmp.fk_stderr, "combined_stderr": cmp.combined_stderr, "z": cmp.z}),
        );
        cmp.partial
    } else {
        chaos::chaos_partial_sum(p.order, &c)?
    };
    let terms: Vec<Value> = sum
        .terms
        .iter()
        .map(|t| json!({"n": t.n, "value": t.value, "stderr": t.stderr, "method": t.method, "warning": t.warning}))
        .collect();
    ctx.warnings.extend(sum.terms.iter().filter_map(|t| t.warning.clone()));
    ctx.put("terms", Value::Array(terms));
    ctx.put("term_ratios", json!(chaos::term_ratios(&sum.terms)));
    ctx.put("partial_sum", json!({"order": sum.order, "value": sum.value, "stderr": sum.stderr}));
    let w = ctx.create("chaos_terms.csv")?;
    chaos::write_terms_csv(w, &sum.terms)?;
    Ok(())
}

fn simplex_cmd(ctx: &mut Ctx) -> CliResult<()> {
    let p = ctx.cfg.simplex.clone().unwrap_or_default();
    let spec = SimplexSpec::new(p.t, p.alpha.clone())?;
    let exact = simplex::simplex_integral_exact(&spec);
    let nested = simplex::simplex_integral_nested(&spec, p.tol)?;
    ctx.put("exact", json!(exact));
    ctx.put("nested", json!(nested));
    ctx.put("relative_error", json!(((nested - exact) / exact).abs()));
    if let Some(l1) = &p.lemma1 {
        let lambda = ctx.cfg.space_kernel()?;
        ctx.put("lambda", serde_json::to_value(SpaceKernelConfig::from_spec(&lambda))?);
        let lhs = simplex::lemma1_lhs(&lambda, p.t, l1.n, l1.samples, ctx.cfg.seed, None)?;
        let bound = simplex::lemma1_bound(&lambda, p.t, l1.n, l1.cutoff)?;
        let (c, d) = simplex::cn_dn(&lambda, l1.cutoff)?;
        ctx.put(
            "lemma1",
            json!({"n": l1.n, "cutoff": l1.cutoff, "lhs": lhs.mean, "stderr": lhs.stderr, "bound": bound, "c_n": c, "d_n": d,
                   "holds": lhs.mean <= bound + 3.0 * lhs.stderr}),
        );
    }
    Ok(())
}

fn partition(ctx: &mut Ctx) -> CliResult<()> {
    let p = ctx.cfg.partition.clone().unwrap_or_default();
    if !(p.t > 0.0 && p.t.is_finite()) {
        return Err(CliError::Invalid(format!("partition t = {} must be positive", p.t)));
    }
    let rects = simplex::legall_partition(p.levels)?;
    let area: f64 = rects.iter().map(|r| r.area(p.t)).sum();
    ctx.put("rectangles", json!(rects.len()));
    ctx.put("area", json!(area));
    ctx.put("expected_area", json!(p.t * p.t / 2.0 * (1.0 - 0.5f64.powi(p.levels as i32))));
    ctx.put("simplex_area", json!(p.t * p.t / 2.0));
    let w = ctx.create("partition.csv")?;
    simplex::write_partition_csv(w, &rects, p.t)?;
    Ok(())
}

fn grid(g: &GridConfig) -> CliResult<NoiseGrid> {
    Ok(NoiseGrid::new(g.nt, g.dt, g.nx, g.dx, g.dim)?)
}

fn synthesize(ctx: &mut Ctx) -> CliResult<()> {
    let p = ctx.cfg.synthesize.clone().unwrap_or_default();
    let (g, l) = ctx.kernels()?;
    let synth = NoiseSynth::new(&g, &l, grid(&p.grid)?, p.epsilon, p.delta)?;
    let origin = vec![0; p.grid.dim];
    ctx.put("target_variance", json!(synth.covariance(0, &origin)));
    let mut rows = Vec::with_capacity(p.realizations);
    for i in 0..p.realizations {
        let seed = derive_seed(ctx.cfg.seed, i as u64);
        let f = synth.sample(seed);
        let n = f.values.len() as f64;
        let mean = f.values.iter().sum::<f64>() / n;
        let var = f.values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        if p.write_fields {
            let w = ctx.create(&format!("fields/field_{i}.bin"))?;
            noise::io::write_field(w, &f.to_blob())?;
        }
        rows.push((i, seed, mean, var));
    }
    let mut w = ctx.csv("synthesize.csv")?;
    w.write_record(["realization", "seed", "mean", "variance"]).map_err(csv_err)?;
    for (i, s, m, v) in &rows {
        w.write_record([i.to_string(), s.to_string(), m.to_string(), v.to_string()]).map_err(csv_err)?;
    }
    w.flush()?;
    ctx.put(
        "realizations",
        Value::Array(rows.iter().map(|(i, s, m, v)| json!({"index": i, "seed": s, "mean": m, "variance": v})).collect()),
    );
    Ok(())
}

fn besov(ctx: &mut Ctx) -> CliResult<()> {
    let p = ctx.cfg.besov.clone().unwrap_or_default();
    let (g, l) = ctx.kernels()?;
    let grid = grid(&p.grid)?;
    if p.time_index >= grid.nt {
        return Err(CliError::Invalid(format!("time_index {} beyond nt = {}", p.time_index, grid.nt)));
    }
    let weight = p.weight.to_weight()?;
    let field = noise::synthesize_noise(&g, &l, grid, p.epsilon, p.delta, ctx.cfg.seed)?;
    let shape = vec![grid.nx; grid.dim];
    let blocks = noise::littlewood_paley_blocks(field.time_slice(p.time_index), &shape, grid.dx)?;
    let spec = noise::besov_spectrum(&blocks, weight);
    ctx.put("levels", json!(spec.levels));
    ctx.put("block_norms", json!(spec.norms));
    ctx.put("weight", json!(weight.name()));
    ctx.put("kappa", json!(p.kappa));
    ctx.put("besov_norm", json!(noise::besov_norm(&blocks, p.kappa, weight)));
    let w = ctx.create("besov.csv")?;
    spec.write_csv(w)?;
    let r = noise::estimate_regularity(&field)?;
    ctx.put(
        "regularity",
        json!({"theta_hat": r.theta_hat, "kappa_hat": r.kappa_hat, "lags": r.lags, "lag_rms": r.lag_rms,
               "levels": r.levels, "level_norms": r.level_norms, "excluded_levels": r.excluded_levels}),
    );
    Ok(())
}

fn intermittency(ctx: &mut Ctx) -> CliResult<()> {
    let p = ctx.cfg.intermittency.clone().unwrap_or_default();
    let (g, l) = ctx.kernels()?;
    let kind = noise_kind(p.noise);
    let mut table = Vec::new();
    let mut rows = Vec::new();
    let mut w = ctx.csv("intermittency.csv")?;
    w.write_record(["t", "k", "log_mean", "stderr_log", "ess"]).map_err(csv_err)?;
    for (it, &t) in p.t_list.iter().enumerate() {
        for (ik, &k) in p.k_list.iter().enumerate() {
            let mut m = MomentConfig::new(g, l.clone(), k, t);
            m.noise_kind = kind;
            m.samples = p.samples;
            m.steps = p.steps;
            m.seed = derive_seed(ctx.cfg.seed, (it * p.k_list.len() + ik) as u64);
            m.workers = ctx.cfg.workers;
            let e = fk::skorohod_moment(&m)?;
            w.write_record([t.to_string(), k.to_string(), e.log_mean.to_string(), e.stderr_log.to_string(), e.ess.to_string()])
                .map_err(csv_err)?;
            for warn in &e.warnings {
                ctx.warnings.push(format!("t = {t}, k = {k}: {warn}"));
            }
            check_ess(&e, p.ess_floor)?;
            table.push(SweepPoint { t, k, log_mean: e.log_mean, stderr_log: e.stderr_log });
            rows.push(json!({"t": t, "k": k, "log_mean": e.log_mean, "stderr_log": e.stderr_log, "ess": e.ess}));
        }
    }
    w.flush()?;
    ctx.put("sweep", Value::Array(rows));
    let (r1, r2) = fk::reference_exponents(&g, &l, kind);
    ctx.put("reference", json!({"kappa1": r1, "kappa2": r2}));
    let fit = fk::fit_intermittency_exponents(&table)?;
    ctx.put(
        "fit",
        json!({"kappa1": fit.kappa1, "kappa2": fit.kappa2, "intercept": fit.intercept, "residuals": fit.residuals}),
    );
    Ok(())
}
