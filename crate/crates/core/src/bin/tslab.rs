use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use tslab::diagnostics::{
    besov_certify, lagrangian_check, picard_experiment, stability_sweep, write_csv, write_dat_files, BesovCertifyConfig,
    ExperimentKind, ExperimentSpec, LagrangianCheckConfig, PicardExperimentConfig, SweepConfig,
};
use tslab::io::{write_field, FieldMeta};
use tslab::linear::{linear_verify, spectrum_report, LinearVerifyConfig};
use tslab::sim::{initial_state, simulate, SimConfig};
use tslab::{Error, Result};

/// Pseudo-spectral laboratory for the pressureless Navier-Stokes-Poisson model.
#[derive(Parser)]
#[command(name = "tslab", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the seed of the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (the TSL_OUT environment variable takes precedence).
    #[arg(long, default_value = "tslab-out")]
    out: PathBuf,
    #[arg(long)]
    quiet: bool,
    /// Worker threads, 0 for all cores.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

#[derive(Subcommand)]
enum Cmd {
    /// Mode solutions against RK4 and the linear system residual.
    LinearVerify(Common),
    /// One Eulerian run with per-sample diagnostics.
    Simulate(Common),
    /// Stability sweep over perturbation sizes with an attractive control run.
    Sweep(Common),
    /// Characteristic roots of the linear modes.
    Spectrum {
        #[arg(long, default_value_t = 1.0)]
        nu: f64,
        #[arg(long, default_value_t = 12)]
        kmax: i64,
        #[arg(long, default_value_t = 3)]
        dim: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Eulerian run with co-advanced flow map against the Lagrangian solution.
    LagrangianCheck(Common),
    /// Block resummation and the statistical Besov certifiers.
    BesovCertify(Common),
    /// Picard construction in Lagrangian coordinates.
    Picard(Common),
}

enum Failure {
    Usage(String),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Param(_) | Error::Grid(_) => Failure::Usage(e.to_string()),
            e => Failure::Run(e),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Run(e.into())
    }
}

struct Ctx {
    spec: ExperimentSpec,
    quiet: bool,
    jobs: usize,
}

impl Ctx {
    fn new(kind: ExperimentKind, c: &Common) -> std::result::Result<Self, Failure> {
        let out = std::env::var_os("TSL_OUT").map(PathBuf::from).unwrap_or_else(|| c.out.clone());
        let spec = ExperimentSpec { kind, config: c.config.clone(), seed: c.seed, out };
        spec.prepare_output().map_err(|e| Failure::Usage(format!("output directory {}: {e}", spec.out.display())))?;
        Ok(Self { spec, quiet: c.quiet, jobs: c.jobs })
    }

    fn config_text(&self) -> std::result::Result<Option<String>, Failure> {
        match &self.spec.config {
            None => Ok(None),
            Some(p) => std::fs::read_to_string(p)
                .map(Some)
                .map_err(|e| Failure::Usage(format!("cannot read config {}: {e}", p.display()))),
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.spec.out.join(name)
    }

    fn say(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", msg.as_ref());
        }
    }

    fn summary<T: Serialize>(&self, passed: bool, body: &T) -> Result<bool> {
        #[derive(Serialize)]
        struct Summary<'a, T> {
            experiment: &'a str,
            seed: Option<u64>,
            passed: bool,
            result: &'a T,
        }
        let s = Summary { experiment: self.spec.kind.name(), seed: self.spec.seed, passed, result: body };
        std::fs::write(self.path("summary.json"), serde_json::to_string_pretty(&s)? + "\n")?;
        self.say(format!("{}: {}", self.spec.kind.name(), if passed { "PASS" } else { "FAIL" }));
        Ok(passed)
    }
}

fn load<T: Default>(ctx: &Ctx, parse: impl Fn(&str) -> Result<T>) -> std::result::Result<T, Failure> {
    match ctx.config_text()? {
        Some(text) => Ok(parse(&text)?),
        None => Ok(T::default()),
    }
}

fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    Ok(std::io::BufWriter::new(std::fs::File::create(path)?))
}

fn run_linear_verify(ctx: &Ctx) -> std::result::Result<bool, Failure> {
    let mut cfg: LinearVerifyConfig = load(ctx, LinearVerifyConfig::from_toml_str)?;
    if let Some(s) = ctx.spec.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    let rep = linear_verify(&cfg, ctx.jobs)?;
    let mut w = create(&ctx.path("modes.csv"))?;
    writeln!(w, "k2,branch,max_error")?;
    for m in &rep.modes {
        writeln!(w, "{},{:?},{:e}", m.k2, m.branch, m.max_error)?;
    }
    let mut w = create(&ctx.path("residuals.csv"))?;
    writeln!(w, "t,residual_a,residual_u")?;
    for r in &rep.residuals {
        writeln!(w, "{:e},{:e},{:e}", r.0, r.1, r.2)?;
    }
    ctx.say(format!("max mode error {:.3e}, max residual {:.3e}", rep.max_mode_error, rep.max_residual));
    #[derive(Serialize)]
    struct Body<'a> {
        config: &'a LinearVerifyConfig,
        max_mode_error: f64,
        max_residual: f64,
    }
    Ok(ctx.summary(rep.passed, &Body { config: &cfg, max_mode_error: rep.max_mode_error, max_residual: rep.max_residual })?)
}

fn run_simulate(ctx: &Ctx) -> std::result::Result<bool, Failure> {
    let mut cfg: SimConfig = load(ctx, SimConfig::from_toml_str)?;
    if let Some(s) = ctx.spec.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    let out = simulate(&initial_state(&cfg)?, &cfg, true)?;
    let d = cfg.d;
    write_csv(create(&ctx.path("diagnostics.csv"))?, &out.records, d)?;
    let dat = ctx.path("dat");
    std::fs::create_dir_all(&dat)?;
    write_dat_files(&dat, &out.records, d)?;
    if let Some(last) = out.states.last() {
        write_field(&ctx.path("rho_final.tslf"), &last.rho, &FieldMeta::for_field(&last.rho, "rho", Some(last.t)))?;
        write_field(&ctx.path("v_final.tslf"), &last.v, &FieldMeta::for_field(&last.v, "v", Some(last.t)))?;
    }
    let first = &out.records[0];
    let last = out.records.last().expect("initial record");
    let mass_drift = (last.mass - first.mass).abs();
    let momentum_drift = last.momentum.iter().zip(&first.momentum).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let energy_increase = out.records.windows(2).map(|w| w[1].energy - w[0].energy).fold(f64::NEG_INFINITY, f64::max);
    #[derive(Serialize)]
    struct Body<'a> {
        config: &'a SimConfig,
        steps: usize,
        final_t: f64,
        abort: &'a Option<tslab::sim::Abort>,
        mass_drift: f64,
        momentum_drift: f64,
        max_energy_increase: f64,
        budget_total: f64,
    }
    ctx.say(format!("t = {}, {} steps, mass drift {mass_drift:.3e}, momentum drift {momentum_drift:.3e}", last.t, out.steps));
    let body = Body {
        config: &cfg,
        steps: out.steps,
        final_t: last.t,
        abort: &out.abort,
        mass_drift,
        momentum_drift,
        max_energy_increase: energy_increase,
        budget_total: last.budget_total,
    };
    Ok(ctx.summary(out.abort.is_none(), &body)?)
}

fn run_sweep(ctx: &Ctx) -> std::result::Result<bool, Failure> {
    let mut cfg: SweepConfig = load(ctx, SweepConfig::from_toml_str)?;
    if let Some(s) = ctx.spec.seed {
        cfg.sim.seed = s;
    }
    cfg.validate()?;
    let rep = stability_sweep(&cfg, ctx.jobs)?;
    let mut w = create(&ctx.path("sweep.csv"))?;
    writeln!(w, "run,epsilon,sign,c_emp,final_t,aborted")?;
    for (i, r) in rep.runs.iter().chain(&rep.control).enumerate() {
        writeln!(w, "{i},{:e},{:?},{:e},{:e},{}", r.epsilon, r.sign, r.c_emp, r.final_t, r.abort.is_some())?;
        let dir = ctx.path(&format!("run_{i}"));
        std::fs::create_dir_all(&dir)?;
        write_csv(create(&dir.join("diagnostics.csv"))?, &r.records, cfg.sim.d)?;
    }
    ctx.say(format!(
        "slope {:.4}, spread {:.4}, control amplification {:?}",
        rep.slope, rep.spread, rep.control_amplification
    ));
    Ok(ctx.summary(rep.passed, &rep)?)
}

fn run_spectrum(ctx: &Ctx, nu: f64, kmax: i64, dim: usize) -> std::result::Result<bool, Failure> {
    let table = spectrum_report(nu, kmax, dim)?;
    table.write_csv(create(&ctx.path("spectrum.csv"))?)?;
    ctx.say(format!("min Re λ₊ = {:.6e} at |k|² = {}", table.min_re_lambda_plus, table.argmin_k2));
    #[derive(Serialize)]
    struct Body {
        nu: f64,
        kmax: i64,
        dim: usize,
        modes: usize,
        min_separation: f64,
        resonant_modes: usize,
        asymptotic_deviation: Option<f64>,
        min_re_lambda_plus: f64,
        max_vieta_residual: f64,
    }
    let body = Body {
        nu,
        kmax,
        dim,
        modes: table.rows.len(),
        min_separation: table.min_separation,
        resonant_modes: table.resonant_modes,
        asymptotic_deviation: table.asymptotic_deviation,
        min_re_lambda_plus: table.min_re_lambda_plus,
        max_vieta_residual: table.max_vieta_residual,
    };
    Ok(ctx.summary(true, &body)?)
}

fn run_lagrangian(ctx: &Ctx) -> std::result::Result<bool, Failure> {
    let mut cfg: LagrangianCheckConfig = load(ctx, LagrangianCheckConfig::from_toml_str)?;
    if let Some(s) = ctx.spec.seed {
        cfg.seed = s;
    }
    let rep = lagrangian_check(&cfg)?;
    let mut w = create(&ctx.path("equivalence.csv"))?;
    writeln!(w, "t,max_density_mismatch,max_velocity_mismatch,gamma,min_jacobian")?;
    for r in &rep.records {
        writeln!(w, "{:e},{:e},{:e},{:e},{:e}", r.t, r.max_density_mismatch, r.max_velocity_mismatch, r.gamma, r.min_jacobian)?;
    }
    std::fs::write(ctx.path("equivalence.json"), serde_json::to_string_pretty(&rep.records).map_err(Error::from)? + "\n")?;
    ctx.say(format!("worst mismatch {:.3e} at t = {}, chain rule {:.3e}", rep.worst.mismatch, rep.worst.t, rep.chain_rule_error));
    Ok(ctx.summary(rep.passed, &rep)?)
}

fn run_besov(ctx: &Ctx) -> std::result::Result<bool, Failure> {
    let mut cfg: BesovCertifyConfig = load(ctx, BesovCertifyConfig::from_toml_str)?;
    if let Some(s) = ctx.spec.seed {
        cfg = cfg.with_seed(s);
    }
    let cfg = cfg.with_jobs(ctx.jobs);
    let rep = besov_certify(&cfg)?;
    let mut w = create(&ctx.path("certificates.csv"))?;
    writeln!(w, "inequality,samples,empirical_max,trend_slope,refinement_change,pass")?;
    for c in &rep.certificates {
        let opt = |x: Option<f64>| x.map_or(String::new(), |v| format!("{v:e}"));
        writeln!(w, "{},{},{:e},{},{},{}", c.inequality, c.samples, c.empirical_max, opt(c.trend_slope), opt(c.refinement_change), c.pass)?;
        ctx.say(format!("{}: max {:.4}, pass {}", c.inequality, c.empirical_max, c.pass));
    }
    Ok(ctx.summary(rep.passed, &rep)?)
}

fn run_picard(ctx: &Ctx) -> std::result::Result<bool, Failure> {
    let mut cfg: PicardExperimentConfig = load(ctx, PicardExperimentConfig::from_toml_str)?;
    if let Some(s) = ctx.spec.seed {
        cfg.picard.seed = s;
    }
    cfg.picard.validate()?;
    let rep = picard_experiment(&cfg)?;
    let mut w = create(&ctx.path("picard.csv"))?;
    writeln!(w, "iterate,delta,contraction,gamma,elliptic_iterations,delta_s1,delta_s2,delta_s3,delta_s4,delta_s5,delta_s6")?;
    for s in &rep.steps {
        let terms: Vec<String> = s.delta_terms.iter().map(|x| format!("{x:e}")).collect();
        let c = s.contraction.map_or(String::new(), |c| format!("{c:e}"));
        writeln!(w, "{},{:e},{},{:e},{},{}", s.n, s.delta, c, s.gamma, s.elliptic_iterations, terms.join(","))?;
    }
    ctx.say(format!(
        "{} iterates, max contraction {:?}, residual {:.3e}, Eulerian mismatch {:?}",
        rep.steps.len(),
        rep.max_contraction,
        rep.max_residual,
        rep.eulerian_mismatch
    ));
    Ok(ctx.summary(rep.passed, &rep)?)
}

fn dispatch(cli: Cli) -> std::result::Result<bool, Failure> {
    match cli.cmd {
        Cmd::LinearVerify(c) => run_linear_verify(&Ctx::new(ExperimentKind::LinearVerify, &c)?),
        Cmd::Simulate(c) => run_simulate(&Ctx::new(ExperimentKind::Simulate, &c)?),
        Cmd::Sweep(c) => run_sweep(&Ctx::new(ExperimentKind::Sweep, &c)?),
        Cmd::Spectrum { nu, kmax, dim, common } => run_spectrum(&Ctx::new(ExperimentKind::Spectrum, &common)?, nu, kmax, dim),
        Cmd::LagrangianCheck(c) => run_lagrangian(&Ctx::new(ExperimentKind::LagrangianCheck, &c)?),
        Cmd::BesovCertify(c) => run_besov(&Ctx::new(ExperimentKind::BesovCertify, &c)?),
        Cmd::Picard(c) => run_picard(&Ctx::new(ExperimentKind::Picard, &c)?),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 2 } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
