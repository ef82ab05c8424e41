use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use blowlab::audit::audit_run_dir;
use blowlab::config::RunConfig;
use blowlab::io::{run_ladder, write_run};
use blowlab::report::{build_report, emit_report, Invariants, NamedAudit};
use blowlab::sweep::{parallel_sweep, plan, EngineKind};
use blowlab_core::critcurve::{self, parse_rational, Regime};
use blowlab_core::eigenfn::TestFunction;
use blowlab_core::harness::fit_scaling;
use blowlab_core::multiplier::{DampingProfile, Multiplier};
use blowlab_core::odekit::{
    integrate_frame, kato_bound, slicing_sequences, FrameOde, KatoInstance, SlicingInput, Tolerances,
};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

#[derive(Parser)]
#[command(name = "blowlab", version, about = "Blow-up and lifespan experiments for weakly coupled damped wave systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProfileKind {
    Zero,
    PowerTail,
    CompactBump,
    Tabulated,
}

#[derive(Subcommand)]
enum Command {
    /// Critical-curve quantities and regime of (n, p, q).
    Classify {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        p: String,
        #[arg(long)]
        q: String,
        /// Parse p and q as rationals (`7/3`, `1.5`) and classify exactly.
        #[arg(long)]
        exact: bool,
    },
    /// Damping multiplier m(t) = exp(-∫_t^∞ b).
    Multiplier {
        #[arg(long, value_enum)]
        profile: ProfileKind,
        #[arg(long)]
        t: f64,
        #[arg(long, default_value_t = 1.0)]
        mu: f64,
        #[arg(long, default_value_t = 2.0)]
        beta: f64,
        #[arg(long, default_value_t = 1.0)]
        t_end: f64,
        /// Tabulated nodes, comma separated.
        #[arg(long, value_delimiter = ',')]
        grid: Vec<f64>,
        /// Tabulated values, comma separated.
        #[arg(long, value_delimiter = ',')]
        values: Vec<f64>,
    },
    /// Φ and Ψ, or the ball integral of Ψ with --ball.
    Eigenfn {
        #[arg(long, default_value_t = 3)]
        n: u32,
        #[arg(long)]
        r: Option<f64>,
        #[arg(long, default_value_t = 0.0)]
        t: f64,
        #[arg(long)]
        ball: bool,
        /// Ball radius for --ball.
        #[arg(long = "R", default_value_t = 1.0)]
        big_r: f64,
    },
    /// Lifespan bound of the Kato ODE-inequality criterion.
    Kato {
        #[arg(long)]
        r: f64,
        #[arg(long)]
        a: f64,
        #[arg(long)]
        b: f64,
        #[arg(long = "A")]
        big_a: f64,
        #[arg(long = "B", default_value_t = 1.0)]
        big_b: f64,
        #[arg(long = "T0")]
        t0: f64,
        #[arg(long = "H0", default_value_t = 0.0)]
        h0: f64,
        #[arg(long = "H0p")]
        h0_prime: f64,
        #[arg(long = "R", default_value_t = 1.0)]
        big_r: f64,
        /// Not derived; supplied by the user.
        #[arg(long = "C0", default_value_t = 1.0)]
        c0: f64,
    },
    /// Integrate the frame ODE surrogate to blow-up.
    Frame {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        q: f64,
        #[arg(long)]
        eps: f64,
        /// Horizon in τ = ln(1+t).
        #[arg(long, default_value_t = 1e7)]
        horizon: f64,
        #[arg(long, default_value_t = 1e-10)]
        rtol: f64,
        #[arg(long, default_value_t = 1.0)]
        cf: f64,
        #[arg(long, default_value_t = 1.0)]
        ck: f64,
    },
    /// Slicing sequences and the critical lifespan bound.
    Slice {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        q: f64,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 40)]
        jmax: usize,
        #[arg(long, default_value_t = 1.0)]
        i1: f64,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[arg(long, default_value_t = 1.0)]
        k: f64,
    },
    /// Solve the PDE system; writes config.toml, snapshots.csv and summary.json.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Number of refinement levels (defaults to grid.levels).
        #[arg(long)]
        refine: Option<usize>,
        #[arg(long, default_value = "run")]
        out: PathBuf,
    },
    /// Functional audits of a solve directory; writes audit.json and traces.csv.
    Audit {
        #[arg(long)]
        run: PathBuf,
    },
    /// ε-sweep with scaling fit; exits nonzero iff an invariant audit fails.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "frame")]
        engine: EngineKind,
        #[arg(long)]
        eps_from: f64,
        #[arg(long)]
        eps_to: f64,
        #[arg(long, default_value_t = 8)]
        points: usize,
        #[arg(long, default_value = "sweep")]
        out: PathBuf,
        /// Permit ε above the small-data cap.
        #[arg(long)]
        allow_large_eps: bool,
        /// PDE engine: also audit the functionals at every ε on the finest grid.
        #[arg(long)]
        audit: bool,
    },
}

fn print(v: &serde_json::Value) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn regime_record(n: u32, p: f64, q: f64, regime: &Regime) -> serde_json::Value {
    let law = critcurve::predicted_lifespan_exponent(regime, n, p, q).ok();
    json!({
        "n": n, "p": p, "q": q,
        "lambda_pq": regime.lambda_pq,
        "lambda_qp": regime.lambda_qp,
        "upsilon": regime.upsilon,
        "regime": regime.tag.as_str(),
        "lifespan_formula": law.map(|l| l.formula()).unwrap_or_else(|| "none: no blow-up statement".into()),
        "law": law,
    })
}

fn classify(n: u32, p: &str, q: &str, exact: bool) -> Result<()> {
    let (regime, pf, qf) = if exact {
        let pr = parse_rational(p).ok_or_else(|| anyhow!("`{p}` is not a rational"))?;
        let qr = parse_rational(q).ok_or_else(|| anyhow!("`{q}` is not a rational"))?;
        (critcurve::classify_exact(n, pr, qr)?, critcurve::to_f64(pr), critcurve::to_f64(qr))
    } else {
        let pf: f64 = p.parse().with_context(|| format!("parsing p = {p}"))?;
        let qf: f64 = q.parse().with_context(|| format!("parsing q = {q}"))?;
        (critcurve::classify(n, pf, qf)?, pf, qf)
    };
    let mut rec = regime_record(n, pf, qf, &regime);
    rec["exact"] = json!(exact);
    print(&rec)
}

fn solve_cmd(config: &PathBuf, refine: Option<usize>, out: &PathBuf) -> Result<()> {
    let cfg = RunConfig::load(config)?;
    let levels = refine.unwrap_or(cfg.grid.levels);
    let art = run_ladder(&cfg, levels)?;
    write_run(out, &cfg, &art)?;
    print(&json!({
        "out": out,
        "outcome": art.summary.outcome,
        "levels": art.summary.levels,
        "lifespan": art.summary.lifespan,
        "propagation_pass": art.summary.propagation.passes(),
    }))
}

#[allow(clippy::too_many_arguments)]
fn sweep_cmd(
    config: &PathBuf,
    engine: EngineKind,
    eps_from: f64,
    eps_to: f64,
    points: usize,
    out: &PathBuf,
    allow_large_eps: bool,
    audit: bool,
) -> Result<bool> {
    let cfg = RunConfig::load(config)?;
    let plan = plan(&cfg, engine, eps_from, eps_to, points, allow_large_eps)?;
    let table = parallel_sweep(&plan)?;
    let fit = fit_scaling(&table, &table.regime).map_err(|e| e.to_string());
    let invariants = Invariants::of(&table);
    let mut audits = Vec::new();
    if audit {
        if engine != EngineKind::Pde {
            bail!("--audit needs the pde engine");
        }
        audits = pde_audits(&cfg, &plan.eps)?;
    }
    let report = build_report(&table, fit.as_ref().map_err(|e| e.clone()), invariants, audits);
    emit_report(out, &table, fit.as_ref().ok(), &report)?;
    print(&json!({
        "out": out,
        "regime": report.regime,
        "predicted": report.predicted_formula,
        "slope": report.fit.as_ref().map(|f| f.slope),
        "r2": report.fit.as_ref().map(|f| f.r2),
        "fit_error": report.fit_error,
        "invariants_pass": report.invariants.pass(),
        "pass": report.pass,
    }))?;
    Ok(report.pass)
}

fn pde_audits(cfg: &RunConfig, eps: &[f64]) -> Result<Vec<NamedAudit>> {
    use rayon::prelude::*;
    eps.par_iter()
        .map(|&e| {
            let mut c = cfg.clone();
            c.eps = e;
            let sys = c.system()?;
            let grid = *c.ladder(c.grid.levels.max(3)).last().unwrap();
            let (t_blowup, trace) = blowlab::audit::record_run(&sys, &grid, c.horizon, &c.options())?;
            let a = blowlab::audit::audit_trace(&trace, &sys, t_blowup);
            Ok(NamedAudit { name: format!("eps={e}"), pass: a.pass, detail: serde_json::to_value(&a)? })
        })
        .collect()
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Classify { n, p, q, exact } => classify(n, &p, &q, exact)?,
        Command::Multiplier { profile, t, mu, beta, t_end, grid, values } => {
            let prof = match profile {
                ProfileKind::Zero => DampingProfile::zero(),
                ProfileKind::PowerTail => DampingProfile::power_tail(mu, beta)?,
                ProfileKind::CompactBump => DampingProfile::compact_bump(mu, t_end)?,
                ProfileKind::Tabulated => DampingProfile::tabulated(grid, values)?,
            };
            let tail = prof.tail_integral(t)?;
            let m = Multiplier::new(prof.clone())?;
            print(&json!({
                "profile": prof,
                "t": t,
                "b_t": m.b(t),
                "m_t": m.m(t),
                "m_0": m.m(0.0),
                "tail": tail.value,
                "tail_error": tail.error,
            }))?;
        }
        Command::Eigenfn { n, r, t, ball, big_r } => {
            let tf = TestFunction::new(n);
            if ball {
                let integral = tf.ball_integral(t, big_r);
                let scale = (1.0 + t).powf((n as f64 - 1.0) / 2.0);
                print(&json!({ "n": n, "t": t, "R": big_r, "ball_integral": integral, "ratio": integral / scale }))?;
            } else {
                let r = r.ok_or_else(|| anyhow!("--r is required without --ball"))?;
                print(&json!({ "n": n, "r": r, "t": t, "phi": tf.phi(r), "psi": tf.psi(t, r) }))?;
            }
        }
        Command::Kato { r, a, b, big_a, big_b, t0, h0, h0_prime, big_r, c0 } => {
            let inst = KatoInstance { r, a, b, big_a, big_b, big_r, t0, h0, h0_prime };
            let bound = kato_bound(&inst, c0)?;
            print(&json!({ "instance": inst, "C0": c0, "C0_source": "user supplied", "bound": bound }))?;
        }
        Command::Frame { n, p, q, eps, horizon, rtol, cf, ck } => {
            let frame = FrameOde::with_data(n, p, q, cf, ck, eps, eps);
            let run = integrate_frame(&frame, horizon, &Tolerances::with_rtol(rtol))?;
            let regime = critcurve::classify(n, p, q)?;
            print(&json!({
                "frame": frame,
                "regime": regime_record(n, p, q, &regime),
                "blowup": run.blowup,
                "t": run.blowup.t(),
                "ln_t": run.blowup.ln_t(),
                "ln_t_bracket": run.blowup.ln_t_bracket(),
                "stats": run.stats,
            }))?;
        }
        Command::Slice { n, p, q, eps, jmax, i1, c, k } => {
            let input = SlicingInput { n, p, q, eps, i1, c, k, jmax };
            let res = slicing_sequences(&input)?;
            print(&json!({ "input": input, "result": res }))?;
        }
        Command::Solve { config, refine, out } => solve_cmd(&config, refine, &out)?,
        Command::Audit { run } => {
            let a = audit_run_dir(&run)?;
            print(&json!({
                "run": run,
                "pass": a.pass,
                "failures": a.bounds.failures(),
                "min_margins": a.bounds.bounds.iter().map(|b| (b.name.clone(), b.min_margin)).collect::<Vec<_>>(),
                "frame": a.frame.as_ref().map(|f| json!({ "status": f.status, "c_f": f.c_f, "c_k": f.c_k })),
            }))?;
            if !a.pass {
                return Ok(ExitCode::from(2));
            }
        }
        Command::Sweep { config, engine, eps_from, eps_to, points, out, allow_large_eps, audit } => {
            if !sweep_cmd(&config, engine, eps_from, eps_to, points, &out, allow_large_eps, audit)? {
                return Ok(ExitCode::from(2));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
