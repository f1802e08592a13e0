//! Command-line front end. The `finite-gap` binary is a thin wrapper around
//! [`main_with`].

use crate::algebra::rational::{parse_q, to_f64};
use crate::algebra::{Q, Var, VarKind};
use crate::error::{Error, Result};
use crate::fixtures;
use crate::jet_match::{fmt_f64, match_deg_m0, match_linear_m, verify_match, MatchResult, NewtonOptions};
use crate::jets::{jacobian_all0, JetEngine};
use crate::odesim::{integrate_x, joint_flow, pde_residual, sample_flow, Flow, IntegratorOptions, NumericSystem};
use crate::series::TruncatedSeries;
use crate::stackel::{preset, BkmData, StackelSystem, SystemDescriptor};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use serde_json::{json, Value};
use std::path::{Path, PathBuf};

#[derive(Parser, Debug)]
#[command(name = "finite-gap", version, about = "Stackel systems, jet prolongation and finite-gap solutions of BKM equations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Args, Debug, Clone, Default)]
pub struct SystemArgs {
    /// JSON system descriptor, or a preset name: kdv, kb, ch.
    #[arg(long, conflicts_with = "ch")]
    pub system: Option<String>,
    /// Camassa-Holm; same as `--system ch`.
    #[arg(long)]
    pub ch: bool,
    /// Gap number.
    #[arg(long = "N")]
    pub big_n: Option<usize>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct OutputArgs {
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Write the output here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct MatchArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    /// Target derivative values `u^(j)(0)`, `j = 0..k`, as JSON: one list, or
    /// one list per component. Entries are numbers or rational strings.
    #[arg(long)]
    pub jet: Option<String>,
    /// JSON run configuration with keys `system`, `jet`, `tol`, `max_iter`, `N`.
    /// Command-line flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Newton residual tolerance (linear `m`).
    #[arg(long)]
    pub tol: Option<f64>,
    /// Newton iteration cap (linear `m`).
    #[arg(long = "max-iter")]
    pub max_iter: Option<usize>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Print the Hamiltonians and equations of motion.
    Construct {
        #[command(flatten)]
        system: SystemArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Taylor coefficients at `x = 0` of a phase variable, as functions of the initial point.
    Taylor {
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long, default_value = "w1")]
        component: String,
        #[arg(long, default_value_t = 3)]
        order: usize,
        /// Set `c_2..c_N` to zero, as in the printed tables.
        #[arg(long)]
        zero_c: bool,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// The all-0 Jacobian `d (w_N)_{ix} / d(w_1, p_{N-1}, w_2, ...)`.
    Jacobian {
        #[command(flatten)]
        system: SystemArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Match a jet of initial data by a finite-gap solution.
    Match {
        #[command(flatten)]
        args: MatchArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Match a jet and check it independently, or run a seeded random suite of exact matches.
    Verify {
        #[command(flatten)]
        args: MatchArgs,
        /// Number of random rational targets (constant `m`).
        #[arg(long)]
        random: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Jet order of the random targets; random in `0..=7` when unset.
        #[arg(long)]
        order: Option<usize>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Integrate the `x`-flow, or the joint `(x, t)`-flow when `--nt > 1`.
    Simulate {
        #[command(flatten)]
        args: MatchArgs,
        /// Initial coordinates (instead of `--jet`), as a JSON list.
        #[arg(long)]
        w0: Option<String>,
        /// Initial momenta, as a JSON list.
        #[arg(long)]
        p0: Option<String>,
        /// Values of remaining constants, e.g. `--const c5=1`.
        #[arg(long = "const")]
        consts: Vec<String>,
        #[arg(long, default_value = "0,1")]
        x_span: String,
        #[arg(long, default_value = "0,0.1")]
        t_span: String,
        /// Grid points in `x` for the joint flow; the `x`-flow alone prints its adaptive steps.
        #[arg(long, default_value_t = 65)]
        nx: usize,
        /// Grid points in `t`; values above 1 integrate the joint flow.
        #[arg(long, default_value_t = 1)]
        nt: usize,
        /// Integrator relative tolerance.
        #[arg(long, default_value_t = 1e-10)]
        rel_tol: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Regenerate the reference tables and diff them against the committed fixtures.
    ReproducePaper {
        /// Fixture directory.
        #[arg(long)]
        dir: Option<PathBuf>,
        /// Overwrite the fixtures instead of comparing.
        #[arg(long)]
        regenerate: bool,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Match a jet, integrate, and tabulate `u(x)` next to the target Taylor polynomial.
    PlotData {
        #[command(flatten)]
        args: MatchArgs,
        #[arg(long, default_value = "-1,1")]
        x_span: String,
        #[arg(long, default_value_t = 81)]
        nx: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
}

/// Output text and exit code of a finished command.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub text: String,
    pub code: i32,
}

impl Outcome {
    fn ok(text: String) -> Outcome {
        Outcome { text, code: 0 }
    }
}

/// Parse `args` (including the program name), run, write the output, and
/// return the exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let out = output_args(&cli.command).out.clone();
    match run(&cli.command) {
        Ok(o) => match write_out(out.as_deref(), &o.text) {
            Ok(()) => o.code,
            Err(e) => {
                eprintln!("error: {e}");
                e.exit_code()
            }
        },
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn write_out(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => Ok(std::fs::write(p, text)?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn output_args(c: &Command) -> &OutputArgs {
    match c {
        Command::Construct { output, .. }
        | Command::Taylor { output, .. }
        | Command::Jacobian { output, .. }
        | Command::Match { output, .. }
        | Command::Verify { output, .. }
        | Command::Simulate { output, .. }
        | Command::ReproducePaper { output, .. }
        | Command::PlotData { output, .. } => output,
    }
}

/// Run a parsed command.
pub fn run(c: &Command) -> Result<Outcome> {
    match c {
        Command::Construct { system, output } => cmd_construct(system, format(output, Format::Text, false)?),
        Command::Taylor { system, component, order, zero_c, output } => {
            cmd_taylor(system, component, *order, *zero_c, format(output, Format::Text, true)?)
        }
        Command::Jacobian { system, output } => cmd_jacobian(system, format(output, Format::Text, true)?),
        Command::Match { args, output } => cmd_match(args, format(output, Format::Json, false)?),
        Command::Verify { args, random: Some(count), seed, order, output } => {
            cmd_verify_random(args, *count, *seed, *order, format(output, Format::Text, false)?)
        }
        Command::Verify { args, output, .. } => cmd_verify(args, format(output, Format::Json, false)?),
        Command::Simulate { args, w0, p0, consts, x_span, t_span, nx, nt, rel_tol, output } => {
            let sim = SimulateArgs { w0: w0.as_deref(), p0: p0.as_deref(), consts, x_span, t_span, nx: *nx, nt: *nt, rel_tol: *rel_tol };
            cmd_simulate(args, &sim, format(output, Format::Csv, true)?)
        }
        Command::ReproducePaper { dir, regenerate, output } => {
            let dir = dir.clone().unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures")));
            cmd_reproduce(&dir, *regenerate, format(output, Format::Text, false)?)
        }
        Command::PlotData { args, x_span, nx, output } => cmd_plot_data(args, x_span, *nx, format(output, Format::Csv, true)?),
    }
}

fn format(o: &OutputArgs, default: Format, csv: bool) -> Result<Format> {
    match o.format.unwrap_or(default) {
        Format::Csv if !csv => Err(Error::Config("this command has no CSV output".into())),
        f => Ok(f),
    }
}

fn json_text(v: &Value) -> String {
    serde_json::to_string_pretty(v).unwrap_or_default() + "\n"
}

/// `key: value` lines from a JSON object; arrays are space-separated.
fn plain_text(v: &Value) -> String {
    fn scalar(v: &Value) -> String {
        match v {
            Value::String(s) => s.clone(),
            Value::Array(a) => a.iter().map(scalar).collect::<Vec<_>>().join(" "),
            Value::Null => "-".into(),
            v => v.to_string(),
        }
    }
    match v {
        Value::Object(m) => m.iter().map(|(k, v)| format!("{k}: {}\n", scalar(v))).collect(),
        v => scalar(v) + "\n",
    }
}

enum Source {
    Preset(String),
    Descriptor(SystemDescriptor),
}

fn source_of(name: &str) -> Result<Source> {
    match name {
        "kdv" | "kb" | "ch" => Ok(Source::Preset(name.to_string())),
        path => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {path}: {e}")))?;
            Ok(Source::Descriptor(SystemDescriptor::from_json(&text)?))
        }
    }
}

fn source(a: &SystemArgs) -> Result<Source> {
    if a.ch {
        return Ok(Source::Preset("ch".into()));
    }
    source_of(a.system.as_deref().ok_or_else(|| Error::Config("--system or --ch is required".into()))?)
}

fn build_source(src: Source, big_n: Option<usize>) -> Result<StackelSystem> {
    match src {
        Source::Preset(p) => preset(&p, big_n.ok_or_else(|| Error::Config("--N is required".into()))?),
        Source::Descriptor(mut d) => {
            if big_n.is_some() {
                d.big_n = big_n;
            }
            d.build()
        }
    }
}

fn build(a: &SystemArgs) -> Result<StackelSystem> {
    build_source(source(a)?, a.big_n)
}

/// The data `(n, m, lambda)` of a source, and the gap number it fixes.
fn data_of(src: Source) -> Result<(BkmData, Option<usize>)> {
    match src {
        Source::Preset(p) => Ok((
            match p.as_str() {
                "kdv" => BkmData::constant(1),
                "kb" => BkmData::constant(2),
                _ => BkmData::camassa_holm(),
            },
            None,
        )),
        Source::Descriptor(d) => {
            let big_n = d.big_n;
            let bare = SystemDescriptor { big_n: Some(big_n.unwrap_or(1)), c_tail: None, d: None, ..d };
            Ok((bare.build()?.data, big_n))
        }
    }
}

fn cmd_construct(a: &SystemArgs, f: Format) -> Result<Outcome> {
    let sys = build(a)?;
    let hs: Vec<String> = (1..=sys.big_n()).map(|i| sys.hamiltonian(i).to_string()).collect();
    let eom: Vec<(String, String)> = sys.phase_vars().iter().zip(sys.eom()).map(|(v, e)| (v.to_string(), e.to_string())).collect();
    Ok(Outcome::ok(match f {
        Format::Json => json_text(&json!({
            "N": sys.big_n(),
            "hamiltonians": hs,
            "eom": eom.iter().map(|(v, e)| json!([v, e])).collect::<Vec<_>>(),
        })),
        _ => {
            let mut s = String::new();
            for (i, h) in hs.iter().enumerate() {
                s.push_str(&format!("H{} = {h}\n", i + 1));
            }
            for (v, e) in &eom {
                s.push_str(&format!("({v})_x = {e}\n"));
            }
            s
        }
    }))
}

fn cmd_taylor(a: &SystemArgs, component: &str, order: usize, zero_c: bool, f: Format) -> Result<Outcome> {
    let mut sys = build(a)?;
    if zero_c {
        let big_n = sys.big_n();
        sys = sys.specialize(&|v| (v.kind() == VarKind::C && (2..=big_n).contains(&v.index())).then(Q::zero))?;
    }
    let v = Var::parse(component)
        .filter(|&v| sys.phase_index(v).is_some())
        .ok_or_else(|| Error::Config(format!("'{component}' is not a phase variable of the system")))?;
    let coeffs: Vec<String> = JetEngine::new(&sys).taylor_coeffs(v, order)?.iter().map(|c| c.to_string()).collect();
    Ok(Outcome::ok(match f {
        Format::Json => json_text(&json!({ "component": v.to_string(), "N": sys.big_n(), "coefficients": coeffs })),
        Format::Csv => {
            let mut s = "order,coefficient\n".to_string();
            for (j, c) in coeffs.iter().enumerate() {
                s.push_str(&format!("{j},{c}\n"));
            }
            s
        }
        Format::Text => coeffs.iter().enumerate().map(|(j, c)| format!("{v}[x^{j}] = {c}\n")).collect(),
    }))
}

fn cmd_jacobian(a: &SystemArgs, f: Format) -> Result<Outcome> {
    let sys = build(a)?;
    let j = jacobian_all0(&JetEngine::new(&sys))?;
    let rows: Vec<Vec<String>> = j.iter().map(|r| r.iter().map(|e| e.to_string()).collect()).collect();
    Ok(Outcome::ok(match f {
        Format::Json => json_text(&json!({ "N": sys.big_n(), "rows": rows })),
        Format::Csv => rows.iter().map(|r| r.join(",") + "\n").collect(),
        Format::Text => rows.iter().map(|r| r.join(" ; ") + "\n").collect(),
    }))
}

/// Run configuration file for the matching commands. Unknown keys are rejected.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Preset name, descriptor path, or inline descriptor object.
    #[serde(default)]
    pub system: Option<Value>,
    #[serde(default)]
    pub jet: Option<Value>,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub max_iter: Option<usize>,
    #[serde(rename = "N", default)]
    pub big_n: Option<usize>,
}

/// Matching inputs after merging flags with the run configuration.
struct MatchInput {
    data: BkmData,
    big_n: Option<usize>,
    jet: Vec<Vec<Q>>,
    tol: f64,
    max_iter: usize,
}

fn merged(a: &MatchArgs) -> Result<(Source, Option<usize>, Option<Value>, Option<f64>, Option<usize>)> {
    let cfg: RunConfig = match &a.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("bad run configuration: {e}")))?
        }
        None => RunConfig::default(),
    };
    let src = if a.system.ch || a.system.system.is_some() {
        source(&a.system)?
    } else {
        match cfg.system {
            Some(Value::String(s)) => source_of(&s)?,
            Some(v @ Value::Object(_)) => {
                Source::Descriptor(serde_json::from_value(v).map_err(|e| Error::Config(format!("bad system descriptor: {e}")))?)
            }
            Some(_) => return Err(Error::Config("`system` must be a name, a path or a descriptor object".into())),
            None => return Err(Error::Config("--system or --ch is required".into())),
        }
    };
    let jet = match &a.jet {
        Some(s) => Some(serde_json::from_str(s).map_err(|e| Error::Config(format!("bad --jet: {e}")))?),
        None => cfg.jet,
    };
    Ok((src, a.system.big_n.or(cfg.big_n), jet, a.tol.or(cfg.tol), a.max_iter.or(cfg.max_iter)))
}

fn match_input(a: &MatchArgs) -> Result<MatchInput> {
    let (src, big_n, jet, tol, max_iter) = merged(a)?;
    let (data, desc_n) = data_of(src)?;
    let jet = parse_jet(&jet.ok_or_else(|| Error::Config("--jet is required".into()))?, data.n)?;
    let d = NewtonOptions::default();
    Ok(MatchInput { data, big_n: big_n.or(desc_n), jet, tol: tol.unwrap_or(d.tol), max_iter: max_iter.unwrap_or(d.max_iter) })
}

fn json_q(v: &Value) -> Result<Q> {
    let s = match v {
        Value::Number(x) => x.to_string(),
        Value::String(s) => s.clone(),
        _ => return Err(Error::Config(format!("jet entry {v} is not a number"))),
    };
    parse_q(&s).ok_or_else(|| Error::Config(format!("cannot parse jet entry {s}")))
}

/// One list of derivative values per component.
pub fn parse_jet(v: &Value, n: usize) -> Result<Vec<Vec<Q>>> {
    let outer = v.as_array().ok_or_else(|| Error::Config("the jet must be a JSON list".into()))?;
    let comps: Vec<Vec<Q>> = if outer.iter().all(|x| x.is_array()) && !outer.is_empty() {
        outer.iter().map(|c| c.as_array().unwrap().iter().map(json_q).collect::<Result<_>>()).collect::<Result<_>>()?
    } else {
        vec![outer.iter().map(json_q).collect::<Result<_>>()?]
    };
    if comps.len() != n {
        return Err(Error::Config(format!("the system has {n} components, the jet has {}", comps.len())));
    }
    let k = comps[0].len();
    if k == 0 || comps.iter().any(|c| c.len() != k) {
        return Err(Error::Config("jet components must be nonempty and of equal length".into()));
    }
    Ok(comps)
}

enum Matched {
    Exact(MatchResult<Q>, Vec<TruncatedSeries<Q>>),
    Numeric(MatchResult<f64>, TruncatedSeries<f64>),
}

impl Matched {
    fn report(&self) -> Value {
        let r = match self {
            Matched::Exact(r, _) => r.report(),
            Matched::Numeric(r, _) => r.report(),
        };
        serde_json::to_value(r).unwrap_or(Value::Null)
    }

    fn system(&self) -> Result<StackelSystem> {
        match self {
            Matched::Exact(r, _) => r.system(),
            Matched::Numeric(r, _) => r.system(),
        }
    }

    fn initial_state(&self) -> Vec<f64> {
        match self {
            Matched::Exact(r, _) => r.w0.iter().chain(&r.p0).map(to_f64).collect(),
            Matched::Numeric(r, _) => r.w0.iter().chain(&r.p0).cloned().collect(),
        }
    }

    /// Target Taylor coefficients per component.
    fn target(&self) -> Vec<Vec<f64>> {
        match self {
            Matched::Exact(_, t) => t.iter().map(|s| s.coeffs().iter().map(to_f64).collect()).collect(),
            Matched::Numeric(_, t) => vec![t.coeffs().to_vec()],
        }
    }
}

fn constant_coeff(data: &BkmData, j: usize) -> Result<Q> {
    data.m_coeff(j).as_constant().ok_or_else(|| Error::Config("m must have numeric coefficients".into()))
}

fn run_match(inp: &MatchInput) -> Result<Matched> {
    let data = &inp.data;
    match data.deg_m() {
        0 => {
            let target: Vec<TruncatedSeries<Q>> = inp.jet.iter().map(|d| TruncatedSeries::from_derivatives(d)).collect();
            let res = match_deg_m0(data.n, &constant_coeff(data, 0)?, &target, inp.big_n)?;
            Ok(Matched::Exact(res, target))
        }
        1 if data.n == 1 => {
            let d: Vec<f64> = inp.jet[0].iter().map(to_f64).collect();
            let target = TruncatedSeries::from_derivatives(&d);
            let opts = NewtonOptions { tol: inp.tol, max_iter: inp.max_iter, big_n: inp.big_n, ..Default::default() };
            let res = match_linear_m(&constant_coeff(data, 1)?, &constant_coeff(data, 0)?, &target, &opts)?;
            Ok(Matched::Numeric(res, target))
        }
        _ => Err(Error::Config("matching covers constant m, and linear m with n = 1".into())),
    }
}

fn cmd_match(a: &MatchArgs, f: Format) -> Result<Outcome> {
    let m = run_match(&match_input(a)?)?;
    let r = m.report();
    Ok(Outcome::ok(if f == Format::Json { json_text(&r) } else { plain_text(&r) }))
}

fn cmd_verify(a: &MatchArgs, f: Format) -> Result<Outcome> {
    let inp = match_input(a)?;
    let m = run_match(&inp)?;
    let (rep, tol) = match &m {
        Matched::Exact(r, t) => (verify_match(r, t)?, 0.0),
        Matched::Numeric(r, t) => (verify_match(r, std::slice::from_ref(t))?, inp.tol),
    };
    let pass = rep.max_deviation <= tol && rep.level_residual <= tol.max(1e-12);
    let v = json!({
        "match": m.report(),
        "per_order": rep.per_order.iter().map(|&x| fmt_f64(x)).collect::<Vec<_>>(),
        "max_deviation": fmt_f64(rep.max_deviation),
        "level_residual": fmt_f64(rep.level_residual),
        "pass": pass,
    });
    let text = if f == Format::Json {
        json_text(&v)
    } else {
        let mut s = plain_text(&v["match"]);
        for k in ["per_order", "max_deviation", "level_residual", "pass"] {
            s.push_str(&format!("{k}: {}\n", plain_text(&v[k]).trim_end()));
        }
        s
    };
    Ok(Outcome { text, code: if pass { 0 } else { 1 } })
}

/// A random rational target: derivative values `p/q`, `|p| <= 9`, `1 <= q <= 6`.
pub fn random_jet(rng: &mut impl Rng, n: usize, k: usize) -> Vec<Vec<Q>> {
    (0..n).map(|_| (0..=k).map(|_| Q::new(rng.random_range(-9i64..=9).into(), rng.random_range(1i64..=6).into())).collect()).collect()
}

fn cmd_verify_random(a: &MatchArgs, count: usize, seed: u64, order: Option<usize>, f: Format) -> Result<Outcome> {
    let fixed = if a.system.ch || a.system.system.is_some() { Some(data_of(source(&a.system)?)?.0) } else { None };
    if let Some(d) = &fixed {
        if d.deg_m() != 0 {
            return Err(Error::Config("the random suite needs constant m".into()));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cases = Vec::new();
    let mut passed = 0;
    for i in 0..count {
        let data = fixed.clone().unwrap_or_else(|| BkmData::constant(rng.random_range(1..=3)));
        let k = order.unwrap_or_else(|| rng.random_range(0..=7));
        let jet = random_jet(&mut rng, data.n, k);
        let inp = MatchInput { data, big_n: a.system.big_n, jet, tol: 0.0, max_iter: 0 };
        let (big_n, dev, level) = match run_match(&inp)? {
            Matched::Exact(r, t) => {
                let rep = verify_match(&r, &t)?;
                (r.big_n, rep.max_deviation, rep.level_residual)
            }
            Matched::Numeric(..) => unreachable!("constant m takes the exact path"),
        };
        let ok = dev == 0.0 && level == 0.0;
        passed += ok as usize;
        cases.push(json!({ "case": i, "n": inp.data.n, "k": k, "N": big_n, "max_deviation": fmt_f64(dev), "level_residual": fmt_f64(level), "pass": ok }));
    }
    let text = if f == Format::Json {
        json_text(&json!({ "seed": seed, "passed": passed, "count": count, "cases": cases }))
    } else {
        let mut s: String = cases
            .iter()
            .map(|c| format!("case {} n={} k={} N={} deviation={} level={}\n", c["case"], c["n"], c["k"], c["N"], c["max_deviation"].as_str().unwrap_or(""), c["level_residual"].as_str().unwrap_or("")))
            .collect();
        s.push_str(&format!("passed {passed}/{count} (seed {seed})\n"));
        s
    };
    Ok(Outcome { text, code: if passed == count { 0 } else { 1 } })
}

struct SimulateArgs<'a> {
    w0: Option<&'a str>,
    p0: Option<&'a str>,
    consts: &'a [String],
    x_span: &'a str,
    t_span: &'a str,
    nx: usize,
    nt: usize,
    rel_tol: f64,
}

fn parse_span(s: &str) -> Result<(f64, f64)> {
    let bad = || Error::Config(format!("bad span '{s}', expected 'a,b'"));
    let (a, b) = s.split_once(',').ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

fn linspace((a, b): (f64, f64), n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![a];
    }
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

fn parse_f64_list(s: &str, what: &str) -> Result<Vec<f64>> {
    let v: Value = serde_json::from_str(s).map_err(|e| Error::Config(format!("bad {what}: {e}")))?;
    v.as_array()
        .ok_or_else(|| Error::Config(format!("{what} must be a JSON list")))?
        .iter()
        .map(|x| json_q(x).map(|q| to_f64(&q)))
        .collect()
}

fn parse_consts(items: &[String]) -> Result<Vec<(Var, f64)>> {
    items
        .iter()
        .map(|s| {
            let bad = || Error::Config(format!("bad constant '{s}', expected name=value"));
            let (n, v) = s.split_once('=').ok_or_else(bad)?;
            let var = Var::parse(n.trim()).ok_or_else(bad)?;
            let val = parse_q(v).map(|q| to_f64(&q)).ok_or_else(bad)?;
            Ok((var, val))
        })
        .collect()
}

/// The numeric system and initial state for `simulate`: from `--w0/--p0`
/// (placed on the zero level), or from a match of `--jet`.
fn simulation_start(a: &MatchArgs, s: &SimulateArgs) -> Result<(StackelSystem, NumericSystem, Vec<f64>)> {
    match (s.w0, s.p0) {
        (Some(w), Some(p)) => {
            let sys = build(&a.system)?;
            let consts = parse_consts(s.consts)?;
            let mut num = NumericSystem::new(&sys, &|v| consts.iter().find(|(c, _)| *c == v).map(|&(_, x)| x))?;
            let y0: Vec<f64> = parse_f64_list(w, "--w0")?.into_iter().chain(parse_f64_list(p, "--p0")?).collect();
            if y0.len() != 2 * sys.big_n() {
                return Err(Error::Config(format!("--w0 and --p0 need {} entries each", sys.big_n())));
            }
            num.set_zero_level(&y0);
            Ok((sys, num, y0))
        }
        (None, None) => {
            let m = run_match(&match_input(a)?)?;
            let sys = m.system()?;
            let num = NumericSystem::new(&sys, &|_| None)?;
            Ok((sys, num, m.initial_state()))
        }
        _ => Err(Error::Config("--w0 and --p0 go together".into())),
    }
}

fn cmd_simulate(a: &MatchArgs, s: &SimulateArgs, f: Format) -> Result<Outcome> {
    let (sys, num, y0) = simulation_start(a, s)?;
    let (w0, p0) = y0.split_at(num.big_n());
    let x_span = parse_span(s.x_span)?;
    if s.nt <= 1 {
        let traj = integrate_x(&num, w0, p0, x_span, s.rel_tol, s.rel_tol * 1e-2)?;
        if f == Format::Csv {
            return Ok(Outcome::ok(traj.to_csv(&num)));
        }
        let v = json!({
            "N": num.big_n(),
            "steps": traj.xs.len() - 1,
            "x_end": fmt_f64(traj.last_valid_x),
            "escape": traj.escape,
            "max_drift": fmt_f64(traj.max_drift()),
            "max_relative_drift": fmt_f64(traj.max_relative_drift()),
        });
        return Ok(Outcome::ok(if f == Format::Json { json_text(&v) } else { plain_text(&v) }));
    }
    let xs = linspace(x_span, s.nx);
    let ts = linspace(parse_span(s.t_span)?, s.nt);
    let field = joint_flow(&num, w0, p0, &xs, &ts, s.rel_tol)?;
    if f == Format::Csv {
        return Ok(Outcome::ok(field.to_csv(&num)));
    }
    let residual = pde_residual(&field, &sys.data).ok();
    let v = json!({
        "N": num.big_n(),
        "nx": xs.len(),
        "nt": ts.len(),
        "h": fmt_f64(field.h),
        "escaped": field.escaped,
        "evolution_residual_max": residual.as_ref().map(|r| r.evolution.iter().map(|n| fmt_f64(n.max)).collect::<Vec<_>>()),
        "constraint_residual_max": residual.as_ref().and_then(|r| r.constraint.map(|n| fmt_f64(n.max))),
    });
    Ok(Outcome::ok(if f == Format::Json { json_text(&v) } else { plain_text(&v) }))
}

fn cmd_reproduce(dir: &Path, regenerate: bool, f: Format) -> Result<Outcome> {
    let checks = fixtures::check_all(dir, regenerate)?;
    let failed = checks.iter().filter(|c| c.diff.is_some()).count();
    let text = if f == Format::Json {
        json_text(&json!({
            "dir": dir.display().to_string(),
            "regenerated": regenerate,
            "fixtures": checks.iter().map(|c| json!({ "name": c.name, "diff": c.diff })).collect::<Vec<_>>(),
        }))
    } else {
        let mut s = String::new();
        for c in &checks {
            s.push_str(&match (&c.diff, regenerate) {
                (_, true) => format!("wrote {}\n", c.name),
                (None, false) => format!("ok   {}\n", c.name),
                (Some(d), false) => format!("DIFF {}: {d}\n", c.name),
            });
        }
        if !regenerate {
            s.push_str(&format!("{}/{} fixtures reproduced\n", checks.len() - failed, checks.len()));
        }
        s
    };
    Ok(Outcome { text, code: if failed == 0 { 0 } else { 1 } })
}

fn cmd_plot_data(a: &MatchArgs, x_span: &str, nx: usize, f: Format) -> Result<Outcome> {
    let m = run_match(&match_input(a)?)?;
    let sys = m.system()?;
    let num = NumericSystem::new(&sys, &|_| None)?;
    let xs = linspace(parse_span(x_span)?, nx);
    let states = sample_flow(&num, Flow::X, &m.initial_state(), &xs, &IntegratorOptions::with_tol(1e-12, 1e-14))?;
    let target = m.target();
    let poly = |c: &[f64], x: f64| c.iter().rev().fold(0.0, |acc, a| acc * x + a);
    let n = target.len();
    let us: Vec<Vec<f64>> = states.iter().map(|s| s.as_ref().map_or(vec![f64::NAN; n], |s| num.u(s))).collect();
    let ts: Vec<Vec<f64>> = xs.iter().map(|&x| target.iter().map(|c| poly(c, x)).collect()).collect();
    let num_text = |x: f64| if x.is_finite() { fmt_f64(x) } else { "nan".into() };
    Ok(Outcome::ok(match f {
        Format::Json => json_text(&json!({
            "x": xs.iter().map(|&x| num_text(x)).collect::<Vec<_>>(),
            "u": us.iter().map(|r| r.iter().map(|&x| num_text(x)).collect::<Vec<_>>()).collect::<Vec<_>>(),
            "target": ts.iter().map(|r| r.iter().map(|&x| num_text(x)).collect::<Vec<_>>()).collect::<Vec<_>>(),
        })),
        _ => {
            let mut s = "x".to_string();
            for i in 1..=n {
                s.push_str(&format!(",u_{i}"));
            }
            for i in 1..=n {
                s.push_str(&format!(",target_{i}"));
            }
            s.push('\n');
            for ((x, u), t) in xs.iter().zip(&us).zip(&ts) {
                let cells: Vec<String> = std::iter::once(*x).chain(u.iter().cloned()).chain(t.iter().cloned()).map(num_text).collect();
                s.push_str(&(cells.join(",") + "\n"));
            }
            s
        }
    }))
}
