//! Command-line front end. [`run`] parses arguments, dispatches, and returns
//! the process exit code: 0 success, 2 input error, 3 infeasible, 4 numeric
//! failure.

pub mod selftest;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;

use crate::dmc::{
    composite_capacity_discrete, eio_capacity_discrete, DiscreteScenario, SubsetMask,
};
use crate::error::{Error, Result};
use crate::feedback::{design_feedback_codebook, codebook_size, quantizer::JOINT_MAX_BITS, WaterfillMode};
use crate::harness::{grid_model, run_sweep, write_csv, SweepSpec};
use crate::rician::{
    composite_capacity_post, composite_lower_bound_post, eio_capacity_post, eio_ml_capacity_post,
    mean_perfect_csi_capacity, percentile, posterior_params, MlConfig,
};

#[derive(Debug, Parser)]
#[command(name = "eio-lab", version, about = "Estimation-induced outage capacity calculator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Paper,
    Kkt,
}

impl From<ModeArg> for WaterfillMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Paper => WaterfillMode::Paper,
            ModeArg::Kkt => WaterfillMode::Kkt,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// EIO capacity of a discrete scenario file.
    Dmc {
        scenario: PathBuf,
        #[arg(long)]
        gamma: Option<f64>,
        /// Cost budget; the file must carry a cost table.
        #[arg(long)]
        budget: Option<f64>,
    },
    /// Runs a sweep spec and writes CSV.
    Sweep {
        spec: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        draws: Option<usize>,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        /// Comma-separated outage probabilities.
        #[arg(long, value_delimiter = ',')]
        gamma: Option<Vec<f64>>,
        /// Comma-separated feedback rates in bits.
        #[arg(long, value_delimiter = ',')]
        rfb: Option<Vec<u32>>,
    },
    /// Ricean rates for one channel estimate.
    Point {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 0.01)]
        gamma: f64,
        /// Estimate as `re,im`; defaults to the channel mean.
        #[arg(long, allow_hyphen_values = true)]
        estimate: Option<String>,
        /// Transmit power; defaults to the SNR's power.
        #[arg(long)]
        budget: Option<f64>,
    },
    /// Designs a feedback codebook and exports it as JSON.
    Quantizer {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 3)]
        rfb: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Design-set size (raised to 100 samples per cell).
        #[arg(long)]
        draws: Option<usize>,
        /// Held-out draws for the cell probabilities.
        #[arg(long, default_value_t = 1_000_000)]
        holdout: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Runs the built-in invariant checks.
    Selftest {
        /// Multiplies every Bessel value by 1 + EPS while checking.
        #[arg(long, hide = true, value_name = "EPS")]
        inject_bessel: Option<f64>,
    },
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    #[arg(long, default_value_t = 10.0, allow_hyphen_values = true)]
    pub snr_db: f64,
    #[arg(long, default_value_t = 1)]
    pub n_pilots: u32,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub rice_db: f64,
}

/// Six significant digits, plain notation where it stays short.
pub fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let e = x.abs().log10().floor() as i32;
    if (-5..6).contains(&e) {
        let s = format!("{:.*}", (5 - e).max(0) as usize, x);
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        format!("{x:.5e}")
    }
}

fn fmt_complex(z: Complex64) -> String {
    let sign = if z.im.is_sign_negative() { '-' } else { '+' };
    format!("{}{sign}{}i", sig6(z.re), sig6(z.im.abs()))
}

/// Parses `re,im`.
pub fn parse_complex(text: &str) -> Result<Complex64> {
    let bad = || Error::invalid("estimate", format!("expected re,im, got {text:?}"));
    let (re, im) = text.split_once(',').ok_or_else(bad)?;
    let re: f64 = re.trim().parse().map_err(|_| bad())?;
    let im: f64 = im.trim().parse().map_err(|_| bad())?;
    if !re.is_finite() || !im.is_finite() {
        return Err(bad());
    }
    Ok(Complex64::new(re, im))
}

fn read_input(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::invalid(path.display().to_string(), e.to_string()))
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    match dispatch(cli.command, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

/// Entry point for the binary.
pub fn main_from_env() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}

fn dispatch(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::Dmc { scenario, gamma, budget } => cmd_dmc(&scenario, gamma, budget, out),
        Command::Sweep {
            spec,
            out: path,
            seed,
            draws,
            mode,
            gamma,
            rfb,
        } => {
            let mut s = SweepSpec::from_json(&read_input(&spec)?)?;
            if let Some(v) = seed {
                s.seed = v;
            }
            if let Some(v) = draws {
                s.draws = v;
            }
            if let Some(v) = mode {
                s.mode = v.into();
            }
            if let Some(v) = gamma {
                s.gamma = v;
            }
            if let Some(v) = rfb {
                s.feedback_bits = v;
            }
            s.validate()?;
            cmd_sweep(&s, path.as_deref(), out, err)
        }
        Command::Point {
            model,
            gamma,
            estimate,
            budget,
        } => cmd_point(&model, gamma, estimate, budget, out),
        Command::Quantizer {
            model,
            rfb,
            seed,
            draws,
            holdout,
            out: path,
        } => cmd_quantizer(&model, rfb, seed, draws, holdout, path.as_deref(), out),
        Command::Selftest { inject_bessel } => Ok(cmd_selftest(inject_bessel, out)),
    }
}

fn subset_names(scn: &DiscreteScenario, s: SubsetMask) -> String {
    let names: Vec<&str> = s.members().into_iter().map(|i| scn.states[i].as_str()).collect();
    format!("{{{}}}", names.join(", "))
}

pub fn cmd_dmc(path: &Path, gamma: Option<f64>, budget: Option<f64>, out: &mut dyn Write) -> Result<i32> {
    let text = read_input(path)?;
    let mut scn = DiscreteScenario::from_json(&text).map_err(|e| match e {
        Error::Json(j) => Error::invalid(path.display().to_string(), j.to_string()),
        other => other,
    })?;
    if let Some(g) = gamma {
        scn = scn.with_gamma(g)?;
    }
    if let Some(b) = budget {
        let file = scn.to_file_struct();
        if !serde_json::from_str::<serde_json::Value>(&text)?
            .get("cost")
            .is_some_and(|c| !c.is_null())
        {
            return Err(Error::invalid("budget", "the scenario has no cost table"));
        }
        let cost = file.cost.unwrap_or_default().into_iter().flatten().collect();
        scn = scn.with_budget(cost, Some(b))?;
    }
    let eio = eio_capacity_discrete(&scn)?;
    let compound = eio_capacity_discrete(&scn.with_gamma(0.0)?)?;
    let composite = composite_capacity_discrete(&scn)?;
    writeln!(out, "scenario: {}", path.display())?;
    writeln!(out, "gamma: {}", sig6(scn.gamma))?;
    writeln!(out, "eio_capacity_bits: {}", sig6(eio.rate))?;
    writeln!(
        out,
        "best_subset: {} (mass {})",
        subset_names(&scn, eio.subset),
        sig6(eio.subset_mass)
    )?;
    writeln!(out, "worst_state: {}", scn.states[eio.worst_state])?;
    let probs: Vec<String> = eio.input.probs.iter().map(|&p| sig6(p)).collect();
    writeln!(out, "input_distribution: [{}]", probs.join(", "))?;
    if let Some(g) = eio.grid_rate {
        writeln!(out, "grid_check_bits: {}", sig6(g))?;
    }
    writeln!(out, "composite_capacity_bits: {}", sig6(composite.rate))?;
    writeln!(out, "compound_capacity_bits: {}", sig6(compound.rate))?;
    Ok(0)
}

/// Writes `contents` next to `path` and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| Error::invalid("out", "not a file path"))?
        .to_string_lossy();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path).inspect_err(|_| {
        let _ = std::fs::remove_file(&tmp);
    })?;
    Ok(())
}

pub fn cmd_sweep(spec: &SweepSpec, path: Option<&Path>, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let rows = run_sweep(spec)?;
    let mut buf = Vec::new();
    write_csv(&rows, &mut buf)?;
    let mut failures = 0;
    for r in &rows {
        if let Some(e) = &r.error {
            failures += 1;
            writeln!(
                err,
                "warning: {} at snr {} dB: {e}",
                r.curve,
                sig6(r.snr_db)
            )?;
        }
    }
    match path {
        Some(p) => {
            write_atomic(p, &buf)?;
            writeln!(out, "wrote {} rows to {}", rows.len(), p.display())?;
        }
        None => out.write_all(&buf)?,
    }
    Ok(if failures > 0 { 4 } else { 0 })
}

pub fn cmd_point(
    model: &ModelArgs,
    gamma: f64,
    estimate: Option<String>,
    budget: Option<f64>,
    out: &mut dyn Write,
) -> Result<i32> {
    let (prior, training, snr_power) = grid_model(model.snr_db, model.n_pilots, model.rice_db)?;
    let power = budget.unwrap_or(snr_power);
    let h = match estimate.as_deref() {
        Some(text) => parse_complex(text)?,
        None => prior.mean,
    };
    let noise = training.noise_var;
    let post = posterior_params(h, &prior, &training);
    let r = percentile(gamma, &post)?;
    writeln!(out, "estimate: {}", fmt_complex(h))?;
    writeln!(
        out,
        "posterior: mean {}, variance {}, delta {}",
        fmt_complex(post.mean),
        sig6(post.variance),
        sig6(post.delta)
    )?;
    writeln!(out, "r_opt: {}", sig6(r))?;
    writeln!(out, "eio_capacity_bits: {}", sig6(eio_capacity_post(gamma, &post, power, noise)?))?;
    writeln!(
        out,
        "composite_capacity_bits: {}",
        sig6(composite_capacity_post(&post, power, noise)?)
    )?;
    writeln!(
        out,
        "composite_lower_bound_bits: {}",
        sig6(composite_lower_bound_post(&post, power, noise)?)
    )?;
    match eio_ml_capacity_post(gamma, &post, h.arg(), power, noise, &MlConfig::default()) {
        Ok(ml) => writeln!(
            out,
            "eio_ml_rate_bits: {} (r {}, phi {})",
            sig6(ml.rate),
            sig6(ml.region.r_min),
            sig6(ml.region.phi_eps)
        )?,
        Err(Error::Infeasible(why)) => writeln!(out, "eio_ml_rate_bits: 0 ({why})")?,
        Err(e) => return Err(e),
    }
    writeln!(
        out,
        "mean_perfect_csi_bits: {}",
        sig6(mean_perfect_csi_capacity(&prior, power, noise)?)
    )?;
    Ok(0)
}

pub fn cmd_quantizer(
    model: &ModelArgs,
    rfb: u32,
    seed: u64,
    draws: Option<usize>,
    holdout: usize,
    path: Option<&Path>,
    out: &mut dyn Write,
) -> Result<i32> {
    let (prior, training, _) = grid_model(model.snr_db, model.n_pilots, model.rice_db)?;
    let per_cell = if rfb <= JOINT_MAX_BITS { codebook_size(rfb) } else { 1 << rfb };
    let design = draws.unwrap_or(20_000).max(100 * per_cell);
    let book = design_feedback_codebook(&prior, &training, rfb, design, holdout, seed)?;
    let json = book.to_json()?;
    match path {
        Some(p) => {
            write_atomic(p, json.as_bytes())?;
            writeln!(
                out,
                "wrote {} codepoints to {} (distortion {})",
                book.len(),
                p.display(),
                sig6(book.distortion)
            )?;
        }
        None => writeln!(out, "{json}")?,
    }
    Ok(0)
}

pub fn cmd_selftest(inject_bessel: Option<f64>, out: &mut dyn Write) -> i32 {
    let results = selftest::run_selftest(inject_bessel);
    let mut failed = 0;
    for r in &results {
        let tag = if r.passed { "PASS" } else { "FAIL" };
        if !r.passed {
            failed += 1;
        }
        let _ = writeln!(out, "{tag} {} ({}s): {}", r.name, sig6(r.seconds), r.detail);
    }
    let _ = writeln!(out, "{} of {} checks passed", results.len() - failed, results.len());
    if failed > 0 {
        1
    } else {
        0
    }
}
