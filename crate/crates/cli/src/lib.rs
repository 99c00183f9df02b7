//! `jfts-am`: density dumps, SNR samples, solved plans, ASE sweeps and the
//! acceptance checks from the command line.
//!
//! Exit codes: 0 success, 1 infeasible plan or failed check, 2 argument error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use jfts_core::ase::{self, Scenario, SweepConfig, CSV_HEADER, DEFAULT_SEED};
use jfts_core::ber::{LinkBudget, ModulationSet};
use jfts_core::jfts::{db_to_linear, precompute, sample_snr, DensityForm, JftsCoefficients, NumericsConfig};
use jfts_core::policies::{self, PolicyKind, SolverOptions};
use jfts_core::verify::{self, Mode};
use jfts_core::{scenario, Error};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(
    name = "jfts-am",
    version,
    about = "Adaptive M-QAM over composite Ricean/TWDP fading"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Density and CDF on a log-spaced SNR grid.
    Pdf {
        #[command(flatten)]
        common: Common,
        /// Average SNR in dB.
        #[arg(long, default_value_t = 10.0, allow_negative_numbers = true)]
        snr: f64,
        #[arg(long, default_value_t = 401)]
        points: usize,
        /// Grid spans [lo, hi]·γ̄.
        #[arg(long, default_value_t = 1e-3)]
        lo: f64,
        #[arg(long, default_value_t = 20.0)]
        hi: f64,
        /// Evaluate the literal coefficient-block series instead of the composite density.
        #[arg(long)]
        literal: bool,
    },
    /// Instantaneous SNR samples, one per line.
    Sample {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 10.0, allow_negative_numbers = true)]
        snr: f64,
        #[arg(long, default_value_t = 10_000)]
        count: usize,
    },
    /// Solve one policy at one operating point and print the plan document.
    Plan {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        policy: String,
        #[arg(long, default_value_t = 1e-3)]
        tber: f64,
        #[arg(long, default_value_t = 20.0, allow_negative_numbers = true)]
        snr: f64,
        #[arg(long, default_value_t = 8)]
        max_bits: u32,
    },
    /// ASE curves as CSV.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// `all` or a comma-separated list of policy names.
        #[arg(long, default_value = "all")]
        policy: String,
        /// Comma-separated targets.
        #[arg(long, value_delimiter = ',', default_value = "1e-3")]
        tber: Vec<f64>,
        /// start:stop:step in dB, or a single value.
        #[arg(long, default_value = "0:40:1", allow_hyphen_values = true)]
        snr: String,
        /// Monte Carlo samples per point; omit to leave the MC columns empty.
        #[arg(long)]
        mc_samples: Option<usize>,
        /// Draw bit errors instead of accumulating their expectation.
        #[arg(long)]
        bernoulli: bool,
        #[arg(long, default_value_t = 8)]
        max_bits: u32,
    },
    /// Run the acceptance checks and print a PASS/FAIL table.
    Verify {
        /// 10⁵ samples instead of 10⁶.
        #[arg(long)]
        quick: bool,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// Preset name (see --preset-file); `sweep` also takes a comma list or `all`.
    #[arg(long, default_value = "same-room", conflicts_with_all = ["k_db", "sh_db", "delta"])]
    scenario: String,
    #[arg(long, requires_all = ["sh_db", "delta"], allow_negative_numbers = true)]
    k_db: Option<f64>,
    #[arg(long, requires_all = ["k_db", "delta"], allow_negative_numbers = true)]
    sh_db: Option<f64>,
    #[arg(long, requires_all = ["k_db", "sh_db"])]
    delta: Option<f64>,
    /// TOML file with extra scenarios, one table each.
    #[arg(long)]
    preset_file: Option<PathBuf>,
    #[arg(long, env = "JFTS_SEED", default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Gauss-Hermite order of the coefficient block.
    #[arg(long)]
    m: Option<usize>,
    /// Last index of the Poisson/Bessel series.
    #[arg(long)]
    t_max: Option<usize>,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

impl Common {
    fn numerics(&self) -> Result<NumericsConfig, Error> {
        let mut cfg = NumericsConfig::default();
        if let Some(m) = self.m {
            cfg.m = m;
        }
        if let Some(t) = self.t_max {
            cfg.t_max = t;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn scenarios(&self, allow_many: bool) -> Result<Vec<Scenario>, Error> {
        if let (Some(k), Some(s), Some(d)) = (self.k_db, self.sh_db, self.delta) {
            return Ok(vec![scenario::inline(k, s, d)?]);
        }
        let extra = match &self.preset_file {
            Some(p) => scenario::load_presets(p).map_err(|e| match e {
                Error::Io(io) => Error::InvalidArgument(format!("cannot read {}: {io}", p.display())),
                e => e,
            })?,
            None => Vec::new(),
        };
        let names: Vec<&str> = self.scenario.split(',').map(str::trim).collect();
        if names == ["all"] {
            if !allow_many {
                return Err(Error::InvalidArgument("this subcommand takes a single scenario".into()));
            }
            let mut all = extra.clone();
            all.extend(
                scenario::all_presets()
                    .into_iter()
                    .filter(|p| !extra.iter().any(|e| e.name == p.name)),
            );
            return Ok(all);
        }
        if names.len() > 1 && !allow_many {
            return Err(Error::InvalidArgument("this subcommand takes a single scenario".into()));
        }
        names.iter().map(|n| scenario::resolve(n, &extra)).collect()
    }
}

/// Parses `start:stop:step` (or a single value) into an increasing dB grid.
pub fn parse_grid(s: &str) -> Result<Vec<f64>, Error> {
    let bad = || Error::InvalidArgument(format!("bad SNR grid '{s}'; expected start:stop:step in dB"));
    let parts: Vec<f64> = s
        .split(':')
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_, _>>()?;
    let (start, stop, step) = match parts[..] {
        [x] => (x, x, 1.0),
        [a, b, c] => (a, b, c),
        _ => return Err(bad()),
    };
    if !(start.is_finite() && stop.is_finite() && step > 0.0 && stop >= start) {
        return Err(bad());
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
    if n > 100_000 {
        return Err(Error::InvalidArgument(format!("SNR grid '{s}' has {n} points")));
    }
    // rounding to 1e-9 dB keeps 0.1-steps from printing as 0.30000000000000004
    Ok((0..n)
        .map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9)
        .collect())
}

fn parse_policies(s: &str) -> Result<Vec<PolicyKind>, Error> {
    if s.trim() == "all" {
        return Ok(PolicyKind::ALL.to_vec());
    }
    s.split(',').map(str::parse).collect()
}

fn header(common: &Common, sc: &Scenario, cfg: &NumericsConfig) -> String {
    let p = &sc.params;
    format!(
        "# jfts-am {VERSION} seed={} scenario={} K_dB={} Sh_dB={} delta={} P1={} P2={} m={} t_max={} shadow_log_step={} phase_points={} regions=[lower,upper) indexed by bits per symbol, bits=0 is no transmission\n",
        common.seed,
        sc.name,
        p.k_db(),
        p.sh_db(),
        p.delta,
        p.p1,
        p.p2,
        cfg.m,
        cfg.t_max,
        cfg.shadow_log_step,
        cfg.phase_points
    )
}

fn emit(output: Option<&PathBuf>, text: &str) -> Result<(), Error> {
    match output {
        Some(p) => std::fs::write(p, text)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
        }
    }
    Ok(())
}

fn coefficients(sc: &Scenario, cfg: &NumericsConfig) -> Result<JftsCoefficients, Error> {
    precompute(&sc.params, cfg)
}

fn exec(cmd: Command) -> Result<i32, Error> {
    match cmd {
        Command::Pdf {
            common,
            snr,
            points,
            lo,
            hi,
            literal,
        } => {
            if points < 2 || !(lo > 0.0 && hi > lo) {
                return Err(Error::InvalidArgument("need points >= 2 and 0 < lo < hi".into()));
            }
            let cfg = common.numerics()?;
            let sc = common.scenarios(false)?.remove(0);
            let co = coefficients(&sc, &cfg)?;
            let gb = db_to_linear(snr);
            let form = if literal {
                DensityForm::Literal
            } else {
                DensityForm::Composite
            };
            let d = co.density_form(form, gb)?;
            let mut text = header(&common, &sc, &cfg);
            let _ = writeln!(text, "# gamma_bar_db={snr} form={form:?}");
            text.push_str("gamma,pdf,cdf\n");
            let (a, b) = (lo.ln(), hi.ln());
            for j in 0..points {
                let g = gb * (a + (b - a) * j as f64 / (points - 1) as f64).exp();
                let _ = writeln!(text, "{g:.10e},{:.10e},{:.10e}", d.pdf(g)?, d.cdf(g));
            }
            emit(common.output.as_ref(), &text)?;
            Ok(0)
        }
        Command::Sample { common, snr, count } => {
            let cfg = common.numerics()?;
            let sc = common.scenarios(false)?.remove(0);
            let s = sample_snr(&sc.params, db_to_linear(snr), count, common.seed)?;
            let mut text = header(&common, &sc, &cfg);
            let _ = writeln!(text, "# gamma_bar_db={snr} count={count}");
            text.push_str("gamma\n");
            for g in &s.samples {
                let _ = writeln!(text, "{g:.10e}");
            }
            emit(common.output.as_ref(), &text)?;
            Ok(0)
        }
        Command::Plan {
            common,
            policy,
            tber,
            snr,
            max_bits,
        } => {
            let kind: PolicyKind = policy.parse()?;
            let cfg = common.numerics()?;
            let sc = common.scenarios(false)?.remove(0);
            let co = coefficients(&sc, &cfg)?;
            let link = LinkBudget::from_db(snr, tber)?;
            let mods = ModulationSet::new((0..=max_bits).collect())?;
            let plan = policies::solve(kind, &link, &mods, &co, &SolverOptions::default())?;
            let ase = ase::ase_analytic(&plan, &co, &link)?;
            let mut text = header(&common, &sc, &cfg);
            let _ = writeln!(text, "# ase_analytic={ase:.10e}");
            text.push_str(&plan.to_json());
            text.push('\n');
            emit(common.output.as_ref(), &text)?;
            Ok(0)
        }
        Command::Sweep {
            common,
            policy,
            tber,
            snr,
            mc_samples,
            bernoulli,
            max_bits,
        } => {
            let kinds = parse_policies(&policy)?;
            let grid = parse_grid(&snr)?;
            let cfg = common.numerics()?;
            let scenarios = common.scenarios(true)?;
            let sweep_cfg = SweepConfig {
                mods: ModulationSet::new((0..=max_bits).collect())?,
                mc_samples,
                seed: common.seed,
                mc: ase::McOptions { bernoulli },
                ..Default::default()
            };
            let mut text = String::new();
            for sc in &scenarios {
                text.push_str(&header(&common, sc, &cfg));
            }
            let _ = writeln!(
                text,
                "# snr={snr} mc_samples={} bernoulli={bernoulli}",
                mc_samples.map_or("none".to_string(), |n| n.to_string())
            );
            text.push_str(CSV_HEADER);
            text.push('\n');
            for sc in &scenarios {
                let co = coefficients(sc, &cfg)?;
                for &kind in &kinds {
                    for &t in &tber {
                        let curve = ase::sweep(kind, sc, &co, t, &grid, &sweep_cfg)?;
                        for p in curve
                            .points
                            .iter()
                            .filter_map(|p| p.infeasible.as_ref().map(|m| (p.gamma_bar_db, m)))
                        {
                            eprintln!(
                                "warning: {kind} {} tber={t:e} at {} dB infeasible: {}",
                                sc.name, p.0, p.1
                            );
                        }
                        text.push_str(&ase::csv_rows(&curve));
                    }
                }
            }
            emit(common.output.as_ref(), &text)?;
            Ok(0)
        }
        Command::Verify { quick, output } => {
            let mode = if quick { Mode::Quick } else { Mode::Full };
            let reports = verify::run_all(mode);
            let mut text = format!("# jfts-am {VERSION} verify mode={mode:?} samples={}\n", mode.samples());
            for r in &reports {
                let _ = writeln!(text, "{}", r.summary());
            }
            text.push('\n');
            for r in &reports {
                let _ = write!(text, "{r}");
            }
            let failed = reports.iter().filter(|r| !r.passed).count();
            let _ = writeln!(text, "{} of {} criteria passed", reports.len() - failed, reports.len());
            emit(output.as_ref(), &text)?;
            Ok(if failed == 0 { 0 } else { 1 })
        }
    }
}

/// Runs the CLI on `argv` (program name first) and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match exec(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::InvalidArgument(_) | Error::Parse(_) | Error::Domain(_) => 2,
                _ => 1,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(parse_grid("0:40:1").unwrap().len(), 41);
        assert_eq!(parse_grid("0:1:0.1").unwrap()[3], 0.3);
        assert_eq!(parse_grid("-5:5:5").unwrap(), vec![-5.0, 0.0, 5.0]);
        assert_eq!(parse_grid("12").unwrap(), vec![12.0]);
        for bad in ["", "1:2", "5:0:1", "0:10:0", "a:b:c", "0:10:-1"] {
            assert!(parse_grid(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn policy_lists() {
        assert_eq!(parse_policies("all").unwrap().len(), 4);
        assert_eq!(parse_policies("crate-apow-iber,arate-cpow-aber").unwrap().len(), 2);
        assert!(parse_policies("fast")
            .unwrap_err()
            .to_string()
            .contains("arate-cpow-iber"));
    }
}
