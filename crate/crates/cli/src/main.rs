use clap::{Args, Parser, Subcommand};
use qbaxter_cli::config::{parse_complex, ConfigError, Overrides, Preset, RunConfig, Scenario};
use qbaxter_cli::{run, write_atomic, Check};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "qbaxter", version, about = "Verification suites for hyperbolic Ruijsenaars Q-operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate S₂ on a grid and write CSV
    EvalS2(Common),
    /// Double sine identities, representations and residues
    VerifyS2(Common),
    /// Trigonometric kernel-function identity
    VerifyKernelIdentity(Common),
    /// Exact duality identity in big rationals
    VerifyTheorem2(Common),
    /// Exact q-Pochhammer, residue-cancellation and recursion lemmas
    VerifyLemmasQ(Common),
    /// Residue blocks, double zeros and series against quadrature
    VerifyResidueSeries(Common),
    /// Q(λ) against the reflected Q(-λ)
    VerifyQCommutativity(Common),
    /// Macdonald operators through the Q-operator
    VerifyMqCommutation(Common),
    /// Two-particle eigenfunction relations
    VerifyEigenfunctionN2(Common),
    /// Every suite of the preset
    All(Common),
}

#[derive(Args, Clone)]
struct Common {
    /// TOML configuration file; flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    /// Periods as two `re,im` values
    #[arg(long, num_args = 2, value_names = ["OMEGA1", "OMEGA2"], allow_hyphen_values = true)]
    omega: Vec<String>,
    /// Coupling `re,im`
    #[arg(long, allow_hyphen_values = true)]
    g: Option<String>,
    /// Tolerance override `key=value`, repeatable
    #[arg(long = "tol")]
    tolerances: Vec<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long = "K")]
    k: Option<i64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Real-part grid `start:stop:step`
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<String>,
    /// Imaginary-part grid `start:stop:step`
    #[arg(long, allow_hyphen_values = true)]
    im_grid: Option<String>,
    /// Spectral parameter `re,im`
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<String>,
    /// Report path; the report goes to stdout otherwise
    #[arg(long)]
    out: Option<PathBuf>,
    /// CSV path for eval-s2; stdout otherwise
    #[arg(long)]
    csv: Option<PathBuf>,
}

fn complex_flag(field: &str, v: &Option<String>) -> Result<Option<[f64; 2]>, ConfigError> {
    v.as_deref().map(parse_complex).transpose().map_err(|m| ConfigError::new(field, m))
}

fn resolve(c: &Common) -> Result<RunConfig, ConfigError> {
    let mut cfg = match &c.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| ConfigError::new("--config", format!("{}: {e}", path.display())))?;
            RunConfig::from_toml(&text)?
        }
        None => RunConfig::default(),
    };
    let (omega1, omega2) = match c.omega.as_slice() {
        [] => (None, None),
        [a, b] => (complex_flag("params.omega1", &Some(a.clone()))?, complex_flag("params.omega2", &Some(b.clone()))?),
        _ => return Err(ConfigError::new("params.omega", "expected two values")),
    };
    let mut tolerances = Vec::new();
    for t in &c.tolerances {
        let (k, v) = t.split_once('=').ok_or_else(|| ConfigError::new("tolerances", format!("`{t}` is not key=value")))?;
        let v = v.parse::<f64>().map_err(|_| ConfigError::new(format!("tolerances.{k}"), format!("`{v}` is not a number")))?;
        tolerances.push((k.to_string(), v));
    }
    let o = Overrides {
        seed: c.seed,
        preset: c.preset,
        omega1,
        omega2,
        g: complex_flag("params.g", &c.g)?,
        tolerances,
        scenario: Scenario {
            n: c.n,
            k: c.k,
            trials: c.trials,
            grid: c.grid.clone(),
            im_grid: c.im_grid.clone(),
            lambda: complex_flag("scenario.lambda", &c.lambda)?,
        },
    };
    cfg.apply(&o)?;
    Ok(cfg)
}

fn main() -> ExitCode {
    qbaxter::par::init_threads();
    let cli = Cli::parse();
    let (check, common) = match &cli.command {
        Command::EvalS2(c) => (Check::EvalS2, c),
        Command::VerifyS2(c) => (Check::VerifyS2, c),
        Command::VerifyKernelIdentity(c) => (Check::VerifyKernelIdentity, c),
        Command::VerifyTheorem2(c) => (Check::VerifyTheorem2, c),
        Command::VerifyLemmasQ(c) => (Check::VerifyLemmasQ, c),
        Command::VerifyResidueSeries(c) => (Check::VerifyResidueSeries, c),
        Command::VerifyQCommutativity(c) => (Check::VerifyQCommutativity, c),
        Command::VerifyMqCommutation(c) => (Check::VerifyMqCommutation, c),
        Command::VerifyEigenfunctionN2(c) => (Check::VerifyEigenfunctionN2, c),
        Command::All(c) => (Check::All, c),
    };
    let cfg = match resolve(common) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    };
    let report = run(check, &cfg);
    let json = report.to_json();
    let written = (|| -> std::io::Result<()> {
        if let Some(csv) = &report.csv {
            match &common.csv {
                Some(path) => write_atomic(path, csv)?,
                None => print!("{csv}"),
            }
        }
        match &common.out {
            Some(path) => write_atomic(path, &json)?,
            None if report.csv.is_none() => println!("{json}"),
            None => {}
        }
        Ok(())
    })();
    if let Err(e) = written {
        eprintln!("cannot write output: {e}");
        return ExitCode::from(2);
    }
    eprintln!("{}: {}", report.check, if report.pass { "pass" } else { "FAIL" });
    if report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
