use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ffavg::averaging::{estimate_norm, InputFamily, NormMethod, OutputNorm, RestrictedAveragingOperator, SearchOptions};
use ffavg::chars::gauss_sum;
use ffavg::experiments::{
    render, run_sweep, scan, scan_to_csv, OutputFormat, SweepSpec, VarietySpec, DEFAULT_CAP, DEFAULT_THRESHOLD,
};
use ffavg::exponent::parse_rational;
use ffavg::fourier::{check_identities, Grid};
use ffavg::regions::{necessary_region, region_main1, region_main2, Region};
use ffavg::{Error, Exponent, Prime};
use num_rational::BigRational;
use serde_json::json;

#[derive(Parser)]
#[command(name = "ffavg", version, about = "Restricted averaging operators over finite fields")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Gauss sum of the quadratic character.
    Gauss {
        #[arg(long)]
        q: u64,
    },
    /// Transform identities on random inputs.
    Fourier {
        #[command(subcommand)]
        action: FourierAction,
    },
    /// Size and Fourier decay of a variety.
    Variety {
        #[arg(long)]
        kind: Kind,
        #[arg(long)]
        q: u64,
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 1)]
        j: i64,
        #[command(subcommand)]
        action: VarietyAction,
    },
    /// Estimate A_V(p -> r) at one prime.
    Norm {
        #[arg(long)]
        variety: VarietySpec,
        #[arg(long)]
        q: u64,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        p: Exponent,
        #[arg(long)]
        r: Exponent,
        #[command(flatten)]
        estimator: EstimatorArgs,
    },
    /// Exponent-region polygon and grid classification.
    Region {
        #[arg(long)]
        theorem: RegionChoice,
        #[arg(long)]
        d: u32,
        /// Dimension of an affine subspace inside the variety.
        #[arg(long)]
        alpha: Option<String>,
        #[arg(long, default_value_t = 20)]
        grid: u32,
    },
    /// Estimate one exponent pair across primes and fit the growth in q.
    Sweep {
        #[command(flatten)]
        sweep: SweepArgs,
        /// The pair 1/p,1/r.
        #[arg(long)]
        point: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "csv")]
        format: Format,
    },
    /// Sweep every pair (i/N, j/N) and compare with the proved region.
    Scan {
        #[command(flatten)]
        sweep: SweepArgs,
        #[arg(long)]
        grid: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum FourierAction {
    Check {
        #[arg(long)]
        q: u64,
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 1e-10)]
        tolerance: f64,
    },
}

#[derive(Subcommand)]
enum VarietyAction {
    Info,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Sphere,
    Paraboloid,
    Cone,
}

#[derive(Clone, Copy, ValueEnum)]
enum RegionChoice {
    Main1,
    Main2,
    Necessary,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    General,
    Indicators,
}

#[derive(Clone, Copy, ValueEnum)]
enum Output {
    Strong,
    Weak,
}

#[derive(Args)]
struct EstimatorArgs {
    #[arg(long, default_value = "auto")]
    method: NormMethod,
    #[arg(long, default_value_t = 512)]
    budget: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "general")]
    family: Family,
    #[arg(long, default_value = "strong")]
    output: Output,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    variety: VarietySpec,
    #[arg(long)]
    d: usize,
    /// Comma-separated, strictly increasing.
    #[arg(long, value_delimiter = ',', required = true)]
    primes: Vec<u64>,
    #[command(flatten)]
    estimator: EstimatorArgs,
    #[arg(long, default_value_t = DEFAULT_CAP)]
    cap: u64,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    threshold: f64,
    /// Admit primes q = 3 mod 4 for the even-dimensional cone.
    #[arg(long)]
    allow_minus_one_nonsquare: bool,
}

impl EstimatorArgs {
    fn options(&self) -> SearchOptions {
        SearchOptions {
            budget: self.budget,
            seed: self.seed,
            family: match self.family {
                Family::General => InputFamily::General,
                Family::Indicators => InputFamily::Indicators,
            },
            output: match self.output {
                Output::Strong => OutputNorm::Strong,
                Output::Weak => OutputNorm::Weak,
            },
            ..SearchOptions::default()
        }
    }
}

impl SweepArgs {
    fn spec(&self, point: &str) -> Result<SweepSpec, Error> {
        let options = self.estimator.options();
        let mut spec = SweepSpec::new(self.variety.clone(), self.d, point.parse()?, self.primes.clone());
        spec.method = self.estimator.method;
        spec.budget = options.budget;
        spec.seed = options.seed;
        spec.family = options.family;
        spec.output = options.output;
        spec.cap = self.cap;
        spec.threshold = self.threshold;
        spec.allow_minus_one_nonsquare = self.allow_minus_one_nonsquare;
        Ok(spec)
    }
}

fn write_output(out: Option<&PathBuf>, text: &str) -> Result<(), Error> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|source| Error::Io {
            path: path.clone(),
            source,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_json(value: &impl serde::Serialize) -> Result<String, Error> {
    serde_json::to_string_pretty(value).map_err(|e| Error::Serialization(e.to_string()))
}

fn region_csv(region: &Region, grid: u32) -> Result<String, Error> {
    let mut s = String::from("row,inv_p,inv_r,class\n");
    for v in region.vertices() {
        let _ = writeln!(s, "vertex,{},{},", v.inv_p(), v.inv_r());
    }
    for m in region.markers() {
        let status = region.classify(&m.point).as_str();
        let _ = writeln!(s, "marker-{},{},{},{}", m.name, m.point.inv_p(), m.point.inv_r(), status);
    }
    for (e, class) in region.classify_grid(grid)? {
        let _ = writeln!(s, "cell,{},{},{}", e.inv_p(), e.inv_r(), class.as_str());
    }
    Ok(s)
}

fn parse_alpha(alpha: &str) -> Result<BigRational, Error> {
    let r = parse_rational(alpha)?;
    Ok(BigRational::new((*r.numer()).into(), (*r.denom()).into()))
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Gauss { q } => {
            let q = Prime::new(q)?;
            let g = gauss_sum(q);
            let value = json!({
                "q": q.get(),
                "re": g.value.re,
                "im": g.value.im,
                "magnitude": g.magnitude(),
                "magnitude_over_sqrt_q": g.magnitude() / (q.get() as f64).sqrt(),
            });
            println!("{}", to_json(&value)?);
        }
        Command::Fourier {
            action:
                FourierAction::Check {
                    q,
                    d,
                    seed,
                    trials,
                    tolerance,
                },
        } => {
            let grid = Grid::new(Prime::new(q)?, d)?;
            let report = check_identities(grid, trials, seed, tolerance)?;
            println!("{}", to_json(&report)?);
            if !report.passed {
                return Err(Error::InvalidParameter("transform identities failed".into()));
            }
        }
        Command::Variety {
            kind,
            q,
            d,
            j,
            action: VarietyAction::Info,
        } => {
            let spec = match kind {
                Kind::Sphere => VarietySpec::Sphere { j },
                Kind::Paraboloid => VarietySpec::Paraboloid,
                Kind::Cone => VarietySpec::Cone,
            };
            let variety = spec.build(Prime::new(q)?, d)?;
            println!("{}", to_json(&variety.regularity_report())?);
        }
        Command::Norm {
            variety,
            q,
            d,
            p,
            r,
            estimator,
        } => {
            let variety = Arc::new(variety.build(Prime::new(q)?, d)?);
            let op = RestrictedAveragingOperator::new(variety);
            let estimate = estimate_norm(&op, p, r, estimator.method, &estimator.options())?;
            println!("{}", to_json(&estimate)?);
        }
        Command::Region {
            theorem,
            d,
            alpha,
            grid,
        } => {
            let region = match theorem {
                RegionChoice::Main1 => region_main1(d)?,
                RegionChoice::Main2 => region_main2(d)?,
                RegionChoice::Necessary => {
                    let alpha = alpha.as_deref().map(parse_alpha).transpose()?;
                    necessary_region(d, alpha.as_ref())?
                }
            };
            print!("{}", region_csv(&region, grid)?);
        }
        Command::Sweep {
            sweep,
            point,
            out,
            format,
        } => {
            let spec = sweep.spec(&point)?;
            let result = run_sweep(&spec)?;
            let format = match format {
                Format::Csv => OutputFormat::Csv,
                Format::Json => OutputFormat::Json,
            };
            write_output(out.as_ref(), &render(&result, format)?)?;
            let (lo, hi) = result.fit.slope_ci();
            eprintln!(
                "slope {:.4} [{:.4}, {:.4}], verdict {}",
                result.fit.slope,
                lo,
                hi,
                result.verdict.as_str()
            );
            if result.open_regime {
                eprintln!("note: q = 3 mod 4 on the even cone; necessity is unresolved there");
            }
        }
        Command::Scan { sweep, grid, out } => {
            let spec = sweep.spec("0,0")?;
            let cells = scan(&spec, grid)?;
            write_output(out.as_ref(), &scan_to_csv(&cells)?)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::CapExceeded { .. } => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
