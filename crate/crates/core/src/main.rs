use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use halving_lab::artifact::PointSetArtifact;
use halving_lab::construction::blocks::{assemble_blocks, pad_to_count, verify_assembly, BlockParameters};
use halving_lab::construction::highdim::{
    assemble, distance_report, parity_fix, sphere_directions, verify_highdim, HighDimParameters,
};
use halving_lab::construction::recursive::{build, finalize, verify_halving_all};
use halving_lab::construction::rosette::{build_rosette, density_check, pad_regular_polygon};
use halving_lab::exact::{pow2, ExactScalar};
use halving_lab::io::{emit_svg, read_json, to_csv, to_json};
use halving_lab::metrics::{check_bounds, counts};
use halving_lab::oracle::{
    count_halving_hyperplanes_with, count_halving_lines_naive_with, count_halving_lines_sweep_with,
    HalvingOracle,
};
use halving_lab::par::{self, Execution};
use halving_lab::report::{CheckOutcome, VerificationReport};
use halving_lab::Result;

const THREADS_ENV: &str = "HALVING_LAB_THREADS";

#[derive(Parser)]
#[command(name = "halving-lab", version, about = "Construct and verify point sets with many halving lines")]
struct Cli {
    /// Run every verifier on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    /// Write the verification report as JSON.
    #[arg(long, global = true)]
    report: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(clap::Args)]
struct Output {
    /// Destination of the point set (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Add lossy decimal columns to CSV output.
    #[arg(long)]
    decimals: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum OracleChoice {
    Naive,
    Sweep,
    Both,
}

#[derive(Subcommand)]
enum Command {
    /// Recursive planar construction.
    Construct1 {
        #[arg(long)]
        order: u32,
        #[arg(long)]
        index: u32,
        /// Scale x by 8/9 (diagonal graphs only).
        #[arg(long)]
        finalize: bool,
        #[command(flatten)]
        output: Output,
    },
    /// Rotated and scaled copies of a base set.
    Construct2 {
        #[arg(long)]
        base: PathBuf,
        #[arg(long)]
        blocks: u32,
        #[arg(long, default_value_t = 9)]
        quant_exp: u32,
        /// Pad with points far above and below to this even count.
        #[arg(long)]
        pad: Option<usize>,
        #[command(flatten)]
        output: Output,
    },
    /// n+1 rotated lifted copies of a base set.
    Rosette {
        #[arg(long)]
        base: PathBuf,
        /// Lift with epsilon = 2^-E (default 2^-12 / n^2).
        #[arg(long)]
        epsilon_exp: Option<i64>,
        /// Pad the base on a circle of radius 3 to this even count first.
        #[arg(long)]
        pad: Option<usize>,
        #[command(flatten)]
        output: Output,
    },
    /// Planar blocks on separated lines through the origin of d-space.
    Highdim {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 2)]
        a_blocks: usize,
        /// Defaults to max(2, d - 2).
        #[arg(long)]
        b_blocks: Option<usize>,
        /// Planar set of m points used as the important part; the recursive
        /// construction is used when m is 2, 6, 30 or 290.
        #[arg(long)]
        important: Option<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
    /// Count halving lines or hyperplanes and certify the claimed ones.
    Verify {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "both")]
        oracle: OracleChoice,
    },
    /// max/min distance ratio against gamma n^(1/d).
    Density {
        #[arg(long)]
        input: PathBuf,
        /// Rational, e.g. 4 or 7/2.
        #[arg(long)]
        gamma: String,
    },
    Plot {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Point and segment counts of the recursion with their bounds.
    Counts {
        #[arg(long)]
        max: u32,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = std::env::var(THREADS_ENV).ok().and_then(|v| v.parse().ok()) {
        par::init_threads(threads);
    }
    match run(&cli) {
        Ok(report) => {
            let passed = report.passed();
            eprint!("{report}");
            if let Some(path) = &cli.report {
                let text = serde_json::to_string_pretty(&report).expect("report serializes");
                if let Err(e) = std::fs::write(path, text + "\n") {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            }
            if passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn emit(a: &PointSetArtifact, output: &Output) -> Result<()> {
    let text = match output.format {
        Format::Json => to_json(a)?,
        Format::Csv => to_csv(a, output.decimals),
    };
    match &output.out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn important_part(m: usize, file: Option<&Path>) -> Result<PointSetArtifact> {
    if let Some(path) = file {
        return read_json(path);
    }
    let level = match m {
        2 => 0,
        6 => 1,
        30 => 2,
        290 => 3,
        _ => {
            return Err(halving_lab::Error::InvalidParameter(format!(
                "no built-in important part with {m} points; pass --important"
            )))
        }
    };
    let g = build(level, level)?;
    if level == 0 {
        g.to_artifact()
    } else {
        finalize(&g)
    }
}

fn run(cli: &Cli) -> Result<VerificationReport> {
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::default()
    };
    match &cli.command {
        Command::Construct1 {
            order,
            index,
            finalize: finalized,
            output,
        } => {
            let g = build(*order, *index)?;
            let report = verify_halving_all(&g, exec)?;
            let a = if *finalized { finalize(&g)? } else { g.to_artifact()? };
            emit(&a, output)?;
            Ok(report)
        }
        Command::Construct2 {
            base,
            blocks,
            quant_exp,
            pad,
            output,
        } => {
            let params = BlockParameters::new(read_json(base)?, *blocks).with_quantization(*quant_exp);
            let set = assemble_blocks(&params)?;
            let mut report = verify_assembly(&set, exec)?;
            let mut a = set.to_artifact()?;
            if let Some(target) = pad {
                a = pad_to_count(&a, *target)?;
                report.extend(certify_claims(&a, exec)?);
            }
            emit(&a, output)?;
            Ok(report)
        }
        Command::Rosette {
            base,
            epsilon_exp,
            pad,
            output,
        } => {
            let mut b = read_json(base)?;
            if let Some(target) = pad {
                b = pad_regular_polygon(&b, *target)?;
            }
            let built = build_rosette(&b, epsilon_exp.map(|e| pow2(-e)), exec)?;
            emit(&built.artifact, output)?;
            Ok(built.report)
        }
        Command::Highdim {
            dim,
            m,
            seed,
            a_blocks,
            b_blocks,
            important,
            output,
        } => {
            let important = important_part(*m, important.as_deref())?;
            let mut params = HighDimParameters::new(*dim, *m, *a_blocks, b_blocks.unwrap_or(dim.saturating_sub(2).max(2)));
            params.seed = *seed;
            let dirs = sphere_directions(*m, *dim, *seed)?;
            let assembly = assemble(&params, &important, &dirs)?;
            let fix = parity_fix(&assembly, exec)?;
            let mut report = verify_highdim(&fix, exec)?;
            report.extend(distance_report(&assembly)?);
            emit(&fix.assembly.to_artifact(fix.retained.clone())?, output)?;
            Ok(report)
        }
        Command::Verify { input, oracle } => verify(&read_json(input)?, *oracle, exec),
        Command::Density { input, gamma } => {
            let a = read_json(input)?;
            let gamma: ExactScalar = gamma
                .parse()
                .map_err(|_| halving_lab::Error::InvalidParameter(format!("gamma {gamma:?} is not rational")))?;
            density_check(&a, &gamma, a.dimension as u32)
        }
        Command::Plot { input, out } => {
            let a = read_json(input)?;
            std::fs::write(out, emit_svg(&a)?)?;
            let mut check = CheckOutcome::new("plot written");
            check.note(out.display().to_string());
            Ok(VerificationReport::single("plot", check))
        }
        Command::Counts { max } => {
            let table = counts(*max);
            println!("i,a,n,m");
            for row in &table.rows {
                println!("{},{},{},{}", row.i, row.a, row.n, row.m);
            }
            Ok(check_bounds(&table))
        }
    }
}

fn certify_claims(a: &PointSetArtifact, exec: Execution) -> Result<VerificationReport> {
    let oracle = HalvingOracle::new(a.points.clone(), a.dimension)?;
    Ok(VerificationReport::single("claimed tuples", oracle.certify(&a.claimed_halving, exec)))
}

fn verify(a: &PointSetArtifact, choice: OracleChoice, exec: Execution) -> Result<VerificationReport> {
    let mut report = VerificationReport::new(format!("{} points in dimension {}", a.len(), a.dimension));
    let mut results = Vec::new();
    if a.dimension == 2 {
        if matches!(choice, OracleChoice::Naive | OracleChoice::Both) {
            results.push(("naive", count_halving_lines_naive_with(&a.points, exec)?));
        }
        if matches!(choice, OracleChoice::Sweep | OracleChoice::Both) {
            results.push(("sweep", count_halving_lines_sweep_with(&a.points, exec)?));
        }
    } else {
        results.push(("hyperplane", count_halving_hyperplanes_with(&a.points, a.dimension, exec)?));
    }
    for (name, r) in &results {
        let mut c = CheckOutcome::new(format!("{name} oracle"));
        c.examine(1);
        c.note(format!("halving_count {}", r.halving_count));
        if r.degenerate_tuples > 0 {
            c.note(format!("{} degenerate tuples", r.degenerate_tuples));
        }
        report.push(c);
        println!("{name} halving_count {}", r.halving_count);
    }
    if let [(_, first), (_, second)] = results.as_slice() {
        let mut agree = CheckOutcome::new("oracles agree");
        agree.examine(1);
        if first.halving_pairs != second.halving_pairs {
            agree.fail(|| format!("{} vs {} halving lines", first.halving_count, second.halving_count));
        }
        report.push(agree);
    }
    report.extend(certify_claims(a, exec)?);
    Ok(report)
}
