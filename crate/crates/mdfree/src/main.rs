//! Command-line surface for the monomer-dimer free-energy expansion:
//! partition-function tables, expansion coefficients, rigorous bound
//! evaluation, residual diagnostics, and the oracle verification suite.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_traits::{One, Signed, Zero};

use mdfree::coeff::{parse_rat, CoeffField, PrimeField, Rat, Rationals};
use mdfree::oracle;
use mdfree::pipeline::{
    compute_expansion_with_plan, eval_bounds, emit_curve, guessed_recurrence, residue_vectors,
    CorrectionPlan, Expansion, PrimePolicy, RunOptions,
};
use mdfree::reconstruct::descending_primes;
use mdfree::transfer::{advance_collecting, compute_theta, StateVector, StepOptions};
use mdfree::{coeff::rat_string, limit::CachedThetaSource, limit::residual_sequence};

#[derive(Parser)]
#[command(
    name = "mdfree",
    version,
    about = "Series expansion of the planar monomer-dimer free energy with rigorous bounds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonOpts {
    /// Worker threads (overrides the MDFREE_THREADS environment variable).
    #[arg(long, env = "MDFREE_THREADS")]
    threads: Option<usize>,
    /// Memory budget for state vectors, in MiB (minimum 64).
    #[arg(long, default_value_t = 2048)]
    memory_budget_mib: u64,
}

impl CommonOpts {
    fn run_options(&self) -> Result<RunOptions, CliError> {
        let threads = self.threads.unwrap_or(1);
        if threads < 1 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        if self.memory_budget_mib < 64 {
            return Err(CliError::Usage(
                "--memory-budget-mib must be at least 64".into(),
            ));
        }
        Ok(RunOptions {
            threads,
            memory_budget: self.memory_budget_mib << 20,
        })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Print the partition-function table of an m x n board.
    Theta {
        /// Row count.
        #[arg(short)]
        m: u32,
        /// Column count.
        #[arg(short)]
        n: u32,
        /// Series truncation; defaults to the full polynomial length.
        #[arg(long)]
        cutoff: Option<usize>,
        /// Compute modulo this prime instead of exactly.
        #[arg(long, conflicts_with = "exact")]
        modulus: Option<u32>,
        /// Exact rational computation (the default).
        #[arg(long)]
        exact: bool,
        /// Resume a modular run from this state file.
        #[arg(long, requires = "modulus")]
        checkpoint_in: Option<PathBuf>,
        /// Write the final modular state to this file.
        #[arg(long, requires = "modulus")]
        checkpoint_out: Option<PathBuf>,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Compute expansion coefficients and print them as JSON.
    Coeffs {
        /// Highest coefficient index.
        #[arg(long)]
        order: usize,
        /// Correction levels to apply (0..=2 without --reguess).
        #[arg(long, default_value_t = 2)]
        levels: usize,
        /// Prime policy: "exact", "auto", or a prime count.
        #[arg(long, default_value = "auto")]
        primes: String,
        /// Rediscover the correction recurrences instead of using the
        /// shipped ones; required for levels above 2.
        #[arg(long)]
        reguess: bool,
        /// Largest recurrence order tried when guessing.
        #[arg(long, default_value_t = 7)]
        max_order: usize,
        /// Held-out terms a guessed recurrence must reproduce.
        #[arg(long, default_value_t = 5)]
        verify: usize,
        /// Omit the meta block (for byte-identical comparisons).
        #[arg(long)]
        no_meta: bool,
        /// Directory for per-prime residue vectors as JSON.
        #[arg(long)]
        emit_residues: Option<PathBuf>,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Evaluate the lower/upper bounds at one density.
    Bounds {
        #[arg(long)]
        order: usize,
        /// Density in (0,1), e.g. "1/2" or "0.65".
        #[arg(long)]
        p: String,
        #[arg(long, default_value_t = 15)]
        digits: usize,
        #[arg(long, default_value_t = 2)]
        levels: usize,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Emit a CSV bound curve over a density grid.
    Curve {
        #[arg(long)]
        order: usize,
        /// Comma-separated densities, or "start:end:count".
        #[arg(long)]
        grid: String,
        #[arg(long, default_value_t = 12)]
        digits: usize,
        #[arg(long, default_value_t = 2)]
        levels: usize,
        /// Output file; stdout when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Print a residual sequence of the limit combination.
    Residuals {
        #[arg(long)]
        level: usize,
        /// Largest combination index reported.
        #[arg(long = "max-N")]
        max_n: usize,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Guess the linear recurrence satisfied by a residual sequence.
    GuessRecurrence {
        #[arg(long)]
        level: usize,
        #[arg(long, default_value_t = 7)]
        max_order: usize,
        #[arg(long, default_value_t = 5)]
        verify: usize,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Cross-check the transfer engine against brute-force enumeration.
    Verify {
        /// Largest board area checked.
        #[arg(long, default_value_t = 18)]
        max_cells: usize,
        #[command(flatten)]
        common: CommonOpts,
    },
}

enum CliError {
    Usage(String),
    Computation(String),
}

impl<E: std::error::Error> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError::Computation(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Computation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Theta {
            m,
            n,
            cutoff,
            modulus,
            exact: _,
            checkpoint_in,
            checkpoint_out,
            common,
        } => theta_cmd(m, n, cutoff, modulus, checkpoint_in, checkpoint_out, &common),
        Command::Coeffs {
            order,
            levels,
            primes,
            reguess,
            max_order,
            verify,
            no_meta,
            emit_residues,
            common,
        } => coeffs_cmd(
            order,
            levels,
            &primes,
            reguess,
            max_order,
            verify,
            no_meta,
            emit_residues,
            &common,
        ),
        Command::Bounds {
            order,
            p,
            digits,
            levels,
            common,
        } => {
            let p = parse_density(&p)?;
            check_digits(digits)?;
            let opts = common.run_options()?;
            let expansion = default_expansion(order, levels, &opts)?;
            let bounds = eval_bounds(&expansion, &p, digits)?;
            println!(
                "{}",
                serde_json::json!({
                    "p": rat_string(&bounds.p),
                    "order": bounds.order,
                    "lower": bounds.lower,
                    "upper": bounds.upper,
                    "digits": bounds.guaranteed_digits,
                })
            );
            Ok(())
        }
        Command::Curve {
            order,
            grid,
            digits,
            levels,
            output,
            common,
        } => {
            let grid = parse_grid(&grid)?;
            let opts = common.run_options()?;
            let expansion = default_expansion(order, levels, &opts)?;
            let rows = emit_curve(&expansion, &grid, digits)?;
            let mut text = String::from("p,lower,upper\n");
            for row in rows {
                text.push_str(&format!("{},{},{}\n", row.p, row.lower, row.upper));
            }
            match output {
                Some(path) => fs::write(path, text)?,
                None => print!("{text}"),
            }
            Ok(())
        }
        Command::Residuals { level, max_n, common } => {
            if level < 1 {
                return Err(CliError::Usage("--level must be at least 1".into()));
            }
            if max_n < 4 {
                return Err(CliError::Usage("--max-N must be at least 4".into()));
            }
            let opts = common.run_options()?;
            let mut source = CachedThetaSource::new(
                Rationals,
                max_n - 1 + level,
                (max_n + level) as u32,
                StepOptions {
                    memory_budget: opts.memory_budget,
                    slice_log2: opts.threads.ilog2(),
                },
            );
            let values = residual_sequence(level, max_n, &mut source)?;
            for value in values {
                println!("{}", rat_string(&value));
            }
            Ok(())
        }
        Command::GuessRecurrence {
            level,
            max_order,
            verify,
            common,
        } => {
            if level < 1 {
                return Err(CliError::Usage("--level must be at least 1".into()));
            }
            let opts = common.run_options()?;
            let (rec, margin) = guessed_recurrence(level, max_order, verify, &opts)?;
            let coeffs: Vec<String> = rec.coeffs().iter().map(rat_string).collect();
            println!("order: {}", rec.order());
            println!("coefficients: {}", coeffs.join(", "));
            println!("verified against {margin} held-out terms");
            Ok(())
        }
        Command::Verify { max_cells, common } => verify_cmd(max_cells, &common),
    }
}

fn theta_cmd(
    m: u32,
    n: u32,
    cutoff: Option<usize>,
    modulus: Option<u32>,
    checkpoint_in: Option<PathBuf>,
    checkpoint_out: Option<PathBuf>,
    common: &CommonOpts,
) -> Result<(), CliError> {
    if m < 1 || n < 1 {
        return Err(CliError::Usage("board dimensions must be positive".into()));
    }
    let opts = common.run_options()?;
    let step = StepOptions {
        memory_budget: opts.memory_budget,
        slice_log2: opts.threads.ilog2(),
    };
    let cutoff = cutoff.unwrap_or((m as usize * n as usize) / 2 + 1);
    if cutoff < 1 {
        return Err(CliError::Usage("--cutoff must be at least 1".into()));
    }
    match modulus {
        None => {
            let table = compute_theta(&Rationals, m, n, cutoff, &step)?;
            for theta in table.as_slice() {
                println!("{theta}");
            }
        }
        Some(p) => {
            let field = PrimeField::new(p)?;
            let mut state = match checkpoint_in {
                Some(path) => {
                    let file = fs::File::open(path)?;
                    let state = StateVector::read_checkpoint(file, opts.memory_budget)?;
                    if state.rows() != m || state.field().modulus() != p || state.cutoff() != cutoff
                    {
                        return Err(CliError::Usage(
                            "checkpoint does not match the requested run".into(),
                        ));
                    }
                    state
                }
                None => StateVector::new(field, m, cutoff, opts.memory_budget)?,
            };
            if state.columns_applied() > n {
                return Err(CliError::Usage(format!(
                    "checkpoint already past column {n}"
                )));
            }
            for theta in advance_collecting(&mut state, n, step.slice_log2) {
                println!("{theta}");
            }
            if let Some(path) = checkpoint_out {
                let mut file = fs::File::create(path)?;
                state.write_checkpoint(&mut file)?;
                file.flush()?;
            }
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn coeffs_cmd(
    order: usize,
    levels: usize,
    primes: &str,
    reguess: bool,
    max_order: usize,
    verify: usize,
    no_meta: bool,
    emit_residues: Option<PathBuf>,
    common: &CommonOpts,
) -> Result<(), CliError> {
    if order < 2 {
        return Err(CliError::Usage("--order must be at least 2".into()));
    }
    let opts = common.run_options()?;
    let policy = match primes {
        "exact" => PrimePolicy::Exact,
        "auto" => PrimePolicy::Auto,
        other => {
            let count: usize = other.parse().map_err(|_| {
                CliError::Usage(format!(
                    "--primes expects \"exact\", \"auto\", or a count, got {other:?}"
                ))
            })?;
            if count < 2 {
                return Err(CliError::Usage("--primes count must be at least 2".into()));
            }
            PrimePolicy::Count(count)
        }
    };
    let plan = build_plan(levels, reguess, max_order, verify, &opts)?;
    if let Some(dir) = &emit_residues {
        if policy == PrimePolicy::Exact {
            return Err(CliError::Usage(
                "--emit-residues needs a modular prime policy".into(),
            ));
        }
        fs::create_dir_all(dir)?;
        let count = match policy {
            PrimePolicy::Count(k) => k,
            _ => 4,
        };
        let primes = descending_primes(count);
        for vector in residue_vectors(order, levels, &plan, &primes, &opts)? {
            let path = dir.join(format!("residues_p{}.json", vector.modulus));
            fs::write(path, serde_json::to_string(&vector)?)?;
        }
    }
    let expansion = compute_expansion_with_plan(order, levels, &plan, policy, &opts)?;
    println!("{}", expansion.to_json(!no_meta));
    Ok(())
}

fn build_plan(
    levels: usize,
    reguess: bool,
    max_order: usize,
    verify: usize,
    opts: &RunOptions,
) -> Result<CorrectionPlan, CliError> {
    if reguess {
        Ok(CorrectionPlan::reguessed(levels, max_order, verify, opts)?)
    } else {
        if levels > 2 {
            return Err(CliError::Usage(
                "levels above 2 need --reguess (only two recurrences ship with the tool)".into(),
            ));
        }
        Ok(CorrectionPlan::published(levels, opts)?)
    }
}

fn default_expansion(
    order: usize,
    levels: usize,
    opts: &RunOptions,
) -> Result<Expansion, CliError> {
    let plan = CorrectionPlan::published(levels, opts)?;
    Ok(compute_expansion_with_plan(
        order,
        levels,
        &plan,
        PrimePolicy::Auto,
        opts,
    )?)
}

fn verify_cmd(max_cells: usize, common: &CommonOpts) -> Result<(), CliError> {
    if max_cells < 1 || max_cells > oracle::MAX_CELLS {
        return Err(CliError::Usage(format!(
            "--max-cells must be in 1..={}",
            oracle::MAX_CELLS
        )));
    }
    let opts = common.run_options()?;
    let step = StepOptions {
        memory_budget: opts.memory_budget,
        slice_log2: 0,
    };
    println!("board  tilings  result");
    let mut failures = 0usize;
    for rows in 1..=max_cells {
        for cols in rows..=max_cells {
            if rows * cols > max_cells {
                continue;
            }
            let census = oracle::enumerate(rows, cols)?;
            let cutoff = rows * cols / 2 + 1;
            let table = compute_theta(&Rationals, rows as u32, cols as u32, cutoff, &step)?;
            let theta = table.get(cols as u32).expect("table covers the request");
            let matches = census.counts.len() == cutoff
                && census.counts.iter().enumerate().all(|(s, count)| {
                    let expect = Rat::from_integer(count.clone().into());
                    theta.coeff(s) == &expect
                });
            let verdict = if matches { "ok" } else { "FAIL" };
            if !matches {
                failures += 1;
            }
            println!("{rows}x{cols}  {}  {verdict}", census.total());
        }
    }
    if failures > 0 {
        return Err(CliError::Computation(format!(
            "{failures} board(s) disagree with the enumeration"
        )));
    }
    Ok(())
}

fn parse_density(s: &str) -> Result<Rat, CliError> {
    let p = parse_rat(s)
        .ok_or_else(|| CliError::Usage(format!("cannot parse density {s:?}")))?;
    if !(p.is_positive() && p < Rat::one()) {
        return Err(CliError::Usage(format!(
            "density must lie strictly between 0 and 1, got {s}"
        )));
    }
    Ok(p)
}

fn parse_grid(s: &str) -> Result<Vec<Rat>, CliError> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() == 3 {
        let start = parse_density(parts[0])?;
        let end = parse_density(parts[1])?;
        let count: usize = parts[2]
            .parse()
            .map_err(|_| CliError::Usage(format!("bad grid count {:?}", parts[2])))?;
        if count < 2 || end <= start {
            return Err(CliError::Usage(
                "grid spec needs start < end and at least 2 points".into(),
            ));
        }
        let span = &end - &start;
        let denom = Rat::from_integer((count as i64 - 1).into());
        return Ok((0..count)
            .map(|i| &start + &span * Rat::from_integer((i as i64).into()) / &denom)
            .collect());
    }
    let grid: Vec<Rat> = s
        .split(',')
        .map(parse_density)
        .collect::<Result<_, _>>()?;
    if grid.is_empty() {
        return Err(CliError::Usage("empty grid".into()));
    }
    Ok(grid)
}
