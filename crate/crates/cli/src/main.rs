use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use lprl_core::construction::{ConstructionCache, ConstructionConfig, ExpLadder};
use lprl_core::grid::depth;
use lprl_core::reduction::{
    block_table_csv, divergence_witness, f_blocks, stabilization_check, unit_ball_check,
    write_prefix, AlphaSpec,
};
use lprl_core::seqspace::Margin;
use lprl_core::suite::{run_all, VerifyPlan};
use lprl_core::witness::WitnessConfig;
use lprl_core::Error;

const CACHE_FILE: &str = "cache.txt";

#[derive(Parser)]
#[command(
    name = "lprl",
    version,
    about = "Build and verify the finite-scale reduction of P3 into the intersection of lp spaces"
)]
struct Cli {
    #[command(flatten)]
    run: RunArgs,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Lower exponent a (the intersection is over p > a)
    #[arg(long, global = true, default_value_t = 0.0)]
    a: f64,
    /// Ambient exponent q > a
    #[arg(long, global = true, default_value_t = 2.0)]
    q: f64,
    /// Build the tree over all strings of length <= max-len
    #[arg(long, global = true, default_value_t = 10)]
    max_len: usize,
    /// Margin for strict inequalities
    #[arg(long, global = true, default_value_t = Margin::DEFAULT_ETA)]
    eta: f64,
    /// Step budget of a single witness search
    #[arg(long, global = true, default_value_t = WitnessConfig::DEFAULT_STEP_BUDGET)]
    step_budget: u64,
    /// Output directory
    #[arg(long, global = true, env = "LPRL_OUT", default_value = ".")]
    out: PathBuf,
    /// Seed for randomized sweeps
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Explicit first ladder exponents, comma separated and strictly decreasing
    #[arg(long, global = true)]
    ladder: Option<String>,
    /// Witness generator: constant-block or harmonic
    #[arg(long, global = true, default_value = "constant-block")]
    generator: String,
}

#[derive(Subcommand)]
enum Command {
    /// Build every node up to --max-len and export the cache to <out>/cache.txt
    Build,
    /// Run all verification sweeps and write <out>/report.json; exit 1 on any violation
    Verify {
        /// Check this exported cache instead of building a fresh one
        #[arg(long)]
        cache: Option<PathBuf>,
        /// Block depth for the reduction sweeps
        #[arg(long, default_value_t = 12)]
        k: usize,
        /// Divergence target for points outside P3
        #[arg(long, default_value_t = 3.0)]
        target: f64,
        /// Random cases per randomized sweep
        #[arg(long, default_value_t = 100)]
        cases: usize,
    },
    /// Print the block table of one point as CSV and write <out>/trace.csv,
    /// <out>/prefix.txt and <out>/trace.json
    #[command(
        after_help = "CSV columns: k,bit,level,block_len,q_pow,cum_q_pow, then \
        p<i>_pow,cum_p<i>_pow for every row i up to the depth of the path. \
        *_pow is the power sum of block k, cum_* that of the whole prefix through block k. \
        Values are printed as shortest round-trip decimals."
    )]
    Trace {
        /// Point description, e.g. "row=0:eventually(0);row=2:finite{1,4}"
        #[arg(long)]
        spec: String,
        /// Last block index
        #[arg(long, default_value_t = 12)]
        k: usize,
        /// Divergence target for rows with infinitely many ones
        #[arg(long, default_value_t = 3.0)]
        target: f64,
    },
}

fn exit_code(e: &Error) -> u8 {
    if e.is_resource_limit() {
        return 3;
    }
    match e {
        Error::Parse { .. } | Error::InvalidInput(_) | Error::Domain(_) => 2,
        Error::Node { source, .. } => exit_code(source),
        _ => 1,
    }
}

impl RunArgs {
    fn config(&self) -> lprl_core::Result<ConstructionConfig> {
        if self.max_len < 1 {
            return Err(Error::InvalidInput("--max-len must be at least 1".into()));
        }
        let ladder = match &self.ladder {
            None => ExpLadder::new(self.a, self.q)?,
            Some(list) => {
                let ps = list
                    .split(',')
                    .map(|p| {
                        p.trim().parse::<f64>().map_err(|e| {
                            Error::InvalidInput(format!("bad ladder entry {p:?}: {e}"))
                        })
                    })
                    .collect::<lprl_core::Result<Vec<_>>>()?;
                ExpLadder::with_override(self.a, self.q, ps)?
            }
        };
        Ok(ConstructionConfig {
            ladder,
            margin: Margin::new(self.eta)?,
            witness: WitnessConfig {
                generator: self.generator.parse()?,
                step_budget: self.step_budget,
            },
        })
    }

    fn out_file(&self, name: &str) -> lprl_core::Result<PathBuf> {
        fs::create_dir_all(&self.out)?;
        Ok(self.out.join(name))
    }
}

fn write(path: &Path, contents: &str) -> lprl_core::Result<()> {
    fs::write(path, contents)?;
    Ok(())
}

fn build(args: &RunArgs) -> lprl_core::Result<u8> {
    let mut cache = ConstructionCache::new(args.config()?);
    cache.populate(args.max_len)?;
    let path = args.out_file(CACHE_FILE)?;
    cache.export(fs::File::create(&path)?)?;
    println!("nodes: {}", cache.len());
    println!("max phi length: {}", cache.max_phi_len());
    println!("memory: {} bytes", cache.memory_bytes());
    println!("cache: {}", path.display());
    Ok(0)
}

fn verify(
    args: &RunArgs,
    cache_path: Option<&Path>,
    k: usize,
    target: f64,
    cases: usize,
) -> lprl_core::Result<u8> {
    let config = args.config()?;
    let mut cache = match cache_path {
        Some(p) => {
            let c = ConstructionCache::import(BufReader::new(fs::File::open(p)?))?;
            if c.config() != &config {
                return Err(Error::InvalidInput(format!(
                    "cache {} was built with a different configuration",
                    p.display()
                )));
            }
            c
        }
        None => ConstructionCache::new(config.clone()),
    };
    let plan = VerifyPlan {
        max_len: args.max_len,
        block_depth: k,
        divergence_target: target,
        seed: args.seed,
        random_cases: cases,
        ..VerifyPlan::default()
    };
    let results = run_all(&mut cache, &plan)?;
    let passed = results.iter().all(|r| r.passed());
    for r in &results {
        println!(
            "{}: {} instances, {} skipped, {} violations",
            r.suite,
            r.instances,
            r.skipped,
            r.violations.len()
        );
        for (name, n) in &r.breakdown {
            println!("  {name}: {n}");
        }
        for v in r.violations.iter().take(20) {
            eprintln!("violation [{}]: {v}", r.suite);
        }
    }
    let report = json!({
        "config": {
            "a": config.ladder.floor(),
            "q": config.ladder.top(),
            "ladder_override": config.ladder.overrides(),
            "eta": config.margin.eta(),
            "generator": config.witness.generator.to_string(),
            "step_budget": config.witness.step_budget,
        },
        "plan": plan,
        "suites": results,
        "passed": passed,
    });
    let path = args.out_file("report.json")?;
    write(
        &path,
        &serde_json::to_string_pretty(&report).expect("report serializes"),
    )?;
    println!("report: {}", path.display());
    println!(
        "{}",
        if passed {
            "all checks passed"
        } else {
            "VERIFICATION FAILED"
        }
    );
    Ok(if passed { 0 } else { 1 })
}

fn trace(args: &RunArgs, spec: &str, k: usize, target: f64) -> lprl_core::Result<u8> {
    let config = args.config()?;
    let alpha: AlphaSpec = spec.parse()?;
    let mut cache = ConstructionCache::new(config.clone());
    let bd = f_blocks(&mut cache, &alpha, k)?;
    let rows = depth(&bd.sigma).max(0) as usize + 1;
    let csv = block_table_csv(&bd, &config, rows)?;
    print!("{csv}");
    write(&args.out_file("trace.csv")?, &csv)?;

    let mut prefix = Vec::new();
    write_prefix(&bd.certificate(), &mut prefix)?;
    fs::write(args.out_file("prefix.txt")?, prefix)?;

    let ball = unit_ball_check(&bd, config.margin)?;
    let mut ok = ball.passed();
    let mut divergence = Vec::new();
    let mut stabilization = Vec::new();
    if alpha.in_p3() {
        for i in 0..rows.min(3) as u64 {
            let rep = stabilization_check(&mut cache, &alpha, i, k as u64)?;
            ok &= rep.passed();
            stabilization.push(rep);
        }
    } else {
        let bad: Vec<u64> = alpha.bad_rows().collect();
        for row in bad {
            divergence.push(divergence_witness(&mut cache, &alpha, row, target)?);
        }
    }
    let summary = json!({
        "spec": alpha.to_string(),
        "in_p3": alpha.in_p3(),
        "k": k,
        "unit_ball": ball,
        "divergence": divergence,
        "stabilization": stabilization,
    });
    write(
        &args.out_file("trace.json")?,
        &serde_json::to_string_pretty(&summary).expect("summary serializes"),
    )?;
    for w in &divergence {
        eprintln!(
            "row {}: p_{}-power {} > {target} after index {} (prefix length {})",
            w.row, w.row, w.norm_value, w.index, w.prefix_len
        );
    }
    for s in &stabilization {
        eprintln!(
            "row {}: M_{} = {} from index {} on, {} prefixes checked, {} violations",
            s.row,
            s.row,
            s.cap,
            s.start_index,
            s.checked,
            s.violations.len()
        );
    }
    Ok(if ok { 0 } else { 1 })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Command::Build => build(&cli.run),
        Command::Verify {
            cache,
            k,
            target,
            cases,
        } => verify(&cli.run, cache.as_deref(), *k, *target, *cases),
        Command::Trace { spec, k, target } => trace(&cli.run, spec, *k, *target),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
