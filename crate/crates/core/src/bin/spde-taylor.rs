use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use spde_taylor::harness::{
    run_convergence, symbolic_report, ConfigOverrides, ExperimentConfig, HarnessError, Verdict,
};

#[derive(Parser)]
#[command(name = "spde-taylor", version, about = "Tree-indexed Taylor schemes for semilinear SPDEs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print tree count, active nodes, order and Psi terms of a wood.
    Symbolic {
        #[arg(long)]
        wood: String,
    },
    /// Run a strong-order experiment against the fine-mesh reference.
    Converge(Box<ConvergeArgs>),
}

#[derive(Args)]
struct ConvergeArgs {
    /// key = value config file; flags given on the command line win.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    model: Option<String>,
    /// Builtin name (taylor-delta, exp-euler-nodrift, exp-euler,
    /// milstein-b0, full-2nd, reference) or wood text.
    #[arg(long, conflicts_with = "wood")]
    scheme: Option<String>,
    /// Wood text, as an alternative to --scheme.
    #[arg(long)]
    wood: Option<String>,
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// log2 of the number of fine substeps on [0, t_end].
    #[arg(long)]
    fine: Option<u32>,
    /// Comma-separated k values, h = t_end * 2^-k.
    #[arg(long, value_delimiter = ',')]
    ladder: Option<Vec<u32>>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    modes: Option<usize>,
    #[arg(long)]
    noise_modes: Option<usize>,
    /// smooth_poly or first_mode.
    #[arg(long)]
    initial: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    multi_step: bool,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    r: Option<f64>,
}

impl ConvergeArgs {
    fn config(self) -> Result<ExperimentConfig, HarnessError> {
        let mut cfg = ExperimentConfig::default();
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path)?;
            ConfigOverrides::from_toml(&text)?.apply(&mut cfg);
        }
        ConfigOverrides {
            model: self.model,
            scheme: self.scheme.or(self.wood),
            t_end: self.t_end,
            fine: self.fine,
            ladder: self.ladder,
            paths: self.paths,
            seed: self.seed,
            r: self.r,
            p: self.p,
            modes: self.modes,
            noise_modes: self.noise_modes,
            initial: self.initial,
            multi_step: self.multi_step.then_some(true),
            out: self.out,
        }
        .apply(&mut cfg);
        Ok(cfg)
    }
}

fn converge(args: ConvergeArgs) -> Result<Verdict, HarnessError> {
    let cfg = args.config()?;
    let report = run_convergence(&cfg)?;
    print!("{}", report.summary());
    if let Some(dir) = &cfg.out {
        let (csv, json) = report.emit(dir)?;
        println!("wrote {} and {}", csv.display(), json.display());
    }
    Ok(report.verdict)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Symbolic { wood } => symbolic_report(&wood).map(|s| {
            print!("{s}");
            Verdict::Pass
        }),
        Command::Converge(args) => converge(*args),
    };
    match result {
        Ok(Verdict::Pass | Verdict::NotApplicable) => ExitCode::SUCCESS,
        Ok(Verdict::Fail) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
