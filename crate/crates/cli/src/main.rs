use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use elicit_core::corpus::{build_lexicon, parse_unimorph, to_tsv, Lexicon};
use elicit_core::learner::RuleLearner;
use elicit_core::runner::{cold_start_analysis, run_experiment, summary_csv, ExperimentConfig, Report, RunError};
use elicit_core::strategies::StrategyKind;
use elicit_core::synthlang::{generate, SynthConfig};
use rayon::prelude::*;

#[derive(Parser)]
#[command(name = "elicit", version, about = "Simulated paradigm elicitation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run experiments 1-4 over one or more UniMorph files.
    Run(RunArgs),
    /// Inter-predictability heatmap from the weighted strategy's cold start.
    Heatmap(HeatmapArgs),
    /// Generate a synthetic language as UniMorph TSV.
    Synth(SynthArgs),
}

#[derive(Args)]
struct RunArgs {
    /// UniMorph TSV file; repeat for several languages.
    #[arg(long, required = true)]
    data: Vec<PathBuf>,
    /// Language label (single data file only; defaults to the file stem).
    #[arg(long)]
    language: Option<String>,
    /// Experiments: `1..4`, `1,3` or a single number.
    #[arg(long, default_value = "1..4")]
    exp: String,
    #[arg(long, default_value_t = 5)]
    cycles: usize,
    #[arg(long, default_value_t = 400)]
    batch: usize,
    /// Repeat for several seeds.
    #[arg(long, default_values_t = [0u64])]
    seed: Vec<u64>,
    #[arg(long, default_value_t = 0.5)]
    ranked_fraction: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct HeatmapArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 400)]
    budget: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Also render heatmap.svg.
    #[arg(long)]
    svg: bool,
}

#[derive(Args)]
struct SynthArgs {
    /// TOML generator config.
    #[arg(long)]
    synth_config: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output TSV path.
    #[arg(long)]
    out: PathBuf,
}

/// Bad invocation rather than bad data; exits with status 2.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(Usage(msg.into()).into())
}

fn parse_experiments(spec: &str) -> Result<Vec<StrategyKind>> {
    let numbers: Vec<u8> = if let Some((a, b)) = spec.split_once("..") {
        let (a, b): (u8, u8) = match (a.trim().parse(), b.trim().parse()) {
            (Ok(a), Ok(b)) if a <= b => (a, b),
            _ => return usage(format!("bad experiment range {spec:?}")),
        };
        (a..=b).collect()
    } else {
        let mut out = Vec::new();
        for part in spec.split(',') {
            match part.trim().parse() {
                Ok(n) => out.push(n),
                Err(_) => return usage(format!("bad experiment number {part:?}")),
            }
        }
        out
    };
    let mut kinds = Vec::new();
    for n in numbers {
        let Some(kind) = StrategyKind::from_experiment(n) else {
            return usage(format!("experiment {n} is not one of 1-4"));
        };
        if !kinds.contains(&kind) {
            kinds.push(kind);
        }
    }
    if kinds.is_empty() {
        return usage("no experiments requested");
    }
    Ok(kinds)
}

fn load_lexicon(path: &Path) -> Result<Lexicon> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let triplets = parse_unimorph(&text).with_context(|| format!("cannot parse {}", path.display()))?;
    build_lexicon(&triplets).with_context(|| format!("inconsistent data in {}", path.display()))
}

fn language_label(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "lang".into())
}

fn write_run(dir: &Path, report: &Report) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let files = [
        ("report.json", report.to_json()),
        ("cycles.csv", report.cycles_csv()),
        ("ledger.csv", report.ledger.to_csv()),
        ("summary.csv", summary_csv([report])),
    ];
    for (name, body) in files {
        let path = dir.join(name);
        fs::write(&path, body).with_context(|| format!("cannot write {}", path.display()))?;
    }
    Ok(())
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let kinds = parse_experiments(&args.exp)?;
    if args.cycles == 0 || args.batch == 0 {
        return usage("--cycles and --batch must be at least 1");
    }
    if !(0.0..=1.0).contains(&args.ranked_fraction) {
        return usage("--ranked-fraction must lie in [0, 1]");
    }
    if args.language.is_some() && args.data.len() > 1 {
        return usage("--language needs exactly one --data file");
    }

    let mut languages = Vec::new();
    for path in &args.data {
        let label = args.language.clone().unwrap_or_else(|| language_label(path));
        languages.push((label, load_lexicon(path)?));
    }

    let mut jobs = Vec::new();
    for (li, (label, _)) in languages.iter().enumerate() {
        for &kind in &kinds {
            for &seed in &args.seed {
                let mut config = ExperimentConfig::new(label.clone(), kind, args.batch, seed);
                config.cycles = args.cycles;
                config.strategy.ranked_suggest_fraction = args.ranked_fraction;
                let dir = args
                    .out
                    .join(label)
                    .join(format!("exp{}", kind.experiment()))
                    .join(format!("seed{seed}"));
                jobs.push((li, config, dir));
            }
        }
    }

    let learner = RuleLearner::default();
    let results: Vec<Result<Report>> = jobs
        .par_iter()
        .map(|(li, config, dir)| {
            let report = run_experiment(config, &languages[*li].1, &learner)
                .with_context(|| format!("{} exp{} seed {}", config.language, config.strategy.kind.experiment(), config.seed()))?;
            write_run(dir, &report)?;
            Ok(report)
        })
        .collect();

    let mut reports = Vec::new();
    let mut first_error = None;
    for r in results {
        match r {
            Ok(report) => reports.push(report),
            Err(e) => {
                first_error.get_or_insert(e);
            }
        }
    }
    let combined = args.out.join("summary.csv");
    let outcome = match first_error {
        Some(e) => Err(e),
        None => fs::write(&combined, summary_csv(&reports)).with_context(|| format!("cannot write {}", combined.display())),
    };
    if outcome.is_err() {
        for (_, _, dir) in &jobs {
            let _ = fs::remove_dir_all(dir);
        }
        let _ = fs::remove_file(&combined);
    }
    outcome?;
    for r in &reports {
        let acc = r.final_accuracy.map_or("n/a".to_string(), |a| format!("{:.4}", a));
        println!(
            "{} exp{} seed {}: accuracy {acc}, nes {:.4}, queries {}",
            r.config.language,
            r.experiment,
            r.config.seed(),
            r.nes,
            r.total_queries
        );
    }
    Ok(())
}

fn cmd_heatmap(args: HeatmapArgs) -> Result<()> {
    if args.budget == 0 {
        return usage("--budget must be at least 1");
    }
    let lexicon = load_lexicon(&args.data)?;
    let analysis = match cold_start_analysis(&lexicon, args.budget, args.seed, &RuleLearner::default()) {
        Ok(a) => a,
        Err(e @ RunError::InsufficientParadigms { .. }) => bail!("{}: {e}", args.data.display()),
        Err(e) => return Err(e).context("predictability analysis failed"),
    };
    fs::create_dir_all(&args.out).with_context(|| format!("cannot create {}", args.out.display()))?;
    let mut files = vec![
        ("heatmap.csv", analysis.heatmap.to_csv()),
        ("heatmap_counts.csv", analysis.heatmap.counts_csv()),
        ("weights.csv", analysis.weights.to_csv()),
    ];
    if args.svg {
        files.push(("heatmap.svg", analysis.heatmap.to_svg()));
    }
    let written: Vec<PathBuf> = files.iter().map(|(name, _)| args.out.join(name)).collect();
    for (path, (_, body)) in written.iter().zip(&files) {
        if let Err(e) = fs::write(path, body) {
            for p in &written {
                let _ = fs::remove_file(p);
            }
            return Err(e).with_context(|| format!("cannot write {}", path.display()));
        }
    }
    let (train, dev, test) = analysis.split_sizes;
    println!(
        "{} paradigms, {} pairs ({train}/{dev}/{test}), {} tagsets",
        analysis.paradigms,
        analysis.examples,
        analysis.heatmap.tagsets.len()
    );
    Ok(())
}

fn cmd_synth(args: SynthArgs) -> Result<()> {
    let path = &args.synth_config;
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let config: SynthConfig = toml::from_str(&text).with_context(|| format!("cannot parse {}", path.display()))?;
    if config.num_lemmas == 0 {
        return usage("num_lemmas must be at least 1");
    }
    let triplets = generate(&config, args.seed)?;
    fs::write(&args.out, to_tsv(&triplets)).with_context(|| format!("cannot write {}", args.out.display()))?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Heatmap(a) => cmd_heatmap(a),
        Command::Synth(a) => cmd_synth(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<Usage>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn experiment_lists() {
        use StrategyKind::*;
        assert_eq!(parse_experiments("1..4").unwrap(), vec![Uniform, ConfidenceGated, ConfidenceRanked, ParadigmFirstWeighted]);
        assert_eq!(parse_experiments("3, 1,3").unwrap(), vec![ConfidenceRanked, Uniform]);
        assert_eq!(parse_experiments("2").unwrap(), vec![ConfidenceGated]);
        assert!(parse_experiments("0").is_err());
        assert!(parse_experiments("4..1").is_err());
        assert!(parse_experiments("x").is_err());
    }
}
