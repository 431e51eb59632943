use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use revcache::baselines::PolicyKind;
use revcache::predictor::checkpoint::save_checkpoint;
use revcache::request_model::io::{write_catalog_json, write_trace_csv};
use revcache::sim::output::{
    ensure_dir, write_comparison, write_config_echo, write_decisions, write_slots, write_summary,
    write_train_curve,
};
use revcache::sim::{
    compare_fl_vs_centralized, prepare_workload, run_experiment, sweep_cache_sizes,
    train_predictor, ExperimentResult, PredictorMode, RunConfig,
};
use revcache::Result;

#[derive(Parser)]
#[command(name = "revcache", version, about = "Revenue-driven proactive edge caching simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a catalog and request trace.
    Generate(Common),
    /// Train the federated predictor and save a checkpoint.
    Train(Common),
    /// Run every configured policy and cache size over the test window.
    Run(Common),
    /// Sweep cache sizes, optionally for several placement-slot lengths.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Mini-slots per placement slot; one pass per value.
        #[arg(long, value_delimiter = ',')]
        slot_lens: Vec<usize>,
    },
    /// Compare federated and centralized training of the same model.
    CompareFl(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated policy names.
    #[arg(long, value_delimiter = ',')]
    policy: Vec<PolicyKind>,
    #[arg(long, value_delimiter = ',')]
    cache_sizes: Vec<usize>,
    /// `trained` or `oracle`.
    #[arg(long)]
    predictor: Option<PredictorMode>,
}

impl Common {
    fn resolve(&self) -> Result<(RunConfig, PathBuf)> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if !self.policy.is_empty() {
            cfg.policies = self.policy.clone();
        }
        if !self.cache_sizes.is_empty() {
            cfg.cache_sizes = self.cache_sizes.clone();
        }
        if let Some(mode) = self.predictor {
            cfg.predictor.mode = mode;
        }
        if let Some(out) = &self.out {
            cfg.out_dir = Some(out.clone());
        }
        cfg.validate()?;
        let out = cfg.out_dir.clone().unwrap_or_else(|| PathBuf::from("out"));
        ensure_dir(&out)?;
        write_config_echo(&cfg, &out.join("config.echo.json"))?;
        Ok((cfg, out))
    }
}

fn write_result(cfg: &RunConfig, res: &ExperimentResult, out: &Path) -> Result<()> {
    write_slots(&res.slots, &out.join("slots.csv"))?;
    write_summary(&res.summary, &out.join("summary.csv"))?;
    write_train_curve(&res.train_curve, cfg.slot_len, &out.join("train_curve.csv"))?;
    if cfg.dump_decisions {
        write_decisions(&res.decisions, &out.join("decisions.csv"))?;
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(common) => {
            let (cfg, out) = common.resolve()?;
            let work = prepare_workload(&cfg)?;
            write_catalog_json(&work.catalog, &out.join("catalog.json"))?;
            write_trace_csv(&work.trace, &out.join("trace.csv"))?;
            eprintln!("wrote {} users x {} requests", cfg.users, work.trace.requests[0].len());
        }
        Command::Train(common) => {
            let (cfg, out) = common.resolve()?;
            let work = prepare_workload(&cfg)?;
            let (model, curve) = train_predictor(&cfg, &work)?;
            save_checkpoint(&model, &out.join("model"))?;
            write_train_curve(&curve, cfg.slot_len, &out.join("train_curve.csv"))?;
            if let Some(last) = curve.last() {
                eprintln!("round {} loss {:.4} val {:?}", last.round, last.mean_loss, last.val_accuracy);
            }
        }
        Command::Run(common) => {
            let (cfg, out) = common.resolve()?;
            let res = run_experiment(&cfg)?;
            write_result(&cfg, &res, &out)?;
        }
        Command::Sweep { common, slot_lens } => {
            let (cfg, out) = common.resolve()?;
            let mut sizes = cfg.cache_sizes.clone();
            sizes.sort_unstable();
            sizes.dedup();
            if slot_lens.is_empty() {
                let res = sweep_cache_sizes(&cfg, &sizes)?;
                write_result(&cfg, &res, &out)?;
                return Ok(());
            }
            let mut summary = Vec::new();
            for n in slot_lens {
                let cfg_n = RunConfig { slot_len: n, ..cfg.clone() };
                cfg_n.validate()?;
                let res = sweep_cache_sizes(&cfg_n, &sizes)?;
                let dir = out.join(format!("n{n}"));
                ensure_dir(&dir)?;
                write_result(&cfg_n, &res, &dir)?;
                summary.extend(res.summary);
            }
            write_summary(&summary, &out.join("summary.csv"))?;
        }
        Command::CompareFl(common) => {
            let (cfg, out) = common.resolve()?;
            let cmp = compare_fl_vs_centralized(&cfg)?;
            write_comparison(&cmp, &out.join("comparison.csv"))?;
            eprintln!("fl/cl at position 0: {:.4}", cmp.ratio_at_first_position());
        }
    }
    Ok(())
}

fn fail(kind: &str, message: &str) -> ExitCode {
    let line = serde_json::json!({ "error": { "kind": kind, "message": message } });
    eprintln!("{line}");
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail("usage", e.to_string().trim()),
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e.kind(), &e.to_string()),
    }
}
