//! Command-line interface.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use netmiss_core::estimate::{self, EstimationResult};
use netmiss_core::marlab::{self, PairMechanism};
use netmiss_core::missmodels::{self, MissModel};
use netmiss_core::{rng, sampler, ModelSpec};

use crate::config::{parse_list, parse_sweep_param, parse_term, Config, ConfigError};
use crate::io;
use crate::runner::{self, Result, RunError};

#[derive(Debug, Parser)]
#[command(name = "netmiss", version, about = "Missing-data experiments for exponential random graph models")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Base seed; overrides the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; defaults to the number of CPUs.
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory; overrides the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> Result<Config> {
        let mut cfg = Config::load(&self.config)?;
        if self.seed.is_some() {
            cfg.seed = self.seed;
        }
        if self.threads.is_some() {
            cfg.threads = self.threads;
        }
        if self.out.is_some() {
            cfg.out = self.out.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit the model to the complete network, or to a partial network by face-value likelihood.
    Fit {
        #[command(flatten)]
        common: Common,
        /// Partial network (`source,target,state`) over the configured vertices.
        #[arg(long)]
        partial: Option<PathBuf>,
    },
    /// Draw one missingness mask and write the partial network.
    Degrade {
        #[command(flatten)]
        common: Common,
        /// Missingness preset.
        #[arg(long)]
        model: String,
        /// Missing fraction of dyads.
        #[arg(long)]
        fraction: f64,
    },
    /// Run the configured degradation experiment.
    Experiment {
        #[command(flatten)]
        common: Common,
    },
    /// Sweep one network term of the missingness model.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// `theta1` (entrainment) or `theta2` (degree covariate).
        #[arg(long)]
        param: Option<String>,
        /// Comma-separated levels, e.g. `-1,-0.5,0,0.5,1`.
        #[arg(long, allow_hyphen_values = true)]
        levels: Option<String>,
    },
    /// Build and classify a missingness mechanism for a pair of dyads.
    Marlab {
        /// Probabilities that only the first dyad is missing, by the second dyad's value.
        #[arg(long)]
        g10: Option<String>,
        /// Probabilities that only the second dyad is missing, by the first dyad's value.
        #[arg(long)]
        g01: Option<String>,
        /// Probability that both are missing.
        #[arg(long)]
        g11: Option<f64>,
        /// Independent missingness probabilities of the first dyad, by its value.
        #[arg(long)]
        p: Option<String>,
        /// Independent missingness probabilities of the second dyad, by its value.
        #[arg(long)]
        q: Option<String>,
    },
    /// Exact moments of a model on at most 5 vertices.
    Enumerate {
        #[arg(long)]
        n: usize,
        /// Comma-separated terms.
        #[arg(long, default_value = "edges")]
        terms: String,
        /// Comma-separated parameter values; zero by default.
        #[arg(long, allow_hyphen_values = true)]
        theta: Option<String>,
    },
}

/// Runs the tool and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.class());
            e.exit_code()
        }
    }
}

fn pair(s: &str) -> Result<[f64; 2]> {
    let v = parse_list(s)?;
    <[f64; 2]>::try_from(v.as_slice())
        .map_err(|_| ConfigError::Invalid(format!("`{s}` needs exactly two values")).into())
}

fn print_fit(fit: &EstimationResult) {
    println!("{:<24} {:>12} {:>12} {:>12}", "term", "estimate", "se", "mc se");
    for k in 0..fit.labels.len() {
        println!("{:<24} {:>12.4} {:>12.4} {:>12.4}", fit.labels[k], fit.theta_hat[k], fit.se[k], fit.mc_se[k]);
    }
    match fit.failure {
        None => println!("converged after {} iterations", fit.n_iterations),
        Some(k) => println!("failed: {} ({})", k.label(), k.code()),
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Fit { common, partial } => {
            let cfg = common.load()?;
            let input = runner::load_input(&cfg)?;
            let fit = match partial {
                None => {
                    let mut est = runner::estimation_config(&cfg, input.n());
                    est.sampler.seed = rng::derive_seed(cfg.seed(), &[0xba5e]);
                    estimate::mcmcmle(&input.spec, &input.network.graph, &est, input.data())?
                }
                Some(path) => {
                    let p = io::read_partial(&path, &input.network.labels)?;
                    let mut est = runner::estimation_config(&cfg, input.n());
                    est.sampler.seed = rng::derive_seed(cfg.seed(), &[0xf17]);
                    estimate::mcmcmle_mar(&input.spec, &p, &est, input.data())?
                }
            };
            print_fit(&fit);
            runner::write_fit(&runner::out_dir(&cfg), &cfg, &fit)
        }
        Command::Degrade { common, model, fraction } => {
            let cfg = common.load()?;
            if !(fraction > 0.0 && fraction < 1.0) {
                return Err(ConfigError::Invalid(format!("fraction {fraction} outside (0, 1)")).into());
            }
            if !missmodels::PRESETS.contains(&model.as_str()) {
                return Err(ConfigError::Invalid(format!("unknown missingness model `{model}`")).into());
            }
            let input = runner::load_input(&cfg)?;
            let n = input.n();
            let g = &input.network.graph;
            let seed = rng::derive_seed(cfg.seed(), &[0xde9]);
            let m = MissModel::preset(&model, n, Some(g), seed, &cfg.missingness.preset_options())?;
            let mut sampler = cfg.missingness.sampler(n);
            sampler.seed = rng::derive_seed(seed, &[1]);
            let d = missmodels::generate(&m, n, Some(fraction), &sampler, input.data())?;
            let p = netmiss_core::graph::apply_mask(g, &d)?;
            let dir = runner::out_dir(&cfg);
            let path = dir.join("partial.csv");
            io::write_partial(&path, &p, &input.network.labels)?;
            io::write_mask(&dir.join("mask.csv"), &d, &input.network.labels)?;
            println!(
                "{} of {} dyads missing ({}); wrote {}",
                p.missing_count(),
                g.dyad_count(),
                missmodels::classify_assumption(&m).label(),
                path.display()
            );
            Ok(())
        }
        Command::Experiment { common } => {
            let cfg = common.load()?;
            let input = runner::load_input(&cfg)?;
            let base = runner::baseline(&cfg, &input)?;
            print_fit(&base);
            let plan = runner::experiment_plan(&cfg, &input)?;
            eprintln!("running {} tasks", plan.record_count());
            let records = runner::run_experiment(&plan, &input.network.graph, input.data(), cfg.threads)?;
            let dir = runner::out_dir(&cfg);
            runner::write_experiment(&dir, &cfg, &base, &input.spec.labels(), &records)?;
            let failed = records.iter().filter(|r| !r.result.converged).count();
            println!("{} records, {} failed; wrote {}", records.len(), failed, dir.display());
            Ok(())
        }
        Command::Sweep { common, param, levels } => {
            let mut cfg = common.load()?;
            if let Some(p) = param {
                parse_sweep_param(&p)?;
                cfg.sweep.param = p;
            }
            if let Some(l) = levels {
                cfg.sweep.levels = parse_list(&l)?;
            }
            cfg.validate()?;
            let input = runner::load_input(&cfg)?;
            let base = runner::baseline(&cfg, &input)?;
            print_fit(&base);
            let plan = runner::sweep_plan(&cfg, &input)?;
            let table = runner::run_sweep(&plan, &input.network.graph, &input.spec, input.data(), cfg.threads)?;
            let dir = runner::out_dir(&cfg);
            runner::write_sweep(&dir, &cfg, &base, &table)?;
            for lv in &table.levels {
                println!(
                    "level {:>6}: {} failures of {}, observed edges {:.2}",
                    lv.level, lv.failures, lv.replicates, lv.observed_edges.mean
                );
            }
            println!("wrote {}", dir.display());
            Ok(())
        }
        Command::Marlab { g10, g01, g11, p, q } => {
            let mech: PairMechanism = match (g10, g01, g11, p, q) {
                (Some(a), Some(b), Some(c), None, None) => marlab::build_mar_pair(pair(&a)?, pair(&b)?, c)?,
                (None, None, None, Some(a), Some(b)) => marlab::product_pair(pair(&a)?, pair(&b)?)?,
                _ => {
                    return Err(ConfigError::Invalid("give --g10, --g01 and --g11, or --p and --q".into()).into());
                }
            };
            print!("{mech}");
            let (row, col) = marlab::marginals(&mech);
            println!("class: {}", marlab::check_mar(&mech).label());
            let cells = |t: [[f64; 2]; 2]| format!("{:.4} {:.4} {:.4} {:.4}", t[0][0], t[0][1], t[1][0], t[1][1]);
            println!("P(first missing)  by (x_ij, x_ik) = 00 01 10 11: {}", cells(row));
            println!("P(second missing) by (x_ij, x_ik) = 00 01 10 11: {}", cells(col));
            Ok(())
        }
        Command::Enumerate { n, terms, theta } => {
            if n > 5 {
                return Err(RunError::Config(ConfigError::Invalid(format!(
                    "exact enumeration is limited to n <= 5, got {n}"
                ))));
            }
            let terms = terms.split(',').map(parse_term).collect::<std::result::Result<Vec<_>, _>>()?;
            let k = terms.len();
            let theta = match theta {
                Some(t) => parse_list(&t)?,
                None => vec![0.0; k],
            };
            let spec = ModelSpec::new(terms, theta).map_err(|e| ConfigError::Invalid(e.to_string()))?;
            let exact = sampler::enumerate_exact(&spec, n, None)?;
            println!("log normaliser {}", exact.log_normaliser);
            for (i, label) in spec.labels().iter().enumerate() {
                let row: Vec<String> = (0..k).map(|j| format!("{:.6}", exact.cov[(i, j)])).collect();
                println!("{label:<20} mean {:.6} cov [{}]", exact.mean[i], row.join(", "));
            }
            Ok(())
        }
    }
}
