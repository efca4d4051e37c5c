//! Parallel drivers. Tasks carry their own seeds, so records are identical
//! for any thread count and are returned in task order.

use std::path::{Path, PathBuf};
use std::time::Instant;

use netmiss_core::estimate::{EstimationConfig, EstimationResult};
use netmiss_core::experiment::{
    self, aggregate_sweep, run_sweep_task, run_task, sweep_tasks, ExperimentPlan, NamedModel, RunRecord, SweepPlan,
    SweepTable,
};
use netmiss_core::missmodels::MissModel;
use netmiss_core::{fixtures, rng, Graph, ModelSpec, NodeData};
use rayon::prelude::*;

use crate::config::{parse_spec, parse_sweep_param, Config, ConfigError};
use crate::io::{self, AttrSchema, DataError, Network};
use crate::output;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Core(#[from] netmiss_core::Error),
}

impl RunError {
    /// Machine-readable error class.
    pub fn class(&self) -> &'static str {
        match self.exit_code() {
            2 => "config",
            _ if matches!(self, RunError::Core(netmiss_core::Error::BaselineFailed(_))) => "baseline",
            _ => "data",
        }
    }

    /// 2 for configuration errors, 3 for data errors and baseline failure.
    pub fn exit_code(&self) -> i32 {
        use netmiss_core::Error as E;
        match self {
            RunError::Config(_) => 2,
            RunError::Data(_) => 3,
            RunError::Core(
                E::BaselineFailed(_)
                | E::Degenerate(_)
                | E::DimensionMismatch { .. }
                | E::UnknownAttribute(_)
                | E::AttributeLength { .. },
            ) => 3,
            RunError::Core(_) => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, RunError>;

/// Network, node data and estimation model named by a configuration.
#[derive(Clone, Debug)]
pub struct Input {
    pub id: String,
    pub network: Network,
    pub spec: ModelSpec,
}

impl Input {
    pub fn n(&self) -> usize {
        self.network.graph.n()
    }

    pub fn data(&self) -> Option<&NodeData> {
        Some(&self.network.data)
    }
}

pub fn synthetic_graph(s: &crate::config::SyntheticConfig) -> Result<Graph> {
    let need = |v: Option<f64>, name: &str| {
        v.ok_or_else(|| ConfigError::Invalid(format!("synthetic `{}` needs `{name}`", s.kind)))
    };
    Ok(match s.kind.as_str() {
        "clustered" => fixtures::clustered(s.n, s.seed)?,
        "bernoulli" => fixtures::bernoulli(s.n, need(s.p, "p")?, s.seed),
        "hub_heavy" => {
            fixtures::hub_heavy(s.n, s.hubs.unwrap_or(3), need(s.p_hub, "p_hub")?, need(s.p_base, "p_base")?, s.seed)
        }
        other => return Err(ConfigError::Invalid(format!("unknown synthetic network kind `{other}`")).into()),
    })
}

pub fn load_input(cfg: &Config) -> Result<Input> {
    cfg.validate()?;
    let spec = parse_spec(&cfg.model.terms)?;
    let net = &cfg.network;
    let (network, default_id) = if let Some(edges) = &net.edges {
        let schema = (net.numeric.is_some() || net.categorical.is_some()).then(|| AttrSchema {
            numeric: net.numeric.clone().unwrap_or_default(),
            categorical: net.categorical.clone().unwrap_or_default(),
        });
        let network = io::load_network(edges, net.attributes.as_deref(), schema.as_ref())?;
        let id = edges.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "network".into());
        (network, id)
    } else {
        let s = net.synthetic.as_ref().expect("validated");
        let graph = synthetic_graph(s)?;
        let n = graph.n();
        let network = Network { graph, data: NodeData::new(n), labels: (0..n).map(|i| format!("v{i}")).collect() };
        (network, s.kind.clone())
    };
    spec.compile(network.graph.n(), Some(&network.data))?;
    Ok(Input { id: net.id.clone().unwrap_or(default_id), network, spec })
}

pub fn estimation_config(cfg: &Config, n: usize) -> EstimationConfig {
    cfg.estimation.config(n)
}

/// Complete-data fit; an unconverged fit is an error.
pub fn baseline(cfg: &Config, input: &Input) -> Result<EstimationResult> {
    let mut est = estimation_config(cfg, input.n());
    est.sampler.seed = rng::derive_seed(cfg.seed(), &[0xba5e]);
    Ok(experiment::run_baseline(&input.spec, &input.network.graph, &est, input.data())?)
}

pub fn experiment_plan(cfg: &Config, input: &Input) -> Result<ExperimentPlan> {
    let m = &cfg.missingness;
    let opts = m.preset_options();
    let n = input.n();
    let models = m
        .models
        .iter()
        .map(|name| {
            let seed = rng::derive_seed(cfg.seed(), &[0x30de1, rng::label_hash(name)]);
            let model = MissModel::preset(name, n, Some(&input.network.graph), seed, &opts)?;
            Ok(NamedModel { name: name.clone(), model })
        })
        .collect::<std::result::Result<Vec<_>, netmiss_core::Error>>()?;
    let plan = ExperimentPlan {
        network_id: input.id.clone(),
        spec: input.spec.clone(),
        models,
        fractions: m.fractions.clone(),
        representations: m.representations()?,
        replicates: m.replicates,
        base_seed: cfg.seed(),
        estimation: estimation_config(cfg, n),
        miss_sampler: m.sampler(n),
    };
    plan.validate()?;
    Ok(plan)
}

pub fn sweep_plan(cfg: &Config, input: &Input) -> Result<SweepPlan> {
    let n = input.n();
    let s = &cfg.sweep;
    let plan = SweepPlan {
        param: parse_sweep_param(&s.param)?,
        levels: s.levels.clone(),
        fraction: s.fraction,
        replicates: s.replicates,
        base_seed: cfg.seed(),
        estimation: estimation_config(cfg, n),
        miss_sampler: cfg.missingness.sampler(n),
    };
    plan.validate()?;
    Ok(plan)
}

fn pool(threads: Option<usize>) -> rayon::ThreadPool {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        b = b.num_threads(t);
    }
    b.build().expect("thread pool")
}

/// All records of `plan` in task order, with wall times.
pub fn run_experiment(
    plan: &ExperimentPlan,
    x: &Graph,
    data: Option<&NodeData>,
    threads: Option<usize>,
) -> Result<Vec<RunRecord>> {
    plan.validate()?;
    let tasks = experiment::tasks(plan);
    let records = pool(threads).install(|| {
        tasks
            .par_iter()
            .map(|t| {
                let start = Instant::now();
                let mut r = run_task(plan, x, data, t)?;
                r.wall_time = Some(start.elapsed().as_secs_f64());
                Ok(r)
            })
            .collect::<std::result::Result<Vec<_>, netmiss_core::Error>>()
    })?;
    Ok(records)
}

pub fn run_sweep(
    plan: &SweepPlan,
    x: &Graph,
    spec: &ModelSpec,
    data: Option<&NodeData>,
    threads: Option<usize>,
) -> Result<SweepTable> {
    plan.validate()?;
    let tasks = sweep_tasks(plan);
    let runs = pool(threads).install(|| {
        tasks
            .par_iter()
            .map(|t| run_sweep_task(plan, x, spec, data, t))
            .collect::<std::result::Result<Vec<_>, netmiss_core::Error>>()
    })?;
    Ok(aggregate_sweep(plan, x, spec, &runs)?)
}

pub fn out_dir(cfg: &Config) -> PathBuf {
    cfg.out.clone().unwrap_or_else(|| PathBuf::from("netmiss-out"))
}

/// Hash of everything that can change the results.
pub fn result_hash(cfg: &Config) -> String {
    let mut c = cfg.clone();
    c.threads = None;
    c.out = None;
    c.hash()
}

fn write(dir: &Path, name: &str, text: &str) -> Result<()> {
    Ok(io::write_bytes(&dir.join(name), text.as_bytes())?)
}

pub fn write_svgs(dir: &Path, plots: &[(String, String)]) -> Result<()> {
    let plot_dir = dir.join("plots");
    for (stem, svg) in plots {
        write(&plot_dir, &format!("{stem}.svg"), svg)?;
    }
    Ok(())
}

/// Writes the effective configuration without the settings that cannot
/// change results.
pub fn write_config(dir: &Path, cfg: &Config) -> Result<()> {
    let mut c = cfg.clone();
    c.threads = None;
    c.out = None;
    let text = toml::to_string(&c).map_err(|e| ConfigError::Invalid(e.to_string()))?;
    write(dir, "config.toml", &text)
}

/// Writes `baseline.csv`, `records.csv`, `failure_rates.csv` and plots.
pub fn write_experiment(
    dir: &Path,
    cfg: &Config,
    baseline: &EstimationResult,
    labels: &[String],
    records: &[RunRecord],
) -> Result<()> {
    let (hash, seed) = (result_hash(cfg), cfg.seed());
    write_config(dir, cfg)?;
    write(dir, "baseline.csv", &output::baseline_csv(baseline, &hash, seed))?;
    write(dir, "records.csv", &output::records_csv(records, labels, Some(baseline), &hash, seed))?;
    write(dir, "failure_rates.csv", &output::failure_csv(records, &hash, seed))?;
    write_svgs(dir, &output::experiment_plots(records, labels, Some(&baseline.theta_hat), &hash, seed))
}

/// Writes `baseline.csv`, `sweep.csv` and plots.
pub fn write_sweep(dir: &Path, cfg: &Config, baseline: &EstimationResult, table: &SweepTable) -> Result<()> {
    let (hash, seed) = (result_hash(cfg), cfg.seed());
    write_config(dir, cfg)?;
    write(dir, "baseline.csv", &output::baseline_csv(baseline, &hash, seed))?;
    write(dir, "sweep.csv", &output::sweep_csv(table, &hash, seed))?;
    write_svgs(dir, &output::sweep_plots(table, &baseline.theta_hat, &hash, seed))
}

pub fn write_fit(dir: &Path, cfg: &Config, fit: &EstimationResult) -> Result<()> {
    write(dir, "fit.csv", &output::baseline_csv(fit, &result_hash(cfg), cfg.seed()))
}
