use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use simiscale::dimensions::QuantityRegistry;
use simiscale::pi_engine::{enumerate_pi_sets, EnumerationLimits, PiSet, PiSetFile};
use simiscale::regressor::{design_matrix, grid_search, train, TrainedModel};
use simiscale::scaling::{build_training_pairs, write_pairs_csv, FeatureSchema, PairSet, RefSelector};
use simiscale::selection::{rank_pi_sets, write_ranking_csv};
use simiscale::testbench::{generate_fleet, FleetSpec};
use simiscale::validation::{predict_targets, validate_model, write_scaled_csv, BaselineReference};
use simiscale::{Dataset, Error};

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::svg::{self, Series};
use crate::{Command, Common, TrainInputs};

type CliResult<T> = std::result::Result<T, CliError>;

struct Ctx {
    cfg: ExperimentConfig,
    seed: u64,
    out: PathBuf,
}

impl Ctx {
    fn new(common: &Common) -> CliResult<Self> {
        if common.serial {
            // Fails only when a pool already exists, which cannot happen here.
            let _ = rayon::ThreadPoolBuilder::new().num_threads(1).build_global();
        }
        let cfg = match &common.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        let seed = common.seed.or(cfg.seed).unwrap_or(0);
        let out = common
            .out
            .clone()
            .or_else(|| cfg.paths.out.clone())
            .unwrap_or_else(|| PathBuf::from("."));
        std::fs::create_dir_all(&out).map_err(|e| Error::Io { path: out.clone(), source: e })?;
        Ok(Self { cfg, seed, out })
    }

    fn path(&self, flag: &Option<PathBuf>, from_cfg: &Option<PathBuf>, name: &str) -> CliResult<PathBuf> {
        flag.clone()
            .or_else(|| from_cfg.clone())
            .ok_or_else(|| CliError::Config(format!("missing --{name} (or paths.{} in the config)", name.replace('-', "_"))))
    }

    fn create(&self, name: &str) -> CliResult<BufWriter<File>> {
        let path = self.out.join(name);
        let f = File::create(&path).map_err(|e| Error::Io { path, source: e })?;
        Ok(BufWriter::new(f))
    }

    fn write_text(&self, name: &str, text: &str) -> CliResult<()> {
        let path = self.out.join(name);
        std::fs::write(&path, text).map_err(|e| Error::Io { path, source: e })?;
        Ok(())
    }
}

pub fn run(cmd: Command) -> CliResult<()> {
    match cmd {
        Command::Analyze { common, registry, data, target, top_k } => analyze(&common, registry, data, target, top_k),
        Command::Generate { common, spec } => generate(&common, spec),
        Command::Train { common, inputs } => cmd_train(&common, &inputs),
        Command::Gridsearch { common, inputs } => gridsearch(&common, &inputs),
        Command::Scale { common, model, data } => scale(&common, model, data),
        Command::Validate { common, model, data, reference_data } => validate(&common, model, data, reference_data),
    }
}

fn load_data(path: &Path) -> CliResult<Dataset> {
    let data = Dataset::load_csv(path)?;
    if data.is_empty() {
        return Err(Error::Parse {
            source_name: path.display().to_string(),
            row: 1,
            column: String::new(),
            message: "no data rows".into(),
        }
        .into());
    }
    Ok(data)
}

fn analyze(
    common: &Common,
    registry: Option<PathBuf>,
    data: Option<PathBuf>,
    target: Option<String>,
    top_k: Option<usize>,
) -> CliResult<()> {
    let ctx = Ctx::new(common)?;
    let opts = &ctx.cfg.analyze;
    let registry = QuantityRegistry::load(ctx.path(&registry, &ctx.cfg.paths.registry, "registry")?)?;
    let data = load_data(&ctx.path(&data, &ctx.cfg.paths.data, "data")?)?;
    let target = target
        .or_else(|| opts.target.clone())
        .unwrap_or_else(|| registry.target().name.clone());
    let registry = registry.retarget(&target)?;
    let limits = EnumerationLimits { max_sets: opts.max_sets, max_abs_exponent: opts.max_abs_exponent };
    let sets = enumerate_pi_sets(&registry, &target, limits)?;
    let ranking = rank_pi_sets(&sets, &data, top_k.unwrap_or(opts.top_k), opts.valid_floor)?;
    if ranking.ranked.is_empty() {
        let reason = ranking.rejected.first().map(|(_, r)| r.clone()).unwrap_or_default();
        if reason.contains("constant") {
            return Err(Error::UndefinedCorrelation(format!("target `{target}`: {reason}")).into());
        }
        return Err(Error::InvalidInput(format!("no candidate pi set is valid on the data: {reason}")).into());
    }
    let ranked: Vec<PiSet> = ranking.ranked.iter().map(|r| r.set.clone()).collect();
    PiSetFile::from_sets(&ranked)?.save(ctx.out.join("pi_sets.json"))?;
    write_ranking_csv(&ranking, ctx.create("ranking.csv")?)?;
    let best = &ranking.ranked[0];
    println!(
        "{} candidate sets, {} ranked, {} rejected; best rms={:.6} {}",
        sets.len(),
        ranking.ranked.len(),
        ranking.rejected.len(),
        best.report.rms_score,
        best.set
    );
    Ok(())
}

fn generate(common: &Common, spec: Option<PathBuf>) -> CliResult<()> {
    let ctx = Ctx::new(common)?;
    let spec = FleetSpec::load(ctx.path(&spec, &ctx.cfg.paths.spec, "spec")?)?;
    let data = generate_fleet(&spec, ctx.seed)?;
    data.write_csv(ctx.create("dataset.csv")?)?;
    println!("{} records for {} machines", data.len(), spec.machines.len());
    Ok(())
}

struct Prepared {
    set: PiSet,
    pairs: PairSet,
    schema: FeatureSchema,
}

fn prepare(ctx: &Ctx, inputs: &TrainInputs) -> CliResult<Prepared> {
    let opts = &ctx.cfg.train;
    let data = load_data(&ctx.path(&inputs.data, &ctx.cfg.paths.data, "data")?)?;
    let sets = PiSetFile::load(ctx.path(&inputs.pi_sets, &ctx.cfg.paths.pi_sets, "pi-sets")?)?;
    let index = inputs.set_index.unwrap_or(opts.set_index);
    let set = sets
        .get(index)
        .cloned()
        .ok_or_else(|| Error::InvalidInput(format!("set index {index} out of range ({} sets)", sets.len())))?;
    let data = data.filter(|r| !opts.exclude_machines.contains(&r.key.machine_id));
    let reference = opts.reference.as_ref();
    let selector = match (reference.and_then(|r| r.key.clone()), &inputs.reference_machine) {
        (Some(key), None) => RefSelector::Explicit { key },
        (_, flag) => {
            let machine_id = flag
                .clone()
                .or_else(|| reference.and_then(|r| r.machine_id.clone()))
                .or_else(|| data.machine_ids().into_iter().next())
                .ok_or_else(|| Error::InvalidInput("no training records left".into()))?;
            RefSelector::Seeded { machine_id, seed: ctx.seed }
        }
    };
    let pairs = build_training_pairs(&set, &data, &selector)?;
    let schema = FeatureSchema::for_set(&set, opts.include_raw_pi);
    Ok(Prepared { set, pairs, schema })
}

fn cmd_train(common: &Common, inputs: &TrainInputs) -> CliResult<()> {
    let ctx = Ctx::new(common)?;
    let p = prepare(&ctx, inputs)?;
    let mut cfg = ctx.cfg.train.mlp.clone();
    cfg.seed = ctx.seed;
    write_pairs_csv(&p.set, &p.pairs.pairs, ctx.create("pairs.csv")?)?;
    let model = train(&p.set, &p.pairs, p.schema, &cfg, ctx.cfg.train.split)?;
    model.save(ctx.out.join("model.json"))?;
    let show = |r: Option<f64>| r.map_or("n/a".to_string(), |v| format!("{v:.6}"));
    println!(
        "{} pairs (reference {}); r2_train={} r2_val={}",
        p.pairs.pairs.len(),
        p.pairs.reference.key,
        show(model.metrics.r2_train),
        show(model.metrics.r2_val)
    );
    Ok(())
}

fn gridsearch(common: &Common, inputs: &TrainInputs) -> CliResult<()> {
    let ctx = Ctx::new(common)?;
    let spec = ctx
        .cfg
        .grid
        .clone()
        .ok_or_else(|| CliError::Config("gridsearch needs a [grid] table in the config".into()))?;
    let p = prepare(&ctx, inputs)?;
    let (xs, ys, groups) = design_matrix(&p.pairs, &p.schema);
    let result = grid_search(&xs, &ys, &groups, &spec, &ctx.cfg.train.mlp, ctx.cfg.train.split, ctx.seed)?;
    result.write_csv(ctx.create("grid.csv")?)?;
    result.write_heatmap_csv(ctx.create("heatmap.csv")?)?;
    result.write_marginal_csv(ctx.create("marginal_units.csv")?)?;

    let units: Vec<String> = result.unit_values().iter().map(|u| u.to_string()).collect();
    let drops: Vec<String> = result.dropout_values().iter().map(|d| d.to_string()).collect();
    ctx.write_text(
        "heatmap.svg",
        &svg::heatmap("Validation R² by units and dropout", "dropout", "units per layer", &units, &drops, &result.heatmap()),
    )?;
    let marginal = result.marginal_units();
    let points: Vec<(f64, f64)> = marginal.iter().map(|&(u, r)| (u as f64, r)).collect();
    ctx.write_text(
        "marginal_units.svg",
        &svg::line_chart(
            "Best validation R² by units",
            "units per layer",
            "R²",
            &[Series { name: "best mean R²", points, color: "#1f77b4", dashed: false, scatter: false }],
        ),
    )?;
    for (u, r) in marginal {
        println!("units={u} best_mean_r2={r:.6}");
    }
    Ok(())
}

fn load_model(ctx: &Ctx, flag: &Option<PathBuf>) -> CliResult<TrainedModel> {
    Ok(TrainedModel::load(ctx.path(flag, &ctx.cfg.paths.model, "model")?)?)
}

fn scale(common: &Common, model: Option<PathBuf>, data: Option<PathBuf>) -> CliResult<()> {
    let ctx = Ctx::new(common)?;
    let model = load_model(&ctx, &model)?;
    let data = load_data(&ctx.path(&data, &ctx.cfg.paths.data, "data")?)?;
    let rows = predict_targets(&model, &data)?;
    let set = model.pi_set()?;
    write_scaled_csv(set.target_name(), &rows, ctx.create("scaled.csv")?)?;
    println!("{} records scaled", rows.len());
    Ok(())
}

fn validate(
    common: &Common,
    model: Option<PathBuf>,
    data: Option<PathBuf>,
    reference_data: Option<PathBuf>,
) -> CliResult<()> {
    let ctx = Ctx::new(common)?;
    let opts = &ctx.cfg.validate;
    let model = load_model(&ctx, &model)?;
    let all = load_data(&ctx.path(&data, &ctx.cfg.paths.data, "data")?)?;
    let truth = if opts.machines.is_empty() {
        all.clone()
    } else {
        all.filter(|r| opts.machines.contains(&r.key.machine_id))
    };
    let ref_path = reference_data.or_else(|| ctx.cfg.paths.reference_data.clone());
    let ref_data = match ref_path {
        Some(p) => load_data(&p)?,
        None => all,
    };
    let baseline = match &opts.baseline_machine {
        Some(m) => BaselineReference::Corresponding { data: &ref_data, machine_id: m },
        None => BaselineReference::Model,
    };
    let report = validate_model(&model, &truth, baseline, opts.error_floor)?;
    report.write_summary_csv(ctx.create("summary.csv")?)?;
    report.write_errors_csv(ctx.create("errors.csv")?)?;

    let by_load = |curve: &simiscale::regressor::ErrorCurve| {
        let mut pts: Vec<(f64, f64)> = curve.points.iter().map(|p| (p.load, p.percent)).collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        pts
    };
    let learned = by_load(&report.learned);
    let base = by_load(&report.baseline);
    let span = |pts: &[(f64, f64)], mean: f64| match (pts.first(), pts.last()) {
        (Some(a), Some(b)) => vec![(a.0, mean), (b.0, mean)],
        _ => Vec::new(),
    };
    let learned_mean = span(&learned, report.learned.mean);
    let base_mean = span(&base, report.baseline.mean);
    let mean_label = format!("learned mean {:.3}%", report.learned.mean);
    let base_label = format!("baseline mean {:.3}%", report.baseline.mean);
    ctx.write_text(
        "error_vs_load.svg",
        &svg::line_chart(
            "Percentage error of the estimated target",
            "load",
            "error (%)",
            &[
                Series { name: "learned", points: learned, color: "#1f77b4", dashed: false, scatter: true },
                Series { name: "baseline (δ₁ = 1)", points: base, color: "#d62728", dashed: false, scatter: true },
                Series { name: &mean_label, points: learned_mean, color: "#1f77b4", dashed: true, scatter: false },
                Series { name: &base_label, points: base_mean, color: "#d62728", dashed: true, scatter: false },
            ],
        ),
    )?;
    let pts: Vec<(f64, f64)> = report.deltas.iter().map(|d| (d.delta_true, d.delta_pred)).collect();
    ctx.write_text("delta_scatter.svg", &svg::parity_plot("Predicted vs actual δ₁", &pts, report.r2_delta))?;

    let r2 = report.r2_delta.map_or("undefined".to_string(), |v| format!("{v:.6}"));
    println!(
        "learned mean error {:.4}%, baseline mean error {:.4}%, R²(δ₁) {r2}, {} points, {} skipped",
        report.learned.mean,
        report.baseline.mean,
        report.learned.points.len(),
        report.skipped
    );
    Ok(())
}
