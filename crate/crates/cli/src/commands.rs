use std::path::{Path, PathBuf};

use dsfs::active::Learner;
use dsfs::lp::SolverTolerances;
use dsfs::{eval, io, network, robust_box, Result};

use crate::config::RunConfig;
use crate::{Common, TrainArgs};

fn load(common: &Common) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(common.config.as_deref())?;
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(d) = &common.out_dir {
        cfg.output_dir = d.clone();
    }
    cfg.active.seed = cfg.seed;
    cfg.validate()?;
    Ok(cfg)
}

fn with_network(mut cfg: RunConfig, network: Option<PathBuf>) -> RunConfig {
    if network.is_some() {
        cfg.network.path = network;
    }
    cfg
}

pub fn gen_network(
    common: &Common,
    buses: Option<usize>,
    ders: Option<usize>,
    horizon: Option<usize>,
    start_hour: Option<f64>,
) -> Result<()> {
    let mut cfg = RunConfig::load(common.config.as_deref())?;
    cfg.seed = common.seed.unwrap_or(cfg.seed);
    if let Some(d) = &common.out_dir {
        cfg.output_dir = d.clone();
    }
    cfg.network.buses = buses.unwrap_or(cfg.network.buses);
    cfg.network.ders = ders.unwrap_or(cfg.network.ders);
    cfg.network.horizon = horizon.unwrap_or(cfg.network.horizon);
    cfg.validate()?;
    let (feeder, ders) = cfg.generate(start_hour)?;
    let model = network::assemble_compact(&feeder, &ders, &SolverTolerances::default())?;
    io::write_json(cfg.out("feeder.json")?, &io::FeederFile { feeder, ders })?;
    io::write_network(cfg.out("network.json")?, &model)?;
    println!(
        "network: {} buses, {} DERs, T = {}, {} constraint rows, {} DER variables",
        model.n,
        model.m,
        model.t,
        model.num_rows(),
        model.num_vars()
    );
    Ok(())
}

pub fn innerbox(common: &Common, network: Option<PathBuf>) -> Result<()> {
    let cfg = with_network(load(common)?, network);
    let model = cfg.model()?;
    let b = robust_box::solve_inner_box(&model, &SolverTolerances::default())?;
    io::write_json(cfg.out("innerbox.json")?, &io::InnerBoxFile::from(&b))?;
    println!("inner box: {:?} to {:?}, total width {:.6}", b.p0_minus, b.p0_plus, b.objective);
    if b.degenerate {
        println!("warning: inner box is degenerate");
    }
    Ok(())
}

pub fn test_set(common: &Common, network: Option<PathBuf>, count: Option<usize>) -> Result<()> {
    let cfg = with_network(load(common)?, network);
    let model = cfg.model()?;
    let count = count.unwrap_or(cfg.eval.test_count);
    let test = eval::make_test_set(&model, count, cfg.active.inflation, cfg.seed)?;
    io::write_samples(cfg.out("test.csv")?, &test, model.t)?;
    let feasible = test.iter().filter(|s| s.label.is_feasible()).count();
    println!("test set: {count} points, {feasible} feasible");
    Ok(())
}

pub fn train(common: &Common, args: &TrainArgs) -> Result<()> {
    let mut cfg = with_network(load(common)?, args.network.clone());
    if let Some(s) = args.strategy() {
        cfg.active.strategy = s;
    }
    if args.no_inner_box {
        cfg.active.use_inner_box = false;
    }
    if args.no_hull_labeling {
        cfg.active.use_hull_labeling = false;
    }
    if let Some(e) = args.epochs {
        cfg.active.epochs = e;
    }
    if let Some(p) = args.pool_size {
        cfg.active.pool_size = p;
    }
    cfg.validate()?;
    let model = cfg.model()?;
    let warm = args.warm_start.as_ref().map(io::read_checkpoint::<f64>).transpose()?;
    let learner = Learner::new(&model, cfg.active.clone(), cfg.train.clone())?;
    let eval_set = eval::make_test_set(&model, cfg.eval.test_count, cfg.active.inflation, cfg.seed)?;
    let out_dir = cfg.output_dir.clone();
    std::fs::create_dir_all(&out_dir)?;
    let result = learner.run_with(warm.as_ref(), &eval_set, |state, rec| {
        if args.checkpoints {
            io::write_checkpoint(out_dir.join(format!("model_epoch{}.json", rec.epoch)), &state.params)?;
        }
        Ok(())
    })?;
    let mut params = result.params.clone();
    if let Some(p) = &args.warm_start {
        params.meta.source_window = Some(p.display().to_string());
    }
    io::write_checkpoint(cfg.out("model.json")?, &params)?;
    io::write_csv(cfg.out("history.csv")?, &result.history)?;
    io::write_json(cfg.out("innerset.json")?, &result.state.inner)?;
    io::write_samples(cfg.out("samples.csv")?, &result.state.labeled, model.t)?;
    let s = &result.state;
    println!(
        "trained {} epochs: {} labeled ({} oracle, {} hull), final F1 {:.4}",
        s.epoch,
        s.labeled.len(),
        s.oracle_calls,
        s.hull_labels,
        result.history.last().map_or(result.initial.f1, |r| r.f1)
    );
    if s.degenerate_box {
        println!("warning: inner box is degenerate; hull labeling starts empty");
    }
    Ok(())
}

pub fn classify(common: &Common, model: &Path, samples: &Path, out: Option<PathBuf>) -> Result<()> {
    let cfg = load(common)?;
    let params = io::read_checkpoint::<f64>(model)?;
    let rows = io::read_samples::<f64>(samples)?;
    let pts: Vec<Vec<f64>> = rows.iter().map(|s| s.p0.clone()).collect();
    let post = params.posterior_rows(&pts)?;
    let out = match out {
        Some(p) => p,
        None => cfg.out("classified.csv")?,
    };
    let t = params.input_dim();
    let mut header: Vec<String> = (1..=t).map(|k| format!("p0_{k}")).collect();
    header.extend(["predicted".into(), "posterior".into()]);
    let mut text = header.join(",") + "\n";
    for (p, pr) in pts.iter().zip(post.iter()) {
        let coords: Vec<String> = p.iter().map(|v| v.to_string()).collect();
        text += &format!("{},{},{:?}\n", coords.join(","), i8::from(*pr > 0.5), pr);
    }
    std::fs::write(&out, text)?;
    println!("classified {} points into {}", pts.len(), out.display());
    Ok(())
}

pub fn evaluate(common: &Common, model: &Path, test: &Path) -> Result<()> {
    let cfg = load(common)?;
    let params = io::read_checkpoint::<f64>(model)?;
    let test = io::read_samples::<f64>(test)?;
    let report = eval::score(&params, &test)?;
    io::write_json(cfg.out("report.json")?, &report)?;
    println!(
        "tp {} fp {} fn {} tn {}  precision {:.4} recall {:.4} f1 {:.4} accuracy {:.4}",
        report.tp, report.fp, report.fn_, report.tn, report.precision, report.recall, report.f1, report.accuracy
    );
    Ok(())
}

pub fn heatmap(common: &Common, model: &Path, network: Option<PathBuf>, resolution: Option<usize>) -> Result<()> {
    let cfg = with_network(load(common)?, network);
    let params = io::read_checkpoint::<f64>(model)?;
    let net = cfg.model()?;
    let res = resolution.unwrap_or(cfg.eval.grid_resolution);
    let rows = eval::heatmap_grid(&params, &net, cfg.eval.grid_window, res, cfg.active.inflation)?;
    io::write_grid(cfg.out("grid.csv")?, &rows)?;
    println!("grid: {} cells", rows.len());
    Ok(())
}

pub fn rolling(common: &Common, windows: Option<Vec<usize>>, epochs: Option<usize>) -> Result<()> {
    let mut cfg = load(common)?;
    if let Some(e) = epochs {
        cfg.active.epochs = e;
    }
    let windows = windows.unwrap_or_else(|| cfg.eval.windows.clone());
    let factory = |hour: usize| {
        let (f, d) = cfg.generate(Some(hour as f64))?;
        network::assemble_compact(&f, &d, &SolverTolerances::default())
    };
    let hist = eval::rolling_horizon(factory, &windows, &cfg.active, &cfg.train)?;
    let rows = io::rolling_rows(&hist);
    io::write_csv(cfg.out("rolling.csv")?, &rows)?;
    for h in &hist {
        let mean = |v: &[dsfs::active::EpochRecord]| v.iter().map(|r| r.f1).sum::<f64>() / v.len() as f64;
        println!("window {}: mean F1 warm {:.4}, cold {:.4}", h.window, mean(&h.warm), mean(&h.cold));
    }
    Ok(())
}

pub fn robustness(
    common: &Common,
    model: &Path,
    feeder: &Path,
    levels: Option<Vec<f64>>,
    count: Option<usize>,
) -> Result<()> {
    let cfg = load(common)?;
    let params = io::read_checkpoint::<f64>(model)?;
    let ff: io::FeederFile<f64> = io::read_json(feeder)?;
    let levels = levels.unwrap_or_else(|| cfg.eval.levels.clone());
    let count = count.unwrap_or(cfg.eval.per_level_count);
    let rows = eval::robustness_sweep(&ff.feeder, &ff.ders, &levels, count, &params, cfg.active.inflation, cfg.seed)?;
    io::write_robustness(cfg.out("robustness.csv")?, &rows)?;
    for r in &rows {
        println!("level {:.2}: F1 {:.4} (retried {})", r.level, r.f1, r.scenarios_retried);
    }
    Ok(())
}
