use std::collections::BTreeSet;
use std::path::Path;

use serde_json::json;

use super::config::{builtin_mixture, ExperimentConfig, PoolInit};
use super::io::{ensure_dir, load_pool, load_sample_table, load_samples, save_json, save_samples, save_text};
use super::plot::render_svg;
use super::sweep::run_sweep;
use super::{BaselineArgs, BaselineKind, EvalArgs, GenArgs, PlotArgs, SweepArgs, TrainArgs};
use crate::baselines::{kmeans_confusion, kmeans_fit, KnnModel, DEFAULT_KNN_K, DEFAULT_SPLIT_SHARE};
use crate::error::{check_dim, Error, Result};
use crate::evalkit::{evaluate_heads, probe_pool, score_rankings, Evaluation, TopnErrors};
use crate::headmap::{associate_labels, AssociationConfig};
use crate::learner::{DomainBox, Pool};
use crate::rng::streams;
use crate::synthdata::{gen_mixture_stream, LabeledSample};
use crate::Label;

pub fn gen(args: &GenArgs) -> Result<()> {
    let cfg = args.common.resolve()?;
    let spec = cfg.mixture_spec()?;
    ensure_dir(&cfg.out_dir)?;
    let splits = [
        ("train.csv", cfg.sizes.train, streams::TRAIN_SPLIT),
        ("calib.csv", cfg.sizes.calib, streams::CALIB_SPLIT),
        ("test.csv", cfg.sizes.test, streams::TEST_SPLIT),
    ];
    for (name, n, stream) in splits {
        let samples = gen_mixture_stream(&spec, n, cfg.seed, stream)?;
        let path = cfg.out_dir.join(name);
        save_samples(&path, spec.dim(), &samples)?;
        println!("{}: {} samples, {} features", path.display(), n, spec.dim());
    }
    Ok(())
}

/// Mean over coordinates of the per-coordinate standard deviation.
pub fn estimate_sigma(samples: &[LabeledSample]) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::invalid("estimating sigma needs at least two samples"));
    }
    let dim = samples[0].x.len();
    let n = samples.len() as f64;
    let mut total = 0.0;
    for k in 0..dim {
        let mean = samples.iter().map(|s| s.x[k]).sum::<f64>() / n;
        let var = samples.iter().map(|s| (s.x[k] - mean).powi(2)).sum::<f64>() / (n - 1.0);
        total += var.sqrt();
    }
    let sigma = total / dim as f64;
    if sigma > 0.0 {
        Ok(sigma)
    } else {
        Err(Error::invalid("samples have zero spread"))
    }
}

/// The initial pool for `cfg`. `reference` supplies the automatic domain
/// and, with `auto_domain`, the σ estimate.
pub fn initial_pool(cfg: &ExperimentConfig, dim: usize, reference: &[LabeledSample]) -> Result<Pool> {
    let domain = match cfg.domain {
        Some([lo, hi]) => DomainBox::cube(dim, lo, hi)?,
        None if reference.is_empty() => {
            return Err(Error::invalid("no samples to infer the domain from; pass --domain"))
        }
        None => DomainBox::from_samples(reference.iter().map(|s| s.x.as_slice()))?,
    };
    let sigma = match cfg.sigma {
        Some(s) => s,
        None if cfg.auto_domain => estimate_sigma(reference)?,
        None => match builtin_mixture(&cfg.mixture) {
            Some(spec) => spec?.mean_sigma(),
            None => cfg.mixture_spec()?.mean_sigma(),
        },
    };
    let learner = cfg.learner.resolve(sigma, cfg.seed)?;
    match cfg.init {
        PoolInit::Grid(ppd) => Pool::init_grid(&domain, ppd, learner),
        PoolInit::Random(count) => Pool::init_random(&domain, count, cfg.seed, learner),
    }
}

fn assoc(cfg: &ExperimentConfig) -> AssociationConfig {
    AssociationConfig {
        weighting: cfg.weighting,
    }
}

pub fn train(args: &TrainArgs) -> Result<()> {
    let cfg = args.common.resolve()?;
    let train_path = args.train.clone().unwrap_or_else(|| cfg.out_dir.join("train.csv"));
    let (dim, train) = load_sample_table(&train_path)?;
    let calib = args.calib.as_deref().map(load_samples).transpose()?;
    let test = args.test.as_deref().map(load_samples).transpose()?;
    for s in calib.iter().chain(test.iter()).flatten() {
        check_dim(dim, s.x.len())?;
    }
    let reference = calib.as_deref().filter(|c| !c.is_empty()).unwrap_or(&train);
    let mut pool = initial_pool(&cfg, dim, reference)?;
    ensure_dir(&cfg.out_dir)?;
    save_json(&cfg.out_dir.join("initial.json"), &pool)?;

    let assoc = assoc(&cfg);
    let mut probe = |p: &Pool| -> Result<TopnErrors> {
        match (&calib, &test) {
            (Some(c), Some(t)) if !c.is_empty() => probe_pool(p, c, t, &cfg.ns, &assoc),
            _ => Ok(TopnErrors::new()),
        }
    };
    let mut trace = pool.train(train.iter().map(|s| s.x.as_slice()), cfg.cadence, Some(&mut probe))?;
    if args.no_wall {
        trace.checkpoints.iter_mut().for_each(|c| c.wall_ms = 0.0);
    }
    save_json(&cfg.out_dir.join("snapshot.json"), &pool)?;
    save_text(&cfg.out_dir.join("trace.csv"), &trace.to_csv(!args.no_wall))?;
    save_json(&cfg.out_dir.join("trace.json"), &trace)?;
    let st = pool.stats;
    println!(
        "trained {} planes on {} samples: {} shifts, {} rotations, {} degenerate frames",
        pool.len(),
        st.samples,
        st.shifts,
        st.rotations,
        st.degenerate_frames
    );
    if let Some(last) = trace.checkpoints.last().filter(|c| !c.topn_errors.is_empty()) {
        println!("final checkpoint: {}", format_errors(&last.topn_errors));
    }
    Ok(())
}

fn same_file(a: &Path, b: &Path) -> bool {
    match (a.canonicalize(), b.canonicalize()) {
        (Ok(x), Ok(y)) if x == y => true,
        _ => matches!((std::fs::read(a), std::fs::read(b)), (Ok(x), Ok(y)) if x == y),
    }
}

fn format_errors(errors: &TopnErrors) -> String {
    errors
        .iter()
        .map(|(n, e)| format!("top{n}={e:.4}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn report(ev: &Evaluation, out_dir: &Path, prefix: &str) -> Result<()> {
    for (n, e) in &ev.topn_errors {
        println!("top{n}\t{e}");
    }
    print!("{}", ev.confusion.to_tsv());
    save_json(&out_dir.join(format!("{prefix}metrics.json")), ev)?;
    save_text(&out_dir.join(format!("{prefix}confusion.tsv")), &ev.confusion.to_tsv())
}

/// Evaluates a pool exactly as `eval` does; shared with the tests.
pub fn evaluate_pool(
    pool: &Pool,
    calib: &[LabeledSample],
    test: &[LabeledSample],
    cfg: &ExperimentConfig,
) -> Result<(crate::headmap::HeadSet, Evaluation)> {
    let heads = associate_labels(pool, calib, &assoc(cfg))?;
    let ev = evaluate_heads(pool, &heads, test, &cfg.ns)?;
    Ok((heads, ev))
}

pub fn eval(args: &EvalArgs) -> Result<()> {
    let cfg = args.common.resolve()?;
    if same_file(&args.calib, &args.test) {
        eprintln!("warning: calibration and test data are identical; the reported errors are optimistic");
    }
    let pool = load_pool(&args.snapshot)?;
    let calib = load_samples(&args.calib)?;
    let test = load_samples(&args.test)?;
    for s in calib.iter().chain(&test) {
        check_dim(pool.dim, s.x.len())?;
    }
    let (heads, ev) = evaluate_pool(&pool, &calib, &test, &cfg)?;
    ensure_dir(&cfg.out_dir)?;
    save_json(&cfg.out_dir.join("heads.json"), &heads)?;
    report(&ev, &cfg.out_dir, "")
}

fn distinct_labels(samples: &[LabeledSample]) -> usize {
    samples.iter().map(|s| s.label).collect::<BTreeSet<Label>>().len()
}

pub fn baseline(args: &BaselineArgs) -> Result<()> {
    let cfg = args.common.resolve()?;
    let train = load_samples(&args.train)?;
    let test = load_samples(&args.test)?;
    if train.is_empty() {
        return Err(Error::invalid("training file has no samples"));
    }
    let dim = train[0].x.len();
    for s in &test {
        check_dim(dim, s.x.len())?;
    }
    ensure_dir(&cfg.out_dir)?;
    match args.kind {
        BaselineKind::Knn => {
            let k = args.k.unwrap_or(DEFAULT_KNN_K);
            let model = KnnModel::new(train, k)?;
            let width = cfg.ns.iter().copied().max().unwrap_or(1).min(model.labels().len());
            let predictions = test
                .iter()
                .map(|s| model.classify(&s.x, width))
                .collect::<Result<Vec<_>>>()?;
            let truths: Vec<Label> = test.iter().map(|s| s.label).collect();
            report(&score_rankings(&predictions, &truths, &cfg.ns)?, &cfg.out_dir, "knn_")
        }
        BaselineKind::Kmeans => {
            let k = args.k.unwrap_or_else(|| distinct_labels(&train));
            let xs: Vec<&[f64]> = train.iter().map(|s| s.x.as_slice()).collect();
            let model = kmeans_fit(&xs, k, args.max_iters, cfg.seed)?;
            let rep = kmeans_confusion(&model, &test, DEFAULT_SPLIT_SHARE);
            let tsv = rep.matrix.to_tsv().replacen("true\\pred", "class\\cluster", 1);
            print!("{tsv}");
            for (class, clusters) in &rep.split_classes {
                println!("split: class {class} across clusters {clusters:?}");
            }
            for (cluster, classes) in &rep.shared_clusters {
                println!("shared: cluster {cluster} is the majority cluster of classes {classes:?}");
            }
            save_text(&cfg.out_dir.join("kmeans_confusion.tsv"), &tsv)?;
            save_json(
                &cfg.out_dir.join("kmeans_report.json"),
                &json!({
                    "k": k,
                    "iterations": model.iterations,
                    "converged": model.converged,
                    "inertia": model.inertia,
                    "majority": rep.majority,
                    "split_classes": rep.split_classes,
                    "shared_clusters": rep.shared_clusters,
                }),
            )
        }
    }
}

pub fn plot(args: &PlotArgs) -> Result<()> {
    let after = load_pool(&args.snapshot)?;
    let before = args.before.as_deref().map(load_pool).transpose()?;
    let samples = args.samples.as_deref().map(load_samples).transpose()?.unwrap_or_default();
    let pools: Vec<&Pool> = before.iter().chain(std::iter::once(&after)).collect();
    let svg = render_svg(&samples, &pools)?;
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        ensure_dir(dir)?;
    }
    save_text(&args.out, &svg)
}

pub fn sweep(args: &SweepArgs) -> Result<()> {
    let report = run_sweep(&args.dims, args.grid, args.train_size, args.seed)?;
    let csv = report.to_csv(!args.no_wall);
    print!("{csv}");
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        ensure_dir(dir)?;
    }
    save_text(&args.out, &csv)
}

