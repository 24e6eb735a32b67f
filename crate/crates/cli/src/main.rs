//! `vsumm` — command-line front end for the evaluation toolkit.
//!
//! Subcommands: `segment`, `randtest`, `rankeval`, `curve`, `synth`,
//! `validate`. All randomness flows from the `--seed` flag; identical
//! invocations produce byte-identical output files. Exit codes: 0 success,
//! 2 usage or data error, 1 internal failure.

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use vsumm_core::curves::{
    accumulate_curve, annotator_curves, curve_bounds, emit_curves, mean_reference_scores,
    random_baseline, CorrelationCurve, CurveFormat,
};
use vsumm_core::datamodel::validate_segmentation;
use vsumm_core::harness::{
    rank_reports_to_csv, reports_to_csv, run_budget_sweep, run_human_loo, run_randomization_test,
    run_rank_eval, Aggregation, ExperimentConfig, ExperimentReport, RankScorer, ReferenceMode,
    ScorerSpec,
};
use vsumm_core::ingest::{
    load_json_dataset, load_prediction_scores, load_tvsum_tsv, synth_dataset, write_json_dataset,
    DatasetBundle, SynthConfig,
};
use vsumm_core::seeding::trial_rng;
use vsumm_core::segmentation::{segment_video, SegmenterSpec};
use vsumm_core::selection::Pooling;

const DATA_DIR_ENV: &str = "VSUMM_DATA_DIR";

#[derive(Parser)]
#[command(name = "vsumm", version, about = "Video summarization evaluation toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Segment every video in a dataset and write the boundaries as JSON.
    Segment(SegmentArgs),
    /// Run the randomization test and write a report (JSON + CSV table).
    Randtest(RandtestArgs),
    /// Rank-correlation evaluation (Kendall tau-b, Spearman rho).
    Rankeval(RankevalArgs),
    /// Emit accumulated-score correlation curves per video.
    Curve(CurveArgs),
    /// Generate a synthetic dataset in the neutral JSON format.
    Synth(SynthArgs),
    /// Validate a dataset (and optionally a segmentation file) and report violations.
    Validate(ValidateArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Uniform,
    OnePeak,
    TwoPeak,
    Kts,
    RandomizedKts,
}

#[derive(Args, Clone)]
struct SegmenterArgs {
    /// Segmentation method.
    #[arg(long, value_enum, default_value = "two-peak")]
    method: MethodArg,
    /// Uniform segment length in frames.
    #[arg(long, default_value_t = 60)]
    len_frames: usize,
    /// One-peak Poisson rate.
    #[arg(long, default_value_t = 60.0)]
    lambda: f64,
    /// Two-peak short-component rate.
    #[arg(long, default_value_t = 30.0)]
    lambda_short: f64,
    /// Two-peak long-component rate.
    #[arg(long, default_value_t = 90.0)]
    lambda_long: f64,
    /// Two-peak probability of the short component.
    #[arg(long, default_value_t = 0.5)]
    p_short: f64,
    /// KTS penalty constant.
    #[arg(long, default_value_t = 1.0)]
    penalty_c: f64,
    /// KTS maximum candidate segment count (default: n_frames / 30).
    #[arg(long)]
    max_segments: Option<usize>,
    /// KTS minimum segment length.
    #[arg(long, default_value_t = 1)]
    min_seg_len: usize,
}

impl SegmenterArgs {
    fn to_spec(&self) -> SegmenterSpec {
        match self.method {
            MethodArg::Uniform => SegmenterSpec::Uniform {
                len_frames: self.len_frames,
            },
            MethodArg::OnePeak => SegmenterSpec::OnePeak {
                lambda: self.lambda,
            },
            MethodArg::TwoPeak => SegmenterSpec::TwoPeak {
                lambda_short: self.lambda_short,
                lambda_long: self.lambda_long,
                p_short: self.p_short,
            },
            MethodArg::Kts => SegmenterSpec::Kts {
                penalty_c: self.penalty_c,
                max_segments: self.max_segments,
                min_seg_len: self.min_seg_len,
            },
            MethodArg::RandomizedKts => SegmenterSpec::RandomizedKts {
                penalty_c: self.penalty_c,
                max_segments: self.max_segments,
                min_seg_len: self.min_seg_len,
            },
        }
    }
}

#[derive(Args, Clone)]
struct DatasetArgs {
    /// Dataset path: neutral JSON, or a TVSum-style .tsv with a videos.json
    /// sidecar. Relative paths resolve against $VSUMM_DATA_DIR when set.
    #[arg(long)]
    dataset: PathBuf,
    /// Sidecar metadata for TSV datasets (default: videos.json next to the TSV).
    #[arg(long)]
    videos_json: Option<PathBuf>,
    /// Shot duration in seconds for TSV annotations.
    #[arg(long, default_value_t = 2.0)]
    shot_sec: f64,
}

#[derive(Args)]
struct SegmentArgs {
    #[command(flatten)]
    dataset: DatasetArgs,
    #[command(flatten)]
    segmenter: SegmenterArgs,
    /// Master seed for random segmenters.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output JSON path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RandtestArgs {
    #[command(flatten)]
    dataset: DatasetArgs,
    #[command(flatten)]
    segmenter: SegmenterArgs,
    /// Candidate scorer: `random`, `pred:<path>`, or `annotator:<index>`.
    #[arg(long, default_value = "random")]
    scorer: String,
    /// Frame-score pooling for the candidate.
    #[arg(long, value_enum, default_value = "mean")]
    pooling: PoolingArg,
    /// Summary budget as a fraction of video length; repeat for a sweep.
    #[arg(long, num_args = 1.., default_values_t = [0.15])]
    budget: Vec<f64>,
    /// Trials per setting.
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads (output is independent of this).
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Reference source: auto, scores (regenerate per trial), masks (fixed).
    #[arg(long, value_enum, default_value = "auto")]
    references: ReferencesArg,
    /// Also run the human leave-one-out baseline.
    #[arg(long, default_value_t = false)]
    human_loo: bool,
    /// Aggregation highlighted in the stdout summary.
    #[arg(long, value_enum, default_value = "both")]
    aggregation: AggregationArg,
    /// Output report path (.json); a CSV table lands next to it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PoolingArg {
    Mean,
    Sum,
}

impl From<PoolingArg> for Pooling {
    fn from(value: PoolingArg) -> Self {
        match value {
            PoolingArg::Mean => Pooling::Mean,
            PoolingArg::Sum => Pooling::Sum,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReferencesArg {
    Auto,
    Scores,
    Masks,
}

impl From<ReferencesArg> for ReferenceMode {
    fn from(value: ReferencesArg) -> Self {
        match value {
            ReferencesArg::Auto => ReferenceMode::Auto,
            ReferencesArg::Scores => ReferenceMode::FromScores,
            ReferencesArg::Masks => ReferenceMode::FromMasks,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AggregationArg {
    Avg,
    Max,
    Both,
}

impl From<AggregationArg> for Aggregation {
    fn from(value: AggregationArg) -> Self {
        match value {
            AggregationArg::Avg => Aggregation::Avg,
            AggregationArg::Max => Aggregation::Max,
            AggregationArg::Both => Aggregation::Both,
        }
    }
}

#[derive(Args)]
struct RankevalArgs {
    #[command(flatten)]
    dataset: DatasetArgs,
    /// Prediction-score file to evaluate.
    #[arg(long, group = "mode")]
    pred: Option<PathBuf>,
    /// Evaluate random scores (averaged over --trials).
    #[arg(long, group = "mode")]
    random: bool,
    /// Evaluate each annotator against the rest.
    #[arg(long, group = "mode")]
    loo: bool,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Output report path (.json); a CSV table lands next to it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CurveArgs {
    #[command(flatten)]
    dataset: DatasetArgs,
    /// Prediction-score file; adds one curve per video.
    #[arg(long)]
    pred: Option<PathBuf>,
    /// Restrict to one video id (default: all videos with annotations).
    #[arg(long)]
    video: Option<String>,
    /// Output directory; one file per video.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Csv,
    Svg,
}

#[derive(Args)]
struct SynthArgs {
    /// Synthetic-dataset config (JSON, see SynthConfig fields).
    #[arg(long)]
    config: PathBuf,
    /// Output dataset path (neutral JSON).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    dataset: DatasetArgs,
    /// Segmentations JSON (as written by `segment`) to check against the dataset.
    #[arg(long)]
    segmentations: Option<PathBuf>,
}

struct Failure {
    code: i32,
    message: String,
}

fn data_err<E: Display>(e: E) -> Failure {
    Failure {
        code: 2,
        message: e.to_string(),
    }
}

fn internal_err<E: Display>(e: E) -> Failure {
    Failure {
        code: 1,
        message: e.to_string(),
    }
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Segment(args) => cmd_segment(args),
        Command::Randtest(args) => cmd_randtest(args),
        Command::Rankeval(args) => cmd_rankeval(args),
        Command::Curve(args) => cmd_curve(args),
        Command::Synth(args) => cmd_synth(args),
        Command::Validate(args) => cmd_validate(args),
    };
    match result {
        Ok(()) => {}
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            std::process::exit(failure.code);
        }
    }
}

/// Resolves a dataset path against $VSUMM_DATA_DIR when the path is
/// relative and does not exist as given.
fn resolve_dataset_path(path: &Path) -> PathBuf {
    if path.is_absolute() || path.exists() {
        return path.to_path_buf();
    }
    match std::env::var_os(DATA_DIR_ENV) {
        Some(root) => Path::new(&root).join(path),
        None => path.to_path_buf(),
    }
}

fn load_bundle(args: &DatasetArgs) -> Result<DatasetBundle, Failure> {
    let path = resolve_dataset_path(&args.dataset);
    let is_tsv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("tsv"));
    if is_tsv {
        let sidecar = match &args.videos_json {
            Some(p) => resolve_dataset_path(p),
            None => path
                .parent()
                .unwrap_or_else(|| Path::new("."))
                .join("videos.json"),
        };
        load_tvsum_tsv(&path, &sidecar, args.shot_sec).map_err(data_err)
    } else {
        load_json_dataset(&path).map_err(data_err)
    }
}

fn echo_config<T: Serialize>(command: &str, config: &T) {
    let body = serde_json::to_string(config).expect("config serialization");
    println!(
        "{{\"command\":\"{command}\",\"version\":\"{}\",\"config\":{body}}}",
        env!("CARGO_PKG_VERSION")
    );
}

fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(internal_err)?;
        }
    }
    std::fs::write(path, text).map_err(internal_err)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).map_err(internal_err)?;
    text.push('\n');
    write_text(path, &text)
}

#[derive(Serialize)]
struct SegmentOutput {
    version: String,
    command: String,
    seed: u64,
    segmenter: SegmenterSpec,
    segmentations: BTreeMap<String, Vec<usize>>,
}

fn cmd_segment(args: SegmentArgs) -> Result<(), Failure> {
    let spec = args.segmenter.to_spec();
    spec.validate().map_err(data_err)?;
    let bundle = load_bundle(&args.dataset)?;

    #[derive(Serialize)]
    struct Echo<'a> {
        seed: u64,
        segmenter: &'a SegmenterSpec,
        dataset: &'a Path,
    }
    echo_config(
        "segment",
        &Echo {
            seed: args.seed,
            segmenter: &spec,
            dataset: &args.dataset.dataset,
        },
    );

    let mut segmentations = BTreeMap::new();
    for video in &bundle.videos {
        let features = bundle.features.get(&video.video_id).map(|f| f.as_slice());
        let mut rng = trial_rng(args.seed, 0, &video.video_id, "segment-cli");
        let seg = segment_video(&spec, video, features, &mut rng).map_err(data_err)?;
        segmentations.insert(video.video_id.clone(), seg.boundaries);
    }

    let output = SegmentOutput {
        version: env!("CARGO_PKG_VERSION").to_string(),
        command: "segment".to_string(),
        seed: args.seed,
        segmenter: spec,
        segmentations,
    };
    write_json(&args.out, &output)?;
    println!("wrote {}", args.out.display());
    Ok(())
}

fn parse_scorer(raw: &str) -> Result<ScorerSpec, Failure> {
    if raw == "random" {
        return Ok(ScorerSpec::Random);
    }
    if let Some(path) = raw.strip_prefix("pred:") {
        return Ok(ScorerSpec::FromFile {
            path: resolve_dataset_path(Path::new(path)),
        });
    }
    if let Some(index) = raw.strip_prefix("annotator:") {
        let index: usize = index
            .parse()
            .map_err(|_| data_err(format!("bad annotator index in scorer {raw:?}")))?;
        return Ok(ScorerSpec::HumanAnnotator { index });
    }
    Err(data_err(format!(
        "unknown scorer {raw:?} (expected random, pred:<path>, or annotator:<index>)"
    )))
}

#[derive(Serialize)]
struct RandtestOutput {
    version: String,
    command: String,
    reports: Vec<ExperimentReport>,
}

fn cmd_randtest(args: RandtestArgs) -> Result<(), Failure> {
    let scorer = parse_scorer(&args.scorer)?;
    for &fraction in &args.budget {
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(data_err(format!(
                "budget fraction must lie in (0, 1], got {fraction}"
            )));
        }
    }
    let bundle = load_bundle(&args.dataset)?;
    let cfg = ExperimentConfig {
        segmenter: args.segmenter.to_spec(),
        scorer,
        pooling: args.pooling.into(),
        budget_fraction: args.budget[0],
        trials: args.trials,
        master_seed: args.seed,
        aggregation: args.aggregation.into(),
        references: args.references.into(),
    };
    cfg.validate().map_err(data_err)?;
    echo_config("randtest", &cfg);

    let mut reports = if args.budget.len() == 1 {
        vec![run_randomization_test(&bundle, &cfg, args.jobs).map_err(data_err)?]
    } else {
        run_budget_sweep(&bundle, &cfg, &args.budget, args.jobs).map_err(data_err)?
    };
    if args.human_loo {
        for &fraction in &args.budget {
            let mut loo_cfg = cfg.clone();
            loo_cfg.budget_fraction = fraction;
            reports.push(run_human_loo(&bundle, &loo_cfg, args.jobs).map_err(data_err)?);
        }
    }

    for report in &reports {
        let show = report.config.aggregation;
        let mut line = format!(
            "{} / {} @ {:.0}%:",
            report.method,
            report.config.segmenter.label(),
            report.config.budget_fraction * 100.0
        );
        if !matches!(show, Aggregation::Max) {
            line.push_str(&format!(
                " avg-F1 {:.3} ±{:.3}",
                report.dataset_mean_avg_f1, report.ci_avg_f1.half_width_95
            ));
        }
        if !matches!(show, Aggregation::Avg) {
            line.push_str(&format!(
                " max-F1 {:.3} ±{:.3}",
                report.dataset_mean_max_f1, report.ci_max_f1.half_width_95
            ));
        }
        println!("{line}");
    }

    let output = RandtestOutput {
        version: env!("CARGO_PKG_VERSION").to_string(),
        command: "randtest".to_string(),
        reports,
    };
    write_json(&args.out, &output)?;
    let csv_path = args.out.with_extension("csv");
    let refs: Vec<&ExperimentReport> = output.reports.iter().collect();
    write_text(&csv_path, &reports_to_csv(&refs))?;
    println!("wrote {}", args.out.display());
    println!("wrote {}", csv_path.display());
    Ok(())
}

fn cmd_rankeval(args: RankevalArgs) -> Result<(), Failure> {
    let bundle = load_bundle(&args.dataset)?;
    let modes = [args.pred.is_some(), args.random, args.loo];
    if modes.iter().filter(|&&m| m).count() != 1 {
        return Err(data_err(
            "choose exactly one of --pred <path>, --random, --loo",
        ));
    }
    let scorer = if let Some(pred) = &args.pred {
        let path = resolve_dataset_path(pred);
        let map = load_prediction_scores(&path, &bundle).map_err(data_err)?;
        RankScorer::Predictions(map)
    } else if args.random {
        RankScorer::Random
    } else {
        RankScorer::LeaveOneOut
    };

    #[derive(Serialize)]
    struct Echo<'a> {
        method: &'a str,
        trials: usize,
        seed: u64,
    }
    echo_config(
        "rankeval",
        &Echo {
            method: scorer.label(),
            trials: args.trials,
            seed: args.seed,
        },
    );

    let report =
        run_rank_eval(&bundle, &scorer, args.trials, args.seed, args.jobs).map_err(data_err)?;
    println!(
        "{}: tau {:.4} rho {:.4} ({} videos, {} trials)",
        report.method,
        report.dataset.tau,
        report.dataset.rho,
        report.videos.len(),
        report.trials
    );
    if report.degenerate_pairs > 0 {
        println!(
            "warning: {} degenerate constant-score pairs reported as correlation 0",
            report.degenerate_pairs
        );
    }

    write_json(&args.out, &report)?;
    let csv_path = args.out.with_extension("csv");
    write_text(&csv_path, &rank_reports_to_csv(&[&report]))?;
    println!("wrote {}", args.out.display());
    println!("wrote {}", csv_path.display());
    Ok(())
}

fn cmd_curve(args: CurveArgs) -> Result<(), Failure> {
    let bundle = load_bundle(&args.dataset)?;
    let predictions = match &args.pred {
        Some(pred) => {
            let path = resolve_dataset_path(pred);
            Some(load_prediction_scores(&path, &bundle).map_err(data_err)?)
        }
        None => None,
    };

    let videos: Vec<&str> = match &args.video {
        Some(vid) => {
            if bundle.video(vid).is_none() {
                return Err(data_err(format!("unknown video {vid}")));
            }
            vec![vid.as_str()]
        }
        None => bundle
            .videos
            .iter()
            .filter(|v| bundle.annotations.contains_key(&v.video_id))
            .map(|v| v.video_id.as_str())
            .collect(),
    };
    if videos.is_empty() {
        return Err(data_err("no videos with annotations to plot"));
    }

    #[derive(Serialize)]
    struct Echo<'a> {
        videos: &'a [&'a str],
        format: &'a str,
        pred: Option<&'a Path>,
    }
    let format_name = match args.format {
        FormatArg::Csv => "csv",
        FormatArg::Svg => "svg",
    };
    echo_config(
        "curve",
        &Echo {
            videos: &videos,
            format: format_name,
            pred: args.pred.as_deref(),
        },
    );

    std::fs::create_dir_all(&args.out).map_err(internal_err)?;
    for vid in videos {
        let ann = bundle
            .annotations
            .get(vid)
            .ok_or_else(|| data_err(format!("video {vid} has no annotations")))?;
        let all_mean = mean_reference_scores(ann);
        let bounds = curve_bounds(&all_mean).map_err(data_err)?;
        let baseline = random_baseline(all_mean.len());

        let mut curve_list: Vec<CorrelationCurve> = Vec::new();
        if let Some(map) = &predictions {
            curve_list.push(accumulate_curve(&map[vid], &all_mean, "prediction").map_err(data_err)?);
        }
        if ann.n_annotators() >= 2 {
            curve_list.extend(annotator_curves(ann).map_err(data_err)?);
        }
        if curve_list.is_empty() {
            return Err(data_err(format!(
                "video {vid}: need --pred or at least 2 annotators to plot"
            )));
        }

        let (format, ext) = match args.format {
            FormatArg::Csv => (CurveFormat::Csv, "csv"),
            FormatArg::Svg => (CurveFormat::Svg, "svg"),
        };
        let path = args.out.join(format!("{vid}.{ext}"));
        emit_curves(&curve_list, &bounds, &baseline, &path, format).map_err(internal_err)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_synth(args: SynthArgs) -> Result<(), Failure> {
    let path = resolve_dataset_path(&args.config);
    let text = std::fs::read_to_string(&path)
        .map_err(|e| data_err(format!("reading {}: {e}", path.display())))?;
    let cfg: SynthConfig = serde_json::from_str(&text)
        .map_err(|e| data_err(format!("parsing {}: {e}", path.display())))?;
    cfg.validate().map_err(data_err)?;
    echo_config("synth", &cfg);

    let bundle = synth_dataset(&cfg).map_err(data_err)?;
    write_json_dataset(&bundle, &args.out).map_err(internal_err)?;
    println!(
        "wrote {} ({} videos, {} annotators each)",
        args.out.display(),
        bundle.videos.len(),
        cfg.n_annotators
    );
    Ok(())
}

fn cmd_validate(args: ValidateArgs) -> Result<(), Failure> {
    let bundle = load_bundle(&args.dataset)?;
    bundle.validate().map_err(data_err)?;
    println!(
        "dataset ok: {} videos, {} annotated, {} with reference masks, {} with features",
        bundle.videos.len(),
        bundle.annotations.len(),
        bundle.reference_masks.len(),
        bundle.features.len()
    );

    if let Some(seg_path) = &args.segmentations {
        let text = std::fs::read_to_string(seg_path)
            .map_err(|e| data_err(format!("reading {}: {e}", seg_path.display())))?;
        let parsed: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| data_err(format!("parsing {}: {e}", seg_path.display())))?;
        let segmentations = parsed
            .get("segmentations")
            .and_then(|v| v.as_object())
            .ok_or_else(|| data_err("segmentation file has no \"segmentations\" object"))?;

        let mut violation_count = 0usize;
        for (vid, boundaries) in segmentations {
            let video = bundle
                .video(vid)
                .ok_or_else(|| data_err(format!("segmentations reference unknown video {vid}")))?;
            let boundaries: Vec<usize> = serde_json::from_value(boundaries.clone())
                .map_err(|e| data_err(format!("segmentations.{vid}: {e}")))?;
            let seg = vsumm_core::datamodel::Segmentation::new_unchecked(vid.clone(), boundaries);
            for violation in validate_segmentation(&seg, video) {
                println!("{vid}: {violation}");
                violation_count += 1;
            }
        }
        if violation_count > 0 {
            return Err(data_err(format!("{violation_count} segmentation violations")));
        }
        println!("segmentations ok: {} videos", segmentations.len());
    }
    Ok(())
}
