//! Command-line front end: parameter selection, training, classification,
//! evaluation, and benchmarking over the CSV and stream formats.
//!
//! Exit codes: 0 on success, 2 on parse errors, 3 on protocol or
//! precondition errors.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use dde_mgm::classifier::OnlineClassifier;
use dde_mgm::embedding::EmbeddingConfig;
use dde_mgm::harness::dataset::{load_csv, parse_stream_line, Dataset, StreamEvent};
use dde_mgm::harness::persist::{load_model, save_model, save_model_to_vec};
use dde_mgm::harness::{bench_rate, eval_holdout, eval_online, eval_online_parallel};
use dde_mgm::params::{
    dominant_freq_index, pooled_cell_sizes, select_delay, select_params, SelectParamsOptions,
};
use dde_mgm::signal::Series;
use dde_mgm::{Error, Prediction, Result};

#[derive(Parser)]
#[command(
    name = "dde-mgm",
    version,
    about = "Online modeling and classification of streaming time series"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Select delay step, embedding dimension, and cell sizes from data.
    SelectParams {
        /// Dataset CSV (`series_id,label,v1,...,vn`).
        #[arg(long)]
        input: PathBuf,
        /// Series drawn per class.
        #[arg(long, default_value_t = 5)]
        per_class: usize,
        /// Grid bins per dimension.
        #[arg(long, default_value_t = 50)]
        bins: usize,
        /// Seed for the per-class draws.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        json: bool,
    },
    /// Train per-class models and write a model file.
    Train {
        /// Dataset CSV; omit when feeding labeled samples on stdin.
        #[arg(long, required_unless_present = "stdin", conflicts_with = "stdin")]
        input: Option<PathBuf>,
        /// Read `label,v1,...,vn` lines from stdin; a blank line ends the
        /// open series.
        #[arg(long)]
        stdin: bool,
        #[arg(long)]
        s: usize,
        #[arg(long)]
        d: usize,
        /// Grid bins per dimension for the cell-size rule.
        #[arg(long)]
        bins: usize,
        #[arg(long, default_value_t = 1)]
        r: usize,
        #[arg(long, default_value_t = 1)]
        tau: usize,
        /// Output model path.
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Classify series from a CSV file or a stdin stream.
    Classify {
        /// Model file written by `train`.
        #[arg(long)]
        model: PathBuf,
        /// Dataset CSV to classify series by series.
        #[arg(long, required_unless_present = "stdin", conflicts_with = "stdin")]
        input: Option<PathBuf>,
        /// Read `v1,...,vn` lines from stdin; a blank line resets the
        /// stream and reports the segment.
        #[arg(long)]
        stdin: bool,
        /// Also report every K samples while streaming.
        #[arg(long)]
        emit_every: Option<usize>,
        #[arg(long)]
        json: bool,
    },
    /// Run an evaluation protocol over a dataset.
    Eval {
        #[arg(long)]
        input: PathBuf,
        /// Evaluation protocol.
        #[arg(long, value_enum)]
        protocol: Protocol,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        params: ParamFlags,
        /// Training fraction for the holdout protocol.
        #[arg(long, default_value_t = 0.5)]
        split: f64,
        /// Series drawn per class when auto-selecting parameters.
        #[arg(long, default_value_t = 5)]
        per_class: usize,
        /// Run the online protocol's two actors on separate threads.
        #[arg(long)]
        parallel: bool,
        #[arg(long)]
        json: bool,
    },
    /// Measure modeling throughput across grid sizes.
    Bench {
        #[arg(long)]
        input: PathBuf,
        /// Grid sizes to sweep.
        #[arg(long, value_delimiter = ',', default_value = "20,30,40,50,60")]
        bins_sweep: Vec<usize>,
        /// Delay step; defaults to the dominant-frequency rule with d.
        #[arg(long)]
        s: Option<usize>,
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long, default_value_t = 1)]
        tau: usize,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum Protocol {
    Holdout50,
    Online,
}

#[derive(Args)]
struct ParamFlags {
    /// Delay step; auto-selected when omitted.
    #[arg(long)]
    s: Option<usize>,
    /// Embedding dimension; auto-selected when omitted.
    #[arg(long)]
    d: Option<usize>,
    /// Grid bins per dimension.
    #[arg(long, default_value_t = 50)]
    bins: usize,
    /// Neighborhood radius in cells.
    #[arg(long, default_value_t = 1)]
    r: usize,
    /// Derivative lag.
    #[arg(long, default_value_t = 1)]
    tau: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::SelectParams {
            input,
            per_class,
            bins,
            seed,
            json,
        } => cmd_select_params(&input, per_class, bins, seed, json),
        Command::Train {
            input,
            stdin,
            s,
            d,
            bins,
            r,
            tau,
            model,
            json,
        } => cmd_train(input.as_deref(), stdin, s, d, bins, r, tau, &model, json),
        Command::Classify {
            model,
            input,
            stdin,
            emit_every,
            json,
        } => cmd_classify(&model, input.as_deref(), stdin, emit_every, json),
        Command::Eval {
            input,
            protocol,
            seed,
            params,
            split,
            per_class,
            parallel,
            json,
        } => cmd_eval(
            &input, protocol, seed, &params, split, per_class, parallel, json,
        ),
        Command::Bench {
            input,
            bins_sweep,
            s,
            d,
            tau,
            json,
        } => cmd_bench(&input, &bins_sweep, s, d, tau, json),
    }
}

fn cmd_select_params(
    input: &std::path::Path,
    per_class: usize,
    bins: usize,
    seed: u64,
    json: bool,
) -> Result<()> {
    let dataset = load_csv(input)?;
    let classes = dataset.series_by_label();
    let opts = SelectParamsOptions {
        per_class_k: per_class,
        bins,
        seed,
        ..SelectParamsOptions::default()
    };
    let sel = select_params(&classes, &opts)?;
    if json {
        println!(
            "{}",
            json!({
                "s": sel.s,
                "d": sel.d,
                "cell_sizes": sel.cell_sizes,
                "per_class": sel.per_class.iter().map(|c| json!({
                    "label": c.label,
                    "s_values": c.s_values,
                    "d_values": c.d_values,
                })).collect::<Vec<_>>(),
            })
        );
    } else {
        println!("s={}", sel.s);
        println!("d={}", sel.d);
        println!("cells={}", join_display(&sel.cell_sizes));
        for c in &sel.per_class {
            println!(
                "class label={} s_mean={} d_mean={} s_raw={} d_raw={}",
                c.label,
                c.mean_s(),
                c.mean_d(),
                join_display(&c.s_values),
                join_display(&c.d_values),
            );
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_train(
    input: Option<&std::path::Path>,
    stdin: bool,
    s: usize,
    d: usize,
    bins: usize,
    r: usize,
    tau: usize,
    model_path: &std::path::Path,
    json: bool,
) -> Result<()> {
    let pairs: Vec<(String, Series)> = if stdin {
        read_labeled_stdin()?
    } else {
        let dataset = load_csv(input.expect("clap enforces input"))?;
        dataset
            .entries()
            .iter()
            .map(|e| (e.label.clone(), e.series.clone()))
            .collect()
    };
    if pairs.is_empty() {
        return Err(Error::EmptyInput("training data"));
    }
    let n = pairs[0].1.dim();
    let sizes = pooled_cell_sizes(pairs.iter().map(|(_, s)| s), bins, tau)?;
    let config = EmbeddingConfig::new(n, s, d, tau, &sizes)?;
    let mut clf = OnlineClassifier::new(config, r);
    for (label, series) in &pairs {
        clf.train_series(label, series)?;
    }
    save_model(&clf, model_path)?;

    let bytes = save_model_to_vec(&clf)?.len();
    let store = clf.store().read();
    let classes = store.len();
    let observations: u64 = store.values().map(|m| m.observations()).sum();
    if json {
        println!(
            "{}",
            json!({
                "model": model_path.display().to_string(),
                "classes": classes,
                "observations": observations,
                "model_bytes": bytes,
            })
        );
    } else {
        println!("model={}", model_path.display());
        println!("classes={classes}");
        println!("observations={observations}");
        println!("model_bytes={bytes}");
    }
    Ok(())
}

fn cmd_classify(
    model_path: &std::path::Path,
    input: Option<&std::path::Path>,
    stdin: bool,
    emit_every: Option<usize>,
    json: bool,
) -> Result<()> {
    let mut clf = load_model(model_path)?;
    if clf.trained_labels().is_empty() {
        return Err(Error::EmptyModel);
    }
    let stdout = std::io::stdout();
    let mut out = stdout.lock();

    if stdin {
        let n = clf.config().n();
        let mut samples_in_segment = 0usize;
        let mut segment = 0usize;
        let locked = std::io::stdin().lock();
        for (i, line) in locked.lines().enumerate() {
            let line = line?;
            match parse_stream_line(&line, false, "<stdin>", i + 1)? {
                StreamEvent::Boundary => {
                    if samples_in_segment > 0 {
                        report_prediction(&mut out, segment, clf.prediction(), json, true)?;
                        segment += 1;
                        samples_in_segment = 0;
                    }
                    clf.reset_scores();
                }
                StreamEvent::Sample { values, .. } => {
                    if values.len() != n {
                        return Err(Error::DimensionMismatch {
                            expected: n,
                            got: values.len(),
                        });
                    }
                    let pred = clf.classify_point(&values)?;
                    samples_in_segment += 1;
                    if let Some(k) = emit_every {
                        if k > 0 && samples_in_segment.is_multiple_of(k) {
                            report_prediction(&mut out, segment, pred, json, false)?;
                        }
                    }
                }
            }
        }
        if samples_in_segment > 0 {
            report_prediction(&mut out, segment, clf.prediction(), json, true)?;
        }
    } else {
        let dataset = load_csv(input.expect("clap enforces input"))?;
        let mut correct = 0usize;
        let mut decided = 0usize;
        for e in dataset.entries() {
            clf.reset_scores();
            for row in e.series.samples() {
                clf.ingest_test_point(row)?;
            }
            let pred = clf.prediction();
            let label = pred.as_ref().and_then(|p| p.label.clone());
            if label.is_some() {
                decided += 1;
            }
            if label.as_deref() == Some(e.label.as_str()) {
                correct += 1;
            }
            if json {
                writeln!(
                    out,
                    "{}",
                    json!({
                        "series_id": e.series_id,
                        "truth": e.label,
                        "pred": label,
                        "t": pred.as_ref().map_or(0, |p| p.t),
                    })
                )?;
            } else {
                writeln!(
                    out,
                    "series_id={} truth={} pred={} t={}",
                    e.series_id,
                    e.label,
                    label.as_deref().unwrap_or("?"),
                    pred.as_ref().map_or(0, |p| p.t),
                )?;
            }
        }
        let accuracy = correct as f64 / dataset.len() as f64;
        if json {
            writeln!(
                out,
                "{}",
                json!({
                    "evaluated": dataset.len(),
                    "decided": decided,
                    "accuracy": accuracy,
                })
            )?;
        } else {
            writeln!(
                out,
                "evaluated={} decided={decided} accuracy={accuracy}",
                dataset.len()
            )?;
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_eval(
    input: &std::path::Path,
    protocol: Protocol,
    seed: u64,
    flags: &ParamFlags,
    split: f64,
    per_class: usize,
    parallel: bool,
    json: bool,
) -> Result<()> {
    let dataset = load_csv(input)?;
    let (config, radius) = resolve_params(&dataset, flags, per_class, seed)?;

    let report = match protocol {
        Protocol::Holdout50 => {
            if parallel {
                return Err(Error::Protocol(
                    "--parallel applies to the online protocol only",
                ));
            }
            eval_holdout(&dataset, &config, radius, split, seed)?
        }
        Protocol::Online if parallel => eval_online_parallel(&dataset, &config, radius, seed)?,
        Protocol::Online => eval_online(&dataset, &config, radius, seed)?,
    };

    if json {
        println!(
            "{}",
            json!({
                "s": config.s(),
                "d": config.d(),
                "tau": config.tau(),
                "r": radius,
            })
        );
        println!(
            "{}",
            serde_json::to_string(&report).expect("report is serializable")
        );
    } else {
        println!(
            "params s={} d={} tau={} r={radius}",
            config.s(),
            config.d(),
            config.tau()
        );
        println!("protocol={}", report.protocol);
        println!("accuracy={}", report.accuracy);
        println!("evaluated={}", report.evaluated);
        println!("excluded={}", report.excluded);
        println!("wall_seconds={}", report.wall_seconds);
        println!("model_bytes={}", report.model_bytes);
        for c in &report.confusion {
            println!(
                "confusion truth={} pred={} count={}",
                c.truth,
                c.predicted.as_deref().unwrap_or("?"),
                c.count
            );
        }
        if let Some(curve) = &report.curve {
            println!("curve={}", join_display(curve));
        }
    }
    Ok(())
}

fn cmd_bench(
    input: &std::path::Path,
    bins_sweep: &[usize],
    s: Option<usize>,
    d: usize,
    tau: usize,
    json: bool,
) -> Result<()> {
    let dataset = load_csv(input)?;
    // The dataset is treated as one long stream.
    let mut flat = Vec::new();
    for e in dataset.entries() {
        flat.extend_from_slice(e.series.as_flat());
    }
    let stream = Series::from_flat(flat, dataset.dim())?;
    let s = match s {
        Some(s) => s,
        None => {
            let head = stream.prefix(stream.len().min(dde_mgm::harness::BENCH_POINTS))?;
            let deriv = head.derivative(tau)?;
            select_delay(deriv.len(), d, dominant_freq_index(&deriv)?)
        }
    };

    let reports = bench_rate(&stream, s, d, tau, bins_sweep)?;
    for r in &reports {
        if json {
            println!(
                "{}",
                serde_json::to_string(r).expect("report is serializable")
            );
        } else {
            println!(
                "bins={} points={} seconds={} rate={} distinct_cells={} model_bytes={}",
                r.bins, r.points, r.seconds, r.rate, r.distinct_cells, r.model_bytes
            );
        }
    }
    Ok(())
}

fn resolve_params(
    dataset: &Dataset,
    flags: &ParamFlags,
    per_class: usize,
    seed: u64,
) -> Result<(EmbeddingConfig, usize)> {
    let (s, d) = match (flags.s, flags.d) {
        (Some(s), Some(d)) => (s, d),
        _ => {
            let classes = dataset.series_by_label();
            let sel = select_params(
                &classes,
                &SelectParamsOptions {
                    per_class_k: per_class,
                    bins: flags.bins,
                    tau: flags.tau,
                    seed,
                    ..SelectParamsOptions::default()
                },
            )?;
            (flags.s.unwrap_or(sel.s), flags.d.unwrap_or(sel.d))
        }
    };
    let sizes = pooled_cell_sizes(
        dataset.entries().iter().map(|e| &e.series),
        flags.bins,
        flags.tau,
    )?;
    let config = EmbeddingConfig::new(dataset.dim(), s, d, flags.tau, &sizes)?;
    Ok((config, flags.r))
}

fn read_labeled_stdin() -> Result<Vec<(String, Series)>> {
    let mut open: BTreeMap<String, Vec<Vec<f64>>> = BTreeMap::new();
    let mut closed: Vec<(String, Series)> = Vec::new();
    fn close_all(
        open: &mut BTreeMap<String, Vec<Vec<f64>>>,
        closed: &mut Vec<(String, Series)>,
    ) -> Result<()> {
        for (label, rows) in std::mem::take(open) {
            closed.push((label, Series::from_rows(&rows)?));
        }
        Ok(())
    }
    let locked = std::io::stdin().lock();
    for (i, line) in locked.lines().enumerate() {
        let line = line?;
        match parse_stream_line(&line, true, "<stdin>", i + 1)? {
            StreamEvent::Boundary => close_all(&mut open, &mut closed)?,
            StreamEvent::Sample { label, values } => {
                open.entry(label.expect("labeled mode"))
                    .or_default()
                    .push(values);
            }
        }
    }
    close_all(&mut open, &mut closed)?;
    Ok(closed)
}

fn report_prediction(
    out: &mut impl Write,
    segment: usize,
    pred: Option<Prediction>,
    json: bool,
    is_final: bool,
) -> Result<()> {
    let label = pred.as_ref().and_then(|p| p.label.clone());
    let t = pred.as_ref().map_or(0, |p| p.t);
    if json {
        let scores: Vec<_> = pred
            .as_ref()
            .map(|p| {
                p.scores
                    .iter()
                    .map(|c| json!({"label": c.label, "s_g": c.s_g, "log_s_m": c.log_s_m}))
                    .collect()
            })
            .unwrap_or_default();
        writeln!(
            out,
            "{}",
            json!({
                "segment": segment,
                "final": is_final,
                "pred": label,
                "t": t,
                "scores": scores,
            })
        )?;
    } else {
        writeln!(
            out,
            "segment={segment} final={is_final} pred={} t={t}",
            label.as_deref().unwrap_or("?")
        )?;
    }
    Ok(())
}

fn join_display<T: std::fmt::Display>(values: &[T]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}
