use std::collections::HashMap;
use std::fmt::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use trendhmm::{
    baum_welch_train, estimate, find_optimum_sequence, fitness_table, forward_likelihood, generate,
    ingest_closes, ingest_csv, joint_transition_table, label, load_model, path_log_probability,
    read_labeled_csv, save_model, trend_report, viterbi_decode, CandidateSet, Estimate, HmmModel,
    LabeledSeries, ObservationSequence, PathDocument, RngSpec, SearchConfig, StateSpace,
    StationaryConfig, SymbolAlphabet, TrainingConfig, TrendReport,
};

use crate::args::{
    DecodeArgs, EstimateArgs, FitnessArgs, Format, GenerateArgs, IngestArgs, PriceArgs, ReportArgs,
    StationaryArgs, SymbolArgs, TrainArgs,
};
use crate::config::{self, FileConfig, RunConfig};
use crate::error::{CliError, CliResult};
use crate::render::{
    csv_table, fmt2, json_f64, matrix_text, model_csv, model_text, model_value, to_json,
};

/// A finished command: the rendered output and the parameters it ran with.
pub struct Done {
    pub output: String,
    pub config: RunConfig,
}

pub fn read(path: &Path) -> CliResult<Vec<u8>> {
    std::fs::read(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write(path: &Path, bytes: &[u8]) -> CliResult<()> {
    std::fs::write(path, bytes).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}

fn read_model(path: &Path, tolerance: f64) -> CliResult<HmmModel> {
    Ok(load_model(&read(path)?, tolerance)?)
}

fn labeled_series(
    args: &PriceArgs,
    file: &FileConfig,
    run: &mut RunConfig,
) -> CliResult<LabeledSeries> {
    let k = config::lag(args.k, file)?;
    let binning = config::binning(&args.binning, file)?;
    run.inputs.push(args.input.clone());
    run.k = Some(k);
    run.binning = Some(binning);
    let bytes = read(&args.input)?;
    let prices = if args.closes_only {
        ingest_closes(&bytes)?
    } else {
        ingest_csv(&bytes)?
    };
    let labeled = label(&prices, k, &binning)?;
    if labeled.zero_count > 0 {
        eprintln!(
            "warning: {} zero difference(s) mapped by the {:?} zero policy",
            labeled.zero_count, binning.zero_policy
        );
    }
    Ok(labeled)
}

fn thresholds_line(thresholds: &[f64; 5]) -> String {
    let cuts: Vec<String> = thresholds.iter().map(|&t| fmt2(t)).collect();
    format!("thresholds: {}\n", cuts.join(" "))
}

pub fn ingest(args: &IngestArgs, file: &FileConfig, mut run: RunConfig) -> CliResult<Done> {
    let labeled = labeled_series(&args.prices, file, &mut run)?;
    let space = StateSpace::trend_levels();
    let alphabet = SymbolAlphabet::increase_decrease();
    let rows = labeled
        .diffs
        .values
        .iter()
        .enumerate()
        .map(|(t, (day, diff))| {
            (
                day.to_string(),
                *diff,
                alphabet.symbol(labeled.symbols[t]),
                space.name(labeled.states[t]),
            )
        });
    let output = match run.format {
        Format::Csv => labeled.to_csv(&space, &alphabet),
        Format::Json => {
            let rows: Vec<Value> = rows
                .map(|(date, diff, symbol, state)| {
                    json!({"date": date, "diff": diff, "symbol": symbol, "state": state})
                })
                .collect();
            to_json(&json!({
                "k": labeled.diffs.k,
                "binning": labeled.binning,
                "thresholds": labeled.thresholds,
                "zero_count": labeled.zero_count,
                "rows": rows,
            }))
        }
        Format::Text => {
            let mut out = format!("k = {}\n", labeled.diffs.k);
            out.push_str(&thresholds_line(&labeled.thresholds));
            let _ = writeln!(out, "{:<10}  {:>7}  {:>6}  state", "date", "diff", "symbol");
            for (date, diff, symbol, state) in rows {
                let _ = writeln!(out, "{date:<10}  {:>7}  {symbol:>6}  {state}", fmt2(diff));
            }
            out
        }
    };
    Ok(Done {
        output,
        config: run,
    })
}

fn warn_estimate(est: &Estimate) {
    for w in &est.warnings {
        eprintln!("warning: {w}");
    }
}

pub fn estimate_cmd(args: &EstimateArgs, file: &FileConfig, mut run: RunConfig) -> CliResult<Done> {
    let cfg = config::estimate_config(&args.smoothing, file)?;
    run.inputs.push(args.input.clone());
    run.estimate = Some(cfg);
    let space = StateSpace::trend_levels();
    let alphabet = SymbolAlphabet::increase_decrease();
    let (states, symbols) = read_labeled_csv(&read(&args.input)?, &space, &alphabet)?;
    let est = estimate(&states, &symbols, &space, &alphabet, &cfg)?;
    warn_estimate(&est);
    let joint = joint_transition_table(&est.model, &est.counts)?;
    if let Some(path) = &args.model_out {
        write(path, &save_model(&est.model))?;
    }
    let model = &est.model;
    let columns: Vec<String> = model
        .states()
        .names()
        .iter()
        .flat_map(|s| alphabet.symbols().iter().map(move |m| format!("{s}/{m}")))
        .collect();
    let output = match run.format {
        Format::Json => to_json(&json!({
            "model": model_value(model),
            "counts": est.counts,
            "joint_table": {"columns": columns, "rows": joint},
            "warnings": est.warnings,
        })),
        Format::Csv => {
            let mut out = model_csv(model);
            let names = model.states().names();
            let alphabet = &alphabet;
            let records = joint.iter().enumerate().flat_map(|(i, row)| {
                row.iter().enumerate().map(move |(c, p)| {
                    let (j, m) = (c / alphabet.len(), c % alphabet.len());
                    vec![
                        "joint".to_string(),
                        names[i].clone(),
                        format!("{}/{}", names[j], alphabet.symbol(m)),
                        p.to_string(),
                    ]
                })
            });
            let joint_csv = csv_table(&["matrix", "from", "to", "value"], records);
            // one header for both blocks
            out.push_str(joint_csv.split_once('\n').map_or("", |(_, body)| body));
            out
        }
        Format::Text => {
            let mut out = model_text(model);
            out.push('\n');
            out.push_str(&matrix_text(
                "joint transition-emission",
                &joint,
                model.states().names(),
                &columns,
            ));
            out
        }
    };
    Ok(Done {
        output,
        config: run,
    })
}

fn render_report(report: &TrendReport, format: Format, thresholds: Option<&[f64; 5]>) -> String {
    match format {
        Format::Json => {
            let mut value = serde_json::to_value(report).expect("serializable report");
            if let Some(t) = thresholds {
                value["thresholds"] = json!(t);
            }
            to_json(&value)
        }
        Format::Csv => csv_table(
            &["state", "probability", "percentage"],
            report.rows.iter().map(|r| {
                vec![
                    r.state.clone(),
                    r.probability.to_string(),
                    r.percentage.to_string(),
                ]
            }),
        ),
        Format::Text => {
            let mut out = thresholds.map(thresholds_line).unwrap_or_default();
            out.push_str(&report.render_text());
            out
        }
    }
}

pub fn stationary(args: &StationaryArgs, file: &FileConfig, mut run: RunConfig) -> CliResult<Done> {
    let method = config::method(args.method, file);
    run.inputs.push(args.model.clone());
    run.method = Some(method);
    let model = read_model(&args.model, run.tolerance)?;
    let label = args.label.clone().unwrap_or_else(|| {
        args.model
            .file_stem()
            .map_or_else(|| "model".into(), |s| s.to_string_lossy().into_owned())
    });
    let cfg = StationaryConfig {
        method: config::stationary_method(method),
        ..Default::default()
    };
    let report = trend_report(&model, &label, &cfg)?;
    Ok(Done {
        output: render_report(&report, run.format, None),
        config: run,
    })
}

#[derive(Serialize)]
struct GenerateOutput {
    #[serde(flatten)]
    path: PathDocument,
    log_probability: Value,
    trials: usize,
    best_trial: usize,
}

pub fn generate_cmd(args: &GenerateArgs, file: &FileConfig, mut run: RunConfig) -> CliResult<Done> {
    let length = config::positive("length", args.length.or(file.length).unwrap_or(7))?;
    let trials = config::positive("trials", args.trials.or(file.trials).unwrap_or(1))?;
    let include_start = args.include_start || file.include_start.unwrap_or(false);
    let (seed, source) = config::seed(args.seed, file)?;
    let rng = seed.map_or_else(RngSpec::from_entropy, RngSpec::new);
    eprintln!(
        "seed: {} ({})",
        rng.seed,
        serde_json::to_value(source).unwrap().as_str().unwrap()
    );
    run.inputs.push(args.model.clone());
    run.length = Some(length);
    run.trials = Some(trials);
    run.include_start = Some(include_start);
    run.seed = Some(rng.seed);
    run.seed_source = Some(source);

    let model = read_model(&args.model, run.tolerance)?;
    let (path, log_probability, best_trial) = if trials == 1 {
        let path = generate(&model, length, &rng, include_start)?;
        let lp = path_log_probability(&model, &path)?;
        (path, lp, 0)
    } else {
        let found = find_optimum_sequence(
            &model,
            &SearchConfig::new(length, trials, include_start),
            &rng,
        )?;
        (found.path, found.log_probability, found.trial)
    };
    let doc = PathDocument::from_path(&path, &model);
    let output = match run.format {
        Format::Json => to_json(&GenerateOutput {
            path: doc,
            log_probability: json_f64(log_probability.value()),
            trials,
            best_trial,
        }),
        Format::Csv => csv_table(
            &["t", "state", "symbol"],
            doc.states
                .iter()
                .zip(&doc.symbols)
                .enumerate()
                .map(|(t, (s, o))| vec![t.to_string(), s.clone(), o.clone()]),
        ),
        Format::Text => format!(
            "states:  {}\nsymbols: {}\nlog-probability: {}\nseed: {}, trials: {}, best trial: {}\n",
            doc.states.join(" | "),
            doc.symbols.join(" "),
            fmt2(log_probability.value()),
            doc.seed,
            trials,
            best_trial
        ),
    };
    Ok(Done {
        output,
        config: run,
    })
}

/// Labels separated by commas or whitespace, or the `symbol` column of a
/// labeled series CSV.
fn read_symbols(
    args: &SymbolArgs,
    alphabet: &SymbolAlphabet,
    run: &mut RunConfig,
) -> CliResult<ObservationSequence> {
    let text = match (&args.symbols, &args.symbols_file) {
        (Some(s), _) => s.clone(),
        (None, Some(path)) => {
            run.inputs.push(path.clone());
            let bytes = read(path)?;
            let first = bytes.split(|&b| b == b'\n').next().unwrap_or_default();
            if String::from_utf8_lossy(first)
                .split(',')
                .any(|h| h.trim() == "symbol")
            {
                let states = StateSpace::trend_levels();
                return Ok(read_labeled_csv(&bytes, &states, alphabet)?.1);
            }
            String::from_utf8(bytes)
                .map_err(|_| CliError::Usage(format!("{} is not UTF-8", path.display())))?
        }
        (None, None) => return Err(CliError::Usage("give --symbols or --symbols-file".into())),
    };
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| {
            alphabet
                .index_of(s)
                .ok_or_else(|| CliError::Core(trendhmm::Error::UnknownLabel(s.to_string())))
        })
        .collect()
}

pub fn decode(args: &DecodeArgs, _file: &FileConfig, mut run: RunConfig) -> CliResult<Done> {
    run.inputs.push(args.model.clone());
    let model = read_model(&args.model, run.tolerance)?;
    let obs = read_symbols(&args.symbols, model.alphabet(), &mut run)?;
    let path = viterbi_decode(&model, &obs)?;
    let loglik = forward_likelihood(&model, &obs)?;
    let names: Vec<&str> = path
        .states
        .iter()
        .map(|&s| model.states().name(s))
        .collect();
    let symbols: Vec<&str> = obs.iter().map(|&o| model.alphabet().symbol(o)).collect();
    let output = match run.format {
        Format::Json => to_json(&json!({
            "states": names,
            "symbols": symbols,
            "log_probability": json_f64(path.log_probability.value()),
            "log_likelihood": json_f64(loglik.value()),
        })),
        Format::Csv => csv_table(
            &["t", "symbol", "state"],
            symbols
                .iter()
                .zip(&names)
                .enumerate()
                .map(|(t, (o, s))| vec![t.to_string(), o.to_string(), s.to_string()]),
        ),
        Format::Text => format!(
            "symbols: {}\nstates:  {}\nlog-probability: {}\nlog-likelihood: {}\n",
            symbols.join(" "),
            names.join(" | "),
            fmt2(path.log_probability.value()),
            fmt2(loglik.value())
        ),
    };
    Ok(Done {
        output,
        config: run,
    })
}

pub fn train(args: &TrainArgs, file: &FileConfig, mut run: RunConfig) -> CliResult<Done> {
    let cfg = TrainingConfig {
        max_iter: args.max_iter.or(file.max_iter).unwrap_or(100),
        loglik_delta_tol: config::non_negative(
            "loglik-tol",
            args.loglik_tol.or(file.loglik_tol).unwrap_or(1e-9),
        )?,
        floor: config::non_negative("floor", args.floor.or(file.floor).unwrap_or(0.0))?,
    };
    run.inputs.push(args.model.clone());
    run.max_iter = Some(cfg.max_iter);
    run.loglik_tol = Some(cfg.loglik_delta_tol);
    run.floor = Some(cfg.floor);
    let model = read_model(&args.model, run.tolerance)?;
    let obs = read_symbols(&args.symbols, model.alphabet(), &mut run)?;
    let result = baum_welch_train(&model, &obs, &cfg)?;
    if let Some(path) = &args.model_out {
        write(path, &save_model(&result.model))?;
    }
    let output = match run.format {
        Format::Json => to_json(&json!({
            "model": model_value(&result.model),
            "trace": result.trace.iter().map(|&x| json_f64(x)).collect::<Vec<_>>(),
            "iterations": result.iterations,
            "converged": result.converged,
        })),
        Format::Csv => csv_table(
            &["iteration", "log_likelihood"],
            result
                .trace
                .iter()
                .enumerate()
                .map(|(i, ll)| vec![i.to_string(), ll.to_string()]),
        ),
        Format::Text => {
            let mut out = format!(
                "iterations: {}, converged: {}\nlog-likelihood: {}\n\n",
                result.iterations,
                result.converged,
                result
                    .trace
                    .iter()
                    .map(|&x| fmt2(x))
                    .collect::<Vec<_>>()
                    .join(" ")
            );
            out.push_str(&model_text(&result.model));
            out
        }
    };
    Ok(Done {
        output,
        config: run,
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PathsFile {
    sequences: Vec<Candidate>,
    #[serde(default)]
    reference_compare_sums: Option<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Candidate {
    label: String,
    states: Vec<String>,
}

pub fn fitness(args: &FitnessArgs, file: &FileConfig, mut run: RunConfig) -> CliResult<Done> {
    let tolerance = config::non_negative(
        "reference-tolerance",
        args.reference_tolerance
            .or(file.reference_tolerance)
            .unwrap_or(0.01),
    )?;
    run.inputs.push(args.paths.clone());
    run.reference_tolerance = Some(tolerance);
    let doc: PathsFile = serde_json::from_slice(&read(&args.paths)?)
        .map_err(|e| CliError::Usage(format!("{}: {e}", args.paths.display())))?;
    // compare only needs label equality, so any state names work
    let mut ids: HashMap<String, usize> = HashMap::new();
    let candidates = doc
        .sequences
        .into_iter()
        .map(|c| {
            let seq = c
                .states
                .into_iter()
                .map(|s| {
                    let next = ids.len();
                    *ids.entry(s).or_insert(next)
                })
                .collect();
            (c.label, seq)
        })
        .collect();
    let set = CandidateSet::new(candidates)?;
    let result = fitness_table(&set)?;
    let divergences = match &doc.reference_compare_sums {
        Some(reference) if reference.len() != set.len() => {
            return Err(CliError::Usage(format!(
                "{} reference sums for {} sequences",
                reference.len(),
                set.len()
            )))
        }
        Some(reference) => result.divergences(reference, tolerance),
        None => Vec::new(),
    };
    for d in &divergences {
        eprintln!(
            "note: {} compare sum {:.2} differs from reference {:.2}",
            d.label, d.computed, d.reference
        );
    }
    let output = match run.format {
        Format::Json => to_json(&json!({
            "rows": result.rows,
            "ranking": result.ranking,
            "divergences": divergences,
        })),
        Format::Csv => csv_table(
            &["label", "compare_sum", "fitness", "reference", "divergent"],
            result.rows.iter().enumerate().map(|(i, r)| {
                let reference = doc
                    .reference_compare_sums
                    .as_ref()
                    .map_or(String::new(), |v| v[i].to_string());
                let fitness = if r.fitness.is_infinite() {
                    "inf".into()
                } else {
                    r.fitness.to_string()
                };
                vec![
                    r.label.clone(),
                    r.compare_sum.to_string(),
                    fitness,
                    reference,
                    divergences.iter().any(|d| d.label == r.label).to_string(),
                ]
            }),
        ),
        Format::Text => result.render_text(&divergences),
    };
    Ok(Done {
        output,
        config: run,
    })
}

pub fn report(args: &ReportArgs, file: &FileConfig, mut run: RunConfig) -> CliResult<Done> {
    let labeled = labeled_series(&args.prices, file, &mut run)?;
    let cfg = config::estimate_config(&args.smoothing, file)?;
    let method = config::method(args.method, file);
    run.estimate = Some(cfg);
    run.method = Some(method);
    let space = StateSpace::trend_levels();
    let alphabet = SymbolAlphabet::increase_decrease();
    let est = estimate(&labeled.states, &labeled.symbols, &space, &alphabet, &cfg)?;
    warn_estimate(&est);
    let stationary = StationaryConfig {
        method: config::stationary_method(method),
        ..Default::default()
    };
    let report = trend_report(&est.model, &format!("{}-day", labeled.diffs.k), &stationary)?;
    Ok(Done {
        output: render_report(&report, run.format, Some(&labeled.thresholds)),
        config: run,
    })
}
