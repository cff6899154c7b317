use std::collections::HashSet;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use headqa_core::corpus::{load_corpus_file, CorpusReader, RecordError};
use headqa_core::dataset::{
    build_corpus_dataset, export_squad_format, verify_squad_export, DatasetError,
    JsonlSampleWriter, TrainingSample,
};
use headqa_core::decompose::{decompose_document, NoLexicon, RescueLexicon};
use headqa_core::dictionary::{build_dictionary, growth_curve, Dictionary, DictionaryError};
use headqa_core::generate::{
    generate, Answerer, AnswererError, GenerationAborted, GenerationTrace, LeadAnswerer,
    OracleAnswerer, RemoteAnswerer,
};
use headqa_core::stats::{
    alpha_report, bootstrap, headline_divergence, read_score_records, HeadlinePair, Interval,
    ScoreMatrix, StatsError,
};
use headqa_core::{Document, Execution};
use headqa_service::Store;
use serde_json::json;

use crate::config::{self, pick, require, FileConfig};
use crate::{AnswererKind, Cli, CliError, Command, CorpusArgs, DatasetFormat, DictArgs};

const CHUNK: usize = 512;

struct Ctx {
    file: FileConfig,
    seed: u64,
    exec: Execution,
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let ctx = Ctx {
        seed: pick(cli.seed, file.seed, config::DEFAULT_SEED),
        exec: if cli.sequential {
            Execution::Sequential
        } else {
            Execution::default()
        },
        file,
    };
    match cli.command {
        Command::Decompose { io, dict } => cmd_decompose(&ctx, io, dict),
        Command::BuildDataset {
            io,
            dict,
            format,
            stats,
        } => cmd_build_dataset(&ctx, io, dict, format, stats),
        Command::BuildDict {
            io,
            min_lowercase_count,
            top_n,
            growth,
        } => cmd_build_dict(&ctx, io, min_lowercase_count, top_n, growth),
        Command::Generate {
            io,
            answerer,
            endpoint,
            timeout_ms,
            max_steps,
            max_in_flight,
            lead_max_tokens,
            training_corpus,
        } => {
            let kind = match answerer {
                Some(k) => k,
                None => match ctx.file.answerer.as_deref() {
                    None | Some("oracle") => AnswererKind::Oracle,
                    Some("lead") => AnswererKind::Lead,
                    Some("remote") => AnswererKind::Remote,
                    Some(other) => {
                        return Err(CliError::Usage(format!("unknown answerer `{other}`")))
                    }
                },
            };
            let gen = GenerateOpts {
                kind,
                endpoint: endpoint.or(ctx.file.endpoint.clone()),
                timeout_ms: pick(timeout_ms, ctx.file.timeout_ms, config::DEFAULT_TIMEOUT_MS),
                max_steps: pick(max_steps, ctx.file.max_steps, config::DEFAULT_MAX_STEPS),
                max_in_flight,
                lead_max_tokens,
                training_corpus,
            };
            cmd_generate(&ctx, io, gen)
        }
        Command::Stats {
            scores,
            output,
            n_resamples,
            plot_csv,
        } => {
            let n = pick(
                n_resamples,
                ctx.file.n_resamples,
                config::DEFAULT_N_RESAMPLES,
            );
            cmd_stats(
                &ctx,
                &scores,
                output.or(ctx.file.output_path.clone()),
                n,
                plot_csv,
            )
        }
        Command::Serve { bind, store } => {
            let bind = pick(bind, ctx.file.bind.clone(), config::DEFAULT_BIND.to_owned());
            let store = pick(
                store,
                ctx.file.store_path.clone(),
                PathBuf::from(config::DEFAULT_STORE),
            );
            cmd_serve(&ctx, &bind, &store)
        }
    }
}

fn paths(ctx: &Ctx, io: CorpusArgs) -> Result<(PathBuf, PathBuf), CliError> {
    Ok((
        require(io.corpus, ctx.file.corpus_path.clone(), "corpus")?,
        require(io.output, ctx.file.output_path.clone(), "output")?,
    ))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(path, e))
}

fn print_json(v: &serde_json::Value) -> Result<(), CliError> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, v).map_err(CliError::data)?;
    writeln!(out).map_err(|e| CliError::io(Path::new("<stdout>"), e))
}

fn load_dictionary(ctx: &Ctx, args: &DictArgs) -> Result<Option<Dictionary>, CliError> {
    let Some(path) = args.dict.clone().or(ctx.file.dict_path.clone()) else {
        if args.dict_size.is_some() {
            return Err(CliError::Usage("--dict-size needs --dict".into()));
        }
        return Ok(None);
    };
    let file = File::open(&path).map_err(|e| CliError::io(&path, e))?;
    let dict = Dictionary::read_tsv(BufReader::new(file)).map_err(|e| match e {
        DictionaryError::Io(source) => CliError::io(&path, source),
        other => CliError::Data(format!("{}: {other}", path.display())),
    })?;
    match args.dict_size {
        Some(k) if k > dict.len() => Err(CliError::Usage(format!(
            "--dict-size {k} exceeds the {} entries in {}",
            dict.len(),
            path.display()
        ))),
        Some(k) => Ok(Some(dict.truncated(k))),
        None => Ok(Some(dict)),
    }
}

fn lexicon(dict: &Option<Dictionary>) -> &(dyn RescueLexicon + Sync) {
    match dict {
        Some(d) => d,
        None => &NoLexicon,
    }
}

fn record_error(path: &Path, e: RecordError) -> Result<(), CliError> {
    match e {
        RecordError::Io { source, .. } => Err(CliError::io(path, source)),
        RecordError::Malformed { .. } => Ok(()),
    }
}

fn cmd_decompose(ctx: &Ctx, io: CorpusArgs, dict: DictArgs) -> Result<(), CliError> {
    let (corpus, output) = paths(ctx, io)?;
    let dict = load_dictionary(ctx, &dict)?;
    let lex = lexicon(&dict);
    let mut reader = CorpusReader::open(&corpus).map_err(|e| CliError::io(&corpus, e))?;
    let mut out = create(&output)?;
    let (mut documents, mut decomposable, mut malformed, mut rescued) =
        (0usize, 0usize, 0usize, 0usize);
    loop {
        let mut chunk: Vec<Document> = Vec::with_capacity(CHUNK);
        for item in reader.by_ref() {
            match item {
                Ok(doc) => chunk.push(doc),
                Err(e) => {
                    record_error(&corpus, e)?;
                    malformed += 1;
                }
            }
            if chunk.len() == CHUNK {
                break;
            }
        }
        if chunk.is_empty() {
            break;
        }
        let results = ctx.exec.map(&chunk, |d| decompose_document(d, lex));
        for (doc, dec) in chunk.iter().zip(results) {
            documents += 1;
            if let Some(d) = &dec {
                decomposable += 1;
                rescued += (!d.is_text_only()) as usize;
            }
            let line = json!({ "doc_id": doc.doc_id, "decomposable": dec.is_some(), "decomposition": dec });
            writeln!(out, "{line}").map_err(|e| CliError::io(&output, e))?;
        }
    }
    out.flush().map_err(|e| CliError::io(&output, e))?;
    if documents == 0 {
        return Err(CliError::Data(format!(
            "{}: no valid documents",
            corpus.display()
        )));
    }
    print_json(&json!({
        "documents": documents,
        "decomposable": decomposable,
        "decomposability_rate": decomposable as f64 / documents as f64,
        "needing_dictionary": rescued,
        "malformed_records": malformed,
        "dictionary_size": dict.as_ref().map(Dictionary::len),
    }))
}

fn dataset_error(output: &Path, e: DatasetError) -> CliError {
    match e {
        DatasetError::Io(source) => CliError::io(output, source),
        other => CliError::data(other),
    }
}

fn cmd_build_dataset(
    ctx: &Ctx,
    io: CorpusArgs,
    dict: DictArgs,
    format: DatasetFormat,
    stats_path: Option<PathBuf>,
) -> Result<(), CliError> {
    let (corpus, output) = paths(ctx, io)?;
    let dict = load_dictionary(ctx, &dict)?;
    let lex = lexicon(&dict);
    let reader = CorpusReader::open(&corpus).map_err(|e| CliError::io(&corpus, e))?;
    let mut io_failure = None;
    let records = reader.filter_map(|r| match r {
        Err(RecordError::Io { source, .. }) => {
            io_failure.get_or_insert(source);
            None
        }
        other => Some(other),
    });
    let (stats, qa_entries) = match format {
        DatasetFormat::Jsonl => {
            let mut w = JsonlSampleWriter::new(create(&output)?);
            let stats = build_corpus_dataset(records, lex, &mut w, ctx.exec)
                .map_err(|e| dataset_error(&output, e))?;
            w.into_inner().map_err(|e| CliError::io(&output, e))?;
            (stats, None)
        }
        DatasetFormat::Squad => {
            let mut samples: Vec<TrainingSample> = Vec::new();
            let stats = build_corpus_dataset(records, lex, &mut samples, ctx.exec)
                .map_err(|e| dataset_error(&output, e))?;
            let mut w = create(&output)?;
            let written =
                export_squad_format(samples, &mut w).map_err(|e| dataset_error(&output, e))?;
            w.flush().map_err(|e| CliError::io(&output, e))?;
            let file = File::open(&output).map_err(|e| CliError::io(&output, e))?;
            let verified =
                verify_squad_export(BufReader::new(file)).map_err(|e| dataset_error(&output, e))?;
            if verified != written {
                return Err(CliError::Data(format!(
                    "export check: wrote {written} answers, re-read {verified}"
                )));
            }
            (stats, Some(verified))
        }
    };
    if let Some(source) = io_failure {
        return Err(CliError::io(&corpus, source));
    }
    if stats.documents_seen == 0 {
        return Err(CliError::Data(format!(
            "{}: no valid documents",
            corpus.display()
        )));
    }
    let mut report = serde_json::to_value(&stats).map_err(CliError::data)?;
    if let Some(n) = qa_entries {
        report["verified_answers"] = json!(n);
    }
    if let Some(p) = stats_path {
        let mut w = create(&p)?;
        serde_json::to_writer_pretty(&mut w, &report).map_err(CliError::data)?;
        writeln!(w)
            .and_then(|_| w.flush())
            .map_err(|e| CliError::io(&p, e))?;
    }
    print_json(&report)
}

fn load_docs(path: &Path) -> Result<(Vec<Document>, usize), CliError> {
    let loaded = load_corpus_file(path).map_err(|e| CliError::io(path, e))?;
    if loaded.documents.is_empty() {
        return Err(CliError::Data(format!(
            "{}: no valid documents",
            path.display()
        )));
    }
    Ok((loaded.documents, loaded.malformed))
}

fn dictionary_error(e: DictionaryError) -> CliError {
    match e {
        DictionaryError::InvalidParameter(_) | DictionaryError::InvalidSizes { .. } => {
            CliError::Usage(e.to_string())
        }
        other => CliError::data(other),
    }
}

fn cmd_build_dict(
    ctx: &Ctx,
    io: CorpusArgs,
    min_lowercase_count: Option<u64>,
    top_n: Option<usize>,
    growth: Vec<usize>,
) -> Result<(), CliError> {
    let (corpus, output) = paths(ctx, io)?;
    let min = pick(
        min_lowercase_count,
        ctx.file.min_lowercase_count,
        config::DEFAULT_MIN_LOWERCASE_COUNT,
    );
    let top_n = pick(top_n, ctx.file.top_n, config::DEFAULT_TOP_N);
    if top_n == 0 || min == 0 {
        return Err(CliError::Usage(
            "--top-n and --min-lowercase-count must be at least 1".into(),
        ));
    }
    let (docs, malformed) = load_docs(&corpus)?;
    let dict = build_dictionary(&docs, min, top_n, ctx.exec).map_err(dictionary_error)?;
    let mut w = create(&output)?;
    dict.write_tsv(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| CliError::io(&output, e))?;
    let curve = if growth.is_empty() {
        None
    } else {
        Some(growth_curve(&docs, &dict, &growth, ctx.exec).map_err(dictionary_error)?)
    };
    print_json(&json!({
        "documents": docs.len(),
        "malformed_records": malformed,
        "entries": dict.len(),
        "min_lowercase_count": min,
        "top_n": top_n,
        "growth": curve,
    }))
}

struct GenerateOpts {
    kind: AnswererKind,
    endpoint: Option<String>,
    timeout_ms: u64,
    max_steps: usize,
    max_in_flight: usize,
    lead_max_tokens: usize,
    training_corpus: Option<PathBuf>,
}

enum Outcome {
    Skipped,
    Done(GenerationTrace),
    Aborted(GenerationAborted),
}

fn cmd_generate(ctx: &Ctx, io: CorpusArgs, opts: GenerateOpts) -> Result<(), CliError> {
    let (corpus, output) = paths(ctx, io)?;
    let (docs, malformed) = load_docs(&corpus)?;
    let training: HashSet<String> = match &opts.training_corpus {
        Some(p) => load_docs(p)?.0.into_iter().map(|d| d.title).collect(),
        None => HashSet::new(),
    };
    let shared: Option<Box<dyn Answerer>> = match opts.kind {
        AnswererKind::Oracle => None,
        AnswererKind::Lead => Some(Box::new(LeadAnswerer::new(opts.lead_max_tokens))),
        AnswererKind::Remote => {
            let endpoint = opts
                .endpoint
                .clone()
                .ok_or_else(|| CliError::Usage("--answerer remote needs --endpoint".into()))?;
            Some(Box::new(RemoteAnswerer::new(
                endpoint,
                opts.timeout_ms,
                opts.max_in_flight,
            )))
        }
    };
    let results = ctx.exec.map(&docs, |d| {
        let dec = decompose_document(d, &NoLexicon);
        let real_answers = dec.as_ref().map(|x| x.spans.len());
        let outcome = match (&shared, &dec) {
            (Some(a), _) => Some(generate(d, a.as_ref(), opts.max_steps)),
            (None, Some(dec)) => OracleAnswerer::new(dec)
                .ok()
                .map(|o| generate(d, &o, opts.max_steps)),
            (None, None) => None,
        };
        let outcome = match outcome {
            None => Outcome::Skipped,
            Some(Ok(t)) => Outcome::Done(t),
            Some(Err(a)) => Outcome::Aborted(a),
        };
        (outcome, real_answers)
    });

    let mut out = create(&output)?;
    let mut pairs = Vec::new();
    let (mut skipped, mut completed, mut aborted, mut remote_failures) =
        (0usize, 0usize, 0usize, 0usize);
    for (doc, (outcome, real_answers)) in docs.iter().zip(&results) {
        let trace = match outcome {
            Outcome::Skipped => {
                skipped += 1;
                continue;
            }
            Outcome::Done(t) => t,
            Outcome::Aborted(a) => {
                aborted += 1;
                remote_failures += matches!(
                    a.source,
                    AnswererError::Timeout | AnswererError::Transport(_)
                ) as usize;
                &*a.partial
            }
        };
        if trace.completed {
            completed += 1;
            pairs.push(HeadlinePair {
                real_title: doc.title.clone(),
                generated_title: trace.headline.clone(),
                real_answers: *real_answers,
                generated_answers: trace.steps.iter().filter(|s| !s.is_termination).count(),
            });
        }
        let line = serde_json::to_string(trace).map_err(CliError::data)?;
        writeln!(out, "{line}").map_err(|e| CliError::io(&output, e))?;
    }
    out.flush().map_err(|e| CliError::io(&output, e))?;
    let divergence = headline_divergence(&pairs, &training).ok();
    print_json(&json!({
        "documents": docs.len(),
        "malformed_records": malformed,
        "traces": docs.len() - skipped,
        "completed": completed,
        "aborted": aborted,
        "skipped_not_decomposable": skipped,
        "divergence": divergence,
    }))?;
    match (aborted, remote_failures) {
        (0, _) => Ok(()),
        (n, 0) => Err(CliError::Data(format!(
            "{n} generations aborted on invalid answers; partial traces written"
        ))),
        (n, r) => Err(CliError::Remote(format!(
            "{n} generations aborted, {r} on timeouts or transport errors"
        ))),
    }
}

fn stats_error(path: &Path, e: StatsError) -> CliError {
    match e {
        StatsError::Io(source) => CliError::io(path, source),
        other => CliError::Data(format!("{}: {other}", path.display())),
    }
}

fn cell(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        v.to_string()
    }
}

fn plot_rows(s: &headqa_core::stats::BootstrapSummary) -> Vec<(String, &'static str, Interval)> {
    const TIERS: [&str; 5] = ["very_bad", "bad", "ok", "good", "very_good"];
    let i = &s.intervals;
    let mut rows = Vec::new();
    for (kind, tiers) in [("real", i.scores.real), ("generated", i.scores.generated)] {
        for (tier, iv) in TIERS.iter().zip(tiers.as_array()) {
            rows.push((tier.to_string(), kind, iv));
        }
    }
    let c = i.comparison;
    for (tier, iv) in [("worse", c.worse), ("same", c.same), ("better", c.better)] {
        rows.push((tier.to_string(), "comparison", iv));
    }
    rows
}

fn cmd_stats(
    ctx: &Ctx,
    scores: &Path,
    output: Option<PathBuf>,
    n_resamples: usize,
    plot_csv: Option<PathBuf>,
) -> Result<(), CliError> {
    let file = File::open(scores).map_err(|e| CliError::io(scores, e))?;
    let records = read_score_records(BufReader::new(file)).map_err(|e| stats_error(scores, e))?;
    if records.is_empty() {
        return Err(CliError::Data(format!(
            "{}: no score records",
            scores.display()
        )));
    }
    let matrix = ScoreMatrix::from_records(&records).map_err(|e| stats_error(scores, e))?;
    let summary = bootstrap(&matrix, n_resamples, ctx.seed, ctx.exec).map_err(|e| match e {
        StatsError::InvalidParameter(_) => CliError::Usage(e.to_string()),
        other => stats_error(scores, other),
    })?;
    let report = json!({
        "records": records.len(),
        "bootstrap": summary,
        "alpha": alpha_report(&matrix),
    });
    if let Some(p) = plot_csv {
        let mut w = create(&p)?;
        let mut text = String::from("tier,kind,median,lo,hi\n");
        for (tier, kind, iv) in plot_rows(&summary) {
            text.push_str(&format!(
                "{tier},{kind},{},{},{}\n",
                cell(iv.median),
                cell(iv.lo),
                cell(iv.hi)
            ));
        }
        w.write_all(text.as_bytes())
            .and_then(|_| w.flush())
            .map_err(|e| CliError::io(&p, e))?;
    }
    match output {
        Some(p) => {
            let mut w = create(&p)?;
            serde_json::to_writer_pretty(&mut w, &report).map_err(CliError::data)?;
            writeln!(w)
                .and_then(|_| w.flush())
                .map_err(|e| CliError::io(&p, e))
        }
        None => print_json(&report),
    }
}

fn cmd_serve(ctx: &Ctx, bind: &str, store_path: &Path) -> Result<(), CliError> {
    let store = Store::open(store_path)
        .map_err(|e| CliError::Data(format!("{}: {e}", store_path.display())))?
        .with_default_seed(ctx.seed);
    let runtime =
        tokio::runtime::Runtime::new().map_err(|e| CliError::io(Path::new("<runtime>"), e))?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(bind)
            .await
            .map_err(|e| CliError::io(Path::new(bind), e))?;
        let addr = listener
            .local_addr()
            .map_err(|e| CliError::io(Path::new(bind), e))?;
        println!("listening on http://{addr}");
        io::stdout().flush().ok();
        headqa_service::serve(listener, store)
            .await
            .map_err(|e| CliError::io(Path::new(bind), e))
    })
}
