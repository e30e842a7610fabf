use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::net::{SocketAddr, ToSocketAddrs};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use ae_core::corpus::{synthetic, Corpus};
use ae_core::engine::{EngineError, EvalOptions, LegacyCost};
use ae_core::experiments::{self, ExperimentError, ExperimentRow, StartPosition};
use ae_core::predictor::{train_ngram, BidirectionalPredictor, Direction, PredictError, Predictor, RemotePredictor};
use ae_core::tokenizer::{read_vocabulary, train_tokenizer, write_vocabulary, TokenSequence, TokenizerError, Vocabulary};
use ae_server::{AppState, ModelHandle};

use crate::args::*;
use crate::CliError;

pub fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Tokenizer(TokenizerCommand::Train(a)) => tokenizer_train(a),
        Command::Model(ModelCommand::Train(a)) => model_train(a),
        Command::Eval(a) => eval(a),
        Command::Experiment(ExperimentCommand::DesignCompare(a)) => design_compare(a),
        Command::Experiment(ExperimentCommand::PositionSweep(a)) => position_sweep(a),
        Command::Report(a) => report(a),
        Command::Serve(a) => serve(a),
        Command::Corpus(CorpusCommand::Synth(a)) => synth(a),
        Command::Corpus(CorpusCommand::Split(a)) => split(a),
    }
}

fn data(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Data(format!("{}: {e}", path.display()))
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path).map(BufReader::new).map_err(|e| data(path, e))
}

fn is_claim_file(path: &Path) -> bool {
    matches!(path.extension().and_then(|e| e.to_str()), Some("jsonl" | "json"))
}

fn load_corpus(path: &Path) -> Result<Corpus, CliError> {
    Corpus::read_jsonl(open(path)?).map_err(|e| data(path, e))
}

/// Expanded claims from a claim file, or non-empty lines of a text file.
fn load_texts(path: &Path) -> Result<Vec<String>, CliError> {
    let texts = if is_claim_file(path) {
        load_corpus(path)?.expanded_texts().map_err(|e| data(path, e))?
    } else {
        let raw = std::fs::read_to_string(path).map_err(|e| data(path, e))?;
        raw.lines().filter(|l| !l.trim().is_empty()).map(str::to_owned).collect()
    };
    if texts.is_empty() {
        return Err(data(path, "no texts"));
    }
    Ok(texts)
}

fn load_vocab(path: &Path) -> Result<Vocabulary, CliError> {
    read_vocabulary(open(path)?).map_err(|e| data(path, e))
}

fn model_vocab_size(m: &BidirectionalPredictor) -> usize {
    match m {
        BidirectionalPredictor::Dual { forward, .. } => forward.vocab_size(),
        BidirectionalPredictor::Mixed { model }
        | BidirectionalPredictor::ForwardOnly { model }
        | BidirectionalPredictor::BackwardOnly { model } => model.vocab_size(),
    }
}

fn load_model(path: &Path, vocab: &Vocabulary) -> Result<BidirectionalPredictor, CliError> {
    let model: BidirectionalPredictor = serde_json::from_reader(open(path)?).map_err(|e| data(path, e))?;
    if model_vocab_size(&model) != vocab.len() {
        return Err(data(
            path,
            format!("model was trained for {} token ids but the vocabulary has {}", model_vocab_size(&model), vocab.len()),
        ));
    }
    Ok(model)
}

fn tag_of(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "model".into())
}

fn model_paths(models: &[PathBuf]) -> Vec<PathBuf> {
    if models.is_empty() {
        vec![PathBuf::from(DEFAULT_MODEL)]
    } else {
        models.to_vec()
    }
}

type Source = (String, Box<dyn Predictor>);

fn load_sources(a: &PredictorArgs, vocab: &Vocabulary) -> Result<Vec<Source>, CliError> {
    let mut sources: Vec<Source> = match &a.endpoint {
        Some(url) => vec![("remote".into(), Box::new(RemotePredictor::new(url.clone(), vocab.len())))],
        None => model_paths(&a.models)
            .iter()
            .map(|p| Ok((tag_of(p), Box::new(load_model(p, vocab)?) as Box<dyn Predictor>)))
            .collect::<Result<_, CliError>>()?,
    };
    if let Some(tag) = &a.model_tag {
        if sources.len() > 1 {
            return Err(CliError::Usage("--model-tag needs exactly one --model".into()));
        }
        sources[0].0 = tag.clone();
    }
    Ok(sources)
}

fn write_output(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::Runtime(e.to_string()))
        }
    }
}

fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    match jobs {
        None => Ok(f()),
        Some(0) => Err(CliError::Usage("--jobs must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Runtime(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

fn eval_options(s: &EvalSettings, vocab: &Vocabulary, design: ae_core::engine::UiDesign) -> Result<EvalOptions, CliError> {
    if s.top_k == 0 || s.top_k > vocab.len() {
        return Err(CliError::Usage(format!("--top-k must lie in 1..={}", vocab.len())));
    }
    if s.max_context == 0 {
        return Err(CliError::Usage("--max-context must be at least 1".into()));
    }
    Ok(EvalOptions {
        design,
        k: s.top_k,
        max_context: s.max_context,
        skip_empty_tokens: s.skip_empty_tokens,
        legacy_cost: if s.legacy_cap { LegacyCost::CappedAtManual } else { LegacyCost::Rank },
    })
}

fn experiment_error(e: ExperimentError) -> CliError {
    match e {
        ExperimentError::NoClaims => CliError::Data(e.to_string()),
        ExperimentError::Claim { source: EngineError::Predictor { source: PredictError::Unsupported(_), .. }, .. } => {
            CliError::Usage(format!("{e} (train with a direction mode that covers it)"))
        }
        other => CliError::Runtime(other.to_string()),
    }
}

fn encode_all(vocab: &Vocabulary, texts: &[String]) -> Vec<TokenSequence> {
    texts.par_iter().map(|t| vocab.encode(t)).collect()
}

fn emit(rows: &[ExperimentRow], out: &OutputArgs) -> Result<(), CliError> {
    let text = experiments::emit_report(rows, out.format).map_err(|e| CliError::Runtime(e.to_string()))?;
    write_output(out.out.as_deref(), &text)
}

fn tokenizer_train(a: TokenizerTrainArgs) -> Result<(), CliError> {
    let texts = load_texts(&a.input)?;
    let vocab = train_tokenizer(&texts, a.vocab_size, a.scheme).map_err(|e| match e {
        TokenizerError::VocabTooSmall(_) => CliError::Usage(e.to_string()),
        other => data(&a.input, other),
    })?;
    let file = File::create(&a.out).map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", a.out.display())))?;
    let mut w = BufWriter::new(file);
    write_vocabulary(&vocab, &mut w)
        .and_then(|_| w.flush())
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    eprintln!("{} tokens ({}) from {} texts -> {}", vocab.len(), a.scheme, texts.len(), a.out.display());
    Ok(())
}

fn model_train(a: ModelTrainArgs) -> Result<(), CliError> {
    if a.order == 0 {
        return Err(CliError::Usage("--order must be at least 1".into()));
    }
    if !(a.discount > 0.0 && a.discount < 1.0) {
        return Err(CliError::Usage("--discount must lie strictly between 0 and 1".into()));
    }
    let vocab = load_vocab(&a.vocab)?;
    let texts = load_texts(&a.input)?;
    let forward = encode_all(&vocab, &texts);
    let backward: Vec<TokenSequence> = forward.iter().map(TokenSequence::reversed).collect();
    let train = |seqs: &[TokenSequence]| {
        train_ngram(seqs, a.order, a.discount, vocab.len()).map_err(|e| data(&a.input, e))
    };
    let model = match a.direction_mode {
        DirectionModeArg::Dual => {
            let (f, b) = rayon::join(|| train(&forward), || train(&backward));
            BidirectionalPredictor::Dual { forward: f?, backward: b? }
        }
        DirectionModeArg::Forward => BidirectionalPredictor::ForwardOnly { model: train(&forward)? },
        DirectionModeArg::Backward => BidirectionalPredictor::BackwardOnly { model: train(&backward)? },
        DirectionModeArg::Mixed => {
            let both: Vec<TokenSequence> = forward.iter().chain(&backward).cloned().collect();
            BidirectionalPredictor::Mixed { model: train(&both)? }
        }
    };
    let file = File::create(&a.out).map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", a.out.display())))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer(&mut w, &model)
        .map_err(std::io::Error::from)
        .and_then(|_| w.flush())
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    eprintln!("order-{} model on {} texts -> {}", a.order, texts.len(), a.out.display());
    Ok(())
}

fn eval(a: EvalArgs) -> Result<(), CliError> {
    let vocab = load_vocab(&a.predictor.vocab)?;
    let opts = eval_options(&a.settings, &vocab, a.design)?;
    let sources = load_sources(&a.predictor, &vocab)?;
    let claims = encode_all(&vocab, &load_texts(&a.input)?);
    let (start, first_leg) = match a.start {
        Some(s) => (s, a.first_leg.unwrap_or(a.direction)),
        None => match a.direction {
            Direction::Forward => (StartPosition::Begin, Direction::Forward),
            Direction::Backward => (StartPosition::End, Direction::Backward),
        },
    };
    let rows = with_jobs(a.settings.jobs, || {
        sources
            .iter()
            .map(|(tag, p)| experiments::run_eval(p, &vocab, &claims, start, first_leg, &opts, a.settings.pooling, tag))
            .collect::<Result<Vec<_>, _>>()
    })?
    .map_err(experiment_error)?;
    emit(&rows, &a.output)
}

fn design_compare(a: DesignCompareArgs) -> Result<(), CliError> {
    let vocab = load_vocab(&a.predictor.vocab)?;
    let opts = eval_options(&a.settings, &vocab, ae_core::engine::UiDesign::DigitKeys)?;
    let sources = load_sources(&a.predictor, &vocab)?;
    let claims = encode_all(&vocab, &load_texts(&a.input)?);
    let directions = if a.directions.is_empty() { vec![Direction::Forward, Direction::Backward] } else { a.directions };
    let rows = with_jobs(a.settings.jobs, || {
        let mut rows = Vec::new();
        for (tag, p) in &sources {
            rows.extend(experiments::run_design_comparison(p, &vocab, &claims, &directions, &opts, a.settings.pooling, tag)?);
        }
        Ok::<_, ExperimentError>(rows)
    })?
    .map_err(experiment_error)?;
    emit(&rows, &a.output)
}

fn position_sweep(a: PositionSweepArgs) -> Result<(), CliError> {
    let vocab = load_vocab(&a.predictor.vocab)?;
    let opts = eval_options(&a.settings, &vocab, a.design)?;
    let sources = load_sources(&a.predictor, &vocab)?;
    let claims = encode_all(&vocab, &load_texts(&a.input)?);
    let starts = if a.starts.is_empty() {
        vec![StartPosition::Q1, StartPosition::Q2, StartPosition::Q3]
    } else {
        a.starts
    };
    let legs = if a.first_legs.is_empty() { vec![Direction::Forward, Direction::Backward] } else { a.first_legs };
    let rows = with_jobs(a.settings.jobs, || {
        let mut rows = Vec::new();
        for (tag, p) in &sources {
            rows.extend(experiments::run_position_sweep(p, &vocab, &claims, &starts, &legs, &opts, a.settings.pooling, tag)?);
        }
        Ok::<_, ExperimentError>(rows)
    })?
    .map_err(experiment_error)?;
    emit(&rows, &a.output)
}

fn report(a: ReportArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&a.input).map_err(|e| data(&a.input, e))?;
    let rows = experiments::parse_csv(&text).map_err(|e| data(&a.input, e))?;
    let out = experiments::emit_report(&rows, a.format).map_err(|e| data(&a.input, e))?;
    write_output(a.out.as_deref(), &out)
}

fn serve(a: ServeArgs) -> Result<(), CliError> {
    let vocab = load_vocab(&a.vocab)?;
    let models = model_paths(&a.models)
        .iter()
        .map(|p| Ok((tag_of(p), ModelHandle::new(vocab.clone(), load_model(p, &vocab)?))))
        .collect::<Result<Vec<_>, CliError>>()?;
    let addr: SocketAddr = (a.host.as_str(), a.port)
        .to_socket_addrs()
        .ok()
        .and_then(|mut it| it.next())
        .ok_or_else(|| CliError::Usage(format!("cannot resolve host `{}`", a.host)))?;
    ae_server::run_blocking(addr, AppState::new(models), |bound| eprintln!("listening on http://{bound}"))
        .map_err(|e| CliError::Runtime(e.to_string()))
}

fn write_corpus(path: &Path, corpus: &Corpus) -> Result<(), CliError> {
    std::fs::write(path, corpus.to_jsonl()).map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}

fn synth(a: SynthArgs) -> Result<(), CliError> {
    let corpus = Corpus::ingest(synthetic::generate(a.seed, a.bytes)).map_err(|e| CliError::Runtime(e.to_string()))?;
    write_corpus(&a.out, &corpus)?;
    eprintln!("{} claims -> {}", corpus.len(), a.out.display());
    Ok(())
}

fn split(a: SplitArgs) -> Result<(), CliError> {
    let mut corpus = load_corpus(&a.input)?;
    if let Some(prefix) = &a.cpc {
        corpus = corpus.filter_cpc(prefix);
    }
    let (train, held_out) = match a.year_cutoff {
        Some(year) => corpus.split_by_year(year),
        None => corpus.split(a.eval_fraction, a.seed),
    }
    .map_err(|e| match e {
        ae_core::corpus::CorpusError::FractionOutOfRange(_) => CliError::Usage(e.to_string()),
        other => data(&a.input, other),
    })?;
    write_corpus(&a.out_train, &train)?;
    write_corpus(&a.out_eval, &held_out)?;
    eprintln!("{} train claims, {} eval claims", train.len(), held_out.len());
    Ok(())
}
