//! File-level commands that chain the library into a full workflow:
//! vocabulary building, language-model training, annealed search,
//! trajectory collection and labeling, surrogate training, evaluation,
//! and diagnostic reports.
//!
//! Every stage reads and writes plain text files, so a run decomposes
//! into steps that can be rerun, inspected, or swapped in isolation.
//! Shared knobs and artifact locations come from a [`PipelineConfig`],
//! loaded from a flat `key = value` file ('#' starts a comment line);
//! per-command options override the config wherever both name the same
//! knob. Intermediate artifacts live under `work_dir` with fixed names,
//! and each command accepts explicit path overrides for its primary
//! inputs and outputs.
//!
//! Each `cmd_*` function returns its summary as a single line of
//! `<command> ok key=value ...` fields. The `parasearch` binary prints
//! that line and maps errors to exit codes via [`Error::exit_code`]; the
//! runnable examples call the same functions directly.
//!
//! Commands never modify their input files, and rerunning a command with
//! the same inputs writes byte-identical artifacts.

use std::fmt;
use std::fmt::Write as _;
use std::fs;
use std::io::BufRead;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Args;

use crate::analysis::{default_k_grid, sweep_row_for, weight_sweep, SweepConfig, SweepReport, SweepRow};
use crate::annealing::{search_batch, SaConfig};
use crate::corpus::{build_vocab, load_corpus, TokenSeq, Vocabulary};
use crate::error::{Error, Result};
use crate::lm::{train_lm, Direction, LmConfig, NGramLm};
use crate::objective::{combine_s2s, combine_value, BaseObjective, ModelSet, ObjectiveConfig};
use crate::metrics::evaluate_corpus;
use crate::semantics::{load_embeddings, load_stopwords};
use crate::surrogate::{
    load_emission, load_regressor, save_emission, save_regressor, train_regressor, train_s2s,
    EmissionHyper, EmissionObjective, RegressorObjective, SurrogateKind, TrainHyper,
};
use crate::trajectory::{
    extract_pseudo_pairs, label_max_value_all, label_value_all, load_trajectories,
    save_trajectories, LabeledExample, PseudoPair, Trajectory,
};

/// Which objective decides acceptance during search or re-scoring.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ObjectiveKind {
    /// The plain fluency, semantics, and diversity product.
    Original,
    /// The base objective mixed with a trained surrogate.
    Surrogate(SurrogateKind),
}

impl fmt::Display for ObjectiveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObjectiveKind::Original => write!(f, "original"),
            ObjectiveKind::Surrogate(kind) => write!(f, "{kind}"),
        }
    }
}

impl FromStr for ObjectiveKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "original" {
            return Ok(ObjectiveKind::Original);
        }
        SurrogateKind::from_str(s)
            .map(ObjectiveKind::Surrogate)
            .map_err(|_| {
                Error::Config(format!(
                    "unknown objective {s:?} (expected original, value, maxvalue, or s2s)"
                ))
            })
    }
}

impl Default for ObjectiveKind {
    fn default() -> Self {
        ObjectiveKind::Original
    }
}

/// Every knob the pipeline commands share, with library defaults.
///
/// The single `seed` key feeds both the search and surrogate-training
/// streams, so one value pins a whole run.
#[derive(Clone, Debug)]
pub struct PipelineConfig {
    /// Raw training corpus, one sentence per line.
    pub corpus: PathBuf,
    /// Word embedding table: `word v1 .. vd` per line.
    pub embeddings: PathBuf,
    /// Stopword list, one word per line.
    pub stopwords: PathBuf,
    /// Sentences to paraphrase during evaluation runs.
    pub eval_inputs: PathBuf,
    /// Reference paraphrases aligned line-by-line with `eval_inputs`.
    pub eval_refs: PathBuf,
    /// Directory for intermediate artifacts and default outputs.
    pub work_dir: PathBuf,
    /// Words seen fewer times than this fold into `<unk>`.
    pub min_count: usize,
    pub lm: LmConfig,
    pub objective: ObjectiveConfig,
    pub sa: SaConfig,
    pub train: TrainHyper,
    pub emission: EmissionHyper,
    /// Surrogate mixture weight.
    pub k: f64,
    /// Scale on emission probabilities in the s2s combination.
    pub d: f64,
    /// iBLEU reference weight.
    pub alpha: f64,
    /// Worker threads for batch searches; 0 means one per core.
    pub jobs: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            corpus: "fixtures/corpus.txt".into(),
            embeddings: "fixtures/embeddings.txt".into(),
            stopwords: "fixtures/stopwords.txt".into(),
            eval_inputs: "fixtures/eval_inputs.txt".into(),
            eval_refs: "fixtures/eval_refs.txt".into(),
            work_dir: "work".into(),
            min_count: 1,
            lm: LmConfig::default(),
            objective: ObjectiveConfig::default(),
            sa: SaConfig::default(),
            train: TrainHyper::default(),
            emission: EmissionHyper::default(),
            k: 0.0,
            d: 100.0,
            alpha: 0.9,
            jobs: 1,
        }
    }
}

impl PipelineConfig {
    /// Read a flat `key = value` config file. Blank lines and lines
    /// starting with '#' are skipped; any unknown key or unparsable
    /// value is a [`Error::Config`] naming the offending line.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = PipelineConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config(format!(
                    "{}:{}: expected key = value, found {raw:?}",
                    path.display(),
                    i + 1
                )));
            };
            cfg.set(key.trim(), value.trim()).map_err(|e| match e {
                Error::Config(why) => {
                    Error::Config(format!("{}:{}: {why}", path.display(), i + 1))
                }
                other => other,
            })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Apply one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "corpus" => self.corpus = value.into(),
            "embeddings" => self.embeddings = value.into(),
            "stopwords" => self.stopwords = value.into(),
            "eval_inputs" => self.eval_inputs = value.into(),
            "eval_refs" => self.eval_refs = value.into(),
            "work_dir" => self.work_dir = value.into(),
            "min_count" => self.min_count = parse_num(key, value)?,
            "lm_order" => {
                let order: usize = parse_num(key, value)?;
                if order == 0 {
                    return Err(Error::Config("lm_order must be at least 1".into()));
                }
                self.lm.order = order;
                if self.lm.level_weights.len() != order {
                    self.lm.level_weights = vec![1.0 / order as f64; order];
                }
            }
            "lm_add_k" => self.lm.add_k = parse_num(key, value)?,
            "lm_weights" => self.lm.level_weights = parse_list(key, value)?,
            "lm_score_eos" => self.lm.score_eos = parse_bool(key, value)?,
            "p" => self.objective.p = parse_num(key, value)?,
            "q" => self.objective.q = parse_num(key, value)?,
            "s" => self.objective.s = parse_num(key, value)?,
            "score_scale" => self.objective.score_scale = parse_num(key, value)?,
            "eps_clamp" => self.objective.eps_clamp = parse_num(key, value)?,
            "eps_key" => self.objective.eps_key = parse_num(key, value)?,
            "steps" => self.sa.steps = parse_num(key, value)?,
            "t_init" => self.sa.t_init = parse_num(key, value)?,
            "anneal_rate_c" => self.sa.anneal_rate_c = parse_num(key, value)?,
            "top_k" => self.sa.top_k = parse_num(key, value)?,
            "op_insert" => self.sa.op_probs[0] = parse_num(key, value)?,
            "op_replace" => self.sa.op_probs[1] = parse_num(key, value)?,
            "op_delete" => self.sa.op_probs[2] = parse_num(key, value)?,
            "min_len" => self.sa.min_len = parse_num(key, value)?,
            "seed" => {
                let seed: u64 = parse_num(key, value)?;
                self.sa.seed = seed;
                self.train.seed = seed;
            }
            "k" => self.k = parse_num(key, value)?,
            "d" => self.d = parse_num(key, value)?,
            "alpha" => self.alpha = parse_num(key, value)?,
            "epochs" => self.train.epochs = parse_num(key, value)?,
            "batch" => self.train.batch = parse_num(key, value)?,
            "lr" => self.train.lr = parse_num(key, value)?,
            "hidden" => self.train.hidden = parse_num(key, value)?,
            "init_scale" => self.train.init_scale = parse_num(key, value)?,
            "em_iters" => self.emission.em_iters = parse_num(key, value)?,
            "emission_add_k" => self.emission.add_k = parse_num(key, value)?,
            "jobs" => self.jobs = parse_num(key, value)?,
            other => {
                return Err(Error::Config(format!("unknown config key {other:?}")));
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.lm.validate()?;
        self.objective.validate()?;
        self.sa.validate()?;
        self.train.validate()?;
        self.emission.validate()?;
        if self.min_count == 0 {
            return Err(Error::Config("min_count must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.k) {
            return Err(Error::Config(format!("k must lie in [0, 1], got {}", self.k)));
        }
        if !(self.d.is_finite() && self.d > 0.0) {
            return Err(Error::Config(format!("d must be positive, got {}", self.d)));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Config(format!(
                "alpha must lie in [0, 1], got {}",
                self.alpha
            )));
        }
        Ok(())
    }

    pub fn vocab_path(&self) -> PathBuf {
        self.work_dir.join("vocab.txt")
    }

    pub fn lm_fwd_path(&self) -> PathBuf {
        self.work_dir.join("lm_fwd.txt")
    }

    pub fn lm_bwd_path(&self) -> PathBuf {
        self.work_dir.join("lm_bwd.txt")
    }

    /// Trained surrogate model file for `kind`.
    pub fn model_path(&self, kind: SurrogateKind) -> PathBuf {
        self.work_dir.join(format!("{kind}.model"))
    }

    /// Labeled training data for `kind`.
    pub fn labels_path(&self, kind: SurrogateKind) -> PathBuf {
        match kind {
            SurrogateKind::S2s => self.work_dir.join("s2s.pairs"),
            _ => self.work_dir.join(format!("{kind}.labels")),
        }
    }

    /// Default trajectory file written by `collect`.
    pub fn collect_trajs_path(&self) -> PathBuf {
        self.work_dir.join("train_trajs.tsv")
    }

    /// Default trajectory file written by `search`.
    pub fn search_trajs_path(&self) -> PathBuf {
        self.work_dir.join("search_trajs.tsv")
    }

    /// Default paraphrase output file written by `search`.
    pub fn outputs_path(&self) -> PathBuf {
        self.work_dir.join("outputs.txt")
    }

    pub fn eval_csv_path(&self) -> PathBuf {
        self.work_dir.join("eval.csv")
    }

    pub fn analyze_csv_path(&self) -> PathBuf {
        self.work_dir.join("analyze.csv")
    }

    /// Default directory for sweep reports.
    pub fn reports_dir(&self) -> PathBuf {
        self.work_dir.join("reports")
    }
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("bad value {value:?} for {key}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" => Ok(true),
        "false" | "0" => Ok(false),
        _ => Err(Error::Config(format!(
            "bad value {value:?} for {key} (expected true or false)"
        ))),
    }
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>> {
    value.split(',').map(|v| parse_num(key, v.trim())).collect()
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    Ok(())
}

/// Load the vocabulary, both language models, embeddings, and stopwords
/// named by `cfg` into a ready [`ModelSet`].
pub fn load_models(cfg: &PipelineConfig) -> Result<ModelSet> {
    let vocab = Vocabulary::load(cfg.vocab_path())?;
    let lm_fwd = NGramLm::load(cfg.lm_fwd_path(), &vocab)?;
    let lm_bwd = NGramLm::load(cfg.lm_bwd_path(), &vocab)?;
    let embeddings = load_embeddings(&cfg.embeddings)?;
    let stopwords = load_stopwords(&cfg.stopwords)?;
    ModelSet::new(vocab, lm_fwd, lm_bwd, &embeddings, stopwords)
}

/// Read a sentence-per-line file through normalization and interning.
/// Blank lines are skipped; line order is kept, duplicates included.
pub fn load_sentences(path: impl AsRef<Path>, vocab: &Vocabulary) -> Result<Vec<TokenSeq>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for line in text.lines() {
        if line.trim().is_empty() {
            continue;
        }
        out.push(vocab.encode_line(line)?);
    }
    if out.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    Ok(out)
}

/// Write sentences one per line, decoded through `vocab`.
pub fn save_sentences(
    path: impl AsRef<Path>,
    seqs: &[TokenSeq],
    vocab: &Vocabulary,
) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for seq in seqs {
        out.push_str(&vocab.decode(seq));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

// Label files carry already-normalized surfaces, so they are re-interned
// by plain space splitting rather than the full tokenizer; that keeps
// `<unk>` and every other surface byte-stable through a round trip.
fn intern_field(field: &str, vocab: &Vocabulary) -> Option<TokenSeq> {
    if field.is_empty() {
        return None;
    }
    let words: Vec<String> = field.split(' ').map(str::to_owned).collect();
    Some(vocab.intern(&words))
}

/// Write regression examples as `x0<TAB>x<TAB>target` lines.
pub fn save_labeled(
    path: impl AsRef<Path>,
    examples: &[LabeledExample],
    vocab: &Vocabulary,
) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for e in examples {
        writeln!(
            out,
            "{}\t{}\t{}",
            vocab.decode(&e.x0),
            vocab.decode(&e.x),
            e.target
        )
        .expect("string write");
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Read a file written by [`save_labeled`].
pub fn load_labeled(path: impl AsRef<Path>, vocab: &Vocabulary) -> Result<Vec<LabeledExample>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let malformed = |line: usize, reason: String| Error::Malformed {
        path: path.to_owned(),
        line,
        reason,
    };
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let [x0, x, target] = fields[..] else {
            return Err(malformed(
                i + 1,
                format!("expected 3 tab-separated fields, found {}", fields.len()),
            ));
        };
        let x0 = intern_field(x0, vocab)
            .ok_or_else(|| malformed(i + 1, "empty source sentence".into()))?;
        let x = intern_field(x, vocab)
            .ok_or_else(|| malformed(i + 1, "empty candidate sentence".into()))?;
        let target: f64 = target
            .parse()
            .map_err(|_| malformed(i + 1, format!("bad target {target:?}")))?;
        out.push(LabeledExample { x0, x, target });
    }
    Ok(out)
}

/// Write source/target pseudo pairs as `x0<TAB>xt` lines.
pub fn save_pairs(
    path: impl AsRef<Path>,
    pairs: &[PseudoPair],
    vocab: &Vocabulary,
) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for p in pairs {
        writeln!(out, "{}\t{}", vocab.decode(&p.x0), vocab.decode(&p.xt))
            .expect("string write");
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Read a file written by [`save_pairs`].
pub fn load_pairs(path: impl AsRef<Path>, vocab: &Vocabulary) -> Result<Vec<PseudoPair>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let malformed = |line: usize, reason: String| Error::Malformed {
        path: path.to_owned(),
        line,
        reason,
    };
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let [x0, xt] = fields[..] else {
            return Err(malformed(
                i + 1,
                format!("expected 2 tab-separated fields, found {}", fields.len()),
            ));
        };
        let x0 = intern_field(x0, vocab)
            .ok_or_else(|| malformed(i + 1, "empty source sentence".into()))?;
        let xt = intern_field(xt, vocab)
            .ok_or_else(|| malformed(i + 1, "empty target sentence".into()))?;
        out.push(PseudoPair { x0, xt });
    }
    Ok(out)
}

/// A loaded surrogate, ready to be combined with the base objective.
pub enum SurrogateHolder<'m> {
    Regressor(RegressorObjective<'m>),
    Emission(EmissionObjective),
}

fn sniff_header(path: &Path) -> Result<String> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut line = String::new();
    std::io::BufReader::new(file)
        .read_line(&mut line)
        .map_err(|e| Error::io(path, e))?;
    Ok(line.trim_end().to_owned())
}

/// Load the trained surrogate for `kind` from `path`, checking that the
/// file actually holds that kind of model.
pub fn load_surrogate<'m>(
    models: &'m ModelSet,
    kind: SurrogateKind,
    path: &Path,
) -> Result<SurrogateHolder<'m>> {
    if !path.is_file() {
        return Err(Error::Config(format!(
            "objective `{kind}` needs a trained model; none found at {} \
             (run train-surrogate first or pass --model)",
            path.display()
        )));
    }
    let header = sniff_header(path)?;
    match kind {
        SurrogateKind::S2s => {
            if header.starts_with("valuereg") {
                return Err(Error::Config(format!(
                    "{} holds a value regressor, but objective `s2s` was requested",
                    path.display()
                )));
            }
            let model = load_emission(path, &models.vocab)?;
            Ok(SurrogateHolder::Emission(EmissionObjective::new(model)))
        }
        SurrogateKind::Value | SurrogateKind::MaxValue => {
            if header.starts_with("emission") {
                return Err(Error::Config(format!(
                    "{} holds an emission model, but objective `{kind}` was requested",
                    path.display()
                )));
            }
            let (file_kind, reg) = load_regressor(path)?;
            if file_kind != kind {
                return Err(Error::Config(format!(
                    "{} holds a `{file_kind}` regressor, but objective `{kind}` was requested",
                    path.display()
                )));
            }
            Ok(SurrogateHolder::Regressor(RegressorObjective::new(models, reg)))
        }
    }
}

#[derive(Args, Clone, Debug, Default)]
pub struct PreprocessOpts {
    /// Raw corpus file; defaults to the configured corpus.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Words seen fewer times than this fold into `<unk>`.
    #[arg(long)]
    pub min_count: Option<usize>,
    /// Vocabulary output file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Build the vocabulary from a raw corpus and save it.
pub fn cmd_preprocess(cfg: &PipelineConfig, opts: &PreprocessOpts) -> Result<String> {
    let corpus_path = opts.corpus.clone().unwrap_or_else(|| cfg.corpus.clone());
    let min_count = opts.min_count.unwrap_or(cfg.min_count);
    let out = opts.out.clone().unwrap_or_else(|| cfg.vocab_path());
    let sentences = load_corpus(&corpus_path)?;
    let vocab = build_vocab(&sentences, min_count)?;
    ensure_parent(&out)?;
    vocab.save(&out)?;
    Ok(format!(
        "preprocess ok sentences={} vocab={} min_count={} out={}",
        sentences.len(),
        vocab.len(),
        min_count,
        out.display()
    ))
}

#[derive(Args, Clone, Debug, Default)]
pub struct TrainLmOpts {
    /// Raw corpus file; defaults to the configured corpus.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Forward model output file.
    #[arg(long)]
    pub out_fwd: Option<PathBuf>,
    /// Backward model output file.
    #[arg(long)]
    pub out_bwd: Option<PathBuf>,
}

/// Train the forward and backward n-gram language models.
pub fn cmd_train_lm(cfg: &PipelineConfig, opts: &TrainLmOpts) -> Result<String> {
    let corpus_path = opts.corpus.clone().unwrap_or_else(|| cfg.corpus.clone());
    let out_fwd = opts.out_fwd.clone().unwrap_or_else(|| cfg.lm_fwd_path());
    let out_bwd = opts.out_bwd.clone().unwrap_or_else(|| cfg.lm_bwd_path());
    let vocab = Vocabulary::load(cfg.vocab_path())?;
    let sentences = load_corpus(&corpus_path)?;
    let toks: Vec<TokenSeq> = sentences.iter().map(|s| vocab.intern(s)).collect();
    let lm_fwd = train_lm(&toks, &vocab, cfg.lm.clone(), Direction::Forward)?;
    let lm_bwd = train_lm(&toks, &vocab, cfg.lm.clone(), Direction::Backward)?;
    ensure_parent(&out_fwd)?;
    ensure_parent(&out_bwd)?;
    lm_fwd.save(&out_fwd, &vocab)?;
    lm_bwd.save(&out_bwd, &vocab)?;
    Ok(format!(
        "train-lm ok sentences={} order={} fwd={} bwd={}",
        toks.len(),
        cfg.lm.order,
        out_fwd.display(),
        out_bwd.display()
    ))
}

#[derive(Args, Clone, Debug, Default)]
pub struct SearchOpts {
    /// Sentences to paraphrase, one per line; defaults to `eval_inputs`.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Acceptance objective: original, value, maxvalue, or s2s.
    #[arg(long, default_value = "original")]
    pub objective: ObjectiveKind,
    /// Trained surrogate model; defaults to `<work_dir>/<kind>.model`.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Surrogate mixture weight in [0, 1].
    #[arg(long)]
    pub k: Option<f64>,
    /// Scale on emission probabilities for the s2s objective.
    #[arg(long)]
    pub d: Option<f64>,
    /// Base RNG seed; input i searches under seed + i.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Sampling steps per sentence.
    #[arg(long)]
    pub steps: Option<usize>,
    /// Candidate words ranked per proposal.
    #[arg(long)]
    pub top_k: Option<usize>,
    /// Worker threads; 0 means one per core.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Search only the first N input sentences.
    #[arg(long)]
    pub limit: Option<usize>,
    /// Paraphrase output file, one sentence per input line.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Recorded trajectory output file.
    #[arg(long)]
    pub traj_out: Option<PathBuf>,
}

fn reject_surrogate_flags(objective: ObjectiveKind, opts_model: bool, opts_k: bool, opts_d: bool) -> Result<()> {
    if objective == ObjectiveKind::Original && (opts_model || opts_k || opts_d) {
        return Err(Error::Config(
            "--model, --k, and --d apply only to surrogate objectives".into(),
        ));
    }
    Ok(())
}

/// Paraphrase a file of sentences by annealed search, recording the
/// trajectories. Word proposals always come from the base objective;
/// `--objective` picks what decides acceptance.
pub fn cmd_search(cfg: &PipelineConfig, opts: &SearchOpts) -> Result<String> {
    reject_surrogate_flags(
        opts.objective,
        opts.model.is_some(),
        opts.k.is_some(),
        opts.d.is_some(),
    )?;
    let mut sa = cfg.sa.clone();
    if let Some(seed) = opts.seed {
        sa.seed = seed;
    }
    if let Some(steps) = opts.steps {
        sa.steps = steps;
    }
    if let Some(top_k) = opts.top_k {
        sa.top_k = top_k;
    }
    let jobs = opts.jobs.unwrap_or(cfg.jobs);
    let k = opts.k.unwrap_or(cfg.k);
    let d = opts.d.unwrap_or(cfg.d);

    let model_path = match opts.objective {
        ObjectiveKind::Original => None,
        ObjectiveKind::Surrogate(kind) => {
            let path = opts.model.clone().unwrap_or_else(|| cfg.model_path(kind));
            if !path.is_file() {
                return Err(Error::Config(format!(
                    "objective `{kind}` needs a trained model; none found at {} \
                     (run train-surrogate first or pass --model)",
                    path.display()
                )));
            }
            Some(path)
        }
    };

    let models = load_models(cfg)?;
    let input_path = opts.input.clone().unwrap_or_else(|| cfg.eval_inputs.clone());
    let mut inputs = load_sentences(&input_path, &models.vocab)?;
    if let Some(n) = opts.limit {
        inputs.truncate(n);
    }
    if inputs.is_empty() {
        return Err(Error::EmptyCorpus);
    }

    let base = BaseObjective::new(&models, cfg.objective)?;
    let holder;
    let results = match opts.objective {
        ObjectiveKind::Original => search_batch(&inputs, &base, &base, &sa, jobs)?,
        ObjectiveKind::Surrogate(kind) => {
            let path = model_path.expect("surrogate objectives resolve a model path");
            holder = load_surrogate(&models, kind, &path)?;
            match &holder {
                SurrogateHolder::Regressor(r) => {
                    search_batch(&inputs, &combine_value(base, r, k)?, &base, &sa, jobs)?
                }
                SurrogateHolder::Emission(e) => {
                    search_batch(&inputs, &combine_s2s(base, e, k, d)?, &base, &sa, jobs)?
                }
            }
        }
    };

    let out_path = opts.out.clone().unwrap_or_else(|| cfg.outputs_path());
    let traj_path = opts.traj_out.clone().unwrap_or_else(|| cfg.search_trajs_path());
    ensure_parent(&out_path)?;
    ensure_parent(&traj_path)?;
    let outputs: Vec<TokenSeq> = results.iter().map(|r| r.output.clone()).collect();
    save_sentences(&out_path, &outputs, &models.vocab)?;
    let mean_score =
        results.iter().map(|r| r.output_score).sum::<f64>() / results.len() as f64;
    let trajs: Vec<Trajectory> = results.into_iter().map(|r| r.trajectory).collect();
    save_trajectories(&trajs, &traj_path, &models.vocab)?;
    let k_shown = match opts.objective {
        ObjectiveKind::Original => 0.0,
        ObjectiveKind::Surrogate(_) => k,
    };
    Ok(format!(
        "search ok objective={} k={} seed={} inputs={} mean_score={} out={} trajs={}",
        opts.objective,
        k_shown,
        sa.seed,
        trajs.len(),
        mean_score,
        out_path.display(),
        traj_path.display()
    ))
}

#[derive(Args, Clone, Debug, Default)]
pub struct CollectOpts {
    /// Sentences to search; defaults to the training corpus.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Search only the first N corpus sentences.
    #[arg(long)]
    pub limit: Option<usize>,
    /// Base RNG seed; input i searches under seed + i.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Sampling steps per sentence.
    #[arg(long)]
    pub steps: Option<usize>,
    /// Worker threads; 0 means one per core.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Trajectory output file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Record baseline search trajectories over the training corpus, the raw
/// material for surrogate training.
pub fn cmd_collect(cfg: &PipelineConfig, opts: &CollectOpts) -> Result<String> {
    let mut sa = cfg.sa.clone();
    if let Some(seed) = opts.seed {
        sa.seed = seed;
    }
    if let Some(steps) = opts.steps {
        sa.steps = steps;
    }
    let jobs = opts.jobs.unwrap_or(cfg.jobs);
    let corpus_path = opts.corpus.clone().unwrap_or_else(|| cfg.corpus.clone());
    let out = opts.out.clone().unwrap_or_else(|| cfg.collect_trajs_path());

    let models = load_models(cfg)?;
    let sentences = load_corpus(&corpus_path)?;
    let mut inputs: Vec<TokenSeq> = sentences.iter().map(|s| models.vocab.intern(s)).collect();
    if let Some(n) = opts.limit {
        inputs.truncate(n);
    }
    if inputs.is_empty() {
        return Err(Error::EmptyCorpus);
    }

    let base = BaseObjective::new(&models, cfg.objective)?;
    let results = search_batch(&inputs, &base, &base, &sa, jobs)?;
    let trajs: Vec<Trajectory> = results.into_iter().map(|r| r.trajectory).collect();
    ensure_parent(&out)?;
    save_trajectories(&trajs, &out, &models.vocab)?;
    Ok(format!(
        "collect ok inputs={} steps={} seed={} out={}",
        trajs.len(),
        sa.steps,
        sa.seed,
        out.display()
    ))
}

#[derive(Args, Clone, Debug)]
pub struct LabelOpts {
    /// Which labeling to produce: value, maxvalue, or s2s.
    #[arg(long)]
    pub kind: SurrogateKind,
    /// Trajectory file to label; defaults to the collect output.
    #[arg(long)]
    pub trajs: Option<PathBuf>,
    /// Labeled data output file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Turn recorded trajectories into surrogate training data: per-state
/// value or max-value targets, or source/target pseudo pairs.
pub fn cmd_label(cfg: &PipelineConfig, opts: &LabelOpts) -> Result<String> {
    let trajs_path = opts.trajs.clone().unwrap_or_else(|| cfg.collect_trajs_path());
    let out = opts.out.clone().unwrap_or_else(|| cfg.labels_path(opts.kind));
    let vocab = Vocabulary::load(cfg.vocab_path())?;
    let trajs = load_trajectories(&trajs_path, &vocab)?;
    ensure_parent(&out)?;
    let examples = match opts.kind {
        SurrogateKind::Value => {
            let examples = label_value_all(&trajs)?;
            save_labeled(&out, &examples, &vocab)?;
            examples.len()
        }
        SurrogateKind::MaxValue => {
            let examples = label_max_value_all(&trajs)?;
            save_labeled(&out, &examples, &vocab)?;
            examples.len()
        }
        SurrogateKind::S2s => {
            let pairs = extract_pseudo_pairs(&trajs)?;
            save_pairs(&out, &pairs, &vocab)?;
            pairs.len()
        }
    };
    Ok(format!(
        "label ok kind={} trajectories={} examples={} out={}",
        opts.kind,
        trajs.len(),
        examples,
        out.display()
    ))
}

#[derive(Args, Clone, Debug)]
pub struct TrainSurrogateOpts {
    /// Which surrogate to fit: value, maxvalue, or s2s.
    #[arg(long)]
    pub kind: SurrogateKind,
    /// Labeled data file from `label`; defaults per kind.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Regressor training seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Regressor training epochs.
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Model output file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Fit a surrogate objective on labeled data and save the model.
pub fn cmd_train_surrogate(cfg: &PipelineConfig, opts: &TrainSurrogateOpts) -> Result<String> {
    let labels_path = opts.labels.clone().unwrap_or_else(|| cfg.labels_path(opts.kind));
    let out = opts.out.clone().unwrap_or_else(|| cfg.model_path(opts.kind));
    ensure_parent(&out)?;
    match opts.kind {
        SurrogateKind::Value | SurrogateKind::MaxValue => {
            let models = load_models(cfg)?;
            let examples = load_labeled(&labels_path, &models.vocab)?;
            let mut hyper = cfg.train;
            if let Some(seed) = opts.seed {
                hyper.seed = seed;
            }
            if let Some(epochs) = opts.epochs {
                hyper.epochs = epochs;
            }
            let (reg, report) = train_regressor(&examples, &models, &hyper)?;
            save_regressor(&out, opts.kind, &reg)?;
            Ok(format!(
                "train-surrogate ok kind={} examples={} epochs={} final_mse={} out={}",
                opts.kind,
                examples.len(),
                hyper.epochs,
                report.final_mse,
                out.display()
            ))
        }
        SurrogateKind::S2s => {
            if opts.seed.is_some() || opts.epochs.is_some() {
                return Err(Error::Config(
                    "--seed and --epochs apply only to the regressor kinds".into(),
                ));
            }
            let vocab = Vocabulary::load(cfg.vocab_path())?;
            let pairs = load_pairs(&labels_path, &vocab)?;
            let (model, report) = train_s2s(&pairs, &vocab, &cfg.emission)?;
            save_emission(&out, &model, &vocab)?;
            let [copy, bigram, unigram] = model.lambda();
            Ok(format!(
                "train-surrogate ok kind=s2s pairs={} final_ce={} lambda_copy={} \
                 lambda_bigram={} lambda_unigram={} out={}",
                pairs.len(),
                report.final_ce,
                copy,
                bigram,
                unigram,
                out.display()
            ))
        }
    }
}

#[derive(Args, Clone, Debug, Default)]
pub struct EvaluateOpts {
    /// Paraphrase outputs, one per line; defaults to the search output.
    #[arg(long)]
    pub outputs: Option<PathBuf>,
    /// Source sentences; defaults to `eval_inputs`.
    #[arg(long)]
    pub inputs: Option<PathBuf>,
    /// Reference paraphrases; defaults to `eval_refs`.
    #[arg(long)]
    pub refs: Option<PathBuf>,
    /// iBLEU reference weight in [0, 1].
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Per-sentence CSV output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Score paraphrase outputs against references with BLEU and iBLEU.
pub fn cmd_evaluate(cfg: &PipelineConfig, opts: &EvaluateOpts) -> Result<String> {
    let vocab = Vocabulary::load(cfg.vocab_path())?;
    let outputs_path = opts.outputs.clone().unwrap_or_else(|| cfg.outputs_path());
    let inputs_path = opts.inputs.clone().unwrap_or_else(|| cfg.eval_inputs.clone());
    let refs_path = opts.refs.clone().unwrap_or_else(|| cfg.eval_refs.clone());
    let alpha = opts.alpha.unwrap_or(cfg.alpha);
    let out = opts.out.clone().unwrap_or_else(|| cfg.eval_csv_path());

    let outputs = load_sentences(&outputs_path, &vocab)?;
    let refs = load_sentences(&refs_path, &vocab)?;
    let sources = load_sentences(&inputs_path, &vocab)?;
    let eval = evaluate_corpus(&outputs, &refs, &sources, alpha)?;
    ensure_parent(&out)?;
    eval.write_csv(&out)?;
    Ok(format!(
        "evaluate ok sentences={} alpha={} mean_bleu={} mean_ibleu={} out={}",
        eval.rows.len(),
        alpha,
        eval.mean_bleu,
        eval.mean_ibleu,
        out.display()
    ))
}

#[derive(Args, Clone, Debug, Default)]
pub struct AnalyzeOpts {
    /// Trajectory file to diagnose; defaults to the search output.
    #[arg(long)]
    pub trajs: Option<PathBuf>,
    /// Objective to re-score states under.
    #[arg(long, default_value = "original")]
    pub objective: ObjectiveKind,
    /// Trained surrogate model; defaults to `<work_dir>/<kind>.model`.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Surrogate mixture weight in [0, 1].
    #[arg(long)]
    pub k: Option<f64>,
    /// Scale on emission probabilities for the s2s objective.
    #[arg(long)]
    pub d: Option<f64>,
    /// iBLEU reference weight in [0, 1].
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Reference paraphrases aligned with the searched inputs.
    #[arg(long)]
    pub refs: Option<PathBuf>,
    /// One-row CSV report output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Diagnose one trajectory file: rank correlations of the chosen
/// objective with BLEU and iBLEU over accepted states, output quality at
/// the best accepted states, acceptance per 100 steps, and escapes from
/// local minima of the base objective. With the original objective this
/// reproduces the k = 0 row of a sweep over the same searches.
pub fn cmd_analyze(cfg: &PipelineConfig, opts: &AnalyzeOpts) -> Result<String> {
    reject_surrogate_flags(
        opts.objective,
        opts.model.is_some(),
        opts.k.is_some(),
        opts.d.is_some(),
    )?;
    let trajs_path = opts.trajs.clone().unwrap_or_else(|| cfg.search_trajs_path());
    let refs_path = opts.refs.clone().unwrap_or_else(|| cfg.eval_refs.clone());
    let alpha = opts.alpha.unwrap_or(cfg.alpha);
    let k = opts.k.unwrap_or(cfg.k);
    let d = opts.d.unwrap_or(cfg.d);
    let out = opts.out.clone().unwrap_or_else(|| cfg.analyze_csv_path());

    let models = load_models(cfg)?;
    let trajs = load_trajectories(&trajs_path, &models.vocab)?;
    let refs = load_sentences(&refs_path, &models.vocab)?;
    let base = BaseObjective::new(&models, cfg.objective)?;
    let holder;
    let row = match opts.objective {
        ObjectiveKind::Original => sweep_row_for(&trajs, &base, &base, &refs, 0.0, alpha)?,
        ObjectiveKind::Surrogate(kind) => {
            let path = opts.model.clone().unwrap_or_else(|| cfg.model_path(kind));
            holder = load_surrogate(&models, kind, &path)?;
            match &holder {
                SurrogateHolder::Regressor(r) => {
                    sweep_row_for(&trajs, &combine_value(base, r, k)?, &base, &refs, k, alpha)?
                }
                SurrogateHolder::Emission(e) => {
                    sweep_row_for(&trajs, &combine_s2s(base, e, k, d)?, &base, &refs, k, alpha)?
                }
            }
        }
    };
    ensure_parent(&out)?;
    let csv = format!(
        "# spearman over accepted states only\n{}\n{}\n",
        SweepRow::csv_header(),
        row.csv_line()
    );
    fs::write(&out, csv).map_err(|e| Error::io(&out, e))?;
    Ok(format!(
        "analyze ok trajectories={} k={} spearman_bleu={} spearman_ibleu={} \
         traj_len_per100={} escapes_per100={} out={}",
        trajs.len(),
        row.k,
        row.spearman_bleu,
        row.spearman_ibleu,
        row.traj_len_per100,
        row.escapes_per100,
        out.display()
    ))
}

#[derive(Args, Clone, Debug, Default)]
pub struct SweepOpts {
    /// Surrogate kinds to sweep; defaults to all three.
    #[arg(long, value_delimiter = ',')]
    pub kinds: Option<Vec<SurrogateKind>>,
    /// Comma-separated mixture weights; defaults to 0, 0.1, ..., 1.
    #[arg(long, value_delimiter = ',')]
    pub k: Option<Vec<f64>>,
    /// Sentences to paraphrase; defaults to `eval_inputs`.
    #[arg(long)]
    pub inputs: Option<PathBuf>,
    /// Reference paraphrases; defaults to `eval_refs`.
    #[arg(long)]
    pub refs: Option<PathBuf>,
    /// Base RNG seed shared by every weight's searches.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Sampling steps per sentence.
    #[arg(long)]
    pub steps: Option<usize>,
    /// Worker threads; 0 means one per core.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Sweep only the first N input sentences.
    #[arg(long)]
    pub limit: Option<usize>,
    /// Report directory.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Also save every weight's trajectories for audit.
    #[arg(long)]
    pub save_trajs: bool,
}

/// Sweep the surrogate mixture weight over a grid for each requested
/// kind. Writes one full CSV per kind plus four cross-kind tables
/// (`correlation_bleu.csv`, `correlation_ibleu.csv`,
/// `trajectory_length.csv`, `escapes.csv`) with one row per weight and
/// one column per kind. Every kind and weight reuses the same seeds, so
/// rows differ only by the acceptance objective.
pub fn cmd_sweep(cfg: &PipelineConfig, opts: &SweepOpts) -> Result<String> {
    let mut sa = cfg.sa.clone();
    if let Some(seed) = opts.seed {
        sa.seed = seed;
    }
    if let Some(steps) = opts.steps {
        sa.steps = steps;
    }
    let kinds = opts.kinds.clone().unwrap_or_else(|| {
        vec![SurrogateKind::Value, SurrogateKind::MaxValue, SurrogateKind::S2s]
    });
    if kinds.is_empty() {
        return Err(Error::Config("sweep needs at least one surrogate kind".into()));
    }
    let out_dir = opts.out_dir.clone().unwrap_or_else(|| cfg.reports_dir());
    let sweep_cfg = SweepConfig {
        k_grid: opts.k.clone().unwrap_or_else(default_k_grid),
        alpha: cfg.alpha,
        d: cfg.d,
        jobs: opts.jobs.unwrap_or(cfg.jobs),
        traj_dir: opts.save_trajs.then(|| out_dir.join("trajs")),
    };

    let models = load_models(cfg)?;
    let inputs_path = opts.inputs.clone().unwrap_or_else(|| cfg.eval_inputs.clone());
    let refs_path = opts.refs.clone().unwrap_or_else(|| cfg.eval_refs.clone());
    let mut inputs = load_sentences(&inputs_path, &models.vocab)?;
    let mut refs = load_sentences(&refs_path, &models.vocab)?;
    if let Some(n) = opts.limit {
        inputs.truncate(n);
        refs.truncate(n);
    }
    let base = BaseObjective::new(&models, cfg.objective)?;

    fs::create_dir_all(&out_dir).map_err(|e| Error::io(&out_dir, e))?;
    let mut reports: Vec<SweepReport> = Vec::with_capacity(kinds.len());
    for &kind in &kinds {
        let holder = load_surrogate(&models, kind, &cfg.model_path(kind))?;
        let report = match &holder {
            SurrogateHolder::Regressor(r) => {
                weight_sweep(&inputs, &refs, &base, &sa, r, kind, &sweep_cfg)?
            }
            SurrogateHolder::Emission(e) => {
                weight_sweep(&inputs, &refs, &base, &sa, e, kind, &sweep_cfg)?
            }
        };
        report.write_csv(out_dir.join(format!("sweep_{kind}.csv")))?;
        reports.push(report);
    }

    let tables: [(&str, fn(&SweepRow) -> f64); 4] = [
        ("correlation_bleu.csv", |r| r.spearman_bleu),
        ("correlation_ibleu.csv", |r| r.spearman_ibleu),
        ("trajectory_length.csv", |r| r.traj_len_per100),
        ("escapes.csv", |r| r.escapes_per100),
    ];
    for (name, field) in tables {
        write_cross_kind(&out_dir.join(name), &reports, field)?;
    }

    let kind_list: Vec<String> = kinds.iter().map(|k| k.to_string()).collect();
    Ok(format!(
        "sweep ok kinds={} weights={} inputs={} seed={} out_dir={}",
        kind_list.join(","),
        sweep_cfg.k_grid.len(),
        inputs.len(),
        sa.seed,
        out_dir.display()
    ))
}

// One diagnostic across kinds: rows are grid weights, columns are the
// swept surrogate kinds.
fn write_cross_kind(
    path: &Path,
    reports: &[SweepReport],
    field: fn(&SweepRow) -> f64,
) -> Result<()> {
    let mut out = String::from("k");
    for report in reports {
        write!(out, ",{}", report.kind).expect("string write");
    }
    out.push('\n');
    for i in 0..reports[0].rows.len() {
        write!(out, "{}", reports[0].rows[i].k).expect("string write");
        for report in reports {
            write!(out, ",{}", field(&report.rows[i])).expect("string write");
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
