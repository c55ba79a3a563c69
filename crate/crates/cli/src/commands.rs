//! One function per subcommand. Each returns the files it read and wrote
//! plus a JSON tally, so the run driver can hash and report them.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use mtkit::augmentation::{back_translate, self_train, AugmentTally, IdentityTranslator};
use mtkit::corpus::{
    clean_pairs, enumerate_directions, reformat_records, table1, CharNgramDetector, DirectionRecord,
    FilterPolicy, PipelineTally, RecordFormat, ReformatTally,
};
use mtkit::lexicon::LexiconModel;
use mtkit::metrics::Category;
use mtkit::sampling::{chi2_divergence, Weights};
use mtkit::tokenizer::{default_reserved, train_subword, LanguageCorpus, WhitespaceCounter};
use mtkit::trainer::{average_checkpoints, Baselines, TrainMode};
use mtkit::{
    dro_worst_case, route, sample_schedule, temperature_distribution, AugmentationSpec,
    BeamConfig, CorpusManifest, Direction, DroConfig, GroupTable, LanguageTag, MetricReport,
    ModelRegistry, SentencePair, SubwordModel, TaskSuite, TrainConfig,
    TranslatorOracle,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::args::*;
use crate::error::CliError;

/// Per-invocation settings shared by all subcommands.
#[derive(Debug, Clone)]
pub struct Ctx {
    /// Relative paths are resolved against this directory.
    pub base: PathBuf,
    pub seed: u64,
    pub quiet: bool,
}

impl Ctx {
    pub fn new(seed: u64, quiet: bool) -> Self {
        Ctx {
            base: PathBuf::new(),
            seed,
            quiet,
        }
    }

    pub fn path(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    fn note(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct StageOutcome {
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub tally: Value,
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::at(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    serde_json::from_str(&read_text(path)?).map_err(|e| CliError::at(path, e))
}

fn create(path: &Path) -> Result<fs::File, CliError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| CliError::at(parent, e))?;
    }
    fs::File::create(path).map_err(|e| CliError::at(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    create(path)?
        .write_all(text.as_bytes())
        .map_err(|e| CliError::at(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    write_text(path, &(serde_json::to_string_pretty(value)? + "\n"))
}

fn write_lines<'a>(path: &Path, lines: impl IntoIterator<Item = &'a str>) -> Result<(), CliError> {
    let mut text = String::new();
    for l in lines {
        text.push_str(l);
        text.push('\n');
    }
    write_text(path, &text)
}

/// Non-blank lines, trimmed.
fn read_mono(path: &Path) -> Result<Vec<String>, CliError> {
    Ok(read_text(path)?
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(String::from)
        .collect())
}

fn read_pairs(path: &Path) -> Result<Vec<SentencePair>, CliError> {
    read_text(path)?
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| CliError::at(path, format!("line {}: {e}", i + 1))))
        .collect()
}

fn load_tokenizer(path: &Path) -> Result<SubwordModel, CliError> {
    SubwordModel::load(path).map_err(|e| CliError::at(path, e))
}

fn load_manifest(path: &Path) -> Result<CorpusManifest, CliError> {
    CorpusManifest::load(path).map_err(CliError::from)
}

pub fn dispatch(cmd: &Command, ctx: &Ctx) -> Result<StageOutcome, CliError> {
    match cmd {
        Command::Preprocess(a) => preprocess(a, ctx),
        Command::TrainTokenizer(a) => train_tokenizer(a, ctx),
        Command::Sample(a) => sample(a, ctx),
        Command::Augment(a) => augment(a, ctx),
        Command::Route(a) => route_cmd(a, ctx),
        Command::TrainToy(a) => train_toy(a, ctx),
        Command::Decode(a) => decode(a, ctx),
        Command::Evaluate(a) => evaluate(a, ctx),
        Command::Run(_) => Err(CliError::usage("run manifests cannot nest `run` stages")),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PreprocessTally {
    pub files: u64,
    pub reformat: ReformatTally,
    pub pipeline: PipelineTally,
    pub directions: u64,
}

fn raw_inputs(dir: &Path) -> Result<Vec<(PathBuf, Direction, RecordFormat)>, CliError> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| CliError::at(dir, e))? {
        let path = entry.map_err(|e| CliError::at(dir, e))?.path();
        if !path.is_file() {
            continue;
        }
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        if name.starts_with('.') {
            continue;
        }
        let (stem, ext) = name
            .rsplit_once('.')
            .ok_or_else(|| CliError::at(&path, "expected `<src>-<tgt>.<format>`"))?;
        let direction: Direction = stem
            .parse()
            .map_err(|e| CliError::at(&path, format!("bad direction in file name: {e}")))?;
        let format = RecordFormat::from_extension(ext)
            .ok_or_else(|| CliError::at(&path, format!("unknown format `{ext}`")))?;
        out.push((path, direction, format));
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    if out.is_empty() {
        return Err(CliError::at(dir, "no input files"));
    }
    Ok(out)
}

fn langid_samples(dir: &Path) -> Result<BTreeMap<LanguageTag, Vec<String>>, CliError> {
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(dir).map_err(|e| CliError::at(dir, e))? {
        let path = entry.map_err(|e| CliError::at(dir, e))?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("txt") {
            continue;
        }
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
        let lang: LanguageTag = stem
            .parse()
            .map_err(|e| CliError::at(&path, format!("bad language in file name: {e}")))?;
        out.insert(lang, read_mono(&path)?);
    }
    Ok(out)
}

pub fn preprocess(a: &PreprocessArgs, ctx: &Ctx) -> Result<StageOutcome, CliError> {
    let in_dir = ctx.path(&a.input);
    let out_dir = ctx.path(&a.out);
    let manifest_path = ctx.path(&a.manifest);
    let mut inputs = Vec::new();

    let policy = match &a.policy {
        Some(p) => {
            let p = ctx.path(p);
            let policy: FilterPolicy = read_json(&p)?;
            inputs.push(p);
            policy
        }
        None => FilterPolicy::default(),
    };
    policy.validate().map_err(CliError::usage)?;

    let files = raw_inputs(&in_dir)?;
    let mut tally = PreprocessTally::default();
    let mut pairs = Vec::new();
    let mut directions = BTreeSet::new();
    for (path, dir, format) in &files {
        let reader = BufReader::new(fs::File::open(path).map_err(|e| CliError::at(path, e))?);
        let (got, t) = reformat_records(reader, *format, dir.src, dir.tgt)?;
        tally.files += 1;
        tally.reformat.emitted += t.emitted;
        tally.reformat.dropped_unpaired += t.dropped_unpaired;
        tally.reformat.dropped_encoding += t.dropped_encoding;
        tally.reformat.realigned += t.realigned;
        directions.extend(got.iter().map(SentencePair::direction));
        directions.insert(*dir);
        pairs.extend(got);
        inputs.push(path.clone());
    }

    let samples = match &a.langid_samples {
        Some(d) => {
            let d = ctx.path(d);
            let s = langid_samples(&d)?;
            inputs.push(d);
            s
        }
        None => {
            let mut s: BTreeMap<LanguageTag, Vec<String>> = BTreeMap::new();
            for p in &pairs {
                s.entry(p.source_lang).or_default().push(p.source_text.clone());
                s.entry(p.target_lang).or_default().push(p.target_text.clone());
            }
            s
        }
    };
    let detector = CharNgramDetector::train(&samples);

    let (kept, pipeline) = match &a.tokenizer {
        Some(t) => {
            let t = ctx.path(t);
            let model = load_tokenizer(&t)?;
            inputs.push(t);
            clean_pairs(pairs, &detector, &model, &policy)
        }
        None => clean_pairs(pairs, &detector, &WhitespaceCounter, &policy),
    };
    tally.pipeline = pipeline;

    let mut by_dir: BTreeMap<Direction, Vec<&SentencePair>> =
        directions.iter().map(|d| (*d, Vec::new())).collect();
    for p in &kept {
        by_dir.entry(p.direction()).or_default().push(p);
    }
    let mut manifest = CorpusManifest::default();
    let mut outputs = Vec::new();
    for (dir, records) in &by_dir {
        let shard = out_dir.join(format!("{dir}.jsonl"));
        let lines: Vec<String> = records.iter().map(|p| p.to_json_line()).collect();
        write_lines(&shard, lines.iter().map(String::as_str))?;
        let subsets = match &a.subsets {
            Some(s) => s.iter().copied().collect(),
            None => table1::subsets_for(*dir),
        };
        manifest.directions.insert(
            *dir,
            DirectionRecord {
                size: records.len() as u64,
                shards: vec![shard.clone()],
                subsets,
            },
        );
        outputs.push(shard);
    }
    manifest.validate(true)?;
    if let Some(parent) = manifest_path.parent() {
        fs::create_dir_all(parent).map_err(|e| CliError::at(parent, e))?;
    }
    manifest.save(&manifest_path)?;
    outputs.push(manifest_path);
    tally.directions = by_dir.len() as u64;
    ctx.note(format!(
        "preprocess: {} of {} pairs kept across {} directions",
        tally.pipeline.output, tally.pipeline.input, tally.directions
    ));
    Ok(StageOutcome {
        inputs,
        outputs,
        tally: serde_json::to_value(&tally)?,
    })
}

pub fn train_tokenizer(a: &TokenizerArgs, ctx: &Ctx) -> Result<StageOutcome, CliError> {
    let manifest_path = ctx.path(&a.manifest);
    let manifest = load_manifest(&manifest_path)?;
    let mut inputs = vec![manifest_path];
    let mut corpora: BTreeMap<LanguageTag, Vec<String>> = BTreeMap::new();
    for (dir, rec) in &manifest.directions {
        for shard in &rec.shards {
            for p in read_pairs(shard)? {
                corpora.entry(dir.src).or_default().push(p.source_text);
                corpora.entry(dir.tgt).or_default().push(p.target_text);
            }
            inputs.push(shard.clone());
        }
    }
    let lines: usize = corpora.values().map(Vec::len).sum();
    let corpora: BTreeMap<LanguageTag, LanguageCorpus> = corpora
        .into_iter()
        .map(|(l, lines)| (l, LanguageCorpus::new(lines)))
        .collect();
    let model = train_subword(&corpora, a.alpha, a.vocab_size, &default_reserved())?;
    let out = ctx.path(&a.out);
    write_text(&out, &model.to_json()?)?;
    ctx.note(format!(
        "train-tokenizer: {} entries from {lines} lines in {} languages",
        model.vocab_size(),
        corpora.len()
    ));
    Ok(StageOutcome {
        inputs,
        outputs: vec![out],
        tally: json!({
            "languages": corpora.len(),
            "lines": lines,
            "vocab_size": model.vocab_size(),
            "merges": model.merge_count(),
        }),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScheduleRecord {
    Weight {
        id: usize,
        direction: Direction,
        size: u64,
        weight: f64,
    },
    Batch {
        batch: usize,
        id: usize,
        direction: Direction,
    },
}

fn direction_values(path: &Path, dirs: &[Direction]) -> Result<Vec<f64>, CliError> {
    let map: BTreeMap<Direction, f64> = read_json(path)?;
    dirs.iter()
        .map(|d| {
            map.get(d)
                .copied()
                .ok_or_else(|| CliError::at(path, format!("no value for {d}")))
        })
        .collect()
}

pub fn sample(a: &SampleArgs, ctx: &Ctx) -> Result<StageOutcome, CliError> {
    let manifest_path = ctx.path(&a.manifest);
    let manifest = load_manifest(&manifest_path)?;
    let mut inputs = vec![manifest_path];
    let dirs: Vec<Direction> = match a.subset {
        Some(s) => enumerate_directions(&manifest, s)?,
        None => manifest.directions.keys().copied().collect(),
    };
    let sizes = manifest.sizes(&dirs);
    let reference = temperature_distribution(&sizes, a.tau)?;
    let mut tally = json!({
        "mode": match a.mode { SampleMode::Temperature => "temperature", SampleMode::Dro => "dro" },
        "directions": dirs.len(),
        "batches": a.batches,
        "tau": a.tau,
    });
    let weights: Box<dyn Weights> = match a.mode {
        SampleMode::Temperature => Box::new(reference),
        SampleMode::Dro => {
            let losses_path = a
                .losses
                .as_ref()
                .map(|p| ctx.path(p))
                .ok_or_else(|| CliError::usage("dro mode needs --losses"))?;
            let losses = direction_values(&losses_path, &dirs)?;
            inputs.push(losses_path);
            let mut cfg = DroConfig::new(a.rho, reference.probs.clone());
            tally["baselines_used"] = json!(a.baselines.is_some());
            if let Some(b) = &a.baselines {
                let b = ctx.path(b);
                cfg.baselines = direction_values(&b, &dirs)?;
                inputs.push(b);
            }
            let excess = cfg.excess(&losses)?;
            let w = dro_worst_case(&excess, &cfg)?;
            tally["rho"] = json!(a.rho);
            tally["divergence"] = json!(chi2_divergence(&w.q, &reference.probs)?);
            Box::new(w)
        }
    };
    let schedule = sample_schedule(weights.as_ref(), a.batches, ctx.seed)?;
    let mut lines = Vec::with_capacity(dirs.len() + schedule.len());
    for (id, d) in dirs.iter().enumerate() {
        lines.push(ScheduleRecord::Weight {
            id,
            direction: *d,
            size: sizes[id] as u64,
            weight: weights.probs()[id],
        });
    }
    for (batch, &id) in schedule.iter().enumerate() {
        lines.push(ScheduleRecord::Batch {
            batch,
            id,
            direction: dirs[id],
        });
    }
    let text: Vec<String> = lines
        .iter()
        .map(serde_json::to_string)
        .collect::<Result<_, _>>()?;
    let out = ctx.path(&a.out);
    write_lines(&out, text.iter().map(String::as_str))?;
    ctx.note(format!("sample: {} batches over {} directions", schedule.len(), dirs.len()));
    Ok(StageOutcome {
        inputs,
        outputs: vec![out],
        tally,
    })
}

fn translator(spec: &str, ctx: &Ctx, inputs: &mut Vec<PathBuf>) -> Result<Box<dyn TranslatorOracle>, CliError> {
    if spec == "identity" {
        return Ok(Box::new(IdentityTranslator));
    }
    if let Some(p) = spec.strip_prefix("toy-model:") {
        let p = ctx.path(Path::new(p));
        let model = LexiconModel::load(&p).map_err(|e| CliError::at(&p, e))?;
        inputs.push(p);
        return Ok(Box::new(model));
    }
    Err(CliError::usage(format!(
        "unknown translator `{spec}` (expected identity or toy-model:<path>)"
    )))
}

pub fn augment(a: &AugmentArgs, ctx: &Ctx) -> Result<StageOutcome, CliError> {
    let mono_path = ctx.path(&a.mono);
    let mono = read_mono(&mono_path)?;
    let mut inputs = vec![mono_path];
    let oracle = translator(&a.translator, ctx, &mut inputs)?;
    let mut spec = AugmentationSpec {
        tag_token: a.tag.clone(),
        seed: ctx.seed,
        ..Default::default()
    };
    if let Some(cap) = a.cap {
        spec.english_centric_cap = cap;
        spec.non_english_cap = cap;
    }
    let (pairs, tally): (Vec<SentencePair>, AugmentTally) = match a.mode {
        AugmentMode::Bt => back_translate(&mono, a.tgt, a.src, oracle.as_ref(), &spec)?,
        AugmentMode::St => self_train(&mono, a.src, a.tgt, oracle.as_ref(), &spec)?,
    };
    let out = ctx.path(&a.out);
    let lines: Vec<String> = pairs.iter().map(SentencePair::to_json_line).collect();
    write_lines(&out, lines.iter().map(String::as_str))?;
    ctx.note(format!(
        "augment: {} of {} lines emitted (cap {}, {} dropped)",
        tally.emitted, tally.input, tally.cap, tally.dropped
    ));
    Ok(StageOutcome {
        inputs,
        outputs: vec![out],
        tally: serde_json::to_value(tally)?,
    })
}

pub fn route_cmd(a: &RouteArgs, ctx: &Ctx) -> Result<StageOutcome, CliError> {
    let reg_path = ctx.path(&a.registry);
    let registry: ModelRegistry = read_json(&reg_path)?;
    let mut inputs = vec![reg_path];
    let table = match &a.groups {
        Some(g) => {
            let g = ctx.path(g);
            let t = GroupTable::from_json(&read_text(&g)?).map_err(|e| CliError::at(&g, e))?;
            inputs.push(g);
            t
        }
        None => GroupTable::default(),
    };
    let group = table.inference_group(a.target)?;
    let model = route(&table, a.target, &registry)?;
    let decision = json!({ "target": a.target, "group": group, "model": model });
    let mut outputs = Vec::new();
    if let Some(o) = &a.out {
        let o = ctx.path(o);
        write_json(&o, &decision)?;
        outputs.push(o);
    }
    if !ctx.quiet {
        println!("{model}");
    }
    Ok(StageOutcome {
        inputs,
        outputs,
        tally: decision,
    })
}

fn history_csv(suite: &TaskSuite, history: &[mtkit::trainer::HistoryRow]) -> String {
    let names: Vec<&str> = suite.tasks.iter().map(|t| t.name.as_str()).collect();
    let mut out = String::from("step,stage");
    for n in &names {
        out.push_str(&format!(",loss_{n}"));
    }
    for n in &names {
        out.push_str(&format!(",weight_{n}"));
    }
    out.push('\n');
    for row in history {
        let stage = serde_json::to_value(row.stage).ok();
        let stage = stage.as_ref().and_then(Value::as_str).unwrap_or("");
        out.push_str(&format!("{},{stage}", row.step));
        for v in row.losses.iter().chain(&row.weights) {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    out
}

fn max_and_spread(losses: &[f64]) -> (f64, f64) {
    let max = losses.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = losses.iter().copied().fold(f64::INFINITY, f64::min);
    (max, max - min)
}

pub fn train_toy(a: &ToyArgs, ctx: &Ctx) -> Result<StageOutcome, CliError> {
    let suite_path = ctx.path(&a.suite);
    let suite: TaskSuite = read_json(&suite_path)?;
    let mut inputs = vec![suite_path];
    let baselines = match &a.baselines {
        Some(b) => {
            let b = ctx.path(b);
            let v: Vec<f64> = read_json(&b)?;
            inputs.push(b);
            Baselines::Fixed(v)
        }
        None => Baselines::Zero,
    };
    let config = TrainConfig {
        mode: match a.mode {
            ToyMode::Erm => TrainMode::ErmTemperature,
            ToyMode::Dro => TrainMode::Dro,
        },
        tau: a.tau,
        rho: a.rho,
        steps: a.steps,
        lr: a.lr,
        seed: ctx.seed,
        checkpoint_every: a.checkpoint_every,
        baselines,
        ..Default::default()
    };
    let outcome = mtkit::train(&suite, &config)?;
    let k = a.average.min(outcome.checkpoints.len()).max(1);
    let averaged = average_checkpoints(&outcome.checkpoints, k, &suite)?;

    let dir = ctx.path(&a.out);
    let history = dir.join("history.csv");
    write_text(&history, &history_csv(&suite, &outcome.history))?;
    let mut outputs = vec![history];
    for c in &outcome.checkpoints {
        let p = dir.join("checkpoints").join(format!("step_{:06}.json", c.step));
        write_json(&p, c)?;
        outputs.push(p);
    }
    let fin = dir.join("final.json");
    write_json(&fin, &outcome.final_checkpoint)?;
    let avg = dir.join("averaged.json");
    write_json(&avg, &averaged)?;
    outputs.extend([fin, avg]);

    let (max, spread) = max_and_spread(&outcome.final_checkpoint.per_task_loss);
    let (avg_max, _) = max_and_spread(&averaged.per_task_loss);
    ctx.note(format!("train-toy: {} steps, final max task loss {max:.6}", a.steps));
    Ok(StageOutcome {
        inputs,
        outputs,
        tally: json!({
            "mode": match a.mode { ToyMode::Erm => "erm", ToyMode::Dro => "dro" },
            "steps": a.steps,
            "final_losses": outcome.final_checkpoint.per_task_loss,
            "final_max_loss": max,
            "final_spread": spread,
            "averaged_k": k,
            "averaged_max_loss": avg_max,
        }),
    })
}

pub fn decode(a: &DecodeArgs, ctx: &Ctx) -> Result<StageOutcome, CliError> {
    let model_path = ctx.path(&a.model);
    let model = LexiconModel::load(&model_path).map_err(|e| CliError::at(&model_path, e))?;
    let input = ctx.path(&a.input);
    let jobs: Vec<(String, Direction)> = match a.direction {
        Some(d) => read_text(&input)?.lines().map(|l| (l.to_string(), d)).collect(),
        None => read_pairs(&input)?
            .into_iter()
            .map(|p| (p.source_text.clone(), p.direction()))
            .collect(),
    };
    let config = BeamConfig {
        beam: a.beam,
        lenpen: a.lenpen,
        max_len: a.max_len,
        stop: a.stop,
    };
    let hyps: Vec<String> = jobs
        .par_iter()
        .map(|(text, d)| model.translate_beam(text, *d, &config))
        .collect::<Result<_, _>>()?;
    let out = ctx.path(&a.out);
    write_lines(&out, hyps.iter().map(String::as_str))?;
    let empty = hyps.iter().filter(|h| h.is_empty()).count();
    ctx.note(format!("decode: {} sentences, beam {}", hyps.len(), a.beam));
    Ok(StageOutcome {
        inputs: vec![model_path, input],
        outputs: vec![out],
        tally: json!({ "sentences": hyps.len(), "empty": empty, "beam": a.beam, "lenpen": a.lenpen }),
    })
}

fn aligned_lines(path: &Path) -> Result<Vec<String>, CliError> {
    Ok(read_text(path)?.lines().map(String::from).collect())
}

pub fn evaluate(a: &EvaluateArgs, ctx: &Ctx) -> Result<StageOutcome, CliError> {
    let (hp, rp, tp, dp) = (
        ctx.path(&a.hyp),
        ctx.path(&a.reference),
        ctx.path(&a.tokenizer),
        ctx.path(&a.directions),
    );
    let hyps = aligned_lines(&hp)?;
    let refs = aligned_lines(&rp)?;
    let dirs = aligned_lines(&dp)?;
    if hyps.len() != refs.len() || refs.len() != dirs.len() {
        return Err(CliError::data(format!(
            "line counts differ: {} hypotheses, {} references, {} directions",
            hyps.len(),
            refs.len(),
            dirs.len()
        )));
    }
    let tokenizer = load_tokenizer(&tp)?;
    let mut corpora: BTreeMap<Direction, (Vec<String>, Vec<String>)> = BTreeMap::new();
    for (i, ((h, r), d)) in hyps.into_iter().zip(refs).zip(&dirs).enumerate() {
        let d: Direction = d
            .trim()
            .parse()
            .map_err(|e| CliError::at(&dp, format!("line {}: {e}", i + 1)))?;
        let entry = corpora.entry(d).or_default();
        entry.0.push(h);
        entry.1.push(r);
    }
    let report = MetricReport::evaluate(&corpora, &tokenizer)?;
    let out = ctx.path(&a.report);
    write_json(&out, &report)?;
    ctx.note(format!(
        "evaluate: {} directions, BLEU {:.2}, ChrF++ {:.2}",
        report.per_direction.len(),
        report.bleu,
        report.chrfpp
    ));
    let categories: BTreeMap<String, Value> = Category::ALL
        .iter()
        .filter_map(|c| {
            report
                .category_means
                .get(c)
                .map(|s| (c.name().to_string(), json!({ "bleu": s.bleu, "chrfpp": s.chrfpp })))
        })
        .collect();
    Ok(StageOutcome {
        inputs: vec![hp, rp, tp, dp],
        outputs: vec![out],
        tally: json!({ "directions": report.per_direction.len(), "categories": categories }),
    })
}
