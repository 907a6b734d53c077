//! `datspeech` command-line front end.
//!
//! Settings come from built-in defaults, then an optional TOML `--config`
//! file, then command-line flags; later sources win.

mod config;

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use datspeech::datapipe::{
    drop_tail, parse_transcript, read_manifest, slice_segment, write_cut_list, write_manifest, Example, ExclusionList,
    Manifest, SegmentRule, SpeechSegment, Split, Task,
};
use datspeech::evalkit::{evaluate, export_embeddings, gender_probe};
use datspeech::optim::RampShape;
use datspeech::synthgen::generate_manifest;
use datspeech::trainer::{load_checkpoint, save_checkpoint, Checkpoint, Mode, Trainer};
use datspeech::util::write_atomic;
use serde::Serialize;

use config::RunConfig;

#[derive(Parser, Debug)]
#[command(name = "datspeech", version, about = "Gender-adversarial training for speech-based mental-health classifiers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
struct Common {
    /// TOML config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed for every source of randomness.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for evaluation.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Group transcript utterances into segments and write cut lists.
    Segment(SegmentArgs),
    /// Generate a synthetic embedding manifest.
    Synth(SynthArgs),
    /// Train a model from a manifest and write a checkpoint.
    Train(TrainArgs),
    /// Evaluate a checkpoint and write a metrics report.
    Eval(EvalArgs),
    /// Measure linearly recoverable gender information in representations.
    Probe(ModelInputArgs),
    /// Export encoder representations as CSV.
    Export(ModelInputArgs),
}

#[derive(Args, Debug)]
struct SegmentArgs {
    #[command(flatten)]
    common: Common,
    /// Transcript CSV files; the interview id is the file stem without `_TRANSCRIPT`.
    #[arg(required = true)]
    transcripts: Vec<PathBuf>,
    /// Output directory for cut lists (and WAV slices).
    #[arg(long)]
    out: PathBuf,
    /// CSV `interview_id,start_time` of utterances to discard.
    #[arg(long)]
    exclusions: Option<PathBuf>,
    /// Directory holding `<id>_AUDIO.wav` or `<id>.wav`; slices are written when given.
    #[arg(long)]
    audio_dir: Option<PathBuf>,
    /// Trailing utterances dropped per interview.
    #[arg(long)]
    drop_tail: Option<usize>,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long, value_enum)]
    task: Option<TaskArg>,
    #[arg(long, value_enum)]
    split: Option<SplitArg>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[command(flatten)]
    common: Common,
    /// Input manifest (JSON lines).
    manifest: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long, value_enum)]
    task: Option<TaskArg>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long, value_enum)]
    lambda_ramp: Option<RampArg>,
    /// Records used for training.
    #[arg(long, value_enum, default_value = "train")]
    split: SplitFilter,
}

#[derive(Args, Debug)]
struct ModelInputArgs {
    #[command(flatten)]
    common: Common,
    checkpoint: PathBuf,
    manifest: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Records to use.
    #[arg(long, value_enum, default_value = "all")]
    split: SplitFilter,
    /// Use the live weights instead of the EMA shadow.
    #[arg(long)]
    live: bool,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[command(flatten)]
    input: ModelInputArgs,
    /// Score participants by majority vote over their segments.
    #[arg(long)]
    participant_vote: bool,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum ModeArg {
    Finetune,
    Dat,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum TaskArg {
    Depression,
    Ptsd,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum SplitArg {
    Train,
    Test,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum SplitFilter {
    Train,
    Test,
    All,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum RampArg {
    Linear,
    Sigmoid,
}

impl From<TaskArg> for Task {
    fn from(t: TaskArg) -> Task {
        match t {
            TaskArg::Depression => Task::Depression,
            TaskArg::Ptsd => Task::Ptsd,
        }
    }
}

impl SplitFilter {
    fn keeps(self, ex: &Example) -> bool {
        match self {
            SplitFilter::All => true,
            SplitFilter::Train => ex.split == Split::Train,
            SplitFilter::Test => ex.split == Split::Test,
        }
    }
}

/// Failure with its exit status: 1 for bad input, 2 for runtime trouble.
#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl From<datspeech::Error> for Failure {
    fn from(e: datspeech::Error) -> Self {
        Failure {
            code: if e.is_validation() { 1 } else { 2 },
            message: e.to_string(),
        }
    }
}

impl From<config::ConfigError> for Failure {
    fn from(e: config::ConfigError) -> Self {
        Failure {
            code: 1,
            message: e.to_string(),
        }
    }
}

type CliResult<T> = Result<T, Failure>;

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure {
        code: 2,
        message: format!("{}: {e}", path.display()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn load_config(common: &Common) -> CliResult<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.set_seed(seed);
    }
    if let Some(t) = common.threads {
        cfg.eval.threads = t;
    }
    Ok(cfg)
}

/// Writes `<out>.config.json` next to an artifact.
fn write_sidecar<T: Serialize>(out: &Path, command: &str, inputs: &[&Path], effective: &T) -> CliResult<()> {
    #[derive(Serialize)]
    struct Sidecar<'a, T> {
        command: &'a str,
        inputs: Vec<String>,
        config: &'a T,
    }
    let sidecar = Sidecar {
        command,
        inputs: inputs.iter().map(|p| p.display().to_string()).collect(),
        config: effective,
    };
    let mut text = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
    text.push('\n');
    write_atomic(&sidecar_path(out), text.as_bytes())?;
    Ok(())
}

fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".config.json");
    PathBuf::from(s)
}

fn read_manifest_file(path: &Path) -> CliResult<Manifest> {
    let file = File::open(path).map_err(|e| io_failure(path, e))?;
    read_manifest(BufReader::new(file)).map_err(|e| {
        let mut f = Failure::from(e);
        f.message = format!("{}: {}", path.display(), f.message);
        f
    })
}

fn selected(manifest: Manifest, filter: SplitFilter) -> Vec<Example> {
    manifest.examples.into_iter().filter(|e| filter.keeps(e)).collect()
}

fn run(command: Command) -> CliResult<()> {
    match command {
        Command::Segment(a) => run_segment(a),
        Command::Synth(a) => run_synth(a),
        Command::Train(a) => run_train(a),
        Command::Eval(a) => run_eval(a),
        Command::Probe(a) => run_probe(a),
        Command::Export(a) => run_export(a),
    }
}

fn interview_id(path: &Path) -> String {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    stem.strip_suffix("_TRANSCRIPT").map(str::to_string).unwrap_or(stem)
}

fn run_segment(a: SegmentArgs) -> CliResult<()> {
    let mut cfg = load_config(&a.common)?;
    if let Some(n) = a.drop_tail {
        cfg.segment.drop_tail = n;
    }
    cfg.validate()?;
    let rule = SegmentRule {
        max_seconds: cfg.segment.max_seconds,
        max_members: cfg.segment.max_members,
    };
    let exclusions = match &a.exclusions {
        Some(p) => ExclusionList::parse(File::open(p).map_err(|e| io_failure(p, e))?)?,
        None => ExclusionList::default(),
    };
    std::fs::create_dir_all(&a.out).map_err(|e| io_failure(&a.out, e))?;

    // Parse and segment everything before writing, so bad input leaves no output.
    let mut plans: Vec<(String, Vec<SpeechSegment>)> = Vec::new();
    for path in &a.transcripts {
        let id = interview_id(path);
        let file = File::open(path).map_err(|e| io_failure(path, e))?;
        let utts = parse_transcript(file, &id).map_err(|e| {
            let mut f = Failure::from(e);
            f.message = format!("{}: {}", path.display(), f.message);
            f
        })?;
        let utts = drop_tail(&exclusions.apply(utts), cfg.segment.drop_tail);
        plans.push((id, datspeech::datapipe::segment(&utts, rule)?));
    }

    for (id, segments) in &plans {
        let mut buf = Vec::new();
        let entries: Vec<_> = segments.iter().map(SpeechSegment::cut_entry).collect();
        write_cut_list(&mut buf, &entries)?;
        let out = a.out.join(format!("{id}.cuts.jsonl"));
        write_atomic(&out, &buf)?;
        if let Some(dir) = &a.audio_dir {
            let wav_path = [format!("{id}_AUDIO.wav"), format!("{id}.wav")]
                .into_iter()
                .map(|name| dir.join(name))
                .find(|p| p.exists())
                .ok_or_else(|| Failure {
                    code: 2,
                    message: format!("no audio for interview {id} in {}", dir.display()),
                })?;
            let wav = std::fs::read(&wav_path).map_err(|e| io_failure(&wav_path, e))?;
            let seg_dir = a.out.join(id);
            std::fs::create_dir_all(&seg_dir).map_err(|e| io_failure(&seg_dir, e))?;
            for s in segments {
                write_atomic(&seg_dir.join(format!("{:04}.wav", s.ordinal)), &slice_segment(&wav, s)?)?;
            }
        }
        eprintln!("{id}: {} segment(s)", segments.len());
    }
    let inputs: Vec<&Path> = a.transcripts.iter().map(PathBuf::as_path).collect();
    write_sidecar(&a.out.join("segments"), "segment", &inputs, &cfg)
}

fn run_synth(a: SynthArgs) -> CliResult<()> {
    let mut cfg = load_config(&a.common)?;
    let s = &mut cfg.synth;
    if let Some(n) = a.n {
        s.n = n;
    }
    if let Some(d) = a.dim {
        s.dim = d;
    }
    if let Some(t) = a.task {
        s.task = t.into();
    }
    if let Some(split) = a.split {
        s.split = match split {
            SplitArg::Train => Split::Train,
            SplitArg::Test => Split::Test,
        };
    }
    cfg.validate()?;
    let manifest = generate_manifest(&cfg.synth)?;
    let mut buf = Vec::new();
    write_manifest(&mut buf, &manifest)?;
    write_atomic(&a.out, &buf)?;
    write_sidecar(&a.out, "synth", &[], &cfg)?;
    eprintln!("wrote {} examples to {}", manifest.examples.len(), a.out.display());
    Ok(())
}

fn run_train(a: TrainArgs) -> CliResult<()> {
    let mut cfg = load_config(&a.common)?;
    let t = &mut cfg.train;
    if let Some(m) = a.mode {
        t.mode = match m {
            ModeArg::Finetune => Mode::Finetune,
            ModeArg::Dat => Mode::Dat,
        };
    }
    if let Some(e) = a.epochs {
        t.epochs = e;
    }
    if let Some(b) = a.batch {
        t.batch_size = b;
    }
    if let Some(lr) = a.lr {
        t.lr = lr;
    }
    if let Some(r) = a.lambda_ramp {
        t.schedules.lambda_ramp = match r {
            RampArg::Linear => RampShape::Linear,
            RampArg::Sigmoid => RampShape::Sigmoid,
        };
    }
    let manifest = read_manifest_file(&a.manifest)?;
    if let Some(header) = manifest.header {
        if let Some(flag) = a.task {
            let flag: Task = flag.into();
            if flag != header.task {
                return Err(Failure {
                    code: 1,
                    message: format!("--task {flag:?} does not match manifest task {:?}", header.task),
                });
            }
        }
        cfg.train.task = header.task;
        cfg.train.model.input_dim = header.dim;
    }
    cfg.validate()?;
    let examples = selected(manifest, a.split);

    let mut trainer = Trainer::new(cfg.train.clone(), &examples)?;
    let total = trainer.total_steps();
    eprintln!("training {:?} on {} examples for {total} steps", cfg.train.mode, examples.len());
    let report_every = (total / 10).max(1);
    while !trainer.is_done() {
        let rec = trainer.step_once()?;
        if (rec.step + 1) % report_every == 0 {
            eprintln!(
                "step {}/{total}: l_mental {:.4} l_dis {:.4} lambda {:.4}",
                rec.step + 1,
                rec.loss.l_mental,
                rec.loss.l_dis,
                rec.loss.lambda
            );
        }
    }
    let outcome = trainer.run()?;

    #[derive(Serialize)]
    struct Trace<'a> {
        epochs: &'a [datspeech::trainer::EpochTrace],
        steps: &'a [datspeech::trainer::StepRecord],
    }
    let mut trace = serde_json::to_string(&Trace {
        epochs: &outcome.epochs,
        steps: &outcome.steps,
    })
    .expect("trace serializes");
    trace.push('\n');
    save_checkpoint(&outcome.checkpoint, &a.out)?;
    write_atomic(&with_suffix(&a.out, ".trace.json"), trace.as_bytes())?;
    write_sidecar(&a.out, "train", &[&a.manifest], &cfg)?;
    eprintln!("wrote checkpoint to {}", a.out.display());
    Ok(())
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

struct Loaded {
    cfg: RunConfig,
    checkpoint: Checkpoint,
    examples: Vec<Example>,
}

fn load_inputs(a: &ModelInputArgs) -> CliResult<Loaded> {
    let cfg = load_config(&a.common)?;
    cfg.validate()?;
    let checkpoint = load_checkpoint(&a.checkpoint)?;
    let manifest = read_manifest_file(&a.manifest)?;
    Ok(Loaded {
        cfg,
        checkpoint,
        examples: selected(manifest, a.split),
    })
}

impl Loaded {
    fn params(&self, live: bool) -> &datspeech::model::ParamSet {
        if live {
            &self.checkpoint.live
        } else {
            &self.checkpoint.ema
        }
    }
}

fn run_eval(a: EvalArgs) -> CliResult<()> {
    let mut l = load_inputs(&a.input)?;
    if a.participant_vote {
        l.cfg.eval.participant_vote = true;
    }
    let model = &l.checkpoint.config.model;
    let report = evaluate(l.params(a.input.live), model, &l.examples, &l.cfg.eval)?;
    write_atomic(&a.input.out, report.to_json().as_bytes())?;
    write_sidecar(&a.input.out, "eval", &[&a.input.checkpoint, &a.input.manifest], &l.cfg)?;
    eprintln!(
        "F1 avg {:.4}, F1 gender avg {:.4}",
        report.overall.f1_avg, report.f1_gender_avg
    );
    Ok(())
}

fn run_probe(a: ModelInputArgs) -> CliResult<()> {
    let l = load_inputs(&a)?;
    let model = &l.checkpoint.config.model;
    let accuracy = gender_probe(l.params(a.live), model, &l.examples, &l.cfg.probe)?;
    let mut text = serde_json::to_string_pretty(&serde_json::json!({ "accuracy": accuracy, "examples": l.examples.len() }))
        .expect("probe result serializes");
    text.push('\n');
    write_atomic(&a.out, text.as_bytes())?;
    write_sidecar(&a.out, "probe", &[&a.checkpoint, &a.manifest], &l.cfg)?;
    println!("{accuracy}");
    Ok(())
}

fn run_export(a: ModelInputArgs) -> CliResult<()> {
    let l = load_inputs(&a)?;
    let model = &l.checkpoint.config.model;
    export_embeddings(l.params(a.live), model, &l.examples, &a.out)?;
    write_sidecar(&a.out, "export", &[&a.checkpoint, &a.manifest], &l.cfg)?;
    eprintln!("wrote {} rows to {}", l.examples.len(), a.out.display());
    Ok(())
}
