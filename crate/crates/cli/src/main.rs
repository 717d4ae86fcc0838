use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use cinecam::compiler::{compile, CompileInputs, SimInstruction};
use cinecam::config::Config;
use cinecam::dataset::{balance_report, read_records_path, write_records, DatasetRecord, InstructionWire, Subset, SubjectWire};
use cinecam::genmetrics::{clip_score, featurize, fid, manifold_scores, read_features, ClipScoreMode, ManifoldParams, Standardizer};
use cinecam::objectives::{init_loss, rel_loss, speed_loss};
use cinecam::pose::{default_boxes, SubjectState, SubjectTrajectory, Vec3};
use cinecam::scl::{
    describe, enumerate_scds, format_scd, parse_scd, CameraAngleSpec, EasingKind, Elevation, EndpointSpec, EnumerationSpec,
    FramingCell, MovementKind, MovementSpec, ScdRecord, ShotType, Side,
};
use cinecam::simulator::{check_constraints, generate_subject_motion, simulate, MotionKind, SubjectMotionModel};
use clap::{Args, Parser, Subcommand};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Camera trajectory dataset pipeline: enumerate shot descriptions, compile
/// them into instructions, simulate trajectories, generate datasets and
/// evaluate generated sets against reference sets.
#[derive(Parser, Debug)]
#[command(name = "cinecam", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// TOML configuration file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (0 picks the number of cores).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    /// Frames per shot.
    #[arg(long, global = true)]
    frames: Option<u32>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write every shot description of the selected universe, one per line.
    Enumerate(EnumerateArgs),
    /// Compile shot descriptions into simulation instructions.
    Compile(CompileArgs),
    /// Simulate compiled instructions into dataset records.
    Simulate(SimulateArgs),
    /// Generate a balanced static/dynamic dataset.
    Generate(GenerateArgs),
    /// Compare a generated dataset with a reference dataset.
    Evaluate(EvaluateArgs),
}

#[derive(Args, Debug)]
struct EnumerateArgs {
    /// Also enumerate explicit end endpoints.
    #[arg(long)]
    include_end: bool,
    /// Movement kinds to keep (comma separated).
    #[arg(long, value_delimiter = ',', value_parser = parse_token::<MovementKind>)]
    kinds: Vec<MovementKind>,
    /// Easing curves to keep (comma separated).
    #[arg(long, value_delimiter = ',', value_parser = parse_token::<EasingKind>)]
    easings: Vec<EasingKind>,
    /// Output file (stdout when absent).
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CompileArgs {
    /// File with one shot description per line; blank lines and lines
    /// starting with '#' are skipped.
    input: PathBuf,
    /// JSON subject: one {center, dims, facing} object for a stationary
    /// subject or an array with one object per frame.
    #[arg(long)]
    subject: Option<PathBuf>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Output of `compile`.
    input: PathBuf,
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Print constraint residuals of every record.
    #[arg(long)]
    check: bool,
    /// Replace the acceleration limit of every instruction that has one.
    #[arg(long)]
    a_max: Option<f64>,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[arg(long)]
    count: usize,
    /// Share of records with a stationary subject.
    #[arg(long, default_value_t = 0.5)]
    split: f64,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    /// Reference dataset.
    real: PathBuf,
    /// Generated dataset.
    gen: PathBuf,
    /// Neighborhood size of the manifold metrics (config value when absent).
    #[arg(long)]
    k: Option<usize>,
    /// Also report the embedding score; needs both embedding files.
    #[arg(long)]
    cs: bool,
    /// Trajectory embeddings, one row per generated record.
    #[arg(long)]
    traj_emb: Option<PathBuf>,
    /// Prompt embeddings, one row per generated record.
    #[arg(long)]
    text_emb: Option<PathBuf>,
    #[arg(long, default_value_t = 100.0)]
    cs_scale: f64,
}

fn parse_token<T: std::str::FromStr>(s: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    s.parse::<T>().map_err(|e| e.to_string())
}

enum Failure {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

fn usage(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Usage(e.into())
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> CmdResult {
    let mut cfg = match &cli.global.config {
        Some(path) => Config::load(path).map_err(usage)?,
        None => Config::default(),
    };
    if let Some(frames) = cli.global.frames {
        cfg.frames = frames;
    }
    cfg.validate().map_err(usage)?;
    if cli.global.jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.global.jobs)
            .build_global()
            .map_err(|e| Failure::Runtime(e.into()))?;
    }
    let seed = cli.global.seed;
    match cli.command {
        Command::Enumerate(a) => cmd_enumerate(a, &cfg),
        Command::Compile(a) => cmd_compile(a, &cfg, seed),
        Command::Simulate(a) => cmd_simulate(a, &cfg),
        Command::Generate(a) => cmd_generate(a, &cfg, seed),
        Command::Evaluate(a) => cmd_evaluate(a, &cfg),
    }
}

/// Independent stream per record so results do not depend on scheduling.
fn record_seed(seed: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng.next_u64()
}

/// Prints one line to stdout; a closed pipe ends output quietly.
fn emit(text: &str) -> anyhow::Result<()> {
    match writeln!(io::stdout().lock(), "{text}") {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(anyhow::Error::from(e).context("write failed")),
        _ => Ok(()),
    }
}

fn open_output(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("cannot create {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn cmd_enumerate(a: EnumerateArgs, cfg: &Config) -> CmdResult {
    let mut spec = EnumerationSpec {
        include_end: a.include_end,
        frame_count: cfg.frames,
        ..EnumerationSpec::default()
    };
    if !a.kinds.is_empty() {
        spec.kinds = a.kinds;
    }
    if !a.easings.is_empty() {
        spec.easings = a.easings;
    }
    let iter = enumerate_scds(&spec).map_err(usage)?;
    let mut out = open_output(a.output.as_deref())?;
    let mut n = 0usize;
    for scd in iter {
        writeln!(out, "{}", format_scd(&scd)).context("write failed")?;
        n += 1;
    }
    out.flush().context("write failed")?;
    log::info!("wrote {n} descriptions");
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct CompiledLine {
    id: String,
    scd: String,
    instruction: InstructionWire,
    subject: Vec<SubjectWire>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum SubjectSpec {
    Frames(Vec<SubjectWire>),
    Single(SubjectWire),
}

fn default_subject() -> SubjectState {
    SubjectState::upright(Vec3::new(0.0, 0.0, 0.85), Vec3::new(0.5, 0.3, 1.7), 0.0)
}

fn load_subject(path: Option<&Path>) -> Result<SubjectSpec, Failure> {
    let Some(path) = path else {
        return Ok(SubjectSpec::Single((&default_subject()).into()));
    };
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read subject file {}", path.display()))
        .map_err(usage)?;
    serde_json::from_str(&text)
        .with_context(|| format!("invalid subject file {}", path.display()))
        .map_err(usage)
}

fn subject_for(spec: &SubjectSpec, frames: usize) -> anyhow::Result<SubjectTrajectory> {
    let traj = match spec {
        SubjectSpec::Single(s) => SubjectTrajectory::stationary(s.into(), frames),
        SubjectSpec::Frames(v) => {
            if v.len() != frames {
                return Err(anyhow!("subject has {} frames, the shot needs {frames}", v.len()));
            }
            SubjectTrajectory::new(v.iter().map(Into::into).collect())?
        }
    };
    traj.first().validate()?;
    Ok(traj)
}

fn compile_with(scd: &ScdRecord, subject: &SubjectTrajectory, cfg: &Config, seed: u64) -> anyhow::Result<SimInstruction> {
    let (abox, vbox) = default_boxes(&subject.first().dims);
    let inputs = CompileInputs {
        abox: &abox,
        vbox: &vbox,
        config: cfg,
        seed,
    };
    Ok(compile(scd, subject, inputs)?)
}

fn cmd_compile(a: CompileArgs, cfg: &Config, seed: u64) -> CmdResult {
    let subject_spec = load_subject(a.subject.as_deref())?;
    let file = File::open(&a.input)
        .with_context(|| format!("cannot open {}", a.input.display()))
        .map_err(usage)?;
    let mut out = open_output(a.output.as_deref())?;
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let lineno = i + 1;
        let line = line.with_context(|| format!("line {lineno}: read failed"))?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let scd = parse_scd(text).map_err(|e| anyhow!("line {lineno}: {e}"))?;
        let subject = subject_for(&subject_spec, scd.movement.duration_frames as usize).map_err(|e| anyhow!("line {lineno}: {e}"))?;
        let instr = compile_with(&scd, &subject, cfg, record_seed(seed, lineno as u64)).map_err(|e| anyhow!("line {lineno}: {e}"))?;
        let rec = CompiledLine {
            id: format!("scd-{lineno:06}"),
            scd: format_scd(&scd),
            instruction: (&instr).into(),
            subject: subject.frames.iter().map(Into::into).collect(),
        };
        writeln!(out, "{}", serde_json::to_string(&rec).context("serialization failed")?).context("write failed")?;
    }
    out.flush().context("write failed")?;
    Ok(())
}

struct Pending {
    id: String,
    scd: ScdRecord,
    instruction: SimInstruction,
    subject: SubjectTrajectory,
}

fn read_compiled(path: &Path) -> Result<Vec<Pending>, Failure> {
    let file = File::open(path)
        .with_context(|| format!("cannot open {}", path.display()))
        .map_err(usage)?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let lineno = i + 1;
        let line = line.with_context(|| format!("line {lineno}: read failed"))?;
        if line.trim().is_empty() {
            continue;
        }
        let parse = || -> anyhow::Result<Pending> {
            let c: CompiledLine = serde_json::from_str(&line)?;
            let instruction = SimInstruction::try_from(&c.instruction).map_err(|e| anyhow!(e))?;
            instruction.validate()?;
            Ok(Pending {
                scd: parse_scd(&c.scd)?,
                subject: SubjectTrajectory::new(c.subject.iter().map(Into::into).collect())?,
                instruction,
                id: c.id,
            })
        };
        out.push(parse().map_err(|e| anyhow!("line {lineno}: {e:#}"))?);
    }
    Ok(out)
}

fn finish(p: &Pending, cfg: &Config) -> anyhow::Result<DatasetRecord> {
    let camera = simulate(&p.instruction, &p.subject, cfg)?;
    let rec = DatasetRecord {
        id: p.id.clone(),
        prompt: Some(describe(&p.scd)),
        scd: p.scd,
        instruction: p.instruction,
        subset: Subset::of(&p.subject),
        subject: p.subject.clone(),
        camera,
    };
    rec.validate().map_err(|e| anyhow!(e))?;
    Ok(rec)
}

fn cmd_simulate(a: SimulateArgs, cfg: &Config) -> CmdResult {
    if let Some(limit) = a.a_max {
        if !(limit >= 0.0 && limit.is_finite()) {
            return Err(usage(anyhow!("--a-max must be finite and non-negative")));
        }
    }
    let mut pending = read_compiled(&a.input)?;
    if let Some(limit) = a.a_max {
        for p in &mut pending {
            if p.instruction.constraints.max_acceleration.is_some() {
                p.instruction.constraints.max_acceleration = Some(limit);
            }
        }
    }
    let results: Vec<(String, anyhow::Result<DatasetRecord>)> =
        pending.par_iter().map(|p| (p.id.clone(), finish(p, cfg))).collect();

    let mut records = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for (id, r) in results {
        match r {
            Ok(rec) => records.push(rec),
            Err(e) => failures.push(format!("{id}: {e:#}")),
        }
    }
    records.sort_by(|x, y| x.id.cmp(&y.id));

    if a.check {
        for rec in &records {
            let rep = check_constraints(&rec.camera, &rec.subject, &rec.instruction.constraints, cfg).map_err(anyhow::Error::from)?;
            let mut line = format!("{} {}", rec.id, if rep.passed() { "ok" } else { "FAIL" });
            if let Some(d) = rep.location_drift {
                line.push_str(&format!(" location_drift={d:.3e}"));
            }
            if let Some(d) = rep.radius_deviation {
                line.push_str(&format!(" radius_deviation={d:.3e}"));
            }
            if let Some(f) = rep.visible_fraction {
                line.push_str(&format!(" visible={f:.4}"));
            }
            if let Some((acc, lim)) = rep.max_acceleration {
                line.push_str(&format!(" accel={acc:.3e}/{lim:.3e}"));
            }
            emit(&line)?;
        }
    }

    let mut out = open_output(a.output.as_deref())?;
    write_records(&records, &mut out).map_err(anyhow::Error::from)?;
    out.flush().context("write failed")?;

    if !failures.is_empty() {
        for f in &failures {
            eprintln!("infeasible {f}");
        }
        return Err(Failure::Runtime(anyhow!("{} of {} instructions failed", failures.len(), pending.len())));
    }
    Ok(())
}

fn pick<T: Copy>(rng: &mut ChaCha8Rng, items: &[T]) -> T {
    items[rng.gen_range(0..items.len())]
}

fn random_endpoint(rng: &mut ChaCha8Rng) -> EndpointSpec {
    EndpointSpec {
        shot: pick(rng, ShotType::ALL),
        angle: CameraAngleSpec {
            elevation: pick(rng, Elevation::ALL),
            side: pick(rng, Side::ALL),
        },
        framing: pick(rng, FramingCell::ALL),
    }
}

const GENERATE_ATTEMPTS: usize = 16;

fn generate_one(index: usize, subset: Subset, cfg: &Config, seed: u64) -> anyhow::Result<DatasetRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(record_seed(seed, index as u64));
    let frames = cfg.frames as usize;
    let mut last_err = None;
    for _ in 0..GENERATE_ATTEMPTS {
        let scd = ScdRecord {
            init: random_endpoint(&mut rng),
            end: None,
            movement: MovementSpec {
                kind: pick(&mut rng, MovementKind::ALL),
                easing: pick(&mut rng, EasingKind::ALL),
                duration_frames: cfg.frames,
            },
        };
        let dims = Vec3::new(rng.gen_range(0.3..0.8), rng.gen_range(0.2..0.5), rng.gen_range(1.2..2.0));
        let center = Vec3::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0), dims.z / 2.0);
        let start = SubjectState::upright(center, dims, rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI));
        let model = match subset {
            Subset::Static => SubjectMotionModel::stationary(start),
            Subset::Dynamic => SubjectMotionModel {
                kind: pick(&mut rng, &[MotionKind::LineWalk, MotionKind::TurnInPlace, MotionKind::ArcWalk]),
                start,
                speed: rng.gen_range(0.01..0.05),
                turn_rate: rng.gen_range(-0.04..0.04),
                jitter: 0.2,
                seed: rng.next_u64(),
            },
        };
        let compile_seed = rng.next_u64();
        let attempt = || -> anyhow::Result<DatasetRecord> {
            let subject = generate_subject_motion(&model, frames)?;
            if Subset::of(&subject) != subset {
                return Err(anyhow!("subject motion does not match the {} subset", subset.token()));
            }
            let instruction = compile_with(&scd, &subject, cfg, compile_seed)?;
            finish(
                &Pending {
                    id: format!("rec-{index:07}"),
                    scd,
                    instruction,
                    subject,
                },
                cfg,
            )
        };
        match attempt() {
            Ok(rec) => return Ok(rec),
            Err(e) => {
                log::debug!("record {index}: {} rejected: {e:#}", format_scd(&scd));
                last_err = Some(e);
            }
        }
    }
    Err(last_err.expect("at least one attempt").context(format!("record {index}: no feasible shot")))
}

fn cmd_generate(a: GenerateArgs, cfg: &Config, seed: u64) -> CmdResult {
    if !(0.0..=1.0).contains(&a.split) {
        return Err(usage(anyhow!("--split must lie in [0, 1]")));
    }
    let n_static = (a.count as f64 * a.split).round() as usize;
    let mut records = (0..a.count)
        .into_par_iter()
        .map(|i| {
            let subset = if i < n_static { Subset::Static } else { Subset::Dynamic };
            generate_one(i, subset, cfg, seed)
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    records.sort_by(|x, y| x.id.cmp(&y.id));

    let mut out = open_output(Some(&a.output))?;
    write_records(&records, &mut out).map_err(anyhow::Error::from)?;
    out.flush().context("write failed")?;

    let report = balance_report(&records);
    emit(&serde_json::to_string_pretty(&report).context("serialization failed")?)?;
    Ok(())
}

#[derive(Serialize)]
struct MeanLosses {
    pairs: usize,
    init: f64,
    rel: f64,
    speed: f64,
}

#[derive(Serialize)]
struct EvaluationReport {
    real: usize,
    gen: usize,
    fid: f64,
    precision: f64,
    recall: f64,
    density: f64,
    coverage: f64,
    clip_score: Option<f64>,
    losses: Option<MeanLosses>,
}

fn mean_losses(real: &[DatasetRecord], gen: &[DatasetRecord], cfg: &Config) -> anyhow::Result<Option<MeanLosses>> {
    let params = cfg.discrepancy();
    let by_id: std::collections::HashMap<&str, &DatasetRecord> = real.iter().map(|r| (r.id.as_str(), r)).collect();
    let pairs: Vec<(&DatasetRecord, &DatasetRecord)> = gen
        .iter()
        .filter_map(|g| by_id.get(g.id.as_str()).map(|r| (*r, g)))
        .filter(|(r, g)| r.camera.len() == g.camera.len() && r.camera.len() >= 2)
        .collect();
    if pairs.is_empty() {
        return Ok(None);
    }
    let mut sums = [0.0; 3];
    for (r, g) in &pairs {
        sums[0] += init_loss(&r.camera, &g.camera, &params)?;
        sums[1] += rel_loss(&r.camera, &g.camera, &params)?;
        sums[2] += speed_loss(&r.camera, &g.camera, &params)?;
    }
    let n = pairs.len() as f64;
    Ok(Some(MeanLosses {
        pairs: pairs.len(),
        init: sums[0] / n,
        rel: sums[1] / n,
        speed: sums[2] / n,
    }))
}

fn cmd_evaluate(a: EvaluateArgs, cfg: &Config) -> CmdResult {
    let embeddings = if a.cs {
        let (Some(t), Some(p)) = (&a.traj_emb, &a.text_emb) else {
            return Err(usage(anyhow!("--cs needs --traj-emb and --text-emb")));
        };
        for path in [t, p] {
            if !path.is_file() {
                return Err(usage(anyhow!("embedding file {} not found", path.display())));
            }
        }
        Some((read_features(t).map_err(usage)?, read_features(p).map_err(usage)?))
    } else {
        None
    };
    let load = |p: &Path| -> Result<Vec<DatasetRecord>, Failure> {
        if !p.is_file() {
            return Err(usage(anyhow!("dataset {} not found", p.display())));
        }
        Ok(read_records_path(p)
            .with_context(|| format!("reading {}", p.display()))?
            .records)
    };
    let real = load(&a.real)?;
    let gen = load(&a.gen)?;
    let features = |recs: &[DatasetRecord]| featurize(&recs.iter().map(|r| r.camera.clone()).collect::<Vec<_>>());
    let real_f = features(&real).map_err(anyhow::Error::from)?;
    let gen_f = features(&gen).map_err(anyhow::Error::from)?;
    let std = Standardizer::fit(&real_f).map_err(anyhow::Error::from)?;
    let real_f = std.apply(&real_f).map_err(anyhow::Error::from)?;
    let gen_f = std.apply(&gen_f).map_err(anyhow::Error::from)?;

    let k = a.k.unwrap_or(cfg.knn_k);
    let scores = manifold_scores(&real_f, &gen_f, ManifoldParams { k }).map_err(anyhow::Error::from)?;
    let clip = embeddings
        .map(|(t, p)| clip_score(&t, &p, a.cs_scale, ClipScoreMode::Mean))
        .transpose()
        .map_err(anyhow::Error::from)?;
    let report = EvaluationReport {
        real: real.len(),
        gen: gen.len(),
        fid: fid(&real_f, &gen_f).map_err(anyhow::Error::from)?,
        precision: scores.precision,
        recall: scores.recall,
        density: scores.density,
        coverage: scores.coverage,
        clip_score: clip,
        losses: mean_losses(&real, &gen, cfg)?,
    };
    emit(&serde_json::to_string_pretty(&report).context("serialization failed")?)?;
    Ok(())
}
