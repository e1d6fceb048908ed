use std::ffi::OsString;
use std::fs::{self, OpenOptions};
use std::io::{self, BufReader, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use cane_sentinel::agronomy::{assess_values, overall_severity, GrowthStage};
use cane_sentinel::classifier::corpus::{Manifest, MANIFEST_NAME};
use cane_sentinel::classifier::eval::REPORT_SCHEMA;
use cane_sentinel::classifier::svm::train_detailed;
use cane_sentinel::classifier::{evaluate_corpus, load_knn, load_svm, save_knn, save_svm, Class, Disease};
use cane_sentinel::features::FEATURE_NAMES;
use cane_sentinel::imaging::{encode_pbm, load_ppm};
use cane_sentinel::pipeline::{analyze, classify, Suppression, Verdict};
use cane_sentinel::telemetry::{
    encode_reading, ingest_stream, serve_tcp, Alert, AlertSink, Ingestor, JsonLinesSink, Simulation, TelemetryStore,
};
use cane_sentinel::{KnnModel, RgbImage, SvmModel, TrainingSet};
use clap::{Parser, Subcommand, ValueEnum};
use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

use crate::config::RunConfig;
use crate::synth::gen_synthetic_corpus;
use crate::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "cane-sentinel",
    version,
    about = "Sugarcane leaf classification and field telemetry"
)]
struct Cli {
    /// JSON run configuration; defaults apply when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Subset {
    Train,
    Test,
    All,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Segment one PPM image and report clusters, regions and features.
    Segment {
        #[arg(long)]
        image: PathBuf,
        /// Also write the final lesion mask as PBM.
        #[arg(long)]
        mask_out: Option<PathBuf>,
    },
    /// Train the SVM and KNN models on the training split of a corpus.
    Train {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        svm_out: PathBuf,
        #[arg(long)]
        knn_out: PathBuf,
        /// Train on every image instead of the training split.
        #[arg(long)]
        all: bool,
    },
    /// Classify one PPM image.
    Classify {
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        svm: PathBuf,
        #[arg(long)]
        knn: PathBuf,
        /// Alert log for infected verdicts (default from config).
        #[arg(long)]
        alerts: Option<PathBuf>,
    },
    /// Run the full pipeline over a corpus split and print the report.
    Evaluate {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        svm: PathBuf,
        #[arg(long)]
        knn: PathBuf,
        #[arg(long, value_enum, default_value_t = Subset::Test)]
        subset: Subset,
    },
    /// Write a balanced synthetic corpus.
    GenCorpus {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        count: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Ingest telemetry lines from a file, stdin (`-`) or TCP clients.
    Serve {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        listen: Option<String>,
        /// Stop after this many TCP clients have disconnected.
        #[arg(long)]
        max_connections: Option<usize>,
        #[arg(long)]
        data_dir: Option<PathBuf>,
        #[arg(long)]
        alerts: Option<PathBuf>,
    },
    /// Print simulated node readings on a stepped clock.
    Simulate {
        #[arg(long)]
        ticks: usize,
        #[arg(long)]
        nodes: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        step_ms: Option<u64>,
    },
    /// Assess one set of field conditions.
    Advise {
        #[arg(long)]
        stage: Option<String>,
        #[arg(long, allow_negative_numbers = true)]
        temp: f64,
        #[arg(long)]
        rh: f64,
        #[arg(long)]
        soil: f64,
    },
}

pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = io::stdout();
    let stderr = io::stderr();
    run_cli_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

/// [`run_cli`] with explicit output streams.
pub fn run_cli_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match run(cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn run(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = RunConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::Segment { image, mask_out } => segment(&cfg, &image, mask_out.as_deref(), out),
        Command::Train {
            corpus,
            svm_out,
            knn_out,
            all,
        } => train(&cfg, &corpus, &svm_out, &knn_out, all, out),
        Command::Classify {
            image,
            svm,
            knn,
            alerts,
        } => classify_image(&cfg, &image, &svm, &knn, alerts, out),
        Command::Evaluate {
            corpus,
            svm,
            knn,
            subset,
        } => evaluate(&cfg, &corpus, &svm, &knn, subset, out),
        Command::GenCorpus { out: dir, count, seed } => gen_corpus(&cfg, &dir, count, seed, out),
        Command::Serve {
            input,
            listen,
            max_connections,
            data_dir,
            alerts,
        } => serve(&cfg, input, listen, max_connections, data_dir, alerts, out),
        Command::Simulate {
            ticks,
            nodes,
            seed,
            step_ms,
        } => simulate(&cfg, ticks, nodes, seed, step_ms, out),
        Command::Advise { stage, temp, rh, soil } => advise(&cfg, stage, temp, rh, soil, out),
    }
}

fn emit_json<S: Serialize>(out: &mut dyn Write, value: &S) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(CliError::domain)?;
    text.push('\n');
    write_out(out, text.as_bytes())
}

fn write_out(out: &mut dyn Write, bytes: &[u8]) -> Result<(), CliError> {
    out.write_all(bytes).map_err(|e| CliError::Io(format!("stdout: {e}")))
}

fn read_image(path: &Path) -> Result<RgbImage, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    load_ppm(&bytes).map_err(|e| CliError::Domain(format!("{}: {e}", path.display())))
}

fn load_manifest(dir: &Path) -> Result<Manifest, CliError> {
    let path = dir.join(MANIFEST_NAME);
    let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    Manifest::parse(&text, dir).map_err(CliError::domain)
}

fn load_models(svm: &Path, knn: &Path) -> Result<(SvmModel, KnnModel), CliError> {
    let read = |p: &Path| fs::read_to_string(p).map_err(|e| CliError::io(p, e));
    let svm_text = read(svm)?;
    let knn_text = read(knn)?;
    let svm = load_svm(&svm_text).map_err(|e| CliError::Domain(format!("{}: {e}", svm.display())))?;
    let knn = load_knn(&knn_text).map_err(|e| CliError::Domain(format!("{}: {e}", knn.display())))?;
    Ok((svm, knn))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

/// Features as an object in canonical column order.
struct NamedFeatures([f64; 8]);

impl Serialize for NamedFeatures {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(FEATURE_NAMES.len()))?;
        for (name, v) in FEATURE_NAMES.iter().zip(self.0) {
            map.serialize_entry(name, &v)?;
        }
        map.end()
    }
}

#[derive(Serialize)]
struct RegionSummary {
    id: usize,
    area: usize,
    bbox: (usize, usize, usize, usize),
    perimeter: usize,
    elongation: f64,
}

#[derive(Serialize)]
struct ClusterSummary {
    role: Option<cane_sentinel::imaging::ClusterRole>,
    centroid: [f64; 3],
    count: usize,
}

#[derive(Serialize)]
struct SegmentReport {
    schema: &'static str,
    kind: &'static str,
    image: String,
    width: usize,
    height: usize,
    iterations: usize,
    clusters: Vec<ClusterSummary>,
    suppressed: Option<Suppression>,
    raw_lesion_pixels: usize,
    lesion_pixels: usize,
    regions: Vec<RegionSummary>,
    features: NamedFeatures,
}

fn segment(cfg: &RunConfig, image: &Path, mask_out: Option<&Path>, out: &mut dyn Write) -> Result<(), CliError> {
    let img = read_image(image)?;
    let a = analyze::<f64>(&img, &cfg.pipeline).map_err(CliError::domain)?;
    if let Some(p) = mask_out {
        write_file(p, &encode_pbm(&a.segmentation.mask))?;
    }
    let m = &a.segmentation.model;
    let report = SegmentReport {
        schema: REPORT_SCHEMA,
        kind: "segmentation",
        image: image.display().to_string(),
        width: img.width(),
        height: img.height(),
        iterations: a.segmentation.iterations,
        clusters: (0..m.k())
            .map(|j| ClusterSummary {
                role: m.roles[j],
                centroid: m.centroids[j],
                count: m.counts[j],
            })
            .collect(),
        suppressed: a.segmentation.suppressed,
        raw_lesion_pixels: a.segmentation.raw_mask.count_ones(),
        lesion_pixels: a.segmentation.mask.count_ones(),
        regions: region_summaries(&a.regions),
        features: NamedFeatures(a.features.to_array()),
    };
    emit_json(out, &report)
}

fn region_summaries(regions: &[cane_sentinel::features::Region]) -> Vec<RegionSummary> {
    regions
        .iter()
        .map(|r| RegionSummary {
            id: r.id,
            area: r.area,
            bbox: r.bbox,
            perimeter: r.perimeter,
            elongation: r.elongation(),
        })
        .collect()
}

#[derive(Serialize)]
struct TrainSummary {
    split_seed: Option<u64>,
    train_fraction: Option<f64>,
    samples: usize,
    healthy: usize,
    infected: usize,
    svm_iterations: usize,
    dual_objective: f64,
    kkt_residual: f64,
    knn_k: usize,
    knn_exemplars: usize,
}

/// Extracts features for the listed corpus entries and fits both models.
pub fn train_models(
    cfg: &RunConfig,
    manifest: &Manifest,
    indices: &[usize],
) -> Result<(SvmModel, KnnModel, serde_json::Value), CliError> {
    let mut svm_data = TrainingSet::new();
    let mut knn_data: Vec<(Vec<f64>, Disease)> = Vec::new();
    for &i in indices {
        let entry = &manifest.entries[i];
        let path = manifest.resolve(entry);
        let img = read_image(&path)?;
        let a =
            analyze::<f64>(&img, &cfg.pipeline).map_err(|e| CliError::Domain(format!("{}: {e}", path.display())))?;
        let x = a.features.to_array().to_vec();
        svm_data.push(x.clone(), entry.class).map_err(CliError::domain)?;
        if let (Class::Infected, Some(d)) = (entry.class, entry.disease) {
            knn_data.push((x, d));
        }
    }
    let fit = train_detailed(&svm_data, &cfg.svm.params()).map_err(CliError::domain)?;
    let k = cfg.knn.k;
    let knn = KnnModel::fit(&knn_data, k).map_err(CliError::domain)?;
    let infected = knn_data.len();
    let summary = TrainSummary {
        split_seed: None,
        train_fraction: None,
        samples: svm_data.len(),
        healthy: svm_data.len() - infected,
        infected,
        svm_iterations: fit.iterations,
        dual_objective: fit.dual_objective(),
        kkt_residual: fit.kkt_residual(),
        knn_k: k,
        knn_exemplars: knn.exemplars.len(),
    };
    let summary = serde_json::to_value(summary).map_err(CliError::domain)?;
    Ok((fit.model, knn, summary))
}

fn train(
    cfg: &RunConfig,
    corpus: &Path,
    svm_out: &Path,
    knn_out: &Path,
    all: bool,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let manifest = load_manifest(corpus)?;
    let indices: Vec<usize> = if all {
        (0..manifest.entries.len()).collect()
    } else {
        manifest.split(cfg.split.seed, cfg.split.train_fraction).train
    };
    let (svm, knn, mut summary) = train_models(cfg, &manifest, &indices)?;
    if !all {
        summary["split_seed"] = cfg.split.seed.into();
        summary["train_fraction"] = cfg.split.train_fraction.into();
    }
    write_file(svm_out, save_svm(&svm).as_bytes())?;
    write_file(knn_out, save_knn(&knn).as_bytes())?;
    emit_json(out, &summary)
}

#[derive(Serialize)]
struct ClassifyReport {
    schema: &'static str,
    kind: &'static str,
    image: String,
    verdict: Verdict,
    decision_value: f64,
    suppressed: Option<Suppression>,
    lesion_pixels: usize,
    features: NamedFeatures,
    regions: Vec<RegionSummary>,
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

fn open_alert_sink(path: &Path) -> Result<JsonLinesSink<fs::File>, CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let f = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| CliError::io(path, e))?;
    Ok(JsonLinesSink::new(f))
}

fn classify_image(
    cfg: &RunConfig,
    image: &Path,
    svm: &Path,
    knn: &Path,
    alerts: Option<PathBuf>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let img = read_image(image)?;
    let (svm, knn) = load_models(svm, knn)?;
    let c = classify(&img, &svm, &knn, &cfg.pipeline).map_err(CliError::domain)?;
    let report = ClassifyReport {
        schema: REPORT_SCHEMA,
        kind: "classification",
        image: image.display().to_string(),
        verdict: c.verdict,
        decision_value: c.decision_value,
        suppressed: c.analysis.segmentation.suppressed,
        lesion_pixels: c.analysis.segmentation.mask.count_ones(),
        features: NamedFeatures(c.analysis.features.to_array()),
        regions: region_summaries(&c.analysis.regions),
    };
    if let Some(d) = c.verdict.disease {
        let path = alerts.unwrap_or_else(|| cfg.telemetry.alerts.clone());
        let alert = Alert::infected_leaf(now_ms(), image.display().to_string(), d.as_str(), c.decision_value);
        open_alert_sink(&path)?
            .emit(&alert)
            .map_err(|e| CliError::io(&path, e))?;
    }
    emit_json(out, &report)
}

fn evaluate(
    cfg: &RunConfig,
    corpus: &Path,
    svm: &Path,
    knn: &Path,
    subset: Subset,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let manifest = load_manifest(corpus)?;
    let (svm, knn) = load_models(svm, knn)?;
    let split = manifest.split(cfg.split.seed, cfg.split.train_fraction);
    let (indices, name) = match subset {
        Subset::Train => (split.train.clone(), "train"),
        Subset::Test => (split.test.clone(), "test"),
        Subset::All => ((0..manifest.entries.len()).collect(), "all"),
    };
    let report = evaluate_corpus(&svm, &knn, &manifest, &indices, &cfg.pipeline).map_err(CliError::domain)?;
    let report = if subset == Subset::All {
        report
    } else {
        report.with_split(&split, name)
    };
    emit_json(out, &report)
}

#[derive(Serialize)]
struct CorpusSummary {
    images: usize,
    healthy: usize,
    leaf_scald: usize,
    red_stripe: usize,
    mosaic: usize,
    seed: u64,
}

fn gen_corpus(
    cfg: &RunConfig,
    dir: &Path,
    count: Option<usize>,
    seed: Option<u64>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let mut spec = cfg.corpus.clone();
    spec.count = count.unwrap_or(spec.count);
    spec.seed = seed.unwrap_or(spec.seed);
    let entries = gen_synthetic_corpus(&spec, dir).map_err(|e| CliError::io(dir, e))?;
    let n = |d: Option<Disease>| entries.iter().filter(|e| e.disease == d).count();
    emit_json(
        out,
        &CorpusSummary {
            images: entries.len(),
            healthy: n(None),
            leaf_scald: n(Some(Disease::LeafScald)),
            red_stripe: n(Some(Disease::RedStripe)),
            mosaic: n(Some(Disease::Mosaic)),
            seed: spec.seed,
        },
    )
}

fn serve(
    cfg: &RunConfig,
    input: Option<PathBuf>,
    listen: Option<String>,
    max_connections: Option<usize>,
    data_dir: Option<PathBuf>,
    alerts: Option<PathBuf>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let t = &cfg.telemetry;
    let data_dir = data_dir.unwrap_or_else(|| t.data_dir.clone());
    let store = TelemetryStore::open(&data_dir, t.capacity).map_err(|e| match e {
        cane_sentinel::telemetry::StoreError::Io { .. } => CliError::Io(e.to_string()),
        other => CliError::domain(other),
    })?;
    let alerts = alerts.unwrap_or_else(|| t.alerts.clone());
    let mut ingestor = Ingestor::new(store, cfg.agronomy, open_alert_sink(&alerts)?);
    let stats = match input {
        Some(p) if p.as_os_str() == "-" => ingest_stream(io::stdin().lock(), &mut ingestor),
        Some(p) => {
            let f = fs::File::open(&p).map_err(|e| CliError::io(&p, e))?;
            ingest_stream(BufReader::new(f), &mut ingestor)
        }
        None => {
            let addr = listen.unwrap_or_else(|| t.listen.clone());
            let listener = TcpListener::bind(&addr).map_err(|e| CliError::Io(format!("{addr}: {e}")))?;
            serve_tcp(listener, &mut ingestor, max_connections)
        }
    }
    .map_err(|e| CliError::Io(format!("ingest: {e}")))?;
    emit_json(out, &stats)
}

fn simulate(
    cfg: &RunConfig,
    ticks: usize,
    nodes: Option<usize>,
    seed: Option<u64>,
    step_ms: Option<u64>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let t = &cfg.telemetry;
    let nodes = nodes.unwrap_or(t.nodes);
    if !(1..=100).contains(&nodes) {
        return Err(CliError::Usage(format!("--nodes must lie in 1..=100, got {nodes}")));
    }
    let mut sim = Simulation::new(
        nodes,
        t.environment.clone(),
        seed.unwrap_or(t.seed),
        t.start_ms,
        step_ms.unwrap_or(t.poll_period_ms),
    );
    let mut text = String::new();
    for _ in 0..ticks {
        for r in sim.tick().map_err(CliError::domain)? {
            text.push_str(&encode_reading(&r).map_err(CliError::domain)?);
        }
    }
    write_out(out, text.as_bytes())
}

fn advise(
    cfg: &RunConfig,
    stage: Option<String>,
    temp: f64,
    rh: f64,
    soil: f64,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let stage = match stage {
        Some(s) => s.parse::<GrowthStage>().map_err(CliError::Usage)?,
        None => cfg.agronomy.stage,
    };
    if !temp.is_finite() || !(0.0..=100.0).contains(&rh) || !(0.0..=100.0).contains(&soil) {
        return Err(CliError::Domain(
            "temperature must be finite; humidity and soil moisture must lie in [0, 100]".into(),
        ));
    }
    let advisories = assess_values(temp, rh, soil, stage, &cfg.agronomy.soil_band).map_err(CliError::domain)?;
    let mut text = String::new();
    for a in &advisories {
        text.push_str(&serde_json::to_string(a).map_err(CliError::domain)?);
        text.push('\n');
    }
    let overall = serde_json::json!({ "stage": stage, "overall": overall_severity(&advisories) });
    text.push_str(&overall.to_string());
    text.push('\n');
    write_out(out, text.as_bytes())
}
