use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::anyhow;
use camscope_core::aggregate::{build_aggregated_cam, collect_cams, AggregationMethod, VariabilityMethod};
use camscope_core::dataset::synthetic::planted_motifs;
use camscope_core::dataset::{
    ingest_pcaps, load_bundle, load_csv, save_bundle, undersample, DatasetBundle, DatasetSummary, IngestReport,
    LabelManifest,
};
use camscope_core::glyph::{render_svg, GridSpec, DEFAULT_CELL_SIZE, DEFAULT_WRAP_WIDTH};
use camscope_core::nn::{
    argmax, load_weights, save_weights, train, AdamConfig, EpochMetrics, LabeledSample, Model, ModelConfig,
    TrainOptions,
};
use serde::Serialize;

use crate::args::{ExportCamArgs, PredictArgs, PrepareArgs, SynthArgs, TrainArgs};
use crate::failure::{required, Classify, CmdResult, Failure};

pub fn read_bundle(path: &Path) -> CmdResult<DatasetBundle> {
    let bundle = load_bundle(path).invalid(format!("cannot load dataset {}", path.display()))?;
    bundle.validate().invalid(format!("invalid dataset {}", path.display()))?;
    Ok(bundle)
}

pub fn read_model(path: &Path, bundle: &DatasetBundle) -> CmdResult<Model> {
    let model = load_weights(path).invalid(format!("cannot load weights {}", path.display()))?;
    let config = model.config();
    if config.input_length != bundle.input_length {
        return Err(Failure::invalid(anyhow!(
            "model expects {} input values but the dataset has {}",
            config.input_length,
            bundle.input_length
        )));
    }
    if config.num_classes < bundle.class_names.len() {
        return Err(Failure::invalid(anyhow!(
            "model has {} classes but the dataset names {}",
            config.num_classes,
            bundle.class_names.len()
        )));
    }
    Ok(model)
}

fn write_json(path: &Path, value: &impl Serialize) -> CmdResult {
    let text = serde_json::to_string_pretty(value).runtime("cannot serialize output")?;
    std::fs::write(path, text + "\n").runtime(format!("cannot write {}", path.display()))
}

fn print_json(value: &impl Serialize) -> CmdResult {
    let text = serde_json::to_string_pretty(value).runtime("cannot serialize output")?;
    writeln!(io::stdout().lock(), "{text}").runtime("cannot write to standard output")
}

#[derive(Serialize)]
struct PrepareReport<'a> {
    out: &'a Path,
    n_samples: usize,
    input_length: usize,
    class_names: &'a [String],
    #[serde(skip_serializing_if = "Option::is_none")]
    ingest: Option<IngestReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    summary: Option<&'a DatasetSummary>,
}

pub fn prepare(args: PrepareArgs) -> CmdResult {
    let out = required(args.out, "out")?;
    let seed = args.seed.unwrap_or(0);
    if args.per_class == Some(0) {
        return Err(Failure::invalid(anyhow!("--per-class must be at least 1")));
    }
    let (mut bundle, ingest) = match (args.csv, args.pcap_dir, args.manifest) {
        (Some(csv), None, None) => {
            let file = File::open(&csv).invalid(format!("cannot open {}", csv.display()))?;
            let bundle = load_csv(BufReader::new(file)).invalid(format!("invalid table {}", csv.display()))?;
            (bundle, None)
        }
        (None, Some(dir), Some(manifest)) => {
            let mut entries = std::fs::read_dir(&dir).invalid(format!("cannot read {}", dir.display()))?;
            if entries.next().is_none() {
                return Err(Failure::invalid(anyhow!("no samples: {} is empty", dir.display())));
            }
            let text = std::fs::read_to_string(&manifest)
                .invalid(format!("cannot read manifest {}", manifest.display()))?;
            let manifest: LabelManifest =
                serde_json::from_str(&text).invalid(format!("invalid manifest {}", manifest.display()))?;
            let (bundle, report) = ingest_pcaps(&dir, &manifest).invalid(format!("cannot ingest {}", dir.display()))?;
            tracing::info!(
                files = report.files,
                packets = report.packets,
                malformed = report.malformed,
                truncated = report.truncated_records,
                "captures ingested"
            );
            (bundle, Some(report))
        }
        _ => {
            return Err(Failure::invalid(anyhow!("give either --csv, or both --pcap-dir and --manifest")));
        }
    };
    if bundle.samples.is_empty() {
        return Err(Failure::invalid(anyhow!("no samples")));
    }
    if let Some(target) = args.per_class {
        let samples = std::mem::take(&mut bundle.samples);
        let (kept, summary) = undersample(samples, target, seed).invalid("cannot undersample")?;
        bundle.samples = kept;
        bundle.summary = Some(summary);
    }
    save_bundle(&bundle, &out).runtime(format!("cannot write {}", out.display()))?;
    print_json(&PrepareReport {
        out: &out,
        n_samples: bundle.samples.len(),
        input_length: bundle.input_length,
        class_names: &bundle.class_names,
        ingest,
        summary: bundle.summary.as_ref(),
    })
}

pub fn synth(args: SynthArgs) -> CmdResult {
    let out = required(args.out, "out")?;
    let classes = args.classes.unwrap_or(3);
    let per_class = args.per_class.unwrap_or(300);
    let length = args.length.unwrap_or(128);
    let motif_len = args.motif_len.unwrap_or(6);
    if classes < 2 || per_class == 0 {
        return Err(Failure::invalid(anyhow!("need at least 2 classes and 1 sample per class")));
    }
    if !(4..=16).contains(&motif_len) || length < (classes + 1) * motif_len {
        return Err(Failure::invalid(anyhow!(
            "motif length must be within 4..=16 and the input at least (classes + 1) * motif length"
        )));
    }
    let data = planted_motifs(classes, per_class, length, motif_len, args.seed.unwrap_or(0));
    save_bundle(&data.bundle, &out).runtime(format!("cannot write {}", out.display()))?;
    if let Some(path) = args.motifs {
        write_json(&path, &data.motifs)?;
    }
    print_json(&data.motifs)
}

fn default_metrics_path(out: &Path) -> PathBuf {
    let mut name = out.file_stem().unwrap_or_default().to_os_string();
    name.push(".metrics.csv");
    out.with_file_name(name)
}

fn metrics_header(num_classes: usize) -> Vec<String> {
    let mut header: Vec<String> =
        ["epoch", "loss", "accuracy", "macro_precision", "macro_recall", "macro_f1"].map(String::from).to_vec();
    for c in 0..num_classes {
        for m in ["precision", "recall", "f1", "support"] {
            header.push(format!("{m}_{c}"));
        }
    }
    header
}

fn metrics_row(m: &EpochMetrics) -> Vec<String> {
    let mut row = vec![
        m.epoch.to_string(),
        m.loss.to_string(),
        m.accuracy.to_string(),
        m.macro_precision().to_string(),
        m.macro_recall().to_string(),
        m.macro_f1().to_string(),
    ];
    for c in &m.per_class {
        row.extend([c.precision.to_string(), c.recall.to_string(), c.f1.to_string(), c.support.to_string()]);
    }
    row
}

pub fn train_model(args: TrainArgs) -> CmdResult {
    let data = required(args.data, "data")?;
    let out = required(args.out, "out")?;
    let metrics_path = args.metrics.unwrap_or_else(|| default_metrics_path(&out));
    let bundle = read_bundle(&data)?;
    let num_classes = bundle.class_names.len();

    let mut config = ModelConfig::new(bundle.input_length, num_classes);
    if let Some(channels) = args.channels {
        config = config.with_channels(channels);
    }
    if let Some(k) = args.kernel_size {
        config = config.with_kernel_size(k);
    }
    let seed = args.seed.unwrap_or(0);
    let options = TrainOptions {
        epochs: args.epochs.unwrap_or(10),
        batch_size: args.batch_size.unwrap_or(64),
        adam: AdamConfig { lr: args.lr.unwrap_or(AdamConfig::default().lr), ..AdamConfig::default() },
        seed,
    };
    if options.batch_size == 0 || !(options.adam.lr >= 0.0 && options.adam.lr.is_finite()) {
        return Err(Failure::invalid(anyhow!("batch size must be positive and the learning rate finite and >= 0")));
    }
    let mut model = Model::initialize(config, seed).invalid("invalid model configuration")?;

    let mut samples = Vec::with_capacity(bundle.samples.len());
    for s in &bundle.samples {
        let label = s.label.ok_or_else(|| Failure::invalid(anyhow!("sample `{}` has no label", s.sample_id)))?;
        samples.push(LabeledSample { input: &s.input, label });
    }
    tracing::info!(
        samples = samples.len(),
        parameters = model.weights().parameter_count(),
        epochs = options.epochs,
        "training"
    );
    let history = if options.epochs == 0 {
        Vec::new()
    } else {
        train(&mut model, &samples, &options).invalid("training failed")?
    };
    for m in &history {
        tracing::info!(epoch = m.epoch, loss = m.loss, accuracy = m.accuracy, macro_f1 = m.macro_f1(), "epoch done");
    }

    save_weights(&model, &out).runtime(format!("cannot write {}", out.display()))?;
    let mut writer = csv::Writer::from_path(&metrics_path).runtime(format!("cannot write {}", metrics_path.display()))?;
    writer.write_record(metrics_header(num_classes)).runtime("cannot write metrics")?;
    for m in &history {
        writer.write_record(metrics_row(m)).runtime("cannot write metrics")?;
    }
    writer.flush().runtime("cannot write metrics")
}

pub fn predict(args: PredictArgs) -> CmdResult {
    let data = required(args.data, "data")?;
    let weights = required(args.weights, "weights")?;
    let bundle = read_bundle(&data)?;
    let model = read_model(&weights, &bundle)?;

    let sink: Box<dyn Write> = match &args.out {
        Some(path) => Box::new(File::create(path).runtime(format!("cannot write {}", path.display()))?),
        None => Box::new(io::stdout().lock()),
    };
    let mut writer = csv::Writer::from_writer(BufWriter::new(sink));
    writer.write_record(["sample_id", "label", "predicted", "confidence"]).runtime("cannot write predictions")?;
    let (mut labelled, mut correct) = (0usize, 0usize);
    for s in &bundle.samples {
        let probs = model.forward(&s.input).invalid(format!("cannot classify `{}`", s.sample_id))?.probabilities;
        let predicted = argmax(&probs);
        if let Some(label) = s.label {
            labelled += 1;
            correct += usize::from(label == predicted);
        }
        let label = s.label.map(|l| l.to_string()).unwrap_or_default();
        writer
            .write_record([s.sample_id.as_str(), &label, &predicted.to_string(), &probs[predicted].to_string()])
            .runtime("cannot write predictions")?;
    }
    writer.flush().runtime("cannot write predictions")?;
    if labelled > 0 {
        tracing::info!(accuracy = correct as f64 / labelled as f64, samples = labelled, "prediction accuracy");
    }
    Ok(())
}

pub fn export_cam(args: ExportCamArgs) -> CmdResult {
    let data = required(args.data, "data")?;
    let weights = required(args.weights, "weights")?;
    let class = required(args.class, "class")?;
    let out = required(args.out, "out")?;
    let spec = GridSpec {
        wrap_width: args.wrap.unwrap_or(DEFAULT_WRAP_WIDTH),
        cell_size: args.cell_size.unwrap_or(DEFAULT_CELL_SIZE),
        ..GridSpec::default()
    };
    spec.validate().invalid("invalid grid")?;
    let bundle = read_bundle(&data)?;
    let model = read_model(&weights, &bundle)?;

    let matrix = collect_cams(&model, &bundle.samples, class).invalid(format!("cannot collect CAMs of class {class}"))?;
    let cam = build_aggregated_cam(
        &matrix,
        args.agg.unwrap_or(AggregationMethod::Mean),
        args.var.unwrap_or(VariabilityMethod::Entropy),
    )
    .invalid("cannot aggregate")?;
    tracing::info!(class, samples = cam.n_samples, "aggregated");
    write_json(&out, &cam)?;
    if let Some(svg_path) = args.svg {
        let svg = render_svg(&cam, &spec).invalid("cannot render SVG")?;
        std::fs::write(&svg_path, svg).runtime(format!("cannot write {}", svg_path.display()))?;
    }
    Ok(())
}
