use std::collections::BTreeMap;
use std::fs;
use std::io::{ErrorKind, Write};
use std::path::Path;
use std::time::Instant;

use prediagnose::audioproc::read_wav;
use prediagnose::eval::{stratified_kfold, EvalReport};
use prediagnose::imageproc::read_pnm;
use prediagnose::ml::{ForestModel, SvmModel};
use prediagnose::persist::{
    read_model_file, to_canonical_json, write_atomic, write_model_file, Model, ModelEnvelope,
};
use prediagnose::pipeline::{
    cardio_predict, cardio_train, clot_feature_len, clot_predict_frame, clot_predict_sequence,
    clot_train, load_audio_dataset, load_frames, load_image_dataset, skin_hog_config,
    skin_standin_classify, skin_train, synth_cardio_items, synth_thermal_items,
    write_cardio_dataset, write_thermal_dataset, ImageItem, PipelineConfig, SKIN_STANDIN_NAME,
};
use prediagnose::{Error, Image, Label, Rng, Signal};
use rayon::prelude::*;
use serde::Serialize;

use crate::args::{
    EvalArgs, Modality, PredictArgs, ReportArgs, SynthCardioArgs, SynthThermalArgs, TrainArgs,
};
use crate::error::{CliError, CliResult};

const MODALITY_KEY: &str = "modality";

/// Writes one JSON document to stdout. A closed pipe is not an error.
fn print_line(text: &str) -> CliResult<()> {
    let mut out = std::io::stdout().lock();
    match writeln!(out, "{text}").and_then(|()| out.flush()) {
        Err(e) if e.kind() != ErrorKind::BrokenPipe => Err(Error::from(e).into()),
        _ => Ok(()),
    }
}

fn emit<S: Serialize>(value: &S) -> CliResult<()> {
    print_line(&to_canonical_json(value)?)
}

/// Names the file in I/O errors, which otherwise only carry the OS message.
fn at_path(path: &Path) -> impl Fn(Error) -> CliError + '_ {
    move |e| match e {
        Error::Io(io) => CliError::Data(format!("{}: {io}", path.display())),
        other => other.into(),
    }
}

/// Flag values the core library rejects are usage errors.
fn flag_error(e: Error) -> CliError {
    match e {
        Error::InvalidParameter(msg) => CliError::Usage(msg),
        other => other.into(),
    }
}

#[derive(Serialize)]
struct SynthSummary<'a> {
    out: &'a str,
    n: usize,
    positives: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    frames: Option<usize>,
}

pub fn synth_thermal(args: &SynthThermalArgs) -> CliResult<()> {
    let cfg = match &args.config {
        Some(path) => PipelineConfig::load(path).map_err(at_path(path))?,
        None => PipelineConfig::default(),
    };
    if args.frames == Some(0) {
        return Err(CliError::Usage("--frames must be at least 1".into()));
    }
    let items = synth_thermal_items(
        &cfg.thermal,
        args.n,
        args.positive_frac,
        args.seed,
        args.frames,
    )
    .map_err(flag_error)?;
    write_thermal_dataset(&args.out, &items)?;
    emit(&SynthSummary {
        out: &args.out.display().to_string(),
        n: items.len(),
        positives: items.iter().filter(|(_, e)| e.label == 1).count(),
        frames: args.frames,
    })
}

pub fn synth_cardio(args: &SynthCardioArgs) -> CliResult<()> {
    let items = synth_cardio_items(args.task, args.n, args.seed, args.rate, args.duration)
        .map_err(flag_error)?;
    write_cardio_dataset(&args.out, &items)?;
    emit(&SynthSummary {
        out: &args.out.display().to_string(),
        n: items.len(),
        positives: items.iter().filter(|(_, e)| e.label == 1).count(),
        frames: None,
    })
}

/// A labelled dataset in the shape one modality consumes.
#[derive(Clone)]
enum Data {
    Images(Vec<(ImageItem, Label)>),
    Audio(Vec<(Signal, Label)>),
}

impl Data {
    fn load(modality: Modality, dir: &Path) -> CliResult<Self> {
        let data = match modality {
            Modality::Cardio => Data::Audio(load_audio_dataset(dir).map_err(at_path(dir))?),
            Modality::Clot | Modality::Skin => {
                Data::Images(load_image_dataset(dir).map_err(at_path(dir))?)
            }
        };
        if modality == Modality::Skin {
            if let Data::Images(items) = &data {
                if items
                    .iter()
                    .any(|(item, _)| matches!(item, ImageItem::Sequence(_)))
                {
                    return Err(CliError::Data(
                        "skin datasets hold single images, not frame directories".into(),
                    ));
                }
            }
        }
        Ok(data)
    }

    fn labels(&self) -> Vec<Label> {
        match self {
            Data::Images(items) => items.iter().map(|s| s.1).collect(),
            Data::Audio(items) => items.iter().map(|s| s.1).collect(),
        }
    }

    fn subset(&self, indices: &[usize]) -> Self {
        match self {
            Data::Images(items) => {
                Data::Images(indices.iter().map(|&i| items[i].clone()).collect())
            }
            Data::Audio(items) => Data::Audio(indices.iter().map(|&i| items[i].clone()).collect()),
        }
    }
}

fn single_frames(items: &[(ImageItem, Label)]) -> Vec<(Image, Label)> {
    items
        .iter()
        .flat_map(|(item, label)| item.frames().iter().map(move |f| (f.clone(), *label)))
        .collect()
}

fn train_model(modality: Modality, data: &Data, cfg: &PipelineConfig) -> CliResult<Model<f64>> {
    Ok(match (modality, data) {
        // Every frame of a sequence is a training sample with the sequence label.
        (Modality::Clot, Data::Images(items)) => {
            Model::Svm(clot_train(&single_frames(items), cfg)?)
        }
        (Modality::Skin, Data::Images(items)) => {
            Model::Svm(skin_train(&single_frames(items), cfg)?)
        }
        (Modality::Cardio, Data::Audio(items)) => Model::Forest(cardio_train(items, cfg)?),
        _ => unreachable!("datasets are loaded for their modality"),
    })
}

enum Input<'a> {
    Image(&'a ImageItem),
    Audio(&'a Signal),
}

struct Prediction {
    score: f64,
    label: Label,
    frame_labels: Option<Vec<Label>>,
    window_labels: Option<Vec<Label>>,
}

impl From<(f64, Label)> for Prediction {
    fn from((score, label): (f64, Label)) -> Self {
        Prediction {
            score,
            label,
            frame_labels: None,
            window_labels: None,
        }
    }
}

fn as_svm(model: &Model<f64>) -> CliResult<&SvmModel<f64>> {
    match model {
        Model::Svm(m) => Ok(m),
        Model::Forest(_) => Err(CliError::Data(
            "expected an SVM model, found a forest".into(),
        )),
    }
}

fn as_forest(model: &Model<f64>) -> CliResult<&ForestModel<f64>> {
    match model {
        Model::Forest(m) => Ok(m),
        Model::Svm(_) => Err(CliError::Data(
            "expected a forest model, found an SVM".into(),
        )),
    }
}

fn predict_one(
    modality: Modality,
    model: &Model<f64>,
    input: Input<'_>,
    cfg: &PipelineConfig,
) -> CliResult<Prediction> {
    Ok(match (modality, input) {
        (Modality::Clot, Input::Image(ImageItem::Frame(img))) => {
            clot_predict_frame(as_svm(model)?, img, cfg)?.into()
        }
        (Modality::Clot, Input::Image(ImageItem::Sequence(frames))) => {
            let p = clot_predict_sequence(as_svm(model)?, frames, cfg)?;
            Prediction {
                score: p.score,
                label: p.label,
                frame_labels: Some(p.frame_labels),
                window_labels: Some(p.window_labels),
            }
        }
        (Modality::Skin, Input::Image(ImageItem::Frame(img))) => {
            skin_standin_classify(as_svm(model)?, img, cfg)?.into()
        }
        (Modality::Cardio, Input::Audio(sig)) => {
            cardio_predict(as_forest(model)?, sig, cfg)?.into()
        }
        _ => {
            return Err(CliError::Usage(format!(
                "input does not suit the {} pipeline",
                modality.as_str()
            )))
        }
    })
}

fn predict_all(
    modality: Modality,
    model: &Model<f64>,
    data: &Data,
    cfg: &PipelineConfig,
) -> CliResult<Vec<Prediction>> {
    match data {
        Data::Images(items) => items
            .par_iter()
            .map(|(item, _)| predict_one(modality, model, Input::Image(item), cfg))
            .collect(),
        Data::Audio(items) => items
            .par_iter()
            .map(|(sig, _)| predict_one(modality, model, Input::Audio(sig), cfg))
            .collect(),
    }
}

fn report_name(modality: Modality, cfg: &PipelineConfig) -> String {
    match modality {
        Modality::Clot => "clot".to_string(),
        Modality::Cardio => format!("cardio ({})", cfg.task),
        Modality::Skin => SKIN_STANDIN_NAME.to_string(),
    }
}

fn report(name: String, labels: &[Label], predictions: &[Prediction]) -> CliResult<EvalReport> {
    let scores: Vec<f64> = predictions.iter().map(|p| p.score).collect();
    let hard: Vec<Label> = predictions.iter().map(|p| p.label).collect();
    Ok(EvalReport::from_predictions(name, labels, &scores, &hard)?)
}

fn feature_len(modality: Modality, model: &Model<f64>, cfg: &PipelineConfig) -> CliResult<usize> {
    Ok(match modality {
        Modality::Clot => clot_feature_len(cfg)?,
        Modality::Skin => skin_hog_config(cfg).descriptor_len(cfg.skin_size, cfg.skin_size)?,
        Modality::Cardio => model.n_features(),
    })
}

#[derive(Serialize)]
struct TrainSummary<'a> {
    modality: &'a str,
    kind: &'a str,
    model: String,
    n_train: usize,
    n_features: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    n_support_vectors: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    n_trees: Option<usize>,
    training: EvalReport,
}

pub fn train(args: &TrainArgs) -> CliResult<()> {
    let mut cfg = match &args.config {
        Some(path) => PipelineConfig::load(path).map_err(at_path(path))?,
        None => PipelineConfig::default(),
    };
    if !args.augment.is_empty() {
        if args.modality != Modality::Skin {
            return Err(CliError::Usage("--augment applies to skin only".into()));
        }
        cfg.skin_augment = args.augment.clone();
    }
    let data = Data::load(args.modality, &args.data)?;
    let started = Instant::now();
    let model = train_model(args.modality, &data, &cfg)?;
    eprintln!(
        "trained {} model in {:.1} s",
        args.modality.as_str(),
        started.elapsed().as_secs_f64()
    );

    let mut created_with = cfg.snapshot();
    created_with.insert(MODALITY_KEY.into(), args.modality.as_str().into());
    created_with.insert(
        "feature_len".into(),
        feature_len(args.modality, &model, &cfg)?.to_string(),
    );
    created_with.insert("toolkit_version".into(), env!("CARGO_PKG_VERSION").into());
    write_model_file(&args.out, &model, &created_with)?;

    let labels = data.labels();
    let predictions = predict_all(args.modality, &model, &data, &cfg)?;
    let name = format!("{} (training set)", report_name(args.modality, &cfg));
    emit(&TrainSummary {
        modality: args.modality.as_str(),
        kind: model.kind().as_str(),
        model: args.out.display().to_string(),
        n_train: labels.len(),
        n_features: model.n_features(),
        n_support_vectors: match &model {
            Model::Svm(m) => Some(m.support_vectors.len()),
            Model::Forest(_) => None,
        },
        n_trees: match &model {
            Model::Forest(m) => Some(m.trees.len()),
            Model::Svm(_) => None,
        },
        training: report(name, &labels, &predictions)?,
    })
}

/// Loads a model and the pipeline configuration it was trained with.
fn load(path: &Path) -> CliResult<(ModelEnvelope<f64>, PipelineConfig)> {
    let envelope = read_model_file::<f64>(path).map_err(at_path(path))?;
    let cfg = PipelineConfig::from_snapshot(&envelope.created_with)?;
    Ok((envelope, cfg))
}

fn recorded_modality(created_with: &BTreeMap<String, String>) -> CliResult<Option<Modality>> {
    created_with
        .get(MODALITY_KEY)
        .map(|m| {
            Modality::parse(m)
                .ok_or_else(|| CliError::Data(format!("model records unknown modality `{m}`")))
        })
        .transpose()
}

#[derive(Serialize)]
struct PredictOutput {
    #[serde(skip_serializing_if = "Option::is_none")]
    name: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    score: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    prob: Option<f64>,
    label: Label,
    #[serde(skip_serializing_if = "Option::is_none")]
    frame_labels: Option<Vec<Label>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    window_labels: Option<Vec<Label>>,
    latency_ms: f64,
}

pub fn predict(args: &PredictArgs) -> CliResult<()> {
    if args.sequence.is_some() && args.modality != Modality::Clot {
        return Err(CliError::Usage(
            "--sequence applies to the clot pipeline only".into(),
        ));
    }
    if args.window.is_some() && args.sequence.is_none() {
        return Err(CliError::Usage("--window needs --sequence".into()));
    }
    let (envelope, mut cfg) = load(&args.model)?;
    if let Some(recorded) = recorded_modality(&envelope.created_with)? {
        if recorded != args.modality {
            return Err(CliError::Data(format!(
                "{} holds a {} model, not {}",
                args.model.display(),
                recorded.as_str(),
                args.modality.as_str()
            )));
        }
    }
    if let Some(w) = args.window {
        cfg.window = w;
        cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    }

    // Latency covers reading the input, feature extraction and inference;
    // loading the model is a one-off start-up cost.
    let started = Instant::now();
    let p = match (&args.input, &args.sequence) {
        (_, Some(dir)) => {
            let item = ImageItem::Sequence(load_frames(dir).map_err(at_path(dir))?);
            predict_one(args.modality, &envelope.model, Input::Image(&item), &cfg)?
        }
        (Some(path), None) if args.modality == Modality::Cardio => {
            let sig: Signal = read_wav(path).map_err(at_path(path))?;
            predict_one(args.modality, &envelope.model, Input::Audio(&sig), &cfg)?
        }
        (Some(path), None) => {
            let item = ImageItem::Frame(read_pnm(path).map_err(at_path(path))?);
            predict_one(args.modality, &envelope.model, Input::Image(&item), &cfg)?
        }
        (None, None) => unreachable!("clap requires --input or --sequence"),
    };
    let latency_ms = started.elapsed().as_secs_f64() * 1e3;
    let is_prob = args.modality == Modality::Cardio;
    emit(&PredictOutput {
        name: (args.modality == Modality::Skin).then_some(SKIN_STANDIN_NAME),
        score: (!is_prob).then_some(p.score),
        prob: is_prob.then_some(p.score),
        label: p.label,
        frame_labels: p.frame_labels,
        window_labels: p.window_labels,
        latency_ms,
    })
}

pub fn eval(args: &EvalArgs) -> CliResult<()> {
    let (envelope, cfg) = load(&args.model)?;
    let modality = recorded_modality(&envelope.created_with)?.ok_or_else(|| {
        CliError::Data(format!(
            "{} does not record its modality",
            args.model.display()
        ))
    })?;
    let data = Data::load(modality, &args.data)?;
    let labels = data.labels();

    let (name, predictions) = match args.kfold {
        None => (
            report_name(modality, &cfg),
            predict_all(modality, &envelope.model, &data, &cfg)?,
        ),
        Some(k) => {
            let folds =
                stratified_kfold(&labels, k, &mut Rng::new(args.seed)).map_err(flag_error)?;
            let mut slots: Vec<Option<Prediction>> = (0..labels.len()).map(|_| None).collect();
            for (i, fold) in folds.iter().enumerate() {
                eprintln!("fold {}/{}", i + 1, folds.len());
                let model = train_model(modality, &data.subset(&fold.train), &cfg)?;
                let out = predict_all(modality, &model, &data.subset(&fold.test), &cfg)?;
                for (&idx, p) in fold.test.iter().zip(out) {
                    slots[idx] = Some(p);
                }
            }
            let predictions = slots
                .into_iter()
                .map(|p| p.expect("folds cover every sample"))
                .collect();
            (
                format!("{} ({k}-fold)", report_name(modality, &cfg)),
                predictions,
            )
        }
    };
    let report = report(name, &labels, &predictions)?;
    if let Some(path) = &args.roc_csv {
        write_atomic(path, report.roc_csv().as_bytes())?;
    }
    eprint!("{}", report.to_table());
    emit(&report)
}

#[derive(Serialize)]
struct MultimodalReport {
    modules: Vec<serde_json::Value>,
}

pub fn report_cmd(args: &ReportArgs) -> CliResult<()> {
    let modules = args
        .inputs
        .iter()
        .map(|path| {
            let text = fs::read_to_string(path).map_err(|e| at_path(path)(e.into()))?;
            let value: serde_json::Value = serde_json::from_str(&text)
                .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
            if !value.is_object() {
                return Err(CliError::Data(format!(
                    "{}: expected a JSON object",
                    path.display()
                )));
            }
            Ok(value)
        })
        .collect::<CliResult<Vec<_>>>()?;
    let text = to_canonical_json(&MultimodalReport { modules })?;
    write_atomic(&args.out, format!("{text}\n").as_bytes())?;
    print_line(&text)
}
