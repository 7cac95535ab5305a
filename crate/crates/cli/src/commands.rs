use std::path::{Path, PathBuf};
use std::time::Instant;

use prodcoef::classify::rf_fit;
use prodcoef::eval::{
    component_experiments, feature_set_experiments, reference_comparison, render_report, CrossValPlan,
    EvaluationReport, ReferenceComparison,
};
use prodcoef::features::{extract_features, radius_for_median_neighbors, NeighborhoodSpec};
use prodcoef::io::{read_csv, read_las, LasHeaderSummary};
use prodcoef::synth::{generate_scene, scene_to_csv, SceneParams};
use prodcoef::{
    fit_pca, normalize_unit_cube, ClassifierConfig, Error, FeatureMatrix, KnnModel, PcaModel, PointCloud,
    RandomForestModel,
};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::artifact::{
    read_upstream, to_json, write_csv_artifact, write_text, EvaluationSettings, FileDigest, InputFormat,
    InputSettings, Manifest, NeighborhoodSettings, RunConfig, TrainSettings,
};
use crate::cli::{ClassifierChoice, Cli, Command, EvalArgs, InputArgs, ModelArgs, NeighborhoodArgs, SynthArgs, TableChoice};
use crate::error::{CliError, CliResult};

/// Prints a line to stdout, ignoring a closed pipe.
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout().lock(), $($arg)*);
    }};
}

/// Sample size used when tuning the radius to a target neighborhood size.
const RADIUS_SAMPLE: usize = 2000;

pub fn dispatch(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Ingest(input) => ingest(cli, input),
        Command::Synth(args) => synth(cli, args),
        Command::Features { input, neighborhood } => features(cli, input, neighborhood).map(|_| ()),
        Command::Pca { features, components } => pca(cli, features, *components),
        Command::Train {
            features,
            classifier,
            components,
            model,
        } => train(cli, features, *classifier, *components, model),
        Command::Evaluate { features, eval } => evaluate(cli, features, eval),
        Command::Run {
            input,
            neighborhood,
            eval,
        } => {
            // fail on evaluation settings before spending time on features
            check_eval_args(eval)?;
            let features_csv = features(cli, input, neighborhood)?;
            evaluate(cli, &features_csv, eval)
        }
        Command::Report { reports } => report(reports),
    }
}

fn out_path(cli: &Cli, name: &str) -> CliResult<PathBuf> {
    std::fs::create_dir_all(&cli.out_dir).map_err(|e| CliError::io(&cli.out_dir, e))?;
    Ok(cli.out_dir.join(name))
}

struct LoadedCloud {
    cloud: PointCloud,
    digest: FileDigest,
    upstream: Vec<Manifest>,
    settings: InputSettings,
    las_header: Option<LasHeaderSummary>,
}

fn load_cloud(input: &InputArgs) -> CliResult<LoadedCloud> {
    let format = input.resolved_format()?;
    let digest = FileDigest::of_file(&input.input)?;
    let (cloud, las_header) = match format {
        InputFormat::Las => {
            let (c, h) = read_las(&input.input).map_err(CliError::input(&input.input))?;
            (c, Some(h))
        }
        InputFormat::Csv => (read_csv(&input.input, input.has_label).map_err(CliError::input(&input.input))?, None),
    };
    let upstream = read_upstream(&input.input, &digest)?.into_iter().collect();
    let normalize = input.normalize.into();
    let cloud = normalize_unit_cube(cloud, normalize)?;
    Ok(LoadedCloud {
        cloud,
        digest,
        upstream,
        settings: InputSettings {
            format,
            has_label: input.has_label || format == InputFormat::Las,
            normalize,
        },
        las_header,
    })
}

fn cloud_details(loaded: &LoadedCloud) -> serde_json::Value {
    let mut d = json!({
        "points": loaded.cloud.len(),
        "labeled": loaded.cloud.has_labels(),
        "original_bounds": loaded.cloud.bounds,
    });
    if let Some(h) = &loaded.las_header {
        d["las_header"] = serde_json::to_value(h).expect("header serializes");
    }
    d
}

fn ingest(cli: &Cli, input: &InputArgs) -> CliResult<()> {
    let loaded = load_cloud(input)?;
    let mut config = RunConfig::new("ingest", cli.seed);
    config.input = Some(loaded.settings.clone());
    let path = out_path(cli, "cloud.csv")?;
    let mut csv = String::from(if loaded.cloud.has_labels() { "x,y,z,label\n" } else { "x,y,z\n" });
    for p in &loaded.cloud.points {
        match p.label.filter(|_| loaded.cloud.has_labels()) {
            Some(l) => csv.push_str(&format!("{},{},{},{l}\n", p.x, p.y, p.z)),
            None => csv.push_str(&format!("{},{},{}\n", p.x, p.y, p.z)),
        }
    }
    let details = cloud_details(&loaded);
    write_csv_artifact(&path, &csv, &config, vec![loaded.digest], loaded.upstream, details.clone())?;
    say!("{}", to_json(&details).trim_end());
    say!("wrote {}", path.display());
    Ok(())
}

fn synth(cli: &Cli, args: &SynthArgs) -> CliResult<()> {
    let params = SceneParams {
        classes: args.classes,
        points_per_class: args.points_per_class,
        separation: args.separation,
        seed: cli.seed,
    };
    let cloud = generate_scene(&params)?;
    let mut config = RunConfig::new("synth", cli.seed);
    config.synth = Some(params);
    let path = out_path(cli, "scene.csv")?;
    write_csv_artifact(&path, &scene_to_csv(&cloud), &config, vec![], vec![], json!({ "points": cloud.len() }))?;
    say!("wrote {} ({} points)", path.display(), cloud.len());
    Ok(())
}

fn neighborhood_spec(args: &NeighborhoodArgs) -> CliResult<NeighborhoodSpec> {
    let spec = NeighborhoodSpec {
        radius: args.radius,
        include_center: !args.no_include_center,
    };
    match args.target_neighbors {
        Some(0) => Err(Error::Configuration("target neighbor count must be at least 1".into()).into()),
        Some(_) => Ok(spec),
        None => {
            spec.validate()?;
            Ok(spec)
        }
    }
}

/// Writes `features.csv` and returns its path.
fn features(cli: &Cli, input: &InputArgs, args: &NeighborhoodArgs) -> CliResult<PathBuf> {
    let mut spec = neighborhood_spec(args)?;
    let loaded = load_cloud(input)?;
    if let Some(target) = args.target_neighbors {
        spec.radius = radius_for_median_neighbors(&loaded.cloud, target, RADIUS_SAMPLE)?;
        log::info!("radius {} gives a median neighborhood of about {target}", spec.radius);
    }
    let start = Instant::now();
    let matrix = extract_features(&loaded.cloud, &spec)?;
    log::info!("features for {} points in {:.2?}", matrix.rows(), start.elapsed());

    let mut config = RunConfig::new("features", cli.seed);
    config.input = Some(loaded.settings.clone());
    config.neighborhood = Some(NeighborhoodSettings {
        radius: spec.radius,
        include_center: spec.include_center,
        target_neighbors: args.target_neighbors,
    });
    let path = out_path(cli, "features.csv")?;
    let details = cloud_details(&loaded);
    write_csv_artifact(&path, &matrix.to_csv_string(), &config, vec![loaded.digest], loaded.upstream, details)?;
    say!("wrote {} ({} rows x {} columns)", path.display(), matrix.rows(), matrix.cols());
    Ok(path)
}

struct LoadedFeatures {
    matrix: FeatureMatrix,
    digest: FileDigest,
    upstream: Option<Manifest>,
}

fn load_features(path: &Path) -> CliResult<LoadedFeatures> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    let digest = FileDigest::of_bytes(path, &bytes);
    let text = String::from_utf8(bytes).map_err(|e| CliError::input(path)(Error::Format(e.to_string())))?;
    let matrix = FeatureMatrix::from_csv_str(&text).map_err(CliError::input(path))?;
    let upstream = read_upstream(path, &digest)?;
    Ok(LoadedFeatures {
        matrix,
        digest,
        upstream,
    })
}

fn pca(cli: &Cli, features: &Path, components: usize) -> CliResult<()> {
    let loaded = load_features(features)?;
    let model = fit_pca(&loaded.matrix.without_labels(), components)?;
    let projected = model.transform(&loaded.matrix)?;
    let mut config = RunConfig::new("pca", cli.seed);
    config.pca_components = Some(components);

    #[derive(Serialize)]
    struct PcaArtifact<'a> {
        config: &'a RunConfig,
        inputs: Vec<FileDigest>,
        upstream: Vec<Manifest>,
        model: &'a PcaModel,
    }
    let upstream: Vec<Manifest> = loaded.upstream.into_iter().collect();
    let model_path = out_path(cli, "pca_model.json")?;
    write_text(
        &model_path,
        &to_json(&PcaArtifact {
            config: &config,
            inputs: vec![loaded.digest.clone()],
            upstream: upstream.clone(),
            model: &model,
        }),
    )?;
    let csv_path = out_path(cli, "pca_features.csv")?;
    let total: f64 = fit_pca(&loaded.matrix, loaded.matrix.cols())?.eigenvalues.iter().sum();
    let explained: Vec<f64> = model.eigenvalues.iter().map(|v| v / total).collect();
    write_csv_artifact(
        &csv_path,
        &projected.to_csv_string(),
        &config,
        vec![loaded.digest],
        upstream,
        json!({ "eigenvalues": model.eigenvalues, "explained_variance_ratio": explained }),
    )?;
    say!("eigenvalues: {:?}", model.eigenvalues);
    say!("wrote {} and {}", model_path.display(), csv_path.display());
    Ok(())
}

/// KNN keeps no fitted state beyond its training rows, so the artifact
/// points at the training CSV by digest instead of copying it.
#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum TrainedModel {
    Knn { training: FileDigest, k: usize },
    Rf { forest: RandomForestModel },
}

fn train(
    cli: &Cli,
    features: &Path,
    choice: ClassifierChoice,
    components: Option<usize>,
    args: &ModelArgs,
) -> CliResult<()> {
    let classifier = match args.classifiers(choice, cli.seed).as_slice() {
        [one] => *one,
        _ => return Err(CliError::Usage("train takes a single classifier: knn or rf".into())),
    };
    let loaded = load_features(features)?;
    loaded.matrix.require_labels()?;
    let pca = components.map(|n| fit_pca(&loaded.matrix.without_labels(), n)).transpose()?;
    let training = match &pca {
        Some(p) => p.transform(&loaded.matrix)?,
        None => loaded.matrix.clone(),
    };
    let start = Instant::now();
    let (model, predictions) = match classifier {
        ClassifierConfig::Knn { k } => {
            let m = KnnModel::fit(training.clone(), k)?;
            let p = m.predict(&training.without_labels())?;
            (TrainedModel::Knn { training: loaded.digest.clone(), k }, p)
        }
        ClassifierConfig::Rf(cfg) => {
            let forest = rf_fit(&training, &cfg)?;
            let p = forest.predict(&training.without_labels())?;
            (TrainedModel::Rf { forest }, p)
        }
    };
    log::info!("trained {} in {:.2?}", classifier.name(), start.elapsed());
    let labels = training.require_labels()?;
    let accuracy = predictions.iter().zip(labels).filter(|(p, l)| p.label == **l).count() as f64 / labels.len() as f64;

    let mut config = RunConfig::new("train", cli.seed);
    config.train = Some(TrainSettings {
        classifier,
        n_components: components,
    });
    #[derive(Serialize)]
    struct ModelArtifact<'a> {
        config: &'a RunConfig,
        inputs: Vec<FileDigest>,
        upstream: Vec<Manifest>,
        training_accuracy: f64,
        #[serde(skip_serializing_if = "Option::is_none")]
        pca: Option<&'a PcaModel>,
        model: &'a TrainedModel,
    }
    let path = out_path(cli, "model.json")?;
    write_text(
        &path,
        &to_json(&ModelArtifact {
            config: &config,
            inputs: vec![loaded.digest],
            upstream: loaded.upstream.into_iter().collect(),
            training_accuracy: accuracy,
            pca: pca.as_ref(),
            model: &model,
        }),
    )?;
    say!("{} training accuracy {accuracy:.4}", classifier.name());
    say!("wrote {}", path.display());
    Ok(())
}

fn check_eval_args(eval: &EvalArgs) -> CliResult<()> {
    if eval.folds < 2 {
        return Err(Error::Configuration(format!("need at least 2 folds, got {}", eval.folds)).into());
    }
    for c in eval.model.classifiers(eval.classifier, 0) {
        match c {
            ClassifierConfig::Knn { k: 0 } => {
                return Err(Error::Configuration("k must be at least 1".into()).into());
            }
            ClassifierConfig::Rf(cfg) => cfg.validate()?,
            _ => {}
        }
    }
    Ok(())
}

fn tables(choice: TableChoice) -> Vec<u8> {
    match choice {
        TableChoice::One => vec![1],
        TableChoice::Two => vec![2],
        TableChoice::All => vec![1, 2],
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ReportsArtifact {
    config: RunConfig,
    inputs: Vec<FileDigest>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    upstream: Vec<Manifest>,
    reports: Vec<EvaluationReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    reference_comparison: Option<ReferenceComparison>,
}

fn evaluate(cli: &Cli, features: &Path, eval: &EvalArgs) -> CliResult<()> {
    check_eval_args(eval)?;
    let loaded = load_features(features)?;
    let matrix = &loaded.matrix;
    matrix.require_labels()?;
    let tables = tables(eval.table);
    let (lo, hi) = eval.components;
    if tables.contains(&2) && hi > matrix.cols() {
        return Err(Error::Dimension(format!(
            "component range {lo}..{hi} exceeds the {} feature columns",
            matrix.cols()
        ))
        .into());
    }
    let classifiers = eval.model.classifiers(eval.classifier, cli.seed);
    let plan = CrossValPlan {
        folds: eval.folds,
        seed: cli.seed,
        stratified: true,
    };
    let f1 = eval.f1.into();

    let start = Instant::now();
    let mut reports = Vec::new();
    if tables.contains(&1) {
        reports.extend(feature_set_experiments(matrix, &classifiers, &plan, f1)?);
    }
    if tables.contains(&2) {
        reports.extend(component_experiments(matrix, lo..=hi, &classifiers, &plan, f1)?);
    }
    log::info!("{} cross-validated pipelines in {:.2?}", reports.len(), start.elapsed());
    let upstream_config = loaded
        .upstream
        .as_ref()
        .map(|m| serde_json::to_value(&m.config).expect("config serializes"))
        .unwrap_or(serde_json::Value::Null);
    for r in &mut reports {
        r.config.upstream = upstream_config.clone();
    }

    let mut config = RunConfig::new("evaluate", cli.seed);
    config.evaluation = Some(EvaluationSettings {
        tables: tables.clone(),
        components: tables.contains(&2).then_some((lo, hi)),
        classifiers,
        folds: eval.folds,
        f1,
    });
    let inputs = vec![loaded.digest];
    let upstream: Vec<Manifest> = loaded.upstream.into_iter().collect();
    let artifact = ReportsArtifact {
        config: config.clone(),
        inputs: inputs.clone(),
        upstream: upstream.clone(),
        reference_comparison: reference_comparison(&reports),
        reports,
    };
    write_text(&out_path(cli, "reports.json")?, &to_json(&artifact))?;
    write_tables(cli, &artifact, &config, &inputs, &upstream)?;
    print_tables(&artifact);
    Ok(())
}

fn write_tables(
    cli: &Cli,
    artifact: &ReportsArtifact,
    config: &RunConfig,
    inputs: &[FileDigest],
    upstream: &[Manifest],
) -> CliResult<()> {
    let rendered = render_report(&artifact.reports);
    let csvs = [
        ("table1.csv", &rendered.feature_table_csv),
        ("table2.csv", &rendered.component_table_csv),
        ("plot.csv", &rendered.plot_csv),
    ];
    for (name, body) in csvs {
        if let Some(body) = body {
            let path = out_path(cli, name)?;
            write_csv_artifact(&path, body, config, inputs.to_vec(), upstream.to_vec(), serde_json::Value::Null)?;
        }
    }
    for (name, body) in [("table1.txt", &rendered.feature_table_text), ("table2.txt", &rendered.component_table_text)] {
        if let Some(body) = body {
            write_text(&out_path(cli, name)?, body)?;
        }
    }
    Ok(())
}

fn print_tables(artifact: &ReportsArtifact) {
    let rendered = render_report(&artifact.reports);
    if let Some(t) = rendered.feature_table_text {
        say!("F1 by feature set\n{t}");
    }
    if let Some(t) = rendered.component_table_text {
        say!("F1 by number of principal components\n{t}");
    }
    if let Some(c) = &artifact.reference_comparison {
        say!("{}", c.summary());
    }
}

fn report(path: &Path) -> CliResult<()> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let artifact: ReportsArtifact = serde_json::from_str(&text).map_err(|source| CliError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    print_tables(&artifact);
    Ok(())
}
