//! Pipeline stages: dataset generation, per-output training, pruning,
//! expression extraction, and evaluation reports.
//!
//! Every stage reads its inputs from the output directory and writes its
//! artifacts back there, so stages can run standalone or chained by
//! `pipeline`. All artifacts embed the schema version and the hash of the
//! effective configuration. With a fixed seed and config, every byte
//! written is reproducible.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use dpasr_core::datasets::{
    sample_dataset, sample_test_points, DataSlice, Dataset, Split,
};
use dpasr_core::metrics::{self, EvalReport};
use dpasr_core::model::ModelFile;
use dpasr_core::optimizer::{self, TrainReport};
use dpasr_core::pruner::{self, PruneResult};
use dpasr_core::symexpr::{self, SymExpr};
use dpasr_core::{EvalStats, ProgramGraph, WeightStore};

use crate::config::{RunConfig, ARTIFACT_SCHEMA_VERSION};
use crate::error::CliError;

pub struct Paths {
    out_dir: PathBuf,
}

impl Paths {
    pub fn new(out_dir: &Path) -> Self {
        Paths { out_dir: out_dir.to_path_buf() }
    }

    pub fn dataset_csv(&self) -> PathBuf {
        self.out_dir.join("dataset.csv")
    }

    pub fn dataset_manifest(&self) -> PathBuf {
        self.out_dir.join("dataset_manifest.json")
    }

    pub fn model(&self, var: &str) -> PathBuf {
        self.out_dir.join(format!("model_{var}.json"))
    }

    pub fn pruned_model(&self, var: &str) -> PathBuf {
        self.out_dir.join(format!("model_{var}_pruned.json"))
    }

    pub fn train_curve(&self, var: &str) -> PathBuf {
        self.out_dir.join(format!("train_{var}.csv"))
    }

    pub fn prune_log(&self, var: &str) -> PathBuf {
        self.out_dir.join(format!("prune_{var}.csv"))
    }

    pub fn expressions(&self) -> PathBuf {
        self.out_dir.join("expressions.txt")
    }

    pub fn metrics_csv(&self) -> PathBuf {
        self.out_dir.join("metrics.csv")
    }

    pub fn report_json(&self) -> PathBuf {
        self.out_dir.join("report.json")
    }

    fn ensure_dir(&self) -> Result<(), CliError> {
        fs::create_dir_all(&self.out_dir)
            .map_err(|e| CliError::io(format!("cannot create {}: {e}", self.out_dir.display())))
    }
}

fn provenance(config_hash: &str) -> String {
    format!("schema_version={ARTIFACT_SCHEMA_VERSION} config_hash={config_hash}")
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::io(format!("cannot write {}: {e}", path.display())))
}

#[derive(Serialize, serde::Deserialize)]
struct DatasetManifest {
    schema_version: u32,
    config_hash: String,
    system: String,
    seed: u64,
    variables: Vec<String>,
    outputs: Vec<String>,
    rows: usize,
    train_rows: usize,
    validation_rows: usize,
    test_rows: usize,
}

pub fn cmd_dataset(config: &RunConfig, paths: &Paths) -> Result<(), CliError> {
    paths.ensure_dir()?;
    let system = config.system()?;
    let hash = config.config_hash();
    log_info!("sampling dataset for {}", system.id());
    let dataset = sample_dataset(system, &config.sample_params(), config.seed)?;
    let manifest = DatasetManifest {
        schema_version: ARTIFACT_SCHEMA_VERSION,
        config_hash: hash.clone(),
        system: system.id().to_string(),
        seed: config.seed,
        variables: dataset.variable_names.clone(),
        outputs: dataset.output_names(),
        rows: dataset.rows(),
        train_rows: dataset.split_count(Split::Train),
        validation_rows: dataset.split_count(Split::Validation),
        test_rows: dataset.split_count(Split::Test),
    };
    let mut buf = Vec::new();
    dataset.write_csv(&mut buf, Some(&provenance(&hash)))?;
    fs::write(paths.dataset_csv(), &buf)
        .map_err(|e| CliError::io(format!("cannot write dataset: {e}")))?;
    write_text(
        &paths.dataset_manifest(),
        &(serde_json::to_string_pretty(&manifest).expect("manifest serialization") + "\n"),
    )?;
    log_info!(
        "dataset: {} rows ({} train / {} validation / {} test)",
        manifest.rows,
        manifest.train_rows,
        manifest.validation_rows,
        manifest.test_rows
    );
    Ok(())
}

fn load_dataset(config: &RunConfig, paths: &Paths) -> Result<Dataset, CliError> {
    let manifest_path = paths.dataset_manifest();
    if !manifest_path.exists() {
        return Err(CliError::io(format!(
            "dataset manifest {} not found; run `dpasr dataset --config ...` first",
            manifest_path.display()
        )));
    }
    let manifest: DatasetManifest = serde_json::from_str(
        &fs::read_to_string(&manifest_path)
            .map_err(|e| CliError::io(format!("cannot read {}: {e}", manifest_path.display())))?,
    )
    .map_err(|e| CliError::io(format!("corrupt manifest {}: {e}", manifest_path.display())))?;
    if manifest.config_hash != config.config_hash() {
        log_warn!(
            "dataset was generated under config hash {} but the current config hashes to {}",
            manifest.config_hash,
            config.config_hash()
        );
    }
    let file = fs::File::open(paths.dataset_csv())
        .map_err(|e| CliError::io(format!("cannot open {}: {e}", paths.dataset_csv().display())))?;
    let dataset = Dataset::read_csv(std::io::BufReader::new(file), manifest.variables.len())?;
    Ok(dataset)
}

/// Per-output work shared by training and pruning: the architecture plus
/// the train/validation slices in terminal order.
struct OutputTask {
    graph: ProgramGraph,
    train_slice: DataSlice,
    validation_slice: DataSlice,
}

fn output_task(config: &RunConfig, dataset: &Dataset, output: &str) -> Result<OutputTask, CliError> {
    let graph = ProgramGraph::build(&config.grammar, config.depth)
        .map_err(|e| CliError::config(e.to_string()))?;
    let terminals = config.grammar.terminals();
    let train_slice = dataset.slice(output, Split::Train, terminals)?;
    let validation_slice = dataset.slice(output, Split::Validation, terminals)?;
    Ok(OutputTask { graph, train_slice, validation_slice })
}

fn write_train_curve(path: &Path, report: &TrainReport, hash: &str) -> Result<(), CliError> {
    let mut out = String::new();
    out.push_str(&format!("# {}\n", provenance(hash)));
    out.push_str("epoch,train_loss,val_rel_l2,lr\n");
    for e in &report.history {
        out.push_str(&format!("{},{},{},{}\n", e.epoch, e.train_loss, e.val_score, e.lr));
    }
    write_text(path, &out)
}

fn write_prune_log(path: &Path, result: &PruneResult, hash: &str) -> Result<(), CliError> {
    let mut out = String::new();
    out.push_str(&format!("# {}\n", provenance(hash)));
    out.push_str("attempt_index,weight_index,accepted,score\n");
    for (i, a) in result.attempts.iter().enumerate() {
        out.push_str(&format!("{},{},{},{}\n", i, a.weight_index, a.accepted, a.score_after_finetune));
    }
    write_text(path, &out)
}

/// Runs `work` over the outputs, in parallel when requested. Results keep
/// the configured output order; the first error wins.
fn for_each_output<F>(config: &RunConfig, parallel: bool, work: F) -> Result<(), CliError>
where
    F: Fn(usize, &str) -> Result<(), CliError> + Sync,
{
    if parallel && config.outputs.len() > 1 {
        std::thread::scope(|scope| {
            let handles: Vec<_> = config
                .outputs
                .iter()
                .enumerate()
                .map(|(i, output)| scope.spawn({ let work = &work; move || work(i, output) }))
                .collect();
            for handle in handles {
                handle.join().expect("output worker panicked")?;
            }
            Ok(())
        })
    } else {
        for (i, output) in config.outputs.iter().enumerate() {
            work(i, output)?;
        }
        Ok(())
    }
}

pub fn cmd_train(config: &RunConfig, paths: &Paths, parallel: bool) -> Result<(), CliError> {
    paths.ensure_dir()?;
    let dataset = load_dataset(config, paths)?;
    let hash = config.config_hash();
    let train_config = config.train_config();
    for_each_output(config, parallel, |index, output| {
        let task = output_task(config, &dataset, output)?;
        // Independent init per output variable, deterministic in the run seed.
        let var_config = dpasr_core::optimizer::TrainConfig {
            seed: train_config.seed.wrapping_add(index as u64),
            ..train_config.clone()
        };
        let init = optimizer::glorot_init(&task.graph, var_config.seed);
        log_info!(
            "training `{output}`: {} weights, {} train rows, max {} epochs",
            task.graph.weight_count(),
            task.train_slice.targets.len(),
            var_config.max_epochs
        );
        let start = std::time::Instant::now();
        let (weights, report) =
            optimizer::train(&task.graph, init, &task.train_slice, &task.validation_slice, &var_config)?;
        log_info!(
            "trained `{output}` in {:.1?}: {} epochs ({}), best validation rel-L2 {:.4e}",
            start.elapsed(),
            report.epochs_run,
            report.stop_reason,
            report.best_validation_score
        );
        ModelFile::from_parts(&task.graph, &weights, Some(hash.clone()))
            .save(&paths.model(output))?;
        write_train_curve(&paths.train_curve(output), &report, &hash)?;
        Ok(())
    })
}

fn load_model(path: &Path, config: &RunConfig) -> Result<(ProgramGraph, WeightStore), CliError> {
    if !path.exists() {
        return Err(CliError::io(format!(
            "model {} not found; run the earlier pipeline stages first",
            path.display()
        )));
    }
    let model = ModelFile::load(path)?;
    if model.grammar != config.grammar || model.depth != config.depth {
        return Err(CliError::config(format!(
            "model {} was built for a different grammar or depth than the current config",
            path.display()
        )));
    }
    Ok(model.instantiate()?)
}

pub fn cmd_prune(config: &RunConfig, paths: &Paths, parallel: bool) -> Result<(), CliError> {
    paths.ensure_dir()?;
    let dataset = load_dataset(config, paths)?;
    let hash = config.config_hash();
    let prune_config = config.prune_config();
    for_each_output(config, parallel, |_, output| {
        let task = output_task(config, &dataset, output)?;
        let (graph, weights) = load_model(&paths.model(output), config)?;
        log_info!(
            "pruning `{output}`: {} weights, fine-tune {} epochs per attempt",
            graph.weight_count(),
            prune_config.finetune_epochs
        );
        let start = std::time::Instant::now();
        // Fine-tune on the training split, score on validation.
        let result = pruner::prune(
            &graph,
            weights,
            &task.train_slice,
            &task.validation_slice,
            &prune_config,
        )?;
        log_info!(
            "pruned `{output}` in {:.1?}: {} -> {} weights, score {:.4e} -> {:.4e}",
            start.elapsed(),
            graph.weight_count(),
            result.surviving_count,
            result.initial_score,
            result.final_score
        );
        ModelFile::from_parts(&graph, &result.weights, Some(hash.clone()))
            .save(&paths.pruned_model(output))?;
        write_prune_log(&paths.prune_log(output), &result, &hash)?;
        Ok(())
    })
}

/// Extracted and simplified expression of a (preferably pruned) model.
fn expression_of(graph: &ProgramGraph, weights: &WeightStore) -> SymExpr {
    symexpr::simplify(&symexpr::extract(graph, weights))
}

fn expression_section(var: &str, graph: &ProgramGraph, weights: &WeightStore) -> String {
    let expr = expression_of(graph, weights);
    format!(
        "[{var}]\nexpression: {}\nprefix: {}\nsurviving_params: {}\n",
        symexpr::render(&expr, 3),
        symexpr::to_prefix(&expr),
        weights.surviving_count(),
    )
}

pub fn cmd_extract(config: &RunConfig, paths: &Paths) -> Result<(), CliError> {
    paths.ensure_dir()?;
    let hash = config.config_hash();
    let mut out = format!("# {}\n", provenance(&hash));
    for output in &config.outputs {
        let pruned_path = paths.pruned_model(output);
        let (graph, weights) = if pruned_path.exists() {
            load_model(&pruned_path, config)?
        } else {
            log_warn!("no pruned model for `{output}`; extracting from the unpruned model");
            load_model(&paths.model(output), config)?
        };
        out.push_str(&expression_section(output, &graph, &weights));
        out.push('\n');
    }
    write_text(&paths.expressions(), &out)
}

/// Scope limitations recorded in every results report.
pub const SCOPE_NOTES: [&str; 3] = [
    "Columns for PINN surrogates are not produced: training data comes from analytical solutions and a finite-difference reference solver, not from a neural PDE solver.",
    "Columns for the third-party symbolic-regression baselines (AI-Feynman, SymbolicGPT, DSR) are not produced: those systems are not part of this artifact.",
    "Air-preheater error magnitudes are not comparable to published figures: the physical parameters (NTU, Peclet numbers, inlet temperatures) of the reference case are not public, so the bundled defaults define a self-contained benchmark only.",
];

#[derive(Serialize)]
struct ReportFile {
    schema_version: u32,
    config_hash: String,
    system: String,
    headline_metric: String,
    results: Vec<EvalReport>,
    scope_notes: Vec<String>,
}

pub fn cmd_report(config: &RunConfig, paths: &Paths, parallel: bool) -> Result<(), CliError> {
    paths.ensure_dir()?;
    let system = config.system()?;
    let hash = config.config_hash();
    let params = config.sample_params();
    log_info!("evaluating on {} held-out points", config.test_points());
    let test_set = sample_test_points(system, &params, config.test_points(), config.seed)?;
    let terminals = config.grammar.terminals();

    let results: std::sync::Mutex<Vec<(usize, EvalReport)>> = std::sync::Mutex::new(Vec::new());
    for_each_output(config, parallel, |index, output| {
        let slice = test_set.slice(output, Split::Test, terminals)?;
        let (graph, unpruned) = load_model(&paths.model(output), config)?;
        let (_, pruned) = load_model(&paths.pruned_model(output), config)?;
        let unpruned_preds = graph
            .batch_forward(&unpruned, &slice.inputs)
            .map_err(|e| CliError::numeric(e.to_string()))?;
        let (pruned_preds, stats): (Vec<f64>, EvalStats) = graph
            .batch_forward_with_stats(&pruned, &slice.inputs)
            .map_err(|e| CliError::numeric(e.to_string()))?;
        if stats.exp_clamped > 0 {
            log_warn!(
                "`{output}`: exp clamp fired {} times during final evaluation",
                stats.exp_clamped
            );
        }
        let expr = expression_of(&graph, &pruned);
        let report = EvalReport {
            variable: output.to_string(),
            headline_metric: system.headline_metric().to_string(),
            unpruned_relative_l2: metrics::relative_l2(&unpruned_preds, &slice.targets)
                .map_err(|e| CliError::numeric(e.to_string()))?,
            pruned_relative_l2: metrics::relative_l2(&pruned_preds, &slice.targets)
                .map_err(|e| CliError::numeric(e.to_string()))?,
            unpruned_mae: metrics::mae(&unpruned_preds, &slice.targets)
                .map_err(|e| CliError::numeric(e.to_string()))?,
            pruned_mae: metrics::mae(&pruned_preds, &slice.targets)
                .map_err(|e| CliError::numeric(e.to_string()))?,
            unpruned_params: graph.weight_count(),
            surviving_params: pruned.surviving_count(),
            reduction_fraction: EvalReport::reduction_fraction(
                graph.weight_count(),
                pruned.surviving_count(),
            ),
            expression_text: symexpr::render(&expr, 3),
            exp_clamp_events: stats.exp_clamped,
        };
        results.lock().expect("report lock").push((index, report));
        Ok(())
    })?;
    let mut results = results.into_inner().expect("report lock");
    results.sort_by_key(|(i, _)| *i);
    let results: Vec<EvalReport> = results.into_iter().map(|(_, r)| r).collect();

    // metrics.csv mirrors the published table shape: one row per output,
    // one column per implemented method.
    let mut csv = String::new();
    csv.push_str(&format!("# {}\n", provenance(&hash)));
    for note in SCOPE_NOTES {
        csv.push_str(&format!("# note: {note}\n"));
    }
    csv.push_str(
        "system,variable,headline_metric,unpruned_rel_l2,pruned_rel_l2,unpruned_mae,pruned_mae,unpruned_params,surviving_params,reduction_fraction\n",
    );
    for r in &results {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            system.id(),
            r.variable,
            r.headline_metric,
            r.unpruned_relative_l2,
            r.pruned_relative_l2,
            r.unpruned_mae,
            r.pruned_mae,
            r.unpruned_params,
            r.surviving_params,
            r.reduction_fraction
        ));
    }
    write_text(&paths.metrics_csv(), &csv)?;

    let report = ReportFile {
        schema_version: ARTIFACT_SCHEMA_VERSION,
        config_hash: hash.clone(),
        system: system.id().to_string(),
        headline_metric: system.headline_metric().to_string(),
        results,
        scope_notes: SCOPE_NOTES.iter().map(|s| s.to_string()).collect(),
    };
    write_text(
        &paths.report_json(),
        &(serde_json::to_string_pretty(&report).expect("report serialization") + "\n"),
    )?;
    // The expression report is part of the results bundle.
    cmd_extract(config, paths)?;
    for r in &report.results {
        log_info!(
            "`{}`: rel-L2 {:.4e} -> {:.4e}, params {} -> {} ({:.1}% reduction)",
            r.variable,
            r.unpruned_relative_l2,
            r.pruned_relative_l2,
            r.unpruned_params,
            r.surviving_params,
            100.0 * r.reduction_fraction
        );
    }
    Ok(())
}

pub fn cmd_pipeline(config: &RunConfig, paths: &Paths, parallel: bool) -> Result<(), CliError> {
    cmd_dataset(config, paths)?;
    cmd_train(config, paths, parallel)?;
    cmd_prune(config, paths, parallel)?;
    cmd_extract(config, paths)?;
    cmd_report(config, paths, parallel)
}
