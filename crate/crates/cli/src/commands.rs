use std::path::{Path, PathBuf};
use std::time::Instant;

use accsev::eval::{
    auc, compare_models, confusion, cv_auc, metrics, roc_curve, stratified_folds, MetricsReport,
};
use accsev::forest::{
    importance_mdg, read_model, train_forest_with, write_model, ForestConfig, ForestModel,
    Importance, TrainOptions,
};
use accsev::partition::{rebalance, train_test_split};
use accsev::prep::clean;
use accsev::screening::screen_all;
use accsev::table::{group_count, missingness_report, read_csv, write_csv_to, ColumnTable};
use serde_json::{json, Value};

use crate::config::{PipelineConfig, Stage};
use crate::error::CliError;
use crate::manifest::{digest, RunManifest, StageRecord};
use crate::reference::{self, Divergence};

pub const CLEANED: &str = "cleaned.csv";
pub const TRAIN: &str = "train.csv";
pub const TEST: &str = "test.csv";
pub const BALANCED: &str = "train_balanced.csv";
pub const MODEL: &str = "model.rf";

/// Resolved configuration for one invocation; artifacts live in `cfg.out_dir`.
pub struct Ctx {
    pub cfg: PipelineConfig,
}

/// One command invocation: tracks what it read and wrote, then records
/// itself in the manifest.
struct Run<'a> {
    ctx: &'a Ctx,
    command: &'static str,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    started: Instant,
}

impl<'a> Run<'a> {
    fn start(ctx: &'a Ctx, command: &'static str) -> Result<Self, CliError> {
        Ok(Run {
            ctx,
            command,
            inputs: Vec::new(),
            outputs: Vec::new(),
            started: Instant::now(),
        })
    }

    /// An artifact produced by an earlier command.
    fn artifact(&mut self, name: &str, producer: &str) -> Result<PathBuf, CliError> {
        let path = self.ctx.out().join(name);
        if !path.is_file() {
            return Err(CliError::missing_artifact(&path, producer));
        }
        self.inputs.push(path.clone());
        Ok(path)
    }

    fn table(&mut self, name: &str, producer: &str) -> Result<ColumnTable, CliError> {
        let path = self.artifact(name, producer)?;
        read_csv(&path, None).map_err(|e| CliError::stage(self.command, e))
    }

    fn model(&mut self) -> Result<ForestModel, CliError> {
        let path = self.artifact(MODEL, "train")?;
        let f = std::fs::File::open(&path)
            .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
        read_model(std::io::BufReader::new(f)).map_err(|e| CliError::stage(self.command, e))
    }

    fn write(&mut self, name: &str, bytes: impl AsRef<[u8]>) -> Result<(), CliError> {
        let path = self.ctx.out().join(name);
        if self.inputs.iter().any(|p| same_file(p, &path)) {
            return Err(CliError::usage(format!(
                "refusing to overwrite input {}",
                path.display()
            )));
        }
        if self.outputs.is_empty() {
            std::fs::create_dir_all(self.ctx.out()).map_err(|e| CliError::io(self.ctx.out(), e))?;
        }
        std::fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        self.outputs.push(path);
        Ok(())
    }

    fn write_table(&mut self, name: &str, t: &ColumnTable) -> Result<(), CliError> {
        let mut buf = Vec::new();
        write_csv_to(t, &mut buf).map_err(|e| CliError::stage(self.command, e))?;
        self.write(name, buf)
    }

    /// Tab-separated report headed by the seed.
    fn write_tsv(&mut self, name: &str, body: &str) -> Result<(), CliError> {
        let text = format!("# seed={}\n{body}", self.ctx.cfg.seed);
        self.write(name, text)
    }

    /// JSON report wrapped as `{"seed": .., "report": ..}`.
    fn write_json(&mut self, name: &str, report: Value) -> Result<(), CliError> {
        let doc = json!({ "seed": self.ctx.cfg.seed, "report": report });
        let text = serde_json::to_string_pretty(&doc).expect("json serializes") + "\n";
        self.write(name, text)
    }

    fn finish(self) -> Result<(), CliError> {
        let out = self.ctx.out();
        let record = StageRecord {
            command: self.command.to_string(),
            seed: self.ctx.cfg.seed,
            inputs: self
                .inputs
                .iter()
                .map(|p| digest(p))
                .collect::<Result<_, _>>()?,
            outputs: self
                .outputs
                .iter()
                .map(|p| digest(p))
                .collect::<Result<_, _>>()?,
            seconds: self.started.elapsed().as_secs_f64(),
        };
        let mut manifest = RunManifest::open(out, &self.ctx.cfg)?;
        manifest.record(record);
        manifest.save(out)
    }
}

fn same_file(a: &Path, b: &Path) -> bool {
    match (a.canonicalize(), b.canonicalize()) {
        (Ok(x), Ok(y)) => x == y,
        _ => false,
    }
}

fn parse_json(text: String) -> Value {
    serde_json::from_str(&text).expect("library emits valid json")
}

/// Lowercase, alphanumeric file stem for a column name.
fn file_stem(column: &str) -> String {
    let s: String = column
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() {
                c.to_ascii_lowercase()
            } else {
                '_'
            }
        })
        .collect();
    s.trim_matches('_').to_string()
}

impl Ctx {
    pub fn out(&self) -> &Path {
        &self.cfg.out_dir
    }

    fn train_options(&self) -> TrainOptions {
        TrainOptions {
            features: Some(self.cfg.features.clone()),
            positive: Some(self.cfg.positive.clone()),
        }
    }

    pub fn clean(&self, input: Option<&Path>) -> Result<String, CliError> {
        let input = input.or(self.cfg.input.as_deref()).ok_or_else(|| {
            CliError::usage("no input: pass --input or set `input` in the config")
        })?;
        if !input.is_file() {
            return Err(CliError::usage(format!(
                "input file not found: {}",
                input.display()
            )));
        }
        let mut run = Run::start(self, "clean")?;
        run.inputs.push(input.to_path_buf());
        let raw = read_csv(input, None).map_err(|e| CliError::stage("clean", e))?;
        let (cleaned, summary) =
            clean(&raw, &self.cfg.cleaning).map_err(|e| CliError::stage("clean", e))?;
        run.write_table(CLEANED, &cleaned)?;
        run.write(
            "clean_summary.txt",
            format!("# seed={}\n{}", self.cfg.seed, summary.to_text()),
        )?;
        run.write_json("clean_summary.json", parse_json(summary.to_json()))?;
        let missing = missingness_report(&cleaned);
        run.write_tsv("missingness.tsv", &missing.to_tsv())?;
        run.finish()?;
        Ok(format!(
            "clean: {} -> {} rows, {} columns",
            summary.rows_before, summary.rows_after, summary.columns_after
        ))
    }

    pub fn eda(&self) -> Result<String, CliError> {
        let mut run = Run::start(self, "eda")?;
        let t = run.table(CLEANED, "clean")?;
        let mut all = serde_json::Map::new();
        for col in &self.cfg.eda_columns {
            let freq = group_count(&t, col).map_err(|e| CliError::stage("eda", e))?;
            run.write_tsv(&format!("eda_{}.tsv", file_stem(col)), &freq.to_tsv())?;
            all.insert(col.clone(), parse_json(freq.to_json()));
        }
        run.write_json("eda.json", Value::Object(all))?;
        run.finish()?;
        Ok(format!(
            "eda: {} frequency tables",
            self.cfg.eda_columns.len()
        ))
    }

    pub fn screen(&self) -> Result<String, CliError> {
        let mut run = Run::start(self, "screen")?;
        let t = run.table(CLEANED, "clean")?;
        let report = screen_all(&t, &self.cfg.target, self.cfg.alpha)
            .map_err(|e| CliError::stage("screen", e))?;
        run.write_tsv("screening.tsv", &report.to_tsv())?;
        run.write_json("screening.json", parse_json(report.to_json()))?;
        run.finish()?;
        Ok(format!("screen: {} variables tested", report.rows.len()))
    }

    pub fn split(&self) -> Result<String, CliError> {
        let mut run = Run::start(self, "split")?;
        let t = run.table(CLEANED, "clean")?;
        let s = train_test_split(
            &t,
            self.cfg.split_ratio,
            self.cfg.stage_seed(Stage::Split),
            self.cfg.stratify.then_some(self.cfg.target.as_str()),
        )
        .map_err(|e| CliError::stage("split", e))?;
        run.write_table(TRAIN, &s.train)?;
        run.write_table(TEST, &s.test)?;
        run.write_json(
            "split.json",
            json!({
                "ratio": s.ratio,
                "stratified": self.cfg.stratify,
                "train_rows": s.train_rows.len(),
                "test_rows": s.test_rows.len(),
            }),
        )?;
        run.finish()?;
        Ok(format!(
            "split: {} train, {} test rows",
            s.train_rows.len(),
            s.test_rows.len()
        ))
    }

    pub fn balance(&self) -> Result<String, CliError> {
        let mut run = Run::start(self, "balance")?;
        let t = run.table(TRAIN, "split")?;
        let balanced = rebalance(&t, &self.cfg.target, &self.cfg.rebalance_config())
            .map_err(|e| CliError::stage("balance", e))?;
        let before =
            group_count(&t, &self.cfg.target).map_err(|e| CliError::stage("balance", e))?;
        let after =
            group_count(&balanced, &self.cfg.target).map_err(|e| CliError::stage("balance", e))?;
        let mut body = String::from("class\tbefore\tafter\n");
        for e in &before.entries {
            let n = after
                .entries
                .iter()
                .find(|a| a.key == e.key)
                .map_or(0, |a| a.count);
            body.push_str(&format!("{}\t{}\t{}\n", e.key, e.count, n));
        }
        run.write_table(BALANCED, &balanced)?;
        run.write_tsv("balance.tsv", &body)?;
        run.finish()?;
        Ok(format!(
            "balance: {} -> {} rows ({:?})",
            t.row_count(),
            balanced.row_count(),
            self.cfg.rebalance.mode
        ))
    }

    fn fit(
        &self,
        t: &ColumnTable,
        cfg: &ForestConfig,
        stage: &str,
    ) -> Result<ForestModel, CliError> {
        train_forest_with(t, &self.cfg.target, &self.train_options(), cfg)
            .map_err(|e| CliError::stage(stage, e))
    }

    pub fn train(&self) -> Result<String, CliError> {
        let mut run = Run::start(self, "train")?;
        let t = run.table(BALANCED, "balance")?;
        let model = self.fit(&t, &self.cfg.forest_config(), "train")?;
        let mut buf = Vec::new();
        write_model(&model, &mut buf).map_err(|e| CliError::compute(format!("train: {e}")))?;
        run.write(MODEL, buf)?;
        run.write_json(
            "train.json",
            json!({
                "rows": t.row_count(),
                "features": model.features.len(),
                "trees": model.n_trees(),
                "positive": model.positive_label(),
                "oob_error": model.oob_error,
                "tied_leaves": model.tied_leaves(),
            }),
        )?;
        run.finish()?;
        Ok(format!(
            "train: {} trees on {} rows, {} features",
            model.n_trees(),
            t.row_count(),
            model.features.len()
        ))
    }

    fn labels(&self, t: &ColumnTable, stage: &str) -> Result<Vec<String>, CliError> {
        let col = t
            .require(&self.cfg.target)
            .map_err(|e| CliError::stage(stage, e))?;
        col.cells()
            .enumerate()
            .map(|(i, c)| {
                c.render().ok_or_else(|| {
                    CliError::usage(format!("{stage}: missing {} at row {i}", self.cfg.target))
                })
            })
            .collect()
    }

    fn score(
        &self,
        model: &ForestModel,
        test: &ColumnTable,
        stage: &str,
    ) -> Result<(Vec<f64>, Vec<String>, MetricsReport), CliError> {
        let scores = model
            .predict_proba(test)
            .map_err(|e| CliError::stage(stage, e))?;
        let actual = self.labels(test, stage)?;
        let predicted: Vec<&str> = scores
            .iter()
            .map(|&s| model.label_for(s, self.cfg.threshold))
            .collect();
        let actual_ref: Vec<&str> = actual.iter().map(String::as_str).collect();
        let cm = confusion(&actual_ref, &predicted, &self.cfg.positive)
            .map_err(|e| CliError::stage(stage, e))?;
        let report = metrics(&cm, self.cfg.confidence).map_err(|e| CliError::stage(stage, e))?;
        Ok((scores, actual, report))
    }

    /// Returns the metrics and the single-split AUC.
    pub fn evaluate(&self) -> Result<(MetricsReport, f64), CliError> {
        let mut run = Run::start(self, "evaluate")?;
        let model = run.model()?;
        let test = run.table(TEST, "split")?;
        let (scores, actual, report) = self.score(&model, &test, "evaluate")?;
        let positive = &self.cfg.positive;

        let mut preds = String::from("row\tactual\tscore\tpredicted\n");
        for (i, (s, a)) in scores.iter().zip(&actual).enumerate() {
            let p = model.label_for(*s, self.cfg.threshold);
            preds.push_str(&format!("{i}\t{a}\t{s}\t{p}\n"));
        }

        let fold_of = stratified_folds(
            &actual,
            positive,
            self.cfg.cv_folds,
            self.cfg.stage_seed(Stage::Folds),
        )
        .map_err(|e| CliError::stage("evaluate", e))?;
        let folds: Vec<(Vec<f64>, Vec<&str>)> = (0..self.cfg.cv_folds)
            .map(|k| {
                let rows = (0..actual.len()).filter(|&r| fold_of[r] == k);
                rows.map(|r| (scores[r], actual[r].as_str())).unzip()
            })
            .collect();
        let est = cv_auc(&folds, positive, self.cfg.confidence)
            .map_err(|e| CliError::stage("evaluate", e))?;
        let full_auc =
            auc(&scores, &actual, positive).map_err(|e| CliError::stage("evaluate", e))?;

        run.write(
            "metrics.txt",
            format!("# seed={}\n{}", self.cfg.seed, report.to_text()),
        )?;
        run.write_json("metrics.json", parse_json(report.to_json()))?;
        run.write_tsv("predictions.tsv", &preds)?;
        run.write_tsv("cvauc.tsv", &est.to_tsv())?;
        let mut est_json = serde_json::to_value(&est).expect("estimate serializes");
        est_json["auc_full_test"] = json!(full_auc);
        run.write_json("cvauc.json", est_json)?;
        run.finish()?;
        Ok((report, full_auc))
    }

    pub fn importance(&self) -> Result<Importance, CliError> {
        let mut run = Run::start(self, "importance")?;
        let model = run.model()?;
        let imp = importance_mdg(&model);
        run.write_tsv("importance.tsv", &imp.to_tsv())?;
        run.write_tsv("importance_features.tsv", &imp.features_tsv())?;
        run.write_json(
            "importance.json",
            serde_json::to_value(&imp).expect("importance serializes"),
        )?;
        run.finish()?;
        Ok(imp)
    }

    pub fn roc(&self) -> Result<String, CliError> {
        let mut run = Run::start(self, "roc")?;
        let model = run.model()?;
        let test = run.table(TEST, "split")?;
        let scores = model
            .predict_proba(&test)
            .map_err(|e| CliError::stage("roc", e))?;
        let actual = self.labels(&test, "roc")?;
        let curve = roc_curve(&scores, &actual, &self.cfg.positive)
            .map_err(|e| CliError::stage("roc", e))?;
        run.write_tsv("roc.tsv", &curve.to_tsv())?;
        let svg = curve.to_svg(&format!("ROC, positive = {}", self.cfg.positive));
        let svg = svg.replacen('\n', &format!("\n<!-- seed={} -->\n", self.cfg.seed), 1);
        run.write("roc.svg", svg)?;
        run.finish()?;
        Ok(format!(
            "roc: {} points, AUC {:.3}",
            curve.points.len(),
            curve.auc()
        ))
    }

    pub fn compare(&self) -> Result<(MetricsReport, MetricsReport), CliError> {
        let mut run = Run::start(self, "compare")?;
        let train = run.table(BALANCED, "balance")?;
        let test = run.table(TEST, "split")?;
        let forest = self.fit(&train, &self.cfg.forest_config(), "compare")?;
        let tree = self.fit(
            &train,
            &ForestConfig::single_tree(self.cfg.stage_seed(Stage::Forest)),
            "compare",
        )?;
        let (_, _, rf) = self.score(&forest, &test, "compare")?;
        let (_, _, dt) = self.score(&tree, &test, "compare")?;
        let cmp = compare_models(&rf, &dt, ["Random Forest", "Decision Tree"]);
        run.write_tsv("comparison.tsv", &cmp.to_tsv())?;
        run.write_json("comparison.json", parse_json(cmp.to_json()))?;
        run.finish()?;
        Ok((rf, dt))
    }

    /// Whole pipeline on the full dataset, then a divergence report against
    /// the reference figures.
    pub fn repro(&self, input: Option<&Path>) -> Result<String, CliError> {
        let input = input.or(self.cfg.input.as_deref());
        match input {
            Some(p) if p.is_file() => {}
            Some(p) => {
                return Err(CliError::usage(format!(
                    "dataset not found: {}\n{}",
                    p.display(),
                    reference::DATASET_HELP
                )))
            }
            None => return Err(CliError::usage(reference::DATASET_HELP)),
        }
        let mut cfg = self.cfg.clone();
        if cfg.cleaning.state_filter.is_none() {
            cfg.cleaning.state_filter = Some("CA".into());
        }
        let ctx = Ctx { cfg };
        for line in [
            ctx.clean(input)?,
            ctx.eda()?,
            ctx.screen()?,
            ctx.split()?,
            ctx.balance()?,
            ctx.train()?,
        ] {
            println!("{line}");
        }
        let (report, full_auc) = ctx.evaluate()?;
        let imp = ctx.importance()?;
        println!("{}", ctx.roc()?);
        ctx.compare()?;

        let top: Vec<String> = imp.variables.iter().map(|v| v.name.clone()).collect();
        let div = Divergence::new(report.accuracy, full_auc, &top);
        let mut run = Run::start(&ctx, "repro")?;
        for name in ["metrics.json", "cvauc.json", "importance.json"] {
            run.artifact(name, "repro")?;
        }
        run.write_tsv("divergence.tsv", &div.to_tsv())?;
        run.write_json(
            "divergence.json",
            serde_json::to_value(&div).expect("divergence serializes"),
        )?;
        run.finish()?;
        Ok(format!(
            "repro: accuracy {:.3}, AUC {:.3}, {}",
            report.accuracy,
            full_auc,
            if div.all_within() {
                "all within reference tolerances"
            } else {
                "diverges from reference, see divergence.tsv"
            }
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stems() {
        assert_eq!(file_stem("Severity"), "severity");
        assert_eq!(file_stem("Wind_Speed(mph)"), "wind_speed_mph");
    }
}
