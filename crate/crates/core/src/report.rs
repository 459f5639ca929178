//! Experiment configuration, dataset construction, the joint
//! selection-and-evaluation run, and CSV/JSON/SVG output.
//!
//! Every artifact is a pure function of the configuration: files contain no
//! timestamps or paths, maps are ordered, and floats are printed with a
//! fixed number of decimals.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::csp::{self, CspLedger};
use crate::domains::{self, descriptor};
use crate::error::{Error, Result};
use crate::eval::{self, EvalParams, ScalingCurve};
use crate::oracle::{self, TeacherStats};
use crate::planning::{Instance, InstanceDoc};
use crate::policy::PolicySpec;
use crate::selection::{self, LabeledSet, LossKind, Method, MethodInputs, ValidationParams};
use crate::seeds::derive_seed;
use crate::stats::{self, SequentialParams, SumCovMode};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SizeRange {
    pub min: usize,
    pub max: usize,
}

impl SizeRange {
    pub fn sizes(&self) -> Vec<usize> {
        (self.min..=self.max).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DynamicConfig {
    pub m: usize,
    pub tau: f64,
    /// Constant bound; defaults to `3N` from the teacher statistics.
    pub bound: Option<usize>,
    pub max_size: Option<usize>,
    pub max_consecutive_invalid: usize,
}

impl Default for DynamicConfig {
    fn default() -> Self {
        DynamicConfig {
            m: 10,
            tau: 0.3,
            bound: None,
            max_size: None,
            max_consecutive_invalid: 1000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub epsilon: f64,
    pub kappa: f64,
    pub min_samples: usize,
    pub max_samples: usize,
    pub tau: f64,
    pub zeta: usize,
    /// Base bound; defaults to `3N`.
    pub l0: Option<usize>,
    pub max_size: usize,
    pub sumcov: SumCovMode,
}

impl Default for EvalConfig {
    fn default() -> Self {
        let s = SequentialParams::default();
        EvalConfig {
            epsilon: s.epsilon,
            kappa: s.kappa,
            min_samples: s.min_samples,
            max_samples: s.max_samples,
            tau: 0.3,
            zeta: 2,
            l0: None,
            max_size: 200,
            sumcov: SumCovMode::default(),
        }
    }
}

impl EvalConfig {
    pub fn params(&self, l0: usize, seed: u64) -> EvalParams {
        EvalParams {
            sequential: SequentialParams {
                epsilon: self.epsilon,
                kappa: self.kappa,
                min_samples: self.min_samples,
                max_samples: self.max_samples,
            },
            l0,
            tau: self.tau,
            zeta: self.zeta,
            max_size: self.max_size,
            seed,
            ..Default::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub domain: String,
    /// Defaults to the domain's built-in training range.
    pub training_sizes: Option<SizeRange>,
    pub training_per_size: usize,
    /// Defaults to the three sizes just above the training range.
    pub validation_sizes: Option<SizeRange>,
    pub validation_count: usize,
    pub methods: Vec<Method>,
    pub loss: LossKind,
    pub dynamic: DynamicConfig,
    pub eval: EvalConfig,
    /// Depth limit for the breadth-first teacher.
    pub teacher_horizon: usize,
    pub seed: u64,
    #[serde(deserialize_with = "crate::policy::deserialize_spec_list")]
    pub checkpoints: Vec<PolicySpec>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            domain: "gripper".into(),
            training_sizes: None,
            training_per_size: 100,
            validation_sizes: None,
            validation_count: 12,
            methods: Method::ALL.to_vec(),
            loss: LossKind::default(),
            dynamic: DynamicConfig::default(),
            eval: EvalConfig::default(),
            teacher_horizon: 1000,
            seed: 0,
            checkpoints: Vec::new(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("cannot parse experiment config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn training_range(&self) -> Result<SizeRange> {
        match self.training_sizes {
            Some(r) => Ok(r),
            None => {
                let (min, max) = descriptor(&self.domain)?.default_training_sizes;
                Ok(SizeRange { min, max })
            }
        }
    }

    pub fn validation_range(&self) -> Result<SizeRange> {
        match self.validation_sizes {
            Some(r) => Ok(r),
            None => {
                let t = self.training_range()?;
                Ok(SizeRange {
                    min: t.max + 1,
                    max: t.max + 3,
                })
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        descriptor(&self.domain)?;
        let t = self.training_range()?;
        let v = self.validation_range()?;
        if t.min > t.max || v.min > v.max {
            return Err(Error::Config("size ranges must be nonempty".into()));
        }
        if v.min <= t.max {
            return Err(Error::Config(format!(
                "validation sizes {}..={} must lie strictly above training sizes {}..={}",
                v.min, v.max, t.min, t.max
            )));
        }
        if self.training_per_size == 0 || self.validation_count == 0 {
            return Err(Error::Config("instance counts must be at least 1".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("at least one validation method is required".into()));
        }
        for c in &self.checkpoints {
            c.check()?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Datasets
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub domain: String,
    pub seed: u64,
    pub training_sizes: Vec<usize>,
    pub training_seed: u64,
    pub training_count: usize,
    pub training_skipped_sizes: Vec<usize>,
    pub validation_sizes: Vec<usize>,
    pub validation_seed: u64,
    pub validation_count: usize,
    pub teacher: TeacherStats,
    /// Constant validation bound `3N`.
    pub validation_bound: usize,
    /// Instances the teacher could not solve within horizon or state cap.
    pub unsolved: Vec<String>,
    pub labeled_states: usize,
    pub files: Vec<String>,
}

pub struct Datasets {
    pub manifest: DatasetManifest,
    pub training: Vec<Instance>,
    pub validation: Vec<Instance>,
    pub labeled: LabeledSet,
}

#[derive(Serialize)]
struct TeacherPlan {
    instance: usize,
    size: usize,
    plan: Option<Vec<String>>,
}

fn split_count(total: usize, parts: usize) -> Vec<usize> {
    // Equal shares, remainder to the largest sizes.
    let base = total / parts;
    let extra = total % parts;
    (0..parts)
        .map(|i| base + usize::from(i >= parts - extra))
        .collect()
}

/// Builds training and fixed-validation sets plus teacher data. When `out`
/// is given, everything is written there.
pub fn build_datasets(config: &ExperimentConfig, out: Option<&Path>) -> Result<Datasets> {
    config.validate()?;
    let domain = config.domain.as_str();
    let desc = descriptor(domain)?;
    let train_range = config.training_range()?;
    let val_sizes = config.validation_range()?.sizes();
    for &n in &val_sizes {
        if !csp::has_solution(&desc.csp, n as u64) {
            return Err(Error::Config(format!(
                "validation size {n} has no valid {domain} composition"
            )));
        }
    }

    let training_seed = derive_seed(config.seed, &[1]);
    let training = domains::build_instance_set(
        domain,
        &train_range.sizes(),
        config.training_per_size,
        training_seed,
    )?;
    if training.instances.is_empty() {
        return Err(Error::Config("training range contains no valid size".into()));
    }

    let validation_seed = derive_seed(config.seed, &[2]);
    let mut validation = Vec::new();
    for (&n, count) in val_sizes
        .iter()
        .zip(split_count(config.validation_count, val_sizes.len()))
    {
        if count == 0 {
            continue;
        }
        let set = domains::build_instance_set(domain, &[n], count, validation_seed)?;
        validation.extend(set.instances);
    }

    let teacher = oracle::teacher_stats(&training.instances, config.teacher_horizon)?;
    let validation_bound = config.dynamic.bound.unwrap_or(teacher.validation_bound());

    let mut unsolved = Vec::new();
    let mut plans_for = |set: &[Instance], tag: &str| -> Result<Vec<TeacherPlan>> {
        let mut plans = Vec::new();
        for (i, inst) in set.iter().enumerate() {
            let plan = match oracle::optimal_plan(inst, config.teacher_horizon) {
                Ok(p) => p,
                Err(Error::Resource(_)) => None,
                Err(e) => return Err(e),
            };
            if plan.is_none() {
                unsolved.push(format!("{tag}/{i}"));
            }
            plans.push(TeacherPlan {
                instance: i,
                size: inst.size(),
                plan: plan.map(|p| p.iter().map(|a| inst.format_action(a)).collect()),
            });
        }
        Ok(plans)
    };
    let training_plans = plans_for(&training.instances, "training")?;
    let validation_plans = plans_for(&validation, "validation")?;
    let labeled = selection::label_states(&validation)?;

    let mut files = Vec::new();
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        let mut write = |name: &str, body: String| -> Result<()> {
            fs::write(dir.join(name), body)?;
            files.push(name.to_owned());
            Ok(())
        };
        let docs = |set: &[Instance]| -> Vec<InstanceDoc> { set.iter().map(Instance::to_doc).collect() };
        write("training.json", to_json(&docs(&training.instances))?)?;
        write("validation.json", to_json(&docs(&validation))?)?;
        write("teacher_training.json", to_json(&training_plans)?)?;
        write("teacher_validation.json", to_json(&validation_plans)?)?;
        write("labels.csv", labels_csv(&labeled))?;
        write("csp_ledger.json", to_json(&desc.ledger())?)?;
    }

    let manifest = DatasetManifest {
        domain: domain.to_owned(),
        seed: config.seed,
        training_sizes: train_range.sizes(),
        training_seed,
        training_count: training.instances.len(),
        training_skipped_sizes: training.skipped_sizes.clone(),
        validation_sizes: val_sizes,
        validation_seed,
        validation_count: validation.len(),
        teacher,
        validation_bound,
        unsolved,
        labeled_states: labeled.states.len(),
        files,
    };
    if let Some(dir) = out {
        fs::write(dir.join("manifest.json"), to_json(&manifest)?)?;
    }
    Ok(Datasets {
        manifest,
        training: training.instances,
        validation,
        labeled,
    })
}

fn labels_csv(labeled: &LabeledSet) -> String {
    let mut out = String::from("instance,digest,value\n");
    for l in &labeled.states {
        let _ = writeln!(out, "{},{:016x},{}", l.instance, l.state.digest(), l.value);
    }
    out
}

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// CSP ledgers of every registered domain.
pub fn csp_ledgers() -> Vec<CspLedger> {
    domains::domain_ids()
        .into_iter()
        .map(|id| descriptor(id).expect("registered").ledger())
        .collect()
}

// ---------------------------------------------------------------------------
// Experiment
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodScores {
    pub method: Method,
    /// `None` where scoring the checkpoint failed.
    pub scores: Vec<Option<f64>>,
    pub errors: Vec<Option<String>>,
    pub best_index: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub method: Method,
    pub selected: usize,
    pub scale: usize,
    pub sumcov: f64,
    pub curve: ScalingCurve,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub domain: String,
    pub seed: u64,
    pub n0: usize,
    pub validation_bound: usize,
    pub eval_l0: usize,
    pub tau: f64,
    pub zeta: usize,
    pub sumcov_mode: SumCovMode,
    pub training_range: SizeRange,
    pub validation_range: SizeRange,
    pub checkpoints: Vec<PolicySpec>,
    pub scores: Vec<MethodScores>,
    pub results: Vec<MethodResult>,
}

impl ExperimentReport {
    pub fn result(&self, method: Method) -> Option<&MethodResult> {
        self.results.iter().find(|r| r.method == method)
    }

    pub fn scores_csv(&self) -> String {
        let mut out = String::from("method,checkpoint,score,error\n");
        for m in &self.scores {
            for (i, (s, e)) in m.scores.iter().zip(&m.errors).enumerate() {
                let score = s.map(|v| format!("{v:.6}")).unwrap_or_default();
                let err = e.as_deref().unwrap_or("").replace(['"', '\n'], " ");
                let _ = writeln!(out, "{},{i},{score},\"{err}\"", m.method.as_str());
            }
        }
        out
    }

    /// One row per method: selected checkpoint, Scale and SumCov.
    pub fn summary_csv(&self) -> String {
        let mut out = String::from("method,selected,scale,sumcov\n");
        for r in &self.results {
            let _ = writeln!(
                out,
                "{},{},{},{:.6}",
                r.method.as_str(),
                r.selected,
                r.scale,
                r.sumcov
            );
        }
        out
    }

    pub fn svg(&self) -> String {
        let curves: Vec<(String, Vec<(usize, f64)>)> = self
            .results
            .iter()
            .map(|r| {
                (
                    format!("{} (checkpoint {})", r.method.as_str(), r.selected),
                    r.curve.coverage(),
                )
            })
            .collect();
        emit_curve_svg(
            &curves,
            &SvgStyle {
                title: format!("{}: statistical coverage", self.domain),
                training: Some((self.training_range.min, self.training_range.max)),
                validation: Some((self.validation_range.min, self.validation_range.max)),
                ..Default::default()
            },
        )
    }

    /// Writes report.json, scores.csv, summary.csv, one curve CSV per
    /// method and coverage.svg.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir.join("curves"))?;
        let mut written = Vec::new();
        let mut put = |path: PathBuf, body: String| -> Result<()> {
            fs::write(&path, body)?;
            written.push(path);
            Ok(())
        };
        put(dir.join("report.json"), to_json(self)?)?;
        put(dir.join("scores.csv"), self.scores_csv())?;
        put(dir.join("summary.csv"), self.summary_csv())?;
        for r in &self.results {
            put(dir.join("curves").join(format!("{}.csv", r.method.as_str())), r.curve.to_csv()?)?;
        }
        put(dir.join("coverage.svg"), self.svg())?;
        Ok(written)
    }
}

/// Scores every checkpoint with every configured method against the same
/// datasets, selects per method, and evaluates each selected checkpoint.
/// A checkpoint that fails under one method is recorded and skipped.
pub fn run_experiment(
    config: &ExperimentConfig,
    checkpoints: &[PolicySpec],
    out: Option<&Path>,
) -> Result<ExperimentReport> {
    if checkpoints.is_empty() {
        return Err(Error::Empty("no checkpoints to select from"));
    }
    let data = build_datasets(config, out.map(|d| d.join("datasets")).as_deref())?;
    let train = config.training_range()?;
    let n0 = train.max;
    let bound = data.manifest.validation_bound;
    let l0 = config
        .eval
        .l0
        .unwrap_or(data.manifest.teacher.validation_bound());
    let inputs = MethodInputs {
        domain: config.domain.clone(),
        fixed_instances: data.validation.clone(),
        fixed_bound: bound,
        labeled: data.labeled.clone(),
        loss: config.loss,
        dynamic: ValidationParams {
            n0,
            m: config.dynamic.m,
            bound,
            tau: config.dynamic.tau,
            max_consecutive_invalid: config.dynamic.max_consecutive_invalid,
            max_size: config.dynamic.max_size,
            seed: derive_seed(config.seed, &[3]),
            epoch: 0,
        },
    };

    let mut scores = Vec::new();
    for &method in &config.methods {
        let mut vals = Vec::new();
        let mut errs = Vec::new();
        for c in checkpoints {
            match selection::score_checkpoint(c, method, &inputs) {
                Ok(v) => {
                    vals.push(Some(v));
                    errs.push(None);
                }
                Err(e) => {
                    vals.push(None);
                    errs.push(Some(e.to_string()));
                }
            }
        }
        let best = best_of(&vals, method);
        scores.push(MethodScores {
            method,
            scores: vals,
            errors: errs,
            best_index: best,
        });
    }

    let eval_params = config.eval.params(l0, derive_seed(config.seed, &[4]));
    let mut curves: Vec<(usize, ScalingCurve)> = Vec::new();
    let mut results = Vec::new();
    for s in &scores {
        let Some(sel) = s.best_index else { continue };
        // Each selected checkpoint is evaluated once and shared.
        let curve = match curves.iter().find(|(i, _)| *i == sel) {
            Some((_, c)) => c.clone(),
            None => {
                let mut policy = checkpoints[sel].build()?;
                let c = eval::evaluate_scaling(policy.as_mut(), &config.domain, &eval_params)?;
                curves.push((sel, c.clone()));
                c
            }
        };
        let cov = curve.coverage();
        let (scale, sumcov) = if cov.is_empty() {
            (0, 0.0)
        } else {
            (
                stats::scale_metric(&cov, config.eval.tau, config.eval.zeta)?,
                stats::sumcov_metric(&cov, config.eval.tau, config.eval.zeta, config.eval.sumcov)?,
            )
        };
        results.push(MethodResult {
            method: s.method,
            selected: sel,
            scale,
            sumcov,
            curve,
        });
    }

    let report = ExperimentReport {
        domain: config.domain.clone(),
        seed: config.seed,
        n0,
        validation_bound: bound,
        eval_l0: l0,
        tau: config.eval.tau,
        zeta: config.eval.zeta,
        sumcov_mode: config.eval.sumcov,
        training_range: train,
        validation_range: config.validation_range()?,
        checkpoints: checkpoints.to_vec(),
        scores,
        results,
    };
    if let Some(dir) = out {
        report.write(dir)?;
    }
    Ok(report)
}

fn best_of(scores: &[Option<f64>], method: Method) -> Option<usize> {
    let ok: Vec<(usize, f64)> = scores
        .iter()
        .enumerate()
        .filter_map(|(i, s)| s.map(|v| (i, v)))
        .collect();
    let values: Vec<f64> = ok.iter().map(|p| p.1).collect();
    selection::best_index(&values, method).ok().map(|i| ok[i].0)
}

// ---------------------------------------------------------------------------
// SVG
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
pub struct SvgStyle {
    pub title: String,
    pub width: u32,
    pub height: u32,
    /// Training size range, drawn as red markers.
    pub training: Option<(usize, usize)>,
    /// Validation size range, drawn as green markers.
    pub validation: Option<(usize, usize)>,
}

impl Default for SvgStyle {
    fn default() -> Self {
        SvgStyle {
            title: "Statistical coverage".into(),
            width: 640,
            height: 400,
            training: None,
            validation: None,
        }
    }
}

const PALETTE: [&str; 6] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#9467bd", "#8c564b", "#e377c2"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn tick_step(span: usize) -> usize {
    [1, 2, 5, 10, 20, 50, 100, 200, 500, 1000]
        .into_iter()
        .find(|s| span / s <= 10)
        .unwrap_or(1000)
}

/// A standalone SVG with coverage in `[0, 1]` over instance size, one
/// polyline per curve, a legend, and optional range markers.
pub fn emit_curve_svg(curves: &[(String, Vec<(usize, f64)>)], style: &SvgStyle) -> String {
    let (w, h) = (style.width as f64, style.height as f64);
    let (left, right, top, bottom) = (56.0, 170.0, 36.0, 44.0);
    let plot_w = w - left - right;
    let plot_h = h - top - bottom;

    let mut xs: Vec<usize> = curves.iter().flat_map(|c| c.1.iter().map(|p| p.0)).collect();
    for (a, b) in style.training.iter().chain(style.validation.iter()) {
        xs.extend([*a, *b]);
    }
    let mut x_min = xs.iter().copied().min().unwrap_or(0);
    let mut x_max = xs.iter().copied().max().unwrap_or(1);
    if x_min == x_max {
        x_min = x_min.saturating_sub(1);
        x_max += 1;
    }
    let sx = |x: f64| left + (x - x_min as f64) / (x_max - x_min) as f64 * plot_w;
    let sy = |y: f64| top + (1.0 - y.clamp(0.0, 1.0)) * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}">"#,
        style.width, style.height, style.width, style.height
    );
    s.push_str("<style>\n");
    s.push_str("text { font-family: sans-serif; font-size: 12px; }\n");
    s.push_str(".axis { stroke: #000; stroke-width: 1; }\n");
    s.push_str(".grid { stroke: #ddd; stroke-width: 1; }\n");
    s.push_str(".train { stroke: #d62728; stroke-width: 1.5; stroke-dasharray: 4 3; }\n");
    s.push_str(".valid { stroke: #2ca02c; stroke-width: 1.5; stroke-dasharray: 4 3; }\n");
    for (i, _) in curves.iter().enumerate() {
        let c = PALETTE[i % PALETTE.len()];
        let _ = writeln!(s, ".curve-{i} {{ stroke: {c}; stroke-width: 2; fill: none; }}");
        let _ = writeln!(s, ".dot-{i} {{ fill: {c}; }}");
    }
    s.push_str("</style>\n");
    let _ = writeln!(s, r##"<rect width="100%" height="100%" fill="#fff"/>"##);
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="20" text-anchor="middle">{}</text>"#,
        left + plot_w / 2.0,
        escape(&style.title)
    );

    // y grid and labels
    for k in 0..=4 {
        let v = k as f64 / 4.0;
        let y = sy(v);
        let _ = writeln!(
            s,
            r#"<line class="grid" x1="{left:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}"/>"#,
            left + plot_w
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{v:.2}</text>"#,
            left - 6.0,
            y + 4.0
        );
    }
    // x ticks
    let step = tick_step(x_max - x_min);
    let mut t = x_min.div_ceil(step) * step;
    while t <= x_max {
        let x = sx(t as f64);
        let _ = writeln!(
            s,
            r#"<line class="axis" x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}"/>"#,
            top + plot_h,
            top + plot_h + 4.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{t}</text>"#,
            top + plot_h + 18.0
        );
        t += step;
    }
    let _ = writeln!(
        s,
        r#"<line class="axis" x1="{left:.2}" y1="{top:.2}" x2="{left:.2}" y2="{:.2}"/>"#,
        top + plot_h
    );
    let _ = writeln!(
        s,
        r#"<line class="axis" x1="{left:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}"/>"#,
        top + plot_h,
        left + plot_w,
        top + plot_h
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">instance size n</text>"#,
        left + plot_w / 2.0,
        h - 6.0
    );

    for (class, range) in [("train", style.training), ("valid", style.validation)] {
        if let Some((a, b)) = range {
            for v in [a, b] {
                let x = sx(v as f64);
                let _ = writeln!(
                    s,
                    r#"<line class="{class}" x1="{x:.2}" y1="{top:.2}" x2="{x:.2}" y2="{:.2}"/>"#,
                    top + plot_h
                );
            }
        }
    }

    for (i, (label, pts)) in curves.iter().enumerate() {
        let path: Vec<String> = pts
            .iter()
            .map(|&(n, c)| format!("{:.2},{:.2}", sx(n as f64), sy(c)))
            .collect();
        let _ = writeln!(s, r#"<polyline class="curve-{i}" points="{}"/>"#, path.join(" "));
        for &(n, c) in pts {
            let _ = writeln!(
                s,
                r#"<circle class="dot-{i}" cx="{:.2}" cy="{:.2}" r="2.5"/>"#,
                sx(n as f64),
                sy(c)
            );
        }
        let ly = top + 10.0 + 18.0 * i as f64;
        let lx = left + plot_w + 14.0;
        let _ = writeln!(
            s,
            r#"<line class="curve-{i}" x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}"/>"#,
            lx + 20.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 26.0,
            ly + 4.0,
            escape(label)
        );
    }
    s.push_str("</svg>\n");
    s
}
