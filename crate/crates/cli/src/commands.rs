use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context as _};
use quadkit::analysis::{classify_errors, migration_matrix, ErrorClass};
use quadkit::codec::serialize_quads;
use quadkit::corpus::{
    corrector_record_line, dataset_stats, sentence_record_line, write_interchange, CorrectorRecord,
    Role,
};
use quadkit::eval::{score_corpus, CountMode};
use quadkit::sim::{simulate_example, summarize_sim, ChannelConfig};
use quadkit::synth::{collect_synthesis, synthesize_drafts, SynthConfig};
use quadkit::{Quad, Report, Taxonomy};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::io::{self, load_corpus, load_quad_sets, report_rejects, write_text};
use crate::manifest::RunManifest;
use crate::{
    AnalyzeArgs, CompareArgs, EvaluateArgs, FormatArgs, ImportArgs, SimulateArgs, SynthesizeArgs,
    UsageError,
};

pub struct Context {
    pub taxonomy: Taxonomy,
    pub taxonomy_path: Option<PathBuf>,
    pub pool: rayon::ThreadPool,
}

impl Context {
    fn base_config(&self, format: &FormatArgs) -> serde_json::Value {
        json!({
            "taxonomy": self.taxonomy_path.as_ref().map(|p| p.display().to_string()),
            "order": format.order.to_string(),
            "lowercase": format.lowercase,
        })
    }
}

fn merge(mut base: serde_json::Value, extra: serde_json::Value) -> serde_json::Value {
    if let (Some(b), serde_json::Value::Object(e)) = (base.as_object_mut(), extra) {
        b.extend(e);
    }
    base
}

fn write_manifest(path: Option<&Path>, m: &RunManifest) -> anyhow::Result<()> {
    match path {
        Some(p) => write_text(p, &m.to_json()),
        None => Ok(()),
    }
}

fn lines<I: IntoIterator<Item = String>>(items: I) -> String {
    items.into_iter().fold(String::new(), |mut acc, l| {
        acc.push_str(&l);
        acc.push('\n');
        acc
    })
}

fn template_lines(sets: &[Vec<Quad>], taxonomy: &Taxonomy) -> anyhow::Result<String> {
    let rendered = sets
        .iter()
        .map(|s| serialize_quads(s, taxonomy))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(lines(rendered))
}

pub fn import(ctx: &Context, a: &ImportArgs, out: &mut dyn Write) -> anyhow::Result<()> {
    let loaded = ctx
        .pool
        .install(|| load_corpus(&a.input, &a.format.options(), &ctx.taxonomy))?;
    report_rejects(&a.input, &loaded.rejects);
    if loaded.sentences.is_empty() {
        eprintln!("warning: {} holds no examples", a.input.display());
    }
    let name = a.name.clone().unwrap_or_else(|| {
        a.input
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    });
    let stats = dataset_stats(&loaded.sentences, &name);

    let mut m = RunManifest::new("import", ctx.base_config(&a.format));
    m.input(&a.input)
        .count("read", loaded.sentences.len() + loaded.rejects.len())
        .count("kept", loaded.sentences.len())
        .count("rejected", loaded.rejects.len());
    if let Some(path) = &a.out {
        write_text(
            path,
            &lines(loaded.sentences.iter().map(sentence_record_line)),
        )?;
        m.output(path);
    }
    let manifest = a
        .manifest
        .clone()
        .or_else(|| a.out.as_ref().map(|o| o.with_extension("manifest.json")));
    write_manifest(manifest.as_deref(), &m)?;

    if a.json {
        let v = json!({ "stats": stats, "rejects": loaded.rejects });
        writeln!(out, "{}", serde_json::to_string_pretty(&v)?)?;
    } else {
        write!(out, "{stats}")?;
        if !loaded.rejects.is_empty() {
            writeln!(out, "rejected lines: {}", loaded.rejects.len())?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct FailureLine {
    sentence: usize,
    #[serde(flatten)]
    failure: quadkit::synth::DraftFailure,
}

#[derive(Serialize)]
struct RejectLine {
    reason: quadkit::synth::QcReason,
    record: CorrectorRecord,
}

pub fn synthesize(ctx: &Context, a: &SynthesizeArgs, out: &mut dyn Write) -> anyhow::Result<()> {
    let cfg = SynthConfig {
        seed: a.seed,
        w_cor: a.w_cor,
        w_err: a.w_err,
        max_span_len: a.max_span_len as usize,
        include_identity: !a.no_identity,
    };
    let loaded = ctx
        .pool
        .install(|| load_corpus(&a.input, &a.format.options(), &ctx.taxonomy))?;
    report_rejects(&a.input, &loaded.rejects);
    let per_example: Vec<_> = ctx.pool.install(|| {
        loaded
            .sentences
            .par_iter()
            .enumerate()
            .map(|(i, ex)| synthesize_drafts(ex, i, &cfg, &ctx.taxonomy))
            .collect()
    });
    let result = collect_synthesis(per_example, &ctx.taxonomy);

    let dir = &a.out_dir;
    let records = dir.join("corrector.jsonl");
    let interchange = dir.join("corrector.txt");
    let sidecar = dir.join("corrector.meta.jsonl");
    let failures = dir.join("failures.jsonl");
    let rejected = dir.join("rejected.jsonl");
    write_text(
        &records,
        &lines(result.kept.iter().map(corrector_record_line)),
    )?;
    let (text, meta) = write_interchange(&result.kept, &ctx.taxonomy)?;
    write_text(&interchange, &text)?;
    write_text(&sidecar, &meta)?;
    write_text(
        &failures,
        &lines(result.failures.iter().map(|&(sentence, failure)| {
            serde_json::to_string(&FailureLine { sentence, failure }).expect("failure serializes")
        })),
    )?;
    write_text(
        &rejected,
        &lines(result.rejected.iter().map(|(ex, reason)| {
            serde_json::to_string(&RejectLine {
                reason: reason.clone(),
                record: ex.into(),
            })
            .expect("reject serializes")
        })),
    )?;

    let identity = result.kept.iter().filter(|e| e.is_identity()).count();
    let mut m = RunManifest::new(
        "synthesize",
        merge(ctx.base_config(&a.format), serde_json::to_value(&cfg)?),
    );
    m.seed = Some(a.seed);
    m.input(&a.input);
    for p in [&records, &interchange, &sidecar, &failures, &rejected] {
        m.output(p);
    }
    m.count("read", loaded.sentences.len() + loaded.rejects.len())
        .count("sentences", loaded.sentences.len())
        .count("rejected_lines", loaded.rejects.len())
        .count("generated", result.generated)
        .count("kept", result.kept.len())
        .count("qc_rejected", result.rejected.len())
        .count("unavailable_slots", result.failures.len())
        .count("identity", identity);
    write_text(&dir.join("manifest.json"), &m.to_json())?;

    if !result.rejected.is_empty() || !result.failures.is_empty() {
        eprintln!(
            "note: {} draft slots produced nothing, {} drafts failed quality checks (see {})",
            result.failures.len(),
            result.rejected.len(),
            dir.display()
        );
    }
    writeln!(
        out,
        "{} examples ({} identity) from {} sentences written to {}",
        result.kept.len(),
        identity,
        loaded.sentences.len(),
        dir.display()
    )?;
    Ok(())
}

pub fn evaluate(ctx: &Context, a: &EvaluateArgs, out: &mut dyn Write) -> anyhow::Result<()> {
    let opts = a.format.options();
    let preds = load_quad_sets(&a.pred, Role::Prediction, &opts, &ctx.taxonomy)?;
    let golds = load_quad_sets(&a.gold, Role::Gold, &opts, &ctx.taxonomy)?;
    let mode = if a.multiset {
        CountMode::Multiset
    } else {
        CountMode::Set
    };
    let report: Report = score_corpus(&preds, &golds, mode).map_err(|e| anyhow!(e))?;

    let mut m = RunManifest::new(
        "evaluate",
        merge(
            ctx.base_config(&a.format),
            json!({ "multiset": a.multiset }),
        ),
    );
    m.input(&a.pred)
        .input(&a.gold)
        .count("examples", golds.len());
    write_manifest(a.manifest.as_deref(), &m)?;

    if a.json {
        let [p, r, f1] = report.percentages();
        let v = json!({
            "report": report,
            "percent": { "precision": p, "recall": r, "f1": f1 },
        });
        writeln!(out, "{}", serde_json::to_string_pretty(&v)?)?;
    } else {
        writeln!(out, "{report}")?;
    }
    Ok(())
}

pub fn analyze(ctx: &Context, a: &AnalyzeArgs, out: &mut dyn Write) -> anyhow::Result<()> {
    let opts = a.format.options();
    let preds = load_quad_sets(&a.pred, Role::Prediction, &opts, &ctx.taxonomy)?;
    let golds = load_quad_sets(&a.gold, Role::Gold, &opts, &ctx.taxonomy)?;
    let summary = classify_errors(&preds, &golds)?;

    let mut m = RunManifest::new("analyze", ctx.base_config(&a.format));
    m.input(&a.pred)
        .input(&a.gold)
        .count("examples", golds.len());
    if let Some(p) = &a.chart {
        write_text(p, &summary.chart_csv())?;
        m.output(p);
    }
    if let Some(p) = &a.records {
        let errors = summary.records.iter().filter(|r| r.class.is_error());
        write_text(
            p,
            &lines(errors.map(|r| serde_json::to_string(r).expect("record serializes"))),
        )?;
        m.output(p);
    }
    m.count("errors", summary.error_total());
    write_manifest(a.manifest.as_deref(), &m)?;

    if a.json {
        let v = json!({
            "counts": summary.counts,
            "errors": summary.error_total(),
            "single_element": summary.single_element_total(),
        });
        writeln!(out, "{}", serde_json::to_string_pretty(&v)?)?;
    } else {
        for class in ErrorClass::ALL.into_iter().filter(|c| c.is_error()) {
            writeln!(out, "{:<18} {}", class.name(), summary.count(class))?;
        }
        writeln!(out, "{:<18} {}", "total errors", summary.error_total())?;
    }
    Ok(())
}

pub fn compare(ctx: &Context, a: &CompareArgs, out: &mut dyn Write) -> anyhow::Result<()> {
    let opts = a.format.options();
    let s1 = load_quad_sets(&a.stage1, Role::Prediction, &opts, &ctx.taxonomy)?;
    let s2 = load_quad_sets(&a.stage2, Role::Prediction, &opts, &ctx.taxonomy)?;
    let golds = load_quad_sets(&a.gold, Role::Gold, &opts, &ctx.taxonomy)?;
    let report = migration_matrix(&s1, &s2, &golds)?;

    let mut m = RunManifest::new("compare", ctx.base_config(&a.format));
    m.input(&a.stage1)
        .input(&a.stage2)
        .input(&a.gold)
        .count("examples", golds.len())
        .count("compression", report.compression)
        .count("regressions", report.regressions);
    write_manifest(a.manifest.as_deref(), &m)?;

    if a.json {
        writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?;
    } else {
        writeln!(out, "{report}")?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SimulateConfig {
    fix_prob: f64,
    channel: ChannelConfig,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            fix_prob: 0.5,
            channel: ChannelConfig::default(),
        }
    }
}

fn simulate_config(a: &SimulateArgs) -> anyhow::Result<SimulateConfig> {
    let mut cfg = match &a.config {
        Some(p) => {
            let text = io::read_text(p)?;
            toml::from_str(&text).with_context(|| format!("invalid config {}", p.display()))?
        }
        None => SimulateConfig::default(),
    };
    let ch = &mut cfg.channel;
    if let Some(r) = a.rate {
        ch.aspect = r;
        ch.category = r;
        ch.opinion = r;
        ch.sentiment = r;
    }
    let overrides = [
        (a.aspect_rate, &mut ch.aspect),
        (a.category_rate, &mut ch.category),
        (a.opinion_rate, &mut ch.opinion),
        (a.sentiment_rate, &mut ch.sentiment),
        (a.drop, &mut ch.drop),
        (a.insert, &mut ch.insert),
        (a.fix_prob, &mut cfg.fix_prob),
    ];
    for (flag, field) in overrides {
        if let Some(v) = flag {
            *field = v;
        }
    }
    if let Some(s) = a.seed {
        cfg.channel.seed = s;
    }
    if let Some(n) = a.max_span_len {
        cfg.channel.max_span_len = n as usize;
    }
    cfg.channel
        .validate()
        .map_err(|e| UsageError(e.to_string()))?;
    quadkit::sim::check_probability("fix_prob", cfg.fix_prob)
        .map_err(|e| UsageError(e.to_string()))?;
    if cfg.channel.max_span_len == 0 {
        return Err(UsageError("max_span_len must be at least 1".into()).into());
    }
    Ok(cfg)
}

pub fn simulate(ctx: &Context, a: &SimulateArgs, out: &mut dyn Write) -> anyhow::Result<()> {
    let cfg = simulate_config(a)?;
    let loaded = ctx
        .pool
        .install(|| load_corpus(&a.input, &a.format.options(), &ctx.taxonomy))?;
    report_rejects(&a.input, &loaded.rejects);
    let corpus = &loaded.sentences;
    let results = ctx.pool.install(|| {
        corpus
            .par_iter()
            .enumerate()
            .map(|(i, ex)| simulate_example(ex, i, &cfg.channel, cfg.fix_prob, &ctx.taxonomy))
            .collect::<Result<Vec<_>, _>>()
    })?;
    let run = summarize_sim::<f64>(corpus, results)?;
    let report = &run.report;

    let mut m = RunManifest::new(
        "simulate",
        merge(ctx.base_config(&a.format), serde_json::to_value(&cfg)?),
    );
    m.seed = Some(cfg.channel.seed);
    m.input(&a.input)
        .count("sentences", corpus.len())
        .count("rejected_lines", loaded.rejects.len())
        .count("gold_quads", report.channel.gold_quads);
    if let Some(dir) = &a.out_dir {
        let s1 = dir.join("stage1.txt");
        let s2 = dir.join("stage2.txt");
        let rep = dir.join("report.json");
        write_text(&s1, &template_lines(&run.stage1, &ctx.taxonomy)?)?;
        write_text(&s2, &template_lines(&run.stage2, &ctx.taxonomy)?)?;
        write_text(&rep, &(serde_json::to_string_pretty(report)? + "\n"))?;
        m.output(&s1).output(&s2).output(&rep);
        write_text(&dir.join("manifest.json"), &m.to_json())?;
    }

    if a.json {
        writeln!(out, "{}", serde_json::to_string_pretty(report)?)?;
    } else {
        writeln!(out, "stage 1\n{}\n", report.stage1)?;
        writeln!(out, "stage 2\n{}\n", report.stage2)?;
        writeln!(out, "{}", report.migration)?;
    }
    Ok(())
}
