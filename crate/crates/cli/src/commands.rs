use std::collections::{BTreeSet, HashSet};
use std::fmt::Write as _;
use std::io::BufReader;

use evbias_core::analyze::{evaluate_by_gender, percentile_report, MatchMode, PercentileReport, OPPOSITE_BAND, OWN_BAND};
use evbias_core::calibrate::{
    calibrated_ranking, harvest_templates, instances_to_corpus, load_review, measure_recalls, recall_csv,
    synthesize_all, write_review, NameList, RecallRecord, SpanLocator, SwapTable, TemplateSentence,
};
use evbias_core::corpus::{corpus_stats, load_corpus, Corpus, ValidationReport};
use evbias_core::detect::{
    build_frequency_tables, detect_events, ingest_annotations, parse_annotations, write_annotations, EventDetector,
    EventMention, EventType, FrequencyTables, SentenceIndex, SliceFilter, TriggerLexicon,
};
use evbias_core::rank::{rank_events, OddsRatioEntry, RankOptions, RankedEvents};
use evbias_core::resources::{self, list_lines};
use evbias_core::weat::{load_embeddings, slice_tokens, stop_words, weat_score, AttributeLists, WeatResult};
use evbias_core::Gender;
use serde::Serialize;

use crate::args::{CalibrateArgs, EvalArgs, WeatArgs};
use crate::config::PipelineConfig;
use crate::error::CliError;
use crate::output::Outputs;

pub const RANKED: &str = "ranked.tsv";
pub const EXCLUSIVES: &str = "exclusives.tsv";
pub const CALIBRATED: &str = "calibrated.tsv";
pub const RECALL: &str = "recall.csv";
pub const REVIEW: &str = "review.jsonl";
pub const SYNTHETIC: &str = "synthetic.jsonl";
pub const MENTIONS: &str = "mentions.jsonl";
pub const PERCENTILE: &str = "percentile.csv";
pub const WEAT: &str = "weat.json";
pub const EVAL: &str = "eval.json";
pub const REPORT: &str = "report.md";

/// Corpus, detections and the configured slice's frequency tables.
struct Pipeline<'c> {
    cfg: &'c PipelineConfig,
    corpus: Corpus,
    validation: ValidationReport,
    lexicon: TriggerLexicon,
    mentions: Vec<EventMention>,
    tables: FrequencyTables,
}

fn lexicon(cfg: &PipelineConfig) -> Result<TriggerLexicon, CliError> {
    Ok(match &cfg.lexicon {
        Some(p) => TriggerLexicon::load(p)?,
        None => TriggerLexicon::bundled(),
    })
}

impl<'c> Pipeline<'c> {
    fn load(cfg: &'c PipelineConfig) -> Result<Self, CliError> {
        let lexicon = lexicon(cfg)?;
        let (corpus, validation) = load_corpus(cfg.corpus_path()?)?;
        if corpus.is_empty() {
            log::warn!("corpus is empty");
        }
        let mentions = match &cfg.annotations {
            Some(p) => ingest_annotations(p, &corpus)?,
            None => detect_events(&corpus.sentences(Some(&cfg.section)), &lexicon)?,
        };
        let tables = build_frequency_tables(&mentions, &corpus, &slice(cfg))?;
        Ok(Pipeline { cfg, corpus, validation, lexicon, mentions, tables })
    }

    fn rank(&self) -> Result<RankedEvents, CliError> {
        Ok(rank_events(&self.tables.male, &self.tables.female, rank_options(self.cfg))?)
    }

    fn slice_mentions(&self) -> Vec<EventMention> {
        self.mentions.iter().filter(|m| m.section == self.cfg.section).cloned().collect()
    }
}

fn slice(cfg: &PipelineConfig) -> SliceFilter {
    let mut f = SliceFilter::section(cfg.section.clone());
    if let Some(o) = &cfg.occupation {
        f = f.occupation(o.clone());
    }
    if cfg.balance {
        f = f.balanced(cfg.seed);
    }
    f
}

fn rank_options(cfg: &PipelineConfig) -> RankOptions {
    RankOptions { k: cfg.k, min_count: cfg.min_count, smoothing: cfg.smoothing }
}

fn note_warnings(out: &mut Outputs, warnings: &[String]) {
    for w in warnings {
        log::warn!("{w}");
    }
    let _ = out;
}

pub fn ingest(cfg: &PipelineConfig) -> Result<Outputs, CliError> {
    let (corpus, report) = load_corpus(cfg.corpus_path()?)?;
    let mut out = Outputs::default();
    out.say(format!("{} records, {} blank lines skipped", report.records, report.blank_lines));
    for w in &report.warnings {
        out.say(format!("warning: {w}"));
    }
    if corpus.is_empty() {
        log::warn!("corpus is empty");
    }
    out.say(corpus_stats(&corpus).render_table().trim_end());
    Ok(out)
}

pub fn detect(cfg: &PipelineConfig) -> Result<Outputs, CliError> {
    let lexicon = lexicon(cfg)?;
    let (corpus, _) = load_corpus(cfg.corpus_path()?)?;
    let mentions = match &cfg.annotations {
        Some(p) => ingest_annotations(p, &corpus)?,
        None => detect_events(&corpus.sentences(None), &lexicon)?,
    };
    let mut buf = Vec::new();
    write_annotations(&mentions, &mut buf)?;
    let mut out = Outputs::default();
    out.file(MENTIONS, buf);
    out.say(format!("{} event mentions in {} documents", mentions.len(), corpus.len()));
    Ok(out)
}

fn ranking_files(out: &mut Outputs, ranked: &RankedEvents, lexicon: &TriggerLexicon) {
    out.file(RANKED, ranked.to_tsv(lexicon));
    out.file(EXCLUSIVES, ranked.exclusives_tsv());
}

fn say_ranking(out: &mut Outputs, ranked: &RankedEvents) {
    for g in Gender::ALL {
        out.say(format!("{}: {}", g.word(), ranked.lemmas(g).join(", ")));
    }
}

pub fn rank(cfg: &PipelineConfig) -> Result<Outputs, CliError> {
    let p = Pipeline::load(cfg)?;
    let ranked = p.rank()?;
    let mut out = Outputs::default();
    if ranked.ordered.is_empty() {
        log::warn!("no rankable events in the {:?} slice", cfg.section);
    }
    note_warnings(&mut out, &ranked.warnings);
    ranking_files(&mut out, &ranked, &p.lexicon);
    say_ranking(&mut out, &ranked);
    Ok(out)
}

fn names(cfg: &PipelineConfig) -> Result<NameList, CliError> {
    Ok(match &cfg.names {
        Some(p) => NameList::load(p)?,
        None => NameList::bundled(),
    })
}

fn swaps(cfg: &PipelineConfig) -> Result<SwapTable, CliError> {
    Ok(match &cfg.swaps {
        Some(p) => SwapTable::load(p)?,
        None => SwapTable::bundled(),
    })
}

fn verified_templates(cfg: &PipelineConfig) -> Result<Vec<TemplateSentence>, CliError> {
    let path = cfg
        .review
        .as_deref()
        .ok_or_else(|| CliError::Validation("no review file given (run `calibrate --harvest` first, then pass --review)".into()))?;
    let templates = load_review(path)?;
    if !templates.iter().any(|t| t.verified) {
        return Err(CliError::Validation(format!(
            "{} has no verified templates; check each candidate and set \"verified\": true before calibrating",
            path.display()
        )));
    }
    Ok(templates)
}

pub fn calibrate(cfg: &PipelineConfig, args: &CalibrateArgs) -> Result<Outputs, CliError> {
    let mut out = Outputs::default();
    if args.emit_synthetic {
        let templates = verified_templates(cfg)?;
        let all: Vec<_> = synthesize_all(&templates, &names(cfg)?, &swaps(cfg)?)?.into_values().flatten().collect();
        let corpus = instances_to_corpus(&all)?;
        out.file(SYNTHETIC, corpus.to_jsonl());
        out.say(format!("{} synthetic instances", all.len()));
        return Ok(out);
    }

    let p = Pipeline::load(cfg)?;
    if args.harvest {
        let targets: BTreeSet<String> = if args.events.is_empty() {
            let skewed = rank_events(&p.tables.male, &p.tables.female, RankOptions { k: cfg.window, ..rank_options(cfg) })?;
            skewed.top_female.iter().chain(&skewed.top_male).map(|e| e.lemma.clone()).collect()
        } else {
            args.events.iter().map(|e| e.trim().to_lowercase()).collect()
        };
        let locator = SpanLocator::new(swaps(cfg)?, list_lines(resources::VERBS).map(String::from));
        let mentions = p.slice_mentions();
        let mut templates = Vec::new();
        for t in &targets {
            templates.extend(harvest_templates(&p.corpus, &mentions, t, &locator, cfg.context));
        }
        let mut buf = Vec::new();
        write_review(&templates, &mut buf)?;
        out.file(REVIEW, buf);
        out.say(format!(
            "{} candidate templates for {} events; set \"verified\": true on each checked line",
            templates.len(),
            targets.len()
        ));
        return Ok(out);
    }

    let templates = verified_templates(cfg)?;
    let (names, swaps) = (names(cfg)?, swaps(cfg)?);
    let recalls: Vec<RecallRecord> = match &args.synthetic_annotations {
        Some(path) => {
            let instances: Vec<_> = synthesize_all(&templates, &names, &swaps)?.into_values().flatten().collect();
            let synthetic = instances_to_corpus(&instances)?;
            let file = std::fs::File::open(path).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
            let found = parse_annotations(BufReader::new(file), &SentenceIndex::from_corpus(&synthetic))?;
            let hits: HashSet<(String, String)> = found.into_iter().map(|m| (m.doc_id, m.lemma)).collect();
            measure_recalls(&templates, &names, &swaps, |i| hits.contains(&(i.id.clone(), i.expected_event.clone())))?
        }
        None => {
            let detector = &p.lexicon;
            measure_recalls(&templates, &names, &swaps, |i| {
                detector.find_triggers(&i.substituted_text).iter().any(|t| t.lemma == i.expected_event)
            })?
        }
    };
    let ranked = calibrated_ranking(&p.tables.male, &p.tables.female, &recalls, rank_options(cfg), cfg.gate)?;
    note_warnings(&mut out, &ranked.warnings);
    out.file(CALIBRATED, ranked.to_tsv(&p.lexicon));
    out.file(RECALL, recall_csv(&recalls));
    let n = ranked.ordered.iter().filter(|e| e.calibrated).count();
    out.say(format!("{} of {} measured events calibrated (gate {})", n, recalls.len() / 2, cfg.gate));
    say_ranking(&mut out, &ranked);
    Ok(out)
}

#[derive(Serialize)]
struct WeatReport {
    section: String,
    female_events: Vec<String>,
    male_events: Vec<String>,
    weat: WeatResult,
    weat_star: WeatResult,
}

fn run_weat(p: &Pipeline<'_>, ranked: &RankedEvents, args: &WeatArgs) -> Result<WeatReport, CliError> {
    let cfg = p.cfg;
    let path = cfg
        .embeddings
        .as_deref()
        .ok_or_else(|| CliError::Validation("WEAT needs an embedding file (--embeddings)".into()))?;
    let pick = |given: &[String], g: Gender| -> Vec<String> {
        if given.is_empty() {
            ranked.lemmas(g).into_iter().map(String::from).collect()
        } else {
            given.iter().map(|s| s.trim().to_lowercase()).filter(|s| !s.is_empty()).collect()
        }
    };
    let (ef, em) = (pick(&args.female_events, Gender::F), pick(&args.male_events, Gender::M));
    if ef.is_empty() || em.is_empty() {
        return Err(CliError::Validation("WEAT needs at least one female and one male event".into()));
    }
    let attrs = match &cfg.attributes {
        Some(p) => AttributeLists::load(p)?,
        None => AttributeLists::default(),
    };
    let stop = match &cfg.stop_words {
        Some(p) => std::fs::read_to_string(p)
            .map_err(|e| CliError::Runtime(format!("{}: {e}", p.display())))?
            .lines()
            .map(|l| l.trim().to_lowercase())
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect(),
        None => stop_words(),
    };
    let [tf, tm] = slice_tokens(&p.corpus, &slice(cfg), &stop);
    let vocab: HashSet<String> =
        ef.iter().chain(&em).chain(&attrs.a).chain(&attrs.b).chain(&tf).chain(&tm).cloned().collect();
    let emb = load_embeddings(path, Some(&vocab))?;
    let weat = weat_score(&ef, &em, &attrs, &emb)?;
    let weat_star = weat_score(&tf, &tm, &attrs, &emb)?;
    Ok(WeatReport { section: cfg.section.clone(), female_events: ef, male_events: em, weat, weat_star })
}

fn fmt_opt(v: Option<f64>, digits: usize) -> String {
    v.map_or("n/a".into(), |x| format!("{x:.digits$}"))
}

pub fn weat(cfg: &PipelineConfig, args: &WeatArgs) -> Result<Outputs, CliError> {
    if cfg.embeddings.is_none() {
        return Err(CliError::Validation("WEAT needs an embedding file (--embeddings)".into()));
    }
    let p = Pipeline::load(cfg)?;
    let ranked = p.rank()?;
    let report = run_weat(&p, &ranked, args)?;
    let mut out = Outputs::default();
    out.say(format!(
        "WEAT: effect size {}, raw S {:.4}",
        fmt_opt(report.weat.effect_size, 4),
        report.weat.raw_score
    ));
    out.say(format!(
        "WEAT*: effect size {}, raw S {:.4}",
        fmt_opt(report.weat_star.effect_size, 4),
        report.weat_star.raw_score
    ));
    let mut json = serde_json::to_string_pretty(&report).map_err(|e| CliError::Runtime(e.to_string()))?;
    json.push('\n');
    out.file(WEAT, json);
    Ok(out)
}

fn say_bands(out: &mut Outputs, report: &PercentileReport) {
    let yn = |b: bool| if b { "yes" } else { "no" };
    out.say(format!("all events within own-gender top {OWN_BAND}%: {}", yn(report.own_band_holds)));
    out.say(format!("all events within opposite-gender top {OPPOSITE_BAND}%: {}", yn(report.opposite_band_holds)));
}

pub fn percentile(cfg: &PipelineConfig) -> Result<Outputs, CliError> {
    let p = Pipeline::load(cfg)?;
    let ranked = p.rank()?;
    let report = percentile_report(&ranked, &p.tables.male, &p.tables.female);
    let mut out = Outputs::default();
    out.file(PERCENTILE, report.to_csv());
    say_bands(&mut out, &report);
    Ok(out)
}

pub fn eval(cfg: &PipelineConfig, args: &EvalArgs) -> Result<Outputs, CliError> {
    if !args.gold.is_file() {
        return Err(CliError::Validation(format!("gold file {} does not exist", args.gold.display())));
    }
    let (corpus, _) = load_corpus(cfg.corpus_path()?)?;
    let gold = ingest_annotations(&args.gold, &corpus)?;
    // predictions are compared on the documents and sections the gold file covers
    let covered: HashSet<(&str, &str)> = gold.iter().map(|m| (m.doc_id.as_str(), m.section.as_str())).collect();
    let predicted: Vec<EventMention> = match &args.predicted {
        Some(p) => ingest_annotations(p, &corpus)?,
        None => detect_events(&corpus.sentences(None), &lexicon(cfg)?)?,
    }
    .into_iter()
    .filter(|m| covered.contains(&(m.doc_id.as_str(), m.section.as_str())))
    .collect();
    let mode = if args.relaxed { MatchMode::Relaxed } else { MatchMode::Exact };
    let result = evaluate_by_gender(&gold, &predicted, &corpus, mode);
    let mut out = Outputs::default();
    let pct = |v: Option<f64>| fmt_opt(v.map(|x| 100.0 * x), 1);
    let line = |label: &str, m: &evbias_core::analyze::EvalMetrics| {
        format!("{label}: P {} R {} F1 {} (tp {} fp {} fn {})", pct(m.precision), pct(m.recall), pct(m.f1), m.tp, m.fp, m.fn_)
    };
    out.say(line("all", &result.overall));
    for (g, m) in &result.by_gender {
        out.say(line(g.word(), m));
    }
    let mut json = serde_json::to_string_pretty(&serde_json::json!({ "mode": mode, "metrics": result }))
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    json.push('\n');
    out.file(EVAL, json);
    Ok(out)
}

fn type_cell(lexicon: &TriggerLexicon, lemma: &str) -> String {
    match lexicon.type_of(lemma) {
        Some(t) => format!("{lemma} {}", t.symbol()),
        None => lemma.to_string(),
    }
}

fn table_rows(out: &mut String, ranked: &RankedEvents, lexicon: &TriggerLexicon) {
    let or = |e: Option<&OddsRatioEntry>| e.map_or(String::new(), |e| e.odds_ratio.render());
    let name = |e: Option<&OddsRatioEntry>| e.map_or(String::new(), |e| type_cell(lexicon, &e.lemma));
    writeln!(out, "| # | female event | OR | male event | OR |").unwrap();
    writeln!(out, "|---|---|---|---|---|").unwrap();
    let n = ranked.top_female.len().max(ranked.top_male.len());
    for i in 0..n {
        let (f, m) = (ranked.top_female.get(i), ranked.top_male.get(i));
        writeln!(out, "| {} | {} | {} | {} | {} |", i + 1, name(f), or(f), name(m), or(m)).unwrap();
    }
}

pub fn report(cfg: &PipelineConfig) -> Result<Outputs, CliError> {
    let p = Pipeline::load(cfg)?;
    let ranked = p.rank()?;
    let percentiles = percentile_report(&ranked, &p.tables.male, &p.tables.female);
    let stats = corpus_stats(&p.corpus);
    let weat = match cfg.embeddings {
        Some(_) => Some(run_weat(&p, &ranked, &WeatArgs::default())?),
        None => None,
    };

    let mut md = String::new();
    writeln!(md, "# Event gender-bias report\n").unwrap();
    let docs = &p.tables.documents;
    writeln!(
        md,
        "Section `{}`, occupation `{}`: {} female and {} male documents, {} and {} event mentions.\n",
        cfg.section,
        cfg.occupation.as_deref().unwrap_or("all"),
        docs.get(&Gender::F).copied().unwrap_or(0),
        docs.get(&Gender::M).copied().unwrap_or(0),
        p.tables.female.total(),
        p.tables.male.total(),
    )
    .unwrap();

    writeln!(md, "## Corpus\n").unwrap();
    let table = stats.render_table();
    let mut lines = table.lines();
    if let Some(header) = lines.next() {
        let cols: Vec<&str> = header.split('\t').collect();
        writeln!(md, "| {} |", cols.join(" | ")).unwrap();
        writeln!(md, "|{}", "---|".repeat(cols.len())).unwrap();
    }
    for l in lines {
        writeln!(md, "| {} |", l.split('\t').collect::<Vec<_>>().join(" | ")).unwrap();
    }
    writeln!(md, "\n{} records, {} ingestion warnings.\n", p.validation.records, p.validation.warnings.len()).unwrap();

    writeln!(md, "## Top {} events by odds ratio\n", cfg.k).unwrap();
    table_rows(&mut md, &ranked, &p.lexicon);
    let legend: Vec<String> = EventType::ALL.iter().map(|t| format!("{} {}", t.symbol(), t)).collect();
    writeln!(md, "\nTypes: {}.", legend.join(", ")).unwrap();
    if !ranked.exclusive.is_empty() {
        let ex: Vec<String> = ranked.exclusive.iter().map(|e| e.lemma.clone()).collect();
        writeln!(md, "\nEvents seen for one gender only: {}.", ex.join(", ")).unwrap();
    }

    writeln!(md, "\n## Percentiles\n").unwrap();
    writeln!(md, "| event | gender | own % | opposite % |").unwrap();
    writeln!(md, "|---|---|---|---|").unwrap();
    for r in &percentiles.rows {
        writeln!(md, "| {} | {} | {:.1} | {} |", r.lemma, r.gender, r.own_pct, fmt_opt(r.opposite_pct, 1)).unwrap();
    }
    let yn = |b: bool| if b { "yes" } else { "no" };
    writeln!(
        md,
        "\nWithin own-gender top {OWN_BAND}%: {}. Within opposite-gender top {OPPOSITE_BAND}%: {}.",
        yn(percentiles.own_band_holds),
        yn(percentiles.opposite_band_holds)
    )
    .unwrap();

    writeln!(md, "\n## WEAT\n").unwrap();
    match &weat {
        Some(w) => {
            writeln!(md, "| score | effect size | raw S | female words | male words |").unwrap();
            writeln!(md, "|---|---|---|---|---|").unwrap();
            for (label, r) in [("WEAT (events)", &w.weat), ("WEAT* (all tokens)", &w.weat_star)] {
                writeln!(md, "| {label} | {} | {:.4} | {} | {} |", fmt_opt(r.effect_size, 4), r.raw_score, r.n_female, r.n_male)
                    .unwrap();
            }
        }
        None => writeln!(md, "_WEAT omitted: no embedding file configured._").unwrap(),
    }

    let warnings: Vec<&String> = p.tables.warnings.iter().chain(&ranked.warnings).collect();
    if !warnings.is_empty() {
        writeln!(md, "\n## Warnings\n").unwrap();
        for w in warnings {
            writeln!(md, "- {w}").unwrap();
        }
    }

    let mut out = Outputs::default();
    out.file(REPORT, md);
    ranking_files(&mut out, &ranked, &p.lexicon);
    out.file(PERCENTILE, percentiles.to_csv());
    if let Some(w) = &weat {
        let mut json = serde_json::to_string_pretty(w).map_err(|e| CliError::Runtime(e.to_string()))?;
        json.push('\n');
        out.file(WEAT, json);
    }
    say_ranking(&mut out, &ranked);
    say_bands(&mut out, &percentiles);
    Ok(out)
}
