use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use memelabel_agents::{Agent, ResponseCache, Roster};
use memelabel_core::annotation::AnnotationRun;
use memelabel_core::dataset::{
    class_weights, coarse_counts, crosstab, distribution, file_digest, load_labels, load_manifest, manifest_root,
    stratified_split, write_labels, write_manifest, LabelSet, LoadOptions, MemeRecord, Propaganda, Split, SplitRatios,
};
use memelabel_core::metrics::{agreement_matrix, evaluate, AgreementOptions, LabelLevel, LabelVector};
use memelabel_core::report::{thousands, Table};
use memelabel_pipeline::{
    annotate_all, consolidate_all, export_labels, write_run_outputs, ConsolidatePolicy, ImageSource, OpenMode, RunStore,
};
use memelabel_service::{AppState, HumanStore};

use crate::args::*;
use crate::error::{CliError, EXIT_DEGENERATE, EXIT_OK, EXIT_PARTIAL};
use crate::saved::SavedReport;

type Out<'a> = &'a mut dyn Write;

fn emit(out: Out, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes()).map_err(CliError::runtime)
}

fn load_options(m: &ManifestArgs) -> LoadOptions {
    LoadOptions { check_images: !m.no_image_check, root: m.image_root.clone() }
}

fn image_root(m: &ManifestArgs) -> PathBuf {
    m.image_root.clone().unwrap_or_else(|| manifest_root(&m.manifest))
}

fn load_memes(m: &ManifestArgs) -> Result<Vec<MemeRecord>, CliError> {
    Ok(load_manifest(&m.manifest, &load_options(m))?)
}

fn parse_split(raw: &str) -> Result<Option<Split>, CliError> {
    if raw == "all" {
        return Ok(None);
    }
    raw.parse::<Split>().map(Some).map_err(CliError::usage)
}

fn parse_level(raw: &str) -> Result<LabelLevel, CliError> {
    raw.parse().map_err(|e: String| CliError::usage(e))
}

fn runtime() -> Result<tokio::runtime::Runtime, CliError> {
    tokio::runtime::Builder::new_multi_thread().enable_all().build().map_err(CliError::runtime)
}

pub fn ingest(args: &IngestArgs, out: Out) -> Result<i32, CliError> {
    let memes = load_memes(&args.manifest)?;
    let mut table = Table::new(["Split", "Memes", "Propagandistic"]);
    let mut summary = BTreeMap::new();
    let scopes: Vec<(&str, Option<Option<Split>>)> = vec![
        ("train", Some(Some(Split::Train))),
        ("dev", Some(Some(Split::Dev))),
        ("test", Some(Some(Split::Test))),
        ("unassigned", Some(None)),
        ("total", None),
    ];
    for (name, scope) in scopes {
        let in_scope: Vec<&MemeRecord> = memes.iter().filter(|m| scope.is_none_or(|s| m.split == s)).collect();
        if name == "unassigned" && in_scope.is_empty() {
            continue;
        }
        let prop = in_scope.iter().filter(|m| m.propaganda == Propaganda::Propagandistic).count();
        table.row([name.to_string(), thousands(in_scope.len()), thousands(prop)]);
        summary.insert(name.to_string(), serde_json::json!({"memes": in_scope.len(), "propagandistic": prop}));
    }
    emit(out, &format!("{}: {} memes, valid\n", args.manifest.manifest.display(), thousands(memes.len())))?;
    emit(out, &table.render())?;
    let report = serde_json::json!({
        "kind": "ingest",
        "manifest": args.manifest.manifest,
        "digest": file_digest(&args.manifest.manifest)?,
        "images_checked": !args.manifest.no_image_check,
        "splits": summary,
    });
    std::fs::create_dir_all(&args.out).map_err(CliError::runtime)?;
    memelabel_core::dataset::write_atomic(
        &args.out.join("ingest.json"),
        &serde_json::to_vec_pretty(&report).expect("serializes"),
    )?;
    Ok(EXIT_OK)
}

pub fn split(args: &SplitArgs, out: Out) -> Result<i32, CliError> {
    let parts: Vec<f64> = args
        .ratios
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::usage(format!("--ratios `{}` is not three comma-separated numbers", args.ratios)))?;
    let [train, dev, test] = parts[..] else {
        return Err(CliError::usage(format!("--ratios `{}` needs exactly three values", args.ratios)));
    };
    let ratios = SplitRatios::new(train, dev, test)?;
    let memes = load_memes(&args.manifest)?;
    let assigned = stratified_split(&memes, ratios, args.seed)?;
    write_manifest(&args.output, &assigned)?;
    let mut table = Table::new(["Split", "Memes", "Propagandistic"]);
    for split in Split::ALL {
        let in_split: Vec<&MemeRecord> = assigned.iter().filter(|m| m.split == Some(split)).collect();
        let prop = in_split.iter().filter(|m| m.propaganda == Propaganda::Propagandistic).count();
        table.row([split.as_str().to_string(), thousands(in_split.len()), thousands(prop)]);
    }
    emit(out, &format!("seed {}, ratios {train}/{dev}/{test} -> {}\n", args.seed, args.output.display()))?;
    emit(out, &table.render())?;
    Ok(EXIT_OK)
}

struct Prepared {
    memes: Vec<MemeRecord>,
    roster: Roster,
    cache: ResponseCache,
    images: ImageSource,
    digest: String,
}

fn prepare(common: &RunArgs) -> Result<Prepared, CliError> {
    let roster = Roster::load(&common.agents)?;
    roster.check_credentials()?;
    let memes = load_memes(&common.manifest)?;
    let digest = file_digest(&common.manifest.manifest)?;
    let cache_path = common
        .cache
        .clone()
        .unwrap_or_else(|| manifest_root(&common.manifest.manifest).join(".memelabel-cache/responses.jsonl"));
    let cache = ResponseCache::open(&cache_path).map_err(CliError::runtime)?;
    Ok(Prepared { images: ImageSource::new(image_root(&common.manifest)), memes, roster, cache, digest })
}

pub fn annotate(args: &AnnotateArgs, out: Out) -> Result<i32, CliError> {
    let p = prepare(&args.common)?;
    let annotators: Vec<Arc<Agent>> = p
        .roster
        .annotators()
        .map(|cfg| Agent::new(cfg.clone(), p.roster.template_for(cfg).clone()).map(Arc::new))
        .collect::<Result<_, _>>()?;
    if annotators.is_empty() {
        return Err(CliError::validation(format!("{}: no annotator agents configured", args.common.agents.display())));
    }
    let split = args.split.as_deref().map(parse_split).transpose()?.flatten();
    let scope: Vec<String> = p
        .memes
        .iter()
        .filter(|m| split.is_none() || m.split == split)
        .take(args.limit.unwrap_or(usize::MAX))
        .map(|m| m.id.clone())
        .collect();
    let mode = match (args.resume, args.force) {
        (true, _) => OpenMode::Resume,
        (_, true) => OpenMode::Force,
        _ => OpenMode::Create,
    };
    let roster: Vec<_> = p.roster.agents.iter().map(|a| a.roster_entry()).collect();
    let (store, mut run) = RunStore::open(&args.common.run, mode, &p.digest, &scope, &roster)?;

    let stats = runtime()?.block_on(annotate_all(&mut run, &store, &p.memes, &p.images, &annotators, &p.cache))?;
    p.cache.compact().map_err(CliError::runtime)?;

    let answered_locally = stats.cached + stats.already_done;
    emit(out, &format!("{}/{} cached, {} requests\n", answered_locally, stats.pairs, stats.requested))?;
    if stats.already_done > 0 {
        emit(out, &format!("({} taken from the existing run journal)\n", stats.already_done))?;
    }
    emit(out, &annotator_table(&run, &annotators))?;
    let summary = serde_json::to_vec_pretty(&stats).expect("serializes");
    memelabel_core::dataset::write_atomic(&store.dir().join("annotate.json"), &summary)?;
    write_run_outputs(&run, store.paths())?;
    Ok(if stats.failures() > 0 { EXIT_PARTIAL } else { EXIT_OK })
}

fn annotator_table(run: &AnnotationRun, annotators: &[Arc<Agent>]) -> String {
    use memelabel_core::annotation::ResponseStatus as S;
    let mut table = Table::new(["Agent", "ok", "parse_failed", "transport_failed", "pending"]);
    for agent in annotators {
        let mut counts = [0usize; 4];
        for id in &run.memes {
            let slot = match run.response(id, agent.name()).map(|r| r.status) {
                Some(S::Ok) => 0,
                Some(S::ParseFailed) => 1,
                Some(S::TransportFailed) => 2,
                None => 3,
            };
            counts[slot] += 1;
        }
        let mut row = vec![agent.name().to_string()];
        row.extend(counts.iter().map(|&n| thousands(n)));
        table.row(row);
    }
    table.render()
}

pub fn consolidate(args: &ConsolidateArgs, out: Out) -> Result<i32, CliError> {
    let p = prepare(&args.common)?;
    let (store, mut run) = RunStore::existing(&args.common.run)?;
    if run.manifest_digest != p.digest {
        return Err(CliError::validation(format!(
            "manifest changed since {} was annotated",
            args.common.run.display()
        )));
    }
    let consolidator =
        p.roster.consolidator().map(|cfg| Agent::new(cfg.clone(), p.roster.template_for(cfg).clone())).transpose()?;
    if let Some(c) = &consolidator {
        run.enroll(c.config().roster_entry());
    }
    let policy = ConsolidatePolicy { consolidate_all: args.consolidate_all };
    let stats = runtime()?.block_on(consolidate_all(
        &mut run,
        &store,
        &p.memes,
        &p.images,
        consolidator.as_ref(),
        &p.cache,
        policy,
    ))?;
    p.cache.compact().map_err(CliError::runtime)?;
    let export = write_run_outputs(&run, store.paths())?;

    let mut table = Table::new(["Method", "Memes"]);
    table.row(["llm_consolidator".to_string(), thousands(stats.llm_consolidator)]);
    table.row(["majority_vote".to_string(), thousands(stats.majority_vote)]);
    table.row(["unresolved".to_string(), thousands(stats.unresolved)]);
    emit(
        out,
        &format!(
            "{} memes, {} unanimous, {} consolidator calls ({} cached)\n",
            stats.memes, stats.unanimous, stats.consolidator_calls, stats.consolidator_cached
        ),
    )?;
    emit(out, &table.render())?;
    emit(out, &format!("wrote {} labels to {}\n", export.labels.len(), store.paths().consolidated().display()))?;
    let summary = serde_json::to_vec_pretty(&stats).expect("serializes");
    memelabel_core::dataset::write_atomic(&store.dir().join("consolidate.json"), &summary)?;
    Ok(if stats.unresolved > 0 { EXIT_PARTIAL } else { EXIT_OK })
}

fn sidecar(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".unresolved.jsonl");
    PathBuf::from(name)
}

pub fn export(args: &ExportArgs, out: Out) -> Result<i32, CliError> {
    let (labels, unresolved) = match (&args.run, &args.store) {
        (Some(run_dir), _) => {
            let run = AnnotationRun::load(run_dir).map_err(|e| match e {
                memelabel_core::dataset::DatasetError::Io { .. } => {
                    CliError::usage(format!("{}: not an annotation run directory", run_dir.display()))
                }
                other => other.into(),
            })?;
            let export = export_labels(&run, &args.source)?;
            let sidecar_text = export.render_unresolved();
            (export.labels, sidecar_text)
        }
        (None, Some(store_dir)) => {
            let Some(who) = memelabel_service::store::annotator_of(&args.source) else {
                return Err(CliError::usage("with --store, --source must be `human` or `human:<id>`"));
            };
            let manifest = args.manifest.as_ref().expect("clap requires --manifest with --store");
            let memes = load_manifest(manifest, &LoadOptions::without_image_check())?;
            let store = HumanStore::open(store_dir).map_err(CliError::runtime)?;
            let order: Vec<String> = memes.into_iter().map(|m| m.id).collect();
            (store.export(who, &order), String::new())
        }
        (None, None) => unreachable!("clap requires --run or --store"),
    };
    write_labels(&args.output, &labels)?;
    let side = sidecar(&args.output);
    if unresolved.is_empty() {
        let _ = std::fs::remove_file(&side);
    } else {
        memelabel_core::dataset::write_atomic(&side, unresolved.as_bytes())?;
    }
    let n_unresolved = unresolved.lines().count();
    emit(
        out,
        &format!(
            "exported {} `{}` labels to {}{}\n",
            labels.len(),
            args.source,
            args.output.display(),
            if n_unresolved > 0 {
                format!(" ({n_unresolved} unresolved listed in {})", side.display())
            } else {
                String::new()
            }
        ),
    )?;
    Ok(EXIT_OK)
}

fn rater_name(arg: &str) -> (String, PathBuf) {
    match arg.split_once('=') {
        Some((name, path)) if !name.is_empty() && !name.contains(std::path::MAIN_SEPARATOR) => {
            (name.to_string(), PathBuf::from(path))
        }
        _ => {
            let path = PathBuf::from(arg);
            let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| arg.to_string());
            let stem = stem.strip_prefix("labels.").unwrap_or(&stem).to_string();
            (stem, path)
        }
    }
}

pub fn agree(args: &AgreeArgs, out: Out) -> Result<i32, CliError> {
    let level = if args.fine_grained { LabelLevel::Fine } else { parse_level(&args.level)? };
    let mut vectors = Vec::new();
    let mut notes = Vec::new();
    for arg in &args.files {
        let (name, path) = rater_name(arg);
        if vectors.iter().any(|(n, _)| *n == name) {
            return Err(CliError::usage(format!("rater name `{name}` given twice; use name=path")));
        }
        let records = load_labels(&path)?;
        let (vector, skipped) = LabelVector::from_labels(&records, level)?;
        if skipped > 0 {
            notes.push(format!("{name}: {skipped} labels without a {level} label skipped"));
        }
        vectors.push((name, vector));
    }
    let mut opts = AgreementOptions::new(level.as_str());
    opts.multi_rater = args.multi_rater.clone();
    opts.human_names = args.human.clone();
    opts.consolidator_names = args.consolidator.clone();
    let report = agreement_matrix(&vectors, &opts)?;
    let saved = SavedReport::Agreement { report };
    emit(out, &saved.render())?;
    for note in notes {
        emit(out, &format!("note: {note}\n"))?;
    }
    let path = saved.save(&args.out)?;
    emit(out, &format!("report: {}\n", path.display()))?;
    let SavedReport::Agreement { report } = &saved else { unreachable!() };
    Ok(if report.degenerate() { EXIT_DEGENERATE } else { EXIT_OK })
}

pub fn stats(args: &StatsArgs, out: Out) -> Result<i32, CliError> {
    let memes = load_memes(&args.manifest)?;
    let coarse: LabelSet = load_labels(&args.labels)?.iter().collect();
    let fine: LabelSet = match &args.fine_labels {
        Some(path) => load_labels(path)?.iter().collect(),
        None => load_labels(&args.labels)?.iter().collect(),
    };
    let dist = distribution(&memes, &coarse, &fine);
    let tab = crosstab(&memes, &coarse, parse_split(&args.crosstab_split)?);
    let weights_scope = parse_split(&args.weights_split)?;
    let (weights, weights_error) = match class_weights(&coarse_counts(&memes, &coarse, weights_scope)) {
        Ok(w) => (Some(w), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let degenerate = weights.is_none() || tab.hateful_share_of_propagandistic.is_none();
    let saved = SavedReport::Stats {
        distribution: dist,
        crosstab: tab,
        class_weights: weights,
        class_weights_error: weights_error,
    };
    emit(out, &saved.render())?;
    let path = saved.save(&args.out)?;
    emit(out, &format!("report: {}\n", path.display()))?;
    Ok(if degenerate { EXIT_DEGENERATE } else { EXIT_OK })
}

pub fn eval(args: &EvalArgs, out: Out) -> Result<i32, CliError> {
    let level = parse_level(&args.level)?;
    let (gold, gold_skipped) = LabelVector::from_labels(&load_labels(&args.gold)?, level)?;
    let (pred, _) = LabelVector::from_labels(&load_labels(&args.pred)?, level)?;
    let report = evaluate(&gold, &pred)?;
    let title = args.title.clone().unwrap_or_else(|| rater_name(&args.pred.to_string_lossy()).0);
    let saved = SavedReport::Eval { title, report };
    emit(out, &saved.render())?;
    if gold_skipped > 0 {
        emit(out, &format!("note: {gold_skipped} gold labels without a {level} label skipped\n"))?;
    }
    let path = saved.save(&args.out)?;
    emit(out, &format!("report: {}\n", path.display()))?;
    Ok(EXIT_OK)
}

pub fn render(args: &RenderArgs, out: Out) -> Result<i32, CliError> {
    let saved = SavedReport::load(&args.report)?;
    emit(out, &saved.render())?;
    Ok(EXIT_OK)
}

pub fn serve(args: &ServeArgs, out: Out) -> Result<i32, CliError> {
    let state = AppState::load(&args.manifest, args.run.as_deref(), &args.store).map_err(|e| match e {
        memelabel_service::ServiceError::Dataset(d) => CliError::from(d),
        other => CliError::runtime(other),
    })?;
    emit(out, &format!("review service on http://{} ({} memes)\n", args.bind, thousands(state.memes.len())))?;
    out.flush().map_err(CliError::runtime)?;
    runtime()?.block_on(memelabel_service::serve(args.bind, state, &args.cors_origins)).map_err(CliError::runtime)?;
    Ok(EXIT_OK)
}
