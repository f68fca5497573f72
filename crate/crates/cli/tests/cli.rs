use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use memelabel_mock_llm::{scripts, spawn, MockServer};

fn fixture(path: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(path)
}

fn memelabel(cwd: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_memelabel")).current_dir(cwd).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited")
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&memelabel(dir.path(), &[])), 2);
    assert_eq!(code(&memelabel(dir.path(), &["frobnicate"])), 2);
    let missing = memelabel(dir.path(), &["ingest", "--manifest", "nope.jsonl"]);
    assert_eq!(code(&missing), 2, "{}", stderr(&missing));
    let both = memelabel(dir.path(), &["export", "--run", "r", "--store", "s", "--manifest", "m", "--output", "o"]);
    assert_eq!(code(&both), 2);
    let help = memelabel(dir.path(), &["--help"]);
    assert_eq!(code(&help), 0);
    assert!(stdout(&help).contains("annotate"));
}

#[test]
fn invalid_manifest_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dir.path().join("m.jsonl");
    std::fs::write(&manifest, "{\"id\":\"a\",\"image_path\":\"a.jpg\",\"text\":\"t\",\"propaganda\":\"maybe\"}\n")
        .unwrap();
    let out = memelabel(dir.path(), &["ingest", "--no-image-check", "--manifest", manifest.to_str().unwrap()]);
    assert_eq!(code(&out), 3, "{}", stderr(&out));
    assert!(stderr(&out).contains("line 1"), "{}", stderr(&out));
}

#[test]
fn ingest_summarizes_distribution_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let out = memelabel(
        dir.path(),
        &["ingest", "--no-image-check", "--manifest", fixture("distribution/manifest.jsonl").to_str().unwrap()],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("3,069 memes"), "{text}");
    assert!(dir.path().join("reports/ingest.json").exists());
}

#[test]
fn stats_renders_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = memelabel(
        dir.path(),
        &[
            "stats",
            "--no-image-check",
            "--manifest",
            fixture("distribution/manifest.jsonl").to_str().unwrap(),
            "--labels",
            fixture("distribution/coarse.jsonl").to_str().unwrap(),
            "--fine-labels",
            fixture("distribution/fine.jsonl").to_str().unwrap(),
        ],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    let rows: Vec<Vec<&str>> = text.lines().map(|l| l.split_whitespace().collect()).collect();
    for expected in
        [["Hateful", "212", "32", "154"], ["Not-Hateful", "1,931", "280", "452"], ["Total", "2,143", "312", "606"]]
    {
        assert!(rows.iter().any(|r| r[..] == expected[..]), "{expected:?} missing from\n{text}");
    }
    assert!(text.contains("0.327"), "{text}");
    assert!(text.contains("5.054") && text.contains("0.555"), "{text}");
    assert!(text.contains("differs from fine-grained hateful total 223"), "{text}");

    let rendered = memelabel(dir.path(), &["render", "reports/stats.json"]);
    assert_eq!(code(&rendered), 0);
    let original: String = text.lines().filter(|l| !l.starts_with("report:")).map(|l| format!("{l}\n")).collect();
    assert_eq!(stdout(&rendered), original);
}

#[test]
fn stats_with_one_class_split_is_degenerate() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dir.path().join("m.jsonl");
    let labels = dir.path().join("l.jsonl");
    let mut m = String::new();
    let mut l = String::new();
    for i in 0..4 {
        m.push_str(&format!(
            "{{\"id\":\"x{i}\",\"image_path\":\"x.jpg\",\"text\":\"t\",\"propaganda\":\"propagandistic\",\"split\":\"train\"}}\n"
        ));
        l.push_str(&format!("{{\"id\":\"x{i}\",\"coarse\":\"not_hateful\"}}\n"));
    }
    std::fs::write(&manifest, m).unwrap();
    std::fs::write(&labels, l).unwrap();
    let out = memelabel(dir.path(), &["stats", "--no-image-check", "--manifest", "m.jsonl", "--labels", "l.jsonl"]);
    assert_eq!(code(&out), 5, "{}\n{}", stdout(&out), stderr(&out));
    assert!(stdout(&out).contains("Class weights undefined"));
}

#[test]
fn agree_names_pairs_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let gold = format!("gold={}", fixture("agreement/human.jsonl").display());
    let sonnet = fixture("agreement/sonnet.jsonl");
    let out = memelabel(dir.path(), &["agree", &gold, sonnet.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("sonnet vs gold"), "{text}");
    assert!(text.contains("0.671"), "{text}");

    let rendered = memelabel(dir.path(), &["render", "reports/agreement.json"]);
    assert!(text.starts_with(&stdout(&rendered)), "{}", stdout(&rendered));

    let fine = memelabel(dir.path(), &["agree", "--fine-grained", &gold, sonnet.to_str().unwrap()]);
    assert_eq!(code(&fine), 0);
    assert!(stdout(&fine).contains("fine"));
}

#[test]
fn eval_reports_and_flags_missing_predictions() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("gold.jsonl"),
        "{\"id\":\"a\",\"coarse\":\"hateful\"}\n{\"id\":\"b\",\"coarse\":\"hateful\"}\n{\"id\":\"c\",\"coarse\":\"not_hateful\"}\n{\"id\":\"d\",\"coarse\":\"not_hateful\"}\n",
    )
    .unwrap();
    std::fs::write(
        dir.path().join("pred.jsonl"),
        "{\"id\":\"a\",\"coarse\":\"hateful\"}\n{\"id\":\"b\",\"coarse\":\"not_hateful\"}\n{\"id\":\"c\",\"coarse\":\"not_hateful\"}\n{\"id\":\"d\",\"coarse\":\"not_hateful\"}\n",
    )
    .unwrap();
    std::fs::write(dir.path().join("short.jsonl"), "{\"id\":\"a\",\"coarse\":\"hateful\"}\n").unwrap();

    let out = memelabel(dir.path(), &["eval", "--gold", "gold.jsonl", "--pred", "pred.jsonl"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("pred") && text.contains("0.750") && text.contains("0.733"), "{text}");

    let missing = memelabel(dir.path(), &["eval", "--gold", "gold.jsonl", "--pred", "short.jsonl"]);
    assert_eq!(code(&missing), 3, "{}", stderr(&missing));
}

#[test]
fn split_assigns_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let mut m = String::new();
    for i in 0..100 {
        let p = if i % 5 < 2 { "propagandistic" } else { "not_propagandistic" };
        m.push_str(&format!("{{\"id\":\"s{i:03}\",\"image_path\":\"x.jpg\",\"text\":\"t\",\"propaganda\":\"{p}\"}}\n"));
    }
    std::fs::write(dir.path().join("m.jsonl"), m).unwrap();
    for out in ["a.jsonl", "b.jsonl"] {
        let o = memelabel(dir.path(), &["split", "--no-image-check", "--manifest", "m.jsonl", "--output", out]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        assert!(stdout(&o).contains("70"), "{}", stdout(&o));
    }
    assert_eq!(std::fs::read(dir.path().join("a.jsonl")).unwrap(), std::fs::read(dir.path().join("b.jsonl")).unwrap());
    let bad = memelabel(
        dir.path(),
        &["split", "--no-image-check", "--manifest", "m.jsonl", "--output", "c.jsonl", "--ratios", "0.5,0.5"],
    );
    assert_eq!(code(&bad), 2);
}

struct Workspace {
    dir: tempfile::TempDir,
    _rt: tokio::runtime::Runtime,
    server: MockServer,
}

const DISSENTER: &str = "gemini-model";

fn disagreements() -> Vec<String> {
    (0..12).map(|i| format!("m{:03}", i * 4 + 1)).collect()
}

fn workspace(memes: usize) -> Workspace {
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build().unwrap();
    let server = rt.block_on(spawn(scripts::panel(DISSENTER, &disagreements()))).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let mut manifest = String::new();
    for i in 0..memes {
        manifest.push_str(&format!(
            "{{\"id\":\"m{i:03}\",\"image_path\":\"images/m{i:03}.png\",\"text\":\"synthetic meme [meme:m{i:03}]\",\"propaganda\":\"not_propagandistic\",\"split\":\"test\"}}\n"
        ));
    }
    std::fs::write(dir.path().join("manifest.jsonl"), manifest).unwrap();
    let mut roster = String::new();
    for (name, role) in
        [("gpt4o", "annotator"), ("sonnet", "annotator"), ("gemini", "annotator"), ("judge", "consolidator")]
    {
        roster.push_str(&format!(
            "[[agents]]\nname = \"{name}\"\nendpoint_url = \"{}\"\nmodel_id = \"{name}-model\"\nrole = \"{role}\"\nrate_limit = 100000\nbackoff_base_ms = 1\n\n",
            server.url()
        ));
    }
    std::fs::write(dir.path().join("agents.toml"), roster).unwrap();
    Workspace { dir, _rt: rt, server }
}

const RUN: &[&str] = &["--no-image-check", "--manifest", "manifest.jsonl", "--agents", "agents.toml", "--run", "run"];

fn with(cmd: &str, extra: &[&str]) -> Vec<String> {
    [cmd].iter().chain(RUN).chain(extra).map(|s| s.to_string()).collect()
}

fn run_cmd(ws: &Workspace, args: &[String]) -> Output {
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    memelabel(ws.dir.path(), &args)
}

#[test]
fn annotate_consolidate_export_with_mock_agents() {
    let ws = workspace(50);
    let first = run_cmd(&ws, &with("annotate", &[]));
    assert_eq!(code(&first), 0, "{}", stderr(&first));
    assert!(stdout(&first).contains("0/150 cached, 150 requests"), "{}", stdout(&first));

    let again = run_cmd(&ws, &with("annotate", &[]));
    assert_eq!(code(&again), 2);
    assert!(stderr(&again).contains("--resume"), "{}", stderr(&again));

    let resumed = run_cmd(&ws, &with("annotate", &["--resume"]));
    assert_eq!(code(&resumed), 0);
    assert!(stdout(&resumed).contains("150/150 cached, 0 requests"), "{}", stdout(&resumed));

    let forced = run_cmd(&ws, &with("annotate", &["--force"]));
    assert_eq!(code(&forced), 0);
    assert!(stdout(&forced).contains("150/150 cached, 0 requests"), "{}", stdout(&forced));
    assert_eq!(ws.server.counts.total(), 150);

    let cons = run_cmd(&ws, &with("consolidate", &[]));
    assert_eq!(code(&cons), 0, "{}", stderr(&cons));
    let text = stdout(&cons);
    assert!(text.contains("12 consolidator calls"), "{text}");
    let rows: Vec<Vec<&str>> = text.lines().map(|l| l.split_whitespace().collect()).collect();
    assert!(rows.iter().any(|r| r[..] == ["majority_vote", "38"]), "{text}");
    assert!(rows.iter().any(|r| r[..] == ["llm_consolidator", "12"]), "{text}");
    assert_eq!(ws.server.counts.for_model("judge-model"), 12);

    let export = memelabel(ws.dir.path(), &["export", "--run", "run", "--output", "labels.jsonl"]);
    assert_eq!(code(&export), 0, "{}", stderr(&export));
    let exported = std::fs::read_to_string(ws.dir.path().join("labels.jsonl")).unwrap();
    assert_eq!(exported.lines().count(), 50);
    assert_eq!(exported, std::fs::read_to_string(ws.dir.path().join("run/labels.consolidated.jsonl")).unwrap());

    let per_agent =
        memelabel(ws.dir.path(), &["export", "--run", "run", "--source", "gemini", "--output", "gemini.jsonl"]);
    assert_eq!(code(&per_agent), 0);
    let unknown = memelabel(ws.dir.path(), &["export", "--run", "run", "--source", "nobody", "--output", "x.jsonl"]);
    assert_eq!(code(&unknown), 2, "{}", stderr(&unknown));

    let agree = memelabel(ws.dir.path(), &["agree", "gpt4o=run/../gemini.jsonl", "consolidated=labels.jsonl"]);
    assert_eq!(code(&agree), 0, "{}", stderr(&agree));
}

#[test]
fn failed_agent_exits_4_and_resume_retries_only_failures() {
    let ws = workspace(6);
    let roster = std::fs::read_to_string(ws.dir.path().join("agents.toml")).unwrap();
    let broken = roster.replacen(&ws.server.url(), "http://127.0.0.1:9/v1/generate", 1);
    std::fs::write(
        ws.dir.path().join("agents.toml"),
        broken.replace("backoff_base_ms = 1", "backoff_base_ms = 1\nmax_retries = 0\nrequest_timeout = 2.0"),
    )
    .unwrap();
    let out = run_cmd(&ws, &with("annotate", &[]));
    assert_eq!(code(&out), 4, "{}\n{}", stdout(&out), stderr(&out));
    let failures = std::fs::read_to_string(ws.dir.path().join("run/failures.jsonl")).unwrap();
    assert_eq!(failures.lines().count(), 6, "{failures}");

    std::fs::write(ws.dir.path().join("agents.toml"), roster).unwrap();
    let before = ws.server.counts.total();
    let resumed = run_cmd(&ws, &with("annotate", &["--resume"]));
    assert_eq!(code(&resumed), 0, "{}", stderr(&resumed));
    assert_eq!(ws.server.counts.total() - before, 6);
    assert_eq!(std::fs::read_to_string(ws.dir.path().join("run/failures.jsonl")).unwrap_or_default(), "");
}

#[test]
fn missing_credential_is_reported_before_any_request() {
    let ws = workspace(3);
    let roster = std::fs::read_to_string(ws.dir.path().join("agents.toml")).unwrap();
    let with_key =
        roster.replacen("role = \"annotator\"", "role = \"annotator\"\napi_key_env = \"MEMELABEL_TEST_UNSET_KEY\"", 1);
    std::fs::write(ws.dir.path().join("agents.toml"), with_key).unwrap();
    let out = run_cmd(&ws, &with("annotate", &[]));
    assert_eq!(code(&out), 3, "{}", stderr(&out));
    assert!(stderr(&out).contains("MEMELABEL_TEST_UNSET_KEY"));
    assert_eq!(ws.server.counts.total(), 0);
    assert!(!ws.dir.path().join("run").exists());
}
