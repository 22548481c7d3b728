use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use nl2stl_core::eval::{corpus_stats, evaluate, load_corpus, EvalPair};
use nl2stl_core::lifting::{ground, lift, ApMap, DomainProfile, FullPair, LiftedPair};
use nl2stl_core::llm::{
    BackendConfig, CompletionBackend, ExamplePool, Gateway, MockBackend, OpenAiBackend,
};
use nl2stl_core::pipeline::{
    ingest_full_pairs, write_records, Framework, Generator, Renderings,
};
use nl2stl_core::syntax::{
    convert, linearize, parse, parse_full, pre_order_list_literal, FormatSpec, Lexicon,
};
use nl2stl_core::synthesis::{synthesize_batch, SynthConfig};
use serde_json::{json, Value};

use crate::error::{io, CliError};
use crate::{BackendKind, Command, Numbering, OutputKind};

pub fn dispatch(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Synth {
            n,
            config,
            max_aps,
            seed,
            format,
            list_literal,
            out,
            report,
        } => synth(n, config, max_aps, seed, &format, list_literal, out, report),
        Command::Convert {
            from,
            to,
            input,
            formulas,
        } => convert_cmd(&from, &to, input, formulas),
        Command::Lift {
            domain,
            format,
            numbering,
            input,
            out,
        } => lift_cmd(&domain, &format, numbering, input, out),
        Command::Ground {
            dict,
            format,
            input,
            out,
        } => ground_cmd(dict, &format, input, out),
        Command::Gen {
            framework,
            n,
            backend,
            seed,
            max_aps,
            synth_config,
            backend_config,
            k,
            pool,
            mock_table,
            domain,
            no_dedup,
            workers,
            out,
            manifest,
            audit_log,
        } => gen(GenArgs {
            framework,
            n,
            backend,
            seed,
            max_aps,
            synth_config,
            backend_config,
            k,
            pool,
            mock_table,
            domain,
            dedup: !no_dedup,
            workers,
            out,
            manifest,
            audit_log,
        }),
        Command::Ingest {
            domain,
            dict,
            format,
            input,
            out,
            quarantine,
        } => ingest(&domain, dict, &format, &input, &out, quarantine),
        Command::Eval {
            pred,
            gold,
            pairs,
            format,
            output,
            report,
            csv,
        } => eval_cmd(pred, gold, pairs, &format, output, report, csv),
        Command::Stats { dataset, output } => stats(&dataset, output),
        Command::Serve {
            dataset,
            host,
            port,
        } => crate::serve::run_blocking(&dataset, &host, port),
    }
}

fn format_arg(name: &str) -> Result<FormatSpec, CliError> {
    name.parse().map_err(|e: nl2stl_core::syntax::UnknownFormat| CliError::Usage(e.to_string()))
}

fn read_text(path: Option<&Path>) -> Result<String, CliError> {
    match path {
        Some(p) => std::fs::read_to_string(p).map_err(|e| io(p.display(), e)),
        None => {
            let mut s = String::new();
            std::io::stdin()
                .read_to_string(&mut s)
                .map_err(|e| io("stdin", e))?;
            Ok(s)
        }
    }
}

fn write_text(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| io(p.display(), e)),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| io("stdout", e)),
    }
}

fn read_toml<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| io(path.display(), e))?;
    toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

/// Reports per-line failures on stderr and turns them into one parse error.
fn finish_lines(failures: Vec<String>, total: usize) -> Result<(), CliError> {
    for f in &failures {
        eprintln!("{f}");
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Parse(format!("{} of {total} lines failed", failures.len())))
    }
}

fn json_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

#[allow(clippy::too_many_arguments)]
fn synth(
    n: usize,
    config: Option<PathBuf>,
    max_aps: Option<usize>,
    seed: Option<u64>,
    format: &str,
    list_literal: bool,
    out: Option<PathBuf>,
    report: Option<PathBuf>,
) -> Result<(), CliError> {
    let fmt = format_arg(format)?;
    let mut cfg: SynthConfig = match &config {
        Some(p) => read_toml(p)?,
        None => SynthConfig::default(),
    };
    if let Some(m) = max_aps {
        cfg.max_aps = m;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let batch = synthesize_batch(&cfg, n)?;
    let mut text = String::new();
    for f in &batch.formulas {
        let line = if list_literal {
            pre_order_list_literal(f, fmt.op_style)
        } else {
            linearize(f, fmt)
        };
        text.push_str(&line);
        text.push('\n');
    }
    write_text(out.as_deref(), &text)?;
    if let Some(p) = report {
        let json = serde_json::to_string_pretty(&batch.report).expect("serializable");
        std::fs::write(&p, json).map_err(|e| io(p.display(), e))?;
    }
    Ok(())
}

fn convert_cmd(
    from: &str,
    to: &str,
    input: Option<PathBuf>,
    formulas: Vec<String>,
) -> Result<(), CliError> {
    let (from, to) = (format_arg(from)?, format_arg(to)?);
    let text = if formulas.is_empty() {
        read_text(input.as_deref())?
    } else {
        formulas.join("\n")
    };
    let mut out = String::new();
    let mut failures = Vec::new();
    let mut total = 0;
    for (line_no, line) in json_lines(&text) {
        total += 1;
        let result = if line.starts_with('{') {
            convert_json_line(line, from, to)
        } else {
            convert(line, from, to).map_err(|e| e.to_string())
        };
        match result {
            Ok(s) => {
                out.push_str(&s);
                out.push('\n');
            }
            Err(e) => failures.push(format!("line {line_no}: {e}")),
        }
    }
    write_text(None, &out)?;
    finish_lines(failures, total)
}

fn convert_json_line(line: &str, from: FormatSpec, to: FormatSpec) -> Result<String, String> {
    let mut v: Value = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let stl = v
        .get("stl")
        .and_then(Value::as_str)
        .ok_or("object has no string `stl` field")?;
    let converted = convert(stl, from, to).map_err(|e| e.to_string())?;
    v["stl"] = Value::String(converted);
    Ok(v.to_string())
}

#[derive(serde::Deserialize)]
struct PairRow {
    nl: String,
    stl: String,
    #[serde(default)]
    ap_map: Option<ApMap>,
}

fn lift_cmd(
    domain: &str,
    format: &str,
    numbering: Numbering,
    input: Option<PathBuf>,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    let fmt = format_arg(format)?;
    let profile = DomainProfile::resolve(domain).map_err(|e| CliError::Usage(e.to_string()))?;
    let recognizer = profile.recognizer();
    let lexicon = profile.lexicon();
    let text = read_text(input.as_deref())?;
    let mut out_text = String::new();
    let mut failures = Vec::new();
    let mut total = 0;
    for (line_no, line) in json_lines(&text) {
        total += 1;
        match lift_line(line, fmt, numbering, &lexicon, &recognizer) {
            Ok(v) => {
                out_text.push_str(&v.to_string());
                out_text.push('\n');
            }
            Err(e) => failures.push(format!("line {line_no}: {e}")),
        }
    }
    write_text(out.as_deref(), &out_text)?;
    finish_lines(failures, total)
}

fn lift_line(
    line: &str,
    fmt: FormatSpec,
    numbering: Numbering,
    lexicon: &Lexicon,
    recognizer: &nl2stl_core::lifting::DictionaryRecognizer,
) -> Result<Value, String> {
    let row: PairRow = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let stl = parse_full(&row.stl, fmt, lexicon).map_err(|e| e.to_string())?;
    let mut ap_map = match row.ap_map {
        Some(m) => m,
        None => nl2stl_core::lifting::recognize_aps(&row.nl, recognizer).map_err(|e| e.to_string())?,
    };
    if numbering == Numbering::Formula {
        ap_map = ap_map.renumbered_by_formula(&stl);
    }
    let full = FullPair {
        nl: row.nl,
        stl,
        ap_map,
    };
    let lifted = lift(&full).map_err(|e| e.to_string())?;
    Ok(json!({
        "nl": lifted.nl,
        "stl": linearize(&lifted.stl, fmt),
        "ap_map": full.ap_map,
    }))
}

fn ground_cmd(
    dict: Option<PathBuf>,
    format: &str,
    input: Option<PathBuf>,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    let fmt = format_arg(format)?;
    let shared: Option<ApMap> = match &dict {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| io(p.display(), e))?;
            Some(serde_json::from_str(&text).map_err(|e| CliError::Parse(format!("{}: {e}", p.display())))?)
        }
        None => None,
    };
    let text = read_text(input.as_deref())?;
    let mut out_text = String::new();
    let mut failures = Vec::new();
    let mut total = 0;
    for (line_no, line) in json_lines(&text) {
        total += 1;
        let result = (|| {
            let row: PairRow = serde_json::from_str(line).map_err(|e| e.to_string())?;
            let map = row
                .ap_map
                .or_else(|| shared.clone())
                .ok_or("row has no ap_map and no --dict was given")?;
            let stl = parse(&row.stl, fmt).map_err(|e| e.to_string())?;
            let full = ground(&LiftedPair { nl: row.nl, stl }, &map).map_err(|e| e.to_string())?;
            Ok::<_, String>(json!({
                "nl": full.nl,
                "stl": linearize(&full.stl, fmt),
                "ap_map": full.ap_map,
            }))
        })();
        match result {
            Ok(v) => {
                out_text.push_str(&v.to_string());
                out_text.push('\n');
            }
            Err(e) => failures.push(format!("line {line_no}: {e}")),
        }
    }
    write_text(out.as_deref(), &out_text)?;
    finish_lines(failures, total)
}

struct GenArgs {
    framework: u8,
    n: usize,
    backend: BackendKind,
    seed: Option<u64>,
    max_aps: Option<usize>,
    synth_config: Option<PathBuf>,
    backend_config: Option<PathBuf>,
    k: Option<usize>,
    pool: Option<PathBuf>,
    mock_table: Option<PathBuf>,
    domain: String,
    dedup: bool,
    workers: usize,
    out: PathBuf,
    manifest: Option<PathBuf>,
    audit_log: Option<PathBuf>,
}

fn gen(a: GenArgs) -> Result<(), CliError> {
    let mut synth: SynthConfig = match &a.synth_config {
        Some(p) => read_toml(p)?,
        None => SynthConfig::default(),
    };
    if let Some(s) = a.seed {
        synth.seed = s;
    }
    if let Some(m) = a.max_aps {
        synth.max_aps = m;
    }
    synth.validate()?;
    let pool = match &a.pool {
        Some(p) => ExamplePool::load(p).map_err(|e| CliError::Usage(e.to_string()))?,
        None => ExamplePool::bundled(),
    };
    if let Some(k) = a.k {
        if k == 0 || k > pool.pairs.len() {
            return Err(CliError::Usage(format!(
                "--k must be between 1 and the pool size ({})",
                pool.pairs.len()
            )));
        }
    }
    let config: BackendConfig = match &a.backend_config {
        Some(p) => read_toml(p)?,
        None => BackendConfig::default(),
    };
    config.validate()?;
    let backend: Arc<dyn CompletionBackend> = match a.backend {
        BackendKind::Mock => Arc::new(match &a.mock_table {
            Some(p) => MockBackend::load(p)?,
            None => MockBackend::bundled(),
        }),
        BackendKind::Live => Arc::new(OpenAiBackend::from_env(config.clone())?),
    };
    let mut gateway = Gateway::new(backend, config);
    if let Some(p) = &a.audit_log {
        gateway = gateway.with_audit_log(p).map_err(|e| io(p.display(), e))?;
    }
    let mut generator = Generator::new(&gateway, &pool, synth);
    if let Some(k) = a.k {
        generator.stl_to_nl.k = k;
        generator.nl_to_stl.k = k;
    }
    generator.options.domain = a.domain;
    generator.options.dedup = a.dedup;
    generator.options.workers = a.workers;
    let framework = if a.framework == 1 {
        Framework::One
    } else {
        Framework::Two
    };
    let (records, manifest) = generator.run(framework, a.n)?;
    write_records(&a.out, &records)?;
    let manifest_path = a.manifest.unwrap_or_else(|| {
        let mut s = a.out.clone().into_os_string();
        s.push(".manifest.json");
        PathBuf::from(s)
    });
    let json = serde_json::to_string_pretty(&manifest).expect("serializable");
    std::fs::write(&manifest_path, json).map_err(|e| io(manifest_path.display(), e))?;
    let c = &manifest.counts;
    eprintln!(
        "requested {} produced {} parse_failed {} sanity_rejected {} deduped {} backend_failed {}",
        c.requested, c.produced, c.parse_failed, c.sanity_rejected, c.deduped, c.backend_failed
    );
    if c.requested > 0 && c.backend_failed == c.requested {
        return Err(CliError::Backend(format!(
            "every backend call failed; see {}",
            manifest_path.display()
        )));
    }
    Ok(())
}

fn ingest(
    domain: &str,
    dict: Option<PathBuf>,
    format: &str,
    input: &Path,
    out: &Path,
    quarantine: Option<PathBuf>,
) -> Result<(), CliError> {
    let fmt = format_arg(format)?;
    let mut profile = DomainProfile::resolve(domain).map_err(|e| CliError::Usage(e.to_string()))?;
    if let Some(p) = dict {
        let text = std::fs::read_to_string(&p).map_err(|e| io(p.display(), e))?;
        profile.entries = nl2stl_core::lifting::parse_dictionary(&text);
    }
    let report = ingest_full_pairs(input, &profile, &profile.recognizer(), fmt, quarantine.as_deref())
        .map_err(|e| match e {
            nl2stl_core::pipeline::IngestError::SchemaMismatch { .. } => CliError::Parse(e.to_string()),
            other => CliError::Io(other.to_string()),
        })?;
    write_records(out, &report.records)?;
    eprintln!(
        "ingested {} quarantined {}",
        report.records.len(),
        report.quarantined.len()
    );
    Ok(())
}

const PRED_KEYS: [&str; 4] = ["pred", "prediction", "stl", "output"];
const GOLD_KEYS: [&str; 3] = ["gold", "stl", "target"];

/// One formula string per non-empty line. JSON objects are searched for the
/// given keys; dataset records contribute their rendering in `fmt`.
fn formula_lines(text: &str, keys: &[&str], fmt: FormatSpec) -> Result<Vec<String>, CliError> {
    json_lines(text)
        .map(|(line_no, line)| {
            if !line.starts_with('{') {
                return Ok(line.to_string());
            }
            let v: Value = serde_json::from_str(line)
                .map_err(|e| CliError::Parse(format!("line {line_no}: {e}")))?;
            if let Some(r) = v.get("lifted_stl").filter(|x| x.is_object()) {
                let r: Renderings = serde_json::from_value(r.clone())
                    .map_err(|e| CliError::Parse(format!("line {line_no}: {e}")))?;
                return Ok(r.get(fmt).to_string());
            }
            keys.iter()
                .find_map(|k| v.get(*k).and_then(Value::as_str))
                .map(String::from)
                .ok_or_else(|| {
                    CliError::Parse(format!("line {line_no}: none of {keys:?} present"))
                })
        })
        .collect()
}

fn eval_cmd(
    pred: Option<PathBuf>,
    gold: Option<PathBuf>,
    pairs: Option<PathBuf>,
    format: &str,
    output: OutputKind,
    report: Option<PathBuf>,
    csv: Option<PathBuf>,
) -> Result<(), CliError> {
    let fmt = format_arg(format)?;
    let items: Vec<EvalPair> = match (pairs, pred, gold) {
        (Some(p), _, _) => {
            let text = read_text(Some(&p))?;
            json_lines(&text)
                .map(|(n, l)| {
                    serde_json::from_str(l).map_err(|e| CliError::Parse(format!("line {n}: {e}")))
                })
                .collect::<Result<_, _>>()?
        }
        (None, Some(p), Some(g)) => {
            let preds = formula_lines(&read_text(Some(&p))?, &PRED_KEYS, fmt)?;
            let golds = formula_lines(&read_text(Some(&g))?, &GOLD_KEYS, fmt)?;
            if preds.len() != golds.len() {
                return Err(CliError::Usage(format!(
                    "{} predictions but {} gold formulas",
                    preds.len(),
                    golds.len()
                )));
            }
            preds
                .into_iter()
                .zip(golds)
                .map(|(pred, gold)| EvalPair { pred, gold })
                .collect()
        }
        _ => return Err(CliError::Usage("give --pairs or both --pred and --gold".into())),
    };
    let rep = evaluate(&items, fmt).map_err(|e| match e {
        nl2stl_core::eval::EvalError::EmptyInput => CliError::Usage(e.to_string()),
        other => CliError::Parse(other.to_string()),
    })?;
    if let Some(p) = report {
        let json = serde_json::to_string_pretty(&rep).expect("serializable");
        std::fs::write(&p, json).map_err(|e| io(p.display(), e))?;
    }
    if let Some(p) = csv {
        std::fs::write(&p, rep.to_csv()).map_err(|e| io(p.display(), e))?;
    }
    let text = match output {
        OutputKind::Table => rep.to_table(),
        OutputKind::Csv => rep.to_csv(),
        OutputKind::Json => {
            let summary = json!({
                "format": rep.format,
                "total": rep.total,
                "correct": rep.correct,
                "accuracy": rep.accuracy,
                "by_ap_count": rep.by_ap_count,
            });
            summary.to_string() + "\n"
        }
    };
    write_text(None, &text)
}

fn stats(dataset: &Path, output: OutputKind) -> Result<(), CliError> {
    let items = load_corpus(dataset).map_err(|e| match e {
        nl2stl_core::eval::CorpusError::Unreadable { .. } => CliError::Io(e.to_string()),
        other => CliError::Parse(other.to_string()),
    })?;
    let s = corpus_stats(items.iter().map(|(nl, f)| (nl.as_str(), f)));
    let text = match output {
        OutputKind::Json => serde_json::to_string(&s).expect("serializable") + "\n",
        OutputKind::Table | OutputKind::Csv => s.to_table(),
    };
    write_text(None, &text)
}
