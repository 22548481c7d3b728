//! Python module `nl2stl`: formulas, format conversion, synthesis, lifting,
//! scoring, statistics, prompts and offline generation.

use std::sync::Arc;

use nl2stl_core::eval::{self, EvalPair};
use nl2stl_core::lifting::{self, ApMap, DomainProfile, FullPair, LiftedPair};
use nl2stl_core::llm::{self, BackendConfig, ExamplePool, Gateway, MockBackend, PromptSpec, Task};
use nl2stl_core::pipeline::{Framework, Generator};
use nl2stl_core::stl::{self, Formula};
use nl2stl_core::syntax::{self, FormatSpec, OpStyle};
use nl2stl_core::synthesis::{self, SynthConfig};
use pyo3::create_exception;
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

create_exception!(nl2stl, ParseError, PyValueError);
create_exception!(nl2stl, LiftError, PyValueError);

fn fmt_arg(name: &str) -> PyResult<FormatSpec> {
    name.parse().map_err(|e: syntax::UnknownFormat| PyValueError::new_err(e.to_string()))
}

fn to_py<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn from_py<T: serde::de::DeserializeOwned>(obj: &Bound<'_, PyAny>) -> PyResult<T> {
    let text: String = match obj.extract::<String>() {
        Ok(s) => s,
        Err(_) => obj.py().import("json")?.call_method1("dumps", (obj,))?.extract()?,
    };
    serde_json::from_str(&text).map_err(|e| PyValueError::new_err(e.to_string()))
}

#[pyclass(name = "Formula", module = "nl2stl", frozen, eq, skip_from_py_object)]
#[derive(Clone)]
struct PyFormula {
    inner: Formula,
}

impl PartialEq for PyFormula {
    fn eq(&self, other: &Self) -> bool {
        stl::tree_equal(&self.inner, &other.inner)
    }
}

#[pymethods]
impl PyFormula {
    #[staticmethod]
    #[pyo3(signature = (text, format = "preorder-symbol"))]
    fn parse(text: &str, format: &str) -> PyResult<Self> {
        syntax::parse(text, fmt_arg(format)?)
            .map(|inner| PyFormula { inner })
            .map_err(|e| ParseError::new_err(e.to_string()))
    }

    #[pyo3(signature = (format = "preorder-symbol"))]
    fn linearize(&self, format: &str) -> PyResult<String> {
        Ok(syntax::linearize(&self.inner, fmt_arg(format)?))
    }

    /// Pre-order tokens as a Python-style list literal.
    #[pyo3(signature = (word = false))]
    fn list_literal(&self, word: bool) -> String {
        let style = if word { OpStyle::Word } else { OpStyle::Symbol };
        syntax::pre_order_list_literal(&self.inner, style)
    }

    #[getter]
    fn ap_count(&self) -> usize {
        self.inner.ap_count()
    }

    #[getter]
    fn op_count(&self) -> usize {
        self.inner.op_count()
    }

    #[getter]
    fn is_lifted(&self) -> bool {
        self.inner.is_lifted()
    }

    #[getter]
    fn placeholders(&self) -> Vec<u32> {
        self.inner.placeholders().into_iter().collect()
    }

    fn validate(&self) -> Vec<String> {
        stl::validate(&self.inner).iter().map(ToString::to_string).collect()
    }

    fn sanity_check(&self) -> Vec<String> {
        synthesis::sanity_check(&self.inner).iter().map(ToString::to_string).collect()
    }

    fn desugar(&self) -> PyResult<Self> {
        stl::desugar(&self.inner)
            .map(|inner| PyFormula { inner })
            .map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn verbalize(&self) -> String {
        llm::verbalize(&self.inner)
    }

    fn __str__(&self) -> String {
        syntax::linearize(&self.inner, FormatSpec::IN_WORD)
    }

    fn __repr__(&self) -> String {
        format!("Formula({:?})", syntax::linearize(&self.inner, FormatSpec::PRE_SYMBOL))
    }
}

#[pyfunction]
fn convert(text: &str, from_format: &str, to_format: &str) -> PyResult<String> {
    syntax::convert(text, fmt_arg(from_format)?, fmt_arg(to_format)?)
        .map_err(|e| ParseError::new_err(e.to_string()))
}

/// Returns `(fixed_text, repaired)`; raises ParseError when unrepairable.
#[pyfunction]
#[pyo3(signature = (text, format = "preorder-symbol"))]
fn repair(text: &str, format: &str) -> PyResult<(String, bool)> {
    syntax::repair(text, fmt_arg(format)?)
        .map(|r| (r.text, r.repaired))
        .map_err(|e| ParseError::new_err(e.error.to_string()))
}

#[pyfunction]
#[pyo3(signature = (n, max_aps = 5, seed = 0))]
fn synthesize(n: usize, max_aps: usize, seed: u64) -> PyResult<Vec<PyFormula>> {
    let cfg = SynthConfig {
        max_aps,
        seed,
        ..SynthConfig::default()
    };
    synthesis::synthesize_batch(&cfg, n)
        .map(|b| b.formulas.into_iter().map(|inner| PyFormula { inner }).collect())
        .map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Lifts a full pair with a builtin domain or a profile path. Returns a dict
/// with `nl`, `stl` (in `format`) and `ap_map`.
#[pyfunction]
#[pyo3(signature = (nl, stl, domain, format = "inorder-word"))]
fn lift<'py>(py: Python<'py>, nl: &str, stl: &str, domain: &str, format: &str) -> PyResult<Bound<'py, PyAny>> {
    let fmt = fmt_arg(format)?;
    let profile = DomainProfile::resolve(domain).map_err(|e| LiftError::new_err(e.to_string()))?;
    let formula = syntax::parse_full(stl, fmt, &profile.lexicon())
        .map_err(|e| ParseError::new_err(e.to_string()))?;
    let ap_map = lifting::recognize_aps(nl, &profile.recognizer())
        .map_err(|e| LiftError::new_err(e.to_string()))?;
    let full = FullPair {
        nl: nl.to_string(),
        stl: formula,
        ap_map,
    };
    let lifted = lifting::lift(&full).map_err(|e| LiftError::new_err(e.to_string()))?;
    to_py(
        py,
        &serde_json::json!({
            "nl": lifted.nl,
            "stl": syntax::linearize(&lifted.stl, fmt),
            "ap_map": full.ap_map,
        }),
    )
}

/// Inverse of `lift`; `ap_map` is the list returned by it (or its JSON).
#[pyfunction]
#[pyo3(signature = (nl, stl, ap_map, format = "inorder-word"))]
fn ground<'py>(
    py: Python<'py>,
    nl: &str,
    stl: &str,
    ap_map: &Bound<'py, PyAny>,
    format: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let fmt = fmt_arg(format)?;
    let map: ApMap = from_py(ap_map)?;
    let formula = syntax::parse(stl, fmt).map_err(|e| ParseError::new_err(e.to_string()))?;
    let full = lifting::ground(
        &LiftedPair {
            nl: nl.to_string(),
            stl: formula,
        },
        &map,
    )
    .map_err(|e| LiftError::new_err(e.to_string()))?;
    to_py(
        py,
        &serde_json::json!({
            "nl": full.nl,
            "stl": syntax::linearize(&full.stl, fmt),
            "ap_map": full.ap_map,
        }),
    )
}

#[pyfunction]
#[pyo3(signature = (pred, gold, format = "preorder-symbol"))]
fn score<'py>(py: Python<'py>, pred: &str, gold: &str, format: &str) -> PyResult<Bound<'py, PyAny>> {
    let v = eval::score(pred, gold, fmt_arg(format)?).map_err(|e| ParseError::new_err(e.to_string()))?;
    to_py(py, &v)
}

/// `pairs` is a list of `(pred, gold)` strings.
#[pyfunction]
#[pyo3(signature = (pairs, format = "preorder-symbol"))]
fn evaluate<'py>(py: Python<'py>, pairs: Vec<(String, String)>, format: &str) -> PyResult<Bound<'py, PyAny>> {
    let pairs: Vec<EvalPair> = pairs.into_iter().map(|(pred, gold)| EvalPair { pred, gold }).collect();
    let rep = eval::evaluate(&pairs, fmt_arg(format)?).map_err(|e| PyValueError::new_err(e.to_string()))?;
    to_py(py, &rep)
}

#[pyfunction]
fn corpus_stats<'py>(py: Python<'py>, path: &str) -> PyResult<Bound<'py, PyAny>> {
    let items = eval::load_corpus(std::path::Path::new(path)).map_err(|e| match e {
        eval::CorpusError::Unreadable { .. } => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    })?;
    to_py(py, &eval::corpus_stats(items.iter().map(|(nl, f)| (nl.as_str(), f))))
}

fn task_arg(name: &str) -> PyResult<Task> {
    match name {
        "stl_to_nl" => Ok(Task::StlToNl),
        "nl_to_stl" => Ok(Task::NlToStl),
        "ap_detect" => Ok(Task::ApDetect),
        _ => Err(PyValueError::new_err(format!("unknown task `{name}`"))),
    }
}

/// Few-shot prompt over the bundled example pool.
#[pyfunction]
#[pyo3(signature = (task, query, k = 20, seed = 0))]
fn build_prompt(task: &str, query: &str, k: usize, seed: u64) -> PyResult<String> {
    let spec = PromptSpec {
        k,
        ..PromptSpec::new(task_arg(task)?).with_seed(seed)
    };
    llm::build_prompt(&ExamplePool::bundled(), &spec, query).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Offline generation run with the mock backend. Returns `(records, manifest)`.
#[pyfunction]
#[pyo3(signature = (framework, n, seed = 0, max_aps = 5))]
fn generate<'py>(
    py: Python<'py>,
    framework: u8,
    n: usize,
    seed: u64,
    max_aps: usize,
) -> PyResult<(Bound<'py, PyAny>, Bound<'py, PyAny>)> {
    let framework = match framework {
        1 => Framework::One,
        2 => Framework::Two,
        _ => return Err(PyValueError::new_err("framework must be 1 or 2")),
    };
    let gateway = Gateway::new(Arc::new(MockBackend::bundled()), BackendConfig::default());
    let pool = ExamplePool::bundled();
    let synth = SynthConfig {
        max_aps,
        seed,
        ..SynthConfig::default()
    };
    let (records, manifest) = py
        .detach(|| Generator::new(&gateway, &pool, synth).run(framework, n))
        .map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok((to_py(py, &records)?, to_py(py, &manifest)?))
}

#[pymodule]
fn nl2stl(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyFormula>()?;
    m.add("ParseError", m.py().get_type::<ParseError>())?;
    m.add("LiftError", m.py().get_type::<LiftError>())?;
    m.add_function(wrap_pyfunction!(convert, m)?)?;
    m.add_function(wrap_pyfunction!(repair, m)?)?;
    m.add_function(wrap_pyfunction!(synthesize, m)?)?;
    m.add_function(wrap_pyfunction!(lift, m)?)?;
    m.add_function(wrap_pyfunction!(ground, m)?)?;
    m.add_function(wrap_pyfunction!(score, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(corpus_stats, m)?)?;
    m.add_function(wrap_pyfunction!(build_prompt, m)?)?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    Ok(())
}
