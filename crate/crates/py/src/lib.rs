//! Python bindings. Structured values cross the boundary as plain dicts and
//! lists in the same shape as the line-delimited file formats.

use std::sync::Arc;

use capforge_core::annotation::{self, AnnotationStore, SystemClock, TaskInstance, TaskStatus, Verdict};
use capforge_core::corpus::{self, SplitFractions};
use capforge_core::instruct::WhitespaceTokenizer;
use capforge_core::metrics::{self, keywords, ne, EvalPair};
use capforge_core::negative::{self, MixConfig};
use capforge_core::{Corpus, EntailmentInstance, EntityTagger, Split, TaggedCaption, TemplateMode, TokenBudget};
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyIOError, PyValueError};
use pyo3::prelude::*;
use serde::de::DeserializeOwned;
use serde::Serialize;

create_exception!(capforge, AnnotationError, PyException);

fn core_err(e: capforge_core::Error) -> PyErr {
    match e {
        capforge_core::Error::Io { .. } => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn ann_err(e: annotation::AnnotationError) -> PyErr {
    AnnotationError::new_err((e.kind(), e.to_string()))
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn from_py<T: DeserializeOwned>(obj: &Bound<'_, PyAny>) -> PyResult<T> {
    let text: String = obj.py().import("json")?.call_method1("dumps", (obj,))?.extract()?;
    serde_json::from_str(&text).map_err(|e| PyValueError::new_err(e.to_string()))
}

#[pyfunction]
fn normalize_caption(text: &str) -> String {
    capforge_core::text::normalize_caption(text)
}

/// Articles plus caption records.
#[pyclass(name = "Corpus", module = "capforge", frozen)]
struct PyCorpus {
    inner: Corpus,
}

#[pymethods]
impl PyCorpus {
    #[staticmethod]
    fn load(articles: &str, captions: &str) -> PyResult<Self> {
        let inner = Corpus::load(articles.as_ref(), captions.as_ref()).map_err(core_err)?;
        Ok(PyCorpus { inner })
    }

    /// Build from the text of an articles file and a captions file.
    #[staticmethod]
    fn from_jsonl(articles: &str, captions: &str) -> PyResult<Self> {
        let inner = corpus::ingest(articles.as_bytes(), captions.as_bytes()).map_err(core_err)?;
        Ok(PyCorpus { inner })
    }

    fn __len__(&self) -> usize {
        self.inner.records.len()
    }

    fn records<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.records)
    }

    fn articles<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.articles.values().collect::<Vec<_>>())
    }

    fn provenance<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.provenance.to_counts())
    }

    fn split_counts<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.split_counts())
    }

    fn clean(&self) -> Self {
        PyCorpus {
            inner: corpus::clean(&self.inner),
        }
    }

    #[pyo3(signature = (seed, fractions = (0.8, 0.1, 0.1)))]
    fn split(&self, seed: u64, fractions: (f64, f64, f64)) -> PyResult<Self> {
        let f = SplitFractions::new(fractions.0, fractions.1, fractions.2).map_err(core_err)?;
        Ok(PyCorpus {
            inner: corpus::split(&self.inner, f, seed),
        })
    }

    fn keyword_dataset<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &corpus::build_keyword_dataset(&self.inner).instances)
    }

    fn write(&self, articles: &str, captions: &str) -> PyResult<()> {
        self.inner.write(articles.as_ref(), captions.as_ref()).map_err(core_err)
    }
}

/// Dictionary tagger over `surface<TAB>TYPE` lines.
#[pyclass(name = "Gazetteer", module = "capforge", frozen)]
struct PyGazetteer {
    inner: capforge_core::Gazetteer,
}

#[pymethods]
impl PyGazetteer {
    #[new]
    fn new(tsv: &str) -> PyResult<Self> {
        let inner = capforge_core::Gazetteer::from_reader(tsv.as_bytes(), "gazetteer").map_err(core_err)?;
        Ok(PyGazetteer { inner })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let inner = capforge_core::Gazetteer::load(path.as_ref()).map_err(core_err)?;
        Ok(PyGazetteer { inner })
    }

    #[getter]
    fn discarded(&self) -> usize {
        self.inner.discarded
    }

    fn tag<'py>(&self, py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.tag_text(text))
    }

    /// Tagged captions for every record, in record order.
    fn tag_corpus<'py>(&self, py: Python<'py>, corpus: &PyCorpus) -> PyResult<Bound<'py, PyAny>> {
        let tagged: Vec<TaggedCaption> = corpus
            .inner
            .records
            .iter()
            .map(|r| TaggedCaption::new(r.record_id.clone(), self.inner.tag(&r.record_id, &r.caption)))
            .collect();
        to_py(py, &tagged)
    }
}

/// Positive and synthetic negative entailment instances plus the skip report.
#[pyfunction]
#[pyo3(signature = (corpus, tags, seed, ratio = (1, 1), weights = (1.0, 1.0, 1.0), max_retries = 20, splits = None))]
fn gen_entailment<'py>(
    py: Python<'py>,
    corpus: &PyCorpus,
    tags: &Bound<'py, PyAny>,
    seed: u64,
    ratio: (u32, u32),
    weights: (f64, f64, f64),
    max_retries: usize,
    splits: Option<Vec<String>>,
) -> PyResult<(Bound<'py, PyAny>, Bound<'py, PyAny>)> {
    let tags: Vec<TaggedCaption> = from_py(tags)?;
    let splits: Vec<Split> = match splits {
        Some(names) => names
            .iter()
            .map(|s| s.parse().map_err(core_err))
            .collect::<PyResult<_>>()?,
        None => vec![Split::Train, Split::Unassigned],
    };
    let config = MixConfig {
        seed,
        ratio_pos_to_neg: ratio,
        class_weights: [weights.0, weights.1, weights.2],
        max_retries,
    };
    let out = py
        .detach(|| negative::assemble(&corpus.inner, &tags, &config, &splits))
        .map_err(core_err)?;
    Ok((to_py(py, &out.instances)?, to_py(py, &out.skips)?))
}

/// Instruction prompt renderer with whitespace token budgets.
#[pyclass(name = "Renderer", module = "capforge", frozen)]
struct PyRenderer {
    inner: capforge_core::Renderer,
}

#[pymethods]
impl PyRenderer {
    #[new]
    #[pyo3(signature = (mode = "fidelity", context_max = 512, caption_max = 30, entity_max = 64))]
    fn new(mode: &str, context_max: usize, caption_max: usize, entity_max: usize) -> PyResult<Self> {
        let mode = match mode {
            "fidelity" => TemplateMode::Fidelity,
            "normalized" => TemplateMode::Normalized,
            other => return Err(PyValueError::new_err(format!("unknown mode {other:?}"))),
        };
        let budget = TokenBudget {
            context_max,
            caption_max,
            entity_max,
        };
        budget.validate().map_err(core_err)?;
        Ok(PyRenderer {
            inner: capforge_core::Renderer::new(budget, mode, Arc::new(WhitespaceTokenizer)),
        })
    }

    #[pyo3(signature = (context, entities = None))]
    fn caption_prompt(&self, context: &str, entities: Option<Vec<String>>) -> String {
        self.inner.caption_prompt(context, entities.as_deref())
    }

    fn entailment_prompt(&self, caption: &str, context: &str) -> String {
        self.inner.entailment_prompt(caption, context)
    }

    fn keywords_prompt(&self, article: &str) -> String {
        self.inner.keywords_prompt(article)
    }

    /// Instruction record for one entailment instance dict.
    fn render_entailment<'py>(&self, py: Python<'py>, instance: &Bound<'py, PyAny>) -> PyResult<Bound<'py, PyAny>> {
        let instance: EntailmentInstance = from_py(instance)?;
        to_py(py, &self.inner.entailment_record(&instance))
    }
}

fn pairs(candidates: Vec<String>, references: Vec<Vec<String>>) -> PyResult<Vec<EvalPair>> {
    if candidates.len() != references.len() {
        return Err(PyValueError::new_err("candidates and references differ in length"));
    }
    if candidates.is_empty() {
        return Err(PyValueError::new_err("no evaluation pairs"));
    }
    if references.iter().any(Vec::is_empty) {
        return Err(PyValueError::new_err("every candidate needs at least one reference"));
    }
    Ok(candidates
        .into_iter()
        .zip(references)
        .enumerate()
        .map(|(i, (c, r))| EvalPair::new(i.to_string(), c, r))
        .collect())
}

#[pyfunction]
fn bleu4(candidates: Vec<String>, references: Vec<Vec<String>>) -> PyResult<f64> {
    Ok(metrics::bleu4(&pairs(candidates, references)?))
}

#[pyfunction]
fn rouge_l(candidates: Vec<String>, references: Vec<Vec<String>>) -> PyResult<f64> {
    Ok(metrics::rouge_l(&pairs(candidates, references)?))
}

#[pyfunction]
fn meteor_lite(candidates: Vec<String>, references: Vec<Vec<String>>) -> PyResult<f64> {
    Ok(metrics::meteor_lite(&pairs(candidates, references)?))
}

/// CIDEr-D with idf taken from the given references.
#[pyfunction]
fn cider_d(candidates: Vec<String>, references: Vec<Vec<String>>) -> PyResult<f64> {
    let pairs = pairs(candidates, references)?;
    let idf = metrics::idf_from_pairs(&pairs);
    metrics::cider_d(&pairs, &idf).map_err(core_err)
}

/// Corpus precision and recall of entity surfaces, one list pair per instance.
#[pyfunction]
fn ne_pr(candidate_entities: Vec<Vec<String>>, reference_entities: Vec<Vec<String>>) -> PyResult<(f64, f64)> {
    if candidate_entities.len() != reference_entities.len() {
        return Err(PyValueError::new_err("entity lists differ in length"));
    }
    let s = ne::ne_pr_surfaces(
        candidate_entities
            .iter()
            .zip(&reference_entities)
            .map(|(c, r)| (c.as_slice(), r.as_slice())),
    );
    Ok((s.precision, s.recall))
}

#[pyfunction]
fn keyword_f_at_10(predicted: Vec<String>, gold: Vec<String>) -> Option<f64> {
    keywords::keyword_f_at_10(&predicted, &gold)
}

/// Full metric report as a dict.
#[pyfunction]
#[pyo3(signature = (candidates, references, candidate_entities = None, reference_entities = None))]
fn evaluate<'py>(
    py: Python<'py>,
    candidates: Vec<String>,
    references: Vec<Vec<String>>,
    candidate_entities: Option<Vec<Vec<String>>>,
    reference_entities: Option<Vec<Vec<String>>>,
) -> PyResult<Bound<'py, PyAny>> {
    let mut pairs = pairs(candidates, references)?;
    if let (Some(c), Some(r)) = (candidate_entities, reference_entities) {
        if c.len() != pairs.len() || r.len() != pairs.len() {
            return Err(PyValueError::new_err("entity lists differ in length from candidates"));
        }
        pairs = pairs
            .into_iter()
            .zip(c.into_iter().zip(r))
            .map(|(p, (c, r))| p.with_entities(c, r))
            .collect();
    }
    let report = py.detach(|| metrics::evaluate(&pairs)).map_err(core_err)?;
    to_py(py, &report)
}

/// Event-sourced annotation task store; in memory unless `path` is given.
#[pyclass(name = "AnnotationStore", module = "capforge")]
struct PyAnnotationStore {
    inner: AnnotationStore,
}

#[pymethods]
impl PyAnnotationStore {
    #[new]
    #[pyo3(signature = (path = None, claim_timeout_secs = 1800))]
    fn new(path: Option<&str>, claim_timeout_secs: i64) -> PyResult<Self> {
        let timeout = claim_timeout_secs.saturating_mul(1000);
        let inner = match path {
            Some(p) => AnnotationStore::open(p.as_ref(), timeout, SystemClock).map_err(ann_err)?,
            None => AnnotationStore::in_memory(timeout, SystemClock),
        };
        Ok(PyAnnotationStore { inner })
    }

    /// Create one task per instance dict; returns how many were new.
    #[pyo3(signature = (instances, actor = "system"))]
    fn create_tasks(&mut self, instances: &Bound<'_, PyAny>, actor: &str) -> PyResult<usize> {
        let instances: Vec<TaskInstance> = from_py(instances)?;
        Ok(self.inner.create_tasks(instances, actor).map_err(ann_err)?.created.len())
    }

    fn claim<'py>(&mut self, py: Python<'py>, task_id: &str, annotator_id: &str) -> PyResult<Bound<'py, PyAny>> {
        let t = self.inner.claim(task_id, annotator_id).map_err(ann_err)?;
        to_py(py, &t)
    }

    fn submit_edit<'py>(
        &mut self,
        py: Python<'py>,
        task_id: &str,
        annotator_id: &str,
        start: usize,
        end: usize,
        replacement: &str,
    ) -> PyResult<Bound<'py, PyAny>> {
        let t = self
            .inner
            .submit_edit(task_id, annotator_id, start, end, replacement)
            .map_err(ann_err)?;
        to_py(py, &t)
    }

    #[pyo3(signature = (task_id, verifier_id, accept = true))]
    fn verify<'py>(&mut self, py: Python<'py>, task_id: &str, verifier_id: &str, accept: bool) -> PyResult<Bound<'py, PyAny>> {
        let verdict = if accept { Verdict::Accept } else { Verdict::Reject };
        let t = self.inner.verify(task_id, verifier_id, verdict).map_err(ann_err)?;
        to_py(py, &t)
    }

    fn get<'py>(&self, py: Python<'py>, task_id: &str) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.get(task_id).map_err(ann_err)?)
    }

    #[pyo3(signature = (status = None))]
    fn list<'py>(&self, py: Python<'py>, status: Option<&str>) -> PyResult<Bound<'py, PyAny>> {
        let status: Option<TaskStatus> = status.map(str::parse).transpose().map_err(ann_err)?;
        to_py(py, &self.inner.list(status))
    }

    #[pyo3(signature = (pair_positives = false))]
    fn export<'py>(&self, py: Python<'py>, pair_positives: bool) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.export(pair_positives))
    }

    fn events<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.events())
    }
}

#[pymodule]
fn capforge(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add("FORMAT_VERSION", capforge_core::FORMAT_VERSION)?;
    m.add("AnnotationError", m.py().get_type::<AnnotationError>())?;
    m.add_class::<PyCorpus>()?;
    m.add_class::<PyGazetteer>()?;
    m.add_class::<PyRenderer>()?;
    m.add_class::<PyAnnotationStore>()?;
    m.add_function(wrap_pyfunction!(normalize_caption, m)?)?;
    m.add_function(wrap_pyfunction!(gen_entailment, m)?)?;
    m.add_function(wrap_pyfunction!(bleu4, m)?)?;
    m.add_function(wrap_pyfunction!(rouge_l, m)?)?;
    m.add_function(wrap_pyfunction!(meteor_lite, m)?)?;
    m.add_function(wrap_pyfunction!(cider_d, m)?)?;
    m.add_function(wrap_pyfunction!(ne_pr, m)?)?;
    m.add_function(wrap_pyfunction!(keyword_f_at_10, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    Ok(())
}
