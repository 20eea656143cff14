//! Python module `voronoi_complex`.

use std::path::PathBuf;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use voronoi_core::complex::{build_complex, ChainComplexData, VectorOrder};
use voronoi_core::forms::{self, QuadraticForm};
use voronoi_core::homology::{self, SerreClassFilter};
use voronoi_core::isometry::Group;
use voronoi_core::pipeline::{self, EmitFormat, PipelineConfig, Stage};
use voronoi_core::report;
use voronoi_core::voronoi::{self, PerfectFormRecord};

fn err(e: voronoi_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn form(matrix: Vec<Vec<i64>>) -> PyResult<QuadraticForm> {
    QuadraticForm::from_integers(&matrix).map_err(err)
}

fn group(name: &str) -> PyResult<Group> {
    name.parse().map_err(err)
}

/// `(minimum, vectors)` of an integral positive-definite form; the minimum
/// is returned as a string such as `"2"`.
#[pyfunction]
fn minimal_vectors(matrix: Vec<Vec<i64>>) -> PyResult<(String, Vec<Vec<i64>>)> {
    let (min, cell) = forms::minimal_vectors(&form(matrix)?).map_err(err)?;
    Ok((min.to_string(), cell.vectors().iter().map(|v| v.coords().to_vec()).collect()))
}

#[pyfunction]
fn is_perfect(matrix: Vec<Vec<i64>>) -> PyResult<bool> {
    forms::is_perfect(&form(matrix)?).map_err(err)
}

/// Nonzero elementary divisors of an integer matrix.
#[pyfunction]
fn smith_normal_form(matrix: Vec<Vec<i64>>) -> Vec<String> {
    let m: Vec<Vec<_>> = matrix.into_iter().map(|r| r.into_iter().map(Into::into).collect()).collect();
    homology::smith_normal_form(&m).divisors.iter().map(ToString::to_string).collect()
}

#[pyclass(frozen, get_all)]
struct PerfectForm {
    index: usize,
    matrix: Vec<Vec<i64>>,
    /// The form is `scale * matrix`.
    scale: String,
    min_vectors: Vec<Vec<i64>>,
    facets: usize,
}

impl PerfectForm {
    fn new(r: &PerfectFormRecord) -> PyResult<Self> {
        let rec = r.form.to_record().map_err(err)?;
        Ok(PerfectForm {
            index: r.index,
            matrix: rec.matrix,
            scale: rec.scale,
            min_vectors: r.min_vectors.vectors().iter().map(|v| v.coords().to_vec()).collect(),
            facets: r.facets.len(),
        })
    }
}

#[pyfunction]
fn perfect_forms(py: Python<'_>, rank: usize) -> PyResult<Vec<PerfectForm>> {
    let recs = py.detach(|| voronoi::enumerate_perfect_forms(rank, Group::GL)).map_err(err)?;
    recs.iter().map(PerfectForm::new).collect()
}

#[pyclass(frozen, get_all)]
struct HomologyGroup {
    degree: usize,
    free_rank: usize,
    torsion: Vec<u64>,
    filtered_torsion: Vec<u64>,
}

/// The Voronoi complex of rank `N` modulo `GL_N(Z)` (`"gl"`) or `SL_N(Z)`
/// (`"sl"`).
#[pyclass(frozen)]
struct Complex {
    rank: usize,
    class_counts: Vec<usize>,
    chain: ChainComplexData,
}

#[pymethods]
impl Complex {
    #[new]
    fn py_new(py: Python<'_>, rank: usize, group: &str) -> PyResult<Self> {
        let g = self::group(group)?;
        py.detach(|| {
            let recs = voronoi::enumerate_perfect_forms(rank, Group::GL)?;
            let cx = build_complex(&recs, g)?;
            Ok(Complex { rank, class_counts: cx.class_counts(), chain: cx.chain_complex(VectorOrder::Lex)? })
        })
        .map_err(err)
    }

    /// Orbits of interior cells per dimension, orientable or not.
    fn class_counts(&self) -> Vec<usize> {
        self.class_counts.clone()
    }

    /// `|Sigma_n|` for `n = 0..`.
    fn sigma_counts(&self) -> Vec<usize> {
        self.chain.sigma_counts()
    }

    /// Dense `d_n` with rows indexed by `Sigma_{n-1}`.
    fn differential(&self, n: usize) -> PyResult<Vec<Vec<i64>>> {
        self.chain
            .differentials
            .get(n)
            .map(|d| d.to_dense())
            .ok_or_else(|| PyValueError::new_err(format!("no differential in degree {n}")))
    }

    fn verify_d_squared(&self) -> bool {
        self.chain.verify_d_squared().is_ok()
    }

    #[pyo3(signature = (serre_bound=None))]
    fn homology(&self, serre_bound: Option<u64>) -> PyResult<Vec<HomologyGroup>> {
        let filter = SerreClassFilter::new(serre_bound.unwrap_or(self.rank as u64 + 1)).map_err(err)?;
        let h = homology::homology_of(&self.chain, filter).map_err(err)?;
        Ok(h.into_iter()
            .map(|h| HomologyGroup {
                degree: h.degree,
                free_rank: h.free_rank,
                torsion: h.torsion,
                filtered_torsion: h.filtered_torsion,
            })
            .collect())
    }

    /// Text rendering of `H^m(Gamma, Z~)`.
    #[pyo3(signature = (serre_bound=None))]
    fn cohomology_table(&self, serre_bound: Option<u64>) -> PyResult<String> {
        let bound = serre_bound.unwrap_or(self.rank as u64 + 1);
        let h = homology::homology_of(&self.chain, SerreClassFilter::new(bound).map_err(err)?).map_err(err)?;
        let st = report::steinberg_table(&h, self.rank, self.chain.group, bound);
        Ok(report::render_text(&report::cohomology_table(&st), &[]))
    }
}

/// Runs the staged pipeline and returns the emitted report, if any.
#[pyfunction]
#[pyo3(signature = (rank, group, checkpoint_dir, stages=None, workers=0, resume=false, serre_bound=None, emit="text"))]
#[allow(clippy::too_many_arguments)]
fn run_pipeline(
    py: Python<'_>,
    rank: usize,
    group: &str,
    checkpoint_dir: PathBuf,
    stages: Option<Vec<String>>,
    workers: usize,
    resume: bool,
    serre_bound: Option<u64>,
    emit: &str,
) -> PyResult<Option<String>> {
    let mut cfg = PipelineConfig::new(rank, self::group(group)?, checkpoint_dir);
    if let Some(s) = stages {
        cfg.stages = s.iter().map(|s| s.parse::<Stage>()).collect::<Result<_, _>>().map_err(err)?;
    }
    cfg.workers = workers;
    cfg.resume = resume;
    cfg.serre_bound = serre_bound;
    cfg.emit = emit.parse::<EmitFormat>().map_err(err)?;
    let summary = py.detach(|| pipeline::run(&cfg)).map_err(err)?;
    Ok(summary.emitted)
}

#[pymodule]
fn voronoi_complex(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(minimal_vectors, m)?)?;
    m.add_function(wrap_pyfunction!(is_perfect, m)?)?;
    m.add_function(wrap_pyfunction!(smith_normal_form, m)?)?;
    m.add_function(wrap_pyfunction!(perfect_forms, m)?)?;
    m.add_function(wrap_pyfunction!(run_pipeline, m)?)?;
    m.add_class::<PerfectForm>()?;
    m.add_class::<HomologyGroup>()?;
    m.add_class::<Complex>()?;
    Ok(())
}
