//! Staged runs with on-disk artifacts, checkpoints and a content manifest.
//!
//! Layout of the checkpoint directory for rank `N` and group `g`:
//!
//! ```text
//! perfect_forms_N.jsonl
//! complex_N_g.jsonl
//! homology_N_g.json
//! report_N_g.txt, report_N_g.json
//! checkpoints/complex_N_g/{meta.json, dim_K.json}
//! manifest.json      (hashes only, identical across reruns)
//! timings.json       (wall-clock milliseconds per stage)
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::complex::{CellRepresentative, ChainComplexData, ComplexBuilder, Level, SparseMatrix, VectorOrder};
use crate::error::{Error, Result};
use crate::homology::{euler_check, homology_of, HomologyGroup, SerreClassFilter};
use crate::isometry::Group;
use crate::report::{cohomology_table, render_text, shapiro_footnote, steinberg_table, CohomologyTable, SteinbergTable};
use crate::voronoi::{enumerate_perfect_forms, PerfectFormLine, PerfectFormRecord};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    PerfectForms,
    Complex,
    Homology,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 4] = [Stage::PerfectForms, Stage::Complex, Stage::Homology, Stage::Report];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::PerfectForms => "perfect-forms",
            Stage::Complex => "complex",
            Stage::Homology => "homology",
            Stage::Report => "report",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stage {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| Error::Parse(format!("unknown stage {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmitFormat {
    Json,
    #[default]
    Text,
}

impl FromStr for EmitFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(EmitFormat::Json),
            "text" => Ok(EmitFormat::Text),
            other => Err(Error::Parse(format!("unknown emit format {other:?}"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct PipelineConfig {
    pub rank: usize,
    pub group: Group,
    pub stages: Vec<Stage>,
    pub checkpoint_dir: PathBuf,
    /// Worker threads; `0` lets the pool decide.
    pub workers: usize,
    pub resume: bool,
    /// Defaults to `rank + 1`.
    pub serre_bound: Option<u64>,
    pub emit: EmitFormat,
}

impl PipelineConfig {
    pub fn new(rank: usize, group: Group, checkpoint_dir: impl Into<PathBuf>) -> Self {
        PipelineConfig {
            rank,
            group,
            stages: Stage::ALL.to_vec(),
            checkpoint_dir: checkpoint_dir.into(),
            workers: 0,
            resume: false,
            serre_bound: None,
            emit: EmitFormat::Text,
        }
    }

    pub fn serre_bound(&self) -> u64 {
        self.serre_bound.unwrap_or(self.rank as u64 + 1)
    }

    fn validate(&self) -> Result<()> {
        if !(2..=6).contains(&self.rank) {
            return Err(Error::UnsupportedRank(self.rank));
        }
        SerreClassFilter::new(self.serre_bound())?;
        Ok(())
    }

    pub fn perfect_forms_path(&self) -> PathBuf {
        self.checkpoint_dir.join(format!("perfect_forms_{}.jsonl", self.rank))
    }

    pub fn complex_path(&self) -> PathBuf {
        self.checkpoint_dir.join(format!("complex_{}_{}.jsonl", self.rank, self.group))
    }

    pub fn homology_path(&self) -> PathBuf {
        self.checkpoint_dir.join(format!("homology_{}_{}.json", self.rank, self.group))
    }

    pub fn report_paths(&self) -> (PathBuf, PathBuf) {
        let stem = format!("report_{}_{}", self.rank, self.group);
        (self.checkpoint_dir.join(format!("{stem}.txt")), self.checkpoint_dir.join(format!("{stem}.json")))
    }

    pub fn builder_dir(&self) -> PathBuf {
        self.checkpoint_dir.join("checkpoints").join(format!("complex_{}_{}", self.rank, self.group))
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.checkpoint_dir.join("manifest.json")
    }

    pub fn timings_path(&self) -> PathBuf {
        self.checkpoint_dir.join("timings.json")
    }

    fn stage_key(&self, stage: Stage) -> String {
        match stage {
            Stage::PerfectForms => format!("{}/{}", stage, self.rank),
            _ => format!("{}/{}/{}", stage, self.rank, self.group),
        }
    }

    fn stage_params(&self, stage: Stage) -> BTreeMap<String, String> {
        let mut p = BTreeMap::from([("rank".to_string(), self.rank.to_string())]);
        if stage != Stage::PerfectForms {
            p.insert("group".into(), self.group.to_string());
        }
        if matches!(stage, Stage::Homology | Stage::Report) {
            p.insert("serreBound".into(), self.serre_bound().to_string());
        }
        p
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FileHash {
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: Stage,
    pub params: BTreeMap<String, String>,
    pub inputs: Vec<FileHash>,
    pub outputs: Vec<FileHash>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub stages: BTreeMap<String, StageRecord>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Ok(Manifest::default());
        }
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RunSummary {
    pub executed: Vec<Stage>,
    pub skipped: Vec<Stage>,
    /// The report in the requested format, when the report stage was requested.
    pub emitted: Option<String>,
}

/// One line of `complex_N_g.jsonl`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ComplexLine {
    #[serde(rename_all = "camelCase")]
    Header { rank: usize, group: Group, order: VectorOrder, sigma_counts: Vec<usize> },
    Cells { degree: usize, cells: Vec<CellRepresentative> },
    Differential { degree: usize, matrix: SparseMatrix },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub steinberg: SteinbergTable,
    pub cohomology: CohomologyTable,
    pub footnotes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
struct BuilderMeta {
    rank: usize,
    group: Group,
    levels: usize,
    finished: bool,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    Ok(hex::encode(Sha256::digest(fs::read(path)?)))
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write_atomic(path, s.as_bytes())
}

fn write_jsonl<T: Serialize>(path: &Path, lines: impl IntoIterator<Item = T>) -> Result<()> {
    let mut s = String::new();
    for l in lines {
        s.push_str(&serde_json::to_string(&l)?);
        s.push('\n');
    }
    write_atomic(path, s.as_bytes())
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let f = fs::File::open(path)?;
    let mut out = Vec::new();
    for line in BufReader::new(f).lines() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}

fn file_hash(dir: &Path, path: &Path) -> Result<FileHash> {
    let rel = path.strip_prefix(dir).unwrap_or(path);
    Ok(FileHash { path: rel.to_string_lossy().into_owned(), sha256: sha256_file(path)? })
}

pub fn write_perfect_forms(path: &Path, records: &[PerfectFormRecord]) -> Result<()> {
    let lines = records.iter().map(PerfectFormRecord::to_line).collect::<Result<Vec<_>>>()?;
    write_jsonl(path, lines)
}

pub fn read_perfect_forms(path: &Path) -> Result<Vec<PerfectFormRecord>> {
    read_jsonl::<PerfectFormLine>(path)?.into_iter().map(PerfectFormRecord::from_line).collect()
}

pub fn write_chain_complex(path: &Path, cc: &ChainComplexData) -> Result<()> {
    let mut lines =
        vec![ComplexLine::Header { rank: cc.rank, group: cc.group, order: cc.order, sigma_counts: cc.sigma_counts() }];
    for (n, cells) in cc.sigma.iter().enumerate() {
        lines.push(ComplexLine::Cells { degree: n, cells: cells.clone() });
    }
    for (n, d) in cc.differentials.iter().enumerate() {
        lines.push(ComplexLine::Differential { degree: n, matrix: d.clone() });
    }
    write_jsonl(path, lines)
}

pub fn read_chain_complex(path: &Path) -> Result<ChainComplexData> {
    let lines: Vec<ComplexLine> = read_jsonl(path)?;
    let mut it = lines.into_iter();
    let Some(ComplexLine::Header { rank, group, order, sigma_counts }) = it.next() else {
        return Err(Error::Parse("complex file lacks a header line".into()));
    };
    let mut sigma = vec![Vec::new(); sigma_counts.len()];
    let mut differentials = vec![None; sigma_counts.len()];
    for line in it {
        match line {
            ComplexLine::Cells { degree, cells } if degree < sigma.len() => sigma[degree] = cells,
            ComplexLine::Differential { degree, matrix } if degree < differentials.len() => {
                differentials[degree] = Some(matrix)
            }
            other => return Err(Error::Parse(format!("unexpected complex line {other:?}"))),
        }
    }
    if sigma.iter().map(Vec::len).ne(sigma_counts.iter().copied()) {
        return Err(Error::Parse("cell counts disagree with the header".into()));
    }
    let differentials = differentials
        .into_iter()
        .enumerate()
        .map(|(n, d)| d.ok_or_else(|| Error::Parse(format!("missing differential d_{n}"))))
        .collect::<Result<_>>()?;
    Ok(ChainComplexData { rank, group, order, sigma, differentials })
}

/// Writes the builder state: one file per dimension plus a small meta file.
pub fn save_checkpoint(dir: &Path, builder: &ComplexBuilder) -> Result<()> {
    save_levels(dir, builder, 0)
}

/// Only levels from `from` on are rewritten; earlier ones are final once the
/// level below them exists.
fn save_levels(dir: &Path, builder: &ComplexBuilder, from: usize) -> Result<()> {
    fs::create_dir_all(dir)?;
    for level in &builder.levels[from.min(builder.levels.len())..] {
        write_json(&dir.join(format!("dim_{}.json", level.dim)), level)?;
    }
    let meta = BuilderMeta {
        rank: builder.rank,
        group: builder.group,
        levels: builder.levels.len(),
        finished: builder.finished,
    };
    write_json(&dir.join("meta.json"), &meta)
}

pub fn load_checkpoint(dir: &Path, rank: usize, group: Group) -> Result<Option<ComplexBuilder>> {
    let meta_path = dir.join("meta.json");
    if !meta_path.exists() {
        return Ok(None);
    }
    let meta: BuilderMeta = serde_json::from_str(&fs::read_to_string(meta_path)?)?;
    if meta.rank != rank || meta.group != group {
        return Ok(None);
    }
    let top = crate::forms::top_dimension(rank);
    let levels = (0..meta.levels)
        .map(|k| -> Result<Level> {
            let path = dir.join(format!("dim_{}.json", top - k));
            Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Some(ComplexBuilder { rank, group, levels, finished: meta.finished }))
}

struct Runner<'a> {
    cfg: &'a PipelineConfig,
    manifest: Manifest,
    timings: BTreeMap<String, u64>,
    summary: RunSummary,
}

impl Runner<'_> {
    fn complete(&self, stage: Stage, inputs: &[PathBuf]) -> Result<bool> {
        let Some(rec) = self.manifest.stages.get(&self.cfg.stage_key(stage)) else {
            return Ok(false);
        };
        if rec.params != self.cfg.stage_params(stage) {
            return Ok(false);
        }
        let dir = &self.cfg.checkpoint_dir;
        for f in rec.outputs.iter().chain(&rec.inputs) {
            let p = dir.join(&f.path);
            if !p.exists() || sha256_file(&p)? != f.sha256 {
                return Ok(false);
            }
        }
        let recorded: Vec<&str> = rec.inputs.iter().map(|f| f.path.as_str()).collect();
        let current: Vec<String> = inputs
            .iter()
            .map(|p| p.strip_prefix(dir).unwrap_or(p).to_string_lossy().into_owned())
            .collect();
        Ok(recorded == current)
    }

    fn record(&mut self, stage: Stage, inputs: &[PathBuf], outputs: &[PathBuf], started: Instant) -> Result<()> {
        let dir = &self.cfg.checkpoint_dir;
        let rec = StageRecord {
            stage,
            params: self.cfg.stage_params(stage),
            inputs: inputs.iter().map(|p| file_hash(dir, p)).collect::<Result<_>>()?,
            outputs: outputs.iter().map(|p| file_hash(dir, p)).collect::<Result<_>>()?,
        };
        let key = self.cfg.stage_key(stage);
        self.manifest.stages.insert(key.clone(), rec);
        self.timings.insert(key, started.elapsed().as_millis() as u64);
        write_json(&self.cfg.manifest_path(), &self.manifest)?;
        write_json(&self.cfg.timings_path(), &self.timings)?;
        self.summary.executed.push(stage);
        Ok(())
    }

    fn require(&self, stage: Stage, path: &Path) -> Result<()> {
        if path.exists() {
            Ok(())
        } else {
            Err(Error::Parse(format!("{stage} needs {} from an earlier stage", path.display())))
        }
    }

    fn run_stage(&mut self, stage: Stage) -> Result<()> {
        let cfg = self.cfg;
        let started = Instant::now();
        match stage {
            Stage::PerfectForms => {
                if cfg.resume && self.complete(stage, &[])? {
                    self.summary.skipped.push(stage);
                    return Ok(());
                }
                let records = enumerate_perfect_forms(cfg.rank, Group::GL)?;
                let out = cfg.perfect_forms_path();
                write_perfect_forms(&out, &records)?;
                self.record(stage, &[], &[out], started)
            }
            Stage::Complex => {
                let input = cfg.perfect_forms_path();
                self.require(stage, &input)?;
                if cfg.resume && self.complete(stage, std::slice::from_ref(&input))? {
                    self.summary.skipped.push(stage);
                    return Ok(());
                }
                let records = read_perfect_forms(&input)?;
                let dir = cfg.builder_dir();
                let resumed = if cfg.resume { load_checkpoint(&dir, cfg.rank, cfg.group)? } else { None };
                let mut builder = match resumed {
                    Some(b) => b,
                    None => {
                        if dir.exists() {
                            fs::remove_dir_all(&dir)?;
                        }
                        let b = ComplexBuilder::new(&records, cfg.group)?;
                        save_checkpoint(&dir, &b)?;
                        b
                    }
                };
                while builder.step()? {
                    save_levels(&dir, &builder, builder.levels.len() - 2)?;
                }
                save_levels(&dir, &builder, builder.levels.len() - 1)?;
                let cc = builder.finish()?.chain_complex(VectorOrder::Lex)?;
                cc.verify_d_squared()?;
                let out = cfg.complex_path();
                write_chain_complex(&out, &cc)?;
                self.record(stage, &[input], &[out], started)
            }
            Stage::Homology => {
                let input = cfg.complex_path();
                self.require(stage, &input)?;
                if cfg.resume && self.complete(stage, std::slice::from_ref(&input))? {
                    self.summary.skipped.push(stage);
                    return Ok(());
                }
                let cc = read_chain_complex(&input)?;
                let h = homology_of(&cc, SerreClassFilter::new(cfg.serre_bound())?)?;
                if !euler_check(&cc, &h) {
                    return Err(Error::Parse("Euler characteristics of cells and homology differ".into()));
                }
                let out = cfg.homology_path();
                write_json(&out, &h)?;
                self.record(stage, &[input], &[out], started)
            }
            Stage::Report => {
                let input = cfg.homology_path();
                self.require(stage, &input)?;
                let other = PipelineConfig {
                    group: match cfg.group {
                        Group::GL => Group::SL,
                        Group::SL => Group::GL,
                    },
                    ..cfg.clone()
                }
                .homology_path();
                let mut inputs = vec![input.clone()];
                if other.exists() {
                    inputs.push(other);
                }
                inputs.sort();
                let (txt, json) = cfg.report_paths();
                if !(cfg.resume && self.complete(stage, &inputs)?) {
                    let h: Vec<HomologyGroup> = serde_json::from_str(&fs::read_to_string(&input)?)?;
                    let steinberg = steinberg_table(&h, cfg.rank, cfg.group, cfg.serre_bound());
                    let cohomology = cohomology_table(&steinberg);
                    let footnotes = if inputs.len() > 1 { vec![shapiro_footnote(cfg.rank)] } else { Vec::new() };
                    write_atomic(&txt, render_text(&cohomology, &footnotes).as_bytes())?;
                    write_json(&json, &ReportDocument { steinberg, cohomology, footnotes })?;
                    self.record(stage, &inputs, &[json.clone(), txt.clone()], started)?;
                } else {
                    self.summary.skipped.push(stage);
                }
                self.summary.emitted = Some(fs::read_to_string(match cfg.emit {
                    EmitFormat::Text => txt,
                    EmitFormat::Json => json,
                })?);
                Ok(())
            }
        }
    }
}

/// Runs the requested stages in dependency order inside a pool of
/// `cfg.workers` threads. Errors are tagged with the failing stage.
pub fn run(cfg: &PipelineConfig) -> Result<RunSummary> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.checkpoint_dir)?;
    let mut stages = cfg.stages.clone();
    stages.sort();
    stages.dedup();
    let timings: BTreeMap<String, u64> = if cfg.timings_path().exists() {
        serde_json::from_str(&fs::read_to_string(cfg.timings_path())?)?
    } else {
        BTreeMap::new()
    };
    let mut runner = Runner { cfg, manifest: Manifest::load(&cfg.manifest_path())?, timings, summary: RunSummary::default() };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Parse(format!("thread pool: {e}")))?;
    pool.install(|| {
        for stage in stages {
            runner
                .run_stage(stage)
                .map_err(|e| Error::Stage { stage: stage.as_str(), source: Box::new(e) })?;
        }
        Ok(runner.summary)
    })
}
