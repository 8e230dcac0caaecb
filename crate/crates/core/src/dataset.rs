//! Corpus ingestion: model and question metadata, binary response matrices
//! and target rankings.
//!
//! All four file formats are headed UTF-8 CSV. The `parse_*` functions take
//! the file contents plus a label used in error messages, so they can be
//! driven from memory (tests, fuzzing) as well as from disk via the `load_*`
//! wrappers.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use log::warn;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ModelRecord {
    pub model_id: String,
    /// Number of parameters, if known.
    pub param_count: Option<u64>,
    pub excluded: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuestionRecord {
    pub question_id: String,
    pub benchmark: String,
    pub task: String,
    pub weight: f64,
}

/// Dense models x questions matrix of binary correctness values.
///
/// Immutable once built; every constructor validates shape, uniqueness of
/// ids and that every entry is 0 or 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseMatrix {
    models: Vec<ModelRecord>,
    questions: Vec<QuestionRecord>,
    entries: Vec<u8>,
    model_index: HashMap<String, usize>,
    question_index: HashMap<String, usize>,
}

impl ResponseMatrix {
    /// `entries` is row-major: `entries[m * n_questions + q]`.
    pub fn new(
        models: Vec<ModelRecord>,
        questions: Vec<QuestionRecord>,
        entries: Vec<u8>,
    ) -> Result<Self> {
        if entries.len() != models.len() * questions.len() {
            return Err(Error::invalid(format!(
                "response matrix has {} entries, expected {} x {}",
                entries.len(),
                models.len(),
                questions.len()
            )));
        }
        if let Some(v) = entries.iter().find(|&&v| v > 1) {
            return Err(Error::invalid(format!("non-binary response value {v}")));
        }
        let mut model_index = HashMap::with_capacity(models.len());
        for (i, m) in models.iter().enumerate() {
            if m.model_id.is_empty() {
                return Err(Error::invalid("empty model_id"));
            }
            if m.param_count == Some(0) {
                return Err(Error::invalid(format!(
                    "param_count for {} must be positive",
                    m.model_id
                )));
            }
            if model_index.insert(m.model_id.clone(), i).is_some() {
                return Err(Error::invalid(format!("duplicate model_id {}", m.model_id)));
            }
        }
        let mut question_index = HashMap::with_capacity(questions.len());
        for (i, q) in questions.iter().enumerate() {
            if q.question_id.is_empty() || q.benchmark.is_empty() || q.task.is_empty() {
                return Err(Error::invalid(format!(
                    "question {:?} has an empty id, benchmark or task",
                    q.question_id
                )));
            }
            if !q.weight.is_finite() {
                return Err(Error::invalid(format!(
                    "question {} has non-finite weight",
                    q.question_id
                )));
            }
            if question_index.insert(q.question_id.clone(), i).is_some() {
                return Err(Error::invalid(format!(
                    "duplicate question_id {}",
                    q.question_id
                )));
            }
        }
        Ok(Self {
            models,
            questions,
            entries,
            model_index,
            question_index,
        })
    }

    pub fn models(&self) -> &[ModelRecord] {
        &self.models
    }

    pub fn questions(&self) -> &[QuestionRecord] {
        &self.questions
    }

    pub fn n_models(&self) -> usize {
        self.models.len()
    }

    pub fn n_questions(&self) -> usize {
        self.questions.len()
    }

    pub fn model_ids(&self) -> Vec<String> {
        self.models.iter().map(|m| m.model_id.clone()).collect()
    }

    pub fn question_ids(&self) -> Vec<String> {
        self.questions.iter().map(|q| q.question_id.clone()).collect()
    }

    pub fn model_position(&self, id: &str) -> Option<usize> {
        self.model_index.get(id).copied()
    }

    pub fn question_position(&self, id: &str) -> Option<usize> {
        self.question_index.get(id).copied()
    }

    pub fn row(&self, model: usize) -> &[u8] {
        let n = self.questions.len();
        &self.entries[model * n..(model + 1) * n]
    }

    pub fn get(&self, model: usize, question: usize) -> u8 {
        self.entries[model * self.questions.len() + question]
    }

    /// Row `model` as reals, in column order.
    pub fn features(&self, model: usize) -> Vec<f64> {
        self.row(model).iter().map(|&v| v as f64).collect()
    }

    /// Distinct benchmark names, sorted.
    pub fn benchmarks(&self) -> Vec<String> {
        self.questions
            .iter()
            .map(|q| q.benchmark.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    /// Column indices grouped by benchmark, keyed in name order.
    pub fn columns_by_benchmark(&self) -> BTreeMap<String, Vec<usize>> {
        let mut out: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (j, q) in self.questions.iter().enumerate() {
            out.entry(q.benchmark.clone()).or_default().push(j);
        }
        out
    }

    /// Ids of models flagged `excluded` in the metadata.
    pub fn flagged_excluded(&self) -> BTreeSet<String> {
        self.models
            .iter()
            .filter(|m| m.excluded)
            .map(|m| m.model_id.clone())
            .collect()
    }

    /// Submatrix over the given rows, in the given order.
    pub fn select_models(&self, rows: &[usize]) -> Result<Self> {
        let n = self.questions.len();
        let mut entries = Vec::with_capacity(rows.len() * n);
        let mut models = Vec::with_capacity(rows.len());
        for &r in rows {
            models.push(self.models[r].clone());
            entries.extend_from_slice(self.row(r));
        }
        Self::new(models, self.questions.clone(), entries)
    }

    /// Submatrix over the given model ids, in the given order.
    pub fn select_model_ids<S: AsRef<str>>(&self, ids: &[S]) -> Result<Self> {
        let rows = ids
            .iter()
            .map(|id| {
                self.model_position(id.as_ref())
                    .ok_or_else(|| Error::invalid(format!("unknown model {}", id.as_ref())))
            })
            .collect::<Result<Vec<_>>>()?;
        self.select_models(&rows)
    }

    /// Submatrix over the given columns, in the given order.
    pub fn select_questions(&self, cols: &[usize]) -> Result<Self> {
        let n = self.questions.len();
        let mut entries = Vec::with_capacity(self.models.len() * cols.len());
        for m in 0..self.models.len() {
            let row = &self.entries[m * n..(m + 1) * n];
            entries.extend(cols.iter().map(|&c| row[c]));
        }
        let questions = cols.iter().map(|&c| self.questions[c].clone()).collect();
        Self::new(self.models.clone(), questions, entries)
    }

    pub fn models_csv(&self) -> String {
        let mut out = String::from("model_id,param_count,excluded\n");
        for m in &self.models {
            let pc = m.param_count.map(|p| p.to_string()).unwrap_or_default();
            out.push_str(&format!("{},{},{}\n", csv_field(&m.model_id), pc, m.excluded));
        }
        out
    }

    pub fn questions_csv(&self) -> String {
        let mut out = String::from("question_id,benchmark,task,weight\n");
        for q in &self.questions {
            out.push_str(&format!(
                "{},{},{},{}\n",
                csv_field(&q.question_id),
                csv_field(&q.benchmark),
                csv_field(&q.task),
                q.weight
            ));
        }
        out
    }

    pub fn responses_csv(&self) -> String {
        let mut out = String::from("model_id,question_id,score\n");
        for (i, m) in self.models.iter().enumerate() {
            let mid = csv_field(&m.model_id);
            for (j, q) in self.questions.iter().enumerate() {
                out.push_str(&format!(
                    "{},{},{}\n",
                    mid,
                    csv_field(&q.question_id),
                    self.get(i, j)
                ));
            }
        }
        out
    }

    /// Writes `models.csv`, `questions.csv` and `responses.csv` into `dir`.
    pub fn write_to_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (name, body) in [
            ("models.csv", self.models_csv()),
            ("questions.csv", self.questions_csv()),
            ("responses.csv", self.responses_csv()),
        ] {
            let p = dir.join(name);
            fs::write(&p, body).map_err(|e| Error::io(&p, e))?;
        }
        Ok(())
    }
}

/// Quotes a CSV field when it contains a delimiter, quote or newline.
pub(crate) fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes())
}

fn check_header(rdr: &mut csv::Reader<&[u8]>, file: &str, expected: &[&str]) -> Result<()> {
    let header = rdr
        .headers()
        .map_err(|e| Error::parse(file, 1, e.to_string()))?;
    let got: Vec<&str> = header.iter().collect();
    if got != expected {
        return Err(Error::parse(
            file,
            1,
            format!("expected header {:?}, found {:?}", expected.join(","), got.join(",")),
        ));
    }
    Ok(())
}

fn records<'a>(
    rdr: &'a mut csv::Reader<&'a [u8]>,
    file: &'a str,
    width: usize,
) -> impl Iterator<Item = Result<(u64, csv::StringRecord)>> + 'a {
    rdr.records().map(move |r| {
        let rec = r.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            Error::parse(file, line, e.to_string())
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        if rec.len() != width {
            return Err(Error::parse(
                file,
                line,
                format!("expected {width} fields, found {}", rec.len()),
            ));
        }
        Ok((line, rec))
    })
}

pub fn parse_models(text: &str, file: &str) -> Result<Vec<ModelRecord>> {
    let mut rdr = reader(text);
    check_header(&mut rdr, file, &["model_id", "param_count", "excluded"])?;
    let mut seen = HashMap::new();
    let mut out = Vec::new();
    for item in records(&mut rdr, file, 3) {
        let (line, rec) = item?;
        let model_id = rec[0].to_string();
        if model_id.is_empty() {
            return Err(Error::parse(file, line, "empty model_id"));
        }
        if let Some(prev) = seen.insert(model_id.clone(), line) {
            return Err(Error::parse(
                file,
                line,
                format!("duplicate model_id {model_id} (first seen on line {prev})"),
            ));
        }
        let param_count = match &rec[1] {
            "" => None,
            s => match s.parse::<u64>() {
                Ok(0) | Err(_) => {
                    return Err(Error::parse(
                        file,
                        line,
                        format!("model {model_id}: param_count {s:?} is not a positive integer"),
                    ))
                }
                Ok(v) => Some(v),
            },
        };
        let excluded = match &rec[2] {
            "true" => true,
            "false" => false,
            s => {
                return Err(Error::parse(
                    file,
                    line,
                    format!("model {model_id}: excluded must be true or false, found {s:?}"),
                ))
            }
        };
        out.push(ModelRecord {
            model_id,
            param_count,
            excluded,
        });
    }
    Ok(out)
}

pub fn parse_questions(text: &str, file: &str) -> Result<Vec<QuestionRecord>> {
    let mut rdr = reader(text);
    check_header(&mut rdr, file, &["question_id", "benchmark", "task", "weight"])?;
    let mut seen = HashMap::new();
    let mut out = Vec::new();
    for item in records(&mut rdr, file, 4) {
        let (line, rec) = item?;
        let question_id = rec[0].to_string();
        if question_id.is_empty() {
            return Err(Error::parse(file, line, "empty question_id"));
        }
        if let Some(prev) = seen.insert(question_id.clone(), line) {
            return Err(Error::parse(
                file,
                line,
                format!("duplicate question_id {question_id} (first seen on line {prev})"),
            ));
        }
        if rec[1].is_empty() || rec[2].is_empty() {
            return Err(Error::parse(
                file,
                line,
                format!("question {question_id}: benchmark and task must be nonempty"),
            ));
        }
        let weight = match &rec[3] {
            "" => 1.0,
            s => match s.parse::<f64>() {
                Ok(w) if w.is_finite() => w,
                _ => {
                    return Err(Error::parse(
                        file,
                        line,
                        format!("question {question_id}: invalid weight {s:?}"),
                    ))
                }
            },
        };
        out.push(QuestionRecord {
            question_id,
            benchmark: rec[1].to_string(),
            task: rec[2].to_string(),
            weight,
        });
    }
    Ok(out)
}

/// Parses a responses file against known metadata and returns the
/// row-major entry vector.
pub fn parse_responses(
    text: &str,
    file: &str,
    models: &[ModelRecord],
    questions: &[QuestionRecord],
) -> Result<Vec<u8>> {
    let model_index: HashMap<&str, usize> = models
        .iter()
        .enumerate()
        .map(|(i, m)| (m.model_id.as_str(), i))
        .collect();
    let question_index: HashMap<&str, usize> = questions
        .iter()
        .enumerate()
        .map(|(i, q)| (q.question_id.as_str(), i))
        .collect();
    let nq = questions.len();
    const MISSING: u8 = u8::MAX;
    let mut entries = vec![MISSING; models.len() * nq];

    let mut rdr = reader(text);
    check_header(&mut rdr, file, &["model_id", "question_id", "score"])?;
    for item in records(&mut rdr, file, 3) {
        let (line, rec) = item?;
        let (mid, qid, score) = (&rec[0], &rec[1], &rec[2]);
        let m = *model_index
            .get(mid)
            .ok_or_else(|| Error::parse(file, line, format!("unknown model_id {mid}")))?;
        let q = *question_index
            .get(qid)
            .ok_or_else(|| Error::parse(file, line, format!("unknown question_id {qid}")))?;
        let value = match score {
            "0" => 0u8,
            "1" => 1u8,
            other => {
                return Err(Error::parse(
                    file,
                    line,
                    format!("non-binary response {other:?} for ({mid}, {qid})"),
                ))
            }
        };
        let cell = &mut entries[m * nq + q];
        if *cell != MISSING {
            return Err(Error::parse(
                file,
                line,
                format!("duplicate response for ({mid}, {qid})"),
            ));
        }
        *cell = value;
    }
    if let Some(pos) = entries.iter().position(|&v| v == MISSING) {
        let (m, q) = (pos / nq, pos % nq);
        return Err(Error::parse(
            file,
            0,
            format!(
                "missing response for ({}, {})",
                models[m].model_id, questions[q].question_id
            ),
        ));
    }
    Ok(entries)
}

pub fn load_dataset(model_file: &Path, question_file: &Path, response_file: &Path) -> Result<ResponseMatrix> {
    let models = parse_models(&read_file(model_file)?, &model_file.display().to_string())?;
    let questions = parse_questions(
        &read_file(question_file)?,
        &question_file.display().to_string(),
    )?;
    let entries = parse_responses(
        &read_file(response_file)?,
        &response_file.display().to_string(),
        &models,
        &questions,
    )?;
    ResponseMatrix::new(models, questions, entries)
}

/// Total order over a set of models, 1 = most preferred.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetRanking {
    ranks: BTreeMap<String, usize>,
    scores: Option<BTreeMap<String, f64>>,
}

impl TargetRanking {
    /// Ranks by descending score, ties by ascending model id.
    pub fn from_scores(scores: BTreeMap<String, f64>) -> Result<Self> {
        if let Some((id, _)) = scores.iter().find(|(_, s)| !s.is_finite()) {
            return Err(Error::invalid(format!("non-finite target score for {id}")));
        }
        let ranks = ranks_from_scores(&scores);
        Ok(Self {
            ranks,
            scores: Some(scores),
        })
    }

    pub fn from_ranks(ranks: BTreeMap<String, usize>) -> Result<Self> {
        let k = ranks.len();
        let set: BTreeSet<usize> = ranks.values().copied().collect();
        let contiguous = k == 0 || (set.first() == Some(&1) && set.last() == Some(&k));
        if set.len() != k || !contiguous {
            return Err(Error::invalid("rank set must be {1..K}"));
        }
        Ok(Self { ranks, scores: None })
    }

    pub fn ranks(&self) -> &BTreeMap<String, usize> {
        &self.ranks
    }

    pub fn scores(&self) -> Option<&BTreeMap<String, f64>> {
        self.scores.as_ref()
    }

    pub fn len(&self) -> usize {
        self.ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }

    pub fn rank(&self, id: &str) -> Option<usize> {
        self.ranks.get(id).copied()
    }

    /// Model ids from best to worst.
    pub fn ordered_ids(&self) -> Vec<String> {
        let mut v: Vec<(&String, &usize)> = self.ranks.iter().collect();
        v.sort_by_key(|(_, &r)| r);
        v.into_iter().map(|(id, _)| id.clone()).collect()
    }

    /// The induced order on a subset, re-ranked to 1..k. Scores are kept
    /// for the retained models.
    pub fn restrict<S: AsRef<str>>(&self, ids: &[S]) -> Result<Self> {
        let mut kept: Vec<(usize, String)> = Vec::with_capacity(ids.len());
        for id in ids {
            let id = id.as_ref();
            let r = self
                .rank(id)
                .ok_or_else(|| Error::invalid(format!("model {id} has no target rank")))?;
            kept.push((r, id.to_string()));
        }
        kept.sort();
        kept.dedup();
        let ranks = kept
            .iter()
            .enumerate()
            .map(|(i, (_, id))| (id.clone(), i + 1))
            .collect();
        let scores = self.scores.as_ref().map(|s| {
            kept.iter()
                .map(|(_, id)| (id.clone(), s[id]))
                .collect::<BTreeMap<_, _>>()
        });
        Ok(Self { ranks, scores })
    }

    /// The exact reverse order.
    pub fn reversed(&self) -> Self {
        let k = self.ranks.len();
        Self {
            ranks: self.ranks.iter().map(|(id, &r)| (id.clone(), k + 1 - r)).collect(),
            scores: None,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("model_id,rank,score\n");
        for id in self.ordered_ids() {
            match &self.scores {
                Some(s) => out.push_str(&format!("{},,{}\n", csv_field(&id), s[&id])),
                None => out.push_str(&format!("{},{},\n", csv_field(&id), self.ranks[&id])),
            }
        }
        out
    }
}

/// Descending score, ties broken by ascending id; ranks start at 1.
pub(crate) fn ranks_from_scores(scores: &BTreeMap<String, f64>) -> BTreeMap<String, usize> {
    let mut order: Vec<(&String, f64)> = scores.iter().map(|(k, &v)| (k, v)).collect();
    order.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    order
        .into_iter()
        .enumerate()
        .map(|(i, (id, _))| (id.clone(), i + 1))
        .collect()
}

/// Parses a target ranking file. Every model must exist in `known_models`
/// when it is given.
pub fn parse_target_ranking(
    text: &str,
    file: &str,
    known_models: Option<&ResponseMatrix>,
) -> Result<TargetRanking> {
    let mut rdr = reader(text);
    check_header(&mut rdr, file, &["model_id", "rank", "score"])?;
    let mut ranks = BTreeMap::new();
    let mut scores = BTreeMap::new();
    let mut mode: Option<bool> = None; // Some(true) = ranks
    let mut rank_lines: HashMap<usize, u64> = HashMap::new();
    for item in records(&mut rdr, file, 3) {
        let (line, rec) = item?;
        let id = rec[0].to_string();
        if id.is_empty() {
            return Err(Error::parse(file, line, "empty model_id"));
        }
        if let Some(ds) = known_models {
            if ds.model_position(&id).is_none() {
                return Err(Error::parse(
                    file,
                    line,
                    format!("model {id} is not in the dataset"),
                ));
            }
        }
        let row_mode = match (rec[1].is_empty(), rec[2].is_empty()) {
            (false, true) => true,
            (true, false) => false,
            _ => {
                return Err(Error::parse(
                    file,
                    line,
                    format!("model {id}: exactly one of rank and score must be given"),
                ))
            }
        };
        if *mode.get_or_insert(row_mode) != row_mode {
            return Err(Error::parse(
                file,
                line,
                "rows mix explicit ranks and scores",
            ));
        }
        let dup = if row_mode {
            let r: usize = rec[1]
                .parse()
                .map_err(|_| Error::parse(file, line, format!("model {id}: invalid rank {:?}", &rec[1])))?;
            if let Some(prev) = rank_lines.insert(r, line) {
                return Err(Error::parse(
                    file,
                    line,
                    format!("duplicate rank {r} (also on line {prev})"),
                ));
            }
            ranks.insert(id.clone(), r).is_some()
        } else {
            let s: f64 = rec[2]
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| Error::parse(file, line, format!("model {id}: invalid score {:?}", &rec[2])))?;
            scores.insert(id.clone(), s).is_some()
        };
        if dup {
            return Err(Error::parse(file, line, format!("duplicate model_id {id}")));
        }
    }
    match mode {
        Some(false) => TargetRanking::from_scores(scores),
        Some(true) => TargetRanking::from_ranks(ranks)
            .map_err(|e| Error::parse(file, 0, e.to_string())),
        None => Err(Error::parse(file, 0, "target ranking is empty")),
    }
}

pub fn load_target_ranking(file: &Path, dataset: &ResponseMatrix) -> Result<TargetRanking> {
    parse_target_ranking(&read_file(file)?, &file.display().to_string(), Some(dataset))
}

/// Drops every question of the named benchmarks.
pub fn filter_benchmarks(dataset: &ResponseMatrix, exclude: &BTreeSet<String>) -> Result<ResponseMatrix> {
    let present: BTreeSet<String> = dataset.benchmarks().into_iter().collect();
    if let Some(unknown) = exclude.iter().find(|b| !present.contains(*b)) {
        return Err(Error::invalid(format!("unknown benchmark {unknown}")));
    }
    let cols: Vec<usize> = dataset
        .questions()
        .iter()
        .enumerate()
        .filter(|(_, q)| !exclude.contains(&q.benchmark))
        .map(|(j, _)| j)
        .collect();
    if cols.is_empty() {
        return Err(Error::invalid("no questions remain after benchmark exclusion"));
    }
    dataset.select_questions(&cols)
}

/// Drops the given models; ids not in the dataset are ignored with a warning.
pub fn filter_models(dataset: &ResponseMatrix, exclude_ids: &BTreeSet<String>) -> Result<ResponseMatrix> {
    for id in exclude_ids {
        if dataset.model_position(id).is_none() {
            warn!("excluded model {id} is not in the dataset");
        }
    }
    let rows: Vec<usize> = dataset
        .models()
        .iter()
        .enumerate()
        .filter(|(_, m)| !exclude_ids.contains(&m.model_id))
        .map(|(i, _)| i)
        .collect();
    if rows.len() < 2 {
        return Err(Error::invalid("fewer than 2 models remain after model exclusion"));
    }
    dataset.select_models(&rows)
}
