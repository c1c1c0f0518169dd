//! Plausibility scoring for generated future news.
//!
//! Generated items are bucketed by (theme, month) and thinned with a greedy
//! max-min diversity filter. Each surviving item is matched against the real
//! news of its month by cosine similarity, and the month score is the mean of
//! the per-item best matches (AvgMaxSim).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::model::DateYM;
use crate::scalar::Scalar;

pub const DEFAULT_DIMENSION: usize = 384;
pub const EMBED_URL_ENV: &str = "TREWARD_EMBED_URL";
pub const EMBED_BATCH_ENV: &str = "TREWARD_EMBED_BATCH";

#[derive(Debug, Error)]
pub enum GenevalError {
    #[error("embedding dimensions differ ({0} vs {1})")]
    Dimension(usize, usize),
    #[error("zero-norm embedding")]
    ZeroNorm,
    #[error("embedding has a non-finite entry at {0}")]
    NonFinite(usize),
    #[error("no generated items")]
    EmptyGenerated,
    #[error("no real items for this month")]
    EmptyReal,
    #[error("item {index} has no embedding")]
    MissingEmbedding { index: usize },
    #[error("theme {0:?} is not in the configured theme set")]
    UnknownTheme(String),
    #[error("generated item {0} has no theme")]
    MissingTheme(usize),
    #[error("text {0} has no words to embed")]
    EmptyText(usize),
    #[error("embedding request failed: {0}")]
    Http(String),
    #[error("embedding service returned {got} vectors for {sent} texts")]
    ResponseCount { sent: usize, got: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<T>", into = "Vec<T>")]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct Embedding<T>(Vec<T>);

impl<T: Scalar> Embedding<T> {
    pub fn new(values: Vec<T>) -> Result<Self, GenevalError> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(GenevalError::NonFinite(i));
        }
        Ok(Self(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[T] {
        &self.0
    }

    pub fn norm(&self) -> T {
        self.0.iter().map(|&v| v * v).sum::<T>().sqrt()
    }

    /// Unit-length copy; zero vectors are rejected.
    pub fn normalized(&self) -> Result<Self, GenevalError> {
        let n = self.norm();
        if n == T::zero() {
            return Err(GenevalError::ZeroNorm);
        }
        Ok(Self(self.0.iter().map(|&v| v / n).collect()))
    }
}

impl<T: Scalar> TryFrom<Vec<T>> for Embedding<T> {
    type Error = GenevalError;
    fn try_from(v: Vec<T>) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl<T> From<Embedding<T>> for Vec<T> {
    fn from(e: Embedding<T>) -> Self {
        e.0
    }
}

pub fn cosine_similarity<T: Scalar>(a: &Embedding<T>, b: &Embedding<T>) -> Result<T, GenevalError> {
    if a.dim() != b.dim() {
        return Err(GenevalError::Dimension(a.dim(), b.dim()));
    }
    let (na, nb) = (a.norm(), b.norm());
    if na == T::zero() || nb == T::zero() {
        return Err(GenevalError::ZeroNorm);
    }
    let dot: T = a.0.iter().zip(&b.0).map(|(&x, &y)| x * y).sum();
    Ok((dot / (na * nb)).max(-T::one()).min(T::one()))
}

/// Batch text-to-vector provider.
pub trait Embedder<T: Scalar>: Sync {
    fn dimension(&self) -> usize;
    fn embed(&self, texts: &[String]) -> Result<Vec<Embedding<T>>, GenevalError>;
}

/// Deterministic offline embedder: signed hashed bag of words, unit length.
#[derive(Debug, Clone)]
pub struct HashingEmbedder {
    dimension: usize,
}

impl HashingEmbedder {
    pub fn new(dimension: usize) -> Self {
        assert!(dimension > 0, "dimension must be positive");
        Self { dimension }
    }
}

impl Default for HashingEmbedder {
    fn default() -> Self {
        Self::new(DEFAULT_DIMENSION)
    }
}

fn word_hash(word: &str) -> u64 {
    let digest = Sha256::digest(word.as_bytes());
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

impl<T: Scalar> Embedder<T> for HashingEmbedder {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Embedding<T>>, GenevalError> {
        texts
            .iter()
            .enumerate()
            .map(|(i, text)| {
                let mut v = vec![T::zero(); self.dimension];
                let mut words = 0usize;
                for w in text.split(|c: char| !c.is_alphanumeric()).filter(|w| !w.is_empty()) {
                    let h = word_hash(&w.to_lowercase());
                    let slot = (h % self.dimension as u64) as usize;
                    let sign = if h >> 63 == 0 { T::one() } else { -T::one() };
                    v[slot] = v[slot] + sign;
                    words += 1;
                }
                if words == 0 {
                    return Err(GenevalError::EmptyText(i));
                }
                // All-cancelled sums fall back to the unsigned count vector.
                let e = Embedding(v);
                match e.normalized() {
                    Ok(n) => Ok(n),
                    Err(_) => Ok(Embedding(vec![T::one(); self.dimension]).normalized()?),
                }
            })
            .collect()
    }
}

/// Remote embedder: POSTs a JSON array of strings, expects a JSON array of
/// float arrays in the same order.
#[derive(Debug, Clone)]
pub struct HttpEmbedder {
    url: String,
    dimension: usize,
    batch_size: usize,
    max_in_flight: usize,
    client: reqwest::blocking::Client,
}

impl HttpEmbedder {
    pub fn new(url: impl Into<String>, dimension: usize, batch_size: usize, max_in_flight: usize) -> Result<Self, GenevalError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(120))
            .build()
            .map_err(|e| GenevalError::Http(e.to_string()))?;
        Ok(Self {
            url: url.into(),
            dimension,
            batch_size: batch_size.max(1),
            max_in_flight: max_in_flight.max(1),
            client,
        })
    }

    /// Reads the endpoint from `TREWARD_EMBED_URL` (and optionally the batch
    /// size from `TREWARD_EMBED_BATCH`). `None` if the URL is unset.
    pub fn from_env(dimension: usize, batch_size: usize, max_in_flight: usize) -> Option<Result<Self, GenevalError>> {
        let url = std::env::var(EMBED_URL_ENV).ok().filter(|u| !u.is_empty())?;
        let batch = std::env::var(EMBED_BATCH_ENV)
            .ok()
            .and_then(|b| b.parse().ok())
            .unwrap_or(batch_size);
        Some(Self::new(url, dimension, batch, max_in_flight))
    }

    fn request(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, GenevalError> {
        let resp = self
            .client
            .post(&self.url)
            .json(texts)
            .send()
            .and_then(|r| r.error_for_status())
            .map_err(|e| GenevalError::Http(e.to_string()))?;
        let vectors: Vec<Vec<f64>> = resp.json().map_err(|e| GenevalError::Http(e.to_string()))?;
        if vectors.len() != texts.len() {
            return Err(GenevalError::ResponseCount {
                sent: texts.len(),
                got: vectors.len(),
            });
        }
        Ok(vectors)
    }
}

impl<T: Scalar> Embedder<T> for HttpEmbedder {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Embedding<T>>, GenevalError> {
        let batches: Vec<&[String]> = texts.chunks(self.batch_size).collect();
        let mut out = Vec::with_capacity(texts.len());
        for wave in batches.chunks(self.max_in_flight) {
            let results: Vec<_> = std::thread::scope(|s| {
                let handles: Vec<_> = wave.iter().map(|b| s.spawn(|| self.request(b))).collect();
                handles
                    .into_iter()
                    .map(|h| h.join().unwrap_or_else(|_| Err(GenevalError::Http("worker panicked".into()))))
                    .collect()
            });
            for batch in results {
                for v in batch? {
                    if v.len() != self.dimension {
                        return Err(GenevalError::Dimension(v.len(), self.dimension));
                    }
                    out.push(Embedding::new(v.into_iter().map(T::of).collect())?.normalized()?);
                }
            }
        }
        Ok(out)
    }
}

/// One generated or real news item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct NewsItem<T> {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theme: Option<String>,
    pub month: DateYM,
    pub headline: String,
    #[serde(rename = "abstract", default)]
    pub abstract_text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding: Option<Embedding<T>>,
}

impl<T: Scalar> NewsItem<T> {
    pub fn text(&self) -> String {
        if self.abstract_text.is_empty() {
            self.headline.clone()
        } else {
            format!("{} {}", self.headline, self.abstract_text)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenevalConfig {
    pub dimension: usize,
    pub n_div: usize,
    pub themes: Vec<String>,
    pub batch_size: usize,
    pub max_in_flight: usize,
}

impl Default for GenevalConfig {
    fn default() -> Self {
        Self {
            dimension: DEFAULT_DIMENSION,
            n_div: 5,
            themes: [
                "Foreign Affairs",
                "Business",
                "Technology",
                "Politics",
                "Science",
                "Health",
                "Climate",
                "National",
            ]
            .map(String::from)
            .to_vec(),
            batch_size: 64,
            max_in_flight: 4,
        }
    }
}

/// Embed every item that lacks a vector; existing vectors are normalized.
pub fn embed_items<T: Scalar>(items: &mut [NewsItem<T>], embedder: &dyn Embedder<T>) -> Result<(), GenevalError> {
    let missing: Vec<usize> = (0..items.len()).filter(|&i| items[i].embedding.is_none()).collect();
    if !missing.is_empty() {
        let texts: Vec<String> = missing.iter().map(|&i| items[i].text()).collect();
        let vectors = embedder.embed(&texts).map_err(|e| match e {
            GenevalError::EmptyText(j) => GenevalError::EmptyText(missing[j]),
            other => other,
        })?;
        for (&i, v) in missing.iter().zip(vectors) {
            items[i].embedding = Some(v);
        }
    }
    for item in items.iter_mut() {
        if let Some(e) = &item.embedding {
            item.embedding = Some(e.normalized()?);
        }
    }
    Ok(())
}

fn embeddings_of<T: Scalar>(items: &[NewsItem<T>]) -> Result<Vec<&Embedding<T>>, GenevalError> {
    items
        .iter()
        .enumerate()
        .map(|(index, it)| it.embedding.as_ref().ok_or(GenevalError::MissingEmbedding { index }))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiverseSelection {
    /// Indices into the input, in selection order.
    pub indices: Vec<usize>,
    /// Fewer candidates than requested; everything was returned.
    pub short: bool,
}

/// Greedy max-min dispersion. The seed is the item whose highest similarity
/// to any other item is lowest; each further pick is the remaining item whose
/// highest similarity to the picks so far is lowest. Ties go to the earlier item.
pub fn greedy_diverse_subset<T: Scalar>(items: &[&Embedding<T>], n_div: usize) -> Result<DiverseSelection, GenevalError> {
    let n = items.len();
    if n <= n_div {
        return Ok(DiverseSelection {
            indices: (0..n).collect(),
            short: n < n_div,
        });
    }
    let mut sim = vec![T::zero(); n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let s = cosine_similarity(items[i], items[j])?;
            sim[i * n + j] = s;
            sim[j * n + i] = s;
        }
    }

    let mut closest = vec![T::neg_infinity(); n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                closest[i] = closest[i].max(sim[i * n + j]);
            }
        }
    }
    let argmin = |scores: &[T], taken: &[bool]| {
        let mut best: Option<usize> = None;
        for i in 0..n {
            if !taken[i] && best.is_none_or(|b| scores[i] < scores[b]) {
                best = Some(i);
            }
        }
        best
    };

    let mut taken = vec![false; n];
    let mut picks = Vec::with_capacity(n_div);
    let mut to_picks = vec![T::neg_infinity(); n];
    let mut next = argmin(&closest, &taken);
    while let Some(p) = next {
        taken[p] = true;
        picks.push(p);
        if picks.len() == n_div {
            break;
        }
        for i in 0..n {
            to_picks[i] = to_picks[i].max(sim[i * n + p]);
        }
        next = argmin(&to_picks, &taken);
    }
    Ok(DiverseSelection {
        indices: picks,
        short: false,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonthScore<T> {
    pub avg_max_sim: T,
    pub per_item_max: Vec<T>,
    pub n_generated: usize,
    pub n_real: usize,
}

/// Mean over generated items of the best cosine match among real items.
pub fn avg_max_sim<T: Scalar>(generated: &[&Embedding<T>], real: &[&Embedding<T>]) -> Result<MonthScore<T>, GenevalError> {
    if generated.is_empty() {
        return Err(GenevalError::EmptyGenerated);
    }
    if real.is_empty() {
        return Err(GenevalError::EmptyReal);
    }
    let per_item_max = generated
        .iter()
        .map(|g| {
            real.iter()
                .map(|r| cosine_similarity(g, r))
                .try_fold(T::neg_infinity(), |m, s| s.map(|s| m.max(s)))
        })
        .collect::<Result<Vec<T>, _>>()?;
    let avg = per_item_max.iter().copied().sum::<T>() / T::from_count(per_item_max.len());
    Ok(MonthScore {
        avg_max_sim: avg,
        per_item_max,
        n_generated: generated.len(),
        n_real: real.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShortBucket {
    pub theme: String,
    pub month: DateYM,
    pub available: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct FilterOutcome<T> {
    pub items: Vec<NewsItem<T>>,
    pub short_buckets: Vec<ShortBucket>,
}

/// Keep `n_div` diverse items per (theme, month) bucket. Buckets are visited
/// in (month, theme) order; items within a bucket keep input order for ties.
pub fn filter_generated<T: Scalar>(
    items: &[NewsItem<T>],
    cfg: &GenevalConfig,
) -> Result<FilterOutcome<T>, GenevalError> {
    let mut buckets: BTreeMap<(DateYM, String), Vec<usize>> = BTreeMap::new();
    for (i, it) in items.iter().enumerate() {
        let theme = it.theme.as_ref().ok_or(GenevalError::MissingTheme(i))?;
        if !cfg.themes.contains(theme) {
            return Err(GenevalError::UnknownTheme(theme.clone()));
        }
        if it.embedding.is_none() {
            return Err(GenevalError::MissingEmbedding { index: i });
        }
        buckets.entry((it.month, theme.clone())).or_default().push(i);
    }
    let mut out = FilterOutcome {
        items: Vec::new(),
        short_buckets: Vec::new(),
    };
    for ((month, theme), idx) in buckets {
        let vecs: Vec<&Embedding<T>> = idx
            .iter()
            .map(|&i| items[i].embedding.as_ref().expect("checked above"))
            .collect();
        let sel = greedy_diverse_subset(&vecs, cfg.n_div)?;
        if sel.short {
            out.short_buckets.push(ShortBucket {
                theme,
                month,
                available: idx.len(),
            });
        }
        out.items.extend(sel.indices.iter().map(|&k| items[idx[k]].clone()));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MonthStatus {
    Scored,
    MissingGenerated,
    MissingReal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct MonthRow<T> {
    pub month: DateYM,
    pub status: MonthStatus,
    pub n_generated: usize,
    pub n_real: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub avg_max_sim: Option<T>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub per_item_max: Vec<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct GenEvalReport<T> {
    pub rows: Vec<MonthRow<T>>,
    /// Mean over scored months.
    pub overall: Option<T>,
}

/// Per-month AvgMaxSim over the union of months present on either side.
pub fn monthly_report<T: Scalar>(
    generated: &[NewsItem<T>],
    real: &[NewsItem<T>],
) -> Result<GenEvalReport<T>, GenevalError> {
    let gen_emb = embeddings_of(generated)?;
    let real_emb = embeddings_of(real)?;
    let months: BTreeSet<DateYM> = generated.iter().chain(real).map(|it| it.month).collect();
    let rows = months
        .into_par_iter()
        .map(|month| {
            let g: Vec<&Embedding<T>> = generated
                .iter()
                .zip(&gen_emb)
                .filter(|(it, _)| it.month == month)
                .map(|(_, e)| *e)
                .collect();
            let r: Vec<&Embedding<T>> = real
                .iter()
                .zip(&real_emb)
                .filter(|(it, _)| it.month == month)
                .map(|(_, e)| *e)
                .collect();
            let mut row = MonthRow {
                month,
                status: MonthStatus::Scored,
                n_generated: g.len(),
                n_real: r.len(),
                avg_max_sim: None,
                per_item_max: Vec::new(),
            };
            if g.is_empty() {
                row.status = MonthStatus::MissingGenerated;
            } else if r.is_empty() {
                row.status = MonthStatus::MissingReal;
            } else {
                let s = avg_max_sim(&g, &r)?;
                row.avg_max_sim = Some(s.avg_max_sim);
                row.per_item_max = s.per_item_max;
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>, GenevalError>>()?;
    let scored: Vec<T> = rows.iter().filter_map(|r| r.avg_max_sim).collect();
    let overall = (!scored.is_empty())
        .then(|| scored.iter().copied().sum::<T>() / T::from_count(scored.len()));
    Ok(GenEvalReport { rows, overall })
}

impl<T: Scalar> GenEvalReport<T> {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("month,status,n_generated,n_real,avg_max_sim\n");
        for r in &self.rows {
            let status = match r.status {
                MonthStatus::Scored => "scored",
                MonthStatus::MissingGenerated => "missing_generated",
                MonthStatus::MissingReal => "missing_real",
            };
            let score = r.avg_max_sim.map(|s| format!("{:.6}", s.as_f64())).unwrap_or_default();
            let _ = writeln!(out, "{},{status},{},{},{score}", r.month, r.n_generated, r.n_real);
        }
        let overall = self.overall.map(|s| format!("{:.6}", s.as_f64())).unwrap_or_default();
        let _ = writeln!(out, "average,,,,{overall}");
        out
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        for r in &self.rows {
            match r.avg_max_sim {
                Some(s) => {
                    let _ = writeln!(
                        out,
                        "{}  AvgMaxSim {:6.2}%  ({} generated, {} real)",
                        r.month,
                        100.0 * s.as_f64(),
                        r.n_generated,
                        r.n_real
                    );
                }
                None => {
                    let _ = writeln!(out, "{}  {:?}", r.month, r.status);
                }
            }
        }
        if let Some(o) = self.overall {
            let _ = writeln!(out, "average  AvgMaxSim {:6.2}%", 100.0 * o.as_f64());
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(v: &[f64]) -> Embedding<f64> {
        Embedding::new(v.to_vec()).unwrap()
    }

    fn unit(dim: usize, i: usize) -> Embedding<f64> {
        let mut v = vec![0.0; dim];
        v[i] = 1.0;
        e(&v)
    }

    #[test]
    fn cosine_cases() {
        let v = e(&[1.0, 2.0, 3.0]);
        assert!((cosine_similarity(&v, &v).unwrap() - 1.0).abs() < 1e-12);
        let neg = e(&[-1.0, -2.0, -3.0]);
        assert!((cosine_similarity(&v, &neg).unwrap() + 1.0).abs() < 1e-12);
        assert_eq!(cosine_similarity(&unit(3, 0), &unit(3, 1)).unwrap(), 0.0);
        assert!(matches!(cosine_similarity(&v, &e(&[0.0; 3])), Err(GenevalError::ZeroNorm)));
        assert!(matches!(cosine_similarity(&v, &e(&[1.0])), Err(GenevalError::Dimension(3, 1))));
        assert!(Embedding::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn greedy_orthogonal_all_selected() {
        let items: Vec<_> = (0..5).map(|i| unit(5, i)).collect();
        let refs: Vec<_> = items.iter().collect();
        let sel = greedy_diverse_subset(&refs, 5).unwrap();
        assert_eq!(sel.indices, vec![0, 1, 2, 3, 4]);
        assert!(!sel.short);
    }

    #[test]
    fn greedy_copies_plus_orthogonal() {
        let mut items: Vec<_> = (0..10).map(|_| unit(5, 0)).collect();
        items.extend((1..5).map(|i| unit(5, i)));
        let refs: Vec<_> = items.iter().collect();
        let sel = greedy_diverse_subset(&refs, 5).unwrap();
        let mut got = sel.indices.clone();
        got.sort();
        assert_eq!(got, vec![0, 10, 11, 12, 13]);
        // seed is the first orthogonal item, then the first copy wins the tie
        assert_eq!(&sel.indices[..2], &[10, 0]);
    }

    #[test]
    fn greedy_single_pick_is_least_central() {
        let items = [e(&[1.0, 0.0]), e(&[0.9, 0.1]), e(&[0.0, 1.0])];
        let refs: Vec<_> = items.iter().collect();
        let sel = greedy_diverse_subset(&refs, 1).unwrap();
        assert_eq!(sel.indices, vec![2]);
    }

    #[test]
    fn greedy_short_bucket() {
        let items = [unit(2, 0)];
        let sel = greedy_diverse_subset(&[&items[0]], 5).unwrap();
        assert_eq!(sel.indices, vec![0]);
        assert!(sel.short);
    }

    #[test]
    fn avg_max_sim_cases() {
        let set: Vec<_> = (0..4).map(|i| unit(8, i)).collect();
        let refs: Vec<_> = set.iter().collect();
        assert!((avg_max_sim(&refs, &refs).unwrap().avg_max_sim - 1.0).abs() < 1e-12);
        let other: Vec<_> = (4..8).map(|i| unit(8, i)).collect();
        let orefs: Vec<_> = other.iter().collect();
        assert_eq!(avg_max_sim(&refs, &orefs).unwrap().avg_max_sim, 0.0);
        assert!(matches!(avg_max_sim(&refs, &[]), Err(GenevalError::EmptyReal)));
    }

    #[test]
    fn hashing_embedder_is_deterministic_unit() {
        let h = HashingEmbedder::default();
        let texts = vec!["Global tech stocks face pressure".to_string(), "global TECH stocks, face pressure!".to_string()];
        let v: Vec<Embedding<f64>> = h.embed(&texts).unwrap();
        assert_eq!(v[0].dim(), 384);
        assert!((v[0].norm() - 1.0).abs() < 1e-12);
        assert_eq!(v[0], v[1]);
        let err = Embedder::<f64>::embed(&h, &["  ...  ".to_string()]).unwrap_err();
        assert!(matches!(err, GenevalError::EmptyText(0)));
    }

    fn item(theme: Option<&str>, month: &str, text: &str, emb: Embedding<f64>) -> NewsItem<f64> {
        NewsItem {
            theme: theme.map(String::from),
            month: month.parse().unwrap(),
            headline: text.into(),
            abstract_text: String::new(),
            embedding: Some(emb),
        }
    }

    #[test]
    fn report_rows_and_missing_months() {
        let g = vec![
            item(Some("Business"), "2024-08", "a", unit(4, 0)),
            item(Some("Business"), "2024-10", "b", unit(4, 1)),
        ];
        let r = vec![
            item(None, "2024-08", "a", unit(4, 0)),
            item(None, "2024-09", "c", unit(4, 2)),
        ];
        let rep = monthly_report(&g, &r).unwrap();
        assert_eq!(rep.rows.len(), 3);
        assert_eq!(rep.rows[0].status, MonthStatus::Scored);
        assert_eq!(rep.rows[1].status, MonthStatus::MissingGenerated);
        assert_eq!(rep.rows[2].status, MonthStatus::MissingReal);
        assert_eq!(rep.overall, Some(1.0));
        let csv = rep.to_csv();
        assert!(csv.starts_with("month,status"));
        assert!(csv.contains("2024-08,scored,1,1,1.000000"));
        assert!(csv.trim_end().ends_with("average,,,,1.000000"));
    }

    #[test]
    fn filter_rejects_unknown_theme() {
        let cfg = GenevalConfig::default();
        let g = vec![item(Some("Sports"), "2024-08", "a", unit(4, 0))];
        assert!(matches!(filter_generated(&g, &cfg), Err(GenevalError::UnknownTheme(_))));
    }
}
