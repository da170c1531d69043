//! Synthetic counting benchmarks.
//!
//! Graph `i` of a generated family always draws from `rng::stream(seed,
//! family, i)`, so generation is reproducible and order independent.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::{index, SliceRandom};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::counting::{
    containment_count, count, is_star, star_containment_count, star_pattern, CountMode, Pattern,
};
use crate::error::{Error, Result};
use crate::graph::{AttributedGraph, FeatureToken, GraphBuilder};
use crate::io;
use crate::rng::stream;

/// `(m, d)` configurations of the random-regular family.
pub const PAPER_RR_CONFIGS: [(usize, usize); 4] = [(10, 6), (15, 6), (20, 5), (30, 5)];

/// Restart bound of the pairing generator.
pub const MAX_PAIRING_RESTARTS: usize = 10_000;

pub fn erdos_renyi<R: Rng + ?Sized>(m: usize, p: f64, rng: &mut R) -> AttributedGraph {
    let mut b = GraphBuilder::new(m);
    for i in 0..m {
        for j in i + 1..m {
            if rng.gen::<f64>() < p {
                b.add_edge(i, j, FeatureToken::DEFAULT).expect("fresh pair");
            }
        }
    }
    b.build()
}

/// ER(m, p) graph with node tokens drawn from `0..node_tokens` and edge tokens
/// from `0..edge_tokens` (a vocabulary of 0 or 1 means all default).
pub fn random_attributed_graph<R: Rng + ?Sized>(
    m: usize,
    p: f64,
    node_tokens: u32,
    edge_tokens: u32,
    rng: &mut R,
) -> AttributedGraph {
    let mut b = GraphBuilder::new(m);
    for i in 0..m {
        b.set_node_feature(i, FeatureToken(rng.gen_range(0..node_tokens.max(1))));
    }
    for i in 0..m {
        for j in i + 1..m {
            if rng.gen::<f64>() < p {
                let t = FeatureToken(rng.gen_range(0..edge_tokens.max(1)));
                b.add_edge(i, j, t).expect("fresh pair");
            }
        }
    }
    b.build()
}

/// `count` independent ER(m, p) graphs.
pub fn gen_erdos_renyi(count: usize, m: usize, p: f64, seed: u64) -> Result<Vec<AttributedGraph>> {
    if count == 0 {
        return Err(Error::InvalidArgument("count must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("edge probability {p} outside [0, 1]")));
    }
    Ok((0..count)
        .into_par_iter()
        .map(|i| erdos_renyi(m, p, &mut stream(seed, "er", i as u64)))
        .collect())
}

/// Uniform-ish random `d`-regular graph on `m` nodes by incremental pairing
/// (Steger–Wormald): stubs are shuffled and paired, pairs that would create a
/// loop or a repeated edge go back into the pool, and the whole attempt
/// restarts when no admissible pair is left.
pub fn random_regular_graph<R: Rng + ?Sized>(
    m: usize,
    d: usize,
    rng: &mut R,
) -> Result<AttributedGraph> {
    if !(m * d).is_multiple_of(2) || (m > 0 && d >= m) {
        return Err(Error::InvalidArgument(format!(
            "no {d}-regular graph on {m} nodes (need m*d even and d < m)"
        )));
    }
    for _ in 0..MAX_PAIRING_RESTARTS {
        if let Some(edges) = try_pairing(m, d, rng) {
            let mut b = GraphBuilder::new(m);
            for (i, j) in edges {
                b.add_edge(i, j, FeatureToken::DEFAULT)?;
            }
            return Ok(b.build());
        }
    }
    Err(Error::GenerationFailure(format!(
        "no simple {d}-regular graph on {m} nodes after {MAX_PAIRING_RESTARTS} restarts"
    )))
}

fn try_pairing<R: Rng + ?Sized>(m: usize, d: usize, rng: &mut R) -> Option<BTreeSet<(usize, usize)>> {
    let mut edges = BTreeSet::new();
    let mut stubs: Vec<usize> = (0..m).flat_map(|v| std::iter::repeat_n(v, d)).collect();
    while !stubs.is_empty() {
        let mut leftover: BTreeMap<usize, usize> = BTreeMap::new();
        stubs.shuffle(rng);
        for pair in stubs.chunks_exact(2) {
            let (a, b) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
            if a == b || !edges.insert((a, b)) {
                *leftover.entry(a).or_insert(0) += 1;
                *leftover.entry(b).or_insert(0) += 1;
            }
        }
        let pool: Vec<usize> = leftover.keys().copied().collect();
        let admissible = pool.is_empty()
            || pool
                .iter()
                .enumerate()
                .any(|(x, &a)| pool[x + 1..].iter().any(|&b| !edges.contains(&(a, b))));
        if !admissible {
            return None;
        }
        stubs = leftover
            .iter()
            .flat_map(|(&v, &c)| std::iter::repeat_n(v, c))
            .collect();
    }
    Some(edges)
}

/// Remove `k` distinct edges chosen uniformly without replacement.
pub fn delete_random_edges<R: Rng + ?Sized>(
    g: &AttributedGraph,
    k: usize,
    rng: &mut R,
) -> Result<AttributedGraph> {
    let edges: Vec<_> = g.edges().collect();
    if k > edges.len() {
        return Err(Error::InvalidArgument(format!(
            "cannot delete {k} of {} edges",
            edges.len()
        )));
    }
    let mut b = GraphBuilder::from_graph(g);
    for idx in index::sample(rng, edges.len(), k) {
        let (i, j, _) = edges[idx];
        b.remove_edge(i, j)?;
    }
    Ok(b.build())
}

/// For each graph, pick `(m, d)` uniformly from `configs`, draw a random
/// `d`-regular graph on `m` nodes and delete `m` random edges.
pub fn gen_random_regular(
    count: usize,
    configs: &[(usize, usize)],
    seed: u64,
) -> Result<Vec<AttributedGraph>> {
    if count == 0 || configs.is_empty() {
        return Err(Error::InvalidArgument("need count >= 1 and at least one config".into()));
    }
    (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, "rr", i as u64);
            let (m, d) = configs[rng.gen_range(0..configs.len())];
            let g = random_regular_graph(m, d, &mut rng)?;
            delete_random_edges(&g, m, &mut rng)
        })
        .collect()
}

/// A counting task: a pattern and a count mode.
#[derive(Clone, Debug)]
pub struct Task {
    pub name: String,
    pub pattern: Pattern,
    pub mode: CountMode,
}

impl Task {
    /// Matching-count of triangles.
    pub fn triangle() -> Self {
        Task {
            name: "triangle".into(),
            pattern: Pattern::triangle(),
            mode: CountMode::Matching,
        }
    }

    /// Containment-count of 3-stars.
    pub fn three_star() -> Self {
        Task {
            name: "3star".into(),
            pattern: star_pattern(4, None).expect("small star"),
            mode: CountMode::Containment,
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "triangle" => Ok(Self::triangle()),
            "3star" => Ok(Self::three_star()),
            _ => Err(Error::InvalidArgument(format!("unknown task `{name}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub generator: String,
    pub params: serde_json::Value,
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub struct LabeledDataset {
    pub graphs: Vec<AttributedGraph>,
    pub labels: Vec<f64>,
    pub task: Task,
    pub meta: DatasetMeta,
    /// Population variance of `labels`.
    pub variance: f64,
}

pub fn population_variance(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n
}

/// Count labels for `graphs`. Star containment uses the per-node formula and
/// every tenth graph is re-counted with the generic oracle.
pub fn count_labels(graphs: &[AttributedGraph], pattern: &Pattern, mode: CountMode) -> Result<Vec<f64>> {
    let star_path = mode == CountMode::Containment && is_star(pattern.graph()) && pattern.n() >= 3;
    graphs
        .par_iter()
        .enumerate()
        .map(|(i, g)| {
            if star_path {
                let fast = star_containment_count(g, pattern)?;
                if i % 10 == 0 {
                    let slow = containment_count(g, pattern)?;
                    if slow != fast {
                        return Err(Error::Internal(format!(
                            "graph {i}: star formula {fast} != oracle {slow}"
                        )));
                    }
                }
                Ok(fast as f64)
            } else {
                Ok(count(g, pattern, mode)? as f64)
            }
        })
        .collect()
}

pub fn label_dataset(
    graphs: Vec<AttributedGraph>,
    task: Task,
    meta: DatasetMeta,
) -> Result<LabeledDataset> {
    let labels = count_labels(&graphs, &task.pattern, task.mode)?;
    let variance = population_variance(&labels);
    Ok(LabeledDataset {
        graphs,
        labels,
        task,
        meta,
        variance,
    })
}

impl LabeledDataset {
    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    /// Sub-dataset on `indices`; its `variance` is recomputed on the subset.
    pub fn subset(&self, indices: &[usize]) -> LabeledDataset {
        let labels: Vec<f64> = indices.iter().map(|&i| self.labels[i]).collect();
        LabeledDataset {
            graphs: indices.iter().map(|&i| self.graphs[i].clone()).collect(),
            variance: population_variance(&labels),
            labels,
            task: self.task.clone(),
            meta: self.meta.clone(),
        }
    }
}

/// Train/validation/test fractions and the shuffle seed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitSpec {
    pub train: f64,
    pub val: f64,
    pub test: f64,
    pub seed: u64,
}

impl SplitSpec {
    /// 30% / 20% / 50%.
    pub fn paper(seed: u64) -> Self {
        SplitSpec {
            train: 0.3,
            val: 0.2,
            test: 0.5,
            seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

pub const MIN_SPLIT_SIZE: usize = 10;

/// Seeded shuffle, then floor for train and validation; the rest is test.
pub fn split_indices(len: usize, spec: &SplitSpec) -> Result<SplitIndices> {
    if len < MIN_SPLIT_SIZE {
        return Err(Error::TooFewGraphs {
            needed: MIN_SPLIT_SIZE,
            got: len,
        });
    }
    let total = spec.train + spec.val + spec.test;
    if (total - 1.0).abs() > 1e-9 || spec.train < 0.0 || spec.val < 0.0 || spec.test < 0.0 {
        return Err(Error::InvalidArgument(format!("split fractions sum to {total}")));
    }
    let mut order: Vec<usize> = (0..len).collect();
    order.shuffle(&mut stream(spec.seed, "split", 0));
    let n_train = (spec.train * len as f64 + 1e-9).floor() as usize;
    let n_val = (spec.val * len as f64 + 1e-9).floor() as usize;
    let test = order.split_off(n_train + n_val);
    let val = order.split_off(n_train);
    Ok(SplitIndices {
        train: order,
        val,
        test,
    })
}

pub fn split(
    ds: &LabeledDataset,
    spec: &SplitSpec,
) -> Result<(LabeledDataset, LabeledDataset, LabeledDataset)> {
    let s = split_indices(ds.len(), spec)?;
    Ok((ds.subset(&s.train), ds.subset(&s.val), ds.subset(&s.test)))
}

/// Contents of `meta.json` in a dataset directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetaFile {
    pub generator: String,
    pub params: serde_json::Value,
    pub seed: u64,
    #[serde(default)]
    pub task: Option<String>,
    #[serde(default)]
    pub variance: Option<f64>,
}

/// Write `meta.json`, `graphs.jsonl` and `splits.json` of an unlabeled dataset.
pub fn write_unlabeled(
    dir: &Path,
    graphs: &[AttributedGraph],
    meta: &DatasetMeta,
    splits: &SplitIndices,
) -> Result<()> {
    fs::create_dir_all(dir)?;
    io::write_jsonl(&dir.join("graphs.jsonl"), graphs)?;
    let file = MetaFile {
        generator: meta.generator.clone(),
        params: meta.params.clone(),
        seed: meta.seed,
        task: None,
        variance: None,
    };
    fs::write(dir.join("meta.json"), serde_json::to_string_pretty(&file)?)?;
    fs::write(dir.join("splits.json"), serde_json::to_string(splits)?)?;
    Ok(())
}

/// Write `labels.csv` and record the task and label variance in `meta.json`.
pub fn write_labels(dir: &Path, ds: &LabeledDataset) -> Result<()> {
    let mut csv = String::from("graph_id,label\n");
    for (i, y) in ds.labels.iter().enumerate() {
        writeln!(csv, "{i},{y}").expect("write to string");
    }
    fs::write(dir.join("labels.csv"), csv)?;
    let mut meta = read_meta(dir)?;
    meta.task = Some(ds.task.name.clone());
    meta.variance = Some(ds.variance);
    fs::write(dir.join("meta.json"), serde_json::to_string_pretty(&meta)?)?;
    Ok(())
}

pub fn read_meta(dir: &Path) -> Result<MetaFile> {
    Ok(serde_json::from_str(&io::read_to_string(&dir.join("meta.json"))?)?)
}

pub fn read_splits(dir: &Path) -> Result<SplitIndices> {
    Ok(serde_json::from_str(&io::read_to_string(&dir.join("splits.json"))?)?)
}

fn read_labels(dir: &Path) -> Result<Vec<f64>> {
    let text = io::read_to_string(&dir.join("labels.csv"))?;
    text.lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, line)| {
            let label = line.split(',').nth(1).ok_or_else(|| Error::Parse {
                line: i + 2,
                column: 1,
                message: "expected `graph_id,label`".into(),
            })?;
            label.trim().parse::<f64>().map_err(|_| Error::Parse {
                line: i + 2,
                column: line.find(',').map_or(1, |c| c + 2),
                message: format!("bad label `{label}`"),
            })
        })
        .collect()
}

/// Load a dataset directory for `task`. Stored labels are reused when they
/// were written for the same task; otherwise labels are recomputed.
pub fn load_labeled(dir: &Path, task: Task) -> Result<LabeledDataset> {
    let meta = read_meta(dir)?;
    let graphs = io::read_jsonl(&dir.join("graphs.jsonl"))?;
    let dmeta = DatasetMeta {
        generator: meta.generator.clone(),
        params: meta.params.clone(),
        seed: meta.seed,
    };
    if meta.task.as_deref() == Some(task.name.as_str()) {
        let labels = read_labels(dir)?;
        if labels.len() != graphs.len() {
            return Err(Error::Validation(format!(
                "{} labels for {} graphs",
                labels.len(),
                graphs.len()
            )));
        }
        let variance = population_variance(&labels);
        return Ok(LabeledDataset {
            graphs,
            labels,
            task,
            meta: dmeta,
            variance,
        });
    }
    label_dataset(graphs, task, dmeta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn er_extremes() {
        for g in gen_erdos_renyi(5, 6, 0.0, 1).unwrap() {
            assert_eq!(g.edge_count(), 0);
        }
        for g in gen_erdos_renyi(5, 6, 1.0, 1).unwrap() {
            assert_eq!(g, AttributedGraph::complete(6));
        }
        assert!(gen_erdos_renyi(5, 6, 1.5, 1).is_err());
    }

    #[test]
    fn er_is_deterministic() {
        assert_eq!(
            gen_erdos_renyi(20, 10, 0.3, 9).unwrap(),
            gen_erdos_renyi(20, 10, 0.3, 9).unwrap()
        );
        assert_ne!(
            gen_erdos_renyi(20, 10, 0.3, 9).unwrap(),
            gen_erdos_renyi(20, 10, 0.3, 10).unwrap()
        );
    }

    #[test]
    fn regular_graphs_are_regular() {
        let mut rng = stream(3, "test", 0);
        for &(m, d) in &PAPER_RR_CONFIGS {
            for _ in 0..5 {
                let g = random_regular_graph(m, d, &mut rng).unwrap();
                assert!((0..m).all(|v| g.degree(v) == d), "({m}, {d})");
            }
        }
        assert!(random_regular_graph(5, 3, &mut rng).is_err());
        assert!(random_regular_graph(4, 4, &mut rng).is_err());
    }

    #[test]
    fn rr_family_edge_counts() {
        for g in gen_random_regular(40, &PAPER_RR_CONFIGS, 5).unwrap() {
            let m = g.n();
            let d = PAPER_RR_CONFIGS.iter().find(|c| c.0 == m).unwrap().1;
            assert_eq!(g.edge_count(), m * d / 2 - m);
            assert!((0..m).all(|v| g.degree(v) <= d));
        }
    }

    #[test]
    fn split_sizes() {
        let s = split_indices(5000, &SplitSpec::paper(1)).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (1500, 1000, 2500));
        let s = split_indices(10, &SplitSpec::paper(1)).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (3, 2, 5));
        let mut all: Vec<usize> = s.train.iter().chain(&s.val).chain(&s.test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
        assert_eq!(s, split_indices(10, &SplitSpec::paper(1)).unwrap());
        assert!(matches!(
            split_indices(9, &SplitSpec::paper(1)),
            Err(Error::TooFewGraphs { got: 9, .. })
        ));
    }

    #[test]
    fn labels_on_small_graphs() {
        let meta = DatasetMeta {
            generator: "manual".into(),
            params: serde_json::Value::Null,
            seed: 0,
        };
        let tt = AttributedGraph::complete(3).disjoint_union(&AttributedGraph::complete(3));
        let ds = label_dataset(vec![tt], Task::triangle(), meta.clone()).unwrap();
        assert_eq!(ds.labels, vec![2.0]);
        let ds = label_dataset(vec![AttributedGraph::complete(4)], Task::three_star(), meta).unwrap();
        assert_eq!(ds.labels, vec![4.0]);
        assert_eq!(ds.variance, 0.0);
    }

    #[test]
    fn variance_is_population_variance() {
        assert_eq!(population_variance(&[1.0, 3.0]), 1.0);
        assert_eq!(population_variance(&[]), 0.0);
    }
}
