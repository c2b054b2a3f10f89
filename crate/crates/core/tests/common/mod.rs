//! Random graphs and brute-force oracles shared by the test targets.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use coevo::helloworld::{self, fixtures, Artifact, RESULT_RESOURCE};
use coevo::{ObjId, Repository, Value};
use rand::rngs::StdRng;
use rand::Rng;

/// Edge list over node indices; `None` marks an absent endpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    pub nodes: usize,
    pub edges: Vec<(Option<usize>, Option<usize>)>,
}

impl Graph {
    pub fn sample() -> Graph {
        Graph {
            nodes: 4,
            edges: vec![
                (Some(0), Some(1)),
                (Some(1), Some(2)),
                (Some(2), Some(0)),
                (Some(1), Some(1)),
                (Some(2), None),
            ],
        }
    }

    pub fn random(rng: &mut StdRng, max_nodes: usize, max_edges: usize, dangling: f64) -> Graph {
        let nodes = rng.gen_range(0..=max_nodes);
        let edge_count = rng.gen_range(0..=max_edges);
        let end = |rng: &mut StdRng| {
            if nodes == 0 || rng.gen_bool(dangling) {
                None
            } else {
                Some(rng.gen_range(0..nodes))
            }
        };
        let edges = (0..edge_count).map(|_| (end(rng), end(rng))).collect();
        Graph { nodes, edges }
    }

    pub fn node_id(i: usize) -> String {
        format!("n{}", i + 1)
    }

    pub fn edge_id(i: usize) -> String {
        format!("e{}", i + 1)
    }

    pub fn to_repository(&self) -> Repository {
        let nodes: Vec<String> = (0..self.nodes).map(Self::node_id).collect();
        let node_refs: Vec<&str> = nodes.iter().map(String::as_str).collect();
        let edge_ids: Vec<String> = (0..self.edges.len()).map(Self::edge_id).collect();
        let edges: Vec<(&str, Option<&str>, Option<&str>)> = self
            .edges
            .iter()
            .zip(&edge_ids)
            .map(|((s, t), id)| {
                (
                    id.as_str(),
                    s.map(|i| nodes[i].as_str()),
                    t.map(|i| nodes[i].as_str()),
                )
            })
            .collect();
        fixtures::graph(&node_refs, &edges)
    }

    /// Pairs joined by an edge with both endpoints present.
    pub fn relation(&self) -> BTreeSet<(usize, usize)> {
        self.edges
            .iter()
            .filter_map(|e| match e {
                (Some(s), Some(t)) => Some((*s, *t)),
                _ => None,
            })
            .collect()
    }

    pub fn count_looping(&self) -> usize {
        self.edges
            .iter()
            .filter(|(s, t)| s.is_some() && s == t)
            .count()
    }

    pub fn count_isolated(&self) -> usize {
        (0..self.nodes)
            .filter(|n| {
                self.edges
                    .iter()
                    .all(|(s, t)| *s != Some(*n) && *t != Some(*n))
            })
            .count()
    }

    pub fn count_dangling(&self) -> usize {
        self.edges
            .iter()
            .filter(|(s, t)| s.is_none() || t.is_none())
            .count()
    }

    /// Ordered triples of distinct nodes forming a directed 3-cycle, divided
    /// by the three rotations of each cycle.
    pub fn count_circles(&self) -> usize {
        let rel = self.relation();
        let mut ordered = 0;
        for a in 0..self.nodes {
            for b in 0..self.nodes {
                for c in 0..self.nodes {
                    let distinct = a != b && b != c && a != c;
                    if distinct
                        && rel.contains(&(a, b))
                        && rel.contains(&(b, c))
                        && rel.contains(&(c, a))
                    {
                        ordered += 1;
                    }
                }
            }
        }
        assert_eq!(ordered % 3, 0);
        ordered / 3
    }
}

/// Smallest relation containing `rel` and closed under composition,
/// computed by composing until nothing changes.
pub fn closure(rel: &BTreeSet<(usize, usize)>) -> BTreeSet<(usize, usize)> {
    let mut current = rel.clone();
    loop {
        let mut next = current.clone();
        for (a, b) in &current {
            for (c, d) in &current {
                if b == c {
                    next.insert((*a, *d));
                }
            }
        }
        if next == current {
            return current;
        }
        current = next;
    }
}

/// Walk enumeration: every node at the end of a walk of length in
/// `min_len..=max_len` from `start`.
pub fn reachable_by_walks(
    rel: &BTreeSet<(usize, usize)>,
    start: usize,
    min_len: usize,
    max_len: usize,
) -> BTreeSet<usize> {
    let mut out = BTreeSet::new();
    let mut frontier = BTreeSet::from([start]);
    for len in 1..=max_len {
        frontier = rel
            .iter()
            .filter(|(a, _)| frontier.contains(a))
            .map(|(_, b)| *b)
            .collect();
        if len >= min_len {
            out.extend(frontier.iter().copied());
        }
    }
    out
}

/// Edge relation of a graph repository, read straight from the slots.
pub fn relation_of(repo: &Repository) -> BTreeSet<(String, String)> {
    repo.objects()
        .filter(|o| o.class == "Edge")
        .filter_map(|o| {
            let end = |f: &str| o.slots.get(f).and_then(Value::as_ref_id).map(ObjId::to_string);
            Some((end("src")?, end("trg")?))
        })
        .collect()
}

pub fn named(rel: &BTreeSet<(usize, usize)>) -> BTreeSet<(String, String)> {
    rel.iter()
        .map(|(a, b)| (Graph::node_id(*a), Graph::node_id(*b)))
        .collect()
}

pub fn run(task: &str, repo: Repository) -> helloworld::TaskRun {
    run_with(task, repo, &[])
}

pub fn run_with(task: &str, repo: Repository, params: &[(&str, &str)]) -> helloworld::TaskRun {
    let params: BTreeMap<String, String> = params
        .iter()
        .map(|(k, v)| ((*k).to_owned(), (*v).to_owned()))
        .collect();
    helloworld::run_task(helloworld::task(task).expect("known task"), repo, &params)
        .unwrap_or_else(|e| panic!("{task}: {e:?}"))
}

pub fn model(run: &helloworld::TaskRun) -> &Repository {
    match &run.artifact {
        Artifact::Model(repo) => repo,
        Artifact::Text(_) => panic!("task produced text"),
    }
}

/// The single IntResult a count task stores.
pub fn count(task: &str, repo: Repository) -> i64 {
    let run = run(task, repo);
    let results = model(&run);
    let roots = &results.resource(RESULT_RESOURCE).expect("result resource").roots;
    assert_eq!(roots.len(), 1, "{task}");
    results.slot(&roots[0], "value").and_then(Value::as_int).expect("int value")
}
