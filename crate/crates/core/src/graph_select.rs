//! Correlation graph construction, maximal-clique enumeration, and
//! per-clique representative selection.
//!
//! Features whose encoded columns correlate above the threshold are linked;
//! each maximal clique of that graph is a redundancy group. The member with
//! the highest IV wins its clique; a winner sharing another clique with a
//! better winner is discarded, as is any winner below the IV floor.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pearson correlation matrix of the given columns.
///
/// The diagonal is exactly 1 and the matrix is symmetric by construction.
/// Constant columns are rejected by name.
pub fn correlation_matrix(columns: &[Vec<f64>], names: &[String]) -> Result<Vec<Vec<f64>>> {
    if columns.len() < 2 {
        return Err(Error::EmptyInput);
    }
    let n = columns[0].len();
    let mut centered = Vec::with_capacity(columns.len());
    let mut norms = Vec::with_capacity(columns.len());
    for (column, name) in columns.iter().zip(names) {
        if column.len() != n {
            return Err(Error::LengthMismatch {
                column: name.clone(),
                got: column.len(),
                expected: n,
            });
        }
        let mean = column.iter().sum::<f64>() / n as f64;
        let c: Vec<f64> = column.iter().map(|x| x - mean).collect();
        let norm = c.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::ConstantColumn(name.clone()));
        }
        centered.push(c);
        norms.push(norm);
    }
    let d = columns.len();
    let mut matrix = vec![vec![0.0; d]; d];
    for i in 0..d {
        matrix[i][i] = 1.0;
        for j in i + 1..d {
            let dot: f64 = centered[i]
                .iter()
                .zip(&centered[j])
                .map(|(a, b)| a * b)
                .sum();
            let r = dot / (norms[i] * norms[j]);
            matrix[i][j] = r;
            matrix[j][i] = r;
        }
    }
    Ok(matrix)
}

/// An edge of the redundancy graph.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CorrelationEdge {
    pub a: String,
    pub b: String,
    pub correlation: f64,
}

/// Undirected feature-redundancy graph.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CorrelationGraph {
    pub vertices: Vec<String>,
    pub threshold: f64,
    /// When false (the default), edges use `|corr| > threshold`, treating
    /// anticorrelated encodings as redundant too.
    pub signed: bool,
    pub edges: Vec<CorrelationEdge>,
}

impl CorrelationGraph {
    fn vertex_index(&self) -> HashMap<&str, usize> {
        self.vertices
            .iter()
            .enumerate()
            .map(|(i, v)| (v.as_str(), i))
            .collect()
    }

    fn adjacency(&self) -> Vec<HashSet<usize>> {
        let index = self.vertex_index();
        let mut adj = vec![HashSet::new(); self.vertices.len()];
        for e in &self.edges {
            let i = index[e.a.as_str()];
            let j = index[e.b.as_str()];
            adj[i].insert(j);
            adj[j].insert(i);
        }
        adj
    }

    /// DOT rendering for external visualization.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("graph correlation {\n");
        for v in &self.vertices {
            out.push_str(&format!("    \"{v}\";\n"));
        }
        for e in &self.edges {
            out.push_str(&format!(
                "    \"{}\" -- \"{}\" [label=\"{:.3}\"];\n",
                e.a, e.b, e.correlation
            ));
        }
        out.push_str("}\n");
        out
    }
}

/// Build the redundancy graph: an edge per pair with correlation strictly
/// above `threshold` (absolute value unless `signed`).
pub fn build_graph(
    matrix: &[Vec<f64>],
    names: &[String],
    threshold: f64,
    signed: bool,
) -> CorrelationGraph {
    let mut edges = Vec::new();
    for i in 0..names.len() {
        for j in i + 1..names.len() {
            let r = matrix[i][j];
            let strength = if signed { r } else { r.abs() };
            if strength > threshold {
                edges.push(CorrelationEdge {
                    a: names[i].clone(),
                    b: names[j].clone(),
                    correlation: r,
                });
            }
        }
    }
    CorrelationGraph {
        vertices: names.to_vec(),
        threshold,
        signed,
        edges,
    }
}

/// All maximal cliques, via Bron-Kerbosch with max-degree pivoting.
///
/// Each clique is sorted by vertex name and the list is sorted
/// lexicographically; isolated vertices appear as singletons.
pub fn maximal_cliques(graph: &CorrelationGraph) -> Vec<Vec<String>> {
    let n = graph.vertices.len();
    if n == 0 {
        return Vec::new();
    }
    let adj = graph.adjacency();
    let mut cliques = Vec::new();
    let p: HashSet<usize> = (0..n).collect();
    bron_kerbosch(&adj, HashSet::new(), p, HashSet::new(), &mut cliques);
    let mut named: Vec<Vec<String>> = cliques
        .into_iter()
        .map(|c| {
            let mut names: Vec<String> =
                c.into_iter().map(|i| graph.vertices[i].clone()).collect();
            names.sort();
            names
        })
        .collect();
    named.sort();
    named
}

fn bron_kerbosch(
    adj: &[HashSet<usize>],
    r: HashSet<usize>,
    mut p: HashSet<usize>,
    mut x: HashSet<usize>,
    out: &mut Vec<HashSet<usize>>,
) {
    if p.is_empty() {
        if x.is_empty() {
            out.push(r);
        }
        return;
    }
    let pivot = p
        .iter()
        .chain(x.iter())
        .max_by_key(|&&v| adj[v].len())
        .copied()
        .unwrap();
    let candidates: Vec<usize> = p.iter().filter(|v| !adj[pivot].contains(v)).copied().collect();
    for v in candidates {
        let mut next_r = r.clone();
        next_r.insert(v);
        let next_p = p.intersection(&adj[v]).copied().collect();
        let next_x = x.intersection(&adj[v]).copied().collect();
        bron_kerbosch(adj, next_r, next_p, next_x, out);
        p.remove(&v);
        x.insert(v);
    }
}

/// A retained clique representative.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Winner {
    pub feature: String,
    pub iv: f64,
}

/// Why a feature was dropped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DiscardReason {
    #[serde(rename = "clique-loser")]
    CliqueLoser,
    #[serde(rename = "multi-clique-dominated")]
    MultiCliqueDominated,
    #[serde(rename = "low-IV")]
    LowIv,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Discarded {
    pub feature: String,
    pub iv: f64,
    pub reason: DiscardReason,
}

/// Cliques, winners, and per-feature discard reasons.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CliqueReport {
    pub cliques: Vec<Vec<String>>,
    pub winners: Vec<Winner>,
    pub discarded: Vec<Discarded>,
    pub iv_floor: f64,
}

/// Pick one IV-maximal representative per clique.
///
/// Ordering of features is by `(IV desc, name asc)`; the same ordering breaks
/// exact-IV ties in the domination rule, so the final winner set never holds
/// two members of one clique. Winners below `iv_floor` are dropped last.
pub fn select_representatives(
    cliques: &[Vec<String>],
    iv_scores: &HashMap<String, f64>,
    iv_floor: f64,
) -> Result<CliqueReport> {
    for clique in cliques {
        for feature in clique {
            if !iv_scores.contains_key(feature) {
                return Err(Error::MissingIvScore(feature.clone()));
            }
        }
    }

    // (IV desc, name asc) total order
    let beats = |a: &str, b: &str| -> bool {
        let (ia, ib) = (iv_scores[a], iv_scores[b]);
        ia > ib || (ia == ib && a < b)
    };

    let clique_winner: Vec<&String> = cliques
        .iter()
        .map(|c| {
            c.iter()
                .reduce(|best, f| if beats(f, best) { f } else { best })
                .expect("cliques are non-empty")
        })
        .collect();

    let mut winners: Vec<Winner> = Vec::new();
    let mut discarded: Vec<Discarded> = Vec::new();
    let mut seen: HashSet<&str> = HashSet::new();
    let mut vertices: Vec<&String> = cliques.iter().flatten().collect();
    vertices.sort();
    vertices.dedup();

    for feature in vertices {
        if !seen.insert(feature.as_str()) {
            continue;
        }
        let iv = iv_scores[feature.as_str()];
        let is_winner_somewhere = clique_winner.contains(&feature);
        if !is_winner_somewhere {
            discarded.push(Discarded {
                feature: feature.clone(),
                iv,
                reason: DiscardReason::CliqueLoser,
            });
            continue;
        }
        let dominated = cliques
            .iter()
            .zip(&clique_winner)
            .any(|(c, w)| c.contains(feature) && *w != feature && beats(w, feature));
        if dominated {
            discarded.push(Discarded {
                feature: feature.clone(),
                iv,
                reason: DiscardReason::MultiCliqueDominated,
            });
        } else if iv < iv_floor {
            discarded.push(Discarded {
                feature: feature.clone(),
                iv,
                reason: DiscardReason::LowIv,
            });
        } else {
            winners.push(Winner {
                feature: feature.clone(),
                iv,
            });
        }
    }

    winners.sort_by(|a, b| {
        b.iv.partial_cmp(&a.iv)
            .unwrap()
            .then_with(|| a.feature.cmp(&b.feature))
    });
    discarded.sort_by(|a, b| a.feature.cmp(&b.feature));

    Ok(CliqueReport {
        cliques: cliques.to_vec(),
        winners,
        discarded,
        iv_floor,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph_from_edges(n: usize, edges: &[(usize, usize)]) -> CorrelationGraph {
        let names: Vec<String> = (0..n).map(|i| format!("f{i:02}")).collect();
        CorrelationGraph {
            vertices: names.clone(),
            threshold: 0.5,
            signed: false,
            edges: edges
                .iter()
                .map(|&(i, j)| CorrelationEdge {
                    a: names[i].clone(),
                    b: names[j].clone(),
                    correlation: 0.9,
                })
                .collect(),
        }
    }

    fn scores(pairs: &[(&str, f64)]) -> HashMap<String, f64> {
        pairs.iter().map(|&(k, v)| (k.to_string(), v)).collect()
    }

    #[test]
    fn correlation_self_and_antisymmetry() {
        let x: Vec<f64> = (0..50).map(|i| i as f64 * 0.3 - 4.0).collect();
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        let names = vec!["x".to_string(), "neg".to_string()];
        let m = correlation_matrix(&[x, neg], &names).unwrap();
        assert_eq!(m[0][0], 1.0);
        assert!((m[0][1] + 1.0).abs() < 1e-12);
        assert_eq!(m[0][1], m[1][0]);
    }

    #[test]
    fn correlation_hand_computed_three_columns() {
        let a = vec![1.0, 2.0, 3.0, 4.0];
        let b = vec![2.0, 1.0, 4.0, 3.0];
        let c = vec![1.0, 1.0, 2.0, 4.0];
        let names: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let m = correlation_matrix(&[a, b, c], &names).unwrap();
        // by hand: corr(a,b) = 3/5, corr(a,c) = 5/sqrt(30), corr(b,c) = 3/sqrt(30)
        assert!((m[0][1] - 0.6).abs() < 1e-9);
        assert!((m[0][2] - 0.9128709291752769).abs() < 1e-9);
        assert!((m[1][2] - 0.5477225575051661).abs() < 1e-9);
    }

    #[test]
    fn correlation_rejects_constant_column() {
        let names = vec!["a".to_string(), "flat".to_string()];
        let result = correlation_matrix(&[vec![1.0, 2.0], vec![3.0, 3.0]], &names);
        match result {
            Err(Error::ConstantColumn(name)) => assert_eq!(name, "flat"),
            other => panic!("expected ConstantColumn, got {other:?}"),
        }
    }

    #[test]
    fn build_graph_strict_threshold() {
        let names: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let matrix = vec![
            vec![1.0, 0.5, -0.7],
            vec![0.5, 1.0, 0.0],
            vec![-0.7, 0.0, 1.0],
        ];
        let g = build_graph(&matrix, &names, 0.5, false);
        // corr exactly 0.5 -> no edge; |-0.7| -> edge
        assert_eq!(g.edges.len(), 1);
        assert_eq!(g.edges[0].a, "a");
        assert_eq!(g.edges[0].b, "c");
        let signed = build_graph(&matrix, &names, 0.5, true);
        assert!(signed.edges.is_empty());
    }

    #[test]
    fn triangle_is_one_clique() {
        let g = graph_from_edges(3, &[(0, 1), (0, 2), (1, 2)]);
        let cliques = maximal_cliques(&g);
        assert_eq!(cliques, vec![vec!["f00", "f01", "f02"]]);
    }

    #[test]
    fn path_splits_into_two_cliques() {
        let g = graph_from_edges(3, &[(0, 1), (1, 2)]);
        let cliques = maximal_cliques(&g);
        assert_eq!(
            cliques,
            vec![vec!["f00", "f01"], vec!["f01", "f02"]]
        );
    }

    #[test]
    fn empty_graph_has_no_cliques() {
        let g = graph_from_edges(0, &[]);
        assert!(maximal_cliques(&g).is_empty());
    }

    #[test]
    fn isolated_vertices_are_singletons() {
        let g = graph_from_edges(4, &[(0, 1)]);
        let cliques = maximal_cliques(&g);
        assert_eq!(
            cliques,
            vec![vec!["f00", "f01"], vec!["f02"], vec!["f03"]]
        );
    }

    /// Brute-force enumeration over all vertex subsets.
    fn brute_force_cliques(g: &CorrelationGraph) -> Vec<Vec<String>> {
        let adj = g.adjacency();
        let n = g.vertices.len();
        let is_clique = |mask: u32| -> bool {
            for i in 0..n {
                if mask & (1 << i) == 0 {
                    continue;
                }
                for j in i + 1..n {
                    if mask & (1 << j) != 0 && !adj[i].contains(&j) {
                        return false;
                    }
                }
            }
            true
        };
        let mut out = Vec::new();
        for mask in 1u32..(1 << n) {
            if !is_clique(mask) {
                continue;
            }
            let maximal = (0..n).all(|v| {
                mask & (1 << v) != 0
                    || !(0..n).all(|u| mask & (1 << u) == 0 || adj[v].contains(&u))
            });
            if maximal {
                let mut names: Vec<String> = (0..n)
                    .filter(|i| mask & (1 << i) != 0)
                    .map(|i| g.vertices[i].clone())
                    .collect();
                names.sort();
                out.push(names);
            }
        }
        out.sort();
        out
    }

    #[test]
    fn random_graphs_match_brute_force() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        for _ in 0..50 {
            let n = rng.random_range(1..=9);
            let mut edges = Vec::new();
            for i in 0..n {
                for j in i + 1..n {
                    if rng.random_bool(0.4) {
                        edges.push((i, j));
                    }
                }
            }
            let g = graph_from_edges(n, &edges);
            assert_eq!(maximal_cliques(&g), brute_force_cliques(&g));
        }
    }

    #[test]
    fn winner_is_argmax_and_loser_recorded() {
        let cliques = vec![vec!["a".to_string(), "b".to_string()]];
        let report =
            select_representatives(&cliques, &scores(&[("a", 0.3), ("b", 0.2)]), 0.1).unwrap();
        assert_eq!(report.winners.len(), 1);
        assert_eq!(report.winners[0].feature, "a");
        assert_eq!(report.discarded.len(), 1);
        assert_eq!(report.discarded[0].feature, "b");
        assert_eq!(report.discarded[0].reason, DiscardReason::CliqueLoser);
    }

    #[test]
    fn multi_clique_domination_trace() {
        let cliques = vec![
            vec!["a".to_string(), "b".to_string()],
            vec!["b".to_string(), "c".to_string()],
        ];
        let report = select_representatives(
            &cliques,
            &scores(&[("a", 0.5), ("b", 0.4), ("c", 0.2)]),
            0.1,
        )
        .unwrap();
        let winner_names: Vec<&str> = report.winners.iter().map(|w| w.feature.as_str()).collect();
        assert_eq!(winner_names, vec!["a"]);
        let b = report.discarded.iter().find(|d| d.feature == "b").unwrap();
        assert_eq!(b.reason, DiscardReason::MultiCliqueDominated);
        let c = report.discarded.iter().find(|d| d.feature == "c").unwrap();
        assert_eq!(c.reason, DiscardReason::CliqueLoser);
    }

    #[test]
    fn low_iv_winner_discarded() {
        let cliques = vec![vec!["a".to_string()]];
        let report = select_representatives(&cliques, &scores(&[("a", 0.09)]), 0.1).unwrap();
        assert!(report.winners.is_empty());
        assert_eq!(report.discarded[0].reason, DiscardReason::LowIv);
    }

    #[test]
    fn empty_clique_list_gives_empty_report() {
        let report = select_representatives(&[], &HashMap::new(), 0.1).unwrap();
        assert!(report.cliques.is_empty());
        assert!(report.winners.is_empty());
        assert!(report.discarded.is_empty());
    }

    #[test]
    fn iv_scaling_leaves_winners_unchanged() {
        let cliques = vec![
            vec!["a".to_string(), "b".to_string()],
            vec!["b".to_string(), "c".to_string()],
            vec!["d".to_string()],
        ];
        let base = scores(&[("a", 0.5), ("b", 0.4), ("c", 0.45), ("d", 0.3)]);
        let scaled: HashMap<String, f64> =
            base.iter().map(|(k, v)| (k.clone(), v * 7.5)).collect();
        let w1: Vec<String> = select_representatives(&cliques, &base, 0.0)
            .unwrap()
            .winners
            .into_iter()
            .map(|w| w.feature)
            .collect();
        let w2: Vec<String> = select_representatives(&cliques, &scaled, 0.0)
            .unwrap()
            .winners
            .into_iter()
            .map(|w| w.feature)
            .collect();
        assert_eq!(w1, w2);
    }

    #[test]
    fn every_vertex_accounted_once() {
        let cliques = vec![
            vec!["a".to_string(), "b".to_string(), "c".to_string()],
            vec!["c".to_string(), "d".to_string()],
            vec!["e".to_string()],
        ];
        let iv = scores(&[("a", 0.4), ("b", 0.3), ("c", 0.6), ("d", 0.2), ("e", 0.15)]);
        let report = select_representatives(&cliques, &iv, 0.1).unwrap();
        let mut all: Vec<&str> = report
            .winners
            .iter()
            .map(|w| w.feature.as_str())
            .chain(report.discarded.iter().map(|d| d.feature.as_str()))
            .collect();
        all.sort();
        assert_eq!(all, vec!["a", "b", "c", "d", "e"]);
    }

    #[test]
    fn tied_winners_sharing_a_clique_resolve_by_name() {
        // a wins {a,b}; b would win {b,c} with IV tying a's -> dominated by name order
        let cliques = vec![
            vec!["a".to_string(), "b".to_string()],
            vec!["b".to_string(), "c".to_string()],
        ];
        let iv = scores(&[("a", 0.4), ("b", 0.4), ("c", 0.1)]);
        let report = select_representatives(&cliques, &iv, 0.0).unwrap();
        let winner_names: Vec<&str> = report.winners.iter().map(|w| w.feature.as_str()).collect();
        assert_eq!(winner_names, vec!["a"]);
        // no two final winners share a clique
        for c in &report.cliques {
            let in_clique = winner_names.iter().filter(|w| c.contains(&w.to_string())).count();
            assert!(in_clique <= 1);
        }
    }

    #[test]
    fn determinism_of_report() {
        let cliques = vec![
            vec!["a".to_string(), "b".to_string()],
            vec!["b".to_string(), "c".to_string()],
        ];
        let iv = scores(&[("a", 0.5), ("b", 0.4), ("c", 0.2)]);
        let r1 = select_representatives(&cliques, &iv, 0.1).unwrap();
        let r2 = select_representatives(&cliques, &iv, 0.1).unwrap();
        assert_eq!(serde_json::to_string(&r1).unwrap(), serde_json::to_string(&r2).unwrap());
    }

    #[test]
    fn dot_output_contains_vertices_and_edges() {
        let g = graph_from_edges(2, &[(0, 1)]);
        let dot = g.to_dot();
        assert!(dot.contains("\"f00\" -- \"f01\""));
        assert!(dot.starts_with("graph correlation {"));
    }
}
