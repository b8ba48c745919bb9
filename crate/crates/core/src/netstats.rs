//! Network-level analytics: contagion potential, pairwise infection
//! probabilities, stochastic block models and degree statistics.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{DerivedRates, InfluenceGraph};
use crate::rng::{Stream, SBM_STREAM};

/// Which closed form to use for the chance that an active source with
/// continuation `q` eventually activates a neighbor it influences with
/// probability `e`, when nothing else is going on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PairConvention {
    /// `q e / (1 - q + q e)`: the source must survive a step before it can
    /// influence. This is the term summed in the contagion potential.
    Lagged,
    /// `e / (1 - q + q e)`: influence acts from the first step, as in the
    /// synchronous simulation.
    Synchronous,
}

impl FromStr for PairConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lagged" | "eq3" => Ok(PairConvention::Lagged),
            "synchronous" | "sync" => Ok(PairConvention::Synchronous),
            other => Err(Error::validation(format!("unknown convention '{other}'"))),
        }
    }
}

impl fmt::Display for PairConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PairConvention::Lagged => "lagged",
            PairConvention::Synchronous => "synchronous",
        })
    }
}

pub fn pairwise_infection_probability(q: f64, e: f64, convention: PairConvention) -> Result<f64> {
    if !(0.0..=1.0).contains(&q) || !(0.0..=1.0).contains(&e) {
        return Err(Error::validation(format!("(q, e) = ({q}, {e}) outside [0, 1]")));
    }
    Ok(pair_term(q, e, convention))
}

fn pair_term(q: f64, e: f64, convention: PairConvention) -> f64 {
    if e == 0.0 {
        return 0.0;
    }
    let synchronous = e / (1.0 - q + q * e);
    match convention {
        PairConvention::Synchronous => synchronous,
        PairConvention::Lagged => q * synchronous,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContagionReport {
    /// Contagion potential of every risk, 0-based.
    pub potential: Vec<f64>,
    /// Same sum with the synchronous pair term.
    pub potential_synchronous: Vec<f64>,
    /// Risk indices by decreasing potential (ties by index).
    pub ranking: Vec<usize>,
    /// Non-zero pair terms `(source, target, term)`.
    pub pairs: Vec<(usize, usize, f64)>,
}

impl ContagionReport {
    /// 1-based rank of each risk.
    pub fn ranks(&self) -> Vec<usize> {
        let mut ranks = vec![0; self.potential.len()];
        for (pos, &i) in self.ranking.iter().enumerate() {
            ranks[i] = pos + 1;
        }
        ranks
    }
}

/// Expected number of neighbors that risk `i` alone eventually activates,
/// `C_i = sum_j q_i e_ij / (1 - q_i + q_i e_ij)`.
pub fn contagion_potential(rates: &DerivedRates) -> ContagionReport {
    let n = rates.len();
    let g = rates.graph();
    let mut potential = vec![0.0; n];
    let mut potential_synchronous = vec![0.0; n];
    let mut pairs = Vec::new();
    for i in 0..n {
        let q = rates.p_con()[i];
        for &j in g.neighbors(i) {
            let e = rates.p_ext(i, j);
            let term = pair_term(q, e, PairConvention::Lagged);
            potential[i] += term;
            potential_synchronous[i] += pair_term(q, e, PairConvention::Synchronous);
            if term > 0.0 {
                pairs.push((i, j, term));
            }
        }
    }
    let mut ranking: Vec<usize> = (0..n).collect();
    ranking.sort_by(|&a, &b| potential[b].total_cmp(&potential[a]).then(a.cmp(&b)));
    ContagionReport {
        potential,
        potential_synchronous,
        ranking,
        pairs,
    }
}

/// Group sizes and symmetric block edge probabilities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockMatrix {
    pub sizes: Vec<usize>,
    /// `G x G`, symmetric. `None` where a density is undefined (a
    /// diagonal block of a group with fewer than two members).
    pub probabilities: Vec<Vec<Option<f64>>>,
}

impl BlockMatrix {
    pub fn new(sizes: Vec<usize>, probabilities: Vec<Vec<f64>>) -> Result<Self> {
        let g = sizes.len();
        if probabilities.len() != g || probabilities.iter().any(|r| r.len() != g) {
            return Err(Error::validation(format!("block matrix must be {g} x {g}")));
        }
        for a in 0..g {
            for b in 0..g {
                let p = probabilities[a][b];
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::validation(format!(
                        "block probability ({}, {}) = {p} outside [0, 1]",
                        a + 1,
                        b + 1
                    )));
                }
                if p != probabilities[b][a] {
                    return Err(Error::validation(format!(
                        "block matrix asymmetric at ({}, {})",
                        a + 1,
                        b + 1
                    )));
                }
            }
        }
        Ok(Self {
            sizes,
            probabilities: probabilities
                .into_iter()
                .map(|r| r.into_iter().map(Some).collect())
                .collect(),
        })
    }

    pub fn groups(&self) -> usize {
        self.sizes.len()
    }

    pub fn node_count(&self) -> usize {
        self.sizes.iter().sum()
    }

    /// Group index of each node, nodes numbered group by group.
    pub fn labels(&self) -> Vec<usize> {
        self.sizes
            .iter()
            .enumerate()
            .flat_map(|(g, &s)| std::iter::repeat_n(g, s))
            .collect()
    }

    pub fn probability(&self, a: usize, b: usize) -> Option<f64> {
        self.probabilities[a][b]
    }
}

/// Samples a graph where each unordered pair `(i, j)`, visited in
/// lexicographic order, is joined with its block probability.
pub fn sbm_generate(blocks: &BlockMatrix, seed: u64) -> InfluenceGraph {
    let labels = blocks.labels();
    let n = labels.len();
    let mut rng = Stream::new(seed, SBM_STREAM);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let p = blocks.probability(labels[i], labels[j]).unwrap_or(0.0);
            if rng.uniform() < p {
                edges.push((i, j));
            }
        }
    }
    InfluenceGraph::from_edges(n, edges).expect("generated edges are valid")
}

/// Empirical edge density of every block pair given node group labels
/// (`0..G`).
pub fn estimate_block_probabilities(graph: &InfluenceGraph, labels: &[usize]) -> Result<BlockMatrix> {
    let n = graph.node_count();
    if labels.len() != n {
        return Err(Error::validation(format!(
            "{} labels for {n} nodes",
            labels.len()
        )));
    }
    let g = labels.iter().max().map_or(0, |m| m + 1);
    let mut sizes = vec![0usize; g];
    for &l in labels {
        sizes[l] += 1;
    }
    let mut edges = vec![vec![0usize; g]; g];
    for (a, b) in graph.edges() {
        let (x, y) = (labels[a], labels[b]);
        edges[x][y] += 1;
        if x != y {
            edges[y][x] += 1;
        }
    }
    let probabilities = (0..g)
        .map(|x| {
            (0..g)
                .map(|y| {
                    let possible = if x == y {
                        sizes[x] * sizes[x].saturating_sub(1) / 2
                    } else {
                        sizes[x] * sizes[y]
                    };
                    (possible > 0).then(|| edges[x][y] as f64 / possible as f64)
                })
                .collect()
        })
        .collect();
    Ok(BlockMatrix {
        sizes,
        probabilities,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegreeStats {
    pub edges: usize,
    pub mean_degree: f64,
    /// Mean degree of the members of each group.
    pub group_mean_degree: Vec<f64>,
}

/// Edge count, mean degree `2E / N`, and mean degree per group label.
pub fn degree_stats(graph: &InfluenceGraph, labels: &[usize]) -> DegreeStats {
    let n = graph.node_count();
    let edges = graph.edge_count();
    let g = labels.iter().max().map_or(0, |m| m + 1);
    let mut sum = vec![0usize; g];
    let mut count = vec![0usize; g];
    for (i, &l) in labels.iter().enumerate().take(n) {
        sum[l] += graph.degree(i);
        count[l] += 1;
    }
    DegreeStats {
        edges,
        mean_degree: if n == 0 { 0.0 } else { 2.0 * edges as f64 / n as f64 },
        group_mean_degree: sum
            .iter()
            .zip(&count)
            .map(|(&s, &c)| if c == 0 { 0.0 } else { s as f64 / c as f64 })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair_rates(q: f64, e: f64) -> DerivedRates {
        DerivedRates::from_parts(
            vec![0.0, 0.0],
            vec![q, q],
            vec![e, e],
            InfluenceGraph::from_edges(2, [(0, 1)]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn potential_examples() {
        let c = contagion_potential(&pair_rates(0.5, 0.5));
        assert!((c.potential[0] - 1.0 / 3.0).abs() < 1e-15);

        let zero_beta = pair_rates(0.9, 0.0);
        assert!(contagion_potential(&zero_beta).potential.iter().all(|&x| x == 0.0));

        let star = DerivedRates::from_parts(
            vec![0.0; 4],
            vec![1.0, 0.5, 0.5, 0.5],
            vec![0.2; 4],
            InfluenceGraph::from_edges(4, [(0, 1), (0, 2), (0, 3)]).unwrap(),
        )
        .unwrap();
        let c = contagion_potential(&star);
        assert!((c.potential[0] - 3.0).abs() < 1e-12);
        assert_eq!(c.ranking[0], 0);
        assert_eq!(c.ranks()[0], 1);
    }

    #[test]
    fn isolated_or_dying_risk_has_no_potential() {
        let r = DerivedRates::from_parts(
            vec![0.0; 3],
            vec![0.0, 0.8, 0.8],
            vec![0.5; 3],
            InfluenceGraph::from_edges(3, [(0, 1)]).unwrap(),
        )
        .unwrap();
        let c = contagion_potential(&r);
        assert_eq!(c.potential[0], 0.0);
        assert_eq!(c.potential[2], 0.0);
        assert!(c.potential[1] > 0.0);
    }

    #[test]
    fn pairwise_examples() {
        use PairConvention::*;
        assert!((pairwise_infection_probability(0.0, 0.4, Synchronous).unwrap() - 0.4).abs() < 1e-15);
        assert_eq!(pairwise_infection_probability(0.0, 0.4, Lagged).unwrap(), 0.0);
        assert!((pairwise_infection_probability(0.5, 0.5, Synchronous).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(pairwise_infection_probability(1.0, 0.0, Synchronous).unwrap(), 0.0);
        assert!(pairwise_infection_probability(1.1, 0.5, Lagged).is_err());
    }

    #[test]
    fn sbm_extremes() {
        let b0 = BlockMatrix::new(vec![3, 4], vec![vec![0.0; 2]; 2]).unwrap();
        assert_eq!(sbm_generate(&b0, 1).edge_count(), 0);
        let b1 = BlockMatrix::new(vec![3, 4], vec![vec![1.0; 2]; 2]).unwrap();
        assert_eq!(sbm_generate(&b1, 1).edge_count(), 21);
        let b = BlockMatrix::new(vec![5, 5], vec![vec![0.5, 0.2], vec![0.2, 0.7]]).unwrap();
        assert_eq!(sbm_generate(&b, 9), sbm_generate(&b, 9));
    }

    #[test]
    fn block_estimates_on_extremes() {
        let labels = vec![0, 0, 1, 1, 1, 2];
        let full = estimate_block_probabilities(&InfluenceGraph::complete(6), &labels).unwrap();
        let empty = estimate_block_probabilities(&InfluenceGraph::empty(6), &labels).unwrap();
        for x in 0..3 {
            for y in 0..3 {
                if x == 2 && y == 2 {
                    assert_eq!(full.probability(x, y), None);
                    continue;
                }
                assert_eq!(full.probability(x, y), Some(1.0));
                assert_eq!(empty.probability(x, y), Some(0.0));
            }
        }
        assert!(estimate_block_probabilities(&InfluenceGraph::empty(3), &[0, 1]).is_err());
    }

    #[test]
    fn degree_examples() {
        let labels = vec![0; 50];
        let d = degree_stats(&InfluenceGraph::empty(50), &labels);
        assert_eq!((d.edges, d.mean_degree), (0, 0.0));
        let d = degree_stats(&InfluenceGraph::complete(50), &labels);
        assert_eq!((d.edges, d.mean_degree), (1225, 49.0));
        assert_eq!(d.group_mean_degree, vec![49.0]);
    }

    #[test]
    fn block_matrix_validation() {
        assert!(BlockMatrix::new(vec![2, 2], vec![vec![0.1, 0.2], vec![0.3, 0.1]]).is_err());
        assert!(BlockMatrix::new(vec![2, 2], vec![vec![0.1, 1.2], vec![1.2, 0.1]]).is_err());
        assert!(BlockMatrix::new(vec![2], vec![vec![0.1, 0.2]]).is_err());
    }
}
