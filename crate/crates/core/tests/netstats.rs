use riskdyn::netstats::{
    contagion_potential, degree_stats, estimate_block_probabilities, pairwise_infection_probability,
    sbm_generate, BlockMatrix, PairConvention,
};
use riskdyn::{derive_rates, InfluenceGraph, ModelParams, RiskCatalog, RiskGroup, RiskRecord};

type M4 = [[f64; 4]; 4];

fn mul(a: &M4, b: &M4) -> M4 {
    let mut c = [[0.0; 4]; 4];
    for i in 0..4 {
        for k in 0..4 {
            for j in 0..4 {
                c[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    c
}

/// States: 0 = source active, target not yet hit; 1 = source inactive,
/// target not hit (absorbing, no internal activation); 2 and 3 = target hit.
fn absorption(q: f64, e: f64) -> f64 {
    let mut m: M4 = [
        [q * (1.0 - e), (1.0 - q) * (1.0 - e), q * e, (1.0 - q) * e],
        [0.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
    ];
    for _ in 0..10 {
        m = mul(&m, &m);
    }
    m[0][2] + m[0][3]
}

#[test]
fn pair_probability_matches_absorbing_chain() {
    for &q in &[0.0, 0.1, 0.5, 0.8, 0.95] {
        for &e in &[0.0, 0.01, 0.2, 0.7, 1.0] {
            let exact = absorption(q, e);
            let sync = pairwise_infection_probability(q, e, PairConvention::Synchronous).unwrap();
            assert!((sync - exact).abs() <= 1e-12, "q={q} e={e}: {sync} vs {exact}");
            let lagged = pairwise_infection_probability(q, e, PairConvention::Lagged).unwrap();
            assert!((lagged - q * sync).abs() <= 1e-15);
        }
    }
    assert!(pairwise_infection_probability(1.2, 0.1, PairConvention::Lagged).is_err());
}

fn catalog(n: usize) -> RiskCatalog {
    catalog_with(n, |i| 1.5 + (i % 7) as f64 * 0.5)
}

fn catalog_with(n: usize, likelihood: impl Fn(usize) -> f64) -> RiskCatalog {
    RiskCatalog::new(
        (0..n)
            .map(|i| RiskRecord {
                id: i + 1,
                name: format!("r{}", i + 1),
                group: RiskGroup::ALL[i % 5],
                likelihood: likelihood(i),
                stddev: 0.0,
            })
            .collect(),
    )
    .unwrap()
}

#[test]
fn contagion_grows_with_influence_and_memory() {
    let c = catalog(20);
    let g = sbm_generate(&BlockMatrix::new(vec![10, 10], vec![vec![0.5, 0.2], vec![0.2, 0.5]]).unwrap(), 4);
    let pot = |a, b, gm| contagion_potential(&derive_rates(&c, &g, &ModelParams::decade(a, b, gm).unwrap()).unwrap()).potential;
    let base = pot(0.3, 0.1, 300.0);
    let more_beta = pot(0.3, 0.2, 300.0);
    let more_gamma = pot(0.3, 0.1, 450.0);
    let other_alpha = pot(2.0, 0.1, 300.0);
    for i in 0..20 {
        assert!(more_beta[i] >= base[i]);
        assert!(more_gamma[i] >= base[i]);
        assert_eq!(other_alpha[i], base[i]);
        if g.degree(i) == 0 {
            assert_eq!(base[i], 0.0);
        }
    }
    assert_eq!(pot(0.3, 0.0, 300.0), vec![0.0; 20]);
}

#[test]
fn ranking_orders_by_potential() {
    // equal likelihoods, so only the topology separates the risks
    let c = catalog_with(15, |_| 3.0);
    let g = InfluenceGraph::from_edges(15, (1..15).map(|j| (0, j)).chain([(3, 4), (5, 6)])).unwrap();
    let r = contagion_potential(&derive_rates(&c, &g, &ModelParams::decade(0.4, 0.15, 400.0).unwrap()).unwrap());
    assert_eq!(r.ranking[0], 0, "hub first");
    assert_eq!(&r.ranking[1..5], &[3, 4, 5, 6]);
    assert!(r.ranking.windows(2).all(|w| r.potential[w[0]] >= r.potential[w[1]]));
    let ranks = r.ranks();
    for (pos, &i) in r.ranking.iter().enumerate() {
        assert_eq!(ranks[i], pos + 1);
    }
    for i in 0..15 {
        let q = derive_rates(&c, &g, &ModelParams::decade(0.4, 0.15, 400.0).unwrap()).unwrap().p_con()[i];
        assert!((r.potential[i] - q * r.potential_synchronous[i]).abs() < 1e-12);
    }
}

#[test]
fn block_counts_fall_in_binomial_bands() {
    let blocks = BlockMatrix::new(
        vec![10, 10, 10, 10, 10],
        (0..5).map(|a| (0..5).map(|b| if a == b { 0.6 } else { 0.38 }).collect()).collect(),
    )
    .unwrap();
    let labels = blocks.labels();
    let seeds = 100;
    let mut outside = vec![vec![0usize; 5]; 5];
    for seed in 0..seeds {
        let g = sbm_generate(&blocks, seed);
        let est = estimate_block_probabilities(&g, &labels).unwrap();
        for a in 0..5 {
            for b in a..5 {
                let p = blocks.probability(a, b).unwrap();
                let m = if a == b { 45.0 } else { 100.0 };
                let count = est.probability(a, b).unwrap() * m;
                let band = 2.576 * (m * p * (1.0 - p)).sqrt();
                if (count - m * p).abs() > band + 0.5 {
                    outside[a][b] += 1;
                }
            }
        }
    }
    // about one seed in a hundred is expected outside each band
    let worst = outside.iter().flatten().max().unwrap();
    assert!(*worst <= 6, "{outside:?}");
    let total: usize = outside.iter().flatten().sum();
    assert!(total <= 45, "{total} of 1500 outside");
}

#[test]
fn block_estimate_round_trips_exact_structure() {
    let blocks = BlockMatrix::new(vec![3, 4, 1], vec![vec![1.0, 0.0, 1.0], vec![0.0, 1.0, 0.0], vec![1.0, 0.0, 0.0]]).unwrap();
    let g = sbm_generate(&blocks, 77);
    assert_eq!(g.edge_count(), 3 + 6 + 3);
    let est = estimate_block_probabilities(&g, &blocks.labels()).unwrap();
    assert_eq!(est.sizes, vec![3, 4, 1]);
    assert_eq!(est.probability(0, 0), Some(1.0));
    assert_eq!(est.probability(0, 2), Some(1.0));
    assert_eq!(est.probability(1, 2), Some(0.0));
    assert_eq!(est.probability(2, 2), None);
    let d = degree_stats(&g, &blocks.labels());
    assert_eq!(d.edges, 12);
    assert!((d.mean_degree - 3.0).abs() < 1e-15);
    assert_eq!(d.group_mean_degree, vec![3.0, 3.0, 3.0]);
    assert!(estimate_block_probabilities(&g, &[0, 1]).is_err());
    assert!(BlockMatrix::new(vec![2, 2], vec![vec![0.1, 0.2], vec![0.3, 0.1]]).is_err());
}
