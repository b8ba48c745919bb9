use std::path::PathBuf;

use riskdyn::netstats::BlockMatrix;
use riskdyn::io::{self, load_params, read_catalog, read_graph, read_history, Dataset};
use riskdyn::rng::Stream;
use riskdyn::synth::{synth_dataset, SynthConfig};
use riskdyn::{Error, HistoricalSeries, ModelParams, TimeUnit};

fn sample_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/sample")
}

#[test]
fn sample_dataset_loads() {
    let d = Dataset::load_dir(sample_dir()).unwrap();
    assert_eq!(d.catalog.len(), 50);
    let h = d.history().unwrap();
    assert_eq!(h.len(), 156);
    assert_eq!(h.risk_count(), 50);
    assert!(d.graph.edge_count() > 0);
    let p = load_params(sample_dir().join("params.json")).unwrap();
    assert_eq!(p.time_unit(), Some(TimeUnit::Decade));
}

#[test]
fn sample_files_round_trip_byte_for_byte() {
    let d = Dataset::load_dir(sample_dir()).unwrap();
    let out = tempfile::tempdir().unwrap();
    d.save_dir(out.path()).unwrap();
    for f in [io::RISKS_FILE, io::EDGES_FILE, io::HISTORY_FILE] {
        let a = std::fs::read(sample_dir().join(f)).unwrap();
        let b = std::fs::read(out.path().join(f)).unwrap();
        assert!(a == b, "{f} differs after round trip");
    }
    let p = load_params(sample_dir().join("params.json")).unwrap();
    io::save_params(&p, out.path().join("params.json")).unwrap();
    assert_eq!(
        std::fs::read(sample_dir().join("params.json")).unwrap(),
        std::fs::read(out.path().join("params.json")).unwrap()
    );
}

#[test]
fn synth_is_reproducible_on_disk() {
    let cfg = SynthConfig {
        seed: 31,
        months: 48,
        ..Default::default()
    };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let fa = synth_dataset(&cfg).unwrap().save_dir(a.path()).unwrap();
    synth_dataset(&cfg).unwrap().save_dir(b.path()).unwrap();
    assert_eq!(fa.len(), 4);
    for f in fa {
        let name = f.file_name().unwrap();
        assert_eq!(std::fs::read(&f).unwrap(), std::fs::read(b.path().join(name)).unwrap());
    }
}

#[test]
fn month_gap_is_rejected_with_its_label() {
    let csv = "month,r1,r2\n2001-01,0,1\n2001-02,1,1\n2001-04,0,0\n";
    let err = read_history(csv.as_bytes(), "h.csv").unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("2001-04") && msg.contains("2001-02"), "{msg}");
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn malformed_rows_name_file_and_line() {
    let bad_cell = "month,r1,r2\n2001-01,0,1\n2001-02,2,1\n";
    let err = read_history(bad_cell.as_bytes(), "h.csv").unwrap_err();
    assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
    assert!(err.to_string().starts_with("h.csv:3:"));
    let bad_month = "month,r1\n2001-13,0\n";
    assert!(read_history(bad_month.as_bytes(), "h.csv").is_err());
    let bad_header = "month,r2\n2001-01,0\n";
    assert!(read_history(bad_header.as_bytes(), "h.csv").is_err());

    let risks = "id,name,group,likelihood,stddev\n1,a,economic,5.5,0.1\n";
    assert_eq!(read_catalog(risks.as_bytes(), "r.csv").unwrap_err().exit_code(), 2);
    let risks = "id,name,group,likelihood,stddev\n1,a,weather,3,0.1\n";
    assert!(read_catalog(risks.as_bytes(), "r.csv").is_err());

    for edges in [
        "source,target,weight\n2,1,1\n",
        "source,target,weight\n1,1,1\n",
        "source,target,weight\n1,4,1\n",
        "source,target,weight\n1,2,0\n",
        "source,target,weight\n1,2,1\n1,2,1\n",
        "src,dst,weight\n1,2,1\n",
    ] {
        let e = read_graph(edges.as_bytes(), 3, "e.csv");
        assert!(e.is_err(), "{edges:?} accepted");
        assert_eq!(e.unwrap_err().exit_code(), 2);
    }
}

#[test]
fn mismatched_dimensions_are_rejected() {
    let d = Dataset::load_dir(sample_dir()).unwrap();
    let short = synth_dataset(&SynthConfig {
        months: 30,
        blocks: BlockMatrix::new(vec![3], vec![vec![0.5]]).unwrap(),
        ..Default::default()
    })
    .unwrap();
    let err = Dataset::new(d.catalog.clone(), d.graph.clone(), Some(short.history)).unwrap_err();
    assert!(err.to_string().contains("3 risk columns"), "{err}");
    assert!(Dataset::new(d.catalog, short.graph, None).is_err());
}

#[test]
fn params_files_are_strict() {
    let p = io::read_params(r#"{"alpha": 0.3, "beta": 0.1, "gamma": 400, "time_unit": "decade"}"#.as_bytes()).unwrap();
    assert_eq!(p, ModelParams::decade(0.3, 0.1, 400.0).unwrap());
    for bad in [
        r#"{"alpha": 0.3, "beta": 0.1, "gamma": 400}"#,
        r#"{"alpha": -0.3, "beta": 0.1, "gamma": 400, "time_unit": "decade"}"#,
        r#"{"alpha": 0.3, "beta": 0.1, "gamma": 400, "time_unit": "year"}"#,
        r#"{"alpha": 0.3, "beta": 0.1, "gamma": 400, "time_unit": "decade", "delta": 1}"#,
    ] {
        assert!(io::read_params(bad.as_bytes()).is_err(), "{bad}");
    }
}

/// Mean over both directions of every edge of the switch-on rate when the
/// neighbor was active minus the rate when it was not. Differencing
/// removes each risk's own base rate.
fn lagged_coactivation(h: &HistoricalSeries, edges: &[(usize, usize)]) -> f64 {
    let s = h.states();
    let mut total = 0.0;
    let mut used = 0usize;
    for &(a, b) in edges {
        for (src, dst) in [(a, b), (b, a)] {
            let (mut on, mut exposed) = ([0usize; 2], [0usize; 2]);
            for t in 1..s.len() {
                if s[t - 1].is_active(dst) {
                    continue;
                }
                let k = usize::from(s[t - 1].is_active(src));
                exposed[k] += 1;
                on[k] += usize::from(s[t].is_active(dst));
            }
            if exposed[0] > 0 && exposed[1] > 0 {
                total += on[1] as f64 / exposed[1] as f64 - on[0] as f64 / exposed[0] as f64;
                used += 1;
            }
        }
    }
    total / used.max(1) as f64
}

/// One-sided permutation p-value of the observed edge set against random
/// edge sets of the same size.
fn edge_permutation_p(h: &HistoricalSeries, edges: &[(usize, usize)], n: usize, seed: u64) -> f64 {
    let observed = lagged_coactivation(h, edges);
    let mut rng = Stream::new(seed, 0);
    let perms = 199;
    let mut at_least = 0;
    for _ in 0..perms {
        let mut pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
        for i in 0..edges.len() {
            let j = i + rng.index(pairs.len() - i);
            pairs.swap(i, j);
        }
        if lagged_coactivation(h, &pairs[..edges.len()]) >= observed {
            at_least += 1;
        }
    }
    (at_least + 1) as f64 / (perms + 1) as f64
}

#[test]
fn influence_leaves_a_trace_only_when_present() {
    // short memory and weak internal activation: many switch-on events,
    // most of them driven by neighbors when influence is on
    let run = |beta, seed| {
        let probs = (0..5).map(|a| (0..5).map(|b| if a == b { 0.3 } else { 0.05 }).collect()).collect();
        let cfg = SynthConfig {
            seed,
            months: 1200,
            blocks: BlockMatrix::new(vec![10; 5], probs).unwrap(),
            params: ModelParams::decade(0.3, beta, 30.0).unwrap(),
            ..Default::default()
        };
        let d = synth_dataset(&cfg).unwrap();
        edge_permutation_p(&d.history, &d.graph.edges(), d.catalog.len(), 99)
    };
    for seed in 1..4 {
        let null = run(0.0, seed);
        let control = run(2.0, seed);
        assert!(null > 0.01, "seed {seed}: no influence, p = {null}");
        assert!(control <= 0.01, "seed {seed}: with influence, p = {control}");
    }
}
