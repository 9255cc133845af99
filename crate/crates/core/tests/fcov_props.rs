use proptest::prelude::*;
use verikit::fcov::{parse_coverage_db, percent, write_coverage_db, CoverageDb, Covergroup, Coverpoint, Fraction};
use verikit::Error;

/// `p` partitions [0, 99] at `cuts`; `q` has value bins on `marks`; `r` is a
/// two-bin boolean; crosses p×q and p×q×r.
fn model(cuts: &[i128], marks: &[i128]) -> Covergroup {
    let mut bounds: Vec<i128> = cuts.iter().copied().filter(|c| (1..100).contains(c)).collect();
    bounds.sort_unstable();
    bounds.dedup();
    let mut p = Coverpoint::new("p");
    let mut lo = 0;
    for (k, &b) in bounds.iter().chain(std::iter::once(&100)).enumerate() {
        p = p.range_bin(&format!("p{k}"), lo, b - 1);
        lo = b;
    }
    let mut q = Coverpoint::new("q");
    let mut seen = Vec::new();
    for &m in marks {
        if !seen.contains(&m) {
            seen.push(m);
            q = q.value_bin(&format!("q{m}"), m);
        }
    }
    q = q.set_bin("q_odd_small", &[1, 3, 5]);
    let mut g = Covergroup::new("g");
    g.add_coverpoint(p).unwrap();
    g.add_coverpoint(q).unwrap();
    g.add_coverpoint(Coverpoint::boolean("r")).unwrap();
    g.add_cross("pXq", &["p", "q"]).unwrap();
    g.add_cross("pXqXr", &["p", "q", "r"]).unwrap();
    g
}

type Log = Vec<(i128, i128, i128)>;

fn sample_all(g: &mut Covergroup, log: &[(i128, i128, i128)]) {
    for &(p, q, r) in log {
        g.sample(&[("p", p), ("q", q), ("r", r)]).unwrap();
    }
}

fn model_strategy() -> impl Strategy<Value = (Vec<i128>, Vec<i128>, Log)> {
    (
        prop::collection::vec(1i128..100, 0..6),
        prop::collection::vec(0i128..12, 1..6),
        prop::collection::vec((-5i128..105, 0i128..12, 0i128..3), 0..120),
    )
}

/// First matching bin, computed without the library's matcher.
fn first_match(cp: &Coverpoint, v: i128) -> Option<usize> {
    use verikit::fcov::BinMatcher;
    cp.bins.iter().position(|b| match &b.matcher {
        BinMatcher::Value(x) => *x == v,
        BinMatcher::Range(r) => r.lo <= v && v <= r.hi,
        BinMatcher::Set(s) => s.contains(&v),
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn recount_matches_incremental((cuts, marks, log) in model_strategy()) {
        let mut g = model(&cuts, &marks);
        sample_all(&mut g, &log);
        let fresh = model(&cuts, &marks);
        for (k, cp) in fresh.coverpoints.iter().enumerate() {
            let mut hits = vec![0u64; cp.bins.len()];
            for s in &log {
                let v = [s.0, s.1, s.2][k];
                if let Some(b) = first_match(cp, v) {
                    hits[b] += 1;
                }
            }
            let got: Vec<u64> = g.coverpoints[k].bins.iter().map(|b| b.hits).collect();
            prop_assert_eq!(got, hits);
        }
        let x = g.cross("pXq").unwrap();
        let (p, q) = (&fresh.coverpoints[0], &fresh.coverpoints[1]);
        let mut hits = vec![0u64; x.bin_count()];
        for s in &log {
            if let (Some(i), Some(j)) = (first_match(p, s.0), first_match(q, s.1)) {
                hits[i * q.bins.len() + j] += 1;
            }
        }
        prop_assert_eq!(&x.hits, &hits);
    }

    #[test]
    fn conservation_and_cross_consistency((cuts, marks, log) in model_strategy()) {
        let mut g = model(&cuts, &marks);
        sample_all(&mut g, &log);
        for cp in &g.coverpoints {
            prop_assert!(cp.bins.iter().map(|b| b.hits).sum::<u64>() <= log.len() as u64);
        }
        // p partitions [0, 99]
        let inside = log.iter().filter(|s| (0..100).contains(&s.0)).count() as u64;
        prop_assert_eq!(g.coverpoints[0].bins.iter().map(|b| b.hits).sum::<u64>(), inside);
        for x in &g.crosses {
            for flat in 0..x.bin_count() {
                let tuple = x.tuple_of(flat);
                let min_member = x
                    .members
                    .iter()
                    .zip(&tuple)
                    .map(|(m, &b)| g.coverpoint(m).unwrap().bins[b].hits)
                    .min()
                    .unwrap();
                prop_assert!(x.hits[flat] <= min_member);
                prop_assert_eq!(x.index_of(&tuple), flat);
            }
        }
    }

    #[test]
    fn coverage_is_monotone((cuts, marks, log) in model_strategy()) {
        let mut g = model(&cuts, &marks);
        let mut last = g.coverage();
        prop_assert_eq!(last, Fraction::from_integer(0));
        for &(p, q, r) in &log {
            g.sample(&[("p", p), ("q", q), ("r", r)]).unwrap();
            let now = g.coverage();
            prop_assert!(now >= last);
            prop_assert!(now <= Fraction::from_integer(1));
            last = now;
        }
    }

    #[test]
    fn xml_round_trip((cuts, marks, log) in model_strategy(), seed: u64, transactions: u64) {
        let mut g = model(&cuts, &marks);
        sample_all(&mut g, &log);
        let mut db = CoverageDb::new("t<&>\"", &seed.to_string(), transactions);
        db.groups.push(g);
        let text = write_coverage_db(&db);
        let back = parse_coverage_db(&text).unwrap();
        prop_assert_eq!(&back, &db);
        prop_assert_eq!(write_coverage_db(&back), text);
    }

    #[test]
    fn merge_equals_sampling_everything((cuts, marks, log) in model_strategy(), split in 0usize..120) {
        let split = split.min(log.len());
        let db = |part: &[(i128, i128, i128)], name: &str| {
            let mut g = model(&cuts, &marks);
            sample_all(&mut g, part);
            let mut d = CoverageDb::new(name, "1", part.len() as u64);
            d.groups.push(g);
            d
        };
        let (a, b) = (db(&log[..split], "a"), db(&log[split..], "b"));
        let whole = db(&log, "w");
        let ab = a.merge(&b).unwrap();
        let ba = b.merge(&a).unwrap();
        prop_assert_eq!(&ab.groups, &whole.groups);
        prop_assert_eq!(ab.coverage(), ba.coverage());
        prop_assert_eq!(ab.transactions, log.len() as u64);
        prop_assert_eq!(ab.test.as_str(), "a,b");
        prop_assert_eq!(&a.merge(&CoverageDb::default()).unwrap(), &a);
        prop_assert_eq!(&CoverageDb::default().merge(&a).unwrap(), &a);
    }
}

#[test]
fn merge_rejects_different_shapes() {
    let mut a = CoverageDb::new("a", "1", 0);
    a.groups.push(model(&[50], &[1]));
    let mut b = CoverageDb::new("b", "1", 0);
    b.groups.push(model(&[40], &[1]));
    assert!(matches!(a.merge(&b), Err(Error::ShapeMismatch(_))));
}

#[test]
fn disjoint_groups_are_unioned() {
    let mut a = CoverageDb::new("a", "1", 1);
    a.groups.push(Covergroup::new("x"));
    let mut g = Covergroup::new("y");
    g.add_coverpoint(Coverpoint::boolean("v")).unwrap();
    g.sample(&[("v", 1)]).unwrap();
    let mut b = CoverageDb::new("b", "2", 1);
    b.groups.push(g);
    let m = a.merge(&b).unwrap();
    assert_eq!(m.groups.len(), 2);
    assert_eq!(m.seed, "1,2");
    assert_eq!(percent(m.group("y").unwrap().coverage()), 50.0);
}

#[test]
fn file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cov.xml");
    let mut g = model(&[10, 20], &[3]);
    sample_all(&mut g, &[(5, 3, 1), (15, 3, 0)]);
    let mut db = CoverageDb::new("t", "9", 2);
    db.groups.push(g);
    std::fs::write(&path, write_coverage_db(&db)).unwrap();
    assert_eq!(verikit::fcov::read_coverage_db(&path).unwrap(), db);
    assert!(verikit::fcov::read_coverage_db(&dir.path().join("missing.xml")).is_err());
}
