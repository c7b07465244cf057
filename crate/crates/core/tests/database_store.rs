use dbmatch::process::{JointProcessSpec, ProcessModel, SeqRef};
use dbmatch::seed::rng_for;
use dbmatch::store::*;
use proptest::prelude::*;

fn iid(k1: usize, k2: usize, pmf: &[f64]) -> ProcessModel {
    ProcessModel::new(JointProcessSpec::IidDiscrete {
        alphabet_size_1: k1,
        alphabet_size_2: k2,
        joint_pmf: pmf.to_vec(),
    })
    .unwrap()
}

fn bsc(p: f64) -> ProcessModel {
    iid(2, 2, &[(1.0 - p) / 2.0, p / 2.0, p / 2.0, (1.0 - p) / 2.0])
}

fn opts() -> GenerateOptions {
    GenerateOptions {
        max_values: DEFAULT_MAX_VALUES,
        identity_theta1: false,
    }
}

/// Position of `member` in a labeled database.
fn position_of(db: &LabeledDatabase, member: usize) -> usize {
    db.theta().iter().position(|&t| t == member).unwrap()
}

fn symbols(s: SeqRef<'_>) -> &[u32] {
    match s {
        SeqRef::Symbols(v) => v,
        SeqRef::Reals(_) => panic!("expected symbols"),
    }
}

#[test]
fn single_member_pair_is_one_joint_draw() {
    let model = bsc(0.1);
    let pair = generate_correlated_pair(&model, 25, 1, 77, &opts()).unwrap();
    assert_eq!(pair.db1.theta(), &[0]);
    assert_eq!(pair.db2.theta(), &[0]);
    let (u1, u2) = model.sample_pair(25, &mut rng_for(77, "member", 0)).unwrap();
    assert_eq!(pair.db1.base().entry(0), u1.as_ref());
    assert_eq!(pair.db2.base().entry(0), u2.as_ref());
}

#[test]
fn point_mass_pair_is_all_zero() {
    let model = iid(2, 2, &[1.0, 0.0, 0.0, 0.0]);
    let pair = generate_correlated_pair(&model, 3, 5, 1, &opts()).unwrap();
    for db in [&pair.db1, &pair.db2] {
        assert_eq!(db.base().entries(), &Entries::Symbols(vec![0; 15]));
    }
}

#[test]
fn matching_entries_agree_at_the_crossover_rate() {
    let model = bsc(0.1);
    let pair = generate_correlated_pair(&model, 1000, 100, 4242, &opts()).unwrap();
    let mut agree = 0usize;
    for member in 0..100 {
        let a = symbols(pair.db1.base().entry(position_of(&pair.db1, member)));
        let b = symbols(pair.db2.base().entry(position_of(&pair.db2, member)));
        agree += a.iter().zip(b).filter(|(x, y)| x == y).count();
    }
    let rate = agree as f64 / 100_000.0;
    assert!((rate - 0.9).abs() <= 0.03, "agreement {rate}");
}

#[test]
fn matching_coordinates_follow_the_joint_pmf() {
    let pmf = [0.1, 0.2, 0.3, 0.0, 0.15, 0.25];
    let model = iid(3, 2, &pmf);
    let pair = generate_correlated_pair(&model, 1000, 1000, 5, &opts()).unwrap();
    let mut counts = [0usize; 6];
    for member in 0..1000 {
        let a = symbols(pair.db1.base().entry(position_of(&pair.db1, member)));
        let b = symbols(pair.db2.base().entry(position_of(&pair.db2, member)));
        for (&x, &y) in a.iter().zip(b) {
            counts[x as usize * 2 + y as usize] += 1;
        }
    }
    let tv: f64 = counts
        .iter()
        .zip(pmf)
        .map(|(&c, p)| (c as f64 / 1e6 - p).abs())
        .sum::<f64>()
        / 2.0;
    assert!(tv <= 0.01, "total variation {tv}");
}

#[test]
fn distinct_members_are_independent() {
    let model = bsc(0.1);
    let generations = 100_000u64;
    // (member 0 in DB1, member 1 in DB2) and (member 0, member 1 both in DB1)
    let mut cross = [0usize; 4];
    let mut within = [0usize; 4];
    for seed in 0..generations {
        let pair = generate_correlated_pair(&model, 1, 2, seed, &opts()).unwrap();
        let a = symbols(pair.db1.base().entry(position_of(&pair.db1, 0)))[0] as usize;
        let b = symbols(pair.db2.base().entry(position_of(&pair.db2, 1)))[0] as usize;
        let c = symbols(pair.db1.base().entry(position_of(&pair.db1, 1)))[0] as usize;
        cross[a * 2 + b] += 1;
        within[a * 2 + c] += 1;
    }
    for counts in [cross, within] {
        let total = generations as f64;
        let p: Vec<f64> = counts.iter().map(|&c| c as f64 / total).collect();
        let row = [p[0] + p[1], p[2] + p[3]];
        let col = [p[0] + p[2], p[1] + p[3]];
        let tv: f64 = (0..4).map(|k| (p[k] - row[k / 2] * col[k % 2]).abs()).sum::<f64>() / 2.0;
        assert!(tv <= 0.02, "joint {p:?} does not factorize (tv {tv})");
    }
}

#[test]
fn longer_entries_extend_without_resampling() {
    let model = ProcessModel::new(dbmatch::process::markov_coupled_flips([0.8, 0.05, 0.05, 0.1])).unwrap();
    let short = generate_correlated_pair(&model, 10, 20, 9, &opts()).unwrap();
    let long = generate_correlated_pair(&model, 30, 20, 9, &opts()).unwrap();
    assert_eq!(short.db1.theta(), long.db1.theta());
    assert_eq!(short.db2.theta(), long.db2.theta());
    for i in 0..20 {
        for (s, l) in [(&short.db1, &long.db1), (&short.db2, &long.db2)] {
            assert_eq!(symbols(s.base().entry(i)), &symbols(l.base().entry(i))[..10]);
        }
    }
}

#[test]
fn generation_ignores_thread_count() {
    let model = ProcessModel::new(JointProcessSpec::IidGaussian { rho: 0.7 }).unwrap();
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| generate_correlated_pair(&model, 50, 200, 31, &opts()).unwrap())
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn identity_theta1_option() {
    let model = bsc(0.1);
    let options = GenerateOptions {
        identity_theta1: true,
        ..opts()
    };
    let pair = generate_correlated_pair(&model, 5, 30, 2, &options).unwrap();
    assert_eq!(pair.db1.theta(), (0..30).collect::<Vec<_>>().as_slice());
}

#[test]
fn trivial_pair_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("one.dbmp");
    let pair = generate_correlated_pair(&bsc(0.1), 4, 1, 0, &opts()).unwrap();
    save_pair(&pair, &path).unwrap();
    assert_eq!(load_pair(&path).unwrap(), pair);
}

#[test]
fn gaussian_pair_round_trips_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.dbmp");
    let model = ProcessModel::new(JointProcessSpec::IidGaussian { rho: 0.123456789 }).unwrap();
    let pair = generate_correlated_pair(&model, 1000, 100, 8, &opts()).unwrap();
    save_pair(&pair, &path).unwrap();
    let back = load_pair(&path).unwrap();
    let (Entries::Reals(a), Entries::Reals(b)) = (pair.db2.base().entries(), back.db2.base().entries()) else {
        panic!("expected reals");
    };
    assert!(a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits()));
    assert_eq!(back, pair);

    let view = load_attacker_view(&path).unwrap();
    assert_eq!(&view.db1, &pair.db1);
    assert_eq!(&view.db2, pair.db2.base());
    assert_eq!(view.seed, 8);
}

#[test]
fn corrupted_checksum_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.dbmp");
    let pair = generate_correlated_pair(&bsc(0.1), 16, 4, 0, &opts()).unwrap();
    save_pair(&pair, &path).unwrap();
    let mut bytes = std::fs::read(&path).unwrap();
    let last = bytes.len() - 5;
    bytes[last] ^= 0x40;
    std::fs::write(&path, &bytes).unwrap();
    assert!(matches!(load_pair(&path), Err(StoreError::ChecksumMismatch)));
    assert!(matches!(load_attacker_view(&path), Err(StoreError::ChecksumMismatch)));
    assert!(matches!(
        load_pair(dir.path().join("missing.dbmp")),
        Err(StoreError::Io { .. })
    ));
}

#[test]
fn csv_export_has_one_row_per_entry() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pair.csv");
    let pair = generate_correlated_pair(&bsc(0.1), 3, 4, 0, &opts()).unwrap();
    export_csv(&pair, &path, false).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 1 + 8);
    assert_eq!(lines[0], "database,position,label,v0,v1,v2");
    assert!(lines[5].starts_with("2,0,,"), "{}", lines[5]);
    assert!(lines[1].starts_with(&format!("1,0,{},", pair.db1.theta()[0])));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn generated_labelings_are_permutations(n in 1usize..200, m in 1usize..8, seed in any::<u64>()) {
        let pair = generate_correlated_pair(&bsc(0.2), m, n, seed, &opts()).unwrap();
        for db in [&pair.db1, &pair.db2] {
            let mut sorted = db.theta().to_vec();
            sorted.sort_unstable();
            prop_assert_eq!(sorted, (0..n).collect::<Vec<_>>());
        }
        prop_assert!(pair.validate().is_ok());
    }
}
