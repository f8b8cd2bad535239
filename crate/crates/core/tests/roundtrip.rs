mod common;

use cocompact::entropy::{cover_family, entropy_sequence, CoverFamilySpec, EntropySequence};
use cocompact::{FiniteCover, LogBase, PiecewiseAffineMap, Settings, Space};

use common::q;

#[test]
fn maps_survive_json() {
    for name in ["doubling", "identity", "tent", "abs"] {
        let f = PiecewiseAffineMap::preset(name).unwrap();
        let back: PiecewiseAffineMap = serde_json::from_str(&serde_json::to_string(&f).unwrap()).unwrap();
        assert_eq!(back, f);
        for x in [q(-7, 3), q(0, 1), q(1, 2), q(5, 8)] {
            assert_eq!(back.eval(&x), f.eval(&x));
        }
    }
}

#[test]
fn family_covers_survive_json() {
    for space in [Space::Line, Space::unit()] {
        for u in cover_family(&space, &CoverFamilySpec::default()).unwrap() {
            let back: FiniteCover = serde_json::from_str(&serde_json::to_string(&u).unwrap()).unwrap();
            assert_eq!(back, u);
        }
    }
}

#[test]
fn sequence_csv_matches_counts() {
    let f = PiecewiseAffineMap::tent();
    let seq = entropy_sequence(&f, &FiniteCover::tent_generating(), 6, &Settings::default()).unwrap();
    let mut buf = Vec::new();
    seq.write_csv(&mut buf).unwrap();
    let mut reader = csv::Reader::from_reader(buf.as_slice());
    let counts: Vec<u64> = reader.records().map(|r| r.unwrap()[1].parse().unwrap()).collect();
    assert_eq!(counts, vec![2, 4, 8, 16, 32, 64]);
    assert_eq!(counts, seq.counts());
}

#[test]
fn log_base_only_rescales() {
    let counts = [(3, true), (9, true), (20, true)];
    let e = EntropySequence::from_counts(&counts, LogBase::E);
    let two = EntropySequence::from_counts(&counts, LogBase::Two);
    for (a, b) in e.rows.iter().zip(&two.rows) {
        assert!((a.rate / 2f64.ln() - b.rate).abs() < 1e-12);
    }
}
