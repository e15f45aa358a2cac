use chebyshev_race::constructions::{build_u_dense_family, moderacy_report, multiquadratic_tower, Caps};
use chebyshev_race::density::{delta_r_way, delta_three_way, delta_two_way};
use chebyshev_race::exec::Exec;
use chebyshev_race::field::{FieldModel, FieldSpec};
use chebyshev_race::gaussian::{mvn_cdf, MvnOptions};
use chebyshev_race::group::GroupElement;
use chebyshev_race::race::{gamma_matrix, RaceSpec};
use chebyshev_race::simulator::{empirical_delta, sample_mu, SimConfig};
use chebyshev_race::zeros::{Provenance, Tail, ZeroArchive, ZeroSumMode};
use proptest::prelude::*;

const PRIMES: [u64; 6] = [5, 13, 17, 29, 37, 41];

fn field(mask: u8) -> FieldModel {
    let ps: Vec<u64> = PRIMES
        .iter()
        .enumerate()
        .filter(|(i, _)| mask & (1 << i) != 0)
        .map(|(_, &p)| p)
        .collect();
    FieldModel::multiquadratic_u64(&ps).unwrap()
}

#[test]
fn archive_round_trip_and_zero_data_race() {
    let f = FieldModel::multiquadratic_u64(&[5, 13]).unwrap();
    let archive = ZeroArchive::compute(&f, 40.0, Exec::Parallel).unwrap();
    assert_eq!(archive.provenance(), Provenance::Computed);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("z.txt");
    archive.write(&path).unwrap();
    let back = ZeroArchive::ingest(&path, &f).unwrap();
    assert_eq!(back.provenance(), Provenance::Ingested);
    for l in archive.labels() {
        assert_eq!(archive.ordinates(l), back.ordinates(l));
    }
    // labels belong to the field: a cyclotomic model uses Conrey labels
    let other = FieldModel::cyclotomic_subgroup(5, &[1, 4]).unwrap();
    assert!(ZeroArchive::ingest(&path, &other).is_err());

    let classes: Vec<GroupElement> = f.group().elements().take(3).collect();
    let spec = RaceSpec::new(f.clone(), classes, ZeroSumMode::ZeroData { tail: Tail::None }, Some(&back)).unwrap();
    let samples = sample_mu(&spec, &back, &SimConfig::new(40.0, 200_000, 3)).unwrap();
    let (emp, se) = empirical_delta(&samples).unwrap();
    let gauss = delta_r_way(&spec, &MvnOptions::with_seed(3)).unwrap();
    // the truncated model has few zeros; the Gaussian is only close, not exact
    assert!((emp - gauss.value).abs() < 0.02 + 3.0 * se, "{emp} vs {}", gauss.value);
}

#[test]
fn field_spec_text_round_trip() {
    for text in [
        r#"{"type":"multiquadratic","primes":[5,13,17]}"#,
        r#"{"type":"cyclotomic","modulus":60,"subgroup":[1,49]}"#,
    ] {
        let spec = FieldSpec::parse(text).unwrap();
        let again = FieldSpec::parse(&spec.canonical()).unwrap();
        assert_eq!(spec.canonical(), again.canonical());
        let a = spec.build().unwrap();
        let b = again.build().unwrap();
        assert_eq!(a.fingerprint(), b.fingerprint());
    }
}

#[test]
fn u_dense_tower_reports() {
    let fam = build_u_dense_family(&[0.4, 0.7], &Caps::default()).unwrap();
    let tower = multiquadratic_tower(&fam.primes).unwrap();
    let reps = moderacy_report(&tower).unwrap();
    assert_eq!(reps.len(), fam.primes.len());
    for r in &reps {
        assert!(r.two_moderacy_index > 0.0 && r.uniform_criterion >= 0.0);
        assert!(r.u_range.iter().all(|&u| (0.0..=1.0).contains(&u)));
    }
    let last = reps.last().unwrap();
    assert!((last.max_abs_u() - fam.blocks[1].ratio).abs() < 1e-12);
}

#[test]
fn sequential_and_parallel_agree() {
    let opts = MvnOptions::with_seed(4);
    let x = [0.1, -0.2, 0.3, 0.0];
    let a = mvn_cdf(&x, &gamma_matrix(4), &MvnOptions { exec: Exec::Sequential, ..opts }).unwrap();
    let b = mvn_cdf(&x, &gamma_matrix(4), &MvnOptions { exec: Exec::Parallel, ..opts }).unwrap();
    assert_eq!(a, b);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn two_way_complement(mask in 1u8..64, i in 0usize..64, j in 0usize..64) {
        let f = field(mask);
        let n = f.group().order();
        let (a, b) = (f.group().element(i % n), f.group().element(j % n));
        prop_assume!(a != b);
        let ab = delta_two_way(&RaceSpec::asymptotic(f.clone(), vec![a.clone(), b.clone()]).unwrap()).unwrap();
        let ba = delta_two_way(&RaceSpec::asymptotic(f, vec![b, a]).unwrap()).unwrap();
        prop_assert!((ab.value + ba.value - 1.0).abs() < 1e-14);
    }

    #[test]
    fn u_is_nonpositive_and_bounded(mask in 1u8..64) {
        let f = field(mask);
        let els: Vec<GroupElement> = f.group().elements().collect();
        prop_assume!(els.len() >= 2);
        let spec = RaceSpec::asymptotic(f, els[..2].to_vec()).unwrap();
        for (_, u) in spec.u_map().unwrap() {
            prop_assert!((-1.0 - 1e-12..=1e-12).contains(&u));
        }
    }

    #[test]
    fn three_way_eigenvalue_guard(mask in 2u8..64, i in 0usize..64, j in 0usize..64, k in 0usize..64) {
        let f = field(mask);
        let n = f.group().order();
        let c: Vec<GroupElement> = [i, j, k].iter().map(|&x| f.group().element(x % n)).collect();
        prop_assume!(c[0] != c[1] && c[1] != c[2] && c[0] != c[2]);
        let d = delta_three_way(&RaceSpec::asymptotic(f, c).unwrap()).unwrap();
        prop_assert!(d.report.lambda_min >= 0.25 - 0.05);
        let g = d.gaussian_value.unwrap();
        prop_assert!((0.0..=1.0).contains(&g));
    }
}
