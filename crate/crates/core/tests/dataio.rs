use std::collections::HashSet;
use std::path::Path;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vesselrbf::dataio::*;
use vesselrbf::model::{init_params, ModelConfig};
use vesselrbf::training::{compute_norm_stats, TrainConfig};

fn small_gen() -> GenerateConfig {
    GenerateConfig { stations: 32, per_ring: 4, ..GenerateConfig::default() }
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect();
    out.sort();
    out
}

#[test]
fn generated_case_round_trips_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    let case = generate_case(&GenerateConfig::default(), 7).unwrap();
    assert_eq!(case.num_surface(), 2048);
    let path = dir.path().join("a.cvf");
    write_case(&case, &path).unwrap();
    let back = read_case(&path).unwrap();
    assert_eq!(encode_case(&back).unwrap(), std::fs::read(&path).unwrap());
    let bits = |v: &[f32]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&back.pressure), bits(&case.pressure));
    assert_eq!(bits(&back.wss), bits(&case.wss));
    assert_eq!(back, case);
}

#[test]
fn corrupt_headers_are_rejected() {
    let case = generate_case(&small_gen(), 1).unwrap();
    let bytes = encode_case(&case).unwrap();

    let mut bad = bytes.clone();
    bad[0] ^= 0xff;
    assert!(matches!(decode_case(&bad), Err(DataError::Format(_))));

    let mut newer = bytes.clone();
    newer[4..6].copy_from_slice(&(CASE_VERSION + 1).to_le_bytes());
    assert!(matches!(
        decode_case(&newer),
        Err(DataError::UnsupportedVersion { found, expected }) if found == CASE_VERSION + 1 && expected == CASE_VERSION
    ));

    for cut in [3, 10, 40, bytes.len() / 2, bytes.len() - 1] {
        assert!(decode_case(&bytes[..cut]).is_err(), "truncated at {cut}");
    }
    let mut longer = bytes.clone();
    longer.push(0);
    assert!(matches!(decode_case(&longer), Err(DataError::SizeMismatch(_))));
}

#[test]
fn missing_file_reports_path() {
    let err = read_case(Path::new("/nonexistent/x.cvf")).unwrap_err();
    assert!(err.to_string().contains("/nonexistent/x.cvf"));
}

fn arb_case() -> impl Strategy<Value = Case> {
    (2usize..12, 0usize..40, any::<bool>()).prop_flat_map(|(m, n, kin)| {
        (
            prop::collection::vec(prop::array::uniform4(any::<f32>()), m),
            prop::collection::vec(prop::array::uniform3(any::<f32>()), n),
            prop::collection::vec(prop::array::uniform3(any::<f32>()), n),
            prop::collection::vec(any::<f32>(), n),
            prop::collection::vec(any::<f32>(), n),
            prop::collection::vec(0u32..m as u32, n),
            any::<f64>(),
            any::<f64>(),
            any::<f64>().prop_map(move |v| kin.then_some(v)),
        )
            .prop_map(|(centerline, surface, normals, pressure, wss, station, flow, pa, k)| Case {
                flow,
                inlet_pressure: pa,
                kinematic_inlet_pressure: k,
                centerline,
                surface,
                normals,
                pressure,
                wss,
                station,
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // Arbitrary bit patterns (NaN payloads included) survive the round trip.
    #[test]
    fn cvf_round_trip_is_bitwise(case in arb_case()) {
        let bytes = encode_case(&case).unwrap();
        let back = decode_case(&bytes).unwrap();
        prop_assert_eq!(encode_case(&back).unwrap(), bytes);
    }

    #[test]
    fn manifests_are_disjoint_and_exhaustive(n in 0usize..60, seed in any::<u64>(), a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let (a, b) = if a + b > 1.0 { (1.0 - a, 1.0 - b) } else { (a, b) };
        let paths: Vec<String> = (0..n).map(|i| format!("c{i}.cvf")).collect();
        let m = Manifest::from_paths("t", paths.clone(), SplitSpec::Fractions([a, b, 1.0 - a - b]), seed).unwrap();
        let c = m.counts();
        prop_assert_eq!(c.train + c.val + c.test, n);
        let all: HashSet<&str> = m.entries.iter().map(|e| e.path.as_str()).collect();
        prop_assert_eq!(all.len(), n);
        prop_assert_eq!(all, paths.iter().map(String::as_str).collect::<HashSet<_>>());
        let again = Manifest::from_paths("t", paths, SplitSpec::Fractions([a, b, 1.0 - a - b]), seed).unwrap();
        prop_assert_eq!(&again, &m);
        prop_assert_eq!(Manifest::from_jsonl(&m.to_jsonl().unwrap()).unwrap(), m);
    }
}

#[test]
fn split_counts() {
    let [tr, va, te] = SplitSpec::Fractions([0.857, 0.095, 0.048]).counts(4200).unwrap();
    assert_eq!(tr + va + te, 4200);
    assert!((tr as i64 - 3600).abs() <= 1 && (va as i64 - 400).abs() <= 1 && (te as i64 - 200).abs() <= 2);
    assert_eq!(SplitSpec::Counts([3600, 400, 200]).counts(4200).unwrap(), [3600, 400, 200]);
    assert!(SplitSpec::Counts([1, 1, 1]).counts(4).is_err());
    assert!(SplitSpec::Fractions([0.5, 0.5, 0.5]).counts(4).is_err());
}

#[test]
fn manifest_from_directory() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(
        build_manifest(dir.path(), "x", SplitSpec::Counts([0, 0, 0]), 1),
        Err(DataError::EmptyDirectory(_))
    ));
    for i in 0..5 {
        write_case(&generate_case(&small_gen(), i).unwrap(), &dir.path().join(format!("k{i}.cvf"))).unwrap();
    }
    std::fs::write(dir.path().join("notes.txt"), "ignored").unwrap();
    let m = build_manifest(dir.path(), "x", SplitSpec::Counts([3, 1, 1]), 9).unwrap();
    assert_eq!(m.entries.len(), 5);
    let path = dir.path().join("m.jsonl");
    m.save(&path).unwrap();
    assert_eq!(Manifest::load(&path).unwrap(), m);
    assert_eq!(load_split(&path, &m, Split::Train).unwrap().len(), 3);

    let tampered = std::fs::read_to_string(&path).unwrap().replace("\"split\":\"val\"", "\"split\":\"train\"");
    assert!(Manifest::from_jsonl(&tampered).is_err());
}

#[test]
fn generation_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let spec = SplitSpec::Fractions([0.8, 0.1, 0.1]);
    let ma = generate_dataset(a.path(), 10, &small_gen(), 1, spec).unwrap();
    let mb = generate_dataset(b.path(), 10, &small_gen(), 1, spec).unwrap();
    assert_eq!(ma, mb);
    assert_eq!(dir_bytes(a.path()), dir_bytes(b.path()));
    assert_eq!(dir_bytes(a.path()).len(), 11);

    let c = tempfile::tempdir().unwrap();
    generate_dataset(c.path(), 10, &small_gen(), 2, spec).unwrap();
    assert_ne!(dir_bytes(a.path()), dir_bytes(c.path()));
}

#[test]
fn empty_generation_writes_empty_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let m = generate_dataset(dir.path(), 0, &small_gen(), 1, SplitSpec::Fractions([0.8, 0.1, 0.1])).unwrap();
    assert!(m.entries.is_empty());
    let loaded = Manifest::load(&dir.path().join(MANIFEST_FILE)).unwrap();
    assert!(loaded.entries.is_empty());
}

#[test]
fn generated_cases_respect_ranges() {
    let cfg = GenerateConfig::default();
    for seed in 0..20 {
        let c = generate_case(&cfg, seed).unwrap();
        assert!((cfg.flow.0..=cfg.flow.1).contains(&c.flow));
        assert_eq!(c.centerline.len(), 128);
        assert!(c.pressure.iter().all(|&p| p > 0.0 && (p as f64) <= cfg.inlet_pressure));
        assert!(c.wss.iter().all(|&w| w > 0.0));
        // The stenosis tail narrows the inlet by at most
        // 0.7 * exp(-(12 mm)^2 / (2 * (4 mm)^2)) < 1 %.
        let r0 = c.centerline[0][3] as f64;
        assert!(r0 <= cfg.inlet_radius_mm + 1e-6 && r0 > 0.99 * cfg.inlet_radius_mm, "{r0}");
    }
}

fn checkpoint(m: usize) -> Checkpoint {
    let cases: Vec<Case> = (0..3).map(|i| generate_case(&small_gen(), i).unwrap()).collect();
    let refs: Vec<&Case> = cases.iter().collect();
    let model = ModelConfig { m, ..ModelConfig::desk() };
    Checkpoint {
        stats: compute_norm_stats(&refs).unwrap(),
        store: init_params(&model, &mut ChaCha8Rng::seed_from_u64(3)).unwrap(),
        model,
        epoch: 4,
        train: Some(TrainConfig::desk()),
        best_val_loss: Some(0.25),
        best_epoch: Some(3),
    }
}

#[test]
fn checkpoint_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.ckpt");
    let ckpt = checkpoint(16);
    save_checkpoint(&ckpt, &path).unwrap();
    let back = load_checkpoint(&path).unwrap();
    assert_eq!(back, ckpt);
    assert_eq!(encode_checkpoint(&back).unwrap(), std::fs::read(&path).unwrap());
    assert!(load_checkpoint_for(&path, &ckpt.model).is_ok());
}

#[test]
fn checkpoint_with_other_m_is_a_shape_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.ckpt");
    save_checkpoint(&checkpoint(16), &path).unwrap();
    let expected = ModelConfig { m: 32, ..ModelConfig::desk() };
    let err = load_checkpoint_for(&path, &expected).unwrap_err();
    assert!(matches!(err, DataError::Model(vesselrbf::model::ModelError::Shape(_))), "{err}");
}

#[test]
fn corrupt_checkpoints_are_rejected() {
    let bytes = encode_checkpoint(&checkpoint(8)).unwrap();
    let mut bad = bytes.clone();
    bad[1] = b'X';
    assert!(matches!(decode_checkpoint(&bad), Err(DataError::Format(_))));
    let mut newer = bytes.clone();
    newer[4..6].copy_from_slice(&(CHECKPOINT_VERSION + 1).to_le_bytes());
    assert!(matches!(decode_checkpoint(&newer), Err(DataError::UnsupportedVersion { .. })));
    assert!(decode_checkpoint(&bytes[..bytes.len() - 3]).is_err());
}
