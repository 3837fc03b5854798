use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vesselrbf::model::*;
use vesselrbf::numerics::Array;

fn variants() -> Vec<ModelConfig> {
    let mut out = Vec::new();
    for kernel in [KernelKind::Anisotropic, KernelKind::Isotropic] {
        for sharing in [Sharing::Separate, Sharing::Shared] {
            for positivity in [Positivity::Squared, Positivity::Softplus] {
                out.push(ModelConfig { kernel, sharing, positivity, m: 1, ..ModelConfig::desk() });
            }
        }
    }
    out
}

fn leading_minors(p: &[[f64; 3]; 3]) -> [f64; 3] {
    let m1 = p[0][0];
    let m2 = p[0][0] * p[1][1] - p[0][1] * p[1][0];
    let m3 = p[0][0] * (p[1][1] * p[2][2] - p[1][2] * p[2][1]) - p[0][1] * (p[1][0] * p[2][2] - p[1][2] * p[2][0])
        + p[0][2] * (p[1][0] * p[2][1] - p[1][1] * p[2][0]);
    [m1, m2, m3]
}

fn raw_row(cfg: &ModelConfig, values: &[f64]) -> Array<f64> {
    Array::new(vec![1, cfg.head_width()], values[..cfg.head_width()].to_vec()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1250))]

    // 1250 cases × 8 variants = 10⁴ decoded kernels.
    #[test]
    fn decoded_precisions_are_spd_and_phi_is_bounded(
        raw in prop::collection::vec(-2.0f64..2.0, 14),
        center in prop::array::uniform3(0.0f64..1.0),
        dir in prop::array::uniform3(-1.0f64..1.0),
        dist in 1e-3f64..0.3,
    ) {
        let norm = (dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]).sqrt();
        prop_assume!(norm > 1e-3);
        let c = Array::new(vec![1, 3], center.to_vec()).unwrap();
        for cfg in variants() {
            let set = decode_kernel_params(&raw_row(&cfg, &raw), &c, &cfg).unwrap();
            for f in 0..2 {
                let p = set.precision(0, f);
                for r in 0..3 {
                    for k in 0..3 {
                        prop_assert_eq!(p[r][k], p[k][r]);
                    }
                }
                let minors = leading_minors(&p);
                prop_assert!(minors.iter().all(|&v| v > 0.0), "{:?} {:?}", cfg.kernel, minors);
                prop_assert_eq!(set.phi(0, f, center), 1.0);
                let x = [0, 1, 2].map(|j| center[j] + dist * dir[j] / norm);
                let phi = set.phi(0, f, x);
                prop_assert!(phi > 0.0 && phi < 1.0, "phi {}", phi);
            }
        }
    }

    #[test]
    fn isotropic_equals_scaled_identity(
        s in -2.0f64..2.0,
        center in prop::array::uniform3(0.0f64..1.0),
        x in prop::array::uniform3(0.0f64..1.0),
    ) {
        for positivity in [Positivity::Squared, Positivity::Softplus] {
            let iso = ModelConfig { kernel: KernelKind::Isotropic, sharing: Sharing::Shared, positivity, m: 1, ..ModelConfig::desk() };
            let aniso = ModelConfig { kernel: KernelKind::Anisotropic, sharing: Sharing::Shared, ..iso.clone() };
            let c = Array::new(vec![1, 3], center.to_vec()).unwrap();
            let a = decode_kernel_params(&raw_row(&iso, &[0.5, 0.5, s]), &c, &iso).unwrap();
            let b = decode_kernel_params(&raw_row(&aniso, &[0.5, 0.5, s, 0.0, s, 0.0, 0.0, s]), &c, &aniso).unwrap();
            let (pa, pb) = (a.phi(0, 0, x), b.phi(0, 0, x));
            prop_assert!((pa - pb).abs() <= 1e-6 * pb.abs().max(f64::MIN_POSITIVE));
        }
    }
}

#[test]
fn paper_parameter_counts() {
    let small = count_params(&ModelConfig::paper(128)).total();
    let large = count_params(&ModelConfig::paper(1024)).total();
    assert_eq!(small, 2_816_270);
    assert_eq!(large, 3_045_646);
    assert_eq!(large - small, 896 * 256);
    assert!((small as f64 / 2.82e6 - 1.0).abs() < 0.02);
    assert!((large as f64 / 3.05e6 - 1.0).abs() < 0.02);
}

#[test]
fn head_widths_per_variant() {
    let w = |kernel, sharing| ModelConfig { kernel, sharing, ..ModelConfig::desk() }.head_width();
    assert_eq!(w(KernelKind::Anisotropic, Sharing::Separate), 14);
    assert_eq!(w(KernelKind::Anisotropic, Sharing::Shared), 8);
    assert_eq!(w(KernelKind::Isotropic, Sharing::Separate), 4);
    assert_eq!(w(KernelKind::Isotropic, Sharing::Shared), 3);
}

#[test]
fn every_variant_initializes_and_predicts() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for conditioning in [Conditioning::Film, Conditioning::Cls] {
        for base in variants() {
            let cfg = ModelConfig { conditioning, m: 8, ..base };
            let store = init_params::<f64, _>(&cfg, &mut rng).unwrap();
            assert_eq!(store.num_scalars(), count_params(&cfg).total());
            let centerline = Array::new(vec![8, 4], (0..32).map(|i| (i as f64 * 0.37).sin()).collect()).unwrap();
            let queries = Array::new(vec![5, 3], (0..15).map(|i| (i as f64 * 0.11).cos()).collect()).unwrap();
            let out = predict(&store, &cfg, &ModelInput { centerline, flow: 0.3, queries }).unwrap();
            assert_eq!(out.shape(), &[5, 2]);
            assert!(out.all_finite());
        }
    }
}

#[test]
fn config_serialization_round_trip() {
    let cfg =
        ModelConfig { conditioning: Conditioning::Cls, positivity: Positivity::Softplus, ..ModelConfig::paper(256) };
    let json = serde_json::to_string(&cfg).unwrap();
    assert!(json.contains("\"cls\"") && json.contains("\"softplus\""));
    assert_eq!(serde_json::from_str::<ModelConfig>(&json).unwrap(), cfg);
}
