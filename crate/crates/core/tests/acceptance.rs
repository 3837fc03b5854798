//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`) so the report is always
//! printed. Exits non-zero if any criterion fails.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vesselrbf::dataio::{
    decode_case, decode_checkpoint, encode_case, encode_checkpoint, generate_dataset, load_split, Checkpoint,
    GenerateConfig, Manifest, Split, SplitSpec, MANIFEST_FILE,
};
use vesselrbf::flopbench::{count_flops, sweep_queries, FlopConvention};
use vesselrbf::geometry::{Centerline, CenterlinePoint, VesselTree};
use vesselrbf::lowfi::{poiseuille_pressure, split_flows, FluidProps};
use vesselrbf::metrics::{bland_altman, classify_ffr, ffr_field, rel_l2, BLOOD_DENSITY};
use vesselrbf::model::{
    count_params, decode_kernel_params, gradient_check, init_params, lower, Conditioning, KernelKind, ModelConfig,
    ModelInput, Positivity, Sharing,
};
use vesselrbf::numerics::Array;
use vesselrbf::training::{evaluate_case, train, train_step, EpochRecord, TrainConfig, TrainData, TrainState};

// Tolerances.
const FLOP_REL_TOL: f64 = 0.15;
const FLOP_RUNTIME: Duration = Duration::from_secs(1);
const QUERY_VARIATION: f64 = 0.05;
const PARAM_REL_TOL: f64 = 0.02;
const GRAD_REL_ERR: f64 = 1e-4;
const GRAD_RUNTIME: Duration = Duration::from_secs(60);
const KERNEL_SAMPLES: usize = 10_000;
const ISO_REL_TOL: f64 = 1e-6;
const TUBE_REL_TOL: f64 = 1e-6;
const TAPER_REL_TOL: f64 = 5e-3;
const DESK_REL_L2: f64 = 0.15;
const OVERFIT_LOSS: f64 = 1e-3;
const OVERFIT_EPOCHS: usize = 500;
const OVERFIT_LR: f64 = 1e-2;
const DESK_RUNTIME: Duration = Duration::from_secs(30 * 60);
const ABLATION_EPOCHS: usize = 50;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn flop_reproduction() -> Outcome {
    let t = Instant::now();
    let cfg = ModelConfig::paper(128);
    let reference = [(128, 0.53), (256, 1.22), (512, 3.12), (1024, 8.93)];
    let mut ok = true;
    let mut parts = Vec::new();
    for (m, want) in reference {
        let got = count_flops(&cfg, m, 2048, &FlopConvention::default()).map_err(|e| e.to_string())?.gflops();
        let alt = count_flops(&cfg, m, 2048, &FlopConvention::mac_as_one()).map_err(|e| e.to_string())?.gflops();
        let rel = got / want - 1.0;
        ok &= rel.abs() <= FLOP_REL_TOL;
        parts.push(format!("M={m}: {got:.3} vs {want} ({:+.1}%; 1 FLOP/MAC: {alt:.3})", 100.0 * rel));
    }
    let elapsed = t.elapsed();
    ok &= elapsed < FLOP_RUNTIME;
    check(ok, format!("{} [{:?}]", parts.join("; "), elapsed))
}

fn query_invariance() -> Outcome {
    let t = Instant::now();
    let sweep = sweep_queries(&ModelConfig::paper(128), 128, &[256, 512, 1024, 2048], &FlopConvention::default())
        .map_err(|e| e.to_string())?;
    let totals: Vec<f64> = sweep.reports.iter().map(|r| r.gflops()).collect();
    let lo = totals.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = totals.iter().copied().fold(0.0, f64::max);
    let variation = hi / lo - 1.0;
    let elapsed = t.elapsed();
    check(
        variation < QUERY_VARIATION && elapsed < FLOP_RUNTIME,
        format!("GFLOPs {totals:.3?}, variation {:.2}% [{elapsed:?}]", 100.0 * variation),
    )
}

fn parameter_counts() -> Outcome {
    let small = count_params(&ModelConfig::paper(128)).total();
    let large = count_params(&ModelConfig::paper(1024)).total();
    let rs = small as f64 / 2.82e6 - 1.0;
    let rl = large as f64 / 3.05e6 - 1.0;
    let diff = large - small;
    check(
        rs.abs() <= PARAM_REL_TOL && rl.abs() <= PARAM_REL_TOL && diff == 896 * 256,
        format!(
            "M=128: {small} ({:+.2}%), M=1024: {large} ({:+.2}%), difference {diff} (896·256 = {})",
            100.0 * rs,
            100.0 * rl,
            896 * 256
        ),
    )
}

fn gradient_correctness() -> Outcome {
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    for conditioning in [Conditioning::Film, Conditioning::Cls] {
        let cfg = ModelConfig {
            m: 8,
            d: 16,
            layers: 2,
            ff_dim: 32,
            fourier_k: 2,
            cond_hidden: 16,
            conditioning,
            ..ModelConfig::desk()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let store = init_params::<f64, _>(&cfg, &mut rng).map_err(|e| e.to_string())?;
        let centerline = Array::new(vec![8, 4], (0..32).map(|_| rng.random_range(0.0..1.0)).collect()).unwrap();
        let queries = Array::new(vec![16, 3], (0..48).map(|_| rng.random_range(0.0..1.0)).collect()).unwrap();
        let input = ModelInput { centerline, flow: 0.3, queries };
        worst = worst.max(gradient_check(&store, &cfg, &input, 16).map_err(|e| e.to_string())?);
    }
    let elapsed = t.elapsed();
    check(
        worst < GRAD_REL_ERR && elapsed < GRAD_RUNTIME,
        format!("max relative error {worst:.2e} over FiLM and CLS models [{elapsed:.1?}]"),
    )
}

fn kernel_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let variants: Vec<ModelConfig> = [KernelKind::Anisotropic, KernelKind::Isotropic]
        .into_iter()
        .flat_map(|kernel| {
            [Sharing::Separate, Sharing::Shared].into_iter().flat_map(move |sharing| {
                [Positivity::Squared, Positivity::Softplus].into_iter().map(move |positivity| ModelConfig {
                    kernel,
                    sharing,
                    positivity,
                    m: 1,
                    ..ModelConfig::desk()
                })
            })
        })
        .collect();
    let mut failures = 0usize;
    let mut worst_iso: f64 = 0.0;
    for k in 0..KERNEL_SAMPLES {
        let cfg = &variants[k % variants.len()];
        let raw: Vec<f64> = (0..cfg.head_width()).map(|_| rng.random_range(-3.0..3.0)).collect();
        let center: Vec<f64> = (0..3).map(|_| rng.random_range(0.0..1.0)).collect();
        let c = Array::new(vec![1, 3], center.clone()).unwrap();
        let set = decode_kernel_params(&Array::new(vec![1, raw.len()], raw.clone()).unwrap(), &c, cfg)
            .map_err(|e| e.to_string())?;
        let x: [f64; 3] = std::array::from_fn(|j| center[j] + rng.random_range(-0.2..0.2));
        for f in 0..2 {
            let p = set.precision(0, f);
            // P = L Lᵀ with L lower-triangular and diag(L) > 0 is SPD. Leading
            // minors are not used: with diagonals near the positivity floor
            // P is too ill-conditioned for a cofactor determinant.
            let l = lower(&set.factors[0][f]);
            let triangular = (0..3).all(|r| (r + 1..3).all(|q| l[r][q] == 0.0));
            let positive_diag = (0..3).all(|j| l[j][j] > 0.0);
            let scale = p.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
            let factored = (0..3).all(|r| {
                (0..3).all(|q| {
                    let llt: f64 = (0..3).map(|j| l[r][j] * l[q][j]).sum();
                    (p[r][q] - llt).abs() <= 1e-12 * scale
                })
            });
            let symmetric = (0..3).all(|r| (0..3).all(|q| p[r][q] == p[q][r]));
            let at_center = set.phi(0, f, [center[0], center[1], center[2]]);
            let off = set.phi(0, f, x);
            let moved = x.iter().zip(&center).any(|(a, b)| a != b);
            let bounded = off > 0.0 && off <= 1.0 && (!moved || off < 1.0);
            if !(symmetric && triangular && positive_diag && factored && at_center == 1.0 && bounded) {
                failures += 1;
            }
        }
        if cfg.kernel == KernelKind::Isotropic && cfg.sharing == Sharing::Shared {
            let aniso = ModelConfig { kernel: KernelKind::Anisotropic, ..cfg.clone() };
            let s = raw[2];
            let as_full = [raw[0], raw[1], s, 0.0, s, 0.0, 0.0, s];
            let full = decode_kernel_params(&Array::new(vec![1, 8], as_full.to_vec()).unwrap(), &c, &aniso)
                .map_err(|e| e.to_string())?;
            let (a, b) = (set.phi(0, 0, x), full.phi(0, 0, x));
            worst_iso = worst_iso.max((a - b).abs() / b.abs().max(f64::MIN_POSITIVE));
        }
    }
    check(
        failures == 0 && worst_iso <= ISO_REL_TOL,
        format!(
            "{KERNEL_SAMPLES} decoded outputs, {failures} violations, isotropic-vs-σI max rel diff {worst_iso:.1e}"
        ),
    )
}

fn tube(n: usize, length: f64, r0: f64, r1: f64) -> Centerline {
    let points = (0..n)
        .map(|i| {
            let t = i as f64 / (n - 1) as f64;
            CenterlinePoint::new(0.0, 0.0, length * t, r0 + (r1 - r0) * t)
        })
        .collect();
    Centerline::new(points).unwrap()
}

fn poiseuille_oracle() -> Outcome {
    let fluid = FluidProps::default();
    let q = 1500.0;
    let (l, r) = (50.0, 2.0);
    let dp = *poiseuille_pressure(&tube(4096, l, r, r), q, &fluid).map_err(|e| e.to_string())?.last().unwrap();
    // mm → m: ΔP = 8 μ Q L / (π r⁴) with Q in m³/s, L and r in m.
    let exact = 8.0 * fluid.mu * (q * 1e-9) * (l * 1e-3) / (std::f64::consts::PI * (r * 1e-3f64).powi(4));
    let tube_err = (dp - exact).abs() / exact;

    let (r0, r1) = (2.0, 1.2);
    let dp = *poiseuille_pressure(&tube(256, l, r0, r1), q, &fluid).map_err(|e| e.to_string())?.last().unwrap();
    // ∫₀ᴸ r(s)⁻⁴ ds = L / (3 (r1 − r0)) (r0⁻³ − r1⁻³), in mm⁻³.
    let integral = l / (3.0 * (r1 - r0)) * (r0.powi(-3) - r1.powi(-3));
    let exact_taper = 8.0 * fluid.mu * (q * 1e-9) / std::f64::consts::PI * integral * 1e9;
    let taper_err = (dp - exact_taper).abs() / exact_taper;

    let seg = |z0: f64| {
        Centerline::new(vec![CenterlinePoint::new(0.0, 0.0, z0, 1.5), CenterlinePoint::new(0.0, 0.0, z0 + 10.0, 1.4)])
            .unwrap()
    };
    let tree = VesselTree::new(
        vec![seg(0.0), seg(10.0), seg(10.0), seg(20.0), seg(20.0), seg(20.0)],
        vec![None, Some(0), Some(0), Some(1), Some(1), Some(1)],
    )
    .map_err(|e| e.to_string())?;
    let flows = split_flows(&tree, 3000.0).map_err(|e| e.to_string())?;
    let conserved = (0..flows.len()).all(|id| {
        let children = tree.children(id);
        children.is_empty() || children.iter().map(|&c| flows[c]).sum::<f64>() == flows[id]
    });
    check(
        tube_err <= TUBE_REL_TOL && taper_err <= TAPER_REL_TOL && conserved,
        format!(
            "tube rel err {tube_err:.1e}, taper rel err {taper_err:.1e}, tree conservation {}",
            if conserved { "exact" } else { "violated" }
        ),
    )
}

struct DeskData {
    _dir: tempfile::TempDir,
    train: Vec<vesselrbf::dataio::Case>,
    val: Vec<vesselrbf::dataio::Case>,
    test: Vec<vesselrbf::dataio::Case>,
}

fn desk_data() -> Result<DeskData, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = TrainConfig::desk();
    generate_dataset(dir.path(), 200, &GenerateConfig::default(), cfg.seed, SplitSpec::Counts([160, 20, 20]))
        .map_err(|e| e.to_string())?;
    let path = dir.path().join(MANIFEST_FILE);
    let manifest = Manifest::load(&path).map_err(|e| e.to_string())?;
    let load = |s| load_split(&path, &manifest, s).map_err(|e| e.to_string());
    Ok(DeskData { train: load(Split::Train)?, val: load(Split::Val)?, test: load(Split::Test)?, _dir: dir })
}

fn desk_learning(data: &DeskData) -> Outcome {
    let t = Instant::now();
    let model = ModelConfig::desk();
    let cfg = TrainConfig::desk();
    let td = TrainData::new(&data.train, &data.val).map_err(|e| e.to_string())?;
    let state = TrainState::fresh(&model, &cfg).map_err(|e| e.to_string())?;
    let (state, history) = train(&td, &model, &cfg, state, |_, _| Ok(())).map_err(|e| e.to_string())?;
    let best = state.best.ok_or("no validation record")?;
    let rec: &EpochRecord = &history[best.epoch - 1];
    let mean = rec.val_rel_l2().ok_or("best epoch lacks validation metrics")?;

    // Diagnostics: pressure-drop error and held-out test error of the selected checkpoint.
    let mut dp_err = 0.0;
    let mut test_mean = 0.0;
    for case in &data.val {
        let e = evaluate_case(&best.store, &model, &td.stats, case).map_err(|e| e.to_string())?;
        let drop_pred: Vec<f64> = e.pressure.iter().map(|p| case.inlet_pressure - p).collect();
        let drop_true: Vec<f64> = case.pressure.iter().map(|&p| case.inlet_pressure - p as f64).collect();
        dp_err += rel_l2(&drop_pred, &drop_true).map_err(|e| e.to_string())? / data.val.len() as f64;
    }
    for case in &data.test {
        let e = evaluate_case(&best.store, &model, &td.stats, case).map_err(|e| e.to_string())?;
        test_mean += 0.5 * (e.rel_l2_pressure + e.rel_l2_wss) / data.test.len() as f64;
    }

    // Single-case overfit: same architecture without dropout, one training case,
    // loss evaluated on every surface point of that case.
    let overfit_model = ModelConfig { dropout_p: 0.0, ..model.clone() };
    let overfit_cfg = TrainConfig {
        lr: OVERFIT_LR,
        batch_size: 1,
        epochs: OVERFIT_EPOCHS,
        warmup_epochs: OVERFIT_EPOCHS / 20,
        val_every: OVERFIT_EPOCHS,
        ..cfg.clone()
    };
    let one = TrainData::with_stats(td.stats.clone(), &data.train[..1], &[]);
    let s0 = TrainState::fresh(&overfit_model, &overfit_cfg).map_err(|e| e.to_string())?;
    let (fitted, _) = train(&one, &overfit_model, &overfit_cfg, s0, |_, _| Ok(())).map_err(|e| e.to_string())?;
    let overfit =
        evaluate_case(&fitted.store, &overfit_model, &td.stats, &data.train[0]).map_err(|e| e.to_string())?.loss;

    let elapsed = t.elapsed();
    check(
        mean < DESK_REL_L2 && overfit < OVERFIT_LOSS && elapsed < DESK_RUNTIME,
        format!(
            "best epoch {}: val rel ℓ2 P {:.4}, WSS {:.4}, mean {mean:.4}; single-case overfit loss {overfit:.2e} \
             [diagnostics: ΔP rel ℓ2 {dp_err:.4}, test mean {test_mean:.4}] [{:.0?}]",
            best.epoch,
            rec.val_rel_l2_pressure.unwrap_or(f64::NAN),
            rec.val_rel_l2_wss.unwrap_or(f64::NAN),
            elapsed
        ),
    )
}

fn ablation_plumbing(data: &DeskData) -> Outcome {
    let base = ModelConfig::desk();
    let variants = [
        ("cls", ModelConfig { conditioning: Conditioning::Cls, ..base.clone() }),
        ("softplus", ModelConfig { positivity: Positivity::Softplus, ..base.clone() }),
        ("isotropic", ModelConfig { kernel: KernelKind::Isotropic, ..base.clone() }),
        ("shared", ModelConfig { sharing: Sharing::Shared, ..base.clone() }),
    ];
    let cfg = TrainConfig { epochs: ABLATION_EPOCHS, warmup_epochs: ABLATION_EPOCHS / 20, ..TrainConfig::desk() };
    let td = TrainData::new(&data.train, &data.val).map_err(|e| e.to_string())?;
    let mut parts = Vec::new();
    for (name, model) in &variants {
        let state = TrainState::fresh(model, &cfg).map_err(|e| e.to_string())?;
        let (state, h) = train(&td, model, &cfg, state, |_, _| Ok(())).map_err(|e| format!("{name}: {e}"))?;
        let best = state.best.ok_or(format!("{name}: no validation"))?;
        parts.push(format!(
            "{name} ok (best val loss {:.3}, final train {:.3})",
            best.val_loss,
            h.last().unwrap().train_loss
        ));
    }
    let width = |kernel, sharing| ModelConfig { kernel, sharing, ..base.clone() }.head_width();
    let widths = [
        width(KernelKind::Anisotropic, Sharing::Separate),
        width(KernelKind::Anisotropic, Sharing::Shared),
        width(KernelKind::Isotropic, Sharing::Separate),
    ];
    check(widths == [14, 8, 4], format!("{}; head widths {widths:?}", parts.join(", ")))
}

fn metrics_identities() -> Outcome {
    let t = [0.3, -1.0, 2.0, 4.5];
    let rel = [
        rel_l2(&t, &t).map_err(|e| e.to_string())?,
        rel_l2(&[0.0; 4], &t).map_err(|e| e.to_string())?,
        rel_l2(&t.map(|v| 2.0 * v), &t).map_err(|e| e.to_string())?,
    ];
    let ffr = ffr_field(&[0.0; 64], BLOOD_DENSITY, 13332.0).map_err(|e| e.to_string())?;
    let unit = ffr.ffr.iter().all(|&v| v == 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let pred: Vec<f64> = (0..97).map(|_| rng.random_range(0.4..1.0)).collect();
    let truth: Vec<f64> = (0..97).map(|_| rng.random_range(0.4..1.0)).collect();
    let cls = classify_ffr(&pred, &truth, 0.8).map_err(|e| e.to_string())?;
    let ba = bland_altman(&truth, &truth).map_err(|e| e.to_string())?;
    let ok = rel == [0.0, 1.0, 1.0]
        && unit
        && cls.confusion.total() == 97
        && (ba.bias, ba.lower, ba.upper) == (0.0, 0.0, 0.0);
    check(
        ok,
        format!(
            "rel ℓ2 {rel:?}; zero-perturbation FFR ≡ 1: {unit}; confusion total {}/97; Bland–Altman ({}, {}, {})",
            cls.confusion.total(),
            ba.bias,
            ba.lower,
            ba.upper
        ),
    )
}

fn determinism_and_io() -> Outcome {
    let small = GenerateConfig { stations: 32, per_ring: 8, ..GenerateConfig::default() };
    let dirs: Vec<tempfile::TempDir> = (0..2).map(|_| tempfile::tempdir().unwrap()).collect();
    for d in &dirs {
        generate_dataset(d.path(), 12, &small, 1234, SplitSpec::Counts([8, 2, 2])).map_err(|e| e.to_string())?;
    }
    let listing = |p: &std::path::Path| {
        let mut v: Vec<(std::ffi::OsString, Vec<u8>)> = std::fs::read_dir(p)
            .unwrap()
            .map(|e| {
                let e = e.unwrap();
                (e.file_name(), std::fs::read(e.path()).unwrap())
            })
            .collect();
        v.sort();
        v
    };
    let datasets_equal = listing(dirs[0].path()) == listing(dirs[1].path());

    let path = dirs[0].path().join(MANIFEST_FILE);
    let manifest = Manifest::load(&path).map_err(|e| e.to_string())?;
    let train_cases = load_split(&path, &manifest, Split::Train).map_err(|e| e.to_string())?;
    let val_cases = load_split(&path, &manifest, Split::Val).map_err(|e| e.to_string())?;

    let cvf_bitwise = train_cases.iter().all(|c| {
        let bytes = encode_case(c).unwrap();
        decode_case(&bytes).map(|back| encode_case(&back).unwrap() == bytes).unwrap_or(false)
    });

    let model = ModelConfig { m: 8, d: 8, layers: 1, ff_dim: 16, fourier_k: 2, cond_hidden: 8, ..ModelConfig::desk() };
    let cfg = TrainConfig {
        batch_size: 4,
        epochs: 2,
        warmup_epochs: 1,
        points_per_case: 64,
        val_every: 1,
        ..TrainConfig::desk()
    };
    let td = TrainData::new(&train_cases, &val_cases).map_err(|e| e.to_string())?;
    let run = || -> Result<(String, Vec<u8>), String> {
        let state = TrainState::fresh(&model, &cfg).map_err(|e| e.to_string())?;
        let mut log = String::new();
        let (state, _) = train(&td, &model, &cfg, state, |r, _| {
            log.push_str(&serde_json::to_string(r).expect("record serializes"));
            log.push('\n');
            Ok(())
        })
        .map_err(|e| e.to_string())?;
        let ckpt = Checkpoint {
            model: model.clone(),
            stats: td.stats.clone(),
            epoch: state.epoch,
            train: Some(cfg.clone()),
            best_val_loss: state.best.as_ref().map(|b| b.val_loss),
            best_epoch: state.best.as_ref().map(|b| b.epoch),
            store: state.store,
        };
        Ok((log, encode_checkpoint(&ckpt).map_err(|e| e.to_string())?))
    };
    let (log_a, ckpt_a) = run()?;
    let (log_b, ckpt_b) = run()?;
    let training_equal = log_a == log_b && ckpt_a == ckpt_b;

    // Resume: one step from a reloaded checkpoint equals one step in memory.
    let restored = decode_checkpoint(&ckpt_a).map_err(|e| e.to_string())?;
    let live = TrainState { store: restored.store.clone(), epoch: restored.epoch, best: None };
    let reencoded = encode_checkpoint(&restored).map_err(|e| e.to_string())? == ckpt_a;
    let step = |mut s: TrainState| -> Result<Vec<u32>, String> {
        train_step(&mut s, &td, &model, &cfg, &[0, 1, 2, 3], 0, 2).map_err(|e| e.to_string())?;
        Ok(s.store.values().iter().flat_map(|a| a.data().iter().map(|v| v.to_bits())).collect())
    };
    let from_disk = step(TrainState { store: decode_checkpoint(&ckpt_a).unwrap().store, ..live.clone() })?;
    let resume_equal = from_disk == step(live)? && reencoded;

    check(
        datasets_equal && cvf_bitwise && training_equal && resume_equal,
        format!(
            "datasets bitwise {datasets_equal}, CVF1 round trip {cvf_bitwise}, logs+checkpoints bitwise {training_equal}, \
             resume step bitwise {resume_equal}"
        ),
    )
}

fn main() {
    let mut results: Vec<(&str, Outcome)> = vec![
        ("FLOP reproduction", flop_reproduction()),
        ("Query invariance", query_invariance()),
        ("Parameter counts", parameter_counts()),
        ("Gradient correctness", gradient_correctness()),
        ("Kernel properties", kernel_properties()),
        ("Poiseuille oracle", poiseuille_oracle()),
    ];
    match desk_data() {
        Ok(data) => {
            results.push(("Desk-scale learning", desk_learning(&data)));
            results.push(("Ablation plumbing", ablation_plumbing(&data)));
        }
        Err(e) => {
            results.push(("Desk-scale learning", Err(format!("dataset: {e}"))));
            results.push(("Ablation plumbing", Err(format!("dataset: {e}"))));
        }
    }
    results.push(("Metrics identities", metrics_identities()));
    results.push(("Determinism and I/O", determinism_and_io()));

    let mut failed = 0;
    for (name, outcome) in &results {
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
