use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use vesselrbf::dataio::{load_checkpoint, load_split, save_checkpoint, Checkpoint, Split};
use vesselrbf::training::{train, BestCheckpoint, EpochRecord, TrainData, TrainError, TrainState};

use super::{load_manifest, write_text};
use crate::error::{CliError, Result};
use crate::profile::RunConfig;
use crate::TrainArgs;

pub const CONFIG_FILE: &str = "config.json";
pub const LOG_FILE: &str = "log.jsonl";
pub const LAST_CHECKPOINT: &str = "last.ckpt";
pub const BEST_CHECKPOINT: &str = "best.ckpt";

#[derive(Serialize)]
struct Summary {
    epochs: usize,
    best_epoch: Option<usize>,
    best_val_loss: Option<f64>,
    best_val_rel_l2_pressure: Option<f64>,
    best_val_rel_l2_wss: Option<f64>,
    final_train_loss: Option<f64>,
    run_dir: PathBuf,
}

/// Log records up to and including `epoch`, from an existing log file.
fn truncated_log(path: &Path, epoch: usize) -> Result<Vec<EpochRecord>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::from(e).context(format!("reading {}", path.display())))?;
    let mut kept = Vec::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let rec: EpochRecord =
            serde_json::from_str(line).map_err(|e| CliError::from(e).context(format!("parsing {}", path.display())))?;
        if rec.epoch <= epoch {
            kept.push(rec);
        }
    }
    Ok(kept)
}

fn log_text(records: &[EpochRecord]) -> String {
    records.iter().map(|r| serde_json::to_string(r).expect("record serializes") + "\n").collect()
}

pub fn run(args: TrainArgs) -> Result<()> {
    if args.checkpoint_every == 0 {
        return Err(CliError::usage("--checkpoint-every must be positive"));
    }
    let mut overrides = args.overrides.clone();
    if let Some(seed) = args.seed {
        overrides.push(format!("train.seed={seed}"));
    }
    let manifest = load_manifest(&args.manifest)?;
    let train_cases = load_split(&args.manifest, &manifest, Split::Train)?;
    let val_cases = load_split(&args.manifest, &manifest, Split::Val)?;

    let last_path = args.out.join(LAST_CHECKPOINT);
    let best_path = args.out.join(BEST_CHECKPOINT);
    let log_path = args.out.join(LOG_FILE);

    let (cfg, data, state, history) = if args.resume {
        let ckpt = load_checkpoint(&last_path)
            .map_err(|e| CliError::from(e).context(format!("resuming from {}", last_path.display())))?;
        let base_train = ckpt
            .train
            .clone()
            .ok_or_else(|| CliError::data(format!("{} has no training config", last_path.display())))?;
        let cfg = RunConfig { model: ckpt.model.clone(), train: base_train }.with_overrides(&overrides)?;
        if cfg.model != ckpt.model {
            return Err(CliError::usage("model overrides conflict with the checkpoint being resumed"));
        }
        let best = match (ckpt.best_epoch, ckpt.best_val_loss) {
            (Some(epoch), Some(val_loss)) => {
                let b = load_checkpoint(&best_path)?;
                if b.epoch != epoch {
                    return Err(CliError::data(format!(
                        "{} holds epoch {}, last.ckpt expects best epoch {epoch}",
                        best_path.display(),
                        b.epoch
                    )));
                }
                Some(BestCheckpoint { store: b.store, epoch, val_loss })
            }
            _ => None,
        };
        let data = TrainData::with_stats(ckpt.stats.clone(), &train_cases, &val_cases);
        let history = truncated_log(&log_path, ckpt.epoch)?;
        (cfg, data, TrainState { store: ckpt.store, epoch: ckpt.epoch, best }, history)
    } else {
        if last_path.exists() {
            return Err(CliError::usage(format!(
                "{} already holds a run; pass --resume or choose another --out",
                args.out.display()
            )));
        }
        let cfg = RunConfig::from_profile(args.profile).with_overrides(&overrides)?;
        let data = TrainData::new(&train_cases, &val_cases)?;
        let state = TrainState::fresh(&cfg.model, &cfg.train)?;
        (cfg, data, state, Vec::new())
    };

    write_text(&args.out.join(CONFIG_FILE), &(serde_json::to_string_pretty(&cfg)? + "\n"))?;
    write_text(&log_path, &log_text(&history))?;
    let mut log: File = OpenOptions::new()
        .append(true)
        .open(&log_path)
        .map_err(|e| CliError::from(e).context(format!("opening {}", log_path.display())))?;

    let checkpoint = |store, epoch, best: Option<&BestCheckpoint>| Checkpoint {
        model: cfg.model.clone(),
        stats: data.stats.clone(),
        epoch,
        train: Some(cfg.train.clone()),
        best_val_loss: best.map(|b| b.val_loss),
        best_epoch: best.map(|b| b.epoch),
        store,
    };

    // Completed epoch and best (epoch, val loss) after the latest callback.
    let best_of = |s: &TrainState| s.best.as_ref().map(|b| (b.epoch, b.val_loss));
    let mut progress = (state.epoch, best_of(&state));
    let mut new_records: Vec<EpochRecord> = Vec::new();
    let mut failure: Option<CliError> = None;
    let mut stopped = false;
    let on_epoch = |rec: &EpochRecord, state: &TrainState| -> std::result::Result<(), TrainError> {
        new_records.push(rec.clone());
        progress = (state.epoch, best_of(state));
        let stopping = args.stop_after == Some(new_records.len()) && rec.epoch < cfg.train.epochs;
        let mut step = || -> Result<()> {
            writeln!(log, "{}", serde_json::to_string(rec)?).and_then(|_| log.flush())?;
            if let Some(best) = state.best.as_ref().filter(|b| b.epoch == rec.epoch) {
                save_checkpoint(&checkpoint(best.store.clone(), best.epoch, Some(best)), &best_path)?;
            }
            if stopping || rec.epoch % args.checkpoint_every == 0 || rec.epoch == cfg.train.epochs {
                save_checkpoint(&checkpoint(state.store.clone(), rec.epoch, state.best.as_ref()), &last_path)?;
            }
            if !args.quiet {
                let val = match (rec.val_loss, rec.val_rel_l2()) {
                    (Some(l), Some(r)) => format!(" val {l:.4} rel_l2 {r:.4}"),
                    _ => String::new(),
                };
                eprintln!("epoch {:>5} lr {:.3e} train {:.4}{val}", rec.epoch, rec.lr, rec.train_loss);
            }
            Ok(())
        };
        if let Err(e) = step() {
            let msg = e.to_string();
            failure = Some(e);
            return Err(TrainError::Aborted(msg));
        }
        if stopping {
            stopped = true;
            return Err(TrainError::Aborted("stop requested".into()));
        }
        Ok(())
    };
    let result = train(&data, &cfg.model, &cfg.train, state, on_epoch);
    if let Some(e) = failure {
        return Err(e);
    }
    match result {
        Ok((state, _)) => {
            if !last_path.exists() {
                save_checkpoint(&checkpoint(state.store.clone(), state.epoch, state.best.as_ref()), &last_path)?;
            }
        }
        Err(TrainError::Aborted(_)) if stopped => {}
        Err(e) => return Err(e.into()),
    }

    let (epochs, best) = progress;
    let all: Vec<&EpochRecord> = history.iter().chain(&new_records).collect();
    let best_rec = best.and_then(|(epoch, _)| all.iter().find(|r| r.epoch == epoch));
    let summary = Summary {
        epochs,
        best_epoch: best.map(|b| b.0),
        best_val_loss: best.map(|b| b.1),
        best_val_rel_l2_pressure: best_rec.and_then(|r| r.val_rel_l2_pressure),
        best_val_rel_l2_wss: best_rec.and_then(|r| r.val_rel_l2_wss),
        final_train_loss: all.last().map(|r| r.train_loss),
        run_dir: args.out.clone(),
    };
    println!("{}", serde_json::to_string(&summary)?);
    Ok(())
}
