use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{read_file, write_atomic, DataError, Result};

pub const CASE_EXTENSION: &str = "cvf";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        })
    }
}

/// How to partition shuffled cases.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SplitSpec {
    /// Train/val/test fractions summing to 1; counts use largest-remainder rounding.
    Fractions([f64; 3]),
    /// Exact train/val/test counts; they must sum to the number of cases.
    Counts([usize; 3]),
}

impl SplitSpec {
    pub fn counts(&self, n: usize) -> Result<[usize; 3]> {
        match *self {
            SplitSpec::Counts(c) => {
                if c.iter().sum::<usize>() != n {
                    return Err(DataError::Manifest(format!("split counts {c:?} do not sum to {n} cases")));
                }
                Ok(c)
            }
            SplitSpec::Fractions(f) => {
                let sum: f64 = f.iter().sum();
                if f.iter().any(|&x| !(x >= 0.0)) || (sum - 1.0).abs() > 1e-6 {
                    return Err(DataError::Manifest(format!("split fractions {f:?} must be >= 0 and sum to 1")));
                }
                let exact: Vec<f64> = f.iter().map(|&x| x * n as f64).collect();
                let mut c = [0usize; 3];
                for i in 0..3 {
                    c[i] = exact[i].floor() as usize;
                }
                let mut order = [0usize, 1, 2];
                // Stable sort: ties go to the earlier split.
                order.sort_by(|&a, &b| {
                    let ra = exact[a] - exact[a].floor();
                    let rb = exact[b] - exact[b].floor();
                    rb.partial_cmp(&ra).expect("finite")
                });
                let mut left = n - c.iter().sum::<usize>();
                for &i in order.iter().cycle() {
                    if left == 0 {
                        break;
                    }
                    c[i] += 1;
                    left -= 1;
                }
                Ok(c)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Path relative to the manifest's directory.
    pub path: String,
    pub split: Split,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Header {
    name: String,
    seed: u64,
    counts: SplitCounts,
}

/// Case list with split tags. Persisted as JSON lines: a header record, then
/// one record per case.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub name: String,
    pub seed: u64,
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    /// Shuffles `paths` with `seed` and partitions them per `spec`.
    pub fn from_paths(name: &str, mut paths: Vec<String>, spec: SplitSpec, seed: u64) -> Result<Self> {
        paths.sort();
        let before = paths.len();
        paths.dedup();
        if paths.len() != before {
            return Err(DataError::Manifest("duplicate case paths".into()));
        }
        let [train, val, _] = spec.counts(paths.len())?;
        paths.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let entries = paths
            .into_iter()
            .enumerate()
            .map(|(i, path)| {
                let split = if i < train {
                    Split::Train
                } else if i < train + val {
                    Split::Val
                } else {
                    Split::Test
                };
                ManifestEntry { path, split }
            })
            .collect();
        Ok(Self { name: name.to_string(), seed, entries })
    }

    pub fn counts(&self) -> SplitCounts {
        let count = |s| self.entries.iter().filter(|e| e.split == s).count();
        SplitCounts { train: count(Split::Train), val: count(Split::Val), test: count(Split::Test) }
    }

    pub fn paths(&self, split: Split) -> Vec<&str> {
        self.entries.iter().filter(|e| e.split == split).map(|e| e.path.as_str()).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for e in &self.entries {
            if !seen.insert(e.path.as_str()) {
                return Err(DataError::Manifest(format!("{} appears more than once", e.path)));
            }
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> Result<String> {
        let header = Header { name: self.name.clone(), seed: self.seed, counts: self.counts() };
        let mut out = serde_json::to_string(&header)?;
        out.push('\n');
        for e in &self.entries {
            out.push_str(&serde_json::to_string(e)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: Header =
            serde_json::from_str(lines.next().ok_or_else(|| DataError::Manifest("empty manifest".into()))?)?;
        let entries = lines.map(serde_json::from_str).collect::<std::result::Result<Vec<ManifestEntry>, _>>()?;
        let m = Self { name: header.name, seed: header.seed, entries };
        m.validate()?;
        if m.counts() != header.counts {
            return Err(DataError::Manifest(format!(
                "header counts {:?} do not match entries {:?}",
                header.counts,
                m.counts()
            )));
        }
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_jsonl()?.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = read_file(path)?;
        let text = std::str::from_utf8(&bytes).map_err(|_| DataError::Manifest("manifest is not UTF-8".into()))?;
        Self::from_jsonl(text)
    }
}

/// Lists `*.cvf` files in `dir` (sorted by name) and partitions them.
pub fn build_manifest(dir: &Path, name: &str, spec: SplitSpec, seed: u64) -> Result<Manifest> {
    let io = |e| DataError::Io { path: dir.to_path_buf(), source: e };
    let mut paths = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(io)? {
        let p: PathBuf = entry.map_err(io)?.path();
        if p.is_file() && p.extension().is_some_and(|e| e == CASE_EXTENSION) {
            let file = p
                .file_name()
                .and_then(|f| f.to_str())
                .ok_or_else(|| DataError::Manifest(format!("non-UTF-8 file name in {}", dir.display())))?;
            paths.push(file.to_string());
        }
    }
    if paths.is_empty() {
        return Err(DataError::EmptyDirectory(dir.to_path_buf()));
    }
    Manifest::from_paths(name, paths, spec, seed)
}
