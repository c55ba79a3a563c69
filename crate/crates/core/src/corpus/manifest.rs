use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lang::Direction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Subset {
    Base146,
    Large234,
    Eval106,
}

impl Subset {
    pub const ALL: [Subset; 3] = [Subset::Base146, Subset::Large234, Subset::Eval106];

    pub fn name(self) -> &'static str {
        match self {
            Subset::Base146 => "base146",
            Subset::Large234 => "large234",
            Subset::Eval106 => "eval106",
        }
    }
}

impl fmt::Display for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Subset {
    type Err = ManifestError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Subset::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| ManifestError::UnknownSubset(s.to_string()))
    }
}

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("unknown subset `{0}` (expected base146, large234 or eval106)")]
    UnknownSubset(String),
    #[error("subset {0} has no directions")]
    EmptySubset(Subset),
    #[error("{direction}: declared size {declared} but shards hold {actual} lines")]
    SizeMismatch {
        direction: Direction,
        declared: u64,
        actual: u64,
    },
    #[error("{0} is flagged eval106 but not large234")]
    EvalOutsideLarge(Direction),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DirectionRecord {
    pub size: u64,
    #[serde(default)]
    pub shards: Vec<PathBuf>,
    #[serde(default)]
    pub subsets: BTreeSet<Subset>,
}

/// Per-direction dataset sizes, shard files and subset membership.
///
/// A record without shards carries a declared size only (used for sampling
/// fixtures); records with shards must match their line counts.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub directions: BTreeMap<Direction, DirectionRecord>,
}

fn count_lines(path: &Path) -> Result<u64, ManifestError> {
    let io = |source| ManifestError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = std::fs::File::open(path).map_err(io)?;
    let mut reader = BufReader::new(file);
    let mut buf = Vec::new();
    let mut n = 0;
    loop {
        buf.clear();
        if reader.read_until(b'\n', &mut buf).map_err(io)? == 0 {
            return Ok(n);
        }
        if !buf.iter().all(u8::is_ascii_whitespace) {
            n += 1;
        }
    }
}

impl CorpusManifest {
    /// Relative shard paths are resolved against the manifest's directory.
    pub fn load(path: &Path) -> Result<Self, ManifestError> {
        let text = std::fs::read_to_string(path).map_err(|source| ManifestError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut m: CorpusManifest = serde_json::from_str(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        for rec in m.directions.values_mut() {
            for s in rec.shards.iter_mut() {
                if s.is_relative() {
                    *s = base.join(&*s);
                }
            }
        }
        Ok(m)
    }

    /// Shards under the manifest's directory are stored relative to it.
    pub fn save(&self, path: &Path) -> Result<(), ManifestError> {
        let base = path.parent().unwrap_or(Path::new(""));
        let mut stored = self.clone();
        for rec in stored.directions.values_mut() {
            for s in rec.shards.iter_mut() {
                if let Ok(rel) = s.strip_prefix(base) {
                    *s = rel.to_path_buf();
                }
            }
        }
        let text = serde_json::to_string_pretty(&stored)?;
        std::fs::write(path, text + "\n").map_err(|source| ManifestError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    /// Checks subset consistency; with `check_shards`, also re-counts shard
    /// lines for every record that lists shards.
    pub fn validate(&self, check_shards: bool) -> Result<(), ManifestError> {
        for (dir, rec) in &self.directions {
            if rec.subsets.contains(&Subset::Eval106) && !rec.subsets.contains(&Subset::Large234) {
                return Err(ManifestError::EvalOutsideLarge(*dir));
            }
            if check_shards && !rec.shards.is_empty() {
                let mut actual = 0;
                for s in &rec.shards {
                    actual += count_lines(s)?;
                }
                if actual != rec.size {
                    return Err(ManifestError::SizeMismatch {
                        direction: *dir,
                        declared: rec.size,
                        actual,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn size(&self, dir: Direction) -> Option<u64> {
        self.directions.get(&dir).map(|r| r.size)
    }

    /// Sizes for `dirs`, in order; missing directions count as 0.
    pub fn sizes(&self, dirs: &[Direction]) -> Vec<f64> {
        dirs.iter()
            .map(|d| self.size(*d).unwrap_or(0) as f64)
            .collect()
    }

    /// Per-language total text volume: each direction adds its size to both
    /// of its languages.
    pub fn language_sizes(&self) -> BTreeMap<crate::lang::LanguageTag, f64> {
        let mut out = BTreeMap::new();
        for (d, r) in &self.directions {
            *out.entry(d.src).or_insert(0.0) += r.size as f64;
            *out.entry(d.tgt).or_insert(0.0) += r.size as f64;
        }
        out
    }
}

/// Both directions of every pair flagged with `subset`, sorted by codes.
pub fn enumerate_directions(
    manifest: &CorpusManifest,
    subset: Subset,
) -> Result<Vec<Direction>, ManifestError> {
    let set: BTreeSet<Direction> = manifest
        .directions
        .iter()
        .filter(|(_, r)| r.subsets.contains(&subset))
        .flat_map(|(d, _)| [*d, d.reversed()])
        .collect();
    if set.is_empty() {
        return Err(ManifestError::EmptySubset(subset));
    }
    Ok(set.into_iter().collect())
}
