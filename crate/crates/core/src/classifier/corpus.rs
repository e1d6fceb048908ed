//! Corpus manifest (`labels.csv`) and the seeded train/test split.

use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{Class, ClassifierError, Disease};

pub const MANIFEST_HEADER: &str = "path,binary_label,disease";
pub const MANIFEST_NAME: &str = "labels.csv";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CorpusEntry {
    /// Relative to the corpus directory.
    pub path: String,
    pub class: Class,
    pub disease: Option<Disease>,
}

impl CorpusEntry {
    pub fn disease_str(&self) -> &'static str {
        self.disease.map_or("none", Disease::as_str)
    }

    /// Stratum used by the split: healthy or one of the diseases.
    fn stratum(&self) -> usize {
        self.disease.map_or(0, |d| d.index() + 1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    pub root: PathBuf,
    pub entries: Vec<CorpusEntry>,
}

impl Manifest {
    pub fn parse(text: &str, root: impl Into<PathBuf>) -> Result<Manifest, ClassifierError> {
        let bad = |line: usize, msg: String| ClassifierError::Manifest(format!("line {line}: {msg}"));
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h == MANIFEST_HEADER => {}
            _ => return Err(ClassifierError::Manifest(format!("header must be {MANIFEST_HEADER:?}"))),
        }
        let mut entries = Vec::new();
        for (i, line) in lines {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            let [path, class, disease] = fields[..] else {
                return Err(bad(i + 1, format!("expected 3 fields, found {}", fields.len())));
            };
            let class: Class = class.parse().map_err(|e| bad(i + 1, e))?;
            let disease = match disease {
                "none" => None,
                d => Some(d.parse::<Disease>().map_err(|e| bad(i + 1, e))?),
            };
            if (class == Class::Healthy) != disease.is_none() {
                return Err(bad(
                    i + 1,
                    "healthy rows need disease none, infected rows a disease".into(),
                ));
            }
            if path.is_empty() {
                return Err(bad(i + 1, "empty path".into()));
            }
            entries.push(CorpusEntry {
                path: path.to_string(),
                class,
                disease,
            });
        }
        Ok(Manifest {
            root: root.into(),
            entries,
        })
    }

    pub fn load(dir: &Path) -> Result<Manifest, ClassifierError> {
        let path = dir.join(MANIFEST_NAME);
        let text = std::fs::read_to_string(&path)
            .map_err(|e| ClassifierError::Manifest(format!("{}: {e}", path.display())))?;
        Self::parse(&text, dir)
    }

    pub fn to_csv(entries: &[CorpusEntry]) -> String {
        let mut out = String::from(MANIFEST_HEADER);
        out.push('\n');
        for e in entries {
            out.push_str(&format!("{},{},{}\n", e.path, e.class, e.disease_str()));
        }
        out
    }

    pub fn resolve(&self, entry: &CorpusEntry) -> PathBuf {
        self.root.join(&entry.path)
    }

    /// Stratified seeded split. Each stratum (healthy and each disease) is
    /// shuffled and its first `round(n · train_fraction)` members go to
    /// training. Index lists come back sorted.
    pub fn split(&self, seed: u64, train_fraction: f64) -> Split {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut train = Vec::new();
        let mut test = Vec::new();
        for stratum in 0..4 {
            let mut idx: Vec<usize> = (0..self.entries.len())
                .filter(|&i| self.entries[i].stratum() == stratum)
                .collect();
            idx.shuffle(&mut rng);
            let n_train = ((idx.len() as f64) * train_fraction).round() as usize;
            train.extend_from_slice(&idx[..n_train.min(idx.len())]);
            test.extend_from_slice(&idx[n_train.min(idx.len())..]);
        }
        train.sort_unstable();
        test.sort_unstable();
        Split {
            seed,
            train_fraction,
            train,
            test,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Split {
    pub seed: u64,
    pub train_fraction: f64,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn manifest(n_per: usize) -> Manifest {
        let mut entries = Vec::new();
        for i in 0..n_per * 4 {
            let disease = match i % 4 {
                0 => None,
                1 => Some(Disease::LeafScald),
                2 => Some(Disease::RedStripe),
                _ => Some(Disease::Mosaic),
            };
            entries.push(CorpusEntry {
                path: format!("images/{i:04}.ppm"),
                class: if disease.is_some() {
                    Class::Infected
                } else {
                    Class::Healthy
                },
                disease,
            });
        }
        Manifest {
            root: PathBuf::from("c"),
            entries,
        }
    }

    #[test]
    fn csv_round_trip() {
        let m = manifest(2);
        let text = Manifest::to_csv(&m.entries);
        assert_eq!(text.lines().count(), 9);
        assert_eq!(Manifest::parse(&text, "c").unwrap(), m);
    }

    #[test]
    fn rejects_bad_rows() {
        for body in [
            "x.ppm,healthy,mosaic",
            "x.ppm,infected,none",
            "x.ppm,sick,none",
            "x.ppm,healthy",
            "x.ppm,infected,eye_spot",
        ] {
            let text = format!("{MANIFEST_HEADER}\n{body}\n");
            assert!(Manifest::parse(&text, ".").is_err(), "{body}");
        }
        assert!(Manifest::parse("a,b,c\n", ".").is_err());
    }

    #[test]
    fn split_is_stratified_and_seeded() {
        let m = manifest(50);
        let s = m.split(42, 0.7);
        assert_eq!(s.train.len(), 140);
        assert_eq!(s.test.len(), 60);
        for stratum in 0..4 {
            let n = s.test.iter().filter(|&&i| m.entries[i].stratum() == stratum).count();
            assert_eq!(n, 15);
        }
        assert_eq!(m.split(42, 0.7), s);
        assert_ne!(m.split(43, 0.7).test, s.test);
        let mut all: Vec<_> = s.train.iter().chain(&s.test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..200).collect::<Vec<_>>());
    }
}
