//! Dataset manifests: one JSON record per line naming the reference files
//! of an utterance.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sepeval::mix::MixSpec;
use sepeval::wav::read_wav;
use sepeval::wer::Transcript;
use sepeval::{ReferenceSet, Waveform};

use crate::error::{io_error, CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Record {
    pub id: String,
    pub source: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interference: Option<PathBuf>,
    pub noise: PathBuf,
    /// When absent, the mixture is rebuilt as the sum of the references.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observed: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub enhanced: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transcript: Option<String>,
    /// Levels the utterance was mixed at, when produced by `mix`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mix: Option<MixSpec>,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    /// Relative paths in records are resolved against this directory.
    pub base: PathBuf,
    pub records: Vec<Record>,
}

impl Dataset {
    pub fn load(path: &Path) -> CliResult<Dataset> {
        let file = File::open(path).map_err(|e| io_error(path, e))?;
        let mut records = Vec::new();
        let mut ids = HashSet::new();
        for (k, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| io_error(path, e))?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let rec: Record = serde_json::from_str(line)
                .map_err(|e| CliError::data(format!("{} line {}: {e}", path.display(), k + 1)))?;
            if !ids.insert(rec.id.clone()) {
                return Err(CliError::data(format!(
                    "{} line {}: duplicate id `{}`",
                    path.display(),
                    k + 1,
                    rec.id
                )));
            }
            records.push(rec);
        }
        if records.is_empty() {
            return Err(CliError::data(format!("{}: no utterances", path.display())));
        }
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(Dataset { base, records })
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    pub fn references(&self, rec: &Record) -> CliResult<ReferenceSet> {
        let read = |p: &Path| read_wav(self.resolve(p));
        let s = read(&rec.source)?;
        let i = rec.interference.as_deref().map(read).transpose()?;
        let n = read(&rec.noise)?;
        let refs = match &rec.observed {
            Some(y) => ReferenceSet::new(s, i, n, read(y)?),
            None => ReferenceSet::from_components(s, i, n),
        };
        refs.map_err(|e| CliError::data(format!("utterance `{}`: {e}", rec.id)))
    }

    pub fn enhanced(&self, rec: &Record) -> CliResult<Waveform> {
        let p = rec.enhanced.as_deref().ok_or_else(|| {
            CliError::data(format!(
                "utterance `{}` has no `enhanced` path; run `sepeval enhance` first",
                rec.id
            ))
        })?;
        Ok(read_wav(self.resolve(p))?)
    }

    pub fn transcripts(&self) -> HashMap<String, Transcript> {
        self.records
            .iter()
            .filter_map(|r| r.transcript.as_deref().map(|t| (r.id.clone(), Transcript::parse(t))))
            .collect()
    }
}

pub fn write_records(path: &Path, records: &[Record]) -> CliResult<()> {
    let file = File::create(path).map_err(|e| io_error(path, e))?;
    let mut out = BufWriter::new(file);
    for r in records {
        let line = serde_json::to_string(r).map_err(|e| CliError::internal(e.to_string()))?;
        writeln!(out, "{line}").map_err(|e| io_error(path, e))?;
    }
    out.flush().map_err(|e| io_error(path, e))
}

pub fn create_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Kind;

    fn load_text(text: &str) -> CliResult<Dataset> {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.jsonl");
        std::fs::write(&path, text).unwrap();
        Dataset::load(&path)
    }

    #[test]
    fn skips_comments_and_resolves_relative_paths() {
        let d = load_text("# header\n\n{\"id\":\"a\",\"source\":\"s.wav\",\"noise\":\"/abs/n.wav\"}\n").unwrap();
        assert_eq!(d.records.len(), 1);
        assert_eq!(d.resolve(&d.records[0].source), d.base.join("s.wav"));
        assert_eq!(d.resolve(&d.records[0].noise), PathBuf::from("/abs/n.wav"));
    }

    #[test]
    fn rejects_bad_manifests() {
        let rec = "{\"id\":\"a\",\"source\":\"s.wav\",\"noise\":\"n.wav\"}\n";
        for text in [
            String::new(),
            format!("{rec}{rec}"),
            "{\"id\":\"a\",\"source\":\"s.wav\",\"noise\":\"n.wav\",\"extra\":1}\n".to_string(),
            "not json\n".to_string(),
        ] {
            assert_eq!(load_text(&text).unwrap_err().kind, Kind::Data, "{text:?}");
        }
    }

    #[test]
    fn missing_enhanced_path_is_a_data_error() {
        let d = load_text("{\"id\":\"a\",\"source\":\"s.wav\",\"noise\":\"n.wav\"}\n").unwrap();
        assert_eq!(d.enhanced(&d.records[0]).unwrap_err().kind, Kind::Data);
    }
}
