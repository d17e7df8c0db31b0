use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Class label: spam is `+1`, not-spam is `-1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    Spam,
    Ham,
}

impl Label {
    pub fn as_f64(self) -> f64 {
        match self {
            Label::Spam => 1.0,
            Label::Ham => -1.0,
        }
    }

    pub fn flipped(self) -> Label {
        match self {
            Label::Spam => Label::Ham,
            Label::Ham => Label::Spam,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Spam => "1",
            Label::Ham => "-1",
        })
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "1" | "+1" => Ok(Label::Spam),
            "-1" => Ok(Label::Ham),
            other => Err(format!("bad label {other:?} (expected 1 or -1)")),
        }
    }
}

/// One labeled email: `label<TAB>user<TAB>timestamp<TAB>tokens`, tokens
/// separated by single spaces.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusLine {
    pub label: Label,
    pub user: String,
    pub timestamp: i64,
    pub tokens: Vec<String>,
}

fn has_control(s: &str) -> bool {
    s.chars().any(char::is_control)
}

impl CorpusLine {
    /// Parses one line; `line_no` (1-based) is used in error messages.
    pub fn parse(line: &str, line_no: usize) -> Result<Self> {
        let err = |msg: String| Error::Parse { line: line_no, msg };
        let line = line.strip_suffix('\n').unwrap_or(line);
        let line = line.strip_suffix('\r').unwrap_or(line);
        let fields: Vec<&str> = line.split('\t').collect();
        if !(3..=4).contains(&fields.len()) {
            return Err(err(format!("expected 4 tab-separated fields, got {}", fields.len())));
        }
        let label = fields[0].parse::<Label>().map_err(err)?;
        let user = fields[1];
        if user.is_empty() || has_control(user) || user.contains(' ') {
            return Err(err(format!("bad user id {user:?}")));
        }
        let timestamp = fields[2]
            .parse::<i64>()
            .map_err(|e| err(format!("bad timestamp {:?}: {e}", fields[2])))?;
        let tokens: Vec<String> = fields
            .get(3)
            .map(|t| t.split_whitespace().map(str::to_string).collect())
            .unwrap_or_default();
        if let Some(t) = tokens.iter().find(|t| has_control(t)) {
            return Err(err(format!("token {t:?} contains a control character")));
        }
        Ok(CorpusLine {
            label,
            user: user.to_string(),
            timestamp,
            tokens,
        })
    }

    pub fn serialize(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}",
            self.label,
            self.user,
            self.timestamp,
            self.tokens.join(" ")
        )
    }

    /// Training examples need at least one token.
    pub fn is_trainable(&self) -> bool {
        !self.tokens.is_empty()
    }
}

fn open_reader(path: &Path) -> Result<Box<dyn BufRead>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let inner: Box<dyn Read> = if is_gzip(path) {
        Box::new(GzDecoder::new(file))
    } else {
        Box::new(file)
    };
    Ok(Box::new(BufReader::new(inner)))
}

fn is_gzip(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "gz")
}

/// Reads a corpus file (gzip-compressed if the name ends in `.gz`). Blank
/// lines are skipped.
pub fn read_corpus(path: &Path) -> Result<Vec<CorpusLine>> {
    let reader = open_reader(path)?;
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(CorpusLine::parse(&line, i + 1)?);
    }
    Ok(out)
}

pub fn write_corpus(path: &Path, lines: &[CorpusLine]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w: Box<dyn Write> = if is_gzip(path) {
        Box::new(GzEncoder::new(BufWriter::new(file), Compression::default()))
    } else {
        Box::new(BufWriter::new(file))
    };
    for line in lines {
        writeln!(w, "{}", line.serialize()).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let s = "-1\tu7\t100\thello world";
        let l = CorpusLine::parse(s, 1).unwrap();
        assert_eq!(l.label, Label::Ham);
        assert_eq!(l.tokens, vec!["hello", "world"]);
        assert_eq!(l.serialize(), s);
    }

    #[test]
    fn bad_label_reports_line() {
        match CorpusLine::parse("2\tu\t1\ta", 17) {
            Err(Error::Parse { line, msg }) => {
                assert_eq!(line, 17);
                assert!(msg.contains("label"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_fields_and_timestamp() {
        assert!(CorpusLine::parse("1\tu", 1).is_err());
        assert!(CorpusLine::parse("1\tu\tnoon\ta", 1).is_err());
        assert!(CorpusLine::parse("1\tu\t1\ta\tb", 1).is_err());
        assert!(CorpusLine::parse("1\t\t1\ta", 1).is_err());
    }

    #[test]
    fn empty_tokens_parse_but_are_not_trainable() {
        let l = CorpusLine::parse("1\tu3\t5\t", 1).unwrap();
        assert!(l.tokens.is_empty());
        assert!(!l.is_trainable());
        assert_eq!(l.serialize(), "1\tu3\t5\t");
    }

    #[test]
    fn gzip_by_extension() {
        let dir = tempfile::tempdir().unwrap();
        let lines = vec![
            CorpusLine::parse("1\ta\t1\tx y", 1).unwrap(),
            CorpusLine::parse("-1\tb\t2\tz", 2).unwrap(),
        ];
        for name in ["c.tsv", "c.tsv.gz"] {
            let p = dir.path().join(name);
            write_corpus(&p, &lines).unwrap();
            assert_eq!(read_corpus(&p).unwrap(), lines);
        }
        let raw = std::fs::read(dir.path().join("c.tsv.gz")).unwrap();
        assert_eq!(&raw[..2], &[0x1f, 0x8b]);
    }
}
