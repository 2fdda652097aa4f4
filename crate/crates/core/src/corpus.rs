//! Documents, corpora and ingestion.

use std::collections::HashSet;
use std::fmt;
use std::ops::Range;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::tagger::{self, TagSequence, Tagger};
use crate::tokenize::token_spans;
use crate::{Error, Result};

/// One text unit with its tokenization and optional POS tags.
#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    id: String,
    text: String,
    tokens: Vec<String>,
    spans: Vec<Range<usize>>,
    tags: Option<TagSequence>,
}

impl Document {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        let text = text.into();
        let spans = token_spans(&text);
        let tokens = spans.iter().map(|r| text[r.clone()].to_string()).collect();
        Self {
            id: id.into(),
            text,
            tokens,
            spans,
            tags: None,
        }
    }

    /// Builds a document from a whitespace-separated `token/TAG` line. The
    /// text becomes the tokens joined by single spaces.
    pub fn from_pretagged(id: impl Into<String>, line: &str) -> Result<Self> {
        let (tokens, tags) = tagger::parse_pretagged(line)?;
        let mut text = String::new();
        let mut spans = Vec::with_capacity(tokens.len());
        for tok in &tokens {
            if !text.is_empty() {
                text.push(' ');
            }
            spans.push(text.len()..text.len() + tok.len());
            text.push_str(tok);
        }
        Ok(Self {
            id: id.into(),
            text,
            tokens,
            spans,
            tags: Some(TagSequence::new(tags, tagger::PRETAGGED_ID)),
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tags(&self) -> Option<&TagSequence> {
        self.tags.as_ref()
    }

    /// Byte range of token `i` inside [`Document::text`].
    pub fn token_span(&self, i: usize) -> Range<usize> {
        self.spans[i].clone()
    }

    /// Original text covering tokens `start..end`.
    pub fn surface(&self, start: usize, end: usize) -> &str {
        if start >= end {
            return "";
        }
        &self.text[self.spans[start].start..self.spans[end - 1].end]
    }

    /// Character (Unicode scalar) offsets covering tokens `start..end`.
    pub fn char_span(&self, start: usize, end: usize) -> Range<usize> {
        if start >= end {
            return 0..0;
        }
        let b0 = self.spans[start].start;
        let b1 = self.spans[end - 1].end;
        let c0 = self.text[..b0].chars().count();
        c0..c0 + self.text[b0..b1].chars().count()
    }

    /// A copy with tags attached. Fails if the tag count differs from the
    /// token count.
    pub fn with_tags(&self, tags: TagSequence) -> Result<Self> {
        if tags.len() != self.tokens.len() {
            return Err(Error::TagLengthMismatch {
                expected: self.tokens.len(),
                found: tags.len(),
            });
        }
        Ok(Self {
            tags: Some(tags),
            ..self.clone()
        })
    }

    /// A copy holding only the first `len` tokens; the text is cut right
    /// after the last kept token.
    pub fn truncated(&self, len: usize) -> Self {
        if len >= self.tokens.len() {
            return self.clone();
        }
        let end = if len == 0 { 0 } else { self.spans[len - 1].end };
        Self {
            id: self.id.clone(),
            text: self.text[..end].to_string(),
            tokens: self.tokens[..len].to_vec(),
            spans: self.spans[..len].to_vec(),
            tags: self.tags.as_ref().map(|t| t.truncated(len)),
        }
    }
}

/// Input file layouts understood by [`Corpus::load`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    /// One document per line.
    Lines,
    /// One JSON object per line.
    Jsonl,
    /// CSV with a header row.
    Csv,
    /// Whitespace-separated `token/TAG` pairs, one document per line.
    Pretagged,
}

impl Format {
    /// Guess from the file extension; anything unknown is `Lines`.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("ndjson") => Format::Jsonl,
            Some("csv") => Format::Csv,
            _ => Format::Lines,
        }
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lines" | "txt" | "text" => Ok(Format::Lines),
            "jsonl" | "ndjson" => Ok(Format::Jsonl),
            "csv" => Ok(Format::Csv),
            "pretagged" => Ok(Format::Pretagged),
            other => Err(Error::InvalidParameter(format!("unknown format `{other}`"))),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Lines => "lines",
            Format::Jsonl => "jsonl",
            Format::Csv => "csv",
            Format::Pretagged => "pretagged",
        })
    }
}

/// Where a corpus came from and how it was read.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Source {
    pub path: Option<String>,
    pub format: Option<Format>,
    pub field: Option<String>,
    /// Set on derived views, e.g. `truncated`.
    pub derived: Option<String>,
}

/// Ordered, immutable collection of documents.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    documents: Arc<Vec<Document>>,
    source: Source,
}

const DEFAULT_FIELD: &str = "text";

impl Corpus {
    /// Validates id uniqueness and rejects corpora with no tokens at all.
    pub fn new(documents: Vec<Document>, source: Source) -> Result<Self> {
        if documents.iter().all(Document::is_empty) {
            return Err(Error::EmptyCorpus);
        }
        let mut seen = HashSet::with_capacity(documents.len());
        for d in &documents {
            if !seen.insert(d.id.as_str()) {
                return Err(Error::DuplicateId(d.id.clone()));
            }
        }
        Ok(Self {
            documents: Arc::new(documents),
            source,
        })
    }

    /// Ids are the zero-based positions.
    pub fn from_texts<I, S>(texts: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let docs = texts
            .into_iter()
            .enumerate()
            .map(|(i, t)| Document::new(i.to_string(), t))
            .collect();
        Self::new(docs, Source::default())
    }

    pub fn load(path: impl AsRef<Path>, format: Format, field: Option<&str>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut corpus = Self::parse(&bytes, format, field)?;
        corpus.source.path = Some(path.display().to_string());
        Ok(corpus)
    }

    /// Parses an in-memory file body.
    pub fn parse(bytes: &[u8], format: Format, field: Option<&str>) -> Result<Self> {
        let text = std::str::from_utf8(bytes).map_err(|_| Error::NotUtf8)?;
        let text = text.strip_prefix('\u{feff}').unwrap_or(text);
        let field_name = field.unwrap_or(DEFAULT_FIELD);
        let docs = match format {
            Format::Lines => text
                .lines()
                .enumerate()
                .map(|(i, l)| Document::new(i.to_string(), l))
                .collect(),
            Format::Pretagged => text
                .lines()
                .enumerate()
                .map(|(i, l)| Document::from_pretagged(i.to_string(), l))
                .collect::<Result<_>>()?,
            Format::Jsonl => parse_jsonl(text, field_name)?,
            Format::Csv => parse_csv(text, field_name)?,
        };
        let source = Source {
            path: None,
            format: Some(format),
            field: matches!(format, Format::Jsonl | Format::Csv).then(|| field_name.to_string()),
            derived: None,
        };
        Self::new(docs, source)
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn source(&self) -> &Source {
        &self.source
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.documents.iter().map(|d| d.id.as_str())
    }

    pub fn get(&self, id: &str) -> Option<&Document> {
        self.documents.iter().find(|d| d.id == id)
    }

    pub fn total_tokens(&self) -> usize {
        self.documents.iter().map(Document::len).sum()
    }

    /// A new corpus with the same provenance plus a derivation note.
    pub fn derive(&self, documents: Vec<Document>, note: &str) -> Result<Self> {
        let mut source = self.source.clone();
        source.derived = Some(match source.derived {
            Some(prev) if prev == note || prev.ends_with(&format!("+{note}")) => prev,
            Some(prev) => format!("{prev}+{note}"),
            None => note.to_string(),
        });
        Self::new(documents, source)
    }

    /// A copy where every document carries tags from `tagger`. Documents
    /// that already carry tags are re-tagged unless the tagger is the
    /// pretagged pass-through.
    pub fn tagged(&self, tagger: &Tagger) -> Result<Self> {
        let docs = self
            .documents
            .iter()
            .map(|d| d.with_tags(tagger.tag_document(d)?))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            documents: Arc::new(docs),
            source: self.source.clone(),
        })
    }

    /// True when every document carries tags.
    pub fn is_tagged(&self) -> bool {
        self.documents.iter().all(|d| d.tags.is_some())
    }
}

fn parse_jsonl(text: &str, field: &str) -> Result<Vec<Document>> {
    let mut docs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value =
            serde_json::from_str(line).map_err(|e| Error::Malformed {
                line: line_no,
                message: e.to_string(),
            })?;
        let obj = value.as_object().ok_or_else(|| Error::Malformed {
            line: line_no,
            message: "expected a JSON object".into(),
        })?;
        let text = match obj.get(field) {
            None => {
                return Err(Error::MissingField {
                    field: field.to_string(),
                    line: line_no,
                })
            }
            Some(serde_json::Value::String(s)) => s.clone(),
            Some(_) => {
                return Err(Error::Malformed {
                    line: line_no,
                    message: format!("field `{field}` is not a string"),
                })
            }
        };
        let id = match obj.get("id") {
            Some(serde_json::Value::String(s)) => s.clone(),
            Some(serde_json::Value::Number(n)) => n.to_string(),
            _ => docs.len().to_string(),
        };
        docs.push(Document::new(id, text));
    }
    Ok(docs)
}

fn parse_csv(text: &str, field: &str) -> Result<Vec<Document>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::Malformed {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    let text_col = headers
        .iter()
        .position(|h| h == field)
        .ok_or_else(|| Error::MissingField {
            field: field.to_string(),
            line: 1,
        })?;
    let id_col = headers.iter().position(|h| h == "id");
    let mut docs = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Malformed {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let text = record.get(text_col).ok_or_else(|| Error::MissingField {
            field: field.to_string(),
            line,
        })?;
        let id = id_col
            .and_then(|c| record.get(c))
            .map(str::to_string)
            .unwrap_or_else(|| docs.len().to_string());
        docs.push(Document::new(id, text));
    }
    Ok(docs)
}

/// An ordered run of `n` tokens (or tags).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NGram(Vec<String>);

impl NGram {
    pub fn new(items: Vec<String>) -> Self {
        Self(items)
    }

    pub fn items(&self) -> &[String] {
        &self.0
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }
}

impl fmt::Display for NGram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join(" "))
    }
}

/// All contiguous `n`-grams of `tokens`, with multiplicity.
pub fn ngrams<S: AsRef<str>>(tokens: &[S], n: usize) -> Result<Vec<NGram>> {
    if n < 1 {
        return Err(Error::InvalidParameter("n-gram length must be >= 1".into()));
    }
    Ok(tokens
        .windows(n)
        .map(|w| NGram(w.iter().map(|t| t.as_ref().to_string()).collect()))
        .collect())
}

/// Document texts joined by single newlines.
pub fn concat(corpus: &Corpus) -> String {
    let docs = corpus.documents();
    let mut out = String::with_capacity(docs.iter().map(|d| d.text.len() + 1).sum());
    for (i, d) in docs.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(&d.text);
    }
    out
}

/// Mean token count per document.
pub fn avg_length(corpus: &Corpus) -> f64 {
    corpus.total_tokens() as f64 / corpus.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lines_get_positional_ids() {
        let c = Corpus::parse(b"one\ntwo two\nthree\n", Format::Lines, None).unwrap();
        assert_eq!(c.ids().collect::<Vec<_>>(), ["0", "1", "2"]);
        assert_eq!(c.documents()[1].tokens(), ["two", "two"]);
    }

    #[test]
    fn bom_is_stripped() {
        let c = Corpus::parse("\u{feff}hello\nworld".as_bytes(), Format::Lines, None).unwrap();
        assert_eq!(c.documents()[0].text(), "hello");
    }

    #[test]
    fn jsonl_uses_explicit_ids_and_field() {
        let body = br#"{"id": "a", "body": "x y"}
{"body": "z"}
"#;
        let c = Corpus::parse(body, Format::Jsonl, Some("body")).unwrap();
        assert_eq!(c.ids().collect::<Vec<_>>(), ["a", "1"]);
        assert_eq!(c.source().field.as_deref(), Some("body"));
    }

    #[test]
    fn jsonl_errors_carry_line_numbers() {
        let err = Corpus::parse(b"{\"text\": \"ok\"}\n{oops\n", Format::Jsonl, None).unwrap_err();
        assert!(matches!(err, Error::Malformed { line: 2, .. }), "{err}");
        let err =
            Corpus::parse(b"{\"text\": \"ok\"}\n{\"t\": 1}\n", Format::Jsonl, None).unwrap_err();
        assert!(matches!(err, Error::MissingField { line: 2, .. }), "{err}");
    }

    #[test]
    fn csv_missing_column_names_it() {
        let err = Corpus::parse(b"id,body\n0,hi\n", Format::Csv, Some("text")).unwrap_err();
        match err {
            Error::MissingField { field, .. } => assert_eq!(field, "text"),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn csv_reads_column() {
        let c = Corpus::parse(b"id,text\nq1,\"a, b\"\nq2,c\n", Format::Csv, None).unwrap();
        assert_eq!(c.ids().collect::<Vec<_>>(), ["q1", "q2"]);
        assert_eq!(c.documents()[0].text(), "a, b");
    }

    #[test]
    fn empty_and_all_empty_corpora_rejected() {
        assert!(matches!(
            Corpus::parse(b"", Format::Lines, None),
            Err(Error::EmptyCorpus)
        ));
        assert!(matches!(
            Corpus::parse(b"\n \n", Format::Lines, None),
            Err(Error::EmptyCorpus)
        ));
        // an empty document among others is fine
        let c = Corpus::parse(b"a\n\nb", Format::Lines, None).unwrap();
        assert_eq!(c.len(), 3);
    }

    #[test]
    fn duplicate_ids_rejected() {
        let body = b"{\"id\": 1, \"text\": \"a\"}\n{\"id\": 1, \"text\": \"b\"}\n";
        assert!(matches!(
            Corpus::parse(body, Format::Jsonl, None),
            Err(Error::DuplicateId(_))
        ));
    }

    #[test]
    fn ngram_examples() {
        let t = ["a", "b", "c"];
        let g = ngrams(&t, 2).unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g[0].items(), ["a", "b"]);
        assert!(ngrams(&["a", "b"], 4).unwrap().is_empty());
        let g = ngrams(&["a", "a", "a"], 2).unwrap();
        assert_eq!(g, vec![NGram::new(vec!["a".into(), "a".into()]); 2]);
        assert!(ngrams(&t, 0).is_err());
    }

    #[test]
    fn concat_and_avg_length() {
        let c = Corpus::from_texts(["ab", "cd"]).unwrap();
        assert_eq!(concat(&c), "ab\ncd");
        let one = Corpus::from_texts(["only one"]).unwrap();
        assert_eq!(concat(&one), "only one");
        let c = Corpus::from_texts(["a b c d", "a b c d e f"]).unwrap();
        assert_eq!(avg_length(&c), 5.0);
        let c = Corpus::from_texts(["a b c d e f g"]).unwrap();
        assert_eq!(avg_length(&c), 7.0);
    }

    #[test]
    fn truncation_cuts_text_after_last_token() {
        let d = Document::new("0", "Hello, big world!");
        let t = d.truncated(3);
        assert_eq!(t.text(), "Hello, big");
        assert_eq!(t.tokens(), ["Hello", ",", "big"]);
        assert_eq!(d.truncated(10), d);
    }

    #[test]
    fn char_span_counts_scalars() {
        let d = Document::new("0", "né dog runs");
        assert_eq!(d.char_span(1, 3), 3..11);
        assert_eq!(d.surface(1, 3), "dog runs");
    }
}
