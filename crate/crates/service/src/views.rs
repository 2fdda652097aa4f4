use divkit_core::{Corpus, Document, ExactMatchIndex, PatternIndex};
use serde::Serialize;

#[derive(Debug, Serialize)]
pub struct Span {
    pub doc: String,
    /// Token offsets, end exclusive.
    pub start: usize,
    pub end: usize,
    /// Character (Unicode scalar) offsets into the document text.
    pub char_start: usize,
    pub char_end: usize,
    pub text: String,
}

fn span(doc: &Document, start: usize, end: usize) -> Span {
    let chars = doc.char_span(start, end);
    Span {
        doc: doc.id().to_string(),
        start,
        end,
        char_start: chars.start,
        char_end: chars.end,
        text: doc.surface(start, end).to_string(),
    }
}

#[derive(Debug, Serialize)]
pub struct PatternView {
    pub pattern: Vec<String>,
    pub key: String,
    pub doc_count: usize,
    pub frequency: usize,
    pub occurrences: Vec<Span>,
}

#[derive(Debug, Serialize)]
pub struct PatternsResponse {
    pub n: usize,
    pub top_n: usize,
    pub min_docs: usize,
    pub tagger: String,
    pub patterns: Vec<PatternView>,
}

pub fn patterns(corpus: &Corpus, index: &PatternIndex) -> PatternsResponse {
    PatternsResponse {
        n: index.n,
        top_n: index.top_n,
        min_docs: index.min_docs,
        tagger: index.tagger.clone(),
        patterns: index
            .patterns
            .iter()
            .map(|e| PatternView {
                pattern: e.pattern.clone(),
                key: e.key(),
                doc_count: e.doc_count,
                frequency: e.frequency(),
                occurrences: e
                    .occurrences
                    .iter()
                    .map(|o| {
                        span(
                            corpus.get(&o.doc).expect("index built from this corpus"),
                            o.start,
                            o.end,
                        )
                    })
                    .collect(),
            })
            .collect(),
    }
}

#[derive(Debug, Serialize)]
pub struct DocumentHits {
    pub doc: String,
    pub text: String,
    pub spans: Vec<Span>,
}

#[derive(Debug, Serialize)]
pub struct ExactView {
    /// Surface form of the first occurrence.
    pub text: String,
    pub tokens: Vec<String>,
    pub doc_count: usize,
    pub frequency: usize,
    pub documents: Vec<DocumentHits>,
}

#[derive(Debug, Serialize)]
pub struct ExactResponse {
    pub n: usize,
    pub min_docs: usize,
    pub entries: Vec<ExactView>,
}

pub fn exact(corpus: &Corpus, index: &ExactMatchIndex) -> ExactResponse {
    let entries = index
        .patterns
        .iter()
        .map(|e| {
            let mut documents: Vec<DocumentHits> = Vec::new();
            for o in &e.occurrences {
                let doc = corpus.get(&o.doc).expect("index built from this corpus");
                // occurrences arrive grouped by document
                if documents.last().map(|d| d.doc.as_str()) != Some(doc.id()) {
                    documents.push(DocumentHits {
                        doc: doc.id().to_string(),
                        text: doc.text().to_string(),
                        spans: Vec::new(),
                    });
                }
                documents
                    .last_mut()
                    .unwrap()
                    .spans
                    .push(span(doc, o.start, o.end));
            }
            ExactView {
                text: e
                    .occurrences
                    .first()
                    .map(|o| o.text.clone())
                    .unwrap_or_default(),
                tokens: e.pattern.clone(),
                doc_count: e.doc_count,
                frequency: e.frequency(),
                documents,
            }
        })
        .collect();
    ExactResponse {
        n: index.n,
        min_docs: index.min_docs,
        entries,
    }
}

#[derive(Debug, Serialize)]
pub struct DocumentView {
    pub id: String,
    pub text: String,
    pub tokens: usize,
}

pub fn documents(corpus: &Corpus) -> Vec<DocumentView> {
    corpus
        .documents()
        .iter()
        .map(|d| DocumentView {
            id: d.id().to_string(),
            text: d.text().to_string(),
            tokens: d.len(),
        })
        .collect()
}
