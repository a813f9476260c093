use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::LazyLock;

use rayon::prelude::*;
use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{Book, BookId, BookKind, QaPair, Split, Tokenizer, DEFAULT_CHUNK_SIZE};
use crate::error::{Error, Result};

pub const DOCUMENTS_TABLE: &str = "documents.csv";
pub const QA_TABLE: &str = "qaps.csv";

#[derive(Debug, Clone)]
pub struct LoadOptions {
    pub chunk_size: usize,
    pub strip_boilerplate: bool,
    /// Only documents (and questions) from these splits are loaded; `None` loads all.
    pub splits: Option<Vec<Split>>,
    pub tokenizer: Tokenizer,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            chunk_size: DEFAULT_CHUNK_SIZE,
            strip_boilerplate: true,
            splits: None,
            tokenizer: Tokenizer::default(),
        }
    }
}

impl LoadOptions {
    fn wants(&self, split: Split) -> bool {
        self.splits.as_ref().is_none_or(|s| s.contains(&split))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BookLoadError {
    pub book_id: BookId,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub books: Vec<Book>,
    pub qa_pairs: Vec<QaPair>,
    pub errors: Vec<BookLoadError>,
    /// Questions dropped because their book failed to load.
    pub dropped_questions: usize,
    book_index: HashMap<BookId, usize>,
}

impl Dataset {
    pub fn new(books: Vec<Book>, qa_pairs: Vec<QaPair>) -> Self {
        let book_index = books.iter().enumerate().map(|(i, b)| (b.id.clone(), i)).collect();
        Dataset {
            books,
            qa_pairs,
            errors: Vec::new(),
            dropped_questions: 0,
            book_index,
        }
    }

    pub fn book(&self, id: &BookId) -> Option<&Book> {
        self.book_index.get(id).map(|&i| &self.books[i])
    }

    pub fn questions_in(&self, split: Split) -> impl Iterator<Item = &QaPair> {
        self.qa_pairs.iter().filter(move |q| q.split == split)
    }

    pub fn books_in(&self, split: Split) -> impl Iterator<Item = &Book> {
        let ids: std::collections::HashSet<&BookId> = self.questions_in(split).map(|q| &q.book_id).collect();
        self.books.iter().filter(move |b| ids.contains(&b.id))
    }
}

struct DocumentRow {
    id: BookId,
    split: Split,
    kind: BookKind,
    story_file: Option<String>,
    story_start: Option<String>,
    story_end: Option<String>,
}

/// Load a dataset directory holding `documents.csv`, `qaps.csv` and one story
/// file per document.
///
/// A story file that cannot be read is recorded in [`Dataset::errors`] and its
/// questions are dropped; a malformed table row aborts the load.
pub fn load_dataset(dir: &Path, opts: &LoadOptions) -> Result<Dataset> {
    if !dir.is_dir() {
        return Err(Error::io(
            dir,
            std::io::Error::new(std::io::ErrorKind::NotFound, "dataset directory not found"),
        ));
    }
    let docs = read_documents(&dir.join(DOCUMENTS_TABLE))?;
    let docs: Vec<DocumentRow> = docs.into_iter().filter(|d| opts.wants(d.split)).collect();

    let loaded: Vec<std::result::Result<Book, BookLoadError>> =
        docs.par_iter().map(|d| load_book(dir, d, opts)).collect();

    let mut books = Vec::new();
    let mut errors = Vec::new();
    for r in loaded {
        match r {
            Ok(b) => books.push(b),
            Err(e) => errors.push(e),
        }
    }

    let listed: HashMap<&BookId, ()> = docs.iter().map(|d| (&d.id, ())).collect();
    let raw_qa = read_qa(&dir.join(QA_TABLE))?;
    let mut dataset = Dataset::new(books, Vec::new());
    let mut unlisted: BTreeMap<BookId, usize> = BTreeMap::new();
    let mut ordinals: HashMap<BookId, usize> = HashMap::new();
    for row in raw_qa {
        let ordinal = ordinals.entry(row.book_id.clone()).or_insert(0);
        let id = format!("{}:{}", row.book_id, ordinal);
        *ordinal += 1;
        if !opts.wants(row.split) {
            continue;
        }
        if dataset.book(&row.book_id).is_none() {
            if !listed.contains_key(&row.book_id) {
                *unlisted.entry(row.book_id.clone()).or_insert(0) += 1;
            }
            dataset.dropped_questions += 1;
            continue;
        }
        let answers: Vec<&str> = row
            .answers
            .iter()
            .map(String::as_str)
            .filter(|a| !a.trim().is_empty())
            .collect();
        let tk = &opts.tokenizer;
        dataset.qa_pairs.push(QaPair {
            id,
            book_id: row.book_id,
            split: row.split,
            question: tk.tokenize(&row.question),
            question_text: row.question,
            answers: answers.iter().map(|a| tk.tokenize(a)).collect(),
            answer_texts: answers.iter().map(|a| a.to_string()).collect(),
        });
    }
    for (book_id, n) in unlisted {
        errors.push(BookLoadError {
            book_id,
            message: format!("referenced by {n} question(s) but not listed in {DOCUMENTS_TABLE}"),
        });
    }
    dataset.errors = errors;
    Ok(dataset)
}

fn open_table(path: &Path) -> Result<(csv::Reader<std::fs::File>, csv::StringRecord)> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let headers = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    Ok((rdr, headers))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let row = e.position().map(|p| p.line()).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::MalformedRow {
            path: path.to_path_buf(),
            row,
            message: format!("{other:?}"),
        },
    }
}

fn column(headers: &csv::StringRecord, path: &Path, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| Error::MalformedRow {
            path: path.to_path_buf(),
            row: 1,
            message: format!("missing column {name:?}"),
        })
}

fn optional_column(headers: &csv::StringRecord, name: &str) -> Option<usize> {
    headers.iter().position(|h| h.trim() == name)
}

fn field<'r>(rec: &'r csv::StringRecord, idx: usize, path: &Path, name: &str) -> Result<&'r str> {
    rec.get(idx).ok_or_else(|| Error::MalformedRow {
        path: path.to_path_buf(),
        row: rec.position().map(|p| p.line()).unwrap_or(0),
        message: format!("missing field {name:?}"),
    })
}

fn bad_value(rec: &csv::StringRecord, path: &Path, message: String) -> Error {
    Error::MalformedRow {
        path: path.to_path_buf(),
        row: rec.position().map(|p| p.line()).unwrap_or(0),
        message,
    }
}

fn parse_kind(s: &str) -> Option<BookKind> {
    match s.trim().to_ascii_lowercase().as_str() {
        "gutenberg" | "book" => Some(BookKind::Book),
        "movie" | "movie_script" | "script" => Some(BookKind::MovieScript),
        _ => None,
    }
}

fn read_documents(path: &Path) -> Result<Vec<DocumentRow>> {
    let (mut rdr, headers) = open_table(path)?;
    let id_col = column(&headers, path, "document_id")?;
    let set_col = column(&headers, path, "set")?;
    let kind_col = column(&headers, path, "kind")?;
    let file_col = optional_column(&headers, "story_file");
    let start_col = optional_column(&headers, "story_start");
    let end_col = optional_column(&headers, "story_end");

    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let id = field(&rec, id_col, path, "document_id")?.trim().to_string();
        if id.is_empty() {
            return Err(bad_value(&rec, path, "empty document_id".into()));
        }
        let set = field(&rec, set_col, path, "set")?;
        let split = Split::parse(set).ok_or_else(|| bad_value(&rec, path, format!("unknown set {set:?}")))?;
        let kind_s = field(&rec, kind_col, path, "kind")?;
        let kind = parse_kind(kind_s).ok_or_else(|| bad_value(&rec, path, format!("unknown kind {kind_s:?}")))?;
        let opt = |c: Option<usize>| {
            c.and_then(|c| rec.get(c))
                .map(str::to_string)
                .filter(|s| !s.trim().is_empty())
        };
        rows.push(DocumentRow {
            id: BookId(id),
            split,
            kind,
            story_file: opt(file_col),
            story_start: opt(start_col),
            story_end: opt(end_col),
        });
    }
    Ok(rows)
}

struct QaRow {
    book_id: BookId,
    split: Split,
    question: String,
    answers: Vec<String>,
}

fn read_qa(path: &Path) -> Result<Vec<QaRow>> {
    let (mut rdr, headers) = open_table(path)?;
    let id_col = column(&headers, path, "document_id")?;
    let set_col = column(&headers, path, "set")?;
    let q_col = column(&headers, path, "question")?;
    let a1_col = column(&headers, path, "answer1")?;
    let a2_col = optional_column(&headers, "answer2");

    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let set = field(&rec, set_col, path, "set")?;
        let split = Split::parse(set).ok_or_else(|| bad_value(&rec, path, format!("unknown set {set:?}")))?;
        let question = field(&rec, q_col, path, "question")?.to_string();
        if question.trim().is_empty() {
            return Err(bad_value(&rec, path, "empty question".into()));
        }
        let mut answers = vec![field(&rec, a1_col, path, "answer1")?.to_string()];
        if let Some(a2) = a2_col.and_then(|c| rec.get(c)) {
            answers.push(a2.to_string());
        }
        if answers.iter().all(|a| a.trim().is_empty()) {
            return Err(bad_value(&rec, path, "question has no answer".into()));
        }
        rows.push(QaRow {
            book_id: BookId(field(&rec, id_col, path, "document_id")?.trim().to_string()),
            split,
            question,
            answers,
        });
    }
    Ok(rows)
}

fn story_path(dir: &Path, doc: &DocumentRow) -> Option<PathBuf> {
    if let Some(f) = &doc.story_file {
        return Some(dir.join(f));
    }
    let id = doc.id.as_str();
    [
        format!("stories/{id}.content"),
        format!("tmp/{id}.content"),
        format!("stories/{id}.txt"),
    ]
    .into_iter()
    .map(|p| dir.join(p))
    .find(|p| p.is_file())
}

fn load_book(dir: &Path, doc: &DocumentRow, opts: &LoadOptions) -> std::result::Result<Book, BookLoadError> {
    let fail = |message: String| BookLoadError {
        book_id: doc.id.clone(),
        message,
    };
    let path = story_path(dir, doc).ok_or_else(|| fail("story file not found".into()))?;
    let bytes = std::fs::read(&path).map_err(|e| fail(format!("{}: {e}", path.display())))?;
    let raw = String::from_utf8_lossy(&bytes);
    let text = if opts.strip_boilerplate {
        strip_boilerplate(&raw, doc.story_start.as_deref(), doc.story_end.as_deref())
    } else {
        raw.into_owned()
    };
    let tokens = opts.tokenizer.tokenize(&text);
    Ok(Book::from_tokens(doc.id.clone(), doc.kind, tokens, opts.chunk_size))
}

static GUTENBERG_START: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?mi)^\s*\*\*\*\s*START OF (THE|THIS) PROJECT GUTENBERG[^\n]*$").unwrap());
static GUTENBERG_END: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?mi)^\s*\*\*\*\s*END OF (THE|THIS) PROJECT GUTENBERG[^\n]*$").unwrap());
static HTML_TAG: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?s)<[^>]*>").unwrap());
static HTML_MARKER: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)<\s*(html|body|pre|head)\b").unwrap());

/// Best-effort removal of distribution boilerplate.
///
/// When the documents table supplies the first and last words of the story,
/// the text is cut to that window. Otherwise Project Gutenberg start/end
/// markers are honored. HTML markup is stripped from documents that look
/// like HTML. Text that matches none of these patterns is returned unchanged.
pub fn strip_boilerplate(raw: &str, story_start: Option<&str>, story_end: Option<&str>) -> String {
    let mut text: &str = raw;
    let html;
    if HTML_MARKER.is_match(text) {
        html = decode_entities(&HTML_TAG.replace_all(text, " "));
        text = &html;
    }

    if let (Some(start), Some(end)) = (story_start, story_end) {
        let (start, end) = (start.trim(), end.trim());
        if let Some(s) = text.find(start) {
            if let Some(e) = text.rfind(end).filter(|&e| e >= s) {
                return text[s..e + end.len()].to_string();
            }
        }
    }

    let from = GUTENBERG_START.find(text).map_or(0, |m| m.end());
    let to = GUTENBERG_END.find_at(text, from).map_or(text.len(), |m| m.start());
    text[from..to].to_string()
}

fn decode_entities(s: &str) -> String {
    s.replace("&nbsp;", " ")
        .replace("&lt;", "<")
        .replace("&gt;", ">")
        .replace("&quot;", "\"")
        .replace("&#39;", "'")
        .replace("&amp;", "&")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gutenberg_markers() {
        let raw = "Header junk\n*** START OF THIS PROJECT GUTENBERG EBOOK FOO ***\nCall me Ishmael.\n*** END OF THIS PROJECT GUTENBERG EBOOK FOO ***\nLicense";
        assert_eq!(strip_boilerplate(raw, None, None).trim(), "Call me Ishmael.");
    }

    #[test]
    fn story_window() {
        let raw = "preface. Call me Ishmael. The end. appendix";
        assert_eq!(
            strip_boilerplate(raw, Some("Call me"), Some("The end.")),
            "Call me Ishmael. The end."
        );
    }

    #[test]
    fn html_is_stripped() {
        let raw = "<html><body><pre>INT. HOUSE &amp; GARDEN</pre></body></html>";
        assert_eq!(strip_boilerplate(raw, None, None).trim(), "INT. HOUSE & GARDEN");
    }

    #[test]
    fn plain_text_untouched() {
        assert_eq!(strip_boilerplate("just text", None, None), "just text");
    }

    #[test]
    fn kinds() {
        assert_eq!(parse_kind("gutenberg"), Some(BookKind::Book));
        assert_eq!(parse_kind("movie"), Some(BookKind::MovieScript));
        assert_eq!(parse_kind("poem"), None);
    }
}
