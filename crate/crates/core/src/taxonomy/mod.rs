//! Question and answer type schema for the human study, annotation files,
//! agreement statistics and per-type score breakdowns.

mod agreement;

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::Path;
use std::sync::{Arc, LazyLock};

use serde::{Deserialize, Serialize};

use crate::corpus::QaPair;
use crate::error::{Error, Result};
use crate::metrics::normalize_answer;

pub use agreement::{decompose, fleiss_kappa, majority_labels, simple_agreement, Decomposition, DecompositionRow};

/// Lowercase and keep only letters and digits.
fn squash(label: &str) -> String {
    label
        .chars()
        .filter(|c| c.is_alphanumeric())
        .flat_map(char::to_lowercase)
        .collect()
}

macro_rules! label_enum {
    ($name:ident { $($variant:ident => $text:literal [$($alias:literal),*]),+ $(,)? }) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        #[serde(rename_all = "snake_case")]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }

            /// Case-insensitive; spaces, underscores, hyphens and slashes are ignored.
            pub fn parse(s: &str) -> Option<$name> {
                let k = squash(s);
                $(
                    if k == squash($text) $(|| k == $alias)* {
                        return Some($name::$variant);
                    }
                )+
                None
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }
    };
}

label_enum!(SuClass {
    Concept => "concept" [],
    Event => "event" [],
    Attribute => "attribute" [],
});

label_enum!(SuSubtype {
    Entity => "entity" ["namedentity"],
    CommonNounPhrase => "common_noun_phrase" ["nounphrase", "commonnoun"],
    BookSpecific => "book_specific" ["bookspecificconcept"],
    EventExpression => "event_expression" [],
    EventName => "event_name" [],
    State => "state" [],
    Numeric => "numeric" ["number"],
    Description => "description" [],
    BookAttribute => "book_attribute" [],
});

label_enum!(QuestionType {
    RelationBetweenConcepts => "relation_between_concepts" ["relationbwconcepts"],
    AttributeOfConcept => "attribute_of_concept" [],
    EventArgumentConcept => "event_argument_concept" [],
    EventArgumentAttribute => "event_argument_attribute" [],
    EventTrigger => "event_trigger" [],
    CausalRelation => "causal_relation" [],
    TemporalRelation => "temporal_relation" [],
    NestedRelation => "nested_relation" [],
    BookAttribute => "book_attribute" [],
});

impl SuSubtype {
    pub fn class(self) -> SuClass {
        use SuSubtype::*;
        match self {
            Entity | CommonNounPhrase | BookSpecific => SuClass::Concept,
            EventExpression | EventName => SuClass::Event,
            State | Numeric | Description | BookAttribute => SuClass::Attribute,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annotation {
    pub question_id: String,
    pub annotator_id: String,
    pub question_type: QuestionType,
    pub su_class: SuClass,
    pub su_subtype: SuSubtype,
}

/// Which annotation column a statistic is computed over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnnotationField {
    QuestionType,
    SuClass,
    SuSubtype,
}

impl AnnotationField {
    pub const ALL: [AnnotationField; 3] = [
        AnnotationField::QuestionType,
        AnnotationField::SuClass,
        AnnotationField::SuSubtype,
    ];

    pub fn parse(s: &str) -> Option<AnnotationField> {
        match squash(s).as_str() {
            "questiontype" | "question" => Some(AnnotationField::QuestionType),
            "suclass" | "sutype" | "class" => Some(AnnotationField::SuClass),
            "susubtype" | "subtype" => Some(AnnotationField::SuSubtype),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AnnotationField::QuestionType => "question_type",
            AnnotationField::SuClass => "su_class",
            AnnotationField::SuSubtype => "su_subtype",
        }
    }

    pub fn label(self, a: &Annotation) -> &'static str {
        match self {
            AnnotationField::QuestionType => a.question_type.as_str(),
            AnnotationField::SuClass => a.su_class.as_str(),
            AnnotationField::SuSubtype => a.su_subtype.as_str(),
        }
    }

    /// Every label of the field in schema order.
    pub fn labels(self) -> Vec<&'static str> {
        match self {
            AnnotationField::QuestionType => QuestionType::ALL.iter().map(|l| l.as_str()).collect(),
            AnnotationField::SuClass => SuClass::ALL.iter().map(|l| l.as_str()).collect(),
            AnnotationField::SuSubtype => SuSubtype::ALL.iter().map(|l| l.as_str()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowError {
    pub line: u64,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AnnotationSet {
    pub records: Vec<Annotation>,
    pub row_errors: Vec<RowError>,
}

pub const ANNOTATION_COLUMNS: [&str; 5] = ["question_id", "annotator_id", "question_type", "su_class", "su_subtype"];

/// Read an annotation CSV. Rows with unknown labels, or a subtype outside its
/// class, are collected as row errors; a repeated (question, annotator) pair
/// fails the whole load. An empty `su_class` is derived from the subtype.
pub fn load_annotations(path: &Path) -> Result<AnnotationSet> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let mut cols = [0usize; 5];
    for (slot, name) in cols.iter_mut().zip(ANNOTATION_COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MalformedRow {
                path: path.to_path_buf(),
                row: 1,
                message: format!("missing column {name}"),
            })?;
    }
    let mut set = AnnotationSet::default();
    let mut seen: HashSet<(String, String)> = HashSet::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let field = |i: usize| rec.get(cols[i]).unwrap_or("");
        let parsed = (|| -> std::result::Result<Annotation, String> {
            let question_type =
                QuestionType::parse(field(2)).ok_or_else(|| format!("unknown question type {:?}", field(2)))?;
            let su_subtype = SuSubtype::parse(field(4)).ok_or_else(|| format!("unknown SU subtype {:?}", field(4)))?;
            let su_class = if field(3).is_empty() {
                su_subtype.class()
            } else {
                SuClass::parse(field(3)).ok_or_else(|| format!("unknown SU class {:?}", field(3)))?
            };
            if su_subtype.class() != su_class {
                return Err(format!("subtype {su_subtype} does not belong to class {su_class}"));
            }
            if field(0).is_empty() || field(1).is_empty() {
                return Err("empty question or annotator id".into());
            }
            Ok(Annotation {
                question_id: field(0).to_string(),
                annotator_id: field(1).to_string(),
                question_type,
                su_class,
                su_subtype,
            })
        })();
        match parsed {
            Ok(a) => {
                if !seen.insert((a.question_id.clone(), a.annotator_id.clone())) {
                    return Err(Error::Duplicate(format!(
                        "{}: line {line}: question {} annotated twice by {}",
                        path.display(),
                        a.question_id,
                        a.annotator_id
                    )));
                }
                set.records.push(a);
            }
            Err(message) => set.row_errors.push(RowError { line, message }),
        }
    }
    Ok(set)
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let row = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::MalformedRow {
            path: path.to_path_buf(),
            row,
            message: format!("{other:?}"),
        },
    }
}

/// Normalized verb forms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerbLexicon {
    words: HashSet<String>,
}

static BUNDLED_VERBS: LazyLock<Arc<VerbLexicon>> =
    LazyLock::new(|| Arc::new(VerbLexicon::parse(include_str!("../../data/verbs.txt"))));

impl VerbLexicon {
    pub fn bundled() -> Arc<VerbLexicon> {
        BUNDLED_VERBS.clone()
    }

    /// One word per line; `#` starts a comment line.
    pub fn parse(text: &str) -> Self {
        VerbLexicon {
            words: text
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(str::to_lowercase)
                .collect(),
        }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        std::fs::read_to_string(path)
            .map(|t| Self::parse(&t))
            .map_err(|e| Error::io(path, e))
    }

    pub fn from_words<I: IntoIterator<Item = S>, S: Into<String>>(words: I) -> Self {
        VerbLexicon {
            words: words.into_iter().map(|w| w.into().to_lowercase()).collect(),
        }
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Questions with at least one reference answer containing a lexicon verb.
pub fn event_answer_subset<'a>(qa_pairs: &'a [QaPair], lexicon: &VerbLexicon) -> Result<Vec<&'a QaPair>> {
    if lexicon.is_empty() {
        return Err(Error::invalid("verb lexicon is empty"));
    }
    Ok(qa_pairs
        .iter()
        .filter(|q| {
            q.answer_texts
                .iter()
                .any(|a| normalize_answer(a).iter().any(|w| lexicon.contains(w)))
        })
        .collect())
}

/// Count of records per label, for summaries.
pub fn label_counts(records: &[Annotation], field: AnnotationField) -> HashMap<&'static str, usize> {
    let mut out = HashMap::new();
    for r in records {
        *out.entry(field.label(r)).or_insert(0) += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{BookId, Split};

    #[test]
    fn schema_grouping() {
        assert_eq!(SuSubtype::ALL.len(), 9);
        assert_eq!(QuestionType::ALL.len(), 9);
        let count = |c| SuSubtype::ALL.iter().filter(|s| s.class() == c).count();
        assert_eq!(
            (
                count(SuClass::Concept),
                count(SuClass::Event),
                count(SuClass::Attribute)
            ),
            (3, 2, 4)
        );
    }

    #[test]
    fn label_parsing() {
        assert_eq!(
            QuestionType::parse("Causal Relation"),
            Some(QuestionType::CausalRelation)
        );
        assert_eq!(
            QuestionType::parse("event-argument_CONCEPT"),
            Some(QuestionType::EventArgumentConcept)
        );
        assert_eq!(
            QuestionType::parse("Relation b/w Concepts"),
            Some(QuestionType::RelationBetweenConcepts)
        );
        assert_eq!(
            SuSubtype::parse("Common Noun Phrase"),
            Some(SuSubtype::CommonNounPhrase)
        );
        assert_eq!(QuestionType::parse("casual relation"), None);
        for q in QuestionType::ALL {
            assert_eq!(QuestionType::parse(q.as_str()), Some(*q));
        }
    }

    fn write(rows: &str) -> (tempfile::TempDir, std::path::PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("ann.csv");
        std::fs::write(&p, format!("{}\n{rows}", ANNOTATION_COLUMNS.join(","))).unwrap();
        (dir, p)
    }

    #[test]
    fn load_with_row_errors() {
        let (_d, p) = write(
            "q1,a,causal relation,event,event expression\n\
             q1,b,casual relation,event,event expression\n\
             q2,a,event trigger,,state\n\
             q3,a,event trigger,concept,state\n",
        );
        let set = load_annotations(&p).unwrap();
        assert_eq!(set.records.len(), 2);
        assert_eq!(set.records[1].su_class, SuClass::Attribute);
        assert_eq!(set.row_errors.len(), 2);
        assert_eq!(set.row_errors[0].line, 3);
        assert!(set.row_errors[0].message.contains("casual relation"));
    }

    #[test]
    fn duplicate_pair_fails() {
        let (_d, p) = write("q1,a,event trigger,event,event name\nq1,a,event trigger,event,event name\n");
        assert!(matches!(load_annotations(&p), Err(Error::Duplicate(_))));
    }

    #[test]
    fn event_subset() {
        let qa = |id: &str, a: &[&str]| QaPair::new(id, BookId::from("b"), Split::Valid, "q?", a);
        let pairs = vec![qa("1", &["he sets it on fire", "fire"]), qa("2", &["Brenda", "Italy"])];
        let lex = VerbLexicon::from_words(["sets"]);
        let kept = event_answer_subset(&pairs, &lex).unwrap();
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].id, "1");
        assert!(event_answer_subset(&pairs, &VerbLexicon::from_words(Vec::<String>::new())).is_err());
        let bundled = VerbLexicon::bundled();
        assert!(bundled.contains("sets") && !bundled.contains("brenda"));
        assert_eq!(event_answer_subset(&pairs, &bundled).unwrap().len(), 1);
    }
}
