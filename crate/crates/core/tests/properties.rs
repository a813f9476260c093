mod common;

use std::collections::HashSet;

use bookqa_core::corpus::{build_corpus_stats, join_tokens, tokenize, Book, BookId, BookKind, QaPair, Split};
use bookqa_core::evalharness::{coverage, evaluate_predictions, score_answer, Prediction};
use bookqa_core::hardem::{e_step, planted_corpus, LexicalScorer, PlantedConfig, ReaderScorer, ScoreRequest};
use bookqa_core::ict::ict_softmax;
use bookqa_core::index::{build_index, build_indexes, QueryOptions};
use bookqa_core::metrics::{em, f1, rouge_l, ExampleScores};
use bookqa_core::taxonomy::{
    decompose, event_answer_subset, fleiss_kappa, Annotation, AnnotationField, QuestionType, SuSubtype, VerbLexicon,
};
use proptest::prelude::*;

const VOCAB: [&str; 8] = ["whale", "ship", "sea", "storm", "the", "harbor", "lamp", "rope"];

fn words(max: usize) -> impl Strategy<Value = Vec<&'static str>> {
    prop::collection::vec(prop::sample::select(&VOCAB[..]), 1..max)
}

/// A book of `n` passages with exactly `chunk` word tokens each.
fn book_of(passages: &[Vec<&str>], chunk: usize) -> Book {
    let text: Vec<&str> = passages.iter().flat_map(|p| p.iter().copied()).collect();
    Book::from_text("b", BookKind::Book, &text.join(" "), chunk)
}

fn passages(chunk: usize) -> impl Strategy<Value = Vec<Vec<&'static str>>> {
    prop::collection::vec(prop::collection::vec(prop::sample::select(&VOCAB[..]), chunk), 2..8)
}

const QTYPES: [QuestionType; 4] = [
    QuestionType::CausalRelation,
    QuestionType::EventTrigger,
    QuestionType::AttributeOfConcept,
    QuestionType::NestedRelation,
];

fn ann(q: usize, rater: usize, t: usize) -> Annotation {
    Annotation {
        question_id: format!("q{q}"),
        annotator_id: format!("r{rater}"),
        question_type: QTYPES[t],
        su_class: SuSubtype::Entity.class(),
        su_subtype: SuSubtype::Entity,
    }
}

/// Reader whose scores are a strictly increasing transform of the lexical scorer's.
struct Transformed;

impl ReaderScorer for Transformed {
    fn score_batch(&self, requests: &[ScoreRequest]) -> bookqa_core::Result<Vec<f64>> {
        let base = LexicalScorer.score_batch(requests)?;
        Ok(base.into_iter().map(|s| (3.0 * s).exp() * 2.0 + 7.0).collect())
    }
}

proptest! {
    #[test]
    fn tokenizing_tokenized_text_is_stable(text in "[a-zA-Z .,;'!?\"()-]{0,60}") {
        let once = tokenize(&text);
        let twice = tokenize(&join_tokens(&once));
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn word_counts_add_up_over_books(a in passages(4), b in passages(4)) {
        let books = vec![
            Book::from_tokens(BookId::from("a"), BookKind::Book, book_of(&a, 4).tokens, 4),
            Book::from_tokens(BookId::from("b"), BookKind::Book, book_of(&b, 4).tokens, 4),
        ];
        let stats = build_corpus_stats(&books).unwrap();
        for w in VOCAB {
            let sum: u64 = books.iter().map(|bk| stats.book_count(w, &bk.id)).sum();
            prop_assert_eq!(sum, stats.count(w));
        }
    }

    #[test]
    fn longer_retrieval_extends_shorter(ps in passages(5), query in words(4), k in 1usize..8) {
        let book = book_of(&ps, 5);
        let index = build_index(&book, Default::default()).unwrap();
        let q = tokenize(&query.join(" "));
        let short = index.retrieve(&q, k, QueryOptions::default()).unwrap();
        let long = index.retrieve(&q, k + 1, QueryOptions::default()).unwrap();
        prop_assert!(long.len() >= short.len());
        prop_assert_eq!(&long.entries[..short.len()], &short.entries[..]);
    }

    #[test]
    fn extra_query_term_never_lowers_relative_rank(
        ps in passages(5),
        query in words(4),
        pick in any::<prop::sample::Index>(),
        slot in any::<prop::sample::Index>(),
    ) {
        let q: Vec<String> = query.iter().map(|w| w.to_string()).collect::<HashSet<_>>().into_iter().collect();
        let i = pick.index(ps.len());
        let free: Vec<usize> = (0..5).filter(|&j| !q.iter().any(|t| t == ps[i][j])).collect();
        prop_assume!(!free.is_empty());
        let mut changed = ps.clone();
        changed[i][free[slot.index(free.len())]] = query[0];

        let before = build_index(&book_of(&ps, 5), Default::default()).unwrap().score_all(&q);
        let after = build_index(&book_of(&changed, 5), Default::default()).unwrap().score_all(&q);
        for j in (0..ps.len()).filter(|&j| j != i) {
            if before[i] >= before[j] {
                prop_assert!(after[i] >= after[j] - 1e-12, "passage {i} fell below {j}");
            }
        }
    }

    #[test]
    fn rouge_symmetric_for_equal_lengths(pair in (1usize..8).prop_flat_map(|n| {
        (prop::collection::vec(0u8..3, n), prop::collection::vec(0u8..3, n))
    })) {
        let (a, b) = pair;
        prop_assert_eq!(rouge_l(&a, &b), rouge_l(&b, &a));
    }

    #[test]
    fn rouge_in_unit_range_both_directions(a in prop::collection::vec(0u8..3, 0..8), b in prop::collection::vec(0u8..3, 0..8)) {
        for v in [rouge_l(&a, &b), rouge_l(&b, &a)] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn f1_at_least_em(a in words(5), b in words(5)) {
        prop_assert!(f1(&a, &b) >= em(&a, &b));
    }

    #[test]
    fn scores_ignore_case_and_punctuation(pred in words(5), reference in words(5), punct in "[.,!?;:]{0,3}") {
        let refs = vec![reference.join(" ")];
        let plain = score_answer(&pred.join(" "), &refs);
        let noisy = score_answer(&format!("{}{punct}", pred.join(" ").to_uppercase()), &refs);
        prop_assert_eq!(plain, noisy);
    }

    #[test]
    fn softmax_sums_to_one_and_ignores_shifts(
        scores in prop::collection::vec(-50.0f64..50.0, 1..20),
        shift in -100.0f64..100.0,
    ) {
        let p = ict_softmax(&scores).unwrap();
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        let shifted: Vec<f64> = scores.iter().map(|s| s + shift).collect();
        for (x, y) in p.iter().zip(ict_softmax(&shifted).unwrap()) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn kappa_bounded_and_one_only_for_agreement(
        labels in (2usize..4).prop_flat_map(|raters| {
            prop::collection::vec(prop::collection::vec(0usize..4, raters), 2..20)
        }),
    ) {
        let records: Vec<Annotation> = labels
            .iter()
            .enumerate()
            .flat_map(|(q, ls)| ls.iter().enumerate().map(move |(r, &t)| ann(q, r, t)))
            .collect();
        let used: HashSet<usize> = labels.iter().flatten().copied().collect();
        match fleiss_kappa(&records, AnnotationField::QuestionType) {
            Ok(k) => {
                prop_assert!(k <= 1.0 + 1e-12);
                let perfect = labels.iter().all(|ls| ls.iter().all(|&t| t == ls[0]));
                prop_assert_eq!((k - 1.0).abs() < 1e-12, perfect && used.len() >= 2);
            }
            Err(_) => prop_assert_eq!(used.len(), 1),
        }
    }

    #[test]
    fn decomposition_ratios_and_order(types in prop::collection::vec((0usize..4, 0.0f64..1.0), 1..30)) {
        let records: Vec<Annotation> = types.iter().enumerate().map(|(q, &(t, _))| ann(q, 0, t)).collect();
        let scores: Vec<ExampleScores> = types
            .iter()
            .enumerate()
            .map(|(q, &(_, r))| ExampleScores {
                question_id: format!("q{q}"),
                rouge_l: r,
                bleu1: r,
                bleu4: r,
                em: 0.0,
                f1: r,
                missing: false,
            })
            .collect();
        let d = decompose(&scores, &records, AnnotationField::QuestionType);
        prop_assert!((d.rows.iter().map(|r| r.ratio).sum::<f64>() - 100.0).abs() < 0.1);

        let rev_records: Vec<Annotation> = records.iter().rev().cloned().collect();
        let rev_scores: Vec<ExampleScores> = scores.iter().rev().cloned().collect();
        let r = decompose(&rev_scores, &rev_records, AnnotationField::QuestionType);
        prop_assert_eq!(d.rows.len(), r.rows.len());
        for (x, y) in d.rows.iter().zip(&r.rows) {
            prop_assert_eq!(&x.label, &y.label);
            prop_assert_eq!(x.count, y.count);
            prop_assert!((x.means.rouge_l - y.means.rouge_l).abs() < 1e-12);
        }
    }

    #[test]
    fn event_subset_grows_with_lexicon(
        answers in prop::collection::vec(words(4), 1..12),
        small in prop::collection::vec(prop::sample::select(&VOCAB[..]), 1..3),
        extra in prop::collection::vec(prop::sample::select(&VOCAB[..]), 0..4),
    ) {
        let qa: Vec<QaPair> = answers
            .iter()
            .enumerate()
            .map(|(i, a)| QaPair::new(format!("q{i}"), BookId::from("b"), Split::Test, "what?", &[&a.join(" ")]))
            .collect();
        let lex_small = VerbLexicon::from_words(small.iter().copied());
        let lex_big = VerbLexicon::from_words(small.iter().chain(&extra).copied());
        let a: HashSet<&str> = event_answer_subset(&qa, &lex_small).unwrap().iter().map(|q| q.id.as_str()).collect();
        let b: HashSet<&str> = event_answer_subset(&qa, &lex_big).unwrap().iter().map(|q| q.id.as_str()).collect();
        prop_assert!(a.is_subset(&b));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn e_step_depends_only_on_score_order(seed in any::<u64>(), k in 1usize..4) {
        let corpus = planted_corpus(&PlantedConfig { books: 2, heldout_books: 0, seed, ..Default::default() }).unwrap();
        let (train, _) = corpus.em_questions(8).unwrap();
        for q in &train {
            prop_assert_eq!(e_step(&LexicalScorer, q, k).unwrap(), e_step(&Transformed, q, k).unwrap());
        }
    }
}

#[test]
fn coverage_never_drops_with_k() {
    let ds = common::mini();
    let indexes = build_indexes(&ds.books, Default::default()).unwrap();
    for qa in &ds.qa_pairs {
        let book = ds.book(&qa.book_id).unwrap();
        let ranked = indexes[&qa.book_id]
            .retrieve(&qa.question, 32, QueryOptions::default())
            .unwrap();
        let answers = qa.answer_terms();
        let mut prev = (0.0, 0.0);
        for k in 1..=ranked.len() {
            let c = coverage(book, &ranked, &answers, k).unwrap();
            assert!(c.0 >= prev.0 && c.1 >= prev.1, "{} at k={k}", qa.id);
            prev = c;
        }
    }
}

#[test]
fn reference_answers_score_perfectly() {
    let ds = common::mini();
    let preds: Vec<Prediction> = ds
        .qa_pairs
        .iter()
        .map(|q| Prediction {
            question_id: q.id.clone(),
            answer: q.answer_texts[0].clone(),
        })
        .collect();
    let report = evaluate_predictions(&preds, &ds.qa_pairs).unwrap();
    for e in &report.examples {
        assert_eq!((e.rouge_l, e.em, e.f1), (1.0, 1.0, 1.0), "{}", e.question_id);
        assert!((e.bleu1 - 1.0).abs() < 1e-12);
    }
}
