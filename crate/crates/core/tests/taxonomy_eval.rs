mod common;

use std::io::Write;

use bookqa_core::corpus::{BookId, QaPair, Split};
use bookqa_core::evalharness::{coverage, evaluate_predictions, load_predictions, Prediction};
use bookqa_core::index::{build_indexes, QueryOptions};
use bookqa_core::metrics::{bleu, em, f1, normalize_answer, rouge_l, ExampleScores};
use bookqa_core::taxonomy::{
    decompose, load_annotations, simple_agreement, Annotation, AnnotationField, QuestionType, SuSubtype,
};

const TYPES: [&str; 4] = [
    "causal_relation",
    "event_trigger",
    "attribute_of_concept",
    "event_argument_concept",
];

#[test]
fn double_annotated_rows_all_load() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ann.csv");
    let mut f = std::fs::File::create(&path).unwrap();
    writeln!(f, "question_id,annotator_id,question_type,su_class,su_subtype").unwrap();
    for q in 0..150 {
        for a in ["ann1", "ann2"] {
            writeln!(f, "q{q},{a},{},concept,entity", TYPES[q % 4]).unwrap();
        }
    }
    drop(f);
    let set = load_annotations(&path).unwrap();
    assert_eq!(set.records.len(), 300);
    assert!(set.row_errors.is_empty());
}

fn ann(q: usize, rater: &str, t: QuestionType) -> Annotation {
    Annotation {
        question_id: format!("q{q}"),
        annotator_id: rater.into(),
        question_type: t,
        su_class: SuSubtype::Entity.class(),
        su_subtype: SuSubtype::Entity,
    }
}

#[test]
fn constructed_agreement_rate() {
    // 132 of 150 questions agree: 88.0%
    let mut records = Vec::new();
    for q in 0..150 {
        records.push(ann(q, "a", QuestionType::CausalRelation));
        let second = if q < 132 {
            QuestionType::CausalRelation
        } else {
            QuestionType::EventTrigger
        };
        records.push(ann(q, "b", second));
    }
    let v = simple_agreement(&records, AnnotationField::QuestionType).unwrap();
    assert!((v - 88.0).abs() < 1e-9);
}

#[test]
fn decomposition_means_are_hand_averages() {
    let scores: Vec<ExampleScores> = [("q0", 0.2), ("q1", 0.6), ("q2", 0.9)]
        .iter()
        .map(|&(id, r)| ExampleScores {
            question_id: id.into(),
            rouge_l: r,
            bleu1: r / 2.0,
            bleu4: 0.0,
            em: 0.0,
            f1: r,
            missing: false,
        })
        .collect();
    let records = vec![
        ann(0, "a", QuestionType::CausalRelation),
        ann(1, "a", QuestionType::CausalRelation),
        ann(2, "a", QuestionType::EventTrigger),
    ];
    let d = decompose(&scores, &records, AnnotationField::QuestionType);
    let causal = d.rows.iter().find(|r| r.label == "causal_relation").unwrap();
    assert_eq!(causal.count, 2);
    assert!((causal.means.rouge_l - 0.4).abs() < 1e-12);
    assert!((causal.means.bleu1 - 0.2).abs() < 1e-12);
    assert!((causal.ratio - 200.0 / 3.0).abs() < 1e-9);
    let trigger = d.rows.iter().find(|r| r.label == "event_trigger").unwrap();
    assert!((trigger.means.f1 - 0.9).abs() < 1e-12);
}

#[test]
fn fixture_predictions_match_metric_oracle() {
    let ds = common::mini();
    let preds = load_predictions(&common::fixtures().join("mini-corpus/predictions.jsonl")).unwrap();
    let report = evaluate_predictions(&preds, &ds.qa_pairs).unwrap();
    assert_eq!(report.count, 12);
    assert_eq!(report.missing, 1);
    for (qa, e) in ds.qa_pairs.iter().zip(&report.examples) {
        assert_eq!(qa.id, e.question_id);
        let Some(p) = preds.iter().find(|p| p.question_id == qa.id) else {
            assert!(e.missing);
            continue;
        };
        let cand = normalize_answer(&p.answer);
        let refs: Vec<Vec<String>> = qa.answer_texts.iter().map(|r| normalize_answer(r)).collect();
        let best = |m: &dyn Fn(&[String], &[String]) -> f64| refs.iter().map(|r| m(&cand, r)).fold(0.0, f64::max);
        assert!((e.rouge_l - best(&|a, b| rouge_l(a, b))).abs() < 1e-12);
        assert!((e.em - best(&|a, b| em(a, b))).abs() < 1e-12);
        assert!((e.f1 - best(&|a, b| f1(a, b))).abs() < 1e-12);
        assert!((e.bleu1 - bleu(&cand, &refs, 1)).abs() < 1e-12);
    }
    let mean = report.examples.iter().map(|e| e.rouge_l).sum::<f64>() / 12.0;
    assert!((report.means.rouge_l - mean).abs() < 1e-12);
}

#[test]
fn unknown_and_duplicate_predictions_fail() {
    let qa = vec![QaPair::new("q0", BookId::from("b"), Split::Test, "who?", &["Ann"])];
    let p = |id: &str| Prediction {
        question_id: id.into(),
        answer: "Ann".into(),
    };
    assert!(evaluate_predictions(&[p("q0"), p("q0")], &qa).is_err());
    assert!(evaluate_predictions(&[p("zz")], &qa).is_err());
}

#[test]
fn partial_overlap_coverage_is_best_window() {
    let ds = common::mini();
    let indexes = build_indexes(&ds.books, Default::default()).unwrap();
    for qa in &ds.qa_pairs {
        let book = ds.book(&qa.book_id).unwrap();
        let ranked = indexes[&qa.book_id]
            .retrieve(&qa.question, 3, QueryOptions::default())
            .unwrap();
        let answers = qa.answer_terms();
        let (_, r) = coverage(book, &ranked, &answers, 3).unwrap();
        let mut best: f64 = 0.0;
        for p in ranked.passages() {
            let terms = book.passage_terms(p);
            for a in answers.iter().filter(|a| a.len() <= terms.len()) {
                for s in 0..=terms.len() - a.len() {
                    best = best.max(rouge_l(&terms[s..s + a.len()], a));
                }
            }
        }
        assert!((r - best).abs() < 1e-12, "{}", qa.id);
    }
}
