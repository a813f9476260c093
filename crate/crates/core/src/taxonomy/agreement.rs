use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::{Annotation, AnnotationField};
use crate::error::{Error, Result};
use crate::metrics::{ExampleScores, MetricMeans, MetricReport};

/// Labels per question in first-appearance order.
fn by_question(records: &[Annotation], field: AnnotationField) -> Vec<(&str, Vec<&'static str>)> {
    let mut order: Vec<&str> = Vec::new();
    let mut labels: HashMap<&str, Vec<&'static str>> = HashMap::new();
    for r in records {
        let e = labels.entry(r.question_id.as_str()).or_insert_with(|| {
            order.push(r.question_id.as_str());
            Vec::new()
        });
        e.push(field.label(r));
    }
    order
        .into_iter()
        .map(|q| {
            let l = labels.remove(q).unwrap_or_default();
            (q, l)
        })
        .collect()
}

/// Percentage of multiply-annotated questions whose annotators all agree.
pub fn simple_agreement(records: &[Annotation], field: AnnotationField) -> Result<f64> {
    let multi: Vec<_> = by_question(records, field)
        .into_iter()
        .filter(|(_, l)| l.len() >= 2)
        .collect();
    if multi.is_empty() {
        return Err(Error::Undefined("no question has two or more annotators".into()));
    }
    let agree = multi.iter().filter(|(_, l)| l.iter().all(|x| *x == l[0])).count();
    Ok(100.0 * agree as f64 / multi.len() as f64)
}

/// Fleiss' kappa over the questions with at least two annotators. Every such
/// question must have the same number of annotators.
pub fn fleiss_kappa(records: &[Annotation], field: AnnotationField) -> Result<f64> {
    let items: Vec<Vec<&str>> = by_question(records, field)
        .into_iter()
        .map(|(_, l)| l)
        .filter(|l| l.len() >= 2)
        .collect();
    if items.is_empty() {
        return Err(Error::Undefined("no question has two or more annotators".into()));
    }
    let n = items[0].len();
    if let Some(bad) = items.iter().find(|l| l.len() != n) {
        return Err(Error::Undefined(format!(
            "kappa needs a fixed number of raters per item, found both {n} and {}",
            bad.len()
        )));
    }
    let nf = n as f64;
    let mut category_totals: BTreeMap<&str, usize> = BTreeMap::new();
    let mut p_bar = 0.0;
    for labels in &items {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for l in labels {
            *counts.entry(l).or_insert(0) += 1;
            *category_totals.entry(l).or_insert(0) += 1;
        }
        let sq: usize = counts.values().map(|c| c * c).sum();
        p_bar += (sq - n) as f64 / (nf * (nf - 1.0));
    }
    p_bar /= items.len() as f64;
    let total = (items.len() * n) as f64;
    let p_e: f64 = category_totals.values().map(|&c| (c as f64 / total).powi(2)).sum();
    if (1.0 - p_e).abs() < 1e-15 {
        return Err(Error::Undefined(
            "every rating falls in one category, so chance agreement is 1 and kappa is 0/0".into(),
        ));
    }
    Ok((p_bar - p_e) / (1.0 - p_e))
}

/// Most frequent label per question; ties go to the label recorded first.
pub fn majority_labels(records: &[Annotation], field: AnnotationField) -> HashMap<String, &'static str> {
    by_question(records, field)
        .into_iter()
        .map(|(q, labels)| {
            let mut counts: Vec<(&str, usize)> = Vec::new();
            for l in &labels {
                match counts.iter_mut().find(|(x, _)| x == l) {
                    Some(c) => c.1 += 1,
                    None => counts.push((l, 1)),
                }
            }
            let max = counts.iter().map(|c| c.1).max().unwrap_or(0);
            let label = labels
                .iter()
                .find(|l| counts.iter().any(|(x, c)| x == *l && *c == max))
                .copied()
                .expect("question has at least one label");
            (q.to_string(), label)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionRow {
    pub label: String,
    pub count: usize,
    /// Share of annotated questions, in percent.
    pub ratio: f64,
    pub means: MetricMeans,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub field: AnnotationField,
    /// Labels in schema order; labels with no questions are omitted.
    pub rows: Vec<DecompositionRow>,
    /// Scored questions without any annotation.
    pub unannotated: usize,
}

/// Group per-question scores by (majority) annotated label.
pub fn decompose(scores: &[ExampleScores], records: &[Annotation], field: AnnotationField) -> Decomposition {
    let labels = majority_labels(records, field);
    let mut groups: HashMap<&str, Vec<ExampleScores>> = HashMap::new();
    let mut unannotated = 0;
    for s in scores {
        match labels.get(&s.question_id) {
            Some(l) => groups.entry(l).or_default().push(s.clone()),
            None => unannotated += 1,
        }
    }
    let annotated: usize = groups.values().map(Vec::len).sum();
    let rows = field
        .labels()
        .into_iter()
        .filter_map(|l| {
            let g = groups.remove(l)?;
            let count = g.len();
            Some(DecompositionRow {
                label: l.to_string(),
                count,
                ratio: 100.0 * count as f64 / annotated as f64,
                means: MetricReport::from_examples(g).means,
            })
        })
        .collect();
    Decomposition {
        field,
        rows,
        unannotated,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::taxonomy::{QuestionType, SuSubtype};

    fn ann(q: &str, rater: &str, t: QuestionType) -> Annotation {
        Annotation {
            question_id: q.into(),
            annotator_id: rater.into(),
            question_type: t,
            su_class: SuSubtype::Entity.class(),
            su_subtype: SuSubtype::Entity,
        }
    }

    use QuestionType::{CausalRelation as A, EventTrigger as B, NestedRelation as C};
    const F: AnnotationField = AnnotationField::QuestionType;

    #[test]
    fn kappa_hand_case() {
        let r = vec![ann("1", "x", A), ann("1", "y", A), ann("2", "x", A), ann("2", "y", B)];
        assert_eq!(fleiss_kappa(&r, F).unwrap(), -1.0 / 3.0);
        assert_eq!(simple_agreement(&r, F).unwrap(), 50.0);
    }

    #[test]
    fn kappa_perfect_and_degenerate() {
        let r = vec![ann("1", "x", A), ann("1", "y", A), ann("2", "x", B), ann("2", "y", B)];
        assert_eq!(fleiss_kappa(&r, F).unwrap(), 1.0);
        assert_eq!(simple_agreement(&r, F).unwrap(), 100.0);
        let one = vec![ann("1", "x", A), ann("1", "y", A)];
        assert!(matches!(fleiss_kappa(&one, F), Err(Error::Undefined(_))));
        let ragged = vec![
            ann("1", "x", A),
            ann("1", "y", A),
            ann("2", "x", B),
            ann("2", "y", B),
            ann("2", "z", B),
        ];
        assert!(fleiss_kappa(&ragged, F).is_err());
        assert!(simple_agreement(&[ann("1", "x", A)], F).is_err());
    }

    #[test]
    fn majority_tie_takes_first() {
        let r = vec![
            ann("1", "x", B),
            ann("1", "y", A),
            ann("2", "x", C),
            ann("2", "y", A),
            ann("2", "z", A),
        ];
        let m = majority_labels(&r, F);
        assert_eq!(m["1"], B.as_str());
        assert_eq!(m["2"], A.as_str());
    }

    #[test]
    fn decomposition_means() {
        let s = |q: &str, v: f64| ExampleScores {
            question_id: q.into(),
            rouge_l: v,
            bleu1: v,
            bleu4: v,
            em: v,
            f1: v,
            missing: false,
        };
        let r = vec![ann("1", "x", A), ann("2", "x", B), ann("3", "x", A)];
        let d = decompose(&[s("1", 1.0), s("2", 0.5), s("3", 0.0), s("4", 0.3)], &r, F);
        assert_eq!(d.unannotated, 1);
        assert_eq!(d.rows.len(), 2);
        // schema order: event_trigger precedes causal_relation
        assert_eq!(d.rows[0].label, "event_trigger");
        assert_eq!(d.rows[0].means.em, 0.5);
        assert_eq!(d.rows[1].label, "causal_relation");
        assert_eq!(d.rows[1].means.rouge_l, 0.5);
        assert!((d.rows[1].ratio - 200.0 / 3.0).abs() < 1e-9);
        let total: f64 = d.rows.iter().map(|r| r.ratio).sum();
        assert!((total - 100.0).abs() < 1e-9);
    }
}
