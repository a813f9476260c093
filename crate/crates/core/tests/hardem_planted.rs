use bookqa_core::hardem::{
    hard_em, initial_labels, planted_corpus, precision_at_1, EmConfig, LexicalScorer, LinearRanker, PlantedConfig,
};

#[test]
fn planted_harness() {
    let corpus = planted_corpus(&PlantedConfig::default()).unwrap();
    let cfg = EmConfig {
        iterations: 3,
        ..Default::default()
    };
    let (train, heldout) = corpus.em_questions(cfg.pool_k).unwrap();
    assert_eq!(train.len(), 120);
    assert_eq!(heldout.len(), 30);
    let bm25 = precision_at_1(&LinearRanker::bm25_only(), &heldout).unwrap();
    let state = hard_em(&LexicalScorer, &train, initial_labels(&train, cfg.k), &heldout, &cfg).unwrap();
    for h in &state.history {
        eprintln!("{h:?}");
    }
    eprintln!(
        "bm25 p@1 {bm25} converged {:?} weights {:?}",
        state.converged_at, state.ranker.weights
    );
    let h = &state.history;
    assert!(h[1].label_recall.unwrap() >= 0.9);
    assert!(h[1].heldout_precision_at_1.unwrap() > h[0].heldout_precision_at_1.unwrap());
    assert!(state.converged_at.is_some_and(|t| t <= 3));
}

#[test]
fn e_step_top_k_matches_full_sort() {
    use bookqa_core::hardem::{e_step, ReaderScorer};
    let corpus = planted_corpus(&PlantedConfig {
        books: 6,
        heldout_books: 1,
        ..Default::default()
    })
    .unwrap();
    let (train, _) = corpus.em_questions(8).unwrap();
    let reader = LexicalScorer;
    for q in &train {
        let picked = e_step(&reader, q, 3).unwrap();
        let mut scored: Vec<(usize, f64)> = q
            .candidates
            .iter()
            .enumerate()
            .map(|(rank, c)| {
                let s = q
                    .answers
                    .iter()
                    .map(|a| reader.score(a, &c.text))
                    .fold(f64::NEG_INFINITY, f64::max);
                (rank, s)
            })
            .collect();
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let want: Vec<usize> = scored.iter().take(3).map(|(r, _)| q.candidates[*r].passage).collect();
        assert_eq!(picked, want, "{}", q.id);
        // the trait batch path agrees with direct scoring
        let req = bookqa_core::hardem::ScoreRequest {
            id: "x".into(),
            question: q.question.clone(),
            answer: q.answers[0].clone(),
            passage: q.candidates[0].text.clone(),
        };
        assert_eq!(
            reader.score_batch(&[req]).unwrap()[0],
            reader.score(&q.answers[0], &q.candidates[0].text)
        );
    }
}
