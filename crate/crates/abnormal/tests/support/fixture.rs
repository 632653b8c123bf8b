//! Seeded SQuAD v1.1 fixtures.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

const WORDS: &[&str] = &[
    "the", "a", "river", "city", "empire", "of", "in", "was", "built", "by", "and", "king", "war", "north",
    "south", "trade", "church", "school", "music", "law", "(1850)", "\"quoted\"", "Paris,", "London.", "is",
    "were", "during", "after", "before", "century", "its", "population", "grew", "rapidly;", "students",
];

/// `paragraphs` contexts spread over a few titles, each asked `qas` questions.
pub fn squad(paragraphs: usize, qas: usize, seed: u64) -> Value {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let titles = ["Alpha", "Beta", "Gamma", "Delta", "Epsilon"];
    let mut data: Vec<Value> = titles.iter().map(|t| json!({"title": t, "paragraphs": []})).collect();
    for p in 0..paragraphs {
        let len = rng.random_range(8..=90);
        let context: Vec<&str> = (0..len).map(|_| *WORDS.choose(&mut rng).unwrap()).collect();
        let context = context.join(" ");
        let qa: Vec<Value> = (0..qas)
            .map(|q| {
                json!({
                    "id": format!("q{p}-{q}"),
                    "question": format!("question {q} about paragraph {p}?"),
                    "answers": [{"answer_start": 0, "text": context.split(' ').next().unwrap()}],
                })
            })
            .collect();
        let t = p % titles.len();
        data[t]["paragraphs"]
            .as_array_mut()
            .unwrap()
            .push(json!({"context": context, "qas": qa}));
    }
    json!({"version": "1.1", "data": data})
}
