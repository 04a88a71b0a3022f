//! Corpus-scoring throughput: data-parallel path versus the sequential
//! fallback, on a synthetic corpus of realistic utterance lengths.

use std::collections::BTreeMap;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use asreval::corpus::{
    AcousticEnvironment, Age, Formality, Gender, HypothesisSet, UtteranceRecord,
};
use asreval::metrics::{score_corpus, score_corpus_sequential};
use asreval::textnorm::NormalizationConfig;

const VOCABULARY: [&str; 12] = [
    "یک", "دو", "سه", "چهار", "پنج", "کتاب", "درخت", "خانه", "می\u{200C}خوام", "بزرگ", "سلام",
    "روز",
];

fn synthetic_corpus(size: usize) -> (Vec<UtteranceRecord>, HypothesisSet) {
    let mut state = 0x243F_6A88_85A3_08D3u64;
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        state
    };
    let mut records = Vec::with_capacity(size);
    let mut entries = BTreeMap::new();
    for i in 0..size {
        let words = 4 + (next() % 9) as usize;
        let ref_text: Vec<&str> = (0..words)
            .map(|_| VOCABULARY[(next() % 12) as usize])
            .collect();
        let hyp_text: Vec<&str> = ref_text
            .iter()
            .map(|w| {
                if next() % 4 == 0 {
                    VOCABULARY[(next() % 12) as usize]
                } else {
                    w
                }
            })
            .collect();
        let id = format!("u{i:06}");
        records.push(UtteranceRecord {
            id: id.clone(),
            text: ref_text.join(" "),
            duration_s: Some(5.0),
            num_speakers: 1,
            gender: Gender::Male,
            age: Age::Adult,
            accent: "Standard".to_string(),
            formality: Formality::Formal,
            semantic_content: "social".to_string(),
            data_source: "news".to_string(),
            acoustic_environment: AcousticEnvironment::Clean,
            spontaneous: false,
            speaker_ids: None,
        });
        entries.insert(id, hyp_text.join(" "));
    }
    (
        records,
        HypothesisSet {
            system_name: "bench".to_string(),
            entries,
        },
    )
}

fn bench_scoring(c: &mut Criterion) {
    let config = NormalizationConfig::default();
    let mut group = c.benchmark_group("score_corpus");
    for size in [1_000usize, 10_000] {
        let (records, hypotheses) = synthetic_corpus(size);
        group.bench_with_input(BenchmarkId::new("sequential", size), &size, |b, _| {
            b.iter(|| score_corpus_sequential(&records, &hypotheses, &config).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("parallel", size), &size, |b, _| {
            b.iter(|| score_corpus(&records, &hypotheses, &config).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_scoring);
criterion_main!(benches);
