use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, BenchmarkId, Criterion, Throughput};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use factsum_core::contrastor::{generate_negatives, nt_xent, RepresentationVector};
use factsum_core::corpus::{write_record, CorpusRecord};
use factsum_core::gsg::{make_pseudo_example, SelectionConfig};
use factsum_core::pipeline::{run, NegativesConfig, PipelineConfig, Stage};
use factsum_core::rouge::{rouge_l, rouge_n};
use factsum_core::scorer::EntityContainmentScorer;
use factsum_core::synth::{synth_documents, synth_examples, SynthConfig};
use factsum_core::{correct, CorrectionStrategy, NegativeMode};

fn rouge(c: &mut Criterion) {
    let docs = synth_documents(2, 1, &SynthConfig { min_sentences: 6, ..SynthConfig::default() });
    let (a, b) = (&docs[0].text, &docs[1].text);
    let mut group = c.benchmark_group("rouge");
    group.throughput(Throughput::Bytes((a.len() + b.len()) as u64));
    group.bench_function("r1", |bch| bch.iter(|| rouge_n(black_box(a), black_box(b), 1)));
    group.bench_function("r2", |bch| bch.iter(|| rouge_n(black_box(a), black_box(b), 2)));
    group.bench_function("rl", |bch| bch.iter(|| rouge_l(black_box(a), black_box(b))));
    group.finish();
}

fn selection(c: &mut Criterion) {
    let docs = synth_documents(64, 2, &SynthConfig::default());
    let config = SelectionConfig::default();
    c.bench_function("gsg/select_64_docs", |b| {
        b.iter(|| {
            for doc in &docs {
                black_box(make_pseudo_example(doc, &config, &EntityContainmentScorer, None).unwrap());
            }
        })
    });
}

fn corrector(c: &mut Criterion) {
    let examples = synth_examples(64, 3, &SynthConfig::default());
    let mut group = c.benchmark_group("corrector");
    for strategy in [CorrectionStrategy::Replace, CorrectionStrategy::Remove, CorrectionStrategy::Combined] {
        group.bench_function(BenchmarkId::from_parameter(format!("{strategy:?}")), |b| {
            b.iter(|| {
                for ex in &examples {
                    black_box(correct(ex, strategy).unwrap());
                }
            })
        });
    }
    group.finish();
}

fn negatives(c: &mut Criterion) {
    let examples = synth_examples(64, 4, &SynthConfig::default());
    c.bench_function("negatives/intrinsic_64", |b| {
        b.iter(|| {
            for ex in &examples {
                black_box(generate_negatives(ex, NegativeMode::Intrinsic, 5, 7, None).ok());
            }
        })
    });
}

fn loss(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut vector = |d: usize| RepresentationVector((0..d).map(|_| rng.random_range(-1.0..1.0)).collect());
    let mut group = c.benchmark_group("nt_xent");
    for d in [128, 768] {
        let anchor = vector(d);
        let positive = vector(d);
        let negs: Vec<_> = (0..5).map(|_| vector(d)).collect();
        group.bench_function(BenchmarkId::new("m5", d), |b| {
            b.iter(|| nt_xent(black_box(&anchor), black_box(&positive), black_box(&negs), 0.05).unwrap())
        });
    }
    group.finish();
}

fn pipeline(c: &mut Criterion) {
    let mut input = Vec::new();
    for ex in synth_examples(500, 6, &SynthConfig::default()) {
        write_record(&mut input, &CorpusRecord::Example(ex)).unwrap();
    }
    let mut group = c.benchmark_group("pipeline/correct_connect_negatives_500");
    group.sample_size(10);
    for workers in [1, 4] {
        let config = PipelineConfig {
            stages: vec![Stage::Correct, Stage::Connect, Stage::Negatives],
            workers,
            negatives: NegativesConfig {
                seed: Some(1),
                ..NegativesConfig::default()
            },
            ..PipelineConfig::default()
        };
        group.bench_function(BenchmarkId::from_parameter(workers), |b| {
            b.iter_batched(
                Vec::new,
                |mut out| run(&config, input.as_slice(), &mut out, None).unwrap(),
                BatchSize::SmallInput,
            )
        });
    }
    group.finish();
}

criterion_group!(benches, rouge, selection, corrector, negatives, loss, pipeline);
criterion_main!(benches);
