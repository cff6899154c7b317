use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use headqa_core::corpus::load_corpus_file;
use headqa_core::decompose::{decomposability_rate, NoLexicon};
use headqa_core::dictionary::{build_dictionary, growth_curve};
use headqa_core::stats::{bootstrap, Score, ScoreMatrix, ScoreRecord, TitleKind};
use headqa_core::{Document, Execution};
use headqa_testkit::{fixtures, gen};

fn modes() -> Vec<(&'static str, Execution)> {
    let mut v = vec![("sequential", Execution::Sequential)];
    #[cfg(feature = "parallel")]
    v.push(("parallel", Execution::Parallel));
    v
}

fn ten_by_hundred() -> ScoreMatrix {
    let mut rng = gen::rng(1);
    let rows = gen::score_rows(&mut rng, 10, 100, 0.0);
    let mut records = Vec::new();
    for (e, row) in rows.iter().enumerate() {
        for (d, &(r, g)) in row.iter().enumerate() {
            for (kind, s) in [(TitleKind::Real, r), (TitleKind::Generated, g)] {
                records.push(ScoreRecord {
                    evaluator_id: format!("e{e}"),
                    doc_id: format!("d{d}"),
                    title_kind: kind,
                    score: Score::new(s.unwrap().into()).unwrap(),
                });
            }
        }
    }
    ScoreMatrix::from_records(&records).unwrap()
}

// The fixture corpus repeated with fresh ids so there is enough work to split.
fn large_corpus() -> Vec<Document> {
    let base = load_corpus_file(fixtures::path("corpus.jsonl"))
        .unwrap()
        .documents;
    (0..20)
        .flat_map(|i| {
            base.iter().map(move |d| Document {
                doc_id: format!("{}-{i}", d.doc_id),
                ..d.clone()
            })
        })
        .collect()
}

fn bench_bootstrap(c: &mut Criterion) {
    let m = ten_by_hundred();
    let mut group = c.benchmark_group("bootstrap_10x100");
    group.sample_size(10);
    for (name, exec) in modes() {
        group.bench_with_input(BenchmarkId::new(name, 20_000), &exec, |b, &exec| {
            b.iter(|| bootstrap(&m, 20_000, 7, exec).unwrap())
        });
    }
    group.finish();
}

fn bench_corpus(c: &mut Criterion) {
    let docs = large_corpus();
    let dict = build_dictionary(&docs, 100, 100, Execution::default()).unwrap();
    let mut group = c.benchmark_group("corpus");
    group.sample_size(10);
    for (name, exec) in modes() {
        group.bench_with_input(
            BenchmarkId::new("decomposability", name),
            &exec,
            |b, &exec| b.iter(|| decomposability_rate(&docs, &NoLexicon, exec).unwrap()),
        );
        group.bench_with_input(
            BenchmarkId::new("build_dictionary", name),
            &exec,
            |b, &exec| b.iter(|| build_dictionary(&docs, 100, 100, exec).unwrap()),
        );
        group.bench_with_input(BenchmarkId::new("growth_curve", name), &exec, |b, &exec| {
            b.iter(|| growth_curve(&docs, &dict, &[0, 1, 5, 10, 50], exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_bootstrap, bench_corpus);
criterion_main!(benches);
