use cams_core::simil::McsOptions;
use cams_core::synth::MoleculeGenerator;
use cams_core::{canonicalize, circular_fingerprint, default_savc, learn_merges, materialize_vocabs, mcs, Encoder, MolGraph};
use criterion::{criterion_group, criterion_main, BatchSize, Criterion, Throughput};

fn corpus(seed: u64, n: usize, max_atoms: usize) -> Vec<MolGraph> {
    let mut gen = MoleculeGenerator::new(seed);
    (0..n).map(|_| gen.molecule(max_atoms)).collect()
}

fn bench_canonicalize(c: &mut Criterion) {
    let mols = corpus(1, 200, 60);
    let mut group = c.benchmark_group("canonicalize");
    group.throughput(Throughput::Elements(mols.len() as u64));
    group.bench_function("200 molecules", |b| {
        b.iter(|| mols.iter().map(|g| canonicalize(g).unwrap().1.len()).sum::<usize>())
    });
    group.finish();
}

fn bench_learn(c: &mut Criterion) {
    let mols = corpus(2, 300, 40);
    c.bench_function("learn_merges 300 molecules k=200", |b| {
        b.iter_batched(|| mols.clone(), |m| learn_merges(&m, 200, 2), BatchSize::LargeInput)
    });
}

fn bench_encode(c: &mut Criterion) {
    let training = corpus(3, 1000, 60);
    let merges = learn_merges(&training, 685, 1);
    let vocabs = materialize_vocabs(&training, &merges, &[0, 62, 210, merges.k_max], &default_savc(), 1).unwrap();
    let enc = Encoder::new(&vocabs).unwrap();
    let mols = corpus(4, 200, 60);
    let mut group = c.benchmark_group("encode");
    group.throughput(Throughput::Elements(mols.len() as u64));
    group.bench_function("4 scales, 200 molecules", |b| {
        b.iter(|| mols.iter().map(|g| enc.encode(g).unwrap().views.len()).sum::<usize>())
    });
    group.bench_function("explain, 200 molecules", |b| {
        b.iter(|| mols.iter().map(|g| enc.explain(g).unwrap().token_ids.len()).sum::<usize>())
    });
    group.finish();
}

fn bench_similarity(c: &mut Criterion) {
    let mols = corpus(5, 40, 30);
    c.bench_function("fingerprint 40 molecules", |b| {
        b.iter(|| mols.iter().map(|g| circular_fingerprint(g, 2, 2048).unwrap().count_ones()).sum::<u32>())
    });
    let opts = McsOptions::default();
    c.bench_function("mcs 20 pairs", |b| {
        b.iter(|| mols.chunks(2).filter_map(|p| mcs(&p[0], &p[1], &opts)).count())
    });
}

criterion_group!(benches, bench_canonicalize, bench_learn, bench_encode, bench_similarity);
criterion_main!(benches);
