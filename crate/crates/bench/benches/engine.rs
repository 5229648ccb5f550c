use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use miniform_bench::{multi_angle_program, term_stream, tribonacci_program};
use miniform_core::{compile, execute_program, sort_merge, spill_sort, Settings};

fn sorting(c: &mut Criterion) {
    let stream = term_stream(1, 20_000, 12);
    c.bench_function("sort_merge 20k", |b| {
        b.iter_batched(|| stream.clone(), |s| black_box(sort_merge(s)), BatchSize::LargeInput)
    });
    let dir = tempfile::tempdir().unwrap();
    let settings = Settings {
        temp_dir: dir.path().to_path_buf(),
        small_size: 64 * 1024,
        ..Settings::default()
    };
    c.bench_function("spill_sort 20k / 64 KiB runs", |b| {
        b.iter_batched(
            || stream.clone(),
            |s| black_box(spill_sort(s, &settings).unwrap()),
            BatchSize::LargeInput,
        )
    });
}

fn programs(c: &mut Criterion) {
    let settings = Settings::default();
    for (name, src) in [
        ("tribonacci 100", tribonacci_program(100)),
        ("multi-angle sin(10,x)", multi_angle_program(10)),
        ("multi-angle sin(30,x)", multi_angle_program(30)),
    ] {
        c.bench_function(name, |b| {
            b.iter(|| {
                let program = compile("bench.frm", None, &src, &settings).unwrap();
                let mut sink = Vec::new();
                black_box(execute_program(&program, &mut sink, &settings).unwrap());
            })
        });
    }
}

criterion_group!(benches, sorting, programs);
criterion_main!(benches);
